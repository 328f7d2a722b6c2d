//! Bit-packed binary points, Hamming distance, bucket views and coordinate
//! split statistics. Everything here is a pure read over immutable data.

use crate::error::{Error, Result};
use sha2::{Digest, Sha256};

const WORD_BITS: usize = 64;

/// A fixed-length binary point stored as packed 64-bit words.
///
/// Bits beyond the logical dimension in the final word are always zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    dim: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(dim: usize) -> Self {
        BitVector {
            dim,
            words: vec![0u64; dim.div_ceil(WORD_BITS)],
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = BitVector::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Parses a string of `0`/`1` characters; leftmost character is coordinate 0.
    pub fn from_bit_str(s: &str) -> Self {
        BitVector::from_bits(&s.chars().map(|c| c == '1').collect::<Vec<_>>())
    }

    /// Builds from raw words. Fails if trailing bits beyond `dim` are nonzero.
    pub fn from_words(dim: usize, words: Vec<u64>) -> Result<Self> {
        if words.len() != dim.div_ceil(WORD_BITS) {
            return Err(Error::DimensionMismatch {
                expected: dim.div_ceil(WORD_BITS),
                actual: words.len(),
            });
        }
        let v = BitVector { dim, words };
        if v.trailing_bits_nonzero() {
            return Err(Error::InvalidConfig(
                "trailing bits beyond the dimension must be zero".into(),
            ));
        }
        Ok(v)
    }

    fn trailing_bits_nonzero(&self) -> bool {
        let rem = self.dim % WORD_BITS;
        if rem == 0 || self.words.is_empty() {
            return false;
        }
        let mask = !0u64 << rem;
        self.words[self.words.len() - 1] & mask != 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.dim);
        self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.dim);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.dim);
        self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
    }

    /// Returns a copy with the given coordinates inverted.
    pub fn with_flipped(&self, coords: &[usize]) -> Self {
        let mut out = self.clone();
        for &c in coords {
            out.flip(c);
        }
        out
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Hamming distance via XOR + popcount. Equals the per-coordinate loop oracle.
pub fn hamming_distance(a: &BitVector, b: &BitVector) -> Result<usize> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            actual: b.dim,
        });
    }
    Ok(a.words
        .iter()
        .zip(&b.words)
        .map(|(x, y)| (x ^ y).count_ones() as usize)
        .sum())
}

/// An immutable set of equal-dimension binary points with dense ids `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct HammingDataset {
    dim: usize,
    points: Vec<BitVector>,
}

impl HammingDataset {
    pub fn new(dim: usize, points: Vec<BitVector>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidConfig("dataset must contain a point".into()));
        }
        if let Some(p) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: p.dim(),
            });
        }
        Ok(HammingDataset { dim, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, id: u32) -> &BitVector {
        &self.points[id as usize]
    }

    pub fn points(&self) -> &[BitVector] {
        &self.points
    }

    /// Content hash over the canonical on-disk encoding; ties an index to the
    /// exact dataset it was built from.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update((self.len() as u64).to_le_bytes());
        hasher.update((self.dim as u64).to_le_bytes());
        for p in &self.points {
            for w in p.words() {
                hasher.update(w.to_le_bytes());
            }
        }
        hasher.finalize().into()
    }
}

/// A subset of dataset points identified by sorted, duplicate-free ids.
#[derive(Debug, Clone)]
pub struct BucketView<'a> {
    dataset: &'a HammingDataset,
    members: Vec<u32>,
}

impl<'a> BucketView<'a> {
    /// The whole dataset as one bucket.
    pub fn root(dataset: &'a HammingDataset) -> Self {
        BucketView {
            dataset,
            members: (0..dataset.len() as u32).collect(),
        }
    }

    pub fn from_members(dataset: &'a HammingDataset, members: Vec<u32>) -> Result<Self> {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        if let Some(&id) = members.iter().find(|&&id| id as usize >= dataset.len()) {
            return Err(Error::PointNotInBucket { point_id: id });
        }
        Ok(BucketView { dataset, members })
    }

    pub fn dataset(&self) -> &'a HammingDataset {
        self.dataset
    }

    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: u32) -> bool {
        self.members.binary_search(&id).is_ok()
    }

    pub fn point(&self, id: u32) -> &'a BitVector {
        self.dataset.point(id)
    }
}

/// Counts of members with bit 0 and bit 1 at coordinate `i`.
pub fn split_counts(bucket: &BucketView<'_>, i: usize) -> Result<(usize, usize)> {
    if i >= bucket.dataset.dim() {
        return Err(Error::CoordinateOutOfRange {
            coordinate: i,
            dim: bucket.dataset.dim(),
        });
    }
    let ones = bucket
        .members
        .iter()
        .filter(|&&id| bucket.dataset.point(id).get(i))
        .count();
    Ok((bucket.len() - ones, ones))
}

/// Splits a bucket by the bit at coordinate `i`, preserving id order.
pub fn partition<'a>(
    bucket: &BucketView<'a>,
    i: usize,
) -> Result<(BucketView<'a>, BucketView<'a>)> {
    if i >= bucket.dataset.dim() {
        return Err(Error::CoordinateOutOfRange {
            coordinate: i,
            dim: bucket.dataset.dim(),
        });
    }
    let (ones, zeros): (Vec<u32>, Vec<u32>) = bucket
        .members
        .iter()
        .partition(|&&id| bucket.dataset.point(id).get(i));
    Ok((
        BucketView {
            dataset: bucket.dataset,
            members: zeros,
        },
        BucketView {
            dataset: bucket.dataset,
            members: ones,
        },
    ))
}

/// The balance of coordinate `i` on the bucket: `1 - max(n0, n1) / n`.
///
/// 0 means every member shares the bit; 0.5 is an even split.
pub fn balance(bucket: &BucketView<'_>, i: usize) -> Result<f64> {
    if bucket.is_empty() {
        return Err(Error::EmptyBucket);
    }
    let (n0, n1) = split_counts(bucket, i)?;
    Ok(1.0 - n0.max(n1) as f64 / bucket.len() as f64)
}

/// The coordinates not yet hashed on along the current root-to-node path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinateMask {
    available: Vec<u32>,
}

impl CoordinateMask {
    pub fn full(dim: usize) -> Self {
        CoordinateMask {
            available: (0..dim as u32).collect(),
        }
    }

    pub fn from_coords(mut coords: Vec<u32>) -> Self {
        coords.sort_unstable();
        coords.dedup();
        CoordinateMask { available: coords }
    }

    pub fn available(&self) -> &[u32] {
        &self.available
    }

    pub fn len(&self) -> usize {
        self.available.len()
    }

    pub fn is_empty(&self) -> bool {
        self.available.is_empty()
    }

    pub fn contains(&self, coord: u32) -> bool {
        self.available.binary_search(&coord).is_ok()
    }

    /// Removes one coordinate; the per-level shrink of without-replacement hashing.
    pub fn remove(&mut self, coord: u32) {
        if let Ok(pos) = self.available.binary_search(&coord) {
            self.available.remove(pos);
        }
    }

    pub fn without(&self, coord: u32) -> Self {
        let mut m = self.clone();
        m.remove(coord);
        m
    }
}
