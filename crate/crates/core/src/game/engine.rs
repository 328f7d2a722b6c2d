//! Per-node evaluation engine for the hash/query game: coordinate split
//! counts raised to `-rho`, payoff columns, and the query player's exact
//! best response.

use crate::bits::{BucketView, CoordinateMask};
use crate::error::{Error, Result};
use crate::game::QueryPair;

/// Entry cap for the dense per-point objective table; above this the engine
/// falls back to reading packed bits directly.
const DENSE_TABLE_MAX_ENTRIES: usize = 1 << 23;

/// Precomputed state for one node's game: the masked coordinate list and the
/// two split-count powers per coordinate.
pub(crate) struct NodeGame<'a> {
    bucket: &'a BucketView<'a>,
    coords: Vec<u32>,
    pow0: Vec<f64>,
    pow1: Vec<f64>,
    radius: usize,
    /// Row-major `|bucket| x |coords|` table of objective values
    /// `|P_{i,p_i}|^{-rho}`, when small enough to materialize.
    dense: Option<Vec<f64>>,
}

pub(crate) struct BestResponseScratch {
    scores: Vec<f64>,
    order: Vec<(f64, u32)>,
    flipped: Vec<u32>,
}

impl BestResponseScratch {
    pub(crate) fn new(width: usize) -> Self {
        BestResponseScratch {
            scores: vec![0.0; width],
            order: Vec::with_capacity(width),
            flipped: Vec::new(),
        }
    }
}

impl<'a> NodeGame<'a> {
    pub(crate) fn new(
        bucket: &'a BucketView<'a>,
        mask: &CoordinateMask,
        rho: f64,
        radius: usize,
    ) -> Result<Self> {
        if bucket.is_empty() {
            return Err(Error::EmptyBucket);
        }
        let coords: Vec<u32> = mask.available().to_vec();
        let dim = bucket.dataset().dim();
        if let Some(&c) = coords.iter().find(|&&c| c as usize >= dim) {
            return Err(Error::CoordinateOutOfRange {
                coordinate: c as usize,
                dim,
            });
        }
        let m = coords.len();
        let mut ones = vec![0usize; m];
        for &id in bucket.members() {
            let p = bucket.point(id);
            for (k, &coord) in coords.iter().enumerate() {
                if p.get(coord as usize) {
                    ones[k] += 1;
                }
            }
        }
        let n = bucket.len();
        let pow = |count: usize| -> f64 {
            if count == 0 {
                0.0 // never read: a member always contributes to its own side
            } else {
                (count as f64).powf(-rho)
            }
        };
        let pow0: Vec<f64> = ones.iter().map(|&o| pow(n - o)).collect();
        let pow1: Vec<f64> = ones.iter().map(|&o| pow(o)).collect();

        let dense = if n.saturating_mul(m) <= DENSE_TABLE_MAX_ENTRIES {
            let mut table = Vec::with_capacity(n * m);
            for &id in bucket.members() {
                let p = bucket.point(id);
                for (k, &coord) in coords.iter().enumerate() {
                    table.push(if p.get(coord as usize) { pow1[k] } else { pow0[k] });
                }
            }
            Some(table)
        } else {
            None
        };

        Ok(NodeGame {
            bucket,
            coords,
            pow0,
            pow1,
            radius,
            dense,
        })
    }

    pub(crate) fn width(&self) -> usize {
        self.coords.len()
    }

    pub(crate) fn coords(&self) -> &[u32] {
        &self.coords
    }

    /// Writes the payoff column for `pair` into `out` (aligned to `coords`).
    pub(crate) fn payoff_column(&self, pair: &QueryPair, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.coords.len());
        let p = self.bucket.point(pair.point_id);
        let mut fi = 0usize;
        for (k, &coord) in self.coords.iter().enumerate() {
            while fi < pair.flipped.len() && pair.flipped[fi] < coord {
                fi += 1;
            }
            if fi < pair.flipped.len() && pair.flipped[fi] == coord {
                out[k] = 0.0;
            } else {
                out[k] = if p.get(coord as usize) {
                    self.pow1[k]
                } else {
                    self.pow0[k]
                };
            }
        }
    }

    /// The query player's exact minimization: over every bucket point and
    /// every flip set of up to `radius` available coordinates, the pair with
    /// the smallest expected payoff against `pi`. Flips the top-weighted
    /// score entries per point; ties broken toward the lowest coordinate
    /// index, then the lowest point id.
    pub(crate) fn best_response(
        &self,
        pi: &[f64],
        scratch: &mut BestResponseScratch,
    ) -> (QueryPair, f64) {
        debug_assert_eq!(pi.len(), self.coords.len());
        let m = self.coords.len();
        let flips = self.radius.min(m);
        let mut best_value = f64::INFINITY;
        let mut best_point = 0u32;
        let mut best_flipped: Vec<u32> = Vec::new();

        for (row, &id) in self.bucket.members().iter().enumerate() {
            let scores = &mut scratch.scores;
            match &self.dense {
                Some(table) => {
                    let u = &table[row * m..(row + 1) * m];
                    for k in 0..m {
                        scores[k] = pi[k] * u[k];
                    }
                }
                None => {
                    let p = self.bucket.point(id);
                    for k in 0..m {
                        let u = if p.get(self.coords[k] as usize) {
                            self.pow1[k]
                        } else {
                            self.pow0[k]
                        };
                        scores[k] = pi[k] * u;
                    }
                }
            }

            let value = if flips == 0 {
                scratch.flipped.clear();
                scores.iter().sum()
            } else {
                scratch.order.clear();
                scratch
                    .order
                    .extend(scores.iter().enumerate().map(|(k, &s)| (s, k as u32)));
                scratch.order.select_nth_unstable_by(flips - 1, |a, b| {
                    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
                });
                scratch.flipped.clear();
                scratch
                    .flipped
                    .extend(scratch.order[..flips].iter().map(|&(_, k)| k));
                scratch.flipped.sort_unstable();
                // Sum kept entries in coordinate order so the result matches
                // a plain masked sum bit-for-bit.
                let mut z = 0.0;
                let mut fi = 0usize;
                for (k, &s) in scores.iter().enumerate() {
                    if fi < scratch.flipped.len() && scratch.flipped[fi] == k as u32 {
                        fi += 1;
                    } else {
                        z += s;
                    }
                }
                z
            };

            if value < best_value {
                best_value = value;
                best_point = id;
                best_flipped.clear();
                best_flipped.extend(scratch.flipped.iter().map(|&k| self.coords[k as usize]));
            }
        }

        (
            QueryPair {
                point_id: best_point,
                flipped: best_flipped,
            },
            best_value,
        )
    }
}
