//! The per-node min-max game: a hash player choosing a distribution over
//! available coordinates against a query player choosing the worst
//! query/near-neighbor pair. The hash player runs multiplicative weights,
//! the query player plays its exact best response, and the duality gap
//! certifies how close the returned distribution is to the game value.

mod engine;

use crate::bits::{BucketView, CoordinateMask};
use crate::error::{Error, Result};
use crate::params::{default_beta, default_rounds};
use engine::{BestResponseScratch, NodeGame};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// How often the running duality gap is compared against the early-stop
/// threshold.
pub const EARLY_STOP_CHECK_INTERVAL: usize = 50;

/// Which strategy `solve_minmax` returns: the round average carries the
/// convergence guarantee; the last iterate is the aggressive variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyMode {
    #[default]
    Averaged,
    LastIterate,
}

/// Configuration for one min-max solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameConfig {
    /// Exponent in (0, 1]; payoffs are child-bucket sizes raised to `-rho`.
    pub rho: f64,
    /// Near-neighbor radius available to the query player.
    pub radius: usize,
    /// Additive approximation target; sets the default round count.
    pub epsilon: f64,
    /// Explicit round count instead of `ceil(10 ln d / eps^2)`.
    #[serde(default)]
    pub rounds_override: Option<usize>,
    /// Explicit MWU base instead of `1 - sqrt(ln d / T)`.
    #[serde(default)]
    pub beta_override: Option<f64>,
    #[serde(default)]
    pub strategy_mode: StrategyMode,
    /// Halt once the running duality gap drops to this value, checked every
    /// [`EARLY_STOP_CHECK_INTERVAL`] rounds.
    #[serde(default)]
    pub early_stop_gap: Option<f64>,
    /// Retain the full per-round transcript on the result.
    #[serde(default)]
    pub record_transcript: bool,
}

impl GameConfig {
    pub fn new(rho: f64, radius: usize, epsilon: f64) -> Self {
        GameConfig {
            rho,
            radius,
            epsilon,
            rounds_override: None,
            beta_override: None,
            strategy_mode: StrategyMode::Averaged,
            early_stop_gap: None,
            record_transcript: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "rho must be in (0, 1], got {}",
                self.rho
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if let Some(beta) = self.beta_override {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "beta must be in (0, 1), got {beta}"
                )));
            }
        }
        if self.rounds_override == Some(0) {
            return Err(Error::InvalidConfig("rounds must be at least 1".into()));
        }
        if let Some(gap) = self.early_stop_gap {
            if gap < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "early stop gap must be nonnegative, got {gap}"
                )));
            }
        }
        Ok(())
    }
}

/// A pure query-player strategy: a near neighbor in the bucket plus the
/// coordinates on which the query disagrees with it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryPair {
    pub point_id: u32,
    /// Sorted flipped coordinate indices; at most the game radius of them.
    pub flipped: Vec<u32>,
}

impl QueryPair {
    pub fn new(point_id: u32, mut flipped: Vec<u32>) -> Self {
        flipped.sort_unstable();
        flipped.dedup();
        QueryPair { point_id, flipped }
    }
}

/// A probability vector over all `d` coordinates, zero outside the node's
/// available set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HashDistribution {
    weights: Vec<f64>,
}

impl HashDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidConfig(
                "distribution weights must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "distribution must sum to 1, got {sum}"
            )));
        }
        Ok(HashDistribution { weights })
    }

    pub fn uniform_over(dim: usize, coords: &[u32]) -> Self {
        let mut weights = vec![0.0; dim];
        let w = 1.0 / coords.len() as f64;
        for &c in coords {
            weights[c as usize] = w;
        }
        HashDistribution { weights }
    }

    pub fn point_mass(dim: usize, coord: u32) -> Self {
        let mut weights = vec![0.0; dim];
        weights[coord as usize] = 1.0;
        HashDistribution { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Total-variation distance: half the L1 difference.
    pub fn tv_distance(&self, other: &HashDistribution) -> f64 {
        0.5 * self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    /// Draws a coordinate by walking the CDF in index order; ties and float
    /// residue resolve to the last positively weighted coordinate.
    pub fn draw(&self, rng: &mut impl rand::Rng) -> u32 {
        let u: f64 = rng.gen();
        let mut cum = 0.0;
        let mut last_positive = 0u32;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > 0.0 {
                last_positive = i as u32;
                cum += w;
                if u < cum {
                    return i as u32;
                }
            }
        }
        last_positive
    }
}

/// Per-round record: the best response, its value against the strategy the
/// hash player held, and the running duality gap after the round.
#[derive(Debug, Clone)]
pub struct RoundRecord {
    pub value: f64,
    pub pair: QueryPair,
    pub running_gap: f64,
}

/// Full history of a solve: played strategies, best responses, and the
/// accumulated per-coordinate payoff totals.
#[derive(Debug, Clone)]
pub struct GameTranscript {
    dim: usize,
    coords: Vec<u32>,
    hash_strategies: Vec<Vec<f64>>,
    rounds: Vec<RoundRecord>,
    payoff_column_sums: Vec<f64>,
}

impl GameTranscript {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Available coordinates, ascending; strategy and column-sum vectors are
    /// aligned to this order.
    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    pub fn rounds(&self) -> &[RoundRecord] {
        &self.rounds
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn hash_strategies(&self) -> &[Vec<f64>] {
        &self.hash_strategies
    }

    pub fn query_responses(&self) -> impl Iterator<Item = &QueryPair> {
        self.rounds.iter().map(|r| &r.pair)
    }

    pub fn response_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.rounds.iter().map(|r| r.value)
    }

    pub fn payoff_column_sums(&self) -> &[f64] {
        &self.payoff_column_sums
    }

    /// Builds a transcript from raw parts; aimed at tests and replay tools.
    pub fn from_parts(
        dim: usize,
        coords: Vec<u32>,
        hash_strategies: Vec<Vec<f64>>,
        rounds: Vec<RoundRecord>,
        payoff_column_sums: Vec<f64>,
    ) -> Self {
        GameTranscript {
            dim,
            coords,
            hash_strategies,
            rounds,
            payoff_column_sums,
        }
    }
}

/// One transcript row in the line-delimited dump format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub round: usize,
    pub value: f64,
    pub point_id: u32,
    pub flipped: Vec<u32>,
    pub gap: f64,
}

/// Writes one JSON record per round.
pub fn write_transcript_jsonl(transcript: &GameTranscript, writer: &mut impl Write) -> Result<()> {
    for (t, round) in transcript.rounds.iter().enumerate() {
        let record = TranscriptRecord {
            round: t + 1,
            value: round.value,
            point_id: round.pair.point_id,
            flipped: round.pair.flipped.clone(),
            gap: round.running_gap,
        };
        serde_json::to_writer(&mut *writer, &record)
            .map_err(|e| Error::Parse { offset: 0, message: e.to_string() })?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a dump produced by [`write_transcript_jsonl`].
pub fn read_transcript_jsonl(reader: impl BufRead) -> Result<Vec<TranscriptRecord>> {
    let mut out = Vec::new();
    let mut offset = 0u64;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            offset += line.len() as u64 + 1;
            continue;
        }
        let record: TranscriptRecord =
            serde_json::from_str(&line).map_err(|e| Error::Parse {
                offset,
                message: e.to_string(),
            })?;
        out.push(record);
        offset += line.len() as u64 + 1;
    }
    Ok(out)
}

/// Outcome of a solve: the returned distribution, its certified value, and
/// the duality-gap certificate.
#[derive(Debug, Clone)]
pub struct GameResult {
    pub distribution: HashDistribution,
    /// Best-response value of the returned distribution; the game value is
    /// at least this.
    pub value_lower_bound: f64,
    pub duality_gap: f64,
    pub rounds_used: usize,
    pub transcript: Option<GameTranscript>,
}

/// One payoff-matrix entry: `|P_{i, p*_i}|^{-rho}` when the pair agrees at
/// coordinate `i`, zero otherwise. The matrix itself is never materialized.
pub fn payoff_entry(bucket: &BucketView<'_>, i: usize, pair: &QueryPair, rho: f64) -> Result<f64> {
    if !bucket.contains(pair.point_id) {
        return Err(Error::PointNotInBucket {
            point_id: pair.point_id,
        });
    }
    if i >= bucket.dataset().dim() {
        return Err(Error::CoordinateOutOfRange {
            coordinate: i,
            dim: bucket.dataset().dim(),
        });
    }
    if pair.flipped.binary_search(&(i as u32)).is_ok() {
        return Ok(0.0);
    }
    let (n0, n1) = crate::bits::split_counts(bucket, i)?;
    let count = if bucket.point(pair.point_id).get(i) {
        n1
    } else {
        n0
    };
    Ok((count as f64).powf(-rho))
}

/// The hash player's loss vector for one round, aligned to the mask:
/// `1 - payoff` per available coordinate.
pub fn hash_player_loss(
    bucket: &BucketView<'_>,
    pair: &QueryPair,
    rho: f64,
    mask: &CoordinateMask,
) -> Result<Vec<f64>> {
    mask.available()
        .iter()
        .map(|&c| Ok(1.0 - payoff_entry(bucket, c as usize, pair, rho)?))
        .collect()
}

/// One multiplicative-weights update: `w_i * beta^{loss_i}`. Normalization
/// is a separate step.
pub fn mwu_step(weights: &[f64], loss: &[f64], beta: f64) -> Result<Vec<f64>> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "beta must be in (0, 1), got {beta}"
        )));
    }
    debug_assert_eq!(weights.len(), loss.len());
    debug_assert!(weights.iter().all(|&w| w > 0.0));
    debug_assert!(loss.iter().all(|&l| (0.0..=1.0 + 1e-12).contains(&l)));
    let ln_beta = beta.ln();
    Ok(weights
        .iter()
        .zip(loss)
        .map(|(&w, &l)| w * (ln_beta * l).exp())
        .collect())
}

/// The query player's exact minimization against a fixed hash distribution.
/// Returns the minimizing pair and its expected payoff.
pub fn query_best_response(
    bucket: &BucketView<'_>,
    pi: &HashDistribution,
    rho: f64,
    radius: usize,
    mask: &CoordinateMask,
) -> Result<(QueryPair, f64)> {
    if bucket.is_empty() {
        return Err(Error::EmptyBucket);
    }
    let on_mask: f64 = mask
        .available()
        .iter()
        .map(|&c| pi.weights()[c as usize])
        .sum();
    if (on_mask - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(
            "distribution must be supported on the available coordinates".into(),
        ));
    }
    let game = NodeGame::new(bucket, mask, rho, radius)?;
    let local: Vec<f64> = game
        .coords()
        .iter()
        .map(|&c| pi.weights()[c as usize])
        .collect();
    let mut scratch = BestResponseScratch::new(game.width());
    Ok(game.best_response(&local, &mut scratch))
}

/// Runs the iterated game at one node and returns the chosen distribution
/// with its certificate. Fails on buckets below two points (nothing to
/// optimize) and on exhausted masks (nothing to hash on).
pub fn solve_minmax(
    bucket: &BucketView<'_>,
    config: &GameConfig,
    mask: &CoordinateMask,
) -> Result<GameResult> {
    config.validate()?;
    if mask.is_empty() {
        return Err(Error::ExhaustedCoordinates);
    }
    if bucket.len() < 2 {
        return Err(Error::BucketTooSmall);
    }
    let game = NodeGame::new(bucket, mask, config.rho, config.radius)?;
    let m = game.width();
    let dim = bucket.dataset().dim();

    // A single available coordinate leaves a one-vertex simplex; the game is
    // already solved and the MWU base is undefined.
    let (rounds_cap, beta) = if m == 1 {
        (1, 0.5)
    } else {
        let t = config
            .rounds_override
            .unwrap_or_else(|| default_rounds(m, config.epsilon));
        let beta = config.beta_override.unwrap_or_else(|| default_beta(m, t));
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "derived beta {beta} outside (0, 1); override beta or rounds"
            )));
        }
        (t, beta)
    };

    let ln_beta = beta.ln();
    let mut pi = vec![1.0 / m as f64; m];
    let mut avg_pi = vec![0.0; m];
    let mut column = vec![0.0; m];
    let mut column_sums = vec![0.0; m];
    let mut value_sum = 0.0;
    let mut scratch = BestResponseScratch::new(m);
    let mut strategies: Vec<Vec<f64>> = Vec::new();
    let mut rounds: Vec<RoundRecord> = Vec::new();
    let mut rounds_used = rounds_cap;

    for t in 1..=rounds_cap {
        let (pair, value) = game.best_response(&pi, &mut scratch);
        game.payoff_column(&pair, &mut column);
        for k in 0..m {
            column_sums[k] += column[k];
        }
        value_sum += value;

        if config.record_transcript {
            let best = column_sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let running_gap = ((best - value_sum) / t as f64).max(0.0);
            strategies.push(pi.clone());
            rounds.push(RoundRecord {
                value,
                pair,
                running_gap,
            });
        }

        for k in 0..m {
            avg_pi[k] += pi[k];
        }

        // Hash player update: w <- pi . beta^(1 - payoff), then normalize.
        let mut sum = 0.0;
        for k in 0..m {
            pi[k] *= (ln_beta * (1.0 - column[k])).exp();
            sum += pi[k];
        }
        for w in pi.iter_mut() {
            *w /= sum;
        }

        if let Some(threshold) = config.early_stop_gap {
            if t % EARLY_STOP_CHECK_INTERVAL == 0 {
                let best = column_sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let gap = (best - value_sum) / t as f64;
                if gap <= threshold {
                    rounds_used = t;
                    break;
                }
            }
        }
    }

    let local = match config.strategy_mode {
        StrategyMode::Averaged => {
            let inv = 1.0 / rounds_used as f64;
            avg_pi.iter().map(|&w| w * inv).collect::<Vec<f64>>()
        }
        StrategyMode::LastIterate => pi,
    };

    let (_, value_lower_bound) = game.best_response(&local, &mut scratch);

    let best = column_sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let gap = (best - value_sum) / rounds_used as f64;
    debug_assert!(gap >= -1e-9, "duality gap {gap} below rounding tolerance");
    let duality_gap = gap.max(0.0);

    let mut weights = vec![0.0; dim];
    for (k, &c) in game.coords().iter().enumerate() {
        weights[c as usize] = local[k];
    }
    let distribution = HashDistribution::new(weights)?;

    let transcript = if config.record_transcript {
        Some(GameTranscript {
            dim,
            coords: game.coords().to_vec(),
            hash_strategies: strategies,
            rounds,
            payoff_column_sums: column_sums,
        })
    } else {
        None
    };

    Ok(GameResult {
        distribution,
        value_lower_bound,
        duality_gap,
        rounds_used,
        transcript,
    })
}

/// The best fixed distribution in hindsight. Linearity puts the optimum on a
/// vertex, so this is the argmax of the accumulated payoff columns; ties go
/// to the lowest coordinate. Returns the vertex and its average loss.
pub fn best_in_hindsight(transcript: &GameTranscript) -> Result<(HashDistribution, f64)> {
    if transcript.is_empty() {
        return Err(Error::EmptyTranscript);
    }
    let mut best_k = 0usize;
    let mut best = transcript.payoff_column_sums[0];
    for (k, &s) in transcript.payoff_column_sums.iter().enumerate().skip(1) {
        if s > best {
            best = s;
            best_k = k;
        }
    }
    let loss = 1.0 - best / transcript.len() as f64;
    Ok((
        HashDistribution::point_mass(transcript.dim, transcript.coords[best_k]),
        loss,
    ))
}

/// Recomputes the duality gap from a transcript: average hash-player loss
/// minus the best-in-hindsight loss, with sub-rounding negatives clamped.
pub fn duality_gap(transcript: &GameTranscript) -> Result<f64> {
    if transcript.is_empty() {
        return Err(Error::EmptyTranscript);
    }
    let t = transcript.len() as f64;
    let avg_loss = 1.0 - transcript.response_values().sum::<f64>() / t;
    let (_, bih_loss) = best_in_hindsight(transcript)?;
    let gap = avg_loss - bih_loss;
    debug_assert!(gap >= -1e-9, "duality gap {gap} below rounding tolerance");
    Ok(gap.max(0.0))
}

#[cfg(test)]
mod tests;
