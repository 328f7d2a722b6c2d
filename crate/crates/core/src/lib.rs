//! Hamming-space LSH forests whose per-node hash distributions are chosen by
//! solving a min-max game against the worst query, plus uniform baselines,
//! synthetic adversarial dataset generation, and worst-query recall
//! evaluation.

pub mod bits;
pub mod error;
pub mod game;
pub mod params;

pub use bits::{
    balance, hamming_distance, partition, split_counts, BitVector, BucketView, CoordinateMask,
    HammingDataset,
};
pub use error::{Error, Result};
pub use game::{
    best_in_hindsight, duality_gap, hash_player_loss, mwu_step, payoff_entry,
    query_best_response, solve_minmax, GameConfig, GameResult, GameTranscript, HashDistribution,
    QueryPair, StrategyMode,
};
