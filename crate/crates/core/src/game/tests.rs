use super::*;
use crate::bits::{BitVector, BucketView, CoordinateMask, HammingDataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dataset(strs: &[&str]) -> HammingDataset {
    let points: Vec<BitVector> = strs.iter().map(|s| BitVector::from_bit_str(s)).collect();
    HammingDataset::new(points[0].dim(), points).unwrap()
}

fn bernoulli_dataset(rng: &mut impl Rng, dim: usize, n: usize, p: f64) -> HammingDataset {
    let points: Vec<BitVector> = (0..n)
        .map(|_| {
            let mut v = BitVector::zeros(dim);
            for i in 0..dim {
                if rng.gen_bool(p) {
                    v.set(i, true);
                }
            }
            v
        })
        .collect();
    HammingDataset::new(dim, points).unwrap()
}

#[test]
fn payoff_zero_on_flipped_coordinate() {
    let ds = dataset(&["0000", "1100", "1000"]);
    let bucket = BucketView::root(&ds);
    let pair = QueryPair::new(0, vec![1]);
    assert_eq!(payoff_entry(&bucket, 1, &pair, 1.0).unwrap(), 0.0);
}

#[test]
fn payoff_one_on_singleton_bucket() {
    let ds = dataset(&["0101"]);
    let bucket = BucketView::root(&ds);
    let pair = QueryPair::new(0, vec![]);
    for rho in [0.1, 0.5, 1.0] {
        assert_eq!(payoff_entry(&bucket, 2, &pair, rho).unwrap(), 1.0);
    }
}

#[test]
fn payoff_hand_example() {
    // count of bit 0 at coordinate 1 is 2, so the entry is 2^-1.
    let ds = dataset(&["0000", "1100", "1000"]);
    let bucket = BucketView::root(&ds);
    let pair = QueryPair::new(0, vec![]);
    assert_eq!(payoff_entry(&bucket, 1, &pair, 1.0).unwrap(), 0.5);
}

#[test]
fn payoff_rejects_foreign_point() {
    let ds = dataset(&["0000", "1100"]);
    let bucket = BucketView::from_members(&ds, vec![0]).unwrap();
    let pair = QueryPair::new(1, vec![]);
    assert!(matches!(
        payoff_entry(&bucket, 0, &pair, 1.0),
        Err(Error::PointNotInBucket { .. })
    ));
}

#[test]
fn loss_is_one_minus_payoff() {
    let ds = dataset(&["0000", "1100", "1000"]);
    let bucket = BucketView::root(&ds);
    let mask = CoordinateMask::full(4);
    let pair = QueryPair::new(0, vec![0]);
    let loss = hash_player_loss(&bucket, &pair, 1.0, &mask).unwrap();
    assert_eq!(loss[0], 1.0); // flipped coordinate
    assert_eq!(loss[1], 0.5); // payoff 0.5 at coordinate 1
    for (&l, &c) in loss.iter().zip(mask.available()) {
        let a = payoff_entry(&bucket, c as usize, &pair, 1.0).unwrap();
        assert_eq!(l, 1.0 - a);
        assert!((0.0..=1.0).contains(&l));
    }
}

#[test]
fn loss_zero_on_singleton_unflipped() {
    let ds = dataset(&["0101"]);
    let bucket = BucketView::root(&ds);
    let mask = CoordinateMask::full(4);
    let pair = QueryPair::new(0, vec![3]);
    let loss = hash_player_loss(&bucket, &pair, 0.7, &mask).unwrap();
    assert_eq!(loss[0], 0.0);
    assert_eq!(loss[3], 1.0);
}

#[test]
fn mwu_zero_loss_keeps_weights() {
    let w = vec![0.3, 0.7];
    let updated = mwu_step(&w, &[0.0, 0.0], 0.5).unwrap();
    assert_eq!(updated, w);
}

#[test]
fn mwu_hand_example() {
    let updated = mwu_step(&[0.5, 0.5], &[1.0, 0.0], 0.5).unwrap();
    assert!((updated[0] - 0.25).abs() < 1e-15);
    assert!((updated[1] - 0.5).abs() < 1e-15);
    let sum: f64 = updated.iter().sum();
    let normalized: Vec<f64> = updated.iter().map(|w| w / sum).collect();
    assert!((normalized[0] - 1.0 / 3.0).abs() < 1e-15);
    assert!((normalized[1] - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn mwu_never_increases_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let w: Vec<f64> = (0..6).map(|_| rng.gen_range(0.01..1.0)).collect();
        let loss: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let updated = mwu_step(&w, &loss, rng.gen_range(0.05..0.95)).unwrap();
        for (u, w) in updated.iter().zip(&w) {
            assert!(u <= w && *u > 0.0);
        }
    }
}

#[test]
fn mwu_rejects_bad_beta() {
    for beta in [0.0, 1.0, -0.5, 1.5] {
        assert!(matches!(
            mwu_step(&[1.0], &[0.5], beta),
            Err(Error::InvalidConfig(_))
        ));
    }
}

#[test]
fn best_response_worked_example() {
    // d = 4, bucket {0000, 1100}, r = 1, rho = 1, uniform pi:
    // u = (1, 1, 0.5, 0.5), s = (.25, .25, .125, .125); flipping the top
    // entry (ties to coordinate 0) leaves 0.5.
    let ds = dataset(&["0000", "1100"]);
    let bucket = BucketView::root(&ds);
    let mask = CoordinateMask::full(4);
    let pi = HashDistribution::uniform_over(4, mask.available());
    let (pair, value) = query_best_response(&bucket, &pi, 1.0, 1, &mask).unwrap();
    assert_eq!(value, 0.5);
    assert_eq!(pair.point_id, 0);
    assert_eq!(pair.flipped, vec![0]);
}

#[test]
fn best_response_radius_zero_is_pure_minimum() {
    let ds = dataset(&["0000", "1100", "1010"]);
    let bucket = BucketView::root(&ds);
    let mask = CoordinateMask::full(4);
    let pi = HashDistribution::uniform_over(4, mask.available());
    let (pair, value) = query_best_response(&bucket, &pi, 1.0, 0, &mask).unwrap();
    assert!(pair.flipped.is_empty());
    // Exhaustive check over the three points.
    let mut expect = f64::INFINITY;
    for id in 0..3u32 {
        let mut z = 0.0;
        for c in 0..4usize {
            z += 0.25 * payoff_entry(&bucket, c, &QueryPair::new(id, vec![]), 1.0).unwrap();
        }
        expect = expect.min(z);
    }
    assert!((value - expect).abs() < 1e-15);
}

#[test]
fn best_response_flips_everything_when_radius_exceeds_mask() {
    let ds = dataset(&["0011", "0010"]);
    let bucket = BucketView::root(&ds);
    let mask = CoordinateMask::from_coords(vec![2, 3]);
    let pi = HashDistribution::uniform_over(4, mask.available());
    let (pair, value) = query_best_response(&bucket, &pi, 1.0, 10, &mask).unwrap();
    assert_eq!(pair.flipped, vec![2, 3]);
    assert_eq!(value, 0.0);
}

#[test]
fn best_response_rejects_empty_bucket() {
    let ds = dataset(&["0000"]);
    let bucket = BucketView::from_members(&ds, vec![]).unwrap();
    let mask = CoordinateMask::full(4);
    let pi = HashDistribution::uniform_over(4, mask.available());
    assert!(matches!(
        query_best_response(&bucket, &pi, 1.0, 1, &mask),
        Err(Error::EmptyBucket)
    ));
}

#[test]
fn scaling_payoffs_preserves_argmin() {
    // Duplicating every point four times scales every payoff entry by
    // 4^-rho without touching the geometry, so the chosen pair must not
    // change and the value must scale.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..20 {
        let dim = rng.gen_range(3..8);
        let n = rng.gen_range(2..9);
        let base = bernoulli_dataset(&mut rng, dim, n, 0.5);
        let mut dup_points = Vec::new();
        for p in base.points() {
            for _ in 0..4 {
                dup_points.push(p.clone());
            }
        }
        let dup = HammingDataset::new(dim, dup_points).unwrap();

        let mask = CoordinateMask::full(dim);
        let raw: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let pi =
            HashDistribution::new(raw.iter().map(|w| w / total).collect()).unwrap();

        let r = rng.gen_range(0..3);
        let b0 = BucketView::root(&base);
        let b1 = BucketView::root(&dup);
        let (pair0, v0) = query_best_response(&b0, &pi, 1.0, r, &mask).unwrap();
        let (pair1, v1) = query_best_response(&b1, &pi, 1.0, r, &mask).unwrap();
        assert_eq!(pair1.point_id, pair0.point_id * 4, "trial {trial}");
        assert_eq!(pair1.flipped, pair0.flipped, "trial {trial}");
        assert!((v1 * 4.0 - v0).abs() <= 1e-12, "trial {trial}");
    }
}

#[test]
fn solve_uses_mask_size_for_schedule() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let ds = bernoulli_dataset(&mut rng, 8, 32, 0.5);
    let bucket = BucketView::root(&ds);
    let mask = CoordinateMask::from_coords(vec![1, 3, 5, 7]);
    let config = GameConfig::new(1.0, 1, 1.0);
    let result = solve_minmax(&bucket, &config, &mask).unwrap();
    // ceil(10 ln 4 / 1) = 14 rounds from the four available coordinates.
    assert_eq!(result.rounds_used, 14);
    let w = result.distribution.weights();
    assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    for c in [0usize, 2, 4, 6] {
        assert_eq!(w[c], 0.0);
    }
}

#[test]
fn solve_rejects_degenerate_inputs() {
    let ds = dataset(&["0000", "1111"]);
    let single = BucketView::from_members(&ds, vec![0]).unwrap();
    let mask = CoordinateMask::full(4);
    let config = GameConfig::new(1.0, 1, 0.5);
    assert!(matches!(
        solve_minmax(&single, &config, &mask),
        Err(Error::BucketTooSmall)
    ));
    let bucket = BucketView::root(&ds);
    let empty = CoordinateMask::from_coords(vec![]);
    assert!(matches!(
        solve_minmax(&bucket, &config, &empty),
        Err(Error::ExhaustedCoordinates)
    ));
}

#[test]
fn solve_single_coordinate_mask() {
    let ds = dataset(&["0000", "1100", "0100"]);
    let bucket = BucketView::root(&ds);
    let mask = CoordinateMask::from_coords(vec![2]);
    let config = GameConfig::new(0.5, 1, 0.3);
    let result = solve_minmax(&bucket, &config, &mask).unwrap();
    assert_eq!(result.rounds_used, 1);
    assert_eq!(result.distribution.weights()[2], 1.0);
    assert_eq!(result.duality_gap, 0.0);
}

#[test]
fn early_stop_halts_at_first_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ds = bernoulli_dataset(&mut rng, 16, 64, 0.5);
    let bucket = BucketView::root(&ds);
    let mask = CoordinateMask::full(16);
    let mut config = GameConfig::new(1.0, 2, 0.1);
    config.early_stop_gap = Some(1.0);
    let result = solve_minmax(&bucket, &config, &mask).unwrap();
    assert_eq!(result.rounds_used, EARLY_STOP_CHECK_INTERVAL);
}

#[test]
fn reported_gap_matches_transcript_recompute() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for seed in 0..5 {
        let dim = rng.gen_range(4..10);
        let n = rng.gen_range(4..20);
        let ds = bernoulli_dataset(&mut rng, dim, n, 0.4);
        let bucket = BucketView::root(&ds);
        let mask = CoordinateMask::full(dim);
        let mut config = GameConfig::new(0.8, 2, 0.4);
        config.rounds_override = Some(120);
        config.record_transcript = true;
        let result = solve_minmax(&bucket, &config, &mask).unwrap();
        let transcript = result.transcript.as_ref().unwrap();
        let recomputed = duality_gap(transcript).unwrap();
        assert!(
            (recomputed - result.duality_gap).abs() < 1e-9,
            "seed {seed}: {recomputed} vs {}",
            result.duality_gap
        );
        for pi in transcript.hash_strategies() {
            let sum: f64 = pi.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert!(pi.iter().all(|&w| w >= 0.0));
        }
        for r in transcript.rounds() {
            assert!((0.0..=1.0).contains(&r.value));
        }
    }
}

#[test]
fn averaged_strategy_near_uniform_on_iid_data() {
    // On iid Bernoulli(0.5) data no coordinate is special, so the averaged
    // strategy should stay close to uniform.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ds = bernoulli_dataset(&mut rng, 32, 1024, 0.5);
    let bucket = BucketView::root(&ds);
    let mask = CoordinateMask::full(32);
    let config = GameConfig::new(1.0, 4, 0.2);
    let result = solve_minmax(&bucket, &config, &mask).unwrap();
    let uniform = HashDistribution::uniform_over(32, mask.available());
    let tv = result.distribution.tv_distance(&uniform);
    assert!(tv <= 0.15, "total variation {tv} too large");
}

#[test]
fn hindsight_single_round_example() {
    let transcript = GameTranscript::from_parts(
        3,
        vec![0, 1, 2],
        vec![vec![1.0 / 3.0; 3]],
        vec![RoundRecord {
            value: 0.25,
            pair: QueryPair::new(0, vec![]),
            running_gap: 0.25,
        }],
        vec![0.5, 0.25, 0.0],
    );
    let (dist, loss) = best_in_hindsight(&transcript).unwrap();
    assert_eq!(dist.weights(), &[1.0, 0.0, 0.0]);
    assert_eq!(loss, 0.5);
}

#[test]
fn hindsight_ties_break_to_lowest_coordinate() {
    let transcript = GameTranscript::from_parts(
        4,
        vec![1, 2, 3],
        vec![vec![1.0 / 3.0; 3]],
        vec![RoundRecord {
            value: 0.4,
            pair: QueryPair::new(0, vec![]),
            running_gap: 0.0,
        }],
        vec![0.4, 0.4, 0.4],
    );
    let (dist, loss) = best_in_hindsight(&transcript).unwrap();
    // All vertices tie; the lowest available coordinate (1) wins.
    assert_eq!(dist.weights(), &[0.0, 1.0, 0.0, 0.0]);
    assert!((loss - 0.6).abs() < 1e-15);
}

#[test]
fn hindsight_rejects_empty_transcript() {
    let transcript = GameTranscript::from_parts(2, vec![0, 1], vec![], vec![], vec![0.0, 0.0]);
    assert!(matches!(
        best_in_hindsight(&transcript),
        Err(Error::EmptyTranscript)
    ));
    assert!(matches!(
        duality_gap(&transcript),
        Err(Error::EmptyTranscript)
    ));
}

#[test]
fn gap_zero_when_already_at_best_vertex() {
    let transcript = GameTranscript::from_parts(
        2,
        vec![0, 1],
        vec![vec![1.0, 0.0]],
        vec![RoundRecord {
            value: 0.7,
            pair: QueryPair::new(0, vec![]),
            running_gap: 0.0,
        }],
        vec![0.7, 0.2],
    );
    assert_eq!(duality_gap(&transcript).unwrap(), 0.0);
}

#[test]
fn gap_matches_worked_accounting_example() {
    // Average hash-player loss 0.99812 against a hindsight loss of 0.99795
    // leaves a gap of 0.00017.
    let transcript = GameTranscript::from_parts(
        2,
        vec![0, 1],
        vec![vec![0.5, 0.5]],
        vec![RoundRecord {
            value: 0.00188,
            pair: QueryPair::new(0, vec![]),
            running_gap: 0.0,
        }],
        vec![0.00205, 0.001],
    );
    let gap = duality_gap(&transcript).unwrap();
    assert!((gap - 0.00017).abs() < 1e-9);
}

#[test]
fn transcript_jsonl_roundtrip() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let ds = bernoulli_dataset(&mut rng, 6, 10, 0.5);
    let bucket = BucketView::root(&ds);
    let mask = CoordinateMask::full(6);
    let mut config = GameConfig::new(1.0, 2, 0.4);
    config.rounds_override = Some(40);
    config.record_transcript = true;
    let result = solve_minmax(&bucket, &config, &mask).unwrap();
    let transcript = result.transcript.unwrap();

    let mut buf = Vec::new();
    write_transcript_jsonl(&transcript, &mut buf).unwrap();
    let records = read_transcript_jsonl(buf.as_slice()).unwrap();
    assert_eq!(records.len(), transcript.len());
    for (t, (record, round)) in records.iter().zip(transcript.rounds()).enumerate() {
        assert_eq!(record.round, t + 1);
        assert_eq!(record.value, round.value);
        assert_eq!(record.point_id, round.pair.point_id);
        assert_eq!(record.flipped, round.pair.flipped);
        assert_eq!(record.gap, round.running_gap);
    }
}

#[test]
fn config_validation_rejects_bad_values() {
    let mut config = GameConfig::new(0.0, 1, 0.1);
    assert!(config.validate().is_err());
    config.rho = 1.5;
    assert!(config.validate().is_err());
    config.rho = 0.5;
    config.epsilon = 0.0;
    assert!(config.validate().is_err());
    config.epsilon = 0.1;
    config.beta_override = Some(1.0);
    assert!(config.validate().is_err());
    config.beta_override = Some(0.68);
    assert!(config.validate().is_ok());
}

#[test]
fn distribution_draw_stays_on_support() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let dist = HashDistribution::uniform_over(8, &[1, 4, 6]);
    for _ in 0..200 {
        let c = dist.draw(&mut rng);
        assert!(matches!(c, 1 | 4 | 6));
    }
}
