//! Per-epoch training negative sampling.

use rand::Rng;

use super::InteractionLog;
use crate::seeding::{rng_for, stream};

/// Pairs each train positive with `num_negative` uniform negatives drawn
/// from items the user has not interacted with in train. Deterministic per
/// (seed, epoch); call once per epoch to resample.
///
/// A user who interacted with the whole catalog contributes positives only
/// (warned once per pass).
pub fn sample_training_negatives(
    train: &InteractionLog,
    num_negative: usize,
    seed: u64,
    epoch: u64,
) -> Vec<(usize, usize, f64)> {
    assert!(num_negative >= 1, "num_negative must be >= 1");
    let n_items = train.n_items();
    let mut rng = rng_for(seed, stream::NEGATIVES, epoch);
    let mut out = Vec::with_capacity(train.interactions().len() * (1 + num_negative));
    let mut warned = vec![false; train.n_users()];
    for rec in train.interactions() {
        out.push((rec.user, rec.item, 1.0));
        if train.degree(rec.user) >= n_items {
            if !warned[rec.user] {
                log::warn!(
                    "user {} interacted with the entire catalog; skipping negatives",
                    rec.user
                );
                warned[rec.user] = true;
            }
            continue;
        }
        for _ in 0..num_negative {
            loop {
                let item = rng.gen_range(0..n_items);
                if !train.has_interacted(rec.user, item) {
                    out.push((rec.user, item, 0.0));
                    break;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_train() -> InteractionLog {
        let records: Vec<(u64, u64, Option<f64>)> = vec![
            (0, 0, None),
            (0, 1, None),
            (1, 2, None),
            (1, 3, None),
            (2, 4, None),
            (0, 5, None),
            (1, 5, None),
            (2, 5, None),
            (0, 6, None),
            (1, 6, None),
        ];
        InteractionLog::from_records(&records).unwrap()
    }

    #[test]
    fn counts_match() {
        let train = toy_train();
        let triples = sample_training_negatives(&train, 4, 0, 0);
        let positives = train.interactions().len();
        assert_eq!(triples.len(), positives * 5);
        assert_eq!(triples.iter().filter(|t| t.2 == 1.0).count(), positives);
    }

    #[test]
    fn negatives_avoid_train_positives() {
        let train = toy_train();
        for epoch in 0..5 {
            for (user, item, label) in sample_training_negatives(&train, 3, 9, epoch) {
                if label == 0.0 {
                    assert!(!train.has_interacted(user, item));
                }
            }
        }
    }

    #[test]
    fn resampled_per_epoch_but_deterministic() {
        let train = toy_train();
        let e0 = sample_training_negatives(&train, 2, 5, 0);
        let e0_again = sample_training_negatives(&train, 2, 5, 0);
        let e1 = sample_training_negatives(&train, 2, 5, 1);
        assert_eq!(e0, e0_again);
        assert_ne!(e0, e1);
    }

    #[test]
    fn saturated_user_skips_negatives() {
        // user 0 touches every item
        let records: Vec<(u64, u64, Option<f64>)> = vec![(0, 0, None), (0, 1, None), (1, 0, None)];
        let train = InteractionLog::from_records(&records).unwrap();
        let triples = sample_training_negatives(&train, 2, 0, 0);
        assert!(triples.iter().filter(|t| t.0 == 0).all(|t| t.2 == 1.0));
        assert_eq!(triples.iter().filter(|t| t.0 == 1 && t.2 == 0.0).count(), 2);
    }
}
