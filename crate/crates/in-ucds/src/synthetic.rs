//! Synthetic implicit-feedback dataset with power-law user activity and
//! planted item-preference clusters. Used by the acceptance experiments and
//! the benches; also exposed by the CLI for generating demo data.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::data::InteractionLog;
use crate::seeding::{rng_for, stream};

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub n_users: usize,
    pub n_items: usize,
    /// Planted preference clusters; items are split evenly among them and
    /// each user draws mostly from its own cluster.
    pub n_clusters: usize,
    /// Interaction count of the most active user.
    pub max_activity: usize,
    /// Floor that keeps every user eligible for leave-one-out evaluation.
    pub min_activity: usize,
    /// Power-law exponent for the activity profile.
    pub exponent: f64,
    /// Probability of drawing an in-cluster item.
    pub in_cluster_prob: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_users: 300,
            n_items: 200,
            n_clusters: 5,
            max_activity: 100,
            min_activity: 4,
            exponent: 0.6,
            in_cluster_prob: 0.9,
            seed: 0,
        }
    }
}

/// Generates the log. User `u` belongs to cluster `u % n_clusters` and its
/// activity follows `max_activity / (rank+1)^exponent`, clamped below by
/// `min_activity`, where rank is a seed-dependent permutation of users.
pub fn generate(config: &SyntheticConfig) -> InteractionLog {
    let n = config.n_users;
    let mut rank_of: Vec<usize> = (0..n).collect();
    rank_of.shuffle(&mut rng_for(config.seed, stream::SYNTH, 0));

    let cluster_items: Vec<Vec<u64>> = (0..config.n_clusters)
        .map(|c| {
            (0..config.n_items)
                .filter(|i| i % config.n_clusters == c)
                .map(|i| i as u64)
                .collect()
        })
        .collect();

    let mut records: Vec<(u64, u64, Option<f64>)> = Vec::new();
    for (user, &rank) in rank_of.iter().enumerate() {
        let activity = ((config.max_activity as f64 / ((rank + 1) as f64).powf(config.exponent))
            .round() as usize)
            .max(config.min_activity);
        let cluster = user % config.n_clusters;
        let own = &cluster_items[cluster];
        let mut rng = rng_for(config.seed, stream::SYNTH, 1 + user as u64);
        let mut picked: Vec<u64> = Vec::with_capacity(activity);
        let mut guard = 0;
        while picked.len() < activity && guard < activity * 50 {
            guard += 1;
            let item = if rng.gen_bool(config.in_cluster_prob) {
                own[rng.gen_range(0..own.len())]
            } else {
                rng.gen_range(0..config.n_items) as u64
            };
            if !picked.contains(&item) {
                picked.push(item);
            }
        }
        for item in picked {
            records.push((user as u64, item, None));
        }
    }
    // every item id must reach the vocabulary; attach stragglers round-robin
    let mut covered = vec![false; config.n_items];
    for &(_, item, _) in &records {
        covered[item as usize] = true;
    }
    for (item, &seen) in covered.iter().enumerate() {
        if !seen {
            records.push(((item % n) as u64, item as u64, None));
        }
    }
    InteractionLog::from_records(&records).expect("non-empty synthetic log")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::group_users_by_activity;

    #[test]
    fn shape_matches_config() {
        let cfg = SyntheticConfig::default();
        let log = generate(&cfg);
        assert_eq!(log.n_users(), 300);
        assert_eq!(log.n_items(), 200);
        for u in 1..log.n_users() {
            assert!(log.degree(u) >= cfg.min_activity);
        }
    }

    #[test]
    fn activity_is_skewed() {
        let log = generate(&SyntheticConfig::default());
        let grouping = group_users_by_activity(&log, 0.05);
        let min_adv = grouping
            .advantaged()
            .iter()
            .map(|&u| log.degree(u))
            .min()
            .unwrap();
        let mean_dis: f64 = grouping
            .disadvantaged()
            .iter()
            .map(|&u| log.degree(u) as f64)
            .sum::<f64>()
            / grouping.disadvantaged().len() as f64;
        assert!(min_adv as f64 > 2.0 * mean_dis);
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = SyntheticConfig::default();
        let a = generate(&cfg);
        let b = generate(&cfg);
        assert_eq!(a.interactions().len(), b.interactions().len());
        for (x, y) in a.interactions().iter().zip(b.interactions()) {
            assert_eq!((x.user, x.item), (y.user, y.item));
        }
    }
}
