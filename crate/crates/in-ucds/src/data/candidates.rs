//! 1-positive / 99-negative evaluation candidate sets.

use std::collections::BTreeMap;

use rand::Rng;

use super::{DataError, InteractionLog, SplitDataset};
use crate::seeding::{rng_for, stream};

/// Candidates for one user: the held-out positive plus sampled negatives.
#[derive(Debug, Clone)]
pub struct CandidateList {
    pub positive: usize,
    pub negatives: Vec<usize>,
}

impl CandidateList {
    /// Positive followed by negatives.
    pub fn all_items(&self) -> Vec<usize> {
        let mut items = Vec::with_capacity(1 + self.negatives.len());
        items.push(self.positive);
        items.extend_from_slice(&self.negatives);
        items
    }
}

/// Per-user evaluation candidates, keyed by internal user id.
#[derive(Debug, Clone, Default)]
pub struct EvalCandidateSet {
    pub per_user: BTreeMap<usize, CandidateList>,
}

/// Builds candidates for the test positives of `split`.
pub fn build_eval_candidates(
    split: &SplitDataset,
    log: &InteractionLog,
    n_neg: usize,
    seed: u64,
) -> Result<EvalCandidateSet, DataError> {
    build_candidates_for(&split.test, log, n_neg, seed)
}

/// Builds candidates for an arbitrary user -> positive map. Negatives are
/// drawn uniformly without replacement from items the user never interacted
/// with anywhere in the full log.
pub fn build_candidates_for(
    positives: &BTreeMap<usize, usize>,
    log: &InteractionLog,
    n_neg: usize,
    seed: u64,
) -> Result<EvalCandidateSet, DataError> {
    let mut per_user = BTreeMap::new();
    for (&user, &positive) in positives {
        let interacted = log.items_of(user);
        let mut pool: Vec<usize> = (0..log.n_items())
            .filter(|i| interacted.binary_search(i).is_err())
            .collect();
        if pool.len() < n_neg {
            return Err(DataError::InsufficientNegatives {
                user: log.id_map().user_external(user),
                needed: n_neg,
            });
        }
        let mut rng = rng_for(seed, stream::CANDIDATES, user as u64);
        // Partial Fisher-Yates: the first n_neg slots become the sample.
        for k in 0..n_neg {
            let j = rng.gen_range(k..pool.len());
            pool.swap(k, j);
        }
        pool.truncate(n_neg);
        per_user.insert(
            user,
            CandidateList {
                positive,
                negatives: pool,
            },
        );
    }
    Ok(EvalCandidateSet { per_user })
}
