//! Stage-one UCDS modeling: pair each disadvantaged user with similar
//! advantaged users by extracting a constrained dominant set from an
//! affinity graph over backbone user embeddings.

mod affinity;
mod replicator;

pub use affinity::{build_affinity, cosine_affinity, AffinityMatrix};
pub use replicator::{
    extract_cds, power_iteration, regularization_shift, replicator_dynamics, replicator_step,
    uniform_simplex, ReplicatorOutcome, UcdsProblem, ALPHA_MARGIN, POWER_MAX_ITER, POWER_TOL,
};

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::data::{IdMap, InteractionLog, UserGrouping};
use crate::model::BackboneModel;
use crate::par_map;

#[derive(Debug, Error)]
pub enum UcdsError {
    #[error("constraint vertex {constraint} dropped from extracted support")]
    ConstraintDropped { constraint: usize },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Solver knobs for the per-user constrained dominant-set problems.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UcdsParams {
    /// Advantaged candidates per disadvantaged user; 0 means all.
    pub pool_size: usize,
    /// L1 step-norm convergence tolerance.
    pub tol: f64,
    pub max_iter: usize,
    pub support_threshold: f64,
}

impl Default for UcdsParams {
    fn default() -> Self {
        Self {
            pool_size: 50,
            tol: 1e-6,
            max_iter: 2000,
            support_threshold: 1e-4,
        }
    }
}

/// Map from each disadvantaged user to its matched advantaged users with
/// participation weights (summing to 1 when nonempty). Users whose problem
/// degenerated keep an empty list and simply receive no fairness term.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClusterAssignment {
    partners: BTreeMap<usize, Vec<(usize, f64)>>,
}

impl ClusterAssignment {
    pub fn new(partners: BTreeMap<usize, Vec<(usize, f64)>>) -> Self {
        Self { partners }
    }

    pub fn partners_of(&self, user: usize) -> Option<&[(usize, f64)]> {
        self.partners.get(&user).map(|v| v.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&usize, &Vec<(usize, f64)>)> {
        self.partners.iter()
    }

    pub fn len(&self) -> usize {
        self.partners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partners.is_empty()
    }
}

/// Solves one constrained dominant-set problem for disadvantaged user `d`
/// against the given advantaged candidates, retrying with doubled alpha
/// when the constraint drops out. Returns partner ids with weights
/// renormalized over the partners (the constrained user itself excluded).
pub fn solve_for_user(
    d_embedding: &[f64],
    candidates: &[(usize, &[f64])],
    params: &UcdsParams,
) -> Vec<(usize, f64)> {
    if candidates.is_empty() {
        return Vec::new();
    }
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(candidates.len() + 1);
    vectors.push(d_embedding.to_vec());
    vectors.extend(candidates.iter().map(|(_, e)| e.to_vec()));
    let affinity = build_affinity(&vectors);
    let mut alpha = regularization_shift(&affinity, 0);

    for _ in 0..4 {
        let problem = UcdsProblem {
            affinity: affinity.clone(),
            constraint: 0,
            alpha,
        };
        let out = replicator_dynamics(
            &problem.payoff(),
            &uniform_simplex(vectors.len()),
            params.tol,
            params.max_iter,
        );
        if out.degenerate {
            return Vec::new();
        }
        match extract_cds(&out.x, 0, params.support_threshold) {
            Ok(members) => {
                let partners: Vec<(usize, f64)> = members
                    .into_iter()
                    .filter(|&(v, _)| v != 0)
                    .map(|(v, w)| (candidates[v - 1].0, w))
                    .collect();
                let total: f64 = partners.iter().map(|(_, w)| w).sum();
                if total <= 0.0 {
                    return Vec::new();
                }
                return partners
                    .into_iter()
                    .map(|(id, w)| (id, w / total))
                    .collect();
            }
            Err(UcdsError::ConstraintDropped { .. }) => {
                alpha *= 2.0;
            }
            Err(_) => return Vec::new(),
        }
    }
    log::warn!("constraint never survived extraction; assigning no partners");
    Vec::new()
}

/// Runs the stage-one pass: for every disadvantaged user, preselect the
/// `pool_size` advantaged users with highest affinity, solve the constrained
/// dominant-set problem over a frozen embedding snapshot, and record the
/// extracted advantaged partners. Per-user problems run in parallel.
pub fn ucds_assign_all(
    model: &BackboneModel,
    grouping: &UserGrouping,
    params: &UcdsParams,
) -> ClusterAssignment {
    let embeddings: Vec<Vec<f64>> = (0..model.n_users())
        .map(|u| model.user_embedding(u))
        .collect();
    let advantaged: Vec<usize> = grouping.advantaged().iter().copied().collect();
    let disadvantaged: Vec<usize> = grouping.disadvantaged().iter().copied().collect();

    let results = par_map(&disadvantaged, |&d| {
        let mut scored: Vec<(usize, f64)> = advantaged
            .iter()
            .map(|&a| (a, cosine_affinity(&embeddings[d], &embeddings[a])))
            .collect();
        // highest affinity first, ties by ascending id
        scored.sort_by(|x, y| {
            y.1.partial_cmp(&x.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(x.0.cmp(&y.0))
        });
        if params.pool_size > 0 && scored.len() > params.pool_size {
            scored.truncate(params.pool_size);
        }
        let candidates: Vec<(usize, &[f64])> = scored
            .iter()
            .map(|&(a, _)| (a, embeddings[a].as_slice()))
            .collect();
        (d, solve_for_user(&embeddings[d], &candidates, params))
    });

    ClusterAssignment::new(results.into_iter().collect())
}

/// In-Naive pairing: each disadvantaged user takes the `k` advantaged users
/// with the largest co-interaction count (ties by ascending id), uniform
/// weights. Zero overlap everywhere leaves the list empty.
pub fn naive_assign(
    train: &InteractionLog,
    grouping: &UserGrouping,
    k: usize,
) -> ClusterAssignment {
    assert!(k >= 1);
    let advantaged: Vec<usize> = grouping.advantaged().iter().copied().collect();
    let disadvantaged: Vec<usize> = grouping.disadvantaged().iter().copied().collect();
    let results = par_map(&disadvantaged, |&d| {
        let items = train.items_of(d);
        let mut overlaps: Vec<(usize, usize)> = advantaged
            .iter()
            .map(|&a| {
                let count = train
                    .items_of(a)
                    .iter()
                    .filter(|i| items.binary_search(i).is_ok())
                    .count();
                (a, count)
            })
            .filter(|&(_, c)| c > 0)
            .collect();
        overlaps.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
        overlaps.truncate(k);
        let w = 1.0 / overlaps.len().max(1) as f64;
        (d, overlaps.into_iter().map(|(a, _)| (a, w)).collect())
    });
    ClusterAssignment::new(results.into_iter().collect())
}

/// Debug dump: `disadvantaged_id,advantaged_id,weight` per pairing, in
/// external ids.
pub fn dump_assignment(
    assignment: &ClusterAssignment,
    id_map: &IdMap,
    path: &Path,
) -> Result<(), UcdsError> {
    let mut out = String::new();
    for (&d, partners) in assignment.iter() {
        for &(a, w) in partners {
            out.push_str(&format!(
                "{},{},{:.6}\n",
                id_map.user_external(d),
                id_map.user_external(a),
                w
            ));
        }
    }
    let mut f = fs::File::create(path).map_err(|e| UcdsError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    f.write_all(out.as_bytes()).map_err(|e| UcdsError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

#[derive(Debug, Clone)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        if self.n == 0 {
            return Vec::new();
        }
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn principal_submatrix(&self, indices: &[usize]) -> SquareMatrix {
        let m = indices.len();
        let mut sub = SquareMatrix::zeros(m);
        for (r, &i) in indices.iter().enumerate() {
            for (c, &j) in indices.iter().enumerate() {
                sub.set(r, c, self.get(i, j));
            }
        }
        sub
    }

    pub fn max_row_sum(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}
