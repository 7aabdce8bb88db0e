//! Constrained dominant-set extraction via replicator dynamics.
//!
//! For affinity matrix A and constraint vertex c, the payoff is
//! B = A - alpha * D, where D is the diagonal indicator of the vertices
//! other than c. With alpha above the spectral radius of the principal
//! submatrix of A on those vertices, every local maximizer of x' B x on the
//! simplex has c in its support. The dynamics run on B' = B + alpha * J
//! (J all-ones), which is entrywise nonnegative and shares the same simplex
//! local maximizers.

use super::{AffinityMatrix, SquareMatrix, UcdsError};

/// Margin added above the estimated spectral radius.
pub const ALPHA_MARGIN: f64 = 1e-3;

/// Relative eigen-residual tolerance for the power iteration.
pub const POWER_TOL: f64 = 1e-6;
/// Iteration cap for the power iteration before the Gershgorin fallback.
pub const POWER_MAX_ITER: usize = 10_000;

/// One constrained dominant-set problem.
#[derive(Debug, Clone)]
pub struct UcdsProblem {
    pub affinity: AffinityMatrix,
    pub constraint: usize,
    pub alpha: f64,
}

impl UcdsProblem {
    pub fn new(affinity: AffinityMatrix, constraint: usize) -> Self {
        let alpha = regularization_shift(&affinity, constraint);
        Self {
            affinity,
            constraint,
            alpha,
        }
    }

    /// The nonnegative iteration payoff B' = A - alpha*D + alpha*J.
    pub fn payoff(&self) -> SquareMatrix {
        let n = self.affinity.n();
        let mut b = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut v = self.affinity.get(i, j) + self.alpha;
                if i == j && i != self.constraint {
                    v -= self.alpha;
                }
                b.set(i, j, v);
            }
        }
        b
    }
}

/// alpha = lambda_max of the principal submatrix on the non-constraint
/// vertices, plus a small margin. Estimated by power iteration; a Gershgorin
/// row-sum bound covers the (rare) non-converged case.
pub fn regularization_shift(affinity: &AffinityMatrix, constraint: usize) -> f64 {
    let n = affinity.n();
    assert!(n >= 2);
    let rest: Vec<usize> = (0..n).filter(|&i| i != constraint).collect();
    let sub = affinity.matrix().principal_submatrix(&rest);
    match power_iteration(&sub, POWER_TOL, POWER_MAX_ITER) {
        Some(lambda) => lambda.max(0.0) + ALPHA_MARGIN,
        None => sub.max_row_sum() + ALPHA_MARGIN,
    }
}

/// Largest-magnitude eigenvalue of a symmetric nonnegative matrix. Returns
/// `None` when the residual fails to settle within `max_iter`. Convergence
/// is judged on the eigen-residual ||Mv - lambda v||, not on successive
/// Rayleigh quotients: slow convergence makes successive estimates agree
/// long before the eigenvalue itself is accurate.
pub fn power_iteration(m: &SquareMatrix, tol: f64, max_iter: usize) -> Option<f64> {
    let n = m.n();
    if n == 0 {
        return Some(0.0);
    }
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..max_iter {
        let mut w = m.mul_vec(&v);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Some(0.0); // zero matrix
        }
        for x in &mut w {
            *x /= norm;
        }
        let mw = m.mul_vec(&w);
        let lambda: f64 = mw.iter().zip(&w).map(|(a, b)| a * b).sum();
        let residual: f64 = mw
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt();
        v = w;
        if residual <= tol * lambda.abs().max(1.0) {
            return Some(lambda);
        }
    }
    None
}

/// Result of running the dynamics: the final simplex vector plus flags.
#[derive(Debug, Clone)]
pub struct ReplicatorOutcome {
    pub x: Vec<f64>,
    pub converged: bool,
    pub degenerate: bool,
    pub iterations: usize,
}

/// One multiplicative update x_i <- x_i (Bx)_i / (x'Bx), renormalized onto
/// the simplex. Returns `None` for an all-zero payoff (x'Bx = 0).
pub fn replicator_step(payoff: &SquareMatrix, x: &[f64]) -> Option<Vec<f64>> {
    let bx = payoff.mul_vec(x);
    let xbx: f64 = x.iter().zip(&bx).map(|(a, b)| a * b).sum();
    if xbx <= 0.0 {
        return None;
    }
    let mut next: Vec<f64> = x.iter().zip(&bx).map(|(xi, bi)| xi * bi / xbx).collect();
    let sum: f64 = next.iter().sum();
    if sum > 0.0 {
        for v in &mut next {
            *v /= sum;
        }
    }
    Some(next)
}

/// Iterates from `x0` until the L1 step norm drops below `tol` or
/// `max_iter` is reached.
pub fn replicator_dynamics(
    payoff: &SquareMatrix,
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> ReplicatorOutcome {
    debug_assert!(x0.iter().all(|&v| v > 0.0), "x0 must be strictly positive");
    let mut x = x0.to_vec();
    for iter in 0..max_iter {
        let next = match replicator_step(payoff, &x) {
            Some(v) => v,
            None => {
                return ReplicatorOutcome {
                    x: x0.to_vec(),
                    converged: false,
                    degenerate: true,
                    iterations: iter,
                }
            }
        };
        let step: f64 = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if step < tol {
            return ReplicatorOutcome {
                x,
                converged: true,
                degenerate: false,
                iterations: iter + 1,
            };
        }
    }
    ReplicatorOutcome {
        x,
        converged: false,
        degenerate: false,
        iterations: max_iter,
    }
}

/// Barycenter start vector.
pub fn uniform_simplex(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Cluster membership from a converged characteristic vector: vertices with
/// mass above `support_threshold`, weights renormalized over the members.
/// The constraint vertex must survive; otherwise alpha was too small or the
/// dynamics did not converge.
pub fn extract_cds(
    x: &[f64],
    constraint: usize,
    support_threshold: f64,
) -> Result<Vec<(usize, f64)>, UcdsError> {
    let members: Vec<usize> = (0..x.len()).filter(|&i| x[i] > support_threshold).collect();
    if !members.contains(&constraint) {
        return Err(UcdsError::ConstraintDropped { constraint });
    }
    let total: f64 = members.iter().map(|&i| x[i]).sum();
    Ok(members.into_iter().map(|i| (i, x[i] / total)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ucds::build_affinity;

    fn affinity_from(entries: &[&[f64]]) -> AffinityMatrix {
        let n = entries.len();
        let mut m = SquareMatrix::zeros(n);
        for (i, row) in entries.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        AffinityMatrix(m)
    }

    #[test]
    fn shift_on_zero_submatrix_is_margin() {
        let a = affinity_from(&[&[0.0, 0.0], &[0.0, 0.0]]);
        let alpha = regularization_shift(&a, 0);
        assert!((alpha - ALPHA_MARGIN).abs() < 1e-12);
    }

    #[test]
    fn shift_on_edge_pair_is_one_plus_margin() {
        // constraint 0; submatrix over {1,2} is [[0,1],[1,0]] with lambda_max 1
        let a = affinity_from(&[&[0.0, 0.5, 0.5], &[0.5, 0.0, 1.0], &[0.5, 1.0, 0.0]]);
        let alpha = regularization_shift(&a, 0);
        assert!((alpha - (1.0 + ALPHA_MARGIN)).abs() < 1e-4);
    }

    #[test]
    fn uniform_fixed_point_on_complete_graph() {
        let a = affinity_from(&[&[0.0, 0.7, 0.7], &[0.7, 0.0, 0.7], &[0.7, 0.7, 0.0]]);
        let x0 = uniform_simplex(3);
        let next = replicator_step(a.matrix(), &x0).unwrap();
        for (&a, &b) in x0.iter().zip(&next) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn isolated_vertex_decays() {
        // edge {0,1}, vertex 2 isolated, no constraint shift
        let a = affinity_from(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]);
        let out = replicator_dynamics(a.matrix(), &uniform_simplex(3), 1e-12, 20_000);
        assert!(out.converged);
        assert!((out.x[0] - 0.5).abs() < 1e-6);
        assert!((out.x[1] - 0.5).abs() < 1e-6);
        assert!(out.x[2] < 1e-6);
    }

    #[test]
    fn degenerate_zero_payoff_flagged() {
        let z = SquareMatrix::zeros(3);
        let out = replicator_dynamics(&z, &uniform_simplex(3), 1e-9, 100);
        assert!(out.degenerate);
        assert_eq!(out.x, uniform_simplex(3));
    }

    #[test]
    fn extraction_renormalizes_weights() {
        let members = extract_cds(&[0.5, 0.5, 0.0], 0, 1e-4).unwrap();
        assert_eq!(members.len(), 2);
        let total: f64 = members.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dropped_constraint_is_an_error() {
        let r = extract_cds(&[1e-6, 0.999_999, 0.0], 0, 1e-4);
        assert!(matches!(
            r,
            Err(UcdsError::ConstraintDropped { constraint: 0 })
        ));
    }

    #[test]
    fn constrained_problem_keeps_constraint() {
        // embeddings: constraint user matches vertex 1, orthogonal to 2 and 3
        let embeddings = vec![
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, 1.0],
        ];
        let problem = UcdsProblem::new(build_affinity(&embeddings), 0);
        let out = replicator_dynamics(&problem.payoff(), &uniform_simplex(4), 1e-9, 5_000);
        let members = extract_cds(&out.x, 0, 1e-4).unwrap();
        let ids: Vec<usize> = members.iter().map(|&(i, _)| i).collect();
        assert!(ids.contains(&0));
        assert!(ids.contains(&1));
        assert!(!ids.contains(&2) && !ids.contains(&3));
    }
}
