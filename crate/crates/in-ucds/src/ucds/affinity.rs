//! User-similarity affinity graphs.

use super::SquareMatrix;

/// Symmetric affinity matrix with entries in [0, 1] and a zero diagonal.
#[derive(Debug, Clone)]
pub struct AffinityMatrix(pub(crate) SquareMatrix);

impl AffinityMatrix {
    /// Wraps a raw matrix. The caller vouches for symmetry, entries in
    /// [0, 1], and a zero diagonal.
    pub fn from_matrix(m: SquareMatrix) -> Self {
        debug_assert!((0..m.n()).all(|i| m.get(i, i) == 0.0));
        AffinityMatrix(m)
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.0
    }
}

/// Nonnegative-clamped cosine similarity over each embedding pair. A zero
/// vector yields an all-zero affinity row (warned, not fatal).
pub fn build_affinity(embeddings: &[Vec<f64>]) -> AffinityMatrix {
    let n = embeddings.len();
    assert!(n >= 2, "affinity needs at least two vectors");
    let norms: Vec<f64> = embeddings
        .iter()
        .map(|e| e.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    for (i, &nm) in norms.iter().enumerate() {
        if nm == 0.0 {
            log::warn!("zero embedding at vertex {i}; affinity row set to zero");
        }
    }
    let mut m = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if norms[i] == 0.0 || norms[j] == 0.0 {
                continue;
            }
            let dot: f64 = embeddings[i]
                .iter()
                .zip(&embeddings[j])
                .map(|(a, b)| a * b)
                .sum();
            let sim = (dot / (norms[i] * norms[j])).clamp(0.0, 1.0);
            m.set(i, j, sim);
            m.set(j, i, sim);
        }
    }
    AffinityMatrix(m)
}

/// Clamped cosine similarity of a single pair.
pub fn cosine_affinity(a: &[f64], b: &[f64]) -> f64 {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    (dot / (na * nb)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_vectors_have_affinity_one() {
        let a = build_affinity(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!((a.get(0, 1) - 1.0).abs() < 1e-12);
        assert_eq!(a.get(0, 0), 0.0);
    }

    #[test]
    fn orthogonal_vectors_have_affinity_zero() {
        let a = build_affinity(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(a.get(0, 1), 0.0);
    }

    #[test]
    fn opposite_vectors_clamp_to_zero() {
        let a = build_affinity(&[vec![1.0, 1.0], vec![-1.0, -1.0]]);
        assert_eq!(a.get(0, 1), 0.0);
    }

    #[test]
    fn zero_vector_gives_zero_row() {
        let a = build_affinity(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]]);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.get(0, 2), 0.0);
        assert!(a.get(1, 2) > 0.0);
    }

    #[test]
    fn matrix_is_symmetric() {
        let vecs: Vec<Vec<f64>> = (0..5)
            .map(|i| (0..3).map(|k| ((i * 3 + k) as f64).sin()).collect())
            .collect();
        let a = build_affinity(&vecs);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(a.get(i, j), a.get(j, i));
                assert!(a.get(i, j) >= 0.0 && a.get(i, j) <= 1.0);
            }
        }
    }
}
