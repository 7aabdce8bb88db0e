//! Matrix-factorization backbone with implicit labels through a sigmoid
//! link. The Gaussian-prior formulation reduces to L2-regularized MF, so
//! regularization rides on the shared `l2` weight.

use std::collections::BTreeSet;

use rand_chacha::ChaCha8Rng;

use super::{bce_from_logit, sigmoid, Tensor};

#[derive(Debug, Clone)]
pub struct PmfModel {
    user_factors: Tensor,
    item_factors: Tensor,
}

impl PmfModel {
    pub fn init(n_users: usize, n_items: usize, dim: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            user_factors: Tensor::gaussian(n_users, dim, 0.01, rng),
            item_factors: Tensor::gaussian(n_items, dim, 0.01, rng),
        }
    }

    pub fn from_tensors(user_factors: Tensor, item_factors: Tensor) -> Self {
        assert_eq!(user_factors.cols(), item_factors.cols());
        Self {
            user_factors,
            item_factors,
        }
    }

    pub fn n_users(&self) -> usize {
        self.user_factors.rows()
    }

    pub fn n_items(&self) -> usize {
        self.item_factors.rows()
    }

    pub fn dim(&self) -> usize {
        self.user_factors.cols()
    }

    pub fn score(&self, user: usize, item: usize) -> f64 {
        dot(self.user_factors.row(user), self.item_factors.row(item))
    }

    pub fn user_embedding(&self, user: usize) -> Vec<f64> {
        self.user_factors.row(user).to_vec()
    }

    pub fn params(&self) -> Vec<&Tensor> {
        vec![&self.user_factors, &self.item_factors]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.user_factors, &mut self.item_factors]
    }

    pub fn loss_and_grad(
        &self,
        batch: &[(usize, usize, f64)],
        l2: f64,
        grads: &mut [Tensor],
    ) -> f64 {
        assert!(!batch.is_empty());
        let inv_b = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        let mut touched_users = BTreeSet::new();
        let mut touched_items = BTreeSet::new();
        for &(user, item, label) in batch {
            let u = self.user_factors.row(user);
            let v = self.item_factors.row(item);
            let logit = dot(u, v);
            loss += bce_from_logit(logit, label) * inv_b;
            let dz = (sigmoid(logit) - label) * inv_b;
            let gu = grads[0].row_mut(user);
            for (g, &vk) in gu.iter_mut().zip(v) {
                *g += dz * vk;
            }
            let gv = grads[1].row_mut(item);
            for (g, &uk) in gv.iter_mut().zip(u) {
                *g += dz * uk;
            }
            touched_users.insert(user);
            touched_items.insert(item);
        }
        if l2 > 0.0 {
            for &user in &touched_users {
                let row = self.user_factors.row(user);
                loss += l2 * dot(row, row);
                for (g, &x) in grads[0].row_mut(user).iter_mut().zip(row) {
                    *g += 2.0 * l2 * x;
                }
            }
            for &item in &touched_items {
                let row = self.item_factors.row(item);
                loss += l2 * dot(row, row);
                for (g, &x) in grads[1].row_mut(item).iter_mut().zip(row) {
                    *g += 2.0 * l2 * x;
                }
            }
        }
        loss
    }

    pub fn add_user_embedding_grad(
        &self,
        user: usize,
        grad: &[f64],
        scale: f64,
        grads: &mut [Tensor],
    ) {
        for (g, &d) in grads[0].row_mut(user).iter_mut().zip(grad) {
            *g += scale * d;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BackboneModel;

    fn tiny() -> PmfModel {
        let u = Tensor::from_data(2, 2, vec![1.0, 2.0, -1.0, 0.5]);
        let v = Tensor::from_data(2, 2, vec![3.0, 4.0, 0.0, 1.0]);
        PmfModel::from_tensors(u, v)
    }

    #[test]
    fn score_is_dot_product() {
        let m = tiny();
        assert_eq!(m.score(0, 0), 11.0);
        assert_eq!(m.score(0, 1), 2.0);
    }

    #[test]
    fn embedding_is_factor_row() {
        let m = tiny();
        assert_eq!(m.user_embedding(1), vec![-1.0, 0.5]);
    }

    #[test]
    fn zero_l2_gives_pure_bce() {
        let m = BackboneModel::Pmf(tiny());
        let batch = vec![(0usize, 0usize, 1.0), (1, 1, 0.0)];
        let mut g0 = m.zero_grads();
        let mut g1 = m.zero_grads();
        let base = m.loss_and_grad(&batch, 0.0, &mut g0);
        let reg = m.loss_and_grad(&batch, 0.1, &mut g1);
        assert!(reg > base);
        let expected = (bce_from_logit(11.0, 1.0) + bce_from_logit(0.5, 0.0)) / 2.0;
        assert!((base - expected).abs() < 1e-12);
    }

    #[test]
    fn embedding_grad_routes_to_user_row() {
        let m = BackboneModel::Pmf(tiny());
        let mut grads = m.zero_grads();
        m.add_user_embedding_grad(1, &[1.0, -2.0], 0.5, &mut grads);
        assert_eq!(grads[0].row(1), &[0.5, -1.0]);
        assert!(grads[0].row(0).iter().all(|&g| g == 0.0));
        assert!(grads[1].data().iter().all(|&g| g == 0.0));
    }
}
