//! Neural collaborative filtering backbone: a GMF tower and an MLP tower
//! over separate embedding tables, fused by a final linear layer.
//!
//! Layout of `layers`: `layers[0]` is the MLP input width (the concatenated
//! user/item MLP embeddings, so `layers[0] = 2 * latent_dim_mlp`) and each
//! following entry is a ReLU hidden width.

use std::collections::BTreeSet;

use rand_chacha::ChaCha8Rng;

use super::{bce_from_logit, sigmoid, Tensor};

const MF_USER: usize = 0;
const MF_ITEM: usize = 1;
const MLP_USER: usize = 2;
const MLP_ITEM: usize = 3;
const LAYER_BASE: usize = 4;

#[derive(Debug, Clone)]
pub struct NeumfModel {
    mf_user: Tensor,
    mf_item: Tensor,
    mlp_user: Tensor,
    mlp_item: Tensor,
    /// Hidden layer weights, `layer_w[l]` is layers[l+1] x layers[l].
    layer_w: Vec<Tensor>,
    layer_b: Vec<Tensor>,
    /// 1 x (latent_dim_mf + layers.last()).
    fusion_w: Tensor,
    fusion_b: Tensor,
    layers: Vec<usize>,
}

impl NeumfModel {
    pub fn init(
        n_users: usize,
        n_items: usize,
        dim_mf: usize,
        dim_mlp: usize,
        layers: &[usize],
        rng: &mut ChaCha8Rng,
    ) -> Self {
        assert_eq!(layers[0], 2 * dim_mlp);
        let mut layer_w = Vec::new();
        let mut layer_b = Vec::new();
        for win in layers.windows(2) {
            layer_w.push(Tensor::gaussian(win[1], win[0], 0.01, rng));
            layer_b.push(Tensor::zeros(1, win[1]));
        }
        let fusion_in = dim_mf + layers.last().unwrap();
        Self {
            mf_user: Tensor::gaussian(n_users, dim_mf, 0.01, rng),
            mf_item: Tensor::gaussian(n_items, dim_mf, 0.01, rng),
            mlp_user: Tensor::gaussian(n_users, dim_mlp, 0.01, rng),
            mlp_item: Tensor::gaussian(n_items, dim_mlp, 0.01, rng),
            layer_w,
            layer_b,
            fusion_w: Tensor::gaussian(1, fusion_in, 0.01, rng),
            fusion_b: Tensor::zeros(1, 1),
            layers: layers.to_vec(),
        }
    }

    pub fn n_users(&self) -> usize {
        self.mf_user.rows()
    }

    pub fn n_items(&self) -> usize {
        self.mf_item.rows()
    }

    pub fn dim_mf(&self) -> usize {
        self.mf_user.cols()
    }

    pub fn dim_mlp(&self) -> usize {
        self.mlp_user.cols()
    }

    pub fn layers(&self) -> &[usize] {
        &self.layers
    }

    pub fn embedding_dim(&self) -> usize {
        self.dim_mf() + self.dim_mlp()
    }

    /// Pre-sigmoid fusion output together with the intermediate
    /// activations needed for backprop.
    fn forward(&self, user: usize, item: usize) -> Forward {
        let mf_u = self.mf_user.row(user);
        let mf_i = self.mf_item.row(item);
        let gmf: Vec<f64> = mf_u.iter().zip(mf_i).map(|(a, b)| a * b).collect();

        let mut acts = Vec::with_capacity(self.layers.len());
        let mut z: Vec<f64> = self
            .mlp_user
            .row(user)
            .iter()
            .chain(self.mlp_item.row(item))
            .copied()
            .collect();
        acts.push(z.clone());
        for (w, b) in self.layer_w.iter().zip(&self.layer_b) {
            let mut next = vec![0.0; w.rows()];
            for (r, out) in next.iter_mut().enumerate() {
                *out = (dot(w.row(r), &z) + b.data()[r]).max(0.0);
            }
            z = next;
            acts.push(z.clone());
        }

        let fw = self.fusion_w.row(0);
        let dmf = gmf.len();
        let logit = dot(&fw[..dmf], &gmf) + dot(&fw[dmf..], &z) + self.fusion_b.data()[0];
        Forward { gmf, acts, logit }
    }

    pub fn score(&self, user: usize, item: usize) -> f64 {
        sigmoid(self.forward(user, item).logit)
    }

    pub fn user_embedding(&self, user: usize) -> Vec<f64> {
        let mut e = self.mf_user.row(user).to_vec();
        e.extend_from_slice(self.mlp_user.row(user));
        e
    }

    pub fn params(&self) -> Vec<&Tensor> {
        let mut p = vec![&self.mf_user, &self.mf_item, &self.mlp_user, &self.mlp_item];
        for (w, b) in self.layer_w.iter().zip(&self.layer_b) {
            p.push(w);
            p.push(b);
        }
        p.push(&self.fusion_w);
        p.push(&self.fusion_b);
        p
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p: Vec<&mut Tensor> = vec![
            &mut self.mf_user,
            &mut self.mf_item,
            &mut self.mlp_user,
            &mut self.mlp_item,
        ];
        for (w, b) in self.layer_w.iter_mut().zip(self.layer_b.iter_mut()) {
            p.push(w);
            p.push(b);
        }
        p.push(&mut self.fusion_w);
        p.push(&mut self.fusion_b);
        p
    }

    pub fn loss_and_grad(
        &self,
        batch: &[(usize, usize, f64)],
        l2: f64,
        grads: &mut [Tensor],
    ) -> f64 {
        assert!(!batch.is_empty());
        let inv_b = 1.0 / batch.len() as f64;
        let dmf = self.dim_mf();
        let dmlp = self.dim_mlp();
        let n_hidden = self.layer_w.len();
        let fusion_w_idx = LAYER_BASE + 2 * n_hidden;
        let fusion_b_idx = fusion_w_idx + 1;

        let mut loss = 0.0;
        let mut touched_users = BTreeSet::new();
        let mut touched_items = BTreeSet::new();
        for &(user, item, label) in batch {
            let fwd = self.forward(user, item);
            loss += bce_from_logit(fwd.logit, label) * inv_b;
            let dz = (sigmoid(fwd.logit) - label) * inv_b;

            let fw = self.fusion_w.row(0);
            let top = &fwd.acts[n_hidden];
            {
                let gf = grads[fusion_w_idx].row_mut(0);
                for (k, &g) in fwd.gmf.iter().enumerate() {
                    gf[k] += dz * g;
                }
                for (k, &a) in top.iter().enumerate() {
                    gf[dmf + k] += dz * a;
                }
                grads[fusion_b_idx].data_mut()[0] += dz;
            }

            // GMF branch
            let mf_u = self.mf_user.row(user);
            let mf_i = self.mf_item.row(item);
            for k in 0..dmf {
                let dgmf = dz * fw[k];
                grads[MF_USER].row_mut(user)[k] += dgmf * mf_i[k];
                grads[MF_ITEM].row_mut(item)[k] += dgmf * mf_u[k];
            }

            // MLP branch
            let mut d_act: Vec<f64> = fw[dmf..].iter().map(|&w| dz * w).collect();
            for l in (0..n_hidden).rev() {
                let w = &self.layer_w[l];
                let input = &fwd.acts[l];
                let output = &fwd.acts[l + 1];
                let mut d_input = vec![0.0; input.len()];
                for r in 0..w.rows() {
                    // ReLU gate: gradient flows only through active units
                    if output[r] <= 0.0 {
                        continue;
                    }
                    let dpre = d_act[r];
                    let gw = grads[LAYER_BASE + 2 * l].row_mut(r);
                    for (c, &x) in input.iter().enumerate() {
                        gw[c] += dpre * x;
                    }
                    grads[LAYER_BASE + 2 * l + 1].data_mut()[r] += dpre;
                    for (c, &wv) in w.row(r).iter().enumerate() {
                        d_input[c] += dpre * wv;
                    }
                }
                d_act = d_input;
            }
            for k in 0..dmlp {
                grads[MLP_USER].row_mut(user)[k] += d_act[k];
                grads[MLP_ITEM].row_mut(item)[k] += d_act[dmlp + k];
            }

            touched_users.insert(user);
            touched_items.insert(item);
        }

        if l2 > 0.0 {
            for &user in &touched_users {
                for table in [MF_USER, MLP_USER] {
                    let row = self.params()[table].row(user).to_vec();
                    loss += l2 * dot(&row, &row);
                    for (g, &x) in grads[table].row_mut(user).iter_mut().zip(&row) {
                        *g += 2.0 * l2 * x;
                    }
                }
            }
            for &item in &touched_items {
                for table in [MF_ITEM, MLP_ITEM] {
                    let row = self.params()[table].row(item).to_vec();
                    loss += l2 * dot(&row, &row);
                    for (g, &x) in grads[table].row_mut(item).iter_mut().zip(&row) {
                        *g += 2.0 * l2 * x;
                    }
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
        let dmf = self.dim_mf();
        for (g, &d) in grads[MF_USER].row_mut(user).iter_mut().zip(&grad[..dmf]) {
            *g += scale * d;
        }
        for (g, &d) in grads[MLP_USER].row_mut(user).iter_mut().zip(&grad[dmf..]) {
            *g += scale * d;
        }
    }
}

struct Forward {
    gmf: Vec<f64>,
    /// acts[0] is the MLP input, acts[l] the l-th hidden activation.
    acts: Vec<Vec<f64>>,
    logit: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
