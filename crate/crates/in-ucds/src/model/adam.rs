//! Adam with bias correction. Only the learning rate is exposed; the moment
//! constants stay at the conventional values.

use super::{ModelError, Tensor};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: u64,
}

impl AdamState {
    /// Fresh state shaped like `params`.
    pub fn new(params: &[&Tensor]) -> Self {
        let zeros = |p: &[&Tensor]| {
            p.iter()
                .map(|t| Tensor::zeros(t.rows(), t.cols()))
                .collect::<Vec<_>>()
        };
        Self {
            m: zeros(params),
            v: zeros(params),
            t: 0,
        }
    }

    pub fn from_parts(m: Vec<Tensor>, v: Vec<Tensor>, t: u64) -> Self {
        Self { m, v, t }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn moments(&self) -> (&[Tensor], &[Tensor]) {
        (&self.m, &self.v)
    }

    /// One Adam update over all parameters. Rejects non-finite gradients so
    /// a diverged batch aborts instead of poisoning the moments.
    pub fn step(
        &mut self,
        params: &mut [&mut Tensor],
        grads: &[Tensor],
        lr: f64,
    ) -> Result<(), ModelError> {
        assert_eq!(params.len(), grads.len());
        for (idx, g) in grads.iter().enumerate() {
            if g.data().iter().any(|x| !x.is_finite()) {
                return Err(ModelError::NonFiniteGradient {
                    tensor: idx,
                    epoch: 0,
                    batch: 0,
                });
            }
        }
        self.t += 1;
        let bc1 = 1.0 - BETA1.powi(self.t as i32);
        let bc2 = 1.0 - BETA2.powi(self.t as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            let pd = p.data_mut();
            let gd = g.data();
            let md = m.data_mut();
            let vd = v.data_mut();
            for k in 0..pd.len() {
                md[k] = BETA1 * md[k] + (1.0 - BETA1) * gd[k];
                vd[k] = BETA2 * vd[k] + (1.0 - BETA2) * gd[k] * gd[k];
                let m_hat = md[k] / bc1;
                let v_hat = vd[k] / bc2;
                pd[k] -= lr * m_hat / (v_hat.sqrt() + EPSILON);
            }
        }
        Ok(())
    }
}
