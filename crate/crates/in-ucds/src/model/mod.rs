//! Backbone recommendation models: parameter stores, forward scoring, and
//! analytic gradients.

mod adam;
mod checkpoint;
mod neumf;
mod pmf;

pub use adam::AdamState;
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
pub use neumf::NeumfModel;
pub use pmf::PmfModel;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeding::{rng_for, stream};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("non-finite gradient in tensor {tensor} (epoch {epoch}, batch {batch})")]
    NonFiniteGradient {
        tensor: usize,
        epoch: usize,
        batch: usize,
    },
    #[error("checkpoint io on {path}: {source}")]
    CheckpointIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported checkpoint format version {0}")]
    VersionMismatch(u32),
    #[error("checkpoint checksum mismatch (truncated or corrupted file)")]
    Checksum,
    #[error("checkpoint holds a {found:?} model, expected {expected:?}")]
    KindMismatch {
        found: ModelKind,
        expected: ModelKind,
    },
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
}

/// Dense row-major matrix of trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn gaussian(rows: usize, cols: usize, std_dev: f64, rng: &mut ChaCha8Rng) -> Self {
        let normal = Normal::new(0.0, std_dev).expect("valid std dev");
        let data = (0..rows * cols).map(|_| normal.sample(rng)).collect();
        Self { rows, cols, data }
    }

    pub fn from_data(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }
}

/// Which backbone architecture a parameter store belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Pmf,
    Neumf,
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pmf" => Ok(ModelKind::Pmf),
            "neumf" => Ok(ModelKind::Neumf),
            other => Err(format!("unknown model kind `{other}`")),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Pmf => write!(f, "pmf"),
            ModelKind::Neumf => write!(f, "neumf"),
        }
    }
}

/// Training hyperparameters shared by both backbones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub num_epoch: usize,
    pub batch_size: usize,
    pub adam_lr: f64,
    pub latent_dim_mf: usize,
    pub latent_dim_mlp: usize,
    pub num_negative: usize,
    pub layers: Vec<usize>,
    pub l2_regularization: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            num_epoch: 50,
            batch_size: 256,
            adam_lr: 1e-3,
            latent_dim_mf: 8,
            latent_dim_mlp: 8,
            num_negative: 4,
            layers: vec![16, 8],
            l2_regularization: 1e-5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |msg: String| Err(ModelError::Config(msg));
        if self.num_epoch == 0 {
            return err("num_epoch must be >= 1".into());
        }
        if self.batch_size == 0 {
            return err("batch_size must be >= 1".into());
        }
        if !self.adam_lr.is_finite() || self.adam_lr <= 0.0 {
            return err(format!("adam_lr must be > 0, got {}", self.adam_lr));
        }
        if self.latent_dim_mf == 0 || self.latent_dim_mlp == 0 {
            return err("latent dimensions must be >= 1".into());
        }
        if self.num_negative == 0 {
            return err("num_negative must be >= 1".into());
        }
        if self.layers.is_empty() || self.layers.contains(&0) {
            return err("layers must be non-empty with positive dimensions".into());
        }
        if self.layers[0] != 2 * self.latent_dim_mlp {
            return err(format!(
                "layers[0] must equal 2 * latent_dim_mlp ({} != {})",
                self.layers[0],
                2 * self.latent_dim_mlp
            ));
        }
        if self.l2_regularization < 0.0 {
            return err("l2_regularization must be >= 0".into());
        }
        Ok(())
    }
}

/// Backbone parameter store. Scoring and embedding reads are safe against a
/// frozen clone; training mutates through `params_mut`.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)] // both variants are heap-heavy parameter stores
pub enum BackboneModel {
    Pmf(PmfModel),
    Neumf(NeumfModel),
}

impl BackboneModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            BackboneModel::Pmf(_) => ModelKind::Pmf,
            BackboneModel::Neumf(_) => ModelKind::Neumf,
        }
    }

    pub fn n_users(&self) -> usize {
        match self {
            BackboneModel::Pmf(m) => m.n_users(),
            BackboneModel::Neumf(m) => m.n_users(),
        }
    }

    pub fn n_items(&self) -> usize {
        match self {
            BackboneModel::Pmf(m) => m.n_items(),
            BackboneModel::Neumf(m) => m.n_items(),
        }
    }

    /// Predicted preference of `user` for `item`. PMF returns the raw dot
    /// product; NeuMF a sigmoid-squashed fusion output in (0, 1).
    pub fn score(&self, user: usize, item: usize) -> f64 {
        match self {
            BackboneModel::Pmf(m) => m.score(user, item),
            BackboneModel::Neumf(m) => m.score(user, item),
        }
    }

    /// The user representation consumed by the fairness loss. PMF: the
    /// factor row; NeuMF: GMF and MLP user embeddings concatenated.
    pub fn user_embedding(&self, user: usize) -> Vec<f64> {
        match self {
            BackboneModel::Pmf(m) => m.user_embedding(user),
            BackboneModel::Neumf(m) => m.user_embedding(user),
        }
    }

    pub fn embedding_dim(&self) -> usize {
        match self {
            BackboneModel::Pmf(m) => m.dim(),
            BackboneModel::Neumf(m) => m.embedding_dim(),
        }
    }

    pub fn params(&self) -> Vec<&Tensor> {
        match self {
            BackboneModel::Pmf(m) => m.params(),
            BackboneModel::Neumf(m) => m.params(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            BackboneModel::Pmf(m) => m.params_mut(),
            BackboneModel::Neumf(m) => m.params_mut(),
        }
    }

    /// Zero tensors shaped like `params()`, for gradient accumulation.
    pub fn zero_grads(&self) -> Vec<Tensor> {
        self.params()
            .iter()
            .map(|t| Tensor::zeros(t.rows(), t.cols()))
            .collect()
    }

    /// Mean binary cross-entropy over the batch plus l2-weighted squared
    /// norms of the embedding rows the batch touches. Gradients are
    /// accumulated into `grads` (aligned with `params()`).
    pub fn loss_and_grad(
        &self,
        batch: &[(usize, usize, f64)],
        l2: f64,
        grads: &mut [Tensor],
    ) -> f64 {
        match self {
            BackboneModel::Pmf(m) => m.loss_and_grad(batch, l2, grads),
            BackboneModel::Neumf(m) => m.loss_and_grad(batch, l2, grads),
        }
    }

    /// Routes a gradient w.r.t. `user_embedding(user)` back onto the
    /// underlying embedding rows, scaled by `scale`.
    pub fn add_user_embedding_grad(
        &self,
        user: usize,
        grad: &[f64],
        scale: f64,
        grads: &mut [Tensor],
    ) {
        match self {
            BackboneModel::Pmf(m) => m.add_user_embedding_grad(user, grad, scale, grads),
            BackboneModel::Neumf(m) => m.add_user_embedding_grad(user, grad, scale, grads),
        }
    }
}

/// Initializes a backbone with Gaussian(0, 0.01^2) weights and zero biases.
/// Deterministic for a given config seed.
pub fn init_model(
    kind: ModelKind,
    config: &TrainConfig,
    n_users: usize,
    n_items: usize,
) -> Result<BackboneModel, ModelError> {
    config.validate()?;
    let mut rng = rng_for(config.seed, stream::INIT, 0);
    Ok(match kind {
        ModelKind::Pmf => BackboneModel::Pmf(PmfModel::init(
            n_users,
            n_items,
            config.latent_dim_mf,
            &mut rng,
        )),
        ModelKind::Neumf => BackboneModel::Neumf(NeumfModel::init(
            n_users,
            n_items,
            config.latent_dim_mf,
            config.latent_dim_mlp,
            &config.layers,
            &mut rng,
        )),
    })
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable BCE from the pre-sigmoid logit.
pub(crate) fn bce_from_logit(logit: f64, label: f64) -> f64 {
    logit.max(0.0) - logit * label + (1.0 + (-logit.abs()).exp()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_deterministic() {
        let cfg = TrainConfig::default();
        let a = init_model(ModelKind::Neumf, &cfg, 4, 5).unwrap();
        let b = init_model(ModelKind::Neumf, &cfg, 4, 5).unwrap();
        for (ta, tb) in a.params().iter().zip(b.params()) {
            assert_eq!(ta.data(), tb.data());
        }
    }

    #[test]
    fn layer_shape_rule() {
        let mut cfg = TrainConfig {
            layers: vec![16, 8],
            latent_dim_mlp: 8,
            ..TrainConfig::default()
        };
        assert!(cfg.validate().is_ok());
        cfg.layers = vec![10, 8];
        assert!(matches!(cfg.validate(), Err(ModelError::Config(_))));
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert!(sigmoid(-800.0) >= 0.0);
        assert!(sigmoid(800.0) <= 1.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bce_at_zero_logit_is_ln2() {
        assert!((bce_from_logit(0.0, 1.0) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((bce_from_logit(0.0, 0.0) - std::f64::consts::LN_2).abs() < 1e-12);
    }
}
