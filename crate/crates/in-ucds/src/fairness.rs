//! Stage-two fairness loss: squared distance between each disadvantaged
//! user's embedding and the weighted mean of its matched advantaged users.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::model::{BackboneModel, Tensor};
use crate::ucds::ClusterAssignment;

/// Which pairing drives the fairness term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum FairnessMethod {
    /// Backbone only; the fairness loss is logged but never optimized.
    #[serde(rename = "original")]
    Original,
    /// Constrained dominant-set pairing, refreshed from live embeddings.
    #[serde(rename = "in-ucds")]
    InUcds,
    /// Co-interaction-count pairing, computed once from train data.
    #[serde(rename = "in-naive")]
    InNaive,
}

impl FromStr for FairnessMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "original" => Ok(FairnessMethod::Original),
            "in-ucds" => Ok(FairnessMethod::InUcds),
            "in-naive" => Ok(FairnessMethod::InNaive),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

impl fmt::Display for FairnessMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FairnessMethod::Original => write!(f, "original"),
            FairnessMethod::InUcds => write!(f, "in-ucds"),
            FairnessMethod::InNaive => write!(f, "in-naive"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FairnessConfig {
    pub method: FairnessMethod,
    /// Weight of the fairness term in the combined loss.
    pub weight: f64,
    /// Cluster refresh cadence in epochs (in-ucds only).
    pub refresh_period: usize,
    /// Partner count for the in-naive pairing.
    pub naive_k: usize,
}

impl Default for FairnessConfig {
    fn default() -> Self {
        Self {
            method: FairnessMethod::InUcds,
            weight: 0.1,
            refresh_period: 1,
            naive_k: 5,
        }
    }
}

impl FairnessConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.weight < 0.0 {
            return Err("fairness weight must be >= 0".into());
        }
        match self.method {
            FairnessMethod::Original if self.weight != 0.0 => {
                Err("method `original` requires lambda = 0".into())
            }
            FairnessMethod::InUcds | FairnessMethod::InNaive if self.weight == 0.0 => {
                Err(format!("method `{}` requires lambda > 0", self.method))
            }
            _ if self.refresh_period == 0 => Err("refresh_period must be >= 1".into()),
            _ if self.naive_k == 0 => Err("naive_k must be >= 1".into()),
            _ => Ok(()),
        }
    }
}

/// One logged point of the fairness curve.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FairnessCurvePoint {
    pub epoch: usize,
    pub method: String,
    pub l_fairness: f64,
}

/// Writes `epoch,method,l_fairness` rows.
pub fn write_curve(points: &[FairnessCurvePoint], path: &Path) -> std::io::Result<()> {
    let mut out = String::from("epoch,method,l_fairness\n");
    for p in points {
        out.push_str(&format!("{},{},{:.6}\n", p.epoch, p.method, p.l_fairness));
    }
    fs::write(path, out)
}

/// Mean squared distance between each batch disadvantaged user's embedding
/// and its weight-averaged partner embedding. Returns the loss value and
/// the gradient w.r.t. each contributing user's embedding (partners are
/// treated as constants, so advantaged representations are never dragged).
pub fn fairness_loss(
    model: &BackboneModel,
    assignment: &ClusterAssignment,
    batch_users: &BTreeSet<usize>,
) -> (f64, Vec<(usize, Vec<f64>)>) {
    let contributors: Vec<usize> = batch_users
        .iter()
        .copied()
        .filter(|&u| assignment.partners_of(u).is_some_and(|p| !p.is_empty()))
        .collect();
    if contributors.is_empty() {
        return (0.0, Vec::new());
    }
    let inv_n = 1.0 / contributors.len() as f64;
    let mut loss = 0.0;
    let mut grads = Vec::with_capacity(contributors.len());
    for &user in &contributors {
        let e_d = model.user_embedding(user);
        let partners = assignment.partners_of(user).unwrap();
        let mut anchor = vec![0.0; e_d.len()];
        for &(a, w) in partners {
            for (acc, v) in anchor.iter_mut().zip(model.user_embedding(a)) {
                *acc += w * v;
            }
        }
        let diff: Vec<f64> = e_d.iter().zip(&anchor).map(|(d, a)| d - a).collect();
        loss += diff.iter().map(|x| x * x).sum::<f64>() * inv_n;
        let grad: Vec<f64> = diff.iter().map(|x| 2.0 * x * inv_n).collect();
        grads.push((user, grad));
    }
    (loss, grads)
}

/// Backbone loss plus `lambda` times the fairness loss. Gradients for both
/// terms accumulate into `grads`. With `lambda = 0` the fairness path is
/// skipped entirely, so the gradient stream is bitwise identical to the
/// backbone alone.
pub fn combined_loss(
    model: &BackboneModel,
    batch: &[(usize, usize, f64)],
    assignment: &ClusterAssignment,
    lambda: f64,
    l2: f64,
    grads: &mut [Tensor],
) -> (f64, f64) {
    let backbone = model.loss_and_grad(batch, l2, grads);
    if lambda == 0.0 {
        return (backbone, 0.0);
    }
    let batch_users: BTreeSet<usize> = batch.iter().map(|&(u, _, _)| u).collect();
    let (l_fair, fair_grads) = fairness_loss(model, assignment, &batch_users);
    for (user, grad) in &fair_grads {
        model.add_user_embedding_grad(*user, grad, lambda, grads);
    }
    (backbone + lambda * l_fair, l_fair)
}

/// Fairness value only, for curve logging (no gradient side effects).
pub fn fairness_value(
    model: &BackboneModel,
    assignment: &ClusterAssignment,
    batch: &[(usize, usize, f64)],
) -> f64 {
    let batch_users: BTreeSet<usize> = batch.iter().map(|&(u, _, _)| u).collect();
    fairness_loss(model, assignment, &batch_users).0
}
