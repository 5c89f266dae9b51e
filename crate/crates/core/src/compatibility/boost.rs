use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::features::{FEATURE_NAMES, FEATURE_SCHEMA_VERSION};
use super::tree::{DecisionTree, Learner, LearnerFactory};

/// Floor applied to a round's weighted error so that a perfect learner gets
/// a large but finite weight.
pub const MIN_ROUND_ERROR: f64 = 1e-6;

/// Learner weight for a round with weighted error `e`:
/// `alpha = 0.5 * ln((1 - e) / e)`, with `e` floored at `MIN_ROUND_ERROR`
/// (and capped symmetrically).
pub fn alpha_from_error(e: f64) -> f64 {
    let e = e.clamp(MIN_ROUND_ERROR, 1.0 - MIN_ROUND_ERROR);
    0.5 * ((1.0 - e) / e).ln()
}

/// Discrete vote of a probabilistic prediction: +1 when `y_hat >= p`.
#[inline]
pub fn to_vote(y_hat: f64, p: f64) -> f64 {
    if y_hat >= p {
        1.0
    } else {
        -1.0
    }
}

/// `w_i <- w_i * exp(-y_i * alpha * G(x_i))`, then renormalise to sum 1.
/// Labels and votes are in {-1, +1}.
pub fn update_weights(weights: &mut [f64], labels: &[f64], votes: &[f64], alpha: f64) {
    for ((w, y), g) in weights.iter_mut().zip(labels).zip(votes) {
        *w *= (-y * alpha * g).exp();
    }
    let total: f64 = weights.iter().sum();
    if total > 0.0 && total.is_finite() {
        for w in weights.iter_mut() {
            *w /= total;
        }
    }
}

/// Per-round record kept for inspection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundStats {
    pub error: f64,
    pub alpha: f64,
}

/// Weighted vote of trained learners.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostEnsemble<L = DecisionTree> {
    pub learners: Vec<L>,
    pub alphas: Vec<f64>,
    /// Probability threshold turning a learner's output into a vote.
    pub p: f64,
    pub rounds: Vec<RoundStats>,
}

impl<L: Learner> BoostEnsemble<L> {
    /// Signed margin `sum_k alpha_k * G_k(x)` with votes in {-1, +1}.
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.learners
            .iter()
            .zip(&self.alphas)
            .map(|(l, a)| a * to_vote(l.predict(x), self.p))
            .sum()
    }

    /// Alignment score: the logistic of the margin. `gamma >= 0.5` exactly
    /// when the weighted vote is non-negative.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let m = self.margin(x);
        1.0 / (1.0 + (-m).exp())
    }

    pub fn classify(&self, x: &[f64]) -> bool {
        self.margin(x) >= 0.0
    }
}

/// Boosted training over labelled feature vectors.
///
/// Starts from uniform weights `1/n`; each round trains a learner on the
/// current weights, turns its outputs into votes at `p = 0.5`, measures the
/// weighted error, sets the learner weight from it and re-weights the
/// samples towards the ones this learner got wrong.
pub fn boost_train<F: LearnerFactory>(
    xs: &[Vec<f64>],
    ys: &[bool],
    rounds: usize,
    factory: &F,
) -> Result<BoostEnsemble<F::Output>> {
    if rounds == 0 {
        return Err(Error::Parameter("at least one boosting round is required".into()));
    }
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::InvalidInput("training set is empty or labels do not match".into()));
    }
    if !ys.iter().any(|&y| y) {
        return Err(Error::Imbalance);
    }
    let p = 0.5;
    let n = xs.len();
    let labels: Vec<f64> = ys.iter().map(|&y| if y { 1.0 } else { -1.0 }).collect();
    let mut weights = vec![1.0 / n as f64; n];
    let mut ensemble = BoostEnsemble {
        learners: Vec::with_capacity(rounds),
        alphas: Vec::with_capacity(rounds),
        p,
        rounds: Vec::with_capacity(rounds),
    };
    for k in 0..rounds {
        let learner = factory.train(xs, ys, &weights);
        let votes: Vec<f64> = xs.iter().map(|x| to_vote(learner.predict(x), p)).collect();
        let error = weights
            .iter()
            .zip(&labels)
            .zip(&votes)
            .filter(|((_, y), g)| y != g)
            .fold(0.0, |acc, ((w, _), _)| acc + w);
        if error >= 0.5 {
            log::warn!("boosting round {k}: weighted error {error:.4} is no better than chance");
        }
        let alpha = alpha_from_error(error);
        update_weights(&mut weights, &labels, &votes, alpha);
        ensemble.learners.push(learner);
        ensemble.alphas.push(alpha);
        ensemble.rounds.push(RoundStats { error, alpha });
    }
    Ok(ensemble)
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    features: Vec<String>,
    ensemble: BoostEnsemble<DecisionTree>,
}

pub fn save_model(path: &Path, e: &BoostEnsemble<DecisionTree>) -> Result<()> {
    let file = ModelFile {
        schema_version: FEATURE_SCHEMA_VERSION,
        features: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        ensemble: e.clone(),
    };
    let text = serde_json::to_string_pretty(&file).expect("model serializes");
    fs::write(path, text).map_err(|err| Error::io(path, err))
}

pub fn load_model(path: &Path) -> Result<BoostEnsemble<DecisionTree>> {
    let text = fs::read_to_string(path).map_err(|err| match err.kind() {
        std::io::ErrorKind::NotFound => Error::format(path, "model file missing"),
        _ => Error::io(path, err),
    })?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    if file.schema_version != FEATURE_SCHEMA_VERSION || file.features.len() != FEATURE_NAMES.len() {
        return Err(Error::format(
            path,
            format!("feature schema {} does not match {FEATURE_SCHEMA_VERSION}", file.schema_version),
        ));
    }
    let e = file.ensemble;
    if e.learners.len() != e.alphas.len() || e.alphas.iter().any(|a| !a.is_finite()) {
        return Err(Error::format(path, "learner and alpha lists disagree or alphas are not finite"));
    }
    Ok(e)
}
