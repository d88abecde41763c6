use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{fingerprint_of, FeatureSchema, FeatureVector};
use super::EnsembleError;
use crate::alignment::write_atomic;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainParams {
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub max_iters: usize,
    /// Stop once the largest gradient component falls below this.
    pub tolerance: f64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            l2_lambda: 1e-3,
            max_iters: 5000,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2_lambda: f64,
    pub threshold: f64,
    pub schema: Vec<String>,
    pub fingerprint: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub iterations: usize,
    pub converged: bool,
    /// Loss before each step, then the final loss.
    pub losses: Vec<f64>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl LogRegModel {
    pub fn zeros(schema: &FeatureSchema, l2_lambda: f64) -> Self {
        Self {
            weights: vec![0.0; schema.dim()],
            bias: 0.0,
            l2_lambda,
            threshold: DEFAULT_THRESHOLD,
            schema: schema.names().to_vec(),
            fingerprint: schema.fingerprint().to_owned(),
        }
    }

    fn logit(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    fn check_vector(&self, fv: &FeatureVector) -> Result<(), EnsembleError> {
        if fv.fingerprint != self.fingerprint {
            return Err(EnsembleError::SchemaMismatch {
                model: self.fingerprint.clone(),
                features: fv.fingerprint.clone(),
            });
        }
        if fv.values.len() != self.weights.len() {
            return Err(EnsembleError::Dimension {
                expected: self.weights.len(),
                got: fv.values.len(),
            });
        }
        Ok(())
    }

    /// sigmoid(w·x + b).
    pub fn predict(&self, fv: &FeatureVector) -> Result<f64, EnsembleError> {
        self.check_vector(fv)?;
        Ok(sigmoid(self.logit(&fv.values)))
    }

    pub fn label(&self, fv: &FeatureVector) -> Result<bool, EnsembleError> {
        Ok(self.predict(fv)? >= self.threshold)
    }

    /// Pretty JSON with a trailing newline; floats round-trip exactly.
    pub fn to_json(&self) -> String {
        let mut json = serde_json::to_string_pretty(self).expect("model serializes");
        json.push('\n');
        json
    }

    pub fn save(&self, path: &Path) -> Result<(), EnsembleError> {
        write_atomic(path, self.to_json().as_bytes()).map_err(|e| EnsembleError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, EnsembleError> {
        let io = |message: String| EnsembleError::Io {
            path: path.display().to_string(),
            message,
        };
        let text = fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
        let m: Self = serde_json::from_str(&text).map_err(|e| io(e.to_string()))?;
        m.check().map_err(io)?;
        Ok(m)
    }

    pub fn check(&self) -> Result<(), String> {
        if self.weights.len() != self.schema.len() {
            return Err(format!("{} weights for {} features", self.weights.len(), self.schema.len()));
        }
        if fingerprint_of(&self.schema) != self.fingerprint {
            return Err("fingerprint does not match schema".into());
        }
        if self.l2_lambda.is_nan() || self.l2_lambda < 0.0 {
            return Err(format!("l2_lambda {} is negative", self.l2_lambda));
        }
        if !(0.0 < self.threshold && self.threshold < 1.0) {
            return Err(format!("threshold {} outside (0,1)", self.threshold));
        }
        Ok(())
    }
}

/// Mean negative log-likelihood plus `l2_lambda/2 * |w|^2` (bias excluded),
/// and its gradient with the bias component last.
pub fn nll_and_gradient(model: &LogRegModel, examples: &[(FeatureVector, bool)]) -> (f64, Vec<f64>) {
    let d = model.weights.len();
    let n = examples.len().max(1) as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; d + 1];
    for (fv, y) in examples {
        let z = model.logit(&fv.values);
        loss += if *y { softplus(-z) } else { softplus(z) };
        let r = sigmoid(z) - f64::from(u8::from(*y));
        for (g, x) in grad.iter_mut().zip(&fv.values) {
            *g += r * x;
        }
        grad[d] += r;
    }
    loss /= n;
    grad.iter_mut().for_each(|g| *g /= n);
    let l = model.l2_lambda;
    loss += 0.5 * l * model.weights.iter().map(|w| w * w).sum::<f64>();
    for (g, w) in grad.iter_mut().zip(&model.weights) {
        *g += l * w;
    }
    (loss, grad)
}

/// Full-batch gradient descent from zero weights.
pub fn train(
    examples: &[(FeatureVector, bool)],
    schema: &FeatureSchema,
    hp: &TrainParams,
) -> Result<(LogRegModel, TrainSummary), EnsembleError> {
    if examples.is_empty() {
        return Err(EnsembleError::NoExamples);
    }
    let positives = examples.iter().filter(|(_, y)| *y).count();
    if positives == 0 || positives == examples.len() {
        return Err(EnsembleError::SingleClass(examples[0].1));
    }
    if hp.l2_lambda.is_nan() || hp.l2_lambda < 0.0 || hp.learning_rate.is_nan() || hp.learning_rate <= 0.0 {
        return Err(EnsembleError::BadParams(format!(
            "learning_rate {} and l2_lambda {} must be positive and non-negative",
            hp.learning_rate, hp.l2_lambda
        )));
    }
    let mut model = LogRegModel::zeros(schema, hp.l2_lambda);
    for (fv, _) in examples {
        model.check_vector(fv)?;
    }
    let d = model.weights.len();
    let mut losses = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    loop {
        let (loss, grad) = nll_and_gradient(&model, examples);
        if !loss.is_finite() {
            return Err(EnsembleError::NonFiniteLoss(iterations));
        }
        losses.push(loss);
        if grad.iter().all(|g| g.abs() < hp.tolerance) {
            converged = true;
            break;
        }
        if iterations == hp.max_iters {
            break;
        }
        for (w, g) in model.weights.iter_mut().zip(&grad) {
            *w -= hp.learning_rate * g;
        }
        model.bias -= hp.learning_rate * grad[d];
        iterations += 1;
    }
    Ok((
        model,
        TrainSummary {
            iterations,
            converged,
            losses,
        },
    ))
}
