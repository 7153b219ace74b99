use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use potlab_game::Scalar;

use super::kernel::{rbf_unchecked, Gram};
use super::smo::{Problem, Solution};
use crate::error::SvmError;

pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_PASSES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams<F> {
    pub gamma: F,
}

/// Solver settings. The iteration cap is `max_passes` times the number of
/// training points. `seed` is recorded with the model; the solver itself is
/// deterministic and draws no random numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig<F> {
    pub c: F,
    pub kernel: KernelParams<F>,
    pub tol: F,
    pub max_passes: usize,
    pub seed: u64,
}

impl<F: Scalar> TrainConfig<F> {
    pub fn new(c: F, gamma: F) -> Self {
        Self { c, kernel: KernelParams { gamma }, tol: F::lit(DEFAULT_TOL), max_passes: DEFAULT_MAX_PASSES, seed: 0 }
    }

    pub fn validate(&self) -> Result<(), SvmError> {
        if self.c <= F::zero() || !self.c.is_finite() {
            return Err(SvmError::InvalidArgument(format!("C must be positive, got {}", self.c)));
        }
        if self.kernel.gamma <= F::zero() || !self.kernel.gamma.is_finite() {
            return Err(SvmError::InvalidArgument(format!("gamma must be positive, got {}", self.kernel.gamma)));
        }
        if self.tol.is_nan() || self.tol <= F::zero() {
            return Err(SvmError::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_passes == 0 {
            return Err(SvmError::InvalidArgument("max_passes must be positive".into()));
        }
        Ok(())
    }
}

/// Encoded inputs with labels in {+1 (default), −1 (repaid)}.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet<F> {
    x: Vec<Vec<F>>,
    y: Vec<i8>,
    dim: usize,
}

impl<F: Scalar> LabeledSet<F> {
    pub fn new(x: Vec<Vec<F>>, y: Vec<i8>) -> Result<Self, SvmError> {
        if x.len() != y.len() {
            return Err(SvmError::InvalidArgument(format!("{} inputs but {} labels", x.len(), y.len())));
        }
        let dim = x.first().map_or(0, Vec::len);
        let mut set = Self { x: Vec::with_capacity(x.len()), y: Vec::with_capacity(y.len()), dim };
        for (row, label) in x.into_iter().zip(y) {
            set.push(row, label)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, x: Vec<F>, y: i8) -> Result<(), SvmError> {
        if self.x.is_empty() && self.dim == 0 {
            self.dim = x.len();
        }
        if x.len() != self.dim {
            return Err(SvmError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if y != 1 && y != -1 {
            return Err(SvmError::InvalidArgument(format!("label must be ±1, got {y}")));
        }
        self.x.push(x);
        self.y.push(y);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn inputs(&self) -> &[Vec<F>] {
        &self.x
    }

    pub fn labels(&self) -> &[i8] {
        &self.y
    }

    pub fn subset(&self, ids: &[usize]) -> Self {
        Self { x: ids.iter().map(|i| self.x[*i].clone()).collect(), y: ids.iter().map(|i| self.y[*i]).collect(), dim: self.dim }
    }

    pub fn concat(&self, other: &LabeledSet<F>) -> Result<Self, SvmError> {
        let mut out = self.clone();
        for (x, y) in other.x.iter().zip(&other.y) {
            out.push(x.clone(), *y)?;
        }
        Ok(out)
    }

    /// SHA-256 over the rows (little-endian f64 of each feature, then the
    /// label byte), hex encoded.
    pub fn sha256(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.dim as u64).to_le_bytes());
        for (x, y) in self.x.iter().zip(&self.y) {
            for v in x {
                h.update(v.as_f64().to_le_bytes());
            }
            h.update([*y as u8]);
        }
        hex::encode(h.finalize())
    }

    pub(crate) fn check_both_classes(&self) -> Result<(), SvmError> {
        let pos = self.y.iter().filter(|y| **y > 0).count();
        if pos == 0 || pos == self.len() {
            return Err(SvmError::Degenerate(format!("training data has a single class ({} examples)", self.len())));
        }
        Ok(())
    }

    pub(crate) fn signs(&self) -> Vec<F> {
        self.y.iter().map(|y| if *y > 0 { F::one() } else { -F::one() }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Deny,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction<F> {
    pub decision: Decision,
    pub margin: F,
}

/// Deny iff the margin is strictly positive (default predicted).
pub fn decide<F: Scalar>(margin: F) -> Decision {
    if margin > F::zero() {
        Decision::Deny
    } else {
        Decision::Accept
    }
}

/// Trained classifier f(x) = Σ coef_i K(sv_i, x) + bias with coef_i = α_i y_i.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel<F> {
    pub config: TrainConfig<F>,
    pub dim: usize,
    pub support: Vec<Vec<F>>,
    pub coef: Vec<F>,
    /// α_i of each support vector.
    pub alpha: Vec<F>,
    /// Position of each support vector in the training set.
    pub support_indices: Vec<usize>,
    pub bias: F,
    pub dataset_sha256: String,
    pub iterations: usize,
    pub dual_objective: F,
}

impl<F: Scalar> SvmModel<F> {
    pub(crate) fn from_solution(
        config: TrainConfig<F>,
        gram: &Gram<F>,
        idx: &[usize],
        y: &[F],
        sol: &Solution<F>,
        dataset_sha256: String,
    ) -> Self {
        let mut model = SvmModel {
            config,
            dim: if idx.is_empty() { 0 } else { gram.point(idx[0]).len() },
            support: Vec::new(),
            coef: Vec::new(),
            alpha: Vec::new(),
            support_indices: Vec::new(),
            bias: sol.bias,
            dataset_sha256,
            iterations: sol.iterations,
            dual_objective: sol.dual,
        };
        for (t, a) in sol.alpha.iter().enumerate() {
            if *a > F::zero() {
                model.support.push(gram.point(idx[t]).to_vec());
                model.coef.push(*a * y[t]);
                model.alpha.push(*a);
                model.support_indices.push(t);
            }
        }
        model
    }

    pub fn margin(&self, x: &[F]) -> Result<F, SvmError> {
        if x.len() != self.dim {
            return Err(SvmError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let g = self.config.kernel.gamma;
        Ok(self.support.iter().zip(&self.coef).fold(self.bias, |acc, (sv, c)| acc + *c * rbf_unchecked(sv, x, g)))
    }

    pub fn predict(&self, x: &[F]) -> Result<Prediction<F>, SvmError> {
        let margin = self.margin(x)?;
        Ok(Prediction { decision: decide(margin), margin })
    }

    pub fn accepts(&self, x: &[F]) -> Result<bool, SvmError> {
        Ok(self.predict(x)?.decision == Decision::Accept)
    }

    pub fn support_count(&self) -> usize {
        self.support.len()
    }

    /// Largest violation of the KKT conditions on `data`, which must be the
    /// training set: α = 0 ⇒ y f ≥ 1, 0 < α < C ⇒ y f = 1, α = C ⇒ y f ≤ 1.
    pub fn kkt_residual(&self, data: &LabeledSet<F>) -> Result<F, SvmError> {
        let mut alpha = vec![F::zero(); data.len()];
        for (i, a) in self.support_indices.iter().zip(&self.alpha) {
            alpha[*i] = *a;
        }
        let mut worst = F::zero();
        for (t, (x, y)) in data.inputs().iter().zip(data.labels()).enumerate() {
            let yf = if *y > 0 { self.margin(x)? } else { -self.margin(x)? };
            let r = if alpha[t] <= F::zero() {
                (F::one() - yf).max(F::zero())
            } else if alpha[t] >= self.config.c {
                (yf - F::one()).max(F::zero())
            } else {
                (yf - F::one()).abs()
            };
            worst = worst.max(r);
        }
        Ok(worst)
    }

    pub fn to_json(&self) -> Result<String, SvmError> {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            dim: self.dim,
            config: TrainConfigFile {
                c: self.config.c.as_f64(),
                gamma: self.config.kernel.gamma.as_f64(),
                tol: self.config.tol.as_f64(),
                max_passes: self.config.max_passes,
                seed: self.config.seed,
            },
            dataset_sha256: self.dataset_sha256.clone(),
            bias: self.bias.as_f64(),
            support: self
                .support_indices
                .iter()
                .zip(&self.coef)
                .zip(&self.alpha)
                .map(|((index, coef), alpha)| SupportEntry { index: *index, coef: coef.as_f64(), alpha: alpha.as_f64() })
                .collect(),
            iterations: self.iterations,
            dual_objective: self.dual_objective.as_f64(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| SvmError::Format(e.to_string()))
    }

    /// Rebuilds a model from its JSON form and the training set it refers to.
    pub fn from_json(text: &str, data: &LabeledSet<F>) -> Result<Self, SvmError> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| SvmError::Format(e.to_string()))?;
        if file.format != MODEL_FORMAT {
            return Err(SvmError::Format(format!("unsupported format `{}`", file.format)));
        }
        let hash = data.sha256();
        if hash != file.dataset_sha256 {
            return Err(SvmError::Format(format!("dataset hash {hash} does not match {}", file.dataset_sha256)));
        }
        if file.dim != data.dim() {
            return Err(SvmError::DimensionMismatch { expected: file.dim, got: data.dim() });
        }
        let mut support = Vec::with_capacity(file.support.len());
        for entry in &file.support {
            let x = data
                .inputs()
                .get(entry.index)
                .ok_or_else(|| SvmError::Format(format!("support index {} out of range", entry.index)))?;
            support.push(x.clone());
        }
        let config = TrainConfig {
            c: F::lit(file.config.c),
            kernel: KernelParams { gamma: F::lit(file.config.gamma) },
            tol: F::lit(file.config.tol),
            max_passes: file.config.max_passes,
            seed: file.config.seed,
        };
        config.validate()?;
        Ok(SvmModel {
            config,
            dim: file.dim,
            support,
            coef: file.support.iter().map(|s| F::lit(s.coef)).collect(),
            alpha: file.support.iter().map(|s| F::lit(s.alpha)).collect(),
            support_indices: file.support.iter().map(|s| s.index).collect(),
            bias: F::lit(file.bias),
            dataset_sha256: file.dataset_sha256,
            iterations: file.iterations,
            dual_objective: F::lit(file.dual_objective),
        })
    }
}

pub const MODEL_FORMAT: &str = "potlab-svm-1";

/// JSON layout of a saved model. Support vectors are stored as indices into
/// the training set identified by `dataset_sha256`.
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format: String,
    dim: usize,
    config: TrainConfigFile,
    dataset_sha256: String,
    bias: f64,
    support: Vec<SupportEntry>,
    iterations: usize,
    dual_objective: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrainConfigFile {
    c: f64,
    gamma: f64,
    tol: f64,
    max_passes: usize,
    seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct SupportEntry {
    index: usize,
    coef: f64,
    alpha: f64,
}

/// Trains on `data` from α = 0.
pub fn train_smo<F: Scalar>(data: &LabeledSet<F>, config: &TrainConfig<F>) -> Result<SvmModel<F>, SvmError> {
    config.validate()?;
    data.check_both_classes()?;
    let gram = Gram::new(data.inputs().to_vec(), config.kernel.gamma);
    let idx: Vec<usize> = (0..data.len()).collect();
    let y = data.signs();
    let problem = problem(&gram, &idx, &y, config);
    let sol = problem.solve()?;
    Ok(SvmModel::from_solution(*config, &gram, &idx, &y, &sol, data.sha256()))
}

pub(crate) fn problem<'a, F: Scalar>(
    gram: &'a Gram<F>,
    idx: &'a [usize],
    y: &'a [F],
    config: &TrainConfig<F>,
) -> Problem<'a, F> {
    Problem {
        gram,
        idx,
        y,
        c: config.c,
        tol: config.tol,
        max_iter: config.max_passes.saturating_mul(idx.len().max(1)),
    }
}

/// Trains on `base ∪ extra` from α = 0 with the same hyperparameters.
pub fn retrain<F: Scalar>(
    base: &LabeledSet<F>,
    extra: &LabeledSet<F>,
    config: &TrainConfig<F>,
) -> Result<SvmModel<F>, SvmError> {
    train_smo(&base.concat(extra)?, config)
}
