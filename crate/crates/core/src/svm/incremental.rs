//! Warm-started retraining for the poisoning loop.
//!
//! Adding a point with α = 0 to an optimal solution leaves every existing
//! gradient entry unchanged, so the new problem starts from the old α and
//! only the new point's gradient has to be computed. The solver then runs
//! until the same stopping rule as a cold start holds.

use potlab_game::Scalar;

use super::kernel::{rbf_unchecked, Gram};
use super::model::{decide, problem, Decision, LabeledSet, SvmModel, TrainConfig};
use crate::error::SvmError;

#[derive(Debug, Clone)]
pub struct IncrementalTrainer<F> {
    config: TrainConfig<F>,
    gram: Gram<F>,
    labels: Vec<i8>,
    signs: Vec<F>,
    alpha: Vec<F>,
    grad: Vec<F>,
    bias: F,
    iterations: usize,
    dual: F,
}

impl<F: Scalar> IncrementalTrainer<F> {
    /// Cold-start training on `data`.
    pub fn new(data: &LabeledSet<F>, config: &TrainConfig<F>) -> Result<Self, SvmError> {
        config.validate()?;
        data.check_both_classes()?;
        let gram = Gram::new(data.inputs().to_vec(), config.kernel.gamma);
        let signs = data.signs();
        let idx: Vec<usize> = (0..data.len()).collect();
        let sol = problem(&gram, &idx, &signs, config).solve()?;
        Ok(Self {
            config: *config,
            gram,
            labels: data.labels().to_vec(),
            signs,
            alpha: sol.alpha,
            grad: sol.grad,
            bias: sol.bias,
            iterations: sol.iterations,
            dual: sol.dual,
        })
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn config(&self) -> &TrainConfig<F> {
        &self.config
    }

    /// Solver iterations spent on the latest (re)training.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn alpha(&self) -> &[F] {
        &self.alpha
    }

    /// A trainer for the current points plus `x` with label `y`, solved from
    /// the current α.
    pub fn with_point(&self, x: Vec<F>, y: i8) -> Result<Self, SvmError> {
        if x.len() != self.gram.point(0).len() {
            return Err(SvmError::DimensionMismatch { expected: self.gram.point(0).len(), got: x.len() });
        }
        if y != 1 && y != -1 {
            return Err(SvmError::InvalidArgument(format!("label must be ±1, got {y}")));
        }
        let mut next = self.clone();
        let m = next.len();
        next.gram.push(x);
        let sign = if y > 0 { F::one() } else { -F::one() };
        let sum = (0..m)
            .filter(|t| self.alpha[*t] > F::zero())
            .fold(F::zero(), |acc, t| acc + self.alpha[t] * self.signs[t] * next.gram.get(m, t));
        next.labels.push(y);
        next.signs.push(sign);
        next.alpha.push(F::zero());
        next.grad.push(sign * sum - F::one());
        let idx: Vec<usize> = (0..=m).collect();
        let sol = problem(&next.gram, &idx, &next.signs, &next.config)
            .solve_from(std::mem::take(&mut next.alpha), std::mem::take(&mut next.grad))?;
        next.alpha = sol.alpha;
        next.grad = sol.grad;
        next.bias = sol.bias;
        next.iterations = sol.iterations;
        next.dual = sol.dual;
        Ok(next)
    }

    pub fn dataset(&self) -> LabeledSet<F> {
        let rows = (0..self.len()).map(|i| self.gram.point(i).to_vec()).collect();
        LabeledSet::new(rows, self.labels.clone()).expect("trainer rows share one dimension")
    }

    pub fn model(&self) -> SvmModel<F> {
        let idx: Vec<usize> = (0..self.len()).collect();
        let sol = super::smo::Solution {
            alpha: self.alpha.clone(),
            grad: self.grad.clone(),
            bias: self.bias,
            iterations: self.iterations,
            dual: self.dual,
        };
        SvmModel::from_solution(self.config, &self.gram, &idx, &self.signs, &sol, self.dataset().sha256())
    }

    /// Margins of the probe points under the current solution.
    pub fn margins(&self, probes: &ProbeSet<F>) -> Vec<F> {
        let n = probes.base_len;
        let active: Vec<usize> = (0..self.len()).filter(|t| self.alpha[*t] > F::zero()).collect();
        let gamma = self.config.kernel.gamma;
        probes
            .points
            .iter()
            .enumerate()
            .map(|(p, x)| {
                active.iter().fold(self.bias, |acc, &t| {
                    let k = if t < n { probes.kernel[p * n + t] } else { rbf_unchecked(x, self.gram.point(t), gamma) };
                    acc + self.alpha[t] * self.signs[t] * k
                })
            })
            .collect()
    }

    /// Fraction of probe points predicted accept.
    pub fn acceptance(&self, probes: &ProbeSet<F>) -> f64 {
        if probes.points.is_empty() {
            return 0.0;
        }
        let accepted = self.margins(probes).into_iter().filter(|m| decide(*m) == Decision::Accept).count();
        accepted as f64 / probes.points.len() as f64
    }
}

/// Query points with their kernel values against the trainer's initial
/// points cached.
#[derive(Debug, Clone)]
pub struct ProbeSet<F> {
    points: Vec<Vec<F>>,
    kernel: Vec<F>,
    base_len: usize,
}

impl<F: Scalar> ProbeSet<F> {
    pub fn new(trainer: &IncrementalTrainer<F>, points: Vec<Vec<F>>) -> Self {
        let n = trainer.gram.base_len();
        let gamma = trainer.config.kernel.gamma;
        let mut kernel = Vec::with_capacity(points.len() * n);
        for x in &points {
            kernel.extend((0..n).map(|t| rbf_unchecked(x, trainer.gram.point(t), gamma)));
        }
        Self { points, kernel, base_len: n }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
