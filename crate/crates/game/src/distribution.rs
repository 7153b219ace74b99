//! Finite probability distributions with validated mass.

use rand::Rng;
use thiserror::Error;

use crate::Scalar;

/// Allowed deviation of the total mass from one.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("distribution has no outcomes")]
    Empty,
    #[error("outcome {index} has invalid probability {value}")]
    InvalidProbability { index: usize, value: f64 },
    #[error("probabilities sum to {total}, expected 1")]
    BadTotal { total: f64 },
}

/// A finite distribution over outcomes of type `T`.
///
/// Outcomes are kept in the order they were supplied; enumeration and sampling
/// both follow that order, which makes seeded sampling reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution<T, F> {
    outcomes: Vec<(T, F)>,
}

impl<T, F: Scalar> Distribution<T, F> {
    pub fn new(outcomes: Vec<(T, F)>) -> Result<Self, DistributionError> {
        if outcomes.is_empty() {
            return Err(DistributionError::Empty);
        }
        let mut total = F::zero();
        for (index, (_, p)) in outcomes.iter().enumerate() {
            if !p.is_finite() || *p < F::zero() {
                return Err(DistributionError::InvalidProbability { index, value: p.as_f64() });
            }
            total = total + *p;
        }
        if (total.as_f64() - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(DistributionError::BadTotal { total: total.as_f64() });
        }
        Ok(Self { outcomes })
    }

    /// All mass on a single outcome.
    pub fn point(outcome: T) -> Self {
        Self { outcomes: vec![(outcome, F::one())] }
    }

    pub fn uniform(items: Vec<T>) -> Result<Self, DistributionError> {
        if items.is_empty() {
            return Err(DistributionError::Empty);
        }
        let p = F::one() / F::from_count(items.len());
        Ok(Self { outcomes: items.into_iter().map(|t| (t, p)).collect() })
    }

    /// Builds a distribution from non-negative weights, normalizing them.
    pub fn from_weights(weighted: Vec<(T, F)>) -> Result<Self, DistributionError> {
        let mut total = F::zero();
        for (index, (_, w)) in weighted.iter().enumerate() {
            if !w.is_finite() || *w < F::zero() {
                return Err(DistributionError::InvalidProbability { index, value: w.as_f64() });
            }
            total = total + *w;
        }
        if weighted.is_empty() {
            return Err(DistributionError::Empty);
        }
        if total <= F::zero() {
            return Err(DistributionError::BadTotal { total: 0.0 });
        }
        Self::new(weighted.into_iter().map(|(t, w)| (t, w / total)).collect())
    }

    pub fn outcomes(&self) -> &[(T, F)] {
        &self.outcomes
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, F)> + '_ {
        self.outcomes.iter().map(|(t, p)| (t, *p))
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Total mass assigned to outcomes equal to `value`.
    pub fn probability_of(&self, value: &T) -> F
    where
        T: PartialEq,
    {
        self.outcomes
            .iter()
            .filter(|(t, _)| t == value)
            .fold(F::zero(), |acc, (_, p)| acc + *p)
    }

    /// Draws one outcome. Outcomes with zero probability are never returned.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &T {
        let u = F::lit(rng.gen::<f64>());
        let mut acc = F::zero();
        let mut last_positive = None;
        for (t, p) in &self.outcomes {
            if *p <= F::zero() {
                continue;
            }
            acc = acc + *p;
            last_positive = Some(t);
            if u < acc {
                return t;
            }
        }
        // Rounding can leave the cumulative mass a hair below one.
        last_positive.expect("validated distribution has positive mass")
    }

    pub fn map<U>(self, mut f: impl FnMut(T) -> U) -> Distribution<U, F> {
        Distribution { outcomes: self.outcomes.into_iter().map(|(t, p)| (f(t), p)).collect() }
    }

    /// Expectation of `f` under this distribution.
    pub fn expect(&self, mut f: impl FnMut(&T) -> F) -> F {
        self.outcomes.iter().fold(F::zero(), |acc, (t, p)| acc + *p * f(t))
    }
}
