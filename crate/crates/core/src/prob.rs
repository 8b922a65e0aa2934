use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Nonnegative weights summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbabilityVector<T: Real> {
    probs: Vec<T>,
}

impl<T: Real> ProbabilityVector<T> {
    /// Validates entries ≥ 0 and unit sum within `1e-12`. Negative entries
    /// above `-1e-12` are treated as rounding noise and clamped to zero.
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidProbabilities("empty vector".into()));
        }
        let tol = T::tol(1e-12);
        let mut probs = probs;
        for p in probs.iter_mut() {
            if !p.is_finite() {
                return Err(Error::InvalidProbabilities("non-finite entry".into()));
            }
            if *p < -tol {
                return Err(Error::InvalidProbabilities(format!("negative entry {p}")));
            }
            if *p < T::zero() {
                *p = T::zero();
            }
        }
        let sum = probs.iter().fold(T::zero(), |a, &b| a + b);
        if (sum - T::one()).abs() > tol {
            return Err(Error::InvalidProbabilities(format!(
                "entries sum to {sum}, not 1"
            )));
        }
        Ok(Self { probs })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(weights: Vec<T>) -> Result<Self> {
        let sum = weights.iter().fold(T::zero(), |a, &b| a + b);
        if !(sum > T::zero()) || weights.iter().any(|w| *w < T::zero()) {
            return Err(Error::InvalidProbabilities(
                "weights must be nonnegative with positive sum".into(),
            ));
        }
        Ok(Self {
            probs: weights.into_iter().map(|w| w / sum).collect(),
        })
    }

    pub(crate) fn from_trusted(probs: Vec<T>) -> Self {
        Self { probs }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<T> {
        self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Kronecker product `(x_1 y_1, …, x_1 y_n, …, x_m y_n)`.
    pub fn kron(&self, other: &Self) -> Self {
        let probs = self
            .probs
            .iter()
            .flat_map(|&x| other.probs.iter().map(move |&y| x * y))
            .collect();
        Self { probs }
    }

    /// True when one entry is within `tol` of 1.
    pub fn is_deterministic(&self, tol: T) -> bool {
        self.probs.iter().any(|&p| (p - T::one()).abs() <= tol)
    }
}

/// Shannon entropy in bits; entries below `1e-15` contribute nothing.
pub(crate) fn entropy_bits<T: Real>(probs: &[T]) -> T {
    let cutoff = T::lit(1e-15);
    let h = probs
        .iter()
        .filter(|&&p| p > cutoff)
        .fold(T::zero(), |acc, &p| acc - p * p.log2());
    h.max(T::zero())
}
