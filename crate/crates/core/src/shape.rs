//! Party dimensions and the flat ↔ multi-index convention.
//!
//! Flat indices are row-major with party 0 varying slowest, so for dims
//! `[2, 3]` the flat index of `(i, j)` is `3 * i + j`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SubsystemShape {
    dims: Vec<usize>,
    total: usize,
}

impl SubsystemShape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() {
            return Err(Error::InvalidShape("no parties".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidShape(format!("party dimension {d} < 2")));
        }
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidShape("total dimension overflows".into()))?;
        Ok(Self { dims, total })
    }

    /// Single-party shape of dimension `d`.
    pub fn single(d: usize) -> Result<Self> {
        Self::new(vec![d])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.total
    }

    pub fn n_parties(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self, party: usize) -> usize {
        self.dims[party]
    }

    pub fn to_multi(&self, mut flat: usize) -> Vec<usize> {
        debug_assert!(flat < self.total);
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = flat % d;
            flat /= d;
        }
        out
    }

    pub fn to_flat(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.dims.len());
        multi
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &d)| {
                debug_assert!(i < d);
                acc * d + i
            })
    }

    /// Shape obtained by keeping the listed parties, in their original order.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let keep = self.normalize_parties(keep)?;
        Self::new(keep.iter().map(|&p| self.dims[p]).collect::<Vec<_>>())
    }

    /// Shape of `self ⊗ other`.
    pub fn concat(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self {
            dims,
            total: self.total * other.total,
        }
    }

    /// Sorted, deduplicated party list; rejects out-of-range parties.
    pub(crate) fn normalize_parties(&self, parties: &[usize]) -> Result<Vec<usize>> {
        let mut v = parties.to_vec();
        v.sort_unstable();
        v.dedup();
        if let Some(&p) = v.iter().find(|&&p| p >= self.dims.len()) {
            return Err(crate::error::contract(format!(
                "party {p} out of range for {} parties",
                self.dims.len()
            )));
        }
        Ok(v)
    }

    /// Compact label such as `2x3x2`.
    pub fn label(&self) -> String {
        self.dims
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join("x")
    }
}

impl TryFrom<Vec<usize>> for SubsystemShape {
    type Error = Error;

    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Self::new(dims)
    }
}

impl From<SubsystemShape> for Vec<usize> {
    fn from(s: SubsystemShape) -> Self {
        s.dims
    }
}

impl std::fmt::Display for SubsystemShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}
