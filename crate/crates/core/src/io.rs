//! JSON state files.
//!
//! ```json
//! {"type": "pure",  "dims": [2, 2], "amplitudes": [[0.7071, 0], [0, 0], [0, 0], [0.7071, 0]]}
//! {"type": "mixed", "dims": [2],    "matrix": [[[0.5, 0], [0.25, 0]], [[0.25, 0], [0.5, 0]]]}
//! ```
//!
//! Complex numbers are `[re, im]` pairs. Loading validates every state
//! invariant (normalization, Hermiticity, positivity, trace).

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::pure::PureState;
use crate::scalar::{Real, C};
use crate::shape::SubsystemShape;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum StateFile {
    Pure {
        dims: Vec<usize>,
        amplitudes: Vec<[f64; 2]>,
    },
    Mixed {
        dims: Vec<usize>,
        matrix: Vec<Vec<[f64; 2]>>,
    },
}

/// A validated state read from a [`StateFile`].
#[derive(Clone, Debug, PartialEq)]
pub enum State<T: Real> {
    Pure(PureState<T>),
    Mixed(DensityMatrix<T>),
}

impl<T: Real> State<T> {
    pub fn shape(&self) -> &SubsystemShape {
        match self {
            State::Pure(p) => p.shape(),
            State::Mixed(m) => m.shape(),
        }
    }

    /// Mixed files of rank one also count as pure.
    pub fn as_pure(&self) -> Option<PureState<T>> {
        match self {
            State::Pure(p) => Some(p.clone()),
            State::Mixed(m) => m.as_pure(),
        }
    }

    pub fn to_density(&self) -> DensityMatrix<T> {
        match self {
            State::Pure(p) => p.projector(),
            State::Mixed(m) => m.clone(),
        }
    }
}

fn complex<T: Real>(z: &[f64; 2]) -> C<T> {
    C::new(T::lit(z[0]), T::lit(z[1]))
}

fn pair<T: Real>(z: &C<T>) -> [f64; 2] {
    [z.re.as_f64(), z.im.as_f64()]
}

impl StateFile {
    pub fn from_pure<T: Real>(psi: &PureState<T>) -> Self {
        StateFile::Pure {
            dims: psi.shape().dims().to_vec(),
            amplitudes: psi.amplitudes().iter().map(pair).collect(),
        }
    }

    pub fn from_mixed<T: Real>(rho: &DensityMatrix<T>) -> Self {
        let m = rho.matrix();
        StateFile::Mixed {
            dims: rho.shape().dims().to_vec(),
            matrix: (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| pair(&m[(i, j)])).collect())
                .collect(),
        }
    }

    pub fn validate<T: Real>(&self) -> Result<State<T>> {
        match self {
            StateFile::Pure { dims, amplitudes } => {
                let shape = SubsystemShape::new(dims.clone())?;
                let amps = amplitudes.iter().map(complex).collect();
                Ok(State::Pure(PureState::new(shape, amps)?))
            }
            StateFile::Mixed { dims, matrix } => {
                let shape = SubsystemShape::new(dims.clone())?;
                let n = matrix.len();
                if let Some((i, row)) = matrix.iter().enumerate().find(|(_, r)| r.len() != n) {
                    return Err(Error::Schema(format!(
                        "matrix row {i} has {} entries, expected {n}",
                        row.len()
                    )));
                }
                let m = DMatrix::from_fn(n, n, |i, j| complex(&matrix[i][j]));
                Ok(State::Mixed(DensityMatrix::new(shape, m)?))
            }
        }
    }
}

pub fn parse_state<T: Real>(text: &str) -> Result<State<T>> {
    let file: StateFile = serde_json::from_str(text)?;
    file.validate()
}

pub fn load_state<T: Real>(path: impl AsRef<Path>) -> Result<State<T>> {
    parse_state(&fs::read_to_string(path)?)
}

pub fn save_state(path: impl AsRef<Path>, file: &StateFile) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(file)? + "\n")?;
    Ok(())
}
