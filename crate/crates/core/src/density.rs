use nalgebra::DMatrix;

use crate::error::{contract, Error, Result};
use crate::prob::{entropy_bits, ProbabilityVector};
use crate::scalar::{czero, norm_sqr, Real, C};
use crate::shape::SubsystemShape;

/// Eigenvalues below this are treated as numerical noise and clipped to zero.
pub const EIGEN_CLIP: f64 = 1e-10;
/// Rank threshold, relative to the trace.
pub const RANK_TOL: f64 = 1e-12;

/// Hermitian, positive-semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: Real> {
    m: DMatrix<C<T>>,
    shape: SubsystemShape,
}

/// Spectral decomposition with eigenvalues in descending order. Column `k` of
/// `vectors` belongs to `values[k]`.
#[derive(Clone, Debug)]
pub struct Eigen<T: Real> {
    pub values: Vec<T>,
    pub vectors: DMatrix<C<T>>,
}

impl<T: Real> Eigen<T> {
    /// Number of eigenvalues above `RANK_TOL` (relative to their sum).
    pub fn rank(&self) -> usize {
        let total = self.values.iter().fold(T::zero(), |a, &b| a + b);
        let cut = T::lit(RANK_TOL) * total;
        self.values.iter().filter(|&&v| v > cut).count()
    }

    pub fn reconstruct(&self) -> DMatrix<C<T>> {
        let d = self.vectors.nrows();
        let mut out = DMatrix::from_element(d, d, czero());
        for (k, &lam) in self.values.iter().enumerate() {
            let col = self.vectors.column(k);
            for i in 0..d {
                let a = col[i].scale(lam);
                for j in 0..d {
                    out[(i, j)] += a * col[j].conj();
                }
            }
        }
        out
    }
}

impl<T: Real> DensityMatrix<T> {
    /// Validates Hermiticity and unit trace (both within `1e-12`) and
    /// eigenvalues ≥ `-1e-10`. Small negative eigenvalues are clipped.
    pub fn new(shape: SubsystemShape, m: DMatrix<C<T>>) -> Result<Self> {
        let d = shape.total_dim();
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: m.nrows().max(m.ncols()),
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Schema("non-finite matrix entry".into()));
        }
        let herm = hermiticity_error(&m);
        if herm > T::tol(1e-12) {
            return Err(Error::NotHermitian(herm.as_f64()));
        }
        let tr = m.diagonal().iter().fold(T::zero(), |a, z| a + z.re);
        if (tr - T::one()).abs() > T::tol(1e-12) {
            return Err(Error::TraceNotOne((tr - T::one()).abs().as_f64()));
        }
        let rho = Self::from_trusted(shape, m);
        let eig = rho.eig_raw();
        let min = eig.values.last().copied().unwrap_or(T::zero());
        if min < -T::lit(EIGEN_CLIP) {
            return Err(Error::NotPsd(min.as_f64()));
        }
        if min < T::zero() {
            let clipped = Eigen {
                values: eig.values.iter().map(|&v| v.max(T::zero())).collect(),
                vectors: eig.vectors,
            };
            let mut m = clipped.reconstruct();
            let tr = m.diagonal().iter().fold(T::zero(), |a, z| a + z.re);
            m.unscale_mut(tr);
            return Ok(Self::from_trusted(rho.shape, m));
        }
        Ok(rho)
    }

    /// Skips validation but still symmetrizes.
    pub(crate) fn from_trusted(shape: SubsystemShape, m: DMatrix<C<T>>) -> Self {
        let half = T::lit(0.5);
        let m = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
            (m[(i, j)] + m[(j, i)].conj()).scale(half)
        });
        Self { m, shape }
    }

    /// `diag(p)` on the given shape.
    pub fn diagonal(shape: SubsystemShape, probs: &ProbabilityVector<T>) -> Result<Self> {
        let d = shape.total_dim();
        if probs.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: probs.len(),
            });
        }
        let mut m = DMatrix::from_element(d, d, czero());
        for (i, &p) in probs.as_slice().iter().enumerate() {
            m[(i, i)] = C::new(p, T::zero());
        }
        Ok(Self { m, shape })
    }

    /// `I / d`.
    pub fn maximally_mixed(shape: SubsystemShape) -> Self {
        let d = shape.total_dim();
        let p = T::one() / T::lit(d as f64);
        Self {
            m: DMatrix::from_fn(d, d, |i, j| if i == j { C::new(p, T::zero()) } else { czero() }),
            shape,
        }
    }

    /// `Σ w_k ρ_k` for probability weights `w`.
    pub fn mixture(weights: &ProbabilityVector<T>, parts: &[Self]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| contract("empty mixture"))?;
        if weights.len() != parts.len() {
            return Err(Error::DimensionMismatch {
                expected: parts.len(),
                found: weights.len(),
            });
        }
        let mut m = DMatrix::from_element(first.dim(), first.dim(), czero());
        for (&w, p) in weights.as_slice().iter().zip(parts) {
            if p.shape != first.shape {
                return Err(contract("mixture components have different shapes"));
            }
            m += p.m.map(|z| z.scale(w));
        }
        Ok(Self::from_trusted(first.shape.clone(), m))
    }

    pub fn matrix(&self) -> &DMatrix<C<T>> {
        &self.m
    }

    pub fn shape(&self) -> &SubsystemShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn trace(&self) -> T {
        self.m.diagonal().iter().fold(T::zero(), |a, z| a + z.re)
    }

    /// Diagonal entries as probabilities.
    pub fn diag_probs(&self) -> ProbabilityVector<T> {
        ProbabilityVector::from_trusted(
            self.m.diagonal().iter().map(|z| z.re.max(T::zero())).collect(),
        )
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            m: self.m.kronecker(&other.m),
            shape: self.shape.concat(&other.shape),
        }
    }

    /// Reduced state on `keep` (a nonempty proper subset of parties); parties
    /// keep their relative order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let keep = self.shape.normalize_parties(keep)?;
        let n = self.shape.n_parties();
        if keep.is_empty() || keep.len() == n {
            return Err(contract(format!(
                "partial trace needs a nonempty proper subset of {n} parties, got {keep:?}"
            )));
        }
        let traced: Vec<usize> = (0..n).filter(|p| !keep.contains(p)).collect();
        let kept_shape = self.shape.restrict(&keep)?;
        let traced_shape = self.shape.restrict(&traced)?;
        let dk = kept_shape.total_dim();
        let dt = traced_shape.total_dim();

        // groups[t][k] = full flat index of (kept k, traced t)
        let mut groups = vec![vec![0usize; dk]; dt];
        let mut km = vec![0usize; keep.len()];
        let mut tm = vec![0usize; traced.len()];
        for flat in 0..self.dim() {
            let multi = self.shape.to_multi(flat);
            for (slot, &p) in km.iter_mut().zip(&keep) {
                *slot = multi[p];
            }
            for (slot, &p) in tm.iter_mut().zip(&traced) {
                *slot = multi[p];
            }
            groups[traced_shape.to_flat(&tm)][kept_shape.to_flat(&km)] = flat;
        }

        let mut out = DMatrix::from_element(dk, dk, czero());
        for g in &groups {
            for (a, &fa) in g.iter().enumerate() {
                for (b, &fb) in g.iter().enumerate() {
                    out[(a, b)] += self.m[(fa, fb)];
                }
            }
        }
        Ok(Self::from_trusted(kept_shape, out))
    }

    /// Single-party marginal.
    pub fn marginal(&self, party: usize) -> Result<Self> {
        self.partial_trace(&[party])
    }

    /// Δ(ρ): zeroes every off-diagonal entry.
    pub fn dephase(&self) -> Self {
        let d = self.dim();
        let m = DMatrix::from_fn(d, d, |i, j| if i == j { self.m[(i, j)] } else { czero() });
        Self {
            m,
            shape: self.shape.clone(),
        }
    }

    /// Largest off-diagonal modulus.
    pub fn max_offdiag(&self) -> T {
        let d = self.dim();
        let mut best = T::zero();
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    best = best.max(norm_sqr(self.m[(i, j)]).sqrt());
                }
            }
        }
        best
    }

    pub fn is_incoherent(&self, tol: T) -> bool {
        self.max_offdiag() <= tol
    }

    fn eig_raw(&self) -> Eigen<T> {
        let eig = self.m.clone().symmetric_eigen();
        let d = self.dim();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vectors = DMatrix::from_element(d, d, czero());
        for (dst, &src) in order.iter().enumerate() {
            let col = eig.eigenvectors.column(src);
            // Fix the phase so the largest-modulus component is real positive.
            let mut pivot = 0;
            let mut best = -T::one();
            for i in 0..d {
                let m = norm_sqr(col[i]);
                if m > best {
                    best = m;
                    pivot = i;
                }
            }
            let p = col[pivot];
            let phase = p.conj().unscale(norm_sqr(p).sqrt());
            for i in 0..d {
                vectors[(i, dst)] = col[i] * phase;
            }
        }
        Eigen { values, vectors }
    }

    /// Eigendecomposition with values sorted descending and clipped to ≥ 0.
    pub fn eig_psd(&self) -> Eigen<T> {
        let mut e = self.eig_raw();
        for v in e.values.iter_mut() {
            *v = v.max(T::zero());
        }
        e
    }

    pub fn rank(&self) -> usize {
        self.eig_psd().rank()
    }

    /// Von Neumann entropy `-Tr ρ log₂ ρ` in bits.
    pub fn vn_entropy(&self) -> T {
        let h = entropy_bits(&self.eig_psd().values);
        h.min(T::lit(self.dim() as f64).log2())
    }

    /// Returns the pure state if `ρ` has rank one.
    pub fn as_pure(&self) -> Option<crate::pure::PureState<T>> {
        let e = self.eig_psd();
        if e.rank() != 1 {
            return None;
        }
        let amps = e.vectors.column(0).iter().copied().collect();
        crate::pure::PureState::normalized(self.shape.clone(), amps).ok()
    }

    /// Entrywise max |a - b|.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.m
            .iter()
            .zip(other.m.iter())
            .fold(T::zero(), |acc, (a, b)| acc.max(norm_sqr(*a - *b).sqrt()))
    }
}

fn hermiticity_error<T: Real>(m: &DMatrix<C<T>>) -> T {
    let d = m.nrows();
    let mut worst = T::zero();
    for i in 0..d {
        for j in i..d {
            worst = worst.max(norm_sqr(m[(i, j)] - m[(j, i)].conj()).sqrt());
        }
    }
    worst
}
