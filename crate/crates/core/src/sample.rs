//! Seeded generators for states, probability vectors and incoherent channels.
//!
//! Every generator draws from a caller-supplied RNG. Reproducible streams come
//! from [`stream_rng`]: ChaCha20 (`rand_chacha` 0.9) seeded from a 64-bit seed,
//! with the 64-bit stream id selecting an independent keystream. Sweeps use the
//! state's row index as its stream id, so results do not depend on scheduling.
//! Gaussians are drawn as `f64` and then converted, so `f32` and `f64` runs see
//! the same underlying samples.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::density::DensityMatrix;
use crate::error::{contract, Error, Result};
use crate::linalg::orthonormalize;
use crate::prob::ProbabilityVector;
use crate::pure::{tensor_all, PureState};
use crate::scalar::{czero, norm_sqr, Real, C};
use crate::shape::SubsystemShape;

/// Identifier recorded in reports for the PRNG in use.
pub const PRNG_ALGORITHM: &str = "chacha20/rand_chacha-0.9/seed_from_u64+set_stream";

pub type StreamRng = ChaCha20Rng;

/// Independent, reproducible stream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R) -> C<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C::new(T::lit(re), T::lit(im))
}

pub(crate) fn gaussian_vec<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<C<T>> {
    (0..n).map(|_| gaussian(rng)).collect()
}

/// Haar-random pure state: i.i.d. complex Gaussians, normalized.
pub fn haar_pure<T: Real, R: Rng + ?Sized>(shape: &SubsystemShape, rng: &mut R) -> PureState<T> {
    loop {
        let amps = gaussian_vec(shape.total_dim(), rng);
        if let Ok(psi) = PureState::normalized(shape.clone(), amps) {
            return psi;
        }
    }
}

/// `GGᴴ / Tr(GGᴴ)` with `G` a `dim × rank` complex Gaussian matrix.
pub fn ginibre_mixed<T: Real, R: Rng + ?Sized>(
    shape: &SubsystemShape,
    rank: usize,
    rng: &mut R,
) -> Result<DensityMatrix<T>> {
    let d = shape.total_dim();
    if rank == 0 || rank > d {
        return Err(contract(format!("rank {rank} outside 1..={d}")));
    }
    let g = DMatrix::from_fn(d, rank, |_, _| gaussian::<T, R>(rng));
    let mut m = &g * g.adjoint();
    let tr = m.diagonal().iter().fold(T::zero(), |a, z| a + z.re);
    m.unscale_mut(tr);
    Ok(DensityMatrix::from_trusted(shape.clone(), m))
}

/// Product of independent Haar states, one per party. Returns the composite
/// and its factors.
pub fn random_product_pure<T: Real, R: Rng + ?Sized>(
    shape: &SubsystemShape,
    rng: &mut R,
) -> (PureState<T>, Vec<PureState<T>>) {
    let parts: Vec<PureState<T>> = shape
        .dims()
        .iter()
        .map(|&d| haar_pure(&SubsystemShape::single(d).expect("dims are ≥ 2"), rng))
        .collect();
    let composite = tensor_all(&parts).expect("at least one party");
    (composite, parts)
}

/// Uniform draw from the probability simplex (flat Dirichlet).
pub fn random_probability_vector<T: Real, R: Rng + ?Sized>(
    len: usize,
    rng: &mut R,
) -> ProbabilityVector<T> {
    let w: Vec<f64> = (0..len.max(1)).map(|_| rng.sample(Exp1)).collect();
    let s: f64 = w.iter().sum();
    ProbabilityVector::from_trusted(w.into_iter().map(|x| T::lit(x / s)).collect())
}

/// Random incoherent (diagonal) state.
pub fn random_diagonal<T: Real, R: Rng + ?Sized>(
    shape: &SubsystemShape,
    rng: &mut R,
) -> DensityMatrix<T> {
    let p = random_probability_vector(shape.total_dim(), rng);
    DensityMatrix::diagonal(shape.clone(), &p).expect("length matches")
}

/// CPTP map whose Kraus operators each have at most one nonzero entry per
/// column, so incoherent states map to incoherent states.
#[derive(Clone, Debug, PartialEq)]
pub struct IncoherentChannel<T: Real> {
    kraus: Vec<DMatrix<C<T>>>,
}

impl<T: Real> IncoherentChannel<T> {
    pub fn new(kraus: Vec<DMatrix<C<T>>>) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| contract("channel needs a Kraus operator"))?;
        let (rows, cols) = first.shape();
        if rows != cols {
            return Err(contract("Kraus operators must be square"));
        }
        let zero_tol = T::lit(1e-14);
        for k in &kraus {
            if k.shape() != (rows, cols) {
                return Err(contract("Kraus operators differ in shape"));
            }
            for c in 0..cols {
                let nonzero = k.column(c).iter().filter(|z| norm_sqr(**z) > zero_tol).count();
                if nonzero > 1 {
                    return Err(contract(format!(
                        "Kraus column {c} has {nonzero} nonzero entries"
                    )));
                }
            }
        }
        let ch = Self { kraus };
        let err = ch.completeness_error();
        if err > T::tol(1e-10) {
            return Err(contract(format!("Σ K†K deviates from I by {err}")));
        }
        Ok(ch)
    }

    /// Kraus operators `|i⟩⟨i|`.
    pub fn full_dephasing(dim: usize) -> Self {
        let kraus = (0..dim)
            .map(|i| {
                let mut k = DMatrix::from_element(dim, dim, czero());
                k[(i, i)] = C::new(T::one(), T::zero());
                k
            })
            .collect();
        Self { kraus }
    }

    /// Single Kraus operator `Σ_i |perm[i]⟩⟨i|`.
    pub fn permutation(perm: &[usize]) -> Result<Self> {
        let d = perm.len();
        let mut seen = vec![false; d];
        for &p in perm {
            if p >= d || std::mem::replace(&mut seen[p], true) {
                return Err(contract(format!("{perm:?} is not a permutation")));
            }
        }
        let mut k = DMatrix::from_element(d, d, czero());
        for (i, &p) in perm.iter().enumerate() {
            k[(p, i)] = C::new(T::one(), T::zero());
        }
        Ok(Self { kraus: vec![k] })
    }

    pub fn kraus(&self) -> &[DMatrix<C<T>>] {
        &self.kraus
    }

    pub fn dim(&self) -> usize {
        self.kraus[0].nrows()
    }

    /// Max entrywise deviation of `Σ K†K` from the identity.
    pub fn completeness_error(&self) -> T {
        let d = self.dim();
        let mut s = DMatrix::from_element(d, d, czero::<T>());
        for k in &self.kraus {
            s += k.adjoint() * k;
        }
        let mut worst = T::zero();
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max(norm_sqr(s[(i, j)] - C::new(target, T::zero())).sqrt());
            }
        }
        worst
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: d,
            });
        }
        Ok(())
    }

    /// `Λ(ρ) = Σ K ρ K†`.
    pub fn apply(&self, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
        self.check_dim(rho.dim())?;
        let mut out = DMatrix::from_element(rho.dim(), rho.dim(), czero());
        for k in &self.kraus {
            out += k * rho.matrix() * k.adjoint();
        }
        Ok(DensityMatrix::from_trusted(rho.shape().clone(), out))
    }

    /// Selective-measurement branches `(p_n, K_n ψ / √p_n)`; branches with
    /// `p_n ≤ 1e-14` are dropped.
    pub fn pure_branches(&self, psi: &PureState<T>) -> Result<Vec<(T, PureState<T>)>> {
        self.check_dim(psi.dim())?;
        let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
        let mut out = Vec::new();
        for k in &self.kraus {
            let w = k * &v;
            let p = w.iter().fold(T::zero(), |a, &z| a + norm_sqr(z));
            if p > T::lit(1e-14) {
                let amps = w.iter().map(|z| z.unscale(p.sqrt())).collect();
                out.push((p, PureState::from_trusted(psi.shape().clone(), amps)));
            }
        }
        Ok(out)
    }

    /// Selective-measurement branches `(p_n, K_n ρ K_n† / p_n)`.
    pub fn branches(&self, rho: &DensityMatrix<T>) -> Result<Vec<(T, DensityMatrix<T>)>> {
        self.check_dim(rho.dim())?;
        let mut out = Vec::new();
        for k in &self.kraus {
            let mut m = k * rho.matrix() * k.adjoint();
            let p = m.diagonal().iter().fold(T::zero(), |a, z| a + z.re);
            if p > T::lit(1e-14) {
                m.unscale_mut(p);
                out.push((p, DensityMatrix::from_trusted(rho.shape().clone(), m)));
            }
        }
        Ok(out)
    }
}

/// Random incoherent channel with `n_kraus` operators on dimension `dim`.
///
/// Two families are drawn from. In the first, each Kraus operator sends a
/// random subset of columns injectively to rows with Gaussian amplitudes, and
/// the amplitudes of each column are normalized jointly across the set. In the
/// second (only when `n_kraus ≥ dim`), `K_n = |r_n⟩⟨u_n|` with `{u_n}` the rows
/// of a random isometry, i.e. a rank-one measurement followed by preparation of
/// a basis state.
pub fn random_incoherent_channel<T: Real, R: Rng + ?Sized>(
    dim: usize,
    n_kraus: usize,
    rng: &mut R,
) -> Result<IncoherentChannel<T>> {
    if n_kraus == 0 || dim == 0 {
        return Err(contract("need dim ≥ 1 and n_kraus ≥ 1"));
    }
    let measure_prepare = n_kraus >= dim && rng.random_bool(0.5);
    let kraus = if measure_prepare {
        measure_prepare_kraus(dim, n_kraus, rng)
    } else {
        injective_kraus(dim, n_kraus, rng)
    };
    IncoherentChannel::new(kraus)
}

fn injective_kraus<T: Real, R: Rng + ?Sized>(
    dim: usize,
    n_kraus: usize,
    rng: &mut R,
) -> Vec<DMatrix<C<T>>> {
    loop {
        let mut kraus = vec![DMatrix::from_element(dim, dim, czero::<T>()); n_kraus];
        let mut col_norm = vec![T::zero(); dim];
        for k in kraus.iter_mut() {
            let mut rows: Vec<usize> = (0..dim).collect();
            rows.shuffle(rng);
            for (c, &r) in rows.iter().enumerate() {
                if n_kraus == 1 || rng.random_bool(0.5) {
                    let a = gaussian::<T, R>(rng);
                    col_norm[c] += norm_sqr(a);
                    k[(r, c)] = a;
                }
            }
        }
        // a column no operator touches cannot be normalized; redraw
        if col_norm.iter().any(|&n| !(n > T::lit(1e-12))) {
            continue;
        }
        for k in kraus.iter_mut() {
            for (c, &n) in col_norm.iter().enumerate() {
                let s = n.sqrt();
                for r in 0..dim {
                    k[(r, c)] = k[(r, c)].unscale(s);
                }
            }
        }
        return kraus;
    }
}

fn measure_prepare_kraus<T: Real, R: Rng + ?Sized>(
    dim: usize,
    n_kraus: usize,
    rng: &mut R,
) -> Vec<DMatrix<C<T>>> {
    // dim orthonormal columns of length n_kraus
    let mut cols: Vec<Vec<C<T>>> = loop {
        let mut cols: Vec<Vec<C<T>>> = (0..dim).map(|_| gaussian_vec(n_kraus, rng)).collect();
        if orthonormalize(&mut cols) {
            break cols;
        }
    };
    let targets: Vec<usize> = (0..n_kraus).map(|_| rng.random_range(0..dim)).collect();
    let mut kraus = Vec::with_capacity(n_kraus);
    for (n, &r) in targets.iter().enumerate() {
        let mut k = DMatrix::from_element(dim, dim, czero());
        for (c, col) in cols.iter_mut().enumerate() {
            k[(r, c)] = col[n];
        }
        kraus.push(k);
    }
    kraus
}
