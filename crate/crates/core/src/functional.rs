//! Coherence functionals `f` on probability vectors and the pure-state
//! measure `C_f(φ) = f(|c_0|², …, |c_{d-1}|²)`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{entropy_bits, ProbabilityVector};
use crate::pure::PureState;
use crate::sample::{random_probability_vector, stream_rng};
use crate::scalar::Real;

/// A symmetric function on probability vectors, in bits.
///
/// Implementations must vanish on deterministic vectors, be invariant under
/// permutations of the entries, and ignore zero padding. Registration through
/// [`FunctionalRegistry::register`] spot-checks all three.
pub trait CoherenceFunctional<T: Real>: Send + Sync {
    fn name(&self) -> &str;

    /// Evaluates `f` on entries summing to one.
    fn eval_slice(&self, p: &[T]) -> T;

    fn eval(&self, p: &ProbabilityVector<T>) -> T {
        self.eval_slice(p.as_slice())
    }

    /// Partial derivatives `∂f/∂p_x`, used by the roof optimizer. Only the
    /// component tangent to the simplex matters. The default is a finite
    /// difference on the raw formula.
    fn grad(&self, p: &[T], out: &mut [T]) {
        let h = T::default_epsilon().sqrt();
        let mut work = p.to_vec();
        for x in 0..p.len() {
            let base = work[x];
            let (lo, span) = if base >= h { (base - h, h + h) } else { (base, h) };
            work[x] = lo + span;
            let up = self.eval_slice(&work);
            work[x] = lo;
            let down = self.eval_slice(&work);
            work[x] = base;
            out[x] = (up - down) / span;
        }
    }

    /// Whether `f(x) + f(y) = f(x ⊗ y)` holds for all probability vectors.
    fn declares_mult_separable(&self) -> bool {
        false
    }

    /// Whether the pure-state sufficient conditions for superadditivity are
    /// known to hold for this `f`. When false, negative gaps are reported as
    /// findings rather than failures.
    fn certified_sufficient(&self) -> bool {
        false
    }
}

/// Shannon entropy of the diagonal: the coherence of formation on pure states.
#[derive(Clone, Copy, Debug, Default)]
pub struct Formation;

/// `2 log₂ Σ √p_i`, the order-½ Rényi entropy of the diagonal.
#[derive(Clone, Copy, Debug, Default)]
pub struct Half;

impl<T: Real> CoherenceFunctional<T> for Formation {
    fn name(&self) -> &str {
        "formation"
    }

    fn eval_slice(&self, p: &[T]) -> T {
        f_formation(p)
    }

    fn grad(&self, p: &[T], out: &mut [T]) {
        let inv_ln2 = T::one() / T::ln_2();
        for (g, &q) in out.iter_mut().zip(p) {
            *g = if q > T::zero() { -q.log2() - inv_ln2 } else { T::zero() };
        }
    }

    fn declares_mult_separable(&self) -> bool {
        true
    }

    fn certified_sufficient(&self) -> bool {
        true
    }
}

impl<T: Real> CoherenceFunctional<T> for Half {
    fn name(&self) -> &str {
        "half"
    }

    fn eval_slice(&self, p: &[T]) -> T {
        f_half(p)
    }

    fn grad(&self, p: &[T], out: &mut [T]) {
        let s = p
            .iter()
            .fold(T::zero(), |a, &q| a + q.max(T::zero()).sqrt());
        let scale = T::one() / (T::ln_2() * s);
        for (g, &q) in out.iter_mut().zip(p) {
            *g = if q > T::zero() { scale / q.sqrt() } else { T::zero() };
        }
    }

    fn declares_mult_separable(&self) -> bool {
        true
    }
}

/// Shannon entropy in bits, `0 · log 0 := 0`.
pub fn f_formation<T: Real>(p: &[T]) -> T {
    entropy_bits(p)
}

/// `2 log₂ Σ √p_i`, clamped at zero against rounding.
pub fn f_half<T: Real>(p: &[T]) -> T {
    let s = p
        .iter()
        .fold(T::zero(), |a, &q| a + q.max(T::zero()).sqrt());
    (T::lit(2.0) * s.log2()).max(T::zero())
}

/// `C_f(ψ) = f(diag_probs(ψ))`.
pub fn c_f_pure<T: Real>(f: &dyn CoherenceFunctional<T>, psi: &PureState<T>) -> T {
    f.eval(&psi.diag_probs())
}

/// Names of the built-in measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Formation,
    Half,
}

impl Measure {
    pub const ALL: [Measure; 2] = [Measure::Formation, Measure::Half];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Formation => "formation",
            Measure::Half => "half",
        }
    }

    pub fn functional<T: Real>(self) -> Arc<dyn CoherenceFunctional<T>> {
        match self {
            Measure::Formation => Arc::new(Formation),
            Measure::Half => Arc::new(Half),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "formation" => Ok(Measure::Formation),
            "half" => Ok(Measure::Half),
            other => Err(Error::UnknownMeasure(other.to_string())),
        }
    }
}

/// Result of comparing `f(x) + f(y)` against `f(x ⊗ y)`.
#[derive(Clone, Debug, Serialize)]
pub struct SeparabilityCheck<T: Real> {
    pub sum_of_parts: T,
    pub of_product: T,
    pub residual: T,
    pub tol: T,
    pub pass: bool,
}

pub fn check_mult_separability<T: Real>(
    f: &dyn CoherenceFunctional<T>,
    x: &ProbabilityVector<T>,
    y: &ProbabilityVector<T>,
    tol: T,
) -> SeparabilityCheck<T> {
    let sum_of_parts = f.eval(x) + f.eval(y);
    let of_product = f.eval(&x.kron(y));
    let residual = (sum_of_parts - of_product).abs();
    SeparabilityCheck {
        sum_of_parts,
        of_product,
        residual,
        tol,
        pass: residual <= tol,
    }
}

/// Samples `pairs` random vector pairs and reports whether `f` looked
/// multiplicatively separable on all of them.
pub fn spot_check_separability<T: Real>(
    f: &dyn CoherenceFunctional<T>,
    pairs: usize,
    seed: u64,
    tol: T,
) -> bool {
    (0..pairs as u64).all(|i| {
        let mut rng = stream_rng(seed, i);
        let x = random_probability_vector::<T, _>(2 + (i as usize % 3), &mut rng);
        let y = random_probability_vector::<T, _>(2 + (i as usize / 3 % 3), &mut rng);
        check_mult_separability(f, &x, &y, tol).pass
    })
}

/// Name-keyed collection of functionals.
#[derive(Clone)]
pub struct FunctionalRegistry<T: Real> {
    entries: Vec<Arc<dyn CoherenceFunctional<T>>>,
}

impl<T: Real> Default for FunctionalRegistry<T> {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl<T: Real> FunctionalRegistry<T> {
    pub fn empty() -> Self {
        Self {
            entries: Vec::new(),
        }
    }

    pub fn with_builtins() -> Self {
        Self {
            entries: Measure::ALL.iter().map(|m| m.functional()).collect(),
        }
    }

    /// Adds `f` after spot-checking zero on deterministic vectors,
    /// permutation symmetry, and padding invariance on seeded random vectors.
    pub fn register(&mut self, f: Arc<dyn CoherenceFunctional<T>>, seed: u64) -> Result<()> {
        if self.entries.iter().any(|e| e.name() == f.name()) {
            return Err(Error::Registration {
                name: f.name().into(),
                reason: "name already registered".into(),
            });
        }
        validate_functional(f.as_ref(), seed)?;
        self.entries.push(f);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn CoherenceFunctional<T>>> {
        self.entries
            .iter()
            .find(|e| e.name() == name)
            .cloned()
            .ok_or_else(|| Error::UnknownMeasure(name.into()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name()).collect()
    }
}

pub(crate) fn validate_functional<T: Real>(f: &dyn CoherenceFunctional<T>, seed: u64) -> Result<()> {
    let fail = |reason: String| Error::Registration {
        name: f.name().into(),
        reason,
    };
    let tol = T::tol(1e-12);
    for d in 2..=5 {
        for i in 0..d {
            let mut e = vec![T::zero(); d];
            e[i] = T::one();
            let v = f.eval_slice(&e);
            if v.abs() > tol {
                return Err(fail(format!("f(e_{i}) = {v} in dimension {d}")));
            }
        }
    }
    for trial in 0..32u64 {
        let mut rng = stream_rng(seed, trial);
        let p = random_probability_vector::<T, _>(2 + (trial as usize % 4), &mut rng);
        let v = f.eval(&p);
        if !v.is_finite() || v < -tol {
            return Err(fail(format!("negative or non-finite value {v}")));
        }
        let scale = T::one().max(v.abs());
        let mut shuffled = p.as_slice().to_vec();
        shuffled.shuffle(&mut rng);
        if (f.eval_slice(&shuffled) - v).abs() > tol * scale {
            return Err(fail("not permutation symmetric".into()));
        }
        let mut padded = p.as_slice().to_vec();
        padded.push(T::zero());
        padded.insert(0, T::zero());
        if (f.eval_slice(&padded) - v).abs() > tol * scale {
            return Err(fail("not invariant under zero padding".into()));
        }
    }
    Ok(())
}
