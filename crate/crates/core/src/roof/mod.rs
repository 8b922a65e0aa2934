//! Convex-roof extension `C_f(ρ) = inf Σ p_i C_f(φ_i)` over ensemble
//! decompositions of `ρ`.
//!
//! The returned value is always attained by the returned ensemble, so it is an
//! upper bound on the true infimum; callers comparing roof values must treat
//! it that way.

mod closed_form;
mod optimizer;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use closed_form::qubit_formation_closed_form;

use crate::density::DensityMatrix;
use crate::error::{contract, Error, Result};
use crate::functional::{c_f_pure, CoherenceFunctional};
use crate::marginals::BRANCH_CUTOFF;
use crate::prob::ProbabilityVector;
use crate::pure::PureState;
use crate::sample::stream_rng;
use crate::scalar::{czero, Real, C};
use crate::shape::SubsystemShape;
use optimizer::{Columns, RoofProblem};

/// Largest automatic ensemble size.
pub const AUTO_ENSEMBLE_CAP: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleSize {
    /// `r²` for numerical rank `r`, capped at [`AUTO_ENSEMBLE_CAP`] (never below `r`).
    Auto,
    Fixed(usize),
}

impl EnsembleSize {
    pub fn resolve(self, rank: usize) -> usize {
        match self {
            EnsembleSize::Auto => (rank * rank).min(AUTO_ENSEMBLE_CAP).max(rank),
            EnsembleSize::Fixed(m) => m,
        }
    }
}

impl std::str::FromStr for EnsembleSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(EnsembleSize::Auto);
        }
        s.parse::<usize>()
            .map(EnsembleSize::Fixed)
            .map_err(|_| Error::Schema(format!("ensemble size `{s}` is neither `auto` nor an integer")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoofConfig {
    pub ensemble_size: EnsembleSize,
    pub restarts: usize,
    pub max_iters: usize,
    pub obj_tol: f64,
    pub seed: u64,
}

impl Default for RoofConfig {
    fn default() -> Self {
        Self {
            ensemble_size: EnsembleSize::Auto,
            restarts: 32,
            max_iters: 2000,
            obj_tol: 1e-8,
            seed: 0,
        }
    }
}

impl RoofConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    fn validate(&self, rank: usize) -> Result<usize> {
        if self.restarts == 0 {
            return Err(contract("restarts must be ≥ 1"));
        }
        if !(self.obj_tol > 0.0) {
            return Err(contract("obj_tol must be > 0"));
        }
        let m = self.ensemble_size.resolve(rank);
        if m < rank {
            return Err(contract(format!("ensemble size {m} is below the rank {rank}")));
        }
        Ok(m)
    }
}

/// How a roof value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoofMethod {
    /// Rank one: the only decomposition is the state itself.
    Pure,
    /// Diagonal input: decomposed into basis states.
    Incoherent,
    /// Multi-restart descent over isometries.
    Optimized,
}

#[derive(Clone, Debug)]
pub struct RoofResult<T: Real> {
    pub value: T,
    pub ensemble: Vec<(T, PureState<T>)>,
    pub per_restart_values: Vec<T>,
    pub converged: bool,
    pub rank: usize,
    pub ensemble_size: usize,
    /// Objective of the eigendecomposition ensemble.
    pub eigen_objective: T,
    pub method: RoofMethod,
}

impl<T: Real> RoofResult<T> {
    pub fn reconstruct(&self) -> DensityMatrix<T> {
        let shape = self.ensemble[0].1.shape().clone();
        let d = shape.total_dim();
        let mut m = nalgebra::DMatrix::from_element(d, d, czero());
        for (w, psi) in &self.ensemble {
            let a = psi.amplitudes();
            for i in 0..d {
                let ai = a[i].scale(*w);
                for j in 0..d {
                    m[(i, j)] += ai * a[j].conj();
                }
            }
        }
        DensityMatrix::from_trusted(shape, m)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let ensemble: Vec<serde_json::Value> = self
            .ensemble
            .iter()
            .map(|(w, psi)| {
                serde_json::json!({
                    "weight": w.as_f64(),
                    "amplitudes": psi
                        .amplitudes()
                        .iter()
                        .map(|z| [z.re.as_f64(), z.im.as_f64()])
                        .collect::<Vec<_>>(),
                })
            })
            .collect();
        serde_json::json!({
            "value": self.value.as_f64(),
            "bound": "upper",
            "method": self.method,
            "converged": self.converged,
            "rank": self.rank,
            "ensemble_size": self.ensemble_size,
            "eigen_objective": self.eigen_objective.as_f64(),
            "per_restart_values": self.per_restart_values.iter().map(|v| v.as_f64()).collect::<Vec<_>>(),
            "ensemble": ensemble,
        })
    }
}

/// `Σ_i p_i C_f(φ_i)`; the weights must form a probability vector.
pub fn ensemble_objective<T: Real>(
    ensemble: &[(T, PureState<T>)],
    f: &dyn CoherenceFunctional<T>,
) -> Result<T> {
    ProbabilityVector::new(ensemble.iter().map(|(w, _)| *w).collect())?;
    Ok(ensemble
        .iter()
        .fold(T::zero(), |acc, (w, psi)| acc + *w * c_f_pure(f, psi)))
}

/// Support eigenpairs scaled as `√λ_k e_k`.
fn scaled_support<T: Real>(rho: &DensityMatrix<T>) -> (Vec<Vec<C<T>>>, usize) {
    let eig = rho.eig_psd();
    let r = eig.rank();
    let basis = (0..r)
        .map(|k| {
            let s = eig.values[k].sqrt();
            eig.vectors.column(k).iter().map(|z| z.scale(s)).collect()
        })
        .collect();
    (basis, r)
}

fn ensemble_from_columns<T: Real>(
    shape: &SubsystemShape,
    basis: &[Vec<C<T>>],
    v: &Columns<T>,
    m: usize,
) -> Vec<(T, PureState<T>)> {
    let mut w = vec![czero(); shape.total_dim()];
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        optimizer::member(basis, v, i, &mut w);
        let p = crate::linalg::norm(&w);
        let p2 = p * p;
        if p2 > T::lit(BRANCH_CUTOFF) {
            let amps = w.iter().map(|z| z.unscale(p)).collect();
            out.push((p2, PureState::from_trusted(shape.clone(), amps)));
        }
    }
    out
}

/// Decomposition `√p_i |φ_i⟩ = Σ_k V_ik √λ_k |e_k⟩` for an `m × r` isometry
/// `V`, with `r` the numerical rank of `ρ`.
pub fn decompose_with_isometry<T: Real>(
    rho: &DensityMatrix<T>,
    v: &nalgebra::DMatrix<C<T>>,
) -> Result<Vec<(T, PureState<T>)>> {
    let (basis, r) = scaled_support(rho);
    if v.ncols() != r || v.nrows() < r {
        return Err(contract(format!(
            "isometry must be m × {r} with m ≥ {r}, got {} × {}",
            v.nrows(),
            v.ncols()
        )));
    }
    let gram = v.adjoint() * v;
    let dev = (gram - nalgebra::DMatrix::identity(r, r))
        .iter()
        .fold(T::zero(), |a, z| a.max(crate::scalar::norm_sqr(*z).sqrt()));
    if dev > T::tol(1e-10) {
        return Err(contract(format!("VᴴV deviates from I by {dev}")));
    }
    let cols: Columns<T> = (0..r).map(|k| v.column(k).iter().copied().collect()).collect();
    Ok(ensemble_from_columns(rho.shape(), &basis, &cols, v.nrows()))
}

/// Convex-roof value of `ρ` under `f`.
///
/// Rank-one inputs return the pure value and diagonal inputs return the
/// basis-state decomposition. Otherwise each restart descends from an
/// independently seeded random isometry (stream = restart index) and the
/// smallest objective wins, never worse than the eigendecomposition.
pub fn roof_value<T: Real>(
    rho: &DensityMatrix<T>,
    f: &dyn CoherenceFunctional<T>,
    cfg: &RoofConfig,
) -> Result<RoofResult<T>> {
    let (basis, rank) = scaled_support(rho);
    let m = cfg.validate(rank)?;
    let shape = rho.shape();

    if rank == 1 {
        let psi = rho.as_pure().ok_or_else(|| contract("rank-one state without a pure vector"))?;
        let value = c_f_pure(f, &psi);
        return Ok(RoofResult {
            value,
            ensemble: vec![(T::one(), psi)],
            per_restart_values: Vec::new(),
            converged: true,
            rank,
            ensemble_size: m,
            eigen_objective: value,
            method: RoofMethod::Pure,
        });
    }

    let eigen_problem = RoofProblem::new(basis.clone(), m, f);
    let eigen_iso = eigen_problem.eigen_isometry();
    let eigen_objective = eigen_problem.objective(&eigen_iso);

    if rho.is_incoherent(T::tol(1e-14)) {
        let ensemble: Vec<(T, PureState<T>)> = rho
            .diag_probs()
            .as_slice()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > T::lit(BRANCH_CUTOFF))
            .map(|(i, &p)| (p, PureState::basis(shape.clone(), i).expect("in range")))
            .collect();
        if ensemble.len() <= m {
            let total = ensemble.iter().fold(T::zero(), |a, (p, _)| a + *p);
            let ensemble: Vec<_> = ensemble.into_iter().map(|(p, s)| (p / total, s)).collect();
            let value = ensemble_objective(&ensemble, f)?;
            return Ok(RoofResult {
                value,
                ensemble,
                per_restart_values: Vec::new(),
                converged: true,
                rank,
                ensemble_size: m,
                eigen_objective,
                method: RoofMethod::Incoherent,
            });
        }
    }

    let obj_tol = T::lit(cfg.obj_tol);
    let outcomes: Vec<_> = (0..cfg.restarts as u64)
        .into_par_iter()
        .map(|restart| {
            let problem = RoofProblem::new(basis.clone(), m, f);
            let mut rng = stream_rng(cfg.seed, restart);
            let start = problem.random_isometry(&mut rng);
            problem.descend(start, cfg.max_iters, obj_tol)
        })
        .collect();

    let per_restart_values: Vec<T> = outcomes.iter().map(|o| o.value).collect();
    let best = outcomes
        .iter()
        .enumerate()
        .fold(0, |b, (i, o)| if o.value < outcomes[b].value { i } else { b });
    let (iso, converged) = if outcomes[best].value <= eigen_objective {
        (&outcomes[best].isometry, outcomes[best].converged)
    } else {
        (&eigen_iso, outcomes[best].converged)
    };

    let ensemble = ensemble_from_columns(shape, &basis, iso, m);
    let total = ensemble.iter().fold(T::zero(), |a, (p, _)| a + *p);
    let ensemble: Vec<_> = ensemble.into_iter().map(|(p, s)| (p / total, s)).collect();
    let value = ensemble_objective(&ensemble, f)?;
    Ok(RoofResult {
        value,
        ensemble,
        per_restart_values,
        converged,
        rank,
        ensemble_size: m,
        eigen_objective,
        method: RoofMethod::Optimized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::{Formation, Half};
    use crate::named;
    use crate::sample::{ginibre_mixed, haar_pure, random_diagonal};
    use nalgebra::DMatrix;

    fn qubit_shape() -> SubsystemShape {
        SubsystemShape::single(2).unwrap()
    }

    fn quick() -> RoofConfig {
        RoofConfig::default().with_restarts(8)
    }

    #[test]
    fn pure_input_is_trivial() {
        let psi: PureState<f64> = haar_pure(&SubsystemShape::new(vec![2, 3]).unwrap(), &mut stream_rng(1, 0));
        let r = roof_value(&psi.projector(), &Formation, &quick()).unwrap();
        assert_eq!(r.method, RoofMethod::Pure);
        assert_eq!(r.ensemble.len(), 1);
        assert!((r.value - c_f_pure(&Formation, &psi)).abs() < 1e-12);
    }

    #[test]
    fn diagonal_input_is_zero() {
        let rho: DensityMatrix<f64> = random_diagonal(&SubsystemShape::single(3).unwrap(), &mut stream_rng(2, 0));
        let r = roof_value(&rho, &Half, &quick()).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.ensemble.iter().all(|(_, s)| s.diag_probs().is_deterministic(0.0)));
    }

    #[test]
    fn qubit_example() {
        let m = DMatrix::from_row_slice(2, 2, &[0.5, 0.25, 0.25, 0.5].map(|x| C::new(x, 0.0)));
        let rho = DensityMatrix::<f64>::new(qubit_shape(), m).unwrap();
        let r = roof_value(&rho, &Formation, &RoofConfig::default()).unwrap();
        assert!((r.value - 0.354_578_902_665_270_03).abs() < 1e-4, "{}", r.value);
        assert!(r.reconstruct().max_abs_diff(&rho) < 1e-8);
    }

    #[test]
    fn ensemble_objective_examples() {
        let plus = named::plus::<f64>(2);
        let zero = PureState::basis(qubit_shape(), 0).unwrap();
        assert!((ensemble_objective(&[(1.0, plus.clone())], &Formation).unwrap() - 1.0).abs() < 1e-15);
        let mixed = [(0.5, plus), (0.5, zero.clone())];
        assert!((ensemble_objective(&mixed, &Formation).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(ensemble_objective(&[(1.0, zero.clone())], &Formation).unwrap(), 0.0);
        assert!(ensemble_objective(&[(0.7, zero)], &Formation).is_err());
    }

    #[test]
    fn result_invariants() {
        let shape = SubsystemShape::new(vec![2, 2]).unwrap();
        let rho: DensityMatrix<f64> = ginibre_mixed(&shape, 2, &mut stream_rng(3, 0)).unwrap();
        let r = roof_value(&rho, &Formation, &quick()).unwrap();
        assert!(r.reconstruct().max_abs_diff(&rho) < 1e-8);
        assert!((ensemble_objective(&r.ensemble, &Formation).unwrap() - r.value).abs() < 1e-10);
        assert!(r.value <= r.eigen_objective + 1e-10);
        assert!(r.ensemble.len() <= r.ensemble_size);
        assert_eq!(r.per_restart_values.len(), 8);
    }

    #[test]
    fn seed_determinism() {
        let rho: DensityMatrix<f64> = ginibre_mixed(&qubit_shape(), 2, &mut stream_rng(4, 0)).unwrap();
        let a = roof_value(&rho, &Formation, &quick().with_seed(7)).unwrap();
        let b = roof_value(&rho, &Formation, &quick().with_seed(7)).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.per_restart_values), bits(&b.per_restart_values));
    }

    #[test]
    fn config_contract() {
        let rho: DensityMatrix<f64> = ginibre_mixed(&qubit_shape(), 2, &mut stream_rng(4, 0)).unwrap();
        let mut cfg = quick();
        cfg.ensemble_size = EnsembleSize::Fixed(1);
        assert!(roof_value(&rho, &Formation, &cfg).is_err());
        assert!(roof_value(&rho, &Formation, &quick().with_restarts(0)).is_err());
        assert_eq!(EnsembleSize::Auto.resolve(2), 4);
        assert_eq!(EnsembleSize::Auto.resolve(5), 16);
        assert_eq!(EnsembleSize::Auto.resolve(20), 20);
        assert_eq!("auto".parse::<EnsembleSize>().unwrap(), EnsembleSize::Auto);
        assert_eq!("6".parse::<EnsembleSize>().unwrap(), EnsembleSize::Fixed(6));
    }

    #[test]
    fn isometry_pushforward_reconstructs() {
        let shape = SubsystemShape::new(vec![3]).unwrap();
        let rho: DensityMatrix<f64> = ginibre_mixed(&shape, 2, &mut stream_rng(8, 0)).unwrap();
        let h = 0.5f64.sqrt();
        let v = DMatrix::from_row_slice(
            3,
            2,
            &[h, 0.0, 0.0, 1.0, h, 0.0].map(|x| C::new(x, 0.0)),
        );
        let ens = decompose_with_isometry(&rho, &v).unwrap();
        let total: f64 = ens.iter().map(|(w, _)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(decompose_with_isometry(&rho, &DMatrix::from_element(3, 2, C::new(1.0, 0.0))).is_err());
    }
}
