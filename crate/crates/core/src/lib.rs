//! Convex-roof coherence measures for multipartite states, with numerical
//! checks of their superadditivity and product additivity.
//!
//! All numerics are generic over a [`Real`] scalar (`f32` or `f64`); the
//! `*64` aliases below fix the usual double-precision choice.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod error;
pub mod functional;
pub mod io;
mod linalg;
pub mod marginals;
pub mod named;
pub mod prob;
pub mod pure;
pub mod roof;
pub mod sample;
pub mod scalar;
pub mod shape;
pub mod sweep;
pub mod verify;

pub use density::{DensityMatrix, Eigen};
pub use error::{Error, Result};
pub use functional::{
    c_f_pure, check_mult_separability, CoherenceFunctional, Formation, FunctionalRegistry, Half,
    Measure,
};
pub use marginals::{dephased_weight_state, induced_ensemble, rhs_conditional_sum, IndexedEnsemble};
pub use prob::ProbabilityVector;
pub use pure::{tensor_all, PureState};
pub use roof::{qubit_formation_closed_form, roof_value, RoofConfig, RoofResult};
pub use sample::{stream_rng, IncoherentChannel};
pub use scalar::{Real, C};
pub use shape::SubsystemShape;
pub use io::{load_state, State, StateFile};
pub use sweep::{run_sweep, SweepOutcome, SweepSpec};
pub use verify::{InequalityId, Verdict, VerificationReport};

pub type PureState64 = PureState<f64>;
pub type DensityMatrix64 = DensityMatrix<f64>;
pub type ProbabilityVector64 = ProbabilityVector<f64>;
pub type RoofResult64 = RoofResult<f64>;
pub type IncoherentChannel64 = IncoherentChannel<f64>;

pub type PureState32 = PureState<f32>;
pub type DensityMatrix32 = DensityMatrix<f32>;
