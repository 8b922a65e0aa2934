//! Frequently used reference states.

use crate::error::{contract, Result};
use crate::pure::PureState;
use crate::scalar::Real;
use crate::shape::SubsystemShape;

/// Uniform superposition `(1/√d) Σ |i⟩`.
pub fn plus<T: Real>(d: usize) -> PureState<T> {
    let s = SubsystemShape::single(d).expect("d ≥ 2");
    PureState::from_real(s, &vec![T::one(); d]).expect("nonzero")
}

/// `(|00⟩ + |11⟩)/√2`.
pub fn bell<T: Real>() -> PureState<T> {
    ghz(2).expect("two parties")
}

/// `(|0…0⟩ + |1…1⟩)/√2` on `n` qubits.
pub fn ghz<T: Real>(n: usize) -> Result<PureState<T>> {
    if n < 1 {
        return Err(contract("GHZ needs at least one qubit"));
    }
    let s = SubsystemShape::new(vec![2; n])?;
    let mut a = vec![T::zero(); s.total_dim()];
    a[0] = T::one();
    a[s.total_dim() - 1] = T::one();
    PureState::from_real(s, &a)
}

/// `(|0…01⟩ + |0…10⟩ + … + |10…0⟩)/√n` on `n` qubits.
pub fn w<T: Real>(n: usize) -> Result<PureState<T>> {
    if n < 1 {
        return Err(contract("W state needs at least one qubit"));
    }
    let s = SubsystemShape::new(vec![2; n])?;
    let mut a = vec![T::zero(); s.total_dim()];
    for k in 0..n {
        a[1 << k] = T::one();
    }
    PureState::from_real(s, &a)
}
