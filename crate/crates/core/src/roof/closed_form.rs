use crate::density::DensityMatrix;
use crate::error::{contract, Result};
use crate::prob::entropy_bits;
use crate::scalar::{norm_sqr, Real};

/// Coherence of formation of a single qubit,
/// `h((1 + √(1 − 4|ρ₀₁|²)) / 2)` with `h` the binary entropy in bits.
pub fn qubit_formation_closed_form<T: Real>(rho: &DensityMatrix<T>) -> Result<T> {
    if rho.dim() != 2 {
        return Err(contract(format!(
            "closed form needs a qubit, got dimension {}",
            rho.dim()
        )));
    }
    let c2 = norm_sqr(rho.matrix()[(0, 1)]);
    let s = (T::one() - T::lit(4.0) * c2).max(T::zero()).sqrt();
    let p = (T::one() + s) / T::lit(2.0);
    Ok(entropy_bits(&[p, T::one() - p]))
}
