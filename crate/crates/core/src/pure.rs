use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::prob::ProbabilityVector;
use crate::scalar::{czero, norm_sqr, Real, C};
use crate::shape::SubsystemShape;

/// Unit-norm amplitude vector over a multipartite computational basis.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState<T: Real> {
    amps: Vec<C<T>>,
    shape: SubsystemShape,
}

impl<T: Real> PureState<T> {
    /// Validates length and unit norm (within `1e-12`).
    pub fn new(shape: SubsystemShape, amps: Vec<C<T>>) -> Result<Self> {
        check_len(&shape, amps.len())?;
        let norm = amps.iter().fold(T::zero(), |a, &z| a + norm_sqr(z)).sqrt();
        if !norm.is_finite() || (norm - T::one()).abs() > T::tol(1e-12) {
            return Err(Error::NotNormalized((norm - T::one()).abs().as_f64()));
        }
        Ok(Self { amps, shape })
    }

    /// Rescales `amps` to unit norm.
    pub fn normalized(shape: SubsystemShape, mut amps: Vec<C<T>>) -> Result<Self> {
        check_len(&shape, amps.len())?;
        let norm = amps.iter().fold(T::zero(), |a, &z| a + norm_sqr(z)).sqrt();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::NotNormalized(f64::INFINITY));
        }
        for z in amps.iter_mut() {
            *z = z.unscale(norm);
        }
        Ok(Self { amps, shape })
    }

    /// Normalizes real amplitudes; handy for hand-written states.
    pub fn from_real(shape: SubsystemShape, amps: &[T]) -> Result<Self> {
        Self::normalized(shape, amps.iter().map(|&x| C::new(x, T::zero())).collect())
    }

    /// Computational basis state `|flat⟩`.
    pub fn basis(shape: SubsystemShape, flat: usize) -> Result<Self> {
        if flat >= shape.total_dim() {
            return Err(crate::error::contract(format!(
                "basis index {flat} out of range for dimension {}",
                shape.total_dim()
            )));
        }
        let mut amps = vec![czero(); shape.total_dim()];
        amps[flat] = C::new(T::one(), T::zero());
        Ok(Self { amps, shape })
    }

    pub(crate) fn from_trusted(shape: SubsystemShape, amps: Vec<C<T>>) -> Self {
        debug_assert_eq!(shape.total_dim(), amps.len());
        Self { amps, shape }
    }

    pub fn amplitudes(&self) -> &[C<T>] {
        &self.amps
    }

    pub fn shape(&self) -> &SubsystemShape {
        &self.shape
    }

    pub fn n_parties(&self) -> usize {
        self.shape.n_parties()
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// `(|c_0|², …, |c_{d-1}|²)`.
    pub fn diag_probs(&self) -> ProbabilityVector<T> {
        ProbabilityVector::from_trusted(self.amps.iter().map(|&z| norm_sqr(z)).collect())
    }

    /// Kronecker product; the result's parties are `self`'s followed by `other`'s.
    pub fn tensor(&self, other: &Self) -> Self {
        let amps = self
            .amps
            .iter()
            .flat_map(|&a| other.amps.iter().map(move |&b| a * b))
            .collect();
        Self {
            amps,
            shape: self.shape.concat(&other.shape),
        }
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> DensityMatrix<T> {
        let d = self.dim();
        let m = nalgebra::DMatrix::from_fn(d, d, |i, j| self.amps[i] * self.amps[j].conj());
        DensityMatrix::from_trusted(self.shape.clone(), m)
    }

    /// Same amplitudes, reinterpreted under another shape of equal total dimension.
    pub fn reshaped(&self, shape: SubsystemShape) -> Result<Self> {
        check_len(&shape, self.amps.len())?;
        Ok(Self {
            amps: self.amps.clone(),
            shape,
        })
    }

    pub fn inner(&self, other: &Self) -> C<T> {
        self.amps
            .iter()
            .zip(&other.amps)
            .fold(czero(), |acc, (a, b)| acc + a.conj() * b)
    }
}

/// Folds `tensor` over a nonempty list of parts.
pub fn tensor_all<T: Real>(parts: &[PureState<T>]) -> Result<PureState<T>> {
    let (first, rest) = parts
        .split_first()
        .ok_or_else(|| crate::error::contract("tensor product of zero parts"))?;
    Ok(rest.iter().fold(first.clone(), |acc, p| acc.tensor(p)))
}

fn check_len(shape: &SubsystemShape, len: usize) -> Result<()> {
    if len != shape.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: shape.total_dim(),
            found: len,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn qubit(a: f64, b: f64) -> PureState<f64> {
        PureState::from_real(SubsystemShape::single(2).unwrap(), &[a, b]).unwrap()
    }

    fn re(v: &PureState<f64>) -> Vec<f64> {
        v.amplitudes().iter().map(|z| z.re).collect()
    }

    #[test]
    fn rejects_unnormalized() {
        let s = SubsystemShape::single(2).unwrap();
        let err = PureState::new(s.clone(), vec![C::new(1.0, 0.0), C::new(1.0, 0.0)]);
        assert!(matches!(err, Err(Error::NotNormalized(_))));
        assert!(PureState::<f64>::new(s, vec![C::new(1.0, 0.0)]).is_err());
    }

    #[test]
    fn tensor_examples() {
        let zero = qubit(1.0, 0.0);
        let one = qubit(0.0, 1.0);
        let plus = qubit(1.0, 1.0);
        let zz = zero.tensor(&zero);
        assert_eq!(zz.shape().dims(), &[2, 2]);
        assert_eq!(re(&zz), vec![1.0, 0.0, 0.0, 0.0]);
        for a in re(&plus.tensor(&plus)) {
            assert!((a - 0.5).abs() < 1e-15);
        }
        let v = re(&plus.tensor(&one));
        let expected = [0.0, FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2];
        for (a, b) in v.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn diag_probs_examples() {
        assert_eq!(qubit(1.0, 0.0).diag_probs().as_slice(), &[1.0, 0.0]);
        let p = qubit(1.0, 1.0).diag_probs();
        assert!((p.as_slice()[0] - 0.5).abs() < 1e-15);
        let p = qubit(0.5, 3f64.sqrt() / 2.0).diag_probs();
        assert!((p.as_slice()[0] - 0.25).abs() < 1e-15);
        assert!((p.as_slice()[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn generic_over_f32() {
        let s = SubsystemShape::single(2).unwrap();
        let plus = PureState::<f32>::from_real(s, &[1.0, 1.0]).unwrap();
        let pp = plus.tensor(&plus);
        let total: f32 = pp.diag_probs().as_slice().iter().sum();
        assert!((total - 1.0).abs() < 1e-6);
    }
}
