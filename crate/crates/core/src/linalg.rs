//! Small dense helpers on column lists; the optimizer works on these
//! directly rather than on `DMatrix` to keep the inner loop allocation-free.

use crate::scalar::{czero, norm_sqr, Real, C};

pub(crate) fn dot<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    a.iter().zip(b).fold(czero(), |acc, (x, y)| acc + x.conj() * y)
}

pub(crate) fn norm<T: Real>(a: &[C<T>]) -> T {
    a.iter().fold(T::zero(), |acc, &z| acc + norm_sqr(z)).sqrt()
}

/// Modified Gram–Schmidt with one reorthogonalization pass. Produces the Q
/// factor of a QR decomposition with positive real R diagonal. Returns
/// `false` if the columns are numerically dependent.
pub(crate) fn orthonormalize<T: Real>(cols: &mut [Vec<C<T>>]) -> bool {
    let floor = T::default_epsilon() * T::lit(1e3);
    for k in 0..cols.len() {
        let (done, rest) = cols.split_at_mut(k);
        let v = &mut rest[0];
        let before = norm(v);
        for _ in 0..2 {
            for q in done.iter() {
                let c = dot(q, v);
                for (x, &qx) in v.iter_mut().zip(q.iter()) {
                    *x -= qx * c;
                }
            }
        }
        let n = norm(v);
        if !(n > floor * before.max(T::one())) {
            return false;
        }
        for x in v.iter_mut() {
            *x = x.unscale(n);
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormalizes() {
        let mut cols: Vec<Vec<C<f64>>> = vec![
            vec![C::new(1.0, 0.5), C::new(2.0, 0.0), C::new(0.0, 1.0)],
            vec![C::new(0.0, 1.0), C::new(1.0, -1.0), C::new(3.0, 0.0)],
        ];
        assert!(orthonormalize(&mut cols));
        assert!((norm(&cols[0]) - 1.0).abs() < 1e-14);
        assert!((norm(&cols[1]) - 1.0).abs() < 1e-14);
        assert!(dot(&cols[0], &cols[1]).norm() < 1e-14);

        let mut dep = vec![vec![C::new(1.0, 0.0), czero()], vec![C::new(2.0, 0.0), czero()]];
        assert!(!orthonormalize(&mut dep));
    }
}
