//! Descent over the isometry parametrization of ensemble decompositions.
//!
//! With `ρ = Σ_k λ_k |e_k⟩⟨e_k|` on its rank-`r` support, every size-`m`
//! decomposition is `√p_i |φ_i⟩ = Σ_k V_ik √λ_k |e_k⟩` for an `m × r` matrix
//! with `VᴴV = I`. The objective `Σ_i p_i f(|φ_i|²)` is minimized by
//! Polak–Ribière conjugate gradients on the complex Stiefel manifold, with
//! projection as vector transport and a QR (Gram–Schmidt) retraction.

use rand::Rng;

use crate::functional::CoherenceFunctional;
use crate::linalg::orthonormalize;
use crate::sample::gaussian_vec;
use crate::scalar::{czero, norm_sqr, Real, C};

/// An `m × r` isometry stored as its `r` orthonormal columns of length `m`.
pub(crate) type Columns<T> = Vec<Vec<C<T>>>;

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 60;
const STALL_ROUNDS: usize = 3;

pub(crate) struct RoofProblem<'a, T: Real> {
    /// `√λ_k e_k`, one length-`d` vector per retained eigenpair.
    basis: Vec<Vec<C<T>>>,
    m: usize,
    f: &'a dyn CoherenceFunctional<T>,
}

struct Work<T: Real> {
    w: Vec<C<T>>,
    q: Vec<T>,
    df: Vec<T>,
}

#[derive(Clone, Debug)]
pub(crate) struct RestartOutcome<T: Real> {
    pub value: T,
    pub isometry: Columns<T>,
    pub converged: bool,
}

fn inner<T: Real>(a: &Columns<T>, b: &Columns<T>) -> T {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y))
        .fold(T::zero(), |acc, (u, v)| acc + u.re * v.re + u.im * v.im)
}

fn axpy<T: Real>(alpha: T, x: &Columns<T>, y: &Columns<T>) -> Columns<T> {
    x.iter()
        .zip(y)
        .map(|(xc, yc)| xc.iter().zip(yc).map(|(a, b)| a.scale(alpha) + b).collect())
        .collect()
}

fn scaled<T: Real>(alpha: T, x: &Columns<T>) -> Columns<T> {
    x.iter()
        .map(|c| c.iter().map(|a| a.scale(alpha)).collect())
        .collect()
}

/// Tangent projection `Z − V herm(VᴴZ)`.
fn project<T: Real>(v: &Columns<T>, z: &Columns<T>) -> Columns<T> {
    let r = v.len();
    let half = T::lit(0.5);
    let vz: Vec<Vec<C<T>>> = (0..r)
        .map(|k| (0..r).map(|l| crate::linalg::dot(&v[k], &z[l])).collect())
        .collect();
    let mut out = z.clone();
    for l in 0..r {
        for k in 0..r {
            let h = (vz[k][l] + vz[l][k].conj()).scale(half);
            for (o, &vk) in out[l].iter_mut().zip(&v[k]) {
                *o -= vk * h;
            }
        }
    }
    out
}

/// Unnormalized member `√p_i |φ_i⟩` for row `i` of the isometry.
pub(crate) fn member<T: Real>(basis: &[Vec<C<T>>], v: &Columns<T>, i: usize, out: &mut [C<T>]) {
    out.iter_mut().for_each(|z| *z = czero());
    for (col, b) in v.iter().zip(basis) {
        let c = col[i];
        for (o, &bx) in out.iter_mut().zip(b) {
            *o += bx * c;
        }
    }
}

impl<'a, T: Real> RoofProblem<'a, T> {
    pub fn new(basis: Vec<Vec<C<T>>>, m: usize, f: &'a dyn CoherenceFunctional<T>) -> Self {
        Self { basis, m, f }
    }

    fn rank(&self) -> usize {
        self.basis.len()
    }

    fn dim(&self) -> usize {
        self.basis[0].len()
    }

    fn work(&self) -> Work<T> {
        let d = self.dim();
        Work {
            w: vec![czero(); d],
            q: vec![T::zero(); d],
            df: vec![T::zero(); d],
        }
    }

    /// Loads `|w_x|² / p` into `ws.q` and returns `p`.
    fn load_member(&self, v: &Columns<T>, i: usize, ws: &mut Work<T>) -> T {
        member(&self.basis, v, i, &mut ws.w);
        let mut p = T::zero();
        for (q, &z) in ws.q.iter_mut().zip(&ws.w) {
            *q = norm_sqr(z);
            p += *q;
        }
        if p > T::zero() {
            ws.q.iter_mut().for_each(|q| *q /= p);
        }
        p
    }

    fn objective_with(&self, v: &Columns<T>, ws: &mut Work<T>) -> T {
        let mut total = T::zero();
        for i in 0..self.m {
            let p = self.load_member(v, i, ws);
            if p > T::zero() {
                total += p * self.f.eval_slice(&ws.q);
            }
        }
        total
    }

    pub fn objective(&self, v: &Columns<T>) -> T {
        self.objective_with(v, &mut self.work())
    }

    /// Objective and its Euclidean gradient with respect to `conj(V)`.
    fn objective_and_grad(&self, v: &Columns<T>, grad: &mut Columns<T>, ws: &mut Work<T>) -> T {
        for g in grad.iter_mut() {
            g.iter_mut().for_each(|z| *z = czero());
        }
        let mut total = T::zero();
        for i in 0..self.m {
            let p = self.load_member(v, i, ws);
            if !(p > T::zero()) {
                continue;
            }
            let fq = self.f.eval_slice(&ws.q);
            total += p * fq;
            self.f.grad(&ws.q, &mut ws.df);
            let mean = ws
                .q
                .iter()
                .zip(&ws.df)
                .fold(T::zero(), |acc, (&q, &g)| acc + q * g);
            // ∂(p f(a/p))/∂a_x = f + ∂_x f − Σ_y q_y ∂_y f, and ∂a_x/∂w̄_x = w_x
            for (x, w) in ws.w.iter_mut().enumerate() {
                let coef = if ws.q[x] > T::zero() { fq + ws.df[x] - mean } else { T::zero() };
                *w = w.scale(coef);
            }
            for (g, b) in grad.iter_mut().zip(&self.basis) {
                g[i] = crate::linalg::dot(b, &ws.w);
            }
        }
        total
    }

    pub fn random_isometry<R: Rng + ?Sized>(&self, rng: &mut R) -> Columns<T> {
        loop {
            let mut cols: Columns<T> = (0..self.rank()).map(|_| gaussian_vec(self.m, rng)).collect();
            if orthonormalize(&mut cols) {
                return cols;
            }
        }
    }

    /// The eigendecomposition itself: `V = [I_r; 0]`.
    pub fn eigen_isometry(&self) -> Columns<T> {
        (0..self.rank())
            .map(|k| {
                let mut c = vec![czero(); self.m];
                c[k] = C::new(T::one(), T::zero());
                c
            })
            .collect()
    }

    fn retract(&self, v: &Columns<T>, dir: &Columns<T>, t: T) -> Option<Columns<T>> {
        let mut x = axpy(t, dir, v);
        orthonormalize(&mut x).then_some(x)
    }

    /// Conjugate-gradient descent from `start`.
    pub fn descend(&self, start: Columns<T>, max_iters: usize, obj_tol: T) -> RestartOutcome<T> {
        let mut ws = self.work();
        let mut v = start;
        let mut grad = v.clone();
        let mut value = self.objective_and_grad(&v, &mut grad, &mut ws);
        let mut rg = project(&v, &grad);
        let mut dir = scaled(-T::one(), &rg);
        let mut step = T::one();
        let mut stall = 0;
        let grad_floor = T::default_epsilon().sqrt() * T::lit(1e-4);
        let mut converged = false;

        for _ in 0..max_iters {
            let rg2 = inner(&rg, &rg);
            if rg2.sqrt() <= grad_floor {
                converged = true;
                break;
            }
            let mut slope = inner(&rg, &dir);
            if !(slope < T::zero()) {
                dir = scaled(-T::one(), &rg);
                slope = -rg2;
            }

            let mut t = step;
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACK {
                if let Some(cand) = self.retract(&v, &dir, t) {
                    let fc = self.objective_with(&cand, &mut ws);
                    if fc <= value + T::lit(ARMIJO) * t * slope {
                        accepted = Some(cand);
                        break;
                    }
                }
                t *= T::lit(0.5);
            }
            let Some(cand) = accepted else {
                // no descent along a valid direction: stationary to working precision
                converged = true;
                break;
            };

            let new_value = self.objective_and_grad(&cand, &mut grad, &mut ws);
            let new_rg = project(&cand, &grad);
            let old_rg = project(&cand, &rg);
            let old_dir = project(&cand, &dir);
            let diff = axpy(-T::one(), &old_rg, &new_rg);
            let beta = (inner(&new_rg, &diff) / rg2).max(T::zero());
            dir = axpy(beta, &old_dir, &scaled(-T::one(), &new_rg));

            let decrease = value - new_value;
            v = cand;
            value = new_value;
            rg = new_rg;
            step = (t * T::lit(2.0)).min(T::lit(1e3));

            if decrease <= obj_tol * value.abs().max(T::one()) {
                stall += 1;
                if stall >= STALL_ROUNDS {
                    converged = true;
                    break;
                }
            } else {
                stall = 0;
            }
        }
        RestartOutcome {
            value,
            isometry: v,
            converged,
        }
    }
}
