//! Ensembles induced on one party by conditioning a multipartite pure state
//! on the computational-basis outcome of every other party.
//!
//! For `|ψ⟩ = Σ c(i_t, m) |i_t⟩|m⟩`, with `m` the multi-index of the other
//! parties, the member labelled `m` has weight `w_m = Σ_{i_t} |c(i_t, m)|²` and
//! state `(1/√w_m) Σ_{i_t} c(i_t, m) |i_t⟩`. The members decompose the reduced
//! state: `Σ_m w_m |α_m⟩⟨α_m| = Tr_{other}|ψ⟩⟨ψ|`.

use serde::Serialize;

use crate::density::DensityMatrix;
use crate::error::{contract, Result};
use crate::functional::{c_f_pure, CoherenceFunctional};
use crate::pure::PureState;
use crate::scalar::{norm_sqr, Real, C};
use crate::shape::SubsystemShape;

/// Members whose weight does not exceed this are dropped.
pub const BRANCH_CUTOFF: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct EnsembleMember<T: Real> {
    /// Basis indices of the other parties, in party order.
    pub label: Vec<usize>,
    pub weight: T,
    pub state: PureState<T>,
}

#[derive(Clone, Debug)]
pub struct IndexedEnsemble<T: Real> {
    pub party: usize,
    pub members: Vec<EnsembleMember<T>>,
}

impl<T: Real> IndexedEnsemble<T> {
    /// `Σ_m w_m |α_m⟩⟨α_m|`.
    pub fn reconstruct(&self) -> Option<DensityMatrix<T>> {
        let first = self.members.first()?;
        let shape = first.state.shape().clone();
        let d = shape.total_dim();
        let mut m = nalgebra::DMatrix::from_element(d, d, crate::scalar::czero());
        for mem in &self.members {
            let a = mem.state.amplitudes();
            for i in 0..d {
                let ai = a[i].scale(mem.weight);
                for j in 0..d {
                    m[(i, j)] += ai * a[j].conj();
                }
            }
        }
        Some(DensityMatrix::from_trusted(shape, m))
    }

    /// `Σ_m w_m C_f(α_m)`.
    pub fn average(&self, f: &dyn CoherenceFunctional<T>) -> T {
        self.members
            .iter()
            .fold(T::zero(), |acc, m| acc + m.weight * c_f_pure(f, &m.state))
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Member {
            label: Vec<usize>,
            weight: f64,
            amplitudes: Vec<[f64; 2]>,
        }
        let members: Vec<Member> = self
            .members
            .iter()
            .map(|m| Member {
                label: m.label.clone(),
                weight: m.weight.as_f64(),
                amplitudes: m
                    .state
                    .amplitudes()
                    .iter()
                    .map(|z| [z.re.as_f64(), z.im.as_f64()])
                    .collect(),
            })
            .collect();
        serde_json::json!({ "party": self.party, "members": members })
    }
}

fn check_party<T: Real>(psi: &PureState<T>, party: usize) -> Result<()> {
    if psi.n_parties() < 2 {
        return Err(contract("induced ensembles need at least two parties"));
    }
    if party >= psi.n_parties() {
        return Err(contract(format!(
            "party {party} out of range for {} parties",
            psi.n_parties()
        )));
    }
    Ok(())
}

/// Conditional ensemble on `party`, members ordered by label.
pub fn induced_ensemble<T: Real>(psi: &PureState<T>, party: usize) -> Result<IndexedEnsemble<T>> {
    check_party(psi, party)?;
    let shape = psi.shape();
    let others: Vec<usize> = (0..shape.n_parties()).filter(|&p| p != party).collect();
    let other_shape = shape.restrict(&others)?;
    let dt = shape.dim(party);
    let target = SubsystemShape::single(dt)?;
    let cutoff = T::lit(BRANCH_CUTOFF);

    let mut members = Vec::new();
    let mut full = vec![0usize; shape.n_parties()];
    for label_flat in 0..other_shape.total_dim() {
        let label = other_shape.to_multi(label_flat);
        for (&p, &i) in others.iter().zip(&label) {
            full[p] = i;
        }
        let amps: Vec<C<T>> = (0..dt)
            .map(|i| {
                full[party] = i;
                psi.amplitudes()[shape.to_flat(&full)]
            })
            .collect();
        let weight = amps.iter().fold(T::zero(), |a, &z| a + norm_sqr(z));
        if weight <= cutoff {
            continue;
        }
        let s = weight.sqrt();
        let state = PureState::from_trusted(target.clone(), amps.iter().map(|z| z.unscale(s)).collect());
        members.push(EnsembleMember {
            label,
            weight,
            state,
        });
    }
    Ok(IndexedEnsemble { party, members })
}

/// `Σ_i √q_i |i⟩` with `q` the diagonal of the reduced state on `party`.
pub fn dephased_weight_state<T: Real>(psi: &PureState<T>, party: usize) -> Result<PureState<T>> {
    check_party(psi, party)?;
    let shape = psi.shape();
    let dt = shape.dim(party);
    let mut q = vec![T::zero(); dt];
    for (flat, &z) in psi.amplitudes().iter().enumerate() {
        q[shape.to_multi(flat)[party]] += norm_sqr(z);
    }
    let amps = q.into_iter().map(|x| C::new(x.max(T::zero()).sqrt(), T::zero())).collect();
    PureState::normalized(SubsystemShape::single(dt)?, amps)
}

/// One conditional average `Σ_m w_m C_f(α_m)` per party.
pub fn rhs_conditional_sum<T: Real>(
    psi: &PureState<T>,
    f: &dyn CoherenceFunctional<T>,
) -> Result<Vec<T>> {
    if psi.n_parties() < 2 {
        return Err(contract("induced ensembles need at least two parties"));
    }
    (0..psi.n_parties())
        .map(|p| induced_ensemble(psi, p).map(|e| e.average(f)))
        .collect()
}
