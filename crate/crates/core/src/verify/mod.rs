//! Structured verdicts for the superadditivity inequalities, product
//! additivity, and the coherence-measure axioms.
//!
//! Every report carries `gap = lhs − Σ rhs` and a verdict. Roof values are
//! optimizer upper bounds, so reports that consume them say which side is
//! bounded in `direction_notes`, and the verdict is downgraded to
//! `indeterminate` when that bound could hide a violation.

mod axioms;
mod checks;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use axioms::{check_axioms, AxiomSuiteConfig, FORWARD_ONLY_NOTE};
pub use checks::{
    check_bipartite_alternative, check_bipartite_sufficient, check_mixed_superadditivity,
    check_npartite, check_product_additivity, check_superadditivity_reduced, check_tripartite,
    MarginalMethod,
};

use crate::density::DensityMatrix;
use crate::error::Error;
use crate::pure::PureState;
use crate::scalar::Real;

/// Default tolerance for checks that only involve pure-state values.
pub const PURE_TOL: f64 = 1e-9;
/// Default tolerance when any roof value participates.
pub const ROOF_TOL: f64 = 1e-4;

/// Note attached to every report built from induced ensembles.
pub const CONDITIONAL_READING: &str = "per-party terms use the ensemble conditioned on the \
    full multi-index of all other parties";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InequalityId {
    BipartiteSufficient,
    BipartiteAlternative,
    Tripartite,
    Npartite,
    ReducedSuperadditivity,
    MixedSuperadditivity,
    ProductAdditivity,
    AxiomPositivity,
    AxiomIncoherentZero,
    AxiomMonotonicity,
    AxiomSelective,
    AxiomConvexity,
}

impl InequalityId {
    pub const ALL: [InequalityId; 12] = [
        InequalityId::BipartiteSufficient,
        InequalityId::BipartiteAlternative,
        InequalityId::Tripartite,
        InequalityId::Npartite,
        InequalityId::ReducedSuperadditivity,
        InequalityId::MixedSuperadditivity,
        InequalityId::ProductAdditivity,
        InequalityId::AxiomPositivity,
        InequalityId::AxiomIncoherentZero,
        InequalityId::AxiomMonotonicity,
        InequalityId::AxiomSelective,
        InequalityId::AxiomConvexity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InequalityId::BipartiteSufficient => "bipartite-sufficient",
            InequalityId::BipartiteAlternative => "bipartite-alternative",
            InequalityId::Tripartite => "tripartite",
            InequalityId::Npartite => "npartite",
            InequalityId::ReducedSuperadditivity => "reduced-superadditivity",
            InequalityId::MixedSuperadditivity => "mixed-superadditivity",
            InequalityId::ProductAdditivity => "product-additivity",
            InequalityId::AxiomPositivity => "axiom-positivity",
            InequalityId::AxiomIncoherentZero => "axiom-incoherent-zero",
            InequalityId::AxiomMonotonicity => "axiom-monotonicity",
            InequalityId::AxiomSelective => "axiom-selective",
            InequalityId::AxiomConvexity => "axiom-convexity",
        }
    }
}

impl fmt::Display for InequalityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InequalityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        InequalityId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::Schema(format!("unknown inequality id `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
    /// The check's hypothesis does not hold for this measure.
    NotApplicable,
    /// Negative gap for a measure the inequality is not established for.
    Finding,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Indeterminate => "indeterminate",
            Verdict::NotApplicable => "not-applicable",
            Verdict::Finding => "FINDING",
        }
    }

    /// Whether this verdict makes a run exit non-zero.
    pub fn is_alarm(self) -> bool {
        matches!(self, Verdict::Fail | Verdict::Finding)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhsTerm {
    pub label: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub inequality_id: InequalityId,
    pub dims: Vec<usize>,
    pub measure: String,
    pub lhs: f64,
    pub rhs_terms: Vec<RhsTerm>,
    pub gap: f64,
    pub tol: f64,
    pub verdict: Verdict,
    pub direction_notes: String,
    pub input_digest: String,
    pub seed: u64,
    /// Drill-down data such as induced ensembles or roof decompositions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<serde_json::Value>,
}

impl VerificationReport {
    pub fn rhs_total(&self) -> f64 {
        self.rhs_terms.iter().map(|t| t.value).sum()
    }

    pub fn dims_label(&self) -> String {
        self.dims
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join("x")
    }
}

/// How a verdict is derived from the gap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Rule {
    /// Both sides exact: pass iff gap ≥ −tol.
    Inequality,
    /// Like `Inequality`, but a violation is a finding, not a failure.
    Exploratory,
    /// Pass iff |gap| ≤ tol.
    Equality,
    /// A pass may be hidden/overstated by an upper-bound side: pass is
    /// trusted, a violation is indeterminate.
    PassTrusted,
    /// A violation is trusted, a pass is indeterminate.
    ViolationTrusted,
}

pub(crate) fn decide(gap: f64, tol: f64, rule: Rule, alarm: Verdict) -> Verdict {
    let ok = match rule {
        Rule::Equality => gap.abs() <= tol,
        _ => gap >= -tol,
    };
    match (rule, ok) {
        (Rule::Inequality | Rule::Equality, true) => Verdict::Pass,
        (Rule::Inequality | Rule::Equality, false) => alarm,
        (Rule::Exploratory, true) => Verdict::Pass,
        (Rule::Exploratory, false) => Verdict::Finding,
        (Rule::PassTrusted, true) => Verdict::Pass,
        (Rule::PassTrusted, false) => Verdict::Indeterminate,
        (Rule::ViolationTrusted, true) => Verdict::Indeterminate,
        (Rule::ViolationTrusted, false) => alarm,
    }
}

pub(crate) struct ReportBuilder {
    pub id: InequalityId,
    pub dims: Vec<usize>,
    pub measure: String,
    pub lhs: f64,
    pub rhs_terms: Vec<RhsTerm>,
    pub tol: f64,
    pub notes: Vec<String>,
    pub digest: String,
    pub seed: u64,
    pub detail: Option<serde_json::Value>,
}

impl ReportBuilder {
    pub fn new(id: InequalityId, dims: &[usize], measure: &str, tol: f64) -> Self {
        Self {
            id,
            dims: dims.to_vec(),
            measure: measure.to_string(),
            lhs: 0.0,
            rhs_terms: Vec::new(),
            tol,
            notes: Vec::new(),
            digest: String::new(),
            seed: 0,
            detail: None,
        }
    }

    pub fn rhs(&mut self, label: impl Into<String>, value: f64) {
        self.rhs_terms.push(RhsTerm {
            label: label.into(),
            value,
        });
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn finish(self, rule: Rule, alarm: Verdict) -> VerificationReport {
        let rhs: f64 = self.rhs_terms.iter().map(|t| t.value).sum();
        let gap = self.lhs - rhs;
        VerificationReport {
            inequality_id: self.id,
            dims: self.dims,
            measure: self.measure,
            lhs: self.lhs,
            rhs_terms: self.rhs_terms,
            gap,
            tol: self.tol,
            verdict: decide(gap, self.tol, rule, alarm),
            direction_notes: self.notes.join("; "),
            input_digest: self.digest,
            seed: self.seed,
            detail: self.detail,
        }
    }
}

fn hash_header(h: &mut Sha256, kind: &str, dims: &[usize]) {
    h.update(kind.as_bytes());
    for &d in dims {
        h.update((d as u64).to_le_bytes());
    }
}

fn hash_complex<T: Real>(h: &mut Sha256, z: &crate::scalar::C<T>) {
    h.update(z.re.as_f64().to_le_bytes());
    h.update(z.im.as_f64().to_le_bytes());
}

/// SHA-256 over the shape and the amplitudes as little-endian `f64`.
pub fn digest_pure<T: Real>(psi: &PureState<T>) -> String {
    let mut h = Sha256::new();
    hash_header(&mut h, "pure", psi.shape().dims());
    psi.amplitudes().iter().for_each(|z| hash_complex(&mut h, z));
    hex::encode(h.finalize())
}

/// SHA-256 over the shape and the row-major matrix entries.
pub fn digest_mixed<T: Real>(rho: &DensityMatrix<T>) -> String {
    let mut h = Sha256::new();
    hash_header(&mut h, "mixed", rho.shape().dims());
    let m = rho.matrix();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            hash_complex(&mut h, &m[(i, j)]);
        }
    }
    hex::encode(h.finalize())
}

/// Digest of an ordered list of factors.
pub fn digest_parts<T: Real>(parts: &[PureState<T>]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(digest_pure(p).as_bytes());
    }
    hex::encode(h.finalize())
}

pub(crate) fn digest_text(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}
