use crate::density::DensityMatrix;
use crate::error::{contract, Result};
use crate::functional::{c_f_pure, spot_check_separability, CoherenceFunctional};
use crate::marginals::{dephased_weight_state, induced_ensemble, IndexedEnsemble};
use crate::pure::{tensor_all, PureState};
use crate::roof::{qubit_formation_closed_form, roof_value, RoofConfig};
use crate::scalar::Real;

use super::{
    digest_mixed, digest_parts, digest_pure, InequalityId, ReportBuilder, Rule, Verdict,
    VerificationReport, CONDITIONAL_READING,
};

const PARTY_NAMES: [&str; 3] = ["A", "B", "C"];

fn party_name(p: usize, n: usize) -> String {
    if n <= 3 {
        PARTY_NAMES[p].to_string()
    } else {
        format!("A{}", p + 1)
    }
}

fn pure_rule<T: Real>(f: &dyn CoherenceFunctional<T>) -> Rule {
    if f.certified_sufficient() {
        Rule::Inequality
    } else {
        Rule::Exploratory
    }
}

fn require_arity<T: Real>(psi: &PureState<T>, n: usize) -> Result<()> {
    if psi.n_parties() != n {
        return Err(contract(format!(
            "expected a {n}-party state, got {} parties",
            psi.n_parties()
        )));
    }
    Ok(())
}

fn ensembles_detail<T: Real>(ens: &[IndexedEnsemble<T>]) -> serde_json::Value {
    serde_json::Value::Array(ens.iter().map(|e| e.to_json()).collect())
}

fn pure_builder<T: Real>(
    id: InequalityId,
    psi: &PureState<T>,
    f: &dyn CoherenceFunctional<T>,
    tol: f64,
) -> ReportBuilder {
    let mut b = ReportBuilder::new(id, psi.shape().dims(), f.name(), tol);
    b.lhs = c_f_pure(f, psi).as_f64();
    b.digest = digest_pure(psi);
    b.note("all terms exact pure-state values");
    if !f.certified_sufficient() {
        b.note("sufficient condition not established for this measure; violations are findings");
    }
    b
}

/// `C_f(ψ_AB) ≥ C_f(Σ_i √q_i |i⟩_A) + Σ_i q_i C_f(φ_i,B)`.
pub fn check_bipartite_sufficient<T: Real>(
    psi: &PureState<T>,
    f: &dyn CoherenceFunctional<T>,
    tol: f64,
) -> Result<VerificationReport> {
    require_arity(psi, 2)?;
    let mut b = pure_builder(InequalityId::BipartiteSufficient, psi, f, tol);
    let weight_state = dephased_weight_state(psi, 0)?;
    let on_b = induced_ensemble(psi, 1)?;
    b.rhs("weight_state_A", c_f_pure(f, &weight_state).as_f64());
    b.rhs("conditional_B", on_b.average(f).as_f64());
    b.note(CONDITIONAL_READING);
    b.detail = Some(serde_json::json!({
        "weight_state_A": weight_state.amplitudes().iter().map(|z| [z.re.as_f64(), z.im.as_f64()]).collect::<Vec<_>>(),
        "ensembles": ensembles_detail(&[on_b]),
    }));
    Ok(b.finish(pure_rule(f), Verdict::Fail))
}

/// `C_f(ψ_AB) ≥ Σ_j p_j C_f(φ_j,A) + Σ_i q_i C_f(φ_i,B)`.
pub fn check_bipartite_alternative<T: Real>(
    psi: &PureState<T>,
    f: &dyn CoherenceFunctional<T>,
    tol: f64,
) -> Result<VerificationReport> {
    require_arity(psi, 2)?;
    conditional_report(InequalityId::BipartiteAlternative, psi, f, tol)
}

/// Three-party form of [`check_npartite`].
pub fn check_tripartite<T: Real>(
    psi: &PureState<T>,
    f: &dyn CoherenceFunctional<T>,
    tol: f64,
) -> Result<VerificationReport> {
    require_arity(psi, 3)?;
    conditional_report(InequalityId::Tripartite, psi, f, tol)
}

/// `C_f(ψ) ≥ Σ_j Σ_m w_m C_f(α_m^{(j)})` over every party `j`.
pub fn check_npartite<T: Real>(
    psi: &PureState<T>,
    f: &dyn CoherenceFunctional<T>,
    tol: f64,
) -> Result<VerificationReport> {
    if psi.n_parties() < 2 {
        return Err(contract("need at least two parties"));
    }
    conditional_report(InequalityId::Npartite, psi, f, tol)
}

fn conditional_report<T: Real>(
    id: InequalityId,
    psi: &PureState<T>,
    f: &dyn CoherenceFunctional<T>,
    tol: f64,
) -> Result<VerificationReport> {
    let n = psi.n_parties();
    let mut b = pure_builder(id, psi, f, tol);
    let ensembles = (0..n)
        .map(|p| induced_ensemble(psi, p))
        .collect::<Result<Vec<_>>>()?;
    for (p, e) in ensembles.iter().enumerate() {
        b.rhs(format!("conditional_{}", party_name(p, n)), e.average(f).as_f64());
    }
    b.note(CONDITIONAL_READING);
    b.detail = Some(serde_json::json!({ "ensembles": ensembles_detail(&ensembles) }));
    Ok(b.finish(pure_rule(f), Verdict::Fail))
}

/// How single-party marginal coherences are evaluated.
#[derive(Clone, Debug, PartialEq)]
pub enum MarginalMethod {
    /// Exact qubit formula; formation and qubit marginals only.
    ClosedForm,
    /// Roof optimizer (upper bound).
    Roof(RoofConfig),
}

fn closed_form_applies<T: Real>(f: &dyn CoherenceFunctional<T>, rho: &DensityMatrix<T>) -> bool {
    f.name() == "formation" && rho.dim() == 2
}

/// Marginal value and whether it is exact.
fn marginal_value<T: Real>(
    rho: &DensityMatrix<T>,
    f: &dyn CoherenceFunctional<T>,
    cfg: &RoofConfig,
) -> Result<(f64, bool)> {
    if closed_form_applies(f, rho) {
        return Ok((qubit_formation_closed_form(rho)?.as_f64(), true));
    }
    let r = roof_value(rho, f, cfg)?;
    let exact = !matches!(r.method, crate::roof::RoofMethod::Optimized);
    Ok((r.value.as_f64(), exact))
}

/// `C_f(ψ) ≥ Σ_j C_f(ρ_j)` for a pure multipartite `ψ`.
pub fn check_superadditivity_reduced<T: Real>(
    psi: &PureState<T>,
    f: &dyn CoherenceFunctional<T>,
    tol: f64,
    method: &MarginalMethod,
) -> Result<VerificationReport> {
    let n = psi.n_parties();
    if n < 2 {
        return Err(contract("need at least two parties"));
    }
    let rho = psi.projector();
    let mut b = ReportBuilder::new(InequalityId::ReducedSuperadditivity, psi.shape().dims(), f.name(), tol);
    b.lhs = c_f_pure(f, psi).as_f64();
    b.digest = digest_pure(psi);
    let mut all_exact = true;
    for p in 0..n {
        let marginal = rho.marginal(p)?;
        let (value, exact) = match method {
            MarginalMethod::ClosedForm => {
                if !closed_form_applies(f, &marginal) {
                    return Err(contract(format!(
                        "closed form needs formation and qubit marginals (party {p} has dimension {}, measure {})",
                        marginal.dim(),
                        f.name()
                    )));
                }
                (qubit_formation_closed_form(&marginal)?.as_f64(), true)
            }
            MarginalMethod::Roof(cfg) => marginal_value(&marginal, f, cfg)?,
        };
        all_exact &= exact;
        b.rhs(format!("marginal_{}", party_name(p, n)), value);
    }
    b.note("lhs exact pure value");
    let rule = if all_exact {
        b.note("marginals exact");
        pure_rule(f)
    } else {
        b.note("optimizer marginals are upper bounds: a pass is conservative, a violation may be optimizer slack");
        Rule::PassTrusted
    };
    Ok(b.finish(rule, Verdict::Fail))
}

/// `C_f(ρ) ≥ Σ_j C_f(ρ_j)` for a mixed multipartite `ρ`.
pub fn check_mixed_superadditivity<T: Real>(
    rho: &DensityMatrix<T>,
    f: &dyn CoherenceFunctional<T>,
    cfg: &RoofConfig,
    tol: f64,
) -> Result<VerificationReport> {
    let n = rho.shape().n_parties();
    if n < 2 {
        return Err(contract("need at least two parties"));
    }
    let mut b = ReportBuilder::new(InequalityId::MixedSuperadditivity, rho.shape().dims(), f.name(), tol);
    let roof = roof_value(rho, f, cfg)?;
    b.lhs = roof.value.as_f64();
    b.digest = digest_mixed(rho);
    b.seed = cfg.seed;
    let mut all_exact = true;
    for p in 0..n {
        let (value, exact) = marginal_value(&rho.marginal(p)?, f, cfg)?;
        all_exact &= exact;
        b.rhs(format!("marginal_{}", party_name(p, n)), value);
    }
    if matches!(roof.method, crate::roof::RoofMethod::Optimized) {
        b.note("lhs is an optimizer upper bound (tolerance absorbs optimizer gap)");
    } else {
        b.note("lhs exact");
    }
    if !roof.converged {
        b.note("lhs optimizer did not converge");
    }
    let rule = if all_exact {
        b.note("rhs exact");
        pure_rule(f)
    } else {
        b.note("some rhs marginals are optimizer upper bounds: verdict indeterminate");
        Rule::ViolationTrusted
    };
    b.detail = Some(serde_json::json!({ "roof": roof.to_json() }));
    let alarm = if all_exact { Verdict::Fail } else { Verdict::Indeterminate };
    Ok(b.finish(rule, alarm))
}

/// `C_f(ψ_1 ⊗ … ⊗ ψ_n) = Σ_i C_f(ψ_i)`, applicable when `f` is
/// multiplicatively separable (declared, or spot-checked with `seed`).
pub fn check_product_additivity<T: Real>(
    parts: &[PureState<T>],
    f: &dyn CoherenceFunctional<T>,
    tol: f64,
    seed: u64,
) -> Result<VerificationReport> {
    if parts.len() < 2 {
        return Err(contract("product additivity needs at least two parts"));
    }
    let composite = tensor_all(parts)?;
    let mut b = ReportBuilder::new(InequalityId::ProductAdditivity, composite.shape().dims(), f.name(), tol);
    b.lhs = c_f_pure(f, &composite).as_f64();
    b.digest = digest_parts(parts);
    b.seed = seed;
    for (i, p) in parts.iter().enumerate() {
        b.rhs(format!("part_{}", i + 1), c_f_pure(f, p).as_f64());
    }
    b.note("equality check; all terms exact pure-state values");
    let separable = if f.declares_mult_separable() {
        b.note("measure declares multiplicative separability");
        true
    } else {
        let ok = spot_check_separability(f, 200, seed, T::tol(1e-12));
        b.note(if ok {
            "multiplicative separability spot-checked on 200 sampled pairs"
        } else {
            "measure failed the multiplicative separability spot-check"
        });
        ok
    };
    let mut report = b.finish(Rule::Equality, Verdict::Fail);
    if !separable {
        report.verdict = Verdict::NotApplicable;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::{Formation, Half};
    use crate::named;
    use crate::shape::SubsystemShape;

    fn shape(d: &[usize]) -> SubsystemShape {
        SubsystemShape::new(d.to_vec()).unwrap()
    }

    #[test]
    fn bell_sufficient() {
        for f in [&Formation as &dyn CoherenceFunctional<f64>, &Half] {
            let r = check_bipartite_sufficient(&named::bell::<f64>(), f, 1e-9).unwrap();
            assert!((r.lhs - 1.0).abs() < 1e-12);
            assert!((r.rhs_terms[0].value - 1.0).abs() < 1e-12);
            assert!(r.rhs_terms[1].value.abs() < 1e-12);
            assert!(r.gap.abs() < 1e-12);
            assert_eq!(r.verdict, Verdict::Pass);
        }
    }

    #[test]
    fn alternative_examples() {
        let plus = named::plus::<f64>(2);
        let r = check_bipartite_alternative(&plus.tensor(&plus), &Formation, 1e-9).unwrap();
        assert!((r.lhs - 2.0).abs() < 1e-12 && r.gap.abs() < 1e-12);
        let r = check_bipartite_alternative(&named::bell::<f64>(), &Formation, 1e-9).unwrap();
        assert!((r.gap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tripartite_examples() {
        let r = check_tripartite(&named::ghz::<f64>(3).unwrap(), &Formation, 1e-9).unwrap();
        assert!((r.gap - 1.0).abs() < 1e-12);
        let r = check_tripartite(&named::w::<f64>(3).unwrap(), &Formation, 1e-9).unwrap();
        assert!((r.gap - 3f64.log2()).abs() < 1e-12);
        let plus = named::plus::<f64>(2);
        let ppp = plus.tensor(&plus).tensor(&plus);
        let r = check_tripartite(&ppp, &Formation, 1e-9).unwrap();
        assert!((r.lhs - 3.0).abs() < 1e-12 && r.gap.abs() < 1e-12);
        assert_eq!(r.rhs_terms.len(), 3);
    }

    #[test]
    fn arity_violations() {
        let ghz = named::ghz::<f64>(3).unwrap();
        assert!(check_bipartite_sufficient(&ghz, &Formation, 1e-9).is_err());
        assert!(check_tripartite(&named::bell::<f64>(), &Formation, 1e-9).is_err());
        assert!(check_npartite(&named::plus::<f64>(2), &Formation, 1e-9).is_err());
    }

    #[test]
    fn npartite_ghz4() {
        let r = check_npartite(&named::ghz::<f64>(4).unwrap(), &Formation, 1e-9).unwrap();
        assert_eq!(r.rhs_terms.len(), 4);
        assert!((r.gap - 1.0).abs() < 1e-12);
        assert_eq!(r.rhs_terms[3].label, "conditional_A4");
    }

    #[test]
    fn reduced_closed_form() {
        let r = check_superadditivity_reduced(
            &named::ghz::<f64>(3).unwrap(),
            &Formation,
            1e-9,
            &MarginalMethod::ClosedForm,
        )
        .unwrap();
        assert!((r.gap - 1.0).abs() < 1e-12);
        let r = check_superadditivity_reduced(&named::bell::<f64>(), &Formation, 1e-9, &MarginalMethod::ClosedForm)
            .unwrap();
        assert!((r.gap - 1.0).abs() < 1e-12);
        let qutrit = PureState::<f64>::from_real(shape(&[2, 3]), &[1.0; 6]).unwrap();
        assert!(check_superadditivity_reduced(&qutrit, &Formation, 1e-9, &MarginalMethod::ClosedForm).is_err());
        assert!(check_superadditivity_reduced(&named::bell::<f64>(), &Half, 1e-9, &MarginalMethod::ClosedForm).is_err());
    }

    #[test]
    fn mixed_matches_reduced_on_bell() {
        let bell = named::bell::<f64>();
        let cfg = RoofConfig::default().with_restarts(4);
        let mixed = check_mixed_superadditivity(&bell.projector(), &Formation, &cfg, 1e-4).unwrap();
        let pure = check_superadditivity_reduced(&bell, &Formation, 1e-9, &MarginalMethod::ClosedForm).unwrap();
        assert!((mixed.gap - pure.gap).abs() < 1e-10);
        assert_eq!(mixed.verdict, Verdict::Pass);
    }

    #[test]
    fn mixed_incoherent_product() {
        let p = crate::prob::ProbabilityVector::new(vec![0.3, 0.7]).unwrap();
        let d = DensityMatrix::diagonal(shape(&[2]), &p).unwrap();
        let rho = d.tensor(&d);
        let r = check_mixed_superadditivity(&rho, &Formation, &RoofConfig::default(), 1e-4).unwrap();
        assert_eq!((r.lhs, r.rhs_total(), r.gap), (0.0, 0.0, 0.0));
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn product_examples() {
        let plus = named::plus::<f64>(2);
        let r = check_product_additivity(&[plus.clone(), plus.clone()], &Formation, 1e-10, 0).unwrap();
        assert!((r.lhs - 2.0).abs() < 1e-12 && r.verdict == Verdict::Pass);
        let r = check_product_additivity(&[plus, named::plus(3)], &Half, 1e-10, 0).unwrap();
        assert!((r.lhs - (1.0 + 3f64.log2())).abs() < 1e-12);
        assert!(r.gap.abs() < 1e-12 && r.verdict == Verdict::Pass);
    }

    struct Tsallis2;
    impl CoherenceFunctional<f64> for Tsallis2 {
        fn name(&self) -> &str {
            "tsallis2"
        }
        fn eval_slice(&self, p: &[f64]) -> f64 {
            1.0 - p.iter().map(|q| q * q).sum::<f64>()
        }
    }

    #[test]
    fn non_separable_measure_is_not_applicable() {
        let plus = named::plus::<f64>(2);
        let r = check_product_additivity(&[plus.clone(), plus], &Tsallis2, 1e-10, 0).unwrap();
        assert_eq!(r.verdict, Verdict::NotApplicable);
    }
}
