use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use roofcoh::marginals::induced_ensemble;
use roofcoh::sample::{ginibre_mixed, haar_pure, random_diagonal, random_incoherent_channel, stream_rng};
use roofcoh::verify::{
    check_bipartite_sufficient, check_superadditivity_reduced, check_tripartite, MarginalMethod, Verdict,
};
use roofcoh::{
    c_f_pure, CoherenceFunctional, DensityMatrix, Formation, Half, PureState, PureState32, PureState64,
    SubsystemShape, C,
};

fn shape(d: &[usize]) -> SubsystemShape {
    SubsystemShape::new(d.to_vec()).unwrap()
}

fn haar(dims: &[usize], seed: u64) -> PureState64 {
    haar_pure(&shape(dims), &mut stream_rng(seed, 0))
}

#[test]
fn induced_ensembles_reconstruct_marginals() {
    for dims in [&[2, 2][..], &[2, 2, 2], &[2, 3, 2], &[2, 2, 2, 2]] {
        let mut worst = 0.0f64;
        for k in 0..1000 {
            let psi: PureState64 = haar_pure(&shape(dims), &mut stream_rng(17, k));
            let rho = psi.projector();
            for party in 0..dims.len() {
                let ens = induced_ensemble(&psi, party).unwrap();
                let total: f64 = ens.members.iter().map(|m| m.weight).sum();
                worst = worst.max((total - 1.0).abs());
                let marginal = rho.marginal(party).unwrap();
                worst = worst.max(ens.reconstruct().unwrap().max_abs_diff(&marginal));
            }
        }
        assert!(worst <= 1e-12, "dims {dims:?}: {worst}");
    }
}

fn local_phases(psi: &PureState64, seed: u64) -> PureState64 {
    let mut rng = stream_rng(seed, 1);
    let dims = psi.shape().dims().to_vec();
    let phases: Vec<Vec<f64>> = dims
        .iter()
        .map(|&d| (0..d).map(|_| rand::Rng::random_range(&mut rng, 0.0..std::f64::consts::TAU)).collect())
        .collect();
    let amps = psi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(flat, z)| {
            let theta: f64 = psi.shape().to_multi(flat).iter().enumerate().map(|(p, &i)| phases[p][i]).sum();
            z * C::from_polar(1.0, theta)
        })
        .collect();
    PureState::new(psi.shape().clone(), amps).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chain_rule_identity(seed in any::<u64>(), da in 2usize..5, db in 2usize..5) {
        let psi = haar(&[da, db], seed);
        let r = check_bipartite_sufficient(&psi, &Formation, 1e-9).unwrap();
        prop_assert!(r.gap.abs() <= 1e-10, "gap {}", r.gap);
    }

    #[test]
    fn tripartite_ordering(seed in any::<u64>()) {
        let psi = haar(&[2, 2, 2], seed);
        let cond = check_tripartite(&psi, &Formation, 1e-9).unwrap();
        let reduced = check_superadditivity_reduced(&psi, &Formation, 1e-9, &MarginalMethod::ClosedForm).unwrap();
        prop_assert!(cond.gap >= -1e-9);
        prop_assert!(cond.rhs_total() - reduced.rhs_total() >= -1e-9);
        prop_assert_eq!(cond.lhs, reduced.lhs);
    }

    #[test]
    fn schmidt_symmetry(seed in any::<u64>(), da in 2usize..5, db in 2usize..5) {
        let rho = haar(&[da, db], seed).projector();
        let sa = rho.marginal(0).unwrap().vn_entropy();
        let sb = rho.marginal(1).unwrap().vn_entropy();
        prop_assert!((sa - sb).abs() <= 1e-9, "{sa} vs {sb}");
    }

    #[test]
    fn local_phases_leave_checks_unchanged(seed in any::<u64>()) {
        let psi = haar(&[2, 3], seed);
        let rotated = local_phases(&psi, seed);
        for f in [&Formation as &dyn CoherenceFunctional<f64>, &Half] {
            prop_assert!((c_f_pure(f, &psi) - c_f_pure(f, &rotated)).abs() <= 1e-12);
            let a = check_bipartite_sufficient(&psi, f, 1e-9).unwrap();
            let b = check_bipartite_sufficient(&rotated, f, 1e-9).unwrap();
            prop_assert!((a.gap - b.gap).abs() <= 1e-12);
        }
    }

    #[test]
    fn partial_trace_is_a_state(seed in any::<u64>(), rank in 1usize..9) {
        let rho = ginibre_mixed::<f64, _>(&shape(&[2, 2, 2]), rank, &mut stream_rng(seed, 0)).unwrap();
        for keep in [&[0usize][..], &[1], &[2], &[0, 2], &[1, 2]] {
            let m = rho.partial_trace(keep).unwrap();
            prop_assert!((m.trace() - 1.0).abs() <= 1e-12);
            prop_assert!(m.eig_psd().values.iter().all(|&v| v >= 0.0));
            prop_assert!(DensityMatrix::new(m.shape().clone(), m.matrix().clone()).is_ok());
        }
    }

    #[test]
    fn incoherent_channels_preserve_validity(seed in any::<u64>(), dim in 2usize..5, n in 1usize..6) {
        let mut rng = stream_rng(seed, 0);
        let ch = random_incoherent_channel::<f64, _>(dim, n, &mut rng).unwrap();
        prop_assert!(ch.completeness_error() <= 1e-10);
        let s = SubsystemShape::single(dim).unwrap();
        let diag = random_diagonal::<f64, _>(&s, &mut rng);
        prop_assert!(ch.apply(&diag).unwrap().max_offdiag() <= 1e-12);
        let rho = ginibre_mixed::<f64, _>(&s, dim, &mut rng).unwrap();
        let out = ch.apply(&rho).unwrap();
        prop_assert!(DensityMatrix::new(s.clone(), out.matrix().clone()).is_ok());
        let branch_total: f64 = ch.branches(&rho).unwrap().iter().map(|(p, _)| p).sum();
        prop_assert!((branch_total - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn single_precision_pipeline() {
    let s = shape(&[2, 2]);
    for k in 0..50 {
        let psi: PureState32 = haar_pure(&s, &mut stream_rng(5, k));
        let r = check_bipartite_sufficient(&psi, &Formation, 1e-4).unwrap();
        assert!(r.gap.abs() <= 1e-4, "gap {}", r.gap);
        assert_eq!(r.verdict, Verdict::Pass);
    }
    let rho = ginibre_mixed::<f32, _>(&SubsystemShape::single(2).unwrap(), 2, &mut stream_rng(5, 99)).unwrap();
    let exact = roofcoh::qubit_formation_closed_form(&rho).unwrap();
    let roof = roofcoh::roof_value(&rho, &Formation, &roofcoh::RoofConfig::default().with_restarts(8)).unwrap();
    assert_abs_diff_eq!(roof.value, exact, epsilon = 1e-3);
}

#[test]
fn haar_sampler_is_deterministic() {
    assert_eq!(haar(&[2, 3], 12), haar(&[2, 3], 12));
    assert_ne!(haar(&[2, 3], 12), haar(&[2, 3], 13));
}
