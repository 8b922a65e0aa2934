use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::functional::{c_f_pure, CoherenceFunctional};
use crate::pure::PureState;
use crate::roof::{roof_value, RoofConfig};
use crate::sample::{
    ginibre_mixed, haar_pure, random_diagonal, random_incoherent_channel, stream_rng,
    IncoherentChannel,
};
use crate::scalar::Real;
use crate::shape::SubsystemShape;

use super::{digest_text, InequalityId, ReportBuilder, Rule, Verdict, VerificationReport, ROOF_TOL};

/// Recorded in every axiom report.
pub const FORWARD_ONLY_NOTE: &str = "only forward directions are tested (incoherent input \
    implies zero or equality); the converse is not checked";

const CONVEX_WEIGHTS: [f64; 3] = [0.25, 0.5, 0.75];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomSuiteConfig {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub roof: RoofConfig,
}

impl Default for AxiomSuiteConfig {
    fn default() -> Self {
        Self {
            samples: 100,
            seed: 0,
            tol: ROOF_TOL,
            roof: RoofConfig::default(),
        }
    }
}

/// One sampled instance of an axiom: `lhs ≥ Σ rhs` is expected.
struct Sample {
    lhs: f64,
    rhs: Vec<(&'static str, f64)>,
    converged: bool,
}

impl Sample {
    fn gap(&self) -> f64 {
        self.lhs - self.rhs.iter().map(|(_, v)| v).sum::<f64>()
    }
}

#[derive(Clone, Copy)]
enum Axiom {
    Positivity,
    IncoherentZero,
    Monotonicity,
    Selective,
    Convexity,
}

impl Axiom {
    const ALL: [Axiom; 5] = [
        Axiom::Positivity,
        Axiom::IncoherentZero,
        Axiom::Monotonicity,
        Axiom::Selective,
        Axiom::Convexity,
    ];

    fn id(self) -> InequalityId {
        match self {
            Axiom::Positivity => InequalityId::AxiomPositivity,
            Axiom::IncoherentZero => InequalityId::AxiomIncoherentZero,
            Axiom::Monotonicity => InequalityId::AxiomMonotonicity,
            Axiom::Selective => InequalityId::AxiomSelective,
            Axiom::Convexity => InequalityId::AxiomConvexity,
        }
    }

    fn stream(self, sample: usize) -> u64 {
        ((self as u64 + 1) << 32) | sample as u64
    }
}

/// Runs positivity, incoherent-state zero, monotonicity under incoherent
/// channels, monotonicity under selective measurements and convexity on
/// `cfg.samples` seeded instances each, on a single system of dimension
/// `dim`. Each report describes the worst sample.
pub fn check_axioms<T: Real>(
    f: &dyn CoherenceFunctional<T>,
    dim: usize,
    cfg: &AxiomSuiteConfig,
) -> Result<Vec<VerificationReport>> {
    if cfg.samples == 0 {
        return Err(contract("axiom suite needs at least one sample"));
    }
    let shape = SubsystemShape::single(dim)?;
    Axiom::ALL
        .iter()
        .map(|&axiom| {
            let samples = (0..cfg.samples)
                .into_par_iter()
                .map(|i| run_sample(axiom, f, &shape, cfg, i))
                .collect::<Result<Vec<_>>>()?;
            Ok(summarize(axiom, f, &shape, cfg, &samples))
        })
        .collect()
}

fn roof_cfg(cfg: &AxiomSuiteConfig, axiom: Axiom, i: usize) -> RoofConfig {
    cfg.roof.clone().with_seed(cfg.roof.seed ^ axiom.stream(i))
}

fn pick_channel<T: Real, R: Rng>(dim: usize, i: usize, rng: &mut R) -> Result<IncoherentChannel<T>> {
    match i {
        0 => Ok(IncoherentChannel::full_dephasing(dim)),
        1 => {
            let mut perm: Vec<usize> = (0..dim).collect();
            perm.shuffle(rng);
            IncoherentChannel::permutation(&perm)
        }
        _ => {
            let n_kraus = rng.random_range(1..=dim + 1);
            random_incoherent_channel(dim, n_kraus, rng)
        }
    }
}

fn run_sample<T: Real>(
    axiom: Axiom,
    f: &dyn CoherenceFunctional<T>,
    shape: &SubsystemShape,
    cfg: &AxiomSuiteConfig,
    i: usize,
) -> Result<Sample> {
    let mut rng = stream_rng(cfg.seed, axiom.stream(i));
    let rcfg = roof_cfg(cfg, axiom, i);
    let dim = shape.total_dim();
    Ok(match axiom {
        Axiom::Positivity => {
            let psi = haar_pure::<T, _>(shape, &mut rng);
            let rank = rng.random_range(1..=dim);
            let rho = ginibre_mixed::<T, _>(shape, rank, &mut rng)?;
            let roof = roof_value(&rho, f, &rcfg)?;
            let pure = c_f_pure(f, &psi).as_f64();
            Sample {
                lhs: pure.min(roof.value.as_f64()),
                rhs: vec![("zero", 0.0)],
                converged: roof.converged,
            }
        }
        Axiom::IncoherentZero => {
            let rho = random_diagonal::<T, _>(shape, &mut rng);
            let roof = roof_value(&rho, f, &rcfg)?;
            Sample {
                lhs: 0.0,
                rhs: vec![("coherence_of_incoherent_state", roof.value.as_f64())],
                converged: roof.converged,
            }
        }
        Axiom::Monotonicity => {
            let psi = sample_input::<T, _>(shape, i, &mut rng);
            let channel = pick_channel::<T, _>(dim, i, &mut rng)?;
            let out = channel.apply(&psi.projector())?;
            let roof = roof_value(&out, f, &rcfg)?;
            Sample {
                lhs: c_f_pure(f, &psi).as_f64(),
                rhs: vec![("roof_of_channel_output", roof.value.as_f64())],
                converged: roof.converged,
            }
        }
        Axiom::Selective => {
            let psi = sample_input::<T, _>(shape, i, &mut rng);
            let channel = pick_channel::<T, _>(dim, i, &mut rng)?;
            let avg = channel
                .pure_branches(&psi)?
                .iter()
                .map(|(p, phi)| p.as_f64() * c_f_pure(f, phi).as_f64())
                .sum();
            Sample {
                lhs: c_f_pure(f, &psi).as_f64(),
                rhs: vec![("branch_average", avg)],
                converged: true,
            }
        }
        Axiom::Convexity => {
            let t = CONVEX_WEIGHTS[i % CONVEX_WEIGHTS.len()];
            let r1 = rng.random_range(1..=dim);
            let r2 = rng.random_range(1..=dim);
            let rho1 = ginibre_mixed::<T, _>(shape, r1, &mut rng)?;
            let rho2 = ginibre_mixed::<T, _>(shape, r2, &mut rng)?;
            let w = crate::prob::ProbabilityVector::new(vec![T::lit(t), T::lit(1.0 - t)])?;
            let mix = crate::density::DensityMatrix::mixture(&w, &[rho1.clone(), rho2.clone()])?;
            let a = roof_value(&rho1, f, &rcfg)?;
            let b = roof_value(&rho2, f, &rcfg.clone().with_seed(rcfg.seed.wrapping_add(1)))?;
            let c = roof_value(&mix, f, &rcfg.clone().with_seed(rcfg.seed.wrapping_add(2)))?;
            Sample {
                lhs: t * a.value.as_f64() + (1.0 - t) * b.value.as_f64(),
                rhs: vec![("roof_of_mixture", c.value.as_f64())],
                converged: a.converged && b.converged && c.converged,
            }
        }
    })
}

/// Sample 0 is `|+⟩`; the rest are Haar random.
fn sample_input<T: Real, R: Rng>(shape: &SubsystemShape, i: usize, rng: &mut R) -> PureState<T> {
    if i == 0 {
        crate::named::plus(shape.total_dim())
    } else {
        haar_pure(shape, rng)
    }
}

fn summarize<T: Real>(
    axiom: Axiom,
    f: &dyn CoherenceFunctional<T>,
    shape: &SubsystemShape,
    cfg: &AxiomSuiteConfig,
    samples: &[Sample],
) -> VerificationReport {
    let (worst_idx, worst) = samples
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.gap().total_cmp(&b.1.gap()))
        .expect("at least one sample");
    let mut b = ReportBuilder::new(axiom.id(), shape.dims(), f.name(), cfg.tol);
    b.lhs = worst.lhs;
    for (label, v) in &worst.rhs {
        b.rhs(*label, *v);
    }
    b.seed = cfg.seed;
    b.digest = digest_text(&format!(
        "{}:{}:{}:{}:{}",
        axiom.id(),
        f.name(),
        shape.label(),
        cfg.samples,
        cfg.seed
    ));
    b.note(format!("worst of {} samples (index {worst_idx})", samples.len()));
    let unconverged = samples.iter().filter(|s| !s.converged).count();
    if unconverged > 0 {
        b.note(format!("{unconverged} samples hit the optimizer iteration cap"));
    }
    let exploratory = !f.certified_sufficient();
    let rule = match axiom {
        Axiom::Positivity => {
            b.note("minimum of exact pure values and roof upper bounds");
            Rule::Inequality
        }
        Axiom::IncoherentZero => {
            b.note("incoherent inputs take the exact zero path");
            Rule::Equality
        }
        Axiom::Monotonicity => {
            b.note("sample 0 is full dephasing of |+>, sample 1 a permutation channel");
            b.note("output roof is an upper bound: a pass is conservative, a violation may be optimizer slack");
            Rule::PassTrusted
        }
        Axiom::Selective => {
            b.note("exact pure branch values over the channel's Kraus outcomes");
            if exploratory {
                Rule::Exploratory
            } else {
                Rule::Inequality
            }
        }
        Axiom::Convexity => {
            b.note("all three terms are roof upper bounds; tolerance is the convexity slack");
            Rule::Inequality
        }
    };
    b.note(FORWARD_ONLY_NOTE);
    b.detail = Some(serde_json::json!({
        "gaps": samples.iter().map(Sample::gap).collect::<Vec<_>>(),
    }));
    let alarm = if exploratory { Verdict::Finding } else { Verdict::Fail };
    b.finish(rule, alarm)
}
