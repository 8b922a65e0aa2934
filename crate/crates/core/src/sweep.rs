//! Seeded batch runs of the verification checks with CSV/JSON output.
//!
//! State `k` of a sweep is drawn from stream `k` of the sweep seed, so any
//! row can be regenerated in isolation and the output order never depends on
//! thread scheduling.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::functional::{CoherenceFunctional, FunctionalRegistry};
use crate::roof::RoofConfig;
use crate::sample::{ginibre_mixed, haar_pure, random_product_pure, stream_rng};
use crate::scalar::Real;
use crate::shape::SubsystemShape;
use crate::verify::{
    check_bipartite_alternative, check_bipartite_sufficient, check_mixed_superadditivity,
    check_npartite, check_product_additivity, check_superadditivity_reduced, check_tripartite,
    InequalityId, MarginalMethod, Verdict, VerificationReport, PURE_TOL, ROOF_TOL,
};

pub const CSV_COLUMNS: [&str; 10] = [
    "inequality_id",
    "dims",
    "measure",
    "lhs",
    "rhs_total",
    "gap",
    "tol",
    "verdict",
    "seed",
    "input_digest",
];

/// Everything needed to reproduce a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub dims: Vec<usize>,
    pub count: usize,
    #[serde(default = "default_measure")]
    pub measure: String,
    pub inequalities: Vec<InequalityId>,
    #[serde(default)]
    pub seed: u64,
    /// Overrides the per-check default tolerance.
    #[serde(default)]
    pub tol: Option<f64>,
    /// Rank of sampled mixed states (mixed superadditivity only).
    #[serde(default = "default_rank")]
    pub rank: usize,
    #[serde(default)]
    pub roof: RoofConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_measure() -> String {
    "formation".into()
}

fn default_rank() -> usize {
    2
}

impl SweepSpec {
    pub fn new(dims: Vec<usize>, count: usize, measure: &str, inequalities: Vec<InequalityId>) -> Self {
        Self {
            dims,
            count,
            measure: measure.into(),
            inequalities,
            seed: 0,
            tol: None,
            rank: default_rank(),
            roof: RoofConfig::default(),
            output: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = Some(tol);
        self
    }

    pub fn validate(&self) -> Result<SubsystemShape> {
        let shape = SubsystemShape::new(self.dims.clone())?;
        if self.count == 0 {
            return Err(contract("sweep count must be ≥ 1"));
        }
        if self.inequalities.is_empty() {
            return Err(contract("sweep needs at least one inequality id"));
        }
        if let Some(tol) = self.tol {
            if !(tol >= 0.0) {
                return Err(contract("tolerance must be ≥ 0"));
            }
        }
        let n = shape.n_parties();
        for &id in &self.inequalities {
            let arity_ok = match id {
                InequalityId::BipartiteSufficient | InequalityId::BipartiteAlternative => n == 2,
                InequalityId::Tripartite => n == 3,
                InequalityId::Npartite
                | InequalityId::ReducedSuperadditivity
                | InequalityId::MixedSuperadditivity
                | InequalityId::ProductAdditivity => n >= 2,
                _ => {
                    return Err(contract(format!(
                        "`{id}` is an axiom check; run the axiom suite instead"
                    )))
                }
            };
            if !arity_ok {
                return Err(contract(format!("`{id}` does not apply to dims {}", shape.label())));
            }
        }
        if id_needs_rank(&self.inequalities) && !(1..=shape.total_dim()).contains(&self.rank) {
            return Err(contract(format!("rank {} outside 1..={}", self.rank, shape.total_dim())));
        }
        Ok(shape)
    }

    fn tol_for(&self, id: InequalityId, uses_roof: bool) -> f64 {
        self.tol.unwrap_or(match id {
            InequalityId::MixedSuperadditivity => ROOF_TOL,
            _ if uses_roof => ROOF_TOL,
            _ => PURE_TOL,
        })
    }
}

fn id_needs_rank(ids: &[InequalityId]) -> bool {
    ids.contains(&InequalityId::MixedSuperadditivity)
}

/// Per-inequality aggregate over a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    pub inequality_id: InequalityId,
    pub rows: usize,
    pub min_gap: f64,
    pub mean_gap: f64,
    pub max_abs_gap: f64,
    pub pass: usize,
    pub fail: usize,
    pub finding: usize,
    pub indeterminate: usize,
    pub not_applicable: usize,
}

impl GapSummary {
    pub fn violations(&self) -> usize {
        self.fail + self.finding
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub spec: SweepSpec,
    pub reports: Vec<VerificationReport>,
    pub summary: Vec<GapSummary>,
}

impl SweepOutcome {
    pub fn any_alarm(&self) -> bool {
        self.reports.iter().any(|r| r.verdict.is_alarm())
    }

    pub fn gaps(&self, id: InequalityId) -> Vec<f64> {
        self.reports
            .iter()
            .filter(|r| r.inequality_id == id)
            .map(|r| r.gap)
            .collect()
    }

    /// CSV rows followed by a `#`-prefixed summary block.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        write_report_rows(&mut w, &self.reports)?;
        let mut out = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        out.write_all(self.summary_block()?.as_bytes())?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    fn summary_block(&self) -> Result<String> {
        let mut s = String::new();
        let spec = SweepSpec {
            output: None,
            ..self.spec.clone()
        };
        writeln!(s, "# spec={}", serde_json::to_string(&spec)?).unwrap();
        for g in &self.summary {
            writeln!(
                s,
                "# {}: rows={} min_gap={:?} mean_gap={:?} max_abs_gap={:?} pass={} fail={} finding={} indeterminate={} not_applicable={} violations={}",
                g.inequality_id,
                g.rows,
                g.min_gap,
                g.mean_gap,
                g.max_abs_gap,
                g.pass,
                g.fail,
                g.finding,
                g.indeterminate,
                g.not_applicable,
                g.violations()
            )
            .unwrap();
        }
        Ok(s)
    }

    /// Gap histogram per inequality: `inequality_id,bin_lo,bin_hi,count`.
    pub fn write_plot_data<W: Write>(&self, out: W, bins: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["inequality_id", "bin_lo", "bin_hi", "count"])?;
        for g in &self.summary {
            for (lo, hi, c) in gap_histogram(&self.gaps(g.inequality_id), bins) {
                w.write_record([
                    g.inequality_id.as_str().to_string(),
                    fmt_float(lo),
                    fmt_float(hi),
                    c.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Writes the header and one row per report with the fixed column set.
pub fn write_report_rows<W: Write>(w: &mut csv::Writer<W>, reports: &[VerificationReport]) -> Result<()> {
    w.write_record(CSV_COLUMNS)?;
    for r in reports {
        w.write_record([
            r.inequality_id.as_str().to_string(),
            r.dims_label(),
            r.measure.clone(),
            fmt_float(r.lhs),
            fmt_float(r.rhs_total()),
            fmt_float(r.gap),
            fmt_float(r.tol),
            r.verdict.as_str().to_string(),
            r.seed.to_string(),
            r.input_digest.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip form, e.g. `1e-9` rather than `0.000000001`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:?}")
}

/// Header plus one row per report, as a string.
pub fn reports_to_csv(reports: &[VerificationReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write_report_rows(&mut w, reports)?;
    let buf = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Equal-width bins over `[min, max]`; a degenerate range yields one bin.
pub fn gap_histogram(gaps: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    if gaps.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![(lo, hi, gaps.len())];
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &g in gaps {
        let b = (((g - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + i as f64 * width, lo + (i + 1) as f64 * width, c))
        .collect()
}

fn summarize(ids: &[InequalityId], reports: &[VerificationReport]) -> Vec<GapSummary> {
    let mut by_id: BTreeMap<usize, GapSummary> = BTreeMap::new();
    for r in reports {
        let pos = ids.iter().position(|&i| i == r.inequality_id).unwrap_or(usize::MAX);
        let g = by_id.entry(pos).or_insert_with(|| GapSummary {
            inequality_id: r.inequality_id,
            rows: 0,
            min_gap: f64::INFINITY,
            mean_gap: 0.0,
            max_abs_gap: 0.0,
            pass: 0,
            fail: 0,
            finding: 0,
            indeterminate: 0,
            not_applicable: 0,
        });
        g.rows += 1;
        g.min_gap = g.min_gap.min(r.gap);
        g.mean_gap += r.gap;
        g.max_abs_gap = g.max_abs_gap.max(r.gap.abs());
        match r.verdict {
            Verdict::Pass => g.pass += 1,
            Verdict::Fail => g.fail += 1,
            Verdict::Finding => g.finding += 1,
            Verdict::Indeterminate => g.indeterminate += 1,
            Verdict::NotApplicable => g.not_applicable += 1,
        }
    }
    by_id
        .into_values()
        .map(|mut g| {
            g.mean_gap /= g.rows as f64;
            g
        })
        .collect()
}

/// Runs every requested check on `spec.count` seeded states.
pub fn run_sweep<T: Real>(spec: &SweepSpec, registry: &FunctionalRegistry<T>) -> Result<SweepOutcome> {
    let shape = spec.validate()?;
    let f = registry.get(&spec.measure)?;
    let rows = (0..spec.count)
        .into_par_iter()
        .map(|k| sweep_state(spec, &shape, f.as_ref(), k))
        .collect::<Result<Vec<_>>>()?;
    let reports: Vec<_> = rows.into_iter().flatten().collect();
    let summary = summarize(&spec.inequalities, &reports);
    Ok(SweepOutcome {
        spec: spec.clone(),
        reports,
        summary,
    })
}

fn sweep_state<T: Real>(
    spec: &SweepSpec,
    shape: &SubsystemShape,
    f: &dyn CoherenceFunctional<T>,
    k: usize,
) -> Result<Vec<VerificationReport>> {
    let stream = k as u64;
    let pure = || haar_pure::<T, _>(shape, &mut stream_rng(spec.seed, stream));
    let closed_form_marginals = f.name() == "formation" && shape.dims().iter().all(|&d| d == 2);
    spec.inequalities
        .iter()
        .map(|&id| {
            let mut report = match id {
                InequalityId::BipartiteSufficient => {
                    check_bipartite_sufficient(&pure(), f, spec.tol_for(id, false))
                }
                InequalityId::BipartiteAlternative => {
                    check_bipartite_alternative(&pure(), f, spec.tol_for(id, false))
                }
                InequalityId::Tripartite => check_tripartite(&pure(), f, spec.tol_for(id, false)),
                InequalityId::Npartite => check_npartite(&pure(), f, spec.tol_for(id, false)),
                InequalityId::ReducedSuperadditivity => {
                    let mut rng = stream_rng(spec.seed, stream);
                    let psi = haar_pure::<T, _>(shape, &mut rng);
                    let method = if closed_form_marginals {
                        MarginalMethod::ClosedForm
                    } else {
                        MarginalMethod::Roof(spec.roof.clone().with_seed(rng.random()))
                    };
                    check_superadditivity_reduced(&psi, f, spec.tol_for(id, !closed_form_marginals), &method)
                }
                InequalityId::MixedSuperadditivity => {
                    let mut rng = stream_rng(spec.seed, stream);
                    let rho = ginibre_mixed::<T, _>(shape, spec.rank, &mut rng)?;
                    let cfg = spec.roof.clone().with_seed(rng.random());
                    check_mixed_superadditivity(&rho, f, &cfg, spec.tol_for(id, true))
                }
                InequalityId::ProductAdditivity => {
                    let mut rng = stream_rng(spec.seed, stream);
                    let (_, parts) = random_product_pure::<T, _>(shape, &mut rng);
                    check_product_additivity(&parts, f, spec.tol_for(id, false), spec.seed)
                }
                _ => unreachable!("rejected by validate"),
            }?;
            report.seed = spec.seed;
            Ok(report)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn registry() -> FunctionalRegistry<f64> {
        FunctionalRegistry::with_builtins()
    }

    #[test]
    fn formation_chain_rule_sweep() {
        let spec = SweepSpec::new(vec![2, 3], 50, "formation", vec![InequalityId::BipartiteSufficient]).with_seed(1);
        let out = run_sweep(&spec, &registry()).unwrap();
        assert_eq!(out.reports.len(), 50);
        assert!(out.summary[0].max_abs_gap <= 1e-10);
        assert!(!out.any_alarm());
    }

    #[test]
    fn csv_layout_and_reproducibility() {
        let spec = SweepSpec::new(
            vec![2, 2],
            20,
            "formation",
            vec![InequalityId::BipartiteSufficient, InequalityId::ReducedSuperadditivity],
        )
        .with_seed(9);
        let a = run_sweep(&spec, &registry()).unwrap().to_csv_string().unwrap();
        let b = run_sweep(&spec, &registry()).unwrap().to_csv_string().unwrap();
        assert_eq!(a, b);
        let mut lines = a.lines();
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(a.lines().filter(|l| !l.starts_with('#')).count(), 41);
        assert!(a.contains("# bipartite-sufficient: rows=20"));
        assert!(a.contains("# spec={"));
    }

    #[test]
    fn rows_follow_state_index() {
        let ids = vec![InequalityId::BipartiteSufficient, InequalityId::BipartiteAlternative];
        let spec = SweepSpec::new(vec![2, 2], 6, "formation", ids.clone()).with_seed(4);
        let out = run_sweep(&spec, &registry()).unwrap();
        for (i, r) in out.reports.iter().enumerate() {
            assert_eq!(r.inequality_id, ids[i % 2]);
        }
        assert_eq!(out.reports[0].input_digest, out.reports[1].input_digest);
        assert_ne!(out.reports[0].input_digest, out.reports[2].input_digest);
    }

    #[test]
    fn half_violations_surface_as_findings() {
        let spec = SweepSpec::new(vec![2, 2], 300, "half", vec![InequalityId::BipartiteSufficient]).with_seed(0);
        let out = run_sweep(&spec, &registry()).unwrap();
        let findings = out.reports.iter().filter(|r| r.verdict == Verdict::Finding).count();
        let negative = out.reports.iter().filter(|r| r.gap < -r.tol).count();
        assert_eq!(findings, negative);
        assert_eq!(out.summary[0].finding, findings);
    }

    #[test]
    fn spec_errors() {
        let bad_arity = SweepSpec::new(vec![2, 2], 5, "formation", vec![InequalityId::Tripartite]);
        assert!(run_sweep(&bad_arity, &registry()).is_err());
        let axiom = SweepSpec::new(vec![2, 2], 5, "formation", vec![InequalityId::AxiomConvexity]);
        assert!(run_sweep(&axiom, &registry()).is_err());
        let unknown = SweepSpec::new(vec![2, 2], 5, "l1", vec![InequalityId::Npartite]);
        assert!(matches!(run_sweep(&unknown, &registry()), Err(crate::Error::UnknownMeasure(_))));
        let json = r#"{"dims":[2,2],"count":3,"inequalities":["npartite"],"bogus":1}"#;
        assert!(serde_json::from_str::<SweepSpec>(json).is_err());
    }

    #[test]
    fn spec_json_defaults() {
        let json = r#"{"dims":[2,2,2],"count":3,"inequalities":["tripartite"]}"#;
        let spec: SweepSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.measure, "formation");
        assert_eq!(spec.roof, RoofConfig::default());
        let partial = r#"{"dims":[2,2],"count":3,"inequalities":["npartite"],"roof":{"restarts":64}}"#;
        let spec: SweepSpec = serde_json::from_str(partial).unwrap();
        assert_eq!(spec.roof.restarts, 64);
        assert_eq!(spec.roof.max_iters, RoofConfig::default().max_iters);
        let back: SweepSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn histogram_counts() {
        let h = gap_histogram(&[0.0, 0.1, 0.2, 1.0], 4);
        assert_eq!(h.iter().map(|b| b.2).sum::<usize>(), 4);
        assert_eq!(h[0].2, 3);
        assert_eq!(h[3].2, 1);
        assert_eq!(gap_histogram(&[0.5, 0.5], 3), vec![(0.5, 0.5, 2)]);
    }
}
