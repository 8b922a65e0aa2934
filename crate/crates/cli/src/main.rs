use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use roofcoh::io::{load_state, save_state, State, StateFile};
use roofcoh::roof::EnsembleSize;
use roofcoh::sample::{ginibre_mixed, haar_pure, random_product_pure, stream_rng, PRNG_ALGORITHM};
use roofcoh::sweep::{reports_to_csv, run_sweep, SweepSpec};
use roofcoh::verify::{self, AxiomSuiteConfig, InequalityId, MarginalMethod, PURE_TOL, ROOF_TOL};
use roofcoh::{c_f_pure, roof_value, FunctionalRegistry, PureState64, RoofConfig, SubsystemShape, VerificationReport};
use serde_json::json;

/// Convex-roof coherence values and superadditivity checks.
#[derive(Parser, Debug)]
#[command(name = "roofcoh", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Base seed for every random draw.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Verdict tolerance; defaults to 1e-9 for pure-only checks and 1e-4 with roof values.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output file (directory for `sample`); stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Coherence functional.
    #[arg(long, global = true)]
    measure: Option<String>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Default)]
struct RoofArgs {
    /// Optimizer restarts.
    #[arg(long)]
    restarts: Option<usize>,
    /// Ensemble size: `auto` or an integer ≥ rank.
    #[arg(long)]
    ensemble_size: Option<EnsembleSize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    obj_tol: Option<f64>,
}

impl RoofArgs {
    fn apply(&self, mut cfg: RoofConfig) -> RoofConfig {
        if let Some(r) = self.restarts {
            cfg.restarts = r;
        }
        if let Some(m) = self.ensemble_size {
            cfg.ensemble_size = m;
        }
        if let Some(i) = self.max_iters {
            cfg.max_iters = i;
        }
        if let Some(t) = self.obj_tol {
            cfg.obj_tol = t;
        }
        cfg
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Coherence of a pure state file, in bits.
    PureValue {
        #[arg(long)]
        state: PathBuf,
    },
    /// Convex-roof upper bound for a pure or mixed state file.
    Roof {
        #[arg(long)]
        state: PathBuf,
        #[command(flatten)]
        roof: RoofArgs,
    },
    /// Evaluate one inequality on state files (one file per factor for product-additivity).
    Verify {
        #[arg(long)]
        inequality: InequalityId,
        #[arg(long = "state", required = true)]
        states: Vec<PathBuf>,
        /// Marginal evaluation for reduced-superadditivity.
        #[arg(long, value_enum, default_value = "closed-form")]
        marginals: Marginals,
        #[command(flatten)]
        roof: RoofArgs,
    },
    /// Randomized batch of checks; writes one CSV row per state and inequality.
    Sweep {
        /// JSON sweep spec; flags below override its fields.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long = "inequality", value_delimiter = ',')]
        inequalities: Vec<InequalityId>,
        /// Rank of sampled mixed states.
        #[arg(long)]
        rank: Option<usize>,
        #[command(flatten)]
        roof: RoofArgs,
        /// Write gap-histogram columns to this file.
        #[arg(long)]
        emit_plot: Option<PathBuf>,
        #[arg(long, default_value_t = 40)]
        bins: usize,
    },
    /// Coherence-measure axioms on sampled states and incoherent channels.
    Axioms {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[command(flatten)]
        roof: RoofArgs,
    },
    /// Write seeded random states as JSON files into the `--out` directory.
    Sample {
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long, value_enum, default_value = "pure")]
        kind: Kind,
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Rank of mixed samples (defaults to full rank).
        #[arg(long)]
        rank: Option<usize>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Marginals {
    ClosedForm,
    Roof,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Kind {
    Pure,
    Mixed,
    Product,
}

/// Outcome of a successful command: whether any verdict raised an alarm.
type Alarm = bool;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("ROOFCOH_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("ROOFCOH_THREADS=`{raw}` is not a thread count"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<Alarm> {
    let g = &cli.global;
    let registry = FunctionalRegistry::<f64>::with_builtins();
    let measure = g.measure.clone().unwrap_or_else(|| "formation".into());
    let seed = g.seed.unwrap_or(0);
    match &cli.command {
        Command::PureValue { state } => {
            let psi = load_pure(state)?;
            let f = registry.get(&measure)?;
            let value = c_f_pure(f.as_ref(), &psi);
            let text = match g.format {
                Some(Format::Json) => serde_json::to_string_pretty(&json!({
                    "measure": measure,
                    "dims": psi.shape().dims(),
                    "value": value,
                    "unit": "bits",
                }))? + "\n",
                _ => format!("{value}\n"),
            };
            emit(g.out.as_deref(), &text)?;
            Ok(false)
        }
        Command::Roof { state, roof } => {
            let rho = load(state)?.to_density();
            let f = registry.get(&measure)?;
            let cfg = roof.apply(RoofConfig::default().with_seed(seed));
            let result = roof_value(&rho, f.as_ref(), &cfg)?;
            let mut doc = result.to_json();
            doc["measure"] = json!(measure);
            doc["dims"] = json!(rho.shape().dims());
            doc["config"] = serde_json::to_value(&cfg)?;
            doc["prng"] = json!(PRNG_ALGORITHM);
            emit(g.out.as_deref(), &(serde_json::to_string_pretty(&doc)? + "\n"))?;
            Ok(false)
        }
        Command::Verify {
            inequality,
            states,
            marginals,
            roof,
        } => {
            let f = registry.get(&measure)?;
            let cfg = roof.apply(RoofConfig::default().with_seed(seed));
            let report = verify_files(*inequality, states, f.as_ref(), *marginals, &cfg, g.tol, seed)?;
            let config = json!({
                "measure": measure,
                "seed": seed,
                "roof": cfg,
                "marginals": format!("{marginals:?}"),
            });
            write_reports(g, std::slice::from_ref(&report), config)?;
            Ok(report.verdict.is_alarm())
        }
        Command::Sweep {
            spec,
            dims,
            count,
            inequalities,
            rank,
            roof,
            emit_plot,
            bins,
        } => {
            let mut s = match spec {
                Some(path) => {
                    let text = fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str::<SweepSpec>(&text)
                        .with_context(|| format!("sweep spec {}", path.display()))?
                }
                None => {
                    let (Some(dims), Some(count)) = (dims.clone(), *count) else {
                        bail!("sweep needs --spec or both --dims and --count");
                    };
                    SweepSpec::new(dims, count, &measure, Vec::new())
                }
            };
            if let Some(d) = dims {
                s.dims = d.clone();
            }
            if let Some(c) = count {
                s.count = *c;
            }
            if !inequalities.is_empty() {
                s.inequalities = inequalities.clone();
            }
            if let Some(m) = &g.measure {
                s.measure = m.clone();
            }
            if let Some(sd) = g.seed {
                s.seed = sd;
            }
            if g.tol.is_some() {
                s.tol = g.tol;
            }
            if let Some(r) = rank {
                s.rank = *r;
            }
            if g.out.is_some() {
                s.output = g.out.clone();
            }
            s.roof = roof.apply(s.roof);
            let outcome = run_sweep(&s, &registry)?;
            let text = match g.format {
                Some(Format::Json) => serde_json::to_string_pretty(&outcome)? + "\n",
                _ => outcome.to_csv_string()?,
            };
            emit(s.output.as_deref(), &text)?;
            if let Some(path) = emit_plot {
                let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
                outcome.write_plot_data(file, *bins)?;
            }
            for line in outcome.summary.iter() {
                eprintln!(
                    "{}: {} rows, min gap {:e}, mean gap {:e}, {} violations",
                    line.inequality_id,
                    line.rows,
                    line.min_gap,
                    line.mean_gap,
                    line.violations()
                );
            }
            Ok(outcome.any_alarm())
        }
        Command::Axioms { dim, samples, roof } => {
            let f = registry.get(&measure)?;
            let cfg = AxiomSuiteConfig {
                samples: *samples,
                seed,
                tol: g.tol.unwrap_or(ROOF_TOL),
                roof: roof.apply(RoofConfig::default().with_seed(seed)),
            };
            let reports = verify::check_axioms(f.as_ref(), *dim, &cfg)?;
            let config = json!({ "measure": measure, "dim": dim, "suite": cfg });
            write_reports(g, &reports, config)?;
            Ok(reports.iter().any(|r| r.verdict.is_alarm()))
        }
        Command::Sample {
            dims,
            kind,
            count,
            rank,
        } => {
            let dir = g.out.as_deref().context("sample needs --out <dir>")?;
            sample_files(dir, dims, *kind, *count, *rank, seed)?;
            Ok(false)
        }
    }
}

fn load(path: &Path) -> Result<State<f64>> {
    load_state(path).with_context(|| format!("state file {}", path.display()))
}

fn load_pure(path: &Path) -> Result<PureState64> {
    match load(path)? {
        State::Pure(p) => Ok(p),
        State::Mixed(_) => bail!("{} holds a mixed state; a pure state is required", path.display()),
    }
}

fn verify_files(
    id: InequalityId,
    states: &[PathBuf],
    f: &dyn roofcoh::CoherenceFunctional<f64>,
    marginals: Marginals,
    cfg: &RoofConfig,
    tol: Option<f64>,
    seed: u64,
) -> Result<VerificationReport> {
    let single = || -> Result<&PathBuf> {
        match states {
            [one] => Ok(one),
            _ => bail!("`{id}` takes exactly one --state, got {}", states.len()),
        }
    };
    let pure_tol = tol.unwrap_or(PURE_TOL);
    let mut report = match id {
        InequalityId::BipartiteSufficient => verify::check_bipartite_sufficient(&load_pure(single()?)?, f, pure_tol)?,
        InequalityId::BipartiteAlternative => verify::check_bipartite_alternative(&load_pure(single()?)?, f, pure_tol)?,
        InequalityId::Tripartite => verify::check_tripartite(&load_pure(single()?)?, f, pure_tol)?,
        InequalityId::Npartite => verify::check_npartite(&load_pure(single()?)?, f, pure_tol)?,
        InequalityId::ReducedSuperadditivity => {
            let psi = load_pure(single()?)?;
            let (method, t) = match marginals {
                Marginals::ClosedForm => (MarginalMethod::ClosedForm, pure_tol),
                Marginals::Roof => (MarginalMethod::Roof(cfg.clone()), tol.unwrap_or(ROOF_TOL)),
            };
            verify::check_superadditivity_reduced(&psi, f, t, &method)?
        }
        InequalityId::MixedSuperadditivity => {
            let rho = load(single()?)?.to_density();
            verify::check_mixed_superadditivity(&rho, f, cfg, tol.unwrap_or(ROOF_TOL))?
        }
        InequalityId::ProductAdditivity => {
            let parts = states.iter().map(|p| load_pure(p)).collect::<Result<Vec<_>>>()?;
            verify::check_product_additivity(&parts, f, pure_tol, seed)?
        }
        other => bail!("`{other}` is an axiom check; use the `axioms` command"),
    };
    report.seed = seed;
    Ok(report)
}

fn write_reports(g: &Global, reports: &[VerificationReport], config: serde_json::Value) -> Result<()> {
    let text = match g.format {
        Some(Format::Json) => {
            serde_json::to_string_pretty(&json!({ "config": config, "reports": reports }))? + "\n"
        }
        _ => {
            let mut text = reports_to_csv(reports)?;
            text.push_str(&format!("# config={config}\n"));
            text
        }
    };
    emit(g.out.as_deref(), &text)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn sample_files(dir: &Path, dims: &[usize], kind: Kind, count: usize, rank: Option<usize>, seed: u64) -> Result<()> {
    let shape = SubsystemShape::new(dims.to_vec())?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for k in 0..count {
        let mut rng = stream_rng(seed, k as u64);
        let stem = dir.join(format!("state_{k:05}"));
        match kind {
            Kind::Pure => {
                let psi = haar_pure::<f64, _>(&shape, &mut rng);
                save_state(stem.with_extension("json"), &StateFile::from_pure(&psi))?;
            }
            Kind::Mixed => {
                let r = rank.unwrap_or(shape.total_dim());
                let rho = ginibre_mixed::<f64, _>(&shape, r, &mut rng)?;
                save_state(stem.with_extension("json"), &StateFile::from_mixed(&rho))?;
            }
            Kind::Product => {
                let (psi, parts) = random_product_pure::<f64, _>(&shape, &mut rng);
                save_state(stem.with_extension("json"), &StateFile::from_pure(&psi))?;
                for (i, part) in parts.iter().enumerate() {
                    let path = dir.join(format!("state_{k:05}_part{i}.json"));
                    save_state(path, &StateFile::from_pure(part))?;
                }
            }
        }
    }
    Ok(())
}
