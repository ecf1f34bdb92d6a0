mod model_file;
mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ipsinv::criteria::{check_markov_cycle, check_markov_line, check_master_replace_equivalences, check_product_line};
use ipsinv::lattice2d::check_product_2d;
use ipsinv::models::{build, MODEL_NAMES};
use ipsinv::oracle::{
    balance, build_cycle_generator, build_segment_generator, build_torus_generator, first_unbalanced, gibbs_measure,
    markov_measure, product_measure, stationarity_residual, theorem_fs_conclusion, FsVerdict, DEFAULT_MAX_STATES,
};
use ipsinv::scalar::parse_rational;
use ipsinv::search::{find_markov, find_product};
use ipsinv::segment::{check_segment, construct_boundaries};
use ipsinv::word::decode;
use ipsinv::{CriterionContext, Exact, Float, JumpRateMatrix, MarkovKernel, Scalar, StationaryLaw, Tolerance};
use serde_json::json;

use model_file::{Loaded, ModelFile};
use report::{fmt_scalar, Report};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Cap(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Cap(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Cap(m) => write!(f, "resource cap: {m}"),
        }
    }
}

impl From<ipsinv::Error> for CliError {
    fn from(e: ipsinv::Error) -> Self {
        match e {
            ipsinv::Error::StateCap { .. } => CliError::Cap(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Args)]
struct Opts {
    /// Rational arithmetic (default).
    #[arg(long, global = true, conflicts_with = "float")]
    exact: bool,
    /// Double precision arithmetic with tolerance --tol.
    #[arg(long, global = true)]
    float: bool,
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    report: Format,
    /// Largest configuration space an oracle may enumerate.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_STATES)]
    max_states: usize,
}

#[derive(Debug, Parser)]
#[command(name = "ipsinv", version, about = "Invariant Markov and product measures of interacting particle systems")]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Subcommand)]
enum Command {
    /// Decide invariance of the Markov law on the line, with certificate.
    CheckMarkov { file: PathBuf },
    /// Decide invariance of the product measure `rho` on the line.
    CheckProduct { file: PathBuf },
    /// Search for invariant Markov laws of memory 1.
    FindMarkov { file: PathBuf },
    /// Search for invariant product measures.
    FindProduct { file: PathBuf },
    /// Cyclic criterion and generator oracle on a cycle of length n.
    VerifyCycle {
        file: PathBuf,
        #[arg(long)]
        n: usize,
    },
    /// Absorbing-set analysis on cycles of lengths n-min..=n-max.
    Absorbing {
        file: PathBuf,
        #[arg(long, default_value_t = 3)]
        n_min: usize,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
    },
    /// Product invariance on the square lattice, with a 3x3 torus oracle.
    #[command(name = "check-2d")]
    Check2d { file: PathBuf },
    /// Segment balance with the file's boundary rates or constructed ones.
    Segment {
        file: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        construct_boundaries: bool,
    },
    /// Evaluate the nine equivalent predicates independently.
    Equivalences { file: PathBuf },
    /// Materialize a catalog model and evaluate its expected facts.
    Model {
        name: String,
        /// Parameters as key=value.
        params: Vec<String>,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
}

impl Command {
    fn is_check(&self) -> bool {
        matches!(self, Command::CheckMarkov { .. } | Command::CheckProduct { .. } | Command::Check2d { .. })
    }
}

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn secs(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

fn load<S: Scalar>(path: &Path) -> Result<Loaded<S>, CliError> {
    ModelFile::read(path)?.load()
}

fn context<S: Scalar>(m: &Loaded<S>, tol: Tolerance) -> Result<CriterionContext<S>, CliError> {
    Ok(CriterionContext::new(m.line()?.clone(), m.law()?, tol)?)
}

fn law_measure<S: Scalar>(law: &StationaryLaw<S>, n: usize) -> Result<Vec<S>, CliError> {
    if law.memory() == 0 {
        Ok(product_measure(law.rho(), n))
    } else {
        Ok(gibbs_measure(law.kernel(), n)?)
    }
}

/// Product laws as memory-1 kernels with constant rows.
fn memory_one<S: Scalar>(law: StationaryLaw<S>) -> Result<StationaryLaw<S>, CliError> {
    if law.memory() != 0 {
        return Ok(law);
    }
    let rho = law.rho().to_vec();
    Ok(StationaryLaw::new(MarkovKernel::new(rho.len(), 1, vec![rho.clone(); rho.len()])?)?)
}

fn rate_json<S: Scalar>(t: &JumpRateMatrix<S>) -> serde_json::Value {
    t.entry_words()
        .into_iter()
        .map(|(from, to, r)| json!({ "from": from, "to": to, "rate": fmt_scalar(&r) }))
        .collect()
}

fn rows_json<S: Scalar>(rows: &[Vec<S>]) -> serde_json::Value {
    rows.iter().map(|r| r.iter().map(fmt_scalar).collect::<Vec<_>>()).collect()
}

fn dispatch<S: Scalar>(cmd: &Command, opts: &Opts) -> Result<Report, CliError> {
    let tol = Tolerance::new(opts.tol);
    let cap = opts.max_states;
    let start = Instant::now();
    let mut out = match cmd {
        Command::CheckMarkov { file } => {
            let ctx = context(&load::<S>(file)?, tol)?;
            Report::from_criterion("check-markov", &check_markov_line(&ctx))
        }
        Command::CheckProduct { file } => {
            let m = load::<S>(file)?;
            Report::from_criterion("check-product", &check_product_line(m.line()?, &m.rho()?, tol)?)
        }
        Command::FindMarkov { file } => {
            let m = load::<S>(file)?;
            let s = find_markov(m.line()?, tol)?;
            let found = s.invariant().count();
            let mut out = Report::new("find-markov", if found > 0 { "found" } else { "none-found" }, "cycle3-family");
            let cands: Vec<_> = s
                .found
                .candidates
                .iter()
                .map(|(c, r)| {
                    json!({
                        "source": c.source,
                        "numeric": c.numeric,
                        "kernel": rows_json(&c.kernel.rows()),
                        "rho": c.law.rho().iter().map(fmt_scalar).collect::<Vec<_>>(),
                        "line_verdict": r.as_ref().map(|r| r.verdict.to_string()),
                    })
                })
                .collect();
            out.details = json!({
                "family_dimension": s.family.dimension(),
                "samples": s.samples.len(),
                "all_kernels": s.found.all_kernels,
                "exhausted": s.found.exhausted,
                "candidates": cands,
            });
            out.notes.push(format!("{found} invariant of {} candidates", s.found.candidates.len()));
            out
        }
        Command::FindProduct { file } => {
            let m = load::<S>(file)?;
            let s = find_product(m.line()?, tol)?;
            let found = s.candidates.iter().filter(|c| c.report.is_invariant()).count();
            let verdict = if s.all_products {
                "all-products"
            } else if found > 0 {
                "found"
            } else {
                "none-found"
            };
            let mut out = Report::new("find-product", verdict, "linearized-balance");
            let cands: Vec<_> = s
                .candidates
                .iter()
                .map(|c| {
                    json!({
                        "rho": c.rho.iter().map(fmt_scalar).collect::<Vec<_>>(),
                        "numeric": c.numeric,
                        "verdict": c.report.verdict.to_string(),
                    })
                })
                .collect();
            out.details = json!({ "all_products": s.all_products, "complete": s.complete, "candidates": cands });
            out
        }
        Command::VerifyCycle { file, n } => {
            let m = load::<S>(file)?;
            let ctx = context(&m, tol)?;
            let r = check_markov_cycle(&ctx, *n);
            let mut out = Report::from_criterion("verify-cycle", &r);
            out.timings.insert("criterion".into(), secs(start));
            let oracle_start = Instant::now();
            let g = build_cycle_generator(ctx.t(), *n, cap)?;
            let mu = law_measure(ctx.law(), *n)?;
            let res = stationarity_residual(&g, &mu)?;
            out.residual(format!("oracle n={n} (max |mu Q|)"), fmt_scalar(&res));
            let scale = ctx.t().norm_inf();
            let oracle_ok = tol.is_zero(&res, scale);
            if let Some((x, v)) = first_unbalanced(&g, &mu, tol.abs * (1.0 + scale))? {
                out.notes.push(format!("oracle: first unbalanced state {:?} ({})", decode(ctx.kappa(), *n, x), fmt_scalar(&v)));
            }
            out.notes.push(format!(
                "oracle {} the criterion",
                if oracle_ok == r.is_invariant() { "agrees with" } else { "DISAGREES with" }
            ));
            out.timings.insert("oracle".into(), secs(oracle_start));
            out
        }
        Command::Absorbing { file, n_min, n_max } => {
            if n_min > n_max {
                return Err(input(format!("--n-min {n_min} exceeds --n-max {n_max}")));
            }
            let m = load::<S>(file)?;
            let ns: Vec<usize> = (*n_min..=*n_max).collect();
            let r = theorem_fs_conclusion(m.line()?, &ns, cap)?;
            let mut out = match &r.verdict {
                FsVerdict::NoMarkovLaw { max_memory, pattern_persists } => {
                    let mut out = Report::new("absorbing", "no-markov-law", "absorbing-sets");
                    let tail = if *pattern_persists { "; pattern persists" } else { "" };
                    out.notes.push(format!("no full-support Markov law (m ≤ {max_memory} certified{tail})"));
                    out
                }
                FsVerdict::Inconclusive { failing_n } => {
                    let mut out = Report::new("absorbing", "inconclusive", "absorbing-sets");
                    out.notes.push(format!("no proper absorbing set for n in {failing_n:?}"));
                    out
                }
            };
            out.details = r
                .per_n
                .iter()
                .map(|(n, a)| {
                    json!({
                        "n": n,
                        "absorbing_states": a.absorbing.len(),
                        "sink_components": a.sink_components.len(),
                        "proper": a.is_proper,
                        "reaches_all": a.reaches_all,
                    })
                })
                .collect();
            out
        }
        Command::Check2d { file } => {
            let m = load::<S>(file)?;
            let t = m.square()?;
            let rho = m.rho()?;
            let r = check_product_2d(t, &rho, tol)?;
            let mut out = Report::from_criterion("check-2d", &r);
            out.timings.insert("criterion".into(), secs(start));
            let oracle_start = Instant::now();
            match build_torus_generator(t, 3, cap) {
                Ok(g) => {
                    let res = stationarity_residual(&g, &product_measure(&rho, 9))?;
                    out.residual("oracle torus 3x3 (max |mu Q|)", fmt_scalar(&res));
                    let ok = tol.is_zero(&res, t.as_jrm().norm_inf());
                    if ok != r.is_invariant() {
                        out.notes.push("torus oracle disagrees with the criterion".into());
                    }
                }
                Err(ipsinv::Error::StateCap { needed, .. }) => {
                    out.notes.push(format!("torus oracle skipped: {needed} states exceed --max-states"));
                }
                Err(e) => return Err(e.into()),
            }
            out.timings.insert("oracle".into(), secs(oracle_start));
            out
        }
        Command::Segment { file, n, construct_boundaries: construct } => {
            let m = load::<S>(file)?;
            let t = m.line()?;
            let law = memory_one(m.law()?)?;
            let (beta, mut notes, details) = if *construct {
                let c = construct_boundaries(t, &law, tol)?;
                let note = match c.discrepancy() {
                    Some((w, v)) => format!("target-weighted right boundary fails at {w:?} (residual {})", fmt_scalar(v)),
                    None => "target-weighted right boundary validates".into(),
                };
                let details = json!({
                    "outside": { "left": rate_json(&c.outside.left), "right": rate_json(&c.outside.right) },
                    "target": { "left": rate_json(&c.target.left), "right": rate_json(&c.target.right) },
                    "outside_validates": c.outside_report.is_invariant(),
                });
                (c.outside, vec![note, "checking with the outside-weighted boundaries".into()], details)
            } else {
                let beta = m.beta.clone().ok_or_else(|| input("segment needs \"beta\" or --construct-boundaries"))?;
                (beta, vec![], serde_json::Value::Null)
            };
            let r = check_segment(t, &law, &beta, *n, tol)?;
            let mut out = Report::from_criterion("segment", &r.report);
            if let Some(c) = &r.conclusions {
                notes.push(format!(
                    "lengths {n} and {} vanish: Master7 ≡ 0 is {}, line verdict {}",
                    n + 1,
                    c.master7_vanishes,
                    c.line_report.verdict
                ));
            }
            out.timings.insert("criterion".into(), secs(start));
            let oracle_start = Instant::now();
            let g = build_segment_generator(t, &beta, *n, cap)?;
            let b = balance(&g, &markov_measure(&law, *n))?;
            let worst = b.iter().fold(S::zero(), |acc, v| if v.abs() > acc { v.abs() } else { acc });
            out.residual(format!("oracle segment n={n} (max |mu Q|)"), fmt_scalar(&worst));
            out.timings.insert("oracle".into(), secs(oracle_start));
            out.notes = notes;
            out.details = details;
            out
        }
        Command::Equivalences { file } => {
            let ctx = context(&load::<S>(file)?, tol)?;
            let r = check_master_replace_equivalences(&ctx, None);
            let p = r.predicates();
            let verdict = match (r.all_agree(), p[0]) {
                (false, _) => "disagree",
                (true, true) => "invariant",
                (true, false) => "not-invariant",
            };
            let mut out = Report::new("equivalences", verdict, "equivalence-panel");
            let names = [
                "line", "replace_probe", "replace_all", "master_probe", "master_all", "cycles", "cycle_h", "cycle_probe",
                "potential",
            ];
            out.details = json!({
                "predicates": names.iter().zip(p).map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
                "short_cycles": r.short_cycles,
                "line_max": r.line_max,
                "cycle_max": r.cycle_max,
            });
            if !r.short_cycles_agree() {
                out.notes.push("short-cycle equalities fail".into());
            }
            out
        }
        Command::Model { name, params, emit } => {
            let mut parsed = ipsinv::models::Params::<Exact>::new();
            for p in params {
                let (k, v) = p.split_once('=').ok_or_else(|| input(format!("parameter {p:?} is not key=value")))?;
                let v = parse_rational(v).ok_or_else(|| input(format!("parameter {k}: cannot parse {v:?}")))?;
                parsed.insert(k.trim().to_string(), v);
            }
            if !MODEL_NAMES.contains(&name.as_str()) {
                return Err(input(format!("unknown model {name:?}; known: {}", MODEL_NAMES.join(", "))));
            }
            let exact = build::<Exact>(name, &parsed)?;
            let file = ModelFile::from_spec(&exact);
            let text = file.to_json();
            match emit {
                Some(path) => std::fs::write(path, &text).map_err(|e| input(format!("{}: {e}", path.display())))?,
                None => println!("{text}"),
            }
            let typed = parsed.iter().map(|(k, v)| (k.clone(), S::from_rational(v))).collect();
            let outcomes = build::<S>(name, &typed)?.evaluate(tol)?;
            let holds = outcomes.iter().all(|o| o.holds);
            let mut out = Report::new("model", if holds { "holds" } else { "fails" }, name.clone());
            out.notes = outcomes
                .iter()
                .map(|o| format!("[{}] {}: {}", if o.holds { "ok" } else { "FAIL" }, o.note, o.detail))
                .collect();
            out.details = json!({ "params": file.params, "emitted": emit });
            out
        }
    };
    out.timings.insert("total".into(), secs(start));
    Ok(out)
}

/// Parses `argv`, runs the command, prints the report and returns the exit
/// code: 0 verdict computed, 1 not-invariant verdict of a check command,
/// 2 input error, 3 resource cap.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = if cli.opts.float {
        dispatch::<Float>(&cli.command, &cli.opts)
    } else {
        dispatch::<Exact>(&cli.command, &cli.opts)
    };
    match result {
        Ok(report) => {
            let text = match cli.opts.report {
                Format::Json => report.to_json() + "\n",
                Format::Text => report.to_text(),
            };
            let _ = std::io::stdout().write_all(text.as_bytes());
            if cli.command.is_check() && report.verdict == "not-invariant" {
                1
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

fn main() {
    std::process::exit(run(std::env::args_os()));
}
