use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use zeta_ladder::error::Error;
use zeta_ladder::ladder::{self, inverse_ladder, reverse_interval, solve_phi2};
use zeta_ladder::moments::{load_table, table_fingerprint, Moments};
use zeta_ladder::quadrature::PanelPolicy;
use zeta_ladder::verify::{self, fmt_num, Outcome, VerificationReport};
use zeta_ladder::weighted_moments::{MuFamily, WeightedMomentContext};
use zeta_ladder::zeta::{DEFAULT_CROSSOVER_T, DEFAULT_RS_TERMS, DEFAULT_TARGET_ABS_ERR};
use zeta_ladder::ZEvaluator;

pub const CACHE_ENV: &str = "ZETA_LADDER_CACHE";

pub const EXIT_PASS: u8 = 0;
pub const EXIT_SOFT_FAIL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CONVERGENCE: u8 = 3;
pub const EXIT_CACHE: u8 = 4;
pub const EXIT_HARD_FAIL: u8 = 5;

#[derive(Debug, Parser)]
#[command(name = "zeta-ladder", version, about = "Hardy Z, fourth moments and the second-order Jacob's ladder")]
pub struct Cli {
    #[command(flatten)]
    config: RunConfig,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunConfig {
    /// Riemann-Siegel correction terms (0-3).
    #[arg(long, global = true, default_value_t = DEFAULT_RS_TERMS)]
    rs_terms: usize,
    /// Height below which Z is evaluated from the alternating series.
    #[arg(long, global = true, default_value_t = DEFAULT_CROSSOVER_T)]
    crossover: f64,
    /// Requested absolute accuracy of Z(t).
    #[arg(long, global = true, default_value_t = DEFAULT_TARGET_ABS_ERR)]
    target_err: f64,
    #[arg(long, global = true, default_value_t = PanelPolicy::default().rel_tol)]
    rel_tol: f64,
    #[arg(long, global = true, default_value_t = PanelPolicy::default().gl_order)]
    gl_order: usize,
    #[arg(long, global = true, default_value_t = PanelPolicy::default().panels_per_oscillation)]
    panels_per_oscillation: f64,
    #[arg(long, global = true, default_value_t = 1.0)]
    omega1: f64,
    #[arg(long, global = true, default_value_t = 1.0)]
    omega2: f64,
    /// Ladder solver tolerance on |W(x) - I(T)| / I(T).
    #[arg(long, global = true, default_value_t = ladder::DEFAULT_TOL)]
    tol: f64,
    /// Moment table file (default from ZETA_LADDER_CACHE; in memory when unset).
    #[arg(long, global = true, env = CACHE_ENV)]
    cache: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Structured,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate Z(t) and θ(t).
    Z {
        #[arg(required = true, allow_negative_numbers = true)]
        t: Vec<f64>,
    },
    /// Cumulative fourth moment I(T).
    Moment {
        #[arg(allow_negative_numbers = true)]
        t: f64,
    },
    /// Solve φ₂(T).
    Ladder {
        #[arg(allow_negative_numbers = true)]
        t: f64,
    },
    /// Inverse ladder M₂(y).
    Inverse {
        #[arg(allow_negative_numbers = true)]
        y: f64,
    },
    /// Reverse interval [M₂(T), M₂(T+U)].
    Reverse {
        #[arg(allow_negative_numbers = true)]
        t: f64,
        #[arg(allow_negative_numbers = true)]
        u: f64,
    },
    /// Verification reports.
    Verify(VerifyArgs),
    /// Moment table maintenance.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportName {
    Theorem,
    #[value(name = "phi2-near-t")]
    Phi2NearT,
    Laplace,
    Phi2pp,
    Chord,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    name: ReportName,
    /// Heights T (comma separated or repeated).
    #[arg(long = "t", num_args = 0.., value_delimiter = ',')]
    t: Option<Vec<f64>>,
    /// Interval lengths U for `chord`, paired with --t (default T^0.93).
    #[arg(long = "u", num_args = 0.., value_delimiter = ',')]
    u: Option<Vec<f64>>,
    /// Laplace parameters δ.
    #[arg(long = "delta", num_args = 0.., value_delimiter = ',')]
    delta: Option<Vec<f64>>,
    /// ε in U = T^(13/14 + 2ε).
    #[arg(long, default_value_t = verify::DEFAULT_EPSILON)]
    epsilon: f64,
}

#[derive(Debug, Subcommand)]
enum CacheAction {
    /// Extend the table to height T.
    Build {
        #[arg(allow_negative_numbers = true)]
        t: f64,
    },
    /// Print row count, ΔT and fingerprint.
    Info,
    /// Delete the table (requires --yes).
    Clear {
        #[arg(long)]
        yes: bool,
    },
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Domain(_) | Error::Accuracy(_) => EXIT_USAGE,
            Error::Cache(_) => EXIT_CACHE,
            _ => EXIT_CONVERGENCE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => fmt_num(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => fmt_num(*v),
            Cell::Num(_) => "null".into(),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => format!("{s:?}"),
        }
    }
}

/// A flat table of records printed by the non-report subcommands.
struct Record {
    name: &'static str,
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Record {
    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = self.columns.join(",");
                out.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
                out
            }
            Format::Structured => {
                let rows: Vec<String> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let fields: Vec<String> = self
                            .columns
                            .iter()
                            .zip(row)
                            .map(|(c, v)| format!("\"{c}\": {}", v.json()))
                            .collect();
                        format!("    {{{}}}", fields.join(", "))
                    })
                    .collect();
                format!("{{\n  \"name\": \"{}\",\n  \"rows\": [\n{}\n  ]\n}}\n", self.name, rows.join(",\n"))
            }
        }
    }
}

fn emit(config: &RunConfig, text: &str) -> CliResult<()> {
    match &config.out {
        Some(path) => fs::write(path, text).map_err(|e| Failure {
            code: EXIT_USAGE,
            message: format!("cannot write {}: {e}", path.display()),
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

struct Session {
    evaluator: Arc<ZEvaluator>,
    policy: PanelPolicy,
    mu: MuFamily,
}

impl Session {
    fn new(config: &RunConfig) -> CliResult<Self> {
        let evaluator = Arc::new(ZEvaluator::new(config.rs_terms, config.crossover, config.target_err)?);
        let policy = PanelPolicy {
            gl_order: config.gl_order,
            panels_per_oscillation: config.panels_per_oscillation,
            rel_tol: config.rel_tol,
            ..PanelPolicy::default()
        };
        policy.validate()?;
        let mu = MuFamily::new(config.omega1, config.omega2)?;
        Ok(Self { evaluator, policy, mu })
    }

    fn moments(&self, cache: Option<&Path>) -> CliResult<Arc<Moments>> {
        let m = match cache {
            Some(path) => Moments::with_cache_file(self.evaluator.clone(), self.policy, path)?,
            None => Moments::new(self.evaluator.clone(), self.policy)?,
        };
        Ok(Arc::new(m))
    }

    fn context(&self, cache: Option<&Path>) -> CliResult<WeightedMomentContext> {
        Ok(WeightedMomentContext::new(self.mu, self.moments(cache)?))
    }
}

pub fn run(args: Cli) -> CliResult<u8> {
    let config = &args.config;
    if let Some(n) = config.threads {
        if n == 0 {
            return Err(Failure::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(format!("cannot configure thread pool: {e}")))?;
    }
    if !(config.tol > 0.0 && config.tol < 1.0) {
        return Err(Failure::usage(format!("--tol must lie in (0, 1), got {}", config.tol)));
    }
    let session = Session::new(config)?;
    let cache = config.cache.as_deref();

    match &args.command {
        Command::Z { t } => {
            let mut rows = Vec::new();
            for &t in t {
                let z = session.evaluator.hardy_z(t)?;
                let theta = session.evaluator.theta(t)?;
                rows.push(vec![Cell::Num(t), Cell::Num(z), Cell::Num(theta)]);
            }
            let rec = Record {
                name: "z",
                columns: vec!["t", "z", "theta"],
                rows,
            };
            emit(config, &rec.render(config.format))?;
        }
        Command::Moment { t } => {
            let moments = session.moments(cache)?;
            let i = moments.fourth_moment(*t)?;
            let rec = Record {
                name: "moment",
                columns: vec!["T", "I4"],
                rows: vec![vec![Cell::Num(*t), Cell::Num(i)]],
            };
            emit(config, &rec.render(config.format))?;
        }
        Command::Ladder { t } => {
            let ctx = session.context(cache)?;
            let p = solve_phi2(*t, &ctx, config.tol)?;
            let rec = Record {
                name: "ladder",
                columns: vec!["T", "phi2", "residual", "iterations", "within_bracket"],
                rows: vec![vec![
                    Cell::Num(p.t),
                    Cell::Num(p.phi2),
                    Cell::Num(p.residual),
                    Cell::Int(p.iterations as u64),
                    Cell::Bool(p.within_bracket),
                ]],
            };
            emit(config, &rec.render(config.format))?;
        }
        Command::Inverse { y } => {
            let ctx = session.context(cache)?;
            let p = inverse_ladder(*y, &ctx, config.tol)?;
            let rec = Record {
                name: "inverse",
                columns: vec!["y", "T", "residual", "iterations"],
                rows: vec![vec![
                    Cell::Num(p.y),
                    Cell::Num(p.t),
                    Cell::Num(p.residual),
                    Cell::Int(p.iterations as u64),
                ]],
            };
            emit(config, &rec.render(config.format))?;
        }
        Command::Reverse { t, u } => {
            let ctx = session.context(cache)?;
            let r = reverse_interval(*t, *u, &ctx, config.tol)?;
            let rec = Record {
                name: "reverse",
                columns: vec!["T", "U", "T_ring", "TU_ring", "residual_t", "residual_tu"],
                rows: vec![vec![
                    Cell::Num(r.t),
                    Cell::Num(r.u),
                    Cell::Num(r.t_ring),
                    Cell::Num(r.tu_ring),
                    Cell::Num(r.residual_t),
                    Cell::Num(r.residual_tu),
                ]],
            };
            emit(config, &rec.render(config.format))?;
        }
        Command::Verify(v) => {
            let ctx = session.context(cache)?;
            let report = run_verify(v, &ctx)?;
            let text = match config.format {
                Format::Csv => report.to_csv(),
                Format::Structured => report.to_structured(),
            };
            emit(config, &text)?;
            for c in report.checks.iter().filter(|c| !c.passed) {
                eprintln!("check failed ({:?}): {} [{}]", c.severity, c.name, c.detail);
            }
            return Ok(match report.outcome() {
                Outcome::Pass => EXIT_PASS,
                Outcome::SoftFail => EXIT_SOFT_FAIL,
                Outcome::HardFail => EXIT_HARD_FAIL,
            });
        }
        Command::Cache { action } => return run_cache(action, config, &session),
    }
    Ok(EXIT_PASS)
}

fn grid(values: &Option<Vec<f64>>, default: &[f64], flag: &str) -> CliResult<Vec<f64>> {
    match values {
        None => Ok(default.to_vec()),
        Some(v) if v.is_empty() => Err(Failure::usage(format!("{flag} needs at least one value"))),
        Some(v) => Ok(v.clone()),
    }
}

fn run_verify(v: &VerifyArgs, ctx: &WeightedMomentContext) -> CliResult<VerificationReport> {
    let report = match v.name {
        ReportName::Theorem => {
            let ts = grid(&v.t, &[1e3], "--t")?;
            let mut report = verify::verify_theorem(ts[0], v.epsilon, ctx)?;
            for &t in &ts[1..] {
                report.absorb(verify::verify_theorem(t, v.epsilon, ctx)?);
            }
            report
        }
        ReportName::Phi2NearT => verify::verify_lemma_phi2_near_t(&grid(&v.t, &[1e2, 1e3, 1e4], "--t")?, ctx)?,
        ReportName::Laplace => verify::verify_laplace(&grid(&v.delta, &[1e-2, 1e-3], "--delta")?, ctx)?,
        ReportName::Phi2pp => verify::verify_phi2pp_bound(&grid(&v.t, &[1e3, 1e4], "--t")?, ctx)?,
        ReportName::Chord => {
            let ts = grid(&v.t, &[1e3, 1e4], "--t")?;
            let us = match &v.u {
                None => ts.iter().map(|t| t.powf(0.93)).collect(),
                Some(u) if u.len() == ts.len() => u.clone(),
                Some(u) => {
                    return Err(Failure::usage(format!(
                        "--u has {} values but --t has {}",
                        u.len(),
                        ts.len()
                    )))
                }
            };
            let pairs: Vec<(f64, f64)> = ts.into_iter().zip(us).collect();
            verify::verify_chord(&pairs, ctx)?
        }
    };
    Ok(report)
}

fn run_cache(action: &CacheAction, config: &RunConfig, session: &Session) -> CliResult<u8> {
    let path = config
        .cache
        .as_deref()
        .ok_or_else(|| Failure::usage(format!("cache commands need --cache or {CACHE_ENV}")))?;
    match action {
        CacheAction::Build { t } => {
            let moments = session.moments(Some(path))?;
            let table = moments.extend_to(*t)?;
            let rec = info_record(path, table.rows(), table.dt(), table.fingerprint(), table.cells_covered(), true);
            emit(config, &rec.render(config.format))?;
        }
        CacheAction::Info => {
            let table = load_table(path).map_err(Error::from)?;
            let current = table_fingerprint(&session.evaluator, &session.policy, table.dt());
            let rec = info_record(
                path,
                table.rows(),
                table.dt(),
                table.fingerprint(),
                table.cells_covered(),
                current == table.fingerprint(),
            );
            emit(config, &rec.render(config.format))?;
        }
        CacheAction::Clear { yes } => {
            if !yes {
                return Err(Failure::usage(format!(
                    "refusing to delete {} without --yes",
                    path.display()
                )));
            }
            let mut sidecar = path.as_os_str().to_owned();
            sidecar.push(".cells");
            for p in [path.to_path_buf(), PathBuf::from(sidecar)] {
                match fs::remove_file(&p) {
                    Ok(()) => {}
                    Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                    Err(e) => {
                        return Err(Failure {
                            code: EXIT_CACHE,
                            message: format!("cannot remove {}: {e}", p.display()),
                        })
                    }
                }
            }
        }
    }
    Ok(EXIT_PASS)
}

fn info_record(path: &Path, rows: usize, dt: f64, fingerprint: &str, cells: usize, matches: bool) -> Record {
    Record {
        name: "cache",
        columns: vec!["path", "rows", "dT", "fingerprint", "cells", "fingerprint_matches"],
        rows: vec![vec![
            Cell::Text(path.display().to_string()),
            Cell::Int(rows as u64),
            Cell::Num(dt),
            Cell::Text(fingerprint.to_string()),
            Cell::Int(cells as u64),
            Cell::Bool(matches),
        ]],
    }
}
