//! `msgabor`: runs one check per invocation and writes a JSON report plus an
//! optional CSV table.
//!
//! Exit codes: 0 pass or report-only, 1 check failed, 2 configuration error,
//! 3 computation error.

mod commands;
mod config;
mod error;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use msgabor::report::Verdict;
use serde_json::json;

use commands::{Check, Outcome};
use config::{DomainKind, ExperimentConfig, KernelName, SignalRef};
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "msgabor", version, about = "Gabor analysis checks on lattices and model sets")]
struct Cli {
    /// Experiment config (JSON); defaults apply to every missing field.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for `<check>.json` and `<check>.csv`; the report goes to stdout otherwise.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Explicit path of the JSON report.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print resolved truncations and estimated term counts, then exit.
    #[arg(long, global = true)]
    dry_run: bool,
    /// Scheme JSON file, overriding the config.
    #[arg(long, global = true)]
    scheme: Option<PathBuf>,
    /// System JSON file (node set, windows, weights), overriding the config.
    #[arg(long, global = true)]
    system: Option<PathBuf>,
    /// Signal CSV (t, re, im), overriding the config.
    #[arg(long, global = true)]
    signal: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    domain: Option<DomainKind>,
    #[arg(long, global = true, value_enum)]
    kernel: Option<KernelName>,
    /// Truncation radius; also the enumeration radius.
    #[arg(long, global = true)]
    radius: Option<f64>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cut-and-project scheme diagnostics.
    Scheme {
        #[command(subcommand)]
        action: SchemeAction,
    },
    /// Model-set enumeration, density and genericity.
    Modelset {
        #[command(subcommand)]
        action: ModelsetAction,
    },
    /// Internal bump ψ_n and its Fourier transform.
    Bump {
        #[command(subcommand)]
        action: BumpAction,
    },
    /// Poisson summation checks.
    Psf {
        #[command(subcommand)]
        action: PsfAction,
    },
    /// Weighted bracket product, primal against dual form.
    Bracket {
        #[command(subcommand)]
        action: BracketAction,
    },
    /// Fourier series of the N-function.
    Nseries {
        #[command(subcommand)]
        action: NseriesAction,
    },
    /// Frame operators on lattices and model sets.
    Gabor {
        #[command(subcommand)]
        action: GaborAction,
    },
    /// FIGA, Janssen, Wexler-Raz, weighted tight/dual and density checks.
    Duality {
        #[command(subcommand)]
        action: DualityAction,
    },
    /// Acceptance suite.
    Suite {
        #[command(subcommand)]
        action: SuiteAction,
    },
}

#[derive(Subcommand, Debug)]
enum SchemeAction {
    Check,
}

#[derive(Subcommand, Debug)]
enum ModelsetAction {
    Enumerate,
    Density,
    Genericity,
}

#[derive(Subcommand, Debug)]
enum BumpAction {
    /// CSV (t, ψ̂_n(t)).
    Eval,
    /// CSV (x, ψ_n(x)).
    Table,
}

#[derive(Subcommand, Debug)]
enum PsfAction {
    Lattice,
    Modelset,
}

#[derive(Subcommand, Debug)]
enum BracketAction {
    Eval,
}

#[derive(Subcommand, Debug)]
enum NseriesAction {
    Build,
    Eval,
}

#[derive(Subcommand, Debug)]
enum GaborAction {
    Apply,
    Bounds,
    Covariance,
}

#[derive(Subcommand, Debug)]
enum DualityAction {
    Figa,
    Janssen,
    WexlerRaz,
    Tight,
    Dual,
    Density,
}

#[derive(Subcommand, Debug)]
enum SuiteAction {
    Acceptance {
        /// Criteria to run (e.g. AC-1); all when omitted.
        ids: Vec<String>,
    },
}

impl Command {
    fn check(&self) -> Check {
        match self {
            Self::Scheme { action: SchemeAction::Check } => Check::SchemeCheck,
            Self::Modelset { action } => match action {
                ModelsetAction::Enumerate => Check::ModelsetEnumerate,
                ModelsetAction::Density => Check::ModelsetDensity,
                ModelsetAction::Genericity => Check::ModelsetGenericity,
            },
            Self::Bump { action } => match action {
                BumpAction::Eval => Check::BumpEval,
                BumpAction::Table => Check::BumpTable,
            },
            Self::Psf { action } => match action {
                PsfAction::Lattice => Check::PsfLattice,
                PsfAction::Modelset => Check::PsfModelset,
            },
            Self::Bracket { action: BracketAction::Eval } => Check::BracketEval,
            Self::Nseries { action } => match action {
                NseriesAction::Build => Check::NseriesBuild,
                NseriesAction::Eval => Check::NseriesEval,
            },
            Self::Gabor { action } => match action {
                GaborAction::Apply => Check::GaborApply,
                GaborAction::Bounds => Check::GaborBounds,
                GaborAction::Covariance => Check::GaborCovariance,
            },
            Self::Duality { action } => match action {
                DualityAction::Figa => Check::DualityFiga,
                DualityAction::Janssen => Check::DualityJanssen,
                DualityAction::WexlerRaz => Check::DualityWexlerRaz,
                DualityAction::Tight => Check::DualityTight,
                DualityAction::Dual => Check::DualityDual,
                DualityAction::Density => Check::DualityDensity,
            },
            Self::Suite { action: SuiteAction::Acceptance { .. } } => Check::SuiteAcceptance,
        }
    }
}

fn resolve_config(cli: &Cli, check: Check) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(c) = &cfg.check {
        if c != check.name() && *c != check.stem() {
            return Err(CliError::config(format!("config is for `{c}`, not `{}`", check.name())));
        }
    }
    if let Some(p) = &cli.system {
        cfg.system = config::read_json(p)?;
        if let Some(dir) = p.parent() {
            cfg.base_dir = dir.to_path_buf();
        }
    }
    if let Some(p) = &cli.scheme {
        cfg.system.scheme = Some(config::SchemeRef::Path(absolute(p)?));
    }
    if let Some(p) = &cli.signal {
        cfg.signal = Some(SignalRef::Csv { csv: absolute(p)? });
    }
    if let Some(d) = cli.domain {
        cfg.system.domain = d;
    }
    if let Some(k) = cli.kernel {
        cfg.system.kernel = k;
    }
    if let Some(r) = cli.radius {
        cfg.policy.radius = r;
        cfg.radius = r;
    }
    if let Some(t) = cli.tol {
        cfg.policy.tol = t;
    }
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    if let Command::Suite { action: SuiteAction::Acceptance { ids } } = &cli.command {
        if !ids.is_empty() {
            cfg.only = ids.clone();
        }
    }
    Ok(cfg)
}

fn absolute(p: &Path) -> Result<PathBuf, CliError> {
    std::path::absolute(p).map_err(|e| CliError::config(format!("{}: {e}", p.display())))
}

fn write_table(path: &Path, table: &commands::Table) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

fn emit(cli: &Cli, check: Check, text: &str, table: Option<&commands::Table>) -> Result<(), CliError> {
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir)?;
        if let Some(t) = table {
            write_table(&dir.join(format!("{}.csv", check.stem())), t)?;
        }
    }
    let report_path = cli.report.clone().or_else(|| cli.out.as_ref().map(|d| d.join(format!("{}.json", check.stem()))));
    match report_path {
        Some(p) => fs::write(&p, format!("{text}\n"))?,
        None => writeln!(std::io::stdout(), "{text}")?,
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<Verdict, CliError> {
    let check = cli.command.check();
    let cfg = resolve_config(cli, check)?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    }
    if cli.dry_run {
        let plan = commands::plan(check, &cfg)?;
        emit(cli, check, &serde_json::to_string_pretty(&plan).expect("serializable"), None)?;
        return Ok(Verdict::ReportOnly);
    }
    let start = Instant::now();
    let Outcome { verdict, lhs, rhs, gap, tails, details, table } = commands::run(check, &cfg)?;
    let report = json!({
        "check": check.name(),
        "params": cfg,
        "lhs": lhs,
        "rhs": rhs,
        "gap": gap,
        "tails": tails,
        "verdict": verdict,
        "details": details,
        "seed": cfg.seed(),
        "runtime_ms": start.elapsed().as_secs_f64() * 1e3,
    });
    emit(cli, check, &serde_json::to_string_pretty(&report).expect("serializable"), table.as_ref())?;
    Ok(verdict)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(Verdict::Pass | Verdict::ReportOnly) => ExitCode::SUCCESS,
        Ok(Verdict::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
