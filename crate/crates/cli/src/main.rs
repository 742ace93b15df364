//! `hspline`: adaptive refinement runs, lineage verification, sampling,
//! conversion and constants from the command line.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 configuration error,
//! 3 depth or resource cap.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use hspline::driver::{run, sample_grid, verify, AuditLevel, RunConfig, RunStatus};
use hspline::hierarchy::{lineage_from_json, lineage_to_json, Lineage};
use hspline::refinement::{default_complexity_constants, locality_constant, to_absorbing_gap_controlled};
use hspline::{Error, SpaceConfig};

#[derive(Parser, Debug)]
#[command(name = "hspline", version, about = "Hierarchical B-spline refinement toolkit")]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Audit level, overriding the configuration.
    #[arg(long, global = true, value_enum)]
    audit: Option<Audit>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Audit {
    None,
    Fast,
    Oracle,
}

impl From<Audit> for AuditLevel {
    fn from(a: Audit) -> Self {
        match a {
            Audit::None => AuditLevel::None,
            Audit::Fast => AuditLevel::Fast,
            Audit::Oracle => AuditLevel::Oracle,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an adaptive loop; writes run_log.jsonl, summary.json and lineage.json.
    Run,
    /// Check a lineage file (fast or oracle level).
    Verify { lineage: PathBuf },
    /// Sample the partition of unity of a lineage on a uniform grid (CSV).
    Sample {
        lineage: PathBuf,
        #[arg(long, default_value_t = 11)]
        resolution: usize,
    },
    /// Extend a lineage to an absorbing gap-controlled one.
    Convert { lineage: PathBuf },
    /// Print the locality and complexity constants of a space.
    Constants(SpaceArgs),
}

#[derive(Args, Debug)]
struct SpaceArgs {
    #[arg(long)]
    m: Option<i64>,
    #[arg(long)]
    n: Option<i64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    g: Option<u32>,
}

/// A failure carrying its exit code.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

fn code_of(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parse(_) => 2,
        Error::DepthCap { .. } | Error::SearchCap(_) | Error::Overflow(_) => 3,
        _ => 1,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: code_of(&e), err: e.into() }
    }
}

/// I/O and other setup problems count as configuration errors.
impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        let code = err.downcast_ref::<Error>().map_or(2, code_of);
        Failure { code, err }
    }
}

type Outcome = Result<u8, Failure>;

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load(path: &Path) -> Result<Lineage, Failure> {
    let text = read(path)?;
    lineage_from_json(&text, None).map_err(|e| Failure { code: code_of(&e), err: anyhow::Error::new(e).context(format!("loading {}", path.display())) })
}

fn output_dir(cli: &Cli) -> anyhow::Result<Option<PathBuf>> {
    match &cli.output {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            Ok(Some(dir.clone()))
        }
        None => Ok(None),
    }
}

fn write(dir: &Path, name: &str, text: &str) -> anyhow::Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

/// Writes to `name` under the output directory, or to stdout without one.
fn emit(cli: &Cli, name: &str, text: &str) -> anyhow::Result<()> {
    match output_dir(cli)? {
        Some(dir) => write(&dir, name, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_run(cli: &Cli) -> Outcome {
    let path = cli.config.as_ref().ok_or_else(|| Failure::from(Error::Config("run needs --config".into())))?;
    let mut config = RunConfig::from_json(&read(path)?)?;
    if let Some(a) = cli.audit {
        config.audit = a.into();
    }
    let log = run(&config)?;
    let dir = output_dir(cli)?.unwrap_or_else(|| PathBuf::from("."));
    write(&dir, "run_log.jsonl", &log.to_jsonl())?;
    write(&dir, "summary.json", &log.summary_json())?;
    write(&dir, "lineage.json", &(lineage_to_json(&log.lineage) + "\n"))?;
    let s = &log.summary;
    println!(
        "status={:?} steps={}/{} size={}->{} depth={} worst_ratio={:.4} bound={:.4} complexity={}",
        s.status,
        s.iterations_completed,
        s.iterations_requested,
        s.initial_size,
        s.final_size,
        s.final_depth,
        s.complexity.worst_ratio,
        s.complexity.bound,
        if s.complexity.passed { "pass" } else { "fail" },
    );
    Ok(match s.status {
        RunStatus::AuditFailed => 1,
        _ if !s.complexity.passed => 1,
        RunStatus::DepthCap => 3,
        RunStatus::Completed => 0,
    })
}

fn cmd_verify(cli: &Cli, lineage: &Path) -> Outcome {
    let lin = load(lineage)?;
    let level = match cli.audit.map(AuditLevel::from) {
        None | Some(AuditLevel::None) => AuditLevel::Fast,
        Some(l) => l,
    };
    let verdict = verify(&lin, level)?;
    let text = serde_json::to_string_pretty(&verdict).context("serializing verdict")? + "\n";
    emit(cli, "verdict.json", &text)?;
    for c in verdict.checks.iter().filter(|c| !c.passed) {
        eprintln!("FAIL {}: {}", c.name, c.detail);
    }
    Ok(if verdict.passed { 0 } else { 1 })
}

fn cmd_sample(cli: &Cli, lineage: &Path, resolution: usize) -> Outcome {
    let lin = load(lineage)?;
    emit(cli, "sample.csv", &sample_grid(&lin, resolution)?)?;
    Ok(0)
}

fn cmd_convert(cli: &Cli, lineage: &Path) -> Outcome {
    let lin = load(lineage)?;
    let out = to_absorbing_gap_controlled(&lin)?;
    emit(cli, "lineage.json", &(lineage_to_json(&out) + "\n"))?;
    eprintln!("refined {} -> {}, generator {} -> {}", lin.refined().len(), out.refined().len(), lin.generator_len(), out.generator_len());
    Ok(0)
}

fn cmd_constants(cli: &Cli, args: &SpaceArgs) -> Outcome {
    let base = match &cli.config {
        Some(p) => Some(RunConfig::from_json(&read(p)?)?),
        None => None,
    };
    let pick = |flag: Option<i64>, from: Option<i64>, name: &str| {
        flag.or(from).ok_or_else(|| Failure::from(Error::Config(format!("missing --{name} (or --config)"))))
    };
    let m = pick(args.m, base.as_ref().map(|c| c.m), "m")?;
    let n = pick(args.n, base.as_ref().map(|c| c.n), "n")?;
    let d = pick(args.d.map(|v| v as i64), base.as_ref().map(|c| c.d as i64), "d")?;
    let g = pick(args.g.map(i64::from), base.as_ref().map(|c| i64::from(c.g)), "g")?;
    let d = usize::try_from(d).map_err(|_| Failure::from(Error::Config("d out of range".into())))?;
    let g = u32::try_from(g).map_err(|_| Failure::from(Error::Config("g out of range".into())))?;
    let cfg = SpaceConfig::new(m, n, d, g)?;
    let loc = locality_constant(&cfg)?;
    let k = default_complexity_constants(&cfg)?;
    let doc = serde_json::json!({
        "config": { "m": m, "n": n, "d": d, "g": g },
        "locality_constant": loc.proof_value,
        "locality_constant_remark": loc.remark_value,
        "complexity": k,
    });
    emit(cli, "constants.json", &(serde_json::to_string_pretty(&doc).context("serializing constants")? + "\n"))?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Run => cmd_run(&cli),
        Command::Verify { lineage } => cmd_verify(&cli, lineage),
        Command::Sample { lineage, resolution } => cmd_sample(&cli, lineage, *resolution),
        Command::Convert { lineage } => cmd_convert(&cli, lineage),
        Command::Constants(args) => cmd_constants(&cli, args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
