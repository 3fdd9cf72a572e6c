use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ensemble_pac::harness::{emit_report, read_manifest, run_experiment_with_threads, RunManifest};

/// PAC exploration with linearly combined model ensembles.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the optimistic version-space learner.
    RunPac(RunArgs),
    /// Run doubling model selection over a nested partition family.
    RunSelect(RunArgs),
    /// Write an instance bundle.
    GenInstance(RunArgs),
    /// Exact error decomposition for a set of weight matrices.
    Diagnose(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Run manifest (JSON).
    #[arg(long)]
    manifest: PathBuf,
    /// Overrides the manifest's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Report path; defaults to the manifest's `output`, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Reports do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_LEARNER: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (expected, args) = match &cli.command {
        Command::RunPac(a) => ("pac", a),
        Command::RunSelect(a) => ("select", a),
        Command::GenInstance(a) => ("generate", a),
        Command::Diagnose(a) => ("diagnose", a),
    };
    match run(expected, args) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}

fn run(expected: &str, args: &RunArgs) -> Result<ExitCode, String> {
    let mut manifest: RunManifest = read_manifest(&args.manifest).map_err(|e| e.to_string())?;
    if manifest.run.command() != expected {
        return Err(format!(
            "{}: manifest command is `{}`, this subcommand runs `{expected}`",
            args.manifest.display(),
            manifest.run.command()
        ));
    }
    if let Some(seed) = args.seed {
        manifest.seed = seed;
    }
    if args.threads == Some(0) {
        return Err("--threads must be at least 1".into());
    }
    let base = args.manifest.parent().unwrap_or(Path::new(""));
    let out = args
        .out
        .clone()
        .or_else(|| manifest.output.as_ref().map(|p| base.join(p)));
    let report = run_experiment_with_threads(&manifest, base, args.threads).map_err(|e| e.to_string())?;
    match out {
        Some(path) => {
            emit_report(&report.records, &report.summary, &path).map_err(|e| e.to_string())?;
            eprintln!(
                "{}: {} ({} records, {:.2?})",
                path.display(),
                report.status(),
                report.records.len(),
                report.wall_time
            );
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            for line in report.records.iter().chain(std::iter::once(&report.summary)) {
                writeln!(stdout, "{line}").map_err(|e| e.to_string())?;
            }
        }
    }
    Ok(if report.failed {
        ExitCode::from(EXIT_LEARNER)
    } else {
        ExitCode::SUCCESS
    })
}
