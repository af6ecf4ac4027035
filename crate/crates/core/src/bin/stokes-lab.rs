use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stokes_lab::cli::{exit_code_for, run, validate_only, ExperimentConfig, ExperimentKind};
use stokes_lab::Error;

#[derive(Parser)]
#[command(
    name = "stokes-lab",
    version,
    about = "Exterior plane elastostatics experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write report.json plus CSV series.
    Run {
        kind: ExperimentKind,
        #[command(flatten)]
        flags: Flags,
    },
    /// Check a configuration without running it.
    Validate {
        kind: Option<ExperimentKind>,
        #[command(flatten)]
        flags: Flags,
    },
    Paradox(Flags),
    Basis(Flags),
    Degiorgi(Flags),
    Decay(Flags),
    Contraction(Flags),
    Gym(Flags),
}

#[derive(Args, Clone)]
struct Flags {
    /// circle:a | ellipse:a,b | polygon:rho;x,y;x,y;...
    #[arg(long)]
    curve: Option<String>,
    /// iso:λ,μ | degiorgi:ξ | voigt:c11,c12,c13,c22,c23,c33 | random:μ0,μe
    #[arg(long)]
    material: Option<String>,
    /// const:a1,a2 | rot | file:path
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    nodes: Option<usize>,
    /// n_r x n_θ, e.g. 128x256
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    rmax: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
    /// wirtinger | hardy | korn | all
    #[arg(long)]
    check: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON configuration; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "stokes-lab-out")]
    out: PathBuf,
}

impl Flags {
    fn into_config(
        self,
        kind: Option<ExperimentKind>,
    ) -> Result<(ExperimentConfig, PathBuf), Error> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_json(&std::fs::read_to_string(p)?)?,
            None => ExperimentConfig::new(kind.unwrap_or(ExperimentKind::Paradox)),
        };
        if let Some(k) = kind {
            cfg.kind = k;
        }
        macro_rules! merge {
            ($($f:ident),*) => { $( if self.$f.is_some() { cfg.$f = self.$f; } )* };
        }
        merge!(curve, material, data, nodes, grid, rmax, xi, check, trials, seed);
        Ok((cfg, self.out))
    }
}

fn configure_threads() {
    faer::set_global_parallelism(faer::Par::Seq);
    if let Some(n) = std::env::var("STOKES_LAB_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

fn execute(cfg: ExperimentConfig, out: &Path) -> Result<i32, Error> {
    let report = run(&cfg, out)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for v in &report.verdicts {
        let tag = if v.passed { "ok  " } else { "FAIL" };
        println!(
            "{tag} {:<24} {:.6e} (tol {:.1e}) {}",
            v.name, v.value, v.tolerance, v.detail
        );
    }
    println!("report: {}", out.join("report.json").display());
    Ok(if report.passed() { 0 } else { 2 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    configure_threads();
    let result = match cli.command {
        Command::Validate { kind, flags } => flags.into_config(kind).and_then(|(cfg, _)| {
            let diag = validate_only(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&diag)?);
            Ok(0)
        }),
        Command::Run { kind, flags } => flags
            .into_config(Some(kind))
            .and_then(|(c, o)| execute(c, &o)),
        Command::Paradox(f) => f
            .into_config(Some(ExperimentKind::Paradox))
            .and_then(|(c, o)| execute(c, &o)),
        Command::Basis(f) => f
            .into_config(Some(ExperimentKind::Basis))
            .and_then(|(c, o)| execute(c, &o)),
        Command::Degiorgi(f) => f
            .into_config(Some(ExperimentKind::Degiorgi))
            .and_then(|(c, o)| execute(c, &o)),
        Command::Decay(f) => f
            .into_config(Some(ExperimentKind::Decay))
            .and_then(|(c, o)| execute(c, &o)),
        Command::Contraction(f) => f
            .into_config(Some(ExperimentKind::Contraction))
            .and_then(|(c, o)| execute(c, &o)),
        Command::Gym(f) => f
            .into_config(Some(ExperimentKind::Gym))
            .and_then(|(c, o)| execute(c, &o)),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
