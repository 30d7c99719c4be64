//! Command-line entry point: subcommand dispatch, config/flag merging, and
//! exit-code mapping (0 success, 1 numerical failure, 2 usage error).

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use biotfe_cli::{
    check_finite, convergence_csv, infsup_csv, parse_levels, plot_script, run_convergence,
    run_energy_check, run_infsup, RunConfig,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "biotfe",
    version,
    about = "Convergence, inf-sup, and energy studies for the Biot consolidation solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a refinement ladder and emit the error/eoc table as CSV
    Convergence(StudyArgs),
    /// Compute discrete inf-sup constants over a level range
    Infsup(StudyArgs),
    /// Verify the discrete energy identity and dissipation
    EnergyCheck(StudyArgs),
}

#[derive(Args)]
struct StudyArgs {
    /// key=value file applied before any flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// Manufactured solution: biot_sine or polynomial
    #[arg(long)]
    case: Option<String>,
    /// Pressure polynomial degree; displacement uses k+1
    #[arg(long)]
    k: Option<usize>,
    /// Lobatto-IIIA stage count
    #[arg(long)]
    s: Option<usize>,
    /// Inclusive mesh-level range, e.g. 3..6, or a single level
    #[arg(long)]
    levels: Option<String>,
    /// Time-step ratio in tau = tau_ratio * h
    #[arg(long = "tau_ratio")]
    tau_ratio: Option<f64>,
    /// Final time
    #[arg(long = "T")]
    t_end: Option<f64>,
    /// Output CSV path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a gnuplot script next to the CSV
    #[arg(long = "emit_plots")]
    emit_plots: bool,
    /// Fill the runtime_s column (breaks byte-for-byte determinism)
    #[arg(long)]
    timing: bool,
    #[arg(long, hide = true)]
    corrupt_tableau: bool,
}

enum CliError {
    Usage(String),
    Numerical(String),
}

impl From<biotfe::Error> for CliError {
    fn from(err: biotfe::Error) -> Self {
        CliError::Numerical(err.to_string())
    }
}

fn build_config(args: &StudyArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        cfg.apply_file(path).map_err(CliError::Usage)?;
    }
    if let Some(v) = &args.case {
        cfg.set("case", v).map_err(CliError::Usage)?;
    }
    if let Some(v) = args.k {
        cfg.k = v;
    }
    if let Some(v) = args.s {
        cfg.s = v;
    }
    if let Some(v) = &args.levels {
        cfg.levels = parse_levels(v).map_err(CliError::Usage)?;
    }
    if let Some(v) = args.tau_ratio {
        cfg.tau_ratio = v;
    }
    if let Some(v) = args.t_end {
        cfg.t_end = v;
    }
    if let Some(v) = &args.out {
        cfg.out = Some(v.clone());
    }
    if args.emit_plots {
        cfg.emit_plots = true;
    }
    if args.timing {
        cfg.timing = true;
    }
    if args.corrupt_tableau {
        cfg.corrupt_tableau = true;
    }
    cfg.validate().map_err(CliError::Usage)?;
    Ok(cfg)
}

fn write_output(cfg: &RunConfig, text: &str) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, text)
                .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_convergence(cfg: &RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let rows = run_convergence(cfg)?;
    check_finite(&rows)?;
    write_output(cfg, &convergence_csv(&rows))?;
    if cfg.emit_plots {
        let csv_path = cfg.out.as_ref().expect("validated with emit_plots");
        let gp_path = csv_path.with_extension("gp");
        std::fs::write(&gp_path, plot_script(&rows, csv_path, cfg.k))
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", gp_path.display())))?;
        eprintln!("wrote {}", gp_path.display());
    }
    eprintln!(
        "{} levels in {:.1}s",
        rows.len(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

fn cmd_infsup(cfg: &RunConfig) -> Result<(), CliError> {
    let results = run_infsup(cfg)?;
    write_output(cfg, &infsup_csv(&results))
}

fn cmd_energy_check(cfg: &RunConfig) -> Result<(), CliError> {
    let report = run_energy_check(cfg)?;
    println!(
        "energy identity: max residual {:.3e} over {} nodes (tol 1e-9)",
        report.identity_max_residual, report.identity_nodes
    );
    println!(
        "energy decay:    max residual {:.3e}, {} homogeneous steps",
        report.decay_max_residual, report.decay_steps
    );
    match report.first_violation {
        None => {
            println!("energy checks passed");
            Ok(())
        }
        Some((what, node)) => Err(CliError::Numerical(format!(
            "{what} violated first at node {node}"
        ))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = match &cli.command {
        Command::Convergence(args) => build_config(args).and_then(|cfg| cmd_convergence(&cfg)),
        Command::Infsup(args) => build_config(args).and_then(|cfg| cmd_infsup(&cfg)),
        Command::EnergyCheck(args) => build_config(args).and_then(|cfg| cmd_energy_check(&cfg)),
    };
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
