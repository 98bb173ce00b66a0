use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lmm_interp::acceptance::{run_all, AcceptanceOptions};
use lmm_interp::error::Error;
use lmm_interp::scenario::{
    run_dynamics_trace, run_impvol_experiment, run_term_structure_sweep, write_config_echo,
    MethodChoice, ScenarioConfig,
};

/// Continuous-tenor LIBOR market model experiments.
#[derive(Parser)]
#[command(name = "lmm-interp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Initial forward rate and LIBOR curves under each interpolation.
    Sweep(RunArgs),
    /// One simulated path of the short rate and instantaneous forwards.
    Dynamics(RunArgs),
    /// Broken-date caplet implied volatilities, Monte Carlo and approximate.
    Impvol(RunArgs),
    /// Runs the acceptance checks and prints one line per criterion.
    Check {
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Preset 1-7.
    #[arg(long, conflicts_with = "config")]
    figure: Option<u8>,
    /// key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// 1, 2, baseline or all.
    #[arg(long)]
    method: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

type Runner = fn(&ScenarioConfig) -> lmm_interp::error::Result<Vec<PathBuf>>;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn load(args: &RunArgs) -> Result<ScenarioConfig, Error> {
    let mut cfg = match (&args.config, args.figure) {
        (Some(path), _) => ScenarioConfig::load(path)?,
        (None, Some(id)) => ScenarioConfig::figure(id)?,
        (None, None) => ScenarioConfig::default(),
    };
    if let Some(p) = args.paths {
        cfg.n_paths = p;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(m) = &args.method {
        cfg.method = match m.as_str() {
            "1" => MethodChoice::Method1,
            "2" => MethodChoice::Method2,
            "baseline" => MethodChoice::Baseline,
            "all" => MethodChoice::All,
            _ => {
                return Err(Error::Config(format!(
                    "--method: expected 1, 2, baseline or all, got '{m}'"
                )))
            }
        };
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Error> {
    let (args, runner): (&RunArgs, Runner) = match &cli.command {
        Command::Sweep(a) => (a, run_term_structure_sweep),
        Command::Dynamics(a) => (a, run_dynamics_trace),
        Command::Impvol(a) => (a, run_impvol_experiment),
        Command::Check { paths, seed } => {
            let mut opts = AcceptanceOptions::default();
            if let Some(p) = paths {
                opts.paths = *p;
            }
            if let Some(s) = seed {
                opts.seed = *s;
            }
            let results = run_all(&opts);
            for r in &results {
                println!("{}", r.line());
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            return if failed == 0 {
                Ok(())
            } else {
                Err(Error::Numerical(format!(
                    "{failed} of {} criteria failed",
                    results.len()
                )))
            };
        }
    };
    let cfg = load(args)?;
    let mut written = runner(&cfg)?;
    written.push(write_config_echo(&cfg)?);
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lmm-interp: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
