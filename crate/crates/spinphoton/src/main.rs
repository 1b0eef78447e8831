//! Command-line front end: run built-in scenarios, sweep parameters,
//! validate device configs, and print CPB spectra.
//!
//! Exit codes: 0 success, 1 validation/usage error, 2 numerical failure,
//! 3 I/O error.

use clap::{Args, Parser, Subcommand};
use spinphoton::device::{cpb_spectrum, validate_device};
use spinphoton::dynamics::Integrator;
use spinphoton::hilbert::Picture;
use spinphoton::scenarios::{registry, run_scenario, run_sweep, RunOptions};
use spinphoton::units::to_ghz;
use spinphoton::{config, Error};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "spinphoton", version, about = "Pulse-level simulator for hybrid spin-photon qubits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SimArgs {
    /// Override a config value, e.g. `--override spins.A.gap_ghz=20.0`.
    #[arg(long = "override", value_name = "PATH=VALUE")]
    overrides: Vec<String>,
    /// Output directory (default: $SPINPHOTON_OUT or ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trajectory sampling grid in ns.
    #[arg(long, default_value_t = 0.05)]
    grid: f64,
    /// Local error tolerance of the adaptive integrator.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Frame of the exported trajectory: schrodinger or interaction.
    #[arg(long, default_value = "schrodinger")]
    picture: String,
    /// Integrator: piecewise-exact or adaptive-rk.
    #[arg(long, default_value = "piecewise-exact")]
    integrator: String,
}

#[derive(Subcommand)]
enum Command {
    /// Run one built-in scenario and export trajectory + summary.
    Run {
        /// Scenario name (see `list`).
        scenario: String,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Run a scenario once per value of one parameter.
    Sweep {
        scenario: String,
        /// Config key path to vary, e.g. `hops.0.kappa_mhz`.
        #[arg(long)]
        param: String,
        /// Comma-separated list of values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Validate a device config file and print the report.
    Validate {
        /// Path to a device config in TOML format.
        config: PathBuf,
    },
    /// Diagonalize the Cooper-pair box charge Hamiltonian.
    CpbSpectrum {
        /// Charging energy E_C in GHz.
        #[arg(long)]
        ec: f64,
        /// Josephson energy E_J in GHz.
        #[arg(long)]
        ej: f64,
        /// Gate charge offset in Cooper pairs.
        #[arg(long, default_value_t = 0.5)]
        ng: f64,
        /// Charge basis truncation (|n| <= n_max).
        #[arg(long, default_value_t = 20)]
        n_max: u32,
    },
    /// List the built-in scenarios.
    List,
}

fn sim_options(sim: &SimArgs) -> Result<RunOptions, Error> {
    let out_dir = sim
        .out
        .clone()
        .or_else(|| std::env::var_os("SPINPHOTON_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok(RunOptions {
        out_dir,
        grid: sim.grid,
        tolerance: sim.tol,
        picture: sim.picture.parse::<Picture>()?,
        integrator: sim.integrator.parse::<Integrator>()?,
    })
}

fn parse_overrides(raw: &[String]) -> Result<Vec<(String, String)>, Error> {
    raw.iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("override `{s}` is not of the form PATH=VALUE"))
                })
        })
        .collect()
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { scenario, sim } => {
            let opts = sim_options(&sim)?;
            let overrides = parse_overrides(&sim.overrides)?;
            let summary = run_scenario(&scenario, &overrides, &opts)?;
            println!(
                "{scenario}: lambda = {:.6e}, duration = {:.3} ns, norm deficit = {:.3e}",
                summary.lambda, summary.gate_duration_ns, summary.norm_deficit
            );
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "wrote {} and {}",
                opts.out_dir.join(format!("{scenario}_trajectory.csv")).display(),
                opts.out_dir.join(format!("{scenario}_summary.json")).display()
            );
            Ok(())
        }
        Command::Sweep { scenario, param, values, sim } => {
            let opts = sim_options(&sim)?;
            let overrides = parse_overrides(&sim.overrides)?;
            let rows = run_sweep(&scenario, &param, &values, &overrides, &opts)?;
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            println!(
                "{scenario}: swept {} over {} values ({} failed), wrote {}",
                param,
                rows.len(),
                failed,
                opts.out_dir.join(format!("sweep_{scenario}.csv")).display()
            );
            Ok(())
        }
        Command::Validate { config: path } => {
            let text = std::fs::read_to_string(&path)?;
            let dev = config::load_device(&text)?;
            let report = validate_device(&dev);
            print!("{report}");
            if report.is_ok() {
                println!(
                    "ok: {} modes, {} spin ensembles, CPB: {}, {} hops",
                    dev.modes.len(),
                    dev.spins.len(),
                    if dev.cpb.is_some() { "yes" } else { "no" },
                    dev.hops.len()
                );
                Ok(())
            } else {
                report.into_result()
            }
        }
        Command::CpbSpectrum { ec, ej, ng, n_max } => {
            let levels = cpb_spectrum(
                spinphoton::units::ghz(ec),
                spinphoton::units::ghz(ej),
                ng,
                n_max,
            )?;
            println!("gap01_ghz = {:.12}", to_ghz(levels.gap01));
            println!("gap12_ghz = {:.12}", to_ghz(levels.gap12));
            println!("charge01 = {:.12}", levels.charge_elem01);
            println!("charge12 = {:.12}", levels.charge_elem12);
            Ok(())
        }
        Command::List => {
            for sc in registry() {
                println!("{:8} {}", sc.name, sc.description);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => ExitCode::from(3),
                Error::NonConvergence(..)
                | Error::Tolerance { .. }
                | Error::DimensionLimit { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
