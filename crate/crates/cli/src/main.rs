use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

mod figures;
mod table;
mod verify;

use figures::SweepConfig;

/// Invalid user input; exits with status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Parser)]
#[command(
    name = "battery",
    version,
    about = "Charging sweeps for bosonic quantum batteries, written as CSV"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// Comma-separated initial temperatures in units of omega (0 = ground state)
    #[arg(long, value_delimiter = ',')]
    temps: Option<Vec<f64>>,
    /// Largest energy input in units of omega
    #[arg(long)]
    emax: Option<f64>,
    /// Energy grid spacing in units of omega
    #[arg(long)]
    step: Option<f64>,
    /// Fock truncation; defaults depend on the command
    #[arg(long)]
    dim: Option<usize>,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomised checks
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Describe the output columns and exit
    #[arg(long)]
    explain: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Ground-state variance bounds of a d-level ladder
    Fig1 {
        #[command(flatten)]
        common: Common,
        /// Number of levels
        #[arg(long, default_value_t = 6)]
        d: usize,
    },
    /// Optimal-precision charging of a thermal mode
    Fig2 {
        #[command(flatten)]
        common: Common,
    },
    /// Rotation sequence of one optimal-precision charge
    Fig3 {
        #[command(flatten)]
        common: Common,
        /// Energy input in units of omega
        #[arg(long, default_value_t = 1.8)]
        delta_e: f64,
    },
    /// Energy split between two equal-frequency modes
    Fig4 {
        #[command(flatten)]
        common: Common,
        /// Indivisible energy unit of the split search
        #[arg(long, default_value_t = 0.05)]
        quantum: f64,
    },
    /// Gaussian and unrestricted precision bounds
    Fig5 {
        #[command(flatten)]
        common: Common,
    },
    /// Gaussian and unrestricted work-fluctuation bounds
    Fig6 {
        #[command(flatten)]
        common: Common,
    },
    /// Cross-checks of closed forms against independent evaluations
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        /// Random cases for the sampled suites
        #[arg(long)]
        cases: Option<usize>,
        /// Tolerance override for the selected suite
        #[arg(long)]
        tol: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    Oracle,
    Protocols,
    Bounds,
    All,
}

fn temps_range(lo: u32, hi: u32, div: f64) -> Vec<f64> {
    (lo..=hi).map(|i| i as f64 / div).collect()
}

fn sweep_config(c: &Common, temps: Vec<f64>, emax: f64, step: f64) -> SweepConfig {
    SweepConfig {
        temps: c.temps.clone().unwrap_or(temps),
        emax: c.emax.unwrap_or(emax),
        step: c.step.unwrap_or(step),
        dim: c.dim,
    }
}

fn emit(common: &Common, text: &str) -> Result<()> {
    match &common.out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let (common, name) = match &cli.command {
        Command::Fig1 { common, .. } => (common.clone(), "fig1"),
        Command::Fig2 { common } => (common.clone(), "fig2"),
        Command::Fig3 { common, .. } => (common.clone(), "fig3"),
        Command::Fig4 { common, .. } => (common.clone(), "fig4"),
        Command::Fig5 { common } => (common.clone(), "fig5"),
        Command::Fig6 { common } => (common.clone(), "fig6"),
        Command::Verify { common, .. } => (common.clone(), "verify"),
    };
    if common.explain {
        let text = match name {
            "verify" => {
                "\
oracle     gaussian_charge_stats vs oracle_stats on random Gaussian unitaries, max relative error
protocols  min_fluctuation_charge ledger dW^2 vs min_fluctuation_value, max absolute error
bounds     random feasible Gaussian strategies vs solver bounds, max relative violation
"
            }
            fig => figures::explain(fig),
        };
        print!("{text}");
        return Ok(true);
    }

    let table = match cli.command {
        Command::Fig1 { d, .. } => figures::fig1(&sweep_config(&common, vec![0.0], 5.0, 0.05), d)?,
        Command::Fig2 { .. } => {
            figures::fig2(&sweep_config(&common, temps_range(1, 10, 10.0), 4.0, 0.05))?
        }
        Command::Fig3 { delta_e, .. } => {
            let temps = common.temps.clone().unwrap_or(vec![3.0]);
            let [temp] = temps[..] else {
                return Err(ConfigError("fig3 takes exactly one temperature".into()).into());
            };
            figures::fig3(temp, delta_e, common.dim.unwrap_or(120))?
        }
        Command::Fig4 { quantum, .. } => figures::fig4(
            &sweep_config(&common, vec![0.1, 0.7, 1.0], 4.0, 0.05),
            quantum,
        )?,
        Command::Fig5 { .. } => {
            figures::fig5(&sweep_config(&common, temps_range(0, 10, 1.0), 10.0, 0.1))?
        }
        Command::Fig6 { .. } => {
            figures::fig6(&sweep_config(&common, temps_range(0, 10, 1.0), 10.0, 0.1))?
        }
        Command::Verify {
            suite, cases, tol, ..
        } => {
            if let Some(t) = tol {
                if !(t.is_finite() && t > 0.0) {
                    return Err(ConfigError(format!("--tol must be > 0, got {t}")).into());
                }
            }
            let mut out = Vec::new();
            if matches!(suite, Suite::Oracle | Suite::All) {
                let dim = common.dim.unwrap_or(120);
                out.push(verify::oracle(
                    common.seed,
                    cases.unwrap_or(200),
                    dim,
                    tol.unwrap_or(1e-6),
                )?);
            }
            if matches!(suite, Suite::Protocols | Suite::All) {
                out.push(verify::protocols(
                    common.dim.unwrap_or(256),
                    tol.unwrap_or(1e-6),
                )?);
            }
            if matches!(suite, Suite::Bounds | Suite::All) {
                out.push(verify::bounds(
                    common.seed,
                    cases.unwrap_or(1000),
                    tol.unwrap_or(1e-9),
                )?);
            }
            let text: String = out.iter().map(|s| format!("{}\n", s.line)).collect();
            emit(&common, &text)?;
            return Ok(out.iter().all(|s| s.passed));
        }
    };
    emit(&common, &table.to_csv())?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
