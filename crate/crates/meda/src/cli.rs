//! Argument parsing and exit-status mapping.
//!
//! Values resolve in this order, first match wins: command-line flag, plan
//! document (`plan --plan`), experiment config (`--config`), built-in
//! nitrogen defaults. The output directory is `--out`, else `$MEDA_OUT_DIR`,
//! else `./meda-out`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use meda_core::estimator::Differencing;

use crate::commands::{self, EstimateArgs, Grid, PlanArgs, PlanFile};
use crate::config::ExperimentConfig;
use crate::error::{MedaError, Result};
use crate::formats;

pub const OUT_DIR_ENV: &str = "MEDA_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "meda-out";

#[derive(Debug, Parser)]
#[command(
    name = "meda",
    version,
    about = "Magneto-electric ring-cavity simulation, estimation and planning"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Experiment config (JSON). Built-in nitrogen defaults when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a gated run with bracketing calibrations.
    Simulate,
    /// Estimate the split from a trace and two calibrations.
    Estimate(EstimateCmd),
    /// Expected signal and integration time.
    Plan(PlanCmd),
    /// Print the coefficient table.
    Tables(TablesCmd),
    /// Write the on-axis field profile of the first rod.
    Profile,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DifferencingArg {
    OnOff,
    OffOnOff,
}

#[derive(Debug, Args)]
pub struct EstimateCmd {
    /// Raw or demodulated trace CSV. Defaults to demod.csv in the output directory.
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    /// Calibration before the run; defaults to the file next to the trace.
    #[arg(long, value_name = "PATH")]
    pub before: Option<PathBuf>,
    /// Calibration after the run; defaults to the file next to the trace.
    #[arg(long, value_name = "PATH")]
    pub after: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub differencing: Option<DifferencingArg>,
}

#[derive(Debug, Args)]
pub struct PlanCmd {
    /// Plan document (JSON).
    #[arg(long, value_name = "PATH")]
    pub plan: Option<PathBuf>,
    #[arg(long)]
    pub medium: Option<String>,
    #[arg(long)]
    pub snr: Option<f64>,
    /// Relative frequency sensitivity per sqrt(Hz).
    #[arg(long)]
    pub sensitivity: Option<f64>,
    /// Effective magnetic field, T.
    #[arg(long = "b")]
    pub b_eff: Option<f64>,
    /// Electric field, V/m rms.
    #[arg(long = "e")]
    pub e_rms: Option<f64>,
    /// B and E grids, e.g. `--sweep B=0:15:4 E=1e6:2e7:5`.
    #[arg(long, num_args = 2, value_names = ["B=a:b:n", "E=a:b:n"])]
    pub sweep: Option<Vec<String>>,
    /// Write plan.csv for the single operating point.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct TablesCmd {
    #[arg(long)]
    pub medium: Option<String>,
    #[arg(long)]
    pub json: bool,
}

fn parse_sweep(items: &[String]) -> Result<(Grid, Grid)> {
    let mut b = None;
    let mut e = None;
    for item in items {
        let (key, grid) = item.split_once('=').ok_or_else(|| {
            MedaError::Plan(format!(
                "`--sweep`: expected KEY=start:stop:count, got `{item}`"
            ))
        })?;
        let grid: Grid = grid
            .parse()
            .map_err(|r| MedaError::Plan(format!("`--sweep {key}`: {r}")))?;
        match key.trim().to_ascii_uppercase().as_str() {
            "B" => b = Some(grid),
            "E" => e = Some(grid),
            other => {
                return Err(MedaError::Plan(format!(
                    "`--sweep`: unknown axis `{other}`"
                )))
            }
        }
    }
    match (b, e) {
        (Some(b), Some(e)) => Ok((b, e)),
        _ => Err(MedaError::Plan(
            "`--sweep` needs both B= and E= grids".into(),
        )),
    }
}

fn load_config(global: &GlobalArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &global.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(global: &GlobalArgs) -> PathBuf {
    global
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(&cli.global)?;
    let dir = out_dir(&cli.global);
    match &cli.command {
        Command::Simulate => commands::simulate(&cfg, &dir, out).map(drop),
        Command::Estimate(cmd) => {
            let args = EstimateArgs {
                trace: cmd
                    .trace
                    .clone()
                    .unwrap_or_else(|| dir.join(commands::DEMOD_TRACE)),
                before: cmd.before.clone(),
                after: cmd.after.clone(),
                differencing: cmd.differencing.map(|d| match d {
                    DifferencingArg::OnOff => Differencing::OnOff,
                    DifferencingArg::OffOnOff => Differencing::OffOnOff,
                }),
            };
            commands::estimate(&cfg, &args, &dir, out).map(drop)
        }
        Command::Plan(cmd) => {
            let plan: Option<PlanFile> = match &cmd.plan {
                Some(p) => Some(read_plan(p)?),
                None => None,
            };
            let args = PlanArgs {
                plan,
                medium: cmd.medium.clone(),
                snr: cmd.snr,
                sensitivity: cmd.sensitivity,
                b_eff: cmd.b_eff,
                e_rms: cmd.e_rms,
                sweep: cmd.sweep.as_deref().map(parse_sweep).transpose()?,
                write_table: cmd.csv,
            };
            commands::plan(&cfg, &args, &dir, out).map(drop)
        }
        Command::Tables(cmd) => commands::tables(&cfg, cmd.medium.as_deref(), cmd.json, out),
        Command::Profile => commands::profile(&cfg, &dir, out).map(drop),
    }
}

fn read_plan(path: &Path) -> Result<PlanFile> {
    formats::read_json(path).map_err(|e| match e {
        MedaError::Schema { reason, .. } => MedaError::Plan(reason),
        other => other,
    })
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn run(args: Vec<OsString>, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
