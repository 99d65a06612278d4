//! Subcommand bodies. Each writes its human-readable report to `out` and its
//! files under the output directory.

use std::io::Write;
use std::path::{Path, PathBuf};

use meda_core::effects::{CoefficientRecord, Conditions};
use meda_core::estimator::{
    calibration_level, measure_with, CalibrationRun, Differencing, GateTiming,
};
use meda_core::experiment::Effect;
use meda_core::fields::magnetic_profile;
use meda_core::planner::{expected_signal, sweep, time_to_snr, ExperimentPlan, SweepRow};
use meda_core::signal::{synthesize_calibration, synthesize_run, LockIn, SignalTrace, Unit};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{MedaError, Result};
use crate::formats::{self, Manifest, ResultRecord};

pub const RAW_TRACE: &str = "raw.csv";
pub const DEMOD_TRACE: &str = "demod.csv";
pub const CAL_BEFORE: &str = "calibration_before.json";
pub const CAL_AFTER: &str = "calibration_after.json";
pub const MANIFEST: &str = "manifest.json";
pub const RESOLVED_CONFIG: &str = "config.json";
pub const RESULTS: &str = "results.json";
pub const LEDGER: &str = "results.csv";
pub const PLAN_TABLE: &str = "plan.csv";
pub const PROFILE: &str = "profile.csv";

fn say(out: &mut dyn Write, line: impl AsRef<str>) -> Result<()> {
    writeln!(out, "{}", line.as_ref()).map_err(|e| MedaError::io("<stdout>", e))
}

/// Synthesizes a gated run plus bracketing calibrations and writes traces,
/// calibrations, resolved config and manifest into `dir`.
pub fn simulate(cfg: &ExperimentConfig, dir: &Path, out: &mut dyn Write) -> Result<Manifest> {
    let exp = cfg.experiment()?;
    let digest = cfg.digest();
    let seed = cfg.seed;
    let settle = cfg.settle();

    let mut raw = synthesize_run(&exp, seed)?;
    raw.meta.digest = Some(digest.clone());
    let demod = exp.lockin.demodulate(&raw)?;

    let cal = cfg.acquisition.calibration_hz_rms;
    let len = cfg.acquisition.calibration_duration;
    let calibrate = |t0: f64, stream: u64| -> Result<CalibrationRun> {
        let tr = synthesize_calibration(&exp, cal, t0, len, seed, stream)?;
        let level = calibration_level(&exp.lockin.demodulate(&tr)?, settle)?;
        Ok(CalibrationRun {
            injected: cal,
            measured: level,
            timestamp: t0 + 0.5 * len,
        })
    };
    let before = calibrate(-len, 1)?;
    let after = calibrate(exp.duration(), 2)?;

    formats::ensure_dir(dir)?;
    formats::write_trace(&dir.join(RAW_TRACE), &raw)?;
    formats::write_trace(&dir.join(DEMOD_TRACE), &demod)?;
    formats::write_calibration(&dir.join(CAL_BEFORE), &before)?;
    formats::write_calibration(&dir.join(CAL_AFTER), &after)?;
    formats::write_json(&dir.join(RESOLVED_CONFIG), cfg)?;

    let expected = exp.expected_split_rms()?;
    let manifest = Manifest {
        tool: "meda".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_digest: digest,
        seed,
        medium: exp.medium.medium.name().into(),
        rate_hz: exp.rate,
        duration_s: exp.duration(),
        periods: exp.periods,
        expected_split_hz: expected,
        files: [
            RAW_TRACE,
            DEMOD_TRACE,
            CAL_BEFORE,
            CAL_AFTER,
            RESOLVED_CONFIG,
        ]
        .map(String::from)
        .to_vec(),
        warnings: exp.assembly.warnings(),
    };
    formats::write_json(&dir.join(MANIFEST), &manifest)?;

    for w in &manifest.warnings {
        say(out, format!("warning: {w}"))?;
    }
    say(
        out,
        format!(
            "simulated {} periods of {} s at {} Hz ({} samples), seed {}",
            exp.periods,
            exp.assembly.gate_period,
            exp.rate,
            raw.len(),
            seed
        ),
    )?;
    say(out, format!("expected split {expected:.4e} Hz rms"))?;
    say(out, format!("wrote {}", dir.display()))?;
    Ok(manifest)
}

#[derive(Debug, Clone)]
pub struct EstimateArgs {
    pub trace: PathBuf,
    /// Defaults to the calibration file next to the trace.
    pub before: Option<PathBuf>,
    pub after: Option<PathBuf>,
    pub differencing: Option<Differencing>,
}

fn load_calibration(path: &Path, which: &str) -> Result<CalibrationRun> {
    if !path.exists() {
        return Err(MedaError::Calibration(format!(
            "missing {which} calibration {}",
            path.display()
        )));
    }
    formats::read_calibration(path)
}

/// Demodulates if needed, estimates the on/off difference and converts it to
/// Hz with the interpolated calibration.
pub fn estimate(
    cfg: &ExperimentConfig,
    args: &EstimateArgs,
    dir: &Path,
    out: &mut dyn Write,
) -> Result<ResultRecord> {
    let trace = formats::read_trace(&args.trace)?;
    if trace.unit != Unit::Volts {
        return Err(MedaError::schema(
            &args.trace,
            format!("expected a volts trace, found {}", trace.unit.as_str()),
        ));
    }
    let demod = demodulated(cfg, trace)?;
    let gate =
        GateTiming::from_meta(&demod).map_err(|e| MedaError::schema(&args.trace, e.to_string()))?;
    let tau = demod.meta.lockin_tau.unwrap_or(cfg.lockin.tau);
    let settle = cfg
        .estimator
        .settle
        .unwrap_or(meda_core::estimator::DEFAULT_SETTLE_TAUS * tau);

    let sibling = |name: &str| args.trace.with_file_name(name);
    let before_path = args.before.clone().unwrap_or_else(|| sibling(CAL_BEFORE));
    let after_path = args.after.clone().unwrap_or_else(|| sibling(CAL_AFTER));
    let before = load_calibration(&before_path, "before")?;
    let after = load_calibration(&after_path, "after")?;
    let (t_start, t_end) = (demod.t0, demod.t0 + demod.duration());
    if !(before.timestamp <= t_start && after.timestamp >= t_end) {
        return Err(MedaError::Calibration(format!(
            "calibrations at {} s and {} s do not bracket the run [{t_start}, {t_end}] s",
            before.timestamp, after.timestamp
        )));
    }

    let differencing = args.differencing.unwrap_or(cfg.estimator.differencing);
    let estimate = measure_with(&demod, gate, settle, &before, &after, differencing)?;
    let record = ResultRecord {
        estimate,
        trace: args.trace.display().to_string(),
        component: "in-phase".into(),
        reference_phase_rad: cfg.lockin.phase,
        digest: demod.meta.digest.clone(),
        seed: demod.meta.seed,
    };
    formats::ensure_dir(dir)?;
    formats::write_json(&dir.join(RESULTS), &record)?;
    formats::append_ledger(&dir.join(LEDGER), &record)?;

    let sigma = if estimate.sigma_available() {
        format!("{:.4e}", estimate.sigma)
    } else {
        "n/a (single period)".into()
    };
    say(
        out,
        format!(
            "value = {:.4e} Hz +/- {sigma} Hz ({} periods)",
            estimate.value, estimate.n_periods
        ),
    )?;
    Ok(record)
}

fn demodulated(cfg: &ExperimentConfig, trace: SignalTrace) -> Result<SignalTrace> {
    if trace.meta.lockin_tau.is_some() {
        return Ok(trace);
    }
    let lockin = LockIn {
        f_mod: trace.meta.f_mod.unwrap_or_else(|| cfg.f_mod()),
        tau: cfg.lockin.tau,
        phase: cfg.lockin.phase,
        order: cfg.lockin.order,
    };
    Ok(lockin.demodulate(&trace)?)
}

/// Plan document; every field overrides the value derived from the
/// experiment config.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanFile {
    pub medium: Option<String>,
    pub conditions: Option<Conditions>,
    pub effect: Option<Effect>,
    pub meda_ratio: Option<f64>,
    pub b_eff: Option<f64>,
    pub e_rms: Option<f64>,
    pub l_fields: Option<f64>,
    pub perimeter: Option<f64>,
    pub laser_frequency: Option<f64>,
    pub sensitivity: Option<f64>,
    pub target_snr: Option<f64>,
}

/// Inclusive linear grid `start:stop:count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|k| self.start + k as f64 * step)
            .collect()
    }
}

impl std::str::FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts[..] else {
            return Err(format!("expected start:stop:count, got `{s}`"));
        };
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{v}` is not a number"))
        };
        let count = n
            .trim()
            .parse::<usize>()
            .map_err(|_| format!("`{n}` is not a count"))?;
        if count == 0 {
            return Err("grid count must be >= 1".into());
        }
        Ok(Grid {
            start: num(a)?,
            stop: num(b)?,
            count,
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct PlanArgs {
    pub plan: Option<PlanFile>,
    pub medium: Option<String>,
    pub snr: Option<f64>,
    pub sensitivity: Option<f64>,
    pub b_eff: Option<f64>,
    pub e_rms: Option<f64>,
    pub sweep: Option<(Grid, Grid)>,
    /// Write `plan.csv` even without a sweep.
    pub write_table: bool,
}

fn resolve_record(cfg: &ExperimentConfig, name: &str) -> Result<CoefficientRecord> {
    Ok(cfg
        .table()?
        .lookup(name)
        .map_err(|e| MedaError::Plan(format!("`medium`: {e}")))?
        .clone())
}

/// Precedence: flags, then the plan document, then the experiment config.
pub fn resolve_plan(cfg: &ExperimentConfig, args: &PlanArgs) -> Result<ExperimentPlan> {
    let mut plan = cfg.plan()?;
    let file = args.plan.clone().unwrap_or_default();
    if let Some(m) = args.medium.as_ref().or(file.medium.as_ref()) {
        plan.medium = resolve_record(cfg, m)?;
    }
    let set = |slot: &mut f64, flag: Option<f64>, doc: Option<f64>| {
        if let Some(v) = flag.or(doc) {
            *slot = v;
        }
    };
    set(&mut plan.b_eff, args.b_eff, file.b_eff);
    set(&mut plan.e_rms, args.e_rms, file.e_rms);
    set(&mut plan.sensitivity, args.sensitivity, file.sensitivity);
    set(&mut plan.target_snr, args.snr, file.target_snr);
    set(&mut plan.l_fields, None, file.l_fields);
    set(&mut plan.perimeter, None, file.perimeter);
    set(&mut plan.laser_frequency, None, file.laser_frequency);
    if let Some(c) = file.conditions {
        plan.conditions = c;
    }
    if let Some(e) = file.effect {
        plan.effect = e;
    }
    if file.meda_ratio.is_some() {
        plan.meda_ratio = file.meda_ratio;
    }
    plan.validate()
        .map_err(|e| MedaError::Plan(e.to_string()))?;
    Ok(plan)
}

fn hours(t: f64) -> String {
    format!("{:.4e} s ({:.2} h)", t, t / 3600.0)
}

/// Prints the expected signal and time-to-SNR table; writes the sweep CSV
/// when a grid is given.
pub fn plan(
    cfg: &ExperimentConfig,
    args: &PlanArgs,
    dir: &Path,
    out: &mut dyn Write,
) -> Result<Vec<SweepRow>> {
    let plan = resolve_plan(cfg, args)?;
    let plan_err = |e: meda_core::Error| MedaError::Plan(e.to_string());
    let dnu = expected_signal(&plan).map_err(plan_err)?;
    let dn = plan.delta_n().map_err(plan_err)?;
    say(
        out,
        format!(
            "medium {}  effect {}  B = {} T  E = {:.4e} V/m rms  fill = {}",
            plan.medium.medium.name(),
            match plan.effect {
                Effect::Meda => "meda",
                Effect::Melb => "melb",
            },
            plan.b_eff,
            plan.e_rms,
            plan.fill()
        ),
    )?;
    say(out, format!("dn      = {dn:.4e}"))?;
    say(out, format!("dnu     = {dnu:.4e} Hz rms"))?;
    say(out, format!("dnu/nu  = {:.4e}", dnu / plan.laser_frequency))?;
    say(
        out,
        format!("sensitivity {:.4e} /sqrt(Hz)", plan.sensitivity),
    )?;
    let mut snrs = vec![1.0, 3.0, 5.0, 10.0];
    if !snrs.contains(&plan.target_snr) {
        snrs.push(plan.target_snr);
        snrs.sort_by(f64::total_cmp);
    }
    say(out, "SNR   time")?;
    for snr in snrs {
        let p = ExperimentPlan {
            target_snr: snr,
            ..plan.clone()
        };
        let line = match time_to_snr(&p) {
            Ok(t) => hours(t),
            Err(meda_core::Error::ZeroSignal) => "never (zero signal)".into(),
            Err(e) => return Err(plan_err(e)),
        };
        say(out, format!("{snr:<5} {line}"))?;
    }

    let rows = match args.sweep {
        Some((b, e)) => sweep(&plan, &b.values(), &e.values()).map_err(plan_err)?,
        None => sweep(&plan, &[plan.b_eff], &[plan.e_rms]).map_err(plan_err)?,
    };
    if args.sweep.is_some() || args.write_table {
        formats::ensure_dir(dir)?;
        let path = dir.join(PLAN_TABLE);
        formats::write_plan(&path, &rows)?;
        say(
            out,
            format!("wrote {} ({} rows)", path.display(), rows.len()),
        )?;
    }
    Ok(rows)
}

/// Prints (or emits as JSON) the coefficient table, optionally one medium.
pub fn tables(
    cfg: &ExperimentConfig,
    medium: Option<&str>,
    json: bool,
    out: &mut dyn Write,
) -> Result<()> {
    let table = cfg.table()?;
    let records: Vec<CoefficientRecord> = match medium {
        Some(m) => vec![table
            .lookup(m)
            .map_err(|e| MedaError::Config(format!("`medium`: {e}")))?
            .clone()],
        None => table.records().to_vec(),
    };
    if json {
        let text = serde_json::to_string_pretty(&records).expect("records serialize");
        return say(out, text);
    }
    say(
        out,
        "coefficients: index change per (1 T x 1 V/m), units T^-1 V^-1 m",
    )?;
    say(
        out,
        "gas rows hold at their reference pressure, temperature and wavelength",
    )?;
    say(
        out,
        format!(
            "{:<8} {:>10} {:>10} {:>10} {:>8} {:>12}",
            "medium", "eta_MELB", "eta_MEDA", "p_ref_Pa", "T_ref_K", "lambda_ref_m"
        ),
    )?;
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:e}"));
    for r in &records {
        say(
            out,
            format!(
                "{:<8} {:>10} {:>10} {:>10} {:>8} {:>12}",
                r.medium.name(),
                format!("{:e}", r.eta_melb),
                opt(r.eta_meda),
                opt(r.ref_pressure),
                r.ref_temperature.map_or("-".to_string(), |t| t.to_string()),
                opt(r.ref_wavelength)
            ),
        )?;
    }
    Ok(())
}

/// Writes the on-axis field of the first rod, sampled every 0.5 mm out to
/// 40 mm beyond each end.
pub fn profile(cfg: &ExperimentConfig, dir: &Path, out: &mut dyn Write) -> Result<Vec<(f64, f64)>> {
    cfg.rods
        .validate()
        .map_err(|e| MedaError::Config(format!("`rods`: {e}")))?;
    let rod = cfg.rods.rods[0];
    let step = 0.5e-3;
    let half = 0.5 * rod.length + 0.040;
    let n = (2.0 * half / step).round() as usize;
    let points: Vec<(f64, f64)> = (0..=n)
        .map(|k| {
            let z = -half + k as f64 * step;
            (z, magnetic_profile(z, &rod))
        })
        .collect();
    formats::ensure_dir(dir)?;
    let path = dir.join(PROFILE);
    formats::write_profile(&path, &points)?;
    let b_eff = rod.effective_field(Default::default())?;
    say(out, format!("B_eff over the rod length = {b_eff:.5} T"))?;
    say(
        out,
        format!("wrote {} ({} points)", path.display(), points.len()),
    )?;
    Ok(points)
}
