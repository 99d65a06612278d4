//! On-disk formats: trace CSV, calibration and result JSON, run manifest,
//! results ledger, field profile and plan tables.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use meda_core::estimator::{CalibrationRun, MeasurementEstimate};
use meda_core::planner::SweepRow;
use meda_core::signal::{SignalTrace, TraceMeta, Unit};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{MedaError, Result};

/// Number formatting for every CSV: 13 significant digits, scientific.
pub fn sci(x: f64) -> String {
    format!("{x:.12e}")
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| MedaError::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> MedaError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => MedaError::io(path, io),
            _ => unreachable!(),
        }
    } else {
        MedaError::schema(path, e.to_string())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| MedaError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| MedaError::schema(path, e.to_string()))
}

/// Header keys, in write order.
const TRACE_KEYS: [&str; 9] = [
    "rate_hz",
    "unit",
    "t0_s",
    "seed",
    "digest",
    "gate_period_s",
    "gate_duty",
    "f_mod_hz",
    "lockin_tau_s",
];

/// Writes `# key=value` header rows followed by `t_s,value` columns.
pub fn write_trace(path: &Path, trace: &SignalTrace) -> Result<()> {
    let file = File::create(path).map_err(|e| MedaError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let m = &trace.meta;
    let opt = |v: Option<f64>| v.map(sci);
    let values = [
        Some(sci(trace.rate)),
        Some(trace.unit.as_str().to_string()),
        Some(sci(trace.t0)),
        m.seed.map(|s| s.to_string()),
        m.digest.clone(),
        opt(m.gate_period),
        opt(m.gate_duty),
        opt(m.f_mod),
        opt(m.lockin_tau),
    ];
    let mut header = String::new();
    for (key, value) in TRACE_KEYS.iter().zip(values) {
        if let Some(v) = value {
            header.push_str(&format!("# {key}={v}\n"));
        }
    }
    out.write_all(header.as_bytes())
        .map_err(|e| MedaError::io(path, e))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_s", "value"])
        .map_err(|e| csv_err(path, e))?;
    for (k, v) in trace.samples.iter().enumerate() {
        w.write_record([sci(trace.time(k)), sci(*v)])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| MedaError::io(path, e))
}

pub fn read_trace(path: &Path) -> Result<SignalTrace> {
    let text = fs::read_to_string(path).map_err(|e| MedaError::io(path, e))?;
    let bad = |reason: String| MedaError::schema(path, reason);
    let mut meta = TraceMeta::default();
    let (mut rate, mut unit, mut t0) = (None, None, 0.0);
    let mut body_start = 0;
    for line in text.lines() {
        let Some(rest) = line.strip_prefix('#') else {
            break;
        };
        body_start += line.len() + 1;
        let Some((key, value)) = rest.trim().split_once('=') else {
            continue;
        };
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| bad(format!("header `{key}` is not a number: {v}")))
        };
        match key.trim() {
            "rate_hz" => rate = Some(num(value)?),
            "unit" => {
                unit =
                    Some(Unit::parse(value).ok_or_else(|| bad(format!("unknown unit `{value}`")))?)
            }
            "t0_s" => t0 = num(value)?,
            "seed" => {
                meta.seed = Some(
                    value
                        .parse()
                        .map_err(|_| bad(format!("header `seed` is not an integer: {value}")))?,
                )
            }
            "digest" => meta.digest = Some(value.to_string()),
            "gate_period_s" => meta.gate_period = Some(num(value)?),
            "gate_duty" => meta.gate_duty = Some(num(value)?),
            "f_mod_hz" => meta.f_mod = Some(num(value)?),
            "lockin_tau_s" => meta.lockin_tau = Some(num(value)?),
            _ => {}
        }
    }
    let rate = rate.ok_or_else(|| bad("missing `rate_hz` header".into()))?;
    let unit = unit.ok_or_else(|| bad("missing `unit` header".into()))?;
    let body = text.get(body_start.min(text.len())..).unwrap_or("");
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let headers = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t_s", "value"] {
        return Err(bad(format!(
            "expected columns t_s,value, found {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut samples = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let v = rec[1]
            .parse::<f64>()
            .map_err(|_| bad(format!("row {}: value is not a number", row + 1)))?;
        samples.push(v);
    }
    let trace = SignalTrace::new(samples, rate, t0, unit).map_err(|e| bad(e.to_string()))?;
    Ok(trace.with_meta(meta))
}

/// Record of one `simulate` invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_digest: String,
    pub seed: u64,
    pub medium: String,
    pub rate_hz: f64,
    pub duration_s: f64,
    pub periods: usize,
    /// Noiseless counterpropagating split, Hz rms.
    pub expected_split_hz: f64,
    pub files: Vec<String>,
    pub warnings: Vec<String>,
}

/// Results JSON: the estimate plus where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    #[serde(flatten)]
    pub estimate: MeasurementEstimate,
    pub trace: String,
    /// Lock-in output used for the differences; always `in-phase`.
    pub component: String,
    pub reference_phase_rad: f64,
    pub digest: Option<String>,
    pub seed: Option<u64>,
}

const LEDGER_HEADER: [&str; 10] = [
    "digest",
    "seed",
    "value",
    "sigma",
    "unit",
    "n_periods",
    "differencing",
    "cal_before",
    "cal_after",
    "cal_interpolated",
];

/// Appends one row, writing the header first when the ledger is new.
pub fn append_ledger(path: &Path, record: &ResultRecord) -> Result<()> {
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| MedaError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    if fresh {
        w.write_record(LEDGER_HEADER)
            .map_err(|e| csv_err(path, e))?;
    }
    let e = &record.estimate;
    let cal = |f: fn(&meda_core::estimator::CalibrationSummary) -> f64| {
        e.calibration.as_ref().map(f).map(sci).unwrap_or_default()
    };
    let differencing = serde_json::to_value(e.differencing).expect("serializes");
    w.write_record([
        record.digest.clone().unwrap_or_default(),
        record.seed.map(|s| s.to_string()).unwrap_or_default(),
        sci(e.value),
        sci(e.sigma),
        e.unit.as_str().to_string(),
        e.n_periods.to_string(),
        differencing.as_str().unwrap_or_default().to_string(),
        cal(|c| c.before),
        cal(|c| c.after),
        cal(|c| c.interpolated),
    ])
    .map_err(|e| csv_err(path, e))?;
    w.flush().map_err(|e| MedaError::io(path, e))
}

pub fn write_calibration(path: &Path, run: &CalibrationRun) -> Result<()> {
    write_json(path, run)
}

pub fn read_calibration(path: &Path) -> Result<CalibrationRun> {
    read_json(path)
}

/// `z_m,B_T` pairs.
pub fn write_profile(path: &Path, points: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["z_m", "B_T"])
        .map_err(|e| csv_err(path, e))?;
    for (z, b) in points {
        w.write_record([sci(*z), sci(*b)])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| MedaError::io(path, e))
}

pub fn write_plan(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["medium", "B_T", "E_Vpm", "dn", "dnu_Hz", "T_snr1_s"])
        .map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record([
            r.medium.clone(),
            sci(r.b),
            sci(r.e),
            sci(r.dn),
            sci(r.dnu),
            if r.t_snr1.is_finite() {
                sci(r.t_snr1)
            } else {
                "inf".into()
            },
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| MedaError::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| MedaError::io(dir, e))?;
    Ok(dir.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;
    use meda_core::estimator::{CalibrationSummary, Differencing};

    #[test]
    fn trace_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let meta = TraceMeta {
            seed: Some(7),
            digest: Some("abc".into()),
            gate_period: Some(20.0),
            gate_duty: Some(0.5),
            f_mod: Some(300.0),
            lockin_tau: None,
        };
        let tr = SignalTrace::new(vec![1.5e-3, -2.0e-17, 3.0], 10_000.0, -2.5, Unit::Volts)
            .unwrap()
            .with_meta(meta);
        write_trace(&path, &tr).unwrap();
        let back = read_trace(&path).unwrap();
        assert_eq!(back, tr);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# rate_hz=1.000000000000e4\n# unit=volts\n"));
        assert!(text.contains("\nt_s,value\n-2.500000000000e0,1.500000000000e-3\n"));
    }

    #[test]
    fn trace_schema_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "# unit=volts\nt_s,value\n0,1\n").unwrap();
        assert!(matches!(read_trace(&path), Err(MedaError::Schema { .. })));
        fs::write(&path, "# rate_hz=10\n# unit=volts\ntime,v\n0,1\n").unwrap();
        assert!(matches!(read_trace(&path), Err(MedaError::Schema { .. })));
        fs::write(&path, "# rate_hz=10\n# unit=volts\nt_s,value\n0,x\n").unwrap();
        assert!(matches!(read_trace(&path), Err(MedaError::Schema { .. })));
        assert!(matches!(
            read_trace(&dir.path().join("missing.csv")),
            Err(MedaError::Io { .. })
        ));
    }

    #[test]
    fn json_keeps_coefficients_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("table.json");
        let table = meda_core::effects::CoefficientTable::builtin();
        write_json(&path, &table).unwrap();
        let back: meda_core::effects::CoefficientTable = read_json(&path).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn ledger_appends_with_single_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.csv");
        let rec = ResultRecord {
            estimate: MeasurementEstimate {
                value: 3.8e-3,
                sigma: 1e-4,
                n_periods: 3,
                unit: Unit::Hertz,
                differencing: Differencing::OnOff,
                calibration: Some(CalibrationSummary {
                    before: 1e-3,
                    after: 1e-3,
                    interpolated: 1e-3,
                    before_time: -10.0,
                    after_time: 70.0,
                }),
            },
            trace: "demod.csv".into(),
            component: "in-phase".into(),
            reference_phase_rad: 0.0,
            digest: Some("d".into()),
            seed: Some(1),
        };
        append_ledger(&path, &rec).unwrap();
        append_ledger(&path, &rec).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], LEDGER_HEADER.join(","));
        assert!(lines[1].contains(",hertz,3,on-off,"));
        let json = serde_json::to_value(&rec).unwrap();
        assert_eq!(json["calibration"]["interpolated"], 1e-3);
        assert_eq!(json["n_periods"], 3);
    }
}
