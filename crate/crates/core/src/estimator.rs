//! On/off measurement procedure.
//!
//! The demodulated trace is cut into gate periods. In each period the mean
//! with the field on is compared to the mean with the field off, skipping the
//! lock-in settling time after every switch. The differences are averaged
//! over all periods and converted to frequency with a calibration factor
//! interpolated between calibrations taken before and after the run.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::signal::{SignalTrace, Unit};
use crate::spectral::{segment_length, welch_band_psd};

/// Settling time in lock-in time constants (99.3 % for one pole).
pub const DEFAULT_SETTLE_TAUS: f64 = 5.0;

/// Tolerance on sample-time comparisons, in samples.
const INDEX_EPS: f64 = 1e-6;

/// Gate timing: periods start at multiples of `period` from `t = 0`, field on
/// for the first `duty * period`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateTiming {
    pub period: f64,
    pub duty: f64,
}

impl GateTiming {
    pub fn new(period: f64, duty: f64) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(invalid("gate_period", "must be > 0 s"));
        }
        if !(duty > 0.0 && duty < 1.0) {
            return Err(invalid("gate_duty", "must lie in (0, 1)"));
        }
        Ok(Self { period, duty })
    }

    /// Gate timing recorded in a trace's metadata (duty defaults to 1/2).
    pub fn from_meta(trace: &SignalTrace) -> Result<Self> {
        let period = trace
            .meta
            .gate_period
            .ok_or_else(|| invalid("gate_period", "trace metadata carries no gate period"))?;
        Self::new(period, trace.meta.gate_duty.unwrap_or(0.5))
    }
}

/// Mean demodulated level with the field on and off in one period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodPair {
    pub index: usize,
    pub on: f64,
    pub off: f64,
}

impl PeriodPair {
    pub fn difference(&self) -> f64 {
        self.on - self.off
    }
}

/// Half-open sample range `[start, end)` covering times in `[a, b)`.
fn sample_range(trace: &SignalTrace, a: f64, b: f64) -> (usize, usize) {
    let to_index = |t: f64| {
        let x = (t - trace.t0) * trace.rate - INDEX_EPS;
        libm::ceil(x).max(0.0) as usize
    };
    (to_index(a).min(trace.len()), to_index(b).min(trace.len()))
}

fn window_mean(trace: &SignalTrace, a: f64, b: f64) -> Result<f64> {
    let (s, e) = sample_range(trace, a, b);
    if e <= s {
        return Err(Error::TraceTooShort(format!(
            "no samples between {a} s and {b} s"
        )));
    }
    Ok(trace.samples[s..e].iter().sum::<f64>() / (e - s) as f64)
}

/// Sample windows `[on_start, on_end)` and `[off_start, off_end)` of period
/// `p`, after excluding `settle` seconds at the start of each half.
pub fn period_windows(
    trace: &SignalTrace,
    gate: GateTiming,
    settle: f64,
    p: usize,
) -> ((usize, usize), (usize, usize)) {
    let start = p as f64 * gate.period;
    let switch = start + gate.duty * gate.period;
    let end = start + gate.period;
    (
        sample_range(trace, start + settle, switch),
        sample_range(trace, switch + settle, end),
    )
}

/// Per-period (on, off) means of a demodulated trace. Only periods fully
/// contained in the trace are used.
pub fn segment_periods(
    demod: &SignalTrace,
    gate: GateTiming,
    settle: f64,
) -> Result<Vec<PeriodPair>> {
    let shortest_half = gate.duty.min(1.0 - gate.duty) * gate.period;
    if !(settle >= 0.0) || settle >= shortest_half {
        return Err(invalid(
            "settle",
            format!("settling time {settle} s must lie in [0, {shortest_half}) s"),
        ));
    }
    if demod.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let t_end = demod.t0 + demod.duration();
    let eps = INDEX_EPS / demod.rate;
    let first = libm::ceil((demod.t0 - eps) / gate.period).max(0.0) as usize;
    let mut pairs = Vec::new();
    let mut p = first;
    while (p + 1) as f64 * gate.period <= t_end + eps {
        let start = p as f64 * gate.period;
        let switch = start + gate.duty * gate.period;
        pairs.push(PeriodPair {
            index: p,
            on: window_mean(demod, start + settle, switch)?,
            off: window_mean(demod, switch + settle, start + gate.period)?,
        });
        p += 1;
    }
    if pairs.is_empty() {
        return Err(Error::TraceTooShort(format!(
            "trace of {} s holds no full gate period of {} s",
            demod.duration(),
            gate.period
        )));
    }
    Ok(pairs)
}

/// How per-period differences were formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Differencing {
    /// `on_i - off_i`.
    OnOff,
    /// `on_i - (off_{i-1} + off_i) / 2`; cancels linear drift.
    OffOnOff,
}

/// Calibration factors around a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSummary {
    /// V/Hz
    pub before: f64,
    pub after: f64,
    pub interpolated: f64,
    pub before_time: f64,
    pub after_time: f64,
}

/// Averaged on/off difference with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementEstimate {
    pub value: f64,
    /// Standard error; NaN when a single period gives no spread estimate.
    pub sigma: f64,
    pub n_periods: usize,
    pub unit: Unit,
    pub differencing: Differencing,
    pub calibration: Option<CalibrationSummary>,
}

impl MeasurementEstimate {
    pub fn sigma_available(&self) -> bool {
        self.sigma.is_finite()
    }
}

fn mean_and_error(diffs: &[f64]) -> (f64, f64) {
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    if diffs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var / n))
}

/// `delta V = (1/N) sum (on_i - off_i)`, sigma = sample std / sqrt(N).
pub fn on_off_estimate(pairs: &[PeriodPair]) -> Result<MeasurementEstimate> {
    if pairs.is_empty() {
        return Err(Error::Empty("period pairs"));
    }
    let diffs: Vec<f64> = pairs.iter().map(PeriodPair::difference).collect();
    let (value, sigma) = mean_and_error(&diffs);
    Ok(MeasurementEstimate {
        value,
        sigma,
        n_periods: pairs.len(),
        unit: Unit::Volts,
        differencing: Differencing::OnOff,
        calibration: None,
    })
}

/// Off-on-off variant. Needs consecutive periods; uses `N - 1` differences.
pub fn off_on_off_estimate(pairs: &[PeriodPair]) -> Result<MeasurementEstimate> {
    if pairs.len() < 2 {
        return Err(Error::Empty("two consecutive period pairs"));
    }
    if pairs.windows(2).any(|w| w[1].index != w[0].index + 1) {
        return Err(invalid("pairs", "periods must be consecutive"));
    }
    let diffs: Vec<f64> = pairs
        .windows(2)
        .map(|w| w[1].on - 0.5 * (w[0].off + w[1].off))
        .collect();
    let (value, sigma) = mean_and_error(&diffs);
    Ok(MeasurementEstimate {
        value,
        sigma,
        n_periods: diffs.len(),
        unit: Unit::Volts,
        differencing: Differencing::OffOnOff,
        calibration: None,
    })
}

/// One EOM calibration: injected rms frequency modulation and the
/// demodulated level it produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRun {
    /// Hz rms
    pub injected: f64,
    /// V
    pub measured: f64,
    /// s
    pub timestamp: f64,
}

impl CalibrationRun {
    /// V/Hz
    pub fn factor(&self) -> Result<f64> {
        if !(self.injected > 0.0) {
            return Err(invalid("injected", "calibration modulation must be > 0 Hz"));
        }
        if !(self.measured > 0.0) {
            return Err(invalid("measured", "calibration level must be > 0 V"));
        }
        Ok(self.measured / self.injected)
    }
}

/// Mean demodulated level after `settle` seconds.
pub fn calibration_level(demod: &SignalTrace, settle: f64) -> Result<f64> {
    window_mean(demod, demod.t0 + settle, demod.t0 + demod.duration())
}

/// Calibration factor at time `t`, linearly interpolated between the two
/// calibrations.
pub fn calibration_factor(before: &CalibrationRun, after: &CalibrationRun, t: f64) -> Result<f64> {
    let (kb, ka) = (before.factor()?, after.factor()?);
    let (tb, ta) = (before.timestamp, after.timestamp);
    if !(t >= tb && t <= ta) {
        return Err(Error::OutsideCalibration {
            t,
            before: tb,
            after: ta,
        });
    }
    if ta == tb {
        return Ok(0.5 * (kb + ka));
    }
    Ok(kb + (ka - kb) * (t - tb) / (ta - tb))
}

/// Divides value and sigma by `factor` (V/Hz).
pub fn to_frequency(estimate: &MeasurementEstimate, factor: f64) -> Result<MeasurementEstimate> {
    if estimate.unit != Unit::Volts {
        return Err(Error::UnitMismatch {
            expected: Unit::Volts.as_str(),
            found: estimate.unit.as_str(),
        });
    }
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(invalid("factor", "calibration factor must be > 0"));
    }
    Ok(MeasurementEstimate {
        value: estimate.value / factor,
        sigma: estimate.sigma / factor,
        unit: Unit::Hertz,
        ..*estimate
    })
}

/// Full procedure on a demodulated run: segment, difference, calibrate at the
/// run midpoint.
pub fn measure(
    demod: &SignalTrace,
    gate: GateTiming,
    settle: f64,
    before: &CalibrationRun,
    after: &CalibrationRun,
) -> Result<MeasurementEstimate> {
    measure_with(demod, gate, settle, before, after, Differencing::OnOff)
}

/// [`measure`] with a choice of differencing.
pub fn measure_with(
    demod: &SignalTrace,
    gate: GateTiming,
    settle: f64,
    before: &CalibrationRun,
    after: &CalibrationRun,
    differencing: Differencing,
) -> Result<MeasurementEstimate> {
    demod.require_unit(Unit::Volts)?;
    let pairs = segment_periods(demod, gate, settle)?;
    let volts = match differencing {
        Differencing::OnOff => on_off_estimate(&pairs)?,
        Differencing::OffOnOff => off_on_off_estimate(&pairs)?,
    };
    let t_mid = demod.t0 + 0.5 * demod.duration();
    let factor = calibration_factor(before, after, t_mid)?;
    let mut hz = to_frequency(&volts, factor)?;
    hz.calibration = Some(CalibrationSummary {
        before: before.factor()?,
        after: after.factor()?,
        interpolated: factor,
        before_time: before.timestamp,
        after_time: after.timestamp,
    });
    Ok(hz)
}

/// Frequency band for [`sensitivity_psd`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityBand {
    pub center: f64,
    pub half_width: f64,
    /// Preferred Welch segment duration, s.
    pub segment_duration: f64,
}

impl SensitivityBand {
    pub fn around(f_mod: f64) -> Self {
        Self {
            center: f_mod,
            half_width: 0.1 * f_mod,
            segment_duration: 1.0,
        }
    }
}

/// Relative frequency sensitivity per sqrt(Hz) around `band.center`:
/// sqrt of the Welch PSD of the trace in Hz, divided by `nu`.
///
/// Volt traces are converted with `factor` (V/Hz); Hz traces are used as is.
pub fn sensitivity_psd(
    trace: &SignalTrace,
    nu: f64,
    factor: f64,
    band: SensitivityBand,
) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(invalid("laser_frequency", "must be > 0 Hz"));
    }
    let scale = match trace.unit {
        Unit::Volts => {
            if !(factor > 0.0) {
                return Err(invalid("factor", "calibration factor must be > 0"));
            }
            1.0 / factor
        }
        Unit::Hertz => 1.0,
        Unit::Dimensionless => {
            return Err(Error::UnitMismatch {
                expected: Unit::Volts.as_str(),
                found: trace.unit.as_str(),
            })
        }
    };
    let preferred = libm::round(band.segment_duration * trace.rate) as usize;
    let len = segment_length(trace.len(), preferred)?;
    let lo = (band.center - band.half_width).max(0.0);
    let hi = (band.center + band.half_width).min(0.5 * trace.rate);
    let r = welch_band_psd(&trace.samples, trace.rate, (lo, hi), len)?;
    Ok(libm::sqrt(r.psd) * scale / nu)
}
