use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use super::trace::{SignalTrace, TraceMeta, Unit};
use super::{NoiseModel, PdhConfig};
use crate::error::{invalid, Error, Result};
use crate::experiment::Experiment;

/// Generator for stream `stream` of master seed `seed`.
pub fn noise_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn sample_count(duration: f64, rate: f64) -> Result<usize> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(invalid("rate", "must be > 0 Hz"));
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::EmptyTrace);
    }
    let n = libm::round(duration * rate) as usize;
    if n == 0 {
        return Err(Error::EmptyTrace);
    }
    Ok(n)
}

/// Relative frequency noise sampler: white part with one-sided PSD
/// `(excess * floor)^2` plus `drift_rate * t`.
struct NoiseSource {
    sigma: f64,
    drift: f64,
    rng: ChaCha8Rng,
}

impl NoiseSource {
    fn new(model: &NoiseModel, rate: f64, rng: ChaCha8Rng) -> Self {
        Self {
            sigma: model.amplitude_density() * libm::sqrt(0.5 * rate),
            drift: model.drift_rate,
            rng,
        }
    }

    fn sample(&mut self, t: f64) -> f64 {
        let white = if self.sigma > 0.0 {
            let g: f64 = StandardNormal.sample(&mut self.rng);
            self.sigma * g
        } else {
            0.0
        };
        white + self.drift * t
    }
}

/// Relative frequency noise trace of `duration` s at `rate` Hz, seeded by
/// `model.rng_seed`.
pub fn synthesize_noise(model: &NoiseModel, duration: f64, rate: f64) -> Result<SignalTrace> {
    model.validate()?;
    let n = sample_count(duration, rate)?;
    let mut src = NoiseSource::new(model, rate, noise_rng(model.rng_seed, 0));
    let samples = (0..n).map(|k| src.sample(k as f64 / rate)).collect();
    let mut trace = SignalTrace::new(samples, rate, 0.0, Unit::Dimensionless)?;
    trace.meta.seed = Some(model.rng_seed);
    Ok(trace)
}

fn run_meta(exp: &Experiment, seed: u64) -> TraceMeta {
    TraceMeta {
        seed: Some(seed),
        digest: None,
        gate_period: Some(exp.assembly.gate_period),
        gate_duty: Some(exp.assembly.gate_duty),
        f_mod: Some(exp.assembly.drive_frequency),
        lockin_tau: None,
    }
}

/// Error-signal trace (V) for a full gated run starting at `t = 0`:
/// `V(t) = D(t) [dnu_signal(t) + nu * noise(t)]`.
pub fn synthesize_run(exp: &Experiment, seed: u64) -> Result<SignalTrace> {
    exp.validate()?;
    let n = sample_count(exp.duration(), exp.rate)?;
    let coupling = exp.voltage_coupling()?;
    let nu = exp.cavity.laser_frequency;
    let mut src = NoiseSource::new(&exp.noise, exp.rate, noise_rng(seed, 0));
    let samples: Vec<f64> = (0..n)
        .map(|k| {
            let t = k as f64 / exp.rate;
            let split = coupling * exp.assembly.drive_voltage(t);
            exp.pdh.slope_at(t) * (split + nu * src.sample(t))
        })
        .collect();
    Ok(SignalTrace::new(samples, exp.rate, 0.0, Unit::Volts)?.with_meta(run_meta(exp, seed)))
}

/// Calibration segment: fields off, EOM tone of `cal_rms` Hz rms at the
/// lock-in frequency, noise drawn from generator stream `stream`.
pub fn synthesize_calibration(
    exp: &Experiment,
    cal_rms: f64,
    t0: f64,
    duration: f64,
    seed: u64,
    stream: u64,
) -> Result<SignalTrace> {
    exp.validate()?;
    let n = sample_count(duration, exp.rate)?;
    let nu = exp.cavity.laser_frequency;
    let mut src = NoiseSource::new(&exp.noise, exp.rate, noise_rng(seed, stream));
    let samples: Vec<f64> = (0..n)
        .map(|k| {
            let t = t0 + k as f64 / exp.rate;
            exp.pdh.slope_at(t) * nu * src.sample(t)
        })
        .collect();
    let mut meta = run_meta(exp, seed);
    meta.gate_period = None;
    meta.gate_duty = None;
    let trace = SignalTrace::new(samples, exp.rate, t0, Unit::Volts)?.with_meta(meta);
    inject_calibration(&trace, cal_rms, exp.lockin.f_mod, &exp.pdh)
}

/// Adds the always-on calibration tone `D(t) sqrt(2) cal_rms sin(2 pi f t)`.
pub fn inject_calibration(
    trace: &SignalTrace,
    cal_rms: f64,
    f_mod: f64,
    pdh: &PdhConfig,
) -> Result<SignalTrace> {
    trace.require_unit(Unit::Volts)?;
    if !cal_rms.is_finite() {
        return Err(invalid("calibration", "amplitude must be finite"));
    }
    let mut out = trace.clone();
    if cal_rms == 0.0 {
        return Ok(out);
    }
    let omega = 2.0 * PI * f_mod;
    for (k, v) in out.samples.iter_mut().enumerate() {
        let t = trace.time(k);
        *v += pdh.slope_at(t) * SQRT_2 * cal_rms * libm::sin(omega * t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quiet_nitrogen() -> Experiment {
        let mut exp = Experiment::paper_nitrogen();
        exp.noise = NoiseModel::silent();
        exp.rate = 2_000.0;
        exp.assembly.gate_period = 2.0;
        exp.periods = 2;
        exp
    }

    #[test]
    fn same_seed_same_noise() {
        let m = NoiseModel {
            rng_seed: 7,
            ..NoiseModel::default()
        };
        let a = synthesize_noise(&m, 1.0, 1000.0).unwrap();
        let b = synthesize_noise(&m, 1.0, 1000.0).unwrap();
        assert_eq!(a, b);
        let c = synthesize_noise(&NoiseModel { rng_seed: 8, ..m }, 1.0, 1000.0).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn zero_duration_is_empty_error() {
        assert_eq!(
            synthesize_noise(&NoiseModel::default(), 0.0, 1000.0).unwrap_err(),
            Error::EmptyTrace
        );
    }

    #[test]
    fn zero_fields_zero_noise_is_zero() {
        let mut exp = quiet_nitrogen();
        exp.assembly.drive_voltage_peak = 0.0;
        let trace = synthesize_run(&exp, 1).unwrap();
        assert!(trace.samples.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gated_sine_amplitude() {
        let exp = quiet_nitrogen();
        let trace = synthesize_run(&exp, 1).unwrap();
        let d = exp.pdh.slope;
        let split = exp.expected_split_rms().unwrap();
        let per_half = (exp.rate * 1.0) as usize;
        let on = &trace.samples[..per_half];
        let off = &trace.samples[per_half..2 * per_half];
        let rms = libm::sqrt(on.iter().map(|v| v * v).sum::<f64>() / on.len() as f64);
        assert_relative_eq!(rms, d * split, max_relative = 1e-6);
        assert_relative_eq!(rms / d, 3.8e-3, max_relative = 0.01);
        assert!(off.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn drift_only_is_ramp() {
        let mut exp = quiet_nitrogen();
        exp.assembly.drive_voltage_peak = 0.0;
        exp.noise.drift_rate = 1e-18;
        let trace = synthesize_run(&exp, 3).unwrap();
        let slope = exp.pdh.slope * exp.cavity.laser_frequency * 1e-18;
        for (k, v) in trace.samples.iter().enumerate() {
            assert_relative_eq!(
                *v,
                slope * trace.time(k),
                max_relative = 1e-12,
                epsilon = 1e-30
            );
        }
    }

    #[test]
    fn calibration_linear_and_zero() {
        let exp = quiet_nitrogen();
        let base = SignalTrace::new(alloc::vec![0.0; 400], 2000.0, 0.0, Unit::Volts).unwrap();
        assert_eq!(
            inject_calibration(&base, 0.0, 300.0, &exp.pdh).unwrap(),
            base
        );
        let a = inject_calibration(&base, 2e-3, 300.0, &exp.pdh).unwrap();
        let ab = inject_calibration(&a, 4.5e-3, 300.0, &exp.pdh).unwrap();
        let direct = inject_calibration(&base, 6.5e-3, 300.0, &exp.pdh).unwrap();
        for (x, y) in ab.samples.iter().zip(&direct.samples) {
            assert_relative_eq!(*x, *y, max_relative = 1e-12, epsilon = 1e-20);
        }
        let hz = SignalTrace::new(alloc::vec![0.0; 4], 2000.0, 0.0, Unit::Hertz).unwrap();
        assert!(matches!(
            inject_calibration(&hz, 1e-3, 300.0, &exp.pdh),
            Err(Error::UnitMismatch { .. })
        ));
    }
}
