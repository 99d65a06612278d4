use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use super::trace::SignalTrace;
use crate::error::{invalid, Error, Result};

/// Digital lock-in: multiply by `sqrt(2) sin(2 pi f_mod t + phase)` and
/// low-pass with `order` cascaded single poles of time constant `tau`.
///
/// With this normalisation an in-phase tone `A sin(2 pi f_mod t)` settles to
/// `A / sqrt(2)`, its rms value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LockIn {
    pub f_mod: f64,
    /// s
    pub tau: f64,
    /// rad
    pub phase: f64,
    pub order: u8,
}

impl Default for LockIn {
    fn default() -> Self {
        Self {
            f_mod: 300.0,
            tau: 1.0,
            phase: 0.0,
            order: 1,
        }
    }
}

impl LockIn {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_mod > 0.0 && self.f_mod.is_finite()) {
            return Err(invalid("f_mod", "must be > 0 Hz"));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(invalid("tau", "must be > 0 s"));
        }
        if !(1..=4).contains(&self.order) {
            return Err(invalid("order", "must be between 1 and 4"));
        }
        if !self.phase.is_finite() {
            return Err(invalid("phase", "must be finite"));
        }
        Ok(())
    }

    /// Residual amplitude of the `2 f_mod` product term, relative to the DC
    /// output.
    pub fn ripple_fraction(&self) -> f64 {
        let x = 2.0 * PI * 2.0 * self.f_mod * self.tau;
        libm::pow(1.0 + x * x, -0.5 * f64::from(self.order))
    }

    /// Filter would pass more than 1 % ripple or `tau <= 1/f_mod`.
    pub fn tau_too_small(&self) -> bool {
        self.tau <= 1.0 / self.f_mod || self.ripple_fraction() > 0.01
    }

    /// One-sided equivalent noise bandwidth of the output filter, Hz.
    pub fn noise_bandwidth(&self) -> f64 {
        let n = u32::from(self.order.max(1)) - 1;
        // C(2n, n) / 4^n
        let mut c = 1.0;
        for k in 0..n {
            c *= f64::from(2 * n - k) / f64::from(n - k);
        }
        c / libm::pow(4.0, f64::from(n)) / (4.0 * self.tau)
    }

    pub fn demodulate(&self, trace: &SignalTrace) -> Result<SignalTrace> {
        self.validate()?;
        if !(trace.rate > 2.0 * self.f_mod) {
            return Err(Error::Undersampled {
                rate: trace.rate,
                f_mod: self.f_mod,
            });
        }
        let alpha = 1.0 - libm::exp(-1.0 / (trace.rate * self.tau));
        let omega = 2.0 * PI * self.f_mod;
        let mut state = [0.0f64; 4];
        let order = usize::from(self.order);
        let samples: Vec<f64> = trace
            .samples
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let reference = SQRT_2 * libm::sin(omega * trace.time(k) + self.phase);
                let mut x = v * reference;
                for s in state.iter_mut().take(order) {
                    *s += alpha * (x - *s);
                    x = *s;
                }
                x
            })
            .collect();
        let mut out = SignalTrace::new(samples, trace.rate, trace.t0, trace.unit)?;
        out.meta = trace.meta.clone();
        out.meta.f_mod = Some(self.f_mod);
        out.meta.lockin_tau = Some(self.tau);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Unit;
    use alloc::vec::Vec;
    use approx::assert_relative_eq;

    fn tone(amp: f64, f: f64, phase: f64, rate: f64, secs: f64) -> SignalTrace {
        let n = (rate * secs) as usize;
        let s: Vec<f64> = (0..n)
            .map(|k| amp * libm::sin(2.0 * PI * f * k as f64 / rate + phase))
            .collect();
        SignalTrace::new(s, rate, 0.0, Unit::Volts).unwrap()
    }

    #[test]
    fn in_phase_tone_settles_to_rms() {
        let li = LockIn {
            f_mod: 300.0,
            tau: 0.1,
            phase: 0.0,
            order: 1,
        };
        let out = li
            .demodulate(&tone(2.0, 300.0, 0.0, 10_000.0, 1.2))
            .unwrap();
        let last = *out.samples.last().unwrap();
        // rms a = 2 / sqrt 2; after 12 tau the exponential term is e^-12
        assert_relative_eq!(last, 2.0 / SQRT_2, max_relative = 0.01);
    }

    #[test]
    fn harmonic_and_quadrature_reject() {
        let li = LockIn {
            f_mod: 300.0,
            tau: 0.1,
            phase: 0.0,
            order: 1,
        };
        let out = li
            .demodulate(&tone(1.0, 900.0, 0.0, 10_000.0, 1.2))
            .unwrap();
        assert!(out.samples.last().unwrap().abs() < 0.01);
        let q = LockIn {
            phase: PI / 2.0,
            ..li
        };
        let out = q.demodulate(&tone(1.0, 300.0, 0.0, 10_000.0, 1.2)).unwrap();
        assert!(out.samples.last().unwrap().abs() < 0.01);
    }

    #[test]
    fn undersampled_is_error() {
        let li = LockIn::default();
        let t = tone(1.0, 300.0, 0.0, 500.0, 1.0);
        assert!(matches!(li.demodulate(&t), Err(Error::Undersampled { .. })));
    }

    #[test]
    fn noise_bandwidths() {
        let mut li = LockIn {
            tau: 1.0,
            ..LockIn::default()
        };
        let expect = [0.25, 0.125, 3.0 / 32.0, 5.0 / 64.0];
        for (order, bw) in (1..=4).zip(expect) {
            li.order = order;
            assert_relative_eq!(li.noise_bandwidth(), bw, max_relative = 1e-15);
        }
    }

    #[test]
    fn short_tau_flagged() {
        let li = LockIn {
            f_mod: 300.0,
            tau: 1e-4,
            phase: 0.0,
            order: 1,
        };
        assert!(li.tau_too_small());
        assert!(!LockIn::default().tau_too_small());
    }
}
