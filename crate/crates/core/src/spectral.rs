//! Band-limited Welch power spectral density.
//!
//! Only the bins inside the requested band are evaluated (Goertzel
//! recurrence per bin), which keeps the estimator allocation-light and
//! avoids a full FFT when only the neighbourhood of `f_mod` matters.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Error, Result};

/// Minimum number of averaged segments.
pub const MIN_SEGMENTS: usize = 8;

const MIN_SEGMENT_LEN: usize = 16;

/// Band-averaged one-sided PSD.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPsd {
    /// Mean one-sided PSD over the band, unit^2/Hz.
    pub psd: f64,
    pub bins: usize,
    pub segments: usize,
    /// Frequency resolution, Hz.
    pub resolution: f64,
}

fn hann(len: usize) -> Vec<f64> {
    // periodic Hann
    (0..len)
        .map(|n| {
            let s = libm::sin(PI * n as f64 / len as f64);
            s * s
        })
        .collect()
}

fn goertzel_power(x: &[f64], k: usize) -> f64 {
    let w = 2.0 * PI * k as f64 / x.len() as f64;
    let coeff = 2.0 * libm::cos(w);
    let (mut s1, mut s2) = (0.0, 0.0);
    for &v in x {
        let s0 = v + coeff * s1 - s2;
        s2 = s1;
        s1 = s0;
    }
    (s1 * s1 + s2 * s2 - coeff * s1 * s2).max(0.0)
}

/// Largest segment length, not above `preferred`, that still gives
/// [`MIN_SEGMENTS`] half-overlapping segments over `n` samples.
pub fn segment_length(n: usize, preferred: usize) -> Result<usize> {
    let max_len = 2 * (n / (MIN_SEGMENTS + 1));
    let len = preferred.min(max_len) & !1;
    if len < MIN_SEGMENT_LEN {
        return Err(Error::TraceTooShort(format!(
            "{n} samples cannot hold {MIN_SEGMENTS} overlapping segments of {MIN_SEGMENT_LEN} samples"
        )));
    }
    Ok(len)
}

/// Welch estimate (Hann window, 50 % overlap) averaged over the bins whose
/// centre lies in `[f_lo, f_hi]`; the bin nearest the band centre is used if
/// the band is narrower than the resolution.
pub fn welch_band_psd(
    samples: &[f64],
    rate: f64,
    band: (f64, f64),
    segment_len: usize,
) -> Result<BandPsd> {
    if !(rate > 0.0) {
        return Err(invalid("rate", "must be > 0 Hz"));
    }
    if !(band.0 <= band.1 && band.0 >= 0.0 && band.1 <= 0.5 * rate) {
        return Err(invalid("band", "must satisfy 0 <= f_lo <= f_hi <= rate/2"));
    }
    if segment_len < MIN_SEGMENT_LEN || !segment_len.is_multiple_of(2) {
        return Err(invalid("segment_len", "must be even and >= 16"));
    }
    let hop = segment_len / 2;
    if samples.len() < segment_len {
        return Err(Error::TraceTooShort(format!(
            "{} samples shorter than one segment",
            samples.len()
        )));
    }
    let segments = (samples.len() - segment_len) / hop + 1;
    if segments < MIN_SEGMENTS {
        return Err(Error::TraceTooShort(format!(
            "{segments} segments, need {MIN_SEGMENTS}"
        )));
    }
    let resolution = rate / segment_len as f64;
    let nyquist_bin = segment_len / 2;
    let lo = libm::ceil(band.0 / resolution) as usize;
    let hi = (libm::floor(band.1 / resolution) as usize).min(nyquist_bin);
    let bins: Vec<usize> = if lo <= hi {
        (lo..=hi).collect()
    } else {
        let centre = libm::round(0.5 * (band.0 + band.1) / resolution) as usize;
        alloc::vec![centre.min(nyquist_bin)]
    };

    let window = hann(segment_len);
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let mut buf = alloc::vec![0.0; segment_len];
    let mut acc = 0.0;
    for s in 0..segments {
        let seg = &samples[s * hop..s * hop + segment_len];
        let mean = seg.iter().sum::<f64>() / segment_len as f64;
        for ((b, x), w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = (x - mean) * w;
        }
        for &k in &bins {
            let one_sided = if k == 0 || k == nyquist_bin { 1.0 } else { 2.0 };
            acc += one_sided * goertzel_power(&buf, k) / (rate * window_power);
        }
    }
    Ok(BandPsd {
        psd: acc / (segments * bins.len()) as f64,
        bins: bins.len(),
        segments,
        resolution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tone_power_lands_in_band() {
        // A sin at an exact bin: integrated PSD over the band equals A^2/2.
        let rate = 1000.0;
        let n = 20_000;
        let len = 1000;
        let x: Vec<f64> = (0..n)
            .map(|k| 2.0 * libm::sin(2.0 * PI * 100.0 * k as f64 / rate))
            .collect();
        let r = welch_band_psd(&x, rate, (96.0, 104.0), len).unwrap();
        let total = r.psd * r.bins as f64 * r.resolution;
        assert_relative_eq!(total, 2.0, max_relative = 1e-6);
    }

    #[test]
    fn too_short() {
        let x = alloc::vec![0.0; 50];
        assert!(matches!(
            segment_length(x.len(), 1000),
            Err(Error::TraceTooShort(_))
        ));
        assert!(matches!(
            welch_band_psd(&x, 100.0, (1.0, 2.0), 16),
            Err(Error::TraceTooShort(_))
        ));
    }

    #[test]
    fn zero_input_zero_psd() {
        let x = alloc::vec![0.0; 4000];
        let r = welch_band_psd(&x, 1000.0, (90.0, 110.0), 400).unwrap();
        assert_eq!(r.psd, 0.0);
    }
}
