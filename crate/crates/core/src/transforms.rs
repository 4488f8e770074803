//! Signal representations fed to the persistence stage: the raw spectrum,
//! its Fourier magnitude, its Welch power spectral density, and its
//! normalized autocorrelation.

use std::fmt;
use std::str::FromStr;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectrum::{Spectrum, SpectrumError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("Welch segment length {segment} exceeds signal length {len}")]
    SegmentTooLong { segment: usize, len: usize },
    #[error("invalid Welch configuration: {0}")]
    InvalidConfig(String),
    #[error("signal has zero variance")]
    DegenerateSignal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    Raw,
    Fourier,
    Welch,
    Autocorrelation,
}

impl TransformKind {
    pub const ALL: [TransformKind; 4] = [
        TransformKind::Raw,
        TransformKind::Fourier,
        TransformKind::Welch,
        TransformKind::Autocorrelation,
    ];

    /// Row label used in the summary report.
    pub fn report_name(self) -> &'static str {
        match self {
            TransformKind::Raw => "H0",
            TransformKind::Fourier => "Fourier transform",
            TransformKind::Welch => "Welch transform",
            TransformKind::Autocorrelation => "Autocorrelation",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TransformKind::Raw => "raw",
            TransformKind::Fourier => "fourier",
            TransformKind::Welch => "welch",
            TransformKind::Autocorrelation => "autocorrelation",
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TransformKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TransformKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                format!("unknown transform `{s}` (expected raw, fourier, welch or autocorrelation)")
            })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Hann,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WelchConfig {
    /// Segment length; `None` means `min(256, N)`.
    pub segment_length: Option<usize>,
    /// Fraction of a segment shared with the next one, in `[0, 1)`.
    pub overlap: f64,
    pub window: Window,
}

impl Default for WelchConfig {
    fn default() -> Self {
        WelchConfig {
            segment_length: None,
            overlap: 0.5,
            window: Window::Hann,
        }
    }
}

impl WelchConfig {
    pub const DEFAULT_SEGMENT: usize = 256;

    pub fn segment_for(&self, len: usize) -> usize {
        self.segment_length
            .unwrap_or_else(|| Self::DEFAULT_SEGMENT.min(len))
    }

    pub fn validate(&self) -> Result<(), TransformError> {
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(TransformError::InvalidConfig(format!(
                "overlap {} is outside [0, 1)",
                self.overlap
            )));
        }
        if matches!(self.segment_length, Some(l) if l < 2) {
            return Err(TransformError::InvalidConfig(
                "segment_length must be at least 2".to_string(),
            ));
        }
        Ok(())
    }
}

fn forward_fft(values: &[f64], padded_len: usize) -> Vec<Complex<f64>> {
    let mut buffer: Vec<Complex<f64>> = values
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(padded_len)
        .collect();
    FftPlanner::new()
        .plan_fft_forward(padded_len)
        .process(&mut buffer);
    buffer
}

/// One-sided magnitude of the DFT: `|Σ s[n] e^{-2πikn/N}|` for `k = 0..=N/2`.
pub fn fourier_magnitude(s: &Spectrum) -> Spectrum {
    let n = s.len();
    let spectrum = forward_fft(s.values(), n);
    let values = spectrum[..n / 2 + 1].iter().map(|c| c.norm()).collect();
    Spectrum::new(values).expect("magnitudes of a finite signal are finite")
}

fn hann(len: usize) -> Vec<f64> {
    // periodic form, matching the usual FFT-oriented window tables
    (0..len)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / len as f64).cos())
        .collect()
}

/// Welch power spectral density with unit sampling frequency.
///
/// Segments are windowed without detrending; the averaged periodogram is
/// scaled by `1 / Σw²` and every bin except DC and Nyquist is doubled.
pub fn welch_psd(s: &Spectrum, cfg: &WelchConfig) -> Result<Spectrum, TransformError> {
    cfg.validate()?;
    let n = s.len();
    let segment = cfg.segment_for(n);
    if segment > n {
        return Err(TransformError::SegmentTooLong { segment, len: n });
    }
    if segment < 2 {
        return Err(TransformError::InvalidConfig(format!(
            "segment length {segment} is too short"
        )));
    }
    let overlap = (segment as f64 * cfg.overlap).floor() as usize;
    let step = segment - overlap;
    let window = match cfg.window {
        Window::Hann => hann(segment),
    };
    let window_power: f64 = window.iter().map(|w| w * w).sum();

    let fft = FftPlanner::new().plan_fft_forward(segment);
    let bins = segment / 2 + 1;
    let mut psd = vec![0.0; bins];
    let mut buffer = vec![Complex::new(0.0, 0.0); segment];
    let mut segments = 0usize;
    let mut start = 0;
    while start + segment <= n {
        for ((slot, &v), &w) in buffer
            .iter_mut()
            .zip(&s.values()[start..start + segment])
            .zip(&window)
        {
            *slot = Complex::new(v * w, 0.0);
        }
        fft.process(&mut buffer);
        for (acc, c) in psd.iter_mut().zip(&buffer) {
            *acc += c.norm_sqr();
        }
        segments += 1;
        start += step;
    }

    let scale = 1.0 / (window_power * segments as f64);
    let last_doubled = if segment.is_multiple_of(2) { bins - 1 } else { bins };
    for (k, p) in psd.iter_mut().enumerate() {
        *p *= scale;
        if k > 0 && k < last_doubled {
            *p *= 2.0;
        }
    }
    Ok(Spectrum::new(psd)?)
}

/// Mean-removed autocorrelation normalized so that lag 0 equals 1.
///
/// `r[k] = Σ_i (s[i]-m)(s[i+k]-m) / Σ_i (s[i]-m)²` for `k = 0..N`.
pub fn autocorrelation(s: &Spectrum) -> Result<Spectrum, TransformError> {
    let values = s.values();
    if values.windows(2).all(|w| w[0] == w[1]) {
        return Err(TransformError::DegenerateSignal);
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let energy: f64 = centered.iter().map(|v| v * v).sum();
    if energy == 0.0 {
        return Err(TransformError::DegenerateSignal);
    }

    let padded = (2 * n).next_power_of_two();
    let mut spectrum = forward_fft(&centered, padded);
    for c in spectrum.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    FftPlanner::new()
        .plan_fft_inverse(padded)
        .process(&mut spectrum);
    let lag0 = spectrum[0].re;
    let mut out: Vec<f64> = spectrum[..n]
        .iter()
        .map(|c| (c.re / lag0).clamp(-1.0, 1.0))
        .collect();
    out[0] = 1.0;
    Ok(Spectrum::new(out)?)
}

/// Applies `kind` to `s`; `Raw` returns a copy of the input.
pub fn apply(
    kind: TransformKind,
    s: &Spectrum,
    welch: &WelchConfig,
) -> Result<Spectrum, TransformError> {
    match kind {
        TransformKind::Raw => Ok(s.clone()),
        TransformKind::Fourier => Ok(fourier_magnitude(s)),
        TransformKind::Welch => welch_psd(s, welch),
        TransformKind::Autocorrelation => autocorrelation(s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec(v: Vec<f64>) -> Spectrum {
        Spectrum::new(v).unwrap()
    }

    #[test]
    fn fourier_of_constant_is_dc_only() {
        let out = fourier_magnitude(&spec(vec![1.0; 4]));
        assert_eq!(out.len(), 3);
        assert!((out.values()[0] - 4.0).abs() < 1e-12);
        assert!(out.values()[1].abs() < 1e-12);
        assert!(out.values()[2].abs() < 1e-12);
    }

    #[test]
    fn fourier_of_single_tone() {
        let s: Vec<f64> = (0..16)
            .map(|n| (2.0 * PI * 2.0 * n as f64 / 16.0).cos())
            .collect();
        let out = fourier_magnitude(&spec(s));
        let v = out.values();
        let argmax = (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
        assert_eq!(argmax, 2);
        assert!((v[2] - 8.0).abs() < 1e-9);
        for (k, &m) in v.iter().enumerate() {
            if !(1..=3).contains(&k) {
                assert!(m.abs() < 1e-9, "bin {k} = {m}");
            }
        }
    }

    #[test]
    fn welch_of_zeros_is_zero() {
        let out = welch_psd(&spec(vec![0.0; 300]), &WelchConfig::default()).unwrap();
        assert_eq!(out.len(), 129);
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn welch_segment_defaults_and_errors() {
        let cfg = WelchConfig::default();
        assert_eq!(welch_psd(&spec(vec![1.0; 100]), &cfg).unwrap().len(), 51);
        let long = WelchConfig {
            segment_length: Some(64),
            ..WelchConfig::default()
        };
        assert_eq!(
            welch_psd(&spec(vec![1.0; 32]), &long),
            Err(TransformError::SegmentTooLong {
                segment: 64,
                len: 32
            })
        );
        let bad = WelchConfig {
            overlap: 1.0,
            ..WelchConfig::default()
        };
        assert!(matches!(
            welch_psd(&spec(vec![1.0; 32]), &bad),
            Err(TransformError::InvalidConfig(_))
        ));
    }

    #[test]
    fn welch_odd_segment_has_no_nyquist_bin() {
        let cfg = WelchConfig {
            segment_length: Some(9),
            ..WelchConfig::default()
        };
        let s: Vec<f64> = (0..40).map(|i| (i as f64 * 0.7).sin()).collect();
        assert_eq!(welch_psd(&spec(s), &cfg).unwrap().len(), 5);
    }

    #[test]
    fn autocorrelation_of_alternating_signal() {
        let s: Vec<f64> = (0..32)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let r = autocorrelation(&spec(s)).unwrap();
        assert_eq!(r.values()[0], 1.0);
        assert!((r.values()[1] + 31.0 / 32.0).abs() < 1e-12);
    }

    #[test]
    fn autocorrelation_rejects_constant() {
        assert_eq!(
            autocorrelation(&spec(vec![0.1; 10])),
            Err(TransformError::DegenerateSignal)
        );
    }

    #[test]
    fn apply_dispatches() {
        let s = spec(vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0]);
        let welch = WelchConfig::default();
        assert_eq!(apply(TransformKind::Raw, &s, &welch).unwrap(), s);
        let f = apply(TransformKind::Fourier, &spec(vec![1.0; 4]), &welch).unwrap();
        assert!((f.values()[0] - 4.0).abs() < 1e-12);
        assert_eq!(
            apply(TransformKind::Autocorrelation, &spec(vec![2.0; 8]), &welch),
            Err(TransformError::DegenerateSignal)
        );
    }

    #[test]
    fn transform_kind_parses() {
        for kind in TransformKind::ALL {
            assert_eq!(kind.as_str().parse::<TransformKind>().unwrap(), kind);
        }
        assert!("wavelet".parse::<TransformKind>().is_err());
    }
}
