//! Dynamic phasor algebra.
//!
//! A dynamic phasor `<x>_n(t)` is the n-th Fourier coefficient of `x` over the
//! sliding window `[t - T0/2, t + T0/2]`, taken against `exp(-j n w0 tau)`.
//! A [`PhasorSet`] holds a handful of these coefficients at one instant.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Minimum number of samples per period accepted by [`extract_phasor`].
pub const MIN_SAMPLES: usize = 32;

/// Harmonic truncation used when building sets from waveforms.
pub const DEFAULT_MAX_HARMONIC: i32 = 2;

/// Relative tolerance for conjugate symmetry checks.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Indexed complex Fourier coefficients of a real waveform at one instant.
///
/// Indices that are not stored are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasorSet {
    omega0: f64,
    entries: BTreeMap<i32, Complex64>,
}

impl PhasorSet {
    pub fn new(omega0: f64) -> Self {
        Self {
            omega0,
            entries: BTreeMap::new(),
        }
    }

    /// Set built from `<x>_n` for `n >= 0`, with the negative indices filled
    /// in by conjugation. The zeroth entry has its imaginary part dropped.
    pub fn from_positive(omega0: f64, positive: &[(i32, Complex64)]) -> Result<Self> {
        let mut set = Self::new(omega0);
        for &(n, value) in positive {
            if n < 0 {
                return Err(Error::invalid(format!("negative harmonic {n} given")));
            }
            if n == 0 {
                set.insert(0, Complex64::new(value.re, 0.0));
            } else {
                set.insert(n, value);
                set.insert(-n, value.conj());
            }
        }
        Ok(set)
    }

    /// Fundamental-only set `{+1: v, -1: conj(v)}`.
    pub fn fundamental(omega0: f64, v: Complex64) -> Self {
        let mut set = Self::new(omega0);
        set.insert(1, v);
        set.insert(-1, v.conj());
        set
    }

    /// Extracts harmonics `-max_harmonic..=max_harmonic` of `f` over the window
    /// centred on `t_center`.
    pub fn from_waveform(
        f: impl Fn(f64) -> f64,
        t_center: f64,
        omega0: f64,
        max_harmonic: i32,
        samples: usize,
    ) -> Result<Self> {
        let period = 2.0 * PI / omega0;
        let start = t_center - period / 2.0;
        let values = sample_window(&f, start, period, samples);
        let mut set = Self::new(omega0);
        for n in -max_harmonic..=max_harmonic {
            set.insert(n, extract_phasor(&values, start, omega0, n)?);
        }
        Ok(set)
    }

    pub fn insert(&mut self, n: i32, value: Complex64) {
        self.entries.insert(n, value);
    }

    pub fn with(mut self, n: i32, value: Complex64) -> Self {
        self.insert(n, value);
        self
    }

    pub fn get(&self, n: i32) -> Complex64 {
        self.entries.get(&n).copied().unwrap_or_default()
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega0
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, Complex64)> + '_ {
        self.entries.iter().map(|(&n, &v)| (n, v))
    }

    pub fn max_harmonic(&self) -> i32 {
        self.entries.keys().map(|n| n.abs()).max().unwrap_or(0)
    }

    fn scale(&self) -> f64 {
        self.entries.values().map(|v| v.norm()).fold(1.0, f64::max)
    }

    pub fn is_conjugate_symmetric(&self) -> bool {
        let tol = SYMMETRY_TOL * self.scale();
        self.entries
            .iter()
            .all(|(&n, &v)| (self.get(-n) - v.conj()).norm() <= tol)
    }
}

/// Samples `f` at `samples` uniform points covering `[start, start + period)`.
pub fn sample_window(f: impl Fn(f64) -> f64, start: f64, period: f64, samples: usize) -> Vec<f64> {
    let dt = period / samples as f64;
    (0..samples).map(|m| f(start + m as f64 * dt)).collect()
}

/// Windowed Fourier coefficient `<x>_n` from one period of uniform samples.
///
/// `samples[m]` is `x(start + m * T0 / N)`; the right endpoint of the window is
/// not included. For a periodic integrand the trapezoid rule reduces to this
/// plain sum.
pub fn extract_phasor(samples: &[f64], start: f64, omega0: f64, n: i32) -> Result<Complex64> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "{} samples per period, need at least {MIN_SAMPLES}",
            samples.len()
        )));
    }
    if !(omega0 > 0.0) {
        return Err(Error::invalid("omega0 must be positive"));
    }
    let count = samples.len() as f64;
    let dt = 2.0 * PI / omega0 / count;
    let sum: Complex64 = samples
        .iter()
        .enumerate()
        .map(|(m, &x)| {
            let tau = start + m as f64 * dt;
            x * Complex64::from_polar(1.0, -(n as f64) * omega0 * tau)
        })
        .sum();
    Ok(sum / count)
}

/// Inverse transform: `sum_n <x>_n exp(j n w0 tau)`.
pub fn reconstruct(ps: &PhasorSet, tau: f64) -> Result<f64> {
    if !ps.is_conjugate_symmetric() {
        return Err(Error::invalid("phasor set is not conjugate symmetric"));
    }
    let total: Complex64 = ps
        .iter()
        .map(|(n, v)| v * Complex64::from_polar(1.0, n as f64 * ps.omega0 * tau))
        .sum();
    Ok(total.re)
}

fn check_same_frequency(x: &PhasorSet, y: &PhasorSet) -> Result<()> {
    if (x.omega0 - y.omega0).abs() > 1e-12 * x.omega0.abs().max(y.omega0.abs()) {
        return Err(Error::invalid(format!(
            "phasor sets have different fundamentals ({} vs {})",
            x.omega0, y.omega0
        )));
    }
    Ok(())
}

/// `<xy>_n = sum_k <x>_{n-k} <y>_k`.
pub fn product_phasor(x: &PhasorSet, y: &PhasorSet, n: i32) -> Result<Complex64> {
    check_same_frequency(x, y)?;
    Ok(y.iter().map(|(k, yk)| x.get(n - k) * yk).sum())
}

/// Which operand of a shifted product carries the time shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftMode {
    /// Both operands are evaluated at `t - t0`.
    None,
    /// `x` is the time-shifted (orthogonal) signal.
    XOnly,
}

/// Product of phasors evaluated at `t - t0`.
///
/// With [`ShiftMode::XOnly`] the k-th term is rotated by `exp(j k w0 t0)`.
/// For `n = 0` this is exactly the average of `x(tau - t0) y(tau)`; for other
/// `n` it differs from that windowed coefficient by the global factor
/// `exp(-j n w0 t0)`.
pub fn shifted_product_phasor(
    x: &PhasorSet,
    y: &PhasorSet,
    n: i32,
    t0: f64,
    mode: ShiftMode,
) -> Result<Complex64> {
    if !(t0 >= 0.0) {
        return Err(Error::invalid("shift must be non-negative"));
    }
    match mode {
        ShiftMode::None => product_phasor(x, y, n),
        ShiftMode::XOnly => {
            check_same_frequency(x, y)?;
            let w0 = x.omega0;
            Ok(y.iter()
                .map(|(k, yk)| x.get(n - k) * yk * Complex64::from_polar(1.0, k as f64 * w0 * t0))
                .sum())
        }
    }
}
