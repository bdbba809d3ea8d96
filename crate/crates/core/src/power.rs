//! Power measurement with a quarter-period orthogonal signal.

use std::collections::VecDeque;
use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::phasor::PhasorSet;

/// Active and reactive power pair.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PowerPair {
    pub p: f64,
    pub q: f64,
}

/// Instantaneous power from a signal pair and its quarter-period delayed copy.
///
/// A current lagging the voltage gives positive `q`.
pub fn instantaneous_pq(v: f64, v_d: f64, i: f64, i_d: f64) -> PowerPair {
    PowerPair {
        p: 0.5 * (v * i + v_d * i_d),
        q: 0.5 * (v_d * i - v * i_d),
    }
}

/// Zeroth dynamic phasors of active and reactive power from the k = +-1
/// phasors of converter voltage and grid current, now and one delay ago.
pub fn dp_average_power(
    vgf_now: &PhasorSet,
    vgf_delayed: &PhasorSet,
    igg_now: &PhasorSet,
    igg_delayed: &PhasorSet,
) -> Result<PowerPair> {
    let w0 = vgf_now.omega0();
    for set in [vgf_delayed, igg_now, igg_delayed] {
        if (set.omega0() - w0).abs() > 1e-12 * w0 {
            return Err(Error::invalid("phasor sets have different fundamentals"));
        }
    }
    let mut p = Complex64::new(0.0, 0.0);
    let mut q = Complex64::new(0.0, 0.0);
    for k in [-1, 1] {
        p += vgf_now.get(k) * igg_now.get(-k) + vgf_delayed.get(k) * igg_delayed.get(-k);
        q += -(k as f64) * vgf_delayed.get(k) * igg_delayed.get(-k);
    }
    p *= 0.5;
    q *= Complex64::i();
    let scale = [vgf_now, vgf_delayed]
        .iter()
        .map(|s| s.get(1).norm().max(s.get(-1).norm()))
        .fold(0.0, f64::max)
        * [igg_now, igg_delayed]
            .iter()
            .map(|s| s.get(1).norm().max(s.get(-1).norm()))
            .fold(0.0, f64::max);
    let tol = 1e-12 * scale.max(1.0);
    if p.im.abs() > tol || q.im.abs() > tol {
        return Err(Error::InternalConsistency(format!(
            "average power has imaginary residue ({:.3e}, {:.3e})",
            p.im, q.im
        )));
    }
    Ok(PowerPair { p: p.re, q: q.re })
}

/// [`dp_average_power`] specialised to fundamental phasors given by their
/// k = +1 value. Used inside the simulators.
pub fn fundamental_average_power(
    v1: Complex64,
    v1_delayed: Complex64,
    i1: Complex64,
    i1_delayed: Complex64,
) -> PowerPair {
    let now = v1 * i1.conj();
    let before = v1_delayed * i1_delayed.conj();
    PowerPair {
        p: now.re + before.re,
        q: 2.0 * before.im,
    }
}

/// Values a [`DelayLine`] can carry.
pub trait Sample: Copy + Add<Output = Self> + Mul<f64, Output = Self> {}

impl Sample for f64 {}
impl Sample for Complex64 {}

/// Fixed transport delay on a uniform time grid.
///
/// The delay is an exact multiple of the step, so reads at grid points return
/// the stored sample unchanged. The buffer is pre-filled from a history
/// function covering the interval before the first write.
#[derive(Debug, Clone)]
pub struct DelayLine<T> {
    step: f64,
    slots: usize,
    // oldest first: x(t - delay - h), x(t - delay), ..., x(t - h)
    buffer: VecDeque<T>,
}

impl<T: Sample> DelayLine<T> {
    /// Creates a delay of `delay` seconds on a grid of `step` seconds, with
    /// `history(tau)` supplying values for `tau < 0`.
    pub fn new(delay: f64, step: f64, history: impl Fn(f64) -> T) -> Result<Self> {
        if !(step > 0.0 && delay > 0.0) {
            return Err(Error::invalid("delay and step must be positive"));
        }
        let slots = (delay / step).round() as usize;
        if slots < 3 || (slots as f64 * step - delay).abs() > 1e-9 * delay {
            return Err(Error::invalid(format!(
                "step {step} does not divide delay {delay} into at least 3 slots"
            )));
        }
        let buffer = (0..=slots)
            .map(|m| history(-((slots + 1 - m) as f64) * step))
            .collect();
        Ok(Self {
            step,
            slots,
            buffer,
        })
    }

    /// Number of steps in the delay.
    pub fn len(&self) -> usize {
        self.slots
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn delay(&self) -> f64 {
        self.slots as f64 * self.step
    }

    /// `x(t - delay)`, where `t` is the time of the next [`push`](Self::push).
    pub fn delayed(&self) -> T {
        self.buffer[1]
    }

    /// `x(t - delay + h/2)` by four-point cubic interpolation.
    pub fn delayed_half(&self) -> T {
        let b = &self.buffer;
        (b[1] + b[2]) * (9.0 / 16.0) + (b[0] + b[3]) * (-1.0 / 16.0)
    }

    /// `x(t - delay + h)`.
    pub fn delayed_next(&self) -> T {
        self.buffer[2]
    }

    /// Records `x(t)` and advances the line by one step.
    pub fn push(&mut self, x: T) {
        self.buffer.pop_front();
        self.buffer.push_back(x);
    }
}
