//! Post-processing of simulation traces.

use crate::error::{Error, Result};

use super::trace::SimTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    Stable,
    Diverging,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::Stable => "Stable",
            Classification::Diverging => "Diverging",
        })
    }
}

/// Window-to-window envelope ratio that counts as growth.
pub const GROWTH_FACTOR: f64 = 1.1;
/// Consecutive growing windows needed to call a trace diverging.
pub const GROWTH_WINDOWS: usize = 3;

/// Peak-to-peak active power in consecutive windows of `window_periods`
/// fundamental periods. Only complete windows are returned.
pub fn window_envelopes(trace: &SimTrace, window_periods: usize) -> Vec<f64> {
    let Some(&start) = trace.t.first() else {
        return Vec::new();
    };
    let width = window_periods as f64 * trace.period();
    let end = *trace.t.last().unwrap_or(&start);
    let count = ((end - start) / width + 1e-9).floor() as usize;
    let mut lo = vec![f64::INFINITY; count];
    let mut hi = vec![f64::NEG_INFINITY; count];
    for (&t, &p) in trace.t.iter().zip(&trace.p_g) {
        let w = ((t - start) / width).floor() as usize;
        if w < count {
            lo[w] = lo[w].min(p);
            hi[w] = hi[w].max(p);
        }
    }
    lo.iter().zip(&hi).map(|(l, h)| h - l).collect()
}

/// Classifies a trace from its windowed active-power envelope.
///
/// Diverging when the run was truncated, when the last window's peak-to-peak
/// exceeds `threshold * S0`, or when the envelope grew by more than
/// [`GROWTH_FACTOR`] over each of the last [`GROWTH_WINDOWS`] window pairs.
pub fn detect_divergence(
    trace: &SimTrace,
    window_periods: usize,
    threshold: f64,
) -> Result<Classification> {
    if window_periods == 0 {
        return Err(Error::invalid("window must span at least one period"));
    }
    if trace.truncated() {
        return Ok(Classification::Diverging);
    }
    let env = window_envelopes(trace, window_periods);
    if env.len() < 3 {
        return Err(Error::invalid(format!(
            "trace spans {} windows of {window_periods} periods, need 3",
            env.len()
        )));
    }
    let s_0 = trace.meta.s_0;
    if env[env.len() - 1] > threshold * s_0 {
        return Ok(Classification::Diverging);
    }
    let floor = 1e-9 * s_0;
    let growing = env
        .windows(2)
        .rev()
        .take_while(|w| w[0] > floor && w[1] > GROWTH_FACTOR * w[0])
        .count();
    if growing >= GROWTH_WINDOWS {
        Ok(Classification::Diverging)
    } else {
        Ok(Classification::Stable)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceComparison {
    pub rmse: f64,
    pub max_abs: f64,
    /// `b - a` at the last common sample.
    pub final_offset: f64,
}

fn interpolate(t: &[f64], v: &[f64], at: f64) -> f64 {
    let k = t.partition_point(|&x| x <= at);
    if k == 0 {
        return v[0];
    }
    if k == t.len() {
        return v[k - 1];
    }
    let (t0, t1) = (t[k - 1], t[k]);
    let w = (at - t0) / (t1 - t0);
    v[k - 1] + w * (v[k] - v[k - 1])
}

/// Active-power agreement of two traces on `a`'s time grid over
/// `[t_start, end]`; `b` is linearly interpolated.
pub fn compare_traces(a: &SimTrace, b: &SimTrace, t_start: f64) -> Result<TraceComparison> {
    let (Some(&b_first), Some(&b_last)) = (b.t.first(), b.t.last()) else {
        return Err(Error::invalid("empty trace"));
    };
    let from = t_start.max(b_first);
    let diffs: Vec<f64> =
        a.t.iter()
            .zip(&a.p_g)
            .filter(|(t, _)| **t >= from && **t <= b_last)
            .map(|(&t, &p)| interpolate(&b.t, &b.p_g, t) - p)
            .collect();
    if diffs.is_empty() {
        return Err(Error::invalid("traces do not overlap after t_start"));
    }
    let rmse = (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt();
    let max_abs = diffs.iter().fold(0.0, |m: f64, d| m.max(d.abs()));
    Ok(TraceComparison {
        rmse,
        max_abs,
        final_offset: *diffs.last().unwrap_or(&0.0),
    })
}

/// Average of every column over the window `[t - T0/2, t + T0/2]`
/// (trapezoid rule), i.e. the zeroth dynamic phasor of each signal. Samples
/// closer than half a period to either end are dropped.
pub fn centered_moving_average(trace: &SimTrace) -> Result<SimTrace> {
    if trace.len() < 2 {
        return Err(Error::invalid("trace too short to average"));
    }
    let dt = trace.t[1] - trace.t[0];
    let per_window = trace.period() / dt;
    let n = per_window.round() as usize;
    if n < 2 || !n.is_multiple_of(2) || (per_window - n as f64).abs() > 1e-6 * per_window {
        return Err(Error::invalid(
            "sample spacing must divide the period into an even count",
        ));
    }
    let half = n / 2;
    if trace.len() <= n {
        return Err(Error::invalid("trace shorter than one period"));
    }
    let mut out = SimTrace::new(trace.meta);
    let src = trace.columns();
    let dst = out.columns_mut();
    for (col, (s, d)) in src.iter().zip(dst).enumerate() {
        // running sums keep this linear in the trace length
        let mut prefix = Vec::with_capacity(s.len() + 1);
        prefix.push(0.0);
        for v in s.iter() {
            prefix.push(prefix.last().unwrap() + v);
        }
        for k in half..s.len() - half {
            if col == 0 {
                d.push(s[k]);
                continue;
            }
            let (lo, hi) = (k - half, k + half);
            let inner = prefix[hi + 1] - prefix[lo];
            let avg = (inner - 0.5 * (s[lo] + s[hi])) / n as f64;
            d.push(avg);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::trace::TraceMeta;
    use crate::sim::SimVariant;
    use std::f64::consts::PI;

    fn synthetic(duration: f64, dt: f64, f: impl Fn(f64) -> f64) -> SimTrace {
        let mut trace = SimTrace::new(TraceMeta {
            variant: SimVariant::TimeDomain,
            s_0: 1000.0,
            omega0: 2.0 * PI * 50.0,
            truncated_at: None,
        });
        let n = (duration / dt).round() as usize;
        for k in 0..=n {
            let t = k as f64 * dt;
            trace.t.push(t);
            trace.p_g.push(f(t));
            for c in [
                &mut trace.q_g,
                &mut trace.v_gf_am,
                &mut trace.phi_g,
                &mut trace.omega_dev,
                &mut trace.i_gg,
            ] {
                c.push(0.0);
            }
        }
        trace
    }

    #[test]
    fn constant_is_stable() {
        let trace = synthetic(2.0, 1e-3, |_| 250.0);
        assert_eq!(
            detect_divergence(&trace, 10, 0.5).unwrap(),
            Classification::Stable
        );
    }

    #[test]
    fn exponential_growth_diverges() {
        let trace = synthetic(2.0, 1e-3, |t| {
            10.0 * (t / 0.2).exp() * (2.0 * PI * 8.0 * t).sin()
        });
        assert_eq!(
            detect_divergence(&trace, 10, 0.5).unwrap(),
            Classification::Diverging
        );
        // slow growth below the threshold is caught by the growth rule
        let slow = synthetic(2.0, 1e-3, |t| {
            1.0 * (t / 0.5).exp() * (2.0 * PI * 8.0 * t).sin()
        });
        assert_eq!(
            detect_divergence(&slow, 25, 0.5).unwrap(),
            Classification::Diverging
        );
    }

    #[test]
    fn decaying_oscillation_is_stable() {
        let trace = synthetic(4.0, 1e-3, |t| {
            250.0 + 50.0 * (-t).exp() * (2.0 * PI * 2.0 * t).sin()
        });
        assert_eq!(
            detect_divergence(&trace, 25, 0.5).unwrap(),
            Classification::Stable
        );
    }

    #[test]
    fn too_short_trace() {
        let trace = synthetic(0.5, 1e-3, |_| 0.0);
        assert!(detect_divergence(&trace, 10, 0.5).is_err());
    }

    #[test]
    fn compare_examples() {
        let a = synthetic(1.0, 1e-3, |t| (10.0 * t).sin());
        let same = compare_traces(&a, &a, 0.0).unwrap();
        assert_eq!(same.rmse, 0.0);
        assert_eq!(same.max_abs, 0.0);
        assert_eq!(same.final_offset, 0.0);
        let b = synthetic(1.0, 1e-3, |t| (10.0 * t).sin() + 1.0);
        let c = compare_traces(&a, &b, 0.0).unwrap();
        assert!((c.max_abs - 1.0).abs() < 1e-12);
        assert!((c.final_offset - 1.0).abs() < 1e-12);
        assert!(compare_traces(&a, &b, 5.0).is_err());
    }

    #[test]
    fn moving_average_removes_ripple() {
        let trace = synthetic(0.2, 1e-4, |t| 250.0 + 40.0 * (2.0 * PI * 100.0 * t).cos());
        let avg = centered_moving_average(&trace).unwrap();
        assert!((avg.t[0] - 0.01).abs() < 1e-12);
        for p in &avg.p_g {
            assert!((p - 250.0).abs() < 1e-9);
        }
    }
}
