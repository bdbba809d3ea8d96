//! Fixed-step simulation of the converter under the four model variants:
//! the time-domain reference, the dynamic phasor model, and the two
//! linearized baselines.

mod analysis;
mod baseline;
mod phasor;
mod time_domain;
mod trace;

pub use analysis::{
    centered_moving_average, compare_traces, detect_divergence, window_envelopes, Classification,
    TraceComparison, GROWTH_FACTOR, GROWTH_WINDOWS,
};
pub use baseline::{run_baseline, StateSpace};
pub use phasor::{phasor_frequency_response, run_dynamic_phasor};
pub use time_domain::run_time_domain;
pub use trace::{read_trace_csv, write_trace_csv, SimTrace, TraceMeta};

use crate::control::VsmParams;
use crate::error::{Error, Result};
use crate::plant::CircuitParams;
use crate::small_signal::ModelVariant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimVariant {
    /// Instantaneous waveforms with exact quarter-period delays.
    TimeDomain,
    /// Fundamental dynamic phasors with delayed phasor power measurement.
    DynamicPhasor,
    /// Linearized loop with constant power gains.
    BaselineStatic,
    /// Linearized loop with line dynamics but no measurement delay.
    BaselineLineDynamics,
}

impl SimVariant {
    pub const ALL: [SimVariant; 4] = [
        SimVariant::TimeDomain,
        SimVariant::DynamicPhasor,
        SimVariant::BaselineStatic,
        SimVariant::BaselineLineDynamics,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SimVariant::TimeDomain => "timedomain",
            SimVariant::DynamicPhasor => "phasor",
            SimVariant::BaselineStatic => "static",
            SimVariant::BaselineLineDynamics => "line",
        }
    }

    /// Default integration step. Both nonlinear steps divide the 5 ms
    /// quarter period of a 50 Hz system.
    pub fn default_step(self) -> f64 {
        match self {
            SimVariant::TimeDomain => 10e-6,
            _ => 50e-6,
        }
    }

    /// Linear model used by the baseline variants.
    pub fn linear_model(self) -> Option<ModelVariant> {
        match self {
            SimVariant::BaselineStatic => Some(ModelVariant::StaticGains),
            SimVariant::BaselineLineDynamics => Some(ModelVariant::LineDynamicsOnly),
            _ => None,
        }
    }
}

impl std::str::FromStr for SimVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "timedomain" | "time-domain" | "detailed" => Ok(SimVariant::TimeDomain),
            "phasor" | "dynamic-phasor" | "proposed" => Ok(SimVariant::DynamicPhasor),
            "static" | "baseline-static" => Ok(SimVariant::BaselineStatic),
            "line" | "baseline-line" => Ok(SimVariant::BaselineLineDynamics),
            other => Err(Error::invalid(format!(
                "unknown simulation variant '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for SimVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamChange {
    ActivePowerRef(f64),
    ReactivePowerRef(f64),
    Damping(f64),
}

impl ParamChange {
    pub fn apply(self, vp: &mut VsmParams) {
        match self {
            ParamChange::ActivePowerRef(p) => vp.p_ref = p,
            ParamChange::ReactivePowerRef(q) => vp.q_ref = q,
            ParamChange::Damping(d) => vp.d_g = d,
        }
    }
}

/// Parameter change taking effect at the first grid point at or after `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub change: ParamChange,
}

/// Active power reference pulse: `p_ref + delta` on `[start, start + width)`.
pub fn power_pulse(p_ref: f64, delta: f64, start: f64, width: f64) -> Vec<Event> {
    vec![
        Event {
            time: start,
            change: ParamChange::ActivePowerRef(p_ref + delta),
        },
        Event {
            time: start + width,
            change: ParamChange::ActivePowerRef(p_ref),
        },
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub step: f64,
    pub duration: f64,
    pub variant: SimVariant,
    pub circuit: CircuitParams,
    /// Controller parameters at `t = 0`; the run starts at their operating point.
    pub control: VsmParams,
    pub events: Vec<Event>,
    /// Record every `decimation`-th step.
    pub decimation: usize,
}

impl SimConfig {
    pub fn new(variant: SimVariant, circuit: CircuitParams, control: VsmParams) -> Self {
        Self {
            step: variant.default_step(),
            duration: 2.0,
            variant,
            circuit,
            control,
            events: Vec::new(),
            decimation: 1,
        }
    }

    pub fn with_duration(mut self, duration: f64) -> Self {
        self.duration = duration;
        self
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn with_events(mut self, events: Vec<Event>) -> Self {
        self.events = events;
        self
    }

    pub fn with_decimation(mut self, decimation: usize) -> Self {
        self.decimation = decimation;
        self
    }

    /// Record spacing of the produced trace.
    pub fn sample_interval(&self) -> f64 {
        self.step * self.decimation as f64
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.step).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.circuit.validate()?;
        self.control.validate()?;
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::invalid("step must be positive"));
        }
        if self.decimation == 0 {
            return Err(Error::invalid("decimation must be at least 1"));
        }
        let period = self.circuit.period();
        if !(self.duration >= 10.0 * period * (1.0 - 1e-12)) {
            return Err(Error::invalid(format!(
                "duration {} s is shorter than ten fundamental periods",
                self.duration
            )));
        }
        if matches!(
            self.variant,
            SimVariant::TimeDomain | SimVariant::DynamicPhasor
        ) {
            let slots = self.circuit.quarter_period() / self.step;
            if (slots - slots.round()).abs() > 1e-9 * slots || slots.round() < 3.0 {
                return Err(Error::invalid(format!(
                    "step {} s does not divide the quarter period",
                    self.step
                )));
            }
        }
        if self.events.iter().any(|e| !(e.time >= 0.0)) {
            return Err(Error::invalid("event times must be non-negative"));
        }
        Ok(())
    }
}

/// Runs whichever simulator matches `cfg.variant`.
pub fn run(cfg: &SimConfig) -> Result<SimTrace> {
    match cfg.variant {
        SimVariant::TimeDomain => run_time_domain(cfg),
        SimVariant::DynamicPhasor => run_dynamic_phasor(cfg),
        SimVariant::BaselineStatic | SimVariant::BaselineLineDynamics => run_baseline(cfg),
    }
}

/// Applies due events in time order.
pub(crate) struct EventQueue {
    events: Vec<Event>,
    next: usize,
}

impl EventQueue {
    pub(crate) fn new(events: &[Event]) -> Self {
        let mut events = events.to_vec();
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        Self { events, next: 0 }
    }

    /// Applies every event with `time <= t` (up to half a step of rounding).
    pub(crate) fn apply_due(&mut self, t: f64, h: f64, vp: &mut VsmParams) {
        while let Some(e) = self.events.get(self.next) {
            if e.time > t + 0.5 * h {
                break;
            }
            e.change.apply(vp);
            self.next += 1;
        }
    }
}

/// Which point of an RK4 step a stage is evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stage {
    Half,
    Full,
}

/// Classical fourth-order Runge-Kutta step, given the first-stage slope.
pub(crate) fn rk4_step<const N: usize>(
    y: &[f64; N],
    h: f64,
    k1: &[f64; N],
    mut f: impl FnMut(Stage, &[f64; N]) -> [f64; N],
) -> [f64; N] {
    let shift = |k: &[f64; N], a: f64| {
        let mut out = *y;
        for (o, d) in out.iter_mut().zip(k) {
            *o += a * d;
        }
        out
    };
    let k2 = f(Stage::Half, &shift(k1, 0.5 * h));
    let k3 = f(Stage::Half, &shift(&k2, 0.5 * h));
    let k4 = f(Stage::Full, &shift(&k3, h));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// A run stops once power leaves this multiple of rated power.
pub const POWER_LIMIT_FACTOR: f64 = 10.0;

pub(crate) fn out_of_bounds(p: f64, s_0: f64, state: &[f64]) -> bool {
    !p.is_finite() || p.abs() > POWER_LIMIT_FACTOR * s_0 || state.iter().any(|v| !v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_matches_exponential() {
        // y' = -y over one unit
        let mut y = [1.0];
        let h = 0.01;
        for _ in 0..100 {
            let k1 = [-y[0]];
            y = rk4_step(&y, h, &k1, |_, s| [-s[0]]);
        }
        assert!((y[0] - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn config_validation() {
        let cp = crate::profile::table1_circuit();
        let vp = crate::profile::table1_control();
        let ok = SimConfig::new(SimVariant::TimeDomain, cp, vp);
        assert!(ok.validate().is_ok());
        assert!(ok.clone().with_step(3e-5).validate().is_err());
        assert!(ok.clone().with_duration(0.1).validate().is_err());
        assert!(ok.clone().with_decimation(0).validate().is_err());
        let baseline = SimConfig::new(SimVariant::BaselineStatic, cp, vp).with_step(3e-5);
        assert!(baseline.validate().is_ok());
    }

    #[test]
    fn events_apply_in_order() {
        let mut vp = crate::profile::table1_control();
        let mut q = EventQueue::new(&power_pulse(250.0, 100.0, 0.1, 0.1));
        q.apply_due(0.05, 1e-3, &mut vp);
        assert_eq!(vp.p_ref, 250.0);
        q.apply_due(0.1, 1e-3, &mut vp);
        assert_eq!(vp.p_ref, 350.0);
        q.apply_due(0.2, 1e-3, &mut vp);
        assert_eq!(vp.p_ref, 250.0);
    }

    #[test]
    fn variant_names_parse() {
        for v in SimVariant::ALL {
            assert_eq!(v.name().parse::<SimVariant>().unwrap(), v);
        }
        assert!("bogus".parse::<SimVariant>().is_err());
    }
}
