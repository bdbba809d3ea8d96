//! The four-model stability comparison and the damping locus, run on the
//! Table I system.

use std::fmt;

use rayon::prelude::*;

use crate::control::VsmParams;
use crate::error::Result;
use crate::plant::CircuitParams;
use crate::sim::{
    self, detect_divergence, power_pulse, Classification, SimConfig, SimTrace, SimVariant,
};
use crate::small_signal::{analyze, sweep_parameter, LocusRow, ModelVariant, Stability};

/// Damping values compared across all models.
pub const DAMPING_CASES: [f64; 2] = [4.0, 10.0];

/// Locus sweep `start..=stop` in `step` increments.
pub const LOCUS_START: f64 = 4.0;
pub const LOCUS_STOP: f64 = 30.0;
pub const LOCUS_STEP: f64 = 2.0;

/// Length of the classification runs. The unstable mode at `D_g = 4` grows
/// at roughly 0.01 to 0.04 per second, so short runs cannot tell growth
/// from slow decay.
pub const RUN_DURATION: f64 = 75.0;
/// Envelope window for divergence detection, in fundamental periods (15 s
/// at 50 Hz, five windows per run).
pub const WINDOW_PERIODS: usize = 750;
pub const DIVERGENCE_THRESHOLD: f64 = 0.5;

/// Disturbance: active power reference raised by `PULSE_DELTA` watts on
/// `[PULSE_START, PULSE_START + PULSE_WIDTH)`.
pub const PULSE_DELTA: f64 = 100.0;
pub const PULSE_START: f64 = 0.1;
pub const PULSE_WIDTH: f64 = 0.1;

/// Sample interval of recorded traces.
pub const RECORD_INTERVAL: f64 = 1e-3;

pub fn locus_values() -> Vec<f64> {
    let n = ((LOCUS_STOP - LOCUS_START) / LOCUS_STEP).round() as usize;
    (0..=n)
        .map(|k| LOCUS_START + k as f64 * LOCUS_STEP)
        .collect()
}

/// Simulation with the standard pulse disturbance, default step and
/// millisecond recording.
pub fn disturbed_config(
    variant: SimVariant,
    cp: CircuitParams,
    vp: VsmParams,
    duration: f64,
) -> SimConfig {
    let decimation = ((RECORD_INTERVAL / variant.default_step()).round() as usize).max(1);
    SimConfig::new(variant, cp, vp)
        .with_duration(duration)
        .with_decimation(decimation)
        .with_events(power_pulse(vp.p_ref, PULSE_DELTA, PULSE_START, PULSE_WIDTH))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    Analytic(ModelVariant),
    Simulated(SimVariant),
}

impl Model {
    pub const ALL: [Model; 7] = [
        Model::Analytic(ModelVariant::Proposed),
        Model::Analytic(ModelVariant::StaticGains),
        Model::Analytic(ModelVariant::LineDynamicsOnly),
        Model::Simulated(SimVariant::TimeDomain),
        Model::Simulated(SimVariant::DynamicPhasor),
        Model::Simulated(SimVariant::BaselineStatic),
        Model::Simulated(SimVariant::BaselineLineDynamics),
    ];

    /// The outcome the comparison expects: only the models that keep the
    /// measurement delay lose stability, and only at the low damping.
    pub fn expected_unstable(self, d_g: f64) -> bool {
        let keeps_delay = matches!(
            self,
            Model::Analytic(ModelVariant::Proposed)
                | Model::Simulated(SimVariant::TimeDomain | SimVariant::DynamicPhasor)
        );
        keeps_delay && d_g < 6.0
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Analytic(v) => write!(f, "analytic/{}", v.name()),
            Model::Simulated(v) => write!(f, "simulated/{}", v.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observation {
    Analytic(Stability),
    Simulated(Classification),
}

impl Observation {
    /// `None` for a marginal verdict, which matches neither expectation.
    pub fn is_unstable(self) -> Option<bool> {
        match self {
            Observation::Analytic(Stability::Unstable) => Some(true),
            Observation::Analytic(Stability::Stable) => Some(false),
            Observation::Analytic(Stability::Marginal) => None,
            Observation::Simulated(c) => Some(c == Classification::Diverging),
        }
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observation::Analytic(s) => write!(f, "{s}"),
            Observation::Simulated(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub model: Model,
    pub d_g: f64,
    pub expected_unstable: bool,
    pub observed: Result<Observation>,
}

impl Cell {
    pub fn matches(&self) -> bool {
        matches!(&self.observed, Ok(o) if o.is_unstable() == Some(self.expected_unstable))
    }

    pub fn expected_label(&self) -> &'static str {
        match (self.model, self.expected_unstable) {
            (Model::Analytic(_), true) => "Unstable",
            (Model::Analytic(_), false) => "Stable",
            (Model::Simulated(_), true) => "Diverging",
            (Model::Simulated(_), false) => "Stable",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Reproduction {
    pub cells: Vec<Cell>,
    pub locus: Vec<LocusRow>,
    /// Simulated traces keyed by variant and damping, in matrix order.
    pub traces: Vec<(SimVariant, f64, SimTrace)>,
}

impl Reproduction {
    pub fn mismatches(&self) -> Vec<&Cell> {
        self.cells.iter().filter(|c| !c.matches()).collect()
    }

    pub fn trace(&self, variant: SimVariant, d_g: f64) -> Option<&SimTrace> {
        self.traces
            .iter()
            .find(|(v, d, _)| *v == variant && *d == d_g)
            .map(|(_, _, t)| t)
    }

    /// Plain-text agreement matrix, one line per cell and a summary line.
    pub fn report(&self) -> String {
        let mut out = String::new();
        for c in &self.cells {
            let observed = match &c.observed {
                Ok(o) => o.to_string(),
                Err(e) => format!("error: {e}"),
            };
            out.push_str(&format!(
                "{:<24} D_g={:<4} expected={:<9} observed={:<9} {}\n",
                c.model.to_string(),
                c.d_g,
                c.expected_label(),
                observed,
                if c.matches() { "ok" } else { "MISMATCH" }
            ));
        }
        let bad = self.mismatches().len();
        if bad == 0 {
            out.push_str("agreement matrix: all cells match\n");
        } else {
            out.push_str(&format!("agreement matrix: {bad} mismatching cell(s)\n"));
        }
        out
    }
}

fn simulate_cell(
    variant: SimVariant,
    d_g: f64,
    cp: CircuitParams,
    vp: VsmParams,
) -> (Result<Observation>, Option<SimTrace>) {
    let cfg = disturbed_config(variant, cp, vp.with_damping(d_g), RUN_DURATION);
    match sim::run(&cfg) {
        Ok(trace) => {
            let observed = detect_divergence(&trace, WINDOW_PERIODS, DIVERGENCE_THRESHOLD)
                .map(Observation::Simulated);
            (observed, Some(trace))
        }
        Err(e) => (Err(e), None),
    }
}

/// Runs every model at each damping case plus the proposed-model locus.
/// Simulations run in parallel; the result order is fixed.
pub fn reproduce(cp: &CircuitParams, vp: &VsmParams) -> Result<Reproduction> {
    let jobs: Vec<(Model, f64)> = Model::ALL
        .iter()
        .flat_map(|&m| DAMPING_CASES.iter().map(move |&d| (m, d)))
        .collect();
    let results: Vec<(Cell, Option<SimTrace>)> = jobs
        .par_iter()
        .map(|&(model, d_g)| {
            let (observed, trace) = match model {
                Model::Analytic(v) => (
                    analyze(cp, &vp.with_damping(d_g), v)
                        .map(|a| Observation::Analytic(a.verdict())),
                    None,
                ),
                Model::Simulated(v) => simulate_cell(v, d_g, *cp, *vp),
            };
            let cell = Cell {
                model,
                d_g,
                expected_unstable: model.expected_unstable(d_g),
                observed,
            };
            (cell, trace)
        })
        .collect();
    let locus = sweep_parameter(
        vp,
        &locus_values(),
        cp,
        cp.quarter_period(),
        ModelVariant::Proposed,
    )?;
    let mut cells = Vec::with_capacity(results.len());
    let mut traces = Vec::new();
    for (cell, trace) in results {
        if let (Model::Simulated(v), Some(t)) = (cell.model, trace) {
            traces.push((v, cell.d_g, t));
        }
        cells.push(cell);
    }
    Ok(Reproduction {
        cells,
        locus,
        traces,
    })
}
