//! JSON scenario files. Voltages are given in rms and converted to
//! amplitudes when the scenario is turned into model parameters.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{bail, Context, Result};
use gfmc_core::profile;
use gfmc_core::reproduce::{self, PULSE_DELTA, PULSE_START, PULSE_WIDTH};
use gfmc_core::sim::{Event, ParamChange, SimConfig};
use gfmc_core::{CircuitParams, ModelVariant, SimVariant, VsmParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Circuit {
    pub v_s_rms: f64,
    pub frequency_hz: f64,
    pub l_gs: f64,
    pub r_gs: f64,
}

impl Default for Circuit {
    fn default() -> Self {
        Self {
            v_s_rms: profile::RATED_VOLTAGE_RMS,
            frequency_hz: profile::LINE_FREQUENCY_HZ,
            l_gs: profile::LINE_INDUCTANCE_H,
            r_gs: profile::LINE_RESISTANCE_OHM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Control {
    pub h_g: f64,
    pub d_g: f64,
    pub s_0: f64,
    pub v_0_rms: f64,
    pub k_q: f64,
    pub p_ref: f64,
    pub q_ref: f64,
}

impl Default for Control {
    fn default() -> Self {
        Self {
            h_g: profile::INERTIA_S,
            d_g: profile::DAMPING,
            s_0: profile::RATED_POWER_VA,
            v_0_rms: profile::RATED_VOLTAGE_RMS,
            k_q: profile::DROOP_GAIN,
            p_ref: profile::ACTIVE_POWER_REF_W,
            q_ref: profile::REACTIVE_POWER_REF_VAR,
        }
    }
}

/// Step change of the active power reference, `delta` watts on
/// `[start, start + width)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pulse {
    pub delta: f64,
    pub start: f64,
    pub width: f64,
}

impl Default for Pulse {
    fn default() -> Self {
        Self {
            delta: PULSE_DELTA,
            start: PULSE_START,
            width: PULSE_WIDTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Simulation {
    pub variant: String,
    /// Integration step; the variant's default when absent.
    pub step: Option<f64>,
    pub duration: f64,
    /// Interval between recorded samples.
    pub record_interval: f64,
    /// Disturbance; `null` runs undisturbed from the operating point.
    pub pulse: Option<Pulse>,
}

impl Default for Simulation {
    fn default() -> Self {
        Self {
            variant: SimVariant::TimeDomain.name().to_string(),
            step: None,
            duration: reproduce::RUN_DURATION,
            record_interval: reproduce::RECORD_INTERVAL,
            pulse: Some(Pulse::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Analysis {
    pub variant: String,
    /// Envelope window for divergence detection, in periods. Shortened
    /// automatically when the run is too short for three windows.
    pub window_periods: usize,
    pub divergence_threshold: f64,
    pub stability_tol: f64,
}

impl Default for Analysis {
    fn default() -> Self {
        Self {
            variant: ModelVariant::Proposed.name().to_string(),
            window_periods: reproduce::WINDOW_PERIODS,
            divergence_threshold: reproduce::DIVERGENCE_THRESHOLD,
            stability_tol: gfmc_core::small_signal::DEFAULT_STABILITY_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub circuit: Circuit,
    pub control: Control,
    pub simulation: Simulation,
    pub analysis: Analysis,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).context("invalid scenario")?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read scenario {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.circuit()?;
        self.control()?.validate()?;
        self.sim_variant()?;
        self.model_variant()?;
        if !(self.simulation.duration > 0.0 && self.simulation.record_interval > 0.0) {
            bail!("simulation duration and record_interval must be positive");
        }
        if self.analysis.window_periods == 0 {
            bail!("analysis.window_periods must be at least 1");
        }
        Ok(())
    }

    pub fn omega0(&self) -> f64 {
        2.0 * PI * self.circuit.frequency_hz
    }

    pub fn circuit(&self) -> Result<CircuitParams> {
        let c = &self.circuit;
        Ok(CircuitParams::new(
            c.l_gs,
            c.r_gs,
            self.omega0(),
            profile::rms_to_amplitude(c.v_s_rms),
        )?)
    }

    pub fn control(&self) -> Result<VsmParams> {
        let c = &self.control;
        let vp = VsmParams {
            h_g: c.h_g,
            d_g: c.d_g,
            s_0: c.s_0,
            v_0_amp: profile::rms_to_amplitude(c.v_0_rms),
            k_q: c.k_q,
            p_ref: c.p_ref,
            q_ref: c.q_ref,
            omega0: self.omega0(),
        };
        vp.validate()?;
        Ok(vp)
    }

    pub fn sim_variant(&self) -> Result<SimVariant> {
        Ok(self.simulation.variant.parse()?)
    }

    pub fn model_variant(&self) -> Result<ModelVariant> {
        Ok(self.analysis.variant.parse()?)
    }

    pub fn sim_config(&self, variant: SimVariant, d_g: f64) -> Result<SimConfig> {
        let s = &self.simulation;
        let cp = self.circuit()?;
        let vp = self.control()?.with_damping(d_g);
        let step = s.step.unwrap_or_else(|| variant.default_step());
        let decimation = ((s.record_interval / step).round() as usize).max(1);
        let events = match s.pulse {
            Some(p) => vec![
                Event {
                    time: p.start,
                    change: ParamChange::ActivePowerRef(vp.p_ref + p.delta),
                },
                Event {
                    time: p.start + p.width,
                    change: ParamChange::ActivePowerRef(vp.p_ref),
                },
            ],
            None => Vec::new(),
        };
        let cfg = SimConfig::new(variant, cp, vp)
            .with_step(step)
            .with_duration(s.duration)
            .with_decimation(decimation)
            .with_events(events);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_table1() {
        let s = Scenario::from_json("{}").unwrap();
        let cp = s.circuit().unwrap();
        let vp = s.control().unwrap();
        assert_eq!(cp, profile::table1_circuit());
        assert_eq!(vp, profile::table1_control());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(Scenario::from_json(r#"{"circuit": {"l": 1.0}}"#).is_err());
        assert!(Scenario::from_json(r#"{"extra": {}}"#).is_err());
        assert!(Scenario::from_json(r#"{"simulation": {"pulse": {"delta": 1}}}"#).is_err());
    }

    #[test]
    fn rms_converted_to_amplitude() {
        let s = Scenario::from_json(r#"{"circuit": {"v_s_rms": 230.0}}"#).unwrap();
        assert!((s.circuit().unwrap().v_s_amp - 230.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn round_trip_is_identical() {
        let text = r#"{
            "circuit": {"v_s_rms": 120.1, "frequency_hz": 60.0, "l_gs": 0.0071, "r_gs": 0.21},
            "control": {"d_g": 7.3, "k_q": 0.033, "p_ref": 123.456789},
            "simulation": {"variant": "phasor", "step": 2.5e-5, "duration": 3.3, "pulse": null},
            "analysis": {"variant": "line", "window_periods": 40}
        }"#;
        let a = Scenario::from_json(text).unwrap();
        let b = Scenario::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.control().unwrap(), b.control().unwrap());
        assert_eq!(a.circuit().unwrap(), b.circuit().unwrap());
    }

    #[test]
    fn bad_values_rejected() {
        assert!(Scenario::from_json(r#"{"simulation": {"variant": "spice"}}"#).is_err());
        assert!(Scenario::from_json(r#"{"control": {"h_g": -1.0}}"#).is_err());
        assert!(Scenario::from_json(r#"{"circuit": {"l_gs": 0.0, "r_gs": 0.0}}"#).is_err());
    }

    #[test]
    fn sim_config_uses_scenario_pulse() {
        let s = Scenario::default();
        let cfg = s.sim_config(SimVariant::DynamicPhasor, 4.0).unwrap();
        assert_eq!(cfg.control.d_g, 4.0);
        assert_eq!(cfg.events.len(), 2);
        assert_eq!(cfg.decimation, 20);
    }
}
