//! Built-in parameter profile of the reference single-phase converter.

use std::f64::consts::{PI, SQRT_2};

use crate::control::VsmParams;
use crate::plant::CircuitParams;

pub const RATED_VOLTAGE_RMS: f64 = 110.0;
pub const LINE_FREQUENCY_HZ: f64 = 50.0;
pub const RATED_POWER_VA: f64 = 1000.0;
pub const ACTIVE_POWER_REF_W: f64 = 250.0;
pub const REACTIVE_POWER_REF_VAR: f64 = 0.0;
pub const LINE_INDUCTANCE_H: f64 = 8e-3;
pub const LINE_RESISTANCE_OHM: f64 = 0.3;
pub const DROOP_GAIN: f64 = 0.05;
pub const INERTIA_S: f64 = 5.0;
pub const DAMPING: f64 = 10.0;

pub fn rms_to_amplitude(rms: f64) -> f64 {
    rms * SQRT_2
}

pub fn amplitude_to_rms(amplitude: f64) -> f64 {
    amplitude / SQRT_2
}

pub fn table1_circuit() -> CircuitParams {
    CircuitParams {
        l_gs: LINE_INDUCTANCE_H,
        r_gs: LINE_RESISTANCE_OHM,
        omega0: 2.0 * PI * LINE_FREQUENCY_HZ,
        v_s_amp: rms_to_amplitude(RATED_VOLTAGE_RMS),
    }
}

pub fn table1_control() -> VsmParams {
    VsmParams {
        h_g: INERTIA_S,
        d_g: DAMPING,
        s_0: RATED_POWER_VA,
        v_0_amp: rms_to_amplitude(RATED_VOLTAGE_RMS),
        k_q: DROOP_GAIN,
        p_ref: ACTIVE_POWER_REF_W,
        q_ref: REACTIVE_POWER_REF_VAR,
        omega0: 2.0 * PI * LINE_FREQUENCY_HZ,
    }
}
