//! Virtual synchronous machine (active power) and droop (reactive power)
//! controllers, and the steady state they settle to.

use log::debug;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::plant::{steady_state_current, CircuitParams};
use crate::power::{fundamental_average_power, PowerPair};

/// Controller constants. Voltages are peak amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VsmParams {
    /// Inertia constant (s).
    pub h_g: f64,
    /// Damping coefficient, dimensionless.
    pub d_g: f64,
    /// Rated power (VA).
    pub s_0: f64,
    /// Rated voltage amplitude (V peak).
    pub v_0_amp: f64,
    /// Reactive power droop gain.
    pub k_q: f64,
    pub p_ref: f64,
    pub q_ref: f64,
    pub omega0: f64,
}

impl VsmParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.h_g,
            self.d_g,
            self.s_0,
            self.v_0_amp,
            self.k_q,
            self.p_ref,
            self.q_ref,
            self.omega0,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("controller parameters must be finite"));
        }
        if self.h_g <= 0.0 || self.s_0 <= 0.0 || self.v_0_amp <= 0.0 || self.omega0 <= 0.0 {
            return Err(Error::invalid(
                "inertia, rated power, rated voltage and omega0 must be positive",
            ));
        }
        Ok(())
    }

    /// Voltage droop slope in V per var.
    pub fn k_q1(&self) -> f64 {
        self.v_0_amp * self.k_q / self.s_0
    }

    pub fn with_damping(self, d_g: f64) -> Self {
        Self { d_g, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControllerState {
    /// Phase of the converter voltage relative to the grid (rad).
    pub phi_g: f64,
    /// Virtual rotor speed deviation (rad/s).
    pub omega_dev: f64,
}

/// Swing-equation derivatives `(dphi/dt, domega_dev/dt)`.
pub fn apc_derivative(state: ControllerState, p_g: f64, vp: &VsmParams) -> (f64, f64) {
    let domega =
        (vp.omega0 * (vp.p_ref - p_g) / vp.s_0 - vp.d_g * state.omega_dev) / (2.0 * vp.h_g);
    (state.omega_dev, domega)
}

/// Voltage amplitude commanded by the reactive power droop.
pub fn rpc_output(q_g: f64, vp: &VsmParams) -> f64 {
    vp.v_0_amp + vp.k_q1() * (vp.q_ref - q_g)
}

/// Steady-state average power delivered at converter amplitude `v` and
/// phase `phi`, with the delayed phasors equal to the present ones.
pub fn steady_power(v: f64, phi: f64, cp: &CircuitParams) -> Result<PowerPair> {
    let i1 = steady_state_current(v, phi, cp)?;
    let v1 = Complex64::from_polar(v / 2.0, phi);
    Ok(fundamental_average_power(v1, v1, i1, i1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub v_gf_am: f64,
    pub phi_g: f64,
    /// `<I_gg>_1` at the operating point.
    pub i1: Complex64,
    pub p: f64,
    pub q: f64,
    /// Final residuals `(P - p_ref, V - droop(Q))`.
    pub residual: [f64; 2],
    pub iterations: usize,
    pub converged: bool,
}

impl OperatingPoint {
    /// `<V_gf>_1`.
    pub fn v1(&self) -> Complex64 {
        Complex64::from_polar(self.v_gf_am / 2.0, self.phi_g)
    }
}

pub const MAX_NEWTON_ITERATIONS: usize = 50;
const FD_STEP: f64 = 1e-6;

fn residuals(v: f64, phi: f64, cp: &CircuitParams, vp: &VsmParams) -> Result<[f64; 2]> {
    let pq = steady_power(v, phi, cp)?;
    Ok([pq.p - vp.p_ref, v - rpc_output(pq.q, vp)])
}

/// Newton solve for the amplitude and phase at which the swing equation is at
/// rest (`P = p_ref`) and the amplitude sits on the droop line.
pub fn solve_operating_point(cp: &CircuitParams, vp: &VsmParams) -> Result<OperatingPoint> {
    cp.validate()?;
    vp.validate()?;
    let tol = 1e-9 * vp.s_0;
    let mut v = vp.v_0_amp;
    let mut phi = 2.0 * vp.p_ref * cp.x_gs() / (vp.v_0_amp * vp.v_0_amp);
    let mut r = residuals(v, phi, cp, vp)?;
    let mut iterations = 0;
    let norm = |r: &[f64; 2]| r[0].abs().max(r[1].abs());

    while norm(&r) >= tol {
        if iterations == MAX_NEWTON_ITERATIONS {
            return Err(Error::NoOperatingPoint {
                iterations,
                residual: norm(&r),
            });
        }
        let rv_plus = residuals(v + FD_STEP, phi, cp, vp)?;
        let rv_minus = residuals(v - FD_STEP, phi, cp, vp)?;
        let rp_plus = residuals(v, phi + FD_STEP, cp, vp)?;
        let rp_minus = residuals(v, phi - FD_STEP, cp, vp)?;
        let j = [
            [
                (rv_plus[0] - rv_minus[0]) / (2.0 * FD_STEP),
                (rp_plus[0] - rp_minus[0]) / (2.0 * FD_STEP),
            ],
            [
                (rv_plus[1] - rv_minus[1]) / (2.0 * FD_STEP),
                (rp_plus[1] - rp_minus[1]) / (2.0 * FD_STEP),
            ],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::NoOperatingPoint {
                iterations,
                residual: norm(&r),
            });
        }
        let dv = -(j[1][1] * r[0] - j[0][1] * r[1]) / det;
        let dphi = -(-j[1][0] * r[0] + j[0][0] * r[1]) / det;
        v += dv;
        phi += dphi;
        iterations += 1;
        if !(v.is_finite() && phi.is_finite()) {
            return Err(Error::NoOperatingPoint {
                iterations,
                residual: f64::INFINITY,
            });
        }
        r = residuals(v, phi, cp, vp)?;
        debug!("newton {iterations}: v={v:.9} phi={phi:.9} r={r:?}");
    }

    if phi.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::OutOfRange(format!(
            "operating angle {phi:.4} rad outside (-pi/2, pi/2)"
        )));
    }
    if v <= 0.0 {
        return Err(Error::OutOfRange(format!(
            "operating amplitude {v:.4} V is not positive"
        )));
    }
    let pq = steady_power(v, phi, cp)?;
    Ok(OperatingPoint {
        v_gf_am: v,
        phi_g: phi,
        i1: steady_state_current(v, phi, cp)?,
        p: pq.p,
        q: pq.q,
        residual: r,
        iterations,
        converged: true,
    })
}
