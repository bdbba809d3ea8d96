//! Grid source, converter voltage and the lumped converter-to-grid line.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Electrical constants of the lumped circuit. All voltages are peak amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    /// Total series inductance between converter and grid source (H).
    pub l_gs: f64,
    /// Total series resistance (ohm).
    pub r_gs: f64,
    /// Fundamental angular frequency (rad/s).
    pub omega0: f64,
    /// Grid voltage amplitude (V peak).
    pub v_s_amp: f64,
}

impl CircuitParams {
    pub fn new(l_gs: f64, r_gs: f64, omega0: f64, v_s_amp: f64) -> Result<Self> {
        let p = Self {
            l_gs,
            r_gs,
            omega0,
            v_s_amp,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l_gs > 0.0 && self.l_gs.is_finite()) {
            return Err(Error::invalid("line inductance must be positive"));
        }
        if !(self.r_gs >= 0.0 && self.r_gs.is_finite()) {
            return Err(Error::invalid("line resistance must be non-negative"));
        }
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(Error::invalid("omega0 must be positive"));
        }
        if !(self.v_s_amp >= 0.0 && self.v_s_amp.is_finite()) {
            return Err(Error::invalid("grid voltage must be non-negative"));
        }
        Ok(())
    }

    /// Line reactance `w0 * L` at the fundamental.
    pub fn x_gs(&self) -> f64 {
        self.omega0 * self.l_gs
    }

    /// Line impedance seen by the k = +1 phasor.
    pub fn impedance(&self) -> Complex64 {
        Complex64::new(self.r_gs, self.x_gs())
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega0
    }

    /// Orthogonal-signal delay, a quarter of the fundamental period.
    pub fn quarter_period(&self) -> f64 {
        self.period() / 4.0
    }

    /// `<v_s>_1`, constant for a stiff grid.
    pub fn grid_phasor(&self) -> Complex64 {
        Complex64::new(self.v_s_amp / 2.0, 0.0)
    }
}

pub fn grid_voltage(t: f64, p: &CircuitParams) -> f64 {
    p.v_s_amp * (p.omega0 * t).cos()
}

pub fn synthesize_converter_voltage(v_am: f64, theta: f64) -> f64 {
    v_am * theta.cos()
}

/// `di/dt` of the line current from Kirchhoff's voltage law.
pub fn line_td_derivative(i: f64, v_gf: f64, v_s: f64, p: &CircuitParams) -> f64 {
    (v_gf - v_s - p.r_gs * i) / p.l_gs
}

/// `d<i_gg>_1/dt`; the k = -1 phasor is its conjugate.
pub fn line_dp_derivative(
    i1: Complex64,
    vgf1: Complex64,
    vs1: Complex64,
    p: &CircuitParams,
) -> Complex64 {
    (vgf1 - vs1 - p.impedance() * i1) / p.l_gs
}

/// Fixed point `<I_gg>_1` of [`line_dp_derivative`] for a converter voltage of
/// amplitude `v_gf_am` leading the grid by `phi`.
pub fn steady_state_current(v_gf_am: f64, phi: f64, p: &CircuitParams) -> Result<Complex64> {
    let z = p.impedance();
    if z.norm() == 0.0 {
        return Err(Error::SingularCircuit);
    }
    let drive = Complex64::from_polar(v_gf_am, phi) - p.v_s_amp;
    Ok(drive / (2.0 * z))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1() -> CircuitParams {
        CircuitParams::new(8e-3, 0.3, 2.0 * PI * 50.0, 110.0 * 2f64.sqrt()).unwrap()
    }

    #[test]
    fn grid_voltage_quarter_and_half_period() {
        let p = table1();
        assert!((grid_voltage(0.0, &p) - 155.563_491_861_040_46).abs() < 1e-9);
        assert!(grid_voltage(p.quarter_period(), &p).abs() < 1e-12);
        assert!((grid_voltage(p.period() / 2.0, &p) + p.v_s_amp).abs() < 1e-12);
    }

    #[test]
    fn converter_voltage() {
        assert_eq!(synthesize_converter_voltage(1.0, 0.0), 1.0);
        assert_eq!(synthesize_converter_voltage(0.0, 1.3), 0.0);
        let v = synthesize_converter_voltage(155.563, PI / 3.0);
        assert!((v - 77.7815).abs() < 1e-9);
    }

    #[test]
    fn td_derivative() {
        let p = table1();
        assert_eq!(line_td_derivative(0.0, 10.0, 10.0, &p), 0.0);
        assert!((line_td_derivative(0.0, 8.0, 0.0, &p) - 1000.0).abs() < 1e-9);
        assert!((line_td_derivative(1.0, 5.0, 5.0, &p) + 37.5).abs() < 1e-9);
    }

    #[test]
    fn dp_derivative() {
        let p = table1();
        let z = Complex64::new(0.0, 0.0);
        let vs1 = p.grid_phasor();
        assert_eq!(line_dp_derivative(z, vs1, vs1, &p), z);
        let d = line_dp_derivative(z, vs1 + 1.0, vs1, &p);
        assert!((d - Complex64::new(125.0, 0.0)).norm() < 1e-9);
        let vgf = 160.0;
        let i1 = steady_state_current(vgf, 0.05, &p).unwrap();
        let d = line_dp_derivative(i1, Complex64::from_polar(vgf / 2.0, 0.05), vs1, &p);
        assert!(d.norm() < 1e-9);
    }

    #[test]
    fn steady_current_examples() {
        let p = table1();
        assert_eq!(
            steady_state_current(p.v_s_amp, 0.0, &p).unwrap(),
            Complex64::new(0.0, 0.0)
        );
        let lossless = CircuitParams { r_gs: 0.0, ..p };
        let i = steady_state_current(p.v_s_amp + 10.0, 0.0, &lossless).unwrap();
        // -j * 10 / (2 * X)
        let want = Complex64::new(0.0, -10.0 / (2.0 * lossless.x_gs()));
        assert!((i - want).norm() < 1e-12);
        assert!((i.im + 1.989).abs() < 1e-3);
    }

    #[test]
    fn invalid_params() {
        assert!(CircuitParams::new(0.0, 0.3, 314.0, 1.0).is_err());
        assert!(CircuitParams::new(1e-3, -0.1, 314.0, 1.0).is_err());
        assert!(CircuitParams::new(1e-3, 0.1, 0.0, 1.0).is_err());
    }
}
