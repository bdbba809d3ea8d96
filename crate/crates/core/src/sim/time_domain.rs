use num_complex::Complex64;

use crate::control::{apc_derivative, solve_operating_point, ControllerState, VsmParams};
use crate::error::{Error, Result};
use crate::plant::{grid_voltage, line_td_derivative, synthesize_converter_voltage, CircuitParams};
use crate::power::{instantaneous_pq, DelayLine, PowerPair};

use super::trace::{Sample, SimTrace, TraceMeta};
use super::{out_of_bounds, rk4_step, EventQueue, SimConfig, SimVariant, Stage};

struct Outputs {
    pq: PowerPair,
    v_am: f64,
    v_gf: f64,
}

/// Droop amplitude when the reactive power is measured from the present
/// converter voltage: `q` depends on `v_gf = V cos(theta)`, so the droop law
/// is solved for `V` directly.
fn droop_amplitude(cos_theta: f64, i: f64, v_d: f64, i_d: f64, vp: &VsmParams) -> f64 {
    let kq1 = vp.k_q1();
    (vp.v_0_amp + kq1 * vp.q_ref - 0.5 * kq1 * v_d * i) / (1.0 - 0.5 * kq1 * cos_theta * i_d)
}

// state: [i_gg, phi_g, omega_dev]
fn derivative(
    t: f64,
    y: &[f64; 3],
    delayed: (f64, f64),
    cp: &CircuitParams,
    vp: &VsmParams,
) -> ([f64; 3], Outputs) {
    let [i, phi, omega_dev] = *y;
    let (v_d, i_d) = delayed;
    let theta = cp.omega0 * t + phi;
    let v_am = droop_amplitude(theta.cos(), i, v_d, i_d, vp);
    let v_gf = synthesize_converter_voltage(v_am, theta);
    let pq = instantaneous_pq(v_gf, v_d, i, i_d);
    let di = line_td_derivative(i, v_gf, grid_voltage(t, cp), cp);
    let (dphi, domega) = apc_derivative(
        ControllerState {
            phi_g: phi,
            omega_dev,
        },
        pq.p,
        vp,
    );
    ([di, dphi, domega], Outputs { pq, v_am, v_gf })
}

/// Switching-averaged waveform model: instantaneous line current, converter
/// voltage `V cos(w0 t + phi)`, and power measured against quarter-period
/// delayed copies of voltage and current.
///
/// Delayed samples come from exact delay lines; inside an RK4 step the
/// half-step values are interpolated from neighbouring samples.
pub fn run_time_domain(cfg: &SimConfig) -> Result<SimTrace> {
    if cfg.variant != SimVariant::TimeDomain {
        return Err(Error::invalid(
            "configuration is not for the time-domain model",
        ));
    }
    cfg.validate()?;
    let cp = cfg.circuit;
    let mut vp = cfg.control;
    let op = solve_operating_point(&cp, &vp)?;
    let h = cfg.step;
    let w0 = cp.omega0;
    let t0 = cp.quarter_period();

    let mut v_line = DelayLine::new(t0, h, |tau| {
        synthesize_converter_voltage(op.v_gf_am, w0 * tau + op.phi_g)
    })?;
    let mut i_line = DelayLine::new(t0, h, |tau| {
        2.0 * (op.i1 * Complex64::from_polar(1.0, w0 * tau)).re
    })?;

    let mut trace = SimTrace::new(TraceMeta {
        variant: cfg.variant,
        s_0: vp.s_0,
        omega0: w0,
        truncated_at: None,
    });
    let mut events = EventQueue::new(&cfg.events);
    let mut y = [2.0 * op.i1.re, op.phi_g, 0.0];
    let steps = cfg.steps();

    for k in 0..=steps {
        let t = k as f64 * h;
        events.apply_due(t, h, &mut vp);
        let now = (v_line.delayed(), i_line.delayed());
        let half = (v_line.delayed_half(), i_line.delayed_half());
        let next = (v_line.delayed_next(), i_line.delayed_next());

        let (k1, out) = derivative(t, &y, now, &cp, &vp);
        if out_of_bounds(out.pq.p, vp.s_0, &y) {
            trace.meta.truncated_at = Some(t);
            break;
        }
        if k % cfg.decimation == 0 || k == steps {
            trace.push(Sample {
                t,
                p_g: out.pq.p,
                q_g: out.pq.q,
                v_gf_am: out.v_am,
                phi_g: y[1],
                omega_dev: y[2],
                i_gg: y[0],
            });
        }
        trace.final_state = y.to_vec();
        if k == steps {
            break;
        }
        v_line.push(out.v_gf);
        i_line.push(y[0]);
        y = rk4_step(&y, h, &k1, |stage, ys| {
            let (ts, delayed) = match stage {
                Stage::Half => (t + 0.5 * h, half),
                Stage::Full => (t + h, next),
            };
            derivative(ts, ys, delayed, &cp, &vp).0
        });
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile;

    #[test]
    fn zero_flow_stays_at_rest() {
        let cp = profile::table1_circuit();
        let vp = VsmParams {
            p_ref: 0.0,
            q_ref: 0.0,
            k_q: 0.0,
            v_0_amp: cp.v_s_amp,
            ..profile::table1_control()
        };
        let cfg = SimConfig::new(SimVariant::TimeDomain, cp, vp)
            .with_duration(1.0)
            .with_decimation(100);
        let trace = run_time_domain(&cfg).unwrap();
        assert!(!trace.truncated());
        for k in 0..trace.len() {
            assert!(trace.i_gg[k].abs() < 1e-9);
            assert!(trace.phi_g[k].abs() < 1e-9);
            assert!(trace.omega_dev[k].abs() < 1e-9);
            assert!(trace.p_g[k].abs() < 1e-9);
            assert!((trace.v_gf_am[k] - cp.v_s_amp).abs() < 1e-9);
        }
    }

    #[test]
    fn starts_at_operating_point() {
        let cp = profile::table1_circuit();
        let vp = profile::table1_control();
        let cfg = SimConfig::new(SimVariant::TimeDomain, cp, vp).with_duration(0.2);
        let trace = run_time_domain(&cfg).unwrap();
        let op = solve_operating_point(&cp, &vp).unwrap();
        // no disturbance: instantaneous power stays on the operating point
        for k in 0..trace.len() {
            assert!((trace.p_g[k] - op.p).abs() < 1e-6, "{}", trace.p_g[k]);
            assert!((trace.q_g[k] - op.q).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_other_variant() {
        let cfg = SimConfig::new(
            SimVariant::DynamicPhasor,
            profile::table1_circuit(),
            profile::table1_control(),
        );
        assert!(run_time_domain(&cfg).is_err());
    }
}
