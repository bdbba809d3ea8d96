use std::f64::consts::PI;

use num_complex::Complex64;

use crate::control::{
    apc_derivative, rpc_output, solve_operating_point, ControllerState, OperatingPoint, VsmParams,
};
use crate::error::{Error, Result};
use crate::plant::{line_dp_derivative, CircuitParams};
use crate::power::{fundamental_average_power, DelayLine, PowerPair};

use super::trace::{Sample, SimTrace, TraceMeta};
use super::{out_of_bounds, rk4_step, EventQueue, SimConfig, SimVariant, Stage};

type Delayed = (Complex64, Complex64);

struct Outputs {
    pq: PowerPair,
    v_am: f64,
    v1: Complex64,
}

// state: [Re <i>_1, Im <i>_1, phi_g, omega_dev]
fn derivative(
    y: &[f64; 4],
    delayed: Delayed,
    cp: &CircuitParams,
    vp: &VsmParams,
) -> ([f64; 4], Outputs) {
    let i1 = Complex64::new(y[0], y[1]);
    let (phi, omega_dev) = (y[2], y[3]);
    let (v1_d, i1_d) = delayed;
    // reactive power only sees delayed phasors, so the droop is explicit
    let q = fundamental_average_power(v1_d, v1_d, i1_d, i1_d).q;
    let v_am = rpc_output(q, vp);
    let v1 = Complex64::from_polar(0.5 * v_am, phi);
    let pq = fundamental_average_power(v1, v1_d, i1, i1_d);
    let di = line_dp_derivative(i1, v1, cp.grid_phasor(), cp);
    let (dphi, domega) = apc_derivative(
        ControllerState {
            phi_g: phi,
            omega_dev,
        },
        pq.p,
        vp,
    );
    ([di.re, di.im, dphi, domega], Outputs { pq, v_am, v1 })
}

fn delay_lines(
    op: &OperatingPoint,
    cp: &CircuitParams,
    h: f64,
) -> Result<(DelayLine<Complex64>, DelayLine<Complex64>)> {
    let t0 = cp.quarter_period();
    let v1 = op.v1();
    let i1 = op.i1;
    Ok((
        DelayLine::new(t0, h, |_| v1)?,
        DelayLine::new(t0, h, |_| i1)?,
    ))
}

/// Dynamic phasor model: the fundamental line-current phasor, the swing
/// equation and the droop, with the power measurement's delayed terms taken
/// from phasor-valued delay lines.
pub fn run_dynamic_phasor(cfg: &SimConfig) -> Result<SimTrace> {
    if cfg.variant != SimVariant::DynamicPhasor {
        return Err(Error::invalid(
            "configuration is not for the dynamic phasor model",
        ));
    }
    cfg.validate()?;
    let cp = cfg.circuit;
    let mut vp = cfg.control;
    let op = solve_operating_point(&cp, &vp)?;
    let h = cfg.step;
    let (mut v_line, mut i_line) = delay_lines(&op, &cp, h)?;

    let mut trace = SimTrace::new(TraceMeta {
        variant: cfg.variant,
        s_0: vp.s_0,
        omega0: cp.omega0,
        truncated_at: None,
    });
    let mut events = EventQueue::new(&cfg.events);
    let mut y = [op.i1.re, op.i1.im, op.phi_g, 0.0];
    let steps = cfg.steps();

    for k in 0..=steps {
        let t = k as f64 * h;
        events.apply_due(t, h, &mut vp);
        let now = (v_line.delayed(), i_line.delayed());
        let half = (v_line.delayed_half(), i_line.delayed_half());
        let next = (v_line.delayed_next(), i_line.delayed_next());

        let (k1, out) = derivative(&y, now, &cp, &vp);
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
                phi_g: y[2],
                omega_dev: y[3],
                i_gg: Complex64::new(y[0], y[1]).norm(),
            });
        }
        trace.final_state = y.to_vec();
        if k == steps {
            break;
        }
        v_line.push(out.v1);
        i_line.push(Complex64::new(y[0], y[1]));
        y = rk4_step(&y, h, &k1, |stage, ys| {
            let delayed = match stage {
                Stage::Half => half,
                Stage::Full => next,
            };
            derivative(ys, delayed, &cp, &vp).0
        });
    }
    Ok(trace)
}

/// Open-loop response of the phasor-model active power to a sinusoidal phase
/// perturbation of `amplitude` rad at `freq_hz`, with the amplitude held at
/// its operating value. Returns `dp/dphi` as a complex gain.
pub fn phasor_frequency_response(
    cp: &CircuitParams,
    vp: &VsmParams,
    freq_hz: f64,
    amplitude: f64,
    step: f64,
) -> Result<Complex64> {
    if !(freq_hz > 0.0 && amplitude > 0.0) {
        return Err(Error::invalid("frequency and amplitude must be positive"));
    }
    let op = solve_operating_point(cp, vp)?;
    let (mut v_line, mut i_line) = delay_lines(&op, cp, step)?;
    let w = 2.0 * PI * freq_hz;
    let cycle = 1.0 / freq_hz;
    // line transients decay with time constant L/R; wait them out
    let settle_cycles = (0.5 / cycle).ceil().max(1.0);
    let measure_cycles = 2.0;
    let settle_steps = (settle_cycles * cycle / step).round() as usize;
    let measure_steps = (measure_cycles * cycle / step).round() as usize;

    let phase = |t: f64| op.phi_g + amplitude * (w * t).sin();
    let v1_at = |t: f64| Complex64::from_polar(0.5 * op.v_gf_am, phase(t));
    let slope = |t: f64, i1: Complex64| line_dp_derivative(i1, v1_at(t), cp.grid_phasor(), cp);

    let mut i1 = op.i1;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..settle_steps + measure_steps {
        let t = k as f64 * step;
        let now = (v_line.delayed(), i_line.delayed());
        if k >= settle_steps {
            let p = fundamental_average_power(v1_at(t), now.0, i1, now.1).p;
            acc += (p - op.p) * Complex64::from_polar(1.0, -w * t);
        }
        v_line.push(v1_at(t));
        i_line.push(i1);
        // the plant ODE does not read the delay lines
        let k1 = slope(t, i1);
        let k2 = slope(t + 0.5 * step, i1 + 0.5 * step * k1);
        let k3 = slope(t + 0.5 * step, i1 + 0.5 * step * k2);
        let k4 = slope(t + step, i1 + step * k3);
        i1 += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    let response = 2.0 * acc / measure_steps as f64;
    // input amplitude * sin(w t) has complex amplitude -j * amplitude
    Ok(response / Complex64::new(0.0, -amplitude))
}
