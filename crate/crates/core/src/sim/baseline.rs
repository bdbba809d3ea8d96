use crate::control::{apc_derivative, solve_operating_point, ControllerState};
use crate::error::{Error, Result};
use crate::plant::steady_state_current;
use crate::poly::RationalFunction;
use crate::small_signal::transfer_coefficients;

use super::trace::{Sample, SimTrace, TraceMeta};
use super::{out_of_bounds, rk4_step, EventQueue, SimConfig};

/// Controllable canonical realization `x' = A x + B u, y = C x + D u` of a
/// proper single-input single-output rational function.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    /// Monic denominator coefficients `a_0 .. a_{n-1}` (ascending).
    den: Vec<f64>,
    c: Vec<f64>,
    d: f64,
}

impl StateSpace {
    pub fn realize(g: &RationalFunction) -> Result<Self> {
        if !g.is_proper() {
            return Err(Error::invalid("transfer function is improper"));
        }
        let g = g.normalized();
        let n = g.den.degree();
        let num = g.num.coeffs();
        let d = if num.len() == n + 1 { num[n] } else { 0.0 };
        let den = g.den.coeffs()[..n].to_vec();
        // strictly proper remainder num - d * den
        let c = (0..n)
            .map(|k| num.get(k).copied().unwrap_or(0.0) - d * den[k])
            .collect();
        Ok(Self { den, c, d })
    }

    pub fn order(&self) -> usize {
        self.den.len()
    }

    pub fn feedthrough(&self) -> f64 {
        self.d
    }

    /// `C x`, the output without the feedthrough term.
    pub fn state_output(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    pub fn output(&self, x: &[f64], u: f64) -> f64 {
        self.state_output(x) + self.d * u
    }

    pub fn derivative(&self, x: &[f64], u: f64, dx: &mut [f64]) {
        let n = self.order();
        if n == 0 {
            return;
        }
        dx[..n - 1].copy_from_slice(&x[1..]);
        dx[n - 1] = u - self.den.iter().zip(x).map(|(a, x)| a * x).sum::<f64>();
    }
}

// Baselines carry at most two states per gain (line dynamics), so a fixed
// state vector covers both variants.
const MAX_STATES: usize = 10;

struct Loop {
    pp: StateSpace,
    pv: StateSpace,
    qp: StateSpace,
    qv: StateSpace,
    offsets: [usize; 4],
}

impl Loop {
    fn blocks(&self) -> [&StateSpace; 4] {
        [&self.pp, &self.pv, &self.qp, &self.qv]
    }

    fn slice<'a>(&self, y: &'a [f64], block: usize) -> &'a [f64] {
        let start = self.offsets[block];
        &y[start..start + self.blocks()[block].order()]
    }
}

/// Linearized closed loop: swing equation and droop acting on power
/// deviations produced by the variant's transfer gains, reported in absolute
/// quantities (operating point plus deviation).
pub fn run_baseline(cfg: &SimConfig) -> Result<SimTrace> {
    let model = cfg
        .variant
        .linear_model()
        .ok_or_else(|| Error::invalid("configuration is not for a baseline model"))?;
    cfg.validate()?;
    let cp = cfg.circuit;
    let mut vp = cfg.control;
    let op = solve_operating_point(&cp, &vp)?;
    let k = transfer_coefficients(&op, &cp, cp.quarter_period(), model)?;
    let mut offsets = [0usize; 4];
    let blocks = [
        StateSpace::realize(&k.k_pp)?,
        StateSpace::realize(&k.k_pv)?,
        StateSpace::realize(&k.k_qp)?,
        StateSpace::realize(&k.k_qv)?,
    ];
    let mut next = 2;
    for (o, b) in offsets.iter_mut().zip(&blocks) {
        *o = next;
        next += b.order();
    }
    if next > MAX_STATES {
        return Err(Error::invalid("baseline realization has too many states"));
    }
    let [pp, pv, qp, qv] = blocks;
    let lp = Loop {
        pp,
        pv,
        qp,
        qv,
        offsets,
    };
    let q_ref0 = vp.q_ref;
    let kq1 = vp.k_q1();

    // state: [phi_g, omega_dev, realization states...]
    let eval = |y: &[f64; MAX_STATES], vp: &crate::control::VsmParams| {
        let dphi = y[0] - op.phi_g;
        let y_qp = lp.qp.output(lp.slice(y, 2), dphi);
        let qv_free = lp.qv.state_output(lp.slice(y, 3));
        let dv = kq1 * (vp.q_ref - q_ref0 - y_qp - qv_free) / (1.0 + kq1 * lp.qv.feedthrough());
        let dq = y_qp + qv_free + lp.qv.feedthrough() * dv;
        let dp = lp.pp.output(lp.slice(y, 0), dphi) + lp.pv.output(lp.slice(y, 1), dv);
        let p = op.p + dp;
        let state = ControllerState {
            phi_g: y[0],
            omega_dev: y[1],
        };
        let (a, b) = apc_derivative(state, p, vp);
        let mut dy = [0.0; MAX_STATES];
        dy[0] = a;
        dy[1] = b;
        let inputs = [dphi, dv, dphi, dv];
        for (block, (ss, u)) in lp.blocks().into_iter().zip(inputs).enumerate() {
            let start = lp.offsets[block];
            let end = start + ss.order();
            ss.derivative(&y[start..end], u, &mut dy[start..end]);
        }
        (dy, p, op.q + dq, op.v_gf_am + dv)
    };

    let mut trace = SimTrace::new(TraceMeta {
        variant: cfg.variant,
        s_0: vp.s_0,
        omega0: cp.omega0,
        truncated_at: None,
    });
    let mut events = EventQueue::new(&cfg.events);
    let mut y = [0.0; MAX_STATES];
    y[0] = op.phi_g;
    let h = cfg.step;
    let steps = cfg.steps();

    for k in 0..=steps {
        let t = k as f64 * h;
        events.apply_due(t, h, &mut vp);
        let (k1, p, q, v_am) = eval(&y, &vp);
        if out_of_bounds(p, vp.s_0, &y) {
            trace.meta.truncated_at = Some(t);
            break;
        }
        if k % cfg.decimation == 0 || k == steps {
            trace.push(Sample {
                t,
                p_g: p,
                q_g: q,
                v_gf_am: v_am,
                phi_g: y[0],
                omega_dev: y[1],
                i_gg: steady_state_current(v_am, y[0], &cp)?.norm(),
            });
        }
        trace.final_state = y[..next].to_vec();
        if k == steps {
            break;
        }
        y = rk4_step(&y, h, &k1, |_, ys| eval(ys, &vp).0);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Polynomial;
    use crate::profile;
    use crate::sim::SimVariant;

    #[test]
    fn realization_reproduces_frequency_response() {
        let g = RationalFunction::new(
            Polynomial::new(vec![3.0, 1.0, 2.0]),
            Polynomial::new(vec![4.0, 0.5, 0.5]),
        )
        .unwrap();
        let ss = StateSpace::realize(&g).unwrap();
        assert_eq!(ss.order(), 2);
        // G(s) = C (sI - A)^-1 B + D evaluated through the companion form
        let s = num_complex::Complex64::new(0.2, 1.7);
        let a = g.normalized();
        let den = a.den.eval_complex(s);
        let strictly: Polynomial = Polynomial::new(ss.c.clone());
        let via_ss = strictly.eval_complex(s) / den + ss.feedthrough();
        assert!((via_ss - g.eval(s)).norm() < 1e-12);
    }

    #[test]
    fn improper_rejected() {
        let g = RationalFunction::new(
            Polynomial::new(vec![0.0, 0.0, 1.0]),
            Polynomial::linear(1.0, 1.0),
        )
        .unwrap();
        assert!(StateSpace::realize(&g).is_err());
    }

    #[test]
    fn flat_without_disturbance() {
        for variant in [SimVariant::BaselineStatic, SimVariant::BaselineLineDynamics] {
            let cfg = SimConfig::new(
                variant,
                profile::table1_circuit(),
                profile::table1_control(),
            )
            .with_duration(1.0)
            .with_decimation(100);
            let trace = run_baseline(&cfg).unwrap();
            for p in &trace.p_g {
                assert!((p - 250.0).abs() < 1e-6);
            }
        }
    }
}
