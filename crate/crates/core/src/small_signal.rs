//! Small-signal stability of the power loops.
//!
//! The measured powers respond to phase and amplitude perturbations through
//! four transfer gains `k_pp, k_pv, k_qp, k_qv`. Closing the swing equation
//! and the reactive droop around them gives a characteristic equation whose
//! denominator-cleared numerator is analysed for right-half-plane roots.

use log::debug;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::control::{solve_operating_point, OperatingPoint, VsmParams};
use crate::error::{Error, Result};
use crate::plant::CircuitParams;
use crate::poly::{find_roots, Polynomial, RationalFunction};

/// Which dynamics the linear model keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelVariant {
    /// Line dynamics and the quarter-period measurement delay.
    Proposed,
    /// Constant gains: no line dynamics, no measurement delay.
    StaticGains,
    /// Line dynamics only; the measurement delay is ignored.
    LineDynamicsOnly,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 3] = [
        ModelVariant::Proposed,
        ModelVariant::StaticGains,
        ModelVariant::LineDynamicsOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::Proposed => "proposed",
            ModelVariant::StaticGains => "static",
            ModelVariant::LineDynamicsOnly => "line",
        }
    }
}

impl std::str::FromStr for ModelVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "proposed" | "dynamic-phasor" => Ok(ModelVariant::Proposed),
            "static" | "static-gains" => Ok(ModelVariant::StaticGains),
            "line" | "line-dynamics" => Ok(ModelVariant::LineDynamicsOnly),
            other => Err(Error::invalid(format!("unknown model variant '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Stability::Stable => "Stable",
            Stability::Unstable => "Unstable",
            Stability::Marginal => "Marginal",
        };
        f.write_str(s)
    }
}

/// Second-order Pade approximant of `exp(-s t0)`: `(2 - t0 s) / (2 + t0 s)`.
pub fn pade_delay(t0: f64) -> Result<RationalFunction> {
    if !(t0 > 0.0) {
        return Err(Error::invalid("delay must be positive"));
    }
    RationalFunction::new(Polynomial::linear(2.0, -t0), Polynomial::linear(2.0, t0))
}

/// Power-to-angle/amplitude gains around an operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferCoefficients {
    pub variant: ModelVariant,
    pub k_pp: RationalFunction,
    pub k_pv: RationalFunction,
    pub k_qp: RationalFunction,
    pub k_qv: RationalFunction,
}

impl TransferCoefficients {
    pub fn iter(&self) -> impl Iterator<Item = &RationalFunction> {
        [&self.k_pp, &self.k_pv, &self.k_qp, &self.k_qv].into_iter()
    }
}

/// Builds `k_pp, k_pv, k_qp, k_qv` for the chosen model variant.
///
/// Each gain is `k1(s)` (active) or `k2(s)` (reactive) times a bracket made of
/// a static part plus a line-dynamics part over `(L s + R)^2 + X^2`.
pub fn transfer_coefficients(
    op: &OperatingPoint,
    cp: &CircuitParams,
    t0: f64,
    variant: ModelVariant,
) -> Result<TransferCoefficients> {
    if !op.converged {
        return Err(Error::invalid("operating point has not converged"));
    }
    let v = op.v_gf_am;
    let vs = cp.v_s_amp;
    let x = cp.x_gs();
    let r = cp.r_gs;
    let z2 = x * x + r * r;
    let (sin, cos) = op.phi_g.sin_cos();

    // L s + R, or its value at s = 0 when dynamics are dropped
    let lr = match variant {
        ModelVariant::StaticGains => Polynomial::constant(r),
        _ => Polynomial::linear(r, cp.l_gs),
    };
    let line_den = &(&lr * &lr) + &Polynomial::constant(x * x);

    let bracket = |stat: f64, dynamic: Polynomial| -> RationalFunction {
        RationalFunction {
            num: &line_den.scale(stat) + &dynamic,
            den: line_den.clone(),
        }
    };
    let b_pp = bracket(
        (-v * v * x + v * vs * (cos * x + sin * r)) / z2,
        Polynomial::constant(v * v * x),
    );
    let b_pv = bracket((vs * sin * x + (v - vs * cos) * r) / z2, lr.scale(v));
    let b_qp = bracket(
        (v * v * r + v * vs * (sin * x - cos * r)) / z2,
        lr.scale(-v * v),
    );
    let b_qv = bracket(
        (v * x - vs * (cos * x + sin * r)) / z2,
        Polynomial::constant(v * x),
    );

    let (k1, k2) = match variant {
        ModelVariant::Proposed => {
            let delay = pade_delay(t0)?;
            let k1 = (&RationalFunction::constant(1.0) + &delay).scale(0.25);
            let k2 = delay.scale(0.5);
            (k1, k2)
        }
        ModelVariant::StaticGains | ModelVariant::LineDynamicsOnly => (
            RationalFunction::constant(0.5),
            RationalFunction::constant(0.5),
        ),
    };

    Ok(TransferCoefficients {
        variant,
        k_pp: &k1 * &b_pp,
        k_pv: &k1 * &b_pv,
        k_qp: &k2 * &b_qp,
        k_qv: &k2 * &b_qv,
    })
}

/// Denominator-cleared characteristic equation.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicPolynomial {
    /// Monic numerator of the closed-loop characteristic equation.
    pub poly: Polynomial,
    /// Common denominator of the four gains. Its zeros can appear as roots of
    /// `poly` purely through clearing denominators.
    pub common_den: Polynomial,
}

/// Writes every gain over one common denominator, returning the denominator
/// and the four rescaled numerators.
fn common_denominator(k: &TransferCoefficients) -> (Polynomial, [Polynomial; 4]) {
    let gains = [&k.k_pp, &k.k_pv, &k.k_qp, &k.k_qv];
    let mut distinct: Vec<&Polynomial> = Vec::new();
    for g in gains {
        if !distinct.iter().any(|d| d.approx_eq(&g.den, 1e-12)) {
            distinct.push(&g.den);
        }
    }
    let lcd = distinct
        .iter()
        .fold(Polynomial::constant(1.0), |acc, d| &acc * d);
    let numerators = gains.map(|g| {
        distinct
            .iter()
            .filter(|d| !d.approx_eq(&g.den, 1e-12))
            .fold(g.num.clone(), |acc, d| &acc * d)
    });
    (lcd, numerators)
}

/// Closed-loop characteristic polynomial
/// `[1 + kq1 k_qv] S0 (2H s^2 + D s) + w0 k_pp + kq1 w0 (k_qv k_pp - k_pv k_qp)`
/// multiplied through by the square of the gains' common denominator.
pub fn characteristic_polynomial(
    k: &TransferCoefficients,
    vp: &VsmParams,
) -> Result<CharacteristicPolynomial> {
    vp.validate()?;
    let (lcd, [n_pp, n_pv, n_qp, n_qv]) = common_denominator(k);
    let kq1 = vp.k_q1();
    let w0 = vp.omega0;
    let swing = Polynomial::new(vec![0.0, vp.s_0 * vp.d_g, 2.0 * vp.h_g * vp.s_0]);

    let lcd2 = &lcd * &lcd;
    let droop = &lcd2 + &(&n_qv * &lcd).scale(kq1);
    let cross = &(&n_qv * &n_pp) - &(&n_pv * &n_qp);
    let total = &(&(&swing * &droop) + &(&n_pp * &lcd).scale(w0)) + &cross.scale(kq1 * w0);
    if total.is_zero() {
        return Err(Error::DegenerateModel);
    }
    Ok(CharacteristicPolynomial {
        poly: total.monic()?,
        common_den: lcd,
    })
}

pub const DEFAULT_STABILITY_TOL: f64 = 1e-6;
const SPURIOUS_ROOT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub verdict: Stability,
    /// Roots that belong to the closed loop, sorted by descending real part.
    pub roots: Vec<Complex64>,
    /// Roots discarded as zeros of the common denominator.
    pub filtered: Vec<Complex64>,
}

impl StabilityReport {
    pub fn dominant(&self) -> Option<Complex64> {
        self.roots.first().copied()
    }
}

/// Classifies a root set. When `common_den` is given, roots at which it
/// vanishes (relative to its magnitude scale) are filtered out first.
pub fn stability_verdict(
    roots: &[Complex64],
    common_den: Option<&Polynomial>,
    tol: f64,
) -> StabilityReport {
    let (mut kept, filtered): (Vec<Complex64>, Vec<Complex64>) =
        roots.iter().partition(|&&r| match common_den {
            Some(d) if d.degree() > 0 => {
                d.eval_complex(r).norm() >= SPURIOUS_ROOT_TOL * d.abs_eval(r)
            }
            _ => true,
        });
    if !filtered.is_empty() {
        debug!("filtered denominator roots: {filtered:?}");
    }
    crate::poly::sort_roots(&mut kept);
    let verdict = if kept.iter().any(|r| r.re > tol) {
        Stability::Unstable
    } else if kept.iter().any(|r| r.re.abs() <= tol) {
        Stability::Marginal
    } else {
        Stability::Stable
    };
    StabilityReport {
        verdict,
        roots: kept,
        filtered,
    }
}

/// Full linear analysis at one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityAnalysis {
    pub variant: ModelVariant,
    pub d_g: f64,
    pub characteristic: CharacteristicPolynomial,
    pub report: StabilityReport,
}

impl StabilityAnalysis {
    pub fn verdict(&self) -> Stability {
        self.report.verdict
    }
}

pub fn analyze_at(
    op: &OperatingPoint,
    cp: &CircuitParams,
    vp: &VsmParams,
    t0: f64,
    variant: ModelVariant,
    tol: f64,
) -> Result<StabilityAnalysis> {
    let k = transfer_coefficients(op, cp, t0, variant)?;
    let characteristic = characteristic_polynomial(&k, vp)?;
    let roots = find_roots(&characteristic.poly)?;
    let report = stability_verdict(&roots, Some(&characteristic.common_den), tol);
    Ok(StabilityAnalysis {
        variant,
        d_g: vp.d_g,
        characteristic,
        report,
    })
}

/// Solves the operating point and analyses it with the quarter-period delay.
pub fn analyze(
    cp: &CircuitParams,
    vp: &VsmParams,
    variant: ModelVariant,
) -> Result<StabilityAnalysis> {
    let op = solve_operating_point(cp, vp)?;
    analyze_at(
        &op,
        cp,
        vp,
        cp.quarter_period(),
        variant,
        DEFAULT_STABILITY_TOL,
    )
}

#[derive(Debug, Clone)]
pub struct LocusRow {
    pub d_g: f64,
    pub outcome: Result<StabilityAnalysis>,
}

/// Root locus over the damping coefficient. The operating point does not
/// depend on damping, so it is solved once.
pub fn sweep_parameter(
    vp: &VsmParams,
    d_g_values: &[f64],
    cp: &CircuitParams,
    t0: f64,
    variant: ModelVariant,
) -> Result<Vec<LocusRow>> {
    if d_g_values.is_empty() {
        return Err(Error::invalid("empty damping list"));
    }
    let op = solve_operating_point(cp, vp)?;
    let mut values = d_g_values.to_vec();
    values.sort_by(f64::total_cmp);
    Ok(values
        .par_iter()
        .map(|&d_g| LocusRow {
            d_g,
            outcome: analyze_at(
                &op,
                cp,
                &vp.with_damping(d_g),
                t0,
                variant,
                DEFAULT_STABILITY_TOL,
            ),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::steady_power;
    use crate::profile;
    use std::f64::consts::PI;

    fn setup() -> (CircuitParams, VsmParams, OperatingPoint) {
        let cp = profile::table1_circuit();
        let vp = profile::table1_control();
        let op = solve_operating_point(&cp, &vp).unwrap();
        (cp, vp, op)
    }

    #[test]
    fn pade_properties() {
        let p = pade_delay(5e-3).unwrap();
        assert_eq!(p.eval(Complex64::new(0.0, 0.0)), Complex64::new(1.0, 0.0));
        for w in [0.1, 3.0, 100.0, 1e4] {
            assert!((p.eval(Complex64::new(0.0, w)).norm() - 1.0).abs() < 1e-15);
        }
        let w = 2.0 * PI * 10.0;
        let phase = p.eval(Complex64::new(0.0, w)).arg();
        assert!((phase + 2.0 * (PI * 0.05).atan()).abs() < 1e-12);
        assert!((phase + 0.3124).abs() < 1e-3);
        assert!(pade_delay(0.0).is_err());
    }

    #[test]
    fn k1_at_dc_is_half() {
        let delay = pade_delay(5e-3).unwrap();
        let k1 = (&RationalFunction::constant(1.0) + &delay).scale(0.25);
        assert!((k1.eval(Complex64::new(0.0, 0.0)).re - 0.5).abs() < 1e-15);
        assert_eq!(k1.num.degree(), 0);
    }

    #[test]
    fn k_pp_dc_closed_form() {
        let (cp, _, op) = setup();
        let k =
            transfer_coefficients(&op, &cp, cp.quarter_period(), ModelVariant::Proposed).unwrap();
        let (x, r) = (cp.x_gs(), cp.r_gs);
        let want = op.v_gf_am * cp.v_s_amp * (x * op.phi_g.cos() + r * op.phi_g.sin())
            / (2.0 * (x * x + r * r));
        let got = k.k_pp.eval(Complex64::new(0.0, 0.0));
        assert!((got.re - want).abs() < 1e-9 * want);
        // central difference of the steady-state power
        let h = 1e-6;
        let fd = (steady_power(op.v_gf_am, op.phi_g + h, &cp).unwrap().p
            - steady_power(op.v_gf_am, op.phi_g - h, &cp).unwrap().p)
            / (2.0 * h);
        assert!((got.re - fd).abs() < 1e-6 * fd.abs());
    }

    #[test]
    fn static_gains_are_constants() {
        let (cp, vp, op) = setup();
        let k = transfer_coefficients(&op, &cp, cp.quarter_period(), ModelVariant::StaticGains)
            .unwrap();
        for g in k.iter() {
            assert_eq!(g.num.degree(), 0);
            assert_eq!(g.den.degree(), 0);
        }
        let ch = characteristic_polynomial(&k, &vp).unwrap();
        assert_eq!(ch.poly.degree(), 2);
    }

    #[test]
    fn static_gains_quadratic_closed_form() {
        let (cp, vp, op) = setup();
        let vp = vp.with_damping(4.0);
        let k = transfer_coefficients(&op, &cp, cp.quarter_period(), ModelVariant::StaticGains)
            .unwrap();
        let at0 = |g: &RationalFunction| g.eval(Complex64::new(0.0, 0.0)).re;
        let (pp, pv, qp, qv) = (at0(&k.k_pp), at0(&k.k_pv), at0(&k.k_qp), at0(&k.k_qv));
        let kq1 = vp.k_q1();
        let a = (1.0 + kq1 * qv) * vp.s_0 * 2.0 * vp.h_g;
        let b = (1.0 + kq1 * qv) * vp.s_0 * vp.d_g;
        let c = vp.omega0 * pp + kq1 * vp.omega0 * (qv * pp - pv * qp);
        let disc = Complex64::new(b * b - 4.0 * a * c, 0.0).sqrt();
        let want = (-b + disc) / (2.0 * a);
        let report = analyze_at(&op, &cp, &vp, 5e-3, ModelVariant::StaticGains, 1e-6)
            .unwrap()
            .report;
        assert!((report.roots[0] - want).norm() < 1e-9 * want.norm());
    }

    #[test]
    fn proposed_degree_is_locked() {
        let (cp, vp, op) = setup();
        let k =
            transfer_coefficients(&op, &cp, cp.quarter_period(), ModelVariant::Proposed).unwrap();
        let ch = characteristic_polynomial(&k, &vp).unwrap();
        assert_eq!(ch.poly.degree(), 8);
        assert_eq!(ch.common_den.degree(), 3);
        assert_eq!(ch.poly.leading(), 1.0);
        let again = characteristic_polynomial(&k, &vp).unwrap();
        assert_eq!(ch, again);

        let k = transfer_coefficients(
            &op,
            &cp,
            cp.quarter_period(),
            ModelVariant::LineDynamicsOnly,
        )
        .unwrap();
        assert_eq!(characteristic_polynomial(&k, &vp).unwrap().poly.degree(), 6);
    }

    #[test]
    fn line_zeros_are_filtered() {
        let (cp, vp, _) = setup();
        let a = analyze(&cp, &vp, ModelVariant::Proposed).unwrap();
        assert_eq!(a.report.filtered.len(), 2);
        for r in &a.report.filtered {
            assert!((r.re + cp.r_gs / cp.l_gs).abs() < 1e-6);
            assert!((r.im.abs() - cp.x_gs() / cp.l_gs).abs() < 1e-6);
        }
        assert_eq!(a.report.roots.len(), 6);
    }

    #[test]
    fn verdicts_at_table1() {
        let (cp, vp, _) = setup();
        let verdict = |variant, d_g| {
            analyze(&cp, &vp.with_damping(d_g), variant)
                .unwrap()
                .verdict()
        };
        assert_eq!(verdict(ModelVariant::Proposed, 4.0), Stability::Unstable);
        assert_eq!(verdict(ModelVariant::Proposed, 10.0), Stability::Stable);
        assert_eq!(verdict(ModelVariant::StaticGains, 4.0), Stability::Stable);
        assert_eq!(
            verdict(ModelVariant::LineDynamicsOnly, 4.0),
            Stability::Stable
        );
    }

    #[test]
    fn verdict_rules() {
        let c = Complex64::new;
        let r = stability_verdict(&[c(-1.0, 0.0), c(1e-3, 2.0)], None, 1e-6);
        assert_eq!(r.verdict, Stability::Unstable);
        let r = stability_verdict(&[c(-1.0, 0.0), c(1e-9, 2.0)], None, 1e-6);
        assert_eq!(r.verdict, Stability::Marginal);
        let r = stability_verdict(&[c(-1.0, 0.0), c(-2.0, 2.0)], None, 1e-6);
        assert_eq!(r.verdict, Stability::Stable);
        // a right-half-plane root at a denominator zero is ignored
        let den = Polynomial::linear(-3.0, 1.0);
        let r = stability_verdict(&[c(-1.0, 0.0), c(3.0, 0.0)], Some(&den), 1e-6);
        assert_eq!(r.verdict, Stability::Stable);
        assert_eq!(r.filtered, vec![c(3.0, 0.0)]);
    }

    #[test]
    fn sweep_rows_sorted_and_single_point_matches() {
        let (cp, vp, _) = setup();
        let t0 = cp.quarter_period();
        let rows = sweep_parameter(&vp, &[10.0, 4.0], &cp, t0, ModelVariant::Proposed).unwrap();
        assert_eq!(rows[0].d_g, 4.0);
        assert_eq!(
            rows[0].outcome.as_ref().unwrap().verdict(),
            Stability::Unstable
        );
        assert_eq!(
            rows[1].outcome.as_ref().unwrap().verdict(),
            Stability::Stable
        );

        let single = sweep_parameter(&vp, &[7.0], &cp, t0, ModelVariant::Proposed).unwrap();
        assert_eq!(single.len(), 1);
        let direct = analyze(&cp, &vp.with_damping(7.0), ModelVariant::Proposed).unwrap();
        assert_eq!(single[0].outcome.as_ref().unwrap(), &direct);
        assert!(sweep_parameter(&vp, &[], &cp, t0, ModelVariant::Proposed).is_err());
    }
}
