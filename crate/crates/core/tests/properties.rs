use std::f64::consts::PI;

use gfmc_core::phasor::{
    extract_phasor, product_phasor, reconstruct, sample_window, shifted_product_phasor, PhasorSet,
    ShiftMode,
};
use gfmc_core::poly::{find_roots, residual_bound, Polynomial};
use gfmc_core::power::{dp_average_power, fundamental_average_power, instantaneous_pq};
use gfmc_core::Complex64;
use proptest::prelude::*;

const W0: f64 = 2.0 * PI * 50.0;
const T0: f64 = 0.02;
const ORACLE_SAMPLES: usize = 256;

fn coeff() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

/// Real waveform with harmonics 0..=2.
fn phasor_set() -> impl Strategy<Value = PhasorSet> {
    (-2.0..2.0f64, coeff(), coeff()).prop_map(|(dc, a1, a2)| {
        PhasorSet::from_positive(W0, &[(0, Complex64::new(dc, 0.0)), (1, a1), (2, a2)]).unwrap()
    })
}

/// Windowed coefficient of `f` computed from samples, the reference the
/// convolution rules are checked against.
fn oracle(f: impl Fn(f64) -> f64, start: f64, n: i32) -> Complex64 {
    let samples = sample_window(f, start, T0, ORACLE_SAMPLES);
    extract_phasor(&samples, start, W0, n).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn product_matches_waveform_oracle(
        x in phasor_set(),
        y in phasor_set(),
        start in 0.0..0.1f64,
    ) {
        let wave = |tau: f64| reconstruct(&x, tau).unwrap() * reconstruct(&y, tau).unwrap();
        let mut product = PhasorSet::new(W0);
        for n in -4..=4 {
            let p = product_phasor(&x, &y, n).unwrap();
            let reference = oracle(wave, start, n);
            prop_assert!((p - reference).norm() < 1e-8, "n={n}: {p} vs {reference}");
            product.insert(n, p);
        }
        prop_assert!(product.is_conjugate_symmetric());
    }

    #[test]
    fn shifted_product_matches_waveform_oracle(
        x in phasor_set(),
        y in phasor_set(),
        start in 0.0..0.1f64,
        t0 in 0.0..0.02f64,
    ) {
        let wave = |tau: f64| reconstruct(&x, tau - t0).unwrap() * reconstruct(&y, tau).unwrap();
        let mut product = PhasorSet::new(W0);
        for n in -4..=4 {
            let p = shifted_product_phasor(&x, &y, n, t0, ShiftMode::XOnly).unwrap();
            // away from n = 0 the rule omits the rotation exp(-j n w0 t0)
            let rotated = p * Complex64::from_polar(1.0, -(n as f64) * W0 * t0);
            let reference = oracle(wave, start, n);
            prop_assert!((rotated - reference).norm() < 1e-8, "n={n}: {rotated} vs {reference}");
            if n == 0 {
                prop_assert!((p - reference).norm() < 1e-8);
            }
            product.insert(n, p);
        }
        prop_assert!(product.is_conjugate_symmetric());
    }

    #[test]
    fn product_commutes(x in phasor_set(), y in phasor_set(), n in -4..=4i32) {
        let a = product_phasor(&x, &y, n).unwrap();
        let b = product_phasor(&y, &x, n).unwrap();
        prop_assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn extraction_inverts_reconstruction(x in phasor_set(), start in -0.05..0.05f64) {
        for n in -2..=2 {
            let back = oracle(|tau| reconstruct(&x, tau).unwrap(), start, n);
            prop_assert!((back - x.get(n)).norm() < 1e-12);
        }
    }

    #[test]
    fn averaged_power_matches_instantaneous(
        v in coeff(),
        i in coeff(),
        start in 0.0..0.1f64,
    ) {
        let t0 = T0 / 4.0;
        let wave = |c: Complex64, tau: f64| 2.0 * (c * Complex64::from_polar(1.0, W0 * tau)).re;
        let delayed = |c: Complex64| c * Complex64::from_polar(1.0, -W0 * t0);
        let samples = 512;
        let dt = T0 / samples as f64;
        let (mut p_avg, mut q_avg) = (0.0, 0.0);
        for m in 0..samples {
            let tau = start + m as f64 * dt;
            let pq = instantaneous_pq(wave(v, tau), wave(v, tau - t0), wave(i, tau), wave(i, tau - t0));
            p_avg += pq.p / samples as f64;
            q_avg += pq.q / samples as f64;
        }
        let dp = dp_average_power(
            &PhasorSet::fundamental(W0, v),
            &PhasorSet::fundamental(W0, delayed(v)),
            &PhasorSet::fundamental(W0, i),
            &PhasorSet::fundamental(W0, delayed(i)),
        )
        .unwrap();
        let scale = v.norm() * i.norm() + 1.0;
        prop_assert!((dp.p - p_avg).abs() < 1e-10 * scale);
        prop_assert!((dp.q - q_avg).abs() < 1e-10 * scale);
        let fast = fundamental_average_power(v, delayed(v), i, delayed(i));
        prop_assert!((fast.p - dp.p).abs() < 1e-12 * scale);
        prop_assert!((fast.q - dp.q).abs() < 1e-12 * scale);
    }

    #[test]
    fn polynomial_product_evaluates_as_product(
        a in prop::collection::vec(-5.0..5.0f64, 1..6),
        b in prop::collection::vec(-5.0..5.0f64, 1..6),
        re in -2.0..2.0f64,
        im in -2.0..2.0f64,
    ) {
        let (p, q) = (Polynomial::new(a), Polynomial::new(b));
        let s = Complex64::new(re, im);
        let lhs = (&p * &q).eval_complex(s);
        let rhs = p.eval_complex(s) * q.eval_complex(s);
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + (&p * &q).abs_eval(s)) * 10.0);
        let sum = (&p + &q).eval_complex(s);
        prop_assert!((sum - p.eval_complex(s) - q.eval_complex(s)).norm() < 1e-10 * (1.0 + sum.norm()));
    }
}

/// Roots of a real polynomial of degree <= 10: conjugate pairs and real
/// roots, kept at least 0.2 apart so the recovery tolerance is meaningful.
fn separated_roots() -> impl Strategy<Value = Vec<Complex64>> {
    (
        prop::collection::vec((-5.0..5.0f64, 0.3..5.0f64), 0..=4),
        prop::collection::vec(-5.0..5.0f64, 1..=2),
    )
        .prop_map(|(pairs, reals)| {
            let mut roots = Vec::new();
            for (re, im) in pairs {
                roots.push(Complex64::new(re, im));
                roots.push(Complex64::new(re, -im));
            }
            roots.extend(reals.into_iter().map(|r| Complex64::new(r, 0.0)));
            roots
        })
        .prop_filter("roots too close", |roots| {
            roots
                .iter()
                .enumerate()
                .all(|(k, a)| roots[k + 1..].iter().all(|b| (a - b).norm() > 0.2))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn roots_round_trip(roots in separated_roots()) {
        let p = Polynomial::from_roots(&roots);
        let found = find_roots(&p).unwrap();
        prop_assert_eq!(found.len(), roots.len());
        for r in &found {
            prop_assert!(p.eval_complex(*r).norm() <= residual_bound(&p, *r));
        }
        for known in &roots {
            let nearest = found.iter().map(|f| (f - known).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(nearest < 1e-6, "root {known} missed by {nearest}");
        }
    }
}
