//! Real polynomials, rational functions and simultaneous root finding.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real polynomial with coefficients in ascending degree. Trailing zero
/// coefficients are dropped, so the zero polynomial has no coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `a + b s`.
    pub fn linear(a: f64, b: f64) -> Self {
        Self::new(vec![a, b])
    }

    /// Monic polynomial with the given roots. Complex roots must come in
    /// conjugate pairs; the tiny imaginary residue of the product is dropped.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut acc = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (k, &a) in acc.iter().enumerate() {
                next[k] -= a * r;
                next[k + 1] += a;
            }
            acc = next;
        }
        Self::new(acc.into_iter().map(|c| c.re).collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }

    pub fn eval_complex(&self, s: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    /// `sum |a_k| |s|^k`, the natural magnitude scale for `p(s)`.
    pub fn abs_eval(&self, s: Complex64) -> f64 {
        let r = s.norm();
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * r + c.abs())
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        )
    }

    /// Divides through by the leading coefficient.
    pub fn monic(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DegenerateModel);
        }
        Ok(self.scale(1.0 / self.leading()))
    }

    /// Coefficient-wise comparison with relative tolerance.
    pub fn approx_eq(&self, other: &Self, rel: f64) -> bool {
        let scale = self.max_abs_coeff().max(other.max_abs_coeff());
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n).all(|k| {
            let a = self.coeffs.get(k).copied().unwrap_or(0.0);
            let b = other.coeffs.get(k).copied().unwrap_or(0.0);
            (a - b).abs() <= rel * scale
        })
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(k, c)| match k {
                0 => format!("{c}"),
                1 => format!("{c}*s"),
                _ => format!("{c}*s^{k}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or(0.0)
                        + rhs.coeffs.get(k).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul);

/// `num(s) / den(s)`. Common factors are never cancelled.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFunction {
    pub num: Polynomial,
    pub den: Polynomial,
}

impl RationalFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::invalid("denominator is identically zero"));
        }
        Ok(Self { num, den })
    }

    pub fn constant(c: f64) -> Self {
        Self {
            num: Polynomial::constant(c),
            den: Polynomial::constant(1.0),
        }
    }

    pub fn from_polynomial(p: Polynomial) -> Self {
        Self {
            num: p,
            den: Polynomial::constant(1.0),
        }
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.num.eval_complex(s) / self.den.eval_complex(s)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }

    /// Same function with a monic denominator.
    pub fn normalized(&self) -> Self {
        let lead = self.den.leading();
        Self {
            num: self.num.scale(1.0 / lead),
            den: self.den.scale(1.0 / lead),
        }
    }

    pub fn is_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree() <= self.den.degree()
    }
}

impl Add for &RationalFunction {
    type Output = RationalFunction;
    fn add(self, rhs: &RationalFunction) -> RationalFunction {
        if self.den == rhs.den {
            return RationalFunction {
                num: &self.num + &rhs.num,
                den: self.den.clone(),
            };
        }
        RationalFunction {
            num: &(&self.num * &rhs.den) + &(&rhs.num * &self.den),
            den: &self.den * &rhs.den,
        }
    }
}

impl Sub for &RationalFunction {
    type Output = RationalFunction;
    fn sub(self, rhs: &RationalFunction) -> RationalFunction {
        self + &rhs.scale(-1.0)
    }
}

impl Mul for &RationalFunction {
    type Output = RationalFunction;
    fn mul(self, rhs: &RationalFunction) -> RationalFunction {
        RationalFunction {
            num: &self.num * &rhs.num,
            den: &self.den * &rhs.den,
        }
    }
}

pub const ROOT_MAX_ITERATIONS: usize = 200;
pub const ROOT_UPDATE_TOL: f64 = 1e-12;
pub const ROOT_RESIDUAL_TOL: f64 = 1e-8;

/// Residual bound every accepted root satisfies:
/// `|p(r)| < 1e-8 * max|coeff| * max(1, |r|)^deg`.
pub fn residual_bound(p: &Polynomial, r: Complex64) -> f64 {
    ROOT_RESIDUAL_TOL * p.max_abs_coeff() * r.norm().max(1.0).powi(p.degree() as i32)
}

/// All complex roots of `p` by Aberth-Ehrlich simultaneous iteration.
///
/// Roots are returned sorted by descending real part, then descending
/// imaginary part.
pub fn find_roots(p: &Polynomial) -> Result<Vec<Complex64>> {
    if p.is_zero() || p.degree() == 0 {
        return Err(Error::invalid("root finding needs degree >= 1"));
    }
    let monic = p.monic()?;
    let zeros_at_origin = monic.coeffs.iter().take_while(|&&c| c == 0.0).count();
    let reduced = Polynomial::new(monic.coeffs[zeros_at_origin..].to_vec());

    let mut roots = vec![Complex64::new(0.0, 0.0); zeros_at_origin];
    roots.extend(aberth(&reduced)?);

    let worst = roots
        .iter()
        .map(|&r| p.eval_complex(r).norm() / residual_bound(p, r))
        .fold(0.0, f64::max);
    if !(worst < 1.0) {
        return Err(Error::RootFindingFailed {
            iterations: ROOT_MAX_ITERATIONS,
            best: roots,
        });
    }
    sort_roots(&mut roots);
    Ok(roots)
}

pub fn sort_roots(roots: &mut [Complex64]) {
    roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
}

fn aberth(p: &Polynomial) -> Result<Vec<Complex64>> {
    let n = p.degree();
    if n == 0 {
        return Ok(Vec::new());
    }
    let c = p.coeffs();
    if n == 1 {
        return Ok(vec![Complex64::new(-c[0] / c[1], 0.0)]);
    }
    let dp = p.derivative();
    let radius = (c[0].abs() / c[n].abs()).powf(1.0 / n as f64);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(radius, 2.0 * PI * k as f64 / n as f64 + 0.4))
        .collect();
    let mut done = vec![false; n];
    let noise = 4.0 * n as f64 * f64::EPSILON;

    for _ in 0..ROOT_MAX_ITERATIONS {
        let scale = z.iter().fold(1.0_f64, |m, r| m.max(r.norm()));
        let mut max_update = 0.0f64;
        for k in 0..n {
            if done[k] {
                continue;
            }
            let zk = z[k];
            let pz = p.eval_complex(zk);
            if pz.norm() <= noise * p.abs_eval(zk) {
                done[k] = true;
                continue;
            }
            let ratio = pz / dp.eval_complex(zk);
            let repulsion: Complex64 = (0..n).filter(|&j| j != k).map(|j| 1.0 / (zk - z[j])).sum();
            let w = ratio / (1.0 - ratio * repulsion);
            if !w.is_finite() {
                // coincident iterates; nudge and retry next sweep
                z[k] = zk + Complex64::new(0.0, 1e-8 * scale);
                max_update = f64::INFINITY;
                continue;
            }
            z[k] = zk - w;
            max_update = max_update.max(w.norm());
            if w.norm() < ROOT_UPDATE_TOL * scale {
                done[k] = true;
            }
        }
        if done.iter().all(|&d| d) || max_update < ROOT_UPDATE_TOL * scale {
            return Ok(z);
        }
    }
    // residual check in the caller decides whether the last iterate is usable
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn trims_trailing_zeros() {
        let p = Polynomial::new(vec![1.0, 2.0, 0.0, 0.0]);
        assert_eq!(p.degree(), 1);
        assert!(Polynomial::new(vec![0.0]).is_zero());
    }

    #[test]
    fn arithmetic() {
        let a = Polynomial::new(vec![1.0, 1.0]);
        let b = Polynomial::new(vec![2.0, 1.0]);
        assert_eq!(&a * &b, Polynomial::new(vec![2.0, 3.0, 1.0]));
        assert_eq!(&a - &a, Polynomial::zero());
        assert_eq!(&a + &b, Polynomial::new(vec![3.0, 2.0]));
        assert_eq!(
            Polynomial::new(vec![1.0, 2.0, 3.0]).derivative(),
            Polynomial::new(vec![2.0, 6.0])
        );
    }

    #[test]
    fn monic_of_zero_is_degenerate() {
        assert_eq!(Polynomial::zero().monic(), Err(Error::DegenerateModel));
    }

    #[test]
    fn rational_arithmetic() {
        let half =
            RationalFunction::new(Polynomial::constant(1.0), Polynomial::constant(2.0)).unwrap();
        let lag =
            RationalFunction::new(Polynomial::constant(1.0), Polynomial::linear(1.0, 1.0)).unwrap();
        let s = c(0.3, 2.0);
        let sum = &half + &lag;
        assert!((sum.eval(s) - (half.eval(s) + lag.eval(s))).norm() < 1e-14);
        let prod = &half * &lag;
        assert!((prod.eval(s) - half.eval(s) * lag.eval(s)).norm() < 1e-14);
        let diff = &lag - &lag;
        assert!(diff.eval(s).norm() < 1e-15);
        assert!(RationalFunction::new(Polynomial::constant(1.0), Polynomial::zero()).is_err());
    }

    #[test]
    fn quadratic_roots() {
        let r = find_roots(&Polynomial::new(vec![2.0, 3.0, 1.0])).unwrap();
        assert!((r[0] - c(-1.0, 0.0)).norm() < 1e-12);
        assert!((r[1] - c(-2.0, 0.0)).norm() < 1e-12);
        let r = find_roots(&Polynomial::new(vec![1.0, 0.0, 1.0])).unwrap();
        assert!((r[0] - c(0.0, 1.0)).norm() < 1e-12);
        assert!((r[1] - c(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn wilkinson_six() {
        let roots: Vec<_> = (1..=6).map(|k| c(-(k as f64), 0.0)).collect();
        let p = Polynomial::from_roots(&roots);
        let found = find_roots(&p).unwrap();
        for (k, r) in found.iter().enumerate() {
            assert!((r - c(-(k as f64 + 1.0), 0.0)).norm() < 1e-6, "{r}");
        }
    }

    #[test]
    fn roots_at_origin_and_linear() {
        let r = find_roots(&Polynomial::new(vec![0.0, 0.0, -3.0, 1.0])).unwrap();
        assert_eq!(r.len(), 3);
        assert!((r[0] - c(3.0, 0.0)).norm() < 1e-12);
        assert_eq!(r[1], c(0.0, 0.0));
        let r = find_roots(&Polynomial::linear(4.0, 2.0)).unwrap();
        assert_eq!(r, vec![c(-2.0, 0.0)]);
    }

    #[test]
    fn constant_has_no_roots() {
        assert!(find_roots(&Polynomial::constant(3.0)).is_err());
    }

    #[test]
    fn double_root_within_residual_bound() {
        let p = Polynomial::from_roots(&[c(-2.0, 5.0), c(-2.0, -5.0), c(-2.0, 5.0), c(-2.0, -5.0)]);
        let r = find_roots(&p).unwrap();
        for z in r {
            assert!((z - c(-2.0, 5.0 * z.im.signum())).norm() < 1e-6);
        }
    }
}
