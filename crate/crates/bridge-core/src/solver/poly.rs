//! Univariate polynomial extraction and real root finding.
//!
//! Expressions are lowered to a rational function P(x)/Q(x) with exact
//! coefficients; an equation becomes the polynomial Pl*Qr - Pr*Ql = 0.
//! Quadratics are solved analytically (exactly when the discriminant is a
//! rational square); degrees 3..=8 go through Durand-Kerner iteration with
//! Newton polish, and every float root is snapped back to a small rational
//! when that satisfies the polynomial exactly.

use super::Value;
use crate::equation::{BinOp, Equation, Expr};
use num::{BigInt, BigRational, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;

/// Final equations may not exceed this degree.
pub(crate) const MAX_DEGREE: usize = 8;
/// Intermediate products may transiently go higher.
const MAX_INTERMEDIATE_DEGREE: usize = 16;

type Poly = Vec<BigRational>; // dense, index = degree

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PolyError {
    NotPolynomial,
    DivisionByZero,
}

fn trim(mut p: Poly) -> Poly {
    while p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

fn poly_add(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![BigRational::zero(); a.len().max(b.len())];
    for (i, v) in a.iter().enumerate() {
        out[i] += v;
    }
    for (i, v) in b.iter().enumerate() {
        out[i] += v;
    }
    trim(out)
}

fn poly_mul(a: &Poly, b: &Poly) -> Result<Poly, PolyError> {
    if a.is_empty() || b.is_empty() {
        return Ok(Vec::new());
    }
    if a.len() + b.len() - 2 > MAX_INTERMEDIATE_DEGREE {
        return Err(PolyError::NotPolynomial);
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, av) in a.iter().enumerate() {
        if av.is_zero() {
            continue;
        }
        for (j, bv) in b.iter().enumerate() {
            out[i + j] += av * bv;
        }
    }
    Ok(trim(out))
}

fn poly_neg(p: &Poly) -> Poly {
    p.iter().map(|c| -c).collect()
}

/// P/Q with Q never the zero polynomial.
#[derive(Debug, Clone)]
struct RationalFn {
    num: Poly,
    den: Poly,
}

impl RationalFn {
    fn constant(c: BigRational) -> RationalFn {
        RationalFn {
            num: if c.is_zero() { Vec::new() } else { vec![c] },
            den: vec![BigRational::from_integer(1.into())],
        }
    }

    fn unknown() -> RationalFn {
        RationalFn {
            num: vec![BigRational::zero(), BigRational::from_integer(1.into())],
            den: vec![BigRational::from_integer(1.into())],
        }
    }

    fn add(&self, other: &RationalFn) -> Result<RationalFn, PolyError> {
        let num = poly_add(
            &poly_mul(&self.num, &other.den)?,
            &poly_mul(&other.num, &self.den)?,
        );
        let den = poly_mul(&self.den, &other.den)?;
        Ok(RationalFn { num, den })
    }

    fn neg(&self) -> RationalFn {
        RationalFn {
            num: poly_neg(&self.num),
            den: self.den.clone(),
        }
    }

    fn mul(&self, other: &RationalFn) -> Result<RationalFn, PolyError> {
        Ok(RationalFn {
            num: poly_mul(&self.num, &other.num)?,
            den: poly_mul(&self.den, &other.den)?,
        })
    }

    fn div(&self, other: &RationalFn) -> Result<RationalFn, PolyError> {
        if other.num.is_empty() {
            return Err(PolyError::DivisionByZero);
        }
        Ok(RationalFn {
            num: poly_mul(&self.num, &other.den)?,
            den: poly_mul(&self.den, &other.num)?,
        })
    }

    fn pow(&self, exp: i64) -> Result<RationalFn, PolyError> {
        let positive = exp.unsigned_abs();
        let mut acc = RationalFn::constant(BigRational::from_integer(1.into()));
        for _ in 0..positive {
            acc = acc.mul(self)?;
        }
        if exp < 0 {
            let one = RationalFn::constant(BigRational::from_integer(1.into()));
            acc = one.div(&acc)?;
        }
        Ok(acc)
    }
}

fn lower(
    expr: &Expr,
    target: &str,
    bindings: &BTreeMap<String, Value>,
) -> Result<RationalFn, PolyError> {
    match expr {
        Expr::Number(v) => Ok(RationalFn::constant(v.clone())),
        Expr::Variable(name) if name == target => Ok(RationalFn::unknown()),
        Expr::Variable(name) => match bindings.get(name) {
            Some(Value::Exact(v)) => Ok(RationalFn::constant(v.clone())),
            // Approximate bindings would poison the exact coefficients.
            Some(Value::Approx(_)) | None => Err(PolyError::NotPolynomial),
        },
        Expr::Negate(inner) => Ok(lower(inner, target, bindings)?.neg()),
        Expr::Binary(op, lhs, rhs) => {
            let left = lower(lhs, target, bindings)?;
            match op {
                BinOp::Add => left.add(&lower(rhs, target, bindings)?),
                BinOp::Sub => left.add(&lower(rhs, target, bindings)?.neg()),
                BinOp::Mul => left.mul(&lower(rhs, target, bindings)?),
                BinOp::Div => left.div(&lower(rhs, target, bindings)?),
                BinOp::Pow => {
                    let exp = rhs.as_literal_int().ok_or(PolyError::NotPolynomial)?;
                    left.pow(exp)
                }
            }
        }
    }
}

/// What a univariate equation reduces to.
#[derive(Debug, Clone)]
pub(crate) enum Univariate {
    /// 0 = 0 after clearing denominators: no constraint on the unknown.
    Tautology,
    /// Nonzero constant = 0: no value works.
    NoSolution,
    /// The polynomial constraint p(x) = 0, degree >= 1.
    Constraint(Poly),
}

/// Lower `eq` to a polynomial constraint on `target`, treating bound
/// variables as constants.
pub(crate) fn univariate_constraint(
    eq: &Equation,
    target: &str,
    bindings: &BTreeMap<String, Value>,
) -> Result<Univariate, PolyError> {
    let lhs = lower(&eq.lhs, target, bindings)?;
    let rhs = lower(&eq.rhs, target, bindings)?;
    // lhs = rhs  <=>  Pl*Qr - Pr*Ql = 0 away from denominator zeros.
    let p = poly_add(
        &poly_mul(&lhs.num, &rhs.den)?,
        &poly_neg(&poly_mul(&rhs.num, &lhs.den)?),
    );
    if p.is_empty() {
        return Ok(Univariate::Tautology);
    }
    if p.len() == 1 {
        return Ok(Univariate::NoSolution);
    }
    if p.len() - 1 > MAX_DEGREE {
        return Err(PolyError::NotPolynomial);
    }
    Ok(Univariate::Constraint(p))
}

/// All real roots of `p`, ascending, exact where possible.
pub(crate) fn real_roots(p: &[BigRational]) -> Vec<Value> {
    let p = trim(p.to_vec());
    match p.len() {
        0 | 1 => Vec::new(),
        2 => vec![Value::Exact(-&p[0] / &p[1])],
        3 => quadratic_roots(&p[0], &p[1], &p[2]),
        _ => numeric_roots(&p),
    }
}

fn quadratic_roots(c: &BigRational, b: &BigRational, a: &BigRational) -> Vec<Value> {
    let disc = b * b - BigRational::from_integer(4.into()) * a * c;
    if disc.is_negative() {
        return Vec::new();
    }
    let two_a = BigRational::from_integer(2.into()) * a;
    if disc.is_zero() {
        return vec![Value::Exact(-b / &two_a)];
    }
    if let Some(sqrt) = rational_sqrt(&disc) {
        let r1 = (-b - &sqrt) / &two_a;
        let r2 = (-b + &sqrt) / &two_a;
        let mut roots = vec![Value::Exact(r1), Value::Exact(r2)];
        roots.sort_by(|x, y| x.to_f64().total_cmp(&y.to_f64()));
        return roots;
    }
    // Irrational pair: numerically stable float form.
    let (af, bf, cf) = (
        a.to_f64().unwrap_or(f64::NAN),
        b.to_f64().unwrap_or(f64::NAN),
        c.to_f64().unwrap_or(f64::NAN),
    );
    let sq = disc.to_f64().unwrap_or(f64::NAN).sqrt();
    let q = -0.5 * (bf + bf.signum() * sq);
    let mut roots = vec![q / af, cf / q];
    roots.sort_by(|x, y| x.total_cmp(y));
    roots.into_iter().map(Value::Approx).collect()
}

/// Exact square root of a nonnegative rational, if one exists.
fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    let num = exact_int_sqrt(r.numer())?;
    let den = exact_int_sqrt(r.denom())?;
    Some(BigRational::new(num, den))
}

fn exact_int_sqrt(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let root = n.sqrt();
    if &root * &root == *n {
        Some(root)
    } else {
        None
    }
}

fn numeric_roots(p: &[BigRational]) -> Vec<Value> {
    let coeffs: Vec<f64> = p.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect();
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Vec::new();
    }
    let candidates = durand_kerner(&coeffs);
    let mut reals: Vec<f64> = Vec::new();
    for (re, im) in candidates {
        if im.abs() <= 1e-7 * (1.0 + re.abs()) {
            reals.push(newton_polish(&coeffs, re));
        }
    }
    reals.sort_by(|a, b| a.total_cmp(b));
    reals.dedup_by(|a, b| (*a - *b).abs() <= 1e-7 * (1.0 + b.abs()));

    reals
        .into_iter()
        .filter(|r| {
            let (val, scale) = horner_scaled(&coeffs, *r);
            val.abs() <= 1e-6 * scale.max(1.0)
        })
        .map(|r| {
            snap_to_rational(p, r)
                .map(Value::Exact)
                .unwrap_or(Value::Approx(r))
        })
        .collect()
}

/// Simultaneous (Weierstrass) iteration on complex start points.
fn durand_kerner(coeffs: &[f64]) -> Vec<(f64, f64)> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    let radius = 1.0 + monic[..n].iter().fold(0.0f64, |m, c| m.max(c.abs()));

    // complex arithmetic on (re, im) pairs
    let cmul = |a: (f64, f64), b: (f64, f64)| (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0);
    let csub = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0, a.1 - b.1);
    let cdiv = |a: (f64, f64), b: (f64, f64)| {
        let d = b.0 * b.0 + b.1 * b.1;
        ((a.0 * b.0 + a.1 * b.1) / d, (a.1 * b.0 - a.0 * b.1) / d)
    };
    let peval = |z: (f64, f64)| {
        let mut acc = (0.0, 0.0);
        for c in monic.iter().rev() {
            acc = cmul(acc, z);
            acc.0 += c;
        }
        acc
    };

    let mut roots: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let angle = 0.4 + 2.0 * std::f64::consts::PI * (k as f64) / (n as f64);
            (radius * angle.cos(), radius * angle.sin())
        })
        .collect();

    for _ in 0..500 {
        let mut max_step = 0.0f64;
        for k in 0..n {
            let zk = roots[k];
            let mut denom = (1.0, 0.0);
            for (j, zj) in roots.iter().enumerate() {
                if j != k {
                    denom = cmul(denom, csub(zk, *zj));
                }
            }
            let delta = cdiv(peval(zk), denom);
            roots[k] = csub(zk, delta);
            max_step = max_step.max((delta.0 * delta.0 + delta.1 * delta.1).sqrt());
        }
        if max_step < 1e-13 {
            break;
        }
    }
    roots
}

fn horner_scaled(coeffs: &[f64], x: f64) -> (f64, f64) {
    let mut value = 0.0;
    let mut scale = 0.0;
    for c in coeffs.iter().rev() {
        value = value * x + c;
        scale = scale * x.abs() + c.abs();
    }
    (value, scale)
}

fn newton_polish(coeffs: &[f64], mut x: f64) -> f64 {
    for _ in 0..30 {
        let mut value = 0.0;
        let mut deriv = 0.0;
        for c in coeffs.iter().rev() {
            deriv = deriv * x + value;
            value = value * x + c;
        }
        if deriv == 0.0 {
            break;
        }
        let step = value / deriv;
        x -= step;
        if step.abs() <= 1e-15 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

/// If rounding `r` to denominator q <= 24 satisfies the polynomial exactly,
/// return that rational.
fn snap_to_rational(p: &[BigRational], r: f64) -> Option<BigRational> {
    for q in 1..=24i64 {
        let scaled = r * q as f64;
        if (scaled - scaled.round()).abs() > 1e-6 * (1.0 + scaled.abs()) {
            continue;
        }
        let numer = scaled.round() as i64;
        let candidate = BigRational::new(numer.into(), q.into());
        let mut acc = BigRational::zero();
        for c in p.iter().rev() {
            acc = acc * &candidate + c;
        }
        if acc.is_zero() {
            return Some(candidate);
        }
    }
    None
}
