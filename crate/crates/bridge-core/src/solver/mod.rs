//! Decide solvability and compute variable values for an equation system.
//!
//! `solve` runs a fixed pipeline: (1) a substitution pass repeatedly
//! isolates equations with a single unknown occurring linearly and binds
//! it; (2) the remaining linear subsystem goes through exact fraction-free
//! elimination; (3) a single leftover univariate polynomial equation of
//! degree 2..=8 is solved for real roots (quadratics analytically, higher
//! degrees numerically with polish); (4) anything else nonlinear is
//! reported as unsupported rather than guessed at.

mod linear;
mod poly;

use crate::equation::{format_rational, free_variables, BinOp, Equation, EquationSystem, Expr};
use linear::{eliminate, linear_form, ElimOutcome, Extract, LinearForm};
use num::{BigRational, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;

/// A solved variable value: exact rational when every step stayed
/// rational, float when root finding had to leave the rationals.
#[derive(Debug, Clone)]
pub enum Value {
    Exact(BigRational),
    Approx(f64),
}

impl Value {
    pub fn zero() -> Value {
        Value::Exact(BigRational::zero())
    }

    pub fn from_int(n: i64) -> Value {
        Value::Exact(BigRational::from_integer(n.into()))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Value::Approx(v) => *v,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Value::Exact(r) => r.is_zero(),
            Value::Approx(v) => *v == 0.0,
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        match self {
            Value::Exact(r) => !r.is_negative(),
            Value::Approx(v) => *v >= -1e-9,
        }
    }

    fn add(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a + b),
            _ => Value::Approx(self.to_f64() + other.to_f64()),
        }
    }

    fn sub(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a - b),
            _ => Value::Approx(self.to_f64() - other.to_f64()),
        }
    }

    fn mul(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a * b),
            _ => Value::Approx(self.to_f64() * other.to_f64()),
        }
    }

    fn div(&self, other: &Value) -> Option<Value> {
        if other.is_zero() {
            return None;
        }
        Some(match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a / b),
            _ => Value::Approx(self.to_f64() / other.to_f64()),
        })
    }

    fn neg(&self) -> Value {
        match self {
            Value::Exact(r) => Value::Exact(-r),
            Value::Approx(v) => Value::Approx(-v),
        }
    }

    fn pow_int(&self, exp: i32) -> Option<Value> {
        if exp < 0 && self.is_zero() {
            return None;
        }
        Some(match self {
            Value::Exact(r) => Value::Exact(num::traits::Pow::pow(r.clone(), exp as i64)),
            Value::Approx(v) => Value::Approx(v.powi(exp)),
        })
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => a == b,
            _ => self.to_f64() == other.to_f64(),
        }
    }
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Exact(r) => write!(f, "{}", format_rational(r)),
            Value::Approx(v) => write!(f, "{v}"),
        }
    }
}

pub type Bindings = BTreeMap<String, Value>;

/// Why a system has no usable solution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnsolvableReason {
    Inconsistent,
    /// The named variable (first in appearance order) has no single value.
    Underdetermined(String),
    UnsupportedNonlinear,
    DivisionByZero,
    Empty,
}

impl std::fmt::Display for UnsolvableReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UnsolvableReason::Inconsistent => write!(f, "inconsistent"),
            UnsolvableReason::Underdetermined(v) => write!(f, "underdetermined({v})"),
            UnsolvableReason::UnsupportedNonlinear => write!(f, "unsupported_nonlinear"),
            UnsolvableReason::DivisionByZero => write!(f, "division_by_zero"),
            UnsolvableReason::Empty => write!(f, "empty"),
        }
    }
}

/// Result of [`solve`].
#[derive(Debug, Clone)]
pub enum SolveOutcome {
    /// Every free variable has exactly one value.
    Unique(Bindings),
    /// One variable admits several real values; every candidate satisfies
    /// the whole system, with the other variables solved per candidate.
    MultipleRoots {
        target: String,
        candidates: Vec<Value>,
        bindings_per_candidate: Vec<Bindings>,
    },
    Unsolvable(UnsolvableReason),
}

/// Audit record for a verified solution.
#[derive(Debug, Clone)]
pub struct Solution {
    pub bindings: Bindings,
    pub exact: bool,
    pub max_residual: f64,
}

/// Root selection order for [`value_of`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RootPolicy {
    /// Prefer candidates whose bindings are all nonnegative, then
    /// candidates where the requested variable is nonnegative, then the
    /// smallest absolute value, ties to the larger value.
    #[default]
    NonnegativeFirst,
    /// Smallest absolute value, ties to the larger value.
    SmallestMagnitude,
}

impl std::fmt::Display for RootPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RootPolicy::NonnegativeFirst => write!(f, "nonnegative_first"),
            RootPolicy::SmallestMagnitude => write!(f, "smallest_magnitude"),
        }
    }
}

enum Reduced {
    Satisfied,
    Contradiction,
    Single(String, Value),
    Linear(LinearForm),
    Nonlinear,
}

fn reduce(eq: &Equation, bindings: &Bindings) -> Result<Reduced, UnsolvableReason> {
    let left = linear_form(&eq.lhs, bindings);
    let right = linear_form(&eq.rhs, bindings);
    let form = match (left, right) {
        (Ok(l), Ok(r)) => l.sub(r),
        (Err(Extract::DivisionByZero), _) | (_, Err(Extract::DivisionByZero)) => {
            return Err(UnsolvableReason::DivisionByZero)
        }
        _ => return Ok(Reduced::Nonlinear),
    };
    match form.coeffs.len() {
        0 => {
            if form.constant.is_zero() {
                Ok(Reduced::Satisfied)
            } else {
                Ok(Reduced::Contradiction)
            }
        }
        1 => {
            let (name, coeff) = form.coeffs.iter().next().unwrap();
            let value = form
                .constant
                .neg()
                .div(coeff)
                .ok_or(UnsolvableReason::DivisionByZero)?;
            Ok(Reduced::Single(name.clone(), value))
        }
        _ => Ok(Reduced::Linear(form)),
    }
}

enum Inner {
    Solved(Bindings),
    Failed(UnsolvableReason),
    Roots {
        target: String,
        candidates: Vec<Value>,
        bindings_per_candidate: Vec<Bindings>,
    },
}

/// Variables of `vars` missing from `bindings`, first one if any.
fn first_unbound(vars: &[String], bindings: &Bindings) -> Option<String> {
    vars.iter().find(|v| !bindings.contains_key(*v)).cloned()
}

fn solve_inner(
    equations: &[Equation],
    mut bindings: Bindings,
    all_vars: &[String],
    system: &EquationSystem,
    allow_roots: bool,
) -> Inner {
    let mut remaining: Vec<&Equation> = equations.iter().collect();

    loop {
        // Substitution pass: bind single-unknown linear equations until
        // nothing changes.
        loop {
            let mut changed = false;
            let mut kept = Vec::with_capacity(remaining.len());
            for eq in remaining {
                match reduce(eq, &bindings) {
                    Err(reason) => return Inner::Failed(reason),
                    Ok(Reduced::Satisfied) => {}
                    Ok(Reduced::Contradiction) => {
                        return Inner::Failed(UnsolvableReason::Inconsistent)
                    }
                    Ok(Reduced::Single(name, value)) => {
                        bindings.insert(name, value);
                        changed = true;
                    }
                    Ok(Reduced::Linear(_)) | Ok(Reduced::Nonlinear) => kept.push(eq),
                }
            }
            remaining = kept;
            if !changed {
                break;
            }
        }

        if remaining.is_empty() {
            return match first_unbound(all_vars, &bindings) {
                Some(var) => Inner::Failed(UnsolvableReason::Underdetermined(var)),
                None => Inner::Solved(bindings),
            };
        }

        let mut linear_forms = Vec::new();
        let mut nonlinear: Vec<&Equation> = Vec::new();
        for eq in &remaining {
            match reduce(eq, &bindings) {
                Ok(Reduced::Linear(form)) => linear_forms.push(form),
                Ok(Reduced::Nonlinear) => nonlinear.push(eq),
                Err(reason) => return Inner::Failed(reason),
                // Satisfied/Contradiction/Single were consumed above.
                _ => unreachable!("substitution pass left a reducible equation"),
            }
        }

        let linear_vars: Vec<String> = all_vars
            .iter()
            .filter(|v| linear_forms.iter().any(|f| f.coeffs.contains_key(*v)))
            .cloned()
            .collect();

        if nonlinear.is_empty() {
            return match eliminate(&linear_forms, &linear_vars) {
                ElimOutcome::Inconsistent => Inner::Failed(UnsolvableReason::Inconsistent),
                ElimOutcome::Underdetermined(var) => {
                    Inner::Failed(UnsolvableReason::Underdetermined(var))
                }
                ElimOutcome::Unique(values) => {
                    bindings.extend(values);
                    match first_unbound(all_vars, &bindings) {
                        Some(var) => Inner::Failed(UnsolvableReason::Underdetermined(var)),
                        None => Inner::Solved(bindings),
                    }
                }
            };
        }

        // Exactly one nonlinear equation over exactly one unknown: try the
        // univariate polynomial route.
        if nonlinear.len() == 1 {
            let eq = nonlinear[0];
            let unknowns = equation_unknowns(eq, &bindings);
            if unknowns.len() == 1 {
                if !allow_roots {
                    return Inner::Failed(UnsolvableReason::UnsupportedNonlinear);
                }
                let target = unknowns.into_iter().next().unwrap();
                let rest: Vec<Equation> = remaining
                    .iter()
                    .filter(|e| !std::ptr::eq(**e, eq))
                    .map(|e| (*e).clone())
                    .collect();
                return solve_univariate(eq, &target, rest, bindings, all_vars, system);
            }
        }

        // Mixed leftovers: crack the linear part and loop again, so cases
        // like {x + y = 3, x - y = 1, z^2 = x} reach the univariate route.
        if !linear_forms.is_empty() {
            match eliminate(&linear_forms, &linear_vars) {
                ElimOutcome::Inconsistent => return Inner::Failed(UnsolvableReason::Inconsistent),
                ElimOutcome::Underdetermined(_) => {
                    return Inner::Failed(UnsolvableReason::UnsupportedNonlinear)
                }
                ElimOutcome::Unique(values) => {
                    bindings.extend(values);
                    remaining = nonlinear;
                    continue;
                }
            }
        }

        return Inner::Failed(UnsolvableReason::UnsupportedNonlinear);
    }
}

fn solve_univariate(
    eq: &Equation,
    target: &str,
    rest: Vec<Equation>,
    bindings: Bindings,
    all_vars: &[String],
    system: &EquationSystem,
) -> Inner {
    let constraint = match poly::univariate_constraint(eq, target, &bindings) {
        Ok(c) => c,
        Err(poly::PolyError::DivisionByZero) => {
            return Inner::Failed(UnsolvableReason::DivisionByZero)
        }
        Err(poly::PolyError::NotPolynomial) => {
            return Inner::Failed(UnsolvableReason::UnsupportedNonlinear)
        }
    };
    let roots = match constraint {
        poly::Univariate::Tautology => {
            // The equation does not constrain the unknown after all.
            return match first_unbound(all_vars, &bindings) {
                Some(var) => Inner::Failed(UnsolvableReason::Underdetermined(var)),
                None => Inner::Solved(bindings),
            };
        }
        poly::Univariate::NoSolution => return Inner::Failed(UnsolvableReason::Inconsistent),
        poly::Univariate::Constraint(p) => poly::real_roots(&p),
    };
    if roots.is_empty() {
        return Inner::Failed(UnsolvableReason::Inconsistent);
    }

    let mut candidates = Vec::new();
    let mut per_candidate = Vec::new();
    let mut underdetermined: Option<UnsolvableReason> = None;
    for root in roots {
        let mut with_root = bindings.clone();
        with_root.insert(target.to_string(), root.clone());
        match solve_inner(&rest, with_root, all_vars, system, false) {
            Inner::Solved(full) => {
                if residual_check(system, &full).is_some() {
                    candidates.push(root);
                    per_candidate.push(full);
                }
            }
            Inner::Failed(reason @ UnsolvableReason::Underdetermined(_)) => {
                underdetermined.get_or_insert(reason);
            }
            Inner::Failed(_) | Inner::Roots { .. } => {}
        }
    }

    match candidates.len() {
        0 => Inner::Failed(underdetermined.unwrap_or(UnsolvableReason::Inconsistent)),
        1 => Inner::Solved(per_candidate.pop().unwrap()),
        _ => Inner::Roots {
            target: target.to_string(),
            candidates,
            bindings_per_candidate: per_candidate,
        },
    }
}

fn equation_unknowns(eq: &Equation, bindings: &Bindings) -> Vec<String> {
    let mut vars = Vec::new();
    let mut seen = std::collections::HashSet::new();
    eq.lhs.collect_variables(&mut vars, &mut seen);
    eq.rhs.collect_variables(&mut vars, &mut seen);
    vars.retain(|v| !bindings.contains_key(v));
    vars
}

/// Evaluate an expression over solved values, staying exact while possible.
fn eval_value(expr: &Expr, bindings: &Bindings) -> Option<Value> {
    match expr {
        Expr::Number(v) => Some(Value::Exact(v.clone())),
        Expr::Variable(name) => bindings.get(name).cloned(),
        Expr::Negate(inner) => Some(eval_value(inner, bindings)?.neg()),
        Expr::Binary(op, lhs, rhs) => {
            let l = eval_value(lhs, bindings)?;
            let r = eval_value(rhs, bindings)?;
            match op {
                BinOp::Add => Some(l.add(&r)),
                BinOp::Sub => Some(l.sub(&r)),
                BinOp::Mul => Some(l.mul(&r)),
                BinOp::Div => l.div(&r),
                BinOp::Pow => {
                    let exp = rhs.as_literal_int()?;
                    l.pow_int(exp as i32)
                }
            }
        }
    }
}

/// Residuals of all equations under `bindings`. Exact arithmetic must hit
/// zero exactly; the float path tolerates 1e-9 scaled by magnitude.
/// Returns the max residual, or None when some equation is violated or
/// cannot be evaluated.
fn residual_check(system: &EquationSystem, bindings: &Bindings) -> Option<f64> {
    let mut max_residual = 0.0f64;
    for eq in &system.equations {
        let l = eval_value(&eq.lhs, bindings)?;
        let r = eval_value(&eq.rhs, bindings)?;
        match (&l, &r) {
            (Value::Exact(a), Value::Exact(b)) => {
                if a != b {
                    return None;
                }
            }
            _ => {
                let (lf, rf) = (l.to_f64(), r.to_f64());
                let residual = (lf - rf).abs();
                if residual > 1e-9 * lf.abs().max(rf.abs()).max(1.0) {
                    return None;
                }
                max_residual = max_residual.max(residual);
            }
        }
    }
    Some(max_residual)
}

/// Solve the system. Total: every failure mode is an `Unsolvable` outcome.
pub fn solve(system: &EquationSystem) -> SolveOutcome {
    if system.is_empty() {
        return SolveOutcome::Unsolvable(UnsolvableReason::Empty);
    }
    let all_vars = free_variables(system);
    match solve_inner(&system.equations, Bindings::new(), &all_vars, system, true) {
        Inner::Solved(bindings) => SolveOutcome::Unique(bindings),
        Inner::Failed(reason) => SolveOutcome::Unsolvable(reason),
        Inner::Roots {
            target,
            candidates,
            bindings_per_candidate,
        } => SolveOutcome::MultipleRoots {
            target,
            candidates,
            bindings_per_candidate,
        },
    }
}

/// The predicate of the answer-stage retry loop: does the system determine
/// `target`? True for a unique solution, or for multiple roots when the
/// ambiguous variable is the target itself and at least one real candidate
/// exists. False when the target does not appear at all.
pub fn is_solvable(system: &EquationSystem, target: &str) -> bool {
    if !free_variables(system).iter().any(|v| v == target) {
        return false;
    }
    match solve(system) {
        SolveOutcome::Unique(_) => true,
        SolveOutcome::MultipleRoots {
            target: t,
            candidates,
            ..
        } => t == target && !candidates.is_empty(),
        SolveOutcome::Unsolvable(_) => false,
    }
}

/// Extract the value of `target` from an outcome, selecting among multiple
/// roots by `policy`.
pub fn value_of(outcome: &SolveOutcome, target: &str, policy: RootPolicy) -> Option<Value> {
    match outcome {
        SolveOutcome::Unique(bindings) => bindings.get(target).cloned(),
        SolveOutcome::Unsolvable(_) => None,
        SolveOutcome::MultipleRoots {
            candidates,
            bindings_per_candidate,
            ..
        } => {
            let indices: Vec<usize> = (0..candidates.len())
                .filter(|&i| bindings_per_candidate[i].contains_key(target))
                .collect();
            if indices.is_empty() {
                return None;
            }
            let target_value = |i: usize| bindings_per_candidate[i].get(target).unwrap().to_f64();

            let pool: Vec<usize> = match policy {
                RootPolicy::SmallestMagnitude => indices.clone(),
                RootPolicy::NonnegativeFirst => {
                    let all_nonneg: Vec<usize> = indices
                        .iter()
                        .copied()
                        .filter(|&i| {
                            bindings_per_candidate[i]
                                .values()
                                .all(Value::is_nonnegative)
                        })
                        .collect();
                    if !all_nonneg.is_empty() {
                        all_nonneg
                    } else {
                        let target_nonneg: Vec<usize> = indices
                            .iter()
                            .copied()
                            .filter(|&i| target_value(i) >= 0.0)
                            .collect();
                        if !target_nonneg.is_empty() {
                            target_nonneg
                        } else {
                            indices.clone()
                        }
                    }
                }
            };

            let best = pool
                .into_iter()
                .min_by(|&a, &b| {
                    let (va, vb) = (target_value(a), target_value(b));
                    va.abs().total_cmp(&vb.abs()).then(vb.total_cmp(&va)) // tie: prefer the larger
                })
                .unwrap();
            bindings_per_candidate[best].get(target).cloned()
        }
    }
}

/// Recompute residuals for a claimed solution; the audit companion of
/// [`solve`].
pub fn verify(system: &EquationSystem, bindings: &Bindings) -> Option<Solution> {
    let max_residual = residual_check(system, bindings)?;
    let exact = bindings.values().all(Value::is_exact);
    Some(Solution {
        bindings: bindings.clone(),
        exact,
        max_residual: if exact { 0.0 } else { max_residual },
    })
}

#[cfg(test)]
mod tests;
