//! Linear-form extraction and exact fraction-free elimination.

use super::Value;
use crate::equation::{BinOp, Expr};
use num::{BigInt, BigRational, Integer, One, Signed, Zero};
use std::collections::BTreeMap;

/// Why an expression failed to reduce to a linear form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Extract {
    Nonlinear,
    DivisionByZero,
}

/// constant + sum(coeff_i * var_i), over exact or approximate scalars.
#[derive(Debug, Clone)]
pub(crate) struct LinearForm {
    pub constant: Value,
    pub coeffs: BTreeMap<String, Value>,
}

impl LinearForm {
    fn constant(value: Value) -> LinearForm {
        LinearForm {
            constant: value,
            coeffs: BTreeMap::new(),
        }
    }

    fn variable(name: &str) -> LinearForm {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(name.to_string(), Value::from_int(1));
        LinearForm {
            constant: Value::zero(),
            coeffs,
        }
    }

    fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn neg(mut self) -> LinearForm {
        self.constant = self.constant.neg();
        for v in self.coeffs.values_mut() {
            *v = v.neg();
        }
        self
    }

    fn scale(mut self, factor: &Value) -> LinearForm {
        self.constant = self.constant.mul(factor);
        for v in self.coeffs.values_mut() {
            *v = v.mul(factor);
        }
        self.normalize()
    }

    pub(crate) fn sub(self, other: LinearForm) -> LinearForm {
        self.add(other.neg())
    }

    fn add(mut self, other: LinearForm) -> LinearForm {
        self.constant = self.constant.add(&other.constant);
        for (name, value) in other.coeffs {
            match self.coeffs.remove(&name) {
                Some(existing) => {
                    self.coeffs.insert(name, existing.add(&value));
                }
                None => {
                    self.coeffs.insert(name, value);
                }
            }
        }
        self.normalize()
    }

    fn normalize(mut self) -> LinearForm {
        self.coeffs.retain(|_, v| !v.is_zero());
        self
    }

    pub(crate) fn is_exact(&self) -> bool {
        self.constant.is_exact() && self.coeffs.values().all(Value::is_exact)
    }
}

/// Try to reduce `expr` to a linear form, treating bound variables as
/// constants.
pub(crate) fn linear_form(
    expr: &Expr,
    bindings: &BTreeMap<String, Value>,
) -> Result<LinearForm, Extract> {
    match expr {
        Expr::Number(value) => Ok(LinearForm::constant(Value::Exact(value.clone()))),
        Expr::Variable(name) => match bindings.get(name) {
            Some(value) => Ok(LinearForm::constant(value.clone())),
            None => Ok(LinearForm::variable(name)),
        },
        Expr::Negate(inner) => Ok(linear_form(inner, bindings)?.neg()),
        Expr::Binary(op, lhs, rhs) => {
            let left = linear_form(lhs, bindings)?;
            let right = linear_form(rhs, bindings)?;
            match op {
                BinOp::Add => Ok(left.add(right)),
                BinOp::Sub => Ok(left.sub(right)),
                BinOp::Mul => {
                    if left.is_constant() {
                        Ok(right.scale(&left.constant))
                    } else if right.is_constant() {
                        Ok(left.scale(&right.constant))
                    } else {
                        Err(Extract::Nonlinear)
                    }
                }
                BinOp::Div => {
                    if !right.is_constant() {
                        return Err(Extract::Nonlinear);
                    }
                    if right.constant.is_zero() {
                        return Err(Extract::DivisionByZero);
                    }
                    let inverse = Value::from_int(1)
                        .div(&right.constant)
                        .ok_or(Extract::DivisionByZero)?;
                    Ok(left.scale(&inverse))
                }
                BinOp::Pow => {
                    let exp = rhs.as_literal_int().ok_or(Extract::Nonlinear)?;
                    if left.is_constant() {
                        let value = left
                            .constant
                            .pow_int(exp as i32)
                            .ok_or(Extract::DivisionByZero)?;
                        return Ok(LinearForm::constant(value));
                    }
                    match exp {
                        0 => Ok(LinearForm::constant(Value::from_int(1))),
                        1 => Ok(left),
                        _ => Err(Extract::Nonlinear),
                    }
                }
            }
        }
    }
}

/// Result of eliminating a linear subsystem.
#[derive(Debug, Clone)]
pub(crate) enum ElimOutcome {
    /// Every unknown of the subsystem has a single value.
    Unique(Vec<(String, Value)>),
    Inconsistent,
    /// The named variable (first in appearance order) has no single value.
    Underdetermined(String),
}

/// Solve `forms` (each meaning `constant + sum coeff*x = 0`) for the
/// unknowns listed in `var_order`.
///
/// When every coefficient is exact the elimination is fraction-free over
/// big integers; rows are reduced by their gcd to control growth. Forms
/// containing approximate scalars fall back to partial-pivot f64
/// elimination.
pub(crate) fn eliminate(forms: &[LinearForm], var_order: &[String]) -> ElimOutcome {
    if forms.is_empty() {
        return ElimOutcome::Unique(Vec::new());
    }
    if forms.iter().all(LinearForm::is_exact) {
        eliminate_exact(forms, var_order)
    } else {
        eliminate_f64(forms, var_order)
    }
}

fn eliminate_exact(forms: &[LinearForm], var_order: &[String]) -> ElimOutcome {
    let n = var_order.len();
    // Each row: n coefficient columns plus the augmented column, scaled to
    // integers by the lcm of denominators.
    let mut rows: Vec<Vec<BigInt>> = forms
        .iter()
        .map(|form| {
            let mut rationals: Vec<BigRational> = Vec::with_capacity(n + 1);
            for var in var_order {
                rationals.push(match form.coeffs.get(var) {
                    Some(Value::Exact(r)) => r.clone(),
                    Some(Value::Approx(_)) => unreachable!("exact path given approx form"),
                    None => BigRational::zero(),
                });
            }
            let constant = match &form.constant {
                Value::Exact(r) => r.clone(),
                Value::Approx(_) => unreachable!("exact path given approx form"),
            };
            rationals.push(-constant);
            let mut lcm = BigInt::one();
            for r in &rationals {
                lcm = lcm.lcm(r.denom());
            }
            let row: Vec<BigInt> = rationals
                .iter()
                .map(|r| r.numer() * (&lcm / r.denom()))
                .collect();
            reduce_row(row)
        })
        .collect();

    // Forward fraction-free elimination into row echelon form.
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; n];
    let mut next_row = 0;
    for col in 0..n {
        let Some(pivot) = (next_row..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(next_row, pivot);
        let pivot_val = rows[next_row][col].clone();
        for r in next_row + 1..rows.len() {
            if rows[r][col].is_zero() {
                continue;
            }
            let factor = rows[r][col].clone();
            let new_row: Vec<BigInt> = (0..=n)
                .map(|j| &rows[r][j] * &pivot_val - &rows[next_row][j] * &factor)
                .collect();
            rows[r] = reduce_row(new_row);
        }
        pivot_of_col[col] = Some(next_row);
        next_row += 1;
    }

    // Zero rows with nonzero augmented column mean 0 = c.
    for row in &rows[next_row.min(rows.len())..] {
        if row[..n].iter().all(Zero::is_zero) && !row[n].is_zero() {
            return ElimOutcome::Inconsistent;
        }
    }

    // Back-substitute, tracking which variables depend on a free column.
    let mut values: Vec<Option<BigRational>> = vec![None; n];
    let mut determined = vec![false; n];
    for col in (0..n).rev() {
        let Some(row_idx) = pivot_of_col[col] else {
            continue; // free column: stays undetermined
        };
        let row = &rows[row_idx];
        let mut acc = BigRational::from_integer(row[n].clone());
        let mut depends_on_free = false;
        for j in col + 1..n {
            if row[j].is_zero() {
                continue;
            }
            match &values[j] {
                Some(v) => acc -= BigRational::from_integer(row[j].clone()) * v,
                None => {
                    depends_on_free = true;
                    break;
                }
            }
        }
        if !depends_on_free {
            values[col] = Some(acc / BigRational::from_integer(row[col].clone()));
            determined[col] = true;
        }
    }

    if determined.iter().all(|d| *d) {
        let solution = var_order
            .iter()
            .zip(values)
            .map(|(name, v)| (name.clone(), Value::Exact(v.unwrap())))
            .collect();
        ElimOutcome::Unique(solution)
    } else {
        let first = determined.iter().position(|d| !*d).unwrap();
        ElimOutcome::Underdetermined(var_order[first].clone())
    }
}

fn reduce_row(mut row: Vec<BigInt>) -> Vec<BigInt> {
    let mut gcd = BigInt::zero();
    for v in &row {
        gcd = gcd.gcd(v);
    }
    if gcd > BigInt::one() {
        for v in &mut row {
            *v /= &gcd;
        }
    }
    row
}

const F64_PIVOT_EPS: f64 = 1e-12;

fn eliminate_f64(forms: &[LinearForm], var_order: &[String]) -> ElimOutcome {
    let n = var_order.len();
    let mut rows: Vec<Vec<f64>> = forms
        .iter()
        .map(|form| {
            let mut row: Vec<f64> = var_order
                .iter()
                .map(|var| form.coeffs.get(var).map(Value::to_f64).unwrap_or(0.0))
                .collect();
            row.push(-form.constant.to_f64());
            let scale = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if scale > 0.0 {
                for v in &mut row {
                    *v /= scale;
                }
            }
            row
        })
        .collect();

    let mut pivot_of_col: Vec<Option<usize>> = vec![None; n];
    let mut next_row = 0;
    for col in 0..n {
        let pivot = (next_row..rows.len())
            .max_by(|&a, &b| rows[a][col].abs().total_cmp(&rows[b][col].abs()));
        let Some(pivot) = pivot else { continue };
        if rows[pivot][col].abs() < F64_PIVOT_EPS {
            continue;
        }
        rows.swap(next_row, pivot);
        let pivot_row = rows[next_row].clone();
        let pivot_val = pivot_row[col];
        for row in rows.iter_mut().skip(next_row + 1) {
            let factor = row[col] / pivot_val;
            if factor == 0.0 {
                continue;
            }
            for (value, pivot_value) in row.iter_mut().zip(&pivot_row) {
                *value -= factor * pivot_value;
            }
        }
        pivot_of_col[col] = Some(next_row);
        next_row += 1;
    }

    for row in &rows[next_row.min(rows.len())..] {
        let coeff_scale = row[..n].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if coeff_scale < F64_PIVOT_EPS && row[n].abs() > 1e-9 {
            return ElimOutcome::Inconsistent;
        }
    }

    let mut values: Vec<Option<f64>> = vec![None; n];
    let mut determined = vec![false; n];
    for col in (0..n).rev() {
        let Some(row_idx) = pivot_of_col[col] else {
            continue;
        };
        let row = &rows[row_idx];
        let mut acc = row[n];
        let mut depends_on_free = false;
        for j in col + 1..n {
            if row[j].abs() < F64_PIVOT_EPS {
                continue;
            }
            match values[j] {
                Some(v) => acc -= row[j] * v,
                None => {
                    depends_on_free = true;
                    break;
                }
            }
        }
        if !depends_on_free {
            values[col] = Some(acc / row[col]);
            determined[col] = true;
        }
    }

    if determined.iter().all(|d| *d) {
        let solution = var_order
            .iter()
            .zip(values)
            .map(|(name, v)| (name.clone(), Value::Approx(v.unwrap())))
            .collect();
        ElimOutcome::Unique(solution)
    } else {
        let first = determined.iter().position(|d| !*d).unwrap();
        ElimOutcome::Underdetermined(var_order[first].clone())
    }
}
