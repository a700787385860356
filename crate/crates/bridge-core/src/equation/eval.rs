//! Exact rational evaluation of expressions under a variable binding.

use super::{BinOp, Expr};
use num::{BigRational, ToPrimitive, Zero};
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable '{0}'")]
    UnboundVariable(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("unsupported exponent (must be an integer)")]
    UnsupportedExponent,
}

/// Evaluate `expr` exactly over the rationals.
pub fn eval_expr(
    expr: &Expr,
    bindings: &HashMap<String, BigRational>,
) -> Result<BigRational, EvalError> {
    match expr {
        Expr::Number(value) => Ok(value.clone()),
        Expr::Variable(name) => bindings
            .get(name)
            .cloned()
            .ok_or_else(|| EvalError::UnboundVariable(name.clone())),
        Expr::Negate(inner) => Ok(-eval_expr(inner, bindings)?),
        Expr::Binary(op, lhs, rhs) => {
            let left = eval_expr(lhs, bindings)?;
            let right = eval_expr(rhs, bindings)?;
            match op {
                BinOp::Add => Ok(left + right),
                BinOp::Sub => Ok(left - right),
                BinOp::Mul => Ok(left * right),
                BinOp::Div => {
                    if right.is_zero() {
                        Err(EvalError::DivisionByZero)
                    } else {
                        Ok(left / right)
                    }
                }
                BinOp::Pow => {
                    if !right.is_integer() {
                        return Err(EvalError::UnsupportedExponent);
                    }
                    let exp = right
                        .to_integer()
                        .to_i32()
                        .ok_or(EvalError::UnsupportedExponent)?;
                    rational_pow(&left, exp)
                }
            }
        }
    }
}

pub(crate) fn rational_pow(base: &BigRational, exp: i32) -> Result<BigRational, EvalError> {
    if exp < 0 && base.is_zero() {
        return Err(EvalError::DivisionByZero);
    }
    Ok(num::traits::Pow::pow(base.clone(), exp as i64))
}
