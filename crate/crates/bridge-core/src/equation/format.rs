//! Canonical formatting: `lhs = rhs`, space-separated operators,
//! parentheses only where precedence requires them.

use super::{BinOp, EquationSystem, Expr};
use num::{BigInt, BigRational, Signed, Zero};

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(expr: &Expr) -> u8 {
    match expr {
        Expr::Number(r) if r.is_negative() => PREC_NEG,
        Expr::Number(_) | Expr::Variable(_) => PREC_ATOM,
        Expr::Negate(_) => PREC_NEG,
        Expr::Binary(BinOp::Add | BinOp::Sub, _, _) => PREC_ADD,
        Expr::Binary(BinOp::Mul | BinOp::Div, _, _) => PREC_MUL,
        Expr::Binary(BinOp::Pow, _, _) => PREC_POW,
    }
}

fn op_str(op: BinOp) -> &'static str {
    match op {
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mul => "*",
        BinOp::Div => "/",
        BinOp::Pow => "^",
    }
}

fn write_expr(expr: &Expr, min_prec: u8, out: &mut String) {
    let needs_parens = precedence(expr) < min_prec;
    if needs_parens {
        out.push('(');
    }
    match expr {
        Expr::Number(r) => out.push_str(&format_rational(r)),
        Expr::Variable(name) => out.push_str(name),
        Expr::Negate(inner) => {
            out.push('-');
            write_expr(inner, PREC_NEG, out);
        }
        Expr::Binary(op, lhs, rhs) => {
            // Left-associative ops keep a bare left child at equal
            // precedence; the right child needs one level more so that
            // `a - (b - c)` and `a * (b / c)` survive a round trip.
            // Pow is right-associative and its left side is an atom
            // in the grammar.
            let (left_min, right_min) = match op {
                BinOp::Add | BinOp::Sub => (PREC_ADD, PREC_MUL),
                BinOp::Mul | BinOp::Div => (PREC_MUL, PREC_NEG),
                BinOp::Pow => (PREC_ATOM, PREC_NEG),
            };
            write_expr(lhs, left_min, out);
            out.push(' ');
            out.push_str(op_str(*op));
            out.push(' ');
            write_expr(rhs, right_min, out);
        }
    }
    if needs_parens {
        out.push(')');
    }
}

/// Exact text for a rational: integers as digits, terminating decimals in
/// point notation, anything else as a parenthesized fraction.
pub fn format_rational(r: &BigRational) -> String {
    if r.is_negative() {
        return format!("-{}", format_rational(&-r));
    }
    if r.is_integer() {
        return r.to_integer().to_string();
    }
    if let Some(scale) = decimal_scale(r.denom()) {
        let mut pow10 = BigInt::from(1);
        for _ in 0..scale {
            pow10 *= 10;
        }
        let mantissa = (r.numer() * &pow10) / r.denom();
        let digits = mantissa.to_string();
        let scale = scale as usize;
        if digits.len() > scale {
            let (int_part, frac_part) = digits.split_at(digits.len() - scale);
            return format!("{int_part}.{frac_part}");
        }
        return format!("0.{}{digits}", "0".repeat(scale - digits.len()));
    }
    format!("({}/{})", r.numer(), r.denom())
}

/// If `denom` is 2^a * 5^b, the number of decimal digits needed (max(a, b)).
fn decimal_scale(denom: &BigInt) -> Option<u32> {
    let mut d = denom.clone();
    let mut twos = 0u32;
    let mut fives = 0u32;
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while (&d % &two).is_zero() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if d == BigInt::from(1) {
        Some(twos.max(fives))
    } else {
        None
    }
}

/// Canonical text of one expression.
pub fn format_expr(expr: &Expr) -> String {
    let mut out = String::new();
    write_expr(expr, 0, &mut out);
    out
}

/// One equation per line, newline-terminated.
pub fn format_system(system: &EquationSystem) -> String {
    let mut out = String::new();
    for eq in &system.equations {
        write_expr(&eq.lhs, 0, &mut out);
        out.push_str(" = ");
        write_expr(&eq.rhs, 0, &mut out);
        out.push('\n');
    }
    out
}
