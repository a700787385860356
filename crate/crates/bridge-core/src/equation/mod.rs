//! The equation DSL that LLM stages emit and the solver consumes.
//!
//! Grammar (precedence low to high):
//!
//! ```text
//! equation := expr '=' expr
//! expr     := term (('+' | '-') term)*
//! term     := factor (('*' | '/') factor)*
//! factor   := ('-')* power
//! power    := atom (('^' | '**') factor)?
//! atom     := number | identifier | '(' expr ')'
//! ```
//!
//! Numbers are arbitrary-precision rationals; `1.25` parses to 5/4 exactly.
//! Pow exponents must be integer literals with absolute value at most 8.

mod eval;
mod format;
mod lexer;
mod parser;

pub use eval::{eval_expr, EvalError};
pub use format::{format_expr, format_rational, format_system};
pub use parser::parse_expr_text;

use num::BigRational;
use std::collections::HashSet;

/// Binary operators of the DSL.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Expression tree node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Exact rational constant. Parsed literals are always nonnegative;
    /// a leading `-` becomes [`Expr::Negate`].
    Number(BigRational),
    Variable(String),
    Negate(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn number_from_int(n: i64) -> Expr {
        Expr::Number(BigRational::from_integer(n.into()))
    }

    pub fn var(name: &str) -> Expr {
        Expr::Variable(name.to_string())
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Collects variable names in first-appearance (depth-first) order.
    pub fn collect_variables(&self, out: &mut Vec<String>, seen: &mut HashSet<String>) {
        match self {
            Expr::Number(_) => {}
            Expr::Variable(name) => {
                if seen.insert(name.clone()) {
                    out.push(name.clone());
                }
            }
            Expr::Negate(inner) => inner.collect_variables(out, seen),
            Expr::Binary(_, lhs, rhs) => {
                lhs.collect_variables(out, seen);
                rhs.collect_variables(out, seen);
            }
        }
    }

    /// True if any node of the tree is a pow operation.
    pub fn contains_pow(&self) -> bool {
        match self {
            Expr::Number(_) | Expr::Variable(_) => false,
            Expr::Negate(inner) => inner.contains_pow(),
            Expr::Binary(op, lhs, rhs) => {
                *op == BinOp::Pow || lhs.contains_pow() || rhs.contains_pow()
            }
        }
    }

    /// If the expression is an integer literal (optionally negated),
    /// returns its value.
    pub fn as_literal_int(&self) -> Option<i64> {
        match self {
            Expr::Number(r) if r.is_integer() => num::ToPrimitive::to_i64(&r.to_integer()),
            Expr::Negate(inner) => inner.as_literal_int().map(|v| -v),
            _ => None,
        }
    }
}

/// One `lhs = rhs` constraint plus the raw line it came from.
#[derive(Debug, Clone)]
pub struct Equation {
    pub lhs: Expr,
    pub rhs: Expr,
    pub source_line: String,
}

impl Equation {
    /// Structural equality on both sides, ignoring the source line.
    pub fn same_shape(&self, other: &Equation) -> bool {
        self.lhs == other.lhs && self.rhs == other.rhs
    }
}

/// An ordered set of equations over named unknowns.
///
/// Structurally identical equations are deduplicated on construction,
/// keeping first-occurrence order.
#[derive(Debug, Clone, Default)]
pub struct EquationSystem {
    pub equations: Vec<Equation>,
    pub source_text: String,
}

impl EquationSystem {
    pub fn new(equations: Vec<Equation>, source_text: String) -> EquationSystem {
        let mut deduped: Vec<Equation> = Vec::with_capacity(equations.len());
        for eq in equations {
            if !deduped.iter().any(|e| e.same_shape(&eq)) {
                deduped.push(eq);
            }
        }
        EquationSystem {
            equations: deduped,
            source_text,
        }
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    /// Union with another system: equations of `self` first, then the new
    /// ones from `other`, structurally deduplicated.
    pub fn union(&self, other: &EquationSystem) -> EquationSystem {
        let mut all = self.equations.clone();
        all.extend(other.equations.iter().cloned());
        let source = format!("{}\n{}", self.source_text, other.source_text);
        EquationSystem::new(all, source)
    }
}

/// Variables of a system in first-appearance order (lhs before rhs,
/// equations in source order).
pub fn free_variables(system: &EquationSystem) -> Vec<String> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for eq in &system.equations {
        eq.lhs.collect_variables(&mut out, &mut seen);
        eq.rhs.collect_variables(&mut out, &mut seen);
    }
    out
}

/// Parse failures. In lenient mode only `EmptySystem` is ever returned.
#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum ParseError {
    #[error("no equations found in input")]
    EmptySystem,
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
}

/// Whether bad lines are skipped or fatal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseMode {
    /// Skip lines that are blank, fences, prose, or fail the grammar.
    Lenient,
    /// Any non-blank line that is not a well-formed equation is an error.
    Strict,
}

/// Why a line was skipped during lenient parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkipReason {
    Blank,
    CodeFence,
    NoEquals,
    MultipleEquals,
    Syntax { column: usize, message: String },
}

/// A line that did not become an equation.
#[derive(Debug, Clone)]
pub struct SkippedLine {
    pub line_number: usize,
    pub text: String,
    pub reason: SkipReason,
}

impl SkippedLine {
    /// Skips that represent dropped content, as opposed to expected noise
    /// like blank lines and code fences.
    pub fn is_content_skip(&self) -> bool {
        !matches!(self.reason, SkipReason::Blank | SkipReason::CodeFence)
    }
}

/// Result of [`parse_system`]: the system plus the lines that were dropped.
#[derive(Debug, Clone)]
pub struct ParsedSystem {
    pub system: EquationSystem,
    pub skipped: Vec<SkippedLine>,
}

impl ParsedSystem {
    pub fn content_skips(&self) -> usize {
        self.skipped.iter().filter(|s| s.is_content_skip()).count()
    }
}

/// Parse raw (possibly noisy) text into an equation system.
///
/// Every line containing exactly one `=` and parsing under the grammar
/// becomes an equation. In lenient mode everything else is skipped and
/// recorded; in strict mode only blank lines may be skipped.
pub fn parse_system(text: &str, mode: ParseMode) -> Result<ParsedSystem, ParseError> {
    let mut equations = Vec::new();
    let mut skipped = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_number = idx + 1;
        let line = raw_line.trim();
        let skip = |reason: SkipReason| SkippedLine {
            line_number,
            text: raw_line.to_string(),
            reason,
        };

        if line.is_empty() {
            skipped.push(skip(SkipReason::Blank));
            continue;
        }
        if line.starts_with("```") {
            if mode == ParseMode::Strict {
                return Err(ParseError::Syntax {
                    line: line_number,
                    column: 1,
                    message: "code fence in strict input".to_string(),
                });
            }
            skipped.push(skip(SkipReason::CodeFence));
            continue;
        }

        let eq_count = line.chars().filter(|c| *c == '=').count();
        if eq_count != 1 {
            if mode == ParseMode::Strict {
                return Err(ParseError::Syntax {
                    line: line_number,
                    column: 1,
                    message: if eq_count == 0 {
                        "line has no '='".to_string()
                    } else {
                        "line has more than one '='".to_string()
                    },
                });
            }
            skipped.push(skip(if eq_count == 0 {
                SkipReason::NoEquals
            } else {
                SkipReason::MultipleEquals
            }));
            continue;
        }

        match parser::parse_equation_line(line) {
            Ok(eq) => equations.push(eq),
            Err((column, message)) => {
                if mode == ParseMode::Strict {
                    return Err(ParseError::Syntax {
                        line: line_number,
                        column,
                        message,
                    });
                }
                skipped.push(skip(SkipReason::Syntax { column, message }));
            }
        }
    }

    if equations.is_empty() {
        return Err(ParseError::EmptySystem);
    }

    Ok(ParsedSystem {
        system: EquationSystem::new(equations, text.to_string()),
        skipped,
    })
}

/// Parse a single line as an equation. Always strict: any failure is a
/// syntax error with a 1-based column.
pub fn parse_equation(line: &str) -> Result<Equation, ParseError> {
    parser::parse_equation_line(line.trim()).map_err(|(column, message)| ParseError::Syntax {
        line: 1,
        column,
        message,
    })
}
