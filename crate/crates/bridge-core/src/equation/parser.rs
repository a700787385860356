//! Recursive descent parser over the token stream.

use super::lexer::{lex, Spanned, Token};
use super::{BinOp, Equation, Expr};

/// (1-based column, message)
type PError = (usize, String);

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    line_len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|s| &s.token)
    }

    fn column(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|s| s.column)
            .unwrap_or(self.line_len + 1)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|s| s.token.clone());
        self.pos += 1;
        t
    }

    fn eat(&mut self, want: &Token) -> bool {
        if self.peek() == Some(want) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, PError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Token::Plus) => BinOp::Add,
                Some(Token::Minus) => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, PError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(Token::Star) => BinOp::Mul,
                Some(Token::Slash) => BinOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, PError> {
        let mut negations = 0;
        while self.eat(&Token::Minus) {
            negations += 1;
        }
        let mut node = self.power()?;
        for _ in 0..negations {
            node = Expr::Negate(Box::new(node));
        }
        Ok(node)
    }

    fn power(&mut self) -> Result<Expr, PError> {
        let base = self.atom()?;
        if self.peek() == Some(&Token::Caret) {
            let caret_col = self.column();
            self.pos += 1;
            let exponent = self.factor()?;
            match exponent.as_literal_int() {
                Some(v) if v.abs() <= 8 => {}
                Some(_) => {
                    return Err((
                        caret_col,
                        "pow exponent out of range (|e| must be <= 8)".to_string(),
                    ))
                }
                None => {
                    return Err((
                        caret_col,
                        "pow exponent must be an integer literal".to_string(),
                    ))
                }
            }
            return Ok(Expr::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, PError> {
        let column = self.column();
        match self.bump() {
            Some(Token::Number(value)) => Ok(Expr::Number(value)),
            Some(Token::Ident(name)) => Ok(Expr::Variable(name)),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                if !self.eat(&Token::RParen) {
                    return Err((self.column(), "unclosed parenthesis".to_string()));
                }
                Ok(inner)
            }
            Some(other) => Err((column, format!("unexpected token {other:?}"))),
            None => Err((column, "unexpected end of input".to_string())),
        }
    }
}

fn parse_expr_tokens(parser: &mut Parser) -> Result<Expr, PError> {
    parser.expr()
}

/// Parse one `lhs = rhs` line. Errors carry the 1-based column.
pub(super) fn parse_equation_line(line: &str) -> Result<Equation, PError> {
    let tokens = lex(line)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        line_len: line.chars().count(),
    };

    let lhs = parse_expr_tokens(&mut parser)?;
    if !parser.eat(&Token::Equals) {
        return Err((parser.column(), "expected '='".to_string()));
    }
    let rhs = parse_expr_tokens(&mut parser)?;
    if parser.peek().is_some() {
        return Err((parser.column(), "trailing input after equation".to_string()));
    }

    Ok(Equation {
        lhs,
        rhs,
        source_line: line.to_string(),
    })
}

/// Parse a bare expression (no `=`). Used by tests and the solve command.
pub fn parse_expr_text(text: &str) -> Result<Expr, super::ParseError> {
    let trimmed = text.trim();
    let tokens = lex(trimmed).map_err(|(column, message)| super::ParseError::Syntax {
        line: 1,
        column,
        message,
    })?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        line_len: trimmed.chars().count(),
    };
    let expr =
        parse_expr_tokens(&mut parser).map_err(|(column, message)| super::ParseError::Syntax {
            line: 1,
            column,
            message,
        })?;
    if parser.peek().is_some() {
        return Err(super::ParseError::Syntax {
            line: 1,
            column: parser.column(),
            message: "trailing input after expression".to_string(),
        });
    }
    Ok(expr)
}
