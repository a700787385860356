//! Tokenizer for equation lines.
//!
//! Normalization happens here: digit-group commas inside numbers are
//! dropped, a `$` sigil before a number is dropped, a `%` suffix divides the
//! literal by 100, and the unicode operators `×`, `÷`, `−` map to `*`, `/`,
//! `-`.

use num::{BigInt, BigRational, One};

#[derive(Debug, Clone, PartialEq)]
pub enum Token {
    Number(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Equals,
}

/// Token plus the 1-based column of its first character.
#[derive(Debug, Clone, PartialEq)]
pub struct Spanned {
    pub token: Token,
    pub column: usize,
}

pub type LexError = (usize, String);

pub fn lex(line: &str) -> Result<Vec<Spanned>, LexError> {
    let chars: Vec<char> = line.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;

    while i < chars.len() {
        let column = i + 1;
        let c = chars[i];
        match c {
            ' ' | '\t' | '\r' => i += 1,
            '$' if i + 1 < chars.len()
                && (chars[i + 1].is_ascii_digit() || chars[i + 1] == '.') =>
            {
                i += 1;
            }
            '+' => {
                tokens.push(Spanned {
                    token: Token::Plus,
                    column,
                });
                i += 1;
            }
            '-' | '−' => {
                tokens.push(Spanned {
                    token: Token::Minus,
                    column,
                });
                i += 1;
            }
            '*' => {
                if i + 1 < chars.len() && chars[i + 1] == '*' {
                    tokens.push(Spanned {
                        token: Token::Caret,
                        column,
                    });
                    i += 2;
                } else {
                    tokens.push(Spanned {
                        token: Token::Star,
                        column,
                    });
                    i += 1;
                }
            }
            '×' => {
                tokens.push(Spanned {
                    token: Token::Star,
                    column,
                });
                i += 1;
            }
            '/' | '÷' => {
                tokens.push(Spanned {
                    token: Token::Slash,
                    column,
                });
                i += 1;
            }
            '^' => {
                tokens.push(Spanned {
                    token: Token::Caret,
                    column,
                });
                i += 1;
            }
            '(' => {
                tokens.push(Spanned {
                    token: Token::LParen,
                    column,
                });
                i += 1;
            }
            ')' => {
                tokens.push(Spanned {
                    token: Token::RParen,
                    column,
                });
                i += 1;
            }
            '=' => {
                tokens.push(Spanned {
                    token: Token::Equals,
                    column,
                });
                i += 1;
            }
            _ if c.is_ascii_digit() || (c == '.' && next_is_digit(&chars, i + 1)) => {
                let (value, next) = lex_number(&chars, i)?;
                tokens.push(Spanned {
                    token: Token::Number(value),
                    column,
                });
                i = next;
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let name: String = chars[start..i].iter().collect();
                tokens.push(Spanned {
                    token: Token::Ident(name),
                    column,
                });
            }
            _ => return Err((column, format!("unexpected character '{c}'"))),
        }
    }

    Ok(tokens)
}

fn next_is_digit(chars: &[char], i: usize) -> bool {
    chars.get(i).is_some_and(|c| c.is_ascii_digit())
}

/// Lex one numeric literal starting at `start`. Handles group commas
/// (`50,000`), a fractional part, and a `%` suffix.
fn lex_number(chars: &[char], start: usize) -> Result<(BigRational, usize), LexError> {
    let mut i = start;
    let mut int_digits = String::new();
    let mut frac_digits = String::new();

    while i < chars.len() {
        let c = chars[i];
        if c.is_ascii_digit() {
            int_digits.push(c);
            i += 1;
        } else if c == ',' && is_group_comma(chars, i) {
            i += 1; // drop the digit-group comma
        } else {
            break;
        }
    }

    if i < chars.len() && chars[i] == '.' && next_is_digit(chars, i + 1) {
        i += 1;
        while i < chars.len() && chars[i].is_ascii_digit() {
            frac_digits.push(chars[i]);
            i += 1;
        }
    }

    if int_digits.is_empty() && frac_digits.is_empty() {
        return Err((start + 1, "malformed number".to_string()));
    }

    let digits = format!("{int_digits}{frac_digits}");
    let numer: BigInt = digits
        .parse()
        .map_err(|_| (start + 1, "malformed number".to_string()))?;
    let mut denom = BigInt::one();
    for _ in 0..frac_digits.len() {
        denom *= 10;
    }

    let mut value = BigRational::new(numer, denom);
    if i < chars.len() && chars[i] == '%' {
        value /= BigRational::from_integer(100.into());
        i += 1;
    }

    Ok((value, i))
}

/// A comma is a digit-group separator when a digit precedes it and exactly
/// three digits follow before the next non-digit.
fn is_group_comma(chars: &[char], i: usize) -> bool {
    if i == 0 || !chars[i - 1].is_ascii_digit() {
        return false;
    }
    let following = chars[i + 1..]
        .iter()
        .take_while(|c| c.is_ascii_digit())
        .count();
    following == 3
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::ToPrimitive;

    fn num_at(tokens: &[Spanned], idx: usize) -> f64 {
        match &tokens[idx].token {
            Token::Number(r) => r.to_f64().unwrap(),
            other => panic!("expected number, got {other:?}"),
        }
    }

    #[test]
    fn group_commas_and_dollar() {
        let toks = lex("x = $50,000").unwrap();
        assert_eq!(toks.len(), 3);
        assert_eq!(num_at(&toks, 2), 50000.0);
    }

    #[test]
    fn percent_divides_by_hundred() {
        let toks = lex("5%").unwrap();
        assert_eq!(num_at(&toks, 0), 0.05);
    }

    #[test]
    fn non_group_comma_is_error() {
        let err = lex("1,23").unwrap_err();
        assert_eq!(err.0, 2);
    }

    #[test]
    fn double_star_is_pow() {
        let toks = lex("a ** 2").unwrap();
        assert_eq!(toks[1].token, Token::Caret);
    }

    #[test]
    fn unicode_operators() {
        let toks = lex("a × b ÷ c − d").unwrap();
        let kinds: Vec<_> = toks.iter().map(|t| t.token.clone()).collect();
        assert!(matches!(kinds[1], Token::Star));
        assert!(matches!(kinds[3], Token::Slash));
        assert!(matches!(kinds[5], Token::Minus));
    }

    #[test]
    fn decimal_is_exact_rational() {
        let toks = lex("1.25").unwrap();
        match &toks[0].token {
            Token::Number(r) => {
                assert_eq!(*r, BigRational::new(5.into(), 4.into()));
            }
            _ => panic!(),
        }
    }
}
