//! Reader for the plain-text system format.
//!
//! ```text
//! # comment
//! vars: x, y
//! x^2 + (0+1i)*y - 1
//! x*y - 2
//! ```

use num_complex::Complex;
use thiserror::Error;

use super::{Polynomial, PolynomialSystem};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: unknown variable '{name}'")]
    UnknownVariable { line: usize, col: usize, name: String },
    #[error("{line}:{col}: malformed numeric literal '{text}'")]
    MalformedLiteral { line: usize, col: usize, text: String },
    #[error("missing 'vars:' header")]
    MissingHeader,
    #[error("no polynomials given")]
    NoPolynomials,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Real(String),
    Imag(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

struct Lexed {
    tok: Tok,
    col: usize,
}

fn lex(line: &str, lineno: usize) -> Result<Vec<Lexed>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        let col = i + 1;
        if ch.is_whitespace() {
            i += 1;
            continue;
        }
        let simple = match ch {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push(Lexed { tok, col });
            i += 1;
            continue;
        }
        if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part: e or E, optional sign, digits
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                } else {
                    let text: String = chars[start..j.min(chars.len())].iter().collect();
                    return Err(ParseError::MalformedLiteral {
                        line: lineno,
                        col,
                        text,
                    });
                }
            }
            let text: String = chars[start..i].iter().collect();
            let imag = i < chars.len() && chars[i] == 'i';
            if imag {
                i += 1;
            }
            if i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_' || chars[j] == '.') {
                    j += 1;
                }
                let text: String = chars[start..j].iter().collect();
                return Err(ParseError::MalformedLiteral {
                    line: lineno,
                    col,
                    text,
                });
            }
            out.push(Lexed {
                tok: if imag { Tok::Imag(text) } else { Tok::Real(text) },
                col,
            });
            continue;
        }
        if ch.is_alphabetic() || ch == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Lexed {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                col,
            });
            continue;
        }
        return Err(ParseError::Syntax {
            line: lineno,
            col,
            msg: format!("unexpected character '{ch}'"),
        });
    }
    Ok(out)
}

struct Parser<'a, T: Scalar> {
    toks: &'a [Lexed],
    pos: usize,
    line: usize,
    end_col: usize,
    names: &'a [String],
    _marker: std::marker::PhantomData<T>,
}

impl<'a, T: Scalar> Parser<'a, T> {
    fn nvars(&self) -> usize {
        self.names.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|l| &l.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |l| l.col)
    }

    fn syntax(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            col: self.col(),
            msg: msg.into(),
        }
    }

    fn number(&self, text: &str) -> Result<T, ParseError> {
        T::from_str_radix(text, 10).map_err(|_| ParseError::MalformedLiteral {
            line: self.line,
            col: self.col(),
            text: text.to_string(),
        })
    }

    fn expr(&mut self) -> Result<Polynomial<T>, ParseError> {
        let mut negate = false;
        match self.peek() {
            Some(Tok::Minus) => {
                negate = true;
                self.pos += 1;
            }
            Some(Tok::Plus) => self.pos += 1,
            _ => {}
        }
        let mut acc = self.term()?;
        if negate {
            acc = acc.scale(Complex::new(-T::one(), T::zero()));
        }
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = acc.add(&t);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = acc.sub(&t);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial<T>, ParseError> {
        let mut acc = self.factor()?;
        while let Some(Tok::Star) = self.peek() {
            self.pos += 1;
            let f = self.factor()?;
            acc = acc.mul(&f);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Polynomial<T>, ParseError> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.pos += 1;
            match self.peek().cloned() {
                Some(Tok::Real(text)) if text.chars().all(|c| c.is_ascii_digit()) => {
                    let k: u32 = text.parse().map_err(|_| self.syntax("exponent too large"))?;
                    self.pos += 1;
                    return Ok(base.pow(k));
                }
                _ => return Err(self.syntax("expected a non-negative integer exponent")),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Polynomial<T>, ParseError> {
        let col = self.col();
        match self.peek().cloned() {
            Some(Tok::Real(text)) => {
                let v = self.number(&text)?;
                self.pos += 1;
                Ok(Polynomial::constant(self.nvars(), Complex::new(v, T::zero())))
            }
            Some(Tok::Imag(text)) => {
                let v = self.number(&text)?;
                self.pos += 1;
                Ok(Polynomial::constant(self.nvars(), Complex::new(T::zero(), v)))
            }
            Some(Tok::Ident(name)) => {
                let idx = self
                    .names
                    .iter()
                    .position(|n| *n == name)
                    .ok_or(ParseError::UnknownVariable {
                        line: self.line,
                        col,
                        name: name.clone(),
                    })?;
                self.pos += 1;
                Ok(Polynomial::variable(self.nvars(), idx))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err(self.syntax("expected ')'")),
                }
            }
            Some(_) => Err(self.syntax("expected a number, variable or '('")),
            None => Err(self.syntax("unexpected end of line")),
        }
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn valid_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

/// Parses a polynomial system from the text format.
pub fn parse_system<T: Scalar>(text: &str) -> Result<PolynomialSystem<T>, ParseError> {
    let mut names: Option<Vec<String>> = None;
    let mut polys = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = strip_comment(raw);
        if line.trim().is_empty() {
            continue;
        }
        let Some(vars) = &names else {
            let trimmed = line.trim_start();
            let offset = line.len() - trimmed.len();
            let Some(rest) = trimmed.strip_prefix("vars:") else {
                return Err(ParseError::MissingHeader);
            };
            let mut list = Vec::new();
            let mut col = offset + "vars:".len() + 1;
            for part in rest.split(',') {
                let name = part.trim();
                if !valid_ident(name) {
                    return Err(ParseError::Syntax {
                        line: lineno,
                        col,
                        msg: format!("invalid variable name '{name}'"),
                    });
                }
                if list.iter().any(|n: &String| n == name) {
                    return Err(ParseError::Syntax {
                        line: lineno,
                        col,
                        msg: format!("duplicate variable '{name}'"),
                    });
                }
                list.push(name.to_string());
                col += part.len() + 1;
            }
            names = Some(list);
            continue;
        };
        let toks = lex(line, lineno)?;
        let mut p = Parser::<T> {
            toks: &toks,
            pos: 0,
            line: lineno,
            end_col: line.chars().count() + 1,
            names: vars,
            _marker: std::marker::PhantomData,
        };
        let poly = p.expr()?;
        if p.pos != toks.len() {
            return Err(p.syntax("unexpected token"));
        }
        polys.push(poly);
    }
    let names = names.ok_or(ParseError::MissingHeader)?;
    if polys.is_empty() {
        return Err(ParseError::NoPolynomials);
    }
    Ok(PolynomialSystem::new(polys, names).expect("parsed polynomials share the variable list"))
}

/// Parses a single polynomial over the given variable names.
pub fn parse_polynomial<T: Scalar>(text: &str, names: &[String]) -> Result<Polynomial<T>, ParseError> {
    let toks = lex(text, 1)?;
    let mut p = Parser::<T> {
        toks: &toks,
        pos: 0,
        line: 1,
        end_col: text.chars().count() + 1,
        names,
        _marker: std::marker::PhantomData,
    };
    let poly = p.expr()?;
    if p.pos != toks.len() {
        return Err(p.syntax("unexpected token"));
    }
    Ok(poly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::C;
    use proptest::prelude::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn terms(p: &Polynomial<f64>) -> Vec<(C<f64>, Vec<u32>)> {
        p.terms().iter().map(|t| (t.coeff, t.exps.clone())).collect()
    }

    #[test]
    fn transcription_examples() {
        let p = parse_polynomial::<f64>("x^2 - 1", &names(&["x"])).unwrap();
        assert_eq!(terms(&p), vec![(C::new(1.0, 0.0), vec![2]), (C::new(-1.0, 0.0), vec![0])]);
        let p = parse_polynomial::<f64>("x*y + (0+1i)*y", &names(&["x", "y"])).unwrap();
        assert_eq!(
            terms(&p),
            vec![(C::new(1.0, 0.0), vec![1, 1]), (C::new(0.0, 1.0), vec![0, 1])]
        );
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_system::<f64>("vars: x\nx^2 + + 1\n").unwrap_err();
        assert_eq!(
            err,
            ParseError::Syntax {
                line: 2,
                col: 7,
                msg: "expected a number, variable or '('".into()
            }
        );
        assert!(matches!(
            parse_system::<f64>("vars: x\nx*z\n"),
            Err(ParseError::UnknownVariable { line: 2, col: 3, .. })
        ));
        assert!(matches!(
            parse_system::<f64>("vars: x\n(1.2.3+1i)*x\n"),
            Err(ParseError::MalformedLiteral { .. })
        ));
        assert!(matches!(
            parse_system::<f64>("vars: x\n(1+2ii)*x\n"),
            Err(ParseError::MalformedLiteral { .. })
        ));
        assert!(matches!(
            parse_system::<f64>("vars: x\n(1e+i)*x\n"),
            Err(ParseError::MalformedLiteral { .. })
        ));
        // juxtaposition
        assert!(matches!(parse_system::<f64>("vars: x\n2x\n"), Err(ParseError::MalformedLiteral { .. })));
        assert!(matches!(parse_system::<f64>("vars: x, y\nx y\n"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_system::<f64>("vars: x\nx^1.5\n"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_system::<f64>("vars: x\nx^-1\n"), Err(ParseError::Syntax { .. })));
        assert_eq!(parse_system::<f64>("x + 1\n"), Err(ParseError::MissingHeader));
        assert_eq!(parse_system::<f64>("vars: x\n# nothing\n"), Err(ParseError::NoPolynomials));
    }

    #[test]
    fn comments_blank_lines_and_grouping() {
        let s = parse_system::<f64>("# header\n\nvars: x, y  # two\n(x + y)^2 - 2e-1*x # tail\n\n-(x - (1-2i))*y\n").unwrap();
        assert_eq!(s.neqs(), 2);
        let expect = parse_polynomial::<f64>("x^2 + 2*x*y + y^2 - 0.2*x", s.var_names()).unwrap();
        assert_eq!(s.polys()[0], expect);
        let expect = parse_polynomial::<f64>("-x*y + (1-2i)*y", s.var_names()).unwrap();
        assert_eq!(s.polys()[1], expect);
    }

    fn arb_poly() -> impl Strategy<Value = Polynomial<f64>> {
        let term = (
            (-1e6f64..1e6, -1e6f64..1e6, any::<bool>()),
            proptest::collection::vec(0u32..4, 3),
        );
        proptest::collection::vec(term, 1..6).prop_map(|ts| {
            Polynomial::from_terms(
                3,
                ts.into_iter()
                    .map(|((re, im, real_only), e)| (C::new(re, if real_only { 0.0 } else { im }), e)),
            )
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(p in arb_poly(), q in arb_poly()) {
            let s = PolynomialSystem::new(vec![p, q], names(&["a", "b", "c"])).unwrap();
            let back: PolynomialSystem<f64> = parse_system(&s.to_text()).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
