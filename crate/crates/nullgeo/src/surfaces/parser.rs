//! Recursive-descent parser for the surface DSL.
//!
//! Surface source is two assignments `t = <expr>; r = <expr>` (an optional
//! trailing semicolon is accepted). Binary `+ - * /` are left-associative;
//! `^` takes a literal integer exponent and binds tighter than unary minus,
//! so `-theta^2` parses as `-(theta^2)`.

use crate::error::{Error, Result};

use super::ast::{Expr, Func, NamedConst, Var};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eq,
    Semi,
    End,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn err(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, col, msg: msg.into() }
}

fn lex(src: &str) -> Result<Vec<Spanned>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    while i < chars.len() {
        let c = chars[i];
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '=' => Some(Tok::Eq),
            ';' => Some(Tok::Semi),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Spanned { tok, line, col });
            i += 1;
            col += 1;
            continue;
        }
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i < chars.len() && chars[i] == '.' {
                    i += 1;
                    if i >= chars.len() || !chars[i].is_ascii_digit() {
                        return Err(err(line, col, "expected digits after decimal point"));
                    }
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                // Exponent part only when digits actually follow, so "2*e"
                // still lexes the named constant.
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let num: f64 = text
                    .parse()
                    .map_err(|_| err(line, col, format!("bad number literal '{text}'")))?;
                out.push(Spanned { tok: Tok::Num(num), line, col });
                col += i - start;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                out.push(Spanned { tok: Tok::Ident(text), line, col });
                col += i - start;
            }
            other => return Err(err(line, col, format!("unexpected character '{other}'"))),
        }
    }
    out.push(Spanned { tok: Tok::End, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<()> {
        let t = self.bump();
        if &t.tok == want {
            Ok(())
        } else {
            Err(err(t.line, t.col, format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::add(lhs, self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::mul(lhs, self.factor()?);
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Expr::div(lhs, self.factor()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    // factor := "-" factor | base ("^" integer)?  — power binds tighter than
    // unary minus, matching the documented precedence.
    fn factor(&mut self) -> Result<Expr> {
        if self.peek().tok == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.base()?;
        if self.peek().tok == Tok::Caret {
            self.bump();
            let k = self.integer()?;
            return Ok(Expr::pow(base, k));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<i32> {
        let neg = if self.peek().tok == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let t = self.bump();
        match t.tok {
            Tok::Num(x) if x.fract() == 0.0 && x.abs() <= i32::MAX as f64 => {
                let k = x as i32;
                Ok(if neg { -k } else { k })
            }
            _ => Err(err(t.line, t.col, "expected integer exponent after '^'")),
        }
    }

    fn base(&mut self) -> Result<Expr> {
        let t = self.bump();
        match t.tok {
            Tok::Num(x) => Ok(Expr::Num(x)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(&Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    self.expect(&Tok::LParen, &format!("'(' after function '{name}'"))?;
                    let arg = self.expr()?;
                    self.expect(&Tok::RParen, "')'")?;
                    return Ok(Expr::call(func, arg));
                }
                let atom = match name.as_str() {
                    "theta" => Expr::Var(Var::Theta),
                    "phi" => Expr::Var(Var::Phi),
                    "pi" => Expr::Const(NamedConst::Pi),
                    "e" => Expr::Const(NamedConst::E),
                    _ => return Err(err(t.line, t.col, format!("unknown identifier '{name}'"))),
                };
                if self.peek().tok == Tok::LParen {
                    return Err(err(t.line, t.col, format!("'{name}' is not a function")));
                }
                Ok(atom)
            }
            _ => Err(err(t.line, t.col, "expected a number, identifier, or '('")),
        }
    }

    fn assignment(&mut self, var: &str) -> Result<Expr> {
        let t = self.bump();
        match t.tok {
            Tok::Ident(ref name) if name == var => {}
            _ => return Err(err(t.line, t.col, format!("expected '{var} ='"))),
        }
        self.expect(&Tok::Eq, "'='")?;
        self.expr()
    }
}

/// Parses `t = <expr>; r = <expr>` into the pair (tau, rho).
pub fn parse_surface_source(src: &str) -> Result<(Expr, Expr)> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let tau = p.assignment("t")?;
    p.expect(&Tok::Semi, "';' between the two assignments")?;
    let rho = p.assignment("r")?;
    if p.peek().tok == Tok::Semi {
        p.bump();
    }
    let t = p.bump();
    if t.tok != Tok::End {
        return Err(err(t.line, t.col, "expected end of input"));
    }
    Ok((tau, rho))
}

/// Parses a standalone expression (used for weight functions and cone cuts).
pub fn parse_expr(src: &str) -> Result<Expr> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    let t = p.bump();
    if t.tok != Tok::End {
        return Err(err(t.line, t.col, "expected end of input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_constant_sphere() {
        let (tau, rho) = parse_surface_source("t = 0; r = 2").unwrap();
        assert_eq!(tau, Expr::Num(0.0));
        assert_eq!(rho, Expr::Num(2.0));
    }

    #[test]
    fn parses_perturbed_sphere_shape() {
        let (_, rho) = parse_surface_source("t = 0; r = 2 + 0.1*cos(theta)").unwrap();
        assert_eq!(
            rho,
            Expr::add(
                Expr::Num(2.0),
                Expr::mul(Expr::Num(0.1), Expr::call(Func::Cos, Expr::Var(Var::Theta)))
            )
        );
    }

    #[test]
    fn unclosed_call_errors_with_position() {
        let e = parse_surface_source("t = sin(; r = 1").unwrap_err();
        match e {
            Error::Parse { line, col, .. } => {
                assert_eq!(line, 1);
                assert_eq!(col, 9);
            }
            other => panic!("wrong error {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier() {
        let e = parse_expr("2*rho").unwrap_err();
        assert!(e.to_string().contains("unknown identifier 'rho'"));
    }

    #[test]
    fn misused_identifier_as_function() {
        let e = parse_expr("theta(2)").unwrap_err();
        assert!(e.to_string().contains("not a function"));
    }

    #[test]
    fn power_binds_tighter_than_unary_minus() {
        let e = parse_expr("-theta^2").unwrap();
        assert_eq!(e, Expr::Neg(Box::new(Expr::pow(Expr::Var(Var::Theta), 2))));
        let e = parse_expr("(-theta)^2").unwrap();
        assert_eq!(e, Expr::pow(Expr::Neg(Box::new(Expr::Var(Var::Theta))), 2));
        // Numeric check of the convention at theta = 3.
        let v = parse_expr("-theta^2").unwrap().eval(3.0, 0.0).unwrap();
        assert_eq!(v, -9.0);
    }

    #[test]
    fn negative_exponent() {
        let e = parse_expr("theta^-2").unwrap();
        assert_eq!(e, Expr::pow(Expr::Var(Var::Theta), -2));
    }

    #[test]
    fn scientific_notation_vs_euler_constant() {
        assert_eq!(parse_expr("2e3").unwrap(), Expr::Num(2000.0));
        assert_eq!(
            parse_expr("2*e").unwrap(),
            Expr::mul(Expr::Num(2.0), Expr::Const(NamedConst::E))
        );
        // "2e" is a number followed by an identifier with no operator.
        assert!(parse_expr("2e").is_err());
    }

    #[test]
    fn line_and_column_across_newlines() {
        let e = parse_surface_source("t = 0;\nr = 2 + $").unwrap_err();
        match e {
            Error::Parse { line, col, .. } => {
                assert_eq!(line, 2);
                assert_eq!(col, 9);
            }
            other => panic!("wrong error {other:?}"),
        }
    }

    #[test]
    fn trailing_semicolon_accepted() {
        assert!(parse_surface_source("t = 0; r = 2;").is_ok());
        assert!(parse_surface_source("t = 0; r = 2; extra").is_err());
    }

    #[test]
    fn division_is_left_associative() {
        let e = parse_expr("8/4/2").unwrap();
        assert_eq!(e.eval(0.0_f64, 0.0).unwrap(), 1.0);
    }
}
