//! Expression AST for the surface DSL, with a canonical printer and a
//! generic evaluator over any [`Scalar`].
//!
//! Precedence (tight to loose): `^` > unary `-` > `*`,`/` > `+`,`-`, binary
//! operators left-associative. The printer emits exactly the parentheses
//! needed so that printing and reparsing reproduces the tree.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    Theta,
    Phi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedConst {
    Pi,
    E,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Const(NamedConst),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Integer power of a base expression; the only power form in the grammar.
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn num(x: f64) -> Expr {
        // Negative literals are not lexable, so they are represented as a
        // negated positive literal to keep every tree printable-and-reparseable.
        if x < 0.0 {
            Expr::Neg(Box::new(Expr::Num(-x)))
        } else {
            Expr::Num(x)
        }
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::Call(f, Box::new(arg))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn pow(a: Expr, k: i32) -> Expr {
        Expr::Pow(Box::new(a), k)
    }

    /// Evaluates the expression with (theta, phi) bound to the given scalars.
    ///
    /// Domain violations (log or sqrt of a nonpositive value, division by
    /// zero, zero raised to a negative power) are reported through the value
    /// slot of the scalar, so they are caught before derivative slots turn
    /// into NaN.
    pub fn eval<T: Scalar>(&self, theta: T, phi: T) -> Result<T> {
        Ok(match self {
            Expr::Num(x) => T::from_f64(*x),
            Expr::Var(Var::Theta) => theta,
            Expr::Var(Var::Phi) => phi,
            Expr::Const(NamedConst::Pi) => T::from_f64(std::f64::consts::PI),
            Expr::Const(NamedConst::E) => T::from_f64(std::f64::consts::E),
            Expr::Neg(a) => -a.eval(theta, phi)?,
            Expr::Add(a, b) => a.eval(theta, phi)? + b.eval(theta, phi)?,
            Expr::Sub(a, b) => a.eval(theta, phi)? - b.eval(theta, phi)?,
            Expr::Mul(a, b) => a.eval(theta, phi)? * b.eval(theta, phi)?,
            Expr::Div(a, b) => {
                let den = b.eval(theta, phi)?;
                if den.val() == 0.0 {
                    return Err(Error::domain("division by zero in surface expression"));
                }
                a.eval(theta, phi)? / den
            }
            Expr::Pow(a, k) => {
                let base = a.eval(theta, phi)?;
                if *k < 0 && base.val() == 0.0 {
                    return Err(Error::domain("zero raised to a negative power"));
                }
                base.powi(*k)
            }
            Expr::Call(f, a) => {
                let arg = a.eval(theta, phi)?;
                match f {
                    Func::Sin => arg.sin(),
                    Func::Cos => arg.cos(),
                    Func::Exp => arg.exp(),
                    Func::Log => {
                        if arg.val() <= 0.0 {
                            return Err(Error::domain(format!(
                                "log of nonpositive value {}",
                                arg.val()
                            )));
                        }
                        arg.ln()
                    }
                    Func::Sqrt => {
                        if arg.val() <= 0.0 {
                            return Err(Error::domain(format!(
                                "sqrt of nonpositive value {}",
                                arg.val()
                            )));
                        }
                        arg.sqrt()
                    }
                }
            }
        })
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(..) | Expr::Var(..) | Expr::Const(..) | Expr::Call(..) => 5,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.prec() < min_prec {
            write!(f, "(")?;
            self.fmt_inner(f)?;
            write!(f, ")")
        } else {
            self.fmt_inner(f)
        }
    }

    fn fmt_inner(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => write!(f, "{x}"),
            Expr::Var(Var::Theta) => write!(f, "theta"),
            Expr::Var(Var::Phi) => write!(f, "phi"),
            Expr::Const(NamedConst::Pi) => write!(f, "pi"),
            Expr::Const(NamedConst::E) => write!(f, "e"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.fmt_child(f, 3)
            }
            Expr::Add(a, b) => {
                a.fmt_child(f, 1)?;
                write!(f, " + ")?;
                b.fmt_child(f, 2)
            }
            Expr::Sub(a, b) => {
                a.fmt_child(f, 1)?;
                write!(f, " - ")?;
                b.fmt_child(f, 2)
            }
            Expr::Mul(a, b) => {
                a.fmt_child(f, 2)?;
                write!(f, "*")?;
                b.fmt_child(f, 3)
            }
            Expr::Div(a, b) => {
                a.fmt_child(f, 2)?;
                write!(f, "/")?;
                b.fmt_child(f, 3)
            }
            Expr::Pow(a, k) => {
                // The grammar's power base is an atom; anything else needs parens.
                if matches!(
                    **a,
                    Expr::Num(..) | Expr::Var(..) | Expr::Const(..) | Expr::Call(..)
                ) {
                    a.fmt_inner(f)?;
                } else {
                    write!(f, "(")?;
                    a.fmt_inner(f)?;
                    write!(f, ")")?;
                }
                write!(f, "^{k}")
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.fmt_inner(f)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_inner(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Jet2S;
    use approx::assert_relative_eq;

    fn theta() -> Expr {
        Expr::Var(Var::Theta)
    }

    #[test]
    fn eval_constants() {
        let pi = Expr::Const(NamedConst::Pi).eval(0.0, 0.0).unwrap();
        assert_eq!(pi, std::f64::consts::PI);
    }

    #[test]
    fn domain_errors() {
        let bad_log = Expr::call(Func::Log, Expr::sub(Expr::num(0.0), Expr::num(1.0)));
        assert!(bad_log.eval(0.0, 0.0).is_err());
        let bad_sqrt = Expr::call(Func::Sqrt, Expr::num(0.0));
        assert!(bad_sqrt.eval(0.0, 0.0).is_err());
        let bad_div = Expr::div(Expr::num(1.0), theta());
        assert!(bad_div.eval(0.0, 1.0).is_err());
        assert!(bad_div.eval(2.0, 1.0).is_ok());
        let bad_pow = Expr::pow(theta(), -1);
        assert!(bad_pow.eval(0.0, 0.0).is_err());
    }

    #[test]
    fn domain_check_uses_value_slot_under_jets() {
        let expr = Expr::call(Func::Sqrt, theta());
        assert!(expr.eval(Jet2S::variable(0.0, 0), Jet2S::constant(0.0)).is_err());
        let ok = expr.eval(Jet2S::variable(4.0, 0), Jet2S::constant(0.0)).unwrap();
        assert_relative_eq!(ok.v, 2.0);
        assert_relative_eq!(ok.d[0], 0.25);
    }

    #[test]
    fn printer_precedence() {
        let e = Expr::mul(Expr::add(Expr::num(1.0), theta()), Expr::num(2.0));
        assert_eq!(e.to_string(), "(1 + theta)*2");

        let e = Expr::sub(Expr::num(1.0), Expr::sub(Expr::num(2.0), Expr::num(3.0)));
        assert_eq!(e.to_string(), "1 - (2 - 3)");

        let e = Expr::sub(Expr::sub(Expr::num(1.0), Expr::num(2.0)), Expr::num(3.0));
        assert_eq!(e.to_string(), "1 - 2 - 3");

        // Unary minus binds looser than ^: -x^2 means -(x^2).
        let e = Expr::Neg(Box::new(Expr::pow(theta(), 2)));
        assert_eq!(e.to_string(), "-theta^2");
        let e = Expr::pow(Expr::Neg(Box::new(theta())), 2);
        assert_eq!(e.to_string(), "(-theta)^2");

        let e = Expr::pow(Expr::call(Func::Sin, theta()), -2);
        assert_eq!(e.to_string(), "sin(theta)^-2");
    }

    #[test]
    fn negative_literal_constructor() {
        assert_eq!(Expr::num(-0.5).to_string(), "-0.5");
        assert_eq!(Expr::num(-0.5), Expr::Neg(Box::new(Expr::Num(0.5))));
    }
}
