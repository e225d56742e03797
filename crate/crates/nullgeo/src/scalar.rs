//! Forward-mode scalar types for exact derivatives on a two-parameter domain.
//!
//! Surface maps depend on the parameters (theta, phi). Evaluating an
//! expression over [`Jet2S`] propagates the value together with first and
//! second partials in one pass; [`D2`] carries first partials only and is
//! used where a cheaper first-order seed suffices (frame differentiation).
//! Both share the [`Scalar`] trait so expression evaluation is written once.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar admitting the elementary functions of the surface DSL.
///
/// `val` exposes the underlying point value so callers can run domain
/// checks (logarithm of a non-positive number, division by zero) before
/// applying an operation that would only produce a NaN downstream.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn val(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, n: i32) -> Self;
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn val(&self) -> f64 {
        *self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

/// Second-order 2-jet: value, gradient, and symmetric Hessian in (theta, phi).
///
/// `dd` stores the Hessian as `[d_tt, d_tp, d_pp]`; symmetry is structural,
/// not enforced after the fact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2S {
    pub v: f64,
    pub d: [f64; 2],
    pub dd: [f64; 3],
}

impl Jet2S {
    pub fn constant(v: f64) -> Self {
        Jet2S { v, d: [0.0, 0.0], dd: [0.0; 3] }
    }

    /// Seed for the i-th parameter: value `v`, unit first derivative in slot `i`.
    pub fn variable(v: f64, i: usize) -> Self {
        let mut d = [0.0, 0.0];
        d[i] = 1.0;
        Jet2S { v, d, dd: [0.0; 3] }
    }

    /// Chain rule through a univariate map with derivatives (g, g1, g2) at `self.v`.
    fn map(self, g: f64, g1: f64, g2: f64) -> Self {
        Jet2S {
            v: g,
            d: [g1 * self.d[0], g1 * self.d[1]],
            dd: [
                g1 * self.dd[0] + g2 * self.d[0] * self.d[0],
                g1 * self.dd[1] + g2 * self.d[0] * self.d[1],
                g1 * self.dd[2] + g2 * self.d[1] * self.d[1],
            ],
        }
    }
}

impl Add for Jet2S {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Jet2S {
            v: self.v + o.v,
            d: [self.d[0] + o.d[0], self.d[1] + o.d[1]],
            dd: [self.dd[0] + o.dd[0], self.dd[1] + o.dd[1], self.dd[2] + o.dd[2]],
        }
    }
}

impl Sub for Jet2S {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for Jet2S {
    type Output = Self;
    fn neg(self) -> Self {
        Jet2S {
            v: -self.v,
            d: [-self.d[0], -self.d[1]],
            dd: [-self.dd[0], -self.dd[1], -self.dd[2]],
        }
    }
}

impl Mul for Jet2S {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Jet2S {
            v: self.v * o.v,
            d: [
                self.d[0] * o.v + self.v * o.d[0],
                self.d[1] * o.v + self.v * o.d[1],
            ],
            dd: [
                self.dd[0] * o.v + 2.0 * self.d[0] * o.d[0] + self.v * o.dd[0],
                self.dd[1] * o.v + self.d[0] * o.d[1] + self.d[1] * o.d[0] + self.v * o.dd[1],
                self.dd[2] * o.v + 2.0 * self.d[1] * o.d[1] + self.v * o.dd[2],
            ],
        }
    }
}

impl Div for Jet2S {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let iv = 1.0 / o.v;
        self * o.map(iv, -iv * iv, 2.0 * iv * iv * iv)
    }
}

impl Scalar for Jet2S {
    fn from_f64(x: f64) -> Self {
        Jet2S::constant(x)
    }
    fn val(&self) -> f64 {
        self.v
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.map(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.map(c, -s, -c)
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.map(e, e, e)
    }
    fn ln(self) -> Self {
        let iv = 1.0 / self.v;
        self.map(self.v.ln(), iv, -iv * iv)
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.map(s, 0.5 / s, -0.25 / (s * s * s))
    }
    fn powi(self, n: i32) -> Self {
        match n {
            0 => Jet2S::constant(1.0),
            1 => self,
            _ => {
                let nf = f64::from(n);
                self.map(
                    self.v.powi(n),
                    nf * self.v.powi(n - 1),
                    nf * (nf - 1.0) * self.v.powi(n - 2),
                )
            }
        }
    }
}

/// First-order dual number with two derivative slots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct D2 {
    pub v: f64,
    pub d: [f64; 2],
}

impl D2 {
    pub fn constant(v: f64) -> Self {
        D2 { v, d: [0.0, 0.0] }
    }

    pub fn new(v: f64, d: [f64; 2]) -> Self {
        D2 { v, d }
    }

    fn map(self, g: f64, g1: f64) -> Self {
        D2 { v: g, d: [g1 * self.d[0], g1 * self.d[1]] }
    }
}

impl Add for D2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        D2 { v: self.v + o.v, d: [self.d[0] + o.d[0], self.d[1] + o.d[1]] }
    }
}

impl Sub for D2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        D2 { v: self.v - o.v, d: [self.d[0] - o.d[0], self.d[1] - o.d[1]] }
    }
}

impl Neg for D2 {
    type Output = Self;
    fn neg(self) -> Self {
        D2 { v: -self.v, d: [-self.d[0], -self.d[1]] }
    }
}

impl Mul for D2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        D2 {
            v: self.v * o.v,
            d: [
                self.d[0] * o.v + self.v * o.d[0],
                self.d[1] * o.v + self.v * o.d[1],
            ],
        }
    }
}

impl Div for D2 {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let iv = 1.0 / o.v;
        self * o.map(iv, -iv * iv)
    }
}

impl Scalar for D2 {
    fn from_f64(x: f64) -> Self {
        D2::constant(x)
    }
    fn val(&self) -> f64 {
        self.v
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.map(s, c)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.map(c, -s)
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.map(e, e)
    }
    fn ln(self) -> Self {
        self.map(self.v.ln(), 1.0 / self.v)
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.map(s, 0.5 / s)
    }
    fn powi(self, n: i32) -> Self {
        match n {
            0 => D2::constant(1.0),
            1 => self,
            _ => self.map(self.v.powi(n), f64::from(n) * self.v.powi(n - 1)),
        }
    }
}
