//! Surface definitions: DSL, 2-jet evaluation, and the canonical catalog.
//!
//! A surface is a graph over the round parameter sphere,
//! `F(θ, φ) = (τ(θ, φ), ρ(θ, φ), θ, φ)` in ambient coordinates, given by two
//! DSL expressions. Jets are produced by hyper-dual evaluation of the
//! expression trees — no finite differences anywhere in the jet path.

pub mod ast;
pub mod parser;

pub use ast::{Expr, Func, NamedConst, Var};
pub use parser::{parse_expr, parse_surface_source};

use crate::error::{Error, Result};
use crate::scalar::Jet2S;
use crate::spacetimes::Spacetime;

/// A parsed surface: two expressions and the canonical source text.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSpec {
    pub tau: Expr,
    pub rho: Expr,
    /// Canonical printed form `t = …; r = …`; used as the cache/report key.
    pub label: String,
}

impl SurfaceSpec {
    pub fn new(tau: Expr, rho: Expr) -> Self {
        let label = format!("t = {tau}; r = {rho}");
        SurfaceSpec { tau, rho, label }
    }

    pub fn parse(src: &str) -> Result<Self> {
        let (tau, rho) = parse_surface_source(src)?;
        Ok(SurfaceSpec::new(tau, rho))
    }

    /// Ambient position only (no derivatives).
    pub fn eval_point(&self, st: &Spacetime, theta: f64, phi: f64) -> Result<[f64; 4]> {
        let t = self.tau.eval(theta, phi)?;
        let r = self.rho.eval(theta, phi)?;
        let x = [t, r, theta, phi];
        st.check_point(&x)?;
        Ok(x)
    }

    /// Full 2-jet of the graph map at one parameter point via hyper-dual
    /// evaluation; exact to roundoff, and the mixed partial is computed once
    /// so `d2` is symmetric bitwise.
    pub fn eval_jet2(&self, st: &Spacetime, theta: f64, phi: f64) -> Result<Jet2> {
        if st.n() != 3 {
            return Err(Error::InvalidArgument(
                "grid-backed surfaces are implemented for n = 3 only".into(),
            ));
        }
        let jt = Jet2S::variable(theta, 0);
        let jp = Jet2S::variable(phi, 1);
        let tau = self.tau.eval(jt, jp)?;
        let rho = self.rho.eval(jt, jp)?;
        let position = [tau.v, rho.v, theta, phi];
        st.check_point(&position)?;
        let d1 = [
            [tau.d[0], rho.d[0], 1.0, 0.0],
            [tau.d[1], rho.d[1], 0.0, 1.0],
        ];
        let mixed = [tau.dd[1], rho.dd[1], 0.0, 0.0];
        let d2 = [
            [[tau.dd[0], rho.dd[0], 0.0, 0.0], mixed],
            [mixed, [tau.dd[2], rho.dd[2], 0.0, 0.0]],
        ];
        Ok(Jet2 { position, d1, d2 })
    }
}

/// 2-jet of the immersion at one parameter point: position, first partials,
/// and symmetric second partials with respect to (θ, φ).
#[derive(Debug, Clone, Copy)]
pub struct Jet2 {
    pub position: [f64; 4],
    pub d1: [[f64; 4]; 2],
    pub d2: [[[f64; 4]; 2]; 2],
}

/// Angular profile used by [`perturbed_sphere`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbMode {
    /// cos θ — a translation-like l = 1 mode.
    CosTheta,
    /// cos²θ — axisymmetric l = 2-like mode.
    Cos2Theta,
    /// sin θ cos φ — equatorial l = 1 mode, breaks axisymmetry.
    SinCosPhi,
    /// sin²θ (cos²φ − sin²φ) — l = 2, m = 2-like mode, breaks axisymmetry.
    Sin2Cos2Phi,
}

impl PerturbMode {
    pub fn name(self) -> &'static str {
        match self {
            PerturbMode::CosTheta => "cos_theta",
            PerturbMode::Cos2Theta => "cos2_theta",
            PerturbMode::SinCosPhi => "sin_cos_phi",
            PerturbMode::Sin2Cos2Phi => "sin2_cos2phi",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "cos_theta" => PerturbMode::CosTheta,
            "cos2_theta" => PerturbMode::Cos2Theta,
            "sin_cos_phi" => PerturbMode::SinCosPhi,
            "sin2_cos2phi" => PerturbMode::Sin2Cos2Phi,
            _ => {
                return Err(Error::config(format!(
                    "unknown perturbation mode '{name}' (expected cos_theta, cos2_theta, sin_cos_phi, sin2_cos2phi)"
                )))
            }
        })
    }

    fn expr(self) -> Expr {
        let theta = Expr::Var(Var::Theta);
        let phi = Expr::Var(Var::Phi);
        match self {
            PerturbMode::CosTheta => Expr::call(Func::Cos, theta),
            PerturbMode::Cos2Theta => Expr::pow(Expr::call(Func::Cos, theta), 2),
            PerturbMode::SinCosPhi => {
                Expr::mul(Expr::call(Func::Sin, theta), Expr::call(Func::Cos, phi))
            }
            PerturbMode::Sin2Cos2Phi => Expr::mul(
                Expr::pow(Expr::call(Func::Sin, theta), 2),
                Expr::sub(
                    Expr::pow(Expr::call(Func::Cos, phi.clone()), 2),
                    Expr::pow(Expr::call(Func::Sin, phi), 2),
                ),
            ),
        }
    }
}

/// Round sphere of symmetry `t = t0; r = r0`.
pub fn sphere_of_symmetry(t0: f64, r0: f64) -> SurfaceSpec {
    SurfaceSpec::new(Expr::num(t0), Expr::num(r0))
}

/// Sphere of symmetry with an angular radius perturbation
/// `r = r0 + eps·mode(θ, φ)`.
pub fn perturbed_sphere(t0: f64, r0: f64, eps: f64, mode: PerturbMode) -> Result<SurfaceSpec> {
    if eps.abs() >= r0.abs() {
        return Err(Error::InvalidArgument(format!(
            "perturbation amplitude {eps} too large for base radius {r0}"
        )));
    }
    let rho = Expr::add(Expr::num(r0), Expr::mul(Expr::num(eps), mode.expr()));
    Ok(SurfaceSpec::new(Expr::num(t0), rho))
}

/// t = 0 slice of the ellipsoid x²/a² + y²/a² + z²/c² = 1 in Minkowski,
/// as the radial graph ρ(θ) = (sin²θ/a² + cos²θ/c²)^{−1/2}.
pub fn ellipsoid_slice(a: f64, c: f64) -> Result<SurfaceSpec> {
    if a <= 0.0 || c <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "ellipsoid semi-axes must be positive, got a = {a}, c = {c}"
        )));
    }
    let theta = Expr::Var(Var::Theta);
    let quad = Expr::add(
        Expr::div(Expr::pow(Expr::call(Func::Sin, theta.clone()), 2), Expr::pow(Expr::num(a), 2)),
        Expr::div(Expr::pow(Expr::call(Func::Cos, theta), 2), Expr::pow(Expr::num(c), 2)),
    );
    let rho = Expr::div(Expr::num(1.0), Expr::call(Func::Sqrt, quad));
    Ok(SurfaceSpec::new(Expr::num(0.0), rho))
}

/// Cut of the incoming light cone t + r = c in Minkowski, parameterized by
/// the cut height u: τ = u and ρ = c − u, so τ + ρ = c holds by construction.
pub fn lightcone_section(c: f64, u: &Expr) -> SurfaceSpec {
    SurfaceSpec::new(u.clone(), Expr::sub(Expr::num(c), u.clone()))
}

/// Image of the round sphere {t = 0, |x| = r0} under a Lorentz boost with
/// velocity v along the z-axis; it lies in the hyperplane t = v·z and on the
/// light cones of the boosted center, hence is shear-free in both null
/// directions.
pub fn boosted_sphere(v: f64, r0: f64) -> Result<SurfaceSpec> {
    if v.abs() >= 1.0 {
        return Err(Error::InvalidArgument(format!("boost velocity must satisfy |v| < 1, got {v}")));
    }
    if r0 <= 0.0 {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r0}")));
    }
    let theta = Expr::Var(Var::Theta);
    // 1 − v² cos²θ
    let denom2 = Expr::sub(
        Expr::num(1.0),
        Expr::mul(Expr::pow(Expr::num(v), 2), Expr::pow(Expr::call(Func::Cos, theta.clone()), 2)),
    );
    let denom = Expr::call(Func::Sqrt, denom2);
    let rho = Expr::div(Expr::num(r0), denom.clone());
    let tau = Expr::div(
        Expr::mul(Expr::mul(Expr::num(v), Expr::num(r0)), Expr::call(Func::Cos, theta)),
        denom,
    );
    Ok(SurfaceSpec::new(tau, rho))
}

/// Names and signatures of the catalog constructors, for the CLI listing.
pub fn catalog_descriptions() -> &'static [(&'static str, &'static str)] {
    &[
        ("sphere_of_symmetry", "sphere_of_symmetry(t0, r0): round sphere t = t0, r = r0"),
        (
            "perturbed_sphere",
            "perturbed_sphere(t0, r0, eps, mode): r = r0 + eps*mode with mode in {cos_theta, cos2_theta, sin_cos_phi, sin2_cos2phi}",
        ),
        (
            "ellipsoid_slice",
            "ellipsoid_slice(a, c): t = 0 slice of x^2/a^2 + y^2/a^2 + z^2/c^2 = 1 (Minkowski)",
        ),
        (
            "lightcone_section",
            "lightcone_section(c, u): cut t = u(theta, phi) of the incoming cone t + r = c (Minkowski)",
        ),
        (
            "boosted_sphere",
            "boosted_sphere(v, r0): boost image of the round sphere of radius r0, velocity v along z (Minkowski)",
        ),
    ]
}
