//! Warped-product ambient spacetimes.
//!
//! Every ambient space is of the form
//! `ḡ = −f²(r) dt² + f(r)^{−2} dr² + r² ĝ` with `ĝ` the round metric on
//! S^{n−1} in nested spherical coordinates, signature (−, +, …, +).
//! Coordinates are ordered `[t, r, θ_1, …, θ_{n−1}]`; the last angle is
//! periodic, the others are polar angles in (0, π).
//!
//! The module exposes the metric, exact closed-form Christoffel symbols,
//! the two-form `Q = r dr ∧ dt` with its conformal Killing–Yano residual
//! and divergence, and a finite-difference Riemann tensor used for the
//! constant-curvature checks. Everything warp-related is written in terms
//! of `f²` and `f·f′`, which are polynomial in `r` for all built-ins, so
//! the connection carries no square-root noise.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Built-in warp choices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    /// f² = 1.
    Minkowski,
    /// f² = 1 − 2m·r^{−(n−2)}, horizon at r^{n−2} = 2m.
    Schwarzschild { mass: f64 },
    /// f² = 1 + r².
    AntiDeSitter,
    /// f² = 1 − r², cosmological horizon at r = 1.
    DeSitter,
}

/// Ambient warped-product spacetime of dimension n+1.
#[derive(Debug, Clone)]
pub struct Spacetime {
    kind: Kind,
    n: usize,
    r_min: f64,
    r_max: f64,
    /// Radial margin excluded at both ends of the admissible interval;
    /// the horizon f = 0 is singular in these coordinates.
    eps_r: f64,
}

pub const DEFAULT_RADIAL_MARGIN: f64 = 1e-6;

impl Spacetime {
    pub fn new(kind: Kind, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "ambient spatial dimension must be at least 2, got {n}"
            )));
        }
        let (r_min, r_max) = match kind {
            Kind::Minkowski | Kind::AntiDeSitter => (0.0, f64::INFINITY),
            Kind::Schwarzschild { mass } => {
                if mass < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "schwarzschild mass must be nonnegative, got {mass}"
                    )));
                }
                if mass > 0.0 && n < 3 {
                    return Err(Error::InvalidArgument(
                        "schwarzschild with positive mass needs n >= 3".into(),
                    ));
                }
                let r_min = if mass > 0.0 {
                    (2.0 * mass).powf(1.0 / (n as f64 - 2.0))
                } else {
                    0.0
                };
                (r_min, f64::INFINITY)
            }
            Kind::DeSitter => (0.0, 1.0),
        };
        Ok(Spacetime { kind, n, r_min, r_max, eps_r: DEFAULT_RADIAL_MARGIN })
    }

    pub fn minkowski(n: usize) -> Result<Self> {
        Self::new(Kind::Minkowski, n)
    }
    pub fn schwarzschild(n: usize, mass: f64) -> Result<Self> {
        Self::new(Kind::Schwarzschild { mass }, n)
    }
    pub fn anti_de_sitter(n: usize) -> Result<Self> {
        Self::new(Kind::AntiDeSitter, n)
    }
    pub fn de_sitter(n: usize) -> Result<Self> {
        Self::new(Kind::DeSitter, n)
    }

    pub fn with_radial_margin(mut self, eps_r: f64) -> Self {
        self.eps_r = eps_r;
        self
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    /// Ambient spatial dimension n; the spacetime has n+1 coordinates.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    /// Admissible open radial interval before the margin is applied.
    pub fn radial_range(&self) -> (f64, f64) {
        (self.r_min, self.r_max)
    }

    pub fn radial_margin(&self) -> f64 {
        self.eps_r
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            Kind::Minkowski => "minkowski",
            Kind::Schwarzschild { .. } => "schwarzschild",
            Kind::AntiDeSitter => "anti_de_sitter",
            Kind::DeSitter => "de_sitter",
        }
    }

    /// Sectional curvature when the spacetime has constant curvature.
    pub fn constant_curvature(&self) -> Option<f64> {
        match self.kind {
            Kind::Minkowski => Some(0.0),
            Kind::Schwarzschild { mass } if mass == 0.0 => Some(0.0),
            Kind::Schwarzschild { .. } => None,
            Kind::AntiDeSitter => Some(-1.0),
            Kind::DeSitter => Some(1.0),
        }
    }

    /// `f²(r)`.
    pub fn f2<T: Scalar>(&self, r: T) -> T {
        match self.kind {
            Kind::Minkowski => T::from_f64(1.0),
            Kind::Schwarzschild { mass } => {
                T::from_f64(1.0) - T::from_f64(2.0 * mass) * r.powi(-(self.n as i32 - 2))
            }
            Kind::AntiDeSitter => T::from_f64(1.0) + r * r,
            Kind::DeSitter => T::from_f64(1.0) - r * r,
        }
    }

    /// `f(r) = √f²(r)`.
    pub fn f<T: Scalar>(&self, r: T) -> T {
        self.f2(r).sqrt()
    }

    /// `f(r)·f′(r) = ½ (f²)′(r)`; polynomial in r for every built-in.
    pub fn ff_prime<T: Scalar>(&self, r: T) -> T {
        match self.kind {
            Kind::Minkowski => T::from_f64(0.0),
            Kind::Schwarzschild { mass } => {
                T::from_f64(mass * (self.n as f64 - 2.0)) * r.powi(-(self.n as i32 - 1))
            }
            Kind::AntiDeSitter => r,
            Kind::DeSitter => -r,
        }
    }

    /// `f′(r)`.
    pub fn f_prime<T: Scalar>(&self, r: T) -> T {
        self.ff_prime(r) / self.f(r)
    }

    /// Checks the radial window (with margin) and polar-angle interiority.
    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "point has {} coordinates, expected {}",
                x.len(),
                self.dim()
            )));
        }
        let r = x[1];
        if !r.is_finite() || r < self.r_min + self.eps_r || r > self.r_max - self.eps_r {
            return Err(Error::domain(format!(
                "r = {r} outside admissible window ({}, {}) with margin {}",
                self.r_min, self.r_max, self.eps_r
            )));
        }
        for k in 1..self.n.saturating_sub(1) {
            let th = x[1 + k];
            if !(th > 0.0 && th < std::f64::consts::PI) {
                return Err(Error::domain(format!(
                    "polar angle θ_{k} = {th} not strictly inside (0, π)"
                )));
            }
        }
        Ok(())
    }

    /// Diagonal of the metric at a point: the metric is diagonal in these
    /// coordinates, `diag(−f², f^{−2}, r², r² sin²θ_1, …)`.
    pub fn metric_diag<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let d = self.dim();
        let r = x[1];
        let f2 = self.f2(r);
        let r2 = r * r;
        let mut g = Vec::with_capacity(d);
        g.push(-f2);
        g.push(T::from_f64(1.0) / f2);
        let mut fiber = T::from_f64(1.0); // Π_{j<k} sin²θ_j
        for k in 1..self.n {
            g.push(r2 * fiber);
            if k < self.n - 1 {
                let s = x[1 + k].sin();
                fiber = fiber * s * s;
            }
        }
        g
    }

    /// ⟨u, v⟩ at x.
    pub fn inner<T: Scalar>(&self, x: &[T], u: &[T], v: &[T]) -> T {
        let g = self.metric_diag(x);
        let mut acc = T::from_f64(0.0);
        for i in 0..self.dim() {
            acc = acc + g[i] * u[i] * v[i];
        }
        acc
    }

    /// `Γ^ρ_{μν} u^μ v^ν` from the closed-form connection; the single source
    /// of truth for the Christoffel symbols.
    pub fn christoffel_contract<T: Scalar>(&self, x: &[T], u: &[T], v: &[T]) -> Vec<T> {
        let d = self.dim();
        let zero = T::from_f64(0.0);
        let r = x[1];
        let f2 = self.f2(r);
        let ffp = self.ff_prime(r);
        let fp_over_f = ffp / f2; // f′/f = ff′/f²
        let inv_r = T::from_f64(1.0) / r;

        let sines: Vec<(T, T)> = (1..self.n)
            .map(|k| {
                let th = x[1 + k];
                (th.sin(), th.cos())
            })
            .collect();

        let mut out = vec![zero; d];

        // Γ^t_{tr} = f′/f.
        out[0] = fp_over_f * (u[0] * v[1] + u[1] * v[0]);

        // Γ^r_{tt} = f³f′ = f²·ff′;  Γ^r_{rr} = −f′/f;  Γ^r_{aa} = −r f² ĝ_kk.
        let mut rad = f2 * ffp * u[0] * v[0] - fp_over_f * u[1] * v[1];
        let mut fiber = T::from_f64(1.0);
        for k in 1..self.n {
            let a = 1 + k;
            rad = rad - r * f2 * fiber * u[a] * v[a];
            if k < self.n - 1 {
                let (s, _) = sines[k - 1];
                fiber = fiber * s * s;
            }
        }
        out[1] = rad;

        // Angular rows: Γ^a_{ra} = 1/r, plus the round-sphere symbols
        // Γ̂^k_{ik} = cot θ_i (i < k) and Γ̂^k_{k'k'} = −sin θ_k cos θ_k Π_{k<j<k'} sin²θ_j.
        for k in 1..self.n {
            let a = 1 + k;
            let mut acc = inv_r * (u[1] * v[a] + u[a] * v[1]);
            for i in 1..k {
                let (s, c) = sines[i - 1];
                acc = acc + (c / s) * (u[1 + i] * v[a] + u[a] * v[1 + i]);
            }
            let (sk, ck) = sines[k - 1];
            let mut tail = T::from_f64(1.0); // Π_{k<j<k'} sin²θ_j
            for kp in (k + 1)..self.n {
                let ap = 1 + kp;
                acc = acc - sk * ck * tail * u[ap] * v[ap];
                if kp < self.n - 1 {
                    let (s, _) = sines[kp - 1];
                    tail = tail * s * s;
                }
            }
            out[a] = acc;
        }
        out
    }

    /// Dense Christoffel symbols at a point, materialized from
    /// [`Self::christoffel_contract`] over coordinate basis pairs.
    pub fn christoffels_at(&self, x: &[f64]) -> Christoffel {
        let d = self.dim();
        let mut vals = vec![0.0; d * d * d];
        let mut eb = vec![0.0; d];
        let mut ec = vec![0.0; d];
        for b in 0..d {
            eb[b] = 1.0;
            for c in b..d {
                ec[c] = 1.0;
                let col = self.christoffel_contract(x, &eb, &ec);
                for a in 0..d {
                    vals[(a * d + b) * d + c] = col[a];
                    vals[(a * d + c) * d + b] = col[a];
                }
                ec[c] = 0.0;
            }
            eb[b] = 0.0;
        }
        Christoffel { dim: d, vals }
    }

    /// `Q(u, v) = r (u^r v^t − u^t v^r)` for the two-form Q = r dr ∧ dt.
    pub fn q_form<T: Scalar>(&self, x: &[T], u: &[T], v: &[T]) -> T {
        x[1] * (u[1] * v[0] - u[0] * v[1])
    }

    /// `Q²(u, v) = Q_α{}^γ Q_{γβ} u^α v^β = r² (g_tt u^t v^t + g_rr u^r v^r)`:
    /// r² times the metric restricted to the (t, r) plane.
    pub fn q_sq<T: Scalar>(&self, x: &[T], u: &[T], v: &[T]) -> T {
        let r = x[1];
        let f2 = self.f2(r);
        r * r * (-f2 * u[0] * v[0] + u[1] * v[1] / f2)
    }

    /// ⟨ξ, w⟩ with ξ = −n ∂_t, i.e. `n f² w^t`.
    pub fn xi_inner<T: Scalar>(&self, x: &[T], w: &[T]) -> T {
        T::from_f64(self.n as f64) * self.f2(x[1]) * w[0]
    }

    /// (D_X Q)(Y, Z) from the closed-form connection.
    pub fn dq(&self, x: &[f64], xv: &[f64], y: &[f64], z: &[f64]) -> f64 {
        // ∂_γ Q_{αβ} is supported on γ = r with ∂_r Q_{rt} = 1 = −∂_r Q_{tr}.
        let partial = xv[1] * (y[1] * z[0] - y[0] * z[1]);
        let gxy = self.christoffel_contract(x, xv, y);
        let gxz = self.christoffel_contract(x, xv, z);
        partial - self.q_form(x, &gxy, z) - self.q_form(x, y, &gxz)
    }

    /// Residual of the conformal Killing–Yano equation for Q against
    /// ξ = −n ∂_t:
    /// `(D_X Q)(Y,Z) + (D_Y Q)(X,Z) − (2/n)(⟨X,Y⟩⟨ξ,Z⟩ − ½⟨X,Z⟩⟨ξ,Y⟩ − ½⟨Y,Z⟩⟨ξ,X⟩)`.
    pub fn cky_residual(&self, x: &[f64], xv: &[f64], y: &[f64], z: &[f64]) -> f64 {
        let nf = self.n as f64;
        let sym = self.dq(x, xv, y, z) + self.dq(x, y, xv, z);
        let rhs = self.inner(x, xv, y) * self.xi_inner(x, z)
            - 0.5 * self.inner(x, xv, z) * self.xi_inner(x, y)
            - 0.5 * self.inner(x, y, z) * self.xi_inner(x, xv);
        sym - 2.0 / nf * rhs
    }

    /// div Q as a vector field: ξ^β = g^{ββ} g^{γγ} (D_γ Q)_{γβ}.
    /// Equals −n ∂_t for every built-in.
    pub fn div_q(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let g = self.metric_diag(x);
        let mut basis = vec![vec![0.0; d]; d];
        for (i, e) in basis.iter_mut().enumerate() {
            e[i] = 1.0;
        }
        let mut out = vec![0.0; d];
        for b in 0..d {
            let mut acc = 0.0;
            for c in 0..d {
                acc += self.dq(x, &basis[c], &basis[c], &basis[b]) / g[c];
            }
            out[b] = acc / g[b];
        }
        out
    }

    /// Riemann tensor at a point via fourth-order finite differences of the
    /// closed-form Christoffels. Steps shrink near the radial and polar
    /// boundaries so all stencil points stay admissible.
    pub fn riemann_at(&self, x: &[f64]) -> Riemann {
        let d = self.dim();
        let gamma0 = self.christoffels_at(x);

        // ∂_μ Γ for each direction μ.
        let mut dgamma: Vec<Vec<f64>> = Vec::with_capacity(d);
        for mu in 0..d {
            let h = self.fd_step(x, mu);
            let mut xp = x.to_vec();
            let eval = |xp: &mut Vec<f64>, delta: f64| {
                xp[mu] = x[mu] + delta;
                self.christoffels_at(xp).vals
            };
            let m2 = eval(&mut xp, -2.0 * h);
            let m1 = eval(&mut xp, -h);
            let p1 = eval(&mut xp, h);
            let p2 = eval(&mut xp, 2.0 * h);
            let col: Vec<f64> = (0..m1.len())
                .map(|i| (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * h))
                .collect();
            dgamma.push(col);
        }

        // R^ρ_{σμν} = ∂_μ Γ^ρ_{νσ} − ∂_ν Γ^ρ_{μσ} + Γ^ρ_{μλ}Γ^λ_{νσ} − Γ^ρ_{νλ}Γ^λ_{μσ}.
        let idx = |a: usize, b: usize, c: usize| (a * d + b) * d + c;
        let mut vals = vec![0.0; d * d * d * d];
        for rho in 0..d {
            for sig in 0..d {
                for mu in 0..d {
                    for nu in 0..d {
                        let mut v = dgamma[mu][idx(rho, nu, sig)] - dgamma[nu][idx(rho, mu, sig)];
                        for lam in 0..d {
                            v += gamma0.get(rho, mu, lam) * gamma0.get(lam, nu, sig)
                                - gamma0.get(rho, nu, lam) * gamma0.get(lam, mu, sig);
                        }
                        vals[((rho * d + sig) * d + mu) * d + nu] = v;
                    }
                }
            }
        }
        Riemann { dim: d, vals }
    }

    fn fd_step(&self, x: &[f64], mu: usize) -> f64 {
        // The warp and its derivatives blow up like powers of the distance to
        // the radial boundary, so the step shrinks aggressively there; same
        // near the poles for the cot θ sphere symbols.
        if mu == 1 {
            let mut h = 1e-2 * x[1].abs().max(1.0);
            let dist = (x[1] - self.r_min).min(self.r_max - x[1]);
            if dist.is_finite() {
                h = h.min(dist / 200.0);
            }
            h
        } else if mu >= 2 && mu < self.dim() - 1 {
            let th = x[mu];
            5e-3_f64.min(th.min(std::f64::consts::PI - th) / 10.0)
        } else {
            1e-2
        }
    }

    /// Max-norm of `R̄_{αβγδ} − κ(ḡ_{αγ}ḡ_{βδ} − ḡ_{αδ}ḡ_{βγ})`.
    pub fn constant_curvature_residual(&self, x: &[f64], kappa: f64) -> f64 {
        let d = self.dim();
        let rm = self.riemann_at(x);
        let g = self.metric_diag(x);
        let mut worst: f64 = 0.0;
        for al in 0..d {
            for be in 0..d {
                for ga in 0..d {
                    for de in 0..d {
                        let lowered = g[al] * rm.get(al, be, ga, de);
                        let model = kappa
                            * ((if al == ga && be == de { g[al] * g[be] } else { 0.0 })
                                - (if al == de && be == ga { g[al] * g[be] } else { 0.0 }));
                        worst = worst.max((lowered - model).abs());
                    }
                }
            }
        }
        worst
    }

    /// ⟨R̄(X, Y)Z, W⟩ with the finite-difference Riemann tensor.
    pub fn riemann_inner(
        &self,
        x: &[f64],
        rm: &Riemann,
        xv: &[f64],
        y: &[f64],
        z: &[f64],
        w: &[f64],
    ) -> f64 {
        let d = self.dim();
        let g = self.metric_diag(x);
        let mut acc = 0.0;
        for rho in 0..d {
            let mut comp = 0.0;
            for sig in 0..d {
                for mu in 0..d {
                    for nu in 0..d {
                        comp += rm.get(rho, sig, mu, nu) * z[sig] * xv[mu] * y[nu];
                    }
                }
            }
            acc += g[rho] * w[rho] * comp;
        }
        acc
    }
}

/// Dense Christoffel symbols Γ^a_{bc} at a fixed point, symmetric in (b, c).
#[derive(Debug, Clone)]
pub struct Christoffel {
    dim: usize,
    vals: Vec<f64>,
}

impl Christoffel {
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.vals[(a * self.dim + b) * self.dim + c]
    }

    pub fn contract(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d];
        for a in 0..d {
            let mut acc = 0.0;
            for b in 0..d {
                if u[b] == 0.0 {
                    continue;
                }
                for c in 0..d {
                    acc += self.get(a, b, c) * u[b] * v[c];
                }
            }
            out[a] = acc;
        }
        out
    }
}

/// Riemann tensor R^ρ_{σμν} at a fixed point, R(e_μ, e_ν)e_σ = R^ρ_{σμν} e_ρ.
#[derive(Debug, Clone)]
pub struct Riemann {
    dim: usize,
    vals: Vec<f64>,
}

impl Riemann {
    pub fn get(&self, rho: usize, sig: usize, mu: usize, nu: usize) -> f64 {
        self.vals[((rho * self.dim + sig) * self.dim + mu) * self.dim + nu]
    }
}
