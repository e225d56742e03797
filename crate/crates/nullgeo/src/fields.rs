//! Grid-level frame fields and the discrete normal-connection calculus.
//!
//! [`frame_field`] evaluates [`frame_at`](crate::extrinsic::frame_at) at
//! every node and assembles the quantities that need a derivative across
//! nodes: the torsion ζ = α_H = β − dψ (β is pointwise-exact from the jets,
//! dψ is a grid derivative), d log|H|, and covariant derivatives of ambient
//! vector fields.  [`solve_gauge`] removes an exact torsion by a conformal
//! rescaling of the null pair, computed as a mean-zero least-squares
//! potential via conjugate gradients on the grid.
//!
//! Everything here is deterministic: node-parallel maps preserve order and
//! all reductions are pairwise sums.

use crate::error::{Error, Result};
use crate::extrinsic::{frame_at, FrameData};
use crate::spacetimes::Spacetime;
use crate::sphere_grid::{pairwise_sum, par_map, Grid, Parity, SurfaceField};
use crate::surfaces::SurfaceSpec;

/// Per-node frames plus the grid-assembled connection covectors.
pub struct FrameField {
    pub frames: Vec<FrameData>,
    /// √det σ per node.
    pub dens: SurfaceField<f64>,
    /// Boost angle of −H/|H| against e_n.
    pub psi: SurfaceField<f64>,
    pub log_norm_h: SurfaceField<f64>,
    /// α_H = β − dψ in the coordinate cobasis; equals ζ for the H-gauge
    /// null pair.
    pub alpha_h: SurfaceField<[f64; 2]>,
}

impl FrameField {
    pub fn at(&self, grid: &Grid, i: usize, j: usize) -> &FrameData {
        &self.frames[grid.idx(i, j)]
    }

    /// Torsion ζ of L = (−H+J)/|H|; same covector as α_H.
    pub fn zeta(&self) -> SurfaceField<[f64; 2]> {
        self.alpha_h.map(|v| v)
    }

    pub fn sigma_field(&self, grid: &Grid) -> SurfaceField<[[f64; 2]; 2]> {
        SurfaceField::from_fn(grid, |i, j| self.frames[grid.idx(i, j)].core.sigma)
    }

    pub fn sigma_inv_field(&self, grid: &Grid) -> SurfaceField<[[f64; 2]; 2]> {
        SurfaceField::from_fn(grid, |i, j| self.frames[grid.idx(i, j)].core.sigma_inv)
    }

    /// Total area ∫ dμ.
    pub fn area(&self, grid: &Grid) -> Result<f64> {
        grid.integrate(&SurfaceField::fill(grid, 1.0), &self.dens)
    }
}

/// Evaluate jets and frames at every node.  Fails if any node is degenerate
/// or has non-spacelike mean curvature (all catalog surfaces are untrapped).
pub fn frame_field(
    st: &Spacetime,
    surf: &SurfaceSpec,
    grid: &Grid,
    eps_h: f64,
) -> Result<FrameField> {
    let nt = grid.n_theta();
    let np = grid.n_phi();
    let results: Vec<Result<FrameData>> = par_map(nt * np, |k| {
        let (i, j) = (k / np, k % np);
        let jet = surf.eval_jet2(st, grid.theta(i), grid.phi(j))?;
        frame_at(st, &jet, eps_h)
    });
    let mut frames = Vec::with_capacity(nt * np);
    for (k, r) in results.into_iter().enumerate() {
        frames.push(r.map_err(|e| {
            Error::Degenerate(format!("node ({}, {}): {e}", k / np, k % np))
        })?);
    }
    for (k, fd) in frames.iter().enumerate() {
        if fd.hg.is_none() {
            return Err(Error::Degenerate(format!(
                "mean curvature not spacelike at node ({}, {})",
                k / np,
                k % np
            )));
        }
    }
    let dens = SurfaceField::from_vals(grid, frames.iter().map(|f| f.core.area_density).collect())?;
    let psi =
        SurfaceField::from_vals(grid, frames.iter().map(|f| f.hg.as_ref().unwrap().psi).collect())?;
    let log_norm_h = SurfaceField::from_vals(
        grid,
        frames.iter().map(|f| f.hg.as_ref().unwrap().norm_h.ln()).collect(),
    )?;
    let dpsi = grid.partials(&psi, Parity::Even)?;
    let alpha_h = SurfaceField::from_vals(
        grid,
        frames
            .iter()
            .zip(&dpsi.vals)
            .map(|(f, d)| [f.core.beta[0] - d[0], f.core.beta[1] - d[1]])
            .collect(),
    )?;
    Ok(FrameField { frames, dens, psi, log_norm_h, alpha_h })
}

/// How each ambient component continues across the poles under
/// (θ, φ) → (−θ, φ+π): the θ-component of a smooth vector field flips sign,
/// the others do not.
const COMP_PARITY: [Parity; 4] = [Parity::Even, Parity::Even, Parity::Odd, Parity::Even];

/// Covariant derivative (D_{E_a} V)^μ = ∂_a V^μ + Γ^μ_{νρ} E_a^ν V^ρ of an
/// ambient vector field given by components per node; derivatives are grid
/// finite differences, the Christoffel correction is pointwise.
pub fn ambient_covariant_derivative(
    st: &Spacetime,
    grid: &Grid,
    ff: &FrameField,
    v: &SurfaceField<[f64; 4]>,
) -> Result<SurfaceField<[[f64; 4]; 2]>> {
    let nt = grid.n_theta();
    let np = grid.n_phi();
    let mut deriv: Vec<[[f64; 4]; 2]> = vec![[[0.0; 4]; 2]; nt * np];
    for m in 0..4 {
        let comp = v.map(|c| c[m]);
        let dt = grid.d_theta(&comp, COMP_PARITY[m])?;
        let dp = grid.d_phi(&comp)?;
        for k in 0..nt * np {
            deriv[k][0][m] = dt.vals[k];
            deriv[k][1][m] = dp.vals[k];
        }
    }
    for k in 0..nt * np {
        let core = &ff.frames[k].core;
        for a in 0..2 {
            let gam = st.christoffel_contract(&core.x, &core.tang[a], &v.vals[k]);
            for m in 0..4 {
                deriv[k][a][m] += gam[m];
            }
        }
    }
    SurfaceField::from_vals(grid, deriv)
}

/// Contract a coordinate covector with the σ-orthonormal tangent pair:
/// returns (ω(e_1), ω(e_2)).
fn on_frame_components(core: &crate::extrinsic::FrameCore, om: [f64; 2]) -> [f64; 2] {
    let s00 = core.sigma[0][0];
    let det = core.sigma[0][0] * core.sigma[1][1] - core.sigma[0][1] * core.sigma[0][1];
    let c = core.sigma[0][1] / s00;
    let l1 = (det / s00).sqrt();
    [om[0] / s00.sqrt(), (om[1] - c * om[0]) / l1]
}

/// Max over nodes and frame directions of
/// |(d log|H| − α_H)(e_a) − ½⟨D_{e_a} L̄′, L′⟩| with L̄′ = (H+J)/|H|²,
/// L′ = −H + J.  The right side goes through the independent route:
/// discrete differentiation of the ambient components of L̄′.
pub fn dlog_h_minus_alpha_check(
    st: &Spacetime,
    surf: &SurfaceSpec,
    grid: &Grid,
    eps_h: f64,
) -> Result<f64> {
    let ff = frame_field(st, surf, grid, eps_h)?;
    let dlog = grid.partials(&ff.log_norm_h, Parity::Even)?;
    let nt = grid.n_theta();
    let np = grid.n_phi();
    let lbarp = SurfaceField::from_vals(
        grid,
        ff.frames
            .iter()
            .map(|f| {
                let hg = f.hg.as_ref().unwrap();
                std::array::from_fn(|m| hg.lbar[m] / hg.norm_h)
            })
            .collect::<Vec<[f64; 4]>>(),
    )?;
    let dlbarp = ambient_covariant_derivative(st, grid, &ff, &lbarp)?;
    let mut worst = 0.0_f64;
    for k in 0..nt * np {
        let f = &ff.frames[k];
        let hg = f.hg.as_ref().unwrap();
        let lp: [f64; 4] = std::array::from_fn(|m| hg.j[m] - f.core.h[m]);
        let mut delta = [0.0; 2];
        for a in 0..2 {
            let rhs = 0.5 * st.inner(&f.core.x, &dlbarp.vals[k][a], &lp);
            delta[a] = dlog.vals[k][a] - ff.alpha_h.vals[k][a] - rhs;
        }
        let on = on_frame_components(&f.core, delta);
        worst = worst.max(on[0].abs()).max(on[1].abs());
    }
    Ok(worst)
}

/// Mean-zero potential h with ∇h ≈ ζ♯ in least squares, and the attained
/// L² residual ‖∇h − ζ♯‖.
pub struct GaugeSolution {
    pub h: SurfaceField<f64>,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let terms: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    pairwise_sum(&terms)
}

/// ζ ↦ W ζ with W = (quadrature weight · √det σ) σ^{ab} per node.
fn apply_weight(
    grid: &Grid,
    ff: &FrameField,
    g: &SurfaceField<[f64; 2]>,
) -> (SurfaceField<f64>, SurfaceField<f64>) {
    let nt = grid.n_theta();
    let np = grid.n_phi();
    let mut yt = SurfaceField::fill(grid, 0.0);
    let mut yp = SurfaceField::fill(grid, 0.0);
    for i in 0..nt {
        let w = grid.weight(i);
        for j in 0..np {
            let k = i * np + j;
            let core = &ff.frames[k].core;
            let si = &core.sigma_inv;
            let c = w * core.area_density;
            let gv = g.vals[k];
            yt.vals[k] = c * (si[0][0] * gv[0] + si[0][1] * gv[1]);
            yp.vals[k] = c * (si[1][0] * gv[0] + si[1][1] * gv[1]);
        }
    }
    (yt, yp)
}

/// GᵀW applied to a covector field; G is the discrete gradient of an even
/// scalar.
fn gradient_transpose_weighted(
    grid: &Grid,
    ff: &FrameField,
    g: &SurfaceField<[f64; 2]>,
) -> Result<SurfaceField<f64>> {
    let (yt, yp) = apply_weight(grid, ff, g);
    let a = grid.d_theta_transpose(&yt, Parity::Even)?;
    let b = grid.d_phi_transpose(&yp)?;
    Ok(a.zip_with(&b, |x, y| x + y)?)
}

/// Least-squares gauge potential by conjugate gradients on the normal
/// equations GᵀWG h = GᵀW ζ, constrained to mean zero (the kernel of G).
pub fn solve_gauge(
    grid: &Grid,
    ff: &FrameField,
    zeta: &SurfaceField<[f64; 2]>,
) -> Result<GaugeSolution> {
    let n = grid.node_count();
    let project = |v: &mut SurfaceField<f64>| {
        let m = pairwise_sum(&v.vals) / n as f64;
        for x in &mut v.vals {
            *x -= m;
        }
    };
    let b = {
        let mut b = gradient_transpose_weighted(grid, ff, zeta)?;
        project(&mut b);
        b
    };
    let apply_a = |h: &SurfaceField<f64>| -> Result<SurfaceField<f64>> {
        let g = grid.partials(h, Parity::Even)?;
        let mut out = gradient_transpose_weighted(grid, ff, &g)?;
        project(&mut out);
        Ok(out)
    };

    let mut h = SurfaceField::fill(grid, 0.0);
    let mut r = b;
    let mut p = r.map(|v| v);
    let mut rr = dot(&r.vals, &r.vals);
    let tol2 = (1e-14 * (1.0 + rr.sqrt())).powi(2);
    for _ in 0..4000 {
        if rr <= tol2 {
            break;
        }
        let ap = apply_a(&p)?;
        let pap = dot(&p.vals, &ap.vals);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rr / pap;
        for k in 0..h.vals.len() {
            h.vals[k] += alpha * p.vals[k];
            r.vals[k] -= alpha * ap.vals[k];
        }
        let rr_new = dot(&r.vals, &r.vals);
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..p.vals.len() {
            p.vals[k] = r.vals[k] + beta * p.vals[k];
        }
    }
    project(&mut h);
    // Shift to area-weighted mean zero; a constant does not change ∇h.
    let area = ff.area(grid)?;
    let mean = grid.integrate(&h, &ff.dens)? / area;
    for x in &mut h.vals {
        *x -= mean;
    }

    let g = grid.partials(&h, Parity::Even)?;
    let e = g.zip_with(zeta, |a, b| [a[0] - b[0], a[1] - b[1]])?;
    let mut terms = Vec::with_capacity(n);
    for i in 0..grid.n_theta() {
        let w = grid.weight(i);
        for j in 0..grid.n_phi() {
            let k = i * grid.n_phi() + j;
            let core = &ff.frames[k].core;
            let si = &core.sigma_inv;
            let ev = e.vals[k];
            let q = si[0][0] * ev[0] * ev[0]
                + 2.0 * si[0][1] * ev[0] * ev[1]
                + si[1][1] * ev[1] * ev[1];
            terms.push(w * core.area_density * q);
        }
    }
    let residual = pairwise_sum(&terms).max(0.0).sqrt();
    Ok(GaugeSolution { h, residual })
}

/// Frames after the rescaling L → e^h L, L̄ → e^{−h} L̄: the null second
/// fundamental forms scale with e^{±h} and ζ shifts by −dh.
pub struct GaugedFrames {
    pub h: SurfaceField<f64>,
    pub l: SurfaceField<[f64; 4]>,
    pub lbar: SurfaceField<[f64; 4]>,
    pub chi: SurfaceField<[[f64; 2]; 2]>,
    pub chibar: SurfaceField<[[f64; 2]; 2]>,
    pub zeta: SurfaceField<[f64; 2]>,
}

pub fn apply_gauge(grid: &Grid, ff: &FrameField, gs: &GaugeSolution) -> Result<GaugedFrames> {
    let nt = grid.n_theta();
    let np = grid.n_phi();
    let dh = grid.partials(&gs.h, Parity::Even)?;
    let mut l = Vec::with_capacity(nt * np);
    let mut lbar = Vec::with_capacity(nt * np);
    let mut chi = Vec::with_capacity(nt * np);
    let mut chibar = Vec::with_capacity(nt * np);
    let mut zeta = Vec::with_capacity(nt * np);
    for k in 0..nt * np {
        let hg = ff.frames[k].hg.as_ref().unwrap();
        let s = gs.h.vals[k].exp();
        l.push(std::array::from_fn(|m| s * hg.l[m]));
        lbar.push(std::array::from_fn(|m| hg.lbar[m] / s));
        let mut cf = [[0.0; 2]; 2];
        let mut cb = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                cf[a][b] = s * hg.chi[a][b];
                cb[a][b] = hg.chibar[a][b] / s;
            }
        }
        chi.push(cf);
        chibar.push(cb);
        zeta.push([
            ff.alpha_h.vals[k][0] - dh.vals[k][0],
            ff.alpha_h.vals[k][1] - dh.vals[k][1],
        ]);
    }
    let _ = (nt, np);
    Ok(GaugedFrames {
        h: gs.h.map(|v| v),
        l: SurfaceField::from_vals(grid, l)?,
        lbar: SurfaceField::from_vals(grid, lbar)?,
        chi: SurfaceField::from_vals(grid, chi)?,
        chibar: SurfaceField::from_vals(grid, chibar)?,
        zeta: SurfaceField::from_vals(grid, zeta)?,
    })
}

/// Max over nodes of the σ-norm √(σ^{ab} ω_a ω_b).
pub fn sup_covector_norm(ff: &FrameField, omega: &SurfaceField<[f64; 2]>) -> f64 {
    let mut worst = 0.0_f64;
    for (f, om) in ff.frames.iter().zip(&omega.vals) {
        let si = &f.core.sigma_inv;
        let q = si[0][0] * om[0] * om[0]
            + 2.0 * si[0][1] * om[0] * om[1]
            + si[1][1] * om[1] * om[1];
        worst = worst.max(q.max(0.0).sqrt());
    }
    worst
}
