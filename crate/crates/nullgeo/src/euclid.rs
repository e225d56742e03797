//! Euclidean geometry of surfaces lying in a constant-time Minkowski slice.
//!
//! A graph surface with τ ≡ const sits inside the flat slice {t = τ} ≅ ℝ³.
//! This module rebuilds its classical data — Cartesian position, outward
//! unit normal, area density, normalized mean curvature H₁ — from the same
//! parameter jets the null-frame pipeline consumes, but with none of the
//! null machinery, and evaluates the weighted Minkowski identity
//!
//!     ∫ f dμ − ∫ f H₁ ⟨X, ν⟩ dμ + 1/(n−1) ∫ ⟨∇f, X⟩ dμ = 0
//!
//! for ambient weights f on ℝ³.  Because the two computations share nothing
//! past the jets, this serves as an independent oracle for the slice
//! reduction of the spacetime residuals.

use crate::error::{Error, Result};
use crate::scalar::Jet2S;
use crate::scalar::Scalar;
use crate::spacetimes::{Kind, Spacetime};
use crate::sphere_grid::{par_map, Grid, SurfaceField};
use crate::surfaces::SurfaceSpec;

/// τ first/second parameter derivatives above this are not "constant".
const SLICE_TOL: f64 = 1e-12;

/// Per-node Euclidean data of a slice surface.
#[derive(Debug, Clone)]
pub struct SliceGeometry {
    /// Spatial dimension of the slice (the spacetime's n).
    pub n: usize,
    /// Cartesian position X of each node.
    pub x: SurfaceField<[f64; 3]>,
    /// Outward unit normal (⟨ν, X⟩ > 0 for these graph surfaces).
    pub nu: SurfaceField<[f64; 3]>,
    /// Normalized mean curvature σ^{ab}h_ab/(n−1) with respect to ν.
    pub h1: SurfaceField<f64>,
    /// Support function ⟨X, ν⟩.
    pub x_dot_nu: SurfaceField<f64>,
    /// Area density |∂_θX × ∂_φX| per unit dθ dφ sin θ (grid weight form).
    pub dens: SurfaceField<f64>,
    /// Tangent basis E_a = ∂_a X, rows ordered (θ, φ).
    pub tang: SurfaceField<[[f64; 3]; 2]>,
    /// Inverse induced metric σ^{ab} in the (θ, φ) basis.
    pub sigma_inv: SurfaceField<[[f64; 2]; 2]>,
}

/// Terms of the weighted Minkowski identity on a slice surface.
///
/// `value = area_term − curvature_term + gradient_term`, which vanishes for
/// any closed surface and smooth weight; `scale` is the sum of the three
/// absolute term magnitudes.
#[derive(Debug, Clone, Copy)]
pub struct EuclideanMinkowski {
    pub value: f64,
    pub scale: f64,
    pub area_term: f64,
    pub curvature_term: f64,
    pub gradient_term: f64,
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Euclidean data of a τ ≡ const surface in Minkowski, node by node.
///
/// Errors if the spacetime is not Minkowski or the surface leaves the slice
/// (any τ parameter derivative beyond roundoff).
pub fn slice_geometry(st: &Spacetime, surf: &SurfaceSpec, grid: &Grid) -> Result<SliceGeometry> {
    if st.kind() != Kind::Minkowski {
        return Err(Error::Hypothesis(format!(
            "euclidean reduction needs Minkowski, got {}",
            st.name()
        )));
    }
    let nodes: Vec<(usize, usize)> = grid.nodes().collect();
    let per_node = par_map(nodes.len(), |k| -> Result<_> {
        let (i, j) = nodes[k];
        let (theta, phi) = (grid.theta(i), grid.phi(j));
        let jet = surf.eval_jet2(st, theta, phi)?;

        let tau_slope = jet.d1[0][0]
            .abs()
            .max(jet.d1[1][0].abs())
            .max(jet.d2[0][0][0].abs())
            .max(jet.d2[0][1][0].abs())
            .max(jet.d2[1][1][0].abs());
        if tau_slope > SLICE_TOL {
            return Err(Error::Hypothesis(format!(
                "surface leaves the t = const slice: |∂τ| = {tau_slope:.3e} at θ={theta:.3}, φ={phi:.3}"
            )));
        }

        // Compose X = ρ n̂(θ, φ) in second-order jets; ρ's jet comes from the
        // hyper-dual surface evaluation, the angles are the jet variables.
        let rho = Jet2S {
            v: jet.position[1],
            d: [jet.d1[0][1], jet.d1[1][1]],
            dd: [jet.d2[0][0][1], jet.d2[0][1][1], jet.d2[1][1][1]],
        };
        let jt = Jet2S::variable(theta, 0);
        let jp = Jet2S::variable(phi, 1);
        let xc = [
            rho * jt.sin() * jp.cos(),
            rho * jt.sin() * jp.sin(),
            rho * jt.cos(),
        ];

        let x = [xc[0].v, xc[1].v, xc[2].v];
        let e_th = [xc[0].d[0], xc[1].d[0], xc[2].d[0]];
        let e_ph = [xc[0].d[1], xc[1].d[1], xc[2].d[1]];
        let raw = cross(e_th, e_ph);
        let norm = dot(raw, raw).sqrt();
        if !(norm > 0.0) {
            return Err(Error::Numerical(format!(
                "degenerate parametrization at θ={theta:.3}, φ={phi:.3}"
            )));
        }
        let nu = [raw[0] / norm, raw[1] / norm, raw[2] / norm];
        let support = dot(x, nu);
        if support <= 0.0 {
            // det[∂_θX, ∂_φX, X] = ρ³ sin θ > 0 for any admissible graph.
            return Err(Error::Numerical(format!(
                "normal orientation lost at θ={theta:.3}, φ={phi:.3}"
            )));
        }

        let sigma = [
            [dot(e_th, e_th), dot(e_th, e_ph)],
            [dot(e_th, e_ph), dot(e_ph, e_ph)],
        ];
        let det = sigma[0][0] * sigma[1][1] - sigma[0][1] * sigma[0][1];
        // h_ab = −⟨∂_a∂_b X, ν⟩: positive definite for convex bodies with
        // outward ν (h = σ on the unit sphere).
        let xdd = |s: usize| [xc[0].dd[s], xc[1].dd[s], xc[2].dd[s]];
        let h = [
            [-dot(xdd(0), nu), -dot(xdd(1), nu)],
            [-dot(xdd(1), nu), -dot(xdd(2), nu)],
        ];
        let trace = (sigma[1][1] * h[0][0] - 2.0 * sigma[0][1] * h[0][1]
            + sigma[0][0] * h[1][1])
            / det;
        let h1 = trace / (st.n() - 1) as f64;

        let sigma_inv = [
            [sigma[1][1] / det, -sigma[0][1] / det],
            [-sigma[0][1] / det, sigma[0][0] / det],
        ];

        // Grid weights already carry dθ dφ / sin θ, so the density is the
        // full Jacobian |∂_θX × ∂_φX|.
        Ok((x, nu, h1, support, norm, [e_th, e_ph], sigma_inv))
    });

    let mut xs = Vec::with_capacity(per_node.len());
    let mut nus = Vec::with_capacity(per_node.len());
    let mut h1s = Vec::with_capacity(per_node.len());
    let mut sups = Vec::with_capacity(per_node.len());
    let mut dens = Vec::with_capacity(per_node.len());
    let mut tangs = Vec::with_capacity(per_node.len());
    let mut sinvs = Vec::with_capacity(per_node.len());
    for r in per_node {
        let (x, nu, h1, sup, d, e, si) = r?;
        xs.push(x);
        nus.push(nu);
        h1s.push(h1);
        sups.push(sup);
        dens.push(d);
        tangs.push(e);
        sinvs.push(si);
    }
    Ok(SliceGeometry {
        n: st.n(),
        x: SurfaceField::from_vals(grid, xs)?,
        nu: SurfaceField::from_vals(grid, nus)?,
        h1: SurfaceField::from_vals(grid, h1s)?,
        x_dot_nu: SurfaceField::from_vals(grid, sups)?,
        dens: SurfaceField::from_vals(grid, dens)?,
        tang: SurfaceField::from_vals(grid, tangs)?,
        sigma_inv: SurfaceField::from_vals(grid, sinvs)?,
    })
}

/// Weighted Minkowski identity for an ambient weight given as
/// `x ↦ (f(x), ∇f(x))` on ℝ³.
///
/// The identity's gradient is the surface gradient of f|_Σ, so the ambient
/// gradient is projected tangentially before pairing with X.
pub fn minkowski_value<F>(grid: &Grid, geo: &SliceGeometry, f: F) -> Result<EuclideanMinkowski>
where
    F: Fn([f64; 3]) -> (f64, [f64; 3]) + Sync,
{
    let n1 = (geo.n - 1) as f64;
    let count = grid.node_count();
    let evals = par_map(count, |k| {
        let x = geo.x.vals[k];
        let nu = geo.nu.vals[k];
        let (fv, grad) = f(x);
        let gn = dot(grad, nu);
        let tan = [grad[0] - gn * nu[0], grad[1] - gn * nu[1], grad[2] - gn * nu[2]];
        (fv, fv * geo.h1.vals[k] * geo.x_dot_nu.vals[k], dot(tan, x) / n1)
    });
    let pick = |sel: fn(&(f64, f64, f64)) -> f64| -> Result<f64> {
        let vals: Vec<f64> = evals.iter().map(sel).collect();
        grid.integrate(&SurfaceField::from_vals(grid, vals)?, &geo.dens)
    };
    let area_term = pick(|e| e.0)?;
    let curvature_term = pick(|e| e.1)?;
    let gradient_term = pick(|e| e.2)?;
    let value = area_term - curvature_term + gradient_term;
    let scale = area_term.abs() + curvature_term.abs() + gradient_term.abs();
    if !value.is_finite() {
        return Err(Error::Numerical("non-finite euclidean residual".into()));
    }
    Ok(EuclideanMinkowski { value, scale, area_term, curvature_term, gradient_term })
}

/// Weighted Minkowski identity for a weight already sampled on the grid.
///
/// The surface gradient is formed discretely: ∇^Σ f = σ^{ab} ∂_b f E_a with
/// five-tap stencils on the parameter lines, so the weight only needs to
/// live on Σ.  Agrees with [`minkowski_value`] when both apply.
pub fn minkowski_value_surface(
    grid: &Grid,
    geo: &SliceGeometry,
    f: &SurfaceField<f64>,
) -> Result<EuclideanMinkowski> {
    let df = grid.partials(f, crate::sphere_grid::Parity::Even)?;
    minkowski_value_with_gradient(grid, geo, f, &df)
}

/// As [`minkowski_value_surface`] but with the parameter-line partials of the
/// weight supplied by the caller, so a pipeline that already holds exact
/// derivatives is not forced through the stencils a second time.
pub fn minkowski_value_with_gradient(
    grid: &Grid,
    geo: &SliceGeometry,
    f: &SurfaceField<f64>,
    df: &SurfaceField<[f64; 2]>,
) -> Result<EuclideanMinkowski> {
    let n1 = (geo.n - 1) as f64;
    let count = grid.node_count();
    let evals = par_map(count, |k| {
        let fv = f.vals[k];
        let si = geo.sigma_inv.vals[k];
        let d = df.vals[k];
        let e = geo.tang.vals[k];
        let x = geo.x.vals[k];
        let mut grad_dot_x = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                grad_dot_x += si[a][b] * d[b] * dot(e[a], x);
            }
        }
        (fv, fv * geo.h1.vals[k] * geo.x_dot_nu.vals[k], grad_dot_x / n1)
    });
    let pick = |sel: fn(&(f64, f64, f64)) -> f64| -> Result<f64> {
        let vals: Vec<f64> = evals.iter().map(sel).collect();
        grid.integrate(&SurfaceField::from_vals(grid, vals)?, &geo.dens)
    };
    let area_term = pick(|e| e.0)?;
    let curvature_term = pick(|e| e.1)?;
    let gradient_term = pick(|e| e.2)?;
    let value = area_term - curvature_term + gradient_term;
    let scale = area_term.abs() + curvature_term.abs() + gradient_term.abs();
    if !value.is_finite() {
        return Err(Error::Numerical("non-finite euclidean residual".into()));
    }
    Ok(EuclideanMinkowski { value, scale, area_term, curvature_term, gradient_term })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extrinsic::{frame_at, trace, EPS_H_DEFAULT};
    use crate::surfaces::{ellipsoid_slice, sphere_of_symmetry};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn ones(grid: &Grid) -> SurfaceField<f64> {
        SurfaceField::from_vals(grid, vec![1.0; grid.node_count()]).unwrap()
    }

    #[test]
    fn unit_sphere_closed_form() {
        let st = Spacetime::minkowski(3).unwrap();
        let grid = Grid::new(16, 32).unwrap();
        let geo = slice_geometry(&st, &sphere_of_symmetry(0.3, 1.0), &grid).unwrap();
        for (k, (i, _)) in grid.nodes().enumerate() {
            assert_relative_eq!(geo.h1.vals[k], 1.0, max_relative = 1e-11);
            assert_relative_eq!(geo.x_dot_nu.vals[k], 1.0, max_relative = 1e-12);
            assert_relative_eq!(geo.dens.vals[k], grid.theta(i).sin(), max_relative = 1e-12);
        }
        let area = grid.integrate(&ones(&grid), &geo.dens).unwrap();
        assert_relative_eq!(area, 4.0 * PI, max_relative = 1e-13);

        let out = minkowski_value(&grid, &geo, |_| (1.0, [0.0; 3])).unwrap();
        assert_relative_eq!(out.area_term, 4.0 * PI, max_relative = 1e-13);
        assert_relative_eq!(out.curvature_term, 4.0 * PI, max_relative = 1e-12);
        assert_eq!(out.gradient_term, 0.0);
        assert!(out.value.abs() <= 1e-12 * out.scale);
    }

    #[test]
    fn sphere_radius_two() {
        let st = Spacetime::minkowski(3).unwrap();
        let grid = Grid::new(16, 32).unwrap();
        let geo = slice_geometry(&st, &sphere_of_symmetry(0.0, 2.0), &grid).unwrap();
        let area = grid.integrate(&ones(&grid), &geo.dens).unwrap();
        assert_relative_eq!(area, 16.0 * PI, max_relative = 1e-13);
        for k in 0..grid.node_count() {
            assert_relative_eq!(geo.h1.vals[k], 0.5, max_relative = 1e-11);
            assert_relative_eq!(geo.x_dot_nu.vals[k], 2.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn ellipsoid_weighted_identities() {
        let st = Spacetime::minkowski(3).unwrap();
        let grid = Grid::new(64, 128).unwrap();
        let surf = ellipsoid_slice(1.0, 1.3).unwrap();
        let geo = slice_geometry(&st, &surf, &grid).unwrap();

        // f = z²
        let out = minkowski_value(&grid, &geo, |x| (x[2] * x[2], [0.0, 0.0, 2.0 * x[2]])).unwrap();
        assert!(out.scale > 1.0);
        assert!(
            out.value.abs() <= 1e-6 * out.scale,
            "f = z² residual {:.3e} vs scale {:.3e}",
            out.value,
            out.scale
        );

        // a second, asymmetric weight
        let out2 = minkowski_value(&grid, &geo, |x| {
            let e = (0.3 * x[0]).exp();
            (e, [0.3 * e, 0.0, 0.0])
        })
        .unwrap();
        assert!(out2.value.abs() <= 1e-6 * out2.scale);
    }

    #[test]
    fn surface_weight_matches_ambient() {
        let st = Spacetime::minkowski(3).unwrap();
        let grid = Grid::new(64, 128).unwrap();
        let surf = ellipsoid_slice(1.0, 1.3).unwrap();
        let geo = slice_geometry(&st, &surf, &grid).unwrap();

        let fvals: Vec<f64> = (0..grid.node_count()).map(|k| geo.x.vals[k][2].powi(2)).collect();
        let f = SurfaceField::from_vals(&grid, fvals).unwrap();
        let disc = minkowski_value_surface(&grid, &geo, &f).unwrap();
        let amb = minkowski_value(&grid, &geo, |x| (x[2] * x[2], [0.0, 0.0, 2.0 * x[2]])).unwrap();

        assert!(
            disc.value.abs() <= 1e-6 * disc.scale,
            "residual {:.3e} vs scale {:.3e}",
            disc.value,
            disc.scale
        );
        // stencil truncation floor for this grid, not roundoff
        assert_relative_eq!(disc.gradient_term, amb.gradient_term, max_relative = 2e-6);
        assert_eq!(disc.area_term, amb.area_term);
        assert_eq!(disc.curvature_term, amb.curvature_term);
    }

    #[test]
    fn zero_weight_is_exactly_zero() {
        let st = Spacetime::minkowski(3).unwrap();
        let grid = Grid::new(8, 16).unwrap();
        let geo = slice_geometry(&st, &sphere_of_symmetry(0.0, 1.5), &grid).unwrap();
        let out = minkowski_value(&grid, &geo, |_| (0.0, [0.0; 3])).unwrap();
        assert_eq!(out.value, 0.0);
        assert_eq!(out.scale, 0.0);
    }

    #[test]
    fn mean_curvature_matches_null_frames() {
        // tr χ from the null-frame pipeline equals (n−1)H₁ on a slice surface.
        let st = Spacetime::minkowski(3).unwrap();
        let grid = Grid::new(24, 48).unwrap();
        let surf = ellipsoid_slice(1.0, 1.3).unwrap();
        let geo = slice_geometry(&st, &surf, &grid).unwrap();
        for (k, (i, j)) in grid.nodes().enumerate() {
            let jet = surf.eval_jet2(&st, grid.theta(i), grid.phi(j)).unwrap();
            let fr = frame_at(&st, &jet, EPS_H_DEFAULT).unwrap();
            let hg = fr.hg.as_ref().unwrap();
            let trchi = trace(&fr.core.sigma_inv, &hg.chi);
            assert_relative_eq!(trchi, 2.0 * geo.h1.vals[k], max_relative = 1e-9);
        }
    }

    #[test]
    fn non_slice_surface_rejected() {
        let st = Spacetime::minkowski(3).unwrap();
        let grid = Grid::new(8, 16).unwrap();
        let surf = crate::surfaces::boosted_sphere(0.3, 2.0).unwrap();
        let err = slice_geometry(&st, &surf, &grid).unwrap_err();
        assert!(matches!(err, Error::Hypothesis(_)), "got {err:?}");
    }

    #[test]
    fn non_minkowski_rejected() {
        let st = Spacetime::anti_de_sitter(3).unwrap();
        let grid = Grid::new(8, 16).unwrap();
        let err = slice_geometry(&st, &sphere_of_symmetry(0.0, 1.0), &grid).unwrap_err();
        assert!(matches!(err, Error::Hypothesis(_)));
    }
}
