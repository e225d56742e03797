//! Quadrature grids on the parameter sphere and discrete tangential calculus.
//!
//! A [`Grid`] is a tensor product of Gauss–Legendre nodes in cos θ with a
//! uniform periodic φ grid.  Node weights fold in the 2π/n_φ azimuthal factor
//! and the 1/sin θ Jacobian, so `integrate` only needs the surface area
//! density √det σ supplied per node.
//!
//! Derivatives are 4th-order finite differences: five-point stencils with
//! per-row weights in θ (the nodes are non-uniform, and stencils near the
//! poles reach across via the antipodal continuation θ → −θ, φ → φ + π) and
//! the exact uniform five-point stencil in φ.  Components picking up a sign
//! under the polar continuation (one θ index, e.g. ω_θ or σ_θφ) must be
//! flagged [`Parity::Odd`].
//!
//! All reductions are sequential pairwise sums in node order, so results are
//! bit-identical regardless of how many worker threads [`par_map`] uses.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Behaviour of a grid field under the polar continuation (θ, φ) → (−θ, φ+π).
///
/// Scalars and components with an even number of θ-type indices are `Even`;
/// one θ index (vector V^θ, covector ω_θ, mixed σ_θφ, T^{θφ}) makes the
/// component flip sign, `Odd`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// One tap of a θ-direction stencil.
#[derive(Clone, Copy, Debug)]
struct Tap {
    row: usize,
    w: f64,
    /// Tap lies across a pole: shift φ by π and apply the parity sign.
    mirror: bool,
}

#[derive(Clone, Debug)]
pub struct Grid {
    n_theta: usize,
    n_phi: usize,
    theta: Vec<f64>,
    phi: Vec<f64>,
    /// Per-row quadrature weight w_i^GL · (2π/n_φ) / sin θ_i.
    row_weight: Vec<f64>,
    /// Five-tap first-derivative stencils, one per θ row.
    stencil: Vec<[Tap; 5]>,
}

impl Grid {
    /// Product grid with `n_theta` Gauss–Legendre rows and `n_phi` uniform
    /// azimuthal columns.  Requires n_theta ≥ 8 and even n_phi ≥ 16.
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Grid> {
        if n_theta < 8 {
            return Err(Error::Config(format!("n_theta = {n_theta} below minimum 8")));
        }
        if n_phi < 16 || n_phi % 2 != 0 {
            return Err(Error::Config(format!("n_phi = {n_phi} must be even and at least 16")));
        }
        let (x, wgl) = gauss_legendre(n_theta);
        // x descending from +1 gives θ = acos x ascending from the north pole.
        let theta: Vec<f64> = x.iter().map(|&xi| xi.clamp(-1.0, 1.0).acos()).collect();
        let dphi = 2.0 * PI / n_phi as f64;
        let phi: Vec<f64> = (0..n_phi).map(|j| j as f64 * dphi).collect();
        let row_weight: Vec<f64> = (0..n_theta).map(|i| wgl[i] * dphi / theta[i].sin()).collect();

        let mut stencil = Vec::with_capacity(n_theta);
        for i in 0..n_theta {
            let mut pos = [0.0_f64; 5];
            let mut taps = [Tap { row: 0, w: 0.0, mirror: false }; 5];
            for (t, off) in (-2_isize..=2).enumerate() {
                let k = i as isize + off;
                let (row, p, mirror) = if k < 0 {
                    let r = (-k - 1) as usize;
                    (r, -theta[r], true)
                } else if k >= n_theta as isize {
                    let r = 2 * n_theta - 1 - k as usize;
                    (r, 2.0 * PI - theta[r], true)
                } else {
                    let r = k as usize;
                    (r, theta[r], false)
                };
                pos[t] = p;
                taps[t] = Tap { row, w: 0.0, mirror };
            }
            let w = lagrange_deriv_weights(&pos, 2);
            for t in 0..5 {
                taps[t].w = w[t];
            }
            stencil.push(taps);
        }

        Ok(Grid { n_theta, n_phi, theta, phi, row_weight, stencil })
    }

    /// Grid scaled by `factor` in both directions (φ count forced even).
    pub fn refine(&self, factor: f64) -> Result<Grid> {
        if !(factor.is_finite() && factor >= 1.0) {
            return Err(Error::Config(format!("refine factor {factor} must be ≥ 1")));
        }
        let nt = (self.n_theta as f64 * factor).round() as usize;
        let np = {
            let raw = (self.n_phi as f64 * factor).round() as usize;
            raw + raw % 2
        };
        Grid::new(nt, np)
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn node_count(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn theta(&self, i: usize) -> f64 {
        self.theta[i]
    }

    pub fn phi(&self, j: usize) -> f64 {
        self.phi[j]
    }

    /// Quadrature weight of node (i, j); `Σ w·sinθ = 4π` to machine accuracy.
    pub fn weight(&self, i: usize) -> f64 {
        self.row_weight[i]
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_phi + j
    }

    /// Row-major (i, j) pairs in storage order.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let np = self.n_phi;
        (0..self.n_theta).flat_map(move |i| (0..np).map(move |j| (i, j)))
    }

    fn check<T>(&self, f: &SurfaceField<T>) -> Result<()> {
        if f.n_theta != self.n_theta || f.n_phi != self.n_phi {
            return Err(Error::GridMismatch(format!(
                "field is {}x{}, grid is {}x{}",
                f.n_theta, f.n_phi, self.n_theta, self.n_phi
            )));
        }
        Ok(())
    }

    /// ∫ u dμ = Σ w_ij · u_ij · dens_ij with dens = √det σ per node.
    pub fn integrate(&self, u: &SurfaceField<f64>, dens: &SurfaceField<f64>) -> Result<f64> {
        self.check(u)?;
        self.check(dens)?;
        let mut terms = Vec::with_capacity(self.node_count());
        for i in 0..self.n_theta {
            let w = self.row_weight[i];
            for j in 0..self.n_phi {
                let k = self.idx(i, j);
                terms.push(w * u.vals[k] * dens.vals[k]);
            }
        }
        Ok(pairwise_sum(&terms))
    }

    /// 4th-order ∂f/∂θ; `parity` states how f continues across the poles.
    pub fn d_theta(&self, f: &SurfaceField<f64>, parity: Parity) -> Result<SurfaceField<f64>> {
        self.check(f)?;
        let half = self.n_phi / 2;
        let mut out = SurfaceField::fill(self, 0.0);
        for i in 0..self.n_theta {
            let taps = &self.stencil[i];
            for j in 0..self.n_phi {
                let mut acc = 0.0;
                for t in taps {
                    let jj = if t.mirror { (j + half) % self.n_phi } else { j };
                    let mut v = f.vals[t.row * self.n_phi + jj];
                    if t.mirror && parity == Parity::Odd {
                        v = -v;
                    }
                    acc += t.w * v;
                }
                out.vals[i * self.n_phi + j] = acc;
            }
        }
        Ok(out)
    }

    /// 4th-order ∂f/∂φ on the uniform periodic grid.
    pub fn d_phi(&self, f: &SurfaceField<f64>) -> Result<SurfaceField<f64>> {
        self.check(f)?;
        let np = self.n_phi;
        let h = 2.0 * PI / np as f64;
        let c = 1.0 / (12.0 * h);
        let mut out = SurfaceField::fill(self, 0.0);
        for i in 0..self.n_theta {
            let row = &f.vals[i * np..(i + 1) * np];
            for j in 0..np {
                let m2 = row[(j + np - 2) % np];
                let m1 = row[(j + np - 1) % np];
                let p1 = row[(j + 1) % np];
                let p2 = row[(j + 2) % np];
                out.vals[i * np + j] = c * (m2 - 8.0 * m1 + 8.0 * p1 - p2);
            }
        }
        Ok(out)
    }

    /// Adjoint of [`d_theta`](Self::d_theta) in the plain (unweighted) node
    /// dot product; quadrature weights are folded in by the caller.
    pub fn d_theta_transpose(&self, y: &SurfaceField<f64>, parity: Parity) -> Result<SurfaceField<f64>> {
        self.check(y)?;
        let half = self.n_phi / 2;
        let mut out = SurfaceField::fill(self, 0.0);
        for i in 0..self.n_theta {
            let taps = &self.stencil[i];
            for j in 0..self.n_phi {
                let yv = y.vals[i * self.n_phi + j];
                for t in taps {
                    let jj = if t.mirror { (j + half) % self.n_phi } else { j };
                    let s = if t.mirror && parity == Parity::Odd { -1.0 } else { 1.0 };
                    out.vals[t.row * self.n_phi + jj] += s * t.w * yv;
                }
            }
        }
        Ok(out)
    }

    /// Adjoint of [`d_phi`](Self::d_phi); the periodic stencil is
    /// antisymmetric, so this is a sign-reversed gather.
    pub fn d_phi_transpose(&self, y: &SurfaceField<f64>) -> Result<SurfaceField<f64>> {
        self.check(y)?;
        let np = self.n_phi;
        let h = 2.0 * PI / np as f64;
        let c = 1.0 / (12.0 * h);
        let mut out = SurfaceField::fill(self, 0.0);
        for i in 0..self.n_theta {
            let row = &y.vals[i * np..(i + 1) * np];
            for j in 0..np {
                let m2 = row[(j + np - 2) % np];
                let m1 = row[(j + np - 1) % np];
                let p1 = row[(j + 1) % np];
                let p2 = row[(j + 2) % np];
                out.vals[i * np + j] = c * (p2 - 8.0 * p1 + 8.0 * m1 - m2);
            }
        }
        Ok(out)
    }

    /// Both coordinate partials of an even scalar as a covector field (∂_θf, ∂_φf).
    pub fn partials(&self, f: &SurfaceField<f64>, parity: Parity) -> Result<SurfaceField<[f64; 2]>> {
        let dt = self.d_theta(f, parity)?;
        let dp = self.d_phi(f)?;
        Ok(SurfaceField {
            n_theta: self.n_theta,
            n_phi: self.n_phi,
            vals: dt.vals.iter().zip(&dp.vals).map(|(&a, &b)| [a, b]).collect(),
        })
    }

    /// Tangential gradient with raised index: (∇f)^a = σ^{ab} ∂_b f.
    pub fn grad_up(
        &self,
        f: &SurfaceField<f64>,
        sigma_inv: &SurfaceField<[[f64; 2]; 2]>,
    ) -> Result<SurfaceField<[f64; 2]>> {
        self.check(sigma_inv)?;
        let df = self.partials(f, Parity::Even)?;
        Ok(SurfaceField {
            n_theta: self.n_theta,
            n_phi: self.n_phi,
            vals: df
                .vals
                .iter()
                .zip(&sigma_inv.vals)
                .map(|(d, si)| {
                    [si[0][0] * d[0] + si[0][1] * d[1], si[1][0] * d[0] + si[1][1] * d[1]]
                })
                .collect(),
        })
    }

    /// (dω)_{θφ} = ∂_θ ω_φ − ∂_φ ω_θ for a covector field ω = (ω_θ, ω_φ).
    pub fn exterior_derivative_1form(
        &self,
        omega: &SurfaceField<[f64; 2]>,
    ) -> Result<SurfaceField<f64>> {
        self.check(omega)?;
        let om_t = omega.map(|v| v[0]);
        let om_p = omega.map(|v| v[1]);
        let a = self.d_theta(&om_p, Parity::Even)?;
        let b = self.d_phi(&om_t)?;
        Ok(SurfaceField {
            n_theta: self.n_theta,
            n_phi: self.n_phi,
            vals: a.vals.iter().zip(&b.vals).map(|(&x, &y)| x - y).collect(),
        })
    }

    /// Covariant divergence (∇·T)^a = ∂_b T^{ab} + γ^a_{bc} T^{cb} + γ^b_{bc} T^{ac}
    /// of an index-up 2-tensor, with the induced Christoffels γ built from
    /// discrete derivatives of σ.
    pub fn covariant_divergence(
        &self,
        t: &SurfaceField<[[f64; 2]; 2]>,
        sigma: &SurfaceField<[[f64; 2]; 2]>,
        sigma_inv: &SurfaceField<[[f64; 2]; 2]>,
    ) -> Result<SurfaceField<[f64; 2]>> {
        self.check(t)?;
        self.check(sigma)?;
        self.check(sigma_inv)?;

        let comp_parity = |a: usize, b: usize| {
            if (a == 0) ^ (b == 0) {
                Parity::Odd
            } else {
                Parity::Even
            }
        };

        // d_sig[x][a][b] = ∂_x σ_{ab}, d_t[x][a][b] = ∂_x T^{ab}.
        let mut d_sig = [[[None, None], [None, None]], [[None, None], [None, None]]];
        let mut d_t = [[[None, None], [None, None]], [[None, None], [None, None]]];
        for a in 0..2 {
            for b in 0..2 {
                let sc = sigma.map(|m| m[a][b]);
                let tc = t.map(|m| m[a][b]);
                d_sig[0][a][b] = Some(self.d_theta(&sc, comp_parity(a, b))?);
                d_sig[1][a][b] = Some(self.d_phi(&sc)?);
                d_t[0][a][b] = Some(self.d_theta(&tc, comp_parity(a, b))?);
                d_t[1][a][b] = Some(self.d_phi(&tc)?);
            }
        }
        let ds = |x: usize, a: usize, b: usize, k: usize| -> f64 {
            d_sig[x][a][b].as_ref().unwrap().vals[k]
        };
        let dt = |x: usize, a: usize, b: usize, k: usize| -> f64 {
            d_t[x][a][b].as_ref().unwrap().vals[k]
        };

        let mut out = SurfaceField::fill(self, [0.0; 2]);
        for k in 0..self.node_count() {
            let si = sigma_inv.vals[k];
            let tv = t.vals[k];
            // γ^a_{bc} = ½ σ^{ad} (∂_b σ_{dc} + ∂_c σ_{db} − ∂_d σ_{bc})
            let mut gam = [[[0.0_f64; 2]; 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        let mut acc = 0.0;
                        for d in 0..2 {
                            acc += si[a][d] * (ds(b, d, c, k) + ds(c, d, b, k) - ds(d, b, c, k));
                        }
                        gam[a][b][c] = 0.5 * acc;
                    }
                }
            }
            let mut div = [0.0_f64; 2];
            for a in 0..2 {
                let mut acc = dt(0, a, 0, k) + dt(1, a, 1, k);
                for b in 0..2 {
                    for c in 0..2 {
                        acc += gam[a][b][c] * tv[c][b] + gam[b][b][c] * tv[a][c];
                    }
                }
                div[a] = acc;
            }
            out.vals[k] = div;
        }
        Ok(out)
    }
}

/// Values attached to the nodes of a grid, row-major in (θ-row, φ-column).
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceField<T> {
    n_theta: usize,
    n_phi: usize,
    pub vals: Vec<T>,
}

impl<T: Copy> SurfaceField<T> {
    pub fn fill(grid: &Grid, v: T) -> Self {
        SurfaceField { n_theta: grid.n_theta, n_phi: grid.n_phi, vals: vec![v; grid.node_count()] }
    }

    pub fn from_vals(grid: &Grid, vals: Vec<T>) -> Result<Self> {
        if vals.len() != grid.node_count() {
            return Err(Error::GridMismatch(format!(
                "value count {} does not match grid {}×{}",
                vals.len(),
                grid.n_theta,
                grid.n_phi
            )));
        }
        Ok(SurfaceField { n_theta: grid.n_theta, n_phi: grid.n_phi, vals })
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut vals = Vec::with_capacity(grid.node_count());
        for i in 0..grid.n_theta {
            for j in 0..grid.n_phi {
                vals.push(f(i, j));
            }
        }
        SurfaceField { n_theta: grid.n_theta, n_phi: grid.n_phi, vals }
    }

    /// Parallel construction; values depend only on the node, so the result
    /// is identical for every thread count.
    pub fn from_fn_par(grid: &Grid, f: impl Fn(usize, usize) -> T + Sync) -> Self
    where
        T: Send,
    {
        let np = grid.n_phi;
        let vals = par_map(grid.node_count(), |k| f(k / np, k % np));
        SurfaceField { n_theta: grid.n_theta, n_phi: grid.n_phi, vals }
    }

    pub fn at(&self, i: usize, j: usize) -> T {
        self.vals[i * self.n_phi + j]
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> SurfaceField<U> {
        SurfaceField {
            n_theta: self.n_theta,
            n_phi: self.n_phi,
            vals: self.vals.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with<U: Copy, V: Copy>(
        &self,
        other: &SurfaceField<U>,
        f: impl Fn(T, U) -> V,
    ) -> Result<SurfaceField<V>> {
        if self.n_theta != other.n_theta || self.n_phi != other.n_phi {
            return Err(Error::GridMismatch(format!(
                "zip of {}x{} with {}x{}",
                self.n_theta, self.n_phi, other.n_theta, other.n_phi
            )));
        }
        Ok(SurfaceField {
            n_theta: self.n_theta,
            n_phi: self.n_phi,
            vals: self.vals.iter().zip(&other.vals).map(|(&a, &b)| f(a, b)).collect(),
        })
    }
}

impl SurfaceField<f64> {
    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    }
}

/// Deterministic pairwise sum, independent of threading.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        let mut s = 0.0;
        for &x in v {
            s += x;
        }
        s
    } else {
        let mid = v.len() / 2;
        pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
    }
}

/// Worker count: NULLGEO_THREADS if set (≥ 1), else available parallelism.
pub fn thread_count() -> usize {
    match std::env::var("NULLGEO_THREADS") {
        Ok(s) => s.trim().parse::<usize>().ok().filter(|&k| k >= 1).unwrap_or(1),
        Err(_) => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    }
    .min(64)
}

/// `(0..n).map(f)` fanned out over scoped threads; element k depends only on
/// k, so output order and values never depend on the thread count.
pub fn par_map<T: Send, F: Fn(usize) -> T + Sync>(n: usize, f: F) -> Vec<T> {
    par_map_threads(thread_count(), n, f)
}

pub fn par_map_threads<T: Send, F: Fn(usize) -> T + Sync>(threads: usize, n: usize, f: F) -> Vec<T> {
    let threads = threads.clamp(1, n.max(1));
    if threads == 1 {
        return (0..n).map(f).collect();
    }
    let chunk = n.div_ceil(threads);
    let mut parts: Vec<Vec<T>> = Vec::with_capacity(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let f = &f;
                let lo = (t * chunk).min(n);
                let hi = ((t + 1) * chunk).min(n);
                s.spawn(move || (lo..hi).map(f).collect::<Vec<T>>())
            })
            .collect();
        for h in handles {
            parts.push(h.join().expect("grid worker panicked"));
        }
    });
    let mut out = Vec::with_capacity(n);
    for p in parts {
        out.extend(p);
    }
    out
}

/// Gauss–Legendre nodes (descending) and weights on [−1, 1].
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for k in 0..n.div_ceil(2) {
        let mut z = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (pn, pn1) = legendre_pair(n, z);
            let deriv = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / deriv;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let (pn, pn1) = legendre_pair(n, z);
        let pp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
        x[k] = z;
        w[k] = 2.0 / ((1.0 - z * z) * pp * pp);
        x[n - 1 - k] = -z;
        w[n - 1 - k] = w[k];
    }
    (x, w)
}

/// (P_n(z), P_{n−1}(z)) by the three-term recurrence.
fn legendre_pair(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// First-derivative weights of the Lagrange interpolant through `z`,
/// evaluated at node `c`.
fn lagrange_deriv_weights(z: &[f64; 5], c: usize) -> [f64; 5] {
    let mut w = [0.0; 5];
    for j in 0..5 {
        if j == c {
            let mut s = 0.0;
            for m in 0..5 {
                if m != c {
                    s += 1.0 / (z[c] - z[m]);
                }
            }
            w[j] = s;
        } else {
            let mut num = 1.0;
            let mut den = 1.0;
            for m in 0..5 {
                if m != j && m != c {
                    num *= z[c] - z[m];
                }
                if m != j {
                    den *= z[j] - z[m];
                }
            }
            w[j] = num / den;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn legendre(l: usize, x: f64) -> f64 {
        legendre_pair(l, x).0
    }

    #[test]
    fn weights_reproduce_sphere_area() {
        for (nt, np) in [(8, 16), (64, 128), (96, 192)] {
            let g = Grid::new(nt, np).unwrap();
            let mut total = Vec::new();
            for i in 0..nt {
                for _ in 0..np {
                    total.push(g.weight(i) * g.theta(i).sin());
                }
            }
            assert_abs_diff_eq!(pairwise_sum(&total), 4.0 * PI, epsilon = 1e-12);
        }
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(4, 128).is_err());
        assert!(Grid::new(64, 8).is_err());
        assert!(Grid::new(64, 127).is_err());
        assert!(Grid::new(8, 16).is_ok());
    }

    #[test]
    fn gauss_legendre_exact_low_degree() {
        let g = Grid::new(64, 128).unwrap();
        let dens = SurfaceField::from_fn(&g, |i, _| g.theta(i).sin());
        // ∫ cos^k θ dμ over the unit sphere: 4π/(k+1) for even k, 0 for odd.
        for k in 0..=8_u32 {
            let u = SurfaceField::from_fn(&g, |i, _| g.theta(i).cos().powi(k as i32));
            let want = if k % 2 == 0 { 4.0 * PI / (k as f64 + 1.0) } else { 0.0 };
            assert_abs_diff_eq!(g.integrate(&u, &dens).unwrap(), want, epsilon = 1e-12);
        }
        // Legendre modes and azimuthal harmonics integrate to zero.
        for l in 1..=8 {
            let u = SurfaceField::from_fn(&g, |i, _| legendre(l, g.theta(i).cos()));
            assert_abs_diff_eq!(g.integrate(&u, &dens).unwrap(), 0.0, epsilon = 1e-12);
        }
        for m in 1..=8_i32 {
            let u = SurfaceField::from_fn(&g, |i, j| {
                (m as f64 * g.phi(j)).cos() * g.theta(i).sin().powi(m)
            });
            assert_abs_diff_eq!(g.integrate(&u, &dens).unwrap(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn integrate_round_sphere_radius_two() {
        // Area density of the r = 2 sphere of symmetry in flat space.
        let g = Grid::new(64, 128).unwrap();
        let dens = SurfaceField::from_fn(&g, |i, _| 4.0 * g.theta(i).sin());
        let one = SurfaceField::fill(&g, 1.0);
        assert_abs_diff_eq!(g.integrate(&one, &dens).unwrap(), 16.0 * PI, epsilon = 1e-10);
        let cos = SurfaceField::from_fn(&g, |i, _| g.theta(i).cos());
        assert_abs_diff_eq!(g.integrate(&cos, &dens).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn integrate_ellipsoid_self_convergence() {
        // ∫ r dμ on the ellipsoid slice computed on the default and refined
        // grids; the quadrature is spectrally accurate in θ.
        use crate::scalar::{Scalar, D2};
        let (a, c) = (1.0, 1.3);
        let full = |nt: usize, np: usize| {
            let g = Grid::new(nt, np).unwrap();
            let rho_of = |i: usize| {
                let th = D2::new(g.theta(i), [1.0, 0.0]);
                let ca = D2::constant(a * a);
                let cc = D2::constant(c * c);
                D2::constant(1.0) / (th.sin() * th.sin() / ca + th.cos() * th.cos() / cc).sqrt()
            };
            let r = SurfaceField::from_fn(&g, |i, _| rho_of(i).v);
            let dens = SurfaceField::from_fn(&g, |i, _| {
                let rho = rho_of(i);
                ((rho.d[0] * rho.d[0] + rho.v * rho.v) * rho.v * rho.v).sqrt() * g.theta(i).sin()
            });
            g.integrate(&r, &dens).unwrap()
        };
        assert_abs_diff_eq!(full(64, 128), full(96, 192), epsilon = 1e-10);
    }

    #[test]
    fn d_theta_closed_forms() {
        let g = Grid::new(64, 128).unwrap();
        let f = SurfaceField::from_fn(&g, |i, _| g.theta(i).cos());
        let df = g.d_theta(&f, Parity::Even).unwrap();
        let mut err = 0.0_f64;
        for (i, j) in g.nodes() {
            err = err.max((df.at(i, j) + g.theta(i).sin()).abs());
        }
        assert!(err < 2e-6, "max error {err:.3e}");

        let f2 = SurfaceField::from_fn(&g, |i, j| {
            g.theta(i).sin().powi(2) * (2.0 * g.phi(j)).cos()
        });
        let df2 = g.d_theta(&f2, Parity::Even).unwrap();
        let mut err2 = 0.0_f64;
        for (i, j) in g.nodes() {
            let want = (2.0 * g.theta(i)).sin() * (2.0 * g.phi(j)).cos();
            err2 = err2.max((df2.at(i, j) - want).abs());
        }
        assert!(err2 < 2e-5, "max error {err2:.3e}");
    }

    #[test]
    fn d_theta_fourth_order_convergence() {
        // Smooth function of the ambient Cartesian coordinates, so the polar
        // continuation is exact.
        let err_at = |nt: usize, np: usize| {
            let g = Grid::new(nt, np).unwrap();
            let f = SurfaceField::from_fn(&g, |i, j| {
                let (st, ct) = (g.theta(i).sin(), g.theta(i).cos());
                let (x, y, z) = (st * g.phi(j).cos(), st * g.phi(j).sin(), ct);
                (x + 2.0 * z).exp() * (1.0 + y * y)
            });
            let df = g.d_theta(&f, Parity::Even).unwrap();
            let mut e = 0.0_f64;
            for (i, j) in g.nodes() {
                let (st, ct) = (g.theta(i).sin(), g.theta(i).cos());
                let (cp, sp) = (g.phi(j).cos(), g.phi(j).sin());
                let (x, y, z) = (st * cp, st * sp, ct);
                let ex = (x + 2.0 * z).exp();
                let want = ex * (ct * cp - 2.0 * st) * (1.0 + y * y) + ex * 2.0 * y * ct * sp;
                e = e.max((df.at(i, j) - want).abs());
            }
            e
        };
        let e1 = err_at(32, 64);
        let e2 = err_at(64, 128);
        assert!(e2 < e1, "no improvement: {e1:.3e} -> {e2:.3e}");
        assert!(e1 / e2 > 10.0, "observed ratio {:.1} below 4th order", e1 / e2);
    }

    #[test]
    fn d_phi_trig() {
        let g = Grid::new(64, 128).unwrap();
        let f = SurfaceField::from_fn(&g, |i, j| g.theta(i).sin() * (3.0 * g.phi(j)).cos());
        let df = g.d_phi(&f).unwrap();
        let mut err = 0.0_f64;
        for (i, j) in g.nodes() {
            let want = -3.0 * g.theta(i).sin() * (3.0 * g.phi(j)).sin();
            err = err.max((df.at(i, j) - want).abs());
        }
        assert!(err < 1e-4, "max error {err:.3e}");
    }

    #[test]
    fn exterior_derivative_of_gradient_vanishes() {
        let g = Grid::new(64, 128).unwrap();
        let f = SurfaceField::from_fn(&g, |i, j| {
            let (st, ct) = (g.theta(i).sin(), g.theta(i).cos());
            (st * g.phi(j).cos() + 2.0 * ct).exp()
        });
        let om = g.partials(&f, Parity::Even).unwrap();
        let d2 = g.exterior_derivative_1form(&om).unwrap();
        assert!(d2.max_abs() < 1e-7, "d(df) = {:.3e}", d2.max_abs());
    }

    #[test]
    fn exterior_derivative_cos_theta_dphi() {
        let g = Grid::new(64, 128).unwrap();
        let om = SurfaceField::from_fn(&g, |i, _| [0.0, g.theta(i).cos()]);
        let d = g.exterior_derivative_1form(&om).unwrap();
        let mut err = 0.0_f64;
        for (i, j) in g.nodes() {
            err = err.max((d.at(i, j) + g.theta(i).sin()).abs());
        }
        assert!(err < 2e-6, "max error {err:.3e}");
    }

    #[test]
    fn divergence_of_inverse_metric_vanishes() {
        // Round sphere and an axisymmetric ellipsoid-induced metric: σ^{-1}
        // is parallel, so the discrete divergence is pure truncation error.
        let g = Grid::new(64, 128).unwrap();
        use crate::scalar::{Scalar, D2};
        for c in [1.0_f64, 1.3] {
            let rho = |th: f64| {
                let t = D2::new(th, [1.0, 0.0]);
                let cc = D2::constant(c * c);
                let r = D2::constant(1.0) / (t.sin() * t.sin() + t.cos() * t.cos() / cc).sqrt();
                (r.v, r.d[0])
            };
            let sig = SurfaceField::from_fn(&g, |i, _| {
                let th = g.theta(i);
                let (r, dr) = rho(th);
                [[dr * dr + r * r, 0.0], [0.0, r * r * th.sin().powi(2)]]
            });
            let sig_inv = sig.map(|m| {
                let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
            });
            let div = g.covariant_divergence(&sig_inv, &sig, &sig_inv).unwrap();
            let mut err = 0.0_f64;
            for v in &div.vals {
                err = err.max(v[0].abs().max(v[1].abs()));
            }
            // The round metric cancels discretely to roundoff; the ellipsoid
            // leaves the genuine truncation mismatch between ∂_θ(1/σ_θθ) and
            // −∂_θσ_θθ/σ_θθ², largest near the poles.
            let tol = if c == 1.0 { 1e-10 } else { 3e-5 };
            assert!(err < tol, "c={c}: divergence {err:.3e}");
        }
    }

    #[test]
    fn divergence_matches_closed_form_on_round_sphere() {
        // T = ∇f ⊗ ∇f for the degree-one harmonic f = x + 2z on the unit
        // sphere has (∇·T)^a = −3 f (∇f)^a.
        let check = |nt: usize, np: usize| {
            let g = Grid::new(nt, np).unwrap();
            let sig = SurfaceField::from_fn(&g, |i, _| {
                [[1.0, 0.0], [0.0, g.theta(i).sin().powi(2)]]
            });
            let sig_inv = SurfaceField::from_fn(&g, |i, _| {
                [[1.0, 0.0], [0.0, 1.0 / g.theta(i).sin().powi(2)]]
            });
            let grad = |i: usize, j: usize| {
                let (st, ct) = (g.theta(i).sin(), g.theta(i).cos());
                let (cp, sp) = (g.phi(j).cos(), g.phi(j).sin());
                // ∇^θ f = ∂_θ f, ∇^φ f = ∂_φ f / sin²θ
                [ct * cp - 2.0 * st, -sp / st]
            };
            let t = SurfaceField::from_fn(&g, |i, j| {
                let v = grad(i, j);
                [[v[0] * v[0], v[0] * v[1]], [v[1] * v[0], v[1] * v[1]]]
            });
            let div = g.covariant_divergence(&t, &sig, &sig_inv).unwrap();
            // T^{φφ} = sin²φ/sin²θ is coordinate-singular at the poles, so the
            // stencils cannot resolve it there; the closed form is checked on
            // resolved latitudes.  (Production tensors hit the poles only in
            // combinations whose singular parts cancel; see the σ^{-1} test.)
            let mut err = 0.0_f64;
            for (i, j) in g.nodes() {
                let th = g.theta(i);
                if th < 1.0 || th > PI - 1.0 {
                    continue;
                }
                let (st, ct) = (th.sin(), th.cos());
                let f = st * g.phi(j).cos() + 2.0 * ct;
                let v = grad(i, j);
                let want = [-3.0 * f * v[0], -3.0 * f * v[1]];
                let got = div.at(i, j);
                let dt = got[0] - want[0];
                let dp = got[1] - want[1];
                err = err.max((dt * dt + st * st * dp * dp).sqrt());
            }
            err
        };
        let e1 = check(32, 64);
        let e2 = check(64, 128);
        assert!(e2 < 5e-5, "fine-grid error {e2:.3e} (coarse {e1:.3e})");
        assert!(e1 / e2 > 8.0, "convergence ratio {:.1}", e1 / e2);
    }

    #[test]
    fn grid_mismatch_errors() {
        let g = Grid::new(64, 128).unwrap();
        let h = Grid::new(32, 64).unwrap();
        let f = SurfaceField::fill(&h, 1.0);
        assert!(matches!(g.d_theta(&f, Parity::Even), Err(Error::GridMismatch(_))));
        assert!(matches!(
            g.integrate(&f, &SurfaceField::fill(&g, 1.0)),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn refine_rounds_and_validates() {
        let g = Grid::new(64, 128).unwrap();
        let r = g.refine(1.5).unwrap();
        assert_eq!((r.n_theta(), r.n_phi()), (96, 192));
        assert!(g.refine(0.5).is_err());
    }

    #[test]
    fn linearity_of_integrate() {
        let g = Grid::new(32, 64).unwrap();
        let dens = SurfaceField::from_fn(&g, |i, _| g.theta(i).sin());
        let u = SurfaceField::from_fn(&g, |i, j| (g.theta(i) + g.phi(j)).sin());
        let v = SurfaceField::from_fn(&g, |i, j| (2.0 * g.theta(i)).cos() + 0.3 * g.phi(j).cos());
        let lin = u.zip_with(&v, |a, b| 2.0 * a - 0.7 * b).unwrap();
        let lhs = g.integrate(&lin, &dens).unwrap();
        let rhs = 2.0 * g.integrate(&u, &dens).unwrap() - 0.7 * g.integrate(&v, &dens).unwrap();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
    }

    #[test]
    fn par_map_matches_serial_for_any_thread_count() {
        let n = 1037;
        let f = |k: usize| (k as f64 * 0.1).sin() * (k as f64).sqrt();
        let serial = par_map_threads(1, n, f);
        for threads in [2, 3, 4, 7] {
            let par = par_map_threads(threads, n, f);
            assert_eq!(serial.len(), par.len());
            for (a, b) in serial.iter().zip(&par) {
                assert!(a.to_bits() == b.to_bits());
            }
        }
    }

    #[test]
    fn transposes_are_adjoint_in_plain_dot_product() {
        use rand::{Rng, SeedableRng};
        let g = Grid::new(16, 32).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut rand_field = || {
            let mut f = SurfaceField::fill(&g, 0.0);
            for v in &mut f.vals {
                *v = rng.random_range(-1.0..1.0);
            }
            f
        };
        let dot = |a: &SurfaceField<f64>, b: &SurfaceField<f64>| {
            let terms: Vec<f64> = a.vals.iter().zip(&b.vals).map(|(x, y)| x * y).collect();
            pairwise_sum(&terms)
        };
        let (u, v) = (rand_field(), rand_field());
        for parity in [Parity::Even, Parity::Odd] {
            let lhs = dot(&g.d_theta(&u, parity).unwrap(), &v);
            let rhs = dot(&u, &g.d_theta_transpose(&v, parity).unwrap());
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-11 * (1.0 + lhs.abs()));
        }
        let lhs = dot(&g.d_phi(&u).unwrap(), &v);
        let rhs = dot(&u, &g.d_phi_transpose(&v).unwrap());
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-11 * (1.0 + lhs.abs()));
    }
}
