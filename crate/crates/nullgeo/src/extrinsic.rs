//! Pointwise extrinsic geometry of a codimension-two spacelike surface.
//!
//! [`frame_at`] turns one surface 2-jet into the full normal-bundle package:
//! induced metric, adapted orthonormal normals (e_n, e_{n+1}), vector-valued
//! second fundamental form, mean curvature H, its light-cone reflection J,
//! the null pair L = (−H+J)/|H|, L̄ = (H+J)/|H| with ⟨L, L̄⟩ = −2, and the
//! null second fundamental forms χ_ab = ⟨D_a L, e_b⟩ = −⟨L, II_ab⟩,
//! χ̄_ab = −⟨L̄, II_ab⟩.
//!
//! The connection scalar β_a = ⟨D_{E_a} e_n, e_{n+1}⟩ is computed exactly
//! from the jet by running the frame construction in first-order dual
//! numbers seeded with the jet's second derivatives; the boost-angle part of
//! the normal connection (α_H = β − dψ) is assembled at field level where a
//! discrete d is available.
//!
//! All 2-tensors live in the coordinate tangent basis (∂_θF, ∂_φF); frame
//! fields on a sphere cannot be globally smooth, and every published scalar
//! is a basis-invariant contraction.

use crate::error::{Error, Result};
use crate::scalar::{Scalar, D2};
use crate::spacetimes::Spacetime;
use crate::surfaces::Jet2;

/// Default threshold on ⟨H,H⟩^{1/2} below which H-gauge frames are withheld.
pub const EPS_H_DEFAULT: f64 = 1e-10;

/// Null direction selector used throughout the functional layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Incoming,
    Outgoing,
}

/// Frame quantities defined for any spacelike jet, H degenerate or not.
#[derive(Clone, Debug)]
pub struct FrameCore {
    pub x: [f64; 4],
    /// Coordinate tangents E_a = (∂_θF, ∂_φF).
    pub tang: [[f64; 4]; 2],
    pub sigma: [[f64; 2]; 2],
    pub sigma_inv: [[f64; 2]; 2],
    /// √det σ.
    pub area_density: f64,
    /// σ-orthonormal tangent pair (Gram–Schmidt of the coordinate basis).
    pub e_tan: [[f64; 4]; 2],
    /// Unit spacelike normal, oriented ⟨e_n, ∂_r⟩ > 0.
    pub e_n: [f64; 4],
    /// Unit future timelike normal.
    pub e_np1: [f64; 4],
    /// Normal-valued second fundamental form II_ab = (D_{E_a} E_b)^⊥.
    pub ii: [[[f64; 4]; 2]; 2],
    /// Mean curvature vector H = σ^{ab} II_ab.
    pub h: [f64; 4],
    /// ⟨H, H⟩.
    pub h2: f64,
    /// ⟨H, e_n⟩ (negative when H points inward, the generic untrapped case).
    pub h_n: f64,
    /// ⟨H, e_{n+1}⟩.
    pub h_t: f64,
    /// β_a = ⟨D_{E_a} e_n, e_{n+1}⟩, exact from the jet.
    pub beta: [f64; 2],
}

/// Quantities that need spacelike H.
#[derive(Clone, Debug)]
pub struct HGauge {
    pub norm_h: f64,
    /// J = ⟨H, e_{n+1}⟩ e_n − ⟨H, e_n⟩ e_{n+1}.
    pub j: [f64; 4],
    /// Future outgoing null normal (−H + J)/|H|.
    pub l: [f64; 4],
    /// Future incoming null normal (H + J)/|H|.
    pub lbar: [f64; 4],
    pub chi: [[f64; 2]; 2],
    pub chibar: [[f64; 2]; 2],
    /// Boost angle of −H/|H| against e_n: sinh ψ = ⟨H, e_{n+1}⟩/|H|.
    pub psi: f64,
}

#[derive(Clone, Debug)]
pub struct FrameData {
    pub core: FrameCore,
    pub hg: Option<HGauge>,
}

struct NormalFrame<T> {
    sigma: [[T; 2]; 2],
    sigma_inv: [[T; 2]; 2],
    det: T,
    e_n: [T; 4],
    e_np1: [T; 4],
}

fn ip<T: Scalar>(g: &[T], u: &[T; 4], v: &[T; 4]) -> T {
    let mut acc = g[0] * u[0] * v[0];
    for m in 1..4 {
        acc = acc + g[m] * u[m] * v[m];
    }
    acc
}

/// Orthonormal normal pair in the 2-plane g-orthogonal to the tangents:
/// project ∂_t and ∂_r off the tangent plane, normalize, orient.
fn normal_frame<T: Scalar>(st: &Spacetime, x: &[T; 4], tang: &[[T; 4]; 2]) -> Result<NormalFrame<T>> {
    let g = st.metric_diag(x);
    let mut sigma = [[T::from_f64(0.0); 2]; 2];
    for a in 0..2 {
        for b in a..2 {
            sigma[a][b] = ip(&g, &tang[a], &tang[b]);
            sigma[b][a] = sigma[a][b];
        }
    }
    let det = sigma[0][0] * sigma[1][1] - sigma[0][1] * sigma[0][1];
    if !(sigma[0][0].val() > 0.0 && det.val() > 0.0) {
        return Err(Error::Degenerate(format!(
            "induced metric not Riemannian (sigma_tt = {}, det = {})",
            sigma[0][0].val(),
            det.val()
        )));
    }
    let sigma_inv = [
        [sigma[1][1] / det, T::from_f64(0.0) - sigma[0][1] / det],
        [T::from_f64(0.0) - sigma[0][1] / det, sigma[0][0] / det],
    ];

    // N = ∂_μ0 − σ^{ab}⟨∂_μ0, E_b⟩E_a for μ0 = t then r.
    let project_basis = |mu0: usize| -> [T; 4] {
        let mut out = [T::from_f64(0.0); 4];
        out[mu0] = T::from_f64(1.0);
        for a in 0..2 {
            let mut coeff = T::from_f64(0.0);
            for b in 0..2 {
                coeff = coeff + sigma_inv[a][b] * g[mu0] * tang[b][mu0];
            }
            for m in 0..4 {
                out[m] = out[m] - coeff * tang[a][m];
            }
        }
        out
    };

    let nt = project_basis(0);
    let n2 = ip(&g, &nt, &nt);
    if !(n2.val() < 0.0) {
        return Err(Error::Degenerate("projected time direction is not timelike".into()));
    }
    let inv_nt = T::from_f64(1.0) / (T::from_f64(0.0) - n2).sqrt();
    let mut e_np1 = [T::from_f64(0.0); 4];
    for m in 0..4 {
        e_np1[m] = nt[m] * inv_nt;
    }

    let nr = project_basis(1);
    let mut w = [T::from_f64(0.0); 4];
    let wt = ip(&g, &nr, &e_np1);
    for m in 0..4 {
        w[m] = nr[m] + wt * e_np1[m];
    }
    let w2 = ip(&g, &w, &w);
    if !(w2.val() > 0.0) {
        return Err(Error::Degenerate("normal plane degenerates to a null line".into()));
    }
    let inv_w = T::from_f64(1.0) / w2.sqrt();
    let mut e_n = [T::from_f64(0.0); 4];
    for m in 0..4 {
        e_n[m] = w[m] * inv_w;
    }

    // Orientation: ⟨e_n, ∂_r⟩ > 0, falling back to the first angular
    // component when the radial one vanishes.
    let sr = (g[1] * e_n[1]).val();
    let keep = if sr.abs() > 1e-12 { sr > 0.0 } else { e_n[2].val() >= 0.0 };
    if !keep {
        for m in 0..4 {
            e_n[m] = T::from_f64(0.0) - e_n[m];
        }
    }

    Ok(NormalFrame { sigma, sigma_inv, det, e_n, e_np1 })
}

/// Full extrinsic package at one jet.  `eps_h` gates the H-normalized
/// quantities: `hg` is `None` when ⟨H,H⟩ ≤ eps_h².
pub fn frame_at(st: &Spacetime, jet: &Jet2, eps_h: f64) -> Result<FrameData> {
    if st.n() != 3 {
        return Err(Error::InvalidArgument("frames are grid-backed and require n = 3".into()));
    }
    let x = jet.position;
    let tang = jet.d1;
    let nf = normal_frame(st, &x, &tang)?;
    let g = st.metric_diag(&x);

    // II_ab = (∂_a∂_b F + Γ(E_a, E_b))^⊥ by subtracting the tangential part.
    let mut ii = [[[0.0_f64; 4]; 2]; 2];
    for a in 0..2 {
        for b in a..2 {
            let gam = st.christoffel_contract(&x, &tang[a], &tang[b]);
            let mut v = [0.0; 4];
            for m in 0..4 {
                v[m] = jet.d2[a][b][m] + gam[m];
            }
            for c in 0..2 {
                let mut coeff = 0.0;
                for d in 0..2 {
                    coeff += nf.sigma_inv[c][d] * ip(&g, &v, &tang[d]);
                }
                for m in 0..4 {
                    v[m] -= coeff * tang[c][m];
                }
            }
            ii[a][b] = v;
            ii[b][a] = v;
        }
    }

    let mut h = [0.0; 4];
    for a in 0..2 {
        for b in 0..2 {
            for m in 0..4 {
                h[m] += nf.sigma_inv[a][b] * ii[a][b][m];
            }
        }
    }
    let h2 = ip(&g, &h, &h);
    let h_n = ip(&g, &h, &nf.e_n);
    let h_t = ip(&g, &h, &nf.e_np1);

    // β from the same construction run in dual numbers: the two derivative
    // slots carry ∂_θ and ∂_φ of every frame component at once.
    let xd: [D2; 4] = std::array::from_fn(|m| D2::new(x[m], [tang[0][m], tang[1][m]]));
    let td: [[D2; 4]; 2] =
        std::array::from_fn(|b| std::array::from_fn(|m| D2::new(tang[b][m], [jet.d2[b][0][m], jet.d2[b][1][m]])));
    let nfd = normal_frame(st, &xd, &td)?;
    let mut beta = [0.0; 2];
    for a in 0..2 {
        let gam = st.christoffel_contract(&x, &tang[a], &nf.e_n);
        let mut cov = [0.0; 4];
        for m in 0..4 {
            cov[m] = nfd.e_n[m].d[a] + gam[m];
        }
        beta[a] = ip(&g, &cov, &nf.e_np1);
    }

    // σ-orthonormal tangents.
    let s00 = nf.sigma[0][0];
    let inv_l0 = 1.0 / s00.sqrt();
    let e1: [f64; 4] = std::array::from_fn(|m| tang[0][m] * inv_l0);
    let mut u = [0.0; 4];
    let c = nf.sigma[0][1] / s00;
    for m in 0..4 {
        u[m] = tang[1][m] - c * tang[0][m];
    }
    let inv_l1 = 1.0 / (nf.det / s00).sqrt();
    let e2: [f64; 4] = std::array::from_fn(|m| u[m] * inv_l1);

    let core = FrameCore {
        x,
        tang,
        sigma: nf.sigma,
        sigma_inv: nf.sigma_inv,
        area_density: nf.det.sqrt(),
        e_tan: [e1, e2],
        e_n: nf.e_n,
        e_np1: nf.e_np1,
        ii,
        h,
        h2,
        h_n,
        h_t,
        beta,
    };

    let hg = if h2 > eps_h * eps_h {
        let norm_h = h2.sqrt();
        let j: [f64; 4] = std::array::from_fn(|m| h_t * core.e_n[m] - h_n * core.e_np1[m]);
        let l: [f64; 4] = std::array::from_fn(|m| (j[m] - h[m]) / norm_h);
        let lbar: [f64; 4] = std::array::from_fn(|m| (j[m] + h[m]) / norm_h);
        let mut chi = [[0.0; 2]; 2];
        let mut chibar = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in a..2 {
                chi[a][b] = -ip(&g, &l, &ii[a][b]);
                chi[b][a] = chi[a][b];
                chibar[a][b] = -ip(&g, &lbar, &ii[a][b]);
                chibar[b][a] = chibar[a][b];
            }
        }
        Some(HGauge { norm_h, j, l, lbar, chi, chibar, psi: (h_t / norm_h).asinh() })
    } else {
        None
    };

    Ok(FrameData { core, hg })
}

/// σ-trace of a 2-tensor.
pub fn trace(sigma_inv: &[[f64; 2]; 2], m: &[[f64; 2]; 2]) -> f64 {
    let mut t = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            t += sigma_inv[a][b] * m[a][b];
        }
    }
    t
}

/// σ-Frobenius norm of the trace-free part of χ̄ (incoming) or χ (outgoing);
/// zero exactly when the surface is umbilical in that null direction.
pub fn shear_deficit(fd: &FrameData, branch: Branch) -> Result<f64> {
    let hg = fd
        .hg
        .as_ref()
        .ok_or_else(|| Error::Degenerate("mean curvature not spacelike: no null frames".into()))?;
    let m = match branch {
        Branch::Incoming => &hg.chibar,
        Branch::Outgoing => &hg.chi,
    };
    let si = &fd.core.sigma_inv;
    let tr = trace(si, m);
    let mut a = [[0.0; 2]; 2];
    for p in 0..2 {
        for q in 0..2 {
            a[p][q] = m[p][q] - 0.5 * tr * fd.core.sigma[p][q];
        }
    }
    let mut n2 = 0.0;
    for p in 0..2 {
        for q in 0..2 {
            for r in 0..2 {
                for s in 0..2 {
                    n2 += si[p][r] * si[q][s] * a[p][q] * a[r][s];
                }
            }
        }
    }
    Ok(n2.max(0.0).sqrt())
}
