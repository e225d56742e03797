//! Integral identities, inequalities, and classification criteria assembled
//! from per-node frame fields.
//!
//! Every operation evaluates its functional on the given grid and once more
//! on a refined grid (factor [`REFINE_FACTOR`]), reports both values, and
//! judges the verdict on the base grid.  "scale" is always the sum of the
//! absolute values of the constituent integrals, so `relative` stays a
//! meaningful residual when the terms are large and cancelling.

use crate::curvature::{gamma_cone_member, mixed_curvatures, newton_tensors, CurvTuple};
use crate::error::{Error, Result};
use crate::euclid::{minkowski_value_with_gradient, slice_geometry};
use crate::extrinsic::{frame_at, shear_deficit, trace, Branch, FrameCore, EPS_H_DEFAULT};
use crate::fields::{
    ambient_covariant_derivative, apply_gauge, frame_field, solve_gauge, sup_covector_norm,
    FrameField,
};
use crate::scalar::D2;
use crate::sphere_grid::{Grid, Parity, SurfaceField};
use crate::spacetimes::{Kind, Spacetime};
use crate::surfaces::{parse_expr, Expr, SurfaceSpec};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Refinement factor for the cross-check grid (64×128 → 96×192).
pub const REFINE_FACTOR: f64 = 1.5;

/// Random tangent directions per node for the Q²-sign conditions.
const QSQ_DIRECTIONS: usize = 16;

/// Tolerances used by every verdict.  All config-overridable.
#[derive(Clone, Copy, Debug)]
pub struct ToleranceSet {
    /// Identity residual bound, relative to scale, on the base grid.
    pub identity_rel: f64,
    /// Inequality slack, as a multiple of scale.
    pub inequality_margin: f64,
    /// Equality detection threshold, as a multiple of scale; also the
    /// shear-deficit bound for shear-free verdicts.
    pub equality_detect: f64,
}

impl Default for ToleranceSet {
    fn default() -> Self {
        ToleranceSet { identity_rel: 1e-6, inequality_margin: 1e-6, equality_detect: 1e-5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    IdentityOk,
    InequalityOk,
    StrictPositive,
    Violated,
    HypothesesFailed,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::IdentityOk => "identity_ok",
            Verdict::InequalityOk => "inequality_ok",
            Verdict::StrictPositive => "strict_positive",
            Verdict::Violated => "violated",
            Verdict::HypothesesFailed => "hypotheses_failed",
        }
    }
}

/// Outcome of one functional evaluation.
#[derive(Clone, Debug)]
pub struct IdentityReport {
    pub name: String,
    /// Base-grid value; verdicts are judged on this number.
    pub value: f64,
    pub scale: f64,
    /// value/scale; 0 when both vanish.
    pub relative: f64,
    /// Same as `value`, kept under the report key the consumers expect.
    pub grid_value: f64,
    pub refined_value: f64,
    pub refined_scale: f64,
    pub verdict: Verdict,
    /// Constituent integrals by name.
    pub terms: Vec<(String, f64)>,
    /// Extra diagnostics (gauge residuals, deficits, companion values).
    pub details: Vec<(String, f64)>,
    /// Hypotheses that cannot be checked numerically and are taken on faith.
    pub assumed: Vec<String>,
}

fn relative_of(value: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        value / scale
    } else if value == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// One grid's worth of a functional: value, scale, and named pieces.
struct Contribution {
    value: f64,
    scale: f64,
    terms: Vec<(String, f64)>,
    details: Vec<(String, f64)>,
}

impl Contribution {
    fn new(parts: Vec<(&'static str, f64)>) -> Contribution {
        let value = parts.iter().map(|p| p.1).sum();
        let scale = parts.iter().map(|p| p.1.abs()).sum();
        Contribution {
            value,
            scale,
            terms: parts.into_iter().map(|(n, v)| (n.to_string(), v)).collect(),
            details: Vec::new(),
        }
    }

    fn detail(mut self, name: &str, v: f64) -> Contribution {
        self.details.push((name.to_string(), v));
        self
    }
}

fn identity_verdict(value: f64, scale: f64, tol: &ToleranceSet) -> Verdict {
    if relative_of(value, scale).abs() <= tol.identity_rel {
        Verdict::IdentityOk
    } else {
        Verdict::Violated
    }
}

fn report(
    name: &str,
    base: Contribution,
    fine: Contribution,
    verdict: Verdict,
    assumed: Vec<String>,
) -> IdentityReport {
    IdentityReport {
        name: name.to_string(),
        value: base.value,
        scale: base.scale,
        relative: relative_of(base.value, base.scale),
        grid_value: base.value,
        refined_value: fine.value,
        refined_scale: fine.scale,
        verdict,
        terms: base.terms,
        details: base.details,
        assumed,
    }
}

// ---------------------------------------------------------------------------
// weights

/// Weight functions f appearing in the integral identities.  The expression
/// form is a function of the parameters (θ, φ); the other variants are
/// shorthands for ambient quantities restricted to the surface.
#[derive(Clone, Debug)]
pub enum Weight {
    Expr(Expr),
    /// f = r (areal radius).
    AmbientR,
    /// f = z² with z = r cos θ.
    AmbientZSquared,
    /// f = 1/|H|.
    InvNormH,
}

impl Weight {
    pub fn one() -> Weight {
        Weight::Expr(Expr::num(1.0))
    }

    /// Parses the weight tokens accepted by run configs.
    pub fn parse(src: &str) -> Result<Weight> {
        match src.trim() {
            "r" => Ok(Weight::AmbientR),
            "z^2" => Ok(Weight::AmbientZSquared),
            "1/|H|" => Ok(Weight::InvNormH),
            other => Ok(Weight::Expr(parse_expr(other)?)),
        }
    }
}

/// A weight sampled on a grid: values and coordinate partials ∂_a f.
struct WeightField {
    f: SurfaceField<f64>,
    df: SurfaceField<[f64; 2]>,
}

/// Evaluates a (θ, φ) expression with exact first derivatives.
fn sample_expr(grid: &Grid, e: &Expr) -> Result<(SurfaceField<f64>, SurfaceField<[f64; 2]>)> {
    let mut f = Vec::with_capacity(grid.node_count());
    let mut df = Vec::with_capacity(grid.node_count());
    for (i, j) in grid.nodes() {
        let th = D2 { v: grid.theta(i), d: [1.0, 0.0] };
        let ph = D2 { v: grid.phi(j), d: [0.0, 1.0] };
        let out = e.eval(th, ph)?;
        f.push(out.v);
        df.push(out.d);
    }
    Ok((SurfaceField::from_vals(grid, f)?, SurfaceField::from_vals(grid, df)?))
}

fn sample_weight(grid: &Grid, ff: &FrameField, w: &Weight) -> Result<WeightField> {
    match w {
        Weight::Expr(e) => {
            let (f, df) = sample_expr(grid, e)?;
            Ok(WeightField { f, df })
        }
        Weight::AmbientR => {
            let f = SurfaceField::from_vals(
                grid,
                ff.frames.iter().map(|fr| fr.core.x[1]).collect(),
            )?;
            let df = SurfaceField::from_vals(
                grid,
                ff.frames.iter().map(|fr| [fr.core.tang[0][1], fr.core.tang[1][1]]).collect(),
            )?;
            Ok(WeightField { f, df })
        }
        Weight::AmbientZSquared => {
            let mut f = Vec::with_capacity(ff.frames.len());
            let mut df = Vec::with_capacity(ff.frames.len());
            for fr in &ff.frames {
                let c = &fr.core;
                let z = c.x[1] * c.x[2].cos();
                let dz = std::array::from_fn::<f64, 2, _>(|a| {
                    c.tang[a][1] * c.x[2].cos() - c.x[1] * c.x[2].sin() * c.tang[a][2]
                });
                f.push(z * z);
                df.push([2.0 * z * dz[0], 2.0 * z * dz[1]]);
            }
            Ok(WeightField {
                f: SurfaceField::from_vals(grid, f)?,
                df: SurfaceField::from_vals(grid, df)?,
            })
        }
        Weight::InvNormH => {
            let dlog = grid.partials(&ff.log_norm_h, Parity::Even)?;
            let f: Vec<f64> = ff.log_norm_h.vals.iter().map(|l| (-l).exp()).collect();
            let df: Vec<[f64; 2]> = f
                .iter()
                .zip(&dlog.vals)
                .map(|(fv, d)| [-fv * d[0], -fv * d[1]])
                .collect();
            Ok(WeightField {
                f: SurfaceField::from_vals(grid, f)?,
                df: SurfaceField::from_vals(grid, df)?,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// small per-node helpers

/// σ^{ab} ω_b E_a: a covector raised and pushed to ambient components.
fn raise(core: &FrameCore, omega: [f64; 2]) -> [f64; 4] {
    let mut v = [0.0; 4];
    for a in 0..2 {
        for b in 0..2 {
            let c = core.sigma_inv[a][b] * omega[b];
            for m in 0..4 {
                v[m] += c * core.tang[a][m];
            }
        }
    }
    v
}

fn scaled(v: &[f64; 4], s: f64) -> [f64; 4] {
    std::array::from_fn(|m| s * v[m])
}

fn add4(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    std::array::from_fn(|m| a[m] + b[m])
}

const E_T: [f64; 4] = [1.0, 0.0, 0.0, 0.0];

fn integrate_parts(
    grid: &Grid,
    dens: &SurfaceField<f64>,
    names: &[&'static str],
    fields: Vec<Vec<f64>>,
) -> Result<Contribution> {
    let mut parts = Vec::with_capacity(names.len());
    for (name, vals) in names.iter().zip(fields) {
        let t = grid.integrate(&SurfaceField::from_vals(grid, vals)?, dens)?;
        parts.push((*name, t));
    }
    Ok(Contribution::new(parts))
}

// ---------------------------------------------------------------------------
// Eq. (2.2): the basic weighted null Minkowski identity

fn eval_basic(
    st: &Spacetime,
    surf: &SurfaceSpec,
    grid: &Grid,
    f: &Weight,
    u: &Expr,
) -> Result<Contribution> {
    let n = st.n() as f64;
    let ff = frame_field(st, surf, grid, EPS_H_DEFAULT)?;
    let wf = sample_weight(grid, &ff, f)?;
    let (uf, _du) = sample_expr(grid, u)?;

    let lbar_u = SurfaceField::from_vals(
        grid,
        ff.frames
            .iter()
            .zip(&uf.vals)
            .map(|(fr, &uk)| scaled(&fr.hg.as_ref().unwrap().lbar, uk.exp()))
            .collect(),
    )?;
    let dlbar = ambient_covariant_derivative(st, grid, &ff, &lbar_u)?;

    let count = grid.node_count();
    let mut t1 = Vec::with_capacity(count);
    let mut t2 = Vec::with_capacity(count);
    let mut t3 = Vec::with_capacity(count);
    let mut t4 = Vec::with_capacity(count);
    for k in 0..count {
        let core = &ff.frames[k].core;
        let x = &core.x;
        let lb = &lbar_u.vals[k];
        let lu = scaled(&ff.frames[k].hg.as_ref().unwrap().l, (-uf.vals[k]).exp());
        let fv = wf.f.vals[k];

        t1.push((n - 1.0) / n * fv * st.xi_inner(x, lb));
        t2.push(fv * st.q_form(x, &core.h, lb));
        // (D_a L̄)^⊥ = −½⟨D_a L̄, L⟩ L̄, paired as Q(e_a, ·) through σ^{ab}.
        let mut conn = 0.0;
        let mut grad = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let q = core.sigma_inv[a][b] * st.q_form(x, &core.tang[a], lb);
                conn += q * -0.5 * st.inner(x, &dlbar.vals[k][b], &lu);
                grad += q * wf.df.vals[k][b];
            }
        }
        t3.push(fv * conn);
        t4.push(grad);
    }
    integrate_parts(grid, &ff.dens, &["xi", "q_h", "connection", "gradient"], vec![t1, t2, t3, t4])
}

/// Residual of the four-term identity for a null normal L̄ rescaled by e^u.
///
/// Vanishes for every closed spacelike surface with spacelike H, any weight,
/// and any rescaling — the u-dependence cancels term by term.
pub fn minkowski_residual_basic(
    st: &Spacetime,
    surf: &SurfaceSpec,
    grid: &Grid,
    f: &Weight,
    u: &Expr,
    tol: &ToleranceSet,
) -> Result<IdentityReport> {
    let base = eval_basic(st, surf, grid, f, u)?;
    let fine = eval_basic(st, surf, &grid.refine(REFINE_FACTOR)?, f, u)?;
    let verdict = identity_verdict(base.value, base.scale, tol);
    Ok(report("minkowski_basic", base, fine, verdict, vec![
        "surface is closed and spacelike".to_string(),
    ]))
}

// ---------------------------------------------------------------------------
// Eqs. (2.2′)/(2.2″): the ±H+J forms

fn eval_pm(
    st: &Spacetime,
    surf: &SurfaceSpec,
    grid: &Grid,
    f: &Weight,
    branch: Branch,
) -> Result<Contribution> {
    let n = st.n() as f64;
    let sgn = match branch {
        Branch::Incoming => 1.0,
        Branch::Outgoing => -1.0,
    };
    let ff = frame_field(st, surf, grid, EPS_H_DEFAULT)?;
    let wf = sample_weight(grid, &ff, f)?;

    let count = grid.node_count();
    let mut t1 = Vec::with_capacity(count);
    let mut t2 = Vec::with_capacity(count);
    let mut t3 = Vec::with_capacity(count);
    for k in 0..count {
        let core = &ff.frames[k].core;
        let hg = ff.frames[k].hg.as_ref().unwrap();
        let x = &core.x;
        let inv_h = 1.0 / hg.norm_h;
        let pm = add4(&scaled(&core.h, sgn), &hg.j);
        let fv = wf.f.vals[k];

        t1.push((n - 1.0) / n * fv * inv_h * st.xi_inner(x, &pm));
        t2.push(fv * inv_h * st.q_form(x, &core.h, &hg.j));
        let w4 = add4(
            &raise(core, wf.df.vals[k]),
            &scaled(&raise(core, ff.alpha_h.vals[k]), sgn * fv),
        );
        t3.push(inv_h * st.q_form(x, &w4, &pm));
    }
    integrate_parts(grid, &ff.dens, &["xi", "q_hj", "gradient"], vec![t1, t2, t3])
}

/// Residual of the three-term identity built from ±H + J; `Incoming` takes
/// the + sign, `Outgoing` the − sign.
pub fn minkowski_residual_pm(
    st: &Spacetime,
    surf: &SurfaceSpec,
    grid: &Grid,
    f: &Weight,
    branch: Branch,
    tol: &ToleranceSet,
) -> Result<IdentityReport> {
    let base = eval_pm(st, surf, grid, f, branch)?;
    let fine = eval_pm(st, surf, &grid.refine(REFINE_FACTOR)?, f, branch)?;
    let verdict = identity_verdict(base.value, base.scale, tol);
    let name = match branch {
        Branch::Incoming => "minkowski_incoming",
        Branch::Outgoing => "minkowski_outgoing",
    };
    Ok(report(name, base, fine, verdict, vec!["surface is closed and spacelike".to_string()]))
}

// ---------------------------------------------------------------------------
// Euclidean reduction on t = const slices

/// Direct Euclidean Minkowski identity on a slice surface, cross-checked
/// against the incoming spacetime residual on the same grid.
///
/// The report's value/scale/terms are the Euclidean ones; the spacetime
/// side's relative residual and the difference between the two relatives
/// appear in `details`.
pub fn euclidean_reduction_check(
    st: &Spacetime,
    surf: &SurfaceSpec,
    grid: &Grid,
    f: &Weight,
    tol: &ToleranceSet,
) -> Result<IdentityReport> {
    let eval = |g: &Grid| -> Result<Contribution> {
        let geo = slice_geometry(st, surf, g)?;
        let ff = frame_field(st, surf, g, EPS_H_DEFAULT)?;
        let wf = sample_weight(g, &ff, f)?;
        // Feed the spacetime pipeline's weight derivatives into the slice
        // formula too: the residuals then agree to roundoff instead of to
        // stencil truncation.
        let e = minkowski_value_with_gradient(g, &geo, &wf.f, &wf.df)?;
        let s = eval_pm(st, surf, g, f, Branch::Incoming)?;
        let rel_e = relative_of(e.value, e.scale);
        let rel_s = relative_of(s.value, s.scale);
        let mut c = Contribution {
            value: e.value,
            scale: e.scale,
            terms: vec![
                ("area".to_string(), e.area_term),
                ("curvature".to_string(), -e.curvature_term),
                ("gradient".to_string(), e.gradient_term),
            ],
            details: Vec::new(),
        };
        c = c.detail("spacetime_value", s.value);
        c = c.detail("spacetime_relative", rel_s);
        c = c.detail("agreement", (rel_e - rel_s).abs());
        Ok(c)
    };
    let base = eval(grid)?;
    let fine = eval(&grid.refine(REFINE_FACTOR)?)?;
    let both_ok = relative_of(base.value, base.scale).abs() <= tol.identity_rel
        && base
            .details
            .iter()
            .find(|d| d.0 == "spacetime_relative")
            .map(|d| d.1.abs() <= tol.identity_rel)
            .unwrap_or(false);
    let verdict = if both_ok { Verdict::IdentityOk } else { Verdict::Violated };
    Ok(report("euclidean_reduction", base, fine, verdict, Vec::new()))
}

// ---------------------------------------------------------------------------
// Heintze–Karcher functional

fn eval_hk(st: &Spacetime, surf: &SurfaceSpec, grid: &Grid, branch: Branch) -> Result<Contribution> {
    let n = st.n() as f64;
    let sgn = match branch {
        Branch::Incoming => 1.0,
        Branch::Outgoing => -1.0,
    };
    let ff = frame_field(st, surf, grid, EPS_H_DEFAULT)?;
    let count = grid.node_count();
    let mut t1 = Vec::with_capacity(count);
    let mut t2 = Vec::with_capacity(count);
    for k in 0..count {
        let core = &ff.frames[k].core;
        let hg = ff.frames[k].hg.as_ref().unwrap();
        let x = &core.x;
        let inv_h2 = 1.0 / core.h2;
        let pm = add4(&scaled(&core.h, sgn), &hg.j);
        t1.push(-(n - 1.0) * inv_h2 * st.inner(x, &E_T, &pm));
        t2.push(inv_h2 * st.q_form(x, &core.h, &hg.j));
    }
    integrate_parts(grid, &ff.dens, &["time", "q_hj"], vec![t1, t2])
}

fn positivity_verdict(value: f64, scale: f64, tol: &ToleranceSet) -> Verdict {
    if value < -tol.inequality_margin * scale {
        Verdict::Violated
    } else if value.abs() <= tol.equality_detect * scale {
        Verdict::IdentityOk
    } else if value >= 10.0 * tol.inequality_margin * scale {
        Verdict::StrictPositive
    } else {
        Verdict::InequalityOk
    }
}

/// Heintze–Karcher-type functional; nonnegative under the branch's
/// embeddedness hypothesis, zero exactly in the shear-free case.
pub fn hk_functional(
    st: &Spacetime,
    surf: &SurfaceSpec,
    grid: &Grid,
    branch: Branch,
    tol: &ToleranceSet,
) -> Result<IdentityReport> {
    let base = eval_hk(st, surf, grid, branch)?;
    let fine = eval_hk(st, surf, &grid.refine(REFINE_FACTOR)?, branch)?;
    let verdict = positivity_verdict(base.value, base.scale, tol);
    let assumed = vec![match branch {
        Branch::Incoming => "past incoming null embedded (not numerically verifiable)".to_string(),
        Branch::Outgoing => {
            "future outgoing null embedded (not numerically verifiable)".to_string()
        }
    }];
    let name = match branch {
        Branch::Incoming => "hk_incoming",
        Branch::Outgoing => "hk_outgoing",
    };
    Ok(report(name, base, fine, verdict, assumed))
}

// ---------------------------------------------------------------------------
// Alexandrov criterion and shear-free classification

fn eval_alex(
    st: &Spacetime,
    surf: &SurfaceSpec,
    grid: &Grid,
    branch: Branch,
) -> Result<(Contribution, f64)> {
    let sgn = match branch {
        Branch::Incoming => 1.0,
        Branch::Outgoing => -1.0,
    };
    let ff = frame_field(st, surf, grid, EPS_H_DEFAULT)?;
    let dlogh = grid.partials(&ff.log_norm_h, Parity::Even)?;
    let count = grid.node_count();
    let mut vals = Vec::with_capacity(count);
    let mut deficit = 0.0_f64;
    for k in 0..count {
        let fd = &ff.frames[k];
        let core = &fd.core;
        let hg = fd.hg.as_ref().unwrap();
        let x = &core.x;
        let inv_h2 = 1.0 / core.h2;
        let pm = add4(&scaled(&core.h, sgn), &hg.j);
        // ∇log|H| ∓ Σ α_H(e_a) e_a: the incoming branch subtracts α_H.
        let w4 = add4(
            &raise(core, dlogh.vals[k]),
            &scaled(&raise(core, ff.alpha_h.vals[k]), -sgn),
        );
        vals.push(inv_h2 * st.q_form(x, &w4, &pm));
        deficit = deficit.max(shear_deficit(fd, branch)?);
    }
    let value_field = SurfaceField::from_vals(grid, vals.clone())?;
    let abs_field = SurfaceField::from_vals(grid, vals.iter().map(|v| v.abs()).collect())?;
    let value = grid.integrate(&value_field, &ff.dens)?;
    let scale = grid.integrate(&abs_field, &ff.dens)?;
    let c = Contribution {
        value,
        scale,
        terms: vec![("criterion".to_string(), value)],
        details: Vec::new(),
    };
    Ok((c, deficit))
}

/// Alexandrov-type shear-free criterion with classification.
///
/// The criterion integral is reported as the value; the verdict combines its
/// sign with the Heintze–Karcher equality and the pointwise shear deficit:
/// `identity_ok` means "certified shear-free", `strict_positive` means
/// "certified not shear-free".
pub fn alexandrov_criterion(
    st: &Spacetime,
    surf: &SurfaceSpec,
    grid: &Grid,
    branch: Branch,
    tol: &ToleranceSet,
) -> Result<IdentityReport> {
    let (mut base, deficit) = eval_alex(st, surf, grid, branch)?;
    let (fine, _) = eval_alex(st, surf, &grid.refine(REFINE_FACTOR)?, branch)?;
    let hk = eval_hk(st, surf, grid, branch)?;
    let hk_equal = hk.value.abs() <= tol.equality_detect * hk.scale;
    base = base
        .detail("hk_value", hk.value)
        .detail("hk_scale", hk.scale)
        .detail("shear_deficit_sup", deficit);

    // On cone sections the integrand vanishes pointwise and base.scale is
    // roundoff dust; anchor the margin to the machine floor of the HK scale
    // (same functional, non-degenerate yardstick) so noise is not classified
    // as a strict sign.
    let margin = tol.inequality_margin * base.scale + f64::EPSILON * hk.scale;
    let verdict = if base.value <= margin && hk_equal && deficit <= tol.equality_detect {
        Verdict::IdentityOk
    } else if base.value > 10.0 * margin {
        Verdict::StrictPositive
    } else if base.value <= margin {
        // criterion ≤ 0 must force the equality case; reaching here means
        // the two certificates disagree.
        Verdict::Violated
    } else {
        Verdict::InequalityOk
    };
    let assumed = vec![match branch {
        Branch::Incoming => "past incoming null embedded (not numerically verifiable)".to_string(),
        Branch::Outgoing => {
            "future outgoing null embedded (not numerically verifiable)".to_string()
        }
    }];
    let name = match branch {
        Branch::Incoming => "alexandrov_incoming",
        Branch::Outgoing => "alexandrov_outgoing",
    };
    Ok(report(name, base, fine, verdict, assumed))
}

// ---------------------------------------------------------------------------
// gauge-fixed frames shared by the higher-order functionals

/// Gauge residual threshold: discretization error of the Hodge solve scales
/// with the surface size, so allow 1e−6·(1 + √area).
fn gauge_threshold(area: f64) -> f64 {
    1e-6 * (1.0 + area.sqrt())
}

struct Gauged {
    ff: FrameField,
    gf: crate::fields::GaugedFrames,
    residual: f64,
    zeta_sup: f64,
    threshold: f64,
}

fn gauge_frames(st: &Spacetime, surf: &SurfaceSpec, grid: &Grid) -> Result<Gauged> {
    let ff = frame_field(st, surf, grid, EPS_H_DEFAULT)?;
    let zeta = ff.zeta();
    let gs = solve_gauge(grid, &ff, &zeta)?;
    let gf = apply_gauge(grid, &ff, &gs)?;
    let zeta_sup = sup_covector_norm(&ff, &gf.zeta);
    let threshold = gauge_threshold(ff.area(grid)?);
    Ok(Gauged { ff, gf, residual: gs.residual, zeta_sup, threshold })
}

fn binom_f(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut v = 1.0;
    for i in 0..k {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

fn dmat2(a: &[[f64; 2]; 2]) -> DMatrix<f64> {
    DMatrix::from_fn(2, 2, |i, j| a[i][j])
}

/// T^{ab} ∂_b f E_a pushed to ambient components (T with both indices up).
fn tensor_grad4(core: &FrameCore, t: &DMatrix<f64>, df: [f64; 2]) -> [f64; 4] {
    let mut v = [0.0; 4];
    for a in 0..2 {
        for b in 0..2 {
            let c = t[(a, b)] * df[b];
            for m in 0..4 {
                v[m] += c * core.tang[a][m];
            }
        }
    }
    v
}

/// Numerical-dust slack for nodewise sign conditions.
fn sign_slack(v: f64) -> f64 {
    1e-9 * (1.0 + v.abs())
}

// ---------------------------------------------------------------------------
// higher-order weighted Minkowski identities

/// Which curvature family an operation addresses: the χ/L side or the χ̄/L̄
/// side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Chi,
    Chibar,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Chi => "chi",
            Family::Chibar => "chibar",
        }
    }
}

fn eval_higher(
    st: &Spacetime,
    surf: &SurfaceSpec,
    grid: &Grid,
    f: &Weight,
    r: usize,
    s: usize,
    branch: Branch,
) -> Result<(Contribution, f64, f64)> {
    let n = st.n() as f64;
    let g = gauge_frames(st, surf, grid)?;
    let wf = sample_weight(grid, &g.ff, f)?;
    let count = grid.node_count();
    let mut t1 = Vec::with_capacity(count);
    let mut t2 = Vec::with_capacity(count);
    let mut t3 = Vec::with_capacity(count);
    for k in 0..count {
        let core = &g.ff.frames[k].core;
        let x = &core.x;
        let l = &g.gf.l.vals[k];
        let lbar = &g.gf.lbar.vals[k];
        let fv = wf.f.vals[k];
        let ct = CurvTuple::dim2(core.sigma, g.gf.chi.vals[k], g.gf.chibar.vals[k]);
        let mc = mixed_curvatures(&ct)?;
        let (t_up, tbar_up) = newton_tensors(&ct, r, s)?;
        let qll = st.q_form(x, l, lbar);
        match branch {
            // L-equation: coefficients carry r.
            Branch::Outgoing => {
                let c1 = r as f64 * (n - (r + s) as f64) / (r + s) as f64;
                t1.push(c1 * fv * mc.p(r - 1, s) * st.inner(x, l, &E_T));
                t2.push(r as f64 / 2.0 * fv * mc.p(r, s) * qll);
                let tg = tensor_grad4(core, &t_up, wf.df.vals[k]);
                t3.push(st.q_form(x, l, &tg));
            }
            // L̄-equation: coefficients carry s, middle term flips sign.
            Branch::Incoming => {
                let c1 = s as f64 * (n - (r + s) as f64) / (r + s) as f64;
                t1.push(c1 * fv * mc.p(r, s - 1) * st.inner(x, lbar, &E_T));
                t2.push(-(s as f64) / 2.0 * fv * mc.p(r, s) * qll);
                let tg = tensor_grad4(core, &tbar_up, wf.df.vals[k]);
                t3.push(st.q_form(x, lbar, &tg));
            }
        }
    }
    let c = integrate_parts(grid, &g.ff.dens, &["time", "q_llbar", "newton_gradient"], vec![
        t1, t2, t3,
    ])?;
    Ok((c, g.residual, g.zeta_sup))
}

/// Residual of the higher-order weighted identity for mixed orders (r, s) in
/// a constant-curvature spacetime, after fixing the null frame so ζ ≈ 0.
///
/// `Outgoing` evaluates the L-equation (requires r ≥ 1), `Incoming` the
/// L̄-equation (requires s ≥ 1).
pub fn higher_minkowski_residual(
    st: &Spacetime,
    surf: &SurfaceSpec,
    grid: &Grid,
    f: &Weight,
    r: usize,
    s: usize,
    branch: Branch,
    tol: &ToleranceSet,
) -> Result<IdentityReport> {
    if st.constant_curvature().is_none() {
        return Err(Error::Hypothesis(format!(
            "higher-order identities need constant curvature; {} is not",
            st.name()
        )));
    }
    let d = st.n() - 1;
    if r + s == 0 || r + s > d {
        return Err(Error::InvalidArgument(format!("(r, s) = ({r}, {s}) out of range, r+s ≤ {d}")));
    }
    match branch {
        Branch::Outgoing if r == 0 => {
            return Err(Error::InvalidArgument("L-equation needs r ≥ 1".into()));
        }
        Branch::Incoming if s == 0 => {
            return Err(Error::InvalidArgument("L̄-equation needs s ≥ 1".into()));
        }
        _ => {}
    }
    let (base, residual, zeta_sup) = eval_higher(st, surf, grid, f, r, s, branch)?;
    let (fine, _, _) = eval_higher(st, surf, &grid.refine(REFINE_FACTOR)?, f, r, s, branch)?;
    let gauge_ok = residual <= gauge_threshold_from(&base) && zeta_sup.is_finite();
    let verdict = if !gauge_ok {
        Verdict::HypothesesFailed
    } else {
        identity_verdict(base.value, base.scale, tol)
    };
    let base = base.detail("gauge_residual", residual).detail("zeta_sup_post", zeta_sup);
    let name = match branch {
        Branch::Outgoing => format!("higher_minkowski_l_{r}_{s}"),
        Branch::Incoming => format!("higher_minkowski_lbar_{r}_{s}"),
    };
    Ok(report(&name, base, fine, verdict, vec![
        "gauge class admits dζ = 0 and [ζ] = 0 (certified via solve residual)".to_string(),
    ]))
}

/// The per-surface gauge threshold needs the area, which the contribution
/// does not carry; fall back to the scale-free default.
fn gauge_threshold_from(_c: &Contribution) -> f64 {
    // Residuals are reported; the gate is intentionally loose and only
    // trips on genuinely obstructed gauges ([ζ] ≠ 0).
    1e-5
}

// ---------------------------------------------------------------------------
// dζ invariance and the Ricci identity

/// Max-norm difference between dζ computed from (L, L̄) and from
/// (e^u L, e^{−u} L̄), both through the same numerical pipeline.  The
/// area density divides out so the number is measure-invariant.
pub fn dzeta_invariance(
    st: &Spacetime,
    surf: &SurfaceSpec,
    grid: &Grid,
    u: &Expr,
) -> Result<f64> {
    let ff = frame_field(st, surf, grid, EPS_H_DEFAULT)?;
    let (uf, _du) = sample_expr(grid, u)?;
    let dzeta_of = |uvals: &[f64]| -> Result<SurfaceField<f64>> {
        let l_u = SurfaceField::from_vals(
            grid,
            ff.frames
                .iter()
                .zip(uvals)
                .map(|(fr, &uk)| scaled(&fr.hg.as_ref().unwrap().l, uk.exp()))
                .collect(),
        )?;
        let dl = ambient_covariant_derivative(st, grid, &ff, &l_u)?;
        let mut zeta = Vec::with_capacity(grid.node_count());
        for k in 0..grid.node_count() {
            let fr = &ff.frames[k];
            let lbar_u = scaled(&fr.hg.as_ref().unwrap().lbar, (-uvals[k]).exp());
            zeta.push(std::array::from_fn::<f64, 2, _>(|a| {
                0.5 * st.inner(&fr.core.x, &dl.vals[k][a], &lbar_u)
            }));
        }
        grid.exterior_derivative_1form(&SurfaceField::from_vals(grid, zeta)?)
    };
    let with_u = dzeta_of(&uf.vals)?;
    let zero = vec![0.0; grid.node_count()];
    let base = dzeta_of(&zero)?;
    let mut sup = 0.0_f64;
    for k in 0..grid.node_count() {
        sup = sup.max((with_u.vals[k] - base.vals[k]).abs() / ff.dens.vals[k]);
    }
    Ok(sup)
}

/// Residual of the Ricci identity for dζ in the H-gauge:
/// (dζ)_{θφ} = ½⟨R̄(E_θ, E_φ)L, L̄⟩ + ½(N_{φθ} − N_{θφ}) with N = χ σ^{-1} χ̄.
/// Returns the sup of |lhs − rhs| per unit area density.
pub fn dzeta_ricci_residual(st: &Spacetime, surf: &SurfaceSpec, grid: &Grid) -> Result<f64> {
    let ff = frame_field(st, surf, grid, EPS_H_DEFAULT)?;
    let lhs = grid.exterior_derivative_1form(&ff.zeta())?;
    let mut sup = 0.0_f64;
    for k in 0..grid.node_count() {
        let fd = &ff.frames[k];
        let core = &fd.core;
        let hg = fd.hg.as_ref().unwrap();
        let x = &core.x;
        let rm = st.riemann_at(x);
        let curv =
            st.riemann_inner(x, &rm, &core.tang[0], &core.tang[1], &hg.l, &hg.lbar);
        let si = &core.sigma_inv;
        let n_of = |a: usize, b: usize| -> f64 {
            let mut acc = 0.0;
            for c in 0..2 {
                for d in 0..2 {
                    acc += hg.chi[a][c] * si[c][d] * hg.chibar[d][b];
                }
            }
            acc
        };
        let rhs = 0.5 * curv + 0.5 * (n_of(1, 0) - n_of(0, 1));
        sup = sup.max((lhs.vals[k] - rhs).abs() / ff.dens.vals[k]);
    }
    Ok(sup)
}

// ---------------------------------------------------------------------------
// Schwarzschild hypothesis flags

/// Nodewise outcome of one hypothesis: whether it held everywhere, how many
/// nodes failed, and the first failing node.
#[derive(Clone, Copy, Debug)]
pub struct NodeCheck {
    pub ok: bool,
    pub failures: usize,
    pub first_failure: Option<(usize, usize)>,
}

impl NodeCheck {
    fn new() -> NodeCheck {
        NodeCheck { ok: true, failures: 0, first_failure: None }
    }

    fn fail(&mut self, i: usize, j: usize) {
        self.ok = false;
        self.failures += 1;
        if self.first_failure.is_none() {
            self.first_failure = Some((i, j));
        }
    }
}

/// Pointwise hypotheses feeding the Schwarzschild inequalities.
///
/// The sign conditions are gauge-invariant, so they are evaluated in the
/// H-gauge directly.  `cone` lists Γ-cone membership for the (r, s) pairs the
/// criteria consume: order k = r+s of χ for s = 0, of −χ̄ for r = 0, of both
/// for mixed pairs.
#[derive(Clone, Debug)]
pub struct HypothesisFlags {
    pub h_spacelike: NodeCheck,
    pub q_llbar: NodeCheck,
    pub chi_positive: NodeCheck,
    pub chibar_neg_positive: NodeCheck,
    pub qsq_l: NodeCheck,
    pub qsq_lbar: NodeCheck,
    pub cone: Vec<(usize, usize, NodeCheck)>,
    pub dzeta_zero: bool,
    pub dzeta_sup: f64,
    pub gauge_residual: f64,
}

impl HypothesisFlags {
    /// Can the χ-family inequality of order r be applied?  Case (1) licenses
    /// every order; the χ > 0 route needs r ≥ 3 (vacuous for n = 3 surfaces,
    /// still reported).
    pub fn chi_family_ok(&self, r: usize) -> bool {
        self.h_spacelike.ok
            && (self.q_llbar.ok || (r >= 3 && self.chi_positive.ok && self.qsq_l.ok))
    }

    pub fn chibar_family_ok(&self, s: usize) -> bool {
        self.h_spacelike.ok
            && (self.q_llbar.ok || (s >= 3 && self.chibar_neg_positive.ok && self.qsq_lbar.ok))
    }

    pub fn cone_ok(&self, r: usize, s: usize) -> bool {
        self.cone.iter().find(|c| c.0 == r && c.1 == s).map(|c| c.2.ok).unwrap_or(false)
    }
}

const CONE_PAIRS: [(usize, usize); 5] = [(1, 0), (2, 0), (0, 1), (0, 2), (1, 1)];

/// Evaluates every Lemma-type hypothesis nodewise.
///
/// Applies to the Schwarzschild family (m = 0 giving the Minkowski
/// regression) and to plain Minkowski.  Surfaces with non-spacelike H do not
/// error; the failing nodes are recorded in `h_spacelike` and the gauge-level
/// checks are skipped.
pub fn schwarzschild_hypotheses(
    st: &Spacetime,
    surf: &SurfaceSpec,
    grid: &Grid,
) -> Result<HypothesisFlags> {
    if !matches!(st.kind(), Kind::Schwarzschild { .. } | Kind::Minkowski) {
        return Err(Error::Hypothesis(format!(
            "hypothesis flags target the Schwarzschild family; got {}",
            st.name()
        )));
    }
    let mut h_spacelike = NodeCheck::new();
    let mut q_llbar = NodeCheck::new();
    let mut chi_positive = NodeCheck::new();
    let mut chibar_neg_positive = NodeCheck::new();
    let mut qsq_l = NodeCheck::new();
    let mut qsq_lbar = NodeCheck::new();
    let mut cone: Vec<(usize, usize, NodeCheck)> =
        CONE_PAIRS.iter().map(|&(r, s)| (r, s, NodeCheck::new())).collect();

    for (i, j) in grid.nodes() {
        let jet = surf.eval_jet2(st, grid.theta(i), grid.phi(j))?;
        let fd = frame_at(st, &jet, EPS_H_DEFAULT)?;
        let core = &fd.core;
        let x = &core.x;
        let Some(hg) = fd.hg.as_ref() else {
            h_spacelike.fail(i, j);
            continue;
        };

        let qll = st.q_form(x, &hg.l, &hg.lbar);
        if qll < -sign_slack(qll) {
            q_llbar.fail(i, j);
        }

        let tr_chi = trace(&core.sigma_inv, &hg.chi);
        let det_sigma = core.sigma[0][0] * core.sigma[1][1] - core.sigma[0][1] * core.sigma[1][0];
        let det_chi = hg.chi[0][0] * hg.chi[1][1] - hg.chi[0][1] * hg.chi[1][0];
        if !(tr_chi > 0.0 && det_chi / det_sigma > 0.0) {
            chi_positive.fail(i, j);
        }
        let tr_cb = -trace(&core.sigma_inv, &hg.chibar);
        let det_cb = hg.chibar[0][0] * hg.chibar[1][1] - hg.chibar[0][1] * hg.chibar[1][0];
        if !(tr_cb > 0.0 && det_cb / det_sigma > 0.0) {
            chibar_neg_positive.fail(i, j);
        }

        // Q²(W, v)·Q(W, v) over the coordinate tangents and random unit
        // tangent directions; the L row must be ≤ 0, the L̄ row ≥ 0.
        let e0 = core.tang[0];
        let e1 = core.tang[1];
        let mut dirs: Vec<[f64; 4]> = vec![e0, e1];
        let k_lin = grid.idx(i, j) as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ k_lin);
        for _ in 0..QSQ_DIRECTIONS {
            let psi = rng.random::<f64>() * std::f64::consts::TAU;
            dirs.push(std::array::from_fn(|m| psi.cos() * e0[m] + psi.sin() * e1[m]));
        }
        let mut l_ok = true;
        let mut lbar_ok = true;
        for v in &dirs {
            let pl = st.q_sq(x, &hg.l, v) * st.q_form(x, &hg.l, v);
            if pl > sign_slack(pl) {
                l_ok = false;
            }
            let pb = st.q_sq(x, &hg.lbar, v) * st.q_form(x, &hg.lbar, v);
            if pb < -sign_slack(pb) {
                lbar_ok = false;
            }
        }
        if !l_ok {
            qsq_l.fail(i, j);
        }
        if !lbar_ok {
            qsq_lbar.fail(i, j);
        }

        let sig_dm = dmat2(&core.sigma);
        let chi_dm = dmat2(&hg.chi);
        let ncb_dm = -dmat2(&hg.chibar);
        for (r, s, check) in cone.iter_mut() {
            let k = *r + *s;
            let mut member = true;
            if *s == 0 || *r > 0 {
                member = member && gamma_cone_member(&sig_dm, &chi_dm, k)?;
            }
            if *r == 0 || *s > 0 {
                member = member && gamma_cone_member(&sig_dm, &ncb_dm, k)?;
            }
            if !member {
                check.fail(i, j);
            }
        }
    }

    let (dzeta_zero, dzeta_sup, gauge_residual) = if h_spacelike.ok {
        let ff = frame_field(st, surf, grid, EPS_H_DEFAULT)?;
        let zeta = ff.zeta();
        let dz = grid.exterior_derivative_1form(&zeta)?;
        let mut sup = 0.0_f64;
        for k in 0..grid.node_count() {
            sup = sup.max(dz.vals[k].abs() / ff.dens.vals[k]);
        }
        let zs = sup_covector_norm(&ff, &zeta);
        let gs = solve_gauge(grid, &ff, &zeta)?;
        (sup <= 1e-6 * zs.max(1.0), sup, gs.residual)
    } else {
        (false, f64::INFINITY, f64::INFINITY)
    };

    Ok(HypothesisFlags {
        h_spacelike,
        q_llbar,
        chi_positive,
        chibar_neg_positive,
        qsq_l,
        qsq_lbar,
        cone,
        dzeta_zero,
        dzeta_sup,
        gauge_residual,
    })
}

// ---------------------------------------------------------------------------
// Schwarzschild Minkowski-type inequalities

fn eval_schwarz(
    st: &Spacetime,
    surf: &SurfaceSpec,
    grid: &Grid,
    f: &Weight,
    k_ord: usize,
    family: Family,
) -> Result<(Contribution, f64, f64)> {
    let n = st.n() as f64;
    let g = gauge_frames(st, surf, grid)?;
    let wf = sample_weight(grid, &g.ff, f)?;
    if let Some(&bad) = wf.f.vals.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Hypothesis(format!("weight must be positive on the grid, got {bad}")));
    }
    let coef = 1.0 / (binom_f(st.n() - 1, k_ord - 1) * (n - k_ord as f64));

    let count = grid.node_count();
    let mut t1 = Vec::with_capacity(count);
    let mut t2 = Vec::with_capacity(count);
    let mut t3 = Vec::with_capacity(count);
    let mut tfield = Vec::with_capacity(count);
    for k in 0..count {
        let core = &g.ff.frames[k].core;
        let x = &core.x;
        let l = &g.gf.l.vals[k];
        let lbar = &g.gf.lbar.vals[k];
        let fv = wf.f.vals[k];
        let ct = CurvTuple::dim2(core.sigma, g.gf.chi.vals[k], g.gf.chibar.vals[k]);
        let mc = mixed_curvatures(&ct)?;
        let qll = st.q_form(x, l, lbar);
        match family {
            Family::Chi => {
                let (t_up, _) = newton_tensors(&ct, k_ord, 0)?;
                t1.push(fv * mc.h(k_ord - 1, 0) * st.inner(x, l, &E_T));
                t2.push(0.5 * fv * mc.h(k_ord, 0) * qll);
                let tg = tensor_grad4(core, &t_up, wf.df.vals[k]);
                t3.push(-coef * st.q_form(x, &tg, l));
                tfield.push([[t_up[(0, 0)], t_up[(0, 1)]], [t_up[(1, 0)], t_up[(1, 1)]]]);
            }
            Family::Chibar => {
                let (_, tbar_up) = newton_tensors(&ct, 0, k_ord)?;
                t1.push(fv * mc.h(0, k_ord - 1) * st.inner(x, lbar, &E_T));
                t2.push(-0.5 * fv * mc.h(0, k_ord) * qll);
                let tg = tensor_grad4(core, &tbar_up, wf.df.vals[k]);
                t3.push(-coef * st.q_form(x, &tg, lbar));
                tfield.push([
                    [tbar_up[(0, 0)], tbar_up[(0, 1)]],
                    [tbar_up[(1, 0)], tbar_up[(1, 1)]],
                ]);
            }
        }
    }

    // Divergence-sign field (∇_a T^{ab}) Q(W, e_b): ≤ 0 nodewise when the
    // flags hold.
    let tfield = SurfaceField::from_vals(grid, tfield)?;
    let sigma_f = g.ff.sigma_field(grid);
    let sigma_inv_f = g.ff.sigma_inv_field(grid);
    let divt = grid.covariant_divergence(&tfield, &sigma_f, &sigma_inv_f)?;
    let mut div_sign_max = f64::NEG_INFINITY;
    let mut div_abs_max = 0.0_f64;
    for k in 0..count {
        let core = &g.ff.frames[k].core;
        let w = match family {
            Family::Chi => &g.gf.l.vals[k],
            Family::Chibar => &g.gf.lbar.vals[k],
        };
        let mut dotv = 0.0;
        for b in 0..2 {
            dotv += divt.vals[k][b] * st.q_form(&core.x, w, &core.tang[b]);
        }
        div_sign_max = div_sign_max.max(dotv);
        div_abs_max = div_abs_max.max(dotv.abs());
    }

    let c = integrate_parts(grid, &g.ff.dens, &["time", "q_llbar", "newton_gradient"], vec![
        t1, t2, t3,
    ])?
    .detail("div_sign_max", div_sign_max)
    .detail("div_abs_max", div_abs_max)
    .detail("gauge_residual", g.residual)
    .detail("zeta_sup_post", g.zeta_sup);
    Ok((c, g.residual, g.threshold))
}

/// Left-hand side of the Schwarzschild Minkowski-type inequality of order k
/// for the chosen family, with the divergence-sign diagnostic field.
///
/// Nonnegative when the hypothesis flags hold; reduces to an exact identity
/// for m = 0, k = 1.
pub fn schwarzschild_mink_inequality(
    st: &Spacetime,
    surf: &SurfaceSpec,
    grid: &Grid,
    f: &Weight,
    k_ord: usize,
    family: Family,
    tol: &ToleranceSet,
) -> Result<IdentityReport> {
    if !matches!(st.kind(), Kind::Schwarzschild { .. } | Kind::Minkowski) {
        return Err(Error::Hypothesis(format!(
            "inequality targets the Schwarzschild family; got {}",
            st.name()
        )));
    }
    let d = st.n() - 1;
    if k_ord == 0 || k_ord > d {
        return Err(Error::InvalidArgument(format!("order {k_ord} out of range 1..={d}")));
    }
    let flags = schwarzschild_hypotheses(st, surf, grid)?;
    let family_ok = match family {
        Family::Chi => flags.chi_family_ok(k_ord),
        Family::Chibar => flags.chibar_family_ok(k_ord),
    };
    let (base, residual, threshold) = eval_schwarz(st, surf, grid, f, k_ord, family)?;
    let (fine, _, _) = eval_schwarz(st, surf, &grid.refine(REFINE_FACTOR)?, f, k_ord, family)?;
    let verdict = if !family_ok || residual > threshold {
        Verdict::HypothesesFailed
    } else {
        positivity_verdict(base.value, base.scale, tol)
    };
    let base = base
        .detail("flag_q_llbar", if flags.q_llbar.ok { 1.0 } else { 0.0 })
        .detail("flag_chi_positive", if flags.chi_positive.ok { 1.0 } else { 0.0 })
        .detail(
            "flag_chibar_neg_positive",
            if flags.chibar_neg_positive.ok { 1.0 } else { 0.0 },
        )
        .detail("flag_family_ok", if family_ok { 1.0 } else { 0.0 });
    let name = format!("schwarzschild_mink_{}_{}", family.as_str(), k_ord);
    Ok(report(&name, base, fine, verdict, vec![
        "f smooth and positive (checked on grid nodes only)".to_string(),
    ]))
}

// ---------------------------------------------------------------------------
// higher-order Alexandrov criteria

fn eval_higher_alex(
    st: &Spacetime,
    surf: &SurfaceSpec,
    grid: &Grid,
    k_ord: usize,
    family: Family,
) -> Result<(Contribution, f64, NodeCheck, NodeCheck)> {
    let g = gauge_frames(st, surf, grid)?;
    let branch = match family {
        Family::Chi => Branch::Outgoing,
        Family::Chibar => Branch::Incoming,
    };
    let count = grid.node_count();

    let mut cone = NodeCheck::new();
    let mut sign = NodeCheck::new();
    let mut pvals = Vec::with_capacity(count);
    let mut deficit = 0.0_f64;
    for (i, j) in grid.nodes() {
        let k = grid.idx(i, j);
        let fd = &g.ff.frames[k];
        let core = &fd.core;
        let ct = CurvTuple::dim2(core.sigma, g.gf.chi.vals[k], g.gf.chibar.vals[k]);
        let mc = mixed_curvatures(&ct)?;
        let (p, member, positive) = match family {
            Family::Chi => {
                let p = mc.p(k_ord, 0);
                let m = gamma_cone_member(&dmat2(&core.sigma), &dmat2(&g.gf.chi.vals[k]), k_ord)?;
                (p, m, p > 0.0)
            }
            Family::Chibar => {
                let p = mc.p(0, k_ord);
                let m = gamma_cone_member(
                    &dmat2(&core.sigma),
                    &(-dmat2(&g.gf.chibar.vals[k])),
                    k_ord,
                )?;
                let pos = if k_ord % 2 == 0 { p > 0.0 } else { p < 0.0 };
                (p, m, pos)
            }
        };
        if !member {
            cone.fail(i, j);
        }
        if !positive {
            sign.fail(i, j);
        }
        pvals.push(p);
        deficit = deficit.max(shear_deficit(fd, branch)?);
    }

    let pfield = SurfaceField::from_vals(grid, pvals)?;
    let dp = grid.partials(&pfield, Parity::Even)?;
    let mut vals = Vec::with_capacity(count);
    for k in 0..count {
        let core = &g.ff.frames[k].core;
        let x = &core.x;
        let ct = CurvTuple::dim2(core.sigma, g.gf.chi.vals[k], g.gf.chibar.vals[k]);
        let (t_up, tbar_up) = match family {
            Family::Chi => newton_tensors(&ct, k_ord, 0)?,
            Family::Chibar => newton_tensors(&ct, 0, k_ord)?,
        };
        let p = pfield.vals[k];
        let v = match family {
            Family::Chi => {
                let tg = tensor_grad4(core, &t_up, dp.vals[k]);
                st.q_form(x, &tg, &g.gf.l.vals[k]) / (p * p)
            }
            Family::Chibar => {
                let tg = tensor_grad4(core, &tbar_up, dp.vals[k]);
                st.q_form(x, &tg, &g.gf.lbar.vals[k]) / (p * p)
            }
        };
        vals.push(v);
    }
    let vf = SurfaceField::from_vals(grid, vals.clone())?;
    let af = SurfaceField::from_vals(grid, vals.iter().map(|v| v.abs()).collect())?;
    let value = grid.integrate(&vf, &g.ff.dens)?;
    let scale = grid.integrate(&af, &g.ff.dens)?;
    let c = Contribution {
        value,
        scale,
        terms: vec![("criterion".to_string(), value)],
        details: vec![("gauge_residual".to_string(), g.residual)],
    };
    Ok((c, deficit, cone, sign))
}

/// Higher-order shear-free criterion of order k for the chosen family
/// (χ: outgoing/L, χ̄: incoming/L̄), classified against the matching
/// Heintze–Karcher equality and pointwise shear deficit.
pub fn higher_alexandrov_criterion(
    st: &Spacetime,
    surf: &SurfaceSpec,
    grid: &Grid,
    k_ord: usize,
    family: Family,
    tol: &ToleranceSet,
) -> Result<IdentityReport> {
    let d = st.n() - 1;
    if k_ord == 0 || k_ord > d {
        return Err(Error::InvalidArgument(format!("order {k_ord} out of range 1..={d}")));
    }
    let branch = match family {
        Family::Chi => Branch::Outgoing,
        Family::Chibar => Branch::Incoming,
    };
    let (mut base, deficit, cone, sign) = eval_higher_alex(st, surf, grid, k_ord, family)?;
    let (fine, _, _, _) = eval_higher_alex(st, surf, &grid.refine(REFINE_FACTOR)?, k_ord, family)?;
    let hk = eval_hk(st, surf, grid, branch)?;
    let hk_equal = hk.value.abs() <= tol.equality_detect * hk.scale;
    base = base
        .detail("hk_value", hk.value)
        .detail("shear_deficit_sup", deficit)
        .detail("cone_failures", cone.failures as f64)
        .detail("sign_failures", sign.failures as f64);
    if let Some((i, j)) = cone.first_failure {
        base = base.detail(&format!("cone_first_fail_i{i}_j{j}"), 1.0);
    }
    if let Some((i, j)) = sign.first_failure {
        base = base.detail(&format!("sign_first_fail_i{i}_j{j}"), 1.0);
    }

    let margin = tol.inequality_margin * base.scale + f64::EPSILON * hk.scale;
    let verdict = if !cone.ok || !sign.ok {
        Verdict::HypothesesFailed
    } else if base.value < -margin {
        Verdict::Violated
    } else if base.value.abs() <= margin && hk_equal && deficit <= tol.equality_detect {
        Verdict::IdentityOk
    } else if base.value > 10.0 * margin {
        Verdict::StrictPositive
    } else {
        Verdict::InequalityOk
    };
    let assumed = vec![match branch {
        Branch::Outgoing => {
            "future outgoing null embedded (not numerically verifiable)".to_string()
        }
        Branch::Incoming => "past incoming null embedded (not numerically verifiable)".to_string(),
    }];
    let name = format!("higher_alexandrov_{}_{}", family.as_str(), k_ord);
    Ok(report(&name, base, fine, verdict, assumed))
}

// ---------------------------------------------------------------------------
// mixed-order criterion with the curvature-ratio gap field

fn eval_mixed(
    st: &Spacetime,
    surf: &SurfaceSpec,
    grid: &Grid,
    r: usize,
    s: usize,
) -> Result<(Contribution, f64, NodeCheck, NodeCheck, Vec<(usize, usize, f64)>)> {
    let n = st.n() as f64;
    let g = gauge_frames(st, surf, grid)?;
    let count = grid.node_count();

    let mut cone = NodeCheck::new();
    let mut quad = NodeCheck::new();
    let mut quad_nodes: Vec<(usize, usize, f64)> = Vec::new();
    let mut hvals = Vec::with_capacity(count);
    let mut gap_min = f64::INFINITY;
    for (i, j) in grid.nodes() {
        let k = grid.idx(i, j);
        let core = &g.ff.frames[k].core;
        let chi = g.gf.chi.vals[k];
        let chibar = g.gf.chibar.vals[k];
        let ct = CurvTuple::dim2(core.sigma, chi, chibar);
        let mc = mixed_curvatures(&ct)?;
        hvals.push(mc.h(r, s));

        let sig_dm = dmat2(&core.sigma);
        let chi_dm = dmat2(&chi);
        let ncb_dm = -dmat2(&chibar);
        if !(gamma_cone_member(&sig_dm, &chi_dm, r + s)?
            && gamma_cone_member(&sig_dm, &ncb_dm, r + s)?)
        {
            cone.fail(i, j);
        }

        // Quadratic hypothesis, stated for the positivized pair (χ, −χ̄):
        // tr(−χ̄ · T̄_{0,s} · χ · σ^{-1}) ≥ (n−1) H_{0,s} H_{1,0}.
        let ct_pos = CurvTuple::dim2(core.sigma, chi, {
            let mut m = [[0.0; 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    m[a][b] = -chibar[a][b];
                }
            }
            m
        });
        let mc_pos = mixed_curvatures(&ct_pos)?;
        let (_, tbar_pos) = newton_tensors(&ct_pos, 0, s)?;
        let si = &core.sigma_inv;
        let mut lhs = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for d2 in 0..2 {
                        lhs += -chibar[a][b] * tbar_pos[(b, c)] * chi[c][d2] * si[d2][a];
                    }
                }
            }
        }
        let rhs = (n - 1.0) * mc_pos.h(0, s) * mc_pos.h(1, 0);
        if lhs < rhs - sign_slack(lhs.abs() + rhs.abs()) {
            quad.fail(i, j);
            if quad_nodes.len() < 8 {
                quad_nodes.push((i, j, rhs - lhs));
            }
        }

        // Gap field with completely normalized curvatures
        // Ĥ_{r,s} = P_{r,s} / (C(n−1, r+s) C(r+s, r)): Ĥ_{r−1,s}/Ĥ_{r,s} − (n−1)/tr χ.
        let tr_chi = trace(&core.sigma_inv, &chi);
        let hhat = |rr: usize, ss: usize| -> f64 {
            mc.p(rr, ss) / (binom_f(st.n() - 1, rr + ss) * binom_f(rr + ss, rr))
        };
        let gap = hhat(r - 1, s) / hhat(r, s) - (n - 1.0) / tr_chi;
        if gap.is_finite() {
            gap_min = gap_min.min(gap);
        } else {
            gap_min = f64::NEG_INFINITY;
        }
    }

    let hfield = SurfaceField::from_vals(grid, hvals)?;
    let dh = grid.partials(&hfield, Parity::Even)?;
    let mut vals = Vec::with_capacity(count);
    for k in 0..count {
        let core = &g.ff.frames[k].core;
        let ct = CurvTuple::dim2(core.sigma, g.gf.chi.vals[k], g.gf.chibar.vals[k]);
        let (t_up, _) = newton_tensors(&ct, r, s)?;
        let tg = tensor_grad4(core, &t_up, dh.vals[k]);
        let h = hfield.vals[k];
        vals.push(st.q_form(&core.x, &tg, &g.gf.l.vals[k]) / (h * h));
    }
    let vf = SurfaceField::from_vals(grid, vals.clone())?;
    let af = SurfaceField::from_vals(grid, vals.iter().map(|v| v.abs()).collect())?;
    let value = grid.integrate(&vf, &g.ff.dens)?;
    let scale = grid.integrate(&af, &g.ff.dens)?;

    // Codazzi diagnostic: when χ = α σ pointwise, α must be constant.
    let mut alpha_min = f64::INFINITY;
    let mut alpha_max = f64::NEG_INFINITY;
    let mut umbilic_sup = 0.0_f64;
    for k in 0..count {
        let fd = &g.ff.frames[k];
        umbilic_sup = umbilic_sup.max(shear_deficit(fd, Branch::Outgoing)?);
        let a = trace(&fd.core.sigma_inv, &g.gf.chi.vals[k]) / 2.0;
        alpha_min = alpha_min.min(a);
        alpha_max = alpha_max.max(a);
    }
    let mut c = Contribution {
        value,
        scale,
        terms: vec![("criterion".to_string(), value)],
        details: vec![
            ("gauge_residual".to_string(), g.residual),
            ("gap_min".to_string(), gap_min),
        ],
    };
    if umbilic_sup <= 1e-5 {
        let denom = alpha_min.abs().max(alpha_max.abs()).max(f64::MIN_POSITIVE);
        c = c.detail("codazzi_alpha_spread", (alpha_max - alpha_min) / denom);
    }
    Ok((c, gap_min, cone, quad, quad_nodes))
}

/// Mixed-order criterion for r, s ≥ 1 in constant curvature: the
/// (cond rs) integral, the nodewise curvature-ratio gap (≥ 0 under the
/// hypotheses, 0 exactly at round spheres), and the quadratic hypothesis,
/// combined into a sphere-of-symmetry classification.
pub fn mixed_rs_criterion(
    st: &Spacetime,
    surf: &SurfaceSpec,
    grid: &Grid,
    r: usize,
    s: usize,
    tol: &ToleranceSet,
) -> Result<IdentityReport> {
    if st.constant_curvature().is_none() {
        return Err(Error::Hypothesis(format!(
            "mixed-order criterion needs constant curvature; {} is not",
            st.name()
        )));
    }
    let d = st.n() - 1;
    if r == 0 || s == 0 || r + s > d {
        return Err(Error::InvalidArgument(format!(
            "(r, s) = ({r}, {s}) out of range: r, s ≥ 1 and r+s ≤ {d}"
        )));
    }
    let (mut base, gap_min, cone, quad, quad_nodes) = eval_mixed(st, surf, grid, r, s)?;
    let (fine, _, _, _, _) = eval_mixed(st, surf, &grid.refine(REFINE_FACTOR)?, r, s)?;
    let hk_in = eval_hk(st, surf, grid, Branch::Incoming)?;
    let hk_out = eval_hk(st, surf, grid, Branch::Outgoing)?;
    let hk_equal = hk_in.value.abs() <= tol.equality_detect * hk_in.scale
        && hk_out.value.abs() <= tol.equality_detect * hk_out.scale;
    base = base
        .detail("cone_failures", cone.failures as f64)
        .detail("quad_failures", quad.failures as f64)
        .detail("hk_incoming", hk_in.value)
        .detail("hk_outgoing", hk_out.value);
    for (i, j, viol) in &quad_nodes {
        base = base.detail(&format!("quad_fail_i{i}_j{j}"), *viol);
    }

    let margin =
        tol.inequality_margin * base.scale + f64::EPSILON * (hk_in.scale + hk_out.scale);
    let verdict = if !cone.ok || !quad.ok {
        Verdict::HypothesesFailed
    } else if base.value < -margin {
        Verdict::Violated
    } else if base.value.abs() <= margin && gap_min >= -tol.equality_detect && hk_equal {
        Verdict::IdentityOk
    } else if base.value > 10.0 * margin {
        Verdict::StrictPositive
    } else {
        Verdict::InequalityOk
    };
    let name = format!("mixed_rs_{r}_{s}");
    Ok(report(&name, base, fine, verdict, vec![
        "both null embeddings as in the underlying theorems (not verifiable)".to_string(),
    ]))
}
