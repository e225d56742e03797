//! Pointwise symmetric-function algebra for pairs of shape operators.
//!
//! The mixed higher-order mean curvatures P_{r,s} are defined through the
//! bivariate expansion
//!
//! ```text
//! det_σ(σ + yχ + ȳχ̄) = det(I + yA + ȳB) = Σ_{r,s} ((r+s)!/(r!s!)) y^r ȳ^s P_{r,s}
//! ```
//!
//! with A = σ^{-1}χ, B = σ^{-1}χ̄; the determinant is normalized by det σ so
//! that P_{0,0} = 1 and every P is basis-invariant.  The mixed Newton
//! tensors are the entrywise derivatives T^{ab}_{r,s} = ∂P_{r,s}/∂χ_{ab}
//! (and T̄ w.r.t. χ̄), extracted from the adjugate of the same polynomial
//! matrix, so differentiation is exact polynomial algebra, not finite
//! differencing.
//!
//! Everything is generic over the coefficient ring: `f64` in production,
//! exact rationals in tests.

use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Coefficient ring for the polynomial expansion.
pub trait Coeff: Clone + PartialEq + std::fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Embeds p/q (q > 0) — used for the multinomial normalizations.
    fn from_ratio(p: i64, q: i64) -> Self;
}

impl Coeff for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn from_ratio(p: i64, q: i64) -> Self {
        p as f64 / q as f64
    }
}

/// Dense bivariate polynomial in (y, ȳ), coefficient of y^r ȳ^s at
/// `c[r*(deg+1)+s]`; total degree capped at `deg`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly2<C> {
    deg: usize,
    c: Vec<C>,
}

impl<C: Coeff> Poly2<C> {
    fn zero(deg: usize) -> Self {
        Poly2 { deg, c: vec![C::zero(); (deg + 1) * (deg + 1)] }
    }

    /// c0 + cy·y + cyb·ȳ.
    fn linear(deg: usize, c0: C, cy: C, cyb: C) -> Self {
        let mut p = Self::zero(deg);
        p.c[0] = c0;
        if deg >= 1 {
            p.c[deg + 1] = cy;
            p.c[1] = cyb;
        }
        p
    }

    pub fn coeff(&self, r: usize, s: usize) -> C {
        if r + s > self.deg {
            C::zero()
        } else {
            self.c[r * (self.deg + 1) + s].clone()
        }
    }

    fn add_assign(&mut self, o: &Self) {
        for (a, b) in self.c.iter_mut().zip(&o.c) {
            *a = a.add(b);
        }
    }

    fn mul(&self, o: &Self) -> Self {
        let d = self.deg;
        let mut out = Self::zero(d);
        for r1 in 0..=d {
            for s1 in 0..=(d - r1) {
                let a = &self.c[r1 * (d + 1) + s1];
                if *a == C::zero() {
                    continue;
                }
                for r2 in 0..=(d - r1 - s1) {
                    for s2 in 0..=(d - r1 - s1 - r2) {
                        let b = &o.c[r2 * (d + 1) + s2];
                        if *b == C::zero() {
                            continue;
                        }
                        let k = (r1 + r2) * (d + 1) + (s1 + s2);
                        out.c[k] = out.c[k].add(&a.mul(b));
                    }
                }
            }
        }
        out
    }

    fn scale(&self, f: &C) -> Self {
        Poly2 { deg: self.deg, c: self.c.iter().map(|x| x.mul(f)).collect() }
    }
}

/// det of a square matrix of polynomials by Laplace expansion with
/// subset-sum memoization: O(2^d · d) polynomial multiplications.
fn det_poly<C: Coeff>(m: &[Vec<Poly2<C>>], deg: usize) -> Poly2<C> {
    let d = m.len();
    if d == 0 {
        let mut one = Poly2::zero(deg);
        one.c[0] = C::one();
        return one;
    }
    // dp[mask] = determinant of the first popcount(mask) rows restricted to
    // the column set `mask`.
    let mut dp: Vec<Option<Poly2<C>>> = vec![None; 1 << d];
    dp[0] = Some({
        let mut one = Poly2::zero(deg);
        one.c[0] = C::one();
        one
    });
    for mask in 1_usize..(1 << d) {
        let row = (mask as u32).count_ones() as usize - 1;
        let mut acc = Poly2::zero(deg);
        // Cofactor sign (−1)^{row+j}, j = position of the column within mask.
        let mut sign_pos = row % 2 == 0;
        for col in 0..d {
            if mask & (1 << col) == 0 {
                continue;
            }
            let sub = dp[mask & !(1 << col)].as_ref().unwrap();
            let term = m[row][col].mul(sub);
            if sign_pos {
                acc.add_assign(&term);
            } else {
                acc.add_assign(&term.scale(&C::one().neg()));
            }
            sign_pos = !sign_pos;
        }
        dp[mask] = Some(acc);
    }
    dp[(1 << d) - 1].take().unwrap()
}

fn binom(n: usize, k: usize) -> i64 {
    if k > n {
        return 0;
    }
    let mut r: i64 = 1;
    for i in 0..k.min(n - k) {
        r = r * (n - i) as i64 / (i + 1) as i64;
    }
    r
}

/// M = I + yA + ȳB as a polynomial matrix.
fn poly_matrix<C: Coeff>(a: &[Vec<C>], b: &[Vec<C>], deg: usize) -> Vec<Vec<Poly2<C>>> {
    let d = a.len();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let c0 = if i == j { C::one() } else { C::zero() };
                    Poly2::linear(deg, c0, a[i][j].clone(), b[i][j].clone())
                })
                .collect()
        })
        .collect()
}

/// Table of P_{r,s} (0 ≤ r+s ≤ d) from A = σ^{-1}χ, B = σ^{-1}χ̄, in any
/// coefficient ring.  `table[r][s]`.
pub fn p_table_generic<C: Coeff>(a: &[Vec<C>], b: &[Vec<C>]) -> Vec<Vec<C>> {
    let d = a.len();
    let det = det_poly(&poly_matrix(a, b, d), d);
    let mut table = vec![vec![C::zero(); d + 1]; d + 1];
    for r in 0..=d {
        for s in 0..=(d - r) {
            // P_{r,s} = (r!s!/(r+s)!) · [y^r ȳ^s] = coeff / C(r+s, r).
            table[r][s] = det.coeff(r, s).mul(&C::from_ratio(1, binom(r + s, r)));
        }
    }
    table
}

/// Newton tensors in a generic ring, for σ = identity basis data (the f64
/// front end folds σ^{-1} in before and after).  Returns
/// (T^{ab}_{r,s}, T̄^{ab}_{r,s}): derivatives of P_{r,s} w.r.t. the entries
/// of χ and χ̄ treated as independent (so the sensitivity of a symmetric
/// off-diagonal pair is T^{ab} + T^{ba}).
pub fn newton_generic<C: Coeff>(
    a: &[Vec<C>],
    b: &[Vec<C>],
    r: usize,
    s: usize,
) -> (Vec<Vec<C>>, Vec<Vec<C>>) {
    let d = a.len();
    let m = poly_matrix(a, b, d);
    // adj(M)_{qp} = (−1)^{p+q} · minor_{pq}; ∂det/∂M_{pq} = adj(M)_{qp}.
    let norm = C::from_ratio(1, binom(r + s, r));
    let mut t = vec![vec![C::zero(); d]; d];
    let mut tbar = vec![vec![C::zero(); d]; d];
    for p in 0..d {
        for q in 0..d {
            let sub: Vec<Vec<Poly2<C>>> = (0..d)
                .filter(|&i| i != p)
                .map(|i| {
                    (0..d).filter(|&j| j != q).map(|j| m[i][j].clone()).collect::<Vec<_>>()
                })
                .collect();
            let mut minor = det_poly(&sub, d);
            if (p + q) % 2 == 1 {
                minor = minor.scale(&C::one().neg());
            }
            // ∂M_{pq}/∂χ_{pq} = y and /∂χ̄_{pq} = ȳ, so T picks the
            // y^{r−1}ȳ^s coefficient of the cofactor and T̄ the y^r ȳ^{s−1}.
            if r >= 1 {
                t[p][q] = minor.coeff(r - 1, s).mul(&norm);
            }
            if s >= 1 {
                tbar[p][q] = minor.coeff(r, s - 1).mul(&norm);
            }
        }
    }
    (t, tbar)
}

/// σ, χ, χ̄ in a common basis; the inputs to all algebra entry points.
#[derive(Clone, Debug)]
pub struct CurvTuple {
    pub sigma: DMatrix<f64>,
    pub chi: DMatrix<f64>,
    pub chibar: DMatrix<f64>,
}

impl CurvTuple {
    pub fn new(sigma: DMatrix<f64>, chi: DMatrix<f64>, chibar: DMatrix<f64>) -> Result<Self> {
        let d = sigma.nrows();
        if d == 0 || d > 8 {
            return Err(Error::InvalidArgument(format!("dimension {d} out of range 1..=8")));
        }
        for (name, m) in [("sigma", &sigma), ("chi", &chi), ("chibar", &chibar)] {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::InvalidArgument(format!("{name} is not {d}×{d}")));
            }
            let scale = 1.0 + m.amax();
            if (m - m.transpose()).amax() > 1e-10 * scale {
                return Err(Error::InvalidArgument(format!("{name} is not symmetric")));
            }
        }
        // Symmetrize exactly so downstream algebra sees the invariant.
        let s = |m: DMatrix<f64>| (&m + m.transpose()) * 0.5;
        Ok(CurvTuple { sigma: s(sigma), chi: s(chi), chibar: s(chibar) })
    }

    /// Convenience constructor for the grid case d = 2.
    pub fn dim2(sigma: [[f64; 2]; 2], chi: [[f64; 2]; 2], chibar: [[f64; 2]; 2]) -> Self {
        let m = |a: [[f64; 2]; 2]| DMatrix::from_fn(2, 2, |i, j| a[i][j]);
        CurvTuple { sigma: m(sigma), chi: m(chi), chibar: m(chibar) }
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    fn sigma_inv(&self) -> Result<DMatrix<f64>> {
        self.sigma
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("sigma is singular".into()))
    }
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Tables P_{r,s} and H_{r,s} = P_{r,s}/C(d, r+s), 0 ≤ r+s ≤ d.
#[derive(Clone, Debug)]
pub struct MixedCurvatures {
    pub dim: usize,
    pub p: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
}

impl MixedCurvatures {
    pub fn p(&self, r: usize, s: usize) -> f64 {
        self.p[r][s]
    }
    pub fn h(&self, r: usize, s: usize) -> f64 {
        self.h[r][s]
    }
}

pub fn mixed_curvatures(ct: &CurvTuple) -> Result<MixedCurvatures> {
    let d = ct.dim();
    let si = ct.sigma_inv()?;
    let a = to_rows(&(&si * &ct.chi));
    let b = to_rows(&(&si * &ct.chibar));
    let p = p_table_generic(&a, &b);
    let mut h = vec![vec![0.0; d + 1]; d + 1];
    for r in 0..=d {
        for s in 0..=(d - r) {
            h[r][s] = p[r][s] / binom(d, r + s) as f64;
        }
    }
    Ok(MixedCurvatures { dim: d, p, h })
}

/// Mixed Newton tensors (T^{ab}_{r,s}, T̄^{ab}_{r,s}) with both indices up.
pub fn newton_tensors(ct: &CurvTuple, r: usize, s: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let d = ct.dim();
    if r + s > d || r + s == 0 {
        return Err(Error::InvalidArgument(format!(
            "(r, s) = ({r}, {s}) out of range for dimension {d}"
        )));
    }
    let si = ct.sigma_inv()?;
    let a = to_rows(&(&si * &ct.chi));
    let b = to_rows(&(&si * &ct.chibar));
    // With M = I + y σ^{-1}χ + ȳ σ^{-1}χ̄: ∂M_{pq}/∂χ_{ab} = y (σ^{-1})_{pa} δ_{qb},
    // so ∂det/∂χ_{ab} = y Σ_p adj(M)_{bp} (σ^{-1})_{pa} = y (adj(M) σ^{-1})_{ba}:
    // the entrywise derivative w.r.t. the identity-basis A, chained through
    // σ^{-1} on the left — equivalently σ^{-1}·(∂det/∂A)ᵀ-indexed.  Both
    // resulting index slots are contravariant.
    let (ta, tb) = newton_generic(&a, &b, r, s);
    let da = DMatrix::from_fn(d, d, |i, j| ta[i][j]);
    let db = DMatrix::from_fn(d, d, |i, j| tb[i][j]);
    // ∂P/∂χ_{ab} = Σ_p (σ^{-1})_{ap} ∂P/∂A_{pb}, with the derivative matrix
    // indexed [p][q] = ∂/∂A_{pq}.
    Ok((&si * da, &si * db))
}

/// Elementary symmetric functions e_1..e_d of the σ-relative eigenvalues of
/// a symmetric matrix.
fn sigma_relative_elementary(sigma: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let d = sigma.nrows();
    let chol = nalgebra::Cholesky::new(sigma.clone())
        .ok_or_else(|| Error::Degenerate("sigma is not positive definite".into()))?;
    let l = chol.l();
    // L^{-1} M L^{-T}, symmetric with the same σ-relative spectrum.
    let mut x = m.clone();
    l.solve_lower_triangular_mut(&mut x);
    let mut xt = x.transpose();
    l.solve_lower_triangular_mut(&mut xt);
    let sym = (xt.transpose() + &xt) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    let mut e = vec![0.0; d + 1];
    e[0] = 1.0;
    for &lam in eig.iter() {
        for k in (1..=d).rev() {
            e[k] += lam * e[k - 1];
        }
    }
    Ok(e[1..].to_vec())
}

/// Strict Γ_k cone membership: e_1 > 0, …, e_k > 0 of the σ-relative
/// eigenvalues, with zero tolerance (the boundary is excluded).
pub fn gamma_cone_member(sigma: &DMatrix<f64>, m: &DMatrix<f64>, k: usize) -> Result<bool> {
    let e = sigma_relative_elementary(sigma, m)?;
    if k == 0 || k > e.len() {
        return Err(Error::InvalidArgument(format!("k = {k} out of range 1..={}", e.len())));
    }
    Ok(e[..k].iter().all(|&v| v > 0.0))
}

/// H_{r−1,s}² − H_{r,s}H_{r−2,s} with the cone precondition reported, not
/// enforced: the gap is returned either way for diagnostics.
///
/// `hypothesis_met` asks for both forms in Γ_{r+s} — the Gårding cone of
/// the degree-(r+s) expansion.  The weaker Γ_{r+s−1} is not sufficient for
/// mixed orders: see `maclaurin_gap_needs_full_cone` for an explicit pair
/// in Γ_3 \ Γ_4 with all three H's positive and a gap of −0.239.
#[derive(Clone, Copy, Debug)]
pub struct NewtonMaclaurinGap {
    pub gap: f64,
    pub hypothesis_met: bool,
}

pub fn newton_maclaurin_gap(ct: &CurvTuple, r: usize, s: usize) -> Result<NewtonMaclaurinGap> {
    let d = ct.dim();
    if r < 2 || r + s > d {
        return Err(Error::InvalidArgument(format!(
            "(r, s) = ({r}, {s}) needs r ≥ 2 and r+s ≤ {d}"
        )));
    }
    let mc = mixed_curvatures(ct)?;
    let gap = mc.h(r - 1, s) * mc.h(r - 1, s) - mc.h(r, s) * mc.h(r - 2, s);
    let k = r + s;
    let hypothesis_met = gamma_cone_member(&ct.sigma, &ct.chi, k)?
        && gamma_cone_member(&ct.sigma, &ct.chibar, k)?;
    Ok(NewtonMaclaurinGap { gap, hypothesis_met })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num::rational::Ratio;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    impl Coeff for Ratio<i64> {
        fn zero() -> Self {
            Ratio::new(0, 1)
        }
        fn one() -> Self {
            Ratio::new(1, 1)
        }
        fn add(&self, o: &Self) -> Self {
            self + o
        }
        fn sub(&self, o: &Self) -> Self {
            self - o
        }
        fn mul(&self, o: &Self) -> Self {
            self * o
        }
        fn neg(&self) -> Self {
            -self
        }
        fn from_ratio(p: i64, q: i64) -> Self {
            Ratio::new(p, q)
        }
    }

    fn dmat(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    fn eye(d: usize) -> DMatrix<f64> {
        DMatrix::identity(d, d)
    }

    fn rand_sym(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let v = rng.random_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    fn rand_spd(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
        let g = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        &g * g.transpose() + eye(d) * (d as f64)
    }

    #[test]
    fn hand_expansion_dim2_diagonal() {
        let (a, b, c, d) = (0.7, -0.3, 1.1, 0.4);
        let ct = CurvTuple::new(
            eye(2),
            dmat(&[&[a, 0.0], &[0.0, b]]),
            dmat(&[&[c, 0.0], &[0.0, d]]),
        )
        .unwrap();
        let mc = mixed_curvatures(&ct).unwrap();
        assert_abs_diff_eq!(mc.p(0, 0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mc.p(1, 0), a + b, epsilon = 1e-15);
        assert_abs_diff_eq!(mc.p(0, 1), c + d, epsilon = 1e-15);
        assert_abs_diff_eq!(mc.p(2, 0), a * b, epsilon = 1e-15);
        assert_abs_diff_eq!(mc.p(1, 1), (a * d + b * c) / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mc.p(0, 2), c * d, epsilon = 1e-15);
    }

    #[test]
    fn identity_pair_gives_unit_means() {
        for d in 1..=5 {
            let ct = CurvTuple::new(eye(d), eye(d), eye(d)).unwrap();
            let mc = mixed_curvatures(&ct).unwrap();
            for r in 0..=d {
                for s in 0..=(d - r) {
                    assert_abs_diff_eq!(mc.h(r, s), 1.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn p10_is_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in 2..=4 {
            let chi = rand_sym(&mut rng, d);
            let ct = CurvTuple::new(eye(d), chi.clone(), rand_sym(&mut rng, d)).unwrap();
            let mc = mixed_curvatures(&ct).unwrap();
            assert_abs_diff_eq!(mc.p(1, 0), chi.trace(), epsilon = 1e-12);
        }
    }

    #[test]
    fn newton_t10_is_inverse_metric() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sigma = rand_spd(&mut rng, 3);
        let ct = CurvTuple::new(sigma.clone(), rand_sym(&mut rng, 3), rand_sym(&mut rng, 3))
            .unwrap();
        let si = sigma.try_inverse().unwrap();
        let (t10, _) = newton_tensors(&ct, 1, 0).unwrap();
        let (_, tbar01) = newton_tensors(&ct, 0, 1).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(t10[(i, j)], si[(i, j)], epsilon = 1e-10);
                assert_abs_diff_eq!(tbar01[(i, j)], si[(i, j)], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn trace_identities_random_dim3() {
        // σ_{ab}T^{ab}_{r,s} = r(n−(r+s))/(r+s) · P_{r−1,s} with n = d+1, and
        // χ_{ab}T^{ab}_{r,s} = r·P_{r,s} (dually for T̄ and χ̄).
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = 3;
        for _ in 0..50 {
            let sigma = rand_spd(&mut rng, d);
            let chi = rand_sym(&mut rng, d);
            let chibar = rand_sym(&mut rng, d);
            let ct = CurvTuple::new(sigma.clone(), chi.clone(), chibar.clone()).unwrap();
            let mc = mixed_curvatures(&ct).unwrap();
            for r in 0..=d {
                for s in 0..=(d - r) {
                    if r + s == 0 {
                        continue;
                    }
                    let (t, tbar) = newton_tensors(&ct, r, s).unwrap();
                    let tr_sigma = (&sigma * &t).trace();
                    let tr_chi = (&chi * &t).trace();
                    let n = d + 1;
                    if r >= 1 {
                        let want =
                            r as f64 * (n - (r + s)) as f64 / (r + s) as f64 * mc.p(r - 1, s);
                        assert_abs_diff_eq!(tr_sigma, want, epsilon = 1e-10);
                        assert_abs_diff_eq!(tr_chi, r as f64 * mc.p(r, s), epsilon = 1e-10);
                    }
                    if s >= 1 {
                        let tr_sigma_bar = (&sigma * &tbar).trace();
                        let tr_chibar = (&chibar * &tbar).trace();
                        let want =
                            s as f64 * (n - (r + s)) as f64 / (r + s) as f64 * mc.p(r, s - 1);
                        assert_abs_diff_eq!(tr_sigma_bar, want, epsilon = 1e-10);
                        assert_abs_diff_eq!(tr_chibar, s as f64 * mc.p(r, s), epsilon = 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn newton_tensor_matches_central_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let d = 3;
        let sigma = rand_spd(&mut rng, d);
        let chi = rand_sym(&mut rng, d);
        let chibar = rand_sym(&mut rng, d);
        let step = 1e-6;
        let (r, s) = (2, 1);
        let ct = CurvTuple::new(sigma.clone(), chi.clone(), chibar.clone()).unwrap();
        let (t, _) = newton_tensors(&ct, r, s).unwrap();
        // Symmetric bump of the (1,2)+(2,1) pair.
        let mut cp = chi.clone();
        cp[(0, 1)] += step;
        cp[(1, 0)] += step;
        let mut cm = chi.clone();
        cm[(0, 1)] -= step;
        cm[(1, 0)] -= step;
        let pp = mixed_curvatures(&CurvTuple::new(sigma.clone(), cp, chibar.clone()).unwrap())
            .unwrap()
            .p(r, s);
        let pm = mixed_curvatures(&CurvTuple::new(sigma.clone(), cm, chibar).unwrap())
            .unwrap()
            .p(r, s);
        let fd = (pp - pm) / (2.0 * step);
        assert_abs_diff_eq!(fd, t[(0, 1)] + t[(1, 0)], epsilon = 1e-5);
    }

    #[test]
    fn gamma_cone_examples() {
        let diag = |v: &[f64]| DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(v));
        let s3 = eye(3);
        assert!(gamma_cone_member(&s3, &diag(&[1.0, 1.0, 1.0]), 3).unwrap());
        assert!(gamma_cone_member(&s3, &diag(&[2.0, 2.0, -1.0]), 1).unwrap());
        assert!(!gamma_cone_member(&s3, &diag(&[2.0, 2.0, -1.0]), 3).unwrap());
        let s2 = eye(2);
        assert!(gamma_cone_member(&s2, &diag(&[0.0, 1.0]), 1).unwrap());
        assert!(!gamma_cone_member(&s2, &diag(&[0.0, 1.0]), 2).unwrap());
    }

    #[test]
    fn newton_maclaurin_examples() {
        let d = 3;
        let ct = CurvTuple::new(eye(d), eye(d), eye(d)).unwrap();
        let g = newton_maclaurin_gap(&ct, 2, 0).unwrap();
        assert!(g.hypothesis_met);
        assert_abs_diff_eq!(g.gap, 0.0, epsilon = 1e-14);

        let chi = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&[1.0, 2.0, 3.0]));
        let ct = CurvTuple::new(eye(3), chi, eye(3)).unwrap();
        let g = newton_maclaurin_gap(&ct, 2, 0).unwrap();
        assert!(g.hypothesis_met);
        assert_abs_diff_eq!(g.gap, 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn newton_maclaurin_nonnegative_on_cone_samples() {
        // Rejection-sample eigenvalue pairs; every (r, s) with r ≥ 2 whose
        // cone hypothesis holds for both forms counts toward the tally.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut count = 0;
        let mut min_gap = f64::INFINITY;
        while count < 1000 {
            let d = rng.random_range(2..=4_usize);
            let lam: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..2.0)).collect();
            let mu: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..2.0)).collect();
            let diag = |v: &[f64]| {
                DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(v))
            };
            let ct = CurvTuple::new(eye(d), diag(&lam), diag(&mu)).unwrap();
            for r in 2..=d {
                for s in 0..=(d - r) {
                    let g = newton_maclaurin_gap(&ct, r, s).unwrap();
                    if !g.hypothesis_met {
                        continue;
                    }
                    min_gap = min_gap.min(g.gap);
                    count += 1;
                }
            }
        }
        assert!(min_gap >= -1e-12, "min gap {min_gap:.3e}");
        assert!(min_gap.is_finite());
    }

    #[test]
    fn maclaurin_gap_needs_full_cone() {
        // Both spectra lie in Γ_3 but not Γ_4, every H involved is positive,
        // and the (2,2) gap is decisively negative — the inequality genuinely
        // requires the full Γ_{r+s} cone, so the hypothesis flag must reject
        // this pair.
        let lam = [1.9896093789267337, -0.37322252801792394, 1.102645411362438, 1.1682295000433833];
        let mu = [1.874822221639969, 1.9814783262902598, -0.3714266699331335, 1.9547586024015815];
        let diag = |v: &[f64]| DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(v));
        let ct = CurvTuple::new(eye(4), diag(&lam), diag(&mu)).unwrap();
        assert!(gamma_cone_member(&ct.sigma, &ct.chi, 3).unwrap());
        assert!(gamma_cone_member(&ct.sigma, &ct.chibar, 3).unwrap());
        let mc = mixed_curvatures(&ct).unwrap();
        assert!(mc.h(0, 2) > 0.0 && mc.h(1, 2) > 0.0 && mc.h(2, 2) > 0.0);
        let g = newton_maclaurin_gap(&ct, 2, 2).unwrap();
        assert!(!g.hypothesis_met);
        assert!(g.gap < -0.2, "gap {:.3}", g.gap);
    }

    #[test]
    fn basis_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for d in 2..=4 {
            let sigma = rand_spd(&mut rng, d);
            let chi = rand_sym(&mut rng, d);
            let chibar = rand_sym(&mut rng, d);
            let g = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0)) + eye(d) * 2.0;
            let tf = |m: &DMatrix<f64>| g.transpose() * m * &g;
            let mc0 =
                mixed_curvatures(&CurvTuple::new(sigma.clone(), chi.clone(), chibar.clone()).unwrap())
                    .unwrap();
            let mc1 =
                mixed_curvatures(&CurvTuple::new(tf(&sigma), tf(&chi), tf(&chibar)).unwrap())
                    .unwrap();
            for r in 0..=d {
                for s in 0..=(d - r) {
                    assert_abs_diff_eq!(mc0.p(r, s), mc1.p(r, s), epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn swap_symmetry_exact_in_rationals() {
        // P_{r,s}(χ, χ̄) = P_{s,r}(χ̄, χ), exactly, on integer inputs.
        let a: Vec<Vec<Ratio<i64>>> = vec![
            vec![Ratio::new(2, 1), Ratio::new(-1, 1), Ratio::new(0, 1)],
            vec![Ratio::new(-1, 1), Ratio::new(3, 1), Ratio::new(1, 1)],
            vec![Ratio::new(0, 1), Ratio::new(1, 1), Ratio::new(-2, 1)],
        ];
        let b: Vec<Vec<Ratio<i64>>> = vec![
            vec![Ratio::new(1, 1), Ratio::new(1, 1), Ratio::new(2, 1)],
            vec![Ratio::new(1, 1), Ratio::new(0, 1), Ratio::new(-1, 1)],
            vec![Ratio::new(2, 1), Ratio::new(-1, 1), Ratio::new(4, 1)],
        ];
        let pab = p_table_generic(&a, &b);
        let pba = p_table_generic(&b, &a);
        for r in 0..=3 {
            for s in 0..=(3 - r) {
                assert_eq!(pab[r][s], pba[s][r]);
            }
        }
    }

    #[test]
    fn newton_differentiation_exact_in_rationals() {
        // det(I + yA + ȳB) is multilinear in the matrix entries (each entry
        // appears at most once per permutation product), so the exact
        // derivative w.r.t. any single entry equals the step-1 difference
        // quotient — compared with zero tolerance in rational arithmetic.
        let rmat = |rows: &[&[i64]]| -> Vec<Vec<Ratio<i64>>> {
            rows.iter().map(|r| r.iter().map(|&v| Ratio::new(v, 1)).collect()).collect()
        };
        let cases: Vec<(Vec<Vec<Ratio<i64>>>, Vec<Vec<Ratio<i64>>>)> = vec![
            (
                rmat(&[&[1, 2], &[2, -1]]),
                rmat(&[&[0, 1], &[1, 3]]),
            ),
            (
                rmat(&[&[2, -1, 0], &[-1, 3, 1], &[0, 1, -2]]),
                rmat(&[&[1, 1, 2], &[1, 0, -1], &[2, -1, 4]]),
            ),
        ];
        for (a, b) in cases {
            let d = a.len();
            let base = p_table_generic(&a, &b);
            for r in 0..=d {
                for s in 0..=(d - r) {
                    if r + s == 0 {
                        continue;
                    }
                    let (t, tbar) = newton_generic(&a, &b, r, s);
                    for p in 0..d {
                        for q in 0..d {
                            let mut ap = a.clone();
                            ap[p][q] = ap[p][q] + Ratio::new(1, 1);
                            let d1 = p_table_generic(&ap, &b)[r][s] - base[r][s];
                            assert_eq!(d1, t[p][q]);
                            let mut bp = b.clone();
                            bp[p][q] = bp[p][q] + Ratio::new(1, 1);
                            let d2 = p_table_generic(&a, &bp)[r][s] - base[r][s];
                            assert_eq!(d2, tbar[p][q]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn rational_and_float_tables_agree() {
        let ai = [[2_i64, -1, 0], [-1, 3, 1], [0, 1, -2]];
        let bi = [[1_i64, 1, 2], [1, 0, -1], [2, -1, 4]];
        let ar: Vec<Vec<Ratio<i64>>> =
            ai.iter().map(|r| r.iter().map(|&v| Ratio::new(v, 1)).collect()).collect();
        let br: Vec<Vec<Ratio<i64>>> =
            bi.iter().map(|r| r.iter().map(|&v| Ratio::new(v, 1)).collect()).collect();
        let af: Vec<Vec<f64>> =
            ai.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
        let bf: Vec<Vec<f64>> =
            bi.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
        let pr = p_table_generic(&ar, &br);
        let pf = p_table_generic(&af, &bf);
        for r in 0..=3 {
            for s in 0..=(3 - r) {
                let exact = *pr[r][s].numer() as f64 / *pr[r][s].denom() as f64;
                assert_abs_diff_eq!(pf[r][s], exact, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn dim2_round_sphere_values() {
        // χ = σ/2, χ̄ = −σ/2 (radius-2 round sphere in a slice):
        // P_{1,1} = −1/4, H_{0,1} = −1/2, gap H_{0,1}/H_{1,1}-style ratios
        // used by the mixed functionals.
        let sigma = [[4.0, 0.0], [0.0, 4.0 * 0.25]];
        let chi = [[2.0, 0.0], [0.0, 0.5]];
        let chibar = [[-2.0, 0.0], [0.0, -0.5]];
        let ct = CurvTuple::dim2(sigma, chi, chibar);
        let mc = mixed_curvatures(&ct).unwrap();
        assert_abs_diff_eq!(mc.p(1, 0), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(mc.p(0, 1), -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(mc.p(1, 1), -0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(mc.h(0, 1), -0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(mc.p(2, 0), 0.25, epsilon = 1e-14);
    }
}
