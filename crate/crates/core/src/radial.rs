//! Weighted Jacobi Galerkin machinery for radial problems in effective dimension `d`.
//!
//! Basis: `φ_n(r) = (1-r²)^s P_n^{(s, d/2-1)}(2r²-1)`. On this family the
//! fractional Laplacian acts diagonally,
//! `(-Δ)^s φ_n = μ_n P_n(2r²-1)` in the ball with
//! `μ_n = 2^{2s} Γ(1+s+n) Γ(d/2+s+n) / (n! Γ(d/2+n))`,
//! so the stiffness matrix is diagonal in the reduced radial measure. That
//! closed form is treated as untrusted and can be gated against
//! [`crate::quadrature`] at assembly time.
//!
//! Measure convention: both matrices use `∫_0^1 (·) r^{d-1} dr` without the
//! `|S^{d-1}|` factor, so generalized eigenvalues are convention free.

use crate::error::{Error, Result};
use crate::quadrature::{self, OracleBudget};
use crate::special::{
    gauss_jacobi, gauss_legendre, graded_rule, jacobi_all, jacobi_at_one, jacobi_derivs_all,
    jacobi_norm_sq, Rule,
};
use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::LN_2;
use std::sync::Arc;

/// Basis description: effective dimension, order, truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialBasisSpec {
    pub d: usize,
    pub s: f64,
    pub k: usize,
}

impl RadialBasisSpec {
    pub fn new(d: usize, s: f64, k: usize) -> Result<Self> {
        if d < 1 {
            return Err(Error::InvalidParams(format!(
                "effective dimension must be >= 1, got {d}"
            )));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidParams(format!(
                "order s must lie in (0,1), got {s}"
            )));
        }
        if k < 2 {
            return Err(Error::InvalidParams(format!(
                "truncation must be >= 2, got {k}"
            )));
        }
        Ok(Self { d, s, k })
    }

    pub fn alpha(&self) -> f64 {
        self.s
    }

    pub fn beta(&self) -> f64 {
        0.5 * self.d as f64 - 1.0
    }

    pub fn with_truncation(&self, k: usize) -> Self {
        Self { k, ..*self }
    }

    /// `(1-r²)^s`, evaluated as `((1-r)(1+r))^s`.
    pub fn boundary_factor(&self, r: f64) -> f64 {
        if r >= 1.0 {
            0.0
        } else {
            ((1.0 - r) * (1.0 + r)).powf(self.s)
        }
    }

    /// Polynomial parts `P_n(2r²-1)` for all `n < k`.
    pub fn poly_values(&self, r: f64) -> Vec<f64> {
        jacobi_all(self.k - 1, self.alpha(), self.beta(), 2.0 * r * r - 1.0)
    }

    /// `d/dr P_n(2r²-1)` for all `n < k`.
    pub fn poly_derivs(&self, r: f64) -> Vec<f64> {
        jacobi_derivs_all(self.k - 1, self.alpha(), self.beta(), 2.0 * r * r - 1.0)
            .into_iter()
            .map(|v| 4.0 * r * v)
            .collect()
    }

    /// `φ_n(r)`; zero for `r ≥ 1`.
    pub fn eval(&self, n: usize, r: f64) -> Result<f64> {
        if n >= self.k {
            return Err(Error::IndexOutOfRange {
                index: n,
                len: self.k,
            });
        }
        if r >= 1.0 {
            return Ok(0.0);
        }
        Ok(self.boundary_factor(r) * self.poly_values(r)[n])
    }

    /// Eigenvalue of `(-Δ)^s` on the n-th basis function (closed form).
    pub fn closed_form_action(&self, n: usize) -> f64 {
        let (s, h, nf) = (self.s, 0.5 * self.d as f64, n as f64);
        (2.0 * s * LN_2 + ln_gamma(1.0 + s + nf) + ln_gamma(h + s + nf)
            - ln_gamma(nf + 1.0)
            - ln_gamma(h + nf))
        .exp()
    }

    /// Diagonal stiffness entry `∫ φ_n (-Δ)^s φ_n r^{d-1} dr`.
    pub fn stiffness_diagonal(&self, n: usize) -> f64 {
        let scale = (-(self.s + 0.5 * self.d as f64 + 1.0) * LN_2).exp();
        self.closed_form_action(n) * scale * jacobi_norm_sq(n, self.alpha(), self.beta())
    }

    /// Gauss–Jacobi rule for `∫_0^1 g(r) (1-r²)^{weight_exp} r^{d-1} dr` written in
    /// `z = 2r²-1`. Returns `(r_i, w_i)` with the weight's `2^{..}` scale folded in.
    pub fn radial_rule(&self, points: usize, weight_exp: f64) -> Vec<(f64, f64)> {
        let rule: Rule = gauss_jacobi(points, weight_exp, self.beta());
        let scale = (-(weight_exp + 0.5 * self.d as f64 + 1.0) * LN_2).exp();
        rule.nodes
            .iter()
            .zip(&rule.weights)
            .map(|(z, w)| (((1.0 + z) * 0.5).sqrt(), w * scale))
            .collect()
    }
}

/// Radial potential used in the stiffness matrix.
pub type RadialProfile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PotentialTag {
    None,
    Constant(f64),
    Profile(String),
}

/// Stiffness/mass pair for one radial block.
#[derive(Debug, Clone)]
pub struct RadialOperatorPair {
    pub spec: RadialBasisSpec,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub potential: PotentialTag,
    /// Oracle cross-check results, when requested: `(m, n, closed, oracle, err)`.
    pub oracle_checks: Vec<(usize, usize, f64, f64, f64)>,
}

/// Potential supplied to [`assemble_radial_operator`].
pub enum Potential<'a> {
    None,
    Constant(f64),
    /// `breaks` lists radii in `(0,1)` where the profile is not smooth.
    Profile {
        name: &'a str,
        profile: RadialProfile,
        breaks: &'a [f64],
    },
}

/// Number of Gauss–Jacobi points used for potential terms.
pub fn potential_points(k: usize) -> usize {
    (4 * k).max(96)
}

pub fn mass_matrix(spec: &RadialBasisSpec) -> DMatrix<f64> {
    weighted_gram(spec, spec.k + 1, |_| 1.0)
}

/// `∫ w(r) φ_m φ_n r^{d-1} dr` with the `(1-r²)^{2s}` factor in the quadrature weight.
fn weighted_gram(spec: &RadialBasisSpec, points: usize, w: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let k = spec.k;
    let rule = spec.radial_rule(points, 2.0 * spec.s);
    let mut out = DMatrix::zeros(k, k);
    for (r, wt) in rule {
        let p = spec.poly_values(r);
        let scale = wt * w(r);
        for m in 0..k {
            let pm = scale * p[m];
            for n in m..k {
                out[(m, n)] += pm * p[n];
            }
        }
    }
    for m in 0..k {
        for n in 0..m {
            out[(m, n)] = out[(n, m)];
        }
    }
    out
}

/// `∫ V(r) φ_m φ_n r^{d-1} dr` on composite Gauss rules graded toward
/// every break and toward `r = 1`.
pub fn potential_matrix(
    spec: &RadialBasisSpec,
    profile: &(dyn Fn(f64) -> f64 + Sync),
    breaks: &[f64],
) -> Result<DMatrix<f64>> {
    let mut cuts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|r| *r > 0.0 && *r < 1.0)
        .collect();
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let q = (spec.k + 8).max(16);
    let gl = gauss_legendre(q);
    let points: Vec<(f64, f64)> = cuts
        .windows(2)
        .flat_map(|w| graded_rule(w[0], w[1], w[0] > 0.0, true, 14, 0.2, &gl))
        .collect();
    let k = spec.k;
    let rows: Vec<(f64, Vec<f64>)> = points
        .par_iter()
        .map(|&(r, w)| {
            let v = profile(r);
            let phi = spec.boundary_factor(r);
            (
                w * v * phi * phi * r.powi(spec.d as i32 - 1),
                spec.poly_values(r),
            )
        })
        .collect();
    if let Some(i) = rows.iter().position(|(w, _)| !w.is_finite()) {
        return Err(Error::PotentialUnbounded { r: points[i].0 });
    }
    let mut out = DMatrix::zeros(k, k);
    for (w, p) in rows {
        for m in 0..k {
            let pm = w * p[m];
            for n in m..k {
                out[(m, n)] += pm * p[n];
            }
        }
    }
    for m in 0..k {
        for n in 0..m {
            out[(m, n)] = out[(n, m)];
        }
    }
    Ok(out)
}

pub fn stiffness_matrix(spec: &RadialBasisSpec) -> DMatrix<f64> {
    DMatrix::from_fn(spec.k, spec.k, |m, n| {
        if m == n {
            spec.stiffness_diagonal(n)
        } else {
            0.0
        }
    })
}

/// Assemble `(A, B)` with `A = stiffness - potential term`.
///
/// With `oracle` set, entries with `m, n < min(4, K)` are compared with the
/// direct kernel quadrature and a disagreement beyond the combined tolerance
/// is reported as [`Error::OracleMismatch`].
pub fn assemble_radial_operator(
    spec: &RadialBasisSpec,
    potential: Potential<'_>,
    oracle: Option<OracleBudget>,
) -> Result<RadialOperatorPair> {
    let b = mass_matrix(spec);
    let mut a = stiffness_matrix(spec);
    let (tag, profile): (PotentialTag, Option<RadialProfile>) = match potential {
        Potential::None => (PotentialTag::None, None),
        Potential::Constant(c) => {
            if !c.is_finite() {
                return Err(Error::PotentialUnbounded { r: 0.0 });
            }
            a -= &b * c;
            (PotentialTag::Constant(c), Some(Arc::new(move |_| c)))
        }
        Potential::Profile {
            name,
            profile,
            breaks,
        } => {
            a -= potential_matrix(spec, &*profile, breaks)?;
            (PotentialTag::Profile(name.to_string()), Some(profile))
        }
    };
    let mut checks = Vec::new();
    if let Some(budget) = oracle {
        let m_max = spec.k.min(4);
        let rule = quadrature::RadialPairRule::cached(spec.d, spec.s, budget.level);
        let entries: Vec<(usize, usize)> = (0..m_max)
            .flat_map(|m| (m..m_max).map(move |n| (m, n)))
            .collect();
        let results: Vec<_> = entries
            .par_iter()
            .map(|&(m, n)| {
                let fm = move |r: f64| spec.eval(m, r).unwrap_or(0.0);
                let fnn = move |r: f64| spec.eval(n, r).unwrap_or(0.0);
                let mut est = rule.reduced_form(&fm, &fnn);
                if let Some(p) = &profile {
                    let pot = quadrature::radial_potential_term(
                        spec.d,
                        spec.s,
                        p.as_ref(),
                        &fm,
                        &fnn,
                        &[],
                    );
                    est.value -= pot.value;
                    est.err += pot.err;
                }
                (m, n, est)
            })
            .collect();
        for (m, n, est) in results {
            let closed = a[(m, n)];
            let scale = (a[(m, m)].abs() * a[(n, n)].abs())
                .sqrt()
                .max(f64::MIN_POSITIVE);
            let diff = (closed - est.value).abs();
            let tol = (budget.rel_tol * scale).max(est.err);
            checks.push((m, n, closed, est.value, est.err));
            if diff > tol {
                return Err(Error::OracleMismatch {
                    m,
                    n,
                    closed,
                    oracle: est.value,
                    err: est.err,
                });
            }
        }
    }
    Ok(RadialOperatorPair {
        spec: *spec,
        a,
        b,
        potential: tag,
        oracle_checks: checks,
    })
}

impl RadialOperatorPair {
    /// Leading `k × k` sub-pair (the nested lower truncation).
    pub fn truncated(&self, k: usize) -> RadialOperatorPair {
        RadialOperatorPair {
            spec: self.spec.with_truncation(k),
            a: self.a.view((0, 0), (k, k)).into_owned(),
            b: self.b.view((0, 0), (k, k)).into_owned(),
            potential: self.potential.clone(),
            oracle_checks: Vec::new(),
        }
    }

    pub fn symmetry_defect(&self) -> f64 {
        let amax = self.a.amax().max(f64::MIN_POSITIVE);
        (&self.a - self.a.transpose()).amax() / amax
    }
}

/// Eigenpairs of one radial block.
#[derive(Debug, Clone)]
pub struct RadialEigenResult {
    pub spec: RadialBasisSpec,
    pub eigenvalues: Vec<f64>,
    /// Column `i` holds the coefficients of eigenvector `i`, B-orthonormal.
    pub eigenvectors: DMatrix<f64>,
    /// `|λ_n^{(K)} - λ_n^{(K-2)}|`; the last two entries have no partner and
    /// reuse the last available estimate.
    pub convergence: Vec<f64>,
}

fn generalized_eigs(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let chol = Cholesky::new(b.clone()).ok_or(Error::MassNotPD)?;
    let l = chol.l();
    let linv_a = l.solve_lower_triangular(a).ok_or(Error::MassNotPD)?;
    let c = l
        .solve_lower_triangular(&linv_a.transpose())
        .ok_or(Error::MassNotPD)?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let y = DMatrix::from_fn(a.nrows(), a.nrows(), |r, c| eig.eigenvectors[(r, order[c])]);
    let x = l
        .transpose()
        .solve_upper_triangular(&y)
        .ok_or(Error::MassNotPD)?;
    Ok((values, x))
}

/// Solve `A x = λ B x` and attach convergence estimates from the `K-2` truncation.
pub fn solve_radial_eigs(pair: &RadialOperatorPair) -> Result<RadialEigenResult> {
    let k = pair.spec.k;
    let (values, vectors) = generalized_eigs(&pair.a, &pair.b)?;
    let convergence = if k > 2 {
        let coarse = pair.truncated(k - 2);
        let (cv, _) = generalized_eigs(&coarse.a, &coarse.b)?;
        let mut est: Vec<f64> = cv.iter().zip(&values).map(|(c, f)| (c - f).abs()).collect();
        let last = *est.last().unwrap_or(&f64::INFINITY);
        est.resize(k, last.max(f64::EPSILON));
        est
    } else {
        vec![f64::INFINITY; k]
    };
    // sign convention: positive polynomial part at r = 0
    let mut vectors = vectors;
    let p0 = pair.spec.poly_values(0.0);
    for c in 0..k {
        let val: f64 = (0..k).map(|n| vectors[(n, c)] * p0[n]).sum();
        if val < 0.0 {
            vectors.column_mut(c).neg_mut();
        }
    }
    Ok(RadialEigenResult {
        spec: pair.spec,
        eigenvalues: values,
        eigenvectors: vectors,
        convergence,
    })
}

impl RadialEigenResult {
    pub fn expansion(&self, n: usize) -> RadialExpansion {
        RadialExpansion::new(
            self.spec,
            self.eigenvectors.column(n).iter().copied().collect(),
        )
    }

    pub fn b_orthonormality_defect(&self, b: &DMatrix<f64>) -> f64 {
        let g = self.eigenvectors.transpose() * b * &self.eigenvectors;
        (g - DMatrix::identity(self.spec.k, self.spec.k)).amax()
    }
}

/// A function `u(r) = Σ c_n φ_n(r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialExpansion {
    pub spec: RadialBasisSpec,
    pub coeffs: Vec<f64>,
}

impl RadialExpansion {
    pub fn new(spec: RadialBasisSpec, coeffs: Vec<f64>) -> Self {
        assert_eq!(spec.k, coeffs.len());
        Self { spec, coeffs }
    }

    pub fn from_vector(spec: RadialBasisSpec, c: &DVector<f64>) -> Self {
        Self::new(spec, c.iter().copied().collect())
    }

    /// Polynomial part `q(r) = Σ c_n P_n(2r²-1)`.
    pub fn poly(&self, r: f64) -> f64 {
        self.spec
            .poly_values(r)
            .iter()
            .zip(&self.coeffs)
            .map(|(p, c)| p * c)
            .sum()
    }

    pub fn poly_deriv(&self, r: f64) -> f64 {
        self.spec
            .poly_derivs(r)
            .iter()
            .zip(&self.coeffs)
            .map(|(p, c)| p * c)
            .sum()
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r >= 1.0 {
            0.0
        } else {
            self.spec.boundary_factor(r) * self.poly(r)
        }
    }

    /// `u'(r) = (1-r²)^{s-1} [(1-r²) q'(r) - 2 s r q(r)]` on `[0,1)`.
    pub fn deriv(&self, r: f64) -> f64 {
        if r >= 1.0 {
            return 0.0;
        }
        let w = (1.0 - r) * (1.0 + r);
        w.powf(self.spec.s - 1.0) * (w * self.poly_deriv(r) - 2.0 * self.spec.s * r * self.poly(r))
    }

    /// Boundary ratio `lim u / (1-r)^s = 2^s q(1)`.
    pub fn boundary_ratio(&self) -> f64 {
        let q1: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| c * jacobi_at_one(n, self.spec.alpha()))
            .sum();
        2f64.powf(self.spec.s) * q1
    }

    /// Sign changes of the polynomial part on a uniform grid of `(0,1)`.
    pub fn nodal_count(&self, grid: usize) -> usize {
        let mut count = 0;
        let mut prev = 0.0f64;
        for i in 0..=grid {
            let r = (i as f64 + 0.5) / (grid as f64 + 1.0);
            let q = self.poly(r);
            if q != 0.0 {
                if prev != 0.0 && q.signum() != prev.signum() {
                    count += 1;
                }
                prev = q;
            }
        }
        count
    }

    /// Sign changes of `u'` on `(0,1)` located by bisection on a grid scan.
    pub fn derivative_sign_changes(&self, grid: usize) -> Vec<f64> {
        bisect_sign_changes(
            |r| {
                let w = (1.0 - r) * (1.0 + r);
                w * self.poly_deriv(r) - 2.0 * self.spec.s * r * self.poly(r)
            },
            grid,
        )
    }

    /// Zeros of `u` on `(0,1)`, i.e. sign changes of the polynomial part.
    pub fn nodes(&self, grid: usize) -> Vec<f64> {
        bisect_sign_changes(|r| self.poly(r), grid)
    }

    /// `∫_0^1 u² r^{d-1} dr`.
    pub fn l2_sq_reduced(&self) -> f64 {
        let b = mass_matrix(&self.spec);
        let c = DVector::from_column_slice(&self.coeffs);
        (c.transpose() * b * &c)[(0, 0)]
    }
}

fn bisect_sign_changes(g: impl Fn(f64) -> f64, grid: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let pts: Vec<f64> = (1..grid).map(|i| i as f64 / grid as f64).collect();
    for w in pts.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (glo, ghi) = (g(lo), g(hi));
        if glo == 0.0 {
            out.push(lo);
            continue;
        }
        if glo.signum() == ghi.signum() {
            continue;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if g(mid).signum() == glo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(0.5 * (lo + hi));
    }
    out
}

/// Convenience: potential-free eigenvalues for `(d, s, K)`.
pub fn radial_eigenvalues(d: usize, s: f64, k: usize) -> Result<RadialEigenResult> {
    let spec = RadialBasisSpec::new(d, s, k)?;
    solve_radial_eigs(&assemble_radial_operator(&spec, Potential::None, None)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::jacobi;

    #[test]
    fn basis_endpoint_values() {
        let spec = RadialBasisSpec::new(3, 0.4, 6).unwrap();
        assert_eq!(spec.eval(0, 0.0).unwrap(), 1.0);
        for n in 0..6 {
            assert_eq!(spec.eval(n, 1.0).unwrap(), 0.0);
        }
        assert!(matches!(
            spec.eval(6, 0.5),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn degree_two_polynomial_part_matches_explicit_formula() {
        let spec = RadialBasisSpec::new(5, 0.3, 4).unwrap();
        let (a, b) = (spec.alpha(), spec.beta());
        for i in 0..20 {
            let r = (i as f64 * 0.61803).fract();
            let x: f64 = 2.0 * r * r - 1.0;
            let explicit = (a + 1.0) * (a + 2.0) / 2.0
                + (a + 2.0) * (a + b + 3.0) * (x - 1.0) / 2.0
                + (a + b + 3.0) * (a + b + 4.0) * (x - 1.0).powi(2) / 8.0;
            assert!((spec.poly_values(r)[2] - explicit).abs() < 1e-12);
            assert!((jacobi(2, a, b, x) - explicit).abs() < 1e-12);
        }
    }

    #[test]
    fn half_laplacian_of_semicircle_is_one() {
        // (-Δ)^{1/2} sqrt(1-x²) = 1 on (-1,1)
        let spec = RadialBasisSpec::new(1, 0.5, 2).unwrap();
        assert!((spec.closed_form_action(0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn potential_free_block_is_positive_definite() {
        let res = radial_eigenvalues(2, 0.3, 12).unwrap();
        assert!(res.eigenvalues[0] > 0.0);
        assert!(res.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn constant_potential_shifts_exactly() {
        let spec = RadialBasisSpec::new(2, 0.6, 10).unwrap();
        let base = assemble_radial_operator(&spec, Potential::None, None).unwrap();
        let shifted = assemble_radial_operator(&spec, Potential::Constant(2.5), None).unwrap();
        let diff = &base.a - &base.b * 2.5 - &shifted.a;
        assert!(diff.amax() < 1e-12);
        let e0 = solve_radial_eigs(&base).unwrap();
        let e1 = solve_radial_eigs(&shifted).unwrap();
        for (x, y) in e0.eigenvalues.iter().zip(&e1.eigenvalues) {
            assert!((x - 2.5 - y).abs() < 1e-10 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn b_orthonormal_eigenvectors() {
        let spec = RadialBasisSpec::new(3, 0.25, 16).unwrap();
        let pair = assemble_radial_operator(&spec, Potential::None, None).unwrap();
        let res = solve_radial_eigs(&pair).unwrap();
        assert!(res.b_orthonormality_defect(&pair.b) < 1e-8);
        assert!(pair.symmetry_defect() <= 1e-10);
    }

    #[test]
    fn rayleigh_ritz_monotone_in_truncation() {
        for &s in &[0.25, 0.5, 0.75] {
            let coarse = radial_eigenvalues(3, s, 10).unwrap();
            let fine = radial_eigenvalues(3, s, 12).unwrap();
            for n in 0..10 {
                assert!(fine.eigenvalues[n] <= coarse.eigenvalues[n] * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn ground_state_grows_with_dimension() {
        let l1 = radial_eigenvalues(2, 0.5, 16).unwrap().eigenvalues[0];
        let l3 = radial_eigenvalues(4, 0.5, 16).unwrap().eigenvalues[0];
        assert!(l3 > l1);
    }

    #[test]
    fn derivative_profile_boundary_behaviour() {
        let res = radial_eigenvalues(2, 0.4, 20).unwrap();
        let u = res.expansion(0);
        assert!(u.deriv(0.0).abs() < 1e-8);
        let psi = u.boundary_ratio();
        assert!(psi > 0.0);
        let s = 0.4;
        let mut prev = f64::INFINITY;
        for k in 2..=5 {
            let delta = 10f64.powi(-k);
            let r = 1.0 - delta;
            let val = delta.powf(1.0 - s) * u.deriv(r);
            let gap = (val + s * psi).abs();
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 1e-3 * psi);
    }

    #[test]
    fn radial_derivative_matches_finite_difference() {
        let res = radial_eigenvalues(3, 0.7, 12).unwrap();
        let u = res.expansion(1);
        for &r in &[0.1, 0.4, 0.8, 0.95] {
            let h = 1e-6;
            let fd = (u.eval(r + h) - u.eval(r - h)) / (2.0 * h);
            assert!((fd - u.deriv(r)).abs() < 1e-5 * (1.0 + fd.abs()));
        }
    }
}
