//! Radial sign-changing solutions of `(-Δ)^s u = f(u)` in the ball with
//! `u = 0` outside, and the scalar diagnostics attached to them.
//!
//! Unknowns are the coefficients `c` of `u = Σ c_n φ_n` in the radial basis
//! of dimension `N`. All reduced integrals are `∫_0^1 (·) r^{N-1} dr`; the
//! full-space values carry an extra `|S^{N-1}|`.

use crate::error::{Error, Result};
use crate::nonlinearity::NonlinearitySpec;
use crate::params::ProblemParams;
use crate::radial::{
    assemble_radial_operator, mass_matrix, potential_points, solve_radial_eigs, stiffness_matrix,
    Potential, RadialBasisSpec, RadialExpansion,
};
use crate::special::sphere_area;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

/// Outcome of the subcriticality test `F(t) > ((N-2s)/(2N)) t f(t)` for `t ≠ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Subcriticality {
    pub subcritical: bool,
    /// Critical exponent `2N/(N-2s)` for the power family (`None` when infinite).
    pub threshold: Option<f64>,
    /// A `t` where the inequality fails, for the grid-tested families.
    pub witness: Option<f64>,
}

pub fn check_subcriticality(spec: &NonlinearitySpec, params: &ProblemParams) -> Subcriticality {
    let n = params.dim() as f64;
    let s = params.s();
    let threshold = if n > 2.0 * s {
        Some(2.0 * n / (n - 2.0 * s))
    } else {
        None
    };
    if let NonlinearitySpec::Power { p, lambda } = *spec {
        if lambda > 0.0 {
            return Subcriticality {
                subcritical: threshold.is_none_or(|t| p < t),
                threshold,
                witness: None,
            };
        }
    }
    let factor = (n - 2.0 * s) / (2.0 * n);
    let steps = 2000;
    let (lo, hi) = (1e-6f64.ln(), 1e3f64.ln());
    for i in 0..=steps {
        let mag = (lo + (hi - lo) * i as f64 / steps as f64).exp();
        for t in [mag, -mag] {
            if spec.primitive(t) <= factor * t * spec.f(t) {
                return Subcriticality {
                    subcritical: false,
                    threshold,
                    witness: Some(t),
                };
            }
        }
    }
    Subcriticality {
        subcritical: true,
        threshold,
        witness: None,
    }
}

/// Starting point for Newton.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialGuess {
    /// Radial eigenfunction `n` of the potential-free problem, with the
    /// amplitude of the one-mode Galerkin solution.
    FromEigenfunction {
        n: usize,
    },
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub target_nodes: usize,
    pub k: usize,
    pub init: InitialGuess,
    pub newton_tol: f64,
    pub max_iter: usize,
}

impl SolveOptions {
    pub fn new(target_nodes: usize, k: usize) -> Self {
        Self {
            target_nodes,
            k,
            init: InitialGuess::FromEigenfunction { n: target_nodes },
            newton_tol: 1e-10,
            max_iter: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialSolution {
    pub params: ProblemParams,
    pub spec: NonlinearitySpec,
    pub basis: RadialBasisSpec,
    pub coefficients: Vec<f64>,
    pub nodal_count: usize,
    pub psi0_at_1: f64,
    /// Max-norm of the Galerkin residual `E_s(u,φ_n) - ∫ f(u) φ_n`, divided
    /// by `max(1, max_n |E_s(u,φ_n)|)`.
    pub residual: f64,
    pub tolerance: f64,
    pub newton_iterations: usize,
    /// Linear nonlinearity: the returned function is an eigenfunction, unique only up to scaling.
    pub linear_degenerate: bool,
    pub warnings: Vec<String>,
}

impl RadialSolution {
    pub fn expansion(&self) -> RadialExpansion {
        RadialExpansion::new(self.basis, self.coefficients.clone())
    }

    pub fn is_converged(&self) -> bool {
        self.residual <= self.tolerance
    }

    /// `u(r)`.
    pub fn eval(&self, r: f64) -> f64 {
        self.expansion().eval(r)
    }
}

/// Discrete system for one `(N, s, K, f)`.
pub struct GalerkinSystem {
    pub params: ProblemParams,
    pub spec: NonlinearitySpec,
    pub basis: RadialBasisSpec,
    stiffness: DMatrix<f64>,
    /// Nodes `r_i`, weights for `∫ g (1-r²)^s r^{N-1}`, and `P_n(2r_i²-1)` rows.
    nodes: Vec<(f64, f64, Vec<f64>)>,
    sphere: f64,
    /// Mass matrix and `∫ φ_n r^{N-1}` for affine `f`, where the load is assembled exactly.
    affine: Option<(DMatrix<f64>, DVector<f64>)>,
}

impl GalerkinSystem {
    pub fn new(params: &ProblemParams, spec: &NonlinearitySpec, k: usize) -> Result<Self> {
        if !spec.is_valid() {
            return Err(Error::InvalidParams(format!(
                "invalid nonlinearity {spec:?}"
            )));
        }
        let basis = RadialBasisSpec::new(params.dim(), params.s(), k)?;
        let nodes = basis
            .radial_rule(potential_points(k), params.s())
            .into_iter()
            .map(|(r, w)| (r, w, basis.poly_values(r)))
            .collect::<Vec<(f64, f64, Vec<f64>)>>();
        let affine = spec.affine_coefficients().map(|_| {
            let moments =
                DVector::from_fn(basis.k, |n, _| nodes.iter().map(|(_, w, p)| w * p[n]).sum());
            (mass_matrix(&basis), moments)
        });
        Ok(Self {
            params: *params,
            spec: *spec,
            basis,
            stiffness: stiffness_matrix(&basis),
            nodes,
            sphere: sphere_area(params.dim()),
            affine,
        })
    }

    fn u_at(&self, c: &DVector<f64>, i: usize) -> f64 {
        let (r, _, p) = &self.nodes[i];
        self.basis.boundary_factor(*r) * p.iter().zip(c.iter()).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Reduced load `∫ f(u) φ_n r^{N-1} dr`.
    pub fn load(&self, c: &DVector<f64>) -> DVector<f64> {
        if let (Some((mass, moments)), Some((lambda, c0))) =
            (&self.affine, self.spec.affine_coefficients())
        {
            return mass * c * lambda + moments * c0;
        }
        let mut out = DVector::zeros(self.basis.k);
        for (i, (_, w, p)) in self.nodes.iter().enumerate() {
            let fu = self.spec.f(self.u_at(c, i)) * w;
            for n in 0..self.basis.k {
                out[n] += fu * p[n];
            }
        }
        out
    }

    /// Full-space residual `|S^{N-1}| (A c - load)`, which is also `∇J`.
    pub fn residual(&self, c: &DVector<f64>) -> DVector<f64> {
        (&self.stiffness * c - self.load(c)) * self.sphere
    }

    /// Reduced Jacobian `A - ∫ f'(u) φ_m φ_n r^{N-1}` on the load nodes, so
    /// that it is the exact derivative of [`load`](Self::load).
    pub fn jacobian(&self, c: &DVector<f64>) -> Result<DMatrix<f64>> {
        if let (Some((mass, _)), Some((lambda, _))) =
            (&self.affine, self.spec.affine_coefficients())
        {
            return Ok(&self.stiffness - mass * lambda);
        }
        let k = self.basis.k;
        let mut m = DMatrix::zeros(k, k);
        for (i, (r, w, p)) in self.nodes.iter().enumerate() {
            let v = self.spec.df(self.u_at(c, i));
            if !v.is_finite() {
                return Err(Error::PotentialUnbounded { r: *r });
            }
            let scale = w * v * self.basis.boundary_factor(*r);
            for a in 0..k {
                let pa = scale * p[a];
                for b in a..k {
                    m[(a, b)] += pa * p[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                m[(a, b)] = m[(b, a)];
            }
        }
        Ok(&self.stiffness - m)
    }

    /// `J(c) = |S^{N-1}| (½ cᵀAc - ∫ F(u) r^{N-1})`.
    pub fn energy(&self, c: &DVector<f64>) -> f64 {
        let quad = (c.transpose() * &self.stiffness * c)[(0, 0)];
        if let (Some((mass, moments)), Some((lambda, c0))) =
            (&self.affine, self.spec.affine_coefficients())
        {
            let f_int = 0.5 * lambda * (c.transpose() * mass * c)[(0, 0)] + c0 * moments.dot(c);
            return self.sphere * (0.5 * quad - f_int);
        }
        // same nodes as the load, so the gradient is exact for the discrete energy
        let f_int: f64 = (0..self.nodes.len())
            .map(|i| {
                let (r, w, _) = &self.nodes[i];
                w * self.spec.primitive(self.u_at(c, i)) / self.basis.boundary_factor(*r)
            })
            .sum();
        self.sphere * (0.5 * quad - f_int)
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }
}

fn max_norm(v: &DVector<f64>) -> f64 {
    v.amax()
}

impl GalerkinSystem {
    /// Residual max-norm relative to `max(1, |S^{N-1}| |A c|_∞)`.
    pub fn scaled_residual(&self, c: &DVector<f64>) -> f64 {
        let scale = (&self.stiffness * c * self.sphere).amax().max(1.0);
        max_norm(&self.residual(c)) / scale
    }
}

/// Damped Newton iteration from `c0`. Returns the final coefficients,
/// iteration count, and residual norm.
fn newton(
    sys: &GalerkinSystem,
    c0: DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(DVector<f64>, usize, f64)> {
    let mut c = c0;
    let mut res = sys.residual(&c);
    let mut norm = sys.scaled_residual(&c);
    let mut it = 0;
    while norm > tol {
        if it == max_iter || !norm.is_finite() {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: norm,
            });
        }
        it += 1;
        let jac = sys.jacobian(&c)? * sys.sphere;
        let step = jac.lu().solve(&res).ok_or(Error::NoConvergence {
            iterations: it,
            residual: norm,
        })?;
        let merit = res.norm();
        let mut damping = 1.0;
        loop {
            let trial = &c - &step * damping;
            let trial_res = sys.residual(&trial);
            if trial_res.norm() < (1.0 - 1e-4 * damping) * merit || damping < 1e-3 {
                c = trial;
                res = trial_res;
                norm = sys.scaled_residual(&c);
                break;
            }
            damping *= 0.5;
        }
    }
    Ok((c, it, norm))
}

/// Nehari rescaling `t u` with `⟨R(t u), u⟩ = 0` for the power family.
fn nehari_rescale(sys: &GalerkinSystem, c: &DVector<f64>) -> DVector<f64> {
    let quad = (c.transpose() * sys.stiffness() * c)[(0, 0)];
    let proj = sys.load(c).dot(c);
    match sys.spec {
        NonlinearitySpec::Power { p, .. } if proj > 0.0 && quad > 0.0 => {
            c * (quad / proj).powf(1.0 / (p - 2.0))
        }
        _ => c.clone(),
    }
}

fn with_nodes(
    basis: RadialBasisSpec,
    target: usize,
    out: (DVector<f64>, usize, f64),
) -> Result<(DVector<f64>, usize, f64)> {
    let nodes = RadialExpansion::from_vector(basis, &out.0).nodal_count(2048);
    if nodes == target {
        Ok(out)
    } else {
        Err(Error::WrongNodalCount {
            found: nodes,
            requested: target,
        })
    }
}

/// Power family `λ|t|^{p-2}t` with `λ > 0`, seeded from eigenfunction `n`.
///
/// The branch is computed for the slope `μ_n` (the radial eigenvalue), which
/// keeps the amplitude of order one, and then mapped to `λ` through the exact
/// scaling `u_λ = (λ/μ_n)^{1/(2-p)} u_{μ_n}`. If Newton does not reach the
/// requested nodal class directly, the exponent is continued from 2.05.
fn solve_power_branch(
    params: &ProblemParams,
    lambda: f64,
    p: f64,
    n: usize,
    opts: &SolveOptions,
    warnings: &mut Vec<String>,
) -> Result<(DVector<f64>, usize, f64)> {
    let basis = RadialBasisSpec::new(params.dim(), params.s(), opts.k)?;
    let eig = solve_radial_eigs(&assemble_radial_operator(&basis, Potential::None, None)?)?;
    let n = n.min(opts.k - 1);
    let mu = eig.eigenvalues[n];
    let phi = eig.eigenvectors.column(n).into_owned();
    let normalized = NonlinearitySpec::power(mu, p);
    let sys = GalerkinSystem::new(params, &normalized, opts.k)?;
    let tol = opts.newton_tol;
    let direct = newton(&sys, nehari_rescale(&sys, &phi), tol, opts.max_iter)
        .and_then(|out| with_nodes(basis, opts.target_nodes, out));
    let (c, mut iterations, _) = match direct {
        Ok(out) => out,
        Err(_) => {
            warnings.push("direct Newton failed; continued in the exponent".to_string());
            let p_start = 2.05f64.min(p);
            let steps = ((p - p_start) / 0.1).ceil().max(0.0) as usize;
            let mut c = phi.clone();
            let mut total = 0;
            for i in 0..=steps {
                let pi = if steps == 0 {
                    p
                } else {
                    p_start + (p - p_start) * i as f64 / steps as f64
                };
                let sys_i = GalerkinSystem::new(params, &NonlinearitySpec::power(mu, pi), opts.k)?;
                let (next, it, _) = newton(&sys_i, nehari_rescale(&sys_i, &c), tol, opts.max_iter)?;
                total += it;
                c = next;
            }
            with_nodes(basis, opts.target_nodes, (c, total, 0.0))?
        }
    };
    let target = GalerkinSystem::new(params, &NonlinearitySpec::power(lambda, p), opts.k)?;
    let scaled = c * (lambda / mu).powf(1.0 / (2.0 - p));
    let (c, polish, residual) = newton(&target, scaled, tol, opts.max_iter)?;
    iterations += polish;
    Ok((c, iterations, residual))
}

/// Newton solve for a radial solution with `target_nodes` sign changes.
pub fn solve_radial_sign_changing(
    params: &ProblemParams,
    spec: &NonlinearitySpec,
    opts: &SolveOptions,
) -> Result<RadialSolution> {
    let sys = GalerkinSystem::new(params, spec, opts.k)?;
    let mut warnings = Vec::new();
    let sub = check_subcriticality(spec, params);
    if !sub.subcritical {
        warnings.push(match sub.threshold {
            Some(t) => format!("nonlinearity is not subcritical (threshold exponent {t:.6})"),
            None => "nonlinearity fails the subcriticality inequality".to_string(),
        });
    }

    let basis = sys.basis;
    let pair = assemble_radial_operator(&basis, Potential::None, None)?;
    let eig = solve_radial_eigs(&pair)?;

    if let Some(lambda) = spec.linear_slope() {
        let n = opts.target_nodes.min(basis.k - 1);
        let c = eig.eigenvectors.column(n).into_owned();
        let residual = sys.scaled_residual(&c);
        let u = RadialExpansion::from_vector(basis, &c);
        if (eig.eigenvalues[n] - lambda).abs() > eig.convergence[n].max(1e-12 * lambda.abs()) {
            warnings.push(format!(
                "slope {lambda} is not the radial eigenvalue {}; the eigenfunction is not a solution",
                eig.eigenvalues[n]
            ));
        }
        return Ok(RadialSolution {
            params: *params,
            spec: *spec,
            basis,
            nodal_count: u.nodal_count(2048),
            psi0_at_1: u.boundary_ratio(),
            coefficients: c.iter().copied().collect(),
            residual,
            tolerance: opts.newton_tol,
            newton_iterations: 0,
            linear_degenerate: true,
            warnings,
        });
    }

    let (c, iterations, residual) = match (&opts.init, *spec) {
        (InitialGuess::FromEigenfunction { n }, NonlinearitySpec::Power { lambda, p })
            if lambda > 0.0 =>
        {
            solve_power_branch(params, lambda, p, *n, opts, &mut warnings)?
        }
        (InitialGuess::FromEigenfunction { n }, _) => {
            let n = (*n).min(basis.k - 1);
            let phi = eig.eigenvectors.column(n).into_owned();
            newton(&sys, phi, opts.newton_tol, opts.max_iter)?
        }
        (InitialGuess::Explicit(v), _) => {
            if v.len() != basis.k {
                return Err(Error::InvalidParams(format!(
                    "initial vector has length {}, expected {}",
                    v.len(),
                    basis.k
                )));
            }
            newton(
                &sys,
                DVector::from_column_slice(v),
                opts.newton_tol,
                opts.max_iter,
            )?
        }
    };
    let norm = c.norm();
    if norm < 1e-10 {
        return Err(Error::TrivialSolution { norm });
    }
    let u = RadialExpansion::from_vector(basis, &c);
    let nodal_count = u.nodal_count(2048);
    if nodal_count != opts.target_nodes {
        return Err(Error::WrongNodalCount {
            found: nodal_count,
            requested: opts.target_nodes,
        });
    }
    let sol = RadialSolution {
        params: *params,
        spec: *spec,
        basis,
        coefficients: c.iter().copied().collect(),
        nodal_count,
        psi0_at_1: u.boundary_ratio(),
        residual,
        tolerance: opts.newton_tol,
        newton_iterations: iterations,
        linear_degenerate: false,
        warnings,
    };
    if !sub.subcritical {
        // a weak solution needs ψ₀(1)² to equal a nonnegative right side
        let ph = pohozaev_residual(&sol, 4 * basis.k)?;
        if ph.rhs < 0.0 {
            return Err(Error::NoConvergence {
                iterations,
                residual: ph.relative_residual,
            });
        }
    }
    Ok(sol)
}

/// Both sides of the boundary identity and their relative discrepancy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pohozaev {
    pub lhs: f64,
    pub rhs: f64,
    pub relative_residual: f64,
}

/// `ψ₀(1)²` against `Γ(1+s)^{-2} ∫_0^1 [(2s-N) u f(u) + 2N F(u)] r^{N-1} dr`.
pub fn pohozaev_residual(sol: &RadialSolution, quad_points: usize) -> Result<Pohozaev> {
    if !sol.is_converged() {
        return Err(Error::NotConverged {
            residual: sol.residual,
            tol: sol.tolerance,
        });
    }
    let n = sol.params.dim() as f64;
    let s = sol.params.s();
    let u = sol.expansion();
    let rule = sol.basis.radial_rule(quad_points.max(2), s);
    // the rule carries the weight (1-r²)^s, so integrate u/(1-r²)^s · g(u)
    let integral: f64 = rule
        .iter()
        .map(|&(r, w)| {
            let q = u.poly(r);
            let val = u.eval(r);
            let g = if val == 0.0 {
                0.0
            } else {
                ((2.0 * s - n) * sol.spec.f(val) + 2.0 * n * sol.spec.primitive(val) / val) * q
            };
            w * g
        })
        .sum();
    let lhs = sol.psi0_at_1 * sol.psi0_at_1;
    let rhs = integral / gamma(1.0 + s).powi(2);
    let relative_residual = (lhs - rhs).abs() / lhs.max(rhs).max(1e-30);
    Ok(Pohozaev {
        lhs,
        rhs,
        relative_residual,
    })
}

/// `J(u) = ½ E_s(u,u) - ∫_B F(u)`.
pub fn energy(sol: &RadialSolution) -> Result<f64> {
    let sys = GalerkinSystem::new(&sol.params, &sol.spec, sol.basis.k)?;
    Ok(sys.energy(&DVector::from_column_slice(&sol.coefficients)))
}

/// Analytic gradient of `J` in the coefficients (equal to the full-space residual).
pub fn energy_gradient(sol: &RadialSolution) -> Result<Vec<f64>> {
    let sys = GalerkinSystem::new(&sol.params, &sol.spec, sol.basis.k)?;
    Ok(sys
        .residual(&DVector::from_column_slice(&sol.coefficients))
        .iter()
        .copied()
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundarySign {
    NonNegative,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRatio {
    pub value: f64,
    pub sign: BoundarySign,
    /// `|ψ₀(1)|` is tiny compared with `max |u|`.
    pub near_zero: bool,
}

pub fn boundary_ratio(sol: &RadialSolution) -> BoundaryRatio {
    let u = sol.expansion();
    let value = u.boundary_ratio();
    let scale = (0..=256)
        .map(|i| u.eval(i as f64 / 257.0).abs())
        .fold(0.0, f64::max);
    BoundaryRatio {
        value,
        sign: if value >= 0.0 {
            BoundarySign::NonNegative
        } else {
            BoundarySign::Negative
        },
        near_zero: value.abs() <= 1e-8 * scale,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power_solution(n: usize, s: f64, p: f64, k: usize) -> RadialSolution {
        let params = ProblemParams::new(n, s).unwrap();
        let spec = NonlinearitySpec::power(1.0, p);
        solve_radial_sign_changing(&params, &spec, &SolveOptions::new(1, k)).unwrap()
    }

    #[test]
    fn subcriticality_examples() {
        let p3 = ProblemParams::new(3, 0.5).unwrap();
        assert!(check_subcriticality(&NonlinearitySpec::linear(2.0), &p3).subcritical);
        assert!(check_subcriticality(&NonlinearitySpec::power(1.0, 2.5), &p3).subcritical);
        assert!(!check_subcriticality(&NonlinearitySpec::power(1.0, 3.5), &p3).subcritical);
        assert!(!check_subcriticality(&NonlinearitySpec::power(1.0, 3.0), &p3).subcritical);
        let p1 = ProblemParams::new(1, 0.75).unwrap();
        let c = check_subcriticality(&NonlinearitySpec::power(1.0, 40.0), &p1);
        assert!(c.subcritical && c.threshold.is_none());
        let w = check_subcriticality(&NonlinearitySpec::shifted_linear(1.0, 0.5), &p3);
        assert!(!w.subcritical && w.witness.is_some());
    }

    #[test]
    fn power_solution_has_one_node_and_small_residual() {
        let sol = power_solution(2, 0.75, 3.0, 16);
        assert_eq!(sol.nodal_count, 1);
        assert!(sol.residual <= 1e-10);
        assert!(sol.psi0_at_1 != 0.0);
        let nodes_fine = sol.expansion().nodal_count(8192);
        assert_eq!(nodes_fine, 1);
    }

    #[test]
    fn exact_start_needs_at_most_one_step() {
        let sol = power_solution(1, 0.5, 3.0, 12);
        let params = sol.params;
        let mut opts = SolveOptions::new(1, 12);
        opts.init = InitialGuess::Explicit(sol.coefficients.clone());
        let again = solve_radial_sign_changing(&params, &sol.spec, &opts).unwrap();
        assert!(again.newton_iterations <= 1);
    }

    #[test]
    fn scaling_covariance() {
        let params = ProblemParams::new(1, 0.6).unwrap();
        let opts = SolveOptions::new(1, 14);
        let a =
            solve_radial_sign_changing(&params, &NonlinearitySpec::power(1.0, 3.0), &opts).unwrap();
        let mu = 2.5;
        let b =
            solve_radial_sign_changing(&params, &NonlinearitySpec::power(mu, 3.0), &opts).unwrap();
        let factor = mu.powf(1.0 / (2.0 - 3.0));
        for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
            assert!((x * factor - y).abs() < 1e-8 * (1.0 + x.abs()), "{x} {y}");
        }
    }

    #[test]
    fn linear_family_returns_flagged_eigenfunction() {
        let params = ProblemParams::new(2, 0.5).unwrap();
        let sol = solve_radial_sign_changing(
            &params,
            &NonlinearitySpec::power(3.0, 2.0),
            &SolveOptions::new(1, 10),
        )
        .unwrap();
        assert!(sol.linear_degenerate);
        assert_eq!(sol.nodal_count, 1);
    }

    #[test]
    fn pohozaev_on_ground_state_of_linear_problem() {
        let params = ProblemParams::new(2, 0.75).unwrap();
        let lam = crate::radial::radial_eigenvalues(2, 0.75, 24)
            .unwrap()
            .eigenvalues[0];
        let mut opts = SolveOptions::new(0, 24);
        opts.newton_tol = 1e-6;
        let sol =
            solve_radial_sign_changing(&params, &NonlinearitySpec::linear(lam), &opts).unwrap();
        let ph = pohozaev_residual(&sol, 200).unwrap();
        assert!(ph.relative_residual < 1e-3, "{ph:?}");
        // specialized form: ψ² = 2sλ ∫u² r^{N-1} / Γ(1+s)²
        let alt = 2.0 * 0.75 * lam * sol.expansion().l2_sq_reduced() / gamma(1.75).powi(2);
        assert!((alt - ph.rhs).abs() < 1e-8 * alt);
    }

    #[test]
    fn pohozaev_on_power_solution() {
        let sol = power_solution(2, 0.75, 3.0, 24);
        let ph = pohozaev_residual(&sol, 4 * 24).unwrap();
        assert!(ph.relative_residual < 1e-3, "{ph:?}");
    }

    #[test]
    fn pohozaev_residual_decreases_under_refinement() {
        let res: Vec<f64> = [12, 18, 24]
            .iter()
            .map(|&k| {
                pohozaev_residual(&power_solution(1, 0.4, 3.0, k), 4 * k)
                    .unwrap()
                    .relative_residual
            })
            .collect();
        assert!(res[0] > res[1] && res[1] > res[2], "{res:?}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let sol = power_solution(1, 0.4, 3.0, 10);
        let sys = GalerkinSystem::new(&sol.params, &sol.spec, 10).unwrap();
        let mut c = DVector::from_column_slice(&sol.coefficients);
        c[0] += 0.1;
        c[3] -= 0.05;
        let grad = sys.residual(&c);
        for i in 0..10 {
            let h = 1e-4;
            let mut cp = c.clone();
            cp[i] += h;
            let mut cm = c.clone();
            cm[i] -= h;
            let fd = (sys.energy(&cp) - sys.energy(&cm)) / (2.0 * h);
            assert!(
                (fd - grad[i]).abs() < 1e-6 * grad.amax(),
                "{i} {fd} {}",
                grad[i]
            );
        }
    }

    #[test]
    fn supercritical_fixed_points_are_rejected() {
        let params = ProblemParams::new(3, 0.5).unwrap();
        let res = solve_radial_sign_changing(
            &params,
            &NonlinearitySpec::power(1.0, 4.0),
            &SolveOptions::new(1, 12),
        );
        assert!(
            matches!(
                res,
                Err(Error::NoConvergence { .. }) | Err(Error::TrivialSolution { .. })
            ),
            "{res:?}"
        );
    }

    #[test]
    fn boundary_ratio_matches_extrapolation() {
        let sol = power_solution(1, 0.75, 3.0, 16);
        let br = boundary_ratio(&sol);
        let u = sol.expansion();
        for k in 3..=6 {
            let d = 10f64.powi(-k);
            let ratio = u.eval(1.0 - d) / d.powf(0.75);
            assert!(
                (ratio - br.value).abs() < 0.01 * br.value.abs(),
                "{k} {ratio} {}",
                br.value
            );
        }
    }

    #[test]
    fn zero_function_diagnostics() {
        let params = ProblemParams::new(2, 0.5).unwrap();
        let spec = NonlinearitySpec::power(1.0, 3.0);
        let sys = GalerkinSystem::new(&params, &spec, 8).unwrap();
        assert_eq!(sys.energy(&DVector::zeros(8)), 0.0);
        let sol = RadialSolution {
            params,
            spec,
            basis: sys.basis,
            coefficients: vec![0.0; 8],
            nodal_count: 0,
            psi0_at_1: 0.0,
            residual: 0.0,
            tolerance: 1e-10,
            newton_iterations: 0,
            linear_degenerate: false,
            warnings: Vec::new(),
        };
        let ph = pohozaev_residual(&sol, 64).unwrap();
        assert_eq!((ph.lhs, ph.rhs), (0.0, 0.0));
        assert_eq!(boundary_ratio(&sol).value, 0.0);
    }
}
