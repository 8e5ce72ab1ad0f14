//! Linearization `L = (-Δ)^s - f'(u)` around a radial solution.
//!
//! Each angular degree `ℓ` gives a radial block in effective dimension
//! `N + 2ℓ`; negative eigenvalues of the blocks, weighted by the harmonic
//! multiplicities, add up to the Morse index. The odd test functions `d_j`
//! and their quadratic-form checks live in the second half of the module.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::quadrature::{
    mc_reflected_form, quadratic_form_l, Angular, Estimate, McSpec, OracleBudget, QuadratureRule,
    Scheme, SeparableFunction,
};
use crate::radial::{
    assemble_radial_operator, solve_radial_eigs, Potential, RadialBasisSpec, RadialEigenResult,
    RadialExpansion, RadialOperatorPair, RadialProfile,
};
use crate::semilinear::{
    boundary_ratio, check_subcriticality, solve_radial_sign_changing, BoundarySign, RadialSolution,
    SolveOptions,
};
use crate::special::{gauss_legendre, graded_rule, sphere_area};
use crate::spectrum::{admissible_ell_max, harmonic_multiplicity};
use crate::NonlinearitySpec;

/// Highest angular degree tried by [`morse_index_auto`].
pub const AUTO_ELL_CAP: usize = 24;

const GRID: usize = 2048;

/// `f'(u(r))`, constant for the linear families.
enum LinearizedPotential {
    Constant(f64),
    Profile(RadialProfile),
}

fn linearized_potential(sol: &RadialSolution) -> LinearizedPotential {
    match sol.spec {
        NonlinearitySpec::Linear { lambda } | NonlinearitySpec::ShiftedLinear { lambda, .. } => {
            LinearizedPotential::Constant(lambda)
        }
        NonlinearitySpec::Power { lambda, p: 2.0 } => LinearizedPotential::Constant(lambda),
        spec => {
            let u = sol.expansion();
            LinearizedPotential::Profile(Arc::new(move |r| spec.df(u.eval(r))))
        }
    }
}

impl LinearizedPotential {
    fn profile(&self) -> RadialProfile {
        match self {
            Self::Constant(c) => {
                let c = *c;
                Arc::new(move |_| c)
            }
            Self::Profile(p) => p.clone(),
        }
    }
}

fn check_converged(sol: &RadialSolution) -> Result<()> {
    if sol.is_converged() {
        Ok(())
    } else {
        Err(Error::NotConverged {
            residual: sol.residual,
            tol: sol.tolerance,
        })
    }
}

/// Radial block of `L` for angular degree `ℓ`, with the `ℓ ∈ {0,1}` blocks
/// gated against the direct quadrature of `E_{s,L}`.
pub fn assemble_linearized(
    params: &ProblemParams,
    sol: &RadialSolution,
    ell: usize,
    k: usize,
) -> Result<RadialOperatorPair> {
    check_converged(sol)?;
    harmonic_multiplicity(params.dim(), ell)?;
    let spec = RadialBasisSpec::new(params.dim() + 2 * ell, params.s(), k)?;
    let pot = linearized_potential(sol);
    let breaks = sol.expansion().nodes(GRID);
    let mut pair = match &pot {
        LinearizedPotential::Constant(c) => {
            assemble_radial_operator(&spec, Potential::Constant(*c), None)?
        }
        LinearizedPotential::Profile(p) => assemble_radial_operator(
            &spec,
            Potential::Profile {
                name: "f'(u)",
                profile: p.clone(),
                breaks: &breaks,
            },
            None,
        )?,
    };
    if ell <= 1 {
        pair.oracle_checks = gate_block(
            params,
            sol,
            ell,
            &pair,
            &pot.profile(),
            OracleBudget::default(),
        )?;
    }
    Ok(pair)
}

/// `(m, n, closed form, quadrature, quadrature error)`.
type GateEntry = (usize, usize, f64, f64, f64);

/// Compares the two leading basis functions of the block with `quadratic_form_l`
/// applied to `φ(|x|)` (ℓ = 0) or `x_1 φ(|x|)` (ℓ = 1) in `R^N`.
fn gate_block(
    params: &ProblemParams,
    sol: &RadialSolution,
    ell: usize,
    pair: &RadialOperatorPair,
    potential: &RadialProfile,
    budget: OracleBudget,
) -> Result<Vec<GateEntry>> {
    let n = params.dim();
    let spec = pair.spec;
    let breaks = sol.expansion().nodes(GRID);
    let angular = if ell == 0 {
        Angular::Constant
    } else {
        Angular::Coordinate(0)
    };
    let factor = if ell == 0 {
        sphere_area(n)
    } else {
        sphere_area(n) / n as f64
    };
    let m_max = spec.k.min(2);
    let func = |m: usize| {
        SeparableFunction::new(angular, Arc::new(move |r| spec.eval(m, r).unwrap_or(0.0)))
            .with_breaks(breaks.clone())
    };
    let entries: Vec<(usize, usize)> = (0..m_max)
        .flat_map(|m| (m..m_max).map(move |q| (m, q)))
        .collect();
    let rule = QuadratureRule::tensor(budget.level);
    let results: Vec<Result<(usize, usize, Estimate)>> = entries
        .par_iter()
        .map(|&(m, q)| {
            Ok((
                m,
                q,
                quadratic_form_l(potential, &func(m), &func(q), params, &rule)?
                    .scaled(1.0 / factor),
            ))
        })
        .collect();
    let mut checks = Vec::new();
    for r in results {
        let (m, q, est) = r?;
        let closed = pair.a[(m, q)];
        let scale = (pair.a[(m, m)].abs() * pair.a[(q, q)].abs()).sqrt();
        let tol = (budget.rel_tol * scale).max(est.err);
        checks.push((m, q, closed, est.value, est.err));
        if (closed - est.value).abs() > tol {
            return Err(Error::OracleMismatch {
                m,
                n: q,
                closed,
                oracle: est.value,
                err: est.err,
            });
        }
    }
    Ok(checks)
}

struct BlockSolve {
    ell: usize,
    pair: RadialOperatorPair,
    eig: RadialEigenResult,
}

fn solve_block(
    params: &ProblemParams,
    sol: &RadialSolution,
    ell: usize,
    k: usize,
) -> Result<BlockSolve> {
    let pair = assemble_linearized(params, sol, ell, k)?;
    let eig = solve_radial_eigs(&pair)?;
    Ok(BlockSolve { ell, pair, eig })
}

/// Negative-eigenvalue bookkeeping for one angular block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockCount {
    pub ell: usize,
    pub multiplicity: usize,
    /// Eigenvalues below `-(convergence estimate + rounding floor)`.
    pub negative_count: usize,
    /// Eigenvalues within their error of zero; never part of the index.
    pub marginal_count: usize,
    pub smallest_eigenvalue: f64,
    pub smallest_err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoremCheck {
    Passes,
    Fails,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorseReport {
    pub params: ProblemParams,
    pub k: usize,
    pub ell_max: usize,
    pub blocks: Vec<BlockCount>,
    pub total_index: usize,
    pub marginal_total: usize,
    pub lambda1_l: f64,
    pub lambda1_l_err: f64,
    pub lambda1_l_is_radial: bool,
    pub theorem_check: TheoremCheck,
    /// `(ℓ, m, n, closed form, quadrature, quadrature error)` for the gated blocks.
    pub oracle_gate: Vec<(usize, usize, usize, f64, f64, f64)>,
}

/// Absolute floor below which an eigenvalue is indistinguishable from zero in floating point.
fn rounding_floor(eig: &RadialEigenResult, pair: &RadialOperatorPair) -> f64 {
    let diag = (0..pair.spec.k)
        .map(|i| (pair.a[(i, i)] / pair.b[(i, i)]).abs())
        .fold(0.0, f64::max);
    1e-12 * diag.max(eig.eigenvalues[0].abs()).max(1.0)
}

fn count_block(params: &ProblemParams, b: &BlockSolve) -> Result<BlockCount> {
    let floor = rounding_floor(&b.eig, &b.pair);
    // only the lower half of a Galerkin spectrum carries meaningful error estimates
    let resolved = (b.pair.spec.k / 2).max(1);
    if let Some(&next) = b.eig.eigenvalues.get(resolved) {
        if next <= floor {
            return Err(Error::TruncationUnsafe(format!(
                "block ℓ = {} has non-positive eigenvalues beyond the resolved range (K = {})",
                b.ell, b.pair.spec.k
            )));
        }
    }
    let mut negative = 0;
    let mut marginal = 0;
    for (lam, conv) in b
        .eig
        .eigenvalues
        .iter()
        .zip(&b.eig.convergence)
        .take(resolved)
    {
        let bar = conv + floor;
        if *lam < -bar {
            negative += 1;
        } else if lam.abs() <= bar {
            marginal += 1;
        }
    }
    Ok(BlockCount {
        ell: b.ell,
        multiplicity: harmonic_multiplicity(params.dim(), b.ell)?,
        negative_count: negative,
        marginal_count: marginal,
        smallest_eigenvalue: b.eig.eigenvalues[0],
        smallest_err: b.eig.convergence[0] + floor,
    })
}

fn theorem_check(params: &ProblemParams, sol: &RadialSolution, total: usize) -> TheoremCheck {
    let applicable = sol.nodal_count >= 1
        && (params.s() > 0.5 || check_subcriticality(&sol.spec, params).subcritical);
    if !applicable {
        TheoremCheck::NotApplicable
    } else if total > params.dim() {
        TheoremCheck::Passes
    } else {
        TheoremCheck::Fails
    }
}

/// A block whose smallest eigenvalue is positive beyond its error closes the decomposition.
fn closes(params: &ProblemParams, count: &BlockCount) -> bool {
    (params.dim() == 1 && count.ell >= 1) || count.smallest_eigenvalue - count.smallest_err > 0.0
}

fn report(
    params: &ProblemParams,
    sol: &RadialSolution,
    k: usize,
    solved: &[BlockSolve],
) -> Result<MorseReport> {
    let blocks: Vec<BlockCount> = solved
        .iter()
        .map(|b| count_block(params, b))
        .collect::<Result<_>>()?;
    let last = blocks
        .last()
        .ok_or_else(|| Error::InvalidParams("no angular blocks".into()))?;
    if !closes(params, last) {
        return Err(Error::TruncationUnsafe(format!(
            "smallest eigenvalue {:e} ± {:e} of block ℓ = {} is not positive",
            last.smallest_eigenvalue, last.smallest_err, last.ell
        )));
    }
    let total_index = blocks
        .iter()
        .map(|b| b.multiplicity * b.negative_count)
        .sum();
    let marginal_total = blocks
        .iter()
        .map(|b| b.multiplicity * b.marginal_count)
        .sum();
    let min = blocks
        .iter()
        .min_by(|a, b| a.smallest_eigenvalue.total_cmp(&b.smallest_eigenvalue))
        .expect("non-empty");
    let oracle_gate = solved
        .iter()
        .flat_map(|b| {
            b.pair
                .oracle_checks
                .iter()
                .map(move |&(m, n, c, o, e)| (b.ell, m, n, c, o, e))
        })
        .collect();
    Ok(MorseReport {
        params: *params,
        k,
        ell_max: last.ell,
        lambda1_l: min.smallest_eigenvalue,
        lambda1_l_err: min.smallest_err,
        lambda1_l_is_radial: min.ell == 0,
        theorem_check: theorem_check(params, sol, total_index),
        blocks,
        total_index,
        marginal_total,
        oracle_gate,
    })
}

/// Morse index from the blocks `ℓ = 0..=ℓ_max`.
pub fn morse_index(
    params: &ProblemParams,
    sol: &RadialSolution,
    ell_max: usize,
    k: usize,
) -> Result<MorseReport> {
    check_converged(sol)?;
    let ell_max = admissible_ell_max(params.dim(), ell_max);
    let solved: Vec<BlockSolve> = (0..=ell_max)
        .into_par_iter()
        .map(|ell| solve_block(params, sol, ell, k))
        .collect::<Result<_>>()?;
    report(params, sol, k, &solved)
}

/// Like [`morse_index`], raising `ℓ_max` until a block closes the decomposition.
pub fn morse_index_auto(
    params: &ProblemParams,
    sol: &RadialSolution,
    k: usize,
) -> Result<MorseReport> {
    check_converged(sol)?;
    let cap = admissible_ell_max(params.dim(), AUTO_ELL_CAP);
    let mut solved = Vec::new();
    for ell in 0..=cap {
        let block = solve_block(params, sol, ell, k)?;
        let done = closes(params, &count_block(params, &block)?);
        solved.push(block);
        if done {
            break;
        }
    }
    report(params, sol, k, &solved)
}

/// First eigenpair of `L` over all angular blocks.
#[derive(Debug, Clone)]
pub struct FirstLinearizedEigen {
    pub lambda: f64,
    pub err: f64,
    pub ell: usize,
    pub profile: RadialExpansion,
    pub sign_definite: bool,
}

pub fn first_linearized_eigen(
    params: &ProblemParams,
    sol: &RadialSolution,
    k: usize,
) -> Result<FirstLinearizedEigen> {
    check_converged(sol)?;
    let cap = admissible_ell_max(params.dim(), AUTO_ELL_CAP);
    let mut best: Option<BlockSolve> = None;
    for ell in 0..=cap {
        let block = solve_block(params, sol, ell, k)?;
        let count = count_block(params, &block)?;
        let improves = best
            .as_ref()
            .is_none_or(|b| block.eig.eigenvalues[0] < b.eig.eigenvalues[0]);
        let done = closes(params, &count)
            && best
                .as_ref()
                .is_some_and(|b| b.eig.eigenvalues[0] < count.smallest_eigenvalue);
        if improves {
            best = Some(block);
        }
        if done {
            break;
        }
    }
    let b = best.expect("at least one block");
    let floor = rounding_floor(&b.eig, &b.pair);
    let profile = b.eig.expansion(0);
    Ok(FirstLinearizedEigen {
        lambda: b.eig.eigenvalues[0],
        err: b.eig.convergence[0] + floor,
        ell: b.ell,
        sign_definite: profile.nodal_count(GRID) == 0,
        profile,
    })
}

// ---------------------------------------------------------------------------
// test functions

/// The odd test functions `d_j` and the derivatives `v^j = ∂_j u` they are cut from.
#[derive(Debug, Clone)]
pub struct TestFunctions {
    pub d: Vec<SeparableFunction>,
    pub v: Vec<SeparableFunction>,
    pub sign: BoundarySign,
    pub psi0_at_1: f64,
    /// Radius beyond which every `d_j` vanishes, when `ψ₀(1) ≠ 0`.
    pub support_radius: Option<f64>,
    /// Radii where `u` or `u'` changes sign.
    pub breaks: Vec<f64>,
}

impl TestFunctions {
    fn upper_positive(&self) -> bool {
        self.sign == BoundarySign::NonNegative
    }

    /// `∫_0^1 (u'^±)² r^{N-1} dr`, the part of `u'` kept by `d_j`.
    fn signed_part_sq(&self, sol: &RadialSolution) -> f64 {
        let u = sol.expansion();
        let keep_positive = self.upper_positive();
        let n = sol.params.dim() as i32;
        let mut cuts = self.breaks.clone();
        cuts.extend([0.0, 1.0]);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let gl = gauss_legendre(24);
        cuts.windows(2)
            .flat_map(|w| graded_rule(w[0], w[1], w[0] > 0.0, true, 16, 0.2, &gl))
            .map(|(r, w)| {
                let g = u.deriv(r);
                let part = if keep_positive {
                    g.max(0.0)
                } else {
                    g.min(0.0)
                };
                w * part * part * r.powi(n - 1)
            })
            .sum()
    }
}

/// Builds `d_j` for `j = 1..N` from `u'` with the branch fixed by the sign of `ψ₀(1)`.
pub fn build_test_functions(sol: &RadialSolution) -> Result<TestFunctions> {
    let s = sol.params.s();
    let ratio = boundary_ratio(sol);
    if ratio.near_zero && s <= 0.5 {
        return Err(Error::InadmissibleBoundaryData {
            psi: ratio.value,
            s,
        });
    }
    let u = sol.expansion();
    let turning = u.derivative_sign_changes(GRID);
    let support_radius = if ratio.near_zero {
        None
    } else {
        turning.last().copied()
    };
    let mut breaks: Vec<f64> = turning
        .iter()
        .chain(u.nodes(GRID).iter())
        .copied()
        .collect();
    breaks.sort_by(f64::total_cmp);
    let deriv: RadialProfile = {
        let u = u.clone();
        Arc::new(move |r| u.deriv(r))
    };
    let upper_positive = ratio.sign == BoundarySign::NonNegative;
    let dim = sol.params.dim();
    let d = (0..dim)
        .map(|j| {
            SeparableFunction::new(Angular::SignRestricted { j, upper_positive }, deriv.clone())
                .with_breaks(breaks.clone())
                .with_support(support_radius)
        })
        .collect();
    let v = (0..dim)
        .map(|j| {
            SeparableFunction::new(Angular::Derivative(j), deriv.clone())
                .with_breaks(breaks.clone())
        })
        .collect();
    Ok(TestFunctions {
        d,
        v,
        sign: ratio.sign,
        psi0_at_1: ratio.value,
        support_radius,
        breaks,
    })
}

/// Quadratic-form evidence behind the Morse index bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionReport {
    pub params: ProblemParams,
    pub scheme: Scheme,
    pub sign_convention: BoundarySign,
    pub psi0_at_1: f64,
    pub support_radius: Option<f64>,
    /// `E_{s,L}(d_j, d_j)` for `j = 1..N`.
    pub self_forms: Vec<Estimate>,
    /// `E_{s,L}(d_j, d_k)` for `j < k` (1-based indices).
    pub cross_forms: Vec<(usize, usize, Estimate)>,
    /// `E_s(v^j, d_k) - ∫ f'(u) v^j d_k` (1-based indices). The error adds the
    /// quadrature error and the change of the defect from truncation `K-2` to `K`.
    pub weak_identity_defects: Vec<(usize, usize, Estimate)>,
    /// Quadrature-only part of each defect error.
    pub weak_identity_quadrature_err: Vec<f64>,
    /// `E_{s,L}(d_j, φ_{1,L})`.
    pub phi_forms: Vec<Estimate>,
    pub lambda1_l: f64,
    /// Largest Rayleigh quotient of `E_{s,L}` on `span{φ_{1,L}, d_1, …, d_N}`.
    pub rayleigh_bound: Estimate,
}

/// Evaluates the quadratic-form checks with the direct quadrature (`N = 1`)
/// or Monte Carlo (`N ≤ 2`).
pub fn test_function_checks(
    params: &ProblemParams,
    sol: &RadialSolution,
    rule: &QuadratureRule,
) -> Result<TestFunctionReport> {
    let dim = params.dim();
    if dim > 2 || (dim == 2 && rule.scheme != Scheme::MonteCarlo) {
        return Err(Error::DimensionUnsupported(dim));
    }
    check_converged(sol)?;
    let tf = build_test_functions(sol)?;
    let k = sol.basis.k;
    let first = first_linearized_eigen(params, sol, k)?;
    if first.ell != 0 {
        return Err(Error::InvalidParams(format!(
            "first eigenvalue of L sits at ℓ = {}",
            first.ell
        )));
    }
    let potential = linearized_potential(sol).profile();
    let phi_profile = first.profile.clone();
    let phi = SeparableFunction::radial(Arc::new(move |r| phi_profile.eval(r)))
        .with_breaks(tf.breaks.clone());

    let mut stream = 0u64;
    let mut next_rule = || {
        stream += 1;
        rule.with_stream(rule.stream.wrapping_mul(64).wrapping_add(stream))
    };
    let form = |a: &SeparableFunction, b: &SeparableFunction, r: &QuadratureRule| {
        quadratic_form_l(&potential, a, b, params, r)
    };

    let mut self_forms = Vec::with_capacity(dim);
    for j in 0..dim {
        let r = next_rule();
        let est = if r.scheme == Scheme::MonteCarlo {
            let spec = McSpec {
                dim,
                s: params.s(),
                samples: r.budget,
                seed: r.seed,
                stream: r.stream,
            };
            mc_reflected_form(&spec, j, &tf.v[j], &tf.d[j])
        } else {
            form(&tf.d[j], &tf.d[j], &r)?
        };
        self_forms.push(est);
    }
    let mut cross_forms = Vec::new();
    for j in 0..dim {
        for q in j + 1..dim {
            cross_forms.push((j + 1, q + 1, form(&tf.d[j], &tf.d[q], &next_rule())?));
        }
    }
    let coarse = coarse_solution(params, sol)?;
    let coarse_tf = build_test_functions(&coarse)?;
    let coarse_potential = linearized_potential(&coarse).profile();
    let mut weak_identity_defects = Vec::new();
    let mut weak_identity_quadrature_err = Vec::new();
    for j in 0..dim {
        for q in 0..dim {
            let r = next_rule();
            let fine = form(&tf.v[j], &tf.d[q], &r)?;
            let rough = quadratic_form_l(
                &coarse_potential,
                &coarse_tf.v[j],
                &coarse_tf.d[q],
                params,
                &r,
            )?;
            weak_identity_quadrature_err.push(fine.err);
            let err = fine.err + (fine.value - rough.value).abs();
            weak_identity_defects.push((j + 1, q + 1, Estimate::new(fine.value, err)));
        }
    }
    let phi_forms = (0..dim)
        .map(|j| form(&tf.d[j], &phi, &next_rule()))
        .collect::<Result<Vec<_>>>()?;

    let sphere = sphere_area(dim);
    let d_norm_sq = sphere / dim as f64 * tf.signed_part_sq(sol);
    let phi_norm_sq = sphere * first.profile.l2_sq_reduced();
    let m = dim + 1;
    let mut e = DMatrix::zeros(m, m);
    let mut e_err = DMatrix::zeros(m, m);
    let mut g = DMatrix::zeros(m, m);
    e[(0, 0)] = first.lambda * phi_norm_sq;
    e_err[(0, 0)] = first.err * phi_norm_sq;
    g[(0, 0)] = phi_norm_sq;
    for j in 0..dim {
        g[(j + 1, j + 1)] = d_norm_sq;
        e[(j + 1, j + 1)] = self_forms[j].value;
        e_err[(j + 1, j + 1)] = self_forms[j].err;
        e[(0, j + 1)] = phi_forms[j].value;
        e[(j + 1, 0)] = phi_forms[j].value;
        e_err[(0, j + 1)] = phi_forms[j].err;
        e_err[(j + 1, 0)] = phi_forms[j].err;
    }
    for &(j, q, est) in &cross_forms {
        e[(j, q)] = est.value;
        e[(q, j)] = est.value;
        e_err[(j, q)] = est.err;
        e_err[(q, j)] = est.err;
    }
    let rayleigh_bound = max_rayleigh(&e, &e_err, &g)?;
    Ok(TestFunctionReport {
        params: *params,
        scheme: rule.scheme,
        sign_convention: tf.sign,
        psi0_at_1: tf.psi0_at_1,
        support_radius: tf.support_radius,
        self_forms,
        cross_forms,
        weak_identity_defects,
        weak_identity_quadrature_err,
        phi_forms,
        lambda1_l: first.lambda,
        rayleigh_bound,
    })
}

/// The same solution branch at truncation `K - 2`.
fn coarse_solution(params: &ProblemParams, sol: &RadialSolution) -> Result<RadialSolution> {
    let k = sol.basis.k;
    if k < 4 {
        return Err(Error::InvalidParams(format!(
            "truncation K = {k} too small for a convergence estimate"
        )));
    }
    let mut opts = SolveOptions::new(sol.nodal_count, k - 2);
    opts.newton_tol = sol.tolerance;
    solve_radial_sign_changing(params, &sol.spec, &opts)
}

/// Largest eigenvalue of the pencil `(E, G)` with `G` diagonal positive, and a
/// perturbation bound `‖ΔE‖_F / λ_min(G)` from the entrywise errors.
fn max_rayleigh(e: &DMatrix<f64>, e_err: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<Estimate> {
    let m = e.nrows();
    let scale: Vec<f64> = (0..m).map(|i| g[(i, i)].sqrt()).collect();
    if scale.iter().any(|v| v.is_nan() || *v <= 0.0) {
        return Err(Error::MassNotPD);
    }
    let c = DMatrix::from_fn(m, m, |i, j| e[(i, j)] / (scale[i] * scale[j]));
    let top = c.symmetric_eigenvalues().max();
    let gmin = (0..m).map(|i| g[(i, i)]).fold(f64::INFINITY, f64::min);
    Ok(Estimate::new(top, e_err.norm() / gmin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::radial_eigenvalues;
    use crate::semilinear::{solve_radial_sign_changing, SolveOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn linear_solution(
        n: usize,
        s: f64,
        index: usize,
        k: usize,
    ) -> (ProblemParams, RadialSolution, f64) {
        let params = ProblemParams::new(n, s).unwrap();
        let lam = radial_eigenvalues(n, s, k).unwrap().eigenvalues[index];
        let sol = solve_radial_sign_changing(
            &params,
            &NonlinearitySpec::linear(lam),
            &SolveOptions::new(index, k),
        )
        .unwrap();
        (params, sol, lam)
    }

    fn power_solution(n: usize, s: f64, k: usize) -> (ProblemParams, RadialSolution) {
        let params = ProblemParams::new(n, s).unwrap();
        let sol = solve_radial_sign_changing(
            &params,
            &NonlinearitySpec::power(1.0, 3.0),
            &SolveOptions::new(1, k),
        )
        .unwrap();
        (params, sol)
    }

    #[test]
    fn linear_blocks_are_shifted_radial_spectra() {
        let (params, sol, lam) = linear_solution(2, 0.5, 1, 12);
        for ell in 0..3 {
            let pair = assemble_linearized(&params, &sol, ell, 12).unwrap();
            let eig = solve_radial_eigs(&pair).unwrap();
            let free = radial_eigenvalues(2 + 2 * ell, 0.5, 12).unwrap();
            for (a, b) in eig.eigenvalues.iter().zip(&free.eigenvalues).take(6) {
                assert!(
                    (a - (b - lam)).abs() < 1e-9 * b.abs().max(1.0),
                    "ℓ={ell}: {a} vs {}",
                    b - lam
                );
            }
        }
    }

    #[test]
    fn ground_state_has_index_zero_and_one_marginal_mode() {
        let (params, sol, _) = linear_solution(2, 0.75, 0, 16);
        let rep = morse_index_auto(&params, &sol, 16).unwrap();
        assert_eq!(rep.total_index, 0);
        assert_eq!(rep.blocks[0].marginal_count, 1);
        assert_eq!(rep.marginal_total, 1);
        assert_eq!(rep.theorem_check, TheoremCheck::NotApplicable);
        let first = first_linearized_eigen(&params, &sol, 16).unwrap();
        assert!(
            first.lambda.abs() <= first.err,
            "{} ± {}",
            first.lambda,
            first.err
        );
    }

    #[test]
    fn gate_is_recorded_for_low_blocks() {
        let (params, sol) = power_solution(1, 0.75, 12);
        let rep = morse_index(&params, &sol, 1, 12).unwrap();
        assert_eq!(rep.oracle_gate.len(), 6);
        for &(_, _, _, closed, oracle, err) in &rep.oracle_gate {
            assert!((closed - oracle).abs() <= err.max(1e-4 * closed.abs().max(1.0)));
        }
        assert_eq!(
            rep.total_index,
            rep.blocks
                .iter()
                .map(|b| b.multiplicity * b.negative_count)
                .sum::<usize>()
        );
    }

    #[test]
    fn power_solution_meets_the_index_bound() {
        let (params, sol) = power_solution(2, 0.75, 16);
        let rep = morse_index_auto(&params, &sol, 16).unwrap();
        assert_eq!(rep.theorem_check, TheoremCheck::Passes);
        assert!(rep.total_index >= 3);
        assert!(rep.lambda1_l < 0.0 && rep.lambda1_l_is_radial);
        let first = first_linearized_eigen(&params, &sol, 16).unwrap();
        assert_eq!(first.ell, 0);
        assert!(first.sign_definite);
    }

    #[test]
    fn truncation_unsafe_when_blocks_stop_early() {
        let (params, sol) = power_solution(2, 0.75, 12);
        assert!(matches!(
            morse_index(&params, &sol, 0, 12),
            Err(Error::TruncationUnsafe(_))
        ));
    }

    #[test]
    fn test_functions_have_the_reflection_symmetries() {
        for n in [2usize, 3] {
            let (_, sol) = power_solution(n, 0.75, 12);
            let tf = build_test_functions(&sol).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            for _ in 0..1000 {
                let x: Vec<f64> = (0..n).map(|_| rng.random_range(-0.6..0.6)).collect();
                for j in 0..n {
                    let mut xr = x.clone();
                    xr[j] = -xr[j];
                    assert_eq!(tf.d[j].eval(&xr), -tf.d[j].eval(&x));
                    for k in (0..n).filter(|&k| k != j) {
                        let mut xk = x.clone();
                        xk[k] = -xk[k];
                        assert_eq!(tf.d[j].eval(&xk), tf.d[j].eval(&x));
                    }
                }
            }
        }
    }

    #[test]
    fn test_functions_vanish_beyond_support_radius() {
        let (_, sol) = power_solution(2, 0.5, 12);
        let tf = build_test_functions(&sol).unwrap();
        let rs = tf.support_radius.expect("nonzero boundary ratio");
        assert!(rs < 1.0);
        for i in 1..200 {
            let r = rs + (1.0 - rs) * i as f64 / 200.0;
            for th in [0.3f64, 1.2, 2.5, 4.0] {
                assert_eq!(tf.d[0].eval(&[r * th.cos(), r * th.sin()]), 0.0);
            }
        }
    }

    #[test]
    fn quadrature_checks_need_low_dimension() {
        let (params, sol) = power_solution(3, 0.75, 10);
        let err = test_function_checks(&params, &sol, &QuadratureRule::tensor(2)).unwrap_err();
        assert_eq!(err, Error::DimensionUnsupported(3));
    }

    #[test]
    fn one_dimensional_checks_reproduce_the_negative_direction() {
        let (params, sol) = power_solution(1, 0.75, 16);
        let rep = test_function_checks(&params, &sol, &QuadratureRule::tensor(2)).unwrap();
        assert!(rep.self_forms[0].negative_beyond(3.0));
        assert!(rep.phi_forms[0].zero_within(3.0));
        assert!(rep.rayleigh_bound.negative_beyond(3.0));
        // the bound dominates the second eigenvalue of L
        let morse = morse_index_auto(&params, &sol, 16).unwrap();
        let mut lows: Vec<f64> = Vec::new();
        for ell in 0..=1 {
            let eig =
                solve_radial_eigs(&assemble_linearized(&params, &sol, ell, 16).unwrap()).unwrap();
            lows.extend(eig.eigenvalues.iter().take(3));
        }
        lows.sort_by(f64::total_cmp);
        assert!(rep.rayleigh_bound.value >= lows[1] - rep.rayleigh_bound.err);
        assert!(morse.total_index >= 2);
    }
}
