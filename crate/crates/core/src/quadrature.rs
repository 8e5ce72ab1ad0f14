//! Direct evaluation of the singular-kernel forms.
//!
//! Everything here works from the kernel `c(N,s)|x-y|^{-N-2s}` itself and
//! never from the closed-form spectral action used in [`crate::radial`]. It is
//! the reference the rest of the crate is checked against.
//!
//! Three evaluation routes are provided:
//!
//! * radial reduction: for radial functions in `R^d` the angular integral of
//!   the kernel is done first ([`radial_kernel`]), leaving a 2-D integral over
//!   `(r, ρ) ∈ [0,1]²` plus an exterior tail ([`exterior_tail`]);
//! * a direct 1-D rule on `[-1,1]` for arbitrary functions in dimension one;
//! * stratified Monte Carlo in dimensions one and two.
//!
//! The deterministic routes share a graded tensor Gauss engine ([`PairRule`])
//! that integrates `∫∫ (f(x)-f(y))(g(x)-g(y)) κ(x,y)` with the diagonal
//! singularity resolved in `(x, h = x - y)` coordinates.

use crate::error::{Error, Result};
use crate::params::{frac_constant, ProblemParams};
use crate::radial::RadialProfile;
use crate::special::{
    gauss_jacobi, gauss_legendre, graded_rule, sphere_area, tanh_sinh, DeNode, Rule,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// A value with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
}

impl Estimate {
    pub fn new(value: f64, err: f64) -> Self {
        Self { value, err }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, err: 0.0 }
    }

    pub fn scaled(self, c: f64) -> Self {
        Self {
            value: self.value * c,
            err: self.err * c.abs(),
        }
    }

    pub fn minus(self, other: Estimate) -> Self {
        Self {
            value: self.value - other.value,
            err: self.err + other.err,
        }
    }

    pub fn plus(self, other: Estimate) -> Self {
        Self {
            value: self.value + other.value,
            err: self.err + other.err,
        }
    }

    /// Strictly below zero by more than `bars` error bars.
    pub fn negative_beyond(&self, bars: f64) -> bool {
        self.value + bars * self.err < 0.0
    }

    /// Within `bars` error bars of zero.
    pub fn zero_within(&self, bars: f64) -> bool {
        self.value.abs() <= bars * self.err
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    TensorDesingularized,
    AdaptiveSubdivision,
    MonteCarlo,
}

/// How a form is to be evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub scheme: Scheme,
    /// Refinement level for the deterministic schemes, sample count for Monte Carlo.
    pub budget: usize,
    pub seed: u64,
    /// Stream index folded into the Monte Carlo seed.
    pub stream: u64,
    pub error_target: Option<f64>,
    /// Multiplier on `c(N,s)`; 1 outside of tests.
    pub kernel_scale: f64,
}

impl QuadratureRule {
    pub fn tensor(level: usize) -> Self {
        Self {
            scheme: Scheme::TensorDesingularized,
            budget: level.max(1),
            seed: 0,
            stream: 0,
            error_target: None,
            kernel_scale: 1.0,
        }
    }

    pub fn adaptive(max_level: usize, target: f64) -> Self {
        Self {
            scheme: Scheme::AdaptiveSubdivision,
            budget: max_level.max(1),
            seed: 0,
            stream: 0,
            error_target: Some(target),
            kernel_scale: 1.0,
        }
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        Self {
            scheme: Scheme::MonteCarlo,
            budget: samples.max(1),
            seed,
            stream: 0,
            error_target: None,
            kernel_scale: 1.0,
        }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    pub fn with_kernel_scale(self, kernel_scale: f64) -> Self {
        Self {
            kernel_scale,
            ..self
        }
    }

    fn check_target(&self, est: Estimate) -> Result<Estimate> {
        match self.error_target {
            Some(t) if est.err > t => Err(Error::BudgetExceeded {
                achieved: est.err,
                target: t,
            }),
            _ => Ok(est),
        }
    }
}

/// Level and tolerance for assembly-time oracle checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleBudget {
    pub level: usize,
    pub rel_tol: f64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            level: 2,
            rel_tol: 1e-4,
        }
    }
}

// ---------------------------------------------------------------------------
// kernels

fn de_nodes() -> &'static [DeNode] {
    static NODES: OnceLock<Vec<DeNode>> = OnceLock::new();
    NODES.get_or_init(|| tanh_sinh(1.0 / 24.0))
}

/// `K_d(r,ρ) = ∫_{S^{d-1}} |r e - ρ η|^{-d-2s} dη`.
pub fn radial_kernel(d: usize, s: f64, r: f64, rho: f64) -> f64 {
    let diff = (r - rho).abs();
    radial_kernel_with_gap(d, s, r, rho, diff)
}

/// [`radial_kernel`] with `|r-ρ|` supplied separately, so that nearly
/// coincident radii keep full relative precision.
pub fn radial_kernel_with_gap(d: usize, s: f64, r: f64, rho: f64, gap: f64) -> f64 {
    match d {
        1 => gap.powf(-1.0 - 2.0 * s) + (r + rho).powf(-1.0 - 2.0 * s),
        _ => radial_kernel_numeric(d, s, r, rho, gap),
    }
}

/// Closed form of `K_3`, kept as a reference for the numeric route.
pub fn radial_kernel_d3(s: f64, r: f64, rho: f64) -> f64 {
    let e = -1.0 - 2.0 * s;
    2.0 * PI * ((r - rho).abs().powf(e) - (r + rho).powf(e)) / ((1.0 + 2.0 * s) * r * rho)
}

/// Angular integral reduced to
/// `|S^{d-2}| 2^{d-1} (4rρ)^{-(d-1)/2} |r-ρ|^{-1-2s} I(ε)` with
/// `ε = |r-ρ| / (2√(rρ))` and
/// `I(ε) = ∫_0^{atan(1/ε)} sin^{d-2}ψ cos^{2s}ψ (1-ε² tan²ψ)^{(d-3)/2} dψ`.
fn radial_kernel_numeric(d: usize, s: f64, r: f64, rho: f64, gap: f64) -> f64 {
    let prod = 4.0 * r * rho;
    if prod <= 0.0 {
        // one radius at the origin: the kernel is |S^{d-1}| max(r,ρ)^{-d-2s}
        return sphere_area(d) * r.max(rho).powf(-(d as f64) - 2.0 * s);
    }
    let eps = gap / prod.sqrt();
    let psi_max = (1.0 / eps).atan();
    let half_exp = 0.5 * (d as f64 - 3.0);
    let mut integral = 0.0;
    for node in de_nodes() {
        let psi = psi_max * node.x;
        let gap_to_end = psi_max * node.from_right;
        let (sn, cs) = psi.sin_cos();
        // 1 - ε² tan²ψ = (1+ε²) sin(ψm-ψ) sin(ψm+ψ) / cos²ψ
        let end_factor = if half_exp == 0.0 {
            1.0
        } else {
            ((1.0 + eps * eps) * gap_to_end.sin() * (psi_max + psi).sin() / (cs * cs))
                .powf(half_exp)
        };
        let val = sn.powi(d as i32 - 2) * cs.powf(2.0 * s) * end_factor;
        integral += node.weight * val;
    }
    integral *= psi_max;
    sphere_area(d - 1)
        * 2f64.powi(d as i32 - 1)
        * prod.powf(-0.5 * (d as f64 - 1.0))
        * gap.powf(-1.0 - 2.0 * s)
        * integral
}

/// `T_d(r) = ∫_{|y|>1} |x-y|^{-d-2s} dy` for `|x| = r < 1`.
pub fn exterior_tail(d: usize, s: f64, r: f64) -> f64 {
    if d == 1 {
        return ((1.0 - r).powf(-2.0 * s) + (1.0 + r).powf(-2.0 * s)) / (2.0 * s);
    }
    if r == 0.0 {
        return sphere_area(d) / (2.0 * s);
    }
    // ρ = r + (1-r)/t, t ∈ (0,1]
    let one_minus = 1.0 - r;
    let mut total = 0.0;
    for node in de_nodes() {
        let t = node.x;
        if r * t < 1e-6 * one_minus {
            // far field: K = |S^{d-1}| ρ^{-d-2s} (1 + O((r/ρ)²))
            let ratio = 1.0 + r * t / one_minus;
            total += node.weight
                * sphere_area(d)
                * one_minus.powf(-2.0 * s)
                * t.powf(2.0 * s - 1.0)
                * ratio.powf(-1.0 - 2.0 * s);
            continue;
        }
        let gap = one_minus / t;
        let rho = r + gap;
        let k = radial_kernel_with_gap(d, s, r, rho, gap);
        total += node.weight * k * rho.powi(d as i32 - 1) * one_minus / (t * t);
    }
    total
}

// ---------------------------------------------------------------------------
// graded pair rule

/// Nodes for `∫∫_{[lo,hi]²} (f(x)-f(y))(g(x)-g(y)) κ(x,y) dx dy + ∫ f g τ(x) dx`.
///
/// Pair nodes cover the lower triangle `y < x` and carry the factor 2.
#[derive(Debug, Clone)]
pub struct PairRule {
    nodes: Vec<f64>,
    /// `(i, j, w)` with both points on the node table.
    off: Vec<(u32, u32, f64)>,
    /// `(i, y, w)` for the diagonal cells, where `y` is off the table.
    diag: Vec<(u32, f64, f64)>,
    singles: Vec<(u32, f64)>,
}

fn level_params(level: usize) -> (usize, usize, f64) {
    (4 + 2 * level, 6 + 3 * level, 0.2)
}

/// Rule on `[0,1]` for integrands behaving like `t^{beta}` at `0`, graded at both ends.
/// The innermost left cell uses Gauss–Jacobi with that weight divided back out,
/// so the grading toward `0` can stay shallow.
fn gap_rule(level: usize, beta: f64) -> Vec<(f64, f64)> {
    let (q, layers, sigma) = level_params(level);
    let gl = gauss_legendre(q);
    let inner_layers = 4 + level;
    let h = 0.5 * sigma.powi(inner_layers as i32);
    let mut out: Vec<(f64, f64)> = graded_rule(0.0, 0.5, true, false, inner_layers, sigma, &gl)
        .into_iter()
        .filter(|&(t, _)| t > h)
        .collect();
    out.extend(graded_rule(0.5, 1.0, false, true, layers, sigma, &gl));
    let gj = gauss_jacobi(q, 0.0, beta);
    let scale = (0.5 * h).powf(1.0 + beta);
    for (x, w) in gj.nodes.iter().zip(&gj.weights) {
        let t = 0.5 * h * (1.0 + x);
        out.push((t, scale * w * t.powf(-beta)));
    }
    out
}

impl PairRule {
    /// `breaks` must be sorted and include both interval ends. `kernel(x, y, x-y)`
    /// is called with `x > y`; near the diagonal the integrand is expected to
    /// scale like `(x-y)^{gap_exponent}`.
    pub fn build(
        breaks: &[f64],
        level: usize,
        gap_exponent: f64,
        kernel: &(dyn Fn(f64, f64, f64) -> f64 + Sync),
        tail: &(dyn Fn(f64) -> f64 + Sync),
    ) -> Self {
        let (q, layers, sigma) = level_params(level);
        let gl: Rule = gauss_legendre(q);
        let cells: Vec<(f64, f64)> = breaks
            .windows(2)
            .map(|w| (w[0], w[1]))
            .filter(|c| c.1 > c.0)
            .collect();
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut ranges = Vec::new();
        for &(a, b) in &cells {
            let start = nodes.len();
            for (x, w) in graded_rule(a, b, true, true, layers, sigma, &gl) {
                nodes.push(x);
                weights.push(w);
            }
            ranges.push(start..nodes.len());
        }
        let unit = gap_rule(level, gap_exponent.max(-0.99));
        let blocks: Vec<(usize, usize)> = (0..cells.len())
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .collect();
        let off = blocks
            .par_iter()
            .flat_map_iter(|&(ci, cj)| {
                let mut out = Vec::with_capacity(ranges[ci].len() * ranges[cj].len());
                for i in ranges[ci].clone() {
                    for j in ranges[cj].clone() {
                        let (x, y) = (nodes[i], nodes[j]);
                        if x <= y {
                            continue;
                        }
                        out.push((
                            i as u32,
                            j as u32,
                            2.0 * weights[i] * weights[j] * kernel(x, y, x - y),
                        ));
                    }
                }
                out
            })
            .collect();
        let diag = (0..cells.len())
            .into_par_iter()
            .flat_map_iter(|c| {
                let a = cells[c].0;
                let mut out = Vec::with_capacity(ranges[c].len() * unit.len());
                for i in ranges[c].clone() {
                    let x = nodes[i];
                    let span = x - a;
                    if span <= 0.0 {
                        continue;
                    }
                    for &(tau, wt) in &unit {
                        let gap = span * tau;
                        out.push((
                            i as u32,
                            x - gap,
                            2.0 * weights[i] * wt * span * kernel(x, x - gap, gap),
                        ));
                    }
                }
                out
            })
            .collect();
        let singles = nodes
            .iter()
            .zip(&weights)
            .enumerate()
            .map(|(i, (&x, &w))| (i as u32, w * tail(x)))
            .filter(|(_, w)| w.is_finite())
            .collect();
        Self {
            nodes,
            off,
            diag,
            singles,
        }
    }

    /// Value and the sum of absolute contributions (a rounding-error scale).
    pub fn apply(
        &self,
        f: &(dyn Fn(f64) -> f64 + Sync),
        g: &(dyn Fn(f64) -> f64 + Sync),
    ) -> (f64, f64) {
        let fv: Vec<f64> = self.nodes.par_iter().map(|&x| f(x)).collect();
        let gv: Vec<f64> = self.nodes.par_iter().map(|&x| g(x)).collect();
        let add = |(a, b): (f64, f64), (c, d): (f64, f64)| (a + c, b + d);
        let off = self
            .off
            .par_chunks(8192)
            .map(|chunk| {
                chunk.iter().fold((0.0, 0.0), |(acc, abs), &(i, j, w)| {
                    let (i, j) = (i as usize, j as usize);
                    let term = w * (fv[i] - fv[j]) * (gv[i] - gv[j]);
                    (acc + term, abs + term.abs())
                })
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold((0.0, 0.0), add);
        let diag = self
            .diag
            .par_chunks(4096)
            .map(|chunk| {
                chunk.iter().fold((0.0, 0.0), |(acc, abs), &(i, y, w)| {
                    let i = i as usize;
                    let term = w * (fv[i] - f(y)) * (gv[i] - g(y));
                    (acc + term, abs + term.abs())
                })
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold((0.0, 0.0), add);
        let (mut value, mut abs) = add(off, diag);
        for &(i, w) in &self.singles {
            let uv = fv[i as usize] * gv[i as usize];
            if uv != 0.0 {
                value += w * uv;
                abs += (w * uv).abs();
            }
        }
        (value, abs)
    }

    pub fn len(&self) -> usize {
        self.off.len() + self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn combine(coarse: f64, fine: f64, scale: f64) -> Estimate {
    let err = (fine - coarse).abs() + 1e-13 * scale.max(fine.abs());
    Estimate::new(fine, err)
}

/// Radial-reduction rule for dimension `d`, at two consecutive levels.
#[derive(Debug)]
pub struct RadialPairRule {
    pub d: usize,
    pub s: f64,
    pub level: usize,
    coarse: PairRule,
    fine: PairRule,
}

impl RadialPairRule {
    pub fn build(d: usize, s: f64, level: usize) -> Self {
        let dm1 = d as i32 - 1;
        let kernel = move |x: f64, y: f64, gap: f64| {
            radial_kernel_with_gap(d, s, x, y, gap) * (x * y).powi(dm1)
        };
        let tail = move |x: f64| 2.0 * exterior_tail(d, s, x) * x.powi(dm1);
        let breaks = [0.0, 1.0];
        Self {
            d,
            s,
            level,
            coarse: PairRule::build(&breaks, level, 1.0 - 2.0 * s, &kernel, &tail),
            fine: PairRule::build(&breaks, level + 1, 1.0 - 2.0 * s, &kernel, &tail),
        }
    }

    /// Shared instance per `(d, s, level)`.
    pub fn cached(d: usize, s: f64, level: usize) -> Arc<RadialPairRule> {
        type Cache = Mutex<HashMap<(usize, u64, usize), Arc<RadialPairRule>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let key = (d, s.to_bits(), level);
        if let Some(rule) = cache.lock().unwrap().get(&key) {
            return rule.clone();
        }
        let rule = Arc::new(Self::build(d, s, level));
        cache.lock().unwrap().entry(key).or_insert(rule).clone()
    }

    /// `E_s(f,g) / |S^{d-1}|` for radial profiles `f, g` in `R^d`.
    pub fn reduced_form(
        &self,
        f: &(dyn Fn(f64) -> f64 + Sync),
        g: &(dyn Fn(f64) -> f64 + Sync),
    ) -> Estimate {
        let c = frac_constant(self.d, self.s);
        let (coarse, _) = self.coarse.apply(f, g);
        let (fine, scale) = self.fine.apply(f, g);
        combine(0.5 * c * coarse, 0.5 * c * fine, 0.5 * c * scale)
    }

    /// `E_s(f,g)` in `R^d`.
    pub fn full_form(
        &self,
        f: &(dyn Fn(f64) -> f64 + Sync),
        g: &(dyn Fn(f64) -> f64 + Sync),
    ) -> Estimate {
        self.reduced_form(f, g).scaled(sphere_area(self.d))
    }
}

/// Reduced potential term `∫_0^1 V(r) f(r) g(r) r^{d-1} dr` on Gauss rules
/// graded toward `r = 1` and toward both sides of every break.
pub fn radial_potential_term(
    d: usize,
    _s: f64,
    potential: &(dyn Fn(f64) -> f64 + Sync),
    f: &(dyn Fn(f64) -> f64 + Sync),
    g: &(dyn Fn(f64) -> f64 + Sync),
    breaks: &[f64],
) -> Estimate {
    let mut cuts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|r| *r > 0.0 && *r < 1.0)
        .collect();
    cuts.extend([0.0, 1.0]);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let eval = |level: usize| {
        let (q, layers, sigma) = level_params(level);
        let gl = gauss_legendre(q);
        cuts.windows(2)
            .flat_map(|w| graded_rule(w[0], w[1], w[0] > 0.0, true, layers, sigma, &gl))
            .map(|(r, w)| w * potential(r) * f(r) * g(r) * r.powi(d as i32 - 1))
            .fold((0.0, 0.0), |(a, b), t| (a + t, b + t.abs()))
    };
    let (coarse, _) = eval(3);
    let (fine, scale) = eval(4);
    combine(coarse, fine, scale)
}

// ---------------------------------------------------------------------------
// separable functions

/// Angular factor of a [`SeparableFunction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Angular {
    /// `g(|x|)`
    Constant,
    /// `x_j g(|x|)` (0-based `j`)
    Coordinate(usize),
    /// `(x_j/|x|) g(|x|)`, the partial derivative of a radial function with `g = u'`
    Derivative(usize),
    /// Half-space restricted signed part of the `Derivative(j)` shape.
    /// `upper_positive`: positive part on `x_j > 0`, negative part on `x_j < 0`;
    /// otherwise the halves are swapped.
    SignRestricted { j: usize, upper_positive: bool },
}

/// `angular(x) · profile(|x|)`, vanishing outside the closed unit ball.
#[derive(Clone)]
pub struct SeparableFunction {
    pub angular: Angular,
    pub profile: RadialProfile,
    /// Radii in `(0,1)` where the profile (or its signed parts) is not smooth.
    pub radial_breaks: Vec<f64>,
    /// Radius beyond which the function vanishes, if any.
    pub support_radius: Option<f64>,
}

impl std::fmt::Debug for SeparableFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SeparableFunction")
            .field("angular", &self.angular)
            .field("radial_breaks", &self.radial_breaks)
            .field("support_radius", &self.support_radius)
            .finish()
    }
}

impl SeparableFunction {
    pub fn radial(profile: RadialProfile) -> Self {
        Self {
            angular: Angular::Constant,
            profile,
            radial_breaks: Vec::new(),
            support_radius: None,
        }
    }

    pub fn new(angular: Angular, profile: RadialProfile) -> Self {
        Self {
            angular,
            profile,
            radial_breaks: Vec::new(),
            support_radius: None,
        }
    }

    pub fn zero() -> Self {
        Self::radial(Arc::new(|_| 0.0))
    }

    pub fn with_breaks(mut self, breaks: Vec<f64>) -> Self {
        self.radial_breaks = breaks;
        self
    }

    pub fn with_support(mut self, radius: Option<f64>) -> Self {
        self.support_radius = radius;
        self
    }

    pub fn is_radial(&self) -> bool {
        self.angular == Angular::Constant
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r >= 1.0 {
            return 0.0;
        }
        if let Some(rs) = self.support_radius {
            if r > rs {
                return 0.0;
            }
        }
        match self.angular {
            Angular::Constant => (self.profile)(r),
            Angular::Coordinate(j) => x[j] * (self.profile)(r),
            Angular::Derivative(j) => {
                if r == 0.0 {
                    0.0
                } else {
                    x[j] / r * (self.profile)(r)
                }
            }
            Angular::SignRestricted { j, upper_positive } => {
                if r == 0.0 {
                    return 0.0;
                }
                let v = x[j] / r * (self.profile)(r);
                let upper = x[j] > 0.0;
                if upper == upper_positive {
                    if x[j] == 0.0 {
                        0.0
                    } else {
                        v.max(0.0)
                    }
                } else {
                    v.min(0.0)
                }
            }
        }
    }

    /// Angular parity class: 0 for even (radial), 1 + j for odd in `x_j`.
    fn parity(&self) -> Option<usize> {
        match self.angular {
            Angular::Constant => Some(0),
            Angular::Coordinate(j) | Angular::Derivative(j) => Some(1 + j),
            Angular::SignRestricted { j, .. } => Some(1 + j),
        }
    }
}

// ---------------------------------------------------------------------------
// public forms

/// Bilinear form `E_s(u,v)` over `R^N × R^N`, including the exterior contribution.
///
/// Deterministic rules use the direct 1-D rule when `N = 1` and radial or
/// ℓ=1 reductions when `N ≥ 2`; Monte Carlo is available for `N ≤ 2`.
pub fn bilinear_form(
    u: &SeparableFunction,
    v: &SeparableFunction,
    params: &ProblemParams,
    rule: &QuadratureRule,
) -> Result<Estimate> {
    let est = form_with_potential(u, v, params, rule, None)?;
    rule.check_target(est)
}

/// `E_{s,L}(v,w) = E_s(v,w) - ∫ f'(u) v w` with the radial potential `f'(u(|x|))`.
pub fn quadratic_form_l(
    potential: &RadialProfile,
    v: &SeparableFunction,
    w: &SeparableFunction,
    params: &ProblemParams,
    rule: &QuadratureRule,
) -> Result<Estimate> {
    let est = form_with_potential(v, w, params, rule, Some(potential))?;
    rule.check_target(est)
}

fn form_with_potential(
    u: &SeparableFunction,
    v: &SeparableFunction,
    params: &ProblemParams,
    rule: &QuadratureRule,
    potential: Option<&RadialProfile>,
) -> Result<Estimate> {
    let n = params.dim();
    let s = params.s();
    match rule.scheme {
        Scheme::MonteCarlo => {
            if n > 2 {
                return Err(Error::DimensionUnsupported(n));
            }
            let spec = McSpec {
                dim: n,
                s,
                samples: rule.budget,
                seed: rule.seed,
                stream: rule.stream,
            };
            Ok(mc_form(&spec, u, v, potential, rule.kernel_scale))
        }
        Scheme::TensorDesingularized | Scheme::AdaptiveSubdivision => {
            let eval = |level: usize| -> Result<Estimate> {
                if n == 1 {
                    Ok(line_form(s, u, v, potential, level, rule.kernel_scale))
                } else {
                    reduced_form(n, s, u, v, potential, level, rule.kernel_scale)
                }
            };
            if rule.scheme == Scheme::TensorDesingularized {
                return eval(rule.budget);
            }
            let target = rule.error_target.unwrap_or(0.0);
            let mut last = eval(1)?;
            for level in 2..=rule.budget {
                if last.err <= target {
                    break;
                }
                last = eval(level)?;
            }
            Ok(last)
        }
    }
}

/// `N ≥ 2` deterministic: radial × radial in `d = N`, coordinate × coordinate in `d = N + 2`.
fn reduced_form(
    n: usize,
    s: f64,
    u: &SeparableFunction,
    v: &SeparableFunction,
    potential: Option<&RadialProfile>,
    level: usize,
    kernel_scale: f64,
) -> Result<Estimate> {
    if u.parity() != v.parity() {
        return Ok(Estimate::exact(0.0));
    }
    let (d, angular_weight) = match (u.angular, v.angular) {
        (Angular::Constant, Angular::Constant) => (n, sphere_area(n)),
        (Angular::Coordinate(_), Angular::Coordinate(_)) => (n + 2, sphere_area(n) / n as f64),
        _ => return Err(Error::DimensionUnsupported(n)),
    };
    let rule = RadialPairRule::cached(d, s, level);
    let fu = |r: f64| radial_value(u, r);
    let fv = |r: f64| radial_value(v, r);
    let mut est = rule.reduced_form(&fu, &fv).scaled(kernel_scale);
    if let Some(p) = potential {
        let breaks: Vec<f64> = u
            .radial_breaks
            .iter()
            .chain(&v.radial_breaks)
            .chain(u.support_radius.iter())
            .chain(v.support_radius.iter())
            .copied()
            .collect();
        est = est.minus(radial_potential_term(d, s, p.as_ref(), &fu, &fv, &breaks));
    }
    Ok(est.scaled(angular_weight))
}

fn radial_value(f: &SeparableFunction, r: f64) -> f64 {
    if r >= 1.0 || f.support_radius.is_some_and(|rs| r > rs) {
        0.0
    } else {
        (f.profile)(r)
    }
}

/// Breakpoints on `[-1,1]` for the 1-D rule.
fn line_breaks(fs: &[&SeparableFunction]) -> Vec<f64> {
    let mut b = vec![-1.0, 0.0, 1.0];
    for f in fs {
        for &r in f.radial_breaks.iter().chain(f.support_radius.iter()) {
            if r > 0.0 && r < 1.0 {
                b.push(r);
                b.push(-r);
            }
        }
    }
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    b
}

/// Direct 1-D evaluation on `[-1,1]` at `level` and `level + 1`.
fn line_form(
    s: f64,
    u: &SeparableFunction,
    v: &SeparableFunction,
    potential: Option<&RadialProfile>,
    level: usize,
    kernel_scale: f64,
) -> Estimate {
    let breaks = line_breaks(&[u, v]);
    let c = frac_constant(1, s) * kernel_scale;
    let e = -1.0 - 2.0 * s;
    let kernel = move |_x: f64, _y: f64, gap: f64| gap.powf(e);
    let tail = move |x: f64| 2.0 * exterior_tail(1, s, x.abs());
    let fu = |x: f64| u.eval(&[x]);
    let fv = |x: f64| v.eval(&[x]);
    let value = |lvl: usize| {
        let rule = PairRule::build(&breaks, lvl, 1.0 - 2.0 * s, &kernel, &tail);
        let (pair, abs) = rule.apply(&fu, &fv);
        let mut val = 0.5 * c * pair;
        let mut scale = 0.5 * c * abs;
        if let Some(p) = potential {
            let (q, layers, sigma) = level_params(lvl + 1);
            let gl = gauss_legendre(q);
            for w in breaks.windows(2) {
                for (x, wt) in graded_rule(w[0], w[1], true, true, layers, sigma, &gl) {
                    let term = wt * p(x.abs()) * fu(x) * fv(x);
                    val -= term;
                    scale += term.abs();
                }
            }
        }
        (val, scale)
    };
    let (coarse, _) = value(level);
    let (fine, scale) = value(level + 1);
    combine(coarse, fine, scale)
}

/// Reduced radial route for radial functions in `R^N`; exposed for the
/// dimension-reduction consistency check.
pub fn bilinear_form_radial(
    u: &SeparableFunction,
    v: &SeparableFunction,
    params: &ProblemParams,
    level: usize,
) -> Result<Estimate> {
    if !u.is_radial() || !v.is_radial() {
        return Err(Error::InvalidParams(
            "radial route needs radial functions".into(),
        ));
    }
    reduced_form(params.dim(), params.s(), u, v, None, level, 1.0)
}

// ---------------------------------------------------------------------------
// Monte Carlo

/// Sampling setup for the Monte Carlo routes.
#[derive(Debug, Clone, Copy)]
pub struct McSpec {
    pub dim: usize,
    pub s: f64,
    pub samples: usize,
    pub seed: u64,
    pub stream: u64,
}

/// Domain for the first point of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Ball,
    /// `{x ∈ B : x_j > 0}`
    HalfBall(usize),
}

type Point = [f64; 2];

const CHUNK: usize = 1 << 15;

fn ball_volume(dim: usize) -> f64 {
    sphere_area(dim) / dim as f64
}

/// Strata for the first point: quadrants (N = 2) or signs (N = 1), restricted to `region`.
fn strata(dim: usize, region: Region) -> Vec<(f64, f64)> {
    // angle ranges for N = 2; for N = 1 the "angle" 0 means x > 0 and π means x < 0
    let all: Vec<(f64, f64)> = if dim == 1 {
        vec![(0.0, 0.0), (PI, PI)]
    } else {
        (0..4)
            .map(|k| (k as f64 * 0.5 * PI, (k + 1) as f64 * 0.5 * PI))
            .collect()
    };
    all.into_iter()
        .filter(|&(a, b)| match region {
            Region::Ball => true,
            Region::HalfBall(j) => {
                let mid = 0.5 * (a + b);
                let coord = if dim == 1 || j == 0 {
                    mid.cos()
                } else {
                    mid.sin()
                };
                coord > 0.0
            }
        })
        .collect()
}

/// Mixture density for the radius of the first point: half volume-uniform,
/// half concentrated at the boundary like `(1-r)^{s-1}`.
struct RadialSampler {
    dim: usize,
    s: f64,
}

impl RadialSampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let u: f64 = rng.random();
        let w: f64 = rng.random();
        if u < 0.5 {
            w.powf(1.0 / self.dim as f64)
        } else {
            1.0 - w.powf(1.0 / self.s)
        }
    }

    /// Density of the radius on `[0,1]`.
    fn density(&self, r: f64) -> f64 {
        let d = self.dim as f64;
        0.5 * d * r.powf(d - 1.0) + 0.5 * self.s * (1.0 - r).powf(self.s - 1.0)
    }
}

/// Offset density for the second point: `|h|` with density `β t^{β-1} / 2^β` on (0,2).
struct OffsetSampler {
    dim: usize,
    beta: f64,
}

impl OffsetSampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Point {
        let w: f64 = rng.random();
        let t = 2.0 * w.powf(1.0 / self.beta);
        if self.dim == 1 {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            [sign * t, 0.0]
        } else {
            let th: f64 = rng.random::<f64>() * 2.0 * PI;
            [t * th.cos(), t * th.sin()]
        }
    }

    fn density(&self, h: &Point) -> f64 {
        let t = (h[0] * h[0] + h[1] * h[1]).sqrt();
        if t >= 2.0 || t == 0.0 {
            return 0.0;
        }
        let ft = self.beta * t.powf(self.beta - 1.0) / 2f64.powf(self.beta);
        ft / (sphere_area(self.dim) * t.powi(self.dim as i32 - 1))
    }
}

fn sample_uniform_ball(dim: usize, rng: &mut ChaCha8Rng) -> Point {
    if dim == 1 {
        [2.0 * rng.random::<f64>() - 1.0, 0.0]
    } else {
        let r = rng.random::<f64>().sqrt();
        let th = rng.random::<f64>() * 2.0 * PI;
        [r * th.cos(), r * th.sin()]
    }
}

fn norm(p: &Point) -> f64 {
    (p[0] * p[0] + p[1] * p[1]).sqrt()
}

/// Stratified estimate of
/// `∫_{region} [ ∫_B pair(x,y) dy + single(x) ] dx`.
///
/// `pair` must vanish where the integrand is not defined (outside the domain
/// of integration in `y`).
pub fn mc_integral(
    spec: &McSpec,
    region: Region,
    pair: &(dyn Fn(&Point, &Point) -> f64 + Sync),
    single: &(dyn Fn(&Point) -> f64 + Sync),
) -> Estimate {
    let dim = spec.dim;
    let strata = strata(dim, region);
    let per = (spec.samples / strata.len()).max(2);
    let radial = RadialSampler { dim, s: spec.s };
    let offset = OffsetSampler {
        dim,
        beta: 2.0 - 2.0 * spec.s,
    };
    let vol = ball_volume(dim);
    let jobs: Vec<(usize, usize, usize)> = strata
        .iter()
        .enumerate()
        .flat_map(|(k, _)| {
            let chunks = per.div_ceil(CHUNK);
            (0..chunks).map(move |c| (k, c, CHUNK.min(per - c * CHUNK)))
        })
        .collect();
    let sums: Vec<(usize, f64, f64, usize)> = jobs
        .par_iter()
        .map(|&(k, c, count)| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream((spec.stream << 24) | ((k as u64) << 16) | c as u64);
            let (a, b) = strata[k];
            let angle_range = if dim == 1 { 1.0 } else { b - a };
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let r = radial.sample(&mut rng);
                let x: Point = if dim == 1 {
                    [if a == 0.0 { r } else { -r }, 0.0]
                } else {
                    let th = a + rng.random::<f64>() * (b - a);
                    [r * th.cos(), r * th.sin()]
                };
                let px = if dim == 1 {
                    radial.density(r)
                } else {
                    radial.density(r) / (angle_range * r)
                };
                let y: Point = if rng.random::<bool>() {
                    let h = offset.sample(&mut rng);
                    [x[0] + h[0], x[1] + h[1]]
                } else {
                    sample_uniform_ball(dim, &mut rng)
                };
                let hy = [y[0] - x[0], y[1] - x[1]];
                let in_ball = if norm(&y) < 1.0 { 1.0 / vol } else { 0.0 };
                let qy = 0.5 * offset.density(&hy) + 0.5 * in_ball;
                let mut z = single(&x) / px;
                if qy > 0.0 {
                    let p = pair(&x, &y);
                    if p != 0.0 {
                        z += p / (px * qy);
                    }
                }
                s1 += z;
                s2 += z * z;
            }
            (k, s1, s2, count)
        })
        .collect();
    let mut total = 0.0;
    let mut var = 0.0;
    for k in 0..strata.len() {
        let (mut s1, mut s2, mut n) = (0.0, 0.0, 0usize);
        for &(kk, a, b, c) in &sums {
            if kk == k {
                s1 += a;
                s2 += b;
                n += c;
            }
        }
        let nf = n as f64;
        let mean = s1 / nf;
        let v = (s2 / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
        total += mean;
        var += v / nf;
    }
    Estimate::new(total, var.sqrt())
}

fn point_slice(p: &Point, dim: usize) -> &[f64] {
    &p[..dim]
}

/// Monte Carlo for `E_s(u,v) - ∫ V u v` in `N ≤ 2`.
fn mc_form(
    spec: &McSpec,
    u: &SeparableFunction,
    v: &SeparableFunction,
    potential: Option<&RadialProfile>,
    kernel_scale: f64,
) -> Estimate {
    let dim = spec.dim;
    let s = spec.s;
    let c = frac_constant(dim, s) * kernel_scale;
    let tail = TailTable::cached(dim, s);
    let e = -(dim as f64) - 2.0 * s;
    let pair = |x: &Point, y: &Point| {
        if norm(y) >= 1.0 {
            return 0.0;
        }
        let (ux, uy) = (u.eval(point_slice(x, dim)), u.eval(point_slice(y, dim)));
        let (vx, vy) = (v.eval(point_slice(x, dim)), v.eval(point_slice(y, dim)));
        let diff = (ux - uy) * (vx - vy);
        if diff == 0.0 {
            return 0.0;
        }
        let h = [x[0] - y[0], x[1] - y[1]];
        0.5 * c * diff * norm(&h).powf(e)
    };
    let single = |x: &Point| {
        let r = norm(x);
        let uv = u.eval(point_slice(x, dim)) * v.eval(point_slice(x, dim));
        if uv == 0.0 {
            return 0.0;
        }
        let mut val = c * uv * tail.eval(r);
        if let Some(p) = potential {
            val -= p(r) * uv;
        }
        val
    };
    mc_integral(spec, Region::Ball, &pair, &single)
}

/// One-signed Monte Carlo form of `E_{s,L}(d_j, d_j)` in `N ≤ 2`:
/// `2 ∫_{H+}∫_{H+} (v(x) - d(x)) d(y) [k(x-y) - k(σ_j x - y)] dx dy`
/// with `v = ∂_j u` and `k = c|z|^{-N-2s}`. Valid once the weak identity
/// `E_{s,L}(v^j, d_j) = 0` holds.
pub fn mc_reflected_form(
    spec: &McSpec,
    j: usize,
    derivative: &SeparableFunction,
    test: &SeparableFunction,
) -> Estimate {
    let dim = spec.dim;
    let c = frac_constant(dim, spec.s);
    let e = -(dim as f64) - 2.0 * spec.s;
    let pair = |x: &Point, y: &Point| {
        if norm(y) >= 1.0 || y[j] <= 0.0 {
            return 0.0;
        }
        let dy = test.eval(point_slice(y, dim));
        if dy == 0.0 {
            return 0.0;
        }
        let xs = point_slice(x, dim);
        let vx = derivative.eval(xs) - test.eval(xs);
        if vx == 0.0 {
            return 0.0;
        }
        let mut xr = *x;
        xr[j] = -xr[j];
        let k1 = norm(&[x[0] - y[0], x[1] - y[1]]).powf(e);
        if !k1.is_finite() {
            return 0.0;
        }
        let k2 = norm(&[xr[0] - y[0], xr[1] - y[1]]).powf(e);
        2.0 * c * vx * dy * (k1 - k2)
    };
    mc_integral(spec, Region::HalfBall(j), &pair, &|_| 0.0)
}

/// Tabulated `T_N(r) (1-r)^{2s}` for fast Monte Carlo lookups.
struct TailTable {
    s: f64,
    dim: usize,
    values: Vec<f64>,
}

const TAIL_GRID: usize = 4096;

impl TailTable {
    fn cached(dim: usize, s: f64) -> Arc<TailTable> {
        type Cache = Mutex<HashMap<(usize, u64), Arc<TailTable>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let key = (dim, s.to_bits());
        if let Some(t) = cache.lock().unwrap().get(&key) {
            return t.clone();
        }
        let values = (0..=TAIL_GRID)
            .into_par_iter()
            .map(|i| {
                let r = i as f64 / TAIL_GRID as f64;
                if i == TAIL_GRID {
                    // limit of T(r)(1-r)^{2s} as r → 1
                    Self::boundary_limit(dim, s)
                } else {
                    exterior_tail(dim, s, r) * (1.0 - r).powf(2.0 * s)
                }
            })
            .collect();
        let t = Arc::new(TailTable { s, dim, values });
        cache.lock().unwrap().entry(key).or_insert(t).clone()
    }

    /// Near the boundary the exterior looks like a half-space: `T ≈ |S^{N-2}|-weighted` flat limit
    /// `(1-r)^{-2s} ∫_{z_1>1} |z|^{-N-2s} dz`.
    fn boundary_limit(dim: usize, s: f64) -> f64 {
        // ∫_{z_1 > 1} |z|^{-N-2s} dz = π^{(N-1)/2} Γ((1+2s)/2) / (Γ((N+2s)/2)) / (2s)
        use statrs::function::gamma::gamma;
        let n = dim as f64;
        PI.powf(0.5 * (n - 1.0)) * gamma(0.5 + s) / gamma(0.5 * n + s) / (2.0 * s)
    }

    fn eval(&self, r: f64) -> f64 {
        if self.dim == 1 {
            return exterior_tail(1, self.s, r);
        }
        let pos = r * TAIL_GRID as f64;
        let i = (pos.floor() as usize).min(TAIL_GRID - 2);
        let t = pos - i as f64;
        // quadratic interpolation on three nodes
        let i0 = i.saturating_sub(if i + 2 > TAIL_GRID { 1 } else { 0 });
        let (y0, y1, y2) = (
            self.values[i0],
            self.values[i0 + 1],
            self.values[(i0 + 2).min(TAIL_GRID)],
        );
        let tt = t + (i - i0) as f64;
        let val = y0 + tt * (y1 - y0) + 0.5 * tt * (tt - 1.0) * (y2 - 2.0 * y1 + y0);
        val * (1.0 - r).powf(-2.0 * self.s)
    }
}

// ---------------------------------------------------------------------------
// pointwise

/// Principal-value `(-Δ)^s u(x)` for `N ≤ 3` with symmetrized second differences.
///
/// `margin` is the minimal admissible distance of `x` to the boundary.
pub fn pointwise_flap(
    u: &SeparableFunction,
    x: &[f64],
    params: &ProblemParams,
    rule: &QuadratureRule,
    margin: f64,
) -> Result<Estimate> {
    let n = params.dim();
    if x.len() != n {
        return Err(Error::InvalidParams(format!(
            "point has {} coordinates, expected {n}",
            x.len()
        )));
    }
    let dist = ProblemParams::boundary_distance(x);
    if dist < margin {
        return Err(Error::SingularityTooClose {
            distance: dist,
            margin,
        });
    }
    if n > 3 {
        return Err(Error::DimensionUnsupported(n));
    }
    let level = rule.budget.max(1);
    let coarse = pointwise_level(u, x, params, level, rule.kernel_scale);
    let fine = pointwise_level(u, x, params, level + 1, rule.kernel_scale);
    rule.check_target(combine(coarse, fine, fine.abs()))
}

fn pointwise_level(
    u: &SeparableFunction,
    x: &[f64],
    params: &ProblemParams,
    level: usize,
    scale: f64,
) -> f64 {
    let n = params.dim();
    let s = params.s();
    let c = params.frac_constant() * scale;
    let (q, layers, sigma) = level_params(level);
    let gl = gauss_legendre(q);
    let ux = u.eval(x);
    let near = 0.5 * ProblemParams::boundary_distance(x);
    let xx: f64 = x.iter().map(|v| v * v).sum();
    let ray = |omega: &[f64]| -> f64 {
        let xo: f64 = x.iter().zip(omega).map(|(a, b)| a * b).sum();
        let disc = (xo * xo + 1.0 - xx).sqrt();
        let t_plus = -xo + disc;
        let t_minus = xo + disc;
        let (t_lo, t_hi) = if t_plus < t_minus {
            (t_plus, t_minus)
        } else {
            (t_minus, t_plus)
        };
        let g = |t: f64| {
            let p: Vec<f64> = x.iter().zip(omega).map(|(a, b)| a + t * b).collect();
            let m: Vec<f64> = x.iter().zip(omega).map(|(a, b)| a - t * b).collect();
            (2.0 * ux - u.eval(&p) - u.eval(&m)) * t.powf(-1.0 - 2.0 * s)
        };
        let mut total = 0.0;
        for (a, b, gl_left, gl_right) in [
            (0.0, near, true, false),
            (near, t_lo, false, true),
            (t_lo, t_hi, true, true),
        ] {
            if b > a {
                total += graded_rule(a, b, gl_left, gl_right, layers, sigma, &gl)
                    .iter()
                    .map(|&(t, w)| w * g(t))
                    .sum::<f64>();
            }
        }
        total + 2.0 * ux * t_hi.powf(-2.0 * s) / (2.0 * s)
    };
    let m = 8 * (level + 2);
    let angular = match n {
        // both directions give the same ray integral
        1 => 2.0 * ray(&[1.0]),
        2 => {
            // θ ∈ [0, π) covers each line once; the ray integral is π-periodic
            let h = PI / m as f64;
            2.0 * (0..m)
                .map(|i| h * ray(&[(i as f64 * h).cos(), (i as f64 * h).sin()]))
                .sum::<f64>()
        }
        _ => {
            // hemisphere z ∈ [0,1] (Gauss) × azimuth (trapezoid)
            let glz = gauss_legendre(m);
            let h = 2.0 * PI / (2 * m) as f64;
            let mut acc = 0.0;
            for (zn, zw) in glz.nodes.iter().zip(&glz.weights) {
                let z = 0.5 * (zn + 1.0);
                let rho = (1.0 - z * z).sqrt();
                for i in 0..2 * m {
                    let ph = i as f64 * h;
                    acc += 0.5 * zw * h * ray(&[rho * ph.cos(), rho * ph.sin(), z]);
                }
            }
            2.0 * acc
        }
    };
    0.5 * c * angular
}

/// `(-Δ)^s u(0)` for radial `u` in `R^N` via the one-dimensional reduction
/// `c(N,s) |S^{N-1}| ∫_0^∞ (u(0) - u(t)) t^{-1-2s} dt`.
pub fn pointwise_flap_radial_origin(
    profile: &(dyn Fn(f64) -> f64 + Sync),
    params: &ProblemParams,
    level: usize,
) -> Estimate {
    let s = params.s();
    let u0 = profile(0.0);
    let value = |lvl: usize| {
        let (q, layers, sigma) = level_params(lvl);
        let gl = gauss_legendre(q);
        let body: f64 = graded_rule(0.0, 1.0, true, true, layers, sigma, &gl)
            .iter()
            .map(|&(t, w)| w * (u0 - profile(t)) * t.powf(-1.0 - 2.0 * s))
            .sum();
        params.frac_constant() * params.sphere_area() * (body + u0 / (2.0 * s))
    };
    let fine = value(level + 1);
    combine(value(level), fine, fine.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::RadialBasisSpec;

    #[test]
    fn numeric_kernel_matches_closed_form_in_three_dimensions() {
        for &s in &[0.1, 0.5, 0.9] {
            for &(r, rho) in &[
                (0.3, 0.7),
                (0.5, 0.5001),
                (0.999, 0.998),
                (0.01, 0.9),
                (0.2, 0.19999999),
            ] {
                let num = radial_kernel_numeric(3, s, r, rho, (r - rho).abs());
                let exact = radial_kernel_d3(s, r, rho);
                assert!(
                    (num - exact).abs() < 1e-10 * exact,
                    "s={s} r={r} rho={rho} {num} {exact}"
                );
            }
        }
    }

    #[test]
    fn numeric_kernel_in_one_dimension_agrees_when_forced() {
        // d = 2 against brute-force angular trapezoid at a well-separated pair
        let (s, r, rho) = (0.3, 0.2, 0.8);
        let m = 20000;
        let h = 2.0 * PI / m as f64;
        let brute: f64 = (0..m)
            .map(|i| {
                let th = i as f64 * h;
                h * (r * r + rho * rho - 2.0 * r * rho * th.cos()).powf(-1.0 - s)
            })
            .sum();
        let num = radial_kernel(2, s, r, rho);
        assert!((num - brute).abs() < 1e-10 * brute, "{num} {brute}");
    }

    #[test]
    fn exterior_tail_closed_values() {
        for &s in &[0.25, 0.75] {
            // at the origin T = |S^{d-1}| / (2s)
            for d in 1..5 {
                let t0 = exterior_tail(d, s, 0.0);
                assert!((t0 - sphere_area(d) / (2.0 * s)).abs() < 1e-12 * t0);
            }
            // numeric route in d = 3 against closed-form kernel integrated directly
            let r = 0.6;
            let gl = gauss_legendre(40);
            let mut direct = 0.0;
            for (a, b) in [(1.0, 1.5), (1.5, 4.0), (4.0, 40.0)] {
                for (x, w) in graded_rule(a, b, a == 1.0, false, 20, 0.2, &gl) {
                    direct += w * radial_kernel_d3(s, r, x) * x * x;
                }
            }
            // remainder beyond 40: K ≈ 4π ρ^{-3-2s}
            direct += 4.0 * PI * 40f64.powf(-2.0 * s) / (2.0 * s);
            let num = exterior_tail(3, s, r);
            assert!((num - direct).abs() < 2e-4 * num, "{num} {direct}");
        }
    }

    #[test]
    fn one_dimensional_semicircle_energy() {
        // (-Δ)^{1/2} √(1-x²) = 1, so E(u,u) = ∫ √(1-x²) = π/2
        let params = ProblemParams::new(1, 0.5).unwrap();
        let u = SeparableFunction::radial(Arc::new(|r: f64| ((1.0 - r) * (1.0 + r)).sqrt()));
        let est = bilinear_form(&u, &u, &params, &QuadratureRule::tensor(2)).unwrap();
        assert!((est.value - 0.5 * PI).abs() < 1e-6, "{est:?}");
        assert!((est.value - 0.5 * PI).abs() <= 10.0 * est.err + 1e-8);
    }

    #[test]
    fn radial_route_matches_closed_form_action() {
        for &(d, s) in &[(2usize, 0.5), (3, 0.25), (5, 0.75)] {
            let spec = RadialBasisSpec::new(d, s, 3).unwrap();
            let rule = RadialPairRule::cached(d, s, 2);
            let f0 = move |r: f64| spec.eval(0, r).unwrap();
            let f1 = move |r: f64| spec.eval(1, r).unwrap();
            let e00 = rule.reduced_form(&f0, &f0);
            let e01 = rule.reduced_form(&f0, &f1);
            let a00 = spec.stiffness_diagonal(0);
            assert!(
                (e00.value - a00).abs() < 1e-5 * a00,
                "d={d} s={s} {e00:?} {a00}"
            );
            assert!(e01.value.abs() < 1e-5 * a00, "d={d} s={s} {e01:?}");
        }
    }

    #[test]
    fn zero_function_gives_zero() {
        let params = ProblemParams::new(2, 0.4).unwrap();
        let z = SeparableFunction::zero();
        let est =
            pointwise_flap(&z, &[0.1, 0.2], &params, &QuadratureRule::tensor(1), 0.1).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(
            bilinear_form(&z, &z, &params, &QuadratureRule::tensor(1))
                .unwrap()
                .value,
            0.0
        );
    }

    #[test]
    fn pointwise_rejects_points_near_boundary() {
        let params = ProblemParams::new(1, 0.4).unwrap();
        let z = SeparableFunction::zero();
        let err =
            pointwise_flap(&z, &[0.95], &params, &QuadratureRule::tensor(1), 0.1).unwrap_err();
        assert!(matches!(err, Error::SingularityTooClose { .. }));
    }

    #[test]
    fn budget_exceeded_reported() {
        let params = ProblemParams::new(1, 0.5).unwrap();
        let u = SeparableFunction::radial(Arc::new(|r: f64| ((1.0 - r) * (1.0 + r)).sqrt()));
        let rule = QuadratureRule::adaptive(1, 1e-300);
        assert!(matches!(
            bilinear_form(&u, &u, &params, &rule),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
