//! Special functions and fixed quadrature rules shared by the assembly code.

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::{gamma, ln_gamma};
use std::f64::consts::PI;

/// |S^{n-1}|, the surface measure of the unit sphere in R^n.
pub fn sphere_area(n: usize) -> f64 {
    assert!(n >= 1, "sphere_area needs n >= 1");
    let half = n as f64 / 2.0;
    2.0 * PI.powf(half) / gamma(half)
}

/// Values `P_0(x), ..., P_{n_max}(x)` of the Jacobi polynomials with exponents `(alpha, beta)`.
pub fn jacobi_all(n_max: usize, alpha: f64, beta: f64, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    if n_max == 0 {
        return out;
    }
    out.push(0.5 * (alpha - beta) + 0.5 * (alpha + beta + 2.0) * x);
    let ab = alpha + beta;
    for n in 2..=n_max {
        let nf = n as f64;
        let c = 2.0 * nf + ab;
        let a1 = 2.0 * nf * (nf + ab) * (c - 2.0);
        let a2 = (c - 1.0) * (alpha * alpha - beta * beta);
        let a3 = (c - 2.0) * (c - 1.0) * c;
        let a4 = 2.0 * (nf + alpha - 1.0) * (nf + beta - 1.0) * c;
        let next = ((a2 + a3 * x) * out[n - 1] - a4 * out[n - 2]) / a1;
        out.push(next);
    }
    out
}

/// Single Jacobi polynomial value.
pub fn jacobi(n: usize, alpha: f64, beta: f64, x: f64) -> f64 {
    jacobi_all(n, alpha, beta, x)[n]
}

/// Derivatives `P_n'(x)` for n = 0..=n_max, via `P_n' = (n+a+b+1)/2 P_{n-1}^{(a+1,b+1)}`.
pub fn jacobi_derivs_all(n_max: usize, alpha: f64, beta: f64, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    if n_max == 0 {
        return out;
    }
    let shifted = jacobi_all(n_max - 1, alpha + 1.0, beta + 1.0, x);
    for n in 1..=n_max {
        out[n] = 0.5 * (n as f64 + alpha + beta + 1.0) * shifted[n - 1];
    }
    out
}

/// `P_n^{(alpha,beta)}(1) = (alpha+1)_n / n!`.
pub fn jacobi_at_one(n: usize, alpha: f64) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * (alpha + k as f64) / k as f64)
}

/// `∫_{-1}^1 (1-x)^a (1+x)^b P_n(x)^2 dx`.
pub fn jacobi_norm_sq(n: usize, alpha: f64, beta: f64) -> f64 {
    let nf = n as f64;
    let ab = alpha + beta;
    let log = (ab + 1.0) * std::f64::consts::LN_2 - (2.0 * nf + ab + 1.0).ln()
        + ln_gamma(nf + alpha + 1.0)
        + ln_gamma(nf + beta + 1.0)
        - ln_gamma(nf + ab + 1.0)
        - ln_gamma(nf + 1.0);
    log.exp()
}

/// A one-dimensional rule: nodes and weights.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss–Jacobi rule on [-1,1] for the weight `(1-x)^alpha (1+x)^beta`.
///
/// Nodes come from the symmetric tridiagonal Jacobi matrix, then get one
/// Newton polish; weights use the derivative formula.
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Rule {
    assert!(n >= 1 && alpha > -1.0 && beta > -1.0);
    let ab = alpha + beta;
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        jm[(k, k)] = diag;
        if k + 1 < n {
            let j = kf + 1.0;
            let b2 = if k == 0 {
                4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * j * (j + alpha) * (j + beta) * (j + ab)
                    / ((2.0 * j + ab).powi(2) * (2.0 * j + ab + 1.0) * (2.0 * j + ab - 1.0))
            };
            jm[(k, k + 1)] = b2.sqrt();
            jm[(k + 1, k)] = b2.sqrt();
        }
    }
    let eig = SymmetricEigen::new(jm);
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let nf = n as f64;
    let log_const = (ab + 1.0) * std::f64::consts::LN_2
        + ln_gamma(nf + alpha + 1.0)
        + ln_gamma(nf + beta + 1.0)
        - ln_gamma(nf + ab + 1.0)
        - ln_gamma(nf + 1.0);
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..2 {
            let p = jacobi(n, alpha, beta, *x);
            let dp = jacobi_derivs_all(n, alpha, beta, *x)[n];
            let step = p / dp;
            if step.is_finite() && step.abs() < 1e-6 {
                *x -= step;
            }
        }
        let dp = jacobi_derivs_all(n, alpha, beta, *x)[n];
        weights.push((log_const - ((1.0 - *x * *x) * dp * dp).ln()).exp());
    }
    Rule { nodes, weights }
}

/// Gauss–Legendre rule on [-1,1].
pub fn gauss_legendre(n: usize) -> Rule {
    gauss_jacobi(n, 0.0, 0.0)
}

/// Node of a double-exponential rule on [0,1]: position, distance to 0,
/// distance to 1, weight. The distances are computed without cancellation.
#[derive(Debug, Clone, Copy)]
pub struct DeNode {
    pub x: f64,
    pub from_left: f64,
    pub from_right: f64,
    pub weight: f64,
}

/// Tanh–sinh rule on [0,1] with step `h`, truncated at |t| ≤ 4.
pub fn tanh_sinh(h: f64) -> Vec<DeNode> {
    let kmax = (5.5 / h).ceil() as i64;
    let mut out = Vec::with_capacity((2 * kmax + 1) as usize);
    for k in -kmax..=kmax {
        let t = k as f64 * h;
        let u = 0.5 * PI * t.sinh();
        let from_left = 1.0 / (1.0 + (-2.0 * u).exp());
        let from_right = 1.0 / (1.0 + (2.0 * u).exp());
        let sech = 1.0 / u.cosh();
        let weight = h * 0.5 * PI * t.cosh() * 0.5 * sech * sech;
        if weight == 0.0 || !weight.is_finite() {
            continue;
        }
        out.push(DeNode {
            x: from_left,
            from_left,
            from_right,
            weight,
        });
    }
    out
}

/// Map a Gauss rule on [-1,1] to [a,b] and push (x, w) pairs.
pub fn push_mapped(rule: &Rule, a: f64, b: f64, out: &mut Vec<(f64, f64)>) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        out.push((mid + half * x, half * w));
    }
}

/// Composite Gauss rule on [a,b] with geometric grading toward the ends
/// flagged in `(grade_left, grade_right)`. `layers` geometric layers with ratio
/// `sigma` are placed at each graded end; the middle is one panel.
pub fn graded_rule(
    a: f64,
    b: f64,
    grade_left: bool,
    grade_right: bool,
    layers: usize,
    sigma: f64,
    rule: &Rule,
) -> Vec<(f64, f64)> {
    let mut breaks = vec![0.0, 1.0];
    let reach = if grade_left && grade_right { 0.5 } else { 1.0 };
    let mut t = reach;
    for _ in 0..layers {
        t *= sigma;
        if grade_left {
            breaks.push(t);
        }
        if grade_right {
            breaks.push(1.0 - t);
        }
    }
    if grade_left && grade_right {
        breaks.push(0.5);
    }
    breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
    breaks.dedup();
    let mut out = Vec::new();
    for w in breaks.windows(2) {
        let (lo, hi) = (a + (b - a) * w[0], a + (b - a) * w[1]);
        if hi > lo {
            push_mapped(rule, lo, hi, &mut out);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn degree_two_jacobi_matches_explicit_quadratic() {
        let (a, b) = (0.3, 0.7);
        for &x in &[-0.9, -0.2, 0.0, 0.4, 0.95] {
            // P_2 = (a+1)(a+2)/2 + (a+2)(a+b+3)(x-1)/2 + (a+b+3)(a+b+4)(x-1)^2/8
            let explicit = (a + 1.0) * (a + 2.0) / 2.0
                + (a + 2.0) * (a + b + 3.0) * (x - 1.0) / 2.0
                + (a + b + 3.0) * (a + b + 4.0) * (x - 1.0f64).powi(2) / 8.0;
            assert!((jacobi(2, a, b, x) - explicit).abs() < 1e-13);
        }
    }

    #[test]
    fn gauss_jacobi_integrates_moments() {
        let (a, b) = (0.25, -0.5);
        let rule = gauss_jacobi(12, a, b);
        // orthogonality and norms
        for m in 0..6 {
            for n in 0..6 {
                let s: f64 = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(x, w)| w * jacobi(m, a, b, *x) * jacobi(n, a, b, *x))
                    .sum();
                let expect = if m == n { jacobi_norm_sq(n, a, b) } else { 0.0 };
                assert!((s - expect).abs() < 1e-12, "{m} {n} {s} {expect}");
            }
        }
    }

    #[test]
    fn jacobi_value_at_one() {
        for n in 0..8 {
            assert!((jacobi(n, 0.4, 1.5, 1.0) - jacobi_at_one(n, 0.4)).abs() < 1e-12);
        }
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularity() {
        let nodes = tanh_sinh(1.0 / 16.0);
        let s: f64 = nodes
            .iter()
            .map(|n| n.weight * n.from_left.powf(-0.5))
            .sum();
        assert!((s - 2.0).abs() < 1e-10, "{s}");
        let s: f64 = nodes
            .iter()
            .map(|n| n.weight * n.from_right.powf(-0.8))
            .sum();
        assert!((s - 5.0).abs() < 1e-8, "{s}");
    }

    #[test]
    fn graded_rule_integrates_power() {
        let gl = gauss_legendre(10);
        let r = graded_rule(0.0, 1.0, true, true, 20, 0.3, &gl);
        let s: f64 = r
            .iter()
            .map(|(x, w)| w * x.powf(0.3) * (1.0 - x).powf(0.5))
            .sum();
        // B(1.3, 1.5)
        let exact = (ln_gamma(1.3) + ln_gamma(1.5) - ln_gamma(2.8)).exp();
        assert!((s - exact).abs() < 1e-10, "{s} {exact}");
    }
}
