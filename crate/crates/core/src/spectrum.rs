//! Dirichlet spectrum of the ball assembled from radial blocks.
//!
//! Eigenfunctions factor as `V_ℓ(x) φ(|x|)` with `V_ℓ` a solid harmonic of
//! degree `ℓ`; the radial factor solves the radial problem in effective
//! dimension `N + 2ℓ`. Each block is computed by [`crate::radial`].

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::quadrature::Estimate;
use crate::radial::{
    assemble_radial_operator, solve_radial_eigs, Potential, RadialBasisSpec, RadialExpansion,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Dimension of the degree-`ℓ` spherical harmonics on `S^{N-1}`.
///
/// In dimension one the two classes are the even and odd functions.
pub fn harmonic_multiplicity(dim: usize, ell: usize) -> Result<usize> {
    match dim {
        0 => Err(Error::InvalidParams("dimension must be >= 1".into())),
        1 if ell <= 1 => Ok(1),
        1 => Err(Error::UnsupportedAngularDegree { dim, ell }),
        _ => {
            let lead = binomial(dim + ell - 1, ell);
            let sub = if ell >= 2 {
                binomial(dim + ell - 3, ell - 2)
            } else {
                0
            };
            Ok(lead - sub)
        }
    }
}

/// Largest admissible angular degree for `dim`, clamped from `ell_max`.
pub fn admissible_ell_max(dim: usize, ell_max: usize) -> usize {
    if dim == 1 {
        ell_max.min(1)
    } else {
        ell_max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub ell: usize,
    pub n: usize,
    pub lambda: f64,
    /// Convergence estimate `|λ^{(K)} - λ^{(K-2)}|`.
    pub err: f64,
    pub multiplicity: usize,
    /// Within combined convergence estimates of a neighbouring entry.
    pub coincident: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumLabeled {
    pub params: ProblemParams,
    pub ell_max: usize,
    pub n_max: usize,
    pub k: usize,
    pub entries: Vec<SpectrumEntry>,
    /// `λ_{N+2ℓ_max,0}` exceeds every reported eigenvalue with `ℓ < ℓ_max`.
    pub truncation_safe: bool,
    /// Every eigenvalue below this value appears in `entries`.
    pub complete_below: f64,
    #[serde(skip)]
    modes: Vec<Vec<RadialExpansion>>,
}

/// One radial block: eigenvalues, estimates, and the first few eigenvectors.
struct Block {
    values: Vec<f64>,
    conv: Vec<f64>,
    modes: Vec<RadialExpansion>,
}

fn radial_block(d: usize, s: f64, k: usize, keep: usize) -> Result<Block> {
    let spec = RadialBasisSpec::new(d, s, k)?;
    let pair = assemble_radial_operator(&spec, Potential::None, None)?;
    let eig = solve_radial_eigs(&pair)?;
    let keep = keep.min(k);
    Ok(Block {
        values: eig.eigenvalues.clone(),
        conv: eig.convergence.clone(),
        modes: (0..keep).map(|n| eig.expansion(n)).collect(),
    })
}

/// Merge radial blocks `ℓ = 0..=ℓ_max` into a labelled spectrum.
pub fn assemble_full_spectrum(
    params: &ProblemParams,
    ell_max: usize,
    n_max: usize,
    k: usize,
) -> Result<SpectrumLabeled> {
    let dim = params.dim();
    let s = params.s();
    if n_max + 2 > k {
        return Err(Error::InvalidParams(format!(
            "truncation K = {k} too small for n_max = {n_max}"
        )));
    }
    let ell_max = admissible_ell_max(dim, ell_max);
    let blocks: Vec<Block> = (0..=ell_max)
        .into_par_iter()
        .map(|ell| radial_block(dim + 2 * ell, s, k, if ell <= 1 { n_max + 1 } else { 0 }))
        .collect::<Result<_>>()?;

    let mut entries = Vec::new();
    for (ell, block) in blocks.iter().enumerate() {
        let mult = harmonic_multiplicity(dim, ell)?;
        for n in 0..=n_max {
            entries.push(SpectrumEntry {
                ell,
                n,
                lambda: block.values[n],
                err: block.conv[n],
                multiplicity: mult,
                coincident: false,
            });
        }
    }
    entries.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.ell.cmp(&b.ell)));
    for i in 1..entries.len() {
        let (a, b) = (&entries[i - 1], &entries[i]);
        if (b.lambda - a.lambda).abs() <= a.err + b.err {
            entries[i - 1].coincident = true;
            entries[i].coincident = true;
        }
    }

    let top_block_ground = blocks[ell_max].values[0];
    let truncation_safe = if dim == 1 {
        ell_max == 1
    } else {
        entries
            .iter()
            .filter(|e| e.ell < ell_max)
            .all(|e| e.lambda < top_block_ground)
    };
    let first_missing_n = blocks
        .iter()
        .map(|b| b.values[n_max + 1])
        .fold(f64::INFINITY, f64::min);
    let complete_below = if dim == 1 && ell_max == 1 {
        first_missing_n
    } else {
        // blocks beyond ℓ_max start above λ_{N+2ℓ_max,0}
        first_missing_n.min(top_block_ground)
    };
    Ok(SpectrumLabeled {
        params: *params,
        ell_max,
        n_max,
        k,
        entries,
        truncation_safe,
        complete_below,
        modes: blocks.into_iter().map(|b| b.modes).collect(),
    })
}

impl SpectrumLabeled {
    /// Count with multiplicity of eigenvalues strictly below `tau`.
    pub fn count_below(&self, tau: f64) -> Result<usize> {
        if tau > self.complete_below {
            return Err(Error::TruncationUnsafe(format!(
                "threshold {tau} above the completeness bound {}",
                self.complete_below
            )));
        }
        Ok(self
            .entries
            .iter()
            .filter(|e| e.lambda < tau)
            .map(|e| e.multiplicity)
            .sum())
    }

    /// Entries of one angular block in order of `n`.
    pub fn block(&self, ell: usize) -> Vec<&SpectrumEntry> {
        let mut out: Vec<_> = self.entries.iter().filter(|e| e.ell == ell).collect();
        out.sort_by_key(|e| e.n);
        out
    }

    /// Eigenfunction for the entry `(ell, n)`; only `ℓ ≤ 1` is evaluable.
    pub fn mode(&self, ell: usize, n: usize) -> Result<Eigenmode> {
        if ell >= 2 {
            return Err(Error::UnsupportedAngularDegree {
                dim: self.params.dim(),
                ell,
            });
        }
        let entry = self
            .entries
            .iter()
            .find(|e| e.ell == ell && e.n == n)
            .ok_or(Error::IndexOutOfRange {
                index: n,
                len: self.n_max + 1,
            })?;
        let profile =
            self.modes
                .get(ell)
                .and_then(|m| m.get(n))
                .cloned()
                .ok_or(Error::IndexOutOfRange {
                    index: n,
                    len: self.n_max + 1,
                })?;
        Ok(Eigenmode {
            dim: self.params.dim(),
            ell,
            n,
            lambda: entry.lambda,
            profile,
        })
    }
}

/// An evaluable eigenfunction `V_ℓ(x) φ(|x|)` with `ℓ ≤ 1`.
#[derive(Debug, Clone)]
pub struct Eigenmode {
    pub dim: usize,
    pub ell: usize,
    pub n: usize,
    pub lambda: f64,
    pub profile: RadialExpansion,
}

/// `V_ℓ(x) φ(|x|)` with `V_0 = 1` and `V_1 = x_j` (0-based `j`).
pub fn eval_eigenfunction(mode: &Eigenmode, j: usize, x: &[f64]) -> Result<f64> {
    if mode.ell >= 2 {
        return Err(Error::UnsupportedAngularDegree {
            dim: mode.dim,
            ell: mode.ell,
        });
    }
    if x.len() != mode.dim || j >= mode.dim {
        return Err(Error::InvalidParams(format!(
            "point or direction does not match dimension {}",
            mode.dim
        )));
    }
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let radial = mode.profile.eval(r);
    Ok(if mode.ell == 0 { radial } else { x[j] * radial })
}

impl Eigenmode {
    pub fn eval(&self, j: usize, x: &[f64]) -> Result<f64> {
        eval_eigenfunction(self, j, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondEigenvalue {
    pub lambda2: f64,
    pub label: (usize, usize),
    /// `λ_{N+2,0}` with its convergence estimate.
    pub lambda_shifted_ground: Estimate,
    /// `λ_{N,1}` with its convergence estimate.
    pub lambda_radial_second: Estimate,
    /// `λ_{N,1} - λ_{N+2,0}`.
    pub gap: Estimate,
}

/// Smaller of `λ_{N+2,0}` and `λ_{N,1}` with its label.
pub fn second_eigenvalue(params: &ProblemParams, k: usize) -> Result<SecondEigenvalue> {
    let out = second_eigenvalue_unchecked(params, k)?;
    if out.gap.err > 0.5 * out.gap.value.abs() {
        return Err(Error::TruncationUnsafe(format!(
            "convergence estimate {:e} exceeds half the gap {:e}",
            out.gap.err, out.gap.value
        )));
    }
    Ok(out)
}

fn second_eigenvalue_unchecked(params: &ProblemParams, k: usize) -> Result<SecondEigenvalue> {
    let (dim, s) = (params.dim(), params.s());
    let (radial, shifted) = rayon::join(
        || radial_block(dim, s, k, 0),
        || radial_block(dim + 2, s, k, 0),
    );
    let (radial, shifted) = (radial?, shifted?);
    if radial.values.len() < 2 {
        return Err(Error::InvalidParams(
            "truncation K must be at least 2".into(),
        ));
    }
    let a = Estimate::new(shifted.values[0], shifted.conv[0]);
    let b = Estimate::new(radial.values[1], radial.conv[1]);
    let gap = b.minus(a);
    let (lambda2, label) = if a.value <= b.value {
        (a.value, (1, 0))
    } else {
        (b.value, (0, 1))
    };
    Ok(SecondEigenvalue {
        lambda2,
        label,
        lambda_shifted_ground: a,
        lambda_radial_second: b,
        gap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Yes,
    No,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureReport {
    pub params: ProblemParams,
    pub k: usize,
    pub ell_max: usize,
    pub lambda_shifted_ground: Estimate,
    pub lambda_radial_second: Estimate,
    pub gap: Estimate,
    /// `gap / err`, infinite when the estimate vanishes.
    pub margin_ratio: f64,
    pub verdict: Verdict,
    /// Label of the second distinct eigenvalue in the assembled spectrum.
    pub second_label: (usize, usize),
    pub second_multiplicity: usize,
    /// The `(1,0)` eigenfunctions satisfy `u(-x) = -u(x)` at every sampled point.
    pub antisymmetric: bool,
    pub antisymmetry_samples: usize,
}

/// Number of points used for the antisymmetry regression check.
pub const ANTISYMMETRY_SAMPLES: usize = 1000;

fn random_ball_point(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..dim).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        if x.iter().map(|v| v * v).sum::<f64>() < 1.0 {
            return x;
        }
    }
}

/// Check `λ_{N+2,0} < λ_{N,1}` together with the oddness of the `(1,0)` modes.
pub fn verify_conjecture(
    params: &ProblemParams,
    k: usize,
    ell_max: usize,
) -> Result<ConjectureReport> {
    let dim = params.dim();
    let sec = second_eigenvalue_unchecked(params, k)?;
    let verdict = if sec.gap.value > sec.gap.err {
        Verdict::Yes
    } else if sec.gap.value < -sec.gap.err {
        Verdict::No
    } else {
        Verdict::Inconclusive
    };
    let margin_ratio = if sec.gap.err > 0.0 {
        sec.gap.value / sec.gap.err
    } else {
        f64::INFINITY
    };

    let spectrum = assemble_full_spectrum(params, ell_max.max(1), 1, k.max(3))?;
    let ground = spectrum.entries[0].lambda;
    let second = spectrum
        .entries
        .iter()
        .find(|e| e.lambda > ground && !(e.ell == 0 && e.n == 0))
        .cloned()
        .ok_or_else(|| Error::InvalidParams("spectrum has a single entry".into()))?;

    let mode = spectrum.mode(1, 0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut antisymmetric = true;
    for i in 0..ANTISYMMETRY_SAMPLES {
        let x = random_ball_point(dim, &mut rng);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let j = i % dim;
        if mode.eval(j, &x)? + mode.eval(j, &neg)? != 0.0 {
            antisymmetric = false;
        }
    }
    Ok(ConjectureReport {
        params: *params,
        k,
        ell_max,
        lambda_shifted_ground: sec.lambda_shifted_ground,
        lambda_radial_second: sec.lambda_radial_second,
        gap: sec.gap,
        margin_ratio,
        verdict,
        second_label: (second.ell, second.n),
        second_multiplicity: second.multiplicity,
        antisymmetric,
        antisymmetry_samples: ANTISYMMETRY_SAMPLES,
    })
}

/// Ground states `λ_{d,0}` with estimates for `d = 1..=d_max`.
pub fn ground_state_sweep(s: f64, d_max: usize, k: usize) -> Result<Vec<Estimate>> {
    (1..=d_max)
        .into_par_iter()
        .map(|d| radial_block(d, s, k, 0).map(|b| Estimate::new(b.values[0], b.conv[0])))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplicities() {
        for n in 1..7 {
            assert_eq!(harmonic_multiplicity(n, 0).unwrap(), 1);
            assert_eq!(harmonic_multiplicity(n, 1).unwrap(), n);
        }
        assert_eq!(harmonic_multiplicity(3, 2).unwrap(), 5);
        assert_eq!(harmonic_multiplicity(2, 5).unwrap(), 2);
        assert_eq!(harmonic_multiplicity(4, 2).unwrap(), 9);
        assert!(matches!(
            harmonic_multiplicity(1, 2),
            Err(Error::UnsupportedAngularDegree { .. })
        ));
    }

    #[test]
    fn first_entries_are_ground_then_dipole() {
        for dim in 1..4 {
            let p = ProblemParams::new(dim, 0.5).unwrap();
            let sp = assemble_full_spectrum(&p, 3, 2, 12).unwrap();
            assert_eq!(
                (
                    sp.entries[0].ell,
                    sp.entries[0].n,
                    sp.entries[0].multiplicity
                ),
                (0, 0, 1)
            );
            assert_eq!(
                (
                    sp.entries[1].ell,
                    sp.entries[1].n,
                    sp.entries[1].multiplicity
                ),
                (1, 0, dim)
            );
            assert!(sp.truncation_safe || dim > 1);
        }
    }

    #[test]
    fn radial_sublist_matches_radial_solve() {
        let p = ProblemParams::new(3, 0.3).unwrap();
        let sp = assemble_full_spectrum(&p, 2, 3, 10).unwrap();
        let direct = crate::radial::radial_eigenvalues(3, 0.3, 10).unwrap();
        for (e, v) in sp.block(0).iter().zip(&direct.eigenvalues) {
            assert_eq!(e.lambda, *v);
        }
    }

    #[test]
    fn parity_of_modes_is_exact() {
        let p = ProblemParams::new(2, 0.6).unwrap();
        let sp = assemble_full_spectrum(&p, 2, 1, 10).unwrap();
        let m0 = sp.mode(0, 0).unwrap();
        let m1 = sp.mode(1, 0).unwrap();
        let x = [0.3, -0.41];
        assert_eq!(m0.eval(0, &x).unwrap(), m0.eval(0, &[-0.3, 0.41]).unwrap());
        assert_eq!(m1.eval(1, &x).unwrap(), -m1.eval(1, &[-0.3, 0.41]).unwrap());
        assert_eq!(m1.eval(0, &[0.0, 0.0]).unwrap(), 0.0);
        assert!(sp.mode(2, 0).is_err());
    }

    #[test]
    fn interval_half_laplacian_conjecture() {
        let p = ProblemParams::new(1, 0.5).unwrap();
        let rep = verify_conjecture(&p, 24, 1).unwrap();
        assert_eq!(rep.verdict, Verdict::Yes);
        assert_eq!(rep.second_label, (1, 0));
        assert!(rep.antisymmetric);
        let sec = second_eigenvalue(&p, 24).unwrap();
        assert_eq!(sec.label, (1, 0));
        assert!(sec.lambda2 > sp_ground(&p));
    }

    fn sp_ground(p: &ProblemParams) -> f64 {
        assemble_full_spectrum(p, 1, 0, 8).unwrap().entries[0].lambda
    }

    #[test]
    fn tiny_truncation_is_inconclusive_not_yes() {
        let p = ProblemParams::new(2, 0.5).unwrap();
        let rep = verify_conjecture(&p, 2, 2).unwrap();
        assert_ne!(rep.verdict, Verdict::Yes);
    }
}
