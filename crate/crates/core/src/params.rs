use crate::error::{Error, Result};
use crate::special::sphere_area;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::{LN_2, PI};

/// Ambient dimension `N` and fractional order `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    dim: usize,
    s: f64,
}

impl ProblemParams {
    pub fn new(dim: usize, s: f64) -> Result<Self> {
        if dim < 1 {
            return Err(Error::InvalidParams(format!(
                "dimension must be >= 1, got {dim}"
            )));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidParams(format!(
                "order s must lie in (0,1), got {s}"
            )));
        }
        Ok(Self { dim, s })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// `c(N,s) = 2^{2s} π^{-N/2} s Γ((N+2s)/2) / Γ(1-s)`.
    pub fn frac_constant(&self) -> f64 {
        frac_constant(self.dim, self.s)
    }

    pub fn sphere_area(&self) -> f64 {
        sphere_area(self.dim)
    }

    /// Distance to the boundary, `1 - |x|`.
    pub fn boundary_distance(x: &[f64]) -> f64 {
        1.0 - x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Kernel constant for dimension `d` (which need not equal the ambient `N`).
pub fn frac_constant(d: usize, s: f64) -> f64 {
    let d = d as f64;
    let log =
        2.0 * s * LN_2 - 0.5 * d * PI.ln() + s.ln() + ln_gamma(0.5 * d + s) - ln_gamma(1.0 - s);
    log.exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_closed_values() {
        let p = ProblemParams::new(1, 0.5).unwrap();
        assert!((p.frac_constant() - 1.0 / PI).abs() < 1e-14);
        let p = ProblemParams::new(2, 0.5).unwrap();
        assert!((p.frac_constant() - 0.5 / PI).abs() < 1e-14);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(ProblemParams::new(0, 0.5).is_err());
        assert!(ProblemParams::new(2, 0.0).is_err());
        assert!(ProblemParams::new(2, 1.0).is_err());
        assert!(ProblemParams::new(2, f64::NAN).is_err());
    }

    proptest::proptest! {
        #[test]
        fn constant_positive(d in 1usize..12, s in 0.001f64..0.999) {
            proptest::prop_assert!(frac_constant(d, s) > 0.0);
        }
    }
}
