use serde::{Deserialize, Serialize};

/// Nonlinearity `f` together with its derivative and primitive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum NonlinearitySpec {
    /// `f(t) = λ t`
    Linear { lambda: f64 },
    /// `f(t) = λ |t|^{p-2} t`, `p ≥ 2`
    Power { lambda: f64, p: f64 },
    /// `f(t) = λ t + c0`
    ShiftedLinear { lambda: f64, c0: f64 },
}

impl NonlinearitySpec {
    pub fn linear(lambda: f64) -> Self {
        Self::Linear { lambda }
    }

    pub fn power(lambda: f64, p: f64) -> Self {
        assert!(p >= 2.0, "power family needs p >= 2 for a C^1 nonlinearity");
        Self::Power { lambda, p }
    }

    pub fn shifted_linear(lambda: f64, c0: f64) -> Self {
        Self::ShiftedLinear { lambda, c0 }
    }

    pub fn is_valid(&self) -> bool {
        match *self {
            Self::Linear { lambda } => lambda.is_finite(),
            Self::Power { lambda, p } => lambda.is_finite() && p.is_finite() && p >= 2.0,
            Self::ShiftedLinear { lambda, c0 } => lambda.is_finite() && c0.is_finite(),
        }
    }

    /// Linear in `t` (so that solutions come in rays).
    pub fn is_linear(&self) -> bool {
        match *self {
            Self::Linear { .. } => true,
            Self::Power { p, .. } => p == 2.0,
            Self::ShiftedLinear { c0, .. } => c0 == 0.0,
        }
    }

    /// Slope of the linear family, if [`is_linear`](Self::is_linear).
    pub fn linear_slope(&self) -> Option<f64> {
        match *self {
            Self::Linear { lambda } => Some(lambda),
            Self::Power { lambda, p: 2.0 } => Some(lambda),
            Self::ShiftedLinear { lambda, c0: 0.0 } => Some(lambda),
            _ => None,
        }
    }

    /// `(λ, c₀)` when `f(t) = λ t + c₀`.
    pub fn affine_coefficients(&self) -> Option<(f64, f64)> {
        match *self {
            Self::Linear { lambda } => Some((lambda, 0.0)),
            Self::Power { lambda, p: 2.0 } => Some((lambda, 0.0)),
            Self::ShiftedLinear { lambda, c0 } => Some((lambda, c0)),
            _ => None,
        }
    }

    pub fn f(&self, t: f64) -> f64 {
        match *self {
            Self::Linear { lambda } => lambda * t,
            Self::Power { lambda, p } => lambda * t.abs().powf(p - 2.0) * t,
            Self::ShiftedLinear { lambda, c0 } => lambda * t + c0,
        }
    }

    pub fn df(&self, t: f64) -> f64 {
        match *self {
            Self::Linear { lambda } | Self::ShiftedLinear { lambda, .. } => lambda,
            Self::Power { lambda, p } => {
                if p == 2.0 {
                    lambda
                } else {
                    lambda * (p - 1.0) * t.abs().powf(p - 2.0)
                }
            }
        }
    }

    /// Primitive with `F(0) = 0`.
    pub fn primitive(&self, t: f64) -> f64 {
        match *self {
            Self::Linear { lambda } => 0.5 * lambda * t * t,
            Self::Power { lambda, p } => lambda * t.abs().powf(p) / p,
            Self::ShiftedLinear { lambda, c0 } => 0.5 * lambda * t * t + c0 * t,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitive_vanishes_at_zero() {
        for spec in [
            NonlinearitySpec::linear(2.0),
            NonlinearitySpec::power(1.5, 3.0),
            NonlinearitySpec::shifted_linear(1.0, 0.3),
        ] {
            assert_eq!(spec.primitive(0.0), 0.0);
        }
    }

    proptest::proptest! {
        #[test]
        fn derivative_and_primitive_consistent(t in -3.0f64..3.0, p in 2.0f64..5.0) {
            let spec = NonlinearitySpec::power(1.3, p);
            let h = 1e-5;
            let fd = (spec.primitive(t + h) - spec.primitive(t - h)) / (2.0 * h);
            proptest::prop_assert!((fd - spec.f(t)).abs() < 1e-6 * (1.0 + spec.f(t).abs()));
            let fd = (spec.f(t + h) - spec.f(t - h)) / (2.0 * h);
            proptest::prop_assert!((fd - spec.df(t)).abs() < 1e-4 * (1.0 + spec.df(t).abs()));
        }
    }
}
