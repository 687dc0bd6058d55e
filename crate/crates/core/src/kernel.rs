//! Gaussian interaction potential and its mollification.
//!
//! The unscaled potential is `V(x) = b / sqrt(2 pi) * exp(-x^2 / 2)`, and the
//! mollified kernel is `V_eps(x) = eps^-d * V(x / eps)`. Note that `V`
//! integrates to `b`, not `2b`; see [`KernelSpec::integral`].

use crate::error::{Error, Result};

pub(crate) const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Mollified Gaussian interaction kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    b: f64,
    epsilon: f64,
    dim: u32,
}

impl KernelSpec {
    pub fn new(b: f64, epsilon: f64, dim: u32) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::config(format!(
                "kernel width epsilon must be positive and finite, got {epsilon}"
            )));
        }
        if !(b >= 0.0) || !b.is_finite() {
            return Err(Error::config(format!(
                "kernel mass b must be nonnegative and finite, got {b}"
            )));
        }
        if dim == 0 {
            return Err(Error::config("kernel dimension must be at least 1"));
        }
        Ok(Self { b, epsilon, dim })
    }

    /// One-dimensional kernel.
    pub fn one_d(b: f64, epsilon: f64) -> Result<Self> {
        Self::new(b, epsilon, 1)
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    fn scale(&self) -> f64 {
        self.epsilon.powi(-(self.dim as i32))
    }

    fn unscaled(&self, r: f64) -> f64 {
        self.b * INV_SQRT_2PI * (-0.5 * r * r).exp()
    }

    /// `V_eps(x)`. Even in `x`.
    pub fn value(&self, x: f64) -> f64 {
        let r = x / self.epsilon;
        self.scale() * self.unscaled(r)
    }

    /// `d/dx V_eps(x) = eps^(-d-1) V'(x / eps)`. Odd in `x`.
    pub fn grad(&self, x: f64) -> f64 {
        let r = x / self.epsilon;
        self.scale() / self.epsilon * (-r * self.unscaled(r))
    }

    /// `sup |V''|` of the unscaled potential, attained at the origin.
    pub fn second_derivative_sup(&self) -> f64 {
        // V''(x) = b/sqrt(2pi) (x^2 - 1) e^{-x^2/2}; |V''| peaks at 0 with value
        // b/sqrt(2pi), the secondary peaks at x = sqrt(3) are 2e^{-3/2} < 1 of that.
        self.b * INV_SQRT_2PI
    }

    /// Integral of `V_eps` over the real line (for `d = 1`). Equals `b`.
    pub fn integral(&self) -> f64 {
        self.b
    }

    /// Pair force in the form used by the drift hot loop.
    pub(crate) fn pair_force(&self) -> PairForce {
        let d = self.dim as i32;
        PairForce {
            coef: self.b * INV_SQRT_2PI * self.epsilon.powi(-d - 2),
            decay: 0.5 / (self.epsilon * self.epsilon),
        }
    }
}

/// `grad(x) = -coef * x * exp(-decay * x^2)`, algebraically equal to
/// [`KernelSpec::grad`] but with the constants folded.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PairForce {
    coef: f64,
    decay: f64,
}

impl PairForce {
    #[inline(always)]
    pub(crate) fn eval(&self, x: f64) -> f64 {
        -self.coef * x * (-self.decay * x * x).exp()
    }
}

/// `V_eps(x)` for a validated kernel.
pub fn kernel_value(x: f64, spec: &KernelSpec) -> f64 {
    spec.value(x)
}

/// `V_eps'(x)` for a validated kernel.
pub fn kernel_grad(x: f64, spec: &KernelSpec) -> f64 {
    spec.grad(x)
}

pub fn second_derivative_sup(spec: &KernelSpec) -> f64 {
    spec.second_derivative_sup()
}
