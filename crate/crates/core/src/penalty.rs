//! Penalty family: values, derivatives, scalar thresholding operators.
//!
//! Three sparsity-inducing penalties ρ_{λ,τ} over the reals:
//!
//! - Lasso: `λ|t|`, convex, biased for large coefficients.
//! - SCAD (τ > 2): linear `λ|t|` near zero, quadratic blend on
//!   `λ < |t| ≤ λτ`, constant `λ²(τ+1)/2` beyond.
//! - MCP (τ > 1): `λ(|t| − t²/(2λτ))` below `λτ`, constant `λ²τ/2` beyond.
//!
//! Each penalty comes with a closed-form scalar proximal map ("thresholding
//! operator") `S(v) = argmin_t ½(t−v)² + ρ(t)`, the update rule of the
//! coordinate descent solver. The τ ranges keep `1 + inf ρ″ > 0`, so the
//! scalar subproblem is strictly convex and the map single-valued.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which penalty is in force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyFamily {
    Lasso,
    Scad,
    Mcp,
}

impl std::fmt::Display for PenaltyFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PenaltyFamily::Lasso => "lasso",
            PenaltyFamily::Scad => "scad",
            PenaltyFamily::Mcp => "mcp",
        };
        f.write_str(s)
    }
}

/// A validated penalty: family plus regularization weight λ and concavity
/// parameter τ (stored but ignored for Lasso).
///
/// Serializes as `{"family": "lasso"|"scad"|"mcp", "lambda": f, "tau": f}`;
/// deserialization re-runs the range checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PenaltySpecRaw")]
pub struct PenaltySpec {
    family: PenaltyFamily,
    lambda: f64,
    tau: f64,
}

#[derive(Deserialize)]
struct PenaltySpecRaw {
    family: PenaltyFamily,
    lambda: f64,
    #[serde(default)]
    tau: f64,
}

impl TryFrom<PenaltySpecRaw> for PenaltySpec {
    type Error = Error;

    fn try_from(raw: PenaltySpecRaw) -> Result<Self> {
        PenaltySpec::new(raw.family, raw.lambda, raw.tau)
    }
}

impl PenaltySpec {
    /// Validates λ > 0 (finite) and τ against the family range:
    /// SCAD requires τ > 2, MCP requires τ > 1.
    pub fn new(family: PenaltyFamily, lambda: f64, tau: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::InvalidPenalty(format!(
                "lambda must be a positive finite real, got {lambda}"
            )));
        }
        if !tau.is_finite() {
            return Err(Error::InvalidPenalty(format!(
                "tau must be finite, got {tau}"
            )));
        }
        match family {
            PenaltyFamily::Lasso => {}
            PenaltyFamily::Scad => {
                if tau <= 2.0 {
                    return Err(Error::InvalidPenalty(format!(
                        "SCAD requires tau > 2, got {tau}"
                    )));
                }
            }
            PenaltyFamily::Mcp => {
                if tau <= 1.0 {
                    return Err(Error::InvalidPenalty(format!(
                        "MCP requires tau > 1, got {tau}"
                    )));
                }
            }
        }
        Ok(Self {
            family,
            lambda,
            tau,
        })
    }

    pub fn lasso(lambda: f64) -> Result<Self> {
        Self::new(PenaltyFamily::Lasso, lambda, 0.0)
    }

    pub fn scad(lambda: f64, tau: f64) -> Result<Self> {
        Self::new(PenaltyFamily::Scad, lambda, tau)
    }

    pub fn mcp(lambda: f64, tau: f64) -> Result<Self> {
        Self::new(PenaltyFamily::Mcp, lambda, tau)
    }

    pub fn family(&self) -> PenaltyFamily {
        self.family
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// ρ_{λ,τ}(t). Even in `t`, zero at zero, non-negative, continuous.
    pub fn value(&self, t: f64) -> f64 {
        let lambda = self.lambda;
        let tau = self.tau;
        let m = t.abs();
        match self.family {
            PenaltyFamily::Lasso => lambda * m,
            PenaltyFamily::Scad => {
                if m <= lambda {
                    lambda * m
                } else if m <= lambda * tau {
                    (lambda * tau * m - 0.5 * (m * m + lambda * lambda)) / (tau - 1.0)
                } else {
                    lambda * lambda * (tau + 1.0) / 2.0
                }
            }
            PenaltyFamily::Mcp => {
                if m < lambda * tau {
                    lambda * m - m * m / (2.0 * tau)
                } else {
                    lambda * lambda * tau / 2.0
                }
            }
        }
    }

    /// dρ/dt away from the origin, taken from the integral definitions:
    /// SCAD `sgn(t)·λ·min(1, max(0, λτ−|t|)/(λ(τ−1)))`, MCP
    /// `sgn(t)·λ·max(0, 1−|t|/(λτ))`, Lasso `λ·sgn(t)`.
    ///
    /// Odd in `t`, bounded by λ, identically zero past λτ for SCAD/MCP.
    /// Errors at `t = 0`, where the penalty is nonsmooth; use
    /// [`subdifferential_at_zero`](Self::subdifferential_at_zero) there.
    pub fn derivative(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Err(Error::DerivativeAtZero);
        }
        let d = t.signum() * self.derivative_magnitude(t.abs());
        // avoid emitting -0.0 on the flat branches
        Ok(if d == 0.0 { 0.0 } else { d })
    }

    /// dρ/dm at `m = |t| > 0` (the one-sided slope in the radial direction).
    pub(crate) fn derivative_magnitude(&self, m: f64) -> f64 {
        let lambda = self.lambda;
        let tau = self.tau;
        match self.family {
            PenaltyFamily::Lasso => lambda,
            PenaltyFamily::Scad => {
                if m <= lambda {
                    lambda
                } else if m < lambda * tau {
                    (lambda * tau - m) / (tau - 1.0)
                } else {
                    0.0
                }
            }
            PenaltyFamily::Mcp => {
                if m < lambda * tau {
                    lambda - m / tau
                } else {
                    0.0
                }
            }
        }
    }

    /// The subdifferential of ρ at the origin, `[−λ, +λ]` for all three
    /// families.
    pub fn subdifferential_at_zero(&self) -> (f64, f64) {
        (-self.lambda, self.lambda)
    }

    /// The thresholding operator `S(v) = argmin_t ½(t−v)² + ρ_{λ,τ}(t)`.
    ///
    /// Closed form per family:
    /// - Lasso: soft threshold `sgn(v)·max(|v|−λ, 0)`.
    /// - SCAD: `0` on `|v| ≤ λ`; soft threshold on `λ < |v| ≤ 2λ`;
    ///   `sgn(v)·((τ−1)|v| − λτ)/(τ−2)` on `2λ < |v| ≤ λτ`; `v` beyond.
    /// - MCP: `0` on `|v| ≤ λ`; `sgn(v)·τ(|v|−λ)/(τ−1)` on `λ < |v| ≤ λτ`;
    ///   `v` beyond.
    ///
    /// Odd in `v`, a shrinkage (`|S(v)| ≤ |v|`), zero exactly on `|v| ≤ λ`,
    /// and the identity past λτ for SCAD/MCP (unbiasedness).
    pub fn threshold(&self, v: f64) -> f64 {
        let lambda = self.lambda;
        let tau = self.tau;
        let m = v.abs();
        match self.family {
            PenaltyFamily::Lasso => {
                if m <= lambda {
                    0.0
                } else {
                    v.signum() * (m - lambda)
                }
            }
            PenaltyFamily::Scad => {
                if m <= lambda {
                    0.0
                } else if m <= 2.0 * lambda {
                    v.signum() * (m - lambda)
                } else if m <= lambda * tau {
                    v.signum() * ((tau - 1.0) * m - lambda * tau) / (tau - 2.0)
                } else {
                    v
                }
            }
            PenaltyFamily::Mcp => {
                if m <= lambda {
                    0.0
                } else if m <= lambda * tau {
                    v.signum() * tau * (m - lambda) / (tau - 1.0)
                } else {
                    v
                }
            }
        }
    }

    /// Brute-force prox: argmin of `½(t−v)² + ρ(t)` over the uniform grid
    /// `{−half_width, −half_width+step, …}` up to `+half_width`.
    ///
    /// Independent test oracle for [`threshold`](Self::threshold); within
    /// `step` of the true minimizer by strict convexity of the scalar
    /// subproblem. Requires `half_width ≥ |v| + λτ` so the minimizer is
    /// interior to the grid.
    pub fn prox_oracle(&self, v: f64, half_width: f64, step: f64) -> Result<f64> {
        if !v.is_finite() || !half_width.is_finite() || !step.is_finite() {
            return Err(Error::InvalidGrid("non-finite grid parameter".into()));
        }
        if step <= 0.0 {
            return Err(Error::InvalidGrid(format!("step must be > 0, got {step}")));
        }
        if half_width < v.abs() + self.lambda * self.tau {
            return Err(Error::InvalidGrid(format!(
                "half_width {half_width} < |v| + lambda*tau = {}",
                v.abs() + self.lambda * self.tau
            )));
        }
        let n_steps = (2.0 * half_width / step).ceil();
        if n_steps > 5e8 {
            return Err(Error::InvalidGrid(format!(
                "grid would have {n_steps} points; shrink half_width or grow step"
            )));
        }
        let n_steps = n_steps as usize;
        let mut best_t = -half_width;
        let mut best_f = f64::INFINITY;
        for k in 0..=n_steps {
            let t = -half_width + k as f64 * step;
            let f = 0.5 * (t - v) * (t - v) + self.value(t);
            if f < best_f {
                best_f = f;
                best_t = t;
            }
        }
        Ok(best_t)
    }

    /// `inf_t min{ρ″(t), 0}` away from breakpoints: 0 for Lasso, −1/τ for
    /// MCP, −1/(τ−1) for SCAD. The analytic constant, not an estimate: the
    /// solver's sufficient-decrease constant θ is built from it.
    pub fn concavity_floor(&self) -> f64 {
        match self.family {
            PenaltyFamily::Lasso => 0.0,
            PenaltyFamily::Scad => -1.0 / (self.tau - 1.0),
            PenaltyFamily::Mcp => -1.0 / self.tau,
        }
    }

    /// Sufficient-decrease constant `θ = (1 + concavity_floor)/2`, positive
    /// under the τ range checks. One exact coordinate minimization decreases
    /// the objective by at least `θ·(Δxᵢ)²`.
    pub fn theta(&self) -> f64 {
        (1.0 + self.concavity_floor()) / 2.0
    }

    /// First |t| past which the thresholding operator is the identity
    /// (λτ for SCAD/MCP; infinite for Lasso, which shrinks everywhere).
    pub fn unbiasedness_radius(&self) -> f64 {
        match self.family {
            PenaltyFamily::Lasso => f64::INFINITY,
            PenaltyFamily::Scad | PenaltyFamily::Mcp => self.lambda * self.tau,
        }
    }
}
