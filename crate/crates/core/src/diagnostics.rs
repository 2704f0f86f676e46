//! Executable convergence certificates for the coordinate descent solver.
//!
//! A converged run is not taken on faith: every sweep can be checked against
//! - sufficient decrease: `F(x^k) − F(x^{k+1}) ≥ θ‖x^k − x^{k+1}‖²` with
//!   `θ = (1 + concavity_floor)/2`,
//! - a subgradient witness `d^{k+1} ∈ ∂F(x^{k+1})` with
//!   `dᵢ = Σ_{j>i} (x_j^{k+1} − x_j^k)·AᵢᵀAⱼ` and `‖d‖ ≤ p‖Δx‖`,
//!
//! and the final iterate against the stationarity condition `0 ∈ ∂F(x̂)`.
//! The contraction factor of the step norms is estimated from the trace tail
//! by a log-linear fit; the objective is a KL function with exponent ½, so a
//! geometric tail is what the theory predicts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};
use crate::penalty::PenaltySpec;
use crate::solver::{Problem, SolveResult, SolveStatus};

/// Slack on the sufficient-decrease inequality; ΔF is a difference of
/// O(‖b‖²) quantities, so it cannot be tested exactly.
pub const H1_SLACK: f64 = 1e-10;
/// Slack on the witness-bound inequality.
pub const H2_SLACK: f64 = 1e-10;
/// Tolerance on the subgradient membership of the witness.
pub const MEMBERSHIP_TOL: f64 = 1e-8;
/// Step norms below this are floating-point dust and excluded from rate fits.
pub const STEP_FLOOR: f64 = 100.0 * f64::EPSILON;

/// Outcome of one sufficient-decrease check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H1Check {
    pub ok: bool,
    /// `(f_prev − f_next) − θ·‖Δx‖²`; negative means violated.
    pub margin: f64,
}

/// Checks `f_prev − f_next ≥ theta·step_norm_sq` up to [`H1_SLACK`].
pub fn check_sufficient_decrease(
    f_prev: f64,
    f_next: f64,
    step_norm_sq: f64,
    theta: f64,
) -> H1Check {
    assert!(theta > 0.0, "theta must be positive");
    let margin = (f_prev - f_next) - theta * step_norm_sq;
    H1Check {
        ok: margin >= -H1_SLACK,
        margin,
    }
}

/// The explicit subgradient element produced by one cyclic sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    /// `dᵢ = Σ_{j>i} Δxⱼ·AᵢᵀAⱼ`.
    pub d: Vec<f64>,
    pub norm: f64,
    /// `p·‖Δx‖`; `‖d‖` never exceeds it for unit columns.
    pub bound: f64,
    /// Worst coordinate distance of `dᵢ − ∇ᵢfit(x_next)` from ∂ρ(xᵢ).
    pub membership_gap: f64,
    /// Coordinate attaining the membership gap.
    pub worst_index: usize,
    /// Whether the sharper per-coordinate bound `|dᵢ| ≤ √(p−i)·‖Δx‖` held
    /// for every coordinate.
    pub per_coordinate_ok: bool,
}

#[allow(clippy::needless_range_loop)] // literal transcription of the formula
fn witness_unchecked(
    problem: &Problem,
    spec: &PenaltySpec,
    x_prev: &[f64],
    x_next: &[f64],
) -> Witness {
    let p = problem.p();
    assert_eq!(x_prev.len(), p, "x_prev length");
    assert_eq!(x_next.len(), p, "x_next length");
    let a = problem.a();

    // Literal double loop over cross-products; gated behind the certificate
    // flag precisely because it is O(p²n).
    let mut d = vec![0.0; p];
    for i in 0..p {
        let col_i = a.col(i);
        let mut acc = 0.0;
        for j in (i + 1)..p {
            let delta = x_next[j] - x_prev[j];
            if delta != 0.0 {
                acc += delta * dot(col_i, a.col(j));
            }
        }
        d[i] = acc;
    }

    let step_norm = crate::linalg::dist2(x_next, x_prev);
    let norm = norm2(&d);
    let bound = p as f64 * step_norm;

    let mut per_coordinate_ok = true;
    for (i, &di) in d.iter().enumerate() {
        let coord_bound = ((p - 1 - i) as f64).sqrt() * step_norm;
        if di.abs() > coord_bound + H2_SLACK {
            per_coordinate_ok = false;
        }
    }

    // Membership: dᵢ − ∇ᵢfit must land in ∂ρ(xᵢ) at the new iterate.
    let residual = problem.residual(x_next);
    let lambda = spec.lambda();
    let mut membership_gap = 0.0;
    let mut worst_index = 0;
    for i in 0..p {
        let grad_i = -dot(a.col(i), &residual);
        let z = d[i] - grad_i;
        let gap = if x_next[i] == 0.0 {
            (z.abs() - lambda).max(0.0)
        } else {
            let rho_prime = x_next[i].signum() * spec_derivative_magnitude(spec, x_next[i].abs());
            (z - rho_prime).abs()
        };
        if gap > membership_gap {
            membership_gap = gap;
            worst_index = i;
        }
    }

    Witness {
        d,
        norm,
        bound,
        membership_gap,
        worst_index,
        per_coordinate_ok,
    }
}

fn spec_derivative_magnitude(spec: &PenaltySpec, m: f64) -> f64 {
    // m > 0 here, so the derivative is single-valued.
    spec.derivative_magnitude(m)
}

/// Builds the subgradient witness for a pair of consecutive cyclic-sweep
/// iterates and verifies its membership in `∂F(x_next)`.
///
/// Errors when the membership gap exceeds [`MEMBERSHIP_TOL`], which signals
/// that `x_next` did not come from one cyclic sweep at `x_prev`.
pub fn subgradient_witness(
    problem: &Problem,
    spec: &PenaltySpec,
    x_prev: &[f64],
    x_next: &[f64],
) -> Result<Witness> {
    let w = witness_unchecked(problem, spec, x_prev, x_next);
    if w.membership_gap > MEMBERSHIP_TOL {
        return Err(Error::MembershipViolation {
            index: w.worst_index,
            gap: w.membership_gap,
        });
    }
    Ok(w)
}

/// Everything the convergence theory asserts about one sweep, evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCertificate {
    pub sweep: usize,
    /// `F(x^k) − F(x^{k+1})`.
    pub delta_f: f64,
    /// `‖x^k − x^{k+1}‖²`.
    pub step_norm_sq: f64,
    pub theta: f64,
    /// `delta_f ≥ theta·step_norm_sq` up to slack.
    pub h1_ok: bool,
    pub d_norm: f64,
    /// `p·‖Δx‖`.
    pub d_bound: f64,
    /// `d_norm ≤ d_bound` up to slack.
    pub h2_ok: bool,
    pub d_membership_gap: f64,
    /// The sharper per-coordinate bound `|dᵢ| ≤ √(p−i)·‖Δx‖`.
    pub d_coord_ok: bool,
}

/// Evaluates both sweep certificates for the transition
/// `x_prev → x_next` with objectives `f_prev → f_next`.
pub fn certify_sweep(
    problem: &Problem,
    spec: &PenaltySpec,
    sweep: usize,
    f_prev: f64,
    f_next: f64,
    x_prev: &[f64],
    x_next: &[f64],
) -> SweepCertificate {
    let step_norm_sq = x_prev
        .iter()
        .zip(x_next)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>();
    let theta = spec.theta();
    let h1 = check_sufficient_decrease(f_prev, f_next, step_norm_sq, theta);
    let w = witness_unchecked(problem, spec, x_prev, x_next);
    SweepCertificate {
        sweep,
        delta_f: f_prev - f_next,
        step_norm_sq,
        theta,
        h1_ok: h1.ok,
        d_norm: w.norm,
        d_bound: w.bound,
        h2_ok: w.norm <= w.bound + H2_SLACK,
        d_membership_gap: w.membership_gap,
        d_coord_ok: w.per_coordinate_ok,
    }
}

/// Euclidean norm of the coordinate-wise distance of `0` from `∂F(x)`:
/// with `gᵢ = Aᵢᵀ(Ax − b)`, the distance is `max(0, |gᵢ| − λ)` where
/// `xᵢ = 0` and `|gᵢ + ρ′(xᵢ)|` elsewhere. Zero exactly at stationary
/// points.
pub fn stationarity_gap(problem: &Problem, spec: &PenaltySpec, x: &[f64]) -> f64 {
    assert_eq!(x.len(), problem.p(), "stationarity_gap dimension");
    let residual = problem.residual(x);
    let lambda = spec.lambda();
    let mut acc = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        let grad_i = -dot(problem.a().col(i), &residual);
        let g = if xi == 0.0 {
            (grad_i.abs() - lambda).max(0.0)
        } else {
            let rho_prime = xi.signum() * spec_derivative_magnitude(spec, xi.abs());
            (grad_i + rho_prime).abs()
        };
        acc += g * g;
    }
    acc.sqrt()
}

/// Empirical contraction estimate from the tail of a step-norm sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    /// Estimated per-sweep contraction factor (exp of the fitted slope).
    pub nu_hat: f64,
    /// Estimated prefactor (exp of the fitted intercept).
    pub eta_hat: f64,
    /// Goodness of the log-linear fit.
    pub r_squared: f64,
    /// First and last index (into the supplied sequence) used by the fit.
    pub window: (usize, usize),
    pub n_points: usize,
    /// True when the fit is trustworthy (r² ≥ 0.9) and ν falls in (0, 1).
    pub conclusive: bool,
}

/// Least-squares fit of `log(step_norm_k)` against `k` over the tail of the
/// sequence.
///
/// Entries at or below [`STEP_FLOOR`] are excluded as floating-point dust.
/// The window is the last `ceil(tail_fraction · usable)` points, never fewer
/// than 5; errors when fewer than 5 usable points exist.
pub fn estimate_rate(step_norms: &[f64], tail_fraction: f64) -> Result<RateEstimate> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InsufficientData(format!(
            "tail_fraction must lie in (0, 1], got {tail_fraction}"
        )));
    }
    let usable: Vec<(usize, f64)> = step_norms
        .iter()
        .enumerate()
        .filter(|(_, &s)| s.is_finite() && s > STEP_FLOOR)
        .map(|(k, &s)| (k, s.ln()))
        .collect();
    if usable.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "need at least 5 usable step norms, have {}",
            usable.len()
        )));
    }
    let take = ((tail_fraction * usable.len() as f64).ceil() as usize)
        .max(5)
        .min(usable.len());
    let window = &usable[usable.len() - take..];

    let m = window.len() as f64;
    let mean_k = window.iter().map(|(k, _)| *k as f64).sum::<f64>() / m;
    let mean_y = window.iter().map(|(_, y)| *y).sum::<f64>() / m;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for &(k, y) in window {
        let dk = k as f64 - mean_k;
        let dy = y - mean_y;
        sxx += dk * dk;
        sxy += dk * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_k;
    let ss_res = (syy - slope * sxy).max(0.0);
    let r_squared = if syy <= 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).min(1.0)
    };
    let nu_hat = slope.exp();
    let eta_hat = intercept.exp();
    Ok(RateEstimate {
        nu_hat,
        eta_hat,
        r_squared,
        window: (window[0].0, window[window.len() - 1].0),
        n_points: window.len(),
        conclusive: r_squared >= 0.9 && nu_hat > 0.0 && nu_hat < 1.0,
    })
}

/// Partial sum of the step norms plus a geometric-decay indicator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteLengthReport {
    /// `Σ_k ‖x^k − x^{k+1}‖` over the recorded sweeps.
    pub total: f64,
    /// Per-step ratio over the trailing window (up to the last 10 positive
    /// steps): `(last/first)^(1/(m−1))`. Below one means the tail decays.
    pub tail_ratio: Option<f64>,
}

pub fn finite_length(step_norms: &[f64]) -> FiniteLengthReport {
    let total = step_norms.iter().sum();
    let positive: Vec<f64> = step_norms.iter().copied().filter(|&s| s > 0.0).collect();
    let m = positive.len().min(10);
    let tail_ratio = if m >= 2 {
        let window = &positive[positive.len() - m..];
        Some((window[m - 1] / window[0]).powf(1.0 / (m as f64 - 1.0)))
    } else {
        None
    };
    FiniteLengthReport { total, tail_ratio }
}

/// One failed consistency check found by [`verify_result`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Sweep the violation belongs to, when it is sweep-local.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<usize>,
    pub check: String,
    pub detail: String,
}

fn violation(sweep: Option<usize>, check: &str, detail: String) -> Violation {
    Violation {
        sweep,
        check: check.to_string(),
        detail,
    }
}

/// Re-runs every certificate inequality and consistency relation a stored
/// result claims, against the problem it was computed from.
///
/// Sweep-local checks are split across `threads` worker threads (the records
/// are independent once the previous objective is in hand).
pub fn verify_result(problem: &Problem, result: &SolveResult, threads: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    let spec = &result.penalty;
    let p = problem.p();

    if result.x_hat_normalized.len() != p || result.x_hat.len() != p {
        out.push(violation(
            None,
            "dimensions",
            format!(
                "x_hat/x_hat_normalized have lengths {}/{}, problem has p={p}",
                result.x_hat.len(),
                result.x_hat_normalized.len()
            ),
        ));
        return out;
    }

    for i in 0..p {
        let expected = result.x_hat_normalized[i] / problem.column_scales()[i];
        if (result.x_hat[i] - expected).abs() > 1e-12 * (1.0 + expected.abs()) {
            out.push(violation(
                None,
                "scale_map",
                format!(
                    "x_hat[{i}] = {} but x_hat_normalized[{i}]/scale = {expected}",
                    result.x_hat[i]
                ),
            ));
        }
    }

    let support = result
        .x_hat_normalized
        .iter()
        .filter(|&&v| v != 0.0)
        .count();
    if support != result.support_size {
        out.push(violation(
            None,
            "support_size",
            format!("stored {}, recomputed {support}", result.support_size),
        ));
    }

    if result.sweeps != result.trace.len() {
        out.push(violation(
            None,
            "sweep_count",
            format!(
                "sweeps field {} vs trace length {}",
                result.sweeps,
                result.trace.len()
            ),
        ));
    }

    match crate::solver::objective(problem, spec, &result.x_hat_normalized) {
        Ok(f) => {
            if (f - result.objective).abs() > 1e-10 * (1.0 + f.abs()) {
                out.push(violation(
                    None,
                    "objective",
                    format!("stored {} vs recomputed {f}", result.objective),
                ));
            }
        }
        Err(e) => out.push(violation(None, "objective", e.to_string())),
    }

    let gap = stationarity_gap(problem, spec, &result.x_hat_normalized);
    if (gap - result.stationarity_gap).abs() > 1e-9 {
        out.push(violation(
            None,
            "stationarity_gap",
            format!("stored {} vs recomputed {gap}", result.stationarity_gap),
        ));
    }

    if result.status == SolveStatus::Converged {
        match result.trace.records.last() {
            Some(last) => {
                if last.step_norm > result.options.tol {
                    out.push(violation(
                        Some(last.sweep),
                        "converged_step",
                        format!(
                            "status converged but final step norm {} > tol {}",
                            last.step_norm, result.options.tol
                        ),
                    ));
                }
            }
            None => out.push(violation(
                None,
                "converged_step",
                "status converged with an empty trace".into(),
            )),
        }
    }

    // Sweep-local checks, parallelized over chunks of the trace.
    let records = &result.trace.records;
    let theta = spec.theta();
    let check_range = |lo: usize, hi: usize| -> Vec<Violation> {
        let mut v = Vec::new();
        for idx in lo..hi {
            let rec = &records[idx];
            let prev_objective = if idx == 0 {
                result.initial_objective
            } else {
                records[idx - 1].objective
            };
            if rec.sweep != idx + 1 {
                v.push(violation(
                    Some(rec.sweep),
                    "sweep_numbering",
                    format!(
                        "record at position {idx} carries sweep number {}",
                        rec.sweep
                    ),
                ));
            }
            if !(rec.objective.is_finite() && rec.step_norm.is_finite()) {
                v.push(violation(
                    Some(rec.sweep),
                    "finite",
                    "non-finite objective or step norm".into(),
                ));
                continue;
            }
            if rec.objective > prev_objective + H1_SLACK {
                v.push(violation(
                    Some(rec.sweep),
                    "monotonicity",
                    format!("objective rose from {prev_objective} to {}", rec.objective),
                ));
            }
            if let Some(h1_lhs) = rec.h1_lhs {
                let chain = prev_objective - rec.objective;
                if (h1_lhs - chain).abs() > 1e-9 * (1.0 + h1_lhs.abs()) {
                    v.push(violation(
                        Some(rec.sweep),
                        "delta_f_chain",
                        format!("recorded delta_f {h1_lhs} vs objective chain {chain}"),
                    ));
                }
                let rhs_expected = theta * rec.step_norm * rec.step_norm;
                if let Some(h1_rhs) = rec.h1_rhs {
                    if (h1_rhs - rhs_expected).abs() > 1e-12 * (1.0 + rhs_expected.abs()) {
                        v.push(violation(
                            Some(rec.sweep),
                            "h1_rhs",
                            format!("recorded {h1_rhs} vs theta*step^2 = {rhs_expected}"),
                        ));
                    }
                }
                if h1_lhs < rhs_expected - H1_SLACK {
                    v.push(violation(
                        Some(rec.sweep),
                        "sufficient_decrease",
                        format!("delta_f {h1_lhs} < theta*step^2 {rhs_expected}"),
                    ));
                }
            }
            if let (Some(d_norm), Some(d_bound)) = (rec.d_norm, rec.d_bound) {
                let bound_expected = p as f64 * rec.step_norm;
                if (d_bound - bound_expected).abs() > 1e-12 * (1.0 + bound_expected) {
                    v.push(violation(
                        Some(rec.sweep),
                        "d_bound",
                        format!("recorded {d_bound} vs p*step = {bound_expected}"),
                    ));
                }
                if d_norm > d_bound + H2_SLACK {
                    v.push(violation(
                        Some(rec.sweep),
                        "witness_bound",
                        format!("|d| = {d_norm} > bound {d_bound}"),
                    ));
                }
            }
            if let Some(gap) = rec.d_membership_gap {
                if gap > MEMBERSHIP_TOL {
                    v.push(violation(
                        Some(rec.sweep),
                        "witness_membership",
                        format!("membership gap {gap}"),
                    ));
                }
            }
        }
        v
    };

    let threads = threads.max(1).min(records.len().max(1));
    if threads <= 1 || records.len() < 64 {
        out.extend(check_range(0, records.len()));
    } else {
        let chunk = records.len().div_ceil(threads);
        let mut collected: Vec<Vec<Violation>> = Vec::new();
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for t in 0..threads {
                let lo = t * chunk;
                let hi = ((t + 1) * chunk).min(records.len());
                if lo >= hi {
                    break;
                }
                let check_range = &check_range;
                handles.push(scope.spawn(move || check_range(lo, hi)));
            }
            for h in handles {
                collected.push(h.join().expect("verifier thread panicked"));
            }
        });
        for c in collected {
            out.extend(c);
        }
    }

    out.sort_by_key(|v| v.sweep.unwrap_or(0));
    out
}
