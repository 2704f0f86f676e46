//! Cyclic coordinate descent over the penalized least-squares objective
//! `F(x) = ½‖Ax − b‖² + Σᵢ ρ_{λ,τ}(xᵢ)`.
//!
//! Each coordinate update is one thresholding call on
//! `cᵢ = Aᵢᵀ r + xᵢ` where `r = b − Ax` is maintained incrementally, so a
//! sweep costs O(np) instead of the O(np) *per coordinate* of the literal
//! definition. A scheduled full residual recomputation bounds the
//! accumulated floating-point drift.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, RateEstimate};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm2, DenseMatrix};
use crate::penalty::{PenaltyFamily, PenaltySpec};

/// Default stopping threshold on `‖x^{k+1} − x^k‖₂`.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default sweep budget.
pub const DEFAULT_MAX_SWEEPS: usize = 10_000;
/// Default period (in sweeps) of the full residual recomputation.
pub const DEFAULT_REFRESH_PERIOD: usize = 100;

/// A least-squares design with unit-norm columns plus its response.
///
/// Construction normalizes the columns and records the original norms in
/// `column_scales`, so solutions map back to the raw scale via
/// `x_original[i] = x_normalized[i] / column_scales[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    a: DenseMatrix,
    b: Vec<f64>,
    column_scales: Vec<f64>,
}

impl Problem {
    /// Builds a problem from a raw design matrix and response, dividing each
    /// column by its Euclidean norm.
    ///
    /// Rejects empty shapes, non-finite entries and zero columns (a zero
    /// column makes its coordinate subproblem ill-posed).
    pub fn new(mut a: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        if a.n_rows() == 0 || a.n_cols() == 0 {
            return Err(Error::InvalidProblem(
                "design matrix must have at least one row and one column".into(),
            ));
        }
        if b.len() != a.n_rows() {
            return Err(Error::DimensionMismatch {
                context: "response length vs design rows".into(),
                expected: a.n_rows(),
                actual: b.len(),
            });
        }
        if !a.is_finite() {
            return Err(Error::NonFinite {
                context: "design matrix".into(),
            });
        }
        if !b.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "response vector".into(),
            });
        }
        let mut column_scales = Vec::with_capacity(a.n_cols());
        for j in 0..a.n_cols() {
            let norm = norm2(a.col(j));
            if norm < f64::MIN_POSITIVE {
                return Err(Error::ZeroColumn { index: j });
            }
            for v in a.col_mut(j) {
                *v /= norm;
            }
            column_scales.push(norm);
        }
        Ok(Self {
            a,
            b,
            column_scales,
        })
    }

    /// Wraps a design whose columns are already unit-norm (within 1e-10);
    /// column scales are recorded as exactly one.
    pub fn from_normalized(a: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        for j in 0..a.n_cols() {
            let norm = norm2(a.col(j));
            if (norm - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidProblem(format!(
                    "column {j} has norm {norm}, expected 1 within 1e-10"
                )));
            }
        }
        let scales = vec![1.0; a.n_cols()];
        let p = Self::new(a, b)?;
        Ok(Self {
            column_scales: scales,
            ..p
        })
    }

    pub fn n(&self) -> usize {
        self.a.n_rows()
    }

    pub fn p(&self) -> usize {
        self.a.n_cols()
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn column_scales(&self) -> &[f64] {
        &self.column_scales
    }

    /// `b − Ax`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = self.b.clone();
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                axpy(-xj, self.a.col(j), &mut r);
            }
        }
        r
    }

    /// Smallest λ for which `x = 0` is stationary: `maxᵢ |Aᵢᵀ b|`.
    /// For λ at or above this value every `|cᵢ|` at `x = 0` falls in the
    /// thresholding dead zone.
    pub fn lambda_max(&self) -> f64 {
        (0..self.p())
            .map(|j| dot(self.a.col(j), &self.b).abs())
            .fold(0.0, f64::max)
    }
}

/// `F(x) = ½‖Ax − b‖² + Σᵢ ρ(xᵢ)` for the normalized problem.
pub fn objective(problem: &Problem, spec: &PenaltySpec, x: &[f64]) -> Result<f64> {
    if x.len() != problem.p() {
        return Err(Error::DimensionMismatch {
            context: "objective argument".into(),
            expected: problem.p(),
            actual: x.len(),
        });
    }
    let r = problem.residual(x);
    Ok(objective_parts(&r, spec, x))
}

fn objective_parts(residual: &[f64], spec: &PenaltySpec, x: &[f64]) -> f64 {
    let fit = 0.5 * dot(residual, residual);
    let penalty: f64 = x.iter().map(|&xi| spec.value(xi)).sum();
    fit + penalty
}

/// Iterate plus maintained residual `r = b − Ax`.
#[derive(Debug, Clone)]
pub struct CdState {
    x: Vec<f64>,
    residual: Vec<f64>,
}

impl CdState {
    pub fn new(problem: &Problem, x0: Vec<f64>) -> Result<Self> {
        if x0.len() != problem.p() {
            return Err(Error::DimensionMismatch {
                context: "initial iterate".into(),
                expected: problem.p(),
                actual: x0.len(),
            });
        }
        if !x0.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "initial iterate".into(),
            });
        }
        let residual = problem.residual(&x0);
        Ok(Self { x: x0, residual })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn residual(&self) -> &[f64] {
        &self.residual
    }

    /// Recomputes `r = b − Ax` from scratch, discarding accumulated drift.
    pub fn refresh_residual(&mut self, problem: &Problem) {
        self.residual = problem.residual(&self.x);
    }
}

/// What one sweep did.
#[derive(Debug, Clone, Copy)]
pub struct SweepStats {
    /// `‖x_after − x_before‖²`.
    pub step_norm_sq: f64,
    /// Number of coordinates whose value changed.
    pub changed: usize,
}

fn sweep_impl(
    problem: &Problem,
    spec: &PenaltySpec,
    state: &mut CdState,
    order: Option<&[usize]>,
    mut c_out: Option<&mut Vec<f64>>,
) -> Result<SweepStats> {
    if let Some(c) = c_out.as_deref_mut() {
        c.clear();
        c.resize(problem.p(), 0.0);
    }
    let mut step_norm_sq = 0.0;
    let mut changed = 0;
    let p = problem.p();
    for idx in 0..p {
        let i = order.map_or(idx, |ord| ord[idx]);
        let col = problem.a.col(i);
        let old = state.x[i];
        let c = dot(col, &state.residual) + old;
        if !c.is_finite() {
            return Err(Error::CorruptedState(format!(
                "coordinate {i}: c is not finite"
            )));
        }
        if let Some(out) = c_out.as_deref_mut() {
            out[i] = c;
        }
        let new = spec.threshold(c);
        if new != old {
            axpy(old - new, col, &mut state.residual);
            state.x[i] = new;
            let delta = new - old;
            step_norm_sq += delta * delta;
            changed += 1;
        }
    }
    Ok(SweepStats {
        step_norm_sq,
        changed,
    })
}

/// One cyclic pass over all coordinates: for i = 1..p,
/// `xᵢ ← S(Aᵢᵀ r + xᵢ)` with the residual updated after each change.
/// The objective never increases over a sweep.
pub fn cd_sweep(problem: &Problem, spec: &PenaltySpec, state: &mut CdState) -> Result<SweepStats> {
    sweep_impl(problem, spec, state, None, None)
}

/// Like [`cd_sweep`], additionally writing the `cᵢ` value each coordinate
/// minimized against into `c_out` (indexed by coordinate).
pub fn cd_sweep_recording(
    problem: &Problem,
    spec: &PenaltySpec,
    state: &mut CdState,
    c_out: &mut Vec<f64>,
) -> Result<SweepStats> {
    sweep_impl(problem, spec, state, None, Some(c_out))
}

/// Coordinate visit order within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepOrder {
    /// 1..p in order; the order the convergence certificates assume.
    Cyclic,
    /// Fresh random permutation each sweep. Excluded from certificate
    /// guarantees.
    Random { seed: u64 },
}

/// Where the starting iterate comes from.
#[derive(Debug, Clone)]
pub enum Init {
    Zeros,
    Custom(Vec<f64>),
    WarmStart(Vec<f64>),
}

impl Init {
    fn label(&self) -> &'static str {
        match self {
            Init::Zeros => "zeros",
            Init::Custom(_) => "custom",
            Init::WarmStart(_) => "warm_start",
        }
    }

    fn vector(&self, p: usize) -> Vec<f64> {
        match self {
            Init::Zeros => vec![0.0; p],
            Init::Custom(v) | Init::WarmStart(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub max_sweeps: usize,
    /// Stop once `‖x^{k+1} − x^k‖₂ ≤ tol`.
    pub tol: f64,
    pub init: Init,
    /// Compute the per-sweep decrease/witness certificates (adds O(p²n) per
    /// sweep for the witness; the plain solve path stays O(np)).
    pub collect_certificates: bool,
    /// Recompute the residual from scratch every this many sweeps.
    pub residual_refresh_period: usize,
    pub order: SweepOrder,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_sweeps: DEFAULT_MAX_SWEEPS,
            tol: DEFAULT_TOL,
            init: Init::Zeros,
            collect_certificates: false,
            residual_refresh_period: DEFAULT_REFRESH_PERIOD,
            order: SweepOrder::Cyclic,
        }
    }
}

impl SolverOptions {
    fn validate(&self, p: usize) -> Result<()> {
        if !self.tol.is_finite() || self.tol <= 0.0 {
            return Err(Error::InvalidOptions(format!(
                "tol must be a positive finite real, got {}",
                self.tol
            )));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidOptions("max_sweeps must be >= 1".into()));
        }
        if self.residual_refresh_period == 0 {
            return Err(Error::InvalidOptions(
                "residual_refresh_period must be >= 1".into(),
            ));
        }
        if let Init::Custom(v) | Init::WarmStart(v) = &self.init {
            if v.len() != p {
                return Err(Error::DimensionMismatch {
                    context: "init vector".into(),
                    expected: p,
                    actual: v.len(),
                });
            }
            if !v.iter().all(|t| t.is_finite()) {
                return Err(Error::NonFinite {
                    context: "init vector".into(),
                });
            }
        }
        if self.collect_certificates && matches!(self.order, SweepOrder::Random { .. }) {
            return Err(Error::InvalidOptions(
                "certificates require the cyclic sweep order".into(),
            ));
        }
        Ok(())
    }

    /// The configuration echoed into result artifacts (init reduced to its
    /// origin label; warm-start vectors are internal state, not config).
    pub fn echo(&self) -> OptionsEcho {
        OptionsEcho {
            max_sweeps: self.max_sweeps,
            tol: self.tol,
            init: self.init.label().to_string(),
            collect_certificates: self.collect_certificates,
            residual_refresh_period: self.residual_refresh_period,
            order: self.order,
        }
    }
}

/// Resolved solver configuration as serialized into every output artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionsEcho {
    pub max_sweeps: usize,
    pub tol: f64,
    pub init: String,
    pub collect_certificates: bool,
    pub residual_refresh_period: usize,
    pub order: SweepOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxSweeps,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveStatus::Converged => f.write_str("converged"),
            SolveStatus::MaxSweeps => f.write_str("max_sweeps"),
        }
    }
}

/// One sweep's worth of trace. Certificate fields are present only when the
/// solve collected certificates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sweep: usize,
    /// `F(x^k)` after this sweep.
    pub objective: f64,
    /// `‖x^k − x^{k−1}‖₂`.
    pub step_norm: f64,
    /// `F(x^{k−1}) − F(x^k)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h1_lhs: Option<f64>,
    /// `θ·‖x^k − x^{k−1}‖²`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h1_rhs: Option<f64>,
    /// `‖d^k‖` for the subgradient witness d.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_norm: Option<f64>,
    /// `p·‖x^k − x^{k−1}‖`, the witness bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_bound: Option<f64>,
    /// Worst coordinate distance of `d − ∇fit` from the penalty
    /// subdifferential; certifies `d ∈ ∂F(x^k)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_membership_gap: Option<f64>,
}

/// Per-sweep history of a solve.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SolveTrace {
    pub records: Vec<SweepRecord>,
}

impl SolveTrace {
    pub fn step_norms(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.step_norm).collect()
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    /// Penalty the solve ran with (configuration echo).
    pub penalty: PenaltySpec,
    /// Solver options the solve ran with (configuration echo).
    pub options: OptionsEcho,
    pub status: SolveStatus,
    /// Number of sweeps performed; equals `trace.len()`.
    pub sweeps: usize,
    /// `F(x⁰)`.
    pub initial_objective: f64,
    /// `F(x̂)` on the normalized scale.
    pub objective: f64,
    /// Euclidean norm of the coordinate-wise distance of `−∇fit(x̂)` from
    /// the penalty subdifferential; zero iff `0 ∈ ∂F(x̂)`.
    pub stationarity_gap: f64,
    /// Number of nonzero coordinates of x̂.
    pub support_size: usize,
    /// Final iterate mapped back to the original column scales.
    pub x_hat: Vec<f64>,
    /// Final iterate for the unit-column problem (where the theory lives).
    pub x_hat_normalized: Vec<f64>,
    /// Tail log-linear fit of the step norms, when enough usable points
    /// exist.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateEstimate>,
    pub trace: SolveTrace,
}

/// Runs cyclic coordinate descent from `opts.init` until the sweep step norm
/// drops to `opts.tol` or the sweep budget runs out.
pub fn solve(problem: &Problem, spec: &PenaltySpec, opts: &SolverOptions) -> Result<SolveResult> {
    opts.validate(problem.p())?;
    let mut state = CdState::new(problem, opts.init.vector(problem.p()))?;
    let mut order_rng = match opts.order {
        SweepOrder::Cyclic => None,
        SweepOrder::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
    };
    let mut order_buf: Vec<usize> = (0..problem.p()).collect();

    let initial_objective = objective_parts(&state.residual, spec, &state.x);
    if !initial_objective.is_finite() {
        return Err(Error::CorruptedState("initial objective not finite".into()));
    }
    let mut f_prev = initial_objective;
    let mut x_prev: Vec<f64> = Vec::new();
    let mut records = Vec::new();
    let mut status = SolveStatus::MaxSweeps;
    let mut sweeps = opts.max_sweeps;

    for k in 1..=opts.max_sweeps {
        if opts.collect_certificates {
            x_prev.clear();
            x_prev.extend_from_slice(&state.x);
        }
        let stats = match order_rng.as_mut() {
            None => sweep_impl(problem, spec, &mut state, None, None)?,
            Some(rng) => {
                order_buf.shuffle(rng);
                sweep_impl(problem, spec, &mut state, Some(&order_buf), None)?
            }
        };
        // Certificates need the exact gradient at the new iterate, so they
        // get a fresh residual every sweep; otherwise refresh on schedule.
        if opts.collect_certificates || k % opts.residual_refresh_period == 0 {
            state.refresh_residual(problem);
        }
        let f_next = objective_parts(&state.residual, spec, &state.x);
        if !f_next.is_finite() {
            return Err(Error::CorruptedState(format!(
                "objective not finite after sweep {k}"
            )));
        }
        let mut record = SweepRecord {
            sweep: k,
            objective: f_next,
            step_norm: stats.step_norm_sq.sqrt(),
            h1_lhs: None,
            h1_rhs: None,
            d_norm: None,
            d_bound: None,
            d_membership_gap: None,
        };
        if opts.collect_certificates {
            let cert =
                diagnostics::certify_sweep(problem, spec, k, f_prev, f_next, &x_prev, &state.x);
            record.step_norm = cert.step_norm_sq.sqrt();
            record.h1_lhs = Some(cert.delta_f);
            record.h1_rhs = Some(cert.theta * cert.step_norm_sq);
            record.d_norm = Some(cert.d_norm);
            record.d_bound = Some(cert.d_bound);
            record.d_membership_gap = Some(cert.d_membership_gap);
        }
        let step_norm = record.step_norm;
        records.push(record);
        f_prev = f_next;
        if step_norm <= opts.tol {
            status = SolveStatus::Converged;
            sweeps = k;
            break;
        }
    }

    state.refresh_residual(problem);
    let objective = objective_parts(&state.residual, spec, &state.x);
    let stationarity_gap = diagnostics::stationarity_gap(problem, spec, &state.x);
    let trace = SolveTrace { records };
    let rate = diagnostics::estimate_rate(&trace.step_norms(), 0.5).ok();
    let x_hat_normalized = state.x;
    let x_hat: Vec<f64> = x_hat_normalized
        .iter()
        .zip(problem.column_scales())
        .map(|(&xi, &s)| xi / s)
        .collect();
    let support_size = x_hat_normalized.iter().filter(|&&v| v != 0.0).count();

    Ok(SolveResult {
        penalty: *spec,
        options: opts.echo(),
        status,
        sweeps,
        initial_objective,
        objective,
        stationarity_gap,
        support_size,
        x_hat,
        x_hat_normalized,
        rate,
        trace,
    })
}

/// Solves over a descending λ grid, warm-starting each solve from the
/// previous solution (unless `warm_start` is off). Results come back in grid
/// order.
pub fn regularization_path(
    problem: &Problem,
    family: PenaltyFamily,
    tau: f64,
    lambdas: &[f64],
    opts: &SolverOptions,
    warm_start: bool,
) -> Result<Vec<SolveResult>> {
    if lambdas.is_empty() {
        return Err(Error::InvalidOptions("empty lambda grid".into()));
    }
    for pair in lambdas.windows(2) {
        if pair[1] > pair[0] {
            return Err(Error::InvalidOptions(format!(
                "lambda grid must be non-increasing, got {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    if !lambdas.iter().all(|l| l.is_finite() && *l > 0.0) {
        return Err(Error::InvalidOptions(
            "all lambdas must be positive finite reals".into(),
        ));
    }
    let mut results = Vec::with_capacity(lambdas.len());
    let mut carry: Option<Vec<f64>> = None;
    for &lambda in lambdas {
        let spec = PenaltySpec::new(family, lambda, tau)?;
        let mut step_opts = opts.clone();
        if let Some(prev) = carry.take() {
            step_opts.init = Init::WarmStart(prev);
        }
        let result = solve(problem, &spec, &step_opts)?;
        if warm_start {
            carry = Some(result.x_hat_normalized.clone());
        }
        results.push(result);
    }
    Ok(results)
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::linalg::dist2;

    fn identity_problem(b: Vec<f64>) -> Problem {
        let n = b.len();
        Problem::from_normalized(DenseMatrix::identity(n), b).unwrap()
    }

    #[test]
    fn normalize_identity_is_noop() {
        let p = Problem::new(DenseMatrix::identity(3), vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(p.column_scales(), &[1.0, 1.0, 1.0]);
        assert_eq!(p.a(), &DenseMatrix::identity(3));
    }

    #[test]
    fn normalize_rescales_columns() {
        let a = DenseMatrix::from_columns(&[vec![3.0, 4.0]]).unwrap();
        let p = Problem::new(a, vec![1.0, 1.0]).unwrap();
        assert_eq!(p.column_scales(), &[5.0]);
        assert_eq!(p.a().col(0), &[0.6, 0.8]);
    }

    #[test]
    fn zero_column_rejected() {
        let a = DenseMatrix::from_columns(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let err = Problem::new(a, vec![1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::ZeroColumn { index: 1 }));
    }

    #[test]
    fn non_finite_rejected() {
        let a = DenseMatrix::from_columns(&[vec![1.0, f64::NAN]]).unwrap();
        assert!(Problem::new(a, vec![1.0, 1.0]).is_err());
        let a = DenseMatrix::identity(2);
        assert!(Problem::new(a, vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn objective_examples() {
        let p = identity_problem(vec![1.0, 0.0]);
        let lasso = PenaltySpec::lasso(1.0).unwrap();
        // x = 0 → ½‖b‖²
        assert_eq!(objective(&p, &lasso, &[0.0, 0.0]).unwrap(), 0.5);
        // zero residual, penalty λ|1|
        assert_eq!(objective(&p, &lasso, &[1.0, 0.0]).unwrap(), 1.0);
        assert!(objective(&p, &lasso, &[1.0]).is_err());
    }

    #[test]
    fn objective_matches_naive_recomputation() {
        // Independent path: textbook loops and the closed-form penalty
        // branches written out locally.
        let spec = PenaltySpec::mcp(0.7, 2.5).unwrap();
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let rows: Vec<Vec<f64>> = (0..5).map(|_| (0..8).map(|_| next()).collect()).collect();
        let a = DenseMatrix::from_rows(&rows).unwrap();
        let b: Vec<f64> = (0..5).map(|_| next()).collect();
        let problem = Problem::new(a, b.clone()).unwrap();
        let x: Vec<f64> = (0..8).map(|_| next()).collect();

        let naive_pen = |t: f64| {
            let (l, tau) = (0.7, 2.5);
            let m = t.abs();
            if m < l * tau {
                l * m - m * m / (2.0 * tau)
            } else {
                l * l * tau / 2.0
            }
        };
        let mut fit = 0.0;
        for i in 0..5 {
            let mut pred = 0.0;
            for j in 0..8 {
                pred += problem.a().get(i, j) * x[j];
            }
            fit += (pred - b[i]) * (pred - b[i]);
        }
        let naive = 0.5 * fit + x.iter().map(|&t| naive_pen(t)).sum::<f64>();
        let got = objective(&problem, &spec, &x).unwrap();
        assert!((got - naive).abs() < 1e-12, "got {got}, naive {naive}");
    }

    #[test]
    fn sweep_decouples_on_identity_design() {
        let p = identity_problem(vec![3.0, 0.5]);
        let lasso = PenaltySpec::lasso(1.0).unwrap();
        let mut state = CdState::new(&p, vec![0.0, 0.0]).unwrap();
        cd_sweep(&p, &lasso, &mut state).unwrap();
        assert_eq!(state.x(), &[2.0, 0.0]);

        let mcp = PenaltySpec::mcp(1.0, 2.0).unwrap();
        let mut state = CdState::new(&p, vec![0.0, 0.0]).unwrap();
        cd_sweep(&p, &mcp, &mut state).unwrap();
        // |c₁| = 3 > λτ = 2 → identity branch
        assert_eq!(state.x(), &[3.0, 0.0]);
    }

    #[test]
    fn sweep_preserves_fixed_points() {
        let p = identity_problem(vec![3.0, 0.5]);
        let lasso = PenaltySpec::lasso(1.0).unwrap();
        let mut state = CdState::new(&p, vec![2.0, 0.0]).unwrap();
        let before = state.x().to_vec();
        let stats = cd_sweep(&p, &lasso, &mut state).unwrap();
        assert_eq!(state.x(), before.as_slice());
        assert_eq!(stats.step_norm_sq, 0.0);
        assert_eq!(stats.changed, 0);
    }

    #[test]
    fn solve_zero_response_in_one_sweep() {
        let a = DenseMatrix::from_columns(&[vec![0.6, 0.8], vec![1.0, 0.0]]).unwrap();
        let p = Problem::from_normalized(a, vec![0.0, 0.0]).unwrap();
        let spec = PenaltySpec::scad(0.5, 3.7).unwrap();
        let res = solve(&p, &spec, &SolverOptions::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Converged);
        assert_eq!(res.sweeps, 1);
        assert_eq!(res.x_hat, vec![0.0, 0.0]);
        assert_eq!(res.objective, 0.0);
        assert_eq!(res.support_size, 0);
    }

    #[test]
    fn lambda_max_examples() {
        let p = identity_problem(vec![3.0, 0.5]);
        assert_eq!(p.lambda_max(), 3.0);
        let p0 = identity_problem(vec![0.0, 0.0]);
        assert_eq!(p0.lambda_max(), 0.0);
    }

    #[test]
    fn lambda_max_matches_explicit_loop() {
        let cols: Vec<Vec<f64>> = vec![
            vec![0.3, -1.2, 0.4],
            vec![2.0, 0.1, -0.7],
            vec![-0.2, 0.5, 1.5],
        ];
        let a = DenseMatrix::from_columns(&cols).unwrap();
        let b = vec![0.9, -0.4, 0.6];
        let p = Problem::new(a, b.clone()).unwrap();
        let mut expected = 0.0f64;
        for j in 0..p.p() {
            let mut acc = 0.0;
            for i in 0..p.n() {
                acc += p.a().get(i, j) * b[i];
            }
            expected = expected.max(acc.abs());
        }
        assert_eq!(p.lambda_max(), expected);
    }

    #[test]
    fn lambda_above_lambda_max_gives_null_model() {
        let p = identity_problem(vec![3.0, 0.5]);
        let spec = PenaltySpec::mcp(3.1, 2.0).unwrap();
        let res = solve(&p, &spec, &SolverOptions::default()).unwrap();
        assert_eq!(res.x_hat, vec![0.0, 0.0]);
        assert_eq!(res.status, SolveStatus::Converged);
    }

    #[test]
    fn residual_stays_consistent_and_refresh_restores() {
        // A 4x6 design with correlated columns, several sweeps.
        let mut seed = 123u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let rows: Vec<Vec<f64>> = (0..4).map(|_| (0..6).map(|_| next()).collect()).collect();
        let a = DenseMatrix::from_rows(&rows).unwrap();
        let b: Vec<f64> = (0..4).map(|_| next() * 3.0).collect();
        let p = Problem::new(a, b).unwrap();
        let spec = PenaltySpec::lasso(0.05).unwrap();
        let mut state = CdState::new(&p, vec![0.0; 6]).unwrap();
        for _ in 0..50 {
            cd_sweep(&p, &spec, &mut state).unwrap();
        }
        let fresh = p.residual(state.x());
        let drift = dist2(state.residual(), &fresh);
        let b_norm = norm2(p.b());
        assert!(drift <= 1e-8 * (1.0 + b_norm), "drift {drift}");
        state.refresh_residual(&p);
        assert_eq!(state.residual(), fresh.as_slice());
    }

    #[test]
    fn degenerate_shapes_are_supported() {
        // p = 1: the problem reduces to one threshold call.
        let a = DenseMatrix::from_columns(&[vec![0.6, 0.8]]).unwrap();
        let p = Problem::from_normalized(a, vec![1.2, 1.6]).unwrap();
        let spec = PenaltySpec::lasso(0.5).unwrap();
        let res = solve(&p, &spec, &SolverOptions::default()).unwrap();
        // c = A₁ᵀb = 2.0 → soft-threshold → 1.5
        assert!((res.x_hat_normalized[0] - 1.5).abs() < 1e-12);

        // n = 1.
        let a = DenseMatrix::from_rows(&[vec![1.0, -1.0]]).unwrap();
        let p = Problem::new(a, vec![2.0]).unwrap();
        let res = solve(&p, &spec, &SolverOptions::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Converged);

        // n = p = 1.
        let a = DenseMatrix::from_columns(&[vec![2.0]]).unwrap();
        let p = Problem::new(a, vec![3.0]).unwrap();
        let res = solve(&p, &spec, &SolverOptions::default()).unwrap();
        // normalized column is 1; c = 3; soft → 2.5; original scale 2.5/2
        assert!((res.x_hat_normalized[0] - 2.5).abs() < 1e-12);
        assert!((res.x_hat[0] - 1.25).abs() < 1e-12);
    }

    #[test]
    fn options_validation() {
        let p = identity_problem(vec![1.0, 1.0]);
        let spec = PenaltySpec::lasso(0.1).unwrap();
        let mut opts = SolverOptions {
            tol: 0.0,
            ..Default::default()
        };
        assert!(solve(&p, &spec, &opts).is_err());
        opts.tol = 1e-8;
        opts.max_sweeps = 0;
        assert!(solve(&p, &spec, &opts).is_err());
        opts.max_sweeps = 10;
        opts.init = Init::Custom(vec![1.0]);
        assert!(solve(&p, &spec, &opts).is_err());
        opts.init = Init::Custom(vec![1.0, f64::NAN]);
        assert!(solve(&p, &spec, &opts).is_err());
        opts.init = Init::Zeros;
        opts.collect_certificates = true;
        opts.order = SweepOrder::Random { seed: 1 };
        assert!(matches!(
            solve(&p, &spec, &opts),
            Err(Error::InvalidOptions(_))
        ));
    }

    #[test]
    fn random_order_converges_too() {
        let p = identity_problem(vec![3.0, 0.5, -1.7]);
        let spec = PenaltySpec::lasso(0.2).unwrap();
        let opts = SolverOptions {
            order: SweepOrder::Random { seed: 99 },
            ..Default::default()
        };
        let res = solve(&p, &spec, &opts).unwrap();
        assert_eq!(res.status, SolveStatus::Converged);
        assert!((res.x_hat[0] - 2.8).abs() < 1e-12);
        assert!((res.x_hat[2] + 1.5).abs() < 1e-12);
    }

    #[test]
    fn path_above_lambda_max_is_null() {
        let p = identity_problem(vec![3.0, 0.5]);
        let lam = p.lambda_max() * 1.01;
        let results = regularization_path(
            &p,
            PenaltyFamily::Lasso,
            0.0,
            &[lam],
            &SolverOptions::default(),
            true,
        )
        .unwrap();
        assert_eq!(results.len(), 1);
        assert_eq!(results[0].x_hat, vec![0.0, 0.0]);
        assert_eq!(results[0].support_size, 0);
    }

    #[test]
    fn path_repeated_lambda_is_stable() {
        let p = identity_problem(vec![3.0, 0.5, 1.4]);
        let opts = SolverOptions::default();
        let results =
            regularization_path(&p, PenaltyFamily::Mcp, 2.0, &[0.8, 0.8], &opts, true).unwrap();
        let d = dist2(&results[0].x_hat_normalized, &results[1].x_hat_normalized);
        assert!(d <= 10.0 * opts.tol, "warm restart moved by {d}");
        assert_eq!(results[0].support_size, results[1].support_size);
    }

    #[test]
    fn path_rejects_bad_grids() {
        let p = identity_problem(vec![1.0, 1.0]);
        let opts = SolverOptions::default();
        assert!(regularization_path(&p, PenaltyFamily::Lasso, 0.0, &[], &opts, true).is_err());
        assert!(
            regularization_path(&p, PenaltyFamily::Lasso, 0.0, &[0.1, 0.2], &opts, true).is_err()
        );
        assert!(
            regularization_path(&p, PenaltyFamily::Lasso, 0.0, &[0.2, -0.1], &opts, true).is_err()
        );
    }
}
