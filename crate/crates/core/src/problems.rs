//! Instance generation and persistence.
//!
//! Synthetic problems follow the sparse linear model `b = Ax* + ξ`: Gaussian
//! design (optionally equi-correlated columns), unit-normalized, a sparse
//! ground truth with random support/signs and uniform magnitudes, Gaussian
//! noise. Generation is a pure function of the spec including its seed; the
//! generator is ChaCha8, which is seedable and stable across platforms, so
//! frozen checksums survive machine changes.
//!
//! File formats:
//! - problems: numeric CSV, first column `b`, remaining columns `A`
//!   (header row optional on input, auto-detected), or a separate
//!   design/response CSV pair;
//! - instance metadata, results, traces: JSON documents carrying a
//!   versioned `schema` identifier.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::solver::{Problem, SolveResult, SolveTrace};

/// Schema identifier written into instance metadata documents.
pub const INSTANCE_SCHEMA: &str = "cdcert/instance/v1";
/// Schema identifier written into solve-result documents.
pub const RESULT_SCHEMA: &str = "cdcert/result/v1";
/// Schema identifier written into regularization-path documents.
pub const PATH_SCHEMA: &str = "cdcert/path/v1";
/// Schema identifier written into diagnosis reports.
pub const DIAGNOSIS_SCHEMA: &str = "cdcert/diagnosis/v1";

/// Recipe for one synthetic instance of `b = Ax* + ξ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// Sample count (rows of A).
    pub n: usize,
    /// Feature count (columns of A).
    pub p: usize,
    /// Number of nonzeros in x*.
    pub sparsity: usize,
    /// Magnitude range for the nonzero |x*ᵢ|.
    pub signal_low: f64,
    pub signal_high: f64,
    /// Standard deviation of the noise entries.
    pub noise_sigma: f64,
    /// Equi-correlation of the design columns, in [0, 1).
    pub correlation: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n: 100,
            p: 400,
            sparsity: 10,
            signal_low: 0.5,
            signal_high: 1.5,
            noise_sigma: 0.1,
            correlation: 0.0,
            seed: 42,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::InvalidSpec("n and p must be >= 1".into()));
        }
        if self.sparsity > self.p {
            return Err(Error::InvalidSpec(format!(
                "sparsity {} exceeds p = {}",
                self.sparsity, self.p
            )));
        }
        if !(self.signal_low.is_finite() && self.signal_high.is_finite())
            || self.signal_low < 0.0
            || self.signal_low > self.signal_high
        {
            return Err(Error::InvalidSpec(format!(
                "signal range [{}, {}] must satisfy 0 <= low <= high",
                self.signal_low, self.signal_high
            )));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "noise_sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        if !self.correlation.is_finite() || !(0.0..1.0).contains(&self.correlation) {
            return Err(Error::InvalidSpec(format!(
                "correlation must lie in [0, 1), got {}",
                self.correlation
            )));
        }
        Ok(())
    }
}

/// A generated problem together with the ground truth behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedInstance {
    pub problem: Problem,
    /// Ground-truth coefficients on the unit-column scale.
    pub x_star: Vec<f64>,
    /// The noise vector ξ that was added to Ax*.
    pub noise: Vec<f64>,
}

/// Draws one instance. Same spec (including seed) gives bit-identical output.
///
/// Columns are drawn standard normal, blended with a shared per-row factor
/// to reach the requested equi-correlation, then normalized to unit norm.
/// The support of x* is a uniform random subset of the requested size, with
/// random signs and magnitudes uniform in `[signal_low, signal_high]`.
pub fn generate(spec: &SyntheticSpec) -> Result<GeneratedInstance> {
    spec.validate()?;
    let (n, p) = (spec.n, spec.p);

    // Independent, reproducible streams for design / signal / noise.
    let mut rng_a = ChaCha8Rng::seed_from_u64(spec.seed);
    rng_a.set_stream(1);
    let mut rng_x = ChaCha8Rng::seed_from_u64(spec.seed);
    rng_x.set_stream(2);
    let mut rng_noise = ChaCha8Rng::seed_from_u64(spec.seed);
    rng_noise.set_stream(3);

    let shared: Vec<f64> = (0..n).map(|_| rng_a.sample(StandardNormal)).collect();
    let w_shared = spec.correlation.sqrt();
    let w_own = (1.0 - spec.correlation).sqrt();
    let mut a = DenseMatrix::zeros(n, p);
    for j in 0..p {
        let col = a.col_mut(j);
        for (i, entry) in col.iter_mut().enumerate() {
            let z: f64 = rng_a.sample(StandardNormal);
            *entry = w_own * z + w_shared * shared[i];
        }
        let norm = crate::linalg::norm2(col);
        if norm < f64::MIN_POSITIVE {
            return Err(Error::ZeroColumn { index: j });
        }
        for entry in col.iter_mut() {
            *entry /= norm;
        }
    }

    // Partial Fisher-Yates for the support, then ascending for assembly.
    let mut indices: Vec<usize> = (0..p).collect();
    for i in 0..spec.sparsity {
        let j = rng_x.random_range(i..p);
        indices.swap(i, j);
    }
    let mut support: Vec<usize> = indices[..spec.sparsity].to_vec();
    support.sort_unstable();

    let mut x_star = vec![0.0; p];
    for &idx in &support {
        let sign = if rng_x.random::<bool>() { 1.0 } else { -1.0 };
        let magnitude =
            spec.signal_low + (spec.signal_high - spec.signal_low) * rng_x.random::<f64>();
        x_star[idx] = sign * magnitude;
    }

    let noise: Vec<f64> = (0..n)
        .map(|_| rng_noise.sample::<f64, _>(StandardNormal) * spec.noise_sigma)
        .collect();

    let mut b = a.matvec(&x_star);
    for (bi, xi) in b.iter_mut().zip(&noise) {
        *bi += xi;
    }

    let problem = Problem::from_normalized(a, b)?;
    Ok(GeneratedInstance {
        problem,
        x_star,
        noise,
    })
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

/// Parses numeric CSV text into rows. A first line whose fields do not all
/// parse as numbers is treated as a header and skipped; every later line
/// must be numeric, rectangular and finite.
fn parse_numeric_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (line_idx, line) in text.lines().enumerate() {
        let line_no = line_idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if rows.is_empty() && width.is_none() => continue, // header row
            Err(e) => {
                return Err(Error::CsvParse {
                    line: line_no,
                    message: e.to_string(),
                })
            }
        };
        if let Some(w) = width {
            if values.len() != w {
                return Err(Error::CsvParse {
                    line: line_no,
                    message: format!("expected {w} fields, found {}", values.len()),
                });
            }
        } else {
            width = Some(values.len());
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("csv line {line_no}, field {}", pos + 1),
            });
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::CsvParse {
            line: 0,
            message: "no data rows".into(),
        });
    }
    Ok(rows)
}

/// Loads a combined problem CSV: first column is the response `b`, the
/// remaining columns are the design `A`. Columns are normalized on load.
pub fn load_problem(path: impl AsRef<Path>) -> Result<Problem> {
    let text = std::fs::read_to_string(path)?;
    let rows = parse_numeric_csv(&text)?;
    if rows[0].len() < 2 {
        return Err(Error::CsvParse {
            line: 1,
            message: "combined problem csv needs at least 2 columns (b, then A)".into(),
        });
    }
    let b: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let a_rows: Vec<Vec<f64>> = rows.iter().map(|r| r[1..].to_vec()).collect();
    Problem::new(DenseMatrix::from_rows(&a_rows)?, b)
}

/// Loads a problem from a design CSV and a one-column response CSV.
pub fn load_problem_pair(
    design_path: impl AsRef<Path>,
    response_path: impl AsRef<Path>,
) -> Result<Problem> {
    let design_text = std::fs::read_to_string(design_path)?;
    let a_rows = parse_numeric_csv(&design_text)?;
    let response_text = std::fs::read_to_string(response_path)?;
    let b_rows = parse_numeric_csv(&response_text)?;
    if b_rows.iter().any(|r| r.len() != 1) {
        return Err(Error::CsvParse {
            line: 0,
            message: "response csv must have exactly one column".into(),
        });
    }
    if b_rows.len() != a_rows.len() {
        return Err(Error::DimensionMismatch {
            context: "response rows vs design rows".into(),
            expected: a_rows.len(),
            actual: b_rows.len(),
        });
    }
    let b: Vec<f64> = b_rows.iter().map(|r| r[0]).collect();
    Problem::new(DenseMatrix::from_rows(&a_rows)?, b)
}

/// Writes a problem as combined CSV (`b` first, then the unit-norm columns
/// of `A`). Values print in shortest round-trip form, so a save/load cycle
/// is lossless up to the re-normalization of already-unit columns.
pub fn save_problem_csv(problem: &Problem, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for i in 0..problem.n() {
        push_f64(&mut out, problem.b()[i]);
        for j in 0..problem.p() {
            out.push(',');
            push_f64(&mut out, problem.a().get(i, j));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

fn push_f64(buf: &mut String, v: f64) {
    use std::fmt::Write as _;
    let _ = write!(buf, "{v}");
}

fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// JSON persistence
// ---------------------------------------------------------------------------

/// Metadata document saved next to a generated problem: the full generation
/// recipe (every default made explicit) plus the ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub schema: String,
    pub spec: SyntheticSpec,
    pub x_star: Vec<f64>,
}

impl InstanceMeta {
    pub fn new(spec: SyntheticSpec, x_star: Vec<f64>) -> Self {
        Self {
            schema: INSTANCE_SCHEMA.to_string(),
            spec,
            x_star,
        }
    }
}

pub fn save_instance_meta(meta: &InstanceMeta, path: impl AsRef<Path>) -> Result<()> {
    let mut json = serde_json::to_string_pretty(meta)?;
    json.push('\n');
    write_atomic(path, json.as_bytes())
}

pub fn load_instance_meta(path: impl AsRef<Path>) -> Result<InstanceMeta> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    check_schema(&value, INSTANCE_SCHEMA)?;
    Ok(serde_json::from_value(value)?)
}

#[derive(Serialize)]
struct ResultDocument<'a> {
    schema: &'a str,
    #[serde(flatten)]
    result: &'a SolveResult,
}

/// Serializes a result to its on-disk JSON document (pretty, trailing
/// newline). The exact same bytes go to files and to stdout.
pub fn result_to_json(result: &SolveResult) -> Result<String> {
    let doc = ResultDocument {
        schema: RESULT_SCHEMA,
        result,
    };
    let mut json = serde_json::to_string_pretty(&doc)?;
    json.push('\n');
    Ok(json)
}

pub fn save_result(result: &SolveResult, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, result_to_json(result)?.as_bytes())
}

/// Reads a stored result document, enforcing the schema identifier.
pub fn load_result(path: impl AsRef<Path>) -> Result<SolveResult> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    check_schema(&value, RESULT_SCHEMA)?;
    Ok(serde_json::from_value(value)?)
}

/// Reads only the per-sweep trace out of a stored result document.
pub fn load_trace(path: impl AsRef<Path>) -> Result<SolveTrace> {
    Ok(load_result(path)?.trace)
}

fn check_schema(value: &serde_json::Value, expected: &str) -> Result<()> {
    match value.get("schema") {
        None => Err(Error::Schema(format!(
            "document has no schema field (expected {expected:?})"
        ))),
        Some(serde_json::Value::String(s)) if s == expected => Ok(()),
        Some(serde_json::Value::String(s)) => Err(Error::UnsupportedVersion {
            found: s.clone(),
            expected: expected.to_string(),
        }),
        Some(other) => Err(Error::Schema(format!(
            "schema field must be a string, found {other}"
        ))),
    }
}
