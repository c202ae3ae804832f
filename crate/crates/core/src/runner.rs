//! Seeded chain execution, burn-in/thinning, trace persistence, and summary
//! statistics.
//!
//! A trace is stored as a CSV of retained states (columns `x_1..x_d`, one row
//! per state, every number printed with 17 significant digits so the files
//! round-trip doubles exactly) plus a JSON sidecar holding the full run
//! descriptor and the pre-thinning acceptance totals.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::iact_unchecked;
use crate::error::{Error, Result};
use crate::kernels::{IncrementLaw, MhKernel, ProposalKernel};
use crate::numeric;
use crate::rng::RngStream;
use crate::stats;
use crate::targets::TargetDensity;

/// Serializable descriptor of a built-in target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TargetSpec {
    Student { dim: usize, alpha: f64 },
    Gaussian { dim: usize, sigma: f64 },
    GenExponential { dim: usize, c: f64, p: f64 },
}

impl TargetSpec {
    pub fn dim(&self) -> usize {
        match *self {
            TargetSpec::Student { dim, .. }
            | TargetSpec::Gaussian { dim, .. }
            | TargetSpec::GenExponential { dim, .. } => dim,
        }
    }

    pub fn build(&self) -> Result<TargetDensity> {
        match *self {
            TargetSpec::Student { dim, alpha } => TargetDensity::student_like(dim, alpha),
            TargetSpec::Gaussian { dim, sigma } => TargetDensity::gaussian(dim, sigma),
            TargetSpec::GenExponential { dim, c, p } => TargetDensity::gen_exponential(dim, c, p),
        }
    }
}

/// Serializable descriptor of a proposal kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    Rwm { step_scale: f64, increment: IncrementLaw },
    Pcn { rho: f64 },
    Mpcn { rho: f64 },
}

impl KernelSpec {
    pub fn build(&self) -> Result<ProposalKernel> {
        match *self {
            KernelSpec::Rwm {
                step_scale,
                increment,
            } => ProposalKernel::rwm(step_scale, increment),
            KernelSpec::Pcn { rho } => ProposalKernel::pcn(rho),
            KernelSpec::Mpcn { rho } => ProposalKernel::mpcn(rho),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Rwm { .. } => "rwm",
            KernelSpec::Pcn { .. } => "pcn",
            KernelSpec::Mpcn { .. } => "mpcn",
        }
    }
}

/// Everything needed to reproduce one chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub target: TargetSpec,
    pub kernel: KernelSpec,
    pub x0: Vec<f64>,
    pub n_steps: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
    pub stream_id: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thin < 1 {
            return Err(Error::invalid_parameter("thin", "must be at least 1"));
        }
        if self.burn_in > self.n_steps {
            return Err(Error::invalid_parameter(
                "burn_in",
                format!(
                    "burn-in {} exceeds the step budget {}",
                    self.burn_in, self.n_steps
                ),
            ));
        }
        if self.x0.len() != self.target.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.target.dim(),
                got: self.x0.len(),
            });
        }
        if matches!(self.kernel, KernelSpec::Mpcn { .. }) && numeric::norm(&self.x0) == 0.0 {
            return Err(Error::DegenerateState(
                "MpCN chains cannot start at x0 = 0; pick a nonzero start \
                 (or jitter it explicitly)"
                    .into(),
            ));
        }
        Ok(())
    }

    /// Replace an exactly-zero start with `epsilon * e_1`. Opt-in escape
    /// hatch for configs that insist on the origin.
    pub fn jitter_zero_start(&mut self) {
        if numeric::norm(&self.x0) == 0.0 && !self.x0.is_empty() {
            self.x0[0] = f64::EPSILON;
        }
    }
}

/// Run descriptor and totals persisted alongside the retained states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub target: TargetSpec,
    pub kernel: KernelSpec,
    pub seed: u64,
    pub stream_id: u64,
    pub n_steps: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub accepted_count: u64,
}

/// A finished chain: retained (post burn-in, thinned) states plus metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainTrace {
    states: Vec<Vec<f64>>,
    meta: TraceMeta,
}

impl ChainTrace {
    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn meta(&self) -> &TraceMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.meta.target.dim()
    }

    /// Accepted transitions over all `n_steps` pre-thinning steps.
    pub fn acceptance_rate(&self) -> f64 {
        if self.meta.n_steps == 0 {
            0.0
        } else {
            self.meta.accepted_count as f64 / self.meta.n_steps as f64
        }
    }
}

/// Execute the configured chain. Deterministic in `(seed, stream_id)`:
/// the same config always yields a bit-identical trace.
pub fn run_chain(cfg: &RunConfig) -> Result<ChainTrace> {
    cfg.validate()?;
    let target = cfg.target.build()?;
    let proposal = cfg.kernel.build()?;
    let kernel = MhKernel::new(target, proposal);
    let mut rng = RngStream::new(cfg.seed, cfg.stream_id);

    let retain = ((cfg.n_steps - cfg.burn_in) / cfg.thin) as usize;
    let mut states = Vec::with_capacity(retain);
    let mut x = cfg.x0.clone();
    let mut accepted = 0u64;
    for step in 1..=cfg.n_steps {
        let (next, acc) = kernel.step(&x, &mut rng)?;
        x = next;
        accepted += acc as u64;
        if step > cfg.burn_in && (step - cfg.burn_in).is_multiple_of(cfg.thin) {
            states.push(x.clone());
        }
    }

    Ok(ChainTrace {
        states,
        meta: TraceMeta {
            target: cfg.target.clone(),
            kernel: cfg.kernel.clone(),
            seed: cfg.seed,
            stream_id: cfg.stream_id,
            n_steps: cfg.n_steps,
            burn_in: cfg.burn_in,
            thin: cfg.thin,
            accepted_count: accepted,
        },
    })
}

/// Per-functional summary statistics of a trace.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SummaryRow {
    pub functional: String,
    pub mean: f64,
    /// Standard error inflated by the integrated autocorrelation time.
    pub std_error: f64,
    pub iact: f64,
    /// Effective sample size, capped at the number of retained states.
    pub ess: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
    pub acceptance_rate: f64,
    pub n_retained: usize,
}

/// A named scalar functional of the chain state.
pub type Functional<'a> = (&'a str, &'a dyn Fn(&[f64]) -> f64);

/// Mean, IACT-adjusted standard error, IACT, and ESS for each named
/// functional of the trace.
pub fn summarize(trace: &ChainTrace, functionals: &[Functional]) -> Result<SummaryTable> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let n = trace.len();
    let mut rows = Vec::with_capacity(functionals.len());
    for (name, f) in functionals {
        let series: Vec<f64> = trace.states().iter().map(|x| f(x)).collect();
        let mean = stats::mean(&series);
        let var = stats::sample_variance(&series);
        let (iact, ess, se) = if var == 0.0 {
            (1.0, n as f64, 0.0)
        } else {
            let iact = iact_unchecked(&series)?;
            let ess = (n as f64 / iact).min(n as f64);
            (iact, ess, (var / n as f64 * iact.max(0.0)).sqrt())
        };
        rows.push(SummaryRow {
            functional: (*name).to_string(),
            mean,
            std_error: se,
            iact,
            ess,
        });
    }
    Ok(SummaryTable {
        rows,
        acceptance_rate: trace.acceptance_rate(),
        n_retained: n,
    })
}

/// Print a double with 17 significant digits: enough for exact round-trips.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn corrupt(path: &Path, reason: impl Into<String>) -> Error {
    Error::CorruptTrace {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

/// Write `<base>.csv` (states) and `<base>.meta.json` (descriptor).
pub fn persist_trace(trace: &ChainTrace, base: &Path) -> Result<()> {
    let csv_path = base.with_extension("csv");
    let meta_path = base.with_extension("meta.json");

    let mut out = String::new();
    let d = trace.dim();
    let header: Vec<String> = (1..=d).map(|j| format!("x_{j}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for state in trace.states() {
        let row: Vec<String> = state.iter().map(|&v| format_f64(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    let mut f = fs::File::create(&csv_path).map_err(|e| io_err(&csv_path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| io_err(&csv_path, e))?;

    let meta = serde_json::to_string_pretty(trace.meta()).expect("meta serializes");
    fs::write(&meta_path, meta.as_bytes()).map_err(|e| io_err(&meta_path, e))?;
    Ok(())
}

/// Load a trace previously written by [`persist_trace`]. Truncated or
/// malformed files surface as structured [`Error::CorruptTrace`] values.
pub fn load_trace(base: &Path) -> Result<ChainTrace> {
    let csv_path = base.with_extension("csv");
    let meta_path = base.with_extension("meta.json");

    let meta_text = fs::read_to_string(&meta_path).map_err(|e| io_err(&meta_path, e))?;
    let meta: TraceMeta = serde_json::from_str(&meta_text)
        .map_err(|e| corrupt(&meta_path, format!("bad meta JSON: {e}")))?;
    let d = meta.target.dim();

    let text = fs::read_to_string(&csv_path).map_err(|e| io_err(&csv_path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| corrupt(&csv_path, "empty file"))?;
    let expected_header: Vec<String> = (1..=d).map(|j| format!("x_{j}")).collect();
    if header != expected_header.join(",") {
        return Err(corrupt(&csv_path, format!("unexpected header `{header}`")));
    }
    let mut states = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d {
            return Err(corrupt(
                &csv_path,
                format!(
                    "row {} has {} fields, expected {d} (truncated file?)",
                    lineno + 2,
                    fields.len()
                ),
            ));
        }
        let mut state = Vec::with_capacity(d);
        for field in fields {
            let v: f64 = field.parse().map_err(|_| {
                corrupt(
                    &csv_path,
                    format!("row {}: unparseable number `{field}`", lineno + 2),
                )
            })?;
            state.push(v);
        }
        states.push(state);
    }
    let expected = ((meta.n_steps - meta.burn_in) / meta.thin) as usize;
    if states.len() != expected {
        return Err(corrupt(
            &csv_path,
            format!(
                "found {} states but the meta declares {expected} (truncated file?)",
                states.len()
            ),
        ));
    }
    Ok(ChainTrace { states, meta })
}
