//! The `sample` and `diagnose` commands.

use std::path::Path;

use crate::cli::config::{Config, RunSettings};
use crate::diagnostics::{self, DiagnosticReport, DriftSpec, Verdict, CR_GRID};
use crate::error::{Error, Result};
use crate::kernels::MhKernel;
use crate::numeric;
use crate::rng::RngStream;
use crate::runner::{self, format_f64, RunConfig};

/// Write a tidy CSV table: a `# config_hash=...` provenance comment, a
/// header, then one observation per row.
pub fn write_table(path: &Path, hash: &str, header: &str, rows: &[String]) -> Result<()> {
    let mut text = format!("# config_hash={hash}\n{header}\n");
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn ensure_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        source: e,
    })
}

/// The functional reported by default summaries and experiments; finite on
/// every state and tail-robust.
pub fn log1p_norm_sq(x: &[f64]) -> f64 {
    let nsq = numeric::norm_sq(x);
    if nsq.is_finite() {
        nsq.ln_1p()
    } else {
        2.0 * numeric::ln_norm(x)
    }
}

/// Run one configured chain; write `trace.csv`, `trace.meta.json`, and
/// `summary.csv` into the output directory.
pub fn cmd_sample(cfg: &Config, settings: &RunSettings) -> Result<()> {
    ensure_out(&settings.out)?;
    let target = cfg.target_spec()?;
    let kernel = cfg.kernel_spec()?;
    let n_steps: u64 = cfg.parse_value("chain", "n_steps")?;
    let run = RunConfig {
        x0: cfg.x0(target.dim())?,
        burn_in: cfg.parse_or("chain", "burn_in", n_steps / 10)?,
        thin: cfg.parse_or("chain", "thin", 1u64)?,
        seed: settings.seed,
        stream_id: cfg.parse_or("chain", "stream_id", 0u64)?,
        target,
        kernel,
        n_steps,
    };
    let trace = runner::run_chain(&run)?;
    runner::persist_trace(&trace, &settings.out.join("trace"))?;

    let radius = |x: &[f64]| numeric::norm(x);
    let table = runner::summarize(
        &trace,
        &[
            ("log1p_norm_sq", &log1p_norm_sq),
            ("radius", &radius),
        ],
    )?;
    let rows: Vec<String> = table
        .rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{}",
                r.functional,
                format_f64(r.mean),
                format_f64(r.std_error),
                format_f64(r.iact),
                format_f64(r.ess),
                format_f64(table.acceptance_rate),
                table.n_retained
            )
        })
        .collect();
    write_table(
        &settings.out.join("summary.csv"),
        cfg.hash(),
        "functional,mean,std_error,iact,ess,acceptance_rate,n_retained",
        &rows,
    )
}

const DIAGNOSTIC_NAMES: &str =
    "rwm-property, drift-ratio, rejection-prob, cr, logq-concentration, moment";

/// Run one named diagnostic; write one JSON report per probe point.
pub fn cmd_diagnose(cfg: &Config, settings: &RunSettings) -> Result<()> {
    ensure_out(&settings.out)?;
    let name = cfg.require("diagnose", "name")?.to_string();
    let mut rng = RngStream::new(settings.seed, 0);
    match name.as_str() {
        "rwm-property" => {
            let kernel = build_kernel(cfg)?;
            let states = cfg.parse_states("diagnose", "states")?;
            let n = cfg.parse_or("diagnose", "n", 100_000usize)?;
            let report = diagnostics::test_rwm_property(&kernel, &states, n, &mut rng)?;
            write_report(cfg, &settings.out, "rwm-property", &report)
        }
        "drift-ratio" => {
            let kernel = build_kernel(cfg)?;
            let s: f64 = cfg.parse_or("diagnose", "s", 0.5)?;
            let spec = DriftSpec::new(s)?;
            let n = cfg.parse_or("diagnose", "n", 100_000usize)?;
            let states = cfg.parse_states("diagnose", "states")?;
            for (i, x) in states.iter().enumerate() {
                let report = diagnostics::estimate_drift_ratio(&kernel, &spec, x, n, &mut rng)?;
                write_report(cfg, &settings.out, &format!("drift-ratio_{i}"), &report)?;
            }
            Ok(())
        }
        "rejection-prob" => {
            let kernel = build_kernel(cfg)?;
            let n = cfg.parse_or("diagnose", "n", 100_000usize)?;
            let states = cfg.parse_states("diagnose", "states")?;
            for (i, x) in states.iter().enumerate() {
                let report = diagnostics::estimate_rejection_probability(&kernel, x, n, &mut rng)?;
                write_report(cfg, &settings.out, &format!("rejection-prob_{i}"), &report)?;
            }
            Ok(())
        }
        "cr" => {
            let target = cfg.target_spec()?.build()?;
            let rho: f64 = cfg.parse_or("diagnose", "rho", crate::kernels::DEFAULT_RHO)?;
            let grid = cfg.parse_or("diagnose", "grid", CR_GRID)?;
            let r_grid: Vec<f64> = cfg.parse_list("diagnose", "r_grid")?;
            let mut rows = Vec::with_capacity(r_grid.len());
            for (i, &r) in r_grid.iter().enumerate() {
                let cr = diagnostics::compute_cr(&target, r, rho, grid)?;
                let threshold = (1.0 - rho) / 2.0;
                let verdict = if cr < threshold {
                    Verdict::ConsistentWithNonGeometric
                } else {
                    Verdict::ConsistentWithGeometric
                };
                let report = DiagnosticReport {
                    statistic: cr,
                    std_error: None,
                    verdict,
                    details: [
                        ("r".to_string(), format!("{r}")),
                        ("rho".to_string(), format!("{rho}")),
                        ("threshold".to_string(), format!("{threshold}")),
                        (
                            "verdict_rule".to_string(),
                            "pCN needs liminf C_r >= (1-rho)/2; the largest tested r stands in \
                             for the liminf"
                                .to_string(),
                        ),
                    ]
                    .into_iter()
                    .collect(),
                };
                write_report(cfg, &settings.out, &format!("cr_{i}"), &report)?;
                rows.push(format!("{r},{}", format_f64(cr)));
            }
            write_table(&settings.out.join("cr.csv"), cfg.hash(), "r,cr", &rows)
        }
        "logq-concentration" => {
            let kernel = build_kernel(cfg)?;
            let band: f64 = cfg.parse_or("diagnose", "band", 10.0)?;
            let n = cfg.parse_or("diagnose", "n", 100_000usize)?;
            let states = cfg.parse_states("diagnose", "states")?;
            for (i, x) in states.iter().enumerate() {
                let report =
                    diagnostics::test_logq_concentration(&kernel, x, band, n, &mut rng)?;
                write_report(
                    cfg,
                    &settings.out,
                    &format!("logq-concentration_{i}"),
                    &report,
                )?;
            }
            Ok(())
        }
        "moment" => {
            let target = cfg.target_spec()?.build()?;
            let deltas: Vec<f64> = cfg.parse_list("diagnose", "deltas")?;
            for (i, &delta) in deltas.iter().enumerate() {
                let finite = diagnostics::moment_condition(&target, delta)?;
                let verdict = if finite {
                    Verdict::ConsistentWithGeometric
                } else {
                    Verdict::ConsistentWithNonGeometric
                };
                let report = DiagnosticReport {
                    statistic: delta,
                    std_error: None,
                    verdict,
                    details: [
                        ("finite".to_string(), finite.to_string()),
                        (
                            "criterion".to_string(),
                            "polynomial moment of order delta must be finite for MpCN \
                             geometric ergodicity"
                                .to_string(),
                        ),
                    ]
                    .into_iter()
                    .collect(),
                };
                write_report(cfg, &settings.out, &format!("moment_{i}"), &report)?;
            }
            Ok(())
        }
        other => Err(Error::Config(format!(
            "field `diagnose.name`: unknown diagnostic `{other}` (expected one of: \
             {DIAGNOSTIC_NAMES})"
        ))),
    }
}

fn build_kernel(cfg: &Config) -> Result<MhKernel> {
    Ok(MhKernel::new(
        cfg.target_spec()?.build()?,
        cfg.kernel_spec()?.build()?,
    ))
}

fn write_report(
    cfg: &Config,
    out: &Path,
    name: &str,
    report: &DiagnosticReport,
) -> Result<()> {
    let mut report = report.clone();
    report
        .details
        .insert("config_hash".into(), cfg.hash().to_string());
    write_json(&out.join(format!("{name}.json")), &report)
}
