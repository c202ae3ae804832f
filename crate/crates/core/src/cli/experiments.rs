//! The `experiment` command: four benchmark bundles that exercise the
//! kernels where the theory says they differ.
//!
//! Grid points run on a bounded rayon pool; every point owns its own RNG
//! stream (the job's position in the deterministically-ordered grid), so
//! results do not depend on the worker count and reruns are byte-identical.

use rayon::prelude::*;

use crate::cli::commands::{log1p_norm_sq, write_json, write_table};
use crate::cli::config::{Config, RunSettings};
use crate::diagnostics::{self, HittingOutcome, Verdict};
use crate::error::{Error, Result};
use crate::kernels::MhKernel;
use crate::numeric;
use crate::rng::RngStream;
use crate::runner::{self, format_f64, KernelSpec, RunConfig, TargetSpec};
use crate::stats;

const EXPERIMENT_NAMES: &str =
    "heavy-tail-comparison, far-start-hitting, dimension-scaling, necessary-conditions";

pub fn cmd_experiment(cfg: &Config, settings: &RunSettings) -> Result<()> {
    std::fs::create_dir_all(&settings.out).map_err(|e| Error::Io {
        path: settings.out.display().to_string(),
        source: e,
    })?;
    let name = cfg.require("experiment", "name")?;
    match name {
        "heavy-tail-comparison" => heavy_tail_comparison(cfg, settings),
        "far-start-hitting" => far_start_hitting(cfg, settings),
        "dimension-scaling" => dimension_scaling(cfg, settings),
        "necessary-conditions" => necessary_conditions(cfg, settings),
        other => Err(Error::Config(format!(
            "field `experiment.name`: unknown experiment `{other}` (expected one of: \
             {EXPERIMENT_NAMES})"
        ))),
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))
}

/// Kernel kinds listed under `experiment.kernels`.
fn kernel_kinds(cfg: &Config, default: &str) -> Result<Vec<String>> {
    match cfg.get("experiment", "kernels") {
        None => Ok(default.split(',').map(|s| s.trim().to_string()).collect()),
        Some(_) => cfg.parse_list("experiment", "kernels"),
    }
}

/// Pilot-tune the RWM step scale to hit the given acceptance rate on this
/// target, by bisection on the log scale (acceptance is monotone decreasing
/// in the scale for the radially decreasing built-in families).
///
/// The sampler itself stays non-adaptive: this runs short throwaway pilot
/// chains before the measured run, the standard way to hand a benchmark a
/// fairly tuned random-walk baseline.
pub fn tune_rwm_scale(
    target: &crate::targets::TargetDensity,
    x0: &[f64],
    acceptance_target: f64,
    seed: u64,
) -> Result<f64> {
    let pilot_steps = 2_000;
    let acceptance_at = |scale: f64, stream: u64| -> Result<f64> {
        let kernel = MhKernel::new(
            target.clone(),
            crate::kernels::ProposalKernel::rwm(scale, crate::kernels::IncrementLaw::Gaussian)?,
        );
        let mut rng = RngStream::new(seed, stream);
        let mut x = x0.to_vec();
        let mut accepted = 0u32;
        for _ in 0..pilot_steps {
            let (next, acc) = kernel.step(&x, &mut rng)?;
            accepted += acc as u32;
            x = next;
        }
        Ok(accepted as f64 / pilot_steps as f64)
    };
    let mut lo = 1e-4_f64;
    let mut hi = 100.0_f64;
    for i in 0..24 {
        let mid = (lo * hi).sqrt();
        if acceptance_at(mid, i)? > acceptance_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

/// RWM step scale: an explicit number from the config, or pilot-tuned to
/// 25% acceptance for the given target when absent or set to `tuned`.
fn rwm_scale(cfg: &Config, target: &TargetSpec, seed: u64) -> Result<f64> {
    match cfg.get("kernel", "step_scale") {
        None | Some("tuned") => {
            let built = target.build()?;
            let mut x0 = vec![0.0; target.dim()];
            x0[0] = 1.0;
            tune_rwm_scale(&built, &x0, 0.25, seed)
        }
        Some(_) => cfg.parse_value("kernel", "step_scale"),
    }
}

fn kernel_spec_for(cfg: &Config, kind: &str, target: &TargetSpec, seed: u64) -> Result<KernelSpec> {
    if kind == "rwm" {
        Ok(KernelSpec::Rwm {
            step_scale: rwm_scale(cfg, target, seed)?,
            increment: crate::kernels::IncrementLaw::Gaussian,
        })
    } else {
        cfg.kernel_spec_named(kind)
    }
}

/// Effective-sample-size comparison of the kernels on a heavy-tailed target:
/// one row per (kernel, dimension) with the summary of `log(1 + ||x||^2)`.
fn heavy_tail_comparison(cfg: &Config, settings: &RunSettings) -> Result<()> {
    // pilot tuning draws from its own seed so measurement streams stay clean
    let tuning_seed = settings.seed.wrapping_add(0x5455_4e45);
    let kinds = kernel_kinds(cfg, "rwm,pcn,mpcn")?;
    let dims: Vec<usize> = cfg.parse_list("experiment", "dims")?;
    let alpha: f64 = cfg.parse_value("target", "alpha")?;
    let n_steps: u64 = cfg.parse_value("chain", "n_steps")?;
    let burn_in: u64 = cfg.parse_or("chain", "burn_in", n_steps / 10)?;
    let x0_radius: f64 = cfg.parse_or("chain", "x0_radius", 1.0)?;

    let mut jobs = Vec::new();
    for kind in &kinds {
        for &dim in &dims {
            jobs.push((kind.clone(), dim));
        }
    }
    let rows: Result<Vec<String>> = pool(settings.workers)?.install(|| {
        jobs.par_iter()
            .enumerate()
            .map(|(idx, (kind, dim))| {
                let mut x0 = vec![0.0; *dim];
                x0[0] = x0_radius;
                let target = TargetSpec::Student { dim: *dim, alpha };
                let run = RunConfig {
                    kernel: kernel_spec_for(cfg, kind, &target, tuning_seed)?,
                    target,
                    x0,
                    n_steps,
                    burn_in,
                    thin: 1,
                    seed: settings.seed,
                    stream_id: idx as u64,
                };
                let trace = runner::run_chain(&run)?;
                let table = runner::summarize(&trace, &[("f", &log1p_norm_sq)])?;
                let r = &table.rows[0];
                Ok(format!(
                    "{kind},{dim},{alpha},{n_steps},{},{},{},{},{}",
                    format_f64(r.mean),
                    format_f64(r.std_error),
                    format_f64(r.iact),
                    format_f64(r.ess),
                    format_f64(table.acceptance_rate),
                ))
            })
            .collect()
    });
    write_table(
        &settings.out.join("heavy_tail_comparison.csv"),
        cfg.hash(),
        "kernel,dim,alpha,n_steps,mean,std_error,iact,ess,acceptance_rate",
        &rows?,
    )
}

/// First-passage times into a centered ball from starts spread over decades
/// of `||x0||`; one row per replica plus a per-cell median summary.
fn far_start_hitting(cfg: &Config, settings: &RunSettings) -> Result<()> {
    // pilot tuning draws from its own seed so measurement streams stay clean
    let tuning_seed = settings.seed.wrapping_add(0x5455_4e45);
    let kinds = kernel_kinds(cfg, "rwm,mpcn")?;
    let norms: Vec<f64> = cfg.parse_list("experiment", "x0_norms")?;
    let radius: f64 = cfg.parse_or("experiment", "radius", 10.0)?;
    let budget: u64 = cfg.parse_or("experiment", "budget", 1_000_000u64)?;
    let replicas: usize = cfg.parse_or("experiment", "replicas", 50usize)?;
    let target_spec = cfg.target_spec()?;
    let dim = target_spec.dim();

    let mut jobs = Vec::new();
    for kind in &kinds {
        for &norm in &norms {
            for replica in 0..replicas {
                jobs.push((kind.clone(), norm, replica));
            }
        }
    }
    let outcomes: Result<Vec<(String, f64, usize, HittingOutcome)>> =
        pool(settings.workers)?.install(|| {
            jobs.par_iter()
                .enumerate()
                .map(|(idx, (kind, norm, replica))| {
                    let kernel = MhKernel::new(
                        target_spec.build()?,
                        kernel_spec_for(cfg, kind, &target_spec, tuning_seed)?.build()?,
                    );
                    let mut x0 = vec![0.0; dim];
                    x0[0] = *norm;
                    let mut rng = RngStream::new(settings.seed, idx as u64);
                    let outcome =
                        diagnostics::hitting_time(&kernel, &x0, radius, budget, &mut rng)?;
                    Ok((kind.clone(), *norm, *replica, outcome))
                })
                .collect()
        });
    let outcomes = outcomes?;

    let rows: Vec<String> = outcomes
        .iter()
        .map(|(kind, norm, replica, outcome)| match outcome {
            HittingOutcome::Hit(steps) => format!("{kind},{norm},{replica},hit,{steps}"),
            HittingOutcome::TimedOut => format!("{kind},{norm},{replica},timeout,"),
        })
        .collect();
    write_table(
        &settings.out.join("hitting_times.csv"),
        cfg.hash(),
        "kernel,x0_norm,replica,outcome,steps",
        &rows,
    )?;

    let mut summary = Vec::new();
    for kind in &kinds {
        for &norm in &norms {
            let cell: Vec<&HittingOutcome> = outcomes
                .iter()
                .filter(|(k, n, _, _)| k == kind && *n == norm)
                .map(|(_, _, _, o)| o)
                .collect();
            let hits: Vec<f64> = cell
                .iter()
                .filter_map(|o| match o {
                    HittingOutcome::Hit(s) => Some(*s as f64),
                    HittingOutcome::TimedOut => None,
                })
                .collect();
            let timeouts = cell.len() - hits.len();
            let median = if hits.is_empty() {
                String::new()
            } else {
                format!("{}", stats::median(&hits))
            };
            summary.push(format!(
                "{kind},{norm},{},{timeouts},{median}",
                hits.len()
            ));
        }
    }
    write_table(
        &settings.out.join("hitting_summary.csv"),
        cfg.hash(),
        "kernel,x0_norm,hits,timeouts,median_steps",
        &summary,
    )
}

/// Autocorrelation time of `ln ||x||^2` as the dimension grows, with the
/// tail exponent tied to the dimension (`alpha = d + alpha_offset`).
fn dimension_scaling(cfg: &Config, settings: &RunSettings) -> Result<()> {
    // pilot tuning draws from its own seed so measurement streams stay clean
    let tuning_seed = settings.seed.wrapping_add(0x5455_4e45);
    let kinds = kernel_kinds(cfg, "rwm,mpcn")?;
    let dims: Vec<usize> = cfg.parse_list("experiment", "dims")?;
    let alpha_offset: f64 = cfg.parse_or("experiment", "alpha_offset", 4.0)?;
    let n_steps: u64 = cfg.parse_value("chain", "n_steps")?;
    let burn_in: u64 = cfg.parse_or("chain", "burn_in", n_steps / 10)?;

    let mut jobs = Vec::new();
    for kind in &kinds {
        for &dim in &dims {
            jobs.push((kind.clone(), dim));
        }
    }
    let log_radius_sq = |x: &[f64]| 2.0 * numeric::ln_norm(x);
    let rows: Result<Vec<String>> = pool(settings.workers)?.install(|| {
        jobs.par_iter()
            .enumerate()
            .map(|(idx, (kind, dim))| {
                let alpha = *dim as f64 + alpha_offset;
                let mut x0 = vec![0.0; *dim];
                x0[0] = 1.0;
                let target = TargetSpec::Student { dim: *dim, alpha };
                let run = RunConfig {
                    kernel: kernel_spec_for(cfg, kind, &target, tuning_seed)?,
                    target,
                    x0,
                    n_steps,
                    burn_in,
                    thin: 1,
                    seed: settings.seed,
                    stream_id: idx as u64,
                };
                let trace = runner::run_chain(&run)?;
                let table = runner::summarize(&trace, &[("psi", &log_radius_sq)])?;
                let r = &table.rows[0];
                Ok(format!(
                    "{kind},{dim},{alpha},{},{},{}",
                    format_f64(r.iact),
                    format_f64(r.ess),
                    format_f64(table.acceptance_rate),
                ))
            })
            .collect()
    });
    write_table(
        &settings.out.join("dimension_scaling.csv"),
        cfg.hash(),
        "kernel,dim,alpha,iact,ess,acceptance_rate",
        &rows?,
    )
}

/// The three necessary conditions side by side on one target: the shell
/// statistic for pCN, holding probabilities for all kernels, and the
/// analytic moment criteria for RWM and MpCN.
fn necessary_conditions(cfg: &Config, settings: &RunSettings) -> Result<()> {
    // pilot tuning draws from its own seed so measurement streams stay clean
    let tuning_seed = settings.seed.wrapping_add(0x5455_4e45);
    let target_spec = cfg.target_spec()?;
    let target = target_spec.build()?;
    let dim = target_spec.dim();
    let rho: f64 = cfg.parse_or("kernel", "rho", crate::kernels::DEFAULT_RHO)?;
    let r_grid: Vec<f64> = cfg.parse_list("experiment", "r_grid")?;
    let deltas: Vec<f64> = cfg.parse_list("experiment", "deltas")?;
    let x_norms: Vec<f64> = cfg.parse_or_list_f64("experiment", "x_norms", &[10.0, 100.0, 1000.0])?;
    let n: usize = cfg.parse_or("experiment", "n", 20_000usize)?;

    // pCN: shell oscillation statistic over the r grid
    let threshold = (1.0 - rho) / 2.0;
    let mut cr_rows = Vec::new();
    let mut last_cr = f64::NAN;
    for &r in &r_grid {
        let cr = diagnostics::compute_cr(&target, r, rho, diagnostics::CR_GRID)?;
        cr_rows.push(format!("{r},{},{}", format_f64(cr), format_f64(threshold)));
        last_cr = cr;
    }
    write_table(
        &settings.out.join("cr_table.csv"),
        cfg.hash(),
        "r,cr,pcn_threshold",
        &cr_rows,
    )?;
    let pcn_verdict = if last_cr < threshold {
        Verdict::ConsistentWithNonGeometric
    } else {
        Verdict::ConsistentWithGeometric
    };

    // all kernels: holding probability at far states
    let kinds = kernel_kinds(cfg, "rwm,pcn,mpcn")?;
    let mut jobs = Vec::new();
    for kind in &kinds {
        for &norm in &x_norms {
            jobs.push((kind.clone(), norm));
        }
    }
    let rejection_rows: Result<Vec<String>> = pool(settings.workers)?.install(|| {
        jobs.par_iter()
            .enumerate()
            .map(|(idx, (kind, norm))| {
                let kernel = MhKernel::new(
                    target_spec.build()?,
                    kernel_spec_for(cfg, kind, &target_spec, tuning_seed)?.build()?,
                );
                let mut x = vec![0.0; dim];
                x[0] = *norm;
                let mut rng = RngStream::new(settings.seed, idx as u64);
                let rep = diagnostics::estimate_rejection_probability(&kernel, &x, n, &mut rng)?;
                Ok(format!(
                    "{kind},{norm},{},{},{:?}",
                    format_f64(rep.statistic),
                    format_f64(rep.std_error.unwrap_or(f64::NAN)),
                    rep.verdict
                ))
            })
            .collect()
    });
    write_table(
        &settings.out.join("rejection_table.csv"),
        cfg.hash(),
        "kernel,x_norm,rejection,std_error,verdict",
        &rejection_rows?,
    )?;

    // RWM and MpCN: analytic moment criteria
    let mut moment_rows = Vec::new();
    let mut rwm_any_finite = false;
    let mut mpcn_any_finite = false;
    for &delta in &deltas {
        let exp_finite = diagnostics::exp_moment_condition(&target, delta)?;
        let poly_finite = diagnostics::moment_condition(&target, delta)?;
        rwm_any_finite |= exp_finite;
        mpcn_any_finite |= poly_finite;
        moment_rows.push(format!("rwm,{delta},exponential,{exp_finite}"));
        moment_rows.push(format!("mpcn,{delta},polynomial,{poly_finite}"));
    }
    write_table(
        &settings.out.join("moment_table.csv"),
        cfg.hash(),
        "kernel,delta,moment,finite",
        &moment_rows,
    )?;

    let verdict_of = |ok: bool| {
        if ok {
            Verdict::ConsistentWithGeometric
        } else {
            Verdict::ConsistentWithNonGeometric
        }
    };
    let verdicts: std::collections::BTreeMap<String, String> = [
        ("rwm".to_string(), format!("{:?}", verdict_of(rwm_any_finite))),
        ("pcn".to_string(), format!("{pcn_verdict:?}")),
        (
            "mpcn".to_string(),
            format!("{:?}", verdict_of(mpcn_any_finite)),
        ),
        ("config_hash".to_string(), cfg.hash().to_string()),
        (
            "rule".to_string(),
            "rwm: some tested delta with a finite exponential moment; pcn: shell statistic \
             at the largest r reaches (1-rho)/2; mpcn: some tested delta with a finite \
             polynomial moment"
                .to_string(),
        ),
    ]
    .into_iter()
    .collect();
    write_json(&settings.out.join("verdicts.json"), &verdicts)
}
