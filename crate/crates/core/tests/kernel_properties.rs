//! Cross-cutting kernel properties: detailed balance of the full MH
//! transition measured on a spatial discretization, normalization of the
//! MpCN proposal density, and algebraic identities under random inputs.

mod common;

use mpcn::kernels::{IncrementLaw, MhKernel, ProposalKernel};
use mpcn::runner::{self, KernelSpec, RunConfig, TargetSpec};
use mpcn::{numeric, RngStream, TargetDensity};
use proptest::prelude::*;

/// An axis-aligned square cell in the plane.
#[derive(Clone, Copy)]
struct Cell {
    center: [f64; 2],
    half: f64,
}

impl Cell {
    fn contains(&self, y: &[f64]) -> bool {
        (y[0] - self.center[0]).abs() <= self.half && (y[1] - self.center[1]).abs() <= self.half
    }

    fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        vec![
            self.center[0] + (2.0 * rng.uniform() - 1.0) * self.half,
            self.center[1] + (2.0 * rng.uniform() - 1.0) * self.half,
        ]
    }
}

/// Monte Carlo estimate of the probability flow
/// `int_A pi(x) P(x, B) dx` (up to the common normalization and cell
/// volume), with a standard error over the outer sample.
fn flow(
    kernel: &MhKernel,
    from: Cell,
    to: Cell,
    points: usize,
    proposals: usize,
    rng: &mut RngStream,
) -> (f64, f64) {
    let mut contributions = Vec::with_capacity(points);
    for _ in 0..points {
        let x = from.sample(rng);
        let weight = kernel.target().log_density(&x).unwrap().exp();
        let mut hit_mass = 0.0;
        for _ in 0..proposals {
            let y = kernel.proposal().propose(&x, rng).unwrap();
            if to.contains(&y) {
                let alpha = kernel
                    .log_acceptance_ratio(&x, &y)
                    .unwrap()
                    .min(0.0)
                    .exp();
                hit_mass += alpha;
            }
        }
        contributions.push(weight * hit_mass / proposals as f64);
    }
    mpcn::stats::mean_and_se(&contributions)
}

#[test]
fn mh_transition_balances_cell_flows_for_all_kernels() {
    let target = TargetDensity::student_like(2, 6.0).unwrap();
    let cells = [
        Cell {
            center: [0.5, 0.5],
            half: 0.3,
        },
        Cell {
            center: [-0.7, 0.3],
            half: 0.3,
        },
        Cell {
            center: [1.4, -0.9],
            half: 0.3,
        },
    ];
    let kernels = [
        ProposalKernel::rwm(1.0, IncrementLaw::Gaussian).unwrap(),
        ProposalKernel::pcn(0.8).unwrap(),
        ProposalKernel::mpcn(0.8).unwrap(),
    ];
    let mut rng = RngStream::new(0x0ba1_a2ce, 0);
    for proposal in kernels {
        let name = proposal.name();
        let kernel = MhKernel::new(target.clone(), proposal);
        for i in 0..cells.len() {
            for j in (i + 1)..cells.len() {
                let (ab, se_ab) = flow(&kernel, cells[i], cells[j], 400, 200, &mut rng);
                let (ba, se_ba) = flow(&kernel, cells[j], cells[i], 400, 200, &mut rng);
                let combined = (se_ab * se_ab + se_ba * se_ba).sqrt();
                assert!(
                    (ab - ba).abs() < 4.0 * combined,
                    "{name} cells {i}->{j}: flow {ab} vs {ba} (combined se {combined})"
                );
                assert!(ab > 0.0, "{name}: no flow measured between cells {i},{j}");
            }
        }
    }
}

#[test]
fn mpcn_proposal_density_normalizes_in_2d() {
    // integrate exp(mpcn_proposal_log_density) over the plane in polar
    // coordinates around the proposal mean: trapezoid in the angle,
    // adaptive Simpson radially
    let rho: f64 = 0.8;
    for x in [vec![1.0, 0.0], vec![-0.4, 2.2]] {
        let mean = [rho.sqrt() * x[0], rho.sqrt() * x[1]];
        let angles = 64;
        let mut total = 0.0;
        for k in 0..angles {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / angles as f64;
            let (c, s) = (theta.cos(), theta.sin());
            let radial = |r: f64| -> f64 {
                let y = [mean[0] + r * c, mean[1] + r * s];
                r * mpcn::mpcn_proposal_log_density(&x, &y, rho).unwrap().exp()
            };
            // geometric segments so the peak near the origin is never
            // stepped over and the polynomial tail still gets covered
            let scale = 0.5 * (1.0 + numeric::norm(&x));
            let mut lo = 0.0;
            let mut hi = scale;
            while lo < 1e6 * scale {
                total += common::adaptive_simpson(&radial, lo, hi, 1e-11);
                lo = hi;
                hi *= 2.0;
            }
        }
        total *= 2.0 * std::f64::consts::PI / angles as f64;
        assert!(
            (total - 1.0).abs() < 1e-4,
            "normalization at x = {x:?}: {total}"
        );
    }
}

#[test]
fn xi_draws_are_exchangeable_with_proposal_increments() {
    // the standalone xi sampler and the actual proposal's log squared-radius
    // increment are draws from one law, at any state
    let n = 30_000;
    let rho = 0.8;
    let d = 4;
    let mut rng = RngStream::new(0xc0ffee, 0);
    let direct: Vec<f64> = (0..n)
        .map(|_| mpcn::sample_xi(d, rho, &mut rng).unwrap())
        .collect();
    let x = vec![3.0, -1.0, 0.5, 2.0];
    let ln_nx = numeric::ln_norm(&x);
    let via_proposal: Vec<f64> = (0..n)
        .map(|_| {
            let draw = mpcn::propose_mpcn(&x, rho, &mut rng).unwrap();
            2.0 * (numeric::ln_norm(&draw.proposal) - ln_nx)
        })
        .collect();
    let ks = mpcn::stats::ks_statistic_two_sample(&direct, &via_proposal);
    let crit = mpcn::stats::ks_critical_two_sample(0.01, n, n);
    assert!(ks < crit, "KS {ks} >= {crit}");
}

fn nonzero_vector(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-30.0f64..30.0, d)
        .prop_filter("state away from the origin", |v| numeric::norm(v) > 1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn proposal_detailed_balance_holds_for_random_inputs(
        d in 2usize..6,
        rho in 0.05f64..0.95,
        seed in any::<u64>(),
    ) {
        let mut rng = RngStream::new(seed, 0);
        let x = mpcn::sample_std_normal_vector(d, &mut rng).unwrap();
        let y = mpcn::sample_std_normal_vector(d, &mut rng).unwrap();
        let reference = mpcn::ReferenceMeasure::RadialPower;
        let fwd = reference.log_density(&x) + mpcn::mpcn_proposal_log_density(&x, &y, rho).unwrap();
        let bwd = reference.log_density(&y) + mpcn::mpcn_proposal_log_density(&y, &x, rho).unwrap();
        prop_assert!((fwd - bwd).abs() < 1e-10, "residual {}", (fwd - bwd).abs());
    }

    #[test]
    fn acceptance_ratio_identities(
        x in nonzero_vector(3),
        y in nonzero_vector(3),
        alpha in 3.5f64..12.0,
    ) {
        let target = TargetDensity::student_like(3, alpha).unwrap();

        // RWM reduces to the plain target ratio, bit for bit
        let rwm = MhKernel::new(
            target.clone(),
            ProposalKernel::rwm(1.0, IncrementLaw::Gaussian).unwrap(),
        );
        let direct =
            target.log_density(&y).unwrap() - target.log_density(&x).unwrap();
        prop_assert_eq!(rwm.log_acceptance_ratio(&x, &y).unwrap(), direct);

        // MpCN equals the q-function difference with q = pi * ||.||^d
        let mpcn_kernel = MhKernel::new(target.clone(), ProposalKernel::mpcn(0.8).unwrap());
        let q = |z: &[f64]| target.log_density(z).unwrap() + 3.0 * numeric::ln_norm(z);
        prop_assert_eq!(
            mpcn_kernel.log_acceptance_ratio(&x, &y).unwrap(),
            q(&y) - q(&x)
        );

        // antisymmetry
        let fwd = mpcn_kernel.log_acceptance_ratio(&x, &y).unwrap();
        let bwd = mpcn_kernel.log_acceptance_ratio(&y, &x).unwrap();
        prop_assert_eq!(fwd, -bwd);
    }

    #[test]
    fn traces_round_trip_through_files(
        seed in any::<u64>(),
        n_steps in 50u64..200,
        thin in 1u64..4,
    ) {
        let cfg = RunConfig {
            target: TargetSpec::Student { dim: 2, alpha: 6.0 },
            kernel: KernelSpec::Mpcn { rho: 0.8 },
            x0: vec![1.0, 0.0],
            n_steps,
            burn_in: n_steps / 5,
            thin,
            seed,
            stream_id: 0,
        };
        let trace = runner::run_chain(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("t");
        runner::persist_trace(&trace, &base).unwrap();
        let loaded = runner::load_trace(&base).unwrap();
        prop_assert_eq!(trace, loaded);
    }

    #[test]
    fn formatted_doubles_round_trip_exactly(v in any::<f64>()) {
        prop_assume!(v.is_finite());
        let back: f64 = runner::format_f64(v).parse().unwrap();
        prop_assert_eq!(v.to_bits(), back.to_bits());
    }
}
