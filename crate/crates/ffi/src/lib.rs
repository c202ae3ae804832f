//! C ABI for the mpcn sampling library.
//!
//! Targets and samplers are opaque handles created and destroyed through
//! paired `_new`/`_free` calls; every fallible function returns an
//! [`MpcnStatus`] and writes its result through an out-pointer. The header
//! `include/mpcn.h` is generated by cbindgen at build time.

use std::ffi::{c_char, CStr};

use mpcn::runner::{KernelSpec, TargetSpec};
use mpcn::{Error, IncrementLaw, MhKernel, RngStream, TargetDensity};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MpcnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DegenerateState = 3,
    Unsupported = 4,
    RuntimeError = 5,
}

impl From<&Error> for MpcnStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidParameter { .. }
            | Error::InvalidDimension { .. }
            | Error::DimensionMismatch { .. }
            | Error::Config(_) => MpcnStatus::InvalidArgument,
            Error::DegenerateState(_) | Error::DegeneratePoint(_) => MpcnStatus::DegenerateState,
            Error::Unsupported(_) => MpcnStatus::Unsupported,
            _ => MpcnStatus::RuntimeError,
        }
    }
}

/// Opaque handle to an unnormalized target density.
pub struct MpcnTarget {
    inner: TargetDensity,
}

/// Opaque handle to a running Markov chain: kernel, current state, RNG.
pub struct MpcnSampler {
    kernel: MhKernel,
    state: Vec<f64>,
    rng: RngStream,
    steps: u64,
    accepted: u64,
}

/// Static human-readable description of a status code.
#[no_mangle]
pub extern "C" fn mpcn_status_message(status: MpcnStatus) -> *const c_char {
    let msg: &CStr = match status {
        MpcnStatus::Ok => c"ok",
        MpcnStatus::NullPointer => c"null pointer argument",
        MpcnStatus::InvalidArgument => c"invalid argument",
        MpcnStatus::DegenerateState => c"degenerate state (e.g. x = 0 for MpCN)",
        MpcnStatus::Unsupported => c"unsupported operation",
        MpcnStatus::RuntimeError => c"runtime error",
    };
    msg.as_ptr()
}

fn make_target(spec: TargetSpec, out: *mut *mut MpcnTarget) -> MpcnStatus {
    if out.is_null() {
        return MpcnStatus::NullPointer;
    }
    match spec.build() {
        Ok(inner) => {
            let handle = Box::new(MpcnTarget { inner });
            unsafe { *out = Box::into_raw(handle) };
            MpcnStatus::Ok
        }
        Err(e) => MpcnStatus::from(&e),
    }
}

/// Heavy-tailed target `log pi(x) = -(alpha/2) log(1 + ||x||^2)`.
#[no_mangle]
pub extern "C" fn mpcn_target_student(
    dim: usize,
    alpha: f64,
    out: *mut *mut MpcnTarget,
) -> MpcnStatus {
    make_target(TargetSpec::Student { dim, alpha }, out)
}

/// Isotropic Gaussian target with standard deviation `sigma`.
#[no_mangle]
pub extern "C" fn mpcn_target_gaussian(
    dim: usize,
    sigma: f64,
    out: *mut *mut MpcnTarget,
) -> MpcnStatus {
    make_target(TargetSpec::Gaussian { dim, sigma }, out)
}

/// Exponential-family target `log pi(x) = -c ||x||^p`.
#[no_mangle]
pub extern "C" fn mpcn_target_gen_exponential(
    dim: usize,
    c: f64,
    p: f64,
    out: *mut *mut MpcnTarget,
) -> MpcnStatus {
    make_target(TargetSpec::GenExponential { dim, c, p }, out)
}

/// Evaluate `log pi(x)`; `x` must point at `len` doubles.
///
/// # Safety
/// `target` must be a live handle from a `mpcn_target_*` constructor;
/// `x` must be readable for `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mpcn_target_log_density(
    target: *const MpcnTarget,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> MpcnStatus {
    if target.is_null() || x.is_null() || out.is_null() {
        return MpcnStatus::NullPointer;
    }
    let point = std::slice::from_raw_parts(x, len);
    match (*target).inner.log_density(point) {
        Ok(v) => {
            *out = v;
            MpcnStatus::Ok
        }
        Err(e) => MpcnStatus::from(&e),
    }
}

/// Release a target handle. Passing null is a no-op.
///
/// # Safety
/// `target` must be null or a pointer returned by a `mpcn_target_*`
/// constructor that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn mpcn_target_free(target: *mut MpcnTarget) {
    if !target.is_null() {
        drop(Box::from_raw(target));
    }
}

unsafe fn make_sampler(
    target: *const MpcnTarget,
    kernel: KernelSpec,
    x0: *const f64,
    len: usize,
    seed: u64,
    stream_id: u64,
    out: *mut *mut MpcnSampler,
) -> MpcnStatus {
    if target.is_null() || x0.is_null() || out.is_null() {
        return MpcnStatus::NullPointer;
    }
    let target = &(*target).inner;
    if len != target.dim() {
        return MpcnStatus::InvalidArgument;
    }
    let state = std::slice::from_raw_parts(x0, len).to_vec();
    let proposal = match kernel.build() {
        Ok(p) => p,
        Err(e) => return MpcnStatus::from(&e),
    };
    let kernel = MhKernel::new(target.clone(), proposal);
    // fail fast on starts the kernel cannot leave from (e.g. 0 for MpCN)
    let mut probe = RngStream::new(seed, stream_id);
    if let Err(e) = kernel.step(&state, &mut probe) {
        return MpcnStatus::from(&e);
    }
    let sampler = Box::new(MpcnSampler {
        kernel,
        state,
        rng: RngStream::new(seed, stream_id),
        steps: 0,
        accepted: 0,
    });
    *out = Box::into_raw(sampler);
    MpcnStatus::Ok
}

/// Random-walk Metropolis sampler with Gaussian increments.
///
/// # Safety
/// See [`mpcn_target_log_density`]; additionally `x0` must hold `len`
/// doubles matching the target dimension.
#[no_mangle]
pub unsafe extern "C" fn mpcn_sampler_new_rwm(
    target: *const MpcnTarget,
    step_scale: f64,
    x0: *const f64,
    len: usize,
    seed: u64,
    stream_id: u64,
    out: *mut *mut MpcnSampler,
) -> MpcnStatus {
    make_sampler(
        target,
        KernelSpec::Rwm {
            step_scale,
            increment: IncrementLaw::Gaussian,
        },
        x0,
        len,
        seed,
        stream_id,
        out,
    )
}

/// Preconditioned Crank-Nicolson sampler.
///
/// # Safety
/// See [`mpcn_sampler_new_rwm`].
#[no_mangle]
pub unsafe extern "C" fn mpcn_sampler_new_pcn(
    target: *const MpcnTarget,
    rho: f64,
    x0: *const f64,
    len: usize,
    seed: u64,
    stream_id: u64,
    out: *mut *mut MpcnSampler,
) -> MpcnStatus {
    make_sampler(target, KernelSpec::Pcn { rho }, x0, len, seed, stream_id, out)
}

/// Mixed pCN sampler. `x0` must be nonzero.
///
/// # Safety
/// See [`mpcn_sampler_new_rwm`].
#[no_mangle]
pub unsafe extern "C" fn mpcn_sampler_new_mpcn(
    target: *const MpcnTarget,
    rho: f64,
    x0: *const f64,
    len: usize,
    seed: u64,
    stream_id: u64,
    out: *mut *mut MpcnSampler,
) -> MpcnStatus {
    make_sampler(target, KernelSpec::Mpcn { rho }, x0, len, seed, stream_id, out)
}

/// Advance the chain by `n_steps` transitions.
///
/// # Safety
/// `sampler` must be a live handle from a `mpcn_sampler_new_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn mpcn_sampler_step(
    sampler: *mut MpcnSampler,
    n_steps: u64,
) -> MpcnStatus {
    if sampler.is_null() {
        return MpcnStatus::NullPointer;
    }
    let s = &mut *sampler;
    for _ in 0..n_steps {
        match s.kernel.step(&s.state, &mut s.rng) {
            Ok((next, accepted)) => {
                s.state = next;
                s.steps += 1;
                s.accepted += accepted as u64;
            }
            Err(e) => return MpcnStatus::from(&e),
        }
    }
    MpcnStatus::Ok
}

/// Copy the current state into `out`, which must hold `len == dim` doubles.
///
/// # Safety
/// `sampler` must be live; `out` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mpcn_sampler_state(
    sampler: *const MpcnSampler,
    out: *mut f64,
    len: usize,
) -> MpcnStatus {
    if sampler.is_null() || out.is_null() {
        return MpcnStatus::NullPointer;
    }
    let s = &*sampler;
    if len != s.state.len() {
        return MpcnStatus::InvalidArgument;
    }
    std::ptr::copy_nonoverlapping(s.state.as_ptr(), out, len);
    MpcnStatus::Ok
}

/// Fraction of accepted transitions so far (0 before the first step).
///
/// # Safety
/// `sampler` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mpcn_sampler_acceptance_rate(
    sampler: *const MpcnSampler,
    out: *mut f64,
) -> MpcnStatus {
    if sampler.is_null() || out.is_null() {
        return MpcnStatus::NullPointer;
    }
    let s = &*sampler;
    *out = if s.steps == 0 {
        0.0
    } else {
        s.accepted as f64 / s.steps as f64
    };
    MpcnStatus::Ok
}

/// Release a sampler handle. Passing null is a no-op.
///
/// # Safety
/// `sampler` must be null or an unfreed pointer from `mpcn_sampler_new_*`.
#[no_mangle]
pub unsafe extern "C" fn mpcn_sampler_free(sampler: *mut MpcnSampler) {
    if !sampler.is_null() {
        drop(Box::from_raw(sampler));
    }
}

/// Log-density of the MpCN proposal kernel `q(x -> y)`.
///
/// # Safety
/// `x` and `y` must each hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mpcn_proposal_log_density(
    x: *const f64,
    y: *const f64,
    len: usize,
    rho: f64,
    out: *mut f64,
) -> MpcnStatus {
    if x.is_null() || y.is_null() || out.is_null() {
        return MpcnStatus::NullPointer;
    }
    let xs = std::slice::from_raw_parts(x, len);
    let ys = std::slice::from_raw_parts(y, len);
    match mpcn::mpcn_proposal_log_density(xs, ys, rho) {
        Ok(v) => {
            *out = v;
            MpcnStatus::Ok
        }
        Err(e) => MpcnStatus::from(&e),
    }
}

/// Fill `out` with `n` draws of the MpCN log squared-radius increment law.
///
/// # Safety
/// `out` must be writable for `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn mpcn_sample_xi(
    dim: usize,
    rho: f64,
    seed: u64,
    stream_id: u64,
    n: usize,
    out: *mut f64,
) -> MpcnStatus {
    if out.is_null() {
        return MpcnStatus::NullPointer;
    }
    let mut rng = RngStream::new(seed, stream_id);
    for i in 0..n {
        match mpcn::sample_xi(dim, rho, &mut rng) {
            Ok(v) => *out.add(i) = v,
            Err(e) => return MpcnStatus::from(&e),
        }
    }
    MpcnStatus::Ok
}
