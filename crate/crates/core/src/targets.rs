//! Unnormalized target densities with declared tail behaviour.
//!
//! Only density ratios ever enter an MH acceptance, so nothing here is
//! normalized. All evaluations go through the log scale and the scale-safe
//! norms from [`crate::numeric`]; the heavy-tailed family stays finite out to
//! radii of 1e300.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;

/// Declared tail behaviour of a target density.
///
/// This is metadata, not something inferred from the density: the diagnostics
/// that test tail claims numerically live in [`crate::diagnostics`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TailClass {
    /// `pi(r x) / pi(r u) -> ||x||^(-alpha)` along rays, `u` the unit diagonal.
    RegularlyVarying { alpha: f64 },
    /// Radial ratios `pi(r s e) / pi(r e)` collapse to 0 or infinity: lighter
    /// than any polynomial tail.
    RapidlyVarying,
    Other,
}

/// Parameter record for the built-in families; used by the analytic moment
/// criteria and by radial evaluation shortcuts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BuiltinFamily {
    StudentLike { alpha: f64 },
    Gaussian { sigma: f64 },
    GenExponential { c: f64, p: f64 },
}

type LogDensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
enum TargetKind {
    Builtin(BuiltinFamily),
    Custom {
        log_pi: LogDensityFn,
        grad_log_pi: Option<GradFn>,
    },
}

/// An unnormalized target density `pi` on R^d with optional gradient and
/// declared tail class. Immutable after construction and freely shareable
/// across threads.
#[derive(Clone)]
pub struct TargetDensity {
    dim: usize,
    tail: TailClass,
    kind: TargetKind,
}

impl fmt::Debug for TargetDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            TargetKind::Builtin(fam) => f
                .debug_struct("TargetDensity")
                .field("dim", &self.dim)
                .field("family", fam)
                .finish(),
            TargetKind::Custom { .. } => f
                .debug_struct("TargetDensity")
                .field("dim", &self.dim)
                .field("family", &"custom")
                .finish(),
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidDimension { got: dim, min: 2 });
    }
    Ok(())
}

impl TargetDensity {
    /// Heavy-tailed family `log pi(x) = -(alpha/2) * log(1 + ||x||^2)`,
    /// regularly varying with exponent `-alpha`.
    pub fn student_like(dim: usize, alpha: f64) -> Result<Self> {
        check_dim(dim)?;
        Error::ensure_positive("alpha", alpha)?;
        Ok(TargetDensity {
            dim,
            tail: TailClass::RegularlyVarying { alpha },
            kind: TargetKind::Builtin(BuiltinFamily::StudentLike { alpha }),
        })
    }

    /// Isotropic Gaussian `log pi(x) = -||x||^2 / (2 sigma^2)`.
    pub fn gaussian(dim: usize, sigma: f64) -> Result<Self> {
        check_dim(dim)?;
        Error::ensure_positive("sigma", sigma)?;
        Ok(TargetDensity {
            dim,
            tail: TailClass::RapidlyVarying,
            kind: TargetKind::Builtin(BuiltinFamily::Gaussian { sigma }),
        })
    }

    /// `log pi(x) = -c * ||x||^p` with `c > 0`, `p >= 1`. Exponential class at
    /// `p = 1`, super-exponential beyond.
    pub fn gen_exponential(dim: usize, c: f64, p: f64) -> Result<Self> {
        check_dim(dim)?;
        Error::ensure_positive("c", c)?;
        let p_ok = p >= 1.0 && p.is_finite();
        if !p_ok {
            return Err(Error::invalid_parameter(
                "p",
                format!("must be at least 1, got {p}"),
            ));
        }
        Ok(TargetDensity {
            dim,
            tail: TailClass::RapidlyVarying,
            kind: TargetKind::Builtin(BuiltinFamily::GenExponential { c, p }),
        })
    }

    /// Wrap a user-supplied log-density (and optional gradient).
    pub fn custom(
        dim: usize,
        tail: TailClass,
        log_pi: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad_log_pi: Option<GradFn>,
    ) -> Result<Self> {
        check_dim(dim)?;
        Ok(TargetDensity {
            dim,
            tail,
            kind: TargetKind::Custom {
                log_pi: Arc::new(log_pi),
                grad_log_pi,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tail(&self) -> TailClass {
        self.tail
    }

    /// Parameters of the built-in family, if this target is one.
    pub fn builtin(&self) -> Option<BuiltinFamily> {
        match &self.kind {
            TargetKind::Builtin(fam) => Some(*fam),
            TargetKind::Custom { .. } => None,
        }
    }

    pub fn has_gradient(&self) -> bool {
        match &self.kind {
            TargetKind::Builtin(_) => true,
            TargetKind::Custom { grad_log_pi, .. } => grad_log_pi.is_some(),
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `log pi(x)`, unnormalized.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        match &self.kind {
            TargetKind::Builtin(fam) => Ok(builtin_log_density_at(fam, x)),
            TargetKind::Custom { log_pi, .. } => Ok(log_pi(x)),
        }
    }

    /// Radial profile `log pi(r e)` for unit `e`; defined for the isotropic
    /// built-in families only.
    pub fn log_density_radial(&self, radius: f64) -> Result<f64> {
        Error::ensure_nonnegative("radius", radius)?;
        match &self.kind {
            TargetKind::Builtin(fam) => Ok(builtin_log_density_radial(fam, radius)),
            TargetKind::Custom { .. } => Err(Error::Unsupported(
                "radial evaluation requires a built-in isotropic family".into(),
            )),
        }
    }

    /// `grad log pi(x)`.
    pub fn grad_log_density(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        match &self.kind {
            TargetKind::Builtin(fam) => builtin_grad(fam, x),
            TargetKind::Custom { grad_log_pi, .. } => match grad_log_pi {
                Some(g) => Ok(g(x)),
                None => Err(Error::Unsupported(
                    "gradient unavailable for this target".into(),
                )),
            },
        }
    }

    /// Inner product of the unit position and unit log-gradient directions,
    /// in [-1, 1]. Strictly negative far out is the curvature condition for
    /// light-tailed geometric ergodicity.
    pub fn curvature_statistic(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        if numeric::norm(x) == 0.0 {
            return Err(Error::DegeneratePoint("x = 0 has no direction".into()));
        }
        let g = self.grad_log_density(x)?;
        if numeric::norm(&g) == 0.0 {
            return Err(Error::DegeneratePoint(
                "zero gradient: curvature direction undefined".into(),
            ));
        }
        Ok(numeric::cosine(x, &g))
    }

    /// The ray ratio `pi(r x) / pi(r u)` with `u` the unit-norm diagonal
    /// direction; converges to `||x||^(-alpha)` as `r` grows for the
    /// regularly varying family.
    pub fn regular_variation_limit(&self, x: &[f64], r: f64) -> Result<f64> {
        self.check_point(x)?;
        if !matches!(self.tail, TailClass::RegularlyVarying { .. }) {
            return Err(Error::Unsupported(
                "ray ratio requires a regularly varying target".into(),
            ));
        }
        if numeric::norm(x) == 0.0 {
            return Err(Error::DegeneratePoint("x = 0".into()));
        }
        Error::ensure_positive("r", r)?;
        let scaled: Vec<f64> = x.iter().map(|&v| r * v).collect();
        let diag = (self.dim as f64).sqrt().recip();
        let u: Vec<f64> = (0..self.dim).map(|_| r * diag).collect();
        Ok((self.log_density(&scaled)? - self.log_density(&u)?).exp())
    }
}

fn builtin_log_density_at(fam: &BuiltinFamily, x: &[f64]) -> f64 {
    match fam {
        BuiltinFamily::Gaussian { sigma } => {
            -numeric::norm_sq(x) / (2.0 * sigma * sigma)
        }
        BuiltinFamily::GenExponential { c, p } => {
            let n = numeric::norm(x);
            if *p == 1.0 {
                -c * n
            } else {
                -c * n.powf(*p)
            }
        }
        BuiltinFamily::StudentLike { alpha } => {
            let nsq = numeric::norm_sq(x);
            if nsq.is_finite() && nsq < 1e15 {
                -(alpha / 2.0) * nsq.ln_1p()
            } else {
                // log(1 + nsq) = 2 ln||x|| up to O(1/nsq); the scale-safe
                // norm keeps this finite out to 1e300.
                -alpha * numeric::ln_norm(x)
            }
        }
    }
}

fn builtin_log_density_radial(fam: &BuiltinFamily, radius: f64) -> f64 {
    match fam {
        BuiltinFamily::Gaussian { sigma } => -radius * radius / (2.0 * sigma * sigma),
        BuiltinFamily::GenExponential { c, p } => {
            if *p == 1.0 {
                -c * radius
            } else {
                -c * radius.powf(*p)
            }
        }
        BuiltinFamily::StudentLike { alpha } => {
            let nsq = radius * radius;
            if nsq.is_finite() && nsq < 1e15 {
                -(alpha / 2.0) * nsq.ln_1p()
            } else {
                -alpha * radius.ln()
            }
        }
    }
}

fn builtin_grad(fam: &BuiltinFamily, x: &[f64]) -> Result<Vec<f64>> {
    match fam {
        BuiltinFamily::Gaussian { sigma } => {
            let inv = 1.0 / (sigma * sigma);
            Ok(x.iter().map(|&v| -v * inv).collect())
        }
        BuiltinFamily::StudentLike { alpha } => {
            let factor = -alpha / (1.0 + numeric::norm_sq(x));
            Ok(x.iter().map(|&v| factor * v).collect())
        }
        BuiltinFamily::GenExponential { c, p } => {
            let n = numeric::norm(x);
            if n == 0.0 {
                if *p >= 2.0 {
                    return Ok(vec![0.0; x.len()]);
                }
                return Err(Error::DegeneratePoint(format!(
                    "gradient of -c||x||^p singular at 0 for p = {p}"
                )));
            }
            // grad(-c ||x||^p) = -c p ||x||^(p-2) x
            let factor = -c * p * n.powf(p - 2.0);
            Ok(x.iter().map(|&v| factor * v).collect())
        }
    }
}
