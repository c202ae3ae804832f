//! Flat INI-style config files: `[section]` headers over `key = value`
//! lines, `#` or `;` comments. No nesting, no quoting — grid axes are
//! comma-separated lists and probe states are semicolon-separated vectors.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::kernels::IncrementLaw;
use crate::runner::{KernelSpec, TargetSpec};

/// A parsed config file plus the SHA-256 of its raw bytes, which every
/// emitted table carries for provenance.
#[derive(Clone, Debug)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
    hash: String,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| {
                    Error::Config(format!("line {}: unterminated section header", lineno + 1))
                })?;
                current = name.trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                ))
            })?;
            if current.is_empty() {
                return Err(Error::Config(format!(
                    "line {}: `{}` appears before any [section]",
                    lineno + 1,
                    key.trim()
                )));
            }
            // strip a trailing inline comment
            let value = match value.split_once('#') {
                Some((v, _)) => v,
                None => value,
            };
            sections
                .get_mut(&current)
                .expect("section exists")
                .insert(key.trim().to_string(), value.trim().to_string());
        }
        let hash = hex_digest(text.as_bytes());
        Ok(Config { sections, hash })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config `{}`: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    /// Hex SHA-256 of the raw config text.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(|s| s.as_str())
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&str> {
        self.get(section, key)
            .ok_or_else(|| Error::Config(format!("missing required field `{section}.{key}`")))
    }

    pub fn parse_value<T>(&self, section: &str, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        let raw = self.require(section, key)?;
        raw.parse().map_err(|e| {
            Error::Config(format!(
                "field `{section}.{key}`: cannot parse `{raw}`: {e}"
            ))
        })
    }

    pub fn parse_or<T>(&self, section: &str, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.get(section, key) {
            None => Ok(default),
            Some(_) => self.parse_value(section, key),
        }
    }

    /// Comma-separated list of values.
    pub fn parse_list<T>(&self, section: &str, key: &str) -> Result<Vec<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        let raw = self.require(section, key)?;
        raw.split(',')
            .map(|piece| {
                let piece = piece.trim();
                piece.parse().map_err(|e| {
                    Error::Config(format!(
                        "field `{section}.{key}`: cannot parse `{piece}`: {e}"
                    ))
                })
            })
            .collect()
    }

    /// Comma-separated list with a default when the key is absent.
    pub fn parse_or_list_f64(
        &self,
        section: &str,
        key: &str,
        default: &[f64],
    ) -> Result<Vec<f64>> {
        match self.get(section, key) {
            None => Ok(default.to_vec()),
            Some(_) => self.parse_list(section, key),
        }
    }

    /// Semicolon-separated list of whitespace-separated vectors, e.g.
    /// `1 0; 1e6 0`.
    pub fn parse_states(&self, section: &str, key: &str) -> Result<Vec<Vec<f64>>> {
        let raw = self.require(section, key)?;
        raw.split(';')
            .map(|chunk| {
                chunk
                    .split_whitespace()
                    .map(|piece| {
                        piece.parse().map_err(|e| {
                            Error::Config(format!(
                                "field `{section}.{key}`: cannot parse `{piece}`: {e}"
                            ))
                        })
                    })
                    .collect()
            })
            .collect()
    }

    /// The `[target]` section as a spec: `family` plus its parameters.
    pub fn target_spec(&self) -> Result<TargetSpec> {
        let family = self.require("target", "family")?;
        let dim: usize = self.parse_value("target", "dim")?;
        self.target_spec_with_dim(family, dim)
    }

    /// A target spec with an explicit dimension; used by dimension sweeps.
    pub fn target_spec_with_dim(&self, family: &str, dim: usize) -> Result<TargetSpec> {
        match family {
            "student" => Ok(TargetSpec::Student {
                dim,
                alpha: self.parse_value("target", "alpha")?,
            }),
            "gaussian" => Ok(TargetSpec::Gaussian {
                dim,
                sigma: self.parse_or("target", "sigma", 1.0)?,
            }),
            "genexp" => Ok(TargetSpec::GenExponential {
                dim,
                c: self.parse_or("target", "c", 1.0)?,
                p: self.parse_value("target", "p")?,
            }),
            other => Err(Error::Config(format!(
                "field `target.family`: unknown family `{other}` \
                 (expected student, gaussian, or genexp)"
            ))),
        }
    }

    /// The `[kernel]` section as a spec: `kind` plus its parameters.
    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        let kind = self.require("kernel", "kind")?.to_string();
        self.kernel_spec_named(&kind)
    }

    /// A kernel spec for an explicit kind, with parameters taken from the
    /// `[kernel]` section; used by experiments that sweep kernel kinds.
    pub fn kernel_spec_named(&self, kind: &str) -> Result<KernelSpec> {
        match kind {
            "rwm" => Ok(KernelSpec::Rwm {
                step_scale: self.parse_or("kernel", "step_scale", 1.0)?,
                increment: self.increment_law()?,
            }),
            "pcn" => Ok(KernelSpec::Pcn {
                rho: self.parse_or("kernel", "rho", crate::kernels::DEFAULT_RHO)?,
            }),
            "mpcn" => Ok(KernelSpec::Mpcn {
                rho: self.parse_or("kernel", "rho", crate::kernels::DEFAULT_RHO)?,
            }),
            other => Err(Error::Config(format!(
                "field `kernel.kind`: unknown kernel `{other}` \
                 (expected rwm, pcn, or mpcn)"
            ))),
        }
    }

    fn increment_law(&self) -> Result<IncrementLaw> {
        match self.get("kernel", "increment").unwrap_or("gaussian") {
            "gaussian" => Ok(IncrementLaw::Gaussian),
            "uniform_ball" => Ok(IncrementLaw::UniformBall),
            other => Err(Error::Config(format!(
                "field `kernel.increment`: unknown increment law `{other}` \
                 (expected gaussian or uniform_ball)"
            ))),
        }
    }

    /// Starting state: explicit `chain.x0` wins over `chain.x0_radius`
    /// (radius times the first basis vector).
    pub fn x0(&self, dim: usize) -> Result<Vec<f64>> {
        if self.get("chain", "x0").is_some() {
            let x0: Vec<f64> = self.parse_list("chain", "x0")?;
            return Ok(x0);
        }
        if self.get("chain", "x0_radius").is_some() {
            let radius: f64 = self.parse_value("chain", "x0_radius")?;
            let mut x0 = vec![0.0; dim];
            x0[0] = radius;
            return Ok(x0);
        }
        Err(Error::Config(
            "missing required field `chain.x0` (or `chain.x0_radius`)".into(),
        ))
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Command-line overrides that shadow the `[run]` section.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<std::path::PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

/// `[run]` settings after applying CLI overrides.
#[derive(Clone, Debug)]
pub struct RunSettings {
    pub out: std::path::PathBuf,
    pub seed: u64,
    pub workers: usize,
}

pub fn run_settings(cfg: &Config, overrides: &Overrides) -> Result<RunSettings> {
    let out = match &overrides.out {
        Some(p) => p.clone(),
        None => std::path::PathBuf::from(cfg.get("run", "out").unwrap_or("out")),
    };
    let seed = match overrides.seed {
        Some(s) => s,
        None => cfg.parse_or("run", "seed", 0u64)?,
    };
    let workers = match overrides.workers {
        Some(w) => w,
        None => cfg.parse_or("run", "workers", 1usize)?,
    };
    if workers == 0 {
        return Err(Error::Config(
            "field `run.workers`: must be at least 1".into(),
        ));
    }
    Ok(RunSettings { out, seed, workers })
}
