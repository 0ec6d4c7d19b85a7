//! Run configuration: flags and `FHC_*` environment variables (handled by
//! clap), then a flat `key = value` file, then defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;

use irregular_orbits::dyadic_sets::{min_p_for, SeparationParams};
use irregular_orbits::fhc_vector::Family;
use irregular_orbits::scalar::{format_scalar, parse_scalar, Scalar};
use irregular_orbits::shift_model::{ShiftOperator, Space};

/// Flags shared by every subcommand. Each one can also be set through the
/// environment variable named next to it, or through the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Flat `key = value` file; keys are the long flag names.
    #[arg(long, env = "FHC_CONFIG", global = true)]
    pub config: Option<PathBuf>,
    /// Weight of the shift, a Gaussian rational with modulus > 1.
    #[arg(long, env = "FHC_OMEGA", global = true)]
    pub omega: Option<String>,
    /// `l2`, `lp:<p>` or `c0`.
    #[arg(long, env = "FHC_SPACE", global = true)]
    pub space: Option<String>,
    /// Number of levels carrying a coefficient block.
    #[arg(long, env = "FHC_SMAX", global = true)]
    pub smax: Option<u32>,
    /// Number of checkpoints `N_l`.
    #[arg(long, env = "FHC_CHECKPOINTS", global = true)]
    pub checkpoints: Option<usize>,
    /// Horizon for exhaustive scans.
    #[arg(long, env = "FHC_HORIZON", global = true)]
    pub horizon: Option<u64>,
    /// Horizon of the floating-point orbit oracle.
    #[arg(long, env = "FHC_NUMERIC_HORIZON", global = true)]
    pub numeric_horizon: Option<u64>,
    /// `one-block` or `enumerated`.
    #[arg(long, env = "FHC_FAMILY", global = true)]
    pub family: Option<String>,
    /// Output directory.
    #[arg(long, env = "FHC_OUT", global = true)]
    pub out: Option<PathBuf>,
    /// Seed for randomized sweeps.
    #[arg(long, env = "FHC_SEED", global = true)]
    pub seed: Option<u64>,
    /// Separation slack `d`.
    #[arg(long, env = "FHC_D", global = true)]
    pub d: Option<u64>,
    /// Force `p` instead of the smallest admissible value; the parameters
    /// are then used unchecked.
    #[arg(long, env = "FHC_P", global = true)]
    pub p: Option<u32>,
    /// Truncation tolerance for certified norms.
    #[arg(long, env = "FHC_TAIL_TOL", global = true)]
    pub tail_tol: Option<f64>,
    /// Checkpoints with `q_l` at least this value form the density tail.
    #[arg(long, env = "FHC_TAIL_FROM_Q", global = true)]
    pub tail_from_q: Option<u32>,
}

const KEYS: &[&str] = &[
    "omega",
    "space",
    "smax",
    "checkpoints",
    "horizon",
    "numeric_horizon",
    "family",
    "out",
    "seed",
    "d",
    "p",
    "tail_tol",
    "tail_from_q",
];

/// Parses a flat config file. Blank lines and `#` comments are skipped;
/// dashes in keys are read as underscores.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected key = value", no + 1);
        };
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            bail!("config line {}: unknown key {key:?}", no + 1);
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub omega: Scalar,
    pub space: Space,
    pub params: SeparationParams,
    pub p_forced: bool,
    pub s_max: u32,
    pub checkpoint_count: usize,
    pub horizon: u64,
    pub numeric_horizon: u64,
    pub family: Family,
    pub out: PathBuf,
    pub seed: u64,
    pub tail_tol: f64,
    pub tail_from_q: u32,
}

/// The resolved configuration as written into reports.
#[derive(Debug, Serialize)]
pub struct ConfigRecord {
    pub omega: String,
    pub space: String,
    pub d: u64,
    pub p: u32,
    pub p_forced: bool,
    pub s_max: u32,
    pub checkpoints: usize,
    pub horizon: u64,
    pub numeric_horizon: u64,
    pub family: String,
    pub seed: u64,
    pub tail_tol: f64,
    pub tail_from_q: u32,
}

fn pick<T: std::str::FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    if flag.is_some() {
        return Ok(flag);
    }
    match file.get(key) {
        None => Ok(None),
        Some(v) => v.parse().map(Some).map_err(|e| anyhow::anyhow!("config key {key}: {e}")),
    }
}

impl RunConfig {
    pub fn resolve(o: &Overrides) -> Result<Self> {
        let file = match &o.config {
            Some(path) => parse_config(&read(path)?)?,
            None => BTreeMap::new(),
        };
        let omega_text = pick(o.omega.clone(), &file, "omega")?.unwrap_or_else(|| "2".into());
        let omega = parse_scalar(&omega_text).with_context(|| format!("--omega {omega_text}"))?;
        let space_text = pick(o.space.clone(), &file, "space")?.unwrap_or_else(|| "l2".into());
        let space: Space = space_text.parse().with_context(|| format!("--space {space_text}"))?;
        // validates |ω| > 1 and the space exponent
        ShiftOperator::new(omega.clone(), space)?;

        let d = pick(o.d, &file, "d")?.unwrap_or(1);
        let forced = pick(o.p, &file, "p")?;
        let params = match forced {
            Some(p) => SeparationParams::unchecked(d, p),
            None => SeparationParams::new(d, min_p_for(d)?)?,
        };

        let s_max = pick(o.smax, &file, "smax")?.unwrap_or(6);
        if s_max == 0 {
            bail!("--smax must be at least 1");
        }
        let checkpoint_count = pick(o.checkpoints, &file, "checkpoints")?.unwrap_or(9);
        if checkpoint_count == 0 {
            bail!("--checkpoints must be at least 1");
        }
        let horizon = pick(o.horizon, &file, "horizon")?.unwrap_or(1 << 20);
        let numeric_horizon = pick(o.numeric_horizon, &file, "numeric_horizon")?.unwrap_or(1 << 14);
        if horizon == 0 || numeric_horizon == 0 {
            bail!("horizons must be at least 1");
        }
        let family_text = pick(o.family.clone(), &file, "family")?.unwrap_or_else(|| "one-block".into());
        let family: Family = family_text.parse()?;
        let out = pick(o.out.clone(), &file, "out")?.unwrap_or_else(|| PathBuf::from("out"));
        let seed = pick(o.seed, &file, "seed")?.unwrap_or(0);
        let tail_tol = pick(o.tail_tol, &file, "tail_tol")?.unwrap_or(1e-12);
        if !(tail_tol > 0.0) {
            bail!("--tail-tol must be positive");
        }
        let tail_from_q = pick(o.tail_from_q, &file, "tail_from_q")?.unwrap_or(20);
        Ok(RunConfig {
            omega,
            space,
            params,
            p_forced: forced.is_some(),
            s_max,
            checkpoint_count,
            horizon,
            numeric_horizon,
            family,
            out,
            seed,
            tail_tol,
            tail_from_q,
        })
    }

    pub fn operator(&self) -> Result<ShiftOperator> {
        Ok(ShiftOperator::new(self.omega.clone(), self.space)?)
    }

    pub fn record(&self) -> ConfigRecord {
        ConfigRecord {
            omega: format_scalar(&self.omega),
            space: self.space.label(),
            d: self.params.d(),
            p: self.params.p(),
            p_forced: self.p_forced,
            s_max: self.s_max,
            checkpoints: self.checkpoint_count,
            horizon: self.horizon,
            numeric_horizon: self.numeric_horizon,
            family: self.family.label().to_string(),
            seed: self.seed,
            tail_tol: self.tail_tol,
            tail_from_q: self.tail_from_q,
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}
