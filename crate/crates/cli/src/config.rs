//! Flag and config-file resolution. Config files are TOML with keys named
//! like the flags (`v`, `q1`, `verify-each`, ...); flags win over the file.

use std::path::{Path, PathBuf};

use clap::Args;
use csi_market::MarketParams;
use serde::Deserialize;

use crate::Failure;

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Settings {
    /// Value of a sale to the secondary.
    #[arg(long)]
    pub v: Option<f64>,
    /// Cost of leasing a channel (default 0).
    #[arg(long)]
    pub c: Option<f64>,
    /// Availability of primary 1's channel.
    #[arg(long)]
    pub q1: Option<f64>,
    /// Availability of primary 2's channel (default q1).
    #[arg(long)]
    pub q2: Option<f64>,
    /// Acquisition cost of primary 1.
    #[arg(long)]
    pub s1: Option<f64>,
    /// Acquisition cost of primary 2 (default s1).
    #[arg(long)]
    pub s2: Option<f64>,
    /// Probability an acquired estimate is right (default 1).
    #[arg(long)]
    pub qs: Option<f64>,
    /// Number of primaries (default 2).
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of secondaries (default 1).
    #[arg(long)]
    pub m: Option<usize>,
    /// Simulated rounds.
    #[arg(long)]
    pub rounds: Option<u64>,
    /// Random seed; required whenever anything is simulated.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Probe points for verification, or rows per table for `dist`.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Sweep axis as `var:lo:hi:steps`, var one of s, q, qs, q2, s2.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Output file (directory for `solve`); stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Certify every sweep row and add an `eps` column.
    #[arg(long)]
    #[serde(default)]
    pub verify_each: bool,
    /// Largest acceptable deviation gain.
    #[arg(long)]
    pub eps: Option<f64>,
    /// TOML file with any of the keys above.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

macro_rules! prefer {
    ($flags:ident, $file:ident; $($field:ident),*) => {
        Settings {
            $($field: $flags.$field.or($file.$field),)*
            verify_each: $flags.verify_each || $file.verify_each,
            config: $flags.config,
        }
    };
}

impl Settings {
    /// Merges the config file named by `--config`, if any, under the flags.
    pub fn resolve(self) -> Result<Settings, Failure> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let file = read_config(&path)?;
        let flags = self;
        Ok(prefer!(flags, file; v, c, q1, q2, s1, s2, qs, n, m, rounds, seed, grid, sweep, out, eps))
    }

    pub fn params(&self) -> Result<MarketParams, Failure> {
        let need = |name: &str, x: Option<f64>| x.ok_or_else(|| Failure::Usage(format!("--{name} is required")));
        let q1 = need("q1", self.q1)?;
        let s1 = need("s1", self.s1)?;
        Ok(MarketParams {
            v: need("v", self.v)?,
            c: self.c.unwrap_or(0.0),
            q: [q1, self.q2.unwrap_or(q1)],
            s: [s1, self.s2.unwrap_or(s1)],
            qs: self.qs.unwrap_or(1.0),
            n: self.n.unwrap_or(2),
            m: self.m.unwrap_or(1),
        })
    }

    pub fn seed(&self) -> Result<u64, Failure> {
        self.seed
            .ok_or_else(|| Failure::Usage("--seed is required when simulating".into()))
    }
}

fn read_config(path: &Path) -> Result<Settings, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    S,
    Q,
    Qs,
    Q2,
    S2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub axis: Axis,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Sweep {
    pub fn parse(text: &str) -> Result<Sweep, Failure> {
        let bad = |why: &str| Failure::Usage(format!("--sweep {text}: {why}"));
        let parts: Vec<&str> = text.split(':').collect();
        let [var, lo, hi, steps] = parts[..] else {
            return Err(bad("expected var:lo:hi:steps"));
        };
        let axis = match var {
            "s" => Axis::S,
            "q" => Axis::Q,
            "qs" => Axis::Qs,
            "q2" => Axis::Q2,
            "s2" => Axis::S2,
            _ => return Err(bad("variable must be one of s, q, qs, q2, s2")),
        };
        let num = |x: &str| x.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| bad("bounds must be finite numbers"));
        let (lo, hi) = (num(lo)?, num(hi)?);
        let steps: usize = steps.parse().map_err(|_| bad("steps must be an integer"))?;
        if steps < 2 {
            return Err(bad("steps must be at least 2"));
        }
        Ok(Sweep { axis, lo, hi, steps })
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.steps)
            .map(|k| self.lo + (self.hi - self.lo) * k as f64 / (self.steps - 1) as f64)
            .collect()
    }

    pub fn apply(&self, base: &MarketParams, x: f64) -> MarketParams {
        let mut p = *base;
        match self.axis {
            Axis::S => p.s = [x, x],
            Axis::Q => p.q = [x, x],
            Axis::Qs => p.qs = x,
            Axis::Q2 => p.q[1] = x,
            Axis::S2 => p.s[1] = x,
        }
        p
    }
}
