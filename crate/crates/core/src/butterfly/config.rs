//! Sweep configuration and the key-value config file.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diophantine::Strategy;
use crate::error::{Error, Result};

/// Which objects the triangular-window exclusion `(q +- 1)/2` refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReading {
    /// Fluxes `p = (q +- 1)/2` at odd `q` are left uncolored.
    #[default]
    Flux,
    /// Chern values `(q +- 1)/2` are removed from the odd-`q` window.
    Value,
    None,
}

impl ExclusionReading {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExclusionReading::Flux => "flux",
            ExclusionReading::Value => "value",
            ExclusionReading::None => "none",
        }
    }
}

impl std::str::FromStr for ExclusionReading {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flux" => Ok(ExclusionReading::Flux),
            "value" => Ok(ExclusionReading::Value),
            "none" => Ok(ExclusionReading::None),
            other => Err(Error::Config(format!("unknown exclusion reading {other:?}"))),
        }
    }
}

/// Everything that determines a diagram and its image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ButterflyConfig {
    pub q_max: u64,
    pub phi_d: f64,
    pub t: [f64; 3],
    pub resolver: Strategy,
    /// Fluxes with `q` at or below this get computed Chern numbers whatever
    /// the resolver.
    pub computed_threshold: u64,
    pub exclusions: ExclusionReading,
    /// Lattice size for computed Chern numbers.
    pub grid: usize,
    pub eps_gap: f64,
    /// Image width: bins along the chemical potential axis.
    pub mu_bins: usize,
    /// Image height: rows along the flux axis.
    pub height: usize,
    /// A flux with denominator `q` is drawn `max(1, round(height * row_scale / q))` rows thick.
    pub row_scale: f64,
    /// Half-width of the plotted energy range; `2 (t1 + t2 + t3)` when unset.
    pub e_max: Option<f64>,
    /// Palette period; twice the largest displayed `|sigma|` when unset.
    pub palette_period: Option<u64>,
    /// Worker threads, `0` for all cores. Not part of the diagram identity.
    #[serde(skip)]
    pub jobs: usize,
}

impl Default for ButterflyConfig {
    fn default() -> Self {
        ButterflyConfig {
            q_max: 32,
            phi_d: PI / 2.0,
            t: [1.0; 3],
            resolver: Strategy::Triangular,
            computed_threshold: 16,
            exclusions: ExclusionReading::Flux,
            grid: crate::chern::DEFAULT_GRID,
            eps_gap: crate::spectrum::DEFAULT_EPS_GAP,
            mu_bins: 1024,
            height: 1024,
            row_scale: 0.05,
            e_max: None,
            palette_period: None,
            jobs: 0,
        }
    }
}

impl ButterflyConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.q_max < 1 {
            return bad("q_max must be at least 1".into());
        }
        if self.q_max > 1 << 20 {
            return bad(format!("q_max {} is too large", self.q_max));
        }
        if self.mu_bins < 2 {
            return bad("mu_bins must be at least 2".into());
        }
        if self.height < 2 {
            return bad("height must be at least 2".into());
        }
        if !self.phi_d.is_finite() {
            return bad("phi_d must be finite".into());
        }
        if self.t.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return bad(format!("hoppings must be finite and non-negative, got {:?}", self.t));
        }
        if self.t.iter().all(|&t| t == 0.0) {
            return bad("at least one hopping must be nonzero".into());
        }
        if self.grid < 2 {
            return bad("grid must be at least 2".into());
        }
        if !(self.eps_gap.is_finite() && self.eps_gap >= 0.0) {
            return bad("eps_gap must be finite and non-negative".into());
        }
        if !(self.row_scale.is_finite() && self.row_scale > 0.0) {
            return bad("row_scale must be positive".into());
        }
        if let Some(e) = self.e_max {
            if !(e.is_finite() && e > 0.0) {
                return bad("e_max must be positive".into());
            }
        }
        if self.palette_period == Some(0) {
            return bad("palette_period must be positive".into());
        }
        Ok(())
    }

    pub fn energy_clamp(&self) -> f64 {
        self.e_max.unwrap_or(2.0 * self.t.iter().sum::<f64>())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Parses an angle: a plain number, or a multiple of `pi` such as `pi/2`,
/// `-pi/2`, `2pi/3`, `0.5*pi`.
pub fn parse_angle(s: &str) -> Result<f64> {
    let bad = || Error::Parse { line: 1, message: format!("bad angle {s:?}") };
    let text = s.trim().to_ascii_lowercase();
    if let Ok(v) = text.parse::<f64>() {
        return if v.is_finite() { Ok(v) } else { Err(bad()) };
    }
    let (coef, rest) = text.split_once("pi").ok_or_else(bad)?;
    let coef = coef.trim().trim_end_matches('*').trim();
    let c = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    let rest = rest.trim();
    let d = if rest.is_empty() {
        1.0
    } else {
        let den = rest.strip_prefix('/').ok_or_else(bad)?.trim();
        den.parse::<f64>().map_err(|_| bad())?
    };
    let v = c * PI / d;
    if v.is_finite() && d != 0.0 {
        Ok(v)
    } else {
        Err(bad())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AngleValue {
    Number(f64),
    Text(String),
}

impl AngleValue {
    pub fn radians(&self) -> Result<f64> {
        match self {
            AngleValue::Number(v) if v.is_finite() => Ok(*v),
            AngleValue::Number(v) => Err(Error::Config(format!("angle {v} is not finite"))),
            AngleValue::Text(s) => parse_angle(s),
        }
    }
}

/// The config file: TOML whose keys are the long CLI flag names. Every key is
/// optional; command line flags override the file.
///
/// ```toml
/// qmax = 64
/// phi-d = "pi/2"
/// t1 = 1.0
/// resolver = "triangular"
/// mu-bins = 800
/// out = "butterfly.jsonl"
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub p: Option<u64>,
    pub q: Option<u64>,
    pub phi_d: Option<AngleValue>,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub t3: Option<f64>,
    pub qmax: Option<u64>,
    pub resolver: Option<String>,
    pub grid: Option<usize>,
    pub mu_bins: Option<usize>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub format: Option<String>,
    pub method: Option<String>,
    pub computed_threshold: Option<u64>,
    pub exclusions: Option<String>,
    pub height: Option<usize>,
    pub row_scale: Option<f64>,
    pub e_max: Option<f64>,
    pub eps_gap: Option<f64>,
    pub palette_period: Option<u64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::Parse { line, message: e.message().to_string() }
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Writes the butterfly-relevant keys into `config` and validates it.
    pub fn apply(&self, config: &mut ButterflyConfig) -> Result<()> {
        if let Some(v) = self.qmax {
            config.q_max = v;
        }
        if let Some(v) = &self.phi_d {
            config.phi_d = v.radians()?;
        }
        for (slot, v) in config.t.iter_mut().zip([self.t1, self.t2, self.t3]) {
            if let Some(v) = v {
                *slot = v;
            }
        }
        if let Some(v) = &self.resolver {
            config.resolver = v.parse()?;
        }
        if let Some(v) = self.grid {
            config.grid = v;
        }
        if let Some(v) = self.mu_bins {
            config.mu_bins = v;
        }
        if let Some(v) = self.jobs {
            config.jobs = v;
        }
        if let Some(v) = self.computed_threshold {
            config.computed_threshold = v;
        }
        if let Some(v) = &self.exclusions {
            config.exclusions = v.parse()?;
        }
        if let Some(v) = self.height {
            config.height = v;
        }
        if let Some(v) = self.row_scale {
            config.row_scale = v;
        }
        if self.e_max.is_some() {
            config.e_max = self.e_max;
        }
        if let Some(v) = self.eps_gap {
            config.eps_gap = v;
        }
        if self.palette_period.is_some() {
            config.palette_period = self.palette_period;
        }
        config.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("0.25").unwrap(), 0.25);
        assert_eq!(parse_angle("pi/2").unwrap(), PI / 2.0);
        assert_eq!(parse_angle(" -PI/2 ").unwrap(), -PI / 2.0);
        assert_eq!(parse_angle("2pi/3").unwrap(), 2.0 * PI / 3.0);
        assert_eq!(parse_angle("0.5*pi").unwrap(), 0.5 * PI);
        assert_eq!(parse_angle("pi").unwrap(), PI);
        for bad in ["", "pi/0", "pi/", "xpi", "pi2", "inf", "nan", "1e400"] {
            assert!(parse_angle(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn file_overrides_defaults() {
        let f = ConfigFile::parse("qmax = 7\nphi-d = \"-pi/2\"\nt3 = 0.0\nresolver = \"chain\"\n").unwrap();
        let mut c = ButterflyConfig::default();
        f.apply(&mut c).unwrap();
        assert_eq!(c.q_max, 7);
        assert_eq!(c.phi_d, -PI / 2.0);
        assert_eq!(c.t, [1.0, 1.0, 0.0]);
        assert_eq!(c.resolver, Strategy::Chain);
    }

    #[test]
    fn file_rejects_unknown_and_invalid() {
        assert!(ConfigFile::parse("colour = 1").is_err());
        let e = ConfigFile::parse("qmax = 3\nqmax = 4").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e:?}");
        let mut c = ButterflyConfig::default();
        assert!(ConfigFile::parse("mu-bins = 1").unwrap().apply(&mut c).is_err());
        assert!(ConfigFile::parse("resolver = \"best\"").unwrap().apply(&mut c).is_err());
    }

    #[test]
    fn hash_ignores_jobs() {
        let a = ButterflyConfig::default();
        let b = ButterflyConfig { jobs: 7, ..a.clone() };
        assert_eq!(a.hash(), b.hash());
        let c = ButterflyConfig { q_max: 5, ..a.clone() };
        assert_ne!(a.hash(), c.hash());
    }
}
