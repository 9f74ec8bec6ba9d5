//! Run configurations as read from JSON. Each one echoes into every output
//! together with its hash, so a run can be repeated from its outputs alone.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};

use levelcross::cavity::{self, CavityParams, CavityState, Convention};
use levelcross::chain::{BiasSign, ChainSpec, ChainSystem, EnergyUnits};
use levelcross::permutation::PulseSequence;
use levelcross::pulse::{schedules_from_specs, BiasSchedules, PulseSpec};

pub const DEFAULT_CHAIN_STEP: f64 = 1e-3;
pub const DEFAULT_CAVITY_STEP: f64 = 1e-4;

/// Named ready-made chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `g1 = 30, g2 = 60, λ = 1`, bias on site 3.
    FiveSite,
    /// `{S,W,W,S,W,W,S}` with `S = 30, 45, 60`, `W = 1`, biases on 3 and 6.
    EightSite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sw_threshold: Option<f64>,
    #[serde(default)]
    pub sign: BiasSign,
    #[serde(default)]
    pub units: EnergyUnits,
    /// Explicit pulses; primitives without a site go to the first bias site.
    #[serde(default)]
    pub pulses: Vec<PulseSpec>,
    /// Alternative to `pulses`: serial primitives from `t = 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<PulseSequence>,
    /// Reference state to start from, 1-based.
    #[serde(default = "one")]
    pub initial: usize,
    /// End of the run; defaults to the end of the last pulse.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Number of recorded samples along the run.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Level-diagram grid points.
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Permutation the run is expected to perform, in cycle notation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<String>,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}

fn default_samples() -> usize {
    600
}

fn default_grid() -> usize {
    levelcross::spectral::DEFAULT_GRID_POINTS
}

fn default_tol() -> f64 {
    levelcross::permutation::DEFAULT_TOL
}

impl ChainConfig {
    pub fn system(&self) -> Result<ChainSystem> {
        let mut sys = match (&self.preset, &self.chain) {
            (Some(_), Some(_)) => bail!("give either `preset` or `chain`, not both"),
            (None, None) => bail!("missing field `chain` (or `preset`)"),
            (Some(Preset::FiveSite), None) => ChainSystem::five_site(),
            (Some(Preset::EightSite), None) => ChainSystem::eight_site([30.0, 45.0, 60.0], 1.0),
            (None, Some(spec)) => ChainSystem::from_spec(spec)?,
        };
        if let Some(t) = self.sw_threshold {
            sys.sw_threshold = t;
        }
        Ok(sys.with_sign(self.sign).with_units(self.units))
    }

    pub fn schedules(&self, system: &ChainSystem) -> Result<BiasSchedules> {
        let default_site = system.bias_sites.first().copied();
        match &self.sequence {
            Some(_) if !self.pulses.is_empty() => bail!("give either `pulses` or `sequence`, not both"),
            Some(seq) => {
                let site = default_site.context("`sequence` needs a chain with a bias site")?;
                Ok(seq.schedule(site)?.map(|s| system.single_bias(s)).unwrap_or_default())
            }
            None => Ok(schedules_from_specs(&self.pulses, default_site)?),
        }
    }

    /// Run interval end: `t_end` if given, else the last breakpoint.
    pub fn end_time(&self, schedules: &BiasSchedules) -> Result<f64> {
        if let Some(t) = self.t_end {
            if !(t > 0.0) || !t.is_finite() {
                bail!("`t_end` must be positive, got {t}");
            }
            return Ok(t);
        }
        schedules
            .values()
            .filter_map(|s| s.support().map(|x| x.1))
            .reduce(f64::max)
            .context("no pulses to take the duration from; set `t_end`")
    }

    pub fn step(&self) -> f64 {
        self.step.unwrap_or(DEFAULT_CHAIN_STEP)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    #[serde(default = "unit")]
    pub omega: f64,
    #[serde(default = "strong")]
    pub g: f64,
    #[serde(default = "strong")]
    pub kappa: f64,
    /// `Δ_A(t) = Δ_B(t) = delta0 - rate · t`.
    #[serde(default = "delta0")]
    pub delta0: f64,
    #[serde(default = "rate")]
    pub rate: f64,
    #[serde(default = "t_end")]
    pub t_end: f64,
    #[serde(default = "schrodinger")]
    pub convention: Convention,
    #[serde(default = "ten")]
    pub initial: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Lowest acceptable swap fidelity for the exit status.
    #[serde(default = "min_fidelity")]
    pub min_fidelity: f64,
}

fn unit() -> f64 {
    1.0
}
fn strong() -> f64 {
    2000.0
}
fn delta0() -> f64 {
    10.0
}
fn rate() -> f64 {
    0.2
}
fn t_end() -> f64 {
    100.0
}
fn schrodinger() -> Convention {
    Convention::Schrodinger
}
fn ten() -> String {
    "10".into()
}
fn min_fidelity() -> f64 {
    0.9
}

impl Default for CavityConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl CavityConfig {
    pub fn params(&self) -> Result<CavityParams> {
        let (a, b) = cavity::cnot_schedule(self.delta0, self.rate)?;
        Ok(CavityParams::new(self.omega, self.g, self.kappa, a, b)?)
    }

    pub fn initial_state(&self) -> Result<CavityState> {
        Ok(CavityState::parse(&self.initial)?)
    }

    pub fn step(&self) -> f64 {
        self.step.unwrap_or(DEFAULT_CAVITY_STEP)
    }
}

/// Reads and parses a JSON config; nothing is written on failure.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("config {}", path.display()))
}

/// SHA-256 of the canonical JSON form of a resolved config.
pub fn hash<T: Serialize>(config: &T) -> String {
    let canonical = serde_json::to_vec(config).expect("configs serialize");
    hex::encode(Sha256::digest(&canonical))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cavity_defaults_are_the_standard_sweep() {
        let c = CavityConfig::default();
        let p = c.params().unwrap();
        assert_eq!((p.g, p.kappa, c.t_end), (2000.0, 2000.0, 100.0));
        assert_eq!(p.delta_a.value(100.0), -10.0);
        assert_eq!(c.initial_state().unwrap(), CavityState::Ten0);
    }

    #[test]
    fn hash_tracks_content() {
        let a: ChainConfig = serde_json::from_str(r#"{"preset": "five_site", "t_end": 5}"#).unwrap();
        let b: ChainConfig = serde_json::from_str(r#"{ "t_end": 5.0, "preset": "five_site" }"#).unwrap();
        let c: ChainConfig = serde_json::from_str(r#"{"preset": "five_site", "t_end": 6}"#).unwrap();
        assert_eq!(hash(&a), hash(&b));
        assert_ne!(hash(&a), hash(&c));
    }

    #[test]
    fn preset_and_chain_are_exclusive() {
        let c: ChainConfig = serde_json::from_str(
            r#"{"preset": "five_site", "chain": {"n_sites": 2, "links": [[1, 2, 1.0]]}}"#,
        )
        .unwrap();
        assert!(c.system().is_err());
    }
}
