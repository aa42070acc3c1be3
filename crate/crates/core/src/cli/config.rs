use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Cli;
use crate::dissipation::DissipationCoeffs;
use crate::fluid::EosSpec;
use crate::shock::{HugoniotOptions, ProfileOptions};
use crate::suites::{ShockSetup, EPS_LIST};

/// Grid of shift coefficients for `causality-scan`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    /// Base state; `velocity` is the 3-velocity.
    pub theta: f64,
    pub psi: f64,
    pub velocity: [f64; 3],
    /// λ, μ and ν each run over `points` values in [lo, hi].
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub directions: Vec<[f64; 3]>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        let s = 1.0 / 3f64.sqrt();
        Self {
            theta: 1.0,
            psi: 0.0,
            velocity: [0.0; 3],
            lo: 0.2,
            hi: 1.0,
            points: 5,
            directions: vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [s, s, s]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub eos: EosSpec,
    pub seed: u64,
    /// Random samples per suite (suites that only need 100 cap at 100).
    pub samples: usize,
    pub coeffs: DissipationCoeffs,
    pub eps_list: Vec<f64>,
    pub alphas: Vec<f64>,
    pub scan: ScanConfig,
    pub shock: ShockSetup,
    pub profile: ProfileOptions,
    pub hugoniot: HugoniotOptions,
    pub out: PathBuf,
    /// Console verbosity only; not part of the hashed configuration.
    #[serde(skip)]
    pub quiet: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            eos: EosSpec::default(),
            seed: 1,
            samples: 1000,
            coeffs: DissipationCoeffs::default(),
            eps_list: EPS_LIST.to_vec(),
            alphas: vec![0.08, 0.04, 0.02],
            scan: ScanConfig::default(),
            shock: ShockSetup::default(),
            profile: ProfileOptions::default(),
            hugoniot: HugoniotOptions::default(),
            out: PathBuf::from("out"),
            quiet: false,
        }
    }
}

impl RunConfig {
    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| format!("config: {e}"))?
        } else {
            toml::from_str(text).map_err(|e| format!("config: {e}"))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| format!("reading {}: {e}", p.display()))?;
                Self::parse(&text)
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.samples == 0 {
            return Err("samples must be positive".into());
        }
        if self.eps_list.len() < 4 || self.eps_list.iter().any(|e| !(*e > 0.0)) {
            return Err("eps_list needs at least 4 positive values".into());
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(*a > 0.0)) {
            return Err("alphas must be a non-empty list of positive amplitudes".into());
        }
        if self.scan.points == 0 || self.scan.directions.is_empty() || !(self.scan.lo <= self.scan.hi) {
            return Err("scan needs points >= 1, lo <= hi and at least one direction".into());
        }
        self.coeffs.validate().map_err(|e| e.to_string())
    }

    pub(crate) fn with_overrides(mut self, cli: &Cli) -> Self {
        if let Some(o) = &cli.out {
            self.out = o.clone();
        }
        if let Some(s) = cli.seed {
            self.seed = s;
        }
        if cli.barotropic {
            self.eos = self.eos.barotropic();
        }
        self.quiet = cli.quiet;
        self
    }
}
