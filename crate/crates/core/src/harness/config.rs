// SPDX-License-Identifier: Apache-2.0

//! Experiment configuration in a flat `key = value` format.
//!
//! ```text
//! algorithm = mds-map
//! n = 1000
//! alpha = 0.25, 0.5, 1
//! beta = 0, 1
//! c_grid = 1, 1.5, 2, 3, 4
//! trials = 30
//! ```
//!
//! List-valued keys take comma-separated values. `alpha` and `beta` expand
//! to their cartesian product unless `pairs = a:b, ...` names the
//! combinations explicitly.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::geometry::{check_dimension, AnchorMode};
use crate::network::{DetectionModel, MeasurementMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    MdsMap,
    HopTerrain,
}

impl Algorithm {
    pub fn token(self) -> &'static str {
        match self {
            Algorithm::MdsMap => "mds-map",
            Algorithm::HopTerrain => "hop-terrain",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mds-map" | "mds" => Ok(Algorithm::MdsMap),
            "hop-terrain" | "hopterrain" => Ok(Algorithm::HopTerrain),
            _ => Err(Error::InvalidParameter(format!("unknown algorithm {s:?}"))),
        }
    }
}

/// `none`, `simplex`, `random:<m>` or `random-log2` (`m = ⌈(ln n)²⌉`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorSpec {
    None,
    Simplex,
    Random(usize),
    RandomLogSquared,
}

impl AnchorSpec {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(AnchorSpec::None),
            "simplex" => Ok(AnchorSpec::Simplex),
            "random-log2" => Ok(AnchorSpec::RandomLogSquared),
            _ => match s.strip_prefix("random:") {
                Some(m) => m
                    .trim()
                    .parse()
                    .map(AnchorSpec::Random)
                    .map_err(|_| Error::InvalidParameter(format!("bad anchor count in {s:?}"))),
                None => Err(Error::InvalidParameter(format!("unknown anchor spec {s:?}"))),
            },
        }
    }

    pub fn resolve(self, n: usize) -> AnchorMode {
        match self {
            AnchorSpec::None => AnchorMode::Absent,
            AnchorSpec::Simplex => AnchorMode::UnitSimplex,
            AnchorSpec::Random(m) => AnchorMode::RandomSubset(m),
            AnchorSpec::RandomLogSquared => {
                AnchorMode::RandomSubset((n as f64).ln().powi(2).ceil() as usize)
            }
        }
    }
}

/// What MDS-MAP does with a disconnected graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentPolicy {
    /// Record the trial as failed.
    RequireConnected,
    /// Embed the largest component and score it against its own true positions.
    Largest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    HopLemma,
    SigmaMin,
    DeterministicAnchor,
    RandomAnchor,
    Concentration,
    NormChain,
}

impl Suite {
    pub const DEFAULT: [Suite; 5] = [
        Suite::HopLemma,
        Suite::SigmaMin,
        Suite::DeterministicAnchor,
        Suite::RandomAnchor,
        Suite::Concentration,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "hop_lemma" => Suite::HopLemma,
            "sigma_min" => Suite::SigmaMin,
            "deterministic_anchor" => Suite::DeterministicAnchor,
            "random_anchor" => Suite::RandomAnchor,
            "concentration" => Suite::Concentration,
            "norm_chain" => Suite::NormChain,
            _ => return Err(Error::InvalidParameter(format!("unknown suite {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub n: usize,
    pub d: usize,
    pub mode: MeasurementMode,
    /// `(α, β)` combinations, in sweep order.
    pub detection: Vec<(f64, f64)>,
    pub anchors: AnchorSpec,
    /// Strictly increasing multipliers `C` in `R = C (ln n / n)^{1/d}`.
    pub c_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub average_hop: bool,
    pub component: ComponentPolicy,
    /// Fill the `runtime_ms` column; off by default so outputs are byte-reproducible.
    pub timing: bool,
    pub suites: Vec<Suite>,
    /// Anchor count for the random-anchor verification suite.
    pub anchor_m: usize,
    pub output: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub log: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            algorithm: Algorithm::MdsMap,
            n: 1000,
            d: 2,
            mode: MeasurementMode::ConnectivityBased,
            detection: vec![(1.0, 0.0)],
            anchors: AnchorSpec::None,
            c_grid: vec![1.0, 2.0, 3.0, 4.0],
            trials: 10,
            seed: 1,
            average_hop: false,
            component: ComponentPolicy::RequireConnected,
            timing: false,
            suites: Suite::DEFAULT.to_vec(),
            anchor_m: 400,
            output: None,
            svg: None,
            log: None,
        }
    }
}

fn parse_list<T>(value: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect()
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("{key}: cannot parse {value:?}")))
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::InvalidParameter(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

/// Incremental builder keeping `alpha`/`beta` lists apart until validation.
#[derive(Debug, Clone, Default)]
pub struct ConfigBuilder {
    cfg: ExperimentConfig,
    alphas: Option<Vec<f64>>,
    betas: Option<Vec<f64>>,
    pairs: Option<Vec<(f64, f64)>>,
}

impl ConfigBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Apply every `key = value` line; `#` starts a comment.
    pub fn parse_text(mut self, text: &str) -> Result<Self> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: "expected `key = value`".into(),
            })?;
            self = self.set(key.trim(), value.trim()).map_err(|e| Error::Parse {
                line: idx + 1,
                message: e.to_string(),
            })?;
        }
        Ok(self)
    }

    pub fn set(mut self, key: &str, value: &str) -> Result<Self> {
        let c = &mut self.cfg;
        match key {
            "algorithm" => c.algorithm = Algorithm::parse(value)?,
            "n" => c.n = number(key, value)?,
            "d" => c.d = number(key, value)?,
            "mode" => c.mode = MeasurementMode::parse(value)?,
            "alpha" => self.alphas = Some(parse_list(value, |s| number(key, s))?),
            "beta" => self.betas = Some(parse_list(value, |s| number(key, s))?),
            "pairs" => {
                self.pairs = Some(parse_list(value, |s| {
                    let (a, b) = s.split_once(':').ok_or_else(|| {
                        Error::InvalidParameter(format!("pairs: expected alpha:beta, got {s:?}"))
                    })?;
                    Ok((number(key, a.trim())?, number(key, b.trim())?))
                })?)
            }
            "anchors" => c.anchors = AnchorSpec::parse(value)?,
            "c_grid" => c.c_grid = parse_list(value, |s| number(key, s))?,
            "trials" => c.trials = number(key, value)?,
            "seed" => c.seed = number(key, value)?,
            "average_hop" => c.average_hop = boolean(key, value)?,
            "component" => {
                c.component = match value {
                    "connected" => ComponentPolicy::RequireConnected,
                    "largest" => ComponentPolicy::Largest,
                    _ => return Err(Error::InvalidParameter(format!("component: {value:?}"))),
                }
            }
            "timing" => c.timing = boolean(key, value)?,
            "suites" => c.suites = parse_list(value, Suite::parse)?,
            "anchor_m" => c.anchor_m = number(key, value)?,
            "output" => c.output = Some(PathBuf::from(value)),
            "svg" => c.svg = Some(PathBuf::from(value)),
            "log" => c.log = Some(PathBuf::from(value)),
            _ => return Err(Error::InvalidParameter(format!("unknown key {key:?}"))),
        }
        Ok(self)
    }

    pub fn build(mut self) -> Result<ExperimentConfig> {
        if let Some(pairs) = self.pairs {
            self.cfg.detection = pairs;
        } else if self.alphas.is_some() || self.betas.is_some() {
            let alphas = self.alphas.unwrap_or_else(|| vec![1.0]);
            let betas = self.betas.unwrap_or_else(|| vec![0.0]);
            self.cfg.detection = alphas
                .iter()
                .flat_map(|&a| betas.iter().map(move |&b| (a, b)))
                .collect();
        }
        self.cfg.validate()?;
        Ok(self.cfg)
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        ConfigBuilder::new().parse_text(text)?.build()
    }

    pub fn validate(&self) -> Result<()> {
        check_dimension(self.d)?;
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n < 3 {
            return bad(format!("n = {} is too small", self.n));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.detection.is_empty() {
            return bad("no (alpha, beta) combination".into());
        }
        for &(a, b) in &self.detection {
            DetectionModel::new(1.0, a, b, self.d)?;
        }
        if self.c_grid.is_empty() {
            return bad("c_grid is empty".into());
        }
        if self.c_grid.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return bad("c_grid entries must be positive".into());
        }
        if self.c_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("c_grid must be strictly increasing".into());
        }
        if self.algorithm == Algorithm::HopTerrain && self.anchors == AnchorSpec::None {
            return bad("hop-terrain needs anchors".into());
        }
        Ok(())
    }

    /// `R = C (ln n / n)^{1/d}`.
    pub fn range_for(&self, c: f64) -> f64 {
        let n = self.n as f64;
        c * (n.ln() / n).powf(1.0 / self.d as f64)
    }
}
