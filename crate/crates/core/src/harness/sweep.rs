// SPDX-License-Identifier: Apache-2.0

//! Monte-Carlo sweeps over the radio-range multiplier.

use std::io::{Read, Write};
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::config::{Algorithm, ComponentPolicy, ExperimentConfig};
use crate::error::{Error, Result};
use crate::geometry::{make_anchors, place_uniform, AnchorLayout, PositionMatrix, Seed};
use crate::hopterrain::{hop_terrain, HopTerrainOptions, LocalizationResult};
use crate::mds::{mds_map, Embedding};
use crate::metrics::{d_inv, optimal_transform_error};
use crate::network::{build_graph, components, DetectionModel, MeasurementGraph, MeasurementMode};

pub const CSV_HEADER: [&str; 16] = [
    "algorithm",
    "n",
    "d",
    "mode",
    "alpha",
    "beta",
    "m_anchors",
    "C",
    "R",
    "seed",
    "connected",
    "localized_fraction",
    "d_inv",
    "transform_error",
    "rmse",
    "runtime_ms",
];

/// One `(α, β, C, trial)` outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub algorithm: Algorithm,
    pub n: usize,
    pub d: usize,
    pub mode: MeasurementMode,
    pub alpha: f64,
    pub beta: f64,
    pub m_anchors: usize,
    pub c: f64,
    pub range: f64,
    /// Derived per-trial key, see [`Seed::key`].
    pub seed: u64,
    pub connected: bool,
    pub localized_fraction: f64,
    pub d_inv: Option<f64>,
    pub transform_error: Option<f64>,
    pub rmse: Option<f64>,
    pub runtime_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub records: Vec<TrialRecord>,
}

/// What one trial produced, kept whole for the `simulate` command.
#[derive(Debug, Clone)]
pub struct TrialOutput {
    pub record: TrialRecord,
    pub positions: PositionMatrix,
    pub anchors: AnchorLayout,
    pub graph: MeasurementGraph,
    /// MDS-MAP estimate and the node ids it covers.
    pub embedding: Option<(Embedding, Vec<usize>)>,
    pub localization: Option<LocalizationResult>,
}

/// Run a single trial of the configured algorithm.
pub fn run_trial(cfg: &ExperimentConfig, alpha: f64, beta: f64, c: f64, trial: u64) -> Result<TrialOutput> {
    let started = Instant::now();
    let seed = Seed::new(cfg.seed, trial);
    let range = cfg.range_for(c);
    let model = DetectionModel::new(range, alpha, beta, cfg.d)?;
    let positions = place_uniform(cfg.n, cfg.d, seed)?;
    let anchors = match cfg.algorithm {
        Algorithm::MdsMap => AnchorLayout::empty(cfg.d),
        Algorithm::HopTerrain => make_anchors(cfg.anchors.resolve(cfg.n), cfg.d, cfg.n, seed)?,
    };
    let graph = build_graph(&positions, &anchors, model, cfg.mode, seed)?;
    let comps = components(&graph);
    let mut record = TrialRecord {
        algorithm: cfg.algorithm,
        n: cfg.n,
        d: cfg.d,
        mode: cfg.mode,
        alpha,
        beta,
        m_anchors: anchors.m(),
        c,
        range,
        seed: seed.key(),
        connected: comps.is_connected(),
        localized_fraction: 0.0,
        d_inv: None,
        transform_error: None,
        rmse: None,
        runtime_ms: None,
    };
    let mut embedding = None;
    let mut localization = None;
    match cfg.algorithm {
        Algorithm::MdsMap => {
            let nodes: Vec<usize> = if record.connected {
                (0..cfg.n).collect()
            } else if cfg.component == ComponentPolicy::Largest {
                comps.largest()
            } else {
                Vec::new()
            };
            if nodes.len() > cfg.d {
                let sub = if nodes.len() == cfg.n { graph.clone() } else { graph.induced(&nodes) };
                if let Ok(est) = mds_map(&sub, cfg.d) {
                    let truth = DMatrix::from_fn(nodes.len(), cfg.d, |r, k| positions.coords()[(nodes[r], k)]);
                    record.localized_fraction = nodes.len() as f64 / cfg.n as f64;
                    record.d_inv = d_inv(&truth, &est.coords).ok();
                    record.transform_error = optimal_transform_error(&truth, &est.coords).ok().map(|f| f.error);
                    embedding = Some((est, nodes));
                }
            }
        }
        Algorithm::HopTerrain => {
            let options = HopTerrainOptions {
                average_hop_distance: cfg.average_hop,
            };
            if let Ok(result) = hop_terrain(&graph, &anchors, options) {
                record.localized_fraction = result.localized_fraction();
                record.rmse = result.rmse(positions.coords());
                localization = Some(result);
            }
        }
    }
    if cfg.timing {
        record.runtime_ms = Some(started.elapsed().as_secs_f64() * 1e3);
    }
    Ok(TrialOutput {
        record,
        positions,
        anchors,
        graph,
        embedding,
        localization,
    })
}

/// Every `(α, β)` combination × `C` × trial, in that nesting order.
///
/// Trials run in parallel; each draws only from its own seed streams and the
/// same trial index is reused across the `C` grid.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let units: Vec<(f64, f64, f64, u64)> = cfg
        .detection
        .iter()
        .flat_map(|&(a, b)| {
            cfg.c_grid
                .iter()
                .flat_map(move |&c| (0..cfg.trials as u64).map(move |t| (a, b, c, t)))
        })
        .collect();
    let records = units
        .into_par_iter()
        .map(|(a, b, c, t)| run_trial(cfg, a, b, c, t).map(|o| o.record))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { records })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.records {
            w.write_record([
                r.algorithm.token().to_string(),
                r.n.to_string(),
                r.d.to_string(),
                r.mode.token().to_string(),
                r.alpha.to_string(),
                r.beta.to_string(),
                r.m_anchors.to_string(),
                r.c.to_string(),
                r.range.to_string(),
                r.seed.to_string(),
                r.connected.to_string(),
                r.localized_fraction.to_string(),
                opt(r.d_inv),
                opt(r.transform_error),
                opt(r.rmse),
                opt(r.runtime_ms),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
        if header != CSV_HEADER {
            return Err(Error::Parse {
                line: 1,
                message: "unexpected sweep header".into(),
            });
        }
        let mut records = Vec::new();
        for (k, row) in rdr.records().enumerate() {
            let row = row?;
            let line = k + 2;
            let err = |field: &str| Error::Parse {
                line,
                message: format!("bad {field}"),
            };
            let f = |i: usize| -> Result<f64> { row[i].parse().map_err(|_| err(CSV_HEADER[i])) };
            let u = |i: usize| -> Result<usize> { row[i].parse().map_err(|_| err(CSV_HEADER[i])) };
            let o = |i: usize| -> Result<Option<f64>> {
                if row[i].is_empty() {
                    Ok(None)
                } else {
                    f(i).map(Some)
                }
            };
            records.push(TrialRecord {
                algorithm: Algorithm::parse(&row[0])?,
                n: u(1)?,
                d: u(2)?,
                mode: MeasurementMode::parse(&row[3])?,
                alpha: f(4)?,
                beta: f(5)?,
                m_anchors: u(6)?,
                c: f(7)?,
                range: f(8)?,
                seed: row[9].parse().map_err(|_| err("seed"))?,
                connected: row[10].parse().map_err(|_| err("connected"))?,
                localized_fraction: f(11)?,
                d_inv: o(12)?,
                transform_error: o(13)?,
                rmse: o(14)?,
                runtime_ms: o(15)?,
            });
        }
        Ok(SweepResult { records })
    }

    /// Seed-averaged curves of one metric, one per `(α, β)`, in first-seen order.
    pub fn summarize(&self, metric: Metric) -> Vec<CurveSummary> {
        let mut curves: Vec<CurveSummary> = Vec::new();
        for r in &self.records {
            let idx = match curves.iter().position(|s| s.alpha == r.alpha && s.beta == r.beta) {
                Some(i) => i,
                None => {
                    curves.push(CurveSummary {
                        alpha: r.alpha,
                        beta: r.beta,
                        points: Vec::new(),
                    });
                    curves.len() - 1
                }
            };
            let points = &mut curves[idx].points;
            let p = match points.iter().position(|p| p.c == r.c) {
                Some(i) => i,
                None => {
                    points.push(PointSummary::empty(r.c));
                    points.len() - 1
                }
            };
            points[p].attempted += 1;
            if let Some(v) = metric.of(r) {
                points[p].values.push(v);
            }
        }
        curves
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    DInv,
    TransformError,
    Rmse,
    LocalizedFraction,
    Connected,
}

impl Metric {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "d_inv" => Metric::DInv,
            "transform_error" => Metric::TransformError,
            "rmse" => Metric::Rmse,
            "localized_fraction" => Metric::LocalizedFraction,
            "connected" => Metric::Connected,
            _ => return Err(Error::InvalidParameter(format!("unknown metric {s:?}"))),
        })
    }

    pub fn of(self, r: &TrialRecord) -> Option<f64> {
        match self {
            Metric::DInv => r.d_inv,
            Metric::TransformError => r.transform_error,
            Metric::Rmse => r.rmse,
            Metric::LocalizedFraction => Some(r.localized_fraction),
            Metric::Connected => Some(if r.connected { 1.0 } else { 0.0 }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub c: f64,
    pub attempted: usize,
    pub values: Vec<f64>,
}

impl PointSummary {
    fn empty(c: f64) -> Self {
        PointSummary {
            c,
            attempted: 0,
            values: Vec::new(),
        }
    }

    pub fn mean(&self) -> Option<f64> {
        (!self.values.is_empty()).then(|| self.values.iter().sum::<f64>() / self.values.len() as f64)
    }

    /// Standard error of the mean; zero for a single value.
    pub fn std_err(&self) -> Option<f64> {
        let mean = self.mean()?;
        let k = self.values.len() as f64;
        if self.values.len() < 2 {
            return Some(0.0);
        }
        let var = self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
        Some((var / k).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSummary {
    pub alpha: f64,
    pub beta: f64,
    pub points: Vec<PointSummary>,
}

impl CurveSummary {
    pub fn label(&self) -> String {
        format!("α={}, β={}", self.alpha, self.beta)
    }

    pub fn at(&self, c: f64) -> Option<&PointSummary> {
        self.points.iter().find(|p| p.c == c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig::parse("n = 60\nc_grid = 2\ntrials = 1\nseed = 5").unwrap()
    }

    #[test]
    fn single_record() {
        let r = run_sweep(&small()).unwrap();
        assert_eq!(r.records.len(), 1);
    }

    #[test]
    fn csv_round_trip() {
        let mut cfg = small();
        cfg.c_grid = vec![0.5, 2.0];
        cfg.trials = 2;
        let r = run_sweep(&cfg).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let back = SweepResult::read_csv(&buf[..]).unwrap();
        assert_eq!(back, r);
        // the sparse C leaves disconnected trials in the output
        assert!(back.records.iter().any(|r| !r.connected && r.d_inv.is_none()));
    }

    #[test]
    fn summary_groups_by_curve() {
        let mut cfg = small();
        cfg.detection = vec![(1.0, 0.0), (0.5, 1.0)];
        cfg.trials = 3;
        let s = run_sweep(&cfg).unwrap().summarize(Metric::Connected);
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].label(), "α=0.5, β=1");
        assert_eq!(s[0].points[0].attempted, 3);
    }
}
