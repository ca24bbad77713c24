// SPDX-License-Identifier: Apache-2.0

//! Verification suites: each check is evaluated per trial and written as one CSV row.

use std::io::Write;

use rayon::prelude::*;

use super::config::{ExperimentConfig, Suite};
use crate::error::Result;
use crate::geometry::{node_coordinates, place_uniform, AnchorLayout, Seed};
use crate::mds::mds_embed;
use crate::metrics::{
    bounds, concentration, deterministic_anchor_check, lambda_min, norm_chain, random_anchor_gram,
    verify_hop_lemma, verify_sigma_min,
};
use crate::network::{build_graph, DetectionModel};
use crate::paths::{shortest_paths, squared_matrix};

pub const CSV_HEADER: [&str; 10] = [
    "check_name", "n", "d", "alpha", "beta", "R", "seed", "pass", "value", "bound",
];

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRow {
    pub check: String,
    pub n: usize,
    pub d: usize,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub range: Option<f64>,
    pub seed: Option<u64>,
    pub pass: bool,
    pub value: f64,
    pub bound: f64,
}

/// Radio range for the hop-count check: `max(7 R̃, R(C_max))`, nudged above `7 R̃`.
pub fn hop_lemma_range(cfg: &ExperimentConfig, alpha: f64) -> Result<f64> {
    let b = bounds(cfg.n, cfg.d, alpha)?;
    let sweep_max = cfg.range_for(*cfg.c_grid.last().expect("validated"));
    Ok((7.0 * b.r_tilde * (1.0 + 1e-9)).max(sweep_max))
}

fn hop_lemma_rows(cfg: &ExperimentConfig) -> Result<Vec<VerifyRow>> {
    let mut rows = Vec::new();
    for &(alpha, beta) in &cfg.detection {
        let range = hop_lemma_range(cfg, alpha)?;
        let model = DetectionModel::new(range, alpha, beta, cfg.d)?;
        let trial_rows = (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| {
                let seed = Seed::new(cfg.seed, t);
                let x = place_uniform(cfg.n, cfg.d, seed)?;
                let empty = AnchorLayout::empty(cfg.d);
                let g = build_graph(&x, &empty, model, cfg.mode, seed)?;
                let report = verify_hop_lemma(&g, &node_coordinates(&x, &empty)?, alpha)?;
                Ok(VerifyRow {
                    check: "hop_lemma".into(),
                    n: cfg.n,
                    d: cfg.d,
                    alpha: Some(alpha),
                    beta: Some(beta),
                    range: Some(range),
                    seed: Some(seed.key()),
                    pass: report.violations == 0 && report.unreachable == 0,
                    value: report.worst_ratio,
                    bound: 1.0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(trial_rows);
    }
    Ok(rows)
}

fn sigma_min_rows(cfg: &ExperimentConfig) -> Result<Vec<VerifyRow>> {
    let bound = (cfg.n as f64 / 6.0).sqrt();
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let seed = Seed::new(cfg.seed, t);
            let value = verify_sigma_min(place_uniform(cfg.n, cfg.d, seed)?.coords())?;
            Ok(VerifyRow {
                check: "sigma_min".into(),
                n: cfg.n,
                d: cfg.d,
                alpha: None,
                beta: None,
                range: None,
                seed: Some(seed.key()),
                pass: value >= bound,
                value,
                bound,
            })
        })
        .collect()
}

fn deterministic_anchor_rows() -> Result<Vec<VerifyRow>> {
    [2, 3]
        .into_iter()
        .map(|d| {
            let c = deterministic_anchor_check(d)?;
            Ok(VerifyRow {
                check: "deterministic_anchor_gain".into(),
                n: d + 1,
                d,
                alpha: None,
                beta: None,
                range: None,
                seed: None,
                pass: c.pass(),
                value: c.value,
                bound: c.bound,
            })
        })
        .collect()
}

fn random_anchor_rows(cfg: &ExperimentConfig) -> Result<Vec<VerifyRow>> {
    let m = cfg.anchor_m;
    let bound = (m as f64 - 1.0) / 3.0;
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let seed = Seed::new(cfg.seed, t);
            let value = lambda_min(&random_anchor_gram(m, cfg.d, seed)?)?;
            Ok(VerifyRow {
                check: "random_anchor_lambda_min".into(),
                n: m,
                d: cfg.d,
                alpha: None,
                beta: None,
                range: None,
                seed: Some(seed.key()),
                pass: value >= bound,
                value,
                bound,
            })
        })
        .collect()
}

/// Exponent `ε` used by the concentration suite.
pub const CONCENTRATION_EPS: f64 = 0.25;

fn concentration_rows(cfg: &ExperimentConfig) -> Result<Vec<VerifyRow>> {
    let mut rows = Vec::new();
    for m in [100usize, 400] {
        for t in 0..cfg.trials as u64 {
            let seed = Seed::new(cfg.seed, t);
            let c = concentration(&random_anchor_gram(m, cfg.d, seed)?, m, CONCENTRATION_EPS);
            let base = VerifyRow {
                check: String::new(),
                n: m,
                d: cfg.d,
                alpha: None,
                beta: None,
                range: None,
                seed: Some(seed.key()),
                pass: false,
                value: 0.0,
                bound: 0.0,
            };
            rows.push(VerifyRow {
                check: "concentration_diagonal".into(),
                pass: c.diagonal_ok(),
                value: c.diagonal_deviation,
                bound: c.diagonal_bound,
                ..base.clone()
            });
            rows.push(VerifyRow {
                check: "concentration_off_diagonal".into(),
                pass: c.off_diagonal_ok(),
                value: c.off_diagonal,
                bound: c.off_diagonal_bound,
                ..base
            });
        }
    }
    Ok(rows)
}

fn norm_chain_rows(cfg: &ExperimentConfig) -> Result<Vec<VerifyRow>> {
    let mut rows = Vec::new();
    for &(alpha, beta) in &cfg.detection {
        let c = *cfg.c_grid.last().expect("validated");
        let range = cfg.range_for(c);
        let model = DetectionModel::new(range, alpha, beta, cfg.d)?;
        for t in 0..cfg.trials as u64 {
            let seed = Seed::new(cfg.seed, t);
            let x = place_uniform(cfg.n, cfg.d, seed)?;
            let g = build_graph(&x, &AnchorLayout::empty(cfg.d), model, cfg.mode, seed)?;
            let Ok(dsq) = squared_matrix(&shortest_paths(&g)) else {
                continue;
            };
            let est = mds_embed(&dsq, cfg.d)?;
            let chain = norm_chain(x.coords(), &est.coords, &dsq)?;
            rows.push(VerifyRow {
                check: "norm_chain".into(),
                n: cfg.n,
                d: cfg.d,
                alpha: Some(alpha),
                beta: Some(beta),
                range: Some(range),
                seed: Some(seed.key()),
                pass: chain.holds(),
                value: chain.lhs,
                bound: chain.rhs,
            });
        }
    }
    Ok(rows)
}

/// Run the configured suites in a fixed order.
pub fn run_verify(cfg: &ExperimentConfig) -> Result<Vec<VerifyRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for suite in &cfg.suites {
        rows.extend(match suite {
            Suite::HopLemma => hop_lemma_rows(cfg)?,
            Suite::SigmaMin => sigma_min_rows(cfg)?,
            Suite::DeterministicAnchor => deterministic_anchor_rows()?,
            Suite::RandomAnchor => random_anchor_rows(cfg)?,
            Suite::Concentration => concentration_rows(cfg)?,
            Suite::NormChain => norm_chain_rows(cfg)?,
        });
    }
    Ok(rows)
}

pub fn write_verify_csv<W: Write>(rows: &[VerifyRow], out: W) -> Result<()> {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.check.clone(),
            r.n.to_string(),
            r.d.to_string(),
            opt(r.alpha),
            opt(r.beta),
            opt(r.range),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
            r.pass.to_string(),
            r.value.to_string(),
            r.bound.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `(check, passed, total)` in first-seen order.
pub fn pass_counts(rows: &[VerifyRow]) -> Vec<(String, usize, usize)> {
    let mut out: Vec<(String, usize, usize)> = Vec::new();
    for r in rows {
        let i = match out.iter().position(|(c, _, _)| *c == r.check) {
            Some(i) => i,
            None => {
                out.push((r.check.clone(), 0, 0));
                out.len() - 1
            }
        };
        out[i].1 += r.pass as usize;
        out[i].2 += 1;
    }
    out
}
