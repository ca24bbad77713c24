// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with
//! a nonzero status if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use sensorloc::geometry::{make_anchors, place_uniform, AnchorLayout, AnchorMode, Seed};
use sensorloc::harness::{run_sweep, ComponentPolicy, ExperimentConfig, Metric};
use sensorloc::hopterrain::dv_hop_flood;
use sensorloc::mds::eigen::symmetric_eigen;
use sensorloc::mds::mds_embed;
use sensorloc::metrics::{
    bounds, d_inv, deterministic_anchor_check, gershgorin_eigen_bounds, lambda_min, lateration_gain,
    norm_chain, random_anchor_gram, verify_hop_lemma, verify_sigma_min,
};
use sensorloc::network::{build_graph, DetectionModel, MeasurementMode};
use sensorloc::paths::{anchor_hops, shortest_paths, squared_matrix};

const MASTER: u64 = 20_240_601;

// criterion 1
const EXACT_RECOVERY_TOL: f64 = 1e-9;
const EXACT_RECOVERY_BUDGET: Duration = Duration::from_secs(1);
// criterion 2
const HOP_TERRAIN_RMSE: (f64, f64) = (0.045, 0.105);
const HOP_TERRAIN_SEEDS: usize = 100;
const HOP_TERRAIN_BUDGET: Duration = Duration::from_secs(10);
// criterion 3
const HOP_LEMMA_SEEDS: usize = 100;
const HOP_LEMMA_REQUIRED: usize = 99;
const HOP_LEMMA_BUDGET: Duration = Duration::from_secs(120);
// criterion 4
const ENVELOPE_SEEDS: usize = 100;
const ENVELOPE_REQUIRED: usize = 99;
const ENVELOPE_C: f64 = 4.0;
// criterion 6
const RANDOM_ANCHOR_TRIALS: usize = 100;
const RANDOM_ANCHOR_REQUIRED: usize = 95;
const RANDOM_ANCHOR_M: usize = 400;
// criterion 7
const TREND_SEEDS: usize = 30;
const TREND_GRID: [f64; 4] = [1.0, 2.0, 3.0, 4.0];
const TREND_ALPHAS: [f64; 3] = [0.25, 0.5, 1.0];
const TREND_BETAS: [f64; 3] = [0.0, 1.0, 2.0];
const TREND_SE_MULTIPLE: f64 = 2.0;
// criterion 8
const FLOOD_INSTANCES: usize = 100;
// criterion 9
const EIGEN_MATRICES: usize = 200;
const EIGEN_VALUE_TOL: f64 = 1e-7;
const EIGEN_ORTHO_TOL: f64 = 1e-10;
// criterion 10
const SIGMA_SEEDS: usize = 100;
const SIGMA_REQUIRED: usize = 95;
const SIGMA_N: usize = 10_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn squared_distances(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    DMatrix::from_fn(n, n, |i, j| (x.row(i) - x.row(j)).norm_squared())
}

fn exact_recovery() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for d in [2, 3] {
        for t in 0..5 {
            let x = place_uniform(50, d, Seed::new(MASTER, t)).unwrap();
            let est = mds_embed(&squared_distances(x.coords()), d).unwrap();
            worst = worst.max(d_inv(x.coords(), &est.coords).unwrap());
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: worst <= EXACT_RECOVERY_TOL && elapsed < EXACT_RECOVERY_BUDGET,
        detail: format!(
            "max d_inv {worst:.2e} over n=50, d in {{2,3}}, 5 seeds each (tol {EXACT_RECOVERY_TOL:e}); {elapsed:.2?}"
        ),
    }
}

fn hop_terrain_anchor_value() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig::parse(&format!(
        "algorithm = hop-terrain\nn = 200\nd = 2\nmode = range\nanchors = simplex\n\
         c_grid = {}\ntrials = {HOP_TERRAIN_SEEDS}\nseed = {MASTER}",
        0.8f64.sqrt()
    ))
    .unwrap();
    let result = run_sweep(&cfg).unwrap();
    let curve = &result.summarize(Metric::Rmse)[0];
    let point = &curve.points[0];
    let mean = point.mean().unwrap_or(f64::NAN);
    let elapsed = start.elapsed();
    Outcome {
        pass: (HOP_TERRAIN_RMSE.0..=HOP_TERRAIN_RMSE.1).contains(&mean) && elapsed < HOP_TERRAIN_BUDGET,
        detail: format!(
            "mean RMSE {mean:.4} over {} of {} seeds with localized nodes (accept {:?}); {elapsed:.2?}",
            point.values.len(),
            point.attempted,
            HOP_TERRAIN_RMSE
        ),
    }
}

fn hop_lemma() -> Outcome {
    let start = Instant::now();
    let (n, d) = (2000, 2);
    let b = bounds(n, d, 1.0).unwrap();
    let range = 7.0 * b.r_tilde * (1.0 + 1e-9);
    let model = DetectionModel::disc(range, d).unwrap();
    let clean: Vec<bool> = (0..HOP_LEMMA_SEEDS as u64)
        .into_par_iter()
        .map(|t| {
            let seed = Seed::new(MASTER, t);
            let x = place_uniform(n, d, seed).unwrap();
            let g = build_graph(&x, &AnchorLayout::empty(d), model, MeasurementMode::ConnectivityBased, seed).unwrap();
            let r = verify_hop_lemma(&g, x.coords(), 1.0).unwrap();
            r.violations == 0 && r.unreachable == 0
        })
        .collect();
    let ok = clean.iter().filter(|&&c| c).count();
    let elapsed = start.elapsed();

    // informational: radii that fit inside the square
    let mut info = Vec::new();
    for r in [0.25, 0.5, 1.0] {
        let model = DetectionModel::disc(r, d).unwrap();
        let seed = Seed::new(MASTER, 0);
        let x = place_uniform(n, d, seed).unwrap();
        let g = build_graph(&x, &AnchorLayout::empty(d), model, MeasurementMode::ConnectivityBased, seed).unwrap();
        let rep = verify_hop_lemma(&g, x.coords(), 1.0).unwrap();
        info.push(format!("R={r}: {} violations", rep.violations));
    }
    Outcome {
        pass: ok >= HOP_LEMMA_REQUIRED && elapsed < HOP_LEMMA_BUDGET,
        detail: format!(
            "{ok}/{HOP_LEMMA_SEEDS} seeds without violations at R = 7R̃ = {range:.4} (need {HOP_LEMMA_REQUIRED}); {elapsed:.2?}; seed 0 at {}",
            info.join(", ")
        ),
    }
}

fn error_envelope() -> Outcome {
    let (n, d) = (1000, 2);
    let b = bounds(n, d, 1.0).unwrap();
    let range = ENVELOPE_C * ((n as f64).ln() / n as f64).sqrt();
    let envelope = b.mds_envelope(range);
    let model = DetectionModel::disc(range, d).unwrap();
    let runs: Vec<Option<(f64, bool, f64)>> = (0..ENVELOPE_SEEDS as u64)
        .into_par_iter()
        .map(|t| {
            let seed = Seed::new(MASTER, t);
            let x = place_uniform(n, d, seed).unwrap();
            let g = build_graph(&x, &AnchorLayout::empty(d), model, MeasurementMode::ConnectivityBased, seed).unwrap();
            let dsq = squared_matrix(&shortest_paths(&g)).ok()?;
            let est = mds_embed(&dsq, d).unwrap();
            let chain = norm_chain(x.coords(), &est.coords, &dsq).unwrap();
            Some((chain.lhs / n as f64, chain.holds(), chain.lhs / chain.rhs))
        })
        .collect();
    let completed: Vec<_> = runs.iter().flatten().collect();
    let within = completed.iter().filter(|r| r.0 <= envelope).count();
    let chain_ok = completed.iter().all(|r| r.1);
    let worst = completed.iter().map(|r| r.0).fold(0.0, f64::max);
    let worst_ratio = completed.iter().map(|r| r.2).fold(0.0, f64::max);
    Outcome {
        pass: within >= ENVELOPE_REQUIRED && chain_ok && completed.len() == ENVELOPE_SEEDS,
        detail: format!(
            "C={ENVELOPE_C} (R={range:.4}): {within}/{} connected seeds within envelope {envelope:.2} (max d_inv {worst:.4}); \
             norm chain holds on every run: {chain_ok} (max lhs/rhs {worst_ratio:.3})",
            completed.len()
        ),
    }
}

fn deterministic_anchor() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for d in [2, 3] {
        let c = deterministic_anchor_check(d).unwrap();
        // the same anchors listed e₁, …, e_d, 0
        let reordered = DMatrix::from_fn(d + 1, d, |i, j| if i == j { 1.0 } else { 0.0 });
        let other = lateration_gain(&reordered).unwrap();
        pass &= c.pass() && other <= c.bound;
        parts.push(format!(
            "d={d}: {:.6} <= {} (gap {:.6}; reversed order {:.6})",
            c.value,
            c.bound,
            c.gap(),
            other
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn random_anchor() -> Outcome {
    let bound = (RANDOM_ANCHOR_M as f64 - 1.0) / 3.0;
    let mut pass = true;
    let mut parts = Vec::new();
    for d in [2, 3] {
        let values: Vec<f64> = (0..RANDOM_ANCHOR_TRIALS as u64)
            .map(|t| lambda_min(&random_anchor_gram(RANDOM_ANCHOR_M, d, Seed::new(MASTER, t)).unwrap()).unwrap())
            .collect();
        let ok = values.iter().filter(|&&v| v >= bound).count();
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        pass &= ok >= RANDOM_ANCHOR_REQUIRED;
        parts.push(format!("d={d}: {ok}/{RANDOM_ANCHOR_TRIALS} (min λ {min:.1})"));
    }
    Outcome {
        pass,
        detail: format!(
            "λ_min(AᵀA) >= {bound:.1} at m={RANDOM_ANCHOR_M}, need {RANDOM_ANCHOR_REQUIRED}: {}",
            parts.join(", ")
        ),
    }
}

fn sweep_trend() -> Outcome {
    let d = 2;
    let betas: Vec<f64> = TREND_BETAS.iter().copied().filter(|&b| b < d as f64).collect();
    let mut cfg = ExperimentConfig::parse(&format!(
        "algorithm = mds-map\nn = 1000\nd = {d}\nmode = connectivity\ntrials = {TREND_SEEDS}\nseed = {MASTER}\n\
         component = largest\nc_grid = {}",
        TREND_GRID.map(|c| c.to_string()).join(",")
    ))
    .unwrap();
    cfg.component = ComponentPolicy::Largest;
    cfg.detection = TREND_ALPHAS
        .iter()
        .flat_map(|&a| betas.iter().map(move |&b| (a, b)))
        .collect();
    let result = run_sweep(&cfg).unwrap();
    let curves = result.summarize(Metric::DInv);
    let curve = |a: f64, b: f64| curves.iter().find(|c| c.alpha == a && c.beta == b).unwrap();
    let (c_lo, c_hi) = (TREND_GRID[0], *TREND_GRID.last().unwrap());

    let mut failures = Vec::new();
    let mut table = Vec::new();
    for cv in &curves {
        let means: Vec<String> = cv
            .points
            .iter()
            .map(|p| format!("{:.4}", p.mean().unwrap_or(f64::NAN)))
            .collect();
        table.push(format!("{}: [{}]", cv.label(), means.join(" ")));
        let (lo, hi) = (cv.at(c_lo).unwrap().mean(), cv.at(c_hi).unwrap().mean());
        if !matches!((lo, hi), (Some(l), Some(h)) if h < l) {
            failures.push(format!("{} not lower at C={c_hi} than C={c_lo}", cv.label()));
        }
    }
    for &b in &betas {
        for &c in &TREND_GRID {
            let means: Vec<f64> = TREND_ALPHAS
                .iter()
                .map(|&a| curve(a, b).at(c).unwrap().mean().unwrap_or(f64::NAN))
                .collect();
            if !means.windows(2).all(|w| w[1] < w[0]) {
                failures.push(format!("β={b}, C={c}: not decreasing in α {means:.4?}"));
            }
        }
    }
    for &a in &TREND_ALPHAS {
        for &c in &TREND_GRID {
            for (i, &b1) in betas.iter().enumerate() {
                for &b2 in &betas[i + 1..] {
                    let (p, q) = (curve(a, b1).at(c).unwrap(), curve(a, b2).at(c).unwrap());
                    let (Some(mp), Some(mq)) = (p.mean(), q.mean()) else {
                        failures.push(format!("α={a}, C={c}: no estimate"));
                        continue;
                    };
                    let se = (p.std_err().unwrap().powi(2) + q.std_err().unwrap().powi(2)).sqrt();
                    if (mp - mq).abs() > TREND_SE_MULTIPLE * se {
                        failures.push(format!(
                            "α={a}, C={c}: β={b1} vs β={b2} differ by {:.4} > {TREND_SE_MULTIPLE}·SE {se:.4}",
                            (mp - mq).abs()
                        ));
                    }
                }
            }
        }
    }
    let connected = result.summarize(Metric::Connected);
    let disconnected: usize = connected
        .iter()
        .flat_map(|c| &c.points)
        .map(|p| p.values.iter().filter(|&&v| v == 0.0).count())
        .sum();
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "C grid {TREND_GRID:?}, {TREND_SEEDS} seeds, {disconnected} disconnected trials scored on their largest component; \
             curves {}; {}",
            table.join("; "),
            if failures.is_empty() {
                "all orderings hold".to_string()
            } else {
                format!("{} failed checks: {}", failures.len(), failures.join("; "))
            }
        ),
    }
}

fn flood_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER);
    let mut mismatches = 0;
    let mut compared = 0usize;
    for k in 0..FLOOD_INSTANCES {
        let n = rng.gen_range(10..=200);
        let d = rng.gen_range(2..=3);
        let m = rng.gen_range(d + 1..=10);
        let alpha = rng.gen_range(0.3..=1.0);
        let beta = rng.gen_range(0.0..d as f64 - 0.5);
        let range = rng.gen_range(0.15..0.6);
        let mode = if k % 2 == 0 {
            MeasurementMode::ConnectivityBased
        } else {
            MeasurementMode::RangeBased
        };
        let seed = Seed::new(MASTER, k as u64);
        let x = place_uniform(n, d, seed).unwrap();
        let anchors = make_anchors(AnchorMode::RandomSubset(m), d, n, seed).unwrap();
        let model = DetectionModel::new(range, alpha, beta, d).unwrap();
        let g = build_graph(&x, &anchors, model, mode, seed).unwrap();
        let flood = dv_hop_flood(&g);
        let oracle = anchor_hops(&g, &(0..m).collect::<Vec<_>>());
        for v in 0..g.node_count {
            for a in 0..m {
                compared += 1;
                let rec = flood.tables[v].records[a];
                let same = match (rec, mode) {
                    (None, _) => oracle.hops(a, v).is_none(),
                    (Some(r), MeasurementMode::ConnectivityBased) => oracle.hops(a, v) == Some(r.hop_count),
                    (Some(r), MeasurementMode::RangeBased) => oracle.estimate(a, v) == Some(r.path_length),
                };
                mismatches += usize::from(!same);
            }
        }
    }
    Outcome {
        pass: mismatches == 0,
        detail: format!("{FLOOD_INSTANCES} instances, {compared} (node, anchor) entries, {mismatches} mismatches"),
    }
}

/// Largest eigenvalues one at a time: power iteration on a positively
/// shifted matrix, then Hotelling deflation.
fn power_oracle(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let shift = 1.0 - gershgorin_eigen_bounds(a).unwrap().lower.min(0.0);
    let mut b = a + DMatrix::identity(n, n) * shift;
    let mut values = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..n {
        let mut v = nalgebra::DVector::from_fn(n, |_, _| rng.gen::<f64>() - 0.5);
        v /= v.norm();
        let mut lambda = 0.0;
        for _ in 0..2_000_000 {
            let w = &b * &v;
            lambda = v.dot(&w);
            let resid = (&w - &v * lambda).norm();
            let norm = w.norm();
            if norm == 0.0 {
                break;
            }
            v = w / norm;
            if resid <= 1e-11 * lambda.abs().max(1.0) {
                break;
            }
        }
        values.push(lambda - shift);
        b -= &v * v.transpose() * lambda;
    }
    values
}

fn eigen_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER ^ 0xE16);
    let (mut worst_value, mut worst_ortho) = (0.0f64, 0.0f64);
    for _ in 0..EIGEN_MATRICES {
        let n = rng.gen_range(1..=12);
        let r = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let a = (&r + r.transpose()) * 0.5;
        let e = symmetric_eigen(&a).unwrap();
        let oracle = power_oracle(&a);
        for (x, y) in e.values.iter().zip(&oracle) {
            worst_value = worst_value.max((x - y).abs());
        }
        let ortho = (e.vectors.transpose() * &e.vectors - DMatrix::identity(n, n)).norm();
        worst_ortho = worst_ortho.max(ortho);
    }
    Outcome {
        pass: worst_value <= EIGEN_VALUE_TOL && worst_ortho <= EIGEN_ORTHO_TOL,
        detail: format!(
            "{EIGEN_MATRICES} matrices: max eigenvalue deviation {worst_value:.2e} (tol {EIGEN_VALUE_TOL:e}), \
             max ‖VᵀV - I‖_F {worst_ortho:.2e} (tol {EIGEN_ORTHO_TOL:e})"
        ),
    }
}

fn sigma_min() -> Outcome {
    let bound = (SIGMA_N as f64 / 6.0).sqrt();
    let values: Vec<f64> = (0..SIGMA_SEEDS as u64)
        .into_par_iter()
        .map(|t| verify_sigma_min(place_uniform(SIGMA_N, 2, Seed::new(MASTER, t)).unwrap().coords()).unwrap())
        .collect();
    let ok = values.iter().filter(|&&v| v >= bound).count();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let max = values.iter().copied().fold(0.0, f64::max);
    Outcome {
        pass: ok >= SIGMA_REQUIRED,
        detail: format!(
            "{ok}/{SIGMA_SEEDS} seeds with σ_min(LX) >= √(n/6) = {bound:.2} (need {SIGMA_REQUIRED}); \
             observed mean {mean:.2}, max {max:.2}; √(n/12) = {:.2}",
            (SIGMA_N as f64 / 12.0).sqrt()
        ),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 exact recovery", exact_recovery),
        ("2 hop-terrain range-based error", hop_terrain_anchor_value),
        ("3 hop-count bound", hop_lemma),
        ("4 error envelope and norm chain", error_envelope),
        ("5 deterministic anchor gain", deterministic_anchor),
        ("6 random anchor λ_min", random_anchor),
        ("7 error trend in C, α and β", sweep_trend),
        ("8 flood equals BFS", flood_oracle),
        ("9 eigensolver oracle", eigen_oracle),
        ("10 σ_min concentration", sigma_min),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        let id = name.split(' ').next().unwrap();
        if !only.is_empty() && !only.iter().any(|o| o == id) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let status = if outcome.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!outcome.pass);
        println!("{status} [{name}] {} ({:.1?})", outcome.detail, start.elapsed());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
