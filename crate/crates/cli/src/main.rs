// SPDX-License-Identifier: Apache-2.0

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use sensorloc::geometry::node_coordinates;
use sensorloc::harness::plot::{self, ChartLabels, Series, SeriesStyle};
use sensorloc::harness::verify::pass_counts;
use sensorloc::harness::{
    run_sweep, run_trial, run_verify, write_verify_csv, ConfigBuilder, ExperimentConfig, Metric, SweepResult,
};
use sensorloc::metrics::bounds;
use sensorloc::network::write_edge_list;
use sensorloc::paths::{shortest_paths, write_scatter_csv};

#[derive(Parser)]
#[command(name = "sensorloc", version, about = "Sensor network localization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trial and dump positions, estimates and logs.
    Simulate(SimulateArgs),
    /// Sweep the radio-range multiplier and write the per-trial CSV.
    Sweep(SweepArgs),
    /// Run the verification suites.
    Verify(VerifyArgs),
    /// Render a sweep CSV or a distance scatter CSV as SVG.
    Plot(PlotArgs),
    /// Write the measurement graph of one trial as an edge list.
    ExportGraph(ExportArgs),
}

/// Experiment settings; flags override the config file.
#[derive(Args)]
struct ConfigArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    /// Comma-separated list.
    #[arg(long)]
    alpha: Option<String>,
    /// Comma-separated list.
    #[arg(long)]
    beta: Option<String>,
    /// Explicit `alpha:beta` combinations.
    #[arg(long)]
    pairs: Option<String>,
    /// `none`, `simplex`, `random:<m>` or `random-log2`.
    #[arg(long)]
    anchors: Option<String>,
    #[arg(long = "c-grid")]
    c_grid: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long = "average-hop")]
    average_hop: Option<String>,
    /// `connected` or `largest`.
    #[arg(long)]
    component: Option<String>,
    #[arg(long)]
    timing: Option<String>,
    #[arg(long)]
    suites: Option<String>,
    #[arg(long = "anchor-m")]
    anchor_m: Option<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut b = ConfigBuilder::new();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            b = b.parse_text(&text).with_context(|| format!("in {}", path.display()))?;
        }
        let flags = [
            ("algorithm", &self.algorithm),
            ("n", &self.n),
            ("d", &self.d),
            ("mode", &self.mode),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("pairs", &self.pairs),
            ("anchors", &self.anchors),
            ("c_grid", &self.c_grid),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("average_hop", &self.average_hop),
            ("component", &self.component),
            ("timing", &self.timing),
            ("suites", &self.suites),
            ("anchor_m", &self.anchor_m),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                b = b.set(key, v)?;
            }
        }
        for kv in &self.overrides {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("override {kv:?} is not KEY=VALUE");
            };
            b = b.set(k.trim(), v.trim())?;
        }
        Ok(b.build()?)
    }
}

#[derive(Args)]
struct TrialSelect {
    /// Trial index.
    #[arg(long, default_value_t = 0)]
    trial: u64,
    /// Range multiplier; defaults to the first grid value.
    #[arg(long)]
    c: Option<f64>,
    /// Index into the (alpha, beta) combinations.
    #[arg(long, default_value_t = 0)]
    combo: usize,
}

impl TrialSelect {
    fn resolve(&self, cfg: &ExperimentConfig) -> Result<(f64, f64, f64)> {
        let Some(&(a, b)) = cfg.detection.get(self.combo) else {
            bail!("combination {} out of range ({} configured)", self.combo, cfg.detection.len());
        };
        Ok((a, b, self.c.unwrap_or(cfg.c_grid[0])))
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[command(flatten)]
    select: TrialSelect,
    /// True positions, anchors first.
    #[arg(long)]
    positions: Option<PathBuf>,
    /// Estimated positions.
    #[arg(long)]
    estimates: Option<PathBuf>,
    /// `true_distance,estimate` pairs.
    #[arg(long)]
    scatter: Option<PathBuf>,
    /// Keep every k-th pair in the scatter file.
    #[arg(long, default_value_t = 1)]
    scatter_stride: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Output CSV (overrides `output`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also render the seed-averaged curves (overrides `svg`).
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long, default_value = "d_inv")]
    metric: String,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Sweep CSV.
    #[arg(long, conflicts_with = "scatter")]
    input: Option<PathBuf>,
    /// Scatter CSV from `simulate --scatter`.
    #[arg(long)]
    scatter: Option<PathBuf>,
    #[arg(long, default_value = "d_inv")]
    metric: String,
    /// Radio range, for the scatter bound overlay.
    #[arg(long)]
    range: Option<f64>,
    /// Node count and dimension, for the scatter bound overlay.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long)]
    title: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[command(flatten)]
    select: TrialSelect,
    #[arg(long)]
    out: PathBuf,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let cfg = args.cfg.load()?;
    let (alpha, beta, c) = args.select.resolve(&cfg)?;
    let out = run_trial(&cfg, alpha, beta, c, args.select.trial)?;
    let r = &out.record;
    println!(
        "{} n={} d={} alpha={} beta={} C={} R={} connected={} localized_fraction={}",
        r.algorithm.token(),
        r.n,
        r.d,
        r.alpha,
        r.beta,
        r.c,
        r.range,
        r.connected,
        r.localized_fraction
    );
    for (name, v) in [("d_inv", r.d_inv), ("transform_error", r.transform_error), ("rmse", r.rmse)] {
        if let Some(v) = v {
            println!("{name}={v}");
        }
    }
    let coords = node_coordinates(&out.positions, &out.anchors)?;
    if let Some(path) = &args.positions {
        let mut w = create(path)?;
        let axes = ["x", "y", "z"];
        writeln!(w, "node_id,role,{}", axes[..cfg.d].join(","))?;
        for (i, row) in coords.row_iter().enumerate() {
            let role = if i < out.anchors.m() { "anchor" } else { "unknown" };
            let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{i},{role},{}", vals.join(","))?;
        }
        w.flush()?;
    }
    if let Some(path) = &args.estimates {
        let mut w = create(path)?;
        if let Some(loc) = &out.localization {
            loc.write_csv(out.positions.coords(), &mut w)?;
        } else if let Some((emb, nodes)) = &out.embedding {
            let axes = ["x", "y", "z"];
            writeln!(w, "node_id,{}", axes[..cfg.d].join(","))?;
            for (k, row) in emb.coords.row_iter().enumerate() {
                let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(w, "{},{}", nodes[k], vals.join(","))?;
            }
        } else {
            writeln!(w, "node_id")?;
        }
        w.flush()?;
    }
    if let Some(path) = &cfg.log {
        match &out.localization {
            Some(loc) => loc.flood.write_log(create(path)?)?,
            None => eprintln!("no flood log: {} does not flood", r.algorithm.token()),
        }
    }
    if let Some(path) = &args.scatter {
        let h = shortest_paths(&out.graph);
        let written = write_scatter_csv(&coords, &h, args.scatter_stride, create(path)?)?;
        println!("scatter pairs written: {written}");
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let cfg = args.cfg.load()?;
    let metric = Metric::parse(&args.metric)?;
    let result = run_sweep(&cfg)?;
    match args.out.or(cfg.output.clone()) {
        Some(path) => result.write_csv(create(&path)?)?,
        None => result.write_csv(std::io::stdout().lock())?,
    }
    if let Some(path) = args.svg.or(cfg.svg.clone()) {
        let labels = ChartLabels {
            title: format!("{} ({} nodes, {} mode)", cfg.algorithm.token(), cfg.n, cfg.mode.token()),
            x: "C".into(),
            y: format!("average {}", args.metric),
        };
        let svg = plot::render_svg(&plot::sweep_series(&result, metric), &labels)?;
        std::fs::write(&path, svg)?;
    }
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<()> {
    let cfg = args.cfg.load()?;
    let rows = run_verify(&cfg)?;
    match args.out.or(cfg.output.clone()) {
        Some(path) => write_verify_csv(&rows, create(&path)?)?,
        None => write_verify_csv(&rows, std::io::stdout().lock())?,
    }
    for (check, passed, total) in pass_counts(&rows) {
        eprintln!("{check}: {passed}/{total} passed");
    }
    Ok(())
}

fn plot_cmd(args: PlotArgs) -> Result<()> {
    let svg = if let Some(path) = &args.input {
        let result = SweepResult::read_csv(BufReader::new(File::open(path)?))?;
        let labels = ChartLabels {
            title: args.title.clone().unwrap_or_default(),
            x: "C".into(),
            y: format!("average {}", args.metric),
        };
        plot::render_svg(&plot::sweep_series(&result, Metric::parse(&args.metric)?), &labels)?
    } else if let Some(path) = &args.scatter {
        let points = plot::read_scatter_csv(BufReader::new(File::open(path)?))?;
        let mut series = vec![Series {
            label: "shortest path".into(),
            points: points.clone(),
            style: SeriesStyle::Markers,
        }];
        if let (Some(range), Some(n)) = (args.range, args.n) {
            let b = bounds(n, args.d, args.alpha)?;
            let max = points.iter().map(|p| p.0).fold(0.0, f64::max);
            series.extend(plot::hop_bound_overlays(range, b.r_tilde, max));
        }
        let labels = ChartLabels {
            title: args.title.clone().unwrap_or_default(),
            x: "true distance".into(),
            y: "estimated distance".into(),
        };
        plot::render_svg(&series, &labels)?
    } else {
        bail!("pass --input or --scatter");
    };
    std::fs::write(&args.out, svg)?;
    Ok(())
}

fn export_graph(args: ExportArgs) -> Result<()> {
    let cfg = args.cfg.load()?;
    let (alpha, beta, c) = args.select.resolve(&cfg)?;
    let out = run_trial(&cfg, alpha, beta, c, args.select.trial)?;
    write_edge_list(&out.graph, create(&args.out)?)?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Verify(a) => verify(a),
        Command::Plot(a) => plot_cmd(a),
        Command::ExportGraph(a) => export_graph(a),
    }
}
