// SPDX-License-Identifier: Apache-2.0

//! Random measurement graphs.
//!
//! A pair of nodes at distance `z` is connected when `z ≤ R` and a uniform draw
//! `u` falls below `p(z) = min(1, α (z/R)^-β)`. The draw for pair `(i, j)` is a
//! fixed word of the trial's detection stream, so the same pair sees the same
//! `u` whatever `α`, `β` or `R` are. Raising `α` or `R` can therefore only add
//! edges.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{check_dimension, node_coordinates, AnchorLayout, PositionMatrix, Purpose, Seed};

/// Parameters of the detection law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionModel {
    pub range: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl DetectionModel {
    /// Validate `R > 0`, `0 < α ≤ 1` and `0 ≤ β < d`.
    ///
    /// `R` is not capped at the cube diagonal: any `R ≥ √d` simply yields the
    /// complete disc graph.
    pub fn new(range: f64, alpha: f64, beta: f64, d: usize) -> Result<Self> {
        check_dimension(d)?;
        if !(range.is_finite() && range > 0.0) {
            return Err(Error::InvalidParameter(format!("radio range {range} must be positive")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha {alpha} must lie in (0, 1]")));
        }
        if !(beta >= 0.0 && beta < d as f64) {
            return Err(Error::InvalidParameter(format!("beta {beta} must lie in [0, {d})")));
        }
        Ok(DetectionModel { range, alpha, beta })
    }

    /// The deterministic disc model (`α = 1`, `β = 0`).
    pub fn disc(range: f64, d: usize) -> Result<Self> {
        Self::new(range, 1.0, 0.0, d)
    }
}

/// Detection probability at distance `z`; errors when `z` is negative or exceeds `R`.
pub fn detection_probability(z: f64, model: &DetectionModel) -> Result<f64> {
    if !(z >= 0.0 && z <= model.range) {
        return Err(Error::OutOfRange {
            distance: z,
            range: model.range,
        });
    }
    Ok(probability_unchecked(z, model))
}

fn probability_unchecked(z: f64, model: &DetectionModel) -> f64 {
    if model.beta == 0.0 {
        return model.alpha.min(1.0);
    }
    (model.alpha * (z / model.range).powf(-model.beta)).min(1.0)
}

/// Random access to the per-pair uniforms of one trial.
pub struct PairDraws {
    rng: ChaCha8Rng,
    node_count: u64,
}

impl PairDraws {
    pub fn new(seed: Seed, node_count: usize) -> Self {
        PairDraws {
            rng: seed.rng(Purpose::Detection),
            node_count: node_count as u64,
        }
    }

    /// The uniform attached to the unordered pair `{i, j}`.
    pub fn uniform(&mut self, i: usize, j: usize) -> f64 {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let index = i as u64 * self.node_count + j as u64;
        // each f64 consumes two 32-bit words
        self.rng.set_word_pos(index as u128 * 2);
        self.rng.gen::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasurementMode {
    /// Only the existence of an edge is known.
    ConnectivityBased,
    /// Each edge also carries the exact distance.
    RangeBased,
}

impl MeasurementMode {
    pub fn token(self) -> &'static str {
        match self {
            MeasurementMode::ConnectivityBased => "connectivity",
            MeasurementMode::RangeBased => "range",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "connectivity" | "connectivity-based" => Ok(MeasurementMode::ConnectivityBased),
            "range" | "range-based" => Ok(MeasurementMode::RangeBased),
            _ => Err(Error::InvalidParameter(format!("unknown measurement mode {s:?}"))),
        }
    }
}

/// An undirected edge with `i < j`. `measurement` is the distance in range
/// mode and `1` in connectivity mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub measurement: f64,
}

/// Nodes `0..anchor_count` are anchors, the rest are unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementGraph {
    pub node_count: usize,
    pub anchor_count: usize,
    pub mode: MeasurementMode,
    pub model: DetectionModel,
    /// Sorted by `(i, j)`.
    pub edges: Vec<Edge>,
}

impl MeasurementGraph {
    pub fn anchor_ids(&self) -> std::ops::Range<usize> {
        0..self.anchor_count
    }

    pub fn unknown_ids(&self) -> std::ops::Range<usize> {
        self.anchor_count..self.node_count
    }

    /// Subgraph on `nodes` (ascending), relabelled `0..nodes.len()`.
    /// Anchors among `nodes` stay first only if the caller lists them first.
    pub fn induced(&self, nodes: &[usize]) -> MeasurementGraph {
        let mut map = vec![usize::MAX; self.node_count];
        for (k, &v) in nodes.iter().enumerate() {
            map[v] = k;
        }
        let mut edges: Vec<Edge> = self
            .edges
            .iter()
            .filter(|e| map[e.i] != usize::MAX && map[e.j] != usize::MAX)
            .map(|e| {
                let (a, b) = (map[e.i], map[e.j]);
                Edge {
                    i: a.min(b),
                    j: a.max(b),
                    measurement: e.measurement,
                }
            })
            .collect();
        edges.sort_by_key(|e| (e.i, e.j));
        MeasurementGraph {
            node_count: nodes.len(),
            anchor_count: nodes.iter().filter(|&&v| v < self.anchor_count).count(),
            mode: self.mode,
            model: self.model,
            edges,
        }
    }
}

/// Sample the measurement graph of a trial.
///
/// Node ids put the anchors first. Candidate pairs come from a grid with cells
/// of side at least `R`, so only neighbouring cells are scanned.
pub fn build_graph(
    positions: &PositionMatrix,
    anchors: &AnchorLayout,
    model: DetectionModel,
    mode: MeasurementMode,
    seed: Seed,
) -> Result<MeasurementGraph> {
    let coords = node_coordinates(positions, anchors)?;
    Ok(build_from_coordinates(&coords, anchors.m(), model, mode, seed))
}

pub(crate) fn build_from_coordinates(
    coords: &DMatrix<f64>,
    anchor_count: usize,
    model: DetectionModel,
    mode: MeasurementMode,
    seed: Seed,
) -> MeasurementGraph {
    let (total, d) = (coords.nrows(), coords.ncols());
    let flat: Vec<f64> = (0..total)
        .flat_map(|i| (0..d).map(move |k| coords[(i, k)]))
        .collect();
    let point = |i: usize| &flat[i * d..(i + 1) * d];

    let cells_per_axis = ((1.0 / model.range).floor() as usize).clamp(1, 1 << 10);
    let cell_of = |p: &[f64]| -> Vec<usize> {
        p.iter()
            .map(|&c| ((c * cells_per_axis as f64) as usize).min(cells_per_axis - 1))
            .collect()
    };
    let linear = |c: &[usize]| c.iter().fold(0usize, |acc, &k| acc * cells_per_axis + k);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); cells_per_axis.pow(d as u32)];
    for i in 0..total {
        buckets[linear(&cell_of(point(i)))].push(i);
    }

    let offsets: Vec<Vec<isize>> = (0..3usize.pow(d as u32))
        .map(|mut k| {
            (0..d)
                .map(|_| {
                    let o = (k % 3) as isize - 1;
                    k /= 3;
                    o
                })
                .collect()
        })
        .collect();

    let mut draws = PairDraws::new(seed, total);
    let mut edges = Vec::new();
    let mut neighbour = vec![0usize; d];
    for i in 0..total {
        let home = cell_of(point(i));
        for off in &offsets {
            let mut inside = true;
            for k in 0..d {
                let c = home[k] as isize + off[k];
                if c < 0 || c >= cells_per_axis as isize {
                    inside = false;
                    break;
                }
                neighbour[k] = c as usize;
            }
            if !inside {
                continue;
            }
            for &j in &buckets[linear(&neighbour)] {
                if j <= i {
                    continue;
                }
                let z = distance(point(i), point(j));
                if z > model.range {
                    continue;
                }
                let p = probability_unchecked(z, &model);
                if p < 1.0 && draws.uniform(i, j) > p {
                    continue;
                }
                let measurement = match mode {
                    MeasurementMode::ConnectivityBased => 1.0,
                    MeasurementMode::RangeBased => z,
                };
                edges.push(Edge { i, j, measurement });
            }
        }
    }
    edges.sort_by_key(|e| (e.i, e.j));
    MeasurementGraph {
        node_count: total,
        anchor_count,
        mode,
        model,
        edges,
    }
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Compressed adjacency lists, optionally with a dense bit matrix for fast membership tests.
#[derive(Debug, Clone)]
pub struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    bits: Option<BitMatrix>,
}

#[derive(Debug, Clone)]
struct BitMatrix {
    words_per_row: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    fn contains(&self, u: usize, v: usize) -> bool {
        self.words[u * self.words_per_row + v / 64] >> (v % 64) & 1 == 1
    }
}

impl Adjacency {
    pub fn new(graph: &MeasurementGraph) -> Self {
        let n = graph.node_count;
        let mut degree = vec![0usize; n];
        for e in &graph.edges {
            degree[e.i] += 1;
            degree[e.j] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0usize; offsets[n]];
        let mut weights = vec![0f64; offsets[n]];
        for e in &graph.edges {
            for (a, b) in [(e.i, e.j), (e.j, e.i)] {
                targets[fill[a]] = b;
                weights[fill[a]] = e.measurement;
                fill[a] += 1;
            }
        }
        // Dense rows pay off once the average degree is large.
        let bits = (n > 0 && n <= 20_000 && 2 * graph.edges.len() >= 32 * n).then(|| {
            let words_per_row = n.div_ceil(64);
            let mut words = vec![0u64; n * words_per_row];
            for e in &graph.edges {
                words[e.i * words_per_row + e.j / 64] |= 1 << (e.j % 64);
                words[e.j * words_per_row + e.i / 64] |= 1 << (e.i % 64);
            }
            BitMatrix {
                words_per_row,
                words,
            }
        });
        Adjacency {
            offsets,
            targets,
            weights,
            bits,
        }
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn weights(&self, v: usize) -> &[f64] {
        &self.weights[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Membership test; `None` when no dense matrix was built.
    pub fn has_edge(&self, u: usize, v: usize) -> Option<bool> {
        self.bits.as_ref().map(|b| b.contains(u, v))
    }

    pub fn is_dense(&self) -> bool {
        self.bits.is_some()
    }
}

/// Connected components of a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    /// Component label per node, numbered by first appearance.
    pub labels: Vec<usize>,
    pub sizes: Vec<usize>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_connected(&self) -> bool {
        self.sizes.len() <= 1
    }

    /// Nodes of the largest component, ascending; ties go to the lowest label.
    pub fn largest(&self) -> Vec<usize> {
        let Some((best, _)) = self
            .sizes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        else {
            return Vec::new();
        };
        (0..self.labels.len()).filter(|&v| self.labels[v] == best).collect()
    }
}

/// Label connected components with a union-find over the edge list.
pub fn components(graph: &MeasurementGraph) -> Components {
    let n = graph.node_count;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    for e in &graph.edges {
        let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut label_of_root = vec![usize::MAX; n];
    let mut labels = vec![0; n];
    let mut sizes = Vec::new();
    for v in 0..n {
        let r = find(&mut parent, v);
        if label_of_root[r] == usize::MAX {
            label_of_root[r] = sizes.len();
            sizes.push(0);
        }
        labels[v] = label_of_root[r];
        sizes[labels[v]] += 1;
    }
    Components { labels, sizes }
}

pub fn is_connected(graph: &MeasurementGraph) -> bool {
    components(graph).is_connected()
}

/// Write the graph as a plain edge list.
///
/// The header is `n m mode R alpha beta` (unknown count, anchor count), then
/// one `i j measurement` line per edge. Floats use the shortest representation
/// that parses back to the same value.
pub fn write_edge_list<W: Write>(graph: &MeasurementGraph, mut out: W) -> Result<()> {
    writeln!(
        out,
        "{} {} {} {} {} {}",
        graph.node_count - graph.anchor_count,
        graph.anchor_count,
        graph.mode.token(),
        graph.model.range,
        graph.model.alpha,
        graph.model.beta
    )?;
    for e in &graph.edges {
        writeln!(out, "{} {} {}", e.i, e.j, e.measurement)?;
    }
    out.flush()?;
    Ok(())
}

/// Parse the format produced by [`write_edge_list`].
pub fn read_edge_list<R: BufRead>(input: R) -> Result<MeasurementGraph> {
    let parse_err = |line, message: String| Error::Parse { line, message };
    let mut lines = input.lines().enumerate().filter(|(_, l)| {
        l.as_ref().map_or(true, |l| !l.trim().is_empty())
    });
    let (_, header) = lines.next().ok_or(Error::Empty("edge list"))?;
    let header = header?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 6 {
        return Err(parse_err(1, format!("expected 6 header fields, found {}", h.len())));
    }
    let num = |s: &str, line| s.parse::<f64>().map_err(|e| parse_err(line, format!("{s:?}: {e}")));
    let int = |s: &str, line| s.parse::<usize>().map_err(|e| parse_err(line, format!("{s:?}: {e}")));
    let (n, m) = (int(h[0], 1)?, int(h[1], 1)?);
    let mode = MeasurementMode::parse(h[2]).map_err(|e| parse_err(1, e.to_string()))?;
    let model = DetectionModel {
        range: num(h[3], 1)?,
        alpha: num(h[4], 1)?,
        beta: num(h[5], 1)?,
    };
    let total = n + m;
    let mut edges = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(parse_err(lineno, "expected `i j measurement`".into()));
        }
        let (i, j, w) = (int(f[0], lineno)?, int(f[1], lineno)?, num(f[2], lineno)?);
        if i >= total || j >= total || i == j {
            return Err(parse_err(lineno, format!("invalid edge {i} {j}")));
        }
        edges.push(Edge {
            i: i.min(j),
            j: i.max(j),
            measurement: w,
        });
    }
    edges.sort_by_key(|e| (e.i, e.j));
    Ok(MeasurementGraph {
        node_count: total,
        anchor_count: m,
        mode,
        model,
        edges,
    })
}
