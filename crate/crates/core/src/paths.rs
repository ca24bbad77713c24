// SPDX-License-Identifier: Apache-2.0

//! Shortest-path distance estimates.
//!
//! Connectivity mode estimates `d̂ᵢⱼ = R · hops(i, j)`; range mode uses the
//! weighted shortest-path length. Unreachable pairs are reported through
//! `Option` rather than a sentinel value.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::network::{distance, Adjacency, MeasurementGraph, MeasurementMode};

const UNSEEN: u32 = u32::MAX;

/// All-pairs distance estimates with hop counts.
#[derive(Debug, Clone, PartialEq)]
pub struct HopDistanceMatrix {
    n: usize,
    range: f64,
    hops: Vec<u32>,
    /// Path lengths; absent in hop mode, where they are `R · hops`.
    lengths: Option<Vec<f64>>,
}

impl HopDistanceMatrix {
    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn hops(&self, i: usize, j: usize) -> Option<u32> {
        let h = self.hops[i * self.n + j];
        (h != UNSEEN).then_some(h)
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let h = self.hops(i, j)?;
        Some(match &self.lengths {
            Some(l) => l[i * self.n + j],
            None => self.range * h as f64,
        })
    }

    pub fn is_reachable(&self, i: usize, j: usize) -> bool {
        self.hops[i * self.n + j] != UNSEEN
    }

    pub fn all_reachable(&self) -> bool {
        self.hops.iter().all(|&h| h != UNSEEN)
    }

    pub fn max_hops(&self) -> Option<u32> {
        self.hops.iter().copied().filter(|&h| h != UNSEEN).max()
    }

    /// The estimate matrix, or the first unreachable pair.
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        self.map_entries(|v| v)
    }

    fn map_entries(&self, f: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
        if let Some(k) = self.hops.iter().position(|&h| h == UNSEEN) {
            return Err(Error::Unreachable(k / self.n, k % self.n));
        }
        Ok(DMatrix::from_fn(self.n, self.n, |i, j| f(self.get(i, j).unwrap())))
    }
}

/// Hop counts from every node to every node; `d̂ = R · hops`.
pub fn all_pairs_hops(graph: &MeasurementGraph) -> HopDistanceMatrix {
    let adj = Adjacency::new(graph);
    let n = graph.node_count;
    let mut hops = vec![UNSEEN; n * n];
    if n > 0 {
        hops.par_chunks_mut(n)
            .enumerate()
            .for_each_init(Vec::new, |scratch, (src, row)| {
                bfs(&adj, src, row, scratch)
            });
    }
    HopDistanceMatrix {
        n,
        range: graph.model.range,
        hops,
        lengths: None,
    }
}

/// Weighted shortest paths; requires range measurements.
pub fn all_pairs_weighted(graph: &MeasurementGraph) -> Result<HopDistanceMatrix> {
    if graph.mode != MeasurementMode::RangeBased {
        return Err(Error::ModeMismatch { expected: "range" });
    }
    let adj = Adjacency::new(graph);
    let n = graph.node_count;
    let mut hops = vec![UNSEEN; n * n];
    let mut lengths = vec![f64::INFINITY; n * n];
    if n > 0 {
        hops.par_chunks_mut(n)
            .zip(lengths.par_chunks_mut(n))
            .enumerate()
            .for_each(|(src, (h, l))| dijkstra(&adj, src, h, l));
    }
    Ok(HopDistanceMatrix {
        n,
        range: graph.model.range,
        hops,
        lengths: Some(lengths),
    })
}

/// The estimate the graph's measurement mode calls for.
pub fn shortest_paths(graph: &MeasurementGraph) -> HopDistanceMatrix {
    match graph.mode {
        MeasurementMode::ConnectivityBased => all_pairs_hops(graph),
        MeasurementMode::RangeBased => all_pairs_weighted(graph).expect("mode checked"),
    }
}

/// Entrywise squares `d̂ᵢⱼ²`; errors on the first unreachable pair.
pub fn squared_matrix(h: &HopDistanceMatrix) -> Result<DMatrix<f64>> {
    h.map_entries(|v| v * v)
}

// Breadth-first search. When the graph is dense and a node has more
// neighbours than there are unvisited nodes left, scan the unvisited list
// against the bit matrix instead of the adjacency list.
fn bfs(adj: &Adjacency, src: usize, dist: &mut [u32], queue: &mut Vec<usize>) {
    dist.fill(UNSEEN);
    dist[src] = 0;
    queue.clear();
    queue.push(src);
    let mut unvisited: Vec<usize> = if adj.is_dense() {
        (0..dist.len()).filter(|&v| v != src).collect()
    } else {
        Vec::new()
    };
    let n = dist.len();
    let mut head = 0;
    while head < queue.len() && queue.len() < n {
        let u = queue[head];
        head += 1;
        let next = dist[u] + 1;
        if adj.is_dense() && adj.degree(u) > n - queue.len() {
            unvisited.retain(|&v| {
                if dist[v] != UNSEEN {
                    false
                } else if adj.has_edge(u, v) == Some(true) {
                    dist[v] = next;
                    queue.push(v);
                    false
                } else {
                    true
                }
            });
        } else {
            for &v in adj.neighbors(u) {
                if dist[v] == UNSEEN {
                    dist[v] = next;
                    queue.push(v);
                }
            }
        }
    }
}

#[derive(PartialEq)]
struct Candidate(f64, usize);

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(adj: &Adjacency, src: usize, hops: &mut [u32], len: &mut [f64]) {
    hops.fill(UNSEEN);
    len.fill(f64::INFINITY);
    len[src] = 0.0;
    hops[src] = 0;
    let mut heap = BinaryHeap::new();
    heap.push(Candidate(0.0, src));
    while let Some(Candidate(d, u)) = heap.pop() {
        if d > len[u] {
            continue;
        }
        for (&v, &w) in adj.neighbors(u).iter().zip(adj.weights(u)) {
            let cand = d + w;
            if cand < len[v] {
                len[v] = cand;
                hops[v] = hops[u] + 1;
                heap.push(Candidate(cand, v));
            }
        }
    }
}

/// Distances from each anchor to every node.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorDistances {
    pub node_count: usize,
    pub anchors: Vec<usize>,
    hops: Vec<u32>,
    lengths: Vec<f64>,
}

impl AnchorDistances {
    /// Hops from anchor slot `a` to `node`.
    pub fn hops(&self, a: usize, node: usize) -> Option<u32> {
        let h = self.hops[a * self.node_count + node];
        (h != UNSEEN).then_some(h)
    }

    /// Distance estimate from anchor slot `a` to `node`.
    pub fn estimate(&self, a: usize, node: usize) -> Option<f64> {
        self.hops(a, node).map(|_| self.lengths[a * self.node_count + node])
    }
}

/// Single-source searches from the given anchors.
pub fn anchor_hops(graph: &MeasurementGraph, anchors: &[usize]) -> AnchorDistances {
    let adj = Adjacency::new(graph);
    let n = graph.node_count;
    let mut hops = vec![UNSEEN; n * anchors.len()];
    let mut lengths = vec![f64::INFINITY; n * anchors.len()];
    let mut scratch = Vec::new();
    for (k, &a) in anchors.iter().enumerate() {
        let (h, l) = (&mut hops[k * n..(k + 1) * n], &mut lengths[k * n..(k + 1) * n]);
        match graph.mode {
            MeasurementMode::ConnectivityBased => {
                bfs(&adj, a, h, &mut scratch);
                for (l, &h) in l.iter_mut().zip(h.iter()) {
                    if h != UNSEEN {
                        *l = graph.model.range * h as f64;
                    }
                }
            }
            MeasurementMode::RangeBased => dijkstra(&adj, a, h, l),
        }
    }
    AnchorDistances {
        node_count: n,
        anchors: anchors.to_vec(),
        hops,
        lengths,
    }
}

/// Write `true_distance,estimate` for reachable pairs `i < j`, keeping every
/// `stride`-th pair in row-major order.
pub fn write_scatter_csv<W: Write>(
    coords: &DMatrix<f64>,
    h: &HopDistanceMatrix,
    stride: usize,
    out: W,
) -> Result<usize> {
    if coords.nrows() != h.node_count() {
        return Err(Error::ShapeMismatch("coordinates and distances differ in size".into()));
    }
    let stride = stride.max(1);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["true_distance", "estimate"])?;
    let rows: Vec<Vec<f64>> = coords.row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut k = 0usize;
    let mut written = 0;
    for i in 0..h.node_count() {
        for j in i + 1..h.node_count() {
            let keep = k.is_multiple_of(stride);
            k += 1;
            if !keep {
                continue;
            }
            if let Some(est) = h.get(i, j) {
                let z = distance(&rows[i], &rows[j]);
                w.write_record([z.to_string(), est.to_string()])?;
                written += 1;
            }
        }
    }
    w.flush()?;
    Ok(written)
}
