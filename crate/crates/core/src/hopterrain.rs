// SPDX-License-Identifier: Apache-2.0

//! Distributed localization: DV-hop flooding followed by per-node lateration.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::AnchorLayout;
use crate::mds::eigen::symmetric_eigen;
use crate::network::{distance, Adjacency, MeasurementGraph, MeasurementMode};

/// What a node knows about one anchor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorRecord {
    pub hop_count: u32,
    /// Accumulated edge lengths in range mode; `R · hop_count` otherwise.
    pub path_length: f64,
}

/// Per-node table, indexed by anchor slot.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTable {
    pub records: Vec<Option<AnchorRecord>>,
}

impl NodeTable {
    pub fn known(&self) -> usize {
        self.records.iter().flatten().count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RoundLog {
    pub round: usize,
    pub updates: usize,
    pub messages: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloodOutcome {
    /// One table per graph node.
    pub tables: Vec<NodeTable>,
    pub rounds: usize,
    pub messages: u64,
    pub log: Vec<RoundLog>,
}

impl FloodOutcome {
    /// One JSON object per round.
    pub fn write_log<W: Write>(&self, mut out: W) -> Result<()> {
        for entry in &self.log {
            serde_json::to_writer(&mut out, entry)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Synchronous flooding of anchor records.
///
/// In round 1 every anchor broadcasts its own record. A node that learns a
/// shorter route to an anchor rebroadcasts that record in the next round; a
/// broadcast of one record counts as one message. Flooding stops after the
/// first round with no update.
pub fn dv_hop_flood(graph: &MeasurementGraph) -> FloodOutcome {
    let n = graph.node_count;
    let m = graph.anchor_count;
    let adj = Adjacency::new(graph);
    let range_mode = graph.mode == MeasurementMode::RangeBased;
    let mut tables: Vec<Vec<Option<AnchorRecord>>> = vec![vec![None; m]; n];
    let mut pending: Vec<(usize, usize)> = Vec::new();
    for a in 0..m {
        tables[a][a] = Some(AnchorRecord {
            hop_count: 0,
            path_length: 0.0,
        });
        pending.push((a, a));
    }
    let mut dirty = vec![false; n * m];
    let mut log = Vec::new();
    let mut messages = 0u64;
    let mut round = 0;
    while !pending.is_empty() {
        round += 1;
        let sent = pending.len() as u64;
        messages += sent;
        // snapshot of what is being broadcast this round
        let outgoing: Vec<(usize, usize, AnchorRecord)> = pending
            .iter()
            .map(|&(u, a)| (u, a, tables[u][a].expect("pending record exists")))
            .collect();
        let mut next = Vec::new();
        for (u, a, rec) in outgoing {
            for (&v, &w) in adj.neighbors(u).iter().zip(adj.weights(u)) {
                let cand = AnchorRecord {
                    hop_count: rec.hop_count + 1,
                    path_length: if range_mode {
                        rec.path_length + w
                    } else {
                        graph.model.range * (rec.hop_count + 1) as f64
                    },
                };
                let better = match tables[v][a] {
                    None => true,
                    Some(old) if range_mode => cand.path_length < old.path_length,
                    Some(old) => cand.hop_count < old.hop_count,
                };
                if better {
                    tables[v][a] = Some(cand);
                    if !dirty[v * m + a] {
                        dirty[v * m + a] = true;
                        next.push((v, a));
                    }
                }
            }
        }
        for &(v, a) in &next {
            dirty[v * m + a] = false;
        }
        log.push(RoundLog {
            round,
            updates: next.len(),
            messages: sent,
        });
        pending = next;
    }
    FloodOutcome {
        tables: tables.into_iter().map(|records| NodeTable { records }).collect(),
        rounds: round,
        messages,
        log,
    }
}

/// The linear system `A x = b` obtained by differencing consecutive anchor circles.
#[derive(Debug, Clone, PartialEq)]
pub struct LaterationSystem {
    /// Row `k` is `2 (x_k - x_{k+1})ᵀ`.
    pub a: DMatrix<f64>,
    sq_norms: Vec<f64>,
}

impl LaterationSystem {
    /// Anchor positions as rows; needs at least `d + 1` of them.
    pub fn new(anchor_positions: &DMatrix<f64>) -> Result<Self> {
        let (m, d) = anchor_positions.shape();
        if m < d + 1 {
            return Err(Error::TooFewAnchors {
                required: d + 1,
                got: m,
            });
        }
        let a = DMatrix::from_fn(m - 1, d, |k, j| {
            2.0 * (anchor_positions[(k, j)] - anchor_positions[(k + 1, j)])
        });
        let sq_norms = anchor_positions.row_iter().map(|r| r.norm_squared()).collect();
        Ok(LaterationSystem { a, sq_norms })
    }

    /// `b_k = ‖x_k‖² - ‖x_{k+1}‖² + d̂_{k+1}² - d̂_k²`.
    pub fn rhs(&self, estimates: &[f64]) -> Result<DVector<f64>> {
        if estimates.len() != self.sq_norms.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} distance estimates for {} anchors",
                estimates.len(),
                self.sq_norms.len()
            )));
        }
        Ok(DVector::from_fn(self.a.nrows(), |k, _| {
            self.sq_norms[k] - self.sq_norms[k + 1] + estimates[k + 1].powi(2) - estimates[k].powi(2)
        }))
    }

    pub fn solve(&self, estimates: &[f64]) -> Result<DVector<f64>> {
        solve_least_squares(&self.a, &self.rhs(estimates)?)
    }
}

/// Largest condition number of `AᵀA` accepted by [`solve_least_squares`].
pub const MAX_CONDITION: f64 = 1e8;

/// Normal-equation solve `x = (AᵀA)⁻¹ Aᵀ b`; ill-conditioned systems are
/// reported as [`Error::SingularGeometry`].
pub fn solve_least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() != b.len() {
        return Err(Error::ShapeMismatch("A and b disagree in rows".into()));
    }
    let ata = a.transpose() * a;
    let eig = symmetric_eigen(&ata)?;
    let (hi, lo) = (eig.values[0], *eig.values.last().unwrap());
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(Error::SingularGeometry(cond));
    }
    let inv = ata.try_inverse().ok_or(Error::SingularGeometry(cond))?;
    Ok(inv * (a.transpose() * b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HopTerrainOptions {
    /// Scale hop counts by the measured average hop length between anchors
    /// instead of `R` (connectivity mode only).
    pub average_hop_distance: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeStatus {
    Localized,
    /// Reached by fewer than `d + 1` anchors.
    InsufficientAnchors,
    /// Reached by no anchor.
    Unreachable,
    /// Enough anchors, but their lateration system is ill-conditioned.
    SingularGeometry,
}

impl NodeStatus {
    pub fn token(self) -> &'static str {
        match self {
            NodeStatus::Localized => "localized",
            NodeStatus::InsufficientAnchors => "insufficient_anchors",
            NodeStatus::Unreachable => "unreachable",
            NodeStatus::SingularGeometry => "singular_geometry",
        }
    }
}

/// Estimates for the unknown nodes, in graph order (`anchor_count..node_count`).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationResult {
    pub d: usize,
    pub anchor_count: usize,
    pub status: Vec<NodeStatus>,
    estimates: Vec<Option<DVector<f64>>>,
    pub flood: FloodOutcome,
    /// Length that one hop stands for in the distance estimates.
    pub hop_length: f64,
}

impl LocalizationResult {
    pub fn unknown_count(&self) -> usize {
        self.status.len()
    }

    /// Estimate of unknown `k` (graph node `anchor_count + k`).
    pub fn estimate(&self, k: usize) -> Option<&DVector<f64>> {
        self.estimates[k].as_ref()
    }

    pub fn localized_fraction(&self) -> f64 {
        if self.status.is_empty() {
            return 0.0;
        }
        let ok = self.status.iter().filter(|&&s| s == NodeStatus::Localized).count();
        ok as f64 / self.status.len() as f64
    }

    /// `√(mean ‖x - x̂‖²)` over localized nodes; `truth` rows are unknowns.
    pub fn rmse(&self, truth: &DMatrix<f64>) -> Option<f64> {
        let mut sum = 0.0;
        let mut count = 0;
        for (k, est) in self.estimates.iter().enumerate() {
            if let Some(e) = est {
                sum += (truth.row(k).transpose() - e).norm_squared();
                count += 1;
            }
        }
        (count > 0).then(|| (sum / count as f64).sqrt())
    }

    /// `node_id,status,x,y[,z],error`; numeric fields are empty for nodes without an estimate.
    pub fn write_csv<W: Write>(&self, truth: &DMatrix<f64>, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let axes = ["x", "y", "z"];
        let mut header = vec!["node_id", "status"];
        header.extend(&axes[..self.d]);
        header.push("error");
        w.write_record(&header)?;
        for (k, status) in self.status.iter().enumerate() {
            let mut row = vec![(self.anchor_count + k).to_string(), status.token().to_string()];
            match &self.estimates[k] {
                Some(e) => {
                    row.extend(e.iter().map(|v| v.to_string()));
                    row.push((truth.row(k).transpose() - e).norm().to_string());
                }
                None => row.extend(std::iter::repeat_n(String::new(), self.d + 1)),
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Flood, then laterate every unknown node from the anchors it heard from.
pub fn hop_terrain(
    graph: &MeasurementGraph,
    anchors: &AnchorLayout,
    options: HopTerrainOptions,
) -> Result<LocalizationResult> {
    let (m, d) = (anchors.m(), anchors.d());
    if graph.anchor_count != m {
        return Err(Error::ShapeMismatch(format!(
            "graph has {} anchors, layout has {m}",
            graph.anchor_count
        )));
    }
    if m < d + 1 {
        return Err(Error::TooFewAnchors {
            required: d + 1,
            got: m,
        });
    }
    let flood = dv_hop_flood(graph);
    let hop_length = if options.average_hop_distance && graph.mode == MeasurementMode::ConnectivityBased {
        average_hop_length(&flood, anchors).unwrap_or(graph.model.range)
    } else {
        graph.model.range
    };
    let full_system = LaterationSystem::new(&anchors.positions)?;

    let mut status = Vec::with_capacity(graph.node_count - m);
    let mut estimates = Vec::with_capacity(graph.node_count - m);
    for v in graph.unknown_ids() {
        let table = &flood.tables[v];
        let heard: Vec<usize> = (0..m).filter(|&a| table.records[a].is_some()).collect();
        if heard.is_empty() {
            status.push(NodeStatus::Unreachable);
            estimates.push(None);
            continue;
        }
        if heard.len() < d + 1 {
            status.push(NodeStatus::InsufficientAnchors);
            estimates.push(None);
            continue;
        }
        let dist: Vec<f64> = heard
            .iter()
            .map(|&a| {
                let r = table.records[a].unwrap();
                match graph.mode {
                    MeasurementMode::RangeBased => r.path_length,
                    MeasurementMode::ConnectivityBased => hop_length * r.hop_count as f64,
                }
            })
            .collect();
        let solved = if heard.len() == m {
            full_system.solve(&dist)
        } else {
            let subset = DMatrix::from_fn(heard.len(), d, |r, c| anchors.positions[(heard[r], c)]);
            LaterationSystem::new(&subset)?.solve(&dist)
        };
        match solved {
            Ok(x) => {
                status.push(NodeStatus::Localized);
                estimates.push(Some(x));
            }
            Err(Error::SingularGeometry(_)) => {
                status.push(NodeStatus::SingularGeometry);
                estimates.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(LocalizationResult {
        d,
        anchor_count: m,
        status,
        estimates,
        flood,
        hop_length,
    })
}

/// Total true distance over total hops, across anchor pairs that reached each other.
fn average_hop_length(flood: &FloodOutcome, anchors: &AnchorLayout) -> Option<f64> {
    let m = anchors.m();
    let (mut dist, mut hops) = (0.0, 0u64);
    for a in 0..m {
        for b in a + 1..m {
            if let Some(r) = flood.tables[a].records[b] {
                dist += distance(&anchors.position(a), &anchors.position(b));
                hops += r.hop_count as u64;
            }
        }
    }
    (hops > 0).then(|| dist / hops as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{DetectionModel, Edge};

    #[test]
    fn lateration_matrix() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let s = LaterationSystem::new(&x).unwrap();
        assert_eq!(s.a, DMatrix::from_row_slice(2, 2, &[2.0, -2.0, 0.0, 2.0]));
    }

    #[test]
    fn exact_distances_solve_exactly() {
        let x = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.7, 0.9]);
        let target = [0.3f64, 0.6];
        let dist: Vec<f64> = x
            .row_iter()
            .map(|r| ((r[0] - target[0]).powi(2) + (r[1] - target[1]).powi(2)).sqrt())
            .collect();
        let est = LaterationSystem::new(&x).unwrap().solve(&dist).unwrap();
        assert!((est[0] - 0.3).abs() < 1e-12 && (est[1] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn collinear_anchors_are_singular() {
        let x = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 0.5, 0.5, 1.0, 1.0]);
        let s = LaterationSystem::new(&x).unwrap();
        assert!(matches!(s.solve(&[0.1, 0.2, 0.3]), Err(Error::SingularGeometry(_))));
    }

    #[test]
    fn flood_on_path() {
        // anchors 0 and 1 at the ends of the path 0 - 2 - 3 - 1
        let g = MeasurementGraph {
            node_count: 4,
            anchor_count: 2,
            mode: MeasurementMode::ConnectivityBased,
            model: DetectionModel::disc(0.4, 2).unwrap(),
            edges: vec![
                Edge { i: 0, j: 2, measurement: 1.0 },
                Edge { i: 1, j: 3, measurement: 1.0 },
                Edge { i: 2, j: 3, measurement: 1.0 },
            ],
        };
        let f = dv_hop_flood(&g);
        assert_eq!(f.tables[2].records[0].unwrap().hop_count, 1);
        assert_eq!(f.tables[2].records[1].unwrap().hop_count, 2);
        assert_eq!(f.tables[0].records[1].unwrap().hop_count, 3);
        // rounds: diameter 3, plus one silent round
        assert_eq!(f.rounds, 4);
        assert_eq!(f.log.last().unwrap().updates, 0);
        assert_eq!(f.messages, f.log.iter().map(|r| r.messages).sum::<u64>());
        assert_eq!(f.messages, 8);
    }
}
