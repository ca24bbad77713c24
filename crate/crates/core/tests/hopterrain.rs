// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use sensorloc::geometry::{make_anchors, node_coordinates, place_uniform, AnchorMode, Seed};
use sensorloc::hopterrain::{
    dv_hop_flood, hop_terrain, solve_least_squares, HopTerrainOptions, LaterationSystem, NodeStatus,
};
use sensorloc::network::{build_graph, components, DetectionModel, MeasurementMode};
use sensorloc::paths::{all_pairs_hops, anchor_hops};

fn instance(
    n: usize,
    anchors: AnchorMode,
    range: f64,
    mode: MeasurementMode,
    master: u64,
) -> (sensorloc::geometry::PositionMatrix, sensorloc::geometry::AnchorLayout, sensorloc::network::MeasurementGraph) {
    let seed = Seed::new(master, 0);
    let x = place_uniform(n, 2, seed).unwrap();
    let a = make_anchors(anchors, 2, n, seed).unwrap();
    let g = build_graph(&x, &a, DetectionModel::disc(range, 2).unwrap(), mode, seed).unwrap();
    (x, a, g)
}

#[test]
fn lateration_normal_equations_oracle() {
    // compare against an explicit QR least-squares solve
    let a = DMatrix::from_row_slice(4, 2, &[2.0, -1.0, 0.5, 3.0, -1.0, 1.0, 1.5, 0.2]);
    let b = DVector::from_vec(vec![1.0, -2.0, 0.3, 0.7]);
    let x = solve_least_squares(&a, &b).unwrap();
    let qr = a.clone().qr();
    let oracle = qr.r().solve_upper_triangular(&(qr.q().transpose() * &b)).unwrap();
    assert!((x - oracle).norm() < 1e-12);
}

#[test]
fn statuses_are_classified() {
    // sparse graph: some nodes hear fewer than three anchors
    let (_, a, g) = instance(150, AnchorMode::RandomSubset(4), 0.12, MeasurementMode::ConnectivityBased, 3);
    let r = hop_terrain(&g, &a, HopTerrainOptions::default()).unwrap();
    let oracle = anchor_hops(&g, &[0, 1, 2, 3]);
    for (k, status) in r.status.iter().enumerate() {
        let v = 4 + k;
        let heard = (0..4).filter(|&s| oracle.hops(s, v).is_some()).count();
        let expect = match heard {
            0 => NodeStatus::Unreachable,
            1 | 2 => NodeStatus::InsufficientAnchors,
            _ => *status,
        };
        assert_eq!(*status, expect);
        assert_eq!(r.estimate(k).is_some(), *status == NodeStatus::Localized);
    }
}

#[test]
fn rounds_bounded_by_diameter_plus_one() {
    for master in 0..10 {
        let (_, _, g) = instance(120, AnchorMode::RandomSubset(5), 0.25, MeasurementMode::ConnectivityBased, master);
        let f = dv_hop_flood(&g);
        let h = all_pairs_hops(&g);
        let diameter = h.max_hops().unwrap() as usize;
        assert!(f.rounds <= diameter + 1, "{} rounds, diameter {diameter}", f.rounds);
        assert_eq!(f.log.len(), f.rounds);
        assert_eq!(f.log.last().unwrap().updates, 0);
    }
}

#[test]
fn message_count_on_connected_graph() {
    // each node broadcasts its first record per anchor and every later improvement
    let (_, _, g) = instance(100, AnchorMode::RandomSubset(3), 1.5, MeasurementMode::ConnectivityBased, 1);
    assert!(components(&g).is_connected());
    let f = dv_hop_flood(&g);
    // complete graph: anchors at hop 0, everyone else learns hop 1 in round 1
    // and anchors learn each other at hop 1; no later improvement.
    assert_eq!(f.rounds, 2);
    assert_eq!(f.messages, 3 + 3 * 102);
}

#[test]
fn exact_range_on_complete_graph_localizes_exactly() {
    let (x, a, g) = instance(60, AnchorMode::UnitSimplex, 2.0, MeasurementMode::RangeBased, 2);
    let r = hop_terrain(&g, &a, HopTerrainOptions::default()).unwrap();
    assert_eq!(r.localized_fraction(), 1.0);
    assert!(r.rmse(x.coords()).unwrap() < 1e-12);
}

#[test]
fn average_hop_length_is_used() {
    let (_, a, g) = instance(400, AnchorMode::RandomSubset(10), 0.15, MeasurementMode::ConnectivityBased, 4);
    let plain = hop_terrain(&g, &a, HopTerrainOptions::default()).unwrap();
    let avg = hop_terrain(&g, &a, HopTerrainOptions { average_hop_distance: true }).unwrap();
    assert_eq!(plain.hop_length, 0.15);
    assert!(avg.hop_length < 0.15 && avg.hop_length > 0.05, "{}", avg.hop_length);
    assert_eq!(plain.status, avg.status);
}

#[test]
fn csv_and_log_outputs() {
    let (x, a, g) = instance(30, AnchorMode::UnitSimplex, 0.3, MeasurementMode::ConnectivityBased, 5);
    let r = hop_terrain(&g, &a, HopTerrainOptions::default()).unwrap();
    let mut csv = Vec::new();
    r.write_csv(x.coords(), &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("node_id,status,x,y,error"));
    assert_eq!(text.lines().count(), 31);
    assert!(lines.next().unwrap().starts_with("3,"));
    let mut log = Vec::new();
    r.flood.write_log(&mut log).unwrap();
    let first: serde_json::Value = serde_json::from_str(String::from_utf8(log).unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(first["round"], 1);
    assert_eq!(first["messages"], 3);
}

#[test]
fn anchor_count_mismatch() {
    let (_, _, g) = instance(30, AnchorMode::UnitSimplex, 0.3, MeasurementMode::ConnectivityBased, 5);
    let other = make_anchors(AnchorMode::RandomSubset(5), 2, 30, Seed::new(0, 0)).unwrap();
    assert!(hop_terrain(&g, &other, HopTerrainOptions::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn flood_fixed_point_equals_search(
        n in 5usize..120,
        m in 3usize..8,
        range in 0.1f64..0.7,
        range_mode: bool,
        master: u64,
    ) {
        let mode = if range_mode { MeasurementMode::RangeBased } else { MeasurementMode::ConnectivityBased };
        let (_, _, g) = instance(n.max(m), AnchorMode::RandomSubset(m), range, mode, master);
        let f = dv_hop_flood(&g);
        let oracle = anchor_hops(&g, &(0..m).collect::<Vec<_>>());
        for v in 0..g.node_count {
            for a in 0..m {
                let rec = f.tables[v].records[a];
                prop_assert_eq!(rec.is_some(), oracle.hops(a, v).is_some());
                if let Some(r) = rec {
                    if range_mode {
                        prop_assert_eq!(Some(r.path_length), oracle.estimate(a, v));
                    } else {
                        prop_assert_eq!(Some(r.hop_count), oracle.hops(a, v));
                    }
                }
            }
        }
    }

    #[test]
    fn noise_free_lateration_is_exact(
        px in 0.0f64..1.0,
        py in 0.0f64..1.0,
        m in 3usize..12,
        master: u64,
    ) {
        let a = make_anchors(AnchorMode::RandomSubset(m), 2, m, Seed::new(master, 0)).unwrap();
        let dist: Vec<f64> = (0..m)
            .map(|k| ((a.positions[(k, 0)] - px).powi(2) + (a.positions[(k, 1)] - py).powi(2)).sqrt())
            .collect();
        match LaterationSystem::new(&a.positions).unwrap().solve(&dist) {
            Ok(x) => {
                prop_assert!((x[0] - px).abs() < 1e-6 && (x[1] - py).abs() < 1e-6);
            }
            Err(sensorloc::Error::SingularGeometry(c)) => prop_assert!(c > 1e8),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn range_estimates_never_undershoot(n in 10usize..120, master: u64) {
        let (x, a, g) = instance(n, AnchorMode::RandomSubset(4), 0.35, MeasurementMode::RangeBased, master);
        let f = dv_hop_flood(&g);
        let coords = node_coordinates(&x, &a).unwrap();
        for v in 0..g.node_count {
            for s in 0..4 {
                if let Some(r) = f.tables[v].records[s] {
                    let z = (coords.row(v) - coords.row(s)).norm();
                    prop_assert!(r.path_length >= z - 1e-12);
                }
            }
        }
    }
}
