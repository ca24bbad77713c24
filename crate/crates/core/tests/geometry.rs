// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;
use sensorloc::geometry::{make_anchors, node_coordinates, place_uniform, AnchorMode, Seed};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn placement_stays_in_the_cube(n in 1usize..300, d in 2usize..=3, master: u64, trial in 0u64..1000) {
        let x = place_uniform(n, d, Seed::new(master, trial)).unwrap();
        prop_assert_eq!((x.n(), x.d()), (n, d));
        prop_assert!(x.coords().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn prefix_is_stable_in_n(n in 2usize..200, master: u64) {
        // growing n appends points without moving the earlier ones
        let s = Seed::new(master, 0);
        let small = place_uniform(n - 1, 2, s).unwrap();
        let large = place_uniform(n, 2, s).unwrap();
        for i in 0..n - 1 {
            prop_assert_eq!(small.point(i), large.point(i));
        }
    }

    #[test]
    fn random_anchors_are_independent_of_nodes(m in 3usize..40, master: u64) {
        let s = Seed::new(master, 1);
        let a = make_anchors(AnchorMode::RandomSubset(m), 2, 100, s).unwrap();
        let x = place_uniform(100, 2, s).unwrap();
        let all = node_coordinates(&x, &a).unwrap();
        prop_assert_eq!(all.nrows(), 100 + m);
        prop_assert_ne!(a.position(0), x.point(0));
    }
}

#[test]
fn seed_keys_differ_across_trials() {
    let keys: std::collections::HashSet<u64> = (0..1000).map(|t| Seed::new(3, t).key()).collect();
    assert_eq!(keys.len(), 1000);
}
