use proptest::prelude::*;

use speedup_core::ch::{
    any_order_leaf_bound, build_order, ch_query, contract_preprocess, contract_with_config, leaf_edge_census,
    shortcut_delta, ContractionConfig, ContractionOrder, OrderStrategy,
};
use speedup_core::graph::{all_pairs, bidirectional_dijkstra, dijkstra, perturb_unique, Graph, Length};
use speedup_core::gtkq::{build_gtkq, GtkqParams};
use speedup_core::hub_labeling::{ch_labeling, hl_query, verify_cover};
use speedup_core::tnr::{build_tnr, locality_filter, table_answer, tnr_query, Locality};

fn small_graph() -> impl Strategy<Value = Graph> {
    (1usize..=12).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n, 1u64..20), 0..30).prop_map(move |raw| {
            let edges: Vec<(usize, usize, Length)> = raw
                .into_iter()
                .filter(|&(u, v, _)| u != v)
                .collect();
            Graph::new(n, false, edges).unwrap()
        })
    })
}

fn strategies(seed: u64) -> [OrderStrategy; 3] {
    [OrderStrategy::Input, OrderStrategy::Random(seed), OrderStrategy::EdgeDifference]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn bidirectional_matches_dijkstra(g in small_graph()) {
        let apsp = all_pairs(&g, 100).unwrap();
        for s in 0..g.node_count() {
            for t in 0..g.node_count() {
                let (r, _) = bidirectional_dijkstra(&g, s, t).unwrap();
                prop_assert_eq!(r.distance, apsp.get(s, t));
            }
        }
    }

    #[test]
    fn ch_matches_dijkstra(g in small_graph(), seed in 0u64..1000) {
        let apsp = all_pairs(&g, 100).unwrap();
        for strategy in strategies(seed) {
            let idx = contract_preprocess(&g, &build_order(&g, strategy, None).unwrap()).unwrap();
            for s in 0..g.node_count() {
                for t in 0..g.node_count() {
                    prop_assert_eq!(ch_query(&idx, s, t).unwrap().distance, apsp.get(s, t));
                }
            }
            // Upward edges all point to higher ranks.
            for v in 0..g.node_count() {
                prop_assert!(idx.up[v].iter().all(|&(w, _)| idx.rank(w) > idx.rank(v)));
            }
        }
    }

    #[test]
    fn shortcuts_never_undercut_distances(g in small_graph(), seed in 0u64..1000) {
        let apsp = all_pairs(&g, 100).unwrap();
        let idx = contract_preprocess(&g, &build_order(&g, OrderStrategy::Random(seed), None).unwrap()).unwrap();
        for s in &idx.shortcuts {
            prop_assert!(apsp.get(s.u, s.v).unwrap() <= s.len);
        }
    }

    #[test]
    fn hop_limited_ch_stays_exact(g in small_graph(), seed in 0u64..1000, hops in 1usize..4) {
        let apsp = all_pairs(&g, 100).unwrap();
        let order = build_order(&g, OrderStrategy::Random(seed), None).unwrap();
        let capped = contract_with_config(&g, &order, ContractionConfig { hop_limit: Some(hops) }).unwrap();
        for s in 0..g.node_count() {
            for t in 0..g.node_count() {
                prop_assert_eq!(ch_query(&capped, s, t).unwrap().distance, apsp.get(s, t));
            }
        }
    }

    #[test]
    fn ch_labels_cover(g in small_graph(), seed in 0u64..1000) {
        let apsp = all_pairs(&g, 100).unwrap();
        let idx = contract_preprocess(&g, &build_order(&g, OrderStrategy::Random(seed), None).unwrap()).unwrap();
        let labels = ch_labeling(&idx).unwrap();
        prop_assert!(verify_cover(&apsp, &labels).unwrap().is_ok());
        for s in 0..g.node_count() {
            for t in 0..g.node_count() {
                let r = hl_query(&labels, s, t);
                prop_assert!(r.comparisons <= labels.forward(s).len() + labels.reverse(t).len());
            }
        }
    }

    #[test]
    fn tnr_matches_dijkstra_and_is_one_sided(g in small_graph(), seed in 0u64..1000, frac in 0usize..=4) {
        let apsp = all_pairs(&g, 100).unwrap();
        let idx = contract_preprocess(&g, &build_order(&g, OrderStrategy::Random(seed), None).unwrap()).unwrap();
        let size = g.node_count() * frac / 4;
        let tnr = build_tnr(&idx, Some(size)).unwrap();
        for s in 0..g.node_count() {
            for e in &tnr.access[s] {
                prop_assert_eq!(apsp.get(s, e.hub), Some(e.dist));
            }
            for t in 0..g.node_count() {
                prop_assert_eq!(tnr_query(&tnr, s, t).unwrap().distance, apsp.get(s, t));
                if locality_filter(&tnr, s, t) == Locality::Global {
                    prop_assert_eq!(table_answer(&tnr, s, t).0, apsp.get(s, t));
                    let via_access = tnr.access[s]
                        .iter()
                        .any(|a| apsp.get(a.hub, t).map(|d| a.dist + d) == apsp.get(s, t));
                    prop_assert!(via_access);
                }
            }
        }
    }

    #[test]
    fn perturbation_keeps_strict_order(g in small_graph()) {
        let p = perturb_unique(&g).unwrap();
        let before = all_pairs(&g, 100).unwrap();
        let after = all_pairs(&p, 100).unwrap();
        let n = g.node_count();
        for s in 0..n {
            for a in 0..n {
                for b in 0..n {
                    if let (Some(x), Some(y)) = (before.get(s, a), before.get(s, b)) {
                        if x < y {
                            prop_assert!(after.get(s, a).unwrap() < after.get(s, b).unwrap());
                        }
                    }
                }
            }
        }
        // Every perturbed shortest path is a shortest path of the original.
        for s in 0..n {
            let tree = dijkstra(&p, s).unwrap();
            for t in 0..n {
                if before.get(s, t).is_some() {
                    let path = tree.path_to(t);
                    let len: Length = path.windows(2).map(|w| g.edge_length(w[0], w[1]).unwrap()).sum();
                    prop_assert_eq!(Some(len), before.get(s, t));
                }
            }
        }
    }

    #[test]
    fn text_format_roundtrips(g in small_graph()) {
        prop_assert_eq!(Graph::from_text(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn leaf_edges_beat_bound_for_random_orders(seed in 0u64..10_000, t in 2usize..=3) {
        let (g, meta) = build_gtkq(&GtkqParams::new(t, 2, 2)).unwrap();
        let idx = contract_preprocess(&g, &build_order(&g, OrderStrategy::Random(seed), None).unwrap()).unwrap();
        let census = leaf_edge_census(&meta, &idx);
        let bound = any_order_leaf_bound(t, 2, 2);
        prop_assert!(census.same_copy_leaf_edges.iter().all(|&e| e >= bound));
        prop_assert!(idx.shortcuts.len() >= bound);
    }
}

/// Every placement of a height-2 root relative to its leaves: the smallest
/// net gain is `−t`, reached when exactly one child subtree stays above it.
#[test]
fn shortcut_delta_minimum_over_orders() {
    for t in 2..=3usize {
        let (_, meta) = build_gtkq(&GtkqParams::new(t, 2, 1)).unwrap();
        let leaves: Vec<usize> = meta.leaves().collect();
        let others: Vec<usize> = (0..meta.node_count()).filter(|&v| v != 0 && !meta.is_leaf(v)).collect();
        let mut min = i64::MAX;
        for mask in 0u32..(1 << leaves.len()) {
            // Leaves in `mask` go after the root, the rest before it.
            let mut seq: Vec<usize> = leaves.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 0).map(|(_, &v)| v).collect();
            seq.push(0);
            seq.extend(leaves.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v));
            seq.extend(&others);
            let order = ContractionOrder::explicit(&seq).unwrap();
            let d = shortcut_delta(&meta, &order, 0).unwrap();
            assert!(d.counts.iter().all(|&c| c <= t));
            min = min.min(d.value);
        }
        assert_eq!(min, -(t as i64), "t = {t}");
    }
}
