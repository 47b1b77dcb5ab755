//! Acceptance criteria. Each test writes one `PASS`/`FAIL` line to stdout
//! (bypassing libtest capture) and then asserts.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use speedup_core::ch::{
    any_order_leaf_bound, build_order, ch_query, contract_preprocess, leaf_edge_census, leaf_shortcut_census,
    predicted_leaf_shortcuts, OrderStrategy,
};
use speedup_core::experiment::{fit_slopes, run_experiment, GridSpec, Metric, XExpr};
use speedup_core::graph::{all_pairs, Graph, Length, DEFAULT_ALL_PAIRS_CAP};
use speedup_core::gtkq::{build_gtkq, GtkqMeta, GtkqParams};
use speedup_core::highway::{highway_dimension, Definition, HdCaps};
use speedup_core::hub_labeling::{
    ch_labeling, exact_min_total_labeling, hl_query, path_class_census, structural_labeling, Labeling,
    DEFAULT_EXACT_HL_CAP,
};
use speedup_core::mhl::{
    enumerate_x3c_family, exact_mhl_decide, labeling_from_cover, reduce_x3c_to_mhl, verify_directed_cover, x3c_solve,
    MhlCaps,
};
use speedup_core::tnr::{build_tnr, locality_filter, table_answer, tnr_query, Locality};

const CENSUS_INSTANCES: [(usize, usize, usize); 3] = [(2, 2, 2), (3, 2, 2), (2, 3, 2)];

fn report(criterion: u32, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "{verdict} criterion {criterion}: {detail}").unwrap();
}

fn gtkq(t: usize, k: usize, q: usize) -> (Graph, GtkqMeta) {
    build_gtkq(&GtkqParams::new(t, k, q)).unwrap()
}

fn random_graph(seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=12);
    let m = rng.gen_range(0..=2 * n);
    let edges: Vec<(usize, usize, Length)> = (0..m)
        .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(1..=20)))
        .filter(|&(u, v, _)| u != v)
        .collect();
    Graph::new(n, false, edges).unwrap()
}

fn labels_mismatches(g: &Graph, labels: &Labeling) -> usize {
    let apsp = all_pairs(g, DEFAULT_ALL_PAIRS_CAP).unwrap();
    let n = g.node_count();
    (0..n)
        .flat_map(|s| (0..n).map(move |t| (s, t)))
        .filter(|&(s, t)| hl_query(labels, s, t).distance != apsp.get(s, t))
        .count()
}

#[test]
fn criterion_1_census_identities() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for (t, k, q) in CENSUS_INSTANCES {
        let (g, meta) = gtkq(t, k, q);
        let census = path_class_census(&meta);
        if census.classes.len() != k || !census.all_match() {
            failures.push(format!("G({t},{k},{q}) path classes {:?}", census.classes));
        }
        let idx = contract_preprocess(&g, &build_order(&g, OrderStrategy::ByHeight, Some(&meta)).unwrap()).unwrap();
        let leaf = leaf_shortcut_census(&meta, &idx).unwrap();
        let expected = predicted_leaf_shortcuts(t, k, q);
        if leaf.leaf_shortcuts != expected || leaf.predicted != expected {
            failures.push(format!("G({t},{k},{q}) leaf shortcuts {} vs {expected}", leaf.leaf_shortcuts));
        }
        if leaf.criterion_violations != 0 {
            failures.push(format!("G({t},{k},{q}) criterion violations {}", leaf.criterion_violations));
        }
    }
    let elapsed = start.elapsed();
    let ok = failures.is_empty() && elapsed < Duration::from_secs(60);
    report(1, ok, &format!("{} mismatches in {:.2?} {failures:?}", failures.len(), elapsed));
    assert!(ok, "{failures:?}");
}

#[test]
fn criterion_2_highway_dimension() {
    let start = Instant::now();
    let caps = HdCaps::default();
    let mut parts = Vec::new();
    let mut ok = true;
    for q in [2, 3] {
        let (g, _) = gtkq(2, 2, q);
        let h = highway_dimension(&g, Definition::Classic, &caps).unwrap().h;
        ok &= h == q;
        parts.push(format!("h(G(2,2,{q})) = {h} (want {q})"));
    }
    let (g, _) = gtkq(2, 2, 2);
    let refined = highway_dimension(&g, Definition::Refined, &caps).unwrap().h;
    ok &= refined >= 2 + 2;
    parts.push(format!("refined h(G(2,2,2)) = {refined} (want >= 4)"));
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(300);
    report(2, ok, &format!("{} in {elapsed:.2?}", parts.join(", ")));
    assert!(ok);
}

#[test]
fn criterion_3_oracle_equivalence() {
    let mut mismatches = 0usize;
    let mut checked = 0usize;
    let mut check = |g: &Graph, meta: Option<&GtkqMeta>, seed: u64| {
        let apsp = all_pairs(g, DEFAULT_ALL_PAIRS_CAP).unwrap();
        let n = g.node_count();
        let mut strategies = vec![OrderStrategy::EdgeDifference, OrderStrategy::Random(seed)];
        strategies.push(if meta.is_some() { OrderStrategy::ByHeight } else { OrderStrategy::Input });
        let mut indexes = Vec::new();
        for strategy in strategies {
            let idx = contract_preprocess(g, &build_order(g, strategy, meta).unwrap()).unwrap();
            for s in 0..n {
                for t in 0..n {
                    mismatches += usize::from(ch_query(&idx, s, t).unwrap().distance != apsp.get(s, t));
                }
            }
            mismatches += labels_mismatches(g, &ch_labeling(&idx).unwrap());
            indexes.push(idx);
        }
        if let Some(meta) = meta {
            mismatches += labels_mismatches(g, &structural_labeling(g, meta).unwrap());
        }
        for idx in &indexes {
            let tnr = build_tnr(idx, None).unwrap();
            for s in 0..n {
                for t in 0..n {
                    mismatches += usize::from(tnr_query(&tnr, s, t).unwrap().distance != apsp.get(s, t));
                }
            }
        }
        checked += 1;
    };
    for (t, k, q) in CENSUS_INSTANCES {
        let (g, meta) = gtkq(t, k, q);
        check(&g, Some(&meta), 7);
    }
    for seed in 0..100 {
        check(&random_graph(seed), None, seed);
    }
    let ok = mismatches == 0;
    report(3, ok, &format!("{mismatches} mismatches over {checked} graphs"));
    assert!(ok);
}

#[test]
fn criterion_4_leaf_edges_any_order() {
    let mut violations = Vec::new();
    let mut minima = Vec::new();
    for (t, k, q) in [(2, 2, 2), (3, 2, 2)] {
        let (g, meta) = gtkq(t, k, q);
        let bound = any_order_leaf_bound(t, k, q);
        let mut min_edges = usize::MAX;
        for seed in 0..20 {
            let idx =
                contract_preprocess(&g, &build_order(&g, OrderStrategy::Random(seed), None).unwrap()).unwrap();
            let census = leaf_edge_census(&meta, &idx);
            for (copy, &edges) in census.same_copy_leaf_edges.iter().enumerate() {
                min_edges = min_edges.min(edges);
                if edges < bound {
                    violations.push(format!("G({t},{k},{q}) seed {seed} copy {copy}: {edges} < {bound}"));
                }
            }
            if idx.shortcuts.len() < bound {
                violations.push(format!("G({t},{k},{q}) seed {seed}: |E+| {} < {bound}", idx.shortcuts.len()));
            }
        }
        minima.push(format!("G({t},{k},{q}) min {min_edges} vs bound {bound}"));
    }
    let ok = violations.is_empty();
    report(4, ok, &format!("{} violations; {}", violations.len(), minima.join(", ")));
    assert!(ok, "{violations:?}");
}

#[test]
fn criterion_5_x3c_mhl_round_trip() {
    let start = Instant::now();
    let family = enumerate_x3c_family(20);
    let caps = MhlCaps::default();
    let mut disagreements = Vec::new();
    let mut yes = 0;
    for (i, inst) in family.iter().enumerate() {
        assert!(inst.uncovered().is_empty());
        let mhl = reduce_x3c_to_mhl(inst).unwrap();
        let cover = x3c_solve(inst);
        let decided = exact_mhl_decide(&mhl.graph, mhl.k, &caps).unwrap().is_yes();
        if cover.is_some() != decided {
            disagreements.push(format!("#{i} |U|={} x3c={} mhl={decided}", inst.universe, cover.is_some()));
        }
        if let Some(cover) = cover {
            yes += 1;
            let labels = labeling_from_cover(&mhl, &cover).unwrap();
            let covered = verify_directed_cover(&mhl.graph, &labels).unwrap().is_ok();
            if !covered || labels.max_label() > mhl.k {
                disagreements.push(format!("#{i} cover labeling fails (max label {})", labels.max_label()));
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = family.len() >= 20 && disagreements.is_empty() && elapsed < Duration::from_secs(600);
    report(
        5,
        ok,
        &format!(
            "{} instances ({yes} yes), {} disagreements in {elapsed:.2?} {disagreements:?}",
            family.len(),
            disagreements.len()
        ),
    );
    assert!(ok, "{disagreements:?}");
}

#[test]
fn criterion_6_exact_minimum_labeling() {
    let p3 = Graph::new(3, false, [(0, 1, 1), (1, 2, 1)]).unwrap();
    let edge = Graph::new(2, false, [(0, 1, 1)]).unwrap();
    let p3_min = exact_min_total_labeling(&p3, DEFAULT_EXACT_HL_CAP).unwrap().1;
    let edge_min = exact_min_total_labeling(&edge, DEFAULT_EXACT_HL_CAP).unwrap().1;
    let mut ok = p3_min == 5 && edge_min == 3;
    let mut parts = vec![format!("P3 {p3_min}, edge {edge_min}")];
    for (t, k, q) in [(2, 1, 2), (3, 1, 2), (2, 2, 1)] {
        let (g, meta) = gtkq(t, k, q);
        let structural = structural_labeling(&g, &meta).unwrap().total();
        let min = exact_min_total_labeling(&g, DEFAULT_EXACT_HL_CAP).unwrap().1;
        ok &= structural >= min;
        parts.push(format!("G({t},{k},{q}) structural {structural} >= min {min}"));
    }
    report(6, ok, &parts.join(", "));
    assert!(ok);
}

#[test]
fn criterion_7_scaling_trends() {
    let start = Instant::now();
    let report_rows = run_experiment(&GridSpec::default()).unwrap();
    assert!(report_rows.skipped.is_empty(), "{:?}", report_rows.skipped);
    let rows = &report_rows.rows;
    let checks = [
        (Metric::ChEPlusPerNode, XExpr::Qk, 0.8),
        (Metric::ChAvgWork, XExpr::Qk, 1.5),
        (Metric::TnrAvgAccessPairs, XExpr::Q, 1.5),
        (Metric::HlTotalPerNode, XExpr::Qk, 0.8),
    ];
    let mut ok = rows.len() == 9;
    let mut parts = Vec::new();
    for (metric, x, min_slope) in checks {
        let fit = fit_slopes(rows, metric, x).unwrap();
        let pass = fit.slope >= min_slope;
        ok &= pass;
        parts.push(format!("{metric:?}~{x:?} {:.3} (>= {min_slope}) {}", fit.slope, if pass { "ok" } else { "low" }));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(1800);
    report(7, ok, &format!("{} in {elapsed:.2?}", parts.join(", ")));
    assert!(ok, "{parts:?}");
}

#[test]
fn criterion_8_tnr_one_sided() {
    let mut wrong = 0usize;
    let mut global = 0usize;
    let mut check = |g: &Graph, meta: Option<&GtkqMeta>, seed: u64| {
        let apsp = all_pairs(g, DEFAULT_ALL_PAIRS_CAP).unwrap();
        let n = g.node_count();
        let strategy = if meta.is_some() { OrderStrategy::ByHeight } else { OrderStrategy::Random(seed) };
        let idx = contract_preprocess(g, &build_order(g, strategy, meta).unwrap()).unwrap();
        let sizes = [None, Some(0), Some(1), Some(n / 2), Some(n)];
        for size in sizes {
            let tnr = build_tnr(&idx, size).unwrap();
            for s in 0..n {
                for t in 0..n {
                    if locality_filter(&tnr, s, t) == Locality::Global {
                        global += 1;
                        wrong += usize::from(table_answer(&tnr, s, t).0 != apsp.get(s, t));
                    }
                }
            }
        }
    };
    for (t, k, q) in CENSUS_INSTANCES.into_iter().chain([(2, 2, 3), (2, 3, 4), (2, 4, 2)]) {
        let (g, meta) = gtkq(t, k, q);
        check(&g, Some(&meta), 0);
    }
    for seed in 0..100 {
        check(&random_graph(seed), None, seed);
    }
    let ok = wrong == 0;
    report(8, ok, &format!("{wrong} wrong table answers over {global} global queries"));
    assert!(ok);
}
