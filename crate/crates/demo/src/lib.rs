//! Browser bindings for a small `G(t,k,q)` playground. Each export returns
//! a JSON string; the `*_json` functions hold the logic and are what the
//! native tests call.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use speedup_core::ch::{
    any_order_leaf_bound, build_order, ch_query, contract_preprocess, leaf_edge_census, leaf_shortcut_census,
    OrderStrategy,
};
use speedup_core::graph::{bidirectional_dijkstra, graph_stats, Graph};
use speedup_core::gtkq::{build_gtkq, GtkqMeta, GtkqParams};
use speedup_core::hub_labeling::{
    ch_labeling, cross_copy_label_bound, hl_query, label_stats, path_class_census, structural_labeling,
};
use speedup_core::tnr::{build_tnr, tnr_query};

/// Largest instance the page will build.
pub const DEMO_MAX_NODES: usize = 2000;

fn family(t: usize, k: usize, q: usize) -> Result<(Graph, GtkqMeta), String> {
    let params = GtkqParams::new(t, k, q);
    params.validate().map_err(|e| e.to_string())?;
    let n = params.node_count().map_err(|e| e.to_string())?;
    if n > DEMO_MAX_NODES {
        return Err(format!("{n} nodes is above the demo limit of {DEMO_MAX_NODES}"));
    }
    build_gtkq(&params).map_err(|e| e.to_string())
}

fn strategy(order: &str, seed: u64) -> Result<OrderStrategy, String> {
    match order {
        "by-height" => Ok(OrderStrategy::ByHeight),
        "edge-difference" => Ok(OrderStrategy::EdgeDifference),
        "random" => Ok(OrderStrategy::Random(seed)),
        other => Err(format!("unknown order {other:?}")),
    }
}

fn text(v: Value) -> String {
    serde_json::to_string_pretty(&v).unwrap_or_default()
}

pub fn generate_json(t: usize, k: usize, q: usize) -> Result<String, String> {
    let (g, meta) = family(t, k, q)?;
    let stats = graph_stats(&g, DEMO_MAX_NODES).map_err(|e| e.to_string())?;
    let labels = structural_labeling(&g, &meta).map_err(|e| e.to_string())?;
    Ok(text(json!({
        "graph": stats,
        "path_classes": path_class_census(&meta).classes,
        "structural_labels": label_stats(&labels),
        "label_bound": cross_copy_label_bound(t, k, q),
        "leaves": meta.leaves().collect::<Vec<_>>(),
    })))
}

pub fn query_json(t: usize, k: usize, q: usize, source: usize, target: usize, order: &str) -> Result<String, String> {
    let (g, meta) = family(t, k, q)?;
    let err = |e: speedup_core::Error| e.to_string();
    let (dijkstra, dijkstra_stats) = bidirectional_dijkstra(&g, source, target).map_err(err)?;
    let ord = build_order(&g, strategy(order, 0)?, Some(&meta)).map_err(err)?;
    let idx = contract_preprocess(&g, &ord).map_err(err)?;
    let ch = ch_query(&idx, source, target).map_err(err)?;
    let hl = hl_query(&ch_labeling(&idx).map_err(err)?, source, target);
    let tnr = tnr_query(&build_tnr(&idx, None).map_err(err)?, source, target).map_err(err)?;
    Ok(text(json!({
        "path": dijkstra.vertices,
        "bidirectional_dijkstra": { "distance": dijkstra.distance, "work": dijkstra_stats.work() },
        "ch": { "distance": ch.distance, "work": ch.stats.work(), "meeting": ch.meeting },
        "hub_labels": hl,
        "tnr": tnr,
    })))
}

pub fn contract_json(t: usize, k: usize, q: usize, order: &str, seed: u64) -> Result<String, String> {
    let (g, meta) = family(t, k, q)?;
    let strategy = strategy(order, seed)?;
    let ord = build_order(&g, strategy, Some(&meta)).map_err(|e| e.to_string())?;
    let idx = contract_preprocess(&g, &ord).map_err(|e| e.to_string())?;
    let edges = leaf_edge_census(&meta, &idx);
    let mut report = json!({
        "e_plus": idx.shortcuts.len(),
        "leaf_shortcuts": edges.leaf_shortcuts,
        "same_copy_leaf_edges": edges.same_copy_leaf_edges,
        "any_order_bound": any_order_leaf_bound(t, k, q),
    });
    if strategy == OrderStrategy::ByHeight {
        let census = leaf_shortcut_census(&meta, &idx).map_err(|e| e.to_string())?;
        report["by_height"] = json!(census);
    }
    Ok(text(report))
}

/// Graph statistics, path classes and structural label sizes.
#[wasm_bindgen]
pub fn generate(t: usize, k: usize, q: usize) -> Result<String, JsValue> {
    generate_json(t, k, q).map_err(|e| JsValue::from_str(&e))
}

/// One query answered by every engine.
#[wasm_bindgen]
pub fn query(t: usize, k: usize, q: usize, source: usize, target: usize, order: &str) -> Result<String, JsValue> {
    query_json(t, k, q, source, target, order).map_err(|e| JsValue::from_str(&e))
}

/// Shortcut counts for one contraction order.
#[wasm_bindgen]
pub fn contract(t: usize, k: usize, q: usize, order: &str, seed: u64) -> Result<String, JsValue> {
    contract_json(t, k, q, order, seed).map_err(|e| JsValue::from_str(&e))
}
