use serde_json::Value;

use speedup_demo::{contract_json, generate_json, query_json};

fn parse(s: Result<String, String>) -> Value {
    serde_json::from_str(&s.unwrap()).unwrap()
}

#[test]
fn generate_reports_structural_totals() {
    let v = parse(generate_json(2, 2, 2));
    assert_eq!(v["graph"]["node_count"], 14);
    assert_eq!(v["structural_labels"]["total"], 68);
    assert_eq!(v["leaves"].as_array().unwrap().len(), 8);
}

#[test]
fn every_engine_returns_the_same_distance() {
    for order in ["by-height", "edge-difference", "random"] {
        let v = parse(query_json(2, 3, 3, 7, 29, order));
        let d = &v["bidirectional_dijkstra"]["distance"];
        assert!(d.is_u64());
        assert_eq!(&v["ch"]["distance"], d);
        assert_eq!(&v["hub_labels"]["distance"], d);
        assert_eq!(&v["tnr"]["distance"], d);
    }
}

#[test]
fn contract_census() {
    let v = parse(contract_json(2, 2, 2, "by-height", 0));
    assert_eq!(v["by_height"]["leaf_shortcuts"], 8);
    assert_eq!(v["by_height"]["criterion_violations"], 0);
    let r = parse(contract_json(2, 2, 2, "random", 3));
    assert!(r.get("by_height").is_none());
    assert!(r["e_plus"].as_u64().unwrap() >= r["any_order_bound"].as_u64().unwrap());
}

#[test]
fn rejects_bad_input() {
    assert!(generate_json(2, 12, 8).unwrap_err().contains("demo limit"));
    assert!(contract_json(2, 2, 2, "sideways", 0).is_err());
    assert!(query_json(2, 2, 2, 0, 99, "by-height").is_err());
}
