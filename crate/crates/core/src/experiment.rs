//! The `G(t,k,q)` experiment grid and log-log slope fits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ch::{
    build_order, ch_query, contract_preprocess, leaf_shortcut_census, predicted_leaf_shortcuts, OrderStrategy,
};
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::gtkq::{build_gtkq, GtkqMeta, GtkqParams};
use crate::highway::{highway_dimension, Definition, HdCaps};
use crate::hub_labeling::{path_class_census, structural_labeling};
use crate::tnr::{build_tnr, regular_census, tnr_query, Locality};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t: Vec<usize>,
    pub k: Vec<usize>,
    pub q: Vec<usize>,
    pub seed: u64,
    pub max_nodes: usize,
    /// Above this many query pairs a uniform sample of `sample_pairs` is used.
    pub max_pairs: usize,
    pub sample_pairs: usize,
    /// Classic highway dimension is computed for cells up to this size.
    pub hd_max_nodes: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            t: vec![2],
            k: vec![2, 3, 4],
            q: vec![2, 4, 8],
            seed: 0,
            max_nodes: 10_000,
            max_pairs: 2_000_000,
            sample_pairs: 10_000,
            hd_max_nodes: 0,
        }
    }
}

impl GridSpec {
    pub fn cells(&self) -> Vec<(usize, usize, usize)> {
        let mut cells = Vec::new();
        for &t in &self.t {
            for &k in &self.k {
                for &q in &self.q {
                    cells.push((t, k, q));
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub t: usize,
    pub k: usize,
    pub q: usize,
    pub n: usize,
    pub scale_exponent: u32,
    pub query_pairs: usize,
    pub hl_total: usize,
    pub hl_total_per_node: f64,
    pub ch_e_plus: usize,
    pub ch_e_plus_per_node: f64,
    pub ch_leaf_shortcuts: usize,
    pub ch_avg_work: f64,
    pub ch_ed_e_plus: usize,
    pub tnr_transit: usize,
    pub tnr_global_fraction: f64,
    pub tnr_avg_access_pairs: f64,
    pub tnr_regular_fraction: f64,
    pub hd_classic: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedCell {
    pub t: usize,
    pub k: usize,
    pub q: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<ExperimentRow>,
    pub skipped: Vec<SkippedCell>,
}

/// Ordered cross-copy leaf pairs, or a seeded uniform sample of them.
fn query_pairs(meta: &GtkqMeta, spec: &GridSpec) -> Vec<(NodeId, NodeId)> {
    let leaves: Vec<NodeId> = meta.leaves().collect();
    let mut pairs: Vec<(NodeId, NodeId)> = leaves
        .iter()
        .flat_map(|&s| {
            leaves
                .iter()
                .filter(move |&&t| meta.copy(t) != meta.copy(s))
                .map(move |&t| (s, t))
        })
        .collect();
    if pairs.len() > spec.max_pairs {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        pairs.shuffle(&mut rng);
        pairs.truncate(spec.sample_pairs);
        pairs.sort_unstable();
    }
    pairs
}

pub fn run_cell(t: usize, k: usize, q: usize, spec: &GridSpec) -> Result<ExperimentRow> {
    let params = GtkqParams::new(t, k, q);
    let n = params.node_count()?;
    if n > spec.max_nodes {
        return Err(Error::CapExceeded { what: "node count", size: n, cap: spec.max_nodes });
    }
    let (g, meta) = build_gtkq(&params)?;
    let pairs = query_pairs(&meta, spec);

    let census = path_class_census(&meta);
    if !census.all_match() {
        return Err(Error::Invariant(format!("path class census mismatch on G({t},{k},{q})")));
    }
    let hl = structural_labeling(&g, &meta)?;

    let ch = contract_preprocess(&g, &build_order(&g, OrderStrategy::ByHeight, Some(&meta))?)?;
    let leaf = leaf_shortcut_census(&meta, &ch)?;
    if leaf.criterion_violations != 0 || leaf.leaf_shortcuts != predicted_leaf_shortcuts(t, k, q) {
        return Err(Error::Invariant(format!("leaf shortcut census mismatch on G({t},{k},{q})")));
    }
    let mut ch_work = 0usize;
    for &(s, u) in &pairs {
        ch_work += ch_query(&ch, s, u)?.stats.work();
    }
    let ch_ed = contract_preprocess(&g, &build_order(&g, OrderStrategy::EdgeDifference, None)?)?;

    let tnr = build_tnr(&ch, None)?;
    let (mut global, mut access_pairs) = (0usize, 0usize);
    for &(s, u) in &pairs {
        let r = tnr_query(&tnr, s, u)?;
        if r.stats.classified == Locality::Global {
            global += 1;
            access_pairs += r.stats.access_pairs;
        }
    }
    let hd_classic = if n <= spec.hd_max_nodes {
        Some(highway_dimension(&g, Definition::Classic, &HdCaps::default())?.h)
    } else {
        None
    };

    let denom = pairs.len().max(1) as f64;
    Ok(ExperimentRow {
        t,
        k,
        q,
        n,
        scale_exponent: params.scale_exponent,
        query_pairs: pairs.len(),
        hl_total: hl.total(),
        hl_total_per_node: hl.total() as f64 / n as f64,
        ch_e_plus: ch.shortcuts.len(),
        ch_e_plus_per_node: ch.shortcuts.len() as f64 / n as f64,
        ch_leaf_shortcuts: leaf.leaf_shortcuts,
        ch_avg_work: ch_work as f64 / denom,
        ch_ed_e_plus: ch_ed.shortcuts.len(),
        tnr_transit: tnr.transit.len(),
        tnr_global_fraction: global as f64 / denom,
        tnr_avg_access_pairs: access_pairs as f64 / global.max(1) as f64,
        tnr_regular_fraction: regular_census(&meta, &tnr).regular_fraction,
        hd_classic,
        seed: spec.seed,
    })
}

/// Runs every cell in parallel; rows come back in `(t, k, q)` order and
/// capped cells are reported instead of failing the run.
pub fn run_experiment(spec: &GridSpec) -> Result<ExperimentReport> {
    let results: Vec<((usize, usize, usize), Result<ExperimentRow>)> = spec
        .cells()
        .into_par_iter()
        .map(|(t, k, q)| ((t, k, q), run_cell(t, k, q, spec)))
        .collect();
    let mut report = ExperimentReport { rows: Vec::new(), skipped: Vec::new() };
    for ((t, k, q), r) in results {
        match r {
            Ok(row) => report.rows.push(row),
            Err(e) if e.is_cap() => report.skipped.push(SkippedCell { t, k, q, reason: e.to_string() }),
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

pub fn rows_to_csv(rows: &[ExperimentRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

pub fn rows_from_csv(text: &str) -> Result<Vec<ExperimentRow>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Error::Parse { line: i + 2, msg: e.to_string() }))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    HlTotalPerNode,
    ChEPlus,
    ChEPlusPerNode,
    ChAvgWork,
    TnrAvgAccessPairs,
}

impl Metric {
    pub fn value(self, row: &ExperimentRow) -> f64 {
        match self {
            Metric::HlTotalPerNode => row.hl_total_per_node,
            Metric::ChEPlus => row.ch_e_plus as f64,
            Metric::ChEPlusPerNode => row.ch_e_plus_per_node,
            Metric::ChAvgWork => row.ch_avg_work,
            Metric::TnrAvgAccessPairs => row.tnr_avg_access_pairs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XExpr {
    Q,
    Qk,
    QkSquared,
    QSquared,
    N,
}

impl XExpr {
    pub fn value(self, row: &ExperimentRow) -> f64 {
        let (q, k) = (row.q as f64, row.k as f64);
        match self {
            XExpr::Q => q,
            XExpr::Qk => q * k,
            XExpr::QkSquared => (q * k).powi(2),
            XExpr::QSquared => q * q,
            XExpr::N => row.n as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub metric: Metric,
    pub x: XExpr,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
    pub points: usize,
}

/// Least squares on `(ln x, ln y)`.
pub fn fit_points(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.len() < 4 {
        return Err(Error::InvalidParams(format!("slope fit needs at least 4 points, got {}", points.len())));
    }
    if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(Error::InvalidParams("slope fit needs positive values".into()));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParams("slope fit needs at least two distinct x values".into()));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (logs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / m).sqrt();
    Ok((slope, intercept, residual))
}

pub fn fit_slopes(rows: &[ExperimentRow], metric: Metric, x: XExpr) -> Result<SlopeFit> {
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (x.value(r), metric.value(r))).collect();
    let (slope, intercept, residual) = fit_points(&points)?;
    Ok(SlopeFit {
        metric,
        x,
        slope,
        intercept,
        residual,
        points: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let line: Vec<(f64, f64)> = (1..=5).map(|i| (i as f64, i as f64)).collect();
        let (s, c, r) = fit_points(&line).unwrap();
        assert!((s - 1.0).abs() < 1e-9 && c.abs() < 1e-9 && r < 1e-9);
        let square: Vec<(f64, f64)> = (1..=5).map(|i| (i as f64, 3.0 * (i * i) as f64)).collect();
        assert!((fit_points(&square).unwrap().0 - 2.0).abs() < 1e-9);
        assert!(fit_points(&line[..3]).is_err());
        assert!(fit_points(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0), (1.0, 4.0)]).is_err());
    }

    #[test]
    fn small_cell_and_csv_roundtrip() {
        let spec = GridSpec { hd_max_nodes: 14, ..GridSpec::default() };
        let row = run_cell(2, 2, 2, &spec).unwrap();
        assert_eq!((row.ch_leaf_shortcuts, row.hl_total, row.hd_classic), (8, 68, Some(2)));
        let csv = rows_to_csv(std::slice::from_ref(&row)).unwrap();
        assert_eq!(rows_from_csv(&csv).unwrap(), vec![row]);
    }

    #[test]
    fn caps_skip_cells() {
        let spec = GridSpec { k: vec![2], q: vec![2, 4], max_nodes: 20, ..GridSpec::default() };
        let report = run_experiment(&spec).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!((report.skipped[0].q, report.rows[0].q), (4, 2));
    }
}
