use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use speedup_core::ch::{
    any_order_leaf_bound, build_order, ch_query, ch_stats, contract_with_config, leaf_edge_census,
    leaf_shortcut_census, ChIndex, ContractionConfig, OrderStrategy,
};
use speedup_core::experiment::{fit_slopes, rows_from_csv, rows_to_csv, run_experiment, GridSpec, Metric, XExpr};
use speedup_core::graph::{all_pairs, graph_stats, Graph, NodeId, DEFAULT_ALL_PAIRS_CAP};
use speedup_core::gtkq::{build_gtkq, family_stats, GtkqMeta, GtkqParams};
use speedup_core::highway::{highway_dimension, Definition, HdCaps};
use speedup_core::hub_labeling::{
    ch_labeling, cross_copy_label_bound, exact_min_total_labeling, hl_query, label_stats, path_class_census,
    structural_labeling, verify_cover, CoverCheck, Labeling, DEFAULT_EXACT_HL_CAP,
};
use speedup_core::mhl::{
    exact_mhl_decide, reduce_x3c_to_mhl, x3c_solve, MhlCaps, MhlDecision, X3cInstance, DEFAULT_MHL_NODE_CAP,
    DEFAULT_MHL_PAIR_CAP,
};
use speedup_core::tnr::{access_stats, build_tnr, regular_census, tnr_query, TnrIndex};
use speedup_core::Error;

#[derive(Parser)]
#[command(name = "speedup", version, about = "Shortest-path speedup techniques on G(t,k,q) graphs")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// Seed for random orders and pair sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format for reports (dumps are always text).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true, default_value_t = 10_000)]
    max_nodes: usize,
    #[arg(long, global = true, default_value_t = DEFAULT_ALL_PAIRS_CAP)]
    all_pairs_cap: usize,
    /// Query pairs swept exhaustively before sampling or refusing.
    #[arg(long, global = true, default_value_t = 2_000_000)]
    max_pairs: usize,
    /// Path sets per hitting-set instance.
    #[arg(long, global = true, default_value_t = HdCaps::default().max_sets)]
    max_sets: usize,
    #[arg(long, global = true, default_value_t = HdCaps::default().max_paths)]
    max_paths: usize,
    #[arg(long, global = true, default_value_t = DEFAULT_EXACT_HL_CAP)]
    exact_hl_cap: usize,
    #[arg(long, global = true, default_value_t = DEFAULT_MHL_NODE_CAP)]
    mhl_max_nodes: usize,
    #[arg(long, global = true, default_value_t = DEFAULT_MHL_PAIR_CAP)]
    mhl_max_pairs: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate G(t,k,q) with its metadata sidecar.
    Gen(FamilyArgs),
    /// Node/edge counts and diameter.
    Stats(GraphArgs),
    /// Exact highway dimension.
    Hd {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, value_enum, default_value_t = DefinitionArg::Classic)]
        definition: DefinitionArg,
    },
    /// Hub labeling.
    #[command(subcommand)]
    Hl(HlCmd),
    /// Contraction hierarchies.
    #[command(subcommand)]
    Ch(ChCmd),
    /// Transit node routing.
    #[command(subcommand)]
    Tnr(TnrCmd),
    /// Exact cover by 3-sets and the hub-labeling reduction.
    #[command(subcommand)]
    X3c(X3cCmd),
    /// Experiment grid and slope fits.
    #[command(subcommand)]
    Bench(BenchCmd),
}

#[derive(Args)]
struct FamilyArgs {
    #[arg(long)]
    t: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    q: usize,
    /// Edge scale exponent; defaults to the smallest valid one.
    #[arg(long)]
    scale: Option<u32>,
    /// Metadata path for `gen` (default: `<out>.meta.json`).
    #[arg(long)]
    meta_out: Option<PathBuf>,
}

#[derive(Args)]
struct GraphArgs {
    /// Graph file: `p sp <n> <m> <d|u>` then `a <u> <v> <w>` lines.
    #[arg(long)]
    graph: PathBuf,
    /// G(t,k,q) metadata written by `gen`.
    #[arg(long)]
    meta: Option<PathBuf>,
}

#[derive(Args)]
struct OrderArgs {
    #[arg(long, value_enum, default_value_t = OrderArg::EdgeDifference)]
    order: OrderArg,
    /// Bound witness searches to this many hops.
    #[arg(long)]
    hop_limit: Option<usize>,
}

#[derive(Args)]
struct PairArgs {
    #[arg(long)]
    source: NodeId,
    #[arg(long)]
    target: NodeId,
}

#[derive(Clone, Copy, ValueEnum)]
enum DefinitionArg {
    Classic,
    Refined,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    ByHeight,
    EdgeDifference,
    Input,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum LabelMethod {
    Structural,
    Ch,
}

#[derive(Subcommand)]
enum HlCmd {
    /// Build labels; prints stats, or the label dump with `--dump`.
    Build {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, value_enum, default_value_t = LabelMethod::Ch)]
        method: LabelMethod,
        #[command(flatten)]
        order: OrderArgs,
        #[arg(long)]
        dump: bool,
    },
    Query {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, value_enum, default_value_t = LabelMethod::Ch)]
        method: LabelMethod,
        #[command(flatten)]
        order: OrderArgs,
        #[command(flatten)]
        pair: PairArgs,
    },
    /// Cross-copy path classes and label-size bound for G(t,k,q).
    Census(FamilyArgs),
    /// Exact minimum total label size (small graphs only).
    Opt(GraphArgs),
}

#[derive(Subcommand)]
enum ChCmd {
    /// Contract; prints stats, or the shortcut dump with `--dump`.
    Build {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        order: OrderArgs,
        #[arg(long)]
        dump: bool,
    },
    Query {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        order: OrderArgs,
        #[command(flatten)]
        pair: PairArgs,
    },
    /// Leaf shortcut and leaf edge censuses for G(t,k,q).
    Census {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, value_enum, default_value_t = OrderArg::ByHeight)]
        order: OrderArg,
    },
}

#[derive(Subcommand)]
enum TnrCmd {
    /// Build; prints access stats, or the access-node dump with `--dump`.
    Build {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        order: OrderArgs,
        /// Transit set size (default: ceil(sqrt(n))).
        #[arg(long)]
        transit: Option<usize>,
        #[arg(long)]
        dump: bool,
    },
    Query {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        order: OrderArgs,
        #[arg(long)]
        transit: Option<usize>,
        #[command(flatten)]
        pair: PairArgs,
    },
    /// Regular-path census for G(t,k,q) over the by-height order.
    Census {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        transit: Option<usize>,
    },
}

#[derive(Subcommand)]
enum X3cCmd {
    Solve {
        #[arg(long)]
        input: PathBuf,
    },
    /// Writes the reduced digraph; roles go to `--tags` (default `<out>.tags.json`).
    Reduce {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        tags: Option<PathBuf>,
    },
    /// Decides the reduced instance exactly and compares with the X3C answer.
    Decide {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Run the experiment grid (CSV by default).
    Run {
        #[arg(long, value_delimiter = ',', default_value = "2")]
        t: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        k: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
        q: Vec<usize>,
        #[arg(long, default_value_t = 10_000)]
        sample_pairs: usize,
        /// Compute classic highway dimension for cells up to this size.
        #[arg(long, default_value_t = 0)]
        hd_max_nodes: usize,
    },
    /// Log-log slope fits over a grid CSV; without `--metric` runs the standard four.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        metric: Option<MetricArg>,
        #[arg(long, value_enum, default_value_t = XArg::Qk)]
        x: XArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    HlTotalPerNode,
    ChEPlus,
    ChEPlusPerNode,
    ChAvgWork,
    TnrAvgAccessPairs,
}

#[derive(Clone, Copy, ValueEnum)]
enum XArg {
    Q,
    Qk,
    QkSquared,
    QSquared,
    N,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::HlTotalPerNode => Metric::HlTotalPerNode,
            MetricArg::ChEPlus => Metric::ChEPlus,
            MetricArg::ChEPlusPerNode => Metric::ChEPlusPerNode,
            MetricArg::ChAvgWork => Metric::ChAvgWork,
            MetricArg::TnrAvgAccessPairs => Metric::TnrAvgAccessPairs,
        }
    }
}

impl From<XArg> for XExpr {
    fn from(x: XArg) -> Self {
        match x {
            XArg::Q => XExpr::Q,
            XArg::Qk => XExpr::Qk,
            XArg::QkSquared => XExpr::QkSquared,
            XArg::QSquared => XExpr::QSquared,
            XArg::N => XExpr::N,
        }
    }
}

struct Loaded {
    graph: Graph,
    meta: Option<GtkqMeta>,
}

impl Global {
    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn report(&self, value: Value) -> Result<()> {
        let text = match self.format.unwrap_or(Format::Json) {
            Format::Json => serde_json::to_string_pretty(&value)? + "\n",
            Format::Csv => value_to_csv(&value)?,
        };
        self.emit(&text)
    }

    fn load(&self, args: &GraphArgs) -> Result<Loaded> {
        let text = read(&args.graph)?;
        let graph = Graph::from_text(&text).with_context(|| format!("parsing {}", args.graph.display()))?;
        if graph.node_count() > self.max_nodes {
            return Err(Error::CapExceeded { what: "node count", size: graph.node_count(), cap: self.max_nodes }.into());
        }
        let meta = match &args.meta {
            Some(path) => {
                let meta = GtkqMeta::from_json(&read(path)?)?;
                if meta.node_count() != graph.node_count() {
                    bail!("metadata describes {} nodes, graph has {}", meta.node_count(), graph.node_count());
                }
                Some(meta)
            }
            None => None,
        };
        Ok(Loaded { graph, meta })
    }

    fn family(&self, args: &FamilyArgs) -> Result<(Graph, GtkqMeta)> {
        let params = match args.scale {
            Some(e) => GtkqParams::with_scale(args.t, args.k, args.q, e),
            None => GtkqParams::new(args.t, args.k, args.q),
        };
        params.validate()?;
        let n = params.node_count()?;
        if n > self.max_nodes {
            return Err(Error::CapExceeded { what: "node count", size: n, cap: self.max_nodes }.into());
        }
        Ok(build_gtkq(&params)?)
    }

    fn strategy(&self, order: OrderArg) -> OrderStrategy {
        match order {
            OrderArg::ByHeight => OrderStrategy::ByHeight,
            OrderArg::EdgeDifference => OrderStrategy::EdgeDifference,
            OrderArg::Input => OrderStrategy::Input,
            OrderArg::Random => OrderStrategy::Random(self.seed),
        }
    }

    fn contract(&self, loaded: &Loaded, order: &OrderArgs) -> Result<ChIndex> {
        let ord = build_order(&loaded.graph, self.strategy(order.order), loaded.meta.as_ref())?;
        Ok(contract_with_config(&loaded.graph, &ord, ContractionConfig { hop_limit: order.hop_limit })?)
    }

    fn labels(&self, loaded: &Loaded, method: LabelMethod, order: &OrderArgs) -> Result<Labeling> {
        match method {
            LabelMethod::Structural => {
                let meta = loaded.meta.as_ref().ok_or_else(|| anyhow!("structural labels need --meta"))?;
                Ok(structural_labeling(&loaded.graph, meta)?)
            }
            LabelMethod::Ch => Ok(ch_labeling(&self.contract(loaded, order)?)?),
        }
    }

    fn hd_caps(&self) -> HdCaps {
        HdCaps { all_pairs: self.all_pairs_cap, max_sets: self.max_sets, max_paths: self.max_paths }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Flat CSV view of a report: one row per array element (or one row for an
/// object); nested values are written as JSON.
fn value_to_csv(value: &Value) -> Result<String> {
    let rows: Vec<&serde_json::Map<String, Value>> = match value {
        Value::Array(items) => items.iter().filter_map(Value::as_object).collect(),
        Value::Object(map) => vec![map],
        _ => bail!("report is not tabular"),
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    if let Some(first) = rows.first() {
        w.write_record(first.keys())?;
        for row in &rows {
            w.write_record(row.values().map(|v| match v {
                Value::String(s) => s.clone(),
                Value::Null => String::new(),
                other => other.to_string(),
            }))?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn all_ordered_pairs(n: usize, cap: usize) -> Result<Vec<(NodeId, NodeId)>> {
    if n * n > cap {
        return Err(Error::CapExceeded { what: "query pairs", size: n * n, cap }.into());
    }
    Ok((0..n).flat_map(|s| (0..n).map(move |t| (s, t))).collect())
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match cli.cmd {
        Cmd::Gen(args) => {
            let (graph, meta) = g.family(&args)?;
            g.emit(&graph.to_text())?;
            let meta_path = args.meta_out.or_else(|| g.out.as_deref().map(|p| with_suffix(p, ".meta.json")));
            if let Some(path) = meta_path {
                fs::write(&path, meta.to_json()?).with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Cmd::Stats(args) => {
            let loaded = g.load(&args)?;
            let mut report = json!({ "graph": graph_stats(&loaded.graph, g.all_pairs_cap)? });
            if let Some(meta) = &loaded.meta {
                report["family"] = serde_json::to_value(family_stats(&loaded.graph, meta, g.all_pairs_cap)?)?;
            }
            g.report(report)?;
        }
        Cmd::Hd { graph, definition } => {
            let loaded = g.load(&graph)?;
            let def = match definition {
                DefinitionArg::Classic => Definition::Classic,
                DefinitionArg::Refined => Definition::Refined,
            };
            g.report(serde_json::to_value(highway_dimension(&loaded.graph, def, &g.hd_caps())?)?)?;
        }
        Cmd::Hl(cmd) => hl(g, cmd)?,
        Cmd::Ch(cmd) => ch(g, cmd)?,
        Cmd::Tnr(cmd) => tnr(g, cmd)?,
        Cmd::X3c(cmd) => x3c(g, cmd)?,
        Cmd::Bench(cmd) => bench(g, cmd)?,
    }
    Ok(())
}

fn hl(g: &Global, cmd: HlCmd) -> Result<()> {
    match cmd {
        HlCmd::Build { graph, method, order, dump } => {
            let loaded = g.load(&graph)?;
            let labels = g.labels(&loaded, method, &order)?;
            let apsp = all_pairs(&loaded.graph, g.all_pairs_cap)?;
            if let CoverCheck::WrongDistance { .. } | CoverCheck::Violation { .. } = verify_cover(&apsp, &labels)? {
                return Err(Error::Invariant("labeling violates the cover property".into()).into());
            }
            if dump {
                g.emit(&labels.to_text())?;
            } else {
                g.report(json!({ "stats": label_stats(&labels), "cover": "ok" }))?;
            }
        }
        HlCmd::Query { graph, method, order, pair } => {
            let loaded = g.load(&graph)?;
            loaded.graph.check_node(pair.source)?;
            loaded.graph.check_node(pair.target)?;
            let labels = g.labels(&loaded, method, &order)?;
            g.report(serde_json::to_value(hl_query(&labels, pair.source, pair.target))?)?;
        }
        HlCmd::Census(args) => {
            let (graph, meta) = g.family(&args)?;
            let census = path_class_census(&meta);
            let structural = structural_labeling(&graph, &meta)?;
            let p = meta.params;
            let report = json!({
                "classes": census.classes,
                "structural_total": structural.total(),
                "label_bound": cross_copy_label_bound(p.t, p.k, p.q),
            });
            if !census.all_match() {
                g.report(report)?;
                return Err(Error::Invariant("path class count differs from the closed form".into()).into());
            }
            g.report(report)?;
        }
        HlCmd::Opt(args) => {
            let loaded = g.load(&args)?;
            let (labels, total) = exact_min_total_labeling(&loaded.graph, g.exact_hl_cap)?;
            g.report(json!({ "total": total, "labels": labels.to_text().lines().collect::<Vec<_>>() }))?;
        }
    }
    Ok(())
}

fn ch(g: &Global, cmd: ChCmd) -> Result<()> {
    match cmd {
        ChCmd::Build { graph, order, dump } => {
            let loaded = g.load(&graph)?;
            let idx = g.contract(&loaded, &order)?;
            if dump {
                g.emit(&idx.shortcut_dump())?;
            } else {
                let pairs = all_ordered_pairs(loaded.graph.node_count(), g.max_pairs)?;
                g.report(serde_json::to_value(ch_stats(&idx, &pairs, loaded.meta.as_ref())?)?)?;
            }
        }
        ChCmd::Query { graph, order, pair } => {
            let loaded = g.load(&graph)?;
            let idx = g.contract(&loaded, &order)?;
            g.report(serde_json::to_value(ch_query(&idx, pair.source, pair.target)?)?)?;
        }
        ChCmd::Census { family, order } => {
            let (graph, meta) = g.family(&family)?;
            let strategy = g.strategy(order);
            let idx = contract_with_config(&graph, &build_order(&graph, strategy, Some(&meta))?, ContractionConfig::default())?;
            let p = meta.params;
            let edges = leaf_edge_census(&meta, &idx);
            let mut report = json!({
                "order": strategy,
                "e_plus": idx.shortcuts.len(),
                "leaf_shortcuts": edges.leaf_shortcuts,
                "same_copy_leaf_edges": edges.same_copy_leaf_edges,
                "any_order_bound": any_order_leaf_bound(p.t, p.k, p.q),
            });
            let mut violations = 0;
            if strategy == OrderStrategy::ByHeight {
                let census = leaf_shortcut_census(&meta, &idx)?;
                violations = census.criterion_violations;
                report["by_height"] = serde_json::to_value(census)?;
            }
            g.report(report)?;
            if violations > 0 {
                return Err(Error::Invariant(format!("{violations} shortcut criterion violations")).into());
            }
        }
    }
    Ok(())
}

fn tnr(g: &Global, cmd: TnrCmd) -> Result<()> {
    let build = |loaded: &Loaded, order: &OrderArgs, transit: Option<usize>| -> Result<TnrIndex> {
        Ok(build_tnr(&g.contract(loaded, order)?, transit)?)
    };
    match cmd {
        TnrCmd::Build { graph, order, transit, dump } => {
            let loaded = g.load(&graph)?;
            let idx = build(&loaded, &order, transit)?;
            if dump {
                g.emit(&idx.access_dump())?;
            } else {
                g.report(json!({
                    "transit": idx.transit.len(),
                    "access": access_stats(&idx, g.max_pairs)?,
                }))?;
            }
        }
        TnrCmd::Query { graph, order, transit, pair } => {
            let loaded = g.load(&graph)?;
            let idx = build(&loaded, &order, transit)?;
            g.report(serde_json::to_value(tnr_query(&idx, pair.source, pair.target)?)?)?;
        }
        TnrCmd::Census { family, transit } => {
            let (graph, meta) = g.family(&family)?;
            let order = build_order(&graph, OrderStrategy::ByHeight, Some(&meta))?;
            let idx = build_tnr(&contract_with_config(&graph, &order, ContractionConfig::default())?, transit)?;
            g.report(json!({
                "transit": idx.transit.len(),
                "regular": regular_census(&meta, &idx),
                "access": access_stats(&idx, g.max_pairs)?,
            }))?;
        }
    }
    Ok(())
}

fn x3c(g: &Global, cmd: X3cCmd) -> Result<()> {
    let load = |path: &Path| -> Result<X3cInstance> {
        X3cInstance::from_text(&read(path)?).with_context(|| format!("parsing {}", path.display()))
    };
    match cmd {
        X3cCmd::Solve { input } => {
            let inst = load(&input)?;
            g.report(json!({ "cover": x3c_solve(&inst) }))?;
        }
        X3cCmd::Reduce { input, tags } => {
            let mhl = reduce_x3c_to_mhl(&load(&input)?)?;
            g.emit(&mhl.graph.to_text())?;
            if let Some(path) = tags.or_else(|| g.out.as_deref().map(|p| with_suffix(p, ".tags.json"))) {
                fs::write(&path, serde_json::to_string_pretty(&mhl.tags())?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
        }
        X3cCmd::Decide { input } => {
            let inst = load(&input)?;
            let mhl = reduce_x3c_to_mhl(&inst)?;
            let caps = MhlCaps { max_nodes: g.mhl_max_nodes, max_pairs: g.mhl_max_pairs };
            let decision = exact_mhl_decide(&mhl.graph, mhl.k, &caps)?;
            let cover = x3c_solve(&inst);
            let (mhl_yes, labeling) = match decision {
                MhlDecision::Yes(labels) => (true, Some(labels)),
                MhlDecision::No => (false, None),
            };
            g.report(json!({
                "k": mhl.k,
                "x3c_yes": cover.is_some(),
                "mhl_yes": mhl_yes,
                "cover": cover,
                "labeling": labeling,
            }))?;
            if cover.is_some() != mhl_yes {
                return Err(Error::Invariant("X3C and hub-labeling answers disagree".into()).into());
            }
        }
    }
    Ok(())
}

fn bench(g: &Global, cmd: BenchCmd) -> Result<()> {
    match cmd {
        BenchCmd::Run { t, k, q, sample_pairs, hd_max_nodes } => {
            let spec = GridSpec {
                t,
                k,
                q,
                seed: g.seed,
                max_nodes: g.max_nodes,
                max_pairs: g.max_pairs,
                sample_pairs,
                hd_max_nodes,
            };
            let start = Instant::now();
            let report = run_experiment(&spec)?;
            for skip in &report.skipped {
                eprintln!("skipped ({}, {}, {}): {}", skip.t, skip.k, skip.q, skip.reason);
            }
            eprintln!("{} cells in {:.2?}", report.rows.len(), start.elapsed());
            match g.format.unwrap_or(Format::Csv) {
                Format::Csv => g.emit(&rows_to_csv(&report.rows)?)?,
                Format::Json => g.emit(&(serde_json::to_string_pretty(&report.rows)? + "\n"))?,
            }
        }
        BenchCmd::Fit { input, metric, x } => {
            let rows = rows_from_csv(&read(&input)?)?;
            let fits = match metric {
                Some(m) => vec![fit_slopes(&rows, m.into(), x.into())?],
                None => vec![
                    fit_slopes(&rows, Metric::ChEPlusPerNode, XExpr::Qk)?,
                    fit_slopes(&rows, Metric::ChAvgWork, XExpr::Qk)?,
                    fit_slopes(&rows, Metric::TnrAvgAccessPairs, XExpr::Q)?,
                    fit_slopes(&rows, Metric::HlTotalPerNode, XExpr::Qk)?,
                ],
            };
            g.report(serde_json::to_value(fits)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let cap = err.chain().any(|e| e.downcast_ref::<Error>().is_some_and(Error::is_cap));
            ExitCode::from(if cap { 2 } else { 1 })
        }
    }
}
