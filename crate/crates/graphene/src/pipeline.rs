//! The end-to-end pipeline: load, optional title join, graph construction,
//! optional subgraph filters, one algorithm, optional top-K, all in one
//! process.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::sync::Arc;

use graphene_core::algo::{
    coarsen, connected_components_with, page_rank, page_rank_tolerance, DeltaPageRank,
    DEFAULT_MAX_ITERATIONS, DEFAULT_RESET,
};
use graphene_core::{Collection, ExchangeRecord, PropertyGraph, Runtime, SkipStale, VertexId};

use crate::config::{EngineSettings, PipelineConfig, Stage};
use crate::format::{significant, SCORE_DIGITS};
use crate::load::{edge_collection, load_edges, load_titles, BadLine, LoadError, Mode};
use crate::metrics::export_metrics;

pub const DEFAULT_ITERATIONS: usize = 20;

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Engine(#[from] graphene_core::Error),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A failure tagged with the stage that raised it.
#[derive(Debug, thiserror::Error)]
#[error("stage '{stage}' failed: {failure}")]
pub struct PipelineError {
    pub stage: &'static str,
    #[source]
    pub failure: Failure,
}

impl PipelineError {
    pub fn new(stage: &'static str, failure: impl Into<Failure>) -> Self {
        PipelineError {
            stage,
            failure: failure.into(),
        }
    }

    /// Process exit status: 1 for invalid configuration, 2 for bad input
    /// data or files, 3 for engine failures.
    pub fn exit_code(&self) -> u8 {
        match &self.failure {
            Failure::Config(_) | Failure::Engine(graphene_core::Error::Config(_)) => 1,
            Failure::Load(_) | Failure::Io(_) => 2,
            Failure::Engine(_) => 3,
        }
    }
}

fn at<F: Into<Failure>>(stage: &'static str) -> impl FnOnce(F) -> PipelineError {
    move |f| PipelineError::new(stage, f)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Rank(f64),
    Component(VertexId),
    /// Number of original vertices behind a component or super-vertex.
    Members(u64),
}

impl Value {
    fn column(&self) -> &'static str {
        match self {
            Value::Rank(_) => "rank",
            Value::Component(_) => "component",
            Value::Members(_) => "members",
        }
    }

    fn render(&self) -> String {
        match self {
            Value::Rank(r) => significant(*r, SCORE_DIGITS),
            Value::Component(c) => c.to_string(),
            Value::Members(m) => m.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub id: VertexId,
    pub value: Value,
    pub title: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub rows: Vec<Row>,
    /// Supersteps run by the algorithm.
    pub iterations: usize,
    /// Malformed lines skipped in lenient mode, with the file they came from.
    pub skipped: Vec<(&'static str, BadLine)>,
    pub metrics: Vec<ExchangeRecord>,
}

impl Report {
    /// Tab-separated result table with a header line.
    pub fn render(&self) -> String {
        let column = self.rows.first().map_or("value", |r| r.value.column());
        let mut out = format!("id\t{column}\ttitle\n");
        for r in &self.rows {
            let title = r.title.as_deref().unwrap_or("");
            let _ = writeln!(out, "{}\t{}\t{}", r.id, r.value.render(), title);
        }
        out
    }
}

/// Best first: higher ranks and larger memberships, then smaller ids.
fn by_score(a: &Row, b: &Row) -> Ordering {
    let key = |r: &Row| match r.value {
        Value::Rank(x) => x,
        Value::Members(m) => m as f64,
        Value::Component(_) => 0.0,
    };
    key(b).total_cmp(&key(a)).then(a.id.cmp(&b.id))
}

fn rows_of<T: graphene_core::Data>(
    c: &Collection<VertexId, T>,
    value: impl Fn(&T) -> Value,
) -> Vec<Row> {
    c.iter()
        .map(|(id, v)| Row {
            id: *id,
            value: value(v),
            title: None,
        })
        .collect()
}

type Graph = PropertyGraph<String, f64>;

fn run_algorithm(g: &Graph, stage: &Stage) -> Result<(Vec<Row>, usize), graphene_core::Error> {
    match *stage {
        Stage::Pagerank {
            iterations,
            reset,
            tolerance: None,
            ..
        } => {
            let n = iterations.unwrap_or(DEFAULT_ITERATIONS);
            let ranks = page_rank(g, n, reset.unwrap_or(DEFAULT_RESET))?;
            Ok((rows_of(&ranks, |r| Value::Rank(*r)), n))
        }
        Stage::Pagerank {
            iterations,
            reset,
            tolerance: Some(tolerance),
            skip,
        } => {
            let prog = DeltaPageRank {
                reset: reset.unwrap_or(DEFAULT_RESET),
                tolerance,
                skip: skip.map_or(SkipStale::Out, Into::into),
                max_iterations: iterations.unwrap_or(DEFAULT_MAX_ITERATIONS),
            };
            let (out, stats) = page_rank_tolerance(g, &prog)?;
            Ok((
                rows_of(&out.vertices(), |s| Value::Rank(s.rank)),
                stats.rounds(),
            ))
        }
        Stage::Cc { skip } => {
            let (out, stats) =
                connected_components_with(g, skip.map_or(SkipStale::Either, Into::into))?;
            Ok((
                rows_of(&out.vertices(), |c| Value::Component(c.0)),
                stats.rounds(),
            ))
        }
        Stage::Coarsen { below } => {
            let counted = g.map_v(|_, _| 1u64);
            let out = coarsen(&counted, |t| *t.attr() < below, |a, b| a + b)?;
            Ok((rows_of(&out.vertices(), |m| Value::Members(*m)), 0))
        }
        Stage::Subgraph { .. } | Stage::Top { .. } => {
            unreachable!("plan() only yields algorithm stages here")
        }
    }
}

/// Component rows become one row per component with its size.
fn component_sizes(rows: &[Row]) -> Vec<Row> {
    let mut sizes: BTreeMap<VertexId, u64> = BTreeMap::new();
    for r in rows {
        if let Value::Component(c) = r.value {
            *sizes.entry(c).or_default() += 1;
        }
    }
    sizes
        .into_iter()
        .map(|(id, n)| Row {
            id,
            value: Value::Members(n),
            title: None,
        })
        .collect()
}

fn join_titles(rt: &Arc<Runtime>, rows: &mut [Row], titles: &Collection<VertexId, String>) {
    let keys = Collection::from_vec(rt, rows.iter().map(|r| (r.id, ())).collect());
    let found: BTreeMap<VertexId, String> = keys
        .left_join(titles)
        .iter()
        .filter_map(|(id, (_, t))| t.clone().map(|t| (*id, t)))
        .collect();
    for r in rows {
        r.title = found.get(&r.id).cloned();
    }
}

pub fn run_pipeline(
    cfg: &PipelineConfig,
    settings: &EngineSettings,
) -> Result<Report, PipelineError> {
    let plan = cfg
        .plan()
        .map_err(|e| PipelineError::new("config", Failure::Config(e)))?;
    let rt = settings.runtime().map_err(at("engine"))?;
    let mode = if cfg.lenient {
        Mode::Lenient
    } else {
        Mode::Strict
    };

    let edges = load_edges(&cfg.edges, mode).map_err(at("load"))?;
    let mut skipped: Vec<(&'static str, BadLine)> =
        edges.skipped.into_iter().map(|b| ("edges", b)).collect();
    let titles = match &cfg.titles {
        Some(path) => {
            let t = load_titles(path, mode).map_err(at("titles"))?;
            skipped.extend(t.skipped.into_iter().map(|b| ("titles", b)));
            Some(Collection::from_vec(&rt, t.records))
        }
        None => None,
    };

    let vertices = titles.clone().unwrap_or_else(|| Collection::empty(&rt));
    let mut g = PropertyGraph::from_collections(
        &vertices,
        &edge_collection(&rt, &edges.records),
        |a: &String, _| a.clone(),
        String::new(),
    )
    .map_err(at("graph"))?;

    for f in &plan.filters {
        if let Stage::Subgraph {
            min_weight,
            max_weight,
        } = **f
        {
            let lo = min_weight.unwrap_or(f64::NEG_INFINITY);
            let hi = max_weight.unwrap_or(f64::INFINITY);
            g = g
                .subgraph(|_, _| true, |t| (lo..=hi).contains(t.attr()))
                .map_err(at("subgraph"))?;
        }
    }

    let (mut rows, iterations) =
        run_algorithm(&g, plan.algorithm).map_err(at(plan.algorithm.name()))?;
    match (plan.algorithm, plan.top) {
        (Stage::Cc { .. }, Some(_)) => {
            rows = component_sizes(&rows);
            rows.sort_by(by_score);
        }
        (Stage::Cc { .. }, None) => rows.sort_by_key(|r| r.id),
        _ => rows.sort_by(by_score),
    }
    if let Some(k) = plan.top {
        rows.truncate(k);
    }
    if let Some(t) = &titles {
        join_titles(&rt, &mut rows, t);
    }
    Ok(Report {
        rows,
        iterations,
        skipped,
        metrics: rt.meter().records(),
    })
}

/// Writes the result table and metrics files named in the configuration.
pub fn write_outputs(cfg: &PipelineConfig, report: &Report) -> Result<(), PipelineError> {
    if let Some(path) = &cfg.output {
        std::fs::write(path, report.render()).map_err(at("output"))?;
    }
    if let Some(path) = &cfg.metrics {
        export_metrics(&report.metrics, path, cfg.metrics_format).map_err(at("metrics"))?;
    }
    Ok(())
}
