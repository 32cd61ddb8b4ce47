//! Engine settings and the declarative pipeline file.
//!
//! A pipeline file is TOML: top-level keys name the inputs and outputs, an
//! optional `[engine]` table sets engine options and `[[stage]]` entries list
//! the stages in order.
//!
//! ```toml
//! edges = "links.txt"
//! titles = "titles.txt"
//! output = "top.tsv"
//! metrics = "metrics.csv"
//!
//! [engine]
//! partitions = 8
//! partitioner = "hash2d"
//!
//! [[stage]]
//! op = "subgraph"
//! min_weight = 0.5
//!
//! [[stage]]
//! op = "pagerank"
//! iterations = 20
//!
//! [[stage]]
//! op = "top"
//! k = 20
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use graphene_core::partition::PartitionerKind;
use graphene_core::{
    Config, EdgePartitioner, Runtime, ScanMode, ScanPolicy, ScanStrategy, SkipStale,
};
use serde::Deserialize;

use crate::metrics::MetricsFormat;
use crate::pool::{logical_cores, ThreadPool};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PartitionerName {
    /// Keep the loader's edge partitions.
    Input,
    /// Hash of the whole edge.
    Random,
    /// Hash of the source vertex.
    Source,
    /// Two-dimensional grid over source and destination hashes.
    Hash2d,
}

impl From<PartitionerName> for PartitionerKind {
    fn from(n: PartitionerName) -> Self {
        match n {
            PartitionerName::Input => PartitionerKind::Input,
            PartitionerName::Random => PartitionerKind::Random1D,
            PartitionerName::Source => PartitionerKind::SrcHash1D,
            PartitionerName::Hash2d => PartitionerKind::Hash2D,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScanName {
    /// Pick per superstep from the active vertex fraction.
    Auto,
    /// Always scan every edge.
    Seq,
    /// Always probe the vertex index.
    Index,
}

impl From<ScanName> for ScanPolicy {
    fn from(n: ScanName) -> Self {
        match n {
            ScanName::Auto => ScanPolicy::Auto,
            ScanName::Seq => ScanPolicy::Force(ScanMode::SequentialEdgeScan),
            ScanName::Index => ScanPolicy::Force(ScanMode::VertexIndexScan),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SkipName {
    None,
    In,
    Out,
    Both,
    Either,
}

impl From<SkipName> for SkipStale {
    fn from(n: SkipName) -> Self {
        match n {
            SkipName::None => SkipStale::None,
            SkipName::In => SkipStale::In,
            SkipName::Out => SkipStale::Out,
            SkipName::Both => SkipStale::Both,
            SkipName::Either => SkipStale::Either,
        }
    }
}

/// Partial engine settings, as found in a pipeline file or on the command
/// line. Unset fields leave the current value alone.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineSection {
    pub partitions: Option<usize>,
    pub partitioner: Option<PartitionerName>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub scan: Option<ScanName>,
    pub scan_threshold: Option<f64>,
    pub incremental: Option<bool>,
    pub join_elimination: Option<bool>,
    pub verify_access: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EngineSettings {
    /// Vertex and edge partition count.
    pub partitions: usize,
    pub partitioner: PartitionerName,
    pub seed: u64,
    pub workers: usize,
    pub scan: ScanName,
    pub scan_threshold: f64,
    pub incremental: bool,
    pub join_elimination: bool,
    pub verify_access: bool,
}

impl Default for EngineSettings {
    fn default() -> Self {
        EngineSettings {
            partitions: 4,
            partitioner: PartitionerName::Hash2d,
            seed: graphene_core::partition::DEFAULT_SEED,
            workers: logical_cores(),
            scan: ScanName::Auto,
            scan_threshold: ScanStrategy::DEFAULT_THRESHOLD,
            incremental: true,
            join_elimination: true,
            verify_access: false,
        }
    }
}

impl EngineSettings {
    pub fn apply(&mut self, s: &EngineSection) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = s.$field { self.$field = v; })*
            };
        }
        take!(
            partitions,
            partitioner,
            seed,
            workers,
            scan,
            scan_threshold,
            incremental,
            join_elimination,
            verify_access
        );
    }

    pub fn with(mut self, s: &EngineSection) -> Self {
        self.apply(s);
        self
    }

    pub fn config(&self) -> Config {
        let edge_partitioner = match self.partitioner {
            PartitionerName::Input => EdgePartitioner::input(),
            kind => EdgePartitioner::new(kind.into(), self.partitions),
        }
        .with_seed(self.seed);
        Config {
            partitions: self.partitions,
            edge_partitioner,
            incremental: self.incremental,
            join_elimination: self.join_elimination,
            verify_access: self.verify_access,
            scan: ScanStrategy {
                policy: self.scan.into(),
                threshold: self.scan_threshold,
                ..ScanStrategy::default()
            },
        }
    }

    pub fn runtime(&self) -> graphene_core::Result<Arc<Runtime>> {
        let pool = ThreadPool::new(self.workers)
            .map_err(|e| graphene_core::Error::Config(format!("cannot start workers: {e}")))?;
        Runtime::new(self.config(), pool)
    }
}

/// One pipeline stage.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase", deny_unknown_fields)]
pub enum Stage {
    /// Keeps the edges whose weight lies in `[min_weight, max_weight]`.
    Subgraph {
        min_weight: Option<f64>,
        max_weight: Option<f64>,
    },
    /// Fixed-iteration PageRank, or the delta program when `tolerance` is set.
    Pagerank {
        iterations: Option<usize>,
        reset: Option<f64>,
        tolerance: Option<f64>,
        skip: Option<SkipName>,
    },
    /// Weakly connected components labeled by their smallest vertex id.
    Cc { skip: Option<SkipName> },
    /// Contracts the edges lighter than `below`.
    Coarsen { below: f64 },
    /// Keeps the `k` best rows.
    Top { k: usize },
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Subgraph { .. } => "subgraph",
            Stage::Pagerank { .. } => "pagerank",
            Stage::Cc { .. } => "cc",
            Stage::Coarsen { .. } => "coarsen",
            Stage::Top { .. } => "top",
        }
    }

    fn is_algorithm(&self) -> bool {
        matches!(
            self,
            Stage::Pagerank { .. } | Stage::Cc { .. } | Stage::Coarsen { .. }
        )
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub edges: PathBuf,
    pub titles: Option<PathBuf>,
    /// Skip malformed input lines instead of failing.
    #[serde(default)]
    pub lenient: bool,
    /// Result file; standard output when absent.
    pub output: Option<PathBuf>,
    pub metrics: Option<PathBuf>,
    #[serde(default)]
    pub metrics_format: MetricsFormat,
    #[serde(default)]
    pub engine: EngineSection,
    #[serde(rename = "stage", default)]
    pub stages: Vec<Stage>,
}

/// The stage list in execution order.
#[derive(Clone, Debug, PartialEq)]
pub struct Plan<'a> {
    pub filters: Vec<&'a Stage>,
    pub algorithm: &'a Stage,
    pub top: Option<usize>,
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Reads a pipeline file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.edges);
        for p in [&mut cfg.titles, &mut cfg.output, &mut cfg.metrics]
            .into_iter()
            .flatten()
        {
            resolve(p);
        }
        Ok(cfg)
    }

    /// Checks the stage order: any number of subgraph stages, one
    /// algorithm, then at most one top stage.
    pub fn plan(&self) -> Result<Plan<'_>, String> {
        let mut stages = self.stages.iter().peekable();
        let mut filters = Vec::new();
        while let Some(s) = stages.next_if(|s| matches!(s, Stage::Subgraph { .. })) {
            filters.push(s);
        }
        let algorithm = match stages.next() {
            Some(s) if s.is_algorithm() => s,
            Some(s) => return Err(format!("expected an algorithm stage, found '{}'", s.name())),
            None => return Err("the stage list has no algorithm stage".into()),
        };
        let top = match stages.next() {
            Some(Stage::Top { k }) => Some(*k),
            Some(s) => {
                return Err(format!(
                    "unexpected stage '{}' after the algorithm",
                    s.name()
                ))
            }
            None => None,
        };
        if let Some(s) = stages.next() {
            return Err(format!("unexpected stage '{}' after 'top'", s.name()));
        }
        Ok(Plan {
            filters,
            algorithm,
            top,
        })
    }
}
