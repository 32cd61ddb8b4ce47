//! Standard-library companion of `graphene-core`: a thread-pool executor,
//! edge-list and title loaders, metrics export, the declarative pipeline
//! runner behind the `graphene` command, and synthetic benchmarks.

pub mod bench;
pub mod config;
pub mod format;
pub mod load;
pub mod metrics;
pub mod pipeline;
pub mod pool;

pub use graphene_core;

pub use config::{EngineSection, EngineSettings, PipelineConfig, Stage};
pub use load::{load_edges, load_titles, LoadError, Mode};
pub use metrics::{export_metrics, write_metrics, MetricsFormat};
pub use pipeline::{run_pipeline, write_outputs, PipelineError, Report, Row, Value};
pub use pool::ThreadPool;
