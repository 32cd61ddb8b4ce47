use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use graphene::bench::{run_bench, Workload};
use graphene::config::{PartitionerName, ScanName, SkipName};
use graphene::{
    export_metrics, run_pipeline, write_outputs, EngineSection, EngineSettings, MetricsFormat,
    PipelineConfig, PipelineError, Stage,
};

const USAGE: u8 = 1;
const DATA: u8 = 2;
const INTERNAL: u8 = 3;

/// Graph analytics on partitioned property graphs.
#[derive(Parser, Debug)]
#[command(name = "graphene", version)]
struct Cli {
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    io: IoArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct EngineArgs {
    /// Vertex and edge partition count.
    #[arg(long, global = true, env = "GRAPHENE_PARTITIONS")]
    partitions: Option<usize>,
    /// Edge placement strategy.
    #[arg(long, global = true, value_enum, env = "GRAPHENE_PARTITIONER")]
    partitioner: Option<PartitionerName>,
    /// Seed for edge placement and generated workloads [default: 42].
    #[arg(long, global = true, env = "GRAPHENE_SEED")]
    seed: Option<u64>,
    /// Worker threads [default: logical cores].
    #[arg(long, global = true, env = "GRAPHENE_WORKERS")]
    workers: Option<usize>,
    /// Edge scan strategy.
    #[arg(long, global = true, value_enum, env = "GRAPHENE_SCAN")]
    scan: Option<ScanName>,
    /// Active fraction below which the automatic strategy probes the index.
    #[arg(long, global = true, env = "GRAPHENE_SCAN_THRESHOLD")]
    scan_threshold: Option<f64>,
    /// Reship every vertex on each view refresh.
    #[arg(long, global = true, env = "GRAPHENE_NO_INCREMENTAL")]
    no_incremental: bool,
    /// Ship both endpoint sides regardless of declared access.
    #[arg(long, global = true, env = "GRAPHENE_NO_JOIN_ELIM")]
    no_join_elim: bool,
    /// Fail when a triplet function reads an undeclared side.
    #[arg(long, global = true, env = "GRAPHENE_VERIFY_ACCESS")]
    verify_access: bool,
}

impl EngineArgs {
    fn section(&self) -> EngineSection {
        EngineSection {
            partitions: self.partitions,
            partitioner: self.partitioner,
            seed: self.seed,
            workers: self.workers,
            scan: self.scan,
            scan_threshold: self.scan_threshold,
            incremental: self.no_incremental.then_some(false),
            join_elimination: self.no_join_elim.then_some(false),
            verify_access: self.verify_access.then_some(true),
        }
    }
}

#[derive(Args, Debug)]
struct IoArgs {
    /// Result file [default: standard output].
    #[arg(long, short, global = true, env = "GRAPHENE_OUTPUT")]
    output: Option<PathBuf>,
    /// Communication metrics file.
    #[arg(long, global = true, env = "GRAPHENE_METRICS")]
    metrics: Option<PathBuf>,
    #[arg(long, global = true, value_enum, env = "GRAPHENE_METRICS_FORMAT")]
    metrics_format: Option<MetricsFormat>,
    /// Skip malformed input lines instead of failing.
    #[arg(long, global = true, env = "GRAPHENE_LENIENT")]
    lenient: bool,
}

#[derive(Args, Clone, Debug)]
struct Input {
    /// Edge list: `src dst [weight]` per line.
    edges: PathBuf,
    /// Title file: `id title` per line.
    #[arg(long)]
    titles: Option<PathBuf>,
    /// Keep only the best K rows.
    #[arg(long)]
    top: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rank vertices with PageRank.
    Pagerank {
        #[command(flatten)]
        input: Input,
        /// Rounds in fixed mode; iteration cap with --tolerance.
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        reset: Option<f64>,
        /// Run until every rank change is below this value.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Stale-edge filter of the tolerance mode.
        #[arg(long, value_enum)]
        skip: Option<SkipName>,
    },
    /// Label weakly connected components.
    Cc {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum)]
        skip: Option<SkipName>,
    },
    /// Contract edges lighter than a threshold into super-vertices.
    Coarsen {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        below: f64,
    },
    /// Run a pipeline file.
    Pipeline { config: PathBuf },
    /// Time an algorithm on a generated random graph.
    Bench {
        #[arg(long, value_enum, default_value = "pagerank")]
        workload: Workload,
        #[arg(long, default_value_t = 10_000)]
        vertices: u64,
        #[arg(long, default_value_t = 50_000)]
        edges: usize,
        #[arg(long, default_value_t = 20)]
        iterations: usize,
    },
}

fn shortcut(input: Input, algorithm: Stage) -> PipelineConfig {
    let mut stages = vec![algorithm];
    if let Some(k) = input.top {
        stages.push(Stage::Top { k });
    }
    PipelineConfig {
        edges: input.edges,
        titles: input.titles,
        lenient: false,
        output: None,
        metrics: None,
        metrics_format: MetricsFormat::default(),
        engine: EngineSection::default(),
        stages,
    }
}

fn run_config(mut cfg: PipelineConfig, cli: &Cli) -> Result<(), PipelineError> {
    cfg.lenient |= cli.io.lenient;
    if cli.io.output.is_some() {
        cfg.output = cli.io.output.clone();
    }
    if cli.io.metrics.is_some() {
        cfg.metrics = cli.io.metrics.clone();
    }
    if let Some(f) = cli.io.metrics_format {
        cfg.metrics_format = f;
    }
    let settings = EngineSettings::default()
        .with(&cfg.engine)
        .with(&cli.engine.section());
    let report = run_pipeline(&cfg, &settings)?;
    for (file, bad) in &report.skipped {
        eprintln!("warning: skipped {file} {bad}");
    }
    write_outputs(&cfg, &report)?;
    if cfg.output.is_none() {
        print!("{}", report.render());
    }
    Ok(())
}

fn bench(cli: &Cli, workload: Workload, vertices: u64, edges: usize, iterations: usize) -> u8 {
    let settings = EngineSettings::default().with(&cli.engine.section());
    let report = match run_bench(&settings, workload, vertices, edges, iterations) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return match e {
                graphene::graphene_core::Error::Config(_) => USAGE,
                _ => INTERNAL,
            };
        }
    };
    let line = format!(
        "workload={} seconds={:.3} iterations={} total_bytes={} view_bytes={} message_bytes={} checksum={}\n",
        report.workload.name(),
        report.elapsed.as_secs_f64(),
        report.iterations,
        report.total_bytes,
        report.view_bytes,
        report.message_bytes,
        report.checksum,
    );
    match &cli.io.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &line) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return DATA;
            }
        }
        None => print!("{line}"),
    }
    if let Some(path) = &cli.io.metrics {
        let format = cli.io.metrics_format.unwrap_or_default();
        if let Err(e) = export_metrics(&report.metrics, path, format) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return DATA;
        }
    }
    0
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Pipeline { config } => match PipelineConfig::load(config) {
            Ok(cfg) => run_config(cfg, &cli),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(USAGE);
            }
        },
        Command::Pagerank {
            input,
            iterations,
            reset,
            tolerance,
            skip,
        } => {
            let stage = Stage::Pagerank {
                iterations: *iterations,
                reset: *reset,
                tolerance: *tolerance,
                skip: *skip,
            };
            run_config(shortcut(input.clone(), stage), &cli)
        }
        Command::Cc { input, skip } => {
            run_config(shortcut(input.clone(), Stage::Cc { skip: *skip }), &cli)
        }
        Command::Coarsen { input, below } => run_config(
            shortcut(input.clone(), Stage::Coarsen { below: *below }),
            &cli,
        ),
        Command::Bench {
            workload,
            vertices,
            edges,
            iterations,
        } => return ExitCode::from(bench(&cli, *workload, *vertices, *edges, *iterations)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
