//! Export of the communication meter as CSV or JSON.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use graphene_core::ExchangeRecord;
use serde::{Deserialize, Serialize};

pub const CSV_HEADER: [&str; 4] = ["exchange", "iteration", "bytes", "tuples"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MetricsFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Serialize)]
struct Row<'a> {
    exchange: &'a str,
    iteration: u32,
    bytes: u64,
    tuples: u64,
}

impl<'a> From<&'a ExchangeRecord> for Row<'a> {
    fn from(r: &'a ExchangeRecord) -> Self {
        Row {
            exchange: &r.exchange,
            iteration: r.iteration,
            bytes: r.bytes,
            tuples: r.tuples,
        }
    }
}

/// Writes one row per (exchange, iteration). The CSV header is always
/// written, so an empty record list yields a header-only file.
pub fn write_metrics(
    records: &[ExchangeRecord],
    out: impl Write,
    format: MetricsFormat,
) -> io::Result<()> {
    match format {
        MetricsFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(out);
            w.write_record(CSV_HEADER)?;
            for r in records {
                w.serialize(Row::from(r))?;
            }
            w.flush()
        }
        MetricsFormat::Json => {
            let rows: Vec<Row<'_>> = records.iter().map(Row::from).collect();
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, &rows)?;
            writeln!(out)
        }
    }
}

pub fn export_metrics(
    records: &[ExchangeRecord],
    path: &Path,
    format: MetricsFormat,
) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_metrics(records, &mut out, format)?;
    out.flush()
}
