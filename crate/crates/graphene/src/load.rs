//! Edge-list and title-file readers.
//!
//! Edge lines hold `src dst [weight]` separated by whitespace or commas; the
//! weight defaults to 1.0. Title lines hold an id followed by the title text.
//! Blank lines and lines whose first non-blank character is `#` are ignored.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use graphene_core::{Collection, Runtime, VertexId};

pub const DEFAULT_WEIGHT: f64 = 1.0;

/// What to do with malformed lines.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    /// Fail and report every malformed line.
    #[default]
    Strict,
    /// Skip malformed lines and report them alongside the data.
    Lenient,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BadLine {
    /// 1-based line number.
    pub line: usize,
    pub reason: String,
}

impl fmt::Display for BadLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{} malformed line(s); first at {}", lines.len(), lines[0])]
    Parse { lines: Vec<BadLine> },
}

/// Parsed records plus the malformed lines skipped in lenient mode.
#[derive(Clone, Debug, PartialEq)]
pub struct Loaded<T> {
    pub records: Vec<T>,
    pub skipped: Vec<BadLine>,
}

pub type Edge = (VertexId, VertexId, f64);

fn fields(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|f| !f.is_empty())
}

fn vertex_id(field: &str) -> Result<VertexId, String> {
    field
        .parse()
        .map_err(|_| format!("invalid vertex id {field:?}"))
}

fn parse_edge(line: &str) -> Result<Edge, String> {
    let f: Vec<&str> = fields(line).collect();
    if !(2..=3).contains(&f.len()) {
        return Err(format!("expected 2 or 3 fields, found {}", f.len()));
    }
    let weight = match f.get(2) {
        Some(w) => w
            .parse::<f64>()
            .ok()
            .filter(|w| w.is_finite())
            .ok_or_else(|| format!("invalid weight {w:?}"))?,
        None => DEFAULT_WEIGHT,
    };
    Ok((vertex_id(f[0])?, vertex_id(f[1])?, weight))
}

fn parse_title(line: &str) -> Result<(VertexId, String), String> {
    let line = line.trim();
    let split = line
        .find(|c: char| c == ',' || c.is_whitespace())
        .unwrap_or(line.len());
    let id = vertex_id(&line[..split])?;
    let rest = line[split..].trim_start_matches(|c: char| c == ',' || c.is_whitespace());
    Ok((id, rest.trim_end().to_owned()))
}

fn parse_lines<T>(
    reader: impl BufRead,
    path: &Path,
    mode: Mode,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<Loaded<T>, LoadError> {
    let mut records = Vec::new();
    let mut bad = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| LoadError::Io {
            path: path.to_owned(),
            source,
        })?;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        match parse(body) {
            Ok(r) => records.push(r),
            Err(reason) => bad.push(BadLine {
                line: i + 1,
                reason,
            }),
        }
    }
    if mode == Mode::Strict && !bad.is_empty() {
        return Err(LoadError::Parse { lines: bad });
    }
    Ok(Loaded {
        records,
        skipped: bad,
    })
}

fn open(path: &Path) -> Result<BufReader<File>, LoadError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| LoadError::Io {
            path: path.to_owned(),
            source,
        })
}

pub fn parse_edges(reader: impl BufRead, mode: Mode) -> Result<Loaded<Edge>, LoadError> {
    parse_lines(reader, Path::new("<input>"), mode, parse_edge)
}

pub fn load_edges(path: &Path, mode: Mode) -> Result<Loaded<Edge>, LoadError> {
    parse_lines(open(path)?, path, mode, parse_edge)
}

pub fn parse_titles(
    reader: impl BufRead,
    mode: Mode,
) -> Result<Loaded<(VertexId, String)>, LoadError> {
    parse_lines(reader, Path::new("<input>"), mode, parse_title)
}

pub fn load_titles(path: &Path, mode: Mode) -> Result<Loaded<(VertexId, String)>, LoadError> {
    parse_lines(open(path)?, path, mode, parse_title)
}

/// Edge collection keyed by `(src, dst)`, split into the runtime's
/// partition count in input order.
pub fn edge_collection(rt: &Arc<Runtime>, edges: &[Edge]) -> Collection<(VertexId, VertexId), f64> {
    Collection::from_vec(rt, edges.iter().map(|&(s, d, w)| ((s, d), w)).collect())
}
