//! Plain-text file formats.
//!
//! Every writer is deterministic: floats are printed in Rust's shortest
//! round-trip form, so reading a file back reproduces the values bit for bit
//! and rewriting it reproduces the bytes.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::{Error, Result};

pub mod dataset;
pub mod manifest;
pub mod model;
pub mod table;
pub mod trace;

pub use dataset::{read_dataset, write_dataset, write_predictions};
pub use manifest::{read_key_values, write_manifest, KeyValues};
pub use model::{read_model, write_forest, write_mlp, Model};
pub use table::{read_truth_table, write_truth_table};
pub use trace::write_trace;

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(Error::io(path))
}

/// Writes a file through a buffered writer, attaching the path to IO errors.
pub fn write_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let file = File::create(path).map_err(Error::io(path))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush().map_err(Error::io(path))
}

pub fn io_err(e: std::io::Error) -> Error {
    Error::Io { path: "<stream>".into(), source: e }
}

/// Non-blank lines with `#` comments stripped, numbered from 1.
pub(crate) fn content_lines(r: impl BufRead) -> impl Iterator<Item = Result<(usize, String)>> {
    r.lines().enumerate().filter_map(|(k, line)| match line {
        Err(e) => Some(Err(io_err(e))),
        Ok(l) => {
            let body = l.split('#').next().unwrap_or("").trim().to_string();
            (!body.is_empty()).then_some(Ok((k + 1, body)))
        }
    })
}

pub(crate) fn parse_num<T: std::str::FromStr>(line: usize, what: &str, s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::parse(line, format!("invalid {what} `{s}`")))
}
