//! Dataset CSV: header `a_1,...,a_K,rho,f_star,converged,seed`, one labelled
//! auxiliary array per line, spins as `-1`/`1`, `converged` as `true`/`false`.

use std::io::{Read, Write};
use std::path::Path;

use revising_core::datagen::DatasetRow;
use revising_core::ising::AuxiliaryArray;

use super::{open, write_file};
use crate::{Error, Result};

const TAIL: [&str; 4] = ["rho", "f_star", "converged", "seed"];

pub fn format_dataset(rows: &[DatasetRow], w: &mut dyn Write) -> Result<()> {
    let k = rows.first().map_or(0, |r| r.aux.len());
    let mut out = csv::Writer::from_writer(w);
    let header: Vec<String> = (1..=k).map(|i| format!("a_{i}")).chain(TAIL.iter().map(|s| s.to_string())).collect();
    out.write_record(&header)?;
    for r in rows {
        if r.aux.len() != k {
            return Err(Error::Config(format!("dataset rows have {} and {} auxiliary spins", k, r.aux.len())));
        }
        let record: Vec<String> = r
            .aux
            .as_slice()
            .iter()
            .map(|s| s.to_string())
            .chain([r.rho.to_string(), r.f_star.to_string(), r.converged.to_string(), r.seed.to_string()])
            .collect();
        out.write_record(&record)?;
    }
    out.flush().map_err(super::io_err)?;
    Ok(())
}

pub fn write_dataset(path: &Path, rows: &[DatasetRow]) -> Result<()> {
    write_file(path, |w| format_dataset(rows, w))
}

/// Reads dataset rows, grouping the auxiliary spins `alpha` per truth-table
/// row (pass 1 when only the flat features matter).
pub fn parse_dataset(r: impl Read, alpha: usize) -> Result<Vec<DatasetRow>> {
    let mut reader = csv::Reader::from_reader(r);
    let header = reader.headers()?.clone();
    let n = header.len();
    if n < TAIL.len() || header.iter().skip(n - TAIL.len()).ne(TAIL) {
        return Err(Error::parse(1, "header must end in rho,f_star,converged,seed"));
    }
    let k = n - TAIL.len();
    if header.iter().take(k).enumerate().any(|(i, h)| h != format!("a_{}", i + 1)) {
        return Err(Error::parse(1, "auxiliary columns must be a_1..a_K"));
    }
    let alpha = if k == 0 { 0 } else { alpha.max(1) };
    if alpha > 0 && !k.is_multiple_of(alpha) {
        return Err(Error::parse(1, format!("{k} auxiliary columns do not split into groups of {alpha}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let field = |j: usize| rec.get(j).unwrap_or("");
        let spins = (0..k)
            .map(|j| match field(j) {
                "1" => Ok(1),
                "-1" => Ok(-1),
                s => Err(Error::parse(line, format!("auxiliary spin `{s}` is not -1 or 1"))),
            })
            .collect::<Result<Vec<i8>>>()?;
        let aux = match k.checked_div(alpha) {
            Some(rows_per_array) => AuxiliaryArray::new(rows_per_array, alpha, spins)?,
            None => AuxiliaryArray::empty(),
        };
        let rho: f64 = super::parse_num(line, "rho", field(k))?;
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::parse(line, format!("rho {rho} is outside [0, 1]")));
        }
        rows.push(DatasetRow {
            aux,
            rho,
            f_star: super::parse_num(line, "f_star", field(k + 1))?,
            converged: super::parse_num(line, "converged flag", field(k + 2))?,
            seed: super::parse_num(line, "seed", field(k + 3))?,
        });
    }
    Ok(rows)
}

pub fn read_dataset(path: &Path, alpha: usize) -> Result<Vec<DatasetRow>> {
    parse_dataset(open(path)?, alpha)
}

/// `index,prediction,target` for every row, in order.
pub fn write_predictions(path: &Path, predictions: &[f64], targets: &[f64]) -> Result<()> {
    write_file(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["index", "prediction", "target"])?;
        for (i, (p, t)) in predictions.iter().zip(targets).enumerate() {
            out.write_record([i.to_string(), p.to_string(), t.to_string()])?;
        }
        out.flush().map_err(super::io_err)?;
        Ok(())
    })
}

/// Reads `(prediction, target)` pairs written by [`write_predictions`].
pub fn read_predictions(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    reader
        .records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            let get = |j| super::parse_num(i + 2, "number", rec.get(j).unwrap_or(""));
            Ok((get(1)?, get(2)?))
        })
        .collect()
}
