//! Truth tables.
//!
//! ```text
//! # any comment
//! inputs 2
//! outputs 1
//! aux 0
//! 00 0
//! 10 1
//! ```
//!
//! Each row lists the input bits, then the output bits, as `0`/`1` strings
//! in spin order (the first character is spin 1, the least significant bit
//! of the operand). Bit `b` maps to spin `2b - 1`.

use std::io::{BufRead, Write};
use std::path::Path;

use revising_core::ising::{spin_decode, SystemShape, TruthTable};

use super::{content_lines, io_err, open, parse_num, write_file};
use crate::{Error, Result};

fn bits(line: usize, s: &str) -> Result<Vec<u8>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(Error::parse(line, format!("`{s}` is not a bit string"))),
        })
        .collect()
}

fn bit_string(spins: &[i8]) -> String {
    spin_decode(spins).iter().map(|b| if *b == 1 { '1' } else { '0' }).collect()
}

pub fn parse_truth_table(r: impl BufRead) -> Result<TruthTable> {
    let (mut inputs, mut outputs, mut aux) = (None, None, None);
    let mut rows = Vec::new();
    for item in content_lines(r) {
        let (line, body) = item?;
        let mut parts = body.split_whitespace();
        let (a, b) = (parts.next().unwrap_or(""), parts.next());
        if parts.next().is_some() {
            return Err(Error::parse(line, "expected two fields"));
        }
        let Some(b) = b else {
            return Err(Error::parse(line, "expected two fields"));
        };
        match a {
            "inputs" => inputs = Some(parse_num::<usize>(line, "input count", b)?),
            "outputs" => outputs = Some(parse_num::<usize>(line, "output count", b)?),
            "aux" => aux = Some(parse_num::<usize>(line, "auxiliary count", b)?),
            _ => rows.push((bits(line, a)?, bits(line, b)?)),
        }
    }
    let missing = |what: &str| Error::parse(0, format!("missing `{what}` line"));
    let shape = SystemShape::new(
        inputs.ok_or_else(|| missing("inputs"))?,
        outputs.ok_or_else(|| missing("outputs"))?,
        aux.unwrap_or(0),
    )?;
    Ok(TruthTable::from_bits(shape, &rows)?)
}

pub fn read_truth_table(path: &Path) -> Result<TruthTable> {
    parse_truth_table(open(path)?)
}

pub fn format_truth_table(table: &TruthTable, w: &mut dyn Write) -> Result<()> {
    let shape = table.shape();
    writeln!(w, "# truth table {shape}").map_err(io_err)?;
    writeln!(w, "inputs {}\noutputs {}\naux {}", shape.inputs(), shape.outputs(), shape.aux()).map_err(io_err)?;
    for row in table.rows() {
        writeln!(w, "{} {}", bit_string(&row.input), bit_string(&row.output)).map_err(io_err)?;
    }
    Ok(())
}

pub fn write_truth_table(path: &Path, table: &TruthTable) -> Result<()> {
    write_file(path, |w| format_truth_table(table, w))
}
