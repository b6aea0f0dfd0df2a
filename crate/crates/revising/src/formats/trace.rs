//! Solver traces as tab-separated line records.

use std::io::Write;
use std::path::Path;

use revising_core::solver::TraceRecord;

use super::{io_err, write_file};
use crate::Result;

pub fn format_trace(trace: &[TraceRecord], w: &mut dyn Write) -> Result<()> {
    writeln!(w, "start\titeration\tf\tstep_norm\tprojected_gradient_norm").map_err(io_err)?;
    for r in trace {
        writeln!(w, "{}\t{}\t{}\t{}\t{}", r.start, r.iteration, r.f, r.step_norm, r.projected_gradient_norm)
            .map_err(io_err)?;
    }
    Ok(())
}

pub fn write_trace(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    write_file(path, |w| format_trace(trace, w))
}
