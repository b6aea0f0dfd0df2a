//! The four multiplier benchmark problems.

use crate::ising::{DynamicRange, TruthTable};
use crate::{Error, Result};

/// A multiplier circuit with a fixed auxiliary spin count and coefficient box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Problem {
    pub id: u8,
    pub p_bits: usize,
    pub q_bits: usize,
    pub aux: usize,
    /// Symmetric bound of the dynamic range of `h` and `J`.
    pub range_bound: f64,
    /// Default random forest depth.
    pub forest_depth: usize,
}

pub const PROBLEMS: [Problem; 4] = [
    Problem { id: 1, p_bits: 2, q_bits: 2, aux: 1, range_bound: 4.0, forest_depth: 16 },
    Problem { id: 2, p_bits: 2, q_bits: 3, aux: 1, range_bound: 64.0, forest_depth: 27 },
    Problem { id: 3, p_bits: 2, q_bits: 4, aux: 2, range_bound: 256.0, forest_depth: 16 },
    Problem { id: 4, p_bits: 3, q_bits: 3, aux: 3, range_bound: 256.0, forest_depth: 18 },
];

impl Problem {
    pub fn by_id(id: u8) -> Result<Self> {
        PROBLEMS
            .iter()
            .copied()
            .find(|p| p.id == id)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown problem {id}, expected 1-4")))
    }

    pub fn truth_table(&self) -> TruthTable {
        TruthTable::multiplier(self.p_bits, self.q_bits)
            .expect("benchmark problems have valid operand widths")
            .with_aux(self.aux)
    }

    pub fn range(&self) -> DynamicRange {
        DynamicRange::symmetric(self.range_bound).expect("positive bound")
    }
}
