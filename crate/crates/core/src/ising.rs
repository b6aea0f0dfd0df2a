//! Spin systems, circuit truth tables and the correct/wrong state sets that
//! define the optimization constraints.
//!
//! Conventions used throughout the crate:
//!
//! * a bit `b` is the spin `2b - 1` (0 -> -1, 1 -> +1);
//! * multi-bit operands are little-endian (spin 0 of a segment is bit 0);
//! * a state is ordered `(inputs, outputs, auxiliary)`;
//! * the coefficient vector is `(h_1..h_N, J_12, J_13, .., J_{N-1,N})` with
//!   pairs in lexicographic order, so that `H(s) = phi(s) . psi`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_bigint::BigUint;
use rand::Rng;

use crate::{Error, Result};

/// A single spin, always `-1` or `+1`.
pub type Spin = i8;

/// Partition of the spins into fixed inputs, outputs and auxiliary spins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SystemShape {
    inputs: usize,
    outputs: usize,
    aux: usize,
}

impl SystemShape {
    pub fn new(inputs: usize, outputs: usize, aux: usize) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::InvalidShape(format!(
                "need at least one input and one output spin (n={inputs}, m={outputs})"
            )));
        }
        Ok(Self { inputs, outputs, aux })
    }

    /// Builds a shape from the `(N, n, alpha)` tuple, deriving `m = N - n - alpha`.
    pub fn from_totals(total: usize, inputs: usize, aux: usize) -> Result<Self> {
        let outputs = total
            .checked_sub(inputs)
            .and_then(|r| r.checked_sub(aux))
            .ok_or_else(|| Error::InvalidShape(format!("N={total} is smaller than n + alpha = {}", inputs + aux)))?;
        Self::new(inputs, outputs, aux)
    }

    pub fn total(&self) -> usize {
        self.inputs + self.outputs + self.aux
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn aux(&self) -> usize {
        self.aux
    }

    pub fn with_aux(self, aux: usize) -> Self {
        Self { aux, ..self }
    }

    /// Length of the coefficient vector for this shape.
    pub fn coefficient_count(&self) -> usize {
        coefficient_count(self.total())
    }
}

impl fmt::Display for SystemShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.total(), self.inputs, self.aux)
    }
}

/// `N` fields plus `N(N-1)/2` pair couplings.
pub const fn coefficient_count(n_spins: usize) -> usize {
    n_spins + n_spins * n_spins.saturating_sub(1) / 2
}

/// Position of coupling `J_{i,j}` (0-based, `i < j`) inside the coefficient vector.
pub fn pair_index(n_spins: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n_spins);
    n_spins + i * (2 * n_spins - i - 1) / 2 + (j - i - 1)
}

/// A full or partial spin configuration with every entry in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinVector(Vec<Spin>);

impl SpinVector {
    pub fn new(spins: Vec<Spin>) -> Result<Self> {
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidArgument(format!("spin value {bad} is not -1 or +1")));
        }
        Ok(Self(spins))
    }

    /// State number `index` of an `n_spins` system: spin `k` is `+1` iff bit `k` is set.
    pub fn from_index(n_spins: usize, index: u64) -> Self {
        Self(spins_from_index(n_spins, index))
    }

    pub fn as_slice(&self) -> &[Spin] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|s| -s).collect())
    }

    pub fn into_inner(self) -> Vec<Spin> {
        self.0
    }
}

impl AsRef<[Spin]> for SpinVector {
    fn as_ref(&self) -> &[Spin] {
        &self.0
    }
}

pub(crate) fn spins_from_index(n_spins: usize, index: u64) -> Vec<Spin> {
    (0..n_spins).map(|k| if (index >> k) & 1 == 1 { 1 } else { -1 }).collect()
}

pub(crate) fn fill_spins_from_index(out: &mut [Spin], index: u64) {
    for (k, s) in out.iter_mut().enumerate() {
        *s = if (index >> k) & 1 == 1 { 1 } else { -1 };
    }
}

/// Index of a spin configuration, the inverse of [`SpinVector::from_index`].
pub fn spins_to_index(spins: &[Spin]) -> u64 {
    spins.iter().enumerate().filter(|(_, &s)| s > 0).fold(0u64, |acc, (k, _)| acc | (1 << k))
}

/// Maps bits to spins, `0 -> -1` and `1 -> +1`. Any nonzero byte counts as 1.
pub fn spin_encode(bits: &[u8]) -> Vec<Spin> {
    bits.iter().map(|&b| if b != 0 { 1 } else { -1 }).collect()
}

/// Maps spins back to bits, `-1 -> 0` and `+1 -> 1`.
pub fn spin_decode(spins: &[Spin]) -> Vec<u8> {
    spins.iter().map(|&s| u8::from(s > 0)).collect()
}

/// Closed box `[lo, hi]` that every coefficient must lie in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicRange {
    lo: f64,
    hi: f64,
}

impl DynamicRange {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidArgument(format!("dynamic range [{lo}, {hi}] is empty or not finite")));
        }
        Ok(Self { lo, hi })
    }

    /// `[-bound, bound]`.
    pub fn symmetric(bound: f64) -> Result<Self> {
        Self::new(-bound, bound)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    pub fn project(&self, xs: &mut [f64]) {
        for x in xs {
            *x = self.clamp(*x);
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lo..=self.hi).contains(&x)
    }

    /// Uniform sample inside the box.
    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, rng: &mut R) -> Vec<f64> {
        (0..dim).map(|_| rng.random_range(self.lo..=self.hi)).collect()
    }
}

/// Fields and couplings of an `N`-spin Hamiltonian together with their box.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianCoefficients {
    n_spins: usize,
    values: Vec<f64>,
    range: DynamicRange,
}

impl HamiltonianCoefficients {
    /// Validates the length and projects `values` onto `range`.
    pub fn new(n_spins: usize, mut values: Vec<f64>, range: DynamicRange) -> Result<Self> {
        let expected = coefficient_count(n_spins);
        if values.len() != expected {
            return Err(Error::DimensionMismatch { expected, actual: values.len() });
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("coefficient is NaN".into()));
        }
        range.project(&mut values);
        Ok(Self { n_spins, values, range })
    }

    pub fn zeros(n_spins: usize, range: DynamicRange) -> Self {
        let mut values = vec![0.0; coefficient_count(n_spins)];
        range.project(&mut values);
        Self { n_spins, values, range }
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn range(&self) -> DynamicRange {
        self.range
    }

    pub fn fields(&self) -> &[f64] {
        &self.values[..self.n_spins]
    }

    pub fn couplings(&self) -> &[f64] {
        &self.values[self.n_spins..]
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.values[pair_index(self.n_spins, i, j)]
    }

    pub fn energy(&self, s: &[Spin]) -> f64 {
        hamiltonian(&self.values, s)
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// `phi(s) = (s_1..s_N, s_1 s_2, s_1 s_3, .., s_{N-1} s_N)`.
pub fn feature_map(s: &[Spin]) -> Vec<f64> {
    let mut out = vec![0.0; coefficient_count(s.len())];
    feature_map_into(s, &mut out);
    out
}

pub fn feature_map_into(s: &[Spin], out: &mut [f64]) {
    let n = s.len();
    assert_eq!(out.len(), coefficient_count(n), "feature buffer length");
    for (o, &si) in out.iter_mut().zip(s) {
        *o = f64::from(si);
    }
    let mut k = n;
    for i in 0..n {
        for j in i + 1..n {
            out[k] = f64::from(s[i] * s[j]);
            k += 1;
        }
    }
}

/// `H(s) = sum_i h_i s_i + sum_{i<j} J_ij s_i s_j`, evaluated as a direct double sum.
///
/// Panics if `psi` does not have the coefficient length for `s`.
pub fn hamiltonian(psi: &[f64], s: &[Spin]) -> f64 {
    let n = s.len();
    assert_eq!(psi.len(), coefficient_count(n), "coefficient vector length");
    let mut energy = 0.0;
    for i in 0..n {
        energy += psi[i] * f64::from(s[i]);
    }
    let mut k = n;
    for i in 0..n {
        let si = f64::from(s[i]);
        for &sj in &s[i + 1..] {
            energy += psi[k] * si * f64::from(sj);
            k += 1;
        }
    }
    energy
}

/// One desired circuit state `(u, v)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthRow {
    pub input: Vec<Spin>,
    pub output: Vec<Spin>,
}

/// The desired states of a logic circuit plus the system shape it lives in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    shape: SystemShape,
    rows: Vec<TruthRow>,
}

impl TruthTable {
    pub fn new(shape: SystemShape, rows: Vec<TruthRow>) -> Result<Self> {
        let n = shape.inputs();
        if rows.is_empty() {
            return Err(Error::InvalidTruthTable("no rows".into()));
        }
        if n < 64 && rows.len() as u64 > 1u64 << n {
            return Err(Error::InvalidTruthTable(format!("{} rows exceed 2^{n}", rows.len())));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.input.len() != n || row.output.len() != shape.outputs() {
                return Err(Error::InvalidTruthTable(format!(
                    "row {i} has {} inputs and {} outputs, shape wants {n} and {}",
                    row.input.len(),
                    row.output.len(),
                    shape.outputs()
                )));
            }
            if row.input.iter().chain(&row.output).any(|&s| s != 1 && s != -1) {
                return Err(Error::InvalidTruthTable(format!("row {i} has a non-spin entry")));
            }
        }
        let mut inputs: Vec<&[Spin]> = rows.iter().map(|r| r.input.as_slice()).collect();
        inputs.sort_unstable();
        if inputs.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidTruthTable("duplicate input row".into()));
        }
        Ok(Self { shape, rows })
    }

    /// Builds a table from `(input bits, output bits)` pairs.
    pub fn from_bits(shape: SystemShape, rows: &[(Vec<u8>, Vec<u8>)]) -> Result<Self> {
        let rows = rows.iter().map(|(u, v)| TruthRow { input: spin_encode(u), output: spin_encode(v) }).collect();
        Self::new(shape, rows)
    }

    /// Truth table of a `p_bits x q_bits` unsigned multiplier with no auxiliary spins.
    ///
    /// Inputs are `(x_0..x_{p-1}, y_0..y_{q-1})`, outputs are the `p+q` product
    /// bits, all little-endian. Row `k` has `x = k mod 2^p` and `y = k >> p`.
    pub fn multiplier(p_bits: usize, q_bits: usize) -> Result<Self> {
        if p_bits == 0 || q_bits == 0 {
            return Err(Error::InvalidShape("multiplier operands need at least one bit".into()));
        }
        let n = p_bits + q_bits;
        if n > 20 {
            return Err(Error::InvalidShape(format!("{n} input bits is too many to tabulate")));
        }
        let shape = SystemShape::new(n, n, 0)?;
        let rows = (0..1u64 << n)
            .map(|k| {
                let x = k & ((1 << p_bits) - 1);
                let y = k >> p_bits;
                TruthRow { input: spins_from_index(n, k), output: spins_from_index(n, x * y) }
            })
            .collect();
        Self::new(shape, rows)
    }

    /// Same rows with `alpha` auxiliary spins appended to the shape.
    pub fn with_aux(mut self, alpha: usize) -> Self {
        self.shape = self.shape.with_aux(alpha);
        self
    }

    pub fn shape(&self) -> SystemShape {
        self.shape
    }

    pub fn rows(&self) -> &[TruthRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Length of a flattened auxiliary array for this table.
    pub fn aux_array_len(&self) -> usize {
        self.rows.len() * self.shape.aux()
    }
}

/// One auxiliary assignment per truth-table row, stored flat (row-major).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AuxiliaryArray {
    alpha: usize,
    spins: Vec<Spin>,
}

impl AuxiliaryArray {
    pub fn new(rows: usize, alpha: usize, spins: Vec<Spin>) -> Result<Self> {
        if spins.len() != rows * alpha {
            return Err(Error::DimensionMismatch { expected: rows * alpha, actual: spins.len() });
        }
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidArgument("auxiliary entry is not -1 or +1".into()));
        }
        Ok(Self { alpha, spins })
    }

    /// The array with no auxiliary spins.
    pub fn empty() -> Self {
        Self { alpha: 0, spins: Vec::new() }
    }

    /// Array number `index` in the enumeration order of [`SpinVector::from_index`].
    pub fn from_index(rows: usize, alpha: usize, index: u64) -> Self {
        Self { alpha, spins: spins_from_index(rows * alpha, index) }
    }

    pub fn random<R: Rng + ?Sized>(rows: usize, alpha: usize, rng: &mut R) -> Self {
        let spins = (0..rows * alpha).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        Self { alpha, spins }
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn row(&self, i: usize) -> &[Spin] {
        &self.spins[i * self.alpha..(i + 1) * self.alpha]
    }

    pub fn as_slice(&self) -> &[Spin] {
        &self.spins
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }
}

/// Which states count as failures for a truth-table row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WrongSetMode {
    /// `(u, t, a)` for every `t != v`, auxiliary spins held at `a`.
    #[default]
    AuxFixed,
    /// `(u, t, a')` for every `t != v` and every auxiliary setting `a'`.
    AuxFreeWrong,
}

impl WrongSetMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::AuxFixed => "aux-fixed",
            Self::AuxFreeWrong => "aux-free-wrong",
        }
    }
}

impl fmt::Display for WrongSetMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WrongSetMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aux-fixed" => Ok(Self::AuxFixed),
            "aux-free-wrong" => Ok(Self::AuxFreeWrong),
            other => Err(Error::InvalidArgument(format!("unknown wrong-set mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StateSetOptions {
    pub mode: WrongSetMode,
    /// Count `(u, v, a')` as correct for every auxiliary setting `a'`.
    pub correct_aux_free: bool,
}

impl StateSetOptions {
    pub fn with_mode(mode: WrongSetMode) -> Self {
        Self { mode, ..Self::default() }
    }
}

/// Dense row-major matrix whose rows are feature vectors `phi(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(cols: usize) -> Self {
        Self { cols, data: Vec::new() }
    }

    pub fn push_state(&mut self, s: &[Spin]) {
        let start = self.data.len();
        self.data.resize(start + self.cols, 0.0);
        feature_map_into(s, &mut self.data[start..]);
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.cols
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.cols..(k + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> core::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.cols)
    }
}

/// Correct and wrong states of one truth-table row, as feature matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct RowStates {
    pub correct: FeatureMatrix,
    pub wrong: FeatureMatrix,
}

/// Per-row correct/wrong state sets, ready for `R . psi` and `W . psi` products.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSets {
    n_spins: usize,
    rows: Vec<RowStates>,
}

impl StateSets {
    pub fn from_rows(n_spins: usize, rows: Vec<RowStates>) -> Result<Self> {
        let dim = coefficient_count(n_spins);
        if rows.is_empty() {
            return Err(Error::InvalidArgument("state sets need at least one row".into()));
        }
        for r in &rows {
            if r.correct.cols() != dim || r.wrong.cols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: r.correct.cols() });
            }
            if r.correct.rows() == 0 || r.wrong.rows() == 0 {
                return Err(Error::InvalidArgument("every row needs a correct and a wrong state".into()));
            }
        }
        Ok(Self { n_spins, rows })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        coefficient_count(self.n_spins)
    }

    pub fn rows(&self) -> &[RowStates] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn wrong_state_count(&self) -> usize {
        self.rows.iter().map(|r| r.wrong.rows()).sum()
    }
}

/// Enumerates the correct and wrong states of every truth-table row.
pub fn build_state_sets(table: &TruthTable, aux: &AuxiliaryArray, opts: StateSetOptions) -> Result<StateSets> {
    let shape = table.shape();
    let (n, m, alpha) = (shape.inputs(), shape.outputs(), shape.aux());
    if aux.len() != table.len() * alpha || (alpha > 0 && aux.alpha() != alpha) {
        return Err(Error::DimensionMismatch { expected: table.len() * alpha, actual: aux.len() });
    }
    if m >= 24 || alpha >= 24 {
        return Err(Error::SearchLimit { size: m.max(alpha), limit: 23 });
    }
    let total = shape.total();
    let dim = coefficient_count(total);
    let mut state = vec![0 as Spin; total];
    let mut rows = Vec::with_capacity(table.len());

    for (i, row) in table.rows().iter().enumerate() {
        state[..n].copy_from_slice(&row.input);
        let a = aux.row_or_empty(i);

        let mut correct = FeatureMatrix::new(dim);
        state[n..n + m].copy_from_slice(&row.output);
        if opts.correct_aux_free {
            for k in 0..1u64 << alpha {
                fill_spins_from_index(&mut state[n + m..], k);
                correct.push_state(&state);
            }
        } else {
            state[n + m..].copy_from_slice(a);
            correct.push_state(&state);
        }

        let mut wrong = FeatureMatrix::new(dim);
        let v_index = spins_to_index(&row.output);
        for t in (0..1u64 << m).filter(|&t| t != v_index) {
            fill_spins_from_index(&mut state[n..n + m], t);
            match opts.mode {
                WrongSetMode::AuxFixed => {
                    state[n + m..].copy_from_slice(a);
                    wrong.push_state(&state);
                }
                WrongSetMode::AuxFreeWrong => {
                    for k in 0..1u64 << alpha {
                        fill_spins_from_index(&mut state[n + m..], k);
                        wrong.push_state(&state);
                    }
                }
            }
        }
        rows.push(RowStates { correct, wrong });
    }
    StateSets::from_rows(total, rows)
}

impl AuxiliaryArray {
    fn row_or_empty(&self, i: usize) -> &[Spin] {
        if self.alpha == 0 {
            &[]
        } else {
            self.row(i)
        }
    }
}

/// `2^(n + alpha) * (2^n - 1)` linear inequality constraints.
pub fn count_constraints(shape: &SystemShape) -> BigUint {
    let n = shape.inputs() as u32;
    let alpha = shape.aux() as u32;
    let one = BigUint::from(1u32);
    (BigUint::from(1u32) << (n + alpha)) * ((&one << n) - &one)
}

/// `2^(alpha * 2^n)` possible auxiliary arrays.
pub fn count_aux_arrays(shape: &SystemShape) -> BigUint {
    let exponent = BigUint::from(shape.aux()) << shape.inputs();
    let exponent = u64::try_from(exponent).expect("auxiliary array count exponent overflows u64");
    BigUint::from(1u32) << exponent
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn encode_decode() {
        assert_eq!(spin_encode(&[0, 1]), vec![-1, 1]);
        assert!(spin_encode(&[]).is_empty());
        for x in 0u8..16 {
            let bits: Vec<u8> = (0..4).map(|k| (x >> k) & 1).collect();
            assert_eq!(spin_decode(&spin_encode(&bits)), bits);
        }
    }

    #[test]
    fn feature_map_small() {
        assert_eq!(feature_map(&[-1, 1, -1]), vec![-1.0, 1.0, -1.0, -1.0, 1.0, -1.0]);
    }

    #[test]
    fn hamiltonian_single_field() {
        let psi = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        assert_eq!(hamiltonian(&psi, &[-1, 1, -1]), -1.0);
        let zero = [0.0; 6];
        for k in 0..8 {
            assert_eq!(hamiltonian(&zero, SpinVector::from_index(3, k).as_slice()), 0.0);
        }
    }

    #[test]
    fn pair_index_is_lexicographic() {
        let n = 5;
        let mut k = n;
        for i in 0..n {
            for j in i + 1..n {
                assert_eq!(pair_index(n, i, j), k);
                k += 1;
            }
        }
        assert_eq!(k, coefficient_count(n));
    }

    #[test]
    fn shape_validation() {
        assert!(SystemShape::new(0, 1, 0).is_err());
        assert!(SystemShape::new(1, 0, 0).is_err());
        let s = SystemShape::from_totals(9, 4, 1).unwrap();
        assert_eq!((s.total(), s.inputs(), s.outputs(), s.aux()), (9, 4, 4, 1));
        assert!(SystemShape::from_totals(4, 4, 1).is_err());
    }

    #[test]
    fn multiplier_tables() {
        let t = TruthTable::multiplier(2, 2).unwrap();
        assert_eq!((t.shape().inputs(), t.shape().outputs(), t.len()), (4, 4, 16));
        assert_eq!(TruthTable::multiplier(2, 3).unwrap().len(), 32);

        let t = TruthTable::multiplier(1, 1).unwrap();
        assert_eq!(t.len(), 4);
        let row = t.rows().iter().find(|r| r.input == vec![1, 1]).unwrap();
        // product 1 = 0b01, little-endian bits (1, 0)
        assert_eq!(spin_decode(&row.output), vec![1, 0]);
    }

    #[test]
    fn multiplier_rows_multiply() {
        for p in 1..=3 {
            for q in 1..=3 {
                let t = TruthTable::multiplier(p, q).unwrap();
                assert_eq!(t.len(), 1 << (p + q));
                for row in t.rows() {
                    let x = spins_to_index(&row.input[..p]);
                    let y = spins_to_index(&row.input[p..]);
                    assert_eq!(spins_to_index(&row.output), x * y);
                }
            }
        }
    }

    #[test]
    fn truth_table_rejects_duplicates() {
        let shape = SystemShape::new(1, 1, 0).unwrap();
        let rows = [(vec![1], vec![0]), (vec![1], vec![1])];
        assert!(matches!(TruthTable::from_bits(shape, &rows), Err(Error::InvalidTruthTable(_))));
    }

    fn toy_table() -> TruthTable {
        let shape = SystemShape::new(1, 1, 1).unwrap();
        TruthTable::from_bits(shape, &[(vec![0], vec![1]), (vec![1], vec![0])]).unwrap()
    }

    #[test]
    fn state_set_sizes_on_toy() {
        let t = toy_table();
        let aux = AuxiliaryArray::new(2, 1, vec![1, -1]).unwrap();
        let fixed = build_state_sets(&t, &aux, StateSetOptions::default()).unwrap();
        assert!(fixed.rows().iter().all(|r| r.correct.rows() == 1 && r.wrong.rows() == 1));
        let free = build_state_sets(&t, &aux, StateSetOptions::with_mode(WrongSetMode::AuxFreeWrong)).unwrap();
        assert!(free.rows().iter().all(|r| r.correct.rows() == 1 && r.wrong.rows() == 2));
    }

    #[test]
    fn state_sets_hold_expected_states() {
        let t = toy_table();
        let aux = AuxiliaryArray::new(2, 1, vec![1, -1]).unwrap();
        let sets = build_state_sets(&t, &aux, StateSetOptions::default()).unwrap();
        // row 0: u=-1, v=+1, a=+1; wrong flips v
        assert_eq!(sets.rows()[0].correct.row(0), feature_map(&[-1, 1, 1]).as_slice());
        assert_eq!(sets.rows()[0].wrong.row(0), feature_map(&[-1, -1, 1]).as_slice());
        assert_eq!(sets.rows()[1].correct.row(0), feature_map(&[1, -1, -1]).as_slice());
    }

    #[test]
    fn problem_one_wrong_count() {
        let t = TruthTable::multiplier(2, 2).unwrap().with_aux(1);
        let aux = AuxiliaryArray::from_index(16, 1, 0xbeef);
        let sets = build_state_sets(&t, &aux, StateSetOptions::default()).unwrap();
        assert_eq!(sets.wrong_state_count(), 240);
        assert_eq!(sets.dim(), 45);
    }

    #[test]
    fn correct_aux_free_option() {
        let t = toy_table();
        let aux = AuxiliaryArray::new(2, 1, vec![1, -1]).unwrap();
        let opts = StateSetOptions { mode: WrongSetMode::AuxFixed, correct_aux_free: true };
        let sets = build_state_sets(&t, &aux, opts).unwrap();
        assert!(sets.rows().iter().all(|r| r.correct.rows() == 2));
    }

    #[test]
    fn aux_length_checked() {
        let t = toy_table();
        let aux = AuxiliaryArray::new(1, 1, vec![1]).unwrap();
        assert!(build_state_sets(&t, &aux, StateSetOptions::default()).is_err());
    }

    #[test]
    fn counting_formulas() {
        let six = SystemShape::new(2, 2, 2).unwrap();
        assert_eq!(count_constraints(&six), BigUint::from(48u32));
        assert_eq!(count_aux_arrays(&six), BigUint::from(256u32));
        let twelve = SystemShape::new(4, 4, 4).unwrap();
        assert_eq!(count_constraints(&twelve), BigUint::from(3840u32));
        assert_eq!(count_aux_arrays(&twelve), BigUint::from(1u128 << 64));
        let bare = SystemShape::new(1, 1, 0).unwrap();
        assert_eq!(count_constraints(&bare), BigUint::from(2u32));
        assert_eq!(count_aux_arrays(&bare), BigUint::from(1u32));
    }

    #[test]
    fn counts_match_enumeration() {
        for n in 1..=3usize {
            for alpha in 0..=(6 - n) {
                let shape = SystemShape::new(n, n, alpha).unwrap();
                // identity circuit over all 2^n inputs, one constraint per flipped-aux wrong state
                let rows = (0..1u64 << n)
                    .map(|k| TruthRow { input: spins_from_index(n, k), output: spins_from_index(n, k) })
                    .collect();
                let t = TruthTable::new(shape, rows).unwrap();
                let aux = AuxiliaryArray::from_index(t.len(), alpha, 0);
                let sets = build_state_sets(&t, &aux, StateSetOptions::with_mode(WrongSetMode::AuxFreeWrong)).unwrap();
                assert_eq!(count_constraints(&shape), BigUint::from(sets.wrong_state_count()));

                let width = alpha << n;
                if width <= 16 {
                    let distinct: alloc::collections::BTreeSet<_> =
                        (0..1u64 << width).map(|k| AuxiliaryArray::from_index(t.len(), alpha, k)).collect();
                    assert_eq!(count_aux_arrays(&shape), BigUint::from(distinct.len()));
                }
            }
        }
    }

    #[test]
    fn state_set_counts_exhaustive() {
        // every shape with N <= 10 and a small single-row table
        for n in 1..=3usize {
            for m in 1..=4usize {
                for alpha in 0..=(10 - n - m).min(4) {
                    let shape = SystemShape::new(n, m, alpha).unwrap();
                    let row = TruthRow { input: vec![1; n], output: vec![-1; m] };
                    let t = TruthTable::new(shape, alloc::vec![row]).unwrap();
                    let aux = AuxiliaryArray::new(1, alpha, vec![1; alpha]).unwrap();
                    let fixed = build_state_sets(&t, &aux, StateSetOptions::default()).unwrap();
                    assert_eq!(fixed.rows()[0].correct.rows(), 1);
                    assert_eq!(fixed.rows()[0].wrong.rows(), (1 << m) - 1);
                    let free =
                        build_state_sets(&t, &aux, StateSetOptions::with_mode(WrongSetMode::AuxFreeWrong)).unwrap();
                    assert_eq!(free.rows()[0].correct.rows(), 1);
                    assert_eq!(free.rows()[0].wrong.rows(), ((1 << m) - 1) << alpha);
                    // correct and wrong share the input segment and never overlap
                    let c = free.rows()[0].correct.row(0);
                    for w in free.rows()[0].wrong.iter_rows() {
                        assert_eq!(&w[..n], &c[..n]);
                        assert_ne!(w, c);
                    }
                }
            }
        }
    }

    #[test]
    fn feature_dot_matches_hamiltonian_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let n = rng.random_range(1..=12);
            let s = AuxiliaryArray::random(1, n, &mut rng).as_slice().to_vec();
            let psi: Vec<f64> = (0..coefficient_count(n)).map(|_| rng.random_range(-5.0..5.0)).collect();
            let via_features = crate::math::dot(&feature_map(&s), &psi);
            assert!((via_features - hamiltonian(&psi, &s)).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn global_flip_splits_h_and_j(
            seed in any::<u64>(),
            n in 1usize..10,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = SpinVector::from_index(n, rng.random::<u64>());
            let psi: Vec<f64> = (0..coefficient_count(n)).map(|_| rng.random_range(-3.0..3.0)).collect();
            let mut couplings_only = psi.clone();
            couplings_only[..n].iter_mut().for_each(|x| *x = 0.0);
            let sum = hamiltonian(&psi, s.as_slice()) + hamiltonian(&psi, s.negated().as_slice());
            let j_part = hamiltonian(&couplings_only, s.as_slice());
            prop_assert!((sum - 2.0 * j_part).abs() < 1e-9);
        }

        #[test]
        fn features_are_spins(idx in any::<u64>(), n in 0usize..12) {
            let s = SpinVector::from_index(n, idx);
            prop_assert!(feature_map(s.as_slice()).iter().all(|&x| x == 1.0 || x == -1.0));
            prop_assert_eq!(spins_to_index(s.as_slice()), idx & ((1u64 << n) - 1));
        }
    }
}
