//! Training data: auxiliary arrays labelled with the solver's optimal `rho`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::boltzmann::ObjectiveConfig;
use crate::ising::{build_state_sets, AuxiliaryArray, DynamicRange, StateSetOptions, SystemShape, TruthTable};
use crate::solver::{feasibility_check, minimize, SolverOptions};
use crate::{Error, Result};

/// Share of non-converged rows above which a dataset counts as degraded.
pub const DEGRADED_FRACTION: f64 = 0.05;

/// One labelled auxiliary array.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRow {
    pub aux: AuxiliaryArray,
    /// In `[0, 1]`; zero when the solve failed outright.
    pub rho: f64,
    /// `NaN` when the solve failed outright.
    pub f_star: f64,
    pub converged: bool,
    /// Seed of the multi-start solve that produced the label.
    pub seed: u64,
}

/// Everything needed to regenerate a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub problem: Option<u8>,
    pub shape: SystemShape,
    pub range: DynamicRange,
    pub config: ObjectiveConfig,
    pub state_options: StateSetOptions,
    pub solver: SolverOptions,
    /// Requested feasible fraction, when arrays were sampled by class.
    pub balance: Option<f64>,
    pub seed: u64,
    pub rows: usize,
    pub nonconverged: usize,
    pub split_ratio: f64,
    pub split_seed: u64,
    pub train_rows: usize,
    pub test_rows: usize,
}

impl DatasetManifest {
    pub fn degraded(&self) -> bool {
        self.rows > 0 && self.nonconverged as f64 > DEGRADED_FRACTION * self.rows as f64
    }

    /// Records a [`split_dataset`] of the rows.
    pub fn with_split(mut self, ratio: f64, seed: u64) -> Self {
        self.split_ratio = ratio;
        self.split_seed = seed;
        self.train_rows = split_point(self.rows, ratio);
        self.test_rows = self.rows - self.train_rows;
        self
    }
}

/// Knobs for sampling and labelling.
#[derive(Debug, Clone, PartialEq)]
pub struct DatagenOptions {
    /// Solver budget per label. `seed` is ignored; every row derives its own.
    pub solver: SolverOptions,
    pub state_options: StateSetOptions,
    /// Rejection-sampling attempts per requested array.
    pub attempts_per_array: usize,
    pub seed: u64,
}

impl Default for DatagenOptions {
    fn default() -> Self {
        // Starts nearly always agree on these problems; two keep the label
        // robust at a quarter of the cost of the solver default.
        Self {
            solver: SolverOptions { starts: 2, ..SolverOptions::default() },
            state_options: StateSetOptions::default(),
            attempts_per_array: 200,
            seed: 0,
        }
    }
}

/// Seed of row `index` in a dataset created from `seed` (SplitMix64 finalizer).
pub fn row_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Distinct random auxiliary arrays for `table`.
///
/// With `balance = Some(b)`, `round(count * b)` arrays are feasible and the rest
/// infeasible, classified by [`feasibility_check`]; with `None` arrays are
/// drawn uniformly without classification. Output order is acceptance order.
/// Sampling stops with [`Error::SamplingExhausted`] after
/// `count * attempts_per_array` draws. Without auxiliary spins the only array
/// is the empty one, which is returned alone.
pub fn sample_aux_arrays(
    table: &TruthTable,
    count: usize,
    balance: Option<f64>,
    range: &DynamicRange,
    opts: &DatagenOptions,
) -> Result<Vec<AuxiliaryArray>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    if let Some(b) = balance {
        if !(0.0..=1.0).contains(&b) {
            return Err(Error::InvalidArgument(format!("balance {b} is outside [0, 1]")));
        }
    }
    let alpha = table.shape().aux();
    if alpha == 0 {
        log::warn!("no auxiliary spins: returning the single empty array instead of {count}");
        return Ok(alloc::vec![AuxiliaryArray::empty()]);
    }
    let want_feasible = balance.map_or(0, |b| libm::round(count as f64 * b) as usize);
    let want_infeasible = count - want_feasible;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    let (mut feasible, mut infeasible) = (0, 0);
    let cap = count.saturating_mul(opts.attempts_per_array.max(1));
    let mut attempts = 0;
    while out.len() < count {
        if attempts == cap {
            return Err(Error::SamplingExhausted {
                attempts,
                feasible: if balance.is_some() { feasible } else { out.len() },
                wanted_feasible: if balance.is_some() { want_feasible } else { count },
                infeasible,
                wanted_infeasible: if balance.is_some() { want_infeasible } else { 0 },
            });
        }
        attempts += 1;
        let aux = AuxiliaryArray::random(table.len(), alpha, &mut rng);
        if seen.contains(&aux) {
            continue;
        }
        if balance.is_some() {
            let sets = build_state_sets(table, &aux, opts.state_options)?;
            if feasibility_check(&sets, range, &opts.solver)?.feasible {
                if feasible == want_feasible {
                    continue;
                }
                feasible += 1;
            } else {
                if infeasible == want_infeasible {
                    continue;
                }
                infeasible += 1;
            }
        }
        seen.insert(aux.clone());
        out.push(aux);
    }
    Ok(out)
}

/// Solves for the optimal `rho` of one array. Solver failures become a
/// non-converged row rather than an error.
pub fn label_array(
    table: &TruthTable,
    aux: &AuxiliaryArray,
    range: &DynamicRange,
    config: &ObjectiveConfig,
    opts: &DatagenOptions,
    seed: u64,
) -> Result<DatasetRow> {
    let sets = build_state_sets(table, aux, opts.state_options)?;
    let solver = SolverOptions { seed, record_trace: false, ..opts.solver.clone() };
    Ok(match minimize(&sets, range, config, &solver) {
        Ok(r) => DatasetRow { aux: aux.clone(), rho: r.rho, f_star: r.f_star, converged: r.converged, seed },
        Err(e) => {
            log::warn!("solve failed for row seed {seed}: {e}");
            DatasetRow { aux: aux.clone(), rho: 0.0, f_star: f64::NAN, converged: false, seed }
        }
    })
}

/// Manifest describing `rows`, before any split.
pub fn manifest_for(
    table: &TruthTable,
    rows: &[DatasetRow],
    range: &DynamicRange,
    config: &ObjectiveConfig,
    opts: &DatagenOptions,
    problem: Option<u8>,
    balance: Option<f64>,
) -> DatasetManifest {
    DatasetManifest {
        problem,
        shape: table.shape(),
        range: *range,
        config: *config,
        state_options: opts.state_options,
        solver: opts.solver.clone(),
        balance,
        seed: opts.seed,
        rows: rows.len(),
        nonconverged: rows.iter().filter(|r| !r.converged).count(),
        split_ratio: 1.0,
        split_seed: 0,
        train_rows: rows.len(),
        test_rows: 0,
    }
}

/// Labels every array in order; row `k` is solved with `row_seed(opts.seed, k)`.
pub fn generate_dataset(
    table: &TruthTable,
    arrays: &[AuxiliaryArray],
    range: &DynamicRange,
    config: &ObjectiveConfig,
    opts: &DatagenOptions,
) -> Result<(Vec<DatasetRow>, DatasetManifest)> {
    config.validate()?;
    opts.solver.validate()?;
    let rows = arrays
        .iter()
        .enumerate()
        .map(|(k, aux)| label_array(table, aux, range, config, opts, row_seed(opts.seed, k as u64)))
        .collect::<Result<Vec<_>>>()?;
    let manifest = manifest_for(table, &rows, range, config, opts, None, None);
    Ok((rows, manifest))
}

fn split_point(n: usize, ratio: f64) -> usize {
    (libm::round(n as f64 * ratio) as usize).min(n)
}

/// Seeded shuffle, then the first `round(n * ratio)` items train and the rest test.
pub fn split_dataset<T>(mut rows: Vec<T>, ratio: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!("split ratio {ratio} is outside (0, 1)")));
    }
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = rows.split_off(split_point(rows.len(), ratio));
    Ok((rows, test))
}
