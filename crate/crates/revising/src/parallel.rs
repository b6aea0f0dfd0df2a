//! Rayon versions of the embarrassingly parallel core loops. Each work item
//! carries its own seed, so results match the sequential versions exactly
//! regardless of thread count.

use rayon::prelude::*;
use revising_core::boltzmann::ObjectiveConfig;
use revising_core::datagen::{manifest_for, row_seed, DatagenOptions, DatasetManifest, DatasetRow};
use revising_core::ising::{AuxiliaryArray, DynamicRange, TruthTable};
use revising_core::surrogate::{train_tree, ForestModel, ForestOptions, Samples};

use crate::Result;

/// Parallel [`revising_core::datagen::generate_dataset`].
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
        .par_iter()
        .enumerate()
        .map(|(k, aux)| {
            revising_core::datagen::label_array(table, aux, range, config, opts, row_seed(opts.seed, k as u64))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let manifest = manifest_for(table, &rows, range, config, opts, None, None);
    Ok((rows, manifest))
}

/// Parallel [`revising_core::surrogate::train_forest`].
pub fn train_forest(samples: &Samples, opts: &ForestOptions) -> Result<ForestModel> {
    opts.validate()?;
    let trees = (0..opts.trees)
        .into_par_iter()
        .map(|k| train_tree(samples, opts, k))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(ForestModel::new(samples.n_features(), opts.max_depth, opts.seed, trees)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use revising_core::datagen::sample_aux_arrays;
    use revising_core::problems::Problem;
    use revising_core::solver::SolverOptions;

    #[test]
    fn matches_sequential() {
        let p = Problem::by_id(1).unwrap();
        let table = p.truth_table();
        let opts = DatagenOptions {
            solver: SolverOptions { starts: 1, max_iterations: 50, ..Default::default() },
            seed: 3,
            ..Default::default()
        };
        let arrays = sample_aux_arrays(&table, 6, None, &p.range(), &opts).unwrap();
        let cfg = ObjectiveConfig::default();
        let (par, _) = generate_dataset(&table, &arrays, &p.range(), &cfg, &opts).unwrap();
        let (seq, _) = revising_core::datagen::generate_dataset(&table, &arrays, &p.range(), &cfg, &opts).unwrap();
        assert_eq!(par, seq);

        let samples = Samples::from_rows(&par).unwrap();
        let fo = ForestOptions { trees: 5, seed: 9, ..Default::default() };
        let a = train_forest(&samples, &fo).unwrap();
        let b = revising_core::surrogate::train_forest(&samples, &fo).unwrap();
        assert_eq!(a, b);
    }
}
