//! Brute-force and sampling ground truth for small systems.
//!
//! Nothing here is fast. These routines exist to check the Boltzmann kernels
//! and the solver against independent computations: full enumeration of the
//! distribution, an exhaustive search over auxiliary arrays scored on a coarse
//! coefficient grid, and a Metropolis chain.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boltzmann::{log_sum_exp, BoltzmannObjective, ObjectiveConfig};
use crate::ising::{
    build_state_sets, coefficient_count, fill_spins_from_index, hamiltonian, pair_index, spins_to_index,
    AuxiliaryArray, DynamicRange, Spin, StateSetOptions, StateSets, TruthTable,
};
use crate::math::exp;
use crate::solver::{feasibility_check, SolverOptions};
use crate::{Error, Result};

/// Largest system the oracle enumerates.
pub const ORACLE_SPIN_LIMIT: usize = 20;
/// Largest `alpha * l` for which every auxiliary array is tried.
pub const AUX_SEARCH_LIMIT: usize = 16;
/// Largest number of coefficient vectors on a coarse grid.
pub const GRID_POINT_LIMIT: usize = 4096;

fn check_spins(n_spins: usize, psi: &[f64]) -> Result<()> {
    if n_spins > ORACLE_SPIN_LIMIT {
        return Err(Error::EnumerationLimit { spins: n_spins, limit: ORACLE_SPIN_LIMIT });
    }
    let expected = coefficient_count(n_spins);
    if psi.len() != expected {
        return Err(Error::DimensionMismatch { expected, actual: psi.len() });
    }
    Ok(())
}

/// Probabilities of all `2^N` states, indexed like [`crate::ising::SpinVector::from_index`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    n_spins: usize,
    probabilities: Vec<f64>,
}

impl ExactDistribution {
    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, s: &[Spin]) -> f64 {
        self.probabilities[spins_to_index(s) as usize]
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Index of the most probable state (lowest index on ties).
    pub fn mode(&self) -> u64 {
        let mut best = 0;
        for (k, &p) in self.probabilities.iter().enumerate() {
            if p > self.probabilities[best] {
                best = k;
            }
        }
        best as u64
    }

    /// Total-variation distance to frequencies over the same state space.
    pub fn total_variation(&self, frequencies: &[f64]) -> f64 {
        assert_eq!(frequencies.len(), self.probabilities.len());
        0.5 * self.probabilities.iter().zip(frequencies).map(|(p, q)| (p - q).abs()).sum::<f64>()
    }
}

/// Enumerates `exp(-beta H(s)) / Z` for every state in log space.
pub fn enumerate_distribution(psi: &[f64], n_spins: usize, config: &ObjectiveConfig) -> Result<ExactDistribution> {
    check_spins(n_spins, psi)?;
    let mut s: Vec<Spin> = vec![-1; n_spins];
    let log_weights: Vec<f64> = (0..1u64 << n_spins)
        .map(|k| {
            fill_spins_from_index(&mut s, k);
            -config.beta * hamiltonian(psi, &s)
        })
        .collect();
    let log_z = log_sum_exp(&log_weights);
    let probabilities = log_weights.iter().map(|w| exp(w - log_z)).collect();
    Ok(ExactDistribution { n_spins, probabilities })
}

/// A coarse grid on a low-rank subspace of coefficient space.
///
/// Grid points are `psi = sum_k t_k b_k` projected onto the box, where every
/// `t_k` takes `points_per_axis` evenly spaced values in `[-radius, radius]`.
/// With state sets, `b_1` points along the minimizer of the convex hinge
/// problem of [`feasibility_check`], scaled to touch the box at `t_1 = radius`;
/// the remaining basis vectors are random sign vectors drawn from `seed`. With an odd point count the
/// origin is on the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseGrid {
    pub rank: usize,
    pub points_per_axis: usize,
    pub radius: f64,
    pub seed: u64,
}

impl Default for CoarseGrid {
    fn default() -> Self {
        Self { rank: 3, points_per_axis: 5, radius: 1.0, seed: 0 }
    }
}

impl CoarseGrid {
    pub fn size(&self) -> Option<usize> {
        self.points_per_axis.checked_pow(self.rank as u32)
    }

    fn validate(&self) -> Result<usize> {
        if self.rank == 0 || self.points_per_axis < 2 || !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidArgument(
                "coarse grid needs rank >= 1, >= 2 points and a positive radius".into(),
            ));
        }
        match self.size() {
            Some(n) if n <= GRID_POINT_LIMIT => Ok(n),
            _ => Err(Error::SearchLimit { size: usize::MAX, limit: GRID_POINT_LIMIT }),
        }
    }

    /// Every grid point on a purely random subspace, in a fixed order.
    pub fn points(&self, dim: usize, range: &DynamicRange) -> Result<Vec<Vec<f64>>> {
        self.points_with(None, dim, range)
    }

    /// Every grid point on the subspace spanned by the separating direction
    /// of `sets` and random directions, in a fixed order.
    pub fn points_for(&self, sets: &StateSets, range: &DynamicRange) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        let first = separating_direction(sets, range, self.radius)?;
        self.points_with(first, sets.dim(), range)
    }

    fn points_with(&self, first: Option<Vec<f64>>, dim: usize, range: &DynamicRange) -> Result<Vec<Vec<f64>>> {
        let size = self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut basis: Vec<Vec<f64>> = first.into_iter().collect();
        while basis.len() < self.rank {
            basis.push((0..dim).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect());
        }
        let step = 2.0 * self.radius / (self.points_per_axis - 1) as f64;
        let mut out = Vec::with_capacity(size);
        for mut k in 0..size {
            let mut psi = vec![0.0; dim];
            for b in &basis {
                let t = -self.radius + step * (k % self.points_per_axis) as f64;
                k /= self.points_per_axis;
                for (p, &bj) in psi.iter_mut().zip(b) {
                    *p += t * bj;
                }
            }
            range.project(&mut psi);
            out.push(psi);
        }
        Ok(out)
    }
}

/// The hinge-loss separating coefficients, rescaled so the largest entry
/// reaches the box edge at `t = radius`. `None` when the separator is zero.
fn separating_direction(sets: &StateSets, range: &DynamicRange, radius: f64) -> Result<Option<Vec<f64>>> {
    let opts = SolverOptions { starts: 1, ..SolverOptions::default() };
    let psi = feasibility_check(sets, range, &opts)?.psi;
    let peak = psi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak == 0.0 {
        return Ok(None);
    }
    let edge = range.hi().min(-range.lo()).max(range.hi().max(-range.lo()) * 1e-3);
    Ok(Some(psi.iter().map(|x| x / peak * edge / radius).collect()))
}

/// `1 - min over the grid of max_i p_W(i)`, using the exact (unsmoothed) max.
///
/// A ranking heuristic: the grid is far too coarse to locate true optima.
pub fn grid_rho(sets: &StateSets, grid: &CoarseGrid, range: &DynamicRange, config: &ObjectiveConfig) -> Result<f64> {
    config.validate()?;
    let points = grid.points_for(sets, range)?;
    let mut objective = BoltzmannObjective::new(sets, *config);
    let mut best = f64::INFINITY;
    for psi in &points {
        best = best.min(objective.evaluate(psi, false).max_row());
    }
    Ok((-crate::math::expm1(best)).clamp(0.0, 1.0))
}

/// Result of [`brute_force_best_aux`].
#[derive(Debug, Clone, PartialEq)]
pub struct AuxSearch {
    pub best: AuxiliaryArray,
    pub rho: f64,
    /// Number of arrays scored; equals the number of possible arrays.
    pub evaluated: u64,
}

/// Scores every auxiliary array of `table` on `grid` and returns the best one
/// (lowest enumeration index on ties).
pub fn brute_force_best_aux(
    table: &TruthTable,
    opts: StateSetOptions,
    range: &DynamicRange,
    config: &ObjectiveConfig,
    grid: &CoarseGrid,
) -> Result<AuxSearch> {
    let len = table.aux_array_len();
    if len > AUX_SEARCH_LIMIT {
        return Err(Error::SearchLimit { size: len, limit: AUX_SEARCH_LIMIT });
    }
    grid.validate()?;
    let alpha = table.shape().aux();
    let arrays: u64 = if alpha == 0 { 1 } else { 1 << len };
    let mut best: Option<(AuxiliaryArray, f64)> = None;
    for index in 0..arrays {
        let aux =
            if alpha == 0 { AuxiliaryArray::empty() } else { AuxiliaryArray::from_index(table.len(), alpha, index) };
        let sets = build_state_sets(table, &aux, opts)?;
        let rho = grid_rho(&sets, grid, range, config)?;
        if best.as_ref().is_none_or(|(_, r)| rho > *r) {
            best = Some((aux, rho));
        }
    }
    let (best, rho) = best.expect("at least one array is scored");
    Ok(AuxSearch { best, rho, evaluated: arrays })
}

/// Visit counts of a Metropolis chain.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    pub counts: Vec<u64>,
    pub burn_in: u64,
    pub visits: u64,
}

impl EmpiricalDistribution {
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.visits.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// Single-spin-flip Metropolis chain targeting `exp(-beta H)`.
///
/// Starts from a uniformly random state, proposes flipping one uniformly chosen
/// spin per step and accepts with `min(1, exp(-beta dH))`. The first 10% of
/// steps are discarded; every later step records the current state once.
pub fn metropolis_sample(
    psi: &[f64],
    n_spins: usize,
    config: &ObjectiveConfig,
    steps: u64,
    seed: u64,
) -> Result<EmpiricalDistribution> {
    check_spins(n_spins, psi)?;
    if steps == 0 || n_spins == 0 {
        return Err(Error::InvalidArgument("metropolis needs at least one step and one spin".into()));
    }
    let mut coupling = vec![0.0; n_spins * n_spins];
    for i in 0..n_spins {
        for j in i + 1..n_spins {
            let v = psi[pair_index(n_spins, i, j)];
            coupling[i * n_spins + j] = v;
            coupling[j * n_spins + i] = v;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s: Vec<Spin> = (0..n_spins).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    let mut index = spins_to_index(&s);
    let burn_in = steps / 10;
    let mut counts = vec![0u64; 1 << n_spins];
    for step in 0..steps {
        let i = rng.random_range(0..n_spins);
        let local: f64 = psi[i]
            + coupling[i * n_spins..(i + 1) * n_spins].iter().zip(&s).map(|(j, &sj)| j * f64::from(sj)).sum::<f64>();
        let delta = -2.0 * f64::from(s[i]) * local;
        let accept = delta <= 0.0 || rng.random::<f64>() < exp(-config.beta * delta);
        if accept {
            s[i] = -s[i];
            index ^= 1 << i;
        }
        if step >= burn_in {
            counts[index as usize] += 1;
        }
    }
    Ok(EmpiricalDistribution { counts, burn_in, visits: steps - burn_in })
}
