//! Boltzmann probabilities, the smoothed min-max failure objective and its
//! analytic gradient.
//!
//! States are weighted by `exp(-beta * H(s))`, so lower energy means higher
//! probability. For truth-table row `i` with correct states `R_i` and wrong
//! states `W_i`,
//!
//! ```text
//! log p_W(i) = lse_{w in W_i}(-beta H(w)) - lse_{s in R_i u W_i}(-beta H(s))
//! f(psi)     = lse_i(lambda * log p_W(i)) / lambda
//! ```
//!
//! Everything is evaluated in log space; probabilities are only exponentiated
//! at the API boundary. Rows are reduced in table order and states in set
//! order, so results are bitwise reproducible.

use alloc::vec;
use alloc::vec::Vec;

use crate::ising::{coefficient_count, fill_spins_from_index, hamiltonian, Spin, StateSets};
use crate::math::{self, dot, exp, ln};
use crate::{Error, Result};

/// Largest system [`exact_state_probability`] will enumerate.
pub const ENUMERATION_LIMIT: usize = 26;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveConfig {
    /// Inverse temperature `beta * T`.
    pub beta: f64,
    /// Sharpness of the smoothed maximum.
    pub lambda: f64,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self { beta: 1.0, lambda: 100.0 }
    }
}

impl ObjectiveConfig {
    pub fn new(beta: f64, lambda: f64) -> Result<Self> {
        let cfg = Self { beta, lambda };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidArgument(alloc::format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.lambda.is_finite() && self.lambda >= 1.0) {
            return Err(Error::InvalidArgument(alloc::format!("lambda must be >= 1, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// Result of evaluating the smoothed objective at one coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveEvaluation {
    pub value: f64,
    pub per_row_log_pw: Vec<f64>,
    pub gradient: Option<Vec<f64>>,
}

impl ObjectiveEvaluation {
    /// Largest per-row log failure probability (the unsmoothed objective).
    pub fn max_row(&self) -> f64 {
        self.per_row_log_pw.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `max(xs) + ln sum exp(xs - max(xs))`.
///
/// Panics on an empty slice. Returns `-inf` when every entry is `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty(), "log_sum_exp of an empty sequence");
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + ln(xs.iter().map(|&x| exp(x - max)).sum::<f64>())
}

/// `ln(exp(a) + exp(b))`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + libm::log1p(exp(lo - hi))
}

/// `ln(1 + exp(x))` without overflow or cancellation.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + libm::log1p(exp(-x))
    } else {
        libm::log1p(exp(x))
    }
}

/// `(log p_W, log p_R)` from the log-sum-exps of the wrong and correct weights.
///
/// `log p_W = -ln(1 + exp(lse_R - lse_W))` keeps full relative precision when
/// `p_W` is within rounding of one, where `lse_W - lse_Z` would cancel.
#[inline]
fn split_log_probabilities(lse_r: f64, lse_w: f64) -> (f64, f64) {
    let d = lse_r - lse_w;
    (-softplus(d), -softplus(-d))
}

/// Single-pass log-sum-exp for sequences too long to buffer.
#[derive(Debug, Clone, Copy)]
pub struct StreamingLogSumExp {
    max: f64,
    scaled_sum: f64,
}

impl Default for StreamingLogSumExp {
    fn default() -> Self {
        Self { max: f64::NEG_INFINITY, scaled_sum: 0.0 }
    }
}

impl StreamingLogSumExp {
    pub fn push(&mut self, x: f64) {
        if x <= self.max {
            self.scaled_sum += exp(x - self.max);
        } else {
            self.scaled_sum = self.scaled_sum * exp(self.max - x) + 1.0;
            self.max = x;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            return self.max;
        }
        self.max + ln(self.scaled_sum)
    }
}

fn check_enumerable(n_spins: usize, limit: usize) -> Result<()> {
    if n_spins > limit {
        return Err(Error::EnumerationLimit { spins: n_spins, limit });
    }
    Ok(())
}

/// `ln Z = ln sum_s exp(-beta H(s))` over all `2^N` states.
pub fn log_partition_function(psi: &[f64], n_spins: usize, config: &ObjectiveConfig) -> Result<f64> {
    check_enumerable(n_spins, ENUMERATION_LIMIT)?;
    check_len(psi, n_spins)?;
    let mut acc = StreamingLogSumExp::default();
    let mut s: Vec<Spin> = vec![-1; n_spins];
    for k in 0..1u64 << n_spins {
        fill_spins_from_index(&mut s, k);
        acc.push(-config.beta * hamiltonian(psi, &s));
    }
    Ok(acc.value())
}

/// Exact `exp(-beta H(s)) / Z`, enumerating the whole system.
pub fn exact_state_probability(psi: &[f64], s: &[Spin], config: &ObjectiveConfig) -> Result<f64> {
    let log_z = log_partition_function(psi, s.len(), config)?;
    Ok(exp(-config.beta * hamiltonian(psi, s) - log_z))
}

fn check_len(psi: &[f64], n_spins: usize) -> Result<()> {
    let expected = coefficient_count(n_spins);
    if psi.len() != expected {
        return Err(Error::DimensionMismatch { expected, actual: psi.len() });
    }
    Ok(())
}

/// Log-weights `-beta * (M . psi)` of every row of a feature matrix, plus their log-sum-exp.
fn log_weights(rows: core::slice::ChunksExact<'_, f64>, psi: &[f64], beta: f64, out: &mut Vec<f64>) -> f64 {
    let start = out.len();
    out.extend(rows.map(|phi| -beta * dot(phi, psi)));
    log_sum_exp(&out[start..])
}

/// `(log p_W, log p_R)` of truth-table row `row`.
pub fn log_row_probabilities(psi: &[f64], sets: &StateSets, row: usize, config: &ObjectiveConfig) -> (f64, f64) {
    let r = &sets.rows()[row];
    let mut buf = Vec::with_capacity(r.correct.rows() + r.wrong.rows());
    let lse_r = log_weights(r.correct.iter_rows(), psi, config.beta, &mut buf);
    let lse_w = log_weights(r.wrong.iter_rows(), psi, config.beta, &mut buf);
    split_log_probabilities(lse_r, lse_w)
}

/// Probability of landing in a wrong state of row `row` rather than its correct state(s).
pub fn wrong_probability(psi: &[f64], sets: &StateSets, row: usize, config: &ObjectiveConfig) -> f64 {
    exp(log_row_probabilities(psi, sets, row, config).0)
}

/// `1 - p_W`, computed from its own log so it stays accurate when `p_W` is near one.
pub fn correct_probability(psi: &[f64], sets: &StateSets, row: usize, config: &ObjectiveConfig) -> f64 {
    exp(log_row_probabilities(psi, sets, row, config).1)
}

/// Reusable evaluator of the smoothed objective over fixed state sets.
#[derive(Debug, Clone)]
pub struct BoltzmannObjective<'a> {
    sets: &'a StateSets,
    config: ObjectiveConfig,
    // per-state log-weights, rows concatenated as (correct, wrong)
    log_w: Vec<f64>,
    lse_r: Vec<f64>,
    lse_w: Vec<f64>,
    log_pw: Vec<f64>,
}

impl<'a> BoltzmannObjective<'a> {
    pub fn new(sets: &'a StateSets, config: ObjectiveConfig) -> Self {
        let states = sets.rows().iter().map(|r| r.correct.rows() + r.wrong.rows()).sum();
        let rows = sets.len();
        Self {
            sets,
            config,
            log_w: Vec::with_capacity(states),
            lse_r: vec![0.0; rows],
            lse_w: vec![0.0; rows],
            log_pw: vec![0.0; rows],
        }
    }

    pub fn dim(&self) -> usize {
        self.sets.dim()
    }

    pub fn config(&self) -> &ObjectiveConfig {
        &self.config
    }

    pub fn sets(&self) -> &StateSets {
        self.sets
    }

    fn forward(&mut self, psi: &[f64]) -> f64 {
        assert_eq!(psi.len(), self.sets.dim(), "coefficient vector length");
        let beta = self.config.beta;
        self.log_w.clear();
        for (i, r) in self.sets.rows().iter().enumerate() {
            let lse_r = log_weights(r.correct.iter_rows(), psi, beta, &mut self.log_w);
            let lse_w = log_weights(r.wrong.iter_rows(), psi, beta, &mut self.log_w);
            self.lse_r[i] = lse_r;
            self.lse_w[i] = lse_w;
            self.log_pw[i] = split_log_probabilities(lse_r, lse_w).0;
        }
        smoothed_max(&self.log_pw, self.config.lambda)
    }

    /// `f(psi)`.
    pub fn value(&mut self, psi: &[f64]) -> f64 {
        self.forward(psi)
    }

    /// `f(psi)`, writing `df/dpsi` into `grad`.
    ///
    /// Per row, `d log p_W / d psi = beta * p_R * (E_R[phi] - E_W[phi])` where the
    /// expectations are Boltzmann-weighted means of the feature rows, each
    /// normalized by its own log-sum-exp offset. Rows are combined with the
    /// softmax weights `exp(lambda * (log p_W - f))`.
    pub fn value_and_gradient(&mut self, psi: &[f64], grad: &mut [f64]) -> f64 {
        let f = self.forward(psi);
        assert_eq!(grad.len(), psi.len(), "gradient buffer length");
        grad.iter_mut().for_each(|g| *g = 0.0);
        let (beta, lambda) = (self.config.beta, self.config.lambda);
        let mut offset = 0;
        for (i, r) in self.sets.rows().iter().enumerate() {
            let (nr, nw) = (r.correct.rows(), r.wrong.rows());
            let log_pr = split_log_probabilities(self.lse_r[i], self.lse_w[i]).1;
            let row_scale = beta * exp(log_pr) * exp(lambda * (self.log_pw[i] - f));
            if row_scale != 0.0 {
                let weights = &self.log_w[offset..offset + nr + nw];
                for (phi, &lw) in r.correct.iter_rows().zip(&weights[..nr]) {
                    axpy(row_scale * exp(lw - self.lse_r[i]), phi, grad);
                }
                for (phi, &lw) in r.wrong.iter_rows().zip(&weights[nr..]) {
                    axpy(-row_scale * exp(lw - self.lse_w[i]), phi, grad);
                }
            }
            offset += nr + nw;
        }
        f
    }

    /// Full evaluation record, with or without the gradient.
    pub fn evaluate(&mut self, psi: &[f64], with_gradient: bool) -> ObjectiveEvaluation {
        let (value, gradient) = if with_gradient {
            let mut g = vec![0.0; psi.len()];
            let f = self.value_and_gradient(psi, &mut g);
            (f, Some(g))
        } else {
            (self.forward(psi), None)
        };
        ObjectiveEvaluation { value, per_row_log_pw: self.log_pw.clone(), gradient }
    }
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// `lse(lambda * xs) / lambda`.
pub fn smoothed_max(xs: &[f64], lambda: f64) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = xs.iter().map(|&x| exp(lambda * (x - max))).sum();
    max + ln(sum) / lambda
}

/// Smoothed objective value and per-row log failure probabilities.
pub fn objective(psi: &[f64], sets: &StateSets, config: &ObjectiveConfig) -> ObjectiveEvaluation {
    BoltzmannObjective::new(sets, *config).evaluate(psi, false)
}

/// Analytic gradient of the smoothed objective.
pub fn gradient(psi: &[f64], sets: &StateSets, config: &ObjectiveConfig) -> Vec<f64> {
    let mut g = vec![0.0; psi.len()];
    BoltzmannObjective::new(sets, *config).value_and_gradient(psi, &mut g);
    g
}

/// `1 - exp(f*)`, clamped to `[0, 1]`.
pub fn rho(solved_value: f64) -> f64 {
    if solved_value.is_nan() {
        return 0.0;
    }
    (-math::expm1(solved_value)).clamp(0.0, 1.0)
}

/// Central differences `(f(x + h e_k) - f(x - h e_k)) / 2h` for every coordinate.
pub fn central_difference<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], h: f64) -> Vec<f64> {
    assert!(h > 0.0, "finite-difference step must be positive");
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            probe[k] = x[k] + h;
            let up = f(&probe);
            probe[k] = x[k] - h;
            let down = f(&probe);
            probe[k] = x[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Central-difference gradient of the smoothed objective.
pub fn finite_difference_gradient(psi: &[f64], sets: &StateSets, config: &ObjectiveConfig, h: f64) -> Vec<f64> {
    let mut obj = BoltzmannObjective::new(sets, *config);
    central_difference(|x| obj.value(x), psi, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::{
        build_state_sets, feature_map, AuxiliaryArray, SpinVector, StateSetOptions, SystemShape, TruthTable,
    };
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_psi(rng: &mut ChaCha8Rng, dim: usize, bound: f64) -> Vec<f64> {
        (0..dim).map(|_| rng.random_range(-bound..=bound)).collect()
    }

    fn example_sets() -> StateSets {
        // s = (-1, 1, -1) with only the third spin free
        let shape = SystemShape::new(2, 1, 0).unwrap();
        let table = TruthTable::from_bits(shape, &[(vec![0, 1], vec![0])]).unwrap();
        build_state_sets(&table, &AuxiliaryArray::empty(), StateSetOptions::default()).unwrap()
    }

    #[test]
    fn lse_basics() {
        assert!((log_sum_exp(&[0.0, 0.0]) - core::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(log_sum_exp(&[1000.0, 1000.0]), 1000.0 + core::f64::consts::LN_2);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        assert!((log_add_exp(3.0, -1.0) - log_sum_exp(&[3.0, -1.0])).abs() < 1e-15);
    }

    #[test]
    #[should_panic]
    fn lse_empty_panics() {
        log_sum_exp(&[]);
    }

    #[test]
    fn streaming_lse_matches_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs = random_psi(&mut rng, 500, 800.0);
        let mut acc = StreamingLogSumExp::default();
        xs.iter().for_each(|&x| acc.push(x));
        assert!((acc.value() - log_sum_exp(&xs)).abs() < 1e-12 * log_sum_exp(&xs).abs());
    }

    proptest! {
        #[test]
        fn lse_shift_identity(xs in proptest::collection::vec(-50.0f64..50.0, 1..20), c in -500.0f64..500.0) {
            let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
            prop_assert!((log_sum_exp(&shifted) - (log_sum_exp(&xs) + c)).abs() < 1e-9);
        }
    }

    #[test]
    fn uniform_at_zero() {
        let psi = vec![0.0; 6];
        let cfg = ObjectiveConfig::default();
        for k in 0..8 {
            let p = exact_state_probability(&psi, SpinVector::from_index(3, k).as_slice(), &cfg).unwrap();
            assert!((p - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn field_favours_low_energy() {
        let psi = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        let cfg = ObjectiveConfig::default();
        for k in 0..4u64 {
            let mut s = SpinVector::from_index(2, k).into_inner();
            s.push(-1);
            let low = exact_state_probability(&psi, &s, &cfg).unwrap();
            s[2] = 1;
            let high = exact_state_probability(&psi, &s, &cfg).unwrap();
            // brute-force ratio is e^{2 beta h3}
            assert!(low > high);
            assert!((low / high - exp(2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn enumeration_guard() {
        let psi = vec![0.0; coefficient_count(27)];
        let s = vec![1; 27];
        assert!(matches!(
            exact_state_probability(&psi, &s, &ObjectiveConfig::default()),
            Err(Error::EnumerationLimit { .. })
        ));
    }

    #[test]
    fn normalization_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfg = ObjectiveConfig::default();
        for n in [1usize, 4, 8] {
            let psi = random_psi(&mut rng, coefficient_count(n), 2.0);
            let total: f64 = (0..1u64 << n)
                .map(|k| exact_state_probability(&psi, SpinVector::from_index(n, k).as_slice(), &cfg).unwrap())
                .sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wrong_probability_at_zero() {
        let table = TruthTable::multiplier(1, 2).unwrap();
        let sets = build_state_sets(&table, &AuxiliaryArray::empty(), StateSetOptions::default()).unwrap();
        let psi = vec![0.0; sets.dim()];
        let cfg = ObjectiveConfig::default();
        for i in 0..sets.len() {
            assert!((wrong_probability(&psi, &sets, i, &cfg) - 7.0 / 8.0).abs() < 1e-15);
        }
        let eval = objective(&psi, &sets, &cfg);
        let base = ln(7.0 / 8.0);
        assert!(eval.value >= base - 1e-15 && eval.value <= base + ln(sets.len() as f64) / cfg.lambda + 1e-15);
    }

    #[test]
    fn complement_sums_to_one() {
        let table = TruthTable::multiplier(2, 2).unwrap().with_aux(1);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let aux = AuxiliaryArray::random(16, 1, &mut rng);
        let sets = build_state_sets(&table, &aux, StateSetOptions::default()).unwrap();
        let cfg = ObjectiveConfig::default();
        for _ in 0..10 {
            let psi = random_psi(&mut rng, sets.dim(), 4.0);
            for i in 0..sets.len() {
                let s = wrong_probability(&psi, &sets, i, &cfg) + correct_probability(&psi, &sets, i, &cfg);
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_state_wrong_probability() {
        let sets = example_sets();
        let cfg = ObjectiveConfig::new(1.0, 100.0).unwrap();
        let mut psi = vec![0.0; 6];
        psi[2] = -3.0; // favours s3 = +1, the wrong state
        let correct = [-1, 1, -1];
        let wrong = [-1, 1, 1];
        let (hc, hw) = (hamiltonian(&psi, &correct), hamiltonian(&psi, &wrong));
        let expected = exp(-hw) / (exp(-hc) + exp(-hw));
        assert!((wrong_probability(&psi, &sets, 0, &cfg) - expected).abs() < 1e-15);
        assert!(expected > 0.99);
    }

    #[test]
    fn single_row_objective_is_row_value() {
        let sets = example_sets();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for lambda in [1.0, 10.0, 1e4] {
            let cfg = ObjectiveConfig::new(1.0, lambda).unwrap();
            let psi = random_psi(&mut rng, 6, 4.0);
            let eval = objective(&psi, &sets, &cfg);
            assert!((eval.value - eval.per_row_log_pw[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn two_state_gradient_closed_form() {
        // log p_W = log sigmoid(-beta * d), d = (phi_w - phi_c) . psi
        // d/dpsi = -beta * sigmoid(beta * d) * (phi_w - phi_c)
        let sets = example_sets();
        let phi_c = feature_map(&[-1, 1, -1]);
        let phi_w = feature_map(&[-1, 1, 1]);
        let diff: Vec<f64> = phi_w.iter().zip(&phi_c).map(|(w, c)| w - c).collect();
        let points = [
            [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.5, -1.0, 2.0, 0.3, -0.7, 1.1],
            [-4.0, 4.0, -4.0, 4.0, -4.0, 4.0],
            [1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
            [0.0, 0.0, -2.5, 0.0, 3.0, 0.25],
        ];
        for (beta, psi) in [0.5, 1.0, 2.0, 1.0, 0.7].into_iter().zip(points) {
            let cfg = ObjectiveConfig::new(beta, 100.0).unwrap();
            let d = dot(&diff, &psi);
            let sig = 1.0 / (1.0 + exp(-beta * d));
            let g = gradient(&psi, &sets, &cfg);
            for (gk, dk) in g.iter().zip(&diff) {
                assert!((gk - (-beta * sig * dk)).abs() < 1e-13);
            }
        }
    }

    fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum();
        math::sqrt(num) / math::sqrt(den).max(1e-300)
    }

    #[test]
    fn gradient_matches_finite_differences_problem_one() {
        let table = TruthTable::multiplier(2, 2).unwrap().with_aux(1);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let cfg = ObjectiveConfig::default();
        for _ in 0..5 {
            let aux = AuxiliaryArray::random(16, 1, &mut rng);
            let sets = build_state_sets(&table, &aux, StateSetOptions::default()).unwrap();
            let psi = random_psi(&mut rng, sets.dim(), 4.0);
            let g = gradient(&psi, &sets, &cfg);
            let fd = finite_difference_gradient(&psi, &sets, &cfg, 1e-5);
            assert!(relative_l2(&g, &fd) < 1e-5, "rel err {}", relative_l2(&g, &fd));
        }
    }

    #[test]
    fn fd_of_linear_function() {
        let c = [1.5, -2.0, 0.25];
        let g = central_difference(|x| dot(&c, x), &[0.3, 7.0, -1.0], 1e-3);
        for (gk, ck) in g.iter().zip(&c) {
            assert!((gk - ck).abs() < 1e-9);
        }
    }

    #[test]
    fn larger_lambda_never_increases() {
        let table = TruthTable::multiplier(1, 2).unwrap().with_aux(1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let aux = AuxiliaryArray::random(8, 1, &mut rng);
        let sets = build_state_sets(&table, &aux, StateSetOptions::default()).unwrap();
        for _ in 0..20 {
            let psi = random_psi(&mut rng, sets.dim(), 3.0);
            let mut prev = f64::INFINITY;
            for lambda in [1.0, 2.0, 10.0, 100.0, 1000.0] {
                let v = objective(&psi, &sets, &ObjectiveConfig::new(1.0, lambda).unwrap()).value;
                assert!(v <= prev + 1e-12);
                prev = v;
            }
        }
    }

    #[test]
    fn huge_coefficients_stay_finite() {
        let table = TruthTable::multiplier(2, 2).unwrap().with_aux(1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let aux = AuxiliaryArray::random(16, 1, &mut rng);
        let sets = build_state_sets(&table, &aux, StateSetOptions::default()).unwrap();
        let cfg = ObjectiveConfig::default();
        let psi = random_psi(&mut rng, sets.dim(), 1e4);
        let eval = BoltzmannObjective::new(&sets, cfg).evaluate(&psi, true);
        assert!(eval.value.is_finite());
        assert!(eval.gradient.unwrap().iter().all(|g| g.is_finite()));
    }

    #[test]
    fn rho_values() {
        assert_eq!(rho(0.0), 0.0);
        assert_eq!(rho(f64::NEG_INFINITY), 1.0);
        assert!((rho(ln(0.5)) - 0.5).abs() < 1e-15);
        assert_eq!(rho(0.3), 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(ObjectiveConfig::new(0.0, 100.0).is_err());
        assert!(ObjectiveConfig::new(1.0, 0.5).is_err());
        assert!(ObjectiveConfig::new(2.0, 1.0).is_ok());
    }
}
