//! Wall-clock comparison of the finite-difference solver, the analytic
//! solver and trained surrogates on the same auxiliary arrays.

use std::io::Write;
use std::time::{Duration, Instant};

use revising_core::boltzmann::ObjectiveConfig;
use revising_core::datagen::{sample_aux_arrays, DatagenOptions};
use revising_core::ising::{build_state_sets, DynamicRange, StateSetOptions, TruthTable};
use revising_core::solver::{minimize, GradientMode, SolverOptions};
use revising_core::surrogate::Regressor;

use crate::formats::io_err;
use crate::Result;

pub const FINITE_DIFFERENCE: &str = "finite-difference";
pub const ANALYTIC: &str = "analytic";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    /// Arrays to time, half feasible and half not.
    pub count: usize,
    pub seed: u64,
    pub fd_step: f64,
    /// Each surrogate predicts every array this many times, since one
    /// prediction is far below timer resolution.
    pub predictor_repeats: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self { count: 10, seed: 0, fd_step: 1e-6, predictor_repeats: 100 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchTiming {
    pub method: String,
    pub queries: usize,
    pub total: Duration,
}

impl BenchTiming {
    pub fn mean(&self) -> Duration {
        if self.queries == 0 {
            Duration::ZERO
        } else {
            self.total.div_f64(self.queries as f64)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub arrays: usize,
    pub timings: Vec<BenchTiming>,
}

impl BenchReport {
    pub fn get(&self, method: &str) -> Option<&BenchTiming> {
        self.timings.iter().find(|t| t.method == method)
    }

    /// Mean time of `slow` over mean time of `fast`.
    pub fn speedup(&self, slow: &str, fast: &str) -> Option<f64> {
        let (s, f) = (self.get(slow)?.mean(), self.get(fast)?.mean());
        (!f.is_zero()).then(|| s.as_secs_f64() / f.as_secs_f64())
    }

    /// Analytic faster than finite differences, every surrogate faster than
    /// the analytic solver.
    pub fn ordering_holds(&self) -> bool {
        let Some(analytic) = self.get(ANALYTIC) else {
            return true;
        };
        self.speedup(FINITE_DIFFERENCE, ANALYTIC).is_none_or(|r| r > 1.0)
            && self
                .timings
                .iter()
                .filter(|t| t.method != ANALYTIC && t.method != FINITE_DIFFERENCE)
                .all(|t| t.mean() < analytic.mean())
    }

    /// Speedups of each method over the next slower one in the table.
    fn ratios(&self) -> Vec<(String, String, f64)> {
        self.timings
            .windows(2)
            .filter_map(|w| Some((w[0].method.clone(), w[1].method.clone(), self.speedup(&w[0].method, &w[1].method)?)))
            .collect()
    }

    pub fn format_text(&self, w: &mut dyn Write) -> Result<()> {
        let width = self.timings.iter().map(|t| t.method.len()).max().unwrap_or(0).max("method".len());
        let mut out = format!("{:<width$}  {:>8}  {:>14}  {:>14}\n", "method", "queries", "total_s", "mean_s");
        for t in &self.timings {
            out += &format!(
                "{:<width$}  {:>8}  {:>14.6e}  {:>14.6e}\n",
                t.method,
                t.queries,
                t.total.as_secs_f64(),
                t.mean().as_secs_f64()
            );
        }
        for (slow, fast, r) in self.ratios() {
            out += &format!("speedup {fast} over {slow}: {r:.1}x\n");
        }
        w.write_all(out.as_bytes()).map_err(io_err)
    }

    pub fn format_csv(&self, w: &mut dyn Write) -> Result<()> {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["method", "queries", "total_seconds", "mean_seconds"])?;
        for t in &self.timings {
            csv.write_record([
                t.method.clone(),
                t.queries.to_string(),
                t.total.as_secs_f64().to_string(),
                t.mean().as_secs_f64().to_string(),
            ])?;
        }
        csv.flush().map_err(io_err)?;
        Ok(())
    }
}

/// Times every method on the same `opts.count` arrays. Solvers run one
/// array at a time on the calling thread.
#[allow(clippy::too_many_arguments)]
pub fn run_bench(
    table: &TruthTable,
    range: &DynamicRange,
    config: &ObjectiveConfig,
    state_options: StateSetOptions,
    solver: &SolverOptions,
    predictors: &[(&str, &dyn Regressor)],
    opts: &BenchOptions,
) -> Result<BenchReport> {
    if opts.count == 0 {
        return Ok(BenchReport::default());
    }
    let dg = DatagenOptions { solver: solver.clone(), state_options, seed: opts.seed, ..Default::default() };
    let arrays = sample_aux_arrays(table, opts.count, Some(0.5), range, &dg)?;
    let sets =
        arrays.iter().map(|a| build_state_sets(table, a, state_options)).collect::<std::result::Result<Vec<_>, _>>()?;

    let mut timings = Vec::new();
    for (method, gradient) in
        [(FINITE_DIFFERENCE, GradientMode::FiniteDifference(opts.fd_step)), (ANALYTIC, GradientMode::Analytic)]
    {
        let so = SolverOptions { gradient, record_trace: false, ..solver.clone() };
        let start = Instant::now();
        for s in &sets {
            minimize(s, range, config, &so)?;
        }
        timings.push(BenchTiming { method: method.into(), queries: sets.len(), total: start.elapsed() });
        log::info!("{method}: {:?}", timings.last().map(BenchTiming::mean));
    }
    for (name, model) in predictors {
        let mut sink = 0.0;
        let start = Instant::now();
        for _ in 0..opts.predictor_repeats {
            for a in &arrays {
                sink += model.predict(std::hint::black_box(a.as_slice()))?;
            }
        }
        std::hint::black_box(sink);
        timings.push(BenchTiming {
            method: (*name).into(),
            queries: arrays.len() * opts.predictor_repeats,
            total: start.elapsed(),
        });
    }
    Ok(BenchReport { arrays: arrays.len(), timings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use revising_core::surrogate::ConstantModel;

    #[test]
    fn empty_bench() {
        let t = TruthTable::multiplier(1, 1).unwrap().with_aux(1);
        let r = DynamicRange::symmetric(4.0).unwrap();
        let opts = BenchOptions { count: 0, ..Default::default() };
        let rep = run_bench(
            &t,
            &r,
            &ObjectiveConfig::default(),
            StateSetOptions::default(),
            &SolverOptions::default(),
            &[],
            &opts,
        )
        .unwrap();
        assert!(rep.timings.is_empty());
        let mut buf = Vec::new();
        rep.format_text(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
    }

    #[test]
    fn small_bench_reports_every_method() {
        let shape = revising_core::ising::SystemShape::new(2, 1, 1).unwrap();
        let rows: Vec<_> = (0..4u8).map(|k| (vec![k & 1, k >> 1], vec![(k & 1) ^ (k >> 1)])).collect();
        let t = TruthTable::from_bits(shape, &rows).unwrap();
        let r = DynamicRange::symmetric(4.0).unwrap();
        let m = ConstantModel { n_features: 4, value: 0.5 };
        let opts = BenchOptions { count: 2, predictor_repeats: 3, ..Default::default() };
        let so = SolverOptions { starts: 1, ..Default::default() };
        let rep =
            run_bench(&t, &r, &ObjectiveConfig::default(), StateSetOptions::default(), &so, &[("constant", &m)], &opts)
                .unwrap();
        let methods: Vec<_> = rep.timings.iter().map(|t| t.method.as_str()).collect();
        assert_eq!(methods, [FINITE_DIFFERENCE, ANALYTIC, "constant"]);
        assert_eq!(rep.get("constant").unwrap().queries, 6);
        let mut csv = Vec::new();
        rep.format_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 4);
    }
}
