//! Box-constrained minimization of the smoothed objective.
//!
//! The minimizer is a projected limited-memory BFGS: the two-loop recursion
//! runs on the free variables (those not pinned at a bound by the sign of
//! their gradient), the step is projected back onto the box and accepted by a
//! backtracking Armijo search. Accepted iterates never increase the objective.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::boltzmann::{central_difference, rho, BoltzmannObjective, ObjectiveConfig};
use crate::ising::{DynamicRange, HamiltonianCoefficients, StateSets};
use crate::math::dot;
use crate::{Error, Result};

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;

/// A function that can be minimized by [`minimize_box`].
pub trait DifferentiableObjective {
    fn dim(&self) -> usize;

    fn value(&mut self, x: &[f64]) -> f64;

    /// Writes the gradient into `grad` and returns the value.
    fn value_and_gradient(&mut self, x: &[f64], grad: &mut [f64]) -> f64;
}

impl DifferentiableObjective for BoltzmannObjective<'_> {
    fn dim(&self) -> usize {
        BoltzmannObjective::dim(self)
    }

    fn value(&mut self, x: &[f64]) -> f64 {
        BoltzmannObjective::value(self, x)
    }

    fn value_and_gradient(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        BoltzmannObjective::value_and_gradient(self, x, grad)
    }
}

/// Replaces the gradient of `inner` with central differences of its value.
#[derive(Debug, Clone)]
pub struct FiniteDifference<O> {
    pub inner: O,
    pub step: f64,
}

impl<O: DifferentiableObjective> DifferentiableObjective for FiniteDifference<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&mut self, x: &[f64]) -> f64 {
        self.inner.value(x)
    }

    fn value_and_gradient(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        let inner = &mut self.inner;
        let g = central_difference(|p| inner.value(p), x, self.step);
        grad.copy_from_slice(&g);
        self.inner.value(x)
    }
}

/// How the solver obtains gradients of the Boltzmann objective.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum GradientMode {
    #[default]
    Analytic,
    /// Central differences with the given step.
    FiniteDifference(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Bound on the infinity norm of the projected gradient.
    pub gradient_tolerance: f64,
    /// Bound on the infinity norm of an accepted step.
    pub step_tolerance: f64,
    pub starts: usize,
    pub seed: u64,
    /// Number of stored curvature pairs.
    pub memory: usize,
    pub gradient: GradientMode,
    /// Start points are drawn from the box intersected with `[-r, r]`; `None`
    /// samples the whole box. Starts deep in the box sit on a plateau where
    /// every wrong state is already dominant and the gradient underflows.
    pub init_radius: Option<f64>,
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            gradient_tolerance: 1e-6,
            step_tolerance: 1e-10,
            starts: 8,
            seed: 0,
            memory: 50,
            gradient: GradientMode::Analytic,
            init_radius: Some(0.25),
            record_trace: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.gradient_tolerance > 0.0 && self.step_tolerance > 0.0) {
            return Err(Error::InvalidArgument("solver tolerances must be positive".into()));
        }
        if self.starts == 0 || self.memory == 0 || self.max_iterations == 0 {
            return Err(Error::InvalidArgument("starts, memory and max_iterations must be at least 1".into()));
        }
        if let Some(r) = self.init_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidArgument("init_radius must be positive and finite".into()));
            }
        }
        if let GradientMode::FiniteDifference(h) = self.gradient {
            if h.is_nan() || h <= 0.0 {
                return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
            }
        }
        Ok(())
    }
}

/// One line of a solver trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub start: usize,
    pub iteration: usize,
    pub f: f64,
    pub step_norm: f64,
    pub projected_gradient_norm: f64,
}

/// Why a local run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    StepTolerance,
    MaxIterations,
    LineSearchFailed,
    NonFinite,
}

impl Termination {
    pub fn converged(&self) -> bool {
        matches!(self, Self::GradientTolerance | Self::StepTolerance)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub termination: Termination,
}

fn projected_gradient_norm(x: &[f64], g: &[f64], range: &DynamicRange) -> f64 {
    x.iter()
        .zip(g)
        .map(|(&xi, &gi)| if (xi <= range.lo() && gi > 0.0) || (xi >= range.hi() && gi < 0.0) { 0.0 } else { gi.abs() })
        .fold(0.0, f64::max)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| f64::max(m, x.abs()))
}

struct Curvature {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// Two-loop recursion: returns `-H q` for the stored inverse-Hessian approximation.
fn lbfgs_direction(q: &[f64], memory: &VecDeque<Curvature>, free: &[bool]) -> Vec<f64> {
    let mut d: Vec<f64> = q.to_vec();
    let mut alphas = vec![0.0; memory.len()];
    let masked_dot =
        |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).zip(free).filter(|(_, &f)| f).map(|((x, y), _)| x * y).sum() };
    for (k, c) in memory.iter().enumerate().rev() {
        let a = c.rho * masked_dot(&c.s, &d);
        alphas[k] = a;
        for ((di, yi), &f) in d.iter_mut().zip(&c.y).zip(free) {
            if f {
                *di -= a * yi;
            }
        }
    }
    if let Some(last) = memory.back() {
        let yy = masked_dot(&last.y, &last.y);
        let sy = masked_dot(&last.s, &last.y);
        if yy > 0.0 && sy > 0.0 {
            let gamma = sy / yy;
            d.iter_mut().for_each(|di| *di *= gamma);
        }
    }
    for (k, c) in memory.iter().enumerate() {
        let b = c.rho * masked_dot(&c.y, &d);
        for ((di, si), &f) in d.iter_mut().zip(&c.s).zip(free) {
            if f {
                *di += (alphas[k] - b) * si;
            }
        }
    }
    for (di, &f) in d.iter_mut().zip(free) {
        *di = if f { -*di } else { 0.0 };
    }
    d
}

/// Projected L-BFGS from `x0` (projected onto `range` first).
pub fn minimize_box<O: DifferentiableObjective + ?Sized>(
    obj: &mut O,
    x0: &[f64],
    range: &DynamicRange,
    opts: &SolverOptions,
    start: usize,
    mut trace: Option<&mut Vec<TraceRecord>>,
) -> LocalResult {
    let n = obj.dim();
    assert_eq!(x0.len(), n, "start point length");
    let mut x = x0.to_vec();
    range.project(&mut x);
    let mut g = vec![0.0; n];
    let mut f = obj.value_and_gradient(&x, &mut g);
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return LocalResult { x, f, iterations: 0, termination: Termination::NonFinite };
    }

    let mut memory: VecDeque<Curvature> = VecDeque::with_capacity(opts.memory);
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut step_norm = 0.0;

    for iteration in 0..opts.max_iterations {
        let pg_norm = projected_gradient_norm(&x, &g, range);
        if let Some(t) = trace.as_deref_mut() {
            t.push(TraceRecord { start, iteration, f, step_norm, projected_gradient_norm: pg_norm });
        }
        if pg_norm <= opts.gradient_tolerance {
            return LocalResult { x, f, iterations: iteration, termination: Termination::GradientTolerance };
        }

        let free: Vec<bool> = x
            .iter()
            .zip(&g)
            .map(|(&xi, &gi)| !((xi <= range.lo() && gi > 0.0) || (xi >= range.hi() && gi < 0.0)))
            .collect();
        let q: Vec<f64> = g.iter().zip(&free).map(|(&gi, &fr)| if fr { gi } else { 0.0 }).collect();

        let mut accepted = None;
        for attempt in 0..2 {
            let steepest = attempt == 1 || memory.is_empty();
            let d = if steepest { q.iter().map(|v| -v).collect() } else { lbfgs_direction(&q, &memory, &free) };
            if !steepest && dot(&d, &q) >= 0.0 {
                memory.clear();
                continue;
            }
            let mut t = if steepest { (1.0 / inf_norm(&d)).min(1.0) } else { 1.0 };
            for _ in 0..MAX_BACKTRACKS {
                for ((xn, &xi), &di) in x_new.iter_mut().zip(&x).zip(&d) {
                    *xn = range.clamp(xi + t * di);
                }
                let decrease: f64 = x_new.iter().zip(&x).zip(&g).map(|((xn, xi), gi)| gi * (xn - xi)).sum();
                if decrease < 0.0 {
                    let f_trial = obj.value_and_gradient(&x_new, &mut g_new);
                    if f_trial.is_finite() && f_trial <= f + ARMIJO_C1 * decrease && f_trial <= f {
                        accepted = Some(f_trial);
                        break;
                    }
                }
                t *= 0.5;
            }
            if accepted.is_some() || steepest {
                break;
            }
            memory.clear();
        }

        let Some(f_next) = accepted else {
            return LocalResult { x, f, iterations: iteration, termination: Termination::LineSearchFailed };
        };
        if g_new.iter().any(|v| !v.is_finite()) {
            return LocalResult { x, f, iterations: iteration, termination: Termination::NonFinite };
        }

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).max(f64::MIN_POSITIVE) {
            if memory.len() == opts.memory {
                memory.pop_front();
            }
            memory.push_back(Curvature { s: s.clone(), y, rho: 1.0 / sy });
        }
        step_norm = inf_norm(&s);
        core::mem::swap(&mut x, &mut x_new);
        core::mem::swap(&mut g, &mut g_new);
        f = f_next;

        if step_norm < opts.step_tolerance {
            if let Some(t) = trace.as_deref_mut() {
                let pg = projected_gradient_norm(&x, &g, range);
                t.push(TraceRecord { start, iteration: iteration + 1, f, step_norm, projected_gradient_norm: pg });
            }
            return LocalResult { x, f, iterations: iteration + 1, termination: Termination::StepTolerance };
        }
    }
    LocalResult { x, f, iterations: opts.max_iterations, termination: Termination::MaxIterations }
}

/// Outcome of a multi-start solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub psi_star: HamiltonianCoefficients,
    pub f_star: f64,
    pub rho: f64,
    /// Iterations of the winning start.
    pub iterations: usize,
    pub converged: bool,
    /// Final objective of every start, `NaN` for starts that failed.
    pub per_start_values: Vec<f64>,
    /// Trace of every start, when requested.
    pub trace: Vec<TraceRecord>,
}

/// Uniform start points in `range ∩ [-radius, radius]`, drawn in order from a
/// ChaCha8 stream seeded with `seed`. Falls back to the whole box when the
/// intersection is empty or degenerate.
pub fn start_points(dim: usize, range: &DynamicRange, radius: Option<f64>, starts: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let box_ = radius.and_then(|r| DynamicRange::new(range.lo().max(-r), range.hi().min(r)).ok()).unwrap_or(*range);
    (0..starts).map(|_| box_.sample(dim, &mut rng)).collect()
}

/// Minimizes the smoothed objective over `range` from `opts.starts` random starts.
pub fn minimize(
    sets: &StateSets,
    range: &DynamicRange,
    config: &ObjectiveConfig,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    opts.validate()?;
    let starts = start_points(sets.dim(), range, opts.init_radius, opts.starts, opts.seed);
    minimize_from(sets, range, config, opts, &starts)
}

/// Like [`minimize`] with explicit start points.
pub fn minimize_from(
    sets: &StateSets,
    range: &DynamicRange,
    config: &ObjectiveConfig,
    opts: &SolverOptions,
    starts: &[Vec<f64>],
) -> Result<SolveResult> {
    opts.validate()?;
    config.validate()?;
    let objective = BoltzmannObjective::new(sets, *config);
    match opts.gradient {
        GradientMode::Analytic => run_starts(objective, sets.n_spins(), range, opts, starts),
        GradientMode::FiniteDifference(step) => {
            run_starts(FiniteDifference { inner: objective, step }, sets.n_spins(), range, opts, starts)
        }
    }
}

fn run_starts<O: DifferentiableObjective>(
    mut obj: O,
    n_spins: usize,
    range: &DynamicRange,
    opts: &SolverOptions,
    starts: &[Vec<f64>],
) -> Result<SolveResult> {
    let mut trace = Vec::new();
    let mut best: Option<LocalResult> = None;
    let mut per_start_values = Vec::with_capacity(starts.len());
    let mut failures: Vec<String> = Vec::new();
    for (k, x0) in starts.iter().enumerate() {
        let local = minimize_box(&mut obj, x0, range, opts, k, opts.record_trace.then_some(&mut trace));
        if local.termination == Termination::NonFinite {
            log::warn!("solver start {k} hit a non-finite objective after {} iterations", local.iterations);
            failures.push(format!("start {k}: non-finite objective"));
            per_start_values.push(f64::NAN);
            continue;
        }
        per_start_values.push(local.f);
        if best.as_ref().is_none_or(|b| local.f < b.f) {
            best = Some(local);
        }
    }
    let best = best.ok_or_else(|| Error::SolverFailed { starts: starts.len(), reason: failures.join("; ") })?;
    Ok(SolveResult {
        psi_star: HamiltonianCoefficients::new(n_spins, best.x, *range)?,
        f_star: best.f,
        rho: rho(best.f),
        iterations: best.iterations,
        converged: best.termination.converged(),
        per_start_values,
        trace,
    })
}

/// Squared hinge `sum max(0, 1 + H(correct) - H(wrong))^2` over every correct/wrong pair.
#[derive(Debug, Clone)]
pub struct HingeObjective {
    dim: usize,
    // rows phi(correct) - phi(wrong)
    diffs: Vec<f64>,
}

impl HingeObjective {
    pub fn new(sets: &StateSets) -> Self {
        let dim = sets.dim();
        let mut diffs = Vec::new();
        for row in sets.rows() {
            for c in row.correct.iter_rows() {
                for w in row.wrong.iter_rows() {
                    diffs.extend(c.iter().zip(w).map(|(a, b)| a - b));
                }
            }
        }
        Self { dim, diffs }
    }

    pub fn constraints(&self) -> usize {
        self.diffs.len() / self.dim
    }

    /// `min H(wrong) - H(correct)` over all pairs.
    pub fn margin(&self, psi: &[f64]) -> f64 {
        self.diffs.chunks_exact(self.dim).map(|d| -dot(d, psi)).fold(f64::INFINITY, f64::min)
    }

    /// Unsquared hinge sum.
    pub fn hinge(&self, psi: &[f64]) -> f64 {
        self.diffs.chunks_exact(self.dim).map(|d| (1.0 + dot(d, psi)).max(0.0)).sum()
    }
}

impl DifferentiableObjective for HingeObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&mut self, x: &[f64]) -> f64 {
        self.diffs
            .chunks_exact(self.dim)
            .map(|d| {
                let v = (1.0 + dot(d, x)).max(0.0);
                v * v
            })
            .sum()
    }

    fn value_and_gradient(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut total = 0.0;
        for d in self.diffs.chunks_exact(self.dim) {
            let v = 1.0 + dot(d, x);
            if v > 0.0 {
                total += v * v;
                for (g, dk) in grad.iter_mut().zip(d) {
                    *g += 2.0 * v * dk;
                }
            }
        }
        total
    }
}

/// Whether some coefficients in the box put every correct state strictly below its wrong states.
#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// `min H(wrong) - H(correct)` at the returned coefficients.
    pub margin: f64,
    /// Unsquared hinge sum at the returned coefficients.
    pub hinge: f64,
    pub psi: Vec<f64>,
}

/// Hinge loss below which a solution counts as separating with unit margin.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-6;

/// Minimizes the squared unit-margin hinge loss (convex in `psi`) from `psi = 0`.
///
/// The sets are feasible when the minimizer reaches zero hinge loss within
/// [`FEASIBILITY_TOLERANCE`], or when it separates every pair with a smaller
/// but strictly positive margin.
pub fn feasibility_check(sets: &StateSets, range: &DynamicRange, opts: &SolverOptions) -> Result<Feasibility> {
    opts.validate()?;
    let mut hinge = HingeObjective::new(sets);
    let x0 = vec![0.0; sets.dim()];
    let local = minimize_box(&mut hinge, &x0, range, opts, 0, None);
    if local.termination == Termination::NonFinite {
        return Err(Error::SolverFailed { starts: 1, reason: "non-finite hinge loss".into() });
    }
    let margin = hinge.margin(&local.x);
    let loss = hinge.hinge(&local.x);
    Ok(Feasibility { feasible: loss <= FEASIBILITY_TOLERANCE || margin > 0.0, margin, hinge: loss, psi: local.x })
}
