//! Run configuration: command-line flags merged over a flat `key = value`
//! file whose keys mirror the flags (`--max-iterations` is `max_iterations`).

use std::path::PathBuf;

use clap::Args;
use revising_core::boltzmann::ObjectiveConfig;
use revising_core::ising::{DynamicRange, StateSetOptions, SystemShape, TruthTable, WrongSetMode};
use revising_core::problems::Problem;
use revising_core::solver::{GradientMode, SolverOptions};
use revising_core::surrogate::{ForestOptions, MlpOptions};

use crate::formats::manifest::parse_gradient;
use crate::formats::{read_key_values, read_truth_table, KeyValues};
use crate::{Error, Result};

/// Flags shared by every command. Unset flags fall back to `--config`, then
/// to built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Settings {
    /// Flat key = value file supplying any of these settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Benchmark problem 1-4.
    #[arg(long, global = true)]
    pub problem: Option<u8>,
    /// Multiplier circuit `p,q,alpha`.
    #[arg(long, global = true)]
    pub multiplier: Option<String>,
    /// System shape `N,n,alpha` (total spins, inputs, auxiliary spins per row).
    #[arg(long, global = true)]
    pub shape: Option<String>,
    /// Truth-table file.
    #[arg(long, global = true)]
    pub table: Option<PathBuf>,
    /// Dynamic range `lo,hi` of every coefficient.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub range: Option<String>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file or directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Wrong-state set: aux-fixed or aux-free-wrong.
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// Feasible fraction when sampling auxiliary arrays.
    #[arg(long, global = true)]
    pub balance: Option<f64>,
    #[arg(long, global = true)]
    pub trees: Option<usize>,
    /// Maximum forest depth.
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// MLP hidden widths, e.g. `64,32`.
    #[arg(long, global = true)]
    pub layers: Option<String>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    #[arg(long, global = true)]
    pub learning_rate: Option<f64>,
    #[arg(long, global = true)]
    pub batch_size: Option<usize>,
    /// Solver restarts.
    #[arg(long, global = true)]
    pub starts: Option<usize>,
    #[arg(long, global = true)]
    pub max_iterations: Option<usize>,
    /// Quasi-Newton history length.
    #[arg(long, global = true)]
    pub memory: Option<usize>,
    /// Half-width of the box that solver starts are drawn from.
    #[arg(long, global = true)]
    pub init_radius: Option<f64>,
    /// `analytic` or `fd:<step>`.
    #[arg(long, global = true)]
    pub gradient: Option<String>,
    /// Number of auxiliary arrays to sample.
    #[arg(long, global = true)]
    pub count: Option<usize>,
    /// Training fraction of the train/test split.
    #[arg(long, global = true)]
    pub split: Option<f64>,
}

const KEYS: &[&str] = &[
    "problem",
    "multiplier",
    "shape",
    "table",
    "range",
    "lambda",
    "beta",
    "seed",
    "out",
    "mode",
    "balance",
    "trees",
    "depth",
    "layers",
    "epochs",
    "learning_rate",
    "batch_size",
    "starts",
    "max_iterations",
    "memory",
    "init_radius",
    "gradient",
    "count",
    "split",
];

fn fill<T: std::str::FromStr>(slot: &mut Option<T>, kv: &KeyValues, key: &str) -> Result<()> {
    if slot.is_none() {
        *slot = kv.parsed(key)?;
    }
    Ok(())
}

impl Settings {
    /// Fills unset fields from the `--config` file, if any.
    pub fn merged(mut self) -> Result<Self> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let kv = read_key_values(&path)?;
        if let Some(k) = kv.keys().find(|k| !KEYS.contains(k)) {
            return Err(Error::Config(format!("{}: unknown key `{k}`", path.display())));
        }
        fill(&mut self.problem, &kv, "problem")?;
        fill(&mut self.multiplier, &kv, "multiplier")?;
        fill(&mut self.shape, &kv, "shape")?;
        fill(&mut self.table, &kv, "table")?;
        fill(&mut self.range, &kv, "range")?;
        fill(&mut self.lambda, &kv, "lambda")?;
        fill(&mut self.beta, &kv, "beta")?;
        fill(&mut self.seed, &kv, "seed")?;
        fill(&mut self.out, &kv, "out")?;
        fill(&mut self.mode, &kv, "mode")?;
        fill(&mut self.balance, &kv, "balance")?;
        fill(&mut self.trees, &kv, "trees")?;
        fill(&mut self.depth, &kv, "depth")?;
        fill(&mut self.layers, &kv, "layers")?;
        fill(&mut self.epochs, &kv, "epochs")?;
        fill(&mut self.learning_rate, &kv, "learning_rate")?;
        fill(&mut self.batch_size, &kv, "batch_size")?;
        fill(&mut self.starts, &kv, "starts")?;
        fill(&mut self.max_iterations, &kv, "max_iterations")?;
        fill(&mut self.memory, &kv, "memory")?;
        fill(&mut self.init_radius, &kv, "init_radius")?;
        fill(&mut self.gradient, &kv, "gradient")?;
        fill(&mut self.count, &kv, "count")?;
        fill(&mut self.split, &kv, "split")?;
        Ok(self)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn objective(&self) -> Result<ObjectiveConfig> {
        let d = ObjectiveConfig::default();
        Ok(ObjectiveConfig::new(self.beta.unwrap_or(d.beta), self.lambda.unwrap_or(d.lambda))?)
    }

    pub fn state_options(&self) -> Result<StateSetOptions> {
        let mode = match &self.mode {
            None => WrongSetMode::default(),
            Some(m) => m.parse()?,
        };
        Ok(StateSetOptions::with_mode(mode))
    }

    /// Solver options with `default_starts` unless `--starts` is given.
    pub fn solver(&self, default_starts: usize) -> Result<SolverOptions> {
        let d = SolverOptions::default();
        let gradient = match &self.gradient {
            None => GradientMode::Analytic,
            Some(g) => parse_gradient(g).ok_or_else(|| Error::Config(format!("invalid gradient `{g}`")))?,
        };
        let opts = SolverOptions {
            starts: self.starts.unwrap_or(default_starts),
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
            memory: self.memory.unwrap_or(d.memory),
            init_radius: self.init_radius.or(d.init_radius),
            gradient,
            seed: self.seed(),
            ..d
        };
        opts.validate()?;
        Ok(opts)
    }

    pub fn forest(&self, default_depth: usize) -> Result<ForestOptions> {
        let d = ForestOptions::default();
        let opts = ForestOptions {
            trees: self.trees.unwrap_or(d.trees),
            max_depth: self.depth.unwrap_or(default_depth),
            seed: self.seed(),
            ..d
        };
        opts.validate()?;
        Ok(opts)
    }

    pub fn mlp(&self) -> Result<MlpOptions> {
        let d = MlpOptions::default();
        let hidden = match &self.layers {
            None => d.hidden.clone(),
            Some(s) => list(s, "layers")?,
        };
        let opts = MlpOptions {
            hidden,
            epochs: self.epochs.unwrap_or(d.epochs),
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            seed: self.seed(),
            ..d
        };
        opts.validate()?;
        Ok(opts)
    }

    /// Resolves the truth table, exactly one of `--problem`, `--multiplier`,
    /// `--table` or `--shape` (a shape alone names a multiplier with
    /// `floor(n/2) x ceil(n/2)` operand bits and needs `n` outputs).
    pub fn system(&self) -> Result<System> {
        let selectors =
            [self.problem.is_some(), self.multiplier.is_some(), self.table.is_some() || self.shape.is_some()];
        match selectors.iter().filter(|&&s| s).count() {
            0 => return Err(Error::Config("select a system with --problem, --multiplier, --shape or --table".into())),
            1 => {}
            _ => {
                return Err(Error::Config("--problem, --multiplier and --shape/--table are mutually exclusive".into()))
            }
        }
        let shape = self.shape.as_deref().map(|s| -> Result<SystemShape> {
            let v: Vec<usize> = list(s, "shape")?;
            let [total, inputs, aux] = v[..] else {
                return Err(Error::Config("--shape takes N,n,alpha".into()));
            };
            Ok(SystemShape::from_totals(total, inputs, aux)?)
        });
        let shape = shape.transpose()?;
        let (table, problem) = if let Some(id) = self.problem {
            let p = Problem::by_id(id)?;
            (p.truth_table(), Some(p))
        } else if let Some(s) = &self.multiplier {
            let v: Vec<usize> = list(s, "multiplier")?;
            let [p, q, alpha] = v[..] else {
                return Err(Error::Config("--multiplier takes p,q,alpha".into()));
            };
            (TruthTable::multiplier(p, q)?.with_aux(alpha), None)
        } else if let Some(path) = &self.table {
            let t = read_truth_table(path)?;
            if let Some(s) = shape {
                if s != t.shape() {
                    return Err(Error::Config(format!("--shape {s} does not match table shape {}", t.shape())));
                }
            }
            (t, None)
        } else {
            let s = shape.expect("shape selector is set");
            if s.outputs() != s.inputs() || s.inputs() < 2 {
                return Err(Error::Config(format!("shape {s} is not a multiplier; pass --table")));
            }
            let p = s.inputs() / 2;
            (TruthTable::multiplier(p, s.inputs() - p)?.with_aux(s.aux()), None)
        };
        let range = match &self.range {
            Some(r) => {
                let v: Vec<f64> = list(r, "range")?;
                let [lo, hi] = v[..] else {
                    return Err(Error::Config("--range takes lo,hi".into()));
                };
                DynamicRange::new(lo, hi)?
            }
            None => problem.map_or_else(|| DynamicRange::symmetric(4.0).expect("valid"), |p| p.range()),
        };
        Ok(System {
            table,
            range,
            problem: problem.map(|p| p.id),
            forest_depth: problem.map_or(16, |p| p.forest_depth),
        })
    }
}

/// A resolved circuit and coefficient box.
#[derive(Debug, Clone, PartialEq)]
pub struct System {
    pub table: TruthTable,
    pub range: DynamicRange,
    pub problem: Option<u8>,
    /// Default forest depth for this system.
    pub forest_depth: usize,
}

/// Comma-separated list.
pub fn list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| Error::Config(format!("invalid {what} entry `{x}` in `{s}`"))))
        .collect()
}
