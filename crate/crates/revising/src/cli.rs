//! The `revising` command-line tool.
//!
//! Exit codes: 0 on success, 2 for invalid arguments or unreadable inputs,
//! 1 when a run fails after its inputs were accepted.

use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use revising_core::datagen::{manifest_for, sample_aux_arrays, split_dataset, DatagenOptions};
use revising_core::ising::{build_state_sets, count_aux_arrays, count_constraints, spin_encode, AuxiliaryArray};
use revising_core::solver::minimize;
use revising_core::surrogate::{evaluate_mse, train_mlp, Regressor, Samples};

use crate::bench::{run_bench, BenchOptions};
use crate::config::{Settings, System};
use crate::formats::{self, read_dataset, read_model, write_dataset, write_forest, write_manifest, write_mlp};
use crate::parallel;

#[derive(Debug, Parser)]
#[command(name = "revising", version, about = "Auxiliary-array search for Ising-model circuits")]
struct Cli {
    #[command(flatten)]
    settings: Settings,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the selected truth table and its problem sizes.
    TruthTable,
    /// Solve for the best coefficients of one auxiliary array.
    Solve {
        /// Auxiliary bits, one 0/1 character per spin, row by row.
        #[arg(long, conflicts_with = "aux_index")]
        aux: Option<String>,
        /// Auxiliary array by integer index (bit k is spin k).
        #[arg(long)]
        aux_index: Option<u64>,
        /// Write the per-iteration solver trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Sample auxiliary arrays, label them and split into train/test sets.
    Datagen,
    /// Train a surrogate on a dataset CSV.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        kind: ModelKind,
        /// Per-epoch train/validation losses (MLP only).
        #[arg(long)]
        losses: Option<PathBuf>,
    },
    /// Test-set MSE of a trained model.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Predict rho for every array in a dataset CSV.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Time the solvers against trained surrogates.
    Bench {
        #[arg(long)]
        forest: Option<PathBuf>,
        #[arg(long)]
        mlp: Option<PathBuf>,
        /// Central-difference step of the finite-difference solver.
        #[arg(long, default_value_t = 1e-6)]
        fd_step: f64,
        /// Predictions per array when timing surrogates.
        #[arg(long, default_value_t = 100)]
        repeats: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Forest,
    Mlp,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

trait Classify<T> {
    fn config(self) -> CliResult<T>;
    fn runtime(self) -> CliResult<T>;
}

impl<T, E: Display> Classify<T> for Result<T, E> {
    fn config(self) -> CliResult<T> {
        self.map_err(|e| CliError::Config(e.to_string()))
    }

    fn runtime(self) -> CliResult<T> {
        self.map_err(|e| CliError::Runtime(e.to_string()))
    }
}

/// Parses `args` (including the program name) and runs the command,
/// writing its report to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => return write!(out, "{e}").runtime(),
        Err(e) => return Err(CliError::Config(e.render().to_string())),
    };
    let settings = cli.settings.merged().config()?;
    match cli.command {
        Command::TruthTable => truth_table(&settings, out),
        Command::Solve { aux, aux_index, trace } => solve(&settings, aux.as_deref(), aux_index, trace.as_deref(), out),
        Command::Datagen => datagen(&settings, out),
        Command::Train { data, kind, losses } => train(&settings, &data, kind, losses.as_deref(), out),
        Command::Eval { model, data } => eval(&settings, &model, &data, out),
        Command::Predict { model, data } => predict(&settings, &model, &data, out),
        Command::Bench { forest, mlp, fd_step, repeats } => {
            bench(&settings, forest.as_deref(), mlp.as_deref(), fd_step, repeats, out)
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes()).runtime()
}

fn require_out(s: &Settings, what: &str) -> CliResult<PathBuf> {
    s.out.clone().ok_or_else(|| CliError::Config(format!("--out is required for {what}")))
}

fn truth_table(s: &Settings, out: &mut dyn Write) -> CliResult<()> {
    let sys = s.system().config()?;
    let shape = sys.table.shape();
    let mut text = format!(
        "shape {shape}\nrows {}\ncoefficients {}\nconstraints {}\naux_arrays {}\n",
        sys.table.len(),
        shape.coefficient_count(),
        count_constraints(&shape),
        count_aux_arrays(&shape)
    );
    let mut body = Vec::new();
    formats::table::format_truth_table(&sys.table, &mut body).runtime()?;
    text += &String::from_utf8_lossy(&body);
    if let Some(path) = &s.out {
        formats::write_truth_table(path, &sys.table).runtime()?;
    }
    emit(out, &text)
}

fn parse_aux(sys: &System, bits: Option<&str>, index: Option<u64>) -> CliResult<AuxiliaryArray> {
    let (rows, alpha) = (sys.table.len(), sys.table.shape().aux());
    match (bits, index) {
        (Some(b), _) => {
            let bits = b
                .chars()
                .filter(|c| !matches!(c, ',' | ' ' | '_'))
                .map(|c| match c {
                    '0' => Ok(0u8),
                    '1' => Ok(1u8),
                    _ => Err(CliError::Config(format!("--aux takes 0/1 characters, got `{c}`"))),
                })
                .collect::<CliResult<Vec<_>>>()?;
            AuxiliaryArray::new(rows, alpha, spin_encode(&bits)).config()
        }
        (None, Some(k)) => {
            let bits = rows * alpha;
            if bits < 64 && k >> bits != 0 {
                return Err(CliError::Config(format!("--aux-index {k} needs more than {bits} bits")));
            }
            Ok(AuxiliaryArray::from_index(rows, alpha, k))
        }
        (None, None) if alpha == 0 => Ok(AuxiliaryArray::empty()),
        (None, None) => Err(CliError::Config("--aux or --aux-index is required when alpha > 0".into())),
    }
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn solve(
    s: &Settings,
    aux: Option<&str>,
    index: Option<u64>,
    trace: Option<&Path>,
    out: &mut dyn Write,
) -> CliResult<()> {
    let sys = s.system().config()?;
    let config = s.objective().config()?;
    let mut opts = s.solver(revising_core::solver::SolverOptions::default().starts).config()?;
    opts.record_trace = trace.is_some();
    let aux = parse_aux(&sys, aux, index)?;
    let sets = build_state_sets(&sys.table, &aux, s.state_options().config()?).config()?;
    let r = minimize(&sets, &sys.range, &config, &opts).runtime()?;
    if let Some(path) = trace {
        formats::write_trace(path, &r.trace).runtime()?;
    }
    let aux_bits: String = aux.as_slice().iter().map(|&x| if x > 0 { '1' } else { '0' }).collect();
    let text = format!(
        "shape = {}\naux = {}\nf_star = {}\nrho = {}\niterations = {}\nconverged = {}\nper_start_values = {}\npsi = {}\n",
        sys.table.shape(),
        if aux_bits.is_empty() { "none" } else { &aux_bits },
        r.f_star,
        r.rho,
        r.iterations,
        r.converged,
        join(&r.per_start_values),
        join(r.psi_star.values()),
    );
    if let Some(path) = &s.out {
        formats::write_file(path, |w| w.write_all(text.as_bytes()).map_err(formats::io_err)).runtime()?;
    }
    emit(out, &text)
}

fn datagen(s: &Settings, out: &mut dyn Write) -> CliResult<()> {
    let sys = s.system().config()?;
    let config = s.objective().config()?;
    let dir = require_out(s, "datagen")?;
    let count = s.count.unwrap_or(100);
    let ratio = s.split.unwrap_or(0.8);
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(CliError::Config(format!("--split {ratio} is outside (0, 1)")));
    }
    let opts = DatagenOptions {
        solver: s.solver(DatagenOptions::default().solver.starts).config()?,
        state_options: s.state_options().config()?,
        seed: s.seed(),
        ..Default::default()
    };
    let arrays = sample_aux_arrays(&sys.table, count, s.balance, &sys.range, &opts).config()?;
    let (rows, _) = parallel::generate_dataset(&sys.table, &arrays, &sys.range, &config, &opts).runtime()?;
    let manifest = manifest_for(&sys.table, &rows, &sys.range, &config, &opts, sys.problem, s.balance);
    let split_seed = revising_core::datagen::row_seed(s.seed(), u64::MAX);
    let (train, test) = split_dataset(rows.clone(), ratio, split_seed).runtime()?;
    let manifest = manifest.with_split(ratio, split_seed);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    write_dataset(&dir.join("dataset.csv"), &rows).runtime()?;
    write_dataset(&dir.join("train.csv"), &train).runtime()?;
    write_dataset(&dir.join("test.csv"), &test).runtime()?;
    write_manifest(&dir.join("manifest.txt"), &manifest).runtime()?;
    let mut text = format!(
        "rows {}\nnonconverged {}\ntrain {}\ntest {}\nout {}\n",
        manifest.rows,
        manifest.nonconverged,
        train.len(),
        test.len(),
        dir.display()
    );
    if manifest.degraded() {
        log::warn!("{} of {} labels did not converge", manifest.nonconverged, manifest.rows);
        text += "warning degraded dataset\n";
    }
    emit(out, &text)
}

fn load_samples(data: &Path) -> CliResult<Samples> {
    let rows = read_dataset(data, 1).config()?;
    Samples::from_rows(&rows).config()
}

fn train(s: &Settings, data: &Path, kind: ModelKind, losses: Option<&Path>, out: &mut dyn Write) -> CliResult<()> {
    let path = require_out(s, "train")?;
    let samples = load_samples(data)?;
    let text = match kind {
        ModelKind::Forest => {
            let depth = if s.problem.is_some() || s.multiplier.is_some() || s.shape.is_some() || s.table.is_some() {
                s.system().config()?.forest_depth
            } else {
                revising_core::surrogate::ForestOptions::default().max_depth
            };
            let opts = s.forest(depth).config()?;
            let model = parallel::train_forest(&samples, &opts).runtime()?;
            write_forest(&path, &model).runtime()?;
            format!("kind forest\ntrees {}\ntrain_mse {}\n", opts.trees, evaluate_mse(&model, &samples).runtime()?)
        }
        ModelKind::Mlp => {
            let opts = s.mlp().config()?;
            let (model, report) = train_mlp(&samples, &opts).runtime()?;
            write_mlp(&path, &model, &opts).runtime()?;
            if let Some(lp) = losses {
                formats::write_file(lp, |w| {
                    let mut text = String::from("epoch,train,validation\n");
                    for (k, t) in report.train.iter().enumerate() {
                        let v = report.validation.get(k).map_or(String::new(), f64::to_string);
                        text += &format!("{},{t},{v}\n", k + 1);
                    }
                    w.write_all(text.as_bytes()).map_err(formats::io_err)
                })
                .runtime()?;
            }
            format!(
                "kind mlp\nepochs {}\ntrain_mse {}\nvalidation_mse {}\n",
                report.train.len(),
                evaluate_mse(&model, &samples).runtime()?,
                report.validation.last().map_or("none".into(), f64::to_string)
            )
        }
    };
    emit(out, &format!("{text}model {}\n", path.display()))
}

fn load_model_for(model: &Path, data: &Path) -> CliResult<(formats::Model, Samples)> {
    let m = read_model(model).config()?;
    let samples = load_samples(data)?;
    if m.n_features() != samples.n_features() {
        return Err(CliError::Config(format!(
            "model expects {} features, dataset has {}",
            m.n_features(),
            samples.n_features()
        )));
    }
    Ok((m, samples))
}

fn eval(s: &Settings, model: &Path, data: &Path, out: &mut dyn Write) -> CliResult<()> {
    let (m, samples) = load_model_for(model, data)?;
    let preds = m.predict_all(&samples).runtime()?;
    let mse = revising_core::surrogate::mse(&preds, samples.targets()).runtime()?;
    if let Some(path) = &s.out {
        formats::write_predictions(path, &preds, samples.targets()).runtime()?;
    }
    emit(out, &format!("kind {}\nrows {}\nmse {mse}\n", m.kind(), samples.len()))
}

fn predict(s: &Settings, model: &Path, data: &Path, out: &mut dyn Write) -> CliResult<()> {
    let (m, samples) = load_model_for(model, data)?;
    let preds = m.predict_all(&samples).runtime()?;
    match &s.out {
        Some(path) => {
            formats::write_predictions(path, &preds, samples.targets()).runtime()?;
            emit(out, &format!("rows {}\npredictions {}\n", preds.len(), path.display()))
        }
        None => emit(out, &preds.iter().map(|p| format!("{p}\n")).collect::<String>()),
    }
}

fn bench(
    s: &Settings,
    forest: Option<&Path>,
    mlp: Option<&Path>,
    fd_step: f64,
    repeats: usize,
    out: &mut dyn Write,
) -> CliResult<()> {
    let sys = s.system().config()?;
    let config = s.objective().config()?;
    let solver = s.solver(DatagenOptions::default().solver.starts).config()?;
    let mut models = Vec::new();
    for (name, path) in [("forest", forest), ("mlp", mlp)] {
        if let Some(p) = path {
            let m = read_model(p).config()?;
            if m.n_features() != sys.table.aux_array_len() {
                return Err(CliError::Config(format!("{}: model does not match the selected system", p.display())));
            }
            models.push((name, m));
        }
    }
    let predictors: Vec<(&str, &dyn Regressor)> = models.iter().map(|(n, m)| (*n, m as &dyn Regressor)).collect();
    let opts = BenchOptions { count: s.count.unwrap_or(10), seed: s.seed(), fd_step, predictor_repeats: repeats };
    let state_options = s.state_options().config()?;
    let report = run_bench(&sys.table, &sys.range, &config, state_options, &solver, &predictors, &opts).runtime()?;
    let mut text = Vec::new();
    report.format_text(&mut text).runtime()?;
    if let Some(dir) = &s.out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
        formats::write_file(&dir.join("bench.txt"), |w| w.write_all(&text).map_err(formats::io_err)).runtime()?;
        formats::write_file(&dir.join("bench.csv"), |w| report.format_csv(w)).runtime()?;
    }
    out.write_all(&text).runtime()?;
    if !report.ordering_holds() {
        return Err(CliError::Runtime("expected finite-difference > analytic > surrogate times".into()));
    }
    Ok(())
}
