//! Flat `key = value` files: dataset manifests and run configurations.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use revising_core::boltzmann::ObjectiveConfig;
use revising_core::datagen::DatasetManifest;
use revising_core::ising::{DynamicRange, StateSetOptions, SystemShape, WrongSetMode};
use revising_core::solver::{GradientMode, SolverOptions};

use super::{content_lines, io_err, open, write_file};
use crate::{Error, Result};

const MANIFEST_FORMAT: &str = "revising-manifest-v1";

/// Parsed `key = value` pairs with their line numbers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(r: impl BufRead) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for item in content_lines(r) {
            let (line, body) = item?;
            let Some((k, v)) = body.split_once('=') else {
                return Err(Error::parse(line, "expected `key = value`"));
            };
            let key = k.trim().to_string();
            if entries.insert(key.clone(), (line, v.trim().to_string())).is_some() {
                return Err(Error::parse(line, format!("duplicate key `{key}`")));
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Parses `key` if present.
    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => {
                v.parse().map(Some).map_err(|_| Error::parse(*line, format!("invalid value `{v}` for `{key}`")))
            }
        }
    }

    fn required<T: FromStr>(&self, key: &str) -> Result<T> {
        self.parsed(key)?.ok_or_else(|| Error::parse(0, format!("missing key `{key}`")))
    }

    fn optional<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            Some("none") => Ok(None),
            _ => self.parsed(key),
        }
    }
}

pub fn read_key_values(path: &Path) -> Result<KeyValues> {
    KeyValues::parse(open(path)?)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "none".into(), |x| x.to_string())
}

fn gradient_str(g: GradientMode) -> String {
    match g {
        GradientMode::Analytic => "analytic".into(),
        GradientMode::FiniteDifference(h) => format!("fd:{h}"),
    }
}

/// Parses `analytic` or `fd:<step>`.
pub fn parse_gradient(s: &str) -> Option<GradientMode> {
    match s {
        "analytic" => Some(GradientMode::Analytic),
        _ => s.strip_prefix("fd:")?.parse().ok().map(GradientMode::FiniteDifference),
    }
}

pub fn format_manifest(m: &DatasetManifest, w: &mut dyn Write) -> Result<()> {
    let s = &m.solver;
    let lines: Vec<(&str, String)> = vec![
        ("format", MANIFEST_FORMAT.into()),
        ("problem", opt(m.problem)),
        ("inputs", m.shape.inputs().to_string()),
        ("outputs", m.shape.outputs().to_string()),
        ("aux", m.shape.aux().to_string()),
        ("range", format!("{},{}", m.range.lo(), m.range.hi())),
        ("beta", m.config.beta.to_string()),
        ("lambda", m.config.lambda.to_string()),
        ("mode", m.state_options.mode.to_string()),
        ("correct_aux_free", m.state_options.correct_aux_free.to_string()),
        ("solver_starts", s.starts.to_string()),
        ("solver_max_iterations", s.max_iterations.to_string()),
        ("solver_memory", s.memory.to_string()),
        ("solver_gradient_tolerance", s.gradient_tolerance.to_string()),
        ("solver_step_tolerance", s.step_tolerance.to_string()),
        ("solver_init_radius", opt(s.init_radius)),
        ("solver_gradient", gradient_str(s.gradient)),
        ("balance", opt(m.balance)),
        ("seed", m.seed.to_string()),
        ("rows", m.rows.to_string()),
        ("nonconverged", m.nonconverged.to_string()),
        ("degraded", m.degraded().to_string()),
        ("split_ratio", m.split_ratio.to_string()),
        ("split_seed", m.split_seed.to_string()),
        ("train_rows", m.train_rows.to_string()),
        ("test_rows", m.test_rows.to_string()),
    ];
    for (k, v) in lines {
        writeln!(w, "{k} = {v}").map_err(io_err)?;
    }
    Ok(())
}

pub fn write_manifest(path: &Path, m: &DatasetManifest) -> Result<()> {
    write_file(path, |w| format_manifest(m, w))
}

pub fn parse_manifest(kv: &KeyValues) -> Result<DatasetManifest> {
    if kv.get("format") != Some(MANIFEST_FORMAT) {
        return Err(Error::parse(0, format!("not a {MANIFEST_FORMAT} file")));
    }
    let range: String = kv.required("range")?;
    let (lo, hi) = range.split_once(',').ok_or_else(|| Error::parse(0, "range must be `lo,hi`"))?;
    let bad = |what: &str| Error::parse(0, format!("invalid {what}"));
    let gradient: String = kv.required("solver_gradient")?;
    let mode: WrongSetMode = kv.required::<String>("mode")?.parse()?;
    Ok(DatasetManifest {
        problem: kv.optional("problem")?,
        shape: SystemShape::new(kv.required("inputs")?, kv.required("outputs")?, kv.required("aux")?)?,
        range: DynamicRange::new(
            lo.trim().parse().map_err(|_| bad("range"))?,
            hi.trim().parse().map_err(|_| bad("range"))?,
        )?,
        config: ObjectiveConfig::new(kv.required("beta")?, kv.required("lambda")?)?,
        state_options: StateSetOptions { mode, correct_aux_free: kv.required("correct_aux_free")? },
        solver: SolverOptions {
            starts: kv.required("solver_starts")?,
            max_iterations: kv.required("solver_max_iterations")?,
            memory: kv.required("solver_memory")?,
            gradient_tolerance: kv.required("solver_gradient_tolerance")?,
            step_tolerance: kv.required("solver_step_tolerance")?,
            init_radius: kv.optional("solver_init_radius")?,
            gradient: parse_gradient(&gradient).ok_or_else(|| bad("solver_gradient"))?,
            ..SolverOptions::default()
        },
        balance: kv.optional("balance")?,
        seed: kv.required("seed")?,
        rows: kv.required("rows")?,
        nonconverged: kv.required("nonconverged")?,
        split_ratio: kv.required("split_ratio")?,
        split_seed: kv.required("split_seed")?,
        train_rows: kv.required("train_rows")?,
        test_rows: kv.required("test_rows")?,
    })
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    parse_manifest(&read_key_values(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_values() {
        let kv = KeyValues::parse("# c\nproblem = 1\n\nlambda=100 # x\n".as_bytes()).unwrap();
        assert_eq!(kv.get("problem"), Some("1"));
        assert_eq!(kv.parsed::<f64>("lambda").unwrap(), Some(100.0));
        assert!(kv.parsed::<u8>("missing").unwrap().is_none());
        assert!(KeyValues::parse("a = 1\na = 2\n".as_bytes()).is_err());
        assert!(KeyValues::parse("novalue\n".as_bytes()).is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let m = DatasetManifest {
            problem: Some(1),
            shape: SystemShape::new(4, 4, 1).unwrap(),
            range: DynamicRange::symmetric(4.0).unwrap(),
            config: ObjectiveConfig::default(),
            state_options: StateSetOptions::default(),
            solver: SolverOptions { gradient: GradientMode::FiniteDifference(1e-6), ..SolverOptions::default() },
            balance: Some(0.5),
            seed: 42,
            rows: 10,
            nonconverged: 1,
            split_ratio: 1.0,
            split_seed: 0,
            train_rows: 10,
            test_rows: 0,
        }
        .with_split(0.8, 3);
        let mut buf = Vec::new();
        format_manifest(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(
            text.contains("seed = 42\n") && text.contains("train_rows = 8\n") && text.contains("degraded = true\n")
        );
        assert_eq!(parse_manifest(&KeyValues::parse(&buf[..]).unwrap()).unwrap(), m);
    }
}
