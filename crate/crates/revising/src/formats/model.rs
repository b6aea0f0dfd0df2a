//! Versioned plain-text model files.
//!
//! Forest:
//!
//! ```text
//! revising-forest v1
//! features 16
//! max_depth 16
//! seed 0
//! trees 100
//! tree 3
//! S 5 1 2        # split on feature 5: -1 goes to node 1, +1 to node 2
//! L 0.25         # leaf value
//! L 0.75
//! ...
//! ```
//!
//! MLP (parameters flat, layer by layer: row-major weights then biases):
//!
//! ```text
//! revising-mlp v1
//! sizes 16 64 32 1
//! epochs 200
//! learning_rate 0.001
//! batch_size 32
//! seed 0
//! params 3201
//! 0.0123
//! ...
//! ```

use std::io::{BufRead, Write};
use std::path::Path;

use revising_core::ising::Spin;
use revising_core::surrogate::{ForestModel, MlpModel, MlpOptions, Node, Regressor, Tree};

use super::{content_lines, io_err, open, parse_num, write_file};
use crate::{Error, Result};

const FOREST_HEADER: &str = "revising-forest v1";
const MLP_HEADER: &str = "revising-mlp v1";

/// A model loaded from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Forest(ForestModel),
    Mlp(MlpModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Forest(_) => "forest",
            Self::Mlp(_) => "mlp",
        }
    }
}

impl Regressor for Model {
    fn n_features(&self) -> usize {
        match self {
            Self::Forest(m) => m.n_features(),
            Self::Mlp(m) => m.n_features(),
        }
    }

    fn predict(&self, x: &[Spin]) -> revising_core::Result<f64> {
        match self {
            Self::Forest(m) => m.predict(x),
            Self::Mlp(m) => m.predict(x),
        }
    }
}

pub fn format_forest(m: &ForestModel, w: &mut dyn Write) -> Result<()> {
    let mut out = String::new();
    out += &format!(
        "{FOREST_HEADER}\nfeatures {}\nmax_depth {}\nseed {}\ntrees {}\n",
        m.n_features(),
        m.max_depth(),
        m.seed(),
        m.trees().len()
    );
    for t in m.trees() {
        out += &format!("tree {}\n", t.nodes.len());
        for n in &t.nodes {
            match *n {
                Node::Leaf { value } => out += &format!("L {value}\n"),
                Node::Split { feature, left, right } => out += &format!("S {feature} {left} {right}\n"),
            }
        }
    }
    w.write_all(out.as_bytes()).map_err(io_err)
}

pub fn write_forest(path: &Path, m: &ForestModel) -> Result<()> {
    write_file(path, |w| format_forest(m, w))
}

pub fn format_mlp(m: &MlpModel, opts: &MlpOptions, w: &mut dyn Write) -> Result<()> {
    let sizes: Vec<String> = m.sizes().iter().map(|s| s.to_string()).collect();
    let mut out = format!(
        "{MLP_HEADER}\nsizes {}\nepochs {}\nlearning_rate {}\nbatch_size {}\nseed {}\nparams {}\n",
        sizes.join(" "),
        opts.epochs,
        opts.learning_rate,
        opts.batch_size,
        opts.seed,
        m.parameters().len()
    );
    for p in m.parameters() {
        out += &format!("{p}\n");
    }
    w.write_all(out.as_bytes()).map_err(io_err)
}

pub fn write_mlp(path: &Path, m: &MlpModel, opts: &MlpOptions) -> Result<()> {
    write_file(path, |w| format_mlp(m, opts, w))
}

fn keyed<T: std::str::FromStr>(lines: &mut impl Iterator<Item = Result<(usize, String)>>, key: &str) -> Result<T> {
    let (line, body) = lines.next().ok_or_else(|| Error::parse(0, format!("missing `{key}`")))??;
    let value = body
        .strip_prefix(key)
        .filter(|rest| rest.starts_with(' '))
        .ok_or_else(|| Error::parse(line, format!("expected `{key}`")))?;
    parse_num(line, key, value)
}

fn parse_forest(lines: &mut impl Iterator<Item = Result<(usize, String)>>) -> Result<ForestModel> {
    let features: usize = keyed(lines, "features")?;
    let max_depth: usize = keyed(lines, "max_depth")?;
    let seed: u64 = keyed(lines, "seed")?;
    let count: usize = keyed(lines, "trees")?;
    let mut trees = Vec::with_capacity(count);
    for _ in 0..count {
        let n: usize = keyed(lines, "tree")?;
        let mut nodes = Vec::with_capacity(n);
        for _ in 0..n {
            let (line, body) = lines.next().ok_or_else(|| Error::parse(0, "truncated tree"))??;
            let f: Vec<&str> = body.split_whitespace().collect();
            nodes.push(match f.as_slice() {
                ["L", v] => Node::Leaf { value: parse_num(line, "leaf value", v)? },
                ["S", a, b, c] => Node::Split {
                    feature: parse_num(line, "feature", a)?,
                    left: parse_num(line, "child", b)?,
                    right: parse_num(line, "child", c)?,
                },
                _ => return Err(Error::parse(line, "expected `L value` or `S feature left right`")),
            });
        }
        trees.push(Tree { nodes });
    }
    Ok(ForestModel::new(features, max_depth, seed, trees)?)
}

fn parse_mlp(lines: &mut impl Iterator<Item = Result<(usize, String)>>) -> Result<(MlpModel, MlpOptions)> {
    let sizes: String = keyed(lines, "sizes")?;
    let sizes = sizes.split_whitespace().map(|s| parse_num(0, "layer size", s)).collect::<Result<Vec<usize>>>()?;
    let mut opts = MlpOptions {
        epochs: keyed(lines, "epochs")?,
        learning_rate: keyed(lines, "learning_rate")?,
        batch_size: keyed(lines, "batch_size")?,
        seed: keyed(lines, "seed")?,
        ..MlpOptions::default()
    };
    opts.hidden = sizes.get(1..sizes.len().saturating_sub(1)).unwrap_or_default().to_vec();
    let count: usize = keyed(lines, "params")?;
    let params = (0..count)
        .map(|_| {
            let (line, body) = lines.next().ok_or_else(|| Error::parse(0, "truncated parameters"))??;
            parse_num(line, "parameter", &body)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((MlpModel::new(sizes, params)?, opts))
}

/// Reads either model kind, dispatching on the header line.
pub fn parse_model(r: impl BufRead) -> Result<(Model, Option<MlpOptions>)> {
    let mut lines = content_lines(r);
    let (line, header) = lines.next().ok_or_else(|| Error::parse(0, "empty model file"))??;
    let out = match header.as_str() {
        FOREST_HEADER => (Model::Forest(parse_forest(&mut lines)?), None),
        MLP_HEADER => {
            let (m, o) = parse_mlp(&mut lines)?;
            (Model::Mlp(m), Some(o))
        }
        _ => return Err(Error::parse(line, format!("unknown model header `{header}`"))),
    };
    if let Some(extra) = lines.next() {
        return Err(Error::parse(extra?.0, "trailing content after model"));
    }
    Ok(out)
}

pub fn read_model(path: &Path) -> Result<Model> {
    Ok(parse_model(open(path)?)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use revising_core::surrogate::{train_forest, train_mlp, ForestOptions, Samples};

    fn samples() -> Samples {
        let features: Vec<i8> = (0..40).map(|k| if (k * 7 + k / 3) % 3 == 0 { 1 } else { -1 }).collect();
        let targets = features.chunks(4).map(|x| f64::from(x[0] + x[2] + 2) / 4.0).collect();
        Samples::new(4, features, targets).unwrap()
    }

    #[test]
    fn forest_round_trip() {
        let m = train_forest(&samples(), &ForestOptions { trees: 3, max_depth: 3, ..Default::default() }).unwrap();
        let mut buf = Vec::new();
        format_forest(&m, &mut buf).unwrap();
        assert_eq!(parse_model(&buf[..]).unwrap().0, Model::Forest(m));
    }

    #[test]
    fn mlp_round_trip() {
        let opts = MlpOptions { hidden: vec![3], epochs: 2, ..Default::default() };
        let (m, _) = train_mlp(&samples(), &opts).unwrap();
        let mut buf = Vec::new();
        format_mlp(&m, &opts, &mut buf).unwrap();
        let (back, back_opts) = parse_model(&buf[..]).unwrap();
        assert_eq!(back, Model::Mlp(m));
        assert_eq!(back_opts.unwrap().hidden, vec![3]);
    }

    #[test]
    fn rejects_corruption() {
        assert!(parse_model("revising-forest v2\n".as_bytes()).is_err());
        let bad = "revising-forest v1\nfeatures 2\nmax_depth 1\nseed 0\ntrees 1\ntree 1\nS 0 0 0\n";
        assert!(parse_model(bad.as_bytes()).is_err());
        let truncated =
            "revising-mlp v1\nsizes 1 1\nepochs 1\nlearning_rate 0.1\nbatch_size 1\nseed 0\nparams 4\n0.1\n";
        assert!(parse_model(truncated.as_bytes()).is_err());
    }
}
