//! File formats and argument parsing shared by the subcommands.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use causal_subsets::json;
use causal_subsets::{CausalModel, LabeledQuery, ModelClass, Query};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Writes JSON with full-precision floats to `out`, or to stdout.
pub fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = json::to_string(value)?;
    text.push('\n');
    write_text(&text, out)
}

pub fn write_text(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// A model together with its class: `{"class": "dag", "model": {...}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub class: ModelClass,
    pub model: serde_json::Value,
}

impl ModelFile {
    pub fn new(class: ModelClass, model: &CausalModel) -> Result<Self> {
        Ok(ModelFile {
            class,
            model: serde_json::to_value(model)?,
        })
    }

    pub fn load(path: &Path) -> Result<(ModelClass, CausalModel)> {
        let f: ModelFile = read_json(path)?;
        Ok((f.class, CausalModel::from_json(f.class, f.model)?))
    }
}

/// Labeled queries, either a bare list or the output of `test` or `predict`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum LabelFile {
    List(Vec<LabeledQuery>),
    Tested { labeled: Vec<LabeledQuery> },
    Predicted { predictions: Vec<LabeledQuery> },
}

impl LabelFile {
    pub fn into_labels(self) -> Vec<LabeledQuery> {
        match self {
            LabelFile::List(l) | LabelFile::Tested { labeled: l } | LabelFile::Predicted { predictions: l } => l,
        }
    }
}

/// A query that produced no outcome, with the reason.
#[derive(Debug, Serialize)]
pub struct Skipped {
    pub query: Query,
    pub reason: String,
}

pub fn parse_class(s: &str) -> Result<ModelClass> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| anyhow::anyhow!("unknown class {s:?} (dag, polytree, path, path_sign, direction)"))
}

/// `"0,2,5"` as a list of indices.
pub fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse().with_context(|| format!("not an index: {p:?}")))
        .collect()
}

/// `"0,1;1,2"` as a list of tuples.
pub fn parse_tuples(s: &str) -> Result<Vec<Vec<usize>>> {
    s.split(';').map(parse_list).collect()
}

/// `"10..120"` (inclusive) or a single `"n"`.
pub fn parse_range(s: &str) -> Result<(usize, usize)> {
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (a.trim().parse()?, b.trim_start_matches('=').trim().parse()?),
        None => {
            let n = s.trim().parse()?;
            (n, n)
        }
    };
    if lo > hi {
        bail!("empty range {s}");
    }
    Ok((lo, hi))
}

/// `"a,b"` as a pair of floats.
pub fn parse_pair(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s.split_once(',').with_context(|| format!("expected two numbers, got {s:?}"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}
