use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use causal_subsets::bounds::{
    binary_bound, figure1_table, real_bound, required_k, vc_upper, write_figure1_csv, BoundSpec, ClassSpec, Variant,
};
use causal_subsets::dataset::DatasetManifest;
use causal_subsets::experiment::{run_experiment, ExperimentConfig};
use causal_subsets::graph::Dag;
use causal_subsets::merge::{
    enumerate_constrained_dags, merge_chain_discrete, merge_chain_gaussian, CausalConstraint, Distribution, DEFAULT_TOL,
};
use causal_subsets::search::{fit_exhaustive, fit_local, LocalSearch};
use causal_subsets::stats::{apply_test, TestConfig};
use causal_subsets::synth::{sample_graph, sem_for_model, slice_overlapping, GraphParams, NoiseKind, RowMode};
use causal_subsets::{Dataset, Error, LabeledQuery, ModelClass, Query, VariableTuple};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::io::{
    parse_class, parse_list, parse_pair, parse_range, parse_tuples, read_json, write_json, write_text, LabelFile,
    ModelFile, Skipped,
};

fn class_arg(s: &str) -> Result<ModelClass> {
    parse_class(s)
}

fn out_dir<'a>(out: Option<&'a Path>, what: &str) -> Result<&'a Path> {
    let dir = out.with_context(|| format!("{what} writes several files; pass --out <dir>"))?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NoiseArg {
    Gaussian,
    Uniform,
}

impl From<NoiseArg> for NoiseKind {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::Gaussian => NoiseKind::Gaussian,
            NoiseArg::Uniform => NoiseKind::Uniform,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// dag, polytree, path, path_sign or direction.
    #[arg(long, value_parser = class_arg)]
    class: ModelClass,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Edge probability for random DAGs.
    #[arg(long, default_value_t = 0.3)]
    edge_prob: f64,
    /// Magnitude range of adjacent path correlations, "lo,hi".
    #[arg(long, default_value = "0.5,0.9")]
    corr_range: String,
    /// Rows of data to sample from a linear SEM.
    #[arg(long)]
    l: Option<usize>,
    #[arg(long, value_enum, default_value_t = NoiseArg::Gaussian)]
    noise: NoiseArg,
    /// Magnitude range of SEM edge coefficients, "lo,hi".
    #[arg(long, default_value = "0.5,0.9")]
    coeff_range: String,
}

/// Writes `model.json`, plus `sem.json` and `data.csv` when `--l` is given.
pub fn generate(a: GenerateArgs, out: Option<&Path>) -> Result<()> {
    let params = GraphParams {
        edge_prob: a.edge_prob,
        corr_range: parse_pair(&a.corr_range)?,
    };
    let model = sample_graph(a.class, a.n, a.seed, &params)?;
    let file = ModelFile::new(a.class, &model)?;
    let Some(l) = a.l else {
        return match out {
            Some(dir) => write_json(&file, Some(&out_dir(Some(dir), "generate")?.join("model.json"))),
            None => write_json(&file, None),
        };
    };
    let dir = out_dir(out, "generate --l")?;
    let sem = sem_for_model(&model, parse_pair(&a.coeff_range)?, params.corr_range.1.min(0.9), a.noise.into(), a.seed.wrapping_add(1))?;
    let data = sem.sample(l, a.seed.wrapping_add(2))?;
    write_json(&file, Some(&dir.join("model.json")))?;
    write_json(&sem, Some(&dir.join("sem.json")))?;
    data.write_csv(&dir.join("data.csv"), None)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Shared,
    Disjoint,
}

#[derive(Debug, Args)]
pub struct SliceArgs {
    /// CSV with a header row.
    #[arg(long)]
    data: std::path::PathBuf,
    /// Global variable of each column, "0,1,2"; defaults to 0, 1, ...
    #[arg(long)]
    vars: Option<String>,
    /// Tuples to keep, "0,1;1,2".
    #[arg(long)]
    tuples: String,
    #[arg(long, value_enum, default_value_t = ModeArg::Shared)]
    mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn read_data(path: &Path, vars: Option<&str>) -> Result<Dataset> {
    let vars = match vars {
        Some(v) => parse_list(v)?,
        None => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let cols = text.lines().next().map_or(0, |h| h.split(',').count());
            (0..cols).collect()
        }
    };
    Ok(Dataset::read_csv(path, VariableTuple::new(vars)?)?)
}

/// Writes `slice_<k>.csv` per tuple and a `manifest.json` listing them.
pub fn slice(a: SliceArgs, out: Option<&Path>) -> Result<()> {
    let dir = out_dir(out, "slice")?;
    let data = read_data(&a.data, a.vars.as_deref())?;
    let tuples = parse_tuples(&a.tuples)?
        .into_iter()
        .map(VariableTuple::new)
        .collect::<causal_subsets::Result<Vec<_>>>()?;
    let mode = match a.mode {
        ModeArg::Shared => RowMode::Shared,
        ModeArg::Disjoint => RowMode::Disjoint,
    };
    let mut manifest = Vec::new();
    for (k, d) in slice_overlapping(&data, &tuples, mode, a.seed)?.iter().enumerate() {
        let file = format!("slice_{k}.csv");
        d.write_csv(&dir.join(&file), None)?;
        manifest.push(DatasetManifest {
            file,
            vars: d.vars().as_slice().to_vec(),
        });
    }
    write_json(&manifest, Some(&dir.join("manifest.json")))
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Manifests {
    One(DatasetManifest),
    Many(Vec<DatasetManifest>),
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// A dataset manifest (one or a list), or a CSV file.
    #[arg(long)]
    data: std::path::PathBuf,
    /// Column variables when --data is a CSV file.
    #[arg(long)]
    vars: Option<String>,
    /// JSON list of queries.
    #[arg(long)]
    queries: std::path::PathBuf,
    #[arg(long, default_value_t = TestConfig::default().alpha)]
    alpha: f64,
    #[arg(long, default_value_t = TestConfig::default().min_abs_corr)]
    min_abs_corr: f64,
}

#[derive(Debug, Serialize)]
struct TestOutput {
    labeled: Vec<LabeledQuery>,
    dropped: Vec<Skipped>,
}

/// Whether a failed test means "no label" rather than bad input.
fn unlabelable(e: &Error) -> bool {
    matches!(
        e,
        Error::DegenerateData(_) | Error::DegenerateSign { .. } | Error::InsufficientData { .. } | Error::Query(_)
    )
}

pub fn test(a: TestArgs, out: Option<&Path>) -> Result<()> {
    let datasets = if a.data.extension().is_some_and(|e| e == "csv") {
        vec![read_data(&a.data, a.vars.as_deref())?]
    } else {
        let base = a.data.parent().unwrap_or(Path::new("."));
        let ms = match read_json::<Manifests>(&a.data)? {
            Manifests::One(m) => vec![m],
            Manifests::Many(ms) => ms,
        };
        ms.iter().map(|m| m.load(base)).collect::<causal_subsets::Result<_>>()?
    };
    let cfg = TestConfig {
        alpha: a.alpha,
        min_abs_corr: a.min_abs_corr,
    };
    cfg.validate()?;
    let queries: Vec<Query> = read_json(&a.queries)?;
    let mut result = TestOutput {
        labeled: Vec::new(),
        dropped: Vec::new(),
    };
    for q in queries {
        let vars = q.variables();
        let Some(d) = datasets.iter().find(|d| vars.iter().all(|v| d.vars().as_slice().contains(v))) else {
            result.dropped.push(Skipped {
                query: q,
                reason: "no dataset observes all of its variables".into(),
            });
            continue;
        };
        match apply_test(d, &q, &cfg) {
            Ok(outcome) => result.labeled.push(LabeledQuery::new(q, outcome)?),
            Err(e) if unlabelable(&e) => result.dropped.push(Skipped {
                query: q,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e.into()),
        }
    }
    write_json(&result, out)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Method {
    Exhaustive,
    Local,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, value_parser = class_arg)]
    class: ModelClass,
    #[arg(long)]
    n: usize,
    /// Labeled queries: a list, or the output of `test` or `predict`.
    #[arg(long)]
    labels: std::path::PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Local)]
    method: Method,
    /// Moves per restart.
    #[arg(long, default_value_t = 1000)]
    budget: usize,
    #[arg(long, default_value_t = 4)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Start from a skeleton built from the labels.
    #[arg(long)]
    warm_start: bool,
}

pub fn fit(a: FitArgs, out: Option<&Path>) -> Result<()> {
    let labels = read_json::<LabelFile>(&a.labels)?.into_labels();
    let result = match a.method {
        Method::Exhaustive => fit_exhaustive(a.class, a.n, &labels)?,
        Method::Local => {
            let settings = LocalSearch {
                budget: a.budget,
                restarts: a.restarts,
                seed: a.seed,
                warm_start: a.warm_start,
            };
            fit_local(a.class, a.n, &labels, &settings)?
        }
    };
    write_json(&result, out)
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// `{"class": ..., "model": ...}`; the output of `fit` also works.
    #[arg(long)]
    model: std::path::PathBuf,
    /// JSON list of queries.
    #[arg(long)]
    queries: std::path::PathBuf,
}

#[derive(Debug, Serialize)]
struct PredictOutput {
    predictions: Vec<LabeledQuery>,
    undecided: Vec<Skipped>,
}

pub fn predict(a: PredictArgs, out: Option<&Path>) -> Result<()> {
    let (_, model) = ModelFile::load(&a.model)?;
    let queries: Vec<Query> = read_json(&a.queries)?;
    let mut result = PredictOutput {
        predictions: Vec::new(),
        undecided: Vec::new(),
    };
    for q in queries {
        q.check_within(model.n())?;
        match model.predict(&q) {
            Ok(outcome) => result.predictions.push(LabeledQuery::new(q, outcome)?),
            Err(e @ Error::ModelOutsideClass(_)) => result.undecided.push(Skipped {
                query: q,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e.into()),
        }
    }
    write_json(&result, out)
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Number of datasets.
    #[arg(long)]
    k: Option<u64>,
    /// VC dimension; or give --class and --n.
    #[arg(long, conflicts_with = "class")]
    h: Option<f64>,
    #[arg(long, value_parser = class_arg, requires = "n")]
    class: Option<ModelClass>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    /// full or sqrt_only.
    #[arg(long, default_value = "full")]
    variant: Variant,
    /// Output range of real-valued properties, "a,b".
    #[arg(long, default_value = "0,1")]
    range: String,
    /// Also report the smallest k reaching this deviation.
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Debug, Serialize)]
struct BoundsOutput {
    h: f64,
    eta: f64,
    variant: Variant,
    range: (f64, f64),
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_below_h: Option<bool>,
    /// Deviation for binary properties.
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    /// Deviation for properties valued in `range`.
    #[serde(skip_serializing_if = "Option::is_none")]
    real_epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    required_k: Option<u64>,
}

pub fn class_spec(class: ModelClass, n: usize) -> ClassSpec {
    match class {
        ModelClass::Dag => ClassSpec::Dag { n },
        ModelClass::Polytree => ClassSpec::Polytree { n },
        ModelClass::Path => ClassSpec::PathCorr { n, h_override: None },
        ModelClass::PathSign => ClassSpec::PathSign { n },
        ModelClass::Direction => ClassSpec::Direction { n },
    }
}

pub fn bounds(a: BoundsArgs, out: Option<&Path>) -> Result<()> {
    let h = match (a.h, a.class, a.n) {
        (Some(h), _, _) => h,
        (None, Some(class), Some(n)) => vc_upper(&class_spec(class, n)),
        _ => bail!("give either --h or --class with --n"),
    };
    if a.k.is_none() && a.epsilon.is_none() {
        bail!("nothing to compute: give --k, --epsilon or both");
    }
    let range = parse_pair(&a.range)?;
    let mut result = BoundsOutput {
        h,
        eta: a.eta,
        variant: a.variant,
        range,
        k: a.k,
        k_below_h: None,
        epsilon: None,
        real_epsilon: None,
        target_epsilon: a.epsilon,
        required_k: None,
    };
    if let Some(k) = a.k {
        let spec = BoundSpec::new(k, h, a.eta).with_variant(a.variant).with_range(range.0, range.1);
        result.k_below_h = Some(spec.k_below_h());
        result.epsilon = Some(binary_bound(&spec)?);
        result.real_epsilon = Some(real_bound(&spec)?);
    }
    if let Some(eps) = a.epsilon {
        result.required_k = Some(required_k(h, a.eta, eps, a.variant)?);
    }
    write_json(&result, out)
}

#[derive(Debug, Args)]
pub struct Figure1Args {
    /// Inclusive range of variable counts, "lo..hi".
    #[arg(long, default_value = "10..120")]
    n: String,
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
}

pub fn figure1(a: Figure1Args, out: Option<&Path>) -> Result<()> {
    let (lo, hi) = parse_range(&a.n)?;
    let rows = figure1_table(lo, hi, a.eta, a.epsilon)?;
    let mut buf = Vec::new();
    write_figure1_csv(&rows, &mut buf)?;
    write_text(&String::from_utf8(buf)?, out)
}

#[derive(Debug, Args)]
pub struct MergeArgs {
    /// Distribution over (X, Y).
    #[arg(long)]
    first: std::path::PathBuf,
    /// Distribution over (Y, Z).
    #[arg(long)]
    second: std::path::PathBuf,
    /// Largest tolerated distance between the two Y marginals.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

pub fn merge(a: MergeArgs, out: Option<&Path>) -> Result<()> {
    let first: Distribution = read_json(&a.first)?;
    let second: Distribution = read_json(&a.second)?;
    match (&first, &second) {
        (Distribution::Discrete(xy), Distribution::Discrete(yz)) => write_json(&merge_chain_discrete(xy, yz, a.tol)?, out),
        (Distribution::Gaussian(xy), Distribution::Gaussian(yz)) => {
            #[derive(Serialize)]
            struct GaussianMerge {
                dist: causal_subsets::merge::GaussianDist,
            }
            write_json(&GaussianMerge { dist: merge_chain_gaussian(xy, yz, a.tol)? }, out)
        }
        _ => bail!("cannot merge a discrete table with a Gaussian"),
    }
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[arg(long)]
    n: usize,
    /// JSON list of constraints; none means every DAG.
    #[arg(long)]
    constraints: Option<std::path::PathBuf>,
}

#[derive(Debug, Serialize)]
struct EnumerateOutput {
    count: usize,
    dags: Vec<Dag>,
}

pub fn enumerate(a: EnumerateArgs, out: Option<&Path>) -> Result<()> {
    let constraints: Vec<CausalConstraint> = match &a.constraints {
        Some(p) => read_json(p)?,
        None => Vec::new(),
    };
    let dags = enumerate_constrained_dags(a.n, &constraints)?;
    write_json(&EnumerateOutput { count: dags.len(), dags }, out)
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    config: std::path::PathBuf,
    /// Replaces the config's seeds, "0,1,2".
    #[arg(long)]
    seeds: Option<String>,
}

pub fn experiment(a: ExperimentArgs, out: Option<&Path>) -> Result<()> {
    let mut cfg: ExperimentConfig = read_json(&a.config)?;
    if let Some(s) = &a.seeds {
        cfg.seeds = parse_list(s)?.into_iter().map(|v| v as u64).collect();
    }
    write_json(&run_experiment(&cfg)?, out)
}
