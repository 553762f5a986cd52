//! End-to-end runs: generate a true model, label observed subsets, fit, and
//! compare the held-out error against the generalization bound.

use serde::{Deserialize, Serialize};

use crate::bounds::{binary_bound, real_bound, vc_upper, BoundSpec, ClassSpec, Variant};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::{CausalModel, ModelClass};
use crate::query::{LabeledQuery, Query, QueryKind};
use crate::search::{empirical_error, fit_exhaustive, fit_local, FitResult, LocalSearch};
use crate::stats::{apply_test, TestConfig};
use crate::synth::{
    sample_graph, sample_queries, sem_for_model, sample_queries_iid, slice_overlapping, GraphParams, LinearSem, NoiseKind,
    QueryUniverse, RowMode,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Labeling {
    /// Statistical tests on sampled data.
    #[default]
    Data,
    /// The true model's own predictions.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Distinct queries; test queries never repeat training queries.
    #[default]
    WithoutReplacement,
    /// Independent uniform draws for both sets.
    Iid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SearchSettings {
    Exhaustive,
    Local {
        budget: usize,
        restarts: usize,
        #[serde(default)]
        warm_start: bool,
    },
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings::Local {
            budget: 1000,
            restarts: 4,
            warm_start: false,
        }
    }
}

/// SEM parameters for data generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SemParams {
    pub coeff_range: (f64, f64),
    pub noise: NoiseKind,
}

impl Default for SemParams {
    fn default() -> Self {
        SemParams {
            coeff_range: (0.5, 0.9),
            noise: NoiseKind::Gaussian,
        }
    }
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

fn default_max_cond() -> usize {
    1
}

/// Everything a run needs; JSON with a `schema_version` field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub class: ModelClass,
    pub n: usize,
    /// Query kind; defaults to the natural kind of the class.
    #[serde(default)]
    pub query_kind: Option<QueryKind>,
    #[serde(default)]
    pub graph: GraphParams,
    #[serde(default)]
    pub sem: SemParams,
    pub l: usize,
    pub k_train: usize,
    pub k_test: usize,
    pub eta: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_min_abs_corr")]
    pub min_abs_corr: f64,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub row_mode: RowMode,
    #[serde(default)]
    pub search: SearchSettings,
    #[serde(default)]
    pub labeling: Labeling,
    /// Largest conditioning set for `cond_indep` queries (smallest is 1).
    #[serde(default = "default_max_cond")]
    pub max_cond: usize,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub variant: Variant,
    /// Overrides the class's VC-dimension bound.
    #[serde(default)]
    pub h_override: Option<f64>,
}

fn default_alpha() -> f64 {
    TestConfig::default().alpha
}

fn default_min_abs_corr() -> f64 {
    TestConfig::default().min_abs_corr
}

fn natural_kind(class: ModelClass) -> QueryKind {
    match class {
        ModelClass::Dag | ModelClass::Polytree => QueryKind::CondIndep,
        ModelClass::Path => QueryKind::Corr,
        ModelClass::PathSign => QueryKind::Sign,
        ModelClass::Direction => QueryKind::Direction,
    }
}

impl ExperimentConfig {
    /// Defaults for everything except the essentials.
    pub fn new(class: ModelClass, n: usize, l: usize, k_train: usize, k_test: usize, eta: f64, seeds: Vec<u64>) -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            class,
            n,
            query_kind: None,
            graph: GraphParams::default(),
            sem: SemParams::default(),
            l,
            k_train,
            k_test,
            eta,
            alpha: default_alpha(),
            min_abs_corr: default_min_abs_corr(),
            seeds,
            row_mode: RowMode::Shared,
            search: SearchSettings::default(),
            labeling: Labeling::Data,
            max_cond: 1,
            sampling: Sampling::WithoutReplacement,
            variant: Variant::Full,
            h_override: None,
        }
    }

    pub fn kind(&self) -> QueryKind {
        self.query_kind.unwrap_or_else(|| natural_kind(self.class))
    }

    pub fn universe(&self) -> QueryUniverse {
        QueryUniverse::new(self.kind(), self.n).with_cond_sizes(1, self.max_cond)
    }

    fn test_config(&self) -> TestConfig {
        TestConfig {
            alpha: self.alpha,
            min_abs_corr: self.min_abs_corr,
        }
    }

    /// The capacity used in the bound.
    pub fn class_spec(&self) -> ClassSpec {
        let n = self.n;
        match self.class {
            ModelClass::Dag => ClassSpec::Dag { n },
            ModelClass::Polytree => ClassSpec::Polytree { n },
            ModelClass::PathSign => ClassSpec::PathSign { n },
            ModelClass::Path => ClassSpec::PathCorr {
                n,
                h_override: self.h_override,
            },
            ModelClass::Direction => ClassSpec::Direction { n },
        }
    }

    fn h(&self) -> f64 {
        match (self.class, self.h_override) {
            (ModelClass::Path, _) | (_, None) => vc_upper(&self.class_spec()),
            (_, Some(h)) => h,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version {} unsupported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if self.n < 2 {
            return bad("n must be at least 2".into());
        }
        if self.l < 1 || self.k_train < 1 {
            return bad("l and k_train must be at least 1".into());
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad(format!("eta {} outside (0, 1)", self.eta));
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        self.test_config().validate()?;
        let kind = self.kind();
        let answerable = match self.class {
            ModelClass::Dag | ModelClass::Polytree => matches!(kind, QueryKind::CondIndep),
            ModelClass::Path => matches!(kind, QueryKind::CondIndep | QueryKind::Corr | QueryKind::Sign),
            ModelClass::PathSign => kind == QueryKind::Sign,
            ModelClass::Direction => matches!(kind, QueryKind::Direction | QueryKind::CondIndep),
        };
        if !answerable {
            return bad(format!("{} models cannot answer {} queries", self.class.name(), kind.name()));
        }
        if kind == QueryKind::CondIndep && (self.max_cond < 1 || self.max_cond + 2 > self.n) {
            return bad(format!("max_cond must be in 1..={}", self.n.saturating_sub(2)));
        }
        if self.labeling == Labeling::Data && kind == QueryKind::Direction && self.sem.noise == NoiseKind::Gaussian {
            return bad("direction tests need non-Gaussian noise; set sem.noise to uniform".into());
        }
        if self.sampling == Sampling::WithoutReplacement {
            let size = self.universe().enumerate()?.len();
            if self.k_train + self.k_test > size {
                return bad(format!(
                    "k_train + k_test = {} exceeds the query universe of {size}",
                    self.k_train + self.k_test
                ));
            }
        }
        if let SearchSettings::Exhaustive = self.search {
            let cap = self.class.enumeration_cap();
            if self.n > cap {
                return Err(Error::capacity(format!("exhaustive {} search", self.class.name()), cap, self.n));
            }
        }
        if let SearchSettings::Local { budget, restarts, .. } = self.search {
            if budget < 1 || restarts < 1 {
                return bad("local search needs budget >= 1 and restarts >= 1".into());
            }
        }
        if self.row_mode == RowMode::Disjoint && self.l < self.k_train + self.k_test {
            return bad("disjoint rows need l >= k_train + k_test".into());
        }
        Ok(())
    }
}

/// One seed's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub truth: CausalModel,
    pub fit: FitResult,
    pub train_error: f64,
    /// `None` when there are no test queries.
    pub test_error: Option<f64>,
    pub bound_epsilon: Option<f64>,
    /// `test_error ≤ train_error + ε`; `None` without test queries or bound.
    pub bound_satisfied: Option<bool>,
    pub k_train_labeled: usize,
    pub k_test_labeled: usize,
    /// Queries whose test failed (degenerate data or near-zero correlation).
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub seeds: usize,
    pub satisfied: usize,
    /// Satisfied seeds over seeds with a verdict.
    pub satisfaction_rate: Option<f64>,
    pub mean_train_error: f64,
    pub mean_test_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub h: f64,
    /// Sorted by seed.
    pub results: Vec<SeedResult>,
    pub aggregate: Aggregate,
}

/// Independent stream `k` derived from a seed.
fn sub_seed(seed: u64, k: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn sem_for(cfg: &ExperimentConfig, truth: &CausalModel, seed: u64) -> Result<LinearSem> {
    sem_for_model(truth, cfg.sem.coeff_range, cfg.graph.corr_range.1.min(0.9), cfg.sem.noise, seed)
}

fn label(
    cfg: &ExperimentConfig,
    truth: &CausalModel,
    data: Option<&[Dataset]>,
    qs: &[Query],
) -> Result<(Vec<LabeledQuery>, usize)> {
    let tc = cfg.test_config();
    let mut out = Vec::with_capacity(qs.len());
    let mut dropped = 0;
    for (k, q) in qs.iter().enumerate() {
        let outcome = match data {
            None => truth.predict(q),
            Some(d) => apply_test(&d[k.min(d.len() - 1)], q, &tc),
        };
        match outcome {
            Ok(o) => out.push(LabeledQuery::new(q.clone(), o)?),
            Err(Error::DegenerateSign { .. } | Error::DegenerateData(_) | Error::InsufficientData { .. }) => dropped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((out, dropped))
}

/// Datasets for the queries: the whole sample when rows are shared, one
/// disjoint block per query otherwise.
fn datasets_for(cfg: &ExperimentConfig, d: &Dataset, qs: &[Query], seed: u64) -> Result<Vec<Dataset>> {
    match cfg.row_mode {
        RowMode::Shared => Ok(vec![d.clone()]),
        RowMode::Disjoint => {
            let tuples: Vec<_> = qs.iter().map(crate::synth::query_tuple).collect();
            slice_overlapping(d, &tuples, RowMode::Disjoint, seed)
        }
    }
}

fn run_seed(cfg: &ExperimentConfig, seed: u64, h: f64) -> Result<SeedResult> {
    let truth = sample_graph(cfg.class, cfg.n, sub_seed(seed, 1), &cfg.graph)?;
    let universe = cfg.universe();
    let (train_q, test_q) = match cfg.sampling {
        Sampling::WithoutReplacement => {
            let train = sample_queries(&universe, cfg.k_train, sub_seed(seed, 3), &[])?;
            let test = sample_queries(&universe, cfg.k_test, sub_seed(seed, 4), &train)?;
            (train, test)
        }
        Sampling::Iid => (
            sample_queries_iid(&universe, cfg.k_train, sub_seed(seed, 3))?,
            sample_queries_iid(&universe, cfg.k_test, sub_seed(seed, 4))?,
        ),
    };
    let ((train, dropped_train), (test, dropped_test)) = match cfg.labeling {
        Labeling::Oracle => (label(cfg, &truth, None, &train_q)?, label(cfg, &truth, None, &test_q)?),
        Labeling::Data => {
            let sem = sem_for(cfg, &truth, sub_seed(seed, 2))?;
            let data = sem.sample(cfg.l, sub_seed(seed, 5))?;
            let all: Vec<Query> = train_q.iter().chain(&test_q).cloned().collect();
            let sets = datasets_for(cfg, &data, &all, sub_seed(seed, 6))?;
            let (train_sets, test_sets) = if sets.len() == 1 {
                (&sets[..], &sets[..])
            } else {
                sets.split_at(train_q.len())
            };
            (
                label(cfg, &truth, Some(train_sets), &train_q)?,
                label(cfg, &truth, Some(test_sets), &test_q)?,
            )
        }
    };
    if train.is_empty() {
        return Err(Error::UndefinedMean);
    }
    let fit = match cfg.search {
        SearchSettings::Exhaustive => fit_exhaustive(cfg.class, cfg.n, &train)?,
        SearchSettings::Local {
            budget,
            restarts,
            warm_start,
        } => fit_local(
            cfg.class,
            cfg.n,
            &train,
            &LocalSearch {
                budget,
                restarts,
                seed: sub_seed(seed, 7),
                warm_start,
            },
        )?,
    };
    let test_error = if test.is_empty() {
        None
    } else {
        Some(empirical_error(&fit.model, &test)?)
    };
    let spec = BoundSpec::new(train.len() as u64, h, cfg.eta).with_variant(cfg.variant);
    let bound_epsilon = if cfg.kind().is_binary() {
        binary_bound(&spec).ok()
    } else {
        real_bound(&spec.with_range(-1.0, 1.0)).ok()
    };
    let bound_satisfied = match (test_error, bound_epsilon) {
        (Some(t), Some(e)) => Some(t <= fit.train_error + e),
        _ => None,
    };
    Ok(SeedResult {
        seed,
        truth,
        train_error: fit.train_error,
        fit,
        test_error,
        bound_epsilon,
        bound_satisfied,
        k_train_labeled: train.len(),
        k_test_labeled: test.len(),
        dropped: dropped_train + dropped_test,
    })
}

/// Runs every seed; results are sorted by seed and reproducible bit for bit.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let h = cfg.h();
    let mut seeds = cfg.seeds.clone();
    seeds.sort_unstable();
    let results = seeds.iter().map(|&s| run_seed(cfg, s, h)).collect::<Result<Vec<_>>>()?;
    let verdicts: Vec<bool> = results.iter().filter_map(|r| r.bound_satisfied).collect();
    let tests: Vec<f64> = results.iter().filter_map(|r| r.test_error).collect();
    let aggregate = Aggregate {
        seeds: results.len(),
        satisfied: verdicts.iter().filter(|&&v| v).count(),
        satisfaction_rate: (!verdicts.is_empty())
            .then(|| verdicts.iter().filter(|&&v| v).count() as f64 / verdicts.len() as f64),
        mean_train_error: results.iter().map(|r| r.train_error).sum::<f64>() / results.len() as f64,
        mean_test_error: (!tests.is_empty()).then(|| tests.iter().sum::<f64>() / tests.len() as f64),
    };
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        h,
        results,
        aggregate,
    })
}
