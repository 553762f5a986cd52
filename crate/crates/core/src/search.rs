//! Empirical-risk minimization over model classes.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dag, Polytree, UnionFind};
use crate::model::{enumerate_models, CausalModel, ModelClass, PathModel, PathSignModel};
use crate::query::{LabeledQuery, Query, QueryKind};
use crate::synth::{rng_from, sample_graph, GraphParams};

/// Relative weight of each query kind in the empirical error. All ones by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KindWeights {
    pub cond_indep: f64,
    pub sign: f64,
    pub corr: f64,
    pub direction: f64,
    pub anm: f64,
}

impl Default for KindWeights {
    fn default() -> Self {
        KindWeights {
            cond_indep: 1.0,
            sign: 1.0,
            corr: 1.0,
            direction: 1.0,
            anm: 1.0,
        }
    }
}

impl KindWeights {
    pub fn weight(&self, kind: QueryKind) -> f64 {
        match kind {
            QueryKind::CondIndep => self.cond_indep,
            QueryKind::Sign => self.sign,
            QueryKind::Corr => self.corr,
            QueryKind::Direction => self.direction,
            QueryKind::Anm => self.anm,
        }
    }
}

/// Mean deviation between the model's predictions and the observed outcomes.
pub fn empirical_error(model: &CausalModel, qs: &[LabeledQuery]) -> Result<f64> {
    empirical_error_weighted(model, qs, &KindWeights::default())
}

/// Weighted mean deviation, each query weighted by its kind.
pub fn empirical_error_weighted(model: &CausalModel, qs: &[LabeledQuery], weights: &KindWeights) -> Result<f64> {
    let scorer = Scorer::new(qs, weights)?;
    Ok(scorer.mean(scorer.sum(model, f64::INFINITY)?.expect("no cutoff")))
}

struct Scorer<'a> {
    qs: &'a [LabeledQuery],
    w: Vec<f64>,
    total: f64,
}

impl<'a> Scorer<'a> {
    fn new(qs: &'a [LabeledQuery], weights: &KindWeights) -> Result<Self> {
        if qs.is_empty() {
            return Err(Error::UndefinedMean);
        }
        let w: Vec<f64> = qs.iter().map(|l| weights.weight(l.query.kind())).collect();
        if w.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
            return Err(Error::Config("query weights must be finite and non-negative".into()));
        }
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            return Err(Error::UndefinedMean);
        }
        Ok(Scorer { qs, w, total })
    }

    /// Weighted deviation sum, or `None` once the running sum reaches `cutoff`.
    fn sum(&self, model: &CausalModel, cutoff: f64) -> Result<Option<f64>> {
        self.sum_in(model, cutoff, None)
    }

    /// `sum` visiting queries in `order` (all of them, any permutation).
    fn sum_in(&self, model: &CausalModel, cutoff: f64, order: Option<&[usize]>) -> Result<Option<f64>> {
        let compiled = model.compile();
        let mut acc = 0.0;
        let mut visit = |k: usize| -> Result<bool> {
            let l = &self.qs[k];
            acc += self.w[k] * compiled.predict(&l.query)?.deviation(l.outcome)?;
            Ok(acc >= cutoff)
        };
        match order {
            Some(o) => {
                for &k in o {
                    if visit(k)? {
                        return Ok(None);
                    }
                }
            }
            None => {
                for k in 0..self.qs.len() {
                    if visit(k)? {
                        return Ok(None);
                    }
                }
            }
        }
        Ok(Some(acc))
    }

    /// Like `sum`, but models that cannot answer a query score as unusable.
    fn candidate(&self, model: &CausalModel, cutoff: f64) -> Result<Option<f64>> {
        self.candidate_in(model, cutoff, None)
    }

    fn candidate_in(&self, model: &CausalModel, cutoff: f64, order: Option<&[usize]>) -> Result<Option<f64>> {
        match self.sum_in(model, cutoff, order) {
            Err(Error::ModelOutsideClass(_)) => Ok(None),
            other => other,
        }
    }

    /// Query indices with the queries `model` gets wrong first. Neighbours
    /// that repeat those mistakes then reach the cutoff almost immediately.
    fn mistakes_first(&self, model: &CausalModel) -> Vec<usize> {
        let compiled = model.compile();
        let wrong = |k: usize| {
            let l = &self.qs[k];
            !matches!(compiled.predict(&l.query).and_then(|o| o.deviation(l.outcome)), Ok(d) if d == 0.0)
        };
        let (mut first, rest): (Vec<usize>, Vec<usize>) = (0..self.qs.len()).partition(|&k| wrong(k));
        first.extend(rest);
        first
    }

    fn mean(&self, sum: f64) -> f64 {
        sum / self.total
    }
}

/// The best model found by a search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub class: ModelClass,
    pub model: CausalModel,
    pub train_error: f64,
    /// Models (or moves) scored.
    pub evaluations: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Deserialize)]
struct FitJson {
    class: ModelClass,
    model: serde_json::Value,
    train_error: f64,
    evaluations: u64,
    #[serde(default)]
    warnings: Vec<String>,
}

impl<'de> Deserialize<'de> for FitResult {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = FitJson::deserialize(d)?;
        let model = CausalModel::from_json(j.class, j.model).map_err(serde::de::Error::custom)?;
        Ok(FitResult {
            class: j.class,
            model,
            train_error: j.train_error,
            evaluations: j.evaluations,
            warnings: j.warnings,
        })
    }
}

fn check_queries(n: usize, qs: &[LabeledQuery]) -> Result<()> {
    qs.iter().try_for_each(|l| l.query.check_within(n))
}

fn no_model_fits(class: ModelClass) -> Error {
    Error::ModelOutsideClass(format!("no {} model answers every query", class.name()))
}

/// Minimizes the empirical error over the whole class; ties go to the model
/// that comes first in canonical enumeration order.
///
/// Path models get their adjacent correlations refitted per ordering.
pub fn fit_exhaustive(class: ModelClass, n: usize, qs: &[LabeledQuery]) -> Result<FitResult> {
    fit_exhaustive_weighted(class, n, qs, &KindWeights::default())
}

pub fn fit_exhaustive_weighted(class: ModelClass, n: usize, qs: &[LabeledQuery], weights: &KindWeights) -> Result<FitResult> {
    let models = enumerate_models(class, n)?;
    check_queries(n, qs)?;
    let scorer = Scorer::new(qs, weights)?;
    let obs = PathObservations::collect(qs);
    let mut best: Option<(f64, CausalModel, Vec<String>)> = None;
    let mut evaluations = 0;
    for model in models {
        evaluations += 1;
        let (model, warnings) = match model {
            CausalModel::Path(p) if class == ModelClass::Path => {
                let fit = obs.fit(p.perm())?;
                (CausalModel::Path(fit.model(p.perm().to_vec())?), fit.warnings())
            }
            m => (m, Vec::new()),
        };
        let cutoff = best.as_ref().map_or(f64::INFINITY, |b| b.0);
        if let Some(s) = scorer.candidate(&model, cutoff)? {
            best = Some((s, model, warnings));
        }
    }
    let (sum, model, warnings) = best.ok_or_else(|| no_model_fits(class))?;
    Ok(FitResult {
        class,
        model,
        train_error: scorer.mean(sum),
        evaluations,
        warnings,
    })
}

/// Local-search settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalSearch {
    /// Maximum number of accepted moves per restart.
    pub budget: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Start the first restart from [`skeleton_start`] instead of a random model.
    #[serde(default)]
    pub warm_start: bool,
}

/// Steepest-descent local search from random starting models.
///
/// Each step scores the whole neighbourhood and moves to its best member if
/// that is strictly better; a restart ends at a local optimum, at zero error
/// or after `budget` moves. The best model over restarts wins, ties broken by
/// canonical order and then by restart index.
///
/// Moves:
/// * `dag`: add, remove or reverse one edge, keeping the graph acyclic.
/// * `polytree`: reorient an edge, delete an edge, join two components, or
///   delete an edge and reconnect the two halves elsewhere.
/// * `path`, `direction`: swap two adjacent positions or reverse a segment of
///   the ordering; path correlations are refitted after every move.
/// * `path_sign`: the ordering moves plus flipping one edge sign.
pub fn fit_local(class: ModelClass, n: usize, qs: &[LabeledQuery], settings: &LocalSearch) -> Result<FitResult> {
    fit_local_weighted(class, n, qs, settings, &KindWeights::default())
}

pub fn fit_local_weighted(
    class: ModelClass,
    n: usize,
    qs: &[LabeledQuery],
    settings: &LocalSearch,
    weights: &KindWeights,
) -> Result<FitResult> {
    if settings.budget < 1 || settings.restarts < 1 {
        return Err(Error::input("local search needs budget >= 1 and restarts >= 1"));
    }
    if n == 0 {
        return Err(Error::input("n must be at least 1"));
    }
    check_queries(n, qs)?;
    let scorer = Scorer::new(qs, weights)?;
    let obs = PathObservations::collect(qs);
    let mut evaluations = 0u64;
    let mut best: Option<(f64, CausalModel, Vec<String>)> = None;
    for restart in 0..settings.restarts {
        let mut rng = rng_from(settings.seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let warm = if settings.warm_start && restart == 0 { skeleton_start(class, n, qs)? } else { None };
        let start = match warm {
            Some(m) => m,
            None => sample_graph(class, n, rng.random(), &GraphParams::default())?,
        };
        let mut current = Candidate::new(class, start, &obs)?;
        evaluations += 1;
        let mut current_sum = scorer.candidate(&current.model, f64::INFINITY)?.unwrap_or(f64::INFINITY);
        for _ in 0..settings.budget {
            if current_sum == 0.0 {
                break;
            }
            let order = scorer.mistakes_first(&current.model);
            let mut step: Option<(f64, Candidate)> = None;
            for next in neighbors(class, &current.model) {
                evaluations += 1;
                let next = Candidate::new(class, next, &obs)?;
                let cutoff = step.as_ref().map_or(current_sum, |s| s.0);
                if let Some(s) = scorer.candidate_in(&next.model, cutoff, Some(&order))? {
                    step = Some((s, next));
                }
            }
            match step {
                Some((s, next)) => {
                    current = next;
                    current_sum = s;
                }
                None => break,
            }
        }
        if !current_sum.is_finite() {
            continue;
        }
        // restarts are compared on sums taken in the natural order
        let current_sum = scorer.sum(&current.model, f64::INFINITY)?.expect("no cutoff");
        let better = match &best {
            None => true,
            Some((s, m, _)) => current_sum < *s || (current_sum == *s && current.model.canonical_cmp(m).is_lt()),
        };
        if better {
            best = Some((current_sum, current.model, current.warnings));
        }
    }
    let (sum, model, warnings) = best.ok_or_else(|| no_model_fits(class))?;
    Ok(FitResult {
        class,
        model,
        train_error: scorer.mean(sum),
        evaluations,
        warnings,
    })
}

/// A forest built from conditional-independence labels: pairs ranked by the
/// fraction of their queries labeled dependent, joined greedily into a
/// maximum spanning forest (fraction above one half only), and oriented
/// away from the smallest node of each tree.
///
/// `None` for classes other than `dag` and `polytree`, or without
/// `cond_indep` labels.
pub fn skeleton_start(class: ModelClass, n: usize, qs: &[LabeledQuery]) -> Result<Option<CausalModel>> {
    if !matches!(class, ModelClass::Dag | ModelClass::Polytree) {
        return Ok(None);
    }
    let mut dep = vec![(0u32, 0u32); n * n];
    for l in qs {
        if let Query::CondIndep { x, y, .. } = l.query {
            let cell = &mut dep[x.min(y) * n + x.max(y)];
            cell.0 += l.outcome.value() as u32;
            cell.1 += 1;
        }
    }
    let mut pairs: Vec<(usize, usize, u32, u32)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .map(|(a, b)| (a, b, dep[a * n + b].0, dep[a * n + b].1))
        .filter(|&(_, _, d, t)| t > 0 && 2 * d > t)
        .collect();
    if pairs.is_empty() && !qs.iter().any(|l| l.query.kind() == QueryKind::CondIndep) {
        return Ok(None);
    }
    // higher dependent fraction first, then more evidence
    pairs.sort_by(|p, q| {
        (q.2 as u64 * p.3 as u64)
            .cmp(&(p.2 as u64 * q.3 as u64))
            .then(q.3.cmp(&p.3))
            .then((p.0, p.1).cmp(&(q.0, q.1)))
    });
    let mut uf = UnionFind::new(n);
    let mut adj = vec![Vec::new(); n];
    for &(a, b, _, _) in &pairs {
        if uf.union(a, b) {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut edges = Vec::new();
    let mut seen = vec![false; n];
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    edges.push((u, v));
                    stack.push(v);
                }
            }
        }
    }
    let dag = Dag::new(n, edges)?;
    Ok(Some(match class {
        ModelClass::Polytree => CausalModel::Polytree(Polytree::new(dag)?),
        _ => CausalModel::Dag(dag),
    }))
}

struct Candidate {
    model: CausalModel,
    warnings: Vec<String>,
}

impl Candidate {
    fn new(class: ModelClass, model: CausalModel, obs: &PathObservations) -> Result<Self> {
        Ok(match model {
            CausalModel::Path(p) if class == ModelClass::Path => {
                let perm = canonical_perm(p.perm());
                let fit = obs.fit(&perm)?;
                Candidate {
                    model: CausalModel::Path(fit.model(perm)?),
                    warnings: fit.warnings(),
                }
            }
            CausalModel::PathSign(p) => Candidate {
                model: CausalModel::PathSign(canonical_path_sign(p)),
                warnings: Vec::new(),
            },
            model => Candidate {
                model,
                warnings: Vec::new(),
            },
        })
    }
}

fn canonical_perm(perm: &[usize]) -> Vec<usize> {
    let mut p = perm.to_vec();
    if p.len() > 1 && p[0] > p[p.len() - 1] {
        p.reverse();
    }
    p
}

fn canonical_path_sign(m: PathSignModel) -> PathSignModel {
    let p = m.perm();
    if p.len() > 1 && p[0] > p[p.len() - 1] {
        let perm: Vec<usize> = p.iter().rev().copied().collect();
        let signs: Vec<i8> = m.adj_sign().iter().rev().copied().collect();
        PathSignModel::new(perm, signs).expect("reversal keeps validity")
    } else {
        m
    }
}

fn ordering_moves(perm: &[usize]) -> Vec<Vec<usize>> {
    let n = perm.len();
    let mut out = Vec::new();
    for i in 0..n.saturating_sub(1) {
        let mut p = perm.to_vec();
        p.swap(i, i + 1);
        out.push(p);
    }
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue; // whole-path reversal is the same model
            }
            let mut p = perm.to_vec();
            p[i..=j].reverse();
            out.push(p);
        }
    }
    out
}

fn neighbors(class: ModelClass, model: &CausalModel) -> Vec<CausalModel> {
    match (class, model) {
        (ModelClass::Dag, CausalModel::Dag(d)) => dag_moves(d).into_iter().map(CausalModel::Dag).collect(),
        (ModelClass::Polytree, CausalModel::Polytree(p)) => polytree_moves(p.dag())
            .into_iter()
            .map(|d| CausalModel::Polytree(Polytree::new(d).expect("moves keep a forest")))
            .collect(),
        (ModelClass::Direction, CausalModel::Dag(d)) => ordering_moves(&d.topological_order())
            .into_iter()
            .map(|p| CausalModel::Dag(Dag::chain(&p).expect("chain")))
            .collect(),
        (ModelClass::Path, CausalModel::Path(p)) => ordering_moves(p.perm())
            .into_iter()
            .map(|perm| CausalModel::Path(PathModel::new(perm, p.adj_corr().to_vec()).expect("same length")))
            .collect(),
        (ModelClass::PathSign, CausalModel::PathSign(p)) => {
            let mut out: Vec<CausalModel> = ordering_moves(p.perm())
                .into_iter()
                .map(|perm| CausalModel::PathSign(PathSignModel::new(perm, p.adj_sign().to_vec()).expect("same length")))
                .collect();
            for e in 0..p.adj_sign().len() {
                let mut s = p.adj_sign().to_vec();
                s[e] = -s[e];
                out.push(CausalModel::PathSign(PathSignModel::new(p.perm().to_vec(), s).expect("valid")));
            }
            out
        }
        _ => Vec::new(),
    }
}

fn dag_moves(d: &Dag) -> Vec<Dag> {
    let n = d.n();
    let edges = d.edges();
    let mut out = Vec::new();
    let try_push = |out: &mut Vec<Dag>, e: Vec<(usize, usize)>| {
        if let Ok(g) = Dag::new(n, e) {
            out.push(g);
        }
    };
    for (k, &(a, b)) in edges.iter().enumerate() {
        let mut removed = edges.to_vec();
        removed.remove(k);
        out.push(Dag::new(n, removed.clone()).expect("subgraph of a DAG"));
        removed.push((b, a));
        try_push(&mut out, removed);
    }
    for a in 0..n {
        for b in 0..n {
            if a != b && !d.has_edge(a, b) && !d.has_edge(b, a) {
                let mut added = edges.to_vec();
                added.push((a, b));
                try_push(&mut out, added);
            }
        }
    }
    out
}

fn components(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut uf = UnionFind::new(n);
    for &(a, b) in edges {
        uf.union(a, b);
    }
    (0..n).map(|v| uf.find(v)).collect()
}

fn polytree_moves(d: &Dag) -> Vec<Dag> {
    let n = d.n();
    let edges = d.edges();
    let mut out = Vec::new();
    let build = |e: Vec<(usize, usize)>| Dag::new(n, e).expect("forest edges form a DAG");
    for (k, &(a, b)) in edges.iter().enumerate() {
        let mut rest = edges.to_vec();
        rest.remove(k);
        let mut flipped = rest.clone();
        flipped.push((b, a));
        out.push(build(flipped));
        out.push(build(rest.clone()));
        let comp = components(n, &rest);
        for u in 0..n {
            for v in 0..n {
                if comp[u] == comp[a] && comp[v] == comp[b] && (u, v) != (a, b) {
                    for e in [(u, v), (v, u)] {
                        let mut moved = rest.clone();
                        moved.push(e);
                        out.push(build(moved));
                    }
                }
            }
        }
    }
    let comp = components(n, edges);
    for u in 0..n {
        for v in 0..n {
            if u != v && comp[u] != comp[v] {
                let mut added = edges.to_vec();
                added.push((u, v));
                out.push(build(added));
            }
        }
    }
    out
}

/// Adjacent correlations fitted to a fixed ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct PathFit {
    pub adj_corr: Vec<f64>,
    /// Edges no observation spans; their correlation defaults to 0.5.
    pub uncovered: Vec<usize>,
    /// Number of zero correlations replaced by magnitude 1e-9.
    pub zero_clamped: usize,
    /// Edges whose sign votes were tied; the sign defaults to +1.
    pub sign_ties: Vec<usize>,
}

impl PathFit {
    pub fn model(&self, perm: Vec<usize>) -> Result<PathModel> {
        PathModel::new(perm, self.adj_corr.clone())
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !self.uncovered.is_empty() {
            w.push(format!("path edges {:?} not covered by any observation; r set to 0.5", self.uncovered));
        }
        if self.zero_clamped > 0 {
            w.push(format!("{} zero correlations clamped to magnitude 1e-9", self.zero_clamped));
        }
        if !self.sign_ties.is_empty() {
            w.push(format!("tied sign votes on path edges {:?}; +1 chosen", self.sign_ties));
        }
        w
    }
}

const UNCOVERED_R: f64 = 0.5;
const ZERO_CORR: f64 = 1e-9;

/// Fits the adjacent correlations of the path `perm` to observed pairwise
/// correlations.
///
/// Magnitudes: least squares for the per-edge log magnitudes `β`, where
/// `log|corr(i, j)|` is the sum of `β` over the edges between `i` and `j`,
/// then `β ≤ 0` by clamping. Signs: walking along the path, each node's
/// cumulative sign is the majority vote of all observations linking it to
/// earlier nodes; a tie keeps the previous node's sign.
pub fn fit_path_params(perm: &[usize], corr_pairs: &[(usize, usize, f64)]) -> Result<PathFit> {
    if corr_pairs.is_empty() {
        return Err(Error::input("fit_path_params needs at least one observed correlation"));
    }
    fit_path_inner(perm, corr_pairs, &[])
}

fn fit_path_inner(perm: &[usize], corr_pairs: &[(usize, usize, f64)], sign_pairs: &[(usize, usize, i8)]) -> Result<PathFit> {
    let n = perm.len();
    let mut position = vec![usize::MAX; n];
    for (p, &v) in perm.iter().enumerate() {
        if v >= n || position[v] != usize::MAX {
            return Err(Error::input(format!("{perm:?} is not a permutation")));
        }
        position[v] = p;
    }
    let m = n.saturating_sub(1);
    let span = |i: usize, j: usize| -> Result<(usize, usize)> {
        if i >= n || j >= n || i == j {
            return Err(Error::input(format!("pair ({i},{j}) is not two distinct variables in 0..{n}")));
        }
        let (a, b) = (position[i], position[j]);
        Ok((a.min(b), a.max(b)))
    };
    let mut zero_clamped = 0;
    let mut rows = Vec::with_capacity(corr_pairs.len());
    // (lower position, upper position, sign)
    let mut votes: Vec<(usize, usize, i8)> = Vec::new();
    for &(i, j, c) in corr_pairs {
        if !(c.abs() <= 1.0) {
            return Err(Error::input(format!("observed correlation {c} outside [-1, 1]")));
        }
        let (a, b) = span(i, j)?;
        let mag = if c == 0.0 {
            zero_clamped += 1;
            ZERO_CORR
        } else {
            c.abs()
        };
        rows.push((a, b, mag.ln()));
        if c != 0.0 {
            votes.push((a, b, if c < 0.0 { -1 } else { 1 }));
        }
    }
    for &(i, j, s) in sign_pairs {
        let (a, b) = span(i, j)?;
        votes.push((a, b, s));
    }

    let mut covered = vec![false; m];
    let mut design = DMatrix::<f64>::zeros(rows.len(), m);
    let mut target = DVector::<f64>::zeros(rows.len());
    for (r, &(a, b, y)) in rows.iter().enumerate() {
        for e in a..b {
            design[(r, e)] = 1.0;
            covered[e] = true;
        }
        target[r] = y;
    }
    let beta = if rows.is_empty() || m == 0 {
        DVector::zeros(m)
    } else {
        design
            .svd(true, true)
            .solve(&target, 1e-12)
            .map_err(|e| Error::DegenerateData(format!("path least squares failed: {e}")))?
    };

    let mut node_sign = vec![1i8; n];
    let mut sign_ties = Vec::new();
    for p in 1..n {
        let tally: i32 = votes
            .iter()
            .filter(|v| v.1 == p)
            .map(|&(a, _, s)| (node_sign[a] * s) as i32)
            .sum();
        let mixed = {
            let mut seen = votes.iter().filter(|v| v.1 == p).map(|&(a, _, s)| node_sign[a] * s);
            let first = seen.next();
            first.is_some() && seen.any(|s| Some(s) != first)
        };
        node_sign[p] = match tally.cmp(&0) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => -1,
            std::cmp::Ordering::Equal => {
                if mixed {
                    sign_ties.push(p - 1);
                }
                node_sign[p - 1]
            }
        };
    }

    let uncovered: Vec<usize> = (0..m).filter(|&e| !covered[e]).collect();
    let adj_corr = (0..m)
        .map(|e| {
            let mag = if covered[e] { beta[e].min(0.0).exp() } else { UNCOVERED_R };
            (node_sign[e] * node_sign[e + 1]) as f64 * mag.max(f64::MIN_POSITIVE)
        })
        .collect();
    Ok(PathFit {
        adj_corr,
        uncovered,
        zero_clamped,
        sign_ties,
    })
}

/// Correlation and sign observations pulled out of a labeled query set.
struct PathObservations {
    corr: Vec<(usize, usize, f64)>,
    sign: Vec<(usize, usize, i8)>,
}

impl PathObservations {
    fn collect(qs: &[LabeledQuery]) -> Self {
        let mut corr = Vec::new();
        let mut sign = Vec::new();
        for l in qs {
            match l.query {
                Query::Corr { x, y } => corr.push((x, y, l.outcome.value())),
                Query::Sign { x, y } => sign.push((x, y, l.outcome.value() as i8)),
                _ => {}
            }
        }
        PathObservations { corr, sign }
    }

    fn fit(&self, perm: &[usize]) -> Result<PathFit> {
        fit_path_inner(perm, &self.corr, &self.sign)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::Outcome;

    fn label(model: &CausalModel, qs: Vec<Query>) -> Vec<LabeledQuery> {
        qs.into_iter()
            .map(|q| {
                let o = model.predict(&q).unwrap();
                LabeledQuery::new(q, o).unwrap()
            })
            .collect()
    }

    fn chain_queries() -> Vec<Query> {
        let mut qs = Vec::new();
        for (x, y, z) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
            qs.push(Query::cond_indep(x, y, vec![z]).unwrap());
            qs.push(Query::cond_indep(x, y, vec![]).unwrap());
        }
        qs
    }

    #[test]
    fn error_examples() {
        let chain = CausalModel::Dag(Dag::new(3, [(0, 1), (1, 2)]).unwrap());
        let qs = label(&chain, chain_queries());
        assert_eq!(empirical_error(&chain, &qs).unwrap(), 0.0);
        assert!(matches!(empirical_error(&chain, &[]), Err(Error::UndefinedMean)));
        let mut flipped = qs.clone();
        flipped[0].outcome = Outcome::Binary(1 - flipped[0].outcome.value() as u8);
        assert!((empirical_error(&chain, &flipped).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        let w = KindWeights {
            cond_indep: 0.0,
            ..KindWeights::default()
        };
        assert!(matches!(empirical_error_weighted(&chain, &qs, &w), Err(Error::UndefinedMean)));
    }

    #[test]
    fn exhaustive_recovers_chain_class() {
        let chain = CausalModel::Dag(Dag::new(3, [(0, 1), (1, 2)]).unwrap());
        let qs = label(&chain, chain_queries());
        let fit = fit_exhaustive(ModelClass::Dag, 3, &qs).unwrap();
        assert_eq!(fit.train_error, 0.0);
        assert_eq!(fit.evaluations, 25);
        // first member of the Markov equivalence class in canonical order
        assert_eq!(fit.model.as_dag().unwrap().edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn contradictory_labels() {
        let q = Query::cond_indep(0, 1, vec![]).unwrap();
        let qs = vec![
            LabeledQuery::new(q.clone(), Outcome::Binary(0)).unwrap(),
            LabeledQuery::new(q, Outcome::Binary(1)).unwrap(),
        ];
        let fit = fit_exhaustive(ModelClass::Dag, 2, &qs).unwrap();
        assert_eq!(fit.train_error, 0.5);
    }

    #[test]
    fn path_params_round_trip() {
        let truth = PathModel::new(vec![0, 1, 2, 3], vec![0.5, -0.5, 0.8]).unwrap();
        let mut pairs = Vec::new();
        for i in 0..4 {
            for j in i + 1..4 {
                pairs.push((i, j, crate::predict::predict_corr(&truth, i, j).unwrap().value()));
            }
        }
        let fit = fit_path_params(truth.perm(), &pairs).unwrap();
        for (a, b) in fit.adj_corr.iter().zip(truth.adj_corr()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(fit.warnings().is_empty());
        assert_eq!(fit_path_params(&[0, 1], &[(0, 1, 0.7)]).unwrap().adj_corr, vec![0.7]);
        assert!(fit_path_params(&[0, 1], &[]).is_err());
    }

    #[test]
    fn path_params_edge_cases() {
        let tie = fit_path_params(&[0, 1], &[(0, 1, 0.5), (1, 0, -0.5)]).unwrap();
        assert_eq!(tie.adj_corr, vec![0.5]);
        assert_eq!(tie.sign_ties, vec![0]);
        let partial = fit_path_params(&[0, 1, 2], &[(0, 1, 0.9)]).unwrap();
        assert_eq!(partial.uncovered, vec![1]);
        assert_eq!(partial.adj_corr[1], 0.5);
        let zero = fit_path_params(&[0, 1], &[(0, 1, 0.0)]).unwrap();
        assert_eq!(zero.zero_clamped, 1);
        assert!((zero.adj_corr[0] - 1e-9).abs() < 1e-20);
    }

    #[test]
    fn local_search_basics() {
        let chain = CausalModel::Dag(Dag::new(3, [(0, 1), (1, 2)]).unwrap());
        let qs = label(&chain, chain_queries());
        let settings = LocalSearch {
            budget: 200,
            restarts: 3,
            seed: 4,
            warm_start: false,
        };
        let fit = fit_local(ModelClass::Dag, 3, &qs, &settings).unwrap();
        assert_eq!(fit.train_error, 0.0);
        assert_eq!(fit, fit_local(ModelClass::Dag, 3, &qs, &settings).unwrap());
        assert!(fit_local(ModelClass::Dag, 3, &qs, &LocalSearch { budget: 0, ..settings }).is_err());
        let warm = fit_local(ModelClass::Polytree, 3, &qs, &LocalSearch { warm_start: true, ..settings }).unwrap();
        assert_eq!(warm.train_error, 0.0);
    }

    #[test]
    fn skeleton_of_a_star() {
        let star = CausalModel::Dag(Dag::new(4, [(0, 1), (0, 2), (0, 3)]).unwrap());
        let qs = label(&star, crate::synth::QueryUniverse::new(QueryKind::CondIndep, 4).enumerate().unwrap());
        let start = skeleton_start(ModelClass::Polytree, 4, &qs).unwrap().unwrap();
        assert_eq!(start.as_dag().unwrap().edges(), &[(0, 1), (0, 2), (0, 3)]);
        assert_eq!(skeleton_start(ModelClass::Path, 4, &qs).unwrap(), None);
    }

    #[test]
    fn fit_result_json() {
        let chain = CausalModel::Dag(Dag::new(3, [(0, 1), (1, 2)]).unwrap());
        let qs = label(&chain, chain_queries());
        let fit = fit_exhaustive(ModelClass::Polytree, 3, &qs).unwrap();
        let text = serde_json::to_string(&fit).unwrap();
        assert!(text.contains(r#""class":"polytree""#));
        assert_eq!(serde_json::from_str::<FitResult>(&text).unwrap(), fit);
    }
}
