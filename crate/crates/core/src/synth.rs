//! Ground-truth generators: random models, linear SEMs, samples, slices and queries.
//!
//! Every generator takes an explicit seed and is bit-reproducible.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::{Dag, Polytree, VariableTuple};
use crate::model::{CausalModel, ModelClass, PathModel, PathSignModel};
use crate::query::{Query, QueryKind};

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphParams {
    /// Independent edge probability for random DAGs.
    pub edge_prob: f64,
    /// Magnitude range of adjacent correlations for path models.
    pub corr_range: (f64, f64),
}

impl Default for GraphParams {
    fn default() -> Self {
        GraphParams {
            edge_prob: 0.3,
            corr_range: (0.5, 0.9),
        }
    }
}

impl GraphParams {
    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.edge_prob) {
            return Err(Error::input(format!("edge_prob {} outside [0, 1]", self.edge_prob)));
        }
        let (lo, hi) = self.corr_range;
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return Err(Error::input(format!("corr_range ({lo}, {hi}) must satisfy 0 < lo <= hi <= 1")));
        }
        Ok(())
    }
}

fn random_perm(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

fn random_sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

/// Uniform random labeled tree from a random Prüfer sequence.
pub fn random_tree_edges(n: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    if n < 2 {
        return Vec::new();
    }
    let seq: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &s in &seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &s in &seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
        edges.push((leaf, s));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// A random member of `class` on `n` nodes.
///
/// * `dag`: random order, each forward pair an edge with probability `edge_prob`.
/// * `polytree`: uniform random spanning tree, each edge oriented by a fair coin.
/// * `path`: random order, adjacent correlations with magnitude uniform in
///   `corr_range` and random sign. `path_sign` keeps only the signs.
/// * `direction`: the chain along a random order.
pub fn sample_graph(class: ModelClass, n: usize, seed: u64, params: &GraphParams) -> Result<CausalModel> {
    params.validate()?;
    if n == 0 {
        return Err(Error::input("n must be at least 1"));
    }
    let mut rng = rng_from(seed);
    Ok(match class {
        ModelClass::Dag => {
            let order = random_perm(n, &mut rng);
            let mut edges = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    if rng.random_bool(params.edge_prob) {
                        edges.push((order[a], order[b]));
                    }
                }
            }
            CausalModel::Dag(Dag::new(n, edges)?)
        }
        ModelClass::Polytree => {
            let edges = random_tree_edges(n, &mut rng)
                .into_iter()
                .map(|(a, b)| if rng.random_bool(0.5) { (a, b) } else { (b, a) })
                .collect::<Vec<_>>();
            CausalModel::Polytree(Polytree::new(Dag::new(n, edges)?)?)
        }
        ModelClass::Path => {
            let perm = random_perm(n, &mut rng);
            let (lo, hi) = params.corr_range;
            let r = (1..n)
                .map(|_| random_sign(&mut rng) * if lo == hi { lo } else { rng.random_range(lo..=hi) })
                .collect();
            CausalModel::Path(PathModel::new(perm, r)?)
        }
        ModelClass::PathSign => {
            let perm = random_perm(n, &mut rng);
            let s = (1..n).map(|_| random_sign(&mut rng) as i8).collect();
            CausalModel::PathSign(PathSignModel::new(perm, s)?)
        }
        ModelClass::Direction => CausalModel::Dag(Dag::chain(&random_perm(n, &mut rng))?),
    })
}

/// Distribution of an additive noise term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    Gaussian { var: f64 },
    Uniform { half_width: f64 },
}

impl Noise {
    pub fn variance(self) -> f64 {
        match self {
            Noise::Gaussian { var } => var,
            Noise::Uniform { half_width } => half_width * half_width / 3.0,
        }
    }

    /// Gaussian or uniform noise with the given variance.
    pub fn with_variance(kind: NoiseKind, var: f64) -> Noise {
        match kind {
            NoiseKind::Gaussian => Noise::Gaussian { var },
            NoiseKind::Uniform => Noise::Uniform {
                half_width: (3.0 * var).sqrt(),
            },
        }
    }

    fn draw(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Noise::Gaussian { var } => {
                let z: f64 = StandardNormal.sample(rng);
                var.sqrt() * z
            }
            Noise::Uniform { half_width } => rng.random_range(-half_width..=half_width),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian,
    Uniform,
}

#[derive(Serialize, Deserialize)]
struct NoiseJson {
    kind: NoiseKind,
    param: f64,
}

impl Serialize for Noise {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let j = match *self {
            Noise::Gaussian { var } => NoiseJson {
                kind: NoiseKind::Gaussian,
                param: var,
            },
            Noise::Uniform { half_width } => NoiseJson {
                kind: NoiseKind::Uniform,
                param: half_width,
            },
        };
        j.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Noise {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = NoiseJson::deserialize(d)?;
        Ok(match j.kind {
            NoiseKind::Gaussian => Noise::Gaussian { var: j.param },
            NoiseKind::Uniform => Noise::Uniform { half_width: j.param },
        })
    }
}

/// Linear structural equation model `X_c = Σ_p a_pc X_p + N_c` over a DAG.
///
/// JSON: `{"graph": <graph>, "coeffs": [[p, c, a], ...], "noise": [{"kind": "gaussian", "param": 1.0}, ...]}`;
/// the noise parameter is the variance for gaussian and the half-width for uniform noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SemJson", into = "SemJson")]
pub struct LinearSem {
    graph: Dag,
    coeffs: Vec<(usize, usize, f64)>,
    noise: Vec<Noise>,
}

#[derive(Serialize, Deserialize)]
struct SemJson {
    graph: Dag,
    coeffs: Vec<(usize, usize, f64)>,
    noise: Vec<Noise>,
}

impl TryFrom<SemJson> for LinearSem {
    type Error = Error;
    fn try_from(j: SemJson) -> Result<Self> {
        LinearSem::new(j.graph, j.coeffs, j.noise)
    }
}

impl From<LinearSem> for SemJson {
    fn from(s: LinearSem) -> Self {
        SemJson {
            graph: s.graph,
            coeffs: s.coeffs,
            noise: s.noise,
        }
    }
}

impl LinearSem {
    pub fn new(graph: Dag, mut coeffs: Vec<(usize, usize, f64)>, noise: Vec<Noise>) -> Result<Self> {
        coeffs.sort_by_key(|&(p, c, _)| (p, c));
        let coeff_edges: Vec<(usize, usize)> = coeffs.iter().map(|&(p, c, _)| (p, c)).collect();
        if coeff_edges != graph.edges() {
            return Err(Error::input("coefficients must be given for exactly the graph's edges"));
        }
        if coeffs.iter().any(|&(_, _, a)| a == 0.0 || !a.is_finite()) {
            return Err(Error::input("edge coefficients must be finite and non-zero"));
        }
        if noise.len() != graph.n() {
            return Err(Error::input(format!("{} noise terms for {} nodes", noise.len(), graph.n())));
        }
        if noise.iter().any(|nz| !(nz.variance() > 0.0 && nz.variance().is_finite())) {
            return Err(Error::input("noise variances must be positive"));
        }
        Ok(LinearSem { graph, coeffs, noise })
    }

    /// Random coefficients with magnitude uniform in `coeff_range` and random
    /// sign; unit-variance noise of the given kind.
    pub fn random(graph: Dag, coeff_range: (f64, f64), noise: NoiseKind, seed: u64) -> Result<Self> {
        let (lo, hi) = coeff_range;
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::input(format!("coefficient range ({lo}, {hi}) must satisfy 0 < lo <= hi")));
        }
        let mut rng = rng_from(seed);
        let coeffs = graph
            .edges()
            .iter()
            .map(|&(p, c)| {
                let mag = if lo == hi { lo } else { rng.random_range(lo..=hi) };
                (p, c, random_sign(&mut rng) * mag)
            })
            .collect();
        let n = graph.n();
        LinearSem::new(graph, coeffs, vec![Noise::with_variance(noise, 1.0); n])
    }

    /// Standardized SEM realizing a path model: every variable has unit
    /// variance and adjacent correlations equal the model's. Edges point away
    /// from the node at position `root`, so the path has no collider.
    pub fn for_path(model: &PathModel, root: usize, noise: NoiseKind) -> Result<Self> {
        let n = model.n();
        if root >= n {
            return Err(Error::input(format!("root position {root} outside 0..{n}")));
        }
        if model.adj_corr().iter().any(|r| r.abs() >= 1.0) {
            return Err(Error::input("a path SEM needs |r| < 1 on every edge"));
        }
        let perm = model.perm();
        let mut noise = vec![Noise::with_variance(noise, 1.0); n];
        let mut coeffs = Vec::new();
        let mut edges = Vec::new();
        for (e, &r) in model.adj_corr().iter().enumerate() {
            let (parent, child) = if e >= root { (perm[e], perm[e + 1]) } else { (perm[e + 1], perm[e]) };
            edges.push((parent, child));
            coeffs.push((parent, child, r));
            noise[child] = Noise::with_variance(
                match noise[child] {
                    Noise::Gaussian { .. } => NoiseKind::Gaussian,
                    Noise::Uniform { .. } => NoiseKind::Uniform,
                },
                1.0 - r * r,
            );
        }
        LinearSem::new(Dag::new(n, edges)?, coeffs, noise)
    }

    pub fn graph(&self) -> &Dag {
        &self.graph
    }

    pub fn coeffs(&self) -> &[(usize, usize, f64)] {
        &self.coeffs
    }

    pub fn noise(&self) -> &[Noise] {
        &self.noise
    }

    /// Population covariance `(I − A)⁻¹ Σ_N (I − A)⁻ᵀ`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.graph.n();
        let mut i_minus_a = DMatrix::<f64>::identity(n, n);
        for &(p, c, a) in &self.coeffs {
            i_minus_a[(c, p)] -= a;
        }
        let b = i_minus_a.try_inverse().expect("I - A is unit triangular up to permutation");
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, self.noise.iter().map(|z| z.variance())));
        &b * d * b.transpose()
    }

    /// `l` i.i.d. rows, generated in topological order.
    pub fn sample(&self, l: usize, seed: u64) -> Result<Dataset> {
        if l == 0 {
            return Err(Error::input("sample size must be at least 1"));
        }
        let n = self.graph.n();
        let order = self.graph.topological_order();
        let mut parents: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(p, c, a) in &self.coeffs {
            parents[c].push((p, a));
        }
        let mut rng = rng_from(seed);
        let mut columns = vec![vec![0.0; l]; n];
        let mut row = vec![0.0; n];
        for r in 0..l {
            for &v in &order {
                let mut x = self.noise[v].draw(&mut rng);
                for &(p, a) in &parents[v] {
                    x += a * row[p];
                }
                row[v] = x;
            }
            for v in 0..n {
                columns[v][r] = row[v];
            }
        }
        Dataset::new(VariableTuple::new((0..n).collect())?, columns)
    }
}

/// A SEM that generates data for `model`.
///
/// Graph models get random coefficients from `coeff_range`. Path models are
/// realized as standardized path SEMs rooted at a random position; sign
/// models use adjacent correlations of magnitude `sign_magnitude`.
pub fn sem_for_model(
    model: &CausalModel,
    coeff_range: (f64, f64),
    sign_magnitude: f64,
    noise: NoiseKind,
    seed: u64,
) -> Result<LinearSem> {
    match model {
        CausalModel::Path(p) => {
            let root = rng_from(seed).random_range(0..p.n());
            LinearSem::for_path(p, root, noise)
        }
        CausalModel::PathSign(p) => {
            let signed = p.adj_sign().iter().map(|&s| s as f64 * sign_magnitude).collect();
            LinearSem::for_path(&PathModel::new(p.perm().to_vec(), signed)?, 0, noise)
        }
        CausalModel::Dag(d) => LinearSem::random(d.clone(), coeff_range, noise, seed),
        CausalModel::Polytree(p) => LinearSem::random(p.dag().clone(), coeff_range, noise, seed),
    }
}

/// Population covariance of a linear SEM.
pub fn sem_covariance(sem: &LinearSem) -> DMatrix<f64> {
    sem.covariance()
}

/// `l` i.i.d. samples from a linear SEM.
pub fn sample_data(sem: &LinearSem, l: usize, seed: u64) -> Result<Dataset> {
    sem.sample(l, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowMode {
    /// Every slice sees every row.
    #[default]
    Shared,
    /// Rows are split at random so no two slices share an observation.
    Disjoint,
}

/// One dataset per tuple, each projecting `d` onto the tuple's variables.
///
/// In disjoint mode the rows are shuffled and split into `tuples.len()`
/// equal blocks; leftover rows are dropped.
pub fn slice_overlapping(d: &Dataset, tuples: &[VariableTuple], mode: RowMode, seed: u64) -> Result<Vec<Dataset>> {
    match mode {
        RowMode::Shared => tuples.iter().map(|t| d.project(t.as_slice())).collect(),
        RowMode::Disjoint => {
            let per = if tuples.is_empty() { 0 } else { d.l() / tuples.len() };
            if per == 0 && !tuples.is_empty() {
                return Err(Error::input(format!(
                    "{} rows cannot be split into {} non-empty disjoint slices",
                    d.l(),
                    tuples.len()
                )));
            }
            let mut rows: Vec<usize> = (0..d.l()).collect();
            rows.shuffle(&mut rng_from(seed));
            tuples
                .iter()
                .enumerate()
                .map(|(k, t)| d.select_rows(&rows[k * per..(k + 1) * per])?.project(t.as_slice()))
                .collect()
        }
    }
}

/// The set of queries of one kind that can be drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryUniverse {
    pub kind: QueryKind,
    pub n: usize,
    /// Smallest and largest conditioning-set size for `cond_indep` queries.
    #[serde(default = "default_cond_sizes")]
    pub cond_sizes: (usize, usize),
}

fn default_cond_sizes() -> (usize, usize) {
    (1, 1)
}

impl QueryUniverse {
    /// Conditioning on exactly one variable for `cond_indep`.
    pub fn new(kind: QueryKind, n: usize) -> Self {
        QueryUniverse {
            kind,
            n,
            cond_sizes: default_cond_sizes(),
        }
    }

    pub fn with_cond_sizes(mut self, min: usize, max: usize) -> Self {
        self.cond_sizes = (min, max);
        self
    }

    /// Every query in canonical form and canonical order.
    ///
    /// `cond_indep`: unordered pairs times conditioning sets (one conditioner gives
    /// `n(n−1)(n−2)/2` queries); `sign`, `corr`: unordered pairs; `direction`,
    /// `anm`: ordered pairs.
    pub fn enumerate(&self) -> Result<Vec<Query>> {
        let n = self.n;
        let mut out = Vec::new();
        match self.kind {
            QueryKind::CondIndep => {
                let (lo, hi) = self.cond_sizes;
                if lo > hi {
                    return Err(Error::input("cond_sizes must satisfy min <= max"));
                }
                for x in 0..n {
                    for y in x + 1..n {
                        let others: Vec<usize> = (0..n).filter(|&v| v != x && v != y).collect();
                        for size in lo..=hi.min(others.len()) {
                            for cond in combinations(&others, size) {
                                out.push(Query::CondIndep { x, y, cond });
                            }
                        }
                    }
                }
            }
            QueryKind::Sign | QueryKind::Corr => {
                for x in 0..n {
                    for y in x + 1..n {
                        out.push(if self.kind == QueryKind::Sign { Query::Sign { x, y } } else { Query::Corr { x, y } });
                    }
                }
            }
            QueryKind::Direction | QueryKind::Anm => {
                for a in 0..n {
                    for b in 0..n {
                        if a != b {
                            out.push(if self.kind == QueryKind::Direction {
                                Query::Direction { from: a, to: b }
                            } else {
                                Query::Anm { tuple: vec![a, b] }
                            });
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// All `k`-subsets of `items`, lexicographic.
pub fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(items, k, 0, &mut Vec::new(), &mut out);
    out
}

/// `count` distinct queries drawn uniformly from the universe minus `exclusions`.
pub fn sample_queries(universe: &QueryUniverse, count: usize, seed: u64, exclusions: &[Query]) -> Result<Vec<Query>> {
    let excluded: std::collections::HashSet<Query> = exclusions.iter().map(Query::canonical).collect();
    let mut pool: Vec<Query> = universe
        .enumerate()?
        .into_iter()
        .filter(|q| !excluded.contains(q))
        .collect();
    if count > pool.len() {
        return Err(Error::input(format!(
            "cannot draw {count} distinct queries from a universe of {}",
            pool.len()
        )));
    }
    let mut rng = rng_from(seed);
    let (chosen, _) = pool.partial_shuffle(&mut rng, count);
    Ok(chosen.to_vec())
}

/// `count` queries drawn independently and uniformly, with replacement.
pub fn sample_queries_iid(universe: &QueryUniverse, count: usize, seed: u64) -> Result<Vec<Query>> {
    let pool = universe.enumerate()?;
    if pool.is_empty() && count > 0 {
        return Err(Error::input("the query universe is empty"));
    }
    let mut rng = rng_from(seed);
    Ok((0..count).map(|_| pool[rng.random_range(0..pool.len())].clone()).collect())
}

/// Variables a query needs observed together.
pub fn query_tuple(q: &Query) -> VariableTuple {
    VariableTuple::new(q.variables()).expect("validated queries have distinct variables")
}
