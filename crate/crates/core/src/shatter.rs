//! Empirical VC dimension: shattering checks and searches over small classes.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{enumerate_models, CausalModel, ModelClass, PathModel, PathSignModel};
use crate::query::{Outcome, Query, QueryKind};
use crate::synth::{combinations, rng_from};

/// Models whose labelings span the class's binary behaviour.
///
/// Path models are enumerated with placeholder magnitudes, so their sign
/// patterns are produced from the sign class with magnitude 0.5.
fn realizing_models(class: ModelClass, n: usize) -> Result<Vec<CausalModel>> {
    if class == ModelClass::Path {
        return enumerate_models(ModelClass::PathSign, n)?
            .map(|m| match m {
                CausalModel::PathSign(p) => Ok(CausalModel::Path(signed_path(&p)?)),
                _ => unreachable!(),
            })
            .collect();
    }
    Ok(enumerate_models(class, n)?.collect())
}

fn signed_path(p: &PathSignModel) -> Result<PathModel> {
    PathModel::new(p.perm().to_vec(), p.adj_sign().iter().map(|&s| 0.5 * s as f64).collect())
}

fn label_bit(o: Outcome) -> bool {
    match o {
        Outcome::Binary(b) => b == 1,
        Outcome::Sign(s) => s < 0,
        Outcome::Real(_) => unreachable!("checked by caller"),
    }
}

/// One bit per model: the query's label under each model, `None` where the
/// model cannot answer it.
struct LabelTable {
    models: usize,
    columns: Vec<Vec<Option<bool>>>,
}

impl LabelTable {
    fn new(models: &[CausalModel], queries: &[Query]) -> Result<Self> {
        for q in queries {
            if !q.kind().is_binary() {
                return Err(Error::input(format!("shattering needs binary queries, got {}", q.kind().name())));
            }
        }
        let compiled: Vec<_> = models.iter().map(|m| m.compile()).collect();
        let columns = queries
            .iter()
            .map(|q| {
                compiled
                    .iter()
                    .map(|c| match c.predict(q) {
                        Ok(o) => Ok(Some(label_bit(o))),
                        Err(Error::ModelOutsideClass(_)) => Ok(None),
                        Err(e) => Err(e),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok(LabelTable {
            models: models.len(),
            columns,
        })
    }

    /// Models that answer every query in `cols`.
    fn usable(&self, cols: &[usize]) -> Vec<u32> {
        (0..self.models as u32)
            .filter(|&m| cols.iter().all(|&c| self.columns[c][m as usize].is_some()))
            .collect()
    }
}

/// Whether every one of the `2^m` labelings of `queries` is realized by some
/// model in the class.
pub fn shatters(class: ModelClass, n: usize, queries: &[Query]) -> Result<bool> {
    queries.iter().try_for_each(|q| q.check_within(n))?;
    let models = realizing_models(class, n)?;
    let table = LabelTable::new(&models, queries)?;
    if queries.is_empty() {
        return Ok(true);
    }
    if queries.len() >= 64 || (1u128 << queries.len()) > models.len() as u128 {
        return Ok(false);
    }
    let cols: Vec<usize> = (0..queries.len()).collect();
    let seen: HashSet<u64> = table
        .usable(&cols)
        .into_iter()
        .map(|m| {
            cols.iter()
                .fold(0u64, |acc, &c| acc << 1 | table.columns[c][m as usize].unwrap() as u64)
        })
        .collect();
    Ok(seen.len() == 1usize << queries.len())
}

/// Binary queries a class is probed with: conditional independences for
/// graph classes (every conditioning set), pair signs for path classes,
/// unordered pairs for the direction class.
pub fn probe_universe(class: ModelClass, n: usize) -> Vec<Query> {
    let pairs = || (0..n).flat_map(move |x| (x + 1..n).map(move |y| (x, y)));
    match class {
        ModelClass::Dag | ModelClass::Polytree => {
            let mut out = Vec::new();
            for (x, y) in pairs() {
                let others: Vec<usize> = (0..n).filter(|&v| v != x && v != y).collect();
                for size in 0..=others.len() {
                    for cond in combinations(&others, size) {
                        out.push(Query::CondIndep { x, y, cond });
                    }
                }
            }
            out
        }
        ModelClass::Path | ModelClass::PathSign => pairs().map(|(x, y)| Query::Sign { x, y }).collect(),
        ModelClass::Direction => pairs().map(|(from, to)| Query::Direction { from, to }).collect(),
    }
}

/// A shattered query set and how it was found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShatterReport {
    pub class: ModelClass,
    pub n: usize,
    pub size: usize,
    pub queries: Vec<Query>,
    /// True when the search covered every subset of the probe universe.
    pub exhaustive: bool,
    pub nodes: u64,
}

/// Probe queries reduced to distinct non-constant label columns (up to complement).
struct Search {
    table: LabelTable,
    queries: Vec<Query>,
}

impl Search {
    fn new(class: ModelClass, n: usize) -> Result<Self> {
        let models = realizing_models(class, n)?;
        let universe = probe_universe(class, n);
        let full = LabelTable::new(&models, &universe)?;
        let mut seen = HashSet::new();
        let mut columns = Vec::new();
        let mut queries = Vec::new();
        for (q, col) in universe.into_iter().zip(full.columns) {
            let first = col.iter().flatten().next().copied();
            let norm: Vec<Option<bool>> = col.iter().map(|b| b.map(|b| Some(b) != first)).collect();
            let constant = col.iter().flatten().all(|&b| Some(b) == first);
            if !constant && seen.insert(norm) {
                columns.push(col);
                queries.push(q);
            }
        }
        Ok(Search {
            table: LabelTable {
                models: full.models,
                columns,
            },
            queries,
        })
    }

    /// Splits every group by column `c`; `None` unless each group splits in two.
    fn split(&self, groups: &[Vec<u32>], c: usize) -> Option<Vec<Vec<u32>>> {
        let col = &self.table.columns[c];
        let mut out = Vec::with_capacity(groups.len() * 2);
        for g in groups {
            let (mut zero, mut one) = (Vec::new(), Vec::new());
            for &m in g {
                match col[m as usize] {
                    Some(false) => zero.push(m),
                    Some(true) => one.push(m),
                    None => {}
                }
            }
            if zero.is_empty() || one.is_empty() {
                return None;
            }
            out.push(zero);
            out.push(one);
        }
        Some(out)
    }

    fn all_models(&self) -> Vec<Vec<u32>> {
        vec![(0..self.table.models as u32).collect()]
    }
}

/// Largest shattered subset of the probe universe, by depth-first search.
///
/// `node_budget` caps the number of search nodes; the report says whether
/// the search finished.
pub fn max_shattered(class: ModelClass, n: usize, node_budget: u64) -> Result<ShatterReport> {
    let s = Search::new(class, n)?;
    let cap = (s.table.models as f64).log2().floor() as usize;
    let mut best: Vec<usize> = Vec::new();
    let mut nodes = 0u64;
    let mut complete = true;

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        s: &Search,
        groups: &[Vec<u32>],
        chosen: &mut Vec<usize>,
        start: usize,
        cap: usize,
        best: &mut Vec<usize>,
        nodes: &mut u64,
        budget: u64,
        complete: &mut bool,
    ) {
        if chosen.len() > best.len() {
            *best = chosen.clone();
        }
        if best.len() >= cap {
            return;
        }
        for c in start..s.queries.len() {
            if chosen.len() + (s.queries.len() - c) <= best.len() {
                return;
            }
            if *nodes >= budget {
                *complete = false;
                return;
            }
            *nodes += 1;
            if let Some(next) = s.split(groups, c) {
                chosen.push(c);
                dfs(s, &next, chosen, c + 1, cap, best, nodes, budget, complete);
                chosen.pop();
                if best.len() >= cap {
                    return;
                }
            }
        }
    }

    dfs(&s, &s.all_models(), &mut Vec::new(), 0, cap, &mut best, &mut nodes, node_budget, &mut complete);
    Ok(ShatterReport {
        class,
        n,
        size: best.len(),
        queries: best.iter().map(|&c| s.queries[c].clone()).collect(),
        exhaustive: complete,
        nodes,
    })
}

/// Lower bound on the VC dimension: the largest shattered set found by
/// `search_budget` rounds of greedy growth over random orderings of the
/// probe universe.
pub fn estimate_vc(class: ModelClass, n: usize, search_budget: usize, seed: u64) -> Result<usize> {
    Ok(estimate_vc_report(class, n, search_budget, seed)?.size)
}

pub fn estimate_vc_report(class: ModelClass, n: usize, search_budget: usize, seed: u64) -> Result<ShatterReport> {
    let s = Search::new(class, n)?;
    let mut rng = rng_from(seed);
    let mut order: Vec<usize> = (0..s.queries.len()).collect();
    let mut best: Vec<usize> = Vec::new();
    let mut nodes = 0;
    for _ in 0..search_budget.max(1) {
        order.shuffle(&mut rng);
        let mut groups = s.all_models();
        let mut chosen = Vec::new();
        for &c in &order {
            nodes += 1;
            if let Some(next) = s.split(&groups, c) {
                groups = next;
                chosen.push(c);
            }
        }
        if chosen.len() > best.len() {
            best = chosen;
        }
    }
    best.sort_unstable();
    Ok(ShatterReport {
        class,
        n,
        size: best.len(),
        queries: best.iter().map(|&c| s.queries[c].clone()).collect(),
        exhaustive: false,
        nodes,
    })
}

/// Kinds a class can be probed with.
pub fn probe_kind(class: ModelClass) -> QueryKind {
    match class {
        ModelClass::Dag | ModelClass::Polytree => QueryKind::CondIndep,
        ModelClass::Path | ModelClass::PathSign => QueryKind::Sign,
        ModelClass::Direction => QueryKind::Direction,
    }
}
