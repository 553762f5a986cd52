//! Causal model classes and their exhaustive enumeration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{enumerate_dags, enumerate_polytrees, permutations, Dag, Polytree, DAG_CAP, POLYTREE_CAP};

/// Largest `n` for enumerating the permutation-based classes.
pub const PATH_CAP: usize = 8;

fn check_perm(perm: &[usize]) -> Result<Vec<usize>> {
    let n = perm.len();
    let mut position = vec![usize::MAX; n];
    for (pos, &v) in perm.iter().enumerate() {
        if v >= n || position[v] != usize::MAX {
            return Err(Error::input(format!("{perm:?} is not a permutation of 0..{n}")));
        }
        position[v] = pos;
    }
    Ok(position)
}

/// A collider-free path `perm[0] - perm[1] - ... - perm[n-1]` with the
/// correlation of each adjacent pair.
///
/// Edge directions do not matter for the correlations as long as no node
/// receives two arrowheads, so they are not stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PathJson", into = "PathJson")]
pub struct PathModel {
    perm: Vec<usize>,
    adj_corr: Vec<f64>,
    position: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct PathJson {
    perm: Vec<usize>,
    adj_corr: Vec<f64>,
}

impl PathModel {
    pub fn new(perm: Vec<usize>, adj_corr: Vec<f64>) -> Result<Self> {
        let position = check_perm(&perm)?;
        if perm.is_empty() {
            return Err(Error::input("path model needs at least one node"));
        }
        if adj_corr.len() != perm.len() - 1 {
            return Err(Error::input(format!(
                "{} adjacent correlations for {} nodes",
                adj_corr.len(),
                perm.len()
            )));
        }
        if let Some(r) = adj_corr.iter().find(|r| !(r.abs() > 0.0 && r.abs() <= 1.0)) {
            return Err(Error::input(format!("adjacent correlation {r} must satisfy 0 < |r| <= 1")));
        }
        Ok(PathModel {
            perm,
            adj_corr,
            position,
        })
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn adj_corr(&self) -> &[f64] {
        &self.adj_corr
    }

    /// Position of node `v` along the path.
    pub fn position(&self, v: usize) -> usize {
        self.position[v]
    }

    /// Per-edge log absolute correlations, `log |r_e|` (all ≤ 0).
    pub fn log_abs_increments(&self) -> Vec<f64> {
        self.adj_corr.iter().map(|r| r.abs().ln()).collect()
    }

    /// Cumulative log absolute correlation from the path start to each position.
    pub fn cumulative_log_abs(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = vec![0.0];
        for b in self.log_abs_increments() {
            acc += b;
            out.push(acc);
        }
        out
    }

    /// Parity of negative edges from the path start to each position, as ±1.
    pub fn cumulative_signs(&self) -> Vec<i8> {
        let mut s = 1i8;
        let mut out = vec![1];
        for r in &self.adj_corr {
            if *r < 0.0 {
                s = -s;
            }
            out.push(s);
        }
        out
    }

    /// Signs of the adjacent correlations.
    pub fn sign_model(&self) -> PathSignModel {
        PathSignModel {
            perm: self.perm.clone(),
            adj_sign: self.adj_corr.iter().map(|&r| if r < 0.0 { -1 } else { 1 }).collect(),
            position: self.position.clone(),
        }
    }

    /// The path oriented from `perm[0]` to `perm[n-1]`; every orientation
    /// without colliders implies the same independences.
    pub fn to_dag(&self) -> Dag {
        Dag::chain(&self.perm).expect("a permutation chain is acyclic")
    }
}

impl TryFrom<PathJson> for PathModel {
    type Error = Error;
    fn try_from(p: PathJson) -> Result<Self> {
        PathModel::new(p.perm, p.adj_corr)
    }
}

impl From<PathModel> for PathJson {
    fn from(p: PathModel) -> Self {
        PathJson {
            perm: p.perm,
            adj_corr: p.adj_corr,
        }
    }
}

/// A collider-free path carrying only the signs of adjacent correlations.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "PathSignJson", into = "PathSignJson")]
pub struct PathSignModel {
    perm: Vec<usize>,
    adj_sign: Vec<i8>,
    position: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct PathSignJson {
    perm: Vec<usize>,
    adj_sign: Vec<i8>,
}

impl PathSignModel {
    pub fn new(perm: Vec<usize>, adj_sign: Vec<i8>) -> Result<Self> {
        let position = check_perm(&perm)?;
        if perm.is_empty() || adj_sign.len() != perm.len() - 1 {
            return Err(Error::input("path sign model needs n >= 1 nodes and n - 1 signs"));
        }
        if adj_sign.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::input("adjacent signs must be +1 or -1"));
        }
        Ok(PathSignModel {
            perm,
            adj_sign,
            position,
        })
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn adj_sign(&self) -> &[i8] {
        &self.adj_sign
    }

    pub fn position(&self, v: usize) -> usize {
        self.position[v]
    }
}

impl TryFrom<PathSignJson> for PathSignModel {
    type Error = Error;
    fn try_from(p: PathSignJson) -> Result<Self> {
        PathSignModel::new(p.perm, p.adj_sign)
    }
}

impl From<PathSignModel> for PathSignJson {
    fn from(p: PathSignModel) -> Self {
        PathSignJson {
            perm: p.perm,
            adj_sign: p.adj_sign,
        }
    }
}

/// Any model that induces predictions for queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CausalModel {
    Dag(Dag),
    Polytree(Polytree),
    Path(PathModel),
    PathSign(PathSignModel),
}

impl CausalModel {
    pub fn n(&self) -> usize {
        match self {
            CausalModel::Dag(d) => d.n(),
            CausalModel::Polytree(p) => p.dag().n(),
            CausalModel::Path(p) => p.n(),
            CausalModel::PathSign(p) => p.n(),
        }
    }

    /// The underlying graph for graph-valued models.
    pub fn as_dag(&self) -> Option<&Dag> {
        match self {
            CausalModel::Dag(d) => Some(d),
            CausalModel::Polytree(p) => Some(p.dag()),
            _ => None,
        }
    }

    /// Reads a model of a known class from its JSON value.
    pub fn from_json(class: ModelClass, value: serde_json::Value) -> Result<Self> {
        let parse_err = |e: serde_json::Error| Error::input(format!("bad {} model: {e}", class.name()));
        Ok(match class {
            ModelClass::Dag | ModelClass::Direction => CausalModel::Dag(serde_json::from_value(value).map_err(parse_err)?),
            ModelClass::Polytree => CausalModel::Polytree(serde_json::from_value(value).map_err(parse_err)?),
            ModelClass::Path => CausalModel::Path(serde_json::from_value(value).map_err(parse_err)?),
            ModelClass::PathSign => CausalModel::PathSign(serde_json::from_value(value).map_err(parse_err)?),
        })
    }

    /// Total order used to break ties between equally good models.
    pub fn canonical_cmp(&self, other: &CausalModel) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        let key = |m: &CausalModel| -> (u8, Vec<(usize, usize)>, Vec<usize>) {
            match m {
                CausalModel::Dag(d) => (0, d.edges().to_vec(), vec![]),
                CausalModel::Polytree(p) => (1, p.dag().edges().to_vec(), vec![]),
                CausalModel::Path(p) => (2, vec![], p.perm().to_vec()),
                CausalModel::PathSign(p) => (3, vec![], p.perm().to_vec()),
            }
        };
        let (a, b) = (key(self), key(other));
        a.cmp(&b).then_with(|| match (self, other) {
            (CausalModel::Path(x), CausalModel::Path(y)) => {
                x.adj_corr().partial_cmp(y.adj_corr()).unwrap_or(Ordering::Equal)
            }
            // +1 sorts before -1, matching the enumeration order
            (CausalModel::PathSign(x), CausalModel::PathSign(y)) => {
                y.adj_sign().cmp(x.adj_sign())
            }
            _ => Ordering::Equal,
        })
    }
}

/// A model class that can be searched and, at small `n`, enumerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelClass {
    Dag,
    Polytree,
    /// Collider-free paths with adjacent correlations.
    Path,
    /// Collider-free paths with adjacent correlation signs.
    PathSign,
    /// DAGs with a directed path between every pair; represented by the
    /// Hamiltonian chain of their unique topological order.
    Direction,
}

impl ModelClass {
    pub fn name(self) -> &'static str {
        match self {
            ModelClass::Dag => "dag",
            ModelClass::Polytree => "polytree",
            ModelClass::Path => "path",
            ModelClass::PathSign => "path_sign",
            ModelClass::Direction => "direction",
        }
    }

    pub fn enumeration_cap(self) -> usize {
        match self {
            ModelClass::Dag => DAG_CAP,
            ModelClass::Polytree => POLYTREE_CAP,
            ModelClass::Path | ModelClass::PathSign | ModelClass::Direction => PATH_CAP,
        }
    }

    /// Whether `model` is a member of this class.
    pub fn contains(self, model: &CausalModel) -> bool {
        match (self, model) {
            (ModelClass::Dag, CausalModel::Dag(_)) => true,
            (ModelClass::Polytree, CausalModel::Polytree(_)) => true,
            (ModelClass::Polytree, CausalModel::Dag(d)) => d.is_polytree(),
            (ModelClass::Path, CausalModel::Path(_)) => true,
            (ModelClass::PathSign, CausalModel::PathSign(_)) => true,
            (ModelClass::Direction, CausalModel::Dag(d)) => {
                let order = d.topological_order();
                order.windows(2).all(|w| d.has_edge(w[0], w[1]))
            }
            _ => false,
        }
    }
}

impl std::str::FromStr for ModelClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "dag" => ModelClass::Dag,
            "polytree" => ModelClass::Polytree,
            "path" => ModelClass::Path,
            "path_sign" => ModelClass::PathSign,
            "direction" => ModelClass::Direction,
            other => return Err(Error::input(format!("unknown model class {other:?}"))),
        })
    }
}

/// Path orderings up to reversal: permutations with `perm[0] < perm[n-1]`.
fn path_perms(n: usize) -> impl Iterator<Item = Vec<usize>> {
    permutations(n).filter(|p| p.len() < 2 || p[0] < p[p.len() - 1])
}

/// Every model of `class` on `n` nodes, each exactly once, in canonical order.
///
/// * `dag`, `polytree`: lexicographic on the sorted edge list.
/// * `path`: lexicographic on the permutation, one per reversal pair; the
///   adjacent correlations are placeholders set to 1 since the class is
///   continuous in them.
/// * `path_sign`: permutation first, then the sign vector read as a binary
///   number with `+1 -> 0`, `-1 -> 1`, first edge most significant.
/// * `direction`: one chain per permutation, lexicographic.
pub fn enumerate_models(class: ModelClass, n: usize) -> Result<Box<dyn Iterator<Item = CausalModel>>> {
    let cap = class.enumeration_cap();
    if n > cap {
        return Err(Error::capacity(format!("{} enumeration", class.name()), cap, n));
    }
    if n == 0 {
        return Err(Error::input("model classes need at least one node"));
    }
    Ok(match class {
        ModelClass::Dag => Box::new(enumerate_dags(n)?.map(CausalModel::Dag)),
        ModelClass::Polytree => Box::new(enumerate_polytrees(n)?.map(|d| CausalModel::Polytree(Polytree::new(d).unwrap()))),
        ModelClass::Path => Box::new(path_perms(n).map(move |p| {
            CausalModel::Path(PathModel::new(p, vec![1.0; n - 1]).unwrap())
        })),
        ModelClass::PathSign => Box::new(path_perms(n).flat_map(move |p| {
            let edges = n - 1;
            (0u64..1 << edges).map(move |code| {
                let signs = (0..edges)
                    .map(|e| if code >> (edges - 1 - e) & 1 == 1 { -1 } else { 1 })
                    .collect();
                CausalModel::PathSign(PathSignModel::new(p.clone(), signs).unwrap())
            })
        })),
        ModelClass::Direction => Box::new(permutations(n).map(|p| CausalModel::Dag(Dag::chain(&p).unwrap()))),
    })
}
