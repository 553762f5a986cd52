//! Directed acyclic graphs over global variable indices `0..n`.
//!
//! Node sets are `u64` bitmasks, so graphs are limited to [`MAX_NODES`] nodes.
//! That is far beyond anything the enumerators or the searches can handle.

mod dsep;
mod enumerate;

pub use dsep::{d_separated, DagIndex};
pub use enumerate::{enumerate_dags, enumerate_polytrees, permutations, DagEnumerator, DAG_CAP, POLYTREE_CAP};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_NODES: usize = 64;

/// Set of node indices stored as a bitmask.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeSet(pub u64);

impl NodeSet {
    pub const EMPTY: NodeSet = NodeSet(0);

    pub fn singleton(v: usize) -> Self {
        NodeSet(1 << v)
    }

    pub fn from_nodes(nodes: impl IntoIterator<Item = usize>) -> Self {
        NodeSet(nodes.into_iter().fold(0, |m, v| m | (1u64 << v)))
    }

    #[inline]
    pub fn contains(self, v: usize) -> bool {
        self.0 >> v & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, v: usize) {
        self.0 |= 1 << v;
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn union(self, other: NodeSet) -> NodeSet {
        NodeSet(self.0 | other.0)
    }

    pub fn intersection(self, other: NodeSet) -> NodeSet {
        NodeSet(self.0 & other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let v = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(v)
            }
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }
}

fn check_node_count(n: usize) -> Result<()> {
    if n > MAX_NODES {
        return Err(Error::capacity("graph", MAX_NODES, n));
    }
    Ok(())
}

/// True iff the directed graph admits a topological order.
///
/// A self-loop counts as a cycle. Node indices must be below `n`.
pub fn is_acyclic(n: usize, edges: &[(usize, usize)]) -> Result<bool> {
    let mut indegree = vec![0usize; n];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(p, c) in edges {
        if p >= n || c >= n {
            return Err(Error::input(format!("edge ({p},{c}) references a node outside 0..{n}")));
        }
        out[p].push(c);
        indegree[c] += 1;
    }
    let mut queue: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = queue.pop() {
        seen += 1;
        for &c in &out[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                queue.push(c);
            }
        }
    }
    Ok(seen == n)
}

/// A directed acyclic graph. Edges are kept sorted, which gives the canonical
/// serialization used for ordering and equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct Dag {
    n: usize,
    edges: Vec<(usize, usize)>,
    #[serde(skip)]
    parents: Vec<NodeSet>,
    #[serde(skip)]
    children: Vec<NodeSet>,
}

impl Dag {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        check_node_count(n)?;
        let mut edges: Vec<(usize, usize)> = edges.into_iter().collect();
        edges.sort_unstable();
        for w in edges.windows(2) {
            if w[0] == w[1] {
                return Err(Error::input(format!("duplicate edge {:?}", w[0])));
            }
        }
        for &(p, c) in &edges {
            if p == c {
                return Err(Error::input(format!("self-loop at node {p}")));
            }
        }
        if !is_acyclic(n, &edges)? {
            return Err(Error::input("graph contains a directed cycle"));
        }
        Ok(Self::from_sorted_unchecked(n, edges))
    }

    /// Builds a graph from edges already known to be sorted, valid and acyclic.
    pub(crate) fn from_sorted_unchecked(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut parents = vec![NodeSet::EMPTY; n];
        let mut children = vec![NodeSet::EMPTY; n];
        for &(p, c) in &edges {
            parents[c].insert(p);
            children[p].insert(c);
        }
        Dag {
            n,
            edges,
            parents,
            children,
        }
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, [])
    }

    /// The directed path `order[0] -> order[1] -> ...`.
    pub fn chain(order: &[usize]) -> Result<Self> {
        Self::new(order.len(), order.windows(2).map(|w| (w[0], w[1])))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, p: usize, c: usize) -> bool {
        self.children[p].contains(c)
    }

    pub fn parents(&self, v: usize) -> NodeSet {
        self.parents[v]
    }

    pub fn children(&self, v: usize) -> NodeSet {
        self.children[v]
    }

    pub(crate) fn check_node(&self, v: usize) -> Result<()> {
        if v >= self.n {
            return Err(Error::input(format!("node {v} outside 0..{}", self.n)));
        }
        Ok(())
    }

    /// Nodes with a directed path into `v`, excluding `v`.
    pub fn ancestors(&self, v: usize) -> Result<NodeSet> {
        self.check_node(v)?;
        Ok(self.closure(v, &self.parents))
    }

    /// Nodes reachable from `v` by a directed path, excluding `v`.
    pub fn descendants(&self, v: usize) -> Result<NodeSet> {
        self.check_node(v)?;
        Ok(self.closure(v, &self.children))
    }

    fn closure(&self, v: usize, step: &[NodeSet]) -> NodeSet {
        self.closure_avoiding(v, step, NodeSet::EMPTY)
    }

    /// Nodes reachable from `v` along `step` without entering `blocked`.
    fn closure_avoiding(&self, v: usize, step: &[NodeSet], blocked: NodeSet) -> NodeSet {
        let mut seen = NodeSet::EMPTY;
        let mut frontier = NodeSet(step[v].0 & !blocked.0);
        while !frontier.is_empty() {
            seen = seen.union(frontier);
            let mut next = NodeSet::EMPTY;
            for u in frontier.iter() {
                next = next.union(step[u]);
            }
            frontier = NodeSet(next.0 & !seen.0 & !blocked.0);
        }
        seen
    }

    /// True iff a directed path `from ⇝ to` of length ≥ 1 exists.
    pub fn has_directed_path(&self, from: usize, to: usize) -> Result<bool> {
        Ok(self.descendants(from)?.contains(to))
    }

    /// True iff no third node is an ancestor of both `i` and `j`.
    ///
    /// One pair member being an ancestor of the other does not count as a common cause.
    pub fn common_cause_free(&self, i: usize, j: usize) -> Result<bool> {
        if i == j {
            return Err(Error::input("common_cause_free needs two distinct nodes"));
        }
        let shared = self.ancestors(i)?.intersection(self.ancestors(j)?);
        let mut shared = shared;
        shared.0 &= !(1 << i | 1 << j);
        Ok(shared.is_empty())
    }

    /// True iff no third node `c` has a directed path to `i` that avoids `j`
    /// and a directed path to `j` that avoids `i`.
    ///
    /// Unlike [`Dag::common_cause_free`], an ancestor that reaches one member
    /// only through the other is not a confounder: in `0 → 1 → 2` the pair
    /// `(1, 2)` is confounder-free.
    pub fn confounder_free(&self, i: usize, j: usize) -> Result<bool> {
        self.check_node(i)?;
        self.check_node(j)?;
        if i == j {
            return Err(Error::input("confounder_free needs two distinct nodes"));
        }
        let to_i = self.closure_avoiding(i, &self.parents, NodeSet::singleton(j));
        let to_j = self.closure_avoiding(j, &self.parents, NodeSet::singleton(i));
        Ok(to_i.intersection(to_j).is_empty())
    }

    /// Nodes in a topological order (parents before children), ties by index.
    pub fn topological_order(&self) -> Vec<usize> {
        let mut placed = NodeSet::EMPTY;
        let mut order = Vec::with_capacity(self.n);
        while order.len() < self.n {
            for v in 0..self.n {
                if !placed.contains(v) && self.parents[v].0 & !placed.0 == 0 {
                    placed.insert(v);
                    order.push(v);
                }
            }
        }
        order
    }

    /// True iff the undirected skeleton has no cycle.
    pub fn is_polytree(&self) -> bool {
        if self.edges.len() + 1 > self.n.max(1) {
            return false;
        }
        let mut uf = UnionFind::new(self.n);
        self.edges.iter().all(|&(p, c)| uf.union(p, c))
    }

    /// Undirected neighbours of `v`.
    pub fn neighbors(&self, v: usize) -> NodeSet {
        self.parents[v].union(self.children[v])
    }
}

impl From<Dag> for GraphJson {
    fn from(d: Dag) -> Self {
        GraphJson {
            n: d.n,
            edges: d.edges.iter().map(|&(p, c)| [p, c]).collect(),
            names: None,
        }
    }
}

impl TryFrom<GraphJson> for Dag {
    type Error = Error;

    fn try_from(g: GraphJson) -> Result<Self> {
        if let Some(names) = &g.names {
            if names.len() != g.n {
                return Err(Error::input(format!("{} names for {} nodes", names.len(), g.n)));
            }
        }
        Dag::new(g.n, g.edges.iter().map(|e| (e[0], e[1])))
    }
}

/// Wire form of a graph: `{"n": 3, "edges": [[0,1],[1,2]], "names": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
}

/// A DAG whose skeleton is a forest.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Dag", into = "Dag")]
pub struct Polytree(Dag);

impl Polytree {
    pub fn new(dag: Dag) -> Result<Self> {
        if !dag.is_polytree() {
            return Err(Error::input("skeleton contains an undirected cycle"));
        }
        Ok(Polytree(dag))
    }

    pub fn dag(&self) -> &Dag {
        &self.0
    }

    pub fn into_dag(self) -> Dag {
        self.0
    }
}

impl TryFrom<Dag> for Polytree {
    type Error = Error;
    fn try_from(d: Dag) -> Result<Self> {
        Polytree::new(d)
    }
}

impl From<Polytree> for Dag {
    fn from(p: Polytree) -> Dag {
        p.0
    }
}

/// An ordered tuple of distinct global variable indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VariableTuple(Vec<usize>);

impl VariableTuple {
    pub fn new(vars: Vec<usize>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        if let Some(&v) = vars.iter().find(|&&v| !seen.insert(v)) {
            return Err(Error::input(format!("variable {v} repeated in tuple")));
        }
        Ok(VariableTuple(vars))
    }

    /// Like [`VariableTuple::new`], additionally requiring all indices below `n`.
    pub fn within(vars: Vec<usize>, n: usize) -> Result<Self> {
        if let Some(&v) = vars.iter().find(|&&v| v >= n) {
            return Err(Error::input(format!("variable {v} outside 0..{n}")));
        }
        Self::new(vars)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn position(&self, v: usize) -> Option<usize> {
        self.0.iter().position(|&x| x == v)
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    /// Merges the sets of `a` and `b`; false if they were already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain3() -> Dag {
        Dag::new(3, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn acyclicity() {
        assert!(is_acyclic(3, &[]).unwrap());
        assert!(is_acyclic(3, &[(0, 1), (1, 2)]).unwrap());
        assert!(!is_acyclic(3, &[(0, 1), (1, 2), (2, 0)]).unwrap());
        assert!(matches!(is_acyclic(2, &[(0, 5)]), Err(Error::Input(_))));
    }

    #[test]
    fn rejects_invalid_graphs() {
        assert!(Dag::new(2, [(0, 0)]).is_err());
        assert!(Dag::new(2, [(0, 1), (0, 1)]).is_err());
        assert!(Dag::new(2, [(0, 1), (1, 0)]).is_err());
        assert!(matches!(Dag::new(65, []), Err(Error::Capacity { .. })));
    }

    #[test]
    fn polytree_checks() {
        assert!(chain3().is_polytree());
        assert!(Dag::new(3, [(0, 1), (2, 1)]).unwrap().is_polytree());
        assert!(!Dag::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap().is_polytree());
        assert!(Dag::empty(4).unwrap().is_polytree());
        assert!(Polytree::new(Dag::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap()).is_err());
    }

    #[test]
    fn ancestor_queries() {
        let c = chain3();
        assert_eq!(c.ancestors(2).unwrap().to_vec(), vec![0, 1]);
        assert!(c.ancestors(0).unwrap().is_empty());
        let collider = Dag::new(3, [(0, 1), (2, 1)]).unwrap();
        assert_eq!(collider.ancestors(1).unwrap().to_vec(), vec![0, 2]);
        assert!(c.ancestors(3).is_err());
    }

    #[test]
    fn common_causes() {
        assert!(chain3().common_cause_free(0, 1).unwrap());
        let fork = Dag::new(3, [(0, 1), (0, 2)]).unwrap();
        assert!(!fork.common_cause_free(1, 2).unwrap());
        // 0 -> 2 -> 1 plus 0 -> 1: node 0 causes both 2 and 1
        let relabeled = Dag::new(3, [(0, 2), (2, 1), (0, 1)]).unwrap();
        assert!(!relabeled.common_cause_free(2, 1).unwrap());
        // ancestors of the other pair member do not count
        assert!(relabeled.common_cause_free(0, 1).unwrap());
        assert!(chain3().common_cause_free(1, 1).is_err());
    }

    #[test]
    fn confounders() {
        let chain = chain3();
        assert!(!chain.common_cause_free(1, 2).unwrap());
        assert!(chain.confounder_free(1, 2).unwrap());
        assert!(chain.confounder_free(0, 2).unwrap());
        let triangle = Dag::new(3, [(0, 1), (0, 2), (1, 2)]).unwrap();
        assert!(!triangle.confounder_free(1, 2).unwrap());
        let fork = Dag::new(3, [(0, 1), (0, 2)]).unwrap();
        assert!(!fork.confounder_free(1, 2).unwrap());
        assert!(chain.confounder_free(0, 3).is_err());
    }

    #[test]
    fn graph_json_round_trip() {
        let json = r#"{"n": 3, "edges": [[1,2],[0,1]], "names": ["X","Y","Z"]}"#;
        let d: Dag = serde_json::from_str(json).unwrap();
        assert_eq!(d, chain3());
        let back = serde_json::to_string(&d).unwrap();
        assert_eq!(back, r#"{"n":3,"edges":[[0,1],[1,2]]}"#);
        assert!(serde_json::from_str::<Dag>(r#"{"n":2,"edges":[[0,1],[1,0]]}"#).is_err());
        assert!(serde_json::from_str::<Dag>(r#"{"n":2,"edges":[],"names":["a"]}"#).is_err());
    }

    #[test]
    fn variable_tuples() {
        assert!(VariableTuple::new(vec![0, 2, 1]).is_ok());
        assert!(VariableTuple::new(vec![0, 0]).is_err());
        assert!(VariableTuple::within(vec![0, 3], 3).is_err());
    }

    #[test]
    fn topological_order_respects_edges() {
        let d = Dag::new(4, [(3, 0), (0, 2), (1, 2)]).unwrap();
        let order = d.topological_order();
        let pos = |v| order.iter().position(|&x| x == v).unwrap();
        for &(p, c) in d.edges() {
            assert!(pos(p) < pos(c));
        }
    }
}
