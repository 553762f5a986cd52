//! d-separation by reachability over (node, direction) states.

use super::{Dag, NodeSet};
use crate::error::{Error, Result};

/// True iff `i` and `j` are d-separated given `conditioning` in `dag`.
pub fn d_separated(dag: &Dag, i: usize, j: usize, conditioning: &[usize]) -> Result<bool> {
    dag.check_node(i)?;
    dag.check_node(j)?;
    for &z in conditioning {
        dag.check_node(z)?;
    }
    if i == j {
        return Err(Error::input("d-separation needs two distinct nodes"));
    }
    let z = NodeSet::from_nodes(conditioning.iter().copied());
    if z.contains(i) || z.contains(j) {
        return Err(Error::input("queried nodes may not be in the conditioning set"));
    }
    Ok(DagIndex::new(dag).separated(i, j, z))
}

/// A DAG with precomputed ancestor masks, for answering many separation
/// queries against the same graph.
#[derive(Debug, Clone)]
pub struct DagIndex {
    n: usize,
    parents: Vec<NodeSet>,
    children: Vec<NodeSet>,
    ancestors: Vec<NodeSet>,
}

impl DagIndex {
    pub fn new(dag: &Dag) -> Self {
        let mut ancestors = vec![NodeSet::EMPTY; dag.n()];
        for v in dag.topological_order() {
            let mut a = dag.parents(v);
            for p in dag.parents(v).iter() {
                a = a.union(ancestors[p]);
            }
            ancestors[v] = a;
        }
        DagIndex {
            n: dag.n(),
            parents: (0..dag.n()).map(|v| dag.parents(v)).collect(),
            children: (0..dag.n()).map(|v| dag.children(v)).collect(),
            ancestors,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ancestors(&self, v: usize) -> NodeSet {
        self.ancestors[v]
    }

    /// Unchecked separation query; inputs must satisfy the [`d_separated`] preconditions.
    pub fn separated(&self, i: usize, j: usize, z: NodeSet) -> bool {
        !self.reachable(i, z).contains(j)
    }

    /// Nodes d-connected to `source` given `z`.
    ///
    /// Bayes-ball over bit masks: a node is visited at most once going up
    /// (entered from a child) and once going down (entered from a parent).
    pub fn reachable(&self, source: usize, z: NodeSet) -> NodeSet {
        let z = z.0;
        // Nodes that are in z or have a descendant in z: colliders there are open.
        let mut opens_collider = z;
        for v in NodeSet(z).iter() {
            opens_collider |= self.ancestors[v].0;
        }
        let (mut seen_up, mut seen_down) = (0u64, 0u64);
        let (mut todo_up, mut todo_down) = (1u64 << source, 0u64);
        let mut reached = 0u64;
        loop {
            let (v, up) = if todo_up != 0 {
                (todo_up.trailing_zeros() as usize, true)
            } else if todo_down != 0 {
                (todo_down.trailing_zeros() as usize, false)
            } else {
                break;
            };
            let bit = 1u64 << v;
            let free = z & bit == 0;
            if free && v != source {
                reached |= bit;
            }
            if up {
                todo_up &= !bit;
                seen_up |= bit;
                if free {
                    todo_up |= self.parents[v].0 & !seen_up;
                    todo_down |= self.children[v].0 & !seen_down;
                }
            } else {
                todo_down &= !bit;
                seen_down |= bit;
                if free {
                    todo_down |= self.children[v].0 & !seen_down;
                }
                if opens_collider & bit != 0 {
                    todo_up |= self.parents[v].0 & !seen_up;
                }
            }
        }
        NodeSet(reached)
    }
}
