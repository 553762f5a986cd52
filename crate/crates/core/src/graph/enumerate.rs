//! Exhaustive enumerators for DAGs and polytrees at small `n`.
//!
//! Graphs are produced in lexicographic order of their sorted edge lists. The
//! enumerator walks increasing sequences of candidate edges depth-first; the
//! preorder of that walk is exactly the lexicographic order, so nothing has to
//! be collected and sorted.

use super::{Dag, NodeSet, UnionFind};
use crate::error::{Error, Result};

/// Largest `n` for exhaustive DAG enumeration (29281 graphs at n = 5).
pub const DAG_CAP: usize = 5;
/// Largest `n` for exhaustive polytree enumeration.
pub const POLYTREE_CAP: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Dag,
    Polytree,
}

/// Lazy canonical-order enumerator over DAGs or polytrees on `n` nodes.
#[derive(Debug, Clone)]
pub struct DagEnumerator {
    n: usize,
    family: Family,
    candidates: Vec<(usize, usize)>,
    chosen: Vec<usize>,
    cursor: usize,
    started: bool,
    done: bool,
}

pub fn enumerate_dags(n: usize) -> Result<DagEnumerator> {
    if n > DAG_CAP {
        return Err(Error::capacity("DAG enumeration", DAG_CAP, n));
    }
    Ok(DagEnumerator::new(n, Family::Dag))
}

/// Polytrees here include forests: every DAG whose skeleton has no cycle.
pub fn enumerate_polytrees(n: usize) -> Result<DagEnumerator> {
    if n > POLYTREE_CAP {
        return Err(Error::capacity("polytree enumeration", POLYTREE_CAP, n));
    }
    Ok(DagEnumerator::new(n, Family::Polytree))
}

impl DagEnumerator {
    fn new(n: usize, family: Family) -> Self {
        let candidates = (0..n)
            .flat_map(|p| (0..n).filter(move |&c| c != p).map(move |c| (p, c)))
            .collect();
        DagEnumerator {
            n,
            family,
            candidates,
            chosen: Vec::new(),
            cursor: 0,
            started: false,
            done: false,
        }
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.chosen.iter().map(|&k| self.candidates[k]).collect()
    }

    fn feasible(&self, extra: (usize, usize)) -> bool {
        let (p, c) = extra;
        match self.family {
            Family::Dag => {
                // adding p -> c closes a cycle iff p is reachable from c
                let mut children = vec![NodeSet::EMPTY; self.n];
                for &k in &self.chosen {
                    let (a, b) = self.candidates[k];
                    children[a].insert(b);
                }
                let mut seen = NodeSet::singleton(c);
                let mut stack = vec![c];
                while let Some(v) = stack.pop() {
                    if v == p {
                        return false;
                    }
                    for w in children[v].iter() {
                        if !seen.contains(w) {
                            seen.insert(w);
                            stack.push(w);
                        }
                    }
                }
                true
            }
            Family::Polytree => {
                let mut uf = UnionFind::new(self.n);
                for &k in &self.chosen {
                    let (a, b) = self.candidates[k];
                    uf.union(a, b);
                }
                uf.find(p) != uf.find(c)
            }
        }
    }

    fn current(&self) -> Dag {
        Dag::from_sorted_unchecked(self.n, self.edges())
    }
}

impl Iterator for DagEnumerator {
    type Item = Dag;

    fn next(&mut self) -> Option<Dag> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(self.current());
        }
        loop {
            let found = (self.cursor..self.candidates.len()).find(|&k| self.feasible(self.candidates[k]));
            if let Some(k) = found {
                self.chosen.push(k);
                self.cursor = k + 1;
                return Some(self.current());
            }
            match self.chosen.pop() {
                Some(last) => self.cursor = last + 1,
                None => {
                    self.done = true;
                    return None;
                }
            }
        }
    }
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut next: Option<Vec<usize>> = Some((0..n).collect());
    std::iter::from_fn(move || {
        let current = next.take()?;
        let mut p = current.clone();
        // standard next-permutation step
        if let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) {
            let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
            p.swap(i - 1, j);
            p[i..].reverse();
            next = Some(p);
        }
        Some(current)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dag_counts() {
        let counts: Vec<usize> = (1..=4).map(|n| enumerate_dags(n).unwrap().count()).collect();
        assert_eq!(counts, vec![1, 3, 25, 543]);
        assert_eq!(enumerate_dags(0).unwrap().count(), 1);
    }

    #[test]
    fn dag_count_n5() {
        assert_eq!(enumerate_dags(5).unwrap().count(), 29281);
    }

    #[test]
    fn canonical_order_is_strictly_increasing() {
        let all: Vec<Dag> = enumerate_dags(4).unwrap().collect();
        for w in all.windows(2) {
            assert!(w[0].edges() < w[1].edges());
        }
        let trees: Vec<Dag> = enumerate_polytrees(4).unwrap().collect();
        for w in trees.windows(2) {
            assert!(w[0].edges() < w[1].edges());
        }
    }

    #[test]
    fn polytree_enumeration_matches_filter() {
        for n in 1..=4 {
            let filtered = enumerate_dags(n).unwrap().filter(|d| d.is_polytree()).count();
            assert_eq!(enumerate_polytrees(n).unwrap().count(), filtered);
        }
        assert!(enumerate_polytrees(7).is_ok());
        assert!(matches!(enumerate_polytrees(8), Err(Error::Capacity { cap: 7, .. })));
        assert!(matches!(enumerate_dags(6), Err(Error::Capacity { cap: 5, .. })));
    }

    #[test]
    fn permutation_order() {
        let perms: Vec<Vec<usize>> = permutations(3).collect();
        assert_eq!(perms.len(), 6);
        assert_eq!(perms[0], vec![0, 1, 2]);
        assert_eq!(perms[5], vec![2, 1, 0]);
        assert_eq!(permutations(1).count(), 1);
    }
}
