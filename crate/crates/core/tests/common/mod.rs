//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use causal_subsets::bounds::{binary_bound, BoundSpec, Variant};
use causal_subsets::graph::VariableTuple;
use causal_subsets::merge::DiscreteDist;
use causal_subsets::{Dag, PathModel};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// d-separation by moralizing the ancestral graph of `{i, j} ∪ z`, deleting
/// `z` and checking whether `i` still reaches `j`.
pub fn dsep_moral(dag: &Dag, i: usize, j: usize, z: &[usize]) -> bool {
    let n = dag.n();
    let mut keep = vec![false; n];
    let mut stack: Vec<usize> = z.iter().copied().chain([i, j]).collect();
    while let Some(v) = stack.pop() {
        if keep[v] {
            continue;
        }
        keep[v] = true;
        for &(p, c) in dag.edges() {
            if c == v && !keep[p] {
                stack.push(p);
            }
        }
    }
    let mut adj = vec![vec![false; n]; n];
    for &(p, c) in dag.edges() {
        if keep[p] && keep[c] {
            adj[p][c] = true;
            adj[c][p] = true;
        }
    }
    for c in 0..n {
        let parents: Vec<usize> = dag.edges().iter().filter(|e| e.1 == c && keep[c]).map(|e| e.0).collect();
        for a in &parents {
            for b in &parents {
                if a != b {
                    adj[*a][*b] = true;
                }
            }
        }
    }
    let mut seen = vec![false; n];
    for &v in z {
        seen[v] = true;
    }
    if seen[i] || seen[j] {
        return true;
    }
    let mut stack = vec![i];
    seen[i] = true;
    while let Some(v) = stack.pop() {
        if v == j {
            return false;
        }
        for w in 0..n {
            if adj[v][w] && keep[w] && !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    true
}

/// All subsets of `items`.
pub fn subsets(items: &[usize]) -> Vec<Vec<usize>> {
    (0..1u32 << items.len())
        .map(|mask| items.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &v)| v).collect())
        .collect()
}

/// Correlation between `i` and `j` in a path model, walking the path edge by edge.
pub fn path_corr_walk(model: &PathModel, i: usize, j: usize) -> f64 {
    let perm = model.perm();
    let a = perm.iter().position(|&v| v == i).unwrap();
    let b = perm.iter().position(|&v| v == j).unwrap();
    let (lo, hi) = (a.min(b), a.max(b));
    let mut r = 1.0;
    for e in lo..hi {
        r *= model.adj_corr()[e];
    }
    r
}

/// Smallest `k ≥ max(1, ceil(h))` with the binary bound at most `epsilon`, by counting up.
pub fn required_k_scan(h: f64, eta: f64, epsilon: f64, variant: Variant) -> u64 {
    let mut k = (h.ceil() as u64).max(1);
    loop {
        if binary_bound(&BoundSpec::new(k, h, eta).with_variant(variant)).unwrap() <= epsilon {
            return k;
        }
        k += 1;
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random probability vector of length `len`, summing to one up to rounding.
pub fn simplex(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..len).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

/// A consistent pair `(P(X, Y), P(Y, Z))` with random cardinalities in `2..=4`,
/// built from a shared `P(Y)` and random conditionals.
pub fn consistent_pair(seed: u64) -> (DiscreteDist, DiscreteDist) {
    let mut rng = rng(seed);
    let (cx, cy, cz) = (rng.random_range(2..=4), rng.random_range(2..=4), rng.random_range(2..=4));
    let py = simplex(&mut rng, cy);
    let mut xy = vec![0.0; cx * cy];
    for y in 0..cy {
        let px = simplex(&mut rng, cx);
        for x in 0..cx {
            xy[x * cy + y] = px[x] * py[y];
        }
    }
    let mut yz = vec![0.0; cy * cz];
    for y in 0..cy {
        let pz = simplex(&mut rng, cz);
        for z in 0..cz {
            yz[y * cz + z] = py[y] * pz[z];
        }
    }
    (
        DiscreteDist::new(VariableTuple::new(vec![0, 1]).unwrap(), vec![cx, cy], xy).unwrap(),
        DiscreteDist::new(VariableTuple::new(vec![1, 2]).unwrap(), vec![cy, cz], yz).unwrap(),
    )
}
