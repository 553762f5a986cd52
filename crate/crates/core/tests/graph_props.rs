mod common;

use causal_subsets::graph::{enumerate_dags, enumerate_polytrees};
use causal_subsets::{d_separated, enumerate_models, is_acyclic, Dag, ModelClass, NodeSet};
use proptest::prelude::*;

/// A DAG on `n` nodes: a random order plus a bit per forward pair.
fn dag_strategy(max_n: usize) -> impl Strategy<Value = Dag> {
    (1..=max_n)
        .prop_flat_map(|n| (Just(n), Just((0..n).collect::<Vec<_>>()).prop_shuffle(), prop::collection::vec(any::<bool>(), n * n)))
        .prop_map(|(n, order, bits)| {
            let mut edges = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    if bits[a * n + b] {
                        edges.push((order[a], order[b]));
                    }
                }
            }
            Dag::new(n, edges).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn dsep_matches_moralization(dag in dag_strategy(9), picks in prop::collection::vec(any::<u64>(), 8)) {
        let n = dag.n();
        prop_assume!(n >= 2);
        for p in picks {
            let i = (p % n as u64) as usize;
            let j = ((p >> 8) % n as u64) as usize;
            if i == j {
                continue;
            }
            let z: Vec<usize> = (0..n).filter(|&v| v != i && v != j && (p >> (16 + v)) & 1 == 1).collect();
            let got = d_separated(&dag, i, j, &z).unwrap();
            prop_assert_eq!(got, common::dsep_moral(&dag, i, j, &z));
            prop_assert_eq!(got, d_separated(&dag, j, i, &z).unwrap());
        }
    }

    #[test]
    fn ancestors_match_directed_paths(dag in dag_strategy(8)) {
        for v in 0..dag.n() {
            let anc = dag.ancestors(v).unwrap();
            for u in 0..dag.n() {
                let reach = u != v && dag.has_directed_path(u, v).unwrap();
                prop_assert_eq!(anc.contains(u), reach);
                prop_assert_eq!(dag.descendants(u).unwrap().contains(v), reach);
            }
        }
    }

    #[test]
    fn topological_order_and_acyclicity(dag in dag_strategy(10)) {
        prop_assert!(is_acyclic(dag.n(), dag.edges()).unwrap());
        let order = dag.topological_order();
        let pos: Vec<usize> = (0..dag.n()).map(|v| order.iter().position(|&w| w == v).unwrap()).collect();
        for &(p, c) in dag.edges() {
            prop_assert!(pos[p] < pos[c]);
        }
        if let Some(&(p, c)) = dag.edges().first() {
            let mut cyclic = dag.edges().to_vec();
            cyclic.push((c, p));
            prop_assert!(Dag::new(dag.n(), cyclic).is_err());
        }
    }

    #[test]
    fn node_sets_round_trip(nodes in prop::collection::btree_set(0usize..64, 0..20)) {
        let s = NodeSet::from_nodes(nodes.iter().copied());
        prop_assert_eq!(s.len(), nodes.len());
        prop_assert_eq!(s.to_vec(), nodes.into_iter().collect::<Vec<_>>());
    }
}

#[test]
fn enumeration_counts() {
    let dags = [1, 1, 3, 25, 543, 29281];
    for n in 1..=5 {
        assert_eq!(enumerate_dags(n).unwrap().count(), dags[n]);
    }
    // oriented spanning trees: n^(n-2) labeled trees times 2^(n-1) orientations
    for n in 2..=6usize {
        let trees = enumerate_polytrees(n).unwrap().filter(|d| d.edges().len() == n - 1).count();
        assert_eq!(trees, n.pow(n as u32 - 2) << (n - 1));
    }
}

#[test]
fn path_classes_count_orderings_modulo_reversal() {
    for n in 2..=6usize {
        let orders: usize = (1..=n).product::<usize>() / 2;
        assert_eq!(enumerate_models(ModelClass::PathSign, n).unwrap().count(), orders << (n - 1));
        assert_eq!(enumerate_models(ModelClass::Path, n).unwrap().count(), orders);
        assert_eq!(enumerate_models(ModelClass::Direction, n).unwrap().count(), orders * 2);
    }
}

#[test]
fn polytrees_are_the_forest_dags() {
    for n in 1..=5 {
        let filtered: Vec<Dag> = enumerate_dags(n).unwrap().filter(|d| d.is_polytree()).collect();
        let direct: Vec<Dag> = enumerate_polytrees(n).unwrap().collect();
        assert_eq!(filtered, direct);
    }
}
