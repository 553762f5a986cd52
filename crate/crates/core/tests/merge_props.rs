mod common;

use causal_subsets::graph::{enumerate_dags, VariableTuple};
use causal_subsets::merge::{
    check_ci_exact, enumerate_constrained_dags, merge_chain_discrete, merge_chain_gaussian, CausalConstraint,
    DiscreteDist, Distribution, GaussianDist, DEFAULT_TOL,
};
use causal_subsets::{Error, Query};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn constraint() -> impl Strategy<Value = CausalConstraint> {
    (0usize..3, 0usize..3, any::<bool>(), 0u8..3).prop_filter_map("distinct nodes", |(a, b, direct, kind)| {
        (a != b).then(|| match kind {
            0 => CausalConstraint::EdgeRequired { from: a, to: b, direct },
            1 => CausalConstraint::Unconfounded { a, b },
            _ => CausalConstraint::EdgeForbidden { from: a, to: b },
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn discrete_merge_preserves_both_marginals(seed in any::<u64>()) {
        let (xy, yz) = common::consistent_pair(seed);
        let m = merge_chain_discrete(&xy, &yz, DEFAULT_TOL).unwrap();
        let back = m.dist.marginal(&[0, 1]).unwrap();
        prop_assert_eq!(back.probs(), xy.probs());
        prop_assert!(m.dist.marginal(&[1, 2]).unwrap().tv_distance(&yz).unwrap() <= DEFAULT_TOL);
        let ci = check_ci_exact(&Distribution::Discrete(m.dist), &Query::cond_indep(0, 2, [1]).unwrap(), DEFAULT_TOL).unwrap();
        prop_assert!(ci.holds);
    }

    #[test]
    fn gaussian_merge_makes_x_and_z_conditionally_independent(
        vx in 0.1f64..10.0, vy in 0.1f64..10.0, vz in 0.1f64..10.0, rxy in -0.99f64..0.99, ryz in -0.99f64..0.99,
    ) {
        let g = |vars: Vec<usize>, va: f64, vb: f64, r: f64| {
            let c = r * (va * vb).sqrt();
            GaussianDist::new(VariableTuple::new(vars).unwrap(), DVector::zeros(2), DMatrix::from_row_slice(2, 2, &[va, c, c, vb])).unwrap()
        };
        let m = merge_chain_gaussian(&g(vec![0, 1], vx, vy, rxy), &g(vec![1, 2], vy, vz, ryz), DEFAULT_TOL).unwrap();
        prop_assert!(m.partial_corr(0, 2, &[1]).unwrap().unwrap().abs() <= 1e-12);
        prop_assert!((m.covariance(0, 1).unwrap() - rxy * (vx * vy).sqrt()).abs() <= 1e-12);
        prop_assert!((m.covariance(1, 2).unwrap() - ryz * (vy * vz).sqrt()).abs() <= 1e-12);
    }

    #[test]
    fn constrained_dags_are_the_filtered_dags(cs in prop::collection::vec(constraint(), 0..4)) {
        let got = enumerate_constrained_dags(3, &cs).unwrap();
        let want: Vec<_> = enumerate_dags(3).unwrap().filter(|d| cs.iter().all(|c| c.holds(d).unwrap())).collect();
        prop_assert_eq!(got, want);
    }
}

#[test]
fn inconsistent_marginals_are_rejected() {
    let dd = |vars: Vec<usize>, probs: Vec<f64>| DiscreteDist::new(VariableTuple::new(vars).unwrap(), vec![2, 2], probs).unwrap();
    let xy = dd(vec![0, 1], vec![0.25, 0.25, 0.25, 0.25]);
    let yz = dd(vec![1, 2], vec![0.3, 0.3, 0.2, 0.2]);
    match merge_chain_discrete(&xy, &yz, DEFAULT_TOL) {
        Err(Error::Inconsistency { distance, .. }) => assert!((distance - 0.1).abs() < 1e-12),
        other => panic!("expected an inconsistency, got {other:?}"),
    }
    assert!(merge_chain_discrete(&xy, &yz, 0.2).is_ok());
}
