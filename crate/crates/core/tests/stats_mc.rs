mod common;

use causal_subsets::graph::VariableTuple;
use causal_subsets::stats::{ci_test, cumulant_score, direction_test, partial_corr, sign_test, DirectionMethod, TestConfig};
use causal_subsets::synth::{LinearSem, Noise, NoiseKind};
use causal_subsets::{CiVerdict, Dag, Dataset, Error, Outcome, Query};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn gaussian_columns(seed: u64, cols: usize, l: usize) -> Dataset {
    let mut rng = common::rng(seed);
    let columns = (0..cols)
        .map(|_| (0..l).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    Dataset::new(VariableTuple::new((0..cols).collect()).unwrap(), columns).unwrap()
}

/// Partial correlation from the inverse of the sample covariance matrix.
fn pcorr_precision(d: &Dataset, i: usize, j: usize, z: &[usize]) -> f64 {
    let vars: Vec<usize> = [i, j].into_iter().chain(z.iter().copied()).collect();
    let cols: Vec<&[f64]> = vars.iter().map(|&v| d.column(v).unwrap()).collect();
    let l = d.l() as f64;
    let means: Vec<f64> = cols.iter().map(|c| c.iter().sum::<f64>() / l).collect();
    let m = vars.len();
    let cov = DMatrix::from_fn(m, m, |a, b| {
        cols[a].iter().zip(cols[b]).map(|(x, y)| (x - means[a]) * (y - means[b])).sum::<f64>() / l
    });
    let p = cov.try_inverse().unwrap();
    -p[(0, 1)] / (p[(0, 0)] * p[(1, 1)]).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_corr_matches_precision_oracle(seed in any::<u64>(), mix in -1.0f64..1.0) {
        let base = gaussian_columns(seed, 4, 200);
        // Correlate the columns so the conditioning actually matters.
        let c = base.columns();
        let cols = vec![
            c[0].clone(),
            c[1].iter().zip(&c[0]).map(|(a, b)| a + mix * b).collect(),
            c[2].iter().zip(&c[1]).map(|(a, b)| a - mix * b).collect(),
            c[3].iter().zip(&c[2]).zip(&c[0]).map(|((a, b), x)| a + b + 0.3 * x).collect(),
        ];
        let d = Dataset::new(base.vars().clone(), cols).unwrap();
        for (i, j, z) in [(0, 3, vec![1]), (0, 2, vec![1, 3]), (1, 3, vec![]), (2, 3, vec![0, 1])] {
            let got = partial_corr(&d, i, j, &z).unwrap();
            prop_assert!((got - pcorr_precision(&d, i, j, &z)).abs() < 1e-10);
        }
    }
}

#[test]
fn independent_pairs_are_accepted_at_the_nominal_rate() {
    let cfg = TestConfig::default();
    let q = Query::cond_indep(0, 1, [2]).unwrap();
    let accepted = (0..1000)
        .filter(|&seed| ci_test(&gaussian_columns(seed, 3, 500), &q, &cfg).unwrap() == CiVerdict::Independent)
        .count();
    let rate = accepted as f64 / 1000.0;
    assert!((rate - 0.95).abs() <= 0.03, "acceptance rate {rate}");
}

#[test]
fn independent_columns_have_no_reliable_sign() {
    let cfg = TestConfig {
        alpha: 0.05,
        min_abs_corr: 0.05,
    };
    for seed in 0..20 {
        let d = gaussian_columns(seed, 2, 100_000);
        assert!(matches!(sign_test(&d, 0, 1, &cfg), Err(Error::DegenerateSign { .. })));
    }
}

#[test]
fn cumulant_direction_on_uniform_noise() {
    let noise = vec![Noise::with_variance(NoiseKind::Uniform, 1.0); 2];
    let sem = LinearSem::new(Dag::new(2, [(0, 1)]).unwrap(), vec![(0, 1, 0.8)], noise).unwrap();
    let right = (0..100)
        .filter(|&seed| {
            let d = sem.sample(100_000, seed).unwrap();
            direction_test(&d, 0, 1, DirectionMethod::Cumulant).unwrap() == Outcome::Sign(1)
        })
        .count();
    assert!(right >= 80, "{right}/100 seeds point from cause to effect");
}

#[test]
fn cumulant_score_is_antisymmetric() {
    let d = gaussian_columns(3, 2, 1000);
    let (x, y) = (d.column(0).unwrap(), d.column(1).unwrap());
    let y2: Vec<f64> = y.iter().zip(x).map(|(a, b)| a + 0.5 * b).collect();
    let fwd = cumulant_score(x, &y2).unwrap();
    let back = cumulant_score(&y2, x).unwrap();
    assert!((fwd + back).abs() < 1e-12 * fwd.abs().max(1.0));
}
