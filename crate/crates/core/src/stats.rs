//! Statistical tests that map a dataset to an outcome.
//!
//! Conditional independence is tested with the Fisher z-transform of the
//! partial correlation, which is computed from least-squares residuals.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::predict::predict_direction;
use crate::query::{CiVerdict, Outcome, Query};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    /// Significance level of the independence test.
    pub alpha: f64,
    /// Correlations smaller than this in magnitude have no reliable sign.
    pub min_abs_corr: f64,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            alpha: 0.05,
            min_abs_corr: 0.02,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if !(self.min_abs_corr >= 0.0) {
            return Err(Error::Config("min_abs_corr must be non-negative".into()));
        }
        Ok(())
    }
}

fn centered(col: &[f64]) -> Vec<f64> {
    let mean = col.iter().sum::<f64>() / col.len() as f64;
    col.iter().map(|v| v - mean).collect()
}

fn corr_of_centered(x: &[f64], y: &[f64]) -> Result<f64> {
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::DegenerateData("zero-variance column".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Sample Pearson correlation of the columns of variables `i` and `j`.
pub fn pearson_corr(d: &Dataset, i: usize, j: usize) -> Result<f64> {
    let x = centered(d.column(i)?);
    let y = centered(d.column(j)?);
    corr_of_centered(&x, &y)
}

/// Correlation of the residuals of `i` and `j` after least-squares regression
/// (with intercept) on the variables in `z`.
pub fn partial_corr(d: &Dataset, i: usize, j: usize, z: &[usize]) -> Result<f64> {
    if z.is_empty() {
        return pearson_corr(d, i, j);
    }
    if z.contains(&i) || z.contains(&j) {
        return Err(Error::input("conditioning set overlaps the queried pair"));
    }
    let l = d.l();
    if l <= z.len() + 2 {
        return Err(Error::InsufficientData {
            needed: z.len() + 3,
            got: l,
        });
    }
    let x = centered(d.column(i)?);
    let y = centered(d.column(j)?);
    let mut design = DMatrix::<f64>::zeros(l, z.len());
    for (c, &v) in z.iter().enumerate() {
        for (r, val) in centered(d.column(v)?).into_iter().enumerate() {
            design[(r, c)] = val;
        }
    }
    let qr = design.qr();
    let r = qr.r();
    let scale = (0..z.len()).map(|k| r[(k, k)].abs()).fold(0.0, f64::max);
    if scale == 0.0 || (0..z.len()).any(|k| r[(k, k)].abs() <= 1e-10 * scale) {
        return Err(Error::DegenerateData("conditioning columns are collinear".into()));
    }
    let q = qr.q();
    let residual = |v: Vec<f64>| -> Vec<f64> {
        let v = DVector::from_vec(v);
        let fitted = &q * (q.transpose() * &v);
        (v - fitted).iter().copied().collect()
    };
    corr_of_centered(&residual(x), &residual(y))
}

/// Two-sided p-value of the Fisher z-test for a partial correlation `r`
/// estimated from `l` rows with `cond` conditioning variables.
pub fn fisher_z_pvalue(r: f64, l: usize, cond: usize) -> f64 {
    let z = r.clamp(-1.0, 1.0).atanh() * ((l - cond - 3) as f64).sqrt();
    if !z.is_finite() {
        return 0.0;
    }
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

/// Independent (0) iff the Fisher z-test does not reject at level `cfg.alpha`.
pub fn ci_test(d: &Dataset, q: &Query, cfg: &TestConfig) -> Result<CiVerdict> {
    let Query::CondIndep { x, y, cond } = q else {
        return Err(Error::query(format!("ci_test needs a cond_indep query, got {}", q.kind().name())));
    };
    cfg.validate()?;
    if d.l() < cond.len() + 4 {
        return Err(Error::InsufficientData {
            needed: cond.len() + 4,
            got: d.l(),
        });
    }
    let r = partial_corr(d, *x, *y, cond)?;
    let p = fisher_z_pvalue(r, d.l(), cond.len());
    Ok(CiVerdict::from_independent(p >= cfg.alpha))
}

/// Sign of the sample correlation; fails when it is too close to zero to trust.
pub fn sign_test(d: &Dataset, i: usize, j: usize, cfg: &TestConfig) -> Result<Outcome> {
    let r = pearson_corr(d, i, j)?;
    if r.abs() < cfg.min_abs_corr {
        return Err(Error::DegenerateSign {
            corr: r,
            threshold: cfg.min_abs_corr,
        });
    }
    Ok(Outcome::Sign(if r > 0.0 { 1 } else { -1 }))
}

/// How the bivariate direction test decides.
#[derive(Debug, Clone, Copy)]
pub enum DirectionMethod<'a> {
    /// Ground truth from a known graph.
    Oracle(&'a Dag),
    /// Fourth-order cumulant asymmetry for linear non-Gaussian pairs. Heuristic;
    /// it says nothing for Gaussian data.
    Cumulant,
}

/// `+1` for an inferred `i -> j`, `-1` for `j -> i`.
pub fn direction_test(d: &Dataset, i: usize, j: usize, method: DirectionMethod<'_>) -> Result<Outcome> {
    match method {
        DirectionMethod::Oracle(dag) => predict_direction(dag, i, j),
        DirectionMethod::Cumulant => {
            let score = cumulant_score(d.column(i)?, d.column(j)?)?;
            let s = if score > 0.0 {
                1
            } else if score < 0.0 {
                -1
            } else if i < j {
                1
            } else {
                -1
            };
            Ok(Outcome::Sign(s))
        }
    }
}

/// `sign(κ) · ρ · E[x³y − xy³]` on standardized data, where κ is the mean excess
/// kurtosis of the two columns. Positive values point from `x` to `y`.
///
/// For `y = ρx + e` with standardized `x` and independent `e`,
/// `E[x³y − xy³] = ρ(1 − ρ²)·kurt(x)`, so the score is positive whenever the
/// cause has non-zero excess kurtosis.
pub fn cumulant_score(x: &[f64], y: &[f64]) -> Result<f64> {
    let standardize = |c: &[f64]| -> Result<Vec<f64>> {
        let v = centered(c);
        let sd = (v.iter().map(|a| a * a).sum::<f64>() / v.len() as f64).sqrt();
        if sd == 0.0 {
            return Err(Error::DegenerateData("zero-variance column".into()));
        }
        Ok(v.into_iter().map(|a| a / sd).collect())
    };
    let (x, y) = (standardize(x)?, standardize(y)?);
    let l = x.len() as f64;
    let rho = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / l;
    if rho == 0.0 {
        return Err(Error::DegenerateData("uncorrelated pair has no direction signal".into()));
    }
    let kurt = |v: &[f64]| v.iter().map(|a| a.powi(4)).sum::<f64>() / l - 3.0;
    let asym = x.iter().zip(&y).map(|(a, b)| a.powi(3) * b - a * b.powi(3)).sum::<f64>() / l;
    let kappa = 0.5 * (kurt(&x) + kurt(&y));
    Ok(kappa.signum() * rho * asym)
}

/// Runs the data-driven test for any query kind.
///
/// Direction uses the cumulant heuristic. There is no data test for `anm`
/// queries; label those from a known graph instead.
pub fn apply_test(d: &Dataset, q: &Query, cfg: &TestConfig) -> Result<Outcome> {
    match q {
        Query::CondIndep { .. } => ci_test(d, q, cfg).map(Outcome::from),
        Query::Sign { x, y } => sign_test(d, *x, *y, cfg),
        Query::Corr { x, y } => pearson_corr(d, *x, *y).map(Outcome::Real),
        Query::Direction { from, to } => direction_test(d, *from, *to, DirectionMethod::Cumulant),
        Query::Anm { .. } => Err(Error::query("no statistical test is available for anm queries")),
    }
}
