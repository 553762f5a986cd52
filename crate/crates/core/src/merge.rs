//! Joining marginals over overlapping variable sets: structural constraints
//! on the joint DAG, and chain merges of two bivariate distributions that
//! share one variable.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{enumerate_dags, Dag, VariableTuple, DAG_CAP};
use crate::query::Query;

/// Default tolerance for merging exact (population) distributions.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Tolerance on the total mass of a discrete table.
const SUM_TOL: f64 = 1e-12;

/// Eigenvalue floor for a covariance to count as positive semi-definite.
const PSD_FLOOR: f64 = -1e-10;

/// A structural requirement on a joint DAG.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CausalConstraint {
    /// `from` causes `to`: a directed path, or only a direct edge when `direct`.
    EdgeRequired {
        from: usize,
        to: usize,
        #[serde(default)]
        direct: bool,
    },
    /// No third variable reaches `a` while avoiding `b` and reaches `b` while avoiding `a`.
    Unconfounded { a: usize, b: usize },
    /// No direct edge `from → to`.
    EdgeForbidden { from: usize, to: usize },
}

impl CausalConstraint {
    fn nodes(&self) -> [usize; 2] {
        match *self {
            CausalConstraint::EdgeRequired { from, to, .. } | CausalConstraint::EdgeForbidden { from, to } => [from, to],
            CausalConstraint::Unconfounded { a, b } => [a, b],
        }
    }

    pub fn holds(&self, dag: &Dag) -> Result<bool> {
        match *self {
            CausalConstraint::EdgeRequired { from, to, direct: true } => Ok(dag.has_edge(from, to)),
            CausalConstraint::EdgeRequired { from, to, direct: false } => dag.has_directed_path(from, to),
            CausalConstraint::Unconfounded { a, b } => dag.confounder_free(a, b),
            CausalConstraint::EdgeForbidden { from, to } => Ok(!dag.has_edge(from, to)),
        }
    }
}

/// Every DAG on `n` nodes meeting all constraints, in canonical order.
pub fn enumerate_constrained_dags(n: usize, constraints: &[CausalConstraint]) -> Result<Vec<Dag>> {
    if n > DAG_CAP {
        return Err(Error::capacity("constrained DAG enumeration", DAG_CAP, n));
    }
    for c in constraints {
        let [a, b] = c.nodes();
        if a >= n || b >= n || a == b {
            return Err(Error::input(format!("constraint {c:?} needs two distinct nodes in 0..{n}")));
        }
    }
    let mut out = Vec::new();
    for dag in enumerate_dags(n)? {
        if constraints.iter().map(|c| c.holds(&dag)).collect::<Result<Vec<_>>>()?.into_iter().all(|b| b) {
            out.push(dag);
        }
    }
    Ok(out)
}

/// A probability table over discrete variables; `probs` is row-major with
/// the last variable varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DiscreteJson", into = "DiscreteJson")]
pub struct DiscreteDist {
    vars: VariableTuple,
    cards: Vec<usize>,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DiscreteJson {
    vars: Vec<usize>,
    cards: Vec<usize>,
    probs: Vec<f64>,
}

impl TryFrom<DiscreteJson> for DiscreteDist {
    type Error = Error;
    fn try_from(j: DiscreteJson) -> Result<Self> {
        DiscreteDist::new(VariableTuple::new(j.vars)?, j.cards, j.probs)
    }
}

impl From<DiscreteDist> for DiscreteJson {
    fn from(d: DiscreteDist) -> Self {
        DiscreteJson {
            vars: d.vars.as_slice().to_vec(),
            cards: d.cards,
            probs: d.probs,
        }
    }
}

impl DiscreteDist {
    pub fn new(vars: VariableTuple, cards: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if cards.len() != vars.len() {
            return Err(Error::input(format!("{} cardinalities for {} variables", cards.len(), vars.len())));
        }
        if cards.contains(&0) {
            return Err(Error::input("cardinalities must be at least 1"));
        }
        let size: usize = cards.iter().product();
        if probs.len() != size {
            return Err(Error::input(format!("table has {} entries, expected {size}", probs.len())));
        }
        if probs.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(Error::input("probabilities must be finite and non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::input(format!("probabilities sum to {total}, not 1")));
        }
        Ok(DiscreteDist { vars, cards, probs })
    }

    pub fn vars(&self) -> &VariableTuple {
        &self.vars
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.cards.len()];
        for k in (0..self.cards.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.cards[k + 1];
        }
        s
    }

    /// Value of each variable in cell `index`.
    fn assignment(&self, index: usize, strides: &[usize]) -> Vec<usize> {
        strides.iter().zip(&self.cards).map(|(s, c)| index / s % c).collect()
    }

    /// Probability of a full assignment, in `vars` order.
    pub fn prob(&self, assignment: &[usize]) -> f64 {
        let idx = assignment.iter().zip(self.strides()).map(|(a, s)| a * s).sum::<usize>();
        self.probs[idx]
    }

    /// Marginal over `keep`, in that order. Cells are summed in table order.
    pub fn marginal(&self, keep: &[usize]) -> Result<DiscreteDist> {
        let pos: Vec<usize> = keep
            .iter()
            .map(|&v| {
                self.vars
                    .position(v)
                    .ok_or_else(|| Error::input(format!("variable {v} not in distribution")))
            })
            .collect::<Result<_>>()?;
        let cards: Vec<usize> = pos.iter().map(|&p| self.cards[p]).collect();
        let mut out_strides = vec![1; cards.len()];
        for k in (0..cards.len().saturating_sub(1)).rev() {
            out_strides[k] = out_strides[k + 1] * cards[k + 1];
        }
        let strides = self.strides();
        let mut probs = vec![0.0; cards.iter().product()];
        for (i, &p) in self.probs.iter().enumerate() {
            let a = self.assignment(i, &strides);
            let j: usize = pos.iter().zip(&out_strides).map(|(&q, s)| a[q] * s).sum();
            probs[j] += p;
        }
        Ok(DiscreteDist {
            vars: VariableTuple::new(keep.to_vec())?,
            cards,
            probs,
        })
    }

    /// Total-variation distance to a table over the same variables and cardinalities.
    pub fn tv_distance(&self, other: &DiscreteDist) -> Result<f64> {
        if self.vars != other.vars || self.cards != other.cards {
            return Err(Error::input("total variation needs tables over the same variables"));
        }
        Ok(0.5 * self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum::<f64>())
    }
}

/// A multivariate normal over `vars`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GaussianJson", into = "GaussianJson")]
pub struct GaussianDist {
    vars: VariableTuple,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct GaussianJson {
    vars: Vec<usize>,
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

impl TryFrom<GaussianJson> for GaussianDist {
    type Error = Error;
    fn try_from(j: GaussianJson) -> Result<Self> {
        let k = j.mean.len();
        if j.cov.len() != k || j.cov.iter().any(|r| r.len() != k) {
            return Err(Error::input(format!("covariance must be {k}x{k}")));
        }
        let cov = DMatrix::from_fn(k, k, |r, c| j.cov[r][c]);
        GaussianDist::new(VariableTuple::new(j.vars)?, DVector::from_vec(j.mean), cov)
    }
}

impl From<GaussianDist> for GaussianJson {
    fn from(g: GaussianDist) -> Self {
        let k = g.mean.len();
        GaussianJson {
            vars: g.vars.as_slice().to_vec(),
            mean: g.mean.iter().copied().collect(),
            cov: (0..k).map(|r| (0..k).map(|c| g.cov[(r, c)]).collect()).collect(),
        }
    }
}

impl GaussianDist {
    pub fn new(vars: VariableTuple, mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let k = vars.len();
        if mean.len() != k || cov.nrows() != k || cov.ncols() != k {
            return Err(Error::input(format!("{k} variables need a length-{k} mean and a {k}x{k} covariance")));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::input("Gaussian parameters must be finite"));
        }
        let scale = cov.amax().max(1.0);
        for r in 0..k {
            for c in 0..r {
                if (cov[(r, c)] - cov[(c, r)]).abs() > 1e-12 * scale {
                    return Err(Error::input("covariance is not symmetric"));
                }
            }
        }
        if k > 0 {
            let min_eig = SymmetricEigen::new(cov.clone()).eigenvalues.min();
            if min_eig < PSD_FLOOR {
                return Err(Error::input(format!("covariance is not positive semi-definite (eigenvalue {min_eig})")));
            }
        }
        Ok(GaussianDist { vars, mean, cov })
    }

    pub fn vars(&self) -> &VariableTuple {
        &self.vars
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    fn pos(&self, v: usize) -> Result<usize> {
        self.vars
            .position(v)
            .ok_or_else(|| Error::input(format!("variable {v} not in distribution")))
    }

    pub fn covariance(&self, a: usize, b: usize) -> Result<f64> {
        Ok(self.cov[(self.pos(a)?, self.pos(b)?)])
    }

    /// Partial correlation of `a` and `b` given `cond`, via the Schur complement.
    /// `None` when `a` or `b` is determined by `cond`.
    pub fn partial_corr(&self, a: usize, b: usize, cond: &[usize]) -> Result<Option<f64>> {
        let (pa, pb) = (self.pos(a)?, self.pos(b)?);
        let pc: Vec<usize> = cond.iter().map(|&v| self.pos(v)).collect::<Result<_>>()?;
        let mut s = [[self.cov[(pa, pa)], self.cov[(pa, pb)]], [self.cov[(pb, pa)], self.cov[(pb, pb)]]];
        if !pc.is_empty() {
            let scc = DMatrix::from_fn(pc.len(), pc.len(), |r, c| self.cov[(pc[r], pc[c])]);
            let inv = scc
                .pseudo_inverse(1e-14)
                .map_err(|e| Error::DegenerateData(format!("conditioning covariance: {e}")))?;
            let side = |p: usize| DVector::from_iterator(pc.len(), pc.iter().map(|&q| self.cov[(p, q)]));
            let (ua, ub) = (side(pa), side(pb));
            let (ia, ib) = (&inv * &ua, &inv * &ub);
            s[0][0] -= ua.dot(&ia);
            s[0][1] -= ua.dot(&ib);
            s[1][1] -= ub.dot(&ib);
        }
        if s[0][0] <= 0.0 || s[1][1] <= 0.0 {
            return Ok(None);
        }
        Ok(Some(s[0][1] / (s[0][0] * s[1][1]).sqrt()))
    }
}

fn chain_roles(a: &VariableTuple, b: &VariableTuple) -> Result<(usize, usize, usize)> {
    if a.len() != 2 || b.len() != 2 {
        return Err(Error::input("chain merges take two bivariate distributions"));
    }
    let shared: Vec<usize> = a.as_slice().iter().copied().filter(|v| b.position(*v).is_some()).collect();
    match shared.as_slice() {
        [] => Err(Error::input("the two distributions share no variable")),
        [y] => {
            let x = *a.as_slice().iter().find(|&&v| v != *y).unwrap();
            let z = *b.as_slice().iter().find(|&&v| v != *y).unwrap();
            Ok((x, *y, z))
        }
        _ => Err(Error::input("the two distributions share both variables")),
    }
}

/// A merged discrete joint with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMerge {
    pub dist: DiscreteDist,
    /// Total-variation distance between the two Y marginals.
    pub tv_distance: f64,
    /// Values of Y with zero probability in the second input; their
    /// conditional was taken to be uniform.
    pub uniform_rows: Vec<usize>,
}

/// `P(x, y, z) = P(x, y)·P(z | y)` over `(X, Y, Z)` in that order.
///
/// Within each `(x, y)` block the last non-zero cell takes the remainder, so
/// summing out Z reproduces `p_xy` exactly.
pub fn merge_chain_discrete(p_xy: &DiscreteDist, p_yz: &DiscreteDist, tol: f64) -> Result<DiscreteMerge> {
    let (x, y, z) = chain_roles(&p_xy.vars, &p_yz.vars)?;
    let a = p_xy.marginal(&[x, y])?;
    let b = p_yz.marginal(&[y, z])?;
    let (cx, cy, cz) = (a.cards[0], a.cards[1], b.cards[1]);
    if b.cards[0] != cy {
        return Err(Error::input(format!("Y has {cy} values in one input and {} in the other", b.cards[0])));
    }
    let ya = a.marginal(&[y])?;
    let yb = b.marginal(&[y])?;
    let tv = ya.tv_distance(&yb)?;
    if tv > tol {
        return Err(Error::Inconsistency {
            detail: "Y marginals disagree".into(),
            distance: tv,
            tol,
        });
    }
    let mut uniform_rows = Vec::new();
    let cond: Vec<Vec<f64>> = (0..cy)
        .map(|yv| {
            let py = yb.probs[yv];
            if py > 0.0 {
                (0..cz).map(|zv| b.probs[yv * cz + zv] / py).collect()
            } else {
                uniform_rows.push(yv);
                vec![1.0 / cz as f64; cz]
            }
        })
        .collect();
    let mut probs = vec![0.0; cx * cy * cz];
    for xv in 0..cx {
        for yv in 0..cy {
            let p = a.probs[xv * cy + yv];
            let block = &mut probs[(xv * cy + yv) * cz..(xv * cy + yv + 1) * cz];
            fill_block(block, p, &cond[yv]);
        }
    }
    let dist = DiscreteDist::new(VariableTuple::new(vec![x, y, z])?, vec![cx, cy, cz], probs)?;
    Ok(DiscreteMerge {
        dist,
        tv_distance: tv,
        uniform_rows,
    })
}

/// Writes `p·c` into `block`, with the last non-zero cell absorbing rounding
/// so the block sums to `p` in table order.
///
/// The running sum is monotone in that cell, but round-to-even can skip `p`
/// entirely; an earlier cell is then moved by a few ulps and the search rerun.
fn fill_block(block: &mut [f64], p: f64, c: &[f64]) {
    for (k, cell) in block.iter_mut().enumerate() {
        *cell = p * c[k];
    }
    let Some(last) = c.iter().rposition(|&v| v > 0.0) else {
        return;
    };
    let head = |b: &[f64]| b[..last].iter().sum::<f64>();
    if let Some(v) = absorb(head(block), p) {
        block[last] = v;
        return;
    }
    for ulps in 1..=8 {
        for k in 0..last {
            let orig = block[k];
            if orig == 0.0 {
                continue;
            }
            for up in [true, false] {
                let mut moved = orig;
                for _ in 0..ulps {
                    moved = if up { moved.next_up() } else { moved.next_down().max(0.0) };
                }
                block[k] = moved;
                if let Some(v) = absorb(head(block), p) {
                    block[last] = v;
                    return;
                }
            }
            block[k] = orig;
        }
    }
    block[last] = (p - head(block)).max(0.0);
}

/// Non-negative `v` with `head + v == p` in floating point, if one exists near `p - head`.
fn absorb(head: f64, p: f64) -> Option<f64> {
    let mut v = (p - head).max(0.0);
    for _ in 0..4 {
        let total = head + v;
        if total == p {
            return Some(v);
        }
        v = (v + (p - total)).max(0.0);
    }
    // Walk towards p one ulp at a time; overshooting means p is skipped.
    let below = head + v < p;
    for _ in 0..64 {
        let total = head + v;
        if total == p {
            return Some(v);
        }
        if (total < p) != below || (!below && v == 0.0) {
            return None;
        }
        v = if below { v.next_up() } else { v.next_down() };
    }
    None
}

/// Joint normal over `(X, Y, Z)` with `cov(X, Z) = cov(X, Y)·cov(Y, Z)/var(Y)`;
/// the remaining moments are copied, those of Y from `p_xy`.
pub fn merge_chain_gaussian(p_xy: &GaussianDist, p_yz: &GaussianDist, tol: f64) -> Result<GaussianDist> {
    let (x, y, z) = chain_roles(&p_xy.vars, &p_yz.vars)?;
    let var_y = p_xy.covariance(y, y)?;
    if var_y <= 0.0 {
        return Err(Error::DegenerateData("var(Y) must be positive".into()));
    }
    let mean = |g: &GaussianDist, v: usize| -> Result<f64> { Ok(g.mean[g.pos(v)?]) };
    let gap = (mean(p_xy, y)? - mean(p_yz, y)?)
        .abs()
        .max((var_y - p_yz.covariance(y, y)?).abs());
    if gap > tol {
        return Err(Error::Inconsistency {
            detail: "Y mean or variance disagree".into(),
            distance: gap,
            tol,
        });
    }
    let (sxy, syz) = (p_xy.covariance(x, y)?, p_yz.covariance(y, z)?);
    let sxz = sxy * syz / var_y;
    let cov = DMatrix::from_row_slice(
        3,
        3,
        &[
            p_xy.covariance(x, x)?,
            sxy,
            sxz,
            sxy,
            var_y,
            syz,
            sxz,
            syz,
            p_yz.covariance(z, z)?,
        ],
    );
    let mean = DVector::from_vec(vec![mean(p_xy, x)?, mean(p_xy, y)?, mean(p_yz, z)?]);
    GaussianDist::new(VariableTuple::new(vec![x, y, z])?, mean, cov)
        .map_err(|e| Error::Inconsistency {
            detail: format!("merged covariance invalid: {e}"),
            distance: f64::NAN,
            tol,
        })
}

/// Either family of distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Distribution {
    Discrete(DiscreteDist),
    Gaussian(GaussianDist),
}

/// Outcome of an exact independence check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiCheck {
    pub holds: bool,
    /// Largest violation found: a probability gap for discrete tables, the
    /// absolute partial correlation for Gaussians.
    pub violation: f64,
    /// True when no conditioning value carried mass, so nothing was checked.
    pub vacuous: bool,
}

/// Whether `dist` satisfies the conditional independence in `q` up to `tol`.
pub fn check_ci_exact(dist: &Distribution, q: &Query, tol: f64) -> Result<CiCheck> {
    let Query::CondIndep { x, y, cond } = q else {
        return Err(Error::query("check_ci_exact needs a cond_indep query"));
    };
    match dist {
        Distribution::Gaussian(g) => Ok(match g.partial_corr(*x, *y, cond)? {
            Some(r) => CiCheck {
                holds: r.abs() <= tol,
                violation: r.abs(),
                vacuous: false,
            },
            None => CiCheck {
                holds: true,
                violation: 0.0,
                vacuous: true,
            },
        }),
        Distribution::Discrete(d) => {
            let mut keep = vec![*x, *y];
            keep.extend(cond);
            let m = d.marginal(&keep)?;
            let (ca, cb) = (m.cards[0], m.cards[1]);
            let cc: usize = m.cards[2..].iter().product();
            let cell = |a: usize, b: usize, c: usize| m.probs[(a * cb + b) * cc + c];
            let mut violation: f64 = 0.0;
            let mut checked = false;
            for c in 0..cc {
                let pc: f64 = (0..ca).flat_map(|a| (0..cb).map(move |b| (a, b))).map(|(a, b)| cell(a, b, c)).sum();
                if pc <= 0.0 {
                    continue;
                }
                checked = true;
                for a in 0..ca {
                    let pa: f64 = (0..cb).map(|b| cell(a, b, c)).sum::<f64>() / pc;
                    for b in 0..cb {
                        let pb: f64 = (0..ca).map(|a2| cell(a2, b, c)).sum::<f64>() / pc;
                        violation = violation.max((cell(a, b, c) / pc - pa * pb).abs());
                    }
                }
            }
            Ok(CiCheck {
                holds: violation <= tol,
                violation,
                vacuous: !checked,
            })
        }
    }
}
