//! VC-dimension upper bounds per model class, the generalization deviation
//! terms, sample-size inversion and the test-count curves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether the binary deviation term keeps its leading factor 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Full,
    SqrtOnly,
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Variant::Full),
            "sqrt_only" => Ok(Variant::SqrtOnly),
            _ => Err(Error::input(format!("unknown bound variant {s:?} (full, sqrt_only)"))),
        }
    }
}

/// Inputs of a deviation bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSpec {
    /// Number of datasets.
    pub k: u64,
    /// VC dimension; not rounded.
    pub h: f64,
    pub eta: f64,
    /// Output range `[A, B]` of a real-valued property.
    #[serde(default = "unit_range")]
    pub range: (f64, f64),
    #[serde(default)]
    pub variant: Variant,
}

fn unit_range() -> (f64, f64) {
    (0.0, 1.0)
}

impl BoundSpec {
    pub fn new(k: u64, h: f64, eta: f64) -> Self {
        BoundSpec {
            k,
            h,
            eta,
            range: unit_range(),
            variant: Variant::Full,
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_range(mut self, a: f64, b: f64) -> Self {
        self.range = (a, b);
        self
    }

    /// Fewer datasets than the VC dimension; the bound is then usually vacuous.
    pub fn k_below_h(&self) -> bool {
        (self.k as f64) < self.h
    }

    fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::input("k must be at least 1"));
        }
        if !(self.h >= 1.0 && self.h.is_finite()) {
            return Err(Error::input(format!("h = {} must be a finite number >= 1", self.h)));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::input(format!("eta = {} outside (0, 1)", self.eta)));
        }
        Ok(())
    }
}

fn sqrt_term(numerator: f64, k: f64) -> Result<f64> {
    if numerator < 0.0 {
        return Err(Error::input("k is too small relative to h: the bound's radicand is negative"));
    }
    Ok((numerator / k).sqrt())
}

/// `2·sqrt((h(ln(2k/h) + 1) − ln(η/9)) / k)`; the `sqrt_only` variant drops the 2.
pub fn binary_bound(bs: &BoundSpec) -> Result<f64> {
    bs.validate()?;
    let (k, h) = (bs.k as f64, bs.h);
    let s = sqrt_term(h * ((2.0 * k / h).ln() + 1.0) - (bs.eta / 9.0).ln(), k)?;
    Ok(match bs.variant {
        Variant::Full => 2.0 * s,
        Variant::SqrtOnly => s,
    })
}

/// `(B − A)·sqrt((h(ln(k/h) + 1) − ln(η/4)) / k)` for `[A, B]`-valued properties.
pub fn real_bound(bs: &BoundSpec) -> Result<f64> {
    bs.validate()?;
    let (a, b) = bs.range;
    if !(a < b && (b - a).is_finite()) {
        return Err(Error::input(format!("range [{a}, {b}] needs A < B")));
    }
    let (k, h) = (bs.k as f64, bs.h);
    Ok((b - a) * sqrt_term(h * ((k / h).ln() + 1.0) - (bs.eta / 4.0).ln(), k)?)
}

/// Smallest `k ≥ ceil(h)` with `binary_bound(k) ≤ epsilon`.
///
/// The bound decreases in `k` on that domain, so exponential bracketing and
/// bisection find the threshold; the answer is re-checked against its neighbour.
pub fn required_k(h: f64, eta: f64, epsilon: f64, variant: Variant) -> Result<u64> {
    if !(epsilon > 0.0) {
        return Err(Error::input(format!("epsilon = {epsilon} must be positive")));
    }
    let bound = |k: u64| binary_bound(&BoundSpec::new(k, h, eta).with_variant(variant));
    let lo_k = (h.ceil() as u64).max(1);
    if bound(lo_k)? <= epsilon {
        return Ok(lo_k);
    }
    // bound(lo) > epsilon >= bound(hi)
    let mut lo = lo_k;
    let mut hi = lo_k;
    loop {
        hi = match hi.checked_mul(2) {
            Some(v) if v <= 1 << 63 => v,
            _ => return Err(Error::Divergence(format!("no k below 2^63 reaches epsilon = {epsilon}"))),
        };
        if bound(hi)? <= epsilon {
            break;
        }
        lo = hi;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if bound(mid)? <= epsilon {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    debug_assert!(bound(hi)? <= epsilon && bound(hi - 1)? > epsilon);
    Ok(hi)
}

/// A model class together with its size parameter, for capacity formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum ClassSpec {
    Dag { n: usize },
    Polytree { n: usize },
    PathSign { n: usize },
    PathCorr { n: usize, h_override: Option<f64> },
    Direction { n: usize },
}

impl ClassSpec {
    pub fn n(&self) -> usize {
        match *self {
            ClassSpec::Dag { n }
            | ClassSpec::Polytree { n }
            | ClassSpec::PathSign { n }
            | ClassSpec::PathCorr { n, .. }
            | ClassSpec::Direction { n } => n,
        }
    }
}

/// Upper bound on the VC dimension of a class.
///
/// | class | bound |
/// |---|---|
/// | dag | `n·log₂n + n(n−1)/2` |
/// | polytree | `n(log₂n + 1)` |
/// | path_sign | `n` |
/// | path_corr | `h_override`, default `4(n+1)` |
/// | direction | `n − 1` |
pub fn vc_upper(cs: &ClassSpec) -> f64 {
    let nf = cs.n() as f64;
    match *cs {
        ClassSpec::Dag { .. } => nf * nf.log2() + nf * (nf - 1.0) / 2.0,
        ClassSpec::Polytree { .. } => nf * (nf.log2() + 1.0),
        ClassSpec::PathSign { .. } => nf,
        ClassSpec::PathCorr { h_override, .. } => h_override.unwrap_or(4.0 * (nf + 1.0)),
        ClassSpec::Direction { .. } => nf - 1.0,
    }
}

/// Number of conditional-independence triples `(a, b | c)` with unordered `{a, b}`.
pub fn possible_tests(n: u64) -> u64 {
    n * n.saturating_sub(1) * n.saturating_sub(2) / 2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Figure1Row {
    pub n: usize,
    pub required_k: u64,
    pub possible_tests: u64,
    pub ratio: f64,
}

/// Required dataset count against available triples for `n` in `n_min..=n_max`,
/// using the polytree capacity `n(log₂n + 1)`.
pub fn figure1_curves(n_min: usize, n_max: usize, eta: f64, epsilon: f64, variant: Variant) -> Result<Vec<Figure1Row>> {
    if n_min < 3 || n_min > n_max {
        return Err(Error::input(format!("n range {n_min}..{n_max} must satisfy 3 <= n_min <= n_max")));
    }
    (n_min..=n_max)
        .map(|n| {
            let h = vc_upper(&ClassSpec::Polytree { n });
            let required_k = required_k(h, eta, epsilon, variant)?;
            let possible = possible_tests(n as u64);
            Ok(Figure1Row {
                n,
                required_k,
                possible_tests: possible,
                ratio: required_k as f64 / possible as f64,
            })
        })
        .collect()
}

/// Both variants side by side, one row per `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Figure1CsvRow {
    pub n: usize,
    pub required_k_full: u64,
    pub required_k_sqrt_only: u64,
    pub possible_tests: u64,
    pub ratio_full: f64,
    pub ratio_sqrt_only: f64,
}

pub fn figure1_table(n_min: usize, n_max: usize, eta: f64, epsilon: f64) -> Result<Vec<Figure1CsvRow>> {
    let full = figure1_curves(n_min, n_max, eta, epsilon, Variant::Full)?;
    let half = figure1_curves(n_min, n_max, eta, epsilon, Variant::SqrtOnly)?;
    Ok(full
        .iter()
        .zip(&half)
        .map(|(f, s)| Figure1CsvRow {
            n: f.n,
            required_k_full: f.required_k,
            required_k_sqrt_only: s.required_k,
            possible_tests: f.possible_tests,
            ratio_full: f.ratio,
            ratio_sqrt_only: s.ratio,
        })
        .collect())
}

/// Writes the table as CSV with a header row.
pub fn write_figure1_csv<W: std::io::Write>(rows: &[Figure1CsvRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::input(e.to_string());
    w.write_record(["n", "required_k_full", "required_k_sqrt_only", "possible_tests", "ratio_full", "ratio_sqrt_only"])
        .map_err(err)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.required_k_full.to_string(),
            r.required_k_sqrt_only.to_string(),
            r.possible_tests.to_string(),
            crate::json::format_f64(r.ratio_full),
            crate::json::format_f64(r.ratio_sqrt_only),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::input(e.to_string()))
}
