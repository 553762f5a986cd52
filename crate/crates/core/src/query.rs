//! Queries about variable tuples and their outcomes.
//!
//! Wire format of a query:
//! `{"kind": "cond_indep"|"sign"|"corr"|"direction"|"anm", "vars": [...], "cond": [...]}`.
//! A labeled query adds `"outcome": <number>`, whose type follows from the kind.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeSet, MAX_NODES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    CondIndep,
    Sign,
    Corr,
    Direction,
    Anm,
}

impl QueryKind {
    pub fn outcome_type(self) -> OutcomeType {
        match self {
            QueryKind::CondIndep | QueryKind::Anm => OutcomeType::Binary,
            QueryKind::Sign | QueryKind::Direction => OutcomeType::Sign,
            QueryKind::Corr => OutcomeType::Real,
        }
    }

    pub fn is_binary(self) -> bool {
        self.outcome_type() != OutcomeType::Real
    }

    pub fn name(self) -> &'static str {
        match self {
            QueryKind::CondIndep => "cond_indep",
            QueryKind::Sign => "sign",
            QueryKind::Corr => "corr",
            QueryKind::Direction => "direction",
            QueryKind::Anm => "anm",
        }
    }
}

impl std::str::FromStr for QueryKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "cond_indep" => QueryKind::CondIndep,
            "sign" => QueryKind::Sign,
            "corr" => QueryKind::Corr,
            "direction" => QueryKind::Direction,
            "anm" => QueryKind::Anm,
            other => return Err(Error::input(format!("unknown query kind {other:?}"))),
        })
    }
}

/// A statistical-property question about a partly ordered variable tuple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "QueryJson", into = "QueryJson")]
pub enum Query {
    /// `x ⫫ y | cond`; unordered in `{x, y}` and within `cond`.
    CondIndep { x: usize, y: usize, cond: Vec<usize> },
    /// Sign of `corr(x, y)`; unordered pair.
    Sign { x: usize, y: usize },
    /// Value of `corr(x, y)`; unordered pair.
    Corr { x: usize, y: usize },
    /// Causal direction between an ordered pair.
    Direction { from: usize, to: usize },
    /// Whether the ordered tuple admits a linear additive noise model in that order.
    Anm { tuple: Vec<usize> },
}

impl Query {
    pub fn cond_indep(x: usize, y: usize, cond: impl Into<Vec<usize>>) -> Result<Self> {
        Query::CondIndep { x, y, cond: cond.into() }.validated()
    }

    pub fn sign(x: usize, y: usize) -> Result<Self> {
        Query::Sign { x, y }.validated()
    }

    pub fn corr(x: usize, y: usize) -> Result<Self> {
        Query::Corr { x, y }.validated()
    }

    pub fn direction(from: usize, to: usize) -> Result<Self> {
        Query::Direction { from, to }.validated()
    }

    pub fn anm(tuple: impl Into<Vec<usize>>) -> Result<Self> {
        Query::Anm { tuple: tuple.into() }.validated()
    }

    fn validated(self) -> Result<Self> {
        let vars = self.variables();
        if vars.iter().any(|&v| v >= MAX_NODES) {
            return Err(Error::query(format!("variable index beyond {MAX_NODES}")));
        }
        if NodeSet::from_nodes(vars.iter().copied()).len() != vars.len() {
            return Err(Error::query(format!("repeated variable in {vars:?}")));
        }
        if let Query::Anm { tuple } = &self {
            if tuple.len() < 2 {
                return Err(Error::query("anm query needs at least two variables"));
            }
        }
        Ok(self)
    }

    pub fn kind(&self) -> QueryKind {
        match self {
            Query::CondIndep { .. } => QueryKind::CondIndep,
            Query::Sign { .. } => QueryKind::Sign,
            Query::Corr { .. } => QueryKind::Corr,
            Query::Direction { .. } => QueryKind::Direction,
            Query::Anm { .. } => QueryKind::Anm,
        }
    }

    /// Every variable the query touches, in tuple order.
    pub fn variables(&self) -> Vec<usize> {
        match self {
            Query::CondIndep { x, y, cond } => {
                let mut v = vec![*x, *y];
                v.extend_from_slice(cond);
                v
            }
            Query::Sign { x, y } | Query::Corr { x, y } => vec![*x, *y],
            Query::Direction { from, to } => vec![*from, *to],
            Query::Anm { tuple } => tuple.clone(),
        }
    }

    /// Rejects queries that reference variables outside `0..n`.
    pub fn check_within(&self, n: usize) -> Result<()> {
        let (pair, rest): ([usize; 2], &[usize]) = match self {
            Query::CondIndep { x, y, cond } => ([*x, *y], cond),
            Query::Sign { x, y } | Query::Corr { x, y } => ([*x, *y], &[]),
            Query::Direction { from, to } => ([*from, *to], &[]),
            Query::Anm { tuple } => ([0, 0], tuple),
        };
        match pair.iter().chain(rest).copied().find(|&v| v >= n) {
            Some(v) => Err(Error::query(format!("variable {v} outside 0..{n}"))),
            None => Ok(()),
        }
    }

    /// Normal form: unordered parts sorted. Two queries with the same normal
    /// form ask the same question.
    pub fn canonical(&self) -> Query {
        match self {
            Query::CondIndep { x, y, cond } => {
                let mut cond = cond.clone();
                cond.sort_unstable();
                Query::CondIndep {
                    x: *x.min(y),
                    y: *x.max(y),
                    cond,
                }
            }
            Query::Sign { x, y } => Query::Sign {
                x: *x.min(y),
                y: *x.max(y),
            },
            Query::Corr { x, y } => Query::Corr {
                x: *x.min(y),
                y: *x.max(y),
            },
            q => q.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct QueryJson {
    kind: QueryKind,
    vars: Vec<usize>,
    #[serde(default)]
    cond: Vec<usize>,
}

impl TryFrom<QueryJson> for Query {
    type Error = Error;

    fn try_from(q: QueryJson) -> Result<Self> {
        let pair = |kind: &str| -> Result<(usize, usize)> {
            if q.vars.len() != 2 || !q.cond.is_empty() {
                return Err(Error::query(format!("{kind} query needs exactly two vars and no cond")));
            }
            Ok((q.vars[0], q.vars[1]))
        };
        match q.kind {
            QueryKind::CondIndep => {
                if q.vars.len() < 2 {
                    return Err(Error::query("cond_indep query needs at least two vars"));
                }
                let mut cond = q.vars[2..].to_vec();
                cond.extend_from_slice(&q.cond);
                Query::cond_indep(q.vars[0], q.vars[1], cond)
            }
            QueryKind::Sign => pair("sign").and_then(|(x, y)| Query::sign(x, y)),
            QueryKind::Corr => pair("corr").and_then(|(x, y)| Query::corr(x, y)),
            QueryKind::Direction => pair("direction").and_then(|(x, y)| Query::direction(x, y)),
            QueryKind::Anm => {
                if !q.cond.is_empty() {
                    return Err(Error::query("anm query takes no cond"));
                }
                Query::anm(q.vars)
            }
        }
    }
}

impl From<Query> for QueryJson {
    fn from(q: Query) -> Self {
        let kind = q.kind();
        match q {
            Query::CondIndep { x, y, cond } => QueryJson {
                kind,
                vars: vec![x, y],
                cond,
            },
            other => QueryJson {
                kind,
                vars: other.variables(),
                cond: Vec::new(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeType {
    Binary,
    Sign,
    Real,
}

/// The value of a property: `{0,1}`, `{-1,+1}` or a real number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Binary(u8),
    Sign(i8),
    Real(f64),
}

impl Outcome {
    pub fn outcome_type(self) -> OutcomeType {
        match self {
            Outcome::Binary(_) => OutcomeType::Binary,
            Outcome::Sign(_) => OutcomeType::Sign,
            Outcome::Real(_) => OutcomeType::Real,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Outcome::Binary(b) => b as f64,
            Outcome::Sign(s) => s as f64,
            Outcome::Real(r) => r,
        }
    }

    /// Interprets a raw number as an outcome for `kind`.
    pub fn for_kind(kind: QueryKind, value: f64) -> Result<Self> {
        match kind.outcome_type() {
            OutcomeType::Binary if value == 0.0 || value == 1.0 => Ok(Outcome::Binary(value as u8)),
            OutcomeType::Sign if value == 1.0 || value == -1.0 => Ok(Outcome::Sign(value as i8)),
            OutcomeType::Real if kind == QueryKind::Corr && !(-1.0..=1.0).contains(&value) => {
                Err(Error::input(format!("correlation {value} outside [-1, 1]")))
            }
            OutcomeType::Real if value.is_finite() => Ok(Outcome::Real(value)),
            _ => Err(Error::input(format!("{value} is not a valid {} outcome", kind.name()))),
        }
    }

    /// Loss contribution of predicting `self` when `observed` was measured:
    /// 0/1 for binary and sign outcomes, absolute difference for reals.
    pub fn deviation(self, observed: Outcome) -> Result<f64> {
        match (self, observed) {
            (Outcome::Binary(a), Outcome::Binary(b)) => Ok((a != b) as u8 as f64),
            (Outcome::Sign(a), Outcome::Sign(b)) => Ok((a != b) as u8 as f64),
            (Outcome::Real(a), Outcome::Real(b)) => Ok((a - b).abs()),
            (a, b) => Err(Error::query(format!("cannot compare outcomes {a:?} and {b:?}"))),
        }
    }
}

impl Serialize for Outcome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Outcome::Binary(b) => s.serialize_u8(b),
            Outcome::Sign(v) => s.serialize_i8(v),
            Outcome::Real(r) => s.serialize_f64(r),
        }
    }
}

/// Conditional-independence verdict. Encoded as 0 for independence and 1 for dependence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiVerdict {
    Independent,
    Dependent,
}

impl CiVerdict {
    pub fn code(self) -> u8 {
        match self {
            CiVerdict::Independent => 0,
            CiVerdict::Dependent => 1,
        }
    }

    pub fn from_independent(independent: bool) -> Self {
        if independent {
            CiVerdict::Independent
        } else {
            CiVerdict::Dependent
        }
    }
}

impl From<CiVerdict> for Outcome {
    fn from(v: CiVerdict) -> Outcome {
        Outcome::Binary(v.code())
    }
}

/// A query together with the outcome a statistical test produced for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LabeledJson", into = "LabeledJson")]
pub struct LabeledQuery {
    pub query: Query,
    pub outcome: Outcome,
}

impl LabeledQuery {
    pub fn new(query: Query, outcome: Outcome) -> Result<Self> {
        if query.kind().outcome_type() != outcome.outcome_type() {
            return Err(Error::query(format!(
                "outcome {outcome:?} does not fit a {} query",
                query.kind().name()
            )));
        }
        Outcome::for_kind(query.kind(), outcome.value())?;
        Ok(LabeledQuery { query, outcome })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LabeledJson {
    #[serde(flatten)]
    query: QueryJson,
    outcome: f64,
}

impl TryFrom<LabeledJson> for LabeledQuery {
    type Error = Error;
    fn try_from(l: LabeledJson) -> Result<Self> {
        let query = Query::try_from(l.query)?;
        let outcome = Outcome::for_kind(query.kind(), l.outcome)?;
        Ok(LabeledQuery { query, outcome })
    }
}

impl From<LabeledQuery> for LabeledJson {
    fn from(l: LabeledQuery) -> Self {
        LabeledJson {
            query: l.query.into(),
            outcome: l.outcome.value(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_json() {
        let q: Query = serde_json::from_str(r#"{"kind":"cond_indep","vars":[2,0],"cond":[1]}"#).unwrap();
        assert_eq!(q, Query::CondIndep { x: 2, y: 0, cond: vec![1] });
        let long: Query = serde_json::from_str(r#"{"kind":"cond_indep","vars":[2,0,1]}"#).unwrap();
        assert_eq!(long, q);
        assert_eq!(
            serde_json::to_string(&q).unwrap(),
            r#"{"kind":"cond_indep","vars":[2,0],"cond":[1]}"#
        );
        assert!(serde_json::from_str::<Query>(r#"{"kind":"sign","vars":[1,2,3]}"#).is_err());
        assert!(serde_json::from_str::<Query>(r#"{"kind":"corr","vars":[1,1]}"#).is_err());
        assert!(serde_json::from_str::<Query>(r#"{"kind":"anm","vars":[1]}"#).is_err());
        assert!(serde_json::from_str::<Query>(r#"{"kind":"cond_indep","vars":[0,1],"cond":[1]}"#).is_err());
    }

    #[test]
    fn labeled_json() {
        let l: LabeledQuery = serde_json::from_str(r#"{"kind":"direction","vars":[0,1],"outcome":-1}"#).unwrap();
        assert_eq!(l.outcome, Outcome::Sign(-1));
        assert!(serde_json::from_str::<LabeledQuery>(r#"{"kind":"direction","vars":[0,1],"outcome":0}"#).is_err());
        assert!(serde_json::from_str::<LabeledQuery>(r#"{"kind":"corr","vars":[0,1],"outcome":1.5}"#).is_err());
        let s = serde_json::to_string(&l).unwrap();
        assert_eq!(serde_json::from_str::<LabeledQuery>(&s).unwrap(), l);
    }

    #[test]
    fn deviations() {
        assert_eq!(Outcome::Sign(1).deviation(Outcome::Sign(-1)).unwrap(), 1.0);
        assert_eq!(Outcome::Binary(1).deviation(Outcome::Binary(1)).unwrap(), 0.0);
        assert!((Outcome::Real(0.5).deviation(Outcome::Real(-0.25)).unwrap() - 0.75).abs() < 1e-15);
        assert!(Outcome::Real(0.5).deviation(Outcome::Sign(1)).is_err());
    }

    #[test]
    fn canonical_form() {
        let a = Query::cond_indep(3, 1, vec![4, 0]).unwrap();
        let b = Query::cond_indep(1, 3, vec![0, 4]).unwrap();
        assert_eq!(a.canonical(), b.canonical());
        let d = Query::direction(3, 1).unwrap();
        assert_eq!(d.canonical(), d);
    }

    #[test]
    fn ci_codes() {
        assert_eq!(Outcome::from(CiVerdict::Independent), Outcome::Binary(0));
        assert_eq!(Outcome::from(CiVerdict::Dependent), Outcome::Binary(1));
    }
}
