//! Model-induced properties: what a causal model says a statistical test should find.

use crate::error::{Error, Result};
use crate::graph::{Dag, DagIndex, NodeSet};
use crate::model::{CausalModel, PathModel, PathSignModel};
use crate::query::{CiVerdict, Outcome, Query};

/// Conditional independence implied by the Markov condition; dependence otherwise
/// (faithfulness).
pub fn predict_ci(dag: &Dag, q: &Query) -> Result<CiVerdict> {
    let Query::CondIndep { x, y, cond } = q else {
        return Err(Error::query(format!("predict_ci needs a cond_indep query, got {}", q.kind().name())));
    };
    q.check_within(dag.n())?;
    let z = NodeSet::from_nodes(cond.iter().copied());
    Ok(CiVerdict::from_independent(DagIndex::new(dag).separated(*x, *y, z)))
}

/// `+1` if `i ⇝ j`, `-1` if `j ⇝ i`.
pub fn predict_direction(dag: &Dag, i: usize, j: usize) -> Result<Outcome> {
    direction_from(&DagIndex::new(dag), i, j)
}

fn direction_from(index: &DagIndex, i: usize, j: usize) -> Result<Outcome> {
    let n = index.n();
    if i >= n || j >= n {
        return Err(Error::query(format!("pair ({i},{j}) outside 0..{n}")));
    }
    if i == j {
        return Err(Error::query("direction needs two distinct nodes"));
    }
    if index.ancestors(j).contains(i) {
        Ok(Outcome::Sign(1))
    } else if index.ancestors(i).contains(j) {
        Ok(Outcome::Sign(-1))
    } else {
        Err(Error::ModelOutsideClass(format!("no directed path between {i} and {j}")))
    }
}

fn path_interval(n: usize, pos_i: usize, pos_j: usize) -> std::ops::Range<usize> {
    debug_assert!(pos_i < n && pos_j < n);
    pos_i.min(pos_j)..pos_i.max(pos_j)
}

fn check_pair(n: usize, i: usize, j: usize) -> Result<()> {
    if i >= n || j >= n {
        return Err(Error::query(format!("pair ({i},{j}) outside 0..{n}")));
    }
    if i == j {
        return Err(Error::query("pairwise prediction needs two distinct variables"));
    }
    Ok(())
}

/// Sign of `corr(i, j)`: the product of adjacent signs between the two positions.
pub fn predict_sign(model: &PathSignModel, i: usize, j: usize) -> Result<Outcome> {
    check_pair(model.n(), i, j)?;
    let range = path_interval(model.n(), model.position(i), model.position(j));
    let s: i8 = model.adj_sign()[range].iter().product();
    Ok(Outcome::Sign(s))
}

/// `corr(i, j)` as the product of adjacent correlations along the path.
pub fn predict_corr(model: &PathModel, i: usize, j: usize) -> Result<Outcome> {
    check_pair(model.n(), i, j)?;
    let range = path_interval(model.n(), model.position(i), model.position(j));
    Ok(Outcome::Real(model.adj_corr()[range].iter().product()))
}

/// How to read "causally sufficient" for a tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnmReading {
    /// Every common ancestor of two members is itself a member.
    #[default]
    Standard,
    /// No two members have any common ancestor, even one inside the tuple.
    Literal,
}

impl std::str::FromStr for AnmReading {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(AnmReading::Standard),
            "literal" => Ok(AnmReading::Literal),
            other => Err(Error::Config(format!("unknown anm reading {other:?}"))),
        }
    }
}

/// Whether the ordered tuple admits a linear additive noise model in that order:
/// (a) the tuple is causally sufficient under `reading`, and (b) no later member
/// is an ancestor of an earlier one.
pub fn predict_anm_admissible(dag: &Dag, tuple: &[usize], reading: AnmReading) -> Result<Outcome> {
    anm_from(&DagIndex::new(dag), tuple, reading)
}

fn anm_from(index: &DagIndex, tuple: &[usize], reading: AnmReading) -> Result<Outcome> {
    let n = index.n();
    if tuple.len() < 2 {
        return Err(Error::query("anm query needs at least two variables"));
    }
    if tuple.iter().any(|&v| v >= n) {
        return Err(Error::query(format!("tuple {tuple:?} outside 0..{n}")));
    }
    let members = NodeSet::from_nodes(tuple.iter().copied());
    if members.len() != tuple.len() {
        return Err(Error::query(format!("tuple {tuple:?} repeats a variable")));
    }
    let mut admissible = true;
    for (a, &u) in tuple.iter().enumerate() {
        for &v in &tuple[a + 1..] {
            let common = index.ancestors(u).intersection(index.ancestors(v));
            let sufficient = match reading {
                AnmReading::Literal => common.is_empty(),
                AnmReading::Standard => common.0 & !members.0 == 0,
            };
            // v comes later, so it must not be an ancestor of u
            let ordered = !index.ancestors(u).contains(v);
            admissible &= sufficient && ordered;
        }
    }
    Ok(Outcome::Binary(admissible as u8))
}

/// A model prepared for answering many queries.
pub enum Compiled<'a> {
    Graph(DagIndex),
    Path(&'a PathModel, DagIndex),
    PathSign(&'a PathSignModel),
}

impl CausalModel {
    pub fn compile(&self) -> Compiled<'_> {
        match self {
            CausalModel::Dag(d) => Compiled::Graph(DagIndex::new(d)),
            CausalModel::Polytree(p) => Compiled::Graph(DagIndex::new(p.dag())),
            CausalModel::Path(p) => Compiled::Path(p, DagIndex::new(&p.to_dag())),
            CausalModel::PathSign(p) => Compiled::PathSign(p),
        }
    }

    /// The model-induced outcome for `q`.
    pub fn predict(&self, q: &Query) -> Result<Outcome> {
        self.compile().predict(q)
    }
}

impl Compiled<'_> {
    pub fn predict(&self, q: &Query) -> Result<Outcome> {
        match (self, q) {
            (Compiled::Graph(ix) | Compiled::Path(_, ix), Query::CondIndep { x, y, cond }) => {
                q.check_within(ix.n())?;
                let z = NodeSet::from_nodes(cond.iter().copied());
                Ok(CiVerdict::from_independent(ix.separated(*x, *y, z)).into())
            }
            (Compiled::Graph(ix), Query::Direction { from, to }) => direction_from(ix, *from, *to),
            (Compiled::Graph(ix), Query::Anm { tuple }) => anm_from(ix, tuple, AnmReading::Standard),
            (Compiled::Path(p, _), Query::Corr { x, y }) => predict_corr(p, *x, *y),
            (Compiled::Path(p, _), Query::Sign { x, y }) => {
                let r = predict_corr(p, *x, *y)?.value();
                Ok(Outcome::Sign(if r < 0.0 { -1 } else { 1 }))
            }
            (Compiled::PathSign(p), Query::Sign { x, y }) => predict_sign(p, *x, *y),
            (_, q) => Err(Error::ModelOutsideClass(format!(
                "this model class does not answer {} queries",
                q.kind().name()
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain3() -> Dag {
        Dag::new(3, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn ci_predictions() {
        let chain = chain3();
        let q = Query::cond_indep(0, 2, vec![1]).unwrap();
        assert_eq!(predict_ci(&chain, &q).unwrap(), CiVerdict::Independent);
        assert_eq!(Outcome::from(predict_ci(&chain, &q).unwrap()), Outcome::Binary(0));
        let adjacent = Query::cond_indep(0, 1, vec![]).unwrap();
        assert_eq!(predict_ci(&chain, &adjacent).unwrap().code(), 1);
        let collider = Dag::new(3, [(0, 1), (2, 1)]).unwrap();
        assert_eq!(predict_ci(&collider, &q).unwrap(), CiVerdict::Dependent);
        assert!(matches!(predict_ci(&chain, &Query::sign(0, 1).unwrap()), Err(Error::Query(_))));
        assert!(predict_ci(&chain, &Query::cond_indep(0, 5, vec![]).unwrap()).is_err());
    }

    #[test]
    fn direction_predictions() {
        let chain = chain3();
        assert_eq!(predict_direction(&chain, 0, 2).unwrap(), Outcome::Sign(1));
        assert_eq!(predict_direction(&chain, 2, 0).unwrap(), Outcome::Sign(-1));
        let isolated = Dag::empty(2).unwrap();
        assert!(matches!(predict_direction(&isolated, 0, 1), Err(Error::ModelOutsideClass(_))));
    }

    #[test]
    fn sign_predictions() {
        let id = |s: Vec<i8>| PathSignModel::new(vec![0, 1, 2], s).unwrap();
        assert_eq!(predict_sign(&id(vec![1, -1]), 0, 2).unwrap(), Outcome::Sign(-1));
        assert_eq!(predict_sign(&id(vec![-1, -1]), 0, 2).unwrap(), Outcome::Sign(1));
        let m = PathSignModel::new(vec![2, 0, 1], vec![1, 1]).unwrap();
        assert_eq!(predict_sign(&m, 2, 1).unwrap(), Outcome::Sign(1));
        assert!(predict_sign(&m, 1, 1).is_err());
    }

    #[test]
    fn corr_predictions() {
        let m = PathModel::new(vec![0, 1, 2, 3], vec![0.5, -0.5, 0.8]).unwrap();
        let v = predict_corr(&m, 0, 3).unwrap().value();
        assert!((v - (-0.2)).abs() < 1e-15);
        assert_eq!(predict_corr(&m, 1, 2).unwrap(), Outcome::Real(-0.5));
        assert_eq!(predict_corr(&m, 3, 0).unwrap(), predict_corr(&m, 0, 3).unwrap());
        assert!(predict_corr(&m, 2, 2).is_err());
    }

    #[test]
    fn anm_admissibility() {
        let chain = chain3();
        for reading in [AnmReading::Standard, AnmReading::Literal] {
            assert_eq!(predict_anm_admissible(&chain, &[0, 1], reading).unwrap(), Outcome::Binary(1));
            assert_eq!(predict_anm_admissible(&chain, &[1, 0], reading).unwrap(), Outcome::Binary(0));
        }
        assert_eq!(
            predict_anm_admissible(&chain, &[0, 1, 2], AnmReading::Standard).unwrap(),
            Outcome::Binary(1)
        );
        // 0 is an ancestor of both 1 and 2; the literal reading forbids it even inside the tuple
        assert_eq!(
            predict_anm_admissible(&chain, &[0, 1, 2], AnmReading::Literal).unwrap(),
            Outcome::Binary(0)
        );
        let fork = Dag::new(3, [(0, 1), (0, 2)]).unwrap();
        for reading in [AnmReading::Standard, AnmReading::Literal] {
            assert_eq!(predict_anm_admissible(&fork, &[1, 2], reading).unwrap(), Outcome::Binary(0));
        }
        assert!(matches!("strict".parse::<AnmReading>(), Err(Error::Config(_))));
    }

    #[test]
    fn model_dispatch() {
        let path = CausalModel::Path(PathModel::new(vec![0, 1, 2], vec![0.5, -0.5]).unwrap());
        assert_eq!(path.predict(&Query::sign(0, 2).unwrap()).unwrap(), Outcome::Sign(-1));
        assert_eq!(
            path.predict(&Query::cond_indep(0, 2, vec![1]).unwrap()).unwrap(),
            Outcome::Binary(0)
        );
        assert!(matches!(
            path.predict(&Query::direction(0, 1).unwrap()),
            Err(Error::ModelOutsideClass(_))
        ));
        let dag = CausalModel::Dag(chain3());
        assert!(matches!(dag.predict(&Query::corr(0, 1).unwrap()), Err(Error::ModelOutsideClass(_))));
    }
}
