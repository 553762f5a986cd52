//! Causal models as predictors for statistical properties of variable subsets
//! that were never observed together.
//!
//! Graphs, queries and model classes live in [`graph`], [`query`] and [`model`];
//! [`predict`] turns a model into outcomes, [`stats`] turns data into outcomes,
//! and [`search`] fits models to labeled queries. [`bounds`] and [`shatter`]
//! cover the capacity side, [`merge`] glues overlapping marginals, [`synth`]
//! generates ground truth and [`experiment`] ties everything together.

pub mod bounds;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod json;
pub mod merge;
pub mod model;
pub mod predict;
pub mod query;
pub mod search;
pub mod shatter;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{d_separated, is_acyclic, Dag, NodeSet, Polytree, VariableTuple};
pub use model::{enumerate_models, CausalModel, ModelClass, PathModel, PathSignModel};
pub use query::{CiVerdict, LabeledQuery, Outcome, Query, QueryKind};
pub use dataset::Dataset;
