//! Individual-fairness auditing of black-box classifiers through weighted
//! argumentation.
//!
//! For a queried individual and its `k` Hamming-nearest neighbours, every
//! attribute-value pair becomes an argument. Pairs held by differently
//! classified neighbours attack the queried individual's differing pairs,
//! weighted by the share of neighbours voting for the attack. The weighted
//! h-Categorizer then ranks the arguments, and the weakest ones explain why
//! the individual is treated differently from similar people.

pub mod audit;
pub mod classifier;
pub mod config;
pub mod dataset;
pub mod dot;
pub mod error;
pub mod exec;
pub mod graph;
pub mod semantics;
pub mod similarity;

pub use audit::{
    audit_against, audit_batch, explain, explain_row, inject_bias, verify_bias_experiment,
    AuditConfig, AuditReport, BiasCheck, RowExplanation,
};
pub use classifier::{LabelAssignment, LogRegModel, Provenance, TrainingParams};
pub use dataset::{Attribute, Dataset, Individual, Label, Schema};
pub use error::{Error, Result};
pub use exec::Execution;
pub use graph::{Argument, Polarity, WeightedArgGraph};
pub use semantics::{extract_explanation, hbs_converge, Explanation, FinalWeights, Hundredths};
pub use similarity::{hamming, k_nearest, NeighborSet};
