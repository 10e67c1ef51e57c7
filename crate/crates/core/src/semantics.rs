//! Gradual semantics over weighted argumentation graphs.
//!
//! The weighted h-Categorizer updates every argument synchronously:
//!
//! ```text
//! s(a)^(1)   = σ(a)
//! s(a)^(n+1) = σ(a) / (1 + Σ_{b attacks a} π(b, a) · s(b)^(n))
//! ```
//!
//! and the sequence is cut once no argument moves by `epsilon` or more in a
//! single step.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Argument, WeightedArgGraph};

pub const DEFAULT_EPSILON: f64 = 0.01;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Approximate final weights, aligned with `graph.arguments()`.
#[derive(Clone, Debug, PartialEq)]
pub struct FinalWeights {
    pub weights: Vec<f64>,
    /// Number of update steps taken.
    pub iterations: usize,
    pub epsilon: f64,
    pub converged: bool,
}

/// Evaluates a graph to per-argument final weights.
pub trait GradualSemantics {
    fn evaluate(&self, graph: &WeightedArgGraph) -> Result<FinalWeights>;
}

/// Weighted h-Categorizer with a max-norm stopping rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HCategorizer {
    pub epsilon: f64,
    pub max_iter: usize,
}

impl Default for HCategorizer {
    fn default() -> Self {
        HCategorizer {
            epsilon: DEFAULT_EPSILON,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

impl GradualSemantics for HCategorizer {
    fn evaluate(&self, graph: &WeightedArgGraph) -> Result<FinalWeights> {
        hbs_converge(graph, self.epsilon, self.max_iter)
    }
}

/// One synchronous update of `current` into `next`. Returns the largest
/// absolute change.
pub fn hbs_step(graph: &WeightedArgGraph, current: &[f64], next: &mut [f64]) -> f64 {
    let sigma = graph.initial_weights();
    let mut delta: f64 = 0.0;
    for (a, slot) in next.iter_mut().enumerate() {
        let damage: f64 = graph
            .incoming(a)
            .iter()
            .map(|&(b, strength)| strength * current[b])
            .sum();
        *slot = sigma[a] / (1.0 + damage);
        delta = delta.max((*slot - current[a]).abs());
    }
    delta
}

pub fn hbs_converge(
    graph: &WeightedArgGraph,
    epsilon: f64,
    max_iter: usize,
) -> Result<FinalWeights> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::Parameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if max_iter == 0 {
        return Err(Error::Parameter("max_iter must be positive".into()));
    }
    let mut current = graph.initial_weights().to_vec();
    let mut next = vec![0.0; current.len()];
    let mut delta = f64::INFINITY;
    for iteration in 1..=max_iter {
        delta = hbs_step(graph, &current, &mut next);
        std::mem::swap(&mut current, &mut next);
        if delta < epsilon {
            return Ok(FinalWeights {
                weights: current,
                iterations: iteration,
                epsilon,
                converged: true,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        last_delta: delta,
        last: current,
    })
}

/// Weight rounded to two decimals, held as integer hundredths so that ties
/// are exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Hundredths(pub u32);

impl Hundredths {
    pub fn from_weight(w: f64) -> Self {
        Hundredths((w * 100.0).round().max(0.0) as u32)
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / 100.0
    }

    pub const ONE: Hundredths = Hundredths(100);
}

impl std::fmt::Display for Hundredths {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

/// The weakest arguments of a converged graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Explanation {
    /// Arguments attaining the minimum rounded weight; empty when consistent.
    pub weakest: Vec<Argument>,
    /// Every rounded weight equals 1.00.
    pub consistent: bool,
    /// Rounded weights aligned with `graph.arguments()`.
    pub rounded: Vec<Hundredths>,
}

pub fn extract_explanation(graph: &WeightedArgGraph, fw: &FinalWeights) -> Explanation {
    debug_assert!(fw.converged);
    let rounded: Vec<Hundredths> = fw
        .weights
        .iter()
        .map(|&w| Hundredths::from_weight(w))
        .collect();
    let min = rounded.iter().copied().min().unwrap_or(Hundredths::ONE);
    if min >= Hundredths::ONE {
        return Explanation {
            weakest: Vec::new(),
            consistent: true,
            rounded,
        };
    }
    let weakest = graph
        .arguments()
        .iter()
        .zip(&rounded)
        .filter(|(_, &r)| r == min)
        .map(|(&a, _)| a)
        .collect();
    Explanation {
        weakest,
        consistent: false,
        rounded,
    }
}
