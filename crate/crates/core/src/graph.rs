//! Weighted argumentation graph built from a queried individual and its
//! nearest neighbours.
//!
//! Arguments are the distinct attribute-value pairs occurring in the queried
//! individual or any neighbour, each with initial weight 1. A neighbour whose
//! classification differs from the queried individual's lets every one of its
//! pairs attack each queried pair on whose attribute the two disagree. An
//! attack's strength is the fraction of the `k` neighbours that cast that
//! vote.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::classifier::LabelAssignment;
use crate::dataset::{Dataset, Individual, Label, Schema};
use crate::error::{Error, Result};
use crate::similarity::NeighborSet;

/// Which classification of the queried individual is being explained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    #[default]
    #[serde(rename = "neg")]
    Negative,
    #[serde(rename = "pos")]
    Positive,
}

impl Polarity {
    pub fn audited_label(self) -> Label {
        match self {
            Polarity::Negative => Label::Negative,
            Polarity::Positive => Label::Positive,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Polarity::Negative => "negative",
            Polarity::Positive => "positive",
        }
    }
}

impl std::str::FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neg" | "negative" | "-" => Ok(Polarity::Negative),
            "pos" | "positive" | "+" => Ok(Polarity::Positive),
            other => Err(Error::Parameter(format!("unknown polarity {other:?}"))),
        }
    }
}

/// An attribute-value pair, by schema attribute index and value code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Argument {
    pub attribute: usize,
    pub value: u32,
}

impl Argument {
    pub fn name<'s>(&self, schema: &'s Schema) -> (&'s str, &'s str) {
        let a = schema.attribute(self.attribute);
        (a.name.as_str(), a.value(self.value))
    }

    pub fn display(&self, schema: &Schema) -> String {
        let (a, v) = self.name(schema);
        format!("({a}, {v})")
    }
}

/// A directed attack between two argument indices of a graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Attack {
    pub attacker: usize,
    pub target: usize,
    /// Number of neighbours voting for this attack; strength is `votes / k`.
    pub votes: usize,
}

/// The queried individual together with its labelled neighbours.
#[derive(Clone, Debug)]
pub struct Neighborhood<'a> {
    pub query: &'a Individual,
    pub query_label: Label,
    pub neighbors: Vec<(&'a Individual, Label)>,
}

impl<'a> Neighborhood<'a> {
    /// Resolves a neighbour set against the pool it was drawn from.
    pub fn gather(
        set: &'a NeighborSet,
        pool: &'a Dataset,
        labels: &LabelAssignment,
        query_label: Label,
    ) -> Result<Self> {
        labels.check_covers(pool)?;
        let neighbors = set
            .neighbors
            .iter()
            .map(|n| {
                let label = labels
                    .get(n.index)
                    .ok_or_else(|| Error::Coverage(format!("row {} has no label", n.index)))?;
                Ok((pool.row(n.index), label))
            })
            .collect::<Result<_>>()?;
        Ok(Neighborhood {
            query: &set.query,
            query_label,
            neighbors,
        })
    }

    pub fn k(&self) -> usize {
        self.neighbors.len()
    }
}

/// `⟨A, σ, R, π⟩` with π stored as integer votes over `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedArgGraph {
    arguments: Vec<Argument>,
    initial_weights: Vec<f64>,
    attacks: Vec<Attack>,
    k: usize,
    /// Incoming attacks per argument as `(attacker, strength)`.
    incoming: Vec<Vec<(usize, f64)>>,
}

impl WeightedArgGraph {
    /// Assembles a graph directly. Attack endpoints must index `arguments`
    /// and votes must lie in `1..=k`.
    pub fn new(
        arguments: Vec<Argument>,
        initial_weights: Vec<f64>,
        attacks: Vec<Attack>,
        k: usize,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::Parameter("k must be positive".into()));
        }
        if initial_weights.len() != arguments.len() {
            return Err(Error::Parameter(format!(
                "{} initial weights for {} arguments",
                initial_weights.len(),
                arguments.len()
            )));
        }
        if let Some(w) = initial_weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::Parameter(format!(
                "initial weight {w} outside [0, 1]"
            )));
        }
        let mut incoming = vec![Vec::new(); arguments.len()];
        for a in &attacks {
            if a.attacker >= arguments.len() || a.target >= arguments.len() {
                return Err(Error::Parameter(format!(
                    "attack {} -> {} references a missing argument",
                    a.attacker, a.target
                )));
            }
            if a.votes == 0 || a.votes > k {
                return Err(Error::Parameter(format!(
                    "attack {} -> {} has {} votes, expected 1..={k}",
                    a.attacker, a.target, a.votes
                )));
            }
            incoming[a.target].push((a.attacker, a.votes as f64 / k as f64));
        }
        Ok(WeightedArgGraph {
            arguments,
            initial_weights,
            attacks,
            k,
            incoming,
        })
    }

    pub fn arguments(&self) -> &[Argument] {
        &self.arguments
    }

    pub fn initial_weights(&self) -> &[f64] {
        &self.initial_weights
    }

    pub fn attacks(&self) -> &[Attack] {
        &self.attacks
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.arguments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arguments.is_empty()
    }

    pub fn strength(&self, attack: &Attack) -> f64 {
        attack.votes as f64 / self.k as f64
    }

    pub fn incoming(&self, argument: usize) -> &[(usize, f64)] {
        &self.incoming[argument]
    }

    pub fn index_of(&self, argument: Argument) -> Option<usize> {
        self.arguments.iter().position(|&a| a == argument)
    }

    /// Votes on the attack `attacker -> target`, if present.
    pub fn votes(&self, attacker: Argument, target: Argument) -> Option<usize> {
        let (s, t) = (self.index_of(attacker)?, self.index_of(target)?);
        self.attacks
            .iter()
            .find(|a| a.attacker == s && a.target == t)
            .map(|a| a.votes)
    }
}

/// Distinct attribute-value pairs of the queried individual and its
/// neighbours, queried individual first, in order of first appearance.
pub fn build_arguments(hood: &Neighborhood<'_>) -> Vec<Argument> {
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    for e in std::iter::once(hood.query).chain(hood.neighbors.iter().map(|(e, _)| *e)) {
        for (attribute, &value) in e.values.iter().enumerate() {
            let arg = Argument { attribute, value };
            seen.entry(arg).or_insert_with(|| {
                out.push(arg);
                out.len() - 1
            });
        }
    }
    out
}

/// Builds the full weighted graph for the queried individual.
///
/// Fails with [`Error::PolarityMismatch`] when the queried classification is
/// not the one `polarity` audits.
pub fn build_graph(hood: &Neighborhood<'_>, polarity: Polarity) -> Result<WeightedArgGraph> {
    if hood.query_label != polarity.audited_label() {
        return Err(Error::PolarityMismatch {
            expected: polarity.name(),
            found: match hood.query_label {
                Label::Negative => "negative",
                Label::Positive => "positive",
            },
        });
    }
    let k = hood.k();
    if k == 0 {
        return Err(Error::Parameter("neighbourhood is empty".into()));
    }
    let arguments = build_arguments(hood);
    let index: HashMap<Argument, usize> =
        arguments.iter().enumerate().map(|(i, &a)| (a, i)).collect();
    let query = &hood.query.values;

    let mut votes: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (e, label) in &hood.neighbors {
        if *label == hood.query_label {
            continue;
        }
        let differing: Vec<usize> = (0..query.len())
            .filter(|&j| e.values[j] != query[j])
            .collect();
        for (l, &value) in e.values.iter().enumerate() {
            let attacker = index[&Argument {
                attribute: l,
                value,
            }];
            for &j in &differing {
                let target = index[&Argument {
                    attribute: j,
                    value: query[j],
                }];
                *votes.entry((target, attacker)).or_insert(0) += 1;
            }
        }
    }
    let attacks = votes
        .into_iter()
        .map(|((target, attacker), votes)| Attack {
            attacker,
            target,
            votes,
        })
        .collect();
    let initial = vec![1.0; arguments.len()];
    WeightedArgGraph::new(arguments, initial, attacks, k)
}
