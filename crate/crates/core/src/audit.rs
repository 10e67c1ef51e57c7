//! Batch auditing: explain every queried individual of a pool, aggregate the
//! weakest attribute-value pairs, and run the injected-bias experiment.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::classifier::{LabelAssignment, Provenance, BIAS_ATTRIBUTE};
use crate::dataset::{Attribute, Dataset, Individual, Label};
use crate::error::{Error, Result};
use crate::exec::{map_ordered, Execution};
use crate::graph::{build_graph, Neighborhood, Polarity, WeightedArgGraph};
use crate::semantics::{
    extract_explanation, hbs_converge, Explanation, FinalWeights, Hundredths, DEFAULT_EPSILON,
    DEFAULT_MAX_ITER,
};
use crate::similarity::{k_nearest, NeighborSet};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditConfig {
    pub k: usize,
    pub epsilon: f64,
    pub max_iter: usize,
    pub polarity: Polarity,
    /// Seed of whatever upstream randomness produced the audited data,
    /// recorded for reproducibility only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            k: 5,
            epsilon: DEFAULT_EPSILON,
            max_iter: DEFAULT_MAX_ITER,
            polarity: Polarity::Negative,
            seed: None,
        }
    }
}

/// Everything computed while explaining one queried individual.
#[derive(Clone, Debug)]
pub struct RowExplanation {
    pub neighbors: NeighborSet,
    pub neighbor_labels: Vec<Label>,
    pub graph: WeightedArgGraph,
    pub weights: FinalWeights,
    pub explanation: Explanation,
}

/// Explains `query` against `pool`, skipping pool row `exclude`.
pub fn explain(
    query: &Individual,
    query_label: Label,
    exclude: Option<usize>,
    pool: &Dataset,
    labels: &LabelAssignment,
    config: &AuditConfig,
) -> Result<RowExplanation> {
    let neighbors = k_nearest(query, pool, config.k, exclude)?;
    let hood = Neighborhood::gather(&neighbors, pool, labels, query_label)?;
    let neighbor_labels = hood.neighbors.iter().map(|(_, l)| *l).collect();
    let graph = build_graph(&hood, config.polarity)?;
    let weights = hbs_converge(&graph, config.epsilon, config.max_iter)?;
    let explanation = extract_explanation(&graph, &weights);
    Ok(RowExplanation {
        neighbors,
        neighbor_labels,
        graph,
        weights,
        explanation,
    })
}

/// Explains pool row `row` against the rest of the pool.
pub fn explain_row(
    pool: &Dataset,
    labels: &LabelAssignment,
    row: usize,
    config: &AuditConfig,
) -> Result<RowExplanation> {
    if row >= pool.len() {
        return Err(Error::Parameter(format!(
            "row {row} out of range; valid rows are 0..={}",
            pool.len().saturating_sub(1)
        )));
    }
    labels.check_covers(pool)?;
    let label = labels.labels()[row];
    explain(pool.row(row), label, Some(row), pool, labels, config)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct PairName {
    pub attribute: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndividualOutcome {
    pub row: usize,
    pub consistent: bool,
    pub min_weight: Hundredths,
    pub weakest: Vec<PairName>,
    pub neighbors: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeakestCount {
    pub attribute: String,
    pub value: String,
    pub count: usize,
    /// `count` over the number of queried individuals.
    pub proportion: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub config: AuditConfig,
    pub labels: Provenance,
    /// Free-form provenance (input paths, command) echoed by callers.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
    pub pool_size: usize,
    pub queried: usize,
    pub consistent: usize,
    pub consistent_fraction: f64,
    pub weakest_counts: Vec<WeakestCount>,
    pub per_individual: Vec<IndividualOutcome>,
}

impl AuditReport {
    pub fn count_of(&self, attribute: &str, value: &str) -> usize {
        self.weakest_counts
            .iter()
            .find(|c| c.attribute == attribute && c.value == value)
            .map_or(0, |c| c.count)
    }

    pub fn proportion_of(&self, attribute: &str, value: &str) -> f64 {
        if self.queried == 0 {
            0.0
        } else {
            self.count_of(attribute, value) as f64 / self.queried as f64
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Plain-text summary table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let c = &self.config;
        let _ = writeln!(
            out,
            "config: k={} epsilon={} max_iter={} polarity={} seed={} labels={}",
            c.k,
            c.epsilon,
            c.max_iter,
            c.polarity.name(),
            c.seed.map_or("-".to_string(), |s| s.to_string()),
            serde_json::to_value(self.labels)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default(),
        );
        let _ = writeln!(
            out,
            "pool: {}  queried: {}  consistent: {} ({:.1}%)",
            self.pool_size,
            self.queried,
            self.consistent,
            100.0 * self.consistent_fraction
        );
        let aw = self
            .weakest_counts
            .iter()
            .map(|w| w.attribute.len())
            .chain(["attribute".len()])
            .max()
            .unwrap_or(9);
        let vw = self
            .weakest_counts
            .iter()
            .map(|w| w.value.len())
            .chain(["value".len()])
            .max()
            .unwrap_or(5);
        let _ = writeln!(
            out,
            "{:<aw$}  {:<vw$}  {:>7}  {:>10}",
            "attribute", "value", "count", "proportion"
        );
        for w in &self.weakest_counts {
            let _ = writeln!(
                out,
                "{:<aw$}  {:<vw$}  {:>7}  {:>9.1}%",
                w.attribute,
                w.value,
                w.count,
                100.0 * w.proportion
            );
        }
        out
    }
}

/// Audits every individual of `pool` whose label matches the polarity,
/// drawing neighbours from the same pool (self excluded).
pub fn audit_batch(
    pool: &Dataset,
    labels: &LabelAssignment,
    config: &AuditConfig,
    exec: Execution,
) -> Result<AuditReport> {
    run_audit(pool, labels, pool, labels, true, config, exec)
}

/// Audits the matching individuals of `queried` against a separate pool.
/// Both datasets must share attribute names and domains.
pub fn audit_against(
    queried: &Dataset,
    queried_labels: &LabelAssignment,
    pool: &Dataset,
    pool_labels: &LabelAssignment,
    config: &AuditConfig,
    exec: Execution,
) -> Result<AuditReport> {
    if queried.schema().attributes() != pool.schema().attributes() {
        return Err(Error::Schema(
            "queried data and neighbour pool use different schemas".into(),
        ));
    }
    run_audit(
        queried,
        queried_labels,
        pool,
        pool_labels,
        false,
        config,
        exec,
    )
}

fn run_audit(
    queried: &Dataset,
    queried_labels: &LabelAssignment,
    pool: &Dataset,
    pool_labels: &LabelAssignment,
    same_pool: bool,
    config: &AuditConfig,
    exec: Execution,
) -> Result<AuditReport> {
    queried_labels.check_covers(queried)?;
    pool_labels.check_covers(pool)?;
    let target = config.polarity.audited_label();
    let rows: Vec<usize> = (0..queried.len())
        .filter(|&i| queried_labels.labels()[i] == target)
        .collect();

    let schema = pool.schema();
    let outcomes = map_ordered(exec, &rows, |row| {
        let exclude = same_pool.then_some(row);
        explain(queried.row(row), target, exclude, pool, pool_labels, config)
            .map(|r| IndividualOutcome {
                row,
                consistent: r.explanation.consistent,
                min_weight: r
                    .explanation
                    .rounded
                    .iter()
                    .copied()
                    .min()
                    .unwrap_or(Hundredths::ONE),
                weakest: r
                    .explanation
                    .weakest
                    .iter()
                    .map(|a| {
                        let (attribute, value) = a.name(schema);
                        PairName {
                            attribute: attribute.to_owned(),
                            value: value.to_owned(),
                        }
                    })
                    .collect(),
                neighbors: r.neighbors.indices().collect(),
            })
            .map_err(|e| Error::Row {
                row,
                source: Box::new(e),
            })
    })?;
    let per_individual = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let queried_count = per_individual.len();
    let consistent = per_individual.iter().filter(|o| o.consistent).count();
    let mut counts: BTreeMap<&PairName, usize> = BTreeMap::new();
    for o in &per_individual {
        for pair in &o.weakest {
            *counts.entry(pair).or_insert(0) += 1;
        }
    }
    let weakest_counts = counts
        .into_iter()
        .map(|(pair, count)| WeakestCount {
            attribute: pair.attribute.clone(),
            value: pair.value.clone(),
            count,
            proportion: count as f64 / queried_count as f64,
        })
        .collect();

    Ok(AuditReport {
        config: config.clone(),
        labels: pool_labels.provenance(),
        meta: BTreeMap::new(),
        pool_size: pool.len(),
        queried: queried_count,
        consistent,
        consistent_fraction: if queried_count == 0 {
            1.0
        } else {
            consistent as f64 / queried_count as f64
        },
        weakest_counts,
        per_individual,
    })
}

/// Appends a `bias-attr` column drawn uniformly from {0, 1}.
pub fn inject_bias(dataset: &Dataset, seed: u64) -> Result<Dataset> {
    if dataset.schema().index_of(BIAS_ATTRIBUTE).is_some() {
        return Err(Error::Schema(format!(
            "attribute {BIAS_ATTRIBUTE:?} already exists"
        )));
    }
    let schema = dataset
        .schema()
        .with_attribute(Attribute::with_domain(BIAS_ATTRIBUTE, ["0", "1"]))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = dataset
        .rows()
        .iter()
        .map(|r| {
            let mut values = r.values.clone();
            values.push(u32::from(rng.gen_bool(0.5)));
            Individual::new(values, r.label)
        })
        .collect();
    Dataset::new(schema, rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BiasCheck {
    /// Every non-consistent queried individual has `(bias-attr, 0)` among
    /// its weakest arguments.
    pub all_flagged: bool,
    pub flagged: usize,
    pub flagged_fraction: f64,
}

pub fn verify_bias_experiment(report: &AuditReport) -> BiasCheck {
    let is_bias_zero = |p: &PairName| p.attribute == BIAS_ATTRIBUTE && p.value == "0";
    let mut all_flagged = true;
    let mut flagged = 0;
    for o in &report.per_individual {
        let hit = o.weakest.iter().any(is_bias_zero);
        flagged += usize::from(hit);
        if !o.consistent && !hit {
            all_flagged = false;
        }
    }
    BiasCheck {
        all_flagged,
        flagged,
        flagged_fraction: if report.queried == 0 {
            0.0
        } else {
            flagged as f64 / report.queried as f64
        },
    }
}
