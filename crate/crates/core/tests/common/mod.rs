#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use argfair::classifier::{LabelAssignment, Provenance};
use argfair::dataset::{Attribute, Dataset, Individual, Label, Schema};
use proptest::prelude::*;

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// The six-person toy table: row 0 is negative, rows 1..=5 positive.
pub fn worked_example() -> (Dataset, LabelAssignment) {
    let schema = Schema::new(
        vec![
            Attribute::open("workclass"),
            Attribute::open("education"),
            Attribute::open("race"),
        ],
        None,
        vec![],
    )
    .unwrap();
    let rows = [
        ["Local-gov", "Bachelors", "Black"],
        ["Private", "Bachelors", "White"],
        ["Local-gov", "HS-grad", "White"],
        ["Local-gov", "Bachelors", "White"],
        ["Private", "Masters", "White"],
        ["Local-gov", "Masters", "White"],
    ];
    let ds = Dataset::from_values(schema, rows.iter().map(|r| (r.to_vec(), None))).unwrap();
    let mut labels = vec![Label::Positive; 6];
    labels[0] = Label::Negative;
    (ds, LabelAssignment::new(labels, Provenance::ExternalFile))
}

pub fn schema_of(arity: usize, domain: usize) -> Schema {
    Schema::new(
        (0..arity)
            .map(|j| Attribute::with_domain(format!("z{j}"), (0..domain).map(|v| format!("v{v}"))))
            .collect(),
        None,
        vec![],
    )
    .unwrap()
}

/// A small random pool with labels.
#[derive(Clone, Debug)]
pub struct Instance {
    pub arity: usize,
    pub domain: usize,
    pub k: usize,
    pub rows: Vec<Vec<u32>>,
    pub labels: Vec<Label>,
}

impl Instance {
    pub fn dataset(&self) -> Dataset {
        Dataset::new(
            schema_of(self.arity, self.domain),
            self.rows
                .iter()
                .map(|r| Individual::new(r.clone(), None))
                .collect(),
        )
        .unwrap()
    }

    pub fn assignment(&self) -> LabelAssignment {
        LabelAssignment::new(self.labels.clone(), Provenance::ExternalFile)
    }
}

pub fn label_strategy() -> impl Strategy<Value = Label> {
    prop_oneof![Just(Label::Negative), Just(Label::Positive)]
}

pub fn instance() -> impl Strategy<Value = Instance> {
    (1usize..=4, 1usize..=3, 1usize..=5)
        .prop_flat_map(|(arity, domain, k)| {
            let n = (k + 1)..=(k + 6);
            (
                Just(arity),
                Just(domain),
                Just(k),
                n.prop_flat_map(move |n| {
                    (
                        prop::collection::vec(prop::collection::vec(0..domain as u32, arity), n),
                        prop::collection::vec(label_strategy(), n),
                    )
                }),
            )
        })
        .prop_map(|(arity, domain, k, (rows, labels))| Instance {
            arity,
            domain,
            k,
            rows,
            labels,
        })
}

/// Attack votes computed straight from the definition, keyed by
/// ((attacker attribute, value), (target attribute, value)).
pub type Pair = (usize, u32);

pub fn attack_oracle(
    e0: &[u32],
    l0: Label,
    neighbors: &[(&[u32], Label)],
) -> BTreeMap<(Pair, Pair), usize> {
    let mut votes = BTreeMap::new();
    for (e, l) in neighbors {
        if *l == l0 {
            continue;
        }
        for (lz, &value) in e.iter().enumerate() {
            for j in 0..e0.len() {
                if e[j] != e0[j] {
                    *votes.entry(((lz, value), (j, e0[j]))).or_insert(0) += 1;
                }
            }
        }
    }
    votes
}

/// Synchronous h-Categorizer run for a fixed number of steps over a plain
/// edge list `(attacker, target, strength)`.
pub fn reference_iterate(n: usize, edges: &[(usize, usize, f64)], steps: usize) -> Vec<f64> {
    let mut s = vec![1.0; n];
    for _ in 0..steps {
        let mut damage = vec![0.0; n];
        for &(a, b, w) in edges {
            damage[b] += w * s[a];
        }
        s = damage.iter().map(|d| 1.0 / (1.0 + d)).collect();
    }
    s
}

use argfair::classifier::{train_logreg, EncodedRows, TrainingParams};
use argfair::config::TableConfig;
use argfair::dataset::{bin_numeric, load_table, split, LabelSpec};
use argfair::graph::{build_graph, Argument, Attack, Neighborhood};
use argfair::{
    extract_explanation, hbs_converge, k_nearest, LogRegModel, Polarity, WeightedArgGraph,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const EPS: f64 = 0.01;

/// Graph of row `q` audited under its own label.
pub fn graph_for(inst: &Instance, q: usize) -> (WeightedArgGraph, Vec<u32>) {
    let ds = inst.dataset();
    let set = k_nearest(ds.row(q), &ds, inst.k, Some(q)).unwrap();
    let labels = inst.assignment();
    let hood = Neighborhood::gather(&set, &ds, &labels, inst.labels[q]).unwrap();
    let polarity = match inst.labels[q] {
        Label::Negative => Polarity::Negative,
        Label::Positive => Polarity::Positive,
    };
    (
        build_graph(&hood, polarity).unwrap(),
        ds.row(q).values.clone(),
    )
}

/// Every argument below full weight holds a value of the queried individual.
pub fn check_only_queried_pairs_lose_weight(inst: &Instance, q: usize) -> Result<(), String> {
    let (g, e0) = graph_for(inst, q);
    let fw = hbs_converge(&g, EPS, 10_000).map_err(|e| e.to_string())?;
    for (arg, w) in g.arguments().iter().zip(&fw.weights) {
        if *w < 1.0 && e0[arg.attribute] != arg.value {
            return Err(format!("{arg:?} has weight {w} but is not a queried pair"));
        }
    }
    Ok(())
}

/// With every label equal, nothing is attacked and the result is consistent.
pub fn check_uniform_classification(inst: &Instance, q: usize, label: Label) -> Result<(), String> {
    let mut inst = inst.clone();
    inst.labels = vec![label; inst.rows.len()];
    let (g, _) = graph_for(&inst, q);
    let fw = hbs_converge(&g, EPS, 10_000).map_err(|e| e.to_string())?;
    let exp = extract_explanation(&g, &fw);
    if !g.attacks().is_empty()
        || fw.weights.iter().any(|&w| w != 1.0)
        || !exp.consistent
        || !exp.weakest.is_empty()
    {
        return Err(format!("uniform labels produced {:?}", fw.weights));
    }
    Ok(())
}

/// Neighbourhood where every positive neighbour equals the negative query
/// except on attribute `j`.
#[derive(Clone, Debug)]
pub struct SingleDifference {
    pub j: usize,
    pub e0: Vec<u32>,
    pub neighbors: Vec<(Vec<u32>, Label)>,
}

pub fn single_difference() -> impl Strategy<Value = SingleDifference> {
    (1usize..=5, 1usize..=5)
        .prop_flat_map(|(arity, k)| {
            (
                0..arity,
                prop::collection::vec(0u32..3, arity),
                prop::collection::vec(
                    (
                        any::<bool>(),
                        1u32..3,
                        prop::collection::vec(0u32..3, arity),
                    ),
                    k,
                ),
            )
        })
        .prop_map(|(j, e0, others)| {
            let neighbors = others
                .into_iter()
                .enumerate()
                .map(|(i, (positive, shift, free))| {
                    if positive || i == 0 {
                        let mut r = e0.clone();
                        r[j] = (e0[j] + shift) % 3;
                        (r, Label::Positive)
                    } else {
                        (free, Label::Negative)
                    }
                })
                .collect();
            SingleDifference { j, e0, neighbors }
        })
}

pub fn check_single_difference(case: &SingleDifference) -> Result<(), String> {
    let query = Individual::new(case.e0.clone(), None);
    let rows: Vec<Individual> = case
        .neighbors
        .iter()
        .map(|(r, _)| Individual::new(r.clone(), None))
        .collect();
    let hood = Neighborhood {
        query: &query,
        query_label: Label::Negative,
        neighbors: rows
            .iter()
            .zip(&case.neighbors)
            .map(|(r, (_, l))| (r, *l))
            .collect(),
    };
    let g = build_graph(&hood, Polarity::Negative).map_err(|e| e.to_string())?;
    let fw = hbs_converge(&g, EPS, 10_000).map_err(|e| e.to_string())?;
    let target = Argument {
        attribute: case.j,
        value: case.e0[case.j],
    };
    for (arg, w) in g.arguments().iter().zip(&fw.weights) {
        if (*arg == target) != (*w < 1.0) {
            return Err(format!("{arg:?} has weight {w}"));
        }
    }
    let exp = extract_explanation(&g, &fw);
    if exp.weakest != [target] {
        return Err(format!("weakest {:?}, expected {target:?}", exp.weakest));
    }
    Ok(())
}

pub fn random_graph() -> impl Strategy<Value = WeightedArgGraph> {
    (1usize..=8, 1usize..=5)
        .prop_flat_map(|(n, k)| {
            let edges = prop::collection::vec((0..n, 0..n, 1..=k), 0..=n * n);
            (Just(n), Just(k), edges)
        })
        .prop_map(|(n, k, edges)| {
            let mut seen = std::collections::BTreeSet::new();
            let attacks = edges
                .into_iter()
                .filter(|&(a, b, _)| a != b && seen.insert((a, b)))
                .map(|(attacker, target, votes)| Attack {
                    attacker,
                    target,
                    votes,
                })
                .collect();
            let args = (0..n)
                .map(|i| Argument {
                    attribute: i,
                    value: 0,
                })
                .collect();
            WeightedArgGraph::new(args, vec![1.0; n], attacks, k).unwrap()
        })
}

pub fn edge_list(g: &WeightedArgGraph) -> Vec<(usize, usize, f64)> {
    g.attacks()
        .iter()
        .map(|a| (a.attacker, a.target, g.strength(a)))
        .collect()
}

/// Converged weights agree with a 10,000-step run within `2 * EPS`.
pub fn check_fixed_point(g: &WeightedArgGraph) -> Result<(), String> {
    let fw = hbs_converge(g, EPS, 10_000).map_err(|e| e.to_string())?;
    let reference = reference_iterate(g.len(), &edge_list(g), 10_000);
    for (a, b) in fw.weights.iter().zip(&reference) {
        if (a - b).abs() > 2.0 * EPS {
            return Err(format!("{a} vs reference {b}"));
        }
    }
    Ok(())
}

/// A model with random coefficients over a random 3-attribute table.
pub fn gradient_fixture(seed: u64) -> (LogRegModel, EncodedRows) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schema = Schema::new(
        (0..3)
            .map(|j| Attribute::with_domain(format!("a{j}"), ["x", "y", "z"]))
            .collect(),
        Some(LabelSpec {
            column: "y".into(),
            positive: vec!["+".into()],
            negative: Some("-".into()),
        }),
        vec![],
    )
    .unwrap();
    let mut rows: Vec<Individual> = (0..40)
        .map(|_| {
            let values = (0..3).map(|_| rng.gen_range(0..3)).collect();
            let label = if rng.gen_bool(0.5) {
                Label::Positive
            } else {
                Label::Negative
            };
            Individual::new(values, Some(label))
        })
        .collect();
    rows[0].label = Some(Label::Positive);
    rows[1].label = Some(Label::Negative);
    let ds = Dataset::new(schema, rows).unwrap();
    let params = TrainingParams {
        epochs: 0,
        ..TrainingParams::default()
    };
    let mut model = train_logreg(&ds, &params).unwrap();
    for w in model.weights.iter_mut() {
        *w = rng.gen_range(-2.0..2.0);
    }
    model.intercept = rng.gen_range(-1.0..1.0);
    let data = model.encode(&ds);
    (model, data)
}

/// Largest relative gap between the analytic gradient and central
/// differences, with magnitudes below 1e-3 compared absolutely.
pub fn gradient_error(seed: u64) -> f64 {
    let h = 1e-6;
    let l2 = 0.1;
    let (model, data) = gradient_fixture(seed);
    let (_, grad) = model.objective(&data, l2);
    let mut worst: f64 = 0.0;
    for (i, &g) in grad.iter().enumerate() {
        let mut plus = model.clone();
        let mut minus = model.clone();
        if i < model.weights.len() {
            plus.weights[i] += h;
            minus.weights[i] -= h;
        } else {
            plus.intercept += h;
            minus.intercept -= h;
        }
        let numeric = (plus.objective(&data, l2).0 - minus.objective(&data, l2).0) / (2.0 * h);
        worst = worst.max((g - numeric).abs() / g.abs().max(numeric.abs()).max(1e-3));
    }
    worst
}

/// Loads, bins and splits a shipped dataset with its config's run seed and
/// test fraction.
pub fn prepared(config: &str, data: &str) -> argfair::Result<(Dataset, Dataset, TableConfig)> {
    let root = repo_root();
    let cfg = TableConfig::load(root.join(config))?;
    let table = load_table(root.join(data), &cfg.schema, &cfg.format)?;
    let ds = bin_numeric(table.dataset, &cfg.binning)?.resolved();
    let (train, test) = split(
        &ds,
        cfg.run.test_fraction.unwrap_or(0.2),
        cfg.run.seed.unwrap_or(0),
    )?;
    Ok((train, test, cfg))
}
