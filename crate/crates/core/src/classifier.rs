//! Sources of binary classifications: a one-hot logistic regression, the
//! fixed `bias-attr` classifier, ground-truth labels and external prediction
//! files. Everything downstream consumes only a [`LabelAssignment`].

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Individual, Label, Schema};
use crate::error::{Error, Result};

/// Name of the attribute injected for the synthetic-bias experiment.
pub const BIAS_ATTRIBUTE: &str = "bias-attr";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    TrainedModel,
    ExternalFile,
    FixedBias,
    GroundTruth,
}

/// One label per dataset row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelAssignment {
    labels: Vec<Label>,
    provenance: Provenance,
}

impl LabelAssignment {
    pub fn new(labels: Vec<Label>, provenance: Provenance) -> Self {
        LabelAssignment { labels, provenance }
    }

    /// The dataset's own labels; every row must carry one.
    pub fn ground_truth(dataset: &Dataset) -> Result<Self> {
        let labels = dataset
            .rows()
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.label
                    .ok_or_else(|| Error::Coverage(format!("row {i} has no label")))
            })
            .collect::<Result<_>>()?;
        Ok(LabelAssignment::new(labels, Provenance::GroundTruth))
    }

    pub fn get(&self, row: usize) -> Option<Label> {
        self.labels.get(row).copied()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub(crate) fn check_covers(&self, dataset: &Dataset) -> Result<()> {
        if self.labels.len() != dataset.len() {
            return Err(Error::Coverage(format!(
                "{} labels for {} rows",
                self.labels.len(),
                dataset.len()
            )));
        }
        Ok(())
    }
}

/// `+` iff the individual's `bias-attr` value is `1`.
pub fn fixed_bias_classifier(schema: &Schema, e: &Individual) -> Result<Label> {
    let j = schema
        .index_of(BIAS_ATTRIBUTE)
        .ok_or_else(|| Error::MissingAttribute(BIAS_ATTRIBUTE.into()))?;
    let code = *e
        .values
        .get(j)
        .ok_or_else(|| Error::MissingAttribute(BIAS_ATTRIBUTE.into()))?;
    match schema.attribute(j).value(code) {
        "1" => Ok(Label::Positive),
        "0" => Ok(Label::Negative),
        other => Err(Error::Domain {
            row: 0,
            attribute: BIAS_ATTRIBUTE.into(),
            value: other.into(),
        }),
    }
}

pub fn fixed_bias_labels(dataset: &Dataset) -> Result<LabelAssignment> {
    let labels = dataset
        .rows()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            fixed_bias_classifier(dataset.schema(), r).map_err(|e| match e {
                Error::Domain {
                    attribute, value, ..
                } => Error::Domain {
                    row: i,
                    attribute,
                    value,
                },
                e => e,
            })
        })
        .collect::<Result<_>>()?;
    Ok(LabelAssignment::new(labels, Provenance::FixedBias))
}

/// Reads a two-column `row_index,label` file covering every dataset row.
pub fn load_predictions(path: impl AsRef<Path>, dataset: &Dataset) -> Result<LabelAssignment> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_predictions(std::io::BufReader::new(file), dataset.len(), b',')
}

/// Labels may be `+`/`-` or `1`/`0`. An optional header row is skipped.
pub fn read_predictions<R: Read>(reader: R, rows: usize, delimiter: u8) -> Result<LabelAssignment> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut labels: Vec<Option<Label>> = vec![None; rows];
    let mut record = csv::StringRecord::new();
    let mut first = true;
    while rdr.read_record(&mut record)? {
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 columns, found {}", record.len()),
            });
        }
        let index = match record[0].parse::<usize>() {
            Ok(i) => i,
            Err(_) if first => {
                first = false;
                continue;
            }
            Err(_) => {
                return Err(Error::Parse {
                    line,
                    message: format!("bad row index {:?}", &record[0]),
                })
            }
        };
        first = false;
        let label = Label::parse(&record[1]).ok_or_else(|| Error::Parse {
            line,
            message: format!("bad label {:?}", &record[1]),
        })?;
        let slot = labels.get_mut(index).ok_or_else(|| {
            Error::Coverage(format!("row {index} is beyond the dataset ({rows} rows)"))
        })?;
        if slot.replace(label).is_some() {
            return Err(Error::Coverage(format!("row {index} is labelled twice")));
        }
    }
    let labels = labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| Error::Coverage(format!("row {i} has no prediction"))))
        .collect::<Result<_>>()?;
    Ok(LabelAssignment::new(labels, Provenance::ExternalFile))
}

pub fn write_predictions<W: std::io::Write>(labels: &LabelAssignment, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["row_index", "label"])?;
    for (i, l) in labels.labels().iter().enumerate() {
        w.write_record([i.to_string().as_str(), l.symbol()])?;
    }
    w.flush()
        .map_err(|e| Error::io("<predictions writer>", e))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
    pub threshold: f64,
}

impl Default for TrainingParams {
    fn default() -> Self {
        TrainingParams {
            learning_rate: 1.0,
            epochs: 1500,
            l2: 1e-5,
            seed: 0,
            threshold: 0.5,
        }
    }
}

/// One-hot block of a single attribute inside the feature vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodedAttribute {
    pub name: String,
    pub values: Vec<String>,
    pub offset: usize,
}

/// Logistic regression over a full one-hot encoding (no reference level).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub encoding: Vec<EncodedAttribute>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub threshold: f64,
}

/// Active feature indices of every row, prepared against one schema.
#[derive(Clone, Debug)]
pub struct EncodedRows {
    pub features: Vec<Vec<usize>>,
    pub targets: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogRegModel {
    fn encoding_for(schema: &Schema) -> Vec<EncodedAttribute> {
        let mut offset = 0;
        schema
            .attributes()
            .iter()
            .map(|a| {
                let enc = EncodedAttribute {
                    name: a.name.clone(),
                    values: a.domain.clone(),
                    offset,
                };
                offset += a.domain.len();
                enc
            })
            .collect()
    }

    pub fn feature_count(&self) -> usize {
        self.weights.len()
    }

    /// Maps `(attribute, code)` of `schema` to a feature index. Values the
    /// model never saw, and attributes it lacks, map to nothing.
    fn binding(&self, schema: &Schema) -> Vec<Vec<Option<usize>>> {
        let by_name: HashMap<&str, &EncodedAttribute> =
            self.encoding.iter().map(|e| (e.name.as_str(), e)).collect();
        schema
            .attributes()
            .iter()
            .map(|a| match by_name.get(a.name.as_str()) {
                Some(enc) => a
                    .domain
                    .iter()
                    .map(|v| {
                        enc.values
                            .iter()
                            .position(|m| m == v)
                            .map(|p| enc.offset + p)
                    })
                    .collect(),
                None => vec![None; a.domain.len()],
            })
            .collect()
    }

    pub fn encode(&self, dataset: &Dataset) -> EncodedRows {
        let binding = self.binding(dataset.schema());
        let features = dataset
            .rows()
            .iter()
            .map(|r| {
                r.values
                    .iter()
                    .enumerate()
                    .filter_map(|(j, &c)| binding[j][c as usize])
                    .collect()
            })
            .collect();
        let targets = dataset
            .rows()
            .iter()
            .map(|r| {
                if r.label == Some(Label::Positive) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        EncodedRows { features, targets }
    }

    fn score(&self, active: &[usize]) -> f64 {
        self.intercept + active.iter().map(|&f| self.weights[f]).sum::<f64>()
    }

    /// Linear score `w·x + b` of one individual.
    pub fn decision(&self, schema: &Schema, e: &Individual) -> f64 {
        let binding = self.binding(schema);
        let active: Vec<usize> = e
            .values
            .iter()
            .enumerate()
            .filter_map(|(j, &c)| {
                binding
                    .get(j)
                    .and_then(|b| b.get(c as usize).copied().flatten())
            })
            .collect();
        self.score(&active)
    }

    pub fn probability(&self, schema: &Schema, e: &Individual) -> f64 {
        sigmoid(self.decision(schema, e))
    }

    pub fn predict(&self, schema: &Schema, e: &Individual) -> Label {
        self.label_for(sigmoid(self.decision(schema, e)))
    }

    fn label_for(&self, probability: f64) -> Label {
        if probability >= self.threshold {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn predict_dataset(&self, dataset: &Dataset) -> LabelAssignment {
        let encoded = self.encode(dataset);
        let labels = encoded
            .features
            .iter()
            .map(|f| self.label_for(sigmoid(self.score(f))))
            .collect();
        LabelAssignment::new(labels, Provenance::TrainedModel)
    }

    /// Mean log-loss plus `l2/2 · |w|²` (intercept unpenalised), with its
    /// gradient laid out as `[weights..., intercept]`.
    pub fn objective(&self, data: &EncodedRows, l2: f64) -> (f64, Vec<f64>) {
        let n = data.targets.len().max(1) as f64;
        let mut grad = vec![0.0; self.weights.len() + 1];
        let mut loss = 0.0;
        for (active, &y) in data.features.iter().zip(&data.targets) {
            let z = self.score(active);
            // log(1 + e^z) - y z, written to stay finite for large |z|
            loss += z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z;
            let r = sigmoid(z) - y;
            for &f in active {
                grad[f] += r;
            }
            grad[self.weights.len()] += r;
        }
        loss /= n;
        for g in grad.iter_mut() {
            *g /= n;
        }
        let mut penalty = 0.0;
        for (g, &w) in grad.iter_mut().zip(&self.weights) {
            *g += l2 * w;
            penalty += w * w;
        }
        (loss + 0.5 * l2 * penalty, grad)
    }
}

/// Full-batch gradient descent for a fixed number of epochs.
pub fn train_logreg(train: &Dataset, params: &TrainingParams) -> Result<LogRegModel> {
    if !(params.threshold > 0.0 && params.threshold < 1.0) {
        return Err(Error::Parameter(format!(
            "threshold must lie in (0, 1), got {}",
            params.threshold
        )));
    }
    if params.learning_rate.is_nan()
        || params.learning_rate <= 0.0
        || params.l2.is_nan()
        || params.l2 < 0.0
    {
        return Err(Error::Parameter(
            "learning rate must be positive and l2 non-negative".into(),
        ));
    }
    let mut positives = 0;
    for (i, r) in train.rows().iter().enumerate() {
        match r.label {
            Some(Label::Positive) => positives += 1,
            Some(Label::Negative) => {}
            None => return Err(Error::Coverage(format!("training row {i} has no label"))),
        }
    }
    if positives == 0 || positives == train.len() {
        let only = if positives == 0 {
            "all negative"
        } else {
            "all positive"
        };
        return Err(Error::DegenerateTraining(only.into()));
    }

    let encoding = LogRegModel::encoding_for(train.schema());
    let features: usize = encoding.iter().map(|e| e.values.len()).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut model = LogRegModel {
        encoding,
        weights: (0..features).map(|_| rng.gen_range(-0.01..0.01)).collect(),
        intercept: 0.0,
        threshold: params.threshold,
    };
    let data = model.encode(train);
    for _ in 0..params.epochs {
        let (_, grad) = model.objective(&data, params.l2);
        for (w, g) in model.weights.iter_mut().zip(&grad) {
            *w -= params.learning_rate * g;
        }
        model.intercept -= params.learning_rate * grad[features];
    }
    if model.weights.iter().any(|w| !w.is_finite()) || !model.intercept.is_finite() {
        return Err(Error::Parameter(
            "training diverged; lower the learning rate".into(),
        ));
    }
    Ok(model)
}

/// Accuracy and F1 (positive class) of `predicted` against `actual`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Scores {
    pub accuracy: f64,
    pub f1: f64,
}

pub fn score(actual: &[Label], predicted: &[Label]) -> Scores {
    let (mut tp, mut fp, mut fneg, mut correct) = (0usize, 0usize, 0usize, 0usize);
    for (&a, &p) in actual.iter().zip(predicted) {
        correct += usize::from(a == p);
        match (a, p) {
            (Label::Positive, Label::Positive) => tp += 1,
            (Label::Negative, Label::Positive) => fp += 1,
            (Label::Positive, Label::Negative) => fneg += 1,
            _ => {}
        }
    }
    let n = actual.len().min(predicted.len());
    let f1 = if tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fneg) as f64
    };
    Scores {
        accuracy: if n == 0 {
            0.0
        } else {
            correct as f64 / n as f64
        },
        f1,
    }
}
