//! Categorical tabular data: schema, individuals, loading, binning and splitting.
//!
//! Every attribute value is interned into its attribute's domain, so an
//! [`Individual`] is a vector of small integer codes aligned with the schema's
//! attribute order. Codes are only meaningful relative to the schema of the
//! dataset that produced them.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary classification outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "-")]
    Negative,
    #[serde(rename = "+")]
    Positive,
}

impl Label {
    pub fn symbol(self) -> &'static str {
        match self {
            Label::Positive => "+",
            Label::Negative => "-",
        }
    }

    /// Parses `+`/`-` (ASCII or unicode minus) and `1`/`0`.
    pub fn parse(s: &str) -> Option<Label> {
        match s.trim() {
            "+" | "1" => Some(Label::Positive),
            "-" | "\u{2212}" | "0" => Some(Label::Negative),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    /// Categorical values in code order.
    pub domain: Vec<String>,
    /// A fixed domain rejects unseen values; an open one grows while loading.
    pub fixed: bool,
}

impl Attribute {
    pub fn open(name: impl Into<String>) -> Self {
        Attribute {
            name: name.into(),
            domain: Vec::new(),
            fixed: false,
        }
    }

    pub fn with_domain<S: Into<String>>(
        name: impl Into<String>,
        domain: impl IntoIterator<Item = S>,
    ) -> Self {
        Attribute {
            name: name.into(),
            domain: domain.into_iter().map(Into::into).collect(),
            fixed: true,
        }
    }

    pub fn code_of(&self, value: &str) -> Option<u32> {
        self.domain
            .iter()
            .position(|v| v == value)
            .map(|i| i as u32)
    }

    pub fn value(&self, code: u32) -> &str {
        &self.domain[code as usize]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelSpec {
    pub column: String,
    /// Literals read as a positive label; the first one is used when writing.
    pub positive: Vec<String>,
    /// When set, the only literal accepted as negative.
    pub negative: Option<String>,
}

impl LabelSpec {
    fn parse(&self, raw: &str, line: usize) -> Result<Label> {
        if self.positive.iter().any(|p| p == raw) {
            return Ok(Label::Positive);
        }
        match &self.negative {
            Some(neg) if neg != raw => Err(Error::Parse {
                line,
                message: format!("label {raw:?} is neither positive nor {neg:?}"),
            }),
            _ => Ok(Label::Negative),
        }
    }

    fn literal(&self, label: Label) -> &str {
        match label {
            Label::Positive => self.positive.first().map(String::as_str).unwrap_or("+"),
            Label::Negative => self.negative.as_deref().unwrap_or("-"),
        }
    }
}

/// Ordered attributes `Z`, their domains, and the optional label column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema {
    attributes: Vec<Attribute>,
    label: Option<LabelSpec>,
    drop: Vec<String>,
}

impl Schema {
    pub fn new(
        attributes: Vec<Attribute>,
        label: Option<LabelSpec>,
        drop: Vec<String>,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for a in &attributes {
            if !seen.insert(a.name.as_str()) {
                return Err(Error::Schema(format!("duplicate attribute {:?}", a.name)));
            }
            let mut values = HashSet::new();
            if let Some(v) = a.domain.iter().find(|v| !values.insert(v.as_str())) {
                return Err(Error::Schema(format!(
                    "attribute {:?} lists {v:?} twice in its domain",
                    a.name
                )));
            }
        }
        if let Some(spec) = &label {
            if seen.contains(spec.column.as_str()) {
                return Err(Error::Schema(format!(
                    "label column {:?} is also an attribute",
                    spec.column
                )));
            }
            if spec.positive.is_empty() {
                return Err(Error::Schema(
                    "label needs at least one positive literal".into(),
                ));
            }
        }
        if let Some(d) = drop.iter().find(|d| seen.contains(d.as_str())) {
            return Err(Error::Schema(format!(
                "column {d:?} is both kept and dropped"
            )));
        }
        Ok(Schema {
            attributes,
            label,
            drop,
        })
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn attribute(&self, index: usize) -> &Attribute {
        &self.attributes[index]
    }

    /// Number of attributes `p`.
    pub fn arity(&self) -> usize {
        self.attributes.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn label(&self) -> Option<&LabelSpec> {
        self.label.as_ref()
    }

    pub fn drop_list(&self) -> &[String] {
        &self.drop
    }

    /// Returns a copy of this schema with `attribute` appended.
    pub fn with_attribute(&self, attribute: Attribute) -> Result<Schema> {
        let mut attributes = self.attributes.clone();
        attributes.push(attribute);
        Schema::new(attributes, self.label.clone(), self.drop.clone())
    }

    /// The same schema with every domain frozen and the label literals
    /// normalised to `+`/`-`. This is what `write_table` output loads back with.
    pub fn resolved(&self) -> Schema {
        Schema {
            attributes: self
                .attributes
                .iter()
                .map(|a| Attribute {
                    fixed: true,
                    ..a.clone()
                })
                .collect(),
            label: self.label.as_ref().map(|l| LabelSpec {
                column: l.column.clone(),
                positive: vec!["+".into()],
                negative: Some("-".into()),
            }),
            drop: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Individual {
    /// Value codes, one per schema attribute.
    pub values: Vec<u32>,
    pub label: Option<Label>,
}

impl Individual {
    pub fn new(values: Vec<u32>, label: Option<Label>) -> Self {
        Individual { values, label }
    }

    pub fn arity(&self) -> usize {
        self.values.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    schema: Schema,
    rows: Vec<Individual>,
}

impl Dataset {
    pub fn new(schema: Schema, rows: Vec<Individual>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.arity() != schema.arity() {
                return Err(Error::Schema(format!(
                    "row {i} has {} values, schema has {} attributes",
                    row.arity(),
                    schema.arity()
                )));
            }
            for (a, &code) in schema.attributes.iter().zip(&row.values) {
                if code as usize >= a.domain.len() {
                    return Err(Error::Domain {
                        row: i,
                        attribute: a.name.clone(),
                        value: format!("#{code}"),
                    });
                }
            }
        }
        Ok(Dataset { schema, rows })
    }

    /// Builds a dataset from string cells, growing open domains as needed.
    pub fn from_values<S: AsRef<str>>(
        schema: Schema,
        rows: impl IntoIterator<Item = (Vec<S>, Option<Label>)>,
    ) -> Result<Self> {
        let mut builder = Interner::new(schema);
        let mut out = Vec::new();
        for (i, (cells, label)) in rows.into_iter().enumerate() {
            let cells: Vec<&str> = cells.iter().map(AsRef::as_ref).collect();
            if cells.len() != builder.schema.arity() {
                return Err(Error::Schema(format!(
                    "row {i} has {} values, schema has {} attributes",
                    cells.len(),
                    builder.schema.arity()
                )));
            }
            out.push(Individual::new(builder.intern_row(i, &cells)?, label));
        }
        Ok(Dataset {
            schema: builder.schema,
            rows: out,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Individual] {
        &self.rows
    }

    pub fn row(&self, index: usize) -> &Individual {
        &self.rows[index]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn value_str(&self, row: usize, attribute: usize) -> &str {
        self.schema.attributes[attribute].value(self.rows[row].values[attribute])
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Same rows under [`Schema::resolved`].
    pub fn resolved(self) -> Dataset {
        Dataset {
            schema: self.schema.resolved(),
            rows: self.rows,
        }
    }

    pub(crate) fn into_parts(self) -> (Schema, Vec<Individual>) {
        (self.schema, self.rows)
    }
}

struct Interner {
    schema: Schema,
    lookup: Vec<HashMap<String, u32>>,
}

impl Interner {
    fn new(schema: Schema) -> Self {
        let lookup = schema
            .attributes
            .iter()
            .map(|a| {
                a.domain
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v.clone(), i as u32))
                    .collect()
            })
            .collect();
        Interner { schema, lookup }
    }

    fn intern_row(&mut self, row: usize, cells: &[&str]) -> Result<Vec<u32>> {
        let mut codes = Vec::with_capacity(cells.len());
        for (j, cell) in cells.iter().enumerate() {
            let attr = &mut self.schema.attributes[j];
            let code = match self.lookup[j].get(*cell) {
                Some(&c) => c,
                None if attr.fixed => {
                    return Err(Error::Domain {
                        row,
                        attribute: attr.name.clone(),
                        value: cell.to_string(),
                    })
                }
                None => {
                    let c = attr.domain.len() as u32;
                    attr.domain.push(cell.to_string());
                    self.lookup[j].insert(cell.to_string(), c);
                    c
                }
            };
            codes.push(code);
        }
        Ok(codes)
    }
}

/// Physical layout of a delimiter-separated file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableFormat {
    pub delimiter: u8,
    /// Cell contents (after trimming) that mark a missing value.
    pub null_markers: Vec<String>,
}

impl Default for TableFormat {
    fn default() -> Self {
        TableFormat {
            delimiter: b',',
            null_markers: vec!["?".into(), String::new()],
        }
    }
}

#[derive(Clone, Debug)]
pub struct LoadedTable {
    pub dataset: Dataset,
    /// Rows removed because some cell was null.
    pub dropped_rows: usize,
}

pub fn load_table(
    path: impl AsRef<Path>,
    schema: &Schema,
    format: &TableFormat,
) -> Result<LoadedTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_table(std::io::BufReader::new(file), schema, format)
}

pub fn read_table<R: Read>(
    reader: R,
    schema: &Schema,
    format: &TableFormat,
) -> Result<LoadedTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    let mut attr_columns = vec![None; schema.arity()];
    let mut label_column = None;
    for (pos, name) in headers.iter().enumerate() {
        if let Some(j) = schema.index_of(name) {
            if attr_columns[j].replace(pos).is_some() {
                return Err(Error::Schema(format!("column {name:?} appears twice")));
            }
        } else if schema.label().is_some_and(|l| l.column == name) {
            label_column = Some(pos);
        } else if !schema.drop.iter().any(|d| d == name) {
            return Err(Error::Schema(format!("unknown column {name:?}")));
        }
    }
    if let Some(j) = attr_columns.iter().position(Option::is_none) {
        return Err(Error::Schema(format!(
            "missing column for attribute {:?}",
            schema.attributes[j].name
        )));
    }
    let attr_columns: Vec<usize> = attr_columns.into_iter().flatten().collect();

    let mut interner = Interner::new(schema.clone());
    let mut rows = Vec::new();
    let mut dropped = 0;
    let mut record = csv::StringRecord::new();
    let mut data_row = 0;
    while rdr.read_record(&mut record)? {
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record
            .iter()
            .any(|c| format.null_markers.iter().any(|m| m == c))
        {
            dropped += 1;
            data_row += 1;
            continue;
        }
        let cells: Vec<&str> = attr_columns.iter().map(|&c| &record[c]).collect();
        let values = interner.intern_row(data_row, &cells)?;
        let label = match (label_column, schema.label()) {
            (Some(pos), Some(spec)) => Some(spec.parse(&record[pos], line)?),
            _ => None,
        };
        rows.push(Individual::new(values, label));
        data_row += 1;
    }

    Ok(LoadedTable {
        dataset: Dataset {
            schema: interner.schema,
            rows,
        },
        dropped_rows: dropped,
    })
}

/// Writes the dataset with a header row. The label column is written only
/// when the schema declares one and every row is labelled.
pub fn write_table<W: Write>(dataset: &Dataset, writer: W, delimiter: u8) -> Result<()> {
    let schema = dataset.schema();
    let label = schema
        .label()
        .filter(|_| dataset.rows.iter().all(|r| r.label.is_some()));
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_writer(writer);

    let mut header: Vec<&str> = schema.attributes.iter().map(|a| a.name.as_str()).collect();
    if let Some(l) = label {
        header.push(&l.column);
    }
    w.write_record(&header)?;
    for row in &dataset.rows {
        let mut cells: Vec<&str> = schema
            .attributes
            .iter()
            .zip(&row.values)
            .map(|(a, &c)| a.value(c))
            .collect();
        if let (Some(l), Some(lab)) = (label, row.label) {
            cells.push(l.literal(lab));
        }
        w.write_record(&cells)?;
    }
    w.flush().map_err(|e| Error::io("<table writer>", e))?;
    Ok(())
}

pub fn save_table(dataset: &Dataset, path: impl AsRef<Path>, delimiter: u8) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_table(dataset, std::io::BufWriter::new(file), delimiter)
}

/// Half-open numeric interval `[lower, upper)` mapped to a category.
/// A missing bound is unbounded on that side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub category: String,
}

impl Bin {
    pub fn new(lower: Option<f64>, upper: Option<f64>, category: impl Into<String>) -> Self {
        Bin {
            lower,
            upper,
            category: category.into(),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower.is_none_or(|l| x >= l) && self.upper.is_none_or(|u| x < u)
    }
}

/// Per-attribute bin lists. Bins of one attribute never overlap.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Binning {
    rules: Vec<(String, Vec<Bin>)>,
}

impl Binning {
    pub fn new(rules: Vec<(String, Vec<Bin>)>) -> Result<Self> {
        for (attr, bins) in &rules {
            if bins.is_empty() {
                return Err(Error::Schema(format!(
                    "attribute {attr:?} has an empty bin list"
                )));
            }
            let mut sorted: Vec<&Bin> = bins.iter().collect();
            sorted.sort_by(|a, b| {
                let la = a.lower.unwrap_or(f64::NEG_INFINITY);
                let lb = b.lower.unwrap_or(f64::NEG_INFINITY);
                la.total_cmp(&lb)
            });
            for b in &sorted {
                if let (Some(l), Some(u)) = (b.lower, b.upper) {
                    if l >= u {
                        return Err(Error::Schema(format!(
                            "attribute {attr:?}: bin {:?} has lower >= upper",
                            b.category
                        )));
                    }
                }
            }
            for pair in sorted.windows(2) {
                let upper = pair[0].upper.unwrap_or(f64::INFINITY);
                let lower = pair[1].lower.unwrap_or(f64::NEG_INFINITY);
                if upper > lower {
                    return Err(Error::Schema(format!(
                        "attribute {attr:?}: bins {:?} and {:?} overlap",
                        pair[0].category, pair[1].category
                    )));
                }
            }
        }
        Ok(Binning { rules })
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rules(&self) -> &[(String, Vec<Bin>)] {
        &self.rules
    }

    pub fn bins_for(&self, attribute: &str) -> Option<&[Bin]> {
        self.rules
            .iter()
            .find(|(a, _)| a == attribute)
            .map(|(_, b)| b.as_slice())
    }
}

/// Replaces the raw numeric values of every binned attribute by their bin
/// category. Binned attributes end up with a fixed domain listing the
/// categories in bin order.
pub fn bin_numeric(dataset: Dataset, binning: &Binning) -> Result<Dataset> {
    let (mut schema, mut rows) = dataset.into_parts();
    for (name, bins) in binning.rules() {
        let j = schema
            .index_of(name)
            .ok_or_else(|| Error::MissingAttribute(name.clone()))?;
        let mut categories: Vec<String> = Vec::new();
        for b in bins {
            if !categories.contains(&b.category) {
                categories.push(b.category.clone());
            }
        }
        let attr = &schema.attributes[j];
        let mut recode: Vec<Option<u32>> = vec![None; attr.domain.len()];
        for row in rows.iter_mut() {
            let old = row.values[j] as usize;
            let new = match recode[old] {
                Some(c) => c,
                None => {
                    let raw = &attr.domain[old];
                    let bin_error = || Error::Binning {
                        attribute: name.clone(),
                        value: raw.clone(),
                    };
                    let x: f64 = raw.parse().map_err(|_| bin_error())?;
                    let bin = bins.iter().find(|b| b.contains(x)).ok_or_else(bin_error)?;
                    let c = categories.iter().position(|c| *c == bin.category).unwrap() as u32;
                    recode[old] = Some(c);
                    c
                }
            };
            row.values[j] = new;
        }
        schema.attributes[j] = Attribute {
            name: name.clone(),
            domain: categories,
            fixed: true,
        };
    }
    Ok(Dataset { schema, rows })
}

/// Seeded unstratified split. The rows are shuffled, the first
/// `floor((1 - test_fraction) * n)` form the training set and the remainder
/// the test set, both in shuffled order.
pub fn split(dataset: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Parameter(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n = dataset.len();
    let n_train = (((1.0 - test_fraction) * n as f64) + 1e-9).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let (train, test) = order.split_at(n_train.min(n));
    Ok((dataset.select(train), dataset.select(test)))
}
