//! Declarative table configuration (TOML).
//!
//! ```toml
//! [table]
//! delimiter = ","
//! null_markers = ["?", ""]
//! drop = ["fnlwgt"]
//!
//! [label]
//! column = "income"
//! positive = [">50K", ">50K."]
//!
//! [[attribute]]
//! name = "age"
//! bins = [{ upper = 25, category = "YoungOrOld" }, { lower = 25, category = "Older" }]
//!
//! [[attribute]]
//! name = "sex"
//! domain = ["Male", "Female"]
//!
//! [run]
//! k = 5
//! epsilon = 0.01
//! ```
//!
//! Attribute order in the file is the attribute order of the schema.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Attribute, Bin, Binning, LabelSpec, Schema, TableFormat};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delimiter: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub null_markers: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub drop: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelSection {
    pub column: String,
    pub positive: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negative: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeSection {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<Vec<Bin>>,
}

/// Defaults for run parameters; command-line flags override them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarity: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub table: TableSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<LabelSection>,
    #[serde(rename = "attribute")]
    pub attributes: Vec<AttributeSection>,
    #[serde(default, skip_serializing_if = "is_default_run")]
    pub run: RunSection,
}

fn is_default_run(run: &RunSection) -> bool {
    *run == RunSection::default()
}

/// A parsed config: schema, file layout, binning and run defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct TableConfig {
    pub schema: Schema,
    pub format: TableFormat,
    pub binning: Binning,
    pub run: RunSection,
}

impl TableConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn from_file(file: ConfigFile) -> Result<Self> {
        let mut format = TableFormat::default();
        if let Some(d) = &file.table.delimiter {
            format.delimiter = match d.as_bytes() {
                [b] => *b,
                _ => {
                    return Err(Error::Config(format!(
                        "delimiter must be a single ASCII character, got {d:?}"
                    )))
                }
            };
        }
        if let Some(markers) = file.table.null_markers {
            format.null_markers = markers;
        }

        let mut attributes = Vec::with_capacity(file.attributes.len());
        let mut rules = Vec::new();
        for a in file.attributes {
            match (a.domain, a.bins) {
                (Some(_), Some(_)) => {
                    return Err(Error::Config(format!(
                        "attribute {:?} declares both a domain and bins",
                        a.name
                    )))
                }
                (Some(domain), None) => attributes.push(Attribute::with_domain(a.name, domain)),
                (None, Some(bins)) => {
                    rules.push((a.name.clone(), bins));
                    attributes.push(Attribute::open(a.name));
                }
                (None, None) => attributes.push(Attribute::open(a.name)),
            }
        }
        let label = file.label.map(|l| LabelSpec {
            column: l.column,
            positive: l.positive,
            negative: l.negative,
        });
        Ok(TableConfig {
            schema: Schema::new(attributes, label, file.table.drop)?,
            format,
            binning: Binning::new(rules)?,
            run: file.run,
        })
    }

    /// Config describing `schema` with every domain spelled out and no bins.
    pub fn describe(schema: &Schema, format: &TableFormat, run: RunSection) -> ConfigFile {
        ConfigFile {
            table: TableSection {
                delimiter: Some((format.delimiter as char).to_string()),
                null_markers: Some(format.null_markers.clone()),
                drop: schema.drop_list().to_vec(),
            },
            label: schema.label().map(|l| LabelSection {
                column: l.column.clone(),
                positive: l.positive.clone(),
                negative: l.negative.clone(),
            }),
            attributes: schema
                .attributes()
                .iter()
                .map(|a| AttributeSection {
                    name: a.name.clone(),
                    domain: Some(a.domain.clone()),
                    bins: None,
                })
                .collect(),
            run,
        }
    }

    pub fn to_toml_string(file: &ConfigFile) -> Result<String> {
        toml::to_string(file).map_err(|e| Error::Config(e.to_string()))
    }
}
