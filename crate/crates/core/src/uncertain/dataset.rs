use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

use super::marginal::make_marginal;
use super::tuple::UncertainTuple;

/// Name of the class column in dataset CSV files.
pub const LABEL_COLUMN: &str = "label";

/// A set of uncertain tuples over named attributes.
///
/// `origin_mass` is the mass of the root training set the tuples descend
/// from; it stays fixed when the set is partitioned.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub attribute_names: Vec<String>,
    pub label_set: Vec<String>,
    pub tuples: Vec<UncertainTuple>,
    pub origin_mass: f64,
}

impl Dataset {
    /// Builds a dataset, sorting the label set and remapping tuple labels.
    pub fn new(
        attribute_names: Vec<String>,
        label_set: Vec<String>,
        tuples: Vec<UncertainTuple>,
    ) -> Result<Self> {
        let mut sorted = label_set.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != label_set.len() {
            return Err(Error::InvalidParameter("duplicate labels in label set".into()));
        }
        let remap: Vec<usize> = label_set
            .iter()
            .map(|l| sorted.binary_search(l).expect("label present"))
            .collect();
        let mut tuples = tuples;
        for t in &mut tuples {
            if t.n_attributes() != attribute_names.len() {
                return Err(Error::Schema(format!(
                    "tuple {} has {} attributes, dataset has {}",
                    t.id,
                    t.n_attributes(),
                    attribute_names.len()
                )));
            }
            if let Some(l) = t.label {
                let mapped = *remap.get(l).ok_or_else(|| {
                    Error::Schema(format!("tuple {} has unknown label index {l}", t.id))
                })?;
                t.label = Some(mapped);
            }
        }
        let origin_mass = tuples.iter().map(|t| t.tp).sum();
        Ok(Dataset {
            attribute_names,
            label_set: sorted,
            tuples,
            origin_mass,
        })
    }

    /// A child dataset holding `tuples`, sharing names and the origin mass.
    pub fn derive(&self, tuples: Vec<UncertainTuple>) -> Dataset {
        Dataset {
            attribute_names: self.attribute_names.clone(),
            label_set: self.label_set.clone(),
            tuples,
            origin_mass: self.origin_mass,
        }
    }

    /// A fresh root dataset from a subset of tuples (used by cross-validation).
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let tuples: Vec<_> = indices.iter().map(|&i| self.tuples[i].clone()).collect();
        let origin_mass = tuples.iter().map(|t| t.tp).sum();
        Dataset {
            attribute_names: self.attribute_names.clone(),
            label_set: self.label_set.clone(),
            tuples,
            origin_mass,
        }
    }

    pub fn n_attributes(&self) -> usize {
        self.attribute_names.len()
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.label_set.iter().position(|l| l == label)
    }

    /// Tuple-probability mass per label, aligned with `label_set`.
    pub fn label_masses(&self) -> Vec<f64> {
        let mut masses = vec![0.0; self.label_set.len()];
        for t in &self.tuples {
            if let Some(l) = t.label {
                masses[l] += t.tp;
            }
        }
        masses
    }
}

pub fn dataset_mass(d: &Dataset) -> f64 {
    d.tuples.iter().map(|t| t.tp).sum()
}

/// Share of the dataset mass carried by tuples with `label`.
pub fn label_probability(d: &Dataset, label: &str) -> Result<f64> {
    let idx = d
        .label_index(label)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown label '{label}'")))?;
    Ok(label_distribution(d)?[idx])
}

/// All label probabilities, aligned with `label_set`.
pub fn label_distribution(d: &Dataset) -> Result<Vec<f64>> {
    let masses = d.label_masses();
    let total: f64 = masses.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptyDataset);
    }
    Ok(masses.into_iter().map(|m| m / total).collect())
}

/// Reads a dataset CSV (`attr1,...,attrK,label`) and expands each exact value
/// into a marginal with relative deviation `uncertainty`.
///
/// With `declared_labels` the label column is validated against that set;
/// otherwise the set is whatever labels occur in the file.
pub fn load_dataset(
    path: impl AsRef<Path>,
    uncertainty: f64,
    declared_labels: Option<&[String]>,
) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file, &path.display().to_string(), uncertainty, declared_labels, true)
}

/// Reads design points: the dataset format where the label column is
/// optional. Tuple ids are 1-based row numbers.
pub fn load_designs(path: impl AsRef<Path>, uncertainty: f64) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file, &path.display().to_string(), uncertainty, None, false)
}

pub fn read_dataset<R: Read>(
    reader: R,
    source: &str,
    uncertainty: f64,
    declared_labels: Option<&[String]>,
    require_label: bool,
) -> Result<Dataset> {
    let ingest = |row: usize, column: &str, message: String| Error::Ingestion {
        path: source.to_string(),
        row,
        column: column.to_string(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| ingest(1, "-", e.to_string()))?
        .clone();
    let label_col = headers.iter().position(|h| h == LABEL_COLUMN);
    if require_label && label_col.is_none() {
        return Err(ingest(1, LABEL_COLUMN, "missing label column".into()));
    }
    if let Some(c) = label_col {
        if c + 1 != headers.len() {
            return Err(ingest(1, LABEL_COLUMN, "label must be the last column".into()));
        }
    }
    let attribute_names: Vec<String> = headers
        .iter()
        .take(label_col.unwrap_or(headers.len()))
        .map(str::to_string)
        .collect();
    if attribute_names.is_empty() {
        return Err(ingest(1, "-", "no attribute columns".into()));
    }

    let mut labels: Vec<String> = declared_labels.map(<[String]>::to_vec).unwrap_or_default();
    let mut tuples = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        // header is row 1
        let row = i + 2;
        let record = record.map_err(|e| ingest(row, "-", e.to_string()))?;
        if record.len() != headers.len() {
            return Err(ingest(
                row,
                "-",
                format!("expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        let mut marginals = Vec::with_capacity(attribute_names.len());
        for (name, field) in attribute_names.iter().zip(record.iter()) {
            let value: f64 = field
                .parse()
                .map_err(|_| ingest(row, name, format!("'{field}' is not a number")))?;
            if !value.is_finite() {
                return Err(ingest(row, name, format!("'{field}' is not finite")));
            }
            let m = make_marginal(value, uncertainty).map_err(|e| ingest(row, name, e.to_string()))?;
            marginals.push(m);
        }
        let label = match label_col {
            Some(c) => {
                let name = &record[c];
                if name.is_empty() {
                    return Err(ingest(row, LABEL_COLUMN, "empty label".into()));
                }
                match labels.iter().position(|l| l == name) {
                    Some(idx) => Some(idx),
                    None if declared_labels.is_some() => {
                        return Err(ingest(
                            row,
                            LABEL_COLUMN,
                            format!("label '{name}' is not in the declared label set"),
                        ))
                    }
                    None => {
                        labels.push(name.to_string());
                        Some(labels.len() - 1)
                    }
                }
            }
            None => None,
        };
        tuples.push(UncertainTuple::new((i + 1).to_string(), marginals, label));
    }
    Dataset::new(attribute_names, labels, tuples)
}
