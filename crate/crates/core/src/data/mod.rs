//! Datasets of mixed continuous/categorical records with ±1 labels.
//!
//! Records are stored row-major as `f64`. Categorical cells hold the index of
//! the value in the feature's vocabulary, so every record can be handed around
//! as a plain `&[f64]`.

mod io;
mod transform;

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

pub use io::{
    load_csv_dataset, load_schema, read_csv_dataset, save_csv_dataset, save_schema,
    write_csv_dataset, LoadReport,
};
pub use transform::{
    minmax_normalize, partition_by_class, stratified_split, ClassPartition, MinMaxScaler,
    Normalized, Split,
};

/// Class label. The minority class is always `Positive`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    /// Sign convention shared by every scorer: zero maps to `Positive`.
    pub fn from_score(score: f64) -> Label {
        if score >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureKind {
    Continuous,
    Categorical {
        /// Ordered category codes. Empty in a schema file means "learn the
        /// vocabulary from the data".
        #[serde(default)]
        vocabulary: Vec<String>,
        /// A closed vocabulary rejects unknown codes at load time.
        #[serde(default = "default_closed")]
        closed: bool,
    },
}

fn default_closed() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

impl FeatureSpec {
    pub fn continuous(name: impl Into<String>) -> Self {
        FeatureSpec {
            name: name.into(),
            kind: FeatureKind::Continuous,
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        vocabulary: impl IntoIterator<Item = S>,
    ) -> Self {
        FeatureSpec {
            name: name.into(),
            kind: FeatureKind::Categorical {
                vocabulary: vocabulary.into_iter().map(Into::into).collect(),
                closed: true,
            },
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, FeatureKind::Categorical { .. })
    }

    pub fn vocabulary(&self) -> Option<&[String]> {
        match &self.kind {
            FeatureKind::Categorical { vocabulary, .. } => Some(vocabulary),
            FeatureKind::Continuous => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<FeatureSpec>,
    pub label_column: String,
    /// Label text mapped to `Positive`. When absent the rarer class wins.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negative_label: Option<String>,
}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureSpec>, label_column: impl Into<String>) -> Result<Self> {
        let schema = FeatureSchema {
            features,
            label_column: label_column.into(),
            positive_label: None,
            negative_label: None,
        };
        schema.validate()?;
        Ok(schema)
    }

    /// Schema of `n` continuous features named `x1..xn`.
    pub fn all_continuous(n: usize) -> Self {
        FeatureSchema {
            features: (1..=n).map(|j| FeatureSpec::continuous(format!("x{j}"))).collect(),
            label_column: "y".into(),
            positive_label: Some("1".into()),
            negative_label: Some("-1".into()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.features.is_empty(), Schema, "schema has no features");
        ensure!(!self.label_column.is_empty(), Schema, "label column name is empty");
        let mut names = HashSet::new();
        for f in &self.features {
            ensure!(
                names.insert(f.name.as_str()),
                Schema,
                "duplicate feature name `{}`",
                f.name
            );
            if let Some(vocab) = f.vocabulary() {
                let mut seen = HashSet::new();
                for v in vocab {
                    ensure!(
                        seen.insert(v.as_str()),
                        Schema,
                        "duplicate category `{v}` in feature `{}`",
                        f.name
                    );
                }
            }
        }
        ensure!(
            !names.contains(self.label_column.as_str()),
            Schema,
            "label column `{}` is also listed as a feature",
            self.label_column
        );
        if let (Some(p), Some(n)) = (&self.positive_label, &self.negative_label) {
            ensure!(p != n, Schema, "positive and negative labels are both `{p}`");
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn is_categorical(&self, feature: usize) -> bool {
        self.features[feature].is_categorical()
    }

    pub fn categorical_mask(&self) -> Vec<bool> {
        self.features.iter().map(FeatureSpec::is_categorical).collect()
    }

    pub fn has_categorical(&self) -> bool {
        self.features.iter().any(FeatureSpec::is_categorical)
    }

    pub(crate) fn label_text(&self, label: Label) -> &str {
        match label {
            Label::Positive => self.positive_label.as_deref().unwrap_or("1"),
            Label::Negative => self.negative_label.as_deref().unwrap_or("-1"),
        }
    }
}

/// Immutable table of records; cloning shares the schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    schema: Arc<FeatureSchema>,
    values: Vec<f64>,
    labels: Vec<Label>,
}

impl Dataset {
    /// Builds a dataset from row-major `values`, checking every invariant.
    pub fn new(schema: Arc<FeatureSchema>, values: Vec<f64>, labels: Vec<Label>) -> Result<Self> {
        let m = schema.n_features();
        ensure!(
            values.len() == labels.len() * m,
            Data,
            "{} values do not fill {} rows of {} features",
            values.len(),
            labels.len(),
            m
        );
        let data = Dataset {
            schema,
            values,
            labels,
        };
        data.check_cells()?;
        Ok(data)
    }

    pub fn from_rows(
        schema: Arc<FeatureSchema>,
        rows: &[Vec<f64>],
        labels: Vec<Label>,
    ) -> Result<Self> {
        ensure!(
            rows.len() == labels.len(),
            Data,
            "{} rows but {} labels",
            rows.len(),
            labels.len()
        );
        let m = schema.n_features();
        let mut values = Vec::with_capacity(rows.len() * m);
        for (i, row) in rows.iter().enumerate() {
            ensure!(row.len() == m, Data, "row {i} has {} values, expected {m}", row.len());
            values.extend_from_slice(row);
        }
        Dataset::new(schema, values, labels)
    }

    pub fn empty(schema: Arc<FeatureSchema>) -> Self {
        Dataset {
            schema,
            values: Vec::new(),
            labels: Vec::new(),
        }
    }

    fn check_cells(&self) -> Result<()> {
        let m = self.n_features();
        for (i, row) in self.values.chunks(m.max(1)).enumerate() {
            for (j, &v) in row.iter().enumerate() {
                ensure!(v.is_finite(), Data, "row {i}, feature {j}: non-finite value");
                if let Some(vocab) = self.schema.features[j].vocabulary() {
                    ensure!(
                        v >= 0.0 && v.fract() == 0.0 && (v as usize) < vocab.len(),
                        Data,
                        "row {i}, feature `{}`: category index {v} outside vocabulary of {}",
                        self.schema.features[j].name,
                        vocab.len()
                    );
                }
            }
        }
        Ok(())
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn schema_arc(&self) -> &Arc<FeatureSchema> {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.schema.n_features()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.n_features();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.n_features())
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn count_positive(&self) -> usize {
        self.labels.iter().filter(|l| l.is_positive()).count()
    }

    pub fn count_negative(&self) -> usize {
        self.n_rows() - self.count_positive()
    }

    /// Rows at `indices`, in that order (repeats allowed).
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let m = self.n_features();
        let mut values = Vec::with_capacity(indices.len() * m);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            values.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            schema: Arc::clone(&self.schema),
            values,
            labels,
        }
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        ensure!(
            Arc::ptr_eq(&self.schema, &other.schema) || self.schema == other.schema,
            Data,
            "cannot concatenate datasets with different schemas"
        );
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Ok(Dataset {
            schema: Arc::clone(&self.schema),
            values,
            labels,
        })
    }

    /// Appends records that the caller guarantees are valid for the schema.
    pub(crate) fn extend_unchecked(&mut self, values: &[f64], labels: &[Label]) {
        debug_assert_eq!(values.len(), labels.len() * self.n_features());
        self.values.extend_from_slice(values);
        self.labels.extend_from_slice(labels);
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> Dataset {
        debug_assert_eq!(values.len(), self.values.len());
        Dataset {
            schema: Arc::clone(&self.schema),
            values,
            labels: self.labels.clone(),
        }
    }
}

/// Per-row nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(values: Vec<f64>) -> Result<Self> {
        ensure!(!values.is_empty(), InvalidArgument, "weight vector is empty");
        ensure!(
            values.iter().all(|w| w.is_finite() && *w >= 0.0),
            InvalidArgument,
            "weights must be finite and nonnegative"
        );
        let sum: f64 = values.iter().sum();
        ensure!(
            (sum - 1.0).abs() <= Self::SUM_TOLERANCE,
            InvalidArgument,
            "weights sum to {sum}, expected 1"
        );
        Ok(WeightVector(values))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform weight vector needs at least one entry");
        WeightVector(vec![1.0 / n as f64; n])
    }

    /// Divides nonnegative values by their sum.
    pub fn normalized(values: Vec<f64>) -> Result<Self> {
        ensure!(!values.is_empty(), InvalidArgument, "weight vector is empty");
        ensure!(
            values.iter().all(|w| w.is_finite() && *w >= 0.0),
            InvalidArgument,
            "weights must be finite and nonnegative"
        );
        let sum: f64 = values.iter().sum();
        ensure!(sum > 0.0, InvalidArgument, "weights sum to zero");
        Ok(WeightVector(values.into_iter().map(|w| w / sum).collect()))
    }

    /// The entries at `indices`, renormalized to sum to one.
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        WeightVector::normalized(indices.iter().map(|&i| self.0[i]).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for WeightVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        WeightVector::new(values)
    }
}
