use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use super::{Dataset, FeatureKind, FeatureSchema, FeatureSpec, Label};
use crate::error::{ensure, Error, Result};

/// Features with more than this fraction of empty cells are dropped on load.
pub const MAX_MISSING_FRACTION: f64 = 0.3;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadReport {
    pub dropped_features: Vec<String>,
    pub imputed_cells: usize,
    pub positive_label: String,
    pub negative_label: String,
}

pub fn load_schema(path: impl AsRef<Path>) -> Result<FeatureSchema> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let schema: FeatureSchema = serde_json::from_reader(BufReader::new(file))?;
    schema.validate()?;
    Ok(schema)
}

pub fn save_schema(schema: &FeatureSchema, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, schema)?;
    writeln!(w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Loads a CSV file described by a JSON schema sidecar.
pub fn load_csv_dataset(csv_path: impl AsRef<Path>, schema_path: impl AsRef<Path>) -> Result<Dataset> {
    let schema = load_schema(schema_path)?;
    let csv_path = csv_path.as_ref();
    let file = File::open(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let (data, report) = read_csv_dataset(BufReader::new(file), &schema)?;
    for name in &report.dropped_features {
        log::warn!("{}: dropped feature `{name}` (too many missing cells)", csv_path.display());
    }
    if report.imputed_cells > 0 {
        log::info!("{}: imputed {} missing cells", csv_path.display(), report.imputed_cells);
    }
    Ok(data)
}

enum Column {
    Continuous(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

/// Parses CSV text against `schema`.
///
/// Categorical codes become vocabulary indices, sparse features are dropped,
/// the remaining gaps are imputed (median / mode) and the rarer class is
/// mapped to [`Label::Positive`] unless the schema names the positive label.
pub fn read_csv_dataset<R: Read>(reader: R, schema: &FeatureSchema) -> Result<(Dataset, LoadReport)> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();

    let mut position: HashMap<&str, usize> = HashMap::new();
    for (i, h) in header.iter().enumerate() {
        ensure!(
            position.insert(h.as_str(), i).is_none(),
            Schema,
            "duplicate CSV column `{h}`"
        );
    }
    let expected = schema.n_features() + 1;
    for name in schema.features.iter().map(|f| &f.name).chain([&schema.label_column]) {
        ensure!(
            position.contains_key(name.as_str()),
            Schema,
            "CSV header lacks schema column `{name}`"
        );
    }
    ensure!(
        header.len() == expected,
        Schema,
        "CSV has {} columns but the schema describes {expected}",
        header.len()
    );

    let label_pos = position[schema.label_column.as_str()];
    let feature_pos: Vec<usize> = schema
        .features
        .iter()
        .map(|f| position[f.name.as_str()])
        .collect();

    let mut columns: Vec<Column> = schema
        .features
        .iter()
        .map(|f| match f.kind {
            FeatureKind::Continuous => Column::Continuous(Vec::new()),
            FeatureKind::Categorical { .. } => Column::Categorical(Vec::new()),
        })
        .collect();
    let mut raw_labels = Vec::new();

    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let line = r + 2;
        let label = record.get(label_pos).unwrap_or("").trim();
        ensure!(!label.is_empty(), Data, "line {line}: missing label");
        raw_labels.push(label.to_string());
        for (j, col) in columns.iter_mut().enumerate() {
            let cell = record.get(feature_pos[j]).unwrap_or("").trim();
            match col {
                Column::Continuous(v) => {
                    if cell.is_empty() {
                        v.push(None);
                    } else {
                        let x: f64 = cell.parse().map_err(|_| {
                            Error::Data(format!(
                                "line {line}, column `{}`: `{cell}` is not a number",
                                schema.features[j].name
                            ))
                        })?;
                        ensure!(
                            x.is_finite(),
                            Data,
                            "line {line}, column `{}`: non-finite value",
                            schema.features[j].name
                        );
                        v.push(Some(x));
                    }
                }
                Column::Categorical(v) => {
                    v.push((!cell.is_empty()).then(|| cell.to_string()));
                }
            }
        }
    }

    let n = raw_labels.len();
    ensure!(n > 0, Data, "CSV has no data rows");
    let (labels, positive_label, negative_label) = map_labels(schema, &raw_labels)?;

    let mut report = LoadReport {
        positive_label: positive_label.clone(),
        negative_label: negative_label.clone(),
        ..LoadReport::default()
    };
    let mut kept_specs = Vec::new();
    let mut kept_columns: Vec<Vec<f64>> = Vec::new();

    for (spec, column) in schema.features.iter().zip(columns) {
        let missing = match &column {
            Column::Continuous(v) => v.iter().filter(|c| c.is_none()).count(),
            Column::Categorical(v) => v.iter().filter(|c| c.is_none()).count(),
        };
        if missing as f64 / n as f64 > MAX_MISSING_FRACTION {
            report.dropped_features.push(spec.name.clone());
            continue;
        }
        report.imputed_cells += missing;
        match column {
            Column::Continuous(v) => {
                let fill = median(v.iter().flatten().copied());
                kept_columns.push(v.into_iter().map(|c| c.unwrap_or(fill)).collect());
                kept_specs.push(spec.clone());
            }
            Column::Categorical(v) => {
                let (spec, indices) = encode_categorical(spec, &v)?;
                kept_columns.push(indices);
                kept_specs.push(spec);
            }
        }
    }
    ensure!(
        !kept_specs.is_empty(),
        Data,
        "every feature exceeded the missing-value threshold"
    );

    let out_schema = Arc::new(FeatureSchema {
        features: kept_specs,
        label_column: schema.label_column.clone(),
        positive_label: Some(positive_label),
        negative_label: Some(negative_label),
    });
    let m = kept_columns.len();
    let mut values = Vec::with_capacity(n * m);
    for i in 0..n {
        values.extend(kept_columns.iter().map(|c| c[i]));
    }
    Ok((Dataset::new(out_schema, values, labels)?, report))
}

fn map_labels(schema: &FeatureSchema, raw: &[String]) -> Result<(Vec<Label>, String, String)> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for l in raw {
        *counts.entry(l.as_str()).or_default() += 1;
    }
    ensure!(
        counts.len() == 2,
        Data,
        "label column `{}` has {} distinct values, expected 2",
        schema.label_column,
        counts.len()
    );
    let mut values: Vec<(&str, usize)> = counts.into_iter().collect();
    values.sort();
    let positive = match (&schema.positive_label, &schema.negative_label) {
        (Some(p), _) => {
            ensure!(
                values.iter().any(|(v, _)| v == p),
                Data,
                "positive label `{p}` does not occur in the data"
            );
            p.clone()
        }
        (None, Some(neg)) => {
            let other = values.iter().find(|(v, _)| v != neg).map(|(v, _)| v.to_string());
            ensure!(
                values.iter().any(|(v, _)| v == neg),
                Data,
                "negative label `{neg}` does not occur in the data"
            );
            other.expect("two distinct labels")
        }
        // Rarer class is positive; on an exact tie the lexicographically
        // greater label wins.
        (None, None) => {
            let (a, b) = (values[0], values[1]);
            if a.1 < b.1 { a.0 } else { b.0 }.to_string()
        }
    };
    let negative = values
        .iter()
        .find(|(v, _)| *v != positive)
        .map(|(v, _)| v.to_string())
        .expect("two distinct labels");
    if let Some(neg) = &schema.negative_label {
        ensure!(
            *neg == negative,
            Data,
            "negative label `{neg}` does not match the data (found `{negative}`)"
        );
    }
    let labels = raw
        .iter()
        .map(|l| {
            if *l == positive {
                Label::Positive
            } else {
                Label::Negative
            }
        })
        .collect();
    Ok((labels, positive, negative))
}

fn median(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

fn encode_categorical(spec: &FeatureSpec, cells: &[Option<String>]) -> Result<(FeatureSpec, Vec<f64>)> {
    let FeatureKind::Categorical { vocabulary, closed } = &spec.kind else {
        unreachable!("encode_categorical called on a continuous feature");
    };
    let mut vocabulary = vocabulary.clone();
    let learned = vocabulary.is_empty();
    let mut index: HashMap<String, usize> = vocabulary
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), i))
        .collect();
    let unseen: BTreeSet<&str> = cells
        .iter()
        .flatten()
        .map(String::as_str)
        .filter(|c| !index.contains_key(*c))
        .collect();
    if let Some(first) = unseen.iter().next() {
        ensure!(
            learned || !closed,
            Data,
            "value `{first}` of feature `{}` is not in its closed vocabulary",
            spec.name
        );
        for v in unseen {
            index.insert(v.to_string(), vocabulary.len());
            vocabulary.push(v.to_string());
        }
    }
    ensure!(
        !vocabulary.is_empty(),
        Data,
        "feature `{}` has an empty vocabulary",
        spec.name
    );

    let mut counts = vec![0usize; vocabulary.len()];
    for c in cells.iter().flatten() {
        counts[index[c]] += 1;
    }
    // Mode; ties go to the lowest vocabulary index.
    let mode = counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let encoded = cells
        .iter()
        .map(|c| c.as_ref().map_or(mode, |c| index[c]) as f64)
        .collect();
    let spec = FeatureSpec {
        name: spec.name.clone(),
        kind: FeatureKind::Categorical {
            vocabulary,
            closed: *closed,
        },
    };
    Ok((spec, encoded))
}

/// Writes `data` as CSV: one column per feature plus the label column.
pub fn write_csv_dataset<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let schema = data.schema();
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = schema.features.iter().map(|f| f.name.as_str()).collect();
    header.push(&schema.label_column);
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for (i, row) in data.rows().enumerate() {
        record.clear();
        for (spec, &v) in schema.features.iter().zip(row) {
            match spec.vocabulary() {
                Some(vocab) => record.push(vocab[v as usize].clone()),
                None => record.push(format!("{v}")),
            }
        }
        record.push(schema.label_text(data.label(i)).to_string());
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_csv_dataset(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_dataset(data, BufWriter::new(file))
}
