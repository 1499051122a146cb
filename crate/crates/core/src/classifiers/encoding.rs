use serde::{Deserialize, Serialize};

use crate::data::FeatureSchema;

/// Expands categorical features into indicator columns; continuous features
/// are copied through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneHotEncoder {
    /// Vocabulary size per feature, 0 for continuous features.
    widths: Vec<usize>,
    n_outputs: usize,
}

impl OneHotEncoder {
    pub fn new(schema: &FeatureSchema) -> Self {
        let widths: Vec<usize> = schema
            .features
            .iter()
            .map(|f| f.vocabulary().map_or(0, <[String]>::len))
            .collect();
        let n_outputs = widths.iter().map(|&w| w.max(1)).sum();
        OneHotEncoder { widths, n_outputs }
    }

    pub fn n_inputs(&self) -> usize {
        self.widths.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    /// Appends the encoding of `row` to `out`. A category index outside the
    /// vocabulary encodes as all zeros.
    pub fn encode_into(&self, row: &[f64], out: &mut Vec<f64>) {
        for (&v, &w) in row.iter().zip(&self.widths) {
            if w == 0 {
                out.push(v);
            } else {
                let start = out.len();
                out.resize(start + w, 0.0);
                let idx = v as usize;
                if idx < w {
                    out[start + idx] = 1.0;
                }
            }
        }
    }

    pub fn encode(&self, row: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_outputs);
        self.encode_into(row, &mut out);
        out
    }

    /// Encodes every row into one row-major buffer.
    pub fn encode_rows<'a>(&self, rows: impl Iterator<Item = &'a [f64]>) -> Vec<f64> {
        let mut out = Vec::new();
        for r in rows {
            self.encode_into(r, &mut out);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureSpec;

    #[test]
    fn expands_categories() {
        let schema = FeatureSchema::new(
            vec![
                FeatureSpec::continuous("x"),
                FeatureSpec::categorical("c", ["a", "b", "c"]),
            ],
            "y",
        )
        .unwrap();
        let enc = OneHotEncoder::new(&schema);
        assert_eq!(enc.n_outputs(), 4);
        assert_eq!(enc.encode(&[0.5, 2.0]), vec![0.5, 0.0, 0.0, 1.0]);
        assert_eq!(enc.encode(&[0.5, 7.0]), vec![0.5, 0.0, 0.0, 0.0]);
    }
}
