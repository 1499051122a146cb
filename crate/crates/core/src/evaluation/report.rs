//! Result tables on disk and pairwise signed-rank comparisons between pipelines.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::experiment::{summarize, PipelineFailure, PipelineSummary, ResultRow};
use super::simulation::SimulationMetadata;
use super::wilcoxon::{wilcoxon_signed_rank_with, RankBasis, WilcoxonOptions};
use crate::error::{ensure, Error, Result};

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const PLOTDATA_FILE: &str = "plotdata.csv";
pub const WILCOXON_FILE: &str = "wilcoxon.csv";

/// Significance level of the pairwise tests.
pub const DEFAULT_ALPHA: f64 = 0.05;

pub fn write_results_csv<W: Write>(rows: &[ResultRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record([
            "dataset",
            "pipeline",
            "base_classifier",
            "repetition",
            "split_seed",
            "recall",
            "precision",
            "f_beta",
            "auc",
            "wallclock_ms",
        ])?;
    }
    w.flush().map_err(|e| Error::io("<results writer>", e))
}

pub fn read_results_csv<R: Read>(reader: R) -> Result<Vec<ResultRow>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(Error::from)
}

/// Long format: one line per (row, metric) observation.
pub fn write_plotdata_csv<W: Write>(rows: &[ResultRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["dataset", "pipeline", "base_classifier", "repetition", "metric", "value"])?;
    for row in rows {
        for (metric, value) in [
            ("recall", row.recall),
            ("precision", row.precision),
            ("f_beta", row.f_beta),
            ("auc", row.auc),
        ] {
            w.write_record([
                row.dataset.as_str(),
                row.pipeline.as_str(),
                row.base_classifier.as_str(),
                &row.repetition.to_string(),
                metric,
                &value.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<plotdata writer>", e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDocument {
    pub beta: f64,
    pub repetitions: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub pipelines: Vec<PipelineSummary>,
    pub failures: Vec<PipelineFailure>,
    /// Generating model of every simulated dataset, keyed by dataset name.
    pub simulations: BTreeMap<String, SimulationMetadata>,
}

impl SummaryDocument {
    pub fn new(rows: &[ResultRow], failures: &[PipelineFailure], beta: f64, repetitions: usize, train_fraction: f64, seed: u64) -> Self {
        SummaryDocument {
            beta,
            repetitions,
            train_fraction,
            seed,
            pipelines: summarize(rows),
            failures: failures.to_vec(),
            simulations: BTreeMap::new(),
        }
    }

    pub fn write<W: Write>(&self, mut writer: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut writer, self)?;
        writer.write_all(b"\n").map_err(|e| Error::io("<summary writer>", e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairingMode {
    /// One test per pipeline pair over the concatenated pairs of every dataset.
    Pooled,
    /// One test per pipeline pair and dataset.
    PerDataset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Recall,
    Precision,
    FBeta,
    Auc,
}

impl Metric {
    pub fn of(self, row: &ResultRow) -> f64 {
        match self {
            Metric::Recall => row.recall,
            Metric::Precision => row.precision,
            Metric::FBeta => row.f_beta,
            Metric::Auc => row.auc,
        }
    }

    pub fn parse(s: &str) -> Result<Metric> {
        Ok(match s {
            "recall" => Metric::Recall,
            "precision" => Metric::Precision,
            "f_beta" => Metric::FBeta,
            "auc" => Metric::Auc,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown metric `{other}` (expected recall, precision, f_beta or auc)"
                )))
            }
        })
    }
}

/// Test outcome for one ordered pipeline pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonCell {
    /// Dataset name, or `all` when pooled.
    pub scope: String,
    pub row: String,
    pub col: String,
    pub n_effective: Option<usize>,
    pub w_plus: Option<f64>,
    pub w_minus: Option<f64>,
    pub z: Option<f64>,
    pub p_value: Option<f64>,
    pub rank_basis: Option<RankBasis>,
    pub significant: bool,
}

impl WilcoxonCell {
    pub fn is_defined(&self) -> bool {
        self.p_value.is_some()
    }
}

/// One pipeline's values keyed by (dataset, repetition), with the split seed.
type PairedColumn<'a> = BTreeMap<(&'a str, usize), (u64, f64)>;

/// Pairwise signed-rank tests on `metric`. Cell (row `i`, col `j`) tests
/// `metric(j) - metric(i)` over paired repetitions, so a column pipeline that
/// wins everywhere shows the negative-rank marker in its row partner's line.
/// Pairs must share the same (dataset, repetition, split seed) keys.
pub fn pairwise_wilcoxon(
    rows: &[ResultRow],
    metric: Metric,
    mode: PairingMode,
    alpha: f64,
    opts: &WilcoxonOptions,
) -> Result<Vec<WilcoxonCell>> {
    ensure!(!rows.is_empty(), InvalidArgument, "no result rows to compare");
    let mut pipelines: Vec<&str> = Vec::new();
    let mut datasets: Vec<&str> = Vec::new();
    let mut table: BTreeMap<&str, PairedColumn> = BTreeMap::new();
    for r in rows {
        if !pipelines.contains(&r.pipeline.as_str()) {
            pipelines.push(&r.pipeline);
        }
        if !datasets.contains(&r.dataset.as_str()) {
            datasets.push(&r.dataset);
        }
        let prev = table
            .entry(&r.pipeline)
            .or_default()
            .insert((&r.dataset, r.repetition), (r.split_seed, metric.of(r)));
        ensure!(
            prev.is_none(),
            Data,
            "pipeline `{}` has two rows for dataset `{}` repetition {}",
            r.pipeline,
            r.dataset,
            r.repetition
        );
    }
    let reference = &table[pipelines[0]];
    for p in &pipelines[1..] {
        let other = &table[p];
        ensure!(
            other.len() == reference.len()
                && other.iter().zip(reference).all(|((ka, (sa, _)), (kb, (sb, _)))| ka == kb && sa == sb),
            Data,
            "pipelines `{}` and `{p}` are not paired: their repetitions or split seeds differ",
            pipelines[0]
        );
    }

    let scopes: Vec<Option<&str>> = match mode {
        PairingMode::Pooled => vec![None],
        PairingMode::PerDataset => datasets.iter().map(|d| Some(*d)).collect(),
    };
    let values = |p: &str, scope: Option<&str>| -> Vec<f64> {
        table[p]
            .iter()
            .filter(|((d, _), _)| scope.map_or(true, |s| s == *d))
            .map(|(_, (_, v))| *v)
            .collect()
    };
    let mut cells = Vec::new();
    for scope in scopes {
        for &row in &pipelines {
            for &col in &pipelines {
                let mut cell = WilcoxonCell {
                    scope: scope.unwrap_or("all").to_string(),
                    row: row.to_string(),
                    col: col.to_string(),
                    n_effective: None,
                    w_plus: None,
                    w_minus: None,
                    z: None,
                    p_value: None,
                    rank_basis: None,
                    significant: false,
                };
                if row != col {
                    // All-zero differences leave the cell undefined.
                    if let Ok(t) = wilcoxon_signed_rank_with(&values(col, scope), &values(row, scope), opts) {
                        cell.n_effective = Some(t.n_effective);
                        cell.w_plus = Some(t.w_plus);
                        cell.w_minus = Some(t.w_minus);
                        cell.z = Some(t.z);
                        cell.p_value = Some(t.p_two_sided);
                        cell.rank_basis = Some(t.rank_basis);
                        cell.significant = t.p_two_sided < alpha;
                    }
                }
                cells.push(cell);
            }
        }
    }
    Ok(cells)
}

pub fn write_wilcoxon_csv<W: Write>(cells: &[WilcoxonCell], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "scope",
        "row_pipeline",
        "col_pipeline",
        "n_effective",
        "w_plus",
        "w_minus",
        "z",
        "p_value",
        "rank_basis",
        "significant",
    ])?;
    fn opt<T: ToString>(v: Option<T>) -> String {
        v.map(|x| x.to_string()).unwrap_or_default()
    }
    for c in cells {
        w.write_record([
            c.scope.clone(),
            c.row.clone(),
            c.col.clone(),
            opt(c.n_effective),
            opt(c.w_plus),
            opt(c.w_minus),
            opt(c.z),
            opt(c.p_value),
            c.rank_basis.map(|b| b.marker().to_string()).unwrap_or_default(),
            c.significant.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<wilcoxon writer>", e))
}
