use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, confusion_matrix, roc_auc, MetricReport};
use crate::data::{minmax_normalize, partition_by_class, stratified_split, Dataset, Label};
use crate::distance::VdmTable;
use crate::ensemble::{train, BoostConfig, BoostMethod};
use crate::error::{ensure, Error, Result};
use crate::rng::{derive_seed, name_hash};
use crate::sampling::{hybrid_sample_baseline, random_undersample, smote_baseline};

/// How a pipeline turns the training split into a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PipelineKind {
    /// Base classifier on the raw training split.
    None,
    /// SMOTE the minority up to the majority size.
    Smote,
    /// SMOTE the minority and under-sample the majority to the balanced size.
    Hybrid,
    /// Under-sample the majority down to the minority size.
    Undersample,
    Boost(BoostMethod),
}

impl PipelineKind {
    pub const ALL: [PipelineKind; 8] = [
        PipelineKind::None,
        PipelineKind::Smote,
        PipelineKind::Hybrid,
        PipelineKind::Undersample,
        PipelineKind::Boost(BoostMethod::AdaBoost),
        PipelineKind::Boost(BoostMethod::SmoteBoost),
        PipelineKind::Boost(BoostMethod::HsBoost),
        PipelineKind::Boost(BoostMethod::WhsBoost),
    ];

    pub fn name(self) -> &'static str {
        match self {
            PipelineKind::None => "none",
            PipelineKind::Smote => "smote",
            PipelineKind::Hybrid => "hybrid",
            PipelineKind::Undersample => "undersample",
            PipelineKind::Boost(m) => m.name(),
        }
    }
}

impl fmt::Display for PipelineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PipelineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PipelineKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = PipelineKind::ALL.iter().map(|k| k.name()).collect();
                Error::InvalidArgument(format!("unknown pipeline kind `{s}` (expected one of {})", known.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    /// Unique label used in result tables.
    pub name: String,
    pub kind: PipelineKind,
    /// Base classifier, sampling options and, for boosters, the boosting
    /// parameters. Its seed is mixed into every derived seed.
    pub config: BoostConfig,
}

impl Pipeline {
    pub fn new(name: impl Into<String>, kind: PipelineKind, config: BoostConfig) -> Self {
        Pipeline {
            name: name.into(),
            kind,
            config,
        }
    }

    /// Trains on `train` and returns test-set scores, larger meaning more positive.
    pub fn fit_score(&self, train_set: &Dataset, test: &Dataset, vdm: &VdmTable, seed: u64) -> Result<Vec<f64>> {
        let cfg = &self.config;
        cfg.validate()?;
        let base = cfg.base.reseeded(derive_seed(seed, &[3]));
        let fit_single = |d: &Dataset| -> Result<Vec<f64>> { Ok(base.fit(d, vdm)?.decision_scores(test)) };
        match self.kind {
            PipelineKind::None => fit_single(train_set),
            PipelineKind::Smote => {
                let parts = partition_by_class(train_set)?;
                let n_maj = parts.majority.n_rows().max(parts.minority.n_rows());
                let pos = smote_baseline(&parts.minority, n_maj, &cfg.smote, vdm, derive_seed(seed, &[0]))?;
                fit_single(&pos.concat(&parts.majority)?)
            }
            PipelineKind::Hybrid => {
                let n_pos = train_set.count_positive();
                let n = cfg.resolve_balanced_size(n_pos, train_set.n_rows() - n_pos);
                fit_single(&hybrid_sample_baseline(train_set, n, &cfg.smote, vdm, derive_seed(seed, &[0]))?)
            }
            PipelineKind::Undersample => {
                let parts = partition_by_class(train_set)?;
                let n_min = parts.minority.n_rows().min(parts.majority.n_rows());
                let neg = random_undersample(&parts.majority, n_min, derive_seed(seed, &[1]))?;
                fit_single(&parts.minority.concat(&neg)?)
            }
            PipelineKind::Boost(method) => {
                let mut boost_cfg = *cfg;
                boost_cfg.seed = seed;
                train(method, train_set, &boost_cfg, vdm)?.scores(test)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub dataset: String,
    pub repetitions: usize,
    pub train_fraction: f64,
    pub beta: f64,
    pub seed: u64,
    /// Min-max scale features using the training split of each repetition.
    pub normalize: bool,
    /// Fill `wallclock_ms`; left at 0 otherwise so result files stay reproducible.
    pub record_wallclock: bool,
}

impl ExperimentSpec {
    pub fn new(dataset: impl Into<String>, repetitions: usize, seed: u64) -> Self {
        ExperimentSpec {
            dataset: dataset.into(),
            repetitions,
            train_fraction: 0.7,
            beta: super::metrics::DEFAULT_BETA,
            seed,
            normalize: true,
            record_wallclock: false,
        }
    }

    /// Seed of the train/test split of repetition `r`, shared by all pipelines.
    pub fn split_seed(&self, repetition: usize) -> u64 {
        derive_seed(self.seed, &[name_hash(&self.dataset), repetition as u64])
    }
}

/// One pipeline evaluated on one repetition's test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub pipeline: String,
    pub base_classifier: String,
    pub repetition: usize,
    pub split_seed: u64,
    pub recall: f64,
    pub precision: f64,
    pub f_beta: f64,
    pub auc: f64,
    pub wallclock_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineFailure {
    pub dataset: String,
    pub pipeline: String,
    pub repetition: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResults {
    /// Sorted by repetition, then by pipeline order.
    pub rows: Vec<ResultRow>,
    /// Pipelines that failed; none of their rows are kept.
    pub failures: Vec<PipelineFailure>,
}

impl ExperimentResults {
    pub fn extend(&mut self, other: ExperimentResults) {
        self.rows.extend(other.rows);
        self.failures.extend(other.failures);
    }
}

pub fn evaluate_scores(scores: &[f64], truths: &[Label], beta: f64) -> Result<MetricReport> {
    let preds: Vec<Label> = scores.iter().map(|&s| Label::from_score(s)).collect();
    let mut report = compute_metrics(&confusion_matrix(&preds, truths)?, beta)?;
    report.auc = Some(roc_auc(scores, truths)?);
    Ok(report)
}

/// Runs every pipeline on `spec.repetitions` paired stratified splits.
/// Repetitions run on the current rayon pool; output order does not depend
/// on scheduling.
pub fn run_experiment(data: &Dataset, pipelines: &[Pipeline], spec: &ExperimentSpec) -> Result<ExperimentResults> {
    ensure!(spec.repetitions >= 1, InvalidArgument, "repetitions must be at least 1");
    ensure!(!pipelines.is_empty(), InvalidArgument, "no pipelines to run");
    let mut names = HashSet::new();
    for p in pipelines {
        ensure!(names.insert(p.name.as_str()), InvalidArgument, "pipeline name `{}` is repeated", p.name);
    }
    ensure!(
        spec.train_fraction > 0.0 && spec.train_fraction < 1.0,
        InvalidArgument,
        "train fraction {} is outside (0, 1)",
        spec.train_fraction
    );

    let per_rep: Vec<Vec<Result<ResultRow>>> = (0..spec.repetitions)
        .into_par_iter()
        .map(|r| run_repetition(data, pipelines, spec, r))
        .collect::<Result<_>>()?;

    let mut results = ExperimentResults::default();
    let mut failed = vec![false; pipelines.len()];
    for (r, outcomes) in per_rep.iter().enumerate() {
        for (p, outcome) in outcomes.iter().enumerate() {
            if let Err(e) = outcome {
                if !failed[p] {
                    failed[p] = true;
                    log::error!("pipeline `{}` failed on repetition {r}: {e}", pipelines[p].name);
                    results.failures.push(PipelineFailure {
                        dataset: spec.dataset.clone(),
                        pipeline: pipelines[p].name.clone(),
                        repetition: r,
                        message: e.to_string(),
                    });
                }
            }
        }
    }
    for outcomes in per_rep {
        for (p, outcome) in outcomes.into_iter().enumerate() {
            if let (false, Ok(row)) = (failed[p], outcome) {
                results.rows.push(row);
            }
        }
    }
    Ok(results)
}

/// Split, normalize and build the VDM table for repetition `r`, then score
/// every pipeline. Errors in the shared preparation abort the experiment.
fn run_repetition(
    data: &Dataset,
    pipelines: &[Pipeline],
    spec: &ExperimentSpec,
    r: usize,
) -> Result<Vec<Result<ResultRow>>> {
    let split_seed = spec.split_seed(r);
    let split = stratified_split(data, spec.train_fraction, split_seed)?;
    let (mut train_set, mut test) = split.apply(data);
    if spec.normalize {
        let norm = minmax_normalize(&train_set, &[&test])?;
        train_set = norm.train;
        test = norm.others.into_iter().next().expect("one extra dataset was normalized");
    }
    let vdm = VdmTable::build(&train_set)?;
    Ok(pipelines
        .iter()
        .map(|p| {
            let seed = derive_seed(split_seed, &[name_hash(&p.name), p.config.seed]);
            let start = Instant::now();
            let scores = p.fit_score(&train_set, &test, &vdm, seed)?;
            let m = evaluate_scores(&scores, test.labels(), spec.beta)?;
            let wallclock_ms = if spec.record_wallclock {
                start.elapsed().as_millis() as u64
            } else {
                0
            };
            log::debug!("{} rep {r} {}: f_beta {:.4}", spec.dataset, p.name, m.f_beta);
            Ok(ResultRow {
                dataset: spec.dataset.clone(),
                pipeline: p.name.clone(),
                base_classifier: p.config.base.name().to_string(),
                repetition: r,
                split_seed,
                recall: m.recall,
                precision: m.precision,
                f_beta: m.f_beta,
                auc: m.auc.unwrap_or(f64::NAN),
                wallclock_ms,
            })
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single observation.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> MeanStd {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub dataset: String,
    pub pipeline: String,
    pub base_classifier: String,
    pub repetitions: usize,
    pub recall: MeanStd,
    pub precision: MeanStd,
    pub f_beta: MeanStd,
    pub auc: MeanStd,
}

/// Mean and standard deviation per (dataset, pipeline), in first-seen order.
pub fn summarize(rows: &[ResultRow]) -> Vec<PipelineSummary> {
    let mut keys: Vec<(&str, &str)> = Vec::new();
    for row in rows {
        let key = (row.dataset.as_str(), row.pipeline.as_str());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(dataset, pipeline)| {
            let group: Vec<&ResultRow> = rows
                .iter()
                .filter(|r| r.dataset == dataset && r.pipeline == pipeline)
                .collect();
            let stat = |f: fn(&ResultRow) -> f64| MeanStd::of(&group.iter().map(|r| f(r)).collect::<Vec<_>>());
            PipelineSummary {
                dataset: dataset.to_string(),
                pipeline: pipeline.to_string(),
                base_classifier: group[0].base_classifier.clone(),
                repetitions: group.len(),
                recall: stat(|r| r.recall),
                precision: stat(|r| r.precision),
                f_beta: stat(|r| r.f_beta),
                auc: stat(|r| r.auc),
            }
        })
        .collect()
}
