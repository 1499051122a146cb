//! Boosting with resampled training sets: plain AdaBoost, SMOTEBoost, hybrid
//! sampling boost, and weighted hybrid sampling boost (WHSBoost).
//!
//! All four share one loop: build a temporary unweighted training set from the
//! current weights, fit the base learner on it, measure the weighted error on
//! the original data, then reweight.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassifierSpec, TrainedClassifier};
use crate::data::{partition_by_class, ClassPartition, Dataset, Label, WeightVector};
use crate::distance::{NeighborGraph, VdmTable};
use crate::error::{ensure, Error, Result};
use crate::rng::{derive_seed, seeded};
use crate::sampling::{
    random_undersample_indices, wsmote_with_graph, wusample_indices, SmoteOptions, DEFAULT_POOL_CONSTANT,
};

/// Bounds applied to the weighted error before taking the log-odds.
pub const EPSILON_CLAMP: f64 = 1e-10;

/// A round counts as better than chance only if its weighted error is below
/// 0.5 by more than accumulated rounding.
const CHANCE_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoostMethod {
    AdaBoost,
    SmoteBoost,
    HsBoost,
    WhsBoost,
}

impl BoostMethod {
    pub fn name(self) -> &'static str {
        match self {
            BoostMethod::AdaBoost => "adaboost",
            BoostMethod::SmoteBoost => "smoteboost",
            BoostMethod::HsBoost => "hsboost",
            BoostMethod::WhsBoost => "whsboost",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    /// Maximum number of boosting rounds.
    pub iterations: usize,
    /// Rows per class in the balanced temporary set. `None` uses the midpoint
    /// of the two class sizes.
    pub balanced_size: Option<usize>,
    pub smote: SmoteOptions,
    /// Elimination pool constant of weighted under-sampling, in [0, 1].
    pub pool_constant: f64,
    pub base: ClassifierSpec,
    /// Stop once a round's weighted error falls below this value.
    pub error_threshold: f64,
    /// Redraws allowed for a round whose weighted error reaches 0.5.
    pub max_retries: usize,
    pub seed: u64,
}

impl BoostConfig {
    pub fn new(base: ClassifierSpec, seed: u64) -> Self {
        BoostConfig {
            iterations: 20,
            balanced_size: None,
            smote: SmoteOptions::default(),
            pool_constant: DEFAULT_POOL_CONSTANT,
            base,
            error_threshold: 0.0,
            max_retries: 5,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.iterations >= 1, InvalidArgument, "iterations must be at least 1");
        ensure!(
            self.balanced_size.map_or(true, |n| n >= 1),
            InvalidArgument,
            "balanced size must be at least 1"
        );
        ensure!(self.smote.k >= 1, InvalidArgument, "SMOTE k must be at least 1");
        ensure!(
            (0.0..=1.0).contains(&self.pool_constant),
            InvalidArgument,
            "pool constant {} is outside [0, 1]",
            self.pool_constant
        );
        ensure!(
            (0.0..0.5).contains(&self.error_threshold),
            InvalidArgument,
            "error threshold {} is outside [0, 0.5)",
            self.error_threshold
        );
        self.base.validate()
    }

    /// Per-class size of the balanced set for the given class sizes.
    pub fn resolve_balanced_size(&self, n_min: usize, n_maj: usize) -> usize {
        self.balanced_size
            .unwrap_or_else(|| ((n_min + n_maj) as f64 / 2.0).round() as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub classifier: TrainedClassifier,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedEnsemble {
    pub method: BoostMethod,
    pub config: BoostConfig,
    pub members: Vec<Member>,
}

impl TrainedEnsemble {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.alpha).collect()
    }
}

/// What happened in one attempt at one boosting round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub attempt: usize,
    pub epsilon: f64,
    pub accepted: bool,
    /// Zero for rejected attempts.
    pub alpha: f64,
    pub temp_positive: usize,
    pub temp_negative: usize,
    /// Sum and minimum of the weights after the update (unchanged if rejected).
    pub weight_sum: f64,
    pub weight_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    ErrorBelowThreshold,
    RetriesExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostTrace {
    pub balanced_size: usize,
    pub rounds: Vec<RoundRecord>,
    pub stop: StopReason,
}

/// Weighted share of misclassified rows.
pub fn pseudo_loss(weights: &WeightVector, predictions: &[Label], labels: &[Label]) -> Result<f64> {
    ensure!(
        predictions.len() == labels.len() && labels.len() == weights.len(),
        InvalidArgument,
        "pseudo_loss got {} weights, {} predictions and {} labels",
        weights.len(),
        predictions.len(),
        labels.len()
    );
    let w = weights.as_slice();
    let wrong: f64 = w
        .iter()
        .zip(predictions.iter().zip(labels))
        .filter(|(_, (p, y))| p != y)
        .map(|(wi, _)| wi)
        .sum();
    Ok(wrong / weights.sum())
}

/// `0.5 * ln((1 - e) / e)` with `e` clamped to `[1e-10, 1 - 1e-10]`.
pub fn classifier_weight_alpha(epsilon: f64) -> f64 {
    let e = epsilon.clamp(EPSILON_CLAMP, 1.0 - EPSILON_CLAMP);
    0.5 * ((1.0 - e) / e).ln()
}

/// Multiplies the weights of misclassified rows by `exp(alpha)` and
/// renormalizes.
pub fn update_sample_weights(weights: &WeightVector, alpha: f64, misclassified: &[bool]) -> Result<WeightVector> {
    ensure!(
        misclassified.len() == weights.len(),
        InvalidArgument,
        "mask of length {} for {} weights",
        misclassified.len(),
        weights.len()
    );
    let boost = alpha.exp();
    WeightVector::normalized(
        weights
            .as_slice()
            .iter()
            .zip(misclassified)
            .map(|(&w, &m)| if m { w * boost } else { w })
            .collect(),
    )
}

/// `n_draws` row indices drawn with replacement with probabilities `weights`.
pub fn weight_based_resample_indices(weights: &[f64], n_draws: usize, seed: u64) -> Result<Vec<usize>> {
    let dist = WeightedIndex::new(weights)
        .map_err(|e| Error::InvalidArgument(format!("cannot resample with these weights: {e}")))?;
    let mut rng = seeded(seed);
    Ok((0..n_draws).map(|_| dist.sample(&mut rng)).collect())
}

/// Bootstrap of `data` with row probabilities `weights`.
pub fn weight_based_resample(data: &Dataset, weights: &WeightVector, seed: u64) -> Result<Dataset> {
    ensure!(
        weights.len() == data.n_rows(),
        InvalidArgument,
        "{} weights for {} rows",
        weights.len(),
        data.n_rows()
    );
    Ok(data.subset(&weight_based_resample_indices(weights.as_slice(), data.n_rows(), seed)?))
}

pub fn ensemble_score(ens: &TrainedEnsemble, x: &[f64]) -> Result<f64> {
    ensure!(!ens.is_empty(), InvalidArgument, "ensemble has no members");
    Ok(ens
        .members
        .iter()
        .map(|m| m.alpha * m.classifier.predict(x).sign())
        .sum())
}

pub fn ensemble_predict(ens: &TrainedEnsemble, x: &[f64]) -> Result<Label> {
    ensemble_score(ens, x).map(Label::from_score)
}

impl TrainedEnsemble {
    pub fn scores(&self, data: &Dataset) -> Result<Vec<f64>> {
        data.rows().map(|r| ensemble_score(self, r)).collect()
    }

    pub fn predict_all(&self, data: &Dataset) -> Result<Vec<Label>> {
        data.rows().map(|r| ensemble_predict(self, r)).collect()
    }
}

/// Seed offsets for the independent random streams of one attempt.
const STREAM_MINORITY: u64 = 0;
const STREAM_MAJORITY: u64 = 1;
const STREAM_RESAMPLE: u64 = 2;
const STREAM_CLASSIFIER: u64 = 3;

struct Context<'a> {
    data: &'a Dataset,
    parts: ClassPartition,
    graph: Option<NeighborGraph>,
    config: &'a BoostConfig,
    n_balanced: usize,
}

impl Context<'_> {
    fn temporary_set(&self, method: BoostMethod, weights: &WeightVector, seed: u64) -> Result<Dataset> {
        let c = self.config;
        let p = &self.parts;
        match method {
            BoostMethod::AdaBoost => weight_based_resample(self.data, weights, derive_seed(seed, &[STREAM_RESAMPLE])),
            BoostMethod::WhsBoost => {
                let di = weights.restrict(&p.minority_indices)?;
                let da = weights.restrict(&p.majority_indices)?;
                let pos = wsmote_with_graph(
                    &p.minority,
                    &di,
                    self.n_balanced,
                    self.graph.as_ref().expect("graph built for oversampling methods"),
                    &c.smote,
                    derive_seed(seed, &[STREAM_MINORITY]),
                )?;
                let keep = wusample_indices(
                    &da,
                    self.n_balanced,
                    c.pool_constant,
                    derive_seed(seed, &[STREAM_MAJORITY]),
                )?;
                pos.data.concat(&p.majority.subset(&keep))
            }
            BoostMethod::SmoteBoost | BoostMethod::HsBoost => {
                let (n_pos, kept_neg) = if method == BoostMethod::SmoteBoost {
                    (p.majority.n_rows(), (0..p.majority.n_rows()).collect::<Vec<_>>())
                } else {
                    (
                        self.n_balanced,
                        random_undersample_indices(
                            p.majority.n_rows(),
                            self.n_balanced,
                            derive_seed(seed, &[STREAM_MAJORITY]),
                        )?,
                    )
                };
                let uniform = WeightVector::uniform(p.minority.n_rows());
                let pos = wsmote_with_graph(
                    &p.minority,
                    &uniform,
                    n_pos,
                    self.graph.as_ref().expect("graph built for oversampling methods"),
                    &c.smote,
                    derive_seed(seed, &[STREAM_MINORITY]),
                )?;
                let w = weights.as_slice();
                let minority_mean =
                    p.minority_indices.iter().map(|&i| w[i]).sum::<f64>() / p.minority_indices.len() as f64;
                let mut set_weights: Vec<f64> = p.minority_indices.iter().map(|&i| w[i]).collect();
                set_weights.resize(pos.data.n_rows(), minority_mean);
                set_weights.extend(kept_neg.iter().map(|&k| w[p.majority_indices[k]]));
                let rebalanced = pos.data.concat(&p.majority.subset(&kept_neg))?;
                let rows = weight_based_resample_indices(
                    &set_weights,
                    rebalanced.n_rows(),
                    derive_seed(seed, &[STREAM_RESAMPLE]),
                )?;
                Ok(rebalanced.subset(&rows))
            }
        }
    }
}

/// Runs `method` and returns the ensemble with a per-round trace.
pub fn train_traced(
    method: BoostMethod,
    data: &Dataset,
    config: &BoostConfig,
    vdm: &VdmTable,
) -> Result<(TrainedEnsemble, BoostTrace)> {
    config.validate()?;
    let parts = partition_by_class(data)?;
    let (n_min, n_maj) = (parts.minority.n_rows(), parts.majority.n_rows());
    let n_balanced = config.resolve_balanced_size(n_min, n_maj);
    let oversamples = method != BoostMethod::AdaBoost;
    if oversamples {
        ensure!(n_min >= 2, InvalidArgument, "oversampling needs at least 2 positive rows, got {n_min}");
    }
    if matches!(method, BoostMethod::WhsBoost | BoostMethod::HsBoost) {
        ensure!(
            n_min <= n_balanced && n_balanced <= n_maj,
            InvalidArgument,
            "balanced size {n_balanced} is outside [{n_min}, {n_maj}]"
        );
    }
    let graph = if oversamples {
        Some(NeighborGraph::build(&parts.minority, config.smote.k, vdm)?)
    } else {
        None
    };
    let ctx = Context {
        data,
        parts,
        graph,
        config,
        n_balanced,
    };

    let labels = data.labels();
    let mut weights = WeightVector::uniform(data.n_rows());
    let mut members = Vec::with_capacity(config.iterations);
    let mut rounds = Vec::new();
    let mut stop = StopReason::Completed;

    'rounds: for t in 0..config.iterations {
        let mut accepted = None;
        for attempt in 0..=config.max_retries {
            let seed = derive_seed(config.seed, &[t as u64, attempt as u64]);
            let temp = ctx.temporary_set(method, &weights, seed)?;
            let spec = config.base.reseeded(derive_seed(seed, &[STREAM_CLASSIFIER]));
            let h = spec.fit(&temp, vdm)?;
            let predictions = h.predict_all(data);
            let epsilon = pseudo_loss(&weights, &predictions, labels)?;
            let mut record = RoundRecord {
                round: t,
                attempt,
                epsilon,
                accepted: false,
                alpha: 0.0,
                temp_positive: temp.count_positive(),
                temp_negative: temp.count_negative(),
                weight_sum: weights.sum(),
                weight_min: weights.as_slice().iter().copied().fold(f64::INFINITY, f64::min),
            };
            if epsilon < 0.5 - CHANCE_MARGIN {
                let alpha = classifier_weight_alpha(epsilon);
                let wrong: Vec<bool> = predictions.iter().zip(labels).map(|(p, y)| p != y).collect();
                weights = update_sample_weights(&weights, alpha, &wrong)?;
                record.accepted = true;
                record.alpha = alpha;
                record.weight_sum = weights.sum();
                record.weight_min = weights.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
                rounds.push(record);
                accepted = Some((h, alpha, epsilon));
                break;
            }
            log::debug!("{} round {t} attempt {attempt}: error {epsilon:.4} >= 0.5, redrawing", method.name());
            rounds.push(record);
        }
        let Some((classifier, alpha, epsilon)) = accepted else {
            stop = StopReason::RetriesExhausted;
            break 'rounds;
        };
        members.push(Member { classifier, alpha });
        if epsilon < config.error_threshold {
            stop = StopReason::ErrorBelowThreshold;
            break;
        }
    }
    if members.is_empty() {
        return Err(Error::Training(format!(
            "{}: every round had weighted error >= 0.5",
            method.name()
        )));
    }
    Ok((
        TrainedEnsemble {
            method,
            config: *config,
            members,
        },
        BoostTrace {
            balanced_size: n_balanced,
            rounds,
            stop,
        },
    ))
}

pub fn train(method: BoostMethod, data: &Dataset, config: &BoostConfig, vdm: &VdmTable) -> Result<TrainedEnsemble> {
    train_traced(method, data, config, vdm).map(|(e, _)| e)
}

pub fn whsboost_train(data: &Dataset, config: &BoostConfig, vdm: &VdmTable) -> Result<TrainedEnsemble> {
    train(BoostMethod::WhsBoost, data, config, vdm)
}

pub fn adaboost_resample_train(data: &Dataset, config: &BoostConfig, vdm: &VdmTable) -> Result<TrainedEnsemble> {
    train(BoostMethod::AdaBoost, data, config, vdm)
}

pub fn smoteboost_train(data: &Dataset, config: &BoostConfig, vdm: &VdmTable) -> Result<TrainedEnsemble> {
    train(BoostMethod::SmoteBoost, data, config, vdm)
}

pub fn hsboost_train(data: &Dataset, config: &BoostConfig, vdm: &VdmTable) -> Result<TrainedEnsemble> {
    train(BoostMethod::HsBoost, data, config, vdm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::{continuous, label};
    use crate::rng::seeded;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng as _;

    #[test]
    fn pseudo_loss_examples() {
        let w = WeightVector::new(vec![0.5, 0.3, 0.2]).unwrap();
        let y = [1, -1, 1].map(label);
        assert_eq!(pseudo_loss(&w, &y, &y).unwrap(), 0.0);
        let flipped = [-1, 1, -1].map(label);
        assert_abs_diff_eq!(pseudo_loss(&w, &flipped, &y).unwrap(), 1.0, epsilon = 1e-15);
        let one_wrong = [1, 1, 1].map(label);
        assert_abs_diff_eq!(pseudo_loss(&w, &one_wrong, &y).unwrap(), 0.3, epsilon = 1e-15);
        assert!(pseudo_loss(&w, &y[..2], &y).is_err());
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(classifier_weight_alpha(0.5), 0.0);
        assert_abs_diff_eq!(classifier_weight_alpha(0.1), 0.5 * 9f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(classifier_weight_alpha(0.1), 1.09861, epsilon = 1e-5);
        assert_abs_diff_eq!(classifier_weight_alpha(0.0), 11.5129, epsilon = 1e-4);
    }

    #[test]
    fn weight_update_example() {
        let d = WeightVector::uniform(4);
        let alpha = 0.5 * 3f64.ln();
        let u = update_sample_weights(&d, alpha, &[true, false, false, false]).unwrap();
        let expected = [0.36603, 0.21132, 0.21132, 0.21132];
        for (a, b) in u.as_slice().iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-5);
        }
        assert_eq!(update_sample_weights(&d, alpha, &[false; 4]).unwrap(), d);
        assert_eq!(update_sample_weights(&d, 0.0, &[true, false, true, false]).unwrap(), d);
        assert!(update_sample_weights(&d, alpha, &[true]).is_err());
    }

    fn stub_ensemble(alphas: &[f64], votes: &[i8]) -> TrainedEnsemble {
        // 1-NN on a single row votes that row's label everywhere
        let members = alphas
            .iter()
            .zip(votes)
            .map(|(&alpha, &v)| {
                let d = continuous(&[&[0.0]], &[v]);
                let vdm = VdmTable::continuous_only(d.schema()).unwrap();
                Member {
                    classifier: ClassifierSpec::knn(1).fit(&d, &vdm).unwrap(),
                    alpha,
                }
            })
            .collect();
        TrainedEnsemble {
            method: BoostMethod::WhsBoost,
            config: BoostConfig::new(ClassifierSpec::knn(1), 0),
            members,
        }
    }

    #[test]
    fn ensemble_vote_examples() {
        let e = stub_ensemble(&[1.0, 1.0, 1.0], &[1, 1, -1]);
        assert_eq!(ensemble_score(&e, &[0.0]).unwrap(), 1.0);
        assert_eq!(ensemble_predict(&e, &[0.0]).unwrap(), Label::Positive);
        let e = stub_ensemble(&[2.0, 0.5, 0.5], &[-1, 1, 1]);
        assert_eq!(ensemble_score(&e, &[0.0]).unwrap(), -1.0);
        assert_eq!(ensemble_predict(&e, &[0.0]).unwrap(), Label::Negative);
        let single = stub_ensemble(&[0.3], &[-1]);
        assert_eq!(ensemble_predict(&single, &[0.0]).unwrap(), Label::Negative);
        let tie = stub_ensemble(&[1.0, 1.0], &[1, -1]);
        assert_eq!(ensemble_predict(&tie, &[0.0]).unwrap(), Label::Positive);
        let empty = stub_ensemble(&[], &[]);
        assert!(ensemble_score(&empty, &[0.0]).is_err());
    }

    #[test]
    fn concentrated_weights_resample_one_row() {
        let d = continuous(&[&[0.0], &[1.0], &[2.0]], &[1, -1, -1]);
        let w = WeightVector::new(vec![1.0 - 1e-9, 5e-10, 5e-10]).unwrap();
        let r = weight_based_resample(&d, &w, 3).unwrap();
        assert!(r.rows().all(|row| row == [0.0]));
    }

    #[test]
    fn resample_frequencies_match_weights() {
        let w = [0.1, 0.2, 0.3, 0.4];
        let n = 100_000;
        let draws = weight_based_resample_indices(&w, n, 12).unwrap();
        for (i, &p) in w.iter().enumerate() {
            let count = draws.iter().filter(|&&d| d == i).count() as f64;
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((count - n as f64 * p).abs() <= 3.0 * sd, "{i}: {count}");
        }
    }

    /// 200 rows, 10% positive, separable along the first coordinate.
    fn separable_fixture(seed: u64) -> Dataset {
        let mut rng = seeded(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..200 {
            let pos = i % 10 == 0;
            let x0 = if pos { rng.random_range(0.2..1.0) } else { rng.random_range(-1.0..0.1) };
            rows.push(vec![x0, rng.random_range(-1.0..1.0)]);
            labels.push(if pos { 1 } else { -1 });
        }
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        continuous(&refs, &labels)
    }

    fn recall(pred: &[Label], truth: &[Label]) -> f64 {
        let tp = pred.iter().zip(truth).filter(|(p, t)| p.is_positive() && t.is_positive()).count();
        tp as f64 / truth.iter().filter(|t| t.is_positive()).count() as f64
    }

    #[test]
    fn single_round_ensemble_follows_its_member() {
        let d = separable_fixture(1);
        let vdm = VdmTable::continuous_only(d.schema()).unwrap();
        let mut cfg = BoostConfig::new(ClassifierSpec::knn(3), 5);
        cfg.iterations = 1;
        let e = whsboost_train(&d, &cfg, &vdm).unwrap();
        assert_eq!(e.len(), 1);
        for row in d.rows() {
            assert_eq!(ensemble_predict(&e, row).unwrap(), e.members[0].classifier.predict(row));
        }
    }

    #[test]
    fn whsboost_recall_beats_plain_knn() {
        let d = separable_fixture(2);
        let vdm = VdmTable::continuous_only(d.schema()).unwrap();
        let mut cfg = BoostConfig::new(ClassifierSpec::knn(3), 5);
        cfg.iterations = 10;
        let e = whsboost_train(&d, &cfg, &vdm).unwrap();
        let plain = ClassifierSpec::knn(3).fit(&d, &vdm).unwrap();
        let r_ens = recall(&e.predict_all(&d).unwrap(), d.labels());
        let r_plain = recall(&plain.predict_all(&d), d.labels());
        assert!(r_ens >= r_plain, "{r_ens} < {r_plain}");
    }

    #[test]
    fn adaboost_first_round_is_a_bootstrap_and_helps() {
        let mut rng = seeded(4);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..160 {
            let x: f64 = rng.random_range(-1.0..1.0);
            let y: f64 = rng.random_range(-1.0..1.0);
            rows.push(vec![x, y]);
            labels.push(if x + y > 0.0 { 1 } else { -1 });
        }
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let all = continuous(&refs, &labels);
        let train_idx: Vec<usize> = (0..100).collect();
        let test_idx: Vec<usize> = (100..160).collect();
        let (train, test) = (all.subset(&train_idx), all.subset(&test_idx));
        let vdm = VdmTable::continuous_only(train.schema()).unwrap();
        let base = ClassifierSpec::dtree(1, 1);
        let mut cfg = BoostConfig::new(base, 8);
        cfg.iterations = 10;
        let (e, trace) = train_traced(BoostMethod::AdaBoost, &train, &cfg, &vdm).unwrap();
        assert_eq!(trace.rounds[0].temp_positive + trace.rounds[0].temp_negative, train.n_rows());
        let acc = |p: Vec<Label>| p.iter().zip(test.labels()).filter(|(a, b)| a == b).count();
        let single = base.fit(&train, &vdm).unwrap();
        assert!(acc(e.predict_all(&test).unwrap()) >= acc(single.predict_all(&test)));
    }

    fn skewed_fixture() -> Dataset {
        let mut rng = seeded(10);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..100 {
            let pos = i % 10 == 0;
            let c = if pos { 0.5 } else { -0.2 };
            rows.push(vec![c + rng.random_range(-0.6..0.6), rng.random_range(-1.0..1.0)]);
            labels.push(if pos { 1 } else { -1 });
        }
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        continuous(&refs, &labels)
    }

    #[test]
    fn rebalancing_boosters_reintroduce_imbalance() {
        let d = skewed_fixture();
        let vdm = VdmTable::continuous_only(d.schema()).unwrap();
        let mut cfg = BoostConfig::new(ClassifierSpec::knn(3), 3);
        cfg.iterations = 10;
        for method in [BoostMethod::SmoteBoost, BoostMethod::HsBoost] {
            let (_, trace) = train_traced(method, &d, &cfg, &vdm).unwrap();
            assert!(trace.rounds.iter().any(|r| r.temp_positive != r.temp_negative));
        }
        let (_, trace) = train_traced(BoostMethod::WhsBoost, &d, &cfg, &vdm).unwrap();
        for r in &trace.rounds {
            assert_eq!((r.temp_positive, r.temp_negative), (trace.balanced_size, trace.balanced_size));
        }
    }

    #[test]
    fn smoteboost_rebalances_to_majority_size() {
        let d = skewed_fixture();
        let vdm = VdmTable::continuous_only(d.schema()).unwrap();
        let cfg = BoostConfig::new(ClassifierSpec::knn(3), 3);
        let (_, trace) = train_traced(BoostMethod::SmoteBoost, &d, &cfg, &vdm).unwrap();
        assert_eq!(trace.rounds[0].temp_positive + trace.rounds[0].temp_negative, 180);
    }

    #[test]
    fn balanced_size_is_range_checked() {
        let d = skewed_fixture();
        let vdm = VdmTable::continuous_only(d.schema()).unwrap();
        let mut cfg = BoostConfig::new(ClassifierSpec::knn(3), 3);
        assert_eq!(cfg.resolve_balanced_size(10, 90), 50);
        cfg.balanced_size = Some(9);
        assert!(whsboost_train(&d, &cfg, &vdm).is_err());
        cfg.balanced_size = Some(91);
        assert!(hsboost_train(&d, &cfg, &vdm).is_err());
        cfg.balanced_size = Some(10);
        let (_, trace) = train_traced(BoostMethod::HsBoost, &d, &cfg, &vdm).unwrap();
        assert_eq!(trace.rounds[0].temp_positive + trace.rounds[0].temp_negative, 20);
    }

    #[test]
    fn hopeless_base_learner_is_an_error() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i / 2) as f64]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let labels: Vec<i8> = (0..40).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        let d = continuous(&refs, &labels);
        let vdm = VdmTable::continuous_only(d.schema()).unwrap();
        let mut cfg = BoostConfig::new(ClassifierSpec::dtree(1, 1), 0);
        cfg.max_retries = 0;
        // every row pair shares a coordinate with opposite labels, so any
        // classifier errs on exactly half the weight
        let r = whsboost_train(&d, &cfg, &vdm);
        assert!(matches!(r, Err(Error::Training(_))), "{r:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn weights_stay_normalized_and_alphas_positive(seed in any::<u64>(), scale in 0.2f64..0.7) {
            let mut rng = seeded(seed);
            let n = 60;
            let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
            let labels: Vec<i8> = rows.iter().enumerate().map(|(i, r)| if r[0] > scale || i < 3 { 1 } else { -1 }).collect();
            let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
            let d = continuous(&refs, &labels);
            prop_assume!(d.count_positive() < d.count_negative());
            let vdm = VdmTable::continuous_only(d.schema()).unwrap();
            let mut cfg = BoostConfig::new(ClassifierSpec::knn(3), seed);
            cfg.iterations = 5;
            for method in [BoostMethod::AdaBoost, BoostMethod::SmoteBoost, BoostMethod::HsBoost, BoostMethod::WhsBoost] {
                let (e, trace) = train_traced(method, &d, &cfg, &vdm).unwrap();
                for r in &trace.rounds {
                    prop_assert!((r.weight_sum - 1.0).abs() <= 1e-9);
                    prop_assert!(r.weight_min >= 0.0);
                }
                prop_assert!(e.alphas().iter().all(|&a| a > 0.0));
                let (again, _) = train_traced(method, &d, &cfg, &vdm).unwrap();
                prop_assert_eq!(&again, &e);
                let scaled = TrainedEnsemble {
                    members: e.members.iter().map(|m| Member { classifier: m.classifier.clone(), alpha: 3.5 * m.alpha }).collect(),
                    ..e.clone()
                };
                prop_assert_eq!(scaled.predict_all(&d).unwrap(), e.predict_all(&d).unwrap());
            }
        }
    }
}
