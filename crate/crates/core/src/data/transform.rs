use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Dataset, Label};
use crate::error::{ensure, Result};
use crate::rng::seeded;

/// Disjoint train/test row indices, both sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
}

impl Split {
    pub fn apply(&self, data: &Dataset) -> (Dataset, Dataset) {
        (data.subset(&self.train_indices), data.subset(&self.test_indices))
    }
}

/// Shuffles each class separately and sends `round(fraction * size)` of it to
/// the train side, keeping at least one row of every class on each side.
pub fn stratified_split(data: &Dataset, train_fraction: f64, seed: u64) -> Result<Split> {
    ensure!(
        train_fraction > 0.0 && train_fraction < 1.0,
        InvalidArgument,
        "train fraction {train_fraction} is outside (0, 1)"
    );
    let mut rng = seeded(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [Label::Positive, Label::Negative] {
        let mut idx: Vec<usize> = (0..data.n_rows()).filter(|&i| data.label(i) == class).collect();
        ensure!(
            idx.len() >= 2,
            Data,
            "class {class:?} has {} rows; stratified splitting needs at least 2",
            idx.len()
        );
        idx.shuffle(&mut rng);
        let n_train = ((train_fraction * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split {
        train_indices: train,
        test_indices: test,
        seed,
    })
}

/// Per-feature affine map onto [0, 1]; categorical features pass through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    /// `(min, max)` per feature, `None` for categorical features.
    ranges: Vec<Option<(f64, f64)>>,
}

impl MinMaxScaler {
    pub fn fit(train: &Dataset) -> Self {
        let m = train.n_features();
        let mut ranges: Vec<Option<(f64, f64)>> = (0..m)
            .map(|j| (!train.schema().is_categorical(j)).then_some((f64::INFINITY, f64::NEG_INFINITY)))
            .collect();
        for row in train.rows() {
            for (r, &v) in ranges.iter_mut().zip(row) {
                if let Some((lo, hi)) = r {
                    *lo = lo.min(v);
                    *hi = hi.max(v);
                }
            }
        }
        if train.is_empty() {
            for r in ranges.iter_mut().flatten() {
                *r = (0.0, 0.0);
            }
        }
        MinMaxScaler { ranges }
    }

    /// Indices of continuous features that were constant on the fitting data.
    pub fn constant_features(&self) -> Vec<usize> {
        self.ranges
            .iter()
            .enumerate()
            .filter_map(|(j, r)| match r {
                Some((lo, hi)) if hi <= lo => Some(j),
                _ => None,
            })
            .collect()
    }

    pub fn transform_value(&self, feature: usize, v: f64) -> f64 {
        match self.ranges[feature] {
            None => v,
            Some((lo, hi)) if hi > lo => (v - lo) / (hi - lo),
            Some(_) => 0.0,
        }
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| self.transform_value(j, v))
            .collect()
    }

    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        ensure!(
            data.n_features() == self.ranges.len(),
            InvalidArgument,
            "scaler fitted on {} features, dataset has {}",
            self.ranges.len(),
            data.n_features()
        );
        let m = data.n_features();
        let values = data
            .values()
            .iter()
            .enumerate()
            .map(|(k, &v)| self.transform_value(k % m, v))
            .collect();
        Ok(data.with_values(values))
    }
}

#[derive(Debug, Clone)]
pub struct Normalized {
    pub train: Dataset,
    pub others: Vec<Dataset>,
    pub scaler: MinMaxScaler,
    /// One message per constant feature that was mapped to 0.
    pub warnings: Vec<String>,
}

/// Fits min/max on `train` only and applies the same map to `others`.
pub fn minmax_normalize(train: &Dataset, others: &[&Dataset]) -> Result<Normalized> {
    for o in others {
        ensure!(
            o.schema() == train.schema(),
            InvalidArgument,
            "datasets passed to minmax_normalize do not share a schema"
        );
    }
    let scaler = MinMaxScaler::fit(train);
    let warnings = scaler
        .constant_features()
        .into_iter()
        .map(|j| {
            let msg = format!(
                "feature `{}` is constant on the training data; mapped to 0",
                train.schema().features[j].name
            );
            log::warn!("{msg}");
            msg
        })
        .collect();
    Ok(Normalized {
        train: scaler.transform(train)?,
        others: others.iter().map(|o| scaler.transform(o)).collect::<Result<_>>()?,
        scaler,
        warnings,
    })
}

#[derive(Debug, Clone)]
pub struct ClassPartition {
    pub minority: Dataset,
    pub majority: Dataset,
    /// Original row of each minority row.
    pub minority_indices: Vec<usize>,
    /// Original row of each majority row.
    pub majority_indices: Vec<usize>,
}

/// Splits rows into the +1 and -1 classes, keeping their relative order.
pub fn partition_by_class(data: &Dataset) -> Result<ClassPartition> {
    let (minority_indices, majority_indices): (Vec<usize>, Vec<usize>) =
        (0..data.n_rows()).partition(|&i| data.label(i).is_positive());
    ensure!(!minority_indices.is_empty(), Data, "dataset has no positive rows");
    ensure!(!majority_indices.is_empty(), Data, "dataset has no negative rows");
    Ok(ClassPartition {
        minority: data.subset(&minority_indices),
        majority: data.subset(&majority_indices),
        minority_indices,
        majority_indices,
    })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::continuous;
    use super::*;
    use proptest::prelude::*;

    fn imbalanced(n_pos: usize, n_neg: usize) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..n_pos + n_neg).map(|i| vec![i as f64]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let labels: Vec<i8> = (0..n_pos + n_neg).map(|i| if i < n_pos { 1 } else { -1 }).collect();
        continuous(&refs, &labels)
    }

    #[test]
    fn split_counts_follow_fraction() {
        let d = imbalanced(10, 90);
        let s = stratified_split(&d, 0.7, 3).unwrap();
        let pos = s.train_indices.iter().filter(|&&i| d.label(i).is_positive()).count();
        assert_eq!(pos, 7);
        assert_eq!(s.train_indices.len() - pos, 63);
        assert_eq!(s.test_indices.len(), 30);
        assert_eq!(s, stratified_split(&d, 0.7, 3).unwrap());

        let german_like = imbalanced(300, 700);
        let s = stratified_split(&german_like, 0.7, 11).unwrap();
        let pos = s.train_indices.iter().filter(|&&i| i < 300).count();
        assert_eq!((pos, s.train_indices.len() - pos), (210, 490));
    }

    #[test]
    fn split_rejects_tiny_class() {
        assert!(stratified_split(&imbalanced(1, 10), 0.7, 0).is_err());
        assert!(stratified_split(&imbalanced(5, 10), 1.0, 0).is_err());
    }

    #[test]
    fn minmax_uses_train_range() {
        let train = continuous(&[&[2.0, 1.0], &[4.0, 1.0], &[6.0, 1.0]], &[1, -1, -1]);
        let test = continuous(&[&[8.0, 3.0]], &[1]);
        let n = minmax_normalize(&train, &[&test]).unwrap();
        let col: Vec<f64> = n.train.rows().map(|r| r[0]).collect();
        assert_eq!(col, vec![0.0, 0.5, 1.0]);
        assert_eq!(n.others[0].row(0), &[1.5, 0.0]);
        assert_eq!(n.warnings.len(), 1);
        assert_eq!(n.scaler.constant_features(), vec![1]);
    }

    #[test]
    fn minmax_is_identity_on_unit_column() {
        let train = continuous(&[&[0.0], &[0.25], &[1.0]], &[1, -1, 1]);
        let n = minmax_normalize(&train, &[]).unwrap();
        assert_eq!(n.train.values(), train.values());
    }

    #[test]
    fn partition_keeps_index_maps() {
        let d = continuous(&[&[0.0], &[1.0], &[2.0]], &[1, -1, 1]);
        let p = partition_by_class(&d).unwrap();
        assert_eq!(p.minority_indices, vec![0, 2]);
        assert_eq!(p.majority_indices, vec![1]);
        assert_eq!(p.minority.row(1), &[2.0]);
        let only_neg = continuous(&[&[0.0], &[1.0]], &[-1, -1]);
        assert!(partition_by_class(&only_neg).is_err());
    }

    proptest! {
        #[test]
        fn split_is_a_stratified_partition(
            n_pos in 2usize..40,
            n_neg in 2usize..80,
            frac in 0.05f64..0.95,
            seed in any::<u64>(),
        ) {
            let d = imbalanced(n_pos, n_neg);
            let s = stratified_split(&d, frac, seed).unwrap();
            let mut all: Vec<usize> = s.train_indices.iter().chain(&s.test_indices).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n_pos + n_neg).collect::<Vec<_>>());
            for (size, train) in [
                (n_pos, s.train_indices.iter().filter(|&&i| i < n_pos).count()),
                (n_neg, s.train_indices.iter().filter(|&&i| i >= n_pos).count()),
            ] {
                prop_assert!((train as f64 - frac * size as f64).abs() <= 1.0);
            }
        }

        #[test]
        fn partition_maps_are_a_bijection(labels in proptest::collection::vec(any::<bool>(), 2..60)) {
            prop_assume!(labels.iter().any(|&b| b) && labels.iter().any(|&b| !b));
            let rows: Vec<Vec<f64>> = (0..labels.len()).map(|i| vec![i as f64]).collect();
            let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
            let l: Vec<i8> = labels.iter().map(|&b| if b { 1 } else { -1 }).collect();
            let d = continuous(&refs, &l);
            let p = partition_by_class(&d).unwrap();
            let mut all: Vec<usize> = p.minority_indices.iter().chain(&p.majority_indices).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
            for (k, &i) in p.minority_indices.iter().enumerate() {
                prop_assert_eq!(p.minority.row(k), d.row(i));
            }
        }
    }
}
