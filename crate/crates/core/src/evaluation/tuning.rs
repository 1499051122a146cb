use crate::classifiers::ClassifierSpec;
use crate::data::{partition_by_class, stratified_split, Dataset};
use crate::distance::VdmTable;
use crate::error::{ensure, Result};
use crate::rng::derive_seed;
use crate::sampling::{smote_baseline, SmoteOptions};

/// Verification accuracy of every grid point and the index of the winner.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningOutcome {
    pub best: ClassifierSpec,
    pub best_index: usize,
    pub accuracies: Vec<f64>,
}

/// Grid search over `grid`: 80/20 stratified split of `tuning_data`, the
/// tuning-train side rebalanced with plain SMOTE, each grid point scored by
/// accuracy on the verification side. Ties go to the earlier grid entry.
pub fn grid_search_tune(tuning_data: &Dataset, grid: &[ClassifierSpec], seed: u64) -> Result<ClassifierSpec> {
    Ok(grid_search_detailed(tuning_data, grid, &SmoteOptions::default(), seed)?.best)
}

pub fn grid_search_detailed(
    tuning_data: &Dataset,
    grid: &[ClassifierSpec],
    smote: &SmoteOptions,
    seed: u64,
) -> Result<TuningOutcome> {
    ensure!(!grid.is_empty(), InvalidArgument, "grid search needs at least one candidate");
    for spec in grid {
        spec.validate()?;
    }
    let split = stratified_split(tuning_data, 0.8, derive_seed(seed, &[0]))?;
    let (train, verify) = split.apply(tuning_data);
    let vdm = VdmTable::build(&train)?;
    let parts = partition_by_class(&train)?;
    let target = parts.minority.n_rows().max(parts.majority.n_rows());
    let minority = smote_baseline(&parts.minority, target, smote, &vdm, derive_seed(seed, &[1]))?;
    let balanced = minority.concat(&parts.majority)?;

    let mut accuracies = Vec::with_capacity(grid.len());
    for (g, spec) in grid.iter().enumerate() {
        let model = spec.reseeded(derive_seed(seed, &[2, g as u64])).fit(&balanced, &vdm)?;
        let correct = model
            .predict_all(&verify)
            .iter()
            .zip(verify.labels())
            .filter(|(p, t)| p == t)
            .count();
        accuracies.push(correct as f64 / verify.n_rows() as f64);
    }
    let mut best_index = 0;
    for (i, &a) in accuracies.iter().enumerate() {
        if a > accuracies[best_index] {
            best_index = i;
        }
    }
    Ok(TuningOutcome {
        best: grid[best_index],
        best_index,
        accuracies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::continuous;
    use crate::rng::seeded;
    use rand::Rng as _;

    /// Two overlapping blobs with 20% of labels flipped.
    fn noisy(seed: u64) -> Dataset {
        let mut rng = seeded(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..900 {
            let pos = i % 3 == 0;
            let c = if pos { 0.6 } else { 0.4 };
            rows.push(vec![c + rng.random_range(-0.25..0.25), c + rng.random_range(-0.25..0.25)]);
            let flip = rng.random::<f64>() < 0.2;
            labels.push(if pos != flip { 1 } else { -1 });
        }
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        continuous(&refs, &labels)
    }

    #[test]
    fn singleton_grid() {
        let d = noisy(1);
        let spec = ClassifierSpec::knn(4);
        assert_eq!(grid_search_tune(&d, &[spec], 3).unwrap(), spec);
        assert!(grid_search_tune(&d, &[], 3).is_err());
    }

    #[test]
    fn wider_neighborhood_beats_one_nn_on_noise() {
        let d = noisy(7);
        let grid = [ClassifierSpec::knn(1), ClassifierSpec::knn(3)];
        let out = grid_search_detailed(&d, &grid, &SmoteOptions::default(), 11).unwrap();
        assert!(out.accuracies[0] < out.accuracies[1], "{:?}", out.accuracies);
        assert_eq!(out.best, ClassifierSpec::knn(3));
    }

    #[test]
    fn ties_go_to_the_first_entry() {
        let d = noisy(2);
        let grid = [ClassifierSpec::knn(3), ClassifierSpec::knn(3)];
        let out = grid_search_detailed(&d, &grid, &SmoteOptions::default(), 5).unwrap();
        assert_eq!(out.accuracies[0], out.accuracies[1]);
        assert_eq!(out.best_index, 0);
    }
}
