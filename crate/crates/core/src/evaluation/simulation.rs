use std::sync::Arc;

use rand::seq::index;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureSchema, Label};
use crate::error::{ensure, Result};
use crate::rng::{derive_seed, seeded};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub n_total: usize,
    /// Number of features.
    pub p: usize,
    /// Number of features with a nonzero coefficient.
    pub p0: usize,
    pub minority_fraction: f64,
    /// Rows drawn before subsampling down to `n_total`.
    pub oversample_pool: usize,
    pub seed: u64,
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.p >= 1, InvalidArgument, "p must be at least 1");
        ensure!(
            (1..=self.p).contains(&self.p0),
            InvalidArgument,
            "p0 = {} must lie in [1, p = {}]",
            self.p0,
            self.p
        );
        ensure!(
            self.minority_fraction > 0.0 && self.minority_fraction <= 0.5,
            InvalidArgument,
            "minority fraction {} is outside (0, 0.5]",
            self.minority_fraction
        );
        ensure!(self.n_total >= 2, InvalidArgument, "n_total must be at least 2");
        ensure!(
            self.n_total <= self.oversample_pool,
            InvalidArgument,
            "n_total {} exceeds the pool size {}",
            self.n_total,
            self.oversample_pool
        );
        let n_min = self.minority_count();
        ensure!(
            n_min >= 1 && n_min < self.n_total,
            InvalidArgument,
            "minority fraction {} of {} rows leaves an empty class",
            self.minority_fraction,
            self.n_total
        );
        Ok(())
    }

    pub fn minority_count(&self) -> usize {
        (self.minority_fraction * self.n_total as f64).round() as usize
    }
}

/// The seeded linear model behind a simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationMetadata {
    pub spec: SimulationSpec,
    /// Sorted indices of the features with a nonzero coefficient.
    pub effective_features: Vec<usize>,
    /// One coefficient per feature; zero outside `effective_features`.
    pub coefficients: Vec<f64>,
    /// +1 if the minority class is the `g >= 0` side, -1 otherwise. Emitted
    /// labels equal `minority_side * sgn(g)`.
    pub minority_side: i8,
    pub pool_nonnegative: usize,
    pub pool_negative: usize,
}

impl SimulationMetadata {
    pub fn linear_score(&self, x: &[f64]) -> f64 {
        self.coefficients.iter().zip(x).map(|(b, v)| b * v).sum()
    }

    /// Label of a row under the stored model.
    pub fn label_of(&self, x: &[f64]) -> Label {
        let raw = if self.linear_score(x) >= 0.0 { 1 } else { -1 };
        if raw * self.minority_side > 0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationPool {
    /// Row-major `oversample_pool x p` standard-normal draws.
    pub values: Vec<f64>,
    pub effective_features: Vec<usize>,
    pub coefficients: Vec<f64>,
    /// `g(x)` per pool row.
    pub scores: Vec<f64>,
}

/// Draws the full pool and the seeded linear model.
pub fn generate_pool(spec: &SimulationSpec) -> Result<SimulationPool> {
    spec.validate()?;
    let mut rng = seeded(spec.seed);
    let values: Vec<f64> = (0..spec.oversample_pool * spec.p)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    let mut effective_features = index::sample(&mut rng, spec.p, spec.p0).into_vec();
    effective_features.sort_unstable();
    let mut coefficients = vec![0.0; spec.p];
    for &j in &effective_features {
        coefficients[j] = rng.sample(StandardNormal);
    }
    let scores = values
        .chunks_exact(spec.p)
        .map(|x| coefficients.iter().zip(x).map(|(b, v)| b * v).sum())
        .collect();
    Ok(SimulationPool {
        values,
        effective_features,
        coefficients,
        scores,
    })
}

/// Labels pool rows by `sgn(g)` (0 counts as +1), then keeps exactly
/// `round(minority_fraction * n_total)` rows of the rarer side and fills the
/// rest from the other side. Rows keep their pool order.
pub fn simulate_dataset(spec: &SimulationSpec) -> Result<(Dataset, SimulationMetadata)> {
    let pool = generate_pool(spec)?;
    let (nonneg, neg): (Vec<usize>, Vec<usize>) =
        (0..spec.oversample_pool).partition(|&i| pool.scores[i] >= 0.0);
    let minority_side: i8 = if nonneg.len() <= neg.len() { 1 } else { -1 };
    let (minority, majority) = if minority_side > 0 { (&nonneg, &neg) } else { (&neg, &nonneg) };
    let n_min = spec.minority_count();
    let n_maj = spec.n_total - n_min;
    ensure!(
        minority.len() >= n_min && majority.len() >= n_maj,
        Data,
        "pool of {} rows has {} minority and {} majority rows, need {n_min} and {n_maj}; increase oversample_pool",
        spec.oversample_pool,
        minority.len(),
        majority.len()
    );
    let mut rng = seeded(derive_seed(spec.seed, &[1]));
    let mut chosen: Vec<(usize, Label)> = index::sample(&mut rng, minority.len(), n_min)
        .into_iter()
        .map(|i| (minority[i], Label::Positive))
        .chain(
            index::sample(&mut rng, majority.len(), n_maj)
                .into_iter()
                .map(|i| (majority[i], Label::Negative)),
        )
        .collect();
    chosen.sort_unstable_by_key(|c| c.0);

    let mut values = Vec::with_capacity(spec.n_total * spec.p);
    let mut labels = Vec::with_capacity(spec.n_total);
    for (row, label) in chosen {
        values.extend_from_slice(&pool.values[row * spec.p..(row + 1) * spec.p]);
        labels.push(label);
    }
    let data = Dataset::new(Arc::new(FeatureSchema::all_continuous(spec.p)), values, labels)?;
    let meta = SimulationMetadata {
        spec: *spec,
        effective_features: pool.effective_features,
        coefficients: pool.coefficients,
        minority_side,
        pool_nonnegative: nonneg.len(),
        pool_negative: neg.len(),
    };
    Ok((data, meta))
}
