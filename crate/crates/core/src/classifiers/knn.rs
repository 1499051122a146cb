use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::distance::{nearest_squared, MixedMetric, VdmTable};
use crate::error::{ensure, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    k: usize,
    train: Dataset,
    vdm: VdmTable,
}

pub fn train_knn(train: &Dataset, k: usize, vdm: &VdmTable) -> Result<KnnModel> {
    ensure!(!train.is_empty(), InvalidArgument, "KNN training set is empty");
    ensure!(k >= 1, InvalidArgument, "k must be at least 1");
    ensure!(
        k <= train.n_rows(),
        InvalidArgument,
        "k = {k} exceeds the {} training rows",
        train.n_rows()
    );
    MixedMetric::new(train.schema(), vdm)?;
    Ok(KnnModel {
        k,
        train: train.clone(),
        vdm: vdm.clone(),
    })
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Fraction of positive neighbors minus one half.
    pub fn decision_score(&self, x: &[f64]) -> f64 {
        let metric = MixedMetric::new(self.train.schema(), &self.vdm).expect("validated at training time");
        let nn = nearest_squared(&self.train, x, self.k, &metric, None);
        let pos = nn.iter().filter(|&&(i, _)| self.train.label(i).is_positive()).count();
        pos as f64 / self.k as f64 - 0.5
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::continuous;
    use crate::data::Label;

    #[test]
    fn one_nn_recovers_training_labels() {
        let d = continuous(&[&[0.0], &[1.0], &[2.0], &[5.0]], &[1, -1, 1, -1]);
        let vdm = VdmTable::continuous_only(d.schema()).unwrap();
        let m = train_knn(&d, 1, &vdm).unwrap();
        for i in 0..d.n_rows() {
            assert_eq!(Label::from_score(m.decision_score(d.row(i))), d.label(i));
        }
    }

    #[test]
    fn vote_scores() {
        let d = continuous(&[&[0.0], &[0.1], &[0.2], &[9.0]], &[1, 1, -1, -1]);
        let vdm = VdmTable::continuous_only(d.schema()).unwrap();
        let m3 = train_knn(&d, 3, &vdm).unwrap();
        assert!((m3.decision_score(&[0.0]) - (2.0 / 3.0 - 0.5)).abs() < 1e-15);
        let tie = continuous(&[&[0.0], &[1.0]], &[1, -1]);
        let m2 = train_knn(&tie, 2, &vdm).unwrap();
        assert_eq!(m2.decision_score(&[0.3]), 0.0);
        assert_eq!(Label::from_score(m2.decision_score(&[0.3])), Label::Positive);
        assert!(train_knn(&tie, 3, &vdm).is_err());
    }
}
