//! Base learners. All train on unweighted data; every model exposes a real
//! decision score whose sign (zero counting as positive) is the prediction.

mod bpnn;
mod encoding;
mod knn;
mod svm;
mod tree;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Label};
use crate::distance::VdmTable;
use crate::error::{ensure, Result};

pub use bpnn::{train_bpnn, train_bpnn_traced, BpnnModel, LossHistory, Mlp};
pub use encoding::OneHotEncoder;
pub use knn::{train_knn, KnnModel};
pub use svm::{train_svm, Kernel, SvmModel, SvmParams};
pub use tree::{train_decision_tree, Node, TreeModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierSpec {
    Knn {
        k: usize,
    },
    Dtree {
        max_depth: usize,
        min_leaf: usize,
    },
    Bpnn {
        hidden_units: usize,
        epochs: usize,
        learning_rate: f64,
        init_seed: u64,
    },
    Svm(SvmParams),
}

impl ClassifierSpec {
    pub fn knn(k: usize) -> Self {
        ClassifierSpec::Knn { k }
    }

    pub fn dtree(max_depth: usize, min_leaf: usize) -> Self {
        ClassifierSpec::Dtree { max_depth, min_leaf }
    }

    pub fn bpnn(hidden_units: usize, epochs: usize, learning_rate: f64) -> Self {
        ClassifierSpec::Bpnn {
            hidden_units,
            epochs,
            learning_rate,
            init_seed: 0,
        }
    }

    pub fn svm(kernel: Kernel, c: f64) -> Self {
        ClassifierSpec::Svm(SvmParams {
            kernel,
            c,
            ..SvmParams::default()
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClassifierSpec::Knn { .. } => "knn",
            ClassifierSpec::Dtree { .. } => "dtree",
            ClassifierSpec::Bpnn { .. } => "bpnn",
            ClassifierSpec::Svm(_) => "svm",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ClassifierSpec::Knn { k } => ensure!(k >= 1, InvalidArgument, "knn k must be at least 1"),
            ClassifierSpec::Dtree { max_depth, min_leaf } => {
                ensure!(max_depth >= 1, InvalidArgument, "max_depth must be at least 1");
                ensure!(min_leaf >= 1, InvalidArgument, "min_leaf must be at least 1");
            }
            ClassifierSpec::Bpnn {
                hidden_units,
                learning_rate,
                ..
            } => {
                ensure!(hidden_units >= 1, InvalidArgument, "hidden_units must be at least 1");
                ensure!(
                    learning_rate > 0.0 && learning_rate.is_finite(),
                    InvalidArgument,
                    "learning_rate must be positive"
                );
            }
            ClassifierSpec::Svm(p) => {
                ensure!(p.c > 0.0 && p.c.is_finite(), InvalidArgument, "svm C must be positive");
                if let Kernel::Rbf { gamma } = p.kernel {
                    ensure!(gamma > 0.0 && gamma.is_finite(), InvalidArgument, "svm gamma must be positive");
                }
                ensure!(p.tolerance > 0.0, InvalidArgument, "svm tolerance must be positive");
                ensure!(p.max_passes >= 1, InvalidArgument, "svm max_passes must be at least 1");
            }
        }
        Ok(())
    }

    /// The same spec with its random initialization replaced by `seed`.
    /// Only the neural network is randomized.
    pub fn reseeded(&self, seed: u64) -> Self {
        match *self {
            ClassifierSpec::Bpnn {
                hidden_units,
                epochs,
                learning_rate,
                ..
            } => ClassifierSpec::Bpnn {
                hidden_units,
                epochs,
                learning_rate,
                init_seed: seed,
            },
            other => other,
        }
    }

    /// Trains on `train`. `vdm` is only consulted by KNN.
    pub fn fit(&self, train: &Dataset, vdm: &VdmTable) -> Result<TrainedClassifier> {
        self.validate()?;
        Ok(match *self {
            ClassifierSpec::Knn { k } => TrainedClassifier::Knn(train_knn(train, k.min(train.n_rows()), vdm)?),
            ClassifierSpec::Dtree { max_depth, min_leaf } => {
                TrainedClassifier::Dtree(train_decision_tree(train, max_depth, min_leaf)?)
            }
            ClassifierSpec::Bpnn {
                hidden_units,
                epochs,
                learning_rate,
                init_seed,
            } => TrainedClassifier::Bpnn(train_bpnn(train, hidden_units, epochs, learning_rate, init_seed)?),
            ClassifierSpec::Svm(p) => TrainedClassifier::Svm(train_svm(train, &p)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "lowercase")]
pub enum TrainedClassifier {
    Knn(KnnModel),
    Dtree(TreeModel),
    Bpnn(BpnnModel),
    Svm(SvmModel),
}

impl TrainedClassifier {
    /// Larger means more positive.
    pub fn decision_score(&self, x: &[f64]) -> f64 {
        match self {
            TrainedClassifier::Knn(m) => m.decision_score(x),
            TrainedClassifier::Dtree(m) => m.decision_score(x),
            TrainedClassifier::Bpnn(m) => m.decision_score(x),
            TrainedClassifier::Svm(m) => m.decision_score(x),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        Label::from_score(self.decision_score(x))
    }

    pub fn predict_all(&self, data: &Dataset) -> Vec<Label> {
        data.rows().map(|r| self.predict(r)).collect()
    }

    pub fn decision_scores(&self, data: &Dataset) -> Vec<f64> {
        data.rows().map(|r| self.decision_score(r)).collect()
    }
}
