//! Metrics, the synthetic data generator, the experiment runner, grid-search
//! tuning and the signed-rank test.

pub mod experiment;
pub mod metrics;
pub mod report;
pub mod simulation;
pub mod tuning;
pub mod wilcoxon;

pub use experiment::{
    evaluate_scores, run_experiment, summarize, ExperimentResults, ExperimentSpec, MeanStd, Pipeline,
    PipelineFailure, PipelineKind, PipelineSummary, ResultRow,
};
pub use metrics::{compute_metrics, confusion_matrix, roc_auc, ConfusionMatrix, MetricReport, DEFAULT_BETA};
pub use report::{
    pairwise_wilcoxon, read_results_csv, write_plotdata_csv, write_results_csv, write_wilcoxon_csv, Metric,
    PairingMode, SummaryDocument, WilcoxonCell,
};
pub use simulation::{generate_pool, simulate_dataset, SimulationMetadata, SimulationPool, SimulationSpec};
pub use tuning::{grid_search_detailed, grid_search_tune, TuningOutcome};
pub use wilcoxon::{wilcoxon_signed_rank, wilcoxon_signed_rank_with, RankBasis, WilcoxonOptions, WilcoxonResult};
