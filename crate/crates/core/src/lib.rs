//! Paired-comparison subjective quality scaling.
//!
//! Study design over random regular pair graphs, Thurstone Case V scale
//! reconstruction (least squares and maximum likelihood), crowd quality
//! control, a live study engine, and re-ranking analysis against benchmark
//! rankings.

pub mod analysis;
pub mod collector;
pub mod design;
pub mod fixtures;
pub mod model;
pub mod normal;
pub mod qc;
pub mod reports;
pub mod scaling;
pub mod simulation;

pub use analysis::{
    aggregate_average, bootstrap_srocc, disagreement, fisher_ci, rank_compare, scatter_data, srocc, AnalysisError, CorrelationReport,
    RankClass, RankComparison, RankThresholds, RankedSequence, ScatterPoint,
};
pub use collector::{Collector, CollectorError, StudyExport, StudyManifest};
pub use design::{full_comparison_count, generate_pair_graph, inject_anchors, schedule_pages, AnchoredDesign, DesignError};
pub use fixtures::load_fixtures;
pub use model::{
    build_count_matrix, CountMatrix, EpsilonPolicy, Item, ItemKind, ItemRegistry, ModelError, PairGraph, StudyConfig, Vote, WorkerRecord,
    WorkerStatus,
};
pub use qc::{accuracy_histogram, filter_workers, grade_quiz, WorkerBehavior, WorkerProfile};
pub use reports::{emit_report, parse_benchmark_csv, parse_votes_csv, write_votes_csv, Report, ReportFormat};
pub use scaling::{rescale_with_anchors, scale_pipeline, solve_scale_ls, solve_scale_mle, ScaleMethod, ScaleResult, ScalingError};
pub use simulation::{recovery_experiment, simulate_study, MuGenerator, SimulationOptions};
