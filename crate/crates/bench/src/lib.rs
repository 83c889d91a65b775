//! Shared inputs for the benchmarks.

use pcscale_core::model::{build_count_matrix, CountMatrix, StudyConfig};
use pcscale_core::simulation::{simulate_study, SimulatedStudy, SimulationOptions};

/// A default-sized simulated study on an evenly spaced true scale.
pub fn default_study() -> (StudyConfig, SimulatedStudy) {
    let config = StudyConfig::default();
    let mu: Vec<f64> = (0..config.n_items).map(|i| 3.0 * i as f64 / (config.n_items - 1) as f64).collect();
    let study = simulate_study(&mu, &config, &SimulationOptions::default()).expect("simulated study");
    (config, study)
}

pub fn counts(study: &SimulatedStudy) -> CountMatrix {
    build_count_matrix(&study.export.votes, &study.items).expect("count matrix")
}
