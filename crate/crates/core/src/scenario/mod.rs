//! Case files, random scenarios and Monte Carlo sweeps.

mod case_file;
mod run;
mod sampling;
mod sweep;

pub use case_file::{
    bundled_case, bundled_case_text, case_to_json, load_case, parse_case, CaseError, CaseFile, KindTag, LineRecord,
    NodeRecord, BUNDLED_CASES,
};
pub use run::{
    evaluate_full, evaluate_partial, run_scenario, sample_scenario, Anomaly, AnomalyStage, AreaRecord, ConfigError,
    FullResult, PartialResult, RunOptions, RunSpec, ScenarioConfig, ScenarioError, ScenarioRecord,
};
pub use sampling::{
    clusters_are_well_formed, sample_failed_generators, sample_uncontrollable_clusters, scenario_seed, splitmix64,
    SamplingError,
};
pub use sweep::{sweep, SweepConfig, SweepError, SweepOptions, SweepRow, SweepTable, CSV_HEADER};
