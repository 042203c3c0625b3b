//! The level-by-level minimization driver and its building blocks.

pub mod auxiliary;
pub mod config;
pub mod driver;
pub mod primary;
pub mod region_k;
pub mod report;

pub use auxiliary::{minimize_auxiliary, AuxiliaryMass, AuxiliaryOptions, AuxiliaryOutcome};
pub use config::{epsilon_schedule, AlgorithmConfig, Limits, Neighborhood};
pub use driver::{check_stopping, run_algorithm, FinalChecks, IterationRecord, RunResult};
pub use primary::{
    check_membership, grid_minimal_mass, minimize_primary, solve_certified, CertifiedProgram, Membership,
    PrimaryOutcome, SolveOptions,
};
pub use region_k::{build_region_k, RegionK};
pub use report::{certification_report, iteration_csv};
