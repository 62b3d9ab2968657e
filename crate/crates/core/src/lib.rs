//! Budget-optimized crowd worker allocation.
//!
//! Estimate per-sample worker accuracy from a fully redundant pilot, model
//! majority-vote accuracy as a binomial tail, trace the best
//! accuracy-versus-budget frontier greedily, simulate what a chosen
//! allocation would have scored on the pilot, and learn to predict
//! allocations from sample features.

pub mod allocator;
pub mod error;
pub mod features;
pub mod learner;
pub mod oracle;
pub mod pilot;
pub mod seeding;
pub mod simulator;
pub mod success;
pub mod synth;
pub mod verify;

pub use allocator::{
    allocation_at_budget, buoca_greedy, buoca_sorted, ccr, cost, Allocation, AllocationProblem, BudgetFrontier,
    FrontierPoint, PointSummary,
};
pub use error::{Error, ErrorKind, Result};
pub use features::{FeatureMatrix, SarcasmVector, TextCorpus};
pub use learner::{AllocationLabelSet, AllocationModel, DeploymentReport, FoldPlan, ForestSettings};
pub use oracle::{exhaustive_optimal, OracleResult};
pub use pilot::{estimate_success_probabilities, load_pilot, PilotDataset, PilotFormat, SuccessEstimates};
pub use simulator::{exact_subset_accuracy, SimulationReport, TieRule};
pub use success::{binomial_success_curve, classify_curve, CurveClass, SuccessCurve};
