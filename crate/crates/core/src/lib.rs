//! Target-decoy FDR control for two-group multiple testing.
//!
//! Each test's observed statistic (the target) competes with statistics
//! computed on random regroupings of its samples (the decoys). Tests are
//! labelled target or decoy by that competition, ranked globally, and
//! rejected up to the largest cutoff whose decoy-based FDR estimate stays
//! below α.
//!
//! ```
//! use target_decoy::{run_procedure, GroupedDataset, ScoreKind, TdConfig};
//!
//! let rows = vec![
//!     vec![5.1, 4.8, 5.3, 0.2, -0.1, 0.4],
//!     vec![0.3, -0.2, 0.1, 0.0, 0.2, -0.3],
//! ];
//! let data = GroupedDataset::from_rows(rows, 3).unwrap();
//! let config = TdConfig { alpha: 1.0, seed: 7, ..TdConfig::default() };
//! let decisions = run_procedure(&data, ScoreKind::AbsT, &config).unwrap();
//! assert_eq!(decisions.t, 20); // all C(6, 3) groupings
//! ```

pub mod baselines;
pub mod config;
pub mod data;
pub mod error;
pub mod harness;
pub mod io;
pub mod permute;
pub mod rng;
pub mod scores;
pub mod simgen;
pub mod tdp;

pub use baselines::{bh_reject, storey_qvalues, PValueSource};
pub use data::{GroupedDataset, GroupedSamples};
pub use error::{Result, TdError};
pub use harness::{run_experiment, ExperimentPlan, ExperimentSummary, Method, Report};
pub use permute::{resolve_budget, PermutationBudget, PermutationMode};
pub use scores::ScoreKind;
pub use simgen::{generate, Model, SimSpec};
pub use tdp::{
    adaptive_run, label_dataset, run_procedure, score_dataset, select_threshold, DecisionSet, Label, TdConfig,
    Variant,
};
