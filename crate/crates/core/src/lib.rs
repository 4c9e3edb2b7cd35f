//! Analogy-based software effort estimation.
//!
//! The crate implements k-ABE, an analogy-based estimator whose analogy set is
//! discovered per target project with bisecting k-medoids clustering, together
//! with the fixed-k ABE baselines, three adjustment techniques, regression
//! comparators and a leave-one-out evaluation harness.
//!
//! Modules, bottom-up:
//!
//! * [`corpus`]: datasets, loading, normalization and the project distance.
//! * [`cluster`]: 2-medoid splits and the bisecting k-medoids tree.
//! * [`abe`]: neighbor ranking, fixed-k selection and k-ABE selection.
//! * [`adjust`]: similarity, GA and neural-network adjustments.
//! * [`baselines`]: OLS, forward stepwise regression and CART.
//! * [`eval`]: LOOCV, error metrics, Wilcoxon rank-sum, win-tie-loss and
//!   feature subset selection.

pub mod abe;
pub mod adjust;
pub mod baselines;
pub mod cluster;
pub mod corpus;
mod error;
pub mod eval;
pub mod seed;

pub use abe::{AnalogySet, Neighbor, SelectionSource, Selector};
pub use cluster::{BkConfig, ClusterNode, ClusterTree};
pub use corpus::{
    Dataset, DatasetStats, FeatureKind, FeatureMask, FeatureSchema, FeatureValue,
    NormalizationModel, Project,
};
pub use error::{Error, Result};
pub use eval::{EvaluationSummary, FoldResult, MethodSpec};
