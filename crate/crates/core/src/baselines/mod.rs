//! Regression comparators: ordinary least squares, forward stepwise
//! regression and a CART regression tree.

mod linear;
mod tree;

pub use linear::{
    fit_ols, fit_ols_with, fit_stepwise, fit_stepwise_with, LinearModel, Regressor, TransformPolicy,
};
pub use tree::{fit_cart, fit_cart_with, CartConfig, SplitRule, TreeModel, TreeNode};

use crate::corpus::Project;
use crate::Result;

/// A fitted baseline.
pub trait Predictor {
    /// Positive effort estimate for `x`.
    fn predict(&self, x: &Project) -> Result<f64>;
}

/// Prediction through any fitted baseline.
pub fn predict(model: &dyn Predictor, x: &Project) -> Result<f64> {
    model.predict(x)
}
