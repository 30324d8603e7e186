//! Adjusting classifier probabilities to a known class distribution.
//!
//! Given an `n x k` matrix of predicted class probabilities and a target
//! class distribution `pi`, an adjuster returns predictions whose column
//! means equal `pi`. The general adjusters ([`uga_adjust`], [`bga_adjust`])
//! are Bregman projections for a chosen proper loss and never increase that
//! loss when `pi` is the true label distribution (the bounded one for any
//! labels, the unbounded one whenever the labels lie in its feasible set).
//!
//! ```
//! use shiftadjust::{bga_adjust, ClassDistribution, Divergence, PredictionMatrix};
//!
//! let p = PredictionMatrix::from_rows(&[vec![0.9, 0.1], vec![0.6, 0.4]]).unwrap();
//! let pi = ClassDistribution::new(vec![0.5, 0.5]).unwrap();
//! let report = bga_adjust(&p, &pi, &Divergence::brier()).unwrap();
//! assert!(report.column_residual < 1e-10);
//! ```

pub mod adjust;
pub mod divergence;
pub mod error;
pub mod experiment;
pub mod io;
pub mod sampling;
pub mod shiftsim;
pub mod solver;
pub mod synthetic;
pub mod types;

pub use adjust::{adjust, additive_adjust, bga_adjust, multiplicative_adjust, ppa_adjust, uga_adjust, AdjusterKind, Method};
pub use divergence::{bregman_gradient_q, divergence_value, mean_divergence, mean_loss, Divergence, DivergenceKind, Domain};
pub use error::{Error, Result};
pub use shiftsim::{LabeledDataset, ShiftMethod, ShiftSpec};
pub use solver::{OracleOptions, SolverOptions};
pub use types::{
    column_distribution, constraint_residuals, empirical_distribution, is_adjusted, validate_inputs, Adjusted,
    AdjustmentReport, ClassDistribution, Duals, LabelMatrix, Matrix, PredictionMatrix, UnboundedPredictionMatrix,
};
