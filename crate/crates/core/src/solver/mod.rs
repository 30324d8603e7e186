//! Convex solver machinery behind the general adjusters, plus an
//! independent brute-force oracle for small instances.
//!
//! All solvers share one multiplier convention. For the objective
//! `sum_i d(p_i, a_i)` over `Q_pi` (rows sum to one, column means equal `pi`)
//! and optionally `a >= 0`, stationarity reads
//!
//! ```text
//! grad phi(a_i)_j - grad phi(p_i)_j = psi_ij - theta_i - lambda_j
//! ```
//!
//! with `psi >= 0`, `psi_ij * a_ij = 0`, and the gauge `sum_j lambda_j = 0`.

mod active;
mod affine;
mod dykstra;
mod interior;
mod newton;
mod oracle;
mod reduced;
mod scaling;

pub use affine::project_affine_qpi;
pub use dykstra::dykstra_project;
pub use interior::interior_point_solve;
pub use newton::newton_equality_solve;
pub use oracle::{brute_force_oracle, OracleOptions};

pub(crate) use dykstra::dykstra_bga;
pub(crate) use scaling::alternating_scaling;

use crate::divergence::Divergence;
use crate::error::{Error, Result};
use crate::types::{
    constraint_residuals, Adjusted, AdjustmentReport, Duals, Matrix, PredictionMatrix, UnboundedPredictionMatrix,
};

/// Column residual below which an input counts as already adjusted.
pub const ADJUSTED_SHORTCUT_TOL: f64 = 1e-12;

/// Tolerances and iteration limits for the convex solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Target for every KKT and constraint residual.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Strictly decreasing barrier parameters for the interior-point solver.
    pub barrier_schedule: Vec<f64>,
    /// Step backoff factor for line searches.
    pub damping: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self::with_tolerance(1e-10)
    }
}

impl SolverOptions {
    /// Default options with the barrier schedule extended down to `tolerance`.
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self { tolerance, max_iterations: 10_000, barrier_schedule: barrier_schedule(tolerance), damping: 0.5 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidOptions(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidOptions("max_iterations must be at least 1".into()));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::InvalidOptions(format!("damping must lie in (0, 1), got {}", self.damping)));
        }
        let s = &self.barrier_schedule;
        if s.is_empty() || s.iter().any(|&m| !(m > 0.0)) || s.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidOptions("barrier schedule must be positive and strictly decreasing".into()));
        }
        if *s.last().unwrap() > self.tolerance {
            return Err(Error::InvalidOptions("barrier schedule must end at or below the tolerance".into()));
        }
        Ok(())
    }
}

/// `0.1, 0.02, ...` divided by 5 until at or below `floor`.
fn barrier_schedule(floor: f64) -> Vec<f64> {
    let mut mu = 0.1;
    let mut out = vec![mu];
    while mu > floor {
        mu /= 5.0;
        out.push(mu);
    }
    out
}

/// Newton budget for certifying a guessed active set. A correct guess
/// converges in a handful of steps; a wrong one may never.
const POLISH_ITERATIONS: usize = 50;

pub(crate) fn polish_budget(opts: &SolverOptions) -> SolverOptions {
    SolverOptions { max_iterations: opts.max_iterations.min(POLISH_ITERATIONS), ..opts.clone() }
}

/// True when `free` marks entry `(i, j)` as a decision variable.
#[inline]
pub(crate) fn is_free(free: Option<&[bool]>, idx: usize) -> bool {
    free.is_none_or(|f| f[idx])
}

/// Per-row `grad phi(a_i) - grad phi(p_i)`; entries where the gradient is
/// undefined come back non-finite.
pub(crate) fn divergence_gradient(d: &Divergence, p: &Matrix, a: &Matrix) -> Matrix {
    let (n, k) = (a.n(), a.k());
    let mut g = Matrix::zeros(n, k);
    let mut ga = vec![0.0; k];
    let mut gp = vec![0.0; k];
    for i in 0..n {
        d.grad_into(a.row(i), &mut ga);
        d.grad_into(p.row(i), &mut gp);
        let out = g.row_mut(i);
        for j in 0..k {
            out[j] = ga[j] - gp[j];
        }
    }
    g
}

/// Largest violation of the stationarity condition over entries with a
/// finite gradient.
pub(crate) fn stationarity_residual(d: &Divergence, p: &Matrix, a: &Matrix, duals: &Duals) -> f64 {
    let g = divergence_gradient(d, p, a);
    let mut worst: f64 = 0.0;
    for i in 0..a.n() {
        for j in 0..a.k() {
            let gij = g.get(i, j);
            if !gij.is_finite() {
                continue;
            }
            let psi = duals.psi.as_ref().map_or(0.0, |m| m.get(i, j));
            worst = worst.max((gij + duals.theta[i] + duals.lambda[j] - psi).abs());
        }
    }
    worst
}

/// Assembles a report and refuses results that miss the declared bounds.
pub(crate) fn finish_report(
    d: &Divergence,
    p: &PredictionMatrix,
    pi: &[f64],
    mut a: Matrix,
    mut duals: Duals,
    iterations: usize,
    bounded: bool,
    opts: &SolverOptions,
) -> Result<AdjustmentReport> {
    duals.fix_gauge();
    if bounded {
        for v in a.as_mut_slice() {
            *v = v.clamp(0.0, 1.0);
        }
    }
    let (row_residual, column_residual) = constraint_residuals(&a, pi);
    let stationarity = stationarity_residual(d, p.matrix(), &a, &duals);
    let bound = opts.tolerance * (1.0 + 1e-6) + 1e-15;
    let worst = row_residual.max(column_residual).max(stationarity);
    if !(worst <= bound) {
        return Err(Error::NonConvergence { iterations, residual: worst });
    }
    let objective = crate::divergence::mean_divergence(d, p.matrix(), &a)?;
    let adjusted = if bounded {
        Adjusted::Bounded(PredictionMatrix::new(a)?)
    } else {
        Adjusted::Unbounded(UnboundedPredictionMatrix::new(a)?)
    };
    Ok(AdjustmentReport {
        adjusted,
        objective: Some(objective),
        row_residual,
        column_residual,
        stationarity_residual: stationarity,
        duals: Some(duals),
        iterations,
    })
}

/// Report for an input that already satisfies the column constraints.
pub(crate) fn identity_report(p: &PredictionMatrix, pi: &[f64], bounded: bool) -> AdjustmentReport {
    let (row_residual, column_residual) = constraint_residuals(p.matrix(), pi);
    AdjustmentReport {
        adjusted: if bounded {
            Adjusted::Bounded(p.clone())
        } else {
            Adjusted::Unbounded(p.clone().into())
        },
        objective: Some(0.0),
        row_residual,
        column_residual,
        stationarity_residual: 0.0,
        duals: Some(Duals::zeros(p.n(), p.k(), bounded)),
        iterations: 0,
    }
}
