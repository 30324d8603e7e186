use super::affine::project_affine_in_place;
use super::active::Refine;
use super::newton::Solution;
use super::SolverOptions;
use crate::divergence::Divergence;
use crate::error::{Error, Result};
use crate::types::{ClassDistribution, Duals, Matrix};

/// Attempt an active-set polish every this many sweeps.
const POLISH_EVERY: usize = 5;

/// Multipliers implied by the Dykstra corrections for the objective
/// `sum ||a - x||^2`: the affine correction splits into row and column
/// parts, the clamp correction is `-psi / 2`.
fn duals_from_corrections(pa: &Matrix, qb: &Matrix) -> Duals {
    let (n, k) = (pa.n(), pa.k());
    let row_means: Vec<f64> = pa.rows().map(|r| 2.0 * r.iter().sum::<f64>() / k as f64).collect();
    let col_means: Vec<f64> = pa.column_means().iter().map(|v| 2.0 * v).collect();
    let overall = row_means.iter().sum::<f64>() / n as f64;
    let mut psi = qb.clone();
    psi.as_mut_slice().iter_mut().for_each(|v| *v *= -2.0);
    Duals { theta: row_means, lambda: col_means.iter().map(|c| c - overall).collect(), psi: Some(psi) }
}

/// Certifies the active set suggested by the clamped iterate `b`.
fn polish(x: &Matrix, pi: &[f64], lower: &[f64], b: &Matrix, duals: &Duals, opts: &SolverOptions) -> Option<Solution> {
    let (n, k) = (x.n(), x.k());
    // a column whose target equals its bound is pinned there outright
    let held: Vec<bool> = (0..n * k).map(|idx| pi[idx % k] <= lower[idx % k]).collect();
    let active: Vec<bool> = (0..n * k).map(|idx| b.as_slice()[idx] <= lower[idx % k]).collect();
    let d = Divergence::brier();
    Refine { d: &d, x, pi, lower, held: &held, guess: b }.run(active, &duals.theta, &duals.lambda, opts)
}

/// Euclidean projection of `x` onto `Q_pi` intersected with `a_ij >= lower_j`.
pub(crate) fn dykstra_bounded(x: &Matrix, pi: &[f64], lower: &[f64], opts: &SolverOptions) -> Result<Solution> {
    let (n, k) = (x.n(), x.k());
    if lower.iter().zip(pi).any(|(l, p)| l > p) || lower.iter().sum::<f64>() > 1.0 {
        return Err(Error::InfeasibleTarget(format!("lower bounds {lower:?} exceed the target {pi:?}")));
    }
    let mut y = x.clone();
    let mut pa = Matrix::zeros(n, k);
    let mut qb = Matrix::zeros(n, k);
    let mut a = Matrix::zeros(n, k);
    let mut iterations = 0;
    loop {
        // affine step
        for idx in 0..n * k {
            a.as_mut_slice()[idx] = y.as_slice()[idx] + pa.as_slice()[idx];
        }
        let pre = a.clone();
        project_affine_in_place(&mut a, pi);
        let mut gap: f64 = 0.0;
        let mut moved: f64 = 0.0;
        for idx in 0..n * k {
            pa.as_mut_slice()[idx] = pre.as_slice()[idx] - a.as_slice()[idx];
            // clamp step
            let z = a.as_slice()[idx] + qb.as_slice()[idx];
            let b = z.max(lower[idx % k]);
            qb.as_mut_slice()[idx] = z - b;
            gap = gap.max((b - a.as_slice()[idx]).abs());
            moved = moved.max((b - y.as_slice()[idx]).abs());
            y.as_mut_slice()[idx] = b;
        }
        iterations += 1;
        if iterations % POLISH_EVERY == 0 || gap <= opts.tolerance {
            let duals = duals_from_corrections(&pa, &qb);
            if let Some(mut sol) = polish(x, pi, lower, &y, &duals, opts) {
                sol.iterations += iterations;
                return Ok(sol);
            }
            if gap <= 0.1 * opts.tolerance && moved <= 0.1 * opts.tolerance {
                return Ok(Solution { a: y, duals, iterations });
            }
        }
        if iterations >= opts.max_iterations {
            return Err(Error::NonConvergence { iterations, residual: gap });
        }
    }
}

/// Brier bounded adjustment: the Euclidean projection of `p` onto `Q□_pi`.
pub(crate) fn dykstra_bga(p: &Matrix, pi: &[f64], opts: &SolverOptions) -> Result<Solution> {
    dykstra_bounded(p, pi, &vec![0.0; pi.len()], opts)
}

/// Euclidean projection of an arbitrary matrix onto `Q_pi` with `a >= 0`, by
/// Dykstra's alternating projections.
pub fn dykstra_project(x: &Matrix, pi: &ClassDistribution, opts: &SolverOptions) -> Result<Matrix> {
    opts.validate()?;
    if x.k() != pi.k() {
        return Err(Error::DimensionMismatch(format!("matrix has {} columns, pi has {}", x.k(), pi.k())));
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidOptions("matrix has non-finite entries".into()));
    }
    let mut a = dykstra_bga(x, pi.as_slice(), opts)?.a;
    a.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
    Ok(a)
}
