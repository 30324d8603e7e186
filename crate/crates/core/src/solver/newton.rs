use super::reduced::{solve_step, Curvature};
use super::{divergence_gradient, finish_report, identity_report, is_free, SolverOptions, ADJUSTED_SHORTCUT_TOL};
use crate::divergence::{Divergence, Domain};
use crate::error::{Error, Result};
use crate::types::{validate_inputs, AdjustmentReport, ClassDistribution, Duals, Matrix, PredictionMatrix};

pub(crate) struct Solution {
    pub a: Matrix,
    pub duals: Duals,
    pub iterations: usize,
}

/// Starting point for a warm-started solve.
pub(crate) struct Start {
    pub a: Matrix,
    pub theta: Vec<f64>,
    pub lambda: Vec<f64>,
}

struct Residual {
    r: Matrix,
    s: Vec<f64>,
    t: Vec<f64>,
    max: f64,
    merit: f64,
}

fn free_in_domain(d: &Divergence, a: &Matrix, free: Option<&[bool]>) -> bool {
    match d.domain() {
        Domain::FullSpace => a.as_slice().iter().all(|v| v.is_finite()),
        Domain::OpenSimplex => {
            a.as_slice().iter().enumerate().all(|(idx, &v)| !is_free(free, idx) || (v > 0.0 && v.is_finite()))
        }
    }
}

fn residual(
    d: &Divergence,
    reference: &Matrix,
    pi: &[f64],
    a: &Matrix,
    theta: &[f64],
    lambda: &[f64],
    free: Option<&[bool]>,
) -> Residual {
    let (n, k) = (a.n(), a.k());
    let nf = n as f64;
    let g = divergence_gradient(d, reference, a);
    let mut r = Matrix::zeros(n, k);
    let mut max: f64 = 0.0;
    let mut merit = 0.0;
    for i in 0..n {
        for j in 0..k {
            if is_free(free, i * k + j) {
                let v = g.get(i, j) + theta[i] + lambda[j];
                r.set(i, j, v);
                max = max.max(v.abs());
                merit += v * v;
            }
        }
    }
    let s: Vec<f64> = a.rows().map(|row| 1.0 - row.iter().sum::<f64>()).collect();
    let cs = a.column_sums();
    let t: Vec<f64> = (0..k).map(|j| nf * pi[j] - cs[j]).collect();
    for v in &s {
        max = max.max(v.abs());
        merit += v * v;
    }
    for v in &t {
        max = max.max(v.abs() / nf);
        merit += v * v;
    }
    if !max.is_finite() {
        max = f64::INFINITY;
        merit = f64::INFINITY;
    }
    Residual { r, s, t, max, merit }
}

/// Curvature of the objective at `a`, optionally plus a diagonal barrier term.
pub(crate) fn curvature(d: &Divergence, a: &Matrix, extra_diag: Option<&Matrix>) -> Curvature {
    let (n, k) = (a.n(), a.k());
    let mut diag = Matrix::zeros(n, k);
    let mut is_diag = true;
    for i in 0..n {
        if !d.diagonal_hessian_into(a.row(i), diag.row_mut(i)) {
            is_diag = false;
            break;
        }
    }
    if is_diag {
        if let Some(e) = extra_diag {
            for (h, x) in diag.as_mut_slice().iter_mut().zip(e.as_slice()) {
                *h += x;
            }
        }
        return Curvature::Diagonal(diag);
    }
    let mut blocks = vec![0.0; n * k * k];
    for i in 0..n {
        let block = &mut blocks[i * k * k..(i + 1) * k * k];
        d.hessian_into(a.row(i), block);
        if let Some(e) = extra_diag {
            for j in 0..k {
                block[j * k + j] += e.get(i, j);
            }
        }
    }
    Curvature::Dense(blocks)
}

const REFINE_STEPS: usize = 3;

/// Damped Newton on the equality-constrained stationarity system.
///
/// Entries with `free[idx] == false` are held at their starting value.
pub(crate) fn newton_core(
    d: &Divergence,
    reference: &Matrix,
    pi: &[f64],
    free: Option<&[bool]>,
    start: Option<Start>,
    opts: &SolverOptions,
) -> Result<Solution> {
    let (n, k) = (reference.n(), reference.k());
    let (mut a, mut theta, mut lambda) = match start {
        Some(s) => (s.a, s.theta, s.lambda),
        None => (reference.clone(), vec![0.0; n], vec![0.0; k]),
    };
    if !free_in_domain(d, &a, free) {
        return Err(Error::Domain(format!("{}: starting point outside the domain", d.name())));
    }
    let mut res = residual(d, reference, pi, &a, &theta, &lambda, free);
    let mut iterations = 0;
    while res.max > opts.tolerance {
        if iterations >= opts.max_iterations {
            return Err(Error::NonConvergence { iterations, residual: res.max });
        }
        iterations += 1;
        let curv = curvature(d, &a, None);
        let step = solve_step(&curv, &res.r, &res.s, &res.t, free)?;
        let mut alpha = 1.0;
        loop {
            let mut a_new = a.clone();
            for (v, dv) in a_new.as_mut_slice().iter_mut().zip(step.da.as_slice()) {
                *v += alpha * dv;
            }
            if free_in_domain(d, &a_new, free) {
                let theta_new: Vec<f64> = theta.iter().zip(&step.dtheta).map(|(t, dt)| t + alpha * dt).collect();
                let lambda_new: Vec<f64> = lambda.iter().zip(&step.dlambda).map(|(l, dl)| l + alpha * dl).collect();
                let cand = residual(d, reference, pi, &a_new, &theta_new, &lambda_new, free);
                if cand.merit <= (1.0 - 1e-4 * alpha) * res.merit || cand.max <= opts.tolerance {
                    a = a_new;
                    theta = theta_new;
                    lambda = lambda_new;
                    res = cand;
                    break;
                }
            }
            alpha *= opts.damping;
            if alpha < 1e-14 {
                return Err(Error::NonConvergence { iterations, residual: res.max });
            }
        }
    }
    // a few undamped steps past the tolerance leave headroom for the final
    // clamping and gauge fixing
    for _ in 0..REFINE_STEPS {
        if res.max == 0.0 {
            break;
        }
        let curv = curvature(d, &a, None);
        let Ok(step) = solve_step(&curv, &res.r, &res.s, &res.t, free) else { break };
        let mut a_new = a.clone();
        for (v, dv) in a_new.as_mut_slice().iter_mut().zip(step.da.as_slice()) {
            *v += dv;
        }
        if !free_in_domain(d, &a_new, free) {
            break;
        }
        let theta_new: Vec<f64> = theta.iter().zip(&step.dtheta).map(|(t, dt)| t + dt).collect();
        let lambda_new: Vec<f64> = lambda.iter().zip(&step.dlambda).map(|(l, dl)| l + dl).collect();
        let cand = residual(d, reference, pi, &a_new, &theta_new, &lambda_new, free);
        if !(cand.max < 0.5 * res.max) {
            break;
        }
        (a, theta, lambda, res) = (a_new, theta_new, lambda_new, cand);
        iterations += 1;
    }
    Ok(Solution { a, duals: Duals { theta, lambda, psi: None }, iterations })
}

/// Unbounded general adjustment by Newton's method: the `d`-projection of
/// `p` onto `Q_pi` with no sign constraints.
pub fn newton_equality_solve(
    d: &Divergence,
    p: &PredictionMatrix,
    pi: &ClassDistribution,
    opts: &SolverOptions,
) -> Result<AdjustmentReport> {
    opts.validate()?;
    validate_inputs(p, pi)?;
    if crate::types::is_adjusted(p, pi, ADJUSTED_SHORTCUT_TOL) {
        return Ok(identity_report(p, pi.as_slice(), false));
    }
    if !d.in_domain(p.matrix().as_slice()) {
        return Err(Error::Domain(format!("{}: predictions must lie strictly inside the domain", d.name())));
    }
    let sol = newton_core(d, p.matrix(), pi.as_slice(), None, None, opts)?;
    finish_report(d, p, pi.as_slice(), sol.a, sol.duals, sol.iterations, false, opts)
}
