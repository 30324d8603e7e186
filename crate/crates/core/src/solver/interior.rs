use super::active::{Refine, PSI_FLOOR};
use super::newton::{curvature, newton_core, Solution, Start};
use super::reduced::solve_step;
use super::{divergence_gradient, finish_report, identity_report, SolverOptions, ADJUSTED_SHORTCUT_TOL};
use crate::divergence::{Divergence, Domain};
use crate::error::{Error, Result};
use crate::types::{is_adjusted, validate_inputs, AdjustmentReport, ClassDistribution, Duals, Matrix, PredictionMatrix};

const FRACTION_TO_BOUNDARY: f64 = 0.995;

/// Fills in `psi` for held entries and `lambda` for columns without any free
/// entry, so that stationarity holds with `psi >= 0` wherever the gradient
/// is finite.
pub(crate) fn complete_frozen_duals(d: &Divergence, p: &Matrix, a: &Matrix, duals: &mut Duals, free: &[bool]) {
    let (n, k) = (a.n(), a.k());
    let g = divergence_gradient(d, p, a);
    for j in 0..k {
        if (0..n).any(|i| free[i * k + j]) {
            continue;
        }
        let need = (0..n)
            .map(|i| -g.get(i, j) - duals.theta[i])
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        duals.lambda[j] = if need.is_finite() { need } else { 0.0 };
    }
    let mut psi = duals.psi.take().unwrap_or_else(|| Matrix::zeros(n, k));
    for i in 0..n {
        for j in 0..k {
            if free[i * k + j] {
                continue;
            }
            let v = g.get(i, j) + duals.theta[i] + duals.lambda[j];
            // an infinite gradient is only harmless where the whole column is held
            let held_column = (0..n).all(|r| !free[r * k + j]);
            psi.set(i, j, if v.is_finite() { v } else if held_column { 0.0 } else { f64::NEG_INFINITY });
        }
    }
    duals.psi = Some(psi);
}

/// Entries of columns with zero target mass are pinned to zero.
pub(crate) fn free_mask(n: usize, pi: &[f64]) -> Vec<bool> {
    let k = pi.len();
    (0..n * k).map(|idx| pi[idx % k] > 0.0).collect()
}

/// Certifies the active set suggested by the barrier iterate.
fn polish(d: &Divergence, p: &Matrix, pi: &[f64], st: &State, free: &[bool], opts: &SolverOptions) -> Option<Solution> {
    let (n, k) = (p.n(), p.k());
    // without a finite gradient at zero, no entry of a free column can be active
    let bounded_gradient = d.domain() == Domain::FullSpace;
    let active: Vec<bool> =
        (0..n * k).map(|idx| bounded_gradient && free[idx] && st.psi.as_slice()[idx] > st.a.as_slice()[idx]).collect();
    let held: Vec<bool> = free.iter().map(|f| !f).collect();
    let lower = vec![0.0; k];
    Refine { d, x: p, pi, lower: &lower, held: &held, guess: &st.a }.run(active, &st.theta, &st.lambda, opts)
}

/// Iteration budget for the equality solve tried before the barrier path.
const EQUALITY_ATTEMPT_ITERATIONS: usize = 200;

/// When the equality-constrained optimum is already nonnegative it solves
/// the bounded problem too, with every sign multiplier zero.
fn unconstrained_first(d: &Divergence, p: &Matrix, pi: &[f64], free: &[bool], opts: &SolverOptions) -> Option<Solution> {
    let mut start = p.clone();
    for (v, &f) in start.as_mut_slice().iter_mut().zip(free) {
        if !f {
            *v = 0.0;
        }
    }
    let budget = SolverOptions { max_iterations: opts.max_iterations.min(EQUALITY_ATTEMPT_ITERATIONS), ..opts.clone() };
    let (n, k) = (p.n(), p.k());
    let sol = newton_core(
        d,
        p,
        pi,
        Some(free),
        Some(Start { a: start, theta: vec![0.0; n], lambda: vec![0.0; k] }),
        &budget,
    )
    .ok()?;
    if sol.a.as_slice().iter().any(|&v| v < 0.0) {
        return None;
    }
    let mut duals = sol.duals;
    duals.psi = Some(Matrix::zeros(n, k));
    complete_frozen_duals(d, p, &sol.a, &mut duals, free);
    if duals.psi.as_ref().unwrap().as_slice().iter().any(|&v| v < PSI_FLOOR) {
        return None;
    }
    Some(Solution { a: sol.a, duals, iterations: sol.iterations })
}

struct State {
    a: Matrix,
    psi: Matrix,
    theta: Vec<f64>,
    lambda: Vec<f64>,
}

struct Residual {
    rd: Matrix,
    rc: Matrix,
    s: Vec<f64>,
    t: Vec<f64>,
    dual_primal: f64,
    comp: f64,
    merit: f64,
}

fn residual(d: &Divergence, p: &Matrix, pi: &[f64], st: &State, mu: f64, free: &[bool]) -> Residual {
    let (n, k) = (st.a.n(), st.a.k());
    let nf = n as f64;
    let g = divergence_gradient(d, p, &st.a);
    let mut rd = Matrix::zeros(n, k);
    let mut rc = Matrix::zeros(n, k);
    let (mut dual_primal, mut comp, mut merit) = (0.0f64, 0.0f64, 0.0);
    for i in 0..n {
        for j in 0..k {
            let idx = i * k + j;
            if !free[idx] {
                continue;
            }
            let v = g.get(i, j) + st.theta[i] + st.lambda[j] - st.psi.get(i, j);
            let c = st.psi.get(i, j) * st.a.get(i, j) - mu;
            rd.set(i, j, v);
            rc.set(i, j, c);
            dual_primal = dual_primal.max(v.abs());
            comp = comp.max(c.abs());
            merit += v * v + c * c;
        }
    }
    let s: Vec<f64> = st.a.rows().map(|r| 1.0 - r.iter().sum::<f64>()).collect();
    let cs = st.a.column_sums();
    let t: Vec<f64> = (0..k).map(|j| nf * pi[j] - cs[j]).collect();
    for v in &s {
        dual_primal = dual_primal.max(v.abs());
        merit += v * v;
    }
    for v in &t {
        dual_primal = dual_primal.max(v.abs() / nf);
        merit += v * v;
    }
    if !merit.is_finite() {
        merit = f64::INFINITY;
        dual_primal = f64::INFINITY;
    }
    Residual { rd, rc, s, t, dual_primal, comp, merit }
}

/// Primal-dual log-barrier method for the bounded problem. The barrier
/// parameter follows `opts.barrier_schedule`; each stage is solved by damped
/// Newton steps kept strictly inside `a > 0, psi > 0`.
pub(crate) fn interior_core(
    d: &Divergence,
    p: &Matrix,
    pi: &[f64],
    free: &[bool],
    opts: &SolverOptions,
) -> Result<Solution> {
    let (n, k) = (p.n(), p.k());
    if let Some(sol) = unconstrained_first(d, p, pi, free, opts) {
        return Ok(sol);
    }
    let mu0 = opts.barrier_schedule[0];
    let mut a = Matrix::zeros(n, k);
    let mut psi = Matrix::zeros(n, k);
    for i in 0..n {
        for j in 0..k {
            if free[i * k + j] {
                let v = 0.5 * (p.get(i, j) + pi[j]);
                a.set(i, j, v);
                psi.set(i, j, mu0 / v);
            }
        }
    }
    let mut st = State { a, psi, theta: vec![0.0; n], lambda: vec![0.0; k] };
    let mut iterations = 0;
    let last = opts.barrier_schedule.len() - 1;
    for (stage, &mu) in opts.barrier_schedule.iter().enumerate() {
        let target = if stage == last { opts.tolerance } else { opts.tolerance.max(0.1 * mu) };
        let mut res = residual(d, p, pi, &st, mu, free);
        while res.dual_primal > target || res.comp > 0.5 * mu {
            if iterations >= opts.max_iterations {
                return Err(Error::NonConvergence { iterations, residual: res.dual_primal });
            }
            iterations += 1;
            let mut barrier = Matrix::zeros(n, k);
            let mut rhs = Matrix::zeros(n, k);
            for idx in 0..n * k {
                if free[idx] {
                    let (av, pv) = (st.a.as_slice()[idx], st.psi.as_slice()[idx]);
                    barrier.as_mut_slice()[idx] = pv / av;
                    rhs.as_mut_slice()[idx] = res.rd.as_slice()[idx] + res.rc.as_slice()[idx] / av;
                }
            }
            let curv = curvature(d, &st.a, Some(&barrier));
            let step = solve_step(&curv, &rhs, &res.s, &res.t, Some(free))?;
            let mut dpsi = Matrix::zeros(n, k);
            let mut alpha_max: f64 = 1.0;
            for idx in 0..n * k {
                if !free[idx] {
                    continue;
                }
                let (av, pv) = (st.a.as_slice()[idx], st.psi.as_slice()[idx]);
                let da = step.da.as_slice()[idx];
                let dp = -(res.rc.as_slice()[idx] + pv * da) / av;
                dpsi.as_mut_slice()[idx] = dp;
                if da < 0.0 {
                    alpha_max = alpha_max.min(-FRACTION_TO_BOUNDARY * av / da);
                }
                if dp < 0.0 {
                    alpha_max = alpha_max.min(-FRACTION_TO_BOUNDARY * pv / dp);
                }
            }
            let mut alpha = alpha_max;
            loop {
                let mut cand = State {
                    a: st.a.clone(),
                    psi: st.psi.clone(),
                    theta: st.theta.iter().zip(&step.dtheta).map(|(v, dv)| v + alpha * dv).collect(),
                    lambda: st.lambda.iter().zip(&step.dlambda).map(|(v, dv)| v + alpha * dv).collect(),
                };
                for idx in 0..n * k {
                    if free[idx] {
                        cand.a.as_mut_slice()[idx] += alpha * step.da.as_slice()[idx];
                        cand.psi.as_mut_slice()[idx] += alpha * dpsi.as_slice()[idx];
                    }
                }
                let positive = (0..n * k).all(|idx| !free[idx] || (cand.a.as_slice()[idx] > 0.0 && cand.psi.as_slice()[idx] > 0.0));
                if positive {
                    let cres = residual(d, p, pi, &cand, mu, free);
                    if cres.merit <= (1.0 - 1e-4 * alpha) * res.merit {
                        st = cand;
                        res = cres;
                        break;
                    }
                }
                alpha *= opts.damping;
                if alpha < 1e-14 {
                    return Err(Error::NonConvergence { iterations, residual: res.dual_primal });
                }
            }
        }
    }

    if let Some(mut sol) = polish(d, p, pi, &st, free, opts) {
        sol.iterations += iterations;
        return Ok(sol);
    }
    let mut duals = Duals { theta: st.theta, lambda: st.lambda, psi: Some(st.psi) };
    complete_frozen_duals(d, p, &st.a, &mut duals, free);
    Ok(Solution { a: st.a, duals, iterations })
}

/// Bounded general adjustment via the interior-point path.
pub fn interior_point_solve(
    d: &Divergence,
    p: &PredictionMatrix,
    pi: &ClassDistribution,
    opts: &SolverOptions,
) -> Result<AdjustmentReport> {
    opts.validate()?;
    validate_inputs(p, pi)?;
    if is_adjusted(p, pi, ADJUSTED_SHORTCUT_TOL) {
        return Ok(identity_report(p, pi.as_slice(), true));
    }
    if d.domain() == Domain::OpenSimplex && !d.in_domain(p.matrix().as_slice()) {
        return Err(Error::Domain(format!("{}: predictions must be strictly positive", d.name())));
    }
    let free = free_mask(p.n(), pi.as_slice());
    let sol = interior_core(d, p.matrix(), pi.as_slice(), &free, opts)?;
    finish_report(d, p, pi.as_slice(), sol.a, sol.duals, sol.iterations, true, opts)
}
