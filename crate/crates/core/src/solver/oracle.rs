//! Projected-gradient search with random restarts. Deliberately simple and
//! slow: it shares no code with the Newton or interior-point paths beyond
//! the Euclidean projection, so agreement with them is meaningful.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::dykstra::dykstra_bounded;
use super::SolverOptions;
use crate::divergence::{mean_divergence, Divergence, Domain};
use crate::error::{Error, Result};
use crate::types::{is_adjusted, validate_inputs, ClassDistribution, Matrix, PredictionMatrix};

const MAX_N: usize = 8;
const MAX_K: usize = 4;
/// Smallest entry the search may visit in positive-target columns when the
/// divergence needs an interior point.
const INTERIOR_FLOOR: f64 = 1e-12;
const PROJECTION_TOLERANCE: f64 = 1e-11;
/// Consecutive trial steps without measurable progress before a restart ends.
const STALL_LIMIT: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptions {
    pub restarts: usize,
    /// Initial step sizes, cycled over restarts. Steps are scaled by `n`
    /// because the objective carries a `1/n` factor.
    pub step_schedule: Vec<f64>,
    pub iteration_cap: usize,
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { restarts: 32, step_schedule: vec![0.5, 0.05], iteration_cap: 1_000_000, seed: 0 }
    }
}

impl OracleOptions {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidOptions("restarts must be at least 1".into()));
        }
        if self.step_schedule.is_empty() || self.step_schedule.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidOptions("step schedule must be non-empty and positive".into()));
        }
        if self.iteration_cap == 0 {
            return Err(Error::InvalidOptions("iteration_cap must be at least 1".into()));
        }
        Ok(())
    }
}

struct Problem<'a> {
    d: &'a Divergence,
    p: &'a Matrix,
    pi: &'a [f64],
    lower: Vec<f64>,
    proj: SolverOptions,
}

impl Problem<'_> {
    fn objective(&self, a: &Matrix) -> f64 {
        mean_divergence(self.d, self.p, a).unwrap_or(f64::INFINITY)
    }

    fn gradient(&self, a: &Matrix) -> Matrix {
        let nf = a.n() as f64;
        let mut g = super::divergence_gradient(self.d, self.p, a);
        for v in g.as_mut_slice() {
            *v = if v.is_finite() { *v / nf } else { 0.0 };
        }
        g
    }

    fn project(&self, x: &Matrix) -> Result<Matrix> {
        let mut a = dykstra_bounded(x, self.pi, &self.lower, &self.proj)?.a;
        for (idx, v) in a.as_mut_slice().iter_mut().enumerate() {
            *v = v.max(self.lower[idx % self.pi.len()]);
        }
        Ok(a)
    }

    fn descend(&self, start: Matrix, step: f64, cap: usize) -> Result<(Matrix, f64)> {
        let mut a = self.project(&start)?;
        let mut f = self.objective(&a);
        let mut eta = step * a.n() as f64;
        let mut stalled = 0;
        for _ in 0..cap {
            let g = self.gradient(&a);
            let mut x = a.clone();
            for (v, gv) in x.as_mut_slice().iter_mut().zip(g.as_slice()) {
                *v -= eta * gv;
            }
            // a trial point the projection cannot resolve ends this restart
            let Ok(c) = self.project(&x) else { break };
            let fc = self.objective(&c);
            let (mut lin, mut sq, mut moved) = (0.0, 0.0, 0.0f64);
            for ((cv, av), gv) in c.as_slice().iter().zip(a.as_slice()).zip(g.as_slice()) {
                lin += gv * (cv - av);
                sq += (cv - av) * (cv - av);
                moved = moved.max((cv - av).abs());
            }
            // below the projection's own accuracy nothing more can be learned
            if moved < 0.01 * PROJECTION_TOLERANCE {
                break;
            }
            let improved = f - fc > 1e-15 * f.abs().max(1.0);
            stalled = if improved { 0 } else { stalled + 1 };
            if fc <= f + lin + sq / (2.0 * eta) {
                a = c;
                f = fc;
                eta *= 1.25;
            } else {
                eta *= 0.5;
                if eta < 1e-300 {
                    break;
                }
            }
            if stalled >= STALL_LIMIT {
                break;
            }
        }
        Ok((a, f))
    }
}

/// Approximate minimizer of `(1/n) sum_i d(p_i, a_i)` over `Q□_pi` for small
/// instances. Deterministic for a given seed; restart `r` always uses the
/// same random start, so adding restarts can only lower the result.
pub fn brute_force_oracle(
    d: &Divergence,
    p: &PredictionMatrix,
    pi: &ClassDistribution,
    opts: &OracleOptions,
) -> Result<(Matrix, f64)> {
    opts.validate()?;
    validate_inputs(p, pi)?;
    let (n, k) = (p.n(), p.k());
    if n > MAX_N || k > MAX_K {
        return Err(Error::SizeGuard { n, k });
    }
    if d.domain() == Domain::OpenSimplex && !d.in_domain(p.matrix().as_slice()) {
        return Err(Error::Domain(format!("{}: predictions must be strictly positive", d.name())));
    }
    if is_adjusted(p, pi, super::ADJUSTED_SHORTCUT_TOL) {
        return Ok((p.matrix().clone(), 0.0));
    }
    if n == 1 {
        let a = Matrix::new(1, k, pi.as_slice().to_vec())?;
        let f = mean_divergence(d, p.matrix(), &a)?;
        return Ok((a, f));
    }
    let floor = if d.domain() == Domain::OpenSimplex { INTERIOR_FLOOR } else { 0.0 };
    let lower: Vec<f64> = pi.as_slice().iter().map(|&v| if v > 0.0 { floor.min(v) } else { 0.0 }).collect();
    let prob = Problem { d, p: p.matrix(), pi: pi.as_slice(), lower, proj: SolverOptions::with_tolerance(PROJECTION_TOLERANCE) };

    let runs: Vec<Result<(Matrix, f64)>> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(r as u64);
            let mut data = Vec::with_capacity(n * k);
            for _ in 0..n {
                let row = crate::sampling::uniform_simplex(&mut rng, k);
                data.extend(row);
            }
            let start = Matrix::new(n, k, data)?;
            let step = opts.step_schedule[r % opts.step_schedule.len()];
            prob.descend(start, step, opts.iteration_cap)
        })
        .collect();

    let mut best: Option<(Matrix, f64)> = None;
    for run in runs {
        let (a, f) = run?;
        if best.as_ref().is_none_or(|(_, bf)| f < *bf) {
            best = Some((a, f));
        }
    }
    Ok(best.expect("at least one restart"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm(rows: &[Vec<f64>]) -> PredictionMatrix {
        PredictionMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn adjusted_input_is_returned() {
        let p = pm(&[vec![0.9, 0.1], vec![0.1, 0.9]]);
        let pi = ClassDistribution::new(vec![0.5, 0.5]).unwrap();
        let (a, f) = brute_force_oracle(&Divergence::brier(), &p, &pi, &OracleOptions::default()).unwrap();
        assert_eq!(&a, p.matrix());
        assert_eq!(f, 0.0);
    }

    #[test]
    fn single_row_is_forced_to_target() {
        let p = pm(&[vec![0.7, 0.2, 0.1]]);
        let pi = ClassDistribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        let (a, _) = brute_force_oracle(&Divergence::log_loss(), &p, &pi, &OracleOptions::default()).unwrap();
        assert_eq!(a.row(0), pi.as_slice());
    }

    #[test]
    fn brier_clamp_instance() {
        // the optimum is [[0.4, 0.6], [0, 1]] with objective (2 * 0.59^2 + 2 * 0.1^2) / 2
        let p = pm(&[vec![0.99, 0.01], vec![0.10, 0.90]]);
        let pi = ClassDistribution::new(vec![0.2, 0.8]).unwrap();
        let opts = OracleOptions { restarts: 4, ..OracleOptions::default() };
        let (a, f) = brute_force_oracle(&Divergence::brier(), &p, &pi, &opts).unwrap();
        assert!((f - (0.59f64.powi(2) + 0.1f64.powi(2))).abs() < 1e-9);
        assert!(a.get(1, 0).abs() < 1e-6);
    }

    #[test]
    fn size_guard() {
        let rows = vec![vec![0.5, 0.5]; 9];
        let p = pm(&rows);
        let pi = ClassDistribution::new(vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            brute_force_oracle(&Divergence::brier(), &p, &pi, &OracleOptions::default()),
            Err(Error::SizeGuard { n: 9, k: 2 })
        ));
    }

    #[test]
    fn more_restarts_never_hurt() {
        let p = pm(&[vec![0.7, 0.2, 0.1], vec![0.2, 0.5, 0.3], vec![0.1, 0.1, 0.8]]);
        let pi = ClassDistribution::new(vec![0.5, 0.2, 0.3]).unwrap();
        let d = Divergence::log_loss();
        let few = brute_force_oracle(&d, &p, &pi, &OracleOptions { restarts: 2, seed: 9, ..Default::default() }).unwrap();
        let many = brute_force_oracle(&d, &p, &pi, &OracleOptions { restarts: 6, seed: 9, ..Default::default() }).unwrap();
        assert!(many.1 <= few.1);
    }
}
