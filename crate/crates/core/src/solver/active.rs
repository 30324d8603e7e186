//! Active-set refinement shared by the bounded solvers. Starting from a
//! guess of which entries sit on their lower bound, repeatedly solve the
//! equality problem with those entries pinned, then pin any free entry that
//! fell below its bound and release any pinned entry whose sign multiplier
//! came out negative. Stops at a certified KKT point or gives up.

use super::interior::complete_frozen_duals;
use super::newton::{newton_core, Solution, Start};
use super::{polish_budget, SolverOptions};
use crate::divergence::Divergence;
use crate::types::Matrix;

/// Most negative multiplier accepted when certifying an active set.
pub(crate) const PSI_FLOOR: f64 = -1e-10;
/// How far below its bound a free entry may land and still count as feasible.
const BOUND_SLACK: f64 = 1e-13;
/// Active-set changes tried before giving up.
const MAX_ROUNDS: usize = 30;

pub(crate) struct Refine<'a> {
    pub d: &'a Divergence,
    pub x: &'a Matrix,
    pub pi: &'a [f64],
    /// Per-column lower bound.
    pub lower: &'a [f64],
    /// Entries fixed at their bound regardless of multipliers.
    pub held: &'a [bool],
    /// Starting values for the free entries.
    pub guess: &'a Matrix,
}

impl Refine<'_> {
    pub(crate) fn run(&self, mut active: Vec<bool>, theta: &[f64], lambda: &[f64], opts: &SolverOptions) -> Option<Solution> {
        let (n, k) = (self.x.n(), self.x.k());
        let budget = polish_budget(opts);
        let (mut theta, mut lambda) = (theta.to_vec(), lambda.to_vec());
        let mut iterations = 0;
        let mut current = self.guess.clone();
        for _ in 0..MAX_ROUNDS {
            let free: Vec<bool> = (0..n * k).map(|idx| !self.held[idx] && !active[idx]).collect();
            let mut start = current.clone();
            for (idx, v) in start.as_mut_slice().iter_mut().enumerate() {
                if !free[idx] {
                    *v = self.lower[idx % k];
                } else if *v <= self.lower[idx % k] {
                    // a released entry restarts from the reference point
                    *v = self.x.as_slice()[idx].max(self.lower[idx % k]);
                }
            }
            let sol = newton_core(
                self.d,
                self.x,
                self.pi,
                Some(&free),
                Some(Start { a: start, theta: theta.clone(), lambda: lambda.clone() }),
                &budget,
            )
            .ok()?;
            iterations += sol.iterations;
            let mut duals = sol.duals;
            complete_frozen_duals(self.d, self.x, &sol.a, &mut duals, &free);
            let psi = duals.psi.as_ref().expect("completed");
            let mut changed = false;
            for idx in 0..n * k {
                if self.held[idx] {
                    continue;
                }
                if free[idx] && sol.a.as_slice()[idx] < self.lower[idx % k] - BOUND_SLACK {
                    active[idx] = true;
                    changed = true;
                } else if !free[idx] && psi.as_slice()[idx] < PSI_FLOOR {
                    active[idx] = false;
                    changed = true;
                }
            }
            if !changed {
                let mut a = sol.a;
                for (idx, v) in a.as_mut_slice().iter_mut().enumerate() {
                    *v = v.max(self.lower[idx % k]);
                }
                return Some(Solution { a, duals, iterations });
            }
            theta = duals.theta;
            lambda = duals.lambda;
            current = sol.a;
        }
        None
    }
}
