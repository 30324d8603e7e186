use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shiftadjust::sampling::uniform_simplex;
use shiftadjust::solver::{dykstra_project, interior_point_solve, newton_equality_solve, project_affine_qpi};
use shiftadjust::{
    bga_adjust, empirical_distribution, multiplicative_adjust, ClassDistribution, Divergence, LabelMatrix, Matrix,
    PredictionMatrix, SolverOptions,
};

fn random_instance(rng: &mut ChaCha8Rng, labeled_target: bool) -> (PredictionMatrix, ClassDistribution) {
    let n = rng.random_range(2..=40);
    let k = rng.random_range(2..=6);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| uniform_simplex(rng, k)).collect();
    let p = PredictionMatrix::from_rows(&rows).unwrap();
    let pi = if labeled_target {
        let y = LabelMatrix::from_labels((0..n).map(|_| rng.random_range(0..k)).collect(), k).unwrap();
        empirical_distribution(&y)
    } else {
        ClassDistribution::new(uniform_simplex(rng, k)).unwrap()
    };
    (p, pi)
}

/// Plain iterative proportional fitting, written out independently.
fn ipf(p: &Matrix, pi: &[f64]) -> Matrix {
    let (n, k) = (p.n(), p.k());
    let mut a = p.clone();
    for _ in 0..100_000 {
        let cs = a.column_sums();
        for i in 0..n {
            for j in 0..k {
                a.set(i, j, a.get(i, j) * n as f64 * pi[j] / cs[j]);
            }
            let s: f64 = a.row(i).iter().sum();
            for j in 0..k {
                a.set(i, j, a.get(i, j) / s);
            }
        }
        let cs = a.column_sums();
        if (0..k).all(|j| (cs[j] / n as f64 - pi[j]).abs() < 1e-14) {
            break;
        }
    }
    a
}

#[test]
fn dykstra_and_interior_point_agree_on_brier() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let d = Divergence::brier();
    let opts = SolverOptions::default();
    for t in 0..200 {
        let (p, pi) = random_instance(&mut rng, t % 2 == 0);
        let a = dykstra_project(p.matrix(), &pi, &opts).unwrap();
        let b = interior_point_solve(&d, &p, &pi, &opts).unwrap();
        assert!(a.max_abs_diff(b.matrix()) < 1e-8, "instance {t}");
    }
}

#[test]
fn newton_brier_is_the_affine_projection() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let d = Divergence::brier();
    for _ in 0..100 {
        let (p, pi) = random_instance(&mut rng, false);
        let a = newton_equality_solve(&d, &p, &pi, &SolverOptions::default()).unwrap();
        let b = project_affine_qpi(p.matrix(), &pi).unwrap();
        assert!(a.matrix().max_abs_diff(&b) < 1e-10);
    }
}

#[test]
fn multiplicative_matches_proportional_fitting() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let (p, pi) = random_instance(&mut rng, false);
        let a = multiplicative_adjust(&p, &pi).unwrap();
        let b = ipf(p.matrix(), pi.as_slice());
        // both stop on a 1e-10 column residual, which bounds entries far less tightly
        assert!(a.matrix().max_abs_diff(&b) < 1e-8);
    }
}

#[test]
fn logloss_bounded_solution_stays_positive() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let d = Divergence::log_loss();
    for _ in 0..100 {
        let (p, pi) = random_instance(&mut rng, true);
        let a = bga_adjust(&p, &pi, &d).unwrap();
        let k = p.k();
        for (idx, &v) in a.matrix().as_slice().iter().enumerate() {
            assert_eq!(v > 0.0, pi.get(idx % k) > 0.0);
        }
    }
}

#[test]
fn reported_duals_satisfy_stationarity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let d = Divergence::brier();
    for _ in 0..50 {
        let (p, pi) = random_instance(&mut rng, true);
        let rep = bga_adjust(&p, &pi, &d).unwrap();
        let duals = rep.duals.as_ref().unwrap();
        let psi = duals.psi.as_ref().unwrap();
        let a = rep.matrix();
        assert!(duals.lambda.iter().sum::<f64>().abs() < 1e-9);
        for i in 0..p.n() {
            for j in 0..p.k() {
                let grad = 2.0 * (a.get(i, j) - p.matrix().get(i, j));
                let lhs = grad + duals.theta[i] + duals.lambda[j] - psi.get(i, j);
                assert!(lhs.abs() < 1e-9);
                assert!(psi.get(i, j) >= -1e-10);
                assert!((psi.get(i, j) * a.get(i, j)).abs() < 1e-9);
            }
        }
    }
}
