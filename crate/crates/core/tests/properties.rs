use proptest::prelude::*;
use shiftadjust::{
    additive_adjust, bga_adjust, constraint_residuals, mean_divergence, multiplicative_adjust, uga_adjust,
    ClassDistribution, Divergence, Matrix, PredictionMatrix,
};

/// Rows drawn as normalized positive weights, so every entry is interior.
fn simplex_rows(n: usize, k: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.05f64..1.0, k), n).prop_map(|rows| {
        rows.into_iter()
            .map(|r| {
                let s: f64 = r.iter().sum();
                r.into_iter().map(|v| v / s).collect()
            })
            .collect()
    })
}

fn distribution(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.02f64..1.0, k).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| v / s).collect()
    })
}

/// Predictions plus a target distribution of the same width.
fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (2usize..12, 2usize..5).prop_flat_map(|(n, k)| (simplex_rows(n, k), distribution(k)))
}

/// Predictions plus soft labels `y`; the target is `y`'s column means, which
/// puts `y` inside the bounded feasible set.
fn labeled_instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    (2usize..12, 2usize..5).prop_flat_map(|(n, k)| (simplex_rows(n, k), simplex_rows(n, k)))
}

fn target_of(y: &Matrix) -> ClassDistribution {
    let m = y.column_means();
    let s: f64 = m.iter().sum();
    ClassDistribution::new(m.iter().map(|v| v / s).collect()).unwrap()
}

fn divergences() -> [Divergence; 2] {
    [Divergence::brier(), Divergence::log_loss()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn outputs_satisfy_the_constraints((rows, pi) in instance()) {
        let p = PredictionMatrix::from_rows(&rows).unwrap();
        let pi = ClassDistribution::new(pi).unwrap();
        let mut outputs = vec![additive_adjust(&p, &pi).unwrap(), multiplicative_adjust(&p, &pi).unwrap()];
        for d in divergences() {
            outputs.push(uga_adjust(&p, &pi, &d).unwrap());
            outputs.push(bga_adjust(&p, &pi, &d).unwrap());
        }
        for rep in &outputs {
            let (r, c) = constraint_residuals(rep.matrix(), pi.as_slice());
            prop_assert!(r <= 1e-10 && c <= 1e-10, "residuals {r} {c}");
        }
        for rep in &outputs[3..] {
            prop_assert!(rep.matrix().as_slice().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn bounded_adjustment_never_increases_loss((rows, ys) in labeled_instance()) {
        let p = PredictionMatrix::from_rows(&rows).unwrap();
        let y = Matrix::from_rows(&ys).unwrap();
        let pi = target_of(&y);
        for d in divergences() {
            let a = bga_adjust(&p, &pi, &d).unwrap();
            let before = mean_divergence(&d, p.matrix(), &y).unwrap();
            let after = mean_divergence(&d, a.matrix(), &y).unwrap();
            let moved = mean_divergence(&d, p.matrix(), a.matrix()).unwrap();
            // the reduction is at least the distance travelled
            prop_assert!(before - after >= moved - 1e-9, "{}: {before} -> {after}, moved {moved}", d.name());
        }
    }

    #[test]
    fn additive_matches_its_closed_form((rows, pi) in instance()) {
        let p = PredictionMatrix::from_rows(&rows).unwrap();
        let dist = ClassDistribution::new(pi.clone()).unwrap();
        let a = additive_adjust(&p, &dist).unwrap();
        let means = p.column_means();
        for (i, row) in rows.iter().enumerate() {
            for j in 0..row.len() {
                let want = row[j] + pi[j] - means[j];
                prop_assert!((a.matrix().get(i, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn adjusting_twice_changes_nothing((rows, pi) in instance()) {
        let p = PredictionMatrix::from_rows(&rows).unwrap();
        let pi = ClassDistribution::new(pi).unwrap();
        for d in divergences() {
            let once = bga_adjust(&p, &pi, &d).unwrap();
            let again = bga_adjust(once.adjusted.bounded().unwrap(), &pi, &d).unwrap();
            prop_assert!(once.matrix().max_abs_diff(again.matrix()) < 1e-9);
        }
    }

    #[test]
    fn row_order_does_not_matter((rows, pi) in instance()) {
        let p = PredictionMatrix::from_rows(&rows).unwrap();
        let reversed: Vec<Vec<f64>> = rows.iter().rev().cloned().collect();
        let q = PredictionMatrix::from_rows(&reversed).unwrap();
        let pi = ClassDistribution::new(pi).unwrap();
        let n = rows.len();
        for d in divergences() {
            let a = bga_adjust(&p, &pi, &d).unwrap();
            let b = bga_adjust(&q, &pi, &d).unwrap();
            for i in 0..n {
                for (x, y) in a.matrix().row(i).iter().zip(b.matrix().row(n - 1 - i)) {
                    prop_assert!((x - y).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn unbounded_moves_less_than_bounded((rows, pi) in instance()) {
        let p = PredictionMatrix::from_rows(&rows).unwrap();
        let pi = ClassDistribution::new(pi).unwrap();
        let d = Divergence::brier();
        let star = uga_adjust(&p, &pi, &d).unwrap();
        let boxed = bga_adjust(&p, &pi, &d).unwrap();
        let m_star = mean_divergence(&d, p.matrix(), star.matrix()).unwrap();
        let m_box = mean_divergence(&d, p.matrix(), boxed.matrix()).unwrap();
        prop_assert!(m_box >= m_star - 1e-12);
    }

    #[test]
    fn bounded_beats_perturbed_feasible_points((rows, pi) in instance(), seed in 0u64..1000) {
        use rand::{Rng, SeedableRng};
        let p = PredictionMatrix::from_rows(&rows).unwrap();
        let pi = ClassDistribution::new(pi).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (n, k) = (p.n(), p.k());
        for d in divergences() {
            let a = bga_adjust(&p, &pi, &d).unwrap();
            let best = mean_divergence(&d, p.matrix(), a.matrix()).unwrap();
            for _ in 0..20 {
                // move mass around a random rectangle, which keeps row and column sums
                let (i1, i2) = (rng.random_range(0..n), rng.random_range(0..n));
                let (j1, j2) = (rng.random_range(0..k), rng.random_range(0..k));
                if i1 == i2 || j1 == j2 {
                    continue;
                }
                let mut q = a.matrix().clone();
                let t = rng.random_range(-0.05..0.05);
                q.set(i1, j1, q.get(i1, j1) + t);
                q.set(i2, j2, q.get(i2, j2) + t);
                q.set(i1, j2, q.get(i1, j2) - t);
                q.set(i2, j1, q.get(i2, j1) - t);
                if q.as_slice().iter().all(|&v| v > 0.0) {
                    prop_assert!(mean_divergence(&d, p.matrix(), &q).unwrap() >= best - 1e-12);
                }
            }
        }
    }
}
