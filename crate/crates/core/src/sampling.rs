//! Random simplex points for generators and tests.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

/// One draw from a Dirichlet distribution with the given concentrations,
/// via normalized Gamma variates (the class count is only known at run time).
pub fn dirichlet<R: Rng + ?Sized>(rng: &mut R, alpha: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).expect("positive concentration").sample(rng))
        .collect();
    let s: f64 = out.iter().sum();
    if s > 0.0 {
        out.iter_mut().for_each(|v| *v /= s);
    } else {
        // every variate underflowed; only possible for tiny concentrations
        let k = out.len() as f64;
        out.iter_mut().for_each(|v| *v = 1.0 / k);
    }
    out
}

/// Symmetric Dirichlet(1), i.e. uniform on the simplex.
pub fn uniform_simplex<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    dirichlet(rng, &vec![1.0; k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn draws_lie_on_the_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 2..7 {
            let x = uniform_simplex(&mut rng, k);
            assert_eq!(x.len(), k);
            assert!(x.iter().all(|&v| v >= 0.0));
            assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
