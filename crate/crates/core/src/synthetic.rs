//! Synthetic labeled prediction sets: Gaussian class-conditional features
//! scored by a deliberately miscalibrated softmax classifier.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::shiftsim::LabeledDataset;
use crate::types::{LabelMatrix, Matrix, PredictionMatrix};

/// Weight of the uniform distribution mixed into every prediction, which
/// keeps all entries strictly inside `(0, 1)`.
const UNIFORM_MIX: f64 = 1e-3;

pub fn generate(n: usize, k: usize, n_features: usize, seed: u64) -> Result<LabeledDataset> {
    if n_features == 0 {
        return Err(Error::InvalidOptions("at least one feature is required".into()));
    }
    if k < 2 {
        return Err(Error::InvalidOptions("at least two classes are required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let prior = crate::sampling::dirichlet(&mut rng, &vec![2.0; k]);
    let centers: Vec<Vec<f64>> =
        (0..k).map(|_| (0..n_features).map(|_| 1.5 * normal.sample(&mut rng)).collect()).collect();
    // the classifier sees shifted centers, a temperature and class biases
    let temperature = rng.random_range(0.5..2.0);
    let model_centers: Vec<Vec<f64>> =
        centers.iter().map(|c| c.iter().map(|v| v + 0.3 * normal.sample(&mut rng)).collect()).collect();
    let bias: Vec<f64> = (0..k).map(|_| 0.5 * normal.sample(&mut rng)).collect();

    let mut labels = Vec::with_capacity(n);
    let mut features = Vec::with_capacity(n * n_features);
    let mut preds = Vec::with_capacity(n * k);
    let mut logits = vec![0.0; k];
    for _ in 0..n {
        let u: f64 = rng.random();
        let mut cum = 0.0;
        let mut label = k - 1;
        for (j, &w) in prior.iter().enumerate() {
            cum += w;
            if u < cum {
                label = j;
                break;
            }
        }
        let x: Vec<f64> = centers[label].iter().map(|c| c + normal.sample(&mut rng)).collect();
        for j in 0..k {
            let dist2: f64 = x.iter().zip(&model_centers[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            logits[j] = -0.5 * temperature * dist2 + bias[j];
        }
        let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logits.iter().map(|l| (l - top).exp()).sum();
        let row: Vec<f64> =
            logits.iter().map(|l| (1.0 - UNIFORM_MIX) * (l - top).exp() / z + UNIFORM_MIX / k as f64).collect();
        let s: f64 = row.iter().sum();
        preds.extend(row.iter().map(|v| v / s));
        features.extend(x);
        labels.push(label);
    }
    let predictions = PredictionMatrix::new(Matrix::new(n, k, preds)?)?;
    let labels = LabelMatrix::from_labels(labels, k)?;
    let features = Matrix::new(n, n_features, features)?;
    let names = (0..n_features).map(|c| format!("x{c}")).collect();
    LabeledDataset::with_features(predictions, labels, features, names)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predictions_are_interior_and_deterministic() {
        let a = generate(200, 3, 2, 7).unwrap();
        assert!(!a.predictions().has_extreme_entries());
        assert_eq!(a, generate(200, 3, 2, 7).unwrap());
        assert_ne!(a, generate(200, 3, 2, 8).unwrap());
        assert_eq!(a.features().unwrap().k(), 2);
    }
}
