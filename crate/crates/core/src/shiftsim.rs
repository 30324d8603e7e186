//! Dataset-shift injection and class-distribution perturbation.

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{empirical_distribution, ClassDistribution, LabelMatrix, Matrix, PredictionMatrix};

/// Perturbations of the class distribution that the experiments may apply.
pub const ALLOWED_DELTAS: [f64; 9] = [0.0, 0.01, -0.01, 0.02, -0.02, 0.04, -0.04, 0.08, -0.08];
pub const EPSILON_RANGE: (f64, f64) = (0.1, 0.5);
pub const DEFAULT_SUBSAMPLE_CAP: usize = 1000;

/// Predictions and labels for the same instances, optionally with features.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    predictions: PredictionMatrix,
    labels: LabelMatrix,
    features: Option<Matrix>,
    feature_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(predictions: PredictionMatrix, labels: LabelMatrix) -> Result<Self> {
        if predictions.n() != labels.n() || predictions.k() != labels.k() {
            return Err(Error::DimensionMismatch(format!(
                "predictions are {}x{}, labels are {}x{}",
                predictions.n(),
                predictions.k(),
                labels.n(),
                labels.k()
            )));
        }
        Ok(Self { predictions, labels, features: None, feature_names: Vec::new() })
    }

    pub fn with_features(
        predictions: PredictionMatrix,
        labels: LabelMatrix,
        features: Matrix,
        names: Vec<String>,
    ) -> Result<Self> {
        let mut ds = Self::new(predictions, labels)?;
        if features.n() != ds.n() {
            return Err(Error::DimensionMismatch(format!("{} feature rows for {} instances", features.n(), ds.n())));
        }
        if names.len() != features.k() {
            return Err(Error::DimensionMismatch(format!("{} names for {} feature columns", names.len(), features.k())));
        }
        ds.features = Some(features);
        ds.feature_names = names;
        Ok(ds)
    }

    pub fn n(&self) -> usize {
        self.labels.n()
    }

    pub fn k(&self) -> usize {
        self.labels.k()
    }

    pub fn predictions(&self) -> &PredictionMatrix {
        &self.predictions
    }

    pub fn labels(&self) -> &LabelMatrix {
        &self.labels
    }

    pub fn features(&self) -> Option<&Matrix> {
        self.features.as_ref()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_distribution(&self) -> ClassDistribution {
        empirical_distribution(&self.labels)
    }

    /// Keeps the given rows (in the given order) of every component.
    pub fn select_rows(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::InfeasibleShift("no instances would remain".into()));
        }
        let predictions = PredictionMatrix::new(self.predictions.matrix().select_rows(keep))?;
        let labels = LabelMatrix::from_labels(keep.iter().map(|&i| self.labels.label(i)).collect(), self.k())?;
        Ok(Self {
            predictions,
            labels,
            features: self.features.as_ref().map(|f| f.select_rows(keep)),
            feature_names: self.feature_names.clone(),
        })
    }

    fn with_labels(&self, labels: Vec<usize>) -> Result<Self> {
        Ok(Self { labels: LabelMatrix::from_labels(labels, self.k())?, ..self.clone() })
    }
}

/// Classes sorted by decreasing proportion (ties to the lower index), split
/// after the shortest prefix whose total exceeds one half.
pub fn majority_split(pi: &ClassDistribution) -> (Vec<usize>, Vec<usize>) {
    split_by(pi.as_slice(), 0.5)
}

/// Same rule on integer class counts, free of rounding.
fn majority_split_counts(counts: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let as_f: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let total: usize = counts.iter().sum();
    split_by(&as_f, total as f64 / 2.0)
}

fn split_by(weights: &[f64], half: f64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let mut cum = 0.0;
    let mut m = order.len();
    for (idx, &j) in order.iter().enumerate() {
        cum += weights[j];
        if cum > half {
            m = idx + 1;
            break;
        }
    }
    let minority = order.split_off(m);
    (order, minority)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidOptions(format!("shift amount {eps} outside [0, 1]")));
    }
    Ok(())
}

/// Undersamples the majority classes so that their total proportion drops by
/// `eps`, as nearly as integer counts allow.
pub fn shift_prior(ds: &LabeledDataset, eps: f64, seed: u64) -> Result<LabeledDataset> {
    check_eps(eps)?;
    let counts = ds.labels().class_counts();
    let (majority, _) = majority_split_counts(&counts);
    let n = ds.n();
    let c_maj: usize = majority.iter().map(|&j| counts[j]).sum();
    let target = c_maj as f64 / n as f64 - eps;
    if target <= 0.0 {
        return Err(Error::InfeasibleShift(format!("majority proportion would fall to {target}")));
    }
    let achieved = |r: usize| (c_maj - r) as f64 / (n - r) as f64;
    let mut best = 0;
    for r in 1..c_maj {
        if (achieved(r) - target).abs() < (achieved(best) - target).abs() {
            best = r;
        }
    }
    if best == 0 {
        return Ok(ds.clone());
    }
    let rows: Vec<usize> = (0..n).filter(|&i| majority.contains(&ds.labels().label(i))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remove = vec![false; n];
    for pick in sample(&mut rng, rows.len(), best) {
        remove[rows[pick]] = true;
    }
    let keep: Vec<usize> = (0..n).filter(|&i| !remove[i]).collect();
    let out = ds.select_rows(&keep)?;
    let after = out.labels().class_counts();
    if let Some(&j) = majority.iter().find(|&&j| after[j] == 0) {
        return Err(Error::InfeasibleShift(format!("undersampling would empty class {j}")));
    }
    Ok(out)
}

/// Relabels `round(eps * |majority instances|)` randomly chosen majority
/// instances into uniformly drawn minority classes.
pub fn shift_concept(ds: &LabeledDataset, eps: f64, seed: u64) -> Result<LabeledDataset> {
    check_eps(eps)?;
    let (majority, minority) = majority_split_counts(&ds.labels().class_counts());
    if minority.is_empty() {
        return Err(Error::NoMinorityClass);
    }
    let rows: Vec<usize> = (0..ds.n()).filter(|&i| majority.contains(&ds.labels().label(i))).collect();
    let count = (eps * rows.len() as f64).round_ties_even() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = sample(&mut rng, rows.len(), count).into_iter().map(|p| rows[p]).collect();
    picked.sort_unstable();
    let mut labels = ds.labels().labels().to_vec();
    for i in picked {
        labels[i] = minority[rng.random_range(0..minority.len())];
    }
    ds.with_labels(labels)
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Deletes the fraction `eps` of class-`m` instances that score lowest on
/// the feature most correlated with membership in class `m`, where `m` is
/// the smallest majority class. `_seed` is unused: the operation is
/// deterministic.
pub fn shift_covariate(ds: &LabeledDataset, eps: f64, _seed: u64) -> Result<LabeledDataset> {
    check_eps(eps)?;
    let features = ds.features().ok_or(Error::MissingFeatures)?;
    let (majority, _) = majority_split_counts(&ds.labels().class_counts());
    let m = *majority.last().expect("majority is never empty");
    let indicator: Vec<f64> = ds.labels().labels().iter().map(|&l| if l == m { 1.0 } else { 0.0 }).collect();
    let mut best: Option<(usize, f64)> = None;
    for c in 0..features.k() {
        let column: Vec<f64> = (0..features.n()).map(|i| features.get(i, c)).collect();
        if let Some(r) = pearson(&column, &indicator) {
            if r != 0.0 && best.is_none_or(|(_, b)| r.abs() > b.abs()) {
                best = Some((c, r));
            }
        }
    }
    let (col, r) = best.ok_or(Error::DegenerateFeature)?;
    let sign = if r < 0.0 { -1.0 } else { 1.0 };
    let mut members: Vec<usize> = (0..ds.n()).filter(|&i| ds.labels().label(i) == m).collect();
    let count = (eps * members.len() as f64).round_ties_even() as usize;
    if count >= members.len() {
        return Err(Error::InfeasibleShift(format!("covariate shift would empty class {m}")));
    }
    members.sort_by(|&a, &b| (sign * features.get(a, col)).total_cmp(&(sign * features.get(b, col))).then(a.cmp(&b)));
    let mut remove = vec![false; ds.n()];
    for &i in &members[..count] {
        remove[i] = true;
    }
    let keep: Vec<usize> = (0..ds.n()).filter(|&i| !remove[i]).collect();
    ds.select_rows(&keep)
}

/// Prior, concept and covariate shift in sequence, each with its own sub-seed.
pub fn shift_combined(ds: &LabeledDataset, eps: f64, seed: u64) -> Result<LabeledDataset> {
    if ds.features().is_none() {
        return Err(Error::MissingFeatures);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds = [rng.next_u64(), rng.next_u64(), rng.next_u64()];
    let a = shift_prior(ds, eps, seeds[0])?;
    let b = shift_concept(&a, eps, seeds[1])?;
    shift_covariate(&b, eps, seeds[2])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftMethod {
    Prior,
    Concept,
    Covariate,
    Combined,
}

impl ShiftMethod {
    pub const ALL: [ShiftMethod; 4] = [ShiftMethod::Prior, ShiftMethod::Concept, ShiftMethod::Covariate, ShiftMethod::Combined];

    pub fn name(self) -> &'static str {
        match self {
            ShiftMethod::Prior => "prior",
            ShiftMethod::Concept => "concept",
            ShiftMethod::Covariate => "covariate",
            ShiftMethod::Combined => "combined",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::InvalidOptions(format!("unknown shift method '{name}'")))
    }

    pub fn needs_features(self) -> bool {
        matches!(self, ShiftMethod::Covariate | ShiftMethod::Combined)
    }

    pub fn apply(self, ds: &LabeledDataset, eps: f64, seed: u64) -> Result<LabeledDataset> {
        match self {
            ShiftMethod::Prior => shift_prior(ds, eps, seed),
            ShiftMethod::Concept => shift_concept(ds, eps, seed),
            ShiftMethod::Covariate => shift_covariate(ds, eps, seed),
            ShiftMethod::Combined => shift_combined(ds, eps, seed),
        }
    }
}

/// A shift request as read from JSON, e.g.
/// `{"method":"combined","epsilon":0.3,"seed":42}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftSpec {
    pub method: ShiftMethod,
    pub epsilon: f64,
    pub seed: u64,
}

impl ShiftSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = EPSILON_RANGE;
        if !(lo..=hi).contains(&self.epsilon) {
            return Err(Error::InvalidOptions(format!("epsilon {} outside [{lo}, {hi}]", self.epsilon)));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn apply(&self, ds: &LabeledDataset) -> Result<LabeledDataset> {
        self.validate()?;
        self.method.apply(ds, self.epsilon, self.seed)
    }
}

/// A validated class-distribution perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionPerturbation {
    delta: f64,
}

impl DistributionPerturbation {
    pub fn new(delta: f64) -> Result<Self> {
        if !ALLOWED_DELTAS.contains(&delta) {
            return Err(Error::InvalidOptions(format!("delta {delta} is not one of {ALLOWED_DELTAS:?}")));
        }
        Ok(Self { delta })
    }

    pub fn delta(self) -> f64 {
        self.delta
    }
}

/// Adds `delta` to each majority class and spreads the compensation evenly
/// over the minority classes. Out-of-range results are skipped, not clipped.
pub fn perturb_distribution(pi: &ClassDistribution, delta: f64, majority: &[usize]) -> Result<ClassDistribution> {
    let delta = DistributionPerturbation::new(delta)?.delta();
    let k = pi.k();
    if delta == 0.0 {
        return Ok(pi.clone());
    }
    let m = majority.len();
    if m == 0 || m >= k {
        return Err(Error::SkipTask("no minority class to compensate the perturbation".into()));
    }
    let delta_minor = delta * m as f64 / (k - m) as f64;
    let out: Vec<f64> = (0..k)
        .map(|j| if majority.contains(&j) { pi.get(j) + delta } else { pi.get(j) - delta_minor })
        .collect();
    if let Some(v) = out.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::SkipTask(format!("perturbed proportion {v} leaves [0, 1]")));
    }
    ClassDistribution::new(out).map_err(|e| Error::SkipTask(e.to_string()))
}

/// Uniformly subsamples down to `cap` rows; smaller datasets are returned as is.
pub fn subsample(ds: &LabeledDataset, cap: usize, seed: u64) -> Result<LabeledDataset> {
    if ds.n() <= cap {
        return Ok(ds.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = sample(&mut rng, ds.n(), cap).into_vec();
    keep.sort_unstable();
    ds.select_rows(&keep)
}
