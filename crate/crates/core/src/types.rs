//! Domain types shared by every module: prediction matrices, class
//! distributions, label matrices and adjustment reports.
//!
//! All types are immutable after construction. Constructors enforce the
//! invariants, so downstream code can rely on row-stochastic predictions and
//! normalized distributions without re-checking.

use serde::ser::{Serialize, SerializeSeq, Serializer};

use crate::error::{Error, Result};

/// Maximum deviation of a prediction row sum from 1.
pub const ROW_SUM_TOL: f64 = 1e-9;
/// Maximum deviation of a class distribution sum from 1.
pub const DIST_SUM_TOL: f64 = 1e-12;
/// Rows within this distance of the simplex are renormalized on load.
pub const RENORMALIZE_TOL: f64 = 1e-6;
/// Entries this far outside `[0, 1]` are snapped back in.
const ENTRY_SNAP_TOL: f64 = 1e-12;
pub const MAX_CLASSES: usize = 64;
pub const MAX_INSTANCES: usize = 1_000_000;

/// Dense row-major `n x k` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    k: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(n: usize, k: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * k {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {n}x{k} matrix, got {}",
                n * k,
                data.len()
            )));
        }
        Ok(Self { n, k, data })
    }

    pub fn zeros(n: usize, k: usize) -> Self {
        Self { n, k, data: vec![0.0; n * k] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * k);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != k {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} columns, expected {k}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { n, k, data })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let k = self.k;
        &mut self.data[i * k..(i + 1) * k]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.k + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.k + j] = v;
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.k.max(1)).take(self.n)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.k];
        for row in self.rows() {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }

    pub fn column_means(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.column_sums().into_iter().map(|s| s / n).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows().map(|r| r.iter().sum()).collect()
    }

    /// Largest absolute elementwise difference; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        if self.n != other.n || self.k != other.k {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Copy of the rows selected by `keep`, in the given order.
    pub fn select_rows(&self, keep: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(keep.len() * self.k);
        for &i in keep {
            data.extend_from_slice(self.row(i));
        }
        Matrix { n: keep.len(), k: self.k, data }
    }
}

impl AsRef<Matrix> for Matrix {
    fn as_ref(&self) -> &Matrix {
        self
    }
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.n))?;
        for row in self.rows() {
            seq.serialize_element(row)?;
        }
        seq.end()
    }
}

fn check_shape(n: usize, k: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    if k < 2 {
        return Err(Error::DimensionMismatch(format!("need at least 2 classes, got {k}")));
    }
    if k > MAX_CLASSES {
        return Err(Error::SizeLimit(format!("{k} classes exceeds the limit of {MAX_CLASSES}")));
    }
    if n > MAX_INSTANCES {
        return Err(Error::SizeLimit(format!("{n} instances exceeds the limit of {MAX_INSTANCES}")));
    }
    Ok(())
}

fn check_row_sums(m: &Matrix, tol: f64) -> Result<()> {
    for (i, row) in m.rows().enumerate() {
        let s: f64 = row.iter().sum();
        if !s.is_finite() || (s - 1.0).abs() > tol {
            return Err(Error::InvalidSimplex(format!("row {i} sums to {s}")));
        }
    }
    Ok(())
}

/// Row-stochastic prediction matrix with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    inner: Matrix,
}

impl PredictionMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        check_shape(m.n(), m.k())?;
        let mut m = m;
        snap_entries(&mut m)?;
        check_row_sums(&m, ROW_SUM_TOL)?;
        Ok(Self { inner: m })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    /// Ingestion path: rows within [`RENORMALIZE_TOL`] of summing to one are
    /// divided by their sum, anything further off is rejected.
    pub fn renormalized(m: Matrix) -> Result<Self> {
        check_shape(m.n(), m.k())?;
        let mut m = m;
        snap_entries(&mut m)?;
        for i in 0..m.n() {
            let row = m.row_mut(i);
            let s: f64 = row.iter().sum();
            if !s.is_finite() || (s - 1.0).abs() > RENORMALIZE_TOL {
                return Err(Error::InvalidSimplex(format!("row {i} sums to {s}")));
            }
            row.iter_mut().for_each(|v| *v /= s);
        }
        Self::new(m)
    }

    pub fn n(&self) -> usize {
        self.inner.n()
    }

    pub fn k(&self) -> usize {
        self.inner.k()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.inner.row(i)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.inner
    }

    pub fn into_matrix(self) -> Matrix {
        self.inner
    }

    pub fn column_means(&self) -> Vec<f64> {
        self.inner.column_means()
    }

    /// True when some entry is exactly 0 or 1. Such matrices load fine but
    /// have no finite log-loss geometry.
    pub fn has_extreme_entries(&self) -> bool {
        self.inner.as_slice().iter().any(|&v| v <= 0.0 || v >= 1.0)
    }

    pub fn first_extreme_entry(&self) -> Option<(usize, usize)> {
        let k = self.k();
        self.inner
            .as_slice()
            .iter()
            .position(|&v| v <= 0.0 || v >= 1.0)
            .map(|idx| (idx / k, idx % k))
    }
}

impl AsRef<Matrix> for PredictionMatrix {
    fn as_ref(&self) -> &Matrix {
        &self.inner
    }
}

fn snap_entries(m: &mut Matrix) -> Result<()> {
    let k = m.k();
    for (idx, v) in m.as_mut_slice().iter_mut().enumerate() {
        if !v.is_finite() || *v < -ENTRY_SNAP_TOL || *v > 1.0 + ENTRY_SNAP_TOL {
            return Err(Error::InvalidSimplex(format!(
                "entry ({}, {}) = {v} lies outside [0, 1]",
                idx / k,
                idx % k
            )));
        }
        *v = v.clamp(0.0, 1.0);
    }
    Ok(())
}

/// Row-stochastic matrix whose entries may leave `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnboundedPredictionMatrix {
    inner: Matrix,
}

impl UnboundedPredictionMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        check_shape(m.n(), m.k())?;
        if m.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSimplex("non-finite entry".into()));
        }
        check_row_sums(&m, ROW_SUM_TOL)?;
        Ok(Self { inner: m })
    }

    pub fn n(&self) -> usize {
        self.inner.n()
    }

    pub fn k(&self) -> usize {
        self.inner.k()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.inner
    }

    pub fn into_matrix(self) -> Matrix {
        self.inner
    }

    pub fn is_bounded(&self) -> bool {
        self.inner.as_slice().iter().all(|&v| (0.0..=1.0).contains(&v))
    }

    /// Converts to the bounded type when every entry lies in `[0, 1]`.
    pub fn into_bounded(self) -> Result<PredictionMatrix> {
        PredictionMatrix::new(self.inner)
    }
}

impl AsRef<Matrix> for UnboundedPredictionMatrix {
    fn as_ref(&self) -> &Matrix {
        &self.inner
    }
}

impl From<PredictionMatrix> for UnboundedPredictionMatrix {
    fn from(p: PredictionMatrix) -> Self {
        Self { inner: p.inner }
    }
}

/// Probability vector over `k` classes.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
#[serde(transparent)]
pub struct ClassDistribution {
    proportions: Vec<f64>,
}

impl ClassDistribution {
    pub fn new(proportions: Vec<f64>) -> Result<Self> {
        if proportions.len() < 2 {
            return Err(Error::DimensionMismatch(format!(
                "need at least 2 classes, got {}",
                proportions.len()
            )));
        }
        if proportions.len() > MAX_CLASSES {
            return Err(Error::SizeLimit(format!("{} classes", proportions.len())));
        }
        if let Some(bad) = proportions.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidSimplex(format!("proportion {bad} outside [0, 1]")));
        }
        let s: f64 = proportions.iter().sum();
        if (s - 1.0).abs() > DIST_SUM_TOL {
            return Err(Error::InvalidSimplex(format!("proportions sum to {s}")));
        }
        Ok(Self { proportions })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        Self::new(vec![1.0 / k as f64; k])
    }

    pub fn k(&self) -> usize {
        self.proportions.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.proportions
    }

    pub fn get(&self, j: usize) -> f64 {
        self.proportions[j]
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.proportions.iter().all(|&v| v > 0.0)
    }

    /// Squared Euclidean distance to another distribution.
    pub fn squared_distance(&self, other: &ClassDistribution) -> f64 {
        self.proportions
            .iter()
            .zip(&other.proportions)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// One-hot label matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    labels: Vec<usize>,
    one_hot: Matrix,
}

impl LabelMatrix {
    pub fn from_labels(labels: Vec<usize>, k: usize) -> Result<Self> {
        check_shape(labels.len(), k)?;
        let mut one_hot = Matrix::zeros(labels.len(), k);
        for (i, &l) in labels.iter().enumerate() {
            if l >= k {
                return Err(Error::InvalidLabels(format!("label {l} at row {i} is not below k = {k}")));
            }
            one_hot.set(i, l, 1.0);
        }
        Ok(Self { labels, one_hot })
    }

    /// Accepts a 0/1 matrix with exactly one 1 per row.
    pub fn from_one_hot(m: &Matrix) -> Result<Self> {
        let mut labels = Vec::with_capacity(m.n());
        for (i, row) in m.rows().enumerate() {
            let mut hot = None;
            for (j, &v) in row.iter().enumerate() {
                if v == 1.0 {
                    if hot.is_some() {
                        return Err(Error::InvalidLabels(format!("row {i} has several ones")));
                    }
                    hot = Some(j);
                } else if v != 0.0 {
                    return Err(Error::InvalidLabels(format!("row {i} contains {v}")));
                }
            }
            labels.push(hot.ok_or_else(|| Error::InvalidLabels(format!("row {i} has no one")))?);
        }
        Self::from_labels(labels, m.k())
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.one_hot.k()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn matrix(&self) -> &Matrix {
        &self.one_hot
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.k()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Reads the labels as a prediction matrix (every row a simplex corner).
    pub fn as_predictions(&self) -> PredictionMatrix {
        PredictionMatrix { inner: self.one_hot.clone() }
    }
}

impl AsRef<Matrix> for LabelMatrix {
    fn as_ref(&self) -> &Matrix {
        &self.one_hot
    }
}

/// Lagrange/KKT multipliers reported by the solvers.
///
/// Convention: `grad_a d(p_i, a_i)_j = psi_ij - theta_i - lambda_j`, with the
/// gauge fixed by `sum_j lambda_j = 0`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Duals {
    pub theta: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Multipliers of `a >= 0`; absent for unbounded solves.
    pub psi: Option<Matrix>,
}

impl Duals {
    pub fn zeros(n: usize, k: usize, bounded: bool) -> Self {
        Self {
            theta: vec![0.0; n],
            lambda: vec![0.0; k],
            psi: bounded.then(|| Matrix::zeros(n, k)),
        }
    }

    /// Moves the gauge so that the class multipliers sum to zero.
    pub fn fix_gauge(&mut self) {
        if self.lambda.is_empty() {
            return;
        }
        let c = self.lambda.iter().sum::<f64>() / self.lambda.len() as f64;
        self.lambda.iter_mut().for_each(|l| *l -= c);
        self.theta.iter_mut().for_each(|t| *t += c);
    }
}

/// Output matrix of an adjuster.
#[derive(Debug, Clone, PartialEq)]
pub enum Adjusted {
    Bounded(PredictionMatrix),
    Unbounded(UnboundedPredictionMatrix),
}

impl Adjusted {
    pub fn matrix(&self) -> &Matrix {
        match self {
            Adjusted::Bounded(p) => p.matrix(),
            Adjusted::Unbounded(u) => u.matrix(),
        }
    }

    pub fn bounded(&self) -> Option<&PredictionMatrix> {
        match self {
            Adjusted::Bounded(p) => Some(p),
            Adjusted::Unbounded(_) => None,
        }
    }
}

impl AsRef<Matrix> for Adjusted {
    fn as_ref(&self) -> &Matrix {
        self.matrix()
    }
}

/// Adjusted matrix plus solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustmentReport {
    pub adjusted: Adjusted,
    /// `(1/n) sum_i d(p_i, a_i)`; absent for adjusters without a divergence.
    pub objective: Option<f64>,
    pub row_residual: f64,
    pub column_residual: f64,
    pub stationarity_residual: f64,
    pub duals: Option<Duals>,
    pub iterations: usize,
}

impl AdjustmentReport {
    pub fn matrix(&self) -> &Matrix {
        self.adjusted.matrix()
    }
}

/// Row and column constraint residuals of `a` with respect to `Q_pi`.
pub fn constraint_residuals(a: &Matrix, pi: &[f64]) -> (f64, f64) {
    let row = a.rows().map(|r| (r.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max);
    let col = a
        .column_means()
        .iter()
        .zip(pi)
        .map(|(m, t)| (m - t).abs())
        .fold(0.0, f64::max);
    (row, col)
}

/// Checks that `p` and `pi` are individually valid and agree on `k`.
pub fn validate_inputs(p: &PredictionMatrix, pi: &ClassDistribution) -> Result<()> {
    check_shape(p.n(), p.k())?;
    check_row_sums(p.matrix(), ROW_SUM_TOL)?;
    if p.k() != pi.k() {
        return Err(Error::DimensionMismatch(format!(
            "predictions have {} classes, distribution has {}",
            p.k(),
            pi.k()
        )));
    }
    Ok(())
}

/// True iff every column mean of `p` is within `tol` of `pi`.
pub fn is_adjusted(p: &impl AsRef<Matrix>, pi: &ClassDistribution, tol: f64) -> bool {
    let p = p.as_ref();
    p.k() == pi.k() && constraint_residuals(p, pi.as_slice()).1 <= tol
}

/// Class proportions of a label matrix.
pub fn empirical_distribution(y: &LabelMatrix) -> ClassDistribution {
    let n = y.n() as f64;
    let proportions: Vec<f64> = y.class_counts().into_iter().map(|c| c as f64 / n).collect();
    // Counts over n always form a simplex up to rounding; skip the strict check.
    ClassDistribution { proportions }
}

/// Column means of a prediction matrix as a distribution.
pub fn column_distribution(p: &PredictionMatrix) -> ClassDistribution {
    let means = p.column_means();
    let s: f64 = means.iter().sum();
    ClassDistribution { proportions: means.into_iter().map(|m| (m / s).clamp(0.0, 1.0)).collect() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm(rows: &[Vec<f64>]) -> PredictionMatrix {
        PredictionMatrix::from_rows(rows).unwrap()
    }

    fn cd(v: &[f64]) -> ClassDistribution {
        ClassDistribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn validate_accepts_symmetric_input() {
        assert!(validate_inputs(&pm(&[vec![0.5, 0.5]]), &cd(&[0.5, 0.5])).is_ok());
    }

    #[test]
    fn validate_rejects_class_count_mismatch() {
        let err = validate_inputs(&pm(&[vec![0.5, 0.5]]), &cd(&[0.3, 0.3, 0.4])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn rows_summing_past_one_are_invalid() {
        let err = PredictionMatrix::from_rows(&[vec![0.7, 0.7]]).unwrap_err();
        assert!(matches!(err, Error::InvalidSimplex(_)));
    }

    #[test]
    fn empty_matrix_rejected() {
        let err = PredictionMatrix::new(Matrix::zeros(0, 2)).unwrap_err();
        assert_eq!(err, Error::EmptyMatrix);
    }

    #[test]
    fn renormalization_only_near_simplex() {
        let m = Matrix::from_rows(&[vec![0.3333333, 0.6666666]]).unwrap();
        let p = PredictionMatrix::renormalized(m).unwrap();
        assert!((p.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let far = Matrix::from_rows(&[vec![0.3, 0.6]]).unwrap();
        assert!(PredictionMatrix::renormalized(far).is_err());
    }

    #[test]
    fn distribution_sum_tolerance() {
        assert!(ClassDistribution::new(vec![0.5, 0.5 + 1e-13]).is_ok());
        assert!(ClassDistribution::new(vec![0.5, 0.5 + 1e-10]).is_err());
        assert!(ClassDistribution::new(vec![1.2, -0.2]).is_err());
    }

    #[test]
    fn adjusted_predicate() {
        let half = cd(&[0.5, 0.5]);
        assert!(is_adjusted(&pm(&[vec![0.9, 0.1], vec![0.1, 0.9]]), &half, 1e-9));
        assert!(!is_adjusted(&pm(&[vec![0.9, 0.1], vec![0.6, 0.4]]), &half, 1e-9));
    }

    #[test]
    fn labels_are_adjusted_to_their_own_distribution() {
        let y = LabelMatrix::from_labels(vec![0, 2, 1, 0, 0], 3).unwrap();
        let pi = empirical_distribution(&y);
        assert!(is_adjusted(&y.as_predictions(), &pi, 1e-12));
    }

    #[test]
    fn empirical_distribution_examples() {
        let y = LabelMatrix::from_labels(vec![0, 1], 2).unwrap();
        assert_eq!(empirical_distribution(&y).as_slice(), &[0.5, 0.5]);
        let y = LabelMatrix::from_labels(vec![0, 0, 0, 1], 2).unwrap();
        assert_eq!(empirical_distribution(&y).as_slice(), &[0.75, 0.25]);
        let y = LabelMatrix::from_labels(vec![1], 2).unwrap();
        assert_eq!(empirical_distribution(&y).as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn one_hot_parsing() {
        let m = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(LabelMatrix::from_one_hot(&m).unwrap().labels(), &[0, 1]);
        let bad = Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        assert!(LabelMatrix::from_one_hot(&bad).is_err());
    }

    #[test]
    fn extreme_entries_are_flagged() {
        let p = pm(&[vec![1.0, 0.0], vec![0.4, 0.6]]);
        assert!(p.has_extreme_entries());
        assert_eq!(p.first_extreme_entry(), Some((0, 0)));
        assert!(!pm(&[vec![0.4, 0.6]]).has_extreme_entries());
    }

    #[test]
    fn gauge_fix_preserves_sums() {
        let mut d = Duals { theta: vec![1.0, 2.0], lambda: vec![3.0, 5.0], psi: None };
        let before: Vec<f64> = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| d.theta[i] + d.lambda[j]).collect();
        d.fix_gauge();
        let after: Vec<f64> = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| d.theta[i] + d.lambda[j]).collect();
        assert!(d.lambda.iter().sum::<f64>().abs() < 1e-15);
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn stochastic(n: usize, k: usize) -> impl Strategy<Value = PredictionMatrix> {
            proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, k), n).prop_map(|rows| {
                let rows: Vec<Vec<f64>> = rows
                    .into_iter()
                    .map(|r| {
                        let s: f64 = r.iter().sum();
                        r.into_iter().map(|v| v / s).collect()
                    })
                    .collect();
                PredictionMatrix::from_rows(&rows).unwrap()
            })
        }

        proptest! {
            #[test]
            fn column_means_are_self_consistent(p in (1usize..20, 2usize..6).prop_flat_map(|(n, k)| stochastic(n, k))) {
                let pi = column_distribution(&p);
                prop_assert!(is_adjusted(&p, &pi, 1e-12));
                prop_assert!(validate_inputs(&p, &pi).is_ok());
                prop_assert!(validate_inputs(&p, &pi).is_ok());
            }

            #[test]
            fn empirical_distribution_is_valid(labels in proptest::collection::vec(0usize..5, 1..200)) {
                let y = LabelMatrix::from_labels(labels, 5).unwrap();
                let pi = empirical_distribution(&y);
                prop_assert!(ClassDistribution::new(pi.as_slice().to_vec()).is_ok());
            }
        }
    }
}
