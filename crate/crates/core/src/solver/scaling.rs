use crate::error::{Error, Result};
use crate::types::Matrix;

pub(crate) struct ScalingResult {
    pub a: Matrix,
    /// Class weights, normalized to a maximum of one.
    pub weights: Vec<f64>,
    /// Per-row renormalizers `z_i = sum_j w_j p_ij`.
    pub normalizers: Vec<f64>,
    pub sweeps: usize,
}

/// Alternating row/column scaling of a strictly positive matrix.
///
/// Each sweep renormalizes every row of `w_j p_ij` and then rescales the
/// class weights so the column means move to `pi`. Stops as soon as the
/// column residual of the row-normalized matrix is at most `tol`.
pub(crate) fn alternating_scaling(p: &Matrix, pi: &[f64], tol: f64, max_sweeps: usize) -> Result<ScalingResult> {
    let (n, k) = (p.n(), p.k());
    let nf = n as f64;
    let mut w = vec![1.0; k];
    let mut z = vec![0.0; n];
    let mut means = vec![0.0; k];
    let mut sweeps = 0;
    loop {
        means.iter_mut().for_each(|m| *m = 0.0);
        for (i, row) in p.rows().enumerate() {
            let zi: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum();
            z[i] = zi;
            for j in 0..k {
                means[j] += w[j] * row[j] / zi;
            }
        }
        means.iter_mut().for_each(|m| *m /= nf);
        let residual = means.iter().zip(pi).map(|(m, t)| (m - t).abs()).fold(0.0, f64::max);
        if residual <= tol {
            break;
        }
        if sweeps >= max_sweeps {
            return Err(Error::NonConvergence { iterations: sweeps, residual });
        }
        sweeps += 1;
        for j in 0..k {
            w[j] *= pi[j] / means[j];
        }
        let top = w.iter().cloned().fold(0.0, f64::max);
        w.iter_mut().for_each(|v| *v /= top);
    }
    let mut a = Matrix::zeros(n, k);
    for i in 0..n {
        let (src, zi) = (p.row(i), z[i]);
        for (j, out) in a.row_mut(i).iter_mut().enumerate() {
            *out = w[j] * src[j] / zi;
        }
    }
    Ok(ScalingResult { a, weights: w, normalizers: z, sweeps })
}
