use crate::error::{Error, Result};
use crate::types::{ClassDistribution, Matrix};

/// Euclidean projection of an arbitrary `n x k` matrix onto `Q_pi`.
///
/// The minimizer has the form `x_ij + u_i + v_j`; with `sum_j v_j = 0` the
/// row and column conditions decouple into closed forms.
pub fn project_affine_qpi(x: &Matrix, pi: &ClassDistribution) -> Result<Matrix> {
    if x.k() != pi.k() {
        return Err(Error::DimensionMismatch(format!("matrix has {} columns, pi has {}", x.k(), pi.k())));
    }
    if x.n() == 0 {
        return Err(Error::EmptyMatrix);
    }
    Ok(project_affine_raw(x, pi.as_slice()))
}

pub(crate) fn project_affine_raw(x: &Matrix, pi: &[f64]) -> Matrix {
    let mut out = x.clone();
    project_affine_in_place(&mut out, pi);
    out
}

pub(crate) fn project_affine_in_place(x: &mut Matrix, pi: &[f64]) {
    let (n, k) = (x.n(), x.k());
    let nf = n as f64;
    let kf = k as f64;
    let row_shift: Vec<f64> = x.rows().map(|r| (1.0 - r.iter().sum::<f64>()) / kf).collect();
    let total_row_shift: f64 = row_shift.iter().sum();
    let col_sums = x.column_sums();
    let col_shift: Vec<f64> =
        (0..k).map(|j| (nf * pi[j] - col_sums[j] - total_row_shift) / nf).collect();
    for i in 0..n {
        let u = row_shift[i];
        for (v, c) in x.row_mut(i).iter_mut().zip(&col_shift) {
            *v += u + c;
        }
    }
}
