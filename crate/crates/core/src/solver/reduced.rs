//! Newton step for the row-separable KKT system
//!
//! ```text
//! H_i da_i + dtheta_i 1 + dlambda = -r_i      (per row, free entries only)
//! 1' da_i                        = s_i
//! sum_i da_i                     = t
//! ```
//!
//! Eliminating `da` and `dtheta` row by row leaves a `k x k` system in
//! `dlambda` whose null space contains the gauge direction `1`; a
//! pseudo-inverse solve picks the step orthogonal to it.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::types::Matrix;

/// Per-row curvature restricted to the free entries.
pub(crate) enum Curvature {
    /// `n x k` diagonal entries.
    Diagonal(Matrix),
    /// Row-major `k x k` block per row, `n * k * k` values.
    Dense(Vec<f64>),
}

pub(crate) struct Step {
    pub da: Matrix,
    pub dtheta: Vec<f64>,
    pub dlambda: Vec<f64>,
}

/// Inverse of the free sub-block of one row, padded with zeros.
enum RowInverse {
    Diagonal(Vec<f64>),
    Dense(DMatrix<f64>),
}

impl RowInverse {
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        match self {
            RowInverse::Diagonal(d) => {
                for j in 0..v.len() {
                    out[j] = d[j] * v[j];
                }
            }
            RowInverse::Dense(m) => {
                let k = v.len();
                for r in 0..k {
                    out[r] = (0..k).map(|c| m[(r, c)] * v[c]).sum();
                }
            }
        }
    }

    fn add_to(&self, scale: f64, s: &mut DMatrix<f64>) {
        match self {
            RowInverse::Diagonal(d) => {
                for j in 0..d.len() {
                    s[(j, j)] += scale * d[j];
                }
            }
            RowInverse::Dense(m) => *s += m * scale,
        }
    }
}

fn row_inverse(curv: &Curvature, i: usize, k: usize, free: Option<&[bool]>) -> Result<RowInverse> {
    let is_free = |j: usize| super::is_free(free, i * k + j);
    match curv {
        Curvature::Diagonal(h) => {
            let mut inv = vec![0.0; k];
            for (j, v) in inv.iter_mut().enumerate() {
                if is_free(j) {
                    let hj = h.get(i, j);
                    if !(hj > 0.0 && hj.is_finite()) {
                        return Err(Error::Domain(format!("non-positive curvature {hj} at ({i}, {j})")));
                    }
                    *v = 1.0 / hj;
                }
            }
            Ok(RowInverse::Diagonal(inv))
        }
        Curvature::Dense(blocks) => {
            let idx: Vec<usize> = (0..k).filter(|&j| is_free(j)).collect();
            let m = idx.len();
            let block = &blocks[i * k * k..(i + 1) * k * k];
            let sub = DMatrix::from_fn(m, m, |r, c| block[idx[r] * k + idx[c]]);
            let chol = sub
                .cholesky()
                .ok_or_else(|| Error::Domain(format!("curvature of row {i} is not positive definite")))?;
            let inv = chol.inverse();
            let mut full = DMatrix::zeros(k, k);
            for r in 0..m {
                for c in 0..m {
                    full[(idx[r], idx[c])] = inv[(r, c)];
                }
            }
            Ok(RowInverse::Dense(full))
        }
    }
}

/// Solves the reduced KKT system. `r` is the stationarity residual, `s` the
/// wanted change of each row sum and `t` the wanted change of each column sum.
pub(crate) fn solve_step(curv: &Curvature, r: &Matrix, s: &[f64], t: &[f64], free: Option<&[bool]>) -> Result<Step> {
    let (n, k) = (r.n(), r.k());
    let mut schur = DMatrix::<f64>::zeros(k, k);
    let mut rhs = DVector::<f64>::from_iterator(k, t.iter().map(|v| -v));
    let mut u = vec![0.0; k];
    let mut w = vec![0.0; k];
    let mut ones = vec![0.0; k];
    let keep = matches!(curv, Curvature::Diagonal(_));
    let mut cached = Vec::with_capacity(if keep { n } else { 0 });
    let mut sigma = vec![0.0; n];

    for i in 0..n {
        let inv = row_inverse(curv, i, k, free)?;
        for (j, o) in ones.iter_mut().enumerate() {
            *o = if super::is_free(free, i * k + j) { 1.0 } else { 0.0 };
        }
        inv.apply(&ones, &mut u);
        inv.apply(r.row(i), &mut w);
        let sig: f64 = u.iter().sum();
        if !(sig > 0.0) {
            return Err(Error::Domain(format!("row {i} has no free entries")));
        }
        sigma[i] = sig;
        inv.add_to(1.0, &mut schur);
        let ur: f64 = u.iter().zip(r.row(i)).map(|(a, b)| a * b).sum();
        let coef = (s[i] + ur) / sig;
        for a in 0..k {
            rhs[a] += -w[a] + u[a] * coef;
            for b in 0..k {
                schur[(a, b)] -= u[a] * u[b] / sig;
            }
        }
        if keep {
            cached.push(inv);
        }
    }

    let scale = schur.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // a single free column leaves no coupling at all, and no column step
    let dlambda: Vec<f64> = if scale > 0.0 {
        let svd = schur.svd(true, true);
        let dl = svd
            .solve(&rhs, 1e-13 * scale)
            .map_err(|e| Error::Domain(format!("reduced system solve failed: {e}")))?;
        dl.iter().copied().collect()
    } else {
        vec![0.0; k]
    };

    let mut da = Matrix::zeros(n, k);
    let mut dtheta = vec![0.0; n];
    let mut tmp = vec![0.0; k];
    for i in 0..n {
        let owned;
        let inv = if keep {
            &cached[i]
        } else {
            owned = row_inverse(curv, i, k, free)?;
            &owned
        };
        for (j, o) in ones.iter_mut().enumerate() {
            *o = if super::is_free(free, i * k + j) { 1.0 } else { 0.0 };
        }
        inv.apply(&ones, &mut u);
        let ur: f64 = u.iter().zip(r.row(i)).map(|(a, b)| a * b).sum();
        let ul: f64 = u.iter().zip(&dlambda).map(|(a, b)| a * b).sum();
        let dt = -(s[i] + ur + ul) / sigma[i];
        dtheta[i] = dt;
        for j in 0..k {
            tmp[j] = if ones[j] > 0.0 { r.get(i, j) + dt + dlambda[j] } else { 0.0 };
        }
        let out = da.row_mut(i);
        inv.apply(&tmp, out);
        out.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(Step { da, dtheta, dlambda })
}
