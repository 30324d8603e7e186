//! Bregman divergences and the proper losses they induce.
//!
//! A divergence is generated by a strictly convex `phi`:
//!
//! ```text
//! d(p, q) = phi(q) - phi(p) - <q - p, grad phi(p)>
//! ```
//!
//! The squared Euclidean distance (`phi = sum x^2`) gives the Brier score and
//! the generalized KL divergence (`phi = sum x ln x`) gives log-loss when the
//! second argument is a one-hot label.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::{LabelMatrix, Matrix};

/// Where `grad phi` exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    FullSpace,
    /// Strictly positive coordinates only.
    OpenSimplex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceKind {
    Brier,
    LogLoss,
    Custom,
}

type PhiFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

#[derive(Clone)]
enum Repr {
    Brier,
    LogLoss,
    Custom { phi: Arc<PhiFn>, grad: Arc<GradFn> },
}

/// A Bregman divergence. Cheap to clone and safe to share across threads.
#[derive(Clone)]
pub struct Divergence {
    name: Arc<str>,
    domain: Domain,
    repr: Repr,
}

impl fmt::Debug for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Divergence").field("name", &self.name).field("domain", &self.domain).finish()
    }
}

impl PartialEq for Divergence {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.kind() == other.kind()
    }
}

impl Divergence {
    /// Squared Euclidean distance; the Brier score.
    pub fn brier() -> Self {
        Self { name: "brier".into(), domain: Domain::FullSpace, repr: Repr::Brier }
    }

    /// Generalized KL divergence; log-loss.
    pub fn log_loss() -> Self {
        Self { name: "logloss".into(), domain: Domain::OpenSimplex, repr: Repr::LogLoss }
    }

    /// User-supplied generator. Both `phi` and its gradient are required;
    /// use [`Divergence::check_gradient`] to validate them.
    pub fn custom<P, G>(name: &str, domain: Domain, phi: P, grad: G) -> Self
    where
        P: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self { name: name.into(), domain, repr: Repr::Custom { phi: Arc::new(phi), grad: Arc::new(grad) } }
    }

    /// Built-in lookup by CLI identifier.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "brier" => Ok(Self::brier()),
            "logloss" => Ok(Self::log_loss()),
            other => Err(Error::InvalidOptions(format!("unknown divergence '{other}' (expected brier or logloss)"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn kind(&self) -> DivergenceKind {
        match self.repr {
            Repr::Brier => DivergenceKind::Brier,
            Repr::LogLoss => DivergenceKind::LogLoss,
            Repr::Custom { .. } => DivergenceKind::Custom,
        }
    }

    pub fn phi(&self, x: &[f64]) -> f64 {
        match &self.repr {
            Repr::Brier => x.iter().map(|v| v * v).sum(),
            Repr::LogLoss => x.iter().map(|&v| if v == 0.0 { 0.0 } else { v * v.ln() }).sum(),
            Repr::Custom { phi, .. } => phi(x),
        }
    }

    pub fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.repr {
            Repr::Brier => x.iter().zip(out.iter_mut()).for_each(|(v, o)| *o = 2.0 * v),
            Repr::LogLoss => x.iter().zip(out.iter_mut()).for_each(|(v, o)| *o = v.ln() + 1.0),
            Repr::Custom { grad, .. } => grad(x, out),
        }
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.grad_into(x, &mut out);
        out
    }

    /// Writes the diagonal of the Hessian when it is diagonal; returns false
    /// for generators with a dense Hessian.
    pub(crate) fn diagonal_hessian_into(&self, x: &[f64], out: &mut [f64]) -> bool {
        match &self.repr {
            Repr::Brier => {
                out.iter_mut().for_each(|o| *o = 2.0);
                true
            }
            Repr::LogLoss => {
                x.iter().zip(out.iter_mut()).for_each(|(v, o)| *o = 1.0 / v);
                true
            }
            Repr::Custom { .. } => false,
        }
    }

    /// Dense `k x k` Hessian (row-major). Custom generators use central
    /// differences of the supplied gradient.
    pub(crate) fn hessian_into(&self, x: &[f64], out: &mut [f64]) {
        let k = x.len();
        let mut diag = vec![0.0; k];
        if self.diagonal_hessian_into(x, &mut diag) {
            out.iter_mut().for_each(|o| *o = 0.0);
            for j in 0..k {
                out[j * k + j] = diag[j];
            }
            return;
        }
        let mut xp = x.to_vec();
        let mut gp = vec![0.0; k];
        let mut gm = vec![0.0; k];
        for j in 0..k {
            let mut h = 1e-6 * x[j].abs().max(1.0);
            if self.domain == Domain::OpenSimplex {
                h = h.min(0.5 * x[j]);
            }
            xp[j] = x[j] + h;
            self.grad_into(&xp, &mut gp);
            xp[j] = x[j] - h;
            self.grad_into(&xp, &mut gm);
            xp[j] = x[j];
            for r in 0..k {
                out[r * k + j] = (gp[r] - gm[r]) / (2.0 * h);
            }
        }
        for r in 0..k {
            for c in r + 1..k {
                let s = 0.5 * (out[r * k + c] + out[c * k + r]);
                out[r * k + c] = s;
                out[c * k + r] = s;
            }
        }
    }

    /// True when `grad phi` exists at `x`.
    pub fn in_domain(&self, x: &[f64]) -> bool {
        match self.domain {
            Domain::FullSpace => x.iter().all(|v| v.is_finite()),
            Domain::OpenSimplex => x.iter().all(|&v| v > 0.0 && v.is_finite()),
        }
    }

    fn in_closure(&self, x: &[f64]) -> bool {
        match self.domain {
            Domain::FullSpace => x.iter().all(|v| v.is_finite()),
            Domain::OpenSimplex => x.iter().all(|&v| v >= 0.0 && v.is_finite()),
        }
    }

    /// `d(p, q)`. `p` must lie where the gradient exists, `q` in the closure.
    pub fn value(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        if p.len() != q.len() {
            return Err(Error::DimensionMismatch(format!("{} vs {} coordinates", p.len(), q.len())));
        }
        if !self.in_domain(p) {
            return Err(Error::Domain(format!("{}: first argument {p:?} outside the open domain", self.name)));
        }
        if !self.in_closure(q) {
            return Err(Error::Domain(format!("{}: second argument {q:?} outside the domain", self.name)));
        }
        let v = match &self.repr {
            Repr::Brier => p.iter().zip(q).map(|(a, b)| (b - a) * (b - a)).sum(),
            Repr::LogLoss => {
                let mut s = 0.0;
                for (&pj, &qj) in p.iter().zip(q) {
                    if qj > 0.0 {
                        s += qj * (qj / pj).ln();
                    }
                    s += pj - qj;
                }
                s
            }
            Repr::Custom { .. } => {
                let g = self.grad(p);
                let inner: f64 = q.iter().zip(p).zip(&g).map(|((qj, pj), gj)| (qj - pj) * gj).sum();
                self.phi(q) - self.phi(p) - inner
            }
        };
        if !v.is_finite() {
            return Err(Error::Domain(format!("{}: divergence is not finite", self.name)));
        }
        Ok(v.max(0.0))
    }

    /// `grad_q d(p, q) = grad phi(q) - grad phi(p)`.
    pub fn gradient_q(&self, p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
        if p.len() != q.len() {
            return Err(Error::DimensionMismatch(format!("{} vs {} coordinates", p.len(), q.len())));
        }
        if !self.in_domain(p) || !self.in_domain(q) {
            return Err(Error::Domain(format!("{}: gradient needs both points in the open domain", self.name)));
        }
        let gq = self.grad(q);
        let gp = self.grad(p);
        Ok(gq.into_iter().zip(gp).map(|(a, b)| a - b).collect())
    }

    /// Compares the supplied gradient with central differences of `phi` at
    /// random interior points of dimension `k`.
    pub fn check_gradient(&self, k: usize, points: usize, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..points {
            let x: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..0.95)).collect();
            let g = self.grad(&x);
            let mut xp = x.clone();
            for j in 0..k {
                let h = 1e-6;
                xp[j] = x[j] + h;
                let fp = self.phi(&xp);
                xp[j] = x[j] - h;
                let fm = self.phi(&xp);
                xp[j] = x[j];
                let fd = (fp - fm) / (2.0 * h);
                if (fd - g[j]).abs() > 1e-5 * fd.abs().max(g[j].abs()).max(1.0) {
                    return Err(Error::InvalidOptions(format!(
                        "{}: gradient component {j} is {}, finite differences give {fd}",
                        self.name, g[j]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `d(p, q)` for a single pair of vectors.
pub fn divergence_value(d: &Divergence, p: &[f64], q: &[f64]) -> Result<f64> {
    d.value(p, q)
}

/// Gradient of `q -> d(p, q)`.
pub fn bregman_gradient_q(d: &Divergence, p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
    d.gradient_q(p, q)
}

/// `(1/n) sum_i d(p_i, q_i)` between two matrices of equal shape.
pub fn mean_divergence(d: &Divergence, p: &Matrix, q: &Matrix) -> Result<f64> {
    if p.n() != q.n() || p.k() != q.k() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            p.n(),
            p.k(),
            q.n(),
            q.k()
        )));
    }
    let mut total = 0.0;
    for (pr, qr) in p.rows().zip(q.rows()) {
        total += d.value(pr, qr)?;
    }
    Ok(total / p.n() as f64)
}

/// Mean loss of predictions against one-hot labels. Brier yields the
/// multi-class Brier score and log-loss the natural-log cross entropy.
pub fn mean_loss(d: &Divergence, p: &impl AsRef<Matrix>, y: &LabelMatrix) -> Result<f64> {
    mean_divergence(d, p.as_ref(), y.matrix())
}
