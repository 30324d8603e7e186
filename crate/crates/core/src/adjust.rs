//! The five adjusters. Every one except PPA returns predictions whose column
//! means equal the target distribution.

use std::fmt;

use crate::divergence::{Divergence, Domain};
use crate::error::{Error, Result};
use crate::solver::{
    alternating_scaling, dykstra_bga, finish_report, identity_report, interior_point_solve, newton_equality_solve,
    SolverOptions, ADJUSTED_SHORTCUT_TOL,
};
use crate::types::{
    constraint_residuals, is_adjusted, validate_inputs, Adjusted, AdjustmentReport, ClassDistribution, Duals, Matrix,
    PredictionMatrix,
};

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Ppa,
    Additive,
    Multiplicative,
    Uga(Divergence),
    Bga(Divergence),
}

impl Method {
    /// Builds a method from its CLI identifier. `uga` and `bga` need a divergence.
    pub fn from_name(name: &str, divergence: Option<Divergence>) -> Result<Self> {
        match name {
            "ppa" => Ok(Method::Ppa),
            "additive" => Ok(Method::Additive),
            "multiplicative" => Ok(Method::Multiplicative),
            "uga" => divergence.map(Method::Uga).ok_or(Error::MissingDivergence("uga")),
            "bga" => divergence.map(Method::Bga).ok_or(Error::MissingDivergence("bga")),
            other => Err(Error::InvalidOptions(format!("unknown adjuster '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Ppa => "ppa",
            Method::Additive => "additive",
            Method::Multiplicative => "multiplicative",
            Method::Uga(_) => "uga",
            Method::Bga(_) => "bga",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Uga(d) | Method::Bga(d) => write!(f, "{}({})", self.name(), d.name()),
            _ => f.write_str(self.name()),
        }
    }
}

/// An adjuster together with the solver settings it runs under.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjusterKind {
    pub method: Method,
    pub options: SolverOptions,
}

impl AdjusterKind {
    pub fn new(method: Method) -> Self {
        Self { method, options: SolverOptions::default() }
    }

    pub fn with_options(method: Method, options: SolverOptions) -> Self {
        Self { method, options }
    }
}

/// Prior probability adjustment: reweight each row by `pi_new / pi_old` and
/// renormalize. The result is generally not adjusted to `pi_new`.
pub fn ppa_adjust(p: &PredictionMatrix, pi_old: &ClassDistribution, pi_new: &ClassDistribution) -> Result<PredictionMatrix> {
    validate_inputs(p, pi_old)?;
    validate_inputs(p, pi_new)?;
    let (n, k) = (p.n(), p.k());
    let mut out = Matrix::zeros(n, k);
    for i in 0..n {
        let row = p.row(i);
        let dst = out.row_mut(i);
        for j in 0..k {
            if row[j] == 0.0 {
                continue;
            }
            if pi_old.get(j) == 0.0 {
                return Err(Error::ZeroPrior { class: j });
            }
            dst[j] = row[j] * pi_new.get(j) / pi_old.get(j);
        }
        let s: f64 = dst.iter().sum();
        if !(s > 0.0) {
            return Err(Error::InfeasibleTarget(format!("row {i} has no mass on any class with positive target")));
        }
        dst.iter_mut().for_each(|v| *v /= s);
    }
    PredictionMatrix::new(out)
}

/// Shifts every row by `eps_j = pi_j - mean_j(p)`. Exact, possibly leaving `[0, 1]`.
pub fn additive_adjust(p: &PredictionMatrix, pi: &ClassDistribution) -> Result<AdjustmentReport> {
    additive_with(p, pi, &SolverOptions::default())
}

fn additive_with(p: &PredictionMatrix, pi: &ClassDistribution, opts: &SolverOptions) -> Result<AdjustmentReport> {
    validate_inputs(p, pi)?;
    if is_adjusted(p, pi, ADJUSTED_SHORTCUT_TOL) {
        return Ok(identity_report(p, pi.as_slice(), false));
    }
    let means = p.column_means();
    let eps: Vec<f64> = pi.as_slice().iter().zip(&means).map(|(t, m)| t - m).collect();
    let mut a = p.matrix().clone();
    for i in 0..a.n() {
        for (v, e) in a.row_mut(i).iter_mut().zip(&eps) {
            *v += e;
        }
    }
    let duals = Duals { theta: vec![0.0; p.n()], lambda: eps.iter().map(|e| -2.0 * e).collect(), psi: None };
    finish_report(&Divergence::brier(), p, pi.as_slice(), a, duals, 0, false, opts)
}

/// `a_ij = w_j p_ij / z_i`, with weights found by alternating scaling.
pub fn multiplicative_adjust(p: &PredictionMatrix, pi: &ClassDistribution) -> Result<AdjustmentReport> {
    multiplicative_with(p, pi, &SolverOptions::default())
}

fn multiplicative_with(p: &PredictionMatrix, pi: &ClassDistribution, opts: &SolverOptions) -> Result<AdjustmentReport> {
    validate_inputs(p, pi)?;
    if let Some((row, col)) = p.first_extreme_entry() {
        return Err(Error::ZeroPrediction { row, col });
    }
    if !pi.is_strictly_positive() {
        return Err(Error::InfeasibleTarget("multiplicative adjustment needs every target proportion > 0".into()));
    }
    if is_adjusted(p, pi, ADJUSTED_SHORTCUT_TOL) {
        return Ok(identity_report(p, pi.as_slice(), true));
    }
    let out = alternating_scaling(p.matrix(), pi.as_slice(), opts.tolerance, opts.max_iterations)?;
    let duals = Duals {
        theta: out.normalizers.iter().map(|z| z.ln()).collect(),
        lambda: out.weights.iter().map(|w| -w.ln()).collect(),
        psi: Some(Matrix::zeros(p.n(), p.k())),
    };
    finish_report(&Divergence::log_loss(), p, pi.as_slice(), out.a, duals, out.sweeps, true, opts)
}

/// Unbounded general adjustment: the `d`-projection of `p` onto `Q_pi`.
///
/// A divergence that is only defined on the open simplex cannot leave the
/// positive orthant, so when the unconstrained path hits the boundary (or a
/// target proportion is zero) the bounded solve is returned instead.
pub fn uga_adjust(p: &PredictionMatrix, pi: &ClassDistribution, d: &Divergence) -> Result<AdjustmentReport> {
    uga_with(p, pi, d, &SolverOptions::default())
}

fn uga_with(p: &PredictionMatrix, pi: &ClassDistribution, d: &Divergence, opts: &SolverOptions) -> Result<AdjustmentReport> {
    validate_inputs(p, pi)?;
    let interior_only = d.domain() == Domain::OpenSimplex;
    let solved = if interior_only && !pi.is_strictly_positive() {
        Err(Error::Domain("target has a zero class".into()))
    } else {
        newton_equality_solve(d, p, pi, opts)
    };
    match solved {
        Err(Error::Domain(_)) if interior_only && d.in_domain(p.matrix().as_slice()) => {
            let mut rep = interior_point_solve(d, p, pi, opts)?;
            if let Adjusted::Bounded(m) = rep.adjusted {
                rep.adjusted = Adjusted::Unbounded(m.into());
            }
            Ok(rep)
        }
        other => other,
    }
}

/// Bounded general adjustment: the `d`-projection of `p` onto `Q_pi` with `a >= 0`.
pub fn bga_adjust(p: &PredictionMatrix, pi: &ClassDistribution, d: &Divergence) -> Result<AdjustmentReport> {
    bga_with(p, pi, d, &SolverOptions::default())
}

fn bga_with(p: &PredictionMatrix, pi: &ClassDistribution, d: &Divergence, opts: &SolverOptions) -> Result<AdjustmentReport> {
    opts.validate()?;
    validate_inputs(p, pi)?;
    if d.kind() != crate::divergence::DivergenceKind::Brier {
        return interior_point_solve(d, p, pi, opts);
    }
    if is_adjusted(p, pi, ADJUSTED_SHORTCUT_TOL) {
        return Ok(identity_report(p, pi.as_slice(), true));
    }
    let sol = dykstra_bga(p.matrix(), pi.as_slice(), opts)?;
    finish_report(d, p, pi.as_slice(), sol.a, sol.duals, sol.iterations, true, opts)
}

/// Uniform entry point. `aux` is the original class distribution, needed by PPA only.
pub fn adjust(
    kind: &AdjusterKind,
    p: &PredictionMatrix,
    pi: &ClassDistribution,
    aux: Option<&ClassDistribution>,
) -> Result<AdjustmentReport> {
    let opts = &kind.options;
    opts.validate()?;
    match &kind.method {
        Method::Ppa => {
            let old = aux.ok_or(Error::MissingAux)?;
            let a = ppa_adjust(p, old, pi)?;
            let (row_residual, column_residual) = constraint_residuals(a.matrix(), pi.as_slice());
            Ok(AdjustmentReport {
                adjusted: Adjusted::Bounded(a),
                objective: None,
                row_residual,
                column_residual,
                stationarity_residual: 0.0,
                duals: None,
                iterations: 0,
            })
        }
        Method::Additive => additive_with(p, pi, opts),
        Method::Multiplicative => multiplicative_with(p, pi, opts),
        Method::Uga(d) => uga_with(p, pi, d, opts),
        Method::Bga(d) => bga_with(p, pi, d, opts),
    }
}
