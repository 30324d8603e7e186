//! The experiment grid: shift a dataset, perturb the class distribution,
//! adjust, and measure the loss before and after.

use std::io::Write;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adjust::{adjust, AdjusterKind, Method};
use crate::divergence::{mean_loss, Divergence};
use crate::error::{Error, Result};
use crate::shiftsim::{perturb_distribution, LabeledDataset, ShiftMethod, ALLOWED_DELTAS, EPSILON_RANGE};
use crate::solver::SolverOptions;
use crate::types::ClassDistribution;

const ADJUSTERS: [&str; 5] = ["ppa", "additive", "multiplicative", "uga", "bga"];

fn default_epsilon_range() -> [f64; 2] {
    [EPSILON_RANGE.0, EPSILON_RANGE.1]
}

fn default_deltas() -> Vec<f64> {
    ALLOWED_DELTAS.to_vec()
}

fn default_replicates() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset_dir: PathBuf,
    pub adjusters: Vec<String>,
    pub divergences: Vec<String>,
    pub shift_methods: Vec<ShiftMethod>,
    #[serde(default = "default_epsilon_range")]
    pub epsilon_range: [f64; 2],
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    pub output: PathBuf,
    /// Summary JSON path; defaults to the output path with a `.summary.json` suffix.
    #[serde(default)]
    pub summary: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::InvalidOptions(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidOptions(m));
        if self.adjusters.is_empty() {
            return bad("adjusters must not be empty".into());
        }
        if self.shift_methods.is_empty() {
            return bad("shift_methods must not be empty".into());
        }
        if self.divergences.is_empty() {
            return bad("divergences must not be empty".into());
        }
        if self.deltas.is_empty() {
            return bad("deltas must not be empty".into());
        }
        if let Some(a) = self.adjusters.iter().find(|a| !ADJUSTERS.contains(&a.as_str())) {
            return bad(format!("unknown adjuster '{a}'"));
        }
        for d in &self.divergences {
            if d != "brier" && d != "logloss" {
                return bad(format!("unknown divergence '{d}'"));
            }
        }
        if let Some(d) = self.deltas.iter().find(|d| !ALLOWED_DELTAS.contains(d)) {
            return bad(format!("delta {d} is not one of {ALLOWED_DELTAS:?}"));
        }
        let [lo, hi] = self.epsilon_range;
        if !(EPSILON_RANGE.0 <= lo && lo <= hi && hi <= EPSILON_RANGE.1) {
            return bad(format!("epsilon_range [{lo}, {hi}] must lie within {EPSILON_RANGE:?}"));
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        Ok(())
    }

    pub fn summary_path(&self) -> PathBuf {
        self.summary.clone().unwrap_or_else(|| {
            let mut s = self.output.clone().into_os_string();
            s.push(".summary.json");
            PathBuf::from(s)
        })
    }

    pub fn grid_size(&self) -> usize {
        self.replicates * self.shift_methods.len() * self.deltas.len() * self.adjusters.len() * self.divergences.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Skipped,
    SolverFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub task_id: usize,
    pub replicate: usize,
    pub shift_method: ShiftMethod,
    pub epsilon: f64,
    pub delta: f64,
    pub adjuster: String,
    pub divergence: String,
    pub loss_before: Option<f64>,
    pub loss_after: Option<f64>,
    pub proportional_reduction: Option<f64>,
    pub shift_magnitude: Option<f64>,
    pub status: Status,
    pub message: String,
}

struct Shifted {
    replicate: usize,
    method: ShiftMethod,
    epsilon: f64,
    outcome: Result<(LabeledDataset, f64)>,
}

/// One cell of the summary: an (adjuster, divergence, tercile, delta) group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryCell {
    pub adjuster: String,
    pub divergence: String,
    pub tercile: usize,
    pub delta: f64,
    pub count: usize,
    pub mean_reduction: Option<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    /// Smallest and largest shift magnitude in each tercile.
    pub tercile_bounds: Vec<Option<[f64; 2]>>,
    pub cells: Vec<SummaryCell>,
}

/// Runs every task of the grid on `ds`. Rows come back in grid order
/// (replicate, shift method, delta, adjuster, divergence) whatever the
/// thread count.
pub fn run_grid(cfg: &ExperimentConfig, ds: &LabeledDataset, opts: &SolverOptions) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    opts.validate()?;
    if ds.features().is_none() {
        if let Some(m) = cfg.shift_methods.iter().find(|m| m.needs_features()) {
            return Err(Error::InvalidOptions(format!("{} shift needs features.csv", m.name())));
        }
    }
    let original = ds.class_distribution();
    let [lo, hi] = cfg.epsilon_range;
    let mut plan = Vec::new();
    for r in 0..cfg.replicates {
        for (s, &method) in cfg.shift_methods.iter().enumerate() {
            // counter-based: each (replicate, method) pair owns a stream
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream((r * ShiftMethod::ALL.len() + s) as u64);
            let epsilon = if lo == hi { lo } else { rng.random_range(lo..=hi) };
            plan.push((r, method, epsilon, rng.random::<u64>()));
        }
    }
    let shifted: Vec<Shifted> = plan
        .into_par_iter()
        .map(|(replicate, method, epsilon, seed)| Shifted {
            replicate,
            method,
            epsilon,
            outcome: method.apply(ds, epsilon, seed).map(|out| {
                let mag = original.squared_distance(&out.class_distribution());
                (out, mag)
            }),
        })
        .collect();

    let divergences: Vec<Divergence> =
        cfg.divergences.iter().map(|d| Divergence::from_name(d)).collect::<Result<_>>()?;
    let mut tasks = Vec::with_capacity(cfg.grid_size());
    for sh in &shifted {
        for &delta in &cfg.deltas {
            for adjuster in &cfg.adjusters {
                for d in &divergences {
                    tasks.push((sh, delta, adjuster.as_str(), d));
                }
            }
        }
    }
    let rows = tasks
        .into_par_iter()
        .enumerate()
        .map(|(task_id, (sh, delta, adjuster, d))| run_task(task_id, sh, delta, adjuster, d, &original, opts))
        .collect();
    Ok(rows)
}

fn run_task(
    task_id: usize,
    sh: &Shifted,
    delta: f64,
    adjuster: &str,
    d: &Divergence,
    original: &ClassDistribution,
    opts: &SolverOptions,
) -> ResultRow {
    let mut row = ResultRow {
        task_id,
        replicate: sh.replicate,
        shift_method: sh.method,
        epsilon: sh.epsilon,
        delta,
        adjuster: adjuster.to_owned(),
        divergence: d.name().to_owned(),
        loss_before: None,
        loss_after: None,
        proportional_reduction: None,
        shift_magnitude: None,
        status: Status::Skipped,
        message: String::new(),
    };
    let (ds, magnitude) = match &sh.outcome {
        Ok((ds, m)) => (ds, *m),
        Err(e) => {
            row.message = e.to_string();
            return row;
        }
    };
    row.shift_magnitude = Some(magnitude);
    let truth = ds.class_distribution();
    let (majority, _) = crate::shiftsim::majority_split(&truth);
    let target = match perturb_distribution(&truth, delta, &majority) {
        Ok(t) => t,
        Err(e) => {
            row.message = e.to_string();
            return row;
        }
    };
    let before = match mean_loss(d, ds.predictions(), ds.labels()) {
        Ok(v) => v,
        Err(e) => {
            row.message = e.to_string();
            return row;
        }
    };
    row.loss_before = Some(before);
    let method = match adjuster {
        "uga" => Method::Uga(d.clone()),
        "bga" => Method::Bga(d.clone()),
        other => Method::from_name(other, None).expect("validated adjuster"),
    };
    let kind = AdjusterKind::with_options(method, opts.clone());
    let report = match adjust(&kind, ds.predictions(), &target, Some(original)) {
        Ok(r) => r,
        Err(e) => {
            row.status = if matches!(e, Error::NonConvergence { .. }) { Status::SolverFailure } else { Status::Skipped };
            row.message = e.to_string();
            return row;
        }
    };
    match mean_loss(d, &report.adjusted, ds.labels()) {
        Ok(after) => {
            row.loss_after = Some(after);
            row.proportional_reduction = (before > 0.0).then(|| (before - after) / before);
            row.status = Status::Ok;
        }
        Err(e) => row.message = e.to_string(),
    }
    row
}

/// Groups ok rows by tercile of shift magnitude (ranked over the distinct
/// shifted datasets of the run) and delta.
pub fn summarize(cfg: &ExperimentConfig, rows: &[ResultRow]) -> Summary {
    let mut shifts: Vec<((usize, ShiftMethod), f64)> = Vec::new();
    for r in rows {
        if let Some(m) = r.shift_magnitude {
            let key = (r.replicate, r.shift_method);
            if !shifts.iter().any(|(k, _)| *k == key) {
                shifts.push((key, m));
            }
        }
    }
    let mut order: Vec<usize> = (0..shifts.len()).collect();
    order.sort_by(|&a, &b| shifts[a].1.total_cmp(&shifts[b].1).then(a.cmp(&b)));
    let count = shifts.len();
    let mut tercile_of = vec![0usize; count];
    let mut bounds: Vec<Option<[f64; 2]>> = vec![None; 3];
    for (rank, &idx) in order.iter().enumerate() {
        let t = 3 * rank / count;
        tercile_of[idx] = t;
        let m = shifts[idx].1;
        bounds[t] = Some(match bounds[t] {
            None => [m, m],
            Some([lo, hi]) => [lo.min(m), hi.max(m)],
        });
    }
    let tercile = |r: &ResultRow| {
        let key = (r.replicate, r.shift_method);
        shifts.iter().position(|(k, _)| *k == key).map(|i| tercile_of[i])
    };
    let mut cells = Vec::new();
    for adjuster in &cfg.adjusters {
        for divergence in &cfg.divergences {
            for t in 0..3 {
                for &delta in &cfg.deltas {
                    let values: Vec<f64> = rows
                        .iter()
                        .filter(|r| {
                            r.status == Status::Ok
                                && &r.adjuster == adjuster
                                && &r.divergence == divergence
                                && r.delta == delta
                                && tercile(r) == Some(t)
                        })
                        .filter_map(|r| r.proportional_reduction)
                        .collect();
                    let mean_reduction = (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64);
                    cells.push(SummaryCell {
                        adjuster: adjuster.clone(),
                        divergence: divergence.clone(),
                        tercile: t,
                        delta,
                        count: values.len(),
                        mean_reduction,
                        values,
                    });
                }
            }
        }
    }
    Summary { tercile_bounds: bounds, cells }
}

pub fn write_results<W: Write>(writer: W, rows: &[ResultRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Loads the dataset, runs the grid and writes the results CSV and summary JSON.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &SolverOptions) -> Result<(Vec<ResultRow>, Summary)> {
    cfg.validate()?;
    let ds = crate::io::load_dataset(&cfg.dataset_dir)?;
    let rows = run_grid(cfg, &ds, opts)?;
    let summary = summarize(cfg, &rows);
    if let Some(parent) = cfg.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    write_results(std::fs::File::create(&cfg.output)?, &rows)?;
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    std::fs::write(cfg.summary_path(), text)?;
    Ok((rows, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(adjusters: &[&str], deltas: &[f64]) -> ExperimentConfig {
        ExperimentConfig {
            dataset_dir: PathBuf::from("unused"),
            adjusters: adjusters.iter().map(|s| s.to_string()).collect(),
            divergences: vec!["brier".into()],
            shift_methods: ShiftMethod::ALL.to_vec(),
            epsilon_range: [0.1, 0.5],
            deltas: deltas.to_vec(),
            replicates: 2,
            seed: 11,
            output: PathBuf::from("out.csv"),
            summary: None,
        }
    }

    #[test]
    fn grid_shape_and_bga_never_hurts() {
        let ds = crate::synthetic::generate(300, 3, 2, 4).unwrap();
        let cfg = config(&["ppa", "bga"], &[0.0, 0.04]);
        let rows = run_grid(&cfg, &ds, &SolverOptions::default()).unwrap();
        assert_eq!(rows.len(), cfg.grid_size());
        for r in rows.iter().filter(|r| r.status == Status::Ok && r.adjuster == "bga" && r.delta == 0.0) {
            assert!(r.proportional_reduction.unwrap() >= -1e-9);
        }
        let summary = summarize(&cfg, &rows);
        assert_eq!(summary.cells.len(), 2 * 3 * 2);
    }

    #[test]
    fn config_validation() {
        let mut cfg = config(&["bga"], &[0.0]);
        cfg.shift_methods.clear();
        assert!(cfg.validate().is_err());
        let cfg = config(&["bga"], &[0.03]);
        assert!(cfg.validate().is_err());
        let cfg = config(&["nope"], &[0.0]);
        assert!(cfg.validate().is_err());
        assert_eq!(config(&["bga"], &[0.0]).summary_path(), PathBuf::from("out.csv.summary.json"));
    }
}
