//! Benchmark matrix: activation cells x seeds against a fixed-activation baseline.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::{ActivationKind, RunConfig};
use crate::error::{Error, Result};
use crate::taaf::curve::fmt_f64;
use crate::taaf::ParamCount;
use crate::train::{self, run_training};

pub const RUNS_FILE: &str = "bench_runs.csv";
pub const SUMMARY_FILE: &str = "bench_summary.csv";
pub const RUNS_HEADER: &str =
    "cell,seed,status,epochs,final_rmse,ratio_pct,s_per_epoch,time_ratio_pct,epochs_to_target,equivalent_epochs";
pub const SUMMARY_HEADER: &str = "cell,activation,scheme,total_params,taaf_added,runs,failed,median_rmse,ratio_pct,median_s_per_epoch,time_ratio_pct,median_epochs_to_target,reached,equivalent_epochs";

/// One matrix column: a label plus config overrides.
///
/// Written `activation[:key=value...]`, for example `bspline:scheme=global`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchCell {
    pub label: String,
    pub overrides: Vec<String>,
}

impl FromStr for BenchCell {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut parts = s.split(':');
        let act = parts.next().unwrap_or("").trim();
        act.parse::<ActivationKind>()?;
        let mut overrides = vec![format!("activation={act}")];
        for p in parts {
            if !p.contains('=') {
                return Err(Error::Config(format!("cell `{s}`: `{p}` is not key=value")));
            }
            overrides.push(p.trim().to_string());
        }
        Ok(BenchCell { label: s.to_string(), overrides })
    }
}

#[derive(Debug, Clone)]
pub struct BenchPlan {
    pub base: RunConfig,
    pub cells: Vec<BenchCell>,
    pub seeds: Vec<u64>,
}

impl BenchPlan {
    /// Per-cell configs, validated. Each seed drives both data and weights.
    pub fn cell_configs(&self) -> Result<Vec<RunConfig>> {
        if self.cells.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config("bench needs at least one cell and one seed".into()));
        }
        let mut labels = std::collections::HashSet::new();
        self.cells
            .iter()
            .map(|c| {
                if !labels.insert(c.label.as_str()) {
                    return Err(Error::Config(format!("duplicate cell `{}`", c.label)));
                }
                let mut cfg = self.base.clone();
                cfg.data_seed = None;
                cfg.apply_overrides(&c.overrides)
                    .map_err(|e| Error::Config(format!("cell `{}`: {e}", c.label)))?;
                Ok(cfg)
            })
            .collect()
    }

    /// Index of the first fixed-activation cell.
    pub fn baseline(&self, configs: &[RunConfig]) -> Result<usize> {
        configs
            .iter()
            .position(|c| matches!(c.activation, ActivationKind::Fixed(_)))
            .ok_or_else(|| Error::Config("bench needs a fixed-activation baseline cell".into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Ok,
    Diverged(String),
    Failed(String),
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::Diverged(_) => "diverged",
            RunStatus::Failed(_) => "failed",
        }
    }
}

/// Raw result of one (cell, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRun {
    pub cell: usize,
    pub seed: u64,
    pub status: RunStatus,
    /// Validation RMSE after each completed epoch.
    pub val_curve: Vec<f64>,
    pub s_per_epoch: Option<f64>,
    pub params: Option<ParamCount>,
    pub report_path: Option<PathBuf>,
}

impl BenchRun {
    pub fn final_rmse(&self) -> Option<f64> {
        match self.status {
            RunStatus::Ok => self.val_curve.last().copied(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub label: String,
    pub seed: u64,
    pub status: RunStatus,
    pub epochs: usize,
    pub final_rmse: Option<f64>,
    pub ratio_pct: Option<f64>,
    pub s_per_epoch: Option<f64>,
    pub time_ratio_pct: Option<f64>,
    pub epochs_to_target: Option<usize>,
    pub equivalent_epochs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub activation: String,
    pub scheme: String,
    pub params: Option<ParamCount>,
    pub runs: usize,
    pub failed: usize,
    pub median_rmse: Option<f64>,
    pub ratio_pct: Option<f64>,
    pub median_s_per_epoch: Option<f64>,
    pub time_ratio_pct: Option<f64>,
    pub median_epochs_to_target: Option<f64>,
    pub reached: usize,
    pub equivalent_epochs: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub baseline: usize,
    pub runs: Vec<BenchRun>,
    pub rows: Vec<BenchRow>,
    pub summary: Vec<SummaryRow>,
}

/// First 1-based epoch whose value is at or below `target`.
pub fn epochs_to_target(curve: &[f64], target: f64) -> Option<usize> {
    curve.iter().position(|&v| v <= target).map(|i| i + 1)
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn run_one(cfg: &RunConfig, cell: usize, seed: u64, out: Option<&Path>) -> BenchRun {
    let mut cfg = cfg.clone();
    cfg.seed = seed;
    let mut run = BenchRun {
        cell,
        seed,
        status: RunStatus::Ok,
        val_curve: Vec::new(),
        s_per_epoch: None,
        params: None,
        report_path: None,
    };
    let outcome = match run_training(&cfg) {
        Ok(o) => o,
        Err(e) => {
            run.status = RunStatus::Failed(e.to_string());
            return run;
        }
    };
    run.val_curve = outcome.report.epochs.iter().map(|e| e.val_rmse).collect();
    run.s_per_epoch = outcome.report.mean_seconds_per_epoch();
    run.params = Some(outcome.report.params);
    if let Some(d) = &outcome.report.divergence {
        run.status = RunStatus::Diverged(d.reason.clone());
    }
    if let Some(dir) = out {
        match train::write_outputs(&outcome, dir) {
            Ok(_) => run.report_path = Some(dir.join(train::REPORT_FILE)),
            Err(e) => run.status = RunStatus::Failed(e.to_string()),
        }
    }
    run
}

/// Directory for one run's files under the bench output directory.
pub fn run_dir(root: &Path, label: &str, seed: u64) -> PathBuf {
    let safe: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    root.join("runs").join(safe).join(format!("seed_{seed}"))
}

/// Runs every (cell, seed) pair in parallel and tabulates the results.
/// Failed or diverged runs are marked rather than aborting the matrix.
pub fn run_bench(plan: &BenchPlan, out: Option<&Path>) -> Result<BenchResult> {
    let configs = plan.cell_configs()?;
    let baseline = plan.baseline(&configs)?;
    let jobs: Vec<(usize, u64)> = (0..configs.len())
        .flat_map(|c| plan.seeds.iter().map(move |&s| (c, s)))
        .collect();
    let runs: Vec<BenchRun> = jobs
        .par_iter()
        .map(|&(c, s)| {
            let dir = out.map(|root| run_dir(root, &plan.cells[c].label, s));
            run_one(&configs[c], c, s, dir.as_deref())
        })
        .collect();
    let (rows, summary) = tabulate(plan, &configs, baseline, &runs);
    Ok(BenchResult { baseline, runs, rows, summary })
}

/// Builds per-run rows and per-cell medians from raw runs.
pub fn tabulate(
    plan: &BenchPlan,
    configs: &[RunConfig],
    baseline: usize,
    runs: &[BenchRun],
) -> (Vec<BenchRow>, Vec<SummaryRow>) {
    let find = |cell: usize, seed: u64| runs.iter().find(|r| r.cell == cell && r.seed == seed);
    let mut rows = Vec::new();
    for run in runs {
        let base = find(baseline, run.seed);
        let base_rmse = base.and_then(BenchRun::final_rmse);
        let base_time = base.and_then(|b| b.s_per_epoch);
        let final_rmse = run.final_rmse();
        let ratio_pct = final_rmse.zip(base_rmse).map(|(a, b)| 100.0 * (a / b));
        let time_ratio_pct = run.s_per_epoch.zip(base_time).map(|(a, b)| 100.0 * (a / b));
        let epochs_to_target = if run.cell == baseline {
            final_rmse.map(|_| run.val_curve.len())
        } else if run.status == RunStatus::Ok {
            base_rmse.and_then(|t| epochs_to_target(&run.val_curve, t))
        } else {
            None
        };
        let equivalent_epochs = epochs_to_target
            .zip(time_ratio_pct)
            .map(|(e, t)| e as f64 * t / 100.0);
        rows.push(BenchRow {
            label: plan.cells[run.cell].label.clone(),
            seed: run.seed,
            status: run.status.clone(),
            epochs: run.val_curve.len(),
            final_rmse,
            ratio_pct,
            s_per_epoch: run.s_per_epoch,
            time_ratio_pct,
            epochs_to_target,
            equivalent_epochs,
        });
    }

    let cell_median = |cell: usize, f: &dyn Fn(&BenchRun) -> Option<f64>| -> Option<f64> {
        let v: Vec<f64> = runs.iter().filter(|r| r.cell == cell).filter_map(f).collect();
        median(&v)
    };
    let base_rmse = cell_median(baseline, &BenchRun::final_rmse);
    let base_time = cell_median(baseline, &|r| r.s_per_epoch);
    let summary = configs
        .iter()
        .enumerate()
        .map(|(c, cfg)| {
            let label = plan.cells[c].label.clone();
            let cell_runs: Vec<&BenchRun> = runs.iter().filter(|r| r.cell == c).collect();
            let cell_rows: Vec<&BenchRow> = rows.iter().filter(|r| r.label == label).collect();
            let median_rmse = cell_median(c, &BenchRun::final_rmse);
            let median_s = cell_median(c, &|r| r.s_per_epoch);
            let time_ratio_pct = median_s.zip(base_time).map(|(a, b)| 100.0 * (a / b));
            let ett: Vec<f64> = cell_rows.iter().filter_map(|r| r.epochs_to_target.map(|e| e as f64)).collect();
            let median_ett = median(&ett);
            SummaryRow {
                activation: cfg.activation.name().to_string(),
                scheme: match cfg.activation {
                    ActivationKind::Taaf(_) => cfg.scheme.name().to_string(),
                    ActivationKind::Fixed(_) => "none".into(),
                },
                params: cell_runs.iter().find_map(|r| r.params),
                runs: cell_runs.len(),
                failed: cell_runs.iter().filter(|r| r.status != RunStatus::Ok).count(),
                median_rmse,
                ratio_pct: median_rmse.zip(base_rmse).map(|(a, b)| 100.0 * (a / b)),
                median_s_per_epoch: median_s,
                time_ratio_pct,
                median_epochs_to_target: median_ett,
                reached: ett.len(),
                equivalent_epochs: median_ett.zip(time_ratio_pct).map(|(e, t)| e * t / 100.0),
                label,
            }
        })
        .collect();
    (rows, summary)
}

fn opt_f(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn quote(label: &str) -> String {
    if label.contains(',') || label.contains('"') {
        format!("\"{}\"", label.replace('"', "\"\""))
    } else {
        label.to_string()
    }
}

impl BenchResult {
    /// Per-run CSV. `epochs_to_target` is `not_reached` when the baseline's
    /// final RMSE was never matched, and empty for failed runs.
    pub fn runs_csv(&self) -> String {
        let mut out = String::from(RUNS_HEADER);
        out.push('\n');
        for r in &self.rows {
            let ett = match (r.epochs_to_target, &r.status) {
                (Some(e), _) => e.to_string(),
                (None, RunStatus::Ok) if r.ratio_pct.is_some() => "not_reached".into(),
                _ => String::new(),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                quote(&r.label),
                r.seed,
                r.status.label(),
                r.epochs,
                opt_f(r.final_rmse),
                opt_f(r.ratio_pct),
                r.s_per_epoch.map(|s| format!("{s:.6}")).unwrap_or_default(),
                r.time_ratio_pct.map(|s| format!("{s:.2}")).unwrap_or_default(),
                ett,
                r.equivalent_epochs.map(|s| format!("{s:.2}")).unwrap_or_default(),
            );
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from(SUMMARY_HEADER);
        out.push('\n');
        for s in &self.summary {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                quote(&s.label),
                s.activation,
                s.scheme,
                s.params.map(|p| p.total.to_string()).unwrap_or_default(),
                s.params.map(|p| p.taaf_added.to_string()).unwrap_or_default(),
                s.runs,
                s.failed,
                opt_f(s.median_rmse),
                opt_f(s.ratio_pct),
                s.median_s_per_epoch.map(|v| format!("{v:.6}")).unwrap_or_default(),
                s.time_ratio_pct.map(|v| format!("{v:.2}")).unwrap_or_default(),
                s.median_epochs_to_target.map(|v| v.to_string()).unwrap_or_else(|| "not_reached".into()),
                s.reached,
                s.equivalent_epochs.map(|v| format!("{v:.2}")).unwrap_or_default(),
            );
        }
        out
    }

    /// Human-readable comparison table.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<28} {:>9} {:>6} {:>13} {:>9} {:>9} {:>10} {:>10}",
            "cell", "params", "runs", "median_rmse", "ratio", "s/epoch", "ep->target", "equiv_ep"
        );
        for s in &self.summary {
            let pct = |v: Option<f64>| v.map(|v| format!("{v:.2}%")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:<28} {:>9} {:>6} {:>13} {:>9} {:>9} {:>10} {:>10}",
                s.label,
                s.params.map(|p| p.total.to_string()).unwrap_or_else(|| "-".into()),
                format!("{}/{}", s.runs - s.failed, s.runs),
                s.median_rmse.map(|v| format!("{v:.4e}")).unwrap_or_else(|| "-".into()),
                pct(s.ratio_pct),
                pct(s.time_ratio_pct),
                s.median_epochs_to_target
                    .map(|v| format!("{v}"))
                    .unwrap_or_else(|| "not reached".into()),
                s.equivalent_epochs.map(|v| format!("{v:.1}")).unwrap_or_else(|| "-".into()),
            );
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, text) in [(RUNS_FILE, self.runs_csv()), (SUMMARY_FILE, self.summary_csv())] {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}
