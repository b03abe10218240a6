//! Training runs: minibatch Adam on standardized energies.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::data::{self, Dataset, DatasetStats, ForceLayout};
use crate::error::{Error, Result};
use crate::net::Model;
use crate::optim::AdamState;
use crate::taaf::curve::{fmt_f64, write_curves};
use crate::taaf::{export_curve, ActivationCurve, ParamCount};

pub const REPORT_HEADER: &str = "epoch,train_rmse,val_rmse,force_rmse,lr";
pub const TIMING_HEADER: &str = "epoch,seconds";

/// Mixed into the run seed for the shuffling stream.
const SHUFFLE_STREAM: u64 = 0x5eed_5eed;

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Raw-unit energy RMSE over the training split.
    pub train_rmse: f64,
    /// Raw-unit energy RMSE over the validation split (training split if empty).
    pub val_rmse: f64,
    /// Raw-unit force RMSE over the validation split, when forces are known.
    pub force_rmse: Option<f64>,
    /// Learning rate used during this epoch.
    pub lr: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    pub epoch: usize,
    pub batch: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub activation: String,
    pub scheme: Option<String>,
    pub params: ParamCount,
    pub epochs: Vec<EpochRecord>,
    pub initial_val_rmse: f64,
    pub stopped_by_schedule: bool,
    pub divergence: Option<Divergence>,
}

impl RunReport {
    pub fn final_val_rmse(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.val_rmse)
    }

    pub fn mean_seconds_per_epoch(&self) -> Option<f64> {
        (!self.epochs.is_empty())
            .then(|| self.epochs.iter().map(|e| e.seconds).sum::<f64>() / self.epochs.len() as f64)
    }

    /// Deterministic report CSV: `# key=value` metadata lines, then
    /// [`REPORT_HEADER`] and one row per completed epoch. Timing is excluded.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# activation={}", self.activation);
        if let Some(s) = &self.scheme {
            let _ = writeln!(out, "# scheme={s}");
        }
        let _ = writeln!(out, "# total_params={}", self.params.total);
        let _ = writeln!(out, "# baseline_params={}", self.params.baseline);
        let _ = writeln!(out, "# taaf_added={}", self.params.taaf_added);
        let _ = writeln!(out, "# units={}", self.params.units);
        let _ = writeln!(out, "# std_convention={}", data::STD_CONVENTION);
        let _ = writeln!(out, "# initial_val_rmse={}", fmt_f64(self.initial_val_rmse));
        let _ = writeln!(out, "# stopped_by_schedule={}", self.stopped_by_schedule);
        let _ = writeln!(out, "# diverged={}", self.divergence.is_some());
        out.push_str(REPORT_HEADER);
        out.push('\n');
        for e in &self.epochs {
            let force = e.force_rmse.map(fmt_f64).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                e.epoch,
                fmt_f64(e.train_rmse),
                fmt_f64(e.val_rmse),
                force,
                fmt_f64(e.lr)
            );
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        let mut out = String::from(TIMING_HEADER);
        out.push('\n');
        for e in &self.epochs {
            let _ = writeln!(out, "{},{:.6}", e.epoch, e.seconds);
        }
        out
    }
}

/// One epoch row read back from a report CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub epoch: usize,
    pub train_rmse: f64,
    pub val_rmse: f64,
    pub force_rmse: Option<f64>,
    pub lr: f64,
}

/// Parsed report CSV: metadata pairs and epoch rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedReport {
    pub meta: Vec<(String, String)>,
    pub rows: Vec<ReportRow>,
}

impl ParsedReport {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

pub fn parse_report(text: &str, path: &Path) -> Result<ParsedReport> {
    let mut meta = Vec::new();
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if let Some(m) = line.strip_prefix('#') {
            if let Some((k, v)) = m.trim().split_once('=') {
                meta.push((k.to_string(), v.to_string()));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            if line.trim() != REPORT_HEADER {
                return Err(Error::csv(path, format!("line {lineno}: expected `{REPORT_HEADER}`")));
            }
            header_seen = true;
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 5 {
            return Err(Error::csv(path, format!("line {lineno}: expected 5 fields, got {}", cells.len())));
        }
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| Error::csv(path, format!("line {lineno}: `{s}` is not a number")))
        };
        rows.push(ReportRow {
            epoch: cells[0]
                .trim()
                .parse()
                .map_err(|_| Error::csv(path, format!("line {lineno}: bad epoch `{}`", cells[0])))?,
            train_rmse: num(cells[1])?,
            val_rmse: num(cells[2])?,
            force_rmse: if cells[3].trim().is_empty() { None } else { Some(num(cells[3])?) },
            lr: num(cells[4])?,
        });
    }
    if !header_seen {
        return Err(Error::csv(path, "missing report header"));
    }
    Ok(ParsedReport { meta, rows })
}

pub fn read_report(path: &Path) -> Result<ParsedReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_report(&text, path)
}

/// Everything a run produces, before anything is written to disk.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub config: RunConfig,
    pub report: RunReport,
    pub model: Model,
    pub stats: DatasetStats,
    /// Curves per recorded epoch, starting with epoch 0 (initialization).
    pub curves: Vec<(usize, Vec<ActivationCurve>)>,
}

impl TrainOutcome {
    pub fn diverged(&self) -> bool {
        self.report.divergence.is_some()
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::new(
            self.config.clone(),
            self.stats.clone(),
            self.model.clone(),
            self.report.epochs.len(),
        )
    }
}

/// Standardized splits plus the raw validation samples for force checks.
struct Prepared {
    stats: DatasetStats,
    train: Dataset,
    val: Dataset,
    raw_val: Dataset,
}

fn prepare(config: &RunConfig) -> Result<Prepared> {
    let raw = config.load_dataset()?;
    let (raw_train, raw_val) = raw.split(config.val_fraction)?;
    let stats = DatasetStats::compute(&raw_train)?;
    let apply = |d: &Dataset| -> Result<Dataset> {
        Dataset::new(
            d.samples()
                .iter()
                .map(|s| data::Sample {
                    features: stats.normalize_features(&s.features),
                    energy: stats.normalize_energy(s.energy),
                    forces: s.forces.clone(),
                })
                .collect(),
        )
    };
    let train = apply(&raw_train)?;
    let val = apply(&raw_val)?;
    Ok(Prepared { stats, train, val, raw_val })
}

/// Raw-unit energy RMSE of `model` on a standardized dataset.
pub fn energy_rmse(model: &Model, normalized: &Dataset, stats: &DatasetStats) -> f64 {
    if normalized.is_empty() {
        return f64::NAN;
    }
    let sse: f64 = normalized
        .samples()
        .iter()
        .map(|s| {
            let r = model.predict(&s.features) - s.energy;
            r * r
        })
        .sum();
    (sse / normalized.len() as f64).sqrt() * stats.energy_std
}

/// Raw-unit force RMSE over samples with known forces. Pair datasets compare
/// the scalar `-dE/dr` through the descriptor Jacobian, with `r` the first
/// feature.
pub fn force_rmse(model: &Model, raw: &Dataset, stats: &DatasetStats) -> Option<f64> {
    let layout = raw.force_layout();
    if layout == ForceLayout::None || raw.is_empty() {
        return None;
    }
    let mut sse = 0.0;
    let mut count = 0usize;
    for s in raw.samples() {
        let x = stats.normalize_features(&s.features);
        let neg_grad = stats.raw_energy_gradient(&model.input_gradient(&x));
        let target = s.forces.as_ref()?;
        let pred: Vec<f64> = match layout {
            ForceLayout::Pair => {
                let jac = data::pair_jacobian(s.features[0]);
                vec![neg_grad.iter().zip(jac).map(|(g, j)| g * j).sum()]
            }
            _ => neg_grad,
        };
        for (p, t) in pred.iter().zip(target) {
            sse += (p - t) * (p - t);
            count += 1;
        }
    }
    Some((sse / count as f64).sqrt())
}

fn sample_curves(model: &Model, n: usize, epoch: usize) -> Result<Vec<ActivationCurve>> {
    model
        .units()
        .iter()
        .zip(model.unit_ids())
        .map(|(u, id)| export_curve(u, n, epoch, id))
        .collect()
}

/// Runs one configured training job in memory.
///
/// Non-finite losses or gradients stop training and are recorded in
/// [`RunReport::divergence`]; the returned model is then the state after the
/// last completed epoch.
pub fn run_training(config: &RunConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let prep = prepare(config)?;
    let topology = config.topology_for(prep.train.feature_dim())?;
    let activation = config.activation_choice()?;
    let mut model = Model::new(topology, activation.clone(), config.seed)?;
    let params = model.parameter_count();

    let eval_set = if prep.val.is_empty() { &prep.train } else { &prep.val };
    let force_set = if prep.val.is_empty() { None } else { Some(&prep.raw_val) };

    let record_curves = activation.is_taaf() && config.curve_every > 0;
    let mut curves = Vec::new();
    if record_curves {
        curves.push((0, sample_curves(&model, config.curve_samples, 0)?));
    }

    let mut report = RunReport {
        activation: activation.label(),
        scheme: match &activation {
            crate::taaf::ActivationChoice::Taaf(t) => Some(t.scheme.name().to_string()),
            _ => None,
        },
        params,
        epochs: Vec::new(),
        initial_val_rmse: energy_rmse(&model, eval_set, &prep.stats),
        stopped_by_schedule: false,
        divergence: None,
    };

    let schedule = config.schedule();
    let mut adam = AdamState::for_model(config.adam(), &mut model);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..prep.train.len()).collect();
    let mut grads = model.zero_grads();
    let mut history: Vec<f64> = Vec::new();
    let samples = prep.train.samples();
    let mut last_good = model.clone();

    'epochs: for epoch in 1..=config.epochs {
        let (lr, stop) = schedule.step(&history);
        if stop {
            report.stopped_by_schedule = true;
            break;
        }
        let start = Instant::now();
        last_good.clone_from(&model);
        order.shuffle(&mut rng);
        for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
            grads.fill_zero();
            let scale = 2.0 / batch.len() as f64;
            let mut loss = 0.0;
            for &i in batch {
                let s = &samples[i];
                let (pred, cache) = model.forward(&s.features);
                let r = pred - s.energy;
                loss += r * r;
                model.backward_into(&cache, scale * r, &mut grads);
            }
            let diverge = |reason: String| Divergence { epoch, batch: batch_idx, reason };
            if !loss.is_finite() {
                report.divergence = Some(diverge("non-finite training loss".into()));
                break 'epochs;
            }
            match adam.step_model(&mut model, &grads, lr) {
                Ok(()) => {}
                Err(Error::Divergence(m)) => {
                    report.divergence = Some(diverge(m));
                    break 'epochs;
                }
                Err(e) => return Err(e),
            }
            if !model.is_finite() {
                report.divergence = Some(diverge("non-finite parameters after update".into()));
                break 'epochs;
            }
        }
        let train_rmse = energy_rmse(&model, &prep.train, &prep.stats);
        let val_rmse = energy_rmse(&model, eval_set, &prep.stats);
        if !(train_rmse.is_finite() && val_rmse.is_finite()) {
            report.divergence = Some(Divergence {
                epoch,
                batch: order.len().div_ceil(config.batch_size),
                reason: "non-finite epoch loss".into(),
            });
            break;
        }
        let force = force_set.and_then(|raw| force_rmse(&model, raw, &prep.stats));
        let seconds = start.elapsed().as_secs_f64();
        report.epochs.push(EpochRecord { epoch, train_rmse, val_rmse, force_rmse: force, lr, seconds });
        history.push(val_rmse);
        if record_curves && epoch % config.curve_every == 0 {
            curves.push((epoch, sample_curves(&model, config.curve_samples, epoch)?));
        }
    }

    if report.divergence.is_some() {
        model = last_good;
    }
    Ok(TrainOutcome {
        config: config.clone(),
        report,
        model,
        stats: prep.stats,
        curves,
    })
}

pub const REPORT_FILE: &str = "report.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const CONFIG_FILE: &str = "config.txt";
pub const DIVERGENCE_FILE: &str = "divergence.txt";
pub const CURVE_DIR: &str = "curves";

pub fn divergence_text(outcome: &TrainOutcome) -> Option<String> {
    let d = outcome.report.divergence.as_ref()?;
    let last = outcome.report.final_val_rmse().map(fmt_f64).unwrap_or_else(|| "none".into());
    Some(format!(
        "status=diverged\nepoch={}\nbatch={}\nreason={}\ncompleted_epochs={}\nlast_val_rmse={}\nactivation={}\nscheme={}\nunits={}\n",
        d.epoch,
        d.batch,
        d.reason,
        outcome.report.epochs.len(),
        last,
        outcome.report.activation,
        outcome.report.scheme.as_deref().unwrap_or("none"),
        outcome.report.params.units,
    ))
}

/// Writes report, timing, config, checkpoint, curves and (on divergence) the
/// divergence report into `dir`. Returns the files written.
pub fn write_outputs(outcome: &TrainOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: &str, text: String| -> Result<()> {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        written.push(p);
        Ok(())
    };
    put(REPORT_FILE, outcome.report.to_csv())?;
    put(TIMING_FILE, outcome.report.timing_csv())?;
    put(CONFIG_FILE, outcome.config.to_text())?;
    put(CHECKPOINT_FILE, outcome.checkpoint().to_json()?)?;
    if let Some(text) = divergence_text(outcome) {
        put(DIVERGENCE_FILE, text)?;
    }
    if !outcome.curves.is_empty() {
        let cdir = dir.join(CURVE_DIR);
        std::fs::create_dir_all(&cdir).map_err(|e| Error::io(&cdir, e))?;
        for (epoch, curves) in &outcome.curves {
            let p = cdir.join(format!("epoch_{epoch:03}.csv"));
            write_curves(&p, curves)?;
            written.push(p);
        }
    }
    Ok(written)
}
