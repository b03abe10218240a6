use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use taafs::bench::{self, BenchCell, BenchPlan};
use taafs::checkpoint::Checkpoint;
use taafs::config::{ActivationKind, RunConfig};
use taafs::data::{self, PairPotential};
use taafs::taaf::curve::curves_to_csv;
use taafs::taaf::{export_curve, parameter_count, ActivationChoice, ActivationCurve, Scheme, TaafConfig};
use taafs::{BasisSpec, Error, Family, FixedActivation};

const FILES_HELP: &str = "\
Output files (all CSV unless noted):
  report.csv            `# key=value` metadata lines (activation, scheme, total_params,
                        baseline_params, taaf_added, units, std_convention, ...), then
                        epoch,train_rmse,val_rmse,force_rmse,lr
  timing.csv            epoch,seconds
  checkpoint.json       versioned model checkpoint (lossless)
  config.txt            the resolved run configuration
  divergence.txt        key=value divergence report, only when training diverged
  curves/epoch_NNN.csv  x,y,epoch,unit_id
  bench_runs.csv        cell,seed,status,epochs,final_rmse,ratio_pct,s_per_epoch,
                        time_ratio_pct,epochs_to_target,equivalent_epochs
  bench_summary.csv     cell,activation,scheme,total_params,taaf_added,runs,failed,
                        median_rmse,ratio_pct,median_s_per_epoch,time_ratio_pct,
                        median_epochs_to_target,reached,equivalent_epochs
  dataset files         f0,...,fk,energy[,fx0,...]

Exit codes: 0 success, 1 configuration or input error, 2 training diverged.";

#[derive(Parser)]
#[command(name = "taafs", version, about = "Trainable adaptive activation functions", after_help = FILES_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat `key = value` config file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set activation=bspline`. Repeatable.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> taafs::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        cfg.apply_overrides(&self.set)?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and write report, checkpoint and curves.
    #[command(after_help = FILES_HELP)]
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory (overrides `output_dir`).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run activation cells x seeds and compare against the first fixed cell.
    #[command(after_help = FILES_HELP)]
    Bench {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated cells, `activation[:key=value...]`.
        #[arg(long, default_value = "tanh,bspline,chebyshev1,fourier")]
        cells: String,
        /// Comma-separated seeds.
        #[arg(long, default_value = "1,2,3,4,5")]
        seeds: String,
        /// Output directory (overrides `output_dir`).
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Worker threads; 1 gives undisturbed timings.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print parameter totals per granularity scheme.
    Params {
        #[command(flatten)]
        config: ConfigArgs,
        /// Input width used when the topology does not fix it.
        #[arg(long, default_value_t = 4)]
        input_dim: usize,
    },
    /// Export activation curves from a checkpoint.
    Curve {
        /// Checkpoint written by `train`.
        #[arg(long)]
        checkpoint: PathBuf,
        /// `all`, a unit id, a unit index, or a prefix ending in `*`.
        #[arg(long, default_value = "all")]
        unit: String,
        #[arg(long, default_value_t = 61)]
        samples: usize,
        /// Output CSV (stdout if omitted).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic pair-potential dataset.
    Gen {
        /// `lj` or `morse`.
        #[arg(long, default_value = "lj")]
        potential: String,
        #[arg(short, long, default_value_t = 2000)]
        n: usize,
        #[arg(long)]
        r_min: Option<f64>,
        #[arg(long)]
        r_max: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV.
        #[arg(short, long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Train { config, out } => cmd_train(&config, out),
        Command::Bench { config, cells, seeds, out, threads } => cmd_bench(&config, &cells, &seeds, out, threads),
        Command::Params { config, input_dim } => cmd_params(&config, input_dim),
        Command::Curve { checkpoint, unit, samples, out } => cmd_curve(&checkpoint, &unit, samples, out.as_deref()),
        Command::Gen { potential, n, r_min, r_max, seed, out } => cmd_gen(&potential, n, r_min, r_max, seed, &out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Divergence(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn cmd_train(args: &ConfigArgs, out: Option<PathBuf>) -> taafs::Result<ExitCode> {
    let mut cfg = args.resolve()?;
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    let outcome = taafs::train::run_training(&cfg)?;
    taafs::train::write_outputs(&outcome, &cfg.output_dir)?;
    let r = &outcome.report;
    println!(
        "activation={} total_params={} taaf_added={} epochs={} final_val_rmse={}",
        r.activation,
        r.params.total,
        r.params.taaf_added,
        r.epochs.len(),
        r.final_val_rmse().map(|v| format!("{v:.6e}")).unwrap_or_else(|| "none".into()),
    );
    if let Some(d) = &r.divergence {
        eprintln!(
            "training diverged at epoch {} batch {}: {}; report in {}",
            d.epoch,
            d.batch,
            d.reason,
            cfg.output_dir.join(taafs::train::DIVERGENCE_FILE).display()
        );
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_list<T: std::str::FromStr>(what: &str, text: &str) -> taafs::Result<Vec<T>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad {what} `{}`", s.trim())))
        })
        .collect()
}

fn cmd_bench(
    args: &ConfigArgs,
    cells: &str,
    seeds: &str,
    out: Option<PathBuf>,
    threads: Option<usize>,
) -> taafs::Result<ExitCode> {
    let mut base = args.resolve()?;
    if let Some(o) = out {
        base.output_dir = o;
    }
    let cells: Vec<BenchCell> = cells
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<taafs::Result<_>>()?;
    let plan = BenchPlan { base: base.clone(), cells, seeds: parse_list("seed", seeds)? };
    let run = || bench::run_bench(&plan, Some(&base.output_dir));
    let result = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    result.write(&base.output_dir)?;
    print!("{}", result.pretty());
    println!("tables written to {}", base.output_dir.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_params(args: &ConfigArgs, input_dim: usize) -> taafs::Result<ExitCode> {
    let cfg = args.resolve()?;
    let topology = taafs::Topology::parse(&cfg.topology, input_dim)?;
    let spec = cfg.basis_spec().unwrap_or_else(|| BasisSpec::new(Family::BSpline));
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "scheme,units,total,taaf_added,ratio_pct");
    let fixed = parameter_count(&topology, &ActivationChoice::Fixed(FixedActivation::Tanh))?;
    let _ = writeln!(stdout, "fixed,0,{},0,{:.2}", fixed.total, fixed.ratio_percent());
    for scheme in Scheme::ALL {
        let taaf = TaafConfig {
            spec: spec.clone(),
            normalizer: cfg.normalizer,
            bias: cfg.unit_bias,
            scheme,
        };
        let c = parameter_count(&topology, &ActivationChoice::Taaf(taaf))?;
        let _ = writeln!(
            stdout,
            "{},{},{},{},{:.2}",
            scheme.name(),
            c.units,
            c.total,
            c.taaf_added,
            c.ratio_percent()
        );
    }
    let unit = spec.len() + usize::from(cfg.unit_bias);
    let _ = writeln!(
        stdout,
        "# basis={} unit_size={unit}; per_neuron uses one full unit per activated neuron ({} x {unit})",
        spec.family,
        topology.activated_neuron_count(),
    );
    if matches!(cfg.activation, ActivationKind::Fixed(_)) {
        let _ = writeln!(stdout, "# configured activation is fixed; scheme rows use the default {} basis", spec.family);
    }
    Ok(ExitCode::SUCCESS)
}

/// Unit indices matching `selector`.
fn select_units(ids: &[String], selector: &str) -> taafs::Result<Vec<usize>> {
    let sel = selector.trim();
    let hits: Vec<usize> = if sel == "all" {
        (0..ids.len()).collect()
    } else if let Some(prefix) = sel.strip_suffix('*') {
        (0..ids.len()).filter(|&i| ids[i].starts_with(prefix)).collect()
    } else if let Ok(i) = sel.parse::<usize>() {
        (i < ids.len()).then_some(i).into_iter().collect()
    } else {
        ids.iter().position(|id| id == sel).into_iter().collect()
    };
    if hits.is_empty() {
        return Err(Error::NoSuchUnit(sel.to_string()));
    }
    Ok(hits)
}

fn cmd_curve(checkpoint: &Path, selector: &str, samples: usize, out: Option<&Path>) -> taafs::Result<ExitCode> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let model = &ckpt.model;
    let curves: Vec<ActivationCurve> = select_units(model.unit_ids(), selector)?
        .into_iter()
        .map(|i| export_curve(&model.units()[i], samples, ckpt.epoch, &model.unit_ids()[i]))
        .collect::<taafs::Result<_>>()?;
    let text = curves_to_csv(&curves);
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io { path: p.to_path_buf(), source: e })?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen(
    potential: &str,
    n: usize,
    r_min: Option<f64>,
    r_max: Option<f64>,
    seed: u64,
    out: &Path,
) -> taafs::Result<ExitCode> {
    let (pot, source) = match potential {
        "lj" => (PairPotential::LJ, taafs::config::DataSource::Lj),
        "morse" => (PairPotential::MORSE, taafs::config::DataSource::Morse),
        other => return Err(Error::Config(format!("unknown potential `{other}`"))),
    };
    let (lo, hi) = source.default_range();
    let dataset = pot.generate(n, (r_min.unwrap_or(lo), r_max.unwrap_or(hi)), seed)?;
    data::save_csv(&dataset, out)?;
    println!("wrote {} samples to {}", dataset.len(), out.display());
    Ok(ExitCode::SUCCESS)
}
