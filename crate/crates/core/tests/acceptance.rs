//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use taafs::basis::{Basis, BasisSpec, Family};
use taafs::bench::{self, BenchCell, BenchPlan, RUNS_FILE};
use taafs::checkpoint::Checkpoint;
use taafs::config::RunConfig;
use taafs::data::{gen_morse, parse_csv, write_csv};
use taafs::net::{FixedActivation, Model};
use taafs::taaf::curve::{curves_to_csv, parse_curves};
use taafs::taaf::{
    parameter_count, ActivationChoice, Normalizer, Scheme, TaafConfig, Topology,
};
use taafs::train::{run_training, write_outputs, CHECKPOINT_FILE, DIVERGENCE_FILE, REPORT_FILE};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:.0?}"))
}

fn ac1_accounting() -> Check {
    let start = Instant::now();
    let dp = Topology::deep_potential();
    let expect = [(Scheme::Global, 8), (Scheme::PerNetwork, 16), (Scheme::PerLayer, 48)];
    let fixed = parameter_count(&dp, &ActivationChoice::Fixed(FixedActivation::Tanh)).map_err(|e| e.to_string())?;
    let mut got = Vec::new();
    for (scheme, added) in expect {
        let choice = ActivationChoice::Taaf(TaafConfig::new(BasisSpec::bspline(5, 3), scheme));
        let c = parameter_count(&dp, &choice).map_err(|e| e.to_string())?;
        ensure(c.taaf_added == added && c.total == fixed.total + added, || {
            format!("{scheme}: +{} (total {}), expected +{added}", c.taaf_added, c.total)
        })?;
        got.push(format!("{}=+{}", scheme.name(), c.taaf_added));
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("{} over {} baseline", got.join(" "), fixed.total))
}

fn sweep(n: usize, lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
}

fn ac2_basis_identities() -> Check {
    let start = Instant::now();
    let mut worst_pu = 0.0f64;
    let layouts = [(5, 3, -1.0, 1.0), (1, 0, -1.0, 1.0), (10, 2, -1.0, 1.0), (20, 5, -1.0, 1.0), (7, 3, -3.0, 2.0)];
    for (g, p, lo, hi) in layouts {
        let basis = Basis::new(BasisSpec::bspline(g, p).with_domain(lo, hi)).map_err(|e| e.to_string())?;
        let knots = basis.knots();
        for x in sweep(1000, lo, hi) {
            let values = basis.eval(x);
            worst_pu = worst_pu.max((values.iter().sum::<f64>() - 1.0).abs());
            for (i, &v) in values.iter().enumerate() {
                let right = knots[i + p + 1];
                let inside = knots[i] <= x && (x < right || (x == hi && right == hi));
                ensure(inside || v == 0.0, || format!("G={g} p={p}: B_{i}({x}) = {v:e} outside its support"))?;
            }
            let nonzero = values.iter().filter(|&&v| v != 0.0).count();
            ensure(nonzero <= p + 1, || format!("G={g} p={p}: {nonzero} nonzero at {x}"))?;
        }
    }
    ensure(worst_pu <= 1e-12, || format!("partition of unity off by {worst_pu:e}"))?;

    let mut worst_bound = 0.0f64;
    let mut worst_trig = 0.0f64;
    for degree in [7, 20] {
        let basis = Basis::new(BasisSpec::new(Family::Chebyshev1).with_degree(degree)).map_err(|e| e.to_string())?;
        for x in sweep(1000, -1.0, 1.0) {
            worst_bound = basis.eval(x).iter().fold(worst_bound, |m, v| m.max(v.abs()));
        }
        for t in sweep(1000, 0.0, std::f64::consts::PI) {
            for (n, v) in basis.eval(t.cos()).iter().enumerate() {
                worst_trig = worst_trig.max((v - (n as f64 * t).cos()).abs());
            }
        }
    }
    ensure(worst_bound <= 1.0 + 1e-12, || format!("max |T_n| = {worst_bound}"))?;
    ensure(worst_trig <= 1e-10, || format!("T_n(cos t) - cos(nt) = {worst_trig:e}"))?;

    for family in Family::ALL {
        let basis = Basis::new(BasisSpec::new(family)).map_err(|e| e.to_string())?;
        for x in sweep(1000, -1.0, 1.0) {
            ensure(basis.eval(x).iter().chain(basis.derivative(x).iter()).all(|v| v.is_finite()), || {
                format!("{family}: non-finite value at {x}")
            })?;
        }
    }
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!(
        "unity err {worst_pu:.1e}, max|T_n| {worst_bound}, trig err {worst_trig:.1e}, {:.2?}",
        start.elapsed()
    ))
}

fn ac3_gradient_oracle() -> Check {
    let start = Instant::now();
    let mut overall = 0.0f64;
    for (i, act) in common::all_activations().iter().enumerate() {
        let (e, what) = common::gradient_sweep(act, 100, 100 + i as u64);
        ensure(e <= 1e-5, || format!("{act}: rel err {e:e} at {what}"))?;
        overall = overall.max(e);
    }
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!(
        "{} activations x 100 models, worst rel err {overall:.1e}, {:.1?}",
        common::all_activations().len(),
        start.elapsed()
    ))
}

fn ac4_fixed_embedding() -> Check {
    let mut topologies = common::small_topologies();
    for text in [taafs::config::DEFAULT_TOPOLOGY, "embedding[1]:25,25,25;fitting[25]:50,50,50,1"] {
        topologies.push(Topology::parse(text, 4).map_err(|e| e.to_string())?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for topo in &topologies {
        for scheme in Scheme::ALL {
            let mut tanh = Model::new(topo.clone(), ActivationChoice::Fixed(FixedActivation::Tanh), rng.random())
                .map_err(|e| e.to_string())?;
            for layer in tanh.layers_mut() {
                for b in layer.biases_mut() {
                    *b = rng.random_range(-0.5..0.5);
                }
            }
            let cfg = TaafConfig {
                spec: BasisSpec::new(Family::Chebyshev1),
                normalizer: Normalizer::Tanh,
                bias: false,
                scheme,
            };
            let mut cheb = Model::new(topo.clone(), ActivationChoice::Taaf(cfg), 0).map_err(|e| e.to_string())?;
            cheb.copy_dense_from(&tanh).map_err(|e| e.to_string())?;
            for unit in cheb.units_mut() {
                let theta = unit.theta_mut();
                theta.fill(0.0);
                theta[1] = 1.0;
            }
            for _ in 0..20 {
                let x: Vec<f64> = (0..topo.input_dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
                worst = worst.max((cheb.predict(&x) - tanh.predict(&x)).abs());
                cases += 1;
            }
        }
    }
    ensure(worst <= 1e-10, || format!("max deviation {worst:e}"))?;
    Ok(format!("{} topologies x 4 schemes, {cases} inputs, max deviation {worst:.1e}", topologies.len()))
}

struct BenchOutcome {
    dataset: &'static str,
    dir: tempfile::TempDir,
    table: String,
    tanh: f64,
    bspline: f64,
}

fn run_benches() -> Result<Vec<BenchOutcome>, String> {
    let mut out = Vec::new();
    for dataset in ["lj", "morse"] {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut base = RunConfig::default();
        base.set("dataset", dataset).map_err(|e| e.to_string())?;
        assert_eq!((base.n_samples, base.epochs), (2000, 30));
        let plan = BenchPlan {
            base,
            cells: vec!["tanh".parse::<BenchCell>().unwrap(), "bspline:scheme=per_layer".parse().unwrap()],
            seeds: vec![1, 2, 3, 4, 5],
        };
        let result = bench::run_bench(&plan, Some(dir.path())).map_err(|e| e.to_string())?;
        result.write(dir.path()).map_err(|e| e.to_string())?;
        let failed: usize = result.summary.iter().map(|s| s.failed).sum();
        ensure(failed == 0, || format!("{dataset}: {failed} runs failed"))?;
        let medians: Vec<f64> = result.summary.iter().map(|s| s.median_rmse.unwrap_or(f64::NAN)).collect();
        out.push(BenchOutcome {
            dataset,
            table: result.pretty(),
            tanh: medians[0],
            bspline: medians[1],
            dir,
        });
    }
    Ok(out)
}

fn ac5_accuracy(benches: &[BenchOutcome], elapsed: Duration) -> Check {
    for b in benches {
        println!("  {} (2000 samples, 30 epochs, seeds 1-5):", b.dataset);
        for line in b.table.lines() {
            println!("    {line}");
        }
    }
    within(elapsed, Duration::from_secs(600))?;
    let mut parts = Vec::new();
    for b in benches {
        ensure(b.bspline <= b.tanh, || {
            format!("{}: per_layer bspline median {:.4e} > tanh median {:.4e}", b.dataset, b.bspline, b.tanh)
        })?;
        parts.push(format!("{} {:.1}%", b.dataset, 100.0 * (b.bspline / b.tanh)));
    }
    Ok(format!("bspline/tanh median rmse: {}, {:.1?}", parts.join(", "), elapsed))
}

/// Validation column of a report file, read without the library parser.
fn val_column(path: &Path) -> Result<Vec<f64>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("epoch"))
        .map(|l| {
            l.split(',')
                .nth(2)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| format!("{}: bad row `{l}`", path.display()))
        })
        .collect()
}

fn ac6_epochs_to_target(benches: &[BenchOutcome]) -> Check {
    let mut checked = 0;
    let mut reached = 0;
    for b in benches {
        let root = b.dir.path();
        let runs = std::fs::read_to_string(root.join(RUNS_FILE)).map_err(|e| e.to_string())?;
        for line in runs.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            let (label, seed): (&str, u64) = (cols[0], cols[1].parse().map_err(|_| line.to_string())?);
            let curve = val_column(&bench::run_dir(root, label, seed).join(REPORT_FILE))?;
            let expect = if label == "tanh" {
                curve.len().to_string()
            } else {
                let base = val_column(&bench::run_dir(root, "tanh", seed).join(REPORT_FILE))?;
                let target = *base.last().ok_or("empty baseline report")?;
                let mut first = None;
                for (i, &v) in curve.iter().enumerate() {
                    if v <= target {
                        first = Some(i + 1);
                        break;
                    }
                }
                if first.is_some() {
                    reached += 1;
                }
                first.map_or("not_reached".to_string(), |e| e.to_string())
            };
            ensure(cols[8] == expect, || {
                format!("{} {label} seed {seed}: table says {}, rescan says {expect}", b.dataset, cols[8])
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} rows agree with the on-disk rescan ({reached} cells reached the target)"))
}

fn ac7_determinism() -> Check {
    let mut cfg = RunConfig::default();
    cfg.set("activation", "bspline").map_err(|e| e.to_string())?;
    cfg.epochs = 5;
    cfg.n_samples = 500;
    let a = run_training(&cfg).map_err(|e| e.to_string())?;
    let b = run_training(&cfg).map_err(|e| e.to_string())?;
    ensure(a.report.to_csv() == b.report.to_csv(), || "reports differ between identical runs".into())?;
    let ca = Checkpoint::new(a.config.clone(), a.stats.clone(), a.model.clone(), 5);
    let cb = Checkpoint::new(b.config.clone(), b.stats.clone(), b.model.clone(), 5);
    let json = ca.to_json().map_err(|e| e.to_string())?;
    ensure(json == cb.to_json().map_err(|e| e.to_string())?, || "checkpoints differ between identical runs".into())?;

    // files on disk
    let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    write_outputs(&a, da.path()).map_err(|e| e.to_string())?;
    write_outputs(&b, db.path()).map_err(|e| e.to_string())?;
    for f in [REPORT_FILE, CHECKPOINT_FILE, "curves/epoch_005.csv"] {
        let (x, y) = (std::fs::read(da.path().join(f)), std::fs::read(db.path().join(f)));
        ensure(matches!((&x, &y), (Ok(x), Ok(y)) if x == y), || format!("{f} differs"))?;
    }

    let back = Checkpoint::load(&da.path().join(CHECKPOINT_FILE)).map_err(|e| e.to_string())?;
    ensure(back.model == a.model && back.stats == a.stats && back.config == a.config, || {
        "checkpoint round trip changed the model".into()
    })?;
    let probe = [1.3, 1.0 / 1.3, 1.3f64.powi(-6), 1.3f64.powi(-12)];
    ensure(
        back.predict_energy(&probe).unwrap().to_bits() == ca.predict_energy(&probe).unwrap().to_bits(),
        || "reloaded predictions differ".into(),
    )?;

    let ds = gen_morse(300, (0.8, 3.0), 11).map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    write_csv(&ds, &mut buf).map_err(|e| e.to_string())?;
    let ds_back = parse_csv(std::str::from_utf8(&buf).unwrap(), Path::new("mem.csv")).map_err(|e| e.to_string())?;
    ensure(ds_back == ds, || "dataset csv round trip is lossy".into())?;

    let curves: Vec<_> = a.curves.iter().flat_map(|(_, c)| c.iter().cloned()).collect();
    let curves_back = parse_curves(&curves_to_csv(&curves), Path::new("mem.csv")).map_err(|e| e.to_string())?;
    ensure(curves_back == curves, || "curve csv round trip is lossy".into())?;

    let report_back = taafs::train::parse_report(&a.report.to_csv(), Path::new("mem.csv")).map_err(|e| e.to_string())?;
    ensure(
        report_back.rows.len() == a.report.epochs.len()
            && report_back.rows.iter().zip(&a.report.epochs).all(|(r, e)| r.val_rmse == e.val_rmse && r.train_rmse == e.train_rmse),
        || "report csv round trip is lossy".into(),
    )?;
    Ok(format!("bit-identical reruns; checkpoint, dataset, curve ({} curves) and report round trips lossless", curves.len()))
}

fn ac8_divergence() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = Command::new(env!("CARGO_BIN_EXE_taafs"))
        .args(["train", "--out", dir.path().to_str().unwrap()])
        .args(["--set", "activation=bspline", "--set", "scheme=per_neuron", "--set", "lr=1e300"])
        .args(["--set", "epochs=5", "--set", "n_samples=400"])
        .output()
        .map_err(|e| e.to_string())?;
    let stderr = String::from_utf8_lossy(&out.stderr);
    ensure(out.status.code() == Some(2), || format!("exit code {:?}: {stderr}", out.status.code()))?;
    ensure(!stderr.contains("panicked"), || format!("panic: {stderr}"))?;
    let report = std::fs::read_to_string(dir.path().join(DIVERGENCE_FILE)).map_err(|e| format!("no divergence report: {e}"))?;
    ensure(report.contains("status=diverged"), || format!("unexpected report: {report}"))?;
    let epoch = report.lines().find_map(|l| l.strip_prefix("epoch=")).unwrap_or("?").to_string();
    Ok(format!("exit code 2, divergence report at epoch {epoch}"))
}

fn main() {
    let mut failures = 0;
    let mut report = |id: &str, name: &str, check: Check| {
        match check {
            Ok(detail) => println!("[{id}] {name}: PASS ({detail})"),
            Err(why) => {
                failures += 1;
                println!("[{id}] {name}: FAIL ({why})");
            }
        }
    };
    report("AC1", "parameter accounting", ac1_accounting());
    report("AC2", "basis identities", ac2_basis_identities());
    report("AC3", "gradient oracle", ac3_gradient_oracle());
    report("AC4", "fixed-baseline embedding", ac4_fixed_embedding());
    let start = Instant::now();
    match run_benches() {
        Ok(benches) => {
            let elapsed = start.elapsed();
            report("AC5", "accuracy vs fixed tanh", ac5_accuracy(&benches, elapsed));
            report("AC6", "epochs-to-target", ac6_epochs_to_target(&benches));
        }
        Err(e) => {
            report("AC5", "accuracy vs fixed tanh", Err(e.clone()));
            report("AC6", "epochs-to-target", Err(e));
        }
    }
    report("AC7", "determinism and serialization", ac7_determinism());
    report("AC8", "divergence handling", ac8_divergence());
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
