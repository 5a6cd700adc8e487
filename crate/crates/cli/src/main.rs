use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rotinv::geom::normalize_unit_sphere;
use rotinv::median::CenterMode;
use rotinv::net::{read_model, retrieve, write_model, NetworkParams};
use rotinv::repr::sample_and_describe;
use rotinv_harness::experiment::{evaluate, load_dataset, noise_bench, train_model, write_csv, CsvRow, HookCounters};
use rotinv_harness::io::{format_xyz, load_cloud};
use rotinv_harness::selftest::{run_selftest, write_checks};
use rotinv_harness::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "rotinv",
    version,
    about = "Rotation-invariant point cloud classification and retrieval"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the `seed` setting.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Extra `key=value` overrides applied after the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Log progress to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    /// Record wall-clock seconds in CSV output (otherwise 0).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic train/test clouds as xyz files.
    Gen,
    /// Write the layer-1 descriptor rows of one cloud.
    Extract {
        /// `.xyz`, `.ply` or `.off` input.
        #[arg(long)]
        input: PathBuf,
    },
    /// Train under the configured scenario and save the model.
    Train,
    /// Classify the test split with a saved model.
    Eval {
        /// Defaults to `<out>/model.txt`.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Rank the test split against itself by codeword similarity.
    Retrieve {
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Train with each center estimator and evaluate at every noise variance.
    NoiseBench {
        /// `geometric`, `mean` or `both`.
        #[arg(long, default_value = "both")]
        mode: String,
    },
    /// Run the invariance suite.
    Selftest {
        /// Synthetic clouds checked per class.
        #[arg(long, default_value_t = 1)]
        per_class: usize,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &common.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        cfg.apply_text(&text)
            .with_context(|| format!("in {}", path.display()))?;
    }
    for kv in &common.overrides {
        let Some((k, v)) = kv.split_once('=') else {
            bail!("override `{kv}` is not KEY=VALUE");
        };
        cfg.set(k, v)?;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn load_params(cfg: &ExperimentConfig, path: &Path) -> Result<NetworkParams<f64>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_model(BufReader::new(file), &cfg.network_config()).with_context(|| format!("reading {}", path.display()))
}

fn gen(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let data = load_dataset(cfg)?;
    let mut labels = create(out, "labels.csv")?;
    writeln!(labels, "split,file,label,class")?;
    for (split, clouds) in [("train", &data.train), ("test", &data.test)] {
        let dir = out.join(split);
        for (i, cloud) in clouds.iter().enumerate() {
            let label = cloud.label.unwrap_or_default();
            let class = &cfg.classes[label];
            let name = format!("{i:05}_{class}.xyz");
            create(&dir, &name)?.write_all(format_xyz(cloud).as_bytes())?;
            writeln!(labels, "{split},{split}/{name},{label},{class}")?;
        }
    }
    labels.flush()?;
    Ok(())
}

fn extract(cfg: &ExperimentConfig, input: &Path, out: &Path) -> Result<()> {
    let cloud = load_cloud(input, cfg.points, cfg.seed).with_context(|| format!("loading {}", input.display()))?;
    let cloud = normalize_unit_sphere(&cloud)?;
    let net = cfg.network_config();
    let grouped = sample_and_describe(&cloud.points, net.n1, net.r1, net.k1, &net.center, net.geometry_seed)?;
    let mut w = create(out, "descriptors.csv")?;
    writeln!(
        w,
        "center,slot,dp,dpm,dsm,cos_alpha,cos_beta,dpm_j,dpp_j,dps_j,cos_gamma_p,cos_gamma_m,cos_gamma_s,f_theta"
    )?;
    let k = grouped.tensor.k;
    for (row_index, chunk) in grouped.tensor.values.chunks(rotinv::repr::RI_WIDTH).enumerate() {
        let center = grouped.centers[row_index / k];
        let values: Vec<String> = chunk.iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{center},{},{}", row_index % k, values.join(","))?;
    }
    w.flush()?;
    Ok(())
}

fn train(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let data = load_dataset(cfg)?;
    let mut counters = HookCounters::default();
    let trained = train_model(cfg, cfg.scenario.train, &data.train, &mut counters)?;
    let mut model = create(out, "model.txt")?;
    write_model(&trained.trainer.params, &mut model)?;
    model.flush()?;
    create(out, "config.txt")?.write_all(cfg.to_text().as_bytes())?;
    let mut log = create(out, "train_log.csv")?;
    writeln!(log, "epoch,loss")?;
    for (i, loss) in trained.epoch_losses.iter().enumerate() {
        writeln!(log, "{},{loss}", i + 1)?;
    }
    log.flush()?;
    Ok(())
}

fn eval(cfg: &ExperimentConfig, model: &Path, out: &Path, timing: bool) -> Result<()> {
    let start = std::time::Instant::now();
    let params = load_params(cfg, model)?;
    let data = load_dataset(cfg)?;
    let e = evaluate(
        cfg,
        &params,
        cfg.scenario.test,
        &data.test,
        0.0,
        &mut HookCounters::default(),
    )?;
    let row = CsvRow {
        scenario: cfg.scenario.to_string(),
        variance: 0.0,
        accuracy: e.report.accuracy,
        map: e.report.map(),
        seed: cfg.seed,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    write_csv(&[row], timing, create(out, "eval.csv")?)?;
    let mut per_class = create(out, "per_class.csv")?;
    writeln!(per_class, "class,accuracy")?;
    for (name, acc) in cfg.classes.iter().zip(&e.report.per_class_accuracy) {
        writeln!(per_class, "{name},{acc}")?;
    }
    per_class.flush()?;
    Ok(())
}

fn retrieval(cfg: &ExperimentConfig, model: &Path, out: &Path, timing: bool) -> Result<()> {
    let start = std::time::Instant::now();
    let params = load_params(cfg, model)?;
    let data = load_dataset(cfg)?;
    let e = evaluate(
        cfg,
        &params,
        cfg.scenario.test,
        &data.test,
        0.0,
        &mut HookCounters::default(),
    )?;
    let mut w = create(out, "rankings.csv")?;
    writeln!(w, "query,label,top")?;
    for (q, code) in e.codewords.iter().enumerate() {
        let others: Vec<usize> = (0..e.codewords.len()).filter(|&g| g != q).collect();
        let gallery: Vec<Vec<f64>> = others.iter().map(|&g| e.codewords[g].clone()).collect();
        let top: Vec<String> = retrieve(code, &gallery)?
            .into_iter()
            .take(cfg.retrieval_n)
            .map(|i| others[i].to_string())
            .collect();
        writeln!(w, "{q},{},{}", data.test[q].label.unwrap_or_default(), top.join(" "))?;
    }
    w.flush()?;
    let row = CsvRow {
        scenario: cfg.scenario.to_string(),
        variance: 0.0,
        accuracy: e.report.accuracy,
        map: e.report.map(),
        seed: cfg.seed,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    write_csv(&[row], timing, create(out, "retrieval.csv")?)?;
    Ok(())
}

fn bench(cfg: &ExperimentConfig, mode: &str, out: &Path, timing: bool) -> Result<()> {
    let modes = match mode {
        "geometric" => vec![CenterMode::default()],
        "mean" => vec![CenterMode::Mean],
        "both" => vec![CenterMode::default(), CenterMode::Mean],
        other => bail!("unknown mode `{other}` (expected geometric, mean or both)"),
    };
    let data = load_dataset(cfg)?;
    let mut rows = Vec::new();
    for m in modes {
        // Keep configured median settings when the geometric mode is requested.
        let m = match (m, &cfg.network.center) {
            (CenterMode::GeometricMedian { .. }, c @ CenterMode::GeometricMedian { .. }) => *c,
            (m, _) => m,
        };
        rows.extend(noise_bench(cfg, &cfg.noise_variances, m, &data)?);
    }
    write_csv(&rows, timing, create(out, "noise.csv")?)?;
    Ok(())
}

fn selftest(cfg: &ExperimentConfig, per_class: usize, out: &Path) -> Result<bool> {
    let classes: Vec<&str> = cfg.classes.iter().map(String::as_str).collect();
    let clouds = rotinv_harness::data::gen_synthetic_dataset(&classes, per_class, cfg.points, cfg.seed)?;
    let checks = run_selftest(&clouds, &cfg.network_config(), cfg.seed)?;
    write_checks(&checks, create(out, "selftest.csv")?)?;
    for c in &checks {
        let verdict = if c.passed() { "pass" } else { "FAIL" };
        println!(
            "{verdict} {} deviation {:e} tolerance {:e}",
            c.name, c.deviation, c.tolerance
        );
    }
    Ok(checks.iter().all(|c| c.passed()))
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.common)?;
    let out = &cli.common.out;
    let timing = cli.common.timing;
    let model_path = |m: &Option<PathBuf>| m.clone().unwrap_or_else(|| out.join("model.txt"));
    match &cli.command {
        Command::Gen => gen(&cfg, out),
        Command::Extract { input } => extract(&cfg, input, out),
        Command::Train => train(&cfg, out),
        Command::Eval { model } => eval(&cfg, &model_path(model), out, timing),
        Command::Retrieve { model } => retrieval(&cfg, &model_path(model), out, timing),
        Command::NoiseBench { mode } => bench(&cfg, mode, out, timing),
        Command::Selftest { per_class } => {
            if selftest(&cfg, *per_class, out)? {
                Ok(())
            } else {
                bail!("invariance suite failed")
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.common.verbose {
        log::LevelFilter::Info
    } else {
        log::LevelFilter::Warn
    };
    env_logger::Builder::new().filter_level(level).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
