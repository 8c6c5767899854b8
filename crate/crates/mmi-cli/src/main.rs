//! Command-line front end: dataset generation, fitting, evaluation,
//! parameter sweeps, and near-net coverage experiments.
//!
//! Exit codes: 0 success, 2 user error (bad config, malformed input), 3
//! environment error (I/O failure).

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::RunConfig;
use mmi_core::io::{
    read_dataset_csv, read_meta, read_model, sidecar_path, write_dataset_csv, write_meta,
    write_model, DatasetMeta, ModelFile, SeedRecord,
};
use mmi_core::model::{derive_seed, make_ground_truth, sample_dataset, Dataset, ModelConstants};
use mmi_core::pipeline::{fit_mmi, l2_loss_mc, procrustes_dist, FitConfig, FitMode, FitResult};
use mmi_core::theory::z_bound;
use mmi_core::{net, par};

#[derive(Parser)]
#[command(name = "mmi", about = "Monotone multi-index model estimation", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset CSV and its metadata sidecar.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit a model to a dataset; writes model.json and metrics.csv.
    Fit {
        /// Dataset CSV (sidecar metadata is picked up when present).
        dataset: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config interpolation mode.
        #[arg(long, value_parser = parse_mode)]
        mode: Option<FitMode>,
    },
    /// Evaluate a fitted model against the ground truth its sidecar pins.
    Eval {
        model: PathBuf,
        sidecar: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        n_mc: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the pipeline over a grid of (n, d, seed) cells.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<FitMode>,
    },
    /// Compare empirical near-net coverage against the lemma bound.
    Netcheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Also dump the first trial's sphere points to net.csv.
        #[arg(long)]
        dump_net: bool,
    },
}

fn parse_mode(s: &str) -> Result<FitMode, String> {
    match s {
        "step" => Ok(FitMode::Step),
        "lipschitz" => Ok(FitMode::Lipschitz),
        other => Err(format!("mode must be step or lipschitz, got {other}")),
    }
}

enum CliError {
    User(String),
    Env(String),
}

impl From<mmi_core::Error> for CliError {
    fn from(e: mmi_core::Error) -> Self {
        match e {
            mmi_core::Error::Io(io) => CliError::Env(io.to_string()),
            other => CliError::User(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Env(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate { config, out, seed } => cmd_generate(&config, &out, seed),
        Command::Fit { dataset, config, out, seed, mode } => {
            cmd_fit(&dataset, &config, &out, seed, mode)
        }
        Command::Eval { model, sidecar, out, n_mc, seed } => {
            cmd_eval(&model, &sidecar, &out, n_mc, seed)
        }
        Command::Sweep { config, out, seed, mode } => cmd_sweep(&config, &out, seed, mode),
        Command::Netcheck { config, out, seed, dump_net } => {
            cmd_netcheck(&config, &out, seed, dump_net)
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::User(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Env(msg)) => {
            eprintln!("environment error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::User(format!("config {}: {e}", path.display())))
}

fn ensure_out_dir(out: &Path) -> CliResult<()> {
    std::fs::create_dir_all(out)?;
    // probe writability early so all write failures map to exit 3
    let probe = out.join(".mmi-write-probe");
    std::fs::write(&probe, b"")?;
    std::fs::remove_file(&probe)?;
    Ok(())
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn cmd_generate(config: &Path, out: &Path, seed_flag: Option<u64>) -> CliResult<()> {
    let cfg = load_config(config)?;
    let n = cfg
        .n
        .ok_or_else(|| CliError::User("config field n is required for generate".into()))?;
    let seed = seed_flag.unwrap_or(cfg.seed);
    let constants = cfg.constants();
    constants.validate().map_err(CliError::from)?;
    ensure_out_dir(out)?;
    let gt = make_ground_truth(&constants, seed)?;
    let data = sample_dataset(&gt, n, seed)?;
    let csv_path = out.join("dataset.csv");
    write_dataset_csv(&csv_path, &data)?;
    write_meta(&sidecar_path(&csv_path), &DatasetMeta::from_constants(&constants, seed))?;
    println!("wrote {} ({} rows)", csv_path.display(), n);
    Ok(())
}

/// Loads a dataset and, when the sidecar exists, checks it against the
/// config and returns it.
fn load_dataset(
    dataset: &Path,
    constants: &ModelConstants,
) -> CliResult<(Dataset, Option<DatasetMeta>)> {
    let (x, y) = read_dataset_csv(dataset)?;
    if x.ncols() != constants.d {
        return Err(CliError::User(format!(
            "dataset has d = {} columns but the config says d = {}",
            x.ncols(),
            constants.d
        )));
    }
    let meta_path = sidecar_path(dataset);
    let meta = if meta_path.exists() {
        let meta = read_meta(&meta_path)?;
        let from_meta = meta.to_constants();
        let matches = from_meta.d == constants.d
            && from_meta.k == constants.k
            && from_meta.s_star == constants.s_star
            && from_meta.r == constants.r
            && from_meta.c == constants.c
            && from_meta.b == constants.b
            && from_meta.eta == constants.eta;
        if !matches {
            return Err(CliError::User(format!(
                "sidecar {} disagrees with the config constants",
                meta_path.display()
            )));
        }
        Some(meta)
    } else {
        None
    };
    Ok((Dataset { x, y, constants: *constants }, meta))
}

fn fit_config_from(cfg: &RunConfig, seed: u64, mode: FitMode) -> FitConfig {
    let mut fit_cfg = FitConfig::new(cfg.n0, derive_seed(seed, 0x6e65_7473), mode);
    fit_cfg.tau = cfg.tau;
    fit_cfg.lambda = cfg.lambda;
    fit_cfg
}

struct FitMetrics {
    empirical_loss: f64,
    procrustes: Option<f64>,
    l2_mc: Option<f64>,
}

fn gt_metrics(
    fit: &FitResult,
    meta: &DatasetMeta,
    cfg: &RunConfig,
    n_mc: usize,
    seed: u64,
) -> CliResult<(f64, f64)> {
    let constants = cfg.constants();
    let gt = make_ground_truth(&constants, meta.seed)?;
    let predictor = fit.predictor()?;
    let l2 = l2_loss_mc(&|x: &[f64]| predictor.predict(x), &gt, n_mc, derive_seed(seed, 0x6d63))?;
    let dist = procrustes_dist(&fit.qn, &gt.q_star)?;
    Ok((dist, l2))
}

fn run_fit(
    cfg: &RunConfig,
    data: &Dataset,
    meta: Option<&DatasetMeta>,
    seed: u64,
    mode: FitMode,
) -> CliResult<(FitResult, FitMetrics)> {
    if data.len() % 2 != 0 {
        return Err(CliError::User(format!(
            "sample split requires even N, dataset has {} rows",
            data.len()
        )));
    }
    let fit_cfg = fit_config_from(cfg, seed, mode);
    let fit = fit_mmi(data, &fit_cfg)?;
    let (procrustes, l2_mc) = match meta {
        Some(meta) => {
            let (dist, l2) = gt_metrics(&fit, meta, cfg, cfg.n_mc, seed)?;
            (Some(dist), Some(l2))
        }
        None => (None, None),
    };
    let empirical_loss = fit.empirical_loss;
    Ok((fit, FitMetrics { empirical_loss, procrustes, l2_mc }))
}

fn cmd_fit(
    dataset: &Path,
    config: &Path,
    out: &Path,
    seed_flag: Option<u64>,
    mode_flag: Option<FitMode>,
) -> CliResult<()> {
    let started = Instant::now();
    let cfg = load_config(config)?;
    let seed = seed_flag.unwrap_or(cfg.seed);
    let mode = mode_flag.unwrap_or(cfg.mode);
    let constants = cfg.constants();
    constants.validate().map_err(CliError::from)?;
    ensure_out_dir(out)?;
    let (data, meta) = load_dataset(dataset, &constants)?;
    let (fit, metrics) = run_fit(&cfg, &data, meta.as_ref(), seed, mode)?;

    let model = ModelFile::from_fit(
        &fit,
        &constants,
        SeedRecord { config: seed, net: derive_seed(seed, 0x6e65_7473) },
    );
    write_model(&out.join("model.json"), &model)?;

    let wall_ms = started.elapsed().as_millis();
    let mut csv = String::from("empiricalLoss,procrustesDist,l2LossMC,wallTimeMs\n");
    csv.push_str(&format!(
        "{},{},{},{}\n",
        fmt(metrics.empirical_loss),
        metrics.procrustes.map(fmt).unwrap_or_default(),
        metrics.l2_mc.map(fmt).unwrap_or_default(),
        wall_ms
    ));
    std::fs::write(out.join("metrics.csv"), csv)?;
    println!(
        "fit: empirical loss {:.6}, sdp converged {}",
        fit.empirical_loss, fit.sdp_converged
    );
    Ok(())
}

fn cmd_eval(model: &Path, sidecar: &Path, out: &Path, n_mc: usize, seed: u64) -> CliResult<()> {
    if n_mc == 0 {
        return Err(CliError::User("n-mc must be at least 1".into()));
    }
    let model = read_model(model)?;
    let meta = read_meta(sidecar)?;
    ensure_out_dir(out)?;
    let mut constants = meta.to_constants();
    constants.theta = model.constants.theta;
    let gt = make_ground_truth(&constants, meta.seed)?;
    let fit = model.to_fit()?;
    let predictor = fit.predictor()?;
    let l2 = l2_loss_mc(&|x: &[f64]| predictor.predict(x), &gt, n_mc, derive_seed(seed, 0x6d63))?;
    let dist = procrustes_dist(&fit.qn, &gt.q_star)?;
    // loss-gap bound implied by the schedule's subspace guarantee alone
    let pb = 4.0 * 2f64.sqrt() * constants.s_star as f64 * model.lambda / gt.constants.rho_zero;
    let z = z_bound(0.0, pb, constants.c, constants.eta, constants.k, constants.r);
    let mut csv = String::from("l2LossMC,procrustesDist,zBoundAtSchedule\n");
    csv.push_str(&format!("{},{},{}\n", fmt(l2), fmt(dist), fmt(z)));
    std::fs::write(out.join("eval.csv"), csv)?;
    println!("eval: l2 {l2:.6}, procrustes {dist:.6}");
    Ok(())
}

fn cmd_sweep(
    config: &Path,
    out: &Path,
    seed_flag: Option<u64>,
    mode_flag: Option<FitMode>,
) -> CliResult<()> {
    let cfg = load_config(config)?;
    let base_seed = seed_flag.unwrap_or(cfg.seed);
    let mode = mode_flag.unwrap_or(cfg.mode);
    let n_grid = match (&cfg.n_grid, cfg.n) {
        (Some(g), _) if !g.is_empty() => g.clone(),
        (_, Some(n)) => vec![n],
        _ => return Err(CliError::User("sweep needs nGrid or n".into())),
    };
    let d_grid = match &cfg.d_grid {
        Some(g) if !g.is_empty() => g.clone(),
        _ => vec![cfg.d],
    };
    let seeds = cfg.seeds.clone().unwrap_or_else(|| vec![base_seed]);
    if n_grid.iter().any(|n| n % 2 != 0 || *n == 0) {
        return Err(CliError::User("every sweep n must be even and positive".into()));
    }
    ensure_out_dir(out)?;

    let mut cells: Vec<(usize, usize, u64)> = Vec::new();
    for &n in &n_grid {
        for &d in &d_grid {
            for &seed in &seeds {
                cells.push((n, d, seed));
            }
        }
    }
    cells.sort_unstable();

    let rows: Vec<CliResult<String>> = par::map_indexed(cells.len(), |idx| {
        let (n, d, seed) = cells[idx];
        let constants = cfg.constants_for_d(d);
        constants.validate().map_err(CliError::from)?;
        let gt = make_ground_truth(&constants, seed)?;
        let data = sample_dataset(&gt, n, derive_seed(seed, 0x6461_7461))?;
        let fit_cfg = fit_config_from(&cfg, seed, mode);
        let fit = fit_mmi(&data, &fit_cfg)?;
        let predictor = fit.predictor()?;
        let l2 = l2_loss_mc(
            &|x: &[f64]| predictor.predict(x),
            &gt,
            cfg.n_mc,
            derive_seed(seed, 0x6d63),
        )?;
        let dist = procrustes_dist(&fit.qn, &gt.q_star)?;
        Ok(format!(
            "{n},{d},{seed},{},{},{}\n",
            fmt(l2),
            fmt(dist),
            fmt(fit.empirical_loss)
        ))
    });

    let mut csv = String::from("n,d,seed,l2LossMC,procrustesDist,empiricalLoss\n");
    for row in rows {
        csv.push_str(&row?);
    }
    std::fs::write(out.join("sweep.csv"), csv)?;
    println!("sweep: {} cells", cells.len());
    Ok(())
}

fn cmd_netcheck(config: &Path, out: &Path, seed_flag: Option<u64>, dump_net: bool) -> CliResult<()> {
    let cfg = load_config(config)?;
    let seed = seed_flag.unwrap_or(cfg.seed);
    if cfg.trials == 0 {
        return Err(CliError::User("trials must be at least 1".into()));
    }
    ensure_out_dir(out)?;
    if dump_net {
        // the same net the first trial draws
        let first = net::build_net(cfg.n0, cfg.k, cfg.r, derive_seed(seed, 1))?;
        mmi_core::io::write_net_csv(&out.join("net.csv"), &first)?;
    }
    let rows = net::coverage_experiment(cfg.k, cfg.r, cfg.n0, &cfg.eps_list, cfg.trials, seed)?;
    let mut csv = String::from("eps,empiricalCoverage,lemmaBound\n");
    for row in rows {
        csv.push_str(&format!(
            "{},{},{}\n",
            fmt(row.eps),
            fmt(row.empirical_coverage),
            fmt(row.lemma_bound)
        ));
    }
    std::fs::write(out.join("netcheck.csv"), csv)?;
    println!("netcheck: {} radii, {} trials", cfg.eps_list.len(), cfg.trials);
    Ok(())
}
