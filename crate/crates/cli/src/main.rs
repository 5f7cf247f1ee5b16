use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stochdg::harness::{self, ExperimentConfig, StudyKind, StudyResult};
use stochdg::transport::solve_emd;
use stochdg::{Error, Result};

/// Monte-Carlo RKDG runs with a posteriori Wasserstein error bounds.
#[derive(Parser)]
#[command(name = "stochdg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One ensemble on one mesh.
    Run(Common),
    /// Refine the mesh at a fixed sample set.
    SpatialStudy(Common),
    /// Grow the sample set on a fixed mesh.
    StochasticStudy(Common),
    /// Solve a transport problem given as CSV files.
    Emd(EmdArgs),
}

#[derive(Args)]
struct Common {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV output path (default: the config's `output`, else stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sample count; for stochastic studies, the largest sweep entry kept.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct EmdArgs {
    #[command(flatten)]
    common: Common,
    /// Cost matrix, one row per line.
    #[arg(long)]
    cost: Option<PathBuf>,
    /// Row weights.
    #[arg(long)]
    weights_a: Option<PathBuf>,
    /// Column weights.
    #[arg(long)]
    weights_b: Option<PathBuf>,
}

fn load(common: &Common, study: StudyKind) -> Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    config.study = study;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(k) = common.samples {
        config.samples = k;
        if study == StudyKind::StochasticStudy {
            config.sample_sweep.retain(|&s| s <= k);
        }
    }
    if let Some(out) = &common.out {
        config.output = Some(out.clone());
    }
    Ok(config)
}

fn validate(config: &ExperimentConfig) -> Result<()> {
    let warnings = config.validate()?;
    for w in warnings {
        log::warn!("{w}");
    }
    Ok(())
}

fn write_study(result: &StudyResult, out: Option<&Path>) -> Result<()> {
    let rows = result.csv_rows();
    match out {
        Some(path) => harness::emit_csv(&rows, path)?,
        None => print!("{}", harness::to_csv_string(&rows)),
    }
    Ok(())
}

fn log_orders(result: &StudyResult) {
    if result.rows.len() < 2 {
        return;
    }
    let fmt = |v: Vec<Option<f64>>| {
        v.iter()
            .map(|e| e.map_or("-".to_string(), |e| format!("{e:.2}")))
            .collect::<Vec<_>>()
            .join(" ")
    };
    log::info!("EOC error:        {}", fmt(result.eoc(|r| r.error)));
    log::info!("EOC residual:     {}", fmt(result.eoc(|r| r.e_det)));
    log::info!("EOC errorsample:  {}", fmt(result.eoc(|r| r.e0_stoch)));
    log::info!("EOC errorreconst: {}", fmt(result.eoc(|r| r.e0_det)));
}

fn run_study(common: &Common, study: StudyKind) -> Result<()> {
    let config = load(common, study)?;
    validate(&config)?;
    let result = match study {
        StudyKind::Run => {
            let row = harness::run_single(&config, config.cells, config.samples)?;
            StudyResult {
                rows: vec![row],
                ..Default::default()
            }
        }
        StudyKind::SpatialStudy => harness::run_spatial_study(&config)?,
        StudyKind::StochasticStudy => harness::run_stochastic_study(&config)?,
        StudyKind::Emd => unreachable!("handled separately"),
    };
    write_study(&result, config.output.as_deref())?;
    log_orders(&result);
    for r in &result.rows {
        if !r.is_reliable() {
            log::warn!("bound violated at h = {}, K = {}", r.h, r.samples);
        }
    }
    match result.failures.into_iter().next() {
        Some((at, e)) => {
            log::error!("sweep point {at} failed");
            Err(e)
        }
        None => Ok(()),
    }
}

fn run_emd(args: &EmdArgs) -> Result<()> {
    let config = load(&args.common, StudyKind::Emd)?;
    let pick = |flag: &Option<PathBuf>, key: &Option<PathBuf>, name: &str| {
        flag.clone()
            .or_else(|| key.clone())
            .ok_or_else(|| Error::Config(format!("emd needs --{name} or emd_{}", name.replace('-', "_"))))
    };
    let cost = harness::read_cost_matrix(&pick(&args.cost, &config.emd_cost, "cost")?)?;
    let a = harness::read_weights(&pick(&args.weights_a, &config.emd_weights_a, "weights-a")?)?;
    let b = harness::read_weights(&pick(&args.weights_b, &config.emd_weights_b, "weights-b")?)?;
    let plan = solve_emd(&a, &b, &cost)?;
    match &config.output {
        Some(path) => harness::emit_plan(&plan, path)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            harness::write_plan(&plan, &mut lock).map_err(|e| Error::Io {
                path: PathBuf::from("<stdout>"),
                source: std::io::Error::new(std::io::ErrorKind::Other, e),
            })?;
            lock.flush().ok();
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(c) => run_study(c, StudyKind::Run),
        Command::SpatialStudy(c) => run_study(c, StudyKind::SpatialStudy),
        Command::StochasticStudy(c) => run_study(c, StudyKind::StochasticStudy),
        Command::Emd(args) => run_emd(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.category(), e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
