//! Command-line harness: loads a scenario configuration, runs one of the
//! sweep pipelines and writes CSV data files.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 on numerical
//! failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use satlink::scenario::{self, ScenarioConfig};
use satlink::ModelError;

#[derive(Parser)]
#[command(
    name = "satlink",
    about = "Satellite-to-ground optical channel and decoy-state QKD simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// JSON scenario configuration file (defaults to the built-in baseline)
    #[arg(long)]
    config: Option<PathBuf>,

    /// named preset: fig2 | fig3 | fig5 | fig6 | fig9
    #[arg(long)]
    preset: Option<String>,

    /// output directory for data files
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Monte Carlo base seed override
    #[arg(long)]
    seed: Option<u64>,

    /// apparent-zenith grid in degrees as "start:stop:step"
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Slant range, elongation, extinction and mean transmittance vs zenith angle
    LossBudget(CommonOpts),
    /// Channel moments (beam spread, wander, scintillation) vs zenith angle
    TurbStats(CommonOpts),
    /// Probability distribution of transmittance at one zenith angle
    Pdt {
        #[command(flatten)]
        common: CommonOpts,
        /// apparent zenith angle (degrees)
        #[arg(long, default_value_t = 0.0)]
        za: f64,
        /// number of density table points
        #[arg(long, default_value_t = 256)]
        points: usize,
    },
    /// QBER and secret-key rate along one satellite pass
    QkdPass(CommonOpts),
    /// Layered standard-atmosphere table
    AtmosphereTables {
        #[command(flatten)]
        common: CommonOpts,
        /// altitude step (m)
        #[arg(long, default_value_t = 1000.0)]
        step: f64,
    },
}

fn load_config(opts: &CommonOpts) -> satlink::Result<ScenarioConfig> {
    let mut cfg = match (&opts.config, &opts.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                ModelError::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            ScenarioConfig::from_json(&text)?
        }
        (None, Some(p)) => scenario::preset(p)?,
        (None, None) => ScenarioConfig::default(),
    };
    if opts.config.is_some() {
        if let Some(p) = &opts.preset {
            // preset on top of an explicit config is ambiguous
            return Err(ModelError::Config(format!(
                "--preset {p} cannot be combined with --config"
            )));
        }
    }
    if let Some(seed) = opts.seed {
        cfg.sweep.seed = seed;
    }
    if let Some(grid) = &opts.grid {
        let parts: Vec<&str> = grid.split(':').collect();
        if parts.len() != 3 {
            return Err(ModelError::Config(format!(
                "grid '{grid}' must have the form start:stop:step"
            )));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| ModelError::Config(format!("bad grid component '{s}': {e}")))
        };
        cfg.sweep.za_start_deg = parse(parts[0])?;
        cfg.sweep.za_stop_deg = parse(parts[1])?;
        cfg.sweep.za_step_deg = parse(parts[2])?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> satlink::Result<PathBuf> {
    std::fs::create_dir_all(dir)
        .map_err(|e| ModelError::Config(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| ModelError::Config(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn run(cli: Cli) -> satlink::Result<()> {
    match cli.command {
        Command::LossBudget(opts) => {
            let cfg = load_config(&opts)?;
            let rows = scenario::run_loss_budget(&cfg)?;
            let path = write_file(&opts.out, "loss_budget.csv", &scenario::loss_budget_csv(&cfg, &rows))?;
            println!("wrote {} ({} rows)", path.display(), rows.len());
        }
        Command::TurbStats(opts) => {
            let cfg = load_config(&opts)?;
            let rows = scenario::run_turbulence_stats(&cfg)?;
            let path = write_file(&opts.out, "turb_stats.csv", &scenario::turb_stats_csv(&cfg, &rows))?;
            println!("wrote {} ({} rows)", path.display(), rows.len());
        }
        Command::Pdt { common, za, points } => {
            let cfg = load_config(&common)?;
            let (model, table) = scenario::run_pdt(&cfg, za, points)?;
            let path = write_file(&common.out, "pdt.csv", &scenario::pdt_csv(&cfg, za, &model, &table))?;
            println!("wrote {} ({} rows)", path.display(), table.len());
        }
        Command::QkdPass(opts) => {
            let cfg = load_config(&opts)?;
            let rows = scenario::run_qkd_pass(&cfg)?;
            let path = write_file(&opts.out, "qkd_pass.csv", &scenario::qkd_pass_csv(&cfg, &rows))?;
            println!("wrote {} ({} rows)", path.display(), rows.len());
        }
        Command::AtmosphereTables { common, step } => {
            let rows = scenario::run_atmosphere_tables(step)?;
            let path = write_file(&common.out, "atmosphere.csv", &scenario::atmosphere_csv(&rows))?;
            println!("wrote {} ({} rows)", path.display(), rows.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (ModelError::Config(_) | ModelError::Domain(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
