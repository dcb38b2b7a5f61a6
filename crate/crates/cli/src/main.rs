use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{debug, info};
use rtmpc::presets::{constant_budget_sweep, solver_sweep, SolverSweep};
use rtmpc::trace::{write_budget_table, write_sweep, write_trace};
use rtmpc::{run_scenario, Preset, ScenarioConfig, Trace};

#[derive(Parser)]
#[command(name = "rtmpc", version, about = "Real-time fast-gradient MPC with an adaptive iteration budget")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Directory for the output files.
    #[arg(short, long, default_value = "out")]
    out: PathBuf,

    /// Override a scenario entry, e.g. `--set monitor.q_init=50`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset (fig1..fig8) or a scenario file and write its trace.
    Run {
        /// Preset name or path to a TOML scenario.
        scenario: String,
        #[command(flatten)]
        common: Common,
        /// File name prefix; defaults to the preset name or the file stem.
        #[arg(long)]
        stem: Option<String>,
    },
    /// Closed-loop runs with the budget held at each of several constants.
    Sweep {
        /// Preset name or path to a TOML scenario used as the base.
        #[arg(default_value = "fig6")]
        scenario: String,
        /// Budgets to try.
        #[arg(long, value_delimiter = ',', default_value = "2,5,10,20,30,50,100")]
        budgets: Vec<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Solver comparison on a single frozen instance of the fig2 scenario.
    Fig1 {
        #[command(flatten)]
        common: Common,
    },
    /// Print the full scenario for a preset or file, with overrides applied.
    Config {
        scenario: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

/// A resolved scenario argument: the preset it names, if any, and its config.
fn resolve(scenario: &str, overrides: &[String]) -> Result<(Option<Preset>, ScenarioConfig, String)> {
    let (preset, base, stem) = match scenario.parse::<Preset>() {
        Ok(p) => (Some(p), p.config(), p.name().to_string()),
        Err(_) => {
            let path = Path::new(scenario);
            if !path.exists() {
                bail!("`{scenario}` is neither a preset (fig1..fig8) nor an existing file");
            }
            let cfg = ScenarioConfig::load(path)?;
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scenario".into());
            (None, cfg, stem)
        }
    };
    let cfg = base.with_overrides(overrides).context("applying --set overrides")?;
    Ok((preset, cfg, stem))
}

fn report_trace(trace: &Trace) {
    let half = trace.final_t / 2;
    println!("intervals         {}", trace.records.len());
    println!("periods           {}", trace.final_t);
    println!("tracking cost     {:.6}", trace.tracking_cost());
    println!("mean q (2nd half) {:.3}", trace.mean_budget_from(half));
    println!(
        "solver            L = {:.6}, c = {:.6}, restart = {}",
        trace.solver.lipschitz,
        trace.solver.momentum,
        trace.solver.restart.map_or("never".to_string(), |s| s.to_string())
    );
}

fn report_sweep(sweep: &SolverSweep) {
    println!("instance          interval {} (k0 = {})", sweep.interval, sweep.k0);
    println!("{:<12} {:>14} {:>14} {:>9}", "variant", "J(0)", "J(end)", "monotone");
    for c in &sweep.curves {
        println!(
            "{:<12} {:>14.6} {:>14.6} {:>9}",
            c.label,
            c.log.initial(),
            c.log.last(),
            c.log.is_non_increasing()
        );
    }
}

fn run_fig1(cfg: &ScenarioConfig, out: &Path, stem: &str) -> Result<()> {
    let sweep = solver_sweep(cfg)?;
    let (data, meta) = write_sweep(&sweep, out, stem)?;
    info!("wrote {} and {}", data.display(), meta.display());
    report_sweep(&sweep);
    Ok(())
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { scenario, common, stem } => {
            let (preset, cfg, default_stem) = resolve(&scenario, &common.overrides)?;
            let stem = stem.unwrap_or(default_stem);
            if preset == Some(Preset::Fig1) {
                return run_fig1(&cfg, &common.out, &stem);
            }
            debug!("scenario:\n{}", cfg.to_toml_string());
            info!("running {stem} for {} periods", cfg.run.duration);
            let trace = run_scenario(&cfg)?;
            let files = write_trace(&trace, &common.out, &stem)?;
            info!(
                "wrote {}, {}, {}",
                files.signals.display(),
                files.intervals.display(),
                files.meta.display()
            );
            report_trace(&trace);
        }
        Command::Sweep { scenario, budgets, common } => {
            if budgets.is_empty() {
                bail!("no budgets given");
            }
            let (_, cfg, stem) = resolve(&scenario, &common.overrides)?;
            info!("constant-budget sweep over {budgets:?}");
            let rows = constant_budget_sweep(&cfg, &budgets)?;
            std::fs::create_dir_all(&common.out)
                .with_context(|| format!("creating {}", common.out.display()))?;
            let path = common.out.join(format!("{stem}_budgets.csv"));
            write_budget_table(&path, &rows)?;
            info!("wrote {}", path.display());
            println!("{:>5} {:>18} {:>10} {:>12}", "q", "tracking cost", "intervals", "mean K");
            for r in &rows {
                println!("{:>5} {:>18.6} {:>10} {:>12.6}", r.q, r.tracking_cost, r.intervals, r.mean_k);
            }
        }
        Command::Fig1 { common } => {
            let (_, cfg, stem) = resolve("fig1", &common.overrides)?;
            run_fig1(&cfg, &common.out, &stem)?;
        }
        Command::Config { scenario, overrides } => {
            let (_, cfg, _) = resolve(&scenario, &overrides)?;
            print!("{}", cfg.to_toml_string());
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    execute(cli.command)
}
