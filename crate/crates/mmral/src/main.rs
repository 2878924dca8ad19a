//! Command-line front end: run single scenarios, run named experiment
//! presets, validate configurations, and inspect the arm catalog.

use clap::{Args, Parser, Subcommand};
use mmral::action::build_catalog;
use mmral::config::{parse_config, ScenarioConfig};
use mmral::engine::{metrics_csv, run, tables_csv, AllocatorKind};
use mmral::preset::{preset_by_name, run_preset, Scale, PRESET_NAMES};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "mmral",
    version,
    about = "Multi-satellite downlink simulator with per-satellite learning resource allocation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Scenario selection shared by the subcommands. Precedence, lowest to
/// highest: scale defaults, config file, MMRAL_* environment variables,
/// command-line flags.
#[derive(Args, Debug, Clone)]
struct ScenarioArgs {
    /// Base scenario size: desk or paper
    #[arg(long, default_value = "desk", env = "MMRAL_SCALE")]
    scale: String,

    /// TOML file overriding individual base fields
    #[arg(long, env = "MMRAL_CONFIG")]
    config: Option<PathBuf>,

    /// RNG seed
    #[arg(long, env = "MMRAL_SEED")]
    seed: Option<u64>,

    /// Exploration rate in [0, 1]
    #[arg(long, env = "MMRAL_EPSILON")]
    epsilon: Option<f64>,

    /// Iteration budget
    #[arg(long, env = "MMRAL_ITERATIONS")]
    iterations: Option<u64>,

    /// Allocator: mmral, random, power_only, channel_only, beam_channel,
    /// or full_power_beam_channel
    #[arg(long, default_value = "mmral", env = "MMRAL_ALLOCATOR")]
    allocator: String,
}

impl ScenarioArgs {
    fn build(&self) -> anyhow::Result<(ScenarioConfig, AllocatorKind)> {
        let scale: Scale = self.scale.parse().map_err(anyhow::Error::msg)?;
        let mut config = match scale {
            Scale::Desk => ScenarioConfig::desk(),
            Scale::Paper => ScenarioConfig::paper_scale(),
        };
        if let Some(path) = &self.config {
            config = parse_config(&path.to_string_lossy(), &config)?;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(eps) = self.epsilon {
            config.epsilon = eps;
        }
        if let Some(t) = self.iterations {
            config.iterations = t;
        }
        let kind: AllocatorKind = self.allocator.parse().map_err(anyhow::Error::msg)?;
        config.validate()?;
        Ok((config, kind))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario; writes metrics.csv and tables.csv to --out
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,

        /// Output directory
        #[arg(long, default_value = "out", env = "MMRAL_OUT")]
        out: PathBuf,
    },
    /// Run a named experiment preset (omit the name to list them)
    Preset {
        /// Preset name; see --help or run without a name for the list
        name: Option<String>,

        /// Preset scale: desk or paper
        #[arg(long, default_value = "desk", env = "MMRAL_SCALE")]
        scale: String,

        /// Output directory
        #[arg(long, default_value = "out", env = "MMRAL_OUT")]
        out: PathBuf,

        /// Comma-separated seeds overriding the preset's defaults
        #[arg(long)]
        seeds: Option<String>,
    },
    /// Check a scenario configuration and report the first problem
    Validate {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Print the arm pools the chosen allocator would search
    DumpCatalog {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenario, out } => {
            let (config, kind) = scenario.build()?;
            let result = run(&config, kind)?;
            std::fs::create_dir_all(&out)?;
            let metrics_path = out.join("metrics.csv");
            std::fs::write(&metrics_path, metrics_csv(&result.metrics, config.n_leos))?;
            let tables_path = out.join("tables.csv");
            std::fs::write(&tables_path, tables_csv(&result))?;
            println!("allocator: {kind}");
            println!("seed: {}", config.seed);
            println!("iterations: {}", config.iterations);
            println!("trailing window: {} iterations", result.summary.window);
            println!(
                "trailing mean network rate: {:.3} Mbps",
                result.summary.trailing_mean_bps / 1e6
            );
            println!(
                "outage probability: {:.4}",
                result.summary.outage_probability
            );
            println!("metrics: {}", metrics_path.display());
            println!("tables: {}", tables_path.display());
        }
        Command::Preset {
            name,
            scale,
            out,
            seeds,
        } => {
            let Some(name) = name else {
                println!("available presets:");
                for n in PRESET_NAMES {
                    println!("  {n}");
                }
                return Ok(());
            };
            let scale: Scale = scale.parse().map_err(anyhow::Error::msg)?;
            let mut preset = preset_by_name(&name, scale)?;
            if let Some(list) = seeds {
                preset.seeds = list
                    .split(',')
                    .map(|x| x.trim().parse::<u64>())
                    .collect::<Result<_, _>>()?;
            }
            let summaries = run_preset(&preset, &out)?;
            println!(
                "preset: {} ({} points x {} seeds)",
                preset.name,
                preset.points.len(),
                preset.seeds.len()
            );
            for s in &summaries {
                println!(
                    "  {:<28} {:>12.3} Mbps  outage {:.4}",
                    s.point,
                    s.mean_trailing_bps() / 1e6,
                    s.mean_outage()
                );
            }
            println!("summary: {}", out.join("summary.csv").display());
        }
        Command::Validate { scenario } => {
            let (config, kind) = scenario.build()?;
            println!(
                "ok: {} satellites x {} cells, {} users, {} sub-channels, {} iterations, \
                 allocator {kind}",
                config.n_leos,
                config.cells_per_leo,
                config.user_count,
                config.sub_channels,
                config.iterations
            );
        }
        Command::DumpCatalog { scenario } => {
            let (config, kind) = scenario.build()?;
            let catalog = build_catalog(&config, kind.forces_full_illumination())?;
            println!(
                "allocator {kind}: {} beam slots per satellite{}",
                catalog.slots,
                if catalog.full_illumination {
                    " (all beams illuminated)"
                } else {
                    ""
                }
            );
            println!("beam arms: {}", catalog.beam_arms.len());
            for i in 0..catalog.beam_arms.len() {
                println!("  beam[{i}] cells {}", catalog.beam_label(i));
            }
            println!("channel arms: {}", catalog.channel_arms.len());
            for i in 0..catalog.channel_arms.len() {
                let anchor = if i == catalog.balanced_channel_arm {
                    "  (anchor)"
                } else {
                    ""
                };
                println!("  channel[{i}] split {}{anchor}", catalog.channel_label(i));
            }
            println!("power arms: {}", catalog.power_arms.len());
            for i in 0..catalog.power_arms.len() {
                let anchor = if i == catalog.uniform_power_arm {
                    "  (anchor)"
                } else {
                    ""
                };
                println!("  power[{i}] levels {}{anchor}", catalog.power_label(i));
            }
        }
    }
    Ok(())
}
