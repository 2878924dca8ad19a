//! The allocation-feedback loop: per iteration, propagate the geometry,
//! let every satellite's agents choose arms using last iteration's
//! tables, decode the joint allocation, evaluate the network rates once,
//! feed the rewards back into the tables, and record metrics.
//!
//! The learning agents observe nothing but arm indices and the rate
//! feedback: no channel gains, SINRs, or positions cross into the bandit
//! layer, which is what lets the replay tests reconstruct the final
//! tables from the metrics log alone.

use crate::action::{
    build_catalog, decode, validate_policy, ArmCatalog, ArmTriple, CatalogError,
};
use crate::bandit::{BanditError, BanditTable, MacroTable};
use crate::channel::{rates, ChannelError, LinkEnvironment};
use crate::config::{ConfigError, ScenarioConfig};
use crate::geometry::{build_constellation, propagate, GeometryError};
use rand::Rng;
use std::str::FromStr;
use thiserror::Error;

/// Which allocator drives the run: the full three-resource learner, the
/// non-learning random reference, or an ablation that learns only a
/// subset of the resources and anchors the rest (full illumination,
/// balanced sub-channels, highest uniform feasible power).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocatorKind {
    /// Learn power, beams and sub-channels per satellite.
    Mmral,
    /// Uniformly random arm triples, no learning.
    Random,
    /// Learn power only; all beams on, balanced sub-channels.
    PowerOnly,
    /// Learn sub-channels only; all beams on, anchored power.
    ChannelOnly,
    /// Learn beams and sub-channels; anchored power.
    BeamChannel,
    /// Learn power and sub-channels; all beams on.
    FullPowerBeamChannel,
}

impl AllocatorKind {
    pub const ALL: [AllocatorKind; 6] = [
        AllocatorKind::Mmral,
        AllocatorKind::Random,
        AllocatorKind::PowerOnly,
        AllocatorKind::ChannelOnly,
        AllocatorKind::BeamChannel,
        AllocatorKind::FullPowerBeamChannel,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Mmral => "mmral",
            Self::Random => "random",
            Self::PowerOnly => "power_only",
            Self::ChannelOnly => "channel_only",
            Self::BeamChannel => "beam_channel",
            Self::FullPowerBeamChannel => "full_power_beam_channel",
        }
    }

    /// Whether this allocator updates any bandit table.
    pub fn is_learning(&self) -> bool {
        !matches!(self, Self::Random)
    }

    pub fn learns_power(&self) -> bool {
        matches!(self, Self::Mmral | Self::PowerOnly | Self::FullPowerBeamChannel)
    }

    pub fn learns_beam(&self) -> bool {
        matches!(self, Self::Mmral | Self::BeamChannel)
    }

    pub fn learns_channel(&self) -> bool {
        matches!(
            self,
            Self::Mmral | Self::ChannelOnly | Self::BeamChannel | Self::FullPowerBeamChannel
        )
    }

    /// Allocators that never choose beams keep every beam illuminated.
    pub fn forces_full_illumination(&self) -> bool {
        matches!(
            self,
            Self::PowerOnly | Self::ChannelOnly | Self::FullPowerBeamChannel
        )
    }
}

impl std::fmt::Display for AllocatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AllocatorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mmral" => Ok(Self::Mmral),
            "random" => Ok(Self::Random),
            "power_only" => Ok(Self::PowerOnly),
            "channel_only" => Ok(Self::ChannelOnly),
            "beam_channel" => Ok(Self::BeamChannel),
            "full_power_beam_channel" => Ok(Self::FullPowerBeamChannel),
            other => Err(format!(
                "unknown allocator '{other}' (expected one of: mmral, random, power_only, \
                 channel_only, beam_channel, full_power_beam_channel)"
            )),
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Bandit(#[from] BanditError),
}

/// Everything recorded about one iteration.
#[derive(Debug, Clone)]
pub struct IterationMetrics {
    pub t: u64,
    pub per_leo_bps: Vec<f64>,
    /// The literal sum of `per_leo_bps`.
    pub total_bps: f64,
    pub per_user_bps: Vec<f64>,
    /// Fraction of users below the outage threshold this iteration.
    pub outage_rate: f64,
    pub epsilon: f64,
    /// The arm triple each satellite played.
    pub arms: Vec<ArmTriple>,
}

/// Converged-behavior statistics over the trailing window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    /// Mean network rate over the window.
    pub trailing_mean_bps: f64,
    /// Fraction of users whose window-mean rate sits below the threshold.
    pub outage_probability: f64,
    /// Mean of the instantaneous outage rates over the window.
    pub mean_outage_rate: f64,
    /// Window length in iterations: min(T, max(500, T/10)).
    pub window: u64,
}

/// One satellite's three learning tables.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentTables {
    pub power: BanditTable,
    pub beam: BanditTable,
    pub channel: BanditTable,
}

/// A complete run: the metrics series, its summary, and the final tables.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub metrics: Vec<IterationMetrics>,
    pub summary: RunSummary,
    pub micro: Vec<AgentTables>,
    pub macro_tables: Vec<MacroTable>,
    pub catalog: ArmCatalog,
}

/// Run the learning allocator on a scenario.
pub fn run_simulation(config: &ScenarioConfig) -> Result<RunResult, EngineError> {
    run(config, AllocatorKind::Mmral)
}

/// Run a non-learning or ablation allocator on a scenario.
pub fn run_baseline(
    config: &ScenarioConfig,
    kind: AllocatorKind,
) -> Result<RunResult, EngineError> {
    run(config, kind)
}

/// Run any allocator on a scenario for the configured iteration budget.
pub fn run(config: &ScenarioConfig, kind: AllocatorKind) -> Result<RunResult, EngineError> {
    config.validate()?;
    let catalog = build_catalog(config, kind.forces_full_illumination())?;
    let base = build_constellation(config)?;
    let n_leos = config.n_leos;
    let mut micro: Vec<AgentTables> = (0..n_leos)
        .map(|n| AgentTables {
            power: BanditTable::new(
                catalog.power_arms.len(),
                config.gamma_micro,
                format!("leo{n}_power"),
            ),
            beam: BanditTable::new(
                catalog.beam_arms.len(),
                config.gamma_micro,
                format!("leo{n}_beam"),
            ),
            channel: BanditTable::new(
                catalog.channel_arms.len(),
                config.gamma_micro,
                format!("leo{n}_channel"),
            ),
        })
        .collect();
    let mut macro_tables: Vec<MacroTable> = (0..n_leos)
        .map(|n| MacroTable::new(config.gamma_macro, format!("leo{n}_macro")))
        .collect();
    let mut rng = crate::derive_rng(config.seed, 0x73_656c); // selection stream
    let mut metrics: Vec<IterationMetrics> = Vec::with_capacity(config.iterations as usize);

    for t in 1..=config.iterations {
        let snap = propagate(&base, config, t);
        let env = LinkEnvironment::new(&snap, config)?;

        // every satellite selects on the tables as of the end of t-1
        let triples: Vec<ArmTriple> = {
            let mut out = Vec::with_capacity(n_leos);
            for tables in micro.iter() {
                let triple = match kind {
                    AllocatorKind::Random => ArmTriple {
                        power: rng.gen_range(0..catalog.power_arms.len()),
                        beam: rng.gen_range(0..catalog.beam_arms.len()),
                        channel: rng.gen_range(0..catalog.channel_arms.len()),
                    },
                    _ => ArmTriple {
                        power: if kind.learns_power() {
                            tables.power.select(config.epsilon, &mut rng)?
                        } else {
                            catalog.uniform_power_arm
                        },
                        beam: if kind.learns_beam() {
                            tables.beam.select(config.epsilon, &mut rng)?
                        } else {
                            0
                        },
                        channel: if kind.learns_channel() {
                            tables.channel.select(config.epsilon, &mut rng)?
                        } else {
                            catalog.balanced_channel_arm
                        },
                    },
                };
                out.push(triple);
            }
            out
        };

        let policy = decode(&triples, &snap, &catalog, config);
        let report = rates(&env, &policy);

        if kind.is_learning() {
            for (n, triple) in triples.iter().enumerate() {
                let reward = report.per_leo[n] * config.reward_scale;
                if kind.learns_power() {
                    micro[n].power.update(triple.power, reward);
                }
                if kind.learns_beam() {
                    micro[n].beam.update(triple.beam, reward);
                }
                if kind.learns_channel() {
                    micro[n].channel.update(triple.channel, reward);
                }
                macro_tables[n].update(
                    (triple.power, triple.beam, triple.channel),
                    report.total * config.reward_scale,
                );
            }
        }

        let below = report
            .per_user
            .iter()
            .filter(|&&r| r < config.outage_threshold_bps)
            .count();
        metrics.push(IterationMetrics {
            t,
            outage_rate: below as f64 / config.user_count as f64,
            epsilon: config.epsilon,
            total_bps: report.total,
            per_leo_bps: report.per_leo,
            per_user_bps: report.per_user,
            arms: triples,
        });
    }

    let summary = summarize(&metrics, config);
    Ok(RunResult {
        metrics,
        summary,
        micro,
        macro_tables,
        catalog,
    })
}

/// Trailing-window statistics: mean network rate, the windowed per-user
/// outage probability, and the mean instantaneous outage rate.
pub fn summarize(metrics: &[IterationMetrics], config: &ScenarioConfig) -> RunSummary {
    let t = metrics.len() as u64;
    if t == 0 {
        return RunSummary {
            trailing_mean_bps: 0.0,
            outage_probability: 0.0,
            mean_outage_rate: 0.0,
            window: 0,
        };
    }
    let window = t.min(500.max(t / 10));
    let tail = &metrics[(t - window) as usize..];
    let trailing_mean_bps = tail.iter().map(|m| m.total_bps).sum::<f64>() / window as f64;
    let users = config.user_count;
    let mut user_sums = vec![0.0f64; users];
    for m in tail {
        for (u, &r) in m.per_user_bps.iter().enumerate() {
            user_sums[u] += r;
        }
    }
    let below = user_sums
        .iter()
        .filter(|&&sum| sum / (window as f64) < config.outage_threshold_bps)
        .count();
    RunSummary {
        trailing_mean_bps,
        outage_probability: below as f64 / users as f64,
        mean_outage_rate: tail.iter().map(|m| m.outage_rate).sum::<f64>() / window as f64,
        window,
    }
}

/// Serialize the metrics series as CSV. Floats are printed with Rust's
/// shortest round-trip formatting, so equal series give equal bytes.
pub fn metrics_csv(metrics: &[IterationMetrics], n_leos: usize) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    out.push_str("t,R_tot_bps");
    for n in 0..n_leos {
        let _ = write!(out, ",R_{}_bps", n + 1);
    }
    out.push_str(",outage_rate,epsilon");
    for n in 0..n_leos {
        let _ = write!(out, ",arm_leo{n}_power,arm_leo{n}_beam,arm_leo{n}_channel");
    }
    out.push('\n');
    for m in metrics {
        let _ = write!(out, "{},{}", m.t, m.total_bps);
        for r in &m.per_leo_bps {
            let _ = write!(out, ",{r}");
        }
        let _ = write!(out, ",{},{}", m.outage_rate, m.epsilon);
        for a in &m.arms {
            let _ = write!(out, ",{},{},{}", a.power, a.beam, a.channel);
        }
        out.push('\n');
    }
    out
}

/// Serialize every agent's final table as CSV: one row per arm with its
/// decoded summary, plus the visited macro triples.
pub fn tables_csv(result: &RunResult) -> String {
    use std::fmt::Write;
    let catalog = &result.catalog;
    let mut out = String::from("agent,arm_index,arm_summary,value,count\n");
    for tables in &result.micro {
        for (i, (&v, &c)) in tables
            .power
            .values()
            .iter()
            .zip(tables.power.counts())
            .enumerate()
        {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                tables.power.label(),
                i,
                catalog.power_label(i),
                v,
                c
            );
        }
        for (i, (&v, &c)) in tables
            .beam
            .values()
            .iter()
            .zip(tables.beam.counts())
            .enumerate()
        {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                tables.beam.label(),
                i,
                catalog.beam_label(i),
                v,
                c
            );
        }
        for (i, (&v, &c)) in tables
            .channel
            .values()
            .iter()
            .zip(tables.channel.counts())
            .enumerate()
        {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                tables.channel.label(),
                i,
                catalog.channel_label(i),
                v,
                c
            );
        }
    }
    for table in &result.macro_tables {
        for (i, (&(p, b, ch), &(v, c))) in table.entries().enumerate() {
            let _ = writeln!(
                out,
                "{},{},p{}/b{}/c{},{},{}",
                table.label(),
                i,
                p,
                b,
                ch,
                v,
                c
            );
        }
    }
    out
}

/// Re-decode logged arms at the logged iteration and re-evaluate the
/// rates; used by the replay tests and the CLI's audit path.
pub fn replay_iteration(
    config: &ScenarioConfig,
    kind: AllocatorKind,
    m: &IterationMetrics,
) -> Result<(f64, Vec<crate::action::Violation>), EngineError> {
    let catalog = build_catalog(config, kind.forces_full_illumination())?;
    let snap = crate::geometry::snapshot_at(config, m.t)?;
    let env = LinkEnvironment::new(&snap, config)?;
    let policy = decode(&m.arms, &snap, &catalog, config);
    let violations = validate_policy(&policy, config);
    let report = rates(&env, &policy);
    Ok((report.total, violations))
}
