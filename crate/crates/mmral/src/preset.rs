//! Prebuilt experiment sweeps: named bundles of scenario points and
//! seeds that the CLI can run in one command, with per-run metrics
//! files and an aggregated summary table.
//!
//! Every preset exists at two scales: `desk` keeps runs small enough to
//! finish in seconds on a laptop; `paper` uses the full-size scenario
//! defaults.

use crate::config::{OrbitTopology, ScenarioConfig, UserField};
use crate::engine::{metrics_csv, run, AllocatorKind, EngineError};
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

/// How large the preset's scenarios are.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Seconds-per-run sizes for local iteration.
    Desk,
    /// Full-size scenario defaults.
    Paper,
}

impl Scale {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Desk => "desk",
            Self::Paper => "paper",
        }
    }
}

impl std::fmt::Display for Scale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "desk" => Ok(Self::Desk),
            "paper" => Ok(Self::Paper),
            other => Err(format!("unknown scale '{other}' (expected desk or paper)")),
        }
    }
}

/// One scenario inside a preset: a named configuration and the
/// allocator that runs it.
#[derive(Debug, Clone)]
pub struct PresetPoint {
    pub name: String,
    pub config: ScenarioConfig,
    pub kind: AllocatorKind,
}

/// A named sweep: points crossed with seeds.
#[derive(Debug, Clone)]
pub struct ExperimentPreset {
    pub name: String,
    pub description: String,
    pub points: Vec<PresetPoint>,
    pub seeds: Vec<u64>,
}

pub const PRESET_NAMES: [&str; 7] = [
    "epsilon-sweep",
    "ba-vs-nba",
    "outage",
    "topology",
    "baselines",
    "height-sweep",
    "user-sweep",
];

#[derive(Debug, Error)]
pub enum PresetError {
    #[error(
        "unknown preset '{0}' (expected one of: epsilon-sweep, ba-vs-nba, outage, topology, \
         baselines, height-sweep, user-sweep)"
    )]
    UnknownPreset(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("failed to write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3, 4, 5]
}

fn topology_tag(t: OrbitTopology) -> &'static str {
    match t {
        OrbitTopology::Homogeneous => "homo",
        OrbitTopology::Heterogeneous => "het",
    }
}

/// Look up a preset by name at the requested scale.
pub fn preset_by_name(name: &str, scale: Scale) -> Result<ExperimentPreset, PresetError> {
    let base = match scale {
        Scale::Desk => ScenarioConfig::desk(),
        Scale::Paper => ScenarioConfig::paper_scale(),
    };
    let preset = match name {
        "epsilon-sweep" => {
            let points = [0.2, 0.5, 0.8]
                .iter()
                .map(|&eps| {
                    let mut c = base.clone();
                    c.epsilon = eps;
                    PresetPoint {
                        name: format!("eps{eps}"),
                        config: c,
                        kind: AllocatorKind::Mmral,
                    }
                })
                .collect();
            ExperimentPreset {
                name: name.to_string(),
                description: "exploration-rate sweep for the full learning allocator".to_string(),
                points,
                seeds: default_seeds(),
            }
        }
        "ba-vs-nba" => {
            let mut points = Vec::new();
            for &br in &[30.0, 50.0] {
                for &full in &[false, true] {
                    let mut c = base.clone();
                    c.beam_radius_km = br;
                    c.full_beam_illumination = full;
                    points.push(PresetPoint {
                        name: format!("{}_br{br}", if full { "nba" } else { "ba" }),
                        config: c,
                        kind: AllocatorKind::Mmral,
                    });
                }
            }
            ExperimentPreset {
                name: name.to_string(),
                description: "learned beam subsets versus keeping every beam illuminated, \
                              across beam radii"
                    .to_string(),
                points,
                seeds: default_seeds(),
            }
        }
        "outage" => {
            // matrix rows: beam radius; columns: user count; two
            // illumination modes per cell. Desk radii stay inside the
            // first-null footprint (~61 km at 1000 km altitude) so every
            // row remains allocator-sensitive.
            let radii: &[f64] = match scale {
                Scale::Desk => &[30.0, 40.0, 50.0, 60.0],
                Scale::Paper => &[30.0, 50.0, 100.0, 150.0],
            };
            let loads: &[usize] = match scale {
                Scale::Desk => &[20, 40],
                Scale::Paper => &[20, 50],
            };
            let mut points = Vec::new();
            for &br in radii {
                for &users in loads {
                    for &full in &[false, true] {
                        let mut c = base.clone();
                        c.beam_radius_km = br;
                        c.user_count = users;
                        c.full_beam_illumination = full;
                        // wide grids push the outer cells past the default
                        // serving range; keep the whole grid addressable
                        c.serving_radius_km =
                            c.serving_radius_km.max(c.grid_field_radius_km() + 50.0);
                        points.push(PresetPoint {
                            name: format!("{}_br{br}_u{users}", if full { "nba" } else { "ba" }),
                            config: c,
                            kind: AllocatorKind::Mmral,
                        });
                    }
                }
            }
            ExperimentPreset {
                name: name.to_string(),
                description: "per-user outage probability over a beam-radius × user-count \
                              matrix, with and without beam selection"
                    .to_string(),
                points,
                seeds: default_seeds(),
            }
        }
        "topology" => {
            let spacings: &[(&str, f64)] = match scale {
                Scale::Desk => &[("near", 250.0), ("far", 500.0)],
                Scale::Paper => &[("near", 500.0), ("far", 1000.0)],
            };
            let mut points = Vec::new();
            for &n in &[2usize, 4] {
                for &topo in &[OrbitTopology::Homogeneous, OrbitTopology::Heterogeneous] {
                    for &(tag, spacing) in spacings {
                        let mut c = base.clone();
                        c.n_leos = n;
                        c.orbit_topology = topo;
                        c.inter_sat_distance_km = spacing;
                        // a fixed shared user field keeps every variant
                        // serving the same user positions for a seed
                        c.user_field = UserField::FixedKm(250.0);
                        points.push(PresetPoint {
                            name: format!("{}_n{n}_{tag}", topology_tag(topo)),
                            config: c,
                            kind: AllocatorKind::Mmral,
                        });
                    }
                }
            }
            ExperimentPreset {
                name: name.to_string(),
                description: "constellation layout sweep: plane count, fleet size, and \
                              satellite spacing over a shared user field"
                    .to_string(),
                points,
                seeds: default_seeds(),
            }
        }
        "baselines" => {
            let mut points = Vec::new();
            for &u in &[20usize, 40] {
                for kind in AllocatorKind::ALL {
                    let mut c = base.clone();
                    c.user_count = u;
                    points.push(PresetPoint {
                        name: format!("{}_u{u}", kind.as_str()),
                        config: c,
                        kind,
                    });
                }
            }
            ExperimentPreset {
                name: name.to_string(),
                description: "every allocator (full learner, random, and the partial-resource \
                              ablations) at two user loads"
                    .to_string(),
                points,
                seeds: default_seeds(),
            }
        }
        "height-sweep" => {
            let points = [600.0, 800.0, 1000.0, 1200.0, 1500.0]
                .iter()
                .map(|&h| {
                    let mut c = base.clone();
                    c.altitude_km = h;
                    PresetPoint {
                        name: format!("h{h}"),
                        config: c,
                        kind: AllocatorKind::Mmral,
                    }
                })
                .collect();
            ExperimentPreset {
                name: name.to_string(),
                description: "orbit altitude sweep for the full learning allocator".to_string(),
                points,
                seeds: default_seeds(),
            }
        }
        "user-sweep" => {
            let points = [10usize, 20, 30, 40, 50]
                .iter()
                .map(|&u| {
                    let mut c = base.clone();
                    c.user_count = u;
                    PresetPoint {
                        name: format!("u{u}"),
                        config: c,
                        kind: AllocatorKind::Mmral,
                    }
                })
                .collect();
            ExperimentPreset {
                name: name.to_string(),
                description: "user-count sweep for the full learning allocator".to_string(),
                points,
                seeds: default_seeds(),
            }
        }
        other => return Err(PresetError::UnknownPreset(other.to_string())),
    };
    Ok(preset)
}

/// Per-point aggregation over the preset's seeds.
#[derive(Debug, Clone)]
pub struct PointSummary {
    pub point: String,
    pub allocator: AllocatorKind,
    pub seeds: Vec<u64>,
    pub trailing_means_bps: Vec<f64>,
    pub outage_probabilities: Vec<f64>,
    pub run_files: Vec<String>,
}

impl PointSummary {
    pub fn mean_trailing_bps(&self) -> f64 {
        mean(&self.trailing_means_bps)
    }

    pub fn mean_outage(&self) -> f64 {
        mean(&self.outage_probabilities)
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Run every (point, seed) pair of a preset in parallel, writing one
/// metrics file per run plus an aggregated `summary.csv`. The output is
/// deterministic: the same preset always produces the same bytes.
pub fn run_preset(
    preset: &ExperimentPreset,
    out_dir: &Path,
) -> Result<Vec<PointSummary>, PresetError> {
    std::fs::create_dir_all(out_dir).map_err(|source| PresetError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let jobs: Vec<(usize, u64)> = preset
        .points
        .iter()
        .enumerate()
        .flat_map(|(i, _)| preset.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let runs: Vec<Result<(usize, u64, f64, f64, String), EngineError>> = jobs
        .par_iter()
        .map(|&(i, seed)| {
            let point = &preset.points[i];
            let mut config = point.config.clone();
            config.seed = seed;
            let result = run(&config, point.kind)?;
            Ok((
                i,
                seed,
                result.summary.trailing_mean_bps,
                result.summary.outage_probability,
                metrics_csv(&result.metrics, config.n_leos),
            ))
        })
        .collect();

    let mut summaries: Vec<PointSummary> = preset
        .points
        .iter()
        .map(|p| PointSummary {
            point: p.name.clone(),
            allocator: p.kind,
            seeds: Vec::new(),
            trailing_means_bps: Vec::new(),
            outage_probabilities: Vec::new(),
            run_files: Vec::new(),
        })
        .collect();
    for entry in runs {
        let (i, seed, trailing, outage, csv) = entry?;
        let file = format!("run_{}_s{}.csv", preset.points[i].name, seed);
        let path = out_dir.join(&file);
        std::fs::write(&path, csv).map_err(|source| PresetError::Io {
            path: path.clone(),
            source,
        })?;
        let s = &mut summaries[i];
        s.seeds.push(seed);
        s.trailing_means_bps.push(trailing);
        s.outage_probabilities.push(outage);
        s.run_files.push(file);
    }

    let mut out = String::from(
        "point,allocator,runs,trailing_mean_bps,trailing_std_bps,outage_mean,outage_std,run_files\n",
    );
    for s in &summaries {
        use std::fmt::Write;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.point,
            s.allocator,
            s.seeds.len(),
            mean(&s.trailing_means_bps),
            sample_std(&s.trailing_means_bps),
            mean(&s.outage_probabilities),
            sample_std(&s.outage_probabilities),
            s.run_files.join(";")
        );
    }
    let summary_path = out_dir.join("summary.csv");
    std::fs::write(&summary_path, out).map_err(|source| PresetError::Io {
        path: summary_path,
        source,
    })?;
    Ok(summaries)
}
