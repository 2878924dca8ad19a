//! Arm catalogs, policy decoding and constraint checking.
//!
//! Each satellite's three agents pick one arm each:
//!
//! - a **beam arm**: which cells to illuminate (a fixed-size subset, or the
//!   full set when every beam is always on),
//! - a **channel arm**: how to split the sub-channels into one contiguous
//!   block per illuminated cell (a positive composition),
//! - a **power arm**: a transmit level per block, drawn from a small dB
//!   ladder below the per-beam ceiling, pre-filtered so the sum always
//!   respects the per-satellite budget.
//!
//! [`decode`] turns the per-satellite arm triples plus the current
//! user-to-cell memberships into a concrete allocation (power per
//! user/sub-channel, beam-service and sub-channel-activity indicators),
//! and [`validate_policy`] checks any allocation — decoded or hand-built —
//! against the scheduling constraints, naming each violation.

use crate::config::ScenarioConfig;
use crate::geometry::NetworkSnapshot;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::BTreeSet;
use thiserror::Error;

/// Per-slot transmit options as dB offsets below the per-beam ceiling;
/// the fifth option is "off".
pub const POWER_STEPS_DB: [f64; 4] = [0.0, -3.0, -6.0, -10.0];

/// Index of the "off" level in the per-slot level ladder.
pub const LEVEL_OFF: u8 = 4;

/// Relative slack for power-budget comparisons, so sums assembled from a
/// budget's own constituents never fail by floating-point rounding.
pub const BUDGET_TOLERANCE: f64 = 1e-9;

/// Enumeration is used up to this many raw per-slot level combinations;
/// beyond it, arms are sampled constructively.
const POWER_ENUM_CAP: u128 = 1 << 20;

#[derive(Debug, Error)]
pub enum CatalogError {
    /// Fewer sub-channels than beam slots: no positive composition exists.
    #[error("{subchannels} sub-channels cannot cover {slots} beam slots")]
    SubchannelsBelowSlots { slots: usize, subchannels: usize },
}

// =========================================================================
// Allocation policy
// =========================================================================

/// A concrete allocation for one iteration: transmit power per
/// (satellite, cell, user, sub-channel), beam-service indicators per
/// (satellite, cell, user) and sub-channel-activity indicators per
/// (satellite, cell, sub-channel).
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationPolicy {
    pub n_leos: usize,
    pub cells: usize,
    pub users: usize,
    pub subchannels: usize,
    p: Vec<f64>,
    phi: Vec<u8>,
    rho: Vec<u8>,
}

impl AllocationPolicy {
    pub fn zeros(n_leos: usize, cells: usize, users: usize, subchannels: usize) -> Self {
        Self {
            n_leos,
            cells,
            users,
            subchannels,
            p: vec![0.0; n_leos * cells * users * subchannels],
            phi: vec![0; n_leos * cells * users],
            rho: vec![0; n_leos * cells * subchannels],
        }
    }

    #[inline]
    fn p_idx(&self, n: usize, m: usize, u: usize, s: usize) -> usize {
        ((n * self.cells + m) * self.users + u) * self.subchannels + s
    }

    #[inline]
    pub fn power(&self, n: usize, m: usize, u: usize, s: usize) -> f64 {
        self.p[self.p_idx(n, m, u, s)]
    }

    #[inline]
    pub fn set_power(&mut self, n: usize, m: usize, u: usize, s: usize, w: f64) {
        let i = self.p_idx(n, m, u, s);
        self.p[i] = w;
    }

    #[inline]
    pub fn phi(&self, n: usize, m: usize, u: usize) -> u8 {
        self.phi[(n * self.cells + m) * self.users + u]
    }

    #[inline]
    pub fn set_phi(&mut self, n: usize, m: usize, u: usize, v: u8) {
        self.phi[(n * self.cells + m) * self.users + u] = v;
    }

    #[inline]
    pub fn rho(&self, n: usize, m: usize, s: usize) -> u8 {
        self.rho[(n * self.cells + m) * self.subchannels + s]
    }

    #[inline]
    pub fn set_rho(&mut self, n: usize, m: usize, s: usize, v: u8) {
        self.rho[(n * self.cells + m) * self.subchannels + s] = v;
    }

    /// Total power emitted by beam (n, m) on sub-channel s across users.
    pub fn beam_subchannel_power(&self, n: usize, m: usize, s: usize) -> f64 {
        (0..self.users).map(|u| self.power(n, m, u, s)).sum()
    }

    /// Total power emitted by satellite n.
    pub fn leo_power(&self, n: usize) -> f64 {
        let base = n * self.cells * self.users * self.subchannels;
        let len = self.cells * self.users * self.subchannels;
        self.p[base..base + len].iter().sum()
    }

    /// Total power emitted by beam (n, m).
    pub fn beam_power(&self, n: usize, m: usize) -> f64 {
        let base = (n * self.cells + m) * self.users * self.subchannels;
        let len = self.users * self.subchannels;
        self.p[base..base + len].iter().sum()
    }
}

// =========================================================================
// Arm catalog
// =========================================================================

/// The shared arm pools all satellites draw from. Arm order is
/// deterministic for a given configuration, so an arm index fully
/// identifies an action across runs.
#[derive(Debug, Clone)]
pub struct ArmCatalog {
    /// Sorted cell subsets, one per beam arm.
    pub beam_arms: Vec<Vec<usize>>,
    /// Positive compositions of the sub-channel count into `slots` parts.
    pub channel_arms: Vec<Vec<usize>>,
    /// Per-slot level-ladder indices (0..=4, 4 = off), one per power arm.
    pub power_arms: Vec<Vec<u8>>,
    /// Watt values of the level ladder, highest first, last entry 0.
    pub levels_w: [f64; 5],
    /// Beam slots per satellite (cell count under full illumination,
    /// otherwise the illuminated-subset size).
    pub slots: usize,
    /// Whether every cell is always illuminated.
    pub full_illumination: bool,
    /// Index of the balanced composition in `channel_arms`.
    pub balanced_channel_arm: usize,
    /// Index in `power_arms` of the highest uniform level that fits the
    /// per-satellite budget.
    pub uniform_power_arm: usize,
}

/// One satellite's joint choice, as indices into the catalog pools.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ArmTriple {
    pub power: usize,
    pub beam: usize,
    pub channel: usize,
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// All size-k subsets of 0..n in lexicographic order.
fn enumerate_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        // advance to the next combination
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// `count` distinct size-k subsets of 0..n, drawn with a seeded RNG and
/// returned in sorted order. Requires count < C(n, k).
fn sample_subsets(n: usize, k: usize, count: usize, rng: &mut impl Rng) -> Vec<Vec<usize>> {
    let mut set: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut pool: Vec<usize> = (0..n).collect();
    while set.len() < count {
        // partial Fisher-Yates: the first k entries become the draw
        for i in 0..k {
            let j = rng.gen_range(i..n);
            pool.swap(i, j);
        }
        let mut subset = pool[..k].to_vec();
        subset.sort_unstable();
        set.insert(subset);
    }
    set.into_iter().collect()
}

/// All positive compositions of `total` into `parts` parts, in
/// lexicographic order.
fn enumerate_compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; parts];
    fn rec(total: usize, part: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if part == parts - 1 {
            cur[part] = total;
            out.push(cur.clone());
            return;
        }
        let remaining_parts = parts - part - 1;
        for v in 1..=(total - remaining_parts) {
            cur[part] = v;
            rec(total - v, part + 1, parts, cur, out);
        }
    }
    rec(total, 0, parts, &mut cur, &mut out);
    out
}

/// `count` distinct positive compositions including every entry of
/// `forced`, seeded, sorted. Requires count ≤ C(total-1, parts-1).
fn sample_compositions(
    total: usize,
    parts: usize,
    count: usize,
    forced: &[Vec<usize>],
    rng: &mut impl Rng,
) -> Vec<Vec<usize>> {
    let mut set: BTreeSet<Vec<usize>> = forced.iter().cloned().collect();
    // a composition of `total` into `parts` positive parts corresponds to
    // a size-(parts-1) subset of the total-1 interior cut points
    let mut pool: Vec<usize> = (1..total).collect();
    while set.len() < count {
        for i in 0..parts - 1 {
            let j = rng.gen_range(i..pool.len());
            pool.swap(i, j);
        }
        let mut cuts = pool[..parts - 1].to_vec();
        cuts.sort_unstable();
        let mut comp = Vec::with_capacity(parts);
        let mut prev = 0;
        for &c in &cuts {
            comp.push(c - prev);
            prev = c;
        }
        comp.push(total - prev);
        set.insert(comp);
    }
    set.into_iter().collect()
}

/// The most even split: the first `total % parts` parts take the ceiling.
fn balanced_composition(total: usize, parts: usize) -> Vec<usize> {
    let q = total / parts;
    let r = total % parts;
    (0..parts).map(|i| if i < r { q + 1 } else { q }).collect()
}

/// Build the shared arm pools for a scenario. `full_illumination`
/// overrides the config flag when an allocator variant anchors the beam
/// agent to the full cell set.
pub fn build_catalog(
    config: &ScenarioConfig,
    full_illumination: bool,
) -> Result<ArmCatalog, CatalogError> {
    let full = full_illumination || config.full_beam_illumination;
    let m = config.cells_per_leo;
    let slots = if full { m } else { config.max_illuminated };
    let s = config.sub_channels;
    if s < slots {
        return Err(CatalogError::SubchannelsBelowSlots {
            slots,
            subchannels: s,
        });
    }

    // Beam arms: the one full set, or size-L subsets up to the pool cap.
    let beam_arms = if full {
        vec![(0..m).collect::<Vec<usize>>()]
    } else {
        let space = binomial(m as u64, slots as u64);
        if space <= config.k_beam as u128 {
            enumerate_subsets(m, slots)
        } else {
            let mut rng = crate::derive_rng(config.seed, 0x6265_616d); // "beam"
            sample_subsets(m, slots, config.k_beam, &mut rng)
        }
    };

    // Channel arms: positive compositions, balanced split always present.
    let balanced = balanced_composition(s, slots);
    let comp_space = binomial((s - 1) as u64, (slots - 1) as u64);
    let channel_arms = if comp_space <= config.k_channel as u128 {
        enumerate_compositions(s, slots)
    } else {
        let mut rng = crate::derive_rng(config.seed, 0x6368_616e); // "chan"
        sample_compositions(s, slots, config.k_channel, &[balanced.clone()], &mut rng)
    };
    let balanced_channel_arm = channel_arms
        .iter()
        .position(|a| *a == balanced)
        .expect("balanced composition is always present");

    // Power arms: per-slot ladder indices filtered to the satellite budget.
    let p_beam = config.p_beam_watts();
    let budget = config.p_leo_watts() * (1.0 + BUDGET_TOLERANCE);
    let mut levels_w = [0.0f64; 5];
    for (i, &step) in POWER_STEPS_DB.iter().enumerate() {
        levels_w[i] = p_beam * crate::config::db_to_linear(step);
    }
    levels_w[LEVEL_OFF as usize] = 0.0;
    let arm_sum = |arm: &[u8]| -> f64 { arm.iter().map(|&i| levels_w[i as usize]).sum() };

    // the anchor: the highest single level that fits uniformly
    let uniform_anchor: Vec<u8> = {
        let lvl = (0..5u8)
            .find(|&i| levels_w[i as usize] * slots as f64 <= budget)
            .expect("the off level always fits");
        vec![lvl; slots]
    };

    let raw_space = (5u128).checked_pow(slots as u32).unwrap_or(u128::MAX);
    let mut power_arms: Vec<Vec<u8>> = if raw_space <= POWER_ENUM_CAP {
        let feasible: Vec<Vec<u8>> = enumerate_level_combos(slots)
            .into_iter()
            .filter(|arm| arm_sum(arm) <= budget)
            .collect();
        if feasible.len() <= config.k_power {
            feasible
        } else {
            let mut rng = crate::derive_rng(config.seed, 0x706f_7772); // "powr"
            let mut picked: BTreeSet<usize> = BTreeSet::new();
            while picked.len() < config.k_power {
                picked.insert(rng.gen_range(0..feasible.len()));
            }
            let mut arms: BTreeSet<Vec<u8>> =
                picked.into_iter().map(|i| feasible[i].clone()).collect();
            arms.insert(uniform_anchor.clone());
            while arms.len() > config.k_power {
                // keep the pool at its cap after force-inserting the anchor
                let last = arms.iter().next_back().cloned().unwrap();
                if last == uniform_anchor {
                    let first = arms.iter().next().cloned().unwrap();
                    arms.remove(&first);
                } else {
                    arms.remove(&last);
                }
            }
            arms.into_iter().collect()
        }
    } else {
        // combination space too large to enumerate: build feasible arms
        // constructively, spending the budget slot by slot in a random
        // order so high levels are reachable in every position
        let mut rng = crate::derive_rng(config.seed, 0x706f_7772);
        let mut arms: BTreeSet<Vec<u8>> = BTreeSet::new();
        arms.insert(uniform_anchor.clone());
        let mut order: Vec<usize> = (0..slots).collect();
        let mut attempts = 0usize;
        let max_attempts = 64 * config.k_power.max(64);
        while arms.len() < config.k_power && attempts < max_attempts {
            attempts += 1;
            order.shuffle(&mut rng);
            let mut arm = vec![LEVEL_OFF; slots];
            let mut spent = 0.0;
            for &slot in &order {
                let affordable: Vec<u8> = (0..5u8)
                    .filter(|&i| spent + levels_w[i as usize] <= budget)
                    .collect();
                let pick = affordable[rng.gen_range(0..affordable.len())];
                arm[slot] = pick;
                spent += levels_w[pick as usize];
            }
            arms.insert(arm);
        }
        arms.into_iter().collect()
    };
    if !power_arms.contains(&uniform_anchor) {
        power_arms.push(uniform_anchor.clone());
        power_arms.sort_unstable();
    }
    let uniform_power_arm = power_arms
        .iter()
        .position(|a| *a == uniform_anchor)
        .expect("anchor arm was just ensured");

    Ok(ArmCatalog {
        beam_arms,
        channel_arms,
        power_arms,
        levels_w,
        slots,
        full_illumination: full,
        balanced_channel_arm,
        uniform_power_arm,
    })
}

/// Odometer over 5 levels per slot, lexicographic.
fn enumerate_level_combos(slots: usize) -> Vec<Vec<u8>> {
    let total = 5usize.pow(slots as u32);
    let mut out = Vec::with_capacity(total);
    let mut cur = vec![0u8; slots];
    loop {
        out.push(cur.clone());
        let mut i = slots;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < 4 {
                cur[i] += 1;
                break;
            }
            cur[i] = 0;
            if i == 0 {
                return out;
            }
        }
    }
}

impl ArmCatalog {
    /// Human-readable arm labels for table dumps.
    pub fn beam_label(&self, arm: usize) -> String {
        let parts: Vec<String> = self.beam_arms[arm].iter().map(|m| m.to_string()).collect();
        parts.join("+")
    }

    pub fn channel_label(&self, arm: usize) -> String {
        let parts: Vec<String> = self.channel_arms[arm]
            .iter()
            .map(|b| b.to_string())
            .collect();
        parts.join("/")
    }

    pub fn power_label(&self, arm: usize) -> String {
        let names = ["0dB", "-3dB", "-6dB", "-10dB", "off"];
        let parts: Vec<&str> = self.power_arms[arm]
            .iter()
            .map(|&i| names[i as usize])
            .collect();
        parts.join("/")
    }
}

// =========================================================================
// Decoding
// =========================================================================

/// Expand per-satellite arm triples into a concrete allocation.
///
/// Slot j of satellite n serves the j-th cell of its beam arm with the
/// j-th contiguous sub-channel block of its channel arm at the j-th ladder
/// level of its power arm. Within a block, sub-channels go round-robin
/// over the cell's members in index order; the slot level is split evenly
/// over the block. Cells with no members keep their block active but emit
/// nothing; a slot at the "off" level keeps its assignment structure with
/// zero power.
pub fn decode(
    triples: &[ArmTriple],
    snapshot: &NetworkSnapshot,
    catalog: &ArmCatalog,
    config: &ScenarioConfig,
) -> AllocationPolicy {
    let n_leos = config.n_leos;
    debug_assert_eq!(triples.len(), n_leos);
    let mut policy = AllocationPolicy::zeros(
        n_leos,
        config.cells_per_leo,
        config.user_count,
        config.sub_channels,
    );
    for (n, triple) in triples.iter().enumerate() {
        let subset = &catalog.beam_arms[triple.beam];
        let blocks = &catalog.channel_arms[triple.channel];
        let levels = &catalog.power_arms[triple.power];
        let mut start = 0usize;
        for (j, &m) in subset.iter().enumerate() {
            let size = blocks[j];
            let level_w = catalog.levels_w[levels[j] as usize];
            let members = snapshot.cell_users(n, m);
            for s in start..start + size {
                policy.set_rho(n, m, s, 1);
            }
            if !members.is_empty() {
                let per_sub = level_w / size as f64;
                for (i, s) in (start..start + size).enumerate() {
                    let u = members[i % members.len()];
                    policy.set_phi(n, m, u, 1);
                    if level_w > 0.0 {
                        policy.set_power(n, m, u, s, per_sub);
                    }
                }
            }
            start += size;
        }
    }
    policy
}

// =========================================================================
// Validation
// =========================================================================

/// The scheduling rules an allocation must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintId {
    /// Per-satellite total power within budget.
    LeoPowerBudget,
    /// Per-beam total power within its ceiling.
    BeamPowerBudget,
    /// Each user served by at most one beam per satellite.
    SingleServingBeam,
    /// Each sub-channel active in at most one beam per satellite.
    SubchannelExclusive,
    /// A served user's cell keeps at least one active sub-channel.
    ServedUserHasSubchannel,
    /// Beam-service indicators are 0/1.
    BeamIndicatorBinary,
    /// Sub-channel-activity indicators are 0/1.
    SubchannelIndicatorBinary,
    /// Positive power only where both indicators are set.
    PowerRequiresActivation,
}

impl std::fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Self::LeoPowerBudget => "leo_power_budget",
            Self::BeamPowerBudget => "beam_power_budget",
            Self::SingleServingBeam => "single_serving_beam",
            Self::SubchannelExclusive => "subchannel_exclusive",
            Self::ServedUserHasSubchannel => "served_user_has_subchannel",
            Self::BeamIndicatorBinary => "beam_indicator_binary",
            Self::SubchannelIndicatorBinary => "subchannel_indicator_binary",
            Self::PowerRequiresActivation => "power_requires_activation",
        };
        f.write_str(name)
    }
}

/// One broken rule with the indices that break it.
#[derive(Debug, Clone)]
pub struct Violation {
    pub id: ConstraintId,
    pub detail: String,
}

/// Check an allocation against every scheduling rule; an empty result
/// means the allocation is feasible.
pub fn validate_policy(policy: &AllocationPolicy, config: &ScenarioConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let (nl, mc, uc, sc) = (
        policy.n_leos,
        policy.cells,
        policy.users,
        policy.subchannels,
    );
    let leo_budget = config.p_leo_watts() * (1.0 + BUDGET_TOLERANCE);
    let beam_budget = config.p_beam_watts() * (1.0 + BUDGET_TOLERANCE);

    for n in 0..nl {
        let total = policy.leo_power(n);
        if total > leo_budget {
            out.push(Violation {
                id: ConstraintId::LeoPowerBudget,
                detail: format!("satellite {n} emits {total} W over budget"),
            });
        }
        for m in 0..mc {
            let bp = policy.beam_power(n, m);
            if bp > beam_budget {
                out.push(Violation {
                    id: ConstraintId::BeamPowerBudget,
                    detail: format!("beam ({n},{m}) emits {bp} W over ceiling"),
                });
            }
        }
        for u in 0..uc {
            let served: u32 = (0..mc).map(|m| policy.phi(n, m, u) as u32).sum();
            if served > 1 {
                out.push(Violation {
                    id: ConstraintId::SingleServingBeam,
                    detail: format!("user {u} served by {served} beams of satellite {n}"),
                });
            }
        }
        for s in 0..sc {
            let active: u32 = (0..mc).map(|m| policy.rho(n, m, s) as u32).sum();
            if active > 1 {
                out.push(Violation {
                    id: ConstraintId::SubchannelExclusive,
                    detail: format!("sub-channel {s} active in {active} beams of satellite {n}"),
                });
            }
        }
        for m in 0..mc {
            for u in 0..uc {
                let v = policy.phi(n, m, u);
                if v > 1 {
                    out.push(Violation {
                        id: ConstraintId::BeamIndicatorBinary,
                        detail: format!("phi({n},{m},{u}) = {v}"),
                    });
                }
                if v >= 1 {
                    let active: u32 = (0..sc).map(|s| policy.rho(n, m, s) as u32).sum();
                    if active == 0 {
                        out.push(Violation {
                            id: ConstraintId::ServedUserHasSubchannel,
                            detail: format!(
                                "user {u} served by beam ({n},{m}) with no active sub-channel"
                            ),
                        });
                    }
                }
            }
            for s in 0..sc {
                let v = policy.rho(n, m, s);
                if v > 1 {
                    out.push(Violation {
                        id: ConstraintId::SubchannelIndicatorBinary,
                        detail: format!("rho({n},{m},{s}) = {v}"),
                    });
                }
            }
            for u in 0..uc {
                for s in 0..sc {
                    let p = policy.power(n, m, u, s);
                    if p > 0.0 && (policy.phi(n, m, u) != 1 || policy.rho(n, m, s) != 1) {
                        out.push(Violation {
                            id: ConstraintId::PowerRequiresActivation,
                            detail: format!("power at ({n},{m},{u},{s}) without activation"),
                        });
                    }
                }
            }
        }
    }
    out
}
