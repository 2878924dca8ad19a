//! Link-level mathematics: beam gain, path loss, interference, SINR and
//! achievable rates.
//!
//! A [`LinkEnvironment`] caches everything that depends on geometry alone —
//! per-link transmit gains, channel power gains on each sub-channel's
//! frequency, and radial speeds — so that evaluating a candidate
//! allocation is pure arithmetic over those caches. All interference
//! terms are literal sums over the printed index sets; nothing is
//! approximated beyond the Bessel evaluation itself.

use crate::action::AllocationPolicy;
use crate::config::{ScenarioConfig, SPEED_OF_LIGHT};
use crate::geometry::{self, GeometryError, NetworkSnapshot};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    /// Path loss is undefined at non-positive range.
    #[error("path loss undefined for distance {distance} m")]
    NonPositiveDistance { distance: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Transmit-antenna gain (linear) of a beam whose boresight sits at
/// `psi`, observed at angle `theta`. Exactly the peak gain on boresight,
/// an aperture-diffraction main lobe pattern out to the configured cutoff
/// angle, and zero beyond it.
pub fn beam_gain(theta: f64, psi: f64, config: &ScenarioConfig) -> f64 {
    let g_t = config.tx_gain_linear();
    let delta = theta - psi;
    if delta == 0.0 {
        return g_t;
    }
    let off = delta.abs();
    if off > config.theta_max() {
        return 0.0;
    }
    if off < 1e-8 {
        // limit branch: 4|J1(x)/x|^2 -> 1 as x -> 0
        return g_t;
    }
    let x = config.wave_number() * config.aperture_radius() * delta.sin();
    if x == 0.0 {
        return g_t;
    }
    let ratio = 2.0 * crate::math::bessel_j1(x) / x;
    g_t * ratio * ratio
}

/// Path loss in dB at range `d_m` and frequency `f_hz`: free space plus
/// the configured additive surrogate terms and a per-link shadow draw.
pub fn pathloss_db(
    d_m: f64,
    f_hz: f64,
    shadow_db: f64,
    config: &ScenarioConfig,
) -> Result<f64, ChannelError> {
    if d_m <= 0.0 {
        return Err(ChannelError::NonPositiveDistance { distance: d_m });
    }
    let fspl = 20.0 * (4.0 * std::f64::consts::PI * d_m * f_hz / SPEED_OF_LIGHT).log10();
    Ok(fspl + shadow_db + config.clutter_db + config.atmospheric_db + config.scintillation_db)
}

/// Geometry-dependent caches for one snapshot: per-(satellite, beam, user)
/// transmit gains, per-(satellite, user, sub-channel) channel power gains,
/// and per-(satellite, user) radial speeds.
#[derive(Debug, Clone)]
pub struct LinkEnvironment {
    n_leos: usize,
    cells: usize,
    users: usize,
    subchannels: usize,
    /// Sub-channel center frequencies (Hz), uniform across satellites.
    freqs: Vec<f64>,
    /// Linear transmit gain of beam (n, m) toward user u.
    gain_tx: Vec<f64>,
    /// Channel power gain H for (n, u, s); independent of the beam index.
    h: Vec<f64>,
    /// Radial relative speed |v| for (n, u), m/s.
    v_rel: Vec<f64>,
    rx_gain: f64,
    noise_w: f64,
    subchannel_bw: f64,
    bandwidth: f64,
    doppler_scale: f64,
}

impl LinkEnvironment {
    pub fn new(
        snapshot: &NetworkSnapshot,
        config: &ScenarioConfig,
    ) -> Result<Self, ChannelError> {
        let n_leos = snapshot.sats.len();
        let users = snapshot.users.len();
        let cells = snapshot.cells_per_leo;
        let subchannels = config.sub_channels;
        let w_s = config.subchannel_bandwidth_hz();
        let freqs: Vec<f64> = (0..subchannels)
            .map(|s| {
                config.carrier_freq_hz - config.bandwidth_hz / 2.0 + (s as f64 + 0.5) * w_s
            })
            .collect();

        // Optional log-normal shadowing, one draw per (satellite, user),
        // deterministic in (seed, iteration).
        let shadow: Vec<f64> = if config.shadow_sigma_db > 0.0 {
            let tag = 0x7368_6164u64 ^ snapshot.t.wrapping_mul(0x0100_0000_01b3);
            let mut rng = crate::derive_rng(config.seed, tag);
            (0..n_leos * users)
                .map(|_| {
                    // Box-Muller transform of two uniform draws
                    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                    let u2: f64 = rng.gen::<f64>();
                    let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                    z * config.shadow_sigma_db
                })
                .collect()
        } else {
            vec![0.0; n_leos * users]
        };

        let mut gain_tx = vec![0.0; n_leos * cells * users];
        let mut h = vec![0.0; n_leos * users * subchannels];
        let mut v_rel = vec![0.0; n_leos * users];
        for n in 0..n_leos {
            for u in 0..users {
                let d = geometry::slant_distance(snapshot, n, 0, u);
                v_rel[n * users + u] = geometry::relative_velocity(snapshot, n, u)?;
                for (s, &f) in freqs.iter().enumerate() {
                    let pl = pathloss_db(d, f, shadow[n * users + u], config)?;
                    h[(n * users + u) * subchannels + s] = 10f64.powf(-pl / 10.0);
                }
                for m in 0..cells {
                    let theta = geometry::off_boresight_angle(snapshot, n, m, u);
                    gain_tx[(n * cells + m) * users + u] = beam_gain(theta, 0.0, config);
                }
            }
        }
        Ok(Self {
            n_leos,
            cells,
            users,
            subchannels,
            freqs,
            gain_tx,
            h,
            v_rel,
            rx_gain: config.rx_gain_linear(),
            noise_w: config.noise_power_watts(),
            subchannel_bw: w_s,
            bandwidth: config.bandwidth_hz,
            doppler_scale: config.doppler_scale,
        })
    }

    /// Center frequency of sub-channel s (identical for every beam).
    pub fn freq(&self, s: usize) -> f64 {
        self.freqs[s]
    }

    /// Linear transmit gain of beam (n, m) toward user u.
    pub fn tx_gain(&self, n: usize, m: usize, u: usize) -> f64 {
        self.gain_tx[(n * self.cells + m) * self.users + u]
    }

    /// Channel power gain on sub-channel s between satellite n and user u.
    pub fn channel_gain(&self, n: usize, u: usize, s: usize) -> f64 {
        self.h[(n * self.users + u) * self.subchannels + s]
    }

    /// Radial relative speed between satellite n and user u, m/s.
    pub fn radial_speed(&self, n: usize, u: usize) -> f64 {
        self.v_rel[n * self.users + u]
    }

    pub fn noise_w(&self) -> f64 {
        self.noise_w
    }

    pub fn rx_gain(&self) -> f64 {
        self.rx_gain
    }

    pub fn subchannel_bandwidth_hz(&self) -> f64 {
        self.subchannel_bw
    }
}

/// Interference at user u's sub-channel s from the *other beams of the
/// same satellite* n: every powered, active (beam, user) pair other than
/// the victim's own, weighted by the interfering beam's pattern toward
/// the victim and the victim's channel gain.
pub fn interference_ibi(
    env: &LinkEnvironment,
    policy: &AllocationPolicy,
    n: usize,
    m: usize,
    u: usize,
    s: usize,
) -> f64 {
    let h = env.channel_gain(n, u, s);
    let mut acc = 0.0;
    for m2 in 0..env.cells {
        if m2 == m || policy.rho(n, m2, s) == 0 {
            continue;
        }
        let g = env.tx_gain(n, m2, u);
        for u2 in 0..env.users {
            if u2 == u || policy.phi(n, m2, u2) == 0 {
                continue;
            }
            acc += policy.power(n, m2, u2, s) * g * env.rx_gain * h;
        }
    }
    acc
}

/// Interference at user u's sub-channel s from *other satellites*: the
/// same sum as [`interference_ibi`] extended over every other satellite,
/// with the channel gain of the interfering satellite's own path to the
/// victim.
pub fn interference_isi(
    env: &LinkEnvironment,
    policy: &AllocationPolicy,
    n: usize,
    m: usize,
    u: usize,
    s: usize,
) -> f64 {
    let mut acc = 0.0;
    for n2 in 0..env.n_leos {
        if n2 == n {
            continue;
        }
        let h = env.channel_gain(n2, u, s);
        for m2 in 0..env.cells {
            if m2 == m || policy.rho(n2, m2, s) == 0 {
                continue;
            }
            let g = env.tx_gain(n2, m2, u);
            for u2 in 0..env.users {
                if u2 == u || policy.phi(n2, m2, u2) == 0 {
                    continue;
                }
                acc += policy.power(n2, m2, u2, s) * g * env.rx_gain * h;
            }
        }
    }
    acc
}

/// Residual inter-carrier interference induced by the Doppler shift of
/// link (n, u), driven by the user's own sub-channel powers in beam m.
/// The double sum runs over all ordered sub-channel pairs and is therefore
/// the same for every victim sub-channel; only the prefactor tracks s
/// through its center frequency.
pub fn interference_doppler(
    env: &LinkEnvironment,
    policy: &AllocationPolicy,
    n: usize,
    m: usize,
    u: usize,
    s: usize,
) -> f64 {
    let s_count = env.subchannels;
    if s_count < 2 {
        return 0.0;
    }
    let v = env.radial_speed(n, u);
    if v == 0.0 {
        return 0.0;
    }
    let mut pair_sum = 0.0;
    for s2 in 0..s_count {
        for s1 in 0..s_count {
            if s1 == s2 {
                continue;
            }
            let gap = s1 as f64 - s2 as f64;
            pair_sum += policy.power(n, m, u, s1) / (gap * gap);
        }
    }
    let shift = env.freq(s) * v * (s_count as f64).powi(2) / (SPEED_OF_LIGHT * env.bandwidth);
    shift * shift * pair_sum / (2.0 * s_count as f64)
}

/// Signal-to-interference-plus-noise ratio of link (n, m, u) on
/// sub-channel s; zero whenever the link carries no power there.
pub fn sinr(
    env: &LinkEnvironment,
    policy: &AllocationPolicy,
    n: usize,
    m: usize,
    u: usize,
    s: usize,
) -> f64 {
    let num = policy.power(n, m, u, s)
        * env.tx_gain(n, m, u)
        * env.rx_gain
        * env.channel_gain(n, u, s)
        * policy.phi(n, m, u) as f64
        * policy.rho(n, m, s) as f64;
    if num == 0.0 {
        return 0.0;
    }
    let denom = interference_ibi(env, policy, n, m, u, s)
        + interference_isi(env, policy, n, m, u, s)
        + env.doppler_scale * interference_doppler(env, policy, n, m, u, s)
        + env.noise_w;
    num / denom
}

/// Achievable rates of an allocation: per satellite, per user, and the
/// network total (the literal sum of the per-satellite rates).
#[derive(Debug, Clone)]
pub struct RateReport {
    pub per_leo: Vec<f64>,
    pub per_user: Vec<f64>,
    pub total: f64,
}

/// Evaluate the achievable rate sums for an allocation. Unpowered or
/// inactive links contribute exactly zero, so the gated loops reproduce
/// the full triple sum bit for bit.
pub fn rates(env: &LinkEnvironment, policy: &AllocationPolicy) -> RateReport {
    let w_s = env.subchannel_bw;
    let mut per_leo = vec![0.0; env.n_leos];
    let mut per_user = vec![0.0; env.users];
    for n in 0..env.n_leos {
        let mut acc = 0.0;
        for m in 0..env.cells {
            for u in 0..env.users {
                if policy.phi(n, m, u) == 0 {
                    continue;
                }
                for s in 0..env.subchannels {
                    if policy.rho(n, m, s) == 0 {
                        continue;
                    }
                    let gamma = sinr(env, policy, n, m, u, s);
                    if gamma == 0.0 {
                        continue;
                    }
                    let term = w_s * (1.0 + gamma).log2();
                    acc += term;
                    per_user[u] += term;
                }
            }
        }
        per_leo[n] = acc;
    }
    let total = per_leo.iter().sum();
    RateReport {
        per_leo,
        per_user,
        total,
    }
}
