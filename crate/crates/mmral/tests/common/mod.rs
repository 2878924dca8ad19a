//! Straight-loop reference implementations backing the acceptance tests.
//!
//! Everything here is recomputed from raw snapshot positions and the
//! scenario configuration with plain nested loops: no caching layers, no
//! shared arithmetic with the library's link code, and a Bessel term
//! evaluated by numerical quadrature instead of the library's
//! series/recurrence routine.

use mmral::action::AllocationPolicy;
use mmral::config::{ScenarioConfig, SPEED_OF_LIGHT};
use mmral::geometry::NetworkSnapshot;

/// First-kind Bessel J1 via its integral form,
/// (1/pi) * INT_0^pi cos(tau - x sin tau) dtau,
/// with a 1024-interval trapezoid rule. The integrand extends to an even
/// 2*pi-periodic function, so the rule converges spectrally and is
/// accurate to machine precision for every |x| this suite evaluates.
pub fn j1_quadrature(x: f64) -> f64 {
    const INTERVALS: usize = 1024;
    let h = std::f64::consts::PI / INTERVALS as f64;
    let f = |tau: f64| (tau - x * tau.sin()).cos();
    let mut sum = 0.5 * (f(0.0) + f(std::f64::consts::PI));
    for i in 1..INTERVALS {
        sum += f(i as f64 * h);
    }
    sum * h / std::f64::consts::PI
}

/// First positive root of J1, located by bisection of the quadrature
/// evaluator — independent of any library constant.
pub fn j1_first_root() -> f64 {
    static ROOT: std::sync::OnceLock<f64> = std::sync::OnceLock::new();
    *ROOT.get_or_init(|| {
        let (mut lo, mut hi) = (3.0f64, 4.5f64);
        assert!(j1_quadrature(lo) > 0.0 && j1_quadrature(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if j1_quadrature(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    })
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Reference link quantities for one snapshot, rebuilt from positions.
pub struct OracleEnv {
    n_leos: usize,
    cells: usize,
    users: usize,
    subchannels: usize,
    /// Transmit gain of beam (n, m) toward user u, `(n*M + m)*U + u`.
    gain: Vec<f64>,
    /// Channel power gain for (n, u, s), `(n*U + u)*S + s`.
    h: Vec<f64>,
    /// Radial speed for (n, u), `n*U + u`.
    v: Vec<f64>,
    freqs: Vec<f64>,
    rx_gain: f64,
    noise_w: f64,
    w_s: f64,
    bandwidth: f64,
    eta: f64,
}

impl OracleEnv {
    pub fn build(snap: &NetworkSnapshot, config: &ScenarioConfig) -> OracleEnv {
        assert_eq!(
            config.shadow_sigma_db, 0.0,
            "the reference oracle models zero shadowing"
        );
        let n_leos = snap.sats.len();
        let cells = snap.cells_per_leo;
        let users = snap.users.len();
        let subchannels = config.sub_channels;

        let g_t = 10f64.powf(config.tx_gain_dbi / 10.0);
        let rx_gain = 10f64.powf(config.rx_gain_dbi / 10.0);
        let wavelength = SPEED_OF_LIGHT / config.carrier_freq_hz;
        let aperture = config.aperture_radius_m.unwrap_or(10.0 * wavelength);
        let ka = 2.0 * std::f64::consts::PI * config.carrier_freq_hz / SPEED_OF_LIGHT * aperture;
        let root = j1_first_root();
        let sine = config.theta_max_lobe_widths * root / ka;
        let theta_max = if sine >= 1.0 {
            std::f64::consts::FRAC_PI_2
        } else {
            sine.asin().min(std::f64::consts::FRAC_PI_2)
        };

        let w_s = config.bandwidth_hz / subchannels as f64;
        let freqs: Vec<f64> = (0..subchannels)
            .map(|s| config.carrier_freq_hz - config.bandwidth_hz / 2.0 + (s as f64 + 0.5) * w_s)
            .collect();
        let extra_db = config.clutter_db + config.atmospheric_db + config.scintillation_db;
        let noise_w = 10f64.powf((config.noise_psd_dbm_hz - 30.0) / 10.0) * w_s;

        let mut gain = vec![0.0; n_leos * cells * users];
        let mut h = vec![0.0; n_leos * users * subchannels];
        let mut v = vec![0.0; n_leos * users];
        for n in 0..n_leos {
            let sat = &snap.sats[n];
            for u in 0..users {
                let user = &snap.users[u];
                let dp = sub(user.pos, sat.pos);
                let d = norm(dp);
                assert!(d > 0.0);
                let dv = sub(user.vel, sat.vel);
                v[n * users + u] = (dot(dp, dv) / d).abs();
                for (s, &f) in freqs.iter().enumerate() {
                    let pl =
                        20.0 * (4.0 * std::f64::consts::PI * d * f / SPEED_OF_LIGHT).log10()
                            + extra_db;
                    h[(n * users + u) * subchannels + s] = 10f64.powf(-pl / 10.0);
                }
                for m in 0..cells {
                    let bore = sub(snap.cell_centers[n * cells + m], sat.pos);
                    let cosang = (dot(dp, bore) / (d * norm(bore))).clamp(-1.0, 1.0);
                    let theta = cosang.acos();
                    gain[(n * cells + m) * users + u] = if theta == 0.0 {
                        g_t
                    } else if theta.abs() > theta_max {
                        0.0
                    } else if theta.abs() < 1e-8 {
                        g_t
                    } else {
                        let x = ka * theta.sin();
                        if x == 0.0 {
                            g_t
                        } else {
                            let r = 2.0 * j1_quadrature(x) / x;
                            g_t * r * r
                        }
                    };
                }
            }
        }
        OracleEnv {
            n_leos,
            cells,
            users,
            subchannels,
            gain,
            h,
            v,
            freqs,
            rx_gain,
            noise_w,
            w_s,
            bandwidth: config.bandwidth_hz,
            eta: config.doppler_scale,
        }
    }

    fn g(&self, n: usize, m: usize, u: usize) -> f64 {
        self.gain[(n * self.cells + m) * self.users + u]
    }

    fn hh(&self, n: usize, u: usize, s: usize) -> f64 {
        self.h[(n * self.users + u) * self.subchannels + s]
    }

    /// Literal quadruple-indexed ratio: desired power over same-satellite
    /// interference, cross-satellite interference, Doppler leakage, and
    /// noise, each written as its full index sum.
    pub fn sinr(&self, p: &AllocationPolicy, n: usize, m: usize, u: usize, s: usize) -> f64 {
        let num = p.power(n, m, u, s)
            * p.phi(n, m, u) as f64
            * p.rho(n, m, s) as f64
            * self.g(n, m, u)
            * self.rx_gain
            * self.hh(n, u, s);
        if num == 0.0 {
            return 0.0;
        }
        let mut ibi = 0.0;
        for m2 in 0..self.cells {
            if m2 == m {
                continue;
            }
            for u2 in 0..self.users {
                if u2 == u {
                    continue;
                }
                ibi += p.power(n, m2, u2, s)
                    * p.phi(n, m2, u2) as f64
                    * p.rho(n, m2, s) as f64
                    * self.g(n, m2, u)
                    * self.rx_gain
                    * self.hh(n, u, s);
            }
        }
        let mut isi = 0.0;
        for n2 in 0..self.n_leos {
            if n2 == n {
                continue;
            }
            for m2 in 0..self.cells {
                if m2 == m {
                    continue;
                }
                for u2 in 0..self.users {
                    if u2 == u {
                        continue;
                    }
                    isi += p.power(n2, m2, u2, s)
                        * p.phi(n2, m2, u2) as f64
                        * p.rho(n2, m2, s) as f64
                        * self.g(n2, m2, u)
                        * self.rx_gain
                        * self.hh(n2, u, s);
                }
            }
        }
        let mut doppler = 0.0;
        if self.subchannels >= 2 {
            let v = self.v[n * self.users + u];
            if v != 0.0 {
                let mut pair = 0.0;
                for s2 in 0..self.subchannels {
                    for s1 in 0..self.subchannels {
                        if s1 == s2 {
                            continue;
                        }
                        let gap = s1 as f64 - s2 as f64;
                        pair += p.power(n, m, u, s1) / (gap * gap);
                    }
                }
                let shift = self.freqs[s] * v * (self.subchannels as f64).powi(2)
                    / (SPEED_OF_LIGHT * self.bandwidth);
                doppler = shift * shift * pair / (2.0 * self.subchannels as f64);
            }
        }
        num / (ibi + isi + self.eta * doppler + self.noise_w)
    }

    /// Ungated quadruple sums of the per-link rate terms.
    pub fn rates(&self, p: &AllocationPolicy) -> (Vec<f64>, Vec<f64>, f64) {
        let mut per_leo = vec![0.0; self.n_leos];
        let mut per_user = vec![0.0; self.users];
        for n in 0..self.n_leos {
            for m in 0..self.cells {
                for u in 0..self.users {
                    for s in 0..self.subchannels {
                        let term = self.w_s
                            * p.rho(n, m, s) as f64
                            * (1.0 + self.sinr(p, n, m, u, s)).log2();
                        per_leo[n] += term;
                        per_user[u] += term;
                    }
                }
            }
        }
        let total = per_leo.iter().sum();
        (per_leo, per_user, total)
    }
}
