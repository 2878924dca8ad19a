//! Scenario configuration: every knob of the simulator in one flat struct.
//!
//! Two scale profiles exist. `ScenarioConfig::default()` carries the full
//! link-budget parameter set (28 GHz carrier, 240 MHz band, 19 cells, 30
//! sub-channels); `ScenarioConfig::desk()` is a reduced profile sized so a
//! complete learning run finishes in well under a second. Config files are
//! TOML with flat `key = value` lines; unknown keys are rejected and parse
//! errors carry line numbers.

use serde::Deserialize;
use thiserror::Error;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Mean Earth radius (km), used by the spherical geometry mode.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Convert a dBm figure to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Convert a dB figure to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// How satellites are arranged into orbital planes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitTopology {
    /// All satellites share one plane, spaced along-track.
    Homogeneous,
    /// Satellites spread over ceil(N/2) planes, at most two per plane.
    Heterogeneous,
}

/// World model used for positions and motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryMode {
    /// Flat-Earth tangent plane; satellites fly straight lines at altitude.
    Planar,
    /// Spherical Earth; satellites fly circular orbits.
    Spherical,
}

/// Region users are drawn from at build time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UserField {
    /// Union of the per-satellite serving disks (`serving_radius_km`).
    Serving,
    /// Union of per-satellite cell-grid footprints (outer ring + one beam
    /// radius). Keeps the whole population inside beam reach.
    Grid,
    /// Single disk of the given radius centered on the constellation
    /// centroid, independent of satellite spacing.
    FixedKm(f64),
}

impl<'de> Deserialize<'de> for UserField {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = UserField;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("\"serving\", \"grid\", or a disk radius in km")
            }
            fn visit_str<E: serde::de::Error>(self, s: &str) -> Result<UserField, E> {
                match s {
                    "serving" => Ok(UserField::Serving),
                    "grid" => Ok(UserField::Grid),
                    other => Err(E::custom(format!(
                        "user_field must be \"serving\", \"grid\", or a number, got \"{other}\""
                    ))),
                }
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> Result<UserField, E> {
                Ok(UserField::FixedKm(v))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<UserField, E> {
                Ok(UserField::FixedKm(v as f64))
            }
        }
        de.deserialize_any(V)
    }
}

/// Errors raised while loading or validating a configuration.
#[derive(Debug, Error)]
pub enum ConfigError {
    /// The config file could not be read.
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    /// TOML syntax error or unknown key; the message carries line/column.
    #[error("config parse error: {0}")]
    Parse(String),
    /// A field value violates a documented bound.
    #[error("invalid config: {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

// =========================================================================
// The scenario itself
// =========================================================================

/// Full description of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// RNG seed; fixes user placement, catalog sampling and agent draws.
    pub seed: u64,
    /// Number of learning iterations (T).
    pub iterations: u64,
    /// Wall-clock time advanced per iteration (s).
    pub dt_s: f64,

    // --- constellation -------------------------------------------------
    /// Number of satellites (N).
    pub n_leos: usize,
    /// Plane layout for the constellation.
    pub orbit_topology: OrbitTopology,
    /// Flat or spherical world.
    pub geometry_mode: GeometryMode,
    /// Orbit altitude above ground (km).
    pub altitude_km: f64,
    /// Along-track (and cross-plane) satellite spacing (km).
    pub inter_sat_distance_km: f64,
    /// Orbital ground speed (km/s).
    pub sat_speed_km_s: f64,

    // --- cells and users ------------------------------------------------
    /// Beam cells per satellite (M), laid out as a center plus hex rings.
    pub cells_per_leo: usize,
    /// Beam cell radius (km); ring pitch is sqrt(3) times this.
    pub beam_radius_km: f64,
    /// Serving disk radius per satellite (km); users outside every disk
    /// belong to no cell.
    pub serving_radius_km: f64,
    /// Number of ground users (U).
    pub user_count: usize,
    /// Ground user speed (m/s); headings are fixed per user at build time.
    pub user_speed_m_s: f64,
    /// Region the user population is drawn from.
    pub user_field: UserField,

    // --- radio ----------------------------------------------------------
    /// Carrier frequency (Hz).
    pub carrier_freq_hz: f64,
    /// Total downlink bandwidth (Hz).
    pub bandwidth_hz: f64,
    /// Number of equal-width sub-channels (S).
    pub sub_channels: usize,
    /// Maximum beams illuminated simultaneously per satellite (L).
    pub max_illuminated: usize,
    /// Peak transmit antenna gain (dBi).
    pub tx_gain_dbi: f64,
    /// User receive antenna gain (dBi).
    pub rx_gain_dbi: f64,
    /// Transmit aperture radius (m); `None` derives 10 wavelengths.
    pub aperture_radius_m: Option<f64>,
    /// Beam pattern cutoff, in multiples of the first-null half-width.
    pub theta_max_lobe_widths: f64,
    /// Per-satellite transmit power budget (dBm).
    pub p_leo_dbm: f64,
    /// Per-beam transmit power ceiling (dBm).
    pub p_beam_dbm: f64,
    /// Noise power spectral density (dBm/Hz).
    pub noise_psd_dbm_hz: f64,
    /// Residual Doppler inter-carrier-interference weight (linear).
    pub doppler_scale: f64,
    /// Fixed atmospheric absorption surrogate (dB).
    pub atmospheric_db: f64,
    /// Fixed clutter loss surrogate (dB).
    pub clutter_db: f64,
    /// Fixed scintillation loss surrogate (dB).
    pub scintillation_db: f64,
    /// Log-normal shadowing standard deviation (dB); 0 disables shadowing.
    pub shadow_sigma_db: f64,

    // --- learning ---------------------------------------------------------
    /// When true every cell is illuminated and the beam agent degenerates
    /// to a single arm (the "no beam allocation" reference mode).
    pub full_beam_illumination: bool,
    /// Exploration probability for every agent.
    pub epsilon: f64,
    /// Discount-style weight on the table maximum in micro updates.
    pub gamma_micro: f64,
    /// Same weight for the per-satellite macro table.
    pub gamma_macro: f64,
    /// Multiplier applied to bit/s rewards before table updates.
    pub reward_scale: f64,
    /// Per-user rate (bit/s) below which a user counts as in outage.
    pub outage_threshold_bps: f64,
    /// Cap on the number of power arms per satellite.
    pub k_power: usize,
    /// Cap on the number of beam-subset arms per satellite.
    pub k_beam: usize,
    /// Cap on the number of sub-channel layout arms per satellite.
    pub k_channel: usize,
}

impl Default for ScenarioConfig {
    /// Full-scale parameter set (the published link budget).
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            iterations: 20_000,
            dt_s: 1e-3,
            n_leos: 2,
            orbit_topology: OrbitTopology::Homogeneous,
            geometry_mode: GeometryMode::Planar,
            altitude_km: 1000.0,
            inter_sat_distance_km: 500.0,
            sat_speed_km_s: 8.0,
            cells_per_leo: 19,
            beam_radius_km: 50.0,
            serving_radius_km: 500.0,
            user_count: 50,
            user_speed_m_s: 20.0,
            user_field: UserField::Serving,
            carrier_freq_hz: 28e9,
            bandwidth_hz: 240e6,
            sub_channels: 30,
            max_illuminated: 15,
            tx_gain_dbi: 50.0,
            rx_gain_dbi: 15.0,
            aperture_radius_m: None,
            theta_max_lobe_widths: 3.0,
            p_leo_dbm: 60.0,
            p_beam_dbm: 40.0,
            noise_psd_dbm_hz: -174.0,
            doppler_scale: 1e-12,
            atmospheric_db: 0.5,
            clutter_db: 0.0,
            scintillation_db: 0.0,
            shadow_sigma_db: 0.0,
            full_beam_illumination: false,
            epsilon: 0.2,
            gamma_micro: 0.15,
            gamma_macro: 0.15,
            reward_scale: 1e-9,
            outage_threshold_bps: 50e6,
            k_power: 512,
            k_beam: 512,
            k_channel: 512,
        }
    }
}

impl ScenarioConfig {
    /// Full-scale profile (alias for `default()`).
    pub fn paper_scale() -> Self {
        Self::default()
    }

    /// Reduced profile: 3 satellites, 7 cells, 8 sub-channels, 30 users,
    /// 5000 iterations. The power budget is deliberately tight (41.5 dBm
    /// ≈ 14.1 W): five active beams still fit the uniform −6 dB anchor
    /// (12.6 W) but all seven cannot, so lighting everything starves the
    /// per-beam power and beam selection has real work to do. The per-user
    /// outage threshold is scaled down with the desk rates (per-user
    /// throughput here runs an order of magnitude below the full-scale
    /// profile), and the per-iteration step is shortened so the geometry
    /// stays quasi-static over one run.
    pub fn desk() -> Self {
        ScenarioConfig {
            iterations: 5000,
            dt_s: 1e-4,
            n_leos: 3,
            cells_per_leo: 7,
            beam_radius_km: 50.0,
            user_count: 30,
            user_field: UserField::Grid,
            sub_channels: 8,
            max_illuminated: 5,
            p_leo_dbm: 41.5,
            outage_threshold_bps: 5e6,
            // sampled catalogs (well below the full enumerations), matching
            // the full-scale regime where 512 samples sit inside far larger
            // combinatorial spaces
            k_power: 16,
            k_beam: 16,
            k_channel: 16,
            ..Self::default()
        }
    }

    // --- derived quantities ------------------------------------------------

    /// Per-sub-channel bandwidth W_s = W / S (Hz).
    pub fn subchannel_bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz / self.sub_channels as f64
    }

    /// Carrier wavelength (m).
    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq_hz
    }

    /// Wave number k = 2*pi*f/c (rad/m).
    pub fn wave_number(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.carrier_freq_hz / SPEED_OF_LIGHT
    }

    /// Effective aperture radius (m): configured value or 10 wavelengths.
    pub fn aperture_radius(&self) -> f64 {
        self.aperture_radius_m
            .unwrap_or_else(|| 10.0 * self.wavelength_m())
    }

    /// Peak transmit gain (linear).
    pub fn tx_gain_linear(&self) -> f64 {
        db_to_linear(self.tx_gain_dbi)
    }

    /// Receive gain (linear).
    pub fn rx_gain_linear(&self) -> f64 {
        db_to_linear(self.rx_gain_dbi)
    }

    /// Satellite power budget (W).
    pub fn p_leo_watts(&self) -> f64 {
        dbm_to_watts(self.p_leo_dbm)
    }

    /// Per-beam power ceiling (W).
    pub fn p_beam_watts(&self) -> f64 {
        dbm_to_watts(self.p_beam_dbm)
    }

    /// Noise power over one sub-channel (W).
    pub fn noise_power_watts(&self) -> f64 {
        dbm_to_watts(self.noise_psd_dbm_hz) * self.subchannel_bandwidth_hz()
    }

    /// Number of beam slots an arm addresses: L normally, M when every
    /// cell is illuminated.
    pub fn beam_slots(&self) -> usize {
        if self.full_beam_illumination {
            self.cells_per_leo
        } else {
            self.max_illuminated
        }
    }

    /// Hex layout pitch: distance between adjacent cell centers (km).
    pub fn cell_pitch_km(&self) -> f64 {
        self.beam_radius_km * 3f64.sqrt()
    }

    /// Radius of the outermost populated hex ring (km); 0 for M = 1.
    pub fn outer_ring_radius_km(&self) -> f64 {
        let mut ring = 0usize;
        let mut capacity = 1usize;
        while capacity < self.cells_per_leo {
            ring += 1;
            capacity += 6 * ring;
        }
        ring as f64 * self.cell_pitch_km()
    }

    /// Radius of the per-satellite cell-grid footprint (km).
    pub fn grid_field_radius_km(&self) -> f64 {
        self.outer_ring_radius_km() + self.beam_radius_km
    }

    /// Beam pattern cutoff angle (rad), clamped to a forward hemisphere.
    /// Beyond it the transmit gain is identically zero.
    pub fn theta_max(&self) -> f64 {
        let ka = self.wave_number() * self.aperture_radius();
        let s = self.theta_max_lobe_widths * crate::math::J1_FIRST_ROOT / ka;
        if s >= 1.0 {
            std::f64::consts::FRAC_PI_2
        } else {
            s.asin().min(std::f64::consts::FRAC_PI_2)
        }
    }

    // --- validation ----------------------------------------------------

    /// Check every documented bound; the first violation is reported with
    /// the offending field name.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_leos == 0 {
            return Err(invalid("n_leos", "must be at least 1"));
        }
        if self.cells_per_leo == 0 {
            return Err(invalid("cells_per_leo", "must be at least 1"));
        }
        if self.max_illuminated == 0 || self.max_illuminated > self.cells_per_leo {
            return Err(invalid(
                "max_illuminated",
                format!(
                    "must lie in 1..={} (cells_per_leo), got {}",
                    self.cells_per_leo, self.max_illuminated
                ),
            ));
        }
        if self.sub_channels == 0 {
            return Err(invalid("sub_channels", "must be at least 1"));
        }
        if self.sub_channels < self.beam_slots() {
            return Err(invalid(
                "sub_channels",
                format!(
                    "must cover every illuminated beam: need at least {}, got {}",
                    self.beam_slots(),
                    self.sub_channels
                ),
            ));
        }
        if self.user_count == 0 {
            return Err(invalid("user_count", "must be at least 1"));
        }
        for (field, v) in [
            ("altitude_km", self.altitude_km),
            ("beam_radius_km", self.beam_radius_km),
            ("serving_radius_km", self.serving_radius_km),
            ("carrier_freq_hz", self.carrier_freq_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("reward_scale", self.reward_scale),
            ("theta_max_lobe_widths", self.theta_max_lobe_widths),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(field, format!("must be positive, got {v}")));
            }
        }
        for (field, v) in [
            ("dt_s", self.dt_s),
            ("sat_speed_km_s", self.sat_speed_km_s),
            ("user_speed_m_s", self.user_speed_m_s),
            ("inter_sat_distance_km", self.inter_sat_distance_km),
            ("doppler_scale", self.doppler_scale),
            ("shadow_sigma_db", self.shadow_sigma_db),
            ("outage_threshold_bps", self.outage_threshold_bps),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(field, format!("must be non-negative, got {v}")));
            }
        }
        if let Some(a) = self.aperture_radius_m {
            if !(a > 0.0) || !a.is_finite() {
                return Err(invalid(
                    "aperture_radius_m",
                    format!("must be positive, got {a}"),
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.epsilon) || !self.epsilon.is_finite() {
            return Err(invalid(
                "epsilon",
                format!("must lie in [0, 1], got {}", self.epsilon),
            ));
        }
        for (field, g) in [
            ("gamma_micro", self.gamma_micro),
            ("gamma_macro", self.gamma_macro),
        ] {
            if !(0.0..1.0).contains(&g) {
                return Err(invalid(field, format!("must lie in [0, 1), got {g}")));
            }
        }
        for (field, k) in [
            ("k_power", self.k_power),
            ("k_beam", self.k_beam),
            ("k_channel", self.k_channel),
        ] {
            if k == 0 {
                return Err(invalid(field, "must be at least 1"));
            }
        }
        if let UserField::FixedKm(r) = self.user_field {
            if !(r > 0.0) || !r.is_finite() {
                return Err(invalid(
                    "user_field",
                    format!("fixed radius must be positive, got {r}"),
                ));
            }
        }
        let outer = self.outer_ring_radius_km();
        if outer > self.serving_radius_km {
            return Err(invalid(
                "beam_radius_km",
                format!(
                    "outermost cell ring at {outer:.1} km exceeds serving_radius_km = {} km",
                    self.serving_radius_km
                ),
            ));
        }
        Ok(())
    }
}

// =========================================================================
// Config files: flat TOML, every key optional, unknown keys rejected
// =========================================================================

/// A partial configuration as read from a file; `None` keeps the base value.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigPatch {
    pub seed: Option<u64>,
    pub iterations: Option<u64>,
    pub dt_s: Option<f64>,
    pub n_leos: Option<usize>,
    pub orbit_topology: Option<OrbitTopology>,
    pub geometry_mode: Option<GeometryMode>,
    pub altitude_km: Option<f64>,
    pub inter_sat_distance_km: Option<f64>,
    pub sat_speed_km_s: Option<f64>,
    pub cells_per_leo: Option<usize>,
    pub beam_radius_km: Option<f64>,
    pub serving_radius_km: Option<f64>,
    pub user_count: Option<usize>,
    pub user_speed_m_s: Option<f64>,
    pub user_field: Option<UserField>,
    pub carrier_freq_hz: Option<f64>,
    pub bandwidth_hz: Option<f64>,
    pub sub_channels: Option<usize>,
    pub max_illuminated: Option<usize>,
    pub tx_gain_dbi: Option<f64>,
    pub rx_gain_dbi: Option<f64>,
    pub aperture_radius_m: Option<f64>,
    pub theta_max_lobe_widths: Option<f64>,
    pub p_leo_dbm: Option<f64>,
    pub p_beam_dbm: Option<f64>,
    pub noise_psd_dbm_hz: Option<f64>,
    pub doppler_scale: Option<f64>,
    pub atmospheric_db: Option<f64>,
    pub clutter_db: Option<f64>,
    pub scintillation_db: Option<f64>,
    pub shadow_sigma_db: Option<f64>,
    pub full_beam_illumination: Option<bool>,
    pub epsilon: Option<f64>,
    pub gamma_micro: Option<f64>,
    pub gamma_macro: Option<f64>,
    pub reward_scale: Option<f64>,
    pub outage_threshold_bps: Option<f64>,
    pub k_power: Option<usize>,
    pub k_beam: Option<usize>,
    pub k_channel: Option<usize>,
}

macro_rules! apply_fields {
    ($patch:expr, $cfg:expr, [$($field:ident),* $(,)?]) => {
        $(if let Some(v) = $patch.$field { $cfg.$field = v; })*
    };
}

impl ConfigPatch {
    /// Parse a patch from TOML text. Unknown keys and syntax errors are
    /// rejected with line/column information.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Overlay this patch on a base configuration.
    pub fn apply(&self, base: &ScenarioConfig) -> ScenarioConfig {
        let mut cfg = base.clone();
        apply_fields!(
            self,
            cfg,
            [
                seed,
                iterations,
                dt_s,
                n_leos,
                orbit_topology,
                geometry_mode,
                altitude_km,
                inter_sat_distance_km,
                sat_speed_km_s,
                cells_per_leo,
                beam_radius_km,
                serving_radius_km,
                user_count,
                user_speed_m_s,
                user_field,
                carrier_freq_hz,
                bandwidth_hz,
                sub_channels,
                max_illuminated,
                tx_gain_dbi,
                rx_gain_dbi,
                theta_max_lobe_widths,
                p_leo_dbm,
                p_beam_dbm,
                noise_psd_dbm_hz,
                doppler_scale,
                atmospheric_db,
                clutter_db,
                scintillation_db,
                shadow_sigma_db,
                full_beam_illumination,
                epsilon,
                gamma_micro,
                gamma_macro,
                reward_scale,
                outage_threshold_bps,
                k_power,
                k_beam,
                k_channel,
            ]
        );
        if let Some(a) = self.aperture_radius_m {
            cfg.aperture_radius_m = Some(a);
        }
        cfg
    }
}

/// Load a validated configuration: `base` overlaid with the TOML file at
/// `path`. An empty file therefore yields `base` itself.
pub fn parse_config(path: &str, base: &ScenarioConfig) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_string(),
        source,
    })?;
    let cfg = ConfigPatch::from_toml(&text)?.apply(base);
    cfg.validate()?;
    Ok(cfg)
}
