//! Constellation layout, user field and per-iteration kinematics.
//!
//! A snapshot holds everything position-dependent at one iteration:
//! satellite and user states, per-satellite cell centers and beam
//! boresights, and the user-to-cell membership map. Snapshots are pure
//! functions of (config, iteration index); advancing one twice by one step
//! lands exactly where advancing once by two steps does.
//!
//! Cells are laid out as a center point plus concentric hexagonal rings:
//! ring k holds 6k cells on a circle of radius k * pitch, where the pitch
//! is sqrt(3) beam radii. A partially filled outer ring takes its slots in
//! increasing-angle order, so layouts are deterministic for any cell count.

use crate::config::{
    GeometryMode, OrbitTopology, ScenarioConfig, UserField, EARTH_RADIUS_KM,
};
use rand::Rng;
use thiserror::Error;

/// Errors raised by geometry construction or queries.
#[derive(Debug, Error)]
pub enum GeometryError {
    /// Satellite and user occupy the same point; angles are undefined.
    #[error("degenerate geometry: satellite {leo} and user {user} are co-located")]
    Degenerate { leo: usize, user: usize },
    /// The configuration failed validation; construction refused.
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
}

/// A 3-vector in meters (positions) or m/s (velocities).
pub type Vec3 = [f64; 3];

pub(crate) fn v_add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn v_sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn v_scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub(crate) fn v_dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn v_norm(a: Vec3) -> f64 {
    v_dot(a, a).sqrt()
}

pub(crate) fn v_cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Rotate `v` about the unit axis `axis` by `angle` radians (Rodrigues).
fn v_rotate(v: Vec3, axis: Vec3, angle: f64) -> Vec3 {
    let (s, c) = angle.sin_cos();
    let term1 = v_scale(v, c);
    let term2 = v_scale(v_cross(axis, v), s);
    let term3 = v_scale(axis, v_dot(axis, v) * (1.0 - c));
    v_add(v_add(term1, term2), term3)
}

/// One satellite: position, velocity, and its orbital plane id.
#[derive(Debug, Clone)]
pub struct SatState {
    pub pos: Vec3,
    pub vel: Vec3,
    pub plane: usize,
}

/// One ground user: position and a fixed-heading velocity.
#[derive(Debug, Clone)]
pub struct UserState {
    pub pos: Vec3,
    pub vel: Vec3,
}

/// Positions, pointings and memberships at one iteration.
#[derive(Debug, Clone)]
pub struct NetworkSnapshot {
    /// Iteration index this snapshot corresponds to.
    pub t: u64,
    pub sats: Vec<SatState>,
    pub users: Vec<UserState>,
    /// Ground-level cell centers, indexed `n * M + m`.
    pub cell_centers: Vec<Vec3>,
    /// Unit vectors from satellite n toward cell center (n, m).
    pub boresights: Vec<Vec3>,
    /// For each user, the unique owning cell `(n, m)` if any.
    pub membership: Vec<Option<(usize, usize)>>,
    /// Cells per satellite, kept for indexing.
    pub cells_per_leo: usize,
}

impl NetworkSnapshot {
    /// Cell membership indicator: 1 exactly when user u belongs to (n, m).
    pub fn kappa(&self, n: usize, m: usize, u: usize) -> bool {
        self.membership[u] == Some((n, m))
    }

    /// Users belonging to cell (n, m), in increasing index order.
    pub fn cell_users(&self, n: usize, m: usize) -> Vec<usize> {
        (0..self.users.len())
            .filter(|&u| self.kappa(n, m, u))
            .collect()
    }

    fn cell_index(&self, n: usize, m: usize) -> usize {
        n * self.cells_per_leo + m
    }
}

// =========================================================================
// Layout helpers
// =========================================================================

/// Hex-grid offsets for `count` cells: the center first, then rings of 6k
/// cells at radius k * pitch, each ring in increasing-angle order.
fn hex_offsets(count: usize, pitch_m: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(count);
    out.push((0.0, 0.0));
    let mut ring = 1usize;
    while out.len() < count {
        let slots = 6 * ring;
        let radius = ring as f64 * pitch_m;
        for i in 0..slots {
            if out.len() == count {
                break;
            }
            let angle = 2.0 * std::f64::consts::PI * i as f64 / slots as f64;
            out.push((radius * angle.cos(), radius * angle.sin()));
        }
        ring += 1;
    }
    out
}

/// Plane/slot assignment for satellite i under the given topology.
/// Heterogeneous constellations use ceil(N/2) planes, at most two
/// satellites per plane.
fn plane_and_slot(i: usize, n: usize, topology: OrbitTopology) -> (usize, usize) {
    match topology {
        OrbitTopology::Homogeneous => (0, i),
        OrbitTopology::Heterogeneous => {
            let planes = n.div_ceil(2);
            (i % planes, i / planes)
        }
    }
}

/// Along-track offsets centered on zero: slot j of `count` maps to
/// (j - (count-1)/2) * spacing.
fn centered_offset(slot: usize, count: usize, spacing: f64) -> f64 {
    (slot as f64 - (count as f64 - 1.0) / 2.0) * spacing
}

// =========================================================================
// Construction
// =========================================================================

/// Build the iteration-zero snapshot: satellites on their planes, cells
/// under each satellite, users drawn uniformly over the configured field
/// with fixed random headings.
pub fn build_constellation(config: &ScenarioConfig) -> Result<NetworkSnapshot, GeometryError> {
    config.validate()?;
    let n = config.n_leos;
    let spacing_m = config.inter_sat_distance_km * 1e3;
    let planes_used: usize = match config.orbit_topology {
        OrbitTopology::Homogeneous => 1,
        OrbitTopology::Heterogeneous => n.div_ceil(2),
    };
    let sats_per_plane = |p: usize| -> usize {
        (0..n)
            .filter(|&i| plane_and_slot(i, n, config.orbit_topology).0 == p)
            .count()
    };

    let mut sats = Vec::with_capacity(n);
    for i in 0..n {
        let (plane, slot) = plane_and_slot(i, n, config.orbit_topology);
        let along = centered_offset(slot, sats_per_plane(plane), spacing_m);
        let cross = centered_offset(plane, planes_used, spacing_m);
        let state = match config.geometry_mode {
            GeometryMode::Planar => SatState {
                pos: [along, cross, config.altitude_km * 1e3],
                vel: [config.sat_speed_km_s * 1e3, 0.0, 0.0],
                plane,
            },
            GeometryMode::Spherical => {
                spherical_sat(config, along, cross, plane)
            }
        };
        sats.push(state);
    }

    let mut snapshot = NetworkSnapshot {
        t: 0,
        sats,
        users: Vec::new(),
        cell_centers: Vec::new(),
        boresights: Vec::new(),
        membership: Vec::new(),
        cells_per_leo: config.cells_per_leo,
    };
    refresh_cells(&mut snapshot, config);

    place_users(&mut snapshot, config);
    refresh_membership(&mut snapshot, config);
    Ok(snapshot)
}

/// Satellite state on a circular orbit: the plane is the equatorial great
/// circle tilted about the x axis by the cross-track offset angle.
fn spherical_sat(config: &ScenarioConfig, along_m: f64, cross_m: f64, plane: usize) -> SatState {
    let r_orbit = (EARTH_RADIUS_KM + config.altitude_km) * 1e3;
    let r_earth = EARTH_RADIUS_KM * 1e3;
    let phase = along_m / r_orbit; // along-track angle
    let tilt = cross_m / r_earth; // plane tilt angle
    let in_plane = [r_orbit * phase.cos(), r_orbit * phase.sin(), 0.0];
    let vel_dir = [-phase.sin(), phase.cos(), 0.0];
    let x_axis = [1.0, 0.0, 0.0];
    SatState {
        pos: v_rotate(in_plane, x_axis, tilt),
        vel: v_rotate(v_scale(vel_dir, config.sat_speed_km_s * 1e3), x_axis, tilt),
        plane,
    }
}

/// Ground point directly beneath a satellite.
fn nadir(config: &ScenarioConfig, sat: &SatState) -> Vec3 {
    match config.geometry_mode {
        GeometryMode::Planar => [sat.pos[0], sat.pos[1], 0.0],
        GeometryMode::Spherical => {
            v_scale(sat.pos, EARTH_RADIUS_KM * 1e3 / v_norm(sat.pos))
        }
    }
}

/// Ground-surface distance between two ground points.
fn ground_distance(config: &ScenarioConfig, a: Vec3, b: Vec3) -> f64 {
    match config.geometry_mode {
        GeometryMode::Planar => v_norm(v_sub(a, b)),
        GeometryMode::Spherical => {
            let r = EARTH_RADIUS_KM * 1e3;
            let cosang = (v_dot(a, b) / (v_norm(a) * v_norm(b))).clamp(-1.0, 1.0);
            r * cosang.acos()
        }
    }
}

/// Map a local (east, north) ground offset from a reference ground point
/// onto the world.
fn offset_ground_point(config: &ScenarioConfig, origin: Vec3, dx: f64, dy: f64) -> Vec3 {
    match config.geometry_mode {
        GeometryMode::Planar => [origin[0] + dx, origin[1] + dy, 0.0],
        GeometryMode::Spherical => {
            // Build a local tangent basis at the origin direction and walk
            // two small great-circle arcs.
            let r = EARTH_RADIUS_KM * 1e3;
            let up = v_scale(origin, 1.0 / v_norm(origin));
            let pole = [0.0, 0.0, 1.0];
            let mut east = v_cross(pole, up);
            let en = v_norm(east);
            if en < 1e-9 {
                east = [0.0, 1.0, 0.0];
            } else {
                east = v_scale(east, 1.0 / en);
            }
            let north = v_cross(up, east);
            let p = v_rotate(origin, north, dx / r);
            // The east axis moves with the first rotation only negligibly
            // for cell-scale offsets; rotate about the updated north-axis
            // complement for the second leg.
            let up2 = v_scale(p, 1.0 / v_norm(p));
            let east2 = {
                let e = v_cross(pole, up2);
                let n2 = v_norm(e);
                if n2 < 1e-9 {
                    east
                } else {
                    v_scale(e, 1.0 / n2)
                }
            };
            v_rotate(p, east2, -dy / r)
        }
    }
}

/// Recompute cell centers and boresights from current satellite positions.
fn refresh_cells(snapshot: &mut NetworkSnapshot, config: &ScenarioConfig) {
    let m = config.cells_per_leo;
    let pitch_m = config.cell_pitch_km() * 1e3;
    let offsets = hex_offsets(m, pitch_m);
    let mut centers = Vec::with_capacity(snapshot.sats.len() * m);
    let mut bores = Vec::with_capacity(snapshot.sats.len() * m);
    for sat in &snapshot.sats {
        let base = nadir(config, sat);
        for &(dx, dy) in &offsets {
            let center = offset_ground_point(config, base, dx, dy);
            let dir = v_sub(center, sat.pos);
            let d = v_norm(dir);
            centers.push(center);
            bores.push(v_scale(dir, 1.0 / d));
        }
    }
    snapshot.cell_centers = centers;
    snapshot.boresights = bores;
}

/// Draw users uniformly over the configured field; headings are uniform
/// on the circle with speed `user_speed_m_s`.
fn place_users(snapshot: &mut NetworkSnapshot, config: &ScenarioConfig) {
    let mut rng = crate::derive_rng(config.seed, 0x75_73_65_72); // "user"
    let field_radius_m = match config.user_field {
        UserField::Serving => config.serving_radius_km * 1e3,
        UserField::Grid => config.grid_field_radius_km() * 1e3,
        UserField::FixedKm(r) => r * 1e3,
    };
    // Disk centers: per-satellite nadirs, or the constellation centroid
    // for the fixed-field mode.
    let centers: Vec<Vec3> = match config.user_field {
        UserField::FixedKm(_) => {
            let mut c = [0.0, 0.0, 0.0];
            for sat in &snapshot.sats {
                c = v_add(c, nadir(config, sat));
            }
            vec![v_scale(c, 1.0 / snapshot.sats.len() as f64)]
        }
        _ => snapshot.sats.iter().map(|s| nadir(config, s)).collect(),
    };

    // Bounding box for rejection sampling (planar coordinates; the
    // spherical mode samples in a tangent frame and projects).
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    let flat_centers: Vec<(f64, f64)> = centers
        .iter()
        .map(|c| match config.geometry_mode {
            GeometryMode::Planar => (c[0], c[1]),
            // Cylindrical-ish chart: longitude arc and latitude arc serve
            // as rejection coordinates; fine for fields far smaller than
            // the planet.
            GeometryMode::Spherical => {
                let r = EARTH_RADIUS_KM * 1e3;
                let lat = (c[2] / r).clamp(-1.0, 1.0).asin();
                (c[1].atan2(c[0]) * r, lat * r)
            }
        })
        .collect();
    for &(x, y) in &flat_centers {
        xmin = xmin.min(x - field_radius_m);
        xmax = xmax.max(x + field_radius_m);
        ymin = ymin.min(y - field_radius_m);
        ymax = ymax.max(y + field_radius_m);
    }

    let mut users = Vec::with_capacity(config.user_count);
    while users.len() < config.user_count {
        let x = rng.gen_range(xmin..=xmax);
        let y = rng.gen_range(ymin..=ymax);
        let inside = flat_centers
            .iter()
            .any(|&(cx, cy)| (x - cx).hypot(y - cy) <= field_radius_m);
        if !inside {
            continue;
        }
        let heading = rng.gen_range(0.0..std::f64::consts::TAU);
        let speed = config.user_speed_m_s;
        let (pos, vel) = match config.geometry_mode {
            GeometryMode::Planar => (
                [x, y, 0.0],
                [speed * heading.cos(), speed * heading.sin(), 0.0],
            ),
            GeometryMode::Spherical => {
                let r = EARTH_RADIUS_KM * 1e3;
                let lon = x / r;
                let lat = (y / r).clamp(-1.5, 1.5);
                let pos = [
                    r * lat.cos() * lon.cos(),
                    r * lat.cos() * lon.sin(),
                    r * lat.sin(),
                ];
                let up = v_scale(pos, 1.0 / r);
                let pole = [0.0, 0.0, 1.0];
                let east = {
                    let e = v_cross(pole, up);
                    v_scale(e, 1.0 / v_norm(e).max(1e-12))
                };
                let north = v_cross(up, east);
                let vel = v_add(
                    v_scale(east, speed * heading.cos()),
                    v_scale(north, speed * heading.sin()),
                );
                (pos, vel)
            }
        };
        users.push(UserState { pos, vel });
    }
    snapshot.users = users;
}

/// Recompute user-to-cell membership: a user belongs to the closest cell
/// center among satellites whose serving disk covers it; ties break toward
/// the lowest (n, m). Users outside every serving disk belong to no cell.
fn refresh_membership(snapshot: &mut NetworkSnapshot, config: &ScenarioConfig) {
    let serving_m = config.serving_radius_km * 1e3;
    let m_cells = config.cells_per_leo;
    let nadirs: Vec<Vec3> = snapshot
        .sats
        .iter()
        .map(|s| nadir(config, s))
        .collect();
    let mut membership = Vec::with_capacity(snapshot.users.len());
    for user in &snapshot.users {
        let mut best: Option<((usize, usize), f64)> = None;
        for (n, nad) in nadirs.iter().enumerate() {
            if ground_distance(config, user.pos, *nad) > serving_m {
                continue;
            }
            for m in 0..m_cells {
                let center = snapshot.cell_centers[n * m_cells + m];
                let d = ground_distance(config, user.pos, center);
                let better = match best {
                    None => true,
                    Some((_, bd)) => d < bd,
                };
                if better {
                    best = Some(((n, m), d));
                }
            }
        }
        membership.push(best.map(|(nm, _)| nm));
    }
    snapshot.membership = membership;
}

// =========================================================================
// Propagation and per-link queries
// =========================================================================

/// Advance a snapshot to iteration `t`. Positions are closed-form in the
/// elapsed time, so `propagate(propagate(s, t1), t2) == propagate(s, t2)`
/// exactly in planar mode and to rounding in spherical mode.
pub fn propagate(snapshot: &NetworkSnapshot, config: &ScenarioConfig, t: u64) -> NetworkSnapshot {
    let dt = (t as f64 - snapshot.t as f64) * config.dt_s;
    let mut out = snapshot.clone();
    out.t = t;
    if dt != 0.0 {
        match config.geometry_mode {
            GeometryMode::Planar => {
                for sat in &mut out.sats {
                    sat.pos = v_add(sat.pos, v_scale(sat.vel, dt));
                }
                for user in &mut out.users {
                    user.pos = v_add(user.pos, v_scale(user.vel, dt));
                }
            }
            GeometryMode::Spherical => {
                for sat in &mut out.sats {
                    advance_on_sphere(sat, dt);
                }
                for user in &mut out.users {
                    let mut s = SatState {
                        pos: user.pos,
                        vel: user.vel,
                        plane: 0,
                    };
                    advance_on_sphere(&mut s, dt);
                    user.pos = s.pos;
                    user.vel = s.vel;
                }
            }
        }
    }
    refresh_cells(&mut out, config);
    refresh_membership(&mut out, config);
    out
}

/// Move a state along its great circle by speed * dt, wrapping around the
/// planet as needed; the velocity vector turns with it.
fn advance_on_sphere(state: &mut SatState, dt: f64) {
    let speed = v_norm(state.vel);
    if speed == 0.0 || dt == 0.0 {
        return;
    }
    let r = v_norm(state.pos);
    let axis = {
        let a = v_cross(state.pos, state.vel);
        v_scale(a, 1.0 / v_norm(a).max(1e-12))
    };
    let angle = speed * dt / r;
    state.pos = v_rotate(state.pos, axis, angle);
    state.vel = v_rotate(state.vel, axis, angle);
}

/// Convenience: the snapshot for iteration `t` built from scratch.
pub fn snapshot_at(config: &ScenarioConfig, t: u64) -> Result<NetworkSnapshot, GeometryError> {
    let base = build_constellation(config)?;
    if t == 0 {
        return Ok(base);
    }
    Ok(propagate(&base, config, t))
}

/// Angle (rad) between the boresight of beam (n, m) and the direction from
/// satellite n to user u.
pub fn off_boresight_angle(snapshot: &NetworkSnapshot, n: usize, m: usize, u: usize) -> f64 {
    let sat = &snapshot.sats[n];
    let dir = v_sub(snapshot.users[u].pos, sat.pos);
    let d = v_norm(dir);
    let bore = snapshot.boresights[snapshot.cell_index(n, m)];
    let cosang = (v_dot(dir, bore) / d).clamp(-1.0, 1.0);
    cosang.acos()
}

/// Slant range (m) from satellite n to user u. The beam index is accepted
/// for symmetry with the link maps but does not influence the distance.
pub fn slant_distance(snapshot: &NetworkSnapshot, n: usize, _m: usize, u: usize) -> f64 {
    v_norm(v_sub(snapshot.users[u].pos, snapshot.sats[n].pos))
}

/// Magnitude of the radial (line-of-sight) relative speed between
/// satellite n and user u (m/s).
pub fn relative_velocity(
    snapshot: &NetworkSnapshot,
    n: usize,
    u: usize,
) -> Result<f64, GeometryError> {
    let dp = v_sub(snapshot.users[u].pos, snapshot.sats[n].pos);
    let d = v_norm(dp);
    if d == 0.0 {
        return Err(GeometryError::Degenerate { leo: n, user: u });
    }
    let dv = v_sub(snapshot.users[u].vel, snapshot.sats[n].vel);
    Ok((v_dot(dp, dv) / d).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{GeometryMode, OrbitTopology, ScenarioConfig, UserField};

    fn base_config() -> ScenarioConfig {
        let mut c = ScenarioConfig::desk();
        c.user_count = 40;
        c
    }

    #[test]
    fn hex_layout_radii_and_counts() {
        let mut c = ScenarioConfig::default();
        c.n_leos = 1;
        c.cells_per_leo = 19;
        c.user_count = 1;
        let snap = build_constellation(&c).unwrap();
        assert_eq!(snap.cell_centers.len(), 19);
        let pitch = c.cell_pitch_km() * 1e3;
        let nadir = [snap.sats[0].pos[0], snap.sats[0].pos[1], 0.0];
        // center cell sits exactly beneath the satellite
        assert!(v_norm(v_sub(snap.cell_centers[0], nadir)) < 1e-6);
        // ring 1: cells 1..7 at 1 pitch; ring 2: cells 7..19 at 2 pitches
        for m in 1..7 {
            let r = v_norm(v_sub(snap.cell_centers[m], nadir));
            assert!((r - pitch).abs() < 1e-6, "cell {m} at {r}");
        }
        for m in 7..19 {
            let r = v_norm(v_sub(snap.cell_centers[m], nadir));
            assert!((r - 2.0 * pitch).abs() < 1e-6, "cell {m} at {r}");
        }
    }

    #[test]
    fn homogeneous_pair_shares_a_plane_at_spacing() {
        let mut c = base_config();
        c.n_leos = 2;
        c.inter_sat_distance_km = 500.0;
        c.orbit_topology = OrbitTopology::Homogeneous;
        let snap = build_constellation(&c).unwrap();
        assert_eq!(snap.sats[0].plane, snap.sats[1].plane);
        let gap = v_norm(v_sub(snap.sats[0].pos, snap.sats[1].pos));
        assert!((gap - 500e3).abs() < 1e-6);
    }

    #[test]
    fn heterogeneous_planes_hold_at_most_two() {
        let mut c = base_config();
        c.n_leos = 4;
        c.orbit_topology = OrbitTopology::Heterogeneous;
        let snap = build_constellation(&c).unwrap();
        let mut per_plane = std::collections::BTreeMap::new();
        for s in &snap.sats {
            *per_plane.entry(s.plane).or_insert(0) += 1;
        }
        assert_eq!(per_plane.len(), 2);
        assert!(per_plane.values().all(|&k| k <= 2));
    }

    #[test]
    fn one_step_moves_a_satellite_eight_meters() {
        let mut c = base_config();
        c.dt_s = 1e-3;
        c.sat_speed_km_s = 8.0;
        let snap = build_constellation(&c).unwrap();
        let next = propagate(&snap, &c, 1);
        let moved = v_norm(v_sub(next.sats[0].pos, snap.sats[0].pos));
        assert!((moved - 8.0).abs() < 1e-9, "moved {moved} m");
    }

    #[test]
    fn zero_dt_freezes_everything() {
        let mut c = base_config();
        c.dt_s = 0.0;
        let snap = build_constellation(&c).unwrap();
        let next = propagate(&snap, &c, 5);
        assert_eq!(next.t, 5);
        for (a, b) in snap.sats.iter().zip(&next.sats) {
            assert_eq!(a.pos, b.pos);
        }
        for (a, b) in snap.users.iter().zip(&next.users) {
            assert_eq!(a.pos, b.pos);
        }
    }

    #[test]
    fn propagation_composes_exactly() {
        let c = base_config();
        let snap = build_constellation(&c).unwrap();
        let two_hops = propagate(&propagate(&snap, &c, 1), &c, 2);
        let one_hop = propagate(&snap, &c, 2);
        for (a, b) in two_hops.sats.iter().zip(&one_hop.sats) {
            for i in 0..3 {
                assert!((a.pos[i] - b.pos[i]).abs() < 1e-9);
            }
        }
        for (a, b) in two_hops.users.iter().zip(&one_hop.users) {
            for i in 0..3 {
                assert!((a.pos[i] - b.pos[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn build_is_deterministic() {
        let c = base_config();
        let a = build_constellation(&c).unwrap();
        let b = build_constellation(&c).unwrap();
        for (x, y) in a.users.iter().zip(&b.users) {
            assert_eq!(x.pos, y.pos);
            assert_eq!(x.vel, y.vel);
        }
        assert_eq!(a.membership, b.membership);
    }

    #[test]
    fn users_land_inside_the_field() {
        let mut c = base_config();
        c.user_field = UserField::Serving;
        c.user_count = 200;
        let snap = build_constellation(&c).unwrap();
        let serving_m = c.serving_radius_km * 1e3;
        for user in &snap.users {
            let covered = snap.sats.iter().any(|s| {
                let nad = [s.pos[0], s.pos[1], 0.0];
                v_norm(v_sub(user.pos, nad)) <= serving_m + 1e-6
            });
            assert!(covered);
        }
    }

    #[test]
    fn membership_is_unique_and_within_serving_range() {
        let mut c = base_config();
        c.user_count = 150;
        c.user_field = UserField::Serving;
        for seed in [1, 2, 3] {
            c.seed = seed;
            let snap = build_constellation(&c).unwrap();
            for (u, owner) in snap.membership.iter().enumerate() {
                if let Some((n, _)) = owner {
                    let nad = [snap.sats[*n].pos[0], snap.sats[*n].pos[1], 0.0];
                    let d = v_norm(v_sub(snap.users[u].pos, nad));
                    assert!(d <= c.serving_radius_km * 1e3 + 1e-6);
                }
            }
        }
    }

    #[test]
    fn membership_picks_the_nearest_center() {
        let c = base_config();
        let snap = build_constellation(&c).unwrap();
        let m_cells = c.cells_per_leo;
        for (u, owner) in snap.membership.iter().enumerate() {
            if let Some((n, m)) = *owner {
                let own = v_norm(v_sub(
                    snap.users[u].pos,
                    snap.cell_centers[n * m_cells + m],
                ));
                // no other cell of a covering satellite is strictly closer
                for n2 in 0..c.n_leos {
                    let nad = [snap.sats[n2].pos[0], snap.sats[n2].pos[1], 0.0];
                    if v_norm(v_sub(snap.users[u].pos, nad)) > c.serving_radius_km * 1e3 {
                        continue;
                    }
                    for m2 in 0..m_cells {
                        let d = v_norm(v_sub(
                            snap.users[u].pos,
                            snap.cell_centers[n2 * m_cells + m2],
                        ));
                        assert!(d >= own - 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn static_user_keeps_its_cell_over_one_step() {
        let mut c = base_config();
        c.user_speed_m_s = 0.0;
        let snap = build_constellation(&c).unwrap();
        let next = propagate(&snap, &c, 1);
        // one 0.8 m satellite step cannot flip a nearest-center decision
        assert_eq!(snap.membership, next.membership);
    }

    #[test]
    fn off_boresight_angle_for_nadir_beam() {
        // Single cell directly below the satellite; a user 100 km out sees
        // the boresight at atan(100/1000).
        let mut c = ScenarioConfig::default();
        c.n_leos = 1;
        c.cells_per_leo = 1;
        c.max_illuminated = 1;
        c.user_count = 1;
        c.altitude_km = 1000.0;
        let mut snap = build_constellation(&c).unwrap();
        snap.users[0].pos = [snap.sats[0].pos[0] + 100e3, snap.sats[0].pos[1], 0.0];
        let theta = off_boresight_angle(&snap, 0, 0, 0);
        assert!((theta - 0.09966865249116204).abs() < 1e-12, "theta {theta}");
        // a user exactly at the center sees zero offset
        snap.users[0].pos = [snap.sats[0].pos[0], snap.sats[0].pos[1], 0.0];
        assert!(off_boresight_angle(&snap, 0, 0, 0) < 1e-12);
    }

    #[test]
    fn slant_distance_cases() {
        let mut c = ScenarioConfig::default();
        c.n_leos = 1;
        c.cells_per_leo = 1;
        c.max_illuminated = 1;
        c.user_count = 1;
        c.altitude_km = 1000.0;
        let mut snap = build_constellation(&c).unwrap();
        snap.users[0].pos = [snap.sats[0].pos[0], snap.sats[0].pos[1], 0.0];
        assert!((slant_distance(&snap, 0, 0, 0) - 1e6).abs() < 1e-6);
        snap.users[0].pos = [snap.sats[0].pos[0] + 500e3, snap.sats[0].pos[1], 0.0];
        assert!((slant_distance(&snap, 0, 0, 0) - 1118033.9887498949).abs() < 1e-6);
    }

    #[test]
    fn relative_velocity_cases() {
        let mut c = ScenarioConfig::default();
        c.n_leos = 1;
        c.cells_per_leo = 1;
        c.max_illuminated = 1;
        c.user_count = 1;
        let mut snap = build_constellation(&c).unwrap();
        // directly below, satellite moving tangentially: zero radial speed
        snap.users[0].pos = [snap.sats[0].pos[0], snap.sats[0].pos[1], 0.0];
        snap.users[0].vel = [0.0, 0.0, 0.0];
        assert!(relative_velocity(&snap, 0, 0).unwrap() < 1e-9);
        // 45 degrees ahead: the projection is 8000 * cos(45)
        snap.users[0].pos = [
            snap.sats[0].pos[0] + 1000e3,
            snap.sats[0].pos[1],
            snap.sats[0].pos[2] - 1000e3,
        ];
        let v = relative_velocity(&snap, 0, 0).unwrap();
        assert!((v - 5656.854249492381).abs() < 1e-6, "v {v}");
        // co-located points are refused
        snap.users[0].pos = snap.sats[0].pos;
        assert!(relative_velocity(&snap, 0, 0).is_err());
    }

    #[test]
    fn spherical_mode_smoke() {
        let mut c = base_config();
        c.geometry_mode = GeometryMode::Spherical;
        c.n_leos = 2;
        let snap = build_constellation(&c).unwrap();
        let r_orbit = (EARTH_RADIUS_KM + c.altitude_km) * 1e3;
        for sat in &snap.sats {
            assert!((v_norm(sat.pos) - r_orbit).abs() < 1e-3);
        }
        for user in &snap.users {
            assert!((v_norm(user.pos) - EARTH_RADIUS_KM * 1e3).abs() < 1e-3);
        }
        // long propagation keeps everyone on their shells (wrap-around)
        let later = propagate(&snap, &c, 500_000);
        for sat in &later.sats {
            assert!((v_norm(sat.pos) - r_orbit).abs() < 1e-2);
        }
        for user in &later.users {
            assert!((v_norm(user.pos) - EARTH_RADIUS_KM * 1e3).abs() < 1e-2);
        }
    }

    #[test]
    fn fixed_field_mode_centers_on_the_centroid() {
        let mut c = base_config();
        c.user_field = UserField::FixedKm(250.0);
        c.n_leos = 2;
        let snap = build_constellation(&c).unwrap();
        let centroid = v_scale(
            v_add(
                [snap.sats[0].pos[0], snap.sats[0].pos[1], 0.0],
                [snap.sats[1].pos[0], snap.sats[1].pos[1], 0.0],
            ),
            0.5,
        );
        for user in &snap.users {
            assert!(v_norm(v_sub(user.pos, centroid)) <= 250e3 + 1e-6);
        }
    }
}
