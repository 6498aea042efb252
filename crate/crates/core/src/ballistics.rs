//! Virtual bow: hand poses to launch velocity, gravity-only 3D flight and
//! gate scoring.
//!
//! Angles follow the launcher convention: `theta` is elevation above the
//! horizontal plane and `gamma_azimuth` is measured from `+y` toward `+x`,
//! so a shot with `gamma_azimuth = 0` flies straight down the range.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Standard gravity used by the launcher, m/s².
pub const GRAVITY: f64 = 9.8;

/// Crazyflie-class drone mass, kg.
pub const DRONE_MASS: f64 = 0.027;

/// Hands closer than this cannot define a launch direction, m.
pub const AIM_EPSILON: f64 = 1e-6;

/// Longest flight `sample_trajectory` will emit before truncating, s.
pub const MAX_FLIGHT_TIME: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandPose {
    pub p_bow: Vec3,
    pub p_arrow: Vec3,
}

impl HandPose {
    pub fn new(p_bow: Vec3, p_arrow: Vec3) -> Self {
        Self { p_bow, p_arrow }
    }

    pub fn stretch(&self) -> f64 {
        self.p_bow.distance(self.p_arrow)
    }

    pub fn is_finite(&self) -> bool {
        self.p_bow.is_finite() && self.p_arrow.is_finite()
    }
}

/// Spring model of the virtual bow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BowModel {
    /// Hooke constant, N/m.
    pub spring_k: f64,
    /// Stretch at which the bow saturates, m.
    pub max_stretch: f64,
    /// Use the textbook `½·K·x²` instead of `K·x²`.
    pub physical_spring: bool,
}

impl Default for BowModel {
    fn default() -> Self {
        Self {
            spring_k: 0.5,
            max_stretch: 1.0,
            physical_spring: false,
        }
    }
}

impl BowModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.spring_k.is_finite() && self.spring_k > 0.0) {
            return Err(Error::config("bow.spring_k", "must be finite and > 0"));
        }
        if !(self.max_stretch.is_finite() && self.max_stretch > 0.0) {
            return Err(Error::config("bow.max_stretch", "must be finite and > 0"));
        }
        Ok(())
    }

    /// Stretch as a fraction of saturation, in [0, 1].
    pub fn tension(&self, stretch: f64) -> f64 {
        (stretch / self.max_stretch).clamp(0.0, 1.0)
    }
}

/// Stored energy at a given bowstring stretch. Stretch past `max_stretch`
/// saturates.
pub fn bow_energy(bow: &BowModel, stretch: f64) -> Result<f64> {
    if !(stretch >= 0.0) {
        return Err(Error::Domain(format!("stretch must be >= 0, got {stretch}")));
    }
    let x = stretch.min(bow.max_stretch);
    let u = bow.spring_k * x * x;
    Ok(if bow.physical_spring { 0.5 * u } else { u })
}

/// Speed at which `energy` fully converts to kinetic energy of `mass`.
pub fn launch_speed(energy: f64, mass: f64) -> Result<f64> {
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::Domain(format!("mass must be > 0, got {mass}")));
    }
    if !(energy >= 0.0) || !energy.is_finite() {
        return Err(Error::Domain(format!("energy must be >= 0, got {energy}")));
    }
    Ok((2.0 * energy / mass).sqrt())
}

/// Velocity along the arrow-hand to bow-hand direction with magnitude `speed`.
pub fn launch_velocity(hands: &HandPose, speed: f64) -> Result<Vec3> {
    let dir = (hands.p_bow - hands.p_arrow)
        .try_normalize(AIM_EPSILON)
        .ok_or(Error::DegenerateAim)?;
    Ok(dir * speed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaunchState {
    pub mass: f64,
    pub energy: f64,
    pub speed: f64,
    pub velocity: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryParams {
    pub v0: f64,
    pub theta: f64,
    pub gamma_azimuth: f64,
    pub g: f64,
    pub origin: Vec3,
}

impl TrajectoryParams {
    /// Parameters for a launch from `origin` with initial velocity `velocity`.
    /// A zero velocity yields a free fall.
    pub fn from_velocity(origin: Vec3, velocity: Vec3, g: f64) -> Self {
        let (theta, gamma_azimuth) = angles_from_velocity(velocity).unwrap_or((0.0, 0.0));
        Self {
            v0: velocity.norm(),
            theta,
            gamma_azimuth,
            g,
            origin,
        }
    }

    /// Analytic velocity, the time derivative of [`trajectory_point`].
    pub fn velocity_at(&self, t: f64) -> Vec3 {
        let (st, ct) = self.theta.sin_cos();
        let (sg, cg) = self.gamma_azimuth.sin_cos();
        Vec3::new(self.v0 * ct * sg, self.v0 * ct * cg, self.v0 * st - self.g * t)
    }

    pub fn initial_velocity(&self) -> Vec3 {
        self.velocity_at(0.0)
    }

    /// Latest time at which the flight height equals `z_floor`, if any.
    pub fn descending_crossing(&self, z_floor: f64) -> Option<f64> {
        let vz = self.v0 * self.theta.sin();
        let disc = vz * vz + 2.0 * self.g * (self.origin.z - z_floor);
        if disc < 0.0 {
            return None;
        }
        Some(((vz + disc.sqrt()) / self.g).max(0.0))
    }
}

/// Position on the flight path at time `t` after release.
// Out of line: inlined copies may lower `sin_cos` to different libm calls and
// disagree in the last bit.
#[inline(never)]
pub fn trajectory_point(params: &TrajectoryParams, t: f64) -> Vec3 {
    let (st, ct) = params.theta.sin_cos();
    let (sg, cg) = params.gamma_azimuth.sin_cos();
    let x = params.v0 * t * ct * sg;
    let y = params.v0 * t * ct * cg;
    let z = params.v0 * t * st - 0.5 * params.g * t * t;
    params.origin + Vec3::new(x, y, z)
}

/// Elevation and azimuth of a velocity. Vertical vectors get azimuth 0.
pub fn angles_from_velocity(v: Vec3) -> Result<(f64, f64)> {
    if !(v.norm() > 0.0) {
        return Err(Error::DegenerateAim);
    }
    let horizontal = v.x.hypot(v.y);
    let theta = v.z.atan2(horizontal);
    let gamma = if horizontal == 0.0 { 0.0 } else { v.x.atan2(v.y) };
    Ok((theta, gamma))
}

/// Inverse of [`angles_from_velocity`].
pub fn velocity_from_angles(speed: f64, theta: f64, gamma_azimuth: f64) -> Vec3 {
    let (st, ct) = theta.sin_cos();
    let (sg, cg) = gamma_azimuth.sin_cos();
    Vec3::new(speed * ct * sg, speed * ct * cg, speed * st)
}

/// Converts a hand pose into the full launch: stored energy, release speed
/// and the flight parameters starting at the bow hand.
pub fn launch(bow: &BowModel, hands: &HandPose, mass: f64, g: f64) -> Result<(LaunchState, TrajectoryParams)> {
    let energy = bow_energy(bow, hands.stretch())?;
    let speed = launch_speed(energy, mass)?;
    let velocity = launch_velocity(hands, speed)?;
    let state = LaunchState {
        mass,
        energy,
        speed,
        velocity,
    };
    Ok((state, TrajectoryParams::from_velocity(hands.p_bow, velocity, g)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub pos: Vec3,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SampledTrajectory {
    pub points: Vec<TrajectorySample>,
    /// The flight lasted beyond [`MAX_FLIGHT_TIME`] and was cut off.
    pub truncated: bool,
}

impl SampledTrajectory {
    pub fn last(&self) -> Option<&TrajectorySample> {
        self.points.last()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "x", "y", "z"])?;
        for s in &self.points {
            w.write_record(&[
                s.t.to_string(),
                s.pos.x.to_string(),
                s.pos.y.to_string(),
                s.pos.z.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Samples the flight on a `dt` grid from release until it comes down
/// through `z_floor`.
///
/// Grid points are `trajectory_point(k * dt)`. The final point is the exact
/// descending crossing of `z_floor` (first point with `z <= z_floor`), unless
/// the flight is longer than [`MAX_FLIGHT_TIME`], in which case the grid is
/// cut there and `truncated` is set.
pub fn sample_trajectory(params: &TrajectoryParams, dt: f64, z_floor: f64) -> Result<SampledTrajectory> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("dt must be > 0, got {dt}")));
    }
    if !(params.g > 0.0) {
        return Err(Error::Domain(format!("g must be > 0, got {}", params.g)));
    }
    let landing = params.descending_crossing(z_floor).map(|t| {
        // Rounding can leave the root a hair above the floor.
        let mut t = t;
        while trajectory_point(params, t).z > z_floor {
            t = t.next_up();
        }
        t
    });

    let mut points = Vec::new();
    let horizon = match landing {
        Some(t) if t <= MAX_FLIGHT_TIME => t,
        Some(_) => MAX_FLIGHT_TIME,
        // The floor is above the apex: the flight starts below it.
        None => 0.0,
    };
    let mut k = 0usize;
    loop {
        let t = k as f64 * dt;
        if t > horizon || (landing.is_some_and(|l| t >= l) && t > 0.0) {
            break;
        }
        points.push(TrajectorySample {
            t,
            pos: trajectory_point(params, t),
        });
        if landing.is_none() {
            break;
        }
        k += 1;
    }
    let truncated = landing.is_some_and(|l| l > MAX_FLIGHT_TIME);
    if let Some(l) = landing.filter(|&l| l <= MAX_FLIGHT_TIME && l > 0.0) {
        points.push(TrajectorySample {
            t: l,
            pos: trajectory_point(params, l),
        });
    }
    Ok(SampledTrajectory { points, truncated })
}

/// Axis a gate's opening faces along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GateAxis {
    X,
    #[default]
    Y,
    Z,
}

impl GateAxis {
    fn normal(self) -> Vec3 {
        match self {
            GateAxis::X => Vec3::X,
            GateAxis::Y => Vec3::Y,
            GateAxis::Z => Vec3::Z,
        }
    }

    /// In-plane (width, height) coordinates of `d`.
    fn in_plane(self, d: Vec3) -> (f64, f64) {
        match self {
            GateAxis::X => (d.y, d.z),
            GateAxis::Y => (d.x, d.z),
            GateAxis::Z => (d.x, d.y),
        }
    }
}

/// Rectangular target; the opening is a closed rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gate {
    pub name: String,
    pub center: Vec3,
    pub width: f64,
    pub height: f64,
    pub weight: u32,
    #[serde(default)]
    pub axis: GateAxis,
}

impl Gate {
    pub fn validate(&self) -> Result<()> {
        if !self.center.is_finite() {
            return Err(Error::config(format!("gates.{}.center", self.name), "must be finite"));
        }
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(Error::config(
                format!("gates.{}.width/height", self.name),
                "must be > 0",
            ));
        }
        if ![1, 3, 5].contains(&self.weight) {
            return Err(Error::config(
                format!("gates.{}.weight", self.name),
                format!("must be 1, 3 or 5, got {}", self.weight),
            ));
        }
        Ok(())
    }

    pub fn contains_in_plane(&self, p: Vec3) -> bool {
        let (u, v) = self.axis.in_plane(p - self.center);
        u.abs() <= 0.5 * self.width && v.abs() <= 0.5 * self.height
    }

    /// Crossings of the gate plane by the polyline, interpolated linearly
    /// between the two samples that straddle it.
    fn crossings<'a>(&'a self, samples: &'a [TrajectorySample]) -> impl Iterator<Item = (f64, Vec3)> + 'a {
        let n = self.axis.normal();
        samples.windows(2).filter_map(move |w| {
            let d0 = (w[0].pos - self.center).dot(n);
            let d1 = (w[1].pos - self.center).dot(n);
            if d0 * d1 > 0.0 {
                return None;
            }
            // A sample lying on the plane is the crossing itself.
            if d0 == 0.0 {
                return Some((w[0].t, w[0].pos));
            }
            if d1 == 0.0 {
                return Some((w[1].t, w[1].pos));
            }
            let s = d0 / (d0 - d1);
            Some((w[0].t + (w[1].t - w[0].t) * s, w[0].pos.lerp(w[1].pos, s)))
        })
    }
}

/// Grey/blue/red gates placed `range` meters down `+y` from `shooter`, side by
/// side at shooter height.
pub fn default_gates(shooter: Vec3, range: f64) -> Vec<Gate> {
    let c = |dx: f64| Vec3::new(shooter.x + dx, shooter.y + range, shooter.z);
    vec![
        Gate {
            name: "grey".into(),
            center: c(-1.2),
            width: 1.0,
            height: 1.0,
            weight: 1,
            axis: GateAxis::Y,
        },
        Gate {
            name: "blue".into(),
            center: c(0.0),
            width: 0.7,
            height: 0.7,
            weight: 3,
            axis: GateAxis::Y,
        },
        Gate {
            name: "red".into(),
            center: c(1.2),
            width: 0.4,
            height: 0.4,
            weight: 5,
            axis: GateAxis::Y,
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotOutcome {
    /// Index into the gate list, `None` on a miss.
    pub gate: Option<usize>,
    pub points: u32,
    pub crossing: Option<Vec3>,
}

impl ShotOutcome {
    pub fn miss() -> Self {
        Self {
            gate: None,
            points: 0,
            crossing: None,
        }
    }
}

/// Scores a sampled flight against a set of gates: the earliest in-rectangle
/// plane crossing wins the gate's weight.
pub fn score_shot(samples: &[TrajectorySample], gates: &[Gate]) -> ShotOutcome {
    let mut best: Option<(f64, usize, Vec3)> = None;
    for (i, gate) in gates.iter().enumerate() {
        let hit = gate.crossings(samples).find(|&(_, p)| gate.contains_in_plane(p));
        if let Some((t, p)) = hit {
            if best.is_none_or(|(bt, _, _)| t < bt) {
                best = Some((t, i, p));
            }
        }
    }
    match best {
        Some((_, i, p)) => ShotOutcome {
            gate: Some(i),
            points: gates[i].weight,
            crossing: Some(p),
        },
        None => ShotOutcome::miss(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn params(v0: f64, theta: f64, gamma: f64) -> TrajectoryParams {
        TrajectoryParams {
            v0,
            theta,
            gamma_azimuth: gamma,
            g: GRAVITY,
            origin: Vec3::ZERO,
        }
    }

    #[test]
    fn bow_energy_examples() {
        let bow = |k| BowModel {
            spring_k: k,
            max_stretch: 1.0,
            physical_spring: false,
        };
        assert_eq!(bow_energy(&bow(1.0), 1.0).unwrap(), 1.0);
        assert_eq!(bow_energy(&bow(2.0), 0.0).unwrap(), 0.0);
        assert_eq!(bow_energy(&bow(2.0), 0.5).unwrap(), 0.5);
        assert!(matches!(bow_energy(&bow(2.0), -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn bow_energy_saturates_and_physical_flag_halves() {
        let mut bow = BowModel {
            spring_k: 2.0,
            max_stretch: 1.0,
            physical_spring: false,
        };
        assert_eq!(bow_energy(&bow, 3.0).unwrap(), 2.0);
        bow.physical_spring = true;
        assert_eq!(bow_energy(&bow, 0.5).unwrap(), 0.25);
    }

    #[test]
    fn launch_speed_examples() {
        assert_eq!(launch_speed(0.0, 0.027).unwrap(), 0.0);
        assert!((launch_speed(0.0135, 0.027).unwrap() - 1.0).abs() < 1e-15);
        let v = launch_speed(0.054, 0.027).unwrap();
        assert!((v - 2.0).abs() < 1e-15);
        // Round trip through kinetic energy.
        assert!((0.5 * 0.027 * v * v - 0.054).abs() <= 1e-12 * 0.054);
        assert!(launch_speed(1.0, 0.0).is_err());
        assert!(launch_speed(1.0, -1.0).is_err());
    }

    #[test]
    fn launch_velocity_examples() {
        let v = launch_velocity(&HandPose::new(Vec3::X, Vec3::ZERO), 1.0).unwrap();
        assert_eq!(v, Vec3::new(1.0, 0.0, 0.0));
        let v = launch_velocity(&HandPose::new(Vec3::new(0.0, 3.0, 4.0), Vec3::ZERO), 2.0).unwrap();
        assert!((v - Vec3::new(0.0, 1.2, 1.6)).norm() < 1e-15);
        let same = HandPose::new(Vec3::new(0.3, 0.2, 1.0), Vec3::new(0.3, 0.2, 1.0));
        assert!(matches!(launch_velocity(&same, 1.0), Err(Error::DegenerateAim)));
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn trajectory_point_examples() {
        let p = trajectory_point(&params(0.0, 0.3, 1.1), 1.0);
        assert_eq!(p, Vec3::new(0.0, 0.0, -4.9));
        let p = trajectory_point(&params(9.8, FRAC_PI_2, 0.0), 1.0);
        assert!(p.x.abs() < 1e-12 && p.y.abs() < 1e-12 && (p.z - 4.9).abs() < 1e-12);
        let p = trajectory_point(&params(9.8, FRAC_PI_4, 0.0), 1.41421);
        assert!((p - Vec3::new(0.0, 9.8, 0.0)).norm() < 1e-3);
    }

    #[test]
    fn angles_examples() {
        assert_eq!(angles_from_velocity(Vec3::Z).unwrap(), (FRAC_PI_2, 0.0));
        assert_eq!(angles_from_velocity(Vec3::Y).unwrap(), (0.0, 0.0));
        let (th, ga) = angles_from_velocity(Vec3::new(1.0, 1.0, 0.0)).unwrap();
        assert_eq!(th, 0.0);
        assert!((ga - FRAC_PI_4).abs() < 1e-15);
        let back = velocity_from_angles(2f64.sqrt(), th, ga);
        assert!((back - Vec3::new(1.0, 1.0, 0.0)).norm() < 1e-15);
        assert!(matches!(angles_from_velocity(Vec3::ZERO), Err(Error::DegenerateAim)));
    }

    #[test]
    fn sampled_free_fall_ends_at_floor_crossing() {
        let tr = sample_trajectory(&params(0.0, 0.0, 0.0), 0.1, -0.49).unwrap();
        let ts: Vec<f64> = tr.points.iter().map(|s| s.t).collect();
        assert_eq!(ts.len(), 5);
        assert_eq!(&ts[..4], &[0.0, 0.1, 0.2, 0.30000000000000004]);
        // ½·g·t² = 0.49
        assert!((ts[4] - (0.98f64 / 9.8).sqrt()).abs() < 1e-12);
        assert!(tr.points[4].pos.z <= -0.49);
        assert!(tr.points[3].pos.z > -0.49);
        assert!(!tr.truncated);
    }

    #[test]
    fn sampled_grid_matches_trajectory_point_exactly() {
        let p = TrajectoryParams {
            origin: Vec3::new(0.1, -1.7, 1.3),
            ..params(4.2, 0.7, -0.3)
        };
        let tr = sample_trajectory(&p, 0.1, 0.0).unwrap();
        let n = tr.points.len();
        for (k, s) in tr.points[..n - 1].iter().enumerate() {
            assert_eq!(s.t, k as f64 * 0.1);
            assert_eq!(s.pos, trajectory_point(&p, k as f64 * 0.1));
        }
        let last = tr.last().unwrap();
        assert_eq!(last.pos, trajectory_point(&p, last.t));
    }

    #[test]
    fn sampled_flight_time_matches_closed_form() {
        let tr = sample_trajectory(&params(9.8, FRAC_PI_4, 0.0), 0.1, 0.0).unwrap();
        let flight = 2.0 * 9.8 * FRAC_PI_4.sin() / 9.8;
        assert!((tr.last().unwrap().t - flight).abs() < 1e-12);
        assert_eq!(tr.points[tr.points.len() - 2].t, 1.4000000000000001);
    }

    #[test]
    fn floor_above_apex_yields_release_point_only() {
        let tr = sample_trajectory(&params(1.0, 0.5, 0.0), 0.1, 5.0).unwrap();
        assert_eq!(tr.points.len(), 1);
        assert_eq!(tr.points[0].t, 0.0);
    }

    #[test]
    fn long_flight_is_truncated() {
        // Apex near 1 km: lands after ~30 s.
        let tr = sample_trajectory(&params(150.0, FRAC_PI_2, 0.0), 0.5, 0.0).unwrap();
        assert!(tr.truncated);
        assert!(tr.last().unwrap().t <= MAX_FLIGHT_TIME);
    }

    #[test]
    fn rejects_bad_dt() {
        assert!(sample_trajectory(&params(1.0, 0.0, 0.0), 0.0, 0.0).is_err());
        assert!(sample_trajectory(&params(1.0, 0.0, 0.0), -0.1, 0.0).is_err());
    }

    fn straight_shot(origin: Vec3) -> Vec<TrajectorySample> {
        // Flat, fast, γ=0: x stays bit-identical to the origin.
        let p = TrajectoryParams {
            origin,
            ..params(50.0, 0.0, 0.0)
        };
        sample_trajectory(&p, 0.01, origin.z - 1.0).unwrap().points
    }

    #[test]
    fn straight_shot_through_red_gate_center() {
        let gates = default_gates(Vec3::new(0.0, 0.0, 1.5), 2.5);
        let red = &gates[2];
        let out = score_shot(&straight_shot(red.center - Vec3::new(0.0, 2.5, 0.0)), &gates);
        assert_eq!(out.gate, Some(2));
        assert_eq!(out.points, 5);
    }

    #[test]
    fn short_shot_misses() {
        let gates = default_gates(Vec3::new(0.0, 0.0, 1.5), 2.5);
        let p = TrajectoryParams {
            origin: Vec3::new(1.2, 0.0, 1.5),
            ..params(1.0, 0.3, 0.0)
        };
        let tr = sample_trajectory(&p, 0.05, 0.0).unwrap();
        assert!(tr.points.iter().all(|s| s.pos.y < 2.5));
        assert_eq!(score_shot(&tr.points, &gates), ShotOutcome::miss());
    }

    #[test]
    fn gate_edge_counts_as_hit() {
        let gates = default_gates(Vec3::new(0.0, 0.0, 1.5), 2.5);
        let red = &gates[2];
        let origin = Vec3::new(red.center.x + 0.5 * red.width, 0.0, red.center.z);
        let out = score_shot(&straight_shot(origin), &gates);
        assert_eq!(out.crossing.unwrap().x, red.center.x + 0.2);
        assert_eq!(out.points, 5);
        let origin = Vec3::new(red.center.x + 0.5 * red.width + 1e-9, 0.0, red.center.z);
        assert_eq!(score_shot(&straight_shot(origin), &gates).points, 0);
    }

    #[test]
    fn gate_weight_is_validated() {
        let mut g = default_gates(Vec3::ZERO, 2.5).remove(0);
        assert!(g.validate().is_ok());
        g.weight = 2;
        assert!(g.validate().is_err());
    }

    #[test]
    fn trajectory_csv_has_header_and_rows() {
        let tr = sample_trajectory(&params(0.0, 0.0, 0.0), 0.1, -0.049).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,x,y,z"));
        assert_eq!(lines.next(), Some("0,0,0,0"));
        assert_eq!(lines.count(), tr.points.len() - 1);
    }
}
