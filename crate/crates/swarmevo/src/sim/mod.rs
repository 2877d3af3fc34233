//! Deterministic 2D kinematic multi-robot simulator: walled square arena,
//! differential-drive circular robots, sector sensors, simple collision
//! resolution and an energy/charging model for the resource sharing task.

mod sensors;

pub use sensors::{sense, sense_into, SensorLayout};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TWO_PI: f64 = std::f64::consts::TAU;

/// Energy model of the resource sharing task. The charging station sits at
/// the arena centre and can hold one robot at a time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergyConfig {
    pub e_max: f64,
    /// Drain with motors off, units per second.
    pub idle_drain: f64,
    /// Drain at full speed on both wheels, units per second.
    pub full_drain: f64,
    /// Charge rate while static inside the station, units per second.
    pub charge_rate: f64,
    pub station_radius: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            e_max: 1000.0,
            idle_drain: 5.0,
            full_drain: 10.0,
            charge_rate: 100.0,
            station_radius: 0.04,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub arena_side: f64,
    pub dt: f64,
    pub steps: u32,
    pub robot_diameter: f64,
    pub max_speed: f64,
    pub obstacle_range: f64,
    pub robot_range: f64,
    pub station_range: f64,
    pub min_separation: f64,
    pub swarm_size: usize,
    /// Whether the count sensor counts the sensing robot itself.
    pub count_sensor_includes_self: bool,
    pub energy: Option<EnergyConfig>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::aggregation()
    }
}

impl SimConfig {
    /// Aggregation task: 7 robots, no energy model.
    pub fn aggregation() -> Self {
        Self {
            arena_side: 3.0,
            dt: 0.1,
            steps: 2500,
            robot_diameter: 0.08,
            max_speed: 0.12,
            obstacle_range: 0.10,
            robot_range: 0.25,
            station_range: 1.0,
            min_separation: 0.5,
            swarm_size: 7,
            count_sensor_includes_self: true,
            energy: None,
        }
    }

    /// Resource sharing task: 5 robots and the central charging station.
    pub fn resource_sharing() -> Self {
        Self {
            swarm_size: 5,
            energy: Some(EnergyConfig::default()),
            ..Self::aggregation()
        }
    }

    pub fn robot_radius(&self) -> f64 {
        self.robot_diameter / 2.0
    }

    /// Half the arena diagonal; normalizer for all distance measures.
    pub fn d_max(&self) -> f64 {
        self.arena_side * std::f64::consts::SQRT_2 / 2.0
    }

    pub fn station_center(&self) -> (f64, f64) {
        (self.arena_side / 2.0, self.arena_side / 2.0)
    }

    /// Length of the controller input vector for this configuration.
    pub fn input_len(&self) -> usize {
        if self.energy.is_some() {
            26
        } else {
            17
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.arena_side <= 0.0 || self.dt <= 0.0 || self.steps == 0 {
            bad.push("arena_side, dt and steps must be positive".to_string());
        }
        if self.swarm_size == 0 {
            bad.push("swarm_size must be >= 1".to_string());
        }
        let r = self.robot_radius();
        for (name, range) in [
            ("obstacle_range", self.obstacle_range),
            ("robot_range", self.robot_range),
            ("station_range", self.station_range),
        ] {
            if range <= r {
                bad.push(format!("{name} must exceed the robot radius"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    /// Commanded wheel speeds, m/s.
    pub left: f64,
    pub right: f64,
    pub stopped: bool,
    pub energy: f64,
    pub alive: bool,
    pub charging: bool,
}

impl RobotState {
    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    /// Signed mean wheel speed, the robot's instantaneous movement measure.
    pub fn mean_wheel_speed(&self) -> f64 {
        (self.left + self.right) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub robots: Vec<RobotState>,
    pub tick: u32,
}

impl WorldState {
    pub fn alive_count(&self) -> usize {
        self.robots.iter().filter(|r| r.alive).count()
    }

    /// Centre of mass of all robots (aggregation task has no deaths).
    pub fn center_of_mass(&self) -> (f64, f64) {
        let n = self.robots.len() as f64;
        let (sx, sy) = self
            .robots
            .iter()
            .fold((0.0, 0.0), |(ax, ay), r| (ax + r.x, ay + r.y));
        (sx / n, sy / n)
    }
}

/// Place robots uniformly at random with pairwise separation of at least
/// `min_separation`, by rejection sampling. Deterministic per seed.
pub fn place_robots(config: &SimConfig, trial_seed: u64) -> Result<WorldState> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    let r = config.robot_radius();
    let lo = r;
    let hi = config.arena_side - r;
    let e_max = config.energy.map_or(0.0, |e| e.e_max);
    let mut robots: Vec<RobotState> = Vec::with_capacity(config.swarm_size);
    let mut rejections = 0u32;
    while robots.len() < config.swarm_size {
        let x = rng.random_range(lo..=hi);
        let y = rng.random_range(lo..=hi);
        let separated = robots
            .iter()
            .all(|o| (o.x - x).hypot(o.y - y) >= config.min_separation);
        if !separated {
            rejections += 1;
            if rejections > 100_000 {
                return Err(Error::Config(
                    "could not place robots at the required separation; arena too crowded"
                        .into(),
                ));
            }
            continue;
        }
        robots.push(RobotState {
            x,
            y,
            heading: rng.random_range(0.0..TWO_PI),
            left: 0.0,
            right: 0.0,
            stopped: false,
            energy: e_max,
            alive: true,
            charging: false,
        });
    }
    Ok(WorldState { robots, tick: 0 })
}

/// Map controller outputs in `[0,1]^3` to wheel speeds. The third output
/// stops the robot completely when above 0.5; otherwise each wheel maps
/// linearly to `[-max_speed, max_speed]`.
pub fn actuate(outputs: [f64; 3], max_speed: f64) -> ((f64, f64), bool) {
    if outputs[2] > 0.5 {
        ((0.0, 0.0), true)
    } else {
        (
            (
                (2.0 * outputs[0] - 1.0) * max_speed,
                (2.0 * outputs[1] - 1.0) * max_speed,
            ),
            false,
        )
    }
}

/// Advance the world one tick: apply the controller outputs of the alive
/// robots (in robot-index order), integrate the differential-drive
/// kinematics, resolve collisions, and update energy when the task has an
/// energy model.
pub fn step(config: &SimConfig, world: &mut WorldState, outputs: &[[f64; 3]]) {
    debug_assert_eq!(outputs.len(), world.alive_count(), "one output triple per alive robot");
    let dt = config.dt;
    let wheelbase = config.robot_diameter;
    let mut k = 0;
    for robot in world.robots.iter_mut().filter(|r| r.alive) {
        let ((left, right), stopped) = actuate(outputs[k], config.max_speed);
        k += 1;
        robot.left = left;
        robot.right = right;
        robot.stopped = stopped;
        let v = (left + right) / 2.0;
        let omega = (right - left) / wheelbase;
        robot.x += v * robot.heading.cos() * dt;
        robot.y += v * robot.heading.sin() * dt;
        robot.heading = (robot.heading + omega * dt).rem_euclid(TWO_PI);
    }
    clamp_to_walls(config, world);
    resolve_collisions(config, world);
    if config.energy.is_some() {
        update_energy(config, world);
    }
    world.tick += 1;
}

fn clamp_to_walls(config: &SimConfig, world: &mut WorldState) {
    let r = config.robot_radius();
    let hi = config.arena_side - r;
    for robot in world.robots.iter_mut().filter(|r| r.alive) {
        robot.x = robot.x.clamp(r, hi);
        robot.y = robot.y.clamp(r, hi);
    }
}

/// Push overlapping robot pairs apart equally along the contact normal until
/// tangent, then clamp to the walls; iterated 5 times. Headings unchanged.
pub fn resolve_collisions(config: &SimConfig, world: &mut WorldState) {
    let diameter = config.robot_diameter;
    let alive: Vec<usize> = (0..world.robots.len())
        .filter(|&i| world.robots[i].alive)
        .collect();
    for _ in 0..5 {
        let mut moved = false;
        for a in 0..alive.len() {
            for b in a + 1..alive.len() {
                let (i, j) = (alive[a], alive[b]);
                let dx = world.robots[j].x - world.robots[i].x;
                let dy = world.robots[j].y - world.robots[i].y;
                let dist = dx.hypot(dy);
                if dist >= diameter {
                    continue;
                }
                moved = true;
                // Coincident centres: separate along x deterministically.
                let (nx, ny) = if dist > 1e-12 { (dx / dist, dy / dist) } else { (1.0, 0.0) };
                let push = (diameter - dist) / 2.0;
                world.robots[i].x -= nx * push;
                world.robots[i].y -= ny * push;
                world.robots[j].x += nx * push;
                world.robots[j].y += ny * push;
            }
        }
        clamp_to_walls(config, world);
        if !moved {
            break;
        }
    }
}

/// Energy bookkeeping for one tick: drain linear in the mean absolute wheel
/// speed, exclusive charging for the unique static robot inside the station
/// (nearest-centre tie-break), energies clamped to `[0, e_max]`, and robots
/// at zero energy flagged dead.
pub fn update_energy(config: &SimConfig, world: &mut WorldState) {
    let energy = config.energy.expect("energy model configured");
    let (cx, cy) = config.station_center();
    let dt = config.dt;

    // The single charging occupant: static inside the station, nearest to
    // the centre, lowest index on exact ties.
    let mut occupant: Option<(usize, f64)> = None;
    for (i, robot) in world.robots.iter().enumerate() {
        if !robot.alive || robot.left != 0.0 || robot.right != 0.0 {
            continue;
        }
        let dist = (robot.x - cx).hypot(robot.y - cy);
        if dist <= energy.station_radius && occupant.is_none_or(|(_, best)| dist < best) {
            occupant = Some((i, dist));
        }
    }

    for (i, robot) in world.robots.iter_mut().enumerate() {
        if !robot.alive {
            continue;
        }
        let speed_fraction =
            (robot.left.abs() + robot.right.abs()) / (2.0 * config.max_speed);
        let drain = energy.idle_drain + (energy.full_drain - energy.idle_drain) * speed_fraction;
        robot.energy -= drain * dt;
        robot.charging = occupant.is_some_and(|(occ, _)| occ == i);
        if robot.charging {
            robot.energy += energy.charge_rate * dt;
        }
        robot.energy = robot.energy.clamp(0.0, energy.e_max);
        if robot.energy <= 0.0 {
            robot.energy = 0.0;
            robot.alive = false;
            robot.charging = false;
        }
    }
}

/// One row of a per-tick trajectory log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub tick: u32,
    pub robot: usize,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub energy: f64,
    pub alive: bool,
}

pub fn record_trajectory(world: &WorldState, out: &mut Vec<TrajectorySample>) {
    for (i, r) in world.robots.iter().enumerate() {
        out.push(TrajectorySample {
            tick: world.tick,
            robot: i,
            x: r.x,
            y: r.y,
            heading: r.heading,
            energy: r.energy,
            alive: r.alive,
        });
    }
}

/// CSV trajectory log: `tick,robot,x,y,heading,energy,alive`.
pub fn write_trajectory_csv<W: std::io::Write>(
    samples: &[TrajectorySample],
    mut w: W,
) -> Result<()> {
    writeln!(w, "tick,robot,x,y,heading,energy,alive")?;
    for s in samples {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            s.tick,
            s.robot,
            s.x,
            s.y,
            s.heading,
            s.energy,
            u8::from(s.alive)
        )?;
    }
    Ok(())
}
