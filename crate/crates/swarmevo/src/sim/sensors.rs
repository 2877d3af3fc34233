//! Sector sensors: each of the 8 sensors covers a 45 degree sector centred
//! at heading + i * 45 degrees. Distance readings are normalized by the
//! sensor range, with 1.0 meaning nothing sensed.

use super::{SimConfig, WorldState, TWO_PI};

pub const NUM_SECTORS: usize = 8;
const SECTOR_WIDTH: f64 = TWO_PI / NUM_SECTORS as f64;

/// Index layout of the controller input vector.
#[derive(Debug, Clone, Copy)]
pub struct SensorLayout {
    pub len: usize,
    pub with_energy: bool,
}

impl SensorLayout {
    pub fn for_config(config: &SimConfig) -> SensorLayout {
        SensorLayout { len: config.input_len(), with_energy: config.energy.is_some() }
    }
}

/// Sector index of a world-frame bearing seen from a robot with `heading`.
fn sector_of(heading: f64, bearing: f64) -> usize {
    let rel = (bearing - heading + SECTOR_WIDTH / 2.0).rem_euclid(TWO_PI);
    ((rel / SECTOR_WIDTH) as usize) % NUM_SECTORS
}

/// Distance along direction `(cos a, sin a)` from `(x, y)` to the nearest
/// arena wall.
fn wall_distance(config: &SimConfig, x: f64, y: f64, angle: f64) -> f64 {
    let (c, s) = (angle.cos(), angle.sin());
    let side = config.arena_side;
    let tx = if c > 1e-12 {
        (side - x) / c
    } else if c < -1e-12 {
        x / -c
    } else {
        f64::INFINITY
    };
    let ty = if s > 1e-12 {
        (side - y) / s
    } else if s < -1e-12 {
        y / -s
    } else {
        f64::INFINITY
    };
    tx.min(ty).max(0.0)
}

/// Fill `out` with the input vector of robot `index`.
///
/// Aggregation layout (17): 8 obstacle readings, 8 robot readings, the
/// count sensor. Resource sharing layout (26): 8 obstacle readings, 8
/// robot readings, 8 station readings, the charging flag and the energy
/// fraction. Obstacle sensors see walls (ray-cast along the sector
/// centreline) and other robots alike.
pub fn sense_into(config: &SimConfig, world: &WorldState, index: usize, out: &mut [f64]) {
    let layout = SensorLayout::for_config(config);
    assert_eq!(out.len(), layout.len, "input buffer sized for the task");
    let me = &world.robots[index];
    debug_assert!(me.alive, "dead robots do not sense");
    out.fill(1.0);

    // Obstacle sensors: wall ray-cast along each sector centreline.
    for (i, slot) in out[..NUM_SECTORS].iter_mut().enumerate() {
        let angle = me.heading + i as f64 * SECTOR_WIDTH;
        let d = wall_distance(config, me.x, me.y, angle);
        if d <= config.obstacle_range {
            *slot = (d / config.obstacle_range).min(*slot);
        }
    }

    // Robot sensors; nearby robots also show up as obstacles.
    let mut nearby = usize::from(config.count_sensor_includes_self);
    for (j, other) in world.robots.iter().enumerate() {
        if j == index || !other.alive {
            continue;
        }
        let dx = other.x - me.x;
        let dy = other.y - me.y;
        let d = dx.hypot(dy);
        if d > config.robot_range {
            continue;
        }
        nearby += 1;
        let sector = sector_of(me.heading, dy.atan2(dx));
        let slot = &mut out[NUM_SECTORS + sector];
        *slot = slot.min(d / config.robot_range);
        if d <= config.obstacle_range {
            let slot = &mut out[sector];
            *slot = slot.min(d / config.obstacle_range);
        }
    }

    if layout.with_energy {
        let energy = config.energy.expect("energy model configured");
        let base = 2 * NUM_SECTORS;
        let (cx, cy) = config.station_center();
        let dx = cx - me.x;
        let dy = cy - me.y;
        let d = dx.hypot(dy);
        if d <= config.station_range {
            let sector = sector_of(me.heading, dy.atan2(dx));
            out[base + sector] = d / config.station_range;
        }
        out[base + NUM_SECTORS] = f64::from(me.charging);
        out[base + NUM_SECTORS + 1] = (me.energy / energy.e_max).clamp(0.0, 1.0);
    } else {
        out[2 * NUM_SECTORS] = (nearby as f64 / config.swarm_size as f64).min(1.0);
    }
}

/// Convenience wrapper returning a fresh input vector.
pub fn sense(config: &SimConfig, world: &WorldState, index: usize) -> Vec<f64> {
    let mut out = vec![0.0; config.input_len()];
    sense_into(config, world, index, &mut out);
    out
}
