//! Equal angular sectors over the venue and initial UAV sizing per sector.

use std::f64::consts::{PI, TAU};

use crate::model::{Sector, UserDevice};
use crate::traffic_units::{ClassRates, Traffic};

/// Number of sectors whose arc at the mid-radius `venue_radius` is at least
/// one UAV footprint diameter: floor(π·R'/R), at least 1.
pub fn compute_sector_count(venue_radius: f64, uav_range: f64) -> usize {
    debug_assert!(uav_range > 0.0 && uav_range < venue_radius);
    ((PI * venue_radius / uav_range).floor() as usize).max(1)
}

/// Sector index for a polar angle in [0, 2π).
pub fn sector_of_angle(angle: f64, sector_count: usize) -> usize {
    let idx = (angle.rem_euclid(TAU) * sector_count as f64 / TAU).floor() as usize;
    idx.min(sector_count - 1)
}

/// Empty sectors with their angular bounds.
pub fn make_sectors(sector_count: usize) -> Vec<Sector> {
    let width = TAU / sector_count as f64;
    (0..sector_count)
        .map(|id| Sector {
            id,
            angle_lo: id as f64 * width,
            angle_hi: (id + 1) as f64 * width,
            user_ids: Default::default(),
            traffic: Traffic::ZERO,
            traffic_by_class: ClassRates::default(),
            uav_ids: Default::default(),
            score: 0.0,
        })
        .collect()
}

/// Maps every user to its sector by angle and fills per-sector demand.
/// Also writes `sector_id` back onto the users.
pub fn assign_users_to_sectors(users: &mut [UserDevice], sector_count: usize) -> Vec<Sector> {
    let mut sectors = make_sectors(sector_count);
    for user in users.iter_mut() {
        let s = sector_of_angle(user.angle, sector_count);
        user.sector_id = s;
        sectors[s].user_ids.insert(user.id);
    }
    refresh_sector_traffic(&mut sectors, users);
    sectors
}

/// Recomputes `traffic` and `traffic_by_class` from current user rates.
pub fn refresh_sector_traffic(sectors: &mut [Sector], users: &[UserDevice]) {
    for sector in sectors.iter_mut() {
        let by_class: ClassRates = sector.user_ids.iter().map(|&u| users[u].gen_rate).sum();
        sector.traffic_by_class = by_class;
        sector.traffic = by_class.total();
    }
}

/// UAVs needed to carry `traffic` with per-UAV buffer `buffer`: ceil(T/B).
pub fn required_uavs(traffic: Traffic, buffer: Traffic) -> usize {
    assert!(buffer.micros() > 0, "buffer must be positive");
    let t = traffic.micros().max(0);
    let b = buffer.micros();
    ((t + b - 1) / b) as usize
}
