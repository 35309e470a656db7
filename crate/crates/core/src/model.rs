//! Domain types shared by every stage of the simulator, plus seeded scenario
//! construction.

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::traffic_units::{ClassRates, Traffic};

pub type UserId = usize;
pub type UavId = usize;
pub type SectorId = usize;

/// A ground user, located in polar coordinates around the venue center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserDevice {
    pub id: UserId,
    pub radius: f64,
    pub angle: f64,
    pub sector_id: SectorId,
    pub serving_uav: Option<UavId>,
    pub gen_rate: ClassRates,
    /// Rate before any congestion feedback; recovery climbs back to it.
    pub base_gen_rate: ClassRates,
}

impl UserDevice {
    pub fn position(&self) -> (f64, f64) {
        (
            self.radius * self.angle.cos(),
            self.radius * self.angle.sin(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Serving,
    Root,
    Suspended,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Serving => "serving",
            Role::Root => "root",
            Role::Suspended => "suspended",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavNode {
    pub id: UavId,
    pub x: f64,
    pub y: f64,
    pub altitude: f64,
    pub role: Role,
    /// Home sector. `None` for the root.
    pub sector_id: Option<SectorId>,
    /// Adjacent sector this UAV was moved to assist, parked on the shared
    /// boundary.
    pub helping: Option<SectorId>,
    pub access_buffer_used: Traffic,
    pub relay_buffer_used: Traffic,
    /// Traffic handled last tick: own access intake plus relayed inflow.
    pub load: Traffic,
    pub served_users: BTreeSet<UserId>,
    pub last_heartbeat: u64,
    /// Fault-injected; stops emitting heartbeats.
    pub failed: bool,
    /// Consecutive ticks with no served users.
    pub idle_ticks: usize,
}

impl UavNode {
    pub fn new(
        id: UavId,
        x: f64,
        y: f64,
        altitude: f64,
        role: Role,
        sector_id: Option<SectorId>,
    ) -> Self {
        Self {
            id,
            x,
            y,
            altitude,
            role,
            sector_id,
            helping: None,
            access_buffer_used: Traffic::ZERO,
            relay_buffer_used: Traffic::ZERO,
            load: Traffic::ZERO,
            served_users: BTreeSet::new(),
            last_heartbeat: 0,
            failed: false,
            idle_ticks: 0,
        }
    }

    pub fn is_active(&self) -> bool {
        self.role != Role::Suspended
    }

    pub fn is_serving(&self) -> bool {
        self.role == Role::Serving
    }

    /// Sector whose users this UAV is meant to carry.
    pub fn effective_sector(&self) -> Option<SectorId> {
        self.helping.or(self.sector_id)
    }

    pub fn angle(&self) -> f64 {
        self.y.atan2(self.x).rem_euclid(TAU)
    }

    pub fn horizontal_distance(&self, x: f64, y: f64) -> f64 {
        (self.x - x).hypot(self.y - y)
    }

    /// Distance from this UAV to a ground point.
    pub fn distance_to_ground(&self, x: f64, y: f64) -> f64 {
        self.horizontal_distance(x, y).hypot(self.altitude)
    }
}

/// An equal angular slice of the venue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub id: SectorId,
    pub angle_lo: f64,
    pub angle_hi: f64,
    pub user_ids: BTreeSet<UserId>,
    /// Total demand T(S_n).
    pub traffic: Traffic,
    pub traffic_by_class: ClassRates,
    pub uav_ids: BTreeSet<UavId>,
    pub score: f64,
}

impl Sector {
    pub fn width(&self) -> f64 {
        self.angle_hi - self.angle_lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.angle_lo + self.angle_hi)
    }
}

/// Ground position of the base station that hosts the SDN controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerPos {
    pub xb: f64,
    pub yb: f64,
}

impl ControllerPos {
    /// Venue edge nearest sector 0: (R' + R, 0).
    pub fn for_config(cfg: &SimConfig) -> Self {
        Self {
            xb: cfg.venue_radius + cfg.uav_range,
            yb: 0.0,
        }
    }

    pub fn angle(&self) -> f64 {
        self.yb.atan2(self.xb).rem_euclid(TAU)
    }
}

/// Draws the user population. Sector ids are left at 0 until sectorization.
pub fn init_scenario(cfg: &SimConfig) -> (Vec<UserDevice>, ControllerPos) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let r_lo = cfg.venue_radius - cfg.uav_range;
    let r_hi = cfg.venue_radius + cfg.uav_range;
    let users = (0..cfg.num_users)
        .map(|id| {
            let radius = rng.random_range(r_lo..=r_hi);
            let angle = rng.random_range(0.0..TAU);
            let rates = ClassRates {
                control: cfg.rate_control.sample(&mut rng),
                realtime: cfg.rate_realtime.sample(&mut rng),
                nonrealtime: cfg.rate_nonrealtime.sample(&mut rng),
            };
            UserDevice {
                id,
                radius,
                angle,
                sector_id: 0,
                serving_uav: None,
                gen_rate: rates,
                base_gen_rate: rates,
            }
        })
        .collect();
    (users, ControllerPos::for_config(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_users() {
        let cfg = SimConfig {
            seed: 7,
            ..SimConfig::default()
        };
        let (a, ca) = init_scenario(&cfg);
        let (b, cb) = init_scenario(&cfg);
        assert_eq!(a, b);
        assert_eq!(ca, cb);
        let (c, _) = init_scenario(&SimConfig { seed: 8, ..cfg });
        assert_ne!(a, c);
    }

    #[test]
    fn users_lie_in_annulus() {
        for seed in 0..20 {
            let cfg = SimConfig {
                seed,
                ..SimConfig::default()
            };
            let (users, _) = init_scenario(&cfg);
            assert_eq!(users.len(), 150);
            for u in &users {
                assert!((160.0..=240.0).contains(&u.radius), "{}", u.radius);
                assert!((0.0..TAU).contains(&u.angle));
            }
        }
    }

    #[test]
    fn default_rates_follow_class_ranges() {
        let (users, _) = init_scenario(&SimConfig::default());
        for u in &users {
            assert_eq!(u.gen_rate.control, Traffic::from_units_int(1));
            let rt = u.gen_rate.realtime.micros() / 1_000_000;
            let nrt = u.gen_rate.nonrealtime.micros() / 1_000_000;
            assert!((2..=8).contains(&rt));
            assert!((1..=5).contains(&nrt));
            assert_eq!(u.gen_rate.realtime.micros() % 1_000_000, 0);
            assert_eq!(u.gen_rate, u.base_gen_rate);
        }
    }

    #[test]
    fn single_user_scenario() {
        let cfg = SimConfig {
            num_users: 1,
            ..SimConfig::default()
        };
        let (users, ctrl) = init_scenario(&cfg);
        assert_eq!(users.len(), 1);
        assert_eq!(ctrl, ControllerPos { xb: 240.0, yb: 0.0 });
    }
}
