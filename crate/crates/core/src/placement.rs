//! UAV allocation and per-tick placement updates.
//!
//! Serving UAVs fly on the ring of radius R' and are spaced symmetrically
//! inside their home sector. A congested sector first borrows a non-busy UAV
//! from an adjacent sector (parked on the shared boundary), then gets a newly
//! deployed UAV, and only when the UAV cap is reached is it handed to
//! congestion feedback.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::PlacementError;
use crate::model::{ControllerPos, Role, Sector, SectorId, UavId, UavNode, UserDevice, UserId};
use crate::sectorization::required_uavs;
use crate::traffic_units::{ClassRates, Traffic};

/// Sector score weights for control, realtime and non-realtime traffic.
pub const SCORE_WEIGHT_CONTROL: f64 = 1.5;
pub const SCORE_WEIGHT_REALTIME: f64 = 1.2;
pub const SCORE_WEIGHT_NONREALTIME: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementState {
    /// Indexed by UAV id. UAVs are never removed, only suspended.
    pub uavs: Vec<UavNode>,
    pub sector_scores: Vec<f64>,
    /// Last `ma_window` traffic samples per sector, oldest first.
    pub traffic_history: Vec<VecDeque<Traffic>>,
    /// UAVs found busy by the last `placement_update`.
    pub busy: BTreeSet<UavId>,
    /// Busy UAVs that got no relief because the UAV cap was reached.
    pub congested: BTreeSet<UavId>,
    /// Users served by a busy UAV when `busy` was computed.
    pub busy_users: BTreeSet<UserId>,
    /// Users served by a congested UAV when `congested` was computed.
    pub congested_users: BTreeSet<UserId>,
}

/// What one `placement_update` changed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementOutcome {
    pub surge_sectors: Vec<SectorId>,
    pub moved: Vec<(UavId, SectorId)>,
    pub deployed: Vec<(UavId, SectorId)>,
    pub suspended: Vec<UavId>,
    pub congested_sectors: Vec<SectorId>,
}

impl PlacementOutcome {
    pub fn changed(&self) -> bool {
        !(self.moved.is_empty() && self.deployed.is_empty() && self.suspended.is_empty())
    }
}

fn polar(radius: f64, angle: f64) -> (f64, f64) {
    (radius * angle.cos(), radius * angle.sin())
}

/// Sectors sharing a boundary with `n`.
pub fn adjacent_sectors(n: SectorId, sector_count: usize) -> Vec<SectorId> {
    let mut out = Vec::with_capacity(2);
    if sector_count < 2 {
        return out;
    }
    let prev = (n + sector_count - 1) % sector_count;
    let next = (n + 1) % sector_count;
    out.push(prev);
    if next != prev {
        out.push(next);
    }
    out
}

/// Angle of the boundary shared by sectors `a` and `b`.
fn boundary_angle(sectors: &[Sector], a: SectorId, b: SectorId) -> f64 {
    let count = sectors.len();
    if (a + 1) % count == b {
        sectors[a].angle_hi
    } else {
        sectors[a].angle_lo
    }
}

/// Demand-over-capacity ranking value of a sector. A sector with traffic but
/// no UAVs ranks first.
pub fn sector_score(traffic: &ClassRates, uav_count: usize, buffer: Traffic) -> f64 {
    let weighted = SCORE_WEIGHT_CONTROL * traffic.control.as_units()
        + SCORE_WEIGHT_REALTIME * traffic.realtime.as_units()
        + SCORE_WEIGHT_NONREALTIME * traffic.nonrealtime.as_units();
    if uav_count == 0 {
        return if weighted > 0.0 { f64::INFINITY } else { 0.0 };
    }
    weighted / (uav_count as f64 * buffer.as_units())
}

/// Moving-average surge test: `current` exceeds `surge_threshold` times the
/// mean of the last `ma_window` samples. Needs a full window.
pub fn detect_surge(history: &VecDeque<Traffic>, current: Traffic, cfg: &SimConfig) -> bool {
    let w = cfg.ma_window;
    if history.len() < w {
        return false;
    }
    let sum: Traffic = history.iter().rev().take(w).sum();
    let mean = sum.as_units() / w as f64;
    current.as_units() > cfg.surge_threshold * mean
}

/// Allocates `required_uavs` UAVs per sector plus the root.
pub fn initial_placement(
    sectors: &[Sector],
    controller: &ControllerPos,
    cfg: &SimConfig,
) -> Result<PlacementState, PlacementError> {
    let b = cfg.buffer_access_traffic();
    let counts: Vec<usize> = sectors
        .iter()
        .map(|s| required_uavs(s.traffic, b))
        .collect();
    initial_placement_with_counts(sectors, &counts, controller, cfg)
}

/// Places `counts[n]` UAVs in sector `n`, evenly spaced on the ring of radius
/// R', and one root on the ring at the point nearest the controller.
pub fn initial_placement_with_counts(
    sectors: &[Sector],
    counts: &[usize],
    controller: &ControllerPos,
    cfg: &SimConfig,
) -> Result<PlacementState, PlacementError> {
    assert_eq!(sectors.len(), counts.len());
    let required = counts.iter().sum::<usize>() + 1;
    if let crate::MaxUavs::Limited(cap) = cfg.max_uavs {
        if required > cap {
            return Err(PlacementError::MaxUavsExceeded { required, cap });
        }
    }
    let mut uavs = Vec::with_capacity(required);
    for (sector, &k) in sectors.iter().zip(counts) {
        let width = sector.width();
        for i in 0..k {
            let angle = sector.angle_lo + (i + 1) as f64 * width / (k + 1) as f64;
            let (x, y) = polar(cfg.venue_radius, angle);
            let id = uavs.len();
            uavs.push(UavNode::new(
                id,
                x,
                y,
                cfg.altitude,
                Role::Serving,
                Some(sector.id),
            ));
        }
    }
    let (x, y) = polar(cfg.venue_radius, controller.angle());
    let id = uavs.len();
    uavs.push(UavNode::new(id, x, y, cfg.altitude, Role::Root, None));

    Ok(PlacementState {
        uavs,
        sector_scores: vec![0.0; sectors.len()],
        traffic_history: vec![VecDeque::with_capacity(cfg.ma_window + 1); sectors.len()],
        busy: BTreeSet::new(),
        congested: BTreeSet::new(),
        busy_users: BTreeSet::new(),
        congested_users: BTreeSet::new(),
    })
}

impl PlacementState {
    pub fn sector_count(&self) -> usize {
        self.traffic_history.len()
    }

    pub fn root(&self) -> Option<UavId> {
        self.uavs
            .iter()
            .find(|u| u.role == Role::Root)
            .map(|u| u.id)
    }

    pub fn active_count(&self) -> usize {
        self.uavs.iter().filter(|u| u.is_active()).count()
    }

    /// UAVs that can carry users: serving and not failed.
    pub fn serving(&self) -> impl Iterator<Item = &UavNode> {
        self.uavs.iter().filter(|u| u.is_serving() && !u.failed)
    }

    /// Serving UAVs currently carrying sector `n`'s users.
    pub fn carriers(&self, n: SectorId) -> impl Iterator<Item = &UavNode> {
        self.serving()
            .filter(move |u| u.effective_sector() == Some(n))
    }

    /// Assigned demand per UAV, indexed by UAV id.
    pub fn demand(&self, users: &[UserDevice]) -> Vec<Traffic> {
        self.uavs
            .iter()
            .map(|u| {
                u.served_users
                    .iter()
                    .map(|&i| users[i].gen_rate.total())
                    .sum()
            })
            .collect()
    }

    /// Copies current UAV membership into the sectors.
    pub fn sync_sectors(&self, sectors: &mut [Sector]) {
        for sector in sectors.iter_mut() {
            sector.uav_ids = self.carriers(sector.id).map(|u| u.id).collect();
        }
    }

    /// Each user goes to the nearest serving UAV in its own or an adjacent
    /// sector that still has buffer headroom; with no headroom anywhere, to
    /// the nearest one. Users are visited in id order.
    pub fn assign_users_to_uavs(
        &mut self,
        users: &mut [UserDevice],
        cfg: &SimConfig,
    ) -> Result<(), PlacementError> {
        for uav in &mut self.uavs {
            uav.served_users.clear();
        }
        let serving: Vec<UavId> = self.serving().map(|u| u.id).collect();
        if serving.is_empty() {
            for user in users.iter_mut() {
                user.serving_uav = None;
            }
            return if users.is_empty() {
                Ok(())
            } else {
                Err(PlacementError::NoActiveUav)
            };
        }
        let sector_count = self.sector_count();
        let b = cfg.buffer_access_traffic();
        let mut load = vec![Traffic::ZERO; self.uavs.len()];

        for user in users.iter_mut() {
            let s = user.sector_id;
            let near = |sec: Option<SectorId>| {
                sec.is_some_and(|x| x == s || adjacent_sectors(s, sector_count).contains(&x))
            };
            let mut candidates: Vec<UavId> = serving
                .iter()
                .copied()
                .filter(|&id| {
                    let u = &self.uavs[id];
                    near(u.sector_id) || near(u.helping)
                })
                .collect();
            if candidates.is_empty() {
                candidates = serving.clone();
            }
            let (px, py) = user.position();
            let mut ranked: Vec<(f64, UavId)> = candidates
                .iter()
                .map(|&id| (self.uavs[id].distance_to_ground(px, py), id))
                .collect();
            ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

            let demand = user.gen_rate.total();
            let chosen = ranked
                .iter()
                .find(|(_, id)| load[*id] + demand <= b)
                .unwrap_or(&ranked[0])
                .1;
            load[chosen] += demand;
            self.uavs[chosen].served_users.insert(user.id);
            user.serving_uav = Some(chosen);
        }
        Ok(())
    }

    /// Scores every sector and returns sector ids in descending score order
    /// (ties by lower id).
    pub fn update_sector_scores(
        &mut self,
        sectors: &mut [Sector],
        cfg: &SimConfig,
    ) -> Vec<SectorId> {
        let b = cfg.buffer_access_traffic();
        for sector in sectors.iter_mut() {
            let count = self.carriers(sector.id).count();
            sector.score = sector_score(&sector.traffic_by_class, count, b);
            self.sector_scores[sector.id] = sector.score;
        }
        self.ranking()
    }

    fn ranking(&self) -> Vec<SectorId> {
        let mut order: Vec<SectorId> = (0..self.sector_scores.len()).collect();
        order.sort_by(|&a, &b| {
            self.sector_scores[b]
                .total_cmp(&self.sector_scores[a])
                .then(a.cmp(&b))
        });
        order
    }

    /// Runs surge detection on every sector's current demand, then records
    /// it in the moving-average window.
    pub fn observe_traffic(&mut self, sectors: &[Sector], cfg: &SimConfig) -> Vec<bool> {
        sectors
            .iter()
            .map(|sector| {
                let history = &mut self.traffic_history[sector.id];
                let surge = detect_surge(history, sector.traffic, cfg);
                history.push_back(sector.traffic);
                while history.len() > cfg.ma_window {
                    history.pop_front();
                }
                surge
            })
            .collect()
    }

    fn can_deploy(&self, cfg: &SimConfig) -> bool {
        cfg.max_uavs.allows(self.active_count() + 1)
    }

    /// Brings a UAV into sector `n` at its midpoint, reusing the lowest-id
    /// suspended airframe when there is one.
    fn deploy(&mut self, sector: &Sector, cfg: &SimConfig) -> UavId {
        let (x, y) = polar(cfg.venue_radius, sector.midpoint());
        let reuse = self
            .uavs
            .iter()
            .find(|u| u.role == Role::Suspended && !u.failed)
            .map(|u| u.id);
        match reuse {
            Some(id) => {
                let uav = &mut self.uavs[id];
                uav.x = x;
                uav.y = y;
                uav.role = Role::Serving;
                uav.sector_id = Some(sector.id);
                uav.helping = None;
                uav.idle_ticks = 0;
                uav.served_users.clear();
                id
            }
            None => {
                let id = self.uavs.len();
                self.uavs.push(UavNode::new(
                    id,
                    x,
                    y,
                    cfg.altitude,
                    Role::Serving,
                    Some(sector.id),
                ));
                id
            }
        }
    }

    /// Puts the non-helping UAVs of every sector back at symmetric positions
    /// and parks helpers on their shared boundary.
    pub fn respace(&mut self, sectors: &[Sector], cfg: &SimConfig) {
        for sector in sectors {
            let mut members: Vec<(f64, UavId)> = self
                .serving()
                .filter(|u| u.sector_id == Some(sector.id) && u.helping.is_none())
                .map(|u| {
                    (
                        (u.angle() - sector.angle_lo).rem_euclid(std::f64::consts::TAU),
                        u.id,
                    )
                })
                .collect();
            members.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let k = members.len();
            for (i, &(_, id)) in members.iter().enumerate() {
                let angle = sector.angle_lo + (i + 1) as f64 * sector.width() / (k + 1) as f64;
                let (x, y) = polar(cfg.venue_radius, angle);
                self.uavs[id].x = x;
                self.uavs[id].y = y;
            }
        }
        for id in 0..self.uavs.len() {
            let uav = &self.uavs[id];
            if let (Some(home), Some(helped), true) = (uav.sector_id, uav.helping, uav.is_serving())
            {
                let (x, y) = polar(cfg.venue_radius, boundary_angle(sectors, home, helped));
                self.uavs[id].x = x;
                self.uavs[id].y = y;
            }
        }
    }

    /// One pass of the placement heuristic. Expects `update_sector_scores`
    /// to have run this tick and `surges` from `observe_traffic`.
    ///
    /// Users are not reassigned here; the caller does that afterwards.
    pub fn placement_update(
        &mut self,
        sectors: &[Sector],
        users: &[UserDevice],
        surges: &[bool],
        cfg: &SimConfig,
    ) -> PlacementOutcome {
        let b = cfg.buffer_access_traffic();
        let demand = self.demand(users);
        let mut outcome = PlacementOutcome::default();

        for uav in self.uavs.iter_mut().filter(|u| u.is_serving() && !u.failed) {
            if uav.served_users.is_empty() {
                uav.idle_ticks += 1;
            } else {
                uav.idle_ticks = 0;
            }
        }
        self.busy = self
            .serving()
            .filter(|u| demand[u.id] >= b)
            .map(|u| u.id)
            .collect();
        self.busy_users = self
            .busy
            .iter()
            .flat_map(|&id| self.uavs[id].served_users.iter().copied())
            .collect();
        self.congested.clear();

        let order = self.ranking();
        let sector_count = self.sector_count();
        let mut handled = BTreeSet::new();
        // UAVs deployed or moved in this pass stay where they were sent.
        let mut touched: BTreeSet<UavId> = BTreeSet::new();
        let demand_of = |id: UavId| demand.get(id).copied().unwrap_or(Traffic::ZERO);

        // A surging sector is sized up front to its full requirement.
        for &n in &order {
            if !surges.get(n).copied().unwrap_or(false) {
                continue;
            }
            outcome.surge_sectors.push(n);
            let need = required_uavs(sectors[n].traffic, b);
            let mut have = self.carriers(n).count();
            while have < need && self.can_deploy(cfg) {
                let id = self.deploy(&sectors[n], cfg);
                outcome.deployed.push((id, n));
                touched.insert(id);
                have += 1;
                handled.insert(n);
            }
        }
        outcome.surge_sectors.sort_unstable();

        for &n in &order {
            if handled.contains(&n) {
                continue;
            }
            let busy_here: Vec<UavId> = self
                .carriers(n)
                .filter(|u| self.busy.contains(&u.id))
                .map(|u| u.id)
                .collect();
            if busy_here.is_empty() {
                continue;
            }
            // A sector acts when it overflows or has no headroom left at all.
            // A UAV filled to exactly B next to a sibling with headroom is
            // left alone.
            let overflowing = busy_here.iter().any(|&id| demand_of(id) > b);
            let saturated = busy_here.len() == self.carriers(n).count();
            if !overflowing && !saturated {
                continue;
            }
            let neighbours = adjacent_sectors(n, sector_count);
            let helper = self
                .serving()
                .filter(|u| {
                    u.helping.is_none()
                        && !self.busy.contains(&u.id)
                        && !touched.contains(&u.id)
                        && u.sector_id.is_some_and(|h| neighbours.contains(&h))
                })
                .min_by(|a, b| demand_of(a.id).cmp(&demand_of(b.id)).then(a.id.cmp(&b.id)))
                .map(|u| u.id);
            if let Some(h) = helper {
                self.uavs[h].helping = Some(n);
                outcome.moved.push((h, n));
                touched.insert(h);
            } else if self.can_deploy(cfg) {
                let id = self.deploy(&sectors[n], cfg);
                outcome.deployed.push((id, n));
                touched.insert(id);
            } else {
                self.congested.extend(busy_here);
                outcome.congested_sectors.push(n);
            }
        }

        self.congested_users = self
            .congested
            .iter()
            .flat_map(|&id| self.uavs[id].served_users.iter().copied())
            .collect();

        // Idle UAVs stand down only while nothing is congested.
        if self.busy.is_empty() && outcome.surge_sectors.is_empty() {
            let window = cfg.ma_window;
            let idle: Vec<UavId> = self
                .serving()
                .filter(|u| u.idle_ticks >= window)
                .map(|u| u.id)
                .collect();
            for id in idle {
                let uav = &mut self.uavs[id];
                uav.role = Role::Suspended;
                uav.helping = None;
                uav.served_users.clear();
                outcome.suspended.push(id);
            }
        }

        self.respace(sectors, cfg);
        outcome
    }
}
