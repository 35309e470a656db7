//! Tick driver.
//!
//! Setup runs segmentation, UAV allocation and user association once. Each
//! tick then runs, in order: traffic update (including access-buffer
//! accounting), placement, congestion control, multi-hop routing and metrics.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::SimError;
use crate::model::{init_scenario, ControllerPos, Role, Sector, SectorId, UavId, UserDevice};
use crate::output::{self, ManifestEntry};
use crate::placement::{initial_placement, PlacementState};
use crate::radio::{compute_grid, SnrGrid};
use crate::routing::{
    build_graph, dijkstra_tree, elect_root, forward_relay, RootChange, RoutingTree,
};
use crate::sectorization::{assign_users_to_sectors, compute_sector_count, refresh_sector_traffic};
use crate::traffic::{
    congestion_control, enqueue_and_drop, generate_traffic, recover_rates, FeedbackMessage,
    TickMetrics,
};
use crate::traffic_units::Traffic;

/// Stages of the system flow, reported to a `PhaseObserver` as they start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Segmentation,
    AllocUav,
    UserToUav,
    UpdateTraffic,
    Placement,
    TrafficCongestionControl,
    MultiHopRouting,
    Metrics,
}

/// Setup phases, in order.
pub const SETUP_PHASES: [Phase; 3] = [Phase::Segmentation, Phase::AllocUav, Phase::UserToUav];

/// Per-tick phases, in order.
pub const TICK_PHASES: [Phase; 5] = [
    Phase::UpdateTraffic,
    Phase::Placement,
    Phase::TrafficCongestionControl,
    Phase::MultiHopRouting,
    Phase::Metrics,
];

pub trait PhaseObserver {
    fn enter(&mut self, tick: Option<u64>, phase: Phase);
}

impl PhaseObserver for () {
    fn enter(&mut self, _: Option<u64>, _: Phase) {}
}

/// Records every phase transition.
impl PhaseObserver for Vec<(Option<u64>, Phase)> {
    fn enter(&mut self, tick: Option<u64>, phase: Phase) {
        self.push((tick, phase));
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunFlags {
    /// Mark the current root failed at the start of this tick.
    pub kill_root_at: Option<u64>,
    /// Where artifacts go. Nothing is written when unset.
    pub out_dir: Option<PathBuf>,
    /// Also write PGM heatmaps next to the SNR grids.
    pub write_pgm: bool,
}

/// Everything notable that happened in one tick, beyond the metrics row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickEvents {
    pub tick: u64,
    pub surge_sectors: Vec<SectorId>,
    pub moved: Vec<(UavId, SectorId)>,
    pub deployed: Vec<(UavId, SectorId)>,
    pub suspended: Vec<UavId>,
    pub congested_sectors: Vec<SectorId>,
    pub feedback: Vec<FeedbackMessage>,
    pub root: UavId,
    pub root_change: Option<RootChange>,
    /// Users served by the root at the end of the tick.
    pub root_served_users: usize,
    pub total_intake: Traffic,
    /// Traffic the root handed to the controller.
    pub delivered: Traffic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub id: UavId,
    pub x: f64,
    pub y: f64,
    pub role: Role,
    pub sector: Option<SectorId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: SimConfig,
    pub ticks: Vec<TickMetrics>,
    pub events: Vec<TickEvents>,
    pub roster: Vec<RosterEntry>,
    pub manifest: Vec<ManifestEntry>,
}

pub struct Simulation {
    pub cfg: SimConfig,
    pub users: Vec<UserDevice>,
    pub controller: ControllerPos,
    pub sectors: Vec<Sector>,
    pub state: PlacementState,
    /// Next tick to run.
    pub tick: u64,
    pub metrics: Vec<TickMetrics>,
    pub events: Vec<TickEvents>,
    /// Routing tree of every tick run so far.
    pub trees: Vec<(u64, RoutingTree)>,
    pub kill_root_at: Option<u64>,
}

impl Simulation {
    /// Seeded scenario with the default allocation.
    pub fn new(cfg: SimConfig) -> Result<Self, SimError> {
        Self::new_observed(cfg, &mut ())
    }

    pub fn new_observed(cfg: SimConfig, obs: &mut dyn PhaseObserver) -> Result<Self, SimError> {
        let cfg = cfg.validate()?;
        let (users, controller) = init_scenario(&cfg);
        Self::from_users_observed(cfg, users, controller, obs)
    }

    /// Runs setup over a caller-provided population.
    pub fn from_users(
        cfg: SimConfig,
        users: Vec<UserDevice>,
        controller: ControllerPos,
    ) -> Result<Self, SimError> {
        Self::from_users_observed(cfg, users, controller, &mut ())
    }

    fn from_users_observed(
        cfg: SimConfig,
        mut users: Vec<UserDevice>,
        controller: ControllerPos,
        obs: &mut dyn PhaseObserver,
    ) -> Result<Self, SimError> {
        obs.enter(None, Phase::Segmentation);
        let count = compute_sector_count(cfg.venue_radius, cfg.uav_range);
        let sectors = assign_users_to_sectors(&mut users, count);
        obs.enter(None, Phase::AllocUav);
        let state = initial_placement(&sectors, &controller, &cfg)?;
        obs.enter(None, Phase::UserToUav);
        Self::from_parts(cfg, users, controller, sectors, state)
    }

    /// Starts from an explicit placement. Users must already carry their
    /// sector ids; they are (re)assigned to UAVs here.
    pub fn from_parts(
        cfg: SimConfig,
        mut users: Vec<UserDevice>,
        controller: ControllerPos,
        mut sectors: Vec<Sector>,
        mut state: PlacementState,
    ) -> Result<Self, SimError> {
        state.assign_users_to_uavs(&mut users, &cfg)?;
        state.sync_sectors(&mut sectors);
        Ok(Self {
            cfg,
            users,
            controller,
            sectors,
            state,
            tick: 0,
            metrics: Vec::new(),
            events: Vec::new(),
            trees: Vec::new(),
            kill_root_at: None,
        })
    }

    pub fn snr_grid(&self) -> SnrGrid {
        compute_grid(&self.state.uavs, &self.cfg)
    }

    pub fn step(&mut self) -> Result<&TickMetrics, SimError> {
        self.step_observed(&mut ())
    }

    pub fn step_observed(&mut self, obs: &mut dyn PhaseObserver) -> Result<&TickMetrics, SimError> {
        let tick = self.tick;
        self.run_tick(tick, obs).map_err(|e| e.at_tick(tick))?;
        self.tick += 1;
        Ok(self.metrics.last().expect("tick appended metrics"))
    }

    fn run_tick(&mut self, tick: u64, obs: &mut dyn PhaseObserver) -> Result<(), SimError> {
        let cfg = &self.cfg;

        obs.enter(Some(tick), Phase::UpdateTraffic);
        if self.kill_root_at == Some(tick) {
            if let Some(root) = self.state.root() {
                self.state.uavs[root].failed = true;
            }
        }
        let offered = generate_traffic(&mut self.users, tick, cfg);
        refresh_sector_traffic(&mut self.sectors, &self.users);
        let access = enqueue_and_drop(&mut self.state, &self.users, &offered, cfg);

        obs.enter(Some(tick), Phase::Placement);
        self.state.update_sector_scores(&mut self.sectors, cfg);
        let surges = self.state.observe_traffic(&self.sectors, cfg);
        let outcome = self
            .state
            .placement_update(&self.sectors, &self.users, &surges, cfg);
        self.state.assign_users_to_uavs(&mut self.users, cfg)?;
        self.state.sync_sectors(&mut self.sectors);

        obs.enter(Some(tick), Phase::TrafficCongestionControl);
        let feedback = congestion_control(&self.state, &mut self.users, tick, cfg);
        recover_rates(&self.state, &mut self.users);

        obs.enter(Some(tick), Phase::MultiHopRouting);
        let root_change = elect_root(&mut self.state, &self.controller, tick, cfg)?;
        if root_change.is_some() {
            self.state.respace(&self.sectors, cfg);
            self.state.assign_users_to_uavs(&mut self.users, cfg)?;
            self.state.sync_sectors(&mut self.sectors);
        }
        let graph = build_graph(&self.state, cfg)?;
        let tree = dijkstra_tree(&graph)?;
        let relay = forward_relay(&mut self.state, &tree, &access.intake, cfg);

        obs.enter(Some(tick), Phase::Metrics);
        let active_uavs = self.state.active_count();
        let dropped_relay = relay.total_dropped();
        let metrics = TickMetrics {
            tick,
            offered: access.offered,
            served: relay.delivered,
            dropped_access: access.dropped_access,
            dropped_relay,
            avg_dropped_per_uav: (access.dropped_access + dropped_relay).div_parts(active_uavs),
            active_uavs,
        };
        let root = tree.root;
        self.events.push(TickEvents {
            tick,
            surge_sectors: outcome.surge_sectors,
            moved: outcome.moved,
            deployed: outcome.deployed,
            suspended: outcome.suspended,
            congested_sectors: outcome.congested_sectors,
            feedback,
            root,
            root_change,
            root_served_users: self.state.uavs[root].served_users.len(),
            total_intake: access.total_intake(),
            delivered: relay.delivered,
        });
        self.metrics.push(metrics);
        self.trees.push((tick, tree));
        Ok(())
    }

    pub fn roster(&self) -> Vec<RosterEntry> {
        self.state
            .uavs
            .iter()
            .map(|u| RosterEntry {
                id: u.id,
                x: u.x,
                y: u.y,
                role: u.role,
                sector: u.sector_id,
            })
            .collect()
    }
}

/// Runs `cfg.ticks` ticks and writes artifacts when `flags.out_dir` is set.
pub fn run(cfg: SimConfig, flags: &RunFlags) -> Result<RunReport, SimError> {
    run_observed(cfg, flags, &mut ())
}

pub fn run_observed(
    cfg: SimConfig,
    flags: &RunFlags,
    obs: &mut dyn PhaseObserver,
) -> Result<RunReport, SimError> {
    let mut sim = Simulation::new_observed(cfg, obs)?;
    sim.kill_root_at = flags.kill_root_at;
    let mut writer = flags
        .out_dir
        .as_deref()
        .map(output::ArtifactWriter::new)
        .transpose()?;

    if let Some(w) = writer.as_mut() {
        let grid = sim.snr_grid();
        w.write_grid("snr_initial", &grid, flags.write_pgm)?;
    }
    for _ in 0..sim.cfg.ticks {
        sim.step_observed(obs)?;
    }
    if let Some(w) = writer.as_mut() {
        w.write_drops(&sim.metrics)?;
        w.write_trees(&sim.trees)?;
        if sim.cfg.ticks > 0 {
            let grid = sim.snr_grid();
            w.write_grid("snr_final", &grid, flags.write_pgm)?;
        }
    }
    let mut report = RunReport {
        config: sim.cfg.clone(),
        ticks: sim.metrics.clone(),
        events: sim.events.clone(),
        roster: sim.roster(),
        manifest: writer
            .as_ref()
            .map(|w| w.manifest().to_vec())
            .unwrap_or_default(),
    };
    if let Some(w) = writer.as_mut() {
        w.write_report(&report)?;
        report.manifest = w.manifest().to_vec();
    }
    Ok(report)
}
