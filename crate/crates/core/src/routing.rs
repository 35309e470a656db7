//! Multi-hop routing toward the root UAV.
//!
//! Every active UAV can reach every other one. The cost of sending from `i`
//! to `j` mixes the normalized hop distance with the normalized load already
//! sitting on the receiver `j`:
//!
//! ```text
//! w(i -> j) = alpha * d(i, j) / d_max + (1 - alpha) * load(j) / buffer_relay
//! ```
//!
//! A shortest-path tree toward the root decides each UAV's next hop.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::RoutingError;
use crate::model::{ControllerPos, Role, UavId, UserId};
use crate::placement::PlacementState;
use crate::traffic_units::Traffic;

/// Directed weighted graph over UAV ids, dense adjacency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavGraph {
    pub nodes: Vec<UavId>,
    /// `weights[i * n + j]` is the cost of sending from `nodes[i]` to
    /// `nodes[j]`; `None` means no link.
    weights: Vec<Option<f64>>,
    pub root: UavId,
}

impl UavGraph {
    /// Builds a graph from a dense matrix indexed like `nodes`.
    pub fn from_matrix(nodes: Vec<UavId>, matrix: Vec<Vec<Option<f64>>>, root: UavId) -> Self {
        let n = nodes.len();
        assert_eq!(matrix.len(), n);
        let mut weights = Vec::with_capacity(n * n);
        for row in matrix {
            assert_eq!(row.len(), n);
            weights.extend(row);
        }
        Self {
            nodes,
            weights,
            root,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn index_of(&self, id: UavId) -> Option<usize> {
        self.nodes.iter().position(|&n| n == id)
    }

    fn weight_at(&self, from: usize, to: usize) -> Option<f64> {
        self.weights[from * self.nodes.len() + to]
    }

    /// Cost of sending from `from` to `to`.
    pub fn weight(&self, from: UavId, to: UavId) -> Option<f64> {
        let i = self.index_of(from)?;
        let j = self.index_of(to)?;
        self.weight_at(i, j)
    }

    pub fn edges(&self) -> impl Iterator<Item = (UavId, UavId, f64)> + '_ {
        let n = self.nodes.len();
        (0..n * n).filter_map(move |k| {
            let (i, j) = (k / n, k % n);
            self.weights[k].map(|w| (self.nodes[i], self.nodes[j], w))
        })
    }
}

pub fn edge_weight(alpha: f64, distance: f64, d_max: f64, receiver_load: f64, l_max: f64) -> f64 {
    let dist_term = if d_max > 0.0 { distance / d_max } else { 0.0 };
    alpha * dist_term + (1.0 - alpha) * (receiver_load / l_max)
}

/// Complete graph over active UAVs with the composite distance/load weight.
pub fn build_graph(state: &PlacementState, cfg: &SimConfig) -> Result<UavGraph, RoutingError> {
    let root = state.root().ok_or(RoutingError::NoRoot)?;
    let nodes: Vec<UavId> = state
        .uavs
        .iter()
        .filter(|u| u.is_active())
        .map(|u| u.id)
        .collect();
    let n = nodes.len();
    let dist = |a: UavId, b: UavId| {
        let (ua, ub) = (&state.uavs[a], &state.uavs[b]);
        ua.horizontal_distance(ub.x, ub.y)
    };
    let mut d_max = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            d_max = d_max.max(dist(nodes[i], nodes[j]));
        }
    }
    let l_max = cfg.buffer_relay;
    let matrix = nodes
        .iter()
        .map(|&from| {
            nodes
                .iter()
                .map(|&to| {
                    (from != to).then(|| {
                        edge_weight(
                            cfg.edge_weight_alpha,
                            dist(from, to),
                            d_max,
                            state.uavs[to].load.as_units(),
                            l_max,
                        )
                    })
                })
                .collect()
        })
        .collect();
    Ok(UavGraph::from_matrix(nodes, matrix, root))
}

/// Shortest-path tree toward the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingTree {
    pub root: UavId,
    /// Next hop of every node; the root maps to itself.
    pub parent: BTreeMap<UavId, UavId>,
    pub path_cost: BTreeMap<UavId, f64>,
}

impl RoutingTree {
    /// Hop count from `node` to the root.
    pub fn depth(&self, node: UavId) -> usize {
        let mut hops = 0;
        let mut cur = node;
        while cur != self.root {
            cur = self.parent[&cur];
            hops += 1;
            assert!(hops <= self.parent.len(), "cycle in routing tree");
        }
        hops
    }

    /// Path from `node` to the root, both ends included.
    pub fn path_to_root(&self, node: UavId) -> Vec<UavId> {
        let mut path = vec![node];
        let mut cur = node;
        while cur != self.root {
            cur = self.parent[&cur];
            path.push(cur);
        }
        path
    }

    /// Nodes ordered so that every child precedes its parent.
    pub fn leaves_first(&self) -> Vec<UavId> {
        let mut order: Vec<(usize, UavId)> =
            self.parent.keys().map(|&v| (self.depth(v), v)).collect();
        order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        order.into_iter().map(|(_, v)| v).collect()
    }
}

/// Dijkstra from the root over reversed edges: the cost of `v` is the cost
/// of its parent plus `w(v -> parent)`. Ties go to the lower predecessor id,
/// then the lower node id.
pub fn dijkstra_tree(graph: &UavGraph) -> Result<RoutingTree, RoutingError> {
    let n = graph.len();
    let root_idx = graph.index_of(graph.root).ok_or(RoutingError::NoRoot)?;
    let mut dist = vec![f64::INFINITY; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut settled = vec![false; n];
    dist[root_idx] = 0.0;
    parent[root_idx] = Some(root_idx);

    for _ in 0..n {
        let next = (0..n)
            .filter(|&i| !settled[i] && dist[i].is_finite())
            .min_by(|&a, &b| {
                dist[a]
                    .total_cmp(&dist[b])
                    .then(graph.nodes[a].cmp(&graph.nodes[b]))
            });
        let Some(u) = next else { break };
        settled[u] = true;
        for v in 0..n {
            if settled[v] {
                continue;
            }
            let Some(w) = graph.weight_at(v, u) else {
                continue;
            };
            let cand = dist[u] + w;
            let better = cand < dist[v]
                || (cand == dist[v] && parent[v].is_some_and(|p| graph.nodes[u] < graph.nodes[p]));
            if better {
                dist[v] = cand;
                parent[v] = Some(u);
            }
        }
    }

    let mut tree = RoutingTree {
        root: graph.root,
        parent: BTreeMap::new(),
        path_cost: BTreeMap::new(),
    };
    for i in 0..n {
        let p = parent[i].ok_or(RoutingError::Unreachable(graph.nodes[i]))?;
        tree.parent.insert(graph.nodes[i], graph.nodes[p]);
        tree.path_cost.insert(graph.nodes[i], dist[i]);
    }
    Ok(tree)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelayOutcome {
    /// Dropped at each UAV's relay buffer, by UAV id.
    pub dropped_relay: Vec<Traffic>,
    /// Handed by the root to the controller.
    pub delivered: Traffic,
}

impl RelayOutcome {
    pub fn total_dropped(&self) -> Traffic {
        self.dropped_relay.iter().sum()
    }
}

/// Pushes this tick's access intake up the tree. Every non-root hop holds at
/// most `buffer_relay` of its own plus relayed traffic and drops the rest;
/// the root forwards everything to the controller.
pub fn forward_relay(
    state: &mut PlacementState,
    tree: &RoutingTree,
    intake: &[Traffic],
    cfg: &SimConfig,
) -> RelayOutcome {
    let relay_cap = cfg.buffer_relay_traffic();
    let mut inflow = vec![Traffic::ZERO; state.uavs.len()];
    let mut dropped_relay = vec![Traffic::ZERO; state.uavs.len()];
    let mut delivered = Traffic::ZERO;

    for uav in &mut state.uavs {
        uav.relay_buffer_used = Traffic::ZERO;
        uav.load = Traffic::ZERO;
    }
    for v in tree.leaves_first() {
        let total = intake.get(v).copied().unwrap_or_default() + inflow[v];
        state.uavs[v].load = total;
        if v == tree.root {
            delivered = total;
            continue;
        }
        let forwarded = total.min(relay_cap);
        dropped_relay[v] = total - forwarded;
        state.uavs[v].relay_buffer_used = forwarded;
        inflow[tree.parent[&v]] += forwarded;
    }
    // Intake at a UAV outside the tree has nowhere to go.
    for (id, &taken) in intake.iter().enumerate() {
        if !taken.is_zero() && !tree.parent.contains_key(&id) {
            dropped_relay[id] += taken;
        }
    }
    RelayOutcome {
        dropped_relay,
        delivered,
    }
}

/// A root handover performed by `elect_root`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootChange {
    pub tick: u64,
    pub old_root: Option<UavId>,
    pub new_root: UavId,
    /// Users the new root served; they need reassignment.
    pub released_users: Vec<UserId>,
}

/// Records this tick's heartbeats and replaces the root when its heartbeat
/// is older than `heartbeat_timeout`. The replacement is the live UAV nearest
/// the controller (lowest id on ties).
pub fn elect_root(
    state: &mut PlacementState,
    controller: &ControllerPos,
    tick: u64,
    cfg: &SimConfig,
) -> Result<Option<RootChange>, RoutingError> {
    for uav in state.uavs.iter_mut().filter(|u| u.is_active() && !u.failed) {
        uav.last_heartbeat = tick;
    }
    if !state.uavs.iter().any(|u| u.is_active() && !u.failed) {
        return Err(RoutingError::NoLiveUav);
    }
    let old_root = state.root();
    if let Some(r) = old_root {
        let age = tick.saturating_sub(state.uavs[r].last_heartbeat);
        if age <= cfg.heartbeat_timeout {
            return Ok(None);
        }
    }

    let to_controller = |id: UavId| state.uavs[id].distance_to_ground(controller.xb, controller.yb);
    let new_root = state
        .uavs
        .iter()
        .filter(|u| u.is_active() && !u.failed && Some(u.id) != old_root)
        .map(|u| (to_controller(u.id), u.id))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
        .ok_or(RoutingError::NoLiveUav)?;

    if let Some(r) = old_root {
        let old = &mut state.uavs[r];
        old.role = Role::Suspended;
        old.served_users.clear();
    }
    let uav = &mut state.uavs[new_root];
    uav.role = Role::Root;
    uav.sector_id = None;
    uav.helping = None;
    let released: Vec<UserId> = std::mem::take(&mut uav.served_users).into_iter().collect();
    Ok(Some(RootChange {
        tick,
        old_root,
        new_root,
        released_users: released,
    }))
}
