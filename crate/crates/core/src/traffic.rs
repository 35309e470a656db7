//! User traffic generation, access-buffer drop accounting and the
//! reserved-bit congestion feedback loop.

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::model::{UserDevice, UserId};
use crate::placement::PlacementState;
use crate::traffic_units::Traffic;

/// Largest value the three reserved header bits can carry.
pub const FEEDBACK_CODE_MAX: u8 = 0b111;

/// Rate multipliers applied on feedback, as (numerator, denominator).
pub const REALTIME_BACKOFF: (i64, i64) = (9, 10);
pub const NONREALTIME_BACKOFF: (i64, i64) = (8, 10);

/// Per-tick recovery multiplier toward the pre-feedback rate.
pub const RECOVERY_STEP: (i64, i64) = (21, 20);

/// A rate-reduction request carried in the reserved bits of a downlink
/// header.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackMessage {
    pub user_id: UserId,
    /// 3-bit code, `min(7, floor(k))`.
    pub code: u8,
    pub issued_tick: u64,
    /// Unclamped buffer-to-rate ratio the code was derived from.
    pub k: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickMetrics {
    pub tick: u64,
    pub offered: Traffic,
    pub served: Traffic,
    pub dropped_access: Traffic,
    pub dropped_relay: Traffic,
    pub avg_dropped_per_uav: Traffic,
    pub active_uavs: usize,
}

impl TickMetrics {
    pub fn dropped(&self) -> Traffic {
        self.dropped_access + self.dropped_relay
    }

    pub fn is_conserved(&self) -> bool {
        self.offered == self.served + self.dropped_access + self.dropped_relay
    }
}

/// Result of pushing one tick of user traffic into the access buffers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessOutcome {
    /// Accepted traffic per UAV id.
    pub intake: Vec<Traffic>,
    pub offered: Traffic,
    pub dropped_access: Traffic,
}

impl AccessOutcome {
    pub fn total_intake(&self) -> Traffic {
        self.intake.iter().sum()
    }
}

/// Returns each user's offered traffic for `tick`. The surge multiplies every
/// rate in place at `surge_tick`, capped at `base_gen_rate × surge_factor`.
pub fn generate_traffic(users: &mut [UserDevice], tick: u64, cfg: &SimConfig) -> Vec<Traffic> {
    if tick == cfg.surge_tick {
        for user in users.iter_mut() {
            let cap = user.base_gen_rate.map(|r| r.scale(cfg.surge_factor));
            user.gen_rate = user
                .gen_rate
                .map(|r| r.scale(cfg.surge_factor))
                .zip_with(&cap, Traffic::min);
        }
    }
    users.iter().map(|u| u.gen_rate.total()).collect()
}

/// Fills every UAV's access buffer up to B and drops the excess. Traffic
/// from a user with no serving UAV is dropped in full.
pub fn enqueue_and_drop(
    state: &mut PlacementState,
    users: &[UserDevice],
    offered: &[Traffic],
    cfg: &SimConfig,
) -> AccessOutcome {
    let b = cfg.buffer_access_traffic();
    let mut arriving = vec![Traffic::ZERO; state.uavs.len()];
    let mut dropped_access = Traffic::ZERO;
    for user in users {
        match user.serving_uav {
            Some(uav) => arriving[uav] += offered[user.id],
            None => dropped_access += offered[user.id],
        }
    }
    let mut intake = vec![Traffic::ZERO; state.uavs.len()];
    for (uav, &arrived) in state.uavs.iter_mut().zip(&arriving) {
        let accepted = arrived.min(b);
        dropped_access += arrived - accepted;
        intake[uav.id] = accepted;
        uav.access_buffer_used = accepted;
    }
    AccessOutcome {
        intake,
        offered: offered.iter().sum(),
        dropped_access,
    }
}

/// k = B / rate and its 3-bit transport code. `None` for an idle user.
pub fn compute_feedback_k(buffer: Traffic, user_rate: Traffic) -> Option<(f64, u8)> {
    if user_rate.micros() <= 0 {
        return None;
    }
    let k = buffer.as_units() / user_rate.as_units();
    let code = k.floor().clamp(0.0, FEEDBACK_CODE_MAX as f64) as u8;
    Some((k, code))
}

/// Per-class back-off: realtime ×0.9, non-realtime ×0.8, control untouched.
pub fn apply_feedback(user: &mut UserDevice, _feedback: &FeedbackMessage) {
    let rates = &mut user.gen_rate;
    rates.realtime = rates
        .realtime
        .scale_ratio(REALTIME_BACKOFF.0, REALTIME_BACKOFF.1);
    rates.nonrealtime = rates
        .nonrealtime
        .scale_ratio(NONREALTIME_BACKOFF.0, NONREALTIME_BACKOFF.1);
}

/// Sends feedback to every user of a congested UAV. Only active under a UAV
/// cap; with unlimited UAVs congestion is handled by deployment instead.
pub fn congestion_control(
    state: &PlacementState,
    users: &mut [UserDevice],
    tick: u64,
    cfg: &SimConfig,
) -> Vec<FeedbackMessage> {
    if !cfg.max_uavs.is_limited() {
        return Vec::new();
    }
    let b = cfg.buffer_access_traffic();
    let mut issued = Vec::new();
    for &uid in &state.congested_users {
        let user = &mut users[uid];
        let Some((k, code)) = compute_feedback_k(b, user.gen_rate.total()) else {
            continue;
        };
        let msg = FeedbackMessage {
            user_id: uid,
            code,
            issued_tick: tick,
            k,
        };
        apply_feedback(user, &msg);
        issued.push(msg);
    }
    issued
}

/// Users whose UAV was not busy this tick climb ×1.05 per class back toward
/// their pre-feedback rate.
pub fn recover_rates(state: &PlacementState, users: &mut [UserDevice]) {
    for user in users.iter_mut() {
        if state.busy_users.contains(&user.id) {
            continue;
        }
        user.gen_rate = user.gen_rate.zip_with(&user.base_gen_rate, |rate, base| {
            if rate < base {
                rate.scale_ratio(RECOVERY_STEP.0, RECOVERY_STEP.1).min(base)
            } else {
                rate
            }
        });
    }
}
