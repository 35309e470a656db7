//! Line-of-sight received power and SNR coverage maps.

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::RadioError;
use crate::model::{Role, UavNode};

/// Free-space received power with transmitter/receiver aperture areas:
/// `K / (lambda² d²)` where `K` folds transmit power and both areas.
pub fn friis_received_power(
    link_budget: f64,
    wavelength: f64,
    distance: f64,
) -> Result<f64, RadioError> {
    if distance.is_nan() || distance <= 0.0 {
        return Err(RadioError::NonPositiveDistance(distance));
    }
    Ok(link_budget / (wavelength * wavelength * distance * distance))
}

pub fn watts_to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

fn is_coverage_server(uav: &UavNode, cfg: &SimConfig) -> bool {
    match uav.role {
        Role::Serving => !uav.failed,
        Role::Root => cfg.coverage_includes_root && !uav.failed,
        Role::Suspended => false,
    }
}

/// Best-server SNR in dB at a ground point. Returns negative infinity when no
/// UAV can serve the point.
pub fn snr_db(x: f64, y: f64, uavs: &[UavNode], cfg: &SimConfig) -> f64 {
    let k = cfg.link_budget();
    uavs.iter()
        .filter(|u| is_coverage_server(u, cfg))
        .filter_map(|u| friis_received_power(k, cfg.wavelength, u.distance_to_ground(x, y)).ok())
        .fold(None, |best: Option<f64>, p| {
            Some(best.map_or(p, |b| b.max(p)))
        })
        .map_or(f64::NEG_INFINITY, |p| watts_to_db(p / cfg.noise_power))
}

/// Square SNR lattice centred on the venue, row-major with `y` outer and
/// both axes ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrGrid {
    pub half_side: f64,
    pub step: f64,
    /// Points per side.
    pub side: usize,
    pub values: Vec<f64>,
}

impl SnrGrid {
    pub fn points_per_side(half_side: f64, step: f64) -> usize {
        // The epsilon keeps exact multiples from losing a point to rounding.
        ((2.0 * half_side / step) + 1e-9).floor() as usize + 1
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_side + i as f64 * self.step
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.side + col]
    }

    /// `(x, y, snr_db)` in row-major order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.side).flat_map(move |r| {
            (0..self.side).map(move |c| (self.coord(c), self.coord(r), self.at(r, c)))
        })
    }

    /// SNR at the four corners.
    pub fn corners(&self) -> [f64; 4] {
        let last = self.side - 1;
        [
            self.at(0, 0),
            self.at(0, last),
            self.at(last, 0),
            self.at(last, last),
        ]
    }
}

/// Evaluates `snr_db` over the square of side 2(R + R').
pub fn compute_grid(uavs: &[UavNode], cfg: &SimConfig) -> SnrGrid {
    compute_grid_with(uavs, cfg, cfg.grid_half_side(), cfg.grid_step)
}

pub fn compute_grid_with(uavs: &[UavNode], cfg: &SimConfig, half_side: f64, step: f64) -> SnrGrid {
    let side = SnrGrid::points_per_side(half_side, step);
    let mut values = Vec::with_capacity(side * side);
    for r in 0..side {
        let y = -half_side + r as f64 * step;
        for c in 0..side {
            let x = -half_side + c as f64 * step;
            values.push(snr_db(x, y, uavs, cfg));
        }
    }
    SnrGrid {
        half_side,
        step,
        side,
        values,
    }
}
