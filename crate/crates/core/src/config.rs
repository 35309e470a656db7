//! Scenario configuration: defaults, validation and the flat `key = value`
//! config-file format.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::traffic_units::Traffic;

/// Cap on the number of simultaneously active UAVs (root included).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaxUavs {
    Unlimited,
    Limited(usize),
}

impl MaxUavs {
    pub fn allows(&self, count: usize) -> bool {
        match self {
            MaxUavs::Unlimited => true,
            MaxUavs::Limited(cap) => count <= *cap,
        }
    }

    pub fn is_limited(&self) -> bool {
        matches!(self, MaxUavs::Limited(_))
    }
}

impl fmt::Display for MaxUavs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaxUavs::Unlimited => f.write_str("unlimited"),
            MaxUavs::Limited(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for MaxUavs {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "unlimited" | "inf" | "none" => Ok(MaxUavs::Unlimited),
            other => other
                .parse::<usize>()
                .map(MaxUavs::Limited)
                .map_err(|_| format!("expected a count or `unlimited`, got `{other}`")),
        }
    }
}

/// Per-user generation rate for one traffic class, in traffic-units per tick.
///
/// Written `a` for a fixed rate or `a..b` for a per-user draw. When both
/// bounds are whole numbers the draw is a uniform integer in `[a, b]`,
/// otherwise a uniform real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRange {
    pub lo: f64,
    pub hi: f64,
}

impl RateRange {
    pub const fn fixed(rate: f64) -> Self {
        Self { lo: rate, hi: rate }
    }

    pub const fn between(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn is_fixed(&self) -> bool {
        self.lo == self.hi
    }

    pub fn is_integral(&self) -> bool {
        self.lo.fract() == 0.0 && self.hi.fract() == 0.0
    }

    pub fn sample<R: rand::Rng>(&self, rng: &mut R) -> Traffic {
        if self.is_fixed() {
            Traffic::from_units(self.lo)
        } else if self.is_integral() {
            Traffic::from_units_int(rng.random_range(self.lo as i64..=self.hi as i64))
        } else {
            Traffic::from_units(rng.random_range(self.lo..=self.hi))
        }
    }
}

impl fmt::Display for RateRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_fixed() {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "{}..{}", self.lo, self.hi)
        }
    }
}

impl FromStr for RateRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("expected a number, got `{}`", v.trim()))
        };
        match s.split_once("..") {
            Some((lo, hi)) => Ok(RateRange::between(parse(lo)?, parse(hi)?)),
            None => Ok(RateRange::fixed(parse(s)?)),
        }
    }
}

/// All scenario parameters. Distances are meters, buffers and rates are
/// traffic-units per tick, powers are watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Venue radius R'.
    pub venue_radius: f64,
    /// Maximum UAV service range R.
    pub uav_range: f64,
    /// Flight altitude H shared by all UAVs.
    pub altitude: f64,
    pub num_users: usize,
    /// User-facing buffer B.
    pub buffer_access: f64,
    /// UAV-to-UAV relay buffer.
    pub buffer_relay: f64,
    pub wavelength: f64,
    pub noise_power: f64,
    /// Link budget K = P_t·A_t·A_r. `None` selects the calibrated default.
    pub link_budget: Option<f64>,
    pub edge_weight_alpha: f64,
    pub surge_tick: u64,
    pub surge_factor: f64,
    pub ma_window: usize,
    pub surge_threshold: f64,
    pub max_uavs: MaxUavs,
    pub ticks: u64,
    pub grid_step: f64,
    pub seed: u64,
    pub rate_control: RateRange,
    pub rate_realtime: RateRange,
    pub rate_nonrealtime: RateRange,
    pub heartbeat_timeout: u64,
    /// Count the root as a server in SNR maps.
    pub coverage_includes_root: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            venue_radius: 200.0,
            uav_range: 40.0,
            altitude: 90.0,
            num_users: 150,
            buffer_access: 50.0,
            buffer_relay: 250.0,
            wavelength: 0.010,
            noise_power: 1.0,
            link_budget: None,
            edge_weight_alpha: 0.5,
            surge_tick: 11,
            surge_factor: 2.0,
            ma_window: 5,
            surge_threshold: 1.5,
            max_uavs: MaxUavs::Unlimited,
            ticks: 30,
            grid_step: 5.0,
            seed: 7,
            rate_control: RateRange::fixed(1.0),
            rate_realtime: RateRange::between(2.0, 8.0),
            rate_nonrealtime: RateRange::between(1.0, 5.0),
            heartbeat_timeout: 3,
            coverage_includes_root: false,
        }
    }
}

/// SNR at the edge of a UAV footprint that the default link budget is
/// calibrated to.
pub const CALIBRATION_SNR_DB: f64 = 15.0;

impl SimConfig {
    pub fn buffer_access_traffic(&self) -> Traffic {
        Traffic::from_units(self.buffer_access)
    }

    pub fn buffer_relay_traffic(&self) -> Traffic {
        Traffic::from_units(self.buffer_relay)
    }

    /// Effective link budget: the configured value, or the one placing
    /// `CALIBRATION_SNR_DB` at 3D distance sqrt(R² + H²).
    pub fn link_budget(&self) -> f64 {
        self.link_budget.unwrap_or_else(|| {
            let edge_sq = self.uav_range.powi(2) + self.altitude.powi(2);
            10f64.powf(CALIBRATION_SNR_DB / 10.0)
                * self.wavelength.powi(2)
                * edge_sq
                * self.noise_power
        })
    }

    /// Half side of the SNR evaluation square, R + R'.
    pub fn grid_half_side(&self) -> f64 {
        self.uav_range + self.venue_radius
    }

    /// Checks every invariant and returns the config unchanged on success.
    pub fn validate(self) -> Result<Self, ConfigError> {
        let fail = |msg: &str| Err(ConfigError::Invalid(msg.to_string()));
        let finite = [
            self.venue_radius,
            self.uav_range,
            self.altitude,
            self.buffer_access,
            self.buffer_relay,
            self.wavelength,
            self.noise_power,
            self.edge_weight_alpha,
            self.surge_factor,
            self.surge_threshold,
            self.grid_step,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return fail("all numeric parameters must be finite");
        }
        if self.uav_range <= 0.0 {
            return fail("uav_range_R must be > 0");
        }
        if self.uav_range >= self.venue_radius {
            return fail("uav_range_R must be < venue_radius_Rp");
        }
        if self.altitude <= 0.0 {
            return fail("altitude_H must be > 0");
        }
        if self.num_users == 0 {
            return fail("num_users_N must be > 0");
        }
        if self.buffer_access <= 0.0 {
            return fail("buffer_access_B must be > 0");
        }
        if self.buffer_relay < self.buffer_access {
            return fail("buffer_relay must be >= buffer_access_B");
        }
        if self.wavelength <= 0.0 {
            return fail("wavelength_lambda must be > 0");
        }
        if self.noise_power <= 0.0 {
            return fail("noise_power must be > 0");
        }
        if let Some(k) = self.link_budget {
            if !(k.is_finite() && k > 0.0) {
                return fail("link_budget_K must be > 0");
            }
        }
        if !(0.0..=1.0).contains(&self.edge_weight_alpha) {
            return fail("edge_weight_alpha out of [0,1]");
        }
        if self.surge_factor <= 1.0 {
            return fail("surge_factor must be > 1");
        }
        if self.surge_threshold <= 1.0 {
            return fail("surge_threshold must be > 1");
        }
        if self.ma_window == 0 {
            return fail("ma_window_W must be >= 1");
        }
        if self.grid_step <= 0.0 {
            return fail("grid_step must be > 0");
        }
        if self.heartbeat_timeout == 0 {
            return fail("heartbeat_timeout must be >= 1");
        }
        for (name, r) in [
            ("rate_control", self.rate_control),
            ("rate_realtime", self.rate_realtime),
            ("rate_nonrealtime", self.rate_nonrealtime),
        ] {
            if !(r.lo.is_finite() && r.hi.is_finite() && r.lo >= 0.0 && r.lo <= r.hi) {
                return Err(ConfigError::Invalid(format!(
                    "{name} must satisfy 0 <= lo <= hi"
                )));
            }
        }
        Ok(self)
    }

    /// Parses the flat config format over the defaults. Does not validate.
    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = SimConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.split_once('#') {
                Some((before, _)) => before,
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: line_no,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|msg| ConfigError::Syntax { line: line_no, msg })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_str(&text)
    }

    /// Sets one field from its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse::<T>()
                .map_err(|_| format!("invalid value `{value}` for `{key}`"))
        }
        match key {
            "venue_radius_Rp" => self.venue_radius = num(key, value)?,
            "uav_range_R" => self.uav_range = num(key, value)?,
            "altitude_H" => self.altitude = num(key, value)?,
            "num_users_N" => self.num_users = num(key, value)?,
            "buffer_access_B" => self.buffer_access = num(key, value)?,
            "buffer_relay" => self.buffer_relay = num(key, value)?,
            "wavelength_lambda" => self.wavelength = num(key, value)?,
            "noise_power" => self.noise_power = num(key, value)?,
            "link_budget_K" => {
                self.link_budget = match value {
                    "auto" | "calibrated" => None,
                    v => Some(num(key, v)?),
                }
            }
            "edge_weight_alpha" => self.edge_weight_alpha = num(key, value)?,
            "surge_tick" => self.surge_tick = num(key, value)?,
            "surge_factor" => self.surge_factor = num(key, value)?,
            "ma_window_W" => self.ma_window = num(key, value)?,
            "surge_threshold" => self.surge_threshold = num(key, value)?,
            "max_uavs" => self.max_uavs = value.parse().map_err(|e| format!("{key}: {e}"))?,
            "ticks" => self.ticks = num(key, value)?,
            "grid_step" => self.grid_step = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "rate_control" => {
                self.rate_control = value.parse().map_err(|e| format!("{key}: {e}"))?
            }
            "rate_realtime" => {
                self.rate_realtime = value.parse().map_err(|e| format!("{key}: {e}"))?
            }
            "rate_nonrealtime" => {
                self.rate_nonrealtime = value.parse().map_err(|e| format!("{key}: {e}"))?
            }
            "heartbeat_timeout" => self.heartbeat_timeout = num(key, value)?,
            "coverage_includes_root" => self.coverage_includes_root = num(key, value)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }
}
