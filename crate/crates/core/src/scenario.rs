//! Deployment geometry, radio constants and large-scale propagation.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::rng::{stream_rng, StreamKind};
use crate::{Complex64, Error, Result};

/// Speed of light (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Distances below this are clamped before evaluating the UMi formula.
pub const MIN_DISTANCE_M: f64 = 10.0;

/// Typical radar cross-sections (m²) of common objects.
pub mod rcs {
    pub const INSECT: f64 = 1e-5;
    pub const BIRD: f64 = 0.01;
    pub const HUMAN: f64 = 1.0;
    pub const CAR: f64 = 10.0;
    pub const LARGE_TRUCK: f64 = 100.0;
    pub const SMALL_COMBAT_AIRCRAFT: f64 = 2.0;
    pub const LARGE_COMBAT_AIRCRAFT: f64 = 5.0;
    pub const CARGO_AIRCRAFT: f64 = 100.0;
    pub const LARGE_SHIP: f64 = 1e5;
}

/// How a target's complex reflection amplitude follows from its RCS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AmplitudeRule {
    /// `|α|² = 4π σ / λ²`: the bistatic radar-equation factor that remains
    /// once both one-way legs are carried by the channel gains.
    #[default]
    RadarEquation,
    /// `|α|² = σ`.
    RcsOnly,
}

impl AmplitudeRule {
    /// Zero-phase amplitude for a target of cross-section `rcs_m2` at `fc_hz`.
    pub fn amplitude(self, rcs_m2: f64, fc_hz: f64) -> Complex64 {
        let power = match self {
            AmplitudeRule::RcsOnly => rcs_m2,
            AmplitudeRule::RadarEquation => {
                let lambda = SPEED_OF_LIGHT / fc_hz;
                4.0 * PI * rcs_m2 / (lambda * lambda)
            }
        };
        Complex64::new(libm::sqrt(power), 0.0)
    }
}

/// Counts, radio constants and seed of one deployment.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct SystemConfig {
    /// Downlink (transmitting) APs.
    #[cfg_attr(feature = "serde", serde(rename = "M"))]
    pub dl_aps: usize,
    /// Uplink (echo-receiving) APs.
    #[cfg_attr(feature = "serde", serde(rename = "N"))]
    pub ul_aps: usize,
    #[cfg_attr(feature = "serde", serde(rename = "K"))]
    pub users: usize,
    #[cfg_attr(feature = "serde", serde(rename = "T"))]
    pub targets: usize,
    /// Antennas per AP.
    #[cfg_attr(feature = "serde", serde(rename = "L"))]
    pub antennas: usize,
    pub area_side_m: f64,
    pub fc_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub noise_figure_db: f64,
    /// Communication/sensing power split, 1 = communication only.
    pub rho: f64,
    pub p_max_dbm: f64,
    pub seed: u64,
    /// Log-normal shadowing standard deviation; 0 disables shadowing.
    pub shadowing_std_db: f64,
    /// RCS used for targets without an entry in `target_rcs_m2`.
    pub default_rcs_m2: f64,
    /// Per-target RCS overrides, indexed by target.
    pub target_rcs_m2: Vec<f64>,
    pub amplitude_rule: AmplitudeRule,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            dl_aps: 9,
            ul_aps: 9,
            users: 6,
            targets: 3,
            antennas: 8,
            area_side_m: 200.0,
            fc_hz: 3e9,
            bandwidth_hz: 10e6,
            noise_psd_dbm_hz: -174.0,
            noise_figure_db: 10.0,
            rho: 1.0,
            p_max_dbm: 30.0,
            seed: 1,
            shadowing_std_db: 0.0,
            default_rcs_m2: rcs::CAR,
            target_rcs_m2: Vec::new(),
            amplitude_rule: AmplitudeRule::RadarEquation,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.dl_aps == 0 {
            return bad("M must be at least 1");
        }
        if self.antennas == 0 {
            return bad("L must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return bad("rho must lie in [0, 1]");
        }
        if !(self.area_side_m > 0.0 && self.area_side_m.is_finite()) {
            return bad("area_side_m must be positive");
        }
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return bad("bandwidth_hz must be positive");
        }
        if !(self.fc_hz > 0.0 && self.fc_hz.is_finite()) {
            return bad("fc_hz must be positive");
        }
        if !(self.shadowing_std_db >= 0.0) {
            return bad("shadowing_std_db must be non-negative");
        }
        if self.target_rcs_m2.len() > self.targets {
            return Err(Error::InvalidConfig(format!(
                "{} RCS overrides given for {} targets",
                self.target_rcs_m2.len(),
                self.targets
            )));
        }
        if !(self.default_rcs_m2 > 0.0) || self.target_rcs_m2.iter().any(|&r| !(r > 0.0)) {
            return bad("every RCS must be positive");
        }
        Ok(())
    }

    /// RCS of target `t`, honoring overrides.
    pub fn rcs_of(&self, t: usize) -> f64 {
        self.target_rcs_m2.get(t).copied().unwrap_or(self.default_rcs_m2)
    }

    pub fn p_max_watts(&self) -> f64 {
        dbm_to_watts(self.p_max_dbm)
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    libm::pow(10.0, (dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * libm::log10(watts) + 30.0
}

/// Point in the deployment plane (meters).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }

    /// Angle of `other` seen from a ULA at `self` whose axis is the x-axis,
    /// measured from broadside, in `[-π/2, π/2]`.
    pub fn ula_bearing_to(&self, other: &Point) -> f64 {
        let d = self.distance(other);
        if d == 0.0 {
            return 0.0;
        }
        libm::asin(((other.x - self.x) / d).clamp(-1.0, 1.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TargetSpec {
    pub position: Point,
    pub rcs_m2: f64,
    pub reflection_amplitude: Complex64,
}

/// Positions of every entity, together with the config they came from.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SystemGeometry {
    pub dl_ap_positions: Vec<Point>,
    pub ul_ap_positions: Vec<Point>,
    pub user_positions: Vec<Point>,
    pub targets: Vec<TargetSpec>,
    pub config: SystemConfig,
}

impl SystemGeometry {
    pub fn target_positions(&self) -> impl Iterator<Item = &Point> + '_ {
        self.targets.iter().map(|t| &t.position)
    }

    /// Bearings `[m][t]` of every target from every DL AP.
    pub fn dl_target_bearings(&self) -> Vec<Vec<f64>> {
        self.dl_ap_positions
            .iter()
            .map(|ap| self.target_positions().map(|p| ap.ula_bearing_to(p)).collect())
            .collect()
    }
}

/// Cell centers of a row-major grid over the square, shifted by
/// `offset` cells (0.5 = cell centers). The last row may be partial.
pub fn grid_positions(count: usize, side: f64, offset: f64) -> Vec<Point> {
    if count == 0 {
        return Vec::new();
    }
    let cols = ceil_sqrt(count);
    let rows = count.div_ceil(cols);
    let w = side / cols as f64;
    let h = side / rows as f64;
    (0..count)
        .map(|i| {
            let c = (i % cols) as f64;
            let r = (i / cols) as f64;
            Point::new((c + offset) * w, (r + offset) * h)
        })
        .collect()
}

fn ceil_sqrt(n: usize) -> usize {
    let mut c = libm::sqrt(n as f64) as usize;
    while c * c < n {
        c += 1;
    }
    while c > 1 && (c - 1) * (c - 1) >= n {
        c -= 1;
    }
    c.max(1)
}

const UL_GRID_OFFSETS: [f64; 6] = [0.25, 0.75, 0.375, 0.625, 0.125, 0.875];

/// Places APs on deterministic grids and users/targets uniformly at random.
pub fn place_entities(config: &SystemConfig) -> Result<SystemGeometry> {
    config.validate()?;
    let side = config.area_side_m;
    let dl = grid_positions(config.dl_aps, side, 0.5);

    let ul = UL_GRID_OFFSETS
        .iter()
        .map(|&off| grid_positions(config.ul_aps, side, off))
        .find(|ul| ul.iter().all(|p| dl.iter().all(|q| p.distance(q) > 1e-6)))
        .ok_or_else(|| {
            Error::InvalidConfig(format!(
                "no UL grid offset separates {} UL APs from {} DL APs",
                config.ul_aps, config.dl_aps
            ))
        })?;

    let uniform_point = |kind_index: usize, index: usize| {
        let mut rng = stream_rng(config.seed, StreamKind::Geometry, kind_index, index);
        let x = rng.random::<f64>() * side;
        let y = rng.random::<f64>() * side;
        Point::new(x, y)
    };

    let users = (0..config.users).map(|k| uniform_point(0, k)).collect();
    let targets = (0..config.targets)
        .map(|t| {
            let rcs_m2 = config.rcs_of(t);
            TargetSpec {
                position: uniform_point(1, t),
                rcs_m2,
                reflection_amplitude: config.amplitude_rule.amplitude(rcs_m2, config.fc_hz),
            }
        })
        .collect();

    Ok(SystemGeometry {
        dl_ap_positions: dl,
        ul_ap_positions: ul,
        user_positions: users,
        targets,
        config: config.clone(),
    })
}

/// NLOS UMi path loss in dB at `distance_m` (clamped to [`MIN_DISTANCE_M`]).
pub fn pathloss_db(distance_m: f64, fc_hz: f64) -> f64 {
    let d = distance_m.max(MIN_DISTANCE_M);
    36.7 * libm::log10(d) + 22.7 + 26.0 * libm::log10(fc_hz / 1e9)
}

/// Linear large-scale power gain `ζ = 10^(-PL/10)`.
pub fn pathloss_linear(distance_m: f64, fc_hz: f64) -> f64 {
    libm::pow(10.0, -pathloss_db(distance_m, fc_hz) / 10.0)
}

/// Receiver noise power in dBm: `N0 + 10 log10(B) + Nf`.
pub fn noise_power_dbm(config: &SystemConfig) -> f64 {
    config.noise_psd_dbm_hz + 10.0 * libm::log10(config.bandwidth_hz) + config.noise_figure_db
}

pub fn noise_power_watts(config: &SystemConfig) -> f64 {
    dbm_to_watts(noise_power_dbm(config))
}
