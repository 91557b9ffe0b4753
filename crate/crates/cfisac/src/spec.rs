//! Experiment specs.
//!
//! A spec file is TOML. Top-level keys name the experiment and its sizes,
//! `[system]` holds a [`SystemConfig`] (same keys as the scenario config),
//! `[sweep]` names the swept parameter and its values and `[params]` holds
//! experiment-specific knobs:
//!
//! ```toml
//! name = "perf_sweep"
//! seed = 7
//! topologies = 20
//! trials = 20000
//! output = "perf.csv"
//!
//! [system]
//! K = 6
//! T = 3
//!
//! [sweep]
//! parameter = "L"
//! values = [10, 20]
//!
//! [params]
//! ap_counts = [4, 9, 16]
//! ```
//!
//! Every key is optional except `name`; missing keys take the experiment's
//! defaults. `[system]` and `[params]` are merged key by key, while a given
//! `[sweep]` replaces the default sweep as a whole.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cfisac_core::performance::MIN_TRIALS;
use cfisac_core::scenario::SystemConfig;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    Hardening,
    CfVsColocated,
    PerfSweep,
    OptSweep,
    BeampatternHeatmap,
    CfColocatedSe,
    BeampatternCompare,
    SecureSweep,
    SecureBeampattern,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 9] = [
        ExperimentName::Hardening,
        ExperimentName::CfVsColocated,
        ExperimentName::PerfSweep,
        ExperimentName::OptSweep,
        ExperimentName::BeampatternHeatmap,
        ExperimentName::CfColocatedSe,
        ExperimentName::BeampatternCompare,
        ExperimentName::SecureSweep,
        ExperimentName::SecureBeampattern,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::Hardening => "hardening",
            ExperimentName::CfVsColocated => "cf_vs_colocated",
            ExperimentName::PerfSweep => "perf_sweep",
            ExperimentName::OptSweep => "opt_sweep",
            ExperimentName::BeampatternHeatmap => "beampattern_heatmap",
            ExperimentName::CfColocatedSe => "cf_colocated_se",
            ExperimentName::BeampatternCompare => "beampattern_compare",
            ExperimentName::SecureSweep => "secure_sweep",
            ExperimentName::SecureBeampattern => "secure_beampattern",
        }
    }

    /// Experiments whose estimates come from Monte-Carlo trials.
    pub fn uses_monte_carlo(self) -> bool {
        matches!(self, ExperimentName::Hardening | ExperimentName::CfVsColocated | ExperimentName::PerfSweep)
    }

    /// Parameters this experiment may sweep.
    pub fn sweepable(self) -> &'static [SweepParam] {
        use SweepParam::*;
        match self {
            ExperimentName::Hardening => &[L],
            ExperimentName::CfVsColocated => &[K, PMaxDbm, AreaSideM],
            ExperimentName::PerfSweep => &[L, K, T, PMaxDbm],
            ExperimentName::OptSweep => &[L, K, T, PMaxDbm, GammaDbm],
            ExperimentName::CfColocatedSe => &[T, K, PMaxDbm, GammaDbm],
            ExperimentName::SecureSweep => &[M, L, T, GammaDbm, DeltaBpsHz],
            ExperimentName::BeampatternHeatmap | ExperimentName::BeampatternCompare => &[GammaDbm, PMaxDbm],
            ExperimentName::SecureBeampattern => &[DeltaBpsHz, GammaDbm],
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| HarnessError::spec(format!("unknown experiment `{s}`")))
    }
}

/// A parameter that can be swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    L,
    M,
    N,
    K,
    T,
    #[serde(rename = "p_max_dbm")]
    PMaxDbm,
    #[serde(rename = "area_side_m")]
    AreaSideM,
    #[serde(rename = "gamma_dbm")]
    GammaDbm,
    #[serde(rename = "delta_bps_hz")]
    DeltaBpsHz,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::L => "L",
            SweepParam::M => "M",
            SweepParam::N => "N",
            SweepParam::K => "K",
            SweepParam::T => "T",
            SweepParam::PMaxDbm => "p_max_dbm",
            SweepParam::AreaSideM => "area_side_m",
            SweepParam::GammaDbm => "gamma_dbm",
            SweepParam::DeltaBpsHz => "delta_bps_hz",
        }
    }

    /// Counts are integers; the smallest admissible value for each.
    fn integer_floor(self) -> Option<f64> {
        match self {
            SweepParam::L | SweepParam::M | SweepParam::K => Some(1.0),
            SweepParam::N | SweepParam::T => Some(0.0),
            _ => None,
        }
    }

    pub fn is_integer(self) -> bool {
        self.integer_floor().is_some()
    }

    fn check(self, v: f64) -> Result<()> {
        let bad = |why: &str| Err(HarnessError::spec(format!("sweep value {v} for {}: {why}", self.as_str())));
        if !v.is_finite() {
            return bad("not finite");
        }
        if let Some(floor) = self.integer_floor() {
            if v.fract() != 0.0 {
                return bad("must be an integer");
            }
            if v < floor {
                return bad(&format!("must be at least {floor}"));
            }
        }
        match self {
            SweepParam::AreaSideM if v <= 0.0 => bad("must be positive"),
            SweepParam::DeltaBpsHz if v < 0.0 => bad("must be non-negative"),
            _ => Ok(()),
        }
    }

    /// Writes `v` into the config or params it belongs to.
    pub fn apply(self, v: f64, system: &mut SystemConfig, params: &mut Params) {
        match self {
            SweepParam::L => system.antennas = v as usize,
            SweepParam::M => system.dl_aps = v as usize,
            SweepParam::N => system.ul_aps = v as usize,
            SweepParam::K => system.users = v as usize,
            SweepParam::T => system.targets = v as usize,
            SweepParam::PMaxDbm => system.p_max_dbm = v,
            SweepParam::AreaSideM => system.area_side_m = v,
            SweepParam::GammaDbm => params.gamma_dbm = v,
            SweepParam::DeltaBpsHz => params.delta_bps_hz = Some(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParam,
    pub values: Vec<f64>,
}

/// How heatmap experiments build their beams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamMode {
    /// Solve the beamforming design and plot the resulting pattern.
    Optimized,
    /// Sensing-only steering beams at full power, one per target bearing.
    Steered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// AP counts compared side by side (M = N where the experiment has UL APs).
    pub ap_counts: Vec<usize>,
    /// User counts compared side by side.
    pub user_counts: Vec<usize>,
    /// Fixed product M·L; per-AP antennas follow from the AP count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_antennas: Option<usize>,
    /// Beampattern floor per target.
    pub gamma_dbm: f64,
    /// Leakage cap; absent for non-secure designs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_bps_hz: Option<f64>,
    /// Target bearings per DL AP.
    pub angles_deg: Vec<Vec<f64>>,
    /// Target bearings of the co-located array.
    pub colocated_angles_deg: Vec<f64>,
    pub grid_step_deg: f64,
    pub beams: BeamMode,
    /// Split one total budget (`p_max_dbm`) evenly over the APs instead of
    /// giving every AP `p_max_dbm`.
    pub equal_total_power: bool,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            ap_counts: vec![4, 9, 16],
            user_counts: vec![2, 4, 6],
            total_antennas: None,
            gamma_dbm: 10.0,
            delta_bps_hz: None,
            angles_deg: heatmap_angles(),
            colocated_angles_deg: vec![-50.0, 10.0, 40.0],
            grid_step_deg: 0.5,
            beams: BeamMode::Optimized,
            equal_total_power: true,
        }
    }
}

fn heatmap_angles() -> Vec<Vec<f64>> {
    vec![
        vec![-60.0, 20.0, 40.0],
        vec![25.0, -70.0, -10.0],
        vec![25.0, -45.0, 75.0],
        vec![-20.0, 30.0, 60.0],
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    /// Master seed; topology `i` uses the geometry seed `trial_seed(seed, i)`.
    pub seed: u64,
    pub topologies: usize,
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub system: SystemConfig,
    pub sweep: Sweep,
    pub params: Params,
}

fn sweep(parameter: SweepParam, values: &[f64]) -> Sweep {
    Sweep { parameter, values: values.to_vec() }
}

impl ExperimentSpec {
    /// The fully populated default spec of an experiment.
    pub fn defaults(name: ExperimentName) -> Self {
        let base = SystemConfig::default();
        let mut spec = ExperimentSpec {
            name,
            seed: 1,
            topologies: 20,
            trials: 20_000,
            output: None,
            system: base.clone(),
            sweep: sweep(SweepParam::L, &[2.0, 4.0, 8.0, 12.0, 16.0, 20.0]),
            params: Params::default(),
        };
        let sys = &mut spec.system;
        match name {
            ExperimentName::Hardening => {
                spec.trials = 100_000;
                spec.topologies = 1;
                spec.sweep = sweep(SweepParam::L, &[1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0]);
            }
            ExperimentName::CfVsColocated => {
                spec.trials = 2_000;
                spec.sweep = sweep(SweepParam::K, &[10.0, 20.0, 30.0, 40.0]);
                spec.params.ap_counts = vec![100];
                spec.params.total_antennas = Some(100);
                sys.area_side_m = 1000.0;
                sys.ul_aps = 0;
                sys.targets = 0;
            }
            ExperimentName::PerfSweep => {
                sys.users = 6;
                sys.targets = 3;
            }
            ExperimentName::OptSweep => {
                sys.users = 2;
                sys.targets = 3;
                sys.ul_aps = 0;
                spec.sweep = sweep(SweepParam::L, &[4.0, 8.0, 12.0, 16.0, 20.0]);
            }
            ExperimentName::CfColocatedSe => {
                sys.users = 2;
                sys.ul_aps = 0;
                spec.params.ap_counts = vec![1, 4, 16];
                spec.params.total_antennas = Some(64);
                spec.sweep = sweep(SweepParam::T, &[1.0, 2.0, 3.0, 4.0, 5.0]);
            }
            ExperimentName::SecureSweep => {
                sys.users = 2;
                sys.targets = 3;
                sys.ul_aps = 0;
                sys.antennas = 8;
                spec.params.delta_bps_hz = Some(0.5);
                spec.sweep = sweep(SweepParam::M, &[4.0, 9.0, 16.0]);
            }
            ExperimentName::BeampatternHeatmap | ExperimentName::SecureBeampattern => {
                spec.topologies = 1;
                sys.dl_aps = 4;
                sys.ul_aps = 0;
                sys.users = 2;
                sys.targets = 3;
                sys.antennas = 8;
                if name == ExperimentName::SecureBeampattern {
                    spec.params.delta_bps_hz = Some(0.5);
                    spec.sweep = sweep(SweepParam::DeltaBpsHz, &[0.5]);
                } else {
                    spec.sweep = sweep(SweepParam::GammaDbm, &[10.0]);
                }
            }
            ExperimentName::BeampatternCompare => {
                spec.topologies = 1;
                sys.dl_aps = 2;
                sys.ul_aps = 0;
                sys.users = 2;
                sys.targets = 3;
                sys.antennas = 16;
                spec.params.angles_deg = vec![vec![-60.0, 20.0, 40.0], vec![45.0, -50.0, -10.0]];
                spec.sweep = sweep(SweepParam::GammaDbm, &[10.0]);
            }
        }
        spec.system.seed = spec.seed;
        spec
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let user: toml::Table = text.parse().map_err(|e: toml::de::Error| HarnessError::spec(e.to_string()))?;
        let name: ExperimentName = user
            .get("name")
            .and_then(toml::Value::as_str)
            .ok_or_else(|| HarnessError::spec("missing string key `name`"))?
            .parse()?;
        let mut merged = toml::Table::try_from(Self::defaults(name)).map_err(|e| HarnessError::spec(e.to_string()))?;
        let top_seed = user.contains_key("seed");
        for (key, value) in user {
            match (key.as_str(), value, merged.get_mut(&key)) {
                ("system" | "params", toml::Value::Table(over), Some(toml::Value::Table(base))) => {
                    base.extend(over);
                }
                (_, value, _) => {
                    merged.insert(key, value);
                }
            }
        }
        let mut spec: ExperimentSpec = merged.try_into().map_err(|e: toml::de::Error| HarnessError::spec(e.to_string()))?;
        // one seed drives everything: the top-level key wins over [system]
        if top_seed {
            spec.system.seed = spec.seed;
        } else {
            spec.seed = spec.system.seed;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HarnessError::spec(e.to_string()))
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.system.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::spec(msg));
        if self.topologies == 0 {
            return bad("topologies must be at least 1".into());
        }
        if self.name.uses_monte_carlo() && self.trials < MIN_TRIALS {
            return bad(format!("{} needs at least {MIN_TRIALS} trials, got {}", self.name, self.trials));
        }
        if !self.name.sweepable().contains(&self.sweep.parameter) {
            let allowed: Vec<&str> = self.name.sweepable().iter().map(|p| p.as_str()).collect();
            return bad(format!(
                "{} cannot sweep `{}` (allowed: {})",
                self.name,
                self.sweep.parameter.as_str(),
                allowed.join(", ")
            ));
        }
        if self.sweep.values.is_empty() {
            return bad("sweep needs at least one value".into());
        }
        for &v in &self.sweep.values {
            self.sweep.parameter.check(v)?;
        }
        self.system.validate()?;

        let p = &self.params;
        if !p.gamma_dbm.is_finite() {
            return bad("gamma_dbm must be finite".into());
        }
        if p.delta_bps_hz.is_some_and(|d| !(d >= 0.0)) {
            return bad("delta_bps_hz must be non-negative".into());
        }
        if !(p.grid_step_deg > 0.0 && p.grid_step_deg <= 90.0) {
            return bad("grid_step_deg must lie in (0, 90]".into());
        }
        let uses_ap_counts = matches!(
            self.name,
            ExperimentName::CfVsColocated
                | ExperimentName::PerfSweep
                | ExperimentName::OptSweep
                | ExperimentName::CfColocatedSe
        );
        if uses_ap_counts {
            if p.ap_counts.is_empty() || p.ap_counts.contains(&0) {
                return bad("ap_counts must be non-empty and positive".into());
            }
            if let Some(total) = p.total_antennas {
                if let Some(m) = p.ap_counts.iter().find(|&&m| total % m != 0) {
                    return bad(format!("total_antennas {total} is not divisible by {m} APs"));
                }
            }
        }
        if matches!(self.name, ExperimentName::CfVsColocated | ExperimentName::CfColocatedSe)
            && p.total_antennas.is_none()
        {
            return bad(format!("{} needs params.total_antennas", self.name));
        }
        if self.name == ExperimentName::SecureSweep && (p.user_counts.is_empty() || p.user_counts.contains(&0)) {
            return bad("user_counts must be non-empty and positive".into());
        }
        if matches!(
            self.name,
            ExperimentName::BeampatternHeatmap | ExperimentName::SecureBeampattern | ExperimentName::BeampatternCompare
        ) {
            self.check_angles()?;
        }
        Ok(())
    }

    fn check_angles(&self) -> Result<()> {
        let p = &self.params;
        let sys = &self.system;
        let in_range = |a: &f64| (-90.0..=90.0).contains(a);
        if p.angles_deg.len() != sys.dl_aps {
            return Err(HarnessError::spec(format!(
                "angles_deg lists {} APs but M = {}",
                p.angles_deg.len(),
                sys.dl_aps
            )));
        }
        for (m, row) in p.angles_deg.iter().enumerate() {
            if row.len() != sys.targets {
                return Err(HarnessError::spec(format!("AP {m} lists {} bearings but T = {}", row.len(), sys.targets)));
            }
        }
        if self.name == ExperimentName::BeampatternCompare && p.colocated_angles_deg.len() != sys.targets {
            return Err(HarnessError::spec(format!(
                "colocated_angles_deg lists {} bearings but T = {}",
                p.colocated_angles_deg.len(),
                sys.targets
            )));
        }
        if !p.angles_deg.iter().flatten().chain(&p.colocated_angles_deg).all(in_range) {
            return Err(HarnessError::spec("bearings must lie in [-90, 90] degrees"));
        }
        Ok(())
    }
}
