//! Run configuration: every tunable with its default, loadable from a flat
//! `key = value` file and overridable field by field.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{RadioParams, SectorLayout};
use crate::mobility::MobilityConfig;
use crate::policy::{Algorithm, DqnConfig, EpsilonSchedule};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        })
    }
}

impl FromStr for Precision {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(format!("unknown precision `{other}` (f32, f64)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    // swarm and area
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub area: f64,
    pub range: f64,
    pub r_d: f64,
    pub v: f64,
    pub r_roam: f64,
    pub drift_speed: f64,
    pub user_speed: f64,
    pub user_turn_prob: f64,
    pub dt: f64,

    // radio
    pub p_t: f64,
    pub eta: f64,
    pub lambda: f64,
    pub p_o: f64,
    pub k0_override: Option<f64>,
    pub power_check: bool,

    // protocol and objective
    pub window: usize,
    pub link_timeout: u32,
    pub w: f64,
    pub alpha_ewma: f64,

    // learning
    pub algorithm: Algorithm,
    pub gamma: f64,
    pub lr: f64,
    pub eps_max: f64,
    pub eps_min: f64,
    pub eps_decay: u64,
    pub batch: usize,
    pub replay: usize,
    pub hidden: usize,
    pub target_network: bool,
    pub target_sync: u64,

    // run control
    pub intervals: usize,
    pub seeds: Vec<u64>,
    pub precision: Precision,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 12,
            m: 3,
            k: 8,
            area: 100.0,
            range: 30.0,
            r_d: 30.0,
            v: 1.0,
            r_roam: 10.0,
            drift_speed: 1.0,
            user_speed: 1.0,
            user_turn_prob: 0.05,
            dt: 1.0,
            p_t: 10e-3,
            eta: 2.0,
            lambda: 850e-9,
            p_o: 0.5e-3,
            k0_override: None,
            power_check: false,
            window: 10,
            link_timeout: 5,
            w: 0.5,
            alpha_ewma: 0.3,
            algorithm: Algorithm::Dqn,
            gamma: 0.9,
            lr: 3e-4,
            eps_max: 1.0,
            eps_min: 0.35,
            eps_decay: 1000,
            batch: 128,
            replay: 20_000,
            hidden: 128,
            target_network: true,
            target_sync: 50,
            intervals: 5000,
            seeds: (1..=10).collect(),
            precision: Precision::F64,
        }
    }
}

impl SimConfig {
    /// Reads a flat `key = value` file; absent keys keep their defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|source| Error::ConfigFile {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &'static str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be positive, got {x}")))
            }
        };
        if self.n < 2 {
            return Err(Error::config("n", "need at least 2 nodes"));
        }
        if self.k < 2 {
            return Err(Error::config("k", "need at least 2 sectors"));
        }
        if self.k > 255 {
            return Err(Error::config("k", "at most 255 sectors"));
        }
        positive("area", self.area)?;
        positive("range", self.range)?;
        positive("r_d", self.r_d)?;
        positive("dt", self.dt)?;
        positive("p_t", self.p_t)?;
        positive("p_o", self.p_o)?;
        positive("lambda", self.lambda)?;
        positive("lr", self.lr)?;
        if !(self.v >= 0.0) {
            return Err(Error::config("v", "must be non-negative"));
        }
        if !(self.eta >= 1.0) {
            return Err(Error::config("eta", "must be at least 1"));
        }
        if self.window == 0 {
            return Err(Error::config("window", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.w) {
            return Err(Error::config("w", "must lie in [0, 1]"));
        }
        if !(self.alpha_ewma > 0.0 && self.alpha_ewma <= 1.0) {
            return Err(Error::config("alpha_ewma", "must lie in (0, 1]"));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::config("gamma", "must lie in [0, 1)"));
        }
        if !(0.0 <= self.eps_min && self.eps_min <= self.eps_max && self.eps_max <= 1.0) {
            return Err(Error::config("eps_min", "need 0 ≤ eps_min ≤ eps_max ≤ 1"));
        }
        if self.batch == 0 {
            return Err(Error::config("batch", "must be at least 1"));
        }
        if self.replay < self.batch {
            return Err(Error::config("replay", "must hold at least one batch"));
        }
        if self.hidden == 0 {
            return Err(Error::config("hidden", "must be at least 1"));
        }
        if self.target_network && self.target_sync == 0 {
            return Err(Error::config("target_sync", "must be at least 1"));
        }
        if let Some(k0) = self.k0_override {
            positive("k0_override", k0)?;
        }
        if !(self.r_roam > 0.0 && self.r_roam < self.area / 2.0) {
            return Err(Error::config("r_roam", "must lie in (0, area/2)"));
        }
        self.mobility::<f64>().validate()?;
        Ok(())
    }

    pub fn layout<T: Scalar>(&self) -> Result<SectorLayout<T>> {
        SectorLayout::new(self.k)
    }

    pub fn radio<T: Scalar>(&self, layout: &SectorLayout<T>) -> RadioParams<T> {
        RadioParams {
            p_t: T::lit(self.p_t),
            eta: T::lit(self.eta),
            lambda_m: T::lit(self.lambda),
            p_o: T::lit(self.p_o),
            k0_override: self.k0_override.map(T::lit),
            range_m: T::lit(self.range),
            theta_half_rad: layout.fov() / T::lit(2.0),
            power_check: self.power_check,
        }
    }

    pub fn mobility<T: Scalar>(&self) -> MobilityConfig<T> {
        MobilityConfig {
            area_m: T::lit(self.area),
            v_mps: T::lit(self.v),
            r_roam_m: T::lit(self.r_roam),
            drift_speed_mps: T::lit(self.drift_speed),
            user_speed_mps: T::lit(self.user_speed),
            user_turn_prob: self.user_turn_prob,
            dt_s: T::lit(self.dt),
        }
    }

    pub fn schedule(&self) -> EpsilonSchedule {
        EpsilonSchedule {
            max: self.eps_max,
            min: self.eps_min,
            horizon: self.eps_decay,
        }
    }

    pub fn dqn(&self) -> DqnConfig {
        DqnConfig {
            hidden: [self.hidden; 4],
            batch: self.batch,
            replay_capacity: self.replay,
            gamma: self.gamma,
            lr: self.lr,
            schedule: self.schedule(),
            target_sync: self.target_network.then_some(self.target_sync),
        }
    }

    /// `algorithm_w0.5_s3`.
    pub fn run_id(&self, seed: u64) -> String {
        format!("{}_w{}_s{}", self.algorithm, self.w, seed)
    }
}
