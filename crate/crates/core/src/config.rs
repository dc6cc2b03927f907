//! Scenario configuration.
//!
//! The JSON form is a single flat object. Missing keys take the defaults
//! below; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Propagation speed used to turn a vehicle speed into a Doppler shift.
/// 3e8 m/s reproduces the 2.314 kHz maximum Doppler quoted for 500 km/h at 5 GHz.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ChannelMode {
    Real,
    Ideal,
    #[default]
    Both,
}

impl ChannelMode {
    pub fn includes_real(self) -> bool {
        matches!(self, ChannelMode::Real | ChannelMode::Both)
    }

    pub fn includes_ideal(self) -> bool {
        matches!(self, ChannelMode::Ideal | ChannelMode::Both)
    }
}

/// Domain of the worst-case LM statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LmMinConvention {
    /// min over users of min(SE of HM detection at the user, SE of the user's own detection)
    #[default]
    BothStages,
    /// min over users of the SE of the user's own detection only
    LmStage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    /// Base-station antennas.
    #[serde(rename = "A")]
    pub antennas: usize,
    /// Doppler bins (time slots).
    #[serde(rename = "N")]
    pub n: usize,
    /// Delay bins (subcarriers).
    #[serde(rename = "M")]
    pub m: usize,
    /// Low-mobility users.
    #[serde(rename = "U")]
    pub users: usize,
    /// Paths of the high-mobility channel.
    #[serde(rename = "L0")]
    pub hm_paths: usize,
    pub l_max: usize,
    /// Subpath half-width of the fractional-Doppler spread.
    #[serde(rename = "N_p")]
    pub subpath_halfwidth: usize,
    /// Subcarrier spacing in Hz.
    pub delta_f: f64,
    /// Carrier frequency in Hz.
    pub f_c: f64,
    /// Maximum HM speed in km/h; ignored when `nu_max` is set.
    pub v_max_kmh: f64,
    /// Maximum Doppler shift in Hz.
    pub nu_max: Option<f64>,
    /// MMSE regularizer.
    pub rho: f64,
    pub p0: f64,
    /// HM power factors swept by the hm-sweep and lm-sweep commands.
    pub p0_grid: Vec<f64>,
    /// Transmit SNR grid in dB.
    pub rho_t_db: Vec<f64>,
    #[serde(rename = "R_th")]
    pub r_th: f64,
    /// Rate thresholds evaluated by the outage command.
    pub r_th_grid: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub mode: ChannelMode,
    pub lm_min: LmMinConvention,
    /// Per-antenna weights as `[re, im]` pairs. Defaults to `1/√A` on every antenna.
    pub beam_weights: Option<Vec<[f64; 2]>>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            antennas: 4,
            n: 16,
            m: 16,
            users: 8,
            hm_paths: 5,
            l_max: 4,
            subpath_halfwidth: 5,
            delta_f: 15e3,
            f_c: 5e9,
            v_max_kmh: 500.0,
            nu_max: None,
            rho: 1.0,
            p0: 0.5,
            p0_grid: vec![0.5, 0.8],
            rho_t_db: (0..=10).map(|i| 2.0 * i as f64).collect(),
            r_th: 0.5,
            r_th_grid: vec![0.3, 0.6],
            trials: 10_000,
            master_seed: 0x0DD1_1A4B,
            mode: ChannelMode::Both,
            lm_min: LmMinConvention::BothStages,
            beam_weights: None,
        }
    }
}

impl SystemConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: SystemConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("A", self.antennas),
            ("N", self.n),
            ("M", self.m),
            ("U", self.users),
            ("L0", self.hm_paths),
            ("trials", self.trials),
        ];
        for (key, value) in positive {
            if value == 0 {
                return Err(Error::validation(key, "must be at least 1"));
            }
        }
        if self.users > self.m {
            return Err(Error::validation(
                "U",
                format!("must satisfy U <= M (U = {}, M = {})", self.users, self.m),
            ));
        }
        if self.l_max >= self.m {
            return Err(Error::validation("l_max", "must be smaller than M"));
        }
        if 2 * self.subpath_halfwidth >= self.n {
            return Err(Error::validation("N_p", "must satisfy N_p < N/2"));
        }
        if !(self.delta_f.is_finite() && self.delta_f > 0.0) {
            return Err(Error::validation("delta_f", "must be positive"));
        }
        if !(self.f_c.is_finite() && self.f_c > 0.0) {
            return Err(Error::validation("f_c", "must be positive"));
        }
        if !(self.v_max_kmh.is_finite() && self.v_max_kmh >= 0.0) {
            return Err(Error::validation("v_max_kmh", "must be nonnegative"));
        }
        if let Some(nu) = self.nu_max {
            if !(nu.is_finite() && nu >= 0.0) {
                return Err(Error::validation("nu_max", "must be nonnegative"));
            }
        }
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(Error::validation("rho", "must be positive"));
        }
        if !unit_interval(self.p0) {
            return Err(Error::validation("p0", "must lie in [0, 1]"));
        }
        if self.p0_grid.is_empty() || !self.p0_grid.iter().copied().all(unit_interval) {
            return Err(Error::validation("p0_grid", "must be a nonempty list of values in [0, 1]"));
        }
        if self.rho_t_db.is_empty() || self.rho_t_db.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("rho_t_db", "must be a nonempty list of finite values"));
        }
        if !(self.r_th.is_finite() && self.r_th >= 0.0) {
            return Err(Error::validation("R_th", "must be nonnegative"));
        }
        if self.r_th_grid.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::validation("r_th_grid", "must contain nonnegative values"));
        }
        if let Some(w) = &self.beam_weights {
            if w.len() != self.antennas {
                return Err(Error::validation(
                    "beam_weights",
                    format!("must have A = {} entries, found {}", self.antennas, w.len()),
                ));
            }
            if w.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::validation("beam_weights", "must be finite"));
            }
            if w.iter().all(|[re, im]| *re == 0.0 && *im == 0.0) {
                return Err(Error::validation("beam_weights", "must not be all zero"));
            }
        }
        Ok(())
    }

    /// Sampling interval `T = 1/Δf`.
    pub fn sample_period(&self) -> f64 {
        1.0 / self.delta_f
    }

    pub fn nu_max_hz(&self) -> f64 {
        self.nu_max
            .unwrap_or(self.v_max_kmh / 3.6 * self.f_c / SPEED_OF_LIGHT)
    }

    /// Largest integer Doppler tap, `floor(ν_max · N · T)`.
    pub fn k_max(&self) -> i64 {
        (self.nu_max_hz() * self.n as f64 * self.sample_period()).floor() as i64
    }

    pub fn weights(&self) -> Vec<C64> {
        match &self.beam_weights {
            Some(w) => w.iter().map(|[re, im]| C64::new(*re, *im)).collect(),
            None => vec![C64::new(1.0 / (self.antennas as f64).sqrt(), 0.0); self.antennas],
        }
    }

    pub fn grid_size(&self) -> usize {
        self.n * self.m
    }
}

fn unit_interval(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

/// `10^(dB/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
