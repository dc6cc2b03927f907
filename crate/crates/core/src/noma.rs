//! Power-domain NOMA: inverse-gain power allocation, superposition of the
//! per-user delay-Doppler signals, and spectral-efficiency bookkeeping.

use crate::config::LmMinConvention;
use crate::ddgrid::{sfft, vectorize, DDVector, TFGrid};
use crate::equalizer::LinkSnrs;
use crate::error::{Error, Result};
use crate::C64;

/// Power factors, index 0 is the HM user.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    p: Vec<f64>,
}

impl PowerAllocation {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidArgument("empty power allocation".into()));
        }
        if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InvalidArgument("power factors must lie in [0, 1]".into()));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("power factors sum to {total}, not 1")));
        }
        Ok(PowerAllocation { p })
    }

    pub fn hm(&self) -> f64 {
        self.p[0]
    }

    /// Factors of LM users `1..=U`.
    pub fn lm(&self) -> &[f64] {
        &self.p[1..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }
}

/// `p_u = (1 − p0) · (1/|H_u|) / Σ_i 1/|H_i|`: the LM user with the stronger
/// subchannel gets less power.
pub fn allocate_power(p0: f64, lm_gains: &[C64]) -> Result<PowerAllocation> {
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::InvalidArgument(format!("p0 = {p0} outside [0, 1]")));
    }
    if lm_gains.is_empty() {
        return PowerAllocation::new(vec![p0]);
    }
    let inverse: Vec<f64> = lm_gains
        .iter()
        .enumerate()
        .map(|(u, h)| {
            let mag = h.norm();
            if mag == 0.0 || !mag.is_finite() {
                Err(Error::ZeroGain { user: u + 1 })
            } else {
                Ok(1.0 / mag)
            }
        })
        .collect::<Result<_>>()?;
    let total: f64 = inverse.iter().sum();
    let mut p = Vec::with_capacity(lm_gains.len() + 1);
    p.push(p0);
    p.extend(inverse.iter().map(|w| (1.0 - p0) * w / total));
    PowerAllocation::new(p)
}

/// Delay-Doppler image of LM user `user`'s time-frequency signal, which
/// occupies subcarrier `user − 1` in every time slot.
pub fn lm_dd_signal(tf_symbols: &[C64], user: usize, n: usize, m: usize) -> Result<DDVector> {
    if user == 0 || user > m {
        return Err(Error::InvalidArgument(format!("LM user {user} has no subcarrier among {m}")));
    }
    if tf_symbols.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: tf_symbols.len(),
        });
    }
    let mut tf = TFGrid::zeros(n, m);
    for (slot, s) in tf_symbols.iter().enumerate() {
        tf.set(slot, user - 1, *s);
    }
    Ok(vectorize(&sfft(&tf)))
}

/// `Σ_u √p_u · s_u`.
pub fn superpose(signals: &[DDVector], alloc: &PowerAllocation) -> Result<DDVector> {
    if signals.len() != alloc.as_slice().len() {
        return Err(Error::DimensionMismatch {
            expected: alloc.as_slice().len(),
            found: signals.len(),
        });
    }
    let first = &signals[0];
    let (n, m) = (first.n(), first.m());
    let mut out = vec![C64::new(0.0, 0.0); n * m];
    for (s, p) in signals.iter().zip(alloc.as_slice()) {
        if (s.n(), s.m()) != (n, m) {
            return Err(Error::DimensionMismatch {
                expected: n * m,
                found: s.len(),
            });
        }
        let amp = p.sqrt();
        for (o, x) in out.iter_mut().zip(s.as_slice()) {
            *o += x * amp;
        }
    }
    DDVector::new(n, m, out)
}

/// Shannon rate `log2(1 + γ)` in b/s/Hz.
pub fn spectral_efficiency(gamma: f64) -> f64 {
    gamma.ln_1p() / std::f64::consts::LN_2
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserRates {
    pub se_hm: f64,
    pub se_hm_at_lm: Vec<f64>,
    pub se_lm: Vec<f64>,
    /// Worst-case LM statistic under the configured convention.
    pub se_lm_min: f64,
}

impl UserRates {
    pub fn mean_hm_at_lm(&self) -> f64 {
        self.se_hm_at_lm.iter().sum::<f64>() / self.se_hm_at_lm.len() as f64
    }

    pub fn min_hm_at_lm(&self) -> f64 {
        self.se_hm_at_lm.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean_lm(&self) -> f64 {
        self.se_lm.iter().sum::<f64>() / self.se_lm.len() as f64
    }

    pub fn min_lm(&self) -> f64 {
        self.se_lm.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn assemble_rates(snrs: &LinkSnrs, convention: LmMinConvention) -> UserRates {
    let se_hm_at_lm: Vec<f64> = snrs.gamma_0u.iter().map(|&g| spectral_efficiency(g)).collect();
    let se_lm: Vec<f64> = snrs.gamma_u.iter().map(|&g| spectral_efficiency(g)).collect();
    let se_lm_min = match convention {
        LmMinConvention::BothStages => se_hm_at_lm
            .iter()
            .zip(&se_lm)
            .map(|(a, b)| a.min(*b))
            .fold(f64::INFINITY, f64::min),
        LmMinConvention::LmStage => se_lm.iter().copied().fold(f64::INFINITY, f64::min),
    };
    UserRates {
        se_hm: spectral_efficiency(snrs.gamma_0),
        se_hm_at_lm,
        se_lm,
        se_lm_min,
    }
}
