//! Symbol-level check of the closed-form HM detection SINR.
//!
//! Random unit-power symbol vectors for every user are superposed, passed
//! through the dense channel matrices, corrupted by noise of variance `1/ρT`
//! and equalized with a dense MMSE detector obtained by direct inversion.
//! The equalized output splits exactly into four branches:
//!
//! ```text
//! G0 y0 = √p0 E0 s0  +  E0 Σ_i √p_i s_i  +  F0 s  +  G0 w0
//!         signal        residual NOMA       IDI     noise
//! ```
//!
//! The reported empirical SINR is the measured signal power over the summed
//! measured powers of the three impairment branches, which is the quantity
//! the closed form predicts. The branches are not independent (the IDI branch
//! carries the same symbols as the other two), so the power of their coherent
//! sum is reported separately.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::{build_hm_matrices, hm_eigen_spectra, lm_effective_gain, HmChannelRealization, LmChannelRealization};
use crate::config::SystemConfig;
use crate::equalizer::{hm_snr, mmse_spectrum, omega_terms_hm};
use crate::error::{Error, Result};
use crate::noma::allocate_power;
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    /// Closed-form SINR from the spectral route.
    pub analytic: f64,
    /// Measured signal power over summed measured impairment-branch powers.
    pub empirical: f64,
    /// Delta-method standard error of `empirical` over frames.
    pub stderr: f64,
    /// Measured signal power over the power of the coherent impairment sum.
    pub coherent: f64,
    pub signal_power: f64,
    pub noma_power: f64,
    pub idi_power: f64,
    pub noise_power: f64,
    pub symbols: usize,
}

impl OracleReport {
    pub fn relative_error(&self) -> f64 {
        if self.analytic == 0.0 {
            self.empirical.abs()
        } else {
            (self.empirical / self.analytic - 1.0).abs()
        }
    }
}

fn gaussian_block<R: Rng + ?Sized>(rows: usize, cols: usize, variance: f64, rng: &mut R) -> DMatrix<C64> {
    let s = (variance / 2.0).sqrt();
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    })
}

fn column_powers(x: &DMatrix<C64>) -> Vec<f64> {
    let rows = x.nrows() as f64;
    x.column_iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>() / rows)
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Runs at least `symbols` HM symbols (rounded up to whole frames) through
/// the dense link and compares the measured SINR with the closed form.
pub fn signal_level_oracle<R: Rng + ?Sized>(
    ch: &HmChannelRealization,
    lm_set: &[LmChannelRealization],
    cfg: &SystemConfig,
    p0: f64,
    rho_t: f64,
    symbols: usize,
    rng: &mut R,
) -> Result<OracleReport> {
    if rho_t.is_nan() || rho_t <= 0.0 {
        return Err(Error::InvalidArgument("transmit SNR must be positive".into()));
    }
    let (n, m) = (cfg.n, cfg.m);
    let size = n * m;
    let weights = cfg.weights();

    let gains: Vec<C64> = lm_set
        .iter()
        .map(|u| lm_effective_gain(u, &weights, u.user - 1, m))
        .collect();
    let alloc = allocate_power(p0, &gains)?;

    // Analytic route: fast spectra only.
    let spectra = hm_eigen_spectra(ch, n, m);
    let eq = mmse_spectrum(&spectra.lambda_m, &weights, cfg.rho)?;
    let analytic = hm_snr(&omega_terms_hm(&eq, &spectra.lambda_m, &spectra.lambda_i), p0, rho_t)?;

    // Dense route.
    let mut h_m = DMatrix::<C64>::zeros(size, size);
    let mut h_i = DMatrix::<C64>::zeros(size, size);
    for (a, v) in weights.iter().enumerate() {
        let (dm, di, _) = build_hm_matrices(ch, a, n, m);
        h_m += dm * *v;
        h_i += di * *v;
    }
    let h_m_adj = h_m.adjoint();
    let gram = &h_m_adj * &h_m + DMatrix::<C64>::identity(size, size) * C64::new(cfg.rho, 0.0);
    let g0 = gram
        .lu()
        .solve(&h_m_adj)
        .ok_or_else(|| Error::InvalidArgument("MMSE Gram matrix is singular".into()))?;
    let e0 = &g0 * &h_m;
    let f0 = &g0 * &h_i;

    let frames = symbols.div_ceil(size).max(2);
    let s0 = gaussian_block(size, frames, 1.0, rng);
    let mut s_lm = DMatrix::<C64>::zeros(size, frames);
    for &p in alloc.lm() {
        let block = gaussian_block(size, frames, 1.0, rng);
        s_lm += block * C64::new(p.sqrt(), 0.0);
    }
    let noise = gaussian_block(size, frames, 1.0 / rho_t, rng);
    let hm_amp = C64::new(alloc.hm().sqrt(), 0.0);
    let s_total = &s0 * hm_amp + &s_lm;

    let signal = &e0 * &s0 * hm_amp;
    let noma = &e0 * &s_lm;
    let idi = &f0 * &s_total;
    let z0 = &g0 * &noise;
    let coherent_sum = &noma + &idi + &z0;

    let sig = column_powers(&signal);
    let branch: Vec<f64> = column_powers(&noma)
        .iter()
        .zip(column_powers(&idi))
        .zip(column_powers(&z0))
        .map(|((a, b), c)| a + b + c)
        .collect();
    let coherent_pow = column_powers(&coherent_sum);

    let (ms, mi) = (mean(&sig), mean(&branch));
    let empirical = ms / mi;
    let frames_f = frames as f64;
    let (mut vs, mut vi, mut cov) = (0.0, 0.0, 0.0);
    for (s, i) in sig.iter().zip(&branch) {
        vs += (s - ms).powi(2);
        vi += (i - mi).powi(2);
        cov += (s - ms) * (i - mi);
    }
    let denom = frames_f - 1.0;
    let (vs, vi, cov) = (vs / denom, vi / denom, cov / denom);
    let var_ratio = (vs - 2.0 * empirical * cov + empirical * empirical * vi) / (mi * mi * frames_f);

    Ok(OracleReport {
        analytic,
        empirical,
        stderr: var_ratio.max(0.0).sqrt(),
        coherent: ms / mean(&coherent_pow),
        signal_power: ms,
        noma_power: mean(&column_powers(&noma)),
        idi_power: mean(&column_powers(&idi)),
        noise_power: mean(&column_powers(&z0)),
        symbols: frames * size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_hm_channel, sample_lm_channel, HmPath};
    use crate::ddgrid::build_basis;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_cfg() -> SystemConfig {
        SystemConfig {
            n: 8,
            m: 8,
            users: 4,
            subpath_halfwidth: 3,
            ..SystemConfig::default()
        }
    }

    fn draw(cfg: &SystemConfig, seed: u64) -> (HmChannelRealization, Vec<LmChannelRealization>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hm = sample_hm_channel(cfg, &mut rng).unwrap();
        let lm = (1..=cfg.users).map(|u| sample_lm_channel(cfg, u, &mut rng).unwrap()).collect();
        (hm, lm)
    }

    #[test]
    fn dense_mmse_equals_spectral_detector() {
        let cfg = small_cfg();
        let (hm, _) = draw(&cfg, 1);
        let w = cfg.weights();
        let size = cfg.grid_size();
        let mut h_m = DMatrix::<C64>::zeros(size, size);
        for (a, v) in w.iter().enumerate() {
            h_m += build_hm_matrices(&hm, a, cfg.n, cfg.m).0 * *v;
        }
        let adj = h_m.adjoint();
        let g_dense = (&adj * &h_m + DMatrix::identity(size, size) * C64::new(cfg.rho, 0.0))
            .lu()
            .solve(&adj)
            .unwrap();
        let spectra = hm_eigen_spectra(&hm, cfg.n, cfg.m);
        let eq = mmse_spectrum(&spectra.lambda_m, &w, cfg.rho).unwrap();
        let g_spec = build_basis(cfg.n, cfg.m).unwrap().synthesize(&eq.delta);
        let err = (g_dense - g_spec).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "detector mismatch {err}");
    }

    #[test]
    fn agrees_with_closed_form_on_small_grid() {
        let cfg = small_cfg();
        for seed in 0..4 {
            let (hm, lm) = draw(&cfg, 100 + seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = signal_level_oracle(&hm, &lm, &cfg, 0.5, 10.0, 100_000, &mut rng).unwrap();
            assert!(r.relative_error() < 0.05, "{r:?}");
            assert!(r.stderr / r.empirical < 0.01);
        }
    }

    #[test]
    fn noise_free_integer_channel_is_nearly_perfect() {
        let cfg = small_cfg();
        let (_, lm) = draw(&cfg, 2);
        let hm = HmChannelRealization {
            paths: vec![HmPath {
                doppler_tap: 1,
                delay_tap: 2,
                kappa: 0.0,
                gains: vec![C64::new(1.0, 0.0); cfg.antennas],
            }],
            subpath_halfwidth: cfg.subpath_halfwidth,
            n: cfg.n,
            m: cfg.m,
            delta_f: cfg.delta_f,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = signal_level_oracle(&hm, &lm, &cfg, 1.0, 1e12, 4096, &mut rng).unwrap();
        assert!(r.empirical > 1e6, "{r:?}");
        assert_eq!(r.idi_power, 0.0);
    }

    #[test]
    fn no_hm_power_means_no_hm_signal() {
        let cfg = small_cfg();
        let (hm, lm) = draw(&cfg, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = signal_level_oracle(&hm, &lm, &cfg, 0.0, 10.0, 4096, &mut rng).unwrap();
        assert_eq!(r.signal_power, 0.0);
        assert_eq!(r.empirical, 0.0);
        assert_eq!(r.analytic, 0.0);
    }
}
