//! Spectral MMSE detection and closed-form detection SNRs.
//!
//! All quantities live on the `NM`-point spectral grid of the delay-Doppler
//! basis. With `c_i = Σ_a v_a λ_{a,i}` the beamformed eigenvalue, the MMSE
//! detector is diagonal with entries `δ_i = c_i* / (|c_i|² + ρ)`.

mod oracle;

pub use oracle::{signal_level_oracle, OracleReport};

use nalgebra::DMatrix;

use crate::channel::EigenSpectra;
use crate::error::{Error, Result};
use crate::C64;

/// `Σ_a v_a λ_{a,i}` for every spectral index.
pub fn combine(lambda: &DMatrix<C64>, weights: &[C64]) -> Vec<C64> {
    assert_eq!(lambda.nrows(), weights.len(), "one weight per antenna row");
    (0..lambda.ncols())
        .map(|i| weights.iter().enumerate().map(|(a, v)| v * lambda[(a, i)]).sum())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EqualizerSpectrum {
    pub delta: Vec<C64>,
    pub rho: f64,
    pub weights: Vec<C64>,
}

pub fn mmse_spectrum(lambda: &DMatrix<C64>, weights: &[C64], rho: f64) -> Result<EqualizerSpectrum> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!("MMSE regularizer must be positive, got {rho}")));
    }
    if lambda.nrows() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: lambda.nrows(),
            found: weights.len(),
        });
    }
    let delta = combine(lambda, weights)
        .into_iter()
        .map(|c| c.conj() / (c.norm_sqr() + rho))
        .collect();
    Ok(EqualizerSpectrum {
        delta,
        rho,
        weights: weights.to_vec(),
    })
}

/// HM-side spectrum averages: equalized desired signal, equalized IDI and
/// equalized noise gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HmOmega {
    pub omega_e: f64,
    pub omega_f: f64,
    pub omega_0: f64,
}

/// LM-side spectrum averages for detecting the HM signal at an LM user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOmega {
    pub omega_t: f64,
    pub omega_u: f64,
}

fn mean_sqr(values: impl Iterator<Item = C64>, len: usize) -> f64 {
    values.map(|z| z.norm_sqr()).sum::<f64>() / len as f64
}

pub fn omega_terms_hm(
    spec: &EqualizerSpectrum,
    lambda_m: &DMatrix<C64>,
    lambda_i: &DMatrix<C64>,
) -> HmOmega {
    let size = spec.delta.len();
    let desired = combine(lambda_m, &spec.weights);
    let idi = combine(lambda_i, &spec.weights);
    HmOmega {
        omega_e: mean_sqr(spec.delta.iter().zip(&desired).map(|(d, c)| d * c), size),
        omega_f: mean_sqr(spec.delta.iter().zip(&idi).map(|(d, c)| d * c), size),
        omega_0: mean_sqr(spec.delta.iter().copied(), size),
    }
}

pub fn omega_terms_lm(spec_u: &EqualizerSpectrum, lambda_u: &DMatrix<C64>) -> LmOmega {
    let size = spec_u.delta.len();
    let combined = combine(lambda_u, &spec_u.weights);
    LmOmega {
        omega_t: spec_u
            .delta
            .iter()
            .zip(&combined)
            .map(|(d, c)| d.norm_sqr() * c.norm_sqr())
            .sum::<f64>()
            / size as f64,
        omega_u: mean_sqr(spec_u.delta.iter().copied(), size),
    }
}

fn check_power(p0: f64, rho_t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::InvalidArgument(format!("power factor {p0} outside [0, 1]")));
    }
    if rho_t.is_nan() || rho_t <= 0.0 {
        return Err(Error::InvalidArgument(format!("transmit SNR must be positive, got {rho_t}")));
    }
    Ok(())
}

/// HM detection SINR with residual NOMA interference, IDI and noise:
/// `p0 ρT ωE / ((1 − p0) ρT ωE + ρT ωF + ω0)`.
pub fn hm_snr(omega: &HmOmega, p0: f64, rho_t: f64) -> Result<f64> {
    check_power(p0, rho_t)?;
    if omega.omega_0 == 0.0 {
        return Err(Error::DegenerateSpectrum);
    }
    let signal = p0 * rho_t * omega.omega_e;
    Ok(signal / ((1.0 - p0) * rho_t * omega.omega_e + rho_t * omega.omega_f + omega.omega_0))
}

/// SINR of HM detection at an LM user from precomputed averages:
/// `p0 ρT ωT / ((1 − p0) ρT ωT + ωU)`.
pub fn hm_at_lm_snr_from(omega: &LmOmega, p0: f64, rho_t: f64) -> Result<f64> {
    check_power(p0, rho_t)?;
    if omega.omega_u == 0.0 {
        return Err(Error::DegenerateSpectrum);
    }
    Ok(p0 * rho_t * omega.omega_t / ((1.0 - p0) * rho_t * omega.omega_t + omega.omega_u))
}

pub fn hm_at_lm_snr(
    spec_u: &EqualizerSpectrum,
    lambda_u: &DMatrix<C64>,
    p0: f64,
    rho_t: f64,
) -> Result<f64> {
    hm_at_lm_snr_from(&omega_terms_lm(spec_u, lambda_u), p0, rho_t)
}

/// Single-tap LM detection SNR `p_u ρT |H_u|²`.
pub fn lm_snr(p_u: f64, rho_t: f64, effective_gain: C64) -> f64 {
    p_u * rho_t * effective_gain.norm_sqr()
}

/// Detection SNRs of one channel use.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSnrs {
    pub gamma_0: f64,
    /// HM detection at each LM user.
    pub gamma_0u: Vec<f64>,
    /// Each LM user's own detection after SIC.
    pub gamma_u: Vec<f64>,
}

/// Largest `|Δ_T − (Δ_E + Δ_F)|` over the spectral grid, where `Δ_T` is built
/// from the full-channel spectrum and `Δ_E`, `Δ_F` from its desired and IDI
/// parts.
pub fn verify_decomposition(spec: &EqualizerSpectrum, spectra: &EigenSpectra) -> f64 {
    let full = combine(&spectra.lambda_full, &spec.weights);
    let desired = combine(&spectra.lambda_m, &spec.weights);
    let idi = combine(&spectra.lambda_i, &spec.weights);
    spec.delta
        .iter()
        .enumerate()
        .map(|(i, d)| (d * full[i] - (d * desired[i] + d * idi[i])).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{hm_eigen_spectra, sample_hm_channel};
    use crate::config::SystemConfig;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn flat(antennas: usize, size: usize) -> DMatrix<C64> {
        DMatrix::from_element(antennas, size, C64::new(1.0, 0.0))
    }

    fn uniform_weights(antennas: usize) -> Vec<C64> {
        vec![C64::new(1.0 / (antennas as f64).sqrt(), 0.0); antennas]
    }

    #[test]
    fn mmse_elementwise_examples() {
        let s = mmse_spectrum(&flat(1, 3), &[C64::new(1.0, 0.0)], 1.0).unwrap();
        assert!(s.delta.iter().all(|d| (d - C64::new(0.5, 0.0)).norm() < 1e-15));

        let zero = DMatrix::from_element(2, 4, C64::new(0.0, 0.0));
        let s = mmse_spectrum(&zero, &uniform_weights(2), 1.0).unwrap();
        assert!(s.delta.iter().all(|d| d.norm() == 0.0));

        let lam = DMatrix::from_row_slice(1, 2, &[C64::new(0.3, -1.2), C64::new(2.0, 0.5)]);
        let s = mmse_spectrum(&lam, &[C64::new(1.0, 0.0)], 1e-12).unwrap();
        for (d, c) in s.delta.iter().zip(lam.iter()) {
            let zf = c.inv();
            assert!((d - zf).norm() / zf.norm() < 1e-6);
        }
        assert!(mmse_spectrum(&lam, &[C64::new(1.0, 0.0)], 0.0).is_err());
    }

    #[test]
    fn flat_four_antenna_worked_example() {
        let w = uniform_weights(4);
        let lam_m = flat(4, 16);
        let lam_i = DMatrix::zeros(4, 16);
        let s = mmse_spectrum(&lam_m, &w, 1.0).unwrap();
        assert!(s.delta.iter().all(|d| (d - C64::new(0.4, 0.0)).norm() < 1e-12));
        let om = omega_terms_hm(&s, &lam_m, &lam_i);
        assert!((om.omega_e - 0.64).abs() < 1e-12);
        assert_eq!(om.omega_f, 0.0);
        assert!((om.omega_0 - 0.16).abs() < 1e-12);
        let lm = omega_terms_lm(&s, &lam_m);
        assert!((lm.omega_t - 0.64).abs() < 1e-12);
        assert!((lm.omega_u - 0.16).abs() < 1e-12);
    }

    #[test]
    fn hm_snr_arithmetic() {
        let om = HmOmega { omega_e: 0.64, omega_f: 0.0, omega_0: 0.16 };
        assert!((hm_snr(&om, 1.0, 10.0).unwrap() - 40.0).abs() < 1e-12);
        assert!((hm_snr(&om, 0.5, 10.0).unwrap() - 3.2 / 3.36).abs() < 1e-12);
        let om = HmOmega { omega_e: 0.5, omega_f: 0.1, omega_0: 0.2 };
        let ceiling = 0.7 * 0.5 / (0.3 * 0.5 + 0.1);
        let g = hm_snr(&om, 0.7, 1e9).unwrap();
        assert!((g - ceiling).abs() / ceiling < 1e-6);
    }

    #[test]
    fn hm_snr_rejects_null_spectrum() {
        let om = HmOmega { omega_e: 0.0, omega_f: 0.0, omega_0: 0.0 };
        assert!(matches!(hm_snr(&om, 0.5, 10.0), Err(Error::DegenerateSpectrum)));
        let lm = LmOmega { omega_t: 0.0, omega_u: 0.0 };
        assert!(matches!(hm_at_lm_snr_from(&lm, 0.5, 10.0), Err(Error::DegenerateSpectrum)));
    }

    #[test]
    fn hm_at_lm_snr_without_lm_power() {
        let w = uniform_weights(4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let lam = DMatrix::from_fn(4, 16, |_, _| C64::new(rng.random(), rng.random()));
        let s = mmse_spectrum(&lam, &w, 1.0).unwrap();
        let om = omega_terms_lm(&s, &lam);
        let g = hm_at_lm_snr(&s, &lam, 1.0, 10.0).unwrap();
        assert!((g - 10.0 * om.omega_t / om.omega_u).abs() < 1e-12);
    }

    #[test]
    fn hm_at_lm_snr_increases_with_hm_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let w = uniform_weights(4);
        for _ in 0..100 {
            let lam = DMatrix::from_fn(4, 32, |_, _| {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let s = mmse_spectrum(&lam, &w, 1.0).unwrap();
            let mut last = -1.0;
            for step in 0..=20 {
                let g = hm_at_lm_snr(&s, &lam, step as f64 / 20.0, 5.0).unwrap();
                assert!(g > last);
                last = g;
            }
        }
    }

    #[test]
    fn lm_snr_examples() {
        assert!((lm_snr(0.1, 10.0, C64::new(0.0, 1.0)) - 1.0).abs() < 1e-15);
        assert_eq!(lm_snr(0.3, 10.0, C64::new(0.0, 0.0)), 0.0);
        let h = C64::new(0.4, -0.7);
        let c = C64::new(1.5, 2.0);
        let ratio = lm_snr(0.2, 7.0, h * c) / lm_snr(0.2, 7.0, h);
        assert!((ratio - c.norm_sqr()).abs() < 1e-12);
    }

    // Dense oracle: (1/NM) trace(Δ Δ^H) with Δ materialized as a diagonal matrix.
    fn dense_trace_mean(diag: &[C64]) -> f64 {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag));
        (&d * d.adjoint()).trace().re / diag.len() as f64
    }

    #[test]
    fn omegas_match_dense_trace() {
        let cfg = SystemConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let w = cfg.weights();
        for _ in 0..10 {
            let ch = sample_hm_channel(&cfg, &mut rng).unwrap();
            let sp = hm_eigen_spectra(&ch, cfg.n, cfg.m);
            let s = mmse_spectrum(&sp.lambda_m, &w, cfg.rho).unwrap();
            let om = omega_terms_hm(&s, &sp.lambda_m, &sp.lambda_i);
            let de: Vec<C64> = s.delta.iter().zip(combine(&sp.lambda_m, &w)).map(|(d, c)| d * c).collect();
            let df: Vec<C64> = s.delta.iter().zip(combine(&sp.lambda_i, &w)).map(|(d, c)| d * c).collect();
            assert!((om.omega_e - dense_trace_mean(&de)).abs() < 1e-12);
            assert!((om.omega_f - dense_trace_mean(&df)).abs() < 1e-12);
            assert!((om.omega_0 - dense_trace_mean(&s.delta)).abs() < 1e-12);
            assert!(om.omega_f > 0.0);
        }
    }

    #[test]
    fn decomposition_residual_and_negative_control() {
        let cfg = SystemConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let w = cfg.weights();
        for _ in 0..20 {
            let ch = sample_hm_channel(&cfg, &mut rng).unwrap();
            let sp = hm_eigen_spectra(&ch, cfg.n, cfg.m);
            let s = mmse_spectrum(&sp.lambda_m, &w, cfg.rho).unwrap();
            assert!(verify_decomposition(&s, &sp) <= 1e-12);

            let ideal = hm_eigen_spectra(&ch.with_integer_doppler(), cfg.n, cfg.m);
            let si = mmse_spectrum(&ideal.lambda_m, &w, cfg.rho).unwrap();
            let full = combine(&ideal.lambda_full, &w);
            let desired = combine(&ideal.lambda_m, &w);
            assert!(full.iter().zip(&desired).all(|(a, b)| (si.delta[0] * a - si.delta[0] * b).norm() < 1e-14));
            assert_eq!(omega_terms_hm(&si, &ideal.lambda_m, &ideal.lambda_i).omega_f, 0.0);

            let mut broken = sp.clone();
            broken.lambda_full[(0, 7)] += C64::new(1e-3, 0.0);
            assert!(verify_decomposition(&s, &broken) > 0.0);
        }
    }

    proptest! {
        #[test]
        fn hm_snr_monotonicity(
            omega_e in 0.01f64..1.0,
            omega_f in 0.0f64..0.5,
            omega_0 in 0.01f64..1.0,
            p0 in 0.05f64..0.95,
            rho_db in -10.0f64..30.0,
        ) {
            let rho_t = 10f64.powf(rho_db / 10.0);
            let om = HmOmega { omega_e, omega_f, omega_0 };
            let g = hm_snr(&om, p0, rho_t).unwrap();
            prop_assert!(g.is_finite() && g >= 0.0);
            prop_assert!(hm_snr(&om, p0 + 0.04, rho_t).unwrap() > g);
            prop_assert!(hm_snr(&om, p0, rho_t * 1.1).unwrap() > g);
            let worse = HmOmega { omega_f: omega_f + 0.01, ..om };
            prop_assert!(hm_snr(&worse, p0, rho_t).unwrap() < g);
            // dropping IDI never hurts
            let clean = HmOmega { omega_f: 0.0, ..om };
            prop_assert!(hm_snr(&clean, p0, rho_t).unwrap() >= g);
        }
    }
}
