//! Invariant and oracle checks run by `ddlink-sim validate`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{build_hm_matrices, hm_eigen_spectra, sample_hm_channel, sample_lm_channel, subpath_ratio};
use crate::config::{db_to_linear, SystemConfig};
use crate::ddgrid::{build_basis, diagonalize_bccb};
use crate::equalizer::{combine, mmse_spectrum, omega_terms_hm, signal_level_oracle, verify_decomposition};
use crate::error::Result;
use crate::simkit::derive_trial_seed;
use crate::C64;

pub const DENSE_TOLERANCE: f64 = 1e-9;
pub const DECOMPOSITION_TOLERANCE: f64 = 1e-12;
pub const IDENTITY_TOLERANCE: f64 = 1e-12;
pub const TRUNCATION_FLOOR: f64 = 0.95;
pub const SINR_TOLERANCE: f64 = 0.05;
pub const WORKED_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        CheckOutcome {
            name: name.to_owned(),
            passed,
            detail,
        }
    }
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone)]
pub struct ValidationPlan {
    pub dense_sizes: Vec<usize>,
    pub dense_realizations: usize,
    pub identity_kappas: usize,
    pub sinr_realizations: usize,
    pub sinr_symbols: usize,
    pub sinr_rho_t_db: f64,
}

impl Default for ValidationPlan {
    fn default() -> Self {
        ValidationPlan {
            dense_sizes: vec![4, 8, 16],
            dense_realizations: 50,
            identity_kappas: 100,
            sinr_realizations: 20,
            sinr_symbols: 100_000,
            sinr_rho_t_db: 10.0,
        }
    }
}

/// The config restricted to an `n × n` grid, shrinking the subpath spread,
/// delay spread and user count where the smaller grid requires it.
fn config_for_size(cfg: &SystemConfig, n: usize) -> SystemConfig {
    SystemConfig {
        n,
        m: n,
        subpath_halfwidth: cfg.subpath_halfwidth.min((n - 1) / 2),
        l_max: cfg.l_max.min(n - 1),
        users: cfg.users.min(n),
        ..cfg.clone()
    }
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Dense `Ψ H Ψ^H` against the fast shift-structure spectra, per antenna,
/// for the desired, IDI and full channel matrices. Also collects the
/// decomposition residual of every realization.
pub fn check_dense_spectra(cfg: &SystemConfig, plan: &ValidationPlan) -> Result<(CheckOutcome, CheckOutcome)> {
    let mut worst_rel: f64 = 0.0;
    let mut worst_decomp: f64 = 0.0;
    let mut failures = Vec::new();
    let mut realizations = 0usize;
    for &n in &plan.dense_sizes {
        let sized = config_for_size(cfg, n);
        let basis = build_basis(n, n)?;
        let weights = sized.weights();
        let per_draw = (0..plan.dense_realizations as u64)
            .into_par_iter()
            .map(|r| -> Result<(f64, f64, Vec<String>)> {
                let seed = derive_trial_seed(cfg.master_seed ^ 0xA5A5, ((n as u64) << 32) | r);
                let ch = sample_hm_channel(&sized, &mut ChaCha8Rng::seed_from_u64(seed))?;
                let fast = hm_eigen_spectra(&ch, n, n);
                let mut rel: f64 = 0.0;
                let mut errs = Vec::new();
                for a in 0..sized.antennas {
                    let (hm, hi, hf) = build_hm_matrices(&ch, a, n, n);
                    for (dense, lambda) in [(&hm, &fast.lambda_m), (&hi, &fast.lambda_i), (&hf, &fast.lambda_full)] {
                        match diagonalize_bccb(dense, &basis) {
                            Ok(eig) => {
                                let scale = max_abs(dense).max(f64::MIN_POSITIVE);
                                let err = eig
                                    .iter()
                                    .enumerate()
                                    .map(|(i, e)| (e - lambda[(a, i)]).norm())
                                    .fold(0.0, f64::max);
                                rel = rel.max(err / scale);
                            }
                            Err(e) => errs.push(format!("N=M={n}: {e}")),
                        }
                    }
                }
                let eq = mmse_spectrum(&fast.lambda_m, &weights, sized.rho)?;
                Ok((rel, verify_decomposition(&eq, &fast), errs))
            })
            .collect::<Result<Vec<_>>>()?;
        for (rel, decomp, errs) in per_draw {
            realizations += 1;
            worst_rel = worst_rel.max(rel);
            worst_decomp = worst_decomp.max(decomp);
            failures.extend(errs);
        }
    }
    let dense_ok = failures.is_empty() && worst_rel <= DENSE_TOLERANCE;
    let mut detail = format!(
        "{realizations} realizations at N=M in {:?}, worst relative error {worst_rel:.3e} (limit {DENSE_TOLERANCE:e})",
        plan.dense_sizes
    );
    if let Some(f) = failures.first() {
        detail.push_str(&format!("; {} diagonalization failures, first: {f}", failures.len()));
    }
    let dense = CheckOutcome::new("dense vs fast eigen-spectra", dense_ok, detail);
    let decomposition = CheckOutcome::new(
        "desired + IDI decomposition",
        worst_decomp <= DECOMPOSITION_TOLERANCE,
        format!("{realizations} realizations, worst residual {worst_decomp:.3e} (limit {DECOMPOSITION_TOLERANCE:e})"),
    );
    Ok((dense, decomposition))
}

pub fn check_subpath_identities(cfg: &SystemConfig, plan: &ValidationPlan) -> CheckOutcome {
    let n = cfg.n;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_trial_seed(cfg.master_seed ^ 0x5A5A, 0));
    let (mut worst_sum, mut worst_energy): (f64, f64) = (0.0, 0.0);
    for _ in 0..plan.identity_kappas {
        let kappa = 0.5 - rng.random::<f64>();
        let sum: C64 = (0..n as i64).map(|q| subpath_ratio(q, kappa, n)).sum();
        let energy: f64 = (0..n as i64).map(|q| subpath_ratio(q, kappa, n).norm_sqr()).sum();
        worst_sum = worst_sum.max((sum - C64::new(1.0, 0.0)).norm());
        worst_energy = worst_energy.max((energy - 1.0).abs());
    }
    CheckOutcome::new(
        "subpath ratio period identities",
        worst_sum <= IDENTITY_TOLERANCE && worst_energy <= IDENTITY_TOLERANCE,
        format!(
            "{} kappas at N={n}: |sum-1| {worst_sum:.3e}, |energy-1| {worst_energy:.3e} (limit {IDENTITY_TOLERANCE:e})",
            plan.identity_kappas
        ),
    )
}

pub fn check_truncation(cfg: &SystemConfig) -> CheckOutcome {
    let w = cfg.subpath_halfwidth as i64;
    let kept: f64 = (-w..=w).map(|q| subpath_ratio(q, 0.5, cfg.n).norm_sqr()).sum();
    CheckOutcome::new(
        "subpath truncation energy",
        kept >= TRUNCATION_FLOOR,
        format!("kappa=0.5, N={}, |q|<={w}: kept {kept:.6} (floor {TRUNCATION_FLOOR})", cfg.n),
    )
}

pub fn check_sinr_oracle(cfg: &SystemConfig, plan: &ValidationPlan) -> Result<CheckOutcome> {
    let rho_t = db_to_linear(plan.sinr_rho_t_db);
    let mut worst: f64 = 0.0;
    let mut worst_coherent: f64 = 0.0;
    let reports = (0..plan.sinr_realizations as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_trial_seed(cfg.master_seed ^ 0x0C0C, r));
            let hm = sample_hm_channel(cfg, &mut rng)?;
            let lm = (1..=cfg.users)
                .map(|u| sample_lm_channel(cfg, u, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            signal_level_oracle(&hm, &lm, cfg, cfg.p0, rho_t, plan.sinr_symbols, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    for report in &reports {
        worst = worst.max(report.relative_error());
        worst_coherent = worst_coherent.max((report.coherent / report.analytic - 1.0).abs());
    }
    Ok(CheckOutcome::new(
        "closed-form vs symbol-level HM SINR",
        worst <= SINR_TOLERANCE,
        format!(
            "{} realizations, {} symbols each, p0={}, rhoT={} dB: worst relative error {worst:.4} (limit {SINR_TOLERANCE}); \
             coherent-impairment SINR deviates by up to {worst_coherent:.4}",
            plan.sinr_realizations, plan.sinr_symbols, cfg.p0, plan.sinr_rho_t_db
        ),
    ))
}

/// Four antennas, flat unit channel, uniform unit-power weights, `ρ = 1`.
pub fn check_worked_example() -> Result<CheckOutcome> {
    let antennas = 4;
    let size = 16;
    let weights = vec![C64::new(0.5, 0.0); antennas];
    let lambda_m = DMatrix::from_element(antennas, size, C64::new(1.0, 0.0));
    let lambda_i = DMatrix::zeros(antennas, size);
    let eq = mmse_spectrum(&lambda_m, &weights, 1.0)?;
    let om = omega_terms_hm(&eq, &lambda_m, &lambda_i);
    let combined = combine(&lambda_m, &weights);
    let delta_err = eq
        .delta
        .iter()
        .map(|d| (d - C64::new(0.4, 0.0)).norm())
        .fold(0.0, f64::max);
    let err = delta_err
        .max((om.omega_e - 0.64).abs())
        .max((om.omega_0 - 0.16).abs())
        .max(om.omega_f.abs())
        .max((combined[0] - C64::new(2.0, 0.0)).norm());
    Ok(CheckOutcome::new(
        "flat four-antenna worked example",
        err <= WORKED_TOLERANCE,
        format!(
            "delta={:.15}, omega_E={:.15}, omega_F={}, omega_0={:.15}, max error {err:.3e}",
            eq.delta[0].re, om.omega_e, om.omega_f, om.omega_0
        ),
    ))
}

pub fn run_validation(cfg: &SystemConfig, plan: &ValidationPlan) -> Result<Vec<CheckOutcome>> {
    cfg.validate()?;
    let (dense, decomposition) = check_dense_spectra(cfg, plan)?;
    Ok(vec![
        dense,
        decomposition,
        check_subpath_identities(cfg, plan),
        check_truncation(cfg),
        check_sinr_oracle(cfg, plan)?,
        check_worked_example()?,
    ])
}
