//! Random HM/LM channels, fractional-Doppler subpath coefficients and the
//! desired/IDI/full channel matrices together with their eigen-spectra.
//!
//! A high-mobility path `p` with Doppler tap `k_p + κ_p` and delay tap `l_p`
//! spreads into `2·N_p + 1` subpaths. Subpath `q` moves a symbol by
//! `(k_p − q, l_p)` on the cyclic grid with coefficient `h_p(q)`. The `q = 0`
//! subpath is the desired signal; the others are inter-Doppler interference.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::SystemConfig;
use crate::ddgrid::{vec_index, ShiftSpectrum};
use crate::error::{Error, Result};
use crate::C64;

const LM_MAX_PATHS: usize = 4;

/// The bracketed fractional-Doppler leakage factor
/// `(e^{−j2π(−q−κ)} − 1) / (N·e^{−j2π(−q−κ)/N} − N)`.
///
/// Periodic in `q` with period `N`; returns the analytic limit `1` where the
/// denominator vanishes (`−q−κ ≡ 0 mod N`).
pub fn subpath_ratio(q: i64, kappa: f64, n: usize) -> C64 {
    let nf = n as f64;
    let x = -(q as f64) - kappa;
    let x = x - nf * (x / nf).round();
    if x.abs() < 1e-12 {
        return C64::new(1.0, 0.0);
    }
    // integer offsets land on a zero of the Dirichlet kernel
    if kappa == 0.0 {
        return C64::new(0.0, 0.0);
    }
    // e^{-jπx(1-1/N)} · sin(πx) / (N sin(πx/N))
    let magnitude = (PI * x).sin() / (nf * (PI * x / nf).sin());
    C64::from_polar(magnitude, -PI * x * (1.0 - 1.0 / nf))
}

/// `α · e^{−j2πντ} · subpath_ratio(q, κ, N)` with `ν` in Hz and `τ` in seconds.
pub fn subpath_coefficient(alpha: C64, nu: f64, tau: f64, q: i64, kappa: f64, n: usize) -> C64 {
    alpha * C64::from_polar(1.0, -2.0 * PI * nu * tau) * subpath_ratio(q, kappa, n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HmPath {
    pub doppler_tap: i64,
    pub delay_tap: usize,
    /// Fractional Doppler in `(−1/2, 1/2]`.
    pub kappa: f64,
    /// One complex gain per antenna.
    pub gains: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HmChannelRealization {
    pub paths: Vec<HmPath>,
    pub subpath_halfwidth: usize,
    pub n: usize,
    pub m: usize,
    pub delta_f: f64,
}

impl HmChannelRealization {
    pub fn antennas(&self) -> usize {
        self.paths.first().map_or(0, |p| p.gains.len())
    }

    /// The same draw with every fractional Doppler forced to zero.
    pub fn with_integer_doppler(&self) -> Self {
        let mut ideal = self.clone();
        for p in &mut ideal.paths {
            p.kappa = 0.0;
        }
        ideal
    }

    /// Doppler shift `ν_p = (k_p + κ_p)/(NT)` of a path in Hz.
    pub fn doppler_hz(&self, path: &HmPath) -> f64 {
        (path.doppler_tap as f64 + path.kappa) * self.delta_f / self.n as f64
    }

    /// Delay `τ_p = l_p/(MΔf)` of a path in seconds.
    pub fn delay_s(&self, path: &HmPath) -> f64 {
        path.delay_tap as f64 / (self.m as f64 * self.delta_f)
    }

    /// `h_{p,a}(q)`.
    pub fn coefficient(&self, path: usize, antenna: usize, q: i64) -> C64 {
        let p = &self.paths[path];
        subpath_coefficient(
            p.gains[antenna],
            self.doppler_hz(p),
            self.delay_s(p),
            q,
            p.kappa,
            self.n,
        )
    }

    /// Antenna-independent part of `h_{p,a}(q)` (everything except `α_{p,a}`).
    fn leakage(&self, path: usize, q: i64) -> C64 {
        self.coefficient_for_gain(path, C64::new(1.0, 0.0), q)
    }

    fn coefficient_for_gain(&self, path: usize, alpha: C64, q: i64) -> C64 {
        let p = &self.paths[path];
        subpath_coefficient(alpha, self.doppler_hz(p), self.delay_s(p), q, p.kappa, self.n)
    }

    fn subpaths(&self) -> impl Iterator<Item = i64> {
        let w = self.subpath_halfwidth as i64;
        -w..=w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmPath {
    pub delay_tap: usize,
    pub gains: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmChannelRealization {
    /// User index in `1..=U`.
    pub user: usize,
    pub paths: Vec<LmPath>,
}

/// Per-antenna eigenvalues on the `NM` spectral grid, rows are antennas.
#[derive(Debug, Clone)]
pub struct EigenSpectra {
    /// Desired (`q = 0`) part.
    pub lambda_m: DMatrix<C64>,
    /// Inter-Doppler interference (`q ≠ 0`) part.
    pub lambda_i: DMatrix<C64>,
    /// Full channel, accumulated over every subpath in one pass.
    pub lambda_full: DMatrix<C64>,
}

impl EigenSpectra {
    /// Largest `|λ_full − (λ_M + λ_I)|`.
    pub fn split_residual(&self) -> f64 {
        (&self.lambda_full - (&self.lambda_m + &self.lambda_i))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

/// First tap at 0, the rest uniform on `[0, l_max]`, without replacement when
/// enough distinct taps exist.
fn draw_delay_taps<R: Rng + ?Sized>(count: usize, l_max: usize, rng: &mut R) -> Vec<usize> {
    let mut taps = Vec::with_capacity(count);
    if count == 0 {
        return taps;
    }
    taps.push(0);
    let rest = count - 1;
    if l_max + 1 > rest {
        taps.extend(index::sample(rng, l_max + 1, rest));
    } else {
        taps.extend((0..rest).map(|_| rng.random_range(0..=l_max)));
    }
    taps
}

pub fn sample_hm_channel<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<HmChannelRealization> {
    cfg.validate()?;
    let k_max = cfg.k_max();
    let variance = 1.0 / cfg.hm_paths as f64;
    let mut paths = Vec::with_capacity(cfg.hm_paths);
    for _ in 0..cfg.hm_paths {
        let doppler_tap = rng.random_range(-k_max..=k_max);
        // u in [0, 1) maps onto (-1/2, 1/2]
        let kappa = 0.5 - rng.random::<f64>();
        let gains = (0..cfg.antennas)
            .map(|_| complex_gaussian(rng, variance))
            .collect();
        paths.push(HmPath {
            doppler_tap,
            delay_tap: 0,
            kappa,
            gains,
        });
    }
    for (p, l) in paths.iter_mut().zip(draw_delay_taps(cfg.hm_paths, cfg.l_max, rng)) {
        p.delay_tap = l;
    }
    Ok(HmChannelRealization {
        paths,
        subpath_halfwidth: cfg.subpath_halfwidth,
        n: cfg.n,
        m: cfg.m,
        delta_f: cfg.delta_f,
    })
}

pub fn sample_lm_channel<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    user: usize,
    rng: &mut R,
) -> Result<LmChannelRealization> {
    if user == 0 || user > cfg.users {
        return Err(Error::InvalidArgument(format!(
            "LM user index {user} outside 1..={}",
            cfg.users
        )));
    }
    let count = rng.random_range(1..=LM_MAX_PATHS);
    let variance = 1.0 / count as f64;
    let taps = draw_delay_taps(count, cfg.l_max, rng);
    let paths = taps
        .into_iter()
        .map(|delay_tap| LmPath {
            delay_tap,
            gains: (0..cfg.antennas)
                .map(|_| complex_gaussian(rng, variance))
                .collect(),
        })
        .collect();
    Ok(LmChannelRealization { user, paths })
}

fn add_shift(h: &mut DMatrix<C64>, n: usize, m: usize, doppler: i64, delay: i64, coeff: C64) {
    for k in 0..n {
        for l in 0..m {
            let src_k = (k as i64 - doppler).rem_euclid(n as i64) as usize;
            let src_l = (l as i64 - delay).rem_euclid(m as i64) as usize;
            h[(vec_index(k, l, n), vec_index(src_k, src_l, n))] += coeff;
        }
    }
}

/// Dense `(H_M, H_I, H_full)` for one antenna.
pub fn build_hm_matrices(
    ch: &HmChannelRealization,
    antenna: usize,
    n: usize,
    m: usize,
) -> (DMatrix<C64>, DMatrix<C64>, DMatrix<C64>) {
    let size = n * m;
    let mut desired = DMatrix::zeros(size, size);
    let mut idi = DMatrix::zeros(size, size);
    for (pi, p) in ch.paths.iter().enumerate() {
        for q in ch.subpaths() {
            let h = ch.coefficient(pi, antenna, q);
            let target = if q == 0 { &mut desired } else { &mut idi };
            add_shift(target, n, m, p.doppler_tap - q, p.delay_tap as i64, h);
        }
    }
    let full = &desired + &idi;
    (desired, idi, full)
}

/// Eigen-spectra evaluated directly from the shift structure, without any
/// dense matrix.
pub fn hm_eigen_spectra(ch: &HmChannelRealization, n: usize, m: usize) -> EigenSpectra {
    let shifts = ShiftSpectrum::new(n, m);
    let size = n * m;
    let antennas = ch.antennas();
    let mut lambda_m = DMatrix::zeros(antennas, size);
    let mut lambda_i = DMatrix::zeros(antennas, size);
    let mut lambda_full = DMatrix::zeros(antennas, size);
    let zero = C64::new(0.0, 0.0);
    let mut desired = vec![zero; size];
    let mut idi = vec![zero; size];
    let mut full = vec![zero; size];
    for (pi, p) in ch.paths.iter().enumerate() {
        desired.fill(zero);
        idi.fill(zero);
        full.fill(zero);
        for q in ch.subpaths() {
            let c = ch.leakage(pi, q);
            let (sk, sl) = (p.doppler_tap - q, p.delay_tap as i64);
            if q == 0 {
                shifts.accumulate(sk, sl, c, &mut desired);
            } else {
                shifts.accumulate(sk, sl, c, &mut idi);
            }
            shifts.accumulate(sk, sl, c, &mut full);
        }
        for (a, &g) in p.gains.iter().enumerate() {
            for i in 0..size {
                lambda_m[(a, i)] += g * desired[i];
                lambda_i[(a, i)] += g * idi[i];
                lambda_full[(a, i)] += g * full[i];
            }
        }
    }
    EigenSpectra {
        lambda_m,
        lambda_i,
        lambda_full,
    }
}

/// `H_{a,u}[m] = Σ_p α_{p,a} e^{j2π l_p m / M}`.
pub fn lm_subchannel_gain(ch: &LmChannelRealization, antenna: usize, subcarrier: usize, m: usize) -> C64 {
    ch.paths
        .iter()
        .map(|p| {
            let turns = ((p.delay_tap * subcarrier) % m) as f64 / m as f64;
            p.gains[antenna] * C64::from_polar(1.0, 2.0 * PI * turns)
        })
        .sum()
}

/// Beamformed subchannel gain `Σ_a v_a H_{a,u}[m]`.
pub fn lm_effective_gain(ch: &LmChannelRealization, weights: &[C64], subcarrier: usize, m: usize) -> C64 {
    weights
        .iter()
        .enumerate()
        .map(|(a, v)| v * lm_subchannel_gain(ch, a, subcarrier, m))
        .sum()
}

/// Dense delay-Doppler channel matrix of an LM user for one antenna
/// (pure delay shifts).
pub fn build_lm_matrix(ch: &LmChannelRealization, antenna: usize, n: usize, m: usize) -> DMatrix<C64> {
    let mut h = DMatrix::zeros(n * m, n * m);
    for p in &ch.paths {
        add_shift(&mut h, n, m, 0, p.delay_tap as i64, p.gains[antenna]);
    }
    h
}

/// Per-antenna delay-Doppler eigenvalues of an LM channel, rows are antennas.
pub fn lm_eigen_spectra(ch: &LmChannelRealization, n: usize, m: usize) -> DMatrix<C64> {
    let shifts = ShiftSpectrum::new(n, m);
    let antennas = ch.paths.first().map_or(0, |p| p.gains.len());
    let mut out = DMatrix::zeros(antennas, n * m);
    let mut row = vec![C64::new(0.0, 0.0); n * m];
    for a in 0..antennas {
        row.fill(C64::new(0.0, 0.0));
        for p in &ch.paths {
            shifts.accumulate(0, p.delay_tap as i64, p.gains[a], &mut row);
        }
        for (i, z) in row.iter().enumerate() {
            out[(a, i)] = *z;
        }
    }
    out
}
