//! Delay-Doppler and time-frequency grids, the `k + N·l` vectorization and
//! the Kronecker-DFT basis that diagonalizes block-circulant channel matrices.
//!
//! Grids are `N × M`: rows are Doppler bins `k` (or time slots `n`), columns
//! are delay bins `l` (or subcarriers `m`). Vectorization stacks the Doppler
//! index fastest, so the vector is made of `M` blocks of length `N`, one per
//! delay bin. A cyclic shift in `(k, l)` is therefore block-circulant with
//! circulant `N × N` blocks, and the basis that diagonalizes it is
//! `F_M ⊗ F_N` in the standard Kronecker convention (the outer factor acts on
//! the block index `l`). Spectral index `i = a + N·b` pairs Doppler frequency
//! `a` with delay frequency `b`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::C64;

/// Relative off-diagonal tolerance used by [`diagonalize_bccb`].
pub const BCCB_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
struct Grid {
    n: usize,
    m: usize,
    data: Vec<C64>,
}

impl Grid {
    fn new(n: usize, m: usize, data: Vec<C64>) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidArgument("grid dimensions must be positive".into()));
        }
        if data.len() != n * m {
            return Err(Error::DimensionMismatch {
                expected: n * m,
                found: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("grid entries must be finite".into()));
        }
        Ok(Grid { n, m, data })
    }
}

macro_rules! grid_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(Grid);

        impl $name {
            /// Builds a grid from row-major data (`data[row * M + col]`).
            pub fn from_row_major(n: usize, m: usize, data: Vec<C64>) -> Result<Self> {
                Grid::new(n, m, data).map($name)
            }

            pub fn zeros(n: usize, m: usize) -> Self {
                assert!(n > 0 && m > 0, "grid dimensions must be positive");
                $name(Grid { n, m, data: vec![C64::new(0.0, 0.0); n * m] })
            }

            pub fn from_fn(n: usize, m: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
                let mut g = Self::zeros(n, m);
                for r in 0..n {
                    for c in 0..m {
                        g.0.data[r * m + c] = f(r, c);
                    }
                }
                g
            }

            pub fn n(&self) -> usize {
                self.0.n
            }

            pub fn m(&self) -> usize {
                self.0.m
            }

            pub fn get(&self, row: usize, col: usize) -> C64 {
                self.0.data[row * self.0.m + col]
            }

            pub fn set(&mut self, row: usize, col: usize, value: C64) {
                self.0.data[row * self.0.m + col] = value;
            }

            pub fn as_row_major(&self) -> &[C64] {
                &self.0.data
            }

            /// Largest entrywise modulus of `self - other`.
            pub fn max_abs_diff(&self, other: &Self) -> f64 {
                assert_eq!((self.n(), self.m()), (other.n(), other.m()));
                self.0
                    .data
                    .iter()
                    .zip(&other.0.data)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max)
            }
        }
    };
}

grid_type!(
    /// Delay-Doppler grid, rows indexed by Doppler bin `k`, columns by delay bin `l`.
    DDGrid
);
grid_type!(
    /// Time-frequency grid, rows indexed by time slot `n`, columns by subcarrier `m`.
    TFGrid
);

/// Vector form of a delay-Doppler grid: element `k + N·l` holds grid entry `(k, l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DDVector {
    n: usize,
    m: usize,
    data: Vec<C64>,
}

impl DDVector {
    pub fn new(n: usize, m: usize, data: Vec<C64>) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidArgument("grid dimensions must be positive".into()));
        }
        if data.len() != n * m {
            return Err(Error::DimensionMismatch {
                expected: n * m,
                found: data.len(),
            });
        }
        Ok(DDVector { n, m, data })
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        DDVector {
            n,
            m,
            data: vec![C64::new(0.0, 0.0); n * m],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    /// Mean of `|x_i|^2`.
    pub fn mean_power(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.data.len() as f64
    }
}

/// Index of grid entry `(k, l)` in the vectorized form.
#[inline]
pub fn vec_index(k: usize, l: usize, n: usize) -> usize {
    k + n * l
}

pub fn vectorize(grid: &DDGrid) -> DDVector {
    let (n, m) = (grid.n(), grid.m());
    let mut data = vec![C64::new(0.0, 0.0); n * m];
    for k in 0..n {
        for l in 0..m {
            data[vec_index(k, l, n)] = grid.get(k, l);
        }
    }
    DDVector { n, m, data }
}

pub fn devectorize(vec: &DDVector) -> Result<DDGrid> {
    let (n, m) = (vec.n, vec.m);
    if vec.data.len() != n * m {
        return Err(Error::DimensionMismatch {
            expected: n * m,
            found: vec.data.len(),
        });
    }
    Ok(DDGrid::from_fn(n, m, |k, l| vec.data[vec_index(k, l, n)]))
}

fn unit_phase(turns: f64) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * turns)
}

/// Inverse symplectic finite Fourier transform, delay-Doppler to time-frequency:
///
/// `tf[n,m] = 1/(NM) Σ_{k,l} dd[k,l] · exp(j2π(kn/N − ml/M))`.
///
/// The `1/(NM)` factor makes this non-unitary; [`sfft`] undoes it exactly.
pub fn isfft(dd: &DDGrid) -> TFGrid {
    let (n, m) = (dd.n(), dd.m());
    let mut data = dd.as_row_major().to_vec();
    // Doppler axis with e^{+j}, delay axis with e^{-j}
    fft_axes(&mut data, n, m, FftDirection::Inverse, FftDirection::Forward);
    let scale = 1.0 / (n * m) as f64;
    for z in &mut data {
        *z *= scale;
    }
    TFGrid::from_row_major(n, m, data).expect("shape preserved")
}

/// Forward symplectic finite Fourier transform; exact inverse of [`isfft`].
pub fn sfft(tf: &TFGrid) -> DDGrid {
    let (n, m) = (tf.n(), tf.m());
    let mut data = tf.as_row_major().to_vec();
    fft_axes(&mut data, n, m, FftDirection::Forward, FftDirection::Inverse);
    DDGrid::from_row_major(n, m, data).expect("shape preserved")
}

/// Unnormalized 1-D FFTs along the columns (length `n`) and then the rows
/// (length `m`) of a row-major `n × m` buffer.
fn fft_axes(data: &mut [C64], n: usize, m: usize, along_n: FftDirection, along_m: FftDirection) {
    let mut planner = FftPlanner::<f64>::new();
    let col_fft = planner.plan_fft(n, along_n);
    let mut column = vec![C64::new(0.0, 0.0); n];
    for c in 0..m {
        for (r, z) in column.iter_mut().enumerate() {
            *z = data[r * m + c];
        }
        col_fft.process(&mut column);
        for (r, z) in column.iter().enumerate() {
            data[r * m + c] = *z;
        }
    }
    // rows are contiguous, so one batched call covers them all
    planner.plan_fft(m, along_m).process(data);
}

/// Unitary `size`-point DFT matrix, `F[a, k] = exp(−j2π·ak/size) / √size`.
pub fn unitary_dft(size: usize) -> DMatrix<C64> {
    let scale = 1.0 / (size as f64).sqrt();
    DMatrix::from_fn(size, size, |a, k| {
        unit_phase(-(((a * k) % size) as f64) / size as f64) * scale
    })
}

/// Dense unitary basis diagonalizing every block-circulant matrix with
/// circulant blocks under the `k + N·l` vectorization.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    n: usize,
    m: usize,
    psi: DMatrix<C64>,
}

impl SpectralBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn psi(&self) -> &DMatrix<C64> {
        &self.psi
    }

    /// `Ψ H Ψ^H`.
    pub fn transform(&self, h: &DMatrix<C64>) -> DMatrix<C64> {
        &self.psi * h * self.psi.adjoint()
    }

    /// `Ψ^H D Ψ` for a diagonal `D` given by its entries.
    pub fn synthesize(&self, diag: &[C64]) -> DMatrix<C64> {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag));
        self.psi.adjoint() * d * &self.psi
    }
}

pub fn build_basis(n: usize, m: usize) -> Result<SpectralBasis> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument("basis dimensions must be positive".into()));
    }
    let psi = unitary_dft(m).kronecker(&unitary_dft(n));
    Ok(SpectralBasis { n, m, psi })
}

/// Returns `diag(Ψ H Ψ^H)` after checking that the off-diagonal part is
/// negligible (at most [`BCCB_TOLERANCE`] times the largest diagonal modulus).
pub fn diagonalize_bccb(h: &DMatrix<C64>, basis: &SpectralBasis) -> Result<Vec<C64>> {
    let size = basis.n * basis.m;
    if h.nrows() != size || h.ncols() != size {
        return Err(Error::DimensionMismatch {
            expected: size,
            found: h.nrows().max(h.ncols()),
        });
    }
    let d = basis.transform(h);
    let diag: Vec<C64> = (0..size).map(|i| d[(i, i)]).collect();
    let max_diag = diag.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut residual: f64 = 0.0;
    for c in 0..size {
        for r in 0..size {
            if r != c {
                residual = residual.max(d[(r, c)].norm());
            }
        }
    }
    let limit = BCCB_TOLERANCE * max_diag;
    if residual > limit {
        return Err(Error::NotBlockCirculant { residual, limit });
    }
    Ok(diag)
}

/// Closed-form eigenvalues of cyclic `(Doppler, delay)` shift operators on
/// an `N × M` grid.
///
/// The operator `y[k, l] = x[(k − s_k) mod N, (l − s_l) mod M]` has eigenvalue
/// `exp(−j2π(a·s_k/N + b·s_l/M))` at spectral index `i = a + N·b`.
#[derive(Debug, Clone)]
pub struct ShiftSpectrum {
    n: usize,
    m: usize,
    doppler: Vec<C64>,
    delay: Vec<C64>,
}

impl ShiftSpectrum {
    pub fn new(n: usize, m: usize) -> Self {
        let doppler = (0..n).map(|t| unit_phase(-(t as f64) / n as f64)).collect();
        let delay = (0..m).map(|t| unit_phase(-(t as f64) / m as f64)).collect();
        ShiftSpectrum { n, m, doppler, delay }
    }

    pub fn len(&self) -> usize {
        self.n * self.m
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Adds `coeff · eig(shift)` into `out` for every spectral index.
    pub fn accumulate(&self, doppler_shift: i64, delay_shift: i64, coeff: C64, out: &mut [C64]) {
        debug_assert_eq!(out.len(), self.len());
        let sk = doppler_shift.rem_euclid(self.n as i64) as usize;
        let sl = delay_shift.rem_euclid(self.m as i64) as usize;
        for b in 0..self.m {
            let row = coeff * self.delay[(b * sl) % self.m];
            let block = &mut out[b * self.n..(b + 1) * self.n];
            for (a, slot) in block.iter_mut().enumerate() {
                *slot += row * self.doppler[(a * sk) % self.n];
            }
        }
    }
}
