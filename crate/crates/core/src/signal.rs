//! Signals on the periodic unit torus `[0,1)^d` and their spectra.
//!
//! A signal is sampled at `n^d` points with spacing `h = 1/n`. All integrals
//! use the quadrature weight `h^d`, so `Signal::norm_l2` tracks the continuous
//! L² norm as the grid is refined. Spectra are indexed by integer frequencies
//! and stored in FFT order (flat index `i` along an axis is frequency `i` for
//! `i < n/2`, `i - n` otherwise).
//!
//! With `dft = h^d · FFT` and `idft = IFFT` (unnormalized), Plancherel reads
//! `‖f‖₂ = ‖dft(f)‖₂` and convolution is the pointwise spectral product, with
//! the grid delta (value `n^d` at the origin) as identity.

use std::f64::consts::PI;

pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fft;

/// Sampling lattice of the unit torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    dim: usize,
    n: usize,
}

impl Grid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Config(format!("dimension must be 1 or 2, got {dim}")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "samples per axis must be a power of two >= 4, got {n}"
            )));
        }
        Ok(Grid { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of samples, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Quadrature weight `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Multi-index of a flat position; unused trailing axes are zero.
    #[inline]
    pub fn unravel(&self, flat: usize) -> [usize; 2] {
        if self.dim == 1 {
            [flat, 0]
        } else {
            [flat / self.n, flat % self.n]
        }
    }

    #[inline]
    pub fn ravel(&self, index: [usize; 2]) -> usize {
        if self.dim == 1 {
            index[0]
        } else {
            index[0] * self.n + index[1]
        }
    }

    /// Signed integer frequency for an axis index in FFT order.
    #[inline]
    pub fn axis_frequency(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    #[inline]
    pub fn frequency(&self, flat: usize) -> [i64; 2] {
        let [a, b] = self.unravel(flat);
        if self.dim == 1 {
            [self.axis_frequency(a), 0]
        } else {
            [self.axis_frequency(a), self.axis_frequency(b)]
        }
    }

    /// Spatial coordinates of a sample in `[0,1)^d`.
    #[inline]
    pub fn position(&self, flat: usize) -> [f64; 2] {
        let [a, b] = self.unravel(flat);
        let h = self.spacing();
        [a as f64 * h, b as f64 * h]
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: self.to_string(),
                right: other.to_string(),
            })
        }
    }
}

impl std::fmt::Display for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.dim == 1 {
            write!(f, "{}", self.n)
        } else {
            write!(f, "{}x{}", self.n, self.n)
        }
    }
}

fn check_values(grid: &Grid, values: &[C64]) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::Config(format!(
            "expected {} samples for grid {grid}, got {}",
            grid.len(),
            values.len()
        )));
    }
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Format("non-finite sample".into()));
    }
    Ok(())
}

/// Complex samples of a function on the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    grid: Grid,
    values: Vec<C64>,
}

impl Signal {
    pub fn new(grid: Grid, values: Vec<C64>) -> Result<Self> {
        check_values(&grid, &values)?;
        Ok(Signal { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Signal {
            grid,
            values: vec![C64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Unit-mass impulse at the origin: value `n^d` so that `∫δ = 1`.
    pub fn delta(grid: Grid) -> Self {
        let mut s = Signal::zeros(grid);
        s.values[0] = C64::new(1.0 / grid.cell_volume(), 0.0);
        s
    }

    /// Samples `f` at every grid position.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> C64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.position(i))).collect();
        Signal { grid, values }
    }

    pub fn from_real(grid: Grid, values: &[f64]) -> Result<Self> {
        Signal::new(grid, values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<C64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Signal { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn norm_l2(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn norm_l1(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `⟨f, g⟩ = ∫ f·conj(g)`.
    pub fn inner(&self, other: &Signal) -> Result<C64> {
        self.grid.check_same(&other.grid)?;
        let sum: C64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(sum * self.grid.cell_volume())
    }

    pub fn sub(&self, other: &Signal) -> Result<Signal> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Signal) -> Result<Signal> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, factor: C64) -> Signal {
        self.map(|v| v * factor)
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Signal {
        Signal {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip_with(&self, other: &Signal, f: impl Fn(C64, C64) -> C64) -> Result<Signal> {
        self.grid.check_same(&other.grid)?;
        Ok(Signal {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// Pointwise modulus, re-embedded as real nonnegative complex values.
    pub fn modulus(&self) -> Signal {
        self.map(|v| C64::new(v.norm(), 0.0))
    }

    /// Sample-count shift: `(T_t f)[x] = f[x - t]`.
    pub fn translate(&self, shift: &[i64]) -> Signal {
        let n = self.grid.n as i64;
        let wrap = |i: usize, t: i64| ((i as i64 - t).rem_euclid(n)) as usize;
        let t0 = shift.first().copied().unwrap_or(0);
        let t1 = shift.get(1).copied().unwrap_or(0);
        let values = (0..self.grid.len())
            .map(|flat| {
                let [a, b] = self.grid.unravel(flat);
                let src = if self.grid.dim == 1 {
                    [wrap(a, t0), 0]
                } else {
                    [wrap(a, t0), wrap(b, t1)]
                };
                self.values[self.grid.ravel(src)]
            })
            .collect();
        Signal { grid: self.grid, values }
    }

    /// `(M_k f)(x) = e^{2πi⟨x,k⟩} f(x)` for an integer frequency `k`.
    pub fn modulate(&self, frequency: &[i64]) -> Signal {
        let k0 = frequency.first().copied().unwrap_or(0);
        let k1 = frequency.get(1).copied().unwrap_or(0);
        let n = self.grid.n as i64;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(flat, &v)| {
                let [a, b] = self.grid.unravel(flat);
                // Reduce the phase exactly in integers before going to floats.
                let cycles = (a as i64 * k0 + b as i64 * k1).rem_euclid(n);
                let phase = 2.0 * PI * cycles as f64 / n as f64;
                v * C64::from_polar(1.0, phase)
            })
            .collect();
        Signal { grid: self.grid, values }
    }

    /// `(If)(x) = conj(f(-x))`.
    pub fn involute(&self) -> Signal {
        let n = self.grid.n;
        let values = (0..self.grid.len())
            .map(|flat| {
                let [a, b] = self.grid.unravel(flat);
                let src = self.grid.ravel([(n - a) % n, (n - b) % n]);
                self.values[src].conj()
            })
            .collect();
        Signal { grid: self.grid, values }
    }

    pub fn dft(&self) -> Spectrum {
        dft(self)
    }
}

/// Samples of a Fourier transform at the integer frequencies of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    values: Vec<C64>,
}

impl Spectrum {
    pub fn new(grid: Grid, values: Vec<C64>) -> Result<Self> {
        check_values(&grid, &values)?;
        Ok(Spectrum { grid, values })
    }

    /// Evaluates `f` at every integer frequency of the grid.
    pub fn from_fn(grid: Grid, f: impl Fn([i64; 2]) -> C64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.frequency(i))).collect();
        Spectrum { grid, values }
    }

    pub fn from_real_fn(grid: Grid, f: impl Fn([i64; 2]) -> f64) -> Self {
        Spectrum::from_fn(grid, |k| C64::new(f(k), 0.0))
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<C64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Spectrum { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    /// Plain ℓ² sum over integer frequencies (unit frequency spacing).
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, factor: f64) -> Spectrum {
        Spectrum {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Pointwise product `self · other`.
    pub fn multiply(&self, other: &Spectrum) -> Result<Spectrum> {
        self.grid.check_same(&other.grid)?;
        Ok(Spectrum {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        })
    }

    /// Inverse transform of `self · response`, fused into one buffer.
    pub fn filter(&self, response: &Spectrum) -> Result<Signal> {
        self.grid.check_same(&response.grid)?;
        let mut buf: Vec<C64> = self.values.iter().zip(&response.values).map(|(a, b)| a * b).collect();
        fft::inverse(self.grid, &mut buf);
        Ok(Signal::from_raw(self.grid, buf))
    }

    pub fn idft(&self) -> Signal {
        idft(self)
    }
}

pub fn dft(f: &Signal) -> Spectrum {
    let mut buf = f.values.clone();
    fft::forward(f.grid, &mut buf);
    let w = f.grid.cell_volume();
    for v in &mut buf {
        *v *= w;
    }
    Spectrum::from_raw(f.grid, buf)
}

pub fn idft(spectrum: &Spectrum) -> Signal {
    let mut buf = spectrum.values.clone();
    fft::inverse(spectrum.grid, &mut buf);
    Signal::from_raw(spectrum.grid, buf)
}

/// Periodic convolution `(f ∗ g)(y) = ∫ f(x) g(y - x) dx`.
pub fn circular_convolve(f: &Signal, g: &Signal) -> Result<Signal> {
    f.grid.check_same(&g.grid)?;
    dft(f).filter(&dft(g))
}

/// Convolution with a filter given by its frequency response.
pub fn filter(f: &Signal, response: &Spectrum) -> Result<Signal> {
    f.grid.check_same(&response.grid)?;
    dft(f).filter(response)
}

/// `|||s||| = (Σ ‖f_q‖₂²)^{1/2}` over any collection of members.
pub fn feature_norm<'a>(members: impl IntoIterator<Item = &'a Signal>) -> f64 {
    members
        .into_iter()
        .map(|s| s.norm_l2().powi(2))
        .sum::<f64>()
        .sqrt()
}
