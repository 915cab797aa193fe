//! Semi-discrete frames authored in the frequency domain.
//!
//! A frame is a finite list of atoms `f_λ`, each stored as its frequency
//! response `f̂_λ(k)` on the integer frequencies of a grid. On the grid, the
//! analysis energy is exactly
//!
//! ```text
//! Σ_λ ‖f ∗ f_λ‖₂² = Σ_k |f̂(k)|² · Σ_λ |f̂_λ(k)|²
//! ```
//!
//! so the extrema of the Littlewood–Paley sum `Σ_λ |f̂_λ(k)|²` are the
//! optimal frame bounds.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::signal::{Grid, Signal, Spectrum, C64};

/// Lower bounds below `NOT_A_FRAME_RATIO · B` fail certification.
pub const NOT_A_FRAME_RATIO: f64 = 1e-8;

/// Slack allowed when checking an upper bound against one; Parseval banks
/// land at `1 ± O(1e-15)`.
pub const BOUND_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cone {
    Horizontal,
    Vertical,
}

/// Structured index of an atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AtomLabel {
    LowPass,
    Wavelet { scale: u32, direction: u32 },
    Gabor { center: [i64; 2] },
    Shearlet { scale: u32, cone: Cone, shear: u32 },
    /// Free-form label of an imported atom (no whitespace).
    Named(String),
}

impl fmt::Display for AtomLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomLabel::LowPass => write!(f, "lowpass"),
            AtomLabel::Wavelet { scale, direction } => write!(f, "wavelet:{scale}:{direction}"),
            AtomLabel::Gabor { center } => write!(f, "gabor:{}:{}", center[0], center[1]),
            AtomLabel::Shearlet { scale, cone, shear } => {
                let c = match cone {
                    Cone::Horizontal => 'h',
                    Cone::Vertical => 'v',
                };
                write!(f, "shearlet:{scale}:{c}:{shear}")
            }
            AtomLabel::Named(name) => write!(f, "{name}"),
        }
    }
}

impl FromStr for AtomLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() || s.chars().any(char::is_whitespace) {
            return Err(Error::Format(format!("invalid atom label {s:?}")));
        }
        let parts: Vec<&str> = s.split(':').collect();
        let parsed = match parts.as_slice() {
            ["lowpass"] => Some(AtomLabel::LowPass),
            ["wavelet", j, k] => j
                .parse()
                .ok()
                .zip(k.parse().ok())
                .map(|(scale, direction)| AtomLabel::Wavelet { scale, direction }),
            ["gabor", a, b] => a
                .parse()
                .ok()
                .zip(b.parse().ok())
                .map(|(a, b)| AtomLabel::Gabor { center: [a, b] }),
            ["shearlet", j, c, l] => {
                let cone = match *c {
                    "h" => Some(Cone::Horizontal),
                    "v" => Some(Cone::Vertical),
                    _ => None,
                };
                match (j.parse().ok(), cone, l.parse().ok()) {
                    (Some(scale), Some(cone), Some(shear)) => Some(AtomLabel::Shearlet { scale, cone, shear }),
                    _ => None,
                }
            }
            _ => None,
        };
        Ok(parsed.unwrap_or_else(|| AtomLabel::Named(s.to_string())))
    }
}

/// One filter of a frame.
#[derive(Debug, Clone)]
pub struct Atom {
    label: AtomLabel,
    response: Spectrum,
    l1_norm: f64,
}

impl Atom {
    pub fn new(label: AtomLabel, response: Spectrum) -> Self {
        let l1_norm = response.idft().norm_l1();
        Atom { label, response, l1_norm }
    }

    pub fn label(&self) -> &AtomLabel {
        &self.label
    }

    pub fn response(&self) -> &Spectrum {
        &self.response
    }

    /// Space-domain atom `f_λ = idft(f̂_λ)`.
    pub fn spatial(&self) -> Signal {
        self.response.idft()
    }

    /// `‖f_λ‖₁`, the constant in Young's inequality `‖f ∗ f_λ‖₂ ≤ ‖f_λ‖₁‖f‖₂`.
    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    pub fn grid(&self) -> Grid {
        self.response.grid()
    }

    fn rescaled(&self, factors: impl Fn(usize) -> f64) -> Atom {
        let values = self
            .response
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| v * factors(i))
            .collect();
        Atom::new(self.label.clone(), Spectrum::from_raw(self.grid(), values))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
}

impl FrameBounds {
    pub fn is_parseval(&self, tol: f64) -> bool {
        (self.lower - 1.0).abs() <= tol && (self.upper - 1.0).abs() <= tol
    }
}

fn common_grid(atoms: &[Atom]) -> Result<Grid> {
    let first = atoms
        .first()
        .ok_or_else(|| Error::Config("a frame needs at least one atom".into()))?;
    let grid = first.grid();
    for a in &atoms[1..] {
        grid.check_same(&a.grid())?;
    }
    Ok(grid)
}

/// Pointwise `Σ_λ |f̂_λ(k)|²` over the grid frequencies.
pub fn littlewood_paley_sum(atoms: &[Atom]) -> Result<Vec<f64>> {
    let grid = common_grid(atoms)?;
    let mut sum = vec![0.0; grid.len()];
    for atom in atoms {
        for (s, v) in sum.iter_mut().zip(atom.response.values()) {
            *s += v.norm_sqr();
        }
    }
    Ok(sum)
}

/// Certifies frame bounds as the grid extrema of the Littlewood–Paley sum.
pub fn littlewood_paley(atoms: &[Atom]) -> Result<FrameBounds> {
    let sum = littlewood_paley_sum(atoms)?;
    let lower = sum.iter().copied().fold(f64::INFINITY, f64::min);
    let upper = sum.iter().copied().fold(0.0, f64::max);
    if upper <= 0.0 || lower < NOT_A_FRAME_RATIO * upper {
        return Err(Error::NotAFrame { lower, upper });
    }
    Ok(FrameBounds { lower, upper })
}

/// Divides every response by `sqrt(Σ_μ |f̂_μ|²)`, giving a Parseval bank.
pub fn tighten_to_parseval(atoms: &[Atom]) -> Result<Vec<Atom>> {
    littlewood_paley(atoms)?;
    let sum = littlewood_paley_sum(atoms)?;
    let inv: Vec<f64> = sum.iter().map(|s| 1.0 / s.sqrt()).collect();
    Ok(atoms.iter().map(|a| a.rescaled(|i| inv[i])).collect())
}

/// Scales all atoms by `sqrt(target / B)` so the upper bound becomes `target`.
pub fn normalize_to_bound(atoms: &[Atom], target: f64) -> Result<Vec<Atom>> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::Config(format!("normalization target must lie in (0, 1], got {target}")));
    }
    let bounds = littlewood_paley(atoms)?;
    let factor = (target / bounds.upper).sqrt();
    Ok(atoms.iter().map(|a| a.rescaled(|_| factor)).collect())
}

/// A certified semi-discrete frame with a designated output-generating atom.
#[derive(Debug, Clone)]
pub struct SemiDiscreteFrame {
    atoms: Vec<Atom>,
    output_index: usize,
    bounds: FrameBounds,
}

impl SemiDiscreteFrame {
    pub fn new(atoms: Vec<Atom>, output_index: usize) -> Result<Self> {
        if output_index >= atoms.len() {
            return Err(Error::Config(format!(
                "output index {output_index} out of range for {} atoms",
                atoms.len()
            )));
        }
        let bounds = littlewood_paley(&atoms)?;
        Ok(SemiDiscreteFrame { atoms, output_index, bounds })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn grid(&self) -> Grid {
        self.atoms[0].grid()
    }

    pub fn output_index(&self) -> usize {
        self.output_index
    }

    /// The output-generating atom φ.
    pub fn output_atom(&self) -> &Atom {
        &self.atoms[self.output_index]
    }

    /// Indices of all atoms except φ, in storage order.
    pub fn propagating_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.atoms.len()).filter(move |&i| i != self.output_index)
    }

    pub fn bounds(&self) -> FrameBounds {
        self.bounds
    }

    /// Re-designates φ; any atom may serve as the output generator.
    pub fn with_output_index(self, output_index: usize) -> Result<Self> {
        SemiDiscreteFrame::new(self.atoms, output_index)
    }

    pub fn tightened(&self) -> Result<Self> {
        SemiDiscreteFrame::new(tighten_to_parseval(&self.atoms)?, self.output_index)
    }

    pub fn normalized(&self, target: f64) -> Result<Self> {
        SemiDiscreteFrame::new(normalize_to_bound(&self.atoms, target)?, self.output_index)
    }

    /// Uniform gain on every response; bounds scale by `gain²`.
    pub fn scaled(&self, gain: f64) -> Result<Self> {
        let atoms = self.atoms.iter().map(|a| a.rescaled(|_| gain)).collect();
        SemiDiscreteFrame::new(atoms, self.output_index)
    }

    /// `{f ∗ f_λ}` for every atom, φ included, in storage order.
    pub fn analyze(&self, f: &Signal) -> Result<Vec<Signal>> {
        self.grid().check_same(&f.grid())?;
        let spectrum = f.dft();
        self.atoms
            .par_iter()
            .map(|a| spectrum.filter(a.response()))
            .collect()
    }

    /// `S f = idft((Σ_λ |f̂_λ|²) · f̂)`.
    pub fn frame_operator(&self, f: &Signal) -> Result<Signal> {
        self.grid().check_same(&f.grid())?;
        let sum = littlewood_paley_sum(&self.atoms)?;
        let lp = Spectrum::from_raw(self.grid(), sum.into_iter().map(|s| C64::new(s, 0.0)).collect());
        f.dft().filter(&lp)
    }
}

pub fn analyze(frame: &SemiDiscreteFrame, f: &Signal) -> Result<Vec<Signal>> {
    frame.analyze(f)
}

pub fn frame_operator(frame: &SemiDiscreteFrame, f: &Signal) -> Result<Signal> {
    frame.frame_operator(f)
}

/// Per-layer frames. Layers past the end reuse the last frame.
#[derive(Debug, Clone)]
pub struct FrameCollection {
    layers: Vec<Arc<SemiDiscreteFrame>>,
    bounds: FrameBounds,
}

impl FrameCollection {
    pub fn new(layers: Vec<Arc<SemiDiscreteFrame>>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::Config("a frame collection needs at least one layer".into()))?;
        let grid = first.grid();
        for l in &layers[1..] {
            grid.check_same(&l.grid())?;
        }
        let lower = layers.iter().map(|l| l.bounds().lower).fold(f64::INFINITY, f64::min);
        let upper = layers.iter().map(|l| l.bounds().upper).fold(0.0, f64::max);
        Ok(FrameCollection {
            layers,
            bounds: FrameBounds { lower, upper },
        })
    }

    /// The same frame in every layer.
    pub fn uniform(frame: SemiDiscreteFrame) -> Self {
        FrameCollection::new(vec![Arc::new(frame)]).expect("single layer is always valid")
    }

    pub fn grid(&self) -> Grid {
        self.layers[0].grid()
    }

    /// Frame of network layer `depth + 1` (zero-based `depth`).
    pub fn layer(&self, depth: usize) -> &SemiDiscreteFrame {
        &self.layers[depth.min(self.layers.len() - 1)]
    }

    pub fn layers(&self) -> &[Arc<SemiDiscreteFrame>] {
        &self.layers
    }

    /// `A = inf A_n`, `B = sup B_n`.
    pub fn bounds(&self) -> FrameBounds {
        self.bounds
    }

    /// Rescales every layer whose upper bound exceeds `target`.
    pub fn normalized(&self, target: f64) -> Result<Self> {
        let layers = self
            .layers
            .iter()
            .map(|l| {
                if l.bounds().upper > target {
                    l.normalized(target).map(Arc::new)
                } else {
                    Ok(Arc::clone(l))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        FrameCollection::new(layers)
    }
}

/// Meyer's auxiliary polynomial: `ν(t) + ν(1 - t) = 1` on `[0, 1]`.
fn meyer_nu(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t.powi(4) * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t.powi(3))
}

/// Smooth bump of half-width one: `bump(t)² + bump(1 - |t|)² = 1` for `|t| ≤ 1`.
fn bump(t: f64) -> f64 {
    let t = t.abs();
    if t >= 1.0 {
        0.0
    } else {
        (FRAC_PI_2 * meyer_nu(t)).cos()
    }
}

/// Dyadic radial band `j` in `s = log2(r / (n/2))`, centered at `s = -j`.
/// Band 0 stays at one above the Nyquist radius so square corners are covered.
fn radial_band(s: f64, j: u32) -> f64 {
    let t = s + j as f64;
    if j == 0 && t >= 0.0 {
        1.0
    } else {
        bump(t)
    }
}

/// Low-pass complement of bands `0..scales`: one for `s <= -scales`.
fn radial_lowpass(s: f64, scales: u32) -> f64 {
    let t = s + scales as f64;
    if t <= 0.0 {
        1.0
    } else {
        bump(t)
    }
}

fn log_radius(radius: f64, n: usize) -> f64 {
    if radius == 0.0 {
        f64::NEG_INFINITY
    } else {
        (radius / (n as f64 / 2.0)).log2()
    }
}

fn max_scales(grid: Grid) -> u32 {
    grid.n().trailing_zeros() - 1
}

/// Directional wavelet bank: `scales` dyadic radial bands times `directions`
/// angular windows, plus a low-pass φ stored last.
///
/// Atom `(j, k)` is centered at radius `n / 2^{j+1}` (j = 0 is the finest
/// scale) and angle `2πk / K`. The bank is Parseval by construction; the
/// builder still certifies it from the grid.
pub fn build_wavelet_frame(grid: Grid, scales: u32, directions: u32) -> Result<SemiDiscreteFrame> {
    if directions == 0 {
        return Err(Error::Config("wavelet frame needs at least one direction".into()));
    }
    if scales == 0 || scales > max_scales(grid) {
        return Err(Error::Config(format!(
            "wavelet scales must lie in 1..={} for grid {grid}, got {scales}",
            max_scales(grid)
        )));
    }
    let n = grid.n();
    let angular = move |k: [i64; 2], dir: u32| -> f64 {
        if directions == 1 {
            return 1.0;
        }
        let theta = (k[1] as f64).atan2(k[0] as f64).rem_euclid(2.0 * PI);
        let width = 2.0 * PI / directions as f64;
        let center = dir as f64 * width;
        let mut dist = (theta - center).rem_euclid(2.0 * PI);
        if dist > PI {
            dist = 2.0 * PI - dist;
        }
        bump(dist / width)
    };
    let radius = |k: [i64; 2]| ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();

    let mut atoms = Vec::with_capacity((scales * directions + 1) as usize);
    for j in 0..scales {
        for dir in 0..directions {
            let response = Spectrum::from_real_fn(grid, |k| {
                let s = log_radius(radius(k), n);
                radial_band(s, j) * angular(k, dir)
            });
            atoms.push(Atom::new(AtomLabel::Wavelet { scale: j, direction: dir }, response));
        }
    }
    let low = Spectrum::from_real_fn(grid, |k| radial_lowpass(log_radius(radius(k), n), scales));
    atoms.push(Atom::new(AtomLabel::LowPass, low));
    let output = atoms.len() - 1;
    SemiDiscreteFrame::new(atoms, output)
}

/// Values below this are flushed to zero in Gaussian windows.
const GAUSSIAN_FLOOR: f64 = 1e-16;

/// Ratio of Gaussian window width to lattice step.
const GABOR_WIDTH_RATIO: f64 = 1.5;

fn periodized_gaussian(offset: i64, width: f64, n: usize) -> f64 {
    let n = n as f64;
    let images = (3.5 * width / n).ceil() as i64 + 1;
    let value: f64 = (-images..=images)
        .map(|p| {
            let x = (offset as f64 + p as f64 * n) / width;
            (-PI * x * x).exp()
        })
        .sum();
    if value < GAUSSIAN_FLOOR {
        0.0
    } else {
        value
    }
}

/// Gaussian windows centered on the frequency lattice `step·ℤᵈ`, with φ the
/// window at the origin. Not tight: the Littlewood–Paley sum ripples.
pub fn build_gabor_frame(grid: Grid, step: usize) -> Result<SemiDiscreteFrame> {
    let n = grid.n();
    if step == 0 || step > n || !n.is_multiple_of(step) {
        return Err(Error::Config(format!(
            "Gabor frequency step must divide {n} and lie in 1..={n}, got {step}"
        )));
    }
    let width = GABOR_WIDTH_RATIO * step as f64;
    let per_axis = (n / step) as i64;
    let half = (n / 2) as i64;
    // Lattice points inside [-n/2, n/2).
    let axis_centers: Vec<i64> = (0..per_axis)
        .map(|m| {
            let c = m * step as i64;
            if c >= half {
                c - n as i64
            } else {
                c
            }
        })
        .collect();
    let centers: Vec<[i64; 2]> = if grid.dim() == 1 {
        axis_centers.iter().map(|&c| [c, 0]).collect()
    } else {
        axis_centers
            .iter()
            .flat_map(|&a| axis_centers.iter().map(move |&b| [a, b]))
            .collect()
    };
    let wrap = |d: i64| -> i64 {
        let m = d.rem_euclid(n as i64);
        if m >= half {
            m - n as i64
        } else {
            m
        }
    };
    let atoms: Vec<Atom> = centers
        .iter()
        .map(|&c| {
            let response = Spectrum::from_real_fn(grid, |k| {
                let mut v = periodized_gaussian(wrap(k[0] - c[0]), width, n);
                if grid.dim() == 2 {
                    v *= periodized_gaussian(wrap(k[1] - c[1]), width, n);
                }
                v
            });
            Atom::new(AtomLabel::Gabor { center: c }, response)
        })
        .collect();
    let output = centers.iter().position(|&c| c == [0, 0]).expect("lattice contains the origin");
    SemiDiscreteFrame::new(atoms, output)
}

/// Number of shears per cone at scale `j` (0 = coarsest): doubles per scale.
pub fn shear_count(shears_per_scale: u32, scale: u32) -> u32 {
    shears_per_scale << scale
}

/// Cone-adapted shearlet-style bank on a `d = 2` grid.
///
/// Coronae are dyadic in the ℓ∞ radius `max(|k₀|, |k₁|)`, with a low-pass
/// square at the center. Each corona is split into a horizontal cone
/// (`|k₁| ≤ |k₀|`, slope `k₁/k₀`) and a vertical cone (slope `k₀/k₁`), and
/// each cone into `shear_count(shears_per_scale, j)` slope windows. Windows
/// next to a cone boundary overlap into the neighbouring cone so the tiling
/// stays smooth across the diagonals.
pub fn build_shearlet_frame(grid: Grid, scales: u32, shears_per_scale: u32) -> Result<SemiDiscreteFrame> {
    if grid.dim() != 2 {
        return Err(Error::Config("shearlet frames require a two-dimensional grid".into()));
    }
    if scales == 0 || scales > max_scales(grid) {
        return Err(Error::Config(format!(
            "shearlet scales must lie in 1..={} for grid {grid}, got {scales}",
            max_scales(grid)
        )));
    }
    if shears_per_scale == 0 {
        return Err(Error::Config("shearlet frame needs at least one shear per scale".into()));
    }
    let n = grid.n();
    let linf = |k: [i64; 2]| k[0].abs().max(k[1].abs()) as f64;
    // Slope coordinate on a period of 4: horizontal cone in [-1, 1],
    // vertical cone in [1, 3].
    let slope = |k: [i64; 2]| -> f64 {
        let (a, b) = (k[0] as f64, k[1] as f64);
        if b.abs() <= a.abs() {
            b / a
        } else {
            2.0 - a / b
        }
    };

    let mut atoms = Vec::new();
    for j in 0..scales {
        let per_cone = shear_count(shears_per_scale, j);
        let spacing = 2.0 / per_cone as f64;
        let band = scales - 1 - j;
        for window in 0..2 * per_cone {
            let center = -1.0 + (window as f64 + 0.5) * spacing;
            let (cone, shear) = if window < per_cone {
                (Cone::Horizontal, window)
            } else {
                (Cone::Vertical, window - per_cone)
            };
            let response = Spectrum::from_real_fn(grid, |k| {
                if k == [0, 0] {
                    return 0.0;
                }
                let radial = radial_band(log_radius(linf(k), n), band);
                if radial == 0.0 {
                    return 0.0;
                }
                let mut dist = (slope(k) - center).rem_euclid(4.0);
                if dist > 2.0 {
                    dist = 4.0 - dist;
                }
                radial * bump(dist / spacing)
            });
            atoms.push(Atom::new(AtomLabel::Shearlet { scale: j, cone, shear }, response));
        }
    }
    let low = Spectrum::from_real_fn(grid, |k| radial_lowpass(log_radius(linf(k), n), scales));
    atoms.push(Atom::new(AtomLabel::LowPass, low));
    let output = atoms.len() - 1;
    SemiDiscreteFrame::new(atoms, output)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(d: usize, n: usize) -> Grid {
        Grid::new(d, n).unwrap()
    }

    fn random_atoms(g: Grid, count: usize, rng: &mut impl Rng) -> Vec<Atom> {
        (0..count)
            .map(|i| {
                let values = (0..g.len())
                    .map(|_| C64::new(rng.gen_range(0.1..1.0), rng.gen_range(-0.5..0.5)))
                    .collect();
                Atom::new(AtomLabel::Named(format!("r{i}")), Spectrum::new(g, values).unwrap())
            })
            .collect()
    }

    fn random_signal(g: Grid, rng: &mut impl Rng) -> Signal {
        Signal::new(
            g,
            (0..g.len()).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(),
        )
        .unwrap()
    }

    #[test]
    fn meyer_partition() {
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            assert!((meyer_nu(t) + meyer_nu(1.0 - t) - 1.0).abs() < 1e-12);
            assert!((bump(t).powi(2) + bump(1.0 - t).powi(2) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_atom_bounds() {
        let g = grid(1, 16);
        let atom = Atom::new(AtomLabel::LowPass, Spectrum::from_real_fn(g, |_| 1.0));
        let b = littlewood_paley(&[atom]).unwrap();
        assert_eq!((b.lower, b.upper), (1.0, 1.0));
    }

    #[test]
    fn masked_pair_bounds() {
        // |a|² + |b|² is 0.5 on even frequencies and 2 on odd ones.
        let g = grid(1, 16);
        let odd = |k: [i64; 2]| k[0].rem_euclid(2) == 1;
        let a = Spectrum::from_real_fn(g, |k| if odd(k) { 1.0 } else { 0.5f64.sqrt() });
        let b = Spectrum::from_real_fn(g, |k| if odd(k) { 1.0 } else { 0.0 });
        let atoms = vec![
            Atom::new(AtomLabel::Named("a".into()), a),
            Atom::new(AtomLabel::Named("b".into()), b),
        ];
        let oracle = littlewood_paley_sum(&atoms).unwrap();
        let lo = oracle.iter().cloned().fold(f64::MAX, f64::min);
        let hi = oracle.iter().cloned().fold(f64::MIN, f64::max);
        let bounds = littlewood_paley(&atoms).unwrap();
        assert!((bounds.lower - 0.5).abs() < 1e-15 && (lo - 0.5).abs() < 1e-15);
        assert!((bounds.upper - 2.0).abs() < 1e-15 && (hi - 2.0).abs() < 1e-15);
    }

    #[test]
    fn hole_fails_certification() {
        let g = grid(1, 16);
        let hole = Spectrum::from_real_fn(g, |k| if k[0] == 3 { 0.0 } else { 1.0 });
        let err = littlewood_paley(&[Atom::new(AtomLabel::LowPass, hole)]).unwrap_err();
        assert!(matches!(err, Error::NotAFrame { .. }));
        assert!(err.is_hypothesis());
        assert!(tighten_to_parseval(&[]).is_err());
    }

    #[test]
    fn wavelet_bank_structure() {
        let g = grid(1, 256);
        let frame = build_wavelet_frame(g, 5, 1).unwrap();
        assert_eq!(frame.len(), 5 + 1);
        assert_eq!(frame.output_atom().label(), &AtomLabel::LowPass);
        assert!(frame.bounds().is_parseval(1e-12));
        let g2 = grid(2, 64);
        let frame = build_wavelet_frame(g2, 3, 4).unwrap();
        assert_eq!(frame.len(), 4 * 3 + 1);
        for i in frame.propagating_indices() {
            assert_eq!(frame.atoms()[i].response().values()[0], C64::new(0.0, 0.0));
        }
        assert!(frame.bounds().is_parseval(1e-12));
        for a in frame.atoms() {
            assert!(a.l1_norm().is_finite() && a.l1_norm() > 0.0);
        }
    }

    #[test]
    fn wavelet_scales_limited_by_grid() {
        let g = grid(1, 16);
        assert!(build_wavelet_frame(g, 3, 1).is_ok());
        assert!(matches!(build_wavelet_frame(g, 4, 1), Err(Error::Config(_))));
        assert!(build_wavelet_frame(g, 0, 1).is_err());
        assert!(build_wavelet_frame(g, 2, 0).is_err());
    }

    #[test]
    fn gabor_bank_ripples_then_tightens() {
        let g = grid(1, 256);
        let frame = build_gabor_frame(g, 16).unwrap();
        assert_eq!(frame.len(), 16);
        assert_eq!(frame.output_atom().label(), &AtomLabel::Gabor { center: [0, 0] });
        let b = frame.bounds();
        let sum = littlewood_paley_sum(frame.atoms()).unwrap();
        let ratio = sum.iter().cloned().fold(0.0, f64::max) / sum.iter().cloned().fold(f64::MAX, f64::min);
        assert!(ratio > 1.0);
        assert!((b.upper / b.lower - ratio).abs() < 1e-12);
        let tight = frame.tightened().unwrap();
        assert!(tight.bounds().is_parseval(1e-9));
    }

    #[test]
    fn gabor_single_window() {
        let g = grid(1, 32);
        let frame = build_gabor_frame(g, 32).unwrap();
        assert_eq!(frame.len(), 1);
        let b = frame.bounds();
        // A single periodized Gaussian is nearly but not exactly flat.
        assert!(b.upper / b.lower < 1.01);
        assert!(frame.tightened().unwrap().bounds().is_parseval(1e-12));
        assert!(build_gabor_frame(g, 64).is_err());
        assert!(build_gabor_frame(g, 6).is_err());
        assert!(build_gabor_frame(g, 0).is_err());
    }

    #[test]
    fn shearlet_structure() {
        let g = grid(2, 64);
        let frame = build_shearlet_frame(g, 3, 2).unwrap();
        for j in 0..3u32 {
            let count = frame
                .atoms()
                .iter()
                .filter(|a| matches!(a.label(), AtomLabel::Shearlet { scale, cone: Cone::Horizontal, .. } if *scale == j))
                .count();
            assert_eq!(count as u32, shear_count(2, j));
            assert_eq!(shear_count(2, j), 2 << j);
        }
        assert_eq!(frame.len(), 2 * (2 + 4 + 8) + 1);
        let sum = littlewood_paley_sum(frame.atoms()).unwrap();
        assert!(sum.iter().all(|&s| s >= frame.bounds().lower && s > 0.5));
        assert!(frame.tightened().unwrap().bounds().is_parseval(1e-9));
        assert!(build_shearlet_frame(grid(1, 64), 2, 2).is_err());
    }

    #[test]
    fn tightening_random_bank() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = grid(2, 16);
        let atoms = random_atoms(g, 3, &mut rng);
        let tight = tighten_to_parseval(&atoms).unwrap();
        assert!(littlewood_paley(&tight).unwrap().is_parseval(1e-9));
        let again = tighten_to_parseval(&tight).unwrap();
        for (a, b) in tight.iter().zip(&again) {
            for (x, y) in a.response().values().iter().zip(b.response().values()) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn normalize_divides_by_two() {
        let g = grid(1, 64);
        let frame = build_wavelet_frame(g, 3, 1).unwrap();
        let doubled = frame.scaled(2.0).unwrap();
        assert!((doubled.bounds().upper - 4.0).abs() < 1e-12);
        let back = doubled.normalized(1.0).unwrap();
        for (a, b) in back.atoms().iter().zip(frame.atoms()) {
            for (x, y) in a.response().values().iter().zip(b.response().values()) {
                assert!((x - y).norm() < 1e-15);
            }
        }
        assert!(normalize_to_bound(frame.atoms(), 1.5).is_err());
    }

    #[test]
    fn analysis_energy_within_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let g = grid(1, 64);
        let frame = SemiDiscreteFrame::new(random_atoms(g, 4, &mut rng), 0).unwrap();
        let b = frame.bounds();
        for _ in 0..20 {
            let f = random_signal(g, &mut rng);
            let energy: f64 = frame.analyze(&f).unwrap().iter().map(|s| s.norm_l2().powi(2)).sum();
            let e = f.norm_l2().powi(2);
            assert!(energy >= b.lower * e * (1.0 - 1e-9) && energy <= b.upper * e * (1.0 + 1e-9));
        }
        let zero = frame.analyze(&Signal::zeros(g)).unwrap();
        assert!(zero.iter().all(|s| s.norm_l2() == 0.0));
    }

    #[test]
    fn frame_operator_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let g = grid(2, 16);
        let frame = SemiDiscreteFrame::new(random_atoms(g, 3, &mut rng), 1).unwrap();
        let b = frame.bounds();
        let f = random_signal(g, &mut rng);
        let h = random_signal(g, &mut rng);
        let sf = frame.frame_operator(&f).unwrap();
        let sh = frame.frame_operator(&h).unwrap();
        let q = sf.inner(&f).unwrap();
        let e = f.norm_l2().powi(2);
        assert!(q.im.abs() < 1e-10 * e);
        assert!(q.re >= b.lower * e * (1.0 - 1e-9) && q.re <= b.upper * e * (1.0 + 1e-9));
        let lhs = sf.inner(&h).unwrap();
        let rhs = sh.inner(&f).unwrap().conj();
        assert!((lhs - rhs).norm() < 1e-10);

        // Identity iff Parseval, both ways.
        let parseval = frame.tightened().unwrap();
        let id = parseval.frame_operator(&f).unwrap();
        assert!(id.sub(&f).unwrap().norm_l2() < 1e-9 * f.norm_l2());
        assert!(sf.sub(&f).unwrap().norm_l2() > 1e-3 * f.norm_l2());
    }

    #[test]
    fn frame_operator_matches_involution_form() {
        // S f = (Σ f_λ ∗ I f_λ) ∗ f, evaluated with space-domain convolutions.
        use crate::signal::circular_convolve;
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let g = grid(1, 32);
        let frame = SemiDiscreteFrame::new(random_atoms(g, 2, &mut rng), 0).unwrap();
        let f = random_signal(g, &mut rng);
        let mut kernel = Signal::zeros(g);
        for a in frame.atoms() {
            let s = a.spatial();
            kernel = kernel.add(&circular_convolve(&s, &s.involute()).unwrap()).unwrap();
        }
        let direct = circular_convolve(&kernel, &f).unwrap();
        let fast = frame.frame_operator(&f).unwrap();
        assert!(direct.sub(&fast).unwrap().norm_l2() < 1e-10 * f.norm_l2());
    }

    #[test]
    fn collection_cycles_last_frame() {
        let g = grid(1, 64);
        let w = Arc::new(build_wavelet_frame(g, 3, 1).unwrap());
        let gb = Arc::new(build_gabor_frame(g, 8).unwrap());
        let c = FrameCollection::new(vec![w.clone(), gb.clone()]).unwrap();
        assert!(Arc::ptr_eq(&c.layers()[0], &w));
        assert_eq!(c.layer(5).len(), gb.len());
        assert_eq!(c.bounds().upper, w.bounds().upper.max(gb.bounds().upper));
        assert_eq!(c.bounds().lower, w.bounds().lower.min(gb.bounds().lower));
        assert!(c.normalized(1.0).unwrap().bounds().upper <= 1.0 + 1e-12);
        assert!(FrameCollection::new(vec![]).is_err());
        let other = Arc::new(build_wavelet_frame(grid(1, 32), 2, 1).unwrap());
        assert!(FrameCollection::new(vec![w, other]).is_err());
    }

    #[test]
    fn labels_round_trip() {
        let labels = [
            AtomLabel::LowPass,
            AtomLabel::Wavelet { scale: 2, direction: 3 },
            AtomLabel::Gabor { center: [-8, 16] },
            AtomLabel::Shearlet { scale: 1, cone: Cone::Vertical, shear: 3 },
            AtomLabel::Named("custom-7".into()),
        ];
        for l in labels {
            assert_eq!(l.to_string().parse::<AtomLabel>().unwrap(), l);
        }
        assert!("has space".parse::<AtomLabel>().is_err());
    }

    #[test]
    fn output_index_override() {
        let g = grid(1, 64);
        let frame = build_wavelet_frame(g, 3, 1).unwrap().with_output_index(0).unwrap();
        assert_eq!(frame.output_index(), 0);
        assert!(frame.clone().with_output_index(9).is_err());
    }
}
