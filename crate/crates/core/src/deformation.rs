//! Time-frequency deformations `F_{τ,ω} f(x) = e^{2πiω(x)} f(x − τ(x))`.
//!
//! `τ` is measured in domain lengths (the torus has side one) and `ω` in
//! cycles. Warping evaluates `f` off-grid by periodic multilinear
//! interpolation; `apply_deformation_trigonometric` evaluates the
//! trigonometric interpolant exactly and serves as the reference.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io::{read_signal, write_signal};
use crate::signal::{Grid, Signal, C64};

/// Grid-sampled displacement `τ` and phase field `ω`, with cached norms.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationField {
    grid: Grid,
    tau: Vec<Vec<f64>>,
    omega: Vec<f64>,
    tau_sup: f64,
    jacobian_sup: f64,
    omega_sup: f64,
}

impl DeformationField {
    /// `tau` holds one sample vector per axis.
    pub fn new(grid: Grid, tau: Vec<Vec<f64>>, omega: Vec<f64>) -> Result<Self> {
        if tau.len() != grid.dim() {
            return Err(Error::Config(format!(
                "τ needs {} components, got {}",
                grid.dim(),
                tau.len()
            )));
        }
        for c in tau.iter().chain(std::iter::once(&omega)) {
            if c.len() != grid.len() {
                return Err(Error::Config(format!("field component has {} samples, expected {}", c.len(), grid.len())));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::Format("non-finite deformation sample".into()));
            }
        }
        let tau_sup = (0..grid.len())
            .map(|i| tau.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let omega_sup = omega.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let mut field = DeformationField {
            grid,
            tau,
            omega,
            tau_sup,
            jacobian_sup: 0.0,
            omega_sup,
        };
        field.jacobian_sup = (0..grid.len())
            .map(|i| {
                let j = field.jacobian(i);
                j.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        Ok(field)
    }

    pub fn identity(grid: Grid) -> Self {
        DeformationField::new(grid, vec![vec![0.0; grid.len()]; grid.dim()], vec![0.0; grid.len()])
            .expect("zero field is valid")
    }

    /// Constant displacement and constant phase.
    pub fn constant(grid: Grid, shift: &[f64], omega: f64) -> Result<Self> {
        if shift.len() != grid.dim() {
            return Err(Error::Config("shift length must equal the grid dimension".into()));
        }
        let tau = shift.iter().map(|&s| vec![s; grid.len()]).collect();
        DeformationField::new(grid, tau, vec![omega; grid.len()])
    }

    /// Samples `τ` and `ω` from closures over positions in `[0,1)^d`.
    pub fn from_fn(grid: Grid, tau: impl Fn([f64; 2]) -> [f64; 2], omega: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let mut comps = vec![Vec::with_capacity(grid.len()); grid.dim()];
        let mut om = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let x = grid.position(i);
            let t = tau(x);
            for (c, comp) in comps.iter_mut().enumerate() {
                comp.push(t[c]);
            }
            om.push(omega(x));
        }
        DeformationField::new(grid, comps, om)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn tau(&self) -> &[Vec<f64>] {
        &self.tau
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// `‖τ‖∞ = sup_x |τ(x)|` (Euclidean length).
    pub fn tau_sup(&self) -> f64 {
        self.tau_sup
    }

    /// `‖Dτ‖∞ = sup_x max_{i,j} |∂τ_i/∂x_j|`.
    pub fn jacobian_sup(&self) -> f64 {
        self.jacobian_sup
    }

    pub fn omega_sup(&self) -> f64 {
        self.omega_sup
    }

    /// Central-difference Jacobian `∂τ_i/∂x_j` at a grid point.
    pub fn jacobian(&self, flat: usize) -> [[f64; 2]; 2] {
        let n = self.grid.n();
        let inv_2h = n as f64 / 2.0;
        let idx = self.grid.unravel(flat);
        let mut out = [[0.0; 2]; 2];
        for axis in 0..self.grid.dim() {
            let mut fwd = idx;
            let mut bwd = idx;
            fwd[axis] = (idx[axis] + 1) % n;
            bwd[axis] = (idx[axis] + n - 1) % n;
            let (f, b) = (self.grid.ravel(fwd), self.grid.ravel(bwd));
            for (comp, row) in out.iter_mut().enumerate().take(self.grid.dim()) {
                row[axis] = (self.tau[comp][f] - self.tau[comp][b]) * inv_2h;
            }
        }
        out
    }

    /// Same field with `τ` multiplied by `factor` and `ω` kept.
    pub fn scale_tau(&self, factor: f64) -> DeformationField {
        let tau = self.tau.iter().map(|c| c.iter().map(|v| v * factor).collect()).collect();
        DeformationField::new(self.grid, tau, self.omega.clone()).expect("scaling keeps samples finite")
    }

    /// The inverse displacement `−τ` with `−ω`.
    pub fn negated(&self) -> DeformationField {
        let tau = self.tau.iter().map(|c| c.iter().map(|v| -v).collect()).collect();
        let omega = self.omega.iter().map(|v| -v).collect();
        DeformationField::new(self.grid, tau, omega).expect("negation keeps samples finite")
    }
}

pub fn jacobian_sup_norm(field: &DeformationField) -> f64 {
    field.jacobian_sup()
}

/// Outcome of the `‖Dτ‖∞ ≤ 1/(2d)` check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    pub jacobian_sup: f64,
    /// `1/(2d)`.
    pub threshold: f64,
    /// Smallest `|det(Id − Dτ(x))|` over the grid.
    pub min_determinant: f64,
    /// `1 − d‖Dτ‖∞`, the guaranteed lower bound on the determinant.
    pub determinant_floor: f64,
    pub admissible: bool,
}

impl Admissibility {
    /// True when the grid determinants respect the guaranteed floor.
    pub fn determinant_ok(&self) -> bool {
        self.min_determinant >= self.determinant_floor - 1e-12
    }
}

pub fn check_admissible(field: &DeformationField) -> Admissibility {
    let d = field.grid.dim();
    let threshold = 1.0 / (2.0 * d as f64);
    let min_determinant = (0..field.grid.len())
        .map(|i| {
            let j = field.jacobian(i);
            if d == 1 {
                (1.0 - j[0][0]).abs()
            } else {
                ((1.0 - j[0][0]) * (1.0 - j[1][1]) - j[0][1] * j[1][0]).abs()
            }
        })
        .fold(f64::INFINITY, f64::min);
    let jacobian_sup = field.jacobian_sup;
    Admissibility {
        jacobian_sup,
        threshold,
        min_determinant,
        determinant_floor: 1.0 - d as f64 * jacobian_sup,
        admissible: jacobian_sup <= threshold,
    }
}

pub(crate) fn require_admissible(field: &DeformationField) -> Result<Admissibility> {
    let verdict = check_admissible(field);
    if !verdict.admissible {
        return Err(Error::Hypothesis(format!(
            "‖Dτ‖∞ = {:.6} exceeds 1/(2d) = {:.6}",
            verdict.jacobian_sup, verdict.threshold
        )));
    }
    Ok(verdict)
}

/// `F_{τ,ω} f` with periodic multilinear interpolation of `f` at `x − τ(x)`.
pub fn apply_deformation(f: &Signal, field: &DeformationField) -> Result<Signal> {
    let grid = f.grid();
    grid.check_same(&field.grid)?;
    let n = grid.n();
    let nf = n as f64;
    let values = f.values();
    let split = |p: f64| -> (usize, usize, f64) {
        let fl = p.floor();
        let base = (fl as i64).rem_euclid(n as i64) as usize;
        (base, (base + 1) % n, p - fl)
    };
    let out = (0..grid.len())
        .map(|flat| {
            let idx = grid.unravel(flat);
            let phase = C64::from_polar(1.0, 2.0 * PI * field.omega[flat]);
            // Source position in sample units; exact for integer-sample shifts.
            let sample = if grid.dim() == 1 {
                let (a0, a1, w) = split(idx[0] as f64 - field.tau[0][flat] * nf);
                values[a0] * (1.0 - w) + values[a1] * w
            } else {
                let (a0, a1, wa) = split(idx[0] as f64 - field.tau[0][flat] * nf);
                let (b0, b1, wb) = split(idx[1] as f64 - field.tau[1][flat] * nf);
                let at = |a: usize, b: usize| values[a * n + b];
                (at(a0, b0) * (1.0 - wb) + at(a0, b1) * wb) * (1.0 - wa)
                    + (at(a1, b0) * (1.0 - wb) + at(a1, b1) * wb) * wa
            };
            phase * sample
        })
        .collect();
    Signal::new(grid, out)
}

/// Reference `F_{τ,ω} f` evaluating the trigonometric interpolant of `f`
/// exactly at `x − τ(x)`. Spectral coefficients below `1e-14·max|f̂|` are
/// skipped, so this is fast for band-limited `f`.
pub fn apply_deformation_trigonometric(f: &Signal, field: &DeformationField) -> Result<Signal> {
    let grid = f.grid();
    grid.check_same(&field.grid)?;
    let spectrum = f.dft();
    let peak = spectrum.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    let terms: Vec<([i64; 2], C64)> = spectrum
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > 1e-14 * peak)
        .map(|(i, &v)| (grid.frequency(i), v))
        .collect();
    let reach = terms
        .iter()
        .map(|(k, _)| k[0].abs().max(k[1].abs()))
        .max()
        .unwrap_or(0) as usize;
    let powers = |y: f64| -> Vec<C64> {
        // e^{2πi k y} for k = -reach..=reach.
        (0..=2 * reach)
            .map(|i| C64::from_polar(1.0, 2.0 * PI * (i as f64 - reach as f64) * y))
            .collect()
    };
    let out = (0..grid.len())
        .map(|flat| {
            let x = grid.position(flat);
            let a = powers(x[0] - field.tau[0][flat]);
            let b = if grid.dim() == 2 {
                powers(x[1] - field.tau[1][flat])
            } else {
                Vec::new()
            };
            let sum: C64 = terms
                .iter()
                .map(|(k, v)| {
                    let mut e = a[(k[0] + reach as i64) as usize];
                    if grid.dim() == 2 {
                        e *= b[(k[1] + reach as i64) as usize];
                    }
                    v * e
                })
                .sum();
            sum * C64::from_polar(1.0, 2.0 * PI * field.omega[flat])
        })
        .collect();
    Signal::new(grid, out)
}

/// Allowed relative excess over `2‖f‖₂²` caused by interpolation.
pub const ENERGY_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyVerdict {
    /// `‖F f‖₂² / ‖f‖₂²` (zero for `f = 0`).
    pub ratio: f64,
    pub pass: bool,
}

/// Checks `‖F_{τ,ω} f‖₂² ≤ 2‖f‖₂²` for an admissible field.
pub fn deformed_energy_bound(f: &Signal, field: &DeformationField) -> Result<EnergyVerdict> {
    require_admissible(field)?;
    let energy = f.norm_l2().powi(2);
    let deformed = apply_deformation(f, field)?.norm_l2().powi(2);
    let ratio = if energy == 0.0 { 0.0 } else { deformed / energy };
    Ok(EnergyVerdict {
        ratio,
        pass: deformed <= (2.0 + ENERGY_TOLERANCE) * energy,
    })
}

/// Target norms for generated fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldTargets {
    pub jacobian_sup: f64,
    /// Optional cap on `‖τ‖∞`; the amplitude is reduced if it would be exceeded.
    pub tau_sup: Option<f64>,
    pub omega_sup: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Wave {
    freq: [i64; 2],
    amplitude: f64,
    phase: f64,
}

impl Wave {
    fn value(&self, x: [f64; 2]) -> f64 {
        (2.0 * PI * (self.freq[0] as f64 * x[0] + self.freq[1] as f64 * x[1]) + self.phase).sin() * self.amplitude
    }

    fn derivative(&self, x: [f64; 2], axis: usize) -> f64 {
        let arg = 2.0 * PI * (self.freq[0] as f64 * x[0] + self.freq[1] as f64 * x[1]) + self.phase;
        arg.cos() * self.amplitude * 2.0 * PI * self.freq[axis] as f64
    }
}

/// Continuous periodic field made of a few low-frequency sinusoids; can be
/// sampled on any grid, so the same deformation is available at several
/// resolutions.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothField {
    dim: usize,
    seed: u64,
    targets: FieldTargets,
    tau: Vec<Vec<Wave>>,
    omega: Vec<Wave>,
}

const WAVES_PER_COMPONENT: usize = 3;
const MAX_WAVE_FREQUENCY: i64 = 2;

fn reference_positions(dim: usize) -> Vec<[f64; 2]> {
    if dim == 1 {
        let m = 4096;
        (0..m).map(|i| [i as f64 / m as f64, 0.0]).collect()
    } else {
        let m = 512;
        (0..m * m)
            .map(|i| [(i / m) as f64 / m as f64, (i % m) as f64 / m as f64])
            .collect()
    }
}

impl SmoothField {
    /// Draws a seeded field whose Jacobian and phase sup norms match the
    /// targets (measured on a dense reference sampling).
    ///
    /// Requests with `‖Dτ‖∞ > 1/(2d)` are refused: the determinant bound
    /// `|det(Id − Dτ)| ≥ 1/2` needs the `1/(2d)` threshold, not `1/2`.
    pub fn generate(dim: usize, seed: u64, targets: FieldTargets) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Config(format!("dimension must be 1 or 2, got {dim}")));
        }
        let negative = targets.jacobian_sup < 0.0
            || targets.omega_sup < 0.0
            || targets.tau_sup.is_some_and(|t| t < 0.0);
        if negative || !targets.jacobian_sup.is_finite() || !targets.omega_sup.is_finite() {
            return Err(Error::Config("deformation targets must be finite and nonnegative".into()));
        }
        let threshold = 1.0 / (2.0 * dim as f64);
        if targets.jacobian_sup > threshold {
            return Err(Error::Hypothesis(format!(
                "requested ‖Dτ‖∞ = {} exceeds 1/(2d) = {threshold}; the determinant bound \
                 |det(Id − Dτ)| ≥ 1 − d‖Dτ‖∞ ≥ 1/2 needs ‖Dτ‖∞ ≤ 1/(2d)",
                targets.jacobian_sup
            )));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draw = |rng: &mut ChaCha8Rng| -> Vec<Wave> {
            (0..WAVES_PER_COMPONENT)
                .map(|_| {
                    let freq = loop {
                        let a = rng.gen_range(-MAX_WAVE_FREQUENCY..=MAX_WAVE_FREQUENCY);
                        let b = if dim == 2 {
                            rng.gen_range(-MAX_WAVE_FREQUENCY..=MAX_WAVE_FREQUENCY)
                        } else {
                            0
                        };
                        if a != 0 || b != 0 {
                            break [a, b];
                        }
                    };
                    Wave {
                        freq,
                        amplitude: rng.gen_range(0.5..1.0),
                        phase: rng.gen_range(0.0..2.0 * PI),
                    }
                })
                .collect()
        };
        let mut tau: Vec<Vec<Wave>> = (0..dim).map(|_| draw(&mut rng)).collect();
        let mut omega = draw(&mut rng);

        let positions = reference_positions(dim);
        let (mut jac, mut disp, mut phase) = (0.0f64, 0.0f64, 0.0f64);
        for &x in &positions {
            let mut len2 = 0.0;
            for comp in &tau {
                let v: f64 = comp.iter().map(|w| w.value(x)).sum();
                len2 += v * v;
                for axis in 0..dim {
                    let d: f64 = comp.iter().map(|w| w.derivative(x, axis)).sum();
                    jac = jac.max(d.abs());
                }
            }
            disp = disp.max(len2.sqrt());
            phase = phase.max(omega.iter().map(|w| w.value(x)).sum::<f64>().abs());
        }
        let mut tau_scale = if jac > 0.0 { targets.jacobian_sup / jac } else { 0.0 };
        if let Some(cap) = targets.tau_sup {
            tau_scale = tau_scale.min(cap / disp);
        }
        let omega_scale = if phase > 0.0 { targets.omega_sup / phase } else { 0.0 };
        for w in tau.iter_mut().flatten() {
            w.amplitude *= tau_scale;
        }
        for w in omega.iter_mut() {
            w.amplitude *= omega_scale;
        }
        Ok(SmoothField { dim, seed, targets, tau, omega })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn targets(&self) -> FieldTargets {
        self.targets
    }

    pub fn sample(&self, grid: Grid) -> Result<DeformationField> {
        if grid.dim() != self.dim {
            return Err(Error::Config(format!(
                "field generated for d = {} sampled on a d = {} grid",
                self.dim,
                grid.dim()
            )));
        }
        DeformationField::from_fn(
            grid,
            |x| {
                let mut t = [0.0; 2];
                for (c, comp) in self.tau.iter().enumerate() {
                    t[c] = comp.iter().map(|w| w.value(x)).sum();
                }
                t
            },
            |x| self.omega.iter().map(|w| w.value(x)).sum(),
        )
    }
}

pub const FIELD_MANIFEST: &str = "manifest.txt";

fn component_file(c: usize) -> String {
    format!("tau_{c}.fsct")
}

/// Writes `tau_<c>.fsct` (τ component in the real part), `omega.fsct`, and a
/// manifest with the targets and the measured norms.
pub fn export_field(dir: impl AsRef<Path>, field: &DeformationField, seed: u64, targets: &FieldTargets) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let grid = field.grid();
    for (c, comp) in field.tau().iter().enumerate() {
        write_signal(dir.join(component_file(c)), &Signal::from_real(grid, comp)?)?;
    }
    write_signal(dir.join("omega.fsct"), &Signal::from_real(grid, field.omega())?)?;
    let verdict = check_admissible(field);
    let mut m = String::new();
    writeln!(m, "framescatter-field 1").unwrap();
    writeln!(m, "grid {} {}", grid.dim(), grid.n()).unwrap();
    writeln!(m, "seed {seed}").unwrap();
    let tau_target = targets.tau_sup.map_or("none".to_string(), |t| format!("{t:.17e}"));
    writeln!(
        m,
        "target jacobian_sup {:.17e} tau_sup {tau_target} omega_sup {:.17e}",
        targets.jacobian_sup, targets.omega_sup
    )
    .unwrap();
    writeln!(
        m,
        "measured jacobian_sup {:.17e} tau_sup {:.17e} omega_sup {:.17e}",
        field.jacobian_sup(),
        field.tau_sup(),
        field.omega_sup()
    )
    .unwrap();
    writeln!(
        m,
        "admissible {} min_determinant {:.17e}",
        verdict.admissible, verdict.min_determinant
    )
    .unwrap();
    for c in 0..grid.dim() {
        writeln!(m, "tau {c} {}", component_file(c)).unwrap();
    }
    writeln!(m, "omega omega.fsct").unwrap();
    fs::write(dir.join(FIELD_MANIFEST), m)?;
    Ok(())
}

/// Reads a field written by `export_field`; norms are recomputed.
pub fn import_field(dir: impl AsRef<Path>) -> Result<DeformationField> {
    let dir = dir.as_ref();
    let omega = read_signal(dir.join("omega.fsct"))?;
    let grid = omega.grid();
    let tau = (0..grid.dim())
        .map(|c| {
            let s = read_signal(dir.join(component_file(c)))?;
            grid.check_same(&s.grid())?;
            Ok(s.values().iter().map(|v| v.re).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    DeformationField::new(grid, tau, omega.values().iter().map(|v| v.re).collect())
}
