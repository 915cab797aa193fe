//! Executable checks of the extractor's guarantees: integer-shift
//! invariance, Lipschitz continuity with constant `√B`, and deformation
//! stability on band-limited signals,
//!
//! ```text
//! |||Φ(f) − Φ(F_{τ,ω} f)||| ≤ C·(R‖τ‖∞ + ‖ω‖∞)·‖f‖₂,
//! C = max{2‖∇η‖₁, 4π‖η‖₁},
//! ```
//!
//! where `η` is a mollifier with `η̂ = 1` on the unit ball and the band-limit
//! projector convolves with `γ(x) = R^d η(Rx)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::deformation::{apply_deformation, apply_deformation_trigonometric, require_admissible, DeformationField};
use crate::error::{Error, Result};
use crate::frames::{FrameCollection, BOUND_TOLERANCE};
use crate::io::signal_bytes;
use crate::scattering::{extract_features, feature_distance, ScatterConfig};
use crate::signal::{Grid, Signal, Spectrum, C64};

/// Absolute slack on invariance residuals and Lipschitz inequalities.
pub const EXACT_TOLERANCE: f64 = 1e-9;

/// Relative slack (times `‖f‖₂`) granted to stability verdicts for the
/// interpolated warp.
pub const INTERPOLATION_TOLERANCE: f64 = 1e-3;

/// Smooth step: 0 for `t ≤ 0`, 1 for `t ≥ 1`, C^∞ in between.
fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

/// Radial profile of `η̂`: one on `|ω| ≤ 1`, zero on `|ω| ≥ 2`.
pub fn mollifier_profile(radius: f64) -> f64 {
    1.0 - smooth_step(radius - 1.0)
}

/// Band-limiting mollifier at bandwidth `R` on a grid.
#[derive(Debug, Clone)]
pub struct Mollifier {
    bandwidth: usize,
    gamma_hat: Spectrum,
    gamma: Signal,
    eta_l1: f64,
    eta_grad_l1: f64,
}

impl Mollifier {
    /// Requires `1 ≤ R ≤ n/4` so the transition band `R < |k| < 2R` fits
    /// below Nyquist.
    pub fn new(grid: Grid, bandwidth: usize) -> Result<Self> {
        if bandwidth == 0 || 4 * bandwidth > grid.n() {
            return Err(Error::Config(format!(
                "bandwidth R = {bandwidth} must lie in 1..={} for grid {grid}",
                grid.n() / 4
            )));
        }
        let r = bandwidth as f64;
        let radius = |k: [i64; 2]| ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
        let gamma_hat = Spectrum::from_real_fn(grid, |k| mollifier_profile(radius(k) / r));
        let gamma = gamma_hat.idft();

        // ∂γ/∂x_a = idft(2πi k_a γ̂).
        let partials: Vec<Signal> = (0..grid.dim())
            .map(|axis| {
                Spectrum::from_fn(grid, |k| C64::new(0.0, 2.0 * PI * k[axis] as f64 * mollifier_profile(radius(k) / r)))
                    .idft()
            })
            .collect();
        let grad_l1 = (0..grid.len())
            .map(|i| partials.iter().map(|p| p.values()[i].norm_sqr()).sum::<f64>().sqrt())
            .sum::<f64>()
            * grid.cell_volume();

        // ‖γ‖₁ = ‖η‖₁ and ‖∇γ‖₁ = R‖∇η‖₁ under γ(x) = R^d η(Rx).
        Ok(Mollifier {
            bandwidth,
            eta_l1: gamma.norm_l1(),
            eta_grad_l1: grad_l1 / r,
            gamma_hat,
            gamma,
        })
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn grid(&self) -> Grid {
        self.gamma.grid()
    }

    pub fn gamma(&self) -> &Signal {
        &self.gamma
    }

    pub fn gamma_hat(&self) -> &Spectrum {
        &self.gamma_hat
    }

    /// `‖η‖₁` by grid quadrature.
    pub fn eta_l1(&self) -> f64 {
        self.eta_l1
    }

    /// `‖∇η‖₁` by grid quadrature of the spectral gradient.
    pub fn eta_grad_l1(&self) -> f64 {
        self.eta_grad_l1
    }

    /// `A_γ f = f ∗ γ`.
    pub fn project(&self, f: &Signal) -> Result<Signal> {
        self.grid().check_same(&f.grid())?;
        f.dft().filter(&self.gamma_hat)
    }
}

pub fn bandlimit_project(f: &Signal, bandwidth: usize) -> Result<Signal> {
    Mollifier::new(f.grid(), bandwidth)?.project(f)
}

pub fn stability_constant_from_norms(eta_l1: f64, eta_grad_l1: f64) -> f64 {
    (2.0 * eta_grad_l1).max(4.0 * PI * eta_l1)
}

/// `C = max{2‖∇η‖₁, 4π‖η‖₁}`, independent of the frames and the deformation.
pub fn stability_constant(mollifier: &Mollifier) -> f64 {
    stability_constant_from_norms(mollifier.eta_l1(), mollifier.eta_grad_l1())
}

/// Hex SHA-256 of the signals' raw file bytes, concatenated in order.
pub fn inputs_digest(signals: &[&Signal]) -> String {
    let mut hasher = Sha256::new();
    for s in signals {
        hasher.update(signal_bytes(s));
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn signal_digest(signal: &Signal) -> String {
    inputs_digest(&[signal])
}

/// Seeded white noise with unit L² norm.
pub fn random_signal(grid: Grid, seed: u64) -> Signal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = Signal::from_raw(
        grid,
        (0..grid.len())
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect(),
    );
    let norm = s.norm_l2();
    s.scale(C64::new(1.0 / norm, 0.0))
}

/// Seeded signal with spectrum supported on `|k| < bandwidth`, unit L² norm.
pub fn random_bandlimited(grid: Grid, bandwidth: usize, seed: u64) -> Signal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r2 = (bandwidth * bandwidth) as i64;
    // Draw in a fixed frequency order so the same seed gives the same
    // continuous function on every grid that can represent it.
    let reach = bandwidth as i64;
    let mut coeffs = BTreeMap::new();
    for a in -reach..=reach {
        let bs: Vec<i64> = if grid.dim() == 2 { (-reach..=reach).collect() } else { vec![0] };
        for b in bs {
            if a * a + b * b < r2 {
                coeffs.insert((a, b), C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            }
        }
    }
    let spectrum = Spectrum::from_fn(grid, |k| coeffs.get(&(k[0], k[1])).copied().unwrap_or_default());
    let s = spectrum.idft();
    let norm = s.norm_l2();
    s.scale(C64::new(1.0 / norm, 0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    /// `max_t max_q ‖Φ_q(T_t f) − T_t Φ_q(f)‖₂ / ‖f‖₂`.
    pub max_residual: f64,
    pub per_shift: Vec<f64>,
    pub paths: usize,
    pub pass: bool,
}

/// Compares `Φ(T_t f)` with the entrywise `T_t Φ(f)` for integer shifts,
/// without pruning.
pub fn verify_translation_invariance(
    collection: &FrameCollection,
    f: &Signal,
    shifts: &[Vec<i64>],
    max_depth: usize,
) -> Result<InvarianceReport> {
    let config = ScatterConfig::depth(max_depth);
    let base = extract_features(collection, f, &config)?;
    let scale = f.norm_l2();
    let mut per_shift = Vec::with_capacity(shifts.len());
    for t in shifts {
        let moved = extract_features(collection, &f.translate(t), &config)?;
        let expected = base.translate(t);
        let mut worst = 0.0f64;
        for (path, a) in expected.iter() {
            let b = moved
                .get(path)
                .ok_or_else(|| Error::Misuse(format!("path {path} missing after shift")))?;
            worst = worst.max(a.sub(b)?.norm_l2());
        }
        per_shift.push(if scale > 0.0 { worst / scale } else { worst });
    }
    let max_residual = per_shift.iter().copied().fold(0.0, f64::max);
    Ok(InvarianceReport {
        max_residual,
        per_shift,
        paths: base.len(),
        pass: max_residual <= EXACT_TOLERANCE,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzReport {
    pub upper_bound: f64,
    /// `max |||Φ(f) − Φ(h)||| / (√B‖f − h‖₂)` over pairs with `f ≠ h`.
    pub worst_ratio: f64,
    /// `max |||Φ(f) − Φ(h)||| − √B‖f − h‖₂`.
    pub worst_excess: f64,
    pub pairs: usize,
    pub pass: bool,
}

pub fn verify_lipschitz(collection: &FrameCollection, pairs: &[(Signal, Signal)], max_depth: usize) -> Result<LipschitzReport> {
    let upper = collection.bounds().upper;
    let lipschitz = upper.sqrt();
    let config = ScatterConfig::depth(max_depth);
    let mut worst_ratio = 0.0f64;
    let mut worst_excess = f64::NEG_INFINITY;
    for (f, h) in pairs {
        let distance = feature_distance(
            &extract_features(collection, f, &config)?,
            &extract_features(collection, h, &config)?,
        )?
        .value;
        let allowed = lipschitz * f.sub(h)?.norm_l2();
        if allowed > 0.0 {
            worst_ratio = worst_ratio.max(distance / allowed);
        }
        worst_excess = worst_excess.max(distance - allowed);
    }
    Ok(LipschitzReport {
        upper_bound: upper,
        worst_ratio,
        worst_excess,
        pairs: pairs.len(),
        pass: worst_excess <= EXACT_TOLERANCE,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// `|||Φ(f) − Φ(F_{τ,ω} f)|||` for the projected `f`.
    pub measured: f64,
    /// `C·(R‖τ‖∞ + ‖ω‖∞)·‖f‖₂`.
    pub bound: f64,
    pub constant: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub bandwidth: usize,
    pub tau_sup: f64,
    pub jacobian_sup: f64,
    pub omega_sup: f64,
    pub signal_norm: f64,
    pub max_depth: usize,
    pub unmatched_paths: usize,
}

/// Note attached to stability records about the form of `C`.
pub const CONSTANT_NOTE: &str =
    "C = max{2||grad eta||_1, 4 pi ||eta||_1}; the factor (R||tau||_inf + ||omega||_inf) is applied in the bound, not folded into C";

fn require_bound_at_most_one(collection: &FrameCollection) -> Result<()> {
    let upper = collection.bounds().upper;
    if upper > 1.0 + BOUND_TOLERANCE {
        return Err(Error::Hypothesis(format!("upper frame bound {upper} exceeds 1")));
    }
    Ok(())
}

fn stability_bound(constant: f64, bandwidth: usize, field: &DeformationField, norm: f64) -> f64 {
    constant * (bandwidth as f64 * field.tau_sup() + field.omega_sup()) * norm
}

/// Projects `f` onto `H_R`, deforms it, and compares the feature distance
/// with the stability bound.
pub fn verify_deformation_stability(
    collection: &FrameCollection,
    f: &Signal,
    field: &DeformationField,
    mollifier: &Mollifier,
    max_depth: usize,
) -> Result<StabilityReport> {
    require_bound_at_most_one(collection)?;
    require_admissible(field)?;
    let projected = mollifier.project(f)?;
    let deformed = apply_deformation(&projected, field)?;
    let config = ScatterConfig::depth(max_depth);
    let distance = feature_distance(
        &extract_features(collection, &projected, &config)?,
        &extract_features(collection, &deformed, &config)?,
    )?;
    let norm = projected.norm_l2();
    let constant = stability_constant(mollifier);
    let bound = stability_bound(constant, mollifier.bandwidth(), field, norm);
    let tolerance = INTERPOLATION_TOLERANCE * norm;
    Ok(StabilityReport {
        measured: distance.value,
        bound,
        constant,
        tolerance,
        pass: distance.value <= bound + tolerance,
        bandwidth: mollifier.bandwidth(),
        tau_sup: field.tau_sup(),
        jacobian_sup: field.jacobian_sup(),
        omega_sup: field.omega_sup(),
        signal_norm: norm,
        max_depth,
        unmatched_paths: distance.unmatched,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntermediateReport {
    /// `‖f − F_{τ,ω} f‖₂` for the projected `f`.
    pub measured: f64,
    pub bound: f64,
    pub tolerance: f64,
    /// `measured / bound` (zero when both vanish).
    pub ratio: f64,
    pub pass: bool,
}

/// Signal-level bound `‖f − F_{τ,ω} f‖₂ ≤ C·(R‖τ‖∞ + ‖ω‖∞)·‖f‖₂` on `H_R`,
/// isolated from the scattering cascade.
pub fn verify_intermediate_bound(f: &Signal, field: &DeformationField, mollifier: &Mollifier) -> Result<IntermediateReport> {
    require_admissible(field)?;
    let projected = mollifier.project(f)?;
    let measured = projected.sub(&apply_deformation(&projected, field)?)?.norm_l2();
    let norm = projected.norm_l2();
    let bound = stability_bound(stability_constant(mollifier), mollifier.bandwidth(), field, norm);
    let tolerance = INTERPOLATION_TOLERANCE * norm;
    Ok(IntermediateReport {
        measured,
        bound,
        tolerance,
        ratio: if bound > 0.0 { measured / bound } else { 0.0 },
        pass: measured <= bound + tolerance,
    })
}

/// `‖F_interp f − F_exact f‖₂ / ‖f‖₂`: how far the interpolated warp is from
/// the exact one. By the Lipschitz property this also bounds the feature
/// distance error caused by interpolation.
pub fn interpolation_slack(f: &Signal, field: &DeformationField) -> Result<f64> {
    let interp = apply_deformation(f, field)?;
    let exact = apply_deformation_trigonometric(f, field)?;
    let norm = f.norm_l2();
    let diff = interp.sub(&exact)?.norm_l2();
    Ok(if norm > 0.0 { diff / norm } else { diff })
}

/// One line of a verification report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub inputs_digest: String,
    pub seed: u64,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, inputs_digest: String, seed: u64, measured: f64, bound: f64, pass: bool) -> Self {
        CheckRecord {
            name: name.into(),
            inputs_digest,
            seed,
            measured,
            bound,
            pass,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deformation::{FieldTargets, SmoothField};
    use crate::frames::build_wavelet_frame;
    use crate::signal::circular_convolve;

    #[test]
    fn profile_shape() {
        assert_eq!(mollifier_profile(0.0), 1.0);
        assert_eq!(mollifier_profile(1.0), 1.0);
        assert_eq!(mollifier_profile(2.0), 0.0);
        assert!((mollifier_profile(1.5) - 0.5).abs() < 1e-15);
        let mut last = 1.0;
        for i in 0..=100 {
            let v = mollifier_profile(1.0 + i as f64 / 100.0);
            assert!(v <= last);
            last = v;
        }
    }

    #[test]
    fn gamma_hat_support() {
        let g = Grid::new(2, 64).unwrap();
        let m = Mollifier::new(g, 8).unwrap();
        for (i, v) in m.gamma_hat().values().iter().enumerate() {
            let k = g.frequency(i);
            let r = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
            if r <= 8.0 {
                assert_eq!(v.re, 1.0);
            }
            if r >= 16.0 {
                assert_eq!(v.re, 0.0);
            }
        }
        assert!(Mollifier::new(g, 17).is_err());
        assert!(Mollifier::new(g, 16).is_ok());
        assert!(Mollifier::new(g, 0).is_err());
    }

    #[test]
    fn projection_cases() {
        let g = Grid::new(2, 64).unwrap();
        let m = Mollifier::new(g, 8).unwrap();
        let f = random_bandlimited(g, 8, 5);
        assert!(m.project(&f).unwrap().sub(&f).unwrap().norm_l2() < 1e-12);
        let high = Signal::from_fn(g, |_| C64::new(1.0, 0.0)).modulate(&[16, 3]);
        assert!(m.project(&high).unwrap().norm_l2() < 1e-12);
        let d = m.project(&Signal::delta(g)).unwrap();
        assert!(d.sub(m.gamma()).unwrap().norm_l2() < 1e-10);
        // Idempotent on H_R; on all of L² only a contraction, since γ̂² ≠ γ̂
        // in the transition band R < |k| < 2R.
        let once = m.project(&f).unwrap();
        let twice = m.project(&once).unwrap();
        assert!(twice.sub(&once).unwrap().norm_l2() < 1e-12);
        let noise = random_signal(g, 1);
        assert!(bandlimit_project(&noise, 8).unwrap().norm_l2() <= noise.norm_l2());
    }

    #[test]
    fn projection_via_convolution() {
        let g = Grid::new(1, 64).unwrap();
        let m = Mollifier::new(g, 8).unwrap();
        let f = random_signal(g, 2);
        let direct = circular_convolve(&f, m.gamma()).unwrap();
        assert!(direct.sub(&m.project(&f).unwrap()).unwrap().norm_l2() < 1e-12);
    }

    #[test]
    fn constant_max_arithmetic() {
        assert_eq!(stability_constant_from_norms(1.0, 1.0), 4.0 * PI);
        assert_eq!(stability_constant_from_norms(1.0, 10.0), 20.0);
    }

    #[test]
    fn mollifier_norms_by_quadrature() {
        // Independent evaluation: direct (slow) inverse transform of the
        // profile, then Riemann sums of |η| and |η'|.
        let g = Grid::new(1, 256).unwrap();
        let r = 16usize;
        let m = Mollifier::new(g, r).unwrap();
        let n = g.n();
        let mut l1 = 0.0;
        let mut grad = 0.0;
        for x in 0..n {
            let pos = x as f64 / n as f64;
            let mut v = 0.0;
            let mut dv = 0.0;
            for k in -(2 * r as i64)..=(2 * r as i64) {
                let w = mollifier_profile(k.abs() as f64 / r as f64);
                v += w * (2.0 * PI * k as f64 * pos).cos();
                dv -= w * 2.0 * PI * k as f64 * (2.0 * PI * k as f64 * pos).sin();
            }
            l1 += v.abs() / n as f64;
            grad += dv.abs() / n as f64;
        }
        assert!((m.eta_l1() - l1).abs() < 1e-10 * l1);
        assert!((m.eta_grad_l1() - grad / r as f64).abs() < 1e-10 * grad);
        let c = stability_constant(&m);
        assert_eq!(c, (2.0 * m.eta_grad_l1()).max(4.0 * PI * m.eta_l1()));
        if 4.0 * PI * m.eta_l1() >= 2.0 * m.eta_grad_l1() {
            assert_eq!(c, 4.0 * PI * m.eta_l1());
        } else {
            assert_eq!(c, 2.0 * m.eta_grad_l1());
        }
        assert!(m.eta_l1() >= 1.0 - 1e-12, "‖η‖₁ ≥ |η̂(0)| = 1");
    }

    #[test]
    fn constant_converges_under_refinement() {
        for d in [1usize, 2] {
            let coarse = stability_constant(&Mollifier::new(Grid::new(d, 64).unwrap(), 8).unwrap());
            let fine = stability_constant(&Mollifier::new(Grid::new(d, 128).unwrap(), 8).unwrap());
            assert!((coarse - fine).abs() < 0.01 * fine, "d={d}: {coarse} vs {fine}");
        }
    }

    #[test]
    fn invariance_trivial_cases() {
        let g = Grid::new(2, 32).unwrap();
        let c = FrameCollection::uniform(build_wavelet_frame(g, 2, 3).unwrap());
        let r = verify_translation_invariance(&c, &Signal::delta(g), &[vec![0, 0], vec![5, -7], vec![31, 1]], 2).unwrap();
        assert!(r.pass);
        assert_eq!(r.per_shift[0], 0.0);
        assert_eq!(r.paths, 1 + 6 + 36);
    }

    #[test]
    fn lipschitz_trivial_cases() {
        let g = Grid::new(1, 64).unwrap();
        let c = FrameCollection::uniform(build_wavelet_frame(g, 3, 1).unwrap());
        let f = random_signal(g, 3);
        let r = verify_lipschitz(&c, &[(f.clone(), f.clone())], 2).unwrap();
        assert_eq!(r.worst_excess, 0.0);
        let r = verify_lipschitz(&c, &[(f.clone(), Signal::zeros(g))], 2).unwrap();
        assert!(r.pass && r.worst_ratio <= 1.0 + 1e-12);
    }

    #[test]
    fn stability_trivial_and_modulation_cases() {
        let g = Grid::new(2, 32).unwrap();
        let c = FrameCollection::uniform(build_wavelet_frame(g, 2, 2).unwrap());
        let m = Mollifier::new(g, 4).unwrap();
        let f = random_bandlimited(g, 4, 8);
        let id = verify_deformation_stability(&c, &f, &DeformationField::identity(g), &m, 2).unwrap();
        assert_eq!(id.measured, 0.0);
        assert!(id.pass);

        let phase = 0.03;
        let field = DeformationField::constant(g, &[0.0, 0.0], phase).unwrap();
        let r = verify_deformation_stability(&c, &f, &field, &m, 2).unwrap();
        assert!(r.measured <= r.constant * phase * r.signal_norm);
        // ‖f − e^{2πic} f‖₂ = |1 − e^{2πic}|·‖f‖₂ ≤ 2π|c|·‖f‖₂.
        let inter = verify_intermediate_bound(&f, &field, &m).unwrap();
        let factor = (C64::new(1.0, 0.0) - C64::from_polar(1.0, 2.0 * PI * phase)).norm();
        assert!((inter.measured - factor * r.signal_norm).abs() < 1e-12);
        assert!(factor <= 2.0 * PI * phase);
        assert!(inter.pass);
    }

    #[test]
    fn stability_refuses_violated_hypotheses() {
        let g = Grid::new(2, 32).unwrap();
        let m = Mollifier::new(g, 4).unwrap();
        let f = random_bandlimited(g, 4, 8);
        let loud = FrameCollection::uniform(build_wavelet_frame(g, 2, 2).unwrap().scaled(2.0).unwrap());
        let err = verify_deformation_stability(&loud, &f, &DeformationField::identity(g), &m, 1).unwrap_err();
        assert!(err.is_hypothesis());
        let c = FrameCollection::uniform(build_wavelet_frame(g, 2, 2).unwrap());
        let steep = DeformationField::from_fn(g, |x| [0.3 * (2.0 * PI * x[0]).sin() / (2.0 * PI), 0.0], |_| 0.0).unwrap();
        assert!(verify_deformation_stability(&c, &f, &steep, &m, 1).unwrap_err().is_hypothesis());
        assert!(verify_intermediate_bound(&f, &steep, &m).unwrap_err().is_hypothesis());
    }

    #[test]
    fn intermediate_translation_case() {
        let g = Grid::new(2, 64).unwrap();
        let m = Mollifier::new(g, 8).unwrap();
        let f = random_bandlimited(g, 8, 4);
        let t = [2.0 / 64.0, 1.0 / 64.0];
        let field = DeformationField::constant(g, &t, 0.0).unwrap();
        let r = verify_intermediate_bound(&f, &field, &m).unwrap();
        let direct = f.sub(&f.translate(&[2, 1])).unwrap().norm_l2();
        assert!((r.measured - direct).abs() < 1e-12);
        let c = stability_constant(&m);
        assert!(direct <= c * 8.0 * (t[0].hypot(t[1])) * f.norm_l2());
        assert!(r.pass);
    }

    #[test]
    fn bound_is_linear_in_tau() {
        let g = Grid::new(2, 32).unwrap();
        let c = FrameCollection::uniform(build_wavelet_frame(g, 2, 2).unwrap());
        let m = Mollifier::new(g, 4).unwrap();
        let f = random_bandlimited(g, 4, 8);
        let field = SmoothField::generate(2, 2, FieldTargets { jacobian_sup: 0.1, tau_sup: None, omega_sup: 0.0 })
            .unwrap()
            .sample(g)
            .unwrap();
        let one = verify_deformation_stability(&c, &f, &field, &m, 1).unwrap();
        let two = verify_deformation_stability(&c, &f, &field.scale_tau(2.0), &m, 1).unwrap();
        assert!((two.bound - 2.0 * one.bound).abs() < 1e-12 * one.bound);
        assert!(two.pass && one.pass);
    }

    #[test]
    fn records_serialize_deterministically() {
        let g = Grid::new(1, 16).unwrap();
        let f = random_signal(g, 1);
        assert_eq!(signal_digest(&f), signal_digest(&random_signal(g, 1)));
        assert_ne!(signal_digest(&f), signal_digest(&random_signal(g, 2)));
        assert_eq!(signal_digest(&f).len(), 64);
        let r = CheckRecord::new("x", signal_digest(&f), 7, 0.5, 1.0, true).with("depth", 2);
        let line = r.to_json_line();
        assert!(line.starts_with("{\"name\":\"x\""));
        assert!(line.contains("\"seed\":7"));
    }

    #[test]
    fn bandlimited_signal_is_grid_independent() {
        let a = random_bandlimited(Grid::new(2, 32).unwrap(), 4, 3);
        let b = random_bandlimited(Grid::new(2, 64).unwrap(), 4, 3);
        // Same trigonometric polynomial: every other sample of b matches a.
        for i in 0..32 {
            for j in 0..32 {
                let va = a.values()[i * 32 + j];
                let vb = b.values()[(2 * i) * 64 + 2 * j];
                assert!((va - vb).norm() < 1e-12);
            }
        }
    }
}
