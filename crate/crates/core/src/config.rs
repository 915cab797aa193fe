//! TOML run configuration for the command-line front end.
//!
//! ```toml
//! seed = 7                      # echoed in every output; --seed overrides
//!
//! [grid]
//! dim = 2                       # 1 or 2
//! n = 64                        # power of two, at least 4
//!
//! [[frames]]
//! kind = "wavelet"              # wavelet | gabor | shearlet | import
//! scales = 3                    # wavelet, shearlet (default 3)
//! directions = 4                # wavelet (default 1 in d=1, 4 in d=2)
//! # step = 8                    # gabor: lattice step in samples (required)
//! # shears = 1                  # shearlet: shears per cone at the coarsest scale
//! # path = "bank/"              # import: directory written by frame-check
//! normalize = "parseval"        # parseval | bound | none (default parseval)
//! # bound = 1.0                 # target upper bound for normalize = "bound"
//! # gain = 1.0                  # extra uniform gain, bounds scale by gain²
//! # output_index = 0            # default: the frame's low-pass atom
//!
//! [collection]
//! layers = [0]                  # frame index per layer; the last one repeats
//!
//! [scattering]
//! max_depth = 2                 # default 3
//! prune_rel = 0.0               # in [0, 1), default 0
//!
//! [deformation]
//! count = 4                     # fields written by `deform` (default 4)
//! max_dtau = 0.2                # target ‖Dτ‖∞, at most 1/(2d)
//! # tau_sup = 0.01              # optional cap on ‖τ‖∞
//! omega_sup = 0.02              # target ‖ω‖∞ (default 0)
//!
//! [verification]
//! suites = ["invariance", "lipschitz", "stability", "intermediate", "energy"]
//! shifts = 5                    # random integer shifts (default 5)
//! pairs = 5                     # random signal pairs (default 5)
//! fields = 3                    # random deformation fields (default 3)
//! bandwidth = 8                 # R, at most n/4 (default n/8)
//! sweep = [0.25, 0.5, 1.0]      # τ multipliers in [0, 1] for sweep.tsv
//!
//! [io]
//! # input = "image.pgm"         # default signal for `extract`
//! out = "out"                   # default output directory
//! ```
//!
//! Relative paths are resolved against the configuration file's directory.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::signal::Grid;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub grid: GridSection,
    pub frames: Vec<FrameSpec>,
    #[serde(default)]
    pub collection: CollectionSection,
    #[serde(default)]
    pub scattering: ScatteringSection,
    #[serde(default)]
    pub deformation: DeformationSection,
    #[serde(default)]
    pub verification: VerificationSection,
    #[serde(default)]
    pub io: IoSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameKind {
    Wavelet,
    Gabor,
    Shearlet,
    Import,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalize {
    #[default]
    Parseval,
    Bound,
    None,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSpec {
    pub kind: FrameKind,
    pub scales: Option<u32>,
    pub directions: Option<u32>,
    pub step: Option<usize>,
    pub shears: Option<u32>,
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub normalize: Normalize,
    pub bound: Option<f64>,
    pub gain: Option<f64>,
    pub output_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollectionSection {
    pub layers: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScatteringSection {
    pub max_depth: usize,
    pub prune_rel: f64,
}

impl Default for ScatteringSection {
    fn default() -> Self {
        ScatteringSection { max_depth: 3, prune_rel: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeformationSection {
    pub count: usize,
    pub max_dtau: f64,
    pub tau_sup: Option<f64>,
    pub omega_sup: f64,
}

impl Default for DeformationSection {
    fn default() -> Self {
        DeformationSection { count: 4, max_dtau: 0.2, tau_sup: None, omega_sup: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Invariance,
    Lipschitz,
    Stability,
    Intermediate,
    Energy,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Invariance,
        Suite::Lipschitz,
        Suite::Stability,
        Suite::Intermediate,
        Suite::Energy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Invariance => "invariance",
            Suite::Lipschitz => "lipschitz",
            Suite::Stability => "stability",
            Suite::Intermediate => "intermediate",
            Suite::Energy => "energy",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerificationSection {
    pub suites: Vec<Suite>,
    pub shifts: usize,
    pub pairs: usize,
    pub fields: usize,
    pub bandwidth: Option<usize>,
    pub sweep: Vec<f64>,
}

impl Default for VerificationSection {
    fn default() -> Self {
        VerificationSection {
            suites: Suite::ALL.to_vec(),
            shifts: 5,
            pairs: 5,
            fields: 3,
            bandwidth: None,
            sweep: vec![0.25, 0.5, 0.75, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoSection {
    pub input: Option<PathBuf>,
    pub out: PathBuf,
}

impl Default for IoSection {
    fn default() -> Self {
        IoSection { input: None, out: PathBuf::from("out") }
    }
}

fn invalid(field: &str, message: impl fmt::Display) -> Error {
    Error::Config(format!("{field}: {message}"))
}

impl RunConfig {
    /// Parses TOML text; `base` resolves relative paths. Syntax and type
    /// errors carry the TOML line and column.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for frame in &mut self.frames {
            if let Some(p) = frame.path.as_mut() {
                join(p);
            }
        }
        if let Some(p) = self.io.input.as_mut() {
            join(p);
        }
        join(&mut self.io.out);
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.grid.dim, self.grid.n).expect("validated")
    }

    /// Frame index used at each layer.
    pub fn layers(&self) -> Vec<usize> {
        self.collection.layers.clone().unwrap_or_else(|| vec![0])
    }

    /// Band-limit radius for the stability suites.
    pub fn bandwidth(&self) -> usize {
        self.verification.bandwidth.unwrap_or((self.grid.n / 8).max(1))
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        self
    }

    /// Checks every field and that referenced files exist.
    pub fn validate(&self) -> Result<()> {
        Grid::new(self.grid.dim, self.grid.n).map_err(|e| invalid("grid", e))?;
        if self.frames.is_empty() {
            return Err(invalid("frames", "at least one [[frames]] entry is required"));
        }
        for (i, frame) in self.frames.iter().enumerate() {
            self.validate_frame(i, frame)?;
        }
        let layers = self.layers();
        if layers.is_empty() {
            return Err(invalid("collection.layers", "must name at least one frame"));
        }
        if let Some(&bad) = layers.iter().find(|&&l| l >= self.frames.len()) {
            return Err(invalid(
                "collection.layers",
                format!("frame index {bad} out of range (have {} frames)", self.frames.len()),
            ));
        }
        let s = &self.scattering;
        if !(0.0..1.0).contains(&s.prune_rel) {
            return Err(invalid("scattering.prune_rel", format!("{} is not in [0, 1)", s.prune_rel)));
        }
        let d = &self.deformation;
        for (name, v) in [("max_dtau", Some(d.max_dtau)), ("omega_sup", Some(d.omega_sup)), ("tau_sup", d.tau_sup)] {
            if let Some(v) = v {
                if !v.is_finite() || v < 0.0 {
                    return Err(invalid(&format!("deformation.{name}"), format!("{v} must be finite and nonnegative")));
                }
            }
        }
        let v = &self.verification;
        if let Some(r) = v.bandwidth {
            if r == 0 || 4 * r > self.grid.n {
                return Err(invalid("verification.bandwidth", format!("{r} must lie in 1..={}", self.grid.n / 4)));
            }
        }
        if let Some(x) = v.sweep.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(invalid("verification.sweep", format!("multiplier {x} is not in [0, 1]")));
        }
        if let Some(input) = &self.io.input {
            if !input.is_file() {
                return Err(invalid("io.input", format!("{} does not exist", input.display())));
            }
        }
        Ok(())
    }

    fn validate_frame(&self, i: usize, frame: &FrameSpec) -> Result<()> {
        let field = |name: &str| format!("frames[{i}].{name}");
        let allowed: &[&str] = match frame.kind {
            FrameKind::Wavelet => &["scales", "directions"],
            FrameKind::Gabor => &["step"],
            FrameKind::Shearlet => &["scales", "shears"],
            FrameKind::Import => &["path"],
        };
        let present = [
            ("scales", frame.scales.is_some()),
            ("directions", frame.directions.is_some()),
            ("step", frame.step.is_some()),
            ("shears", frame.shears.is_some()),
            ("path", frame.path.is_some()),
        ];
        for (name, set) in present {
            if set && !allowed.contains(&name) {
                return Err(invalid(&field(name), format!("not a parameter of kind {:?}", frame.kind)));
            }
        }
        match frame.kind {
            FrameKind::Gabor if frame.step.is_none() => return Err(invalid(&field("step"), "required for gabor frames")),
            FrameKind::Shearlet if self.grid.dim != 2 => {
                return Err(invalid(&field("kind"), "shearlet frames need a 2-dimensional grid"))
            }
            FrameKind::Import => match &frame.path {
                None => return Err(invalid(&field("path"), "required for imported frames")),
                Some(p) if !p.join(crate::bank::MANIFEST).is_file() => {
                    return Err(invalid(&field("path"), format!("no frame bank at {}", p.display())))
                }
                _ => {}
            },
            _ => {}
        }
        match (frame.normalize, frame.bound) {
            (Normalize::Bound, Some(b)) if !(b > 0.0 && b <= 1.0) => {
                return Err(invalid(&field("bound"), format!("{b} is not in (0, 1]")))
            }
            (Normalize::Parseval | Normalize::None, Some(_)) => {
                return Err(invalid(&field("bound"), "only meaningful with normalize = \"bound\""))
            }
            _ => {}
        }
        if let Some(g) = frame.gain {
            if !(g.is_finite() && g > 0.0) {
                return Err(invalid(&field("gain"), format!("{g} must be positive")));
            }
        }
        Ok(())
    }
}
