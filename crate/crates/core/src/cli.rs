//! Command-line front end: `frame-check`, `extract`, `deform`, `verify`.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 violated
//! hypothesis or failed certification, 3 failed verification.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bank::{export_bank, import_bank};
use crate::config::{FrameKind, FrameSpec, Normalize, RunConfig, Suite};
use crate::deformation::{deformed_energy_bound, export_field, check_admissible, DeformationField, FieldTargets, SmoothField};
use crate::error::{Error, Result};
use crate::frames::{
    build_gabor_frame, build_shearlet_frame, build_wavelet_frame, FrameCollection, SemiDiscreteFrame, BOUND_TOLERANCE,
};
use crate::io::{read_input, write_signal};
use crate::scattering::{extract_features, ScatterConfig};
use crate::signal::{Grid, Signal};
use crate::verify::{
    inputs_digest, random_signal, verify_deformation_stability, verify_intermediate_bound, verify_lipschitz,
    verify_translation_invariance, CheckRecord, Mollifier, StabilityReport, CONSTANT_NOTE, EXACT_TOLERANCE,
};

#[derive(Debug, Parser)]
#[command(name = "framescatter", version, about = "Scattering features over semi-discrete frame collections")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build or import every configured frame, certify its bounds and write the banks.
    FrameCheck(CommonArgs),
    /// Extract features from an input signal (.fsct or .pgm).
    Extract {
        #[command(flatten)]
        common: CommonArgs,
        /// Input signal; overrides io.input.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Generate seed-stamped admissible deformation fields.
    Deform(CommonArgs),
    /// Run the configured verification suites.
    Verify(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configuration's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides io.out.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Non-error outcome of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    CertificationFailed,
    VerificationFailed,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::CertificationFailed => 2,
            Status::VerificationFailed => 3,
        }
    }
}

pub fn error_exit_code(err: &Error) -> u8 {
    if err.is_hypothesis() {
        2
    } else {
        1
    }
}

/// Runs a parsed command, printing results to `out` and errors to stderr.
pub fn run(cli: Cli, out: &mut dyn Write) -> u8 {
    let result = (|| {
        let (common, input) = match &cli.command {
            Command::FrameCheck(c) | Command::Deform(c) | Command::Verify(c) => (c, None),
            Command::Extract { common, input } => (common, input.as_deref()),
        };
        let config = RunConfig::load(&common.config)?.with_seed(common.seed);
        let dir = common.out.clone().unwrap_or_else(|| config.io.out.clone());
        match &cli.command {
            Command::FrameCheck(_) => cmd_frame_check(&config, &dir, out),
            Command::Extract { .. } => cmd_extract(&config, input, &dir, out),
            Command::Deform(_) => cmd_deform(&config, &dir, out),
            Command::Verify(_) => cmd_verify(&config, &dir, out),
        }
    })();
    match result {
        Ok(status) => status.exit_code(),
        Err(e) => {
            eprintln!("framescatter: {e}");
            error_exit_code(&e)
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())?;
    Ok(())
}

/// Builds (or imports) one frame and applies its normalization and gain.
pub fn build_frame(grid: Grid, spec: &FrameSpec) -> Result<SemiDiscreteFrame> {
    let frame = match spec.kind {
        FrameKind::Wavelet => {
            let directions = spec.directions.unwrap_or(if grid.dim() == 1 { 1 } else { 4 });
            build_wavelet_frame(grid, spec.scales.unwrap_or(3), directions)?
        }
        FrameKind::Gabor => build_gabor_frame(grid, spec.step.unwrap_or(grid.n()))?,
        FrameKind::Shearlet => build_shearlet_frame(grid, spec.scales.unwrap_or(3), spec.shears.unwrap_or(1))?,
        FrameKind::Import => {
            let path = spec.path.as_ref().ok_or_else(|| Error::Config("import frame without path".into()))?;
            let frame = import_bank(path)?;
            grid.check_same(&frame.grid())?;
            frame
        }
    };
    let frame = match spec.output_index {
        Some(i) => frame.with_output_index(i)?,
        None => frame,
    };
    let frame = match spec.normalize {
        Normalize::Parseval => frame.tightened()?,
        Normalize::Bound => frame.normalized(spec.bound.unwrap_or(1.0))?,
        Normalize::None => frame,
    };
    match spec.gain {
        Some(g) => frame.scaled(g),
        None => Ok(frame),
    }
}

pub fn build_collection(config: &RunConfig) -> Result<FrameCollection> {
    let grid = config.grid();
    let frames = config
        .frames
        .iter()
        .map(|spec| build_frame(grid, spec).map(Arc::new))
        .collect::<Result<Vec<_>>>()?;
    FrameCollection::new(config.layers().iter().map(|&i| Arc::clone(&frames[i])).collect())
}

fn kind_name(kind: FrameKind) -> &'static str {
    match kind {
        FrameKind::Wavelet => "wavelet",
        FrameKind::Gabor => "gabor",
        FrameKind::Shearlet => "shearlet",
        FrameKind::Import => "import",
    }
}

/// Certifies every frame, writes `frames/frame_<i>/` banks and
/// `frames/certificates.txt`.
pub fn cmd_frame_check(config: &RunConfig, dir: &Path, out: &mut dyn Write) -> Result<Status> {
    let grid = config.grid();
    let root = dir.join("frames");
    fs::create_dir_all(&root)?;
    let mut report = String::new();
    writeln!(report, "seed {}", config.seed).unwrap();
    writeln!(report, "grid {} {}", grid.dim(), grid.n()).unwrap();
    let mut failed = false;
    for (i, spec) in config.frames.iter().enumerate() {
        let kind = kind_name(spec.kind);
        match build_frame(grid, spec) {
            Ok(frame) => {
                let b = frame.bounds();
                let certified = spec.normalize != Normalize::Parseval || b.is_parseval(BOUND_TOLERANCE);
                writeln!(
                    report,
                    "frame {i} {kind} atoms {} output {} A {:.17e} B {:.17e} {}",
                    frame.len(),
                    frame.output_index(),
                    b.lower,
                    b.upper,
                    if certified { "certified" } else { "FAILED parseval tolerance" }
                )
                .unwrap();
                failed |= !certified;
                export_bank(&frame, root.join(format!("frame_{i}")))?;
            }
            Err(e) if e.is_hypothesis() => {
                writeln!(report, "frame {i} {kind} FAILED {e}").unwrap();
                failed = true;
            }
            Err(e) => return Err(e),
        }
    }
    if !failed {
        let b = build_collection(config)?.bounds();
        writeln!(report, "collection layers {:?} A {:.17e} B {:.17e}", config.layers(), b.lower, b.upper).unwrap();
    }
    fs::write(root.join("certificates.txt"), &report)?;
    emit(out, &report)?;
    Ok(if failed { Status::CertificationFailed } else { Status::Success })
}

pub const FEATURE_HEADER: &str = "framescatter-features 1";

pub fn feature_file_name(index: usize) -> String {
    format!("feature_{index:05}.fsct")
}

/// Extracts features and writes `features/manifest.txt` plus one signal file
/// per path.
pub fn cmd_extract(config: &RunConfig, input: Option<&Path>, dir: &Path, out: &mut dyn Write) -> Result<Status> {
    let path = input
        .map(Path::to_path_buf)
        .or_else(|| config.io.input.clone())
        .ok_or_else(|| Error::Config("no input signal: pass --input or set io.input".into()))?;
    let signal = read_input(&path)?;
    config.grid().check_same(&signal.grid())?;
    let collection = build_collection(config)?;
    let scatter = ScatterConfig {
        max_depth: config.scattering.max_depth,
        prune_rel: config.scattering.prune_rel,
    };
    let features = extract_features(&collection, &signal, &scatter)?;

    let root = dir.join("features");
    fs::create_dir_all(&root)?;
    let grid = signal.grid();
    let bounds = collection.bounds();
    let mut m = String::new();
    writeln!(m, "{FEATURE_HEADER}").unwrap();
    writeln!(m, "seed {}", config.seed).unwrap();
    writeln!(m, "grid {} {}", grid.dim(), grid.n()).unwrap();
    writeln!(m, "input_digest {}", inputs_digest(&[&signal])).unwrap();
    writeln!(m, "input_norm {:.17e}", signal.norm_l2()).unwrap();
    writeln!(m, "max_depth {} prune_rel {:.17e}", scatter.max_depth, scatter.prune_rel).unwrap();
    writeln!(m, "bounds {:.17e} {:.17e}", bounds.lower, bounds.upper).unwrap();
    writeln!(m, "feature_norm {:.17e}", features.norm()).unwrap();
    for (depth, energy) in features.energy_by_depth().iter().enumerate() {
        writeln!(m, "energy {depth} {energy:.17e}").unwrap();
    }
    writeln!(m, "features {}", features.len()).unwrap();
    for (k, (p, s)) in features.iter().enumerate() {
        let file = feature_file_name(k);
        write_signal(root.join(&file), s)?;
        writeln!(m, "path {p} {:.17e} {file}", s.norm_l2()).unwrap();
    }
    fs::write(root.join("manifest.txt"), &m)?;

    let mut summary = String::new();
    writeln!(summary, "seed {}", config.seed).unwrap();
    writeln!(summary, "paths {}", features.len()).unwrap();
    writeln!(summary, "input_norm {:.6e}", signal.norm_l2()).unwrap();
    writeln!(summary, "feature_norm {:.6e}", features.norm()).unwrap();
    writeln!(summary, "depth\tenergy").unwrap();
    for (depth, energy) in features.energy_by_depth().iter().enumerate() {
        writeln!(summary, "{depth}\t{energy:.6e}").unwrap();
    }
    emit(out, &summary)?;
    Ok(Status::Success)
}

fn field_targets(config: &RunConfig) -> FieldTargets {
    FieldTargets {
        jacobian_sup: config.deformation.max_dtau,
        tau_sup: config.deformation.tau_sup,
        omega_sup: config.deformation.omega_sup,
    }
}

fn field_seed(config: &RunConfig, index: usize) -> u64 {
    config.seed.wrapping_add(index as u64)
}

/// Writes `fields/field_<i>/` directories and `fields/manifest.txt`.
pub fn cmd_deform(config: &RunConfig, dir: &Path, out: &mut dyn Write) -> Result<Status> {
    let grid = config.grid();
    let targets = field_targets(config);
    let root = dir.join("fields");
    fs::create_dir_all(&root)?;
    let mut m = String::new();
    writeln!(m, "framescatter-fields 1").unwrap();
    writeln!(m, "seed {}", config.seed).unwrap();
    writeln!(m, "grid {} {}", grid.dim(), grid.n()).unwrap();
    writeln!(m, "fields {}", config.deformation.count).unwrap();
    for i in 0..config.deformation.count {
        let seed = field_seed(config, i);
        let field = SmoothField::generate(grid.dim(), seed, targets)?.sample(grid)?;
        let verdict = check_admissible(&field);
        if !verdict.admissible {
            return Err(Error::Hypothesis(format!(
                "field {i} sampled with ‖Dτ‖∞ = {} above 1/(2d)",
                verdict.jacobian_sup
            )));
        }
        let name = format!("field_{i:03}");
        export_field(root.join(&name), &field, seed, &targets)?;
        writeln!(
            m,
            "field {name} seed {seed} jacobian_sup {:.17e} tau_sup {:.17e} omega_sup {:.17e} min_determinant {:.17e}",
            field.jacobian_sup(),
            field.tau_sup(),
            field.omega_sup(),
            verdict.min_determinant
        )
        .unwrap();
    }
    fs::write(root.join("manifest.txt"), &m)?;
    emit(out, &m)?;
    Ok(Status::Success)
}

fn stability_record(name: &str, digest: String, seed: u64, r: &StabilityReport) -> CheckRecord {
    CheckRecord::new(name, digest, seed, r.measured, r.bound, r.pass)
        .with("constant", r.constant)
        .with("tolerance", r.tolerance)
        .with("bandwidth", r.bandwidth)
        .with("tau_sup", r.tau_sup)
        .with("jacobian_sup", r.jacobian_sup)
        .with("omega_sup", r.omega_sup)
        .with("signal_norm", r.signal_norm)
        .with("max_depth", r.max_depth)
        .with("unmatched_paths", r.unmatched_paths)
        .with("constant_note", CONSTANT_NOTE)
}

/// Runs the selected suites; writes `verify/report.jsonl` and, when the
/// stability suite is selected, `verify/sweep.tsv`.
pub fn cmd_verify(config: &RunConfig, dir: &Path, out: &mut dyn Write) -> Result<Status> {
    let grid = config.grid();
    let collection = build_collection(config)?;
    let depth = config.scattering.max_depth;
    let v = &config.verification;
    let selected = |s: Suite| v.suites.contains(&s);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut records = Vec::new();

    if selected(Suite::Invariance) {
        let seed = rng.gen();
        let f = random_signal(grid, seed);
        let shifts: Vec<Vec<i64>> = (0..v.shifts)
            .map(|_| (0..grid.dim()).map(|_| rng.gen_range(0..grid.n() as i64)).collect())
            .collect();
        let r = verify_translation_invariance(&collection, &f, &shifts, depth)?;
        records.push(
            CheckRecord::new("invariance", inputs_digest(&[&f]), seed, r.max_residual, EXACT_TOLERANCE, r.pass)
                .with("shifts", serde_json::to_value(&shifts).expect("shifts serialize"))
                .with("paths", r.paths)
                .with("max_depth", depth),
        );
    }

    if selected(Suite::Lipschitz) {
        for _ in 0..v.pairs {
            let seed: u64 = rng.gen();
            let f = random_signal(grid, seed);
            let h = random_signal(grid, seed.wrapping_add(1)).scale((0.5).into());
            for (name, other) in [("lipschitz", h), ("nonexpansive", Signal::zeros(grid))] {
                let r = verify_lipschitz(&collection, &[(f.clone(), other.clone())], depth)?;
                records.push(
                    CheckRecord::new(name, inputs_digest(&[&f, &other]), seed, r.worst_ratio, 1.0, r.pass)
                        .with("excess", r.worst_excess)
                        .with("upper_bound", r.upper_bound)
                        .with("max_depth", depth),
                );
            }
        }
    }

    let deformation_suites = [Suite::Stability, Suite::Intermediate, Suite::Energy];
    let mut sweep = String::new();
    if deformation_suites.iter().any(|&s| selected(s)) {
        let mollifier = Mollifier::new(grid, config.bandwidth())?;
        let targets = field_targets(config);
        let mut first: Option<(DeformationField, Signal, u64)> = None;
        for i in 0..v.fields {
            let field_seed = field_seed(config, i);
            let field = SmoothField::generate(grid.dim(), field_seed, targets)?.sample(grid)?;
            let seed: u64 = rng.gen();
            let f = random_signal(grid, seed);
            let digest = inputs_digest(&[&f]);
            if selected(Suite::Stability) {
                let r = verify_deformation_stability(&collection, &f, &field, &mollifier, depth)?;
                records.push(stability_record("stability", digest.clone(), seed, &r).with("field_seed", field_seed));
            }
            if selected(Suite::Intermediate) {
                let r = verify_intermediate_bound(&f, &field, &mollifier)?;
                records.push(
                    CheckRecord::new("intermediate", digest.clone(), seed, r.measured, r.bound, r.pass)
                        .with("tolerance", r.tolerance)
                        .with("ratio", r.ratio)
                        .with("field_seed", field_seed)
                        .with("constant_note", CONSTANT_NOTE),
                );
            }
            if selected(Suite::Energy) {
                let projected = mollifier.project(&f)?;
                let e = deformed_energy_bound(&projected, &field)?;
                records.push(
                    CheckRecord::new("energy", digest, seed, e.ratio, 2.0, e.pass).with("field_seed", field_seed),
                );
            }
            if first.is_none() {
                first = Some((field, f, seed));
            }
        }
        if let (true, Some((field, f, seed))) = (selected(Suite::Stability), first) {
            let mut scales = v.sweep.clone();
            scales.sort_by(f64::total_cmp);
            writeln!(sweep, "# seed {} signal_seed {seed}", config.seed).unwrap();
            writeln!(sweep, "scale\ttau_sup\tjacobian_sup\tomega_sup\tmeasured\tbound\tpass").unwrap();
            for s in scales {
                let r = verify_deformation_stability(&collection, &f, &field.scale_tau(s), &mollifier, depth)?;
                writeln!(
                    sweep,
                    "{s:.6}\t{:.17e}\t{:.17e}\t{:.17e}\t{:.17e}\t{:.17e}\t{}",
                    r.tau_sup, r.jacobian_sup, r.omega_sup, r.measured, r.bound, r.pass
                )
                .unwrap();
            }
        }
    }

    let root = dir.join("verify");
    fs::create_dir_all(&root)?;
    let mut report = String::new();
    for r in &records {
        report.push_str(&r.to_json_line());
        report.push('\n');
    }
    fs::write(root.join("report.jsonl"), &report)?;
    if !sweep.is_empty() {
        fs::write(root.join("sweep.tsv"), &sweep)?;
    }

    let failures = records.iter().filter(|r| !r.pass).count();
    let mut summary = String::new();
    writeln!(summary, "seed {}", config.seed).unwrap();
    for r in &records {
        writeln!(
            summary,
            "{} {} measured {:.6e} bound {:.6e}",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.measured,
            r.bound
        )
        .unwrap();
    }
    writeln!(summary, "checks {} failed {failures}", records.len()).unwrap();
    emit(out, &summary)?;
    Ok(if failures == 0 { Status::Success } else { Status::VerificationFailed })
}
