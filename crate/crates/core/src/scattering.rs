//! Generalized scattering: paths through per-layer frames, the
//! modulus-convolution cascade `U[q]`, and the feature map
//! `Φ(f) = {U[q]f ∗ φ[q]}`.
//!
//! The path set is truncated at a configured depth and may be pruned by
//! relative energy. Both only drop nonnegative terms from `|||Φ(f)|||²`, so
//! upper bounds proved for the full feature map hold for what we compute.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frames::{FrameCollection, SemiDiscreteFrame, BOUND_TOLERANCE};
use crate::signal::{feature_norm, Grid, Signal};

/// Sequence of atom indices `(λ₁, …, λ_m)`, one per layer; empty is `e`.
///
/// Ordered by length first, then lexicographically by entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Path(Vec<usize>);

impl Path {
    pub fn empty() -> Self {
        Path(Vec::new())
    }

    pub fn new(entries: Vec<usize>) -> Self {
        Path(entries)
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, index: usize) -> Path {
        let mut entries = self.0.clone();
        entries.push(index);
        Path(entries)
    }
}

impl Ord for Path {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Path {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl FromStr for Path {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "e" {
            return Ok(Path::empty());
        }
        s.split(',')
            .map(|p| p.parse::<usize>().map_err(|_| Error::Format(format!("bad path {s:?}"))))
            .collect::<Result<Vec<_>>>()
            .map(Path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterConfig {
    pub max_depth: usize,
    /// Paths with `‖U[q]f‖₂ < prune_rel·‖f‖₂` are dropped with their subtree.
    pub prune_rel: f64,
}

impl Default for ScatterConfig {
    fn default() -> Self {
        ScatterConfig { max_depth: 3, prune_rel: 0.0 }
    }
}

impl ScatterConfig {
    pub fn depth(max_depth: usize) -> Self {
        ScatterConfig { max_depth, prune_rel: 0.0 }
    }
}

/// Output signals keyed by path.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    grid: Grid,
    entries: BTreeMap<Path, Signal>,
}

impl FeatureSet {
    pub fn new(grid: Grid) -> Self {
        FeatureSet { grid, entries: BTreeMap::new() }
    }

    pub fn insert(&mut self, path: Path, signal: Signal) -> Result<()> {
        self.grid.check_same(&signal.grid())?;
        self.entries.insert(path, signal);
        Ok(())
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, path: &Path) -> Option<&Signal> {
        self.entries.get(path)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Path, &Signal)> {
        self.entries.iter()
    }

    /// `|||Φ||| = (Σ_q ‖Φ_q‖₂²)^{1/2}`.
    pub fn norm(&self) -> f64 {
        feature_norm(self.entries.values())
    }

    /// `Σ_{|q| = m} ‖Φ_q‖₂²` for `m = 0, 1, …`.
    pub fn energy_by_depth(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (path, signal) in &self.entries {
            if out.len() <= path.len() {
                out.resize(path.len() + 1, 0.0);
            }
            out[path.len()] += signal.norm_l2().powi(2);
        }
        out
    }

    /// Entrywise `T_t`.
    pub fn translate(&self, shift: &[i64]) -> FeatureSet {
        FeatureSet {
            grid: self.grid,
            entries: self.entries.iter().map(|(p, s)| (p.clone(), s.translate(shift))).collect(),
        }
    }
}

/// `U[λ]f = |f ∗ f_λ|`. The output-generating atom is reserved for φ.
pub fn u_step(frame: &SemiDiscreteFrame, atom: usize, f: &Signal) -> Result<Signal> {
    check_propagating(frame, atom)?;
    frame.grid().check_same(&f.grid())?;
    Ok(f.dft().filter(frame.atoms()[atom].response())?.modulus())
}

fn check_propagating(frame: &SemiDiscreteFrame, atom: usize) -> Result<()> {
    if atom >= frame.len() {
        return Err(Error::Misuse(format!("atom index {atom} out of range ({} atoms)", frame.len())));
    }
    if atom == frame.output_index() {
        return Err(Error::Misuse(format!(
            "atom {atom} is the output-generating atom and cannot propagate"
        )));
    }
    Ok(())
}

/// `U[q]f = U[λ_m] ⋯ U[λ₁] f`, with `U[e]f = f`.
pub fn u_path(collection: &FrameCollection, path: &Path, f: &Signal) -> Result<Signal> {
    path.entries()
        .iter()
        .enumerate()
        .try_fold(f.clone(), |u, (depth, &atom)| u_step(collection.layer(depth), atom, &u))
}

fn check_hypotheses(collection: &FrameCollection, f: &Signal, config: &ScatterConfig) -> Result<()> {
    collection.grid().check_same(&f.grid())?;
    let upper = collection.bounds().upper;
    if upper > 1.0 + BOUND_TOLERANCE {
        return Err(Error::Hypothesis(format!(
            "collection upper frame bound {upper} exceeds 1; normalize the frames first"
        )));
    }
    if !(0.0..1.0).contains(&config.prune_rel) {
        return Err(Error::Config(format!("prune_rel must lie in [0, 1), got {}", config.prune_rel)));
    }
    Ok(())
}

/// Evaluates `Φ(f)` over all paths up to `config.max_depth`.
///
/// Sibling subtrees are evaluated in parallel; the result map is ordered by
/// path, so output does not depend on scheduling.
pub fn extract_features(collection: &FrameCollection, f: &Signal, config: &ScatterConfig) -> Result<FeatureSet> {
    check_hypotheses(collection, f, config)?;
    let threshold = config.prune_rel * f.norm_l2();
    let entries = visit(collection, config.max_depth, threshold, Path::empty(), f.clone())?;
    Ok(FeatureSet {
        grid: f.grid(),
        entries: entries.into_iter().collect(),
    })
}

fn visit(
    collection: &FrameCollection,
    max_depth: usize,
    threshold: f64,
    path: Path,
    u: Signal,
) -> Result<Vec<(Path, Signal)>> {
    let depth = path.len();
    let frame = collection.layer(depth);
    let spectrum = u.dft();
    drop(u);
    let output = spectrum.filter(frame.output_atom().response())?;
    let mut out = vec![(path.clone(), output)];
    if depth == max_depth {
        return Ok(out);
    }
    let children: Vec<usize> = frame.propagating_indices().collect();
    let subtrees = children
        .par_iter()
        .map(|&atom| {
            let child = spectrum.filter(frame.atoms()[atom].response())?.modulus();
            if child.norm_l2() < threshold {
                return Ok(Vec::new());
            }
            visit(collection, max_depth, threshold, path.child(atom), child)
        })
        .collect::<Result<Vec<_>>>()?;
    out.extend(subtrees.into_iter().flatten());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureDistance {
    /// `|||s - t|||` over the shared paths.
    pub value: f64,
    /// Paths present in only one of the two sets.
    pub unmatched: usize,
}

/// `|||s - t|||` over the intersection of the two key sets.
pub fn feature_distance(s: &FeatureSet, t: &FeatureSet) -> Result<FeatureDistance> {
    s.grid.check_same(&t.grid)?;
    let mut sum = 0.0;
    let mut shared = 0;
    for (path, a) in &s.entries {
        if let Some(b) = t.entries.get(path) {
            sum += a.sub(b)?.norm_l2().powi(2);
            shared += 1;
        }
    }
    Ok(FeatureDistance {
        value: sum.sqrt(),
        unmatched: s.len() + t.len() - 2 * shared,
    })
}

/// Truncated `Σ_{m ≤ max_depth} Σ_{q ∈ Λ₁^m} ‖U[q]f‖₂`.
pub fn hm_norm_partial(collection: &FrameCollection, f: &Signal, max_depth: usize) -> Result<f64> {
    collection.grid().check_same(&f.grid())?;
    hm_visit(collection, max_depth, 0, f)
}

fn hm_visit(collection: &FrameCollection, max_depth: usize, depth: usize, u: &Signal) -> Result<f64> {
    let own = u.norm_l2();
    if depth == max_depth {
        return Ok(own);
    }
    let frame = collection.layer(depth);
    let spectrum = u.dft();
    let children: Vec<usize> = frame.propagating_indices().collect();
    let parts = children
        .par_iter()
        .map(|&atom| {
            let child = spectrum.filter(frame.atoms()[atom].response())?.modulus();
            hm_visit(collection, max_depth, depth + 1, &child)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(own + parts.iter().sum::<f64>())
}
