//! Generalized scattering feature extraction over semi-discrete frame
//! collections on periodic grids, with executable checks of translation
//! invariance, Lipschitz continuity and deformation stability.

pub mod bank;
pub mod cli;
pub mod config;
pub mod deformation;
pub mod error;
mod fft;
pub mod frames;
pub mod io;
pub mod scattering;
pub mod signal;
pub mod verify;

pub use error::{Error, Result};
pub use frames::{Atom, AtomLabel, FrameBounds, FrameCollection, SemiDiscreteFrame};
pub use scattering::{extract_features, FeatureSet, Path, ScatterConfig};
pub use signal::{Grid, Signal, Spectrum, C64};
