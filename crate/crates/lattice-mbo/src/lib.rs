//! Threshold dynamics on the two-dimensional integer lattice.
//!
//! The scheme alternates two elementary operations on a set of lattice cells:
//! exact semi-discrete heat flow for a time `tau` (diffusion on Z^2 with grid
//! spacing `h`, no spatial discretization error), followed by a pointwise
//! threshold at 1/2. How the interface of the set moves depends entirely on
//! the relation between `tau` and `h`:
//!
//! * `tau >> h` (subcritical): fronts move by mean curvature,
//! * `tau = mu * h` (critical): velocities are quantized; flat-enough fronts
//!   pin entirely, and the mobility depends on the normal direction,
//! * `tau << h` (supercritical): nothing moves at all.
//!
//! The crate provides the exact lattice Green's function ([`heat_kernel`]),
//! binary set handling and rasterization ([`lattice`]), the evolution driver
//! with both a truncated-convolution and an FFT step ([`evolution`]), the
//! critical-regime velocity law and pinning threshold ([`velocity_law`]), its
//! anisotropic extension for rational normal directions ([`anisotropy`]), and
//! a command-line front end ([`cli`]).

pub mod anisotropy;
pub mod cli;
pub mod config;
pub mod evolution;
pub mod heat_kernel;
pub mod lattice;
pub mod shapes;
pub mod special_fns;
pub mod velocity_law;
pub mod verify;

mod error;
mod quad;

pub use error::{Error, Result};

/// Write `bytes` to `path` atomically: stage into a sibling temp file, then
/// rename over the target so readers never observe a half-written file.
pub(crate) fn write_atomic(path: &std::path::Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| std::path::Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    std::io::Write::write_all(&mut tmp, bytes)?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
