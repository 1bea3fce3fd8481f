//! Overlap integrals of continuum scattering states, their split into
//! δ-function weights plus a pointwise non-orthogonality term, and the
//! resulting time dependence of wave-packet norms.

pub mod error;
pub mod numerics;
pub mod overlap;
pub mod wavepacket;
pub mod potentials;

pub use error::{Error, Result};
pub use numerics::{Complex, QuadratureConfig};
pub use potentials::{PotentialSpec, ScatteringCoefficients};
