//! Nonlinear-interference (NLI) estimation for dual-polarization WDM fiber
//! links with inter-channel stimulated Raman scattering.
//!
//! The crate is split along the physics:
//!
//! * [`formats`]: 4D constellations, Maxwell–Boltzmann shaping and symbol
//!   sources (i.i.d. or constant-composition blocks).
//! * [`moments`]: time-slot coincidence classes and their statistical moments,
//!   exact for i.i.d. inputs and window-averaged for finite blocklength.
//! * [`link`]: fiber parameters, the Raman-tilted power profile and the
//!   four-wave-mixing efficiency.
//! * [`nli`]: link kernels, the moment/kernel NLI estimator and its GN/EGN
//!   baselines, plus a direct first-order perturbation Monte-Carlo.
//! * [`ssfm`]: split-step Manakov propagation used as numerical ground truth.

pub mod error;
pub mod formats;
pub mod link;
pub mod moments;
pub mod nli;
pub mod partition;
pub mod quadrature;
pub mod ssfm;
mod linalg;

pub use error::{Error, Result};
pub use formats::{Constellation4D, Point4, SymbolSource};
pub use link::{FiberParams, LinkSpec, SpanSum, WdmGrid};
pub use moments::{MomentSet, PatternClass};
pub use nli::{Estimator, EtaReport};

pub use num_complex::Complex64;

/// Name of the pseudo-random generator used for every stochastic path.
pub const RNG_ALGORITHM: &str = "ChaCha8";

/// Converts a linear η (1/W²) to dB(1/W²).
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}
