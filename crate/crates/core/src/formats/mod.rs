//! Modulation formats: 4D constellations, Maxwell–Boltzmann shaping and
//! symbol sources.

mod constellation;
mod shaping;
mod source;

pub use constellation::{builtin, builtin_names, load_constellation, make_pm_qam, parse_constellation, Constellation4D, Point4};
pub use shaping::{fit_mb_entropy, quantize_composition, CompositionBlock, MaxwellBoltzmannPS};
pub use source::{AmplitudeClasses, CcdmLayout, CcdmSpec, SourceMode, SymbolSource};
