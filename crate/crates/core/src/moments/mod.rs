//! Statistical moments of modulation formats, classified by time-slot
//! coincidence pattern.

mod class;
mod windowed;

use std::collections::BTreeMap;

use num_complex::Complex64;

pub use class::{universe, Factor, Monomial, PatternClass, Pol};
pub use windowed::{ccdm_windowed_moments, default_window, windowed_moments, WindowAlignment, MIN_WINDOW};

use crate::error::{Error, Result};
use crate::formats::{CcdmSpec, Constellation4D};

/// Moment values per pattern class, for a unit-power format.
#[derive(Debug, Clone)]
pub struct MomentSet {
    pub values: BTreeMap<PatternClass, Complex64>,
    /// Standard errors of sampled estimates; empty for exact sets.
    pub stderr: BTreeMap<PatternClass, f64>,
    /// Averaging window in symbols; `None` for stationary (infinite) statistics.
    pub window: Option<usize>,
    pub format_label: String,
}

impl MomentSet {
    fn from_fn(label: impl Into<String>, window: Option<usize>, f: impl Fn(&PatternClass) -> Complex64) -> Self {
        let values = universe().into_iter().map(|c| {
            let v = f(&c);
            (c, v)
        });
        MomentSet { values: values.collect(), stderr: BTreeMap::new(), window, format_label: label.into() }
    }

    pub fn get(&self, c: &PatternClass) -> Result<Complex64> {
        self.values
            .get(c)
            .copied()
            .ok_or_else(|| Error::Contract(format!("moment set `{}` has no class {c}", self.format_label)))
    }

    /// `class = value ± stderr` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (c, v) in &self.values {
            let e = self.stderr.get(c).map_or(String::new(), |e| format!(" ± {e:.3e}"));
            s.push_str(&format!("{c} = {:.12e}{:+.12e}j{e}\n", v.re, v.im));
        }
        s
    }
}

/// Exact moments of i.i.d. symbols drawn from `c`: distinct slots are
/// independent, so each class is a product of single-slot moments.
pub fn exact_iid_moments(c: &Constellation4D) -> MomentSet {
    MomentSet::from_fn(c.label(), None, |cls| cls.slots().iter().map(|m| c.moment(*m)).product())
}

/// Moments of a unit-power circularly-symmetric complex Gaussian per
/// polarization with independent polarizations: `E[x^a x*^b] = δ_ab a!`.
pub fn gaussian_reference() -> MomentSet {
    let fact = |k: u8| (1..=k as u64).product::<u64>() as f64;
    MomentSet::from_fn("Gaussian", None, |cls| {
        cls.slots()
            .iter()
            .map(|m| if m[0] == m[1] && m[2] == m[3] { Complex64::new(fact(m[0]) * fact(m[2]), 0.0) } else { Complex64::new(0.0, 0.0) })
            .product()
    })
}

/// Supplies the moment set used for a given interaction.
pub trait MomentProvider: Sync {
    fn label(&self) -> String;
    /// Moments of channel `i` for its self-channel term.
    fn sci(&self, i: usize) -> Result<MomentSet>;
    /// Moments of interferer `k` in its cross-phase term on channel `i`.
    fn xpm(&self, i: usize, k: usize) -> Result<MomentSet>;
}

impl MomentProvider for MomentSet {
    fn label(&self) -> String {
        self.format_label.clone()
    }
    fn sci(&self, _i: usize) -> Result<MomentSet> {
        Ok(self.clone())
    }
    fn xpm(&self, _i: usize, _k: usize) -> Result<MomentSet> {
        Ok(self.clone())
    }
}

/// Finite-blocklength moments with a pair-dependent window: the window for a
/// channel pair is `window(i, k)` (with `k = i` for the self-channel term).
pub struct WindowedCcdm<F: Fn(usize, usize) -> usize + Sync> {
    pub spec: CcdmSpec,
    pub label: String,
    pub window: F,
    pub alignment: WindowAlignment,
}

impl<F: Fn(usize, usize) -> usize + Sync> MomentProvider for WindowedCcdm<F> {
    fn label(&self) -> String {
        self.label.clone()
    }
    fn sci(&self, i: usize) -> Result<MomentSet> {
        ccdm_windowed_moments(&self.spec, (self.window)(i, i), self.alignment, &self.label)
    }
    fn xpm(&self, i: usize, k: usize) -> Result<MomentSet> {
        ccdm_windowed_moments(&self.spec, (self.window)(i, k), self.alignment, &self.label)
    }
}
