//! Per-channel NLI coefficients: discrete link kernels, the moment–kernel
//! estimator with its GN/EGN reductions, and a direct first-order
//! perturbation Monte-Carlo.

mod cube;
mod kernels;
mod mc;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

pub use cube::{Assignment, KernelCube};
pub use kernels::{channel_kernels, sci_kernels, xpm_kernels, EtaParts, GroupKernels, GroupKind, KernelSet, ModelConfig};
pub use mc::{eta_rp1_mc, McConfig};

use crate::error::{config, Result};
use crate::formats::Constellation4D;
use crate::link::LinkSpec;
use crate::moments::{exact_iid_moments, gaussian_reference, MomentProvider};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimator {
    FourD,
    GN,
    EGN,
    RP1MC,
    SSFM,
}

impl Estimator {
    pub const ALL: [Estimator; 5] = [Estimator::FourD, Estimator::GN, Estimator::EGN, Estimator::RP1MC, Estimator::SSFM];

    pub fn is_stochastic(self) -> bool {
        matches!(self, Estimator::RP1MC | Estimator::SSFM)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::FourD => "4D",
            Estimator::GN => "GN",
            Estimator::EGN => "EGN",
            Estimator::RP1MC => "RP1MC",
            Estimator::SSFM => "SSFM",
        })
    }
}

impl FromStr for Estimator {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "4D" | "FOURD" => Ok(Estimator::FourD),
            "GN" => Ok(Estimator::GN),
            "EGN" => Ok(Estimator::EGN),
            "RP1MC" | "RP1-MC" => Ok(Estimator::RP1MC),
            "SSFM" => Ok(Estimator::SSFM),
            _ => Err(config(format!("unknown estimator `{s}` (expected 4D, GN, EGN, RP1MC or SSFM)"))),
        }
    }
}

/// η of one channel, linear units (1/W²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelEta {
    pub index: usize,
    pub f_center: f64,
    pub eta: f64,
    pub sci: f64,
    /// Everything generated by other channels: cross-phase and spill-over.
    pub xpm: f64,
    /// Standard error of `eta` in dB, for sampled estimators.
    pub stderr_db: Option<f64>,
}

impl ChannelEta {
    pub fn eta_db(&self) -> f64 {
        crate::to_db(self.eta)
    }
    pub fn sci_db(&self) -> f64 {
        crate::to_db(self.sci)
    }
    pub fn xpm_db(&self) -> f64 {
        crate::to_db(self.xpm)
    }
}

#[derive(Debug, Clone)]
pub struct EtaReport {
    pub estimator: Estimator,
    pub format: String,
    /// Fingerprint of the configuration that produced the report.
    pub link_hash: String,
    pub channels: Vec<ChannelEta>,
}

impl EtaReport {
    pub fn channel(&self, index: usize) -> Option<&ChannelEta> {
        self.channels.iter().find(|c| c.index == index)
    }
}

/// Kernels of the requested channels (all channels if `channels` is empty).
pub fn link_kernels(link: &LinkSpec, cfg: &ModelConfig, channels: &[usize]) -> Vec<KernelSet> {
    let list: Vec<usize> = if channels.is_empty() { (0..link.grid.n_channels()).collect() } else { channels.to_vec() };
    list.into_iter().map(|i| channel_kernels(link, i, cfg)).collect()
}

/// Contracts precomputed kernels with a moment provider.
pub fn eta_from_kernels(
    link: &LinkSpec,
    kernels: &[KernelSet],
    moments: &dyn MomentProvider,
    estimator: Estimator,
) -> Result<EtaReport> {
    let channels = kernels
        .par_iter()
        .map(|ks| {
            let parts = ks.evaluate(link, moments)?;
            Ok(ChannelEta {
                index: ks.channel,
                f_center: link.grid.center(ks.channel),
                eta: parts.total(),
                sci: parts.sci,
                xpm: parts.xpm + parts.spill,
                stderr_db: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EtaReport { estimator, format: moments.label(), link_hash: String::new(), channels })
}

/// The moment–kernel estimator with the given moments.
pub fn eta_4d(moments: &dyn MomentProvider, link: &LinkSpec, cfg: &ModelConfig) -> Result<EtaReport> {
    eta_from_kernels(link, &link_kernels(link, cfg, &[]), moments, Estimator::FourD)
}

/// Gaussian-signal baseline.
pub fn eta_gn(link: &LinkSpec, cfg: &ModelConfig) -> Result<EtaReport> {
    eta_from_kernels(link, &link_kernels(link, cfg, &[]), &gaussian_reference(), Estimator::GN)
}

/// Moments an i.i.d., polarization-independent model assigns to `format`.
pub fn egn_moments(format: &Constellation4D) -> crate::moments::MomentSet {
    let mut m = exact_iid_moments(&format.polarization_factorized());
    m.format_label = format.label().to_string();
    m
}

/// Enhanced-GN baseline: exact single-slot statistics of each polarization,
/// i.i.d. in time and independent across polarizations.
pub fn eta_egn(format: &Constellation4D, link: &LinkSpec, cfg: &ModelConfig) -> Result<EtaReport> {
    eta_from_kernels(link, &link_kernels(link, cfg, &[]), &egn_moments(format), Estimator::EGN)
}
