//! Split-step Fourier solution of the Manakov equation over periodic WDM
//! frames, with the Raman tilt applied as a frequency-dependent gain taken
//! from the link's power profile.
//!
//! Conventions: the field of a tone at baseband frequency `f` is
//! `e^{j2πft}`, the forward DFT is `Σ a[t]e^{−j2πft}`, and a component at
//! angular offset `ω` accumulates phase `−β(ω)z` with
//! `β(ω) = β2ω²/2 + β3ω³/6`. The Kerr term rotates by `−(8/9)γ|E|²z`.

mod propagate;
mod waveform;

use rayon::prelude::*;

pub use propagate::propagate;
pub use waveform::{
    add_awgn, default_samples_per_symbol, receive, rrc, snr_eff, synthesize_wdm, write_waveform, SnrAccumulator,
    WaveformFrame,
};

use crate::error::{config, numerical, Result};
use crate::formats::SymbolSource;
use crate::link::LinkSpec;
use crate::nli::ChannelEta;

/// Step-size control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// Constant step, km.
    Fixed(f64),
    /// Step such that the Kerr phase of the mean total power stays below the
    /// given value, rad.
    NonlinearPhase(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsfmConfig {
    pub n_symbols: usize,
    pub n_frames: usize,
    /// Defaults to [`default_samples_per_symbol`].
    pub samples_per_symbol: Option<usize>,
    pub step: StepRule,
    /// Upper bound on any step, km.
    pub max_step: f64,
    /// Repeat the first frame at half the step and fail if η moves by more
    /// than [`CONVERGENCE_DB`].
    pub check_convergence: bool,
}

pub const CONVERGENCE_DB: f64 = 0.05;

impl Default for SsfmConfig {
    fn default() -> Self {
        SsfmConfig {
            n_symbols: 1 << 14,
            n_frames: 4,
            samples_per_symbol: None,
            step: StepRule::NonlinearPhase(2e-3),
            max_step: 0.5,
            check_convergence: true,
        }
    }
}

impl SsfmConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = match self.step {
            StepRule::Fixed(h) => h > 0.0 && h.is_finite(),
            StepRule::NonlinearPhase(p) => p > 0.0 && p.is_finite(),
        };
        if !ok || !(self.max_step > 0.0) {
            return Err(config("step parameters must be positive"));
        }
        if self.n_frames == 0 {
            return Err(config("at least one frame is needed"));
        }
        Ok(())
    }

    fn halved(&self) -> SsfmConfig {
        let step = match self.step {
            StepRule::Fixed(h) => StepRule::Fixed(h / 2.0),
            StepRule::NonlinearPhase(p) => StepRule::NonlinearPhase(p / 2.0),
        };
        SsfmConfig { step, max_step: self.max_step / 2.0, ..self.clone() }
    }
}

pub(crate) fn propagation_constant(beta2: f64, beta3: f64, w: f64) -> f64 {
    beta2 * w * w / 2.0 + beta3 * w * w * w / 6.0
}

/// Result of a split-step run.
#[derive(Debug, Clone)]
pub struct SsfmReport {
    pub channels: Vec<ChannelEta>,
    /// Largest |Δη| in dB seen when halving the step on the first frame.
    pub step_halving_db: Option<f64>,
    pub steps_per_span: usize,
}

fn frame_sources(sources: &[SymbolSource], frame: usize) -> Vec<SymbolSource> {
    sources.iter().map(|s| s.fork(s.seed().1 ^ ((frame as u64 + 1) << 24))).collect()
}

fn run_frame(
    link: &LinkSpec,
    sources: &[SymbolSource],
    frame: usize,
    cfg: &SsfmConfig,
    channels: &[usize],
) -> Result<(Vec<SnrAccumulator>, usize)> {
    let mut srcs = frame_sources(sources, frame);
    let mut w = synthesize_wdm(&mut srcs, &link.grid, cfg)?;
    let steps = propagate(&mut w, link, cfg)?;
    let f = &link.fiber;
    let acc = channels
        .iter()
        .map(|&k| {
            let rx = receive(&w, &link.grid, f.beta2, f.beta3, f.total_length(), k);
            let mut a = SnrAccumulator::default();
            a.add(&w.symbols[k], &rx);
            a
        })
        .collect();
    Ok((acc, steps))
}

fn eta_of(acc: &SnrAccumulator, p: f64) -> f64 {
    1.0 / (acc.snr() * p * p)
}

/// η per channel from split-step simulation of `n_frames` independent frames.
/// `sources[k]` feeds channel `k`; each frame restarts every source on its
/// own substream. `channels` selects the channels to evaluate (all if empty).
pub fn eta_ssfm(link: &LinkSpec, sources: &[SymbolSource], cfg: &SsfmConfig, channels: &[usize]) -> Result<SsfmReport> {
    cfg.validate()?;
    let nch = link.grid.n_channels();
    let list: Vec<usize> = if channels.is_empty() { (0..nch).collect() } else { channels.to_vec() };
    if let Some(k) = list.iter().find(|&&k| k >= nch) {
        return Err(config(format!("channel {k} out of range")));
    }
    let frames: Vec<(Vec<SnrAccumulator>, usize)> =
        (0..cfg.n_frames).into_par_iter().map(|fr| run_frame(link, sources, fr, cfg, &list)).collect::<Result<_>>()?;
    let p = &link.grid.powers;

    let step_halving_db = if cfg.check_convergence {
        let (fine, _) = run_frame(link, sources, 0, &cfg.halved(), &list)?;
        let worst = list
            .iter()
            .enumerate()
            .map(|(j, &k)| (crate::to_db(eta_of(&frames[0].0[j], p[k])) - crate::to_db(eta_of(&fine[j], p[k]))).abs())
            .fold(0.0, f64::max);
        if !(worst < CONVERGENCE_DB) {
            return Err(numerical(format!(
                "halving the split-step size changed η by {worst:.3} dB (limit {CONVERGENCE_DB} dB); use a smaller step"
            )));
        }
        Some(worst)
    } else {
        None
    };

    let out = list
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let mut total = SnrAccumulator::default();
            frames.iter().for_each(|f| total.merge(&f.0[j]));
            let eta = eta_of(&total, p[k]);
            let stderr_db = (frames.len() > 1).then(|| {
                let loo: Vec<f64> = (0..frames.len())
                    .map(|skip| {
                        let mut a = SnrAccumulator::default();
                        frames.iter().enumerate().filter(|(i, _)| *i != skip).for_each(|(_, f)| a.merge(&f.0[j]));
                        crate::to_db(eta_of(&a, p[k]))
                    })
                    .collect();
                let r = loo.len() as f64;
                let m = loo.iter().sum::<f64>() / r;
                ((r - 1.0) / r * loo.iter().map(|v| (v - m).powi(2)).sum::<f64>()).sqrt()
            });
            ChannelEta { index: k, f_center: link.grid.center(k), eta, sci: f64::NAN, xpm: f64::NAN, stderr_db }
        })
        .collect();
    Ok(SsfmReport { channels: out, step_halving_db, steps_per_span: frames[0].1 })
}
