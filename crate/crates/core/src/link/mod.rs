//! Fiber and WDM link parameters, the Raman-tilted power profile and the
//! four-wave-mixing efficiency.
//!
//! Units everywhere: THz, km, W, ps²/km, ps³/km, 1/W/km/THz.

mod mu;

pub use mu::{fwm_efficiency, MuEvaluator};

use crate::error::{config, Result};

/// Speed of light in nm/ps.
pub const C_NM_PER_PS: f64 = 299_792.458;
/// dB/km → 1/km (power).
pub const DB_PER_NEPER: f64 = 4.342_944_819_032_518;

#[derive(Debug, Clone, PartialEq)]
pub struct FiberParams {
    /// Power attenuation, 1/km.
    pub alpha: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub gamma: f64,
    /// Raman gain slope.
    pub cr: f64,
    pub span_length: f64,
    pub n_spans: usize,
}

impl FiberParams {
    /// Builds parameters from datasheet quantities: attenuation in dB/km,
    /// dispersion `d` in ps/nm/km and slope `s` in ps/nm²/km at `wavelength_nm`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_engineering(
        alpha_db_km: f64,
        d: f64,
        s: f64,
        wavelength_nm: f64,
        gamma: f64,
        cr: f64,
        span_length: f64,
        n_spans: usize,
    ) -> Result<Self> {
        let l = wavelength_nm;
        let beta2 = -d * l * l / (2.0 * std::f64::consts::PI * C_NM_PER_PS);
        let beta3 = l.powi(4) / (4.0 * std::f64::consts::PI.powi(2) * C_NM_PER_PS * C_NM_PER_PS) * (s + 2.0 * d / l);
        let f = FiberParams { alpha: alpha_db_km / DB_PER_NEPER, beta2, beta3, gamma, cr, span_length, n_spans };
        f.validate()?;
        Ok(f)
    }

    /// Standard single-mode fiber as used throughout the examples:
    /// 0.2 dB/km, 17 ps/nm/km, 0.067 ps/nm²/km, γ = 1.2 /W/km.
    pub fn ssmf(cr: f64, span_length: f64, n_spans: usize) -> Self {
        Self::from_engineering(0.2, 17.0, 0.067, 1550.0, 1.2, cr, span_length, n_spans).expect("valid defaults")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(config("attenuation must be positive"));
        }
        if !(self.gamma >= 0.0) {
            return Err(config("nonlinear coefficient must be non-negative"));
        }
        if !(self.cr >= 0.0) {
            return Err(config("Raman gain slope must be non-negative"));
        }
        if !(self.span_length > 0.0 && self.span_length.is_finite()) {
            return Err(config("span length must be positive"));
        }
        if self.n_spans < 1 {
            return Err(config("at least one span is required"));
        }
        if !(self.beta2.is_finite() && self.beta3.is_finite()) {
            return Err(config("dispersion must be finite"));
        }
        Ok(())
    }

    pub fn total_length(&self) -> f64 {
        self.span_length * self.n_spans as f64
    }
}

/// Equally spaced WDM comb, symmetric about 0 THz.
#[derive(Debug, Clone, PartialEq)]
pub struct WdmGrid {
    pub symbol_rate: f64,
    pub spacing: f64,
    pub rolloff: f64,
    /// Launch power per channel, W.
    pub powers: Vec<f64>,
}

impl WdmGrid {
    pub fn uniform(n_channels: usize, symbol_rate: f64, spacing: f64, rolloff: f64, power: f64) -> Result<Self> {
        let g = WdmGrid { symbol_rate, spacing, rolloff, powers: vec![power; n_channels] };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.powers.is_empty() {
            return Err(config("the grid has no channels"));
        }
        if !(self.symbol_rate > 0.0) {
            return Err(config("symbol rate must be positive"));
        }
        if !(0.0..=1.0).contains(&self.rolloff) {
            return Err(config("roll-off must lie in [0, 1]"));
        }
        if self.powers.len() > 1 && self.spacing < self.symbol_rate * (1.0 + self.rolloff) * (1.0 - 1e-12) {
            return Err(config(format!(
                "channel spacing {} THz is below the occupied bandwidth {} THz",
                self.spacing,
                self.symbol_rate * (1.0 + self.rolloff)
            )));
        }
        if self.powers.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(config("channel powers must be positive"));
        }
        Ok(())
    }

    pub fn n_channels(&self) -> usize {
        self.powers.len()
    }

    /// Center frequency of channel `k` (0-based), THz.
    pub fn center(&self, k: usize) -> f64 {
        (k as f64 - (self.n_channels() as f64 - 1.0) / 2.0) * self.spacing
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_channels()).map(|k| self.center(k)).collect()
    }

    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }

    /// Transmitted PSD under the rectangular approximation, W/THz.
    pub fn psd(&self, f: f64) -> f64 {
        (0..self.n_channels())
            .find(|&k| (f - self.center(k)).abs() <= 0.5 * self.symbol_rate)
            .map_or(0.0, |k| self.powers[k] / self.symbol_rate)
    }
}

/// How the per-span FWM efficiencies of identical spans are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpanSum {
    /// Phased sum with the inter-span mismatch `exp(-jφ·(j-1)·L_s)`.
    #[default]
    Coherent,
    /// Powers add: kernels scale with the number of spans.
    Incoherent,
    /// Unphased sum `N_s·μ_span`.
    Plain,
}

impl std::str::FromStr for SpanSum {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coherent" => Ok(SpanSum::Coherent),
            "incoherent" => Ok(SpanSum::Incoherent),
            "plain" => Ok(SpanSum::Plain),
            _ => Err(config(format!("span_sum must be coherent, incoherent or plain (got `{s}`)"))),
        }
    }
}

impl std::fmt::Display for SpanSum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SpanSum::Coherent => "coherent",
            SpanSum::Incoherent => "incoherent",
            SpanSum::Plain => "plain",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub fiber: FiberParams,
    pub grid: WdmGrid,
    pub span_sum: SpanSum,
}

impl LinkSpec {
    pub fn new(fiber: FiberParams, grid: WdmGrid) -> Result<Self> {
        fiber.validate()?;
        grid.validate()?;
        Ok(LinkSpec { fiber, grid, span_sum: SpanSum::default() })
    }

    pub fn profile(&self) -> IsrsProfile<'_> {
        IsrsProfile { fiber: &self.fiber, grid: &self.grid }
    }
}

/// `(1 − e^{−αz})/α`, with a series near `αz = 0`.
pub fn effective_length(alpha: f64, z: f64) -> f64 {
    let x = alpha * z;
    if x.abs() < 1e-6 {
        z * (1.0 - x / 2.0 + x * x / 6.0)
    } else {
        -(-x).exp_m1() / alpha
    }
}

/// Phase mismatch `4π²(f1−fi)(f2−fi)[β2 + π(f1+f2)β3]` in rad/km, where `f1`,
/// `f2` are the non-conjugated frequencies and the product lands on `fi`.
pub fn phase_mismatch(f1: f64, f2: f64, fi: f64, beta2: f64, beta3: f64) -> f64 {
    4.0 * std::f64::consts::PI.powi(2) * (f1 - fi) * (f2 - fi) * (beta2 + std::f64::consts::PI * (f1 + f2) * beta3)
}

fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 + x * x / 6.0
    } else {
        x.sinh() / x
    }
}

/// Signal power profile along a span under the triangular Raman gain model.
#[derive(Debug, Clone, Copy)]
pub struct IsrsProfile<'a> {
    pub fiber: &'a FiberParams,
    pub grid: &'a WdmGrid,
}

impl IsrsProfile<'_> {
    /// Raman tilt exponent `P_tot·C_r·L_eff(z)`, 1/THz.
    pub fn tilt(&self, z: f64) -> f64 {
        self.grid.total_power() * self.fiber.cr * effective_length(self.fiber.alpha, z)
    }

    /// `∫ G_Tx(ν) e^{−aν} dν` for the rectangular PSD.
    fn normalization(&self, a: f64) -> f64 {
        let rs = self.grid.symbol_rate;
        (0..self.grid.n_channels())
            .map(|k| self.grid.powers[k] * (-a * self.grid.center(k)).exp() * sinhc(a * rs / 2.0))
            .sum()
    }

    /// Ratio of local to launched PSD at distance `z` into a span.
    pub fn rho(&self, z: f64, f: f64) -> f64 {
        let loss = (-self.fiber.alpha * z).exp();
        if self.fiber.cr == 0.0 {
            return loss;
        }
        let a = self.tilt(z);
        self.grid.total_power() * loss * (-a * f).exp() / self.normalization(a)
    }

    /// `ρ(z, f) / e^{−αz}` as a function of `u = e^{−αz}`.
    pub(crate) fn tilt_factor_u(&self, u: f64, f: f64) -> f64 {
        if self.fiber.cr == 0.0 {
            return 1.0;
        }
        let a = self.grid.total_power() * self.fiber.cr * (1.0 - u) / self.fiber.alpha;
        self.grid.total_power() * (-a * f).exp() / self.normalization(a)
    }
}

/// [`IsrsProfile::rho`] as a free function.
pub fn isrs_power_profile(grid: &WdmGrid, fiber: &FiberParams, z: f64, f: f64) -> f64 {
    IsrsProfile { fiber, grid }.rho(z, f)
}
