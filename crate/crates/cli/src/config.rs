//! Scenario files: flat TOML sections with unit-suffixed keys.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use nli_core::formats::CcdmLayout;
use nli_core::nli::{McConfig, ModelConfig};
use nli_core::ssfm::{SsfmConfig, StepRule};
use nli_core::{dbm_to_watt, Estimator, FiberParams, LinkSpec, SpanSum, WdmGrid};

use crate::formats::FormatSpec;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n_channels: usize,
    pub symbol_rate_gbaud: f64,
    pub spacing_ghz: f64,
    pub rolloff: f64,
    /// Launch power per channel.
    pub power_dbm: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { n_channels: 5, symbol_rate_gbaud: 45.0, spacing_ghz: 46.0, rolloff: 0.01, power_dbm: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiberSection {
    pub alpha_db_per_km: f64,
    pub dispersion_ps_per_nm_km: f64,
    pub slope_ps_per_nm2_km: f64,
    pub wavelength_nm: f64,
    pub gamma_per_w_km: f64,
    pub raman_slope_per_w_km_thz: f64,
    pub span_length_km: f64,
    pub n_spans: usize,
    /// coherent | incoherent | plain
    pub span_sum: String,
}

impl Default for FiberSection {
    fn default() -> Self {
        FiberSection {
            alpha_db_per_km: 0.2,
            dispersion_ps_per_nm_km: 17.0,
            slope_ps_per_nm2_km: 0.067,
            wavelength_nm: 1550.0,
            gamma_per_w_km: 1.2,
            raman_slope_per_w_km_thz: 0.0,
            span_length_km: 100.0,
            n_spans: 1,
            span_sum: "coherent".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    pub formats: Vec<String>,
    pub estimators: Vec<String>,
    /// Channels evaluated by the sampled estimators; empty means all.
    pub channels: Vec<usize>,
    pub seed: u64,
    /// Refuse to run without `--full`.
    pub full_only: bool,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        ScenarioSection {
            name: "scenario".into(),
            formats: Vec::new(),
            estimators: Vec::new(),
            channels: Vec::new(),
            seed: 1,
            full_only: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub n_sci: usize,
    pub resolution: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub spill: bool,
    /// Per-pair window: `auto` follows the dispersion memory, a number fixes it.
    pub window_symbols: String,
}

impl Default for ModelSection {
    fn default() -> Self {
        let d = ModelConfig::default();
        ModelSection {
            n_sci: d.n_sci,
            resolution: d.resolution,
            n_min: d.n_min,
            n_max: d.n_max,
            spill: d.spill,
            window_symbols: "auto".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSection {
    pub symbols: usize,
    pub realizations: usize,
}

impl Default for McSection {
    fn default() -> Self {
        McSection { symbols: 64, realizations: 400 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SsfmSection {
    pub symbols: usize,
    pub frames: usize,
    /// 0 picks the smallest alias-free power of two.
    pub samples_per_symbol: usize,
    /// Kerr phase per step; ignored when `step_km` > 0.
    pub nonlinear_phase_rad: f64,
    pub step_km: f64,
    pub max_step_km: f64,
    pub check_convergence: bool,
}

impl Default for SsfmSection {
    fn default() -> Self {
        let d = SsfmConfig::default();
        let phi = match d.step {
            StepRule::NonlinearPhase(p) => p,
            StepRule::Fixed(_) => 2e-3,
        };
        SsfmSection {
            symbols: d.n_symbols,
            frames: d.n_frames,
            samples_per_symbol: 0,
            nonlinear_phase_rad: phi,
            step_km: 0.0,
            max_step_km: d.max_step,
            check_convergence: d.check_convergence,
        }
    }
}

/// A scenario file with every default materialized.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    pub grid: GridSection,
    pub fiber: FiberSection,
    pub model: ModelSection,
    pub mc: McSection,
    pub ssfm: SsfmSection,
}

/// A checked scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub link: LinkSpec,
    pub formats: Vec<FormatSpec>,
    pub estimators: Vec<Estimator>,
    pub channels: Vec<usize>,
    pub model: ModelConfig,
    pub window: Option<usize>,
    pub mc: McConfig,
    pub ssfm: SsfmConfig,
    pub hash: String,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line where `section.key` is set, if it appears in the file.
fn key_line(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(s) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            current = s.trim().to_string();
        } else if current == section {
            let k = line.split('=').next().unwrap_or("").trim();
            if k == key {
                return Some(n + 1);
            }
        }
    }
    None
}

fn at(text: &str, section: &str, key: &str, msg: impl std::fmt::Display) -> CliError {
    match key_line(text, section, key) {
        Some(l) => CliError::Config(format!("line {l}: {section}.{key}: {msg}")),
        None => CliError::Config(format!("{section}.{key}: {msg}")),
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| match e.span() {
            Some(s) => CliError::Config(format!("line {}: {}", line_of(text, s.start), e.message())),
            None => CliError::Config(e.message().to_string()),
        })
    }

    /// The resolved configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the resolved configuration, hex, first 16 digits.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Checks every field; `text` is the source, used for line numbers.
    pub fn resolve(&self, text: &str) -> Result<Scenario, CliError> {
        let g = &self.grid;
        let f = &self.fiber;
        let s = &self.scenario;
        if g.n_channels == 0 {
            return Err(at(text, "grid", "n_channels", "at least one channel is required"));
        }
        if !(g.symbol_rate_gbaud > 0.0) {
            return Err(at(text, "grid", "symbol_rate_gbaud", "must be positive"));
        }
        if !(f.span_length_km > 0.0 && f.span_length_km.is_finite()) {
            return Err(at(text, "fiber", "span_length_km", "span length must be positive"));
        }
        if f.n_spans == 0 {
            return Err(at(text, "fiber", "n_spans", "at least one span is required"));
        }
        if !(f.alpha_db_per_km > 0.0) {
            return Err(at(text, "fiber", "alpha_db_per_km", "attenuation must be positive"));
        }
        if !(f.gamma_per_w_km >= 0.0) {
            return Err(at(text, "fiber", "gamma_per_w_km", "must be non-negative"));
        }
        if !(f.raman_slope_per_w_km_thz >= 0.0) {
            return Err(at(text, "fiber", "raman_slope_per_w_km_thz", "must be non-negative"));
        }
        let span_sum: SpanSum = f.span_sum.parse().map_err(|e| at(text, "fiber", "span_sum", e))?;
        let fiber = FiberParams::from_engineering(
            f.alpha_db_per_km,
            f.dispersion_ps_per_nm_km,
            f.slope_ps_per_nm2_km,
            f.wavelength_nm,
            f.gamma_per_w_km,
            f.raman_slope_per_w_km_thz,
            f.span_length_km,
            f.n_spans,
        )
        .map_err(|e| at(text, "fiber", "span_length_km", e))?;
        let grid = WdmGrid::uniform(
            g.n_channels,
            g.symbol_rate_gbaud * 1e-3,
            g.spacing_ghz * 1e-3,
            g.rolloff,
            dbm_to_watt(g.power_dbm),
        )
        .map_err(|e| at(text, "grid", "spacing_ghz", e))?;
        let mut link = LinkSpec::new(fiber, grid).map_err(|e| CliError::Config(e.to_string()))?;
        link.span_sum = span_sum;

        if s.formats.is_empty() {
            return Err(at(text, "scenario", "formats", "the format list is empty"));
        }
        let formats = s
            .formats
            .iter()
            .map(|x| x.parse::<FormatSpec>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| at(text, "scenario", "formats", e))?;
        if s.estimators.is_empty() {
            return Err(at(text, "scenario", "estimators", "the estimator list is empty"));
        }
        let mut estimators = Vec::new();
        for e in &s.estimators {
            let e: Estimator = e.parse().map_err(|e| at(text, "scenario", "estimators", e))?;
            if !estimators.contains(&e) {
                estimators.push(e);
            }
        }
        if let Some(&c) = s.channels.iter().find(|&&c| c >= g.n_channels) {
            return Err(at(text, "scenario", "channels", format!("channel {c} does not exist")));
        }
        let channels = if s.channels.is_empty() { (0..g.n_channels).collect() } else { s.channels.clone() };

        let m = &self.model;
        if m.n_min == 0 || m.n_min > m.n_max || m.n_sci == 0 || !(m.resolution > 0.0) {
            return Err(at(text, "model", "n_min", "bin counts must satisfy 0 < n_min <= n_max and resolution > 0"));
        }
        let model = ModelConfig { n_sci: m.n_sci, resolution: m.resolution, n_min: m.n_min, n_max: m.n_max, spill: m.spill, ..ModelConfig::default() };
        let window = match m.window_symbols.as_str() {
            "auto" => None,
            w => Some(
                w.parse::<usize>()
                    .ok()
                    .filter(|&w| w >= nli_core::moments::MIN_WINDOW)
                    .ok_or_else(|| at(text, "model", "window_symbols", "expected `auto` or an integer >= 3"))?,
            ),
        };

        if self.mc.symbols < 2 || self.mc.realizations < 2 {
            return Err(at(text, "mc", "realizations", "need at least two symbols and two realizations"));
        }
        let mc = McConfig { n: self.mc.symbols, realizations: self.mc.realizations, spill: m.spill };

        let q = &self.ssfm;
        let ssfm = SsfmConfig {
            n_symbols: q.symbols,
            n_frames: q.frames,
            samples_per_symbol: (q.samples_per_symbol > 0).then_some(q.samples_per_symbol),
            step: if q.step_km > 0.0 { StepRule::Fixed(q.step_km) } else { StepRule::NonlinearPhase(q.nonlinear_phase_rad) },
            max_step: q.max_step_km,
            check_convergence: q.check_convergence,
        };
        ssfm.validate().map_err(|e| at(text, "ssfm", "nonlinear_phase_rad", e))?;
        if q.symbols < 16 {
            return Err(at(text, "ssfm", "symbols", "at least 16 symbols per frame"));
        }

        Ok(Scenario {
            config: self.clone(),
            link,
            formats,
            estimators,
            channels,
            model,
            window,
            mc,
            ssfm,
            hash: self.hash(),
        })
    }
}

impl Scenario {
    pub fn from_text(text: &str) -> Result<Scenario, CliError> {
        ScenarioConfig::parse(text)?.resolve(text)
    }

    pub fn load(path: &std::path::Path) -> Result<Scenario, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut s = Self::from_text(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            e => e,
        })?;
        let base = path.parent().unwrap_or(std::path::Path::new("."));
        for f in &mut s.formats {
            f.rebase(base);
        }
        Ok(s)
    }

    /// Replaces the seed and refreshes the hash.
    pub fn with_seed(mut self, seed: u64) -> Scenario {
        self.config.scenario.seed = seed;
        self.hash = self.config.hash();
        self
    }

    pub fn seed(&self) -> u64 {
        self.config.scenario.seed
    }
}

pub(crate) fn layout_name(l: CcdmLayout) -> &'static str {
    match l {
        CcdmLayout::PerPolarization => "per_pol",
        CcdmLayout::Joint4D => "joint4d",
    }
}
