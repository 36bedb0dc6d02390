//! Format strings: a built-in name, `file:<path>`, or
//! `ps:<base>:entropy=<bits>:n=<blocklength|inf>[:layout=per_pol|joint4d]`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::str::FromStr;

use nli_core::formats::{builtin, fit_mb_entropy, load_constellation, CcdmLayout, CcdmSpec};
use nli_core::moments::{default_window, ccdm_windowed_moments, exact_iid_moments, MomentProvider, MomentSet, WindowAlignment};
use nli_core::{Constellation4D, LinkSpec, SymbolSource};

use crate::config::layout_name;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum FormatSpec {
    Builtin(String),
    File(PathBuf),
    Shaped { base: String, entropy_bits: f64, blocklength: Option<usize>, layout: CcdmLayout },
}

impl FromStr for FormatSpec {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = |m: String| CliError::Config(format!("format `{s}`: {m}"));
        if let Some(p) = s.strip_prefix("file:") {
            if p.is_empty() {
                return Err(bad("missing path".into()));
            }
            return Ok(FormatSpec::File(PathBuf::from(p)));
        }
        if let Some(rest) = s.strip_prefix("ps:") {
            let mut parts = rest.split(':');
            let base = parts.next().unwrap_or("").to_string();
            builtin(&base).map_err(|e| bad(e.to_string()))?;
            let (mut entropy, mut n, mut layout) = (None, None, CcdmLayout::PerPolarization);
            for kv in parts {
                let (k, v) = kv.split_once('=').ok_or_else(|| bad(format!("expected key=value, got `{kv}`")))?;
                match k {
                    "entropy" => entropy = Some(v.parse::<f64>().map_err(|_| bad(format!("bad entropy `{v}`")))?),
                    "n" if v == "inf" => n = Some(None),
                    "n" => n = Some(Some(v.parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| bad(format!("bad blocklength `{v}`")))?)),
                    "layout" => {
                        layout = match v {
                            "per_pol" => CcdmLayout::PerPolarization,
                            "joint4d" => CcdmLayout::Joint4D,
                            _ => return Err(bad(format!("layout must be per_pol or joint4d, got `{v}`"))),
                        }
                    }
                    _ => return Err(bad(format!("unknown key `{k}`"))),
                }
            }
            let entropy_bits = entropy.ok_or_else(|| bad("entropy=<bits> is required".into()))?;
            let blocklength = n.ok_or_else(|| bad("n=<blocklength|inf> is required".into()))?;
            return Ok(FormatSpec::Shaped { base, entropy_bits, blocklength, layout });
        }
        builtin(s).map_err(|e| bad(e.to_string()))?;
        Ok(FormatSpec::Builtin(s.to_string()))
    }
}

impl std::fmt::Display for FormatSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FormatSpec::Builtin(n) => f.write_str(n),
            FormatSpec::File(p) => write!(f, "file:{}", p.display()),
            FormatSpec::Shaped { base, entropy_bits, blocklength, layout } => {
                write!(f, "ps:{base}:entropy={entropy_bits}:n=")?;
                match blocklength {
                    Some(n) => write!(f, "{n}")?,
                    None => f.write_str("inf")?,
                }
                if *layout != CcdmLayout::PerPolarization {
                    write!(f, ":layout={}", layout_name(*layout))?;
                }
                Ok(())
            }
        }
    }
}

impl FormatSpec {
    /// Resolves relative constellation paths against `dir`.
    pub fn rebase(&mut self, dir: &Path) {
        if let FormatSpec::File(p) = self {
            if p.is_relative() && !p.exists() {
                *p = dir.join(&*p);
            }
        }
    }

    /// Short, file-name-safe label.
    pub fn label(&self) -> String {
        let raw = match self {
            FormatSpec::Builtin(n) => n.clone(),
            FormatSpec::File(p) => p.file_stem().and_then(|s| s.to_str()).unwrap_or("file").to_string(),
            FormatSpec::Shaped { base, entropy_bits, blocklength, layout } => {
                let mut s = format!("PS-{}-H{}-n", base.trim_start_matches("PM-"), entropy_bits);
                match blocklength {
                    Some(n) => s.push_str(&n.to_string()),
                    None => s.push_str("inf"),
                }
                if *layout == CcdmLayout::Joint4D {
                    s.push_str("-joint4d");
                }
                s
            }
        };
        raw.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect()
    }

    pub fn prepare(&self) -> Result<PreparedFormat, CliError> {
        let core = |e: nli_core::Error| CliError::Config(format!("format `{self}`: {e}"));
        let label = self.label();
        match self {
            FormatSpec::Builtin(n) => Ok(PreparedFormat::iid(builtin(n).map_err(core)?.with_label(label))),
            FormatSpec::File(p) => Ok(PreparedFormat::iid(load_constellation(p).map_err(core)?.with_label(label))),
            FormatSpec::Shaped { base, entropy_bits, blocklength, layout } => {
                let ps = fit_mb_entropy(&builtin(base).map_err(core)?, *entropy_bits).map_err(core)?;
                let target = ps.shaped.with_label(label);
                match blocklength {
                    None => Ok(PreparedFormat::iid(target)),
                    Some(n) => {
                        let spec = CcdmSpec::new(&target, *n, *layout).map_err(core)?;
                        Ok(PreparedFormat { target, ccdm: Some((spec, *layout)) })
                    }
                }
            }
        }
    }
}

/// A format ready for every estimator.
#[derive(Debug, Clone)]
pub struct PreparedFormat {
    /// Single-slot distribution; the n → ∞ target for shaped formats.
    pub target: Constellation4D,
    pub ccdm: Option<(CcdmSpec, CcdmLayout)>,
}

impl PreparedFormat {
    fn iid(target: Constellation4D) -> Self {
        PreparedFormat { target, ccdm: None }
    }

    pub fn label(&self) -> &str {
        self.target.label()
    }

    pub fn source(&self, seed: u64, stream: u64) -> Result<SymbolSource, CliError> {
        match &self.ccdm {
            None => Ok(SymbolSource::iid(self.target.clone(), seed, stream)),
            Some((spec, layout)) => SymbolSource::ccdm(self.target.clone(), spec.n, *layout, seed, stream)
                .map_err(|e| CliError::Config(e.to_string())),
        }
    }

    /// Moments for the moment–kernel estimator. Finite blocklengths use the
    /// window of each channel pair, or `window` if given.
    pub fn moments(&self, link: &LinkSpec, window: Option<usize>) -> Box<dyn MomentProvider> {
        match &self.ccdm {
            None => Box::new(exact_iid_moments(&self.target)),
            Some((spec, _)) => {
                let f = &link.fiber;
                let grid = link.grid.clone();
                let (b2, len, n) = (f.beta2, f.total_length(), spec.n);
                Box::new(WindowCache {
                    spec: spec.clone(),
                    label: self.label().to_string(),
                    window: Box::new(move |i: usize, k: usize| {
                        window.unwrap_or_else(|| {
                            let df = if i == k { grid.symbol_rate } else { grid.center(k) - grid.center(i) };
                            default_window(b2, len, df, grid.symbol_rate, Some(n))
                        })
                    }),
                    cache: Mutex::new(HashMap::new()),
                })
            }
        }
    }

    pub fn iid_moments(&self) -> MomentSet {
        exact_iid_moments(&self.target)
    }
}

type WindowRule = Box<dyn Fn(usize, usize) -> usize + Send + Sync>;

/// Windowed constant-composition moments, computed once per window length.
struct WindowCache {
    spec: CcdmSpec,
    label: String,
    window: WindowRule,
    cache: Mutex<HashMap<usize, MomentSet>>,
}

impl WindowCache {
    fn get(&self, w: usize) -> nli_core::Result<MomentSet> {
        if let Some(m) = self.cache.lock().expect("cache lock").get(&w) {
            return Ok(m.clone());
        }
        let m = ccdm_windowed_moments(&self.spec, w, WindowAlignment::Random, &self.label)?;
        self.cache.lock().expect("cache lock").insert(w, m.clone());
        Ok(m)
    }
}

impl MomentProvider for WindowCache {
    fn label(&self) -> String {
        self.label.clone()
    }
    fn sci(&self, i: usize) -> nli_core::Result<MomentSet> {
        self.get((self.window)(i, i))
    }
    fn xpm(&self, i: usize, k: usize) -> nli_core::Result<MomentSet> {
        self.get((self.window)(i, k))
    }
}
