use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use num_complex::{Complex32, Complex64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use super::SsfmConfig;
use crate::error::{config, Result};
use crate::formats::{Point4, SymbolSource};
use crate::link::WdmGrid;

/// Sampled dual-polarization WDM field over one periodic frame.
#[derive(Debug, Clone)]
pub struct WaveformFrame {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
    /// THz.
    pub sample_rate: f64,
    pub n_symbols: usize,
    pub samples_per_symbol: usize,
    /// Transmitted symbols of every channel, scaled to the launch power.
    pub symbols: Vec<Vec<Point4>>,
    /// Distance propagated so far, km.
    pub z: f64,
    /// Seed and stream of each channel's source.
    pub seeds: Vec<(u64, u64)>,
}

impl WaveformFrame {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Mean power over both polarizations, W.
    pub fn power(&self) -> f64 {
        (self.x.iter().map(|z| z.norm_sqr()).sum::<f64>() + self.y.iter().map(|z| z.norm_sqr()).sum::<f64>()) / self.len() as f64
    }

    /// Frequency of DFT bin `b`, THz.
    pub fn bin_frequency(&self, b: usize) -> f64 {
        signed_bin(b, self.len()) as f64 * self.sample_rate / self.len() as f64
    }

    /// Bin nearest to frequency `f`.
    pub fn bin_of(&self, f: f64) -> i64 {
        (f * self.len() as f64 / self.sample_rate).round() as i64
    }

    /// Spectral power per channel band `[f_k ± R_s/2]`, W.
    pub fn channel_powers(&self, grid: &WdmGrid) -> Vec<f64> {
        let n = self.len();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let mut sx = self.x.clone();
        let mut sy = self.y.clone();
        fft.process(&mut sx);
        fft.process(&mut sy);
        let half = (self.n_symbols as f64 * (1.0 + grid.rolloff) / 2.0).ceil() as i64;
        (0..grid.n_channels())
            .map(|k| {
                let c = self.bin_of(grid.center(k));
                (-half..=half)
                    .map(|m| {
                        let b = (c + m).rem_euclid(n as i64) as usize;
                        sx[b].norm_sqr() + sy[b].norm_sqr()
                    })
                    .sum::<f64>()
                    / (n * n) as f64
            })
            .collect()
    }
}

pub(crate) fn signed_bin(b: usize, n: usize) -> i64 {
    if b < n.div_ceil(2) {
        b as i64
    } else {
        b as i64 - n as i64
    }
}

/// Root-raised-cosine amplitude response at offset `f` from the carrier.
pub fn rrc(f: f64, symbol_rate: f64, rolloff: f64) -> f64 {
    let a = f.abs();
    let lo = (1.0 - rolloff) * symbol_rate / 2.0;
    let hi = (1.0 + rolloff) * symbol_rate / 2.0;
    if a < lo || (rolloff == 0.0 && a == lo) {
        if rolloff == 0.0 && a == lo {
            return std::f64::consts::FRAC_1_SQRT_2;
        }
        1.0
    } else if a > hi {
        0.0
    } else {
        (0.5 * (1.0 + (std::f64::consts::PI / (rolloff * symbol_rate) * (a - lo)).cos())).sqrt()
    }
}

/// Samples per symbol for the grid: the smallest power of two whose sample
/// rate covers twice the occupied WDM bandwidth, so that first-order mixing
/// products do not alias into any channel.
pub fn default_samples_per_symbol(grid: &WdmGrid) -> usize {
    let occupied = (grid.n_channels() - 1) as f64 * grid.spacing + grid.symbol_rate * (1.0 + grid.rolloff);
    ((2.0 * occupied / grid.symbol_rate).ceil() as usize).next_power_of_two()
}

/// Channel bins as offsets `m` from the carrier bin, with their RRC weights.
pub(crate) fn channel_taps(frame_symbols: usize, grid: &WdmGrid, df: f64) -> Vec<(i64, f64)> {
    let half = (frame_symbols as f64 * (1.0 + grid.rolloff) / 2.0).ceil() as i64;
    (-half..=half)
        .map(|m| (m, rrc(m as f64 * df, grid.symbol_rate, grid.rolloff)))
        .filter(|(_, h)| *h > 0.0)
        .collect()
}

/// Builds one frame: each channel draws `n_symbols` symbols from its source,
/// scaled so that the frame carries exactly its launch power, and is shaped
/// by an RRC filter on its carrier.
pub fn synthesize_wdm(sources: &mut [SymbolSource], grid: &WdmGrid, cfg: &SsfmConfig) -> Result<WaveformFrame> {
    grid.validate()?;
    if sources.len() != grid.n_channels() {
        return Err(config(format!("{} symbol sources for {} channels", sources.len(), grid.n_channels())));
    }
    let sps = cfg.samples_per_symbol.unwrap_or_else(|| default_samples_per_symbol(grid));
    let n_sym = cfg.n_symbols;
    let occupied = (grid.n_channels() - 1) as f64 * grid.spacing + grid.symbol_rate * (1.0 + grid.rolloff);
    let fs = sps as f64 * grid.symbol_rate;
    if fs < 1.25 * occupied {
        return Err(config(format!("sample rate {fs} THz is below 1.25× the occupied bandwidth {occupied} THz")));
    }
    if n_sym < 16 {
        return Err(config("frames need at least 16 symbols"));
    }
    let n = n_sym * sps;
    let df = grid.symbol_rate / n_sym as f64;
    let mut planner = FftPlanner::new();
    let sym_fft = planner.plan_fft_forward(n_sym);
    let taps = channel_taps(n_sym, grid, df);
    let mut sx = vec![Complex64::new(0.0, 0.0); n];
    let mut sy = vec![Complex64::new(0.0, 0.0); n];
    let mut symbols = Vec::with_capacity(sources.len());
    for (k, src) in sources.iter_mut().enumerate() {
        let raw = src.take(n_sym);
        let e = raw.iter().map(Point4::energy).sum::<f64>() / n_sym as f64;
        let s = (grid.powers[k] / e).sqrt();
        let sym: Vec<Point4> = raw.iter().map(|p| Point4::new(p.x * s, p.y * s)).collect();
        let mut ax: Vec<Complex64> = sym.iter().map(|p| p.x).collect();
        let mut ay: Vec<Complex64> = sym.iter().map(|p| p.y).collect();
        sym_fft.process(&mut ax);
        sym_fft.process(&mut ay);
        let c = (grid.center(k) / df).round() as i64;
        for &(m, h) in &taps {
            let b = (c + m).rem_euclid(n as i64) as usize;
            let j = m.rem_euclid(n_sym as i64) as usize;
            sx[b] += ax[j] * (h * sps as f64);
            sy[b] += ay[j] * (h * sps as f64);
        }
        symbols.push(sym);
    }
    let ifft = planner.plan_fft_inverse(n);
    ifft.process(&mut sx);
    ifft.process(&mut sy);
    let scale = 1.0 / n as f64;
    sx.iter_mut().chain(sy.iter_mut()).for_each(|z| *z *= scale);
    Ok(WaveformFrame {
        x: sx,
        y: sy,
        sample_rate: fs,
        n_symbols: n_sym,
        samples_per_symbol: sps,
        symbols,
        z: 0.0,
        seeds: sources.iter().map(SymbolSource::seed).collect(),
    })
}

/// Adds circular white Gaussian noise of total two-polarization PSD `psd`
/// (W/THz) over the whole simulation bandwidth.
pub fn add_awgn(frame: &mut WaveformFrame, psd: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = (psd * frame.sample_rate / 4.0).sqrt();
    for z in frame.x.iter_mut().chain(frame.y.iter_mut()) {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *z += Complex64::new(re, im) * sigma;
    }
}

/// Recovered symbols of channel `k`: carrier removal, inverse dispersion over
/// `total_length`, matched RRC filtering and symbol-rate sampling.
pub fn receive(frame: &WaveformFrame, grid: &WdmGrid, beta2: f64, beta3: f64, total_length: f64, k: usize) -> Vec<Point4> {
    let n = frame.len();
    let n_sym = frame.n_symbols;
    let df = grid.symbol_rate / n_sym as f64;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut sx = frame.x.clone();
    let mut sy = frame.y.clone();
    fft.process(&mut sx);
    fft.process(&mut sy);
    let c = frame.bin_of(grid.center(k));
    let mut yx = vec![Complex64::new(0.0, 0.0); n_sym];
    let mut yy = vec![Complex64::new(0.0, 0.0); n_sym];
    for (m, h) in channel_taps(n_sym, grid, df) {
        let b = (c + m).rem_euclid(n as i64) as usize;
        let w = 2.0 * std::f64::consts::PI * frame.bin_frequency(b);
        let cd = Complex64::from_polar(h, super::propagation_constant(beta2, beta3, w) * total_length);
        let j = m.rem_euclid(n_sym as i64) as usize;
        yx[j] += sx[b] * cd;
        yy[j] += sy[b] * cd;
    }
    let ifft = planner.plan_fft_inverse(n_sym);
    ifft.process(&mut yx);
    ifft.process(&mut yy);
    let scale = 1.0 / n as f64;
    yx.iter().zip(&yy).map(|(a, b)| Point4::new(a * scale, b * scale)).collect()
}

/// Sums for the effective SNR of one channel: `Σ X^H Y`, `Σ |X|²`, `Σ |Y|²`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SnrAccumulator {
    pub xy: Complex64,
    pub xx: f64,
    pub yy: f64,
    pub count: usize,
}

impl SnrAccumulator {
    pub fn add(&mut self, tx: &[Point4], rx: &[Point4]) {
        for (a, b) in tx.iter().zip(rx) {
            self.xy += a.x.conj() * b.x + a.y.conj() * b.y;
            self.xx += a.energy();
            self.yy += b.energy();
        }
        self.count += tx.len();
    }

    pub fn merge(&mut self, o: &SnrAccumulator) {
        self.xy += o.xy;
        self.xx += o.xx;
        self.yy += o.yy;
        self.count += o.count;
    }

    /// `E|X|² / E|Y/a − X|²` with `a = E[X^H Y]/E|X|²`.
    pub fn snr(&self) -> f64 {
        let a2 = self.xy.norm_sqr() / (self.xx * self.xx);
        let err = (self.yy - self.xy.norm_sqr() / self.xx) / a2;
        self.xx / err.max(f64::MIN_POSITIVE)
    }
}

/// Effective SNR of received symbols against the transmitted ones.
pub fn snr_eff(tx: &[Point4], rx: &[Point4]) -> f64 {
    let mut acc = SnrAccumulator::default();
    acc.add(tx, rx);
    acc.snr()
}

/// Writes `path` as interleaved little-endian complex64 samples (x then y per
/// time step) and `path.json` with the frame metadata.
pub fn write_waveform(frame: &WaveformFrame, grid: &WdmGrid, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(frame.len() * 16);
    for (a, b) in frame.x.iter().zip(&frame.y) {
        for z in [a, b] {
            let c = Complex32::new(z.re as f32, z.im as f32);
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    std::fs::File::create(path)?.write_all(&buf)?;
    let mut meta = String::from("{\n");
    let _ = writeln!(meta, "  \"format\": \"complex64-le, interleaved x y\",");
    let _ = writeln!(meta, "  \"samples\": {},", frame.len());
    let _ = writeln!(meta, "  \"sample_rate_thz\": {},", frame.sample_rate);
    let _ = writeln!(meta, "  \"symbols_per_channel\": {},", frame.n_symbols);
    let _ = writeln!(meta, "  \"z_km\": {},", frame.z);
    let _ = writeln!(meta, "  \"symbol_rate_thz\": {},", grid.symbol_rate);
    let _ = writeln!(meta, "  \"spacing_thz\": {},", grid.spacing);
    let _ = writeln!(meta, "  \"rolloff\": {},", grid.rolloff);
    let centers: Vec<String> = grid.centers().iter().map(|f| f.to_string()).collect();
    let _ = writeln!(meta, "  \"centers_thz\": [{}],", centers.join(", "));
    let seeds: Vec<String> = frame.seeds.iter().map(|(s, t)| format!("[{s}, {t}]")).collect();
    let _ = writeln!(meta, "  \"seeds\": [{}]", seeds.join(", "));
    meta.push_str("}\n");
    let mut side = path.as_os_str().to_owned();
    side.push(".json");
    std::fs::write(side, meta)?;
    Ok(())
}
