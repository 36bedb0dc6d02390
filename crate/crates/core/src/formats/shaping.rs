use crate::error::{config, numerical, Result};

use super::Constellation4D;

/// A constellation shaped by `p_m ∝ exp(-λ·E_m)` with `E_m` the 4D energy of
/// the (unit-power) base point.
#[derive(Debug, Clone)]
pub struct MaxwellBoltzmannPS {
    pub base: Constellation4D,
    pub lambda: f64,
    pub target_entropy_bits: f64,
    /// The shaped format, renormalized to unit power per polarization.
    pub shaped: Constellation4D,
}

fn mb_probs(energies: &[f64], lambda: f64) -> Vec<f64> {
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = energies.iter().map(|e| (-lambda * (e - e0)).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&q| q > 0.0).map(|q| q * q.log2()).sum::<f64>()
}

/// Finds λ such that the Maxwell–Boltzmann distribution over `base` has the
/// requested entropy (bits per 4D symbol), by bisection.
pub fn fit_mb_entropy(base: &Constellation4D, target_entropy_bits: f64) -> Result<MaxwellBoltzmannPS> {
    let m = base.len();
    let hmax = (m as f64).log2();
    let energies: Vec<f64> = base.points().iter().map(|p| p.energy()).collect();
    let emin = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let n_min = energies.iter().filter(|&&e| e - emin < 1e-9).count();
    let hmin = (n_min as f64).log2();
    if !(target_entropy_bits > hmin && target_entropy_bits <= hmax + 1e-12) {
        return Err(config(format!(
            "target entropy {target_entropy_bits} bits outside ({hmin}, {hmax}] for {}",
            base.label()
        )));
    }
    let label = format!("PS-{}(H={target_entropy_bits})", base.label().trim_start_matches("PM-"));
    let finish = |lambda: f64| -> Result<MaxwellBoltzmannPS> {
        let shaped = base.with_probs(mb_probs(&energies, lambda), label.clone())?;
        Ok(MaxwellBoltzmannPS { base: base.clone(), lambda, target_entropy_bits, shaped })
    };
    if target_entropy_bits >= hmax - 1e-12 {
        return finish(0.0);
    }
    let h = |l: f64| entropy(&mb_probs(&energies, l));
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut grow = 0;
    while h(hi) > target_entropy_bits {
        hi *= 2.0;
        grow += 1;
        if grow > 200 {
            return Err(numerical("entropy bisection bracket did not close"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > target_entropy_bits {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let achieved = h(lambda);
    if (achieved - target_entropy_bits).abs() > 1e-9 {
        return Err(numerical(format!("entropy fit stalled at {achieved} bits (target {target_entropy_bits})")));
    }
    finish(lambda)
}

/// Integer composition of a length-`n` block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositionBlock {
    pub n: usize,
    pub counts: Vec<usize>,
}

impl CompositionBlock {
    pub fn frequencies(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.n as f64).collect()
    }

    /// `KL(counts/n ‖ target)` in bits.
    pub fn kl_bits(&self, target: &[f64]) -> f64 {
        self.frequencies()
            .iter()
            .zip(target)
            .filter(|(q, _)| **q > 0.0)
            .map(|(q, p)| q * (q / p).log2())
            .sum()
    }
}

/// Largest-remainder quantization: `floor(n·p)` first, then the leftover
/// symbols go to the largest fractional parts, ties to the lower index.
pub fn quantize_composition(dist: &[f64], n: usize) -> CompositionBlock {
    assert!(n >= 1, "blocklength must be positive");
    let scaled: Vec<f64> = dist.iter().map(|p| p * n as f64).collect();
    let mut counts: Vec<usize> = scaled.iter().map(|s| s.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..dist.len()).collect();
    let frac = |i: usize| scaled[i] - scaled[i].floor();
    order.sort_by(|&a, &b| frac(b).total_cmp(&frac(a)).then(a.cmp(&b)));
    for &i in order.iter().cycle().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    CompositionBlock { n, counts }
}
