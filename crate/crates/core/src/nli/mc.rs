//! Direct Monte-Carlo of the first-order perturbation field on periodic
//! frames, using the same discrete FWM efficiencies as the kernels but no
//! moment factorization.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use super::cube::{bin_offset_lo, carrier_offset, mu_cube, Assignment};
use super::kernels::{group_assignments, spill_groups, GroupKind};
use super::ChannelEta;
use crate::error::{config, Result};
use crate::formats::SymbolSource;
use crate::link::LinkSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    /// Symbols (= bins) per channel and frame.
    pub n: usize,
    pub realizations: usize,
    /// Include spill-over products of neighbouring channels.
    pub spill: bool,
}

struct Term {
    a: Assignment,
    weight: f64,
    mu: Vec<Complex64>,
    sci: bool,
    off: i64,
}

#[derive(Clone, Copy, Default)]
struct Stats {
    d2: [f64; 3],
    xd: [Complex64; 3],
    x2: f64,
}

/// Spectra `A_p(m)` of one frame, indexed by `m − m_lo`.
fn spectra(sym: &[crate::formats::Point4], fft: &dyn rustfft::Fft<f64>, m_lo: i64) -> [Vec<Complex64>; 2] {
    let n = sym.len();
    let mut out = [Vec::new(), Vec::new()];
    for (p, o) in out.iter_mut().enumerate() {
        let mut buf: Vec<Complex64> = sym.iter().map(|s| if p == 0 { s.x } else { s.y }).collect();
        fft.process(&mut buf);
        *o = (0..n).map(|j| buf[(m_lo + j as i64).rem_euclid(n as i64) as usize]).collect();
    }
    out
}

/// Estimates η of channel `i` by drawing independent frames for every channel
/// from forks of `src` and evaluating the first-order field on all `n` slots.
/// The reported standard error is a jackknife over realizations.
pub fn eta_rp1_mc(src: &SymbolSource, link: &LinkSpec, i: usize, cfg: &McConfig) -> Result<ChannelEta> {
    if cfg.realizations < 2 {
        return Err(config("at least two realizations are needed"));
    }
    let n = cfg.n;
    let nch = link.grid.n_channels();
    let p = &link.grid.powers;
    let mut kinds = vec![GroupKind::SelfChannel];
    for k in (0..nch).filter(|&k| k != i) {
        kinds.push(GroupKind::CrossPhase(k));
        if cfg.spill {
            kinds.extend(spill_groups(link, i, k).into_iter().map(|(g, _)| g));
        }
    }
    let assignments: Vec<(Assignment, bool)> = kinds
        .into_iter()
        .flat_map(|g| group_assignments(i, g).into_iter().map(move |a| (a, g == GroupKind::SelfChannel)))
        .collect();
    let terms: Vec<Term> = assignments
        .into_iter()
        .map(|(a, sci)| Term { a, weight: (p[a.0[0]] * p[a.0[1]] * p[a.0[2]] / (4.0 * p[i])).sqrt(), mu: mu_cube(link, i, a, n), sci, off: carrier_offset(link, i, a, n) })
        .collect();
    let m_lo = bin_offset_lo(n);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let scale = Complex64::new(0.0, 8.0 / 9.0 * link.fiber.gamma) / (n * n) as f64;
    let base = src.seed().1 << 40;

    let stats: Vec<Stats> = (0..cfg.realizations)
        .into_par_iter()
        .map(|r| {
            let frames: Vec<Vec<crate::formats::Point4>> =
                (0..nch).map(|c| src.fork(base ^ ((r as u64) << 12) ^ c as u64).take(n)).collect();
            let spec: Vec<[Vec<Complex64>; 2]> = frames.iter().map(|f| spectra(f, fwd.as_ref(), m_lo)).collect();
            // fields: [sci, xpm] × pol, in bins
            let mut e = [[vec![Complex64::new(0.0, 0.0); n], vec![Complex64::new(0.0, 0.0); n]], [vec![Complex64::new(0.0, 0.0); n], vec![Complex64::new(0.0, 0.0); n]]];
            let mut b = vec![Complex64::new(0.0, 0.0); n * n];
            for t in &terms {
                let [c1, c2, c3] = t.a.0;
                let off = t.off;
                for j1 in 0..n {
                    for j2 in 0..n {
                        b[j1 * n + j2] = spec[c1][0][j1] * spec[c2][0][j2].conj() + spec[c1][1][j1] * spec[c2][1][j2].conj();
                    }
                }
                let dst = &mut e[if t.sci { 0 } else { 1 }];
                for j1 in 0..n {
                    for j3 in 0..n {
                        let row = &t.mu[(j1 * n + j3) * n..(j1 * n + j3 + 1) * n];
                        let (ax, ay) = (spec[c3][0][j3] * t.weight, spec[c3][1][j3] * t.weight);
                        for j in 0..n {
                            let j2 = j1 as i64 + j3 as i64 - j as i64 + off;
                            if j2 < 0 || j2 >= n as i64 {
                                continue;
                            }
                            let f = row[j] * b[j1 * n + j2 as usize];
                            dst[0][j] += f * ax;
                            dst[1][j] += f * ay;
                        }
                    }
                }
            }
            // back to symbols: δ(slot) = n⁻¹ Σ_m E(m) e^{+j2π m·slot/n}
            let mut delta = [[vec![], vec![]], [vec![], vec![]]];
            for g in 0..2 {
                for q in 0..2 {
                    let mut buf = vec![Complex64::new(0.0, 0.0); n];
                    for j in 0..n {
                        buf[(m_lo + j as i64).rem_euclid(n as i64) as usize] = e[g][q][j] * scale;
                    }
                    inv.process(&mut buf);
                    delta[g][q] = buf.into_iter().map(|z| z / n as f64).collect();
                }
            }
            let x = &frames[i];
            let mut s = Stats::default();
            for t in 0..n {
                let xs = [x[t].x, x[t].y];
                s.x2 += xs[0].norm_sqr() + xs[1].norm_sqr();
                for q in 0..2 {
                    let parts = [delta[0][q][t], delta[1][q][t], delta[0][q][t] + delta[1][q][t]];
                    for (k, d) in parts.iter().enumerate() {
                        s.d2[k] += d.norm_sqr();
                        s.xd[k] += xs[q].conj() * d;
                    }
                }
            }
            s
        })
        .collect();

    let pi2 = 2.0 * p[i] * p[i];
    let estimate = |skip: Option<usize>| -> [f64; 3] {
        let mut d2 = [0.0; 3];
        let mut xd = [Complex64::new(0.0, 0.0); 3];
        let mut x2 = 0.0;
        for (r, s) in stats.iter().enumerate() {
            if Some(r) == skip {
                continue;
            }
            for k in 0..3 {
                d2[k] += s.d2[k];
                xd[k] += s.xd[k];
            }
            x2 += s.x2;
        }
        let cnt = (stats.len() - skip.is_some() as usize) as f64 * n as f64;
        let mut out = [0.0; 3];
        for k in 0..3 {
            out[k] = (d2[k] / cnt - (xd[k] / cnt).norm_sqr() / (x2 / cnt)) / pi2;
        }
        out
    };
    let full = estimate(None);
    let r = stats.len() as f64;
    let loo: Vec<f64> = (0..stats.len()).map(|k| estimate(Some(k))[2]).collect();
    let mean = loo.iter().sum::<f64>() / r;
    let se = ((r - 1.0) / r * loo.iter().map(|v| (v - mean).powi(2)).sum::<f64>()).sqrt();
    Ok(ChannelEta {
        index: i,
        f_center: link.grid.center(i),
        eta: full[2],
        sci: full[0],
        xpm: full[1],
        stderr_db: Some(10.0 / std::f64::consts::LN_10 * se / full[2].abs()),
    })
}
