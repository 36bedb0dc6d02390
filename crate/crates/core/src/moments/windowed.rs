use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use rayon::prelude::*;

use super::{universe, Monomial, MomentSet};
use crate::error::{config, Result};
use crate::formats::{CcdmSpec, SymbolSource};
use crate::partition::set_partitions;

/// Smallest usable window: three-slot classes need three distinct slots.
pub const MIN_WINDOW: usize = 3;

/// Dispersion memory of a channel pair in symbols,
/// `ceil(2π·|β2|·L·|Δf|·R_s)`, clamped to `[3, 10·n]`.
/// Units: ps²/km, km, THz, THz.
pub fn default_window(beta2: f64, total_length: f64, delta_f: f64, symbol_rate: f64, n: Option<usize>) -> usize {
    let w = (2.0 * std::f64::consts::PI * beta2.abs() * total_length * delta_f.abs() * symbol_rate).ceil() as usize;
    let hi = n.map_or(usize::MAX, |n| 10 * n);
    w.clamp(MIN_WINDOW, hi.max(MIN_WINDOW))
}

/// Position of a window relative to the constant-composition blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowAlignment {
    /// Uniformly random offset.
    #[default]
    Random,
    /// Windows start on a block boundary.
    BlockAligned,
}

fn pidx(m: Monomial) -> usize {
    (m[0] as usize) << 6 | (m[1] as usize) << 4 | (m[2] as usize) << 2 | m[3] as usize
}

fn add(a: Monomial, b: Monomial) -> Monomial {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

/// Σ over ordered tuples of distinct slots of `Π_b f_b(slot_b)`, given the
/// power sums `s(m) = Σ_t m(a_t)`, divided by the number of such tuples.
fn distinct_average(slots: &[Monomial], s: impl Fn(Monomial) -> Complex64, w: usize) -> Complex64 {
    let w = w as f64;
    match slots {
        [f] => s(*f) / w,
        [f, g] => (s(*f) * s(*g) - s(add(*f, *g))) / (w * (w - 1.0)),
        [f, g, h] => {
            let (sf, sg, sh) = (s(*f), s(*g), s(*h));
            (sf * sg * sh - s(add(*f, *g)) * sh - s(add(*f, *h)) * sg - s(add(*g, *h)) * sf + 2.0 * s(add(add(*f, *g), *h)))
                / (w * (w - 1.0) * (w - 2.0))
        }
        _ => unreachable!("classes have at most three slots"),
    }
}

fn window_power_sums(block: &[crate::formats::Point4]) -> Vec<Complex64> {
    let mut sums = vec![Complex64::new(0.0, 0.0); 256];
    for p in block {
        let pw = |z: Complex64| [Complex64::new(1.0, 0.0), z, z * z, z * z * z];
        let (xp, xc, yp, yc) = (pw(p.x), pw(p.x.conj()), pw(p.y), pw(p.y.conj()));
        for a in 0..4 {
            for c in 0..4 - a {
                let xy = xp[a] * yp[c];
                for b in 0..4 {
                    for d in 0..4 - b {
                        sums[a << 6 | b << 4 | c << 2 | d] += xy * xc[b] * yc[d];
                    }
                }
            }
        }
    }
    sums
}

/// Monte-Carlo window-averaged moments: within each length-`w` window the
/// expectation over distinct slots is replaced by the average over all
/// ordered distinct slot tuples; windows start at a uniformly random offset
/// relative to the source's blocks and never share a block.
pub fn windowed_moments(src: &SymbolSource, w: usize, n_windows: usize) -> Result<MomentSet> {
    if w < MIN_WINDOW {
        return Err(config(format!("window of {w} symbols is shorter than the minimum of {MIN_WINDOW}")));
    }
    if n_windows < 2 {
        return Err(config("at least two windows are needed for an error estimate"));
    }
    let classes = universe();
    const CHUNK: usize = 64;
    let seed_stream = src.seed().1;
    let per_window: Vec<Vec<Complex64>> = (0..n_windows.div_ceil(CHUNK))
        .into_par_iter()
        .flat_map_iter(|chunk| {
            let mut s = src.fork(seed_stream ^ ((chunk as u64 + 1) << 32));
            let count = CHUNK.min(n_windows - chunk * CHUNK);
            let classes = &classes;
            (0..count)
                .map(|_| {
                    let off = s.random_offset(s.block_len());
                    s.take(off);
                    let block = s.take(w);
                    // drop the rest of the current block
                    let rest = (s.block_len() - (off + w) % s.block_len()) % s.block_len();
                    s.take(rest);
                    let sums = window_power_sums(&block);
                    classes.iter().map(|c| distinct_average(c.slots(), |m| sums[pidx(m)], w)).collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let nw = per_window.len() as f64;
    let mut values = BTreeMap::new();
    let mut stderr = BTreeMap::new();
    for (j, c) in classes.into_iter().enumerate() {
        let mean: Complex64 = per_window.iter().map(|v| v[j]).sum::<Complex64>() / nw;
        let var: f64 = per_window.iter().map(|v| (v[j] - mean).norm_sqr()).sum::<f64>() / (nw - 1.0);
        stderr.insert(c.clone(), (var / nw).sqrt());
        values.insert(c, mean);
    }
    Ok(MomentSet { values, stderr, window: Some(w), format_label: src.constellation().label().to_string() })
}

/// Probability that `r` distinct slots, drawn uniformly as an ordered tuple
/// from a window of `w` slots, fall into blocks according to each partition of
/// `0..r` (same block ⇔ same part).
fn block_sharing_probs(n: usize, w: usize, r: usize, alignment: WindowAlignment) -> Vec<(Vec<Vec<usize>>, f64)> {
    let parts = set_partitions(r, 1, |_, _| true);
    let offsets: Vec<usize> = match alignment {
        WindowAlignment::Random => (0..n).collect(),
        WindowAlignment::BlockAligned => vec![0],
    };
    let falling = |l: usize, s: usize| (0..s).map(|k| l.saturating_sub(k) as f64).product::<f64>();
    let total = falling(w, r);
    let mut acc = vec![0.0; parts.len()];
    for &u in &offsets {
        let mut lens = Vec::new();
        let mut left = w;
        let mut first = n - u;
        while left > 0 {
            let l = first.min(left);
            lens.push(l);
            left -= l;
            first = n;
        }
        for (pi, p) in parts.iter().enumerate() {
            let sizes: Vec<usize> = p.blocks().iter().map(Vec::len).collect();
            let mut count = 0.0;
            let nb = lens.len();
            let mut assign = vec![0usize; sizes.len()];
            loop {
                let distinct = (0..assign.len()).all(|a| (0..a).all(|b| assign[a] != assign[b]));
                if distinct {
                    count += sizes.iter().zip(&assign).map(|(&s, &b)| falling(lens[b], s)).product::<f64>();
                }
                let mut k = 0;
                while k < assign.len() {
                    assign[k] += 1;
                    if assign[k] < nb {
                        break;
                    }
                    assign[k] = 0;
                    k += 1;
                }
                if k == assign.len() {
                    break;
                }
            }
            acc[pi] += count / total;
        }
    }
    parts
        .into_iter()
        .zip(acc)
        .map(|(p, a)| (p.blocks(), a / offsets.len() as f64))
        .collect()
}

/// Exact window-averaged moments of a constant-composition source: the
/// average of the distinct-slot moment over all slot tuples of a window,
/// using without-replacement sampling inside a block, independence across
/// blocks and uniform signs.
pub fn ccdm_windowed_moments(spec: &CcdmSpec, w: usize, alignment: WindowAlignment, label: &str) -> Result<MomentSet> {
    if w < MIN_WINDOW {
        return Err(config(format!("window of {w} symbols is shorter than the minimum of {MIN_WINDOW}")));
    }
    let n = spec.n;
    let sharing: Vec<_> = (1..=3).map(|r| block_sharing_probs(n, w, r, alignment)).collect();
    let mut g_cache: HashMap<(usize, Monomial), Vec<Complex64>> = HashMap::new();
    let mut g = |layer: usize, m: Monomial| -> Vec<Complex64> {
        g_cache
            .entry((layer, m))
            .or_insert_with(|| {
                spec.layers[layer]
                    .classes
                    .variants
                    .iter()
                    .map(|vs| vs.iter().map(|v| v.monomial(m)).sum::<Complex64>() / vs.len() as f64)
                    .collect()
            })
            .clone()
    };
    let nf = n as f64;
    let mut values = BTreeMap::new();
    for cls in universe() {
        let slots = cls.slots();
        let mut total = Complex64::new(0.0, 0.0);
        for (groups, p) in &sharing[slots.len() - 1] {
            if *p == 0.0 {
                continue;
            }
            let mut term = Complex64::new(*p, 0.0);
            for layer in 0..spec.layers.len() {
                let counts = &spec.layers[layer].block.counts;
                for grp in groups {
                    let hs: Vec<Vec<Complex64>> = grp.iter().map(|&b| g(layer, slots[b])).collect();
                    let h = |sub: &[usize]| -> Complex64 {
                        counts
                            .iter()
                            .enumerate()
                            .map(|(c, &k)| sub.iter().map(|&i| hs[i][c]).product::<Complex64>() * k as f64)
                            .sum()
                    };
                    let e = match grp.len() {
                        1 => h(&[0]) / nf,
                        2 if n >= 2 => (h(&[0]) * h(&[1]) - h(&[0, 1])) / (nf * (nf - 1.0)),
                        3 if n >= 3 => {
                            (h(&[0]) * h(&[1]) * h(&[2]) - h(&[0, 1]) * h(&[2]) - h(&[0, 2]) * h(&[1]) - h(&[1, 2]) * h(&[0])
                                + 2.0 * h(&[0, 1, 2]))
                                / (nf * (nf - 1.0) * (nf - 2.0))
                        }
                        _ => Complex64::new(0.0, 0.0),
                    };
                    term *= e;
                }
            }
            total += term;
        }
        values.insert(cls, total);
    }
    Ok(MomentSet { values, stderr: BTreeMap::new(), window: Some(w), format_label: label.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::{builtin, fit_mb_entropy, make_pm_qam, CcdmLayout, SymbolSource};
    use crate::moments::exact_iid_moments;

    #[test]
    fn sharing_probabilities_sum_to_one() {
        for &(n, w) in &[(10usize, 3usize), (10, 25), (100, 28), (7, 70)] {
            for r in 1..=3 {
                for al in [WindowAlignment::Random, WindowAlignment::BlockAligned] {
                    let s: f64 = block_sharing_probs(n, w, r, al).iter().map(|x| x.1).sum();
                    assert!((s - 1.0).abs() < 1e-12, "n={n} w={w} r={r}");
                }
            }
        }
        // aligned window inside one block: every slot shares the block
        let p = block_sharing_probs(64, 64, 3, WindowAlignment::BlockAligned);
        assert!((p.iter().find(|x| x.0.len() == 1).unwrap().1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn window_rule() {
        // 2π·21.68·100·0.045·0.045 = 27.6
        assert_eq!(default_window(-21.68, 100.0, 0.045, 0.045, Some(100)), 28);
        assert_eq!(default_window(-21.68, 100.0, 0.0, 0.045, Some(100)), MIN_WINDOW);
        assert_eq!(default_window(-21.68, 100.0, 0.5, 0.045, Some(10)), 100);
    }

    #[test]
    fn huge_blocks_approach_iid() {
        let ps = fit_mb_entropy(&make_pm_qam(16, None).unwrap(), 6.0).unwrap();
        let spec = CcdmSpec::new(&ps.shaped, 1_000_000, CcdmLayout::PerPolarization).unwrap();
        let target = spec.effective_constellation("eff").unwrap();
        let iid = exact_iid_moments(&target);
        let win = ccdm_windowed_moments(&spec, 50, WindowAlignment::Random, "w").unwrap();
        for (c, v) in &iid.values {
            assert!((win.values[c] - v).norm() < 1e-4 * (1.0 + v.norm()), "{c}");
        }
    }

    #[test]
    fn monte_carlo_matches_exact_ccdm_windows() {
        let ps = fit_mb_entropy(&make_pm_qam(16, None).unwrap(), 6.0).unwrap();
        let src = SymbolSource::ccdm(ps.shaped, 20, CcdmLayout::PerPolarization, 11, 0).unwrap();
        let SourceModeSpec(spec) = spec_of(&src);
        let exact = ccdm_windowed_moments(&spec, 30, WindowAlignment::Random, "x").unwrap();
        let mc = windowed_moments(&src, 30, 4000).unwrap();
        for (c, v) in &exact.values {
            let e = mc.stderr[c];
            assert!((mc.values[c] - v).norm() <= 5.0 * e + 1e-12, "{c}: {} vs {v} (se {e})", mc.values[c]);
        }
    }

    struct SourceModeSpec(CcdmSpec);
    fn spec_of(src: &SymbolSource) -> SourceModeSpec {
        match src.mode() {
            crate::formats::SourceMode::ConstantComposition(s) => SourceModeSpec(s.clone()),
            _ => unreachable!(),
        }
    }

    #[test]
    fn point_mass_windows() {
        let c = crate::formats::Constellation4D::new(
            "pt",
            vec![crate::formats::Point4::new(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0))],
            vec![1.0],
        )
        .unwrap();
        let m = windowed_moments(&SymbolSource::iid(c, 1, 0), 5, 10).unwrap();
        assert!(m.values.values().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn iid_windows_are_consistent() {
        let c = builtin("PM-16QAM").unwrap();
        let exact = exact_iid_moments(&c);
        let mc = windowed_moments(&SymbolSource::iid(c, 5, 0), 16, 3000).unwrap();
        for (k, v) in &exact.values {
            assert!((mc.values[k] - v).norm() <= 4.5 * mc.stderr[k] + 1e-12, "{k}");
        }
    }
}
