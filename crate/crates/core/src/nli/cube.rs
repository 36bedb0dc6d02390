//! Discrete time-domain kernels of one frequency assignment.
//!
//! Each channel is a periodic frame of `n` symbols, i.e. `n` spectral bins of
//! width `R_s/n` with offsets `m ∈ [m_lo, m_lo+n)`. For an assignment of
//! channels `(c1, c2*, c3)` feeding channel `i`, the first-order field at
//! symbol 0 is `Σ S(n1,n2,n3)·a¹_{n1} a²*_{n2} a³_{n3}` with
//!
//! `S(n1,n2,n3) = n⁻³ Σ μ(m1,m3,m)·exp(−j2π[m1(n1−n2) + m3(n3−n2) + m·n2]/n)`,
//!
//! summed over bins with the conjugated bin `m2 = m1+m3−m+Δ` inside its
//! channel. `Δ` is the carrier mismatch `f_c1 + f_c3 − f_c2 − f_i` in bins: zero
//! for self- and cross-phase terms, nonzero for products of neighbours that
//! spill into channel `i`; it adds a factor `exp(j2πΔ·n2/n)`.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::link::{phase_mismatch, LinkSpec, MuEvaluator};

/// Channel triple `(c1, c2, c3)` feeding channel `i`; `c2` is conjugated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment(pub [usize; 3]);

pub(crate) fn bin_offset_lo(n: usize) -> i64 {
    -((n / 2) as i64)
}

/// Carrier mismatch of an assignment in bins of width `R_s/n`, rounded.
pub(crate) fn carrier_offset(link: &LinkSpec, i: usize, a: Assignment, n: usize) -> i64 {
    let g = &link.grid;
    let [c1, c2, c3] = a.0;
    let df = g.center(c1) + g.center(c3) - g.center(c2) - g.center(i);
    (df * n as f64 / g.symbol_rate).round() as i64
}

/// `T(u, v, w)` such that `S(n1,n2,n3) = T(n1−n2, n3−n2, n2)` (indices mod n).
pub struct KernelCube {
    pub n: usize,
    data: Vec<Complex64>,
}

/// Raw FWM-efficiency cube `μ[j1][j3][j]` (bins `m = m_lo + j`), zero where the
/// conjugated bin leaves its channel.
pub(crate) fn mu_cube(link: &LinkSpec, i: usize, a: Assignment, n: usize) -> Vec<Complex64> {
    let grid = &link.grid;
    let fib = &link.fiber;
    let ev = MuEvaluator::new(link);
    let m_lo = bin_offset_lo(n);
    let delta = grid.symbol_rate / n as f64;
    let off = carrier_offset(link, i, a, n);
    let [c1, c2, c3] = a.0;
    let (f_1, f_2, f_3, f_i) = (grid.center(c1), grid.center(c2), grid.center(c3), grid.center(i));
    let h: Vec<Vec<f64>> = (0..n).map(|j| ev.profile_coeffs(f_2 + (m_lo + j as i64) as f64 * delta)).collect();
    let nn = n * n;
    let mut data = vec![Complex64::new(0.0, 0.0); n * nn];
    data.par_chunks_mut(nn).enumerate().for_each(|(j1, slab)| {
        let f1 = f_1 + (m_lo + j1 as i64) as f64 * delta;
        for j3 in 0..n {
            let f3 = f_3 + (m_lo + j3 as i64) as f64 * delta;
            for j in 0..n {
                // m2 − m_lo = j1 + j3 − j + Δ
                let j2 = j1 as i64 + j3 as i64 - j as i64 + off;
                if j2 < 0 || j2 >= n as i64 {
                    continue;
                }
                let f = f_i + (m_lo + j as i64) as f64 * delta;
                let phi = phase_mismatch(f1, f3, f, fib.beta2, fib.beta3);
                slab[j3 * n + j] = ev.mu_with(&h[j2 as usize], phi);
            }
        }
    });
    data
}

impl KernelCube {
    pub fn build(link: &LinkSpec, i: usize, a: Assignment, n: usize) -> KernelCube {
        let m_lo = bin_offset_lo(n);
        let off = carrier_offset(link, i, a, n);
        let nn = n * n;
        let mut data = mu_cube(link, i, a, n);
        fft3(&mut data, n);
        let scale = (n as f64).powi(-3);
        let tw: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(scale.cbrt(), -2.0 * std::f64::consts::PI * (m_lo * k as i64).rem_euclid(n as i64) as f64 / n as f64))
            .collect();
        let tw_w: Vec<Complex64> = (0..n)
            .map(|w| tw[w] * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (off * w as i64).rem_euclid(n as i64) as f64 / n as f64))
            .collect();
        data.par_chunks_mut(nn).enumerate().for_each(|(u, slab)| {
            for v in 0..n {
                let t = tw[u] * tw[v];
                for w in 0..n {
                    slab[v * n + w] *= t * tw_w[w];
                }
            }
        });
        KernelCube { n, data }
    }

    #[inline]
    pub fn t(&self, u: usize, v: usize, w: usize) -> Complex64 {
        self.data[(u * self.n + v) * self.n + w]
    }

    /// `S` as a dense row-major `n×n×n` array indexed `(n1, n2, n3)`.
    pub fn dense(&self) -> Vec<Complex64> {
        let n = self.n;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n * n];
        out.par_chunks_mut(n * n).enumerate().for_each(|(n1, slab)| {
            for n2 in 0..n {
                for n3 in 0..n {
                    slab[n2 * n + n3] = self.s(n1, n2, n3);
                }
            }
        });
        out
    }

    /// `S(n1, n2, n3)`, arguments in `0..n`.
    #[inline]
    pub fn s(&self, n1: usize, n2: usize, n3: usize) -> Complex64 {
        let n = self.n;
        let u = if n1 >= n2 { n1 - n2 } else { n1 + n - n2 };
        let v = if n3 >= n2 { n3 - n2 } else { n3 + n - n2 };
        self.t(u, v, n2)
    }
}

/// In-place unnormalized forward 3D DFT of an `n×n×n` row-major cube.
fn fft3(data: &mut [Complex64], n: usize) {
    let fft = FftPlanner::new().plan_fft_forward(n);
    let nn = n * n;
    data.par_chunks_mut(nn).for_each(|slab| {
        // last axis
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(slab, &mut scratch);
        // middle axis via a transposed copy
        let mut t = vec![Complex64::new(0.0, 0.0); nn];
        for v in 0..n {
            for w in 0..n {
                t[w * n + v] = slab[v * n + w];
            }
        }
        fft.process_with_scratch(&mut t, &mut scratch);
        for v in 0..n {
            for w in 0..n {
                slab[v * n + w] = t[w * n + v];
            }
        }
    });
    // first axis: for each v gather the (u, w) plane transposed to (w, u)
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut t = vec![Complex64::new(0.0, 0.0); nn];
    for v in 0..n {
        for u in 0..n {
            let row = &data[(u * n + v) * n..(u * n + v + 1) * n];
            for w in 0..n {
                t[w * n + u] = row[w];
            }
        }
        fft.process_with_scratch(&mut t, &mut scratch);
        for u in 0..n {
            let row = &mut data[(u * n + v) * n..(u * n + v + 1) * n];
            for w in 0..n {
                row[w] = t[w * n + u];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::{FiberParams, WdmGrid};

    #[test]
    fn fft3_matches_direct_dft() {
        let n = 5;
        let mut d: Vec<Complex64> = (0..n * n * n).map(|k| Complex64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos())).collect();
        let orig = d.clone();
        fft3(&mut d, n);
        for (a, b, c) in [(0, 0, 0), (1, 2, 3), (4, 0, 2)] {
            let mut s = Complex64::new(0.0, 0.0);
            for x in 0..n {
                for y in 0..n {
                    for z in 0..n {
                        let ph = -2.0 * std::f64::consts::PI * ((a * x + b * y + c * z) as f64) / n as f64;
                        s += orig[(x * n + y) * n + z] * Complex64::from_polar(1.0, ph);
                    }
                }
            }
            assert!((s - d[(a * n + b) * n + c]).norm() < 1e-10);
        }
    }

    fn check_direct_sum(link: &LinkSpec, i: usize, a: Assignment, n: usize) {
        let cube = KernelCube::build(link, i, a, n);
        let ev = MuEvaluator::new(link);
        let g = &link.grid;
        let d = g.symbol_rate / n as f64;
        let m_lo = bin_offset_lo(n);
        let off = carrier_offset(link, i, a, n);
        let [c1, _, c3] = a.0;
        let mut nonzero = false;
        for (n1, n2, n3) in [(0, 0, 0), (1, 4, 2), (5, 3, 3)] {
            let mut s = Complex64::new(0.0, 0.0);
            for m1 in m_lo..m_lo + n as i64 {
                for m3 in m_lo..m_lo + n as i64 {
                    for m in m_lo..m_lo + n as i64 {
                        let m2 = m1 + m3 - m + off;
                        if m2 < m_lo || m2 >= m_lo + n as i64 {
                            continue;
                        }
                        let mu = ev.mu(g.center(c1) + m1 as f64 * d, g.center(c3) + m3 as f64 * d, g.center(i) + m as f64 * d);
                        let ph = -2.0 * std::f64::consts::PI
                            * (m1 * (n1 as i64 - n2 as i64) + m3 * (n3 as i64 - n2 as i64) + (m - off) * n2 as i64) as f64
                            / n as f64;
                        s += mu * Complex64::from_polar(1.0, ph);
                    }
                }
            }
            s /= (n * n * n) as f64;
            nonzero |= s.norm() > 0.0;
            assert!((s - cube.s(n1, n2, n3)).norm() < 1e-10 * s.norm().max(1.0), "{s} vs {}", cube.s(n1, n2, n3));
        }
        assert!(nonzero);
    }

    #[test]
    fn cube_matches_direct_sum() {
        let link = LinkSpec::new(FiberParams::ssmf(1.12, 100.0, 1), WdmGrid::uniform(3, 0.045, 0.05, 0.01, 1e-3).unwrap()).unwrap();
        check_direct_sum(&link, 1, Assignment([2, 2, 1]), 6);
    }

    #[test]
    fn spill_cube_matches_direct_sum() {
        let link = LinkSpec::new(FiberParams::ssmf(1.12, 100.0, 1), WdmGrid::uniform(3, 0.045, 0.05, 0.01, 1e-3).unwrap()).unwrap();
        assert_eq!(carrier_offset(&link, 1, Assignment([2, 1, 1]), 9), 10);
        check_direct_sum(&link, 1, Assignment([2, 1, 1]), 9);
        check_direct_sum(&link, 1, Assignment([1, 0, 1]), 9);
    }
}
