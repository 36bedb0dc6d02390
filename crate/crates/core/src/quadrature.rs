//! One-dimensional adaptive quadrature.
//!
//! [`gauss_kronrod`] is a global-adaptive G7/K15 rule for smooth real
//! integrands. [`oscillatory`] integrates `f(z)·exp(-jωz)` for a smooth,
//! non-oscillating `f`: on each panel `f` is replaced by its Chebyshev
//! interpolant and the product with the exponential is integrated exactly, so
//! the panel count is driven by the smoothness of `f` only, never by `ω`.

use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{numerical, Result};
use crate::linalg::{chebyshev_nodes, poly_interpolate};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub abs_error: f64,
    pub panels: usize,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    err: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Adaptive Gauss–Kronrod integration of a real function over `[a, b]`.
pub fn gauss_kronrod<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_panels: usize,
) -> Result<QuadResult<f64>> {
    let (v, e) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, err: e });
    let (mut total, mut err) = (v, e);
    while err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= max_panels {
            return Err(numerical(format!(
                "Gauss-Kronrod did not converge on [{a}, {b}]: estimate {total:e} ± {err:e} after {max_panels} panels"
            )));
        }
        let p = heap.pop().expect("heap is never empty");
        let m = 0.5 * (p.a + p.b);
        let (v1, e1) = gk15(&mut f, p.a, m);
        let (v2, e2) = gk15(&mut f, m, p.b);
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.err;
        heap.push(Panel { a: p.a, b: m, value: v1, err: e1 });
        heap.push(Panel { a: m, b: p.b, value: v2, err: e2 });
    }
    // re-sum to shed accumulated update rounding
    let mut panels: Vec<_> = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(QuadResult {
        value: panels.iter().map(|p| p.value).sum(),
        abs_error: panels.iter().map(|p| p.err).sum(),
        panels: panels.len(),
    })
}

/// `∫_0^1 s^k e^{-jθs} ds` for `k = 0..=degree`.
pub fn oscillatory_moments(theta: f64, degree: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(degree + 1);
    if theta.abs() < 4.0 {
        let z = Complex64::new(0.0, -theta);
        for k in 0..=degree {
            let mut term = Complex64::new(1.0, 0.0);
            let mut sum = Complex64::new(1.0 / (k + 1) as f64, 0.0);
            for n in 1..200 {
                term *= z / n as f64;
                let t = term / (n + k + 1) as f64;
                sum += t;
                if t.norm() < 1e-18 * sum.norm().max(1e-300) {
                    break;
                }
            }
            out.push(sum);
        }
    } else {
        let jt = Complex64::new(0.0, theta);
        let e = Complex64::from_polar(1.0, -theta);
        let mut j = (Complex64::new(1.0, 0.0) - e) / jt;
        out.push(j);
        for k in 1..=degree {
            j = (k as f64 * j - e) / jt;
            out.push(j);
        }
    }
    out
}

const FILON_DEGREE: usize = 8;

fn filon_panel<F: FnMut(f64) -> f64>(f: &mut F, omega: f64, a: f64, b: f64, nodes: &[f64]) -> Result<Complex64> {
    let h = b - a;
    let vals: Vec<f64> = nodes.iter().map(|&s| f(a + h * s)).collect();
    let c = poly_interpolate(nodes, &vals).ok_or_else(|| numerical("singular panel interpolation"))?;
    let mom = oscillatory_moments(omega * h, FILON_DEGREE);
    let s: Complex64 = c.iter().zip(&mom).map(|(ck, jk)| *jk * *ck).sum();
    Ok(s * h * Complex64::from_polar(1.0, -omega * a))
}

/// Adaptive Filon-type quadrature of `∫_a^b f(z) e^{-jωz} dz` where `f` is
/// smooth (it may decay, it must not oscillate).
pub fn oscillatory<F: FnMut(f64) -> f64>(
    mut f: F,
    omega: f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<QuadResult<Complex64>> {
    let nodes = chebyshev_nodes(FILON_DEGREE + 1, 0.0, 1.0);
    // Error reference: the integral of |f| is a stable magnitude even when the
    // oscillatory result itself is small.
    let refine = |f: &mut F, a: f64, b: f64| -> Result<Panel<Complex64>> {
        let whole = filon_panel(f, omega, a, b, &nodes)?;
        let m = 0.5 * (a + b);
        let halves = filon_panel(f, omega, a, m, &nodes)? + filon_panel(f, omega, m, b, &nodes)?;
        Ok(Panel { a, b, value: halves, err: (whole - halves).norm() })
    };
    let first = refine(&mut f, a, b)?;
    let (mut total, mut err) = (first.value, first.err);
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut magnitude = 0.0;
    let mut mag_panels = 0;
    loop {
        if mag_panels != heap.len() {
            // cheap 9-point estimate of ∫|f| per panel, refreshed after splits
            magnitude = heap
                .iter()
                .map(|p: &Panel<Complex64>| {
                    let h = p.b - p.a;
                    nodes.iter().map(|&s| f(p.a + h * s).abs()).sum::<f64>() * h / nodes.len() as f64
                })
                .sum();
            mag_panels = heap.len();
        }
        let target = rel_tol * total.norm().max(1e-3 * magnitude / (1.0 + (omega * (b - a)).abs()));
        if err <= target {
            break;
        }
        if heap.len() >= max_panels {
            return Err(numerical(format!(
                "oscillatory quadrature did not converge (ω={omega:e}, estimate {total:e}, error {err:e})"
            )));
        }
        let p = heap.pop().expect("heap is never empty");
        let m = 0.5 * (p.a + p.b);
        let l = refine(&mut f, p.a, m)?;
        let r = refine(&mut f, m, p.b)?;
        total += l.value + r.value - p.value;
        err += l.err + r.err - p.err;
        heap.push(l);
        heap.push(r);
    }
    let mut panels = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(QuadResult {
        value: panels.iter().map(|p| p.value).sum(),
        abs_error: panels.iter().map(|p| p.err).sum(),
        panels: panels.len(),
    })
}
