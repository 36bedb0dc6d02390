//! Small dense helpers; sizes here never exceed ~20.

/// Solves `a x = b` in place by Gaussian elimination with partial pivoting.
/// `a` is row-major `n × n`. Returns `None` for a numerically singular system.
pub(crate) fn solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row * n + k] * x[k];
        }
        x[row] = s / a[row * n + row];
    }
    Some(x)
}

/// Monomial coefficients `c` with `Σ c_k t^k` interpolating `values` at `nodes`.
pub(crate) fn poly_interpolate(nodes: &[f64], values: &[f64]) -> Option<Vec<f64>> {
    let n = nodes.len();
    let mut a = vec![0.0; n * n];
    for (i, &t) in nodes.iter().enumerate() {
        let mut p = 1.0;
        for k in 0..n {
            a[i * n + k] = p;
            p *= t;
        }
    }
    solve(a, values.to_vec())
}

/// Chebyshev points of the first kind mapped to `[lo, hi]`, ascending.
pub(crate) fn chebyshev_nodes(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|k| {
            let x = (std::f64::consts::PI * (2 * k + 1) as f64 / (2 * n) as f64).cos();
            0.5 * (lo + hi) + 0.5 * (hi - lo) * x
        })
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_cubic_exactly() {
        let nodes = chebyshev_nodes(4, 0.0, 2.0);
        let f = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t * t;
        let vals: Vec<f64> = nodes.iter().map(|&t| f(t)).collect();
        let c = poly_interpolate(&nodes, &vals).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-12);
        assert!((c[1] + 2.0).abs() < 1e-12);
        assert!(c[2].abs() < 1e-12);
        assert!((c[3] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn singular_system_is_rejected() {
        assert!(solve(vec![1.0, 2.0, 2.0, 4.0], vec![1.0, 2.0]).is_none());
    }
}
