use num_complex::Complex64;

use super::{phase_mismatch, LinkSpec, SpanSum};
use crate::error::{numerical, Result};
use crate::linalg::{chebyshev_nodes, poly_interpolate};
use crate::quadrature::oscillatory;

fn span_factor(link: &LinkSpec, phi: f64) -> Complex64 {
    let ns = link.fiber.n_spans;
    match link.span_sum {
        SpanSum::Plain => Complex64::new(ns as f64, 0.0),
        SpanSum::Incoherent => Complex64::new((ns as f64).sqrt(), 0.0),
        SpanSum::Coherent => (0..ns).map(|j| Complex64::from_polar(1.0, -phi * j as f64 * link.fiber.span_length)).sum(),
    }
}

/// FWM efficiency `μ(f1, f2, fi)` in km: the span integral of
/// `e^{−jφz}·ρ(z, f1+f2−fi)` by adaptive oscillatory quadrature, combined over
/// spans according to `link.span_sum`. With incoherent span summation the
/// returned value is scaled so that `|μ|²` adds per span.
pub fn fwm_efficiency(f1: f64, f2: f64, fi: f64, link: &LinkSpec, rel_tol: f64) -> Result<Complex64> {
    let fb = &link.fiber;
    let phi = phase_mismatch(f1, f2, fi, fb.beta2, fb.beta3);
    let fc = f1 + f2 - fi;
    let prof = link.profile();
    let r = oscillatory(|z| prof.rho(z, fc), phi, 0.0, fb.span_length, rel_tol, 4096)
        .map_err(|e| numerical(format!("FWM efficiency at ({f1}, {f2}, {fi}) THz: {e}")))?;
    Ok(r.value * span_factor(link, phi))
}

const PROFILE_DEGREE: usize = 12;

/// Fast FWM efficiency for bulk kernel evaluation.
///
/// With `u = e^{−αz}`, the profile is `ρ = u·R(u; f)` where `R` is smooth on
/// `[e^{−αL}, 1]`. Fitting `R` by a polynomial `Σ h_l u^l` turns the span
/// integral into a finite sum of closed-form exponential integrals.
pub struct MuEvaluator<'a> {
    link: &'a LinkSpec,
    nodes: Vec<f64>,
    /// `e^{−(l+1)αL}` per polynomial term.
    decay: Vec<f64>,
}

impl<'a> MuEvaluator<'a> {
    pub fn new(link: &'a LinkSpec) -> Self {
        let ul = (-link.fiber.alpha * link.fiber.span_length).exp();
        let decay = (1..=PROFILE_DEGREE + 1).map(|k| ul.powi(k as i32)).collect();
        MuEvaluator { link, nodes: chebyshev_nodes(PROFILE_DEGREE + 1, ul, 1.0), decay }
    }

    /// Polynomial coefficients of `R(u; f)` for the conjugated frequency `f`.
    pub fn profile_coeffs(&self, f: f64) -> Vec<f64> {
        if self.link.fiber.cr == 0.0 {
            return vec![1.0];
        }
        let prof = self.link.profile();
        let vals: Vec<f64> = self.nodes.iter().map(|&u| prof.tilt_factor_u(u, f)).collect();
        poly_interpolate(&self.nodes, &vals).expect("distinct Chebyshev nodes")
    }

    /// `μ` from precomputed profile coefficients and the phase mismatch.
    pub fn mu_with(&self, h: &[f64], phi: f64) -> Complex64 {
        let a = self.link.fiber.alpha;
        let l = self.link.fiber.span_length;
        let rot = Complex64::from_polar(1.0, -phi * l);
        let mut single = Complex64::new(0.0, 0.0);
        for (k, (&c, &d)) in h.iter().zip(&self.decay).enumerate() {
            // (1 − e^{−sL})/s with s = (k+1)α + jφ
            let ak = (k + 1) as f64 * a;
            let num = Complex64::new(1.0, 0.0) - rot * d;
            single += num * Complex64::new(ak, -phi) * (c / (ak * ak + phi * phi));
        }
        single * span_factor(self.link, phi)
    }

    pub fn mu(&self, f1: f64, f2: f64, fi: f64) -> Complex64 {
        let fb = &self.link.fiber;
        let phi = phase_mismatch(f1, f2, fi, fb.beta2, fb.beta3);
        self.mu_with(&self.profile_coeffs(f1 + f2 - fi), phi)
    }
}
