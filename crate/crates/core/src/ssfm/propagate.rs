use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{propagation_constant, waveform::signed_bin, SsfmConfig, StepRule, WaveformFrame};
use crate::error::{config, Result};
use crate::link::LinkSpec;

/// Step lengths covering one span.
fn schedule(link: &LinkSpec, cfg: &SsfmConfig) -> Result<Vec<f64>> {
    let f = &link.fiber;
    let p0 = link.grid.total_power();
    let mut z = 0.0;
    let mut steps = Vec::new();
    while z < f.span_length * (1.0 - 1e-12) {
        let h = match cfg.step {
            StepRule::Fixed(h) => h,
            StepRule::NonlinearPhase(phi) => {
                let kerr = 8.0 / 9.0 * f.gamma * p0 * (-f.alpha * z).exp();
                if kerr > 0.0 {
                    phi / kerr
                } else {
                    f64::INFINITY
                }
            }
        };
        let h = h.min(cfg.max_step).min(f.span_length - z);
        steps.push(h);
        z += h;
        if steps.len() > 10_000_000 {
            return Err(config("split-step schedule exceeds 10⁷ steps"));
        }
    }
    Ok(steps)
}

/// Propagates `frame` through every span of the link in place (symmetric
/// split-step). Between spans an ideal amplifier undoes the span's loss and
/// Raman tilt exactly. Returns the number of steps per span.
pub fn propagate(frame: &mut WaveformFrame, link: &LinkSpec, cfg: &SsfmConfig) -> Result<usize> {
    let f = &link.fiber;
    let steps = schedule(link, cfg)?;
    let n = frame.len();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let freq: Vec<f64> = (0..n).map(|b| signed_bin(b, n) as f64 * frame.sample_rate / n as f64).collect();
    let beta: Vec<f64> =
        freq.iter().map(|&fr| propagation_constant(f.beta2, f.beta3, 2.0 * std::f64::consts::PI * fr)).collect();
    let profile = link.profile();
    // ln ρ(z, f) = ln ρ(z, 0) − tilt(z)·f
    let log_rho = |z: f64| (profile.rho(z, 0.0).ln(), profile.tilt(z));
    let kerr = 8.0 / 9.0 * f.gamma;
    let inv_n = 1.0 / n as f64;

    let linear = |sx: &mut [Complex64], sy: &mut [Complex64], za: f64, zb: f64| {
        let (ra, ta) = log_rho(za);
        let (rb, tb) = log_rho(zb);
        let dz = zb - za;
        for b in 0..n {
            let g = Complex64::from_polar((0.5 * (rb - ra) - 0.5 * (tb - ta) * freq[b]).exp(), -beta[b] * dz);
            sx[b] *= g;
            sy[b] *= g;
        }
    };

    let mut sx = std::mem::take(&mut frame.x);
    let mut sy = std::mem::take(&mut frame.y);
    fwd.process(&mut sx);
    fwd.process(&mut sy);
    for span in 0..f.n_spans {
        let mut z = 0.0;
        for &h in &steps {
            linear(&mut sx, &mut sy, z, z + h / 2.0);
            inv.process(&mut sx);
            inv.process(&mut sy);
            for (a, b) in sx.iter_mut().zip(sy.iter_mut()) {
                *a *= inv_n;
                *b *= inv_n;
                let rot = Complex64::from_polar(1.0, -kerr * (a.norm_sqr() + b.norm_sqr()) * h);
                *a *= rot;
                *b *= rot;
            }
            fwd.process(&mut sx);
            fwd.process(&mut sy);
            linear(&mut sx, &mut sy, z + h / 2.0, z + h);
            z += h;
        }
        if span + 1 < f.n_spans {
            let (r, t) = log_rho(f.span_length);
            for b in 0..n {
                let g = (-0.5 * r + 0.5 * t * freq[b]).exp();
                sx[b] *= g;
                sy[b] *= g;
            }
        }
    }
    inv.process(&mut sx);
    inv.process(&mut sy);
    sx.iter_mut().chain(sy.iter_mut()).for_each(|z| *z *= inv_n);
    frame.x = sx;
    frame.y = sy;
    frame.z += f.total_length();
    Ok(steps.len())
}
