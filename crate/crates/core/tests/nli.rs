use nli_core::formats::{builtin, Constellation4D, Point4, SymbolSource};
use nli_core::link::{FiberParams, LinkSpec, WdmGrid};
use nli_core::moments::{exact_iid_moments, gaussian_reference};
use nli_core::nli::*;
use num_complex::Complex64;

fn link(n_ch: usize, cr: f64, power: f64) -> LinkSpec {
    LinkSpec::new(FiberParams::ssmf(cr, 100.0, 1), WdmGrid::uniform(n_ch, 0.045, 0.05, 0.01, power).unwrap()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn single_channel_gn_matches_band_integral() {
    // 64 GBd, one 100 km span: band-averaged double integral of |μ|², evaluated
    // independently on a 1200² midpoint grid.
    let l = LinkSpec::new(FiberParams::ssmf(0.0, 100.0, 1), WdmGrid::uniform(1, 0.064, 0.075, 0.01, 1e-3).unwrap()).unwrap();
    let r = eta_gn(&l, &ModelConfig::fixed(97)).unwrap();
    assert!((r.channels[0].eta_db() - 19.0736).abs() < 0.02, "{}", r.channels[0].eta_db());
}

#[test]
fn zero_gamma_gives_no_nli() {
    let mut l = link(3, 0.0, 1e-3);
    l.fiber.gamma = 0.0;
    let r = eta_gn(&l, &ModelConfig::fixed(15)).unwrap();
    assert!(r.channels.iter().all(|c| c.eta == 0.0 && c.eta_db() == f64::NEG_INFINITY));
}

#[test]
fn gaussian_moments_reduce_to_gn() {
    let l = link(3, 1.12, 2e-3);
    let cfg = ModelConfig::fixed(21);
    let a = eta_4d(&gaussian_reference(), &l, &cfg).unwrap();
    let b = eta_gn(&l, &cfg).unwrap();
    for (x, y) in a.channels.iter().zip(&b.channels) {
        assert!(rel(x.eta, y.eta) < 1e-10);
    }
}

#[test]
fn pm_qam_egn_equals_4d() {
    let l = link(3, 1.12, 2e-3);
    let cfg = ModelConfig::fixed(21);
    let q = builtin("PM-16QAM").unwrap();
    let a = eta_4d(&exact_iid_moments(&q), &l, &cfg).unwrap();
    let b = eta_egn(&q, &l, &cfg).unwrap();
    for (x, y) in a.channels.iter().zip(&b.channels) {
        assert!(rel(x.eta, y.eta) < 1e-10);
        assert!(rel(x.sci + x.xpm, x.eta) < 1e-10);
    }
}

#[test]
fn prs_egn_overestimates() {
    let l = link(3, 0.0, 1e-3);
    let cfg = ModelConfig::fixed(21);
    let c = builtin("4D-64PRS").unwrap();
    let a = eta_4d(&exact_iid_moments(&c), &l, &cfg).unwrap();
    let b = eta_egn(&c, &l, &cfg).unwrap();
    assert!(a.channels[1].eta < b.channels[1].eta);
}

#[test]
fn qam_below_gn() {
    let l = link(3, 0.0, 1e-3);
    let cfg = ModelConfig::fixed(21);
    let gn = eta_gn(&l, &cfg).unwrap();
    let egn = eta_egn(&builtin("PM-QPSK").unwrap(), &l, &cfg).unwrap();
    assert!(egn.channels[1].eta < gn.channels[1].eta);
}

#[test]
fn mirror_symmetry_without_raman() {
    let mut l = link(5, 0.0, 1e-3);
    l.fiber.beta3 = 0.0;
    let r = eta_egn(&builtin("PM-8QAM").unwrap(), &l, &ModelConfig::fixed(21)).unwrap();
    for k in 0..2 {
        assert!(rel(r.channels[k].eta, r.channels[4 - k].eta) < 1e-9);
    }
}

#[test]
fn raman_tilt_raises_low_frequencies() {
    let l = link(5, 1.12, 5e-3);
    let r = eta_gn(&l, &ModelConfig::fixed(21)).unwrap();
    assert!(r.channels[0].eta > r.channels[4].eta);
}

#[test]
fn power_scaling_without_raman() {
    let cfg = ModelConfig::fixed(15);
    let a = eta_gn(&link(3, 0.0, 1e-4), &cfg).unwrap();
    let b = eta_gn(&link(3, 0.0, 1e-2), &cfg).unwrap();
    for (x, y) in a.channels.iter().zip(&b.channels) {
        assert!(rel(x.eta, y.eta) < 1e-10);
    }
}

#[test]
fn phase_rotation_invariance() {
    let l = link(3, 1.12, 1e-3);
    let cfg = ModelConfig::fixed(15);
    let c = builtin("4D-64PRS").unwrap();
    let a = eta_4d(&exact_iid_moments(&c), &l, &cfg).unwrap();
    let b = eta_4d(&exact_iid_moments(&c.rotated(0.7)), &l, &cfg).unwrap();
    for (x, y) in a.channels.iter().zip(&b.channels) {
        assert!(rel(x.eta, y.eta) < 1e-9);
    }
}

#[test]
fn xpm_resolution_converges() {
    let l = link(3, 0.0, 1e-3);
    let q = egn_moments(&builtin("PM-16QAM").unwrap());
    let a = eta_4d(&q, &l, &ModelConfig::fixed(33)).unwrap();
    let b = eta_4d(&q, &l, &ModelConfig::fixed(65)).unwrap();
    assert!((a.channels[1].eta_db() - b.channels[1].eta_db()).abs() < 0.05);
}

#[test]
fn mc_agrees_with_model_on_small_instance() {
    for cr in [0.0, 1.12] {
        let l = link(3, cr, 3e-3);
        let n = 16;
        let q = builtin("PM-16QAM").unwrap();
        let model = eta_4d(&exact_iid_moments(&q), &l, &ModelConfig::fixed(n)).unwrap();
        let src = SymbolSource::iid(q, 11, 0);
        let mc = eta_rp1_mc(&src, &l, 1, &McConfig { n, realizations: 400, spill: true }).unwrap();
        let gap = mc.eta_db() - model.channels[1].eta_db();
        assert!(gap.abs() < 3.0 * mc.stderr_db.unwrap(), "cr={cr} gap {gap} se {:?}", mc.stderr_db);
    }
}

#[test]
fn pure_carrier_has_no_nli_variance() {
    let c = Constellation4D::new("carrier", vec![Point4::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0))], vec![1.0]).unwrap();
    let l = link(3, 0.0, 1e-3);
    let mc = eta_rp1_mc(&SymbolSource::iid(c, 1, 0), &l, 1, &McConfig { n: 8, realizations: 4, spill: true }).unwrap();
    let gn = eta_gn(&l, &ModelConfig::fixed(9)).unwrap();
    assert!(mc.eta.abs() < 1e-10 * gn.channels[1].eta);
}

#[test]
fn estimator_names_round_trip() {
    for e in Estimator::ALL {
        assert_eq!(e.to_string().parse::<Estimator>().unwrap(), e);
    }
    assert!("foo".parse::<Estimator>().is_err());
}
