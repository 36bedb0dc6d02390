use proptest::prelude::*;

use nli_core::formats::{builtin, builtin_names, fit_mb_entropy, make_pm_qam, parse_constellation, quantize_composition};
use nli_core::link::{effective_length, FiberParams, LinkSpec, WdmGrid};
use nli_core::moments::exact_iid_moments;
use nli_core::nli::{eta_4d, eta_gn, ModelConfig};
use nli_core::quadrature::gauss_kronrod;
use nli_core::{Complex64, Constellation4D, Point4};

fn small_link(n_ch: usize, cr: f64, power: f64) -> LinkSpec {
    LinkSpec::new(FiberParams::ssmf(cr, 80.0, 1), WdmGrid::uniform(n_ch, 0.032, 0.05, 0.01, power).unwrap()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn eta_is_phase_invariant(theta in 0.0f64..std::f64::consts::TAU, f in 0usize..6) {
        let c = builtin(builtin_names()[f]).unwrap();
        let l = small_link(3, 1.12, 2e-3);
        let cfg = ModelConfig::fixed(9);
        let a = eta_4d(&exact_iid_moments(&c), &l, &cfg).unwrap();
        let b = eta_4d(&exact_iid_moments(&c.rotated(theta)), &l, &cfg).unwrap();
        for (x, y) in a.channels.iter().zip(&b.channels) {
            prop_assert!(rel(x.eta, y.eta) < 1e-10);
        }
    }

    #[test]
    fn eta_is_power_independent_without_raman(p1 in 1e-5f64..1e-1, p2 in 1e-5f64..1e-1) {
        let cfg = ModelConfig::fixed(9);
        let a = eta_gn(&small_link(3, 0.0, p1), &cfg).unwrap();
        let b = eta_gn(&small_link(3, 0.0, p2), &cfg).unwrap();
        for (x, y) in a.channels.iter().zip(&b.channels) {
            prop_assert!(rel(x.eta, y.eta) < 1e-10);
        }
    }

    #[test]
    fn mirror_symmetry_without_raman_or_slope(half in 1usize..3, spacing in 0.033f64..0.08) {
        let n = 2 * half + 1;
        let mut l = LinkSpec::new(FiberParams::ssmf(0.0, 80.0, 1), WdmGrid::uniform(n, 0.032, spacing, 0.01, 1e-3).unwrap()).unwrap();
        l.fiber.beta3 = 0.0;
        let r = eta_gn(&l, &ModelConfig::fixed(9)).unwrap();
        for k in 0..half {
            prop_assert!(rel(r.channels[k].eta, r.channels[n - 1 - k].eta) < 1e-9);
        }
    }

    #[test]
    fn breakdown_sums_to_total(f in 0usize..6, cr in 0.0f64..1.5) {
        let c = builtin(builtin_names()[f]).unwrap();
        let r = eta_4d(&exact_iid_moments(&c), &small_link(3, cr, 5e-3), &ModelConfig::fixed(9)).unwrap();
        for ch in &r.channels {
            prop_assert!(rel(ch.sci + ch.xpm, ch.eta) < 1e-10);
        }
    }

    #[test]
    fn isrs_profile_conserves_power(cr in 0.0f64..2.0, dbm in -5.0f64..10.0, z in 0.0f64..100.0) {
        let power = 1e-3 * 10f64.powf(dbm / 10.0);
        let l = LinkSpec::new(FiberParams::ssmf(cr, 100.0, 1), WdmGrid::uniform(11, 0.045, 0.046, 0.01, power).unwrap()).unwrap();
        let p = l.profile();
        let h = l.grid.symbol_rate / 2.0;
        let total: f64 = (0..11)
            .map(|k| {
                let c = l.grid.center(k);
                gauss_kronrod(|f| l.grid.psd(c) * p.rho(z, f), c - h, c + h, 1e-12, 0.0, 50).unwrap().value
            })
            .sum();
        prop_assert!(rel(total, l.grid.total_power() * (-l.fiber.alpha * z).exp()) < 1e-9);
    }

    #[test]
    fn effective_length_is_bounded(alpha_db in 0.05f64..0.5, z in 0.1f64..200.0) {
        let a = alpha_db / nli_core::link::DB_PER_NEPER;
        let le = effective_length(a, z);
        prop_assert!(le > 0.0 && le <= z && le <= 1.0 / a);
    }

    #[test]
    fn composition_is_close_to_target(w in prop::collection::vec(0.01f64..1.0, 2..12), n in 1usize..2000) {
        let s: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / s).collect();
        let b = quantize_composition(&p, n);
        prop_assert_eq!(b.counts.iter().sum::<usize>(), n);
        for (c, q) in b.counts.iter().zip(&p) {
            prop_assert!((*c as f64 - n as f64 * q).abs() < 1.0 + 1e-9);
        }
    }

    #[test]
    fn mb_fit_hits_entropy(h in 4.2f64..7.9) {
        let ps = fit_mb_entropy(&make_pm_qam(16, None).unwrap(), h).unwrap();
        prop_assert!((ps.shaped.entropy_bits() - h).abs() < 1e-8);
        prop_assert!((ps.shaped.mean_energy() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn constellation_text_round_trip(pts in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0, 0.1f64..1.0), 2..20)) {
        let points: Vec<Point4> = pts.iter().map(|&(a, b, c, d, _)| Point4::new(Complex64::new(a, b), Complex64::new(c, d))).collect();
        prop_assume!(points.iter().map(|p| p.x.norm_sqr()).sum::<f64>() > 1e-3 && points.iter().map(|p| p.y.norm_sqr()).sum::<f64>() > 1e-3);
        let s: f64 = pts.iter().map(|p| p.4).sum();
        let probs: Vec<f64> = pts.iter().map(|p| p.4 / s).collect();
        let c = Constellation4D::new("r", points, probs).unwrap();
        let back = parse_constellation(&c.to_text(), "r").unwrap();
        prop_assert_eq!(back.len(), c.len());
        for (a, b) in c.points().iter().zip(back.points()) {
            prop_assert!((a.x - b.x).norm() < 1e-9 && (a.y - b.y).norm() < 1e-9);
        }
        for (a, b) in c.probs().iter().zip(back.probs()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
