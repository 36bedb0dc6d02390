use nli_core::formats::{builtin, SymbolSource};
use nli_core::link::{FiberParams, LinkSpec, WdmGrid};
use nli_core::ssfm::*;
use nli_core::{to_db, Complex64, Error};

fn sources(n: usize, name: &str, seed: u64) -> Vec<SymbolSource> {
    let c = builtin(name).unwrap();
    (0..n).map(|k| SymbolSource::iid(c.clone(), seed, k as u64)).collect()
}

fn small_cfg(n_symbols: usize) -> SsfmConfig {
    SsfmConfig { n_symbols, n_frames: 1, check_convergence: false, ..Default::default() }
}

fn link(n_ch: usize, cr: f64) -> LinkSpec {
    LinkSpec::new(FiberParams::ssmf(cr, 100.0, 1), WdmGrid::uniform(n_ch, 0.045, 0.046, 0.01, 1e-3).unwrap()).unwrap()
}

#[test]
fn back_to_back_is_clean() {
    let l = link(3, 0.0);
    let w = synthesize_wdm(&mut sources(3, "PM-16QAM", 1), &l.grid, &small_cfg(1024)).unwrap();
    for k in 0..3 {
        let rx = receive(&w, &l.grid, l.fiber.beta2, l.fiber.beta3, 0.0, k);
        assert!(to_db(snr_eff(&w.symbols[k], &rx)) > 60.0);
    }
}

#[test]
fn channel_and_total_powers_after_synthesis() {
    let l = LinkSpec::new(FiberParams::ssmf(0.0, 100.0, 1), WdmGrid::uniform(23, 0.045, 0.046, 0.01, 1e-3).unwrap()).unwrap();
    let w = synthesize_wdm(&mut sources(23, "PM-8QAM", 2), &l.grid, &small_cfg(256)).unwrap();
    assert!((to_db(w.power() / 1e-3) - 13.617).abs() < 0.02);
    for p in w.channel_powers(&l.grid) {
        assert!(to_db(p / 1e-3).abs() < 0.01);
    }
}

#[test]
fn spectrum_stays_inside_the_rrc_band() {
    let l = link(1, 0.0);
    let w = synthesize_wdm(&mut sources(1, "PM-QPSK", 3), &l.grid, &small_cfg(512)).unwrap();
    let mut s = w.x.clone();
    rustfft::FftPlanner::new().plan_fft_forward(s.len()).process(&mut s);
    let edge = 0.5 * 0.045 * 1.01;
    let (mut inside, mut outside) = (0.0, 0.0);
    for (b, z) in s.iter().enumerate() {
        if w.bin_frequency(b).abs() <= edge + 1e-12 {
            inside += z.norm_sqr();
        } else {
            outside += z.norm_sqr();
        }
    }
    assert!(outside < 1e-20 * inside);
}

#[test]
fn same_seed_same_frame() {
    let l = link(3, 0.0);
    let a = synthesize_wdm(&mut sources(3, "PM-16QAM", 9), &l.grid, &small_cfg(256)).unwrap();
    let b = synthesize_wdm(&mut sources(3, "PM-16QAM", 9), &l.grid, &small_cfg(256)).unwrap();
    assert!(a.x.iter().zip(&b.x).all(|(p, q)| p.re.to_bits() == q.re.to_bits() && p.im.to_bits() == q.im.to_bits()));
}

#[test]
fn linear_fiber_is_invertible() {
    let mut l = link(3, 0.0);
    l.fiber.gamma = 0.0;
    let cfg = small_cfg(1024);
    let mut w = synthesize_wdm(&mut sources(3, "PM-16QAM", 4), &l.grid, &cfg).unwrap();
    propagate(&mut w, &l, &cfg).unwrap();
    for k in 0..3 {
        let rx = receive(&w, &l.grid, l.fiber.beta2, l.fiber.beta3, l.fiber.total_length(), k);
        assert!(to_db(snr_eff(&w.symbols[k], &rx)) > 50.0);
    }
}

#[test]
fn lossless_kerr_propagation_conserves_energy() {
    let mut l = link(3, 0.0);
    l.fiber.alpha = 1e-12;
    l.grid.powers = vec![5e-3; 3];
    let cfg = SsfmConfig { step: StepRule::Fixed(2.0), ..small_cfg(512) };
    let mut w = synthesize_wdm(&mut sources(3, "PM-16QAM", 5), &l.grid, &cfg).unwrap();
    let p0 = w.power();
    propagate(&mut w, &l, &cfg).unwrap();
    assert!(((w.power() - p0) / p0).abs() < 1e-10);
}

#[test]
fn raman_tilt_matches_profile() {
    let mut l = LinkSpec::new(FiberParams::ssmf(1.12, 100.0, 1), WdmGrid::uniform(23, 0.045, 0.046, 0.01, 1e-3).unwrap()).unwrap();
    l.fiber.gamma = 0.0;
    let cfg = SsfmConfig { step: StepRule::Fixed(5.0), ..small_cfg(256) };
    let mut w = synthesize_wdm(&mut sources(23, "PM-QPSK", 6), &l.grid, &cfg).unwrap();
    propagate(&mut w, &l, &cfg).unwrap();
    let out = w.channel_powers(&l.grid);
    let loss = (-l.fiber.alpha * 100.0).exp();
    let prof = l.profile();
    for (k, p) in out.iter().enumerate() {
        let rho = prof.rho(100.0, l.grid.center(k));
        assert!((to_db(*p / 1e-3) - to_db(rho)).abs() < 0.05, "channel {k}");
    }
    let gain0 = to_db(out[0] / 1e-3 / loss);
    assert!((gain0 - 1.2).abs() < 0.15, "{gain0}");
    assert!((to_db(w.power() / (23e-3 * loss))).abs() < 0.01);
}

#[test]
fn awgn_calibration() {
    let mut l = link(3, 0.0);
    l.fiber.gamma = 0.0;
    let cfg = small_cfg(1 << 14);
    let mut w = synthesize_wdm(&mut sources(3, "PM-16QAM", 7), &l.grid, &cfg).unwrap();
    // in-band noise power N0·R_s at 20 dB below the channel power
    add_awgn(&mut w, 1e-3 / (0.045 * 100.0), 11);
    let rx = receive(&w, &l.grid, l.fiber.beta2, l.fiber.beta3, 0.0, 1);
    assert!((to_db(snr_eff(&w.symbols[1], &rx)) - 20.0).abs() < 0.1);
}

#[test]
fn phase_rotation_does_not_change_snr() {
    let l = link(3, 0.0);
    let cfg = small_cfg(1024);
    let mut w = synthesize_wdm(&mut sources(3, "PM-8QAM", 8), &l.grid, &cfg).unwrap();
    add_awgn(&mut w, 1e-4, 1);
    let a = receive(&w, &l.grid, l.fiber.beta2, l.fiber.beta3, 0.0, 1);
    let r = Complex64::from_polar(1.0, std::f64::consts::PI / 7.0);
    w.x.iter_mut().chain(w.y.iter_mut()).for_each(|z| *z *= r);
    let b = receive(&w, &l.grid, l.fiber.beta2, l.fiber.beta3, 0.0, 1);
    let (sa, sb) = (snr_eff(&w.symbols[1], &a), snr_eff(&w.symbols[1], &b));
    assert!(((sa - sb) / sa).abs() < 1e-9);
}

#[test]
fn no_kerr_means_no_nli() {
    let mut l = link(3, 0.0);
    l.fiber.gamma = 0.0;
    let r = eta_ssfm(&l, &sources(3, "PM-16QAM", 1), &small_cfg(512), &[1]).unwrap();
    assert!(r.channels[0].eta_db() < -40.0, "{}", r.channels[0].eta_db());
}

#[test]
fn coarse_steps_fail_the_convergence_gate() {
    let l = link(3, 0.0);
    let cfg = SsfmConfig { step: StepRule::Fixed(50.0), max_step: 50.0, check_convergence: true, ..small_cfg(1024) };
    assert!(matches!(eta_ssfm(&l, &sources(3, "PM-16QAM", 1), &cfg, &[1]), Err(Error::Numerical(_))));
}

#[test]
fn rolloff_sensitivity_is_small() {
    let cfg = small_cfg(1 << 12);
    let mut a = link(3, 0.0);
    a.grid.powers = vec![3e-3; 3];
    let mut b = a.clone();
    b.grid.rolloff = 1e-4;
    let ea = eta_ssfm(&a, &sources(3, "PM-16QAM", 2), &cfg, &[1]).unwrap().channels[0].eta_db();
    let eb = eta_ssfm(&b, &sources(3, "PM-16QAM", 2), &cfg, &[1]).unwrap().channels[0].eta_db();
    assert!((ea - eb).abs() < 0.02, "{ea} {eb}");
}

#[test]
fn aliasing_is_rejected() {
    let l = link(5, 0.0);
    let cfg = SsfmConfig { samples_per_symbol: Some(2), ..small_cfg(256) };
    assert!(matches!(synthesize_wdm(&mut sources(5, "PM-QPSK", 1), &l.grid, &cfg), Err(Error::Config(_))));
}

#[test]
fn waveform_dump_layout() {
    let l = link(2, 0.0);
    let w = synthesize_wdm(&mut sources(2, "PM-QPSK", 1), &l.grid, &small_cfg(64)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("frame.c64");
    write_waveform(&w, &l.grid, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes.len(), w.len() * 16);
    let x0 = f32::from_le_bytes(bytes[0..4].try_into().unwrap());
    assert!((x0 as f64 - w.x[0].re).abs() < 1e-6 * w.x[0].norm().max(1e-3));
    let meta = std::fs::read_to_string(dir.path().join("frame.c64.json")).unwrap();
    assert!(meta.contains("\"sample_rate_thz\"") && meta.contains("\"seeds\""));
}
