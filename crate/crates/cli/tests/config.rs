use nli_cli::{FormatSpec, Scenario, ScenarioConfig};
use nli_core::formats::CcdmLayout;
use nli_core::Estimator;

const MIN: &str = r#"
[scenario]
formats = ["PM-16QAM"]
estimators = ["gn", "4d"]
"#;

#[test]
fn defaults_are_materialized() {
    let sc = Scenario::from_text(MIN).unwrap();
    assert_eq!(sc.estimators, vec![Estimator::GN, Estimator::FourD]);
    assert_eq!(sc.link.grid.n_channels(), 5);
    assert!((sc.link.grid.symbol_rate - 0.045).abs() < 1e-15);
    assert_eq!(sc.channels, vec![0, 1, 2, 3, 4]);
    let again = Scenario::from_text(&sc.config.to_toml()).unwrap();
    assert_eq!(again.config, sc.config);
    assert_eq!(again.hash, sc.hash);
}

#[test]
fn hash_tracks_content() {
    let a = Scenario::from_text(MIN).unwrap();
    let b = Scenario::from_text(&format!("{MIN}\n[grid]\npower_dbm = 1.0\n")).unwrap();
    assert_ne!(a.hash, b.hash);
    assert_eq!(a.hash.len(), 16);
    let c = a.clone().with_seed(5);
    assert_ne!(c.hash, a.hash);
}

#[test]
fn format_strings() {
    let f: FormatSpec = "ps:PM-16QAM:entropy=6:n=100".parse().unwrap();
    assert_eq!(
        f,
        FormatSpec::Shaped { base: "PM-16QAM".into(), entropy_bits: 6.0, blocklength: Some(100), layout: CcdmLayout::PerPolarization }
    );
    assert_eq!(f.label(), "PS-16QAM-H6-n100");
    assert_eq!(f.to_string().parse::<FormatSpec>().unwrap(), f);
    let j: FormatSpec = "ps:PM-16QAM:entropy=7:n=inf:layout=joint4d".parse().unwrap();
    assert_eq!(j.to_string().parse::<FormatSpec>().unwrap(), j);
    assert!("ps:PM-16QAM:n=100".parse::<FormatSpec>().is_err());
    assert!("ps:PM-16QAM:entropy=6:n=0".parse::<FormatSpec>().is_err());
    assert!("PM-17QAM".parse::<FormatSpec>().is_err());
    assert!(matches!("file:x.const".parse::<FormatSpec>().unwrap(), FormatSpec::File(_)));
}

#[test]
fn shaped_format_prepares() {
    let f: FormatSpec = "ps:PM-16QAM:entropy=6:n=100".parse().unwrap();
    let p = f.prepare().unwrap();
    assert!((p.target.entropy_bits() - 6.0).abs() < 1e-9);
    assert!(p.ccdm.is_some());
    let inf: FormatSpec = "ps:PM-16QAM:entropy=6:n=inf".parse().unwrap();
    assert!(inf.prepare().unwrap().ccdm.is_none());
}

#[test]
fn parse_errors_carry_lines() {
    let e = ScenarioConfig::parse("[grid]\nn_channels = \"five\"\n").unwrap_err();
    assert!(e.to_string().contains("line 2"), "{e}");
    let e = Scenario::from_text(&format!("{MIN}\n[fiber]\nn_spans = 0\n")).unwrap_err();
    assert!(e.to_string().contains("n_spans"), "{e}");
    assert_eq!(e.exit_code(), 1);
}
