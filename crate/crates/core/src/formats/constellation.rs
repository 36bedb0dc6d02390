use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{config, Error, Result};

/// One 4D symbol: a complex amplitude per polarization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point4 {
    pub x: Complex64,
    pub y: Complex64,
}

impl Point4 {
    pub fn new(x: Complex64, y: Complex64) -> Self {
        Point4 { x, y }
    }

    pub fn energy(&self) -> f64 {
        self.x.norm_sqr() + self.y.norm_sqr()
    }

    /// `x^a x*^b y^c y*^d`.
    pub fn monomial(&self, e: [u8; 4]) -> Complex64 {
        let xc = self.x.conj();
        let yc = self.y.conj();
        self.x.powu(e[0] as u32) * xc.powu(e[1] as u32) * self.y.powu(e[2] as u32) * yc.powu(e[3] as u32)
    }

    fn dist(&self, o: &Point4) -> f64 {
        ((self.x - o.x).norm_sqr() + (self.y - o.y).norm_sqr()).sqrt()
    }
}

/// A finite 4D format with a probability mass function over its points.
/// Always normalized to unit mean power per polarization.
#[derive(Debug, Clone)]
pub struct Constellation4D {
    points: Vec<Point4>,
    probs: Vec<f64>,
    label: String,
}

const SUM_TOL: f64 = 1e-6;

impl Constellation4D {
    /// Validates and normalizes. Probabilities within 1e-6 of summing to one
    /// are renormalized; anything further off is rejected.
    pub fn new(label: impl Into<String>, points: Vec<Point4>, probs: Vec<f64>) -> Result<Self> {
        let label = label.into();
        if points.is_empty() {
            return Err(config(format!("{label}: constellation has no points")));
        }
        if points.len() != probs.len() {
            return Err(config(format!("{label}: {} points but {} probabilities", points.len(), probs.len())));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(config(format!("{label}: invalid probability {p}")));
        }
        if points.iter().any(|p| !(p.x.re.is_finite() && p.x.im.is_finite() && p.y.re.is_finite() && p.y.im.is_finite())) {
            return Err(config(format!("{label}: non-finite coordinate")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(config(format!("{label}: probabilities sum to {sum}, expected 1")));
        }
        let probs: Vec<f64> = probs.iter().map(|p| p / sum).collect();
        let (mut px, mut py) = (0.0, 0.0);
        for (pt, p) in points.iter().zip(&probs) {
            px += p * pt.x.norm_sqr();
            py += p * pt.y.norm_sqr();
        }
        if px <= 0.0 || py <= 0.0 {
            return Err(config(format!("{label}: a polarization carries zero power")));
        }
        let (sx, sy) = (px.sqrt().recip(), py.sqrt().recip());
        let points: Vec<Point4> = points.iter().map(|p| Point4::new(p.x * sx, p.y * sy)).collect();
        for i in 0..points.len() {
            for j in 0..i {
                if points[i].dist(&points[j]) < 1e-12 {
                    return Err(config(format!("{label}: points {j} and {i} coincide")));
                }
            }
        }
        Ok(Constellation4D { points, probs, label })
    }

    pub fn points(&self) -> &[Point4] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn entropy_bits(&self) -> f64 {
        -self.probs.iter().filter(|&&p| p > 0.0).map(|p| p * p.log2()).sum::<f64>()
    }

    pub fn mean_energy(&self) -> f64 {
        self.points.iter().zip(&self.probs).map(|(pt, p)| p * pt.energy()).sum()
    }

    /// Single-slot moment `E[x^a x*^b y^c y*^d]`.
    pub fn moment(&self, e: [u8; 4]) -> Complex64 {
        self.points.iter().zip(&self.probs).map(|(pt, p)| pt.monomial(e) * *p).sum()
    }

    /// Marginal distributions of the two polarizations, as (value, prob) lists.
    pub fn marginals(&self) -> (Vec<(Complex64, f64)>, Vec<(Complex64, f64)>) {
        (marginal(self, |p| p.x), marginal(self, |p| p.y))
    }

    /// The format with the same polarization marginals but independent
    /// polarizations (what an i.i.d.-per-polarization model sees).
    pub fn polarization_factorized(&self) -> Constellation4D {
        let (mx, my) = self.marginals();
        let mut points = Vec::with_capacity(mx.len() * my.len());
        let mut probs = Vec::with_capacity(mx.len() * my.len());
        for (x, px) in &mx {
            for (y, py) in &my {
                points.push(Point4::new(*x, *y));
                probs.push(px * py);
            }
        }
        Constellation4D::new(format!("{}[factorized]", self.label), points, probs).expect("marginal product of a valid format is valid")
    }

    /// True if the polarizations are statistically independent.
    pub fn polarizations_independent(&self, tol: f64) -> bool {
        let (mx, my) = self.marginals();
        if mx.len() * my.len() < self.len() {
            return false;
        }
        let f = self.polarization_factorized();
        f.points.iter().zip(&f.probs).all(|(pt, p)| {
            let q = self
                .points
                .iter()
                .position(|o| o.dist(pt) < 1e-9)
                .map_or(0.0, |i| self.probs[i]);
            (q - p).abs() <= tol
        })
    }

    /// Invariance of the distribution under independent sign flips of the
    /// four real coordinates.
    pub fn is_sign_symmetric(&self, tol: f64) -> bool {
        let flips = [[-1.0, 1.0, 1.0, 1.0], [1.0, -1.0, 1.0, 1.0], [1.0, 1.0, -1.0, 1.0], [1.0, 1.0, 1.0, -1.0]];
        flips.iter().all(|s| {
            self.points.iter().zip(&self.probs).all(|(pt, p)| {
                let q = Point4::new(Complex64::new(s[0] * pt.x.re, s[1] * pt.x.im), Complex64::new(s[2] * pt.y.re, s[3] * pt.y.im));
                self.points
                    .iter()
                    .position(|o| o.dist(&q) < 1e-9)
                    .is_some_and(|i| (self.probs[i] - p).abs() <= tol)
            })
        })
    }

    /// Applies a common phase to both polarizations.
    pub fn rotated(&self, theta: f64) -> Constellation4D {
        let r = Complex64::from_polar(1.0, theta);
        let points = self.points.iter().map(|p| Point4::new(p.x * r, p.y * r)).collect();
        Constellation4D { points, probs: self.probs.clone(), label: self.label.clone() }
    }

    pub fn conjugated(&self) -> Constellation4D {
        let points = self.points.iter().map(|p| Point4::new(p.x.conj(), p.y.conj())).collect();
        Constellation4D { points, probs: self.probs.clone(), label: self.label.clone() }
    }

    /// Same points, new probabilities (renormalized per polarization).
    pub fn with_probs(&self, probs: Vec<f64>, label: impl Into<String>) -> Result<Constellation4D> {
        Constellation4D::new(label, self.points.clone(), probs)
    }

    /// Text form readable by [`parse_constellation`].
    pub fn to_text(&self) -> String {
        let mut s = format!("M={} dims=4\n", self.len());
        for (pt, p) in self.points.iter().zip(&self.probs) {
            s.push_str(&format!("{:.17e} {:.17e} {:.17e} {:.17e} {:.17e}\n", pt.x.re, pt.x.im, pt.y.re, pt.y.im, p));
        }
        s
    }
}

fn key(z: Complex64) -> (i64, i64) {
    ((z.re * 1e9).round() as i64, (z.im * 1e9).round() as i64)
}

fn marginal(c: &Constellation4D, f: impl Fn(&Point4) -> Complex64) -> Vec<(Complex64, f64)> {
    let mut m: BTreeMap<(i64, i64), (Complex64, f64)> = BTreeMap::new();
    for (pt, p) in c.points.iter().zip(&c.probs) {
        let z = f(pt);
        m.entry(key(z)).or_insert((z, 0.0)).1 += p;
    }
    m.into_values().filter(|(_, p)| *p > 0.0).collect()
}

fn qam_2d(order: usize) -> Result<Vec<Complex64>> {
    let grid = |levels: &[f64], im_levels: &[f64]| {
        let mut v = Vec::new();
        for &re in levels {
            for &im in im_levels {
                v.push(Complex64::new(re, im));
            }
        }
        v
    };
    match order {
        4 => Ok(grid(&[-1.0, 1.0], &[-1.0, 1.0])),
        8 => Ok(grid(&[-3.0, -1.0, 1.0, 3.0], &[-1.0, 1.0])),
        16 => Ok(grid(&[-3.0, -1.0, 1.0, 3.0], &[-3.0, -1.0, 1.0, 3.0])),
        64 => {
            let l = [-7.0, -5.0, -3.0, -1.0, 1.0, 3.0, 5.0, 7.0];
            Ok(grid(&l, &l))
        }
        _ => Err(config(format!("unsupported QAM order {order} (expected 4, 8, 16 or 64)"))),
    }
}

/// Dual-polarization QAM: the Cartesian product of a square (or, for 8 points,
/// rectangular 4×2) 2D grid over both polarizations. `probs` may be given per
/// 4D point (`order²` entries, x-major) or per 2D point (`order` entries,
/// applied independently on each polarization).
pub fn make_pm_qam(order_per_pol: usize, probs: Option<&[f64]>) -> Result<Constellation4D> {
    let pts = qam_2d(order_per_pol)?;
    let m = pts.len();
    let probs4 = match probs {
        None => vec![1.0 / (m * m) as f64; m * m],
        Some(p) if p.len() == m * m => p.to_vec(),
        Some(p) if p.len() == m => (0..m * m).map(|k| p[k / m] * p[k % m]).collect(),
        Some(p) => return Err(config(format!("PM-{order_per_pol}QAM: {} probabilities do not match {m} or {} points", p.len(), m * m))),
    };
    let points = (0..m * m).map(|k| Point4::new(pts[k / m], pts[k % m])).collect();
    let label = if order_per_pol == 4 { "PM-QPSK".to_string() } else { format!("PM-{order_per_pol}QAM") };
    Constellation4D::new(label, points, probs4)
}

/// Parses the text constellation format: a `M=<int> dims=4` header followed by
/// `M` rows of `xr xi yr yi [prob]`. Blank lines and `#` comments are skipped.
pub fn parse_constellation(text: &str, label: &str) -> Result<Constellation4D> {
    let mut rows = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = rows.next().ok_or(Error::Parse { line: 1, msg: "empty constellation file".into() })?;
    let mut m = None;
    let mut dims = None;
    for tok in header.split_whitespace() {
        let bad = || Error::Parse { line: hline, msg: format!("bad header token `{tok}`") };
        match tok.split_once('=') {
            Some(("M", v)) => m = Some(v.parse::<usize>().map_err(|_| bad())?),
            Some(("dims", v)) => dims = Some(v.parse::<usize>().map_err(|_| bad())?),
            _ => return Err(bad()),
        }
    }
    let m = m.ok_or(Error::Parse { line: hline, msg: "header lacks M=<int>".into() })?;
    if dims != Some(4) {
        return Err(Error::Parse { line: hline, msg: "header must declare dims=4".into() });
    }
    let mut points = Vec::with_capacity(m);
    let mut probs = Vec::with_capacity(m);
    let mut with_prob = None;
    for (line, row) in rows {
        let vals: std::result::Result<Vec<f64>, _> = row.split_whitespace().map(str::parse::<f64>).collect();
        let vals = vals.map_err(|e| Error::Parse { line, msg: format!("{e}") })?;
        let has_p = match vals.len() {
            4 => false,
            5 => true,
            k => return Err(Error::Parse { line, msg: format!("expected 4 or 5 columns, found {k}") }),
        };
        if *with_prob.get_or_insert(has_p) != has_p {
            return Err(Error::Parse { line, msg: "probability column present on some rows only".into() });
        }
        points.push(Point4::new(Complex64::new(vals[0], vals[1]), Complex64::new(vals[2], vals[3])));
        probs.push(if has_p { vals[4] } else { 1.0 });
        if points.len() > m {
            return Err(Error::Parse { line, msg: format!("more than M={m} rows") });
        }
    }
    if points.len() != m {
        return Err(Error::Parse { line: hline, msg: format!("header says M={m} but {} rows follow", points.len()) });
    }
    if with_prob != Some(true) {
        probs = vec![1.0 / m as f64; m];
    }
    Constellation4D::new(label, points, probs)
}

pub fn load_constellation(path: &Path) -> Result<Constellation4D> {
    let text = std::fs::read_to_string(path)?;
    let label = path.file_stem().and_then(|s| s.to_str()).unwrap_or("file");
    parse_constellation(&text, label)
}

const PRS64: &str = include_str!("../../fixtures/4d64prs.const");
const QAM8_STAR: &str = include_str!("../../fixtures/pm8qam_star.const");

pub fn builtin_names() -> &'static [&'static str] {
    &["PM-QPSK", "PM-8QAM", "PM-8QAM-star", "PM-16QAM", "PM-64QAM", "4D-64PRS"]
}

/// Looks up a built-in format by name (case-insensitive).
pub fn builtin(name: &str) -> Result<Constellation4D> {
    match name.to_ascii_uppercase().as_str() {
        "PM-QPSK" => make_pm_qam(4, None),
        "PM-8QAM" => make_pm_qam(8, None),
        "PM-8QAM-STAR" => parse_constellation(QAM8_STAR, "PM-8QAM-star"),
        "PM-16QAM" => make_pm_qam(16, None),
        "PM-64QAM" => make_pm_qam(64, None),
        "4D-64PRS" => parse_constellation(PRS64, "4D-64PRS"),
        _ => Err(config(format!("unknown format `{name}` (known: {})", builtin_names().join(", ")))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qpsk_is_constant_modulus() {
        let c = make_pm_qam(4, None).unwrap();
        assert_eq!(c.len(), 16);
        for p in c.points() {
            assert!((p.x.norm() - 1.0).abs() < 1e-12 && (p.y.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unsupported_order() {
        assert!(make_pm_qam(5, None).is_err());
    }

    #[test]
    fn unit_power_per_polarization() {
        for name in builtin_names() {
            let c = builtin(name).unwrap();
            assert!((c.moment([1, 1, 0, 0]).re - 1.0).abs() < 1e-12, "{name}");
            assert!((c.moment([0, 0, 1, 1]).re - 1.0).abs() < 1e-12, "{name}");
            assert!((c.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn parse_rejects_bad_sums_and_duplicates() {
        assert!(parse_constellation("M=2 dims=4\n1 0 1 0 0.4\n-1 0 -1 0 0.4\n", "t").is_err());
        assert!(parse_constellation("M=2 dims=4\n1 0 1 0\n1 0 1 0\n", "t").is_err());
        assert!(parse_constellation("M=2 dims=4\n1 0 1 0\n", "t").is_err());
        assert!(parse_constellation("M=1 dims=2\n1 0\n", "t").is_err());
        let err = parse_constellation("M=2 dims=4\n1 0 1 0\n1 x 1 0\n", "t").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn text_round_trip() {
        let c = builtin("4D-64PRS").unwrap();
        let d = parse_constellation(&c.to_text(), "rt").unwrap();
        for (a, b) in c.points().iter().zip(d.points()) {
            assert!(a.dist(b) < 1e-14);
        }
    }

    #[test]
    fn factorization_detects_dependence() {
        assert!(builtin("PM-16QAM").unwrap().polarizations_independent(1e-12));
        assert!(!builtin("4D-64PRS").unwrap().polarizations_independent(1e-12));
        assert!(builtin("4D-64PRS").unwrap().is_sign_symmetric(1e-12));
    }
}
