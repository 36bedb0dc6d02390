//! Per-channel comparison of two result files.

use std::fmt::Write as _;

use crate::output::ReportFile;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct DiffRow {
    pub channel_index: usize,
    pub f_center_thz: f64,
    pub eta_a_db: f64,
    pub eta_b_db: f64,
    /// `b − a`.
    pub gap_db: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct DiffReport {
    pub label_a: String,
    pub label_b: String,
    pub threshold_db: f64,
    pub rows: Vec<DiffRow>,
}

impl DiffReport {
    pub fn mean_abs_gap(&self) -> f64 {
        self.rows.iter().map(|r| r.gap_db.abs()).sum::<f64>() / self.rows.len() as f64
    }

    pub fn max_abs_gap(&self) -> f64 {
        self.rows.iter().map(|r| r.gap_db.abs()).fold(0.0, f64::max)
    }

    pub fn flagged(&self) -> usize {
        self.rows.iter().filter(|r| r.flagged).count()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "a = {}\nb = {}", self.label_a, self.label_b).unwrap();
        writeln!(s, "{:>7} {:>12} {:>10} {:>10} {:>10}", "channel", "f_THz", "eta_a_dB", "eta_b_dB", "gap_dB").unwrap();
        for r in &self.rows {
            writeln!(
                s,
                "{:>7} {:>12.6} {:>10.3} {:>10.3} {:>10.3}{}",
                r.channel_index,
                r.f_center_thz,
                r.eta_a_db,
                r.eta_b_db,
                r.gap_db,
                if r.flagged { "  *" } else { "" }
            )
            .unwrap();
        }
        writeln!(
            s,
            "mean |gap| {:.3} dB, max |gap| {:.3} dB, {} of {} channels above {} dB",
            self.mean_abs_gap(),
            self.max_abs_gap(),
            self.flagged(),
            self.rows.len(),
            self.threshold_db
        )
        .unwrap();
        s
    }
}

/// Gap table over the channels both files contain. Files from different
/// configurations are refused unless `force`; frequencies must agree.
pub fn diff_reports(a: &ReportFile, b: &ReportFile, threshold_db: f64, force: bool) -> Result<DiffReport, CliError> {
    if !force && a.config_hash != b.config_hash {
        return Err(CliError::Config(format!(
            "config hashes differ ({} vs {}); pass --force to compare anyway",
            a.config_hash, b.config_hash
        )));
    }
    let mut rows = Vec::new();
    for ra in &a.rows {
        if let Some(rb) = b.rows.iter().find(|r| r.channel_index == ra.channel_index) {
            if (ra.f_center_thz - rb.f_center_thz).abs() > 1e-6 {
                return Err(CliError::Config(format!(
                    "grid mismatch at channel {}: {} vs {} THz",
                    ra.channel_index, ra.f_center_thz, rb.f_center_thz
                )));
            }
            let gap = rb.eta_db - ra.eta_db;
            rows.push(DiffRow {
                channel_index: ra.channel_index,
                f_center_thz: ra.f_center_thz,
                eta_a_db: ra.eta_db,
                eta_b_db: rb.eta_db,
                gap_db: gap,
                flagged: !(gap.abs() <= threshold_db),
            });
        }
    }
    if rows.is_empty() {
        return Err(CliError::Config("grid mismatch: the files share no channel".into()));
    }
    let label = |r: &ReportFile| format!("{} {} ({})", r.estimator(), r.format(), r.path.display());
    Ok(DiffReport { label_a: label(a), label_b: label(b), threshold_db, rows })
}
