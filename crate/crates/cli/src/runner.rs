//! Executes the format × estimator matrix of a scenario and writes results.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use nli_core::nli::{eta_from_kernels, eta_rp1_mc, egn_moments, link_kernels, ChannelEta, EtaReport, KernelSet};
use nli_core::moments::gaussian_reference;
use nli_core::ssfm::eta_ssfm;
use nli_core::Estimator;

use crate::config::Scenario;
use crate::formats::PreparedFormat;
use crate::output::{comparison, csv_file_name, eta_svg, provenance_line, read_report, report_csv, GapStats};
use crate::CliError;

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub csv_files: Vec<PathBuf>,
    pub gaps: Vec<GapStats>,
    /// Failed cells, `estimator/format: message`.
    pub failures: Vec<String>,
    pub numerical_failure: bool,
}

#[derive(Clone, Copy)]
enum Cell {
    Gn,
    Format(usize, Estimator),
}

fn run_cell(
    sc: &Scenario,
    formats: &[PreparedFormat],
    kernels: &Option<Vec<KernelSet>>,
    cell: Cell,
) -> Result<EtaReport, CliError> {
    let link = &sc.link;
    let mut report = match cell {
        Cell::Gn => eta_from_kernels(link, kernels.as_ref().expect("kernels"), &gaussian_reference(), Estimator::GN)?,
        Cell::Format(f, est) => {
            let fmt = &formats[f];
            match est {
                Estimator::FourD => {
                    eta_from_kernels(link, kernels.as_ref().expect("kernels"), fmt.moments(link, sc.window).as_ref(), est)?
                }
                Estimator::EGN => eta_from_kernels(link, kernels.as_ref().expect("kernels"), &egn_moments(&fmt.target), est)?,
                Estimator::RP1MC => {
                    let src = fmt.source(sc.seed(), 0)?;
                    let channels = sc
                        .channels
                        .iter()
                        .map(|&i| eta_rp1_mc(&src, link, i, &sc.mc).map_err(CliError::from))
                        .collect::<Result<Vec<ChannelEta>, _>>()?;
                    EtaReport { estimator: est, format: String::new(), link_hash: String::new(), channels }
                }
                Estimator::SSFM => {
                    let sources = (0..link.grid.n_channels())
                        .map(|k| fmt.source(sc.seed(), k as u64))
                        .collect::<Result<Vec<_>, _>>()?;
                    let rep = eta_ssfm(link, &sources, &sc.ssfm, &sc.channels)?;
                    EtaReport { estimator: est, format: String::new(), link_hash: String::new(), channels: rep.channels }
                }
                Estimator::GN => unreachable!("GN is a separate cell"),
            }
        }
    };
    report.format = match cell {
        Cell::Gn => "Gaussian".into(),
        Cell::Format(f, _) => formats[f].label().to_string(),
    };
    report.link_hash = sc.hash.clone();
    if report.channels.iter().any(|c| !c.eta.is_finite() && sc.link.fiber.gamma > 0.0) {
        return Err(CliError::Numerical("non-finite η".into()));
    }
    Ok(report)
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Runs every cell, then writes CSVs, `comparison.csv`, `eta_vs_channel.svg`,
/// `report.txt` and the resolved configuration. Failed cells are listed in
/// `errors.txt`; the others are still written.
pub fn run(sc: &Scenario, out_dir: &Path) -> Result<RunSummary, CliError> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    let formats = sc.formats.iter().map(|f| f.prepare()).collect::<Result<Vec<_>, _>>()?;
    let needs_kernels = sc.estimators.iter().any(|e| matches!(e, Estimator::FourD | Estimator::GN | Estimator::EGN));
    let kernels = needs_kernels.then(|| link_kernels(&sc.link, &sc.model, &[]));

    let mut cells = Vec::new();
    if sc.estimators.contains(&Estimator::GN) {
        cells.push(Cell::Gn);
    }
    for f in 0..formats.len() {
        for &e in &sc.estimators {
            if e != Estimator::GN {
                cells.push(Cell::Format(f, e));
            }
        }
    }
    let results: Vec<Result<EtaReport, CliError>> =
        cells.par_iter().map(|&c| run_cell(sc, &formats, &kernels, c)).collect();

    let mut summary = RunSummary {
        out_dir: out_dir.to_path_buf(),
        csv_files: Vec::new(),
        gaps: Vec::new(),
        failures: Vec::new(),
        numerical_failure: false,
    };
    write(
        &out_dir.join("config.resolved.toml"),
        &(provenance_line(&sc.hash, sc.seed()) + &sc.config.to_toml()),
    )?;
    for (cell, res) in cells.iter().zip(results) {
        match res {
            Ok(rep) => {
                let path = out_dir.join(csv_file_name(&rep));
                write(&path, &report_csv(&rep, sc.seed())?)?;
                summary.csv_files.push(path);
            }
            Err(e) => {
                let name = match cell {
                    Cell::Gn => "GN/Gaussian".to_string(),
                    Cell::Format(f, est) => format!("{est}/{}", formats[*f].label()),
                };
                if matches!(e, CliError::Numerical(_)) {
                    summary.numerical_failure = true;
                }
                summary.failures.push(format!("{name}: {e}"));
            }
        }
    }
    let errors = out_dir.join("errors.txt");
    if summary.failures.is_empty() {
        if errors.exists() {
            std::fs::remove_file(&errors)?;
        }
    } else {
        write(&errors, &(provenance_line(&sc.hash, sc.seed()) + &summary.failures.join("\n") + "\n"))?;
    }

    let reports = summary.csv_files.iter().map(|p| read_report(p)).collect::<Result<Vec<_>, _>>()?;
    let (table, gaps) = comparison(&reports);
    write(&out_dir.join("comparison.csv"), &(provenance_line(&sc.hash, sc.seed()) + &table))?;
    write(&out_dir.join("eta_vs_channel.svg"), &eta_svg(&reports, &sc.config.scenario.name))?;

    let mut rep = provenance_line(&sc.hash, sc.seed());
    writeln!(rep, "scenario: {}", sc.config.scenario.name).unwrap();
    writeln!(rep, "formats: {}", formats.iter().map(|f| f.label()).collect::<Vec<_>>().join(", ")).unwrap();
    writeln!(rep, "estimators: {}", sc.estimators.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ")).unwrap();
    writeln!(rep, "gap summary (other - reference, dB):").unwrap();
    for g in &gaps {
        writeln!(rep, "  {} - {}: mean |gap| {:.3}, max |gap| {:.3} over {} channels", g.other, g.reference, g.mean_abs_db, g.max_abs_db, g.n).unwrap();
    }
    if !summary.failures.is_empty() {
        writeln!(rep, "failed cells: {}", summary.failures.len()).unwrap();
    }
    write(&out_dir.join("report.txt"), &rep)?;
    summary.gaps = gaps;
    Ok(summary)
}
