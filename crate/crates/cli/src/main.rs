use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nli_cli::{diff_reports, list_formats, read_report, run, CliError, Scenario};

#[derive(Parser)]
#[command(name = "nli", version, about = "Nonlinear-interference estimation for WDM links")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every format × estimator cell of a scenario.
    Run {
        config: PathBuf,
        /// Allow scenarios marked as full-scale.
        #[arg(long)]
        full: bool,
        /// Output directory (default: out/<scenario name>).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Per-channel gap between two result CSVs (b − a).
    Diff {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 0.3)]
        threshold: f64,
        /// Exit with status 3 if any channel exceeds the threshold.
        #[arg(long)]
        assert: bool,
        /// Compare files produced by different configurations.
        #[arg(long)]
        force: bool,
    },
    /// Check a scenario and print it with all defaults filled in.
    Validate { config: PathBuf },
    /// List built-in formats and the format-string syntax.
    ListFormats,
}

fn init_threads() {
    if let Some(n) = std::env::var("NLI_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn execute(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Run { config, full, out, seed } => {
            let mut sc = Scenario::load(&config)?;
            if let Some(s) = seed {
                sc = sc.with_seed(s);
            }
            if sc.config.scenario.full_only && !full {
                return Err(CliError::Config(format!(
                    "{} is a full-scale scenario; rerun with --full",
                    config.display()
                )));
            }
            let out = out.unwrap_or_else(|| PathBuf::from("out").join(&sc.config.scenario.name));
            let summary = run(&sc, &out)?;
            for p in &summary.csv_files {
                println!("wrote {}", p.display());
            }
            for g in &summary.gaps {
                println!("{} - {}: mean |gap| {:.3} dB, max {:.3} dB", g.other, g.reference, g.mean_abs_db, g.max_abs_db);
            }
            if !summary.failures.is_empty() {
                for f in &summary.failures {
                    eprintln!("failed: {f}");
                }
                return Err(if summary.numerical_failure {
                    CliError::Numerical(format!("{} cell(s) failed, see errors.txt", summary.failures.len()))
                } else {
                    CliError::Config(format!("{} cell(s) failed, see errors.txt", summary.failures.len()))
                });
            }
            Ok(())
        }
        Cmd::Diff { a, b, threshold, assert, force } => {
            let d = diff_reports(&read_report(&a)?, &read_report(&b)?, threshold, force)?;
            print!("{}", d.to_text());
            if assert && d.flagged() > 0 {
                return Err(CliError::Threshold(format!("{} channel(s) exceed {threshold} dB", d.flagged())));
            }
            Ok(())
        }
        Cmd::Validate { config } => {
            let sc = Scenario::load(&config)?;
            for f in &sc.formats {
                let p = f.prepare()?;
                if !p.target.is_sign_symmetric(1e-9) {
                    eprintln!("warning: {} is not sign-symmetric; the moment model assumes zero-mean, symmetric symbols", p.label());
                }
            }
            println!("# config_hash={}", sc.hash);
            print!("{}", sc.config.to_toml());
            Ok(())
        }
        Cmd::ListFormats => {
            print!("{}", list_formats());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    match execute(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nli: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
