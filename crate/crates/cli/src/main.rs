//! `lodcov`: language coverage of Linked Open Data knowledge graphs.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 completed with warnings.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use lodcov_core::pipeline::{self, PipelineError, RunConfig};
use lodcov_core::remote_sources::{Transport, UreqTransport};

#[derive(Parser)]
#[command(name = "lodcov", version, about = "Measure how well LOD knowledge graphs cover each language")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (`key = value` lines).
    #[arg(long, short)]
    config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// More log output (repeatable).
    #[arg(long, short, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Count language-tagged entities in the configured dumps.
    Count(Common),
    /// Fetch Wikipedia article counts for the configured editions.
    FetchWiki(Common),
    /// Fold counts onto WALS languoids and write the coverage table.
    Build(Common),
    /// Cluster, categorize and write the report.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Reference labels (`wals_code,label`) for NMI; overrides the config.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Run count, fetch-wiki, build and analyze in sequence.
    Report(Common),
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Data(e.to_string())
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}

fn load_config(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::load(&common.config).map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn transport() -> Arc<dyn Transport> {
    Arc::new(UreqTransport::new())
}

fn run(command: Command) -> Result<Vec<String>, Failure> {
    match command {
        Command::Count(common) => {
            let cfg = load_config(&common)?;
            let out = pipeline::cmd_count(&cfg)?;
            println!("{}: {} rows", out.path.display(), out.rows.len());
            Ok(out.warnings)
        }
        Command::FetchWiki(common) => {
            let cfg = load_config(&common)?;
            let out = pipeline::cmd_fetch_wiki(&cfg, transport())?;
            println!(
                "{}: {} editions, {} failed",
                cfg.articles_csv().display(),
                out.articles.len(),
                out.failed
            );
            Ok(out.warnings)
        }
        Command::Build(common) => {
            let cfg = load_config(&common)?;
            let out = pipeline::cmd_build(&cfg, transport())?;
            println!(
                "{}: {} languoids, {} unmapped tags, {} unmapped editions",
                cfg.coverage_json().display(),
                out.table.len(),
                out.unmapped_tags.len(),
                out.unmapped_editions.len()
            );
            Ok(out.warnings)
        }
        Command::Analyze { common, reference } => {
            let mut cfg = load_config(&common)?;
            if reference.is_some() {
                cfg.analysis.reference = reference;
            }
            let out = pipeline::cmd_analyze(&cfg)?;
            summarize(&cfg, &out.report);
            Ok(out.warnings)
        }
        Command::Report(common) => {
            let cfg = load_config(&common)?;
            let out = pipeline::run_report(&cfg, transport())?;
            summarize(&cfg, &out.report);
            Ok(out.warnings)
        }
    }
}

fn summarize(cfg: &RunConfig, report: &pipeline::RunReport) {
    let meta = &report.metadata;
    println!(
        "{}: {} languoids, |L*| = {}",
        cfg.report_json().display(),
        report.rows.len(),
        meta.l_star
    );
    for (category, n) in &meta.category_histogram {
        println!("  {:<12} {n}", category.name());
    }
    if let Some(nmi) = &meta.nmi {
        println!("  NMI vs {} = {:.4} over {} languages", nmi.reference, nmi.value, nmi.common_languages);
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let verbose = match &cli.command {
        Command::Count(c) | Command::FetchWiki(c) | Command::Build(c) | Command::Report(c) => c.verbose,
        Command::Analyze { common, .. } => common.verbose,
    };
    init_logging(verbose);

    match run(cli.command) {
        Ok(warnings) if warnings.is_empty() => ExitCode::SUCCESS,
        Ok(warnings) => {
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::from(3)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
