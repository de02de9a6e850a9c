//! `mpad`: differential makeup presentation attack detection from the
//! command line.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use mpad_core::commands;
use mpad_core::config::PipelineConfig;
use mpad_core::features::FeatureChannel;
use mpad_core::model::Split;
use mpad_core::{Error, Execution};

#[derive(Parser)]
#[command(
    name = "mpad",
    version,
    about = "Differential makeup presentation attack detection"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Flat key=value configuration file; flags below override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Feature channel: embedding_diff, landmark_diff, lbp_grid, probe_only.
    #[arg(long, global = true)]
    channel: Option<FeatureChannel>,
    /// Embedding dimension.
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Seed for corpus synthesis.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run on a single thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Extract one feature row per manifest pair.
    Extract {
        manifest: PathBuf,
        /// Feature file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a detector on the train split of a feature file.
    Train {
        features: PathBuf,
        /// Model file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score feature rows with a trained detector.
    Score {
        model: PathBuf,
        features: PathBuf,
        /// Only score rows of this split.
        #[arg(long)]
        split: Option<Split>,
        /// Score file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// D-EER, BPCER10, BPCER20 and the DET table of a score file.
    Evaluate {
        scores: PathBuf,
        /// Directory for summary.csv and det.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Vulnerability of a face comparator to attacks at fixed FMRs.
    Vuln {
        /// Genuine comparison scores, one per line.
        #[arg(long)]
        genuine: PathBuf,
        /// Impostor comparison scores, one per line.
        #[arg(long)]
        impostor: PathBuf,
        /// Attack comparison scores, one per line.
        #[arg(long)]
        attack: PathBuf,
        /// Target FMRs in percent.
        #[arg(long, value_delimiter = ',', default_values_t = commands::DEFAULT_FMRS_PERCENT)]
        fmr: Vec<f64>,
        /// Directory for vulnerability.csv and score_stats.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate synthetic attacks from target and probe pools.
    Synth {
        /// Manifest whose reference images are the made-up targets.
        targets: PathBuf,
        /// Manifest of bona fide subjects; probe images are the attackers.
        probes: PathBuf,
        /// Number of attacks to generate.
        #[arg(long)]
        count: Option<usize>,
        /// Output directory for images, landmarks and manifest.csv.
        #[arg(long)]
        out: PathBuf,
    },
}

fn config(global: &GlobalArgs) -> Result<PipelineConfig> {
    let mut cfg = match &global.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(c) = global.channel {
        cfg.channel = c;
    }
    if let Some(d) = global.dim {
        cfg.set("dim", &d.to_string())?;
    }
    if let Some(s) = global.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn report_rows(errors: &[mpad_core::RowError]) {
    for e in errors {
        eprintln!("error: {e}");
    }
}

fn run(cli: Cli) -> Result<bool> {
    let mut cfg = config(&cli.global)?;
    let exec = if cli.global.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match cli.command {
        Command::Extract { manifest, out } => {
            let o = commands::cmd_extract(&manifest, &cfg, &out, exec)?;
            report_rows(&o.errors);
            println!(
                "extracted {} rows ({} failed) -> {}",
                o.rows.len(),
                o.errors.len(),
                out.display()
            );
            Ok(o.errors.is_empty())
        }
        Command::Train { features, out } => {
            let r = commands::cmd_train(&features, &cfg, &out, exec)?;
            println!("support vectors: {}", r.support_vectors);
            println!("training accuracy: {}", r.training_accuracy);
            if !r.converged {
                eprintln!(
                    "warning: solver stopped at the iteration limit ({})",
                    r.iterations
                );
            }
            Ok(true)
        }
        Command::Score {
            model,
            features,
            split,
            out,
        } => {
            let rows = commands::cmd_score(&model, &features, split, &out, exec)?;
            println!("scored {} rows -> {}", rows.len(), out.display());
            Ok(true)
        }
        Command::Evaluate { scores, out } => {
            let e = commands::cmd_evaluate(&scores, &out)?;
            println!("{e}");
            Ok(true)
        }
        Command::Vuln {
            genuine,
            impostor,
            attack,
            fmr,
            out,
        } => {
            let r = commands::cmd_vuln(&genuine, &impostor, &attack, &fmr, &out)?;
            print!("{}", r.rates_csv());
            Ok(true)
        }
        Command::Synth {
            targets,
            probes,
            count,
            out,
        } => {
            if let Some(c) = count {
                cfg.count = c;
            }
            let o = commands::cmd_synth(&targets, &probes, &cfg, &out, exec)?;
            eprintln!("targets: {}", o.targets);
            eprintln!("probes: {}", o.probes);
            println!(
                "{} attacks, {} bona fide{} -> {}",
                o.corpus.attacks,
                o.corpus.bona_fide,
                if o.corpus.with_replacement {
                    " (pairs drawn with replacement)"
                } else {
                    ""
                },
                o.corpus.manifest.display()
            );
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            if let Some(Error::Rows(rows)) = e.downcast_ref::<Error>() {
                report_rows(rows);
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::FAILURE
        }
    }
}
