use std::path::PathBuf;
use std::process::ExitCode;

use blocksig::cli::{cmd_analyze, cmd_build_dataset, cmd_eval, cmd_simulate, cmd_train, Layout, RunConfig};
use blocksig::pipeline::Task;
use blocksig::ErrorKind;
use clap::{Args, Parser, Subcommand};

/// Blockage-prediction datasets and models from simulated mmWave beam powers.
#[derive(Parser)]
#[command(name = "blocksig", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WithTask {
    #[command(flatten)]
    common: Common,
    /// occurrence, instance, severity or direction
    #[arg(long)]
    task: Task,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the sequence corpus.
    Simulate(Common),
    /// Build one dataset per prediction horizon.
    BuildDataset(WithTask),
    /// Train one model per prediction horizon.
    Train(WithTask),
    /// Score the trained models on their validation splits.
    Eval(WithTask),
    /// Pre-blockage statistics of the corpus.
    Analyze(Common),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<blocksig::Error>().map(blocksig::Error::kind) {
        Some(ErrorKind::Io) => 1,
        Some(ErrorKind::Config) => 2,
        Some(ErrorKind::Data) => 3,
        Some(ErrorKind::Numeric) => 4,
        None => 1,
    }
}

fn setup(common: &Common) -> anyhow::Result<(RunConfig, Layout)> {
    let cfg = RunConfig::load(&common.config)?;
    let root = common.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    Ok((cfg, Layout::new(root)))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate(c) => {
            let (cfg, layout) = setup(&c)?;
            for p in cmd_simulate(&cfg, &layout)? {
                println!("wrote {}", p.display());
            }
        }
        Command::BuildDataset(t) => {
            let (cfg, layout) = setup(&t.common)?;
            for p in cmd_build_dataset(&cfg, &layout, t.task)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Train(t) => {
            let (cfg, layout) = setup(&t.common)?;
            for p in cmd_train(&cfg, &layout, t.task)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Eval(t) => {
            let (cfg, layout) = setup(&t.common)?;
            print!("{}", cmd_eval(&cfg, &layout, t.task)?.to_csv());
        }
        Command::Analyze(c) => {
            let (cfg, layout) = setup(&c)?;
            for p in cmd_analyze(&cfg, &layout)? {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
