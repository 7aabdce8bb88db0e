use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use in_ucds::model::ModelKind;
use in_ucds_cli::{
    cmd_compare, cmd_evaluate, cmd_train, format_table, load_config, parse_methods, CliError,
    CONFIG_KEYS,
};

/// Fairness-aware recommender training and evaluation.
#[derive(Parser)]
#[command(name = "in-ucds", version, after_long_help = config_key_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a config file; writes checkpoint, results,
    /// fairness curve, and a run manifest under the output directory.
    Train {
        /// Flat key=value config file (see --help for the key list).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-evaluate a saved checkpoint on its dataset's test split.
    Evaluate {
        /// Backbone the checkpoint must hold: pmf or neumf.
        #[arg(long)]
        model: ModelKind,
        /// Dataset directory the checkpoint was trained on.
        #[arg(long)]
        dataset: PathBuf,
        /// Checkpoint file written by `train`.
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Train several pairing methods with a shared backbone and seed, then
    /// emit a merged metric table and joint fairness curve.
    Compare {
        /// Base config; its `method` key is overridden per run.
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated subset of: original, in-ucds, in-naive.
        #[arg(long, default_value = "original,in-ucds,in-naive")]
        methods: String,
    },
}

fn config_key_help() -> String {
    let mut s = String::from("Config file keys (key=value, one per line, # comments):\n");
    for (key, desc) in CONFIG_KEYS {
        s.push_str(&format!("  {key:<20} {desc}\n"));
    }
    s
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train { config, seed, out } => {
            let mut spec = load_config(&config)?;
            if let Some(s) = seed {
                spec.train.seed = s;
            }
            if let Some(o) = out {
                spec.out_dir = o;
            }
            let manifest = cmd_train(&spec)?;
            println!(
                "run {} finished (best epoch {})",
                manifest.run_id, manifest.best_epoch
            );
            print!(
                "{}",
                format_table(&[(spec.method.to_string(), &manifest.test_metrics)])
            );
            println!(
                "manifest: {}",
                manifest
                    .spec
                    .out_dir
                    .join(format!("{}_manifest.json", manifest.run_id))
                    .display()
            );
        }
        Command::Evaluate {
            model,
            dataset,
            checkpoint,
        } => {
            let report = cmd_evaluate(model, &dataset, &checkpoint)?;
            print!("{}", format_table(&[(model.to_string(), &report)]));
        }
        Command::Compare { config, methods } => {
            let spec = load_config(&config)?;
            let methods = parse_methods(&methods)?;
            let outcome = cmd_compare(&spec, &methods)?;
            print!("{}", outcome.table);
            println!("table: {}", outcome.table_path.display());
            println!("joint curve: {}", outcome.joint_curve_path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
