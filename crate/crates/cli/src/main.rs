mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "gesturegen", version, about = "Speech-driven face, body and hand gesture synthesis")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    subject: Option<String>,
    /// Discriminator / sync classifier window length (16, 32 or 64).
    #[arg(long, global = true)]
    window_length: Option<usize>,
    /// Train with the regression loss only.
    #[arg(long, global = true)]
    no_adversarial: bool,
    /// Base channel width of the generator, discriminator and sync classifier.
    #[arg(long, global = true)]
    base_channels: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute 28-dimensional speech features of a WAV file.
    ExtractFeatures { input: PathBuf, output: PathBuf },
    /// Confidence-filter and gap-fill the sequences of a manifest.
    Preprocess { manifest: PathBuf, out_dir: PathBuf },
    /// Train a subject-specific model from the manifest named in the run configuration.
    Train { run_config: PathBuf, output: PathBuf },
    /// Predict face, body and hand streams for a WAV or feature file.
    Synthesize { model: PathBuf, input: PathBuf, out_dir: PathBuf },
    /// Lip error, random baseline and sync accuracy on a manifest.
    Evaluate { model: PathBuf, manifest: PathBuf, report: PathBuf },
    /// Mean discriminator probability that body and hand motion fit the audio.
    SyncScore { model: PathBuf, features: PathBuf, body: PathBuf, hand: PathBuf },
    /// Write a deterministic synthetic corpus and its manifest.
    GenerateCorpus {
        out_dir: PathBuf,
        #[arg(long, default_value_t = 20)]
        sequences: usize,
        #[arg(long, default_value_t = 600)]
        length: usize,
    },
}

impl Cli {
    fn run_config(&self, path: Option<&std::path::Path>) -> gesture_core::Result<RunConfig> {
        let mut c = RunConfig::load_or_default(path.or(self.config.as_deref()))?;
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        if let Some(s) = &self.subject {
            c.subject = Some(s.clone());
        }
        if let Some(l) = self.window_length {
            c.discriminator.window_length = l;
            c.evaluation.sync_window_lengths = vec![l];
        }
        if self.no_adversarial {
            c.train.adversarial = false;
        }
        if let Some(b) = self.base_channels {
            c.generator.base_channels = b;
            c.discriminator.base_channels = b;
            c.sync.base_channels = b;
        }
        c.finalize()?;
        Ok(c)
    }
}

fn run(cli: &Cli) -> Result<(), commands::Failure> {
    match &cli.command {
        Command::ExtractFeatures { input, output } => commands::extract(&cli.run_config(None)?, input, output)?,
        Command::Preprocess { manifest, out_dir } => commands::preprocess(&cli.run_config(None)?, manifest, out_dir)?,
        Command::Train { run_config, output } => {
            if cli.config.is_some() {
                return Err(commands::Failure::Usage("train takes its configuration as a positional argument".into()));
            }
            commands::train(&cli.run_config(Some(run_config))?, output)?
        }
        Command::Synthesize { model, input, out_dir } => {
            commands::synthesize(&cli.run_config(None)?, model, input, out_dir)?
        }
        Command::Evaluate { model, manifest, report } => {
            commands::evaluate(&cli.run_config(None)?, model, manifest, report)?
        }
        Command::SyncScore { model, features, body, hand } => {
            let p = commands::sync_score(model, features, body, hand)?;
            println!("{p:.6}");
        }
        Command::GenerateCorpus { out_dir, sequences, length } => {
            commands::generate_corpus(&cli.run_config(None)?, out_dir, *sequences, *length)?
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(commands::Failure::Data(e)) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(2)
        }
    }
}
