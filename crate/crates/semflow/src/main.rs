use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semflow::config::Settings;
use semflow::pipeline::{run, Stage};
use semflow::report::write_exports;

#[derive(Parser)]
#[command(name = "semflow", version, about = "Characterize and classify long documents by their semantic flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Strip boilerplate, split sentences and filter tokens.
    Ingest(Settings),
    /// Average word vectors into sentence vectors.
    Embed(Settings),
    /// Build the minimally connected k-NN sentence graph.
    Graph(Settings),
    /// Detect semantic communities with Louvain.
    Communities(Settings),
    /// Build the community transition chain.
    Markov(Settings),
    /// Count motifs for each strategy and threshold.
    Motifs(Settings),
    /// Cross-validate classifiers on motif features.
    Classify(Settings),
    /// Run every stage and write all exports.
    Pipeline(Settings),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (settings, until, exports) = match cli.command {
        Command::Ingest(s) => (s, Stage::Ingest, vec![Stage::Ingest]),
        Command::Embed(s) => (s, Stage::Embed, vec![Stage::Embed]),
        Command::Graph(s) => (s, Stage::Graph, vec![Stage::Graph]),
        Command::Communities(s) => (s, Stage::Communities, vec![Stage::Communities]),
        Command::Markov(s) => (s, Stage::Markov, vec![Stage::Markov]),
        Command::Motifs(s) => (s, Stage::Motifs, vec![Stage::Motifs]),
        Command::Classify(s) => (s, Stage::Classify, vec![Stage::Motifs, Stage::Classify]),
        Command::Pipeline(s) => {
            (s, Stage::Classify, vec![Stage::Graph, Stage::Communities, Stage::Markov, Stage::Motifs, Stage::Classify])
        }
    };
    let result = settings.with_file().and_then(Settings::resolve).and_then(|config| {
        let outcome = run(&config, until)?;
        write_exports(&outcome, &config.out, &exports)?;
        for (stage, stats) in &outcome.cache {
            log::info!("cache {stage}: {} hit(s), {} miss(es)", stats.hits, stats.misses);
        }
        log::info!("wrote exports to {}", config.out.display());
        Ok(outcome.exclusions.len())
    });
    match result {
        Ok(0) => ExitCode::SUCCESS,
        Ok(n) => {
            log::warn!("{n} book(s) excluded; see exclusions.tsv");
            ExitCode::from(1)
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(2)
        }
    }
}
