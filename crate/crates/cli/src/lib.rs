//! The `quizforge` command line. [`run`] takes argv and returns the exit
//! code: 0 on success, 1 for invalid flags, config or input data, 2 for
//! file system or network failures.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;

use clap::error::ErrorKind;
use clap::Parser;

use args::{
    Cli, Command, CorpusCommand, DatasetCommand, EvalCommand, MockCommand, ReviewCommand,
    TransformCommand,
};
use commands::Report;
use config::PipelineConfig;
use error::{CliError, CliResult, EXIT_INVALID};

pub fn command() -> clap::Command {
    <Cli as clap::CommandFactory>::command()
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_INVALID,
            };
        }
    };
    init_logging(cli.verbose);
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: cannot start async runtime: {e}");
            return error::EXIT_IO;
        }
    };
    let json = cli.json;
    match runtime.block_on(dispatch(cli)) {
        Ok(report) => {
            if json {
                println!("{}", report.json);
            } else {
                print!("{}", report.text);
            }
            report.code
        }
        Err(e) => {
            if json {
                println!(
                    "{}",
                    serde_json::json!({"error": e.message, "exit_code": e.code})
                );
            }
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => tracing_subscriber::filter::LevelFilter::WARN,
        1 => tracing_subscriber::filter::LevelFilter::INFO,
        _ => tracing_subscriber::filter::LevelFilter::DEBUG,
    };
    let _ = tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_max_level(level)
        .try_init();
}

async fn dispatch(cli: Cli) -> CliResult<Report> {
    let cfg = match &cli.config {
        Some(path) => {
            if !path.exists() {
                return Err(CliError::invalid(format!(
                    "config file {} does not exist",
                    path.display()
                )));
            }
            PipelineConfig::load(path)?
        }
        None => PipelineConfig::default(),
    };
    match &cli.command {
        Command::Corpus(CorpusCommand::Clean(a)) => commands::corpus_clean(&cfg, a),
        Command::Stats(a) => commands::stats(&cfg, a),
        Command::Generate(a) => commands::generate(&cfg, a).await,
        Command::Transform(TransformCommand::McqToSaq(a)) => commands::mcq_to_saq(a),
        Command::Score(a) => commands::score(&cfg, a),
        Command::Dataset(DatasetCommand::Build(a)) => commands::dataset_build(&cfg, a),
        Command::Dataset(DatasetCommand::Split(a)) => commands::dataset_split(&cfg, a),
        Command::Dataset(DatasetCommand::EmitConfig(a)) => commands::emit_config(a),
        Command::Eval(EvalCommand::Run(a)) => commands::eval_run(&cfg, a).await,
        Command::Eval(EvalCommand::Report(a)) => commands::eval_report(a),
        Command::Review(ReviewCommand::Serve(a)) => commands::review_serve(&cfg, a, cli.json).await,
        Command::Review(ReviewCommand::Sample(a)) => commands::review_sample(&cfg, a),
        Command::Mock(MockCommand::Serve(a)) => commands::mock_serve(&cfg, a, cli.json).await,
    }
}
