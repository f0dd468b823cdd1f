use std::io::{self, IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mwer_cli::align::{cmd_align, AlignOptions};
use mwer_cli::error::CliError;
use mwer_cli::eval::{cmd_eval, EvalOptions};
use mwer_cli::server::{cmd_serve, ServerConfig};
use mwer_cli::stream::{cmd_simulate, cmd_stream_eval, remap_schedule, MockKind, SimulateOptions, StreamOptions};
use mwer_core::annotation::Mode;
use mwer_core::metrics::{AggregateConfig, Denominator, EvalConfig, Weighting};
use mwer_core::streaming::{HistogramConfig, Pacing};

#[derive(Parser)]
#[command(name = "mwer", version, about = "Multi-reference word error rate evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Align one hypothesis against one annotated reference.
    Align {
        #[arg(long = "ref")]
        reference: String,
        #[arg(long = "hyp")]
        hypothesis: String,
        #[arg(long)]
        json: bool,
        /// Also honored via MWER_NO_COLOR or a non-terminal stdout.
        #[arg(long, env = "MWER_NO_COLOR")]
        no_color: bool,
        #[command(flatten)]
        scoring: Scoring,
    },
    /// Score every hypothesis of a JSONL corpus and aggregate per system.
    Eval {
        corpus: PathBuf,
        #[command(flatten)]
        scoring: Scoring,
        #[arg(long, value_enum, default_value_t = WeightingArg::Micro)]
        weighting: WeightingArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Bootstrap resamples for the confidence interval; 0 disables it.
        #[arg(long, default_value_t = 1000)]
        resamples: usize,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Partial-alignment diagram and prescription histogram for a session.
    StreamEval {
        #[arg(long)]
        history: PathBuf,
        #[arg(long)]
        timed_words: PathBuf,
        #[arg(long)]
        annotation: String,
        /// Replay a flood-paced history as if sent in real time.
        #[arg(long)]
        remap: bool,
        /// Send chunks at this fixed interval when remapping.
        #[arg(long, requires = "remap")]
        chunk_interval: Option<f64>,
        #[arg(long)]
        recording: Option<String>,
        /// Histogram bin width in seconds.
        #[arg(long, default_value_t = 0.25)]
        bins: f64,
        #[arg(long, default_value_t = 20)]
        rows: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        scoring: Scoring,
    },
    /// Run a scripted streaming system over timed words.
    Simulate {
        #[arg(long)]
        timed_words: PathBuf,
        /// `echo`, `delay:SECONDS` or `context:SECONDS`.
        #[arg(long, default_value = "echo")]
        mock: MockKind,
        #[arg(long, default_value_t = 0.25)]
        chunk: f64,
        #[arg(long, value_enum, default_value_t = PacingArg::Realtime)]
        pacing: PacingArg,
        #[arg(long, default_value = "rec")]
        recording: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the dashboard and its JSON API.
    Serve {
        /// Static files; the corpus defaults to DIR/corpus.jsonl.
        dir: PathBuf,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[command(flatten)]
        scoring: Scoring,
    },
}

#[derive(Args, Clone)]
struct Scoring {
    #[arg(long, value_enum, default_value_t = ModeArg::Permissive)]
    mode: ModeArg,
    /// Maximum insertions charged per run, or `none`.
    #[arg(long, default_value = "4", value_parser = parse_cap)]
    insertion_cap: Cap,
    #[arg(long, value_enum, default_value_t = DenominatorArg::PathLength)]
    denominator: DenominatorArg,
}

#[derive(Clone, Copy)]
struct Cap(Option<u32>);

fn parse_cap(s: &str) -> Result<Cap, String> {
    if s == "none" {
        return Ok(Cap(None));
    }
    s.parse()
        .map(|n| Cap(Some(n)))
        .map_err(|_| format!("expected a count or `none`, got `{s}`"))
}

impl Scoring {
    fn config(&self) -> EvalConfig {
        EvalConfig {
            mode: match self.mode {
                ModeArg::Strict => Mode::Strict,
                ModeArg::Permissive => Mode::Permissive,
            },
            insertion_cap: self.insertion_cap.0,
            denominator: match self.denominator {
                DenominatorArg::PathLength => Denominator::PathLength,
                DenominatorArg::ShortestExpansion => Denominator::ShortestExpansion,
                DenominatorArg::LongestExpansion => Denominator::LongestExpansion,
            },
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Strict,
    Permissive,
}

#[derive(Clone, Copy, ValueEnum)]
enum DenominatorArg {
    PathLength,
    ShortestExpansion,
    LongestExpansion,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightingArg {
    Micro,
    Macro,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum PacingArg {
    Realtime,
    Flood,
}

fn run(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Align {
            reference,
            hypothesis,
            json,
            no_color,
            scoring,
        } => {
            let options = AlignOptions {
                config: scoring.config(),
                json,
                color: !no_color && io::stdout().is_terminal(),
            };
            print(&cmd_align(&reference, &hypothesis, &options)?);
            Ok(0)
        }
        Command::Eval {
            corpus,
            scoring,
            weighting,
            seed,
            resamples,
            format,
            out,
        } => {
            let options = EvalOptions {
                config: scoring.config(),
                aggregate: AggregateConfig {
                    weighting: match weighting {
                        WeightingArg::Micro => Weighting::Micro,
                        WeightingArg::Macro => Weighting::Macro,
                    },
                    seed,
                    resamples,
                    ..Default::default()
                },
                out,
            };
            let outcome = cmd_eval(&corpus, &options)?;
            if format == Format::Json {
                let mut text = serde_json::to_string_pretty(&outcome.aggregate).expect("aggregate serializes");
                text.push('\n');
                print(&text);
            } else {
                print(&outcome.table());
            }
            Ok(outcome.exit_code())
        }
        Command::StreamEval {
            history,
            timed_words,
            annotation,
            remap,
            chunk_interval,
            recording,
            bins,
            rows,
            out,
            scoring,
        } => {
            let options = StreamOptions {
                config: scoring.config(),
                annotation,
                remap: remap_schedule(remap, chunk_interval),
                recording,
                rows,
                histogram: HistogramConfig {
                    bin_width: bins,
                    ..Default::default()
                },
            };
            let outcome = cmd_stream_eval(&history, &timed_words, &out, &options)?;
            print(&format!(
                "{}: {} rows written to {}\n",
                outcome.recording_id,
                outcome.rows.len(),
                out.display()
            ));
            Ok(0)
        }
        Command::Simulate {
            timed_words,
            mock,
            chunk,
            pacing,
            recording,
            out,
        } => {
            let options = SimulateOptions {
                mock,
                chunk,
                pacing: match pacing {
                    PacingArg::Realtime => Pacing::Realtime,
                    PacingArg::Flood => Pacing::Flood,
                },
                recording_id: recording,
                ..Default::default()
            };
            let history = cmd_simulate(&timed_words, &out, &options)?;
            print(&format!(
                "{} outputs written to {}\n",
                history.outputs.len(),
                out.display()
            ));
            Ok(0)
        }
        Command::Serve {
            dir,
            corpus,
            port,
            scoring,
        } => {
            let mut config = ServerConfig::new(dir);
            if let Some(corpus) = corpus {
                config.corpus = corpus;
            }
            config.eval = scoring.config();
            let runtime = tokio::runtime::Runtime::new().map_err(CliError::io("tokio runtime"))?;
            runtime.block_on(cmd_serve(config, port))?;
            Ok(0)
        }
    }
}

fn print(text: &str) {
    let mut stdout = io::stdout().lock();
    // A closed pipe (e.g. `| head`) is not an error worth reporting.
    let _ = stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
