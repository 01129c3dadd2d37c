use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gedyn::config::{ExperimentConfig, ProblemKind};
use gedyn::runner::{aggregate_file, emit_plots, execute, RECORDS_FILE};
use gedyn::HarnessError;
use gedyn_core::problems::{klandscapes_grammar, parity_grammar};

#[derive(Parser)]
#[command(
    name = "gedyn",
    version,
    about = "Grammatical evolution population-dynamics experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment matrix and write records, aggregates and plot scripts.
    Run(Box<RunArgs>),
    /// Aggregate an existing records file.
    Aggregate {
        #[arg(long, value_name = "FILE")]
        records: PathBuf,
        #[arg(long, value_name = "DIR", default_value = ".")]
        out_dir: PathBuf,
    },
    /// Write gnuplot scripts for the aggregates in a directory.
    Plot {
        #[arg(long, value_name = "DIR", default_value = ".")]
        out_dir: PathBuf,
    },
    /// Print a benchmark grammar as BNF.
    Grammar {
        #[arg(long)]
        problem: String,
        /// Number of parity inputs.
        #[arg(long, default_value_t = 3)]
        param: usize,
        #[arg(long, short, value_name = "FILE")]
        output: Option<PathBuf>,
    },
}

/// Overrides, applied on top of `--config` in this order.
#[derive(Args)]
struct RunArgs {
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    mapper: Option<String>,
    #[arg(long)]
    param: Option<String>,
    #[arg(long)]
    parity_params: Option<String>,
    #[arg(long)]
    klandscapes_params: Option<String>,
    #[arg(long)]
    runs: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    parents: Option<String>,
    #[arg(long)]
    offspring: Option<String>,
    #[arg(long)]
    generations: Option<String>,
    #[arg(long)]
    tournament_size: Option<String>,
    #[arg(long)]
    genotype_bits: Option<String>,
    #[arg(long)]
    crossover_rate: Option<String>,
    #[arg(long)]
    mutation_rate: Option<String>,
    #[arg(long)]
    codon_bits: Option<String>,
    #[arg(long)]
    max_wraps: Option<String>,
    #[arg(long)]
    depth_cap: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long)]
    id_fit: Option<String>,
    /// `offspring` or `parents`: which side wins fitness ties at replacement.
    #[arg(long)]
    ties: Option<String>,
    #[arg(long)]
    klandscapes_instance: Option<String>,
    #[arg(long, value_name = "DIR")]
    out_dir: Option<String>,
    #[arg(long)]
    jobs: Option<String>,
}

impl RunArgs {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        [
            ("problems", &self.problem),
            ("mapper", &self.mapper),
            ("param", &self.param),
            ("parity_params", &self.parity_params),
            ("klandscapes_params", &self.klandscapes_params),
            ("runs", &self.runs),
            ("seed", &self.seed),
            ("parents", &self.parents),
            ("offspring", &self.offspring),
            ("generations", &self.generations),
            ("tournament_size", &self.tournament_size),
            ("genotype_bits", &self.genotype_bits),
            ("crossover_rate", &self.crossover_rate),
            ("mutation_rate", &self.mutation_rate),
            ("codon_bits", &self.codon_bits),
            ("max_wraps", &self.max_wraps),
            ("depth_cap", &self.depth_cap),
            ("horizon", &self.horizon),
            ("id_fit", &self.id_fit),
            ("ties", &self.ties),
            ("klandscapes_instance", &self.klandscapes_instance),
            ("out_dir", &self.out_dir),
            ("jobs", &self.jobs),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }

    fn load(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut config = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
                ExperimentConfig::from_text(&text)?
            }
            None => ExperimentConfig::default(),
        };
        for (key, value) in self.overrides() {
            config.set(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run(args) => {
            let config = args.load()?;
            let files = execute(&config)?;
            for path in files.records.iter().chain(&files.aggregates).chain(&files.plots) {
                println!("{}", path.display());
            }
        }
        Command::Aggregate { records, out_dir } => {
            for path in aggregate_file(&records, &out_dir)? {
                println!("{}", path.display());
            }
        }
        Command::Plot { out_dir } => {
            let written = emit_plots(&out_dir)?;
            if written.is_empty() {
                log::warn!(
                    "no aggregates found in {} (run `gedyn run` first; {RECORDS_FILE} alone is not plotted)",
                    out_dir.display()
                );
            }
            for path in written {
                println!("{}", path.display());
            }
        }
        Command::Grammar {
            problem,
            param,
            output,
        } => {
            let grammar = match ProblemKind::parse(&problem)? {
                ProblemKind::Parity if (2..=7).contains(&param) => parity_grammar(param),
                ProblemKind::Parity => {
                    return Err(HarnessError::Config(format!(
                        "parity inputs must be in 2..=7, got {param}"
                    )))
                }
                ProblemKind::KLandscapes => klandscapes_grammar(),
            };
            match output {
                Some(path) => {
                    fs::write(&path, grammar.to_bnf()).map_err(|source| HarnessError::Io { path, source })?
                }
                None => print!("{}", grammar.to_bnf()),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
