//! Command-line interface.
//!
//! Exit codes: 0 success, 1 infrastructure or usage error, 2 constraint
//! failure (missing citation keys), 3 initialization failure (every initial
//! candidate failed evaluation).
//!
//! `run` writes `ledger.jsonl`, `checkpoint.json` and the best candidate
//! under `--out` (plus `traffic.jsonl` for the HTTP provider). `resume`
//! updates the named checkpoint in place and writes everything else under
//! `--out`, which defaults to the checkpoint's directory.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::engine::{ledger, Checkpoint, Engine, EngineError, RunState};
use crate::problem::{ProblemSpec, RunConfig};
use crate::problems;
use crate::provider::{HttpConfig, HttpProvider, MockProvider, Provider};
use crate::report::{self, Bibliography, Verdict};
use crate::sandbox::EVAL_SEED_ENV;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFRA: i32 = 1;
pub const EXIT_CONSTRAINT: i32 = 2;
pub const EXIT_INIT: i32 = 3;

pub const LEDGER_FILE: &str = "ledger.jsonl";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const TRAFFIC_FILE: &str = "traffic.jsonl";

#[derive(Debug, Parser)]
#[command(name = "coevolve", version, about = "Reflective co-evolution of candidate programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve candidates for a problem spec.
    Run(RunArgs),
    /// Continue a run from its checkpoint.
    Resume(ResumeArgs),
    /// Render a run ledger as a Markdown report.
    Report {
        /// Path to a ledger.jsonl file.
        ledger: PathBuf,
    },
    /// Check that every cited key exists in a bibliography (.bib or JSON key array).
    VerifyCitations { manuscript: PathBuf, bibliography: PathBuf },
    /// Run both built-in problems with the mock provider and print a score table.
    Bench(BenchArgs),
    /// List the built-in problems.
    ListProblems,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProviderKind {
    Mock,
    Http,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Problem spec (JSON).
    #[arg(long)]
    pub problem: PathBuf,
    /// Generations T.
    #[arg(long, default_value_t = RunConfig::default().iterations)]
    pub iterations: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ProviderKind::Mock)]
    pub provider: ProviderKind,
    /// Maximum concurrent evaluations.
    #[arg(long, default_value_t = RunConfig::default().max_workers)]
    pub workers: usize,
    /// Output directory.
    #[arg(long, default_value = "run")]
    pub out: PathBuf,
    /// Initial candidates N_init.
    #[arg(long, default_value_t = RunConfig::default().n_init)]
    pub n_init: usize,
    /// Population capacity N.
    #[arg(long, default_value_t = RunConfig::default().n_pop)]
    pub n_pop: usize,
    /// Mutation probability μ.
    #[arg(long, default_value_t = RunConfig::default().mutation_rate)]
    pub mutation_rate: f64,
    /// Seconds allowed per evaluation.
    #[arg(long, default_value_t = RunConfig::default().eval_timeout_secs)]
    pub eval_timeout: f64,
    /// Reflection pairs per generation.
    #[arg(long, default_value_t = RunConfig::default().pairs_per_generation)]
    pub pairs: usize,
    /// Keep sandbox working directories.
    #[arg(long)]
    pub keep_artifacts: bool,
    /// Stop (with a checkpoint) once this many generations are complete.
    #[arg(long)]
    pub stop_after: Option<u32>,
}

#[derive(Debug, Args)]
pub struct ResumeArgs {
    /// Checkpoint written by `run`.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Output directory [default: the checkpoint's directory].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Stop (with a checkpoint) once this many generations are complete.
    #[arg(long)]
    pub stop_after: Option<u32>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub iterations: u32,
    #[arg(long, default_value_t = RunConfig::default().max_workers)]
    pub workers: usize,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Engine(EngineError::InitializationFailed { .. }) => EXIT_INIT,
            _ => EXIT_INFRA,
        }
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INFRA } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Resume(args) => cmd_resume(&args),
        Command::Report { ledger } => cmd_report(&ledger),
        Command::VerifyCitations {
            manuscript,
            bibliography,
        } => return cmd_verify_citations(&manuscript, &bibliography),
        Command::Bench(args) => cmd_bench(&args),
        Command::ListProblems => {
            for p in problems::list() {
                println!("{:<10} {}", p.id(), p.description());
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn eval_seed_from_env() -> Result<Option<u64>, CliError> {
    match std::env::var(EVAL_SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{EVAL_SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn make_provider(kind: &str, out: &Path) -> Result<Box<dyn Provider>, CliError> {
    match kind {
        "mock" => Ok(Box::new(MockProvider::new())),
        "http" => {
            let config = HttpConfig::from_env().map_err(|e| CliError::Usage(e.to_string()))?;
            let traffic = out.join(TRAFFIC_FILE);
            let provider = HttpProvider::new(config)
                .with_traffic_log(&traffic)
                .map_err(|e| EngineError::io(&traffic, e))?;
            Ok(Box::new(provider))
        }
        other => Err(CliError::Usage(format!("unknown provider `{other}`"))),
    }
}

fn best_file_name(spec: &ProblemSpec) -> String {
    match &spec.candidate_filename {
        Some(name) => format!("best_{name}"),
        None => "best.txt".to_string(),
    }
}

/// Persists ledger lines and checkpoints as a run progresses.
struct Outputs<'a> {
    engine: &'a Engine,
    out: PathBuf,
    checkpoint: PathBuf,
}

impl Outputs<'_> {
    fn ledger_path(&self) -> PathBuf {
        self.out.join(LEDGER_FILE)
    }

    /// Rewrite the ledger from `state` and save the checkpoint.
    fn reset(&self, state: &RunState) -> Result<(), EngineError> {
        let path = self.ledger_path();
        fs::write(&path, self.engine.render_ledger(state)).map_err(|e| EngineError::io(&path, e))?;
        self.engine.checkpoint(state).save(&self.checkpoint)
    }

    fn append(&self, state: &RunState) -> Result<(), EngineError> {
        let path = self.ledger_path();
        let record = state.history.last().expect("called after a generation");
        let mut file = OpenOptions::new()
            .append(true)
            .open(&path)
            .map_err(|e| EngineError::io(&path, e))?;
        writeln!(file, "{}", ledger::generation_line(state, record).to_json()).map_err(|e| EngineError::io(&path, e))?;
        self.engine.checkpoint(state).save(&self.checkpoint)
    }

    fn finish(&self, state: &RunState, stopped_early: bool) -> Result<(), EngineError> {
        let best = state.elite().expect("population stays non-empty");
        let path = self.out.join(best_file_name(self.engine.spec()));
        fs::write(&path, &best.source).map_err(|e| EngineError::io(&path, e))?;
        if stopped_early {
            println!("stopped after generation {} (checkpoint {})", state.generation, self.checkpoint.display());
        }
        println!(
            "elite score: {} (candidate {}, generation {} of {})",
            best.score.expect("population members are scored"),
            best.id,
            state.generation,
            self.engine.config().iterations
        );
        println!("ledger: {}", self.ledger_path().display());
        Ok(())
    }

    fn drive(&self, state: RunState, stop_after: Option<u32>) -> Result<(), EngineError> {
        let total = self.engine.config().iterations;
        let until = stop_after.map_or(total, |s| s.min(total));
        let state = self.engine.advance(state, until, |s| self.append(s))?;
        self.finish(&state, state.generation < total)
    }
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let spec = ProblemSpec::load(&args.problem).map_err(EngineError::from)?;
    let config = RunConfig {
        n_init: args.n_init,
        n_pop: args.n_pop,
        mutation_rate: args.mutation_rate,
        iterations: args.iterations,
        eval_timeout_secs: args.eval_timeout,
        seed: args.seed,
        max_workers: args.workers,
        pairs_per_generation: args.pairs,
        keep_artifacts: args.keep_artifacts,
        eval_seed: eval_seed_from_env()?,
    };
    config.validate().map_err(EngineError::from)?;
    fs::create_dir_all(&args.out).map_err(|e| EngineError::io(&args.out, e))?;
    let kind = match args.provider {
        ProviderKind::Mock => "mock",
        ProviderKind::Http => "http",
    };
    let provider = make_provider(kind, &args.out)?;
    let engine = Engine::new(spec, config, provider)?;
    let outputs = Outputs {
        engine: &engine,
        out: args.out.clone(),
        checkpoint: args.out.join(CHECKPOINT_FILE),
    };
    let state = engine.initialize()?;
    outputs.reset(&state)?;
    outputs.drive(state, args.stop_after)?;
    Ok(())
}

fn cmd_resume(args: &ResumeArgs) -> Result<(), CliError> {
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    let out = match &args.out {
        Some(dir) => dir.clone(),
        None => args
            .checkpoint
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    if checkpoint.state.generation >= checkpoint.config.iterations {
        println!(
            "run already complete ({} of {} generations); nothing to do",
            checkpoint.state.generation, checkpoint.config.iterations
        );
        return Ok(());
    }
    fs::create_dir_all(&out).map_err(|e| EngineError::io(&out, e))?;
    let provider = make_provider(&checkpoint.provider.clone(), &out)?;
    let (engine, state) = Engine::from_checkpoint(checkpoint, provider)?;
    let outputs = Outputs {
        engine: &engine,
        out,
        checkpoint: args.checkpoint.clone(),
    };
    outputs.reset(&state)?;
    outputs.drive(state, args.stop_after)?;
    Ok(())
}

fn cmd_report(ledger_path: &Path) -> Result<(), CliError> {
    let text = report::render_report(ledger_path).map_err(|e| EngineError::io(ledger_path, e))?;
    print!("{text}");
    Ok(())
}

fn cmd_verify_citations(manuscript: &Path, bibliography: &Path) -> i32 {
    let text = match fs::read_to_string(manuscript) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read manuscript {}: {e}", manuscript.display());
            return report::EXIT_IO;
        }
    };
    let bib = match Bibliography::load(bibliography) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return report::EXIT_IO;
        }
    };
    let extracted = report::extract_cite_keys(&text);
    for w in &extracted.warnings {
        eprintln!("warning: byte {}: {}", w.offset, w.message);
    }
    let verdict = report::verify_citations(&extracted.keys, &bib);
    if let Verdict::Fail { missing } = &verdict {
        for key in missing {
            println!("missing: {key}");
        }
    }
    if !extracted.warnings.is_empty() {
        // a cite command we could not read cannot be verified
        eprintln!("{} cite command(s) could not be parsed", extracted.warnings.len());
        return report::EXIT_FAIL;
    }
    if verdict == Verdict::Pass {
        println!("all {} cited key(s) present", extracted.keys.len());
    }
    verdict.exit_code()
}

fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    println!(
        "{:<10} {:>6} {:>4} {:>14} {:>14} {:>10}",
        "problem", "seed", "T", "initial_best", "final_best", "gain"
    );
    for problem in problems::list() {
        let spec = ProblemSpec::builtin(problem.id()).map_err(EngineError::from)?;
        let config = RunConfig {
            iterations: args.iterations,
            seed: args.seed,
            max_workers: args.workers,
            ..RunConfig::default()
        };
        let engine = Engine::new(spec, config, Box::new(MockProvider::new()))?;
        let result = engine.run()?;
        let trajectory = result.state.elite_trajectory();
        let first = trajectory[0];
        let last = *trajectory.last().expect("trajectory is non-empty");
        println!(
            "{:<10} {:>6} {:>4} {:>14.6} {:>14.6} {:>+10.6}",
            problem.id(),
            args.seed,
            args.iterations,
            first,
            last,
            last - first
        );
    }
    Ok(())
}
