//! The co-evolution loop.
//!
//! [`Engine::initialize`] generates and evaluates the initial population.
//! Each [`Engine::step`] then selects ranked pairs, writes one short
//! reflection per pair and refreshes the long reflection, draws the
//! functional branch (mutation of the elite with probability μ, otherwise
//! crossover of the first pair), generates one structural rewrite of the
//! elite, evaluates both candidates, and merges the selectable ones into the
//! population.
//!
//! All randomness comes from one [`RunRng`] stored in [`RunState`]. The two
//! per-generation candidates (and the initial candidates) are produced on
//! worker threads from child seeds drawn in a fixed order, and their results
//! are applied functional first, so the outcome does not depend on thread
//! timing. A failed step returns an error and leaves the input state intact.

mod checkpoint;
pub mod ledger;
mod state;

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use rand::{Rng, RngCore};
use thiserror::Error;

pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT_VERSION};
pub use ledger::{LedgerHeader, LedgerLine, LEDGER_FORMAT_VERSION};
pub use state::{CandidateRecord, GenerationRecord, PairRecord, RunState};

use crate::population::{select_pairs, Candidate, CandidateId, Origin, Population, PopulationError, SelectedPair};
use crate::problem::{OracleBinding, ProblemSpec, RunConfig, SpecError};
use crate::provider::{self, prompts, Generated, Provider, ProviderError};
use crate::reflection::ShortReflection;
use crate::rng::{derive_seed, RunRng};
use crate::sandbox::{self, evaluate_builtin, EvaluationOutcome, ExternalSandbox, SandboxError};

/// Stream label for the per-run evaluation seed.
pub const EVAL_STREAM: u64 = 0x4556_414c;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("provider failed during {stage}: {source}")]
    Provider {
        stage: &'static str,
        #[source]
        source: ProviderError,
    },
    #[error("all {count} initial candidates failed evaluation:\n{feedback}")]
    InitializationFailed { count: usize, feedback: String },
    #[error(transparent)]
    Sandbox(#[from] SandboxError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    CheckpointVersion { found: u32, expected: u32 },
    #[error(transparent)]
    Population(#[from] PopulationError),
}

impl EngineError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        EngineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn provider(stage: &'static str) -> impl FnOnce(ProviderError) -> Self {
        move |source| EngineError::Provider { stage, source }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub best: Candidate,
    pub state: RunState,
}

enum Oracle {
    Builtin(String),
    External(ExternalSandbox),
}

/// A generated candidate with its evaluation.
struct Evaluated {
    candidate: Candidate,
    outcome: EvaluationOutcome,
    warning: Option<String>,
}

pub struct Engine {
    spec: ProblemSpec,
    config: RunConfig,
    provider: Box<dyn Provider>,
    oracle: Oracle,
    eval_seed: u64,
    cache: Mutex<HashMap<CandidateId, EvaluationOutcome>>,
}

impl Engine {
    pub fn new(spec: ProblemSpec, config: RunConfig, provider: Box<dyn Provider>) -> Result<Self, EngineError> {
        spec.validate()?;
        config.validate()?;
        let timeout = Duration::from_secs_f64(config.eval_timeout_secs);
        let oracle = match &spec.oracle_binding {
            OracleBinding::Builtin(id) => Oracle::Builtin(id.clone()),
            OracleBinding::External(template) => {
                let mut sandbox = ExternalSandbox::new(template.clone(), timeout);
                sandbox.problem_dir = spec.base_dir.clone();
                sandbox.keep_artifacts = config.keep_artifacts;
                if let Some(name) = &spec.candidate_filename {
                    sandbox.candidate_filename = name.clone();
                }
                Oracle::External(sandbox)
            }
        };
        let eval_seed = config.eval_seed.unwrap_or_else(|| derive_seed(config.seed, EVAL_STREAM));
        Ok(Engine {
            spec,
            config,
            provider,
            oracle,
            eval_seed,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// Rebuild the engine recorded in a checkpoint, together with its state.
    pub fn from_checkpoint(checkpoint: Checkpoint, provider: Box<dyn Provider>) -> Result<(Self, RunState), EngineError> {
        if provider.kind() != checkpoint.provider {
            log::warn!(
                "checkpoint was written with the {} provider, resuming with {}",
                checkpoint.provider,
                provider.kind()
            );
        }
        let engine = Engine::new(checkpoint.spec, checkpoint.config, provider)?;
        Ok((engine, checkpoint.state))
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn provider_kind(&self) -> &'static str {
        self.provider.kind()
    }

    /// The fixed seed every evaluation of this run uses.
    pub fn eval_seed(&self) -> u64 {
        self.eval_seed
    }

    /// Validate, then score `source` with the problem's oracle. Results are
    /// cached by candidate id for the lifetime of the engine.
    pub fn evaluate(&self, source: &str) -> Result<EvaluationOutcome, SandboxError> {
        let id = CandidateId::of(source);
        if let Some(hit) = self.cache.lock().unwrap().get(&id) {
            return Ok(hit.clone());
        }
        let outcome = match sandbox::validate(source, &self.spec.validators) {
            Err(violation) => EvaluationOutcome::invalid(&violation),
            Ok(()) => match &self.oracle {
                Oracle::Builtin(problem) => evaluate_builtin(
                    source,
                    problem,
                    self.eval_seed,
                    Duration::from_secs_f64(self.config.eval_timeout_secs),
                )?,
                Oracle::External(sandbox) => sandbox.evaluate(source, self.eval_seed)?,
            },
        };
        self.cache.lock().unwrap().insert(id, outcome.clone());
        Ok(outcome)
    }

    fn evaluate_generated(&self, generated: Generated, origin: Origin, generation: u32) -> Result<Evaluated, EngineError> {
        let candidate = Candidate::derived(generated.source, origin, generation).with_thought(generated.thought);
        let outcome = self.evaluate(&candidate.source)?;
        let candidate = candidate.with_score(outcome.score());
        Ok(Evaluated {
            candidate,
            outcome,
            warning: generated.warning,
        })
    }

    /// Generate and evaluate the initial population (generation 0).
    pub fn initialize(&self) -> Result<RunState, EngineError> {
        let mut rng = RunRng::new(self.config.seed);
        let reference = self.spec.reference_source()?;
        let n = self.config.n_init;
        let seeds: Vec<u64> = (0..n).map(|_| rng.next_u64()).collect();
        let results = parallel_map(n, self.config.max_workers, |i| {
            let mut child = RunRng::new(seeds[i]);
            let generated =
                provider::generate_initial_one(self.provider.as_ref(), &self.spec, &reference, i, n, &mut child)
                    .map_err(EngineError::provider("initial generation"))?;
            self.evaluate_generated(generated, Origin::Initial, 0)
        });
        let evaluated = results.into_iter().collect::<Result<Vec<_>, _>>()?;

        let mut store = BTreeMap::new();
        let mut initial = Vec::with_capacity(n);
        let mut last_failure = None;
        let mut failures = Vec::new();
        for (i, e) in evaluated.iter().enumerate() {
            let record = CandidateRecord::new(&e.candidate, &e.outcome, e.warning.clone());
            if let Some(diag) = &record.diagnostic {
                failures.push(format!("candidate {i} ({}): {}: {diag}", record.id, record.status));
                last_failure = Some(diag.clone());
            }
            initial.push(record);
            store.entry(e.candidate.id.clone()).or_insert_with(|| e.candidate.clone());
        }
        let scored: Vec<Candidate> = evaluated.into_iter().map(|e| e.candidate).collect();
        let population = Population::from_candidates(self.config.n_pop, &scored);
        if population.is_empty() {
            return Err(EngineError::InitializationFailed {
                count: n,
                feedback: failures.join("\n"),
            });
        }
        Ok(RunState {
            generation: 0,
            population,
            ledger: Default::default(),
            rng_state: rng.state(),
            initial,
            history: Vec::new(),
            store,
            last_failure,
        })
    }

    /// Run one generation. On error the input state is untouched, so the
    /// generation can be retried from it.
    pub fn step(&self, state: &RunState) -> Result<RunState, EngineError> {
        let provider = self.provider.as_ref();
        let mut rng = RunRng::from_state(state.rng_state);
        let elite = state.elite().ok_or(PopulationError::EmptyPopulation)?.clone();
        let generation = state.generation + 1;

        let pairs = if state.population.len() >= 2 {
            select_pairs(&state.population, self.config.pairs_per_generation, &mut rng)?
        } else {
            // a single member can only be compared with itself
            vec![SelectedPair {
                worse: elite.clone(),
                better: elite.clone(),
            }]
        };

        let mut shorts = Vec::with_capacity(pairs.len());
        for pair in &pairs {
            let text = provider::reflect_short(provider, &pair.worse, &pair.better, &mut rng)
                .map_err(EngineError::provider("short reflection"))?;
            shorts.push(ShortReflection::new(pair.worse.id.clone(), pair.better.id.clone(), &text));
        }
        let short_texts: Vec<String> = shorts.iter().map(|s| s.text.clone()).collect();
        let long = provider::reflect_long(provider, &short_texts, &state.ledger.long_term, &mut rng)
            .map_err(EngineError::provider("long reflection"))?;

        let branch_draw: f64 = rng.random();
        let mutation = branch_draw < self.config.mutation_rate;
        let functional_seed = rng.next_u64();
        let structural_seed = rng.next_u64();
        let feedback = state.last_failure.as_deref();

        let functional = || -> Result<Evaluated, EngineError> {
            let mut child = RunRng::new(functional_seed);
            let (generated, origin) = if mutation {
                let g = provider::mutate(provider, &elite, &long, feedback, &mut child)
                    .map_err(EngineError::provider("mutation"))?;
                (g, Origin::FunctionalMutation)
            } else {
                let pair = &pairs[0];
                let g = provider::crossover(provider, &pair.worse, &pair.better, &shorts[0].text, &mut child)
                    .map_err(EngineError::provider("crossover"))?;
                (g, Origin::Crossover)
            };
            self.evaluate_generated(generated, origin, generation)
        };
        let structural = || -> Result<Evaluated, EngineError> {
            let mut child = RunRng::new(structural_seed);
            let g = provider::restructure(provider, &self.spec, &elite, &long, feedback, &mut child)
                .map_err(EngineError::provider("restructure"))?;
            self.evaluate_generated(g, Origin::Structural, generation)
        };
        let (functional, structural) = if self.config.max_workers >= 2 {
            std::thread::scope(|s| {
                let handle = s.spawn(structural);
                let f = functional();
                let s = handle.join().expect("structural worker panicked");
                (f, s)
            })
        } else {
            (functional(), structural())
        };
        let (functional, structural) = (functional?, structural?);

        let mut store = state.store.clone();
        for e in [&functional, &structural] {
            store.entry(e.candidate.id.clone()).or_insert_with(|| e.candidate.clone());
        }
        let population = state
            .population
            .update(&[functional.candidate.clone(), structural.candidate.clone()]);
        let new_elite = population.elite().expect("population stays non-empty");

        let functional_record = CandidateRecord::new(&functional.candidate, &functional.outcome, functional.warning);
        let structural_record = CandidateRecord::new(&structural.candidate, &structural.outcome, structural.warning);
        let last_failure = structural_record
            .diagnostic
            .clone()
            .or_else(|| functional_record.diagnostic.clone());

        let record = GenerationRecord {
            generation,
            pairs: pairs
                .iter()
                .map(|p| PairRecord {
                    worse: p.worse.id.clone(),
                    better: p.better.id.clone(),
                })
                .collect(),
            short_reflections: short_texts,
            long_reflection: crate::reflection::truncate_words(&long, crate::reflection::MAX_REFLECTION_WORDS),
            branch_draw,
            functional: functional_record,
            structural: structural_record,
            elite_id_after: new_elite.id.clone(),
            elite_score_after: new_elite.score.expect("population members are scored"),
            routed_feedback: state.last_failure.clone(),
        };
        let mut history = state.history.clone();
        history.push(record);
        Ok(RunState {
            generation,
            ledger: state.ledger.advance(shorts, &long),
            population,
            rng_state: rng.state(),
            initial: state.initial.clone(),
            history,
            store,
            last_failure,
        })
    }

    /// Step `state` until `until` generations are complete, calling
    /// `observe` after each one.
    pub fn advance<F>(&self, mut state: RunState, until: u32, mut observe: F) -> Result<RunState, EngineError>
    where
        F: FnMut(&RunState) -> Result<(), EngineError>,
    {
        while state.generation < until {
            state = self.step(&state)?;
            observe(&state)?;
        }
        Ok(state)
    }

    /// Initialize and run `config.iterations` generations.
    pub fn run(&self) -> Result<RunResult, EngineError> {
        let state = self.initialize()?;
        let state = self.advance(state, self.config.iterations, |_| Ok(()))?;
        Ok(Self::result(state))
    }

    pub fn result(state: RunState) -> RunResult {
        let best = state.elite().expect("population stays non-empty").clone();
        RunResult { best, state }
    }

    pub fn header(&self) -> LedgerHeader {
        LedgerHeader {
            format_version: LEDGER_FORMAT_VERSION,
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            prompt_version: prompts::PROMPT_VERSION.to_string(),
            problem: self.spec.name.clone(),
            spec_hash: self.spec.content_hash(),
            provider: self.provider.kind().to_string(),
            config: self.config.clone(),
        }
    }

    pub fn render_ledger(&self, state: &RunState) -> String {
        ledger::render(&self.header(), state)
    }

    pub fn checkpoint(&self, state: &RunState) -> Checkpoint {
        Checkpoint {
            format_version: CHECKPOINT_FORMAT_VERSION,
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            spec: self.spec.clone(),
            spec_dir: self.spec.base_dir.clone(),
            config: self.config.clone(),
            provider: self.provider.kind().to_string(),
            state: state.clone(),
        }
    }
}

/// Apply `f` to `0..n` on up to `workers` threads; results come back in index order.
fn parallel_map<T, F>(n: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    if workers <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers.min(n) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let value = f(i);
                slots.lock().unwrap()[i] = Some(value);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|v| v.expect("every index is processed"))
        .collect()
}
