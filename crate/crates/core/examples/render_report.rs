//! Run a short evolution, write its ledger, and render the Markdown report.

use coevolve::engine::Engine;
use coevolve::provider::MockProvider;
use coevolve::report::render_report;
use coevolve::{ProblemSpec, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ProblemSpec::builtin("doa")?;
    let config = RunConfig {
        seed: 2,
        iterations: 5,
        n_init: 6,
        n_pop: 6,
        ..RunConfig::default()
    };
    let engine = Engine::new(spec, config, Box::new(MockProvider::new()))?;
    let result = engine.run()?;
    let dir = tempfile::tempdir()?;
    let ledger = dir.path().join("ledger.jsonl");
    std::fs::write(&ledger, engine.render_ledger(&result.state))?;
    print!("{}", render_report(&ledger)?);
    Ok(())
}
