//! Stop a run after three generations, checkpoint it, resume from the file,
//! and confirm the ledger matches an uninterrupted run byte for byte.

use coevolve::engine::{Checkpoint, Engine};
use coevolve::provider::MockProvider;
use coevolve::{ProblemSpec, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ProblemSpec::builtin("doa")?;
    let config = RunConfig {
        seed: 5,
        iterations: 10,
        ..RunConfig::default()
    };

    let engine = Engine::new(spec.clone(), config.clone(), Box::new(MockProvider::new()))?;
    let partial = engine.advance(engine.initialize()?, 3, |_| Ok(()))?;
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("checkpoint.json");
    engine.checkpoint(&partial).save(&path)?;
    println!("checkpointed generation {} to {}", partial.generation, path.display());

    let (resumed_engine, state) = Engine::from_checkpoint(Checkpoint::load(&path)?, Box::new(MockProvider::new()))?;
    let resumed = resumed_engine.advance(state, config.iterations, |_| Ok(()))?;

    let fresh = Engine::new(spec, config, Box::new(MockProvider::new()))?;
    let uninterrupted = fresh.run()?.state;

    let a = resumed_engine.render_ledger(&resumed);
    let b = fresh.render_ledger(&uninterrupted);
    println!("resumed ledger: {} bytes, uninterrupted: {} bytes, identical: {}", a.len(), b.len(), a == b);
    Ok(())
}
