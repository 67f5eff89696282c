//! Evolve decoder edge-weight scales on the rep3 detector graph.
//!
//! Usage: `cargo run --release --example evolve_doa [seed] [generations]`

use coevolve::engine::Engine;
use coevolve::provider::MockProvider;
use coevolve::{ProblemSpec, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(7);
    let iterations: u32 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);

    let spec = ProblemSpec::builtin("doa")?;
    let config = RunConfig {
        seed,
        iterations,
        ..RunConfig::default()
    };
    let engine = Engine::new(spec, config, Box::new(MockProvider::new()))?;
    let result = engine.run()?;
    for (t, score) in result.state.elite_trajectory().iter().enumerate() {
        println!("generation {t:>2}: 1 - LER = {score:.4}");
    }
    for g in &result.state.history {
        if let Some(r) = g.short_reflections.first() {
            println!("gen {} reflection: {r}", g.generation);
        }
    }
    println!("\nbest candidate:\n{}", result.best.source);
    Ok(())
}
