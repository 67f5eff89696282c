//! Evolve adaptive loss-weighting recipes with the offline mock provider.
//!
//! Usage: `cargo run --release --example evolve_stability [seed] [generations]`

use coevolve::engine::Engine;
use coevolve::provider::MockProvider;
use coevolve::{ProblemSpec, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let iterations: u32 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);

    let spec = ProblemSpec::builtin("stability")?;
    let config = RunConfig {
        seed,
        iterations,
        ..RunConfig::default()
    };
    let engine = Engine::new(spec, config, Box::new(MockProvider::new()))?;
    let result = engine.run()?;

    println!("gen  elite score          functional           structural");
    let trajectory = result.state.elite_trajectory();
    println!("  0  {:<20.12}", trajectory[0]);
    for g in &result.state.history {
        println!(
            "{:>3}  {:<20.12} {:<10} {:<9} {:<10} {}",
            g.generation, g.elite_score_after, g.functional.origin, g.functional.status, g.structural.origin, g.structural.status
        );
    }
    println!("\nbest candidate {}:\n{}", result.best.id, result.best.source);
    Ok(())
}
