//! The six provider roles, answered by the deterministic mock backend.

use coevolve::population::{Candidate, Origin};
use coevolve::problems::lookup;
use coevolve::provider::{self, MockProvider};
use coevolve::rng::RunRng;
use coevolve::ProblemSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mock = MockProvider::new();
    let mut rng = RunRng::new(7);
    let spec = ProblemSpec::builtin("doa")?;
    let reference = lookup("doa").expect("builtin").seed_template();

    let variants = provider::generate_initial(&mock, &spec, reference, 3, &mut rng)?;
    let worse = Candidate::initial(variants[1].source.clone()).with_score(Some(0.95));
    let better = Candidate::initial(variants[2].source.clone()).with_score(Some(0.96));
    println!("variant 2:\n{}", better.source);

    let short = provider::reflect_short(&mock, &worse, &better, &mut rng)?;
    println!("short reflection: {short}");
    let long = provider::reflect_long(&mock, std::slice::from_ref(&short), "", &mut rng)?;
    println!("long reflection:  {long}\n");

    let child = provider::crossover(&mock, &worse, &better, &short, &mut rng)?;
    println!("crossover child:\n{}", child.source);
    let mutant = provider::mutate(&mock, &better, &long, None, &mut rng)?;
    println!("mutation of the better parent:\n{}", mutant.source);
    let elite = Candidate::derived(mutant.source, Origin::FunctionalMutation, 1);
    let restructured = provider::restructure(&mock, &spec, &elite, &long, None, &mut rng)?;
    println!("structural rewrite:\n{}", restructured.source);
    Ok(())
}
