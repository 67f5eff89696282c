//! The trust-region weight update and its effect on training stability.
//!
//! Prints the three worked update examples, then trains the stability
//! fixture (seed 11, 2000 steps) with and without the relative step bound.

use coevolve::problems::stability::trust_region::{lra_propose, trust_region_update, TrConfig};
use coevolve::problems::stability::{train_observed, StabilitySettings};
use coevolve::sandbox::Deadline;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = TrConfig::default();
    println!("lambda_min={} lambda_max={} tau={}", cfg.lambda_min, cfg.lambda_max, cfg.tau);
    for (prev, proposed) in [(1.0, 2.0), (1.0, 1.05), (1e-3, 1e-4)] {
        let next = trust_region_update(&[prev], &[proposed], &cfg)?;
        println!("  prev {prev:<6} proposed {proposed:<6} -> {}", next[0]);
    }
    println!("gradient-ratio proposal for norms (4, 1): {:?}", lra_propose(&[4.0, 1.0])?);

    let on = StabilitySettings::reference();
    let off = StabilitySettings { tau: None, ..on.clone() };
    for (label, settings) in [("trust region on ", &on), ("trust region off", &off)] {
        let mut max_jump = 0.0f64;
        let mut prev: Option<Vec<f64>> = None;
        let report = train_observed(settings, 11, &Deadline::unlimited(), |trace| {
            if let Some(p) = &prev {
                for (a, b) in p.iter().zip(trace.lambda) {
                    max_jump = max_jump.max((b - a).abs() / a);
                }
            }
            prev = Some(trace.lambda.to_vec());
        })?;
        println!(
            "{label}: relative L2 error {:.6} -> {:.6}, largest relative weight change {:.3}",
            report.initial_error, report.final_error, max_jump
        );
    }
    Ok(())
}
