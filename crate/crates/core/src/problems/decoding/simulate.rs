use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::graph::{DetectorGraph, Endpoint};
use super::matching::min_weight_matching;
use crate::sandbox::{Deadline, DeadlineExceeded};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shot {
    /// Flagged detectors, ascending.
    pub syndrome: Vec<usize>,
    pub true_flip: bool,
}

/// Fire each edge independently with its sampling probability.
pub fn sample_shot<R: Rng + ?Sized>(graph: &DetectorGraph, rng: &mut R) -> Shot {
    let mut flagged = vec![false; graph.num_detectors()];
    let mut flip = false;
    for e in graph.edges() {
        // always draw so the stream does not depend on p
        let u: f64 = rng.random();
        if u < e.error_prob {
            flagged[e.detector] ^= true;
            if let Endpoint::Detector(o) = e.other {
                flagged[o] ^= true;
            }
            flip ^= e.observable;
        }
    }
    Shot {
        syndrome: flagged.iter().enumerate().filter(|(_, f)| **f).map(|(i, _)| i).collect(),
        true_flip: flip,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LerReport {
    pub ler: f64,
    pub shots: usize,
    pub failures: usize,
    /// Shots that could not be decoded (counted as failures).
    pub undecodable: usize,
    pub diagnostics: Vec<String>,
}

const MAX_DIAGNOSTICS: usize = 8;

/// Fraction of `num_shots` sampled shots whose decoded observable flip
/// disagrees with the true flip. Deterministic in `eval_seed`.
pub fn logical_error_rate(graph: &DetectorGraph, num_shots: usize, eval_seed: u64) -> LerReport {
    logical_error_rate_until(graph, num_shots, eval_seed, &Deadline::unlimited())
        .expect("unlimited deadline")
}

pub fn logical_error_rate_until(
    graph: &DetectorGraph,
    num_shots: usize,
    eval_seed: u64,
    deadline: &Deadline,
) -> Result<LerReport, DeadlineExceeded> {
    assert!(num_shots >= 1, "num_shots must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(eval_seed);
    let mut cache: HashMap<Vec<usize>, Option<bool>> = HashMap::new();
    let mut failures = 0;
    let mut undecodable = 0;
    let mut diagnostics = Vec::new();
    for shot_idx in 0..num_shots {
        if shot_idx % 256 == 0 {
            deadline.check()?;
        }
        let shot = sample_shot(graph, &mut rng);
        let predicted = cache
            .entry(shot.syndrome.clone())
            .or_insert_with(|| match min_weight_matching(graph, &shot.syndrome) {
                Ok(m) => Some(m.predicted_flip),
                Err(e) => {
                    if diagnostics.len() < MAX_DIAGNOSTICS {
                        diagnostics.push(format!("shot {shot_idx}: {e}"));
                    }
                    None
                }
            });
        match predicted {
            Some(p) if *p == shot.true_flip => {}
            Some(_) => failures += 1,
            None => {
                failures += 1;
                undecodable += 1;
            }
        }
    }
    Ok(LerReport {
        ler: failures as f64 / num_shots as f64,
        shots: num_shots,
        failures,
        undecodable,
        diagnostics,
    })
}
