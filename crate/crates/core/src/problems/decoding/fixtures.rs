//! Seeded generators for the shipped detector-graph fixtures.
//!
//! Every fixture edge carries a uniform calibration prior (`prior_p = 0.1`)
//! while the simulated rate is boundary-biased: the true log-odds of an edge
//! are the prior log-odds multiplied by 1.5 on boundary edges, 1.2 on
//! observable edges and 1.3 on isolated edges, each with ±10% seeded jitter.
//! The decoder therefore starts from a miscalibrated weighting that
//! topology-aware rescaling can correct.
//!
//! Regenerate with `cargo run -p coevolve --example generate_fixtures`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::graph::{Endpoint, EdgeSpec, GraphFixture};

pub const PRIOR_P: f64 = 0.1;
const BOUNDARY_BIAS: f64 = 1.5;
const OBSERVABLE_BIAS: f64 = 1.2;
const ISOLATED_BIAS: f64 = 1.3;
const JITTER: f64 = 0.1;

pub const REP3_JSON: &str = include_str!("../../../fixtures/graphs/rep3.json");
pub const REP5_JSON: &str = include_str!("../../../fixtures/graphs/rep5.json");
pub const GRID4_JSON: &str = include_str!("../../../fixtures/graphs/grid4.json");

/// The shipped fixture with the given name.
pub fn shipped(name: &str) -> Option<GraphFixture> {
    let text = match name {
        "rep3" => REP3_JSON,
        "rep5" => REP5_JSON,
        "grid4" => GRID4_JSON,
        _ => return None,
    };
    Some(GraphFixture::from_json(text).expect("shipped fixtures parse"))
}

pub const SHIPPED: [&str; 3] = ["rep3", "rep5", "grid4"];

/// Regenerate a shipped fixture from its recorded parameters.
pub fn generate(name: &str) -> Option<GraphFixture> {
    match name {
        "rep3" => Some(repetition("rep3", 3, 3, 3)),
        "rep5" => Some(repetition("rep5", 5, 3, 5)),
        "grid4" => Some(grid("grid4", 4, 3, 4)),
        _ => None,
    }
}

struct Builder {
    rng: ChaCha8Rng,
    edges: Vec<EdgeSpec>,
}

impl Builder {
    fn new(seed: u64) -> Self {
        Builder {
            rng: ChaCha8Rng::seed_from_u64(seed),
            edges: Vec::new(),
        }
    }

    fn add(&mut self, a: usize, b: Endpoint, observable: bool, isolated: bool) {
        let prior_log_odds = ((1.0 - PRIOR_P) / PRIOR_P).ln();
        let mut bias = 1.0;
        if b == Endpoint::Boundary {
            bias *= BOUNDARY_BIAS;
        }
        if observable {
            bias *= OBSERVABLE_BIAS;
        }
        if isolated {
            bias *= ISOLATED_BIAS;
        }
        bias *= 1.0 + self.rng.random_range(-JITTER..JITTER);
        let p = 1.0 / (1.0 + (prior_log_odds * bias).exp());
        let p = (p * 1e6).round() / 1e6;
        self.edges
            .push(EdgeSpec::new(Endpoint::Detector(a), b, p, Some(PRIOR_P), observable));
    }
}

fn provenance(generator: &str, params: serde_json::Value, seed: u64) -> serde_json::Value {
    json!({
        "generator": generator,
        "params": params,
        "seed": seed,
        "prior_p": PRIOR_P,
        "true_log_odds_bias": {
            "boundary": BOUNDARY_BIAS,
            "observable": OBSERVABLE_BIAS,
            "isolated": ISOLATED_BIAS,
            "jitter": JITTER,
        },
    })
}

/// Distance-`d` repetition code over `rounds` syndrome rounds, plus one
/// isolated detector with a single boundary edge.
pub fn repetition(name: &str, d: usize, rounds: usize, seed: u64) -> GraphFixture {
    assert!(d >= 2 && rounds >= 1);
    let per_round = d - 1;
    let det = |r: usize, k: usize| r * per_round + k;
    let isolated = rounds * per_round;
    let mut b = Builder::new(seed);
    for r in 0..rounds {
        // data qubit 0 sits on the logical cut
        b.add(det(r, 0), Endpoint::Boundary, true, false);
        for q in 1..d - 1 {
            b.add(det(r, q - 1), Endpoint::Detector(det(r, q)), false, false);
        }
        b.add(det(r, per_round - 1), Endpoint::Boundary, false, false);
        if r + 1 < rounds {
            for k in 0..per_round {
                b.add(det(r, k), Endpoint::Detector(det(r + 1, k)), false, false);
            }
        }
    }
    b.add(isolated, Endpoint::Boundary, false, true);
    GraphFixture {
        name: name.to_string(),
        num_detectors: isolated + 1,
        edges: b.edges,
        provenance: provenance("repetition", json!({ "distance": d, "rounds": rounds }), seed),
    }
}

/// `rows × cols` planar grid with boundaries on the left (observable) and
/// right columns, plus one isolated detector.
pub fn grid(name: &str, rows: usize, cols: usize, seed: u64) -> GraphFixture {
    assert!(rows >= 1 && cols >= 1);
    let det = |r: usize, c: usize| r * cols + c;
    let isolated = rows * cols;
    let mut b = Builder::new(seed);
    for r in 0..rows {
        b.add(det(r, 0), Endpoint::Boundary, true, false);
        for c in 0..cols {
            if c + 1 < cols {
                b.add(det(r, c), Endpoint::Detector(det(r, c + 1)), false, false);
            }
            if r + 1 < rows {
                b.add(det(r, c), Endpoint::Detector(det(r + 1, c)), false, false);
            }
        }
        b.add(det(r, cols - 1), Endpoint::Boundary, false, false);
    }
    b.add(isolated, Endpoint::Boundary, false, true);
    GraphFixture {
        name: name.to_string(),
        num_detectors: isolated + 1,
        edges: b.edges,
        provenance: provenance("grid", json!({ "rows": rows, "cols": cols }), seed),
    }
}
