//! Independent oracles and helpers shared by the integration tests.
#![allow(dead_code)]

use coevolve::population::{Candidate, Population};
use coevolve::problems::decoding::matching::PairCosts;
use coevolve::problems::decoding::{DetectorGraph, Endpoint, GraphFixture, Partner};
use coevolve::problems::decoding::graph::EdgeSpec;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;

/// A pairing as (detector, partner) entries.
pub type Pairing = Vec<(usize, Partner)>;

/// Minimum over every pairing of the flagged set, found by explicit
/// enumeration in lexicographic order (first unmatched detector paired with
/// each later detector ascending, then with the boundary). Totals are summed
/// as `cost(first pair) + total(rest)`. Returns (weight, flip, pairs).
pub fn enumerate_matching(costs: &PairCosts) -> Option<(f64, bool, Pairing)> {
    let mut all = Vec::new();
    let mut current = Vec::new();
    pairings(costs.k, &mut vec![false; costs.k], &mut current, &mut all);
    let mut best: Option<(f64, bool, Pairing)> = None;
    for pairing in all {
        let total = pairing.iter().rev().fold(0.0, |acc, &(i, p)| {
            let c = match p {
                Partner::Detector(j) => costs.pair_cost(i, j),
                Partner::Boundary => costs.boundary_cost(i),
            };
            c + acc
        });
        if !total.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|(b, _, _)| total < *b) {
            let flip = pairing.iter().fold(false, |f, &(i, p)| {
                f ^ match p {
                    Partner::Detector(j) => costs.pair_parity(i, j),
                    Partner::Boundary => costs.boundary_flip[i],
                }
            });
            best = Some((total, flip, pairing));
        }
    }
    best
}

fn pairings(k: usize, used: &mut Vec<bool>, current: &mut Vec<(usize, Partner)>, out: &mut Vec<Pairing>) {
    let Some(i) = (0..k).find(|&i| !used[i]) else {
        out.push(current.clone());
        return;
    };
    used[i] = true;
    for j in i + 1..k {
        if !used[j] {
            used[j] = true;
            current.push((i, Partner::Detector(j)));
            pairings(k, used, current, out);
            current.pop();
            used[j] = false;
        }
    }
    current.push((i, Partner::Boundary));
    pairings(k, used, current, out);
    current.pop();
    used[i] = false;
}

/// All-pairs shortest distances by Floyd-Warshall; the last node is the
/// boundary, which paths may end at but not pass through.
pub fn floyd_warshall(graph: &DetectorGraph) -> Vec<Vec<f64>> {
    let n = graph.num_detectors() + 1;
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for e in graph.edges() {
        let a = e.detector;
        let b = match e.other {
            Endpoint::Detector(o) => o,
            Endpoint::Boundary => n - 1,
        };
        d[a][b] = d[a][b].min(e.weight);
        d[b][a] = d[b][a].min(e.weight);
    }
    for k in 0..n - 1 {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Exact rank-selection probabilities: (1/(r+1+n)) / sum over ranks.
pub fn exact_selection(n: usize) -> Vec<BigRational> {
    let raw: Vec<BigRational> = (0..n)
        .map(|r| BigRational::new(BigInt::from(1), BigInt::from(r + 1 + n)))
        .collect();
    let total = raw.iter().fold(BigRational::zero(), |acc, x| acc + x);
    raw.into_iter().map(|x| x / &total).collect()
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    x.to_f64().expect("finite rational")
}

/// A population of `n` members with distinct scores.
pub fn scored_population(n: usize, capacity: usize) -> Population {
    let members: Vec<Candidate> = (0..n)
        .map(|i| Candidate::initial(format!("x = {i}\n")).with_score(Some(i as f64 * 0.5)))
        .collect();
    Population::from_candidates(capacity, &members)
}

/// A random connected-ish fixture with `n` detectors and rates in (0, 0.5).
pub fn random_fixture<R: Rng>(rng: &mut R, n: usize) -> GraphFixture {
    let mut edges = Vec::new();
    for d in 1..n {
        let other = rng.random_range(0..d);
        edges.push(EdgeSpec::new(
            Endpoint::Detector(d),
            Endpoint::Detector(other),
            rng.random_range(0.01..0.49),
            None,
            rng.random_bool(0.3),
        ));
    }
    for d in 0..n {
        if rng.random_bool(0.4) || d == 0 {
            edges.push(EdgeSpec::new(
                Endpoint::Detector(d),
                Endpoint::Boundary,
                rng.random_range(0.01..0.49),
                None,
                rng.random_bool(0.5),
            ));
        }
    }
    GraphFixture {
        name: "random".into(),
        num_detectors: n,
        edges,
        provenance: serde_json::Value::Null,
    }
}

/// Stability reference with a short training schedule, for fast fuzzing.
pub const SHORT_STABILITY: &str = "\
# Short schedule for tests.
tau = 0.1
lambda_min = 0.001
lambda_max = 100.0
use_residual = true
steps = 150
learning_rate = 0.000005
";

/// Path to the release-independent CLI binary built for integration tests.
pub fn cli_bin() -> std::path::PathBuf {
    std::path::PathBuf::from(env!("CARGO_BIN_EXE_coevolve"))
}

pub fn fixture_path(rel: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}
