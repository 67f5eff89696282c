//! Exact minimum-weight matching of flagged detectors for small syndromes.
//!
//! Pair costs are shortest-path distances over the current edge weights; each
//! flagged detector may instead be absorbed by the virtual boundary at its
//! own shortest boundary distance. The optimum over all such pairings is
//! found by dynamic programming over subsets.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use thiserror::Error;

use super::graph::{DetectorGraph, Endpoint};

/// Largest syndrome the subset DP accepts.
pub const MAX_FLAGGED: usize = 14;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchingError {
    #[error("{0} flagged detectors exceeds the cap of {MAX_FLAGGED}")]
    InstanceTooLarge(usize),
    #[error("no finite-weight pairing exists")]
    NoPerfectMatching,
    #[error("detector {0} out of range")]
    UnknownDetector(usize),
}

/// Partner of a flagged detector. Orders detectors before the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Partner {
    Detector(usize),
    Boundary,
}

/// Costs between the flagged detectors of one syndrome, indexed locally
/// (0..k in syndrome order).
#[derive(Debug, Clone, PartialEq)]
pub struct PairCosts {
    pub k: usize,
    /// Row-major k×k; `f64::INFINITY` when unreachable.
    pub pair: Vec<f64>,
    /// Observable parity of the shortest path, taken from the lower local index.
    pub pair_flip: Vec<bool>,
    /// `None` disables boundary absorption.
    pub boundary: Option<Vec<f64>>,
    pub boundary_flip: Vec<bool>,
}

impl PairCosts {
    /// Complete-graph costs without observables; `boundary = None` forbids
    /// boundary matches.
    pub fn from_matrix(pair: Vec<Vec<f64>>, boundary: Option<Vec<f64>>) -> Self {
        let k = pair.len();
        PairCosts {
            k,
            pair: pair.into_iter().flatten().collect(),
            pair_flip: vec![false; k * k],
            boundary_flip: vec![false; k],
            boundary,
        }
    }

    pub fn pair_cost(&self, i: usize, j: usize) -> f64 {
        self.pair[i * self.k + j]
    }

    pub fn pair_parity(&self, i: usize, j: usize) -> bool {
        let (a, b) = (i.min(j), i.max(j));
        self.pair_flip[a * self.k + b]
    }

    pub fn boundary_cost(&self, i: usize) -> f64 {
        self.boundary.as_ref().map_or(f64::INFINITY, |b| b[i])
    }
}

/// Optimal pairing in local indices.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMatching {
    /// Sorted by first element; `Partner::Detector` holds a local index.
    pub pairs: Vec<(usize, Partner)>,
    pub total_weight: f64,
    pub predicted_flip: bool,
}

/// Result of decoding a syndrome, in detector ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub pairs: Vec<(usize, Partner)>,
    pub total_weight: f64,
    pub predicted_flip: bool,
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist.total_cmp(&other.dist).then(self.node.cmp(&other.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest paths from one detector. Node `n` is the boundary, which is a
/// sink: paths never pass through it.
struct ShortestPaths {
    dist: Vec<f64>,
    parity: Vec<bool>,
}

struct Adjacency {
    n: usize,
    // (neighbor, weight, observable)
    lists: Vec<Vec<(usize, f64, bool)>>,
}

impl Adjacency {
    fn new(graph: &DetectorGraph) -> Self {
        let n = graph.num_detectors();
        let mut lists = vec![Vec::new(); n];
        for e in graph.edges() {
            let other = match e.other {
                Endpoint::Detector(o) => o,
                Endpoint::Boundary => n,
            };
            lists[e.detector].push((other, e.weight, e.observable));
            if other < n {
                lists[other].push((e.detector, e.weight, e.observable));
            }
        }
        Adjacency { n, lists }
    }

    fn dijkstra(&self, source: usize) -> ShortestPaths {
        let mut dist = vec![f64::INFINITY; self.n + 1];
        let mut parity = vec![false; self.n + 1];
        let mut done = vec![false; self.n + 1];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Reverse(HeapEntry { dist: 0.0, node: source }));
        while let Some(Reverse(HeapEntry { dist: d, node })) = heap.pop() {
            if done[node] {
                continue;
            }
            done[node] = true;
            if node == self.n {
                continue;
            }
            for &(next, w, obs) in &self.lists[node] {
                let nd = d + w;
                if nd < dist[next] {
                    dist[next] = nd;
                    parity[next] = parity[node] ^ obs;
                    heap.push(Reverse(HeapEntry { dist: nd, node: next }));
                }
            }
        }
        ShortestPaths { dist, parity }
    }
}

/// Shortest-path costs between the flagged detectors of `syndrome`.
pub fn syndrome_costs(graph: &DetectorGraph, syndrome: &[usize]) -> Result<PairCosts, MatchingError> {
    let n = graph.num_detectors();
    if let Some(&bad) = syndrome.iter().find(|&&d| d >= n) {
        return Err(MatchingError::UnknownDetector(bad));
    }
    let adj = Adjacency::new(graph);
    let k = syndrome.len();
    let mut pair = vec![f64::INFINITY; k * k];
    let mut pair_flip = vec![false; k * k];
    let mut boundary = vec![f64::INFINITY; k];
    let mut boundary_flip = vec![false; k];
    for (i, &src) in syndrome.iter().enumerate() {
        let sp = adj.dijkstra(src);
        boundary[i] = sp.dist[n];
        boundary_flip[i] = sp.parity[n];
        for (j, &dst) in syndrome.iter().enumerate() {
            if i == j {
                continue;
            }
            pair[i * k + j] = sp.dist[dst];
            pair_flip[i * k + j] = sp.parity[dst];
        }
    }
    Ok(PairCosts {
        k,
        pair,
        pair_flip,
        boundary: Some(boundary),
        boundary_flip,
    })
}

/// Minimum-weight pairing by DP over subsets of the flagged set.
///
/// The total is accumulated as `cost(first pair) + total(rest)`, with pairs
/// ordered by their lower member. Among exactly equal totals the
/// lexicographically smallest pairing wins (detectors before boundary).
pub fn match_costs(costs: &PairCosts) -> Result<LocalMatching, MatchingError> {
    let k = costs.k;
    if k > MAX_FLAGGED {
        return Err(MatchingError::InstanceTooLarge(k));
    }
    let full = (1usize << k) - 1;
    let mut best = vec![f64::INFINITY; full + 1];
    let mut choice = vec![Partner::Boundary; full + 1];
    best[0] = 0.0;
    for mask in 1..=full {
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut best_cost = f64::INFINITY;
        let mut best_partner = None;
        let mut others = rest;
        while others != 0 {
            let j = others.trailing_zeros() as usize;
            others &= others - 1;
            let c = costs.pair_cost(i, j) + best[rest & !(1 << j)];
            if c < best_cost {
                best_cost = c;
                best_partner = Some(Partner::Detector(j));
            }
        }
        let c = costs.boundary_cost(i) + best[rest];
        if c < best_cost {
            best_cost = c;
            best_partner = Some(Partner::Boundary);
        }
        best[mask] = best_cost;
        if let Some(p) = best_partner {
            choice[mask] = p;
        }
    }
    if !best[full].is_finite() {
        return Err(MatchingError::NoPerfectMatching);
    }

    let mut pairs = Vec::new();
    let mut flip = false;
    let mut mask = full;
    while mask != 0 {
        let i = mask.trailing_zeros() as usize;
        let partner = choice[mask];
        mask &= !(1 << i);
        match partner {
            Partner::Detector(j) => {
                mask &= !(1 << j);
                flip ^= costs.pair_parity(i, j);
            }
            Partner::Boundary => flip ^= costs.boundary_flip[i],
        }
        pairs.push((i, partner));
    }
    Ok(LocalMatching {
        pairs,
        total_weight: best[full],
        predicted_flip: flip,
    })
}

/// Decode one syndrome on the graph's current weights.
pub fn min_weight_matching(graph: &DetectorGraph, syndrome: &[usize]) -> Result<Matching, MatchingError> {
    if syndrome.len() > MAX_FLAGGED {
        return Err(MatchingError::InstanceTooLarge(syndrome.len()));
    }
    let mut flagged = syndrome.to_vec();
    flagged.sort_unstable();
    flagged.dedup();
    let costs = syndrome_costs(graph, &flagged)?;
    let local = match_costs(&costs)?;
    let pairs = local
        .pairs
        .into_iter()
        .map(|(i, p)| {
            let p = match p {
                Partner::Detector(j) => Partner::Detector(flagged[j]),
                Partner::Boundary => Partner::Boundary,
            };
            (flagged[i], p)
        })
        .collect();
    Ok(Matching {
        pairs,
        total_weight: local.total_weight,
        predicted_flip: local.predicted_flip,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::decoding::graph::{EdgeSpec, GraphFixture};

    #[test]
    fn empty_syndrome() {
        let g = DetectorGraph::from_edges("empty", 3, Vec::new());
        let m = min_weight_matching(&g, &[]).unwrap();
        assert!(m.pairs.is_empty());
        assert_eq!(m.total_weight, 0.0);
        assert!(!m.predicted_flip);
    }

    #[test]
    fn four_detector_complete_graph() {
        let inf = f64::INFINITY;
        let w = vec![
            vec![inf, 1.0, 5.0, 2.0],
            vec![1.0, inf, 2.0, 5.0],
            vec![5.0, 2.0, inf, 1.0],
            vec![2.0, 5.0, 1.0, inf],
        ];
        let m = match_costs(&PairCosts::from_matrix(w, None)).unwrap();
        assert_eq!(m.pairs, vec![(0, Partner::Detector(1)), (2, Partner::Detector(3))]);
        assert_eq!(m.total_weight, 2.0);
    }

    #[test]
    fn odd_syndrome_without_boundary_has_no_matching() {
        let w = vec![vec![f64::INFINITY; 3]; 3];
        assert_eq!(match_costs(&PairCosts::from_matrix(w, None)), Err(MatchingError::NoPerfectMatching));
    }

    #[test]
    fn too_many_flagged() {
        let g = DetectorGraph::from_edges("big", 20, Vec::new());
        let syndrome: Vec<usize> = (0..15).collect();
        assert_eq!(min_weight_matching(&g, &syndrome), Err(MatchingError::InstanceTooLarge(15)));
    }

    #[test]
    fn chain_prefers_cheaper_explanation() {
        // B -(obs,1.0)- 0 -(0.5)- 1 -(3.0)- B
        let fixture = GraphFixture {
            name: "chain".into(),
            num_detectors: 2,
            edges: vec![
                EdgeSpec::new(Endpoint::Detector(0), Endpoint::Boundary, 0.1, None, true),
                EdgeSpec::new(Endpoint::Detector(0), Endpoint::Detector(1), 0.1, None, false),
                EdgeSpec::new(Endpoint::Detector(1), Endpoint::Boundary, 0.1, None, false),
            ],
            provenance: serde_json::Value::Null,
        };
        let g = DetectorGraph::from_fixture(&fixture, 1.0).unwrap().with_weights(&[1.0, 0.5, 3.0]);
        let m = min_weight_matching(&g, &[1]).unwrap();
        // 1 -> 0 -> boundary costs 1.5 and crosses the observable edge
        assert_eq!(m.pairs, vec![(1, Partner::Boundary)]);
        assert_eq!(m.total_weight, 1.5);
        assert!(m.predicted_flip);
        let m = min_weight_matching(&g, &[0, 1]).unwrap();
        assert_eq!(m.pairs, vec![(0, Partner::Detector(1))]);
        assert!(!m.predicted_flip);
    }
}
