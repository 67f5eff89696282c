use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("probability {0} outside (0, 0.5)")]
    Domain(f64),
    #[error("sampling probability {0} outside [0, 0.5)")]
    SamplingDomain(f64),
    #[error("alpha must be positive, got {0}")]
    Alpha(f64),
    #[error("edge {edge} references detector {detector} but the graph has {num_detectors}")]
    UnknownDetector {
        edge: usize,
        detector: usize,
        num_detectors: usize,
    },
    #[error("edge {0} has no real detector endpoint")]
    BoundaryOnly(usize),
    #[error("scale {name} must be positive, got {value}")]
    Scale { name: &'static str, value: f64 },
}

/// Baseline weight `alpha * ln((1 - p) / p)`.
pub fn log_odds_weight(p: f64, alpha: f64) -> Result<f64, GraphError> {
    if !(p > 0.0 && p < 0.5) {
        return Err(GraphError::Domain(p));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(GraphError::Alpha(alpha));
    }
    Ok(alpha * ((1.0 - p) / p).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Endpoint {
    Detector(usize),
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum BoundaryTag {
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
enum EndpointRepr {
    Detector(usize),
    Boundary(BoundaryTag),
}

impl From<EndpointRepr> for Endpoint {
    fn from(r: EndpointRepr) -> Self {
        match r {
            EndpointRepr::Detector(d) => Endpoint::Detector(d),
            EndpointRepr::Boundary(_) => Endpoint::Boundary,
        }
    }
}

impl From<Endpoint> for EndpointRepr {
    fn from(e: Endpoint) -> Self {
        match e {
            Endpoint::Detector(d) => EndpointRepr::Detector(d),
            Endpoint::Boundary => EndpointRepr::Boundary(BoundaryTag::Boundary),
        }
    }
}

/// One edge of the JSON fixture format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    endpoints: [EndpointRepr; 2],
    /// Rate at which the simulated error fires.
    pub p: f64,
    /// Rate assumed by the decoder's calibration; defaults to `p`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_p: Option<f64>,
    #[serde(default)]
    pub observable: bool,
}

impl EdgeSpec {
    pub fn new(a: Endpoint, b: Endpoint, p: f64, prior_p: Option<f64>, observable: bool) -> Self {
        EdgeSpec {
            endpoints: [a.into(), b.into()],
            p,
            prior_p,
            observable,
        }
    }

    pub fn endpoints(&self) -> (Endpoint, Endpoint) {
        (self.endpoints[0].into(), self.endpoints[1].into())
    }
}

/// JSON fixture: detectors, edges and a provenance note.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFixture {
    pub name: String,
    pub num_detectors: usize,
    pub edges: Vec<EdgeSpec>,
    #[serde(default)]
    pub provenance: serde_json::Value,
}

impl GraphFixture {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("fixture serializes");
        s.push('\n');
        s
    }
}

/// The four binary topology indicators of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EdgeIndicators {
    /// Touches the virtual boundary.
    pub boundary: bool,
    /// Complement of `boundary`.
    pub bulk: bool,
    /// Flips the logical observable.
    pub observable: bool,
    /// Boundary edge whose single detector has no other incident edge.
    pub isolated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// First endpoint is always a real detector.
    pub detector: usize,
    pub other: Endpoint,
    pub error_prob: f64,
    pub prior_prob: f64,
    pub observable: bool,
    pub base_weight: f64,
    pub weight: f64,
    pub indicators: EdgeIndicators,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorGraph {
    pub name: String,
    num_detectors: usize,
    edges: Vec<Edge>,
}

impl DetectorGraph {
    /// Build from a fixture, weighting each edge by `alpha` times the log-odds
    /// of its prior rate. Current weights start equal to the base weights.
    pub fn from_fixture(fixture: &GraphFixture, alpha: f64) -> Result<Self, GraphError> {
        let n = fixture.num_detectors;
        let mut degree = vec![0usize; n];
        let mut raw = Vec::with_capacity(fixture.edges.len());
        for (idx, spec) in fixture.edges.iter().enumerate() {
            let (a, b) = spec.endpoints();
            let (detector, other) = match (a, b) {
                (Endpoint::Detector(d), o) => (d, o),
                (Endpoint::Boundary, Endpoint::Detector(d)) => (d, Endpoint::Boundary),
                (Endpoint::Boundary, Endpoint::Boundary) => return Err(GraphError::BoundaryOnly(idx)),
            };
            for d in [Some(detector), match other {
                Endpoint::Detector(o) => Some(o),
                Endpoint::Boundary => None,
            }]
            .into_iter()
            .flatten()
            {
                if d >= n {
                    return Err(GraphError::UnknownDetector {
                        edge: idx,
                        detector: d,
                        num_detectors: n,
                    });
                }
                degree[d] += 1;
            }
            if !(spec.p >= 0.0 && spec.p < 0.5) {
                return Err(GraphError::SamplingDomain(spec.p));
            }
            let prior = spec.prior_p.unwrap_or(spec.p);
            let base = log_odds_weight(prior, alpha)?;
            raw.push((detector, other, spec, prior, base));
        }
        let edges = raw
            .into_iter()
            .map(|(detector, other, spec, prior, base)| {
                let boundary = other == Endpoint::Boundary;
                Edge {
                    detector,
                    other,
                    error_prob: spec.p,
                    prior_prob: prior,
                    observable: spec.observable,
                    base_weight: base,
                    weight: base,
                    indicators: EdgeIndicators {
                        boundary,
                        bulk: !boundary,
                        observable: spec.observable,
                        isolated: boundary && degree[detector] == 1,
                    },
                }
            })
            .collect();
        Ok(DetectorGraph {
            name: fixture.name.clone(),
            num_detectors: n,
            edges,
        })
    }

    /// Assemble a graph from explicit edges (used for hand-built instances).
    pub fn from_edges(name: &str, num_detectors: usize, edges: Vec<Edge>) -> Self {
        DetectorGraph {
            name: name.to_string(),
            num_detectors,
            edges,
        }
    }

    pub fn num_detectors(&self) -> usize {
        self.num_detectors
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn degree(&self, detector: usize) -> usize {
        self.edges
            .iter()
            .map(|e| (e.detector == detector) as usize + (e.other == Endpoint::Detector(detector)) as usize)
            .sum()
    }

    /// Same graph with every current weight replaced.
    pub fn with_weights(&self, weights: &[f64]) -> Self {
        assert_eq!(weights.len(), self.edges.len());
        let mut g = self.clone();
        for (e, w) in g.edges.iter_mut().zip(weights) {
            e.weight = *w;
        }
        g
    }

    pub fn weights(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.weight).collect()
    }

    /// Relabel detectors: detector `d` becomes `perm[d]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.num_detectors);
        let mut g = self.clone();
        for e in &mut g.edges {
            e.detector = perm[e.detector];
            if let Endpoint::Detector(o) = e.other {
                e.other = Endpoint::Detector(perm[o]);
            }
        }
        g
    }
}

/// Scale factors of the multiplicative detector/observable-aware reweighting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoaScales {
    pub alpha: f64,
    pub s_bnd: f64,
    pub s_blk: f64,
    pub s_obs: f64,
    pub s_iso: f64,
}

impl DoaScales {
    /// The evolved factors: boundary 1.5, bulk 1.0, observable 1.2, isolated 1.3.
    pub const REFERENCE: DoaScales = DoaScales {
        alpha: 1.0,
        s_bnd: 1.5,
        s_blk: 1.0,
        s_obs: 1.2,
        s_iso: 1.3,
    };

    pub const UNIFORM: DoaScales = DoaScales {
        alpha: 1.0,
        s_bnd: 1.0,
        s_blk: 1.0,
        s_obs: 1.0,
        s_iso: 1.0,
    };

    pub fn validate(&self) -> Result<(), GraphError> {
        for (name, value) in [
            ("alpha", self.alpha),
            ("s_bnd", self.s_bnd),
            ("s_blk", self.s_blk),
            ("s_obs", self.s_obs),
            ("s_iso", self.s_iso),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(GraphError::Scale { name, value });
            }
        }
        Ok(())
    }
}

/// Single pass over the edges:
/// `w = w0 * s_bnd^b * s_blk^(1-b) * s_obs^o * s_iso^iota`.
///
/// Only current weights change; `scales.alpha` is applied when the base
/// weights are built, not here.
pub fn doa_reweight(graph: &DetectorGraph, scales: &DoaScales) -> DetectorGraph {
    let mut g = graph.clone();
    for e in &mut g.edges {
        let ind = e.indicators;
        let mut w = e.base_weight;
        if ind.boundary {
            w *= scales.s_bnd;
        }
        if ind.bulk {
            w *= scales.s_blk;
        }
        if ind.observable {
            w *= scales.s_obs;
        }
        if ind.isolated {
            w *= scales.s_iso;
        }
        e.weight = w;
    }
    g
}
