//! Candidates, the ranked population, and rank-based parent selection.

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PopulationError {
    #[error("population is empty")]
    EmptyPopulation,
    #[error("selection needs at least 2 members, population has {0}")]
    InsufficientPopulation(usize),
    #[error("member {0} has no score")]
    Unscored(CandidateId),
}

/// Content hash of a candidate source (first 16 hex digits of SHA-256).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CandidateId(String);

impl CandidateId {
    pub fn of(source: &str) -> Self {
        let digest = Sha256::digest(source.as_bytes());
        CandidateId(hex::encode(&digest[..8]))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CandidateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Initial,
    Crossover,
    FunctionalMutation,
    Structural,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Initial => "initial",
            Origin::Crossover => "crossover",
            Origin::FunctionalMutation => "mutation",
            Origin::Structural => "structural",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: CandidateId,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thought: Option<String>,
    pub origin: Origin,
    pub generation: u32,
    /// Present only once the candidate was evaluated successfully.
    #[serde(default)]
    pub score: Option<f64>,
}

impl Candidate {
    pub fn initial(source: impl Into<String>) -> Self {
        Self::build(source.into(), Origin::Initial, 0)
    }

    /// A generated candidate. `Origin::Initial` always lands in generation 0.
    pub fn derived(source: impl Into<String>, origin: Origin, generation: u32) -> Self {
        let generation = if origin == Origin::Initial { 0 } else { generation };
        Self::build(source.into(), origin, generation)
    }

    fn build(source: String, origin: Origin, generation: u32) -> Self {
        Candidate {
            id: CandidateId::of(&source),
            source,
            thought: None,
            origin,
            generation,
            score: None,
        }
    }

    pub fn with_thought(mut self, thought: Option<String>) -> Self {
        self.thought = thought;
        self
    }

    pub fn with_score(mut self, score: Option<f64>) -> Self {
        self.score = score;
        self
    }

    pub fn is_selectable(&self) -> bool {
        matches!(self.score, Some(s) if s.is_finite())
    }
}

/// Ranking order: higher score first, ties by ascending id.
fn rank_order(a: &Candidate, b: &Candidate) -> Ordering {
    let sa = a.score.unwrap_or(f64::NEG_INFINITY);
    let sb = b.score.unwrap_or(f64::NEG_INFINITY);
    sb.total_cmp(&sa).then_with(|| a.id.cmp(&b.id))
}

/// An evaluated, ranked population. Immutable; updates build a new value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    members: Vec<Candidate>,
    capacity: usize,
}

impl Population {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "population capacity must be positive");
        Population {
            members: Vec::new(),
            capacity,
        }
    }

    pub fn from_candidates(capacity: usize, candidates: &[Candidate]) -> Self {
        Population::new(capacity).update(candidates)
    }

    pub fn members(&self) -> &[Candidate] {
        &self.members
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn elite(&self) -> Option<&Candidate> {
        self.members.first()
    }

    pub fn elite_id(&self) -> Option<&CandidateId> {
        self.elite().map(|c| &c.id)
    }

    pub fn best_score(&self) -> Option<f64> {
        self.elite().and_then(|c| c.score)
    }

    pub fn contains(&self, id: &CandidateId) -> bool {
        self.members.iter().any(|c| &c.id == id)
    }

    /// Merge evaluated candidates and keep the top `capacity` by score.
    ///
    /// Unscored (sentinel) candidates and ids already present are ignored, so
    /// the elite score never decreases and reinserting members is a no-op.
    pub fn update(&self, incoming: &[Candidate]) -> Population {
        let mut members = self.members.clone();
        for cand in incoming {
            if !cand.is_selectable() || members.iter().any(|m| m.id == cand.id) {
                continue;
            }
            members.push(cand.clone());
        }
        members.sort_by(rank_order);
        members.truncate(self.capacity);
        Population {
            members,
            capacity: self.capacity,
        }
    }
}

/// Rank-based selection probabilities, `p_i ∝ 1 / (rank_i + 1 + |P|)` with
/// rank 0 for the best member. Returned in population order.
pub fn rank_selection_probabilities(population: &Population) -> Result<Vec<f64>, PopulationError> {
    if population.is_empty() {
        return Err(PopulationError::EmptyPopulation);
    }
    if let Some(c) = population.members().iter().find(|c| c.score.is_none()) {
        return Err(PopulationError::Unscored(c.id.clone()));
    }
    Ok(rank_weights(population.len()))
}

fn rank_weights(n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|rank| 1.0 / (rank + 1 + n) as f64).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// A selected parent pair, ordered so that `worse` does not outrank `better`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedPair {
    pub worse: Candidate,
    pub better: Candidate,
}

/// Draw `count` pairs; each pair is two distinct members sampled without
/// replacement under the rank probabilities.
///
/// Within a pair, `better` is the member with the lower rank index, which
/// puts equal scores in ascending id order.
pub fn select_pairs<R: Rng + ?Sized>(
    population: &Population,
    count: usize,
    rng: &mut R,
) -> Result<Vec<SelectedPair>, PopulationError> {
    if population.len() < 2 {
        return Err(PopulationError::InsufficientPopulation(population.len()));
    }
    let probs = rank_selection_probabilities(population)?;
    let mut pairs = Vec::with_capacity(count);
    for _ in 0..count {
        let first = sample_index(&probs, None, rng);
        let second = sample_index(&probs, Some(first), rng);
        let (better, worse) = (first.min(second), first.max(second));
        pairs.push(SelectedPair {
            worse: population.members[worse].clone(),
            better: population.members[better].clone(),
        });
    }
    Ok(pairs)
}

fn sample_index<R: Rng + ?Sized>(probs: &[f64], exclude: Option<usize>, rng: &mut R) -> usize {
    let mass: f64 = probs
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != exclude)
        .map(|(_, p)| p)
        .sum();
    let target = rng.random::<f64>() * mass;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.iter().enumerate() {
        if Some(i) == exclude {
            continue;
        }
        acc += p;
        last = i;
        if target < acc {
            return i;
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::ToPrimitive;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scored(src: &str, score: f64) -> Candidate {
        Candidate::initial(src).with_score(Some(score))
    }

    fn pop_of(scores: &[f64]) -> Population {
        let cands: Vec<_> = scores
            .iter()
            .enumerate()
            .map(|(i, s)| scored(&format!("x = {i}"), *s))
            .collect();
        Population::from_candidates(scores.len().max(1), &cands)
    }

    fn exact_rank_probs(n: usize) -> Vec<BigRational> {
        let raw: Vec<BigRational> = (0..n)
            .map(|r| BigRational::new(BigInt::from(1), BigInt::from(r + 1 + n)))
            .collect();
        let total = raw.iter().fold(BigRational::from_integer(0.into()), |a, b| a + b);
        raw.into_iter().map(|p| p / total.clone()).collect()
    }

    #[test]
    fn ten_member_top_probability() {
        let p = rank_selection_probabilities(&pop_of(&[9., 8., 7., 6., 5., 4., 3., 2., 1., 0.])).unwrap();
        // 21162960/155685007 from exact rational evaluation
        assert!((p[0] - 0.135_934_476_978_891_1).abs() < 1e-15);
        let exact = exact_rank_probs(10)[0].to_f64().unwrap();
        assert!((p[0] - exact).abs() < 1e-15);
    }

    #[test]
    fn single_member_gets_all_mass() {
        assert_eq!(rank_selection_probabilities(&pop_of(&[0.3])).unwrap(), vec![1.0]);
    }

    #[test]
    fn two_members_four_sevenths() {
        let p = rank_selection_probabilities(&pop_of(&[5.0, 3.0])).unwrap();
        assert!((p[0] - 4.0 / 7.0).abs() < 1e-15);
        assert!((p[1] - 3.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn empty_population_is_an_error() {
        assert_eq!(
            rank_selection_probabilities(&Population::new(3)),
            Err(PopulationError::EmptyPopulation)
        );
    }

    #[test]
    fn pair_selection_contracts() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let two = pop_of(&[3.0, 5.0]);
        let pairs = select_pairs(&two, 1, &mut rng).unwrap();
        assert_eq!(pairs[0].better.score, Some(5.0));
        assert_eq!(pairs[0].worse.score, Some(3.0));

        assert!(select_pairs(&two, 0, &mut rng).unwrap().is_empty());
        assert_eq!(
            select_pairs(&pop_of(&[1.0]), 1, &mut rng),
            Err(PopulationError::InsufficientPopulation(1))
        );

        let ten = pop_of(&[1., 2., 3., 4., 5., 6., 7., 8., 9., 10.]);
        let a = select_pairs(&ten, 3, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = select_pairs(&ten, 3, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn equal_scores_order_by_id() {
        let pop = pop_of(&[1.0, 1.0]);
        let pairs = select_pairs(&pop, 1, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(pairs[0].better.id < pairs[0].worse.id);
    }

    #[test]
    fn update_evicts_worst_and_dedups() {
        let pop = pop_of(&[1., 2., 3., 4., 5., 6., 7., 8., 9., 10.]);
        let newcomer = scored("fresh", 5.5);
        let next = pop.update(std::slice::from_ref(&newcomer));
        assert_eq!(next.len(), 10);
        assert!(next.contains(&newcomer.id));
        assert!(!next.members().iter().any(|c| c.score == Some(1.0)));

        let dup = pop.members()[3].clone().with_score(Some(100.0));
        assert_eq!(pop.update(&[dup]), pop);

        let sentinel = Candidate::initial("broken");
        assert_eq!(pop.update(&[sentinel]), pop);
    }

    #[test]
    fn members_sorted_with_elite_first() {
        let pop = pop_of(&[2.0, 7.0, 7.0, -1.0]);
        let scores: Vec<_> = pop.members().iter().map(|c| c.score.unwrap()).collect();
        assert_eq!(scores, vec![7.0, 7.0, 2.0, -1.0]);
        assert!(pop.members()[0].id < pop.members()[1].id);
        assert_eq!(pop.best_score(), Some(7.0));
    }

    proptest! {
        #[test]
        fn probabilities_normalized_and_decreasing(n in 1usize..=1000) {
            let p = rank_weights(n);
            let sum: f64 = p.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            for w in p.windows(2) {
                prop_assert!(w[0] > w[1]);
            }
        }

        #[test]
        fn update_never_lowers_elite_and_is_idempotent(
            base in proptest::collection::vec(-100.0f64..100.0, 1..12),
            incoming in proptest::collection::vec(proptest::option::of(-100.0f64..100.0), 0..12),
        ) {
            let pop = pop_of(&base);
            let news: Vec<_> = incoming.iter().enumerate()
                .map(|(i, s)| Candidate::initial(format!("new {i}")).with_score(*s))
                .collect();
            let next = pop.update(&news);
            prop_assert!(next.best_score().unwrap() >= pop.best_score().unwrap());
            prop_assert!(next.len() <= next.capacity());
            prop_assert_eq!(next.update(next.members()), next.clone());
            prop_assert!(next.members().iter().all(|c| c.score.is_some()));
        }
    }
}
