mod common;

use coevolve::problems::decoding::matching::syndrome_costs;
use coevolve::problems::decoding::{
    doa_reweight, fixtures, log_odds_weight, logical_error_rate, min_weight_matching, sample_shot, DetectorGraph,
    DoaScales,
};
use coevolve::problems::stability::{train_observed, trust_region_update, StabilitySettings, TrConfig};
use coevolve::sandbox::Deadline;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn shipped(name: &str) -> DetectorGraph {
    DetectorGraph::from_fixture(&fixtures::shipped(name).unwrap(), 1.0).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

#[test]
fn shortest_paths_agree_with_floyd_warshall() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let n = rng.random_range(1..=9);
        let g = DetectorGraph::from_fixture(&common::random_fixture(&mut rng, n), 1.0).unwrap();
        let fw = common::floyd_warshall(&g);
        let all: Vec<usize> = (0..n).collect();
        let costs = syndrome_costs(&g, &all).unwrap();
        for i in 0..n {
            assert!(close(costs.boundary_cost(i), fw[i][n]), "boundary {i}");
            for j in (0..n).filter(|&j| j != i) {
                assert!(close(costs.pair_cost(i, j), fw[i][j]), "pair {i},{j}: {} vs {} (boundary {} + {})", costs.pair_cost(i, j), fw[i][j], fw[i][n], fw[j][n]);
            }
        }
    }
}

#[test]
fn log_odds_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let p = rng.random_range(1e-6..0.5);
        let alpha = rng.random_range(0.01..10.0);
        let w = log_odds_weight(p, alpha).unwrap();
        assert!(close(w, alpha * (1.0 / p - 1.0).ln()) || (w - alpha * (1.0 / p - 1.0).ln()).abs() < 1e-12);
    }
    assert!(log_odds_weight(0.5, 1.0).is_err());
    assert!(log_odds_weight(0.0, 1.0).is_err());
    assert!(log_odds_weight(0.1, 0.0).is_err());
}

#[test]
fn relabeling_detectors_commutes_with_decoding() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..300 {
        let n = rng.random_range(2..=8);
        let g = DetectorGraph::from_fixture(&common::random_fixture(&mut rng, n), 1.0).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let relabeled = g.permuted(&perm);
        let shot = sample_shot(&g, &mut rng);
        let mut moved: Vec<usize> = shot.syndrome.iter().map(|&d| perm[d]).collect();
        moved.sort_unstable();
        let a = min_weight_matching(&g, &shot.syndrome).unwrap();
        let b = min_weight_matching(&relabeled, &moved).unwrap();
        assert!((a.total_weight - b.total_weight).abs() <= 1e-9 * a.total_weight.max(1.0));
        assert_eq!(a.predicted_flip, b.predicted_flip);
    }
}

#[test]
fn reweighting_commutes_with_relabeling() {
    let g = shipped("grid4");
    let perm: Vec<usize> = (0..g.num_detectors()).rev().collect();
    let a = doa_reweight(&g, &DoaScales::REFERENCE).permuted(&perm);
    let b = doa_reweight(&g.permuted(&perm), &DoaScales::REFERENCE);
    assert_eq!(a.weights(), b.weights());
}

#[test]
fn power_of_two_weight_scaling_leaves_ler_unchanged() {
    for name in fixtures::SHIPPED {
        let g = shipped(name);
        let base = logical_error_rate(&g, 3000, 5);
        for c in [0.25, 2.0, 8.0] {
            let scaled: Vec<f64> = g.weights().iter().map(|w| w * c).collect();
            let r = logical_error_rate(&g.with_weights(&scaled), 3000, 5);
            assert_eq!((r.failures, r.undecodable), (base.failures, base.undecodable), "{name} x{c}");
        }
    }
}

#[test]
fn sampled_marginals_match_exact_probabilities() {
    const SHOTS: usize = 40_000;
    for name in fixtures::SHIPPED {
        let g = shipped(name);
        let n = g.num_detectors();
        // P(odd number of independent events) = (1 - prod(1 - 2p)) / 2
        let odd = |ps: Vec<f64>| (1.0 - ps.iter().map(|p| 1.0 - 2.0 * p).product::<f64>()) / 2.0;
        let mut expected: Vec<f64> = (0..n)
            .map(|d| {
                odd(g.edges()
                    .iter()
                    .filter(|e| e.detector == d || e.other == coevolve::problems::decoding::Endpoint::Detector(d))
                    .map(|e| e.error_prob)
                    .collect())
            })
            .collect();
        expected.push(odd(g.edges().iter().filter(|e| e.observable).map(|e| e.error_prob).collect()));

        let mut counts = vec![0usize; n + 1];
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..SHOTS {
            let shot = sample_shot(&g, &mut rng);
            for d in shot.syndrome {
                counts[d] += 1;
            }
            counts[n] += shot.true_flip as usize;
        }
        for (i, (&c, &p)) in counts.iter().zip(&expected).enumerate() {
            let sigma = (p * (1.0 - p) / SHOTS as f64).sqrt();
            let observed = c as f64 / SHOTS as f64;
            assert!((observed - p).abs() <= 4.0 * sigma, "{name} marginal {i}: {observed} vs {p}");
        }
    }
}

#[test]
fn ler_is_reproducible_per_seed() {
    let g = doa_reweight(&shipped("rep5"), &DoaScales::REFERENCE);
    assert_eq!(logical_error_rate(&g, 2000, 9), logical_error_rate(&g, 2000, 9));
}

#[test]
fn training_respects_the_trust_region_each_step() {
    let settings = StabilitySettings {
        steps: 300,
        ..StabilitySettings::reference()
    };
    let cfg = TrConfig::default();
    let tau = settings.tau.unwrap();
    let mut previous: Option<Vec<f64>> = None;
    let mut seen = 0;
    train_observed(&settings, 4, &Deadline::unlimited(), |trace| {
        for &l in trace.lambda {
            assert!((cfg.lambda_min..=cfg.lambda_max).contains(&l), "step {}: {l}", trace.step);
        }
        if let Some(prev) = &previous {
            for (p, l) in prev.iter().zip(trace.lambda) {
                assert!((l - p).abs() <= tau * p * (1.0 + 1e-12), "step {}: {p} -> {l}", trace.step);
            }
        }
        previous = Some(trace.lambda.to_vec());
        seen += 1;
    })
    .unwrap();
    assert_eq!(seen, 300);
}

proptest! {
    #[test]
    fn trust_region_is_idempotent_at_fixed_points(prev in 1e-3f64..1e2) {
        let cfg = TrConfig::default();
        prop_assert_eq!(trust_region_update(&[prev], &[prev], &cfg).unwrap(), vec![prev]);
    }

    #[test]
    fn trust_region_is_monotone_in_the_proposal(prev in 1e-3f64..1e2, a in 1e-6f64..1e6, b in 1e-6f64..1e6) {
        let cfg = TrConfig::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let x = trust_region_update(&[prev], &[lo], &cfg).unwrap()[0];
        let y = trust_region_update(&[prev], &[hi], &cfg).unwrap()[0];
        prop_assert!(x <= y);
    }

    #[test]
    fn trust_region_rejects_non_finite(prev in 1e-3f64..1e2) {
        let cfg = TrConfig::default();
        prop_assert!(trust_region_update(&[prev], &[f64::NAN], &cfg).is_err());
        prop_assert!(trust_region_update(&[prev], &[f64::INFINITY], &cfg).is_err());
    }
}
