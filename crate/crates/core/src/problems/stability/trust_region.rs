//! Loss-weight proposal and the clipped, trust-region-limited update.

use serde::{Deserialize, Serialize};

use super::StabilityError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrConfig {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Largest allowed relative change per step.
    pub tau: f64,
}

impl Default for TrConfig {
    fn default() -> Self {
        TrConfig {
            lambda_min: 1e-3,
            lambda_max: 1e2,
            tau: 0.1,
        }
    }
}

impl TrConfig {
    pub fn new(lambda_min: f64, lambda_max: f64, tau: f64) -> Result<Self, StabilityError> {
        if !(lambda_min > 0.0 && lambda_min < lambda_max && lambda_max.is_finite()) {
            return Err(StabilityError::Domain(format!(
                "need 0 < lambda_min < lambda_max, got [{lambda_min}, {lambda_max}]"
            )));
        }
        if !(tau > 0.0 && tau < 1.0) {
            return Err(StabilityError::Domain(format!("need 0 < tau < 1, got {tau}")));
        }
        Ok(TrConfig {
            lambda_min,
            lambda_max,
            tau,
        })
    }
}

/// Gradient-norm balancing proposal: `max_j(norm_j) / norm_k` per term.
pub fn lra_propose(grad_norms: &[f64]) -> Result<Vec<f64>, StabilityError> {
    if let Some(bad) = grad_norms.iter().find(|n| !(**n > 0.0 && n.is_finite())) {
        return Err(StabilityError::Domain(format!("gradient norms must be positive and finite, got {bad}")));
    }
    let max = grad_norms.iter().copied().fold(f64::MIN, f64::max);
    Ok(grad_norms.iter().map(|n| max / n).collect())
}

fn check_inputs(prev: &[f64], proposed: &[f64], lambda_min: f64, lambda_max: f64) -> Result<(), StabilityError> {
    if prev.len() != proposed.len() {
        return Err(StabilityError::Shape(format!(
            "{} previous weights vs {} proposed",
            prev.len(),
            proposed.len()
        )));
    }
    if let Some(bad) = prev.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(StabilityError::Domain(format!("previous weight {bad} is not positive")));
    }
    if let Some(bad) = prev.iter().find(|l| **l < lambda_min || **l > lambda_max) {
        return Err(StabilityError::Domain(format!(
            "previous weight {bad} outside [{lambda_min}, {lambda_max}]"
        )));
    }
    if let Some(bad) = proposed.iter().find(|l| !l.is_finite()) {
        return Err(StabilityError::Domain(format!("proposed weight {bad} is not finite")));
    }
    Ok(())
}

/// Clip each proposal into `[lambda_min, lambda_max]`, then move from the
/// previous weight toward it by at most `tau * previous`.
///
/// The result satisfies both bounds at once because the previous weight is
/// already inside the clip range. The step bound holds as band membership,
/// `prev - tau*prev <= next <= prev + tau*prev`, evaluated in floating point.
pub fn trust_region_update(prev: &[f64], proposed: &[f64], config: &TrConfig) -> Result<Vec<f64>, StabilityError> {
    check_inputs(prev, proposed, config.lambda_min, config.lambda_max)?;
    Ok(prev
        .iter()
        .zip(proposed)
        .map(|(&p, &q)| {
            let target = q.clamp(config.lambda_min, config.lambda_max);
            let radius = config.tau * p;
            let step = (target - p).clamp(-radius, radius);
            (p + step).clamp(config.lambda_min, config.lambda_max)
        })
        .collect())
}

/// Clipping alone, without the relative step limit (the ablation baseline).
pub fn clip_update(prev: &[f64], proposed: &[f64], lambda_min: f64, lambda_max: f64) -> Result<Vec<f64>, StabilityError> {
    check_inputs(prev, proposed, lambda_min, lambda_max)?;
    Ok(proposed.iter().map(|q| q.clamp(lambda_min, lambda_max)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_examples() {
        let cfg = TrConfig::default();
        assert_eq!(trust_region_update(&[1.0], &[2.0], &cfg).unwrap(), vec![1.0 + 0.1 * 1.0]);
        assert_eq!(trust_region_update(&[1.0], &[1.05], &cfg).unwrap(), vec![1.05]);
        assert_eq!(trust_region_update(&[1e-3], &[1e-4], &cfg).unwrap(), vec![1e-3]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = TrConfig::default();
        assert!(trust_region_update(&[0.0], &[1.0], &cfg).is_err());
        assert!(trust_region_update(&[-1.0], &[1.0], &cfg).is_err());
        assert!(trust_region_update(&[1.0], &[f64::NAN], &cfg).is_err());
        assert!(trust_region_update(&[1.0], &[f64::INFINITY], &cfg).is_err());
        assert!(trust_region_update(&[1.0, 1.0], &[1.0], &cfg).is_err());
        assert!(TrConfig::new(1.0, 0.5, 0.1).is_err());
        assert!(TrConfig::new(1e-3, 1e2, 1.0).is_err());
    }

    #[test]
    fn lra_examples() {
        assert_eq!(lra_propose(&[2.0, 2.0, 2.0]).unwrap(), vec![1.0, 1.0, 1.0]);
        assert_eq!(lra_propose(&[4.0, 1.0]).unwrap(), vec![1.0, 4.0]);
        assert!(lra_propose(&[1.0, 0.0]).is_err());
    }

    proptest! {
        #[test]
        fn lra_scale_invariant(norms in proptest::collection::vec(1e-3f64..1e3, 1..6), c in prop_oneof![Just(0.5f64), Just(2.0), Just(8.0)]) {
            let scaled: Vec<f64> = norms.iter().map(|n| n * c).collect();
            prop_assert_eq!(lra_propose(&norms).unwrap(), lra_propose(&scaled).unwrap());
        }

        #[test]
        fn update_respects_both_constraints(prev in 1e-3f64..=1e2, proposed in -1e3f64..1e4) {
            let cfg = TrConfig::default();
            let next = trust_region_update(&[prev], &[proposed], &cfg).unwrap()[0];
            prop_assert!((1e-3..=1e2).contains(&next));
            prop_assert!(next <= prev + 0.1 * prev && next >= prev - 0.1 * prev);
            let clipped = proposed.clamp(1e-3, 1e2);
            if next == clipped {
                prop_assert_eq!(trust_region_update(&[next], &[proposed], &cfg).unwrap()[0], next);
            }
        }
    }
}
