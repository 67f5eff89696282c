//! Adaptive loss weighting on a synthetic three-term objective.
//!
//! A 1-8-8-1 tanh network is fit to `sin(pi x)` on `[-1, 1]` by plain
//! gradient descent on `sum_k lambda_k * L_k`, where the three terms have
//! deliberately disparate scales:
//!
//! | term | points | scale |
//! |------|--------|-------|
//! | data fit | 8 points, resampled each step | 1 |
//! | boundary values | `x = -1, 1` | 1e2 |
//! | sensor anchors | `x = -0.5, 0.5` | 1e4 |
//!
//! Every step proposes new weights from gradient-norm ratios and moves the
//! current weights toward the proposal through the trust-region update
//! (or plain clipping when `tau = inf`). The first step adopts the clipped
//! proposal directly. Resampling the data-fit points makes the proposals
//! noisy, which is the regime the relative step bound is meant to damp.
//! Fitness is the negated relative L2 error on a fixed 100-point grid.

pub mod resnet;
pub mod trust_region;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use resnet::{accumulate_backward, residual_backward, residual_forward, DenseLayer, Forward, Gradients, ResidualNet};
pub use trust_region::{clip_update, lra_propose, trust_region_update, TrConfig};

use super::params::Params;
use super::{BuiltinProblem, EvalFailure, Scored};
use crate::rng::derive_seed;
use crate::sandbox::Deadline;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StabilityError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape error: {0}")]
    Shape(String),
}

pub const MAX_STEPS: usize = 2000;
pub const HIDDEN_WIDTH: usize = 8;
pub const HIDDEN_DEPTH: usize = 2;
pub const TEST_POINTS: usize = 100;
pub const TERM_SCALES: [f64; 3] = [1.0, 1e2, 1e4];
pub const DEFAULT_LEARNING_RATE: f64 = 5e-6;

/// Data-fit points resampled uniformly from `[-1, 1]` every step.
pub const FIT_BATCH: usize = 8;
const COLLOCATION_STREAM: u64 = 1;
const BOUNDARY_POINTS: [f64; 2] = [-1.0, 1.0];
const SENSOR_POINTS: [f64; 2] = [-0.5, 0.5];

const SEED_TEMPLATE: &str = "\
# Adaptive loss weighting for a three-term objective.
# Weights follow gradient-norm ratios, clipped to [lambda_min, lambda_max];
# tau bounds the relative change per step (tau = inf disables the bound).
tau = 0.1
lambda_min = 0.001
lambda_max = 100.0
use_residual = true
steps = 2000
learning_rate = 0.000005
";

pub fn target(x: f64) -> f64 {
    (std::f64::consts::PI * x).sin()
}

/// Training recipe read from a candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilitySettings {
    /// `None` disables the relative step limit.
    pub tau: Option<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub use_residual: bool,
    pub steps: usize,
    pub learning_rate: f64,
    /// 1 or 2; a second stage scales the learning rate by `refine_scale`.
    pub stages: usize,
    pub refine_scale: f64,
}

impl StabilitySettings {
    pub fn reference() -> Self {
        StabilitySettings {
            tau: Some(0.1),
            lambda_min: 1e-3,
            lambda_max: 1e2,
            use_residual: true,
            steps: MAX_STEPS,
            learning_rate: DEFAULT_LEARNING_RATE,
            stages: 1,
            refine_scale: 0.5,
        }
    }

    pub fn from_params(params: &Params) -> Result<Self, String> {
        let tau = params.number("tau")?;
        let lambda_min = params.number("lambda_min")?;
        let lambda_max = params.number("lambda_max")?;
        let use_residual = params.flag("use_residual")?;
        let steps = params.count("steps")?;
        let learning_rate = params.number_or("learning_rate", DEFAULT_LEARNING_RATE)?;
        let stages = params.count_or("stages", 1)?;
        let refine_scale = params.number_or("refine_scale", 0.5)?;
        let settings = StabilitySettings {
            tau: if tau == f64::INFINITY { None } else { Some(tau) },
            lambda_min,
            lambda_max,
            use_residual,
            steps,
            learning_rate,
            stages,
            refine_scale,
        };
        settings.validate()?;
        Ok(settings)
    }

    pub fn validate(&self) -> Result<(), String> {
        match self.tau {
            Some(tau) => {
                TrConfig::new(self.lambda_min, self.lambda_max, tau).map_err(|e| e.to_string())?;
            }
            None => {
                if !(self.lambda_min > 0.0 && self.lambda_min < self.lambda_max && self.lambda_max.is_finite()) {
                    return Err(format!(
                        "need 0 < lambda_min < lambda_max, got [{}, {}]",
                        self.lambda_min, self.lambda_max
                    ));
                }
            }
        }
        if self.steps > MAX_STEPS {
            return Err(format!("steps must be at most {MAX_STEPS}, got {}", self.steps));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(1..=2).contains(&self.stages) {
            return Err(format!("stages must be 1 or 2, got {}", self.stages));
        }
        if !(self.refine_scale > 0.0 && self.refine_scale.is_finite()) {
            return Err(format!("refine_scale must be positive, got {}", self.refine_scale));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub initial_error: f64,
    pub final_error: f64,
    pub final_lambda: Vec<f64>,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("non-finite loss at step {0}")]
    NonFinite(usize),
    #[error("deadline exceeded at step {0}")]
    Deadline(usize),
    #[error(transparent)]
    Stability(#[from] StabilityError),
}

struct Term {
    points: Vec<f64>,
    scale: f64,
}

fn terms() -> [Term; 3] {
    [
        Term { points: Vec::new(), scale: TERM_SCALES[0] },
        Term { points: BOUNDARY_POINTS.to_vec(), scale: TERM_SCALES[1] },
        Term { points: SENSOR_POINTS.to_vec(), scale: TERM_SCALES[2] },
    ]
}

pub fn test_grid() -> Vec<f64> {
    (0..TEST_POINTS)
        .map(|i| -1.0 + 2.0 * i as f64 / (TEST_POINTS - 1) as f64)
        .collect()
}

/// `||f - g|| / ||g||` over the test grid.
pub fn relative_error(net: &ResidualNet) -> Result<f64, StabilityError> {
    let mut num = 0.0;
    let mut den = 0.0;
    for x in test_grid() {
        let y = residual_forward(net, &[x])?.output[0];
        let g = target(x);
        num += (y - g) * (y - g);
        den += g * g;
    }
    Ok((num / den).sqrt())
}

/// Loss value and flat parameter gradient of one scaled MSE term.
fn term_gradient(net: &ResidualNet, term: &Term) -> Result<(f64, Vec<f64>), StabilityError> {
    let mut grads = net.zero_gradients();
    let n = term.points.len() as f64;
    let mut loss = 0.0;
    for &x in &term.points {
        let fwd = residual_forward(net, &[x])?;
        let r = fwd.output[0] - target(x);
        loss += term.scale * r * r / n;
        accumulate_backward(net, &[x], &fwd, &[2.0 * term.scale * r / n], 1.0, &mut grads)?;
    }
    Ok((loss, grads.flat()))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn train(settings: &StabilitySettings, eval_seed: u64, deadline: &Deadline) -> Result<TrainReport, TrainError> {
    train_observed(settings, eval_seed, deadline, |_| {})
}

/// One training step as seen by an observer.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace<'a> {
    pub step: usize,
    /// Unweighted (but scaled) term losses before the update.
    pub losses: &'a [f64],
    pub grad_norms: &'a [f64],
    /// Weights applied in this step.
    pub lambda: &'a [f64],
}

/// [`train`], calling `observe` once per step.
pub fn train_observed(
    settings: &StabilitySettings,
    eval_seed: u64,
    deadline: &Deadline,
    mut observe: impl FnMut(&StepTrace<'_>),
) -> Result<TrainReport, TrainError> {
    settings.validate().map_err(StabilityError::Domain)?;
    let mut net = ResidualNet::init(1, HIDDEN_WIDTH, HIDDEN_DEPTH, 1, settings.use_residual, eval_seed);
    let initial_error = relative_error(&net)?;
    let mut terms = terms();
    let mut sampler = ChaCha8Rng::seed_from_u64(derive_seed(eval_seed, COLLOCATION_STREAM));
    let tr = settings
        .tau
        .map(|tau| TrConfig::new(settings.lambda_min, settings.lambda_max, tau))
        .transpose()?;
    let mut lambda = vec![1.0f64.clamp(settings.lambda_min, settings.lambda_max); terms.len()];
    let refine_from = if settings.stages == 2 { settings.steps / 2 } else { usize::MAX };

    for step in 0..settings.steps {
        if step % 64 == 0 && deadline.check().is_err() {
            return Err(TrainError::Deadline(step));
        }
        let mut losses = Vec::with_capacity(terms.len());
        let mut grads = Vec::with_capacity(terms.len());
        terms[0].points = (0..FIT_BATCH).map(|_| sampler.random_range(-1.0..1.0)).collect();
        for term in &terms {
            let (l, g) = term_gradient(&net, term)?;
            losses.push(l);
            grads.push(g);
        }
        let norms: Vec<f64> = grads.iter().map(|g| norm(g)).collect();
        if losses.iter().chain(&norms).any(|v| !v.is_finite()) {
            return Err(TrainError::NonFinite(step));
        }
        if norms.iter().all(|n| *n > 0.0) {
            let proposed = lra_propose(&norms)?;
            lambda = match &tr {
                // warm start from the first proposal
                _ if step == 0 => clip_update(&lambda, &proposed, settings.lambda_min, settings.lambda_max)?,
                Some(cfg) => trust_region_update(&lambda, &proposed, cfg)?,
                None => clip_update(&lambda, &proposed, settings.lambda_min, settings.lambda_max)?,
            };
        }
        observe(&StepTrace {
            step,
            losses: &losses,
            grad_norms: &norms,
            lambda: &lambda,
        });
        let lr = if step >= refine_from {
            settings.learning_rate * settings.refine_scale
        } else {
            settings.learning_rate
        };
        let mut params = net.params_flat();
        for (k, g) in grads.iter().enumerate() {
            for (p, gi) in params.iter_mut().zip(g) {
                *p -= lr * lambda[k] * gi;
            }
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(TrainError::NonFinite(step));
        }
        net.set_params_flat(&params);
    }
    let final_error = relative_error(&net)?;
    if !final_error.is_finite() {
        return Err(TrainError::NonFinite(settings.steps));
    }
    Ok(TrainReport {
        initial_error,
        final_error,
        final_lambda: lambda,
        steps: settings.steps,
    })
}

pub struct StabilityProblem;

impl BuiltinProblem for StabilityProblem {
    fn id(&self) -> &'static str {
        "stability"
    }

    fn description(&self) -> &'static str {
        "Choose an adaptive loss-weighting recipe (trust-region radius tau, weight bounds, \
         residual shortcuts, step count) for fitting a small tanh network to a three-term \
         objective with term scales 1, 1e2 and 1e4; fitness is the negated relative L2 error."
    }

    fn seed_template(&self) -> &'static str {
        SEED_TEMPLATE
    }

    fn evaluate(&self, params: &Params, eval_seed: u64, deadline: &Deadline) -> Result<Scored, EvalFailure> {
        let settings = StabilitySettings::from_params(params).map_err(EvalFailure::Crash)?;
        match train(&settings, eval_seed, deadline) {
            Ok(report) => Ok(Scored {
                score: -report.final_error,
                note: format!(
                    "relative error {:.6} (initial {:.6}) after {} steps; final weights {:?}",
                    report.final_error, report.initial_error, report.steps, report.final_lambda
                ),
            }),
            Err(TrainError::Deadline(_)) => Err(EvalFailure::Timeout),
            Err(e) => Err(EvalFailure::Crash(e.to_string())),
        }
    }
}
