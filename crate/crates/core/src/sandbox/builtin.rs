use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use super::{EvaluationOutcome, Feedback, SandboxError, Status};
use crate::problems::{self, params::Params, EvalFailure};
use crate::sandbox::Deadline;

/// Score a builtin-problem candidate in-process under a cooperative deadline.
pub fn evaluate_builtin(
    source: &str,
    problem_id: &str,
    eval_seed: u64,
    timeout: Duration,
) -> Result<EvaluationOutcome, SandboxError> {
    let problem = problems::lookup(problem_id).ok_or_else(|| SandboxError::UnknownProblem(problem_id.to_string()))?;
    let start = Instant::now();
    let deadline = Deadline::after(timeout);
    let params = Params::parse(source);
    let result = panic::catch_unwind(AssertUnwindSafe(|| problem.evaluate(&params, eval_seed, &deadline)));
    let wall_time = start.elapsed().as_secs_f64();
    Ok(match result {
        Ok(Ok(scored)) if scored.score.is_finite() => EvaluationOutcome::ok(
            scored.score,
            Feedback {
                stdout_tail: scored.note,
                wall_time,
                ..Feedback::default()
            },
        ),
        Ok(Ok(scored)) => EvaluationOutcome::crash(format!("non-finite score {}", scored.score), wall_time),
        Ok(Err(EvalFailure::Crash(msg))) => EvaluationOutcome::crash(msg, wall_time),
        Ok(Err(EvalFailure::Timeout)) => EvaluationOutcome::failed(
            Status::Timeout,
            Feedback {
                stderr_tail: format!("evaluation exceeded {:.3} s", timeout.as_secs_f64()),
                wall_time: wall_time.max(timeout.as_secs_f64()),
                ..Feedback::default()
            },
        ),
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "evaluation panicked".to_string());
            EvaluationOutcome::crash(format!("panic: {msg}"), wall_time)
        }
    })
}
