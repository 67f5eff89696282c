//! Evaluate candidates with an external oracle over the wire protocol.
//!
//! The oracle is a small shell script: it reads the candidate file, prints
//! `{"score": ..., "feedback": ...}` as its last stdout line and exits 0.
//! A crashing candidate and a hanging candidate show the Crash and Timeout
//! outcomes.

use std::fs;
use std::time::{Duration, Instant};

use coevolve::sandbox::ExternalSandbox;

const ORACLE: &str = r#"#!/bin/sh
# Candidates are shell fragments that set SCORE.
. "$1"
echo "evaluated with seed $EVO_EVAL_SEED"
printf '{"score": %s, "feedback": "ok"}\n' "$SCORE"
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let oracle = dir.path().join("oracle.sh");
    fs::write(&oracle, ORACLE)?;
    let template = format!("sh {} {{candidate}}", oracle.display());
    let sandbox = ExternalSandbox::new(template, Duration::from_secs(1));

    let cases = [
        ("ok", "SCORE=0.75\n"),
        ("crash", "echo 'Traceback (most recent call last):' >&2\nexit 3\n"),
        ("hang", "sleep 60\nSCORE=1\n"),
    ];
    for (label, source) in cases {
        let start = Instant::now();
        let outcome = sandbox.evaluate(source, 42)?;
        println!(
            "{label:<6} -> {:<8} score {:?} in {:.2} s",
            outcome.status().to_string(),
            outcome.score(),
            start.elapsed().as_secs_f64()
        );
        let summary = outcome.feedback().summary();
        if !summary.is_empty() {
            println!("         feedback: {}", summary.replace('\n', " | "));
        }
    }
    Ok(())
}
