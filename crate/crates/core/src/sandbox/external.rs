//! Subprocess oracles.
//!
//! Isolation is a fresh working directory, a cleared environment and a
//! dedicated process group that is killed as a unit on timeout. Nothing here
//! limits memory, CPU or network.
//!
//! Wire protocol: the final non-empty stdout line of a successful (exit 0)
//! run is `{"score": <finite number>, "feedback": <string>}`. Any non-zero
//! exit is a crash regardless of stdout.

use std::fs;
use std::io::Read;
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::Deserialize;

use super::{tail, EvaluationOutcome, Feedback, SandboxError, Status, EVAL_SEED_ENV, FEEDBACK_TAIL_BYTES};
use crate::problem::CANDIDATE_PLACEHOLDER;

/// Extra wall time allowed after the deadline for the kill to land.
pub const KILL_GRACE: Duration = Duration::from_millis(500);

/// Placeholder for the problem directory in runner templates.
pub const PROBLEM_DIR_PLACEHOLDER: &str = "{problem_dir}";

const POLL_INTERVAL: Duration = Duration::from_millis(5);
const CAPTURE_LIMIT: usize = 64 * 1024;
const SYNTAX_CHECK_TIMEOUT: Duration = Duration::from_secs(10);

/// Evaluates candidate sources by writing each into its own temporary
/// directory and running the problem's runner template there.
#[derive(Debug, Clone)]
pub struct ExternalSandbox {
    pub template: String,
    pub timeout: Duration,
    pub problem_dir: Option<PathBuf>,
    pub candidate_filename: String,
    pub keep_artifacts: bool,
}

impl ExternalSandbox {
    pub fn new(template: impl Into<String>, timeout: Duration) -> Self {
        ExternalSandbox {
            template: template.into(),
            timeout,
            problem_dir: None,
            candidate_filename: "candidate.txt".into(),
            keep_artifacts: false,
        }
    }

    pub fn evaluate(&self, source: &str, eval_seed: u64) -> Result<EvaluationOutcome, SandboxError> {
        let dir = tempfile::Builder::new()
            .prefix("coevolve-eval-")
            .tempdir()
            .map_err(|e| SandboxError::Infrastructure(format!("cannot create working directory: {e}")))?;
        let file = dir.path().join(&self.candidate_filename);
        fs::write(&file, source)
            .map_err(|e| SandboxError::Infrastructure(format!("cannot write candidate: {e}")))?;
        let outcome = run_template(
            &self.template,
            &file,
            dir.path(),
            self.problem_dir.as_deref(),
            self.timeout,
            Some(eval_seed),
        );
        if self.keep_artifacts {
            let kept = dir.keep();
            log::info!("kept sandbox directory {}", kept.display());
        }
        outcome
    }
}

/// Run one external oracle on `candidate_file`, using the file's directory
/// as the working directory.
pub fn execute_external(
    candidate_file: &Path,
    runner_command_template: &str,
    timeout: Duration,
    eval_seed: u64,
) -> Result<EvaluationOutcome, SandboxError> {
    let workdir = candidate_file
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    run_template(
        runner_command_template,
        candidate_file,
        workdir,
        None,
        timeout,
        Some(eval_seed),
    )
}

fn build_argv(template: &str, candidate: &Path, problem_dir: Option<&Path>) -> Result<Vec<String>, SandboxError> {
    let parts = shlex::split(template)
        .filter(|p| !p.is_empty())
        .ok_or_else(|| SandboxError::Infrastructure(format!("cannot parse runner template `{template}`")))?;
    let candidate = candidate.to_string_lossy();
    let problem_dir = problem_dir
        .map(|p| p.to_string_lossy().into_owned())
        .unwrap_or_else(|| ".".into());
    Ok(parts
        .into_iter()
        .map(|p| {
            p.replace(CANDIDATE_PLACEHOLDER, &candidate)
                .replace(PROBLEM_DIR_PLACEHOLDER, &problem_dir)
        })
        .collect())
}

struct Capture {
    buf: Arc<Mutex<Vec<u8>>>,
    done: mpsc::Receiver<()>,
}

fn capture<R: Read + Send + 'static>(mut reader: R) -> Capture {
    let buf = Arc::new(Mutex::new(Vec::new()));
    let (tx, done) = mpsc::channel();
    let sink = Arc::clone(&buf);
    thread::spawn(move || {
        let mut chunk = [0u8; 8192];
        loop {
            match reader.read(&mut chunk) {
                Ok(0) | Err(_) => break,
                Ok(n) => {
                    let mut b = sink.lock().unwrap();
                    b.extend_from_slice(&chunk[..n]);
                    if b.len() > 2 * CAPTURE_LIMIT {
                        let cut = b.len() - CAPTURE_LIMIT;
                        b.drain(..cut);
                    }
                }
            }
        }
        let _ = tx.send(());
    });
    Capture { buf, done }
}

impl Capture {
    fn finish(self, wait: Duration) -> String {
        let _ = self.done.recv_timeout(wait);
        let bytes = self.buf.lock().unwrap().clone();
        String::from_utf8_lossy(&bytes).into_owned()
    }
}

fn kill_group(pid: u32) {
    // SAFETY: killpg only sends a signal; ESRCH for an already-reaped group is ignored.
    unsafe {
        libc::killpg(pid as libc::pid_t, libc::SIGKILL);
    }
}

struct RawRun {
    exit: Option<std::process::ExitStatus>,
    timed_out: bool,
    stdout: String,
    stderr: String,
    wall_time: f64,
}

fn spawn_and_wait(
    argv: &[String],
    workdir: &Path,
    timeout: Duration,
    eval_seed: Option<u64>,
) -> Result<RawRun, SandboxError> {
    let mut cmd = Command::new(&argv[0]);
    cmd.args(&argv[1..])
        .current_dir(workdir)
        .env_clear()
        .env("HOME", workdir)
        .env("TMPDIR", workdir)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0);
    if let Some(path) = std::env::var_os("PATH") {
        cmd.env("PATH", path);
    }
    if let Some(seed) = eval_seed {
        cmd.env(EVAL_SEED_ENV, seed.to_string());
    }

    let start = Instant::now();
    let mut child = cmd
        .spawn()
        .map_err(|e| SandboxError::Infrastructure(format!("cannot spawn `{}`: {e}", argv[0])))?;
    let pid = child.id();
    let stdout = capture(child.stdout.take().expect("piped stdout"));
    let stderr = capture(child.stderr.take().expect("piped stderr"));

    let mut timed_out = false;
    let exit = loop {
        match child.try_wait() {
            Ok(Some(status)) => break Some(status),
            Ok(None) => {}
            Err(e) => {
                kill_group(pid);
                let _ = child.wait();
                return Err(SandboxError::Infrastructure(format!("wait failed: {e}")));
            }
        }
        if start.elapsed() >= timeout {
            timed_out = true;
            kill_group(pid);
            let _ = child.wait();
            break None;
        }
        thread::sleep(POLL_INTERVAL);
    };
    let wall_time = start.elapsed().as_secs_f64();
    // Stragglers left in the group die with the oracle.
    kill_group(pid);

    let grace = KILL_GRACE / 2;
    Ok(RawRun {
        exit,
        timed_out,
        stdout: stdout.finish(grace),
        stderr: stderr.finish(grace),
        wall_time,
    })
}

fn run_template(
    template: &str,
    candidate: &Path,
    workdir: &Path,
    problem_dir: Option<&Path>,
    timeout: Duration,
    eval_seed: Option<u64>,
) -> Result<EvaluationOutcome, SandboxError> {
    let argv = build_argv(template, candidate, problem_dir)?;
    let raw = spawn_and_wait(&argv, workdir, timeout, eval_seed)?;
    let mut feedback = Feedback {
        stderr_tail: tail(&raw.stderr, FEEDBACK_TAIL_BYTES),
        stdout_tail: tail(&raw.stdout, FEEDBACK_TAIL_BYTES),
        violated_rule: None,
        wall_time: raw.wall_time,
    };
    if raw.timed_out {
        let note = format!("evaluation exceeded {:.3} s and was killed", timeout.as_secs_f64());
        feedback.stderr_tail = tail(&format!("{}{note}", with_newline(&raw.stderr)), FEEDBACK_TAIL_BYTES);
        return Ok(EvaluationOutcome::failed(Status::Timeout, feedback));
    }
    let status = raw.exit.expect("exit status present when not timed out");
    if !status.success() {
        let reason = match (status.code(), status.signal()) {
            (Some(code), _) => format!("oracle exited with status {code}"),
            (None, Some(sig)) => format!("oracle terminated by signal {sig}"),
            _ => "oracle failed".to_string(),
        };
        feedback.stderr_tail = tail(&format!("{}\n{reason}", raw.stderr), FEEDBACK_TAIL_BYTES);
        return Ok(EvaluationOutcome::failed(Status::Crash, feedback));
    }
    match parse_oracle_line(&raw.stdout) {
        Ok((score, message)) => {
            if !message.is_empty() {
                feedback.stdout_tail = tail(&message, FEEDBACK_TAIL_BYTES);
            }
            Ok(EvaluationOutcome::ok(score, feedback))
        }
        Err(diag) => {
            feedback.stderr_tail = tail(
                &format!("{}\nunparseable oracle output: {diag}", raw.stderr),
                FEEDBACK_TAIL_BYTES,
            );
            Ok(EvaluationOutcome::failed(Status::Crash, feedback))
        }
    }
}

#[derive(Deserialize)]
struct OracleLine {
    score: f64,
    #[serde(default)]
    feedback: String,
}

/// Parse the final non-empty stdout line as the oracle's verdict.
pub fn parse_oracle_line(stdout: &str) -> Result<(f64, String), String> {
    let line = stdout
        .lines()
        .rev()
        .find(|l| !l.trim().is_empty())
        .ok_or_else(|| "empty stdout".to_string())?;
    let parsed: OracleLine =
        serde_json::from_str(line.trim()).map_err(|e| format!("`{}`: {e}", tail(line, 200)))?;
    if !parsed.score.is_finite() {
        return Err(format!("non-finite score {}", parsed.score));
    }
    Ok((parsed.score, parsed.feedback))
}

pub(super) fn syntax_check(source: &str, runner: &str) -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| format!("cannot create working directory: {e}"))?;
    let file = dir.path().join("candidate.txt");
    fs::write(&file, source).map_err(|e| format!("cannot write candidate: {e}"))?;
    let argv = build_argv(runner, &file, None).map_err(|e| e.to_string())?;
    let raw = spawn_and_wait(&argv, dir.path(), SYNTAX_CHECK_TIMEOUT, None).map_err(|e| e.to_string())?;
    if raw.timed_out {
        return Err("syntax check timed out".into());
    }
    match raw.exit {
        Some(status) if status.success() => Ok(()),
        _ => Err(format!("syntax check failed: {}", tail(raw.stderr.trim(), 1024))),
    }
}

fn with_newline(text: &str) -> String {
    if text.is_empty() || text.ends_with('\n') {
        text.to_string()
    } else {
        format!("{text}\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_line_is_last_nonempty_line() {
        let (s, f) = parse_oracle_line("noise\n{\"score\": 0.75, \"feedback\": \"ok\"}\n\n").unwrap();
        assert_eq!(s, 0.75);
        assert_eq!(f, "ok");
        assert!(parse_oracle_line("{\"score\": 1}\nnot json").is_err());
        assert!(parse_oracle_line("").is_err());
        assert!(parse_oracle_line("{\"feedback\": \"no score\"}").is_err());
    }

    #[test]
    fn argv_substitution_keeps_spaces_in_paths() {
        let argv = build_argv("python3 {problem_dir}/oracle.py {candidate}", Path::new("/tmp/a b/c.py"), Some(Path::new("/p"))).unwrap();
        assert_eq!(argv, vec!["python3", "/p/oracle.py", "/tmp/a b/c.py"]);
    }
}
