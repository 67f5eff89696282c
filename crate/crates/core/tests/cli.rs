mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn coevolve(dir: &Path, args: &[&str]) -> Output {
    Command::new(common::cli_bin()).current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn doa_spec() -> String {
    common::fixture_path("fixtures/doa.json").display().to_string()
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let help = coevolve(dir.path(), &["--help"]);
    assert_eq!(help.status.code(), Some(0));
    for sub in ["run", "resume", "report", "verify-citations", "bench", "list-problems"] {
        assert!(stdout(&help).contains(sub), "help lists {sub}");
    }
    assert_eq!(coevolve(dir.path(), &["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(coevolve(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(coevolve(dir.path(), &["run"]).status.code(), Some(1));
    let bad_rate = coevolve(dir.path(), &["run", "--problem", &doa_spec(), "--mutation-rate", "1.5"]);
    assert_eq!(bad_rate.status.code(), Some(1));
    assert!(stderr(&bad_rate).contains("mutation_rate"));
}

#[test]
fn missing_spec_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no-such-spec.json");
    let out = coevolve(dir.path(), &["run", "--problem", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("no-such-spec.json"));
}

#[test]
fn zero_iterations_reports_initial_elite() {
    let dir = tempfile::tempdir().unwrap();
    let out = coevolve(dir.path(), &["run", "--problem", &doa_spec(), "--iterations", "0", "--n-init", "3", "--out", "r"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("generation 0 of 0"));
    let ledger = fs::read_to_string(dir.path().join("r/ledger.jsonl")).unwrap();
    assert_eq!(ledger.lines().count(), 2, "header and initial population only");
}

#[test]
fn outputs_stay_under_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = coevolve(dir.path(), &["run", "--problem", &doa_spec(), "--iterations", "2", "--n-init", "3", "--out", "results/a"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let top: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(top, vec![std::ffi::OsString::from("results")]);
    let mut files: Vec<_> = fs::read_dir(dir.path().join("results/a"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    assert_eq!(files, ["best.txt", "checkpoint.json", "ledger.jsonl"]);
}

#[test]
fn initialization_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("oracle.sh"), "echo 'always broken' >&2\nexit 1\n").unwrap();
    let spec = serde_json::json!({
        "name": "broken",
        "reference_code": {"inline": "x = 1\n"},
        "oracle_binding": {"external": "sh {problem_dir}/oracle.sh {candidate}"},
    });
    fs::write(dir.path().join("spec.json"), spec.to_string()).unwrap();
    let out = coevolve(dir.path(), &["run", "--problem", "spec.json", "--n-init", "2", "--iterations", "1"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("always broken"));
}

#[test]
fn resume_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let run = coevolve(
        dir.path(),
        &["run", "--problem", &doa_spec(), "--iterations", "4", "--n-init", "3", "--stop-after", "2", "--out", "r"],
    );
    assert_eq!(run.status.code(), Some(0), "{}", stderr(&run));
    assert_eq!(fs::read_to_string(dir.path().join("r/ledger.jsonl")).unwrap().lines().count(), 4);

    let resume = coevolve(dir.path(), &["resume", "--checkpoint", "r/checkpoint.json"]);
    assert_eq!(resume.status.code(), Some(0), "{}", stderr(&resume));
    assert_eq!(fs::read_to_string(dir.path().join("r/ledger.jsonl")).unwrap().lines().count(), 6);

    let again = coevolve(dir.path(), &["resume", "--checkpoint", "r/checkpoint.json"]);
    assert_eq!(again.status.code(), Some(0));

    let report = coevolve(dir.path(), &["report", "r/ledger.jsonl"]);
    assert_eq!(report.status.code(), Some(0));
    let text = stdout(&report);
    assert!(text.contains("| gen | elite score |"));
    assert_eq!(text.lines().filter(|l| l.starts_with("| ") && !l.starts_with("| gen")).count(), 4);
    assert!(text.contains("0 unparseable records"));

    let corrupt = dir.path().join("r/checkpoint.json");
    fs::write(&corrupt, "{ truncated").unwrap();
    let bad = coevolve(dir.path(), &["resume", "--checkpoint", "r/checkpoint.json"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn verify_citations_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("ok.tex"), r"\citep[see][]{knuth84} and \citet{lamport94}").unwrap();
    fs::write(dir.path().join("bad.tex"), r"\cite{knuth84,ghost}").unwrap();
    fs::write(dir.path().join("broken.tex"), r"\cite{knuth84").unwrap();
    fs::write(dir.path().join("refs.bib"), "@book{knuth84, title={TeX}}\n@book{lamport94, title={LaTeX}}\n").unwrap();

    let ok = coevolve(dir.path(), &["verify-citations", "ok.tex", "refs.bib"]);
    assert_eq!(ok.status.code(), Some(0));
    let bad = coevolve(dir.path(), &["verify-citations", "bad.tex", "refs.bib"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stdout(&bad).contains("missing: ghost"));
    assert!(!stdout(&bad).contains("missing: knuth84"));
    assert_eq!(coevolve(dir.path(), &["verify-citations", "broken.tex", "refs.bib"]).status.code(), Some(2));
    assert_eq!(coevolve(dir.path(), &["verify-citations", "ok.tex", "nope.bib"]).status.code(), Some(1));
    assert_eq!(coevolve(dir.path(), &["verify-citations", "nope.tex", "refs.bib"]).status.code(), Some(1));
}

#[test]
fn list_problems_and_bench() {
    let dir = tempfile::tempdir().unwrap();
    let list = coevolve(dir.path(), &["list-problems"]);
    assert_eq!(list.status.code(), Some(0));
    let ids: Vec<_> = stdout(&list).lines().map(|l| l.split_whitespace().next().unwrap().to_string()).collect();
    assert_eq!(ids, ["doa", "stability"]);

    let bench = coevolve(dir.path(), &["bench", "--iterations", "1"]);
    assert_eq!(bench.status.code(), Some(0), "{}", stderr(&bench));
    let text = stdout(&bench);
    assert!(text.starts_with("problem"));
    assert_eq!(text.lines().count(), 3);
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0, "bench writes nothing");
}
