//! Plain-text (Markdown) rendering of a run ledger.
//!
//! Layout: a title and config echo from the header line, a table with one
//! row per generation (elite score after the generation, then origin and
//! status of the functional and structural candidates), the best candidate's
//! source in a fenced block, and a footer counting lines that failed to
//! parse. Corrupt lines are skipped rather than aborting the report.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::engine::{LedgerHeader, LedgerLine};
use crate::engine::ledger::{GenerationLine, InitialLine};

fn config_echo(header: &LedgerHeader) -> String {
    let c = &header.config;
    let mut line = format!(
        "n_init={} n_pop={} mutation_rate={} iterations={} eval_timeout_secs={} seed={} max_workers={} pairs_per_generation={}",
        c.n_init, c.n_pop, c.mutation_rate, c.iterations, c.eval_timeout_secs, c.seed, c.max_workers, c.pairs_per_generation
    );
    if let Some(seed) = c.eval_seed {
        let _ = write!(line, " eval_seed={seed}");
    }
    line
}

/// Render ledger text. Never fails: unparseable lines are counted.
pub fn render_report_text(ledger: &str) -> String {
    let mut header = None;
    let mut initial: Option<InitialLine> = None;
    let mut generations: Vec<GenerationLine> = Vec::new();
    let mut unparseable = 0usize;
    for line in ledger.lines().filter(|l| !l.trim().is_empty()) {
        match serde_json::from_str::<LedgerLine>(line) {
            Ok(LedgerLine::Header(h)) => header = Some(h),
            Ok(LedgerLine::Initial(i)) => initial = Some(i),
            Ok(LedgerLine::Generation(g)) => generations.push(g),
            Err(_) => unparseable += 1,
        }
    }

    let mut out = String::new();
    match &header {
        Some(h) => {
            let _ = writeln!(out, "# Run report: {}\n", h.problem);
            let _ = writeln!(
                out,
                "provider: {}  spec hash: {}  crate: {}  prompts: v{}",
                h.provider, h.spec_hash, h.crate_version, h.prompt_version
            );
            let _ = writeln!(out, "config: {}\n", config_echo(h));
        }
        None => out.push_str("# Run report\n\n"),
    }
    if let Some(init) = &initial {
        let ok = init.candidates.iter().filter(|c| c.score.is_some()).count();
        let _ = writeln!(
            out,
            "initial population: {ok}/{} evaluated ok, elite {} ({})\n",
            init.candidates.len(),
            init.elite_id,
            init.elite_score
        );
    }

    out.push_str("| gen | elite score | functional | status | structural | status |\n");
    out.push_str("|----:|------------:|------------|--------|------------|--------|\n");
    for g in &generations {
        let r = &g.record;
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} |",
            r.generation, r.elite_score_after, r.functional.origin, r.functional.status, r.structural.origin, r.structural.status
        );
    }

    let best = match generations.last() {
        Some(g) => Some((g.record.elite_id_after.clone(), g.record.elite_score_after)),
        None => initial.as_ref().map(|i| (i.elite_id.clone(), i.elite_score)),
    };
    if let Some((id, score)) = best {
        let source = generations
            .iter()
            .rev()
            .find_map(|g| g.sources.get(&id))
            .or_else(|| initial.as_ref().and_then(|i| i.sources.get(&id)));
        let _ = writeln!(out, "\n## Best candidate {id} (score {score})\n");
        match source {
            Some(src) => {
                let _ = writeln!(out, "```\n{}\n```", src.trim_end_matches('\n'));
            }
            None => out.push_str("(source not recorded in this ledger)\n"),
        }
    }

    let _ = writeln!(
        out,
        "\n{unparseable} unparseable record{}",
        if unparseable == 1 { "" } else { "s" }
    );
    out
}

pub fn render_report(ledger_path: &Path) -> std::io::Result<String> {
    Ok(render_report_text(&fs::read_to_string(ledger_path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_ledger_is_header_only() {
        let r = render_report_text("");
        assert!(r.contains("| gen |"));
        assert!(!r.contains("Best candidate"));
        assert!(r.contains("0 unparseable records"));
    }

    #[test]
    fn corrupt_line_is_counted() {
        let r = render_report_text("{not json\n");
        assert!(r.contains("1 unparseable record\n"));
    }
}
