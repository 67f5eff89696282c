//! Deterministic offline backend.
//!
//! Every answer is a pure function of the request and its seed:
//!
//! * initial variant `i` carries a `# variant i` header; variant 0 is the
//!   reference, later variants rescale each numeric literal with
//!   probability 1/2 by a factor from [`MUTATION_FACTORS`];
//! * short reflections summarise the line diff between the two parents;
//! * the long reflection is the newest short reflection followed by the
//!   previous long reflection (truncated by the caller);
//! * crossover splices a seeded non-empty subset of the better parent's
//!   changed hunks into the worse parent;
//! * mutation rescales exactly one numeric literal;
//! * restructuring applies rewrite `seed % 4`: `0` two-stage
//!   propose-then-refine (`stages = 2`, `refine_scale = 0.5`), `1` toggle
//!   the first boolean, `2` hoist the last assignment to the top, `3`
//!   collapse to a single stage.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use similar::{ChangeTag, DiffOp, TextDiff};
use std::sync::OnceLock;

use super::{render_code_response, Payload, Provider, ProviderError, ProviderRequest, ProviderResponse};

pub const MUTATION_FACTORS: [f64; 4] = [0.8, 0.9, 1.1, 1.25];
pub const NO_DIFFERENCE: &str = "no structural difference detected";

#[derive(Debug, Clone, Copy, Default)]
pub struct MockProvider;

impl MockProvider {
    pub fn new() -> Self {
        MockProvider
    }
}

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b\d+(?:\.\d+)?(?:[eE][-+]?\d+)?\b").unwrap())
}

fn is_comment(line: &str) -> bool {
    let t = line.trim_start();
    t.starts_with('#') || t.starts_with("//")
}

/// Byte ranges of numeric literals outside comment lines.
fn literal_spans(source: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut offset = 0;
    for line in source.split_inclusive('\n') {
        if !is_comment(line) {
            let code = match line.find('#') {
                Some(i) => &line[..i],
                None => line,
            };
            for m in number_re().find_iter(code) {
                let before = code[..m.start()].chars().next_back();
                let after = code[m.end()..].chars().next();
                // skip pieces of identifiers and dotted names
                if matches!(before, Some(c) if c.is_alphanumeric() || c == '_' || c == '.')
                    || matches!(after, Some(c) if c.is_alphanumeric() || c == '_' || c == '.')
                {
                    continue;
                }
                spans.push((offset + m.start(), offset + m.end()));
            }
        }
        offset += line.len();
    }
    spans
}

fn round_significant(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let magnitude = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(digits - 1 - magnitude);
    (x * scale).round() / scale
}

/// Rescale one literal; integers stay integers, floats keep six
/// significant digits and always print with a decimal point or exponent.
fn scale_literal(text: &str, factor: f64) -> String {
    let is_int = text.bytes().all(|b| b.is_ascii_digit());
    let value: f64 = text.parse().expect("regex matched a number");
    if is_int {
        let scaled = (value * factor).round().max(0.0);
        return format!("{}", scaled as u64);
    }
    let scaled = round_significant(value * factor, 6);
    let s = format!("{scaled}");
    if s.contains(['.', 'e', 'E']) {
        s
    } else {
        format!("{s}.0")
    }
}

fn replace_spans(source: &str, replacements: &[((usize, usize), String)]) -> String {
    let mut out = String::with_capacity(source.len());
    let mut at = 0;
    for ((start, end), text) in replacements {
        out.push_str(&source[at..*start]);
        out.push_str(text);
        at = *end;
    }
    out.push_str(&source[at..]);
    out
}

fn ensure_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

fn initial_variant(reference: &str, index: usize, rng: &mut ChaCha8Rng) -> String {
    let body = if index == 0 {
        reference.to_string()
    } else {
        let mut reps = Vec::new();
        for span in literal_spans(reference) {
            if rng.random_bool(0.5) {
                let factor = MUTATION_FACTORS[rng.random_range(0..MUTATION_FACTORS.len())];
                reps.push((span, scale_literal(&reference[span.0..span.1], factor)));
            }
        }
        replace_spans(reference, &reps)
    };
    ensure_newline(format!("# variant {index}\n{body}"))
}

fn short_reflection(worse: &str, better: &str, worse_score: f64, better_score: f64) -> String {
    let diff = TextDiff::from_lines(worse, better);
    let mut removed = Vec::new();
    let mut added = Vec::new();
    for change in diff.iter_all_changes() {
        let line = change.value().trim().to_string();
        match change.tag() {
            ChangeTag::Delete => removed.push(line),
            ChangeTag::Insert => added.push(line),
            ChangeTag::Equal => {}
        }
    }
    if removed.is_empty() && added.is_empty() {
        return NO_DIFFERENCE.to_string();
    }
    let mut parts = Vec::new();
    let pairs = removed.len().min(added.len());
    for i in 0..pairs {
        parts.push(format!("`{}` became `{}`", removed[i], added[i]));
    }
    for line in &removed[pairs..] {
        parts.push(format!("dropped `{line}`"));
    }
    for line in &added[pairs..] {
        parts.push(format!("added `{line}`"));
    }
    format!(
        "Better ({better_score:.6}) vs worse ({worse_score:.6}): {}.",
        parts.join("; ")
    )
}

fn splice(worse: &str, better: &str, rng: &mut ChaCha8Rng) -> String {
    let diff = TextDiff::from_lines(worse, better);
    let ops = diff.ops();
    let changed: Vec<usize> = ops
        .iter()
        .enumerate()
        .filter(|(_, op)| !matches!(op, DiffOp::Equal { .. }))
        .map(|(i, _)| i)
        .collect();
    if changed.is_empty() {
        return worse.to_string();
    }
    let mut take: Vec<bool> = changed.iter().map(|_| rng.random_bool(0.5)).collect();
    if !take.iter().any(|t| *t) {
        let pick = rng.random_range(0..take.len());
        take[pick] = true;
    }
    let old: Vec<&str> = worse.split_inclusive('\n').collect();
    let new: Vec<&str> = better.split_inclusive('\n').collect();
    let mut out = String::new();
    for (i, op) in ops.iter().enumerate() {
        let from_better = changed.iter().position(|c| *c == i).is_some_and(|k| take[k]);
        if from_better {
            for line in &new[op.new_range()] {
                out.push_str(line);
            }
        } else {
            for line in &old[op.old_range()] {
                out.push_str(line);
            }
        }
    }
    out
}

fn mutate_source(elite: &str, rng: &mut ChaCha8Rng) -> (String, Option<String>, String) {
    let spans = literal_spans(elite);
    if spans.is_empty() {
        return (
            elite.to_string(),
            Some("no numeric literal to perturb".to_string()),
            "no numeric literal found; returning the elite unchanged".to_string(),
        );
    }
    let span = spans[rng.random_range(0..spans.len())];
    let factor = MUTATION_FACTORS[rng.random_range(0..MUTATION_FACTORS.len())];
    let old = &elite[span.0..span.1];
    let new = scale_literal(old, factor);
    let thought = format!("rescale literal {old} by {factor} to {new}");
    (replace_spans(elite, &[(span, new)]), None, thought)
}

fn assignment_name(line: &str) -> Option<&str> {
    if is_comment(line) {
        return None;
    }
    let (name, _) = line.split_once('=')?;
    let name = name.trim();
    let ok = !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    ok.then_some(name)
}

/// Set `name = value`, replacing an existing assignment or appending one.
fn set_assignment(lines: &mut Vec<String>, name: &str, value: &str) {
    let text = format!("{name} = {value}");
    match lines.iter().position(|l| assignment_name(l) == Some(name)) {
        Some(i) => lines[i] = text,
        None => lines.push(text),
    }
}

fn join_lines(lines: &[String]) -> String {
    ensure_newline(lines.join("\n"))
}

/// Rewrite ids documented on the module.
pub const REWRITES: [&str; 4] = ["two-stage propose-then-refine", "toggle first boolean", "hoist last assignment", "single stage"];

fn restructure_source(elite: &str, rewrite: u64) -> (String, String) {
    let mut lines: Vec<String> = elite.lines().map(str::to_string).collect();
    let mut rewrite = rewrite as usize % REWRITES.len();
    if rewrite == 1 {
        let toggled = lines.iter_mut().find_map(|l| {
            let name = assignment_name(l)?.to_string();
            let value = l.split_once('=')?.1.trim().to_string();
            let flipped = match value.as_str() {
                "true" => "false",
                "false" => "true",
                "True" => "False",
                "False" => "True",
                _ => return None,
            };
            *l = format!("{name} = {flipped}");
            Some(())
        });
        if toggled.is_none() {
            rewrite = 2;
        }
    }
    match rewrite {
        0 => {
            set_assignment(&mut lines, "stages", "2");
            set_assignment(&mut lines, "refine_scale", "0.5");
        }
        2 => {
            if let Some(last) = lines.iter().rposition(|l| assignment_name(l).is_some()) {
                let line = lines.remove(last);
                let first_code = lines.iter().position(|l| !is_comment(l) && !l.trim().is_empty()).unwrap_or(lines.len());
                lines.insert(first_code, line);
            }
        }
        3 => {
            set_assignment(&mut lines, "stages", "1");
            lines.retain(|l| assignment_name(l) != Some("refine_scale"));
        }
        _ => {}
    }
    (join_lines(&lines), format!("structural rewrite: {}", REWRITES[rewrite]))
}

impl Provider for MockProvider {
    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let mut rng = ChaCha8Rng::seed_from_u64(request.seed);
        let response = match &request.payload {
            Payload::GenerateInitial { reference, index, .. } => {
                let source = initial_variant(reference, *index, &mut rng);
                ProviderResponse::from_text(render_code_response(&format!("parameter variant {index}"), &source))
            }
            Payload::ReflectShort {
                worse,
                better,
                worse_score,
                better_score,
            } => ProviderResponse::from_text(short_reflection(worse, better, *worse_score, *better_score)),
            Payload::ReflectLong { shorts, previous } => {
                let text = match shorts.last() {
                    Some(last) if previous.is_empty() => last.clone(),
                    Some(last) => format!("{last} {previous}"),
                    None => previous.clone(),
                };
                ProviderResponse::from_text(text)
            }
            Payload::Crossover { worse, better, .. } => {
                let child = ensure_newline(splice(worse, better, &mut rng));
                ProviderResponse::from_text(render_code_response("splice the better parent's changes", &child))
            }
            Payload::Mutate { elite, .. } => {
                let (source, warning, thought) = mutate_source(elite, &mut rng);
                let mut r = ProviderResponse::from_text(render_code_response(&thought, &source));
                r.warning = warning;
                r
            }
            Payload::Restructure { elite, .. } => {
                let (source, thought) = restructure_source(elite, request.seed);
                ProviderResponse::from_text(render_code_response(&thought, &source))
            }
        };
        Ok(response)
    }

    fn kind(&self) -> &'static str {
        "mock"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(payload: Payload, seed: u64) -> ProviderResponse {
        MockProvider.complete(&ProviderRequest::new(payload, seed)).unwrap()
    }

    #[test]
    fn literal_spans_skip_comments_and_identifiers() {
        let src = "# variant 3\nx2 = 1.5\ny = 2000 # 7\nz = 1e-3\n";
        let found: Vec<&str> = literal_spans(src).iter().map(|(a, b)| &src[*a..*b]).collect();
        assert_eq!(found, vec!["1.5", "2000", "1e-3"]);
    }

    #[test]
    fn scaling_keeps_kind() {
        assert_eq!(scale_literal("2000", 0.9), "1800");
        assert_eq!(scale_literal("1.0", 1.25), "1.25");
        assert_eq!(scale_literal("1.0", 0.8), "0.8");
        assert_eq!(scale_literal("4.0", 1.25), "5.0");
        assert_eq!(scale_literal("0.1", 1.1), "0.11");
    }

    #[test]
    fn mutation_rewrites_exactly_one_literal() {
        let src = "a = 1.5\nb = 2.5\n";
        let r = run(
            Payload::Mutate {
                elite: src.into(),
                reflection: String::new(),
                feedback: None,
            },
            3,
        );
        let out = r.extracted_code.unwrap() + "\n";
        let changed = src.lines().zip(out.lines()).filter(|(a, b)| a != b).count();
        assert_eq!(changed, 1);
        assert!(r.warning.is_none());
    }

    #[test]
    fn mutation_without_literals_warns() {
        let src = "use_residual = true\n";
        let r = run(
            Payload::Mutate {
                elite: src.into(),
                reflection: String::new(),
                feedback: None,
            },
            1,
        );
        assert_eq!(r.extracted_code.unwrap() + "\n", src);
        assert!(r.warning.is_some());
    }

    #[test]
    fn short_reflection_cases() {
        assert_eq!(short_reflection("a = 1\n", "a = 1\n", 0.0, 0.0), NO_DIFFERENCE);
        let r = short_reflection("a = 1\n", "a = 2\n", 0.1, 0.2);
        assert!(r.contains("`a = 1` became `a = 2`"), "{r}");
    }

    #[test]
    fn splice_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(splice("a = 1\nb = 2\n", "a = 1\nb = 2\n", &mut rng), "a = 1\nb = 2\n");
        assert_eq!(splice("a = 1\nb = 2\n", "a = 1\nb = 3\n", &mut rng), "a = 1\nb = 3\n");
    }

    #[test]
    fn rewrite_zero_is_two_stage() {
        let (out, _) = restructure_source("tau = 0.1\nuse_residual = true\n", 0);
        assert_eq!(out, "tau = 0.1\nuse_residual = true\nstages = 2\nrefine_scale = 0.5\n");
        let (out, _) = restructure_source("tau = 0.1\nuse_residual = true\n", 1);
        assert_eq!(out, "tau = 0.1\nuse_residual = false\n");
        let (out, _) = restructure_source("# h\ntau = 0.1\nsteps = 5\n", 2);
        assert_eq!(out, "# h\nsteps = 5\ntau = 0.1\n");
        let (out, _) = restructure_source("stages = 2\nrefine_scale = 0.5\n", 3);
        assert_eq!(out, "stages = 1\n");
    }
}
