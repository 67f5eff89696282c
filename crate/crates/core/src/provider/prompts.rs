//! Versioned prompt templates, one per role.
//!
//! Templates live as text assets under `prompts/`; `{name}` placeholders are
//! filled from the request payload. Bump [`PROMPT_VERSION`] whenever a
//! template changes so ledgers record which wording produced a run.

use std::sync::OnceLock;

use regex::Regex;

use super::Payload;

pub const PROMPT_VERSION: &str = "1";

pub const SYSTEM: &str = include_str!("../../prompts/system.txt");
const GENERATE_INITIAL: &str = include_str!("../../prompts/generate_initial.txt");
const REFLECT_SHORT: &str = include_str!("../../prompts/reflect_short.txt");
const REFLECT_LONG: &str = include_str!("../../prompts/reflect_long.txt");
const CROSSOVER: &str = include_str!("../../prompts/crossover.txt");
const MUTATE: &str = include_str!("../../prompts/mutate.txt");
const RESTRUCTURE: &str = include_str!("../../prompts/restructure.txt");

/// Single-pass substitution, so payload text containing `{...}` is left alone.
fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"\{([a-z_]+)\}").unwrap());
    re.replace_all(template, |caps: &regex::Captures<'_>| {
        let name = &caps[1];
        match vars.iter().find(|(n, _)| *n == name) {
            Some((_, value)) => value.to_string(),
            None => caps[0].to_string(),
        }
    })
    .into_owned()
}

/// The user message for a request.
pub fn render(payload: &Payload) -> String {
    match payload {
        Payload::GenerateInitial {
            problem,
            reference,
            index,
            count,
        } => fill(
            GENERATE_INITIAL,
            &[
                ("problem", problem),
                ("reference", reference),
                ("index", &(index + 1).to_string()),
                ("count", &count.to_string()),
            ],
        ),
        Payload::ReflectShort {
            worse,
            better,
            worse_score,
            better_score,
        } => fill(
            REFLECT_SHORT,
            &[
                ("worse", worse),
                ("better", better),
                ("worse_score", &worse_score.to_string()),
                ("better_score", &better_score.to_string()),
            ],
        ),
        Payload::ReflectLong { shorts, previous } => {
            let shorts: Vec<String> = shorts.iter().map(|s| format!("- {s}")).collect();
            fill(REFLECT_LONG, &[("shorts", &shorts.join("\n")), ("previous", previous)])
        }
        Payload::Crossover {
            worse,
            better,
            reflection,
        } => fill(CROSSOVER, &[("worse", worse), ("better", better), ("reflection", reflection)]),
        Payload::Mutate {
            elite,
            reflection,
            feedback,
        } => fill(
            MUTATE,
            &[
                ("elite", elite),
                ("reflection", reflection),
                ("feedback", feedback.as_deref().unwrap_or("")),
            ],
        ),
        Payload::Restructure {
            problem,
            elite,
            reflection,
            feedback,
        } => fill(
            RESTRUCTURE,
            &[
                ("problem", problem),
                ("elite", elite),
                ("reflection", reflection),
                ("feedback", feedback.as_deref().unwrap_or("")),
            ],
        ),
    }
}
