//! Prompt templates with `{name}` placeholders.

pub const GENERATE_SYSTEM: &str = include_str!("../../resources/prompts/generate_system.txt");
pub const GENERATE_USER: &str = include_str!("../../resources/prompts/generate_user.txt");
pub const GENERATE_ABBREVIATE: &str = include_str!("../../resources/prompts/generate_abbreviate.txt");
pub const ALIGN_SYSTEM: &str = include_str!("../../resources/prompts/align_system.txt");
pub const ALIGN_USER: &str = include_str!("../../resources/prompts/align_user.txt");
pub const ALIGN_STRICT: &str = include_str!("../../resources/prompts/align_strict.txt");
pub const PREDICT_SYSTEM: &str = include_str!("../../resources/prompts/predict_system.txt");
pub const PREDICT_USER: &str = include_str!("../../resources/prompts/predict_user.txt");
pub const PREDICT_SHOT: &str = include_str!("../../resources/prompts/predict_shot.txt");
pub const PREDICT_STRICT: &str = include_str!("../../resources/prompts/predict_strict.txt");

/// Substitute each `{key}` in a single left-to-right pass, so substituted
/// text is never re-scanned. Unknown placeholders are left as they are.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = after.find('}').and_then(|close| {
            let name = &after[..close];
            vars.iter().find(|(k, _)| *k == name).map(|(_, v)| (close, *v))
        });
        match hit {
            Some((close, value)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Which task a system prompt belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Generate,
    Align,
    Predict,
}

impl Task {
    pub fn of_system_prompt(system: &str) -> Option<Task> {
        let generate = render(GENERATE_SYSTEM, &[]);
        if system == ALIGN_SYSTEM {
            Some(Task::Align)
        } else if system == PREDICT_SYSTEM {
            Some(Task::Predict)
        } else if system.starts_with(generate.split('{').next().unwrap_or_default()) {
            Some(Task::Generate)
        } else {
            None
        }
    }
}
