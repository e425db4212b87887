//! Built-in scenarios, embedded at compile time.

use crate::config::{parse_scenarios, Resolved};
use crate::error::{CliError, CliResult};

pub const PRESETS: [(&str, &str); 10] = [
    ("model1-closed", include_str!("../presets/model1-closed.json")),
    ("model1-open", include_str!("../presets/model1-open.json")),
    ("model1-steady", include_str!("../presets/model1-steady.json")),
    ("model2-closed", include_str!("../presets/model2-closed.json")),
    ("model2-open", include_str!("../presets/model2-open.json")),
    ("model2-steady", include_str!("../presets/model2-steady.json")),
    ("appendixB-matrices", include_str!("../presets/appendixB-matrices.json")),
    ("qpd-model1", include_str!("../presets/qpd-model1.json")),
    ("qpd-model2", include_str!("../presets/qpd-model2.json")),
    ("derive-params-example", include_str!("../presets/derive-params-example.json")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn preset_text(name: &str) -> CliResult<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t).ok_or_else(|| {
        CliError::Config(format!(
            "unknown preset `{name}`; available: {}",
            preset_names().collect::<Vec<_>>().join(", ")
        ))
    })
}

pub fn preset(name: &str) -> CliResult<Vec<Resolved>> {
    parse_scenarios(preset_text(name)?).map_err(|e| CliError::Config(format!("preset `{name}`: {e}")))
}
