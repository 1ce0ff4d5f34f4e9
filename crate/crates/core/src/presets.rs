//! Scenario presets shipped with the repository.

use crate::config::parse_scenarios;
use crate::error::Result;
use crate::scenario::ScenarioConfig;

pub const PRESETS: [(&str, &str); 6] = [
    ("fig2a", include_str!("../../../presets/fig2a.conf")),
    ("fig2b", include_str!("../../../presets/fig2b.conf")),
    ("fig3", include_str!("../../../presets/fig3.conf")),
    ("fig4", include_str!("../../../presets/fig4.conf")),
    ("fig5", include_str!("../../../presets/fig5.conf")),
    ("fig6", include_str!("../../../presets/fig6.conf")),
];

/// Source text of a named preset.
pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn preset(name: &str) -> Option<Result<Vec<ScenarioConfig>>> {
    preset_text(name).map(parse_scenarios)
}
