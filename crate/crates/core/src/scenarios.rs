//! Scenario configs shipped in `configs/`, compiled in so tests and the CLI
//! (`--config builtin:NAME`) can use them without a checkout.

use crate::config::RunConfig;
use crate::error::ConfigError;

pub const BUILTIN: &[(&str, &str)] = &[
    ("homogeneous", include_str!("../../../configs/homogeneous.toml")),
    ("one_defect", include_str!("../../../configs/one_defect.toml")),
    ("bound_state", include_str!("../../../configs/bound_state.toml")),
    ("two_phase", include_str!("../../../configs/two_phase.toml")),
    ("short_range", include_str!("../../../configs/short_range.toml")),
    ("anisotropic", include_str!("../../../configs/anisotropic.toml")),
    ("hadamard", include_str!("../../../configs/hadamard.toml")),
    ("degenerate", include_str!("../../../configs/degenerate.toml")),
    ("custom", include_str!("../../../configs/custom.toml")),
];

pub fn source(name: &str) -> Option<&'static str> {
    BUILTIN.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    BUILTIN.iter().map(|(n, _)| *n)
}

pub fn load(name: &str) -> Result<RunConfig, ConfigError> {
    let src = source(name).ok_or_else(|| ConfigError::Invalid {
        key: "config".into(),
        line: None,
        message: format!("no built-in scenario `{name}` (available: {})", names().collect::<Vec<_>>().join(", ")),
    })?;
    RunConfig::from_toml_str(src)
}
