use super::spec::ExperimentSpec;

const SOURCES: [&str; 7] = [
    include_str!("../../specs/free-exactness.toml"),
    include_str!("../../specs/free-manifold-independence.toml"),
    include_str!("../../specs/integrable-exactness.toml"),
    include_str!("../../specs/barrier-sweep.toml"),
    include_str!("../../specs/kho-profiles.toml"),
    include_str!("../../specs/kho-slopes.toml"),
    include_str!("../../specs/kho-lyapunov.toml"),
];

/// The checked-in experiment specs under `specs/`.
pub fn builtin_specs() -> Vec<ExperimentSpec> {
    SOURCES
        .iter()
        .map(|s| ExperimentSpec::from_toml(s).expect("checked-in spec parses"))
        .collect()
}

pub fn builtin_spec(name: &str) -> Option<ExperimentSpec> {
    builtin_specs().into_iter().find(|s| s.name == name)
}
