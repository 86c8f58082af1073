//! Shared workloads for the benchmarks.

use bipk::dsl::{self, SourceModel};
use bipk::fixtures::random_system;
use bipk::genom::{build_dala_mini, Variant};
use bipk::{flatten, ComponentRef, SystemModel};

pub fn scenario_root(v: Variant) -> ComponentRef {
    build_dala_mini(v).into()
}

pub fn scenario(v: Variant) -> SystemModel {
    flatten(&scenario_root(v)).expect("scenario flattens")
}

/// Source text of a scenario, as `gen` would print it.
pub fn scenario_text(v: Variant) -> String {
    dsl::print(&SourceModel::from_root(&scenario_root(v)).expect("printable"))
}

/// The first `n` seeded random systems, flattened.
pub fn random_models(n: u64) -> Vec<SystemModel> {
    (0..n)
        .map(|seed| flatten(&random_system(seed).into()).expect("random system flattens"))
        .collect()
}
