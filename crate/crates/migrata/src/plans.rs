//! Plan ids accepted on the command line and in registry files.

use migrata_core::gmf::{
    graph_plan, map_step_plan, PlanConstructionError, GRAPH_PLAN_ID, MAP_CHAIN_ID,
};
use migrata_core::{Metamodel, MigrationPlan};

/// Conservative copy with no rules; source and target may differ.
pub const IDENTITY_ID: &str = "identity";

pub const PLAN_IDS: [&str; 3] = [GRAPH_PLAN_ID, MAP_CHAIN_ID, IDENTITY_ID];

/// Builds the plan `id` for one step from `source` to `target`.
pub fn build_plan(
    id: &str,
    source: &Metamodel,
    target: &Metamodel,
) -> Result<MigrationPlan, PlanConstructionError> {
    match id {
        GRAPH_PLAN_ID => graph_plan(source, target),
        MAP_CHAIN_ID => Ok(map_step_plan(source, target)),
        IDENTITY_ID => Ok(MigrationPlan::new(
            source.ns_uri.clone(),
            target.ns_uri.clone(),
        )),
        other => Err(PlanConstructionError(format!(
            "unknown plan `{other}` (known: {})",
            PLAN_IDS.join(", ")
        ))),
    }
}
