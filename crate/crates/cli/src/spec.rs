//! On-disk simulation spec: kinetic parameters, initial state,
//! integration settings, and where to take snapshots.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use bbin_core::{GeneId, HillParams, IntegrationConfig, SnapshotPolicy};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub params: HillParams,
    pub x0: BTreeMap<GeneId, f64>,
    #[serde(default)]
    pub integration: IntegrationConfig,
    pub snapshots: SnapshotPolicy,
}
