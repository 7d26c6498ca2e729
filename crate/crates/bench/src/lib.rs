//! Shared fixtures for the criterion benches.

use wpcc_core::config::dbm_to_watts;
use wpcc_core::{Scenario, SystemParams};

/// Reference scenario at the given receiver power.
pub fn scenario_at(p_r_dbm: f64) -> Scenario {
    Scenario::new(SystemParams::reference().with_p_r(dbm_to_watts(p_r_dbm))).expect("reference parameters are valid")
}
