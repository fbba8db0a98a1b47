use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::envy::{is_ef_c, is_sd_ef_c};
use crate::instance::{matching_status, Instance, Matching, Side};
use crate::io::matching_to_json;

pub const DEFAULT_NODE_BUDGET: u64 = 1_000_000_000;
pub const DEFAULT_TIME_BUDGET_SECS: f64 = 3600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvyConstraint {
    pub side: Side,
    pub c: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtilityFloor {
    pub side: Side,
    pub agent: usize,
    pub min: u64,
}

/// A conjunction of constraints on a matching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    pub require_complete: bool,
    #[serde(default)]
    pub sd_ef_constraints: Vec<EnvyConstraint>,
    /// Cardinal envy-freeness up to `c` matches.
    #[serde(default)]
    pub ef_constraints: Vec<EnvyConstraint>,
    #[serde(default)]
    pub utility_floor: Vec<UtilityFloor>,
    pub node_budget: u64,
    pub time_budget: f64,
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec {
            require_complete: true,
            sd_ef_constraints: Vec::new(),
            ef_constraints: Vec::new(),
            utility_floor: Vec::new(),
            node_budget: DEFAULT_NODE_BUDGET,
            time_budget: DEFAULT_TIME_BUDGET_SECS,
        }
    }
}

impl SearchSpec {
    pub fn complete() -> Self {
        SearchSpec::default()
    }

    pub fn with_sd_ef(mut self, side: Side, c: usize) -> Self {
        self.sd_ef_constraints.push(EnvyConstraint { side, c });
        self
    }

    pub fn with_ef(mut self, side: Side, c: usize) -> Self {
        self.ef_constraints.push(EnvyConstraint { side, c });
        self
    }

    pub fn with_floor(mut self, side: Side, agent: usize, min: u64) -> Self {
        self.utility_floor.push(UtilityFloor { side, agent, min });
        self
    }

    /// The same floor for every agent of `side`.
    pub fn with_side_floor(mut self, instance: &Instance, side: Side, min: u64) -> Self {
        for agent in 0..instance.size(side) {
            self.utility_floor.push(UtilityFloor { side, agent, min });
        }
        self
    }

    pub fn with_budget(mut self, nodes: u64, secs: f64) -> Self {
        self.node_budget = nodes;
        self.time_budget = secs;
        self
    }

    pub fn validate(&self, instance: &Instance) -> Result<()> {
        if self.node_budget == 0 || self.time_budget.is_nan() || self.time_budget <= 0.0 {
            return Err(Error::BadParameter("budgets must be positive".into()));
        }
        for f in &self.utility_floor {
            if f.agent >= instance.size(f.side) {
                return Err(Error::BadParameter(format!("floor for missing {} agent {}", f.side, f.agent)));
            }
        }
        Ok(())
    }

    /// Highest floor imposed on each agent of `side` (0 when none).
    pub fn floors(&self, instance: &Instance, side: Side) -> Vec<u64> {
        let mut out = vec![0; instance.size(side)];
        for f in self.utility_floor.iter().filter(|f| f.side == side) {
            out[f.agent] = out[f.agent].max(f.min);
        }
        out
    }

    /// Checks `m` against every constraint with the fairness checkers.
    pub fn is_satisfied_by(&self, instance: &Instance, m: &Matching) -> bool {
        let Ok(status) = matching_status(instance, m) else {
            return false;
        };
        status.valid
            && (!self.require_complete || status.complete)
            && self.sd_ef_constraints.iter().all(|k| is_sd_ef_c(instance, m, k.side, k.c))
            && self.ef_constraints.iter().all(|k| is_ef_c(instance, m, k.side, k.c))
            && self
                .utility_floor
                .iter()
                .all(|f| instance.utility(f.side, f.agent, m) >= f.min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchStatus {
    Found,
    ExhaustedInfeasible,
    BudgetExceeded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    pub status: SearchStatus,
    pub witness: Option<Matching>,
    pub nodes_explored: u64,
}

impl SearchOutcome {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "status": self.status,
            "witness": self.witness.as_ref().map(matching_to_json),
            "nodes_explored": self.nodes_explored,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    /// Bound propagation, forward checking and symmetry breaking. When off,
    /// the search only respects caps and checks constraints at the leaves.
    pub propagate: bool,
    /// Worker threads splitting the first branching level; 1 is sequential.
    pub workers: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            propagate: true,
            workers: 1,
        }
    }
}
