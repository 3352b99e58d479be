use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{extract_graph, AssemblyGraph};
use crate::lattice::{canonical_form, LatticeConfig};
use crate::params::ModuleParams;

use super::solver::{solve_single, OptimizationResult, SolverOptions};
use super::task::{augment_wrench_set, TaskSpec, WrenchTask};

/// One row of the per-configuration table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub n: usize,
    /// Index of the configuration within its size class.
    pub config_id: usize,
    /// Hex of the canonical key.
    pub key: String,
    pub result: OptimizationResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    /// `None` when no size up to the largest given one is feasible.
    pub chosen_n: Option<usize>,
    pub chosen_id: Option<usize>,
    pub graph: Option<AssemblyGraph>,
    pub config: Option<LatticeConfig>,
    pub best: Option<OptimizationResult>,
    pub table: Vec<CandidateResult>,
}

impl SelectionOutcome {
    pub fn best_cost(&self) -> Option<f64> {
        self.best.as_ref().map(|r| r.cost)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Walks sizes in ascending order and stops at the first size with a feasible
/// configuration, returning its cheapest one. `task` is the un-augmented task;
/// gravity compensation and the hover wrench are added per size.
/// `config_sets[i]` holds the configurations of one size.
pub fn select_across(
    config_sets: &[Vec<LatticeConfig>],
    task: &WrenchTask,
    params: &ModuleParams,
    opts: &SolverOptions,
) -> Result<SelectionOutcome> {
    task.validate()?;
    select_by(config_sets, |n| Ok(augment_wrench_set(task, n, params)), params, opts)
}

/// [`select_across`] driven by an on-disk task, which decides whether gravity
/// compensation is applied.
pub fn select_with_spec(
    config_sets: &[Vec<LatticeConfig>],
    spec: &TaskSpec,
    params: &ModuleParams,
    opts: &SolverOptions,
) -> Result<SelectionOutcome> {
    spec.base_task()?.validate()?;
    select_by(config_sets, |n| spec.task_for(n, params), params, opts)
}

fn select_by(
    config_sets: &[Vec<LatticeConfig>],
    task_for: impl Fn(usize) -> Result<WrenchTask>,
    params: &ModuleParams,
    opts: &SolverOptions,
) -> Result<SelectionOutcome> {
    let mut sets: Vec<&Vec<LatticeConfig>> = config_sets.iter().filter(|s| !s.is_empty()).collect();
    sets.sort_by_key(|s| s[0].n());
    let mut table = Vec::new();
    for set in sets {
        let n = set[0].n();
        if set.iter().any(|c| c.n() != n) {
            return Err(Error::InvalidParameter(format!("configuration set mixes sizes (expected n = {n})")));
        }
        let augmented = task_for(n)?;
        let rows: Vec<(Vec<u8>, LatticeConfig, AssemblyGraph, OptimizationResult)> = set
            .par_iter()
            .map(|cfg| -> Result<_> {
                let (key, canon) = canonical_form(cfg);
                let graph = extract_graph(&canon)?;
                let r = solve_single(&graph, &augmented, params, opts)?;
                Ok((key.0, canon, graph, r))
            })
            .collect::<Result<_>>()?;
        let mut best: Option<usize> = None;
        for (i, row) in rows.iter().enumerate() {
            if !row.3.feasible {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(b) => {
                    let (cb, ci) = (rows[b].3.cost, row.3.cost);
                    let tie = (ci - cb).abs() <= 1e-9 * cb.abs().max(ci.abs()).max(1e-300);
                    if (tie && row.0 < rows[b].0) || (!tie && ci < cb) {
                        Some(i)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        for (i, row) in rows.iter().enumerate() {
            table.push(CandidateResult { n, config_id: i, key: hex(&row.0), result: row.3.clone() });
        }
        if let Some(b) = best {
            let (_, cfg, graph, r) = rows.into_iter().nth(b).expect("index in range");
            return Ok(SelectionOutcome {
                chosen_n: Some(n),
                chosen_id: Some(b),
                graph: Some(graph),
                config: Some(cfg),
                best: Some(r),
                table,
            });
        }
    }
    Ok(SelectionOutcome { chosen_n: None, chosen_id: None, graph: None, config: None, best: None, table })
}
