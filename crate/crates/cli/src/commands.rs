//! One function per subcommand. Each writes its artifact with a provenance
//! sidecar and returns a short JSON summary.

use modasm_core::lattice::{canonicalize, EnumerationLimits};
use modasm_core::optimizer::{CandidateResult, OptimizationResult, TaskSpec};
use modasm_core::polytope::icosphere;
use modasm_core::{
    actuation_matrix, enumerate_exhaustive, extract_graph, propagate_poses, sample_enumerate, select_with_spec, simulate, solve_single,
    ControllerGains, ForcePolytope, LatticeConfig, ModuleParams, SamplingParams, SelectionOutcome, SimOptions, SolverOptions,
    TrajectoryKind, TrajectorySpec,
};
use nalgebra::Vector3;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::args::{EnumerateArgs, OptimizeArgs, PolytopeArgs, SelectArgs, SimulateArgs, SolveArgs};
use crate::error::{CliError, CliResult};
use crate::io::{self, Provenance};

pub fn params_bytes(p: &ModuleParams) -> Vec<u8> {
    io::to_json_string(p).into_bytes()
}

pub fn enumerate_configs(n: usize, sample: Option<usize>, sigma: Option<f64>, seed: u64) -> CliResult<Vec<LatticeConfig>> {
    if n == 0 {
        return Err(CliError::Invalid("n must be at least 1".into()));
    }
    Ok(match sample {
        None => enumerate_exhaustive(n, EnumerationLimits::default())?,
        Some(k) => sample_enumerate(n, &SamplingParams::new(k, sigma, seed)?)?.pop().expect("n >= 1 levels"),
    })
}

pub fn enumerate(a: &EnumerateArgs) -> CliResult<Value> {
    let configs = enumerate_configs(a.n, a.sample, a.sigma, a.seed)?;
    let prov = Provenance::new("enumerate", Some(a.seed), json!({ "n": a.n, "sample": a.sample, "sigma": a.sigma }));
    io::write_artifact(&a.output, io::to_jsonl(&configs).as_bytes(), prov)?;
    Ok(json!({ "command": "enumerate", "n": a.n, "count": configs.len(), "output": a.output }))
}

fn solver_options(s: &SolveArgs) -> SolverOptions {
    SolverOptions { restarts: s.restarts, seed: s.seed, ..Default::default() }
}

fn solve_settings(s: &SolveArgs) -> Value {
    json!({ "restarts": s.restarts, "keep_timing": s.keep_timing })
}

pub fn strip_timing(r: &mut OptimizationResult) {
    r.solve_time_s = 0.0;
}

fn load_task(s: &SolveArgs) -> CliResult<(TaskSpec, ModuleParams)> {
    let task: TaskSpec = io::read_json(&s.task)?;
    task.base_task()?.validate()?;
    Ok((task, io::load_params(s.params.as_deref())?))
}

pub fn optimize(a: &OptimizeArgs) -> CliResult<Value> {
    let (task, params) = load_task(&a.solve)?;
    let configs = io::read_configs(&a.configs)?;
    let opts = solver_options(&a.solve);
    let rows = configs
        .par_iter()
        .enumerate()
        .map(|(i, c)| -> CliResult<CandidateResult> {
            let graph = extract_graph(c)?;
            let mut result = solve_single(&graph, &task.task_for(c.n(), &params)?, &params, &opts)?;
            if !a.solve.keep_timing {
                strip_timing(&mut result);
            }
            let key = canonicalize(c).as_bytes().iter().map(|b| format!("{b:02x}")).collect();
            Ok(CandidateResult { n: c.n(), config_id: i, key, result })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let prov = Provenance::new("optimize", Some(a.solve.seed), solve_settings(&a.solve))
        .input("configs", &a.configs)?
        .input("task", &a.solve.task)?
        .input_bytes("params", &params_bytes(&params));
    io::write_artifact(&a.output, io::to_jsonl(&rows).as_bytes(), prov)?;
    let feasible = rows.iter().filter(|r| r.result.feasible).count();
    Ok(json!({ "command": "optimize", "configs": rows.len(), "feasible": feasible, "output": a.output }))
}

pub fn run_selection(
    sets: &[Vec<LatticeConfig>],
    task: &TaskSpec,
    params: &ModuleParams,
    opts: &SolverOptions,
    keep_timing: bool,
) -> CliResult<SelectionOutcome> {
    let mut outcome = select_with_spec(sets, task, params, opts)?;
    if !keep_timing {
        outcome.table.iter_mut().for_each(|row| strip_timing(&mut row.result));
        if let Some(b) = outcome.best.as_mut() {
            strip_timing(b);
        }
    }
    Ok(outcome)
}

pub fn selection_summary(outcome: &SelectionOutcome) -> Value {
    json!({
        "chosen_n": outcome.chosen_n,
        "chosen_id": outcome.chosen_id,
        "cost": outcome.best_cost(),
        "candidates": outcome.table.len(),
    })
}

pub fn select(a: &SelectArgs) -> CliResult<Value> {
    let (task, params) = load_task(&a.solve)?;
    let sets = io::read_config_dir(&a.configs_dir)?;
    let outcome = run_selection(&sets, &task, &params, &solver_options(&a.solve), a.solve.keep_timing)?;
    let mut prov = Provenance::new("select", Some(a.solve.seed), solve_settings(&a.solve))
        .input("task", &a.solve.task)?
        .input_bytes("params", &params_bytes(&params));
    for set in &sets {
        prov = prov.input_bytes(&format!("configs_n{}", set[0].n()), io::to_jsonl(set).as_bytes());
    }
    io::write_artifact(&a.output, io::to_json_string(&outcome).as_bytes(), prov)?;
    let mut summary = selection_summary(&outcome);
    summary["command"] = json!("select");
    summary["output"] = json!(a.output);
    Ok(summary)
}

pub fn polytope_csv(
    config: &std::path::Path,
    params: &ModuleParams,
    level: usize,
    gravity_compensated: bool,
) -> CliResult<(String, usize)> {
    if level > 6 {
        return Err(CliError::Invalid(format!("icosphere level {level} is too fine (max 6)")));
    }
    let (graph, alpha) = io::load_assembly(config)?;
    let pose = propagate_poses(&graph, &alpha, params)?;
    let a = actuation_matrix(&pose, params);
    let offset = if gravity_compensated { Vector3::new(0.0, 0.0, params.weight(graph.n)) } else { Vector3::zeros() };
    let dirs = icosphere(level);
    let poly = ForcePolytope::sample(&a, params.u_max(), &dirs, offset)?;
    Ok((poly.to_csv(), dirs.len()))
}

pub fn polytope(a: &PolytopeArgs) -> CliResult<Value> {
    let params = io::load_params(a.params.as_deref())?;
    let (csv, count) = polytope_csv(&a.config, &params, a.level, a.gravity_compensated)?;
    let prov = Provenance::new("polytope", None, json!({ "level": a.level, "gravity_compensated": a.gravity_compensated }))
        .input("config", &a.config)?
        .input_bytes("params", &params_bytes(&params));
    io::write_artifact(&a.output, csv.as_bytes(), prov)?;
    Ok(json!({ "command": "polytope", "directions": count, "output": a.output }))
}

pub fn trajectory(path: Option<&std::path::Path>, kind: Option<TrajectoryKind>) -> CliResult<TrajectorySpec> {
    let mut t = match path {
        Some(p) => io::read_json(p)?,
        None => TrajectorySpec::new(TrajectoryKind::Circle),
    };
    if let Some(k) = kind {
        t.kind = k;
    }
    t.validate()?;
    Ok(t)
}

pub fn simulate_cmd(a: &SimulateArgs) -> CliResult<Value> {
    let params = io::load_params(a.params.as_deref())?;
    let traj = trajectory(a.traj.as_deref(), a.kind.map(Into::into))?;
    let gains: Option<ControllerGains> = a.gains.as_deref().map(io::read_json).transpose()?;
    let (graph, alpha) = io::load_assembly(&a.config)?;
    let opts = SimOptions { duration: a.duration, dt: a.dt, gains, extent: None, allocation: a.allocation.into() };
    let log = simulate(&graph, &alpha, &params, &traj, &opts)?;
    let mut prov = Provenance::new(
        "simulate",
        None,
        json!({ "trajectory": traj, "dt": a.dt, "duration": a.duration, "allocation": opts.allocation, "stride": a.stride }),
    )
    .input("config", &a.config)?
    .input_bytes("params", &params_bytes(&params));
    if let Some(g) = &a.gains {
        prov = prov.input("gains", g)?;
    }
    io::write_artifact(&a.output, log.to_csv(a.stride).as_bytes(), prov)?;
    Ok(json!({ "command": "simulate", "summary": log.summary, "output": a.output }))
}
