//! Manifest-driven runs of enumerate → select → polytope → simulate.

use std::path::{Path, PathBuf};

use modasm_core::optimizer::TaskSpec;
use modasm_core::{simulate, AllocationMode, ControllerGains, LatticeConfig, SimOptions, SolverOptions, TrajectoryKind, TrajectorySpec};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::commands::{enumerate_configs, params_bytes, polytope_csv, run_selection, selection_summary};
use crate::error::{CliError, CliResult};
use crate::io::{self, Provenance};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineManifest {
    pub schema_version: u32,
    /// Artifact directory, relative to the manifest.
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub params: Option<PathBuf>,
    #[serde(default)]
    pub task: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub enumerate: Option<EnumerateStage>,
    #[serde(default)]
    pub select: Option<SelectStage>,
    #[serde(default)]
    pub polytope: Option<PolytopeStage>,
    #[serde(default)]
    pub simulate: Option<SimulateStage>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnumerateStage {
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub sample: Option<usize>,
    #[serde(default)]
    pub sigma: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectStage {
    #[serde(default = "four")]
    pub restarts: usize,
}

fn four() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolytopeStage {
    #[serde(default = "three")]
    pub level: usize,
    #[serde(default)]
    pub gravity_compensated: bool,
}

fn three() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateStage {
    #[serde(default = "circle")]
    pub trajectory: TrajectorySpec,
    #[serde(default = "ten")]
    pub duration: f64,
    #[serde(default = "millisecond")]
    pub dt: f64,
    #[serde(default)]
    pub gains: Option<PathBuf>,
    #[serde(default)]
    pub allocation: AllocationMode,
    #[serde(default = "ten_steps")]
    pub stride: usize,
}

fn circle() -> TrajectorySpec {
    TrajectorySpec::new(TrajectoryKind::Circle)
}

fn ten() -> f64 {
    10.0
}

fn millisecond() -> f64 {
    1e-3
}

fn ten_steps() -> usize {
    10
}

impl PipelineManifest {
    pub fn validate(&self) -> CliResult<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Invalid(format!(
                "manifest schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if let Some(e) = &self.enumerate {
            if e.sizes.is_empty() || e.sizes.contains(&0) {
                return Err(CliError::Invalid("enumerate.sizes must list sizes >= 1".into()));
            }
        }
        if self.select.is_some() {
            if self.enumerate.is_none() {
                return Err(CliError::Invalid("select needs an enumerate stage".into()));
            }
            if self.task.is_none() {
                return Err(CliError::Invalid("select needs a task file".into()));
            }
        }
        if (self.polytope.is_some() || self.simulate.is_some()) && self.select.is_none() {
            return Err(CliError::Invalid("polytope and simulate need a select stage".into()));
        }
        Ok(())
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

struct Runner {
    force: bool,
    report: Vec<Value>,
}

impl Runner {
    /// Runs `produce` unless `artifact` already matches `prov`.
    fn stage(&mut self, name: &str, artifact: &Path, prov: Provenance, produce: impl FnOnce() -> CliResult<Vec<u8>>) -> CliResult<()> {
        if !self.force && io::is_current(artifact, &prov) {
            self.report.push(json!({ "stage": name, "status": "skipped", "artifact": artifact }));
            return Ok(());
        }
        let wrap = |e: CliError| CliError::Stage { stage: name.into(), source: Box::new(e) };
        let bytes = produce().map_err(wrap)?;
        io::write_artifact(artifact, &bytes, prov).map_err(wrap)?;
        self.report.push(json!({ "stage": name, "status": "ran", "artifact": artifact }));
        Ok(())
    }
}

pub fn run_pipeline(manifest_path: &Path, force: bool) -> CliResult<Value> {
    let manifest: PipelineManifest = io::read_json(manifest_path)?;
    manifest.validate()?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let out = resolve(base, &manifest.out_dir);
    let params_path = manifest.params.as_ref().map(|p| resolve(base, p));
    let params = io::load_params(params_path.as_deref())?;
    let pbytes = params_bytes(&params);
    let seed = manifest.seed;
    let mut run = Runner { force, report: Vec::new() };

    let configs_dir = out.join("configs");
    let mut config_files = Vec::new();
    if let Some(e) = &manifest.enumerate {
        for &n in &e.sizes {
            let path = configs_dir.join(format!("n{n}.jsonl"));
            let prov = Provenance::new("enumerate", Some(seed), json!({ "n": n, "sample": e.sample, "sigma": e.sigma }));
            run.stage("enumerate", &path, prov, || Ok(io::to_jsonl(&enumerate_configs(n, e.sample, e.sigma, seed)?).into_bytes()))?;
            config_files.push(path);
        }
    }

    let outcome_path = out.join("outcome.json");
    let mut summary = Value::Null;
    if let Some(s) = &manifest.select {
        let task_path = resolve(base, manifest.task.as_ref().expect("validated"));
        let mut prov = Provenance::new("select", Some(seed), json!({ "restarts": s.restarts, "keep_timing": false }))
            .input("task", &task_path)?
            .input_bytes("params", &pbytes);
        for f in &config_files {
            prov = prov.input(&f.file_name().unwrap().to_string_lossy(), f)?;
        }
        run.stage("select", &outcome_path, prov, || {
            let task: TaskSpec = io::read_json(&task_path)?;
            let sets = config_files.iter().map(|f| io::read_configs(f)).collect::<CliResult<Vec<Vec<LatticeConfig>>>>()?;
            let opts = SolverOptions { restarts: s.restarts, seed, ..Default::default() };
            let outcome = run_selection(&sets, &task, &params, &opts, false)?;
            Ok(io::to_json_string(&outcome).into_bytes())
        })?;
        let outcome: modasm_core::SelectionOutcome = io::read_json(&outcome_path)?;
        let results_path = out.join("results.jsonl");
        let prov = Provenance::new("optimize", Some(seed), json!({ "from": "selection table" })).input("outcome", &outcome_path)?;
        run.stage("optimize", &results_path, prov, || Ok(io::to_jsonl(&outcome.table).into_bytes()))?;
        summary = selection_summary(&outcome);
        if outcome.chosen_n.is_none() && (manifest.polytope.is_some() || manifest.simulate.is_some()) {
            return Err(CliError::Stage {
                stage: "select".into(),
                source: Box::new(CliError::Invalid("no feasible configuration; later stages cannot run".into())),
            });
        }
    }

    if let Some(p) = &manifest.polytope {
        let path = out.join("polytope.csv");
        let prov = Provenance::new("polytope", None, json!({ "level": p.level, "gravity_compensated": p.gravity_compensated }))
            .input("config", &outcome_path)?
            .input_bytes("params", &pbytes);
        run.stage("polytope", &path, prov, || Ok(polytope_csv(&outcome_path, &params, p.level, p.gravity_compensated)?.0.into_bytes()))?;
    }

    if let Some(s) = &manifest.simulate {
        let path = out.join("log.csv");
        let gains_path = s.gains.as_ref().map(|g| resolve(base, g));
        let settings =
            json!({ "trajectory": s.trajectory, "dt": s.dt, "duration": s.duration, "allocation": s.allocation, "stride": s.stride });
        let mut prov = Provenance::new("simulate", None, settings).input("config", &outcome_path)?.input_bytes("params", &pbytes);
        if let Some(g) = &gains_path {
            prov = prov.input("gains", g)?;
        }
        run.stage("simulate", &path, prov, || {
            s.trajectory.validate()?;
            let gains: Option<ControllerGains> = gains_path.as_deref().map(io::read_json).transpose()?;
            let (graph, alpha) = io::load_assembly(&outcome_path)?;
            let opts = SimOptions { duration: s.duration, dt: s.dt, gains, extent: None, allocation: s.allocation };
            Ok(simulate(&graph, &alpha, &params, &s.trajectory, &opts)?.to_csv(s.stride).into_bytes())
        })?;
    }

    Ok(json!({ "command": "pipeline", "stages": run.report, "selection": summary }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(v: Value) -> PipelineManifest {
        serde_json::from_value(v).unwrap()
    }

    #[test]
    fn defaults_fill_in() {
        let m = manifest(json!({ "schema_version": 1, "simulate": {}, "select": {}, "enumerate": { "sizes": [2] }, "task": "t.json" }));
        assert_eq!(m.out_dir, PathBuf::from("out"));
        assert_eq!(m.select.as_ref().unwrap().restarts, 4);
        let s = m.simulate.as_ref().unwrap();
        assert_eq!((s.duration, s.dt, s.stride), (10.0, 1e-3, 10));
        assert_eq!(s.trajectory.kind, TrajectoryKind::Circle);
        m.validate().unwrap();
    }

    #[test]
    fn stage_dependencies_are_enforced() {
        let no_enum = manifest(json!({ "schema_version": 1, "task": "t.json", "select": {} }));
        assert!(no_enum.validate().is_err());
        let no_task = manifest(json!({ "schema_version": 1, "enumerate": { "sizes": [1] }, "select": {} }));
        assert!(no_task.validate().is_err());
        let no_select = manifest(json!({ "schema_version": 1, "enumerate": { "sizes": [1] }, "polytope": {} }));
        assert!(no_select.validate().is_err());
        let zero = manifest(json!({ "schema_version": 1, "enumerate": { "sizes": [0] } }));
        assert!(zero.validate().is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_value::<PipelineManifest>(json!({ "schema_version": 1, "stages": [] })).is_err());
    }

    #[test]
    fn relative_paths_resolve_against_manifest_dir() {
        assert_eq!(resolve(Path::new("/a/b"), Path::new("c.json")), PathBuf::from("/a/b/c.json"));
        assert_eq!(resolve(Path::new("/a/b"), Path::new("/c.json")), PathBuf::from("/c.json"));
    }
}
