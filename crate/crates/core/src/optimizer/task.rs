use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModuleParams;

/// A wrench is `[fx, fy, fz, τx, τy, τz]` in the assembly body frame.
pub type Wrench = [f64; 6];

/// Target wrenches with non-negative importance weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WrenchTask {
    pub wrenches: Vec<Wrench>,
    pub weights: Vec<f64>,
}

impl WrenchTask {
    pub fn new(wrenches: Vec<Wrench>, weights: Vec<f64>) -> Result<Self> {
        let t = WrenchTask { wrenches, weights };
        t.validate()?;
        Ok(t)
    }

    /// Every weight set to one.
    pub fn uniform(wrenches: Vec<Wrench>) -> Result<Self> {
        let k = wrenches.len();
        Self::new(wrenches, vec![1.0; k])
    }

    /// Pure forces with zero torque, unit weights.
    pub fn from_forces(forces: &[[f64; 3]]) -> Result<Self> {
        Self::uniform(forces.iter().map(|f| [f[0], f[1], f[2], 0.0, 0.0, 0.0]).collect())
    }

    pub fn len(&self) -> usize {
        self.wrenches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wrenches.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.wrenches.is_empty() {
            return Err(Error::InvalidParameter("task needs at least one wrench".into()));
        }
        if self.weights.len() != self.wrenches.len() {
            return Err(Error::DimensionMismatch(format!("{} weights for {} wrenches", self.weights.len(), self.wrenches.len())));
        }
        if self.wrenches.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite wrench entry".into()));
        }
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter("weights must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// Same wrenches with every weight multiplied by `c`.
    pub fn scaled_weights(&self, c: f64) -> Self {
        WrenchTask { wrenches: self.wrenches.clone(), weights: self.weights.iter().map(|w| w * c).collect() }
    }
}

/// Adds `n m g` to every `fz` and appends the pure hover wrench with weight one.
pub fn augment_wrench_set(task: &WrenchTask, n: usize, params: &ModuleParams) -> WrenchTask {
    let w = params.weight(n);
    let mut wrenches: Vec<Wrench> = task
        .wrenches
        .iter()
        .map(|b| {
            let mut b = *b;
            b[2] += w;
            b
        })
        .collect();
    wrenches.push([0.0, 0.0, w, 0.0, 0.0, 0.0]);
    let mut weights = task.weights.clone();
    weights.push(1.0);
    WrenchTask { wrenches, weights }
}

/// On-disk task description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub wrenches: Vec<Wrench>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default = "yes")]
    pub augment_gravity: bool,
}

fn yes() -> bool {
    true
}

impl TaskSpec {
    pub fn base_task(&self) -> Result<WrenchTask> {
        let k = self.wrenches.len();
        WrenchTask::new(self.wrenches.clone(), self.weights.clone().unwrap_or_else(|| vec![1.0; k]))
    }

    /// The task actually solved for an `n`-module assembly.
    pub fn task_for(&self, n: usize, params: &ModuleParams) -> Result<WrenchTask> {
        let base = self.base_task()?;
        Ok(if self.augment_gravity { augment_wrench_set(&base, n, params) } else { base })
    }
}
