use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical parameters of one module. Field names follow the on-disk JSON keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModuleParams {
    /// Module mass (kg).
    pub m: f64,
    /// Thrust coefficient (N s^2).
    pub c_f: f64,
    /// Drag-torque coefficient (N m s^2).
    pub c_m: f64,
    /// Rotor arm length (m).
    pub l_arm: f64,
    /// Distance from module COM to a connector (m).
    pub l_c: f64,
    /// Downwash capsule radius (m).
    pub r: f64,
    /// Maximum squared rotor speed ((rad/s)^2). Defaults to `2 · 2mg / 4c_f`.
    #[serde(default)]
    pub u_max: Option<f64>,
    #[serde(default = "default_gravity")]
    pub g: f64,
}

fn default_gravity() -> f64 {
    9.81
}

impl Default for ModuleParams {
    fn default() -> Self {
        ModuleParams { m: 0.24, c_f: 3.87e-7, c_m: 1.06e-8, l_arm: 0.06, l_c: 0.11, r: 0.095, u_max: None, g: 9.81 }
    }
}

impl ModuleParams {
    /// Squared-speed limit per rotor.
    pub fn u_max(&self) -> f64 {
        self.u_max.unwrap_or(2.0 * (2.0 * self.m * self.g) / (4.0 * self.c_f))
    }

    /// Per-rotor input that hovers a single level module.
    pub fn hover_input(&self) -> f64 {
        self.m * self.g / (4.0 * self.c_f)
    }

    /// Weight of `n` modules (N).
    pub fn weight(&self, n: usize) -> f64 {
        n as f64 * self.m * self.g
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("m", self.m),
            ("c_f", self.c_f),
            ("c_m", self.c_m),
            ("l_arm", self.l_arm),
            ("l_c", self.l_c),
            ("r", self.r),
            ("u_max", self.u_max()),
            ("g", self.g),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}
