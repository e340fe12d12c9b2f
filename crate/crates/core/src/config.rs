//! Run configuration: a TOML document with `plant`, `controller`, `analysis`
//! and `sim` sections plus top-level run settings. Every key has a default.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, RowDVector, RowVector2};
use serde::{Deserialize, Serialize};

use crate::analysis::DecayOptions;
use crate::error::{Error, Result};
use crate::model::{ControllerParams, PlantParams};
use crate::sdp::SolverOptions;
use crate::sim::{InitialCondition, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Feedforward,
    Dynamic,
    Custom,
}

impl ControllerKind {
    pub fn label(self) -> &'static str {
        match self {
            ControllerKind::Feedforward => "feedforward",
            ControllerKind::Dynamic => "dynamic",
            ControllerKind::Custom => "custom",
        }
    }
}

/// Matrices are row-major number lists; only read for `type = "custom"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerSection {
    #[serde(rename = "type")]
    pub kind: ControllerKind,
    pub n: usize,
    #[serde(rename = "Ac")]
    pub ac: Vec<f64>,
    #[serde(rename = "Bc1")]
    pub bc1: Vec<f64>,
    #[serde(rename = "Bc2")]
    pub bc2: Vec<f64>,
    #[serde(rename = "C1")]
    pub c1: Vec<f64>,
    #[serde(rename = "C2")]
    pub c2: Vec<f64>,
    #[serde(rename = "K")]
    pub k: Vec<f64>,
}

impl Default for ControllerSection {
    fn default() -> Self {
        Self::from_params(ControllerKind::Dynamic, &ControllerParams::reference_dynamic())
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

impl ControllerSection {
    pub fn from_params(kind: ControllerKind, p: &ControllerParams) -> Self {
        Self {
            kind,
            n: p.order(),
            ac: row_major(&p.ac),
            bc1: row_major(&p.bc1),
            bc2: row_major(&p.bc2),
            c1: p.c1.iter().copied().collect(),
            c2: p.c2.iter().copied().collect(),
            k: p.k.iter().copied().collect(),
        }
    }

    pub fn params(&self) -> Result<ControllerParams> {
        self.params_for(self.kind)
    }

    pub fn params_for(&self, kind: ControllerKind) -> Result<ControllerParams> {
        match kind {
            ControllerKind::Feedforward => Ok(ControllerParams::feedforward()),
            ControllerKind::Dynamic => Ok(ControllerParams::reference_dynamic()),
            ControllerKind::Custom => self.custom(),
        }
    }

    fn custom(&self) -> Result<ControllerParams> {
        let n = self.n;
        let take = |name: &str, v: &[f64], len: usize| {
            if v.len() == len {
                Ok(v.to_vec())
            } else {
                Err(Error::Config(format!(
                    "controller.{name} needs {len} entries for n = {n}, got {}",
                    v.len()
                )))
            }
        };
        let ac = take("Ac", &self.ac, n * n)?;
        let bc1 = take("Bc1", &self.bc1, n * 2)?;
        let bc2 = take("Bc2", &self.bc2, n * 2)?;
        let c1 = take("C1", &self.c1, n + 2)?;
        let c2 = take("C2", &self.c2, n)?;
        let k = take("K", &self.k, 2)?;
        ControllerParams::new(
            DMatrix::from_row_slice(n, n, &ac),
            DMatrix::from_row_slice(n, 2, &bc1),
            DMatrix::from_row_slice(n, 2, &bc2),
            RowDVector::from_row_slice(&c1),
            RowDVector::from_row_slice(&c2),
            RowVector2::new(k[0], k[1]),
        )
        .map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub tol: f64,
    /// Bisection cap when the boundary bound is infinite; absent means automatic.
    pub cap: Option<f64>,
    pub margin_tol: f64,
    pub max_order: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            cap: None,
            margin_tol: SolverOptions::default().margin_tol,
            max_order: 3,
        }
    }
}

impl AnalysisSection {
    pub fn decay_options(&self) -> DecayOptions {
        DecayOptions {
            tol: self.tol,
            cap: self.cap,
            solver: SolverOptions {
                margin_tol: self.margin_tol,
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IcKind {
    #[serde(alias = "paper4")]
    Reference,
    Equilibrium,
    Perturbed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    #[serde(rename = "M")]
    pub intervals: usize,
    /// Courant number `c dt M`.
    pub dt_factor: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub stride: usize,
    pub ic: IcKind,
    /// Amplitude of the perturbed start.
    pub amplitude: f64,
    /// Decay-fit window as fractions of `T`.
    pub window: [f64; 2],
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            intervals: 200,
            dt_factor: 0.9,
            t_end: 25.0,
            stride: 10,
            ic: IcKind::Reference,
            amplitude: 0.5,
            window: [0.2, 0.9],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub plant: PlantParams,
    pub controller: ControllerSection,
    pub analysis: AnalysisSection,
    pub sim: SimSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("pipestab-out"),
            plant: PlantParams::default(),
            controller: ControllerSection::default(),
            analysis: AnalysisSection::default(),
            sim: SimSection::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.controller.kind == ControllerKind::Custom {
            self.controller.params()?;
        }
        if !(self.analysis.tol > 0.0) {
            return Err(Error::Config("analysis.tol must be positive".into()));
        }
        if !(self.analysis.margin_tol > 0.0) {
            return Err(Error::Config("analysis.margin_tol must be positive".into()));
        }
        let [a, b] = self.sim.window;
        if !(0.0 <= a && a < b && b <= 1.0) {
            return Err(Error::Config(format!(
                "sim.window [{a}, {b}] must satisfy 0 <= a < b <= 1"
            )));
        }
        self.sim_config().validate(self.plant.c)
    }

    pub fn sim_config(&self) -> SimConfig {
        let ic = match self.sim.ic {
            IcKind::Reference => InitialCondition::Reference,
            IcKind::Equilibrium => InitialCondition::Equilibrium,
            IcKind::Perturbed => InitialCondition::Perturbed {
                seed: self.seed,
                amplitude: self.sim.amplitude,
            },
        };
        SimConfig::new(
            self.plant.c,
            self.sim.intervals,
            self.sim.dt_factor,
            self.sim.t_end,
            self.sim.stride,
            ic,
        )
    }

    /// Absolute fit window.
    pub fn fit_window(&self) -> (f64, f64) {
        (self.sim.window[0] * self.sim.t_end, self.sim.window[1] * self.sim.t_end)
    }
}
