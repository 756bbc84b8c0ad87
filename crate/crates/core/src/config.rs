//! JSON run configuration. Unknown keys are rejected; the effective
//! configuration with all defaults filled in can be echoed back.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elasticity::{Material, RegionMaterial, TractionProfile};
use crate::elements::{Shape, MAX_ORDER};
use crate::geometry::{LevelSet, SignPattern};
use crate::refine::AdaptivityConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackgroundSpec {
    /// Elements per dimension.
    pub nd: usize,
    /// Multipliers of `nd` in x and y.
    pub grid: [usize; 2],
    pub shape: Shape,
    pub p: u8,
}

impl Default for BackgroundSpec {
    fn default() -> Self {
        BackgroundSpec { nd: 10, grid: [1, 1], shape: Shape::Quad, p: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletSpec {
    pub group: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ux: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uy: Option<f64>,
    /// Prescribe the oracle displacement instead of constants.
    #[serde(default)]
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeumannSpec {
    pub group: String,
    pub profile: TractionProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum OracleSpec {
    /// Infinite plate with a traction-free hole under uniaxial tension `sigma0`.
    Hole { sigma0: f64, radius: f64, material: Material },
    /// Circular inclusion of radius `a`, radial traction imposed at `b`.
    Inclusion { a: f64, b: f64, inner: Material, outer: Material },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    pub nd: Vec<usize>,
    pub p: Vec<u8>,
    #[serde(default)]
    pub shapes: Vec<Shape>,
    /// Corner refinement steps swept at fixed `nd` (first entry of `nd`).
    #[serde(default)]
    pub corner_steps: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub vtk: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: PathBuf::from("out"), vtk: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub domain: DomainSpec,
    #[serde(default)]
    pub background: BackgroundSpec,
    #[serde(default)]
    pub levelsets: Vec<LevelSet>,
    /// Regions removed from the mesh; also used to prune pieces early.
    #[serde(default)]
    pub void: Vec<SignPattern>,
    #[serde(default)]
    pub materials: Vec<RegionMaterial>,
    #[serde(default)]
    pub dirichlet: Vec<DirichletSpec>,
    #[serde(default)]
    pub neumann: Vec<NeumannSpec>,
    #[serde(default)]
    pub body_force: [f64; 2],
    #[serde(default)]
    pub adaptivity: AdaptivityConfig,
    #[serde(default)]
    pub oracle: Option<OracleSpec>,
    #[serde(default)]
    pub reference_energy: Option<f64>,
    #[serde(default)]
    pub study: Option<StudySpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| ConfigError::Parse { line: e.line(), column: e.column(), msg: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Pretty JSON with every default written out.
    pub fn effective_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        let d = &self.domain;
        if !(d.hi[0] > d.lo[0] && d.hi[1] > d.lo[1]) {
            return bad("domain.hi must exceed domain.lo".into());
        }
        let b = &self.background;
        if b.nd == 0 || b.grid.contains(&0) {
            return bad("background.nd and grid must be positive".into());
        }
        check_order(b.p)?;
        let q = self.adaptivity.q;
        if !(q > 0.0 && q < 2.0) {
            return bad(format!("adaptivity.q = {q} outside (0, 2)"));
        }
        for (i, ls) in self.levelsets.iter().enumerate() {
            ls.validate().map_err(|e| ConfigError::Invalid(format!("levelsets[{i}]: {e}")))?;
        }
        let k = self.levelsets.len();
        for p in &self.void {
            if p.0.len() > k {
                return bad(format!("void pattern `{}` longer than the {k} level sets", p.to_text()));
            }
        }
        for m in &self.materials {
            Material::new(m.material.e, m.material.nu)
                .map_err(|e| ConfigError::Invalid(format!("material `{}`: {e}", m.region.to_text())))?;
        }
        for dsp in &self.dirichlet {
            if dsp.exact && self.oracle.is_none() {
                return bad(format!("dirichlet `{}` uses exact data but no oracle is set", dsp.group));
            }
            if !dsp.exact && dsp.ux.is_none() && dsp.uy.is_none() {
                return bad(format!("dirichlet `{}` prescribes nothing", dsp.group));
            }
        }
        if let Some(s) = &self.study {
            if s.nd.is_empty() || s.p.is_empty() {
                return bad("study sweep needs at least one nd and one p".into());
            }
            if s.nd.contains(&0) {
                return bad("study nd must be positive".into());
            }
            for &p in &s.p {
                check_order(p)?;
            }
        }
        Ok(())
    }

    /// Copy with a different resolution, order or shape.
    pub fn with_mesh(&self, nd: usize, p: u8, shape: Shape) -> Self {
        let mut c = self.clone();
        c.background.nd = nd;
        c.background.p = p;
        c.background.shape = shape;
        c
    }

    pub fn nx_ny(&self) -> (usize, usize) {
        let b = &self.background;
        (b.nd * b.grid[0], b.nd * b.grid[1])
    }

    /// Background element width in x.
    pub fn h(&self) -> f64 {
        (self.domain.hi[0] - self.domain.lo[0]) / self.nx_ny().0 as f64
    }
}

fn check_order(p: u8) -> Result<(), ConfigError> {
    if (1..=MAX_ORDER).contains(&p) {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("order {p} outside 1..={MAX_ORDER}")))
    }
}
