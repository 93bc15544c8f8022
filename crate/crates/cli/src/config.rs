//! Experiment configuration files (JSON).

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use translab::barriers::ExactSolution;
use translab::grid::{read_grid_file, DomainMask, GridSpec, ScalarField, Shape};
use translab::solver::NewtonSettings;
use translab::{Error, Result};

use crate::audits::AuditSpec;

/// Largest accepted node count per axis.
pub const MAX_NODES_PER_AXIS: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    /// Required unless the boundary data come from a grid file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub solver: NewtonSettings,
    #[serde(default)]
    pub audits: Vec<AuditSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub h: f64,
    #[serde(default = "rectangle")]
    pub shape: Shape,
}

fn rectangle() -> Shape {
    Shape::Rectangle
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundarySpec {
    Exact {
        solution: ExactSolution,
    },
    /// Grid file; relative paths resolve against the config file.
    File {
        path: PathBuf,
    },
    /// Sum of terms.
    Expression {
        terms: Vec<Term>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Term {
    /// `coef x1^px x2^py`.
    Monomial { coef: f64, px: u32, py: u32 },
    /// `coef exp(a x1 + b x2)`.
    Exp { coef: f64, a: f64, b: f64 },
}

impl Term {
    fn eval(&self, x: [f64; 2]) -> f64 {
        match *self {
            Term::Monomial { coef, px, py } => coef * x[0].powi(px as i32) * x[1].powi(py as i32),
            Term::Exp { coef, a, b } => coef * (a * x[0] + b * x[1]).exp(),
        }
    }
}

impl DomainSpec {
    pub fn grid(&self) -> Result<GridSpec> {
        if !(self.h > 0.0) || !(self.x[1] > self.x[0]) || !(self.y[1] > self.y[0]) {
            return Err(Error::InvalidInput(format!(
                "domain needs h > 0 and increasing extents, got x = {:?}, y = {:?}, h = {}",
                self.x, self.y, self.h
            )));
        }
        let nx = ((self.x[1] - self.x[0]) / self.h).round() + 1.0;
        let ny = ((self.y[1] - self.y[0]) / self.h).round() + 1.0;
        if nx > MAX_NODES_PER_AXIS as f64 || ny > MAX_NODES_PER_AXIS as f64 {
            return Err(Error::InvalidInput(format!(
                "grid of {nx} x {ny} nodes exceeds the {MAX_NODES_PER_AXIS}^2 memory guard"
            )));
        }
        GridSpec::covering((self.x[0], self.x[1]), (self.y[0], self.y[1]), self.h)
    }

    pub fn mask(&self) -> Result<Arc<DomainMask>> {
        Ok(Arc::new(DomainMask::new(self.grid()?, self.shape.clone())))
    }

    pub fn with_h(&self, h: f64) -> Self {
        Self { h, ..self.clone() }
    }
}

impl ExperimentConfig {
    /// Parses and resolves relative paths against `path`'s directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Parse { line: e.line(), message: format!("{}: {e}", path.display()) })?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let BoundarySpec::File { path: p } = &mut cfg.boundary {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.solver;
        if !(s.tol > 0.0 && s.tol < 1.0) || !(s.linear_tol > 0.0 && s.linear_tol < 1.0) || s.max_iter > 1000 {
            return Err(Error::InvalidInput(
                "solver settings out of range: need 0 < tol, linear_tol < 1 and max_iter <= 1000".into(),
            ));
        }
        match &self.boundary {
            BoundarySpec::File { path } => {
                if !path.is_file() {
                    return Err(Error::InvalidInput(format!("boundary file {} does not exist", path.display())));
                }
            }
            BoundarySpec::Exact { solution } => {
                solution.validate()?;
                self.require_domain()?;
            }
            BoundarySpec::Expression { terms } => {
                if terms.is_empty() {
                    return Err(Error::InvalidInput("expression boundary has no terms".into()));
                }
                self.require_domain()?;
            }
        }
        if let Some(d) = &self.domain {
            d.grid()?;
        }
        Ok(())
    }

    fn require_domain(&self) -> Result<&DomainSpec> {
        self.domain.as_ref().ok_or_else(|| Error::InvalidInput("this boundary source needs a domain".into()))
    }

    pub fn exact(&self) -> Option<ExactSolution> {
        match self.boundary {
            BoundarySpec::Exact { solution } => Some(solution),
            _ => None,
        }
    }

    /// Boundary (or full surface) data on the configured domain.
    pub fn field(&self) -> Result<ScalarField> {
        match &self.boundary {
            BoundarySpec::File { path } => {
                let f = read_grid_file(path)?;
                let g = f.grid();
                if g.nx > MAX_NODES_PER_AXIS || g.ny > MAX_NODES_PER_AXIS {
                    return Err(Error::InvalidInput(format!(
                        "grid of {} x {} nodes exceeds the {MAX_NODES_PER_AXIS}^2 memory guard",
                        g.nx, g.ny
                    )));
                }
                Ok(f)
            }
            _ => self.field_on(self.require_domain()?),
        }
    }

    /// Resamples analytic boundary data on another domain.
    pub fn field_on(&self, domain: &DomainSpec) -> Result<ScalarField> {
        let mask = domain.mask()?;
        match &self.boundary {
            BoundarySpec::Exact { solution } => solution.sample(mask),
            BoundarySpec::Expression { terms } => {
                Ok(ScalarField::from_fn(mask, |x| terms.iter().map(|t| t.eval(x)).sum()))
            }
            BoundarySpec::File { .. } => {
                Err(Error::InvalidInput("grid-file data cannot be resampled on another grid".into()))
            }
        }
    }

    /// Canonical bytes for hashing; the output directory is excluded.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut c = self.clone();
        c.output_dir = None;
        serde_json::to_vec(&c).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXACT: &str = r#"{
        "domain": {"x": [1, 10], "y": [-5, 5], "h": 0.5},
        "boundary": {"source": "exact", "solution": {"kind": "exp-end", "c": 0.5, "d": 0}}
    }"#;

    #[test]
    fn parses_exact_config_with_defaults() {
        let c: ExperimentConfig = serde_json::from_str(EXACT).unwrap();
        c.validate().unwrap();
        assert_eq!(c.solver, NewtonSettings::default());
        assert_eq!(c.field().unwrap().grid().nx, 19);
    }

    #[test]
    fn memory_guard_refuses_huge_grids() {
        let mut c: ExperimentConfig = serde_json::from_str(EXACT).unwrap();
        c.domain.as_mut().unwrap().h = 1e-3;
        assert!(matches!(c.validate(), Err(Error::InvalidInput(m)) if m.contains("memory guard")));
    }

    #[test]
    fn rejects_unknown_fields_and_missing_files() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"boundary": {"source": "exact"}, "bogus": 1}"#).is_err());
        let c = ExperimentConfig {
            command: None,
            domain: None,
            boundary: BoundarySpec::File { path: "/nonexistent/u.grid".into() },
            solver: NewtonSettings::default(),
            audits: vec![],
            output_dir: None,
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn expression_terms_sum() {
        let t = [Term::Monomial { coef: 2.0, px: 1, py: 2 }, Term::Exp { coef: 1.0, a: 0.0, b: 0.0 }];
        let v: f64 = t.iter().map(|t| t.eval([3.0, 2.0])).sum();
        assert_eq!(v, 25.0);
    }
}
