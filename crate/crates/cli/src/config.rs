//! Declarative scenario document.
//!
//! Matrices are written row-major as arrays of rows. Every dimension is
//! cross-checked against the first hull vertex when the document is turned
//! into a [`Scenario`].

use ampc::geometry::Polytope;
use ampc::model::{ParamHull, PlantModel};
use ampc::mpc::ControllerConfig;
use ampc::sim::{Scenario, HULL_RESIDUAL_TOL};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid field `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: field.into(),
        message: message.into(),
    }
}

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexConfig {
    pub a: Rows,
    pub b: Rows,
}

/// A parameter pair that may be replaced by its nearest hull member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemberConfig {
    pub a: Rows,
    pub b: Rows,
    #[serde(default)]
    pub project_onto_hull: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintConfig {
    /// Half-widths of the symmetric state box.
    pub state: Vec<f64>,
    pub input: Vec<f64>,
    pub rate: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub horizon: usize,
    pub q: Rows,
    pub r: Rows,
    pub alpha: f64,
    /// Learning rate; the largest admissible value is used when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub gamma: f64,
    #[serde(default = "one")]
    pub tube_scale: f64,
    #[serde(default = "one")]
    pub rate_safety: f64,
    #[serde(default = "yes")]
    pub certify_first_move: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub start: usize,
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    pub segments: Vec<SegmentConfig>,
    /// Vertices of the reference hull; the segment values when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Rows>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub steps: usize,
    pub seed: u64,
    pub x0: Vec<f64>,
    pub settle_window: usize,
    pub settle_tol: f64,
    #[serde(default = "one")]
    pub sample_period: f64,
    pub initial_estimate: MemberConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub initial_states: usize,
    pub initial_estimates: usize,
    pub state_sampling_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub hull: Vec<VertexConfig>,
    pub plant: MemberConfig,
    pub constraints: ConstraintConfig,
    pub controller: ControllerSection,
    pub reference: ReferenceConfig,
    pub simulation: SimulationConfig,
    pub monte_carlo: MonteCarloConfig,
}

/// Fields that determine the synthesis result; hashed for the artifact cache.
#[derive(Serialize)]
struct SynthesisKey<'a> {
    hull: &'a [VertexConfig],
    constraints: &'a ConstraintConfig,
    horizon: usize,
    q: &'a Rows,
    r: &'a Rows,
    alpha: f64,
    lambda: Option<f64>,
    gamma: f64,
    tube_scale: f64,
    rate_safety: f64,
    reference_vertices: Rows,
}

fn matrix(field: &str, rows: &Rows, shape: (usize, usize)) -> Result<DMatrix<f64>, ConfigError> {
    if rows.len() != shape.0 {
        return Err(field_err(field, format!("has {} rows, expected {}", rows.len(), shape.0)));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != shape.1 {
            return Err(field_err(
                field,
                format!("row {} has {} entries, expected {}", i + 1, row.len(), shape.1),
            ));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(field_err(field, format!("row {} has a non-finite entry", i + 1)));
        }
    }
    Ok(DMatrix::from_fn(shape.0, shape.1, |i, j| rows[i][j]))
}

fn vector(field: &str, v: &[f64], len: usize) -> Result<DVector<f64>, ConfigError> {
    if v.len() != len {
        return Err(field_err(field, format!("has {} entries, expected {len}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(field_err(field, "has a non-finite entry"));
    }
    Ok(DVector::from_column_slice(v))
}

fn bounds(field: &str, v: &[f64], len: usize) -> Result<Polytope, ConfigError> {
    vector(field, v, len)?;
    if v.iter().any(|x| *x <= 0.0) {
        return Err(field_err(field, "bounds must be positive"));
    }
    Polytope::symmetric_box(v).map_err(|e| field_err(field, e.to_string()))
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(field_err(field, format!("must be positive, got {v}")))
    }
}

fn in_open_interval(field: &str, v: f64, lo: f64, hi: f64) -> Result<(), ConfigError> {
    if v > lo && v < hi {
        Ok(())
    } else {
        Err(field_err(field, format!("must lie in ({lo}, {hi}), got {v}")))
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    fn dims(&self) -> Result<(usize, usize), ConfigError> {
        let first = self.hull.first().ok_or_else(|| field_err("hull", "needs at least one vertex"))?;
        let n = first.a.len();
        let m = first.b.first().map_or(0, Vec::len);
        if n == 0 || m == 0 {
            return Err(field_err("hull[0]", "vertex matrices must be nonempty"));
        }
        Ok((n, m))
    }

    fn reference_vertices(&self) -> Rows {
        match &self.reference.vertices {
            Some(v) => v.clone(),
            None => self.reference.segments.iter().map(|s| s.value.clone()).collect(),
        }
    }

    /// Hex SHA-256 of the canonical serialization of the synthesis inputs.
    pub fn synthesis_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let c = &self.controller;
        let key = SynthesisKey {
            hull: &self.hull,
            constraints: &self.constraints,
            horizon: c.horizon,
            q: &c.q,
            r: &c.r,
            alpha: c.alpha,
            lambda: c.lambda,
            gamma: c.gamma,
            tube_scale: c.tube_scale,
            rate_safety: c.rate_safety,
            reference_vertices: self.reference_vertices(),
        };
        let text = toml::to_string(&key).expect("key is serializable");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    fn member(&self, field: &str, cfg: &MemberConfig, hull: &ParamHull, n: usize, m: usize) -> Result<DMatrix<f64>, ConfigError> {
        let a = matrix(&format!("{field}.a"), &cfg.a, (n, n))?;
        let b = matrix(&format!("{field}.b"), &cfg.b, (n, m))?;
        let theta = ampc::model::hcat(&a, &b);
        if cfg.project_onto_hull {
            return hull
                .project(&theta)
                .map(|p| p.point)
                .map_err(|e| field_err(field, e.to_string()));
        }
        let residual = hull.membership_residual(&theta).map_err(|e| field_err(field, e.to_string()))?;
        if residual > HULL_RESIDUAL_TOL {
            return Err(field_err(
                field,
                format!("lies outside the hull (residual {residual:e}); set project_onto_hull to use its nearest member"),
            ));
        }
        Ok(theta)
    }

    /// Validates every field and builds the simulation scenario.
    pub fn to_scenario(&self) -> Result<Scenario, ConfigError> {
        let (n, m) = self.dims()?;
        let mut pairs = Vec::with_capacity(self.hull.len());
        for (i, v) in self.hull.iter().enumerate() {
            pairs.push((
                matrix(&format!("hull[{i}].a"), &v.a, (n, n))?,
                matrix(&format!("hull[{i}].b"), &v.b, (n, m))?,
            ));
        }
        let hull = ParamHull::from_pairs(&pairs).map_err(|e| field_err("hull", e.to_string()))?;

        let x_set = bounds("constraints.state", &self.constraints.state, n)?;
        let u_set = bounds("constraints.input", &self.constraints.input, m)?;
        let du_set = bounds("constraints.rate", &self.constraints.rate, m)?;

        let c = &self.controller;
        if c.horizon == 0 {
            return Err(field_err("controller.horizon", "must be at least 1"));
        }
        let q = matrix("controller.q", &c.q, (n, n))?;
        let r = matrix("controller.r", &c.r, (m, m))?;
        if q.clone().cholesky().is_none() {
            return Err(field_err("controller.q", "must be symmetric positive definite"));
        }
        if r.clone().cholesky().is_none() {
            return Err(field_err("controller.r", "must be symmetric positive definite"));
        }
        in_open_interval("controller.alpha", c.alpha, 0.0, 2.0)?;
        in_open_interval("controller.gamma", c.gamma, 0.0, 1.0)?;
        if let Some(l) = c.lambda {
            positive("controller.lambda", l)?;
        }
        positive("controller.tube_scale", c.tube_scale)?;
        positive("controller.rate_safety", c.rate_safety)?;

        let segs = &self.reference.segments;
        if segs.is_empty() {
            return Err(field_err("reference.segments", "needs at least one segment"));
        }
        if segs[0].start != 0 {
            return Err(field_err("reference.segments[0].start", "must be 0"));
        }
        let mut reference_segments = Vec::with_capacity(segs.len());
        for (i, s) in segs.iter().enumerate() {
            if i > 0 && s.start <= segs[i - 1].start {
                return Err(field_err(format!("reference.segments[{i}].start"), "starts must increase"));
            }
            reference_segments.push((s.start, vector(&format!("reference.segments[{i}].value"), &s.value, n)?));
        }
        let reference_vertices = self
            .reference_vertices()
            .iter()
            .enumerate()
            .map(|(i, v)| vector(&format!("reference.vertices[{i}]"), v, n))
            .collect::<Result<Vec<_>, _>>()?;

        let sim = &self.simulation;
        if sim.steps == 0 {
            return Err(field_err("simulation.steps", "must be at least 1"));
        }
        positive("simulation.settle_tol", sim.settle_tol)?;
        positive("simulation.sample_period", sim.sample_period)?;
        let x0 = vector("simulation.x0", &sim.x0, n)?;
        if !x_set.contains(&x0, 1e-9) {
            return Err(field_err("simulation.x0", "lies outside the state constraints"));
        }

        let mc = &self.monte_carlo;
        if mc.initial_states == 0 {
            return Err(field_err("monte_carlo.initial_states", "must be at least 1"));
        }
        if mc.initial_estimates == 0 {
            return Err(field_err("monte_carlo.initial_estimates", "must be at least 1"));
        }
        if !(mc.state_sampling_scale > 0.0 && mc.state_sampling_scale <= 1.0) {
            return Err(field_err("monte_carlo.state_sampling_scale", "must lie in (0, 1]"));
        }

        let plant_theta = self.member("plant", &self.plant, &hull, n, m)?;
        let theta_hat0 = self.member("simulation.initial_estimate", &sim.initial_estimate, &hull, n, m)?;
        let plant = PlantModel::from_theta(&plant_theta, n).map_err(|e| field_err("plant", e.to_string()))?;

        Ok(Scenario {
            name: self.name.clone(),
            plant,
            hull,
            x_set,
            u_set,
            du_set,
            reference_vertices,
            reference_segments,
            horizon: c.horizon,
            q,
            r,
            alpha: c.alpha,
            lambda: c.lambda,
            gamma: c.gamma,
            tube_scale: c.tube_scale,
            du_safety: c.rate_safety,
            steps: sim.steps,
            seed: sim.seed,
            x0,
            theta_hat0,
            settle_window: sim.settle_window,
            settle_tol: sim.settle_tol,
            x0_sampling_scale: mc.state_sampling_scale,
            sample_period: sim.sample_period,
            controller: ControllerConfig {
                certify_first_move: c.certify_first_move,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BENCHMARK: &str = include_str!("../../../configs/benchmark.toml");

    #[test]
    fn benchmark_config_matches_builtin_scenario() {
        let cfg = ScenarioConfig::parse(BENCHMARK).unwrap();
        let sc = cfg.to_scenario().unwrap();
        let builtin = Scenario::benchmark();
        assert_eq!(sc.plant, builtin.plant);
        assert_eq!(sc.theta_hat0, builtin.theta_hat0);
        assert_eq!(sc.hull, builtin.hull);
        assert_eq!(sc.reference_segments, builtin.reference_segments);
        assert_eq!(sc.tube_scale, builtin.tube_scale);
    }

    #[test]
    fn hash_ignores_simulation_fields() {
        let cfg = ScenarioConfig::parse(BENCHMARK).unwrap();
        let mut other = cfg.clone();
        other.simulation.seed += 1;
        other.monte_carlo.initial_states = 3;
        assert_eq!(cfg.synthesis_hash(), other.synthesis_hash());
        other.controller.gamma = 0.8;
        assert_ne!(cfg.synthesis_hash(), other.synthesis_hash());
        assert_eq!(cfg.synthesis_hash().len(), 64);
    }
}
