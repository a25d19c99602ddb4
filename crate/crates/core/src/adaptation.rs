//! Projected gradient estimator for the lumped parameter `[A, B]`.
//!
//! The estimator is fed with a regressor `X` and the successor it produced,
//! so that `target = Theta X` for the true parameter. The update is
//! `Theta+ = Proj(Theta + lambda * e X')` with `e = target - Theta_hat X`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::geometry::{GeometryError, Polytope};
use crate::model::{ModelError, ParamHull};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdaptationError {
    #[error("learning rate {lambda} and margin {alpha} violate the step-size condition for regressor bound {bound}")]
    Inadmissible { lambda: f64, alpha: f64, bound: f64 },
    #[error("regressor energy {energy} exceeds admissible bound {bound}")]
    ExcitationBound { energy: f64, bound: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub theta_hat: DMatrix<f64>,
    pub lambda: f64,
    pub alpha: f64,
    pub last_prediction_error: DVector<f64>,
}

/// Largest admissible learning rate for margin `alpha` and a regressor
/// bound `||X||^2 <= regressor_bound_sq`.
pub fn admissible_lambda(alpha: f64, regressor_bound_sq: f64) -> f64 {
    (2.0 - alpha) / regressor_bound_sq
}

#[derive(Debug, Clone)]
pub struct UpdateReport {
    pub innovation: DVector<f64>,
    pub unprojected: DMatrix<f64>,
    pub projection_distance: f64,
    /// `|| Theta_{k+1} - Theta_k ||_F`.
    pub step_norm: f64,
}

impl EstimatorState {
    pub fn new(theta_hat: DMatrix<f64>, lambda: f64, alpha: f64) -> Result<Self, AdaptationError> {
        if !(lambda > 0.0) || !(alpha > 0.0 && alpha < 2.0) {
            return Err(AdaptationError::Inadmissible {
                lambda,
                alpha,
                bound: f64::NAN,
            });
        }
        let n = theta_hat.nrows();
        Ok(Self {
            theta_hat,
            lambda,
            alpha,
            last_prediction_error: DVector::zeros(n),
        })
    }

    /// Checks `x_m^2 + u_m^2 <= (2 - alpha) / lambda`.
    pub fn check_admissible(&self, regressor_bound_sq: f64) -> Result<(), AdaptationError> {
        if regressor_bound_sq > (2.0 - self.alpha) / self.lambda * (1.0 + 1e-12) {
            return Err(AdaptationError::Inadmissible {
                lambda: self.lambda,
                alpha: self.alpha,
                bound: regressor_bound_sq,
            });
        }
        Ok(())
    }

    pub fn a_hat(&self) -> DMatrix<f64> {
        let n = self.theta_hat.nrows();
        self.theta_hat.columns(0, n).into_owned()
    }

    pub fn b_hat(&self) -> DMatrix<f64> {
        let n = self.theta_hat.nrows();
        self.theta_hat.columns(n, self.theta_hat.ncols() - n).into_owned()
    }

    pub fn predict(&self, regressor: &DVector<f64>) -> DVector<f64> {
        &self.theta_hat * regressor
    }

    pub fn update(
        &self,
        target: &DVector<f64>,
        regressor: &DVector<f64>,
        hull: &ParamHull,
    ) -> Result<(EstimatorState, UpdateReport), AdaptationError> {
        if regressor.len() != self.theta_hat.ncols() || target.len() != self.theta_hat.nrows() {
            return Err(AdaptationError::Dimension(format!(
                "regressor {} / target {} for a {}x{} estimate",
                regressor.len(),
                target.len(),
                self.theta_hat.nrows(),
                self.theta_hat.ncols()
            )));
        }
        let energy = regressor.norm_squared();
        let bound = (2.0 - self.alpha) / self.lambda;
        if energy > bound * (1.0 + 1e-9) {
            return Err(AdaptationError::ExcitationBound { energy, bound });
        }
        let innovation = target - self.predict(regressor);
        if innovation.iter().all(|e| *e == 0.0) {
            let next = Self {
                last_prediction_error: innovation.clone(),
                ..self.clone()
            };
            return Ok((
                next,
                UpdateReport {
                    innovation,
                    unprojected: self.theta_hat.clone(),
                    projection_distance: 0.0,
                    step_norm: 0.0,
                },
            ));
        }
        let unprojected = &self.theta_hat + &innovation * regressor.transpose() * self.lambda;
        let proj = hull.project(&unprojected)?;
        let step_norm = (&proj.point - &self.theta_hat).norm();
        let next = Self {
            theta_hat: proj.point,
            lambda: self.lambda,
            alpha: self.alpha,
            last_prediction_error: innovation.clone(),
        };
        Ok((
            next,
            UpdateReport {
                innovation,
                unprojected,
                projection_distance: proj.distance,
                step_norm,
            },
        ))
    }
}

pub fn project_hull(m: &DMatrix<f64>, hull: &ParamHull) -> Result<DMatrix<f64>, AdaptationError> {
    Ok(hull.project(m)?.point)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRadii {
    pub d_theta: f64,
    /// Bound on the squared one-step prediction error.
    pub delta_xtilde: f64,
    pub delta_theta: f64,
    pub x_m: f64,
    pub u_m: f64,
}

impl ErrorRadii {
    pub fn sqrt_delta_xtilde(&self) -> f64 {
        self.delta_xtilde.sqrt()
    }

    pub fn regressor_bound_sq(&self) -> f64 {
        self.x_m * self.x_m + self.u_m * self.u_m
    }
}

/// `x_m` is the largest Euclidean norm over `state_set`; `u_m` is given.
pub fn compute_error_radii(
    hull: &ParamHull,
    state_set: &Polytope,
    u_m: f64,
    alpha: f64,
) -> Result<ErrorRadii, AdaptationError> {
    let x_m = state_set
        .vertices()?
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    let d_theta = hull.diameter();
    let root = d_theta * (x_m * x_m + u_m * u_m).sqrt();
    Ok(ErrorRadii {
        d_theta,
        delta_xtilde: root * root,
        delta_theta: (2.0 - alpha) * root,
        x_m,
        u_m,
    })
}
