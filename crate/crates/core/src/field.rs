//! Real and complex fields sampled on a [`Grid`](crate::grid::Grid).

use crate::error::{CoreError, Result};
use crate::grid::Grid;
use ndarray::ArrayD;
use num_complex::Complex64;

/// Real function sampled at the grid nodes (densities, potentials,
/// Sturm-Liouville right-hand sides).
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Grid,
    values: ArrayD<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: ArrayD<f64>) -> Result<Self> {
        if values.shape() != grid.shape().as_slice() {
            return Err(CoreError::ShapeMismatch(format!(
                "field shape {:?} vs grid shape {:?}",
                values.shape(),
                grid.shape()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidArgument(
                "field contains non-finite values".into(),
            ));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &ArrayD<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut ArrayD<f64> {
        &mut self.values
    }

    pub fn into_values(self) -> ArrayD<f64> {
        self.values
    }

    pub fn to_complex_values(&self) -> ArrayD<Complex64> {
        self.values.mapv(|v| Complex64::new(v, 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn mean(&self) -> f64 {
        self.values.sum() / self.values.len() as f64
    }

    /// Subtract the spatial mean (the gauge used for recorded potentials).
    pub fn with_zero_mean(&self) -> ScalarField {
        let m = self.mean();
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.mapv(|v| v - m),
        }
    }

    pub fn scaled(&self, s: f64) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.mapv(|v| v * s),
        }
    }

    pub fn add_scaled(&mut self, other: &ScalarField, s: f64) {
        self.values.zip_mut_with(other.values(), |a, b| *a += s * b);
    }

    pub fn added(&self, other: &ScalarField) -> ScalarField {
        let mut out = self.clone();
        out.add_scaled(other, 1.0);
        out
    }

    pub fn subbed(&self, other: &ScalarField) -> ScalarField {
        let mut out = self.clone();
        out.add_scaled(other, -1.0);
        out
    }

    /// Largest pointwise difference to another field on the same grid.
    pub fn max_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Validate a density: non-negative (up to `tol` undershoot) and
    /// integrating to `n_particles` within `tol_integral`.
    pub fn check_density(&self, n_particles: f64, tol_integral: f64) -> Result<()> {
        let floor = -1e-10 * self.max_abs().max(1.0);
        if self.values.iter().any(|&v| v < floor) {
            return Err(CoreError::InvalidArgument(format!(
                "density has negative values below {floor:.3e}"
            )));
        }
        let total = self.grid.integrate(self);
        if (total - n_particles).abs() > tol_integral {
            return Err(CoreError::InvalidArgument(format!(
                "density integrates to {total}, expected {n_particles}"
            )));
        }
        Ok(())
    }
}

/// Complex function sampled at the grid nodes (one-particle orbitals).
#[derive(Clone, Debug)]
pub struct ComplexField {
    grid: Grid,
    values: ArrayD<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid, values: ArrayD<Complex64>) -> Result<Self> {
        if values.shape() != grid.shape().as_slice() {
            return Err(CoreError::ShapeMismatch(format!(
                "field shape {:?} vs grid shape {:?}",
                values.shape(),
                grid.shape()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(CoreError::InvalidArgument(
                "field contains non-finite values".into(),
            ));
        }
        Ok(ComplexField { grid, values })
    }

    pub fn from_scalar(f: &ScalarField) -> Self {
        ComplexField {
            grid: f.grid().clone(),
            values: f.to_complex_values(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &ArrayD<Complex64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut ArrayD<Complex64> {
        &mut self.values
    }

    pub fn into_values(self) -> ArrayD<Complex64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.norm()))
    }

    pub fn norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s * self.grid.node_weight()).sqrt()
    }

    pub fn normalized(&self) -> ComplexField {
        let n = self.norm();
        ComplexField {
            grid: self.grid.clone(),
            values: self.values.mapv(|v| v / n),
        }
    }

    pub fn abs_squared(&self) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.mapv(|v| v.norm_sqr()),
        }
    }

    pub fn max_diff(&self, other: &ComplexField) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()))
    }
}

/// One real component per grid axis (currents, gradients).
#[derive(Clone, Debug)]
pub struct VectorField {
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Self {
        VectorField { components }
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [ScalarField] {
        &mut self.components
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.components
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .fold(0.0f64, |m, c| m.max(c.max_abs()))
    }
}
