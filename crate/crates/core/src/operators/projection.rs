//! Discrete Leray projection onto MAC fields with zero divergence.

use std::sync::Arc;

use super::elliptic::NeumannSolver;
use super::stencil::{divergence, gradient};
use crate::error::{Error, Result};
use crate::fields::VectorField;
use crate::grid::Grid;
use crate::spectral::XTransform;

/// `P v = v - grad p` with `lap p = div v` (zero-flux pressure). Since the
/// face gradient is minus the adjoint of the divergence, `P` is an orthogonal
/// projector in the face L2 inner product.
#[derive(Debug)]
pub struct LerayProjector {
    grid: Grid,
    poisson: NeumannSolver,
}

impl LerayProjector {
    pub fn new(grid: &Grid, xt: Arc<XTransform>) -> Result<Self> {
        Ok(Self {
            grid: grid.clone(),
            poisson: NeumannSolver::new(grid, xt)?,
        })
    }

    /// Returns the projected field and the pressure-like potential `p` with
    /// `v = P v + grad p`.
    pub fn project_with_potential(&self, v: &VectorField) -> Result<(VectorField, ndarray::Array2<f64>)> {
        crate::grid::check_shape(self.grid.ux_shape(), v.ux.dim())?;
        crate::grid::check_shape(self.grid.uy_shape(), v.uy.dim())?;
        let wn = v.wall_normal_max();
        if wn != 0.0 {
            return Err(Error::Precondition(format!(
                "wall-normal velocity must vanish (max {wn:e})"
            )));
        }
        let div = divergence(&self.grid, v);
        // lap p = div v  <=>  p = N(-div v)
        let p = self.poisson.solve_raw(&(-div));
        let gp = gradient(&self.grid, &p);
        Ok((v - &gp, p))
    }

    pub fn project(&self, v: &VectorField) -> Result<VectorField> {
        Ok(self.project_with_potential(v)?.0)
    }
}
