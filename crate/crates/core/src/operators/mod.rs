//! Discrete differential operators, solution operators and norms.

pub mod elliptic;
pub mod projection;
pub mod stencil;
pub mod stokes;

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::banded::BandedLu;
use crate::error::{Error, Result};
use crate::fields::{BulkSurface, VectorField, WallField};
use crate::grid::Grid;
use crate::spectral::XTransform;

pub use elliptic::{CoupledEllipticSolver, EllipticRhs, NeumannSolver, SOLVE_TOL};
pub use projection::LerayProjector;
pub use stokes::{StokesBasis, StokesSolver};

/// Solves a real banded system for a complex right-hand side.
pub(crate) fn solve_complex(lu: &BandedLu, b: &mut [Complex64]) {
    let mut re: Vec<f64> = b.iter().map(|c| c.re).collect();
    let mut im: Vec<f64> = b.iter().map(|c| c.im).collect();
    lu.solve_in_place(&mut re);
    lu.solve_in_place(&mut im);
    for (k, c) in b.iter_mut().enumerate() {
        *c = Complex64::new(re[k], im[k]);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub l2_bulk: f64,
    pub l2_boundary: f64,
    pub h1_sigma: f64,
    pub grad_l2: f64,
    pub dual_v: f64,
    pub dual_h1sigma: f64,
}

/// All solution operators for one grid and one pair of wall coefficients.
#[derive(Debug)]
pub struct Operators {
    grid: Grid,
    xt: Arc<XTransform>,
    alpha: f64,
    beta: f64,
    pub elliptic: CoupledEllipticSolver,
    pub neumann: NeumannSolver,
    pub projector: LerayProjector,
    pub stokes: StokesSolver,
}

impl Operators {
    pub fn new(grid: &Grid, alpha: f64, beta: f64) -> Result<Self> {
        let xt = Arc::new(XTransform::new(grid.nx()));
        Ok(Self {
            grid: grid.clone(),
            alpha,
            beta,
            elliptic: CoupledEllipticSolver::new(grid, xt.clone(), alpha, beta)?,
            neumann: NeumannSolver::new(grid, xt.clone())?,
            projector: LerayProjector::new(grid, xt.clone())?,
            stokes: StokesSolver::new(grid, xt.clone())?,
            xt,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn transform(&self) -> &Arc<XTransform> {
        &self.xt
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// The bilinear form `<A phi, psi>`: bulk Dirichlet form plus
    /// `alpha grad_Gamma . grad_Gamma + beta phi psi` on the walls.
    pub fn boundary_form_a(&self, phi: &BulkSurface, psi: &BulkSurface) -> Result<f64> {
        for f in [phi, psi] {
            self.grid.check_scalar(&f.bulk)?;
            self.grid.check_wall(&f.wall)?;
        }
        let g = &self.grid;
        Ok(stencil::bulk_gradient_form(g, phi, psi)
            + self.alpha * stencil::surface_gradient_form(g, &phi.wall, &psi.wall)
            + self.beta * stencil::wall_dot(g, &phi.wall, &psi.wall))
    }

    /// Squared H1(Omega-bar, d sigma) norm.
    pub fn h1_sigma_sq(&self, phi: &BulkSurface) -> f64 {
        let g = &self.grid;
        stencil::bulk_gradient_form(g, phi, phi)
            + self.alpha * stencil::surface_gradient_form(g, &phi.wall, &phi.wall)
            + self.beta * stencil::wall_dot(g, &phi.wall, &phi.wall)
    }

    /// `||lap phi||_{L2(Omega)} + ||-alpha lap_Gamma phi + d_n phi + beta phi||_{L2(Gamma)}`.
    pub fn h2_sigma(&self, phi: &BulkSurface) -> f64 {
        let g = &self.grid;
        let lap = stencil::laplacian_dirichlet(g, &phi.bulk, &phi.wall);
        let b = stencil::wall_operator(g, phi, self.alpha, self.beta);
        stencil::bulk_dot(g, &lap, &lap).sqrt() + stencil::wall_dot(g, &b, &b).sqrt()
    }

    /// Velocity Dirichlet energy `||grad u||^2`.
    pub fn grad_u_sq(&self, u: &VectorField) -> f64 {
        stencil::vector_gradient_form(&self.grid, u, u)
    }

    /// `||grad mu||^2` with zero-flux walls.
    pub fn grad_mu_sq(&self, mu: &Array2<f64>) -> f64 {
        stencil::neumann_gradient_form(&self.grid, mu, mu)
    }

    /// V* norm of the functional `v -> (F, v)`, through the Stokes Riesz map.
    pub fn dual_norm_v(&self, f: &VectorField) -> Result<f64> {
        if f.max_abs() == 0.0 {
            return Ok(0.0);
        }
        let mut f = f.clone();
        let ny = self.grid.ny();
        f.uy.column_mut(0).fill(0.0);
        f.uy.column_mut(ny).fill(0.0);
        let (w, _) = self.stokes.solve(&f)?;
        Ok(stencil::vector_dot(&self.grid, &f, &w).max(0.0).sqrt())
    }

    /// (H1(Omega-bar, d sigma))* norm of `psi -> <F_bulk, psi>_Omega + <F_wall, psi>_Gamma`.
    /// The bulk component must integrate to zero.
    pub fn dual_norm_h1sigma(&self, f: &BulkSurface) -> Result<f64> {
        let g = &self.grid;
        g.check_scalar(&f.bulk)?;
        g.check_wall(&f.wall)?;
        let total = g.integrate_bulk(&f.bulk)?;
        let scale = g.integrate_bulk(&f.bulk.mapv(f64::abs))?;
        if total.abs() > 1e-9 * scale.max(1e-300) && total.abs() > 1e-14 {
            return Err(Error::Precondition(format!(
                "dual norm defined on the mean-zero class (bulk integral = {total:e})"
            )));
        }
        if f.bulk.iter().all(|v| *v == 0.0) && f.wall.max_abs() == 0.0 {
            return Ok(0.0);
        }
        let w = self.elliptic.solve(&EllipticRhs {
            j1: f.bulk.clone(),
            j2: f.wall.clone(),
        })?;
        let pairing = stencil::bulk_dot(g, &f.bulk, &w.bulk) + stencil::wall_dot(g, &f.wall, &w.wall);
        Ok(pairing.max(0.0).sqrt())
    }

    /// Norm report of a velocity / order-parameter pair. Dual norms treat the
    /// fields as L2 functionals; the order parameter's bulk mean is removed.
    pub fn norms(&self, u: &VectorField, phi: &BulkSurface) -> Result<NormReport> {
        let g = &self.grid;
        let grad = stencil::bulk_gradient_form(g, phi, phi);
        let mean = g.mean(&phi.bulk)?;
        let centred = BulkSurface::new(phi.bulk.mapv(|v| v - mean), phi.wall.clone());
        Ok(NormReport {
            l2_bulk: stencil::bulk_dot(g, &phi.bulk, &phi.bulk).sqrt(),
            l2_boundary: stencil::wall_dot(g, &phi.wall, &phi.wall).sqrt(),
            h1_sigma: self.h1_sigma_sq(phi).max(0.0).sqrt(),
            grad_l2: grad.max(0.0).sqrt(),
            dual_v: self.dual_norm_v(u)?,
            dual_h1sigma: self.dual_norm_h1sigma(&centred)?,
        })
    }

    pub fn zeros_pair(&self) -> BulkSurface {
        BulkSurface::new(self.grid.zeros_scalar(), WallField::zeros(self.grid.nx()))
    }
}
