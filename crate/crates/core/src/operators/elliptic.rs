//! Per-wavenumber direct solvers for the scalar elliptic problems: the
//! coupled bulk-wall Robin problem with surface diffusion, and the inverse of
//! the zero-flux Laplacian on mean-zero data.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

use super::stencil::{
    bulk_dot, laplacian_dirichlet, laplacian_neumann, wall_dot, wall_operator,
};
use super::solve_complex;
use crate::banded::{BandMatrix, BandedLu};
use crate::error::{Error, Result};
use crate::fields::{BulkSurface, WallField};
use crate::grid::Grid;
use crate::spectral::{second_difference_symbol, XTransform};

/// Relative residual accepted from a direct solve.
pub const SOLVE_TOL: f64 = 1e-10;

/// Right-hand side of the coupled problem: bulk source `j1` and wall source `j2`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticRhs {
    pub j1: Array2<f64>,
    pub j2: WallField,
}

/// Solves `-lap phi = j1` in the bulk with
/// `-alpha lap_Gamma phi + d_n phi + beta phi = j2` on both walls.
#[derive(Debug)]
pub struct CoupledEllipticSolver {
    grid: Grid,
    xt: Arc<XTransform>,
    alpha: f64,
    beta: f64,
    lus: Vec<BandedLu>,
}

impl CoupledEllipticSolver {
    pub fn new(grid: &Grid, xt: Arc<XTransform>, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0) {
            return Err(Error::Parameter(format!(
                "coupled elliptic solve needs alpha > 0 and beta > 0, got {alpha}, {beta}"
            )));
        }
        let ny = grid.ny();
        let idy2 = 1.0 / (grid.dy() * grid.dy());
        let wall = 2.0 / grid.dy();
        let lus = (0..xt.n_modes())
            .map(|m| {
                let sigma = second_difference_symbol(m, grid.nx(), grid.dx());
                let n = ny + 2;
                let mut a = BandMatrix::zeros(n, 1, 1);
                a.add(0, 0, alpha * sigma + beta + wall);
                a.add(0, 1, -wall);
                a.add(ny + 1, ny + 1, alpha * sigma + beta + wall);
                a.add(ny + 1, ny, -wall);
                for j in 0..ny {
                    let r = j + 1;
                    a.add(r, r, sigma + 2.0 * idy2);
                    a.add(r, r - 1, -idy2);
                    a.add(r, r + 1, -idy2);
                    if j == 0 {
                        a.add(r, r, idy2);
                        a.add(r, r - 1, -idy2);
                    }
                    if j == ny - 1 {
                        a.add(r, r, idy2);
                        a.add(r, r + 1, -idy2);
                    }
                }
                a.factor()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: grid.clone(),
            xt,
            alpha,
            beta,
            lus,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Solve without the residual check.
    pub(crate) fn solve_raw(&self, rhs: &EllipticRhs) -> BulkSurface {
        let ny = self.grid.ny();
        let bulk_hat = self.xt.forward(&rhs.j1);
        let low_hat = self.xt.forward_1d(&rhs.j2.lower);
        let up_hat = self.xt.forward_1d(&rhs.j2.upper);
        let nm = self.xt.n_modes();
        let mut sol_bulk = Array2::<Complex64>::zeros((self.grid.nx(), ny));
        let mut sol_low = vec![Complex64::new(0.0, 0.0); self.grid.nx()];
        let mut sol_up = sol_low.clone();
        let mut b = vec![Complex64::new(0.0, 0.0); ny + 2];
        for m in 0..nm {
            b[0] = low_hat[m];
            for j in 0..ny {
                b[j + 1] = bulk_hat[[m, j]];
            }
            b[ny + 1] = up_hat[m];
            solve_complex(&self.lus[m], &mut b);
            sol_low[m] = b[0];
            for j in 0..ny {
                sol_bulk[[m, j]] = b[j + 1];
            }
            sol_up[m] = b[ny + 1];
        }
        BulkSurface {
            bulk: self.xt.inverse(&sol_bulk),
            wall: WallField {
                lower: self.xt.inverse_1d(&sol_low),
                upper: self.xt.inverse_1d(&sol_up),
            },
        }
    }

    /// Applies the forward operator `(j1, j2) = (-lap phi, B phi)`.
    pub fn apply(&self, phi: &BulkSurface) -> EllipticRhs {
        EllipticRhs {
            j1: -laplacian_dirichlet(&self.grid, &phi.bulk, &phi.wall),
            j2: wall_operator(&self.grid, phi, self.alpha, self.beta),
        }
    }

    pub fn solve(&self, rhs: &EllipticRhs) -> Result<BulkSurface> {
        self.grid.check_scalar(&rhs.j1)?;
        self.grid.check_wall(&rhs.j2)?;
        let phi = self.solve_raw(rhs);
        let res = self.apply(&phi);
        let r1 = &res.j1 - &rhs.j1;
        let r2 = res.j2.zip_map(&rhs.j2, |a, b| a - b);
        let rnorm = (bulk_dot(&self.grid, &r1, &r1) + wall_dot(&self.grid, &r2, &r2)).sqrt();
        let bnorm =
            (bulk_dot(&self.grid, &rhs.j1, &rhs.j1) + wall_dot(&self.grid, &rhs.j2, &rhs.j2)).sqrt();
        let rel = if bnorm > 0.0 { rnorm / bnorm } else { rnorm };
        if !(rel <= SOLVE_TOL) {
            return Err(Error::Solver {
                what: "coupled elliptic",
                residual: rel,
            });
        }
        Ok(phi)
    }
}

/// Inverse of `-lap` with zero-flux walls on mean-zero cell fields.
#[derive(Debug)]
pub struct NeumannSolver {
    grid: Grid,
    xt: Arc<XTransform>,
    lus: Vec<BandedLu>,
}

impl NeumannSolver {
    pub fn new(grid: &Grid, xt: Arc<XTransform>) -> Result<Self> {
        let ny = grid.ny();
        let idy2 = 1.0 / (grid.dy() * grid.dy());
        let lus = (0..xt.n_modes())
            .map(|m| {
                let sigma = second_difference_symbol(m, grid.nx(), grid.dx());
                let mut a = BandMatrix::zeros(ny, 1, 1);
                for j in 0..ny {
                    let mut diag = sigma;
                    if j > 0 {
                        a.add(j, j - 1, -idy2);
                        diag += idy2;
                    }
                    if j + 1 < ny {
                        a.add(j, j + 1, -idy2);
                        diag += idy2;
                    }
                    if m == 0 && j == ny - 1 {
                        // pin the additive constant; the dropped row is implied
                        // by compatibility of mean-zero data
                        a.add(j, j - 1, idy2);
                        a.add(j, j, 1.0);
                    } else {
                        a.add(j, j, diag);
                    }
                }
                a.factor()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: grid.clone(),
            xt,
            lus,
        })
    }

    /// Solves `-lap w = f` and returns the mean-zero solution; `f` is assumed
    /// compatible.
    pub(crate) fn solve_raw(&self, f: &Array2<f64>) -> Array2<f64> {
        let ny = self.grid.ny();
        let mut hat = self.xt.forward(f);
        let mut b = vec![Complex64::new(0.0, 0.0); ny];
        for m in 0..self.xt.n_modes() {
            for j in 0..ny {
                b[j] = hat[[m, j]];
            }
            if m == 0 {
                b[ny - 1] = Complex64::new(0.0, 0.0);
            }
            solve_complex(&self.lus[m], &mut b);
            for j in 0..ny {
                hat[[m, j]] = b[j];
            }
        }
        let mut w = self.xt.inverse(&hat);
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        w.mapv_inplace(|v| v - mean);
        w
    }

    /// The operator N = (-lap)^{-1} on mean-zero fields.
    pub fn solve(&self, f: &Array2<f64>) -> Result<Array2<f64>> {
        self.grid.check_scalar(f)?;
        let total = self.grid.integrate_bulk(f)?;
        let abs_total = self.grid.integrate_bulk(&f.mapv(f64::abs))?;
        if total.abs() > 1e-10 * abs_total.max(1.0) {
            return Err(Error::Precondition(format!(
                "mean-zero required (integral = {total:e})"
            )));
        }
        let w = self.solve_raw(f);
        let r = -laplacian_neumann(&self.grid, &w) - f;
        let rn = r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let fmax = f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if rn > SOLVE_TOL * fmax.max(1e-300) && rn > 1e-13 {
            return Err(Error::Solver {
                what: "neumann inverse",
                residual: rn,
            });
        }
        Ok(w)
    }
}

/// Discrete eigenvalue of the wall Laplace-Beltrami operator for mode `m`.
pub fn laplace_beltrami_eigenvalue(grid: &Grid, m: usize) -> f64 {
    -second_difference_symbol(m, grid.nx(), grid.dx())
}
