//! Stokes problems per wavenumber: the Riesz solve behind the V* norm and
//! the discrete Stokes eigenbasis.
//!
//! Face-centred x-velocity modes are rotated by `c_m = i e^{i pi m / Nx}` so
//! that the staggered divergence and gradient have real coefficients:
//! with `u~ = c_m u^`, `D = [s_m, D_y]` and `G = [-s_m; G_y] = -D^T`.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;
use num_complex::Complex64;

use super::elliptic::SOLVE_TOL;
use super::solve_complex;
use super::stencil::{divergence, gradient, vector_dot, vector_laplacian};
use crate::banded::{BandMatrix, BandedLu};
use crate::error::{Error, Result};
use crate::fields::VectorField;
use crate::grid::Grid;
use crate::spectral::{
    half_cell_phase, second_difference_symbol, staggered_difference_symbol, XTransform,
};

fn rotation(m: usize, nx: usize) -> Complex64 {
    Complex64::new(0.0, 1.0) * half_cell_phase(m, nx)
}

/// Direct solver for `-lap w + grad pi = F`, `div w = 0`, no-slip walls.
#[derive(Debug)]
pub struct StokesSolver {
    grid: Grid,
    xt: Arc<XTransform>,
    lus: Vec<BandedLu>,
}

impl StokesSolver {
    pub fn new(grid: &Grid, xt: Arc<XTransform>) -> Result<Self> {
        let (nx, ny) = (grid.nx(), grid.ny());
        let h = grid.dy();
        let ih2 = 1.0 / (h * h);
        let ui = |j: usize| 3 * j;
        let pi = |j: usize| 3 * j + 1;
        // v on interior face j (1..ny-1)
        let vi = |j: usize| 3 * (j - 1) + 2;
        let lus = (0..xt.n_modes())
            .map(|m| {
                let sigma = second_difference_symbol(m, nx, grid.dx());
                let s = staggered_difference_symbol(m, nx, grid.dx());
                let n = 3 * ny - 1;
                let mut a = BandMatrix::zeros(n, 3, 3);
                for j in 0..ny {
                    let r = ui(j);
                    let mut diag = sigma + 2.0 * ih2;
                    if j == 0 || j == ny - 1 {
                        diag += ih2;
                    }
                    a.add(r, r, diag);
                    if j > 0 {
                        a.add(r, ui(j - 1), -ih2);
                    }
                    if j + 1 < ny {
                        a.add(r, ui(j + 1), -ih2);
                    }
                    a.add(r, pi(j), -s);
                }
                for j in 1..ny {
                    let r = vi(j);
                    a.add(r, r, sigma + 2.0 * ih2);
                    if j > 1 {
                        a.add(r, vi(j - 1), -ih2);
                    }
                    if j + 1 < ny {
                        a.add(r, vi(j + 1), -ih2);
                    }
                    a.add(r, pi(j), 1.0 / h);
                    a.add(r, pi(j - 1), -1.0 / h);
                }
                for j in 0..ny {
                    let r = pi(j);
                    if m == 0 && j == ny - 1 {
                        a.add(r, r, 1.0);
                        continue;
                    }
                    a.add(r, ui(j), s);
                    if j + 1 < ny {
                        a.add(r, vi(j + 1), 1.0 / h);
                    }
                    if j > 0 {
                        a.add(r, vi(j), -1.0 / h);
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

    /// Returns the velocity `w` and pressure `pi`.
    pub fn solve(&self, f: &VectorField) -> Result<(VectorField, Array2<f64>)> {
        let g = &self.grid;
        crate::grid::check_shape(g.ux_shape(), f.ux.dim())?;
        crate::grid::check_shape(g.uy_shape(), f.uy.dim())?;
        let (nx, ny) = (g.nx(), g.ny());
        let fx = self.xt.forward(&f.ux);
        let fy = self.xt.forward(&f.uy);
        let mut wx = Array2::<Complex64>::zeros((nx, ny));
        let mut wy = Array2::<Complex64>::zeros((nx, ny + 1));
        let mut pp = Array2::<Complex64>::zeros((nx, ny));
        let mut b = vec![Complex64::new(0.0, 0.0); 3 * ny - 1];
        for m in 0..self.xt.n_modes() {
            let c = rotation(m, nx);
            for j in 0..ny {
                b[3 * j] = c * fx[[m, j]];
                b[3 * j + 1] = Complex64::new(0.0, 0.0);
            }
            for j in 1..ny {
                b[3 * (j - 1) + 2] = fy[[m, j]];
            }
            solve_complex(&self.lus[m], &mut b);
            for j in 0..ny {
                wx[[m, j]] = c.conj() * b[3 * j];
                pp[[m, j]] = b[3 * j + 1];
            }
            for j in 1..ny {
                wy[[m, j]] = b[3 * (j - 1) + 2];
            }
        }
        let w = VectorField {
            ux: self.xt.inverse(&wx),
            uy: self.xt.inverse(&wy),
        };
        let p = self.xt.inverse(&pp);

        let fnorm = vector_dot(g, f, f).sqrt();
        if fnorm > 0.0 {
            let lap = vector_laplacian(g, &w);
            let gp = gradient(g, &p);
            let r = &(&gp - &lap) - f;
            let rel = vector_dot(g, &r, &r).sqrt() / fnorm;
            let div = divergence(g, &w);
            let wscale = w.max_abs().max(f64::MIN_POSITIVE);
            let dmax = div.iter().fold(0.0_f64, |m, v| m.max(v.abs())) * g.dy() / wscale;
            if !(rel <= SOLVE_TOL) || !(dmax <= 1e-11) {
                return Err(Error::Solver {
                    what: "stokes riesz",
                    residual: rel.max(dmax),
                });
            }
        }
        Ok((w, p))
    }
}

/// Stokes eigenpairs for one x-wavenumber, in rotated coordinates
/// `(u~_0..u~_{N-1}, v_1..v_{N-1})`.
#[derive(Debug, Clone)]
pub struct StokesMode {
    pub m: usize,
    pub kappa: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Discrete Stokes eigenbasis: per wavenumber, a dense symmetric eigensolve
/// of `-lap` restricted to the null space of the reduced divergence.
#[derive(Debug, Clone)]
pub struct StokesBasis {
    grid: Grid,
    pub modes: Vec<StokesMode>,
}

pub(crate) fn reduced_operators(grid: &Grid, m: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let (nx, ny) = (grid.nx(), grid.ny());
    let h = grid.dy();
    let ih2 = 1.0 / (h * h);
    let sigma = second_difference_symbol(m, nx, grid.dx());
    let s = staggered_difference_symbol(m, nx, grid.dx());
    let n = 2 * ny - 1;
    let vi = |j: usize| ny + j - 1;
    let mut lap = DMatrix::zeros(n, n);
    for j in 0..ny {
        let mut diag = sigma + 2.0 * ih2;
        if j == 0 || j == ny - 1 {
            diag += ih2;
        }
        lap[(j, j)] = diag;
        if j > 0 {
            lap[(j, j - 1)] = -ih2;
        }
        if j + 1 < ny {
            lap[(j, j + 1)] = -ih2;
        }
    }
    for j in 1..ny {
        lap[(vi(j), vi(j))] = sigma + 2.0 * ih2;
        if j > 1 {
            lap[(vi(j), vi(j - 1))] = -ih2;
        }
        if j + 1 < ny {
            lap[(vi(j), vi(j + 1))] = -ih2;
        }
    }
    let mut div = DMatrix::zeros(ny, n);
    for j in 0..ny {
        div[(j, j)] = s;
        if j + 1 < ny {
            div[(j, vi(j + 1))] = 1.0 / h;
        }
        if j > 0 {
            div[(j, vi(j))] = -1.0 / h;
        }
    }
    (lap, div)
}

impl StokesBasis {
    pub fn new(grid: &Grid) -> Self {
        let modes = (0..=grid.nx() / 2)
            .map(|m| {
                let (lap, div) = reduced_operators(grid, m);
                let dtd = div.transpose() * &div;
                let eig = SymmetricEigen::new(dtd);
                let top = eig.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
                let null: Vec<usize> = (0..eig.eigenvalues.len())
                    .filter(|&k| eig.eigenvalues[k].abs() <= 1e-10 * top)
                    .collect();
                let q = DMatrix::from_fn(lap.nrows(), null.len(), |r, c| {
                    eig.eigenvectors[(r, null[c])]
                });
                let reduced = q.transpose() * &lap * &q;
                let reduced = (&reduced + reduced.transpose()) * 0.5;
                let se = SymmetricEigen::new(reduced);
                let mut order: Vec<usize> = (0..se.eigenvalues.len()).collect();
                order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
                let kappa = order.iter().map(|&k| se.eigenvalues[k]).collect();
                let coeffs = DMatrix::from_fn(se.eigenvectors.nrows(), order.len(), |r, c| {
                    se.eigenvectors[(r, order[c])]
                });
                StokesMode {
                    m,
                    kappa,
                    vectors: q * coeffs,
                }
            })
            .collect();
        Self {
            grid: grid.clone(),
            modes,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Real eigenfunction for wavenumber `m`, eigen-index `l`; `phase`
    /// selects the cosine/sine member of the pair.
    pub fn eigenfunction(&self, xt: &XTransform, m: usize, l: usize, phase: Complex64) -> VectorField {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let mode = &self.modes[m];
        let c = rotation(m, nx);
        // mode 0 rotates by i; feed i so the physical field is real
        let a = if m == 0 { Complex64::new(0.0, 1.0) } else { phase };
        let mut wx = Array2::<Complex64>::zeros((nx, ny));
        let mut wy = Array2::<Complex64>::zeros((nx, ny + 1));
        for j in 0..ny {
            wx[[m, j]] = c.conj() * a * mode.vectors[(j, l)];
        }
        for j in 1..ny {
            wy[[m, j]] = a * mode.vectors[(ny + j - 1, l)];
        }
        VectorField {
            ux: xt.inverse(&wx),
            uy: xt.inverse(&wy),
        }
    }

    /// Rotated per-mode coordinates of a face field.
    pub(crate) fn to_modes(&self, xt: &XTransform, v: &VectorField) -> Vec<Vec<Complex64>> {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let fx = xt.forward(&v.ux);
        let fy = xt.forward(&v.uy);
        (0..=nx / 2)
            .map(|m| {
                let c = rotation(m, nx);
                let mut out = Vec::with_capacity(2 * ny - 1);
                for j in 0..ny {
                    out.push(c * fx[[m, j]]);
                }
                for j in 1..ny {
                    out.push(fy[[m, j]]);
                }
                out
            })
            .collect()
    }

    pub(crate) fn from_modes(&self, xt: &XTransform, coeffs: &[Vec<Complex64>]) -> VectorField {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let mut wx = Array2::<Complex64>::zeros((nx, ny));
        let mut wy = Array2::<Complex64>::zeros((nx, ny + 1));
        for (m, vec) in coeffs.iter().enumerate() {
            let c = rotation(m, nx);
            for j in 0..ny {
                wx[[m, j]] = c.conj() * vec[j];
            }
            for j in 1..ny {
                wy[[m, j]] = vec[ny + j - 1];
            }
        }
        VectorField {
            ux: xt.inverse(&wx),
            uy: xt.inverse(&wy),
        }
    }
}
