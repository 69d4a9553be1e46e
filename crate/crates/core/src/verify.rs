//! Manufactured-solution convergence studies for the discrete operators and
//! roundoff checks in the Fourier direction.

use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fields::{BulkSurface, VectorField, WallField};
use crate::grid::{ChannelDomain, Grid};
use crate::operators::EllipticRhs;
use crate::operators::stencil::{bulk_dot, laplace_beltrami, vector_dot, wall_dot};
use crate::operators::Operators;
use crate::spectral::second_difference_symbol;

/// Default refinement ladder.
pub const LADDER: [usize; 4] = [16, 32, 64, 128];
/// Smallest acceptable observed order for the second-order operators.
pub const MIN_ORDER: f64 = 1.9;
/// Points across the periodic direction when refining in `dy` only.
const FIXED_NX: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub error_l2: f64,
    pub error_max: f64,
    /// Observed order against the previous row; NaN on the first row.
    pub order: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub operator: String,
    /// `dy`, `dx` or `dx+dy`.
    pub refined: String,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    fn from_errors(operator: &str, refined: &str, data: Vec<(usize, f64, f64, f64)>) -> Self {
        let mut rows: Vec<ConvergenceRow> = vec![];
        for (n, h, l2, mx) in data {
            let order = rows
                .last()
                .map(|p| (p.error_l2 / l2).ln() / (p.h / h).ln())
                .unwrap_or(f64::NAN);
            rows.push(ConvergenceRow {
                n,
                h,
                error_l2: l2,
                error_max: mx,
                order,
            });
        }
        Self {
            operator: operator.into(),
            refined: refined.into(),
            rows,
        }
    }

    /// Smallest observed order over the ladder.
    pub fn min_order(&self) -> f64 {
        self.rows
            .iter()
            .skip(1)
            .map(|r| r.order)
            .fold(f64::INFINITY, f64::min)
    }

    pub const CSV_HEADER: &'static str = "operator,refined,N,h,error_l2,error_max,observed_order";

    pub fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{:.17e},{:.17e},{:.17e},{:.6}",
                    self.operator, self.refined, r.n, r.h, r.error_l2, r.error_max, r.order
                )
            })
            .collect()
    }
}

/// Coefficients of the manufactured problems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmsSetup {
    pub lx: f64,
    pub ly: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for MmsSetup {
    fn default() -> Self {
        Self {
            lx: 1.0,
            ly: 1.0,
            alpha: 1.0,
            beta: 1.0,
        }
    }
}

fn max_abs(a: impl IntoIterator<Item = f64>) -> f64 {
    a.into_iter().fold(0.0, |m: f64, v| m.max(v.abs()))
}

/// Zero-flux Laplacian: `-lap phi = f` with
/// `phi = cos(2 pi x / Lx) (cos(pi y / Ly) + 0.3 cos(2 pi y / Ly))`.
pub fn mms_neumann(s: &MmsSetup, ladder: &[usize]) -> Result<ConvergenceTable> {
    let mut data = vec![];
    for &n in ladder {
        let g = Grid::new(ChannelDomain::new(s.lx, s.ly, FIXED_NX, n))?;
        let ops = Operators::new(&g, s.alpha, s.beta)?;
        let sig = second_difference_symbol(1, g.nx(), g.dx());
        let k = PI / s.ly;
        let psi = |y: f64| (k * y).cos() + 0.3 * (2.0 * k * y).cos();
        let d2psi = |y: f64| -k * k * (k * y).cos() - 1.2 * k * k * (2.0 * k * y).cos();
        let cx = |x: f64| (2.0 * PI * x / s.lx).cos();
        let f = g.sample_cells(|x, y| cx(x) * (sig * psi(y) - d2psi(y)));
        let exact = g.sample_cells(|x, y| cx(x) * psi(y));
        let err = &ops.neumann.solve(&f)? - &exact;
        data.push((n, g.dy(), bulk_dot(&g, &err, &err).sqrt(), max_abs(err.iter().copied())));
    }
    Ok(ConvergenceTable::from_errors("laplacian_neumann", "dy", data))
}

/// Coupled bulk-surface problem with `phi = cos(2 pi x / Lx) exp(y / Ly)`.
pub fn mms_coupled_elliptic(s: &MmsSetup, ladder: &[usize]) -> Result<ConvergenceTable> {
    let mut data = vec![];
    for &n in ladder {
        let g = Grid::new(ChannelDomain::new(s.lx, s.ly, FIXED_NX, n))?;
        let ops = Operators::new(&g, s.alpha, s.beta)?;
        let sig = second_difference_symbol(1, g.nx(), g.dx());
        let psi = |y: f64| (y / s.ly).exp();
        let cx = |x: f64| (2.0 * PI * x / s.lx).cos();
        let j1 = g.sample_cells(|x, y| cx(x) * (sig - 1.0 / (s.ly * s.ly)) * psi(y));
        // outward normal derivatives: -psi'(0) below, +psi'(Ly) above
        let j2 = WallField {
            lower: Array1::from_shape_fn(g.nx(), |i| {
                cx(g.x_center(i)) * ((s.alpha * sig + s.beta) * psi(0.0) - psi(0.0) / s.ly)
            }),
            upper: Array1::from_shape_fn(g.nx(), |i| {
                cx(g.x_center(i)) * ((s.alpha * sig + s.beta) * psi(s.ly) + psi(s.ly) / s.ly)
            }),
        };
        let exact = BulkSurface::new(
            g.sample_cells(|x, y| cx(x) * psi(y)),
            g.sample_walls(|x, y| cx(x) * psi(y)),
        );
        let sol = ops.elliptic.solve(&EllipticRhs { j1, j2 })?;
        let eb = &sol.bulk - &exact.bulk;
        let ew = sol.wall.zip_map(&exact.wall, |a, b| a - b);
        let l2 = (bulk_dot(&g, &eb, &eb) + wall_dot(&g, &ew, &ew)).sqrt();
        let mx = max_abs(eb.iter().copied()).max(ew.max_abs());
        data.push((n, g.dy(), l2, mx));
    }
    Ok(ConvergenceTable::from_errors("coupled_elliptic", "dy", data))
}

/// Laplace-Beltrami consistency on `w = sin(2 pi x / Lx) + 0.5 cos(4 pi x / Lx)`.
pub fn mms_laplace_beltrami(s: &MmsSetup, ladder: &[usize]) -> Result<ConvergenceTable> {
    let mut data = vec![];
    for &n in ladder {
        let g = Grid::new(ChannelDomain::new(s.lx, s.ly, n, 8))?;
        let k = 2.0 * PI / s.lx;
        let w = Array1::from_shape_fn(n, |i| {
            let x = g.x_center(i);
            (k * x).sin() + 0.5 * (2.0 * k * x).cos()
        });
        let exact = Array1::from_shape_fn(n, |i| {
            let x = g.x_center(i);
            -k * k * (k * x).sin() - 2.0 * k * k * (2.0 * k * x).cos()
        });
        let err = &laplace_beltrami(&g, &w) - &exact;
        let l2 = (err.iter().map(|v| v * v).sum::<f64>() * g.dx()).sqrt();
        data.push((n, g.dx(), l2, max_abs(err.iter().copied())));
    }
    Ok(ConvergenceTable::from_errors("laplace_beltrami", "dx", data))
}

/// Leray projection of `w + grad q`, with `w` the curl of
/// `psi = sin(2 pi x / Lx) sin^2(pi y / Ly)` and `q = cos(2 pi x / Lx) cos(pi y / Ly)`.
pub fn mms_projection(s: &MmsSetup, ladder: &[usize]) -> Result<ConvergenceTable> {
    let mut data = vec![];
    for &n in ladder {
        let g = Grid::new(ChannelDomain::new(s.lx, s.ly, n, n))?;
        let ops = Operators::new(&g, s.alpha, s.beta)?;
        let (kx, ky) = (2.0 * PI / s.lx, PI / s.ly);
        let wx = |x: f64, y: f64| (kx * x).sin() * ky * (2.0 * ky * y).sin();
        let wy = |x: f64, y: f64| -kx * (kx * x).cos() * (ky * y).sin().powi(2);
        let qx = |x: f64, y: f64| -kx * (kx * x).sin() * (ky * y).cos();
        let qy = |x: f64, y: f64| -ky * (kx * x).cos() * (ky * y).sin();
        let sample = |fx: &dyn Fn(f64, f64) -> f64, fy: &dyn Fn(f64, f64) -> f64| VectorField {
            ux: Array2::from_shape_fn(g.ux_shape(), |(i, j)| fx(g.x_face(i), g.y_center(j))),
            uy: Array2::from_shape_fn(g.uy_shape(), |(i, j)| {
                if j == 0 || j == g.ny() {
                    0.0
                } else {
                    fy(g.x_center(i), g.y_face(j))
                }
            }),
        };
        let w = sample(&wx, &wy);
        let v = sample(&|x, y| wx(x, y) + qx(x, y), &|x, y| wy(x, y) + qy(x, y));
        let err = &ops.projector.project(&v)? - &w;
        data.push((n, g.dx().max(g.dy()), vector_dot(&g, &err, &err).sqrt(), err.max_abs()));
    }
    Ok(ConvergenceTable::from_errors("leray_projection", "dx+dy", data))
}

/// All four studies.
pub fn verify_operators(s: &MmsSetup, ladder: &[usize]) -> Result<Vec<ConvergenceTable>> {
    Ok(vec![
        mms_neumann(s, ladder)?,
        mms_laplace_beltrami(s, ladder)?,
        mms_coupled_elliptic(s, ladder)?,
        mms_projection(s, ladder)?,
    ])
}

/// Largest relative error of apply-then-solve round trips for random
/// fields concentrated on each single Fourier mode `m <= Nx/2`, for the
/// coupled elliptic and the zero-flux Laplacian solvers.
pub fn fourier_roundoff(g: &Grid, alpha: f64, beta: f64, seed: u64) -> Result<f64> {
    let ops = Operators::new(g, alpha, beta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (nx, ny) = (g.nx(), g.ny());
    let mut worst = 0.0_f64;
    for m in 0..=nx / 2 {
        let th: f64 = rng.gen_range(0.0..2.0 * PI);
        let c = |i: usize| (2.0 * PI * m as f64 * i as f64 / nx as f64 + th).cos();
        let prof: Vec<f64> = (0..ny).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (a, b): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let phi = BulkSurface::new(
            Array2::from_shape_fn((nx, ny), |(i, j)| c(i) * prof[j]),
            WallField {
                lower: Array1::from_shape_fn(nx, |i| a * c(i)),
                upper: Array1::from_shape_fn(nx, |i| b * c(i)),
            },
        );
        let back = ops.elliptic.solve(&ops.elliptic.apply(&phi))?;
        let e = max_abs((&back.bulk - &phi.bulk).iter().copied())
            .max(back.wall.zip_map(&phi.wall, |p, q| p - q).max_abs());
        worst = worst.max(e / max_abs(phi.bulk.iter().copied()).max(phi.wall.max_abs()));

        let mut mu = phi.bulk.clone();
        let mean = mu.mean().unwrap_or(0.0);
        mu.mapv_inplace(|v| v - mean);
        if max_abs(mu.iter().copied()) > 0.0 {
            let lap = crate::operators::stencil::laplacian_neumann(g, &mu);
            let back = ops.neumann.solve(&(-lap))?;
            let e = max_abs((&back - &mu).iter().copied());
            worst = worst.max(e / max_abs(mu.iter().copied()));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_ladder_is_second_order() {
        let s = MmsSetup::default();
        for t in verify_operators(&s, &[16, 32]).unwrap() {
            assert!(t.min_order() > 1.8, "{t:?}");
            assert_eq!(t.csv_rows().len(), 2);
        }
    }

    #[test]
    fn fourier_direction_is_exact() {
        let g = Grid::new(ChannelDomain::new(1.0, 1.0, 16, 8)).unwrap();
        assert!(fourier_roundoff(&g, 1.0, 1.0, 0).unwrap() < 1e-12);
    }
}
