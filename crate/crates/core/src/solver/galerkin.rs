//! Spectral-Galerkin truncation: velocity onto the leading discrete Stokes
//! eigenfunctions, order parameter and chemical potential onto the leading
//! zero-flux Laplacian eigenfunctions.
//!
//! Eigenfunctions are counted as `(|m|, l)` pairs (x-wavenumber, y-index),
//! ordered by eigenvalue; each pair with `m > 0` carries its cosine and sine
//! members.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{VectorField, WallField};
use crate::grid::Grid;
use crate::operators::StokesBasis;
use crate::spectral::{second_difference_symbol, XTransform};
use crate::state::FieldState;

#[derive(Debug, Clone)]
pub struct GalerkinBasis {
    grid: Grid,
    xt: Arc<XTransform>,
    stokes: StokesBasis,
    /// Retained Stokes indices `l` per wavenumber.
    vel_keep: Vec<Vec<usize>>,
    /// Orthonormal zero-flux cosine vectors (columns).
    cosines: DMatrix<f64>,
    scal_keep: Vec<Vec<usize>>,
    n_modes: usize,
}

/// Total number of `(|m|, l)` pairs available for velocity and scalars.
pub fn available_modes(grid: &Grid) -> (usize, usize) {
    let (nx, ny) = (grid.nx(), grid.ny());
    (ny + (nx / 2) * (ny - 1), (nx / 2 + 1) * ny)
}

fn keep_lowest(mut pairs: Vec<(f64, usize, usize)>, n: usize, n_wave: usize) -> Vec<Vec<usize>> {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut keep = vec![vec![]; n_wave];
    for &(_, m, l) in pairs.iter().take(n) {
        keep[m].push(l);
    }
    for k in keep.iter_mut() {
        k.sort_unstable();
    }
    keep
}

impl GalerkinBasis {
    pub fn new(grid: &Grid, n_modes: usize) -> Result<Self> {
        let (nv, ns) = available_modes(grid);
        if n_modes == 0 || n_modes > nv.max(ns) {
            return Err(Error::Parameter(format!(
                "n_modes = {n_modes} outside the available basis (1..={})",
                nv.max(ns)
            )));
        }
        let (nx, ny) = (grid.nx(), grid.ny());
        let n_wave = nx / 2 + 1;
        let stokes = StokesBasis::new(grid);
        let vel_pairs = stokes
            .modes
            .iter()
            .flat_map(|md| md.kappa.iter().enumerate().map(move |(l, k)| (*k, md.m, l)))
            .collect();
        let vel_keep = keep_lowest(vel_pairs, n_modes, n_wave);

        let h = grid.dy();
        let tau = |l: usize| 2.0 / (h * h) * (1.0 - (PI * l as f64 / ny as f64).cos());
        let scal_pairs = (0..n_wave)
            .flat_map(|m| {
                let s = second_difference_symbol(m, nx, grid.dx());
                (0..ny).map(move |l| (s + tau(l), m, l))
            })
            .collect();
        let scal_keep = keep_lowest(scal_pairs, n_modes, n_wave);
        let cosines = DMatrix::from_fn(ny, ny, |j, l| {
            let norm = if l == 0 { (1.0 / ny as f64).sqrt() } else { (2.0 / ny as f64).sqrt() };
            norm * (PI * l as f64 * (j as f64 + 0.5) / ny as f64).cos()
        });
        Ok(Self {
            grid: grid.clone(),
            xt: Arc::new(XTransform::new(nx)),
            stokes,
            vel_keep,
            cosines,
            scal_keep,
            n_modes,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn project_velocity(&self, v: &VectorField) -> VectorField {
        let coeffs = self.stokes.to_modes(&self.xt, v);
        let out: Vec<Vec<Complex64>> = coeffs
            .iter()
            .enumerate()
            .map(|(m, vec)| {
                let basis = &self.stokes.modes[m].vectors;
                let mut acc = vec![Complex64::new(0.0, 0.0); vec.len()];
                for &l in &self.vel_keep[m] {
                    let c: Complex64 = (0..vec.len()).map(|r| vec[r] * basis[(r, l)]).sum();
                    for (r, a) in acc.iter_mut().enumerate() {
                        *a += c * basis[(r, l)];
                    }
                }
                acc
            })
            .collect();
        self.stokes.from_modes(&self.xt, &out)
    }

    pub fn project_bulk(&self, f: &Array2<f64>) -> Array2<f64> {
        let ny = self.grid.ny();
        let mut hat = self.xt.forward(f);
        for m in 0..self.xt.n_modes() {
            let col: Vec<Complex64> = (0..ny).map(|j| hat[[m, j]]).collect();
            let mut acc = vec![Complex64::new(0.0, 0.0); ny];
            for &l in &self.scal_keep[m] {
                let c: Complex64 = (0..ny).map(|j| col[j] * self.cosines[(j, l)]).sum();
                for (j, a) in acc.iter_mut().enumerate() {
                    *a += c * self.cosines[(j, l)];
                }
            }
            for j in 0..ny {
                hat[[m, j]] = acc[j];
            }
        }
        self.xt.inverse(&hat)
    }

    /// L2(Gamma) projection of wall data onto the traces of the retained
    /// scalar eigenfunctions; `cos(l pi y / Ly)` has traces `(1, (-1)^l)`.
    pub fn project_wall(&self, w: &WallField) -> WallField {
        let lo = self.xt.forward_1d(&w.lower);
        let up = self.xt.forward_1d(&w.upper);
        let mut out_lo = vec![Complex64::new(0.0, 0.0); self.grid.nx()];
        let mut out_up = out_lo.clone();
        for m in 0..self.xt.n_modes() {
            let parity: BTreeSet<usize> = self.scal_keep[m].iter().map(|l| l % 2).collect();
            let (a, b) = (lo[m], up[m]);
            let (x, y) = match (parity.contains(&0), parity.contains(&1)) {
                (true, true) => (a, b),
                (true, false) => ((a + b) * 0.5, (a + b) * 0.5),
                (false, true) => ((a - b) * 0.5, (b - a) * 0.5),
                (false, false) => (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
            };
            out_lo[m] = x;
            out_up[m] = y;
        }
        WallField {
            lower: self.xt.inverse_1d(&out_lo),
            upper: self.xt.inverse_1d(&out_up),
        }
    }

    /// Truncates velocity, order parameter (bulk and wall) and chemical
    /// potential; time and pressure are carried over.
    pub fn project_state(&self, s: &FieldState) -> Result<FieldState> {
        self.grid.check_scalar(&s.phi)?;
        self.grid.check_wall(&s.phi_gamma)?;
        Ok(FieldState {
            t: s.t,
            u: self.project_velocity(&s.u),
            phi: self.project_bulk(&s.phi),
            phi_gamma: self.project_wall(&s.phi_gamma),
            mu: self.project_bulk(&s.mu),
            p: s.p.clone(),
        })
    }
}

/// Projects a state onto the first `n_modes` eigen-pairs.
pub fn galerkin_project(grid: &Grid, state: &FieldState, n_modes: usize) -> Result<FieldState> {
    GalerkinBasis::new(grid, n_modes)?.project_state(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ChannelDomain;
    use crate::physics::ModelParams;
    use crate::state::{random_state, InitSpec};

    fn diff(a: &FieldState, b: &FieldState) -> f64 {
        let d = |x: &Array2<f64>, y: &Array2<f64>| {
            x.iter().zip(y.iter()).fold(0.0_f64, |m, (p, q)| m.max((p - q).abs()))
        };
        (&a.u - &b.u)
            .max_abs()
            .max(d(&a.phi, &b.phi))
            .max(d(&a.mu, &b.mu))
            .max(a.phi_gamma.zip_map(&b.phi_gamma, |p, q| p - q).max_abs())
    }

    #[test]
    fn full_basis_is_identity_and_projection_idempotent() {
        let g = Grid::new(ChannelDomain::new(1.0, 1.0, 8, 8)).unwrap();
        let s = random_state(&g, &ModelParams::default(), &InitSpec::default()).unwrap();
        let (_, ns) = available_modes(&g);
        let full = galerkin_project(&g, &s, ns).unwrap();
        assert!(diff(&full, &s) < 1e-10);
        let b = GalerkinBasis::new(&g, 10).unwrap();
        let once = b.project_state(&s).unwrap();
        let twice = b.project_state(&once).unwrap();
        assert!(diff(&once, &twice) < 1e-12);
        assert!(diff(&once, &s) > 1e-3);
        assert!((once.mean_phi() - s.mean_phi()).abs() < 1e-14);
        assert!(GalerkinBasis::new(&g, ns + 1).is_err());
    }
}
