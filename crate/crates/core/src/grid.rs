//! Periodic channel geometry `[0, Lx) x [0, Ly]` and its staggered layout.
//!
//! Scalars (order parameter, chemical potential, pressure) live at cell
//! centres `((i+1/2)dx, (j+1/2)dy)`. The x-velocity lives on x-faces
//! `(i dx, (j+1/2)dy)` and the y-velocity on y-faces `((i+1/2)dx, j dy)`,
//! `j = 0..=Ny`, where `j = 0` and `j = Ny` are the walls. Wall scalars sit
//! at `((i+1/2)dx, 0)` and `((i+1/2)dx, Ly)`, directly below/above the first
//! and last cell of each column.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::WallField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelDomain {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for ChannelDomain {
    fn default() -> Self {
        Self {
            lx: 1.0,
            ly: 1.0,
            nx: 32,
            ny: 32,
        }
    }
}

impl ChannelDomain {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Self {
        Self { lx, ly, nx, ny }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lx > 0.0 && self.lx.is_finite()) {
            return Err(Error::Domain(format!("Lx must be > 0, got {}", self.lx)));
        }
        if !(self.ly > 0.0 && self.ly.is_finite()) {
            return Err(Error::Domain(format!("Ly must be > 0, got {}", self.ly)));
        }
        if self.nx % 2 != 0 {
            return Err(Error::Domain(format!("Nx must be even, got {}", self.nx)));
        }
        if self.nx < 8 {
            return Err(Error::Domain(format!("Nx must be >= 8, got {}", self.nx)));
        }
        if self.ny < 8 {
            return Err(Error::Domain(format!("Ny must be >= 8, got {}", self.ny)));
        }
        Ok(())
    }
}

/// Which wall(s) a boundary integral runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WallSelection {
    Lower,
    Upper,
    Both,
}

/// Immutable grid descriptor shared by every operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    domain: ChannelDomain,
    dx: f64,
    dy: f64,
}

impl Grid {
    pub fn new(domain: ChannelDomain) -> Result<Self> {
        domain.validate()?;
        Ok(Self {
            dx: domain.lx / domain.nx as f64,
            dy: domain.ly / domain.ny as f64,
            domain,
        })
    }

    pub fn domain(&self) -> &ChannelDomain {
        &self.domain
    }
    pub fn nx(&self) -> usize {
        self.domain.nx
    }
    pub fn ny(&self) -> usize {
        self.domain.ny
    }
    pub fn lx(&self) -> f64 {
        self.domain.lx
    }
    pub fn ly(&self) -> f64 {
        self.domain.ly
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn dy(&self) -> f64 {
        self.dy
    }

    /// Area of one cell, the bulk quadrature weight.
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    /// |Omega| = Lx Ly.
    pub fn volume(&self) -> f64 {
        self.domain.lx * self.domain.ly
    }

    /// |Gamma| = 2 Lx (two walls).
    pub fn boundary_measure(&self) -> f64 {
        2.0 * self.domain.lx
    }

    /// sigma(closure of Omega) = |Omega| + |Gamma|.
    pub fn sigma_measure(&self) -> f64 {
        self.volume() + self.boundary_measure()
    }

    pub fn x_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }
    pub fn y_center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dy
    }
    pub fn x_face(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }
    pub fn y_face(&self, j: usize) -> f64 {
        j as f64 * self.dy
    }

    pub fn scalar_shape(&self) -> (usize, usize) {
        (self.nx(), self.ny())
    }
    pub fn ux_shape(&self) -> (usize, usize) {
        (self.nx(), self.ny())
    }
    pub fn uy_shape(&self) -> (usize, usize) {
        (self.nx(), self.ny() + 1)
    }

    pub fn zeros_scalar(&self) -> Array2<f64> {
        Array2::zeros(self.scalar_shape())
    }

    pub fn zeros_wall(&self) -> WallField {
        WallField::zeros(self.nx())
    }

    pub fn check_scalar(&self, f: &Array2<f64>) -> Result<()> {
        check_shape(self.scalar_shape(), f.dim())
    }

    pub fn check_wall(&self, w: &WallField) -> Result<()> {
        check_shape((self.nx(), 1), (w.lower.len(), 1))?;
        check_shape((self.nx(), 1), (w.upper.len(), 1))
    }

    /// Cell-centred field sampled from a closure.
    pub fn sample_cells(&self, f: impl Fn(f64, f64) -> f64) -> Array2<f64> {
        Array2::from_shape_fn(self.scalar_shape(), |(i, j)| {
            f(self.x_center(i), self.y_center(j))
        })
    }

    /// Wall field sampled from a closure at y = 0 and y = Ly.
    pub fn sample_walls(&self, f: impl Fn(f64, f64) -> f64) -> WallField {
        let ly = self.ly();
        WallField {
            lower: Array1::from_shape_fn(self.nx(), |i| f(self.x_center(i), 0.0)),
            upper: Array1::from_shape_fn(self.nx(), |i| f(self.x_center(i), ly)),
        }
    }

    /// Midpoint rule for a cell-centred field over Omega.
    pub fn integrate_bulk(&self, field: &Array2<f64>) -> Result<f64> {
        self.check_scalar(field)?;
        let n = (self.nx() * self.ny()) as f64;
        Ok(field.iter().sum::<f64>() / n * self.volume())
    }

    /// Midpoint rule along the selected wall(s).
    pub fn integrate_boundary(&self, field: &WallField, walls: WallSelection) -> Result<f64> {
        self.check_wall(field)?;
        let n = self.nx() as f64;
        let lower = field.lower.iter().sum::<f64>() / n * self.lx();
        let upper = field.upper.iter().sum::<f64>() / n * self.lx();
        Ok(match walls {
            WallSelection::Lower => lower,
            WallSelection::Upper => upper,
            WallSelection::Both => lower + upper,
        })
    }

    /// Bulk mean `m phi = |Omega|^{-1} int phi dx`.
    pub fn mean(&self, field: &Array2<f64>) -> Result<f64> {
        Ok(self.integrate_bulk(field)? / self.volume())
    }
}

pub(crate) fn check_shape(expected: (usize, usize), found: (usize, usize)) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Shape { expected, found })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_square_measures() {
        let g = Grid::new(ChannelDomain::new(1.0, 1.0, 16, 16)).unwrap();
        let one = Array2::ones(g.scalar_shape());
        assert_eq!(g.integrate_bulk(&one).unwrap(), 1.0);
        let w = WallField::constant(16, 1.0);
        assert_eq!(g.integrate_boundary(&w, WallSelection::Both).unwrap(), 2.0);
        assert_eq!(g.sigma_measure(), 3.0);
    }

    #[test]
    fn stretched_channel_measures() {
        let g = Grid::new(ChannelDomain::new(2.0, 0.5, 16, 8)).unwrap();
        assert_eq!(g.volume(), 1.0);
        assert_eq!(g.boundary_measure(), 4.0);
        let one = Array2::ones(g.scalar_shape());
        assert_eq!(g.integrate_bulk(&one).unwrap(), 1.0);
    }

    #[test]
    fn odd_nx_rejected() {
        let err = Grid::new(ChannelDomain::new(1.0, 1.0, 7, 16)).unwrap_err();
        assert!(err.to_string().contains("Nx must be even"));
    }

    #[test]
    fn small_grids_rejected() {
        assert!(Grid::new(ChannelDomain::new(1.0, 1.0, 6, 16)).is_err());
        assert!(Grid::new(ChannelDomain::new(1.0, 1.0, 16, 4)).is_err());
        assert!(Grid::new(ChannelDomain::new(-1.0, 1.0, 16, 16)).is_err());
    }

    #[test]
    fn constant_and_periodic_integrals() {
        let g = Grid::new(ChannelDomain::new(1.5, 0.75, 24, 12)).unwrap();
        let c = g.sample_cells(|_, _| 2.5);
        assert!((g.integrate_bulk(&c).unwrap() - 2.5 * 1.5 * 0.75).abs() < 1e-14);
        let s = g.sample_cells(|x, _| (2.0 * PI * x / 1.5).sin());
        assert!(g.integrate_bulk(&s).unwrap().abs() < 1e-14);
    }

    #[test]
    fn shape_mismatch_reported() {
        let g = Grid::new(ChannelDomain::new(1.0, 1.0, 16, 16)).unwrap();
        let bad = Array2::zeros((16, 17));
        assert!(matches!(g.integrate_bulk(&bad), Err(Error::Shape { .. })));
    }
}
