//! Grid-function containers: wall scalars, bulk-surface pairs and MAC vectors.

use std::ops::{Add, Mul, Sub};

use ndarray::{Array1, Array2, Zip};
use serde::{Deserialize, Serialize};

/// One scalar per wall node on each of the two walls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallField {
    pub lower: Array1<f64>,
    pub upper: Array1<f64>,
}

impl WallField {
    pub fn zeros(nx: usize) -> Self {
        Self {
            lower: Array1::zeros(nx),
            upper: Array1::zeros(nx),
        }
    }

    pub fn constant(nx: usize, c: f64) -> Self {
        Self {
            lower: Array1::from_elem(nx, c),
            upper: Array1::from_elem(nx, c),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            lower: self.lower.mapv(&f),
            upper: self.upper.mapv(&f),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            lower: Zip::from(&self.lower).and(&other.lower).map_collect(|&a, &b| f(a, b)),
            upper: Zip::from(&self.upper).and(&other.upper).map_collect(|&a, &b| f(a, b)),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.lower
            .iter()
            .chain(self.upper.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.lower.iter().chain(self.upper.iter()).all(|v| v.is_finite())
    }
}

/// An element of the bulk-surface space: cell values plus wall values.
#[derive(Debug, Clone, PartialEq)]
pub struct BulkSurface {
    pub bulk: Array2<f64>,
    pub wall: WallField,
}

impl BulkSurface {
    pub fn new(bulk: Array2<f64>, wall: WallField) -> Self {
        Self { bulk, wall }
    }

    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self {
            bulk: Array2::zeros((nx, ny)),
            wall: WallField::zeros(nx),
        }
    }

    pub fn constant(nx: usize, ny: usize, c: f64) -> Self {
        Self {
            bulk: Array2::from_elem((nx, ny), c),
            wall: WallField::constant(nx, c),
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            bulk: &self.bulk * a,
            wall: self.wall.map(|v| a * v),
        }
    }

    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        Self {
            bulk: &self.bulk + &(&other.bulk * a),
            wall: self.wall.zip_map(&other.wall, |x, y| x + a * y),
        }
    }
}

impl Sub for &BulkSurface {
    type Output = BulkSurface;
    fn sub(self, rhs: Self) -> BulkSurface {
        self.axpy(-1.0, rhs)
    }
}

impl Add for &BulkSurface {
    type Output = BulkSurface;
    fn add(self, rhs: Self) -> BulkSurface {
        self.axpy(1.0, rhs)
    }
}

/// MAC-staggered velocity: `ux` on x-faces `(Nx, Ny)`, `uy` on y-faces
/// `(Nx, Ny+1)` with rows `j = 0` and `j = Ny` on the walls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorField {
    pub ux: Array2<f64>,
    pub uy: Array2<f64>,
}

impl VectorField {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self {
            ux: Array2::zeros((nx, ny)),
            uy: Array2::zeros((nx, ny + 1)),
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            ux: &self.ux * a,
            uy: &self.uy * a,
        }
    }

    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        Self {
            ux: &self.ux + &(&other.ux * a),
            uy: &self.uy + &(&other.uy * a),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.ux
            .iter()
            .chain(self.uy.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.ux.iter().chain(self.uy.iter()).all(|v| v.is_finite())
    }

    /// Largest normal velocity on either wall.
    pub fn wall_normal_max(&self) -> f64 {
        let ny = self.uy.ncols() - 1;
        self.uy
            .column(0)
            .iter()
            .chain(self.uy.column(ny).iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl Sub for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: Self) -> VectorField {
        self.axpy(-1.0, rhs)
    }
}

impl Add for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: Self) -> VectorField {
        self.axpy(1.0, rhs)
    }
}

impl Mul<f64> for &VectorField {
    type Output = VectorField;
    fn mul(self, a: f64) -> VectorField {
        self.scaled(a)
    }
}
