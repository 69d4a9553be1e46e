//! Discrete Fourier transform along the periodic x direction.
//!
//! Every constant-coefficient operator on the grid is circulant in x, so a
//! transform along x turns each 2D solve into independent 1D problems in y,
//! one per wavenumber. Only modes `0..=Nx/2` are solved; the rest follow from
//! conjugate symmetry of real data.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct XTransform {
    nx: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for XTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("XTransform").field("nx", &self.nx).finish()
    }
}

impl XTransform {
    pub fn new(nx: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            nx,
            forward: planner.plan_fft_forward(nx),
            inverse: planner.plan_fft_inverse(nx),
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    /// Number of independent modes, `Nx/2 + 1`.
    pub fn n_modes(&self) -> usize {
        self.nx / 2 + 1
    }

    /// Transforms every column `f[.., j]`; result is indexed `[mode, j]`.
    pub fn forward(&self, f: &Array2<f64>) -> Array2<Complex64> {
        let (nx, ncol) = f.dim();
        debug_assert_eq!(nx, self.nx);
        let mut out = Array2::zeros((nx, ncol));
        let mut buf = vec![Complex64::new(0.0, 0.0); nx];
        for j in 0..ncol {
            for i in 0..nx {
                buf[i] = Complex64::new(f[[i, j]], 0.0);
            }
            self.forward.process(&mut buf);
            for m in 0..nx {
                out[[m, j]] = buf[m];
            }
        }
        out
    }

    /// Inverse of [`forward`](Self::forward). Modes above `Nx/2` are rebuilt
    /// from their conjugate partners before transforming, so the result is real.
    pub fn inverse(&self, spec: &Array2<Complex64>) -> Array2<f64> {
        let (nx, ncol) = spec.dim();
        let mut out = Array2::zeros((nx, ncol));
        let mut buf = vec![Complex64::new(0.0, 0.0); nx];
        let scale = 1.0 / nx as f64;
        for j in 0..ncol {
            for m in 0..=nx / 2 {
                buf[m] = spec[[m, j]];
            }
            buf[0].im = 0.0;
            buf[nx / 2].im = 0.0;
            for m in (nx / 2 + 1)..nx {
                buf[m] = spec[[nx - m, j]].conj();
            }
            self.inverse.process(&mut buf);
            for i in 0..nx {
                out[[i, j]] = buf[i].re * scale;
            }
        }
        out
    }

    pub fn forward_1d(&self, f: &Array1<f64>) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    pub fn inverse_1d(&self, spec: &[Complex64]) -> Array1<f64> {
        let nx = self.nx;
        let mut buf = vec![Complex64::new(0.0, 0.0); nx];
        buf[..=nx / 2].copy_from_slice(&spec[..=nx / 2]);
        buf[0].im = 0.0;
        buf[nx / 2].im = 0.0;
        for m in (nx / 2 + 1)..nx {
            buf[m] = spec[nx - m].conj();
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / nx as f64;
        Array1::from_iter(buf.iter().map(|c| c.re * scale))
    }
}

/// Eigenvalue of `-d^2/dx^2` (three-point stencil) for mode `m`:
/// `(2/dx^2)(1 - cos(2 pi m / Nx))`.
pub fn second_difference_symbol(m: usize, nx: usize, dx: f64) -> f64 {
    2.0 / (dx * dx) * (1.0 - (2.0 * PI * m as f64 / nx as f64).cos())
}

/// Modulus of the staggered first difference for mode `m`:
/// `2 sin(pi m / Nx) / dx`, so that `s^2` equals the second-difference symbol.
pub fn staggered_difference_symbol(m: usize, nx: usize, dx: f64) -> f64 {
    2.0 * (PI * m as f64 / nx as f64).sin() / dx
}

/// Phase `e^{i k dx / 2}` relating face-centred and cell-centred modes.
pub fn half_cell_phase(m: usize, nx: usize) -> Complex64 {
    Complex64::from_polar(1.0, PI * m as f64 / nx as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_identity() {
        let t = XTransform::new(16);
        let f = Array2::from_shape_fn((16, 5), |(i, j)| ((i * 7 + j * 3) as f64).sin());
        let g = t.inverse(&t.forward(&f));
        for (a, b) in f.iter().zip(g.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
        let w = Array1::from_shape_fn(16, |i| (i as f64).cos());
        let w2 = t.inverse_1d(&t.forward_1d(&w));
        for (a, b) in w.iter().zip(w2.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn symbols_are_consistent() {
        let dx = 0.1;
        for m in 0..=8 {
            let s = staggered_difference_symbol(m, 16, dx);
            assert!((s * s - second_difference_symbol(m, 16, dx)).abs() < 1e-10);
        }
    }
}
