//! Physical-space finite-difference stencils and the discrete inner products
//! they are adjoint under.
//!
//! The bulk Laplacian closes at the walls with the wall values themselves
//! (half-cell differences), and the normal derivative uses the same half-cell
//! difference, so that
//! `<-lap phi, psi>_Omega + <d_n phi, psi>_Gamma = grad-form(phi, psi)`
//! holds exactly on the grid.

use ndarray::{Array1, Array2};

use crate::fields::{BulkSurface, VectorField, WallField};
use crate::grid::Grid;

#[inline]
fn left(i: usize, n: usize) -> usize {
    if i == 0 {
        n - 1
    } else {
        i - 1
    }
}

#[inline]
fn right(i: usize, n: usize) -> usize {
    if i + 1 == n {
        0
    } else {
        i + 1
    }
}

/// Laplacian of a cell-centred field whose wall values are prescribed.
pub fn laplacian_dirichlet(g: &Grid, phi: &Array2<f64>, wall: &WallField) -> Array2<f64> {
    let (nx, ny) = (g.nx(), g.ny());
    let (idx2, idy2) = (1.0 / (g.dx() * g.dx()), 1.0 / (g.dy() * g.dy()));
    Array2::from_shape_fn((nx, ny), |(i, j)| {
        let c = phi[[i, j]];
        let xx = (phi[[right(i, nx), j]] - 2.0 * c + phi[[left(i, nx), j]]) * idx2;
        let yy = if j == 0 {
            (phi[[i, 1]] - 3.0 * c + 2.0 * wall.lower[i]) * idy2
        } else if j == ny - 1 {
            (2.0 * wall.upper[i] - 3.0 * c + phi[[i, ny - 2]]) * idy2
        } else {
            (phi[[i, j + 1]] - 2.0 * c + phi[[i, j - 1]]) * idy2
        };
        xx + yy
    })
}

/// Laplacian with zero normal flux through the walls.
pub fn laplacian_neumann(g: &Grid, mu: &Array2<f64>) -> Array2<f64> {
    let (nx, ny) = (g.nx(), g.ny());
    let (idx2, idy2) = (1.0 / (g.dx() * g.dx()), 1.0 / (g.dy() * g.dy()));
    Array2::from_shape_fn((nx, ny), |(i, j)| {
        let c = mu[[i, j]];
        let xx = (mu[[right(i, nx), j]] - 2.0 * c + mu[[left(i, nx), j]]) * idx2;
        let yy = if j == 0 {
            (mu[[i, 1]] - c) * idy2
        } else if j == ny - 1 {
            (mu[[i, ny - 2]] - c) * idy2
        } else {
            (mu[[i, j + 1]] - 2.0 * c + mu[[i, j - 1]]) * idy2
        };
        xx + yy
    })
}

/// Outward normal derivative at the walls, `(phi_wall - phi_cell) / (dy/2)`.
pub fn normal_derivative(g: &Grid, phi: &Array2<f64>, wall: &WallField) -> WallField {
    let ny = g.ny();
    let s = 2.0 / g.dy();
    WallField {
        lower: Array1::from_shape_fn(g.nx(), |i| (wall.lower[i] - phi[[i, 0]]) * s),
        upper: Array1::from_shape_fn(g.nx(), |i| (wall.upper[i] - phi[[i, ny - 1]]) * s),
    }
}

/// Laplace-Beltrami operator along one wall (periodic second difference).
pub fn laplace_beltrami(g: &Grid, w: &Array1<f64>) -> Array1<f64> {
    let nx = w.len();
    let idx2 = 1.0 / (g.dx() * g.dx());
    Array1::from_shape_fn(nx, |i| (w[right(i, nx)] - 2.0 * w[i] + w[left(i, nx)]) * idx2)
}

pub fn laplace_beltrami_walls(g: &Grid, w: &WallField) -> WallField {
    WallField {
        lower: laplace_beltrami(g, &w.lower),
        upper: laplace_beltrami(g, &w.upper),
    }
}

/// Boundary operator of the coupled elliptic problem:
/// `-alpha lap_Gamma phi + d_n phi + beta phi` on each wall.
pub fn wall_operator(g: &Grid, phi: &BulkSurface, alpha: f64, beta: f64) -> WallField {
    let dn = normal_derivative(g, &phi.bulk, &phi.wall);
    let lb = laplace_beltrami_walls(g, &phi.wall);
    let f = |lb: &Array1<f64>, dn: &Array1<f64>, w: &Array1<f64>| {
        Array1::from_shape_fn(w.len(), |i| -alpha * lb[i] + dn[i] + beta * w[i])
    };
    WallField {
        lower: f(&lb.lower, &dn.lower, &phi.wall.lower),
        upper: f(&lb.upper, &dn.upper, &phi.wall.upper),
    }
}

/// Face gradient of a cell-centred scalar; wall-normal faces are zero.
pub fn gradient(g: &Grid, p: &Array2<f64>) -> VectorField {
    let (nx, ny) = (g.nx(), g.ny());
    let (idx, idy) = (1.0 / g.dx(), 1.0 / g.dy());
    let ux = Array2::from_shape_fn((nx, ny), |(i, j)| (p[[i, j]] - p[[left(i, nx), j]]) * idx);
    let uy = Array2::from_shape_fn((nx, ny + 1), |(i, j)| {
        if j == 0 || j == ny {
            0.0
        } else {
            (p[[i, j]] - p[[i, j - 1]]) * idy
        }
    });
    VectorField { ux, uy }
}

/// Cell-centred divergence of a face field.
pub fn divergence(g: &Grid, v: &VectorField) -> Array2<f64> {
    let (nx, ny) = (g.nx(), g.ny());
    let (idx, idy) = (1.0 / g.dx(), 1.0 / g.dy());
    Array2::from_shape_fn((nx, ny), |(i, j)| {
        (v.ux[[right(i, nx), j]] - v.ux[[i, j]]) * idx + (v.uy[[i, j + 1]] - v.uy[[i, j]]) * idy
    })
}

/// Componentwise Laplacian with no-slip walls (tangential ghost reflection,
/// normal component pinned to zero).
pub fn vector_laplacian(g: &Grid, v: &VectorField) -> VectorField {
    let (nx, ny) = (g.nx(), g.ny());
    let (idx2, idy2) = (1.0 / (g.dx() * g.dx()), 1.0 / (g.dy() * g.dy()));
    let u = &v.ux;
    let ux = Array2::from_shape_fn((nx, ny), |(i, j)| {
        let c = u[[i, j]];
        let xx = (u[[right(i, nx), j]] - 2.0 * c + u[[left(i, nx), j]]) * idx2;
        let yy = if j == 0 {
            (u[[i, 1]] - 3.0 * c) * idy2
        } else if j == ny - 1 {
            (u[[i, ny - 2]] - 3.0 * c) * idy2
        } else {
            (u[[i, j + 1]] - 2.0 * c + u[[i, j - 1]]) * idy2
        };
        xx + yy
    });
    let w = &v.uy;
    let uy = Array2::from_shape_fn((nx, ny + 1), |(i, j)| {
        if j == 0 || j == ny {
            return 0.0;
        }
        let c = w[[i, j]];
        (w[[right(i, nx), j]] - 2.0 * c + w[[left(i, nx), j]]) * idx2
            + (w[[i, j + 1]] - 2.0 * c + w[[i, j - 1]]) * idy2
    });
    VectorField { ux, uy }
}

pub fn bulk_dot(g: &Grid, a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum::<f64>() * g.cell_area()
}

pub fn wall_dot(g: &Grid, a: &WallField, b: &WallField) -> f64 {
    let s: f64 = a.lower.iter().zip(b.lower.iter()).map(|(x, y)| x * y).sum::<f64>()
        + a.upper.iter().zip(b.upper.iter()).map(|(x, y)| x * y).sum::<f64>();
    s * g.dx()
}

/// L2 inner product of face fields over the interior faces (wall-normal
/// faces carry no degrees of freedom).
pub fn vector_dot(g: &Grid, a: &VectorField, b: &VectorField) -> f64 {
    let ny = g.ny();
    let sx: f64 = a.ux.iter().zip(b.ux.iter()).map(|(x, y)| x * y).sum();
    let mut sy = 0.0;
    for i in 0..g.nx() {
        for j in 1..ny {
            sy += a.uy[[i, j]] * b.uy[[i, j]];
        }
    }
    (sx + sy) * g.cell_area()
}

/// Bulk Dirichlet form `int grad phi . grad psi`, including the half cells
/// between the first/last cell centres and the wall values.
pub fn bulk_gradient_form(g: &Grid, phi: &BulkSurface, psi: &BulkSurface) -> f64 {
    let (nx, ny) = (g.nx(), g.ny());
    let (dx, dy) = (g.dx(), g.dy());
    let (a, b) = (&phi.bulk, &psi.bulk);
    let mut sx = 0.0;
    let mut sy = 0.0;
    for i in 0..nx {
        let im = left(i, nx);
        for j in 0..ny {
            sx += (a[[i, j]] - a[[im, j]]) * (b[[i, j]] - b[[im, j]]);
        }
        for j in 1..ny {
            sy += (a[[i, j]] - a[[i, j - 1]]) * (b[[i, j]] - b[[i, j - 1]]);
        }
    }
    let mut sw = 0.0;
    for i in 0..nx {
        sw += (a[[i, 0]] - phi.wall.lower[i]) * (b[[i, 0]] - psi.wall.lower[i]);
        sw += (a[[i, ny - 1]] - phi.wall.upper[i]) * (b[[i, ny - 1]] - psi.wall.upper[i]);
    }
    // half cells: (diff / (dy/2))^2 * dx * dy/2 = 2 diff^2 dx / dy
    sx * dy / dx + sy * dx / dy + sw * 2.0 * dx / dy
}

/// `int_Gamma grad_Gamma a . grad_Gamma b dS` over both walls.
pub fn surface_gradient_form(g: &Grid, a: &WallField, b: &WallField) -> f64 {
    let nx = g.nx();
    let mut s = 0.0;
    for i in 0..nx {
        let im = left(i, nx);
        s += (a.lower[i] - a.lower[im]) * (b.lower[i] - b.lower[im]);
        s += (a.upper[i] - a.upper[im]) * (b.upper[i] - b.upper[im]);
    }
    s / g.dx()
}

/// Dirichlet form of a scalar with zero-flux walls (no wall half cells).
pub fn neumann_gradient_form(g: &Grid, a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let (nx, ny) = (g.nx(), g.ny());
    let (dx, dy) = (g.dx(), g.dy());
    let mut sx = 0.0;
    let mut sy = 0.0;
    for i in 0..nx {
        let im = left(i, nx);
        for j in 0..ny {
            sx += (a[[i, j]] - a[[im, j]]) * (b[[i, j]] - b[[im, j]]);
        }
        for j in 1..ny {
            sy += (a[[i, j]] - a[[i, j - 1]]) * (b[[i, j]] - b[[i, j - 1]]);
        }
    }
    sx * dy / dx + sy * dx / dy
}

/// Velocity Dirichlet form `int grad u : grad v` with no-slip walls; equals
/// `-<vector_laplacian(u), v>` for fields with zero wall-normal component.
pub fn vector_gradient_form(g: &Grid, a: &VectorField, b: &VectorField) -> f64 {
    let (nx, ny) = (g.nx(), g.ny());
    let (dx, dy) = (g.dx(), g.dy());
    let (ua, ub) = (&a.ux, &b.ux);
    let (va, vb) = (&a.uy, &b.uy);
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sw = 0.0;
    for i in 0..nx {
        let im = left(i, nx);
        for j in 0..ny {
            sx += (ua[[i, j]] - ua[[im, j]]) * (ub[[i, j]] - ub[[im, j]]);
        }
        for j in 1..ny {
            sy += (ua[[i, j]] - ua[[i, j - 1]]) * (ub[[i, j]] - ub[[i, j - 1]]);
        }
        sw += ua[[i, 0]] * ub[[i, 0]] + ua[[i, ny - 1]] * ub[[i, ny - 1]];
        for j in 1..ny {
            sx += (va[[i, j]] - va[[im, j]]) * (vb[[i, j]] - vb[[im, j]]);
        }
        for j in 0..ny {
            sy += (va[[i, j + 1]] - va[[i, j]]) * (vb[[i, j + 1]] - vb[[i, j]]);
        }
    }
    sx * dy / dx + sy * dx / dy + sw * 2.0 * dx / dy
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ChannelDomain;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid {
        Grid::new(ChannelDomain::new(1.3, 0.9, 12, 10)).unwrap()
    }

    fn random_pair(g: &Grid, rng: &mut ChaCha8Rng) -> BulkSurface {
        let bulk = Array2::from_shape_fn(g.scalar_shape(), |_| rng.gen_range(-1.0..1.0));
        let mut wall = g.zeros_wall();
        wall.lower.mapv_inplace(|_| rng.gen_range(-1.0..1.0));
        wall.upper.mapv_inplace(|_| rng.gen_range(-1.0..1.0));
        BulkSurface::new(bulk, wall)
    }

    fn random_vector(g: &Grid, rng: &mut ChaCha8Rng) -> VectorField {
        let mut v = VectorField::zeros(g.nx(), g.ny());
        v.ux.mapv_inplace(|_| rng.gen_range(-1.0..1.0));
        v.uy.mapv_inplace(|_| rng.gen_range(-1.0..1.0));
        v.uy.column_mut(0).fill(0.0);
        v.uy.column_mut(g.ny()).fill(0.0);
        v
    }

    #[test]
    fn green_identity_holds_exactly() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let phi = random_pair(&g, &mut rng);
        let psi = random_pair(&g, &mut rng);
        let lap = laplacian_dirichlet(&g, &phi.bulk, &phi.wall);
        let dn = normal_derivative(&g, &phi.bulk, &phi.wall);
        let lhs = -bulk_dot(&g, &lap, &psi.bulk) + wall_dot(&g, &dn, &psi.wall);
        let rhs = bulk_gradient_form(&g, &phi, &psi);
        assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0));
    }

    #[test]
    fn gradient_is_minus_divergence_adjoint() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_pair(&g, &mut rng).bulk;
        let v = random_vector(&g, &mut rng);
        let lhs = vector_dot(&g, &gradient(&g, &p), &v);
        let rhs = -bulk_dot(&g, &p, &divergence(&g, &v));
        assert!((lhs - rhs).abs() < 1e-11);
    }

    #[test]
    fn neumann_laplacian_is_div_grad() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_pair(&g, &mut rng).bulk;
        let a = laplacian_neumann(&g, &p);
        let b = divergence(&g, &gradient(&g, &p));
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-9);
        }
        let form = neumann_gradient_form(&g, &p, &p);
        assert!((form + bulk_dot(&g, &a, &p)).abs() < 1e-9 * form);
    }

    #[test]
    fn vector_form_matches_laplacian() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_vector(&g, &mut rng);
        let b = random_vector(&g, &mut rng);
        let lhs = -vector_dot(&g, &vector_laplacian(&g, &a), &b);
        let rhs = vector_gradient_form(&g, &a, &b);
        assert!((lhs - rhs).abs() < 1e-9 * rhs.abs().max(1.0));
    }

    #[test]
    fn laplace_beltrami_kills_constants_and_sums_to_zero() {
        let g = grid();
        let c = Array1::from_elem(g.nx(), 3.7);
        assert!(laplace_beltrami(&g, &c).iter().all(|v| *v == 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = Array1::from_shape_fn(g.nx(), |_| rng.gen_range(-1.0..1.0));
        let s: f64 = laplace_beltrami(&g, &w).sum();
        assert!(s.abs() < 1e-11);
    }
}
