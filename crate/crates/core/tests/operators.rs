use std::f64::consts::PI;

use chns_core::operators::stencil::{
    divergence, gradient, laplace_beltrami, laplacian_neumann, vector_dot,
};
use chns_core::operators::{EllipticRhs, Operators, StokesBasis};
use chns_core::{BulkSurface, ChannelDomain, Grid, VectorField, WallField};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ops(lx: f64, ly: f64, nx: usize, ny: usize, alpha: f64, beta: f64) -> Operators {
    let g = Grid::new(ChannelDomain::new(lx, ly, nx, ny)).unwrap();
    Operators::new(&g, alpha, beta).unwrap()
}

fn random_noslip(g: &Grid, rng: &mut ChaCha8Rng) -> VectorField {
    let mut v = VectorField::zeros(g.nx(), g.ny());
    v.ux.mapv_inplace(|_| rng.gen_range(-1.0..1.0));
    v.uy.mapv_inplace(|_| rng.gen_range(-1.0..1.0));
    v.uy.column_mut(0).fill(0.0);
    v.uy.column_mut(g.ny()).fill(0.0);
    v
}

fn max_abs(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

#[test]
fn laplace_beltrami_matches_discrete_eigenvalue() {
    let mut prev = f64::INFINITY;
    for nx in [16, 32, 64, 128] {
        let g = Grid::new(ChannelDomain::new(1.0, 1.0, nx, 8)).unwrap();
        let w = Array1::from_shape_fn(nx, |i| (2.0 * PI * g.x_center(i)).sin());
        let lw = laplace_beltrami(&g, &w);
        let dx = g.dx();
        let lam = -(2.0 / (dx * dx)) * (1.0 - (2.0 * PI * dx).cos());
        for i in 0..nx {
            assert!((lw[i] - lam * w[i]).abs() < 1e-9 * lam.abs());
        }
        let err = (lam + 4.0 * PI * PI).abs();
        assert!(err < prev / 3.9 || prev.is_infinite());
        prev = err;
    }
}

#[test]
fn neumann_inverse_examples() {
    let o = ops(1.0, 1.0, 16, 16, 1.0, 1.0);
    let g = o.grid().clone();
    let f = g.sample_cells(|x, _| (2.0 * PI * x).cos());
    let w = o.neumann.solve(&f).unwrap();
    // discrete eigenvalue of the x second difference
    let sigma = 2.0 / (g.dx() * g.dx()) * (1.0 - (2.0 * PI * g.dx()).cos());
    for (a, b) in w.iter().zip(f.iter()) {
        assert!((a - b / sigma).abs() < 1e-12);
    }
    assert!((sigma.recip() - 1.0 / (4.0 * PI * PI)).abs() < 2e-2 / (4.0 * PI * PI));

    let f = g.sample_cells(|_, y| (PI * y).cos());
    let w = o.neumann.solve(&f).unwrap();
    let r = -laplacian_neumann(&g, &w) - &f;
    assert!(max_abs(&r) < 1e-10);
    assert!(g.mean(&w).unwrap().abs() < 1e-14);
    let j = 5;
    assert!((w[[0, j]] / f[[0, j]] - 1.0 / (PI * PI)).abs() < 5e-3);

    let err = o.neumann.solve(&Array2::from_elem(g.scalar_shape(), 1.0)).unwrap_err();
    assert!(err.to_string().contains("mean-zero required"));
}

#[test]
fn neumann_inverse_is_symmetric_positive() {
    let o = ops(1.3, 0.8, 16, 12, 1.0, 1.0);
    let g = o.grid().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut rand_mean_zero = || {
        let mut f = Array2::from_shape_fn(g.scalar_shape(), |_| rng.gen_range(-1.0..1.0));
        let m = f.mean().unwrap();
        f.mapv_inplace(|v| v - m);
        f
    };
    let f = rand_mean_zero();
    let h = rand_mean_zero();
    let nf = o.neumann.solve(&f).unwrap();
    let nh = o.neumann.solve(&h).unwrap();
    let a = (&nf * &h).sum();
    let b = (&f * &nh).sum();
    assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
    assert!((&nf * &f).sum() > 0.0);
}

#[test]
fn coupled_elliptic_constants_and_residual() {
    let o = ops(1.0, 1.0, 16, 16, 0.7, 1.3);
    let g = o.grid().clone();
    let c = 2.5;
    let sol = o
        .elliptic
        .solve(&EllipticRhs {
            j1: g.zeros_scalar(),
            j2: WallField::constant(g.nx(), 1.3 * c),
        })
        .unwrap();
    assert!(sol.bulk.iter().all(|v| (v - c).abs() < 1e-11));
    assert!(sol.wall.lower.iter().all(|v| (v - c).abs() < 1e-11));

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut j1 = Array2::from_shape_fn(g.scalar_shape(), |_| rng.gen_range(-1.0..1.0));
    let m = j1.mean().unwrap();
    j1.mapv_inplace(|v| v - m);
    let rhs = EllipticRhs {
        j1,
        j2: g.zeros_wall(),
    };
    let phi = o.elliptic.solve(&rhs).unwrap();
    let back = o.elliptic.apply(&phi);
    assert!(max_abs(&(&back.j1 - &rhs.j1)) < 1e-10);
    assert!(back.j2.max_abs() < 1e-10);
}

#[test]
fn coupled_elliptic_bound_is_resolution_independent() {
    // ||phi||_{H1 sigma} <= C (||j1|| + ||j2||) with C not growing under refinement
    let mut ratios = vec![];
    for n in [16, 32, 64] {
        let o = ops(1.0, 1.0, n, n, 1.0, 1.0);
        let g = o.grid().clone();
        let j1 = g.sample_cells(|x, y| (2.0 * PI * x).cos() * (3.0 * y).sin() + y);
        let j2 = g.sample_walls(|x, y| (4.0 * PI * x).sin() + y);
        let l2 = (chns_core::operators::stencil::bulk_dot(&g, &j1, &j1)).sqrt()
            + chns_core::operators::stencil::wall_dot(&g, &j2, &j2).sqrt();
        let phi = o.elliptic.solve(&EllipticRhs { j1, j2 }).unwrap();
        ratios.push(o.h1_sigma_sq(&phi).sqrt() / l2);
    }
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(max / min < 1.05, "{ratios:?}");
}

#[test]
fn leray_projection_properties() {
    let o = ops(1.2, 1.0, 16, 16, 1.0, 1.0);
    let g = o.grid().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let v = random_noslip(&g, &mut rng);
    let w = random_noslip(&g, &mut rng);
    let pv = o.projector.project(&v).unwrap();
    let pw = o.projector.project(&w).unwrap();
    assert!(max_abs(&divergence(&g, &pv)) < 1e-10);
    let ppv = o.projector.project(&pv).unwrap();
    assert!((&ppv - &pv).max_abs() < 1e-12);
    let a = vector_dot(&g, &pv, &w);
    let b = vector_dot(&g, &v, &pw);
    assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));

    let q = Array2::from_shape_fn(g.scalar_shape(), |_| rng.gen_range(-1.0..1.0));
    let grad = gradient(&g, &q);
    assert!(o.projector.project(&grad).unwrap().max_abs() < 1e-11);

    let mut bad = v.clone();
    bad.uy[[0, 0]] = 1.0;
    assert!(o.projector.project(&bad).is_err());
}

#[test]
fn stokes_eigenfunction_dual_norm() {
    let o = ops(1.0, 1.0, 8, 10, 1.0, 1.0);
    let g = o.grid().clone();
    let basis = StokesBasis::new(&g);
    for (m, l) in [(0, 0), (1, 0), (1, 3), (2, 1), (4, 2)] {
        let kappa = basis.modes[m].kappa[l];
        let e = basis.eigenfunction(o.transform(), m, l, Complex64::new(0.3, 0.8));
        assert!(max_abs(&divergence(&g, &e)) < 1e-9 * e.max_abs() / g.dy());
        let norm = vector_dot(&g, &e, &e).sqrt();
        let dual = o.dual_norm_v(&e).unwrap();
        assert!(
            (dual - norm / kappa.sqrt()).abs() < 1e-8 * dual,
            "m={m} l={l}: {dual} vs {}",
            norm / kappa.sqrt()
        );
    }
    assert_eq!(o.dual_norm_v(&VectorField::zeros(g.nx(), g.ny())).unwrap(), 0.0);
}

#[test]
fn stokes_basis_dimension_matches_divergence_free_space() {
    let g = Grid::new(ChannelDomain::new(1.0, 1.0, 8, 8)).unwrap();
    let basis = StokesBasis::new(&g);
    // mode 0: u_y vanishes identically, so all N u_x columns are free
    assert_eq!(basis.modes[0].kappa.len(), 8);
    for m in 1..=4 {
        assert_eq!(basis.modes[m].kappa.len(), 7);
    }
    assert!(basis.modes.iter().all(|md| md.kappa.iter().all(|k| *k > 0.0)));
}

#[test]
fn h1_sigma_of_x_mode_matches_quadrature() {
    // phi = sin(2 pi x), constant in y, alpha = beta = 1, Lx = Ly = 1:
    // bulk 2 pi^2, wall gradient 2 * 2 pi^2, wall mass 2 * 1/2 (up to O(dx^2))
    let mut prev = f64::INFINITY;
    for n in [16, 32, 64] {
        let o = ops(1.0, 1.0, n, n, 1.0, 1.0);
        let g = o.grid().clone();
        let phi = BulkSurface::new(
            g.sample_cells(|x, _| (2.0 * PI * x).sin()),
            g.sample_walls(|x, _| (2.0 * PI * x).sin()),
        );
        let exact = 2.0 * PI * PI + 4.0 * PI * PI + 1.0;
        let err = (o.h1_sigma_sq(&phi) - exact).abs();
        assert!(err < 0.05 * exact);
        assert!(err < prev);
        prev = err;
        let r = o.norms(&VectorField::zeros(n, n), &phi).unwrap();
        let via_parts = r.grad_l2.powi(2)
            + chns_core::operators::stencil::surface_gradient_form(&g, &phi.wall, &phi.wall)
            + r.l2_boundary.powi(2);
        assert!((r.h1_sigma.powi(2) - via_parts).abs() < 1e-10 * via_parts);
        assert!(r.dual_h1sigma > 0.0);
    }
}

#[test]
fn boundary_form_is_symmetric_and_constant_case() {
    let o = ops(1.5, 1.0, 12, 10, 0.6, 2.0);
    let g = o.grid().clone();
    let c = BulkSurface::constant(g.nx(), g.ny(), 1.7);
    let v = o.boundary_form_a(&c, &c).unwrap();
    assert!((v - 2.0 * 1.7 * 1.7 * 2.0 * 1.5).abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut rnd = || {
        BulkSurface::new(
            Array2::from_shape_fn(g.scalar_shape(), |_| rng.gen_range(-1.0..1.0)),
            WallField {
                lower: Array1::from_shape_fn(g.nx(), |_| rng.gen_range(-1.0..1.0)),
                upper: Array1::from_shape_fn(g.nx(), |_| rng.gen_range(-1.0..1.0)),
            },
        )
    };
    let (a, b) = (rnd(), rnd());
    let ab = o.boundary_form_a(&a, &b).unwrap();
    let ba = o.boundary_form_a(&b, &a).unwrap();
    assert!((ab - ba).abs() < 1e-12 * ab.abs().max(1.0));
    assert!(o.boundary_form_a(&a, &a).unwrap() > 0.0);
}

#[test]
fn dual_h1sigma_rejects_mean_and_matches_riesz() {
    let o = ops(1.0, 1.0, 12, 12, 1.0, 0.5);
    let g = o.grid().clone();
    let f = BulkSurface::new(Array2::from_elem(g.scalar_shape(), 1.0), g.zeros_wall());
    assert!(o.dual_norm_h1sigma(&f).is_err());
    let f = BulkSurface::new(
        g.sample_cells(|x, y| (2.0 * PI * x).cos() * y),
        g.sample_walls(|x, _| (2.0 * PI * x).sin()),
    );
    let d = o.dual_norm_h1sigma(&f).unwrap();
    let w = o
        .elliptic
        .solve(&EllipticRhs {
            j1: f.bulk.clone(),
            j2: f.wall.clone(),
        })
        .unwrap();
    assert!((d * d - o.h1_sigma_sq(&w)).abs() < 1e-9 * d * d);
    assert_eq!(o.dual_norm_h1sigma(&o.zeros_pair()).unwrap(), 0.0);
}
