//! Time-stepping behaviour against closed-form discrete oracles.

use std::f64::consts::PI;

use chns_core::physics::{energy_j, Forcing, ModelParams};
use chns_core::solver::{mass_drift, SchemeConfig, SchemeMode, Stepper};
use chns_core::state::{random_state, FieldState, InitSpec};
use chns_core::{ChannelDomain, Grid};

fn grid(nx: usize, ny: usize) -> Grid {
    Grid::new(ChannelDomain::new(1.0, 1.0, nx, ny)).unwrap()
}

#[test]
fn shear_mode_decays_at_discrete_rate() {
    // u = (sin(pi m (j + 1/2) / Ny), 0) is an eigenvector of the wall-bounded
    // second difference with eigenvalue -(4 / dy^2) sin^2(pi m / (2 Ny));
    // backward Euler damps it by 1 / (1 + nu dt |eigenvalue|) per step
    let (nx, ny, m) = (8, 16, 2);
    let g = grid(nx, ny);
    let p = ModelParams {
        nu: 0.7,
        ..Default::default()
    };
    let s = SchemeConfig {
        dt: 1e-3,
        ..Default::default()
    };
    let st = Stepper::new(&g, &p, &s).unwrap();
    let mut x = FieldState::zeros(&g);
    let shape = x.u.ux.dim();
    for ((_, j), v) in x.u.ux.indexed_iter_mut() {
        *v = (PI * m as f64 * (j as f64 + 0.5) / ny as f64).sin();
    }
    assert_eq!(shape.1, ny);
    let lam = 4.0 / g.dy().powi(2) * (PI * m as f64 / (2.0 * ny as f64)).sin().powi(2);
    let factor = 1.0 / (1.0 + p.nu * s.dt * lam);
    let y = st.advance(&x, 10).unwrap();
    let expect = x.u.ux.mapv(|v| v * factor.powi(10));
    let err = (&y.u.ux - &expect).iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    assert!(err < 1e-13, "error {err:e}");
    assert!(y.u.uy.iter().all(|v| v.abs() < 1e-14));
    assert!(y.phi.iter().all(|&v| v == 0.0));
}

#[test]
fn unforced_energy_never_increases() {
    let g = grid(16, 16);
    let p = ModelParams {
        forcing: Forcing::Zero,
        ..Default::default()
    };
    let st = Stepper::new(&g, &p, &SchemeConfig::default()).unwrap();
    let x = random_state(&g, &p, &InitSpec::default()).unwrap();
    let out = st.run_steps(&x, 200, 50, |_, _| Ok(())).unwrap();
    let mut prev = energy_j(&g, &p, &x.u, &x.phi_pair()).total;
    for r in &out.ledger {
        assert!(r.j <= prev, "J rose from {prev} to {} at t = {}", r.j, r.t);
        prev = r.j;
    }
}

#[test]
fn runs_are_bitwise_deterministic() {
    let g = grid(16, 8);
    let p = ModelParams {
        forcing: Forcing::Channel { amplitude: 2.0 },
        ..Default::default()
    };
    let st = Stepper::new(&g, &p, &SchemeConfig::default()).unwrap();
    let x = random_state(&g, &p, &InitSpec { seed: 9, ..Default::default() }).unwrap();
    assert_eq!(st.advance(&x, 30).unwrap(), st.advance(&x, 30).unwrap());
}

#[test]
fn galerkin_mode_conserves_mass_and_stays_in_span() {
    let g = grid(8, 8);
    let p = ModelParams {
        forcing: Forcing::Channel { amplitude: 1.0 },
        ..Default::default()
    };
    let s = SchemeConfig {
        mode: SchemeMode::SpectralGalerkin,
        n_modes: 12,
        ..Default::default()
    };
    let st = Stepper::new(&g, &p, &s).unwrap();
    let x = random_state(&g, &p, &InitSpec { mean_phi: 0.3, ..Default::default() }).unwrap();
    let y = st.advance(&x, 20).unwrap();
    assert!(mass_drift(&x, &y) < 1e-13);
    let gb = st.galerkin().unwrap();
    let proj = gb.project_velocity(&y.u);
    let err = (&proj - &y.u).max_abs();
    assert!(err < 1e-12, "velocity left the Galerkin span: {err:e}");
}
