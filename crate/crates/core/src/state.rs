//! Simulation state and seeded initial data.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{BulkSurface, VectorField, WallField};
use crate::grid::Grid;
use crate::physics::{chemical_potential, energy_j, ModelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub t: f64,
    pub u: VectorField,
    pub phi: Array2<f64>,
    pub phi_gamma: WallField,
    pub mu: Array2<f64>,
    pub p: Array2<f64>,
}

impl FieldState {
    pub fn zeros(g: &Grid) -> Self {
        Self {
            t: 0.0,
            u: VectorField::zeros(g.nx(), g.ny()),
            phi: g.zeros_scalar(),
            phi_gamma: g.zeros_wall(),
            mu: g.zeros_scalar(),
            p: g.zeros_scalar(),
        }
    }

    /// Builds a state from velocity and order parameter; `mu` is evaluated
    /// from `phi` and the pressure starts at zero.
    pub fn from_fields(g: &Grid, params: &ModelParams, u: VectorField, phi: BulkSurface) -> Result<Self> {
        crate::grid::check_shape(g.ux_shape(), u.ux.dim())?;
        crate::grid::check_shape(g.uy_shape(), u.uy.dim())?;
        let mu = chemical_potential(g, &params.hypothesis, &phi)?;
        Ok(Self {
            t: 0.0,
            u,
            phi: phi.bulk,
            phi_gamma: phi.wall,
            mu,
            p: g.zeros_scalar(),
        })
    }

    pub fn phi_pair(&self) -> BulkSurface {
        BulkSurface::new(self.phi.clone(), self.phi_gamma.clone())
    }

    pub fn mean_phi(&self) -> f64 {
        self.phi.mean().unwrap_or(0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite()
            && self.phi.iter().all(|v| v.is_finite())
            && self.phi_gamma.is_finite()
            && self.mu.iter().all(|v| v.is_finite())
    }
}

/// Parameters of the seeded smooth random initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitSpec {
    pub seed: u64,
    /// Largest x and y wavenumber used.
    pub modes: usize,
    pub phi_amplitude: f64,
    pub u_amplitude: f64,
    pub mean_phi: f64,
}

impl Default for InitSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            modes: 3,
            phi_amplitude: 0.5,
            u_amplitude: 0.5,
            mean_phi: 0.0,
        }
    }
}

/// Smooth random initial state. The velocity is the discrete curl of a
/// corner streamfunction vanishing on the walls, hence exactly
/// divergence-free on the grid. The wall order parameter is the trace of
/// the same smooth function, and the bulk mean is set to `mean_phi`.
pub fn random_state(g: &Grid, params: &ModelParams, spec: &InitSpec) -> Result<FieldState> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let k = spec.modes.max(1);
    let (lx, ly) = (g.lx(), g.ly());
    let mut terms = vec![];
    for kx in 0..=k {
        for ky in 0..=k {
            let a: f64 = rng.gen_range(-1.0..1.0);
            let th: f64 = rng.gen_range(0.0..2.0 * PI);
            let w = 1.0 / (1.0 + (kx * kx + ky * ky) as f64);
            terms.push((kx as f64, ky as f64, a * w, th));
        }
    }
    let phi_fn = |x: f64, y: f64| {
        terms
            .iter()
            .map(|&(kx, ky, a, th)| a * (2.0 * PI * kx * x / lx + th).cos() * (PI * ky * y / ly).cos())
            .sum::<f64>()
    };
    let mut phi = g.sample_cells(phi_fn);
    let mut wall = g.sample_walls(phi_fn);
    let scale = {
        let m = phi.iter().chain(wall.lower.iter()).fold(0.0_f64, |m, v| m.max(v.abs()));
        if m > 0.0 {
            spec.phi_amplitude / m
        } else {
            0.0
        }
    };
    phi.mapv_inplace(|v| v * scale);
    wall = wall.map(|v| v * scale);
    let shift = spec.mean_phi - phi.mean().unwrap_or(0.0);
    phi.mapv_inplace(|v| v + shift);
    wall = wall.map(|v| v + shift);

    let mut psi_terms = vec![];
    for kx in 0..=k {
        for ky in 1..=k {
            let a: f64 = rng.gen_range(-1.0..1.0);
            let th: f64 = rng.gen_range(0.0..2.0 * PI);
            let w = 1.0 / (1.0 + (kx * kx + ky * ky) as f64);
            psi_terms.push((kx as f64, ky as f64, a * w, th));
        }
    }
    let psi = Array2::from_shape_fn((g.nx(), g.ny() + 1), |(i, j)| {
        let (x, y) = (g.x_face(i), g.y_face(j));
        psi_terms
            .iter()
            .map(|&(kx, ky, a, th)| a * (2.0 * PI * kx * x / lx + th).cos() * (PI * ky * y / ly).sin())
            .sum::<f64>()
    });
    let mut u = streamfunction_velocity(g, &psi);
    let umax = u.max_abs();
    if umax > 0.0 {
        u = u.scaled(spec.u_amplitude / umax);
    }
    FieldState::from_fields(g, params, u, BulkSurface::new(phi, wall))
}

/// Discrete curl of a corner-located streamfunction `psi[(i, j)]` at
/// `(x_i, y_j)`; `psi` must vanish on `j = 0` and `j = Ny`.
pub fn streamfunction_velocity(g: &Grid, psi: &Array2<f64>) -> VectorField {
    let (nx, ny) = (g.nx(), g.ny());
    let mut u = VectorField::zeros(nx, ny);
    for i in 0..nx {
        for j in 0..ny {
            u.ux[[i, j]] = (psi[[i, j + 1]] - psi[[i, j]]) / g.dy();
        }
        for j in 1..ny {
            u.uy[[i, j]] = -(psi[[(i + 1) % nx, j]] - psi[[i, j]]) / g.dx();
        }
    }
    u
}

/// Rescales the velocity so that `J(u, phi)` equals `target`; requires
/// `target` to exceed the order-parameter part of `J`.
pub fn scale_to_energy(g: &Grid, params: &ModelParams, state: &mut FieldState, target: f64) -> Result<()> {
    let e = energy_j(g, params, &state.u, &state.phi_pair());
    let rest = e.total - e.kinetic;
    if !(target > rest) || e.kinetic <= 0.0 {
        return Err(Error::Parameter(format!(
            "cannot reach J = {target}: order-parameter part alone is {rest}"
        )));
    }
    let s = ((target - rest) / e.kinetic).sqrt();
    state.u = state.u.scaled(s);
    Ok(())
}

/// Adds a seeded perturbation of `H x V_I` size `eps`: a solenoidal velocity
/// and a mean-free order parameter, so the bulk mean is unchanged.
pub fn perturb(g: &Grid, params: &ModelParams, state: &FieldState, eps: f64, seed: u64) -> Result<FieldState> {
    let spec = InitSpec {
        seed,
        ..Default::default()
    };
    let d = random_state(g, params, &spec)?;
    let m = d.mean_phi();
    let dphi = BulkSurface::new(d.phi.mapv(|v| v - m), d.phi_gamma.map(|v| v - m));
    let ops = crate::operators::Operators::new(g, params.alpha, params.beta)?;
    let size = (crate::operators::stencil::vector_dot(g, &d.u, &d.u) + params.lambda * ops.h1_sigma_sq(&dphi)).sqrt();
    let s = eps / size;
    let mut out = FieldState::from_fields(g, params, state.u.axpy(s, &d.u), state.phi_pair().axpy(s, &dphi))?;
    out.t = state.t;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ChannelDomain;
    use crate::operators::stencil::divergence;

    #[test]
    fn random_state_is_solenoidal_and_seeded() {
        let g = Grid::new(ChannelDomain::new(1.0, 1.0, 16, 16)).unwrap();
        let p = ModelParams::default();
        let spec = InitSpec {
            seed: 7,
            mean_phi: 0.1,
            ..Default::default()
        };
        let a = random_state(&g, &p, &spec).unwrap();
        let b = random_state(&g, &p, &spec).unwrap();
        assert_eq!(a, b);
        assert!(divergence(&g, &a.u).iter().all(|v| v.abs() < 1e-12));
        assert_eq!(a.u.wall_normal_max(), 0.0);
        assert!((a.mean_phi() - 0.1).abs() < 1e-14);
        let c = random_state(&g, &p, &InitSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(a, c);
        let q = perturb(&g, &p, &a, 1e-8, 9).unwrap();
        assert!((q.mean_phi() - a.mean_phi()).abs() < 1e-15);
        assert!(divergence(&g, &q.u).iter().all(|v| v.abs() < 1e-12));
        let ops = crate::operators::Operators::new(&g, p.alpha, p.beta).unwrap();
        let d = crate::diagnostics::separation(&ops, p.lambda, &a, &q);
        assert!((d.sqrt() - 1e-8).abs() < 1e-14);
    }

    #[test]
    fn energy_scaling_hits_target() {
        let g = Grid::new(ChannelDomain::new(1.0, 1.0, 16, 16)).unwrap();
        let p = ModelParams::default();
        let mut s = random_state(&g, &p, &InitSpec::default()).unwrap();
        assert!(scale_to_energy(&g, &p, &mut s.clone(), 1e-3).is_err());
        for target in [5.0, 10.0, 100.0] {
            scale_to_energy(&g, &p, &mut s, target).unwrap();
            let e = energy_j(&g, &p, &s.u, &s.phi_pair());
            assert!((e.total - target).abs() < 1e-10 * target);
        }
    }
}
