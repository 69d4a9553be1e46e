//! Time stepping for the coupled system.
//!
//! Each step advances the Cahn-Hilliard part with the dynamic boundary
//! condition (linear terms implicit, `f`, `g` explicit with stabilization),
//! then the momentum equation with the capillary force built from the new
//! chemical potential, implicit viscosity and a pressure projection.

pub mod galerkin;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::banded::{BandMatrix, BandedLu};
use crate::diagnostics::{ledger_entry, EnergyReport};
use crate::error::{Error, Result};
use crate::fields::{BulkSurface, VectorField, WallField};
use crate::grid::Grid;
use crate::operators::stencil::{divergence, gradient};
use crate::operators::{solve_complex, Operators};
use crate::physics::ModelParams;
use crate::spectral::second_difference_symbol;
use crate::state::FieldState;

pub use galerkin::GalerkinBasis;

/// Any field exceeding this magnitude aborts the run.
pub const BLOWUP_LIMIT: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchemeMode {
    ProjectionFd,
    SpectralGalerkin,
}

impl SchemeMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "projection-fd" => Ok(SchemeMode::ProjectionFd),
            "spectral-galerkin" => Ok(SchemeMode::SpectralGalerkin),
            other => Err(Error::Parameter(format!(
                "scheme.mode must be projection-fd or spectral-galerkin, got '{other}'"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SchemeMode::ProjectionFd => "projection-fd",
            SchemeMode::SpectralGalerkin => "spectral-galerkin",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub dt: f64,
    pub s_bulk: f64,
    pub s_wall: f64,
    pub mode: SchemeMode,
    pub n_modes: usize,
    /// Keep the velocity frozen (pure Cahn-Hilliard dynamics).
    pub pin_velocity: bool,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            s_bulk: 3.0,
            s_wall: 3.0,
            mode: SchemeMode::ProjectionFd,
            n_modes: 0,
            pin_velocity: false,
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Parameter("scheme.dt must be > 0".into()));
        }
        if !(self.s_bulk >= 0.0 && self.s_wall >= 0.0) {
            return Err(Error::Parameter("stabilization constants must be >= 0".into()));
        }
        if self.mode == SchemeMode::SpectralGalerkin && self.n_modes == 0 {
            return Err(Error::Parameter("scheme.n_modes must be > 0 in spectral-galerkin mode".into()));
        }
        Ok(())
    }

    /// Checks the stabilization constants against `max |f'|`, `max |g'|` on
    /// the working range `[-r, r]`.
    pub fn check_stabilization(&self, params: &ModelParams, r: f64) -> Result<()> {
        let (lf, lg) = params.hypothesis.lipschitz_on(r);
        if self.s_bulk < lf || self.s_wall < lg {
            return Err(Error::Parameter(format!(
                "stabilization too small on [-{r:.3}, {r:.3}]: need S_bulk >= {lf:.3} and S_wall >= {lg:.3}, \
                 have {} and {}",
                self.s_bulk, self.s_wall
            )));
        }
        Ok(())
    }
}

/// Output of [`Stepper::run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub snapshots: Vec<FieldState>,
    pub ledger: Vec<EnergyReport>,
    pub steps: usize,
}

/// A stepper with all per-wavenumber factorizations prepared.
#[derive(Debug)]
pub struct Stepper {
    grid: Grid,
    params: ModelParams,
    scheme: SchemeConfig,
    ops: Operators,
    forcing: VectorField,
    ch: Vec<BandedLu>,
    visc_x: Vec<BandedLu>,
    visc_y: Vec<BandedLu>,
    galerkin: Option<GalerkinBasis>,
}

impl Stepper {
    pub fn new(grid: &Grid, params: &ModelParams, scheme: &SchemeConfig) -> Result<Self> {
        params.validate()?;
        scheme.validate()?;
        let ops = Operators::new(grid, params.alpha, params.beta)?;
        let xt = ops.transform().clone();
        let (nx, ny) = (grid.nx(), grid.ny());
        let (dx, dy) = (grid.dx(), grid.dy());
        let (dt, s, sw) = (scheme.dt, scheme.s_bulk, scheme.s_wall);
        let ih2 = 1.0 / (dy * dy);
        let dg = dt * params.gamma;
        let w = 2.0 / dy;

        // unknowns: [phi_b, phi_0, mu_0, ..., phi_{N-1}, mu_{N-1}, phi_t]
        let pi = |j: usize| 1 + 2 * j;
        let mi = |j: usize| 2 + 2 * j;
        let top = 2 * ny + 1;
        let ch = (0..xt.n_modes())
            .map(|m| {
                let sigma = second_difference_symbol(m, nx, dx);
                let mut a = BandMatrix::zeros(2 * ny + 2, 3, 3);
                let wall_diag = 1.0 / dt + sw + params.beta + params.alpha * sigma + w;
                a.add(0, 0, wall_diag);
                a.add(0, pi(0), -w);
                a.add(top, top, wall_diag);
                a.add(top, pi(ny - 1), -w);
                for j in 0..ny {
                    // phi_j - dt gamma lap_N mu = rhs
                    let r = pi(j);
                    a.add(r, r, 1.0);
                    let mut d = sigma;
                    if j > 0 {
                        a.add(r, mi(j - 1), -dg * ih2);
                        d += ih2;
                    }
                    if j + 1 < ny {
                        a.add(r, mi(j + 1), -dg * ih2);
                        d += ih2;
                    }
                    a.add(r, mi(j), dg * d);
                    // mu_j + lap_D phi - S phi_j = rhs
                    let r = mi(j);
                    a.add(r, r, 1.0);
                    a.add(r, pi(j), -sigma - 2.0 * ih2 - s);
                    if j == 0 {
                        a.add(r, pi(j), -ih2);
                        a.add(r, 0, 2.0 * ih2);
                    } else {
                        a.add(r, pi(j - 1), ih2);
                    }
                    if j == ny - 1 {
                        a.add(r, pi(j), -ih2);
                        a.add(r, top, 2.0 * ih2);
                    } else {
                        a.add(r, pi(j + 1), ih2);
                    }
                }
                a.factor()
            })
            .collect::<Result<Vec<_>>>()?;

        let dn = dt * params.nu;
        let helmholtz = |n: usize, wall_extra: f64, sigma: f64| {
            let mut a = BandMatrix::zeros(n, 1, 1);
            for j in 0..n {
                let mut d = 1.0 + dn * (sigma + 2.0 * ih2);
                if j == 0 || j == n - 1 {
                    d += dn * wall_extra * ih2;
                }
                a.add(j, j, d);
                if j > 0 {
                    a.add(j, j - 1, -dn * ih2);
                }
                if j + 1 < n {
                    a.add(j, j + 1, -dn * ih2);
                }
            }
            a.factor()
        };
        let visc_x = (0..xt.n_modes())
            .map(|m| helmholtz(ny, 1.0, second_difference_symbol(m, nx, dx)))
            .collect::<Result<Vec<_>>>()?;
        let visc_y = (0..xt.n_modes())
            .map(|m| helmholtz(ny - 1, 0.0, second_difference_symbol(m, nx, dx)))
            .collect::<Result<Vec<_>>>()?;

        let galerkin = match scheme.mode {
            SchemeMode::ProjectionFd => None,
            SchemeMode::SpectralGalerkin => Some(GalerkinBasis::new(grid, scheme.n_modes)?),
        };
        Ok(Self {
            grid: grid.clone(),
            params: params.clone(),
            scheme: scheme.clone(),
            forcing: params.forcing.field(grid),
            ops,
            ch,
            visc_x,
            visc_y,
            galerkin,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn params(&self) -> &ModelParams {
        &self.params
    }
    pub fn scheme(&self) -> &SchemeConfig {
        &self.scheme
    }
    pub fn operators(&self) -> &Operators {
        &self.ops
    }
    pub fn forcing(&self) -> &VectorField {
        &self.forcing
    }
    pub fn galerkin(&self) -> Option<&GalerkinBasis> {
        self.galerkin.as_ref()
    }

    /// Cahn-Hilliard substep with the dynamic boundary condition; returns
    /// the new order parameter and chemical potential.
    fn ch_step(&self, s: &FieldState) -> (BulkSurface, Array2<f64>) {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let (dt, sb, sw) = (self.scheme.dt, self.scheme.s_bulk, self.scheme.s_wall);
        let hyp = &self.params.hypothesis;
        let xt = self.ops.transform();

        let mut rhs_phi = s.phi.clone();
        if !self.scheme.pin_velocity {
            let adv = advection(g, &s.u, &s.phi);
            rhs_phi.scaled_add(-dt, &adv);
        }
        let rhs_mu = s.phi.mapv(|v| hyp.f(v) - sb * v);
        let wall_rhs = s.phi_gamma.map(|v| v * (1.0 / dt + sw) - hyp.g(v));

        let phi_hat = xt.forward(&rhs_phi);
        let mu_hat = xt.forward(&rhs_mu);
        let lo_hat = xt.forward_1d(&wall_rhs.lower);
        let up_hat = xt.forward_1d(&wall_rhs.upper);
        let mut out_phi = Array2::<Complex64>::zeros((nx, ny));
        let mut out_mu = Array2::<Complex64>::zeros((nx, ny));
        let mut out_lo = vec![Complex64::new(0.0, 0.0); nx];
        let mut out_up = out_lo.clone();
        let mut b = vec![Complex64::new(0.0, 0.0); 2 * ny + 2];
        for m in 0..xt.n_modes() {
            b[0] = lo_hat[m];
            for j in 0..ny {
                b[1 + 2 * j] = phi_hat[[m, j]];
                b[2 + 2 * j] = mu_hat[[m, j]];
            }
            b[2 * ny + 1] = up_hat[m];
            solve_complex(&self.ch[m], &mut b);
            out_lo[m] = b[0];
            out_up[m] = b[2 * ny + 1];
            for j in 0..ny {
                out_phi[[m, j]] = b[1 + 2 * j];
                out_mu[[m, j]] = b[2 + 2 * j];
            }
        }
        let phi = BulkSurface::new(
            xt.inverse(&out_phi),
            WallField {
                lower: xt.inverse_1d(&out_lo),
                upper: xt.inverse_1d(&out_up),
            },
        );
        (phi, xt.inverse(&out_mu))
    }

    /// Momentum substep; returns the projected velocity and the pressure.
    fn ns_step(&self, s: &FieldState, mu_new: &Array2<f64>) -> Result<(VectorField, Array2<f64>)> {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let dt = self.scheme.dt;
        let xt = self.ops.transform();

        let conv = convection(g, &s.u);
        let cap = capillary_force(g, &s.phi, mu_new);
        let mut rhs = s.u.clone();
        rhs = rhs.axpy(-dt, &conv);
        rhs = rhs.axpy(-dt * self.params.lambda, &cap);
        rhs = rhs.axpy(dt, &self.forcing);
        rhs.uy.column_mut(0).fill(0.0);
        rhs.uy.column_mut(ny).fill(0.0);

        let mut hx = xt.forward(&rhs.ux);
        let mut hy = xt.forward(&rhs.uy);
        let mut bx = vec![Complex64::new(0.0, 0.0); ny];
        let mut by = vec![Complex64::new(0.0, 0.0); ny - 1];
        for m in 0..xt.n_modes() {
            for j in 0..ny {
                bx[j] = hx[[m, j]];
            }
            solve_complex(&self.visc_x[m], &mut bx);
            for j in 0..ny {
                hx[[m, j]] = bx[j];
            }
            for j in 1..ny {
                by[j - 1] = hy[[m, j]];
            }
            solve_complex(&self.visc_y[m], &mut by);
            for j in 1..ny {
                hy[[m, j]] = by[j - 1];
            }
        }
        let mut star = VectorField {
            ux: xt.inverse(&hx),
            uy: xt.inverse(&hy),
        };
        star.uy.column_mut(0).fill(0.0);
        star.uy.column_mut(ny).fill(0.0);
        debug_assert_eq!(star.ux.dim(), (nx, ny));
        let (u, q) = self.ops.projector.project_with_potential(&star)?;
        Ok((u, q / dt))
    }

    /// One time step.
    pub fn step(&self, s: &FieldState) -> Result<FieldState> {
        let (phi, mu) = self.ch_step(s);
        let (u, p) = if self.scheme.pin_velocity {
            (s.u.clone(), s.p.clone())
        } else {
            self.ns_step(s, &mu)?
        };
        let mut next = FieldState {
            t: s.t + self.scheme.dt,
            u,
            phi: phi.bulk,
            phi_gamma: phi.wall,
            mu,
            p,
        };
        if let Some(gb) = &self.galerkin {
            next = gb.project_state(&next)?;
        }
        self.guard(&next)?;
        Ok(next)
    }

    fn guard(&self, s: &FieldState) -> Result<()> {
        let checks = [
            ("u", s.u.max_abs()),
            ("phi", max_abs(&s.phi)),
            ("phi_gamma", s.phi_gamma.max_abs()),
            ("mu", max_abs(&s.mu)),
        ];
        for (name, v) in checks {
            if !(v <= BLOWUP_LIMIT) {
                return Err(Error::BlowUp {
                    t: s.t,
                    quantity: name,
                    value: v,
                });
            }
        }
        if !self.scheme.pin_velocity {
            let div = max_abs(&divergence(&self.grid, &s.u));
            if div > 1e-10 {
                return Err(Error::Solver {
                    what: "projection",
                    residual: div,
                });
            }
        }
        Ok(())
    }

    /// Energy bookkeeping for the step `prev -> next`.
    pub fn energy_report(&self, prev: &FieldState, next: &FieldState) -> EnergyReport {
        ledger_entry(&self.ops, &self.params, &self.forcing, prev, next, self.scheme.dt)
    }

    /// Number of steps covering `t_end`, which must be at least one step.
    pub fn steps_for(&self, t_end: f64) -> Result<usize> {
        let n = (t_end / self.scheme.dt).round();
        if !(n >= 1.0) {
            return Err(Error::Parameter(format!(
                "horizon T = {t_end} is shorter than one step dt = {}",
                self.scheme.dt
            )));
        }
        Ok(n as usize)
    }

    /// Advances `steps` steps, retaining a snapshot every `cadence` steps
    /// (plus the initial state). `on_step` sees every accepted step.
    pub fn run_steps(
        &self,
        initial: &FieldState,
        steps: usize,
        cadence: usize,
        mut on_step: impl FnMut(&FieldState, &EnergyReport) -> Result<()>,
    ) -> Result<RunOutput> {
        let cadence = cadence.max(1);
        let mut cur = initial.clone();
        let mut snapshots = vec![cur.clone()];
        let mut ledger = Vec::with_capacity(steps);
        for n in 1..=steps {
            let next = self.step(&cur)?;
            let rep = self.energy_report(&cur, &next);
            on_step(&next, &rep)?;
            ledger.push(rep);
            if n % cadence == 0 {
                snapshots.push(next.clone());
            }
            cur = next;
        }
        Ok(RunOutput {
            snapshots,
            ledger,
            steps,
        })
    }

    pub fn run(&self, initial: &FieldState, t_end: f64, cadence: usize) -> Result<RunOutput> {
        let steps = self.steps_for(t_end)?;
        self.run_steps(initial, steps, cadence, |_, _| Ok(()))
    }

    /// Advances without bookkeeping.
    pub fn advance(&self, initial: &FieldState, steps: usize) -> Result<FieldState> {
        let mut cur = initial.clone();
        for _ in 0..steps {
            cur = self.step(&cur)?;
        }
        Ok(cur)
    }
}

fn max_abs(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// `div(u phi)` with face-averaged `phi`; walls carry no flux.
pub fn advection(g: &Grid, u: &VectorField, phi: &Array2<f64>) -> Array2<f64> {
    let (nx, ny) = (g.nx(), g.ny());
    let mut flux = VectorField::zeros(nx, ny);
    for i in 0..nx {
        let im = (i + nx - 1) % nx;
        for j in 0..ny {
            flux.ux[[i, j]] = u.ux[[i, j]] * 0.5 * (phi[[im, j]] + phi[[i, j]]);
        }
        for j in 1..ny {
            flux.uy[[i, j]] = u.uy[[i, j]] * 0.5 * (phi[[i, j - 1]] + phi[[i, j]]);
        }
    }
    divergence(g, &flux)
}

/// Capillary force `phi grad mu` on the faces, with `phi` averaged to faces.
pub fn capillary_force(g: &Grid, phi: &Array2<f64>, mu: &Array2<f64>) -> VectorField {
    let (nx, ny) = (g.nx(), g.ny());
    let mut f = gradient(g, mu);
    for i in 0..nx {
        let im = (i + nx - 1) % nx;
        for j in 0..ny {
            f.ux[[i, j]] *= 0.5 * (phi[[im, j]] + phi[[i, j]]);
        }
        for j in 1..ny {
            f.uy[[i, j]] *= 0.5 * (phi[[i, j - 1]] + phi[[i, j]]);
        }
    }
    f
}

/// Conservative-form `(u . grad) u` on the MAC grid; energy-neutral for
/// discretely divergence-free `u`.
pub fn convection(g: &Grid, u: &VectorField) -> VectorField {
    let (nx, ny) = (g.nx(), g.ny());
    let (idx, idy) = (1.0 / g.dx(), 1.0 / g.dy());
    let (a, b) = (&u.ux, &u.uy);
    // products at cell centres
    let uu = Array2::from_shape_fn((nx, ny), |(i, j)| {
        let v = 0.5 * (a[[i, j]] + a[[(i + 1) % nx, j]]);
        v * v
    });
    let vv = Array2::from_shape_fn((nx, ny), |(i, j)| {
        let v = 0.5 * (b[[i, j]] + b[[i, j + 1]]);
        v * v
    });
    // u v at corners (x_i, y_j), zero on the walls
    let uv = Array2::from_shape_fn((nx, ny + 1), |(i, j)| {
        if j == 0 || j == ny {
            return 0.0;
        }
        let im = (i + nx - 1) % nx;
        0.5 * (a[[i, j - 1]] + a[[i, j]]) * 0.5 * (b[[im, j]] + b[[i, j]])
    });
    let mut out = VectorField::zeros(nx, ny);
    for i in 0..nx {
        let im = (i + nx - 1) % nx;
        let ip = (i + 1) % nx;
        for j in 0..ny {
            out.ux[[i, j]] = (uu[[i, j]] - uu[[im, j]]) * idx + (uv[[i, j + 1]] - uv[[i, j]]) * idy;
        }
        for j in 1..ny {
            out.uy[[i, j]] = (uv[[ip, j]] - uv[[i, j]]) * idx + (vv[[i, j]] - vv[[i, j - 1]]) * idy;
        }
    }
    out
}

/// Relative drift of the bulk mean, `|m(t) - m(0)| / max(1, |m(0)|)`.
pub fn mass_drift(initial: &FieldState, current: &FieldState) -> f64 {
    let m0 = initial.mean_phi();
    (current.mean_phi() - m0).abs() / m0.abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ChannelDomain;
    use crate::operators::stencil::vector_dot;
    use crate::state::{random_state, InitSpec};

    fn setup(n: usize) -> (Grid, ModelParams, SchemeConfig) {
        let g = Grid::new(ChannelDomain::new(1.0, 1.0, n, n)).unwrap();
        (g, ModelParams::default(), SchemeConfig::default())
    }

    #[test]
    fn zero_state_is_fixed() {
        let (g, p, s) = setup(8);
        let st = Stepper::new(&g, &p, &s).unwrap();
        let z = FieldState::zeros(&g);
        let n = st.step(&z).unwrap();
        assert!(n.u.max_abs() == 0.0 && max_abs(&n.phi) == 0.0 && n.phi_gamma.max_abs() == 0.0);
        assert_eq!(n.t, s.dt);
    }

    #[test]
    fn convection_is_energy_neutral() {
        let (g, p, _) = setup(16);
        let s = random_state(&g, &p, &InitSpec::default()).unwrap();
        let c = convection(&g, &s.u);
        let e = vector_dot(&g, &c, &s.u);
        assert!(e.abs() < 1e-12 * vector_dot(&g, &s.u, &s.u).max(1.0), "{e}");
    }

    #[test]
    fn advection_and_capillarity_cancel() {
        let (g, p, _) = setup(16);
        let s = random_state(&g, &p, &InitSpec::default()).unwrap();
        let a = crate::operators::stencil::bulk_dot(&g, &advection(&g, &s.u, &s.phi), &s.mu);
        let b = vector_dot(&g, &capillary_force(&g, &s.phi, &s.mu), &s.u);
        assert!((a + b).abs() < 1e-11 * a.abs().max(1.0));
    }

    #[test]
    fn step_conserves_mass_and_divergence() {
        let (g, p, s) = setup(16);
        let st = Stepper::new(&g, &p, &s).unwrap();
        let init = random_state(&g, &p, &InitSpec { mean_phi: 0.2, ..Default::default() }).unwrap();
        let out = st.run_steps(&init, 20, 5, |_, _| Ok(())).unwrap();
        assert_eq!(out.snapshots.len(), 5);
        let last = out.snapshots.last().unwrap();
        assert!(mass_drift(&init, last) < 1e-13);
        assert!(max_abs(&divergence(&g, &last.u)) < 1e-10);
    }
}
