//! Energy ledger, absorbing-set fit, continuous-dependence (Gronwall) check
//! and time-averaged regularity bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{BulkSurface, VectorField};
use crate::operators::stencil::{neumann_gradient_form, vector_dot, wall_dot};
use crate::operators::Operators;
use crate::physics::{energy_j, ModelParams};
use crate::state::FieldState;

/// One row of the energy ledger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub t: f64,
    pub j: f64,
    pub dj_dt: f64,
    /// `lambda ||phi_t||^2_{L2(Gamma)}`
    pub wall_dissipation: f64,
    /// `lambda gamma ||grad mu||^2`
    pub chem_dissipation: f64,
    /// `nu ||grad u||^2`
    pub viscous_dissipation: f64,
    /// `(h, u)`
    pub forcing_power: f64,
    /// Per-step defect of the exact energy identity,
    /// `J^{n+1} - J^n + 2 dt (D^{n+1} - (h, u^{n+1}))`.
    pub defect: f64,
    /// `dJ/dt + D + delta J - rho` for a fitted `(delta, rho)`; NaN until set.
    pub residual: f64,
}

impl EnergyReport {
    pub fn dissipation(&self) -> f64 {
        self.wall_dissipation + self.chem_dissipation + self.viscous_dissipation
    }

    pub const CSV_HEADER: &'static str =
        "t,J,dJ_dt,wall_dissipation,chem_dissipation,viscous_dissipation,forcing_power,defect,residual";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            self.t,
            self.j,
            self.dj_dt,
            self.wall_dissipation,
            self.chem_dissipation,
            self.viscous_dissipation,
            self.forcing_power,
            self.defect,
            self.residual
        )
    }
}

/// Ledger entry for the interval `prev -> next` of length `dt`.
pub fn ledger_entry(
    ops: &Operators,
    params: &ModelParams,
    forcing: &VectorField,
    prev: &FieldState,
    next: &FieldState,
    dt: f64,
) -> EnergyReport {
    let g = ops.grid();
    let j0 = energy_j(g, params, &prev.u, &prev.phi_pair()).total;
    let j1 = energy_j(g, params, &next.u, &next.phi_pair()).total;
    let phit = next.phi_gamma.zip_map(&prev.phi_gamma, |a, b| (a - b) / dt);
    let wall = params.lambda * wall_dot(g, &phit, &phit);
    let chem = params.lambda * params.gamma * neumann_gradient_form(g, &next.mu, &next.mu);
    let visc = params.nu * ops.grad_u_sq(&next.u);
    let power = vector_dot(g, forcing, &next.u);
    EnergyReport {
        t: next.t,
        j: j1,
        dj_dt: (j1 - j0) / dt,
        wall_dissipation: wall,
        chem_dissipation: chem,
        viscous_dissipation: visc,
        forcing_power: power,
        defect: j1 - j0 + 2.0 * dt * (wall + chem + visc - power),
        residual: f64::NAN,
    }
}

fn uniform_spacing(snaps: &[FieldState]) -> Result<f64> {
    if snaps.len() < 2 {
        return Err(Error::Precondition("need at least two snapshots".into()));
    }
    let dt = snaps[1].t - snaps[0].t;
    if !(dt > 0.0) {
        return Err(Error::Precondition("snapshot times must increase".into()));
    }
    for w in snaps.windows(2) {
        if ((w[1].t - w[0].t) - dt).abs() > 1e-9 * dt {
            return Err(Error::Precondition("non-uniform snapshot cadence".into()));
        }
    }
    Ok(dt)
}

/// Ledger from retained snapshots (backward differences at the cadence).
pub fn dissipation_ledger(
    ops: &Operators,
    params: &ModelParams,
    snaps: &[FieldState],
) -> Result<Vec<EnergyReport>> {
    let dt = uniform_spacing(snaps)?;
    let h = params.forcing.field(ops.grid());
    Ok(snaps
        .windows(2)
        .map(|w| ledger_entry(ops, params, &h, &w[0], &w[1], dt))
        .collect())
}

/// Fills `residual = dJ/dt + D + delta J - rho` into each row.
pub fn apply_absorption_fit(ledger: &mut [EnergyReport], fit: &AbsorptionFit) {
    for r in ledger.iter_mut() {
        r.residual = r.dj_dt + r.dissipation() + fit.delta * r.j - fit.delta * fit.rho_over_delta;
    }
}

/// Largest `(J^{n+1} - J^n) / dt^2` over a ledger with step `dt`.
pub fn max_increase_ratio(ledger: &[EnergyReport], dt: f64) -> f64 {
    ledger
        .iter()
        .map(|r| r.dj_dt * dt / (dt * dt))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest per-step defect `|e_n|`.
pub fn max_defect(ledger: &[EnergyReport]) -> f64 {
    ledger.iter().fold(0.0_f64, |m, r| m.max(r.defect.abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionFit {
    pub delta: f64,
    pub rho_over_delta: f64,
    pub rho: f64,
    /// `max_{i,t} J_i(t) - (e^{-delta t} J_i(0) + rho/delta)`
    pub max_violation: f64,
    /// Tail level of each run.
    pub plateaus: Vec<f64>,
    /// Common absorbing level.
    pub rho1: f64,
    /// `(max plateau - min plateau) / max plateau`
    pub plateau_spread: f64,
}

/// A `J` time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySeries {
    pub t: Vec<f64>,
    pub j: Vec<f64>,
}

impl EnergySeries {
    pub fn from_ledger(j0: f64, t0: f64, ledger: &[EnergyReport]) -> Self {
        let mut t = vec![t0];
        let mut j = vec![j0];
        for r in ledger {
            t.push(r.t);
            j.push(r.j);
        }
        Self { t, j }
    }

    fn tail(&self) -> &[f64] {
        let t_end = *self.t.last().unwrap();
        let t0 = self.t[0];
        let cut = t_end - 0.1 * (t_end - t0);
        let k = self.t.iter().position(|&t| t >= cut).unwrap_or(0);
        &self.j[k..]
    }

    /// Relative change over the last 10% of the horizon.
    pub fn tail_relative_change(&self) -> f64 {
        let tail = self.tail();
        let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        (hi - lo) / mean.abs().max(1e-300)
    }

    pub fn plateau(&self) -> f64 {
        let tail = self.tail();
        tail.iter().sum::<f64>() / tail.len() as f64
    }
}

/// Relative tail change below which a run counts as plateaued.
pub const PLATEAU_TOL: f64 = 1e-3;
const DEFAULT_DELTA: f64 = 1e-3;

/// Joint fit of `J_i(t) <= e^{-delta t} J_i(0) + rho/delta + tol`.
///
/// `rho/delta` is the largest tail level. `delta` is the decay rate of
/// `ln(J - rho/delta)` regressed over the decaying parts of the runs, and is
/// then lowered until the bound holds for every run and time.
pub fn fit_absorption(runs: &[EnergySeries], tol: f64) -> Result<AbsorptionFit> {
    if runs.is_empty() {
        return Err(Error::Precondition("need at least one run".into()));
    }
    for (i, r) in runs.iter().enumerate() {
        if r.t.len() != r.j.len() || r.t.len() < 10 {
            return Err(Error::Precondition(format!("run {i}: too few samples")));
        }
        let c = r.tail_relative_change();
        if !(c < PLATEAU_TOL) {
            return Err(Error::NoPlateau(format!(
                "run {i}: relative change {c:.3e} over the last 10% of the horizon"
            )));
        }
    }
    let plateaus: Vec<f64> = runs.iter().map(|r| r.plateau()).collect();
    let a = plateaus.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pmin = plateaus.iter().cloned().fold(f64::INFINITY, f64::min);

    // regression of ln(J - A) on t for each decaying run; take the slowest rate
    let mut delta_reg = f64::INFINITY;
    for r in runs {
        let excess0 = r.j[0] - a;
        if excess0 <= 0.0 {
            continue;
        }
        let pts: Vec<(f64, f64)> = r
            .t
            .iter()
            .zip(r.j.iter())
            .filter(|(_, &j)| j - a > 1e-3 * excess0)
            .map(|(&t, &j)| (t - r.t[0], (j - a).ln()))
            .collect();
        if pts.len() < 3 {
            continue;
        }
        let n = pts.len() as f64;
        let (mt, my) = (
            pts.iter().map(|p| p.0).sum::<f64>() / n,
            pts.iter().map(|p| p.1).sum::<f64>() / n,
        );
        let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
        if sxx > 0.0 {
            let slope = sxy / sxx;
            if slope < 0.0 {
                delta_reg = delta_reg.min(-slope);
            }
        }
    }
    if !delta_reg.is_finite() {
        delta_reg = DEFAULT_DELTA;
    }

    // largest delta for which the bound holds, keeping a margin below `tol`
    let mut delta_max = f64::INFINITY;
    for r in runs {
        let j0 = r.j[0];
        for (&t, &j) in r.t.iter().zip(r.j.iter()).skip(1) {
            let ex = j - a - 0.5 * tol;
            let s = t - r.t[0];
            if ex > 0.0 && s > 0.0 {
                let d = if ex < j0 { -(ex / j0).ln() / s } else { 0.0 };
                delta_max = delta_max.min(d);
            }
        }
    }
    let delta = delta_reg.min(delta_max).max(1e-12);
    let max_violation = runs
        .iter()
        .flat_map(|r| {
            r.t.iter()
                .zip(r.j.iter())
                .map(move |(&t, &j)| j - ((-delta * (t - r.t[0])).exp() * r.j[0] + a))
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(AbsorptionFit {
        delta,
        rho_over_delta: a,
        rho: a * delta,
        max_violation,
        plateaus,
        rho1: a,
        plateau_spread: (a - pmin) / a.abs().max(1e-300),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GronwallReport {
    pub t: Vec<f64>,
    pub d_series: Vec<f64>,
    /// `L(t) = C (1 + |phi1|^2_{H2} + |phi2|^2_{H2} + |grad u2|^2 + |grad mu2|^2)`
    pub l_series: Vec<f64>,
    pub integral_l: Vec<f64>,
    /// `exp(int_0^T L)`
    pub m_t: f64,
    pub c: f64,
    /// `max_t D(t) / (D(0) exp(int_0^t L))`
    pub max_ratio: f64,
    pub slack: f64,
    pub separation_ok: bool,
}

/// Slack factor allowed over the calibrated Gronwall bound.
pub const GRONWALL_SLACK: f64 = 10.0;

fn check_pair(a: &[FieldState], b: &[FieldState]) -> Result<()> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Incompatible("runs have different lengths".into()));
    }
    for (x, y) in a.iter().zip(b.iter()) {
        if (x.t - y.t).abs() > 1e-12 * x.t.abs().max(1.0) {
            return Err(Error::Incompatible("runs have different snapshot times".into()));
        }
        if x.phi.dim() != y.phi.dim() || x.u.ux.dim() != y.u.ux.dim() {
            return Err(Error::Incompatible("runs have different grids".into()));
        }
    }
    let (m1, m2) = (a[0].mean_phi(), b[0].mean_phi());
    if (m1 - m2).abs() > 1e-12 * m1.abs().max(1.0) {
        return Err(Error::Incompatible(format!("mean mismatch ({m1} vs {m2})")));
    }
    Ok(())
}

/// `D = ||u1 - u2||^2 + lambda ||phi1 - phi2||^2_{H1 sigma}`.
pub fn separation(ops: &Operators, lambda: f64, a: &FieldState, b: &FieldState) -> f64 {
    let du = &a.u - &b.u;
    let dphi = &a.phi_pair() - &b.phi_pair();
    vector_dot(ops.grid(), &du, &du) + lambda * ops.h1_sigma_sq(&dphi)
}

/// The bracket of `L(t)` without the constant `C`.
pub fn gronwall_integrand(ops: &Operators, a: &FieldState, b: &FieldState) -> f64 {
    let h1 = ops.h2_sigma(&a.phi_pair());
    let h2 = ops.h2_sigma(&b.phi_pair());
    1.0 + h1 * h1 + h2 * h2 + ops.grad_u_sq(&b.u) + ops.grad_mu_sq(&b.mu)
}

fn cumulative_trapezoid(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; t.len()];
    for k in 1..t.len() {
        out[k] = out[k - 1] + 0.5 * (t[k] - t[k - 1]) * (y[k] + y[k - 1]);
    }
    out
}

/// Smallest `C` (floored at 1e-6) for which `D(t) <= D(0) exp(C int_0^t Q)`
/// holds on a reference pair.
pub fn calibrate_gronwall(ops: &Operators, lambda: f64, a: &[FieldState], b: &[FieldState]) -> Result<f64> {
    check_pair(a, b)?;
    let t: Vec<f64> = a.iter().map(|s| s.t).collect();
    let q: Vec<f64> = a.iter().zip(b).map(|(x, y)| gronwall_integrand(ops, x, y)).collect();
    let iq = cumulative_trapezoid(&t, &q);
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| separation(ops, lambda, x, y)).collect();
    let mut c = 1e-6_f64;
    if d[0] > 0.0 {
        for k in 1..t.len() {
            if d[k] > 0.0 && iq[k] > 0.0 {
                c = c.max((d[k] / d[0]).ln() / iq[k]);
            }
        }
    }
    Ok(c)
}

pub fn gronwall_check(
    ops: &Operators,
    lambda: f64,
    a: &[FieldState],
    b: &[FieldState],
    c: f64,
) -> Result<GronwallReport> {
    check_pair(a, b)?;
    let t: Vec<f64> = a.iter().map(|s| s.t).collect();
    let l: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| c * gronwall_integrand(ops, x, y))
        .collect();
    let il = cumulative_trapezoid(&t, &l);
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| separation(ops, lambda, x, y)).collect();
    let mut max_ratio = 0.0_f64;
    let mut ok = true;
    for k in 0..t.len() {
        let bound = d[0] * il[k].exp();
        let ratio = if bound > 0.0 {
            d[k] / bound
        } else if d[k] > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        max_ratio = max_ratio.max(ratio);
        if ratio > GRONWALL_SLACK {
            ok = false;
        }
    }
    Ok(GronwallReport {
        m_t: il.last().copied().unwrap_or(0.0).exp(),
        t,
        d_series: d,
        l_series: l,
        integral_l: il,
        c,
        max_ratio,
        slack: GRONWALL_SLACK,
        separation_ok: ok,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeAveragedReport {
    pub ell: f64,
    pub window_start: Vec<f64>,
    pub grad_u: Vec<f64>,
    pub h2: Vec<f64>,
    pub dual_sq: Vec<f64>,
    /// Sum of the three windowed quantities.
    pub rho2_window: Vec<f64>,
    pub rho2: f64,
    pub median: f64,
    pub sup_over_median: f64,
}

/// Time derivatives of snapshot data by centred differences (one-sided at
/// the ends).
pub fn snapshot_derivatives(snaps: &[FieldState], dt: f64) -> Vec<(VectorField, BulkSurface)> {
    let n = snaps.len();
    (0..n)
        .map(|k| {
            let (a, b, h) = if k == 0 {
                (0, 1.min(n - 1), dt)
            } else if k == n - 1 {
                (k - 1, k, dt)
            } else {
                (k - 1, k + 1, 2.0 * dt)
            };
            let du = (&snaps[b].u - &snaps[a].u).scaled(1.0 / h);
            let dphi = (&snaps[b].phi_pair() - &snaps[a].phi_pair()).scaled(1.0 / h);
            (du, dphi)
        })
        .collect()
}

/// `||u_t||_{V*} + ||phi_t||_{(H1 sigma)*}` for each snapshot.
pub fn derivative_dual_norms(ops: &Operators, snaps: &[FieldState], dt: f64) -> Result<Vec<f64>> {
    snapshot_derivatives(snaps, dt)
        .iter()
        .map(|(du, dphi)| {
            let mut dphi = dphi.clone();
            // remove roundoff-level bulk mean so the dual norm is defined
            let m = dphi.bulk.mean().unwrap_or(0.0);
            dphi.bulk.mapv_inplace(|v| v - m);
            Ok(ops.dual_norm_v(du)? + ops.dual_norm_h1sigma(&dphi)?)
        })
        .collect()
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Sliding-window integrals over `[t, t + ell]` of `||grad u||^2`,
/// `lambda ||phi||^2_{H2}` and `(int ||u_t||_{V*} + ||phi_t||_*)^2`, for
/// windows starting after the burn-in fraction of the run.
pub fn time_averaged_bounds(
    ops: &Operators,
    params: &ModelParams,
    snaps: &[FieldState],
    ell: f64,
    burn_in_fraction: f64,
) -> Result<TimeAveragedReport> {
    let dt = uniform_spacing(snaps)?;
    let k = (ell / dt).round() as usize;
    if k == 0 || (k as f64 * dt - ell).abs() > 1e-9 * ell {
        return Err(Error::Precondition("ell must be a multiple of the snapshot spacing".into()));
    }
    if k >= snaps.len() {
        return Err(Error::Precondition("window longer than run".into()));
    }
    let gu: Vec<f64> = snaps.iter().map(|s| ops.grad_u_sq(&s.u)).collect();
    let h2: Vec<f64> = snaps
        .iter()
        .map(|s| params.lambda * ops.h2_sigma(&s.phi_pair()).powi(2))
        .collect();
    let dn = derivative_dual_norms(ops, snaps, dt)?;
    let t0 = snaps[0].t;
    let t_end = snaps.last().unwrap().t;
    let burn = t0 + burn_in_fraction * (t_end - t0);
    let trap = |v: &[f64]| {
        let n = v.len();
        dt * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[n - 1]))
    };
    let mut rep = TimeAveragedReport {
        ell,
        window_start: vec![],
        grad_u: vec![],
        h2: vec![],
        dual_sq: vec![],
        rho2_window: vec![],
        rho2: 0.0,
        median: 0.0,
        sup_over_median: 0.0,
    };
    for s in 0..snaps.len() - k {
        if snaps[s].t < burn - 1e-12 {
            continue;
        }
        let a = trap(&gu[s..=s + k]);
        let b = trap(&h2[s..=s + k]);
        let c = trap(&dn[s..=s + k]).powi(2);
        rep.window_start.push(snaps[s].t);
        rep.grad_u.push(a);
        rep.h2.push(b);
        rep.dual_sq.push(c);
        rep.rho2_window.push(a + b + c);
    }
    if rep.rho2_window.is_empty() {
        return Err(Error::Precondition("window longer than the post-burn-in run".into()));
    }
    rep.rho2 = rep.rho2_window.iter().cloned().fold(0.0, f64::max);
    rep.median = median(&rep.rho2_window);
    rep.sup_over_median = if rep.median > 0.0 { rep.rho2 / rep.median } else { 1.0 };
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64, t_end: f64, n: usize) -> EnergySeries {
        let t: Vec<f64> = (0..=n).map(|k| t_end * k as f64 / n as f64).collect();
        let j = t.iter().map(|&s| f(s)).collect();
        EnergySeries { t, j }
    }

    #[test]
    fn synthetic_exponential_fit() {
        let s = series(|t| 5.0 * (-2.0 * t).exp() + 3.0, 10.0, 2000);
        let fit = fit_absorption(&[s], 1e-6).unwrap();
        assert!((fit.delta - 2.0).abs() < 0.02, "{fit:?}");
        assert!((fit.rho_over_delta - 3.0).abs() < 0.03);
        assert!(fit.max_violation <= 1e-6);
    }

    #[test]
    fn constant_series_fit() {
        let s = series(|_| 4.2, 5.0, 100);
        let fit = fit_absorption(&[s], 1e-6).unwrap();
        assert!(fit.delta > 0.0 && fit.delta <= 1e-3);
        assert!((fit.rho_over_delta - 4.2).abs() < 1e-12);
        assert!(fit.max_violation <= 1e-6);
    }

    #[test]
    fn no_plateau_is_reported() {
        let s = series(|t| 5.0 * (-0.1 * t).exp(), 2.0, 100);
        assert!(matches!(fit_absorption(&[s], 1e-6), Err(Error::NoPlateau(_))));
    }

    #[test]
    fn joint_fit_covers_rising_and_falling_runs() {
        let a = series(|t| 97.0 * (-1.5 * t).exp() + 3.0, 12.0, 3000);
        let b = series(|t| 3.0 - 2.9 * (-1.0 * t).exp(), 12.0, 3000);
        let fit = fit_absorption(&[a, b], 1e-6).unwrap();
        assert!(fit.max_violation <= 1e-6);
        assert!(fit.plateau_spread < 0.05);
    }
}
