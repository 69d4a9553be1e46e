//! Short-trajectory machinery: solution segments of length `ell`, the maps
//! `e_t`, `b`, `L_t`, the segment metrics, the smoothing and `e_1`
//! Lipschitz checks, and fractal-dimension estimation.

use std::collections::HashSet;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{derivative_dual_norms, gronwall_integrand, separation};
use crate::error::{Error, Result};
use crate::operators::Operators;
use crate::solver::Stepper;
use crate::state::FieldState;

/// Pairs whose distances (numerator and denominator) both fall below this
/// are treated as identical (ratio 0, excluded from suprema).
pub const DEGENERATE_FLOOR: f64 = 1e-14;

/// A solution segment sampled at `K + 1` equally spaced times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySegment {
    pub ell: f64,
    pub snapshots: Vec<FieldState>,
}

impl TrajectorySegment {
    pub fn k(&self) -> usize {
        self.snapshots.len() - 1
    }

    pub fn spacing(&self) -> f64 {
        self.ell / self.k() as f64
    }

    pub fn t0(&self) -> f64 {
        self.snapshots[0].t
    }

    /// Trapezoid weights on the snapshot grid.
    pub fn weights(&self) -> Vec<f64> {
        trapezoid_weights(self.k(), self.spacing())
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if self.snapshots.len() != other.snapshots.len() || (self.ell - other.ell).abs() > 1e-12 * self.ell {
            return Err(Error::Incompatible("segments differ in length or cadence".into()));
        }
        let (a, b) = (&self.snapshots[0], &other.snapshots[0]);
        if a.phi.dim() != b.phi.dim() {
            return Err(Error::Incompatible("segments live on different grids".into()));
        }
        let (m1, m2) = (a.mean_phi(), b.mean_phi());
        if (m1 - m2).abs() > 1e-10 * m1.abs().max(1.0) {
            return Err(Error::Incompatible(format!("mean mismatch ({m1} vs {m2})")));
        }
        Ok(())
    }
}

fn trapezoid_weights(k: usize, h: f64) -> Vec<f64> {
    (0..=k)
        .map(|j| if j == 0 || j == k { 0.5 * h } else { h })
        .collect()
}

fn state_diff(a: &FieldState, b: &FieldState) -> FieldState {
    FieldState {
        t: a.t,
        u: &a.u - &b.u,
        phi: &a.phi - &b.phi,
        phi_gamma: a.phi_gamma.zip_map(&b.phi_gamma, |x, y| x - y),
        mu: &a.mu - &b.mu,
        p: &a.p - &b.p,
    }
}

/// `e_t(chi) = chi(t ell)`. Off-grid times are linearly interpolated; the
/// flag reports whether that happened.
pub fn evaluate_e(t: f64, chi: &TrajectorySegment) -> Result<(FieldState, bool)> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("e_t requires t in [0, 1], got {t}")));
    }
    let k = chi.k();
    let x = t * k as f64;
    let j = x.round();
    if (x - j).abs() < 1e-9 {
        return Ok((chi.snapshots[j as usize].clone(), false));
    }
    let j0 = x.floor() as usize;
    let w = x - j0 as f64;
    let (a, b) = (&chi.snapshots[j0], &chi.snapshots[j0 + 1]);
    let lerp = |p: f64, q: f64| (1.0 - w) * p + w * q;
    Ok((
        FieldState {
            t: lerp(a.t, b.t),
            u: a.u.scaled(1.0 - w).axpy(w, &b.u),
            phi: (&a.phi * (1.0 - w)) + (&b.phi * w),
            phi_gamma: a.phi_gamma.zip_map(&b.phi_gamma, lerp),
            mu: (&a.mu * (1.0 - w)) + (&b.mu * w),
            p: (&a.p * (1.0 - w)) + (&b.p * w),
        },
        true,
    ))
}

fn steps_per_snapshot(stepper: &Stepper, ell: f64, k: usize) -> Result<usize> {
    if k == 0 || !(ell > 0.0) {
        return Err(Error::Parameter("segments need ell > 0 and K >= 1".into()));
    }
    let dt = stepper.scheme().dt;
    let s = ell / (k as f64 * dt);
    let n = s.round();
    if n < 1.0 || (s - n).abs() > 1e-9 * s {
        return Err(Error::Parameter(format!(
            "ell / K = {} must be a multiple of dt = {dt}",
            ell / k as f64
        )));
    }
    Ok(n as usize)
}

/// `b(x)`: the solution segment on `[0, ell]` starting from `x`.
pub fn lift_b(stepper: &Stepper, initial: &FieldState, ell: f64, k: usize) -> Result<TrajectorySegment> {
    let stride = steps_per_snapshot(stepper, ell, k)?;
    let mut snapshots = Vec::with_capacity(k + 1);
    let mut cur = initial.clone();
    snapshots.push(cur.clone());
    for _ in 0..k {
        cur = stepper.advance(&cur, stride)?;
        snapshots.push(cur.clone());
    }
    Ok(TrajectorySegment { ell, snapshots })
}

fn steps_for_shift(stepper: &Stepper, t: f64) -> Result<usize> {
    let dt = stepper.scheme().dt;
    let s = t / dt;
    let n = s.round();
    if t < 0.0 || (s - n).abs() > 1e-9 * s.max(1.0) {
        return Err(Error::Parameter(format!("shift t = {t} must be a non-negative multiple of dt = {dt}")));
    }
    Ok(n as usize)
}

/// `L_t chi`: the segment on `[t, t + ell]` of the solution through
/// `chi(0)`. `L_0` is the identity.
pub fn advance_l(stepper: &Stepper, chi: &TrajectorySegment, t: f64) -> Result<TrajectorySegment> {
    let n = steps_for_shift(stepper, t)?;
    if n == 0 {
        return Ok(chi.clone());
    }
    let start = stepper.advance(&chi.snapshots[0], n)?;
    lift_b(stepper, &start, chi.ell, chi.k())
}

/// `L2(0, ell; H x V_I)` distance.
pub fn dist_l2(ops: &Operators, lambda: f64, a: &TrajectorySegment, b: &TrajectorySegment) -> Result<f64> {
    a.compatible(b)?;
    let w = a.weights();
    let s: f64 = a
        .snapshots
        .iter()
        .zip(&b.snapshots)
        .zip(&w)
        .map(|((x, y), w)| w * separation(ops, lambda, x, y))
        .sum();
    Ok(s.max(0.0).sqrt())
}

/// Y distance: `int ||.||^2_{V x H2} + (int ||d/dt .||_{V* x (H1)*})^2`.
pub fn dist_y(ops: &Operators, lambda: f64, a: &TrajectorySegment, b: &TrajectorySegment) -> Result<f64> {
    a.compatible(b)?;
    let diffs: Vec<FieldState> = a.snapshots.iter().zip(&b.snapshots).map(|(x, y)| state_diff(x, y)).collect();
    let w = a.weights();
    let strong: f64 = diffs
        .iter()
        .zip(&w)
        .map(|(d, w)| w * (ops.grad_u_sq(&d.u) + lambda * ops.h2_sigma(&d.phi_pair()).powi(2)))
        .sum();
    let dn = derivative_dual_norms(ops, &diffs, a.spacing())?;
    let dual: f64 = dn.iter().zip(&w).map(|(v, w)| w * v).sum();
    Ok((strong + dual * dual).max(0.0).sqrt())
}

/// Smoothing ratio of one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMetricReport {
    pub dist_l2: f64,
    pub dist_y: f64,
    /// `||L_t chi1 - L_t chi2||_Y^2 / int ||chi1 - chi2||^2`
    pub smoothing_ratio: f64,
    /// `M_ell(t) = exp(int_0^{t + ell} L)`
    pub m_ell: f64,
}

impl TrajectoryMetricReport {
    /// `smoothing_ratio / M_ell(t)`, the quantity bounded by `kappa`.
    pub fn normalized(&self) -> f64 {
        self.smoothing_ratio / self.m_ell
    }
}

/// Runs both segments forward by `t` (a multiple of the snapshot spacing,
/// `t >= ell`) and reports the smoothing ratio together with `M_ell(t)`
/// built from the Gronwall constant `c`.
pub fn smoothing_check(
    stepper: &Stepper,
    c: f64,
    a: &TrajectorySegment,
    b: &TrajectorySegment,
    t: f64,
) -> Result<TrajectoryMetricReport> {
    a.compatible(b)?;
    let ops = stepper.operators();
    let lambda = stepper.params().lambda;
    if t < a.ell - 1e-12 {
        return Err(Error::Parameter(format!("smoothing needs t >= ell, got t = {t}")));
    }
    let stride = steps_per_snapshot(stepper, a.ell, a.k())?;
    let h = a.spacing();
    let blocks = t / h;
    if (blocks - blocks.round()).abs() > 1e-9 * blocks {
        return Err(Error::Parameter("t must be a multiple of the snapshot spacing".into()));
    }
    let blocks = blocks.round() as usize + a.k();
    // march both solutions over [0, t + ell], integrating L by trapezoid
    let (mut x, mut y) = (a.snapshots[0].clone(), b.snapshots[0].clone());
    let mut q_prev = gronwall_integrand(ops, &x, &y);
    let mut integral = 0.0;
    let mut tail_a = vec![];
    let mut tail_b = vec![];
    let first_kept = blocks - a.k();
    for n in 0..=blocks {
        if n > 0 {
            x = stepper.advance(&x, stride)?;
            y = stepper.advance(&y, stride)?;
            let q = gronwall_integrand(ops, &x, &y);
            integral += 0.5 * h * (q + q_prev);
            q_prev = q;
        }
        if n >= first_kept {
            tail_a.push(x.clone());
            tail_b.push(y.clone());
        }
    }
    let la = TrajectorySegment { ell: a.ell, snapshots: tail_a };
    let lb = TrajectorySegment { ell: a.ell, snapshots: tail_b };
    let num = dist_y(ops, lambda, &la, &lb)?;
    let den = dist_l2(ops, lambda, a, b)?;
    let ratio = if num < DEGENERATE_FLOOR && den < DEGENERATE_FLOOR { 0.0 } else { (num / den).powi(2) };
    Ok(TrajectoryMetricReport {
        dist_l2: den,
        dist_y: num,
        smoothing_ratio: ratio,
        m_ell: (c * integral).exp(),
    })
}

/// Smoothing constant calibrated on a reference set of pairs: twice the
/// largest normalized ratio.
pub fn calibrate_kappa(reports: &[TrajectoryMetricReport]) -> f64 {
    2.0 * reports.iter().map(|r| r.normalized()).fold(0.0, f64::max)
}

/// Empirical `theta = sup ||e_1 chi1 - e_1 chi2||^2 / dist_l2(chi1, chi2)^2`
/// over pairs, excluding degenerate pairs.
pub fn e1_lipschitz_check(
    ops: &Operators,
    lambda: f64,
    pairs: &[(&TrajectorySegment, &TrajectorySegment)],
) -> Result<f64> {
    let mut theta = 0.0_f64;
    for (a, b) in pairs {
        let den = dist_l2(ops, lambda, a, b)?;
        let num = separation(ops, lambda, a.snapshots.last().unwrap(), b.snapshots.last().unwrap()).sqrt();
        if num < DEGENERATE_FLOOR && den < DEGENERATE_FLOOR {
            continue;
        }
        theta = theta.max((num / den).powi(2));
    }
    Ok(theta)
}

/// Segments sampled along solutions after a burn-in: for each initial state,
/// `per_run` segments whose starts are `gap` apart.
pub fn attractor_ensemble(
    stepper: &Stepper,
    initials: &[FieldState],
    burn_in: f64,
    ell: f64,
    k: usize,
    per_run: usize,
    gap: f64,
) -> Result<Vec<TrajectorySegment>> {
    let burn = steps_for_shift(stepper, burn_in)?;
    let skip = steps_for_shift(stepper, gap)?;
    let mut out = vec![];
    for x in initials {
        let mut cur = stepper.advance(x, burn)?;
        for _ in 0..per_run {
            out.push(lift_b(stepper, &cur, ell, k)?);
            cur = stepper.advance(&cur, skip)?;
        }
    }
    Ok(out)
}

/// Symmetric pairwise distance matrix.
pub fn distance_matrix<T>(points: &[T], mut dist: impl FnMut(&T, &T) -> Result<f64>) -> Result<DMatrix<f64>> {
    let n = points.len();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = dist(&points[i], &points[j])?;
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    Ok(d)
}

/// Pairwise distance matrix as CSV rows.
pub fn distance_matrix_csv(d: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for i in 0..d.nrows() {
        let row: Vec<String> = (0..d.ncols()).map(|j| format!("{:.17e}", d[(i, j)])).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    /// Correlation-dimension slope.
    pub slope: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Distance range `[r_lo, r_hi]` of the fit.
    pub fit_range: (f64, f64),
    pub n_points: usize,
    pub r_squared: f64,
    /// Box-counting slope on the leading principal coordinates.
    pub box_counting: Option<f64>,
    pub pca_components: usize,
}

pub const MIN_POINTS: usize = 200;
const QUANTILE_LO: f64 = 0.01;
const QUANTILE_HI: f64 = 0.20;
const N_RADII: usize = 12;
const BOOTSTRAP: usize = 200;
const MIN_R_SQUARED: f64 = 0.95;

fn fit_line(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, r2)
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let x = q * (sorted.len() - 1) as f64;
    let i = x.floor() as usize;
    let w = x - i as f64;
    if i + 1 < sorted.len() {
        (1.0 - w) * sorted[i] + w * sorted[i + 1]
    } else {
        sorted[i]
    }
}

/// Correlation-integral slope over log-spaced radii in `[lo, hi]`; pairs
/// are given by multiplicity-weighted distances.
fn correlation_slope(dists: &[(f64, f64)], lo: f64, hi: f64) -> Option<(f64, f64)> {
    let total: f64 = dists.iter().map(|d| d.1).sum();
    let pts: Vec<(f64, f64)> = (0..N_RADII)
        .filter_map(|k| {
            let r = lo * (hi / lo).powf(k as f64 / (N_RADII - 1) as f64);
            let c: f64 = dists.iter().filter(|d| d.0 <= r).map(|d| d.1).sum::<f64>() / total;
            (c > 0.0).then(|| (r.ln(), c.ln()))
        })
        .collect();
    (pts.len() >= 4).then(|| fit_line(&pts))
}

/// Correlation dimension of a point set given its distance matrix, with a
/// bootstrap confidence interval and a box-counting cross-check on the
/// classical-MDS principal coordinates.
pub fn fractal_dimension(d: &DMatrix<f64>, seed: u64) -> Result<DimensionReport> {
    let n = d.nrows();
    if n < MIN_POINTS || d.ncols() != n {
        return Err(Error::Precondition(format!("need at least {MIN_POINTS} points, got {n}")));
    }
    let mut all: Vec<f64> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| d[(i, j)]).collect();
    all.sort_by(f64::total_cmp);
    let dmax = *all.last().unwrap();
    if dmax <= DEGENERATE_FLOOR {
        // a single ball covers everything
        return Ok(DimensionReport {
            slope: 0.0,
            ci_low: 0.0,
            ci_high: 0.0,
            fit_range: (0.0, 0.0),
            n_points: n,
            r_squared: 1.0,
            box_counting: Some(0.0),
            pca_components: 0,
        });
    }
    let lo = quantile(&all, QUANTILE_LO);
    let hi = quantile(&all, QUANTILE_HI);
    if !(lo > 0.0 && hi > lo * 1.5) {
        return Err(Error::NoScalingRegion(format!(
            "distance quantiles too narrow (r1% = {lo:e}, r20% = {hi:e})"
        )));
    }
    let weighted: Vec<(f64, f64)> = all.iter().map(|&v| (v, 1.0)).collect();
    let (slope, r2) = correlation_slope(&weighted, lo, hi)
        .ok_or_else(|| Error::NoScalingRegion("too few populated radii".into()))?;
    if r2 < MIN_R_SQUARED {
        return Err(Error::NoScalingRegion(format!(
            "log C(r) not linear over [{lo:e}, {hi:e}] (R^2 = {r2:.3})"
        )));
    }

    // bootstrap over points; pairs of copies of one point are skipped
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slopes = Vec::with_capacity(BOOTSTRAP);
    for _ in 0..BOOTSTRAP {
        let mut counts = vec![0usize; n];
        for _ in 0..n {
            counts[rng.gen_range(0..n)] += 1;
        }
        let idx: Vec<usize> = (0..n).filter(|&i| counts[i] > 0).collect();
        let mut w = Vec::with_capacity(idx.len() * idx.len() / 2);
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                w.push((d[(i, j)], (counts[i] * counts[j]) as f64));
            }
        }
        if let Some((s, _)) = correlation_slope(&w, lo, hi) {
            slopes.push(s);
        }
    }
    slopes.sort_by(f64::total_cmp);
    let (ci_low, ci_high) = if slopes.is_empty() {
        (slope, slope)
    } else {
        (quantile(&slopes, 0.025).min(slope), quantile(&slopes, 0.975).max(slope))
    };
    let (box_counting, pca_components) = box_counting_pca(d);
    Ok(DimensionReport {
        slope,
        ci_low,
        ci_high,
        fit_range: (lo, hi),
        n_points: n,
        r_squared: r2,
        box_counting,
        pca_components,
    })
}

/// Classical MDS to the components carrying 99% of the variance (at most
/// 8), then a box-counting slope over boxes from the extent down to the
/// point where boxes isolate points.
fn box_counting_pca(d: &DMatrix<f64>) -> (Option<f64>, usize) {
    let n = d.nrows();
    let d2 = d.map(|v| v * v);
    let row_mean: Vec<f64> = (0..n).map(|i| d2.row(i).sum() / n as f64).collect();
    let mean = row_mean.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (d2[(i, j)] - row_mean[i] - row_mean[j] + mean));
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let total: f64 = eig.eigenvalues.iter().filter(|v| **v > 0.0).sum();
    if total <= 0.0 {
        return (None, 0);
    }
    let mut kept = vec![];
    let mut acc = 0.0;
    for &c in &order {
        let l = eig.eigenvalues[c];
        if l <= 0.0 || kept.len() == 8 || acc >= 0.99 * total {
            break;
        }
        acc += l;
        kept.push(c);
    }
    let coords: Vec<Vec<f64>> = (0..n)
        .map(|i| kept.iter().map(|&c| eig.eigenvectors[(i, c)] * eig.eigenvalues[c].sqrt()).collect())
        .collect();
    let extent = (0..kept.len())
        .map(|k| {
            let (lo, hi) = coords
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p[k]), h.max(p[k])));
            hi - lo
        })
        .fold(0.0, f64::max);
    let mut pts = vec![];
    let mut eps = extent / 2.0;
    while eps > 0.0 {
        let boxes: HashSet<Vec<i64>> = coords
            .iter()
            .map(|p| p.iter().map(|v| (v / eps).floor() as i64).collect())
            .collect();
        let count = boxes.len();
        if count > n / 4 {
            break;
        }
        pts.push(((1.0 / eps).ln(), (count as f64).ln()));
        eps /= 1.5;
    }
    if pts.len() < 3 {
        return (None, kept.len());
    }
    (Some(fit_line(&pts).0), kept.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{ChannelDomain, Grid};
    use crate::physics::ModelParams;
    use crate::solver::SchemeConfig;
    use crate::state::{random_state, InitSpec};

    fn circle_distances(n: usize) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let th: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        DMatrix::from_fn(n, n, |i, j| 2.0 * ((th[i] - th[j]) / 2.0).sin().abs())
    }

    #[test]
    fn circle_has_dimension_one() {
        let r = fractal_dimension(&circle_distances(300), 1).unwrap();
        assert!((r.slope - 1.0).abs() < 0.3, "{r:?}");
        assert!(r.ci_low <= r.slope && r.slope <= r.ci_high);
        let bc = r.box_counting.unwrap();
        assert!((bc - 1.0).abs() < 0.5, "{r:?}");
    }

    #[test]
    fn identical_points_have_dimension_zero() {
        let r = fractal_dimension(&DMatrix::zeros(250, 250), 1).unwrap();
        assert_eq!(r.slope, 0.0);
        assert!(fractal_dimension(&DMatrix::zeros(10, 10), 1).is_err());
    }

    #[test]
    fn evaluation_and_semigroup() {
        let g = Grid::new(ChannelDomain::new(1.0, 1.0, 8, 8)).unwrap();
        let p = ModelParams::default();
        let scheme = SchemeConfig { dt: 1e-3, ..Default::default() };
        let st = Stepper::new(&g, &p, &scheme).unwrap();
        let x = random_state(&g, &p, &InitSpec::default()).unwrap();
        let chi = lift_b(&st, &x, 0.008, 4).unwrap();
        assert_eq!(evaluate_e(0.0, &chi).unwrap().0, x);
        assert_eq!(evaluate_e(1.0, &chi).unwrap().0, st.advance(&x, 8).unwrap());
        assert_eq!(evaluate_e(0.5, &chi).unwrap(), (chi.snapshots[2].clone(), false));
        assert!(evaluate_e(0.1, &chi).unwrap().1);
        assert!(evaluate_e(1.5, &chi).is_err());
        assert_eq!(advance_l(&st, &chi, 0.0).unwrap(), chi);
        let two = advance_l(&st, &advance_l(&st, &chi, 0.005).unwrap(), 0.005).unwrap();
        assert_eq!(two, advance_l(&st, &chi, 0.010).unwrap());
        assert!(lift_b(&st, &x, 0.0075, 4).is_err());
    }

    #[test]
    fn frozen_difference_oracles() {
        let g = Grid::new(ChannelDomain::new(1.0, 1.0, 8, 8)).unwrap();
        let p = ModelParams::default();
        let ops = Operators::new(&g, p.alpha, p.beta).unwrap();
        let x = random_state(&g, &p, &InitSpec::default()).unwrap();
        let mut y = x.clone();
        y.u = x.u.scaled(1.1);
        let ell = 0.5;
        let a = TrajectorySegment { ell, snapshots: vec![x.clone(); 5] };
        let b = TrajectorySegment { ell, snapshots: vec![y.clone(); 5] };
        let dd = separation(&ops, p.lambda, &x, &y);
        let d = dist_l2(&ops, p.lambda, &a, &b).unwrap();
        assert!((d * d - ell * dd).abs() < 1e-12 * dd);
        let theta = e1_lipschitz_check(&ops, p.lambda, &[(&a, &b), (&a, &a)]).unwrap();
        assert!((theta - 1.0 / ell).abs() < 1e-12 / ell);
        assert_eq!(dist_l2(&ops, p.lambda, &a, &a).unwrap(), 0.0);
    }
}
