//! End-to-end studies driven by a [`RunConfig`]: the production run with
//! outputs and resume, the energy-ledger refinement, the absorbing-set and
//! time-averaged studies, the continuous-dependence check, the trajectory
//! attractor study and the hypothesis check. Shared by the CLI, the Python
//! bindings and the acceptance tests.

use std::fs::{self, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::diagnostics::{
    apply_absorption_fit, calibrate_gronwall, fit_absorption, gronwall_check, max_defect, separation,
    time_averaged_bounds, AbsorptionFit, EnergyReport, EnergySeries, GronwallReport, TimeAveragedReport,
};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::io::{self, Manifest};
use crate::operators::stencil::divergence;
use crate::physics::{check_hypotheses, energy_j, HypothesisReport};
use crate::solver::{mass_drift, RunOutput, Stepper};
use crate::state::{perturb, random_state, scale_to_energy, FieldState, InitSpec};
use crate::trajectory::{
    advance_l, attractor_ensemble, calibrate_kappa, dist_l2, e1_lipschitz_check, fractal_dimension, lift_b,
    smoothing_check, DimensionReport, TrajectoryMetricReport, TrajectorySegment,
};
use crate::verify::{fourier_roundoff, verify_operators, ConvergenceTable, MmsSetup, LADDER, MIN_ORDER};

pub const MASS_TOL: f64 = 1e-11;
pub const DIV_TOL: f64 = 1e-10;
pub const FOURIER_TOL: f64 = 1e-12;
/// Required reduction of the largest per-step defect when `dt` is halved.
pub const DEFECT_REDUCTION: f64 = 3.5;
/// Relaxation before the energy study: steps at `dt / 10`.
pub const RELAX_STEPS: usize = 500;
/// Initial energies of the absorbing-set runs, as multiples of the
/// reference plateau.
pub const ABSORPTION_MULTIPLES: [f64; 3] = [0.1, 10.0, 100.0];
pub const PLATEAU_SPREAD_TOL: f64 = 0.05;
pub const WINDOW_SUP_OVER_MEDIAN: f64 = 1.1;
pub const METRIC_TOL: f64 = 1e-12;
pub const METRIC_TRIPLES: usize = 100;
/// Pairs used to calibrate, and then to check, the smoothing constant.
pub const SMOOTHING_PAIRS: usize = 4;

pub fn stepper(cfg: &RunConfig) -> Result<Stepper> {
    let g = Grid::new(cfg.domain)?;
    Stepper::new(&g, &cfg.params, &cfg.scheme)
}

pub fn initial_state(cfg: &RunConfig, g: &Grid) -> Result<FieldState> {
    random_state(g, &cfg.params, &cfg.run.init)
}

/// `1.1 max |phi|` over bulk and walls: the range on which the
/// stabilization constants must dominate `|f'|` and `|g'|`.
pub fn working_range(s: &FieldState) -> f64 {
    let m = s.phi.iter().fold(s.phi_gamma.max_abs(), |m, v| m.max(v.abs()));
    1.1 * m
}

/// Stepper and initial state, with the stabilization checked against the
/// initial working range.
pub fn prepare(cfg: &RunConfig) -> Result<(Stepper, FieldState)> {
    let st = stepper(cfg)?;
    let init = initial_state(cfg, st.grid())?;
    cfg.scheme.check_stabilization(&cfg.params, working_range(&init))?;
    Ok((st, init))
}

fn j_of(st: &Stepper, s: &FieldState) -> f64 {
    energy_j(st.grid(), st.params(), &s.u, &s.phi_pair()).total
}

fn max_div(g: &Grid, s: &FieldState) -> f64 {
    divergence(g, &s.u).iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

// ---------------------------------------------------------------- run

/// Conservation record of a production run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: usize,
    pub t: f64,
    pub max_mass_drift: f64,
    pub max_divergence: f64,
    pub mass_ok: bool,
    pub divergence_ok: bool,
}

const ENERGY_CSV: &str = "energy.csv";
const SUMMARY_JSON: &str = "run_summary.json";
const MANIFEST_JSON: &str = "manifest.json";

/// Runs the configured simulation into `out`: `energy.csv` (one row per
/// step), snapshots every `snapshot_cadence` steps, `run_summary.json` and
/// `manifest.json`. The manifest is refreshed at every snapshot so an
/// interrupted run can be resumed.
pub fn run_to_dir(cfg: &RunConfig, out: &Path) -> Result<(Manifest, RunSummary)> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let (st, init) = prepare(cfg)?;
    let mut manifest = Manifest::new("run", cfg);
    let csv = out.join(ENERGY_CSV);
    io::write_text(&csv, &format!("{}\n", EnergyReport::CSV_HEADER))?;
    let summary = RunSummary {
        steps: 0,
        t: init.t,
        max_mass_drift: 0.0,
        max_divergence: max_div(st.grid(), &init),
        mass_ok: true,
        divergence_ok: true,
    };
    checkpoint(out, &mut manifest, &summary, 0, &init)?;
    march(cfg, &st, out, manifest, summary, init.clone(), init)
}

/// Continues the run recorded in `manifest_path` from its last snapshot to
/// the configured horizon. The result is bitwise identical to an
/// uninterrupted run.
pub fn resume(manifest_path: &Path) -> Result<(Manifest, RunSummary)> {
    let out = manifest_path.parent().unwrap_or(Path::new("."));
    let manifest: Manifest = io::read_json(manifest_path)?;
    if manifest.command != "run" {
        return Err(Error::Incompatible(format!("cannot resume a '{}' manifest", manifest.command)));
    }
    let cfg = manifest.config()?;
    if cfg.hash() != manifest.config_hash {
        return Err(Error::Incompatible("config does not match its recorded hash".into()));
    }
    let summary: RunSummary = io::read_json(&out.join(SUMMARY_JSON))?;
    let &last = manifest
        .snapshots
        .last()
        .ok_or_else(|| Error::Incompatible("manifest lists no snapshots".into()))?;
    let init = io::read_snapshot(out, 0)?;
    let cur = io::read_snapshot(out, last)?;
    // drop ledger rows written after the checkpoint
    let csv = out.join(ENERGY_CSV);
    let text = fs::read_to_string(&csv).map_err(|e| Error::io(&csv, e))?;
    let keep: Vec<&str> = text.lines().take(1 + summary.steps).collect();
    io::write_text(&csv, &(keep.join("\n") + "\n"))?;
    manifest.verify(out)?;
    let st = stepper(&cfg)?;
    march(&cfg, &st, out, manifest, summary, init, cur)
}

fn march(
    cfg: &RunConfig,
    st: &Stepper,
    out: &Path,
    mut manifest: Manifest,
    mut summary: RunSummary,
    init: FieldState,
    mut cur: FieldState,
) -> Result<(Manifest, RunSummary)> {
    let total = st.steps_for(cfg.run.t_end)?;
    let cadence = cfg.run.snapshot_cadence;
    let csv = out.join(ENERGY_CSV);
    let file = OpenOptions::new().append(true).open(&csv).map_err(|e| Error::io(&csv, e))?;
    let mut w = BufWriter::new(file);
    for n in summary.steps + 1..=total {
        let next = st.step(&cur)?;
        let rep = st.energy_report(&cur, &next);
        writeln!(w, "{}", rep.csv_row()).map_err(|e| Error::io(&csv, e))?;
        summary.steps = n;
        summary.t = next.t;
        summary.max_mass_drift = summary.max_mass_drift.max(mass_drift(&init, &next));
        summary.max_divergence = summary.max_divergence.max(max_div(st.grid(), &next));
        cur = next;
        if n % cadence == 0 || n == total {
            w.flush().map_err(|e| Error::io(&csv, e))?;
            checkpoint(out, &mut manifest, &summary, n.div_ceil(cadence), &cur)?;
        }
    }
    Ok((manifest, summary))
}

fn checkpoint(out: &Path, m: &mut Manifest, s: &RunSummary, index: usize, state: &FieldState) -> Result<()> {
    let mut s = s.clone();
    s.mass_ok = s.max_mass_drift <= MASS_TOL;
    s.divergence_ok = s.max_divergence <= DIV_TOL;
    for p in io::write_snapshot(out, index, state)? {
        m.record(out, &p)?;
    }
    if m.snapshots.last() != Some(&index) {
        m.snapshots.push(index);
    }
    let summary = out.join(SUMMARY_JSON);
    io::write_json(&summary, &s)?;
    for p in [out.join(ENERGY_CSV), summary] {
        m.record(out, &p)?;
    }
    m.steps = s.steps;
    m.t_end = s.t;
    io::write_json(&out.join(MANIFEST_JSON), m)
}

pub fn read_summary(out: &Path) -> Result<RunSummary> {
    let mut s: RunSummary = io::read_json(&out.join(SUMMARY_JSON))?;
    s.mass_ok = s.max_mass_drift <= MASS_TOL;
    s.divergence_ok = s.max_divergence <= DIV_TOL;
    Ok(s)
}

pub fn manifest_path(out: &Path) -> PathBuf {
    out.join(MANIFEST_JSON)
}

// ------------------------------------------------------------- energy

/// Energy-ledger refinement study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyStudy {
    pub dt: f64,
    pub ctol: f64,
    /// Largest `(J^{n+1} - J^n - 2 dt (h, u^{n+1})) / dt^2` at `dt`, `dt/2`.
    pub max_increase_ratio: [f64; 2],
    /// Largest per-step defect `|e_n|` at `dt`, `dt/2`.
    pub max_defect: [f64; 2],
    /// `sum |e_n|` over the horizon at `dt`, `dt/2`.
    pub total_abs_defect: [f64; 2],
    pub defect_reduction: f64,
    pub increase_ok: bool,
    pub reduction_ok: bool,
}

fn relaxed_start(cfg: &RunConfig) -> Result<FieldState> {
    let mut fine = cfg.clone();
    fine.scheme.dt = cfg.scheme.dt / 10.0;
    let (st, init) = prepare(&fine)?;
    let mut s = st.advance(&init, RELAX_STEPS)?;
    s.t = 0.0;
    Ok(s)
}

fn increase_ratio(ledger: &[EnergyReport], dt: f64) -> f64 {
    ledger
        .iter()
        .map(|r| (r.dj_dt * dt - 2.0 * dt * r.forcing_power) / (dt * dt))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Runs the configured horizon at `dt` and `dt/2` from a state relaxed by
/// [`RELAX_STEPS`] steps at `dt/10`; returns the study and the `dt` ledger.
pub fn energy_study(cfg: &RunConfig) -> Result<(EnergyStudy, Vec<EnergyReport>)> {
    let start = relaxed_start(cfg)?;
    let runs: Vec<Result<Vec<EnergyReport>>> = [1.0, 0.5]
        .par_iter()
        .map(|&f| {
            let mut c = cfg.clone();
            c.scheme.dt = cfg.scheme.dt * f;
            let st = stepper(&c)?;
            Ok(st.run(&start, cfg.run.t_end, usize::MAX)?.ledger)
        })
        .collect();
    let mut runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let dt = cfg.scheme.dt;
    let dts = [dt, 0.5 * dt];
    let ratio = [increase_ratio(&runs[0], dts[0]), increase_ratio(&runs[1], dts[1])];
    let md = [max_defect(&runs[0]), max_defect(&runs[1])];
    let total = |l: &[EnergyReport]| l.iter().map(|r| r.defect.abs()).sum::<f64>();
    let reduction = md[0] / md[1];
    let ctol = cfg.diagnostics.energy_ctol;
    Ok((
        EnergyStudy {
            dt,
            ctol,
            max_increase_ratio: ratio,
            max_defect: md,
            total_abs_defect: [total(&runs[0]), total(&runs[1])],
            defect_reduction: reduction,
            increase_ok: ratio.iter().all(|&r| r <= ctol),
            reduction_ok: reduction >= DEFECT_REDUCTION,
        },
        runs.swap_remove(0),
    ))
}

// --------------------------------------------------------- absorption

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionStudy {
    pub reference_plateau: f64,
    pub initial_j: Vec<f64>,
    pub fit: AbsorptionFit,
    pub tol: f64,
    pub spread_ok: bool,
    pub bound_ok: bool,
}

/// Everything the absorbing-set study produces.
#[derive(Debug, Clone)]
pub struct AbsorptionOutput {
    pub study: AbsorptionStudy,
    /// Ledgers of the scaled runs, with the fitted residual filled in.
    pub ledgers: Vec<Vec<EnergyReport>>,
    pub reference: RunOutput,
}

/// A reference run sets the plateau `P`; three runs from its final state,
/// with the velocity rescaled to `J(0) = {0.1, 10, 100} P`, are fitted
/// jointly.
pub fn absorption_study(cfg: &RunConfig) -> Result<AbsorptionOutput> {
    let (st, init) = prepare(cfg)?;
    let reference = st.run(&init, cfg.run.t_end, cfg.run.snapshot_cadence)?;
    let p = EnergySeries::from_ledger(j_of(&st, &init), init.t, &reference.ledger).plateau();
    // the order-parameter part of J at the end of the reference run lies
    // below the plateau, so every target is reachable by rescaling u
    let mut base = reference.snapshots.last().unwrap().clone();
    base.t = init.t;
    let runs: Vec<Result<(f64, Vec<EnergyReport>)>> = ABSORPTION_MULTIPLES
        .par_iter()
        .map(|&m| {
            let mut s = base.clone();
            scale_to_energy(st.grid(), st.params(), &mut s, m * p)?;
            Ok((j_of(&st, &s), st.run(&s, cfg.run.t_end, usize::MAX)?.ledger))
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let series: Vec<EnergySeries> = runs
        .iter()
        .map(|(j0, l)| EnergySeries::from_ledger(*j0, init.t, l))
        .collect();
    let tol = cfg.diagnostics.absorption_tol;
    let fit = fit_absorption(&series, tol)?;
    let ledgers = runs
        .into_iter()
        .map(|(_, mut l)| {
            apply_absorption_fit(&mut l, &fit);
            l
        })
        .collect();
    Ok(AbsorptionOutput {
        study: AbsorptionStudy {
            reference_plateau: p,
            initial_j: series.iter().map(|s| s.j[0]).collect(),
            spread_ok: fit.plateau_spread <= PLATEAU_SPREAD_TOL,
            bound_ok: fit.max_violation <= tol,
            fit,
            tol,
        },
        ledgers,
        reference,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeAveragedStudy {
    pub report: TimeAveragedReport,
    pub passed: bool,
}

/// Sliding-window bounds on the snapshots of a run.
pub fn time_averaged_study(cfg: &RunConfig, run: &RunOutput) -> Result<TimeAveragedStudy> {
    let st = stepper(cfg)?;
    let report = time_averaged_bounds(
        st.operators(),
        st.params(),
        &run.snapshots,
        cfg.trajectory.ell,
        cfg.diagnostics.burn_in_fraction,
    )?;
    Ok(TimeAveragedStudy {
        passed: report.sup_over_median <= WINDOW_SUP_OVER_MEDIAN,
        report,
    })
}

// ----------------------------------------------------------- gronwall

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GronwallStudy {
    pub perturbation: f64,
    /// Frozen constant, from the config or calibrated on a reference pair.
    pub c: f64,
    pub calibrated: bool,
    /// Check on an independent pair with `c` frozen.
    pub report: GronwallReport,
}

fn perturbed_pair(cfg: &RunConfig, st: &Stepper, base: &FieldState, eps: f64, seed: u64) -> Result<[Vec<FieldState>; 2]> {
    let b = perturb(st.grid(), st.params(), base, eps, seed)?;
    let cadence = cfg.run.snapshot_cadence;
    let ra = st.run(base, cfg.run.t_end, cadence)?;
    let rb = st.run(&b, cfg.run.t_end, cadence)?;
    Ok([ra.snapshots, rb.snapshots])
}

/// Continuous dependence for a perturbation of size `eps`.
pub fn gronwall_study(cfg: &RunConfig, eps: f64) -> Result<GronwallStudy> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("perturbation must be > 0, got {eps}")));
    }
    let (st, base) = prepare(cfg)?;
    let seed = cfg.run.init.seed;
    let lambda = st.params().lambda;
    let (c, calibrated) = match cfg.diagnostics.gronwall_c {
        Some(c) => (c, false),
        None => {
            let [a, b] = perturbed_pair(cfg, &st, &base, eps, seed.wrapping_add(1001))?;
            (calibrate_gronwall(st.operators(), lambda, &a, &b)?, true)
        }
    };
    let [a, b] = perturbed_pair(cfg, &st, &base, eps, seed.wrapping_add(2002))?;
    Ok(GronwallStudy {
        perturbation: eps,
        c,
        calibrated,
        report: gronwall_check(st.operators(), lambda, &a, &b, c)?,
    })
}

// --------------------------------------------------------- trajectory

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricAxioms {
    pub triples: usize,
    pub max_self_distance: f64,
    pub max_asymmetry: f64,
    /// `max d(a,c) - d(a,b) - d(b,c)`, relative to the largest distance.
    pub max_triangle_excess: f64,
    pub semigroup_bitwise: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingStudy {
    pub c: f64,
    pub kappa: f64,
    pub kappa_calibrated: bool,
    pub reference: Vec<TrajectoryMetricReport>,
    pub held_out: Vec<TrajectoryMetricReport>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStudy {
    pub segments: usize,
    /// Correlation dimension of the segment set, or why none was found.
    pub segment_dimension: std::result::Result<DimensionReport, String>,
    pub e1_dimension: std::result::Result<DimensionReport, String>,
    /// `dim e_1(set) <= dim set + CI half-width`.
    pub e1_within: bool,
    /// Empirical `e_1` Lipschitz constant over the held-out pairs.
    pub theta: f64,
    pub metric: MetricAxioms,
    pub smoothing: SmoothingStudy,
}

/// Everything the trajectory study produces.
#[derive(Debug, Clone)]
pub struct TrajectoryOutput {
    pub study: TrajectoryStudy,
    pub distances: DMatrix<f64>,
}

/// Parallel symmetric distance matrix; entries do not depend on the
/// thread count.
pub fn par_distance_matrix<T: Sync>(
    points: &[T],
    dist: impl Fn(&T, &T) -> Result<f64> + Sync,
) -> Result<DMatrix<f64>> {
    let n = points.len();
    let rows: Vec<Result<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| (i + 1..n).map(|j| dist(&points[i], &points[j])).collect())
        .collect();
    let mut d = DMatrix::zeros(n, n);
    for (i, row) in rows.into_iter().enumerate() {
        for (k, v) in row?.into_iter().enumerate() {
            d[(i, i + 1 + k)] = v;
            d[(i + 1 + k, i)] = v;
        }
    }
    Ok(d)
}

fn metric_axioms(st: &Stepper, segs: &[TrajectorySegment], seed: u64) -> Result<MetricAxioms> {
    let (ops, lambda) = (st.operators(), st.params().lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut self_d, mut asym, mut tri) = (0.0_f64, 0.0_f64, f64::NEG_INFINITY);
    for _ in 0..METRIC_TRIPLES {
        let [a, b, c] = [0; 3].map(|_| &segs[rng.gen_range(0..segs.len())]);
        let ab = dist_l2(ops, lambda, a, b)?;
        let ba = dist_l2(ops, lambda, b, a)?;
        let bc = dist_l2(ops, lambda, b, c)?;
        let ac = dist_l2(ops, lambda, a, c)?;
        let scale = ab.max(bc).max(ac).max(1e-300);
        self_d = self_d.max(dist_l2(ops, lambda, a, a)?);
        asym = asym.max((ab - ba).abs() / scale);
        tri = tri.max((ac - ab - bc) / scale);
    }
    // L_s L_t = L_{s+t}
    let chi = &segs[0];
    let s = chi.ell;
    let two = advance_l(st, &advance_l(st, chi, s)?, s)?;
    let once = advance_l(st, chi, 2.0 * s)?;
    let semigroup_bitwise = two == once;
    Ok(MetricAxioms {
        triples: METRIC_TRIPLES,
        max_self_distance: self_d,
        max_asymmetry: asym,
        max_triangle_excess: tri,
        semigroup_bitwise,
        passed: self_d <= METRIC_TOL && asym <= METRIC_TOL && tri <= METRIC_TOL && semigroup_bitwise,
    })
}

/// Segment pairs `(b(x), b(x + eps))` for segment starts `x`.
fn smoothing_pairs(
    st: &Stepper,
    starts: &[&TrajectorySegment],
    eps: f64,
    seed: u64,
) -> Result<Vec<(TrajectorySegment, TrajectorySegment)>> {
    starts
        .par_iter()
        .enumerate()
        .map(|(i, chi)| {
            let x = &chi.snapshots[0];
            let y = perturb(st.grid(), st.params(), x, eps, seed.wrapping_add(i as u64))?;
            Ok(((*chi).clone(), lift_b(st, &y, chi.ell, chi.k())?))
        })
        .collect()
}

/// Attractor ensemble, distance matrix, dimension estimates, metric
/// axioms, `e_1` Lipschitz constant and smoothing-constant check.
pub fn trajectory_study(cfg: &RunConfig) -> Result<TrajectoryOutput> {
    let (st, _) = prepare(cfg)?;
    let tr = &cfg.trajectory;
    let seed = cfg.run.init.seed;
    let per_run = tr.ensemble_size.div_ceil(tr.runs);
    let sets: Vec<Result<Vec<TrajectorySegment>>> = (0..tr.runs)
        .into_par_iter()
        .map(|r| {
            let spec = InitSpec {
                seed: seed.wrapping_add(r as u64),
                ..cfg.run.init.clone()
            };
            let x = random_state(st.grid(), st.params(), &spec)?;
            attractor_ensemble(&st, &[x], tr.burn_in, tr.ell, tr.k, per_run, tr.gap)
        })
        .collect();
    let mut segs: Vec<TrajectorySegment> = sets.into_iter().collect::<Result<Vec<_>>>()?.concat();
    segs.truncate(tr.ensemble_size);

    let (ops, lambda) = (st.operators(), st.params().lambda);
    let distances = par_distance_matrix(&segs, |a, b| dist_l2(ops, lambda, a, b))?;
    let ends: Vec<&FieldState> = segs.iter().map(|s| s.snapshots.last().unwrap()).collect();
    let e1_d = par_distance_matrix(&ends, |a, b| Ok(separation(ops, lambda, a, b).sqrt()))?;
    let segment_dimension = fractal_dimension(&distances, seed).map_err(|e| e.to_string());
    let e1_dimension = fractal_dimension(&e1_d, seed).map_err(|e| e.to_string());
    let e1_within = match (&segment_dimension, &e1_dimension) {
        (Ok(s), Ok(e)) => e.slope <= s.slope + (s.ci_high - s.slope),
        _ => false,
    };

    let metric = metric_axioms(&st, &segs, seed)?;

    // reference and held-out pairs come from different solutions
    let pick = |offset: usize| -> Vec<&TrajectorySegment> {
        (0..SMOOTHING_PAIRS)
            .map(|i| &segs[(offset + i * per_run.max(1) / 2) % segs.len()])
            .collect()
    };
    let eps = cfg.diagnostics.perturbation;
    let reference = smoothing_pairs(&st, &pick(0), eps, seed.wrapping_add(3003))?;
    let held_out = smoothing_pairs(&st, &pick(segs.len() / 2), eps, seed.wrapping_add(4004))?;
    let c = match cfg.diagnostics.gronwall_c {
        Some(c) => c,
        None => {
            let (a, b) = &reference[0];
            calibrate_gronwall(ops, lambda, &a.snapshots, &b.snapshots)?
        }
    };
    let check = |pairs: &[(TrajectorySegment, TrajectorySegment)]| -> Result<Vec<TrajectoryMetricReport>> {
        pairs
            .par_iter()
            .map(|(a, b)| smoothing_check(&st, c, a, b, tr.ell))
            .collect()
    };
    let ref_reports = check(&reference)?;
    let held_reports = check(&held_out)?;
    let (kappa, kappa_calibrated) = match cfg.diagnostics.smoothing_kappa {
        Some(k) => (k, false),
        None => (calibrate_kappa(&ref_reports), true),
    };
    let smoothing_ok = held_reports.iter().all(|r| r.smoothing_ratio <= kappa * r.m_ell);
    let pairs: Vec<(&TrajectorySegment, &TrajectorySegment)> = held_out.iter().map(|(a, b)| (a, b)).collect();
    let theta = e1_lipschitz_check(ops, lambda, &pairs)?;

    Ok(TrajectoryOutput {
        study: TrajectoryStudy {
            segments: segs.len(),
            segment_dimension,
            e1_dimension,
            e1_within,
            theta,
            metric,
            smoothing: SmoothingStudy {
                c,
                kappa,
                kappa_calibrated,
                reference: ref_reports,
                held_out: held_reports,
                passed: smoothing_ok,
            },
        },
        distances,
    })
}

// ------------------------------------------------- verify, hypotheses

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorStudy {
    pub tables: Vec<ConvergenceTable>,
    pub min_order: f64,
    pub fourier_error: f64,
    pub passed: bool,
}

/// MMS ladder with the configured domain and boundary coefficients, plus
/// the Fourier-direction roundoff check on the configured grid.
pub fn operator_study(cfg: &RunConfig) -> Result<OperatorStudy> {
    let s = MmsSetup {
        lx: cfg.domain.lx,
        ly: cfg.domain.ly,
        alpha: cfg.params.alpha,
        beta: cfg.params.beta,
    };
    let tables = verify_operators(&s, &LADDER)?;
    let g = Grid::new(cfg.domain)?;
    let fourier_error = fourier_roundoff(&g, s.alpha, s.beta, cfg.run.init.seed)?;
    let min_order = tables.iter().map(|t| t.min_order()).fold(f64::INFINITY, f64::min);
    Ok(OperatorStudy {
        passed: min_order >= MIN_ORDER && fourier_error <= FOURIER_TOL,
        tables,
        min_order,
        fourier_error,
    })
}

pub fn convergence_csv(tables: &[ConvergenceTable]) -> String {
    let mut s = String::from(ConvergenceTable::CSV_HEADER);
    s.push('\n');
    for t in tables {
        for r in t.csv_rows() {
            s.push_str(&r);
            s.push('\n');
        }
    }
    s
}

/// Samples per direction in the hypothesis check.
pub const HYPOTHESIS_SAMPLES: usize = 2001;

pub fn hypothesis_study(cfg: &RunConfig) -> Result<HypothesisReport> {
    let h = &cfg.params.hypothesis;
    check_hypotheses(h, h.sample_radius, HYPOTHESIS_SAMPLES)
}

/// Writes `value` as pretty JSON into `dir/name`, returning the path.
pub fn write_report<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let p = dir.join(name);
    io::write_json(&p, value)?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ChannelDomain;

    fn small() -> RunConfig {
        let mut c = RunConfig::default();
        c.domain = ChannelDomain::new(1.0, 1.0, 8, 8);
        c.run.t_end = 0.02;
        c.run.snapshot_cadence = 5;
        c
    }

    #[test]
    fn resume_is_bitwise() {
        let cfg = small();
        let full = tempfile::tempdir().unwrap();
        let (m, s) = run_to_dir(&cfg, full.path()).unwrap();
        assert_eq!(s.steps, 20);
        assert_eq!(m.snapshots, vec![0, 1, 2, 3, 4]);
        assert!(s.mass_ok && s.divergence_ok);

        // interrupted after 10 steps, then resumed
        let part = tempfile::tempdir().unwrap();
        let mut short = cfg.clone();
        short.run.t_end = 0.01;
        run_to_dir(&short, part.path()).unwrap();
        let mut m: Manifest = io::read_json(&manifest_path(part.path())).unwrap();
        m.config = cfg.to_ini();
        m.config_hash = cfg.hash();
        io::write_json(&manifest_path(part.path()), &m).unwrap();
        let (m2, s2) = resume(&manifest_path(part.path())).unwrap();
        assert_eq!(s2, s);
        for f in ["energy.csv", "snap_000004_phi.bin", "snap_000004_mu.bin"] {
            assert_eq!(
                fs::read(full.path().join(f)).unwrap(),
                fs::read(part.path().join(f)).unwrap(),
                "{f}"
            );
        }
        assert_eq!(m2.files.len(), m.files.len() + 28);
    }

    #[test]
    fn resume_rejects_tampered_outputs() {
        let out = tempfile::tempdir().unwrap();
        run_to_dir(&small(), out.path()).unwrap();
        fs::write(out.path().join("snap_000002_phi.bin"), [0u8; 8]).unwrap();
        assert!(matches!(resume(&manifest_path(out.path())), Err(Error::Incompatible(_))));
    }

    #[test]
    fn weak_stabilization_is_rejected() {
        let mut cfg = small();
        cfg.scheme.s_bulk = 0.5;
        assert!(matches!(run_to_dir(&cfg, tempfile::tempdir().unwrap().path()), Err(Error::Parameter(_))));
    }

    #[test]
    fn parallel_distance_matrix_matches_serial() {
        let pts: Vec<f64> = (0..17).map(|k| (k as f64).sin()).collect();
        let d = par_distance_matrix(&pts, |a, b| Ok((a - b).abs())).unwrap();
        let s = crate::trajectory::distance_matrix(&pts, |a, b| Ok((a - b).abs())).unwrap();
        assert_eq!(d, s);
    }
}
