//! `chns`: command-line driver for runs and diagnostics.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use chns_core::config::RunConfig;
use chns_core::io::{energy_csv, write_text, Manifest};
use chns_core::studies::{self, write_report};
use chns_core::trajectory::distance_matrix_csv;
use chns_core::{Error, Result};

#[derive(Parser)]
#[command(name = "chns", version, about = "Cahn-Hilliard-Navier-Stokes channel simulator and diagnostics")]
struct Cli {
    /// Run configuration (INI).
    #[arg(short = 'c', long = "config", global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(short = 'o', long = "out", global = true, default_value = "out")]
    out: PathBuf,
    /// Treat failed checks as errors: print a JSON error and exit nonzero.
    #[arg(long, global = true)]
    strict: bool,
    /// Worker threads; affects wall-clock time only, never results.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time-step the configured run: energy.csv, snapshots, manifest.json.
    Run {
        /// Continue an interrupted run from its manifest.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Manufactured-solution convergence study of the discrete operators.
    VerifyOperators,
    /// Energy ledger at dt and dt/2 with the per-step increase bound.
    EnergyReport,
    /// Absorbing-set fit over three initial energies plus time-averaged bounds.
    Absorption,
    /// Continuous dependence on initial data.
    Gronwall {
        /// Size of the initial perturbation (defaults to the config value).
        #[arg(long)]
        perturbation: Option<f64>,
    },
    /// Trajectory attractor: metric checks, smoothing and fractal dimension.
    TrajectoryDim,
    /// Check the growth and Lipschitz hypotheses on f and g.
    CheckHypotheses,
}

fn load(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::from_file(p),
        None => Ok(RunConfig::default()),
    }
}

fn report(out: &Path, cmd: &str, cfg: &RunConfig, files: &[PathBuf]) -> Result<()> {
    let mut m = Manifest::new(cmd, cfg);
    for f in files {
        m.record(out, f)?;
    }
    write_report(out, &format!("{cmd}.manifest.json"), &m)?;
    Ok(())
}

fn failures(checks: &[(&str, bool)]) -> Vec<String> {
    checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| n.to_string()).collect()
}

fn dispatch(cli: &Cli) -> Result<Vec<String>> {
    let out = &cli.out;
    let cfg = load(&cli.config)?;
    Ok(match &cli.command {
        Command::Run { resume } => {
            let (m, s) = match resume {
                Some(p) => studies::resume(p)?,
                None => studies::run_to_dir(&cfg, out)?,
            };
            println!(
                "{} steps to t = {}: mass drift {:.3e}, max |div u| {:.3e}, {} snapshots",
                s.steps,
                s.t,
                s.max_mass_drift,
                s.max_divergence,
                m.snapshots.len()
            );
            failures(&[("mass conservation", s.mass_ok), ("incompressibility", s.divergence_ok)])
        }
        Command::VerifyOperators => {
            let st = studies::operator_study(&cfg)?;
            let csv = out.join("convergence.csv");
            std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
            write_text(&csv, &studies::convergence_csv(&st.tables))?;
            let js = write_report(out, "verify_operators.json", &st)?;
            report(out, "verify-operators", &cfg, &[csv, js])?;
            for t in &st.tables {
                println!("{:<22} refined {:<6} min order {:.3}", t.operator, t.refined, t.min_order());
            }
            println!("fourier-direction error {:.3e}", st.fourier_error);
            failures(&[("operator convergence", st.passed)])
        }
        Command::EnergyReport => {
            let (st, ledger) = studies::energy_study(&cfg)?;
            std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
            let csv = out.join("energy.csv");
            write_text(&csv, &energy_csv(&ledger))?;
            let js = write_report(out, "energy_report.json", &st)?;
            report(out, "energy-report", &cfg, &[csv, js])?;
            println!(
                "max increase / dt^2 {:.3e} (C_tol {}), defect reduction {:.2}",
                st.max_increase_ratio[0].max(st.max_increase_ratio[1]),
                st.ctol,
                st.defect_reduction
            );
            failures(&[("energy increase", st.increase_ok), ("defect reduction", st.reduction_ok)])
        }
        Command::Absorption => {
            let a = studies::absorption_study(&cfg)?;
            let avg = studies::time_averaged_study(&cfg, &a.reference)?;
            let mut files = vec![
                write_report(out, "absorption.json", &a.study)?,
                write_report(out, "time_averaged.json", &avg)?,
            ];
            for (k, l) in a.ledgers.iter().enumerate() {
                let p = out.join(format!("energy_run{k}.csv"));
                write_text(&p, &energy_csv(l))?;
                files.push(p);
            }
            report(out, "absorption", &cfg, &files)?;
            let f = &a.study.fit;
            println!(
                "plateau {:.6e}, spread {:.2e}, delta {:.3e}, max violation {:.2e}, window sup/median {:.4}",
                f.rho1, f.plateau_spread, f.delta, f.max_violation, avg.report.sup_over_median
            );
            failures(&[
                ("common plateau", a.study.spread_ok),
                ("absorbing bound", a.study.bound_ok),
                ("time-averaged bound", avg.passed),
            ])
        }
        Command::Gronwall { perturbation } => {
            let eps = perturbation.unwrap_or(cfg.diagnostics.perturbation);
            let g = studies::gronwall_study(&cfg, eps)?;
            let js = write_report(out, "gronwall.json", &g)?;
            report(out, "gronwall", &cfg, &[js])?;
            println!(
                "C = {:.3e} ({}), max D/bound {:.3e}, slack {}",
                g.c,
                if g.calibrated { "calibrated" } else { "given" },
                g.report.max_ratio,
                g.report.slack
            );
            failures(&[("gronwall bound", g.report.separation_ok)])
        }
        Command::TrajectoryDim => {
            let t = studies::trajectory_study(&cfg)?;
            std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
            let dm = out.join("distances.csv");
            write_text(&dm, &distance_matrix_csv(&t.distances))?;
            let js = write_report(out, "trajectory_dim.json", &t.study)?;
            report(out, "trajectory-dim", &cfg, &[dm, js])?;
            let s = &t.study;
            match &s.segment_dimension {
                Ok(d) => println!(
                    "dimension {:.3} [{:.3}, {:.3}] from {} segments (R^2 {:.4})",
                    d.slope, d.ci_low, d.ci_high, d.n_points, d.r_squared
                ),
                Err(e) => println!("dimension: {e}"),
            }
            println!(
                "theta {:.3e}, kappa {:.3e}, metric axioms {}, semigroup {}",
                s.theta,
                s.smoothing.kappa,
                if s.metric.passed { "ok" } else { "FAILED" },
                if s.metric.semigroup_bitwise { "bitwise" } else { "FAILED" }
            );
            failures(&[
                ("metric axioms", s.metric.passed),
                ("smoothing", s.smoothing.passed),
                ("scaling region", s.segment_dimension.is_ok()),
            ])
        }
        Command::CheckHypotheses => {
            let h = studies::hypothesis_study(&cfg)?;
            let js = write_report(out, "hypotheses.json", &h)?;
            report(out, "check-hypotheses", &cfg, &[js])?;
            let c = &h.constants;
            println!("{}", if h.satisfied { "satisfied" } else { "violated" });
            println!("p = {}, c1 = {}, c2 = {}, k1 = {}, lip_f = {}", c.p, c.c1, c.c2, c.k1, c.lip_f);
            println!("q = {}, c3 = {}, c4 = {}, k2 = {}, lip_g = {}", c.q, c.c3, c.c4, c.k2, c.lip_g);
            for w in &h.witnesses {
                println!(
                    "witness: {} at u = {}{}: {} > {}",
                    w.condition,
                    w.u,
                    w.v.map(|v| format!(", v = {v}")).unwrap_or_default(),
                    w.lhs,
                    w.rhs
                );
            }
            failures(&[("hypotheses", h.satisfied)])
        }
    })
}

fn fail(strict: bool, kind: &str, message: &str) -> ExitCode {
    if strict {
        let e = json!({ "error": kind, "message": message });
        let _ = writeln!(std::io::stderr(), "{e}");
    } else {
        let _ = writeln!(std::io::stderr(), "error: {message}");
    }
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(cli.strict, "threads", &e.to_string());
        }
    }
    match dispatch(&cli) {
        Err(e) => fail(cli.strict, e.kind(), &e.to_string()),
        Ok(failed) if cli.strict && !failed.is_empty() => {
            fail(true, "check_failed", &format!("failed checks: {}", failed.join(", ")))
        }
        Ok(failed) => {
            for f in failed {
                let _ = writeln!(std::io::stderr(), "check failed: {f}");
            }
            ExitCode::SUCCESS
        }
    }
}
