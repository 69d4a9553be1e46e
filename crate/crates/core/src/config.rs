//! INI run configuration: `[section]` headers and `key = value` lines,
//! `#` or `;` comments. Unknown keys are errors, and every error names the
//! offending line.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::ChannelDomain;
use crate::physics::{Forcing, GrowthHypothesis, ModelParams, Polynomial};
use crate::solver::{SchemeConfig, SchemeMode};
use crate::state::InitSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSection {
    pub t_end: f64,
    pub snapshot_cadence: usize,
    pub init: InitSpec,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            snapshot_cadence: 100,
            init: InitSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySection {
    pub ell: f64,
    pub k: usize,
    pub ensemble_size: usize,
    pub burn_in: f64,
    /// Time between successive segment starts along one solution.
    pub gap: f64,
    /// Independent solutions the ensemble is drawn from.
    pub runs: usize,
}

impl Default for TrajectorySection {
    fn default() -> Self {
        Self {
            ell: 1.0,
            k: 32,
            ensemble_size: 200,
            burn_in: 20.0,
            gap: 0.5,
            runs: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSection {
    /// Frozen Gronwall constant; calibrated on a reference pair when absent.
    pub gronwall_c: Option<f64>,
    /// Frozen smoothing constant; calibrated when absent.
    pub smoothing_kappa: Option<f64>,
    /// `C_tol` in the per-step bound `J^{n+1} - J^n <= C_tol dt^2`.
    pub energy_ctol: f64,
    pub burn_in_fraction: f64,
    pub perturbation: f64,
    /// Tolerance of the absorbing-set bound.
    pub absorption_tol: f64,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self {
            gronwall_c: None,
            smoothing_kappa: None,
            energy_ctol: 1.0,
            burn_in_fraction: 0.5,
            perturbation: 1e-8,
            absorption_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RunConfig {
    pub domain: ChannelDomain,
    pub params: ModelParams,
    pub scheme: SchemeConfig,
    pub run: RunSection,
    pub trajectory: TrajectorySection,
    pub diagnostics: DiagnosticsSection,
}

struct Entry {
    line: usize,
    value: String,
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { line, msg: msg.into() }
}

const KEYS: &[(&str, &[&str])] = &[
    ("domain", &["Lx", "Ly", "Nx", "Ny"]),
    ("params", &["nu", "lambda", "gamma", "alpha", "beta", "h"]),
    (
        "nonlinearity",
        &[
            "poly_f", "poly_g", "p", "q", "c1", "c2", "k1", "lip_f", "c3", "c4", "k2", "lip_g", "sample_radius",
        ],
    ),
    ("scheme", &["dt", "S_bulk", "S_wall", "mode", "n_modes", "pin_velocity"]),
    (
        "run",
        &["T", "snapshot_cadence", "seed", "init_modes", "phi_amplitude", "u_amplitude", "mean_phi"],
    ),
    ("trajectory", &["ell", "K", "ensemble_size", "burn_in", "gap", "runs"]),
    (
        "diagnostics",
        &[
            "gronwall_C",
            "smoothing_kappa",
            "energy_ctol",
            "burn_in_fraction",
            "perturbation",
            "absorption_tol",
        ],
    ),
];

struct Reader {
    entries: HashMap<String, Entry>,
}

impl Reader {
    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, default: T, what: &str) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(e) => e
                .value
                .parse()
                .map_err(|_| err(e.line, format!("{key}: expected {what}, got '{}'", e.value))),
        }
    }

    fn real(&self, key: &str, default: f64) -> Result<f64> {
        let v: f64 = self.parsed(key, default, "a number")?;
        if !v.is_finite() {
            return Err(err(self.line(key), format!("{key} must be finite")));
        }
        Ok(v)
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.real(key, default)?;
        if !(v > 0.0) {
            return Err(err(self.line(key), format!("{key} must be > 0")));
        }
        Ok(v)
    }

    fn count(&self, key: &str, default: usize) -> Result<usize> {
        self.parsed(key, default, "a non-negative integer")
    }

    fn line(&self, key: &str) -> usize {
        self.get(key).map(|e| e.line).unwrap_or(0)
    }

    fn poly(&self, key: &str, default: Polynomial) -> Result<Polynomial> {
        match self.get(key) {
            None => Ok(default),
            Some(e) => {
                let c: std::result::Result<Vec<f64>, _> = e.value.split(',').map(|s| s.trim().parse()).collect();
                match c {
                    Ok(c) if !c.is_empty() && c.iter().all(|v| v.is_finite()) => Ok(Polynomial::new(c)),
                    _ => Err(err(
                        e.line,
                        format!("{key}: expected comma-separated ascending coefficients, got '{}'", e.value),
                    )),
                }
            }
        }
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v:?}")
}

impl RunConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        let mut section: Option<&str> = None;
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let s = raw.split(['#', ';']).next().unwrap_or("").trim();
            if s.is_empty() {
                continue;
            }
            if let Some(name) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                let name = name.trim();
                section = Some(
                    KEYS.iter()
                        .map(|(n, _)| *n)
                        .find(|n| *n == name)
                        .ok_or_else(|| err(line, format!("unknown section [{name}]")))?,
                );
                continue;
            }
            let (key, value) = s
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected 'key = value', got '{s}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section.ok_or_else(|| err(line, format!("key '{key}' outside any section")))?;
            let known = KEYS.iter().find(|(n, _)| *n == sec).map(|(_, k)| *k).unwrap_or(&[]);
            if !known.contains(&key) {
                return Err(err(line, format!("unknown key '{key}' in [{sec}]")));
            }
            let full = format!("{sec}.{key}");
            if entries.contains_key(&full) {
                return Err(err(line, format!("duplicate key '{full}'")));
            }
            entries.insert(
                full,
                Entry {
                    line,
                    value: value.to_string(),
                },
            );
        }
        Self::build(&Reader { entries })
    }

    fn build(r: &Reader) -> Result<Self> {
        let d = RunConfig::default();
        let domain = ChannelDomain {
            lx: r.positive("domain.Lx", d.domain.lx)?,
            ly: r.positive("domain.Ly", d.domain.ly)?,
            nx: r.count("domain.Nx", d.domain.nx)?,
            ny: r.count("domain.Ny", d.domain.ny)?,
        };
        domain.validate().map_err(|e| err(r.line("domain.Nx").max(r.line("domain.Ny")), e.to_string()))?;

        let h_spec = r.get("params.h").map(|e| e.value.clone()).unwrap_or_else(|| d.params.forcing.spec());
        let forcing = Forcing::parse(&h_spec).map_err(|e| err(r.line("params.h"), e.to_string()))?;

        let dh = GrowthHypothesis::default();
        let hypothesis = GrowthHypothesis::new(
            r.poly("nonlinearity.poly_f", dh.poly_f.clone())?,
            r.poly("nonlinearity.poly_g", dh.poly_g.clone())?,
            r.real("nonlinearity.p", dh.p)?,
            r.real("nonlinearity.q", dh.q)?,
            (
                r.real("nonlinearity.c1", dh.c1)?,
                r.real("nonlinearity.c2", dh.c2)?,
                r.real("nonlinearity.k1", dh.k1)?,
                r.real("nonlinearity.lip_f", dh.lip_f)?,
            ),
            (
                r.real("nonlinearity.c3", dh.c3)?,
                r.real("nonlinearity.c4", dh.c4)?,
                r.real("nonlinearity.k2", dh.k2)?,
                r.real("nonlinearity.lip_g", dh.lip_g)?,
            ),
            r.positive("nonlinearity.sample_radius", dh.sample_radius)?,
        )
        .map_err(|e| {
            let line = ["p", "q", "c1", "c2", "k1", "c3", "c4", "k2"]
                .iter()
                .map(|k| r.line(&format!("nonlinearity.{k}")))
                .max()
                .unwrap_or(0);
            err(line, e.to_string())
        })?;

        let mut params = ModelParams {
            forcing,
            hypothesis,
            ..d.params.clone()
        };
        for (name, slot) in [
            ("nu", &mut params.nu),
            ("lambda", &mut params.lambda),
            ("gamma", &mut params.gamma),
            ("alpha", &mut params.alpha),
            ("beta", &mut params.beta),
        ] {
            let key = format!("params.{name}");
            let v = r.real(&key, *slot)?;
            if !(v > 0.0) {
                return Err(err(r.line(&key), format!("params.{name} must be > 0")));
            }
            *slot = v;
        }

        let mode_line = r.line("scheme.mode");
        let scheme = SchemeConfig {
            dt: r.positive("scheme.dt", d.scheme.dt)?,
            s_bulk: r.real("scheme.S_bulk", d.scheme.s_bulk)?,
            s_wall: r.real("scheme.S_wall", d.scheme.s_wall)?,
            mode: match r.get("scheme.mode") {
                None => d.scheme.mode,
                Some(e) => SchemeMode::parse(&e.value).map_err(|x| err(mode_line, x.to_string()))?,
            },
            n_modes: r.count("scheme.n_modes", d.scheme.n_modes)?,
            pin_velocity: r.parsed("scheme.pin_velocity", d.scheme.pin_velocity, "true or false")?,
        };
        scheme.validate().map_err(|e| {
            let line = ["dt", "S_bulk", "S_wall", "mode", "n_modes"]
                .iter()
                .map(|k| r.line(&format!("scheme.{k}")))
                .max()
                .unwrap_or(0);
            err(line, e.to_string())
        })?;

        let run = RunSection {
            t_end: r.positive("run.T", d.run.t_end)?,
            snapshot_cadence: r.count("run.snapshot_cadence", d.run.snapshot_cadence)?,
            init: InitSpec {
                seed: r.parsed("run.seed", d.run.init.seed, "an unsigned 64-bit integer")?,
                modes: r.count("run.init_modes", d.run.init.modes)?,
                phi_amplitude: r.real("run.phi_amplitude", d.run.init.phi_amplitude)?,
                u_amplitude: r.real("run.u_amplitude", d.run.init.u_amplitude)?,
                mean_phi: r.real("run.mean_phi", d.run.init.mean_phi)?,
            },
        };
        if run.snapshot_cadence == 0 {
            return Err(err(r.line("run.snapshot_cadence"), "run.snapshot_cadence must be >= 1"));
        }

        let trajectory = TrajectorySection {
            ell: r.positive("trajectory.ell", d.trajectory.ell)?,
            k: r.count("trajectory.K", d.trajectory.k)?,
            ensemble_size: r.count("trajectory.ensemble_size", d.trajectory.ensemble_size)?,
            burn_in: r.real("trajectory.burn_in", d.trajectory.burn_in)?,
            gap: r.positive("trajectory.gap", d.trajectory.gap)?,
            runs: r.count("trajectory.runs", d.trajectory.runs)?,
        };
        for (key, bad) in [
            ("trajectory.K", trajectory.k == 0),
            ("trajectory.ensemble_size", trajectory.ensemble_size == 0),
            ("trajectory.burn_in", trajectory.burn_in < 0.0),
            ("trajectory.runs", trajectory.runs == 0 || trajectory.runs > trajectory.ensemble_size),
        ] {
            if bad {
                return Err(err(r.line(key), format!("{key} out of range")));
            }
        }

        let optional = |key: &str| -> Result<Option<f64>> {
            r.get(key).map(|_| r.positive(key, 1.0)).transpose()
        };
        let diagnostics = DiagnosticsSection {
            gronwall_c: optional("diagnostics.gronwall_C")?,
            smoothing_kappa: optional("diagnostics.smoothing_kappa")?,
            energy_ctol: r.real("diagnostics.energy_ctol", d.diagnostics.energy_ctol)?,
            burn_in_fraction: r.real("diagnostics.burn_in_fraction", d.diagnostics.burn_in_fraction)?,
            perturbation: r.positive("diagnostics.perturbation", d.diagnostics.perturbation)?,
            absorption_tol: r.positive("diagnostics.absorption_tol", d.diagnostics.absorption_tol)?,
        };
        if !(0.0..1.0).contains(&diagnostics.burn_in_fraction) {
            return Err(err(
                r.line("diagnostics.burn_in_fraction"),
                "diagnostics.burn_in_fraction must lie in [0, 1)",
            ));
        }
        if diagnostics.energy_ctol < 0.0 {
            return Err(err(r.line("diagnostics.energy_ctol"), "diagnostics.energy_ctol must be >= 0"));
        }

        Ok(Self {
            domain,
            params,
            scheme,
            run,
            trajectory,
            diagnostics,
        })
    }

    /// Canonical INI text; parses back to an equal config.
    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        let poly = |p: &Polynomial| p.coeffs.iter().map(|c| fmt_f(*c)).collect::<Vec<_>>().join(", ");
        let (dm, p, h, sc, r, t, dg) = (
            &self.domain,
            &self.params,
            &self.params.hypothesis,
            &self.scheme,
            &self.run,
            &self.trajectory,
            &self.diagnostics,
        );
        let _ = writeln!(s, "[domain]\nLx = {}\nLy = {}\nNx = {}\nNy = {}\n", fmt_f(dm.lx), fmt_f(dm.ly), dm.nx, dm.ny);
        let _ = writeln!(
            s,
            "[params]\nnu = {}\nlambda = {}\ngamma = {}\nalpha = {}\nbeta = {}\nh = {}\n",
            fmt_f(p.nu),
            fmt_f(p.lambda),
            fmt_f(p.gamma),
            fmt_f(p.alpha),
            fmt_f(p.beta),
            p.forcing.spec()
        );
        let _ = writeln!(
            s,
            "[nonlinearity]\npoly_f = {}\npoly_g = {}\np = {}\nq = {}\nc1 = {}\nc2 = {}\nk1 = {}\nlip_f = {}\n\
             c3 = {}\nc4 = {}\nk2 = {}\nlip_g = {}\nsample_radius = {}\n",
            poly(&h.poly_f),
            poly(&h.poly_g),
            fmt_f(h.p),
            fmt_f(h.q),
            fmt_f(h.c1),
            fmt_f(h.c2),
            fmt_f(h.k1),
            fmt_f(h.lip_f),
            fmt_f(h.c3),
            fmt_f(h.c4),
            fmt_f(h.k2),
            fmt_f(h.lip_g),
            fmt_f(h.sample_radius)
        );
        let _ = writeln!(
            s,
            "[scheme]\ndt = {}\nS_bulk = {}\nS_wall = {}\nmode = {}\nn_modes = {}\npin_velocity = {}\n",
            fmt_f(sc.dt),
            fmt_f(sc.s_bulk),
            fmt_f(sc.s_wall),
            sc.mode.name(),
            sc.n_modes,
            sc.pin_velocity
        );
        let _ = writeln!(
            s,
            "[run]\nT = {}\nsnapshot_cadence = {}\nseed = {}\ninit_modes = {}\nphi_amplitude = {}\n\
             u_amplitude = {}\nmean_phi = {}\n",
            fmt_f(r.t_end),
            r.snapshot_cadence,
            r.init.seed,
            r.init.modes,
            fmt_f(r.init.phi_amplitude),
            fmt_f(r.init.u_amplitude),
            fmt_f(r.init.mean_phi)
        );
        let _ = writeln!(
            s,
            "[trajectory]\nell = {}\nK = {}\nensemble_size = {}\nburn_in = {}\ngap = {}\nruns = {}\n",
            fmt_f(t.ell),
            t.k,
            t.ensemble_size,
            fmt_f(t.burn_in),
            fmt_f(t.gap),
            t.runs
        );
        let _ = writeln!(s, "[diagnostics]");
        if let Some(c) = dg.gronwall_c {
            let _ = writeln!(s, "gronwall_C = {}", fmt_f(c));
        }
        if let Some(k) = dg.smoothing_kappa {
            let _ = writeln!(s, "smoothing_kappa = {}", fmt_f(k));
        }
        let _ = writeln!(
            s,
            "energy_ctol = {}\nburn_in_fraction = {}\nperturbation = {}\nabsorption_tol = {}",
            fmt_f(dg.energy_ctol),
            fmt_f(dg.burn_in_fraction),
            fmt_f(dg.perturbation),
            fmt_f(dg.absorption_tol)
        );
        s
    }

    /// SHA-256 of the canonical INI text, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_ini().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let c = RunConfig::parse("[domain]\nNx = 16\nNy = 16\n").unwrap();
        assert_eq!(c.domain.nx, 16);
        assert_eq!(c.params, ModelParams::default());
        assert_eq!(c.scheme, SchemeConfig::default());
    }

    #[test]
    fn round_trip() {
        let mut c = RunConfig::default();
        c.params.forcing = Forcing::Cellular {
            amplitude: 2.5,
            wavenumber: 2,
        };
        c.params.nu = 0.1 + 0.2;
        c.diagnostics.gronwall_c = Some(0.37);
        c.scheme.mode = SchemeMode::SpectralGalerkin;
        c.scheme.n_modes = 12;
        let back = RunConfig::parse(&c.to_ini()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn errors_name_the_line() {
        let e = RunConfig::parse("[params]\n\nnu = -1\n").unwrap_err();
        match e {
            Error::Config { line, msg } => {
                assert_eq!(line, 3);
                assert_eq!(msg, "params.nu must be > 0");
            }
            other => panic!("{other}"),
        }
        let e = RunConfig::parse("[params]\nlamda = 1\n").unwrap_err();
        assert!(matches!(&e, Error::Config { line: 2, msg } if msg.contains("unknown key")), "{e}");
        let e = RunConfig::parse("[scheme]\ndt = fast\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }));
        assert!(RunConfig::parse("nu = 1\n").is_err());
        assert!(RunConfig::parse("[nope]\n").is_err());
        let e = RunConfig::parse("[nonlinearity]\np = 2\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }));
    }
}
