//! Output formats: raw little-endian `f64` field files with JSON sidecars,
//! CSV time series, JSON reports and a manifest with SHA-256 file hashes.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::diagnostics::EnergyReport;
use crate::error::{Error, Result};
use crate::fields::{VectorField, WallField};
use crate::state::FieldState;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Sidecar describing one raw field file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub field: String,
    pub shape: Vec<usize>,
    /// `cell`, `x-face`, `y-face` or `wall`.
    pub stagger: String,
    pub t: f64,
    pub units: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub code_version: String,
    pub config_hash: String,
    /// Canonical config text, enough to reproduce every output.
    pub config: String,
    pub grid: (usize, usize),
    pub steps: usize,
    pub t_end: f64,
    /// Snapshot indices written, in order.
    pub snapshots: Vec<usize>,
    pub files: Vec<ManifestFile>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &serde_json::to_string_pretty(value)?)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn write_raw(path: &Path, data: impl Iterator<Item = f64>) -> Result<()> {
    let bytes: Vec<u8> = data.flat_map(f64::to_le_bytes).collect();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_raw(path: &Path, len: usize) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != 8 * len {
        return Err(Error::Precondition(format!(
            "{}: expected {} values, found {} bytes",
            path.display(),
            len,
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// `(name, stagger, units)` of each stored field.
const FIELDS: [(&str, &str, &str); 7] = [
    ("ux", "x-face", "velocity"),
    ("uy", "y-face", "velocity"),
    ("phi", "cell", "order parameter"),
    ("phi_lower", "wall", "order parameter"),
    ("phi_upper", "wall", "order parameter"),
    ("mu", "cell", "chemical potential"),
    ("p", "cell", "pressure"),
];

fn stem(index: usize, field: &str) -> String {
    format!("snap_{index:06}_{field}")
}

/// Writes one snapshot as raw field files plus sidecars into `dir`;
/// returns the written paths.
pub fn write_snapshot(dir: &Path, index: usize, s: &FieldState) -> Result<Vec<PathBuf>> {
    let mut out = vec![];
    for (name, stagger, units) in FIELDS {
        let (shape, data): (Vec<usize>, Vec<f64>) = match name {
            "ux" => (s.u.ux.shape().to_vec(), s.u.ux.iter().copied().collect()),
            "uy" => (s.u.uy.shape().to_vec(), s.u.uy.iter().copied().collect()),
            "phi" => (s.phi.shape().to_vec(), s.phi.iter().copied().collect()),
            "phi_lower" => (vec![s.phi_gamma.lower.len()], s.phi_gamma.lower.to_vec()),
            "phi_upper" => (vec![s.phi_gamma.upper.len()], s.phi_gamma.upper.to_vec()),
            "mu" => (s.mu.shape().to_vec(), s.mu.iter().copied().collect()),
            _ => (s.p.shape().to_vec(), s.p.iter().copied().collect()),
        };
        let bin = dir.join(format!("{}.bin", stem(index, name)));
        write_raw(&bin, data.into_iter())?;
        let side = dir.join(format!("{}.json", stem(index, name)));
        write_json(
            &side,
            &FieldSidecar {
                field: name.into(),
                shape,
                stagger: stagger.into(),
                t: s.t,
                units: units.into(),
            },
        )?;
        out.push(bin);
        out.push(side);
    }
    Ok(out)
}

pub fn read_snapshot(dir: &Path, index: usize) -> Result<FieldState> {
    let load2 = |name: &str| -> Result<(Array2<f64>, f64)> {
        let side: FieldSidecar = read_json(&dir.join(format!("{}.json", stem(index, name))))?;
        if side.shape.len() != 2 {
            return Err(Error::Precondition(format!("{name}: expected a 2-d field")));
        }
        let data = read_raw(&dir.join(format!("{}.bin", stem(index, name))), side.shape[0] * side.shape[1])?;
        let a = Array2::from_shape_vec((side.shape[0], side.shape[1]), data)
            .map_err(|e| Error::Precondition(e.to_string()))?;
        Ok((a, side.t))
    };
    let load1 = |name: &str| -> Result<Array1<f64>> {
        let side: FieldSidecar = read_json(&dir.join(format!("{}.json", stem(index, name))))?;
        Ok(Array1::from(read_raw(
            &dir.join(format!("{}.bin", stem(index, name))),
            side.shape[0],
        )?))
    };
    let (ux, t) = load2("ux")?;
    Ok(FieldState {
        t,
        u: VectorField { ux, uy: load2("uy")?.0 },
        phi: load2("phi")?.0,
        phi_gamma: WallField {
            lower: load1("phi_lower")?,
            upper: load1("phi_upper")?,
        },
        mu: load2("mu")?.0,
        p: load2("p")?.0,
    })
}

pub fn energy_csv(ledger: &[EnergyReport]) -> String {
    let mut s = String::from(EnergyReport::CSV_HEADER);
    s.push('\n');
    for r in ledger {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

/// Parses an `energy.csv` written by [`energy_csv`].
pub fn read_energy_csv(path: &Path) -> Result<Vec<EnergyReport>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some(EnergyReport::CSV_HEADER) {
        return Err(Error::Precondition(format!("{}: unexpected header", path.display())));
    }
    lines
        .enumerate()
        .map(|(k, l)| {
            let v: std::result::Result<Vec<f64>, _> = l.split(',').map(str::parse).collect();
            match v.as_deref() {
                Ok([t, j, dj, w, c, vi, f, d, r]) => Ok(EnergyReport {
                    t: *t,
                    j: *j,
                    dj_dt: *dj,
                    wall_dissipation: *w,
                    chem_dissipation: *c,
                    viscous_dissipation: *vi,
                    forcing_power: *f,
                    defect: *d,
                    residual: *r,
                }),
                _ => Err(Error::Precondition(format!("{}: bad row {}", path.display(), k + 2))),
            }
        })
        .collect()
}

impl Manifest {
    pub fn new(command: &str, cfg: &RunConfig) -> Self {
        Self {
            command: command.into(),
            code_version: CODE_VERSION.into(),
            config_hash: cfg.hash(),
            config: cfg.to_ini(),
            grid: (cfg.domain.nx, cfg.domain.ny),
            steps: 0,
            t_end: 0.0,
            snapshots: vec![],
            files: vec![],
        }
    }

    /// Records `path` (relative to `root`) with its hash, replacing any
    /// earlier entry for the same file.
    pub fn record(&mut self, root: &Path, path: &Path) -> Result<()> {
        let rel = path.strip_prefix(root).unwrap_or(path).display().to_string();
        let sha256 = sha256_file(path)?;
        self.files.retain(|f| f.path != rel);
        self.files.push(ManifestFile { path: rel, sha256 });
        Ok(())
    }

    pub fn config(&self) -> Result<RunConfig> {
        RunConfig::parse(&self.config)
    }

    /// Checks every recorded hash against the files under `root`.
    pub fn verify(&self, root: &Path) -> Result<()> {
        for f in &self.files {
            let h = sha256_file(&root.join(&f.path))?;
            if h != f.sha256 {
                return Err(Error::Incompatible(format!("{} does not match its manifest hash", f.path)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{ChannelDomain, Grid};
    use crate::physics::ModelParams;
    use crate::state::{random_state, InitSpec};

    #[test]
    fn snapshot_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(ChannelDomain::new(1.0, 1.0, 8, 8)).unwrap();
        let mut s = random_state(&g, &ModelParams::default(), &InitSpec::default()).unwrap();
        s.t = 0.1 + 0.2;
        let files = write_snapshot(dir.path(), 3, &s).unwrap();
        assert_eq!(files.len(), 14);
        assert_eq!(read_snapshot(dir.path(), 3).unwrap(), s);
        let bytes = fs::read(dir.path().join("snap_000003_phi.bin")).unwrap();
        assert_eq!(bytes.len(), 8 * 64);
        assert_eq!(f64::from_le_bytes(bytes[..8].try_into().unwrap()), s.phi[[0, 0]]);
    }

    #[test]
    fn energy_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let r = EnergyReport {
            t: 0.1,
            j: 1.0 / 3.0,
            dj_dt: -2.0,
            wall_dissipation: 0.5,
            chem_dissipation: 0.25,
            viscous_dissipation: 0.125,
            forcing_power: 0.0,
            defect: -1e-9,
            residual: f64::NAN,
        };
        let p = dir.path().join("energy.csv");
        write_text(&p, &energy_csv(&[r])).unwrap();
        let back = read_energy_csv(&p).unwrap();
        assert_eq!(back[0].j, r.j);
        assert!(back[0].residual.is_nan());
    }

    #[test]
    fn manifest_detects_tampering() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_text(&p, "x").unwrap();
        let mut m = Manifest::new("run", &RunConfig::default());
        m.record(dir.path(), &p).unwrap();
        m.verify(dir.path()).unwrap();
        write_text(&p, "y").unwrap();
        assert!(m.verify(dir.path()).is_err());
        assert_eq!(m.config().unwrap(), RunConfig::default());
    }
}
