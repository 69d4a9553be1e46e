//! Nonlinearities, growth hypotheses, chemical potential, forcing and the
//! Lyapunov functional.

use std::f64::consts::PI;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{BulkSurface, VectorField, WallField};
use crate::grid::Grid;
use crate::operators::stencil::{
    bulk_dot, bulk_gradient_form, laplacian_dirichlet, surface_gradient_form, vector_dot,
    wall_dot,
};

/// Polynomial with ascending coefficients `c[0] + c[1] s + ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        Self { coeffs }
    }

    /// `s^3 - s`.
    pub fn double_well() -> Self {
        Self::new(vec![0.0, -1.0, 0.0, 1.0])
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::new(vec![0.0]);
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        )
    }

    /// Antiderivative vanishing at 0.
    pub fn primitive(&self) -> Self {
        let mut c = vec![0.0];
        c.extend(self.coeffs.iter().enumerate().map(|(k, v)| v / (k + 1) as f64));
        Self::new(c)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap_or(&0.0)
    }
}

/// Nonlinearities `f`, `g` with the constants of the growth hypotheses:
/// `|f'(u)-f'(v)| <= C1 |u-v| (|u|^{p-3}+|v|^{p-3}+1)`,
/// `c1|u|^p - k1 <= f(u)u <= c2|u|^p + k1`,
/// `|g(u)-g(v)| <= C2 |u-v| (|u|^{q-2}+|v|^{q-2}+1)`,
/// `c3|u|^q - k2 <= g(u)u <= c4|u|^q + k2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthHypothesis {
    pub poly_f: Polynomial,
    pub poly_g: Polynomial,
    pub p: f64,
    pub q: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub k1: f64,
    pub k2: f64,
    pub lip_f: f64,
    pub lip_g: f64,
    pub sample_radius: f64,
}

impl Default for GrowthHypothesis {
    fn default() -> Self {
        Self {
            poly_f: Polynomial::double_well(),
            poly_g: Polynomial::double_well(),
            p: 4.0,
            q: 4.0,
            c1: 0.5,
            c2: 1.0,
            c3: 0.5,
            c4: 1.0,
            k1: 0.5,
            k2: 0.5,
            lip_f: 3.0,
            lip_g: 1.5,
            sample_radius: 4.0,
        }
    }
}

impl GrowthHypothesis {
    /// Constructs a hypothesis with explicit constants; checks `p >= 3`, `q > 2`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        poly_f: Polynomial,
        poly_g: Polynomial,
        p: f64,
        q: f64,
        (c1, c2, k1, lip_f): (f64, f64, f64, f64),
        (c3, c4, k2, lip_g): (f64, f64, f64, f64),
        sample_radius: f64,
    ) -> Result<Self> {
        if !(p >= 3.0) {
            return Err(Error::Parameter(format!("growth exponent p must be >= 3, got {p}")));
        }
        if !(q > 2.0) {
            return Err(Error::Parameter(format!("growth exponent q must be > 2, got {q}")));
        }
        for (name, v) in [("c1", c1), ("c2", c2), ("c3", c3), ("c4", c4), ("k1", k1), ("k2", k2)] {
            if !(v > 0.0) {
                return Err(Error::Parameter(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(Self {
            poly_f,
            poly_g,
            p,
            q,
            c1,
            c2,
            c3,
            c4,
            k1,
            k2,
            lip_f,
            lip_g,
            sample_radius,
        })
    }

    /// Fits admissible constants for arbitrary polynomial nonlinearities by
    /// sampling `[-R, R]`, with a 10% safety margin.
    pub fn fitted(poly_f: Polynomial, poly_g: Polynomial, p: f64, q: f64, r: f64) -> Result<Self> {
        let n = 4001;
        let xs: Vec<f64> = (0..n).map(|k| -r + 2.0 * r * k as f64 / (n - 1) as f64).collect();
        let growth = |poly: &Polynomial, e: f64| {
            let big: Vec<f64> = xs
                .iter()
                .filter(|s| s.abs() >= 0.5 * r)
                .map(|&s| poly.eval(s) * s / s.abs().powf(e))
                .collect();
            let lo = big.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = big.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let c_lo = if lo > 0.0 { 0.5 * lo } else { 0.5 };
            let c_hi = if hi > 0.0 { 1.1 * hi } else { 1.0 };
            let k = xs
                .iter()
                .map(|&s| {
                    let v = poly.eval(s) * s;
                    (c_lo * s.abs().powf(e) - v).max(v - c_hi * s.abs().powf(e))
                })
                .fold(0.0_f64, f64::max);
            (c_lo, c_hi, 1.1 * k.max(1e-3))
        };
        let fp = poly_f.derivative();
        let lip = |d: &dyn Fn(f64) -> f64, e: f64| {
            let mut best = 0.0_f64;
            for (a, &u) in xs.iter().enumerate().step_by(20) {
                for &v in xs.iter().skip(a + 1).step_by(20) {
                    let w = (u - v).abs() * (u.abs().powf(e) + v.abs().powf(e) + 1.0);
                    best = best.max((d(u) - d(v)).abs() / w);
                }
            }
            1.1 * best.max(1e-3)
        };
        let (c1, c2, k1) = growth(&poly_f, p);
        let (c3, c4, k2) = growth(&poly_g, q);
        let lip_f = lip(&|s| fp.eval(s), p - 3.0);
        let lip_g = lip(&|s| poly_g.eval(s), q - 2.0);
        Self::new(poly_f, poly_g, p, q, (c1, c2, k1, lip_f), (c3, c4, k2, lip_g), r)
    }

    pub fn f(&self, s: f64) -> f64 {
        self.poly_f.eval(s)
    }
    pub fn g(&self, s: f64) -> f64 {
        self.poly_g.eval(s)
    }
    pub fn big_f(&self, s: f64) -> f64 {
        self.poly_f.primitive().eval(s)
    }
    pub fn big_g(&self, s: f64) -> f64 {
        self.poly_g.primitive().eval(s)
    }
    pub fn df(&self, s: f64) -> f64 {
        self.poly_f.derivative().eval(s)
    }
    pub fn dg(&self, s: f64) -> f64 {
        self.poly_g.derivative().eval(s)
    }

    /// `max |f'|` and `max |g'|` on `[-r, r]` (sampled).
    pub fn lipschitz_on(&self, r: f64) -> (f64, f64) {
        let (df, dg) = (self.poly_f.derivative(), self.poly_g.derivative());
        (0..=2000).fold((0.0_f64, 0.0_f64), |(a, b), k| {
            let s = -r + 2.0 * r * k as f64 / 2000.0;
            (a.max(df.eval(s).abs()), b.max(dg.eval(s).abs()))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub condition: String,
    pub u: f64,
    pub v: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub satisfied: bool,
    pub radius: f64,
    pub samples: usize,
    pub witnesses: Vec<Witness>,
    pub constants: GrowthHypothesis,
}

/// Samples `[-R, R]` uniformly (`n` points, pairs for the Lipschitz bounds)
/// and reports the first violation of each condition.
pub fn check_hypotheses(hyp: &GrowthHypothesis, r: f64, n: usize) -> Result<HypothesisReport> {
    if !(r > 0.0) {
        return Err(Error::Parameter(format!("sample radius must be > 0, got {r}")));
    }
    if n < 1000 {
        return Err(Error::Parameter(format!("need at least 1000 samples, got {n}")));
    }
    let xs: Vec<f64> = (0..n).map(|k| -r + 2.0 * r * k as f64 / (n - 1) as f64).collect();
    let rel = |lhs: f64, rhs: f64| lhs <= rhs + 1e-12 * (1.0 + lhs.abs().max(rhs.abs()));
    let mut witnesses = vec![];
    let (p, q) = (hyp.p, hyp.q);

    let mut growth = |name: &str, poly: &Polynomial, c_lo: f64, c_hi: f64, k: f64, e: f64| {
        for &s in &xs {
            let v = poly.eval(s) * s;
            let lower = c_lo * s.abs().powf(e) - k;
            if !rel(lower, v) {
                witnesses.push(Witness {
                    condition: format!("{name} lower growth"),
                    u: s,
                    v: None,
                    lhs: lower,
                    rhs: v,
                });
                return;
            }
            let upper = c_hi * s.abs().powf(e) + k;
            if !rel(v, upper) {
                witnesses.push(Witness {
                    condition: format!("{name} upper growth"),
                    u: s,
                    v: None,
                    lhs: v,
                    rhs: upper,
                });
                return;
            }
        }
    };
    growth("f", &hyp.poly_f, hyp.c1, hyp.c2, hyp.k1, p);
    growth("g", &hyp.poly_g, hyp.c3, hyp.c4, hyp.k2, q);

    let fp = hyp.poly_f.derivative();
    let mut lipschitz = |name: &str, d: &dyn Fn(f64) -> f64, c: f64, e: f64| {
        for &u in &xs {
            for &v in &xs {
                let lhs = (d(u) - d(v)).abs();
                let rhs = c * (u - v).abs() * (u.abs().powf(e) + v.abs().powf(e) + 1.0);
                if !rel(lhs, rhs) {
                    witnesses.push(Witness {
                        condition: format!("{name} Lipschitz"),
                        u,
                        v: Some(v),
                        lhs,
                        rhs,
                    });
                    return;
                }
            }
        }
    };
    lipschitz("f'", &|s| fp.eval(s), hyp.lip_f, p - 3.0);
    lipschitz("g", &|s| hyp.poly_g.eval(s), hyp.lip_g, q - 2.0);

    Ok(HypothesisReport {
        satisfied: witnesses.is_empty(),
        radius: r,
        samples: n,
        witnesses,
        constants: hyp.clone(),
    })
}

/// External body force.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Forcing {
    Zero,
    /// `h = (A sin(pi y / Ly), 0)`.
    Channel { amplitude: f64 },
    /// Discrete curl of `psi = A sin(2 pi m x / Lx) sin^2(pi y / Ly)`.
    Cellular { amplitude: f64, wavenumber: usize },
}

impl Forcing {
    /// Parses `zero`, `channel:A` or `cellular:A[:m]`.
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.trim().split(':').collect();
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parameter(format!("bad forcing amplitude '{s}'")))
        };
        match parts.as_slice() {
            ["zero"] | ["0"] => Ok(Forcing::Zero),
            ["channel", a] => Ok(Forcing::Channel { amplitude: num(a)? }),
            ["cellular", a] => Ok(Forcing::Cellular {
                amplitude: num(a)?,
                wavenumber: 1,
            }),
            ["cellular", a, m] => Ok(Forcing::Cellular {
                amplitude: num(a)?,
                wavenumber: m
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parameter(format!("bad forcing wavenumber '{m}'")))?,
            }),
            _ => Err(Error::Parameter(format!(
                "unknown forcing '{spec}' (expected zero, channel:A or cellular:A[:m])"
            ))),
        }
    }

    pub fn spec(&self) -> String {
        match self {
            Forcing::Zero => "zero".into(),
            Forcing::Channel { amplitude } => format!("channel:{amplitude}"),
            Forcing::Cellular {
                amplitude,
                wavenumber,
            } => format!("cellular:{amplitude}:{wavenumber}"),
        }
    }

    pub fn field(&self, g: &Grid) -> VectorField {
        let (nx, ny) = (g.nx(), g.ny());
        let mut h = VectorField::zeros(nx, ny);
        match *self {
            Forcing::Zero => {}
            Forcing::Channel { amplitude } => {
                for i in 0..nx {
                    for j in 0..ny {
                        h.ux[[i, j]] = amplitude * (PI * g.y_center(j) / g.ly()).sin();
                    }
                }
            }
            Forcing::Cellular {
                amplitude,
                wavenumber,
            } => {
                let k = 2.0 * PI * wavenumber as f64 / g.lx();
                let psi = Array2::from_shape_fn((nx, ny + 1), |(i, j)| {
                    amplitude * (k * g.x_face(i)).sin() * (PI * g.y_face(j) / g.ly()).sin().powi(2)
                });
                for i in 0..nx {
                    for j in 0..ny {
                        h.ux[[i, j]] = (psi[[i, j + 1]] - psi[[i, j]]) / g.dy();
                    }
                    for j in 1..ny {
                        let ip = (i + 1) % nx;
                        h.uy[[i, j]] = -(psi[[ip, j]] - psi[[i, j]]) / g.dx();
                    }
                }
            }
        }
        h
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            Forcing::Zero => true,
            Forcing::Channel { amplitude } | Forcing::Cellular { amplitude, .. } => amplitude == 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub nu: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub forcing: Forcing,
    pub hypothesis: GrowthHypothesis,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            nu: 1.0,
            lambda: 1.0,
            gamma: 1.0,
            alpha: 1.0,
            beta: 1.0,
            forcing: Forcing::Zero,
            hypothesis: GrowthHypothesis::default(),
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("nu", self.nu),
            ("lambda", self.lambda),
            ("gamma", self.gamma),
            ("alpha", self.alpha),
            ("beta", self.beta),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("params.{name} must be > 0")));
            }
        }
        Ok(())
    }
}

/// `mu = -lap phi + f(phi)`, with the wall trace closing the stencil.
pub fn chemical_potential(g: &Grid, hyp: &GrowthHypothesis, phi: &BulkSurface) -> Result<Array2<f64>> {
    g.check_scalar(&phi.bulk)?;
    g.check_wall(&phi.wall)?;
    let lap = laplacian_dirichlet(g, &phi.bulk, &phi.wall);
    let f = &hyp.poly_f;
    Ok(ndarray::Zip::from(&lap)
        .and(&phi.bulk)
        .map_collect(|&l, &s| -l + f.eval(s)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// `||u||^2`
    pub kinetic: f64,
    /// `lambda ||phi||^2_{H1 sigma}`
    pub interfacial: f64,
    /// `2 lambda int_Omega F(phi)`
    pub bulk_potential: f64,
    /// `2 lambda int_Gamma G(phi)`
    pub wall_potential: f64,
    pub total: f64,
}

/// The Lyapunov functional `J(u, phi)` with its breakdown.
pub fn energy_j(g: &Grid, params: &ModelParams, u: &VectorField, phi: &BulkSurface) -> EnergyBreakdown {
    let hyp = &params.hypothesis;
    let big_f = hyp.poly_f.primitive();
    let big_g = hyp.poly_g.primitive();
    let kinetic = vector_dot(g, u, u);
    let h1 = bulk_gradient_form(g, phi, phi)
        + params.alpha * surface_gradient_form(g, &phi.wall, &phi.wall)
        + params.beta * wall_dot(g, &phi.wall, &phi.wall);
    let int_f = phi.bulk.iter().map(|&s| big_f.eval(s)).sum::<f64>() * g.cell_area();
    let int_g = phi
        .wall
        .lower
        .iter()
        .chain(phi.wall.upper.iter())
        .map(|&s| big_g.eval(s))
        .sum::<f64>()
        * g.dx();
    let interfacial = params.lambda * h1;
    let bulk_potential = 2.0 * params.lambda * int_f;
    let wall_potential = 2.0 * params.lambda * int_g;
    EnergyBreakdown {
        kinetic,
        interfacial,
        bulk_potential,
        wall_potential,
        total: kinetic + interfacial + bulk_potential + wall_potential,
    }
}

/// Constants of the two-sided bound
/// `d1 (|u|^2 + lambda |phi|^2_{H1s} + |phi|^p_p + |phi|^q_{q,Gamma}) - k1 <= J
///  <= d2 (|u|^2 + |phi|^2_{H1s} + |phi|^p_p + |phi|^q_{q,Gamma}) + k2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBounds {
    pub delta1: f64,
    pub delta2: f64,
    pub k1: f64,
    pub k2: f64,
}

/// Fits `a|s|^e - b <= P(s) <= A|s|^e + B` for a primitive `P` of degree `e`.
fn potential_bounds(prim: &Polynomial, e: f64, r: f64) -> (f64, f64, f64, f64) {
    let lead = prim.leading().max(1e-12);
    let (a, big_a) = if (prim.degree() as f64 - e).abs() < 1e-12 {
        (0.5 * lead, 2.0 * lead)
    } else {
        (1e-3, 1.0)
    };
    let n = 20001;
    let mut b = 0.0_f64;
    let mut big_b = 0.0_f64;
    for k in 0..n {
        let s = -r + 2.0 * r * k as f64 / (n - 1) as f64;
        let v = prim.eval(s);
        let m = s.abs().powf(e);
        b = b.max(a * m - v);
        big_b = big_b.max(v - big_a * m);
    }
    (a, b * 1.01 + 1e-12, big_a, big_b * 1.01 + 1e-12)
}

pub fn energy_bounds(g: &Grid, params: &ModelParams) -> EnergyBounds {
    let hyp = &params.hypothesis;
    let r = hyp.sample_radius.max(4.0);
    let (af, bf, uaf, ubf) = potential_bounds(&hyp.poly_f.primitive(), hyp.p, r);
    let (ag, bg, uag, ubg) = potential_bounds(&hyp.poly_g.primitive(), hyp.q, r);
    let l = params.lambda;
    EnergyBounds {
        delta1: 1.0_f64.min(2.0 * l * af).min(2.0 * l * ag),
        delta2: 1.0_f64.max(l).max(2.0 * l * uaf).max(2.0 * l * uag),
        k1: 2.0 * l * (bf * g.volume() + bg * g.boundary_measure()),
        k2: 2.0 * l * (ubf * g.volume() + ubg * g.boundary_measure()),
    }
}

/// Evaluates both sides of the two-sided bound for one state; returns
/// `(lower, J, upper)`.
pub fn energy_sandwich(
    g: &Grid,
    params: &ModelParams,
    bounds: &EnergyBounds,
    u: &VectorField,
    phi: &BulkSurface,
) -> (f64, f64, f64) {
    let hyp = &params.hypothesis;
    let j = energy_j(g, params, u, phi);
    let u2 = vector_dot(g, u, u);
    let h1 = bulk_gradient_form(g, phi, phi)
        + params.alpha * surface_gradient_form(g, &phi.wall, &phi.wall)
        + params.beta * wall_dot(g, &phi.wall, &phi.wall);
    let lp = phi.bulk.iter().map(|s| s.abs().powf(hyp.p)).sum::<f64>() * g.cell_area();
    let lq = phi
        .wall
        .lower
        .iter()
        .chain(phi.wall.upper.iter())
        .map(|s| s.abs().powf(hyp.q))
        .sum::<f64>()
        * g.dx();
    let lower = bounds.delta1 * (u2 + params.lambda * h1 + lp + lq) - bounds.k1;
    let upper = bounds.delta2 * (u2 + h1 + lp + lq) + bounds.k2;
    (lower, j.total, upper)
}

/// `f` applied cellwise and `g` on the walls.
pub fn apply_f(hyp: &GrowthHypothesis, phi: &Array2<f64>) -> Array2<f64> {
    phi.mapv(|s| hyp.poly_f.eval(s))
}

pub fn apply_g(hyp: &GrowthHypothesis, w: &WallField) -> WallField {
    w.map(|s| hyp.poly_g.eval(s))
}

/// `||f||` of a bulk field, used in tests and reports.
pub fn l2_bulk(g: &Grid, a: &Array2<f64>) -> f64 {
    bulk_dot(g, a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ChannelDomain;

    #[test]
    fn double_well_values() {
        let h = GrowthHypothesis::default();
        assert_eq!(h.f(2.0), 6.0);
        assert_eq!(h.big_f(2.0), 2.0);
        assert_eq!(h.big_f(0.0), 0.0);
        assert_eq!(h.big_g(0.0), 0.0);
        assert_eq!(h.big_f(1.0), -0.25);
    }

    #[test]
    fn primitive_derivative_matches_finite_difference() {
        let h = GrowthHypothesis::default();
        let eps = 1e-5;
        for s in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            let fd = (h.big_f(s + eps) - h.big_f(s - eps)) / (2.0 * eps);
            assert!((fd - h.f(s)).abs() <= 1e-8 * (1.0 + h.f(s).abs()));
            let gd = (h.big_g(s + eps) - h.big_g(s - eps)) / (2.0 * eps);
            assert!((gd - h.g(s)).abs() <= 1e-8 * (1.0 + h.g(s).abs()));
        }
    }

    #[test]
    fn rejects_low_exponents() {
        let bad = GrowthHypothesis::new(
            Polynomial::double_well(),
            Polynomial::double_well(),
            2.5,
            4.0,
            (0.5, 1.0, 0.5, 3.0),
            (0.5, 1.0, 0.5, 1.5),
            4.0,
        );
        assert!(bad.is_err());
        let bad = GrowthHypothesis::new(
            Polynomial::double_well(),
            Polynomial::double_well(),
            4.0,
            2.0,
            (0.5, 1.0, 0.5, 3.0),
            (0.5, 1.0, 0.5, 1.5),
            4.0,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn default_hypothesis_certified() {
        let rep = check_hypotheses(&GrowthHypothesis::default(), 4.0, 1000).unwrap();
        assert!(rep.satisfied, "{:?}", rep.witnesses);
    }

    #[test]
    fn quadratic_f_produces_negative_witness() {
        let h = GrowthHypothesis::new(
            Polynomial::new(vec![0.0, 0.0, 1.0]),
            Polynomial::double_well(),
            3.0,
            4.0,
            (0.5, 1.0, 0.5, 3.0),
            (0.5, 1.0, 0.5, 1.5),
            4.0,
        )
        .unwrap();
        let rep = check_hypotheses(&h, 4.0, 1000).unwrap();
        assert!(!rep.satisfied);
        let w = &rep.witnesses[0];
        assert!(w.condition.starts_with("f lower"));
        assert!(w.u < 0.0);
    }

    #[test]
    fn fitted_constants_certify() {
        let h = GrowthHypothesis::fitted(
            Polynomial::new(vec![0.1, -2.0, 0.0, 1.5]),
            Polynomial::new(vec![0.0, 1.0, 0.0, 0.5]),
            4.0,
            4.0,
            3.0,
        )
        .unwrap();
        let rep = check_hypotheses(&h, 3.0, 1000).unwrap();
        assert!(rep.satisfied, "{:?}", rep.witnesses);
    }

    #[test]
    fn chemical_potential_of_constants() {
        let g = Grid::new(ChannelDomain::new(1.0, 1.0, 8, 8)).unwrap();
        let h = GrowthHypothesis::default();
        let mu = chemical_potential(&g, &h, &BulkSurface::zeros(8, 8)).unwrap();
        assert!(mu.iter().all(|v| *v == 0.0));
        let mu = chemical_potential(&g, &h, &BulkSurface::constant(8, 8, 2.0)).unwrap();
        assert!(mu.iter().all(|v| (*v - 6.0).abs() < 1e-12));
    }

    #[test]
    fn chemical_potential_linearization() {
        let g = Grid::new(ChannelDomain::new(1.0, 1.0, 64, 8)).unwrap();
        let h = GrowthHypothesis::default();
        let eps = 1e-6;
        let phi = BulkSurface::new(
            g.sample_cells(|x, _| eps * (2.0 * PI * x).cos()),
            g.sample_walls(|x, _| eps * (2.0 * PI * x).cos()),
        );
        let mu = chemical_potential(&g, &h, &phi).unwrap();
        for i in 0..64 {
            let expect = eps * (4.0 * PI * PI - 1.0) * (2.0 * PI * g.x_center(i)).cos();
            assert!((mu[[i, 3]] - expect).abs() < 2e-3 * eps * 4.0 * PI * PI);
        }
    }

    #[test]
    fn energy_closed_forms() {
        let g = Grid::new(ChannelDomain::new(1.0, 1.0, 16, 16)).unwrap();
        let p = ModelParams::default();
        let u = VectorField::zeros(16, 16);
        let e = energy_j(&g, &p, &u, &BulkSurface::zeros(16, 16));
        assert_eq!(e.total, 0.0);
        let e = energy_j(&g, &p, &u, &BulkSurface::constant(16, 16, 1.0));
        assert!((e.total - 0.5).abs() < 1e-12);
        let sum = e.kinetic + e.interfacial + e.bulk_potential + e.wall_potential;
        assert!((sum - e.total).abs() < 1e-14);
    }

    #[test]
    fn forcing_fields_are_admissible() {
        let g = Grid::new(ChannelDomain::new(2.0, 1.0, 16, 12)).unwrap();
        for f in [
            Forcing::parse("channel:1.5").unwrap(),
            Forcing::parse("cellular:2:2").unwrap(),
        ] {
            let h = f.field(&g);
            assert_eq!(h.wall_normal_max(), 0.0);
            assert_eq!(Forcing::parse(&f.spec()).unwrap(), f);
        }
        let h = Forcing::parse("cellular:1").unwrap().field(&g);
        let div = crate::operators::stencil::divergence(&g, &h);
        assert!(div.iter().all(|v| v.abs() < 1e-10));
        assert!(Forcing::parse("vortex:1").is_err());
    }
}
