//! Banded LU factorisation with partial pivoting.
//!
//! Storage follows the LAPACK `gbtrf` convention: column `j` holds rows
//! `j - ku - kl ..= j + kl`, with `kl` extra super-diagonals reserved for
//! fill-in produced by row interchanges.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ldab,
            ab: vec![0.0; ldab * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        (self.kl + self.ku + i - j) + j * self.ldab
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        i + self.ku >= j && j + self.kl >= i && i < self.n && j < self.n
    }

    /// Adds `v` to entry `(i, j)`. Panics outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let s = self.slot(i, j);
        self.ab[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.ab[self.slot(i, j)]
        } else {
            0.0
        }
    }

    /// y = A x using the original (unfactored) band.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for (j, xj) in x.iter().enumerate().take(hi + 1).skip(lo) {
                *yi += self.get(i, j) * xj;
            }
        }
        y
    }

    pub fn factor(mut self) -> Result<BandedLu> {
        let n = self.n;
        let kl = self.kl;
        let kv = self.kl + self.ku;
        let ldab = self.ldab;
        let mut ipiv = vec![0usize; n];
        let scale = self.ab.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = j * ldab;
            let mut jp = 0usize;
            let mut best = self.ab[col + kv].abs();
            for r in 1..=km {
                let v = self.ab[col + kv + r].abs();
                if v > best {
                    best = v;
                    jp = r;
                }
            }
            ipiv[j] = j + jp;
            if best <= scale * 1e-300 || best == 0.0 {
                return Err(Error::Solver {
                    what: "banded LU",
                    residual: f64::INFINITY,
                });
            }
            ju = ju.max((j + self.ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let a = (kv + j - c) + c * ldab;
                    let b = (kv + j + jp - c) + c * ldab;
                    self.ab.swap(a, b);
                }
            }
            if km > 0 {
                let piv = self.ab[col + kv];
                for r in 1..=km {
                    self.ab[col + kv + r] /= piv;
                }
                for c in (j + 1)..=ju {
                    let ujc = self.ab[(kv + j - c) + c * ldab];
                    if ujc == 0.0 {
                        continue;
                    }
                    for r in 1..=km {
                        let l = self.ab[col + kv + r];
                        self.ab[(kv + j + r - c) + c * ldab] -= l * ujc;
                    }
                }
            }
        }
        Ok(BandedLu { lu: self, ipiv })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    lu: BandMatrix,
    ipiv: Vec<usize>,
}

impl BandedLu {
    pub fn n(&self) -> usize {
        self.lu.n
    }

    /// Solves in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.lu.n;
        let kl = self.lu.kl;
        let kv = self.lu.kl + self.lu.ku;
        let ldab = self.lu.ldab;
        let ab = &self.lu.ab;
        debug_assert_eq!(b.len(), n);
        for j in 0..n {
            let l = self.ipiv[j];
            if l != j {
                b.swap(l, j);
            }
            let km = kl.min(n - 1 - j);
            let bj = b[j];
            if bj != 0.0 {
                for r in 1..=km {
                    b[j + r] -= ab[j * ldab + kv + r] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            b[j] /= ab[j * ldab + kv];
            let bj = b[j];
            let lo = j.saturating_sub(kv);
            for i in lo..j {
                b[i] -= ab[(kv + i - j) + j * ldab] * bj;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_band(n: usize, kl: usize, ku: usize, seed: u64) -> (BandMatrix, DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut band = BandMatrix::zeros(n, kl, ku);
        let mut dense = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                // weak diagonal so pivoting is exercised
                let v: f64 = rng.gen_range(-1.0..1.0) + if i == j { 0.05 } else { 0.0 };
                band.add(i, j, v);
                dense[(i, j)] = v;
            }
        }
        (band, dense)
    }

    #[test]
    fn matches_dense_solve() {
        for (seed, &(n, kl, ku)) in [(12, 2, 1), (40, 3, 3), (9, 1, 1), (33, 2, 4)].iter().enumerate() {
            let (band, dense) = random_band(n, kl, ku, seed as u64);
            let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
            let expected = dense.clone().lu().solve(&DVector::from_vec(rhs.clone())).unwrap();
            let lu = band.factor().unwrap();
            let mut x = rhs.clone();
            lu.solve_in_place(&mut x);
            for i in 0..n {
                assert!((x[i] - expected[i]).abs() < 1e-9 * (1.0 + expected[i].abs()), "n={n} i={i}");
            }
        }
    }

    #[test]
    fn matvec_roundtrip() {
        let (band, _) = random_band(25, 3, 2, 7);
        let x: Vec<f64> = (0..25).map(|i| 1.0 + i as f64).collect();
        let b = band.matvec(&x);
        let lu = band.factor().unwrap();
        let mut y = b;
        lu.solve_in_place(&mut y);
        for i in 0..25 {
            assert!((y[i] - x[i]).abs() < 1e-9 * x[i].abs());
        }
    }

    #[test]
    fn singular_reported() {
        let mut band = BandMatrix::zeros(4, 1, 1);
        band.add(0, 0, 1.0);
        band.add(1, 1, 1.0);
        band.add(3, 3, 1.0);
        assert!(band.factor().is_err());
    }
}
