//! Banded matrices with an in-place LU factorization using partial pivoting.

use crate::error::{Error, Result};

/// Square banded matrix with `kl` sub- and `ku` super-diagonals.
///
/// Each row stores columns `i - kl ..= i + ku + kl`; the extra `kl`
/// super-diagonals absorb fill-in from row interchanges.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    /// Zero matrix of order `n`.
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    /// Matrix order.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Lower and upper bandwidths as declared at construction.
    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n || j >= self.n {
            return None;
        }
        let off = j as isize - i as isize + self.kl as isize;
        if off < 0 || off as usize >= self.width {
            None
        } else {
            Some(i * self.width + off as usize)
        }
    }

    /// Entry `(i, j)`; zero outside the stored band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.data[k])
    }

    /// Sets entry `(i, j)`. Panics if the position is outside the declared band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside band"
        );
        let k = self.slot(i, j).expect("index in range");
        self.data[k] = v;
    }

    /// Adds `v` to entry `(i, j)`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    /// Adds `v` to every diagonal entry whose row is listed in `rows`.
    pub fn shift_diagonal(&mut self, rows: impl IntoIterator<Item = usize>, v: f64) {
        for i in rows {
            self.add(i, i, v);
        }
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku + self.kl).min(self.n - 1);
            let mut acc = 0.0;
            for (j, xj) in x.iter().enumerate().take(hi + 1).skip(lo) {
                acc += self.data[i * self.width + j + self.kl - i] * xj;
            }
            *yi = acc;
        }
        y
    }

    /// LU factorization with partial pivoting.
    pub fn factor(&self) -> Result<BandedLu> {
        let mut a = self.clone();
        let n = a.n;
        let kl = a.kl;
        let reach = a.ku + a.kl;
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = a.get(k, k).abs();
            for i in k + 1..=last {
                let v = a.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular(k));
            }
            piv[k] = p;
            let jmax = (k + reach).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let (s, t) = (a.slot(k, j).unwrap(), a.slot(p, j).unwrap());
                    a.data.swap(s, t);
                }
            }
            let pivot = a.get(k, k);
            for i in k + 1..=last {
                let si = a.slot(i, k).unwrap();
                let m = a.data[si] / pivot;
                a.data[si] = m;
                if m == 0.0 {
                    continue;
                }
                for j in k + 1..=jmax {
                    let ukj = a.data[a.slot(k, j).unwrap()];
                    let sij = a.slot(i, j).unwrap();
                    a.data[sij] -= m * ukj;
                }
            }
        }
        Ok(BandedLu { lu: a, piv })
    }
}

/// Factorization produced by [`BandedMatrix::factor`].
#[derive(Debug, Clone)]
pub struct BandedLu {
    lu: BandedMatrix,
    piv: Vec<usize>,
}

impl BandedLu {
    /// Matrix order.
    pub fn n(&self) -> usize {
        self.lu.n
    }

    /// Overwrites `b` with the solution of `A x = b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let a = &self.lu;
        let n = a.n;
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + a.kl).min(n - 1) {
                    b[i] -= a.get(i, k) * bk;
                }
            }
        }
        let reach = a.ku + a.kl;
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..=(i + reach).min(n - 1) {
                acc -= a.get(i, j) * b[j];
            }
            b[i] = acc / a.get(i, i);
        }
    }

    /// Returns the solution of `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
