//! Banded LU with partial pivoting, plus transpose solves and a 1-norm condition estimate.

use crate::error::{Error, Result};

/// Row-major band storage. Row i keeps columns i - kl ..= i + kl + ku; the extra kl columns
/// hold fill-in from row interchanges.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    /// Builds a matrix from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut kl = 0;
        let mut ku = 0;
        for &(i, j, _) in triplets {
            if i > j {
                kl = kl.max(i - j);
            } else {
                ku = ku.max(j - i);
            }
        }
        let mut a = BandMatrix::new(n, kl, ku);
        for &(i, j, v) in triplets {
            a.add(i, j, v);
        }
        a
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.kl + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) && j < self.n {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku, "({i},{j}) outside band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    fn cols(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.kl)..(i + self.ku + 1).min(self.n)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.cols(i).map(|j| self.data[self.idx(i, j)] * x[j]).sum()).collect()
    }

    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            for j in self.cols(i) {
                y[j] += self.data[self.idx(i, j)] * x[i];
            }
        }
        y
    }

    pub fn norm1(&self) -> f64 {
        let mut col = vec![0.0; self.n];
        for i in 0..self.n {
            for j in self.cols(i) {
                col[j] += self.data[self.idx(i, j)].abs();
            }
        }
        col.into_iter().fold(0.0, f64::max)
    }

    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut piv = vec![0; n];
        let scale = self.data.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for r in k + 1..=last_row {
                let v = self.data[self.idx(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= 1e-300f64.max(scale * 1e-15) {
                return Err(Error::SingularSystem(k));
            }
            piv[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
            }
            let d = self.data[self.idx(k, k)];
            let base_k = self.idx(k, k);
            for r in k + 1..=last_row {
                let ir = self.idx(r, k);
                let l = self.data[ir] / d;
                self.data[ir] = l;
                if l == 0.0 {
                    continue;
                }
                for t in 1..=last_col - k {
                    let v = self.data[base_k + t];
                    self.data[ir + t] -= l * v;
                }
            }
        }
        Ok(BandLu { a: self, piv })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    a: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn n(&self) -> usize {
        self.a.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let a = &self.a;
        let n = a.n;
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.piv[k]);
            let xk = x[k];
            if xk != 0.0 {
                for r in k + 1..=(k + a.kl).min(n - 1) {
                    x[r] -= a.data[a.idx(r, k)] * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..=(k + a.kl + a.ku).min(n - 1) {
                s -= a.data[a.idx(k, j)] * x[j];
            }
            x[k] = s / a.data[a.idx(k, k)];
        }
        x
    }

    /// Solves A^T x = b.
    pub fn solve_t(&self, b: &[f64]) -> Vec<f64> {
        let a = &self.a;
        let n = a.n;
        let mut y = b.to_vec();
        for k in 0..n {
            let mut s = y[k];
            for i in k.saturating_sub(a.kl + a.ku)..k {
                s -= a.data[a.idx(i, k)] * y[i];
            }
            y[k] = s / a.data[a.idx(k, k)];
        }
        for k in (0..n).rev() {
            let mut s = y[k];
            for r in k + 1..=(k + a.kl).min(n - 1) {
                s -= a.data[a.idx(r, k)] * y[r];
            }
            y[k] = s;
            y.swap(k, self.piv[k]);
        }
        y
    }
}

/// Hager's estimate of ||A^{-1}||_1, times ||A||_1.
pub fn condition_estimate(a: &BandMatrix, lu: &BandLu) -> f64 {
    let n = a.n();
    let mut x = vec![1.0 / n as f64; n];
    let mut est = 0.0;
    for _ in 0..5 {
        let y = lu.solve(&x);
        est = y.iter().map(|v| v.abs()).sum::<f64>();
        let xi: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
        let z = lu.solve_t(&xi);
        let (j, zmax) = z.iter().enumerate().fold((0, 0.0), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
        let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
        if zmax <= ztx {
            break;
        }
        x = vec![0.0; n];
        x[j] = 1.0;
    }
    est * a.norm1()
}
