//! Cross-channel bases on x2 in (-1, 1): cosine modes for Neumann walls, sine modes for
//! Dirichlet walls, with projection, reconstruction and wall-compatibility checks.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::quad::trapezoid_weights;

pub const DEFAULT_N2: usize = 257;
pub const DEFAULT_M: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Cosine,
    Sine,
}

/// d^order/dx2^order of eta_k, with eta_0 = 1/sqrt(2) and eta_k = cos(k pi x2).
pub fn eta(k: usize, order: usize, x: f64) -> f64 {
    if k == 0 {
        return if order == 0 { FRAC_1_SQRT_2 } else { 0.0 };
    }
    let w = k as f64 * PI;
    let p = w.powi(order as i32);
    match order % 4 {
        0 => p * (w * x).cos(),
        1 => -p * (w * x).sin(),
        2 => -p * (w * x).cos(),
        _ => p * (w * x).sin(),
    }
}

/// d^order/dx2^order of zeta_k = sin(k pi (x2 + 1)/2), k >= 1.
pub fn zeta(k: usize, order: usize, x: f64) -> f64 {
    let w = k as f64 * PI / 2.0;
    let t = w * (x + 1.0);
    let p = w.powi(order as i32);
    match order % 4 {
        0 => p * t.sin(),
        1 => p * t.cos(),
        2 => -p * t.sin(),
        _ => -p * t.cos(),
    }
}

/// Eigenvalue of -d^2/dx2^2 for mode k of the basis.
pub fn eigenvalue(basis: Basis, k: usize) -> f64 {
    match basis {
        Basis::Cosine => (k as f64 * PI).powi(2),
        Basis::Sine => (k as f64 * PI / 2.0).powi(2),
    }
}

/// Uniform x2 nodes with trapezoid weights.
#[derive(Debug, Clone, PartialEq)]
pub struct X2Grid {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl X2Grid {
    pub fn new(n2: usize) -> Self {
        let x = (0..n2).map(|j| -1.0 + 2.0 * j as f64 / (n2 - 1) as f64).collect();
        X2Grid { x, w: trapezoid_weights(n2, 2.0) }
    }

    pub fn n2(&self) -> usize {
        self.x.len()
    }

    pub fn max_modes(&self) -> usize {
        self.n2() / 4
    }

    pub fn check_truncation(&self, m: usize) -> Result<()> {
        if m > self.max_modes() {
            return Err(Error::TruncationTooHigh { m, n2: self.n2(), max: self.max_modes() });
        }
        Ok(())
    }
}

/// Basis values (and derivatives up to second order) tabulated on an x2 grid.
#[derive(Debug, Clone)]
pub struct BasisTable {
    pub basis: Basis,
    pub m: usize,
    pub grid: X2Grid,
    /// val[d][k][j]: derivative d of mode k at node j. Mode k is index k for the cosine
    /// basis and index k - 1 for the sine basis.
    pub val: [Vec<Vec<f64>>; 3],
}

impl BasisTable {
    pub fn new(basis: Basis, m: usize, grid: &X2Grid) -> Result<Self> {
        grid.check_truncation(m)?;
        let ks: Vec<usize> = match basis {
            Basis::Cosine => (0..=m).collect(),
            Basis::Sine => (1..=m).collect(),
        };
        let f = |k: usize, d: usize, x: f64| match basis {
            Basis::Cosine => eta(k, d, x),
            Basis::Sine => zeta(k, d, x),
        };
        let tab = |d: usize| ks.iter().map(|&k| grid.x.iter().map(|&x| f(k, d, x)).collect()).collect();
        Ok(BasisTable { basis, m, grid: grid.clone(), val: [tab(0), tab(1), tab(2)] })
    }

    pub fn n_modes(&self) -> usize {
        self.val[0].len()
    }

    /// Mode number carried by coefficient slot `idx`.
    pub fn mode_number(&self, idx: usize) -> usize {
        match self.basis {
            Basis::Cosine => idx,
            Basis::Sine => idx + 1,
        }
    }

    pub fn project(&self, samples: &[f64]) -> Vec<f64> {
        let w = &self.grid.w;
        self.val[0]
            .iter()
            .map(|row| row.iter().zip(samples).zip(w).map(|((b, f), w)| b * f * w).sum())
            .collect()
    }

    /// Reconstruction of derivative `d` (0..=2) from coefficients.
    pub fn reconstruct(&self, coeffs: &[f64], d: usize) -> Vec<f64> {
        let n2 = self.grid.n2();
        let mut out = vec![0.0; n2];
        for (c, row) in coeffs.iter().zip(&self.val[d]) {
            if *c == 0.0 {
                continue;
            }
            for j in 0..n2 {
                out[j] += c * row[j];
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CosineSeries {
    /// c_0..c_m.
    pub coeffs: Vec<f64>,
}

impl CosineSeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        CosineSeries { coeffs }
    }

    pub fn zero(m: usize) -> Self {
        CosineSeries { coeffs: vec![0.0; m + 1] }
    }

    /// A constant c expressed in the basis (c = c sqrt(2) eta_0).
    pub fn constant(c: f64, m: usize) -> Self {
        let mut s = Self::zero(m);
        s.coeffs[0] = c * std::f64::consts::SQRT_2;
        s
    }

    pub fn m(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.deriv(0, x)
    }

    pub fn deriv(&self, order: usize, x: f64) -> f64 {
        self.coeffs.iter().enumerate().map(|(k, c)| c * eta(k, order, x)).sum()
    }

    /// Copy truncated or zero-padded to m.
    pub fn resized(&self, m: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(m + 1, 0.0);
        CosineSeries { coeffs: c }
    }

    pub fn reconstruct(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|x| self.eval(*x)).collect()
    }

    /// Series of the even derivative (order 2r) via the eigenrelation.
    pub fn even_derivative(&self, r: usize) -> Self {
        let c = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * (-(k as f64 * PI).powi(2)).powi(r as i32))
            .collect();
        CosineSeries { coeffs: c }
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SineSeries {
    /// d_1..d_m (slot 0 carries k = 1).
    pub coeffs: Vec<f64>,
}

impl SineSeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        SineSeries { coeffs }
    }

    pub fn zero(m: usize) -> Self {
        SineSeries { coeffs: vec![0.0; m] }
    }

    pub fn m(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.deriv(0, x)
    }

    pub fn deriv(&self, order: usize, x: f64) -> f64 {
        self.coeffs.iter().enumerate().map(|(i, c)| c * zeta(i + 1, order, x)).sum()
    }

    pub fn reconstruct(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|x| self.eval(*x)).collect()
    }

    /// Antiderivative from -1: int_{-1}^{x2} sum d_k zeta_k.
    pub fn integral_from_wall(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let w = (i + 1) as f64 * PI / 2.0;
                d / w * (1.0 - (w * (x + 1.0)).cos())
            })
            .sum()
    }

    /// The antiderivative from -1 as a cosine series; requires even sine indices only
    /// (odd data), for which it is exact and even in x2.
    pub fn integral_as_cosine(&self) -> Result<CosineSeries> {
        let mut m = 0;
        for (i, d) in self.coeffs.iter().enumerate() {
            let k = i + 1;
            if k % 2 == 1 && *d != 0.0 {
                return Err(Error::SymmetryViolation(format!(
                    "sine coefficient d_{k} = {d:e} makes v_en even in x2; only even indices are wall-symmetric"
                )));
            }
            if k % 2 == 0 {
                m = m.max(k / 2);
            }
        }
        // 1 - cos(k pi (x+1)/2) = 1 - (-1)^{k/2} cos((k/2) pi x) for even k.
        let mut c = vec![0.0; m + 1];
        for (i, d) in self.coeffs.iter().enumerate() {
            let k = i + 1;
            if k % 2 == 1 {
                continue;
            }
            let w = k as f64 * PI / 2.0;
            let j = k / 2;
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            c[0] += d / w * std::f64::consts::SQRT_2;
            c[j] -= d / w * sign;
        }
        Ok(CosineSeries { coeffs: c })
    }
}

pub fn project_cosine(samples: &[f64], grid: &X2Grid, m: usize) -> Result<CosineSeries> {
    if samples.len() != grid.n2() {
        return Err(Error::GridMismatch(format!("{} samples for {} x2 nodes", samples.len(), grid.n2())));
    }
    let t = BasisTable::new(Basis::Cosine, m, grid)?;
    Ok(CosineSeries { coeffs: t.project(samples) })
}

pub fn project_sine(samples: &[f64], grid: &X2Grid, m: usize) -> Result<SineSeries> {
    if samples.len() != grid.n2() {
        return Err(Error::GridMismatch(format!("{} samples for {} x2 nodes", samples.len(), grid.n2())));
    }
    let t = BasisTable::new(Basis::Sine, m, grid)?;
    Ok(SineSeries { coeffs: t.project(samples) })
}

/// A 2D field as per-mode x1 profiles on a uniform grid over [0, length].
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    pub basis: Basis,
    pub length: f64,
    /// modes[k][i]; slot k as in BasisTable.
    pub modes: Vec<Vec<f64>>,
}

impl Field2D {
    pub fn zeros(basis: Basis, n_modes: usize, n1: usize, length: f64) -> Self {
        Field2D { basis, length, modes: vec![vec![0.0; n1]; n_modes] }
    }

    pub fn n1(&self) -> usize {
        self.modes.first().map_or(0, |m| m.len())
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn h(&self) -> f64 {
        self.length / (self.n1() - 1) as f64
    }

    pub fn x1(&self, i: usize) -> f64 {
        self.length * i as f64 / (self.n1() - 1) as f64
    }

    /// Samples of derivative (d1 in x1 via the supplied profiles, d2 in x2) on the table grid:
    /// out[i][j].
    pub fn to_grid(&self, table: &BasisTable, d2: usize) -> Vec<Vec<f64>> {
        let n1 = self.n1();
        (0..n1)
            .map(|i| {
                let c: Vec<f64> = self.modes.iter().map(|m| m[i]).collect();
                table.reconstruct(&c, d2)
            })
            .collect()
    }

    /// Projects grid samples values[i][j].
    pub fn from_grid(values: &[Vec<f64>], table: &BasisTable, length: f64) -> Self {
        let n1 = values.len();
        let nm = table.n_modes();
        let mut modes = vec![vec![0.0; n1]; nm];
        for (i, row) in values.iter().enumerate() {
            let c = table.project(row);
            for k in 0..nm {
                modes[k][i] = c[k];
            }
        }
        Field2D { basis: table.basis, length, modes }
    }

    /// x1 derivative of every mode profile (second order, one-sided ends).
    pub fn d1(&self) -> Self {
        let h = self.h();
        Field2D {
            basis: self.basis,
            length: self.length,
            modes: self.modes.iter().map(|m| crate::quad::d1(m, h)).collect(),
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.modes.iter().flatten().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Discrete L2 norm over the domain (orthonormal modes, trapezoid in x1).
    pub fn l2_norm(&self) -> f64 {
        let w = trapezoid_weights(self.n1(), self.length);
        self.modes
            .iter()
            .map(|m| m.iter().zip(&w).map(|(v, w)| v * v * w).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

/// Wall profile handed to the compatibility check.
pub enum WallProfile<'a> {
    Cosine(&'a CosineSeries),
    Sine(&'a SineSeries),
    /// A function of x2 defined slightly beyond the walls.
    Function(&'a dyn Fn(f64) -> f64),
}

impl WallProfile<'_> {
    fn derivative(&self, order: usize, x: f64) -> f64 {
        match self {
            WallProfile::Cosine(s) => s.deriv(order, x),
            WallProfile::Sine(s) => s.deriv(order, x),
            WallProfile::Function(f) => {
                let h = 1e-3;
                match order {
                    0 => f(x),
                    1 => (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h),
                    2 => (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h))
                        / (12.0 * h * h),
                    3 => (-f(x - 2.0 * h) + 2.0 * f(x - h) - 2.0 * f(x + h) + f(x + 2.0 * h)) / (-2.0 * h.powi(3)),
                    _ => f64::NAN,
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompatEntry {
    pub name: String,
    pub order: usize,
    /// Derivative of the given order at x2 = -1 and x2 = +1.
    pub wall_values: [f64; 2],
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompatReport {
    pub entries: Vec<CompatEntry>,
}

impl CompatReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }
}

/// Checks that the listed wall derivatives vanish at x2 = +-1.
pub fn check_compatibility(items: &[(&str, WallProfile, &[usize])], tol: f64) -> CompatReport {
    let mut entries = Vec::new();
    for (name, prof, orders) in items {
        for &order in orders.iter() {
            let v = [prof.derivative(order, -1.0), prof.derivative(order, 1.0)];
            let scale = match prof {
                WallProfile::Function(_) => tol.max(1e-6),
                _ => tol,
            };
            entries.push(CompatEntry {
                name: name.to_string(),
                order,
                wall_values: v,
                pass: v[0].abs() <= scale && v[1].abs() <= scale,
            });
        }
    }
    CompatReport { entries }
}
