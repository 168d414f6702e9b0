//! Frozen-coefficient linear boundary value problem: Galerkin reduction in x2, global
//! second-order differences in x1, banded direct solve, energy identity diagnostics and the
//! modal Poisson solve for the vortical potential.

use crate::background::Background1D;
use crate::banded::{condition_estimate, BandMatrix};
use crate::error::{Error, Result};
use crate::linearize::BarCoeffs;
use crate::multiplier::WeightFunction;
use crate::quad::{d1, d1_high, trapezoid_weights, x1_weights};
use crate::spectral::{eigenvalue, Basis, BasisTable, CosineSeries, Field2D, X2Grid};

pub const DEFAULT_N1: usize = 513;
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct LinearProblem {
    pub bar: BarCoeffs,
    pub length: f64,
    pub grid: X2Grid,
    pub m: usize,
    /// Frozen coefficients sampled at [i][j] (x1 node i, x2 node j).
    pub a12: Vec<Vec<f64>>,
    pub a22: Vec<Vec<f64>>,
    /// Right-hand sides before homogenization, cosine modes 0..=m.
    pub f1: Field2D,
    pub f2: Field2D,
    /// psi_x1 on the inlet.
    pub g1: CosineSeries,
    /// Psi_x1 on the inlet.
    pub g2: CosineSeries,
    /// Psi on the exit.
    pub psi_ex: CosineSeries,
    /// psi on the inlet (zero for potential flow).
    pub inlet: CosineSeries,
}

impl LinearProblem {
    /// Background coefficients, zero data.
    pub fn new(bg: &Background1D, grid: X2Grid, m: usize) -> Result<Self> {
        grid.check_truncation(m)?;
        let bar = BarCoeffs::from_background(bg);
        let n1 = bg.n1();
        let n2 = grid.n2();
        let a22 = bar.a22.iter().map(|v| vec![*v; n2]).collect();
        Ok(LinearProblem {
            length: bg.length,
            a12: vec![vec![0.0; n2]; n1],
            a22,
            f1: Field2D::zeros(Basis::Cosine, m + 1, n1, bg.length),
            f2: Field2D::zeros(Basis::Cosine, m + 1, n1, bg.length),
            g1: CosineSeries::zero(m),
            g2: CosineSeries::zero(m),
            psi_ex: CosineSeries::zero(m),
            inlet: CosineSeries::zero(m),
            bar,
            grid,
            m,
        })
    }

    pub fn n1(&self) -> usize {
        self.bar.x.len()
    }

    pub fn h(&self) -> f64 {
        self.length / (self.n1() - 1) as f64
    }

    /// Modes of Psi_bd = (x1 - L) g2 + Psi_ex.
    pub fn psi_bd(&self) -> Field2D {
        let n1 = self.n1();
        let g2 = self.g2.resized(self.m);
        let ex = self.psi_ex.resized(self.m);
        let mut f = Field2D::zeros(Basis::Cosine, self.m + 1, n1, self.length);
        for k in 0..=self.m {
            for i in 0..n1 {
                f.modes[k][i] = (self.bar.x[i] - self.length) * g2.coeffs[k] + ex.coeffs[k];
            }
        }
        f
    }

    fn check(&self) -> Result<()> {
        let n1 = self.n1();
        let n2 = self.grid.n2();
        let bad = |a: &Vec<Vec<f64>>| a.len() != n1 || a.iter().any(|r| r.len() != n2);
        if bad(&self.a12) || bad(&self.a22) {
            return Err(Error::GridMismatch(format!("frozen coefficients must be {n1} x {n2}")));
        }
        for f in [&self.f1, &self.f2] {
            if f.n1() != n1 || f.n_modes() != self.m + 1 {
                return Err(Error::GridMismatch(format!(
                    "forcing has {} modes on {} nodes, expected {} on {n1}",
                    f.n_modes(),
                    f.n1(),
                    self.m + 1
                )));
            }
        }
        Ok(())
    }
}

/// Mode-coupled second-order ODE system in x1 for (theta_k, Theta_k), k = 0..=m.
#[derive(Debug, Clone)]
pub struct ModeSystem {
    pub m: usize,
    pub n1: usize,
    pub length: f64,
    /// <a12 eta_l', eta_k> at node i, flat [i][k][l].
    pub c12: Vec<f64>,
    /// <a22 eta_l, eta_k> at node i, flat [i][k][l].
    pub c22: Vec<f64>,
    pub a1: Vec<f64>,
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    /// Homogenized forcing [k][i].
    pub f1: Vec<Vec<f64>>,
    pub f2: Vec<Vec<f64>>,
    pub g1: Vec<f64>,
    pub inlet: Vec<f64>,
    pub psi_bd: Field2D,
}

impl ModeSystem {
    fn nm(&self) -> usize {
        self.m + 1
    }

    pub fn h(&self) -> f64 {
        self.length / (self.n1 - 1) as f64
    }

    pub fn c12_at(&self, i: usize, k: usize, l: usize) -> f64 {
        let nm = self.nm();
        self.c12[(i * nm + k) * nm + l]
    }

    pub fn c22_at(&self, i: usize, k: usize, l: usize) -> f64 {
        let nm = self.nm();
        self.c22[(i * nm + k) * nm + l]
    }

    fn lap(k: usize) -> f64 {
        eigenvalue(Basis::Cosine, k)
    }

    /// Banded matrix (rows scaled by h^2 or h) and right-hand side. Unknowns interleave per node:
    /// [theta_0..theta_m, Theta_0..Theta_m]. theta rows in block 0 and 1 carry the inlet Cauchy
    /// data; block i >= 2 carries the theta equation at node i - 1.
    pub fn matrix(&self) -> (BandMatrix, Vec<f64>) {
        let nm = self.nm();
        let nb = 2 * nm;
        let n1 = self.n1;
        let n = n1 * nb;
        let h = self.h();
        let th = |i: usize, k: usize| i * nb + k;
        let tt = |i: usize, k: usize| i * nb + nm + k;
        let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(n * (2 * nm + 8));
        let mut rhs = vec![0.0; n];
        for k in 0..nm {
            // theta_k(0) = inlet_k
            let r = th(0, k);
            t.push((r, th(0, k), 1.0));
            rhs[r] = self.inlet[k];
            // one-sided theta_k'(0) = g1_k, scaled by h
            let r = th(1, k);
            t.push((r, th(0, k), -1.5));
            t.push((r, th(1, k), 2.0));
            t.push((r, th(2, k), -0.5));
            rhs[r] = h * self.g1[k];
            // Theta_k'(0) = 0, Theta_k(L) = 0
            let r = tt(0, k);
            t.push((r, tt(0, k), -1.5));
            t.push((r, tt(1, k), 2.0));
            t.push((r, tt(2, k), -0.5));
            let r = tt(n1 - 1, k);
            t.push((r, tt(n1 - 1, k), 1.0));
        }
        for i in 1..n1 - 1 {
            let h2 = h * h;
            for k in 0..nm {
                let r = th(i + 1, k);
                t.push((r, th(i + 1, k), 1.0 + 0.5 * h * self.a1[i]));
                t.push((r, th(i - 1, k), 1.0 - 0.5 * h * self.a1[i]));
                t.push((r, th(i, k), -2.0));
                for l in 0..nm {
                    let c = self.c12_at(i, k, l) * h;
                    if c != 0.0 {
                        t.push((r, th(i + 1, l), c));
                        t.push((r, th(i - 1, l), -c));
                    }
                    let c = Self::lap(l) * self.c22_at(i, k, l) * h2;
                    if c != 0.0 {
                        t.push((r, th(i, l), c));
                    }
                }
                t.push((r, tt(i + 1, k), 0.5 * h * self.b1[i]));
                t.push((r, tt(i - 1, k), -0.5 * h * self.b1[i]));
                t.push((r, tt(i, k), h2 * self.b2[i]));
                rhs[r] = h2 * self.f1[k][i];

                let r = tt(i, k);
                t.push((r, tt(i + 1, k), 1.0));
                t.push((r, tt(i - 1, k), 1.0));
                t.push((r, tt(i, k), -2.0 - h2 * (Self::lap(k) + self.h1[i])));
                t.push((r, th(i + 1, k), -0.5 * h * self.h2[i]));
                t.push((r, th(i - 1, k), 0.5 * h * self.h2[i]));
                rhs[r] = h2 * self.f2[k][i];
            }
        }
        (BandMatrix::from_triplets(n, &t), rhs)
    }

    /// Unscaled discrete operators L1, L2 at the interior nodes: [k][i], zero at the end nodes.
    pub fn apply(&self, theta: &Field2D, big_theta: &Field2D) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let nm = self.nm();
        let n1 = self.n1;
        let h = self.h();
        let mut l1 = vec![vec![0.0; n1]; nm];
        let mut l2 = vec![vec![0.0; n1]; nm];
        let (a, b) = (&theta.modes, &big_theta.modes);
        for i in 1..n1 - 1 {
            for k in 0..nm {
                let d0 = |v: &Vec<f64>| (v[i + 1] - v[i - 1]) / (2.0 * h);
                let dd = |v: &Vec<f64>| (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h);
                let mut s = dd(&a[k]) + self.a1[i] * d0(&a[k]) + self.b1[i] * d0(&b[k]) + self.b2[i] * b[k][i];
                for l in 0..nm {
                    s += 2.0 * self.c12_at(i, k, l) * d0(&a[l]) + Self::lap(l) * self.c22_at(i, k, l) * a[l][i];
                }
                l1[k][i] = s;
                l2[k][i] = dd(&b[k]) - (Self::lap(k) + self.h1[i]) * b[k][i] - self.h2[i] * d0(&a[k]);
            }
        }
        (l1, l2)
    }

    /// Relative discrete-L2 mismatch between the applied operators and the forcing.
    pub fn residual_closure(&self, sol: &LinearSolution) -> f64 {
        let (l1, l2) = self.apply(&sol.psi, &sol.psi_hat);
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..self.nm() {
            for i in 1..self.n1 - 1 {
                num += (l1[k][i] - self.f1[k][i]).powi(2) + (l2[k][i] - self.f2[k][i]).powi(2);
                den += self.f1[k][i].powi(2) + self.f2[k][i].powi(2);
            }
        }
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }

    fn unpack(&self, x: &[f64], residual: f64) -> LinearSolution {
        let nm = self.nm();
        let nb = 2 * nm;
        let mut psi = Field2D::zeros(Basis::Cosine, nm, self.n1, self.length);
        let mut psi_hat = psi.clone();
        for i in 0..self.n1 {
            for k in 0..nm {
                psi.modes[k][i] = x[i * nb + k];
                psi_hat.modes[k][i] = x[i * nb + nm + k];
            }
        }
        let mut big_psi = psi_hat.clone();
        for (a, b) in big_psi.modes.iter_mut().zip(&self.psi_bd.modes) {
            for (v, w) in a.iter_mut().zip(b) {
                *v += w;
            }
        }
        LinearSolution { psi, psi_hat, big_psi, residual }
    }

    /// Right-hand side minus the fourth-order operator applied to x, in the row layout and
    /// scaling of `matrix`.
    fn fourth_order_defect(&self, x: &[f64]) -> Vec<f64> {
        let nm = self.nm();
        let nb = 2 * nm;
        let n1 = self.n1;
        let h = self.h();
        let h2 = h * h;
        let th = |i: usize, k: usize| x[i * nb + k];
        let tt = |i: usize, k: usize| x[i * nb + nm + k];
        let mut d = vec![0.0; x.len()];
        let apply = |st: &(usize, &[f64]), f: &dyn Fn(usize) -> f64| {
            st.1.iter().enumerate().map(|(o, c)| c * f(st.0 + o)).sum::<f64>()
        };
        for k in 0..nm {
            let s0 = d1_stencil4(0, n1);
            d[nb + k] = h * self.g1[k] - apply(&s0, &|i| th(i, k)) / 12.0;
            d[nm + k] = -apply(&s0, &|i| tt(i, k)) / 12.0;
        }
        for i in 1..n1 - 1 {
            let s1 = d1_stencil4(i, n1);
            let s2 = d2_stencil4(i, n1);
            for k in 0..nm {
                let dth = |l: usize| apply(&s1, &|j| th(j, l)) / (12.0 * h);
                let mut l1 = apply(&s2, &|j| th(j, k)) / (12.0 * h2)
                    + self.a1[i] * dth(k)
                    + self.b1[i] * apply(&s1, &|j| tt(j, k)) / (12.0 * h)
                    + self.b2[i] * tt(i, k);
                for l in 0..nm {
                    let c12 = self.c12_at(i, k, l);
                    if c12 != 0.0 {
                        l1 += 2.0 * c12 * dth(l);
                    }
                    let c22 = self.c22_at(i, k, l);
                    if c22 != 0.0 {
                        l1 += Self::lap(l) * c22 * th(i, l);
                    }
                }
                d[(i + 1) * nb + k] = h2 * (self.f1[k][i] - l1);
                let l2 = apply(&s2, &|j| tt(j, k)) / (12.0 * h2)
                    - (Self::lap(k) + self.h1[i]) * tt(i, k)
                    - self.h2[i] * dth(k);
                d[i * nb + nm + k] = h2 * (self.f2[k][i] - l2);
            }
        }
        d
    }

    /// 1-norm condition estimate of the assembled matrix.
    pub fn condition_number(&self) -> Result<f64> {
        let (a, _) = self.matrix();
        let lu = a.clone().factor()?;
        Ok(condition_estimate(&a, &lu))
    }
}

/// Projects the frozen coefficients and homogenizes the forcing.
pub fn assemble(p: &LinearProblem) -> Result<ModeSystem> {
    p.check()?;
    let m = p.m;
    let nm = m + 1;
    let n1 = p.n1();
    let table = BasisTable::new(Basis::Cosine, m, &p.grid)?;
    let w = &p.grid.w;
    let n2 = p.grid.n2();
    let mut c12 = vec![0.0; n1 * nm * nm];
    let mut c22 = vec![0.0; n1 * nm * nm];
    let mut tmp = vec![0.0; n2];
    for i in 0..n1 {
        for (coef, out, d) in [(&p.a12[i], &mut c12, 1), (&p.a22[i], &mut c22, 0)] {
            if coef.iter().all(|v| *v == 0.0) {
                continue;
            }
            for l in 0..nm {
                let el = &table.val[d][l];
                for j in 0..n2 {
                    tmp[j] = w[j] * coef[j] * el[j];
                }
                for k in 0..nm {
                    let ek = &table.val[0][k];
                    out[(i * nm + k) * nm + l] = (0..n2).map(|j| tmp[j] * ek[j]).sum();
                }
            }
        }
    }
    let bd = p.psi_bd();
    let g2 = p.g2.resized(m);
    let mut f1 = p.f1.modes.clone();
    let mut f2 = p.f2.modes.clone();
    for k in 0..nm {
        for i in 0..n1 {
            f1[k][i] -= p.bar.b1[i] * g2.coeffs[k] + p.bar.b2[i] * bd.modes[k][i];
            f2[k][i] += (eigenvalue(Basis::Cosine, k) + p.bar.h1[i]) * bd.modes[k][i];
        }
    }
    Ok(ModeSystem {
        m,
        n1,
        length: p.length,
        c12,
        c22,
        a1: p.bar.a1.clone(),
        b1: p.bar.b1.clone(),
        b2: p.bar.b2.clone(),
        h1: p.bar.h1.clone(),
        h2: p.bar.h2.clone(),
        f1,
        f2,
        g1: p.g1.resized(m).coeffs,
        inlet: p.inlet.resized(m).coeffs,
        psi_bd: bd,
    })
}

#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub psi: Field2D,
    pub psi_hat: Field2D,
    /// Psi = Psi_hat + Psi_bd.
    pub big_psi: Field2D,
    /// Relative residual of the banded solve.
    pub residual: f64,
}

/// x1 discretization of the mode system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum X1Scheme {
    /// Centered second-order differences, one-sided second-order inlet stencils.
    #[default]
    Second,
    /// The second-order solve followed by one defect-correction sweep against fourth-order
    /// stencils, reusing the same factorization.
    DefectCorrected,
}

fn relative_residual(a: &BandMatrix, x: &[f64], rhs: &[f64]) -> f64 {
    let r = a.matvec(x);
    let num = r.iter().zip(rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let den = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

pub fn solve_bvp(sys: &ModeSystem) -> Result<LinearSolution> {
    solve_bvp_with(sys, X1Scheme::Second)
}

pub fn solve_bvp_with(sys: &ModeSystem, scheme: X1Scheme) -> Result<LinearSolution> {
    let (a, rhs) = sys.matrix();
    let lu = a.clone().factor()?;
    let mut x = lu.solve(&rhs);
    let mut residual = relative_residual(&a, &x, &rhs);
    if !(residual <= RESIDUAL_TOL) {
        return Err(Error::ResidualTooLarge(residual));
    }
    if scheme == X1Scheme::DefectCorrected {
        let d = sys.fourth_order_defect(&x);
        let dx = lu.solve(&d);
        let scale = rhs.iter().map(|v| v * v).sum::<f64>().sqrt().max(d.iter().map(|v| v * v).sum::<f64>().sqrt());
        let r = a.matvec(&dx);
        let num = r.iter().zip(&d).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        residual = residual.max(if scale > 0.0 { num / scale } else { num });
        if !(residual <= RESIDUAL_TOL) {
            return Err(Error::ResidualTooLarge(residual));
        }
        for (v, e) in x.iter_mut().zip(&dx) {
            *v += e;
        }
    }
    Ok(sys.unpack(&x, residual))
}

/// Assemble and solve in one step.
pub fn solve_linear(p: &LinearProblem) -> Result<LinearSolution> {
    solve_bvp(&assemble(p)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    /// Weighted pairing with the forcing.
    pub direct: f64,
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
    /// |direct - (J1 + J2 + J3)| / max(1, |direct|).
    pub discrepancy: f64,
    /// ||psi||_H1 + ||Psi_hat||_H1.
    pub solution_norm: f64,
    /// ||f1_hat||_L2 + ||f2_hat||_L2 + sup |g1|.
    pub data_norm: f64,
    /// solution_norm / data_norm; None when the data vanish.
    pub ratio: Option<f64>,
}

/// Discrete H1 norm of a cosine-mode field (centered differences in x1).
pub fn h1_norm(f: &Field2D) -> f64 {
    let w = x1_weights(f.n1(), f.length);
    let h = f.h();
    let mut s = 0.0;
    for (k, m) in f.modes.iter().enumerate() {
        let lam = eigenvalue(f.basis, if f.basis == Basis::Cosine { k } else { k + 1 });
        let dm = d1(m, h);
        for i in 0..m.len() {
            s += w[i] * ((1.0 + lam) * m[i] * m[i] + dm[i] * dm[i]);
        }
    }
    s.sqrt()
}

fn l2_modes(f: &[Vec<f64>], length: f64) -> f64 {
    let n1 = f[0].len();
    let w = x1_weights(n1, length);
    f.iter().map(|m| m.iter().zip(&w).map(|(v, w)| v * v * w).sum::<f64>()).sum::<f64>().sqrt()
}

/// Weighted energy pairing computed from the forcing and from its integrated-by-parts form.
pub fn energy_report(p: &LinearProblem, sys: &ModeSystem, sol: &LinearSolution, w: &WeightFunction) -> Result<EnergyReport> {
    let n1 = p.n1();
    if w.w.len() != n1 {
        return Err(Error::GridMismatch(format!("weight has {} samples, grid {n1}", w.w.len())));
    }
    let nm = p.m + 1;
    let h = p.h();
    let wx = x1_weights(n1, p.length);
    let (ww, dw) = (&w.w, &w.dw);

    let dpsi: Vec<Vec<f64>> = sol.psi.modes.iter().map(|m| d1_high(m, h)).collect();
    let dhat: Vec<Vec<f64>> = sol.psi_hat.modes.iter().map(|m| d1_high(m, h)).collect();

    let mut direct = 0.0;
    for k in 0..nm {
        for i in 0..n1 {
            direct += wx[i] * (ww[i] * dpsi[k][i] * sys.f1[k][i] - sol.psi_hat.modes[k][i] * sys.f2[k][i]);
        }
    }

    let table = BasisTable::new(Basis::Cosine, p.m, &p.grid)?;
    let n2 = p.grid.n2();
    let h2 = 2.0 / (n2 - 1) as f64;
    let tw = trapezoid_weights(n2, 2.0);
    let rec = |modes: &[Vec<f64>], i: usize, d: usize| {
        let c: Vec<f64> = modes.iter().map(|m| m[i]).collect();
        table.reconstruct(&c, d)
    };
    // d/dx1 (W a22) at every x2 node.
    let mut wa22_x1 = vec![vec![0.0; n2]; n1];
    for j in 0..n2 {
        let col: Vec<f64> = (0..n1).map(|i| ww[i] * p.a22[i][j]).collect();
        let d = d1_high(&col, h);
        for i in 0..n1 {
            wa22_x1[i][j] = d[i];
        }
    }
    let (mut j1, mut j2) = (0.0, 0.0);
    let mut psi1_l = vec![0.0; n2];
    let mut psi2_l = vec![0.0; n2];
    let mut psi2_0 = vec![0.0; n2];
    let mut psi1_0 = vec![0.0; n2];
    for i in 0..n1 {
        let p1 = rec(&dpsi, i, 0);
        let p2 = rec(&sol.psi.modes, i, 1);
        let s0 = rec(&sol.psi_hat.modes, i, 0);
        let s1 = rec(&dhat, i, 0);
        let s2 = rec(&sol.psi_hat.modes, i, 1);
        let a12_x2 = d1_high(&p.a12[i], h2);
        let a22_x2 = d1_high(&p.a22[i], h2);
        let bar = p.bar.point(i);
        let mut r1 = 0.0;
        let mut r2 = 0.0;
        for j in 0..n2 {
            let q1 = -0.5 * dw[i] + ww[i] * (bar.a1 - a12_x2[j]);
            r1 += tw[j]
                * (q1 * p1[j] * p1[j] - 0.5 * wa22_x1[i][j] * p2[j] * p2[j]
                    + s1[j] * s1[j]
                    + s2[j] * s2[j]
                    + bar.h1 * s0[j] * s0[j]);
            r2 += tw[j]
                * (ww[i] * p1[j] * (bar.b1 * s1[j] + bar.b2 * s0[j])
                    + bar.h2 * p1[j] * s0[j]
                    + ww[i] * a22_x2[j] * p1[j] * p2[j]);
        }
        j1 += wx[i] * r1;
        j2 += wx[i] * r2;
        if i == 0 {
            psi1_0 = p1.clone();
            psi2_0 = p2.clone();
        }
        if i == n1 - 1 {
            psi1_l = p1;
            psi2_l = p2;
        }
    }
    let g1 = p.g1.resized(p.m).reconstruct(&p.grid.x);
    let mut j3 = 0.0;
    for j in 0..n2 {
        j3 += tw[j] * 0.5 * ww[n1 - 1] * (psi1_l[j].powi(2) + p.a22[n1 - 1][j] * psi2_l[j].powi(2));
        j3 -= tw[j] * 0.5 * ww[0] * (psi1_0[j].powi(2) + p.a22[0][j] * psi2_0[j].powi(2));
    }
    let sum = j1 + j2 + j3;
    let discrepancy = (direct - sum).abs() / direct.abs().max(1.0);
    let solution_norm = h1_norm(&sol.psi) + h1_norm(&sol.psi_hat);
    let data_norm =
        l2_modes(&sys.f1, p.length) + l2_modes(&sys.f2, p.length) + g1.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let ratio = if data_norm > 0.0 { Some(solution_norm / data_norm) } else { None };
    Ok(EnergyReport { direct, j1, j2, j3, discrepancy, solution_norm, data_norm, ratio })
}

/// Per-mode solve of Theta'' - lambda_k Theta = f_k with Theta'(0) = 0, Theta(L) = 0 for a
/// sine-basis field; the Neumann end uses a reflected ghost node.
pub fn solve_poisson_phi(f3: &Field2D) -> Result<Field2D> {
    if f3.basis != Basis::Sine {
        return Err(Error::GridMismatch("vortical potential forcing must use the sine basis".into()));
    }
    let n1 = f3.n1();
    let h = f3.h();
    let mut out = Field2D::zeros(Basis::Sine, f3.n_modes(), n1, f3.length);
    for (s, f) in f3.modes.iter().enumerate() {
        let lam = eigenvalue(Basis::Sine, s + 1);
        // Unknowns 0..n1-2; node n1-1 is the Dirichlet end.
        let n = n1 - 1;
        let mut lo = vec![0.0; n];
        let mut di = vec![0.0; n];
        let mut up = vec![0.0; n];
        let mut r = vec![0.0; n];
        for i in 0..n {
            di[i] = -2.0 - h * h * lam;
            r[i] = h * h * f[i];
            if i > 0 {
                lo[i] = 1.0;
            }
            if i + 1 < n {
                up[i] = if i == 0 { 2.0 } else { 1.0 };
            }
        }
        if n == 1 {
            up[0] = 0.0;
        }
        let x = thomas(&lo, &di, &up, &r);
        out.modes[s][..n].copy_from_slice(&x);
    }
    Ok(out)
}

/// Tridiagonal solve; lo[0] and up[n-1] are ignored.
pub fn thomas(lo: &[f64], di: &[f64], up: &[f64], r: &[f64]) -> Vec<f64> {
    let n = di.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = up[0] / di[0];
    d[0] = r[0] / di[0];
    for i in 1..n {
        let m = di[i] - lo[i] * c[i - 1];
        c[i] = if i + 1 < n { up[i] / m } else { 0.0 };
        d[i] = (r[i] - lo[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Fourth-order first-derivative stencil (start node, coefficients times 12h) at node i of n.
fn d1_stencil4(i: usize, n: usize) -> (usize, &'static [f64]) {
    const S0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
    const S1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
    const C: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
    const E1: [f64; 5] = [-1.0, 6.0, -18.0, 10.0, 3.0];
    const E0: [f64; 5] = [3.0, -16.0, 36.0, -48.0, 25.0];
    match i {
        0 => (0, &S0),
        1 => (0, &S1),
        _ if i + 1 == n => (n - 5, &E0),
        _ if i + 2 == n => (n - 5, &E1),
        _ => (i - 2, &C),
    }
}

/// Fourth-order second-derivative stencil (coefficients times 12h^2) at interior node i of n.
fn d2_stencil4(i: usize, n: usize) -> (usize, &'static [f64]) {
    const S1: [f64; 6] = [10.0, -15.0, -4.0, 14.0, -6.0, 1.0];
    const C: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];
    const E1: [f64; 6] = [1.0, -6.0, 14.0, -4.0, -15.0, 10.0];
    match i {
        1 => (0, &S1),
        _ if i + 2 == n => (n - 6, &E1),
        _ => (i - 2, &C),
    }
}
