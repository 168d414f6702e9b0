//! Coefficients and right-hand sides of the linearized potential-flow and
//! rotational systems around a supersonic background.

use crate::background::{Background1D, BgPoint};
use crate::error::{Error, Result};
use crate::model::{self, GasParams};

/// Relative guard on c^2 - u1^2.
pub const SONIC_DEN_TOL: f64 = 1e-8;
const STAGNATION_TOL: f64 = 1e-8;

/// x1-only coefficients at one background sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarPoint {
    pub a22: f64,
    pub a1: f64,
    pub b1: f64,
    pub b2: f64,
    pub h1: f64,
    pub h2: f64,
}

impl BarPoint {
    pub fn at(gp: &GasParams, u: f64, e: f64) -> Self {
        let g = gp.gamma();
        let m0 = gp.m0();
        let c2 = g * m0.powf(g - 1.0) / u.powf(g - 1.0);
        let x = u * u - c2;
        let h1 = u.powf(g - 2.0) / (g * m0.powf(g - 2.0) * gp.s0().powf(1.0 / (g - 1.0)));
        BarPoint {
            a22: 1.0 / (u.powf(g + 1.0) / (g * m0.powf(g - 1.0)) - 1.0),
            a1: e * (g * u * u + c2) / (x * x),
            b1: u / (c2 - u * u),
            b2: -(g - 1.0) * e * u / (x * x),
            h1,
            h2: -u * h1,
        }
    }
}

/// Sampled x1-only coefficients over the background grid.
#[derive(Debug, Clone)]
pub struct BarCoeffs {
    pub x: Vec<f64>,
    pub a22: Vec<f64>,
    pub a1: Vec<f64>,
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    /// inf h1 over the grid.
    pub mu1: f64,
}

impl BarCoeffs {
    pub fn from_background(bg: &Background1D) -> Self {
        let n = bg.n1();
        let mut c = BarCoeffs {
            x: bg.x.clone(),
            a22: Vec::with_capacity(n),
            a1: Vec::with_capacity(n),
            b1: Vec::with_capacity(n),
            b2: Vec::with_capacity(n),
            h1: Vec::with_capacity(n),
            h2: Vec::with_capacity(n),
            mu1: f64::INFINITY,
        };
        for i in 0..n {
            let p = BarPoint::at(&bg.gp, bg.u[i], bg.e[i]);
            c.a22.push(p.a22);
            c.a1.push(p.a1);
            c.b1.push(p.b1);
            c.b2.push(p.b2);
            c.h1.push(p.h1);
            c.h2.push(p.h2);
            c.mu1 = c.mu1.min(p.h1);
        }
        c
    }

    pub fn point(&self, i: usize) -> BarPoint {
        BarPoint {
            a22: self.a22[i],
            a1: self.a1[i],
            b1: self.b1[i],
            b2: self.b2[i],
            h1: self.h1[i],
            h2: self.h2[i],
        }
    }
}

/// Perturbation arguments at one point. The rotational slots are zero for potential flow.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerturbationPoint {
    /// Psi.
    pub z: f64,
    /// grad Psi.
    pub p: [f64; 2],
    /// grad psi.
    pub q: [f64; 2],
    /// grad phi (vortical potential).
    pub r: [f64; 2],
    /// Y = S - S0.
    pub xi: f64,
    /// grad Y.
    pub grad_xi: [f64; 2],
    /// m_ij = d_j (grad-perp phi)_i.
    pub mm: [[f64; 2]; 2],
}

impl PerturbationPoint {
    pub fn potential(z: f64, p: [f64; 2], q: [f64; 2]) -> Self {
        PerturbationPoint { z, p, q, ..Default::default() }
    }

    /// r-perp = (r2, -r1).
    pub fn r_perp(&self) -> [f64; 2] {
        [self.r[1], -self.r[0]]
    }

    /// Full velocity grad(phi0) + q + r-perp.
    pub fn velocity(&self, bgp: &BgPoint) -> [f64; 2] {
        let rp = self.r_perp();
        [bgp.u + self.q[0] + rp[0], self.q[1] + rp[1]]
    }
}

fn c2_of(gamma: f64, z: f64, q: [f64; 2]) -> f64 {
    (gamma - 1.0) * (z - 0.5 * (q[0] * q[0] + q[1] * q[1]))
}

fn checked_beta(gamma: f64, z: f64, q: [f64; 2], reference: f64) -> Result<f64> {
    let zeta = z - 0.5 * (q[0] * q[0] + q[1] * q[1]);
    if !(zeta > 0.0) {
        return Err(Error::NonPositiveArgument { zeta, s: 1.0 });
    }
    let beta = c2_of(gamma, z, q) - q[0] * q[0];
    if beta.abs() < SONIC_DEN_TOL * reference {
        return Err(Error::SonicDenominator(beta));
    }
    Ok(beta)
}

/// (A12, A22) at (z, q); guard relative to c^2(z, q).
pub fn second_order_coeffs(gamma: f64, z: f64, q: [f64; 2]) -> Result<(f64, f64)> {
    let beta = checked_beta(gamma, z, q, c2_of(gamma, z, q).abs())?;
    let c2 = c2_of(gamma, z, q);
    Ok((-q[0] * q[1] / beta, (q[1] * q[1] - c2) / beta))
}

/// B(z, p, q) = p.q / (c^2 - q1^2).
pub fn first_order_term(gamma: f64, z: f64, p: [f64; 2], q: [f64; 2]) -> Result<f64> {
    let beta = checked_beta(gamma, z, q, c2_of(gamma, z, q).abs())?;
    Ok((p[0] * q[0] + p[1] * q[1]) / beta)
}

fn background_c2(bgp: &BgPoint, gp: &GasParams) -> f64 {
    bgp.c2(gp)
}

/// Perturbed second-order coefficients (a12, a22) of the potential equation.
pub fn perturbed_coeffs(gp: &GasParams, bgp: &BgPoint, pt: &PerturbationPoint) -> Result<(f64, f64)> {
    let u = pt.velocity(bgp);
    let beta = checked_beta(gp.gamma(), bgp.big_phi0 + pt.z, u, background_c2(bgp, gp))?;
    let c2 = c2_of(gp.gamma(), bgp.big_phi0 + pt.z, u);
    Ok((-u[0] * u[1] / beta, (u[1] * u[1] - c2) / beta))
}

/// Potential-flow f1: the quadratic remainder of B about the background.
pub fn rhs_f1(gp: &GasParams, bgp: &BgPoint, pt: &PerturbationPoint) -> Result<f64> {
    let bar = BarPoint::at(gp, bgp.u, bgp.e);
    let z = bgp.big_phi0 + pt.z;
    let p = [bgp.e + pt.p[0], pt.p[1]];
    let q = [bgp.u + pt.q[0], pt.q[1]];
    let beta = checked_beta(gp.gamma(), z, q, background_c2(bgp, gp))?;
    let b = (p[0] * q[0] + p[1] * q[1]) / beta;
    let b_bar = bgp.e * bgp.u / (background_c2(bgp, gp) - bgp.u * bgp.u);
    Ok(b_bar - b + bar.a1 * pt.q[0] + bar.b1 * pt.p[0] + bar.b2 * pt.z)
}

/// Potential-flow f2 with b - b0 supplied pointwise.
pub fn rhs_f2(gp: &GasParams, bgp: &BgPoint, pt: &PerturbationPoint, db: f64) -> Result<f64> {
    let bar = BarPoint::at(gp, bgp.u, bgp.e);
    let q = [bgp.u + pt.q[0], pt.q[1]];
    let rho = model::density_law_isentropic(gp, bgp.big_phi0 + pt.z, q)?;
    Ok(rho - bgp.rho - bar.h1 * pt.z - bar.h2 * pt.q[0] - db)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationalCoeffs {
    pub a12: f64,
    pub a22: f64,
    /// Momentum H(S, zeta) u.
    pub m: [f64; 2],
    /// c^2 - u1^2.
    pub beta: f64,
}

pub fn rotational_coeffs(gp: &GasParams, bgp: &BgPoint, pt: &PerturbationPoint) -> Result<RotationalCoeffs> {
    let g = gp.gamma();
    let u = pt.velocity(bgp);
    let z = bgp.big_phi0 + pt.z;
    let beta = checked_beta(g, z, u, background_c2(bgp, gp))?;
    let c2 = c2_of(g, z, u);
    let zeta = z - 0.5 * (u[0] * u[0] + u[1] * u[1]);
    let rho = model::density_law(g, gp.s0() + pt.xi, zeta)?;
    Ok(RotationalCoeffs {
        a12: -u[0] * u[1] / beta,
        a22: (u[1] * u[1] - c2) / beta,
        m: [rho * u[0], rho * u[1]],
        beta,
    })
}

/// Rotational right-hand sides (f1, f2, f3) such that the exact steady equations hold at a
/// fixed point; f3 is the vortical-potential source (Laplacian of phi).
pub fn rotational_rhs(gp: &GasParams, bgp: &BgPoint, pt: &PerturbationPoint, db: f64) -> Result<(f64, f64, f64)> {
    let g = gp.gamma();
    let bar = BarPoint::at(gp, bgp.u, bgp.e);
    let u = pt.velocity(bgp);
    if u[0].abs() < STAGNATION_TOL * bgp.u.abs() {
        return Err(Error::StagnationDenominator(u[0]));
    }
    let z = bgp.big_phi0 + pt.z;
    let c2_bar = background_c2(bgp, gp);
    let beta = checked_beta(g, z, u, c2_bar)?;
    let zeta = z - 0.5 * (u[0] * u[0] + u[1] * u[1]);
    let s = gp.s0() + pt.xi;
    let rho = model::density_law(g, s, zeta)?;
    let grad_phi = [bgp.e + pt.p[0], pt.p[1]];
    let m = &pt.mm;
    let quad = m[0][0] * u[0] * u[0] + (m[0][1] + m[1][0]) * u[0] * u[1] + m[1][1] * u[1] * u[1];
    let transport = zeta / s * (u[0] * pt.grad_xi[0] + u[1] * pt.grad_xi[1]);
    let big_g = u[0] * grad_phi[0] + u[1] * grad_phi[1] - quad - transport;
    let g_bar = bgp.u * bgp.e / (c2_bar - bgp.u * bgp.u);
    let f1 = bar.a1 * pt.q[0] + bar.b1 * pt.p[0] + bar.b2 * pt.z - (big_g / beta - g_bar);
    let f2 = rho - bgp.rho - bar.h1 * pt.z - bar.h2 * pt.q[0] - db;
    let f3 = -pt.grad_xi[1] * rho.powf(g - 1.0) / ((g - 1.0) * u[0]);
    Ok((f1, f2, f3))
}

/// c^2 - u1^2 over a sampled box |z|, |q| <= delta0 around every background node:
/// returns (kappa0, kappa1) = (-max beta, min a22).
pub fn admissibility_margins(bg: &Background1D, delta0: f64, samples: usize) -> Result<(f64, f64)> {
    let gp = &bg.gp;
    let mut kappa0 = f64::INFINITY;
    let mut kappa1 = f64::INFINITY;
    let s = samples.max(2);
    for i in 0..bg.n1() {
        let bgp = bg.point(i);
        for a in 0..s {
            for b in 0..s {
                for c in 0..s {
                    let t = |k: usize| delta0 * (2.0 * k as f64 / (s - 1) as f64 - 1.0);
                    let (z, q1, q2) = (t(a), t(b) / std::f64::consts::SQRT_2, t(c) / std::f64::consts::SQRT_2);
                    let pt = PerturbationPoint::potential(z, [0.0, 0.0], [q1, q2]);
                    let (_, a22) = perturbed_coeffs(gp, &bgp, &pt)?;
                    let u = pt.velocity(&bgp);
                    let beta = c2_of(gp.gamma(), bgp.big_phi0 + z, u) - u[0] * u[0];
                    kappa0 = kappa0.min(-beta);
                    kappa1 = kappa1.min(a22);
                }
            }
        }
    }
    Ok((kappa0, kappa1))
}

/// Default admissibility radius 0.1 min u.
pub fn default_delta0(bg: &Background1D) -> f64 {
    0.1 * bg.u.iter().cloned().fold(f64::INFINITY, f64::min)
}
