//! Picard iterations for the perturbed nonlinear problems, the Lagrangian entropy transport,
//! and reconstruction of the physical fields with residual diagnostics.

use std::f64::consts::PI;

use crate::background::{Background1D, BgPoint};
use crate::error::{Error, Result};
use crate::linearize::{self, PerturbationPoint};
use crate::linsolve::{assemble, h1_norm, solve_bvp_with, solve_poisson_phi, LinearProblem, X1Scheme};
use crate::model;
use crate::quad::{d1_high, d2_high, x1_weights};
use crate::spectral::{
    check_compatibility, eigenvalue, eta, Basis, BasisTable, CompatReport, CosineSeries, Field2D, SineSeries,
    WallProfile, X2Grid, DEFAULT_M, DEFAULT_N2,
};

pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_FP_TOL: f64 = 1e-10;
pub const DEFAULT_FLUX_TOL: f64 = 1e-4;

type Grid = Vec<Vec<f64>>;

/// b - b0 = (sum_j a_j cos(j pi x1 / L), or 1 when empty) * sum_k c_k eta_k(x2).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IonPerturbation {
    pub x1_modes: Vec<f64>,
    pub x2: CosineSeries,
}

impl IonPerturbation {
    pub fn eval(&self, x1: f64, length: f64, x2: f64) -> f64 {
        if self.x2.coeffs.iter().all(|c| *c == 0.0) {
            return 0.0;
        }
        let f = if self.x1_modes.is_empty() {
            1.0
        } else {
            self.x1_modes.iter().enumerate().map(|(j, a)| a * (j as f64 * PI * x1 / length).cos()).sum()
        };
        f * self.x2.eval(x2)
    }

    pub fn sup_bound(&self) -> f64 {
        let f: f64 = if self.x1_modes.is_empty() { 1.0 } else { self.x1_modes.iter().map(|a| a.abs()).sum() };
        let g: f64 = self.x2.coeffs.iter().enumerate().map(|(k, c)| c.abs() * if k == 0 { eta(0, 0, 0.0) } else { 1.0 }).sum();
        f * g
    }
}

/// Boundary data as perturbations of the background traces.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    /// u_en - u0.
    pub u_en: CosineSeries,
    pub v_en: SineSeries,
    /// E_en - E0.
    pub e_en: CosineSeries,
    /// Phi_ex - Phi0(L).
    pub phi_ex: CosineSeries,
    /// S_en - S0.
    pub s_en: CosineSeries,
    pub db: IonPerturbation,
}

fn series_h1(coeffs: &[f64], basis: Basis) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let mode = if basis == Basis::Cosine { k } else { k + 1 };
            (1.0 + eigenvalue(basis, mode)) * c * c
        })
        .sum::<f64>()
        .sqrt()
}

impl BoundaryData {
    pub fn zero(m: usize) -> Self {
        BoundaryData {
            u_en: CosineSeries::zero(m),
            v_en: SineSeries::zero(2 * m),
            e_en: CosineSeries::zero(m),
            phi_ex: CosineSeries::zero(m),
            s_en: CosineSeries::zero(m),
            db: IonPerturbation { x1_modes: Vec::new(), x2: CosineSeries::zero(m) },
        }
    }

    /// Data size: series H1 norms plus a sup bound on b - b0.
    pub fn sigma(&self) -> f64 {
        series_h1(&self.u_en.coeffs, Basis::Cosine)
            + series_h1(&self.v_en.coeffs, Basis::Sine)
            + series_h1(&self.e_en.coeffs, Basis::Cosine)
            + series_h1(&self.phi_ex.coeffs, Basis::Cosine)
            + series_h1(&self.s_en.coeffs, Basis::Cosine)
            + self.db.sup_bound()
    }

    pub fn is_irrotational(&self) -> bool {
        self.v_en.coeffs.iter().chain(&self.s_en.coeffs).all(|c| *c == 0.0)
    }

    /// The same data with every perturbation scaled by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let sc = |c: &CosineSeries| CosineSeries::new(c.coeffs.iter().map(|v| v * s).collect());
        BoundaryData {
            u_en: sc(&self.u_en),
            v_en: SineSeries::new(self.v_en.coeffs.iter().map(|v| v * s).collect()),
            e_en: sc(&self.e_en),
            phi_ex: sc(&self.phi_ex),
            s_en: sc(&self.s_en),
            db: IonPerturbation { x1_modes: self.db.x1_modes.clone(), x2: sc(&self.db.x2) },
        }
    }

    pub fn compatibility(&self, tol: f64) -> CompatReport {
        check_compatibility(
            &[
                ("u_en", WallProfile::Cosine(&self.u_en), &[1, 3]),
                ("v_en", WallProfile::Sine(&self.v_en), &[0, 2]),
                ("E_en", WallProfile::Cosine(&self.e_en), &[1, 3]),
                ("Phi_ex", WallProfile::Cosine(&self.phi_ex), &[1, 3]),
                ("S_en", WallProfile::Cosine(&self.s_en), &[1, 3]),
                ("b", WallProfile::Cosine(&self.db.x2), &[1]),
            ],
            tol,
        )
    }
}

/// Cross-channel resolution of the nonlinear solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resolution {
    pub n2: usize,
    pub m: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution { n2: DEFAULT_N2, m: DEFAULT_M }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationConfig {
    /// Irrotational ball radius; derived from C* and delta1 when None.
    pub delta: Option<f64>,
    pub delta_e: Option<f64>,
    pub delta_p: Option<f64>,
    pub delta_v: Option<f64>,
    pub max_iter: usize,
    pub fp_tol: f64,
    /// Boundary-data size; measured when None.
    pub sigma: Option<f64>,
    pub c_star: Option<f64>,
    pub c_star_star: Option<f64>,
    /// Admissibility radius; 0.1 min u-bar when None.
    pub delta1: Option<f64>,
    pub scheme: X1Scheme,
    /// Relative mass-flux drift tolerated by the transport solve.
    pub flux_tol: f64,
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig {
            delta: None,
            delta_e: None,
            delta_p: None,
            delta_v: None,
            max_iter: DEFAULT_MAX_ITER,
            fp_tol: DEFAULT_FP_TOL,
            sigma: None,
            c_star: None,
            c_star_star: None,
            delta1: None,
            scheme: X1Scheme::DefectCorrected,
            flux_tol: DEFAULT_FLUX_TOL,
        }
    }
}

/// Resolved radii and constants used by a solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Radii {
    pub sigma: f64,
    pub c_star: f64,
    pub c_star_star: f64,
    pub delta1: f64,
    pub delta: f64,
    pub delta_e: f64,
    pub delta_p: f64,
    pub delta_v: f64,
}

impl IterationConfig {
    /// Measures the missing constants (one probe solve each) and derives the missing radii.
    pub fn calibrate(&mut self, bg: &Background1D, res: Resolution, data: &BoundaryData) -> Result<Radii> {
        let sigma = *self.sigma.get_or_insert_with(|| data.sigma());
        let c_star = match self.c_star {
            Some(c) => c,
            None => *self.c_star.insert(probe_c_star(bg, res)?),
        };
        let c_star_star = match self.c_star_star {
            Some(c) => c,
            None => *self.c_star_star.insert(probe_c_star_star(bg, res)?),
        };
        let delta1 = *self.delta1.get_or_insert_with(|| linearize::default_delta0(bg));
        let delta = *self.delta.get_or_insert(0.5 * (1.0 / c_star).min(delta1));
        let delta_e = *self.delta_e.get_or_insert(2.0 * c_star_star * sigma);
        let delta_p = *self.delta_p.get_or_insert(12.0 * c_star * delta_e + 4.0 * c_star * sigma);
        let delta_v = *self.delta_v.get_or_insert(2.0 * c_star * delta_e);
        Ok(Radii { sigma, c_star, c_star_star, delta1, delta, delta_e, delta_p, delta_v })
    }
}

/// Solution-to-data ratio of the background linear problem for unit-size inlet/exit data.
fn probe_c_star(bg: &Background1D, res: Resolution) -> Result<f64> {
    let mut p = LinearProblem::new(bg, X2Grid::new(res.n2), res.m)?;
    let mut unit = CosineSeries::zero(res.m);
    unit.coeffs[1.min(res.m)] = 1.0 / (3.0 * series_h1(&[0.0, 1.0], Basis::Cosine));
    p.g1 = unit.clone();
    p.g2 = unit.clone();
    p.psi_ex = unit;
    let sol = solve_bvp_with(&assemble(&p)?, X1Scheme::Second)?;
    Ok(h1_norm(&sol.psi).hypot(h1_norm(&sol.big_psi)))
}

/// ||Y||/||S_en - S0|| for transport by the background momentum.
fn probe_c_star_star(bg: &Background1D, res: Resolution) -> Result<f64> {
    let grid = X2Grid::new(res.n2);
    let m1 = vec![vec![bg.gp.j0(); res.n2]; bg.n1()];
    let mut s = CosineSeries::zero(res.m);
    s.coeffs[1.min(res.m)] = 1.0;
    let t = transport_solve(&m1, &grid, &s, DEFAULT_FLUX_TOL)?;
    let table = BasisTable::new(Basis::Cosine, res.m, &grid)?;
    let y = Field2D::from_grid(&t.y, &table, bg.length);
    Ok(h1_norm(&y) / series_h1(&s.coeffs, Basis::Cosine))
}

/// Physical fields on the rectangular grid, [i][j].
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalFields {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub rho: Grid,
    pub u1: Grid,
    pub u2: Grid,
    pub s: Grid,
    pub big_phi: Grid,
    pub pressure: Grid,
    /// Discrete curl of u.
    pub vorticity: Grid,
    /// -Laplacian of the vortical potential.
    pub vorticity_potential: Grid,
    /// Pseudo-Bernoulli function B - Phi.
    pub k: Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    /// L2 of div(rho u).
    pub mass_residual: f64,
    /// L2 of Laplacian(Phi) - (rho - b).
    pub poisson_residual: f64,
    /// L2 of curl u - rho^{gamma-1} S_x2 / ((gamma-1) u1).
    pub vorticity_residual: f64,
    /// L2 of curl u + Laplacian(phi).
    pub vorticity_consistency: f64,
    /// L2 of rho u . grad S.
    pub transport_residual: f64,
    /// (max - min)/mean of the x1 columns' mass flux.
    pub flux_drift: f64,
    pub max_k: f64,
    /// min over nodes of |u|^2 - c^2.
    pub kappa_hat0: f64,
    /// The same margin for the background.
    pub background_margin: f64,
    pub min_u1: f64,
    pub min_rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionBundle {
    pub psi: Field2D,
    pub big_psi: Field2D,
    pub phi: Field2D,
    pub y: Field2D,
    pub fields: PhysicalFields,
    pub diagnostics: Diagnostics,
    /// Picard steps (outer steps for the rotational solve).
    pub iterations: usize,
    /// Inner steps per outer step; empty for the irrotational solve.
    pub inner_iterations: Vec<usize>,
    /// Successive differences in discrete H1.
    pub history: Vec<f64>,
    pub radii: Radii,
}

impl SolutionBundle {
    pub fn perturbation_norm(&self) -> f64 {
        h1_norm(&self.psi).hypot(h1_norm(&self.big_psi))
    }
}

/// Values and derivatives of a modal field on the grid.
struct Samples {
    v: Grid,
    d1: Grid,
    d2: Grid,
    d11: Grid,
    d12: Grid,
    d22: Grid,
}

fn map_modes(f: &Field2D, op: fn(&[f64], f64) -> Vec<f64>) -> Field2D {
    let h = f.h();
    Field2D { basis: f.basis, length: f.length, modes: f.modes.iter().map(|m| op(m, h)).collect() }
}

fn samples(f: &Field2D, table: &BasisTable, second: bool) -> Samples {
    let dx = map_modes(f, d1_high);
    let empty = Vec::new;
    let (d11, d12, d22) = if second {
        (map_modes(f, d2_high).to_grid(table, 0), dx.to_grid(table, 1), f.to_grid(table, 2))
    } else {
        (empty(), empty(), empty())
    };
    Samples { v: f.to_grid(table, 0), d1: dx.to_grid(table, 0), d2: f.to_grid(table, 1), d11, d12, d22 }
}

/// Fixed pieces shared by the iterations.
struct Setup<'a> {
    bg: &'a Background1D,
    data: &'a BoundaryData,
    res: Resolution,
    grid: X2Grid,
    cos: BasisTable,
    sine: BasisTable,
    points: Vec<BgPoint>,
    db: Grid,
}

impl<'a> Setup<'a> {
    fn new(bg: &'a Background1D, data: &'a BoundaryData, res: Resolution) -> Result<Self> {
        let grid = X2Grid::new(res.n2);
        let cos = BasisTable::new(Basis::Cosine, res.m, &grid)?;
        let sine = BasisTable::new(Basis::Sine, (2 * res.m).min(grid.max_modes()), &grid)?;
        let points: Vec<BgPoint> = (0..bg.n1()).map(|i| bg.point(i)).collect();
        let db = points.iter().map(|p| grid.x.iter().map(|x2| data.db.eval(p.x1, bg.length, *x2)).collect()).collect();
        Ok(Setup { bg, data, res, grid, cos, sine, points, db })
    }

    fn n1(&self) -> usize {
        self.bg.n1()
    }

    fn zero_cos(&self) -> Field2D {
        Field2D::zeros(Basis::Cosine, self.res.m + 1, self.n1(), self.bg.length)
    }

    fn zero_sine(&self) -> Field2D {
        Field2D::zeros(Basis::Sine, self.sine.n_modes(), self.n1(), self.bg.length)
    }

    fn problem(&self) -> Result<LinearProblem> {
        let m = self.res.m;
        let mut p = LinearProblem::new(self.bg, self.grid.clone(), m)?;
        p.g1 = self.data.u_en.resized(m);
        p.g2 = self.data.e_en.resized(m);
        p.psi_ex = self.data.phi_ex.resized(m);
        Ok(p)
    }
}

fn field_diff(a: &Field2D, b: &Field2D) -> f64 {
    let d = Field2D {
        basis: a.basis,
        length: a.length,
        modes: a.modes.iter().zip(&b.modes).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect()).collect(),
    };
    h1_norm(&d)
}

fn escaped(what: &str, norm: f64, radius: f64) -> Result<()> {
    if norm > radius * (1.0 + 1e-9) + 1e-13 {
        return Err(Error::IterateEscapedSet(format!("{what} norm {norm:e} exceeds radius {radius:e}")));
    }
    Ok(())
}

/// One irrotational map: freeze coefficients and sources at (psi~, Psi~), solve the linear BVP.
fn irrotational_step(st: &Setup, psi: &Field2D, big_psi: &Field2D, scheme: X1Scheme) -> Result<(Field2D, Field2D)> {
    let gp = &st.bg.gp;
    let a = samples(psi, &st.cos, false);
    let b = samples(big_psi, &st.cos, false);
    let (n1, n2) = (st.n1(), st.grid.n2());
    let mut p = st.problem()?;
    let mut f1 = vec![vec![0.0; n2]; n1];
    let mut f2 = vec![vec![0.0; n2]; n1];
    for i in 0..n1 {
        let bgp = &st.points[i];
        for j in 0..n2 {
            let pt = PerturbationPoint::potential(b.v[i][j], [b.d1[i][j], b.d2[i][j]], [a.d1[i][j], a.d2[i][j]]);
            let (a12, a22) = linearize::perturbed_coeffs(gp, bgp, &pt)?;
            p.a12[i][j] = a12;
            p.a22[i][j] = a22;
            f1[i][j] = linearize::rhs_f1(gp, bgp, &pt)?;
            f2[i][j] = linearize::rhs_f2(gp, bgp, &pt, st.db[i][j])?;
        }
    }
    p.f1 = Field2D::from_grid(&f1, &st.cos, st.bg.length);
    p.f2 = Field2D::from_grid(&f2, &st.cos, st.bg.length);
    let sol = solve_bvp_with(&assemble(&p)?, scheme)?;
    Ok((sol.psi, sol.big_psi))
}

pub fn solve_irrotational(
    data: &BoundaryData,
    bg: &Background1D,
    res: Resolution,
    cfg: &IterationConfig,
) -> Result<SolutionBundle> {
    let st = Setup::new(bg, data, res)?;
    let (z0, z1) = (st.zero_cos(), st.zero_cos());
    irrotational_from(&st, cfg, z0, z1)
}

/// Irrotational solve started from a given (psi, Psi).
pub fn solve_irrotational_from(
    data: &BoundaryData,
    bg: &Background1D,
    res: Resolution,
    cfg: &IterationConfig,
    psi0: &Field2D,
    big_psi0: &Field2D,
) -> Result<SolutionBundle> {
    let st = Setup::new(bg, data, res)?;
    for f in [psi0, big_psi0] {
        if f.n_modes() != res.m + 1 || f.n1() != bg.n1() || f.basis != Basis::Cosine {
            return Err(Error::GridMismatch("initial guess does not match the resolution".into()));
        }
    }
    irrotational_from(&st, cfg, psi0.clone(), big_psi0.clone())
}

fn irrotational_from(st: &Setup, cfg: &IterationConfig, mut psi: Field2D, mut big_psi: Field2D) -> Result<SolutionBundle> {
    if !st.data.is_irrotational() {
        return Err(Error::NotApplicable("irrotational solve needs v_en = 0 and S_en = S0".into()));
    }
    let mut cfg = cfg.clone();
    let radii = cfg.calibrate(st.bg, st.res, st.data)?;
    let mut history = Vec::new();
    for it in 1..=cfg.max_iter {
        let (np, nb) = irrotational_step(st, &psi, &big_psi, cfg.scheme)?;
        let diff = field_diff(&np, &psi).hypot(field_diff(&nb, &big_psi));
        psi = np;
        big_psi = nb;
        history.push(diff);
        escaped("(psi, Psi)", h1_norm(&psi).hypot(h1_norm(&big_psi)), radii.delta)?;
        if diff < cfg.fp_tol {
            let phi = st.zero_sine();
            let y = st.zero_cos();
            let (fields, diagnostics) = reconstruct_with(st, &psi, &big_psi, &phi, &y)?;
            return Ok(SolutionBundle {
                psi,
                big_psi,
                phi,
                y,
                fields,
                diagnostics,
                iterations: it,
                inner_iterations: Vec::new(),
                history,
                radii,
            });
        }
    }
    Err(Error::MaxIterExceeded { iters: cfg.max_iter, last: history.last().copied().unwrap_or(f64::NAN) })
}

/// Lagrangian inlet-label map L = w0^{-1} o w.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianMap {
    /// L at every node, [i][j].
    pub l: Grid,
    /// Inlet streamfunction w(0, x2_j).
    pub w0: Vec<f64>,
    /// max_i |w(x1_i, 1) - w0(1)| / w0(1).
    pub flux_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportSolution {
    /// Y = (S_en - S0) o L, [i][j].
    pub y: Grid,
    pub map: LagrangianMap,
}

/// Fourth-order x2 derivative (order 1 or 2) using the wall reflection of an even (+1) or odd
/// (-1) field.
fn dx2(f: &[f64], h: f64, parity: f64, order: usize) -> Vec<f64> {
    let n = f.len() as isize;
    let at = |j: isize| -> f64 {
        if j < 0 {
            parity * f[(-j) as usize]
        } else if j >= n {
            parity * f[(2 * (n - 1) - j) as usize]
        } else {
            f[j as usize]
        }
    };
    (0..n)
        .map(|j| match order {
            1 => (8.0 * (at(j + 1) - at(j - 1)) - (at(j + 2) - at(j - 2))) / (12.0 * h),
            _ => (16.0 * (at(j - 1) + at(j + 1)) - (at(j - 2) + at(j + 2)) - 30.0 * at(j)) / (12.0 * h * h),
        })
        .collect()
}

/// Cumulative integral from the lower wall: trapezoid plus the endpoint derivative
/// correction, exact for cubics.
fn cumulative_from_wall(f: &[f64], h: f64) -> Vec<f64> {
    let df = dx2(f, h, 1.0, 1);
    let mut w = vec![0.0; f.len()];
    let mut t = 0.0;
    for j in 1..f.len() {
        t += 0.5 * h * (f[j - 1] + f[j]);
        w[j] = t - h * h / 12.0 * (df[j] - df[0]);
    }
    w
}

/// Monotone cubic Hermite interpolant of (x, w) with slopes limited for monotonicity.
struct MonotoneInverse<'a> {
    x: &'a [f64],
    w: &'a [f64],
    d: Vec<f64>,
}

impl<'a> MonotoneInverse<'a> {
    fn new(x: &'a [f64], w: &'a [f64], slopes: &[f64]) -> Self {
        let n = x.len();
        let mut d = slopes.to_vec();
        for k in 0..n - 1 {
            let sec = (w[k + 1] - w[k]) / (x[k + 1] - x[k]);
            d[k] = d[k].clamp(0.0, 3.0 * sec);
            d[k + 1] = d[k + 1].clamp(0.0, 3.0 * sec);
        }
        MonotoneInverse { x, w, d }
    }

    fn eval(&self, k: usize, t: f64) -> f64 {
        let h = self.x[k + 1] - self.x[k];
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.w[k]
            + (t3 - 2.0 * t2 + t) * h * self.d[k]
            + (-2.0 * t3 + 3.0 * t2) * self.w[k + 1]
            + (t3 - t2) * h * self.d[k + 1]
    }

    fn invert(&self, target: f64) -> f64 {
        let n = self.w.len();
        let target = target.clamp(self.w[0], self.w[n - 1]);
        let k = self.w.partition_point(|v| *v <= target);
        if k == 0 {
            return self.x[0];
        }
        if k == n || self.w[k - 1] == target {
            return if k == n { self.x[n - 1] } else { self.x[k - 1] };
        }
        let k = k - 1;
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.eval(k, mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-16 {
                break;
            }
        }
        let t = 0.5 * (lo + hi);
        self.x[k] + t * (self.x[k + 1] - self.x[k])
    }
}

/// Solves M . grad Y = 0, Y = S_en - S0 on the inlet, through the streamfunction of M1.
pub fn transport_solve(m1: &[Vec<f64>], grid: &X2Grid, s_en: &CosineSeries, flux_tol: f64) -> Result<TransportSolution> {
    let n2 = grid.n2();
    if m1.is_empty() || m1.iter().any(|c| c.len() != n2) {
        return Err(Error::GridMismatch(format!("momentum columns must have {n2} nodes")));
    }
    for (i, col) in m1.iter().enumerate() {
        if let Some((j, v)) = col.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonMonotoneStream { i, j, value: *v });
        }
    }
    let h2 = grid.x[1] - grid.x[0];
    let w: Grid = m1.iter().map(|c| cumulative_from_wall(c, h2)).collect();
    let w0 = w[0].clone();
    let total = w0[n2 - 1];
    if let Some(j) = (1..n2).find(|&j| w0[j] <= w0[j - 1]) {
        return Err(Error::NonMonotoneStream { i: 0, j, value: m1[0][j] });
    }
    let flux_drift = w.iter().map(|c| (c[n2 - 1] - total).abs()).fold(0.0, f64::max) / total;
    if flux_drift > flux_tol {
        return Err(Error::DivergenceTooLarge(flux_drift));
    }
    let inv = MonotoneInverse::new(&grid.x, &w0, &m1[0]);
    let l: Grid = w.iter().map(|c| c.iter().map(|t| inv.invert(*t)).collect()).collect();
    let y = l.iter().map(|c| c.iter().map(|x| s_en.eval(*x)).collect()).collect();
    Ok(TransportSolution { y, map: LagrangianMap { l, w0, flux_drift } })
}

/// Cosine coefficients (modes 0..=m) of phi_x2 on the inlet for a sine-basis field.
fn inlet_phi_x2(phi: &Field2D, m: usize) -> Vec<f64> {
    let mut c = vec![0.0; m + 1];
    for (s, prof) in phi.modes.iter().enumerate() {
        let k = s + 1;
        if k % 2 == 0 && k / 2 <= m {
            let j = k / 2;
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            c[j] += prof[0] * j as f64 * PI * sign;
        }
    }
    c
}

struct Inner {
    psi: Field2D,
    big_psi: Field2D,
    phi: Field2D,
    iterations: usize,
}

/// Perturbation arguments at every node for the rotational problem.
fn rotational_points(st: &Setup, psi: &Field2D, big_psi: &Field2D, phi: &Field2D, y: &Field2D) -> Vec<Vec<PerturbationPoint>> {
    let a = samples(psi, &st.cos, false);
    let b = samples(big_psi, &st.cos, false);
    let c = samples(phi, &st.sine, true);
    let e = samples(y, &st.cos, false);
    (0..st.n1())
        .map(|i| {
            (0..st.grid.n2())
                .map(|j| PerturbationPoint {
                    z: b.v[i][j],
                    p: [b.d1[i][j], b.d2[i][j]],
                    q: [a.d1[i][j], a.d2[i][j]],
                    r: [c.d1[i][j], c.d2[i][j]],
                    xi: e.v[i][j],
                    grad_xi: [e.d1[i][j], e.d2[i][j]],
                    mm: [[c.d12[i][j], c.d22[i][j]], [-c.d11[i][j], -c.d12[i][j]]],
                })
                .collect()
        })
        .collect()
}

fn rotational_step(st: &Setup, u: (&Field2D, &Field2D, &Field2D), y: &Field2D, inlet: &CosineSeries, scheme: X1Scheme) -> Result<(Field2D, Field2D, Field2D)> {
    let gp = &st.bg.gp;
    let (n1, n2) = (st.n1(), st.grid.n2());
    let pts = rotational_points(st, u.0, u.1, u.2, y);
    let mut p = st.problem()?;
    let mut f = [vec![vec![0.0; n2]; n1], vec![vec![0.0; n2]; n1], vec![vec![0.0; n2]; n1]];
    for i in 0..n1 {
        let bgp = &st.points[i];
        for j in 0..n2 {
            let pt = &pts[i][j];
            let rc = linearize::rotational_coeffs(gp, bgp, pt)?;
            p.a12[i][j] = rc.a12;
            p.a22[i][j] = rc.a22;
            let (f1, f2, f3) = linearize::rotational_rhs(gp, bgp, pt, st.db[i][j])?;
            f[0][i][j] = f1;
            f[1][i][j] = f2;
            f[2][i][j] = f3;
        }
    }
    p.f1 = Field2D::from_grid(&f[0], &st.cos, st.bg.length);
    p.f2 = Field2D::from_grid(&f[1], &st.cos, st.bg.length);
    let slope = inlet_phi_x2(u.2, st.res.m);
    for (g, s) in p.g1.coeffs.iter_mut().zip(&slope) {
        *g -= s;
    }
    p.inlet = inlet.clone();
    let sol = solve_bvp_with(&assemble(&p)?, scheme)?;
    let phi = solve_poisson_phi(&Field2D::from_grid(&f[2], &st.sine, st.bg.length))?;
    Ok((sol.psi, sol.big_psi, phi))
}

fn inner_loop(st: &Setup, cfg: &IterationConfig, radii: &Radii, y: &Field2D, inlet: &CosineSeries, start: (Field2D, Field2D, Field2D)) -> Result<Inner> {
    let (mut psi, mut big_psi, mut phi) = start;
    let mut last = f64::NAN;
    for it in 1..=cfg.max_iter {
        let (np, nb, nf) = rotational_step(st, (&psi, &big_psi, &phi), y, inlet, cfg.scheme)?;
        let diff = field_diff(&np, &psi).hypot(field_diff(&nb, &big_psi)).hypot(field_diff(&nf, &phi));
        psi = np;
        big_psi = nb;
        phi = nf;
        escaped("(psi, Psi)", h1_norm(&psi).hypot(h1_norm(&big_psi)), radii.delta_p)?;
        escaped("phi", h1_norm(&phi), radii.delta_v)?;
        last = diff;
        if diff < cfg.fp_tol {
            return Ok(Inner { psi, big_psi, phi, iterations: it });
        }
    }
    Err(Error::MaxIterExceeded { iters: cfg.max_iter, last })
}

/// Momentum rho u at every node for the given perturbation.
fn momentum(st: &Setup, psi: &Field2D, big_psi: &Field2D, phi: &Field2D, y: &Field2D) -> Result<Grid> {
    let pts = rotational_points(st, psi, big_psi, phi, y);
    pts.iter()
        .enumerate()
        .map(|(i, row)| row.iter().map(|pt| Ok(linearize::rotational_coeffs(&st.bg.gp, &st.points[i], pt)?.m[0])).collect())
        .collect()
}

pub fn solve_rotational(
    data: &BoundaryData,
    bg: &Background1D,
    res: Resolution,
    cfg: &IterationConfig,
) -> Result<SolutionBundle> {
    let report = data.compatibility(1e-8);
    if let Some(e) = report.entries.iter().find(|e| !e.pass) {
        return Err(Error::SymmetryViolation(format!("{} fails the order-{} wall condition", e.name, e.order)));
    }
    let inlet = data.v_en.integral_as_cosine()?.resized(res.m);
    let st = Setup::new(bg, data, res)?;
    let mut cfg = cfg.clone();
    let radii = cfg.calibrate(bg, res, data)?;
    // Start from the entropy carried by the background flow.
    let m1_bg = vec![vec![bg.gp.j0(); res.n2]; bg.n1()];
    let y0 = transport_solve(&m1_bg, &st.grid, &data.s_en, cfg.flux_tol)?;
    let mut y = Field2D::from_grid(&y0.y, &st.cos, bg.length);
    let mut state = (st.zero_cos(), st.zero_cos(), st.zero_sine());
    let mut history = Vec::new();
    let mut inner_iterations = Vec::new();
    for it in 1..=cfg.max_iter {
        let inner = inner_loop(&st, &cfg, &radii, &y, &inlet, state)?;
        inner_iterations.push(inner.iterations);
        let m1 = momentum(&st, &inner.psi, &inner.big_psi, &inner.phi, &y)?;
        let t = transport_solve(&m1, &st.grid, &data.s_en, cfg.flux_tol)?;
        let ny = Field2D::from_grid(&t.y, &st.cos, bg.length);
        let diff = field_diff(&ny, &y);
        history.push(diff);
        y = ny;
        escaped("Y", h1_norm(&y), radii.delta_e)?;
        state = (inner.psi, inner.big_psi, inner.phi);
        if diff < cfg.fp_tol {
            let (fields, diagnostics) = reconstruct_with(&st, &state.0, &state.1, &state.2, &y)?;
            return Ok(SolutionBundle {
                psi: state.0,
                big_psi: state.1,
                phi: state.2,
                y,
                fields,
                diagnostics,
                iterations: it,
                inner_iterations,
                history,
                radii,
            });
        }
    }
    Err(Error::MaxIterExceeded { iters: cfg.max_iter, last: history.last().copied().unwrap_or(f64::NAN) })
}

/// Physical fields and diagnostics for a perturbation (psi, Psi, phi, Y) of the background.
pub fn reconstruct(
    bg: &Background1D,
    data: &BoundaryData,
    res: Resolution,
    psi: &Field2D,
    big_psi: &Field2D,
    phi: &Field2D,
    y: &Field2D,
) -> Result<(PhysicalFields, Diagnostics)> {
    let st = Setup::new(bg, data, res)?;
    if phi.n_modes() != st.sine.n_modes() {
        return Err(Error::GridMismatch(format!("phi needs {} sine modes", st.sine.n_modes())));
    }
    reconstruct_with(&st, psi, big_psi, phi, y)
}

fn l2_grid(r: &Grid, w1: &[f64], w2: &[f64]) -> f64 {
    r.iter()
        .zip(w1)
        .map(|(row, a)| a * row.iter().zip(w2).map(|(v, b)| b * v * v).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

/// x1 derivatives of a grid field, column by column.
fn dx1(f: &Grid, h: f64, second: bool) -> Grid {
    let (n1, n2) = (f.len(), f[0].len());
    let mut out = vec![vec![0.0; n2]; n1];
    let mut col = vec![0.0; n1];
    for j in 0..n2 {
        for i in 0..n1 {
            col[i] = f[i][j];
        }
        let d = if second { d2_high(&col, h) } else { d1_high(&col, h) };
        for i in 0..n1 {
            out[i][j] = d[i];
        }
    }
    out
}

fn reconstruct_with(st: &Setup, psi: &Field2D, big_psi: &Field2D, phi: &Field2D, y: &Field2D) -> Result<(PhysicalFields, Diagnostics)> {
    let bg = st.bg;
    let gp = &bg.gp;
    let g = gp.gamma();
    let (n1, n2) = (st.n1(), st.grid.n2());
    let h1 = bg.h();
    let h2 = st.grid.x[1] - st.grid.x[0];
    let a = samples(psi, &st.cos, false);
    let b = samples(big_psi, &st.cos, false);
    let c = samples(phi, &st.sine, true);
    let yv = y.to_grid(&st.cos, 0);
    let z = || vec![vec![0.0; n2]; n1];
    let (mut rho, mut u1, mut u2, mut s, mut big_phi, mut pressure, mut k, mut vort_pot) = (z(), z(), z(), z(), z(), z(), z(), z());
    let mut diag = Diagnostics { kappa_hat0: f64::INFINITY, background_margin: f64::INFINITY, min_u1: f64::INFINITY, min_rho: f64::INFINITY, ..Default::default() };
    for i in 0..n1 {
        let p = &st.points[i];
        diag.background_margin = diag.background_margin.min(p.u * p.u - p.c2(gp));
        for j in 0..n2 {
            u1[i][j] = p.u + a.d1[i][j] + c.d2[i][j];
            u2[i][j] = a.d2[i][j] - c.d1[i][j];
            s[i][j] = gp.s0() + yv[i][j];
            big_phi[i][j] = p.big_phi0 + b.v[i][j];
            let q2 = u1[i][j] * u1[i][j] + u2[i][j] * u2[i][j];
            rho[i][j] = model::density_law(g, s[i][j], big_phi[i][j] - 0.5 * q2)?;
            pressure[i][j] = model::pressure(g, rho[i][j], s[i][j]);
            k[i][j] = model::bernoulli(g, rho[i][j], q2.sqrt(), s[i][j]) - big_phi[i][j];
            vort_pot[i][j] = -(c.d11[i][j] + c.d22[i][j]);
            let c2 = g * s[i][j] * rho[i][j].powf(g - 1.0);
            diag.kappa_hat0 = diag.kappa_hat0.min(q2 - c2);
            diag.min_u1 = diag.min_u1.min(u1[i][j]);
            diag.min_rho = diag.min_rho.min(rho[i][j]);
            diag.max_k = diag.max_k.max(k[i][j].abs());
        }
    }
    let m1: Grid = (0..n1).map(|i| (0..n2).map(|j| rho[i][j] * u1[i][j]).collect()).collect();
    let m2: Grid = (0..n1).map(|i| (0..n2).map(|j| rho[i][j] * u2[i][j]).collect()).collect();
    let dm1 = dx1(&m1, h1, false);
    let du2 = dx1(&u2, h1, false);
    let ds1 = dx1(&s, h1, false);
    // Phi0'' = E' differenced once; second-differencing Phi0 itself loses digits to rounding.
    let de = d1_high(&bg.e, h1);
    let dpsi11 = dx1(&b.v, h1, true);
    let wx1 = x1_weights(n1, bg.length);
    let flux: Vec<f64> = m1.iter().map(|row| row.iter().zip(&st.grid.w).map(|(v, w)| v * w).sum()).collect();
    let (fmin, fmax) = flux.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    diag.flux_drift = (fmax - fmin) / (flux.iter().sum::<f64>() / n1 as f64);
    let (mut r_mass, mut r_pois, mut r_vort, mut r_cons, mut r_tr, mut vorticity) = (z(), z(), z(), z(), z(), z());
    for i in 0..n1 {
        let dm2 = dx2(&m2[i], h2, -1.0, 1);
        let du1 = dx2(&u1[i], h2, 1.0, 1);
        let ds2 = dx2(&s[i], h2, 1.0, 1);
        let dpsi22 = dx2(&b.v[i], h2, 1.0, 2);
        let x1 = st.points[i].x1;
        for j in 0..n2 {
            let b_ion = gp.b0() + st.data.db.eval(x1, bg.length, st.grid.x[j]);
            vorticity[i][j] = du2[i][j] - du1[j];
            r_mass[i][j] = dm1[i][j] + dm2[j];
            r_pois[i][j] = de[i] + dpsi11[i][j] + dpsi22[j] - (rho[i][j] - b_ion);
            r_vort[i][j] = vorticity[i][j] - rho[i][j].powf(g - 1.0) * ds2[j] / ((g - 1.0) * u1[i][j]);
            r_cons[i][j] = vorticity[i][j] - vort_pot[i][j];
            r_tr[i][j] = m1[i][j] * ds1[i][j] + m2[i][j] * ds2[j];
        }
    }
    let w2 = &st.grid.w;
    diag.mass_residual = l2_grid(&r_mass, &wx1, w2);
    diag.poisson_residual = l2_grid(&r_pois, &wx1, w2);
    diag.vorticity_residual = l2_grid(&r_vort, &wx1, w2);
    diag.vorticity_consistency = l2_grid(&r_cons, &wx1, w2);
    diag.transport_residual = l2_grid(&r_tr, &wx1, w2);
    let fields = PhysicalFields {
        x1: bg.x.clone(),
        x2: st.grid.x.clone(),
        rho,
        u1,
        u2,
        s,
        big_phi,
        pressure,
        vorticity,
        vorticity_potential: vort_pot,
        k,
    };
    Ok((fields, diag))
}
