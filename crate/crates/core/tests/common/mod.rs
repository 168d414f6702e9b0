#![allow(dead_code)]

use std::f64::consts::PI;

use epnozzle::background::integrate_background;
use epnozzle::linsolve::{LinearProblem, LinearSolution};
use epnozzle::multiplier::{build_weight, coefficient_window, riccati_constants, MultiplierConfig, WeightFunction};
use epnozzle::spectral::{project_cosine, Basis, CosineSeries, Field2D, X2Grid};
use epnozzle::{Background1D, GasParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn equilibrium() -> GasParams {
    GasParams::new(2.0, 2f64.sqrt(), 1.0, 0.5, 0.5, 0.0).unwrap()
}

pub fn accelerating() -> GasParams {
    GasParams::new(2.0, 2f64.sqrt(), 1.0, 0.5, 0.6, 0.2).unwrap()
}

/// x2 profile g(cos(pi x2)) with its first two derivatives.
#[derive(Clone, Copy)]
pub enum Profile {
    /// cos(k pi x2)
    Mode(usize),
    /// 1/(a + cos(pi x2))
    Pole(f64),
    /// exp(a cos(pi x2))
    Exp(f64),
}

impl Profile {
    pub fn d(&self, order: usize, x: f64) -> f64 {
        match *self {
            Profile::Mode(k) => {
                let w = k as f64 * PI;
                match order {
                    0 => (w * x).cos(),
                    1 => -w * (w * x).sin(),
                    _ => -w * w * (w * x).cos(),
                }
            }
            Profile::Pole(a) | Profile::Exp(a) => {
                let c = (PI * x).cos();
                let s = (PI * x).sin();
                let (g, g1, g2) = match *self {
                    Profile::Pole(_) => (1.0 / (a + c), -1.0 / (a + c).powi(2), 2.0 / (a + c).powi(3)),
                    _ => {
                        let e = (a * c).exp();
                        (e, a * e, a * a * e)
                    }
                };
                match order {
                    0 => g,
                    1 => -PI * s * g1,
                    _ => -PI * PI * c * g1 + PI * PI * s * s * g2,
                }
            }
        }
    }
}

pub struct Manufactured {
    pub problem: LinearProblem,
    /// Exact modal profiles (64 modes) of psi and Psi_hat.
    pub psi_modes: Vec<Vec<f64>>,
    pub dpsi_modes: Vec<Vec<f64>>,
    pub hat_modes: Vec<Vec<f64>>,
    pub dhat_modes: Vec<Vec<f64>>,
}

/// psi* = sin(x1) E1(x2), Psi_hat* = cos(pi x1 / 2L) E2(x2), with frozen coefficients varying in
/// x2 and nonzero g2, Psi_ex. Forcing from the continuous operators.
pub fn manufactured(bg: &Background1D, m: usize, e1: Profile, e2: Profile) -> Manufactured {
    let grid = X2Grid::new(257);
    let mut p = LinearProblem::new(bg, grid.clone(), m).unwrap();
    let n1 = bg.n1();
    let len = bg.length;
    let om = PI / (2.0 * len);
    let g2f = |x: f64| 0.1 * (PI * x).cos();
    let g2dd = |x: f64| -0.1 * PI * PI * (PI * x).cos();
    let exf = |x: f64| 0.05 + 0.02 * (2.0 * PI * x).cos();
    let exdd = |x: f64| -0.02 * 4.0 * PI * PI * (2.0 * PI * x).cos();
    let mut f1 = vec![vec![0.0; grid.n2()]; n1];
    let mut f2 = vec![vec![0.0; grid.n2()]; n1];
    for i in 0..n1 {
        let x1 = bg.x[i];
        let b = p.bar.point(i);
        let (s, s1, s11) = (x1.sin(), x1.cos(), -x1.sin());
        let (t, t1, t11) = ((om * x1).cos(), -om * (om * x1).sin(), -om * om * (om * x1).cos());
        for (j, &x2) in grid.x.iter().enumerate() {
            let a12 = 0.05 * (PI * x2).sin() * (1.0 + x1);
            let a22 = b.a22 * (1.0 + 0.1 * (PI * x2).cos());
            p.a12[i][j] = a12;
            p.a22[i][j] = a22;
            let big = t * e2.d(0, x2) + (x1 - len) * g2f(x2) + exf(x2);
            let big1 = t1 * e2.d(0, x2) + g2f(x2);
            let lap = t11 * e2.d(0, x2) + t * e2.d(2, x2) + (x1 - len) * g2dd(x2) + exdd(x2);
            f1[i][j] = s11 * e1.d(0, x2) + 2.0 * a12 * s1 * e1.d(1, x2) - a22 * s * e1.d(2, x2)
                + b.a1 * s1 * e1.d(0, x2)
                + b.b1 * big1
                + b.b2 * big;
            f2[i][j] = lap - b.h1 * big - b.h2 * s1 * e1.d(0, x2);
        }
    }
    p.f1 = Field2D::from_grid(&f1, &epnozzle::spectral::BasisTable::new(Basis::Cosine, m, &grid).unwrap(), len);
    p.f2 = Field2D::from_grid(&f2, &epnozzle::spectral::BasisTable::new(Basis::Cosine, m, &grid).unwrap(), len);
    let samp = |f: &dyn Fn(f64) -> f64| grid.x.iter().map(|x| f(*x)).collect::<Vec<f64>>();
    p.g1 = project_cosine(&samp(&|x| e1.d(0, x)), &grid, m).unwrap();
    p.g2 = project_cosine(&samp(&g2f), &grid, m).unwrap();
    p.psi_ex = project_cosine(&samp(&exf), &grid, m).unwrap();
    let c1 = project_cosine(&samp(&|x| e1.d(0, x)), &grid, 64).unwrap();
    let c2 = project_cosine(&samp(&|x| e2.d(0, x)), &grid, 64).unwrap();
    let prof = |c: &CosineSeries, f: &dyn Fn(f64) -> f64| -> Vec<Vec<f64>> {
        c.coeffs.iter().map(|ck| bg.x.iter().map(|x| ck * f(*x)).collect()).collect()
    };
    Manufactured {
        psi_modes: prof(&c1, &|x: f64| x.sin()),
        dpsi_modes: prof(&c1, &|x: f64| x.cos()),
        hat_modes: prof(&c2, &|x: f64| (om * x).cos()),
        dhat_modes: prof(&c2, &|x: f64| -om * (om * x).sin()),
        problem: p,
    }
}

/// Modal discrete-H1 error of a solution against the exact profiles, counting the truncated tail.
pub fn manufactured_error(mf: &Manufactured, sol: &LinearSolution) -> f64 {
    let n1 = mf.problem.n1();
    let len = mf.problem.length;
    let h = mf.problem.h();
    let w = epnozzle::quad::x1_weights(n1, len);
    let mut e = 0.0;
    for (num, exact, dexact) in
        [(&sol.psi, &mf.psi_modes, &mf.dpsi_modes), (&sol.psi_hat, &mf.hat_modes, &mf.dhat_modes)]
    {
        for k in 0..exact.len() {
            let lam = (k as f64 * PI).powi(2);
            let zero = vec![0.0; n1];
            let v = if k < num.n_modes() { &num.modes[k] } else { &zero };
            let dv = epnozzle::quad::d1(v, h);
            for i in 0..n1 {
                let d = v[i] - exact[k][i];
                let dd = dv[i] - dexact[k][i];
                e += w[i] * ((1.0 + lam) * d * d + dd * dd);
            }
        }
    }
    e.sqrt()
}

/// Random band-limited frozen-coefficient problem with smooth x1 profiles.
pub fn random_problem(bg: &Background1D, m: usize, seed: u64, amp: f64) -> LinearProblem {
    let grid = X2Grid::new(257);
    let mut p = LinearProblem::new(bg, grid.clone(), m).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = bg.length;
    let n1 = bg.n1();
    let (c12a, c12b, c22a, c22b) = (
        rng.gen_range(-0.05..0.05),
        rng.gen_range(-0.05..0.05),
        rng.gen_range(-0.1..0.1),
        rng.gen_range(-0.1..0.1),
    );
    for i in 0..n1 {
        let x1 = bg.x[i] / len;
        for (j, &x2) in grid.x.iter().enumerate() {
            p.a12[i][j] = (c12a * (PI * x2).sin() + c12b * (2.0 * PI * x2).sin()) * (1.0 + x1);
            p.a22[i][j] = p.bar.a22[i] * (1.0 + c22a * (PI * x2).cos() + c22b * x1 * (2.0 * PI * x2).cos());
        }
    }
    let profile = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let c: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        (0..n1)
            .map(|i| {
                let x = bg.x[i] / len;
                amp * c.iter().enumerate().map(|(j, cj)| cj * (j as f64 * PI * x).cos()).sum::<f64>()
            })
            .collect()
    };
    for k in 0..=4.min(m) {
        p.f1.modes[k] = profile(&mut rng);
        p.f2.modes[k] = profile(&mut rng);
    }
    for k in 0..=4.min(m) {
        p.g1.coeffs[k] = amp * rng.gen_range(-1.0..1.0);
        p.g2.coeffs[k] = amp * rng.gen_range(-1.0..1.0);
        p.psi_ex.coeffs[k] = amp * rng.gen_range(-1.0..1.0);
    }
    p
}

/// Same problem with all data scaled.
pub fn scaled(p: &LinearProblem, s: f64) -> LinearProblem {
    let mut q = p.clone();
    for f in [&mut q.f1, &mut q.f2] {
        for v in f.modes.iter_mut().flatten() {
            *v *= s;
        }
    }
    for c in [&mut q.g1, &mut q.g2, &mut q.psi_ex, &mut q.inlet] {
        for v in c.coeffs.iter_mut() {
            *v *= s;
        }
    }
    q
}

pub fn weight_for(gp: &GasParams, bg: &Background1D) -> WeightFunction {
    let cfg = MultiplierConfig::default();
    let win = coefficient_window(gp, &cfg, bg.length).unwrap();
    let rc = riccati_constants(&win, &cfg);
    build_weight(&rc, bg.length, &bg.x).unwrap()
}

pub fn background(gp: &GasParams, len: f64, n1: usize) -> Background1D {
    integrate_background(gp, len, n1).unwrap()
}

/// Band-limited boundary data (modes <= 4) with coefficients of size `amp`.
pub fn small_data(m: usize, amp: f64, seed: u64, rotational: bool) -> epnozzle::nonlinear::BoundaryData {
    use epnozzle::nonlinear::{BoundaryData, IonPerturbation};
    use epnozzle::{CosineSeries, SineSeries};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let series = |rng: &mut ChaCha8Rng| {
        let mut c = vec![0.0; m + 1];
        for v in c.iter_mut().take(5) {
            *v = amp * rng.gen_range(-1.0..1.0);
        }
        CosineSeries::new(c)
    };
    let mut d = BoundaryData::zero(m);
    d.u_en = series(&mut rng);
    d.e_en = series(&mut rng);
    d.phi_ex = series(&mut rng);
    d.db = IonPerturbation { x1_modes: vec![1.0, 0.5], x2: series(&mut rng) };
    if rotational {
        d.s_en = series(&mut rng);
        let mut v = vec![0.0; 2 * m];
        for k in [2usize, 4, 6, 8] {
            v[k - 1] = amp * rng.gen_range(-1.0..1.0);
        }
        d.v_en = SineSeries::new(v);
    }
    d
}
