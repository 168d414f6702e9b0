//! Weight function for the weighted energy estimate: Riccati constants, the
//! closed-form W, critical nozzle lengths and pointwise condition checks.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::background::{integrate_background, Background1D, CriticalAbscissas};
use crate::error::{Error, Result};
use crate::linearize::BarCoeffs;
use crate::model::GasParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplierConfig {
    /// Cauchy-Schwarz constant paired with delta psi_x2^2.
    pub c_star: f64,
    /// Morrey constant in the a1 correction.
    pub c_flat: f64,
    pub lambda1_star: f64,
    pub delta1: f64,
    /// Length margin; None picks 0.1 min(T_max, T*).
    pub eps0: Option<f64>,
    pub n_grid: usize,
}

impl Default for MultiplierConfig {
    fn default() -> Self {
        MultiplierConfig {
            c_star: 10.0,
            c_flat: 10.0,
            lambda1_star: PI / 8.0,
            delta1: 1e-2,
            eps0: None,
            n_grid: 513,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscriminantCase {
    PositiveDiscriminant,
    NonPositiveDiscriminant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiConstants {
    pub a0: f64,
    /// The corrected a1 used in the Riccati equation (min of a11, a12 minus C_flat delta1).
    pub a1: f64,
    pub a2: f64,
    pub a11: f64,
    pub a12: f64,
    pub delta_used: f64,
    pub c_star: f64,
    pub c_flat: f64,
    pub kappa1: f64,
    pub mu1: f64,
    pub lambda1_star: f64,
    /// T_max - eps0 (or +inf for the constant orbit).
    pub t_bound: f64,
    pub case: DiscriminantCase,
}

impl RiccatiConstants {
    /// Constants given directly, for experiments with the closed forms.
    pub fn from_values(a0: f64, a1: f64, a2: f64, lambda1_star: f64, t_bound: f64) -> Self {
        RiccatiConstants {
            a0,
            a1,
            a2,
            a11: a1,
            a12: a1,
            delta_used: 0.0,
            c_star: 0.0,
            c_flat: 0.0,
            kappa1: f64::NAN,
            mu1: f64::NAN,
            lambda1_star,
            t_bound,
            case: classify(a0, a1, a2),
        }
    }

    pub fn discriminant(&self) -> f64 {
        self.a0 * self.a2 - self.a1 * self.a1
    }

    /// a_* = (a1^2 - a0 a2)/a2 (Case 2 threshold for lambda).
    pub fn a_star(&self) -> f64 {
        -self.discriminant() / self.a2
    }

    pub fn nu(&self, lambda: f64) -> f64 {
        ((self.discriminant() / self.a2 + lambda) / self.a2).sqrt()
    }

    pub fn beta(&self, lambda: f64) -> f64 {
        (lambda - self.a_star()) / self.a2
    }
}

fn classify(a0: f64, a1: f64, a2: f64) -> DiscriminantCase {
    if a0 * a2 - a1 * a1 > 0.0 {
        DiscriminantCase::PositiveDiscriminant
    } else {
        DiscriminantCase::NonPositiveDiscriminant
    }
}

/// Default margin 0.1 min(T_max, T*), or None for the constant orbit.
pub fn default_eps0(ab: &CriticalAbscissas) -> Option<f64> {
    if !ab.t_max.is_finite() {
        return None;
    }
    Some(0.1 * ab.t_star.map_or(ab.t_max, |t| t.min(ab.t_max)))
}

/// -d1 a22 / (2 a22) on the background, from u' analytically.
pub fn a22_log_slope(gp: &GasParams, u: f64, du: f64) -> f64 {
    let g = gp.gamma();
    let x = u.powf(g + 1.0) / (g * gp.m0().powf(g - 1.0));
    let dx = (g + 1.0) * x * du / u;
    dx / (2.0 * (x - 1.0))
}

/// d1 a22 on the background.
pub fn a22_slope(gp: &GasParams, u: f64, du: f64) -> f64 {
    let g = gp.gamma();
    let x = u.powf(g + 1.0) / (g * gp.m0().powf(g - 1.0));
    let dx = (g + 1.0) * x * du / u;
    -dx / ((x - 1.0) * (x - 1.0))
}

/// Riccati constants from the coefficients on the grid of `bg`, which should span [0, t_bound].
pub fn riccati_constants(bg: &Background1D, cfg: &MultiplierConfig) -> RiccatiConstants {
    let gp = &bg.gp;
    let bar = BarCoeffs::from_background(bg);
    let d = cfg.delta1;
    let mu1 = bar.mu1;
    let kappa1 = bar.a22.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut h2max: f64 = 0.0;
    let mut a2: f64 = 0.0;
    let mut a11 = f64::INFINITY;
    let mut a12 = f64::INFINITY;
    for i in 0..bg.n1() {
        h2max = h2max.max(2.0 * bar.h2[i] * bar.h2[i] / mu1);
        a2 = a2.max(2.0 * (bar.b1[i] * bar.b1[i] + bar.b2[i] * bar.b2[i] / mu1 + d));
        a11 = a11.min(bar.a1[i]);
        let p = bg.point(i);
        a12 = a12.min(a22_log_slope(gp, p.u, p.du(gp)));
    }
    let a0 = 2.0 * cfg.c_star * d / kappa1 + h2max;
    let a1 = a11.min(a12) - cfg.c_flat * d;
    let eps0 = cfg.eps0.or(default_eps0(&bg.abscissas));
    let t_bound = match eps0 {
        Some(e) if bg.abscissas.t_max.is_finite() => bg.abscissas.t_max - e,
        _ => f64::INFINITY,
    };
    RiccatiConstants {
        a0,
        a1,
        a2,
        a11,
        a12,
        delta_used: d,
        c_star: cfg.c_star,
        c_flat: cfg.c_flat,
        kappa1,
        mu1,
        lambda1_star: cfg.lambda1_star,
        t_bound,
        case: classify(a0, a1, a2),
    }
}

/// Background sampled on [0, T_max - eps0] (or [0, fallback] for the constant orbit).
pub fn coefficient_window(gp: &GasParams, cfg: &MultiplierConfig, fallback: f64) -> Result<Background1D> {
    let ab = crate::background::critical_abscissas(gp)?;
    let len = match cfg.eps0.or(default_eps0(&ab)) {
        Some(e) if ab.t_max.is_finite() => ab.t_max - e,
        _ => fallback,
    };
    integrate_background(gp, len, cfg.n_grid)
}

fn case1_bound(rc: &RiccatiConstants, a1_abs: f64, lambda: f64, sign: f64) -> f64 {
    let nu = rc.nu(lambda);
    let k = rc.a2 * nu;
    (FRAC_PI_2 - lambda + sign * (a1_abs / k).atan()) / k
}

/// Golden-section supremum of f over (lo, hi], seeded by a coarse scan.
fn sup_on(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let n = 200;
    let mut best = (hi, f(hi));
    for i in 1..=n {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    let step = (hi - lo) / n as f64;
    let (mut a, mut b) = ((best.0 - step).max(lo + 1e-300), (best.0 + step).min(hi));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > 1e-8 * b.abs().max(1e-300) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let v = f(x);
    if v > best.1 {
        (x, v)
    } else {
        best
    }
}

const LAMBDA_FLOOR: f64 = 1e-12;

/// Riccati-admissible length ignoring the t_bound clamp.
pub fn riccati_length(rc: &RiccatiConstants) -> f64 {
    match rc.case {
        DiscriminantCase::PositiveDiscriminant => {
            sup_on(|l| case1_bound(rc, rc.a1.abs(), l, -1.0), LAMBDA_FLOOR, rc.lambda1_star).1
        }
        DiscriminantCase::NonPositiveDiscriminant => {
            if rc.a1 < 0.0 {
                -1.0 / rc.a1
            } else {
                f64::INFINITY
            }
        }
    }
}

pub fn critical_length(rc: &RiccatiConstants, t_bound: f64) -> f64 {
    riccati_length(rc).min(t_bound)
}

/// W(x; lambda) in Case 1 with phase pi/2 - lambda.
pub fn case1_weight_at(rc: &RiccatiConstants, lambda: f64, x: f64) -> f64 {
    let nu = rc.nu(lambda);
    nu * (FRAC_PI_2 - lambda - rc.a2 * nu * x).tan() + rc.a1 / rc.a2
}

/// W(x; lambda) in Case 2 with phase beta(lambda).
pub fn case2_weight_at(rc: &RiccatiConstants, lambda: f64, x: f64) -> f64 {
    let b = rc.beta(lambda);
    let sb = b.sqrt();
    sb / (b + rc.a2 * sb * x).tan() + rc.a1 / rc.a2
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction {
    pub lambda0: f64,
    pub constants: RiccatiConstants,
    /// nu(lambda0) in Case 1, sqrt(beta(lambda0)) in Case 2.
    pub rate: f64,
    /// Phase constant of the tangent/cotangent.
    pub phase: f64,
    pub length: f64,
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub dw: Vec<f64>,
}

impl WeightFunction {
    pub fn eval(&self, x: f64) -> f64 {
        let rc = &self.constants;
        match rc.case {
            DiscriminantCase::PositiveDiscriminant => {
                self.rate * (self.phase - rc.a2 * self.rate * x).tan() + rc.a1 / rc.a2
            }
            DiscriminantCase::NonPositiveDiscriminant => {
                self.rate / (self.phase + rc.a2 * self.rate * x).tan() + rc.a1 / rc.a2
            }
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let rc = &self.constants;
        let k = rc.a2 * self.rate * self.rate;
        match rc.case {
            DiscriminantCase::PositiveDiscriminant => {
                let c = (self.phase - rc.a2 * self.rate * x).cos();
                -k / (c * c)
            }
            DiscriminantCase::NonPositiveDiscriminant => {
                let s = (self.phase + rc.a2 * self.rate * x).sin();
                -k / (s * s)
            }
        }
    }

    /// -W' - a2 W^2 + 2 a1 W - a0 - lambda0.
    pub fn riccati_residual(&self, x: f64) -> f64 {
        let rc = &self.constants;
        let w = self.eval(x);
        -self.deriv(x) - rc.a2 * w * w + 2.0 * rc.a1 * w - rc.a0 - self.lambda0
    }

    pub fn min(&self) -> f64 {
        self.w.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.w.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn case1_admissible(rc: &RiccatiConstants, lambda: f64, len: f64) -> bool {
    case1_bound(rc, rc.a1.abs(), lambda, -1.0) >= len
}

fn case2_admissible(rc: &RiccatiConstants, lambda: f64, len: f64) -> bool {
    let b = rc.beta(lambda);
    if !(b > 0.0) {
        return false;
    }
    b + rc.a2 * b.sqrt() * len < PI && case2_weight_at(rc, lambda, len) > 0.0
}

/// Largest admissible lambda found by bisection between a known-good and a known-bad value,
/// backed off slightly towards the good side.
fn edge(ok: impl Fn(f64) -> bool, mut good: f64, mut bad: f64) -> f64 {
    let lo = good;
    for _ in 0..200 {
        if (bad - good).abs() <= 1e-8 * bad.abs().max(1e-300) {
            break;
        }
        let mid = 0.5 * (good + bad);
        if ok(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    lo + (1.0 - 1e-3) * (good - lo)
}

pub fn build_weight(rc: &RiccatiConstants, length: f64, grid: &[f64]) -> Result<WeightFunction> {
    let critical = critical_length(rc, rc.t_bound);
    let exceed = || Error::LengthExceedsCritical { length, critical };
    if !(length > 0.0) || length >= rc.t_bound {
        return Err(exceed());
    }
    let (lambda0, rate, phase) = match rc.case {
        DiscriminantCase::PositiveDiscriminant => {
            let (arg, _) = sup_on(|l| case1_bound(rc, rc.a1.abs(), l, -1.0), LAMBDA_FLOOR, rc.lambda1_star);
            if !case1_admissible(rc, arg, length) {
                return Err(exceed());
            }
            let lam = if case1_admissible(rc, rc.lambda1_star, length) {
                rc.lambda1_star
            } else {
                edge(|l| case1_admissible(rc, l, length), arg, rc.lambda1_star)
            };
            (lam, rc.nu(lam), FRAC_PI_2 - lam)
        }
        DiscriminantCase::NonPositiveDiscriminant => {
            let a_star = rc.a_star();
            let scale = rc.a2.max(a_star).max(1e-12);
            let lo = a_star + 1e-10 * scale;
            if !case2_admissible(rc, lo, length) {
                return Err(exceed());
            }
            let mut hi = a_star + scale;
            let mut tries = 0;
            while case2_admissible(rc, hi, length) && tries < 200 {
                hi = a_star + 2.0 * (hi - a_star);
                tries += 1;
            }
            let lam = edge(|l| case2_admissible(rc, l, length), lo, hi);
            let b = rc.beta(lam);
            (lam, b.sqrt(), b)
        }
    };
    let mut wf = WeightFunction {
        lambda0,
        constants: *rc,
        rate,
        phase,
        length,
        x: grid.to_vec(),
        w: Vec::new(),
        dw: Vec::new(),
    };
    wf.w = grid.iter().map(|x| wf.eval(*x)).collect();
    wf.dw = grid.iter().map(|x| wf.deriv(*x)).collect();
    if wf.min() <= 0.0 {
        return Err(exceed());
    }
    Ok(wf)
}

/// Frozen second-order coefficient samples on the (x1, x2) grid, row-major in x1.
#[derive(Debug, Clone)]
pub struct TildeSamples {
    pub a22: Vec<Vec<f64>>,
    pub d1_a22: Vec<Vec<f64>>,
    pub d2_a12: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    pub lambda0: f64,
    pub min_w: f64,
    /// min (q1 - q3).
    pub min_q1_minus_q3: f64,
    /// min (q2 - 2 C_* delta)/a22.
    pub min_q2_scaled: f64,
    pub pass: bool,
}

/// (q1 - q3, (q2 - 2 C_* delta)/a22) at node i, column j.
#[allow(clippy::too_many_arguments)]
fn condition_terms(
    w: &WeightFunction,
    bg: &Background1D,
    bar: &BarCoeffs,
    tilde: Option<&TildeSamples>,
    delta: f64,
    c_star: f64,
    i: usize,
    j: usize,
) -> (f64, f64) {
    let gp = &bg.gp;
    let mu1 = w.constants.mu1.min(bar.mu1);
    let p = bg.point(i);
    let (wi, dwi) = (w.w[i], w.dw[i]);
    let q3 = 2.0 * ((bar.b1[i].powi(2) + bar.b2[i].powi(2) / mu1 + delta) * wi * wi + bar.h2[i].powi(2) / mu1);
    let (a22, d1a22, d2a12) = match tilde {
        Some(t) => (t.a22[i][j], t.d1_a22[i][j], t.d2_a12[i][j]),
        None => (bar.a22[i], a22_slope(gp, p.u, p.du(gp)), 0.0),
    };
    let q1 = -dwi + 2.0 * (bar.a1[i] - d2a12) * wi;
    let q2 = -a22 * (dwi + d1a22 / a22 * wi);
    (q1 - q3, (q2 - 2.0 * c_star * delta) / a22)
}

/// Evaluates the three pointwise conditions on the weight's grid. `tilde = None` means the
/// unperturbed coefficients.
pub fn verify_pointwise_conditions(
    w: &WeightFunction,
    bg: &Background1D,
    tilde: Option<&TildeSamples>,
    delta: f64,
    c_star: f64,
) -> ConditionReport {
    let bar = BarCoeffs::from_background(bg);
    let mut m13 = f64::INFINITY;
    let mut m2 = f64::INFINITY;
    for i in 0..w.x.len() {
        let cols = tilde.map_or(1, |t| t.a22[i].len());
        for j in 0..cols {
            let (a, b) = condition_terms(w, bg, &bar, tilde, delta, c_star, i, j);
            m13 = m13.min(a);
            m2 = m2.min(b);
        }
    }
    ConditionReport {
        lambda0: w.lambda0,
        min_w: w.min(),
        min_q1_minus_q3: m13,
        min_q2_scaled: m2,
        pass: w.min() > 0.0 && m13 >= w.lambda0 * (1.0 - 1e-9) && m2 >= w.lambda0 * (1.0 - 1e-9),
    }
}

/// Rows (x1, W, q1 - q3, (q2 - 2 C_* delta)/a22) with the unperturbed coefficients.
pub fn condition_profile(w: &WeightFunction, bg: &Background1D, delta: f64, c_star: f64) -> Vec<[f64; 4]> {
    let bar = BarCoeffs::from_background(bg);
    (0..w.x.len())
        .map(|i| {
            let (a, b) = condition_terms(w, bg, &bar, None, delta, c_star, i, 0);
            [w.x[i], w.w[i], a, b]
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceleratingReport {
    /// T* - eps0: the window of the starred constants.
    pub window: f64,
    pub a0: f64,
    /// a1*/2 (positive for accelerating flow).
    pub a1: f64,
    pub a2: f64,
    pub case: DiscriminantCase,
    /// Riccati length with the positive a1 entering through +arctan.
    pub riccati: f64,
    /// min(T* - eps0, riccati) in Case 1, T_max - eps0 otherwise.
    pub bound_t_star: f64,
    /// min(T_max - eps0, riccati) in Case 1, T_max - eps0 otherwise.
    pub bound_t_max: f64,
    /// The generic critical length with the same configuration.
    pub generic: f64,
}

/// Relaxed admissible length for accelerating flow (E0 > 0).
pub fn accelerating_report(gp: &GasParams, cfg: &MultiplierConfig) -> Result<AcceleratingReport> {
    let ab = crate::background::critical_abscissas(gp)?;
    let t_star = ab
        .t_star
        .ok_or_else(|| Error::NotApplicable("accelerating bound needs E0 > 0".into()))?;
    let eps0 = cfg.eps0.or(default_eps0(&ab)).unwrap_or(0.1 * t_star);
    let generic_bg = coefficient_window(gp, cfg, t_star)?;
    let generic_rc = riccati_constants(&generic_bg, cfg);
    let generic = critical_length(&generic_rc, generic_rc.t_bound);
    let window = t_star - eps0;
    let bg = integrate_background(gp, window, cfg.n_grid)?;
    let star = riccati_constants(&bg, &MultiplierConfig { c_flat: 0.0, ..*cfg });
    let a1 = 0.5 * star.a11.min(star.a12);
    let rc = RiccatiConstants { a1, case: classify(star.a0, a1, star.a2), ..star };
    let t_max_bound = ab.t_max - eps0;
    let (riccati, bound_t_star, bound_t_max) = match rc.case {
        DiscriminantCase::PositiveDiscriminant => {
            let r = sup_on(|l| case1_bound(&rc, a1, l, 1.0), LAMBDA_FLOOR, rc.lambda1_star).1;
            (r, r.min(window), r.min(t_max_bound))
        }
        DiscriminantCase::NonPositiveDiscriminant => (f64::INFINITY, t_max_bound, t_max_bound),
    };
    Ok(AcceleratingReport {
        window,
        a0: rc.a0,
        a1,
        a2: rc.a2,
        case: rc.case,
        riccati,
        bound_t_star,
        bound_t_max,
        generic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case2_length_rules() {
        let rc = RiccatiConstants::from_values(1.0, 2.0, 1.0, PI / 8.0, 5.0);
        assert_eq!(rc.case, DiscriminantCase::NonPositiveDiscriminant);
        assert_eq!(critical_length(&rc, 5.0), 5.0);
        let rc = RiccatiConstants::from_values(1.0, -2.0, 1.0, PI / 8.0, 5.0);
        assert!((critical_length(&rc, 100.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn case1_weight_blows_up_at_small_lambda() {
        let rc = RiccatiConstants::from_values(9.4, -0.1, 0.35, PI / 8.0, f64::INFINITY);
        assert!(case1_weight_at(&rc, 1e-4, 0.0) > case1_weight_at(&rc, 1e-2, 0.0));
    }
}
