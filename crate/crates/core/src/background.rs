//! One-dimensional supersonic background: phase-plane classification, critical
//! abscissas and sampled profiles (rho, u, E, phi0, Phi0).

use crate::error::{Error, Result};
use crate::model::{self, GasParams};
use crate::quad::gauss_legendre01;

/// Orbits within this relative distance of the sonic density use the desingularized field.
pub const SEPARATRIX_BAND: f64 = 1e-3;
pub const RTOL: f64 = 1e-10;
const MAX_STEPS: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitKind {
    Periodic,
    Separatrix,
    SonicBlowup,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitClass {
    pub kind: OrbitKind,
    /// d = E0^2/2 - H(rho0).
    pub discriminant: f64,
    pub tolerance: f64,
}

/// Antiderivative of (t - b0)/t (gamma S0 t^{gamma-1} - J0^2/t^2).
fn hamiltonian_primitive(gp: &GasParams, t: f64) -> f64 {
    let (g, s0, b0, j2) = (gp.gamma(), gp.s0(), gp.b0(), gp.j0() * gp.j0());
    s0 * t.powf(g) + j2 / t - g * s0 * b0 * t.powf(g - 1.0) / (g - 1.0) - 0.5 * b0 * j2 / (t * t)
}

pub fn hamiltonian(gp: &GasParams, rho: f64) -> f64 {
    hamiltonian_primitive(gp, rho) - hamiltonian_primitive(gp, gp.rho_s())
}

pub fn hamiltonian_rho(gp: &GasParams, rho: f64) -> f64 {
    (rho - gp.b0()) / rho * gp.sonic_gap(rho)
}

pub fn hamiltonian_rhorho(gp: &GasParams, rho: f64) -> f64 {
    let (g, s0, b0) = (gp.gamma(), gp.s0(), gp.b0());
    let rs = gp.rho_s();
    g * s0 / rho.powi(3)
        * ((rho.powf(g + 1.0) - rs.powf(g + 1.0)) * (1.0 - 3.0 * (rho - b0) / rho)
            + (g + 1.0) * (rho - b0) * rho.powf(g))
}

struct SonicQuadrature {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl SonicQuadrature {
    fn new() -> Self {
        let (x, w) = gauss_legendre01(20);
        SonicQuadrature { x, w }
    }

    /// H(rho)/(rho - rho_s)^2 as the double integral of t1 H_rhorho.
    fn curvature(&self, gp: &GasParams, rho: f64) -> f64 {
        let rs = gp.rho_s();
        let mut acc = 0.0;
        for (t1, w1) in self.x.iter().zip(&self.w) {
            for (t2, w2) in self.x.iter().zip(&self.w) {
                let s = t1 * t2;
                acc += w1 * w2 * t1 * hamiltonian_rhorho(gp, s * rho + (1.0 - s) * rs);
            }
        }
        acc
    }

    /// (rho^{gamma+1} - rho_s^{gamma+1}) / ((gamma+1)(rho - rho_s)).
    fn mean_power(&self, gp: &GasParams, rho: f64) -> f64 {
        let rs = gp.rho_s();
        self.x
            .iter()
            .zip(&self.w)
            .map(|(t, w)| w * (t * rho + (1.0 - t) * rs).powf(gp.gamma()))
            .sum()
    }
}

/// F(rho): the desingularized separatrix speed of rho, smooth through rho_s.
pub fn separatrix_field(gp: &GasParams, rho: f64) -> f64 {
    let q = SonicQuadrature::new();
    separatrix_field_with(gp, &q, rho)
}

fn separatrix_field_with(gp: &GasParams, q: &SonicQuadrature, rho: f64) -> f64 {
    let g = gp.gamma();
    rho.powi(3) * (2.0 * q.curvature(gp, rho)).max(0.0).sqrt() / (g * (g + 1.0) * gp.s0() * q.mean_power(gp, rho))
}

/// sqrt(2 H(rho)) computed without cancellation near rho_s.
pub fn separatrix_field_strength(gp: &GasParams, rho: f64) -> f64 {
    let q = SonicQuadrature::new();
    (rho - gp.rho_s()).abs() * (2.0 * q.curvature(gp, rho)).max(0.0).sqrt()
}

pub fn classify_orbit(gp: &GasParams) -> OrbitClass {
    let h0 = hamiltonian(gp, gp.rho0());
    let e0 = gp.e0();
    let d = 0.5 * e0 * e0 - h0;
    let tol = 1e-10 * 1f64.max(e0 * e0).max(h0.abs());
    let kind = if d.abs() <= tol {
        OrbitKind::Separatrix
    } else if d < 0.0 {
        OrbitKind::Periodic
    } else {
        OrbitKind::SonicBlowup
    };
    OrbitClass { kind, discriminant: d, tolerance: tol }
}

pub fn is_equilibrium(gp: &GasParams) -> bool {
    gp.e0() == 0.0 && (gp.rho0() - gp.b0()).abs() <= 1e-14 * gp.rho_s()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalAbscissas {
    pub t_min: f64,
    pub t_max: f64,
    pub t_star: Option<f64>,
}

/// State vector (rho, E, phi0, Phi0).
pub type State = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    Full,
    /// On the separatrix near rho_s: rho' = -sigma F(rho), E = sigma sqrt(2H).
    Reduced(f64),
}

struct Orbit<'a> {
    gp: &'a GasParams,
    kind: OrbitKind,
    dir: f64,
    rs: f64,
    quad: SonicQuadrature,
    h_min: f64,
}

enum Event {
    EZero { x: f64, rho: f64 },
    Sonic { x: f64 },
}

impl<'a> Orbit<'a> {
    fn new(gp: &'a GasParams, dir: f64, scale: f64) -> Self {
        Orbit {
            gp,
            kind: classify_orbit(gp).kind,
            dir,
            rs: gp.rho_s(),
            quad: SonicQuadrature::new(),
            h_min: 1e-14 * scale.max(1.0),
        }
    }

    fn initial(&self) -> State {
        [self.gp.rho0(), self.gp.e0(), 0.0, self.gp.b_inlet()]
    }

    fn mode_for(&self, y: &State, prev: Mode) -> Mode {
        if self.kind == OrbitKind::Separatrix && (y[0] - self.rs).abs() < SEPARATRIX_BAND * self.rs {
            match prev {
                Mode::Reduced(s) => Mode::Reduced(s),
                Mode::Full => Mode::Reduced(if y[1] >= 0.0 { 1.0 } else { -1.0 }),
            }
        } else {
            Mode::Full
        }
    }

    fn rhs(&self, y: &State, mode: Mode) -> State {
        let gp = self.gp;
        let rho = y[0];
        let drho = match mode {
            Mode::Full => {
                if rho >= self.rs * (1.0 - 1e-13) || rho <= 0.0 {
                    f64::NAN
                } else {
                    y[1] * rho / gp.sonic_gap(rho)
                }
            }
            Mode::Reduced(sigma) => -sigma * separatrix_field_with(gp, &self.quad, rho),
        };
        let d = self.dir;
        [d * drho, d * (rho - gp.b0()), d * gp.j0() / rho, d * y[1]]
    }

    /// Physical rho'(x) (forward direction) at a state.
    fn drho(&self, y: &State, mode: Mode) -> f64 {
        self.rhs(y, mode)[0] * self.dir
    }

    fn rk4(&self, y: &State, h: f64, mode: Mode) -> State {
        let k1 = self.rhs(y, mode);
        let k2 = self.rhs(&axpy(y, 0.5 * h, &k1), mode);
        let k3 = self.rhs(&axpy(y, 0.5 * h, &k2), mode);
        let k4 = self.rhs(&axpy(y, h, &k3), mode);
        let mut out = *y;
        for i in 0..4 {
            out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        self.project(out, mode)
    }

    fn project(&self, mut y: State, mode: Mode) -> State {
        if let Mode::Reduced(sigma) = mode {
            y[1] = sigma * (self.rs - y[0]) * (2.0 * self.quad.curvature(self.gp, y[0])).max(0.0).sqrt();
        }
        y
    }

    /// One accepted step-doubling RK4 step of size at most `h`; returns (state, used, next).
    fn advance(&self, y: &State, x: f64, h: f64, mode: Mode) -> Result<(State, f64, f64)> {
        let mut h = h;
        loop {
            if h < self.h_min {
                return Err(Error::StepFailure(self.dir * x));
            }
            let full = self.rk4(y, h, mode);
            let half = self.rk4(y, 0.5 * h, mode);
            let two = self.rk4(&half, 0.5 * h, mode);
            let mut err: f64 = 0.0;
            let scale = [self.rs, 1.0, 1.0, 1.0];
            for i in 0..4 {
                let e = (two[i] - full[i]).abs() / 15.0 / (RTOL * (two[i].abs() + scale[i]));
                err = if e.is_finite() { err.max(e) } else { f64::INFINITY };
            }
            if err <= 1.0 {
                let mut out = two;
                for i in 0..4 {
                    out[i] += (two[i] - full[i]) / 15.0;
                }
                let out = self.project(out, mode);
                if out.iter().all(|v| v.is_finite()) {
                    let grow = if err == 0.0 { 4.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 4.0) };
                    return Ok((out, h, h * grow));
                }
            }
            let shrink = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.5) } else { 0.25 };
            h *= shrink;
        }
    }

    /// Integrate to coordinate `x_end` (in the scan direction), landing exactly.
    fn integrate_to(&self, y0: State, x_end: f64, h0: f64) -> Result<State> {
        let mut y = y0;
        let mut x = 0.0;
        let mut h = h0;
        let mut mode = self.mode_for(&y, Mode::Full);
        let mut steps = 0;
        while x < x_end {
            mode = self.mode_for(&y, mode);
            let step = h.min(x_end - x);
            let (yn, used, next) = self.advance(&y, x, step, mode)?;
            y = yn;
            x = if used == x_end - x { x_end } else { x + used };
            h = next;
            steps += 1;
            if steps > MAX_STEPS {
                return Err(Error::StepFailure(self.dir * x));
            }
        }
        Ok(y)
    }

    fn bisect<F: Fn(&State) -> f64>(&self, y: &State, h: f64, mode: Mode, g: F, tol: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, h);
        let g0 = g(y);
        for _ in 0..200 {
            if hi - lo <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let gm = g(&self.rk4(y, mid, mode));
            if gm.signum() == g0.signum() && gm != 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Arrival at rho_s on a blow-up orbit: integrate x, E, phi0, Phi0 as functions of rho.
    fn arrive_by_density(&self, y: &State, x: f64, levels: &[f64]) -> (f64, Vec<(f64, f64, f64)>) {
        let gp = self.gp;
        let g = gp.gamma();
        let rs = self.rs;
        let f = |rho: f64, z: &[f64; 4]| -> [f64; 4] {
            // z = (x, E, phi0, Phi0); dx/drho = 1/rho' in scan coordinates.
            let inv = self.dir * g * gp.s0() * (rho.powf(g + 1.0) - rs.powf(g + 1.0)) / (z[1] * rho.powi(3));
            [inv, inv * self.dir * (rho - gp.b0()), inv * self.dir * gp.j0() / rho, inv * self.dir * z[1]]
        };
        let mut marks: Vec<f64> = levels.iter().copied().filter(|r| *r > y[0] && *r <= rs).collect();
        marks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        marks.push(rs);
        let mut z = [x, y[1], y[2], y[3]];
        let mut rho = y[0];
        let mut out = Vec::new();
        for target in marks {
            let n = 64;
            let dr = (target - rho) / n as f64;
            for _ in 0..n {
                let k1 = f(rho, &z);
                let k2 = f(rho + 0.5 * dr, &axpy(&z, 0.5 * dr, &k1));
                let k3 = f(rho + 0.5 * dr, &axpy(&z, 0.5 * dr, &k2));
                let k4 = f(rho + dr, &axpy(&z, dr, &k3));
                for i in 0..4 {
                    z[i] += dr / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
                rho += dr;
            }
            rho = target;
            let drho = z[1] * rho / gp.sonic_gap(rho);
            out.push((z[0], rho, drho));
        }
        (z[0], out)
    }

    /// Runs forward until `n_events` E-zero events or the sonic arrival.
    fn scan(&self, n_events: usize, levels: &[f64]) -> Result<(Vec<Event>, Vec<(f64, f64, f64)>)> {
        let mut y = self.initial();
        let mut x = 0.0;
        let scale = self.rs / (self.gp.j0() / self.rs).max(1e-300);
        let mut h = 1e-3 * scale.min(1.0);
        let mut mode = self.mode_for(&y, Mode::Full);
        let mut events = Vec::new();
        let tol = 1e-10;
        for _ in 0..MAX_STEPS {
            mode = self.mode_for(&y, mode);
            let approaching = self.dir * self.drho(&y, mode) > 0.0;
            if self.kind == OrbitKind::SonicBlowup
                && approaching
                && self.rs - y[0] < SEPARATRIX_BAND * self.rs
                && mode == Mode::Full
            {
                let (xs, samples) = self.arrive_by_density(&y, x, levels);
                events.push(Event::Sonic { x: xs });
                return Ok((events, samples));
            }
            let (yn, used, next) = self.advance(&y, x, h, mode)?;
            if y[1] * yn[1] < 0.0 && mode == Mode::Full {
                let th = self.bisect(&y, used, mode, |s| s[1], tol * (x.abs() + 1.0));
                let ye = self.rk4(&y, th, mode);
                events.push(Event::EZero { x: x + th, rho: ye[0] });
                if events.len() >= n_events {
                    return Ok((events, Vec::new()));
                }
            }
            if let Mode::Reduced(_) = mode {
                if approaching && yn[0] >= self.rs {
                    let rs = self.rs;
                    let th = self.bisect(&y, used, mode, |s| s[0] - rs, tol * (x.abs() + 1.0));
                    events.push(Event::Sonic { x: x + th });
                    return Ok((events, Vec::new()));
                }
                if y[1] * yn[1] < 0.0 {
                    let th = self.bisect(&y, used, mode, |s| s[1], tol * (x.abs() + 1.0));
                    let ye = self.rk4(&y, th, mode);
                    events.push(Event::EZero { x: x + th, rho: ye[0] });
                    if events.len() >= n_events {
                        return Ok((events, Vec::new()));
                    }
                }
            }
            y = yn;
            x += used;
            h = next;
        }
        Err(Error::NotApplicable("no critical abscissa found within the step budget".into()))
    }
}

fn axpy(y: &State, a: f64, k: &State) -> State {
    [y[0] + a * k[0], y[1] + a * k[1], y[2] + a * k[2], y[3] + a * k[3]]
}

fn first_max_or_sonic(orbit: &Orbit) -> Result<f64> {
    let (events, _) = orbit.scan(3, &[])?;
    for ev in &events {
        match ev {
            Event::Sonic { x } => return Ok(*x),
            Event::EZero { x, rho } if *rho > orbit.gp.b0() => return Ok(*x),
            _ => {}
        }
    }
    Err(Error::NotApplicable("no density maximum located".into()))
}

pub fn critical_abscissas(gp: &GasParams) -> Result<CriticalAbscissas> {
    if is_equilibrium(gp) {
        return Ok(CriticalAbscissas { t_min: f64::NEG_INFINITY, t_max: f64::INFINITY, t_star: None });
    }
    let fwd = Orbit::new(gp, 1.0, 1.0);
    let bwd = Orbit::new(gp, -1.0, 1.0);
    let t_max = first_max_or_sonic(&fwd)?;
    let t_min = -first_max_or_sonic(&bwd)?;
    let t_star = if gp.e0() > 0.0 {
        let (events, _) = fwd.scan(1, &[])?;
        match events.first() {
            Some(Event::EZero { x, .. }) => Some(*x),
            _ => None,
        }
    } else {
        None
    };
    Ok(CriticalAbscissas { t_min, t_max, t_star })
}

/// Period of a non-degenerate periodic orbit: spacing of successive density maxima.
pub fn detect_period(gp: &GasParams) -> Result<f64> {
    if classify_orbit(gp).kind != OrbitKind::Periodic || is_equilibrium(gp) {
        return Err(Error::NotApplicable("period requested for a non-periodic orbit".into()));
    }
    let orbit = Orbit::new(gp, 1.0, 1.0);
    let (events, _) = orbit.scan(4, &[])?;
    let maxima: Vec<f64> = events
        .iter()
        .filter_map(|e| match e {
            Event::EZero { x, rho } if *rho > gp.b0() => Some(*x),
            _ => None,
        })
        .collect();
    if maxima.len() < 2 {
        return Err(Error::NotApplicable("fewer than two maxima located".into()));
    }
    Ok(maxima[1] - maxima[0])
}

/// (rho, E, phi0, Phi0) at abscissa x (either sign).
pub fn state_at(gp: &GasParams, x: f64) -> Result<State> {
    let orbit = Orbit::new(gp, if x >= 0.0 { 1.0 } else { -1.0 }, x.abs());
    if x == 0.0 {
        return Ok(orbit.initial());
    }
    orbit.integrate_to(orbit.initial(), x.abs(), (x.abs() / 4096.0).max(1e-12))
}

/// Densities rho_s (1 - g) for the requested gaps g, with the abscissa and rho' where they
/// are reached on an orbit arriving at rho_s.
pub fn sonic_approach(gp: &GasParams, gaps: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    if classify_orbit(gp).kind != OrbitKind::SonicBlowup {
        return Err(Error::NotApplicable("sonic approach profile needs a blow-up orbit".into()));
    }
    let rs = gp.rho_s();
    let levels: Vec<f64> = gaps.iter().map(|g| rs * (1.0 - g)).collect();
    let orbit = Orbit::new(gp, 1.0, 1.0);
    let (_, mut samples) = orbit.scan(usize::MAX, &levels)?;
    samples.pop();
    Ok(samples)
}

/// Fixed-step classical RK4 (no adaptivity), returning the samples at every step.
pub fn fixed_step_orbit(gp: &GasParams, x_end: f64, n_steps: usize) -> Vec<State> {
    let orbit = Orbit::new(gp, 1.0, x_end);
    let h = x_end / n_steps as f64;
    let mut y = orbit.initial();
    let mut out = vec![y];
    for _ in 0..n_steps {
        y = orbit.rk4(&y, h, Mode::Full);
        out.push(y);
    }
    out
}

/// Background values at one x1 sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BgPoint {
    pub x1: f64,
    pub rho: f64,
    pub u: f64,
    pub e: f64,
    pub phi0: f64,
    pub big_phi0: f64,
    /// rho'(x1).
    pub drho: f64,
}

impl BgPoint {
    /// u' = -J0 rho'/rho^2.
    pub fn du(&self, gp: &GasParams) -> f64 {
        -gp.j0() * self.drho / (self.rho * self.rho)
    }

    /// c^2 on the background, gamma S0 rho^{gamma-1}.
    pub fn c2(&self, gp: &GasParams) -> f64 {
        gp.gamma() * gp.s0() * self.rho.powf(gp.gamma() - 1.0)
    }
}

#[derive(Debug, Clone)]
pub struct Background1D {
    pub gp: GasParams,
    pub length: f64,
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub e: Vec<f64>,
    pub phi0: Vec<f64>,
    pub big_phi0: Vec<f64>,
    pub drho: Vec<f64>,
    pub abscissas: CriticalAbscissas,
    pub orbit: OrbitClass,
    /// min(min rho, rho_s - max rho).
    pub eps0: f64,
    /// min(min X, 1/max X) with X = u^2 - gamma m0^{gamma-1}/u^{gamma-1}.
    pub mu0: f64,
}

impl Background1D {
    pub fn n1(&self) -> usize {
        self.x.len()
    }

    pub fn h(&self) -> f64 {
        self.length / (self.n1() - 1) as f64
    }

    pub fn point(&self, i: usize) -> BgPoint {
        BgPoint {
            x1: self.x[i],
            rho: self.rho[i],
            u: self.u[i],
            e: self.e[i],
            phi0: self.phi0[i],
            big_phi0: self.big_phi0[i],
            drho: self.drho[i],
        }
    }

    /// E^2/2 - H(rho) at every node.
    pub fn energy(&self) -> Vec<f64> {
        self.rho
            .iter()
            .zip(&self.e)
            .map(|(r, e)| 0.5 * e * e - hamiltonian(&self.gp, *r))
            .collect()
    }
}

pub fn integrate_background(gp: &GasParams, length: f64, n1: usize) -> Result<Background1D> {
    if !(length > 0.0) || n1 < 3 {
        return Err(Error::GridMismatch(format!("need L > 0 and n1 >= 3, got L = {length}, n1 = {n1}")));
    }
    let orbit_class = classify_orbit(gp);
    let abscissas = critical_abscissas(gp)?;
    let orbit = Orbit::new(gp, 1.0, length);
    let rs = gp.rho_s();
    let tau_sonic = 1e-8 * rs;
    let dx = length / (n1 - 1) as f64;
    let mut y = orbit.initial();
    let mut mode = orbit.mode_for(&y, Mode::Full);
    let mut xs = vec![0.0];
    let mut states = vec![y];
    let mut drho = vec![orbit.drho(&y, mode)];
    let mut h = length / 4096.0;
    let mut x = 0.0;
    for i in 1..n1 {
        let target = if i == n1 - 1 { length } else { i as f64 * dx };
        while x < target {
            mode = orbit.mode_for(&y, mode);
            let step = h.min(target - x);
            let (yn, used, next) = orbit.advance(&y, x, step, mode)?;
            x = if used == target - x { target } else { x + used };
            y = yn;
            if used < step {
                h = next;
            } else {
                h = next.max(h);
            }
            if y[0] >= rs - tau_sonic {
                return Err(Error::SonicEncounter(x));
            }
        }
        mode = orbit.mode_for(&y, mode);
        xs.push(target);
        states.push(y);
        drho.push(orbit.drho(&y, mode));
    }
    let rho: Vec<f64> = states.iter().map(|s| s[0]).collect();
    let u: Vec<f64> = rho.iter().map(|r| gp.j0() / r).collect();
    let rmin = rho.iter().cloned().fold(f64::INFINITY, f64::min);
    let rmax = rho.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let g = gp.gamma();
    let m0 = gp.m0();
    let xm: Vec<f64> = u.iter().map(|u| u * u - g * m0.powf(g - 1.0) / u.powf(g - 1.0)).collect();
    let xmin = xm.iter().cloned().fold(f64::INFINITY, f64::min);
    let xmax = xm.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(Background1D {
        gp: *gp,
        length,
        x: xs,
        u,
        e: states.iter().map(|s| s[1]).collect(),
        phi0: states.iter().map(|s| s[2]).collect(),
        big_phi0: states.iter().map(|s| s[3]).collect(),
        rho,
        drho,
        abscissas,
        orbit: orbit_class,
        eps0: rmin.min(rs - rmax),
        mu0: xmin.min(1.0 / xmax),
    })
}

/// Bernoulli function of the background at node i; equals Phi0 up to integration error.
pub fn background_bernoulli(bg: &Background1D, i: usize) -> f64 {
    model::bernoulli(bg.gp.gamma(), bg.rho[i], bg.u[i], bg.gp.s0())
}
