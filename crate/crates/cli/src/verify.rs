//! The invariant suite behind `verify`, run on the configured gas and resolution.

use std::f64::consts::PI;

use epnozzle::background::{
    classify_orbit, critical_abscissas, detect_period, integrate_background, is_equilibrium, sonic_approach, state_at,
};
use epnozzle::linsolve::{assemble, energy_report, h1_norm, solve_bvp, solve_bvp_with};
use epnozzle::nonlinear::{solve_irrotational, solve_rotational, transport_solve};
use epnozzle::spectral::X2Grid;
use epnozzle::{Background1D, BoundaryData, CosineSeries, Field2D, LinearProblem, OrbitKind, SineSeries, X1Scheme};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::commands::{Admissible, Context};
use crate::error::{CliError, CliResult};

pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub limit: String,
    pub pass: bool,
}

fn check(name: &'static str, value: f64, limit: f64) -> Check {
    Check { name, value, limit: format!("< {limit:.0e}"), pass: value < limit }
}

fn diff(a: &Field2D, b: &Field2D) -> f64 {
    let d = Field2D {
        basis: a.basis,
        length: a.length,
        modes: a.modes.iter().zip(&b.modes).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect()).collect(),
    };
    h1_norm(&d)
}

/// Band-limited frozen-coefficient problem with smooth x1 profiles.
fn random_problem(bg: &Background1D, grid: &X2Grid, m: usize, rng: &mut ChaCha8Rng) -> CliResult<LinearProblem> {
    let mut p = LinearProblem::new(bg, grid.clone(), m)?;
    let len = bg.length;
    let (c12, c22) = (rng.gen_range(-0.05..0.05), rng.gen_range(-0.1..0.1));
    for i in 0..bg.n1() {
        let s = bg.x[i] / len;
        for (j, &x2) in grid.x.iter().enumerate() {
            p.a12[i][j] = c12 * (PI * x2).sin() * (1.0 + s);
            p.a22[i][j] = p.bar.a22[i] * (1.0 + c22 * (PI * x2).cos());
        }
    }
    for k in 0..=4.min(m) {
        for f in [&mut p.f1, &mut p.f2] {
            let c: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            f.modes[k] = bg.x.iter().map(|x| (0..3).map(|j| c[j] * (j as f64 * PI * x / len).cos()).sum()).collect();
        }
        p.g1.coeffs[k] = rng.gen_range(-1.0..1.0);
        p.g2.coeffs[k] = rng.gen_range(-1.0..1.0);
        p.psi_ex.coeffs[k] = rng.gen_range(-1.0..1.0);
    }
    Ok(p)
}

fn scaled(p: &LinearProblem, s: f64) -> LinearProblem {
    let mut q = p.clone();
    for f in [&mut q.f1, &mut q.f2] {
        f.modes.iter_mut().flatten().for_each(|v| *v *= s);
    }
    for c in [&mut q.g1, &mut q.g2, &mut q.psi_ex] {
        c.coeffs.iter_mut().for_each(|v| *v *= s);
    }
    q
}

fn orbit_checks(ctx: &Context, bg: &Background1D, out: &mut Vec<Check>) -> CliResult<()> {
    let gp = ctx.cfg.gas();
    let en = bg.energy();
    let drift = en.iter().map(|e| (e - en[0]).abs()).fold(0.0, f64::max) / en[0].abs().max(1e-300);
    out.push(check("energy drift along the background", drift, 1e-8));
    let kind = classify_orbit(&gp).kind;
    match kind {
        OrbitKind::Periodic if !is_equilibrium(&gp) => {
            let y = state_at(&gp, detect_period(&gp)?)?;
            out.push(check("periodic return", (y[0] - gp.rho0()).abs().max((y[1] - gp.e0()).abs()), 1e-6));
        }
        OrbitKind::Periodic => out.push(check("constant orbit stays put", (bg.rho[bg.n1() - 1] - gp.rho0()).abs(), 1e-12)),
        OrbitKind::Separatrix => {
            let ab = critical_abscissas(&gp)?;
            out.push(check("separatrix reaches rho_s", (state_at(&gp, ab.t_max)?[0] - gp.rho_s()).abs(), 1e-6));
        }
        OrbitKind::SonicBlowup => {
            let ab = critical_abscissas(&gp)?;
            let s = sonic_approach(&gp, &[1e-4, 1e-6, 1e-8, 1e-10])?;
            let hit = s.iter().find(|p| p.2.abs() > 1e6 && p.0 <= ab.t_max * (1.0 + 1e-14));
            out.push(Check {
                name: "blow-up slope before T_max",
                value: s.last().map_or(0.0, |p| p.2.abs()),
                limit: "> 1e6".into(),
                pass: hit.is_some(),
            });
        }
    }
    Ok(())
}

fn linear_checks(ctx: &Context, bg: &Background1D, out: &mut Vec<Check>) -> CliResult<()> {
    let cfg = &ctx.cfg;
    let adm = Admissible::new(cfg)?;
    if cfg.length > adm.generic {
        out.push(Check { name: "length within Lbar", value: cfg.length, limit: format!("<= {:.6}", adm.generic), pass: false });
        return Ok(());
    }
    let w = adm.weight(bg)?;
    let res = (2..w.x.len() - 2).map(|i| w.riccati_residual(w.x[i]).abs()).fold(0.0, f64::max);
    out.push(check("Riccati residual of W", res, 1e-9));
    out.push(Check { name: "W positive", value: w.min(), limit: "> 0".into(), pass: w.min() > 0.0 });

    let grid = X2Grid::new(cfg.n2);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let p = random_problem(bg, &grid, cfg.m, &mut rng)?;
    let sys = assemble(&p)?;
    let sol = solve_bvp_with(&sys, X1Scheme::DefectCorrected)?;
    out.push(check("energy identity", energy_report(&p, &sys, &sol, &w)?.discrepancy, 1e-6));
    let mut ratios = Vec::new();
    for amp in [1e-3, 1e-2, 1e-1] {
        let q = scaled(&p, amp);
        let sys = assemble(&q)?;
        ratios.push(energy_report(&q, &sys, &solve_bvp(&sys)?, &w)?.ratio.unwrap_or(0.0));
    }
    let spread = ratios.iter().map(|r| (r / ratios[0] - 1.0).abs()).fold(0.0, f64::max);
    out.push(check("energy ratio amplitude spread", spread, 0.05));
    Ok(())
}

fn nonlinear_checks(ctx: &Context, bg: &Background1D, out: &mut Vec<Check>) -> CliResult<()> {
    let cfg = &ctx.cfg;
    let res = cfg.resolution();
    let it = &cfg.iteration;
    let z = solve_irrotational(&BoundaryData::zero(cfg.m), bg, res, it)?;
    let d = z.diagnostics;
    out.push(Check { name: "zero data: one iteration", value: z.iterations as f64, limit: "= 1".into(), pass: z.iterations == 1 });
    out.push(check("zero data: residuals", d.mass_residual.max(d.poisson_residual).max(d.max_k), 1e-10));

    let mut potential = cfg.boundary_data();
    potential.s_en = CosineSeries::zero(cfg.m);
    potential.v_en = SineSeries::zero(2 * cfg.m);
    let a = solve_irrotational(&potential, bg, res, it)?;
    let d = a.diagnostics;
    out.push(Check {
        name: "irrotational iterations",
        value: a.iterations as f64,
        limit: "<= 10".into(),
        pass: a.iterations <= 10,
    });
    out.push(check("irrotational residuals", d.mass_residual.max(d.poisson_residual), 1e-6));
    out.push(Check { name: "supersonic margin", value: d.kappa_hat0, limit: "> 0".into(), pass: d.kappa_hat0 > 0.0 });
    let b = solve_rotational(&potential, bg, res, it)?;
    out.push(check("reduction: |phi| + |Y|", h1_norm(&b.phi) + h1_norm(&b.y), 1e-9));
    out.push(check("reduction: potential-flow gap", diff(&a.psi, &b.psi).hypot(diff(&a.big_psi, &b.big_psi)), 1e-8));

    let mut rot = cfg.boundary_data();
    if rot.s_en.coeffs.iter().all(|c| *c == 0.0) {
        rot.s_en = CosineSeries::new(vec![0.0, 1e-3, -5e-4]).resized(cfg.m);
    }
    let r = solve_rotational(&rot, bg, res, it)?;
    let d = r.diagnostics;
    out.push(check("vorticity relation", d.vorticity_residual, 1e-5));
    out.push(check("entropy transport", d.transport_residual, 1e-5));
    out.push(check("mass flux drift", d.flux_drift, 1e-6));
    out.push(check("max |K|", d.max_k, 1e-8));
    out.push(check("Poisson closure", d.poisson_residual, 1e-6));
    Ok(())
}

fn transport_checks(ctx: &Context, bg: &Background1D, out: &mut Vec<Check>) -> CliResult<()> {
    let grid = X2Grid::new(ctx.cfg.n2);
    let j0 = ctx.cfg.gas().j0();
    let s = CosineSeries::new(vec![0.0, 1e-3, 0.0, -2e-3]);
    let t = transport_solve(&vec![vec![j0; grid.n2()]; bg.n1()], &grid, &s, ctx.cfg.iteration.flux_tol)?;
    let mut e = 0.0f64;
    let mut inlet = 0.0f64;
    for (i, row) in t.map.l.iter().enumerate() {
        for (j, l) in row.iter().enumerate() {
            e = e.max((l - grid.x[j]).abs()).max((t.y[i][j] - s.eval(grid.x[j])).abs());
            if i == 0 {
                inlet = inlet.max((l - grid.x[j]).abs());
            }
        }
    }
    out.push(check("inlet map is the identity", inlet, 1e-12));
    out.push(check("background transport closed form", e, 1e-10));
    Ok(())
}

pub fn run(ctx: &Context) -> CliResult<()> {
    let cfg = &ctx.cfg;
    let bg = integrate_background(&cfg.gas(), cfg.length, cfg.n1)?;
    let mut checks = Vec::new();
    orbit_checks(ctx, &bg, &mut checks)?;
    linear_checks(ctx, &bg, &mut checks)?;
    nonlinear_checks(ctx, &bg, &mut checks)?;
    transport_checks(ctx, &bg, &mut checks)?;
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &checks {
        println!("{}  {:<width$}  {:>12.4e}  {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.limit);
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    println!("{} of {} checks pass (seed {})", checks.len() - failed, checks.len(), ctx.seed);
    if failed > 0 {
        return Err(CliError::Verification(failed));
    }
    Ok(())
}
