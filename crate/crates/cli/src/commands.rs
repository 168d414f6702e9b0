use std::path::{Path, PathBuf};

use epnozzle::background::{classify_orbit, critical_abscissas, detect_period, hamiltonian, integrate_background};
use epnozzle::linsolve::{assemble, energy_report, solve_bvp_with};
use epnozzle::multiplier::{
    accelerating_report, build_weight, condition_profile, coefficient_window, critical_length, riccati_constants,
    verify_pointwise_conditions, DiscriminantCase, RiccatiConstants,
};
use epnozzle::nonlinear::{solve_irrotational, solve_rotational};
use epnozzle::spectral::{Basis, BasisTable, X2Grid};
use epnozzle::{Background1D, Error, GasParams, LinearProblem, OrbitKind, SolutionBundle, WeightFunction};

use crate::config::{Artifact, RunConfig};
use crate::error::CliResult;
use crate::output::{write_csv, LinePlot, Series};

pub struct Context {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub seed: u64,
    pub verbose: bool,
}

impl Context {
    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> CliResult<()> {
        if self.cfg.wants(Artifact::Csv) {
            write_csv(&self.path(name), header, rows)?;
            self.note(&self.path(name));
        }
        Ok(())
    }

    pub fn svg(&self, name: &str, plot: LinePlot) -> CliResult<()> {
        if self.cfg.wants(Artifact::Svg) {
            plot.write(&self.path(name))?;
            self.note(&self.path(name));
        }
        Ok(())
    }

    fn note(&self, p: &Path) {
        if self.verbose {
            println!("wrote {}", p.display());
        }
    }
}

/// Generic Riccati constants and critical length on the coefficient window.
pub struct Admissible {
    pub constants: RiccatiConstants,
    pub generic: f64,
    /// Relaxed bound for accelerating flow; None unless E0 > 0.
    pub accelerating: Option<f64>,
}

impl Admissible {
    pub fn new(cfg: &RunConfig) -> CliResult<Self> {
        let gp = cfg.gas();
        let mc = &cfg.multiplier;
        let win = coefficient_window(&gp, mc, cfg.length)?;
        let rc = riccati_constants(&win, mc);
        let generic = critical_length(&rc, rc.t_bound);
        let accelerating = if gp.e0() > 0.0 { Some(accelerating_report(&gp, mc)?.bound_t_max) } else { None };
        Ok(Admissible { constants: rc, generic, accelerating })
    }

    pub fn bound(&self) -> f64 {
        self.accelerating.map_or(self.generic, |a| a.max(self.generic))
    }

    pub fn check(&self, length: f64) -> CliResult<()> {
        if length > self.bound() {
            return Err(Error::LengthExceedsCritical { length, critical: self.bound() }.into());
        }
        Ok(())
    }

    pub fn weight(&self, bg: &Background1D) -> CliResult<WeightFunction> {
        Ok(build_weight(&self.constants, bg.length, &bg.x)?)
    }
}

fn case_name(c: DiscriminantCase) -> &'static str {
    match c {
        DiscriminantCase::PositiveDiscriminant => "PositiveDiscriminant",
        DiscriminantCase::NonPositiveDiscriminant => "NonPositiveDiscriminant",
    }
}

fn separatrix_branches(gp: &GasParams) -> Vec<Series> {
    let rs = gp.rho_s();
    let mut up = Vec::new();
    for i in 1..400 {
        let r = rs * i as f64 / 400.0;
        let h = hamiltonian(gp, r);
        if h >= 0.0 {
            up.push((r, (2.0 * h).sqrt()));
        }
    }
    up.push((rs, 0.0));
    let down = up.iter().map(|(r, e)| (*r, -e)).collect();
    vec![Series { label: "separatrix".into(), points: up }, Series { label: "".into(), points: down }]
}

pub fn background(ctx: &Context) -> CliResult<()> {
    let cfg = &ctx.cfg;
    let gp = cfg.gas();
    let class = classify_orbit(&gp);
    let ab = critical_abscissas(&gp)?;
    println!("rho_s = {:.12}", gp.rho_s());
    println!("orbit class {:?}, E0^2/2 - H(rho0) = {:.6e}", class.kind, class.discriminant);
    println!("T_min = {:.10}, T_max = {:.10}", ab.t_min, ab.t_max);
    if let Some(t) = ab.t_star {
        println!("T* = {t:.10}");
    }
    if class.kind == OrbitKind::Periodic && !epnozzle::background::is_equilibrium(&gp) {
        println!("period = {:.10}", detect_period(&gp)?);
    }
    let bg = integrate_background(&gp, cfg.length, cfg.n1)?;
    let en = bg.energy();
    let drift = en.iter().map(|e| (e - en[0]).abs()).fold(0.0, f64::max) / en[0].abs().max(1e-300);
    println!("L = {}, n1 = {}: eps0 = {:.6e}, mu0 = {:.6e}, energy drift {:.3e}", cfg.length, cfg.n1, bg.eps0, bg.mu0, drift);

    let rows: Vec<Vec<f64>> =
        (0..bg.n1()).map(|i| vec![bg.x[i], bg.rho[i], bg.e[i], bg.u[i], bg.phi0[i], bg.big_phi0[i], en[i]]).collect();
    ctx.csv("background.csv", &["x1", "rho", "E", "u", "phi0", "Phi0", "energy"], &rows)?;
    let mut series = vec![Series { label: "orbit on [0, L]".into(), points: bg.rho.iter().cloned().zip(bg.e.iter().cloned()).collect() }];
    series.extend(separatrix_branches(&gp));
    ctx.svg(
        "phase.svg",
        LinePlot { title: format!("phase plane, {:?} orbit", class.kind), x_label: "rho".into(), y_label: "E".into(), series },
    )
}

pub fn critical_length_cmd(ctx: &Context) -> CliResult<()> {
    let cfg = &ctx.cfg;
    let gp = cfg.gas();
    let mc = &cfg.multiplier;
    let ab = critical_abscissas(&gp)?;
    println!("T_max = {:.10}, T_min = {:.10}", ab.t_max, ab.t_min);
    match ab.t_star {
        Some(t) => println!("T* = {t:.10}"),
        None => println!("T* = none"),
    }
    println!("C_* = {}, C_flat = {}, lambda1* = {}, delta1 = {}", mc.c_star, mc.c_flat, mc.lambda1_star, mc.delta1);
    let adm = Admissible::new(cfg)?;
    let rc = &adm.constants;
    println!("a0 = {:.8e}, a1 = {:.8e}, a2 = {:.8e}", rc.a0, rc.a1, rc.a2);
    println!("case {}", case_name(rc.case));
    println!("critical length Lbar = {:.10}", adm.generic);
    if gp.e0() > 0.0 {
        let rep = accelerating_report(&gp, mc)?;
        println!("accelerating flow: window {:.8}, a1 = {:.6e}, case {}", rep.window, rep.a1, case_name(rep.case));
        println!("  bound with T* = {:.10}, bound with T_max = {:.10}, generic = {:.10}", rep.bound_t_star, rep.bound_t_max, rep.generic);
    }
    if cfg.length > adm.generic {
        println!("configured L = {} exceeds Lbar; no weight exported", cfg.length);
        return Ok(());
    }
    let bg = integrate_background(&gp, cfg.length, cfg.n1)?;
    let w = adm.weight(&bg)?;
    let rep = verify_pointwise_conditions(&w, &bg, None, 0.0, mc.c_star);
    println!(
        "weight at L = {}: lambda0 = {:.6e}, min W = {:.6e}, min(q1 - q3) = {:.6e}, min q2/a22 = {:.6e}, {}",
        cfg.length,
        rep.lambda0,
        rep.min_w,
        rep.min_q1_minus_q3,
        rep.min_q2_scaled,
        if rep.pass { "conditions hold" } else { "conditions fail" }
    );
    let rows: Vec<Vec<f64>> = condition_profile(&w, &bg, 0.0, mc.c_star).into_iter().map(|r| r.to_vec()).collect();
    ctx.csv("weight.csv", &["x1", "W", "q1_minus_q3", "q2_over_a22"], &rows)?;
    ctx.svg(
        "weight.svg",
        LinePlot {
            title: format!("weight function, Lbar = {:.4}", adm.generic),
            x_label: "x1".into(),
            y_label: "W".into(),
            series: vec![Series { label: "W".into(), points: w.x.iter().cloned().zip(w.w.iter().cloned()).collect() }],
        },
    )
}

pub fn solve_linear(ctx: &Context) -> CliResult<()> {
    let cfg = &ctx.cfg;
    let gp = cfg.gas();
    let adm = Admissible::new(cfg)?;
    if cfg.length > adm.generic {
        return Err(Error::LengthExceedsCritical { length: cfg.length, critical: adm.generic }.into());
    }
    let bg = integrate_background(&gp, cfg.length, cfg.n1)?;
    let w = adm.weight(&bg)?;
    let grid = X2Grid::new(cfg.n2);
    let data = cfg.boundary_data();
    let mut p = LinearProblem::new(&bg, grid.clone(), cfg.m)?;
    p.g1 = data.u_en.clone();
    p.g2 = data.e_en.clone();
    p.psi_ex = data.phi_ex.clone();
    let sys = assemble(&p)?;
    let sol = solve_bvp_with(&sys, cfg.iteration.scheme)?;
    let rep = energy_report(&p, &sys, &sol, &w)?;
    println!("banded solve residual {:.3e}, closure {:.3e}", sol.residual, sys.residual_closure(&sol));
    println!("energy pairing {:.10e} = J1 + J2 + J3 = {:.10e}", rep.direct, rep.j1 + rep.j2 + rep.j3);
    println!("  J1 = {:.6e}, J2 = {:.6e}, J3 = {:.6e}, relative gap {:.3e}", rep.j1, rep.j2, rep.j3, rep.discrepancy);
    match rep.ratio {
        Some(r) => println!("solution norm {:.6e}, data norm {:.6e}, ratio {r:.6e}", rep.solution_norm, rep.data_norm),
        None => println!("zero data: zero solution"),
    }
    let t = BasisTable::new(Basis::Cosine, cfg.m, &grid)?;
    let psi = sol.psi.to_grid(&t, 0);
    let big = sol.big_psi.to_grid(&t, 0);
    let mut rows = Vec::with_capacity(bg.n1() * grid.n2());
    for i in 0..bg.n1() {
        for j in 0..grid.n2() {
            rows.push(vec![bg.x[i], grid.x[j], psi[i][j], big[i][j]]);
        }
    }
    ctx.csv("linear.csv", &["x1", "x2", "psi", "Psi"], &rows)?;
    let mid = grid.n2() / 2;
    ctx.svg(
        "linear.svg",
        LinePlot {
            title: "linear solve on the centreline".into(),
            x_label: "x1".into(),
            y_label: "perturbation".into(),
            series: vec![
                Series { label: "psi".into(), points: (0..bg.n1()).map(|i| (bg.x[i], psi[i][mid])).collect() },
                Series { label: "Psi".into(), points: (0..bg.n1()).map(|i| (bg.x[i], big[i][mid])).collect() },
            ],
        },
    )
}

pub fn report_bundle(s: &SolutionBundle) {
    println!("iterations {}", s.iterations);
    if !s.inner_iterations.is_empty() {
        println!("inner iterations {:?}", s.inner_iterations);
    }
    let hist: Vec<String> = s.history.iter().map(|h| format!("{h:.3e}")).collect();
    println!("successive differences [{}]", hist.join(", "));
    let r = &s.radii;
    println!(
        "sigma {:.3e}, C* {:.4}, C** {:.4}, delta {:.4e}, delta_e {:.4e}, delta_p {:.4e}, delta_v {:.4e}",
        r.sigma, r.c_star, r.c_star_star, r.delta, r.delta_e, r.delta_p, r.delta_v
    );
    let d = &s.diagnostics;
    println!("mass residual        {:.3e}", d.mass_residual);
    println!("Poisson residual     {:.3e}", d.poisson_residual);
    println!("vorticity residual   {:.3e}", d.vorticity_residual);
    println!("curl consistency     {:.3e}", d.vorticity_consistency);
    println!("transport residual   {:.3e}", d.transport_residual);
    println!("mass flux drift      {:.3e}", d.flux_drift);
    println!("max |K|              {:.3e}", d.max_k);
    println!("supersonic margin    {:.6} (background {:.6})", d.kappa_hat0, d.background_margin);
    println!("min u1 {:.6}, min rho {:.6}", d.min_u1, d.min_rho);
    println!("perturbation norm    {:.6e}", s.perturbation_norm());
}

fn export_bundle(ctx: &Context, bg: &Background1D, s: &SolutionBundle) -> CliResult<()> {
    let f = &s.fields;
    let mut rows = Vec::with_capacity(f.x1.len() * f.x2.len());
    for i in 0..f.x1.len() {
        for j in 0..f.x2.len() {
            rows.push(vec![
                f.x1[i],
                f.x2[j],
                f.rho[i][j],
                f.u1[i][j],
                f.u2[i][j],
                f.s[i][j],
                f.big_phi[i][j],
                f.pressure[i][j],
                f.vorticity[i][j],
                f.k[i][j],
            ]);
        }
    }
    ctx.csv("fields.csv", &["x1", "x2", "rho", "u1", "u2", "S", "Phi", "p", "vorticity", "K"], &rows)?;
    let n2 = f.x2.len();
    let series = [(0, "x2 = -1"), (n2 / 2, "x2 = 0"), (n2 - 1, "x2 = 1")]
        .iter()
        .map(|(j, label)| Series {
            label: label.to_string(),
            points: (0..f.x1.len()).map(|i| (f.x1[i], f.rho[i][*j] - bg.rho[i])).collect(),
        })
        .collect();
    ctx.svg("density.svg", LinePlot { title: "density perturbation".into(), x_label: "x1".into(), y_label: "rho - rho_bar".into(), series })
}

pub fn solve_nonlinear(ctx: &Context, rotational: bool) -> CliResult<()> {
    let cfg = &ctx.cfg;
    let adm = Admissible::new(cfg)?;
    adm.check(cfg.length)?;
    let bg = integrate_background(&cfg.gas(), cfg.length, cfg.n1)?;
    let data = cfg.boundary_data();
    let s = if rotational {
        solve_rotational(&data, &bg, cfg.resolution(), &cfg.iteration)?
    } else {
        solve_irrotational(&data, &bg, cfg.resolution(), &cfg.iteration)?
    };
    report_bundle(&s);
    export_bundle(ctx, &bg, &s)
}
