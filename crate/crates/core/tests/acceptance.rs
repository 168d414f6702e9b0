//! Acceptance checks. Runs without the libtest harness so every line reaches the log.

mod common;

use std::time::Instant;

use common::*;
use epnozzle::background::*;
use epnozzle::linsolve::*;
use epnozzle::multiplier::*;
use epnozzle::nonlinear::*;
use epnozzle::spectral::{Field2D, X2Grid};
use epnozzle::{CosineSeries, Error, GasParams, OrbitKind, SineSeries};

type Outcome = Result<(bool, String), Error>;

fn base(rho0: f64, e0: f64, b0: f64) -> GasParams {
    GasParams::new(2.0, 2f64.sqrt(), 1.0, b0, rho0, e0).unwrap()
}

fn diff(a: &Field2D, b: &Field2D) -> f64 {
    let d = Field2D {
        basis: a.basis,
        length: a.length,
        modes: a.modes.iter().zip(&b.modes).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect()).collect(),
    };
    h1_norm(&d)
}

fn hamiltonian_drift() -> Outcome {
    let gp = base(0.5, 0.4, 0.5);
    if classify_orbit(&gp).kind != OrbitKind::Periodic {
        return Ok((false, "orbit is not periodic".into()));
    }
    let period = detect_period(&gp)?;
    let bg = integrate_background(&gp, 3.0 * period, 1537)?;
    let en = bg.energy();
    let d0 = en[0];
    let drift = en.iter().map(|e| (e - d0).abs()).fold(0.0, f64::max) / d0.abs();
    Ok((drift < 1e-8, format!("period {period:.6}, relative drift {drift:.2e} (< 1e-8)")))
}

fn trichotomy() -> Outcome {
    let mut worst = [0.0f64; 3];
    let mut min_slope = f64::INFINITY;
    let mut ok = true;
    for b0 in [0.4, 0.5, 0.6] {
        // Offsets keep H(rho0) > 0, so all three classes exist at each (rho0, b0).
        for rho0 in [b0 - 0.08, b0 + 0.1, b0 + 0.25] {
            let e_sep = (2.0 * hamiltonian(&base(rho0, 0.0, b0), rho0)).sqrt();
            for (class, e0) in [(0usize, 0.5 * e_sep), (1, -e_sep), (2, -(e_sep + 0.5))] {
                let gp = base(rho0, e0, b0);
                let kind = classify_orbit(&gp).kind;
                let expect = [OrbitKind::Periodic, OrbitKind::Separatrix, OrbitKind::SonicBlowup][class];
                if kind != expect {
                    println!("    rho0 {rho0} b0 {b0} E0 {e0}: classified {kind:?}, built as {expect:?}");
                    ok = false;
                    continue;
                }
                match class {
                    0 => {
                        let y = state_at(&gp, detect_period(&gp)?)?;
                        worst[0] = worst[0].max((y[0] - rho0).abs().max((y[1] - e0).abs()));
                    }
                    1 => {
                        let ab = critical_abscissas(&gp)?;
                        let end = state_at(&gp, ab.t_max)?;
                        let f = separatrix_field(&gp, gp.rho_s());
                        ok &= ab.t_max.is_finite() && f.is_finite();
                        worst[1] = worst[1].max((end[0] - gp.rho_s()).abs());
                    }
                    _ => {
                        let ab = critical_abscissas(&gp)?;
                        let s = sonic_approach(&gp, &[1e-4, 1e-6, 1e-8, 1e-10, 1e-12])?;
                        // First sampled density past which |rho'| exceeds the threshold.
                        let (x, _, d) = *s.iter().find(|p| p.2.abs() > 1e6).unwrap_or(s.last().unwrap());
                        // Near rho_s the gap closes like sqrt(T_max - x): at |rho'| = 1e7 the two
                        // abscissas agree to rounding, so allow a few ulps.
                        ok &= x <= ab.t_max * (1.0 + 1e-14);
                        min_slope = min_slope.min(d.abs());
                    }
                }
            }
        }
    }
    ok &= worst[0] < 1e-6 && worst[1] < 1e-6 && min_slope > 1e6;
    Ok((
        ok,
        format!(
            "periodic return {:.1e} (< 1e-6), sonic arrival {:.1e} (< 1e-6), min |rho'| {:.1e} (> 1e6)",
            worst[0], worst[1], min_slope
        ),
    ))
}

fn grid(len: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| len * i as f64 / (n - 1) as f64).collect()
}

/// Riccati residual from a fourth-order difference of the closed form.
fn fd_residual(w: &WeightFunction, x: f64) -> f64 {
    let h = 1e-3 * (w.eval(x) / w.deriv(x)).abs().min(w.length);
    let d = (w.eval(x - 2.0 * h) - 8.0 * w.eval(x - h) + 8.0 * w.eval(x + h) - w.eval(x + 2.0 * h)) / (12.0 * h);
    let rc = &w.constants;
    let v = w.eval(x);
    (-d - rc.a2 * v * v + 2.0 * rc.a1 * v - rc.a0 - w.lambda0) / (d.abs() + rc.a2 * v * v + rc.a0).max(1.0)
}

fn riccati_weight() -> Outcome {
    let gp = equilibrium();
    let mut ok = true;
    let mut msg = Vec::new();
    for (label, cfg) in [
        ("case 1", MultiplierConfig::default()),
        ("case 2", MultiplierConfig { c_flat: 200.0, ..Default::default() }),
    ] {
        let win = coefficient_window(&gp, &cfg, 1.0)?;
        let rc = riccati_constants(&win, &cfg);
        let lbar = critical_length(&rc, rc.t_bound);
        let want = if label == "case 1" { DiscriminantCase::PositiveDiscriminant } else { DiscriminantCase::NonPositiveDiscriminant };
        ok &= rc.case == want;
        let (mut res, mut wmin) = (0.0f64, f64::INFINITY);
        for frac in [0.1, 0.5, 0.9, 0.99] {
            let len = frac * lbar;
            let w = build_weight(&rc, len, &grid(len, 257))?;
            wmin = wmin.min(w.min());
            for x in &w.x[2..w.x.len() - 2] {
                res = res.max(fd_residual(&w, *x).abs()).max(w.riccati_residual(*x).abs());
            }
        }
        ok &= res < 1e-9 && wmin > 0.0;
        if label == "case 1" {
            let fails = matches!(build_weight(&rc, 1.01 * lbar, &grid(1.01 * lbar, 65)), Err(Error::LengthExceedsCritical { .. }));
            ok &= fails;
            msg.push(format!("{label}: Lbar {lbar:.4}, residual {res:.1e}, min W {wmin:.2e}, 1.01 Lbar rejected {fails}"));
        } else {
            msg.push(format!("{label}: Lbar {lbar:.4}, residual {res:.1e}, min W {wmin:.2e}"));
        }
    }
    Ok((ok, msg.join("; ")))
}

fn energy_identity() -> Outcome {
    let gp = equilibrium();
    let bg = background(&gp, 0.5, 513);
    let w = weight_for(&gp, &bg);
    let mut worst = 0.0f64;
    for seed in 0..5 {
        let p = random_problem(&bg, 16, 100 + seed, 1.0);
        let sys = assemble(&p)?;
        let sol = solve_bvp_with(&sys, X1Scheme::DefectCorrected)?;
        worst = worst.max(energy_report(&p, &sys, &sol, &w)?.discrepancy);
    }
    Ok((worst < 1e-6, format!("worst relative gap over 5 problems {worst:.2e} (< 1e-6)")))
}

fn linear_convergence() -> Outcome {
    let gp = equilibrium();
    let mut errs = Vec::new();
    for n1 in [129, 257, 513] {
        let bg = background(&gp, 0.5, n1);
        let mf = manufactured(&bg, 16, Profile::Mode(2), Profile::Mode(1));
        errs.push(manufactured_error(&mf, &solve_linear(&mf.problem)?));
    }
    let (r1, r2) = (errs[0] / errs[1], errs[1] / errs[2]);
    let bg = background(&gp, 0.5, 513);
    let e = |m| -> Result<f64, Error> {
        let mf = manufactured(&bg, m, Profile::Pole(1.5), Profile::Exp(0.5));
        Ok(manufactured_error(&mf, &solve_linear(&mf.problem)?))
    };
    let rm = e(8)? / e(16)?;
    Ok((
        r1 >= 3.5 && r2 >= 3.5 && rm >= 10.0,
        format!("n1 ratios {r1:.2}, {r2:.2} (>= 3.5); m 8 -> 16 ratio {rm:.1} (>= 10)"),
    ))
}

fn amplitude_independence() -> Outcome {
    let gp = equilibrium();
    let bg = background(&gp, 0.5, 513);
    let w = weight_for(&gp, &bg);
    let mut spread = 0.0f64;
    for seed in 0..3 {
        let p = random_problem(&bg, 16, 200 + seed, 1.0);
        let mut ratios = Vec::new();
        for amp in [1e-3, 1e-2, 1e-1] {
            let q = scaled(&p, amp);
            let sys = assemble(&q)?;
            ratios.push(energy_report(&q, &sys, &solve_bvp(&sys)?, &w)?.ratio.unwrap());
        }
        for r in &ratios {
            spread = spread.max((r / ratios[0] - 1.0).abs());
        }
    }
    Ok((spread < 0.05, format!("largest ratio deviation {spread:.2e} (< 5%)")))
}

fn irrotational() -> Outcome {
    let res = Resolution::default();
    let cfg = IterationConfig::default();
    let bg = background(&accelerating(), 0.5, 257);
    let z = solve_irrotational(&BoundaryData::zero(16), &bg, res, &cfg)?;
    let d = &z.diagnostics;
    let zres = [d.mass_residual, d.poisson_residual, d.vorticity_residual, d.vorticity_consistency, d.transport_residual, d.max_k]
        .into_iter()
        .fold(z.perturbation_norm(), f64::max);

    let bg = background(&equilibrium(), 0.5, 513);
    let data = small_data(16, 1e-3, 1, false);
    let s = solve_irrotational(&data, &bg, res, &cfg)?;
    let d = s.diagnostics;
    let other = solve_irrotational(&data.scaled(-2.0), &bg, res, &cfg)?;
    let t = solve_irrotational_from(&data, &bg, res, &cfg, &other.psi, &other.big_psi)?;
    let gap = diff(&t.psi, &s.psi).hypot(diff(&t.big_psi, &s.big_psi));
    let nres = d.mass_residual.max(d.poisson_residual);
    let ok = z.iterations == 1
        && zres < 1e-10
        && s.iterations <= 10
        && nres < 1e-6
        && d.kappa_hat0 > 0.0
        && gap < 10.0 * cfg.fp_tol;
    Ok((
        ok,
        format!(
            "zero data: {} iteration, residual {zres:.1e} (< 1e-10); amplitude 1e-3: {} iterations, residual {nres:.1e} (< 1e-6), kappa {:.3}; uniqueness gap {gap:.1e} (< {:.0e})",
            z.iterations,
            s.iterations,
            d.kappa_hat0,
            10.0 * cfg.fp_tol
        ),
    ))
}

fn reduction() -> Outcome {
    let bg = background(&accelerating(), 0.5, 513);
    let res = Resolution::default();
    let cfg = IterationConfig::default();
    let data = small_data(16, 1e-3, 3, false);
    let a = solve_irrotational(&data, &bg, res, &cfg)?;
    let b = solve_rotational(&data, &bg, res, &cfg)?;
    let (np, ny) = (h1_norm(&b.phi), h1_norm(&b.y));
    let gap = diff(&a.psi, &b.psi).hypot(diff(&a.big_psi, &b.big_psi));
    Ok((
        np < 1e-9 && ny < 1e-9 && gap < 1e-8,
        format!("|phi| {np:.1e}, |Y| {ny:.1e} (< 1e-9); potential-flow gap {gap:.1e} (< 1e-8)"),
    ))
}

fn rotational() -> Outcome {
    let bg = background(&equilibrium(), 0.5, 513);
    let res = Resolution::default();
    let cfg = IterationConfig::default();
    let mut data = BoundaryData::zero(16);
    data.s_en = CosineSeries::new(vec![0.0, 1e-3, -5e-4, 0.0, 2e-4]);
    data.v_en = SineSeries::new(vec![0.0, 3e-4, 0.0, -1e-4]);
    let s = solve_rotational(&data, &bg, res, &cfg)?;
    let d = s.diagnostics;
    let mut half = data.clone();
    half.s_en.coeffs.iter_mut().for_each(|c| *c *= 0.5);
    let t = solve_rotational(&half, &bg, res, &cfg)?;
    let rphi = h1_norm(&t.phi) / h1_norm(&s.phi);
    let ry = h1_norm(&t.y) / h1_norm(&s.y);
    let ok = d.vorticity_residual < 1e-5
        && d.transport_residual < 1e-5
        && d.flux_drift < 1e-6
        && d.max_k < 1e-8
        && d.poisson_residual < 1e-6
        && (rphi - 0.5).abs() < 0.05
        && (ry - 0.5).abs() < 0.05;
    Ok((
        ok,
        format!(
            "vorticity {:.1e}, transport {:.1e} (< 1e-5); flux drift {:.1e} (< 1e-6); max K {:.1e} (< 1e-8); Poisson {:.1e} (< 1e-6); halving ratios phi {rphi:.3}, Y {ry:.3} (0.5 within 10%)",
            d.vorticity_residual, d.transport_residual, d.flux_drift, d.max_k, d.poisson_residual
        ),
    ))
}

fn transport() -> Outcome {
    let grid = X2Grid::new(257);
    let col: Vec<f64> = grid.x.iter().map(|x| 1.0 + 0.3 * (std::f64::consts::PI * x).cos()).collect();
    let t = transport_solve(&vec![col; 9], &grid, &CosineSeries::zero(2), 1e-6)?;
    let inlet = (0..257).map(|j| (t.map.l[0][j] - grid.x[j]).abs()).fold(0.0, f64::max);

    let j0 = 2f64.sqrt();
    let s = CosineSeries::new(vec![0.0, 1e-3, 0.0, -2e-3]);
    let t = transport_solve(&vec![vec![j0; 257]; 65], &grid, &s, 1e-6)?;
    let mut closed = 0.0f64;
    for i in 0..65 {
        for j in 0..257 {
            closed = closed.max((t.map.l[i][j] - grid.x[j]).abs()).max((t.y[i][j] - s.eval(grid.x[j])).abs());
        }
    }

    let g = X2Grid::new(65);
    let mut m1 = vec![vec![1.0; 65]; 17];
    for row in m1.iter_mut().skip(5).take(3) {
        row.iter_mut().skip(20).take(4).for_each(|v| *v = -0.1);
    }
    let rejected = matches!(transport_solve(&m1, &g, &CosineSeries::zero(2), 1e-6), Err(Error::NonMonotoneStream { .. }));
    Ok((
        inlet < 1e-12 && closed < 1e-10 && rejected,
        format!("inlet map {inlet:.1e} (< 1e-12); closed form {closed:.1e} (< 1e-10); negative patch rejected {rejected}"),
    ))
}

fn accelerating_relaxation() -> Outcome {
    let gp = accelerating();
    let rep = accelerating_report(&gp, &MultiplierConfig::default())?;
    Ok((
        gp.e0() > 0.0 && rep.bound_t_max >= rep.generic,
        format!("accelerating bound {:.4} >= generic {:.4}", rep.bound_t_max, rep.generic),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, f64); 11] = [
        ("hamiltonian conservation", hamiltonian_drift, 1.0),
        ("orbit trichotomy", trichotomy, 10.0),
        ("riccati weight", riccati_weight, 1.0),
        ("energy identity", energy_identity, 30.0),
        ("linear convergence", linear_convergence, 60.0),
        ("energy estimate linearity", amplitude_independence, 30.0),
        ("irrotational fixed point", irrotational, 120.0),
        ("rotational reduction", reduction, 120.0),
        ("rotational physics", rotational, 300.0),
        ("transport map", transport, 5.0),
        ("accelerating relaxation", accelerating_relaxation, 1.0),
    ];
    let mut failed = 0;
    for (k, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match outcome {
            Ok((p, d)) => (p && secs < *budget, d),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {detail}; {secs:.2} s (< {budget} s)", if pass { "PASS" } else { "FAIL" }, k + 1);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
