mod common;

use common::*;
use epnozzle::linsolve::h1_norm;
use epnozzle::nonlinear::*;
use epnozzle::spectral::{Basis, Field2D, X2Grid};
use epnozzle::{CosineSeries, Error, SineSeries};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LEN: f64 = 0.5;

fn diff(a: &Field2D, b: &Field2D) -> f64 {
    let d = Field2D {
        basis: a.basis,
        length: a.length,
        modes: a.modes.iter().zip(&b.modes).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect()).collect(),
    };
    h1_norm(&d)
}

#[test]
fn zero_data_returns_the_background() {
    let bg = background(&accelerating(), LEN, 257);
    let res = Resolution::default();
    let s = solve_irrotational(&BoundaryData::zero(16), &bg, res, &IterationConfig::default()).unwrap();
    assert_eq!(s.iterations, 1);
    assert!(s.perturbation_norm() < 1e-13);
    let d = &s.diagnostics;
    for r in [d.mass_residual, d.poisson_residual, d.vorticity_residual, d.max_k] {
        assert!(r < 1e-10, "{d:?}");
    }
    let f = &s.fields;
    for i in [0, 100, 256] {
        for j in [0, 64, 128] {
            assert!((f.u1[i][j] - bg.u[i]).abs() < 1e-14);
            assert!(f.u2[i][j].abs() < 1e-13);
            assert!((f.rho[i][j] - bg.rho[i]).abs() < 1e-10 * bg.rho[i]);
            assert!(f.vorticity[i][j].abs() < 1e-12);
        }
    }
}

#[test]
fn small_irrotational_data_contracts() {
    let bg = background(&equilibrium(), LEN, 513);
    let res = Resolution::default();
    let cfg = IterationConfig::default();
    let data = small_data(16, 1e-3, 1, false);
    let s = solve_irrotational(&data, &bg, res, &cfg).unwrap();
    assert!(s.iterations <= 10, "{:?}", s.history);
    for w in s.history.windows(2) {
        assert!(w[1] < 0.5 * w[0], "{:?}", s.history);
    }
    let d = &s.diagnostics;
    assert!(d.mass_residual < 1e-6 && d.poisson_residual < 1e-6, "{d:?}");
    assert!(d.kappa_hat0 > 0.0 && d.kappa_hat0 > 0.8 * d.background_margin);
    assert!(d.min_u1 > 0.0 && d.min_rho > 0.0);
    assert!(s.perturbation_norm() <= s.radii.delta);

    // A distinct start converges to the same fixed point.
    let other = solve_irrotational(&data.scaled(-2.0), &bg, res, &cfg).unwrap();
    let t = solve_irrotational_from(&data, &bg, res, &cfg, &other.psi, &other.big_psi).unwrap();
    let gap = diff(&t.psi, &s.psi).hypot(diff(&t.big_psi, &s.big_psi));
    assert!(gap < 10.0 * cfg.fp_tol, "{gap:e}");
}

#[test]
fn iteration_failures_are_reported() {
    let bg = background(&equilibrium(), LEN, 129);
    let res = Resolution::default();
    let data = small_data(16, 1e-3, 4, false);
    let tight = IterationConfig { max_iter: 2, ..Default::default() };
    assert!(matches!(solve_irrotational(&data, &bg, res, &tight), Err(Error::MaxIterExceeded { iters: 2, .. })));
    let small_ball = IterationConfig { delta: Some(1e-6), ..Default::default() };
    assert!(matches!(solve_irrotational(&data, &bg, res, &small_ball), Err(Error::IterateEscapedSet(_))));
    let rot = small_data(16, 1e-3, 4, true);
    assert!(matches!(solve_irrotational(&rot, &bg, res, &IterationConfig::default()), Err(Error::NotApplicable(_))));
    let mut odd = rot.clone();
    odd.v_en.coeffs[0] = 1e-3;
    assert!(matches!(solve_rotational(&odd, &bg, res, &IterationConfig::default()), Err(Error::SymmetryViolation(_))));
}

#[test]
fn calibration_follows_the_radius_relations() {
    let bg = background(&equilibrium(), LEN, 129);
    let data = small_data(16, 1e-3, 5, true);
    let mut cfg = IterationConfig::default();
    let r = cfg.calibrate(&bg, Resolution::default(), &data).unwrap();
    assert!((r.delta_e - 2.0 * r.c_star_star * r.sigma).abs() < 1e-15);
    assert!((r.delta_p - (12.0 * r.c_star * r.delta_e + 4.0 * r.c_star * r.sigma)).abs() < 1e-14);
    assert!((r.delta_v - 2.0 * r.c_star * r.delta_e).abs() < 1e-15);
    assert!((r.delta - 0.5 * (1.0 / r.c_star).min(r.delta1)).abs() < 1e-15);
    // Background transport of an x2 profile: ||Y|| = sqrt(L) ||s||.
    assert!((r.c_star_star - LEN.sqrt()).abs() < 1e-6, "{}", r.c_star_star);
    assert_eq!(cfg.c_star, Some(r.c_star));
}

#[test]
fn rotational_reduces_to_potential_flow() {
    let bg = background(&accelerating(), LEN, 513);
    let res = Resolution::default();
    let cfg = IterationConfig::default();
    let data = small_data(16, 1e-3, 3, false);
    let a = solve_irrotational(&data, &bg, res, &cfg).unwrap();
    let b = solve_rotational(&data, &bg, res, &cfg).unwrap();
    assert!(h1_norm(&b.phi) < 1e-9 && h1_norm(&b.y) < 1e-9);
    assert!(diff(&a.psi, &b.psi).hypot(diff(&a.big_psi, &b.big_psi)) < 1e-8);
}

#[test]
fn rotational_physics_and_linear_response() {
    let bg = background(&equilibrium(), LEN, 513);
    let res = Resolution::default();
    let cfg = IterationConfig::default();
    let mut data = BoundaryData::zero(16);
    data.s_en = CosineSeries::new(vec![0.0, 1e-3, -5e-4, 0.0, 2e-4]);
    data.v_en = SineSeries::new(vec![0.0, 3e-4, 0.0, -1e-4]);
    let s = solve_rotational(&data, &bg, res, &cfg).unwrap();
    let d = &s.diagnostics;
    assert!(d.vorticity_residual < 1e-5, "{d:?}");
    assert!(d.transport_residual < 1e-5, "{d:?}");
    assert!(d.flux_drift < 1e-6, "{d:?}");
    assert!(d.max_k < 1e-8, "{d:?}");
    assert!(d.poisson_residual < 1e-6, "{d:?}");
    assert!(d.vorticity_consistency < 1e-5, "{d:?}");
    assert!(h1_norm(&s.phi) > 0.0);

    let mut half = data.clone();
    half.s_en = data.s_en.clone();
    for c in half.s_en.coeffs.iter_mut() {
        *c *= 0.5;
    }
    let t = solve_rotational(&half, &bg, res, &cfg).unwrap();
    let rphi = h1_norm(&t.phi) / h1_norm(&s.phi);
    let ry = h1_norm(&t.y) / h1_norm(&s.y);
    assert!((rphi - 0.5).abs() < 0.05 && (ry - 0.5).abs() < 0.05, "{rphi} {ry}");
}

fn background_momentum(n1: usize, n2: usize, j0: f64) -> Vec<Vec<f64>> {
    vec![vec![j0; n2]; n1]
}

#[test]
fn transport_closed_forms() {
    let grid = X2Grid::new(257);
    let j0 = 2f64.sqrt();
    let m1 = background_momentum(65, 257, j0);
    let s = CosineSeries::new(vec![0.0, 1e-3, 0.0, -2e-3]);
    let t = transport_solve(&m1, &grid, &s, 1e-6).unwrap();
    for j in 0..257 {
        assert!((t.map.w0[j] - j0 * (grid.x[j] + 1.0)).abs() < 1e-13);
    }
    for i in 0..65 {
        for j in 0..257 {
            assert!((t.map.l[i][j] - grid.x[j]).abs() < 1e-10);
            assert!((t.y[i][j] - s.eval(grid.x[j])).abs() < 1e-10);
        }
    }
    let zero = transport_solve(&m1, &grid, &CosineSeries::zero(4), 1e-6).unwrap();
    assert!(zero.y.iter().flatten().all(|v| *v == 0.0));
}

#[test]
fn inlet_map_is_the_identity_for_a_sheared_inflow() {
    let grid = X2Grid::new(257);
    let col: Vec<f64> = grid.x.iter().map(|x| 1.0 + 0.3 * (std::f64::consts::PI * x).cos()).collect();
    let m1 = vec![col; 9];
    let t = transport_solve(&m1, &grid, &CosineSeries::zero(2), 1e-6).unwrap();
    for j in 0..257 {
        assert!((t.map.l[0][j] - grid.x[j]).abs() < 1e-12);
    }
}

#[test]
fn transport_rejects_bad_momentum() {
    let grid = X2Grid::new(65);
    let mut m1 = background_momentum(17, 65, 1.0);
    for row in m1.iter_mut().skip(5).take(3) {
        for v in row.iter_mut().skip(20).take(4) {
            *v = -0.1;
        }
    }
    let e = transport_solve(&m1, &grid, &CosineSeries::zero(2), 1e-6).unwrap_err();
    assert!(matches!(e, Error::NonMonotoneStream { i: 5, j: 20, .. }), "{e:?}");
    let mut m1 = background_momentum(17, 65, 1.0);
    for v in m1[9].iter_mut() {
        *v = 1.01;
    }
    assert!(matches!(transport_solve(&m1, &grid, &CosineSeries::zero(2), 1e-6), Err(Error::DivergenceTooLarge(_))));
}

proptest! {
    #[test]
    fn lagrangian_map_is_monotone_and_fixes_walls(seed in 0u64..500) {
        let grid = X2Grid::new(65);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.2..0.2)).collect();
        let n1 = 9;
        // Columns with equal total flux: the cosine modes k >= 1 integrate to zero.
        let m1: Vec<Vec<f64>> = (0..n1)
            .map(|i| {
                let t = i as f64 / (n1 - 1) as f64;
                grid.x.iter().map(|x| {
                    1.0 + (1..4).map(|k| c[k] * (1.0 - 0.5 * t) * (k as f64 * std::f64::consts::PI * x).cos()).sum::<f64>()
                }).collect()
            })
            .collect();
        let t = transport_solve(&m1, &grid, &CosineSeries::zero(1), 1e-8).unwrap();
        for row in &t.map.l {
            prop_assert!((row[0] + 1.0).abs() < 1e-12 && (row[64] - 1.0).abs() < 1e-9);
            for w in row.windows(2) {
                prop_assert!(w[1] > w[0]);
            }
        }
    }
}

#[test]
fn field_shapes() {
    let bg = background(&equilibrium(), LEN, 65);
    let res = Resolution { n2: 129, m: 8 };
    let s = solve_irrotational(&BoundaryData::zero(8), &bg, res, &IterationConfig::default()).unwrap();
    assert_eq!(s.psi.basis, Basis::Cosine);
    assert_eq!(s.phi.basis, Basis::Sine);
    assert_eq!(s.fields.rho.len(), 65);
    assert_eq!(s.fields.rho[0].len(), 129);
}
