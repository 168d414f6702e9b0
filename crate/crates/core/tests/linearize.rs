use epnozzle::background::integrate_background;
use epnozzle::linearize::*;
use epnozzle::model::{self, GasParams};
use epnozzle::{Background1D, BgPoint};
use proptest::prelude::*;

fn bg() -> Background1D {
    let gp = GasParams::new(2.0, 2f64.sqrt(), 1.0, 0.5, 0.6, 0.2).unwrap();
    integrate_background(&gp, 0.8, 33).unwrap()
}

fn gp14() -> Background1D {
    let gp = GasParams::new(1.4, 1.0, 1.0, 0.4, 0.55, -0.1).unwrap();
    integrate_background(&gp, 0.5, 33).unwrap()
}

/// B = p.q / (c^2 - q1^2) with c^2 written out, evaluated independently.
fn literal_b(gamma: f64, z: f64, p: [f64; 2], q: [f64; 2]) -> f64 {
    let c2 = (gamma - 1.0) * z - 0.5 * (gamma - 1.0) * (q[0] * q[0] + q[1] * q[1]);
    (p[0] * q[0] + p[1] * q[1]) / (c2 - q[0] * q[0])
}

fn literal_f1(gp: &GasParams, b: &BgPoint, pt: &PerturbationPoint) -> f64 {
    let g = gp.gamma();
    let b_bar = literal_b(g, b.big_phi0, [b.e, 0.0], [b.u, 0.0]);
    let bar = BarPoint::at(gp, b.u, b.e);
    (b_bar + bar.a1 * pt.q[0] + bar.b1 * pt.p[0] + bar.b2 * pt.z)
        - literal_b(g, b.big_phi0 + pt.z, [b.e + pt.p[0], pt.p[1]], [b.u + pt.q[0], pt.q[1]])
}

#[test]
fn background_sound_speed_from_bernoulli_identity() {
    for bg in [bg(), gp14()] {
        let gp = bg.gp;
        for i in 0..bg.n1() {
            let c2 = model::sound_speed_sq(gp.gamma(), bg.big_phi0[i], [bg.u[i], 0.0]).unwrap();
            let direct = gp.gamma() * gp.s0() * bg.rho[i].powf(gp.gamma() - 1.0);
            assert!((c2 - direct).abs() < 1e-9 * direct);
            let (a12, a22) = second_order_coeffs(gp.gamma(), bg.big_phi0[i], [bg.u[i], 0.0]).unwrap();
            assert_eq!(a12, 0.0);
            let bar = BarPoint::at(&gp, bg.u[i], bg.e[i]);
            assert!((a22 - bar.a22).abs() < 1e-8 * bar.a22);
        }
    }
}

#[test]
fn bar_derivatives_match_finite_differences() {
    let bg = gp14();
    let gp = bg.gp;
    let g = gp.gamma();
    let h = 1e-5;
    for i in [0, 10, 32] {
        let b = bg.point(i);
        let bar = BarPoint::at(&gp, b.u, b.e);
        let z = b.big_phi0;
        let p = [b.e, 0.0];
        let q = [b.u, 0.0];
        let d_q1 = (literal_b(g, z, p, [q[0] + h, 0.0]) - literal_b(g, z, p, [q[0] - h, 0.0])) / (2.0 * h);
        let d_p1 = (literal_b(g, z, [p[0] + h, 0.0], q) - literal_b(g, z, [p[0] - h, 0.0], q)) / (2.0 * h);
        let d_z = (literal_b(g, z + h, p, q) - literal_b(g, z - h, p, q)) / (2.0 * h);
        assert!((d_q1 - bar.a1).abs() < 1e-6 * bar.a1.abs().max(1.0));
        assert!((d_p1 - bar.b1).abs() < 1e-6 * bar.b1.abs().max(1.0));
        assert!((d_z - bar.b2).abs() < 1e-6 * bar.b2.abs().max(1.0));
        let h0 = |z: f64, q1: f64| model::density_law_isentropic(&gp, z, [q1, 0.0]).unwrap();
        let dh_z = (h0(z + h, q[0]) - h0(z - h, q[0])) / (2.0 * h);
        let dh_q = (h0(z, q[0] + h) - h0(z, q[0] - h)) / (2.0 * h);
        assert!((dh_z - bar.h1).abs() < 1e-6);
        assert!((dh_q - bar.h2).abs() < 1e-6);
    }
}

#[test]
fn f1_has_no_linear_part() {
    let bg = bg();
    let b = bg.point(16);
    let h = 1e-5;
    let dirs: [PerturbationPoint; 5] = [
        PerturbationPoint::potential(1.0, [0.0, 0.0], [0.0, 0.0]),
        PerturbationPoint::potential(0.0, [1.0, 0.0], [0.0, 0.0]),
        PerturbationPoint::potential(0.0, [0.0, 1.0], [0.0, 0.0]),
        PerturbationPoint::potential(0.0, [0.0, 0.0], [1.0, 0.0]),
        PerturbationPoint::potential(0.0, [0.0, 0.0], [0.0, 1.0]),
    ];
    for d in dirs {
        let scaled = |s: f64| PerturbationPoint::potential(s * d.z, [s * d.p[0], s * d.p[1]], [s * d.q[0], s * d.q[1]]);
        let fd = (rhs_f1(&bg.gp, &b, &scaled(h)).unwrap() - rhs_f1(&bg.gp, &b, &scaled(-h)).unwrap()) / (2.0 * h);
        assert!(fd.abs() < 1e-6, "directional derivative {fd}");
        let fd2 = (rhs_f2(&bg.gp, &b, &scaled(h), 0.0).unwrap() - rhs_f2(&bg.gp, &b, &scaled(-h), 0.0).unwrap())
            / (2.0 * h);
        assert!(fd2.abs() < 1e-6, "f2 directional derivative {fd2}");
    }
}

#[test]
fn vortical_source_matches_reference_formula() {
    let bg = bg();
    let gp = bg.gp;
    let b = bg.point(7);
    let mut pt = PerturbationPoint::default();
    pt.grad_xi = [0.0, 0.3];
    let (_, _, f3) = rotational_rhs(&gp, &b, &pt, 0.0).unwrap();
    let expect = -0.3 * b.rho.powf(gp.gamma() - 1.0) / ((gp.gamma() - 1.0) * b.u);
    assert!((f3 - expect).abs() < 1e-9 * expect.abs());
    pt.grad_xi = [0.0, 0.6];
    let (_, _, f3b) = rotational_rhs(&gp, &b, &pt, 0.0).unwrap();
    assert!((f3b / f3 - 2.0).abs() < 1e-12);
}

#[test]
fn wall_samples_have_vanishing_mixed_coefficient() {
    let bg = bg();
    let b = bg.point(3);
    // On the walls q2 = 0 and r1 = 0 (phi vanishes along them).
    let mut pt = PerturbationPoint::potential(0.01, [0.02, 0.0], [0.03, 0.0]);
    pt.r = [0.0, 0.004];
    let rc = rotational_coeffs(&bg.gp, &b, &pt).unwrap();
    assert!(rc.a12.abs() < 1e-12);
}

#[test]
fn sonic_guard_and_stagnation_guard() {
    let bg = bg();
    let b = bg.point(0);
    let c = b.c2(&bg.gp).sqrt();
    // Choose q1 so that u1 hits the local sound speed of the perturbed state.
    let mut lo = 0.0;
    let mut hi = b.u;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let u1 = b.u - mid;
        let c2 = (bg.gp.gamma() - 1.0) * (b.big_phi0 - 0.5 * u1 * u1);
        if c2 - u1 * u1 < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let pt = PerturbationPoint::potential(0.0, [0.0, 0.0], [-0.5 * (lo + hi), 0.0]);
    assert!(matches!(rhs_f1(&bg.gp, &b, &pt), Err(epnozzle::Error::SonicDenominator(_))));
    assert!(c > 0.0);
}

#[test]
fn sampled_box_margins_are_positive() {
    let bg = bg();
    let d0 = default_delta0(&bg);
    let (k0, k1) = admissibility_margins(&bg, d0, 3).unwrap();
    assert!(k0 > 0.0 && k1 > 0.0, "{k0} {k1}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn f1_codings_agree(i in 0usize..33, z in -0.05f64..0.05, p1 in -0.05f64..0.05, p2 in -0.05f64..0.05,
                        q1 in -0.05f64..0.05, q2 in -0.05f64..0.05) {
        let bg = bg();
        let b = bg.point(i);
        let pt = PerturbationPoint::potential(z, [p1, p2], [q1, q2]);
        let a = rhs_f1(&bg.gp, &b, &pt).unwrap();
        let l = literal_f1(&bg.gp, &b, &pt);
        prop_assert!((a - l).abs() < 1e-12, "{a} vs {l}");
        let (f1r, f2r, f3r) = rotational_rhs(&bg.gp, &b, &pt, 0.0).unwrap();
        prop_assert!((f1r - a).abs() < 1e-12);
        prop_assert!((f2r - rhs_f2(&bg.gp, &b, &pt, 0.0).unwrap()).abs() < 1e-14);
        prop_assert_eq!(f3r, 0.0);
        let (a12, a22) = perturbed_coeffs(&bg.gp, &b, &pt).unwrap();
        let rc = rotational_coeffs(&bg.gp, &b, &pt).unwrap();
        prop_assert!((rc.a12 - a12).abs() < 1e-15 && (rc.a22 - a22).abs() < 1e-15);
    }

    #[test]
    fn exact_equations_at_rotational_points(i in 0usize..33, z in -0.05f64..0.05, p1 in -0.05f64..0.05,
                        q1 in -0.05f64..0.05, q2 in -0.05f64..0.05, r1 in -0.05f64..0.05, r2 in -0.05f64..0.05,
                        xi in -0.05f64..0.05, y1 in -0.2f64..0.2, y2 in -0.2f64..0.2, m11 in -0.2f64..0.2,
                        m12 in -0.2f64..0.2, m21 in -0.2f64..0.2) {
        // psi11 + 2 a12 psi12 - a22 psi22 + abar1 psi1 + bbar1 Psi1 + bbar2 Psi = f1 must be the
        // full non-divergence mass equation divided by c^2 - u1^2.
        let bg = bg();
        let gp = bg.gp;
        let b = bg.point(i);
        let pt = PerturbationPoint { z, p: [p1, 0.0], q: [q1, q2], r: [r1, r2], xi, grad_xi: [y1, y2],
                                     mm: [[m11, m12], [m21, -m11]] };
        let (f1, _, _) = rotational_rhs(&gp, &b, &pt, 0.0).unwrap();
        let bar = BarPoint::at(&gp, b.u, b.e);
        let u = [b.u + q1 + r2, q2 - r1];
        let zeta = b.big_phi0 + z - 0.5 * (u[0] * u[0] + u[1] * u[1]);
        let c2 = (gp.gamma() - 1.0) * zeta;
        let beta = c2 - u[0] * u[0];
        let mm_uu = m11 * u[0] * u[0] + (m12 + m21) * u[0] * u[1] - m11 * u[1] * u[1];
        let g = u[0] * (b.e + p1) - mm_uu - zeta / (gp.s0() + xi) * (u[0] * y1 + u[1] * y2);
        // phi0'' carries the background part; the rest is the linear left side.
        let lhs_rest = -(bar.a1 * q1 + bar.b1 * p1 + bar.b2 * z) + f1;
        let phi0_dd = -(b.u * b.e) / (b.c2(&gp) - b.u * b.u);
        prop_assert!((lhs_rest + (g / beta) + phi0_dd).abs() < 1e-10);
    }
}
