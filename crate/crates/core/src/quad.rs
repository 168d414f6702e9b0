//! Small quadrature helpers shared by the 1D and x2 computations.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [0, 1].
pub fn gauss_legendre01(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = 0.5 * (1.0 - x);
        xs[n - 1 - i] = 0.5 * (1.0 + x);
        ws[i] = 0.5 * w;
        ws[n - 1 - i] = 0.5 * w;
    }
    (xs, ws)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite trapezoid weights for `n` uniform nodes spanning an interval of length `len`.
pub fn trapezoid_weights(n: usize, len: f64) -> Vec<f64> {
    let h = len / (n - 1) as f64;
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}

/// Composite Simpson weights (n odd), used for x1 integrals of smooth profiles.
pub fn simpson_weights(n: usize, len: f64) -> Vec<f64> {
    assert!(n >= 3 && n % 2 == 1, "Simpson needs an odd node count");
    let h = len / (n - 1) as f64;
    let mut w = vec![0.0; n];
    for (i, wi) in w.iter_mut().enumerate() {
        *wi = if i == 0 || i == n - 1 {
            h / 3.0
        } else if i % 2 == 1 {
            4.0 * h / 3.0
        } else {
            2.0 * h / 3.0
        };
    }
    w
}

/// Weights for x1 integrals: Simpson when the node count allows it, trapezoid otherwise.
pub fn x1_weights(n: usize, len: f64) -> Vec<f64> {
    if n >= 3 && n % 2 == 1 {
        simpson_weights(n, len)
    } else {
        trapezoid_weights(n, len)
    }
}

/// Centered first difference with second-order one-sided ends.
pub fn d1(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    if n < 3 {
        if n == 2 {
            d[0] = (f[1] - f[0]) / h;
            d[1] = d[0];
        }
        return d;
    }
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    for i in 1..n - 1 {
        d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    }
    d
}

/// Fourth-order first difference (second-order one-sided at the two nodes nearest each end).
pub fn d1_high(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    if n < 7 {
        return d1(f, h);
    }
    let mut d = vec![0.0; n];
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h);
    d[n - 1] = (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5])
        / (12.0 * h);
    d[n - 2] = (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) / (12.0 * h);
    for i in 2..n - 2 {
        d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
    }
    d
}

/// Fourth-order second difference on interior nodes 2..n-3; other entries are NaN.
pub fn d2_high_interior(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![f64::NAN; n];
    for i in 2..n.saturating_sub(2) {
        d[i] = (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) / (12.0 * h * h);
    }
    d
}

/// Fourth-order second difference everywhere, one-sided six-point stencils at the ends.
pub fn d2_high(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 6, "d2_high needs at least 6 nodes");
    const E0: [f64; 6] = [45.0, -154.0, 214.0, -156.0, 61.0, -10.0];
    const E1: [f64; 6] = [10.0, -15.0, -4.0, 14.0, -6.0, 1.0];
    let s = 12.0 * h * h;
    let mut d = d2_high_interior(f, h);
    let fwd = |c: &[f64; 6], at: usize| (0..6).map(|t| c[t] * f[at + t]).sum::<f64>() / s;
    let bwd = |c: &[f64; 6], at: usize| (0..6).map(|t| c[t] * f[at - t]).sum::<f64>() / s;
    d[0] = fwd(&E0, 0);
    d[1] = fwd(&E1, 0);
    d[n - 1] = bwd(&E0, n - 1);
    d[n - 2] = bwd(&E1, n - 1);
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre01(12);
        for p in 0..23 {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            assert!((s - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "degree {p}: {s}");
        }
    }

    #[test]
    fn high_order_differences() {
        let n = 101;
        let h = 1.0 / (n - 1) as f64;
        let f: Vec<f64> = (0..n).map(|i| (i as f64 * h).sin()).collect();
        let d = d1_high(&f, h);
        let dd = d2_high_interior(&f, h);
        for i in 0..n {
            assert!((d[i] - (i as f64 * h).cos()).abs() < 1e-7);
        }
        for i in 2..n - 2 {
            assert!((dd[i] + (i as f64 * h).sin()).abs() < 1e-7);
        }
        let full = d2_high(&f, h);
        for i in 0..n {
            assert!((full[i] + (i as f64 * h).sin()).abs() < 1e-6, "{i}: {}", full[i]);
        }
    }
}
