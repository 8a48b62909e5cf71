//! Quadrature rules on the unit interval and the reference triangle.

use std::f64::consts::PI;

/// Gauss-Legendre rule on `[0, 1]`: `(points, weights)` with weights summing
/// to one. Exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre needs at least one point");
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Chebyshev-type initial guess for the i-th root on [-1, 1]
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
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
        points[i] = 0.5 * (1.0 - x);
        points[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (points, weights)
}

/// Legendre polynomial `P_n(x)` and its derivative.
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

/// Three-point Gauss rule on `[0, 1]` used for edge integrals.
pub const EDGE_GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_3, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// Barycentric points and weights (summing to one) of a symmetric triangle rule.
pub type TriangleRule = &'static [([f64; 3], f64)];

/// Degree-2 rule with three interior points.
pub const TRI_DEGREE2: TriangleRule = &[
    ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
];

const R7_A1: f64 = 0.059_715_871_789_769_82;
const R7_B1: f64 = 0.470_142_064_105_115_1;
const R7_A2: f64 = 0.797_426_985_353_087_3;
const R7_B2: f64 = 0.101_286_507_323_456_3;
const R7_W0: f64 = 0.225;
const R7_W1: f64 = 0.132_394_152_788_506_2;
const R7_W2: f64 = 0.125_939_180_544_827_1;

/// Seven-point degree-5 rule (Radon).
pub const TRI_DEGREE5: TriangleRule = &[
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], R7_W0),
    ([R7_A1, R7_B1, R7_B1], R7_W1),
    ([R7_B1, R7_A1, R7_B1], R7_W1),
    ([R7_B1, R7_B1, R7_A1], R7_W1),
    ([R7_A2, R7_B2, R7_B2], R7_W2),
    ([R7_B2, R7_A2, R7_B2], R7_W2),
    ([R7_B2, R7_B2, R7_A2], R7_W2),
];
