//! One-dimensional quadrature building blocks.
//!
//! Fixed-order Gauss-Legendre panels, a tolerance-driven adaptive splitter,
//! and a dyadic scheme for integrands with an integrable power singularity
//! at the left endpoint. These are the primitives behind the Green-kernel
//! integrals and the regularized operator evaluation.

/// 16-point Gauss-Legendre nodes on (-1, 1), positive half.
const GL16_X: [f64; 8] = [
    0.0950125098376374,
    0.2816035507792589,
    0.4580167776572274,
    0.6178762444026438,
    0.755404408355003,
    0.8656312023878318,
    0.9445750230732326,
    0.9894009349916499,
];
const GL16_W: [f64; 8] = [
    0.1894506104550685,
    0.1826034150449236,
    0.1691565193950025,
    0.1495959888165767,
    0.1246289712555339,
    0.0951585116824928,
    0.0622535239386479,
    0.0271524594117541,
];

/// 16-point Gauss-Legendre rule on [a, b].
pub fn gauss16<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let mut acc = 0.0;
    for k in 0..8 {
        let dx = r * GL16_X[k];
        acc += GL16_W[k] * (f(c - dx) + f(c + dx));
    }
    acc * r
}

/// Adaptive panel integration on [a, b]: bisect until the two-half estimate
/// agrees with the whole-panel estimate or `max_depth` is reached.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let left = gauss16(f, a, m);
        let right = gauss16(f, m, b);
        let err = (left + right - whole).abs();
        if err <= tol || depth == 0 {
            left + right
        } else {
            rec(f, a, m, left, 0.5 * tol, depth - 1) + rec(f, m, b, right, 0.5 * tol, depth - 1)
        }
    }
    rec(f, a, b, gauss16(f, a, b), tol, max_depth)
}

/// Integral over (0, b] of an integrand with an integrable singularity at 0:
/// geometric panels [b/2^{k+1}, b/2^k] are accumulated until the last panel
/// contributes less than `tol` (or `max_halvings` is hit). The integrand is
/// never evaluated at 0.
pub fn dyadic_to_zero<F: Fn(f64) -> f64>(f: &F, b: f64, tol: f64, max_halvings: u32) -> f64 {
    let mut acc = 0.0;
    let mut hi = b;
    for _ in 0..max_halvings {
        let lo = 0.5 * hi;
        let piece = gauss16(f, lo, hi);
        acc += piece;
        hi = lo;
        if piece.abs() < tol && hi < 1e-8 * b {
            break;
        }
    }
    acc
}
