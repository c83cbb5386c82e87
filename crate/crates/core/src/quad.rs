//! Adaptive Gauss–Legendre quadrature on intervals.

use crate::error::Result;

// 7-point Gauss–Legendre nodes and weights on [-1, 1].
const NODES: [f64; 7] = [
    -0.949_107_912_342_758_5,
    -0.741_531_185_599_394_4,
    -0.405_845_151_377_397_2,
    0.0,
    0.405_845_151_377_397_2,
    0.741_531_185_599_394_4,
    0.949_107_912_342_758_5,
];
const WEIGHTS: [f64; 7] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
    0.381_830_050_505_118_9,
    0.279_705_391_489_276_7,
    0.129_484_966_168_869_7,
];

const MAX_DEPTH: usize = 30;

fn panel<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, b: f64) -> Result<f64> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in NODES.iter().zip(WEIGHTS.iter()) {
        acc += w * f(mid + half * x)?;
    }
    Ok(acc * half)
}

/// `∫_a^b f` to absolute tolerance `tol` by recursive bisection.
/// `b < a` is allowed and flips the sign.
pub fn integrate<F: Fn(f64) -> Result<f64>>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let whole = panel(&f, a, b)?;
    recurse(&f, a, b, whole, tol, 0)
}

fn recurse<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: usize) -> Result<f64> {
    let m = 0.5 * (a + b);
    let left = panel(f, a, m)?;
    let right = panel(f, m, b)?;
    let split = left + right;
    if (split - whole).abs() <= tol || depth >= MAX_DEPTH {
        return Ok(split);
    }
    Ok(recurse(f, a, m, left, 0.5 * tol, depth + 1)? + recurse(f, m, b, right, 0.5 * tol, depth + 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_transcendental() {
        let v = integrate(|x| Ok(x * x), 0.0, 3.0, 1e-12).unwrap();
        assert!((v - 9.0).abs() < 1e-12);
        let v = integrate(|x| Ok(x.sin()), 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let v = integrate(|x| Ok(x.exp()), 1.0, -1.0, 1e-12).unwrap();
        assert!((v + (1f64.exp() - (-1f64).exp())).abs() < 1e-12);
        let v = integrate(|x| Ok(1.0 / (1.0 + 100.0 * x * x)), -1.0, 1.0, 1e-12).unwrap();
        assert!((v - 0.2 * 10f64.atan()).abs() < 1e-11);
    }
}
