//! Finite-difference weights on arbitrary (non-uniform) grids.

/// Fornberg's recursion: weights `w[m][j]` such that
/// `f^{(m)}(z) ≈ Σ_j w[m][j] f(xs[j])` for `m = 0..=order`.
pub fn fornberg(z: f64, xs: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Indices of a `width`-point window around `i`, shifted to stay inside `0..n`.
pub fn window(i: usize, n: usize, width: usize) -> std::ops::Range<usize> {
    let width = width.min(n);
    let start = i.saturating_sub(width / 2).min(n - width);
    start..start + width
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_nonuniform_matches_closed_form() {
        let (h1, h2) = (0.1, 0.25);
        let w = fornberg(0.0, &[-h1, 0.0, h2], 2);
        // second derivative: 2/(h1 h2 (h1+h2)) * (h2 f_- - (h1+h2) f_0 + h1 f_+)
        let k = 2.0 / (h1 * h2 * (h1 + h2));
        assert!((w[2][0] - k * h2).abs() < 1e-12);
        assert!((w[2][1] + k * (h1 + h2)).abs() < 1e-12);
        assert!((w[2][2] - k * h1).abs() < 1e-12);
    }

    #[test]
    fn exact_on_polynomials() {
        let xs = [0.0, 0.13, 0.3, 0.42, 0.61];
        let f = |x: f64| 3.0 * x.powi(4) - x.powi(3) + 2.0 * x - 1.0;
        let df = |x: f64| 12.0 * x.powi(3) - 3.0 * x * x + 2.0;
        let z = 0.3;
        let w = fornberg(z, &xs, 1);
        let approx: f64 = xs.iter().zip(&w[1]).map(|(x, c)| c * f(*x)).sum();
        assert!((approx - df(z)).abs() < 1e-10);
    }

    #[test]
    fn windows_clamp() {
        assert_eq!(window(0, 10, 5), 0..5);
        assert_eq!(window(5, 10, 5), 3..8);
        assert_eq!(window(9, 10, 5), 5..10);
        assert_eq!(window(1, 3, 5), 0..3);
    }
}
