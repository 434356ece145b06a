//! Small quadrature helpers for uniform and non-uniform grids.

/// Trapezoidal integral of `y` over the (possibly non-uniform) grid `x`.
pub fn trapz(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| (xs[1] - xs[0]) * (ys[0] + ys[1]) * 0.5)
        .sum()
}

/// Progressive trapezoidal integral: `out[i] = ∫_{x[0]}^{x[i]} y dx`.
pub fn cumtrapz(x: &[f64], y: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), y.len());
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..x.len() {
        acc += (x[i] - x[i - 1]) * (y[i] + y[i - 1]) * 0.5;
        out.push(acc);
    }
    out
}

/// Composite Simpson integral on a uniform grid with spacing `dx`.
///
/// Falls back to a trapezoid on the final interval when the point count is
/// even (odd interval count).
pub fn simpson_uniform(y: &[f64], dx: f64) -> f64 {
    let n = y.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return dx * (y[0] + y[1]) * 0.5;
    }
    let pairs = (n - 1) / 2;
    let mut acc = 0.0;
    for k in 0..pairs {
        let i = 2 * k;
        acc += dx / 3.0 * (y[i] + 4.0 * y[i + 1] + y[i + 2]);
    }
    if (n - 1) % 2 == 1 {
        acc += dx * (y[n - 2] + y[n - 1]) * 0.5;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapz_linear_exact() {
        let x: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|&t| 3.0 * t + 1.0).collect();
        let exact = 1.5 + 1.0;
        assert!((trapz(&x, &y) - exact).abs() < 1e-14);
    }

    #[test]
    fn cumtrapz_matches_trapz_at_end() {
        let x: Vec<f64> = (0..257).map(|i| i as f64 / 256.0).collect();
        let y: Vec<f64> = x.iter().map(|&t| (3.0 * t).sin()).collect();
        let c = cumtrapz(&x, &y);
        assert!((c[c.len() - 1] - trapz(&x, &y)).abs() < 1e-15);
    }

    #[test]
    fn simpson_quartic_convergence() {
        // Simpson is exact for cubics; a quartic shows the h^4 error scale.
        let n = 201;
        let dx = 1.0 / (n as f64 - 1.0);
        let y: Vec<f64> = (0..n).map(|i| (i as f64 * dx).powi(4)).collect();
        assert!((simpson_uniform(&y, dx) - 0.2).abs() < 1e-10);
    }
}
