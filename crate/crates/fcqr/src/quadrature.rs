//! Quadrature helpers: Gauss–Legendre nodes for exact piecewise-polynomial
//! integration and composite rules on observation grids.

/// Gauss–Legendre nodes and weights on [-1, 1].
///
/// Newton iteration on the Legendre polynomial; accurate to machine
/// precision for the small node counts used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "at least one quadrature node required");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess for the i-th root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite trapezoid weights for an arbitrary strictly increasing grid.
pub fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let g = grid.len();
    let mut w = vec![0.0; g];
    for i in 0..g - 1 {
        let h = grid[i + 1] - grid[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    w
}

/// Composite Simpson weights for a uniform grid with an odd number of points.
///
/// Returns `None` when the grid has even length or is not uniform.
pub fn simpson_weights(grid: &[f64]) -> Option<Vec<f64>> {
    let g = grid.len();
    if g < 3 || g % 2 == 0 {
        return None;
    }
    let h = (grid[g - 1] - grid[0]) / (g - 1) as f64;
    let tol = 1e-9 * h.max(1e-300);
    for i in 0..g - 1 {
        if ((grid[i + 1] - grid[i]) - h).abs() > tol {
            return None;
        }
    }
    let mut w = vec![0.0; g];
    w[0] = h / 3.0;
    w[g - 1] = h / 3.0;
    for (i, wi) in w.iter_mut().enumerate().take(g - 1).skip(1) {
        *wi = if i % 2 == 1 { 4.0 * h / 3.0 } else { 2.0 * h / 3.0 };
    }
    Some(w)
}

/// Integrate `f` over [0, 1] with composite Simpson on `points` nodes
/// (forced odd).
pub fn simpson_integral(f: impl Fn(f64) -> f64, points: usize) -> f64 {
    let g = if points % 2 == 0 { points + 1 } else { points };
    let h = 1.0 / (g - 1) as f64;
    let mut acc = f(0.0) + f(1.0);
    for i in 1..g - 1 {
        let c = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += c * f(i as f64 * h);
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        // n nodes are exact through degree 2n-1.
        for n in 1..=8 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let integral: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(&xi, &wi)| wi * xi.powi(deg as i32))
                    .sum();
                let exact = if deg % 2 == 0 {
                    2.0 / (deg as f64 + 1.0)
                } else {
                    0.0
                };
                assert!(
                    (integral - exact).abs() < 1e-13,
                    "n={n} deg={deg}: {integral} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn trapezoid_weights_sum_to_span() {
        let grid: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
        let w = trapezoid_weights(&grid);
        let total: f64 = w.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_rejects_even_or_nonuniform_grids() {
        let even: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
        assert!(simpson_weights(&even).is_none());
        let nonuniform = [0.0, 0.3, 0.5, 0.8, 1.0];
        assert!(simpson_weights(&nonuniform).is_none());
    }

    #[test]
    fn simpson_integral_matches_analytic_value() {
        let v = simpson_integral(|t| (2.0 * std::f64::consts::PI * t).sin().powi(2), 1001);
        assert!((v - 0.5).abs() < 1e-10);
    }
}
