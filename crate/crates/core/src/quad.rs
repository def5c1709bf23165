//! Composite quadrature on possibly graded grids.

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}

/// Running trapezoid integral, starting at zero on the first node.
pub fn cumulative_trapezoid<T>(x: &[f64], y: &[T]) -> Vec<T>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let mut out = Vec::with_capacity(y.len());
    if y.is_empty() {
        return out;
    }
    let mut acc = y[0] * 0.0;
    out.push(acc);
    for j in 1..y.len() {
        acc = acc + (y[j - 1] + y[j]) * (0.5 * (x[j] - x[j - 1]));
        out.push(acc);
    }
    out
}

/// Running trapezoid with the Euler-Maclaurin endpoint correction, exact for
/// cubics on every interval. Needs the integrand's derivative at the nodes.
pub fn cumulative_hermite<T>(x: &[f64], y: &[T], dy: &[T]) -> Vec<T>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let mut out = Vec::with_capacity(y.len());
    if y.is_empty() {
        return out;
    }
    let mut acc = y[0] * 0.0;
    out.push(acc);
    for j in 1..y.len() {
        let h = x[j] - x[j - 1];
        acc = acc + (y[j - 1] + y[j]) * (0.5 * h) - (dy[j] - dy[j - 1]) * (h * h / 12.0);
        out.push(acc);
    }
    out
}

/// Gauss-Legendre nodes and weights on [a, b] (five points).
pub fn gauss5(a: f64, b: f64) -> [(f64, f64); 5] {
    const X: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683_1,
        0.0,
        0.538_469_310_105_683_1,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.236_926_885_056_189_1,
        0.478_628_670_499_366_5,
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
    ];
    let m = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 5];
    for k in 0..5 {
        out[k] = (m + h * X[k], h * W[k]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_exact_for_cubics() {
        let x = [0.0, 0.4, 1.1, 2.0];
        let y: Vec<f64> = x.iter().map(|t| t * t * t - t).collect();
        let dy: Vec<f64> = x.iter().map(|t| 3.0 * t * t - 1.0).collect();
        let c = cumulative_hermite(&x, &y, &dy);
        assert!((c[3] - (4.0 - 2.0)).abs() < 1e-13);
    }

    #[test]
    fn gauss_exact_degree_nine() {
        let s: f64 = gauss5(0.0, 2.0).iter().map(|(x, w)| w * x.powi(9)).sum();
        assert!((s - 2f64.powi(10) / 10.0).abs() < 1e-10);
    }
}
