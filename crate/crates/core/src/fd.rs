//! Finite-difference weights on arbitrary nodes.

/// Fornberg weights for derivatives 0..=m at `x0` from the nodes `xs`.
/// Returns `w[k][j]`, the weight of node j in the k-th derivative.
pub fn fornberg(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
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

/// Precomputed first and second derivative stencils on a fixed grid.
#[derive(Clone, Debug)]
pub struct Stencils {
    pub start: Vec<usize>,
    pub d1: Vec<Vec<f64>>,
    pub d2: Vec<Vec<f64>>,
}

impl Stencils {
    /// Stencils of `width` nodes on r[lo..=hi], centered where possible and
    /// shifted inward near the ends of the window.
    pub fn new(r: &[f64], width: usize, lo: usize, hi: usize) -> Self {
        assert!(hi >= lo && hi - lo + 1 >= width && r.len() > hi);
        let half = width / 2;
        let mut start = Vec::with_capacity(r.len());
        let mut d1 = Vec::with_capacity(r.len());
        let mut d2 = Vec::with_capacity(r.len());
        for j in 0..r.len() {
            let jj = j.clamp(lo, hi);
            let s = jj.saturating_sub(half).max(lo).min(hi + 1 - width);
            let w = fornberg(r[j], &r[s..s + width], 2);
            start.push(s);
            d1.push(w[1].clone());
            d2.push(w[2].clone());
        }
        Stencils { start, d1, d2 }
    }

    /// Second-order three-point stencils for interior nodes (ends shifted).
    pub fn central(r: &[f64]) -> Self {
        Self::new(r, 3, 0, r.len() - 1)
    }

    pub fn apply<T>(&self, j: usize, vals: &[T]) -> (T, T)
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let s = self.start[j];
        let mut a = vals[s] * self.d1[j][0];
        let mut b = vals[s] * self.d2[j][0];
        for k in 1..self.d1[j].len() {
            a = a + vals[s + k] * self.d1[j][k];
            b = b + vals[s + k] * self.d2[j][k];
        }
        (a, b)
    }
}

/// Stencils on a grid with r[0] = 0, extended by the mirrored nodes −r_k so
/// that windows near the origin stay centered. Values at the ghost nodes come
/// from a parity map supplied at application time.
#[derive(Clone, Debug)]
pub struct MirrorStencils {
    inner: Stencils,
    ghosts: usize,
}

impl MirrorStencils {
    pub fn new(r: &[f64], width: usize) -> Self {
        assert!(r[0] == 0.0 && r.len() > width);
        let ghosts = width / 2;
        let mut ext: Vec<f64> = (1..=ghosts).rev().map(|k| -r[k]).collect();
        ext.extend_from_slice(r);
        let hi = ext.len() - 1;
        let inner = Stencils::new(&ext, width, 0, hi);
        MirrorStencils { inner, ghosts }
    }

    pub fn apply<T, M>(&self, j: usize, vals: &[T], mirror: M) -> (T, T)
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
        M: Fn(T) -> T,
    {
        let jj = j + self.ghosts;
        let s = self.inner.start[jj];
        let at = |i: usize| if i < self.ghosts { mirror(vals[self.ghosts - i]) } else { vals[i - self.ghosts] };
        let mut a = at(s) * self.inner.d1[jj][0];
        let mut b = at(s) * self.inner.d2[jj][0];
        for k in 1..self.inner.d1[jj].len() {
            a = a + at(s + k) * self.inner.d1[jj][k];
            b = b + at(s + k) * self.inner.d2[jj][k];
        }
        (a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_weights_uniform() {
        let w = fornberg(0.0, &[-1.0, 0.0, 1.0], 2);
        assert!((w[1][0] + 0.5).abs() < 1e-15 && (w[1][2] - 0.5).abs() < 1e-15);
        assert!((w[2][0] - 1.0).abs() < 1e-15 && (w[2][1] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn five_point_exact_on_quartics() {
        let xs = [0.0, 0.3, 0.7, 1.2, 1.8];
        let w = fornberg(0.5, &xs, 2);
        let f = |x: f64| 1.0 + x - 2.0 * x * x + 0.5 * x.powi(3) + 0.25 * x.powi(4);
        let d2 = |x: f64| -4.0 + 3.0 * x + 3.0 * x * x;
        let est: f64 = xs.iter().zip(&w[2]).map(|(x, c)| c * f(*x)).sum();
        assert!((est - d2(0.5)).abs() < 1e-11);
    }

    #[test]
    fn mirrored_stencils_respect_parity() {
        let r: Vec<f64> = (0..12).map(|j| 0.1 * j as f64).collect();
        let st = MirrorStencils::new(&r, 5);
        let odd: Vec<f64> = r.iter().map(|x| x.sin()).collect();
        let (d1, d2) = st.apply(1, &odd, |v| -v);
        assert!((d1 - 0.1f64.cos()).abs() < 1e-5 && (d2 + 0.1f64.sin()).abs() < 1e-5);
        let even: Vec<f64> = r.iter().map(|x| x.cos()).collect();
        let (d1, _) = st.apply(0, &even, |v| v);
        assert!(d1.abs() < 1e-15);
    }
}
