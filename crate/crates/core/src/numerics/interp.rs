//! Piecewise cubic Hermite interpolation and finite-difference weights.

/// Index `i` such that `xs[i] <= x <= xs[i + 1]`, clamped to the table.
pub fn locate(xs: &[f64], x: f64) -> usize {
    debug_assert!(xs.len() >= 2);
    let n = xs.len();
    if x <= xs[0] {
        return 0;
    }
    if x >= xs[n - 1] {
        return n - 2;
    }
    // partition_point gives the first index with xs[i] > x
    xs.partition_point(|&v| v <= x).saturating_sub(1).min(n - 2)
}

/// Cubic Hermite interpolant on `[x0, x1]` with end values and slopes.
#[inline]
pub fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Derivative of [`hermite`] with respect to `x`.
#[inline]
pub fn hermite_slope(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let dh00 = 6.0 * t2 - 6.0 * t;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = -6.0 * t2 + 6.0 * t;
    let dh11 = 3.0 * t2 - 2.0 * t;
    (dh00 * y0 + dh01 * y1) / h + dh10 * d0 + dh11 * d1
}

/// Tabulated function with node slopes, evaluated by cubic Hermite pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteTable {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub ds: Vec<f64>,
}

impl HermiteTable {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, ds: Vec<f64>) -> Self {
        debug_assert!(xs.len() >= 2 && xs.len() == ys.len() && ys.len() == ds.len());
        HermiteTable { xs, ys, ds }
    }

    pub fn lo(&self) -> f64 {
        self.xs[0]
    }

    pub fn hi(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo() && x <= self.hi()
    }

    /// Evaluates the interpolant; outside the table the end pieces are extended.
    pub fn eval(&self, x: f64) -> f64 {
        let i = locate(&self.xs, x);
        hermite(
            self.xs[i],
            self.xs[i + 1],
            self.ys[i],
            self.ys[i + 1],
            self.ds[i],
            self.ds[i + 1],
            x,
        )
    }

    pub fn slope(&self, x: f64) -> f64 {
        let i = locate(&self.xs, x);
        hermite_slope(
            self.xs[i],
            self.xs[i + 1],
            self.ys[i],
            self.ys[i + 1],
            self.ds[i],
            self.ds[i + 1],
            x,
        )
    }

    /// Exact range of the interpolant over the table.
    pub fn range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &y in &self.ys {
            lo = lo.min(y);
            hi = hi.max(y);
        }
        for i in 0..self.xs.len() - 1 {
            let (x0, x1) = (self.xs[i], self.xs[i + 1]);
            let (y0, y1, d0, d1) = (self.ys[i], self.ys[i + 1], self.ds[i], self.ds[i + 1]);
            let h = x1 - x0;
            // slope in t is a quadratic: A t^2 + B t + C
            let a = 6.0 * (y0 - y1) + 3.0 * h * (d0 + d1);
            let b = 6.0 * (y1 - y0) - 2.0 * h * (2.0 * d0 + d1);
            let c = h * d0;
            for t in quadratic_roots(a, b, c) {
                if t > 0.0 && t < 1.0 {
                    let y = hermite(x0, x1, y0, y1, d0, d1, x0 + t * h);
                    lo = lo.min(y);
                    hi = hi.max(y);
                }
            }
        }
        (lo, hi)
    }
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return vec![];
    }
    if a.abs() <= 1e-14 * scale {
        if b.abs() <= 1e-14 * scale {
            return vec![];
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + sq.copysign(b));
    let mut roots = vec![q / a];
    if q != 0.0 {
        roots.push(c / q);
    }
    roots
}

/// Finite-difference weights (Fornberg's recursion) for derivatives of order
/// `0..=max_order` at `z` from values at `nodes`. Returns `w[k][j]`.
pub fn fornberg_weights(z: f64, nodes: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
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

/// First and second derivative at node `i` from a `width`-point stencil taken
/// from indices in `[lo, hi)`, centred where possible and shifted at the ends.
pub fn stencil_derivatives(
    xs: &[f64],
    ys: &[f64],
    i: usize,
    width: usize,
    lo: usize,
    hi: usize,
) -> (f64, f64) {
    let avail = hi - lo;
    let w = width.min(avail);
    let start = i
        .saturating_sub(w / 2)
        .max(lo)
        .min(hi - w);
    let nodes = &xs[start..start + w];
    let weights = fornberg_weights(xs[i], nodes, 2);
    let vals = &ys[start..start + w];
    let d1 = weights[1].iter().zip(vals).map(|(a, b)| a * b).sum();
    let d2 = if w >= 3 {
        weights[2].iter().zip(vals).map(|(a, b)| a * b).sum()
    } else {
        0.0
    };
    (d1, d2)
}

/// Node slopes for a shape-preserving cubic: fourth-order stencil slopes,
/// limited by Hyman's filter wherever the data are locally monotone.
pub fn monotone_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    if n == 2 {
        let s = (ys[1] - ys[0]) / (xs[1] - xs[0]);
        return vec![s, s];
    }
    let secant: Vec<f64> = (0..n - 1)
        .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
        .collect();
    let mut d: Vec<f64> = (0..n)
        .map(|i| stencil_derivatives(xs, ys, i, 5, 0, n).0)
        .collect();
    for i in 0..n {
        let (left, right) = match i {
            0 => (secant[0], secant[0]),
            _ if i == n - 1 => (secant[n - 2], secant[n - 2]),
            _ => (secant[i - 1], secant[i]),
        };
        if left == 0.0 || right == 0.0 {
            d[i] = 0.0;
            continue;
        }
        if left.signum() == right.signum() {
            let cap = 3.0 * left.abs().min(right.abs());
            let m = if d[i].signum() == left.signum() { d[i].abs().min(cap) } else { 0.0 };
            d[i] = m.copysign(left);
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_matches_classic_centered_weights() {
        let nodes = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let w = fornberg_weights(0.0, &nodes, 2);
        let d1 = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        let d2 = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
        for j in 0..5 {
            assert!((w[1][j] - d1[j]).abs() < 1e-14);
            assert!((w[2][j] - d2[j]).abs() < 1e-14);
        }
    }

    #[test]
    fn stencil_is_exact_on_quartics_nonuniform() {
        let xs: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).exp()).collect();
        let f = |x: f64| 1.0 + 2.0 * x - x * x + 0.5 * x.powi(3) + 0.01 * x.powi(4);
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        for i in [0, 3, 11] {
            let x = xs[i];
            let (d1, d2) = stencil_derivatives(&xs, &ys, i, 5, 0, xs.len());
            let e1 = 2.0 - 2.0 * x + 1.5 * x * x + 0.04 * x.powi(3);
            let e2 = -2.0 + 3.0 * x + 0.12 * x * x;
            assert!((d1 - e1).abs() < 1e-8 * e1.abs().max(1.0), "{d1} vs {e1}");
            assert!((d2 - e2).abs() < 1e-7 * e2.abs().max(1.0), "{d2} vs {e2}");
        }
    }

    #[test]
    fn monotone_cubic_does_not_overshoot_step_data() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys = vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let table = HermiteTable::new(xs.clone(), ys.clone(), monotone_slopes(&xs, &ys));
        let (lo, hi) = table.range();
        assert!(lo >= -1e-15 && hi <= 1.0 + 1e-15, "{lo} {hi}");
    }

    #[test]
    fn hermite_range_sees_interior_peak() {
        let t = HermiteTable::new(vec![0.0, 1.0], vec![0.0, 0.0], vec![1.0, -1.0]);
        let (_, hi) = t.range();
        assert!((hi - 0.25).abs() < 1e-14);
    }
}
