//! Bracketed scalar root finding.

/// Outcome of a failed bracketed solve.
#[derive(Debug, Clone, PartialEq)]
pub enum RootError {
    /// `f(lo)` and `f(hi)` have the same strict sign.
    NotBracketed { f_lo: f64, f_hi: f64 },
    NonFinite { x: f64 },
    MaxIterations { x: f64 },
}

/// Brent's method: inverse quadratic / secant steps guarded by bisection.
///
/// Converges when the bracket width falls below `rtol * |x| + atol`.
pub fn brent<F>(mut f: F, lo: f64, hi: f64, rtol: f64, atol: f64) -> Result<f64, RootError>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if !fa.is_finite() {
        return Err(RootError::NonFinite { x: a });
    }
    if !fb.is_finite() {
        return Err(RootError::NonFinite { x: b });
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(RootError::NotBracketed { f_lo: fa, f_hi: fb });
    }

    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 0.5 * (rtol * b.abs() + atol) + 2.0 * f64::EPSILON * b.abs();
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(RootError::NonFinite { x: b });
        }
    }
    Err(RootError::MaxIterations { x: b })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let x = brent(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 0.0).unwrap();
        assert!((x - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn handles_decreasing_function() {
        let x = brent(|x| (-x).exp() - 0.5, 0.0, 5.0, 1e-14, 0.0).unwrap();
        assert!((x - 2f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn rejects_unbracketed() {
        assert!(matches!(
            brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 0.0),
            Err(RootError::NotBracketed { .. })
        ));
    }
}
