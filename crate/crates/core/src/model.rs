//! Model parameters and local volatility curves.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::numerics::{log_space, monotone_slopes, HermiteTable};

/// Interest rate `r` and dividend rate `delta` of one pricing world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub r: f64,
    pub delta: f64,
}

impl ModelParams {
    pub fn new(r: f64, delta: f64) -> Result<Self> {
        let p = ModelParams { r, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("r", self.r), ("delta", self.delta)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, v, "must be finite and nonnegative"));
            }
        }
        Ok(())
    }

    /// The world where the two rates trade places.
    pub fn dual(&self) -> Self {
        ModelParams {
            r: self.delta,
            delta: self.r,
        }
    }

    pub(crate) fn require_put_side(&self) -> Result<()> {
        if self.r > 0.0 {
            Ok(())
        } else {
            Err(Error::Precondition(
                "put-side boundary requires r > 0 (for r = 0 the put is worth its strike)".into(),
            ))
        }
    }

    pub(crate) fn require_call_side(&self) -> Result<()> {
        if self.delta > 0.0 {
            Ok(())
        } else {
            Err(Error::Precondition(
                "call-side boundary requires delta > 0 (for delta = 0 the call is worth the spot)"
                    .into(),
            ))
        }
    }

    /// `r / delta`, infinite when `delta = 0`.
    pub fn rate_ratio(&self) -> f64 {
        if self.delta == 0.0 {
            f64::INFINITY
        } else {
            self.r / self.delta
        }
    }
}

/// Swaps `r` and `delta`.
pub fn dual_params(params: ModelParams) -> ModelParams {
    params.dual()
}

/// Span `[1e-4 x_ref, 1e4 x_ref]` on which results are certified.
pub fn working_domain(x_ref: f64) -> (f64, f64) {
    (1e-4 * x_ref, 1e4 * x_ref)
}

/// Coefficients of the call boundary `y*(x) = x (x + a) / (b x + c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RationalBoundaryParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl RationalBoundaryParams {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        RationalBoundaryParams { a, b, c }
    }

    /// Requires `max(c/a, b) < min(1, r/delta)`.
    pub fn check(&self, params: &ModelParams) -> Result<()> {
        ensure_positive("a", self.a)?;
        ensure_positive("b", self.b)?;
        ensure_positive("c", self.c)?;
        let lhs = (self.c / self.a).max(self.b);
        let rhs = params.rate_ratio().min(1.0);
        if lhs < rhs {
            Ok(())
        } else {
            Err(Error::Admissibility(format!(
                "max(c/a, b) = max({}, {}) = {lhs} must be < min(1, r/delta) = {rhs}",
                self.c / self.a,
                self.b
            )))
        }
    }

    /// `y*(x)`.
    pub fn call_boundary(&self, x: f64) -> f64 {
        x * (x + self.a) / (self.b * x + self.c)
    }

    /// `y*'(x)`.
    pub fn call_boundary_slope(&self, x: f64) -> f64 {
        let d = self.b * x + self.c;
        (self.b * x * x + 2.0 * self.c * x + self.a * self.c) / (d * d)
    }

    /// Inverse of [`Self::call_boundary`]: the positive root in `x` of `y*(x) = y`.
    pub fn put_boundary(&self, y: f64) -> f64 {
        let t = self.b * y - self.a;
        let disc = t * t + 4.0 * self.c * y;
        // cancellation-free form of (t + sqrt(disc)) / 2
        if t >= 0.0 {
            0.5 * (t + disc.sqrt())
        } else {
            2.0 * self.c * y / (disc.sqrt() - t)
        }
    }

    /// Local volatility whose call boundary is `y*`.
    pub fn sigma(&self, params: &ModelParams, x: f64) -> f64 {
        self.sigma_sq(params, x).sqrt()
    }

    fn sigma_sq_quadratics(&self, params: &ModelParams) -> ([f64; 3], [f64; 3]) {
        let (a, b, c) = (self.a, self.b, self.c);
        let (r, d) = (params.r, params.delta);
        // 2 (p1 x + p0)(q1 x + q0) / (b x^2 + 2 c x + a c)
        let (p1, p0) = (r - d * b, r * a - d * c);
        let (q1, q0) = (1.0 - b, a - c);
        (
            [2.0 * p0 * q0, 2.0 * (p1 * q0 + p0 * q1), 2.0 * p1 * q1],
            [a * c, 2.0 * c, b],
        )
    }

    fn sigma_sq(&self, params: &ModelParams, x: f64) -> f64 {
        let (n, d) = self.sigma_sq_quadratics(params);
        poly2(&n, x) / poly2(&d, x)
    }

    /// Dual volatility of the put side at strike `y`, in closed form.
    pub fn dual_sigma(&self, params: &ModelParams, y: f64) -> f64 {
        let xs = self.put_boundary(y);
        let (a, b, c) = (self.a, self.b, self.c);
        let num = 2.0
            * (y - xs)
            * (params.r * y - params.delta * xs)
            * (b * xs * xs + 2.0 * c * xs + a * c);
        num.sqrt() / (y * (b * xs + c))
    }

    /// The same dual volatility written in the boundary level `xi = x*(y)`,
    /// which avoids cancellation in `y - x*` for tiny levels.
    fn dual_sigma_at_level(&self, params: &ModelParams, xi: f64) -> f64 {
        let (a, b, c) = (self.a, self.b, self.c);
        let (r, d) = (params.r, params.delta);
        let num = 2.0
            * ((1.0 - b) * xi + a - c)
            * ((r - d * b) * xi + r * a - d * c)
            * (b * xi * xi + 2.0 * c * xi + a * c);
        let den = (xi + a) * (b * xi + c);
        num.sqrt() / den
    }
}

#[inline]
fn poly2(p: &[f64; 3], x: f64) -> f64 {
    p[0] + x * (p[1] + x * p[2])
}

/// Exact range of `n(x) / d(x)` for quadratics `n`, `d > 0` on `[lo, hi]`
/// (`hi` may be infinite).
fn quadratic_ratio_range(n: &[f64; 3], d: &[f64; 3], lo: f64, hi: f64) -> (f64, f64) {
    let f = |x: f64| poly2(n, x) / poly2(d, x);
    let mut vals = vec![f(lo)];
    if hi.is_finite() {
        vals.push(f(hi));
    } else if d[2] > 0.0 {
        vals.push(n[2] / d[2]);
    }
    // zeros of n'd - nd'
    let c0 = n[1] * d[0] - n[0] * d[1];
    let c1 = 2.0 * (n[2] * d[0] - n[0] * d[2]);
    let c2 = n[2] * d[1] - n[1] * d[2];
    let mut crit = Vec::new();
    let scale = c0.abs().max(c1.abs()).max(c2.abs());
    if scale > 0.0 {
        if c2.abs() <= 1e-15 * scale {
            if c1 != 0.0 {
                crit.push(-c0 / c1);
            }
        } else {
            let disc = c1 * c1 - 4.0 * c2 * c0;
            if disc >= 0.0 {
                let s = disc.sqrt();
                crit.push((-c1 + s) / (2.0 * c2));
                crit.push((-c1 - s) / (2.0 * c2));
            }
        }
    }
    for x in crit {
        if x > lo && x < hi {
            vals.push(f(x));
        }
    }
    let lo_v = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi_v = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo_v, hi_v)
}

/// Range of `f` over `[exp(ln_lo), exp(ln_hi)]` from a log-spaced scan with
/// golden-section polishing of each interior extremum.
fn scanned_range(f: impl Fn(f64) -> f64, ln_lo: f64, ln_hi: f64, n: usize) -> (f64, f64) {
    let ts: Vec<f64> = (0..n)
        .map(|i| ln_lo + (ln_hi - ln_lo) * i as f64 / (n - 1) as f64)
        .collect();
    let vs: Vec<f64> = ts.iter().map(|t| f(t.exp())).collect();
    let mut lo = vs.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = vs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for i in 1..n - 1 {
        let is_max = vs[i] >= vs[i - 1] && vs[i] >= vs[i + 1];
        let is_min = vs[i] <= vs[i - 1] && vs[i] <= vs[i + 1];
        if !(is_max || is_min) {
            continue;
        }
        let sign = if is_max { -1.0 } else { 1.0 };
        let g = |t: f64| sign * f(t.exp());
        let v = sign * golden_min(g, ts[i - 1], ts[i + 1]);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

fn golden_min(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..80 {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - ratio * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + ratio * (b - a);
            gd = g(d);
        }
    }
    gc.min(gd)
}

/// Family a curve belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    Constant,
    RationalBoundary,
    RationalDual,
    PiecewiseFromBoundary,
    Bump,
    Tabulated,
    Spliced,
    Scaled,
    Custom,
}

/// Tabulated curve: cubic Hermite in `ln x`, flat beyond the table.
#[derive(Debug, Clone)]
pub struct TabulatedCurve {
    table: HermiteTable,
}

impl TabulatedCurve {
    pub fn xs(&self) -> Vec<f64> {
        self.table.xs.iter().map(|t| t.exp()).collect()
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.table.ys
    }

    pub fn span(&self) -> (f64, f64) {
        (self.table.lo().exp(), self.table.hi().exp())
    }

    fn eval(&self, x: f64) -> f64 {
        let t = x.ln();
        if t <= self.table.lo() {
            self.table.ys[0]
        } else if t >= self.table.hi() {
            *self.table.ys.last().unwrap()
        } else {
            self.table.eval(t)
        }
    }
}

type CustomFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum CurveKind {
    Constant(f64),
    RationalBoundary {
        params: ModelParams,
        shape: RationalBoundaryParams,
    },
    RationalDual {
        params: ModelParams,
        shape: RationalBoundaryParams,
    },
    PiecewiseFromBoundary {
        params: ModelParams,
        shape: RationalBoundaryParams,
        x0: f64,
        slope: f64,
        intercept: f64,
    },
    Bump {
        base: f64,
        amplitude: f64,
        center: f64,
        width: f64,
    },
    Tabulated(TabulatedCurve),
    Spliced {
        below: VolatilityCurve,
        above: VolatilityCurve,
        at: f64,
    },
    Scaled {
        base: VolatilityCurve,
        factor: f64,
    },
    Custom(CustomFn),
}

/// Local volatility `x -> sigma(x)` with declared bounds `0 < sigma_lo <= sigma <= sigma_hi`.
///
/// Cheap to clone; the evaluator is shared.
#[derive(Clone)]
pub struct VolatilityCurve {
    kind: Arc<CurveKind>,
    sigma_lo: f64,
    sigma_hi: f64,
    id: String,
}

impl fmt::Debug for VolatilityCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VolatilityCurve")
            .field("id", &self.id)
            .field("sigma_lo", &self.sigma_lo)
            .field("sigma_hi", &self.sigma_hi)
            .finish()
    }
}

fn check_bounds(lo: f64, hi: f64) -> Result<()> {
    ensure_positive("sigma_lo", lo)?;
    if !(hi.is_finite() && hi >= lo) {
        return Err(Error::invalid("sigma_hi", hi, format!("must be finite and >= sigma_lo = {lo}")));
    }
    Ok(())
}

impl VolatilityCurve {
    fn build(kind: CurveKind, lo: f64, hi: f64, id: String) -> Result<Self> {
        check_bounds(lo, hi)?;
        Ok(VolatilityCurve {
            kind: Arc::new(kind),
            sigma_lo: lo,
            sigma_hi: hi,
            id,
        })
    }

    pub fn constant(sigma: f64) -> Result<Self> {
        ensure_positive("sigma", sigma)?;
        Self::build(CurveKind::Constant(sigma), sigma, sigma, format!("constant({sigma})"))
    }

    /// Curve whose call-side exercise boundary in `params` is `y*(x) = x(x+a)/(bx+c)`.
    pub fn rational_boundary(params: ModelParams, shape: RationalBoundaryParams) -> Result<Self> {
        shape.check(&params)?;
        let (n, d) = shape.sigma_sq_quadratics(&params);
        let (lo, hi) = quadratic_ratio_range(&n, &d, 0.0, f64::INFINITY);
        Self::build(
            CurveKind::RationalBoundary { params, shape },
            lo.sqrt(),
            hi.sqrt(),
            format!(
                "rational_boundary(a={},b={},c={};r={},delta={})",
                shape.a, shape.b, shape.c, params.r, params.delta
            ),
        )
    }

    /// Closed-form dual (put-side) volatility of the rational family.
    pub fn rational_dual(params: ModelParams, shape: RationalBoundaryParams) -> Result<Self> {
        shape.check(&params)?;
        let (lo, hi) = scanned_range(|xi| shape.dual_sigma_at_level(&params, xi), -25.0, 25.0, 20_001);
        let ends = [
            shape.dual_sigma_at_level(&params, 0.0),
            (2.0 * (1.0 - shape.b) * (params.r - params.delta * shape.b) / shape.b).sqrt(),
        ];
        let lo = ends.iter().fold(lo, |m, v| m.min(*v));
        let hi = ends.iter().fold(hi, |m, v| m.max(*v));
        Self::build(
            CurveKind::RationalDual { params, shape },
            lo * (1.0 - 1e-12),
            hi * (1.0 + 1e-12),
            format!(
                "rational_dual(a={},b={},c={};r={},delta={})",
                shape.a, shape.b, shape.c, params.r, params.delta
            ),
        )
    }

    /// Equals the rational-family curve below `x0`; above `x0` its call
    /// boundary continues along the tangent line of `y*` at `x0`.
    pub fn piecewise_from_boundary(
        params: ModelParams,
        shape: RationalBoundaryParams,
        x0: f64,
    ) -> Result<Self> {
        shape.check(&params)?;
        ensure_positive("x0", x0)?;
        let slope = shape.call_boundary_slope(x0);
        let intercept = shape.call_boundary(x0) - x0 * slope;
        let (r, d) = (params.r, params.delta);
        let (p1, p0) = (r * slope - d, r * intercept);
        let (q1, q0) = (slope - 1.0, intercept);
        if !(p1 > 0.0 && p0 > 0.0 && q1 > 0.0 && q0 > 0.0) {
            return Err(Error::Admissibility(format!(
                "tangent extension at x0 = {x0} leaves the admissible cone (slope {slope}, intercept {intercept})"
            )));
        }
        let (n_below, d_below) = shape.sigma_sq_quadratics(&params);
        let below = quadratic_ratio_range(&n_below, &d_below, 0.0, x0);
        let n_above = [2.0 * p0 * q0, 2.0 * (p1 * q0 + p0 * q1), 2.0 * p1 * q1];
        let d_above = [0.0, 0.0, slope];
        let above = quadratic_ratio_range(&n_above, &d_above, x0, f64::INFINITY);
        Self::build(
            CurveKind::PiecewiseFromBoundary {
                params,
                shape,
                x0,
                slope,
                intercept,
            },
            below.0.min(above.0).sqrt(),
            below.1.max(above.1).sqrt(),
            format!(
                "piecewise_from_boundary(a={},b={},c={},x0={x0};r={},delta={})",
                shape.a, shape.b, shape.c, r, d
            ),
        )
    }

    /// `base + amplitude * exp(-(ln x - ln center)^2 / (2 width^2))`.
    pub fn bump(base: f64, amplitude: f64, center: f64, width: f64) -> Result<Self> {
        ensure_positive("base", base)?;
        ensure_positive("center", center)?;
        ensure_positive("width", width)?;
        if !(amplitude.is_finite() && base + amplitude > 0.0) {
            return Err(Error::invalid("amplitude", amplitude, "base + amplitude must be positive"));
        }
        Self::build(
            CurveKind::Bump {
                base,
                amplitude,
                center,
                width,
            },
            base.min(base + amplitude),
            base.max(base + amplitude),
            format!("bump(base={base},amplitude={amplitude},center={center},width={width})"),
        )
    }

    /// Tabulated curve with shape-preserving interpolation in `ln x`.
    pub fn tabulated(xs: &[f64], sigmas: &[f64]) -> Result<Self> {
        if xs.len() < 2 || xs.len() != sigmas.len() {
            return Err(Error::Precondition(format!(
                "tabulated curve needs >= 2 matching nodes, got {} x and {} sigma",
                xs.len(),
                sigmas.len()
            )));
        }
        for (i, (&x, &s)) in xs.iter().zip(sigmas).enumerate() {
            ensure_positive("x", x)?;
            ensure_positive("sigma", s)?;
            if i > 0 && x <= xs[i - 1] {
                return Err(Error::Data {
                    level: x,
                    reason: "tabulated x must be strictly increasing".into(),
                });
            }
        }
        let ts: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
        let ds = monotone_slopes(&ts, sigmas);
        let table = HermiteTable::new(ts, sigmas.to_vec(), ds);
        let (lo, hi) = table.range();
        if lo <= 0.0 {
            return Err(Error::Data {
                level: xs[0],
                reason: format!("interpolated volatility reaches {lo} <= 0"),
            });
        }
        let id = format!(
            "tabulated(n={},x=[{},{}])",
            xs.len(),
            xs[0],
            xs[xs.len() - 1]
        );
        Self::build(CurveKind::Tabulated(TabulatedCurve { table }), lo, hi, id)
    }

    /// `below` for `x < at`, `above` otherwise.
    pub fn spliced(below: VolatilityCurve, above: VolatilityCurve, at: f64) -> Result<Self> {
        ensure_positive("at", at)?;
        let lo = below.sigma_lo.min(above.sigma_lo);
        let hi = below.sigma_hi.max(above.sigma_hi);
        let id = format!("spliced({} | {at} | {})", below.id, above.id);
        Self::build(CurveKind::Spliced { below, above, at }, lo, hi, id)
    }

    pub fn scaled(base: VolatilityCurve, factor: f64) -> Result<Self> {
        ensure_positive("factor", factor)?;
        let id = format!("scaled({}, {factor})", base.id);
        let (lo, hi) = (base.sigma_lo * factor, base.sigma_hi * factor);
        Self::build(CurveKind::Scaled { base, factor }, lo, hi, id)
    }

    /// Arbitrary evaluator with caller-declared bounds.
    pub fn custom(
        name: &str,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        sigma_lo: f64,
        sigma_hi: f64,
    ) -> Result<Self> {
        Self::build(
            CurveKind::Custom(Arc::new(f)),
            sigma_lo,
            sigma_hi,
            format!("custom({name})"),
        )
    }

    /// Same evaluator with replaced declared bounds (not re-certified).
    pub fn with_declared_bounds(&self, sigma_lo: f64, sigma_hi: f64) -> Result<Self> {
        check_bounds(sigma_lo, sigma_hi)?;
        Ok(VolatilityCurve {
            kind: self.kind.clone(),
            sigma_lo,
            sigma_hi,
            id: self.id.clone(),
        })
    }

    #[inline]
    pub fn sigma(&self, x: f64) -> f64 {
        match &*self.kind {
            CurveKind::Constant(s) => *s,
            CurveKind::RationalBoundary { params, shape } => shape.sigma(params, x),
            CurveKind::RationalDual { params, shape } => {
                shape.dual_sigma_at_level(params, shape.put_boundary(x))
            }
            CurveKind::PiecewiseFromBoundary {
                params,
                shape,
                x0,
                slope,
                intercept,
            } => {
                if x <= *x0 {
                    shape.sigma(params, x)
                } else {
                    let (r, d) = (params.r, params.delta);
                    let v = 2.0 * ((r * slope - d) * x + r * intercept)
                        * ((slope - 1.0) * x + intercept)
                        / (x * x * slope);
                    v.sqrt()
                }
            }
            CurveKind::Bump {
                base,
                amplitude,
                center,
                width,
            } => {
                let z = (x / center).ln() / width;
                base + amplitude * (-0.5 * z * z).exp()
            }
            CurveKind::Tabulated(t) => t.eval(x),
            CurveKind::Spliced { below, above, at } => {
                if x < *at {
                    below.sigma(x)
                } else {
                    above.sigma(x)
                }
            }
            CurveKind::Scaled { base, factor } => factor * base.sigma(x),
            CurveKind::Custom(f) => f(x),
        }
    }

    pub fn sigma_lo(&self) -> f64 {
        self.sigma_lo
    }

    pub fn sigma_hi(&self) -> f64 {
        self.sigma_hi
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn family(&self) -> FamilyTag {
        match &*self.kind {
            CurveKind::Constant(_) => FamilyTag::Constant,
            CurveKind::RationalBoundary { .. } => FamilyTag::RationalBoundary,
            CurveKind::RationalDual { .. } => FamilyTag::RationalDual,
            CurveKind::PiecewiseFromBoundary { .. } => FamilyTag::PiecewiseFromBoundary,
            CurveKind::Bump { .. } => FamilyTag::Bump,
            CurveKind::Tabulated(_) => FamilyTag::Tabulated,
            CurveKind::Spliced { .. } => FamilyTag::Spliced,
            CurveKind::Scaled { .. } => FamilyTag::Scaled,
            CurveKind::Custom(_) => FamilyTag::Custom,
        }
    }

    /// `Some(sigma)` when the curve is the constant family.
    pub fn as_constant(&self) -> Option<f64> {
        match &*self.kind {
            CurveKind::Constant(s) => Some(*s),
            _ => None,
        }
    }

    pub fn as_tabulated(&self) -> Option<&TabulatedCurve> {
        match &*self.kind {
            CurveKind::Tabulated(t) => Some(t),
            _ => None,
        }
    }
}

/// Structured curve description, as found in config documents:
/// `{"family": "...", "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum CurveSpec {
    Constant {
        sigma: f64,
    },
    RationalBoundary {
        a: f64,
        b: f64,
        c: f64,
    },
    RationalDual {
        a: f64,
        b: f64,
        c: f64,
    },
    PiecewiseFromBoundary {
        a: f64,
        b: f64,
        c: f64,
        x0: f64,
    },
    Bump {
        base: f64,
        amplitude: f64,
        #[serde(default = "one")]
        center: f64,
        #[serde(default = "default_bump_width")]
        width: f64,
    },
    /// Two-column CSV `x,sigma` with a header row.
    Tabulated {
        path: String,
    },
}

fn one() -> f64 {
    1.0
}

fn default_bump_width() -> f64 {
    0.3
}

/// Builds the curve described by `spec` for the world `params`.
pub fn make_volatility(spec: &CurveSpec, params: ModelParams) -> Result<VolatilityCurve> {
    params.validate()?;
    match *spec {
        CurveSpec::Constant { sigma } => VolatilityCurve::constant(sigma),
        CurveSpec::RationalBoundary { a, b, c } => {
            VolatilityCurve::rational_boundary(params, RationalBoundaryParams::new(a, b, c))
        }
        CurveSpec::RationalDual { a, b, c } => {
            VolatilityCurve::rational_dual(params, RationalBoundaryParams::new(a, b, c))
        }
        CurveSpec::PiecewiseFromBoundary { a, b, c, x0 } => {
            VolatilityCurve::piecewise_from_boundary(params, RationalBoundaryParams::new(a, b, c), x0)
        }
        CurveSpec::Bump {
            base,
            amplitude,
            center,
            width,
        } => VolatilityCurve::bump(base, amplitude, center, width),
        CurveSpec::Tabulated { ref path } => {
            let (xs, sigmas) = crate::io::read_two_columns(std::path::Path::new(path))?;
            VolatilityCurve::tabulated(&xs, &sigmas)
        }
    }
}

/// Empirical range of `curve` over `n_samples` log-spaced points of `domain`.
/// Fails with the worst offender when a sample leaves the declared bounds.
pub fn validate_hvol(curve: &VolatilityCurve, domain: (f64, f64), n_samples: usize) -> Result<(f64, f64)> {
    let (lo, hi) = domain;
    if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) {
        return Err(Error::Precondition(format!("domain [{lo}, {hi}] must lie in (0, inf)")));
    }
    if n_samples < 2 {
        return Err(Error::Precondition("validate_hvol needs at least 2 samples".into()));
    }
    let slack = 1e-12;
    let (dlo, dhi) = (curve.sigma_lo * (1.0 - slack), curve.sigma_hi * (1.0 + slack));
    let mut emp = (f64::INFINITY, f64::NEG_INFINITY);
    let mut worst: Option<(f64, f64, f64)> = None;
    for x in log_space(lo, hi, n_samples) {
        let s = curve.sigma(x);
        if !s.is_finite() {
            return Err(Error::HvolViolation {
                x,
                sigma: s,
                lo: curve.sigma_lo,
                hi: curve.sigma_hi,
            });
        }
        emp.0 = emp.0.min(s);
        emp.1 = emp.1.max(s);
        let excess = (dlo - s).max(s - dhi);
        if excess > 0.0 && worst.is_none_or(|w| excess > w.2) {
            worst = Some((x, s, excess));
        }
    }
    match worst {
        Some((x, sigma, _)) => Err(Error::HvolViolation {
            x,
            sigma,
            lo: curve.sigma_lo,
            hi: curve.sigma_hi,
        }),
        None => Ok(emp),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> (ModelParams, RationalBoundaryParams) {
        (ModelParams::new(0.2, 0.1).unwrap(), RationalBoundaryParams::new(1.0, 0.4, 0.1))
    }

    #[test]
    fn dual_params_swaps_and_is_involutive() {
        let p = ModelParams::new(0.2, 0.1).unwrap();
        assert_eq!(dual_params(p), ModelParams { r: 0.1, delta: 0.2 });
        assert_eq!(dual_params(dual_params(p)), p);
        let q = ModelParams::new(0.05, 0.05).unwrap();
        assert_eq!(dual_params(q), q);
    }

    #[test]
    fn constant_curve() {
        let c = VolatilityCurve::constant(0.3).unwrap();
        assert_eq!(validate_hvol(&c, (0.01, 100.0), 1000).unwrap(), (0.3, 0.3));
    }

    #[test]
    fn rational_admissibility() {
        let (p, shape) = fig1();
        assert!(VolatilityCurve::rational_boundary(p, shape).is_ok());
        let err = VolatilityCurve::rational_boundary(p, RationalBoundaryParams::new(1.0, 1.5, 0.1))
            .unwrap_err();
        assert!(matches!(err, Error::Admissibility(ref m) if m.contains("max(c/a, b)")));
    }

    #[test]
    fn rational_identities() {
        let (p, shape) = fig1();
        assert!((shape.call_boundary(0.5) - 2.5).abs() < 1e-15);
        assert!((shape.put_boundary(2.5) - 0.5).abs() < 1e-15);
        // sigma from the boundary-based expression
        for x in log_space(1e-3, 1e3, 101) {
            let y = shape.call_boundary(x);
            let alt = (2.0 * (p.r * y - p.delta * x) * (y - x)
                / (x * x * shape.call_boundary_slope(x)))
            .sqrt();
            let s = shape.sigma(&p, x);
            assert!((s / alt - 1.0).abs() < 1e-10, "x={x}");
            let back = shape.put_boundary(y);
            assert!((back / x - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rational_bounds_match_dense_scan() {
        let (p, shape) = fig1();
        let curve = VolatilityCurve::rational_boundary(p, shape).unwrap();
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for x in log_space(1e-8, 1e8, 1_000_001) {
            let s = curve.sigma(x);
            lo = lo.min(s);
            hi = hi.max(s);
        }
        assert!(curve.sigma_lo() <= lo * (1.0 + 1e-12) && curve.sigma_lo() >= lo * (1.0 - 1e-6));
        assert!(curve.sigma_hi() >= hi * (1.0 - 1e-12) && curve.sigma_hi() <= hi * (1.0 + 1e-6));
    }

    #[test]
    fn rational_dual_bounds_cover_scan() {
        let (p, shape) = fig1();
        let curve = VolatilityCurve::rational_dual(p, shape).unwrap();
        validate_hvol(&curve, (1e-6, 1e6), 100_000).unwrap();
        for y in log_space(1e-2, 1e2, 50) {
            let a = curve.sigma(y);
            let b = shape.dual_sigma(&p, y);
            assert!((a / b - 1.0).abs() < 1e-10, "y={y}: {a} {b}");
        }
    }

    #[test]
    fn piecewise_tangent_coefficients() {
        let (p, shape) = fig1();
        let curve = VolatilityCurve::piecewise_from_boundary(p, shape, 0.5).unwrap();
        let m = shape.call_boundary_slope(0.5);
        assert!((m - 10.0 / 3.0).abs() < 1e-12);
        assert!((shape.call_boundary(0.5) - 0.5 * m - 5.0 / 6.0).abs() < 1e-12);
        // continuous at x0 and equal to the rational curve below
        let base = VolatilityCurve::rational_boundary(p, shape).unwrap();
        assert_eq!(curve.sigma(0.3), base.sigma(0.3));
        assert!((curve.sigma(0.5 + 1e-12) - base.sigma(0.5)).abs() < 1e-9);
        validate_hvol(&curve, (1e-4, 1e4), 10_000).unwrap();
    }

    #[test]
    fn declared_bound_violation_is_reported() {
        let c = VolatilityCurve::constant(0.3)
            .unwrap()
            .with_declared_bounds(0.5, 0.6)
            .unwrap();
        match validate_hvol(&c, (1.0, 1.0 + 1e-9), 2) {
            Err(Error::HvolViolation { x, sigma, .. }) => {
                assert!((x - 1.0).abs() < 1e-8);
                assert_eq!(sigma, 0.3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tabulated_reproduces_smooth_curve() {
        let xs = log_space(0.01, 100.0, 801);
        let truth = |x: f64| 0.3 + 0.1 * (x.ln()).tanh();
        let ys: Vec<f64> = xs.iter().map(|&x| truth(x)).collect();
        let c = VolatilityCurve::tabulated(&xs, &ys).unwrap();
        for x in log_space(0.011, 90.0, 333) {
            assert!((c.sigma(x) - truth(x)).abs() < 1e-8);
        }
        // flat extrapolation
        assert_eq!(c.sigma(1e-5), ys[0]);
        assert_eq!(c.sigma(1e5), ys[800]);
        validate_hvol(&c, (1e-4, 1e4), 5000).unwrap();
    }

    #[test]
    fn curve_spec_json_round() {
        let spec: CurveSpec =
            serde_json::from_str(r#"{"family":"rational_boundary","params":{"a":1,"b":0.4,"c":0.1}}"#)
                .unwrap();
        let (p, _) = fig1();
        let c = make_volatility(&spec, p).unwrap();
        assert_eq!(c.family(), FamilyTag::RationalBoundary);
    }
}
