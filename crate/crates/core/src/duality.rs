//! Dual volatility transforms and numerical checks of put/call duality.
//!
//! With `x*` the put boundary of `σ` in the world `(r, δ)`,
//! `σ̃(y) = 2(y − x*)(ry − δx*) / (y x* σ(x*))` makes `P_σ(x, y) = c_σ̃(y, x)`,
//! where `c` is the call of the dual world `(δ, r)`. The call-side transform
//! `σ̂(y) = 2(Υ − y)(δΥ − ry) / (y Υ σ(Υ))` makes `C_σ(x, y) = p_σ̂(y, x)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{integrate_boundary_ode, Boundary, Side};
use crate::boundary::standalone_boundary;
use crate::error::{Error, Result};
use crate::fundamental::GridSpec;
use crate::model::{ModelParams, VolatilityCurve};
use crate::numerics::log_space;
use crate::pricing::PerpetualPricer;

/// Strike span and node count used to tabulate a transformed curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Default for TransformGrid {
    fn default() -> Self {
        TransformGrid {
            lo: 1e-8,
            hi: 1e3,
            n: 4001,
        }
    }
}

impl TransformGrid {
    pub fn scaled(&self, scale: f64) -> Self {
        TransformGrid {
            lo: self.lo * scale,
            hi: self.hi * scale,
            n: self.n,
        }
    }
}

/// Relative mismatch allowed between a boundary's slopes and the boundary
/// ODE driven by the supplied curve.
const SLOPE_CONSISTENCY: f64 = 1e-4;

fn check_boundary_matches(
    params: &ModelParams,
    curve: &VolatilityCurve,
    boundary: &Boundary,
    side: Side,
) -> Result<()> {
    if boundary.side != side {
        return Err(Error::Precondition(format!(
            "expected a {side:?} boundary, got {:?}",
            boundary.side
        )));
    }
    if boundary.params != *params {
        return Err(Error::Precondition(
            "boundary was computed for different rates".into(),
        ));
    }
    let levels = boundary.levels();
    let values = boundary.values();
    let derivs = boundary.derivatives();
    let n = levels.len();
    // end nodes of stencil-sloped tables are the least accurate; skip them
    let skip = if n > 8 { 2 } else { 0 };
    for i in skip..n - skip {
        let s2 = crate::boundary::sigma_sq_from_boundary(params, side, levels[i], values[i], derivs[i]);
        let implied = s2.max(0.0).sqrt();
        let sig = curve.sigma(values[i]);
        if !((implied / sig - 1.0).abs() <= SLOPE_CONSISTENCY) {
            return Err(Error::Consistency(format!(
                "boundary does not solve the boundary ODE of curve {} at level {} (implied sigma {implied}, curve {sig})",
                curve.id(),
                levels[i]
            )));
        }
    }
    Ok(())
}

/// `σ̃` tabulated at the levels of the put boundary `boundary` of `curve`.
pub fn dual_put_volatility(
    params: &ModelParams,
    curve: &VolatilityCurve,
    boundary: &Boundary,
) -> Result<VolatilityCurve> {
    params.require_put_side()?;
    check_boundary_matches(params, curve, boundary, Side::Put)?;
    let (r, d) = (params.r, params.delta);
    let ys = boundary.levels();
    let sig: Vec<f64> = ys
        .iter()
        .zip(boundary.values())
        .map(|(&y, x)| 2.0 * (y - x) * (r * y - d * x) / (y * x * curve.sigma(x)))
        .collect();
    VolatilityCurve::tabulated(&ys, &sig)
}

/// `σ̂` tabulated at the levels of the call boundary `boundary` of `curve`.
pub fn dual_call_volatility(
    params: &ModelParams,
    curve: &VolatilityCurve,
    boundary: &Boundary,
) -> Result<VolatilityCurve> {
    params.require_call_side()?;
    check_boundary_matches(params, curve, boundary, Side::Call)?;
    let (r, d) = (params.r, params.delta);
    let ys = boundary.levels();
    let sig: Vec<f64> = ys
        .iter()
        .zip(boundary.values())
        .map(|(&y, u)| 2.0 * (u - y) * (d * u - r * y) / (y * u * curve.sigma(u)))
        .collect();
    VolatilityCurve::tabulated(&ys, &sig)
}

/// `σ̃` of `curve`, with the put boundary built over `grid` from a smooth-fit
/// anchor.
pub fn sigma_tilde(params: &ModelParams, curve: &VolatilityCurve, grid: &TransformGrid) -> Result<VolatilityCurve> {
    let b = standalone_boundary(*params, curve, Side::Put, (grid.lo, grid.hi), grid.n)?;
    dual_put_volatility(params, curve, &b)
}

/// `σ̂` of `curve` over `grid`.
pub fn sigma_hat(params: &ModelParams, curve: &VolatilityCurve, grid: &TransformGrid) -> Result<VolatilityCurve> {
    let b = standalone_boundary(*params, curve, Side::Call, (grid.lo, grid.hi), grid.n)?;
    dual_call_volatility(params, curve, &b)
}

/// Inverse of [`sigma_tilde`]: the primal-world curve whose put-side dual is
/// `eta`, read off the call boundary of `eta` in the dual world.
pub fn inverse_dual_put_volatility(
    params: &ModelParams,
    eta: &VolatilityCurve,
    grid: &TransformGrid,
) -> Result<VolatilityCurve> {
    let dual = params.dual();
    let b = standalone_boundary(dual, eta, Side::Call, (grid.lo, grid.hi), grid.n)?;
    dual_call_volatility(&dual, eta, &b)
}

/// As [`inverse_dual_put_volatility`] from a given anchor `(x, y*(x))` on the
/// dual call boundary.
pub fn inverse_dual_put_volatility_anchored(
    params: &ModelParams,
    eta: &VolatilityCurve,
    anchor: (f64, f64),
    grid: &TransformGrid,
) -> Result<VolatilityCurve> {
    let dual = params.dual();
    let b = integrate_boundary_ode(dual, eta, Side::Call, anchor, (grid.lo, grid.hi), grid.n)?;
    dual_call_volatility(&dual, eta, &b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualityTolerances {
    pub price_rel: f64,
    pub boundary_inverse: f64,
}

impl Default for DualityTolerances {
    fn default() -> Self {
        DualityTolerances {
            price_rel: 1e-4,
            boundary_inverse: 1e-5,
        }
    }
}

/// Outcome of comparing `P_σ(x, y)` with `c_η(y, x)` over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub grid: Vec<(f64, f64)>,
    pub primal_values: Vec<f64>,
    pub dual_values: Vec<f64>,
    pub max_rel_gap: f64,
    /// Sup of `|x*_σ(y*_η(x)) − x| / x` over the distinct spots of the grid.
    pub boundary_inverse_gap: f64,
    pub tolerances: DualityTolerances,
    pub prices_pass: bool,
    pub boundaries_pass: bool,
    pub pass: bool,
}

/// `n × n` log-spaced `(x, y)` pairs over `[lo, hi]²`.
pub fn square_grid(lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    let pts = log_space(lo, hi, n);
    pts.iter()
        .flat_map(|&x| pts.iter().map(move |&y| (x, y)))
        .collect()
}

/// Prices the put of `primal` and the dual-world call of `dual` independently
/// and compares them, together with the boundary-inverse identity.
pub fn verify_duality(
    params: &ModelParams,
    primal: &VolatilityCurve,
    dual: &VolatilityCurve,
    grid: &[(f64, f64)],
    tolerances: DualityTolerances,
) -> Result<DualityReport> {
    params.require_put_side()?;
    if grid.is_empty() {
        return Err(Error::Precondition("duality grid is empty".into()));
    }
    let lo = grid.iter().map(|p| p.0.min(p.1)).fold(f64::INFINITY, f64::min);
    let hi = grid.iter().map(|p| p.0.max(p.1)).fold(0.0, f64::max);
    let fgrid = GridSpec::around((lo * hi).sqrt());
    let (put, call) = rayon::join(
        || PerpetualPricer::new(*params, primal, Side::Put, &fgrid),
        || PerpetualPricer::new(params.dual(), dual, Side::Call, &fgrid),
    );
    let (put, call) = (put?, call?);
    let pairs: Vec<(f64, f64, f64)> = grid
        .par_iter()
        .map(|&(x, y)| -> Result<(f64, f64, f64)> {
            let p = put.value(x, y)?;
            let c = call.value(y, x)?;
            let gap = (p - c).abs() / p.abs().max(c.abs()).max(f64::MIN_POSITIVE);
            Ok((p, c, gap))
        })
        .collect::<Result<_>>()?;
    let mut spots: Vec<f64> = grid.iter().map(|p| p.0).collect();
    spots.sort_by(f64::total_cmp);
    spots.dedup();
    let inverse_gaps: Vec<f64> = spots
        .par_iter()
        .map(|&x| -> Result<f64> {
            let ystar = call.boundary(x)?.expect("call side has a boundary");
            let back = put.boundary(ystar)?.expect("put side has a boundary");
            Ok((back - x).abs() / x)
        })
        .collect::<Result<_>>()?;
    let max_rel_gap = pairs.iter().map(|t| t.2).fold(0.0, f64::max);
    let boundary_inverse_gap = inverse_gaps.into_iter().fold(0.0, f64::max);
    let prices_pass = max_rel_gap <= tolerances.price_rel;
    let boundaries_pass = boundary_inverse_gap <= tolerances.boundary_inverse;
    Ok(DualityReport {
        grid: grid.to_vec(),
        primal_values: pairs.iter().map(|t| t.0).collect(),
        dual_values: pairs.iter().map(|t| t.1).collect(),
        max_rel_gap,
        boundary_inverse_gap,
        tolerances,
        prices_pass,
        boundaries_pass,
        pass: prices_pass && boundaries_pass,
    })
}

/// Whether the rates fall where the constant-only self-duality statement is proven.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `r > δ ≥ 0`.
    Proven,
    OutsideProven,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfDualityReport {
    pub curve_id: String,
    pub span: (f64, f64),
    /// `sup |σ̃(y) − σ(y)|` over the span.
    pub residual: f64,
    pub worst_level: f64,
    pub regime: Regime,
}

/// Distance between a curve and its own put-side dual over `span`.
pub fn self_duality_residual(
    params: &ModelParams,
    curve: &VolatilityCurve,
    span: (f64, f64),
) -> Result<SelfDualityReport> {
    let (lo, hi) = span;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Precondition(format!("span [{lo}, {hi}] is not a positive interval")));
    }
    let tgrid = TransformGrid {
        lo: lo.min(1e-2 * lo.max(1e-6)),
        hi: hi * 10.0,
        n: 2001,
    };
    let tilde = sigma_tilde(params, curve, &tgrid)?;
    let mut residual = 0.0f64;
    let mut worst_level = lo;
    for y in log_space(lo, hi, 2001) {
        let d = (tilde.sigma(y) - curve.sigma(y)).abs();
        if d > residual {
            residual = d;
            worst_level = y;
        }
    }
    let regime = if params.r > params.delta && params.delta >= 0.0 {
        Regime::Proven
    } else {
        Regime::OutsideProven
    };
    Ok(SelfDualityReport {
        curve_id: curve.id().to_string(),
        span,
        residual,
        worst_level,
        regime,
    })
}
