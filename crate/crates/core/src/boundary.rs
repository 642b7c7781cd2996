//! Exercise boundaries by smooth fit and by the boundary ODEs, and the map
//! from a boundary back to the volatility that generates it.
//!
//! Conventions, for a world with rates `(r, delta)`:
//! * `Side::Put`: `level` is the strike `y`, `value` is `x*(y)`; the put is
//!   exercised when the spot is at or below `x*(y)`.
//! * `Side::Call`: `level` is the strike `y`, `value` is `Υ*(y)`; the call is
//!   exercised when the spot is at or above `Υ*(y)`.
//!
//! The dual-call boundary `y*_η(x)` of the dual world is `Side::Call` evaluated
//! in `params.dual()` with curve `η`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fundamental::{
    decreasing_exponent, increasing_exponent, solve_fundamental, FundamentalSolution, GridSpec,
    SolutionKind,
};
use crate::model::{ModelParams, VolatilityCurve};
use crate::numerics::interp::{hermite, hermite_slope, locate};
use crate::numerics::{brent, log_space, stencil_derivatives, IntegrationError, Rk45, RootError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Put,
    Call,
}

impl Side {
    pub fn solution_kind(self) -> SolutionKind {
        match self {
            Side::Put => SolutionKind::Decreasing,
            Side::Call => SolutionKind::Increasing,
        }
    }
}

/// How the node slopes of a [`Boundary`] were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeSource {
    /// Boundary ODE right-hand side.
    Ode,
    /// Finite-difference stencil on tabulated values.
    Stencil,
}

const DENOMINATOR_FLOOR: f64 = 1e-12;
const ROOT_RTOL: f64 = 1e-12;

/// Ratio bounds `[lo, hi]` for `x*(y)/y` from the Black–Scholes boundaries at
/// the extreme volatilities.
pub fn put_cone(params: &ModelParams, sigma_lo: f64, sigma_hi: f64) -> (f64, f64) {
    let ratio = |v: f64| {
        let a = decreasing_exponent(params, v);
        a / (a - 1.0)
    };
    (ratio(sigma_hi), ratio(sigma_lo))
}

/// Ratio bounds `[lo, hi]` for `Υ*(y)/y`.
pub fn call_cone(params: &ModelParams, sigma_lo: f64, sigma_hi: f64) -> (f64, f64) {
    let ratio = |v: f64| {
        let p = increasing_exponent(params, v);
        p / (p - 1.0)
    };
    (ratio(sigma_lo), ratio(sigma_hi))
}

pub fn cone(params: &ModelParams, side: Side, sigma_lo: f64, sigma_hi: f64) -> (f64, f64) {
    match side {
        Side::Put => put_cone(params, sigma_lo, sigma_hi),
        Side::Call => call_cone(params, sigma_lo, sigma_hi),
    }
}

fn require_side(params: &ModelParams, side: Side) -> Result<()> {
    match side {
        Side::Put => params.require_put_side(),
        Side::Call => params.require_call_side(),
    }
}

/// Boundary ODE in log variables: `d ln value / d ln level` as a function of
/// `ratio = value / level`, or `None` when a denominator factor is below the floor.
#[inline]
fn log_slope(params: &ModelParams, side: Side, ratio: f64, sigma: f64) -> Option<f64> {
    let (r, d) = (params.r, params.delta);
    let (f1, f2) = match side {
        Side::Put => (1.0 - ratio, r - d * ratio),
        Side::Call => (ratio - 1.0, d * ratio - r),
    };
    if f1 < DENOMINATOR_FLOOR || f2 < DENOMINATOR_FLOOR || !sigma.is_finite() {
        return None;
    }
    Some(ratio * sigma * sigma / (2.0 * f1 * f2))
}

/// Put boundary `x*(y)` by smooth fit: the root of `y − x + f(x)/f'(x)`.
pub fn put_boundary_smoothfit(fsol: &FundamentalSolution, y: f64) -> Result<f64> {
    smoothfit_root(fsol, Side::Put, y)
}

/// Call boundary `Υ*(y)` by smooth fit: the root of `x − y − f(x)/f'(x)`.
pub fn call_boundary_smoothfit(fsol: &FundamentalSolution, y: f64) -> Result<f64> {
    smoothfit_root(fsol, Side::Call, y)
}

fn smoothfit_root(fsol: &FundamentalSolution, side: Side, y: f64) -> Result<f64> {
    if !(y.is_finite() && y > 0.0) {
        return Err(Error::invalid("strike", y, "must be finite and positive"));
    }
    require_side(&fsol.params, side)?;
    if fsol.kind != side.solution_kind() {
        return Err(Error::Precondition(format!(
            "{side:?} boundary needs the {:?} solution, got {:?}",
            side.solution_kind(),
            fsol.kind
        )));
    }
    let (slo, shi) = fsol.sigma_bounds;
    let (clo, chi) = cone(&fsol.params, side, slo, shi);
    let (glo, ghi) = fsol.span();
    let lo = (clo * y * (1.0 - 1e-9)).max(glo);
    let hi = (chi * y * (1.0 + 1e-9)).min(ghi);
    if !(lo < hi) {
        return Err(Error::OutOfRange {
            what: "strike (boundary cone outside the solution grid)",
            value: y,
            lo: glo / clo,
            hi: ghi / chi,
        });
    }
    // x/u(x) = f/f'
    let g = |x: f64| match side {
        Side::Put => y - x + x / fsol.elasticity(x),
        Side::Call => x - y - x / fsol.elasticity(x),
    };
    brent(g, lo, hi, ROOT_RTOL, 0.0).map_err(|e| match e {
        RootError::NotBracketed { f_lo, f_hi } => Error::OutOfRange {
            what: "strike (smooth-fit root not bracketed on the grid)",
            value: y,
            lo: f_lo,
            hi: f_hi,
        },
        other => Error::Numeric(format!("smooth-fit root at strike {y}: {other:?}")),
    })
}

/// Tabulated exercise boundary with node slopes, interpolated in log-log.
#[derive(Debug, Clone)]
pub struct Boundary {
    pub side: Side,
    pub params: ModelParams,
    pub curve_id: String,
    /// `(level, value)` the construction started from.
    pub anchor: (f64, f64),
    pub slope_source: SlopeSource,
    log_levels: Vec<f64>,
    log_values: Vec<f64>,
    /// `d ln value / d ln level` at the nodes.
    log_slopes: Vec<f64>,
}

impl Boundary {
    /// Builds a boundary from tabulated `(level, value)` pairs; slopes come from
    /// five-point stencils in log-log coordinates.
    pub fn from_table(
        side: Side,
        params: ModelParams,
        levels: &[f64],
        values: &[f64],
        anchor: Option<(f64, f64)>,
    ) -> Result<Self> {
        if levels.len() < 3 || levels.len() != values.len() {
            return Err(Error::Precondition(format!(
                "boundary table needs >= 3 matching nodes, got {} levels and {} values",
                levels.len(),
                values.len()
            )));
        }
        for i in 0..levels.len() {
            if !(levels[i] > 0.0 && values[i] > 0.0) {
                return Err(Error::Data {
                    level: levels[i],
                    reason: "boundary levels and values must be positive".into(),
                });
            }
            if i > 0 && levels[i] <= levels[i - 1] {
                return Err(Error::Data {
                    level: levels[i],
                    reason: "levels must be strictly increasing".into(),
                });
            }
            if i > 0 && values[i] <= values[i - 1] {
                return Err(Error::Data {
                    level: levels[i],
                    reason: "boundary is flat or decreasing here (nonpositive derivative)".into(),
                });
            }
        }
        let ll: Vec<f64> = levels.iter().map(|v| v.ln()).collect();
        let lv: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let n = ll.len();
        let slopes: Vec<f64> = (0..n)
            .map(|i| stencil_derivatives(&ll, &lv, i, 5, 0, n).0)
            .collect();
        if let Some(i) = slopes.iter().position(|&s| !(s > 0.0)) {
            return Err(Error::Data {
                level: levels[i],
                reason: format!("estimated boundary derivative {} is not positive", slopes[i]),
            });
        }
        Ok(Boundary {
            side,
            params,
            curve_id: "table".into(),
            anchor: anchor.unwrap_or((levels[0], values[0])),
            slope_source: SlopeSource::Stencil,
            log_levels: ll,
            log_values: lv,
            log_slopes: slopes,
        })
    }

    pub fn levels(&self) -> Vec<f64> {
        self.log_levels.iter().map(|v| v.exp()).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.log_values.iter().map(|v| v.exp()).collect()
    }

    /// `d value / d level` at the nodes.
    pub fn derivatives(&self) -> Vec<f64> {
        (0..self.log_levels.len())
            .map(|i| self.log_slopes[i] * (self.log_values[i] - self.log_levels[i]).exp())
            .collect()
    }

    pub fn span(&self) -> (f64, f64) {
        (self.log_levels[0].exp(), self.log_levels.last().unwrap().exp())
    }

    pub fn contains(&self, level: f64) -> bool {
        let (lo, hi) = self.span();
        level >= lo * (1.0 - 1e-13) && level <= hi * (1.0 + 1e-13)
    }

    /// Interpolated boundary value; the end pieces are extended outside the span.
    pub fn value(&self, level: f64) -> f64 {
        let t = level.ln();
        let i = locate(&self.log_levels, t);
        hermite(
            self.log_levels[i],
            self.log_levels[i + 1],
            self.log_values[i],
            self.log_values[i + 1],
            self.log_slopes[i],
            self.log_slopes[i + 1],
            t,
        )
        .exp()
    }

    /// `d value / d level`.
    pub fn derivative(&self, level: f64) -> f64 {
        let t = level.ln();
        let i = locate(&self.log_levels, t);
        let s = hermite_slope(
            self.log_levels[i],
            self.log_levels[i + 1],
            self.log_values[i],
            self.log_values[i + 1],
            self.log_slopes[i],
            self.log_slopes[i + 1],
            t,
        );
        s * self.value(level) / level
    }

    /// Level at which the boundary takes `value`.
    pub fn inverse(&self, value: f64) -> Result<f64> {
        let tv = value.ln();
        let (lo, hi) = (self.log_levels[0], *self.log_levels.last().unwrap());
        let g = |t: f64| {
            let i = locate(&self.log_levels, t);
            hermite(
                self.log_levels[i],
                self.log_levels[i + 1],
                self.log_values[i],
                self.log_values[i + 1],
                self.log_slopes[i],
                self.log_slopes[i + 1],
                t,
            ) - tv
        };
        brent(g, lo, hi, 0.0, 1e-14).map(f64::exp).map_err(|_| Error::OutOfRange {
            what: "boundary value",
            value,
            lo: self.log_values[0].exp(),
            hi: self.log_values.last().unwrap().exp(),
        })
    }

    /// Largest violation of the cone bounds over the nodes, as a relative
    /// excess (zero when every node lies inside).
    pub fn cone_violation(&self, sigma_lo: f64, sigma_hi: f64) -> f64 {
        let (lo, hi) = cone(&self.params, self.side, sigma_lo, sigma_hi);
        let mut worst = 0.0f64;
        for (l, v) in self.log_levels.iter().zip(&self.log_values) {
            let ratio = (v - l).exp();
            worst = worst.max((lo - ratio) / lo).max((ratio - hi) / hi);
        }
        worst
    }
}

/// Integrates the boundary ODE of `side` through `anchor = (level, value)`
/// over `n` log-spaced levels of `span` (the anchor level is added as a node).
///
/// The anchor may sit at either end of the span or inside it; the solution is
/// carried outward from the anchor in whichever directions the span requires.
pub fn integrate_boundary_ode(
    params: ModelParams,
    curve: &VolatilityCurve,
    side: Side,
    anchor: (f64, f64),
    span: (f64, f64),
    n: usize,
) -> Result<Boundary> {
    params.validate()?;
    require_side(&params, side)?;
    let (l0, v0) = anchor;
    if !(l0 > 0.0 && v0 > 0.0 && l0.is_finite() && v0.is_finite()) {
        return Err(Error::Precondition(format!("anchor ({l0}, {v0}) must be positive")));
    }
    if !(span.0 > 0.0 && span.1 > span.0) {
        return Err(Error::Precondition(format!("span [{}, {}] is not a positive interval", span.0, span.1)));
    }
    if l0 < span.0 * (1.0 - 1e-12) || l0 > span.1 * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "anchor level {l0} outside span [{}, {}]",
            span.0, span.1
        )));
    }
    let (clo, chi) = cone(&params, side, curve.sigma_lo(), curve.sigma_hi());
    let ratio0 = v0 / l0;
    if ratio0 < clo * (1.0 - 1e-9) || ratio0 > chi * (1.0 + 1e-9) {
        return Err(Error::Precondition(format!(
            "anchor ratio {ratio0} outside the {side:?} cone [{clo}, {chi}]"
        )));
    }
    let mut levels = log_space(span.0, span.1, n.max(2));
    let pos = levels.partition_point(|&v| v < l0);
    if levels.get(pos).is_none_or(|&v| (v / l0 - 1.0).abs() > 1e-13) {
        levels.insert(pos, l0);
    } else {
        levels[pos] = l0;
    }
    let ts: Vec<f64> = levels.iter().map(|v| v.ln()).collect();
    let t0 = l0.ln();
    let w0 = v0.ln();
    let rhs = |t: f64, y: &[f64; 1]| {
        let ratio = (y[0] - t).exp();
        log_slope(&params, side, ratio, curve.sigma(y[0].exp())).map(|s| [s])
    };
    let solver = Rk45::with_tolerances(1e-12, 1e-14);
    // the right-hand side is smooth inside the cone, so a stalled step means
    // the solution is running into a denominator singularity
    let collapse = |e: IntegrationError, targets: &[f64]| -> Error {
        let reached = e.t_reached();
        match e {
            IntegrationError::DomainExit { .. } | IntegrationError::StepUnderflow { .. } => {
                let dir = targets[0] - t0;
                let next = targets
                    .iter()
                    .find(|&&t| (t - reached) * dir > 0.0)
                    .copied()
                    .unwrap_or(reached);
                Error::DenominatorCollapse {
                    level: next.exp(),
                    last_valid: reached.exp(),
                }
            }
            other => Error::Numeric(format!("{side:?} boundary ODE: {other}")),
        }
    };
    let mut log_values = vec![0.0; ts.len()];
    log_values[pos] = w0;
    let below: Vec<f64> = ts[..pos].iter().rev().cloned().collect();
    if !below.is_empty() {
        let sol = solver.solve(rhs, t0, [w0], &below).map_err(|e| collapse(e, &below))?;
        for (k, y) in sol.iter().enumerate() {
            log_values[pos - 1 - k] = y[0];
        }
    }
    let above: Vec<f64> = ts[pos + 1..].to_vec();
    if !above.is_empty() {
        let sol = solver.solve(rhs, t0, [w0], &above).map_err(|e| collapse(e, &above))?;
        for (k, y) in sol.iter().enumerate() {
            log_values[pos + 1 + k] = y[0];
        }
    }
    let log_slopes: Vec<f64> = ts
        .iter()
        .zip(&log_values)
        .map(|(&t, &w)| {
            log_slope(&params, side, (w - t).exp(), curve.sigma(w.exp())).ok_or_else(|| {
                Error::DenominatorCollapse {
                    level: t.exp(),
                    last_valid: t.exp(),
                }
            })
        })
        .collect::<Result<_>>()?;
    Ok(Boundary {
        side,
        params,
        curve_id: curve.id().to_string(),
        anchor,
        slope_source: SlopeSource::Ode,
        log_levels: ts,
        log_values,
        log_slopes,
    })
}

/// Boundary at the given strike levels by independent smooth-fit root finds;
/// node slopes come from the boundary ODE.
pub fn boundary_by_smoothfit(
    params: ModelParams,
    curve: &VolatilityCurve,
    side: Side,
    levels: &[f64],
    grid: &GridSpec,
) -> Result<Boundary> {
    require_side(&params, side)?;
    let fsol = solve_fundamental(params, curve, side.solution_kind(), grid)?;
    boundary_from_solution(&fsol, curve, side, levels)
}

/// As [`boundary_by_smoothfit`] with a precomputed fundamental solution.
pub fn boundary_from_solution(
    fsol: &FundamentalSolution,
    curve: &VolatilityCurve,
    side: Side,
    levels: &[f64],
) -> Result<Boundary> {
    let values: Vec<f64> = levels
        .par_iter()
        .map(|&y| smoothfit_root(fsol, side, y))
        .collect::<Result<_>>()?;
    let log_levels: Vec<f64> = levels.iter().map(|v| v.ln()).collect();
    let log_values: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let log_slopes: Vec<f64> = log_levels
        .iter()
        .zip(&values)
        .map(|(&t, &v)| {
            log_slope(&fsol.params, side, v / t.exp(), curve.sigma(v)).ok_or_else(|| {
                Error::Consistency(format!("smooth-fit boundary {v} at strike {} leaves the cone", t.exp()))
            })
        })
        .collect::<Result<_>>()?;
    Ok(Boundary {
        side,
        params: fsol.params,
        curve_id: curve.id().to_string(),
        anchor: (levels[0], values[0]),
        slope_source: SlopeSource::Ode,
        log_levels,
        log_values,
        log_slopes,
    })
}

/// Standalone boundary over `span`: anchored by smooth fit at the end from
/// which the boundary ODE is stable (the top strike for puts, the bottom
/// strike for calls) and integrated across the span.
pub fn standalone_boundary(
    params: ModelParams,
    curve: &VolatilityCurve,
    side: Side,
    span: (f64, f64),
    n: usize,
) -> Result<Boundary> {
    require_side(&params, side)?;
    let anchor_level = stable_anchor_level(side, span);
    let fsol = solve_fundamental(params, curve, side.solution_kind(), &GridSpec::around(anchor_level))?;
    let anchor_value = smoothfit_root(&fsol, side, anchor_level)?;
    integrate_boundary_ode(params, curve, side, (anchor_level, anchor_value), span, n)
}

/// Nearby boundaries converge toward lower strikes on the put side and toward
/// higher strikes on the call side.
pub fn stable_anchor_level(side: Side, span: (f64, f64)) -> f64 {
    match side {
        Side::Put => span.1,
        Side::Call => span.0,
    }
}

/// Volatility `σ(value)` implied by a boundary:
/// put `σ(x*) = √(2(y−x*)(ry−δx*)x*')/x*`, call `σ(Υ) = √(2(Υ−y)(δΥ−ry)Υ')/Υ`.
///
/// The result is tabulated at the boundary values.
pub fn volatility_from_boundary(params: &ModelParams, boundary: &Boundary) -> Result<VolatilityCurve> {
    let levels = boundary.levels();
    let values = boundary.values();
    let derivs = boundary.derivatives();
    let mut sig = Vec::with_capacity(levels.len());
    for i in 0..levels.len() {
        let (y, v, dv) = (levels[i], values[i], derivs[i]);
        if !(dv > 0.0) {
            return Err(Error::Data {
                level: y,
                reason: format!("boundary derivative {dv} is not positive"),
            });
        }
        let s2 = sigma_sq_from_boundary(params, boundary.side, y, v, dv);
        if !(s2 > 0.0) {
            return Err(Error::Data {
                level: y,
                reason: format!("boundary value {v} leaves the admissible cone"),
            });
        }
        sig.push(s2.sqrt());
    }
    VolatilityCurve::tabulated(&values, &sig)
}

/// `σ²` at the boundary value `v` from `(level, value, derivative)`.
pub(crate) fn sigma_sq_from_boundary(params: &ModelParams, side: Side, y: f64, v: f64, dv: f64) -> f64 {
    let (r, d) = (params.r, params.delta);
    let prod = match side {
        Side::Put => (y - v) * (r * y - d * v),
        Side::Call => (v - y) * (d * v - r * y),
    };
    2.0 * prod * dv / (v * v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RationalBoundaryParams;

    fn world() -> ModelParams {
        ModelParams::new(0.2, 0.1).unwrap()
    }

    #[test]
    fn black_scholes_put_boundary_is_linear() {
        let p = world();
        let c = VolatilityCurve::constant(0.3).unwrap();
        let fsol = solve_fundamental(p, &c, SolutionKind::Decreasing, &GridSpec::default()).unwrap();
        let x = put_boundary_smoothfit(&fsol, 1.0).unwrap();
        assert!((x - 0.737_262_686_743_079_4).abs() < 1e-10, "{x}");
        let a = decreasing_exponent(&p, 0.3);
        let kappa = a / (a - 1.0);
        let b = integrate_boundary_ode(p, &c, Side::Put, (1.0, kappa), (0.1, 10.0), 101).unwrap();
        for (y, v) in b.levels().iter().zip(b.values()) {
            assert!((v / (kappa * y) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn rational_put_root_matches_quadratic() {
        let p = world();
        let shape = RationalBoundaryParams::new(1.0, 0.4, 0.1);
        let c = VolatilityCurve::rational_boundary(p, shape).unwrap();
        let fsol = solve_fundamental(p, &c, SolutionKind::Decreasing, &GridSpec::default()).unwrap();
        let x = put_boundary_smoothfit(&fsol, 2.5).unwrap();
        assert!((x - 0.5).abs() < 1e-7, "{x}");
        // the smooth-fit function decreases through its root
        let g = |x: f64| 2.5 - x + x / fsol.elasticity(x);
        assert!(g(x * 0.999) > 0.0 && g(x * 1.001) < 0.0);
    }

    #[test]
    fn dual_call_boundary_from_ode_matches_rational_form() {
        let p = world();
        let shape = RationalBoundaryParams::new(1.0, 0.4, 0.1);
        let eta = VolatilityCurve::rational_dual(p, shape).unwrap();
        let b = integrate_boundary_ode(p.dual(), &eta, Side::Call, (0.5, 2.5), (0.5, 5.0), 200).unwrap();
        for (x, v) in b.levels().iter().zip(b.values()) {
            assert!((v / shape.call_boundary(*x) - 1.0).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn volatility_inversion_of_linear_and_rational_boundaries() {
        let p = world();
        let a = decreasing_exponent(&p, 0.3);
        let kappa = a / (a - 1.0);
        let ys = log_space(0.1, 10.0, 50);
        let xs: Vec<f64> = ys.iter().map(|y| kappa * y).collect();
        let b = Boundary::from_table(Side::Put, p, &ys, &xs, None).unwrap();
        let s = volatility_from_boundary(&p, &b).unwrap();
        for x in log_space(0.1, 7.0, 20) {
            assert!((s.sigma(x) - 0.3).abs() < 1e-8);
        }

        let shape = RationalBoundaryParams::new(1.0, 0.4, 0.1);
        let truth = VolatilityCurve::rational_boundary(p, shape).unwrap();
        let ys = log_space(0.05, 50.0, 2001);
        let xs: Vec<f64> = ys.iter().map(|&y| shape.put_boundary(y)).collect();
        let b = Boundary::from_table(Side::Put, p, &ys, &xs, None).unwrap();
        let s = volatility_from_boundary(&p, &b).unwrap();
        for &x in &xs[2..xs.len() - 2] {
            assert!((s.sigma(x) / truth.sigma(x) - 1.0).abs() < 1e-6, "x={x}");
        }
    }

    #[test]
    fn flat_segment_is_rejected() {
        let p = world();
        let err = Boundary::from_table(Side::Put, p, &[1.0, 2.0, 3.0, 4.0], &[0.5, 0.6, 0.6, 0.7], None)
            .unwrap_err();
        assert!(matches!(err, Error::Data { level, .. } if level == 3.0));
    }

    #[test]
    fn anchor_outside_cone_is_rejected() {
        let p = world();
        let c = VolatilityCurve::constant(0.3).unwrap();
        let err = integrate_boundary_ode(p, &c, Side::Put, (1.0, 0.9), (0.5, 2.0), 10).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn collapse_reports_last_valid_level() {
        // a volatility that grows without bound drives the put boundary into its strike
        let p = world();
        let wild = VolatilityCurve::custom("wild", |x: f64| 0.3 * (1.0 + x * x), 0.3, 0.31).unwrap();
        let a = decreasing_exponent(&p, 0.3);
        let err =
            integrate_boundary_ode(p, &wild, Side::Put, (1.0, a / (a - 1.0)), (1.0, 1e3), 50).unwrap_err();
        match err {
            Error::DenominatorCollapse { last_valid, .. } => assert!(last_valid > 1.0 && last_valid < 1e3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn call_side_black_scholes() {
        let p = world();
        let c = VolatilityCurve::constant(0.3).unwrap();
        let fsol = solve_fundamental(p, &c, SolutionKind::Increasing, &GridSpec::default()).unwrap();
        let q = increasing_exponent(&p, 0.3);
        for y in [0.2, 1.0, 4.0] {
            let v = call_boundary_smoothfit(&fsol, y).unwrap();
            assert!((v / (q / (q - 1.0) * y) - 1.0).abs() < 1e-10);
        }
    }
}
