//! Perpetual American put and call prices.

use std::collections::HashMap;
use std::sync::RwLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{call_boundary_smoothfit, put_boundary_smoothfit, Side};
use crate::error::{ensure_positive, Error, Result};
use crate::fundamental::{
    bs_exponents, increasing_exponent, solve_fundamental, FundamentalSolution, GridSpec, SolutionKind,
};
use crate::model::{ModelParams, VolatilityCurve};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Exercise,
    Continuation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerpetualPrice {
    pub value: f64,
    pub region: Region,
    /// Exercise boundary for the strike; `None` in the degenerate regimes
    /// (`r = 0` put, `delta = 0` call) where no boundary exists.
    pub boundary_level: Option<f64>,
}

fn check_spot_strike(x: f64, y: f64) -> Result<()> {
    ensure_positive("spot", x)?;
    ensure_positive("strike", y)
}

fn kind_check(fsol: &FundamentalSolution, kind: SolutionKind) -> Result<()> {
    if fsol.kind == kind {
        Ok(())
    } else {
        Err(Error::Precondition(format!("expected the {kind:?} solution, got {:?}", fsol.kind)))
    }
}

fn put_from_boundary(fsol: &FundamentalSolution, x: f64, y: f64, xs: f64) -> Result<PerpetualPrice> {
    if x <= xs {
        return Ok(PerpetualPrice {
            value: y - x,
            region: Region::Exercise,
            boundary_level: Some(xs),
        });
    }
    fsol.check_contains("spot", x)?;
    Ok(PerpetualPrice {
        value: (y - xs) * fsol.ratio(x, xs),
        region: Region::Continuation,
        boundary_level: Some(xs),
    })
}

fn call_from_boundary(fsol: &FundamentalSolution, x: f64, y: f64, ups: f64) -> Result<PerpetualPrice> {
    if x >= ups {
        return Ok(PerpetualPrice {
            value: x - y,
            region: Region::Exercise,
            boundary_level: Some(ups),
        });
    }
    fsol.check_contains("spot", x)?;
    Ok(PerpetualPrice {
        value: (ups - y) * fsol.ratio(x, ups),
        region: Region::Continuation,
        boundary_level: Some(ups),
    })
}

/// Perpetual put `P(x, y)`: `(y − x*) f(x)/f(x*)` above the boundary, `y − x`
/// at or below it, and `y` when `r = 0`.
pub fn put_price(
    params: &ModelParams,
    fsol: &FundamentalSolution,
    x: f64,
    y: f64,
) -> Result<PerpetualPrice> {
    check_spot_strike(x, y)?;
    if params.r == 0.0 {
        return Ok(PerpetualPrice {
            value: y,
            region: Region::Exercise,
            boundary_level: None,
        });
    }
    kind_check(fsol, SolutionKind::Decreasing)?;
    let xs = put_boundary_smoothfit(fsol, y)?;
    put_from_boundary(fsol, x, y, xs)
}

/// Perpetual call `C(x, y)`: `(Υ* − y) f(x)/f(Υ*)` below the boundary, `x − y`
/// at or above it, and `x` when `delta = 0`.
pub fn call_price(
    params: &ModelParams,
    fsol: &FundamentalSolution,
    x: f64,
    y: f64,
) -> Result<PerpetualPrice> {
    check_spot_strike(x, y)?;
    if params.delta == 0.0 {
        return Ok(PerpetualPrice {
            value: x,
            region: Region::Continuation,
            boundary_level: None,
        });
    }
    kind_check(fsol, SolutionKind::Increasing)?;
    let ups = call_boundary_smoothfit(fsol, y)?;
    call_from_boundary(fsol, x, y, ups)
}

/// Closed-form perpetual put at constant volatility: `C x^a y^b` with
/// `C = b^{−b} / (−a)^a` in the continuation region.
pub fn bs_put_price(params: &ModelParams, vol: f64, x: f64, y: f64) -> Result<f64> {
    check_spot_strike(x, y)?;
    params.require_put_side()?;
    let (a, b) = bs_exponents(params, vol)?;
    let xs = a / (a - 1.0) * y;
    if x <= xs {
        return Ok(y - x);
    }
    // in logs: the two powers in C underflow separately for small vol
    Ok((-b * b.ln() - a * (-a).ln() + a * x.ln() + b * y.ln()).exp())
}

/// Closed-form perpetual call at constant volatility.
pub fn bs_call_price(params: &ModelParams, vol: f64, x: f64, y: f64) -> Result<f64> {
    check_spot_strike(x, y)?;
    params.require_call_side()?;
    ensure_positive("vol", vol)?;
    let p = increasing_exponent(params, vol);
    let ups = p / (p - 1.0) * y;
    if x >= ups {
        return Ok(x - y);
    }
    Ok((ups - y) * (x / ups).powf(p))
}

/// Prices one side for one `(params, curve)`, caching boundaries per strike.
///
/// Safe to share across threads; each strike's boundary is published once.
pub struct PerpetualPricer {
    pub params: ModelParams,
    pub side: Side,
    fsol: Option<FundamentalSolution>,
    cache: RwLock<HashMap<u64, f64>>,
}

impl PerpetualPricer {
    pub fn new(params: ModelParams, curve: &VolatilityCurve, side: Side, grid: &GridSpec) -> Result<Self> {
        params.validate()?;
        let degenerate = match side {
            Side::Put => params.r == 0.0,
            Side::Call => params.delta == 0.0,
        };
        let fsol = if degenerate {
            None
        } else {
            Some(solve_fundamental(params, curve, side.solution_kind(), grid)?)
        };
        Ok(PerpetualPricer {
            params,
            side,
            fsol,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn fundamental(&self) -> Option<&FundamentalSolution> {
        self.fsol.as_ref()
    }

    /// Exercise boundary for strike `y` (`None` in the degenerate regime).
    pub fn boundary(&self, y: f64) -> Result<Option<f64>> {
        let Some(fsol) = &self.fsol else {
            return Ok(None);
        };
        let key = y.to_bits();
        if let Some(v) = self.cache.read().expect("boundary cache poisoned").get(&key) {
            return Ok(Some(*v));
        }
        let v = match self.side {
            Side::Put => put_boundary_smoothfit(fsol, y)?,
            Side::Call => call_boundary_smoothfit(fsol, y)?,
        };
        self.cache
            .write()
            .expect("boundary cache poisoned")
            .entry(key)
            .or_insert(v);
        Ok(Some(v))
    }

    pub fn price(&self, x: f64, y: f64) -> Result<PerpetualPrice> {
        check_spot_strike(x, y)?;
        match (&self.fsol, self.side) {
            (None, Side::Put) => Ok(PerpetualPrice {
                value: y,
                region: Region::Exercise,
                boundary_level: None,
            }),
            (None, Side::Call) => Ok(PerpetualPrice {
                value: x,
                region: Region::Continuation,
                boundary_level: None,
            }),
            (Some(fsol), Side::Put) => {
                let xs = self.boundary(y)?.expect("boundary exists");
                put_from_boundary(fsol, x, y, xs)
            }
            (Some(fsol), Side::Call) => {
                let ups = self.boundary(y)?.expect("boundary exists");
                call_from_boundary(fsol, x, y, ups)
            }
        }
    }

    pub fn value(&self, x: f64, y: f64) -> Result<f64> {
        self.price(x, y).map(|p| p.value)
    }

    /// Prices every `(x, y)` pair in parallel.
    pub fn price_many(&self, pairs: &[(f64, f64)]) -> Result<Vec<PerpetualPrice>> {
        pairs.par_iter().map(|&(x, y)| self.price(x, y)).collect()
    }

    /// One-sided difference slope at the boundary minus its smooth-fit value
    /// (`−1` put, `+1` call), with bump `h` into the continuation region.
    pub fn smooth_fit_gap(&self, y: f64, h: f64) -> Result<f64> {
        ensure_positive("h", h)?;
        let b = self.boundary(y)?.ok_or_else(|| {
            Error::Precondition("no exercise boundary in the degenerate rate regime".into())
        })?;
        Ok(match self.side {
            Side::Put => (self.value(b + h, y)? - self.value(b, y)?) / h + 1.0,
            Side::Call => (self.value(b, y)? - self.value(b - h, y)?) / h - 1.0,
        })
    }
}

/// Smooth-fit diagnostic for a fresh `(params, curve)`; see
/// [`PerpetualPricer::smooth_fit_gap`].
pub fn smooth_fit_gap(
    params: ModelParams,
    curve: &VolatilityCurve,
    side: Side,
    y: f64,
    h: f64,
) -> Result<f64> {
    PerpetualPricer::new(params, curve, side, &GridSpec::around(y))?.smooth_fit_gap(y, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RationalBoundaryParams;
    use crate::numerics::log_space;

    fn world() -> ModelParams {
        ModelParams::new(0.2, 0.1).unwrap()
    }

    #[test]
    fn degenerate_rates_are_exact() {
        let c = VolatilityCurve::constant(0.3).unwrap();
        let no_r = ModelParams::new(0.0, 0.1).unwrap();
        let pr = PerpetualPricer::new(no_r, &c, Side::Put, &GridSpec::default()).unwrap();
        let p = pr.price(1.0, 0.4).unwrap();
        assert_eq!(p.value, 0.4);
        assert_eq!(p.region, Region::Exercise);
        let no_d = ModelParams::new(0.2, 0.0).unwrap();
        let pr = PerpetualPricer::new(no_d, &c, Side::Call, &GridSpec::default()).unwrap();
        let p = pr.price(0.7, 5.0).unwrap();
        assert_eq!(p.value, 0.7);
        assert_eq!(p.region, Region::Continuation);
    }

    #[test]
    fn black_scholes_put_and_call() {
        let p = world();
        let c = VolatilityCurve::constant(0.3).unwrap();
        let put = PerpetualPricer::new(p, &c, Side::Put, &GridSpec::default()).unwrap();
        let call = PerpetualPricer::new(p, &c, Side::Call, &GridSpec::default()).unwrap();
        for x in log_space(0.2, 5.0, 9) {
            for y in log_space(0.2, 5.0, 9) {
                let a = put.value(x, y).unwrap();
                let b = bs_put_price(&p, 0.3, x, y).unwrap();
                assert!((a / b - 1.0).abs() < 1e-9, "put {x} {y}: {a} {b}");
                let a = call.value(x, y).unwrap();
                let b = bs_call_price(&p, 0.3, x, y).unwrap();
                assert!((a / b - 1.0).abs() < 1e-9, "call {x} {y}: {a} {b}");
            }
        }
        // exercise region is exact
        assert_eq!(put.price(0.5, 1.0).unwrap().value, 0.5);
        assert_eq!(put.price(0.5, 1.0).unwrap().region, Region::Exercise);
    }

    #[test]
    fn smooth_fit_gap_is_first_order() {
        let p = world();
        let c = VolatilityCurve::constant(0.3).unwrap();
        let put = PerpetualPricer::new(p, &c, Side::Put, &GridSpec::default()).unwrap();
        let xs = put.boundary(1.0).unwrap().unwrap();
        assert!(put.smooth_fit_gap(1.0, 1e-4 * xs).unwrap().abs() < 1e-3);
        let call = PerpetualPricer::new(p, &c, Side::Call, &GridSpec::default()).unwrap();
        assert!(call.smooth_fit_gap(1.0, 1e-4).unwrap().abs() < 1e-3);

        let r = VolatilityCurve::rational_boundary(p, RationalBoundaryParams::new(1.0, 0.4, 0.1)).unwrap();
        let put = PerpetualPricer::new(p, &r, Side::Put, &GridSpec::default()).unwrap();
        let g1 = put.smooth_fit_gap(2.5, 1e-3).unwrap();
        let g2 = put.smooth_fit_gap(2.5, 5e-4).unwrap();
        assert!((g1 / g2 - 2.0).abs() < 0.05, "{g1} {g2}");
    }
}
