//! Recovery of the local volatility from perpetual option prices quoted at a
//! single spot `x₀` across strikes.
//!
//! Put prices `p(K) = P_σ(x₀, K)` are dual calls `c_σ̃(K, x₀)`, so their strike
//! profile yields `σ̃` on `(0, Y]`; the dual-world call boundary of `σ̃` then
//! gives `σ` back. Calls mirror this with `σ̂` on `[X, ∞)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boundary::{
    call_boundary_smoothfit, integrate_boundary_ode, put_boundary_smoothfit, standalone_boundary, Boundary, Side,
};
use crate::duality::{dual_call_volatility, dual_put_volatility};
use crate::error::{Error, Result};
use crate::fundamental::{carry_elasticity, solve_fundamental, GridSpec, SolutionKind};
use crate::io::read_numeric_rows;
use crate::model::{validate_hvol, ModelParams, VolatilityCurve};
use crate::numerics::{brent, fornberg_weights, stencil_derivatives};
use crate::pricing::PerpetualPricer;

/// Option prices at spot `spot_x0` for increasing strikes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceCurveSample {
    pub kind: Side,
    pub spot_x0: f64,
    pub strikes: Vec<f64>,
    pub prices: Vec<f64>,
    /// `dp/dK` per strike, when known.
    pub first_deriv: Option<Vec<f64>>,
    /// `d²p/dK²` per strike, when known.
    pub second_deriv: Option<Vec<f64>>,
}

impl PriceCurveSample {
    pub fn new(kind: Side, spot_x0: f64, strikes: Vec<f64>, prices: Vec<f64>) -> Result<Self> {
        let s = PriceCurveSample {
            kind,
            spot_x0,
            strikes,
            prices,
            first_deriv: None,
            second_deriv: None,
        };
        s.validate()?;
        Ok(s)
    }

    /// Shape checks plus the no-arbitrage sandwich
    /// `(K − x₀)⁺ ≤ p ≤ K` (puts) or `(x₀ − K)⁺ ≤ c ≤ x₀` (calls).
    pub fn validate(&self) -> Result<()> {
        let x0 = self.spot_x0;
        if !(x0.is_finite() && x0 > 0.0) {
            return Err(Error::invalid("spot_x0", x0, "must be finite and positive"));
        }
        let n = self.strikes.len();
        if n < 8 {
            return Err(Error::Precondition(format!("sample has {n} strikes, need at least 8")));
        }
        if self.prices.len() != n {
            return Err(Error::Precondition(format!(
                "{} prices for {n} strikes",
                self.prices.len()
            )));
        }
        for d in [&self.first_deriv, &self.second_deriv].into_iter().flatten() {
            if d.len() != n {
                return Err(Error::Precondition(format!("{} derivatives for {n} strikes", d.len())));
            }
        }
        for (i, (&k, &p)) in self.strikes.iter().zip(&self.prices).enumerate() {
            if !(k.is_finite() && k > 0.0) || (i > 0 && k <= self.strikes[i - 1]) {
                return Err(Error::Data {
                    level: k,
                    reason: "strikes must be positive and strictly increasing".into(),
                });
            }
            let slack = 1e-10 * k.max(x0);
            let (floor, cap) = match self.kind {
                Side::Put => ((k - x0).max(0.0), k),
                Side::Call => ((x0 - k).max(0.0), x0),
            };
            if !(p >= floor - slack && p <= cap + slack) {
                return Err(Error::Arbitrage {
                    strike: k,
                    reason: format!("price {p} outside [{floor}, {cap}]"),
                });
            }
        }
        Ok(())
    }

    fn intrinsic(&self, k: f64) -> f64 {
        match self.kind {
            Side::Put => k - self.spot_x0,
            Side::Call => self.spot_x0 - k,
        }
    }

    /// Strikes `[lo, hi)` on the continuation side of the threshold at index
    /// `at`, keeping `excluded` strikes clear of it.
    fn continuation_window(&self, at: usize, excluded: usize) -> (usize, usize) {
        match self.kind {
            Side::Put => (0, at.saturating_sub(excluded)),
            Side::Call => ((at + 1 + excluded).min(self.strikes.len()), self.strikes.len()),
        }
    }
}

/// Threshold strike `Y` (puts: the first strike where the price meets
/// `K − x₀`) or `X` (calls: the last strike where it meets `x₀ − K`), with
/// matching tolerance `tol·K`.
pub fn detect_threshold(sample: &PriceCurveSample, tol: f64) -> Result<f64> {
    threshold_index(sample, tol).map(|i| sample.strikes[i])
}

fn threshold_index(sample: &PriceCurveSample, tol: f64) -> Result<usize> {
    let n = sample.strikes.len();
    let at_intrinsic = |i: usize| {
        let k = sample.strikes[i];
        let intr = sample.intrinsic(k);
        intr >= 0.0 && (sample.prices[i] - intr).abs() <= tol * k
    };
    let found = match sample.kind {
        Side::Put => (0..n).find(|&i| at_intrinsic(i)),
        Side::Call => (0..n).rev().find(|&i| at_intrinsic(i)),
    };
    let interior = match sample.kind {
        Side::Put => 0,
        Side::Call => n - 1,
    };
    match found {
        None => Err(Error::ThresholdNotBracketed(format!(
            "no strike in [{}, {}] prices at intrinsic value",
            sample.strikes[0],
            sample.strikes[n - 1]
        ))),
        Some(i) if i == interior => Err(Error::ThresholdNotBracketed(format!(
            "every strike from {} on is exercised; no continuation strikes",
            sample.strikes[i]
        ))),
        Some(i) => Ok(i),
    }
}

/// Settings of the recovery procedure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationOptions {
    /// Relative tolerance of threshold detection.
    pub threshold_tol: f64,
    /// Continuation strikes next to the threshold left out of `η` extraction.
    pub excluded_steps: usize,
    /// Recovered curve is built on `[span_factor·x₀, x₀/span_factor]`.
    pub span_factor: f64,
    pub nodes: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            threshold_tol: 1e-6,
            excluded_steps: 2,
            span_factor: 1e-3,
            nodes: 2001,
        }
    }
}

/// Dual volatility `η(K) = (1/K)√(2(δp + K(r−δ)p′)/p″)` on the continuation
/// strikes, held constant past the threshold and beyond the sampled range.
pub fn extract_dual_vol(params: &ModelParams, sample: &PriceCurveSample, threshold: f64) -> Result<VolatilityCurve> {
    let at = sample
        .strikes
        .iter()
        .position(|&k| k == threshold)
        .ok_or_else(|| Error::Precondition(format!("threshold {threshold} is not a sample strike")))?;
    extract_at(params, sample, at, CalibrationOptions::default().excluded_steps).map(|e| e.curve)
}

/// Per-strike quantities measured on the usable continuation strikes.
struct DataNodes {
    strikes: Vec<f64>,
    /// `K p'/p`.
    log_slopes: Vec<f64>,
    etas: Vec<f64>,
}

struct Extraction {
    curve: VolatilityCurve,
    data: DataNodes,
    excluded_band: (f64, f64),
    /// `(K, K p'/p)` at a continuation strike next to the excluded band.
    elasticity_anchor: (f64, f64),
}

fn extract_at(params: &ModelParams, sample: &PriceCurveSample, at: usize, excluded: usize) -> Result<Extraction> {
    params.validate()?;
    let (lo, hi) = sample.continuation_window(at, excluded);
    if hi < lo + 5 {
        return Err(Error::Data {
            level: sample.strikes[at],
            reason: format!("only {} usable continuation strikes, need 5", hi.saturating_sub(lo)),
        });
    }
    let (r, d) = (params.r, params.delta);
    let ks = &sample.strikes;
    let ss: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
    let logp: Vec<f64> = sample.prices.iter().map(|p| p.ln()).collect();
    let mut etas = Vec::with_capacity(hi - lo);
    let mut log_slopes = Vec::with_capacity(hi - lo);
    for i in lo..hi {
        let (k, p) = (ks[i], sample.prices[i]);
        if !(p > 0.0) {
            return Err(Error::Arbitrage {
                strike: k,
                reason: format!("continuation price {p} is not positive"),
            });
        }
        // radicand and curvature rescaled by p/K² and 1/K² respectively
        let (l1, num, den) = match (&sample.first_deriv, &sample.second_deriv) {
            (Some(d1), Some(d2)) => (k * d1[i] / p, d * p + k * (r - d) * d1[i], k * k * d2[i]),
            _ => {
                let (l1, l2) = stencil_derivatives(&ss, &logp, i, 5, lo, hi);
                (l1, p * (d + (r - d) * l1), p * (l2 + l1 * l1 - l1))
            }
        };
        log_slopes.push(l1);
        if !(den > 0.0) {
            return Err(Error::Arbitrage {
                strike: k,
                reason: format!("price is not convex in strike (K²p'' = {den})"),
            });
        }
        if !(num > 0.0) {
            return Err(Error::Arbitrage {
                strike: k,
                reason: format!("negative dual-volatility radicand {num}"),
            });
        }
        etas.push((2.0 * num / den).sqrt());
    }
    let mut xs = ks[lo..hi].to_vec();
    let m = etas.len();
    let data = DataNodes {
        strikes: xs.clone(),
        log_slopes,
        etas: etas.clone(),
    };
    // excluded strikes and the threshold get the cubic extrapolant in ln K
    // of the four data nodes nearest to them
    let (targets, nodes, vals): (Vec<usize>, &[f64], &[f64]) = match sample.kind {
        Side::Put => ((hi..=at).collect(), &ss[hi - 4..hi], &etas[m - 4..]),
        Side::Call => ((at..lo).collect(), &ss[lo..lo + 4], &etas[..4]),
    };
    let mut ext = Vec::with_capacity(targets.len());
    for &j in &targets {
        let w = fornberg_weights(ss[j], nodes, 0);
        let v: f64 = w[0].iter().zip(vals).map(|(a, b)| a * b).sum();
        if !(v > 0.0) {
            return Err(Error::Data {
                level: ks[j],
                reason: format!("extrapolated dual volatility {v} near the threshold"),
            });
        }
        ext.push((ks[j], v));
    }
    let used = (xs[0], xs[xs.len() - 1]);
    // centred stencil nearest the threshold
    let a = match sample.kind {
        Side::Put => m - 3,
        Side::Call => 2,
    };
    let elasticity_anchor = (xs[a], data.log_slopes[a]);
    let thr = ks[at];
    let excluded_band = match sample.kind {
        Side::Put => {
            for (k, v) in ext {
                xs.push(k);
                etas.push(v);
            }
            (used.1, thr)
        }
        Side::Call => {
            for (k, v) in ext.into_iter().rev() {
                xs.insert(0, k);
                etas.insert(0, v);
            }
            (thr, used.0)
        }
    };
    let curve = VolatilityCurve::tabulated(&xs, &etas)?;
    Ok(Extraction {
        curve,
        data,
        excluded_band,
        elasticity_anchor,
    })
}

struct Tail {
    curve: VolatilityCurve,
    theta: f64,
    matched: bool,
}

/// `η` continued past the sampled edge strike `k_e` (the side away from the
/// threshold) as `η(k_e) + θ(1 − ρ)`, `ρ = min(K/k_e, k_e/K)`.
fn with_tail(eta: &VolatilityCurve, tail_below: bool, k_e: f64, theta: f64) -> Result<VolatilityCurve> {
    let e = eta.sigma(k_e);
    let base = eta.clone();
    let f = move |k: f64| {
        let beyond = if tail_below { k < k_e } else { k > k_e };
        if beyond {
            let rho = if tail_below { k / k_e } else { k_e / k };
            e + theta * (1.0 - rho)
        } else {
            base.sigma(k)
        }
    };
    let lo = eta.sigma_lo().min(e + theta.min(0.0));
    let hi = eta.sigma_hi().max(e + theta.max(0.0));
    VolatilityCurve::custom(&format!("{} with tail {theta:e}", eta.id()), f, lo, hi)
}

/// Tail whose dual-world boundary passes through `(level, k_e)`; the flat
/// tail when no such member of the family is bracketed.
fn match_tail(
    dual: &ModelParams,
    eta: &VolatilityCurve,
    dside: Side,
    k_e: f64,
    level: f64,
    span: (f64, f64),
) -> Result<Tail> {
    // puts read η toward K -> 0, calls toward K -> ∞
    let tail_below = dside == Side::Call;
    let e = eta.sigma(k_e);
    let gap = |theta: f64| -> f64 {
        with_tail(eta, tail_below, k_e, theta)
            .and_then(|c| standalone_boundary(*dual, &c, dside, span, 201))
            .map_or(f64::NAN, |b| b.value(level) / k_e - 1.0)
    };
    let (lo, hi) = (-0.9 * e, 4.0 * e);
    let (glo, ghi) = (gap(lo), gap(hi));
    let (theta, matched) = if glo.is_finite() && ghi.is_finite() && glo * ghi <= 0.0 {
        match brent(gap, lo, hi, 1e-10, 1e-12) {
            Ok(t) => (t, true),
            Err(_) => (0.0, false),
        }
    } else {
        (0.0, false)
    };
    Ok(Tail {
        curve: with_tail(eta, tail_below, k_e, theta)?,
        theta,
        matched,
    })
}

/// Threshold from smooth fit of the dual-world option struck at `x0`: the
/// elasticity measured in the data at `anchor = (K, K p'/p)` is carried along
/// `η` to the strike where `u (1 − x0/K) = 1` (dual call) or
/// `u (x0/K − 1) = −1` (dual put).
fn smooth_fit_threshold(
    dual: &ModelParams,
    eta: &VolatilityCurve,
    side: Side,
    x0: f64,
    anchor: (f64, f64),
    detected: f64,
    step: f64,
) -> Result<f64> {
    let (ka, ua) = anchor;
    let gap = |k: f64, u: f64| match side {
        Side::Put => u * (1.0 - x0 / k) - 1.0,
        Side::Call => u * (x0 / k - 1.0) + 1.0,
    };
    let far = match side {
        Side::Put => detected * step * step,
        Side::Call => detected / (step * step),
    };
    let probes = crate::numerics::log_space(ka.min(far), ka.max(far), 65);
    let probes: Vec<f64> = match side {
        Side::Put => probes[1..].to_vec(),
        Side::Call => probes[..64].iter().rev().cloned().collect(),
    };
    let us = carry_elasticity(dual, eta, ka, ua, &probes)?;
    let mut prev = (ka, gap(ka, ua));
    for (&k, &u) in probes.iter().zip(&us) {
        let g = gap(k, u);
        if prev.1 * g <= 0.0 {
            let h = |t: f64| -> f64 {
                carry_elasticity(dual, eta, ka, ua, &[t.exp()]).map_or(f64::NAN, |u| gap(t.exp(), u[0]))
            };
            let (lo, hi) = (prev.0.min(k).ln(), prev.0.max(k).ln());
            return brent(h, lo, hi, 1e-14, 1e-14)
                .map(f64::exp)
                .map_err(|e| Error::Numeric(format!("threshold smooth fit: {e:?}")));
        }
        prev = (k, g);
    }
    Err(Error::ThresholdNotBracketed(format!(
        "smooth fit from strike {ka} has no root between {ka} and {far}"
    )))
}

/// Summary numbers attached to a [`CalibrationResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationDiagnostics {
    /// Threshold strike found in the sample.
    pub detected_threshold: f64,
    /// Threshold implied by the recovered dual boundary at `x₀`.
    pub boundary_threshold: f64,
    /// Strikes between the last extracted `η` node and the threshold.
    pub excluded_band: (f64, f64),
    pub extension: String,
    /// Relative jump of the recovered curve where the extension takes over.
    pub extension_jump: f64,
    /// Spot range on which the recovered curve is pinned by sampled strikes.
    pub recoverable_span: (f64, f64),
    /// Largest relative gap between the strike-implied boundary and the
    /// boundary ODE integrated from the threshold across the span.
    pub ode_boundary_gap: Option<f64>,
    /// Level where that ODE left the admissible cone, if it did.
    pub ode_collapse_level: Option<f64>,
    /// Empirical bounds of the recovered curve on the recoverable span.
    pub sigma_bounds: (f64, f64),
    /// `max |model − input| / K` over continuation strikes.
    pub repricing_residual: f64,
    pub repriced_strikes: usize,
    pub tail_warning: Option<String>,
}

#[derive(Debug, Clone)]
pub struct CalibrationResult {
    pub kind: Side,
    pub spot_x0: f64,
    pub params: ModelParams,
    /// Strike-implied curve on the recoverable span, continued outside it by
    /// the curve of the extended `η`.
    pub recovered_sigma: VolatilityCurve,
    pub dual_vol: VolatilityCurve,
    /// Dual boundary at `x₀`: `Y` for puts, `X` for calls.
    pub threshold: f64,
    /// Dual-world boundary over the recoverable span: levels `K − p/p'`,
    /// values `K`.
    pub dual_boundary: Boundary,
    pub diagnostics: CalibrationDiagnostics,
}

impl CalibrationResult {
    /// `(x, σ(x))` at `n` log-spaced points of the recoverable span.
    pub fn sigma_table(&self, n: usize) -> Vec<(f64, f64)> {
        let (lo, hi) = self.diagnostics.recoverable_span;
        crate::numerics::log_space(lo, hi, n)
            .into_iter()
            .map(|x| (x, self.recovered_sigma.sigma(x)))
            .collect()
    }
}

pub fn recover_sigma_from_puts(params: &ModelParams, sample: &PriceCurveSample) -> Result<CalibrationResult> {
    recover_with(params, sample, &CalibrationOptions::default(), Side::Put)
}

pub fn recover_sigma_from_calls(params: &ModelParams, sample: &PriceCurveSample) -> Result<CalibrationResult> {
    recover_with(params, sample, &CalibrationOptions::default(), Side::Call)
}

/// Either side with explicit options; the side is read from the sample.
pub fn recover_sigma(
    params: &ModelParams,
    sample: &PriceCurveSample,
    opts: &CalibrationOptions,
) -> Result<CalibrationResult> {
    recover_with(params, sample, opts, sample.kind)
}

fn recover_with(
    params: &ModelParams,
    sample: &PriceCurveSample,
    opts: &CalibrationOptions,
    side: Side,
) -> Result<CalibrationResult> {
    params.validate()?;
    sample.validate()?;
    if sample.kind != side {
        return Err(Error::Precondition(format!("expected a {side:?} sample, got {:?}", sample.kind)));
    }
    if !(opts.span_factor > 0.0 && opts.span_factor < 1.0) {
        return Err(Error::invalid("span_factor", opts.span_factor, "must lie in (0, 1)"));
    }
    match side {
        Side::Put => params.require_put_side()?,
        Side::Call => params.require_call_side()?,
    }
    let x0 = sample.spot_x0;
    let at = threshold_index(sample, opts.threshold_tol)?;
    let ext = extract_at(params, sample, at, opts.excluded_steps)?;
    let dual = params.dual();
    let span = (opts.span_factor * x0, x0 / opts.span_factor);

    // the primal put (call) side is the dual-world call (put) boundary of η
    let dside = match side {
        Side::Put => Side::Call,
        Side::Call => Side::Put,
    };
    let step = sample.strikes[1] / sample.strikes[0];
    let threshold = smooth_fit_threshold(&dual, &ext.curve, side, x0, ext.elasticity_anchor, sample.strikes[at], step)?;

    // smooth fit in strike: the boundary level for strike K is K − p/p'
    let d = &ext.data;
    let mut levels = Vec::with_capacity(d.strikes.len() + 8);
    let mut values = Vec::with_capacity(d.strikes.len() + 8);
    let mut sigmas = Vec::with_capacity(d.strikes.len() + 8);
    let mut push = |x: f64, k: f64, eta: f64| -> Result<()> {
        let sig = 2.0 * (k - x) * (params.r * k - params.delta * x) / (x * k * eta);
        if !(x > 0.0 && sig > 0.0) {
            return Err(Error::Arbitrage {
                strike: k,
                reason: format!("implied exercise level {x} is outside the admissible cone"),
            });
        }
        if levels.last().is_some_and(|&prev| x <= prev) {
            return Err(Error::Data {
                level: k,
                reason: format!("implied exercise level {x} is not increasing in strike"),
            });
        }
        levels.push(x);
        values.push(k);
        sigmas.push(sig);
        Ok(())
    };
    // the band between the data and x₀ is bridged by the boundary ODE from the threshold
    let implied: Vec<f64> = d.strikes.iter().zip(&d.log_slopes).map(|(&k, &u)| k * (1.0 - 1.0 / u)).collect();
    let edge = match side {
        Side::Put => implied[implied.len() - 1],
        Side::Call => implied[0],
    };
    let bridge = if (edge - x0) * (x0 - edge) < 0.0 {
        let (lo, hi) = (edge.min(x0), edge.max(x0));
        let b = integrate_boundary_ode(dual, &ext.curve, dside, (x0, threshold), (lo, hi), 9)?;
        // ODE output levels pass through ln/exp, so the ends are cut with a margin
        let (lo, hi) = (lo * (1.0 + 1e-9), hi * (1.0 - 1e-9));
        b.levels().into_iter().zip(b.values()).filter(|&(x, _)| x > lo && x < hi).collect()
    } else {
        Vec::new()
    };
    let anchor_eta = ext.curve.sigma(threshold);
    if side == Side::Call {
        push(x0, threshold, anchor_eta)?;
        for &(x, k) in &bridge {
            push(x, k, ext.curve.sigma(k))?;
        }
    }
    for (i, &x) in implied.iter().enumerate() {
        if (side == Side::Put && x < x0) || (side == Side::Call && x > x0) {
            push(x, d.strikes[i], d.etas[i])?;
        }
    }
    if side == Side::Put {
        for &(x, k) in &bridge {
            push(x, k, ext.curve.sigma(k))?;
        }
        push(x0, threshold, anchor_eta)?;
    }
    let identified = VolatilityCurve::tabulated(&levels, &sigmas)?;
    let boundary = Boundary::from_table(dside, dual, &levels, &values, Some((x0, threshold)))?;
    let recoverable_span = (levels[0], levels[levels.len() - 1]);

    // beyond the data, the curve implied by η with a tail chosen so that its
    // boundary (ODE run in the stable direction) meets the strike-implied edge
    let (edge_level, edge_strike) = match side {
        Side::Put => (levels[0], values[0]),
        Side::Call => (levels[levels.len() - 1], values[values.len() - 1]),
    };
    let tail = match_tail(&dual, &ext.curve, dside, edge_strike, edge_level, span)?;
    let ext_boundary = standalone_boundary(dual, &tail.curve, dside, span, opts.nodes)?;
    let extension = match side {
        Side::Put => dual_call_volatility(&dual, &tail.curve, &ext_boundary)?,
        Side::Call => dual_put_volatility(&dual, &tail.curve, &ext_boundary)?,
    };
    let extension_jump = [recoverable_span.0, recoverable_span.1]
        .iter()
        .map(|&x| (extension.sigma(x) / identified.sigma(x) - 1.0).abs())
        .fold(0.0, f64::max);
    let recovered = VolatilityCurve::spliced(
        VolatilityCurve::spliced(extension.clone(), identified, recoverable_span.0)?,
        extension,
        recoverable_span.1,
    )?;

    // cross-check: boundary ODE from the threshold across the identified span
    let (ode_boundary_gap, ode_collapse_level) =
        match integrate_boundary_ode(dual, &ext.curve, dside, (x0, threshold), recoverable_span, opts.nodes) {
            Ok(b) => {
                let gap = levels
                    .iter()
                    .zip(&values)
                    .map(|(&x, &k)| (b.value(x) / k - 1.0).abs())
                    .fold(0.0, f64::max);
                (Some(gap), None)
            }
            Err(Error::DenominatorCollapse { level, .. }) => (None, Some(level)),
            Err(e) => return Err(e),
        };
    let sigma_bounds = validate_hvol(&recovered, recoverable_span, 1000)?;

    let pricer = PerpetualPricer::new(*params, &recovered, side, &sample_grid(x0, &sample.strikes))?;
    let (lo, hi) = sample.continuation_window(at, 0);
    let mut repricing_residual: f64 = 0.0;
    for i in lo..hi {
        let k = sample.strikes[i];
        let model = pricer.value(x0, k)?;
        repricing_residual = repricing_residual.max((model - sample.prices[i]).abs() / k);
    }

    let tail_warning = match side {
        Side::Call => {
            let last = sample.prices[sample.prices.len() - 1];
            (last > 1e-3 * x0).then(|| {
                format!(
                    "call price {last} at the top strike {} has not decayed toward 0",
                    sample.strikes[sample.strikes.len() - 1]
                )
            })
        }
        Side::Put => None,
    };

    Ok(CalibrationResult {
        kind: side,
        spot_x0: x0,
        params: *params,
        recovered_sigma: recovered,
        dual_vol: tail.curve,
        threshold,
        dual_boundary: boundary,
        diagnostics: CalibrationDiagnostics {
            detected_threshold: sample.strikes[at],
            boundary_threshold: threshold,
            excluded_band: ext.excluded_band,
            extension: format!(
                "constant beyond the threshold; tail {:.6e} from strike {edge_strike}{}",
                tail.theta,
                if tail.matched { "" } else { " (edge match not bracketed)" }
            ),
            extension_jump,
            recoverable_span,
            ode_boundary_gap,
            ode_collapse_level,
            sigma_bounds,
            repricing_residual,
            repriced_strikes: hi - lo,
            tail_warning,
        },
    })
}

/// Fundamental-solution grid wide enough for every boundary of the strikes.
fn sample_grid(x0: f64, strikes: &[f64]) -> GridSpec {
    let lo = (1e-3 * x0).min(1e-2 * strikes[0]);
    let hi = (1e3 * x0).max(1e2 * strikes[strikes.len() - 1]);
    let decades = (hi / lo).log10();
    GridSpec {
        lo,
        hi,
        n: (decades * 334.0).ceil() as usize + 1,
    }
}

/// Perpetual prices at spot `x0` for `strikes` under `curve`.
pub fn synthetic_sample(
    params: &ModelParams,
    curve: &VolatilityCurve,
    side: Side,
    x0: f64,
    strikes: &[f64],
) -> Result<PriceCurveSample> {
    let pricer = PerpetualPricer::new(*params, curve, side, &sample_grid(x0, strikes))?;
    let pairs: Vec<(f64, f64)> = strikes.iter().map(|&k| (x0, k)).collect();
    let prices = pricer.price_many(&pairs)?.into_iter().map(|p| p.value).collect();
    PriceCurveSample::new(side, x0, strikes.to_vec(), prices)
}

/// Outcome of gluing a put-side and a call-side calibration at `x₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointConsistencyReport {
    pub spot_x0: f64,
    /// `|σ_put(x₀) − σ_call(x₀)| / σ_call(x₀)`.
    pub continuity_gap: f64,
    /// `|x*_glued(Y) − x₀| / x₀`.
    pub put_boundary_gap: f64,
    /// `|Υ*_glued(X) − x₀| / x₀`.
    pub call_boundary_gap: f64,
    pub continuity_tol: f64,
    pub boundary_tol: f64,
    pub pass: bool,
}

/// Glues the put-side curve below `x₀` to the call-side curve above it and
/// checks that the glued curve reproduces both thresholds.
pub fn joint_consistency(
    params: &ModelParams,
    put: &CalibrationResult,
    call: &CalibrationResult,
) -> Result<JointConsistencyReport> {
    if put.kind != Side::Put || call.kind != Side::Call {
        return Err(Error::Precondition("need one put-side and one call-side result".into()));
    }
    let x0 = put.spot_x0;
    if (call.spot_x0 / x0 - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!(
            "put sample spot {x0} differs from call sample spot {}",
            call.spot_x0
        )));
    }
    params.require_put_side()?;
    params.require_call_side()?;
    let below = put.recovered_sigma.sigma(x0);
    let above = call.recovered_sigma.sigma(x0);
    let continuity_gap = (below - above).abs() / above;
    let glued = VolatilityCurve::spliced(put.recovered_sigma.clone(), call.recovered_sigma.clone(), x0)?;
    let grid = GridSpec::around(x0);
    let (fd, fi) = rayon::join(
        || solve_fundamental(*params, &glued, SolutionKind::Decreasing, &grid),
        || solve_fundamental(*params, &glued, SolutionKind::Increasing, &grid),
    );
    let x_star = put_boundary_smoothfit(&fd?, put.threshold)?;
    let ups = call_boundary_smoothfit(&fi?, call.threshold)?;
    let put_boundary_gap = (x_star - x0).abs() / x0;
    let call_boundary_gap = (ups - x0).abs() / x0;
    let (continuity_tol, boundary_tol) = (1e-3, 1e-4);
    Ok(JointConsistencyReport {
        spot_x0: x0,
        continuity_gap,
        put_boundary_gap,
        call_boundary_gap,
        continuity_tol,
        boundary_tol,
        pass: continuity_gap <= continuity_tol && put_boundary_gap <= boundary_tol && call_boundary_gap <= boundary_tol,
    })
}

#[derive(Serialize, Deserialize)]
struct SampleHeader {
    kind: Side,
    x0: f64,
    r: f64,
    delta: f64,
}

/// Reads a sample CSV: a `# {"kind":..,"x0":..,"r":..,"delta":..}` line, a
/// header row, then `strike,price[,dprice,d2price]` rows.
pub fn read_price_sample(path: &Path) -> Result<(ModelParams, PriceCurveSample)> {
    let text = std::fs::read_to_string(path)?;
    let first = text.lines().next().unwrap_or_default();
    let json = first.strip_prefix('#').ok_or_else(|| {
        Error::Config(format!("{}: first line must be a `# {{...}}` JSON header", path.display()))
    })?;
    let head: SampleHeader = serde_json::from_str(json.trim())?;
    let params = ModelParams::new(head.r, head.delta)?;
    let rows = read_numeric_rows(path, 2)?;
    let col = |j: usize| -> Option<Vec<f64>> {
        rows.iter().all(|r| r.len() > j).then(|| rows.iter().map(|r| r[j]).collect())
    };
    let mut sample = PriceCurveSample {
        kind: head.kind,
        spot_x0: head.x0,
        strikes: col(0).unwrap_or_default(),
        prices: col(1).unwrap_or_default(),
        first_deriv: None,
        second_deriv: None,
    };
    if let (Some(d1), Some(d2)) = (col(2), col(3)) {
        sample.first_deriv = Some(d1);
        sample.second_deriv = Some(d2);
    }
    sample.validate()?;
    Ok((params, sample))
}

/// Inverse of [`read_price_sample`] (derivative columns are not written).
pub fn render_price_sample(params: &ModelParams, sample: &PriceCurveSample) -> Result<String> {
    let head = SampleHeader {
        kind: sample.kind,
        x0: sample.spot_x0,
        r: params.r,
        delta: params.delta,
    };
    let mut out = format!("# {}\nstrike,price\n", serde_json::to_string(&head)?);
    // shortest round-trip form, so a re-read sample is bit-identical
    for (k, p) in sample.strikes.iter().zip(&sample.prices) {
        out.push_str(&format!("{k:e},{p:e}\n"));
    }
    Ok(out)
}
