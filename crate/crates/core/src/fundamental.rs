//! Positive monotone solutions of `½σ²(x)x²f'' + (r−δ)xf' − rf = 0`.
//!
//! Solutions are carried as `u = x f'/f` and `L = ln f` over `s = ln x`, where
//! the equation becomes the Riccati equation
//! `u' = u + 2(r − (r−δ)u)/σ² − u²` with `L' = u`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::model::{ModelParams, VolatilityCurve};
use crate::numerics::interp::{hermite, locate};
use crate::numerics::{log_space, quadrature, stencil_derivatives, Rk45};

/// Which of the two positive solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionKind {
    /// Decreasing solution; drives put prices.
    Decreasing,
    /// Increasing solution; drives call prices.
    Increasing,
}

/// Log-spaced spot grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            lo: 1e-3,
            hi: 1e3,
            n: 2001,
        }
    }
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let g = GridSpec { lo, hi, n };
        g.validate()?;
        Ok(g)
    }

    /// Default node density around a reference level.
    pub fn around(x_ref: f64) -> Self {
        GridSpec {
            lo: 1e-3 * x_ref,
            hi: 1e3 * x_ref,
            n: 2001,
        }
    }

    /// Grid reaching two decades beyond `[lo, hi]` at the default density.
    pub fn covering(lo: f64, hi: f64) -> Self {
        let (lo, hi) = (1e-2 * lo, 1e2 * hi);
        let decades = (hi / lo).log10().ceil().max(1.0) as usize;
        GridSpec { lo, hi, n: decades * 334 + 1 }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("grid.lo", self.lo)?;
        if !(self.hi > self.lo && self.hi.is_finite()) {
            return Err(Error::invalid("grid.hi", self.hi, "must exceed grid.lo"));
        }
        if self.n < 5 {
            return Err(Error::invalid("grid.n", self.n as f64, "need at least 5 nodes"));
        }
        Ok(())
    }

    /// Node abscissae in `ln x`. The grid always reaches `x = 1` (the
    /// normalization point): `0` is inserted when inside the span, and the grid
    /// is extended at its own spacing when outside.
    fn log_nodes(&self) -> Vec<f64> {
        let mut s: Vec<f64> = log_space(self.lo, self.hi, self.n)
            .into_iter()
            .map(f64::ln)
            .collect();
        let h = (s[s.len() - 1] - s[0]) / (s.len() - 1) as f64;
        if s[0] > 0.0 {
            let k = (s[0] / h).ceil() as usize;
            let lo = s[0];
            let mut ext: Vec<f64> = (1..k).rev().map(|j| lo - j as f64 * h).filter(|&v| v > 0.0).collect();
            ext.insert(0, 0.0);
            ext.extend_from_slice(&s);
            s = ext;
        } else if *s.last().unwrap() < 0.0 {
            let hi = *s.last().unwrap();
            let k = (-hi / h).ceil() as usize;
            s.extend((1..k).map(|j| hi + j as f64 * h).filter(|&v| v < 0.0));
            s.push(0.0);
        } else if let Some(v) = s.iter_mut().find(|v| v.abs() < 1e-9 * h) {
            *v = 0.0;
        } else {
            let pos = s.partition_point(|&v| v < 0.0);
            s.insert(pos, 0.0);
        }
        s
    }
}

/// Decreasing and increasing Black–Scholes exponents `(a, b)` with `b = 1 − a`.
///
/// `x^a` is the decreasing solution at constant volatility `vol`; `b` is the
/// increasing exponent of the dual world.
pub fn bs_exponents(params: &ModelParams, vol: f64) -> Result<(f64, f64)> {
    ensure_positive("vol", vol)?;
    let a = decreasing_exponent(params, vol);
    Ok((a, 1.0 - a))
}

pub(crate) fn decreasing_exponent(params: &ModelParams, vol: f64) -> f64 {
    let v2 = vol * vol;
    let half = params.delta - params.r + 0.5 * v2;
    let root = (half * half + 2.0 * params.r * v2).sqrt();
    if half > 0.0 {
        // rationalized to avoid cancellation
        -2.0 * params.r / (half + root)
    } else {
        (half - root) / v2
    }
}

/// Exponent `p` with `x^p` the increasing solution at constant volatility.
pub(crate) fn increasing_exponent(params: &ModelParams, vol: f64) -> f64 {
    1.0 - decreasing_exponent(&params.dual(), vol)
}

/// Separation `p − a` between the two exponents.
fn exponent_gap(params: &ModelParams, vol: f64) -> f64 {
    increasing_exponent(params, vol) - decreasing_exponent(params, vol)
}

#[inline]
fn riccati(params: &ModelParams, sigma: f64, u: f64) -> f64 {
    u + 2.0 * (params.r - (params.r - params.delta) * u) / (sigma * sigma) - u * u
}

/// Elasticity `x f'/f` of the solution through `(x_from, u_from)`, carried by
/// the Riccati equation to each level of `targets` (ordered away from `x_from`).
pub(crate) fn carry_elasticity(
    params: &ModelParams,
    curve: &VolatilityCurve,
    x_from: f64,
    u_from: f64,
    targets: &[f64],
) -> Result<Vec<f64>> {
    let outputs: Vec<f64> = targets.iter().map(|x| x.ln()).collect();
    let rhs = |s: f64, y: &[f64; 1]| Some([riccati(params, curve.sigma(s.exp()), y[0])]);
    Rk45::with_tolerances(1e-12, 1e-14)
        .solve(rhs, x_from.ln(), [u_from], &outputs)
        .map(|v| v.into_iter().map(|y| y[0]).collect())
        .map_err(|e| Error::Numeric(format!("elasticity transport: {e}")))
}

/// Tabulated positive solution, normalized so that `f(1) = 1`.
#[derive(Debug, Clone)]
pub struct FundamentalSolution {
    pub kind: SolutionKind,
    pub params: ModelParams,
    pub curve_id: String,
    /// Declared volatility bounds of the generating curve.
    pub sigma_bounds: (f64, f64),
    /// Nodes in `ln x`, strictly increasing.
    log_grid: Vec<f64>,
    /// `ln f` at the nodes.
    log_f: Vec<f64>,
    /// `x f'/f` at the nodes.
    elasticity: Vec<f64>,
    /// `d(x f'/f)/d ln x` at the nodes.
    elasticity_slope: Vec<f64>,
}

impl FundamentalSolution {
    fn from_nodes(
        kind: SolutionKind,
        params: ModelParams,
        curve: &VolatilityCurve,
        log_grid: Vec<f64>,
        mut log_f: Vec<f64>,
        elasticity: Vec<f64>,
    ) -> Self {
        let i0 = log_grid.iter().position(|&s| s == 0.0).expect("grid contains x = 1");
        let shift = log_f[i0];
        for v in &mut log_f {
            *v -= shift;
        }
        let elasticity_slope = log_grid
            .iter()
            .zip(&elasticity)
            .map(|(&s, &u)| riccati(&params, curve.sigma(s.exp()), u))
            .collect();
        FundamentalSolution {
            kind,
            params,
            curve_id: curve.id().to_string(),
            sigma_bounds: (curve.sigma_lo(), curve.sigma_hi()),
            log_grid,
            log_f,
            elasticity,
            elasticity_slope,
        }
    }

    /// Grid span `[x_lo, x_hi]`.
    pub fn span(&self) -> (f64, f64) {
        (self.log_grid[0].exp(), self.log_grid.last().unwrap().exp())
    }

    pub fn contains(&self, x: f64) -> bool {
        let (lo, hi) = self.span();
        x >= lo * (1.0 - 1e-14) && x <= hi * (1.0 + 1e-14)
    }

    pub(crate) fn check_contains(&self, what: &'static str, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            let (lo, hi) = self.span();
            Err(Error::OutOfRange { what, value: x, lo, hi })
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        self.log_grid.iter().map(|s| s.exp()).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.log_f.iter().map(|l| l.exp()).collect()
    }

    pub fn derivatives(&self) -> Vec<f64> {
        self.log_grid
            .iter()
            .zip(&self.log_f)
            .zip(&self.elasticity)
            .map(|((s, l), u)| u * (l - s).exp())
            .collect()
    }

    /// `ln f(x)`.
    pub fn log_value(&self, x: f64) -> f64 {
        let s = x.ln();
        let i = locate(&self.log_grid, s);
        hermite(
            self.log_grid[i],
            self.log_grid[i + 1],
            self.log_f[i],
            self.log_f[i + 1],
            self.elasticity[i],
            self.elasticity[i + 1],
            s,
        )
    }

    pub fn value(&self, x: f64) -> f64 {
        self.log_value(x).exp()
    }

    /// Elasticity `x f'(x)/f(x)`.
    pub fn elasticity(&self, x: f64) -> f64 {
        let s = x.ln();
        let i = locate(&self.log_grid, s);
        hermite(
            self.log_grid[i],
            self.log_grid[i + 1],
            self.elasticity[i],
            self.elasticity[i + 1],
            self.elasticity_slope[i],
            self.elasticity_slope[i + 1],
            s,
        )
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.elasticity(x) * self.value(x) / x
    }

    /// `f(x) / f(z)` without forming either value.
    pub fn ratio(&self, x: f64, z: f64) -> f64 {
        (self.log_value(x) - self.log_value(z)).exp()
    }

    /// Largest scaled residual of the pricing equation at interior nodes,
    /// using finite differences of the tabulated `f` only.
    pub fn max_ode_residual(&self, curve: &VolatilityCurve) -> f64 {
        let n = self.log_grid.len();
        let (r, d) = (self.params.r, self.params.delta);
        let mut worst = 0.0f64;
        for i in 2..n - 2 {
            // f scaled by f_i to keep the stencil well conditioned
            let local: Vec<f64> = (i - 2..=i + 2)
                .map(|j| (self.log_f[j] - self.log_f[i]).exp())
                .collect();
            let (fs, fss) =
                stencil_derivatives(&self.log_grid[i - 2..=i + 2], &local, 2, 5, 0, 5);
            let x = self.log_grid[i].exp();
            let sig = curve.sigma(x);
            let fi = self.log_f[i].exp();
            let res = 0.5 * sig * sig * (fss - fs) + (r - d) * fs - r;
            let scale = r + ((r - d) * fs).abs() + 1.0 / fi;
            worst = worst.max((res / scale).abs());
        }
        worst
    }
}

/// Computes `f` of the requested kind on `grid` (which gains the node `x = 1`).
///
/// Degenerate rate regimes use exact or quadrature-based closed forms.
pub fn solve_fundamental(
    params: ModelParams,
    curve: &VolatilityCurve,
    kind: SolutionKind,
    grid: &GridSpec,
) -> Result<FundamentalSolution> {
    params.validate()?;
    grid.validate()?;
    let nodes = grid.log_nodes();
    match kind {
        SolutionKind::Decreasing if params.r == 0.0 => {
            let n = nodes.len();
            Ok(FundamentalSolution::from_nodes(kind, params, curve, nodes, vec![0.0; n], vec![0.0; n]))
        }
        SolutionKind::Increasing if params.r == 0.0 && params.delta == 0.0 => Err(Error::Precondition(
            "increasing solution needs r > 0 or delta > 0".into(),
        )),
        SolutionKind::Increasing if params.delta == 0.0 => {
            let n = nodes.len();
            let log_f = nodes.clone();
            Ok(FundamentalSolution::from_nodes(kind, params, curve, nodes, log_f, vec![1.0; n]))
        }
        SolutionKind::Decreasing if params.delta == 0.0 => closed_form_special(params, curve, kind, grid),
        SolutionKind::Increasing if params.r == 0.0 => closed_form_special(params, curve, kind, grid),
        _ => shoot(params, curve, kind, nodes),
    }
}

fn shoot(
    params: ModelParams,
    curve: &VolatilityCurve,
    kind: SolutionKind,
    nodes: Vec<f64>,
) -> Result<FundamentalSolution> {
    let s_lo = nodes[0];
    let s_hi = *nodes.last().unwrap();
    // the unwanted solution decays like exp(-gap * distance) over the buffer
    let gap = exponent_gap(&params, curve.sigma_hi());
    let buffer = (1e4f64).ln().max(36.0 / gap);
    let (s_far, outputs): (f64, Vec<f64>) = match kind {
        SolutionKind::Decreasing => (s_hi + buffer, nodes.iter().rev().cloned().collect()),
        SolutionKind::Increasing => (s_lo - buffer, nodes.clone()),
    };
    let sigma_far = curve.sigma(s_far.exp());
    let u_far = match kind {
        SolutionKind::Decreasing => decreasing_exponent(&params, sigma_far),
        SolutionKind::Increasing => increasing_exponent(&params, sigma_far),
    };
    let rhs = |s: f64, y: &[f64; 2]| {
        let sig = curve.sigma(s.exp());
        Some([riccati(&params, sig, y[0]), y[0]])
    };
    let solver = Rk45::with_tolerances(1e-11, 1e-13);
    let states = solver
        .solve(rhs, s_far, [u_far, 0.0], &outputs)
        .map_err(|e| Error::Numeric(format!("fundamental solution ({kind:?}): {e}")))?;
    let mut states = states;
    if kind == SolutionKind::Decreasing {
        states.reverse();
    }
    let elasticity: Vec<f64> = states.iter().map(|y| y[0]).collect();
    let log_f: Vec<f64> = states.iter().map(|y| y[1]).collect();
    for (s, &u) in nodes.iter().zip(&elasticity) {
        let ok = match kind {
            SolutionKind::Decreasing => u < 0.0,
            SolutionKind::Increasing => u > 0.0,
        };
        if !ok || !u.is_finite() {
            return Err(Error::Consistency(format!(
                "{kind:?} solution has elasticity {u} at x = {}",
                s.exp()
            )));
        }
    }
    Ok(FundamentalSolution::from_nodes(kind, params, curve, nodes, log_f, elasticity))
}

/// Quadrature representations for the two regimes where one rate vanishes:
/// `delta = 0` (decreasing kind) and `r = 0` (increasing kind).
pub fn closed_form_special(
    params: ModelParams,
    curve: &VolatilityCurve,
    kind: SolutionKind,
    grid: &GridSpec,
) -> Result<FundamentalSolution> {
    params.validate()?;
    grid.validate()?;
    if params.r == 0.0 && params.delta == 0.0 {
        return Err(Error::Precondition("closed forms need r > 0 or delta > 0, not both zero".into()));
    }
    let nodes = grid.log_nodes();
    match kind {
        SolutionKind::Decreasing => {
            if params.delta != 0.0 {
                return Err(Error::Precondition(
                    "decreasing closed form applies only when delta = 0".into(),
                ));
            }
            // rate of exp(-t - I(t)), I(t) = ∫_0^t 2r/σ²
            let r = params.r;
            let rate = |t: f64| {
                let s = curve.sigma(t.exp());
                1.0 + 2.0 * r / (s * s)
            };
            let (tail, cumulative) = forward_tail(&nodes, &rate, curve.sigma_hi(), r);
            let elasticity: Vec<f64> = tail.iter().map(|g| 1.0 - 1.0 / g).collect();
            // ln φ = ln J̃(s) − I(s) with I(s) = C(s) − s
            let log_f: Vec<f64> = nodes
                .iter()
                .zip(&tail)
                .zip(&cumulative)
                .map(|((&s, &g), &c)| g.ln() - c + s)
                .collect();
            Ok(FundamentalSolution::from_nodes(kind, params, curve, nodes, log_f, elasticity))
        }
        SolutionKind::Increasing => {
            if params.r != 0.0 {
                return Err(Error::Precondition(
                    "increasing closed form applies only when r = 0".into(),
                ));
            }
            let d = params.delta;
            // mirror t -> -t turns the head integral into a tail integral
            let mirrored: Vec<f64> = nodes.iter().rev().map(|s| -s).collect();
            let rate = |t: f64| {
                let s = curve.sigma((-t).exp());
                1.0 + 2.0 * d / (s * s)
            };
            let (mut tail, mut cumulative) = forward_tail(&mirrored, &rate, curve.sigma_hi(), d);
            tail.reverse();
            cumulative.reverse();
            let elasticity: Vec<f64> = tail.iter().map(|g| 1.0 / g).collect();
            // ln ψ = ln ψ̃(s) + s + K(s), K(s) = C(s) − s, and C flips sign under the mirror
            let log_f: Vec<f64> = tail
                .iter()
                .zip(&cumulative)
                .map(|(&g, &c)| g.ln() - c)
                .collect();
            Ok(FundamentalSolution::from_nodes(kind, params, curve, nodes, log_f, elasticity))
        }
    }
}

/// For ascending nodes `t_i` returns `G(t_i) = ∫_{t_i}^∞ exp(−∫_{t_i}^t ρ) dt`
/// and `C(t_i) = ∫_0^{t_i} ρ`, where `ρ ≥ 1`.
fn forward_tail(
    nodes: &[f64],
    rate: &dyn Fn(f64) -> f64,
    sigma_hi: f64,
    rate_param: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = nodes.len();
    let inner = |a: f64, b: f64| quadrature::integrate(rate, a, b, 1e-15, 1e-13).0;
    let piece = |a: f64, b: f64| {
        quadrature::integrate(|t| (-inner(a, t)).exp(), a, b, 1e-16, 1e-13).0
    };
    let mut seg = vec![0.0; n - 1];
    for i in 0..n - 1 {
        seg[i] = inner(nodes[i], nodes[i + 1]);
    }
    let mut cumulative = vec![0.0; n];
    for i in 1..n {
        cumulative[i] = cumulative[i - 1] + seg[i - 1];
    }
    let i0 = nodes.iter().position(|&t| t == 0.0).unwrap_or(0);
    let c0 = cumulative[i0];
    for c in &mut cumulative {
        *c -= c0;
    }
    let min_rate = 1.0 + 2.0 * rate_param / (sigma_hi * sigma_hi);
    let t_end = nodes[n - 1];
    let horizon = 45.0 / min_rate;
    let mut tail = vec![0.0; n];
    // split the infinite tail so each piece sees modest decay
    let mut g_end = 0.0f64;
    let pieces = 8;
    let mut acc_decay = 0.0f64;
    for k in 0..pieces {
        let a = t_end + horizon * k as f64 / pieces as f64;
        let b = t_end + horizon * (k + 1) as f64 / pieces as f64;
        let scale = (-acc_decay).exp();
        g_end += scale * piece(a, b);
        acc_decay += inner(a, b);
    }
    tail[n - 1] = g_end;
    for i in (0..n - 1).rev() {
        tail[i] = piece(nodes[i], nodes[i + 1]) + (-seg[i]).exp() * tail[i + 1];
    }
    (tail, cumulative)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RationalBoundaryParams;

    #[test]
    fn exponents_pinned_to_high_precision() {
        let p = ModelParams::new(0.2, 0.1).unwrap();
        let (a, b) = bs_exponents(&p, 0.3).unwrap();
        assert!((a + 2.806_082_918_348_712).abs() < 1e-14);
        assert_eq!(b, 1.0 - a);
        let (ad, bd) = bs_exponents(&p.dual(), 0.3).unwrap();
        assert!(ad < 0.0 && bd > 1.0);
        assert!(bs_exponents(&p, 0.0).is_err());
    }

    #[test]
    fn increasing_exponent_limits() {
        let only_r = ModelParams::new(0.2, 0.0).unwrap();
        assert!((increasing_exponent(&only_r, 0.3) - 1.0).abs() < 1e-14);
        let only_d = ModelParams::new(0.0, 0.1).unwrap();
        assert!((increasing_exponent(&only_d, 0.3) - (1.0 + 0.2 / 0.09)).abs() < 1e-13);
    }

    #[test]
    fn black_scholes_power_law() {
        let p = ModelParams::new(0.2, 0.1).unwrap();
        let c = VolatilityCurve::constant(0.3).unwrap();
        let (a, b) = bs_exponents(&p, 0.3).unwrap();
        let down = solve_fundamental(p, &c, SolutionKind::Decreasing, &GridSpec::default()).unwrap();
        let up = solve_fundamental(p, &c, SolutionKind::Increasing, &GridSpec::default()).unwrap();
        let pu = increasing_exponent(&p, 0.3);
        // the increasing exponent of this world is b of the dual world
        assert!((pu - (1.0 - bs_exponents(&p.dual(), 0.3).unwrap().0)).abs() < 1e-15);
        assert!(b > 1.0);
        for x in log_space(0.1, 10.0, 37) {
            assert!((down.value(x) / x.powf(a) - 1.0).abs() < 1e-9);
            assert!((up.value(x) / x.powf(pu) - 1.0).abs() < 1e-9);
            assert!((down.derivative(x) / (a * x.powf(a - 1.0)) - 1.0).abs() < 1e-9);
        }
        assert_eq!(down.value(1.0), 1.0);
    }

    #[test]
    fn degenerate_rates() {
        let c = VolatilityCurve::constant(0.4).unwrap();
        let g = GridSpec::new(0.01, 100.0, 101).unwrap();
        let no_r = ModelParams::new(0.0, 0.1).unwrap();
        let f = solve_fundamental(no_r, &c, SolutionKind::Decreasing, &g).unwrap();
        assert!(f.values().iter().all(|&v| v == 1.0));
        let no_d = ModelParams::new(0.2, 0.0).unwrap();
        let f = solve_fundamental(no_d, &c, SolutionKind::Increasing, &g).unwrap();
        for (x, v) in f.xs().iter().zip(f.values()) {
            assert!((v / x - 1.0).abs() < 1e-14);
        }
        let both = ModelParams::new(0.0, 0.0).unwrap();
        assert!(closed_form_special(both, &c, SolutionKind::Decreasing, &g).is_err());
        assert!(closed_form_special(no_d, &c, SolutionKind::Increasing, &g).is_err());
    }

    #[test]
    fn quadrature_forms_match_powers() {
        let c = VolatilityCurve::constant(0.3).unwrap();
        let g = GridSpec::new(0.05, 20.0, 201).unwrap();
        let no_d = ModelParams::new(0.2, 0.0).unwrap();
        let f = closed_form_special(no_d, &c, SolutionKind::Decreasing, &g).unwrap();
        let a = decreasing_exponent(&no_d, 0.3);
        let no_r = ModelParams::new(0.0, 0.1).unwrap();
        let h = closed_form_special(no_r, &c, SolutionKind::Increasing, &g).unwrap();
        let p = 1.0 + 2.0 * 0.1 / 0.09;
        for x in log_space(0.05, 20.0, 41) {
            assert!((f.value(x) / x.powf(a) - 1.0).abs() < 1e-10, "x={x}");
            assert!((f.elasticity(x) - a).abs() < 1e-10);
            assert!((h.value(x) / x.powf(p) - 1.0).abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn quadrature_agrees_with_shooting_for_varying_sigma() {
        // shooting with a tiny delta approaches the delta = 0 closed form
        let c = VolatilityCurve::bump(0.3, 0.15, 1.0, 0.5).unwrap();
        let g = GridSpec::new(0.05, 20.0, 401).unwrap();
        let exact = closed_form_special(ModelParams::new(0.2, 0.0).unwrap(), &c, SolutionKind::Decreasing, &g)
            .unwrap();
        let near = shoot(
            ModelParams::new(0.2, 1e-9).unwrap(),
            &c,
            SolutionKind::Decreasing,
            g.log_nodes(),
        )
        .unwrap();
        for x in log_space(0.05, 20.0, 31) {
            assert!((exact.value(x) / near.value(x) - 1.0).abs() < 1e-7, "x={x}");
        }
        let exact = closed_form_special(ModelParams::new(0.0, 0.1).unwrap(), &c, SolutionKind::Increasing, &g)
            .unwrap();
        let near = shoot(
            ModelParams::new(1e-10, 0.1).unwrap(),
            &c,
            SolutionKind::Increasing,
            g.log_nodes(),
        )
        .unwrap();
        for x in log_space(0.05, 20.0, 31) {
            assert!((exact.value(x) / near.value(x) - 1.0).abs() < 1e-7, "x={x}");
        }
    }

    #[test]
    fn residual_signs_and_convexity_for_rational_family() {
        let p = ModelParams::new(0.2, 0.1).unwrap();
        let c = VolatilityCurve::rational_boundary(p, RationalBoundaryParams::new(1.0, 0.4, 0.1)).unwrap();
        for kind in [SolutionKind::Decreasing, SolutionKind::Increasing] {
            let f = solve_fundamental(p, &c, kind, &GridSpec::default()).unwrap();
            assert!(f.max_ode_residual(&c) < 1e-6, "{kind:?}: {}", f.max_ode_residual(&c));
            let d = f.derivatives();
            match kind {
                SolutionKind::Decreasing => assert!(d.iter().all(|&v| v < 0.0)),
                SolutionKind::Increasing => assert!(d.iter().all(|&v| v > 0.0)),
            }
        }
    }
}
