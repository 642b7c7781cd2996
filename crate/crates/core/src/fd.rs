//! Finite-maturity American options by finite differences, used as an
//! independent check on the perpetual prices.
//!
//! Crank–Nicolson in `s = ln x` on a uniform grid, with two fully implicit
//! start-up steps (each as two half steps) to damp the payoff kink. The
//! early-exercise constraint is enforced by projected SOR at every step.

use serde::{Deserialize, Serialize};

use crate::boundary::Side;
use crate::error::{ensure_positive, Error, Result};
use crate::fundamental::GridSpec;
use crate::model::{ModelParams, VolatilityCurve};
use crate::pricing::PerpetualPricer;

/// Log-spot span, node counts and maturity of one solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdGridSpec {
    pub s_min: f64,
    pub s_max: f64,
    pub n_space: usize,
    /// Time steps over the whole maturity.
    pub n_time: usize,
    pub maturity: f64,
}

/// Rules for building an [`FdGridSpec`] around a spot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FdSettings {
    pub n_space: usize,
    pub steps_per_year: f64,
    /// Half-width of the log-spot span in units of `σ̄√T`.
    pub width_sigmas: f64,
    /// Cap on the half-width (in `ln x`).
    pub max_half_width: f64,
    pub psor: PsorSettings,
}

impl Default for FdSettings {
    fn default() -> Self {
        FdSettings {
            n_space: 800,
            steps_per_year: 1460.0,
            width_sigmas: 6.0,
            max_half_width: 7.5,
            psor: PsorSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsorSettings {
    pub omega: f64,
    /// Stop when the largest update is below `tol` times the strike.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PsorSettings {
    fn default() -> Self {
        PsorSettings {
            omega: 1.25,
            tol: 1e-10,
            max_iter: 20_000,
        }
    }
}

impl FdGridSpec {
    /// Span `ln x ± min(width·σ̄√T, cap)`, widened to keep the strike at least
    /// one unit of `ln x` inside.
    pub fn around(curve: &VolatilityCurve, x: f64, y: f64, maturity: f64, settings: &FdSettings) -> Result<Self> {
        ensure_positive("x", x)?;
        ensure_positive("y", y)?;
        ensure_positive("maturity", maturity)?;
        let reach = (settings.width_sigmas * curve.sigma_hi() * maturity.sqrt()).min(settings.max_half_width);
        let half = reach.max((y / x).ln().abs() + 1.0);
        let n_time = (settings.steps_per_year * maturity).ceil().max(1.0) as usize;
        let spec = FdGridSpec {
            s_min: x.ln() - half,
            s_max: x.ln() + half,
            n_space: settings.n_space,
            n_time,
            maturity,
        };
        spec.validate(x)?;
        Ok(spec)
    }

    pub fn validate(&self, x: f64) -> Result<()> {
        if self.n_space < 3 {
            return Err(Error::invalid("n_space", self.n_space as f64, "need at least 3 nodes"));
        }
        if self.n_time < 1 {
            return Err(Error::invalid("n_time", self.n_time as f64, "need at least 1 step"));
        }
        ensure_positive("maturity", self.maturity)?;
        let s = x.ln();
        if !(self.s_min < s && s < self.s_max) {
            return Err(Error::OutOfRange {
                what: "ln spot (FD span)",
                value: s,
                lo: self.s_min,
                hi: self.s_max,
            });
        }
        Ok(())
    }

    fn step(&self) -> f64 {
        (self.s_max - self.s_min) / (self.n_space - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdPrice {
    pub price: f64,
    pub maturity: f64,
    /// The strike kink sits too close to the span edge or the spacing is too
    /// coarse to resolve it.
    pub coarse_grid: bool,
    /// Largest PSOR iteration count over all steps.
    pub max_psor_iterations: usize,
}

/// Price at `(x, y)` and maturity `grid.maturity`.
pub fn fd_american_price(
    params: &ModelParams,
    curve: &VolatilityCurve,
    side: Side,
    x: f64,
    y: f64,
    grid: &FdGridSpec,
    psor: &PsorSettings,
) -> Result<FdPrice> {
    let mut solver = Solver::new(params, curve, side, x, y, grid, psor)?;
    solver.march(grid.maturity, grid.n_time)?;
    Ok(solver.result())
}

/// Prices at every maturity of `maturities` (increasing) from one march in
/// time-to-maturity on the grid of `grid` (whose maturity must cover the
/// last entry). The time step is `grid.maturity / grid.n_time`, shortened
/// per segment so that every maturity is hit exactly.
#[allow(clippy::too_many_arguments)]
pub fn convergence_sweep(
    params: &ModelParams,
    curve: &VolatilityCurve,
    side: Side,
    x: f64,
    y: f64,
    maturities: &[f64],
    grid: &FdGridSpec,
    psor: &PsorSettings,
) -> Result<FdSeries> {
    if maturities.is_empty() {
        return Err(Error::Precondition("no maturities requested".into()));
    }
    for w in maturities.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Precondition("maturities must be strictly increasing".into()));
        }
    }
    let t_last = maturities[maturities.len() - 1];
    if t_last > grid.maturity * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "grid maturity {} is shorter than the last requested maturity {t_last}",
            grid.maturity
        )));
    }
    ensure_positive("first maturity", maturities[0])?;
    let dt = grid.maturity / grid.n_time as f64;
    let mut solver = Solver::new(params, curve, side, x, y, grid, psor)?;
    let mut points = Vec::with_capacity(maturities.len());
    let mut t = 0.0;
    for &m in maturities {
        let steps = ((m - t) / dt - 1e-9).ceil().max(1.0) as usize;
        solver.march(m - t, steps)?;
        t = m;
        points.push(solver.result());
    }
    let perpetual = PerpetualPricer::new(*params, curve, side, &GridSpec::around(x))
        .and_then(|p| p.value(x, y))
        .ok();
    let last = points[points.len() - 1].price;
    Ok(FdSeries {
        side,
        x,
        y,
        rel_gap_to_perpetual: perpetual.map(|p| (last - p).abs() / p),
        perpetual,
        coarse_grid: points.iter().any(|p| p.coarse_grid),
        points,
    })
}

/// Price against maturity at one `(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdSeries {
    pub side: Side,
    pub x: f64,
    pub y: f64,
    pub points: Vec<FdPrice>,
    pub perpetual: Option<f64>,
    pub rel_gap_to_perpetual: Option<f64>,
    pub coarse_grid: bool,
}

impl FdSeries {
    pub fn prices(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.price).collect()
    }

    /// Largest decrease between consecutive maturities, relative to price.
    pub fn max_decrease(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[0].price - w[1].price) / w[0].price.max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

/// Implicit start-up steps, each taken as two half steps.
const RANNACHER_STEPS: usize = 2;

struct Solver {
    /// Operator `L u_i = lower_i u_{i-1} + diag_i u_i + upper_i u_{i+1}`.
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    payoff: Vec<f64>,
    u: Vec<f64>,
    spot_index: usize,
    strike: f64,
    psor: PsorSettings,
    steps_taken: usize,
    maturity: f64,
    coarse_grid: bool,
    max_iter_seen: usize,
}

impl Solver {
    fn new(
        params: &ModelParams,
        curve: &VolatilityCurve,
        side: Side,
        x: f64,
        y: f64,
        grid: &FdGridSpec,
        psor: &PsorSettings,
    ) -> Result<Self> {
        params.validate()?;
        ensure_positive("y", y)?;
        grid.validate(x)?;
        if !(psor.omega > 0.0 && psor.omega < 2.0) {
            return Err(Error::invalid("omega", psor.omega, "must lie in (0, 2)"));
        }
        let h = grid.step();
        // shift the grid so that ln x is a node
        let sx = x.ln();
        let spot_index = ((sx - grid.s_min) / h).round() as usize;
        let spot_index = spot_index.clamp(1, grid.n_space - 2);
        let s0 = sx - spot_index as f64 * h;
        let n = grid.n_space;
        let (r, d) = (params.r, params.delta);
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut payoff = vec![0.0; n];
        for i in 0..n {
            let xi = (s0 + i as f64 * h).exp();
            let a = 0.5 * curve.sigma(xi).powi(2);
            let mu = r - d - a;
            lower[i] = a / (h * h) - mu / (2.0 * h);
            upper[i] = a / (h * h) + mu / (2.0 * h);
            diag[i] = -2.0 * a / (h * h) - r;
            payoff[i] = match side {
                Side::Put => (y - xi).max(0.0),
                Side::Call => (xi - y).max(0.0),
            };
        }
        let sy = y.ln();
        let kink = (sy - s0) / h;
        let coarse_grid = kink < 2.0 || kink > (n - 3) as f64 || h > 0.1 * (1.0 + (sy - sx).abs());
        Ok(Solver {
            lower,
            diag,
            upper,
            u: payoff.clone(),
            payoff,
            spot_index,
            strike: y,
            psor: *psor,
            steps_taken: 0,
            maturity: 0.0,
            coarse_grid,
            max_iter_seen: 0,
        })
    }

    fn march(&mut self, span: f64, steps: usize) -> Result<()> {
        let dt = span / steps as f64;
        for _ in 0..steps {
            if self.steps_taken < RANNACHER_STEPS {
                self.step(0.5 * dt, 1.0)?;
                self.step(0.5 * dt, 1.0)?;
            } else {
                self.step(dt, 0.5)?;
            }
            self.steps_taken += 1;
        }
        self.maturity += span;
        Ok(())
    }

    /// One θ-scheme step `(I − θ dt L) u⁺ = (I + (1−θ) dt L) u`, projected on
    /// the payoff. End nodes keep their intrinsic values.
    fn step(&mut self, dt: f64, theta: f64) -> Result<()> {
        let n = self.u.len();
        let explicit = (1.0 - theta) * dt;
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            rhs[i] = self.u[i]
                + explicit * (self.lower[i] * self.u[i - 1] + self.diag[i] * self.u[i] + self.upper[i] * self.u[i + 1]);
        }
        let implicit = theta * dt;
        let tol = self.psor.tol * self.strike;
        let omega = self.psor.omega;
        for iter in 1..=self.psor.max_iter {
            let mut change: f64 = 0.0;
            for i in 1..n - 1 {
                let b = 1.0 - implicit * self.diag[i];
                let gs = (rhs[i] + implicit * (self.lower[i] * self.u[i - 1] + self.upper[i] * self.u[i + 1])) / b;
                let next = (self.u[i] + omega * (gs - self.u[i])).max(self.payoff[i]);
                change = change.max((next - self.u[i]).abs());
                self.u[i] = next;
            }
            if change <= tol {
                self.max_iter_seen = self.max_iter_seen.max(iter);
                return Ok(());
            }
        }
        Err(Error::Numeric(format!(
            "projected SOR did not reach {tol:e} in {} iterations",
            self.psor.max_iter
        )))
    }

    fn result(&self) -> FdPrice {
        FdPrice {
            price: self.u[self.spot_index],
            maturity: self.maturity,
            coarse_grid: self.coarse_grid,
            max_psor_iterations: self.max_iter_seen,
        }
    }
}
