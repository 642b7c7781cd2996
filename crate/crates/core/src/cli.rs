//! Batch front end: one JSON config per run, dotted `--override`s, fixed
//! output formatting.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::boundary::{boundary_by_smoothfit, standalone_boundary, Boundary, Side};
use crate::calibration::{
    joint_consistency, read_price_sample, recover_sigma, render_price_sample, synthetic_sample, CalibrationOptions,
    CalibrationResult, PriceCurveSample,
};
use crate::duality::{
    self_duality_residual, sigma_hat, sigma_tilde, square_grid, verify_duality, DualityTolerances, TransformGrid,
};
use crate::error::{Error, Result};
use crate::fd::{convergence_sweep, FdGridSpec, FdSeries, FdSettings};
use crate::fundamental::{solve_fundamental, GridSpec, SolutionKind};
use crate::io::{fmt_num, render_csv};
use crate::model::{make_volatility, working_domain, CurveSpec, ModelParams, VolatilityCurve};
use crate::numerics::log_space;
use crate::pricing::{PerpetualPricer, Region};

#[derive(Debug, Parser)]
#[command(name = "perpdual", version, about = "Perpetual American options under local volatility")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// `dotted.key=value`; the value is read as JSON, else as a string.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Fundamental,
    Boundary,
    Price,
    Dualize,
    CheckDuality,
    Calibrate,
    FdSweep,
    SelfDualScan,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Fundamental => "fundamental",
            Command::Boundary => "boundary",
            Command::Price => "price",
            Command::Dualize => "dualize",
            Command::CheckDuality => "check-duality",
            Command::Calibrate => "calibrate",
            Command::FdSweep => "fd-sweep",
            Command::SelfDualScan => "self-dual-scan",
        }
    }
}

/// Log-spaced range or explicit list of levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Values(Vec<f64>),
    Range { lo: f64, hi: f64, n: usize },
}

impl Axis {
    fn range(lo: f64, hi: f64, n: usize) -> Self {
        Axis::Range { lo, hi, n }
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        let pts = match self {
            Axis::Values(v) => v.clone(),
            Axis::Range { lo, hi, n } => {
                if !(*lo > 0.0 && hi >= lo && *n >= 1) {
                    return Err(Error::Config(format!("bad axis range [{lo}, {hi}] with {n} points")));
                }
                log_space(*lo, *hi, *n)
            }
        };
        if pts.is_empty() || pts.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config("axis points must be positive and finite".into()));
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelParams,
    #[serde(default)]
    pub curve: Option<CurveSpec>,
    #[serde(default)]
    pub fundamental: FundamentalSection,
    #[serde(default)]
    pub boundary: BoundarySection,
    #[serde(default)]
    pub price: PriceSection,
    #[serde(default)]
    pub dualize: DualizeSection,
    #[serde(default)]
    pub check_duality: CheckDualitySection,
    #[serde(default)]
    pub calibrate: CalibrateSection,
    #[serde(default)]
    pub fd_sweep: FdSweepSection,
    #[serde(default)]
    pub self_dual_scan: SelfDualScanSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FundamentalSection {
    pub kind: SolutionKind,
    pub grid: GridSpec,
}

impl Default for FundamentalSection {
    fn default() -> Self {
        FundamentalSection {
            kind: SolutionKind::Decreasing,
            grid: GridSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMethod {
    Ode,
    SmoothFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundarySection {
    pub side: Side,
    pub method: BoundaryMethod,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Default for BoundarySection {
    fn default() -> Self {
        BoundarySection {
            side: Side::Put,
            method: BoundaryMethod::Ode,
            lo: 0.01,
            hi: 100.0,
            n: 401,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriceSection {
    pub side: Side,
    pub spots: Axis,
    pub strikes: Axis,
}

impl Default for PriceSection {
    fn default() -> Self {
        PriceSection {
            side: Side::Put,
            spots: Axis::range(0.1, 2.0, 20),
            strikes: Axis::range(0.1, 2.0, 20),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DualizeSection {
    /// `put` gives `σ̃`, `call` gives `σ̂`.
    pub side: Side,
    pub grid: TransformGrid,
    pub levels: Axis,
}

impl Default for DualizeSection {
    fn default() -> Self {
        DualizeSection {
            side: Side::Put,
            grid: TransformGrid::default(),
            levels: Axis::range(0.01, 100.0, 401),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckDualitySection {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub grid: TransformGrid,
    pub tolerances: DualityTolerances,
}

impl Default for CheckDualitySection {
    fn default() -> Self {
        CheckDualitySection {
            lo: 0.1,
            hi: 2.0,
            n: 20,
            grid: TransformGrid::default(),
            tolerances: DualityTolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSection {
    pub x0: f64,
    pub strikes: Axis,
    pub sides: Vec<Side>,
}

impl Default for SyntheticSection {
    fn default() -> Self {
        SyntheticSection {
            x0: 0.5,
            strikes: Axis::range(0.01, 5.0, 400),
            sides: vec![Side::Put, Side::Call],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateSection {
    /// Sample CSVs; when empty, samples are generated from `curve`.
    pub samples: Vec<String>,
    pub synthetic: SyntheticSection,
    pub options: CalibrationOptions,
    /// Rows of the recovered-curve table.
    pub n_out: usize,
}

impl Default for CalibrateSection {
    fn default() -> Self {
        CalibrateSection {
            samples: Vec::new(),
            synthetic: SyntheticSection::default(),
            options: CalibrationOptions::default(),
            n_out: 401,
        }
    }
}

/// Which curve prices the dual-world series of an FD sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualChoice {
    None,
    /// `σ̃` for puts, `σ̂` for calls.
    Matching,
    Tilde,
    Hat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FdSweepSection {
    pub side: Side,
    pub x: f64,
    pub y: f64,
    pub maturities: Vec<f64>,
    pub dual: DualChoice,
    pub settings: FdSettings,
    pub transform: TransformGrid,
}

impl Default for FdSweepSection {
    fn default() -> Self {
        FdSweepSection {
            side: Side::Put,
            x: 0.5,
            y: 0.4,
            maturities: (1..=20).map(|k| 0.5 * k as f64).collect(),
            dual: DualChoice::Matching,
            settings: FdSettings::default(),
            transform: TransformGrid::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelfDualScanSection {
    pub span: (f64, f64),
    /// Curves to scan; the configured `curve` is scanned as well.
    pub curves: Vec<CurveSpec>,
}

impl Default for SelfDualScanSection {
    fn default() -> Self {
        let bump = |amplitude: f64| CurveSpec::Bump {
            base: 0.25,
            amplitude,
            center: 1.0,
            width: 0.3,
        };
        SelfDualScanSection {
            span: (0.1, 10.0),
            curves: vec![
                CurveSpec::Constant { sigma: 0.25 },
                CurveSpec::RationalBoundary { a: 1.0, b: 0.4, c: 0.1 },
                bump(0.01),
                bump(0.02),
                bump(0.04),
            ],
        }
    }
}

/// Sets `dotted.key` in `doc` to `raw` (read as JSON, else as a string).
pub fn apply_override(doc: &mut Value, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not KEY=VALUE")))?;
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(Error::Config(format!("override key `{key}` has an empty segment")));
        }
        let map = match node {
            Value::Object(m) => m,
            _ => return Err(Error::Config(format!("override `{key}`: `{part}` is not inside an object"))),
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// Parsed config plus the SHA-256 of its canonical JSON (after overrides).
pub fn load_config(path: &Path, overrides: &[String]) -> Result<(RunConfig, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut doc: Value = serde_json::from_str(&text)?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let canonical = serde_json::to_string(&doc)?;
    let hash = hex::encode(Sha256::digest(canonical.as_bytes()));
    let mut cfg: RunConfig = serde_json::from_value(doc)?;
    cfg.model.validate()?;
    let base = path.parent().unwrap_or(Path::new("."));
    if let Some(CurveSpec::Tabulated { path }) = &mut cfg.curve {
        *path = resolve(base, path);
    }
    for s in &mut cfg.calibrate.samples {
        *s = resolve(base, s);
    }
    Ok((cfg, hash))
}

fn resolve(base: &Path, p: &str) -> String {
    let pb = Path::new(p);
    if pb.is_absolute() {
        p.to_string()
    } else {
        base.join(pb).to_string_lossy().into_owned()
    }
}

/// Caps the global thread pool from `PERPDUAL_THREADS` (0 or unset = auto).
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("PERPDUAL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("PERPDUAL_THREADS=`{raw}` is not a count")))?;
    if n > 0 {
        // a pool built earlier in the process wins; that is fine for a cap
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs one command; returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    configure_threads()?;
    let (cfg, hash) = load_config(&cli.config, &cli.overrides)?;
    std::fs::create_dir_all(&cli.out)?;
    let ctx = Context {
        cfg: &cfg,
        out: &cli.out,
        meta: vec![
            ("command".into(), cli.command.name().into()),
            ("config_sha256".into(), hash),
            ("r".into(), cfg.model.r.to_string()),
            ("delta".into(), cfg.model.delta.to_string()),
        ],
    };
    match cli.command {
        Command::Fundamental => ctx.fundamental(),
        Command::Boundary => ctx.boundary(),
        Command::Price => ctx.price(),
        Command::Dualize => ctx.dualize(),
        Command::CheckDuality => ctx.check_duality(),
        Command::Calibrate => ctx.calibrate(),
        Command::FdSweep => ctx.fd_sweep(),
        Command::SelfDualScan => ctx.self_dual_scan(),
    }
}

struct Context<'a> {
    cfg: &'a RunConfig,
    out: &'a Path,
    meta: Vec<(String, String)>,
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn row(vals: &[f64]) -> Vec<String> {
    vals.iter().map(|&v| fmt_num(v)).collect()
}

impl Context<'_> {
    fn params(&self) -> ModelParams {
        self.cfg.model
    }

    fn curve(&self) -> Result<VolatilityCurve> {
        let spec = self
            .cfg
            .curve
            .as_ref()
            .ok_or_else(|| Error::Config("this command needs a `curve` section".into()))?;
        make_volatility(spec, self.params())
    }

    fn meta_with(&self, extra: &[(String, String)]) -> Vec<(String, String)> {
        let mut m = self.meta.clone();
        m.extend_from_slice(extra);
        m
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.out.join(name);
        std::fs::write(&path, contents)?;
        Ok(path)
    }

    fn write_csv(&self, name: &str, extra: &[(String, String)], header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        self.write(name, &render_csv(&self.meta_with(extra), header, rows))
    }

    fn write_json<T: Serialize>(&self, name: &str, extra: &[(String, String)], value: &T) -> Result<PathBuf> {
        let doc = serde_json::json!({
            "meta": self.meta_with(extra).into_iter().collect::<std::collections::BTreeMap<_, _>>(),
            "report": value,
        });
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        self.write(name, &text)
    }

    fn fundamental(&self) -> Result<Vec<PathBuf>> {
        let s = &self.cfg.fundamental;
        let curve = self.curve()?;
        let f = solve_fundamental(self.params(), &curve, s.kind, &s.grid)?;
        let rows: Vec<Vec<String>> = f
            .xs()
            .iter()
            .zip(f.values())
            .zip(f.derivatives())
            .map(|((&x, v), d)| row(&[x, v, d, x * d / v]))
            .collect();
        let extra = [
            kv("kind", format!("{:?}", s.kind).to_lowercase()),
            kv("curve", curve.id()),
            kv("domain", format!("[{:e},{:e}]", s.grid.lo, s.grid.hi)),
            kv("ode_rtol", fmt_num(ODE_RTOL)),
            kv("max_ode_residual", fmt_num(f.max_ode_residual(&curve))),
        ];
        Ok(vec![self.write_csv("fundamental.csv", &extra, &["x", "f", "fprime", "elasticity"], &rows)?])
    }

    fn boundary(&self) -> Result<Vec<PathBuf>> {
        let s = &self.cfg.boundary;
        let curve = self.curve()?;
        let grid = GridSpec::covering(s.lo, s.hi);
        let b: Boundary = match s.method {
            BoundaryMethod::Ode => standalone_boundary(self.params(), &curve, s.side, (s.lo, s.hi), s.n)?,
            BoundaryMethod::SmoothFit => {
                boundary_by_smoothfit(self.params(), &curve, s.side, &log_space(s.lo, s.hi, s.n), &grid)?
            }
        };
        let rows: Vec<Vec<String>> = b
            .levels()
            .iter()
            .zip(b.values())
            .zip(b.derivatives())
            .map(|((&l, v), d)| row(&[l, v, d]))
            .collect();
        let extra = [
            kv("side", side_name(s.side)),
            kv("method", format!("{:?}", s.method).to_lowercase()),
            kv("curve", curve.id()),
            kv("anchor", format!("({},{})", fmt_num(b.anchor.0), fmt_num(b.anchor.1))),
            kv("strike_span", format!("[{:e},{:e}]", s.lo, s.hi)),
            kv("domain", format!("[{:e},{:e}]", grid.lo, grid.hi)),
            kv("ode_rtol", fmt_num(ODE_RTOL)),
        ];
        Ok(vec![self.write_csv("boundary.csv", &extra, &["strike", "boundary", "derivative"], &rows)?])
    }

    fn price(&self) -> Result<Vec<PathBuf>> {
        let s = &self.cfg.price;
        let curve = self.curve()?;
        let spots = s.spots.points()?;
        let strikes = s.strikes.points()?;
        let lo = spots.iter().chain(&strikes).cloned().fold(f64::INFINITY, f64::min);
        let hi = spots.iter().chain(&strikes).cloned().fold(0.0, f64::max);
        let grid = GridSpec::covering(lo, hi);
        let pricer = PerpetualPricer::new(self.params(), &curve, s.side, &grid)?;
        let pairs: Vec<(f64, f64)> = spots
            .iter()
            .flat_map(|&x| strikes.iter().map(move |&y| (x, y)))
            .collect();
        let prices = pricer.price_many(&pairs)?;
        let rows: Vec<Vec<String>> = pairs
            .iter()
            .zip(&prices)
            .map(|(&(x, y), p)| {
                let mut r = row(&[x, y, p.value]);
                r.push(
                    match p.region {
                        Region::Exercise => "exercise",
                        Region::Continuation => "continuation",
                    }
                    .into(),
                );
                r.push(p.boundary_level.map_or_else(|| "nan".into(), fmt_num));
                r
            })
            .collect();
        let extra = [
            kv("side", side_name(s.side)),
            kv("curve", curve.id()),
            kv("domain", format!("[{:e},{:e}]", grid.lo, grid.hi)),
            kv("ode_rtol", fmt_num(ODE_RTOL)),
        ];
        Ok(vec![self.write_csv(
            "prices.csv",
            &extra,
            &["spot", "strike", "price", "region", "boundary"],
            &rows,
        )?])
    }

    fn dualize(&self) -> Result<Vec<PathBuf>> {
        let s = &self.cfg.dualize;
        let curve = self.curve()?;
        let dual = match s.side {
            Side::Put => sigma_tilde(&self.params(), &curve, &s.grid)?,
            Side::Call => sigma_hat(&self.params(), &curve, &s.grid)?,
        };
        let rows: Vec<Vec<String>> = s
            .levels
            .points()?
            .into_iter()
            .map(|y| row(&[y, curve.sigma(y), dual.sigma(y)]))
            .collect();
        let extra = [
            kv("transform", if s.side == Side::Put { "sigma_tilde" } else { "sigma_hat" }),
            kv("curve", curve.id()),
            kv("domain", format!("[{:e},{:e}]", s.grid.lo, s.grid.hi)),
            kv("transform_nodes", s.grid.n),
        ];
        Ok(vec![self.write_csv("dual_vol.csv", &extra, &["level", "sigma", "dual_sigma"], &rows)?])
    }

    fn check_duality(&self) -> Result<Vec<PathBuf>> {
        let s = &self.cfg.check_duality;
        let curve = self.curve()?;
        let tilde = sigma_tilde(&self.params(), &curve, &s.grid)?;
        let report = verify_duality(&self.params(), &curve, &tilde, &square_grid(s.lo, s.hi, s.n), s.tolerances)?;
        let extra = [
            kv("curve", curve.id()),
            kv("domain", format!("[{:e},{:e}]", s.grid.lo, s.grid.hi)),
            kv("price_rel_tol", fmt_num(s.tolerances.price_rel)),
            kv("boundary_inverse_tol", fmt_num(s.tolerances.boundary_inverse)),
        ];
        Ok(vec![self.write_json("duality_report.json", &extra, &report)?])
    }

    fn calibrate(&self) -> Result<Vec<PathBuf>> {
        let s = &self.cfg.calibrate;
        let mut written = Vec::new();
        let mut inputs: Vec<(ModelParams, PriceCurveSample)> = Vec::new();
        let generator = if s.samples.is_empty() {
            let curve = self.curve()?;
            let strikes = s.synthetic.strikes.points()?;
            for &side in &s.synthetic.sides {
                let sample = synthetic_sample(&self.params(), &curve, side, s.synthetic.x0, &strikes)?;
                let name = format!("sample_{}.csv", side_name(side));
                written.push(self.write(&name, &render_price_sample(&self.params(), &sample)?)?);
                inputs.push((self.params(), sample));
            }
            Some(curve)
        } else {
            for p in &s.samples {
                inputs.push(read_price_sample(Path::new(p))?);
            }
            None
        };
        let mut results: Vec<CalibrationResult> = Vec::new();
        for (params, sample) in &inputs {
            let res = recover_sigma(params, sample, &s.options)?;
            let side = side_name(res.kind);
            let mut header = vec!["x", "sigma"];
            if generator.is_some() {
                header.extend(["sigma_generator", "rel_error"]);
            }
            let rows: Vec<Vec<String>> = res
                .sigma_table(s.n_out)
                .into_iter()
                .map(|(x, sig)| match &generator {
                    Some(g) => row(&[x, sig, g.sigma(x), (sig / g.sigma(x) - 1.0).abs()]),
                    None => row(&[x, sig]),
                })
                .collect();
            let extra = [
                kv("side", side),
                kv("x0", res.spot_x0),
                kv("threshold", fmt_num(res.threshold)),
                kv(
                    "domain",
                    format!("[{:e},{:e}]", s.options.span_factor * res.spot_x0, res.spot_x0 / s.options.span_factor),
                ),
                kv("threshold_tol", fmt_num(s.options.threshold_tol)),
            ];
            written.push(self.write_csv(&format!("calibration_{side}.csv"), &extra, &header, &rows)?);
            written.push(self.write_json(&format!("calibration_{side}.json"), &extra, &CalibrationSummary::new(&res))?);
            results.push(res);
        }
        let put = results.iter().find(|r| r.kind == Side::Put);
        let call = results.iter().find(|r| r.kind == Side::Call);
        if let (Some(p), Some(c)) = (put, call) {
            if p.params == c.params {
                let report = joint_consistency(&p.params, p, c)?;
                let extra = [kv("x0", p.spot_x0)];
                written.push(self.write_json("joint_consistency.json", &extra, &report)?);
            }
        }
        Ok(written)
    }

    fn fd_sweep(&self) -> Result<Vec<PathBuf>> {
        let s = &self.cfg.fd_sweep;
        let params = self.params();
        let curve = self.curve()?;
        let t_last = *s
            .maturities
            .last()
            .ok_or_else(|| Error::Config("fd_sweep.maturities is empty".into()))?;
        let sweep = |world: &ModelParams, c: &VolatilityCurve, side: Side, x: f64, y: f64| -> Result<(FdSeries, FdGridSpec)> {
            let grid = FdGridSpec::around(c, x, y, t_last, &s.settings)?;
            Ok((convergence_sweep(world, c, side, x, y, &s.maturities, &grid, &s.settings.psor)?, grid))
        };
        let transform = match (s.dual, s.side) {
            (DualChoice::None, _) => None,
            (DualChoice::Tilde, _) | (DualChoice::Matching, Side::Put) => Some("sigma_tilde"),
            (DualChoice::Hat, _) | (DualChoice::Matching, Side::Call) => Some("sigma_hat"),
        };
        let dual_curve = match transform {
            Some("sigma_tilde") => Some(sigma_tilde(&params, &curve, &s.transform)?),
            Some(_) => Some(sigma_hat(&params, &curve, &s.transform)?),
            None => None,
        };
        let other = match s.side {
            Side::Put => Side::Call,
            Side::Call => Side::Put,
        };
        let (primal, dual) = rayon::join(
            || sweep(&params, &curve, s.side, s.x, s.y),
            || {
                dual_curve
                    .as_ref()
                    .map(|c| sweep(&params.dual(), c, other, s.y, s.x))
                    .transpose()
            },
        );
        let ((primal, grid), dual) = (primal?, dual?);
        let dual = dual.map(|(series, _)| series);
        let rows: Vec<Vec<String>> = primal
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| match &dual {
                Some(d) => {
                    let q = d.points[i].price;
                    row(&[p.maturity, p.price, q, (p.price - q).abs() / p.price.abs().max(q.abs())])
                }
                None => {
                    let mut r = row(&[p.maturity, p.price]);
                    r.extend(["nan".to_string(), "nan".to_string()]);
                    r
                }
            })
            .collect();
        let opt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), fmt_num);
        let extra = [
            kv("side", side_name(s.side)),
            kv("x", s.x),
            kv("y", s.y),
            kv("dual_curve", transform.unwrap_or("none")),
            kv("perpetual_primal", opt(primal.perpetual)),
            kv("perpetual_dual", opt(dual.as_ref().and_then(|d| d.perpetual))),
            kv("coarse_grid", primal.coarse_grid || dual.as_ref().is_some_and(|d| d.coarse_grid)),
            kv("n_space", s.settings.n_space),
            kv("steps_per_year", s.settings.steps_per_year),
            kv("log_domain", format!("[{},{}]", fmt_num(grid.s_min), fmt_num(grid.s_max))),
            kv("psor_tol", fmt_num(s.settings.psor.tol)),
        ];
        Ok(vec![self.write_csv(
            "fd_sweep.csv",
            &extra,
            &["T", "price_primal", "price_dual", "rel_gap"],
            &rows,
        )?])
    }

    fn self_dual_scan(&self) -> Result<Vec<PathBuf>> {
        let s = &self.cfg.self_dual_scan;
        let params = self.params();
        let mut curves: Vec<VolatilityCurve> = Vec::new();
        if self.cfg.curve.is_some() {
            curves.push(self.curve()?);
        }
        for spec in &s.curves {
            curves.push(make_volatility(spec, params)?);
        }
        use rayon::prelude::*;
        let reports = curves
            .par_iter()
            .map(|c| self_duality_residual(&params, c, s.span))
            .collect::<Result<Vec<_>>>()?;
        let rows: Vec<Vec<String>> = reports
            .iter()
            .map(|r| {
                vec![
                    format!("\"{}\"", r.curve_id.replace('"', "'")),
                    fmt_num(r.residual),
                    fmt_num(r.worst_level),
                    format!("{:?}", r.regime).to_lowercase(),
                ]
            })
            .collect();
        let extra = [kv("domain", format!("[{:e},{:e}]", s.span.0, s.span.1)), kv("levels", 2001)];
        Ok(vec![self.write_csv(
            "self_dual_scan.csv",
            &extra,
            &["curve", "residual", "worst_level", "regime"],
            &rows,
        )?])
    }
}

/// Relative tolerance of the fundamental-solution integrator.
const ODE_RTOL: f64 = 1e-11;

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Put => "put",
        Side::Call => "call",
    }
}

#[derive(Serialize)]
struct CalibrationSummary<'a> {
    kind: Side,
    x0: f64,
    threshold: f64,
    recovered_curve: &'a str,
    dual_vol_curve: &'a str,
    working_domain: (f64, f64),
    diagnostics: &'a crate::calibration::CalibrationDiagnostics,
}

impl<'a> CalibrationSummary<'a> {
    fn new(res: &'a CalibrationResult) -> Self {
        CalibrationSummary {
            kind: res.kind,
            x0: res.spot_x0,
            threshold: res.threshold,
            recovered_curve: res.recovered_sigma.id(),
            dual_vol_curve: res.dual_vol.id(),
            working_domain: working_domain(res.spot_x0),
            diagnostics: &res.diagnostics,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_set_nested_keys_and_keep_strings() {
        let mut doc: Value = serde_json::json!({"model": {"r": 0.2, "delta": 0.1}});
        apply_override(&mut doc, "model.r=0.3").unwrap();
        apply_override(&mut doc, "fd_sweep.side=call").unwrap();
        assert_eq!(doc["model"]["r"], 0.3);
        assert_eq!(doc["fd_sweep"]["side"], "call");
        assert!(apply_override(&mut doc, "model.r").is_err());
        assert!(apply_override(&mut doc, "model.r.x=1").is_err());
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let doc = serde_json::json!({"model": {"r": 0.2, "delta": 0.1}, "boundary": {"sied": "put"}});
        assert!(serde_json::from_value::<RunConfig>(doc).is_err());
    }
}
