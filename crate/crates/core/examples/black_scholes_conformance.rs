//! Constant volatility: numeric fundamental solution, boundary and price
//! against the power-law closed forms.

use perpdual::boundary::{put_boundary_smoothfit, Side};
use perpdual::fundamental::{bs_exponents, solve_fundamental, GridSpec, SolutionKind};
use perpdual::numerics::log_space;
use perpdual::pricing::{bs_put_price, PerpetualPricer};
use perpdual::{ModelParams, VolatilityCurve};

fn main() -> perpdual::Result<()> {
    let p = ModelParams::new(0.2, 0.1)?;
    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "vol", "a", "f_rel_err", "x*/y - a/(a-1)", "price_rel_err");
    for vol in [0.1, 0.3, 0.6] {
        let curve = VolatilityCurve::constant(vol)?;
        let (a, _) = bs_exponents(&p, vol)?;
        let f = solve_fundamental(p, &curve, SolutionKind::Decreasing, &GridSpec::default())?;
        let f_err = log_space(0.1, 10.0, 101)
            .into_iter()
            .map(|x| (f.value(x) / x.powf(a) - 1.0).abs())
            .fold(0.0, f64::max);
        let b_err = (put_boundary_smoothfit(&f, 1.0)? - a / (a - 1.0)).abs();
        let pricer = PerpetualPricer::new(p, &curve, Side::Put, &GridSpec::around(1.0))?;
        let (x, y) = (1.2, 1.0);
        let price_err = (pricer.value(x, y)? / bs_put_price(&p, vol, x, y)? - 1.0).abs();
        println!("{vol:>6} {a:>12.6} {f_err:>12.2e} {b_err:>12.2e} {price_err:>12.2e}");
    }
    Ok(())
}
