//! Put and call boundaries of a bumped volatility by smooth fit and by the
//! boundary ODE.

use perpdual::boundary::{boundary_by_smoothfit, standalone_boundary, Side};
use perpdual::fundamental::GridSpec;
use perpdual::numerics::log_space;
use perpdual::{ModelParams, VolatilityCurve};

fn main() -> perpdual::Result<()> {
    let p = ModelParams::new(0.2, 0.1)?;
    let curve = VolatilityCurve::bump(0.25, 0.04, 1.0, 0.3)?;
    let span = (0.1, 5.0);
    let levels = log_space(span.0, span.1, 9);
    for side in [Side::Put, Side::Call] {
        let ode = standalone_boundary(p, &curve, side, span, 401)?;
        let fit = boundary_by_smoothfit(p, &curve, side, &levels, &GridSpec::covering(span.0, span.1))?;
        println!("{side:?} boundary (anchored at {:.3})", ode.anchor.0);
        println!("{:>10} {:>14} {:>14} {:>10}", "strike", "smooth fit", "ode", "rel gap");
        for (&y, v) in levels.iter().zip(fit.values()) {
            let w = ode.value(y);
            println!("{y:>10.4} {v:>14.10} {w:>14.10} {:>10.2e}", (w / v - 1.0).abs());
        }
    }
    Ok(())
}
