//! Two volatilities that agree below the spot give the same puts at that spot
//! but different calls.

use perpdual::boundary::Side;
use perpdual::fundamental::GridSpec;
use perpdual::numerics::log_space;
use perpdual::pricing::PerpetualPricer;
use perpdual::{ModelParams, RationalBoundaryParams, VolatilityCurve};

fn main() -> perpdual::Result<()> {
    let p = ModelParams::new(0.2, 0.1)?;
    let shape = RationalBoundaryParams::new(1.0, 0.4, 0.1);
    let sigma = VolatilityCurve::rational_boundary(p, shape)?;
    let sigma2 = VolatilityCurve::piecewise_from_boundary(p, shape, 0.5)?;
    let grid = GridSpec::around(1.0);

    println!("{:>6} {:>10} {:>10}", "x", "sigma", "sigma2");
    for x in [0.1, 0.3, 0.5, 1.0, 3.0, 10.0] {
        println!("{x:>6} {:>10.6} {:>10.6}", sigma.sigma(x), sigma2.sigma(x));
    }
    let (pa, pb) = (
        PerpetualPricer::new(p, &sigma, Side::Put, &grid)?,
        PerpetualPricer::new(p, &sigma2, Side::Put, &grid)?,
    );
    let put_gap = log_space(0.01, 5.0, 400)
        .into_iter()
        .map(|k| Ok((pa.value(0.5, k)? - pb.value(0.5, k)?).abs()))
        .collect::<perpdual::Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    println!("puts at spot 0.5, strikes in [0.01, 5]: max |gap| {put_gap:.2e}");
    let (ca, cb) = (
        PerpetualPricer::new(p, &sigma, Side::Call, &grid)?,
        PerpetualPricer::new(p, &sigma2, Side::Call, &grid)?,
    );
    for (x, y) in [(0.5, 0.4), (3.0, 1.0), (3.0, 2.0)] {
        let (u, v) = (ca.value(x, y)?, cb.value(x, y)?);
        println!("call ({x}, {y}): {u:.8} vs {v:.8}, rel gap {:.2e}", (v / u - 1.0).abs());
    }
    Ok(())
}
