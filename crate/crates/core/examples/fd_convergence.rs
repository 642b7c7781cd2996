//! Finite-maturity prices approaching their perpetual limits: the put under
//! `σ` against the dual call under `σ̃`, and the mismatched call/put pair.

use perpdual::boundary::Side;
use perpdual::duality::{sigma_tilde, TransformGrid};
use perpdual::fd::{convergence_sweep, FdGridSpec, FdSettings};
use perpdual::{ModelParams, RationalBoundaryParams, VolatilityCurve};
use rayon::prelude::*;

fn main() -> perpdual::Result<()> {
    let p = ModelParams::new(0.2, 0.1)?;
    let sigma = VolatilityCurve::rational_boundary(p, RationalBoundaryParams::new(1.0, 0.4, 0.1))?;
    let tilde = sigma_tilde(&p, &sigma, &TransformGrid::default())?;
    let settings = FdSettings::default();
    let maturities: Vec<f64> = (1..=10).map(f64::from).collect();
    let runs = [
        ("P_sigma(T, 0.5, 0.4)", p, &sigma, Side::Put, 0.5, 0.4),
        ("c_tilde(T, 0.4, 0.5)", p.dual(), &tilde, Side::Call, 0.4, 0.5),
        ("C_sigma(T, 0.5, 0.4)", p, &sigma, Side::Call, 0.5, 0.4),
        ("p_tilde(T, 0.4, 0.5)", p.dual(), &tilde, Side::Put, 0.4, 0.5),
    ];
    let series = runs
        .par_iter()
        .map(|&(_, world, curve, side, x, y)| {
            let grid = FdGridSpec::around(curve, x, y, 10.0, &settings)?;
            convergence_sweep(&world, curve, side, x, y, &maturities, &grid, &settings.psor)
        })
        .collect::<perpdual::Result<Vec<_>>>()?;
    print!("{:>4}", "T");
    for r in &runs {
        print!(" {:>22}", r.0);
    }
    println!();
    for (i, t) in maturities.iter().enumerate() {
        print!("{t:>4}");
        for s in &series {
            print!(" {:>22.8}", s.points[i].price);
        }
        println!();
    }
    print!("perp");
    for s in &series {
        print!(" {:>22.8}", s.perpetual.unwrap_or(f64::NAN));
    }
    println!();
    Ok(())
}
