//! Call-put duality for the rational boundary family: the put in the primal
//! world against the call under `σ̃` in the dual world.

use perpdual::boundary::{standalone_boundary, Side};
use perpdual::duality::{sigma_tilde, square_grid, verify_duality, DualityTolerances, TransformGrid};
use perpdual::numerics::log_space;
use perpdual::{ModelParams, RationalBoundaryParams, VolatilityCurve};

fn main() -> perpdual::Result<()> {
    let p = ModelParams::new(0.2, 0.1)?;
    let shape = RationalBoundaryParams::new(1.0, 0.4, 0.1);
    let sigma = VolatilityCurve::rational_boundary(p, shape)?;
    let tilde = sigma_tilde(&p, &sigma, &TransformGrid::default())?;

    println!("{:>8} {:>12} {:>12} {:>12}", "y", "sigma", "tilde", "closed form");
    for y in log_space(0.1, 5.0, 8) {
        println!("{y:>8.4} {:>12.8} {:>12.8} {:>12.8}", sigma.sigma(y), tilde.sigma(y), shape.dual_sigma(&p, y));
    }
    let dual_call = standalone_boundary(p.dual(), &tilde, Side::Call, (0.05, 5.0), 201)?;
    println!("dual call boundary at 0.5: {:.12} (rational form 2.5)", dual_call.value(0.5));

    let rep = verify_duality(&p, &sigma, &tilde, &square_grid(0.1, 2.0, 20), DualityTolerances::default())?;
    println!(
        "20x20 grid: max rel price gap {:.2e}, boundary inverse gap {:.2e}, pass = {}",
        rep.max_rel_gap, rep.boundary_inverse_gap, rep.pass
    );
    Ok(())
}
