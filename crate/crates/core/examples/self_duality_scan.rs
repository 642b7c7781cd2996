//! Distance between a curve and its own dual, for constants and for bumps of
//! growing size.

use perpdual::duality::self_duality_residual;
use perpdual::{ModelParams, RationalBoundaryParams, VolatilityCurve};

fn main() -> perpdual::Result<()> {
    let p = ModelParams::new(0.2, 0.1)?;
    let mut curves = vec![
        VolatilityCurve::constant(0.1)?,
        VolatilityCurve::constant(0.3)?,
        VolatilityCurve::rational_boundary(p, RationalBoundaryParams::new(1.0, 0.4, 0.1))?,
    ];
    for eps in [0.005, 0.01, 0.02, 0.04, 0.08] {
        curves.push(VolatilityCurve::bump(0.25, eps, 1.0, 0.3)?);
    }
    for c in &curves {
        let rep = self_duality_residual(&p, c, (0.1, 10.0))?;
        println!("{:<62} residual {:.3e} at {:.4}", c.id(), rep.residual, rep.worst_level);
    }
    Ok(())
}
