//! Recover the local volatility from synthetic perpetual puts and calls at one
//! spot, then glue the two sides.

use perpdual::boundary::Side;
use perpdual::calibration::{joint_consistency, recover_sigma_from_calls, recover_sigma_from_puts, synthetic_sample};
use perpdual::numerics::log_space;
use perpdual::{ModelParams, RationalBoundaryParams, VolatilityCurve};

fn main() -> perpdual::Result<()> {
    let p = ModelParams::new(0.2, 0.1)?;
    let sigma = VolatilityCurve::rational_boundary(p, RationalBoundaryParams::new(1.0, 0.4, 0.1))?;
    let x0 = 0.5;
    let strikes = log_space(0.01, 5.0, 400);

    let puts = recover_sigma_from_puts(&p, &synthetic_sample(&p, &sigma, Side::Put, x0, &strikes)?)?;
    let calls = recover_sigma_from_calls(&p, &synthetic_sample(&p, &sigma, Side::Call, x0, &strikes)?)?;
    for res in [&puts, &calls] {
        let d = &res.diagnostics;
        let (lo, hi) = match res.kind {
            Side::Put => (d.recoverable_span.0, x0),
            Side::Call => (x0, 5.0),
        };
        let worst = log_space(lo, hi, 1001)
            .into_iter()
            .map(|x| (res.recovered_sigma.sigma(x) / sigma.sigma(x) - 1.0).abs())
            .fold(0.0, f64::max);
        println!(
            "{:?}: threshold {:.8} (detected {:.8}), sup rel error {worst:.2e} on [{lo:.4}, {hi:.4}], repricing residual {:.2e}",
            res.kind, res.threshold, d.detected_threshold, d.repricing_residual
        );
        if let Some(w) = &d.tail_warning {
            println!("  warning: {w}");
        }
    }
    let joint = joint_consistency(&p, &puts, &calls)?;
    println!(
        "glued curve: continuity gap {:.2e}, put boundary gap {:.2e}, call boundary gap {:.2e}, pass = {}",
        joint.continuity_gap, joint.put_boundary_gap, joint.call_boundary_gap, joint.pass
    );
    Ok(())
}
