//! Invariants of the model, solvers and transforms as randomized properties.

use perpdual::boundary::{standalone_boundary, Side};
use perpdual::calibration::{recover_sigma_from_puts, synthetic_sample};
use perpdual::duality::self_duality_residual;
use perpdual::fd::{convergence_sweep, FdGridSpec, FdSettings};
use perpdual::fundamental::{bs_exponents, solve_fundamental, GridSpec, SolutionKind};
use perpdual::numerics::log_space;
use perpdual::pricing::{bs_call_price, bs_put_price, PerpetualPricer};
use perpdual::{dual_params, validate_hvol, ModelParams, RationalBoundaryParams, VolatilityCurve};
use proptest::prelude::*;

/// Rates with `r > δ ≥ 0`.
fn put_world() -> impl Strategy<Value = ModelParams> {
    (0.02f64..0.3, 0.0f64..0.9).prop_map(|(r, frac)| ModelParams::new(r, r * frac).unwrap())
}

fn bump() -> impl Strategy<Value = VolatilityCurve> {
    (0.15f64..0.4, -0.05f64..0.08, 0.3f64..3.0, 0.2f64..0.6)
        .prop_map(|(base, amp, center, width)| VolatilityCurve::bump(base, amp, center, width).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn dual_params_swaps_rates_and_is_involutive(r in 0.0f64..1.0, d in 0.0f64..1.0) {
        let p = ModelParams::new(r, d).unwrap();
        let q = dual_params(p);
        prop_assert_eq!((q.r, q.delta), (d, r));
        prop_assert_eq!(dual_params(q), p);
    }

    #[test]
    fn exponents_sum_to_one(p in put_world(), vol in 0.05f64..1.0) {
        let (a, b) = bs_exponents(&p, vol).unwrap();
        prop_assert!(a < 0.0);
        prop_assert!((a + b - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn constant_prices_increase_with_volatility(
        p in put_world(), v1 in 0.05f64..0.8, bump in 0.0f64..0.3, x in 0.05f64..5.0, y in 0.05f64..5.0,
    ) {
        let v2 = v1 + bump;
        prop_assert!(bs_put_price(&p, v1, x, y).unwrap() <= bs_put_price(&p, v2, x, y).unwrap() + 1e-14);
        if p.delta > 0.0 {
            prop_assert!(bs_call_price(&p, v1, x, y).unwrap() <= bs_call_price(&p, v2, x, y).unwrap() + 1e-14);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bump_curves_respect_their_declared_bounds(curve in bump()) {
        let (lo, hi) = validate_hvol(&curve, (1e-4, 1e4), 4001).unwrap();
        prop_assert!(lo >= curve.sigma_lo() * (1.0 - 1e-12) && hi <= curve.sigma_hi() * (1.0 + 1e-12));
    }

    #[test]
    fn admissible_rational_curves_are_bounded(
        r in 0.1f64..0.3, frac in 0.1f64..0.9, a in 0.5f64..2.0, bf in 0.1f64..0.95, cf in 0.1f64..0.95,
    ) {
        let p = ModelParams::new(r, r * frac).unwrap();
        let cap = p.rate_ratio().min(1.0);
        let shape = RationalBoundaryParams::new(a, bf * cap, cf * cap * a);
        let curve = VolatilityCurve::rational_boundary(p, shape).unwrap();
        validate_hvol(&curve, (1e-4, 1e4), 4001).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fundamental_solutions_are_positive_monotone_and_convex(p in put_world(), curve in bump()) {
        let grid = GridSpec::new(1e-2, 1e2, 801).unwrap();
        for kind in [SolutionKind::Decreasing, SolutionKind::Increasing] {
            let f = solve_fundamental(p, &curve, kind, &grid).unwrap();
            prop_assert!((f.value(1.0) - 1.0).abs() <= 1e-12);
            let vals = f.values();
            prop_assert!(vals.iter().all(|&v| v > 0.0));
            let signs_ok = f.derivatives().iter().all(|&d| match kind {
                SolutionKind::Decreasing => d < 0.0,
                SolutionKind::Increasing => d > 0.0,
            });
            prop_assert!(signs_ok);
            let xs = f.xs();
            for i in 1..xs.len() - 1 {
                // divided second difference on the nonuniform grid
                let left = (vals[i] - vals[i - 1]) / (xs[i] - xs[i - 1]);
                let right = (vals[i + 1] - vals[i]) / (xs[i + 1] - xs[i]);
                prop_assert!(right > left, "not convex at x = {}", xs[i]);
            }
        }
    }

    #[test]
    fn boundaries_stay_inside_the_cone(p in put_world(), curve in bump()) {
        let sides: &[Side] = if p.delta > 0.0 { &[Side::Put, Side::Call] } else { &[Side::Put] };
        for &side in sides {
            let b = standalone_boundary(p, &curve, side, (0.05, 20.0), 201).unwrap();
            prop_assert!(b.cone_violation(curve.sigma_lo(), curve.sigma_hi()) <= 1e-10);
        }
    }

    #[test]
    fn constants_are_self_dual(p in put_world(), vol in 0.1f64..0.6) {
        let rep = self_duality_residual(&p, &VolatilityCurve::constant(vol).unwrap(), (0.1, 10.0)).unwrap();
        prop_assert!(rep.residual <= 1e-8);
    }

    #[test]
    fn scaling_volatility_up_raises_perpetual_prices(
        p in put_world(), curve in bump(), factor in 1.05f64..1.5, x in 0.2f64..3.0, y in 0.2f64..3.0,
    ) {
        let higher = VolatilityCurve::scaled(curve.clone(), factor).unwrap();
        let grid = GridSpec::around(1.0);
        let lo = PerpetualPricer::new(p, &curve, Side::Put, &grid).unwrap();
        let hi = PerpetualPricer::new(p, &higher, Side::Put, &grid).unwrap();
        prop_assert!(lo.value(x, y).unwrap() <= hi.value(x, y).unwrap() + 1e-12);
        prop_assert!(hi.boundary(y).unwrap() <= lo.boundary(y).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn put_data_cannot_see_the_volatility_above_the_spot(x0 in 0.35f64..0.7) {
        let p = ModelParams::new(0.2, 0.1).unwrap();
        let shape = RationalBoundaryParams::new(1.0, 0.4, 0.1);
        let sigma = VolatilityCurve::rational_boundary(p, shape).unwrap();
        let sigma2 = VolatilityCurve::piecewise_from_boundary(p, shape, x0).unwrap();
        let strikes = log_space(0.01, 5.0, 300);
        let a = recover_sigma_from_puts(&p, &synthetic_sample(&p, &sigma, Side::Put, x0, &strikes).unwrap()).unwrap();
        let b = recover_sigma_from_puts(&p, &synthetic_sample(&p, &sigma2, Side::Put, x0, &strikes).unwrap()).unwrap();
        for x in log_space(a.diagnostics.recoverable_span.0, x0, 101) {
            let (sa, sb) = (a.recovered_sigma.sigma(x), b.recovered_sigma.sigma(x));
            prop_assert!((sa / sb - 1.0).abs() <= 1e-6, "x = {}: {} vs {}", x, sa, sb);
        }
    }

    #[test]
    fn fd_prices_dominate_intrinsic_and_grow_with_maturity(
        p in put_world(), vol in 0.15f64..0.5, x in 0.5f64..2.0, y in 0.5f64..2.0, call in any::<bool>(),
    ) {
        let side = if call && p.delta > 0.0 { Side::Call } else { Side::Put };
        let curve = VolatilityCurve::constant(vol).unwrap();
        let settings = FdSettings { n_space: 200, steps_per_year: 100.0, ..FdSettings::default() };
        let mats = [0.25, 0.5, 1.0, 2.0, 4.0];
        let grid = FdGridSpec::around(&curve, x, y, 4.0, &settings).unwrap();
        let s = convergence_sweep(&p, &curve, side, x, y, &mats, &grid, &settings.psor).unwrap();
        let intrinsic = match side {
            Side::Put => (y - x).max(0.0),
            Side::Call => (x - y).max(0.0),
        };
        prop_assert!(s.prices().iter().all(|&v| v >= intrinsic - 1e-12));
        prop_assert!(s.max_decrease() <= 0.0);
    }
}
