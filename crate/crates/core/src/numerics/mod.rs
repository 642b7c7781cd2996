//! Numerical building blocks: ODE integration, root finding, interpolation
//! and quadrature.

pub mod interp;
pub mod quadrature;
pub mod rk45;
pub mod root;

pub use interp::{fornberg_weights, monotone_slopes, stencil_derivatives, HermiteTable};
pub use rk45::{IntegrationError, Rk45};
pub use root::{brent, RootError};

/// `n` points spaced evenly in `ln x` over `[lo, hi]`, endpoints exact.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    let mut out: Vec<f64> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect();
    out[0] = lo;
    out[n - 1] = hi;
    out
}

/// `n` points spaced evenly over `[lo, hi]`, endpoints exact.
pub fn lin_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let mut out: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    out[n - 1] = hi;
    out
}
