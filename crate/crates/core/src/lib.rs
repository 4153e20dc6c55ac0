//! Bilinear lifting of polynomial ODE systems and Volterra model-based control.
//!
//! The crate turns a polynomial input-affine system `ẋ = f(x) + g(x)·u` into a
//! truncated bilinear model `ż = Az + Nzu + bu` over a monomial basis, evaluates
//! the frequency-domain Volterra kernels of that model, realizes the kernels in
//! the time domain as a cascade of linear stages, and synthesizes an IMC
//! controller with all-pass/minimum-phase factorization plus higher-order
//! Volterra correction terms. The van de Vusse CSTR is bundled as the benchmark
//! plant.
//!
//! Module map:
//! - [`plant`]: polynomial vector fields, deviation shifts, equilibria, the
//!   van de Vusse benchmark
//! - [`carleman`]: monomial bases, the bilinear lift, bilinear simulation
//! - [`volterra`]: frequency-domain kernel evaluation and DC gains
//! - [`realization`]: separable-denominator factorization, partial fractions,
//!   the cascade realization
//! - [`imc`]: all-pass factorization, IMC filter and controller, closed-loop
//!   simulation, the ISCI metric
//! - [`simulate`]: fixed-step integration, traces, open-loop model comparison
//! - [`config`]: plain-text system/scenario configuration format

pub mod carleman;
pub mod config;
pub mod error;
pub mod imc;
pub mod plant;
pub mod poly;
pub mod realization;
pub mod simulate;
pub mod volterra;

pub use carleman::{build_basis, lift, simulate_bilinear, BilinearSystem, MonomialBasis};
pub use num_complex::Complex64;
pub use error::{Error, Result};
pub use imc::{
    build_controller, closed_loop_step, factor_allpass, isci, isci_channel, linear_controller,
    AllPassFactorization, IMCFilter, VolterraIMCController,
};
pub use plant::{
    eval_derivative, find_equilibrium, shift_to_deviation, van_de_vusse, InputAffineSystem,
    Monomial, OperatingPoint, PolynomialVectorField,
};
pub use poly::{Polynomial, RationalFunction};
pub use realization::{
    build_cascade, factor_separable, partial_fractions, simulate_volterra, BivariatePolynomial,
    CascadeRealization, SeparableFactorization,
};
pub use simulate::{
    integrate_nonlinear, model_error_scaling, open_loop_compare, steady_state, ScenarioConfig,
    SimulationTrace,
};
pub use volterra::{dc_gain, eval_kernel, h1_rational, steady_state_prediction};

/// Formats a float with 12 significant digits, the precision used by every
/// text/CSV artifact the toolkit emits.
pub fn fmt_sig12(x: f64) -> String {
    format!("{:.11e}", x)
}
