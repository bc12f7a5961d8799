//! Hybrid tree / finite-difference pricing under the Heston model.
//!
//! The variance is carried by a recombining binomial lattice for the CIR
//! process. At each time step and variance node, the decorrelated
//! log-price `Y = ln S - (ρ/σ) V` is propagated on a uniform grid by a
//! tridiagonal finite-difference operator whose inverse (implicit regime)
//! or itself (explicit regime) is a stochastic matrix.
//!
//! ```no_run
//! use hybrid_heston::{price, ExerciseStyle, HestonParams, Numerics, OptionKind, OptionSpec};
//!
//! let params = HestonParams::new(2.0, 0.1, 0.5, -0.5, 1.1f64.ln(), 0.0, 100.0, 0.1)?;
//! let spec = OptionSpec::new(OptionKind::Put, ExerciseStyle::American, 100.0, 1.0)?;
//! let result = price(&params, &spec, &Numerics::new(400, 400))?;
//! println!("{}", result.price);
//! # Ok::<(), hybrid_heston::Error>(())
//! ```

// Negated comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closed_form;
pub mod diagnostics;
mod error;
pub mod fd;
pub mod lattice;
pub mod model;
pub mod pricer;

pub use closed_form::{convergence_ratio, heston_call_cf, heston_put_cf, CfEstimate, CfQuadrature};
pub use error::{Error, Regime, Result};
pub use fd::{Boundary, GridPolicy, ThresholdRule, TridiagOperator, YGrid};
pub use lattice::{NodeMatch, VolLattice};
pub use model::{HestonParams, RhoBar};
pub use pricer::{
    obstacle, price, Barrier, ExerciseStyle, Numerics, OptionKind, OptionSpec, PriceResult, Pricer,
    RunDiagnostics, ValueSurface,
};
