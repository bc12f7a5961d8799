//! Heston model parameters and the decorrelating change of variables.
//!
//! Under the risk-neutral measure
//!
//! ```text
//! dS/S = (r - δ) dt + √V (ρ dW + ρ̄ dZ)
//! dV   = κ(θ - V) dt + σ √V dW
//! ```
//!
//! with `ρ̄ = √(1 - ρ²)`. Setting `Y = ln S - (ρ/σ) V` removes the `W` noise
//! from the log-price, so that conditionally on the variance path `Y` is a
//! Gaussian process with drift `μ_Y(V)` and diffusion `ρ̄ √V`.

use crate::error::{invalid, Result};

/// `√(1 - ρ²)`, the weight of the noise driving `Y` that is independent of the variance.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RhoBar(f64);

impl RhoBar {
    pub fn from_rho(rho: f64) -> Self {
        RhoBar((1.0 - rho * rho).sqrt())
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn squared(self) -> f64 {
        self.0 * self.0
    }
}

/// Heston model constants. Construct through [`HestonParams::new`], which
/// enforces the domain of every field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HestonParams {
    pub kappa: f64,
    pub theta: f64,
    pub sigma: f64,
    pub rho: f64,
    pub r: f64,
    pub delta: f64,
    pub s0: f64,
    pub v0: f64,
}

impl HestonParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        kappa: f64,
        theta: f64,
        sigma: f64,
        rho: f64,
        r: f64,
        delta: f64,
        s0: f64,
        v0: f64,
    ) -> Result<Self> {
        let p = HestonParams {
            kappa,
            theta,
            sigma,
            rho,
            r,
            delta,
            s0,
            v0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        positive("kappa", self.kappa)?;
        positive("theta", self.theta)?;
        positive("sigma", self.sigma)?;
        positive("s0", self.s0)?;
        positive("v0", self.v0)?;
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(invalid("rho", format!("must lie in (-1, 1), got {}", self.rho)));
        }
        if !self.r.is_finite() {
            return Err(invalid("r", "must be finite"));
        }
        if !self.delta.is_finite() {
            return Err(invalid("delta", "must be finite"));
        }
        Ok(())
    }

    /// Same parameters with a different spot.
    pub fn with_spot(mut self, s0: f64) -> Result<Self> {
        self.s0 = s0;
        self.validate()?;
        Ok(self)
    }

    /// Same parameters with a different vol-of-vol.
    pub fn with_sigma(mut self, sigma: f64) -> Result<Self> {
        self.sigma = sigma;
        self.validate()?;
        Ok(self)
    }

    pub fn rho_bar(&self) -> RhoBar {
        RhoBar::from_rho(self.rho)
    }

    /// `ρ/σ`, the loading of the variance in the transformed coordinate.
    pub fn rho_over_sigma(&self) -> f64 {
        self.rho / self.sigma
    }

    /// `2κθ ≥ σ²`. Reported only; pricing does not require it.
    pub fn feller_satisfied(&self) -> bool {
        2.0 * self.kappa * self.theta >= self.sigma * self.sigma
    }

    /// Drift of the transformed log-price, `r - δ - v/2 - (ρ/σ) κ (θ - v)`.
    pub fn mu_y(&self, v: f64) -> f64 {
        self.r - self.delta - 0.5 * v - self.rho_over_sigma() * self.kappa * (self.theta - v)
    }

    /// Drift of the variance, `κ (θ - v)`.
    pub fn mu_v(&self, v: f64) -> f64 {
        self.kappa * (self.theta - v)
    }

    /// `|r - δ - (ρ/σ) κ θ|`, the magnitude of `μ_Y` at zero variance.
    pub fn drift_at_zero(&self) -> f64 {
        self.mu_y(0.0).abs()
    }

    /// `Y = ln s - (ρ/σ) v`.
    pub fn to_y(&self, s: f64, v: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(invalid("s", format!("spot must be positive, got {s}")));
        }
        Ok(s.ln() - self.rho_over_sigma() * v)
    }

    /// Inverse of [`to_y`](Self::to_y) at fixed variance: `s = exp(y + (ρ/σ) v)`.
    pub fn s_of(&self, y: f64, v: f64) -> f64 {
        (y + self.rho_over_sigma() * v).exp()
    }

    /// Starting point of the transformed process, `ln S₀ - (ρ/σ) V₀`.
    pub fn y0(&self) -> f64 {
        self.s0.ln() - self.rho_over_sigma() * self.v0
    }
}

fn positive(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive and finite, got {x}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table1(sigma: f64) -> HestonParams {
        HestonParams::new(2.0, 0.1, sigma, -0.5, 1.1f64.ln(), 0.0, 100.0, 0.1).unwrap()
    }

    #[test]
    fn drifts_at_long_run_variance() {
        let p = table1(0.5);
        assert_eq!(p.mu_y(p.theta), p.r - p.delta - p.theta / 2.0);
        assert_eq!(p.mu_v(p.theta), 0.0);
    }

    #[test]
    fn mu_y_reference_values() {
        let p = table1(0.5);
        assert!((p.mu_y(0.1) - 0.0453102).abs() < 5e-8);
        assert!((p.mu_y(0.2) - (-0.2046898)).abs() < 5e-8);
    }

    #[test]
    fn mu_v_reference_values() {
        let p = table1(0.5);
        assert!((p.mu_v(0.0) - 0.2).abs() < 1e-15);
        let q = HestonParams::new(5.0, 0.16, 0.9, 0.1, 0.1, 0.0, 10.0, 0.25).unwrap();
        assert!((q.mu_v(0.25) - (-0.45)).abs() < 1e-14);
    }

    #[test]
    fn to_y_reference_value() {
        let p = table1(0.5);
        assert!((p.to_y(100.0, 0.1).unwrap() - 4.7051702).abs() < 5e-8);
        assert_eq!(p.y0(), p.to_y(p.s0, p.v0).unwrap());
    }

    #[test]
    fn to_y_rejects_non_positive_spot() {
        let p = table1(0.5);
        assert!(p.to_y(0.0, 0.1).is_err());
        assert!(p.to_y(-1.0, 0.1).is_err());
    }

    #[test]
    fn zero_correlation_is_plain_log() {
        let p = HestonParams::new(2.0, 0.1, 0.5, 0.0, 0.05, 0.0, 100.0, 0.1).unwrap();
        for v in [0.0, 0.1, 0.7] {
            assert_eq!(p.to_y(37.0, v).unwrap(), 37.0f64.ln());
        }
    }

    #[test]
    fn rejects_out_of_domain_parameters() {
        assert!(HestonParams::new(0.0, 0.1, 0.5, -0.5, 0.0, 0.0, 100.0, 0.1).is_err());
        assert!(HestonParams::new(2.0, 0.1, 0.5, 1.0, 0.0, 0.0, 100.0, 0.1).is_err());
        assert!(HestonParams::new(2.0, 0.1, -0.5, 0.0, 0.0, 0.0, 100.0, 0.1).is_err());
        assert!(HestonParams::new(2.0, 0.1, 0.5, 0.0, f64::NAN, 0.0, 100.0, 0.1).is_err());
        assert!(HestonParams::new(2.0, 0.1, 0.5, 0.0, 0.0, 0.0, 100.0, 0.0).is_err());
    }

    #[test]
    fn feller_flag_is_informational() {
        assert!(table1(0.5).feller_satisfied());
        assert!(!table1(1.0).feller_satisfied());
    }

    proptest! {
        #[test]
        fn to_y_and_s_of_are_inverse(s in 1e-3f64..1e4, v in 0.0f64..2.0, rho in -0.99f64..0.99, sigma in 0.01f64..2.0) {
            let p = HestonParams::new(2.0, 0.1, sigma, rho, 0.03, 0.0, 100.0, 0.1).unwrap();
            let back = p.s_of(p.to_y(s, v).unwrap(), v);
            prop_assert!(((back - s) / s).abs() < 1e-14 * (1.0 + (rho / sigma).abs() * v));
        }

        #[test]
        fn rho_bar_completes_unit_circle(rho in -0.999f64..0.999) {
            let rb = RhoBar::from_rho(rho);
            prop_assert!(rb.value() > 0.0 && rb.value() <= 1.0);
            prop_assert!((rb.squared() + rho * rho - 1.0).abs() < 1e-15);
        }
    }
}
