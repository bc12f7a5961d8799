//! Semi-analytic Heston prices for European options and the convergence
//! ratio statistic.
//!
//! The call is computed from the single-integral representation
//!
//! ```text
//! C = S e^{-δT} - √(SK) e^{-(r+δ)T/2} / π ∫₀^∞ Re[e^{iuk} φ(u - i/2)] / (u² + 1/4) du
//! ```
//!
//! with `k = ln(S/K) + (r - δ)T` and `φ` the characteristic function of the
//! log of the forward-normalised terminal spot. `φ` is evaluated in the
//! form that keeps the complex logarithm on its principal branch. The put
//! follows from parity.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::model::HestonParams;

/// Adaptive Gauss-Kronrod (7/15) integration of the pricing integrand,
/// truncated once whole panels stop contributing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfQuadrature {
    /// Absolute tolerance on the price.
    pub abs_tol: f64,
    /// Width of the panels added while searching for the truncation point.
    pub panel_width: f64,
    /// Hard limit on the truncation point.
    pub max_upper: f64,
    pub max_intervals: usize,
}

impl Default for CfQuadrature {
    fn default() -> Self {
        CfQuadrature {
            abs_tol: 1e-10,
            panel_width: 10.0,
            max_upper: 1e5,
            max_intervals: 20_000,
        }
    }
}

/// A price with the quadrature's own accounting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfEstimate {
    pub price: f64,
    /// Sum of local error estimates plus the size of the last panels
    /// dropped at truncation, in price units.
    pub error_estimate: f64,
    pub upper_limit: f64,
    pub intervals: usize,
}

/// Characteristic function of `ln(S_T / F_T)`.
pub fn characteristic_function(params: &HestonParams, maturity: f64, z: Complex64) -> Complex64 {
    let i = Complex64::i();
    let HestonParams {
        kappa,
        theta,
        sigma,
        rho,
        v0,
        ..
    } = *params;
    let s2 = sigma * sigma;
    let xi = kappa - sigma * rho * i * z;
    let q = z * z + i * z;
    let d = (xi * xi + s2 * q).sqrt();
    // ξ - d = -σ² q / (ξ + d), written so that small σ does not cancel.
    let xi_minus_d_over_s2 = -q / (xi + d);
    let g = xi_minus_d_over_s2 * s2 / (xi + d);
    let e = (-d * maturity).exp();
    let one = Complex64::new(1.0, 0.0);
    let dd = xi_minus_d_over_s2 * (one - e) / (one - g * e);
    // (1 - g e) / (1 - g) = 1 + w
    let w = g * (one - e) / (one - g);
    let cc = kappa * theta * (xi_minus_d_over_s2 * maturity - 2.0 * ln_1p(w) / s2);
    (cc + dd * v0).exp()
}

fn ln_1p(w: Complex64) -> Complex64 {
    if w.norm() < 1e-4 {
        w * (1.0 - w * (0.5 - w * (1.0 / 3.0 - w * 0.25)))
    } else {
        (1.0 + w).ln()
    }
}

impl CfQuadrature {
    pub fn call(&self, params: &HestonParams, strike: f64, maturity: f64) -> Result<CfEstimate> {
        params.validate()?;
        if !(strike > 0.0 && maturity > 0.0) {
            return Err(invalid("strike", "strike and maturity must be positive"));
        }
        let s = params.s0;
        let k = (s / strike).ln() + (params.r - params.delta) * maturity;
        let scale = (s * strike).sqrt() * (-(params.r + params.delta) * maturity / 2.0).exp()
            / std::f64::consts::PI;
        let f = |u: f64| {
            let z = Complex64::new(u, -0.5);
            let phase = Complex64::new(0.0, u * k).exp();
            (phase * characteristic_function(params, maturity, z)).re / (u * u + 0.25)
        };
        let tol = self.abs_tol / scale;
        let (integral, err, upper, intervals) = self.integrate(f, tol)?;
        Ok(CfEstimate {
            price: s * (-params.delta * maturity).exp() - scale * integral,
            error_estimate: scale * err,
            upper_limit: upper,
            intervals,
        })
    }

    pub fn put(&self, params: &HestonParams, strike: f64, maturity: f64) -> Result<CfEstimate> {
        let c = self.call(params, strike, maturity)?;
        Ok(CfEstimate {
            price: c.price - params.s0 * (-params.delta * maturity).exp()
                + strike * (-params.r * maturity).exp(),
            ..c
        })
    }

    fn integrate(&self, f: impl Fn(f64) -> f64, tol: f64) -> Result<(f64, f64, f64, usize)> {
        let mut total = 0.0;
        let mut err = 0.0;
        let mut intervals = 0;
        let mut a = 0.0;
        let mut quiet = 0;
        // Each panel gets a share of the tolerance that shrinks geometrically,
        // so the sum over any number of panels stays within `tol`.
        let mut panel_tol = tol / 2.0;
        loop {
            let b = a + self.panel_width;
            let (v, e, n) = self.adaptive(&f, a, b, panel_tol)?;
            total += v;
            err += e;
            intervals += n;
            if intervals > self.max_intervals {
                return Err(Error::QuadratureNonConvergence {
                    estimate: err,
                    tolerance: tol,
                });
            }
            a = b;
            panel_tol = (panel_tol / 2.0).max(tol * 1e-6);
            if v.abs() < tol * 1e-3 {
                quiet += 1;
                if quiet >= 2 {
                    return Ok((total, err + v.abs(), a, intervals));
                }
            } else {
                quiet = 0;
            }
            if a >= self.max_upper {
                return Err(Error::QuadratureNonConvergence {
                    estimate: err + v.abs(),
                    tolerance: tol,
                });
            }
        }
    }

    fn adaptive(&self, f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<(f64, f64, usize)> {
        let mut stack = vec![(a, b, tol)];
        let (mut total, mut err, mut count) = (0.0, 0.0, 0);
        while let Some((lo, hi, t)) = stack.pop() {
            let (k, e) = gauss_kronrod(f, lo, hi);
            count += 1;
            if e <= t || e <= 64.0 * f64::EPSILON * k.abs() || hi - lo < 1e-9 {
                total += k;
                err += e;
            } else if count > self.max_intervals {
                return Err(Error::QuadratureNonConvergence {
                    estimate: e,
                    tolerance: t,
                });
            } else {
                let mid = 0.5 * (lo + hi);
                stack.push((lo, mid, t / 2.0));
                stack.push((mid, hi, t / 2.0));
            }
        }
        Ok((total, err, count))
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

pub fn heston_call_cf(params: &HestonParams, strike: f64, maturity: f64) -> Result<f64> {
    Ok(CfQuadrature::default().call(params, strike, maturity)?.price)
}

pub fn heston_put_cf(params: &HestonParams, strike: f64, maturity: f64) -> Result<f64> {
    Ok(CfQuadrature::default().put(params, strike, maturity)?.price)
}

/// `(P_{N/2} - P_{N/4}) / (P_N - P_{N/2})`. Close to 2 for a first order scheme.
pub fn convergence_ratio(p_quarter: f64, p_half: f64, p_full: f64) -> Result<f64> {
    let den = p_full - p_half;
    if den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok((p_half - p_quarter) / den)
}
