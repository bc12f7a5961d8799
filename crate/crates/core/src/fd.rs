//! Log-price grid and the tridiagonal propagation operators.
//!
//! Over one time step at frozen variance `v`, the transformed log-price
//! solves a constant-coefficient heat equation with drift `μ_Y(v)` and
//! diffusion `ρ̄²v`. Two discretisations are available. The implicit one
//! (centred in space) gives a matrix `A` whose inverse is stochastic when
//! `β > |α|`. The explicit one (upwind in space) gives a matrix `C` that is
//! itself stochastic when `2β + 2|α| ≤ 1`. The regime is chosen per
//! variance node: implicit above the threshold `ε`, explicit at or below it.

use crate::error::{invalid, Error, Regime, Result};
use crate::lattice::reachable_variances;
use crate::model::HestonParams;

/// Treatment of the first and last grid rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Zero-derivative fold-back: the ghost value beyond the edge equals
    /// the interior neighbour.
    #[default]
    Neumann,
    /// Values at the two edge points are held fixed over the step.
    Dirichlet,
}

/// How the regime threshold `ε` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ThresholdRule {
    /// Smallest `ε` that keeps every implicit node an M-matrix: the largest
    /// lattice variance at which `β > |α|` fails, or `1e-12` if none does.
    #[default]
    Adaptive,
    /// `ε = 2 (2 c_y / ρ̄²) |μ_Y(0)| √h + σ² h` with `c_y = Δy / √h`.
    Formula,
    Fixed(f64),
}

/// Sizing rules for the log-price grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPolicy {
    /// Number of conditional standard deviations `K_w` covered on each side.
    pub width_sigmas: f64,
    /// Lower bound on `Δy / (h |μ_Y(0)|)`, divided by two. Keeps the
    /// explicit operator stochastic near zero variance whatever the drift.
    pub drift_cfl: f64,
    pub threshold: ThresholdRule,
}

impl Default for GridPolicy {
    fn default() -> Self {
        GridPolicy {
            width_sigmas: 5.0,
            drift_cfl: 0.6,
            threshold: ThresholdRule::Adaptive,
        }
    }
}

impl GridPolicy {
    /// Grid half-width `L`.
    pub fn half_width(&self, params: &HestonParams, h: f64, n_space: usize, maturity: f64) -> f64 {
        let v_max = params.v0.max(params.theta);
        let diffusive = self.width_sigmas * params.rho_bar().value() * (v_max * maturity).sqrt()
            + params.mu_y(v_max).abs() * maturity;
        let drift = self.drift_cfl * params.drift_at_zero() * h * n_space as f64;
        diffusive.max(drift)
    }
}

/// Uniform grid `y_j = y0 + jΔy`, `j = -M..=M`, with its regime threshold.
/// Storage index `i = j + M` runs over `0..2M+1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YGrid {
    pub y0: f64,
    pub dy: f64,
    pub m: usize,
    pub eps: f64,
}

impl YGrid {
    pub fn new(y0: f64, dy: f64, m: usize, eps: f64) -> Result<Self> {
        if !(dy > 0.0 && dy.is_finite()) {
            return Err(invalid("dy", format!("must be positive, got {dy}")));
        }
        if m < 2 {
            return Err(invalid("m", format!("need at least 2, got {m}")));
        }
        if !(eps > 0.0) {
            return Err(invalid("eps", format!("must be positive, got {eps}")));
        }
        Ok(YGrid { y0, dy, m, eps })
    }

    pub fn len(&self) -> usize {
        2 * self.m + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of `y0` in storage order.
    pub fn center(&self) -> usize {
        self.m
    }

    /// Grid point at storage index `i`.
    pub fn y(&self, i: usize) -> f64 {
        self.y0 + (i as f64 - self.m as f64) * self.dy
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.y(i)).collect()
    }
}

/// Builds the grid for `n_space` intervals (`M = n_space / 2`).
///
/// With the adaptive threshold, if the spacing from the width rule leaves
/// some reachable variance with no stable regime, the spacing is moved
/// geometrically (3% per step, alternately narrower and wider) to the
/// nearest one for which every reachable variance has one. If none exists
/// within a factor of about 450 either way, the width-rule spacing is kept
/// and pricing reports the violation.
pub fn build_grid(
    n_space: usize,
    h: f64,
    params: &HestonParams,
    maturity: f64,
    policy: &GridPolicy,
) -> Result<YGrid> {
    build_grid_covering(n_space, h, params, maturity, policy, &[])
}

/// As [`build_grid`], with `extra` variances also given a stable regime
/// when the threshold is adaptive.
pub(crate) fn build_grid_covering(
    n_space: usize,
    h: f64,
    params: &HestonParams,
    maturity: f64,
    policy: &GridPolicy,
    extra: &[f64],
) -> Result<YGrid> {
    if n_space < 4 || n_space % 2 != 0 {
        return Err(invalid("n_space", format!("must be even and at least 4, got {n_space}")));
    }
    if !(h > 0.0 && maturity > 0.0) {
        return Err(invalid("h", "time step and maturity must be positive"));
    }
    let half = policy.half_width(params, h, n_space, maturity);
    let mut dy = 2.0 * half / n_space as f64;
    let eps = match policy.threshold {
        ThresholdRule::Adaptive => {
            let n_time = (maturity / h).round().max(1.0) as usize;
            let mut vs = reachable_variances(params, h, n_time);
            if !extra.is_empty() {
                vs.extend_from_slice(extra);
                vs.sort_by(f64::total_cmp);
                vs.dedup();
            }
            if let Some(found) = feasible_spacing(&vs, params, h, dy) {
                dy = found;
            }
            adaptive_threshold_over(&vs, params, h, dy)
        }
        ThresholdRule::Formula => default_thresholds(h, dy, params),
        ThresholdRule::Fixed(e) => e,
    };
    YGrid::new(params.y0(), dy, n_space / 2, eps)
}

fn feasible_spacing(vs: &[f64], params: &HestonParams, h: f64, dy0: f64) -> Option<f64> {
    let feasible = |dy: f64| {
        let eps = adaptive_threshold_over(vs, params, h, dy);
        vs.iter().all(|&v| {
            let c = coeffs(v, h, dy, params);
            match select_regime(v, eps) {
                Regime::Implicit => c.beta > c.alpha.abs(),
                Regime::Explicit => 2.0 * c.beta + 2.0 * c.alpha.abs() <= 1.0,
            }
        })
    };
    if feasible(dy0) {
        return Some(dy0);
    }
    (1..=200).find_map(|k| {
        let f = 0.97f64.powi(k);
        [dy0 * f, dy0 / f].into_iter().find(|&dy| feasible(dy))
    })
}

/// `ε = 2 (2 c_y / ρ̄²) |r - δ - (ρ/σ)κθ| √h + σ² h` with `c_y = Δy / √h`.
pub fn default_thresholds(h: f64, dy: f64, params: &HestonParams) -> f64 {
    let c_y = dy / h.sqrt();
    2.0 * (2.0 * c_y / params.rho_bar().squared()) * params.drift_at_zero() * h.sqrt()
        + params.sigma * params.sigma * h
}

/// Largest variance reachable by the lattice on steps of `h` at which the
/// centred operator fails to be an M-matrix, floored at `1e-12`.
pub fn adaptive_threshold(params: &HestonParams, h: f64, dy: f64, maturity: f64) -> f64 {
    let n_time = (maturity / h).round().max(1.0) as usize;
    adaptive_threshold_over(&reachable_variances(params, h, n_time), params, h, dy)
}

fn adaptive_threshold_over(vs: &[f64], params: &HestonParams, h: f64, dy: f64) -> f64 {
    vs.iter()
        .copied()
        .filter(|&v| {
            let c = coeffs(v, h, dy, params);
            c.beta <= c.alpha.abs()
        })
        .fold(1e-12, f64::max)
}

/// Dimensionless stencil weights at variance `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coeffs {
    /// `h μ_Y(v) / (2Δy)`.
    pub alpha: f64,
    /// `h ρ̄² v / (2Δy²)`.
    pub beta: f64,
    pub v: f64,
}

pub fn coeffs(v: f64, h: f64, dy: f64, params: &HestonParams) -> Coeffs {
    Coeffs {
        alpha: h * params.mu_y(v) / (2.0 * dy),
        beta: h * params.rho_bar().squared() * v / (2.0 * dy * dy),
        v,
    }
}

/// Implicit iff `v > ε`.
pub fn select_regime(v: f64, eps: f64) -> Regime {
    if v > eps {
        Regime::Implicit
    } else {
        Regime::Explicit
    }
}

/// Tridiagonal operator on `2M + 1` points in compact form: one interior
/// stencil plus the two boundary rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TridiagOperator {
    pub regime: Regime,
    pub boundary: Boundary,
    pub coeffs: Coeffs,
    /// Interior row `(sub, main, super)`.
    pub interior: [f64; 3],
    /// First row `(main, super)`.
    pub first: [f64; 2],
    /// Last row `(sub, main)`.
    pub last: [f64; 2],
    pub size: usize,
}

pub fn build_operator(
    c: Coeffs,
    m: usize,
    regime: Regime,
    boundary: Boundary,
) -> Result<TridiagOperator> {
    let Coeffs { alpha, beta, .. } = c;
    let abs_a = alpha.abs();
    let violation = || Error::StabilityViolation {
        regime,
        alpha,
        beta,
        v: c.v,
    };
    let (interior, first, last) = match regime {
        Regime::Implicit => {
            if !(beta > abs_a) {
                return Err(violation());
            }
            let interior = [alpha - beta, 1.0 + 2.0 * beta, -alpha - beta];
            (interior, [1.0 + 2.0 * beta, -2.0 * beta], [-2.0 * beta, 1.0 + 2.0 * beta])
        }
        Regime::Explicit => {
            if !(2.0 * beta + 2.0 * abs_a <= 1.0) {
                return Err(violation());
            }
            let up = if alpha > 0.0 { 2.0 * abs_a } else { 0.0 };
            let down = if alpha < 0.0 { 2.0 * abs_a } else { 0.0 };
            let diag = 1.0 - 2.0 * beta - 2.0 * abs_a;
            let off = 2.0 * beta + 2.0 * abs_a;
            ([beta + down, diag, beta + up], [diag, off], [off, diag])
        }
    };
    let (first, last) = match boundary {
        Boundary::Neumann => (first, last),
        Boundary::Dirichlet => ([1.0, 0.0], [0.0, 1.0]),
    };
    Ok(TridiagOperator {
        regime,
        boundary,
        coeffs: c,
        interior,
        first,
        last,
        size: 2 * m + 1,
    })
}

impl TridiagOperator {
    /// Writes the three bands. `sub[0]` and `sup[size - 1]` are zero.
    pub fn fill_bands(&self, sub: &mut [f64], diag: &mut [f64], sup: &mut [f64]) {
        let n = self.size;
        let [a, b, c] = self.interior;
        sub[..n].fill(a);
        diag[..n].fill(b);
        sup[..n].fill(c);
        sub[0] = 0.0;
        diag[0] = self.first[0];
        sup[0] = self.first[1];
        sub[n - 1] = self.last[0];
        diag[n - 1] = self.last[1];
        sup[n - 1] = 0.0;
    }

    /// Dense copy, row major. Intended for tests and diagnostics.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.size;
        let (mut sub, mut diag, mut sup) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        self.fill_bands(&mut sub, &mut diag, &mut sup);
        (0..n)
            .map(|i| {
                let mut row = vec![0.0; n];
                row[i] = diag[i];
                if i > 0 {
                    row[i - 1] = sub[i];
                }
                if i + 1 < n {
                    row[i + 1] = sup[i];
                }
                row
            })
            .collect()
    }

    /// One step of propagation: `A⁻¹ x` or `C x` depending on the regime.
    pub fn propagate(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self.regime {
            Regime::Implicit => thomas_solve(self, x),
            Regime::Explicit => apply_explicit(self, x),
        }
    }
}

/// Solves `A u = rhs` for an implicit operator.
pub fn thomas_solve(op: &TridiagOperator, rhs: &[f64]) -> Result<Vec<f64>> {
    if op.regime != Regime::Implicit {
        return Err(invalid("op", "Thomas solve needs an implicit operator"));
    }
    check_len(op.size, rhs.len())?;
    let n = op.size;
    let (mut sub, mut diag, mut sup) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    op.fill_bands(&mut sub, &mut diag, &mut sup);
    let mut out = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    solve_tridiagonal(&sub, &diag, &sup, rhs, &mut out, &mut scratch)?;
    Ok(out)
}

/// Thomas algorithm on explicit bands. `scratch` holds the modified
/// super-diagonal. Every pivot must be strictly positive.
pub fn solve_tridiagonal(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &[f64],
    out: &mut [f64],
    scratch: &mut [f64],
) -> Result<()> {
    let n = diag.len();
    for len in [sub.len(), sup.len(), rhs.len(), out.len(), scratch.len()] {
        check_len(n, len)?;
    }
    let mut pivot = diag[0];
    if !(pivot > 0.0 && pivot.is_finite()) {
        return Err(Error::PivotBreakdown { row: 0, pivot });
    }
    scratch[0] = sup[0] / pivot;
    out[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - sub[i] * scratch[i - 1];
        if !(pivot > 0.0 && pivot.is_finite()) {
            return Err(Error::PivotBreakdown { row: i, pivot });
        }
        scratch[i] = sup[i] / pivot;
        out[i] = (rhs[i] - sub[i] * out[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        out[i] -= scratch[i] * out[i + 1];
    }
    Ok(())
}

/// Returns `C x` for an explicit operator.
pub fn apply_explicit(op: &TridiagOperator, x: &[f64]) -> Result<Vec<f64>> {
    if op.regime != Regime::Explicit {
        return Err(invalid("op", "explicit application needs an explicit operator"));
    }
    check_len(op.size, x.len())?;
    let mut out = vec![0.0; op.size];
    apply_explicit_into(op, x, &mut out);
    Ok(out)
}

pub(crate) fn apply_explicit_into(op: &TridiagOperator, x: &[f64], out: &mut [f64]) {
    let n = op.size;
    let [a, b, c] = op.interior;
    out[0] = op.first[0] * x[0] + op.first[1] * x[1];
    for i in 1..n - 1 {
        out[i] = a * x[i - 1] + b * x[i] + c * x[i + 1];
    }
    out[n - 1] = op.last[0] * x[n - 2] + op.last[1] * x[n - 1];
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}
