//! Backward induction over the joint state space (variance node, grid point).
//!
//! At each step and each variance node the two successor slices are mixed
//! with the lattice probabilities, propagated through the operator for that
//! node's variance and discounted. Early exercise and knock-out are applied
//! on the result.

use rayon::prelude::*;

use crate::error::{invalid, Error, Regime, Result};
use crate::fd::{
    apply_explicit_into, build_grid, build_operator, coeffs, select_regime, solve_tridiagonal,
    Boundary, GridPolicy, TridiagOperator, YGrid,
};
use crate::lattice::VolLattice;
use crate::model::HestonParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptionKind {
    Put,
    Call,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExerciseStyle {
    European,
    American,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Barrier {
    /// Knocked out once the spot reaches or exceeds `level`.
    UpOut { level: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionSpec {
    pub kind: OptionKind,
    pub style: ExerciseStyle,
    pub strike: f64,
    pub maturity: f64,
    pub barrier: Option<Barrier>,
}

impl OptionSpec {
    pub fn new(kind: OptionKind, style: ExerciseStyle, strike: f64, maturity: f64) -> Result<Self> {
        let spec = OptionSpec {
            kind,
            style,
            strike,
            maturity,
            barrier: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_up_and_out(mut self, level: f64) -> Result<Self> {
        self.barrier = Some(Barrier::UpOut { level });
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strike > 0.0 && self.strike.is_finite()) {
            return Err(invalid("strike", format!("must be positive, got {}", self.strike)));
        }
        if !(self.maturity > 0.0 && self.maturity.is_finite()) {
            return Err(invalid("maturity", format!("must be positive, got {}", self.maturity)));
        }
        if let Some(Barrier::UpOut { level }) = self.barrier {
            if !(level > 0.0 && level.is_finite()) {
                return Err(invalid("barrier", format!("must be positive, got {level}")));
            }
        }
        Ok(())
    }

    /// Intrinsic value at spot `s`, ignoring any barrier.
    pub fn payoff(&self, s: f64) -> f64 {
        match self.kind {
            OptionKind::Put => (self.strike - s).max(0.0),
            OptionKind::Call => (s - self.strike).max(0.0),
        }
    }

    pub fn barrier_level(&self) -> Option<f64> {
        self.barrier.map(|Barrier::UpOut { level }| level)
    }

    pub fn knocked_out(&self, s: f64) -> bool {
        self.barrier_level().is_some_and(|h| s >= h)
    }

    /// Value carried by a knocked-out state. A European holder receives
    /// nothing; an American holder exercises as the barrier is reached and
    /// collects the intrinsic value there.
    pub fn knock_out_value(&self) -> f64 {
        match (self.style, self.barrier_level()) {
            (ExerciseStyle::American, Some(h)) => self.payoff(h),
            _ => 0.0,
        }
    }
}

/// Exercise value `Φ(exp(y + (ρ/σ) v))`, zero once knocked out.
pub fn obstacle(y: f64, v: f64, spec: &OptionSpec, params: &HestonParams) -> f64 {
    let s = params.s_of(y, v);
    if spec.knocked_out(s) {
        0.0
    } else {
        spec.payoff(s)
    }
}

/// Option values at one time step: `n + 1` variance rows of `2M + 1`
/// grid values each, stored row major.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSurface {
    pub step: usize,
    width: usize,
    values: Vec<f64>,
}

impl ValueSurface {
    pub fn new(step: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != (step + 1) * width {
            return Err(Error::LengthMismatch {
                expected: (step + 1) * width,
                got: values.len(),
            });
        }
        Ok(ValueSurface { step, width, values })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rows(&self) -> usize {
        self.step + 1
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.width..(k + 1) * self.width]
    }

    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.values[k * self.width + i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Discretisation choices for one pricing run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Numerics {
    pub n_time: usize,
    pub n_space: usize,
    pub boundary: Boundary,
    pub policy: GridPolicy,
}

impl Numerics {
    pub fn new(n_time: usize, n_space: usize) -> Self {
        Numerics {
            n_time,
            n_space,
            boundary: Boundary::Neumann,
            policy: GridPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunDiagnostics {
    pub steps: usize,
    pub implicit_nodes: usize,
    pub explicit_nodes: usize,
    /// Smallest `β - |α|` over implicit nodes.
    pub min_implicit_margin: Option<f64>,
    /// Smallest `1 - 2β - 2|α|` over explicit nodes.
    pub min_explicit_margin: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceResult {
    pub price: f64,
    pub grid: YGrid,
    pub diagnostics: RunDiagnostics,
}

/// Everything the induction needs, built once per run.
#[derive(Debug, Clone)]
pub struct Pricer {
    params: HestonParams,
    spec: OptionSpec,
    boundary: Boundary,
    lattice: VolLattice,
    grid: YGrid,
    h: f64,
}

impl Pricer {
    pub fn new(params: &HestonParams, spec: &OptionSpec, numerics: &Numerics) -> Result<Self> {
        params.validate()?;
        spec.validate()?;
        if numerics.n_time < 1 {
            return Err(invalid("n_time", "need at least one time step"));
        }
        let h = spec.maturity / numerics.n_time as f64;
        let grid = build_grid(numerics.n_space, h, params, spec.maturity, &numerics.policy)?;
        Self::with_grid(params, spec, numerics.n_time, grid, numerics.boundary)
    }

    /// Uses a caller supplied grid instead of one sized by a policy.
    pub fn with_grid(
        params: &HestonParams,
        spec: &OptionSpec,
        n_time: usize,
        grid: YGrid,
        boundary: Boundary,
    ) -> Result<Self> {
        params.validate()?;
        spec.validate()?;
        if n_time < 1 {
            return Err(invalid("n_time", "need at least one time step"));
        }
        let h = spec.maturity / n_time as f64;
        let lattice = VolLattice::build(params, h, n_time)?;
        Ok(Pricer {
            params: *params,
            spec: *spec,
            boundary,
            lattice,
            grid,
            h,
        })
    }

    pub fn grid(&self) -> &YGrid {
        &self.grid
    }

    pub fn lattice(&self) -> &VolLattice {
        &self.lattice
    }

    /// Propagation operator at variance `v`.
    pub fn operator(&self, v: f64) -> Result<TridiagOperator> {
        let c = coeffs(v, self.h, self.grid.dy, &self.params);
        build_operator(c, self.grid.m, select_regime(v, self.grid.eps), self.boundary)
    }

    /// Payoff surface at maturity, knocked-out states set to their
    /// knock-out value.
    pub fn terminal_surface(&self) -> ValueSurface {
        let n = self.lattice.n_steps();
        let width = self.grid.len();
        let ko = self.spec.knock_out_value();
        let mut values = Vec::with_capacity((n + 1) * width);
        for &v in self.lattice.row(n) {
            for i in 0..width {
                let s = self.params.s_of(self.grid.y(i), v);
                values.push(if self.spec.knocked_out(s) { ko } else { self.spec.payoff(s) });
            }
        }
        ValueSurface {
            step: n,
            width,
            values,
        }
    }

    /// Surface at step `n` from the surface at step `n + 1`.
    pub fn backward_step(&self, next: &ValueSurface) -> Result<ValueSurface> {
        let mut diag = RunDiagnostics::default();
        self.step_with(next, &mut diag)
    }

    fn step_with(&self, next: &ValueSurface, diag: &mut RunDiagnostics) -> Result<ValueSurface> {
        if next.step == 0 || next.step > self.lattice.n_steps() {
            return Err(invalid("surface", format!("cannot step back from step {}", next.step)));
        }
        let width = self.grid.len();
        if next.width != width {
            return Err(Error::LengthMismatch {
                expected: width,
                got: next.width,
            });
        }
        let n = next.step - 1;
        let ops = self
            .lattice
            .row(n)
            .iter()
            .map(|&v| self.operator(v))
            .collect::<Result<Vec<_>>>()?;
        for op in &ops {
            let (alpha, beta) = (op.coeffs.alpha, op.coeffs.beta);
            match op.regime {
                Regime::Implicit => {
                    diag.implicit_nodes += 1;
                    let m = beta - alpha.abs();
                    diag.min_implicit_margin = Some(diag.min_implicit_margin.map_or(m, |x| x.min(m)));
                }
                Regime::Explicit => {
                    diag.explicit_nodes += 1;
                    let m = 1.0 - 2.0 * beta - 2.0 * alpha.abs();
                    diag.min_explicit_margin = Some(diag.min_explicit_margin.map_or(m, |x| x.min(m)));
                }
            }
        }

        let mut values = vec![0.0; (n + 1) * width];
        values
            .par_chunks_mut(width)
            .enumerate()
            .try_for_each_init(
                || Scratch::new(width),
                |scratch, (k, out)| self.node_update(n, k, &ops[k], next, scratch, out),
            )?;
        diag.steps += 1;
        Ok(ValueSurface {
            step: n,
            width,
            values,
        })
    }

    fn node_update(
        &self,
        n: usize,
        k: usize,
        op: &TridiagOperator,
        next: &ValueSurface,
        s: &mut Scratch,
        out: &mut [f64],
    ) -> Result<()> {
        let width = out.len();
        let m = self.lattice.node_match(n, k);
        let (up, down) = (next.row(m.k_up), next.row(m.k_down));
        for i in 0..width {
            s.rhs[i] = m.p_up * up[i] + m.p_down * down[i];
        }
        let v = self.lattice.value(n, k);
        let growth = (self.params.r * self.h).exp();
        let ko = self.spec.knock_out_value();

        // First knocked-out grid index, if any.
        let cut = self
            .spec
            .barrier_level()
            .map(|_| (0..width).find(|&i| self.spec.knocked_out(self.params.s_of(self.grid.y(i), v))))
            .unwrap_or(None);

        match op.regime {
            Regime::Implicit => {
                op.fill_bands(&mut s.sub, &mut s.diag, &mut s.sup);
                if let (Some(cut), Some(level)) = (cut, self.spec.barrier_level()) {
                    self.impose_barrier(op, cut, level, v, ko * growth, s);
                }
                solve_tridiagonal(&s.sub, &s.diag, &s.sup, &s.rhs, out, &mut s.work)?;
            }
            Regime::Explicit => apply_explicit_into(op, &s.rhs, out),
        }

        let discount = 1.0 / growth;
        let american = self.spec.style == ExerciseStyle::American;
        for (i, x) in out.iter_mut().enumerate() {
            if cut.is_some_and(|c| i >= c) {
                *x = ko;
                continue;
            }
            *x *= discount;
            if american {
                let exercise = self.spec.payoff(self.params.s_of(self.grid.y(i), v));
                *x = x.max(exercise);
            }
        }
        Ok(())
    }

    /// Replaces knocked-out rows by the fixed knock-out value and closes the
    /// last live row with linear extrapolation to the exact barrier line
    /// `y = ln H - (ρ/σ) v`, which falls between grid points in general.
    fn impose_barrier(
        &self,
        op: &TridiagOperator,
        cut: usize,
        level: f64,
        v: f64,
        ko_value: f64,
        s: &mut Scratch,
    ) {
        let width = s.diag.len();
        for i in cut..width {
            s.sub[i] = 0.0;
            s.sup[i] = 0.0;
            s.diag[i] = 1.0;
            s.rhs[i] = ko_value;
        }
        if cut == 0 {
            return;
        }
        let j = cut - 1;
        let y_barrier = level.ln() - self.params.rho_over_sigma() * v;
        let frac = ((y_barrier - self.grid.y(j)) / self.grid.dy).clamp(f64::EPSILON, 1.0);
        // u[j+1] := u[j] (frac - 1)/frac + ko_value/frac
        let c = s.sup[j];
        s.diag[j] += c * (frac - 1.0) / frac;
        s.rhs[j] -= c * ko_value / frac;
        s.sup[j] = 0.0;
        debug_assert_eq!(op.size, width);
    }

    /// Runs the full induction, handing each surface (maturity first, root
    /// last) to `observe`.
    pub fn run_with(&self, mut observe: impl FnMut(&ValueSurface)) -> Result<PriceResult> {
        let mut diag = RunDiagnostics::default();
        let mut surface = self.terminal_surface();
        observe(&surface);
        while surface.step > 0 {
            surface = self.step_with(&surface, &mut diag)?;
            observe(&surface);
        }
        Ok(PriceResult {
            price: surface.get(0, self.grid.center()),
            grid: self.grid,
            diagnostics: diag,
        })
    }

    pub fn run(&self) -> Result<PriceResult> {
        self.run_with(|_| {})
    }
}

struct Scratch {
    rhs: Vec<f64>,
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    work: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            rhs: vec![0.0; n],
            sub: vec![0.0; n],
            diag: vec![0.0; n],
            sup: vec![0.0; n],
            work: vec![0.0; n],
        }
    }
}

/// Prices `spec` with the given discretisation.
pub fn price(params: &HestonParams, spec: &OptionSpec, numerics: &Numerics) -> Result<PriceResult> {
    Pricer::new(params, spec, numerics)?.run()
}
