//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use common::{barrier_params, brute_force_price, table1, table4};
use hybrid_heston::diagnostics::validate_run;
use hybrid_heston::fd::build_grid;
use hybrid_heston::{
    convergence_ratio, heston_put_cf, price, ExerciseStyle, GridPolicy, HestonParams, Numerics,
    OptionKind, OptionSpec, Pricer, ValueSurface,
};

const SIGMAS: [f64; 3] = [0.04, 0.5, 1.0];
const CF_PUT: [f64; 3] = [7.994716, 7.8318540, 7.2313083];
const MC_AMERICAN_PUT: [f64; 3] = [9.074102, 8.904514, 8.277985];
const SPOTS_4: [f64; 5] = [8.0, 9.0, 10.0, 11.0, 12.0];
const ZFV_AMERICAN_PUT: [f64; 5] = [2.0784, 1.3337, 0.7961, 0.4483, 0.2428];
const SPOTS_6: [f64; 3] = [80.0, 100.0, 120.0];
const MOL_EURO_UO: [f64; 3] = [0.9029, 2.5908, 1.4782];
const MOL_AMER_UO: [f64; 3] = [1.4012, 8.3003, 21.8216];
/// Vol-of-vol for the barrier cases.
const BARRIER_SIGMA: f64 = 0.1;

struct Outcome {
    passed: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            passed: true,
            lines: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.lines.push(format!("    [{}] {line}", if ok { "ok" } else { "FAIL" }));
    }
}

fn put(style: ExerciseStyle, strike: f64, maturity: f64) -> OptionSpec {
    OptionSpec::new(OptionKind::Put, style, strike, maturity).unwrap()
}

fn up_and_out(style: ExerciseStyle) -> OptionSpec {
    OptionSpec::new(OptionKind::Call, style, 100.0, 0.5)
        .unwrap()
        .with_up_and_out(130.0)
        .unwrap()
}

fn rel(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

fn european_put_vs_closed_form() -> Outcome {
    let mut o = Outcome::new();
    for (sigma, cf) in SIGMAS.iter().zip(CF_PUT) {
        let t = std::time::Instant::now();
        let r = price(&table1(*sigma), &put(ExerciseStyle::European, 100.0, 1.0), &Numerics::new(400, 400)).unwrap();
        let e = rel(r.price, cf);
        o.record(
            e <= 3e-3,
            format!("sigma {sigma}: {:.7} vs {cf} (rel {e:.2e}, {} ms)", r.price, t.elapsed().as_millis()),
        );
    }
    o
}

fn closed_form_self_check() -> Outcome {
    let mut o = Outcome::new();
    for (sigma, cf) in SIGMAS.iter().zip(CF_PUT) {
        let got = heston_put_cf(&table1(*sigma), 100.0, 1.0).unwrap();
        let e = (got - cf).abs();
        o.record(e <= 1e-4, format!("sigma {sigma}: {got:.7} vs {cf} (abs {e:.2e})"));
    }
    o
}

fn american_put_vs_monte_carlo() -> Outcome {
    let mut o = Outcome::new();
    for (sigma, mc) in SIGMAS.iter().zip(MC_AMERICAN_PUT) {
        let r = price(&table1(*sigma), &put(ExerciseStyle::American, 100.0, 1.0), &Numerics::new(400, 400)).unwrap();
        let e = rel(r.price, mc);
        o.record(e <= 1e-2, format!("sigma {sigma}: {:.6} vs {mc} (rel {e:.2e})", r.price));
    }
    o
}

/// Prices at N = 200, 400, 800 for every spot of the short-dated American put.
fn short_put_prices() -> Vec<[f64; 3]> {
    let spec = put(ExerciseStyle::American, 10.0, 0.25);
    SPOTS_4
        .iter()
        .map(|&s0| {
            let p = table4(s0);
            let mut out = [0.0; 3];
            for (slot, n) in out.iter_mut().zip([200, 400, 800]) {
                *slot = price(&p, &spec, &Numerics::new(n, n)).unwrap().price;
            }
            out
        })
        .collect()
}

fn american_put_vs_reference(prices: &[[f64; 3]]) -> Outcome {
    let mut o = Outcome::new();
    for ((s0, want), ps) in SPOTS_4.iter().zip(ZFV_AMERICAN_PUT).zip(prices) {
        let e = rel(ps[2], want);
        o.record(e <= 1e-2, format!("S0 {s0}: {:.6} vs {want} (rel {e:.2e})", ps[2]));
    }
    o
}

fn convergence_order(prices: &[[f64; 3]]) -> Outcome {
    let mut o = Outcome::new();
    for (s0, ps) in SPOTS_4.iter().zip(prices) {
        let r = convergence_ratio(ps[0], ps[1], ps[2]).unwrap();
        o.record(
            (1.5..=3.5).contains(&r),
            format!("S0 {s0}: ratio {r:.4} from {:.6} {:.6} {:.6}", ps[0], ps[1], ps[2]),
        );
    }
    o
}

fn barrier_vs_method_of_lines() -> Outcome {
    let mut o = Outcome::new();
    for (style, refs) in [(ExerciseStyle::European, MOL_EURO_UO), (ExerciseStyle::American, MOL_AMER_UO)] {
        for (s0, want) in SPOTS_6.iter().zip(refs) {
            let p = barrier_params(*s0, BARRIER_SIGMA);
            let r = price(&p, &up_and_out(style), &Numerics::new(400, 400)).unwrap();
            let e = rel(r.price, want);
            o.record(e <= 1e-2, format!("{style:?} S0 {s0}: {:.5} vs {want} (rel {e:.2e})", r.price));
        }
    }
    o
}

/// Steps two pricers back in lockstep and reports the worst violation of
/// `lower <= upper` over every surface.
fn worst_dominance(params: &HestonParams, lower: &OptionSpec, upper: &OptionSpec, num: &Numerics) -> f64 {
    let (a, b) = (Pricer::new(params, lower, num).unwrap(), Pricer::new(params, upper, num).unwrap());
    let (mut sa, mut sb) = (a.terminal_surface(), b.terminal_surface());
    let mut worst: f64 = 0.0;
    loop {
        for (x, y) in sa.values().iter().zip(sb.values()) {
            worst = worst.max(x - y);
        }
        if sa.step == 0 {
            return worst;
        }
        sa = a.backward_step(&sa).unwrap();
        sb = b.backward_step(&sb).unwrap();
    }
}

fn property_suite() -> Outcome {
    let mut o = Outcome::new();

    // Operator stochasticity, local moments, variance chain first moment and
    // moment convergence, on every configuration used above.
    let euro = put(ExerciseStyle::European, 100.0, 1.0);
    let mut configs: Vec<(String, HestonParams, f64, usize)> = SIGMAS
        .iter()
        .map(|&s| (format!("table1 sigma {s}"), table1(s), 1.0, 400))
        .collect();
    configs.extend(SPOTS_4.iter().map(|&s| (format!("short put S0 {s}"), table4(s), 0.25, 800)));
    configs.push(("barrier".into(), barrier_params(100.0, BARRIER_SIGMA), 0.5, 400));
    for (name, p, t, n) in &configs {
        let report = validate_run(p, *t, &Numerics::new(*n, *n)).unwrap();
        let failed: Vec<_> = report
            .rows
            .iter()
            .filter(|r| !r.informational && !r.passed)
            .map(|r| format!("{} ({})", r.name, r.detail))
            .collect();
        o.record(
            failed.is_empty(),
            format!("{name}: {} checks{}", report.rows.len(), if failed.is_empty() { String::new() } else { format!(", failed: {}", failed.join("; ")) }),
        );
    }

    // Dominance on every surface.
    for &s in &SIGMAS {
        let w = worst_dominance(&table1(s), &euro, &put(ExerciseStyle::American, 100.0, 1.0), &Numerics::new(100, 100));
        o.record(w <= 0.0, format!("American >= European, sigma {s}: worst excess {w:.2e}"));
    }
    for style in [ExerciseStyle::European, ExerciseStyle::American] {
        let vanilla = OptionSpec::new(OptionKind::Call, style, 100.0, 0.5).unwrap();
        let w = worst_dominance(&barrier_params(100.0, BARRIER_SIGMA), &up_and_out(style), &vanilla, &Numerics::new(100, 100));
        o.record(w <= 1e-12, format!("{style:?} up-and-out <= vanilla: worst excess {w:.2e}"));
    }

    // Constant payoff discounts exactly.
    for (p, t, n) in [(table1(1.0), 1.0, 50), (table1(0.04), 1.0, 37), (table4(10.0), 0.25, 64)] {
        let pricer = Pricer::new(&p, &put(ExerciseStyle::European, 10.0, t), &Numerics::new(n, 2 * n)).unwrap();
        let width = pricer.grid().len();
        let mut s = ValueSurface::new(n, width, vec![1.0; (n + 1) * width]).unwrap();
        while s.step > 0 {
            s = pricer.backward_step(&s).unwrap();
        }
        let got = s.get(0, pricer.grid().center());
        let want = (-p.r * t).exp();
        o.record((got - want).abs() <= 1e-10, format!("unit payoff N={n}: {got:.15} vs {want:.15}"));
    }
    o
}

fn oracle_equivalence() -> Outcome {
    let mut o = Outcome::new();
    for sigma in SIGMAS {
        let p = table1(sigma);
        for style in [ExerciseStyle::European, ExerciseStyle::American] {
            let spec = put(style, 100.0, 1.0);
            let n_time = 2;
            let grid = build_grid(4, spec.maturity / n_time as f64, &p, spec.maturity, &GridPolicy::default()).unwrap();
            let want = brute_force_price(&p, &spec, &grid, n_time);
            let got = price(&p, &spec, &Numerics::new(n_time, 4)).unwrap().price;
            o.record(
                (got - want).abs() <= 1e-12,
                format!("{style:?} sigma {sigma}: {got:.15} vs {want:.15}"),
            );
        }
    }
    o
}

fn main() {
    let short = short_put_prices();
    let criteria: Vec<(&str, Outcome)> = vec![
        ("European put vs closed form", european_put_vs_closed_form()),
        ("closed form self-check", closed_form_self_check()),
        ("American put vs Monte Carlo benchmark", american_put_vs_monte_carlo()),
        ("short-dated American put vs reference", american_put_vs_reference(&short)),
        ("convergence ratio in [1.5, 3.5]", convergence_order(&short)),
        ("up-and-out calls vs method of lines", barrier_vs_method_of_lines()),
        ("property suite", property_suite()),
        ("dense oracle equivalence", oracle_equivalence()),
    ];
    let mut all = true;
    for (i, (name, outcome)) in criteria.iter().enumerate() {
        println!("criterion {} {}: {name}", i + 1, if outcome.passed { "PASS" } else { "FAIL" });
        for l in &outcome.lines {
            println!("{l}");
        }
        all &= outcome.passed;
    }
    if !all {
        std::process::exit(1);
    }
}
