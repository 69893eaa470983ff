//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ptstop_core::entry::{boundary_price, solve_x2, x2_unit_beta, AuxiliaryF};
use ptstop_core::majorant::{boundaries_from_curve, entry_oracle, exit_oracle, GridSpec};
use ptstop_core::model::buy_and_hold_value;
use ptstop_core::simulate::{horizon_for_residual, residual_crossing_mass, DEFAULT_RESIDUAL_TARGET};
use ptstop_core::strategy::{perturbation_dominance_check, PerturbationGrid};
use ptstop_core::sweep::{check_monotonicity, local_extrema, Boundary, Direction};
use ptstop_core::verify::{log_spaced, relative_error, sample_prices, RELATIVE_FLOOR};
use ptstop_core::{
    classify, critical_xi, evaluate_strategy_exact, exit_value, run_sweep, simulate_strategy_mc,
    solve_c, BuyRule, EntryRegime, EntrySolution, ModelInputs, Preferences, RegimeTag,
    SimulationConfig, SweepParameter, SweepSpec, TradingStrategy,
};

type Outcome = Result<String, String>;

fn inputs(alpha: f64, k: f64, r: f64, beta: f64, lambda: f64, gamma: f64, psi: f64) -> ModelInputs {
    ModelInputs::from_values(alpha, k, r, beta, lambda, gamma, psi).expect("valid inputs")
}

fn regime_scenarios() -> [(&'static str, ModelInputs, RegimeTag); 3] {
    [
        ("1a", inputs(0.5, 2.25, 1.0, 0.85, 1.01, 0.99, 1.0), RegimeTag::OneSided),
        ("1b", inputs(0.5, 2.25, 1.0, 0.85, 1.1, 0.9, 1.0), RegimeTag::Interval),
        ("1c", inputs(0.5, 2.25, 1.0, 0.85, 1.1, 0.9, 2.5), RegimeTag::NoTrade),
    ]
}

fn sweep_base() -> ModelInputs {
    inputs(0.5, 2.25, 1.0, 0.85, 1.05, 0.95, 5.0)
}

fn lambda_sweep_base(r: f64) -> ModelInputs {
    inputs(0.5, 2.25, r, 0.85, 1.0, 0.95, 1.0)
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn ac1_analytic_c() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        // c - 1 = k^(1/(alpha-1)) underflows f64 once alpha gets within ~0.005 of 1
        let alpha = rng.gen_range(0.02..0.98);
        let k = 10.0 - rng.gen_range(0.0..9.0); // (1, 10]
        let prefs = Preferences::new(alpha, k, 1.0).map_err(err)?;
        let c = solve_c(&prefs, alpha).map_err(err)?.c();
        worst = worst.max((c - (1.0 + k.powf(1.0 / (alpha - 1.0)))).abs());
    }
    let detail = format!("100 draws, max |c - 1 - k^(1/(alpha-1))| = {worst:.2e}");
    if worst <= 1e-10 { Ok(detail) } else { Err(detail) }
}

fn ac2_regime_scenarios() -> Outcome {
    let mut seen = Vec::new();
    for (name, inp, want) in regime_scenarios() {
        let got = classify(&inp).map_err(err)?.tag();
        seen.push(format!("{name}={got}"));
        if got != want {
            return Err(format!("scenario {name}: expected {want}, got {got}"));
        }
    }
    Ok(seen.join(", "))
}

fn ac3_oracle() -> Outcome {
    let grid = GridSpec::default();
    let mut scenarios: Vec<(&str, ModelInputs)> = regime_scenarios().iter().map(|(n, i, _)| (*n, *i)).collect();
    scenarios.push(("2", sweep_base()));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_v1, mut worst_v2) = (0.0f64, 0.0f64);
    for (name, inp) in scenarios {
        let solution = EntrySolution::solve(&inp).map_err(err)?;
        let floor = RELATIVE_FLOOR * solution.inaction_utility().abs();

        let curve = entry_oracle(&solution, &grid).map_err(err)?;
        let top = curve.window_price();
        for p in log_spaced(1e-4 * top, 0.999 * top, 50) {
            let got = curve.value_at_price(p).map_err(err)?;
            worst_v2 = worst_v2.max(relative_error(got, solution.entry_value(p), floor));
        }

        let found = boundaries_from_curve(&curve, solution.inaction_utility());
        let inside = |x: f64, cell: (f64, f64)| cell.0 <= x && x <= cell.1;
        match (solution.regime, found) {
            (EntryRegime::NoTrade { .. }, None) => {}
            (EntryRegime::OneSided { p1_star }, Some(b)) if inside(p1_star, b.p1_cell) && b.p2.is_none() => {}
            (EntryRegime::Interval { p1_star, p2_star, .. }, Some(b))
                if inside(p1_star, b.p1_cell) && b.p2_cell.is_some_and(|c| inside(p2_star, c)) => {}
            (regime, found) => {
                return Err(format!("scenario {name}: solver {regime:?} vs oracle contact set {found:?}"));
            }
        }

        for _ in 0..50 {
            let buy = rng.gen_range(0.1..20.0);
            let h = inp.reference_point(buy);
            let curve = exit_oracle(h, &inp, &grid).map_err(err)?;
            let p = h * rng.gen_range(0.01..3.0);
            let got = curve.value_at_price(p).map_err(err)?;
            let want = exit_value(p, h, &inp, &solution.exit);
            let exit_floor = RELATIVE_FLOOR * inp.prefs.k() * h.powf(inp.prefs.alpha());
            worst_v1 = worst_v1.max(relative_error(got, want, exit_floor));
        }
    }
    let detail = format!(
        "4 scenarios x 50 prices at {} points: max rel err V1 {worst_v1:.2e}, V2 {worst_v2:.2e}; boundaries inside their cells",
        grid.points
    );
    if worst_v1 <= 1e-3 && worst_v2 <= 1e-3 { Ok(detail) } else { Err(detail) }
}

fn ac4_verification() -> Outcome {
    let grid = PerturbationGrid::default();
    let (mut worst_exact, mut worst_dom) = (0.0f64, 0.0f64);
    let mut strategies = 0;
    for (_, inp, _) in regime_scenarios() {
        let solution = EntrySolution::solve(&inp).map_err(err)?;
        let floor = RELATIVE_FLOOR * solution.inaction_utility().abs();
        for p in sample_prices(&solution, 20) {
            let strategy = solution.optimal_strategy(p);
            let got = evaluate_strategy_exact(p, &strategy, &inp).map_err(err)?.expected_utility;
            worst_exact = worst_exact.max(relative_error(got, solution.entry_value(p), floor));
            let report = perturbation_dominance_check(p, &solution, &grid).map_err(err)?;
            worst_dom = worst_dom.max(report.max_violation);
            strategies = report.strategies;
        }
    }
    let detail = format!(
        "3 regimes x 20 prices: exact vs V2 max rel err {worst_exact:.2e}; {strategies} perturbations, max violation {worst_dom:.2e}"
    );
    if worst_exact <= 1e-9 && worst_dom <= 1e-12 { Ok(detail) } else { Err(detail) }
}

fn ac5_monte_carlo() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    let mut run = |label: &str, p: f64, strategy: TradingStrategy, inp: &ModelInputs| -> Result<(), String> {
        let exact = evaluate_strategy_exact(p, &strategy, inp).map_err(err)?.expected_utility;
        let horizon = horizon_for_residual(p, &strategy, inp, DEFAULT_RESIDUAL_TARGET).map_err(err)?;
        let residual = residual_crossing_mass(p, &strategy, inp, horizon).map_err(err)?;
        let est = simulate_strategy_mc(p, &strategy, inp, &SimulationConfig::new(horizon, 100_000, 7))
            .map_err(err)?;
        let z = if est.std_error > 0.0 {
            (est.mean - exact) / est.std_error
        } else if est.mean == exact {
            0.0
        } else {
            f64::INFINITY
        };
        ok &= z.abs() <= 3.0 && residual < 0.002;
        parts.push(format!("{label} z={z:+.2} resid={residual:.1e}"));
        Ok(())
    };
    for (name, inp, _) in regime_scenarios() {
        let solution = EntrySolution::solve(&inp).map_err(err)?;
        // start below the purchase region so that the path has to travel to it
        let p = solution.regime.p1_star().map(|p1| 0.5 * p1).unwrap_or(1.0);
        run(name, p, solution.optimal_strategy(p), &inp)?;
        if solution.tag() == RegimeTag::NoTrade {
            // the optimal rule never trades; also exercise a purchase at once
            let m = solution.exit.c();
            run(&format!("{name}/buy-now"), 1.0, TradingStrategy::new(BuyRule::Immediate, m), &inp)?;
        }
    }
    let detail = format!("1e5 paths each: {}", parts.join("; "));
    if ok { Ok(detail) } else { Err(detail) }
}

fn ac6_monotonicity() -> Outcome {
    let base = sweep_base();
    let checks = [
        (SweepParameter::Gamma, 0.9, 1.0, Boundary::P1Star, Direction::Nonincreasing),
        (SweepParameter::Psi, 0.0, 10.0, Boundary::P1Star, Direction::Nondecreasing),
        (SweepParameter::Lambda, 1.0, 1.1, Boundary::P2Star, Direction::Nonincreasing),
        (SweepParameter::Gamma, 0.9, 1.0, Boundary::P2Star, Direction::Nondecreasing),
        (SweepParameter::Psi, 0.0, 10.0, Boundary::P2Star, Direction::Nondecreasing),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (parameter, start, end, boundary, direction) in checks {
        let spec = SweepSpec { parameter, start, end, steps: 200 };
        let out = run_sweep(&base, &spec).map_err(err)?;
        let verdict = check_monotonicity(&out.records, boundary, direction);
        // a check over too few defined pairs would be vacuous
        let holds = verdict.holds && verdict.pairs >= 20;
        ok &= holds;
        parts.push(format!(
            "{:?} in {}: {} pairs, max violation {:.1e}{}",
            boundary,
            parameter,
            verdict.pairs,
            verdict.max_violation,
            if holds { "" } else { " FAILED" }
        ));
    }
    let detail = parts.join("; ");
    if ok { Ok(detail) } else { Err(detail) }
}

fn ac7_non_monotonicity() -> Outcome {
    let spec = SweepSpec {
        parameter: SweepParameter::Lambda,
        start: 1.0,
        end: 1.5,
        steps: 200,
    };
    let at_three = run_sweep(&lambda_sweep_base(3.0), &spec).map_err(err)?;
    let extrema = local_extrema(&at_three.records, Boundary::P1Star);
    let at_one = run_sweep(&lambda_sweep_base(1.0), &spec).map_err(err)?;
    let unit = local_extrema(&at_one.records, Boundary::P1Star).len();
    match extrema.first() {
        Some(e) => Ok(format!(
            "R=3: {} strict extrema of p1*, first a {:?} at lambda={:.4} (p1*={:.4}); R=1: {unit}",
            extrema.len(),
            e.kind,
            e.value,
            e.boundary_value
        )),
        None => Err(format!("no strict local extremum of p1* at R=3 (R=1: {unit})")),
    }
}

fn ac8_corollaries() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..200 {
        let alpha = rng.gen_range(0.02..0.98);
        let beta = rng.gen_range(alpha..=1.0);
        let k = 10.0 - rng.gen_range(0.0..9.0); // (1, 10]
        let r = rng.gen_range(0.1..10.0);
        let psi = rng.gen_range(0.0..10.0);
        let inp = inputs(alpha, k, r, beta, 1.0, 1.0, psi);
        let tag = classify(&inp).map_err(err)?.tag();
        if tag != RegimeTag::OneSided {
            return Err(format!(
                "draw {i} (alpha={alpha}, beta={beta}, k={k}, R={r}, psi={psi}) with lambda=gamma=1 gave {tag}"
            ));
        }
    }
    let mut zero_fee = 0;
    for inp in [
        inputs(0.5, 2.25, 1.0, 0.85, 1.01, 0.99, 0.0),
        inputs(0.5, 2.25, 1.0, 0.85, 1.1, 0.9, 0.0),
        inputs(0.5, 2.25, 3.0, 0.85, 1.2, 0.95, 0.0),
        inputs(0.3, 4.0, 1.0, 0.6, 1.0, 1.0, 0.0),
    ] {
        match classify(&inp).map_err(err)?.p1_star() {
            Some(p1) if p1 == 0.0 => zero_fee += 1,
            other => return Err(format!("psi=0 gave p1*={other:?} for {inp:?}")),
        }
    }
    Ok(format!("200/200 frictionless draws one-sided; {zero_fee}/{zero_fee} zero-fee scenarios have p1*=0"))
}

fn ac9_unit_beta() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    let (mut accepted, mut tried) = (0, 0);
    while accepted < 50 {
        tried += 1;
        if tried > 100_000 {
            return Err(format!("only {accepted} interval draws in {tried} tries"));
        }
        let alpha = rng.gen_range(0.1..0.9);
        let k = rng.gen_range(1.0..=5.0);
        let lambda = rng.gen_range(1.0..1.5);
        let gamma = rng.gen_range(0.6..1.0);
        let psi = rng.gen_range(0.0..5.0);
        let r = rng.gen_range(0.1..5.0);
        let inp = inputs(alpha, k, r, 1.0, lambda, gamma, psi);
        let regime = classify(&inp).map_err(err)?;
        let EntryRegime::Interval { p2_star, .. } = regime else {
            continue;
        };
        accepted += 1;
        let exit = solve_c(&inp.prefs, 1.0).map_err(err)?;
        let x2 = solve_x2(&inp, &exit).map_err(err)?;
        let closed = boundary_price(x2_unit_beta(alpha, k, inp.costs.xi(), exit.c()), &inp);
        worst = worst.max(relative_error(boundary_price(x2, &inp), closed, 0.0));
        worst = worst.max(relative_error(p2_star, closed, 0.0));
    }
    let detail = format!("50 interval draws ({tried} tried): max rel err of p2* {worst:.2e}");
    if worst <= 1e-10 { Ok(detail) } else { Err(detail) }
}

/// Richardson-extrapolated central difference.
fn central(g: impl Fn(f64) -> f64, x: f64) -> f64 {
    let d = |h: f64| (g(x + h) - g(x - h)) / (2.0 * h);
    let h = 1e-3 * x;
    (4.0 * d(0.5 * h) - d(h)) / 3.0
}

fn ac10_derivatives() -> Outcome {
    let mut scenarios: Vec<ModelInputs> = regime_scenarios().iter().map(|(_, i, _)| *i).collect();
    scenarios.push(sweep_base());
    scenarios.push(lambda_sweep_base(3.0).with_lambda(1.3).map_err(err)?);
    let (mut worst_d1, mut worst_d2) = (0.0f64, 0.0f64);
    let mut supercritical = 0;
    for inp in &scenarios {
        let exit = solve_c(&inp.prefs, inp.beta()).map_err(err)?;
        let f = AuxiliaryF::from_inputs(inp, &exit);
        let d1 = |x: f64| f.derivative(x).expect("x > 0");
        for x in log_spaced(1e-4, 1e4, 81) {
            let fd1 = central(|y| f.value(y), x);
            let fd2 = central(d1, x);
            worst_d1 = worst_d1.max(relative_error(d1(x), fd1, 0.0));
            worst_d2 = worst_d2.max(relative_error(f.second_derivative(x).map_err(err)?, fd2, 0.0));
        }
        if inp.costs.xi() > critical_xi(&exit) {
            supercritical += 1;
            if let Some(x) = log_spaced(1e-8, 1e8, 1601).into_iter().find(|&x| f.value(x) >= 0.0) {
                return Err(format!("f({x}) >= 0 although xi is supercritical ({inp:?})"));
            }
        }
    }
    let detail = format!(
        "{} scenarios x 81 points: max rel err f' {worst_d1:.2e}, f'' {worst_d2:.2e}; f < 0 on {supercritical} supercritical scenarios",
        scenarios.len()
    );
    if worst_d1 <= 1e-6 && worst_d2 <= 1e-6 && supercritical > 0 { Ok(detail) } else { Err(detail) }
}

fn ac11_ill_posed() -> Outcome {
    // The loss scale k R^alpha sets the bar; with R = 1 even the diverging
    // value stays below 10^3 |U(-R)| at n = 10^6, so a small aspiration is used.
    let mut parts = Vec::new();
    let mut ok = true;
    for beta in [-0.5, 0.3] {
        for r in [1e-6, 1.0] {
            let inp = inputs(0.5, 2.25, r, beta, 1.0, 1.0, 0.0);
            let small = buy_and_hold_value(1.0, 1e3, &inp).map_err(err)?;
            let large = buy_and_hold_value(1.0, 1e6, &inp).map_err(err)?;
            let bar = 1e3 * inp.prefs.inaction_utility().abs();
            let holds = large > small && large > bar;
            if r == 1e-6 {
                ok &= holds;
            }
            parts.push(format!(
                "beta={beta} R={r:e}: V(1e3)={small:.4} V(1e6)={large:.4} bar={bar:.4}{}",
                if holds { "" } else { " (bar not cleared)" }
            ));
        }
    }
    let detail = parts.join("; ");
    if ok { Ok(detail) } else { Err(detail) }
}

fn main() -> ExitCode {
    let criteria: [(&str, &str, Duration, fn() -> Outcome); 11] = [
        ("AC1", "analytic c at alpha = beta", Duration::from_secs(1), ac1_analytic_c),
        ("AC2", "regime classification of the three scenarios", Duration::from_secs(1), ac2_regime_scenarios),
        ("AC3", "concave-majorant oracle", Duration::from_secs(30), ac3_oracle),
        ("AC4", "exact valuation and dominance", Duration::from_secs(5), ac4_verification),
        ("AC5", "Monte Carlo consistency", Duration::from_secs(60), ac5_monte_carlo),
        ("AC6", "comparative statics", Duration::from_secs(10), ac6_monotonicity),
        ("AC7", "non-monotone p1* in lambda", Duration::from_secs(10), ac7_non_monotonicity),
        ("AC8", "frictionless and zero-fee corollaries", Duration::from_secs(10), ac8_corollaries),
        ("AC9", "unit-beta closed form", Duration::from_secs(10), ac9_unit_beta),
        ("AC10", "derivative fidelity", Duration::from_secs(10), ac10_derivatives),
        ("AC11", "ill-posed divergence", Duration::from_secs(10), ac11_ill_posed),
    ];
    let mut failures = 0;
    for (id, title, budget, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let (passed, detail) = match outcome {
            Ok(d) if elapsed <= budget => (true, d),
            Ok(d) => (false, format!("{d}; over the {budget:?} budget")),
            Err(d) => (false, d),
        };
        if !passed {
            failures += 1;
        }
        println!(
            "[{}] {id} {title} ({:.2}s): {detail}",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failures} failed", 11 - failures);
    if failures == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
