use std::fmt;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ptstop_core::majorant::{oracle_boundaries, GridSpec, OracleBoundaries};
use ptstop_core::model::{buy_and_hold_value, classify_wellposedness};
use ptstop_core::simulate::{
    horizon_for_residual, residual_crossing_mass, DEFAULT_RESIDUAL_TARGET, DEFAULT_STEPS,
};
use ptstop_core::sweep::{write_records_csv, SweepOutput};
use ptstop_core::verify::{log_spaced, verify_solution, CheckOutcome};
use ptstop_core::{
    classify, evaluate_strategy_exact, simulate_strategy_mc, EntryRegime, EntrySolution, Error,
    ExitSolution, ModelInputs, RegimeTag, ScenarioConfig, SimulationConfig, SweepParameter,
    SweepSpec, TradingStrategy, VerifyOptions,
};

/// Optimal buy and sell thresholds for a loss-averse trader facing
/// transaction costs.
#[derive(Parser, Debug)]
#[command(name = "ptstop", version)]
struct Cli {
    #[command(flatten)]
    scenario: ScenarioArgs,

    /// Output format; each command has its own default.
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct ScenarioArgs {
    /// Scenario file with `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    k: Option<f64>,
    /// Aspiration level.
    #[arg(long = "R", global = true, allow_negative_numbers = true)]
    aspiration: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    mu: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    sigma: Option<f64>,
    /// `1 - 2 mu / sigma^2`; replaces mu and sigma.
    #[arg(long, global = true, allow_negative_numbers = true, conflicts_with_all = ["mu", "sigma"])]
    beta: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    gamma: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    psi: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the scenario and report c, the regime and the purchase boundaries.
    Solve,
    /// Print the entry regime only.
    Classify,
    /// Tabulate the buy-now value, its floored payoff and the value function.
    Value {
        /// Comma-separated prices.
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["from", "to"])]
        prices: Option<Vec<f64>>,
        /// Log-spaced prices from here ...
        #[arg(long, requires = "to")]
        from: Option<f64>,
        /// ... to here.
        #[arg(long, requires = "from")]
        to: Option<f64>,
        #[arg(long, default_value_t = 25)]
        n: usize,
    },
    /// Sweep one cost or preference parameter and record the boundaries.
    Sweep {
        /// One of lambda, gamma, psi, R.
        #[arg(long)]
        param: SweepParameter,
        #[arg(long, allow_negative_numbers = true)]
        start: f64,
        #[arg(long, allow_negative_numbers = true)]
        end: f64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
    },
    /// Cross-check the solution against exact valuation, perturbations and
    /// the concave-majorant oracle.
    Verify {
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 50)]
        oracle_samples: usize,
        #[arg(long, default_value_t = 100_000)]
        grid: usize,
        /// Multiply the solved c by this factor before checking.
        #[arg(long, hide = true)]
        corrupt_c: Option<f64>,
    },
    /// Compare the value function and boundaries with the concave-majorant oracle.
    OracleCheck {
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 100_000)]
        grid: usize,
    },
    /// Monte Carlo estimate of the optimal strategy's expected utility.
    Simulate {
        /// Starting price.
        #[arg(long, default_value_t = 1.0)]
        price: f64,
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        /// Simulated time; chosen from the residual crossing bound if omitted.
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_STEPS)]
        steps: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Failure carrying its own exit status.
#[derive(Debug)]
struct Exit {
    code: u8,
    message: String,
}

impl fmt::Display for Exit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Exit {}

fn invalid(message: impl Into<String>) -> anyhow::Error {
    Exit {
        code: 1,
        message: message.into(),
    }
    .into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<Exit>() {
        return e.code;
    }
    match err.downcast_ref::<Error>() {
        Some(
            Error::InvalidParameter { .. }
            | Error::Domain(_)
            | Error::IllPosed { .. }
            | Error::Regime(_)
            | Error::Unsupported(_),
        ) => 1,
        _ => 3,
    }
}

fn load_inputs(args: &ScenarioArgs) -> Result<ModelInputs> {
    let base = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
            ScenarioConfig::parse(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => ScenarioConfig::default(),
    };
    let overrides = ScenarioConfig {
        alpha: args.alpha,
        k: args.k,
        aspiration: args.aspiration,
        mu: args.mu,
        sigma: args.sigma,
        beta: args.beta,
        lambda: args.lambda,
        gamma: args.gamma,
        psi: args.psi,
    };
    Ok(base.merged(&overrides)?.build()?)
}

struct Output {
    sink: Box<dyn Write>,
}

impl Output {
    fn open(path: Option<&PathBuf>) -> Result<Self> {
        let sink: Box<dyn Write> = match path {
            Some(p) => Box::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?),
            None => Box::new(io::stdout().lock()),
        };
        Ok(Self { sink })
    }

    fn json<T: Serialize>(&mut self, value: &T) -> Result<()> {
        serde_json::to_writer_pretty(&mut self.sink, value)?;
        writeln!(self.sink)?;
        Ok(())
    }

    fn csv<T: Serialize>(&mut self, rows: &[T]) -> Result<()> {
        let mut w = csv::Writer::from_writer(&mut self.sink);
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Serialize)]
struct SolveReport {
    regime: RegimeTag,
    c: Option<f64>,
    p1_star: Option<f64>,
    p2_star: Option<f64>,
    no_trade_constant: Option<f64>,
    critical_xi: Option<f64>,
    xi: f64,
    /// Sale price for a purchase at `p1_star`.
    sale_threshold: Option<f64>,
    walk_away_utility: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    buy_and_hold: Vec<BuyAndHold>,
}

#[derive(Serialize)]
struct BuyAndHold {
    price: f64,
    sell_at: f64,
    value: f64,
}

#[derive(Serialize)]
struct SolveRow {
    regime: RegimeTag,
    c: Option<f64>,
    p1_star: Option<f64>,
    p2_star: Option<f64>,
    no_trade_constant: Option<f64>,
    critical_xi: Option<f64>,
    xi: f64,
    sale_threshold: Option<f64>,
    walk_away_utility: f64,
}

fn solve_report(inputs: &ModelInputs) -> Result<SolveReport> {
    let walk_away_utility = inputs.prefs.inaction_utility();
    let xi = inputs.costs.xi();
    if !classify_wellposedness(inputs).is_well_posed() {
        let buy_and_hold = [1e2, 1e4, 1e6]
            .into_iter()
            .map(|n| {
                Ok(BuyAndHold {
                    price: 1.0,
                    sell_at: n,
                    value: buy_and_hold_value(1.0, n, inputs)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(SolveReport {
            regime: RegimeTag::IllPosed,
            c: None,
            p1_star: None,
            p2_star: None,
            no_trade_constant: None,
            critical_xi: None,
            xi,
            sale_threshold: None,
            walk_away_utility,
            buy_and_hold,
        });
    }
    let solution = EntrySolution::solve(inputs)?;
    let p1 = solution.regime.p1_star();
    Ok(SolveReport {
        regime: solution.tag(),
        c: Some(solution.exit.c()),
        p1_star: p1,
        p2_star: solution.regime.p2_star(),
        no_trade_constant: solution.regime.no_trade_constant(),
        critical_xi: Some(solution.profile.critical_xi),
        xi,
        sale_threshold: p1.map(|p| solution.sale_price(p)),
        walk_away_utility,
        buy_and_hold: Vec::new(),
    })
}

#[derive(Serialize)]
struct ValueRow {
    price: f64,
    v1: f64,
    g2: f64,
    v2: f64,
    region: &'static str,
}

#[derive(Serialize)]
struct CheckSummary<'a> {
    regime: RegimeTag,
    c: f64,
    passed: bool,
    checks: &'a [CheckOutcome],
    #[serde(skip_serializing_if = "Option::is_none")]
    solver_p1_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    solver_p2_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_boundaries: Option<OracleBoundaries>,
}

#[derive(Serialize)]
struct SimulationReport {
    price: f64,
    strategy: TradingStrategy,
    estimate: f64,
    std_error: f64,
    exact_value: f64,
    z: f64,
    n_paths: usize,
    seed: u64,
    horizon: f64,
    steps: usize,
    residual_crossing_mass: f64,
    never_buy: u64,
    never_sell: u64,
    round_trip: u64,
}

fn verification_failure(checks: &[CheckOutcome]) -> anyhow::Error {
    let worst = checks
        .iter()
        .filter(|c| !c.passed)
        .max_by(|a, b| (a.max_error / a.tolerance).total_cmp(&(b.max_error / b.tolerance)));
    let message = match worst {
        Some(c) => format!(
            "check `{}` failed: error {:.3e} exceeds {:.1e} (worst price {})",
            c.name,
            c.max_error,
            c.tolerance,
            c.worst_price.map_or("n/a".to_string(), |p| p.to_string())
        ),
        None => "verification failed".to_string(),
    };
    Exit { code: 2, message }.into()
}

fn only_json(format: Option<Format>, command: &str) -> Result<()> {
    match format {
        Some(Format::Csv) => Err(invalid(format!("`{command}` only writes JSON"))),
        _ => Ok(()),
    }
}

fn solution_for(inputs: &ModelInputs, corrupt_c: Option<f64>) -> Result<EntrySolution> {
    let solution = EntrySolution::solve(inputs)?;
    match corrupt_c {
        Some(factor) => {
            let exit = ExitSolution::with_multiple(&inputs.prefs, inputs.beta(), solution.exit.c() * factor)?;
            Ok(EntrySolution::with_exit(inputs, exit)?)
        }
        None => Ok(solution),
    }
}

fn run(cli: Cli) -> Result<()> {
    let inputs = load_inputs(&cli.scenario)?;
    let mut out = Output::open(cli.out.as_ref())?;
    match cli.command {
        Command::Solve => {
            let report = solve_report(&inputs)?;
            match cli.format.unwrap_or(Format::Json) {
                Format::Json => out.json(&report),
                Format::Csv => out.csv(&[SolveRow {
                    regime: report.regime,
                    c: report.c,
                    p1_star: report.p1_star,
                    p2_star: report.p2_star,
                    no_trade_constant: report.no_trade_constant,
                    critical_xi: report.critical_xi,
                    xi: report.xi,
                    sale_threshold: report.sale_threshold,
                    walk_away_utility: report.walk_away_utility,
                }]),
            }
        }
        Command::Classify => {
            only_json(cli.format, "classify")?;
            out.json(&classify(&inputs)?)
        }
        Command::Value { prices, from, to, n } => {
            let prices = match (prices, from, to) {
                (Some(p), _, _) => p,
                (None, Some(a), Some(b)) => {
                    if !(a > 0.0 && b > a) || n < 2 {
                        return Err(invalid(format!("need 0 < from < to and n >= 2, got {a}, {b}, {n}")));
                    }
                    log_spaced(a, b, n)
                }
                _ => return Err(invalid("give --prices or --from and --to")),
            };
            if let Some(bad) = prices.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
                return Err(invalid(format!("prices must be positive, got {bad}")));
            }
            let solution = EntrySolution::solve(&inputs)?;
            let rows: Vec<ValueRow> = prices
                .iter()
                .map(|&p| ValueRow {
                    price: p,
                    v1: solution.v1(p),
                    g2: solution.g2_price(p),
                    v2: solution.entry_value(p),
                    region: if solution.in_purchase_region(p) { "buy" } else { "wait" },
                })
                .collect();
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => out.csv(&rows),
                Format::Json => out.json(&rows),
            }
        }
        Command::Sweep {
            param,
            start,
            end,
            steps,
        } => {
            let spec = SweepSpec {
                parameter: param,
                start,
                end,
                steps,
            };
            let SweepOutput {
                records,
                transitions,
            } = ptstop_core::run_sweep(&inputs, &spec)?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    write_records_csv(&records, &mut out.sink)?;
                    for t in &transitions {
                        eprintln!(
                            "transition in {}: {} -> {} within [{}, {}]",
                            t.parameter, t.regime_at_lower, t.regime_at_upper, t.lower, t.upper
                        );
                    }
                    Ok(())
                }
                Format::Json => out.json(&SweepOutput {
                    records,
                    transitions,
                }),
            }
        }
        Command::Verify {
            samples,
            oracle_samples,
            grid,
            corrupt_c,
        } => {
            only_json(cli.format, "verify")?;
            let solution = solution_for(&inputs, corrupt_c)?;
            let options = VerifyOptions {
                samples,
                oracle_samples,
                grid: GridSpec::with_points(grid),
                corrupt_c: None,
            };
            let report = verify_solution(&solution, &options)?;
            out.json(&CheckSummary {
                regime: report.regime,
                c: report.c,
                passed: report.passed,
                checks: &report.checks,
                solver_p1_star: None,
                solver_p2_star: None,
                oracle_boundaries: None,
            })?;
            if report.passed {
                Ok(())
            } else {
                Err(verification_failure(&report.checks))
            }
        }
        Command::OracleCheck { samples, grid } => {
            only_json(cli.format, "oracle-check")?;
            let solution = EntrySolution::solve(&inputs)?;
            let spec = GridSpec::with_points(grid);
            let options = VerifyOptions {
                samples: 2,
                oracle_samples: samples,
                grid: spec,
                corrupt_c: None,
            };
            let report = verify_solution(&solution, &options)?;
            let checks: Vec<CheckOutcome> = report
                .checks
                .into_iter()
                .filter(|c| c.name.starts_with("oracle_"))
                .collect();
            let passed = checks.iter().all(|c| c.passed);
            out.json(&CheckSummary {
                regime: report.regime,
                c: report.c,
                passed,
                checks: &checks,
                solver_p1_star: solution.regime.p1_star(),
                solver_p2_star: solution.regime.p2_star(),
                oracle_boundaries: oracle_boundaries(&solution, &spec)?,
            })?;
            if passed {
                Ok(())
            } else {
                Err(verification_failure(&checks))
            }
        }
        Command::Simulate {
            price,
            paths,
            horizon,
            seed,
            steps,
        } => {
            only_json(cli.format, "simulate")?;
            let solution = EntrySolution::solve(&inputs)?;
            let strategy = solution.optimal_strategy(price);
            let horizon = match horizon {
                Some(h) => h,
                None if matches!(solution.regime, EntryRegime::NoTrade { .. }) => 1.0,
                None => horizon_for_residual(price, &strategy, &inputs, DEFAULT_RESIDUAL_TARGET)?,
            };
            let config = SimulationConfig {
                horizon,
                n_paths: paths,
                seed,
                steps,
            };
            let est = simulate_strategy_mc(price, &strategy, &inputs, &config)?;
            let exact = evaluate_strategy_exact(price, &strategy, &inputs)?.expected_utility;
            let z = if est.std_error > 0.0 {
                (est.mean - exact) / est.std_error
            } else {
                0.0
            };
            out.json(&SimulationReport {
                price,
                strategy,
                estimate: est.mean,
                std_error: est.std_error,
                exact_value: exact,
                z,
                n_paths: est.n_paths,
                seed,
                horizon: est.horizon,
                steps: est.steps,
                residual_crossing_mass: residual_crossing_mass(price, &strategy, &inputs, horizon)?,
                never_buy: est.counts.never_buy,
                never_sell: est.counts.never_sell,
                round_trip: est.counts.round_trip,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
