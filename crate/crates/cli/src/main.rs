use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gamehedge::market::{instance_from_json, validate_instance, Instance};
use gamehedge::oracle::{dual_payoff, extremum, oracle_row, sample_dual_points, OracleRow};
use gamehedge::pricing::{
    ask_price, bid_price, buyer_value_for_exercise, buyer_value_surfaces, seller_value_for_cancel,
    seller_value_surfaces, Surfaces,
};
use gamehedge::risk::{buyer_risk, min_risk_bruteforce, seller_risk, GridSpec, RiskReport};
use gamehedge::scalar::{format_scalar, parse_scalar, to_decimal, Rat, Scalar};
use gamehedge::stopping::{enumerate_stopping_times, PureStoppingTime};
use gamehedge::strategy::{
    build_buyer_strategy, build_seller_strategy, strategy_from_json, verify_superhedge, Check,
    HedgeStrategy, StrategyFile,
};
use gamehedge::{PolyFn, Portfolio, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

const STOPPING_TIME_LIMIT: usize = 100_000;

#[derive(Parser)]
#[command(
    name = "gamehedge",
    version,
    about = "Exact pricing and superhedging of game options with transaction costs"
)]
struct Cli {
    /// Append decimal approximations with this many digits.
    #[arg(long, global = true, value_name = "K")]
    decimals: Option<usize>,

    /// Seed for the dual-side sampler.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for per-stopping-time linear programs.
    #[arg(long, global = true, default_value_t = 1, value_name = "N")]
    jobs: usize,

    /// Machine-readable report: `json` prints it to stdout instead of the
    /// text output, any other value is a file to write it to.
    #[arg(long, global = true, value_name = "json|PATH")]
    report: Option<String>,

    /// Downgrade instance validation failures to warnings.
    #[arg(long, global = true)]
    lenient: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sides {
    Seller,
    Buyer,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum HedgeSide {
    Seller,
    Buyer,
}

impl From<HedgeSide> for Side {
    fn from(s: HedgeSide) -> Self {
        match s {
            HedgeSide::Seller => Side::Seller,
            HedgeSide::Buyer => Side::Buyer,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Ask and bid prices.
    Price {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        side: Sides,
        /// Also list the value for every pure stopping time of the hedger.
        #[arg(long)]
        per_sigma: bool,
        /// Write all value functions, keyed by node id, to this file.
        #[arg(long, value_name = "FILE")]
        emit_surfaces: Option<PathBuf>,
    },
    /// Build a superhedging strategy.
    Strategy {
        instance: PathBuf,
        #[arg(long, value_enum)]
        side: HedgeSide,
        /// Initial cash and shares (defaults to the price, no shares).
        #[arg(long, num_args = 2, value_names = ["CASH", "SHARES"], allow_hyphen_values = true)]
        start: Option<Vec<String>>,
        /// Write the strategy here instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Check a strategy file; exit code 1 if it does not superhedge.
    Verify {
        instance: PathBuf,
        strategy: PathBuf,
    },
    /// Brute-force LP cross-check over all pure stopping times.
    Oracle {
        instance: PathBuf,
        #[arg(long, default_value_t = 3)]
        max_horizon: usize,
        /// Feasible dual points to sample for weak-duality bounds.
        #[arg(long, default_value_t = 0)]
        samples: usize,
    },
    /// Shortfall risk of a strategy file.
    Risk {
        instance: PathBuf,
        strategy: PathBuf,
    },
    /// Grid search for the least shortfall risk on a budget (horizon <= 2).
    RiskMin {
        instance: PathBuf,
        #[arg(long, value_enum)]
        side: HedgeSide,
        #[arg(long, allow_hyphen_values = true)]
        budget: String,
        #[arg(long)]
        grid_step: String,
        #[arg(long)]
        grid_radius: String,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("cannot read `{path}`: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write `{path}`: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] gamehedge::Error),
}

type CliResult<T> = Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn scalar_arg(name: &str, text: &str) -> CliResult<Scalar> {
    parse_scalar(text).map_err(|e| CliError::Input(format!("--{name}: {e}")))
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize")
}

struct Ctx {
    decimals: Option<usize>,
    report: Option<String>,
    lenient: bool,
    seed: u64,
    jobs: usize,
}

impl Ctx {
    fn num(&self, x: &Scalar) -> String {
        match self.decimals {
            Some(k) => format!("{} ({})", format_scalar(x), to_decimal(x, k)),
            None => format_scalar(x),
        }
    }

    /// Whether text output should be printed (a stdout JSON report replaces it).
    fn text(&self) -> bool {
        self.report.as_deref() != Some("json")
    }

    fn emit<T: Serialize>(&self, report: &T) -> CliResult<()> {
        match self.report.as_deref() {
            None => Ok(()),
            Some("json") => {
                println!("{}", pretty(report));
                Ok(())
            }
            Some(path) => write(Path::new(path), &format!("{}\n", pretty(report))),
        }
    }

    fn load(&self, path: &Path) -> CliResult<Instance> {
        let inst = instance_from_json(&read(path)?)?;
        let violations = validate_instance(&inst);
        if violations.is_empty() {
            return Ok(inst);
        }
        let listed: Vec<String> = violations.iter().map(|v| format!("  {v}")).collect();
        if self.lenient && !violations.iter().any(|v| v.kind.is_fatal()) {
            eprintln!(
                "warning: instance violates standing assumptions:\n{}",
                listed.join("\n")
            );
            Ok(inst)
        } else {
            Err(CliError::Input(format!(
                "invalid instance `{}`:\n{}",
                path.display(),
                listed.join("\n")
            )))
        }
    }

    fn pool(&self) -> rayon::ThreadPool {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs.max(1))
            .build()
            .expect("thread pool")
    }
}

fn braces(labels: &[String]) -> String {
    format!("{{{}}}", labels.join(","))
}

#[derive(Serialize)]
struct StopValueRow {
    stop_nodes: Vec<String>,
    value: Rat,
}

#[derive(Serialize, Default)]
struct PriceReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    ask: Option<Rat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bid: Option<Rat>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    seller_per_stop: Vec<StopValueRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    buyer_per_stop: Vec<StopValueRow>,
}

#[derive(Serialize)]
struct SurfaceDump {
    value: BTreeMap<String, PolyFn>,
    rebalanced: BTreeMap<String, PolyFn>,
    continuation: BTreeMap<String, PolyFn>,
}

impl SurfaceDump {
    fn new(inst: &Instance, s: &Surfaces) -> Self {
        let keyed = |layer: &gamehedge::pricing::ValueSurface| {
            layer
                .iter()
                .map(|(n, f)| (inst.tree.label(n).to_string(), f.clone()))
                .collect()
        };
        Self {
            value: keyed(&s.value),
            rebalanced: keyed(&s.rebalanced),
            continuation: keyed(&s.continuation),
        }
    }
}

fn price(
    ctx: &Ctx,
    path: &Path,
    sides: Sides,
    per_stop: bool,
    emit: Option<&Path>,
) -> CliResult<bool> {
    let inst = ctx.load(path)?;
    let want_seller = matches!(sides, Sides::Seller | Sides::Both);
    let want_buyer = matches!(sides, Sides::Buyer | Sides::Both);
    let seller = want_seller
        .then(|| seller_value_surfaces(&inst))
        .transpose()?;
    let buyer = want_buyer
        .then(|| buyer_value_surfaces(&inst))
        .transpose()?;

    let mut report = PriceReport {
        ask: seller.as_ref().map(|s| Rat(ask_price(s))),
        bid: buyer.as_ref().map(|b| Rat(bid_price(b))),
        ..Default::default()
    };
    if per_stop {
        let stops = enumerate_stopping_times(&inst.tree, STOPPING_TIME_LIMIT)?;
        for s in &stops {
            let labels = s.labels(&inst.tree);
            if want_seller {
                report.seller_per_stop.push(StopValueRow {
                    stop_nodes: labels.clone(),
                    value: Rat(seller_value_for_cancel(&inst, s)?.value),
                });
            }
            if want_buyer {
                report.buyer_per_stop.push(StopValueRow {
                    stop_nodes: labels,
                    value: Rat(buyer_value_for_exercise(&inst, s)?.value),
                });
            }
        }
    }

    if let Some(out) = emit {
        let mut dump = BTreeMap::new();
        if let Some(s) = &seller {
            dump.insert("seller", SurfaceDump::new(&inst, s));
        }
        if let Some(b) = &buyer {
            dump.insert("buyer", SurfaceDump::new(&inst, b));
        }
        write(out, &format!("{}\n", pretty(&dump)))?;
    }

    if ctx.text() {
        let mut parts = Vec::new();
        if let Some(a) = &report.ask {
            parts.push(format!("V^a = {}", ctx.num(&a.0)));
        }
        if let Some(b) = &report.bid {
            parts.push(format!("V^b = {}", ctx.num(&b.0)));
        }
        println!("{}", parts.join(", "));
        for row in &report.seller_per_stop {
            println!(
                "  V^a_sigma {} = {}",
                braces(&row.stop_nodes),
                ctx.num(&row.value.0)
            );
        }
        for row in &report.buyer_per_stop {
            println!(
                "  V^b_tau {} = {}",
                braces(&row.stop_nodes),
                ctx.num(&row.value.0)
            );
        }
    }
    ctx.emit(&report)?;
    Ok(true)
}

fn strategy(
    ctx: &Ctx,
    path: &Path,
    side: Side,
    start: Option<&[String]>,
    out: Option<&Path>,
) -> CliResult<bool> {
    let inst = ctx.load(path)?;
    let (surfaces, default_cash) = match side {
        Side::Seller => {
            let z = seller_value_surfaces(&inst)?;
            let cash = ask_price(&z);
            (z, cash)
        }
        Side::Buyer => {
            let u = buyer_value_surfaces(&inst)?;
            let cash = -bid_price(&u);
            (u, cash)
        }
    };
    let start = match start {
        Some([cash, shares]) => {
            Portfolio::new(scalar_arg("start", cash)?, scalar_arg("start", shares)?)
        }
        Some(_) => return Err(CliError::Input("--start takes cash and shares".into())),
        None => Portfolio::cash(default_cash),
    };
    let strat = match side {
        Side::Seller => build_seller_strategy(&inst, &surfaces, &start)?,
        Side::Buyer => build_buyer_strategy(&inst, &surfaces, &start)?,
    };
    let file = StrategyFile::from_strategy(&inst, &strat);
    let text = format!("{}\n", pretty(&file));
    match out {
        Some(out) => {
            write(out, &text)?;
            if ctx.text() {
                println!(
                    "{side} strategy from ({}, {}): budget {}, stopping region {}",
                    ctx.num(&start.gamma),
                    ctx.num(&start.delta),
                    ctx.num(&strat.initial_budget),
                    braces(&strat.stop.labels(&inst.tree)),
                );
            }
        }
        None if ctx.text() => print!("{text}"),
        None => {}
    }
    ctx.emit(&file)?;
    Ok(true)
}

fn load_strategy(inst: &Instance, path: &Path) -> CliResult<HedgeStrategy> {
    Ok(strategy_from_json(inst, &read(path)?)?)
}

fn verify(ctx: &Ctx, path: &Path, strat_path: &Path) -> CliResult<bool> {
    let inst = ctx.load(path)?;
    let strat = load_strategy(&inst, strat_path)?;
    let report = verify_superhedge(&inst, &strat);
    if ctx.text() {
        if report.passed {
            println!(
                "PASS: {} strategy superhedges (budget {})",
                strat.side,
                ctx.num(&strat.initial_budget)
            );
        } else {
            let first = report
                .first_violation()
                .expect("failed report has a violation");
            let what = match first.check {
                Check::Predictability => "predictability",
                Check::SelfFinancing => "self-financing",
                Check::Superhedging => "superhedging",
            };
            let opponent = first
                .opponent_date
                .map(|t| format!(", opponent date {t}"))
                .unwrap_or_default();
            println!(
                "FAIL: {what} at node `{}` (date {}{opponent}), slack {}; {} violation(s) in total",
                first.node,
                first.date,
                ctx.num(&first.slack.0),
                report.violations.len()
            );
        }
    }
    ctx.emit(&report)?;
    Ok(report.passed)
}

#[derive(Serialize)]
struct SideVerdict {
    rows: Vec<OracleRow>,
    lp_extremum: Rat,
    surfaces: Rat,
    agree: bool,
}

#[derive(Serialize)]
struct DualBounds {
    points: usize,
    seed: u64,
    /// `min_σ max_samples` of the seller dual payoff: a lower bound on V^a.
    seller_lower_bound: Rat,
    /// `max_τ min_samples` of the buyer dual payoff: an upper bound on V^b.
    buyer_upper_bound: Rat,
}

#[derive(Serialize)]
struct OracleReport {
    seller: SideVerdict,
    buyer: SideVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    dual: Option<DualBounds>,
    passed: bool,
}

fn verdict(
    inst: &Instance,
    side: Side,
    stops: &[PureStoppingTime],
    pool: &rayon::ThreadPool,
    surface: Scalar,
) -> CliResult<SideVerdict> {
    let rows = pool.install(|| {
        stops
            .par_iter()
            .map(|s| oracle_row(inst, side, s))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let best = extremum(side, &rows).expect("at least one stopping time");
    let agree = best == surface && rows.iter().all(OracleRow::agrees);
    Ok(SideVerdict {
        rows,
        lp_extremum: Rat(best),
        surfaces: Rat(surface),
        agree,
    })
}

fn oracle(ctx: &Ctx, path: &Path, max_horizon: usize, samples: usize) -> CliResult<bool> {
    let inst = ctx.load(path)?;
    if inst.horizon() > max_horizon {
        return Err(CliError::Input(format!(
            "horizon {} exceeds --max-horizon {max_horizon}",
            inst.horizon()
        )));
    }
    let stops = enumerate_stopping_times(&inst.tree, STOPPING_TIME_LIMIT)?;
    let pool = ctx.pool();
    let ask = ask_price(&seller_value_surfaces(&inst)?);
    let bid = bid_price(&buyer_value_surfaces(&inst)?);
    let seller = verdict(&inst, Side::Seller, &stops, &pool, ask)?;
    let buyer = verdict(&inst, Side::Buyer, &stops, &pool, bid)?;

    let dual = (samples > 0).then(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        let points = sample_dual_points(&inst, samples, 12, &mut rng);
        let best = |side: Side| -> Vec<Scalar> {
            stops
                .iter()
                .map(|s| {
                    let values = points
                        .iter()
                        .map(|p| dual_payoff(&inst, side, s, &p.chi, &p.martingale));
                    match side {
                        Side::Seller => values.max(),
                        Side::Buyer => values.min(),
                    }
                    .unwrap_or_default()
                })
                .collect()
        };
        DualBounds {
            points: points.len(),
            seed: ctx.seed,
            seller_lower_bound: Rat(best(Side::Seller).into_iter().min().unwrap_or_default()),
            buyer_upper_bound: Rat(best(Side::Buyer).into_iter().max().unwrap_or_default()),
        }
    });

    let passed = seller.agree && buyer.agree;
    if ctx.text() {
        for (name, sym, v) in [("sigma", "min", &seller), ("tau", "max", &buyer)] {
            for row in &v.rows {
                println!(
                    "{name} {}: LP {}, surfaces {}",
                    braces(&row.stop_nodes),
                    ctx.num(&row.lp_value.0),
                    ctx.num(&row.surface_value.0)
                );
            }
            let price = if name == "sigma" { "V^a" } else { "V^b" };
            println!(
                "{sym} over {name} = {}, {price} = {}: {}",
                ctx.num(&v.lp_extremum.0),
                ctx.num(&v.surfaces.0),
                if v.agree { "agree" } else { "MISMATCH" }
            );
        }
        if let Some(d) = &dual {
            println!(
                "dual sampler: {} feasible points, V^a >= {}, V^b <= {}",
                d.points,
                ctx.num(&d.seller_lower_bound.0),
                ctx.num(&d.buyer_upper_bound.0)
            );
        }
    }
    ctx.emit(&OracleReport {
        seller,
        buyer,
        dual,
        passed,
    })?;
    Ok(passed)
}

fn risk(ctx: &Ctx, path: &Path, strat_path: &Path) -> CliResult<bool> {
    let inst = ctx.load(path)?;
    let strat = load_strategy(&inst, strat_path)?;
    let report: RiskReport = match strat.side {
        Side::Seller => seller_risk(&inst, &strat)?,
        Side::Buyer => buyer_risk(&inst, &strat)?,
    };
    match ctx.report.as_deref() {
        Some(path) if path != "json" => {
            println!("{}", pretty(&report));
            ctx.emit(&report)?;
        }
        _ => println!("{}", pretty(&report)),
    }
    Ok(true)
}

#[derive(Serialize)]
struct MinRiskReport {
    budget: Rat,
    risk: Rat,
    /// The search is over a finite grid, so the true infimum may be lower.
    upper_bound: bool,
    candidates: u64,
    report: RiskReport,
    strategy: StrategyFile,
}

fn risk_min(
    ctx: &Ctx,
    path: &Path,
    side: Side,
    budget: &str,
    step: &str,
    radius: &str,
) -> CliResult<bool> {
    let inst = ctx.load(path)?;
    let budget = scalar_arg("budget", budget)?;
    let grid = GridSpec {
        step: scalar_arg("grid-step", step)?,
        radius: scalar_arg("grid-radius", radius)?,
    };
    let found = min_risk_bruteforce(&inst, side, &budget, &grid)?;
    let report = MinRiskReport {
        budget: Rat(budget.clone()),
        risk: found.report.risk.clone(),
        upper_bound: true,
        candidates: found.candidates,
        strategy: StrategyFile::from_strategy(&inst, &found.strategy),
        report: found.report,
    };
    if ctx.text() {
        println!(
            "{side} shortfall risk at budget {} <= {} ({} candidates, stopping region {})",
            ctx.num(&budget),
            ctx.num(&report.risk.0),
            report.candidates,
            braces(&report.strategy.stop_nodes)
        );
    }
    ctx.emit(&report)?;
    Ok(true)
}

fn run(cli: Cli) -> CliResult<bool> {
    let ctx = Ctx {
        decimals: cli.decimals,
        report: cli.report,
        lenient: cli.lenient,
        seed: cli.seed,
        jobs: cli.jobs,
    };
    match cli.command {
        Command::Price {
            instance,
            side,
            per_sigma,
            emit_surfaces,
        } => price(&ctx, &instance, side, per_sigma, emit_surfaces.as_deref()),
        Command::Strategy {
            instance,
            side,
            start,
            out,
        } => strategy(
            &ctx,
            &instance,
            side.into(),
            start.as_deref(),
            out.as_deref(),
        ),
        Command::Verify { instance, strategy } => verify(&ctx, &instance, &strategy),
        Command::Oracle {
            instance,
            max_horizon,
            samples,
        } => oracle(&ctx, &instance, max_horizon, samples),
        Command::Risk { instance, strategy } => risk(&ctx, &instance, &strategy),
        Command::RiskMin {
            instance,
            side,
            budget,
            grid_step,
            grid_radius,
        } => risk_min(
            &ctx,
            &instance,
            side.into(),
            &budget,
            &grid_step,
            &grid_radius,
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
