use gamehedge::market::{
    canon0, canon1, instance_from_json, instance_to_json, validate_instance, Instance,
};
use gamehedge::pricing::{
    ask_price, bid_price, buyer_value_surfaces, seller_value_surfaces, Surfaces,
};
use gamehedge::random::random_instance;
use gamehedge::scalar::{format_scalar, parse_scalar, to_decimal, to_f64, Scalar};
use gamehedge::strategy::{
    build_buyer_strategy, build_seller_strategy, verify_superhedge, StrategyFile,
};
use gamehedge::{Ext, PolyFn, Portfolio, Side};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error(transparent)]
    Core(#[from] gamehedge::Error),
    #[error("{0}")]
    Input(String),
}

pub type DemoResult<T> = Result<T, DemoError>;

fn load(text: &str) -> DemoResult<Instance> {
    let inst = instance_from_json(text)?;
    let violations = validate_instance(&inst);
    if let Some(first) = violations.first() {
        return Err(DemoError::Input(format!("invalid instance: {first}")));
    }
    Ok(inst)
}

fn side_of(text: &str) -> DemoResult<Side> {
    text.parse()
        .map_err(|_| DemoError::Input(format!("unknown side `{text}`")))
}

fn scalar(name: &str, text: &str) -> DemoResult<Scalar> {
    parse_scalar(text.trim()).map_err(|e| DemoError::Input(format!("{name}: {e}")))
}

fn surfaces(inst: &Instance, side: Side) -> DemoResult<Surfaces> {
    Ok(match side {
        Side::Seller => seller_value_surfaces(inst)?,
        Side::Buyer => buyer_value_surfaces(inst)?,
    })
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("demo types serialize")
}

/// `canon-0`, `canon-1`, or `random-T-B` (horizon T, branching B) from `seed`.
pub fn sample_instance(name: &str, seed: u64) -> DemoResult<String> {
    let inst = match name {
        "canon-0" => canon0(),
        "canon-1" => canon1(),
        _ => {
            let shape: Vec<usize> = name
                .strip_prefix("random-")
                .map(|rest| rest.split('-').filter_map(|p| p.parse().ok()).collect())
                .unwrap_or_default();
            match shape[..] {
                [t @ 1..=3, b @ 2..=3] => {
                    random_instance(t, b, &mut ChaCha8Rng::seed_from_u64(seed))
                }
                _ => return Err(DemoError::Input(format!("unknown sample `{name}`"))),
            }
        }
    };
    Ok(instance_to_json(&inst))
}

#[derive(Serialize)]
struct Number {
    exact: String,
    approx: String,
}

impl Number {
    fn new(x: &Scalar, decimals: usize) -> Self {
        Self {
            exact: format_scalar(x),
            approx: to_decimal(x, decimals),
        }
    }
}

#[derive(Serialize)]
struct NodeInfo {
    id: String,
    date: usize,
    bid: String,
    ask: String,
}

#[derive(Serialize)]
struct PriceView {
    ask: Number,
    bid: Number,
    nodes: Vec<NodeInfo>,
}

/// Ask and bid prices plus the node list for the plot selector.
pub fn price(instance: &str, decimals: usize) -> DemoResult<String> {
    let inst = load(instance)?;
    let ask = ask_price(&seller_value_surfaces(&inst)?);
    let bid = bid_price(&buyer_value_surfaces(&inst)?);
    let nodes = (0..inst.tree.len())
        .map(|id| NodeInfo {
            id: inst.tree.label(id).to_string(),
            date: inst.tree.date(id),
            bid: format_scalar(&inst.bid[id]),
            ask: format_scalar(&inst.ask[id]),
        })
        .collect();
    Ok(json(&PriceView {
        ask: Number::new(&ask, decimals),
        bid: Number::new(&bid, decimals),
        nodes,
    }))
}

#[derive(Serialize)]
struct Curve {
    name: &'static str,
    /// `None` where the function is `-inf`.
    points: Vec<(f64, Option<f64>)>,
    breakpoints: Vec<f64>,
}

#[derive(Serialize)]
struct PlotView {
    side: Side,
    node: String,
    curves: Vec<Curve>,
}

fn curve(name: &'static str, f: &PolyFn, ys: &[Scalar]) -> Curve {
    let points = ys
        .iter()
        .map(|y| {
            let v = match f.eval(y) {
                Ext::Finite(v) => Some(to_f64(&v)),
                Ext::NegInf => None,
            };
            (to_f64(y), v)
        })
        .collect();
    let breakpoints = f
        .as_finite()
        .map(|p| p.breakpoints().iter().map(to_f64).collect())
        .unwrap_or_default();
    Curve {
        name,
        points,
        breakpoints,
    }
}

/// Samples the value, rebalanced and continuation functions of one side at
/// one node on `points` evenly spaced share positions in `[lo, hi]`.
pub fn plot(
    instance: &str,
    side: &str,
    node: &str,
    lo: f64,
    hi: f64,
    points: usize,
) -> DemoResult<String> {
    let inst = load(instance)?;
    let side = side_of(side)?;
    let id = inst
        .tree
        .id_of(node)
        .ok_or_else(|| DemoError::Input(format!("unknown node `{node}`")))?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) || !(2..=2000).contains(&points) {
        return Err(DemoError::Input("need lo < hi and 2..=2000 points".into()));
    }
    let to_exact = |x: f64| Scalar::from_float(x).expect("finite");
    let (lo, hi) = (to_exact(lo), to_exact(hi));
    let n = Scalar::from_integer((points - 1).into());
    let ys: Vec<Scalar> = (0..points)
        .map(|i| &lo + (&hi - &lo) * Scalar::from_integer(i.into()) / &n)
        .collect();

    let s = surfaces(&inst, side)?;
    let mut curves = vec![curve("value", s.value.at(id), &ys)];
    if let Some(f) = s.rebalanced.get(id) {
        curves.push(curve("rebalanced", f, &ys));
    }
    if let Some(f) = s.continuation.get(id) {
        curves.push(curve("continuation", f, &ys));
    }
    Ok(json(&PlotView {
        side,
        node: node.to_string(),
        curves,
    }))
}

#[derive(Serialize)]
struct HedgeView {
    passed: bool,
    strategy: StrategyFile,
    violations: usize,
}

/// Builds the hedge for `side` from the given start and verifies it.
pub fn hedge(instance: &str, side: &str, cash: &str, shares: &str) -> DemoResult<String> {
    let inst = load(instance)?;
    let side = side_of(side)?;
    let start = Portfolio::new(scalar("cash", cash)?, scalar("shares", shares)?);
    let s = surfaces(&inst, side)?;
    let strat = match side {
        Side::Seller => build_seller_strategy(&inst, &s, &start)?,
        Side::Buyer => build_buyer_strategy(&inst, &s, &start)?,
    };
    let report = verify_superhedge(&inst, &strat);
    Ok(json(&HedgeView {
        passed: report.passed,
        strategy: StrategyFile::from_strategy(&inst, &strat),
        violations: report.violations.len(),
    }))
}
