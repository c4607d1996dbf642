//! Shortfall risk of partial hedges: the worst expected shortfall over the
//! opponent's stopping times, and a brute-force search for the least risk
//! attainable on a small budget.

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::{Instance, NodeId, Portfolio};
use crate::pricing::{buyer_value_surfaces, seller_value_surfaces};
use crate::scalar::{neg_part, Rat, Scalar};
use crate::stopping::{enumerate_stopping_times, PureStoppingTime};
use crate::strategy::{
    build_buyer_strategy, build_seller_strategy, HedgeStrategy, Side, StrategyProcess,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Contribution {
    pub node: String,
    pub shortfall: Rat,
    /// Shortfall times the probability of the node.
    pub weighted: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RiskReport {
    pub side: Side,
    pub risk: Rat,
    /// Stopping region of a worst-case opponent stopping time.
    pub worst_opponent: Vec<String>,
    pub contributions: Vec<Contribution>,
}

/// Shortfall the hedger faces at `node` if the opponent stops now, and if
/// the opponent waits past the hedger's own stop (`None` when waiting
/// changes nothing).
fn settlement(inst: &Instance, strat: &HedgeStrategy, node: NodeId) -> (Scalar, Option<Scalar>) {
    let tree = &inst.tree;
    let pos = strat.positions.at(node);
    let short = |q: Portfolio| neg_part(&inst.liquidation_value(node, &q));
    let stops = strat.stop.stops_at(node);
    match strat.side {
        Side::Seller => {
            let now = short(pos.sub(&inst.y(node)));
            let later = (stops && !tree.is_leaf(node)).then(|| short(pos.sub(&inst.x(node))));
            (now, later)
        }
        Side::Buyer => {
            let now = if stops {
                short(pos.add(&inst.y(node)))
            } else {
                short(pos.add(&inst.x(node)))
            };
            (now, None)
        }
    }
}

/// Opponent's optimal stopping of the shortfall, by backward induction.
pub fn risk(inst: &Instance, strat: &HedgeStrategy) -> RiskReport {
    let tree = &inst.tree;
    let n = tree.len();
    // value[μ] = conditional worst expected shortfall given the game is
    // still running on arrival at μ.
    let mut value = vec![Scalar::zero(); n];
    for id in (0..n).rev() {
        if !strat.stop.alive_at(tree, id) {
            continue;
        }
        let (now, later) = settlement(inst, strat, id);
        let wait = if strat.stop.stops_at(id) {
            later
        } else {
            Some(
                tree.children(id)
                    .iter()
                    .map(|&c| tree.transition(c) * &value[c])
                    .sum(),
            )
        };
        value[id] = match wait {
            Some(w) if w > now => w,
            _ => now,
        };
    }

    let mut worst = Vec::new();
    let mut contributions = Vec::new();
    let mut stack = vec![tree.root()];
    while let Some(id) = stack.pop() {
        let (now, later) = settlement(inst, strat, id);
        let stop_now = value[id] == now;
        let record = |amount: &Scalar, out: &mut Vec<Contribution>| {
            if amount.is_positive() {
                out.push(Contribution {
                    node: tree.label(id).to_string(),
                    shortfall: Rat(amount.clone()),
                    weighted: Rat(&tree.node(id).weight * amount),
                });
            }
        };
        if stop_now {
            worst.push(id);
            record(&now, &mut contributions);
        } else if strat.stop.stops_at(id) {
            worst.extend_from_slice(tree.children(id));
            record(
                &later.expect("waiting is only preferred when possible"),
                &mut contributions,
            );
        } else {
            stack.extend(tree.children(id).iter().rev());
        }
    }
    worst.sort_unstable();

    RiskReport {
        side: strat.side,
        risk: Rat(value[tree.root()].clone()),
        worst_opponent: worst
            .into_iter()
            .map(|i| tree.label(i).to_string())
            .collect(),
        contributions,
    }
}

/// Expected shortfall against one opponent stopping time.
pub fn risk_against(inst: &Instance, strat: &HedgeStrategy, opponent: &PureStoppingTime) -> Scalar {
    let tree = &inst.tree;
    tree.leaves()
        .iter()
        .map(|&leaf| {
            let own = strat.stop.date_on_leaf(tree, leaf);
            let other = opponent.date_on_leaf(tree, leaf);
            let node = tree.ancestor_at(leaf, own.min(other));
            let pos = strat.positions.at(node);
            let net = match strat.side {
                Side::Seller => pos.sub(&inst.payoff(own, other, node)),
                Side::Buyer => pos.add(&inst.payoff(other, own, node)),
            };
            &tree.node(leaf).weight * neg_part(&inst.liquidation_value(node, &net))
        })
        .sum()
}

/// The same supremum by listing every opponent stopping time.
pub fn risk_by_enumeration(inst: &Instance, strat: &HedgeStrategy, limit: usize) -> Result<Scalar> {
    Ok(enumerate_stopping_times(&inst.tree, limit)?
        .iter()
        .map(|tau| risk_against(inst, strat, tau))
        .max()
        .expect("at least one stopping time"))
}

pub fn seller_risk(inst: &Instance, strat: &HedgeStrategy) -> Result<RiskReport> {
    side_checked(inst, strat, Side::Seller)
}

pub fn buyer_risk(inst: &Instance, strat: &HedgeStrategy) -> Result<RiskReport> {
    side_checked(inst, strat, Side::Buyer)
}

fn side_checked(inst: &Instance, strat: &HedgeStrategy, side: Side) -> Result<RiskReport> {
    if strat.side != side {
        return Err(Error::Strategy(format!(
            "expected a {side} strategy, got {}",
            strat.side
        )));
    }
    if strat.positions.len() != inst.tree.len() {
        return Err(Error::Strategy(
            "strategy sized for a different tree".into(),
        ));
    }
    if !strat.positions.is_predictable(inst) || !strat.positions.is_self_financing(inst) {
        return Err(Error::Strategy(
            "strategy is not predictable and self-financing".into(),
        ));
    }
    Ok(risk(inst, strat))
}

#[derive(Clone, Debug)]
pub struct GridSpec {
    pub step: Scalar,
    pub radius: Scalar,
}

/// Cap on (stopping time, share grid) combinations tried.
pub const MAX_GRID_CANDIDATES: u128 = 500_000;

#[derive(Clone, Debug)]
pub struct MinRiskResult {
    pub report: RiskReport,
    pub strategy: HedgeStrategy,
    pub candidates: u64,
}

/// Least risk over own stopping times and share holdings on a grid, with
/// cash following the cheapest self-financing path from `budget`. Also
/// tries the constructed superhedge when the budget allows. The result is
/// an upper bound on the true infimum.
pub fn min_risk_bruteforce(
    inst: &Instance,
    side: Side,
    budget: &Scalar,
    grid: &GridSpec,
) -> Result<MinRiskResult> {
    let tree = &inst.tree;
    if tree.horizon() > 2 {
        return Err(Error::TooLarge(format!(
            "brute-force risk search needs horizon <= 2, got {}",
            tree.horizon()
        )));
    }
    if !grid.step.is_positive() || grid.radius.is_negative() {
        return Err(Error::Argument(
            "grid step must be positive and radius nonnegative".into(),
        ));
    }
    let levels: Vec<Scalar> = {
        let mut v = vec![-grid.radius.clone()];
        while v.last().expect("nonempty") + &grid.step <= grid.radius {
            let next = v.last().expect("nonempty") + &grid.step;
            v.push(next);
        }
        v
    };

    let stops = enumerate_stopping_times(tree, 10_000)?;
    let total: u128 = stops
        .iter()
        .map(|s| (levels.len() as u128).saturating_pow(decision_nodes(inst, s).len() as u32 + 1))
        .sum();
    if total > MAX_GRID_CANDIDATES {
        return Err(Error::TooLarge(format!(
            "{total} grid candidates exceed the limit of {MAX_GRID_CANDIDATES}"
        )));
    }

    let mut best: Option<(Scalar, HedgeStrategy)> = None;
    let mut candidates = 0u64;
    let mut consider = |strat: HedgeStrategy, best: &mut Option<(Scalar, HedgeStrategy)>| {
        candidates += 1;
        let r = risk(inst, &strat).risk.0;
        if best.as_ref().is_none_or(|(b, _)| r < *b) {
            *best = Some((r, strat));
        }
    };

    let start = match side {
        Side::Seller => Portfolio::cash(budget.clone()),
        Side::Buyer => Portfolio::cash(-budget.clone()),
    };
    let built = match side {
        Side::Seller => {
            seller_value_surfaces(inst).and_then(|z| build_seller_strategy(inst, &z, &start))
        }
        Side::Buyer => {
            buyer_value_surfaces(inst).and_then(|u| build_buyer_strategy(inst, &u, &start))
        }
    };
    if let Ok(s) = built {
        consider(s, &mut best);
    }

    for own in &stops {
        let decisions = decision_nodes(inst, own);
        let slots = decisions.len() + 1;
        let mut idx = vec![0usize; slots];
        loop {
            let shares: Vec<&Scalar> = idx.iter().map(|&i| &levels[i]).collect();
            consider(
                grid_strategy(inst, side, budget, own, &decisions, &shares),
                &mut best,
            );
            // Odometer over grid indices.
            let mut k = 0;
            while k < slots {
                idx[k] += 1;
                if idx[k] < levels.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == slots {
                break;
            }
        }
    }

    let (_, strategy) = best.expect("at least one candidate");
    Ok(MinRiskResult {
        report: risk(inst, &strategy),
        strategy,
        candidates,
    })
}

/// Nodes at which a new share holding is chosen: non-leaves where the own
/// stopping time has not yet fired.
fn decision_nodes(inst: &Instance, own: &PureStoppingTime) -> Vec<NodeId> {
    let tree = &inst.tree;
    (0..tree.len())
        .filter(|&n| !tree.is_leaf(n) && own.fired_by(tree, n).is_none())
        .collect()
}

/// `shares[0]` is the initial holding; `shares[i + 1]` the holding chosen
/// at `decisions[i]`. Cash starts at the budget less the purchase cost and
/// then absorbs each trade at the node's prices.
fn grid_strategy(
    inst: &Instance,
    side: Side,
    budget: &Scalar,
    own: &PureStoppingTime,
    decisions: &[NodeId],
    shares: &[&Scalar],
) -> HedgeStrategy {
    let tree = &inst.tree;
    let root = tree.root();
    let beta0 = shares[0].clone();
    let cash_budget = match side {
        Side::Seller => budget.clone(),
        Side::Buyer => -budget.clone(),
    };
    let buy_cost = std::cmp::max(&inst.ask[root] * &beta0, &inst.bid[root] * &beta0);
    let mut positions = vec![Portfolio::new(cash_budget - buy_cost, beta0); tree.len()];
    for id in 0..tree.len() {
        let here = positions[id].clone();
        let next = match decisions.iter().position(|&d| d == id) {
            Some(i) => {
                let target = shares[i + 1].clone();
                let sold = &here.delta - &target;
                Portfolio::new(&here.gamma - inst.band(id).h(&sold), target)
            }
            None => here,
        };
        for &c in tree.children(id) {
            positions[c] = next.clone();
        }
    }
    let initial_budget = HedgeStrategy::budget_for(inst, side, &positions[root]);
    HedgeStrategy {
        side,
        stop: own.clone(),
        positions: StrategyProcess::new(positions),
        initial_budget,
    }
}
