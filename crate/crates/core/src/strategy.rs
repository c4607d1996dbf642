//! Forward construction of superhedging strategies from the value functions
//! and an independent verifier that only uses liquidation arithmetic.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{Instance, NodeId, Portfolio};
use crate::polyhedral::{epi_decompose, Ext};
use crate::pricing::Surfaces;
use crate::scalar::{format_scalar, Rat, Scalar};
use crate::stopping::PureStoppingTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Seller,
    Buyer,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Seller => "seller",
            Side::Buyer => "buyer",
        })
    }
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "seller" => Ok(Side::Seller),
            "buyer" => Ok(Side::Buyer),
            other => Err(Error::Strategy(format!("unknown side `{other}`"))),
        }
    }
}

/// Portfolio `(α_t, β_t)` held on arrival at each node. Predictability means
/// siblings hold the same portfolio, chosen at their common parent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrategyProcess {
    positions: Vec<Portfolio>,
}

impl StrategyProcess {
    pub fn new(positions: Vec<Portfolio>) -> Self {
        Self { positions }
    }

    pub fn at(&self, node: NodeId) -> &Portfolio {
        &self.positions[node]
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Portfolio carried from `node` into its children (if it has any).
    pub fn chosen_at(&self, inst: &Instance, node: NodeId) -> Option<&Portfolio> {
        inst.tree
            .children(node)
            .first()
            .map(|&c| &self.positions[c])
    }

    pub fn is_predictable(&self, inst: &Instance) -> bool {
        (0..inst.tree.len()).all(|n| {
            let kids = inst.tree.children(n);
            kids.iter()
                .all(|&c| self.positions[c] == self.positions[kids[0]])
        })
    }

    /// `θ_μ(position(μ) - position(child)) >= 0` at every non-leaf node.
    pub fn is_self_financing(&self, inst: &Instance) -> bool {
        (0..inst.tree.len()).all(|n| {
            inst.tree.children(n).iter().all(|&c| {
                !inst
                    .liquidation_value(n, &self.positions[n].sub(&self.positions[c]))
                    .is_negative()
            })
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HedgeStrategy {
    pub side: Side,
    /// Cancellation time for the seller, exercise time for the buyer.
    pub stop: PureStoppingTime,
    pub positions: StrategyProcess,
    /// Seller: setup cost `-θ_0(-α_0, -β_0)`. Buyer: loan `θ_0(-α_0, -β_0)`.
    pub initial_budget: Scalar,
}

impl HedgeStrategy {
    pub fn budget_for(inst: &Instance, side: Side, start: &Portfolio) -> Scalar {
        let cost = inst.setup_cost(start);
        match side {
            Side::Seller => cost,
            Side::Buyer => -cost,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    /// `t < σ_t`: still hedging toward the game value.
    Active,
    /// The stopping time fires here.
    Stopped,
    /// Past the stopping time; the portfolio is frozen.
    Frozen,
}

/// Seller strategy from `(α_0, β_0) = start`. Requires `start ∈ epi(z_0)`.
pub fn build_seller_strategy(
    inst: &Instance,
    seller: &Surfaces,
    start: &Portfolio,
) -> Result<HedgeStrategy> {
    build(inst, seller, start, Side::Seller)
}

/// Buyer strategy from `(α_0, β_0) = start`. Requires `start ∈ epi(u_0)`.
pub fn build_buyer_strategy(
    inst: &Instance,
    buyer: &Surfaces,
    start: &Portfolio,
) -> Result<HedgeStrategy> {
    build(inst, buyer, start, Side::Buyer)
}

fn build(inst: &Instance, surf: &Surfaces, start: &Portfolio, side: Side) -> Result<HedgeStrategy> {
    let tree = &inst.tree;
    // The exit test: epi(q^a) for the seller, epi(r^b) for the buyer.
    let exit_fn = |n: NodeId| match side {
        Side::Seller => inst.q_a(n),
        Side::Buyer => inst.r_b(n),
    };
    let root = tree.root();
    let root_value = surf.value.at(root);
    if !root_value.epi_contains(&start.gamma, &start.delta) {
        let required = match root_value.eval(&start.delta) {
            Ext::Finite(v) => format_scalar(&v),
            Ext::NegInf => "-inf".into(),
        };
        return Err(Error::OutsideEpigraph {
            x: format_scalar(&start.gamma),
            y: format_scalar(&start.delta),
            required,
        });
    }

    let broken = |n: NodeId, what: &str| Error::Invariant {
        node: tree.label(n).to_string(),
        what: what.to_string(),
    };
    let classify = |n: NodeId, p: &Portfolio| -> Result<Phase> {
        if !surf.value.at(n).epi_contains(&p.gamma, &p.delta) {
            return Err(broken(
                n,
                "portfolio left the epigraph of the value function",
            ));
        }
        let exits = exit_fn(n).epi_contains(&p.gamma, &p.delta);
        if tree.is_leaf(n) {
            if !exits {
                return Err(broken(n, "terminal portfolio does not cover the payoff"));
            }
            return Ok(Phase::Stopped);
        }
        Ok(if exits { Phase::Stopped } else { Phase::Active })
    };

    let n = tree.len();
    let mut positions = vec![start.clone(); n];
    let mut phase = vec![Phase::Frozen; n];
    phase[root] = classify(root, start)?;

    for t in 0..tree.horizon() {
        for &mu in tree.at_date(t) {
            let held = positions[mu].clone();
            let (next, child_phase_known) = match phase[mu] {
                Phase::Active => {
                    let band = inst.band(mu);
                    let cont = surf.continuation.at(mu);
                    let u = epi_decompose(&band, cont, &held.gamma, &held.delta)?;
                    let next = Portfolio::new(&held.gamma - band.h(&u), &held.delta - &u);
                    if !cont.epi_contains(&next.gamma, &next.delta) {
                        return Err(broken(
                            mu,
                            "rebalanced portfolio misses the continuation epigraph",
                        ));
                    }
                    (next, false)
                }
                Phase::Stopped | Phase::Frozen => (held, true),
            };
            for &c in tree.children(mu) {
                positions[c] = next.clone();
                phase[c] = if child_phase_known {
                    Phase::Frozen
                } else {
                    classify(c, &next)?
                };
            }
        }
    }

    let stops: Vec<NodeId> = (0..n).filter(|&i| phase[i] == Phase::Stopped).collect();
    let stop = PureStoppingTime::from_stop_nodes(tree, &stops)?;
    Ok(HedgeStrategy {
        side,
        stop,
        initial_budget: HedgeStrategy::budget_for(inst, side, start),
        positions: StrategyProcess::new(positions),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Predictability,
    SelfFinancing,
    Superhedging,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HedgeViolation {
    pub check: Check,
    pub node: String,
    pub date: usize,
    /// Opponent's stopping date for superhedging failures.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub opponent_date: Option<usize>,
    pub slack: Rat,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub side: Side,
    pub passed: bool,
    pub initial_budget: Rat,
    pub violations: Vec<HedgeViolation>,
}

impl VerifyReport {
    pub fn first_violation(&self) -> Option<&HedgeViolation> {
        self.violations.first()
    }
}

/// Checks predictability, self-financing at every node and the superhedging
/// inequality against every pure opponent date along every path. Uses only
/// liquidation values, never the value functions.
pub fn verify_superhedge(inst: &Instance, strat: &HedgeStrategy) -> VerifyReport {
    let tree = &inst.tree;
    let pos = &strat.positions;
    let mut violations = Vec::new();

    for mu in 0..tree.len() {
        let kids = tree.children(mu);
        if let Some(&first) = kids.first() {
            for &c in &kids[1..] {
                if pos.at(c) != pos.at(first) {
                    violations.push(HedgeViolation {
                        check: Check::Predictability,
                        node: tree.label(c).to_string(),
                        date: tree.date(c),
                        opponent_date: None,
                        slack: Rat(Scalar::from_integer(0.into())),
                    });
                }
            }
            for &c in kids {
                let slack = inst.liquidation_value(mu, &pos.at(mu).sub(pos.at(c)));
                if slack.is_negative() {
                    violations.push(HedgeViolation {
                        check: Check::SelfFinancing,
                        node: tree.label(mu).to_string(),
                        date: tree.date(mu),
                        opponent_date: None,
                        slack: Rat(slack),
                    });
                    break;
                }
            }
        }
    }

    let horizon = tree.horizon();
    let mut seen = BTreeSet::new();
    for &leaf in tree.leaves() {
        let own = strat.stop.date_on_leaf(tree, leaf);
        for other in 0..=horizon {
            let node = tree.ancestor_at(leaf, own.min(other));
            if !seen.insert((node, other)) {
                continue;
            }
            let slack = match strat.side {
                // θ_{σ∧t}(α - Q_{σ,t})
                Side::Seller => {
                    let q = inst.payoff(own, other, node);
                    inst.liquidation_value(node, &pos.at(node).sub(&q))
                }
                // θ_{s∧τ}(α + Q_{s,τ})
                Side::Buyer => {
                    let q = inst.payoff(other, own, node);
                    inst.liquidation_value(node, &pos.at(node).add(&q))
                }
            };
            if slack.is_negative() {
                violations.push(HedgeViolation {
                    check: Check::Superhedging,
                    node: tree.label(node).to_string(),
                    date: tree.date(node),
                    opponent_date: Some(other),
                    slack: Rat(slack),
                });
            }
        }
    }

    VerifyReport {
        side: strat.side,
        passed: violations.is_empty(),
        initial_budget: Rat(strat.initial_budget.clone()),
        violations,
    }
}

/// Strategy file: per-node `[cash, shares]` pairs and the stopping region.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StrategyFile {
    pub side: Side,
    pub initial_budget: Rat,
    pub stop_nodes: Vec<String>,
    pub positions: BTreeMap<String, (Rat, Rat)>,
}

impl StrategyFile {
    pub fn from_strategy(inst: &Instance, strat: &HedgeStrategy) -> Self {
        let tree = &inst.tree;
        Self {
            side: strat.side,
            initial_budget: Rat(strat.initial_budget.clone()),
            stop_nodes: strat.stop.labels(tree),
            positions: (0..tree.len())
                .map(|n| {
                    let p = strat.positions.at(n);
                    (
                        tree.label(n).to_string(),
                        (Rat(p.gamma.clone()), Rat(p.delta.clone())),
                    )
                })
                .collect(),
        }
    }

    pub fn into_strategy(self, inst: &Instance) -> Result<HedgeStrategy> {
        let tree = &inst.tree;
        let stop = PureStoppingTime::from_labels(tree, &self.stop_nodes)?;
        for key in self.positions.keys() {
            if tree.id_of(key).is_none() {
                return Err(Error::Strategy(format!(
                    "position for unknown node `{key}`"
                )));
            }
        }
        let positions = tree
            .nodes()
            .iter()
            .map(|n| {
                self.positions
                    .get(&n.label)
                    .map(|(g, d)| Portfolio::new(g.0.clone(), d.0.clone()))
                    .ok_or_else(|| Error::Strategy(format!("no position for node `{}`", n.label)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(HedgeStrategy {
            side: self.side,
            stop,
            positions: StrategyProcess::new(positions),
            initial_budget: self.initial_budget.0,
        })
    }
}

pub fn strategy_to_json(inst: &Instance, strat: &HedgeStrategy) -> String {
    serde_json::to_string_pretty(&StrategyFile::from_strategy(inst, strat)).expect("serializable")
}

pub fn strategy_from_json(inst: &Instance, text: &str) -> Result<HedgeStrategy> {
    let file: StrategyFile = serde_json::from_str(text)?;
    file.into_strategy(inst)
}

/// Starting portfolio from an explicit budget: all cash, no shares.
pub fn cash_start(side: Side, budget: &Scalar) -> Portfolio {
    match side {
        Side::Seller => Portfolio::cash(budget.clone()),
        Side::Buyer => Portfolio::cash(-budget.clone()),
    }
}
