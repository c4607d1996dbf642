//! Finite event tree, bid/ask prices and game-option payoff processes.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyhedral::{PolyFn, SlopeBand};
use crate::scalar::{neg_part, one, pos_part, zero, Rat, Scalar};

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub label: String,
    pub date: usize,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// `P(μ)`: the sum of the leaf weights below this node.
    pub weight: Scalar,
}

/// Atoms of the filtration arranged as a tree. Node ids are assigned in date
/// order, so the root is always `0` and every parent precedes its children.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventTree {
    nodes: Vec<Node>,
    by_date: Vec<Vec<NodeId>>,
    index: HashMap<String, NodeId>,
}

/// One row of tree input: label, date, parent label, leaf weight.
#[derive(Clone, Debug)]
pub struct NodeSpec {
    pub label: String,
    pub date: usize,
    pub parent: Option<String>,
    pub weight: Option<Scalar>,
}

impl EventTree {
    /// Builds and structurally checks a tree. Leaf weights are taken as
    /// given; their positivity and normalization are reported by
    /// [`validate_instance`] instead.
    pub fn new(horizon: usize, specs: Vec<NodeSpec>) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Tree("horizon must be at least 1".into()));
        }
        let mut order: Vec<usize> = (0..specs.len()).collect();
        order.sort_by_key(|&i| specs[i].date);

        let mut index = HashMap::new();
        let mut nodes: Vec<Node> = Vec::with_capacity(specs.len());
        for &i in &order {
            let s = &specs[i];
            if s.date > horizon {
                return Err(Error::Tree(format!(
                    "node `{}` has date {} > horizon",
                    s.label, s.date
                )));
            }
            let parent = match (&s.parent, s.date) {
                (None, 0) => None,
                (Some(_), 0) => {
                    return Err(Error::Tree(format!(
                        "date-0 node `{}` cannot have a parent",
                        s.label
                    )))
                }
                (None, _) => return Err(Error::Tree(format!("node `{}` has no parent", s.label))),
                (Some(p), d) => {
                    let pid = *index.get(p).ok_or_else(|| {
                        Error::Tree(format!("unknown parent `{p}` of `{}`", s.label))
                    })?;
                    let pnode: &Node = &nodes[pid];
                    if pnode.date + 1 != d {
                        return Err(Error::Tree(format!(
                            "node `{}` at date {d} has parent `{p}` at date {}",
                            s.label, pnode.date
                        )));
                    }
                    Some(pid)
                }
            };
            let id = nodes.len();
            if index.insert(s.label.clone(), id).is_some() {
                return Err(Error::Tree(format!("duplicate node id `{}`", s.label)));
            }
            nodes.push(Node {
                label: s.label.clone(),
                date: s.date,
                parent,
                children: Vec::new(),
                weight: zero(),
            });
            if let Some(pid) = parent {
                nodes[pid].children.push(id);
            }
        }

        let roots = nodes.iter().filter(|n| n.date == 0).count();
        if roots != 1 {
            return Err(Error::Tree(format!(
                "expected exactly one root, found {roots}"
            )));
        }
        let mut by_date = vec![Vec::new(); horizon + 1];
        for (id, n) in nodes.iter().enumerate() {
            by_date[n.date].push(id);
            if n.date < horizon && n.children.is_empty() {
                return Err(Error::Tree(format!(
                    "node `{}` before the horizon has no children",
                    n.label
                )));
            }
        }

        let mut weights: HashMap<NodeId, Scalar> = HashMap::new();
        for &i in &order {
            let s = &specs[i];
            let id = index[&s.label];
            if s.date == horizon {
                let w = s.weight.clone().ok_or_else(|| {
                    Error::Tree(format!("leaf `{}` has no probability weight", s.label))
                })?;
                weights.insert(id, w);
            }
        }
        for id in (0..nodes.len()).rev() {
            let w = if nodes[id].date == horizon {
                weights[&id].clone()
            } else {
                nodes[id]
                    .children
                    .iter()
                    .map(|&c| nodes[c].weight.clone())
                    .sum()
            };
            nodes[id].weight = w;
        }
        Ok(Self {
            nodes,
            by_date,
            index,
        })
    }

    /// Recombining-free tree where every non-leaf node has `branching`
    /// children with equal leaf weights. Labels are paths like `"0"`,
    /// `"0.1"`, `"0.1.0"`.
    pub fn uniform(horizon: usize, branching: usize) -> Result<Self> {
        if branching == 0 {
            return Err(Error::Tree("branching must be positive".into()));
        }
        let leaves = branching.pow(horizon as u32) as i64;
        let mut specs = vec![NodeSpec {
            label: "0".into(),
            date: 0,
            parent: None,
            weight: None,
        }];
        let mut frontier = vec!["0".to_string()];
        for date in 1..=horizon {
            let mut next = Vec::new();
            for parent in &frontier {
                for b in 0..branching {
                    let label = format!("{parent}.{b}");
                    specs.push(NodeSpec {
                        label: label.clone(),
                        date,
                        parent: Some(parent.clone()),
                        weight: (date == horizon).then(|| crate::scalar::ratio(1, leaves)),
                    });
                    next.push(label);
                }
            }
            frontier = next;
        }
        Self::new(horizon, specs)
    }

    pub fn horizon(&self) -> usize {
        self.by_date.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn at_date(&self, t: usize) -> &[NodeId] {
        &self.by_date[t]
    }

    pub fn leaves(&self) -> &[NodeId] {
        &self.by_date[self.horizon()]
    }

    pub fn id_of(&self, label: &str) -> Option<NodeId> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.nodes[id].label
    }

    pub fn date(&self, id: NodeId) -> usize {
        self.nodes[id].date
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id].parent
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.nodes[id].date == self.horizon()
    }

    /// Root-to-node path, root first.
    pub fn path_to(&self, id: NodeId) -> Vec<NodeId> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// The ancestor of `id` at date `t <= date(id)` (the node itself at its own date).
    pub fn ancestor_at(&self, id: NodeId, t: usize) -> NodeId {
        let mut cur = id;
        while self.nodes[cur].date > t {
            cur = self.nodes[cur].parent.expect("non-root has parent");
        }
        cur
    }

    /// Leaves lying below `id`.
    pub fn leaves_below(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            if self.is_leaf(n) {
                out.push(n);
            } else {
                stack.extend(self.nodes[n].children.iter().rev());
            }
        }
        out.sort_unstable();
        out
    }

    /// Conditional probability `P(child | parent)` under the market measure.
    pub fn transition(&self, child: NodeId) -> Scalar {
        match self.nodes[child].parent {
            None => one(),
            Some(p) => &self.nodes[child].weight / &self.nodes[p].weight,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Portfolio {
    /// Cash (bond) position.
    pub gamma: Scalar,
    /// Shares of stock.
    pub delta: Scalar,
}

impl Portfolio {
    pub fn new(gamma: Scalar, delta: Scalar) -> Self {
        Self { gamma, delta }
    }

    pub fn cash(gamma: Scalar) -> Self {
        Self {
            gamma,
            delta: zero(),
        }
    }

    pub fn sub(&self, other: &Portfolio) -> Portfolio {
        Portfolio::new(&self.gamma - &other.gamma, &self.delta - &other.delta)
    }

    pub fn add(&self, other: &Portfolio) -> Portfolio {
        Portfolio::new(&self.gamma + &other.gamma, &self.delta + &other.delta)
    }

    pub fn neg(&self) -> Portfolio {
        Portfolio::new(-self.gamma.clone(), -self.delta.clone())
    }
}

impl fmt::Display for Portfolio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.gamma, self.delta)
    }
}

/// A market instance: tree, bid/ask processes and the two payoff processes
/// `X` (paid on seller cancellation) and `Y` (paid on buyer exercise), each a
/// cash leg and a share leg. All vectors are indexed by [`NodeId`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub tree: EventTree,
    pub bid: Vec<Scalar>,
    pub ask: Vec<Scalar>,
    pub x1: Vec<Scalar>,
    pub x2: Vec<Scalar>,
    pub y1: Vec<Scalar>,
    pub y2: Vec<Scalar>,
}

impl Instance {
    pub fn horizon(&self) -> usize {
        self.tree.horizon()
    }

    pub fn band(&self, node: NodeId) -> SlopeBand {
        SlopeBand::new(self.bid[node].clone(), self.ask[node].clone())
            .expect("validated instance has ask >= bid")
    }

    /// `θ(γ, δ) = γ + S^b δ^+ - S^a δ^-` at `node`.
    pub fn liquidation_value(&self, node: NodeId, p: &Portfolio) -> Scalar {
        &p.gamma + &self.bid[node] * pos_part(&p.delta) - &self.ask[node] * neg_part(&p.delta)
    }

    /// Cash needed at the root to assemble `p`: `-θ_0(-γ, -δ)`.
    pub fn setup_cost(&self, p: &Portfolio) -> Scalar {
        let root = self.tree.root();
        -self.liquidation_value(root, &p.neg())
    }

    pub fn x(&self, node: NodeId) -> Portfolio {
        Portfolio::new(self.x1[node].clone(), self.x2[node].clone())
    }

    pub fn y(&self, node: NodeId) -> Portfolio {
        Portfolio::new(self.y1[node].clone(), self.y2[node].clone())
    }

    fn shifted_h(&self, node: NodeId, cash: Scalar, shares: Scalar) -> PolyFn {
        PolyFn::h(&self.band(node)).translate(&shares, &cash)
    }

    /// `q^a(y) = X1 + h(y - X2)`.
    pub fn q_a(&self, node: NodeId) -> PolyFn {
        self.shifted_h(node, self.x1[node].clone(), self.x2[node].clone())
    }

    /// `r^a(y) = Y1 + h(y - Y2)`.
    pub fn r_a(&self, node: NodeId) -> PolyFn {
        self.shifted_h(node, self.y1[node].clone(), self.y2[node].clone())
    }

    /// `q^b(y) = -X1 + h(y + X2)`.
    pub fn q_b(&self, node: NodeId) -> PolyFn {
        self.shifted_h(node, -self.x1[node].clone(), -self.x2[node].clone())
    }

    /// `r^b(y) = -Y1 + h(y + Y2)`.
    pub fn r_b(&self, node: NodeId) -> PolyFn {
        self.shifted_h(node, -self.y1[node].clone(), -self.y2[node].clone())
    }

    /// Payment `Q_{s,t} = X_s 1{s<t} + Y_t 1{t<=s}`, read at `node ∈ Ω_{s∧t}`.
    pub fn payoff(&self, s: usize, t: usize, node: NodeId) -> Portfolio {
        debug_assert_eq!(self.tree.date(node), s.min(t));
        if s < t {
            self.x(node)
        } else {
            self.y(node)
        }
    }

    /// Seller target `G_{s,t}` at `node ∈ Ω_{s∧t}`.
    pub fn g_fn(&self, s: usize, t: usize, node: NodeId) -> PolyFn {
        debug_assert_eq!(self.tree.date(node), s.min(t));
        if s < t {
            self.q_a(node)
        } else {
            self.r_a(node)
        }
    }

    /// Buyer target `H_{s,t}` at `node ∈ Ω_{s∧t}`.
    pub fn h_fn(&self, s: usize, t: usize, node: NodeId) -> PolyFn {
        debug_assert_eq!(self.tree.date(node), s.min(t));
        if s < t {
            self.q_b(node)
        } else {
            self.r_b(node)
        }
    }

    /// The option seen from the buyer's side: `X' = -Y`, `Y' = -X`. Seller
    /// value functions of the result coincide with the buyer value functions
    /// of `self`.
    pub fn hat_transform(&self) -> Instance {
        let neg = |v: &[Scalar]| v.iter().map(|x| -x.clone()).collect::<Vec<_>>();
        Instance {
            tree: self.tree.clone(),
            bid: self.bid.clone(),
            ask: self.ask.clone(),
            x1: neg(&self.y1),
            x2: neg(&self.y2),
            y1: neg(&self.x1),
            y2: neg(&self.x2),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "constraint")]
pub enum ViolationKind {
    NonPositiveBid { bid: String },
    AskBelowBid { bid: String, ask: String },
    NegativePenalty { penalty: String },
    TerminalMismatch,
    NonPositiveLeafWeight { weight: String },
    WeightsDoNotSumToOne { total: String },
}

impl ViolationKind {
    /// Crossed quotes leave the transaction cost function undefined, so no
    /// computation can proceed; the other violations only void guarantees.
    pub fn is_fatal(&self) -> bool {
        matches!(self, ViolationKind::AskBelowBid { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub node: String,
    #[serde(flatten)]
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ViolationKind::NonPositiveBid { bid } => {
                write!(f, "node `{}`: bid {bid} is not positive", self.node)
            }
            ViolationKind::AskBelowBid { bid, ask } => {
                write!(f, "node `{}`: ask {ask} below bid {bid}", self.node)
            }
            ViolationKind::NegativePenalty { penalty } => {
                write!(
                    f,
                    "node `{}`: cancellation penalty {penalty} is negative",
                    self.node
                )
            }
            ViolationKind::TerminalMismatch => {
                write!(f, "node `{}`: X and Y differ at the horizon", self.node)
            }
            ViolationKind::NonPositiveLeafWeight { weight } => {
                write!(
                    f,
                    "node `{}`: leaf weight {weight} is not positive",
                    self.node
                )
            }
            ViolationKind::WeightsDoNotSumToOne { total } => {
                write!(f, "node `{}`: leaf weights sum to {total}", self.node)
            }
        }
    }
}

/// Every broken standing assumption, in node order. Empty means valid.
pub fn validate_instance(inst: &Instance) -> Vec<Violation> {
    let tree = &inst.tree;
    let mut out = Vec::new();
    let mut push = |node: NodeId, kind| {
        out.push(Violation {
            node: tree.label(node).to_string(),
            kind,
        })
    };
    for id in 0..tree.len() {
        let (bid, ask) = (&inst.bid[id], &inst.ask[id]);
        if !bid.is_positive() {
            push(
                id,
                ViolationKind::NonPositiveBid {
                    bid: bid.to_string(),
                },
            );
        }
        if ask < bid {
            push(
                id,
                ViolationKind::AskBelowBid {
                    bid: bid.to_string(),
                    ask: ask.to_string(),
                },
            );
        }
        if ask >= bid {
            let penalty = inst.liquidation_value(id, &inst.x(id).sub(&inst.y(id)));
            if penalty.is_negative() {
                push(
                    id,
                    ViolationKind::NegativePenalty {
                        penalty: penalty.to_string(),
                    },
                );
            }
        }
        if tree.is_leaf(id) {
            if inst.x1[id] != inst.y1[id] || inst.x2[id] != inst.y2[id] {
                push(id, ViolationKind::TerminalMismatch);
            }
            if !tree.node(id).weight.is_positive() {
                push(
                    id,
                    ViolationKind::NonPositiveLeafWeight {
                        weight: tree.node(id).weight.to_string(),
                    },
                );
            }
        }
    }
    let total = &tree.node(tree.root()).weight;
    if *total != one() {
        push(
            tree.root(),
            ViolationKind::WeightsDoNotSumToOne {
                total: total.to_string(),
            },
        );
    }
    out
}

/// Instance file layout. Per-node maps are keyed by node id; rationals are
/// `"p/q"` strings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    pub horizon: usize,
    pub nodes: Vec<NodeEntry>,
    pub bid: BTreeMap<String, Rat>,
    pub ask: BTreeMap<String, Rat>,
    #[serde(rename = "X1")]
    pub x1: BTreeMap<String, Rat>,
    #[serde(rename = "X2")]
    pub x2: BTreeMap<String, Rat>,
    #[serde(rename = "Y1")]
    pub y1: BTreeMap<String, Rat>,
    #[serde(rename = "Y2")]
    pub y2: BTreeMap<String, Rat>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NodeEntry {
    pub id: String,
    pub date: usize,
    pub parent: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prob_weight: Option<Rat>,
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<Instance> {
        let specs = self
            .nodes
            .iter()
            .map(|n| NodeSpec {
                label: n.id.clone(),
                date: n.date,
                parent: n.parent.clone(),
                weight: n.prob_weight.as_ref().map(|r| r.0.clone()),
            })
            .collect();
        let tree = EventTree::new(self.horizon, specs)?;
        let column = |name: &str, map: &BTreeMap<String, Rat>| -> Result<Vec<Scalar>> {
            for key in map.keys() {
                if tree.id_of(key).is_none() {
                    return Err(Error::Instance(format!(
                        "`{name}` names unknown node `{key}`"
                    )));
                }
            }
            tree.nodes()
                .iter()
                .map(|n| {
                    map.get(&n.label).map(|r| r.0.clone()).ok_or_else(|| {
                        Error::Instance(format!("`{name}` missing node `{}`", n.label))
                    })
                })
                .collect()
        };
        Ok(Instance {
            bid: column("bid", &self.bid)?,
            ask: column("ask", &self.ask)?,
            x1: column("X1", &self.x1)?,
            x2: column("X2", &self.x2)?,
            y1: column("Y1", &self.y1)?,
            y2: column("Y2", &self.y2)?,
            tree,
        })
    }

    pub fn from_instance(inst: &Instance) -> Self {
        let tree = &inst.tree;
        let column = |v: &[Scalar]| -> BTreeMap<String, Rat> {
            tree.nodes()
                .iter()
                .zip(v)
                .map(|(n, x)| (n.label.clone(), Rat(x.clone())))
                .collect()
        };
        let nodes = tree
            .nodes()
            .iter()
            .map(|n| NodeEntry {
                id: n.label.clone(),
                date: n.date,
                parent: n.parent.map(|p| tree.label(p).to_string()),
                prob_weight: (n.date == tree.horizon()).then(|| Rat(n.weight.clone())),
            })
            .collect();
        Self {
            horizon: tree.horizon(),
            nodes,
            bid: column(&inst.bid),
            ask: column(&inst.ask),
            x1: column(&inst.x1),
            x2: column(&inst.x2),
            y1: column(&inst.y1),
            y2: column(&inst.y2),
        }
    }
}

pub fn instance_from_json(text: &str) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_str(text)?;
    file.into_instance()
}

pub fn instance_to_json(inst: &Instance) -> String {
    serde_json::to_string_pretty(&InstanceFile::from_instance(inst)).expect("serializable")
}

/// Builder for single-stock instances on [`EventTree::uniform`] trees from
/// per-node closures.
pub fn instance_on_tree(
    tree: EventTree,
    mut prices: impl FnMut(&EventTree, NodeId) -> (Scalar, Scalar),
    mut payoffs: impl FnMut(&EventTree, NodeId) -> (Portfolio, Portfolio),
) -> Instance {
    let n = tree.len();
    let mut inst = Instance {
        bid: Vec::with_capacity(n),
        ask: Vec::with_capacity(n),
        x1: Vec::with_capacity(n),
        x2: Vec::with_capacity(n),
        y1: Vec::with_capacity(n),
        y2: Vec::with_capacity(n),
        tree: tree.clone(),
    };
    for id in 0..n {
        let (b, a) = prices(&tree, id);
        let (x, y) = payoffs(&tree, id);
        inst.bid.push(b);
        inst.ask.push(a);
        inst.x1.push(x.gamma);
        inst.x2.push(x.delta);
        inst.y1.push(y.gamma);
        inst.y2.push(y.delta);
    }
    inst
}

/// Shared shape of the two canonical one-period instances: root at 4, up
/// and down children, cash-only put struck at 5 with penalty 1 at the root.
fn canonical_one_period(up: (Scalar, Scalar), down: (Scalar, Scalar)) -> Instance {
    use crate::scalar::int;
    let specs = vec![
        NodeSpec {
            label: "0".into(),
            date: 0,
            parent: None,
            weight: None,
        },
        NodeSpec {
            label: "u".into(),
            date: 1,
            parent: Some("0".into()),
            weight: Some(crate::scalar::ratio(1, 2)),
        },
        NodeSpec {
            label: "d".into(),
            date: 1,
            parent: Some("0".into()),
            weight: Some(crate::scalar::ratio(1, 2)),
        },
    ];
    let tree = EventTree::new(1, specs).expect("static tree");
    let (u, d) = (tree.id_of("u").unwrap(), tree.id_of("d").unwrap());
    instance_on_tree(
        tree,
        |_, id| {
            if id == u {
                up.clone()
            } else if id == d {
                down.clone()
            } else {
                (int(4), int(4))
            }
        },
        |_, id| {
            let y = if id == u {
                zero()
            } else if id == d {
                int(3)
            } else {
                int(1)
            };
            let x = if id == 0 { int(2) } else { y.clone() };
            (Portfolio::cash(x), Portfolio::cash(y))
        },
    )
}

/// Frictionless one-period binomial put: `S_0 = 4`, `S_1 ∈ {8, 2}`.
pub fn canon0() -> Instance {
    use crate::scalar::int;
    canonical_one_period((int(8), int(8)), (int(2), int(2)))
}

/// The same put with spreads `(15/2, 17/2)` up and `(3/2, 5/2)` down.
pub fn canon1() -> Instance {
    use crate::scalar::ratio;
    canonical_one_period((ratio(15, 2), ratio(17, 2)), (ratio(3, 2), ratio(5, 2)))
}

impl Instance {
    /// True when neither payoff has a share leg.
    pub fn is_cash_only(&self) -> bool {
        self.x2.iter().chain(&self.y2).all(Zero::is_zero)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyhedral::Ext;
    use crate::scalar::{int, ratio};

    fn one_node_market(bid: Scalar, ask: Scalar) -> Instance {
        let tree = EventTree::uniform(1, 1).unwrap();
        instance_on_tree(
            tree,
            |_, _| (bid.clone(), ask.clone()),
            |_, _| (Portfolio::cash(zero()), Portfolio::cash(zero())),
        )
    }

    #[test]
    fn liquidation_examples() {
        let m = one_node_market(int(2), int(3));
        assert_eq!(
            m.liquidation_value(0, &Portfolio::new(int(1), int(2))),
            int(5)
        );
        assert_eq!(
            m.liquidation_value(0, &Portfolio::new(int(1), int(-2))),
            int(-5)
        );
        assert_eq!(m.liquidation_value(0, &Portfolio::cash(int(7))), int(7));
    }

    #[test]
    fn setup_cost_examples() {
        let m = one_node_market(int(2), int(3));
        assert_eq!(m.setup_cost(&Portfolio::new(int(1), int(2))), int(7));
        assert_eq!(m.setup_cost(&Portfolio::cash(int(4))), int(4));
        assert_eq!(m.setup_cost(&Portfolio::new(int(1), int(-2))), int(-3));
    }

    #[test]
    fn q_r_examples() {
        let tree = EventTree::uniform(1, 1).unwrap();
        let inst = instance_on_tree(
            tree,
            |_, _| (int(4), int(4)),
            |_, _| (Portfolio::cash(int(2)), Portfolio::cash(int(2))),
        );
        assert_eq!(inst.q_a(0), PolyFn::affine(int(-4), int(2)));

        let tree = EventTree::uniform(1, 1).unwrap();
        let inst = instance_on_tree(
            tree,
            |_, _| (ratio(3, 2), ratio(5, 2)),
            |_, _| (Portfolio::cash(int(1)), Portfolio::cash(int(1))),
        );
        let expected =
            PolyFn::affine(ratio(-5, 2), int(1)).max(&PolyFn::affine(ratio(-3, 2), int(1)));
        assert_eq!(inst.r_a(0), expected);
    }

    #[test]
    fn canonical_instances_are_valid() {
        assert!(validate_instance(&canon0()).is_empty());
        assert!(validate_instance(&canon1()).is_empty());
        let c = canon1();
        let u = c.tree.id_of("u").unwrap();
        assert_eq!(c.bid[u], ratio(15, 2));
        assert_eq!(c.y1[c.tree.id_of("d").unwrap()], int(3));
    }

    #[test]
    fn penalty_and_terminal_violations() {
        let mut c = canon1();
        c.x1[0] = int(0);
        let v = validate_instance(&c);
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0].kind, ViolationKind::NegativePenalty { .. }));
        assert_eq!(v[0].node, "0");

        let mut c = canon1();
        let d = c.tree.id_of("d").unwrap();
        c.x1[d] = int(4);
        let v = validate_instance(&c);
        assert!(v
            .iter()
            .any(|x| x.kind == ViolationKind::TerminalMismatch && x.node == "d"));
    }

    #[test]
    fn price_violations() {
        let mut c = canon1();
        c.bid[0] = int(0);
        c.ask[0] = int(0);
        assert!(validate_instance(&c)
            .iter()
            .any(|v| matches!(v.kind, ViolationKind::NonPositiveBid { .. })));
        let mut c = canon1();
        c.ask[0] = int(3);
        assert!(validate_instance(&c)
            .iter()
            .any(|v| matches!(v.kind, ViolationKind::AskBelowBid { .. }) && v.kind.is_fatal()));
    }

    #[test]
    fn g_and_h_branches() {
        let c = canon1();
        assert_eq!(c.g_fn(0, 0, 0), c.r_a(0));
        assert_eq!(c.g_fn(0, 1, 0), c.q_a(0));
        let u = c.tree.id_of("u").unwrap();
        assert_eq!(c.g_fn(1, 1, u), c.r_a(u));
        assert_eq!(c.r_a(u), c.q_a(u));
        assert_eq!(c.h_fn(0, 1, 0), c.q_b(0));
        assert_eq!(c.h_fn(1, 0, 0), c.r_b(0));
        assert_eq!(c.payoff(0, 1, 0), c.x(0));
        assert_eq!(c.payoff(1, 0, 0), c.y(0));
        assert_eq!(c.payoff(1, 1, u), c.x(u));
    }

    #[test]
    fn value_at_zero_is_liquidation_of_payoff() {
        let c = canon1();
        for id in 0..c.tree.len() {
            let tx = c.liquidation_value(id, &c.x(id));
            let ty = c.liquidation_value(id, &c.y(id));
            assert_eq!(c.q_a(id).eval(&zero()), Ext::Finite(tx.clone()));
            assert_eq!(c.q_b(id).eval(&zero()), Ext::Finite(-tx));
            assert_eq!(c.r_a(id).eval(&zero()), Ext::Finite(ty.clone()));
            assert_eq!(c.r_b(id).eval(&zero()), Ext::Finite(-ty));
        }
    }

    #[test]
    fn tree_errors() {
        let spec = |label: &str, date, parent: Option<&str>, w: Option<Scalar>| NodeSpec {
            label: label.into(),
            date,
            parent: parent.map(Into::into),
            weight: w,
        };
        assert!(EventTree::new(0, vec![spec("r", 0, None, None)]).is_err());
        assert!(EventTree::new(1, vec![spec("r", 0, None, None)]).is_err());
        assert!(EventTree::new(
            1,
            vec![
                spec("r", 0, None, None),
                spec("a", 1, Some("x"), Some(one()))
            ]
        )
        .is_err());
        assert!(EventTree::new(
            1,
            vec![spec("r", 0, None, None), spec("a", 1, Some("r"), None)]
        )
        .is_err());
        assert!(EventTree::new(
            2,
            vec![
                spec("r", 0, None, None),
                spec("a", 2, Some("r"), Some(one()))
            ]
        )
        .is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = canon1();
        let text = instance_to_json(&c);
        let back = instance_from_json(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(instance_to_json(&back), text);
    }

    #[test]
    fn json_rejects_unknown_and_missing_nodes() {
        let c = canon1();
        let mut file = InstanceFile::from_instance(&c);
        file.bid.remove("u");
        assert!(file.into_instance().is_err());
        let mut file = InstanceFile::from_instance(&c);
        file.ask.insert("zz".into(), Rat(int(1)));
        assert!(file.into_instance().is_err());
    }

    #[test]
    fn hat_twice_is_identity() {
        let c = canon1();
        assert_eq!(c.hat_transform().hat_transform(), c);
    }
}
