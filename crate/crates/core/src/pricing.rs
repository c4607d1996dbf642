//! Backward induction for the ask (seller) and bid (buyer) prices.
//!
//! Each recursion takes, at every node `μ` before the horizon,
//!
//! ```text
//! cont(μ)  = max over children ν of value(ν)
//! rebal(μ) = gr_[S^b(μ), S^a(μ)](cont(μ))
//! value(μ) = step(μ, rebal(μ))
//! ```
//!
//! where `step` differs between the game value (`min(q, max(r, rebal))`) and
//! the value for a fixed stopping time of the hedger (`max(G, rebal)`).

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::market::{Instance, NodeId};
use crate::polyhedral::{Ext, PolyFn};
use crate::scalar::Scalar;
use crate::stopping::PureStoppingTime;

/// One polyhedral function per node; `None` where the layer is undefined
/// (the continuation layer at the horizon).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValueSurface {
    fns: Vec<Option<PolyFn>>,
}

impl ValueSurface {
    fn empty(n: usize) -> Self {
        Self { fns: vec![None; n] }
    }

    pub fn get(&self, node: NodeId) -> Option<&PolyFn> {
        self.fns[node].as_ref()
    }

    /// Panics if the layer is undefined at `node`.
    pub fn at(&self, node: NodeId) -> &PolyFn {
        self.fns[node].as_ref().expect("surface defined at node")
    }

    pub fn len(&self) -> usize {
        self.fns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fns.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &PolyFn)> {
        self.fns
            .iter()
            .enumerate()
            .filter_map(|(i, f)| f.as_ref().map(|f| (i, f)))
    }
}

/// The three layers of one backward induction: the value function
/// (`z` or `u`), its rebalanced form (`w` or `v`) and the max over children
/// (bold `z` or bold `u`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Surfaces {
    pub value: ValueSurface,
    pub rebalanced: ValueSurface,
    pub continuation: ValueSurface,
}

impl Surfaces {
    /// `value_root(0)`.
    pub fn root_at_zero(&self) -> Scalar {
        match self.value.at(0).eval(&Scalar::zero()) {
            Ext::Finite(v) => v,
            Ext::NegInf => unreachable!("surfaces are finite by construction"),
        }
    }
}

/// `strict_rebalance` rejects an unbounded-below rebalanced layer, which in
/// the game recursions signals arbitrage. The fixed-stop recursions allow
/// it: past the stop, the band at the stop node and a later band may be
/// disjoint, and the following `max` with the target absorbs the `-inf`.
fn backward(
    inst: &Instance,
    strict_rebalance: bool,
    terminal: impl Fn(NodeId) -> PolyFn,
    step: impl Fn(NodeId, &PolyFn) -> PolyFn,
) -> Result<Surfaces> {
    let tree = &inst.tree;
    let n = tree.len();
    let mut value = ValueSurface::empty(n);
    let mut rebalanced = ValueSurface::empty(n);
    let mut continuation = ValueSurface::empty(n);
    let degenerate = |node: NodeId| Error::Degenerate {
        node: tree.label(node).to_string(),
    };

    for &leaf in tree.leaves() {
        let f = terminal(leaf);
        if f.is_neg_inf() {
            return Err(degenerate(leaf));
        }
        rebalanced.fns[leaf] = Some(f.clone());
        value.fns[leaf] = Some(f);
    }
    for t in (0..tree.horizon()).rev() {
        for &mu in tree.at_date(t) {
            let cont = tree
                .children(mu)
                .iter()
                .map(|&c| value.at(c).clone())
                .reduce(|a, b| a.max(&b))
                .expect("non-leaf has children");
            let rebal = cont.gr(&inst.band(mu));
            if strict_rebalance && rebal.is_neg_inf() {
                return Err(degenerate(mu));
            }
            let v = step(mu, &rebal);
            if v.is_neg_inf() {
                return Err(degenerate(mu));
            }
            continuation.fns[mu] = Some(cont);
            rebalanced.fns[mu] = Some(rebal);
            value.fns[mu] = Some(v);
        }
    }
    Ok(Surfaces {
        value,
        rebalanced,
        continuation,
    })
}

/// `z`, `w` and bold `z`; the ask price is `z_0(0)`.
pub fn seller_value_surfaces(inst: &Instance) -> Result<Surfaces> {
    backward(
        inst,
        true,
        |leaf| inst.r_a(leaf),
        |mu, w| inst.q_a(mu).min(&inst.r_a(mu).max(w)),
    )
}

/// `u`, `v` and bold `u`; the bid price is `-u_0(0)`.
pub fn buyer_value_surfaces(inst: &Instance) -> Result<Surfaces> {
    backward(
        inst,
        true,
        |leaf| inst.r_b(leaf),
        |mu, v| inst.r_b(mu).min(&inst.q_b(mu).max(v)),
    )
}

/// `G_{σ,t}` at `mu ∈ Ω_t`.
pub fn seller_target(inst: &Instance, sigma: &PureStoppingTime, mu: NodeId) -> PolyFn {
    match sigma.fired_by(&inst.tree, mu) {
        Some(s) if s != mu => inst.q_a(s),
        _ => inst.r_a(mu),
    }
}

/// `H_{t,τ}` at `mu ∈ Ω_t`.
pub fn buyer_target(inst: &Instance, tau: &PureStoppingTime, mu: NodeId) -> PolyFn {
    match tau.fired_by(&inst.tree, mu) {
        Some(s) => inst.r_b(s),
        None => inst.q_b(mu),
    }
}

#[derive(Clone, Debug)]
pub struct StopValue {
    pub surfaces: Surfaces,
    /// Seller: the ask price `V^a_σ = z_{σ,0}(0)` of the American claim
    /// `Q_{σ,·}`. Buyer: the largest coverable loan `V^b_τ = -u_{0,τ}(0)`.
    pub value: Scalar,
}

/// `z_{σ,·}` surfaces, computed literally at every node including those
/// past `σ`.
pub fn seller_value_for_cancel(inst: &Instance, sigma: &PureStoppingTime) -> Result<StopValue> {
    let surfaces = backward(
        inst,
        false,
        |leaf| seller_target(inst, sigma, leaf),
        |mu, w| seller_target(inst, sigma, mu).max(w),
    )?;
    let value = surfaces.root_at_zero();
    Ok(StopValue { surfaces, value })
}

/// `u_{·,τ}` surfaces.
pub fn buyer_value_for_exercise(inst: &Instance, tau: &PureStoppingTime) -> Result<StopValue> {
    let surfaces = backward(
        inst,
        false,
        |leaf| buyer_target(inst, tau, leaf),
        |mu, v| buyer_target(inst, tau, mu).max(v),
    )?;
    let value = -surfaces.root_at_zero();
    Ok(StopValue { surfaces, value })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prices {
    pub ask: Scalar,
    pub bid: Scalar,
}

pub fn ask_price(seller: &Surfaces) -> Scalar {
    seller.root_at_zero()
}

pub fn bid_price(buyer: &Surfaces) -> Scalar {
    -buyer.root_at_zero()
}

pub fn prices(inst: &Instance) -> Result<Prices> {
    Ok(Prices {
        ask: ask_price(&seller_value_surfaces(inst)?),
        bid: bid_price(&buyer_value_surfaces(inst)?),
    })
}
