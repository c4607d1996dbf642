//! Independent verification machinery: randomized stopping times, the
//! approximate-martingale feasibility check, the dual payoff functional and
//! a brute-force exact LP for the per-stopping-time superhedging price.

use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpOutcome, Relation, VarKind};
use crate::market::{EventTree, Instance, NodeId};
use crate::pricing::{buyer_value_for_exercise, seller_value_for_cancel};
use crate::scalar::{int, Rat, Scalar};
use crate::stopping::PureStoppingTime;
use crate::strategy::Side;

/// Node-indexed weights `χ_t(μ) >= 0` summing to one along every path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomizedStoppingTime {
    weights: Vec<Scalar>,
}

impl RandomizedStoppingTime {
    pub fn new(tree: &EventTree, weights: Vec<Scalar>) -> Result<Self> {
        if weights.len() != tree.len() {
            return Err(Error::Shape(format!(
                "{} weights for a tree of {} nodes",
                weights.len(),
                tree.len()
            )));
        }
        if let Some(n) = weights.iter().position(Signed::is_negative) {
            return Err(Error::StoppingTime(format!(
                "negative weight at `{}`",
                tree.label(n)
            )));
        }
        for &leaf in tree.leaves() {
            let total: Scalar = tree.path_to(leaf).iter().map(|&n| &weights[n]).sum();
            if !total.is_one() {
                return Err(Error::StoppingTime(format!(
                    "weights along the path to `{}` sum to {total}",
                    tree.label(leaf)
                )));
            }
        }
        Ok(Self { weights })
    }

    /// `χ^τ_t = 1{τ = t}`.
    pub fn embed(tree: &EventTree, tau: &PureStoppingTime) -> Self {
        Self {
            weights: (0..tree.len())
                .map(|n| {
                    if tau.stops_at(n) {
                        Scalar::one()
                    } else {
                        Scalar::zero()
                    }
                })
                .collect(),
        }
    }

    pub fn weight(&self, node: NodeId) -> &Scalar {
        &self.weights[node]
    }

    pub fn weights(&self) -> &[Scalar] {
        &self.weights
    }

    /// `χ*_t(μ) = Σ_{s>=t} χ_s`, the mass not yet spent strictly before `μ`.
    /// It is known at the parent of `μ`.
    pub fn remaining(&self, tree: &EventTree, node: NodeId) -> Scalar {
        let mut spent = Scalar::zero();
        let mut cur = tree.parent(node);
        while let Some(p) = cur {
            spent += &self.weights[p];
            cur = tree.parent(p);
        }
        Scalar::one() - spent
    }

    /// `χ*_{t+1}(μ)`: the mass left after `μ`.
    pub fn remaining_after(&self, tree: &EventTree, node: NodeId) -> Scalar {
        self.remaining(tree, node) - &self.weights[node]
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.weights.len() != other.weights.len() {
            return Err(Error::Shape(
                "randomized stopping times live on different trees".into(),
            ));
        }
        Ok(())
    }

    /// `(χ ∧ χ̃)_t = χ_t χ̃*_t + χ̃_t χ*_{t+1}`.
    pub fn meet(&self, other: &Self, tree: &EventTree) -> Result<Self> {
        self.same_shape(other)?;
        let weights = (0..tree.len())
            .map(|n| {
                &self.weights[n] * other.remaining(tree, n)
                    + &other.weights[n] * self.remaining_after(tree, n)
            })
            .collect();
        Ok(Self { weights })
    }

    /// `(χ ∨ χ̃)_t = χ_t Σ_{s<=t} χ̃_s + χ̃_t Σ_{s<t} χ_s`.
    pub fn join(&self, other: &Self, tree: &EventTree) -> Result<Self> {
        self.same_shape(other)?;
        let weights = (0..tree.len())
            .map(|n| {
                let other_spent = Scalar::one() - other.remaining_after(tree, n);
                let self_spent = Scalar::one() - self.remaining(tree, n);
                &self.weights[n] * other_spent + &other.weights[n] * self_spent
            })
            .collect();
        Ok(Self { weights })
    }

    /// Time-`χ` value `Z_χ = Σ_t χ_t Z_t`, one entry per leaf in
    /// `tree.leaves()` order.
    pub fn value(&self, tree: &EventTree, process: &[Scalar]) -> Result<Vec<Scalar>> {
        if process.len() != tree.len() {
            return Err(Error::Shape("process sized for a different tree".into()));
        }
        Ok(tree
            .leaves()
            .iter()
            .map(|&leaf| {
                tree.path_to(leaf)
                    .iter()
                    .map(|&n| &self.weights[n] * &process[n])
                    .sum()
            })
            .collect())
    }
}

/// A candidate `(P, S)`: a probability on the leaves (aligned with
/// `tree.leaves()`) and a node-indexed price process.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApproximateMartingale {
    pub measure: Vec<Scalar>,
    pub price: Vec<Scalar>,
}

impl ApproximateMartingale {
    /// `P(μ)`, the mass of the leaves below `node`.
    pub fn mass(&self, tree: &EventTree, node: NodeId) -> Scalar {
        let leaves = tree.leaves();
        tree.leaves_below(node)
            .into_iter()
            .map(|l| &self.measure[leaves.binary_search(&l).expect("leaf listed")])
            .sum()
    }

    pub fn is_equivalent(&self) -> bool {
        self.measure.iter().all(Signed::is_positive)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MartingaleConstraint {
    Measure,
    PriceBand,
    Chain,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MartingaleFailure {
    pub constraint: MartingaleConstraint,
    pub node: String,
    pub slack: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MartingaleReport {
    pub passed: bool,
    /// True when every leaf has positive mass.
    pub equivalent: bool,
    pub failures: Vec<MartingaleFailure>,
    /// Nodes of zero mass where the conditional-expectation chain is vacuous.
    pub waived: Vec<String>,
}

/// Checks `S^b <= S <= S^a` and
/// `χ*_{t+1} S^b_t <= E_P(Σ_{s>t} χ_s S_s | F_t) <= χ*_{t+1} S^a_t` at every
/// node, computing the conditional expectation by summing over leaves.
pub fn check_approx_martingale(
    inst: &Instance,
    chi: &RandomizedStoppingTime,
    am: &ApproximateMartingale,
) -> MartingaleReport {
    let tree = &inst.tree;
    let leaves = tree.leaves();
    let mut failures = Vec::new();
    let mut waived = Vec::new();
    let label = |n: NodeId| tree.label(n).to_string();

    let total: Scalar = am.measure.iter().sum();
    if am.measure.len() != leaves.len()
        || am.price.len() != tree.len()
        || am.measure.iter().any(Signed::is_negative)
        || !total.is_one()
    {
        failures.push(MartingaleFailure {
            constraint: MartingaleConstraint::Measure,
            node: label(tree.root()),
            slack: Rat(total - Scalar::one()),
        });
        return MartingaleReport {
            passed: false,
            equivalent: false,
            failures,
            waived,
        };
    }

    for n in 0..tree.len() {
        let s = &am.price[n];
        for slack in [s - &inst.bid[n], &inst.ask[n] - s] {
            if slack.is_negative() {
                failures.push(MartingaleFailure {
                    constraint: MartingaleConstraint::PriceBand,
                    node: label(n),
                    slack: Rat(slack),
                });
            }
        }
        if tree.is_leaf(n) {
            continue;
        }
        let t = tree.date(n);
        let mut mass = Scalar::zero();
        let mut tail = Scalar::zero();
        for leaf in tree.leaves_below(n) {
            let p = &am.measure[leaves.binary_search(&leaf).expect("leaf listed")];
            mass += p;
            let future: Scalar = tree
                .path_to(leaf)
                .into_iter()
                .filter(|&m| tree.date(m) > t)
                .map(|m| chi.weight(m) * &am.price[m])
                .sum();
            tail += p * future;
        }
        if mass.is_zero() {
            waived.push(label(n));
            continue;
        }
        let cond = tail / &mass;
        let rest = chi.remaining_after(tree, n);
        for slack in [&cond - &rest * &inst.bid[n], &rest * &inst.ask[n] - &cond] {
            if slack.is_negative() {
                failures.push(MartingaleFailure {
                    constraint: MartingaleConstraint::Chain,
                    node: label(n),
                    slack: Rat(slack),
                });
            }
        }
    }

    MartingaleReport {
        passed: failures.is_empty(),
        equivalent: am.is_equivalent(),
        failures,
        waived,
    }
}

/// `E_P(Q1_{σ,·} + S Q2_{σ,·})_χ` for the seller, or the mirror
/// `E_P(Q1_{·,τ} + S Q2_{·,τ})_χ` for the buyer, where `own` is the
/// hedger's stopping time.
pub fn dual_payoff(
    inst: &Instance,
    side: Side,
    own: &PureStoppingTime,
    chi: &RandomizedStoppingTime,
    am: &ApproximateMartingale,
) -> Scalar {
    let tree = &inst.tree;
    let mut total = Scalar::zero();
    for (i, &leaf) in tree.leaves().iter().enumerate() {
        let p = &am.measure[i];
        if p.is_zero() {
            continue;
        }
        let own_date = own.date_on_leaf(tree, leaf);
        let mut pathwise = Scalar::zero();
        for t in 0..=tree.horizon() {
            let at_t = tree.ancestor_at(leaf, t);
            let w = chi.weight(at_t);
            if w.is_zero() {
                continue;
            }
            let settle = tree.ancestor_at(leaf, own_date.min(t));
            let q = match side {
                Side::Seller => inst.payoff(own_date, t, settle),
                Side::Buyer => inst.payoff(t, own_date, settle),
            };
            pathwise += w * (q.gamma + &am.price[at_t] * q.delta);
        }
        total += p * pathwise;
    }
    total
}

/// Default cap on LP variables.
pub const LP_VARIABLE_GUARD: usize = 2000;

struct HedgeLp {
    lp: LinearProgram,
    root_cash: usize,
    root_shares: usize,
    setup_excess: usize,
}

/// Superhedging LP for a fixed stopping time of the hedger. One portfolio
/// slot per node where a new position is chosen; positions freeze once the
/// stopping time fires. The objective `α_0 + k` with `k >= S^a β_0`,
/// `k >= S^b β_0` is the setup cost.
fn hedge_lp(inst: &Instance, side: Side, own: &PureStoppingTime) -> Result<HedgeLp> {
    let tree = &inst.tree;
    let vars = 3 + 2
        * (0..tree.len())
            .filter(|&n| !tree.is_leaf(n) && own.fired_by(tree, n).is_none())
            .count();
    if vars > LP_VARIABLE_GUARD {
        return Err(Error::TooLarge(format!(
            "{vars} LP variables exceed the guard of {LP_VARIABLE_GUARD}"
        )));
    }

    let mut lp = LinearProgram::new();
    let mut slot = vec![(0usize, 0usize); tree.len()];
    let root = tree.root();
    slot[root] = (lp.add_var(VarKind::Free), lp.add_var(VarKind::Free));
    let k = lp.add_var(VarKind::Free);

    // θ_μ((α, β) - (a, b)) >= 0 as two rows.
    let solvent = |lp: &mut LinearProgram,
                   node: NodeId,
                   (a, b): (usize, usize),
                   cash: Scalar,
                   shares: Scalar| {
        for price in [&inst.bid[node], &inst.ask[node]] {
            lp.add_row(
                vec![(a, int(1)), (b, price.clone())],
                Relation::Ge,
                &cash + price * &shares,
            );
        }
    };

    for id in 0..tree.len() {
        let here = slot[id];
        let stopped_before = !own.alive_at(tree, id);
        if !stopped_before {
            let stops = own.stops_at(id);
            // Seller owes Y on exercise up to and including σ, and X on
            // cancellation at σ < T. Buyer receives X before τ and Y at τ.
            let owed = match (side, stops) {
                (Side::Seller, _) => vec![inst.y(id)]
                    .into_iter()
                    .chain((stops && !tree.is_leaf(id)).then(|| inst.x(id)))
                    .collect::<Vec<_>>(),
                (Side::Buyer, false) => vec![inst.x(id).neg()],
                (Side::Buyer, true) => vec![inst.y(id).neg()],
            };
            for q in owed {
                solvent(&mut lp, id, here, q.gamma, q.delta);
            }
        }
        let fresh = own.fired_by(tree, id).is_none();
        for &c in tree.children(id) {
            slot[c] = if fresh {
                if c == tree.children(id)[0] {
                    let next = (lp.add_var(VarKind::Free), lp.add_var(VarKind::Free));
                    // θ_μ(here - next) >= 0
                    for price in [&inst.bid[id], &inst.ask[id]] {
                        lp.add_row(
                            vec![
                                (here.0, int(1)),
                                (next.0, int(-1)),
                                (here.1, price.clone()),
                                (next.1, -price.clone()),
                            ],
                            Relation::Ge,
                            Scalar::zero(),
                        );
                    }
                    next
                } else {
                    slot[tree.children(id)[0]]
                }
            } else {
                here
            };
        }
    }

    for price in [&inst.bid[root], &inst.ask[root]] {
        lp.add_row(
            vec![(k, int(1)), (slot[root].1, -price.clone())],
            Relation::Ge,
            Scalar::zero(),
        );
    }
    lp.set_objective(vec![(slot[root].0, int(1)), (k, int(1))]);
    Ok(HedgeLp {
        lp,
        root_cash: slot[root].0,
        root_shares: slot[root].1,
        setup_excess: k,
    })
}

fn solve_min(h: &HedgeLp) -> Result<Scalar> {
    match h.lp.minimize() {
        LpOutcome::Optimal { value, .. } => Ok(value),
        LpOutcome::Infeasible => Err(Error::Lp("infeasible")),
        LpOutcome::Unbounded => Err(Error::Lp("unbounded")),
    }
}

/// Least setup cost of a seller superhedge with cancellation time `sigma`.
pub fn lp_price_seller(inst: &Instance, sigma: &PureStoppingTime) -> Result<Scalar> {
    solve_min(&hedge_lp(inst, Side::Seller, sigma)?)
}

/// Largest loan a buyer exercising at `tau` can cover.
pub fn lp_price_buyer(inst: &Instance, tau: &PureStoppingTime) -> Result<Scalar> {
    Ok(-solve_min(&hedge_lp(inst, Side::Buyer, tau)?)?)
}

/// Whether a superhedge with the given stopping time fits in `budget`
/// (seller: initial cash; buyer: loan taken).
pub fn lp_feasible_at_budget(
    inst: &Instance,
    side: Side,
    own: &PureStoppingTime,
    budget: &Scalar,
) -> Result<bool> {
    let mut h = hedge_lp(inst, side, own)?;
    let limit = match side {
        Side::Seller => budget.clone(),
        Side::Buyer => -budget.clone(),
    };
    h.lp.add_row(
        vec![(h.root_cash, int(1)), (h.setup_excess, int(1))],
        Relation::Le,
        limit,
    );
    let _ = h.root_shares;
    match h.lp.minimize() {
        LpOutcome::Optimal { .. } => Ok(true),
        LpOutcome::Infeasible => Ok(false),
        LpOutcome::Unbounded => Err(Error::Lp("unbounded")),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleRow {
    pub stop_nodes: Vec<String>,
    pub lp_value: Rat,
    pub surface_value: Rat,
}

impl OracleRow {
    pub fn agrees(&self) -> bool {
        self.lp_value == self.surface_value
    }
}

/// LP value and per-stopping-time surface value for one stopping time.
pub fn oracle_row(inst: &Instance, side: Side, own: &PureStoppingTime) -> Result<OracleRow> {
    let (lp_value, surface_value) = match side {
        Side::Seller => (
            lp_price_seller(inst, own)?,
            seller_value_for_cancel(inst, own)?.value,
        ),
        Side::Buyer => (
            lp_price_buyer(inst, own)?,
            buyer_value_for_exercise(inst, own)?.value,
        ),
    };
    Ok(OracleRow {
        stop_nodes: own.labels(&inst.tree),
        lp_value: Rat(lp_value),
        surface_value: Rat(surface_value),
    })
}

/// Best of the per-stopping-time values: min for the seller, max for the buyer.
pub fn extremum(side: Side, rows: &[OracleRow]) -> Option<Scalar> {
    let values = rows.iter().map(|r| r.lp_value.0.clone());
    match side {
        Side::Seller => values.min(),
        Side::Buyer => values.max(),
    }
}

/// A random randomized stopping time: at each node a random fraction of the
/// remaining mass (often all or none) is spent; leaves take the rest.
pub fn random_chi<R: Rng + ?Sized>(tree: &EventTree, rng: &mut R) -> RandomizedStoppingTime {
    let mut weights = vec![Scalar::zero(); tree.len()];
    let mut remaining = vec![Scalar::zero(); tree.len()];
    remaining[tree.root()] = Scalar::one();
    for id in 0..tree.len() {
        let rest = remaining[id].clone();
        let spent = if tree.is_leaf(id) {
            rest.clone()
        } else {
            match rng.gen_range(0..4u8) {
                0 => Scalar::zero(),
                1 => rest.clone(),
                _ => &rest * Scalar::new(rng.gen_range(1..8i64).into(), 8.into()),
            }
        };
        for &c in tree.children(id) {
            remaining[c] = &rest - &spent;
        }
        weights[id] = spent;
    }
    RandomizedStoppingTime { weights }
}

/// Vertices of the feasible `(P, S)` set for `chi`, found by optimizing
/// random objectives over `(P, M = P·S)`. Empty if the set is empty.
pub fn dual_vertices<R: Rng + ?Sized>(
    inst: &Instance,
    chi: &RandomizedStoppingTime,
    count: usize,
    rng: &mut R,
) -> Vec<ApproximateMartingale> {
    let tree = &inst.tree;
    let leaves = tree.leaves();
    let mut lp = LinearProgram::new();
    let p: Vec<usize> = leaves
        .iter()
        .map(|_| lp.add_var(VarKind::NonNegative))
        .collect();
    let m: Vec<usize> = (0..tree.len())
        .map(|_| lp.add_var(VarKind::NonNegative))
        .collect();
    let mass_terms = |node: NodeId, scale: &Scalar| -> Vec<(usize, Scalar)> {
        tree.leaves_below(node)
            .into_iter()
            .map(|l| {
                (
                    p[leaves.binary_search(&l).expect("leaf listed")],
                    scale.clone(),
                )
            })
            .collect()
    };

    lp.add_row(
        p.iter().map(|&v| (v, int(1))).collect(),
        Relation::Eq,
        int(1),
    );
    for n in 0..tree.len() {
        let mut lo = mass_terms(n, &-inst.bid[n].clone());
        lo.push((m[n], int(1)));
        lp.add_row(lo, Relation::Ge, Scalar::zero());
        let mut hi = mass_terms(n, &-inst.ask[n].clone());
        hi.push((m[n], int(1)));
        lp.add_row(hi, Relation::Le, Scalar::zero());
        if tree.is_leaf(n) {
            continue;
        }
        let rest = chi.remaining_after(tree, n);
        let mut below = Vec::new();
        let mut stack: Vec<NodeId> = tree.children(n).to_vec();
        while let Some(d) = stack.pop() {
            if !chi.weight(d).is_zero() {
                below.push((m[d], chi.weight(d).clone()));
            }
            stack.extend_from_slice(tree.children(d));
        }
        for (price, rel) in [(&inst.bid[n], Relation::Ge), (&inst.ask[n], Relation::Le)] {
            let mut row = below.clone();
            row.extend(mass_terms(n, &-(&rest * price)));
            lp.add_row(row, rel, Scalar::zero());
        }
    }

    let mut out: Vec<ApproximateMartingale> = Vec::new();
    for _ in 0..count {
        let objective = p
            .iter()
            .chain(&m)
            .map(|&v| (v, int(rng.gen_range(-5..=5))))
            .collect();
        lp.set_objective(objective);
        let x = match lp.maximize() {
            LpOutcome::Optimal { x, .. } => x,
            _ => return Vec::new(),
        };
        let measure: Vec<Scalar> = p.iter().map(|&v| x[v].clone()).collect();
        let am = from_mass_and_moment(inst, measure, m.iter().map(|&v| x[v].clone()).collect());
        if !out.contains(&am) {
            out.push(am);
        }
    }
    out
}

/// `S = M / P` where `P(μ) > 0`, and `S^b` on null nodes.
fn from_mass_and_moment(
    inst: &Instance,
    measure: Vec<Scalar>,
    moment: Vec<Scalar>,
) -> ApproximateMartingale {
    let tree = &inst.tree;
    let mut am = ApproximateMartingale {
        measure,
        price: Vec::with_capacity(tree.len()),
    };
    for (n, m) in moment.iter().enumerate() {
        let mass = am.mass(tree, n);
        am.price.push(if mass.is_zero() {
            inst.bid[n].clone()
        } else {
            m / mass
        });
    }
    am
}

/// Random convex combination of vertices, taken in `(P, P·S)` coordinates
/// so that feasibility is preserved.
pub fn mix_vertices<R: Rng + ?Sized>(
    inst: &Instance,
    vertices: &[ApproximateMartingale],
    rng: &mut R,
) -> ApproximateMartingale {
    let tree = &inst.tree;
    let raw: Vec<i64> = vertices.iter().map(|_| rng.gen_range(0..6i64)).collect();
    let total: i64 = raw.iter().sum();
    let coeffs: Vec<Scalar> = if total == 0 {
        let mut c = vec![Scalar::zero(); vertices.len()];
        c[rng.gen_range(0..vertices.len())] = Scalar::one();
        c
    } else {
        raw.iter()
            .map(|&r| Scalar::new(r.into(), total.into()))
            .collect()
    };
    let mut measure = vec![Scalar::zero(); tree.leaves().len()];
    let mut moment = vec![Scalar::zero(); tree.len()];
    for (lambda, v) in coeffs.iter().zip(vertices) {
        if lambda.is_zero() {
            continue;
        }
        for (acc, p) in measure.iter_mut().zip(&v.measure) {
            *acc += lambda * p;
        }
        for (n, acc) in moment.iter_mut().enumerate() {
            *acc += lambda * v.mass(tree, n) * &v.price[n];
        }
    }
    from_mass_and_moment(inst, measure, moment)
}

#[derive(Clone, Debug)]
pub struct DualSample {
    pub chi: RandomizedStoppingTime,
    pub martingale: ApproximateMartingale,
}

/// Up to `samples` feasible dual points spread over `chis` random
/// randomized stopping times (pure ones included).
pub fn sample_dual_points<R: Rng + ?Sized>(
    inst: &Instance,
    samples: usize,
    chis: usize,
    rng: &mut R,
) -> Vec<DualSample> {
    let tree = &inst.tree;
    let chis = chis.max(1);
    let per_chi = samples.div_ceil(chis);
    let mut out = Vec::with_capacity(samples);
    for i in 0..chis {
        let chi = if i < 2 {
            RandomizedStoppingTime::embed(
                tree,
                &PureStoppingTime::constant(tree, i * tree.horizon()),
            )
        } else {
            random_chi(tree, rng)
        };
        let vertices = dual_vertices(inst, &chi, 6, rng);
        if vertices.is_empty() {
            continue;
        }
        for _ in 0..per_chi {
            if out.len() == samples {
                return out;
            }
            out.push(DualSample {
                chi: chi.clone(),
                martingale: mix_vertices(inst, &vertices, rng),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{canon0, canon1};
    use crate::scalar::ratio;
    use crate::stopping::enumerate_stopping_times;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn canon1_lp_values() {
        let c = canon1();
        let now = PureStoppingTime::constant(&c.tree, 0);
        let later = PureStoppingTime::constant(&c.tree, 1);
        assert_eq!(lp_price_seller(&c, &now).unwrap(), int(2));
        assert_eq!(lp_price_seller(&c, &later).unwrap(), ratio(9, 4));
        assert_eq!(lp_price_buyer(&c, &later).unwrap(), ratio(7, 4));
        assert_eq!(lp_price_buyer(&c, &now).unwrap(), int(1));
        assert!(lp_feasible_at_budget(&c, Side::Seller, &later, &ratio(9, 4)).unwrap());
        assert!(
            !lp_feasible_at_budget(&c, Side::Seller, &later, &(ratio(9, 4) - ratio(1, 1000)))
                .unwrap()
        );
        assert!(lp_feasible_at_budget(&c, Side::Buyer, &later, &ratio(7, 4)).unwrap());
        assert!(
            !lp_feasible_at_budget(&c, Side::Buyer, &later, &(ratio(7, 4) + ratio(1, 1000)))
                .unwrap()
        );
    }

    #[test]
    fn chi_algebra_on_pure_times() {
        let tree = EventTree::uniform(2, 2).unwrap();
        let all = enumerate_stopping_times(&tree, 100).unwrap();
        for s in &all {
            for t in &all {
                let (cs, ct) = (
                    RandomizedStoppingTime::embed(&tree, s),
                    RandomizedStoppingTime::embed(&tree, t),
                );
                let meet_nodes: Vec<NodeId> = tree
                    .leaves()
                    .iter()
                    .map(|&l| {
                        tree.ancestor_at(l, s.date_on_leaf(&tree, l).min(t.date_on_leaf(&tree, l)))
                    })
                    .collect();
                let join_nodes: Vec<NodeId> = tree
                    .leaves()
                    .iter()
                    .map(|&l| {
                        tree.ancestor_at(l, s.date_on_leaf(&tree, l).max(t.date_on_leaf(&tree, l)))
                    })
                    .collect();
                let min_time =
                    PureStoppingTime::from_stop_nodes(&tree, &dedup(meet_nodes)).unwrap();
                let max_time =
                    PureStoppingTime::from_stop_nodes(&tree, &dedup(join_nodes)).unwrap();
                assert_eq!(
                    cs.meet(&ct, &tree).unwrap(),
                    RandomizedStoppingTime::embed(&tree, &min_time)
                );
                assert_eq!(
                    cs.join(&ct, &tree).unwrap(),
                    RandomizedStoppingTime::embed(&tree, &max_time)
                );
            }
        }
    }

    fn dedup(mut v: Vec<NodeId>) -> Vec<NodeId> {
        v.sort_unstable();
        v.dedup();
        v
    }

    #[test]
    fn meet_and_join_stay_valid() {
        let tree = EventTree::uniform(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let a = random_chi(&tree, &mut rng);
            let b = random_chi(&tree, &mut rng);
            let m = a.meet(&b, &tree).unwrap();
            let j = a.join(&b, &tree).unwrap();
            assert!(RandomizedStoppingTime::new(&tree, m.weights.clone()).is_ok());
            assert!(RandomizedStoppingTime::new(&tree, j.weights.clone()).is_ok());
        }
        let other = EventTree::uniform(1, 2).unwrap();
        let c = RandomizedStoppingTime::embed(&other, &PureStoppingTime::constant(&other, 0));
        assert!(random_chi(&tree, &mut rng).meet(&c, &tree).is_err());
    }

    #[test]
    fn value_at_pure_time_is_evaluation() {
        let tree = EventTree::uniform(2, 3).unwrap();
        let z: Vec<Scalar> = (0..tree.len()).map(|n| int(n as i64 * 3 - 7)).collect();
        for tau in enumerate_stopping_times(&tree, 1000).unwrap() {
            let got = RandomizedStoppingTime::embed(&tree, &tau)
                .value(&tree, &z)
                .unwrap();
            for (i, &leaf) in tree.leaves().iter().enumerate() {
                let at = tree.ancestor_at(leaf, tau.date_on_leaf(&tree, leaf));
                assert_eq!(got[i], z[at]);
            }
        }
    }

    #[test]
    fn frictionless_martingale_passes_for_any_chi() {
        let c = canon0();
        // S: 4 -> {8, 2}; the martingale weight on "up" is 1/3.
        let am = ApproximateMartingale {
            measure: vec![ratio(1, 3), ratio(2, 3)],
            price: c.bid.clone(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let chi = random_chi(&c.tree, &mut rng);
            let report = check_approx_martingale(&c, &chi, &am);
            assert!(report.passed, "{report:?}");
            assert!(report.equivalent);
        }
        let mut off = am.clone();
        off.price[1] = int(9);
        let chi = random_chi(&c.tree, &mut rng);
        let report = check_approx_martingale(&c, &chi, &off);
        assert!(!report.passed);
        assert!(report
            .failures
            .iter()
            .any(|f| f.constraint == MartingaleConstraint::PriceBand && f.node == c.tree.label(1)));
    }

    #[test]
    fn terminal_chi_chain_on_canon1() {
        // χ = embed(1): at the root χ*_1 = 1 and the root spread is zero, so
        // the chain reads p S_u + (1-p) S_d = 4.
        let c = canon1();
        let chi = RandomizedStoppingTime::embed(&c.tree, &PureStoppingTime::constant(&c.tree, 1));
        let probe = |p: Scalar, su: Scalar, sd: Scalar| {
            let am = ApproximateMartingale {
                measure: vec![p.clone(), int(1) - &p],
                price: vec![int(4), su, sd],
            };
            check_approx_martingale(&c, &chi, &am).passed
        };
        assert!(probe(ratio(1, 3), ratio(15, 2), ratio(9, 4)));
        assert!(!probe(ratio(1, 3), ratio(15, 2), ratio(3, 2)));
        assert!(probe(ratio(1, 4), ratio(17, 2), ratio(5, 2)));
        assert!(!probe(ratio(1, 4), ratio(17, 2), int(2)));
        // Mass only on the down path: the root chain still binds.
        let am = ApproximateMartingale {
            measure: vec![int(0), int(1)],
            price: vec![int(4), int(8), int(2)],
        };
        let report = check_approx_martingale(&c, &chi, &am);
        assert!(!report.equivalent);
        assert!(!report.passed);
    }

    #[test]
    fn dual_payoff_examples() {
        let c = canon1();
        let later = PureStoppingTime::constant(&c.tree, 1);
        let chi = RandomizedStoppingTime::embed(&c.tree, &later);
        let am = ApproximateMartingale {
            measure: vec![int(0), int(1)],
            price: vec![int(4), int(8), int(2)],
        };
        // Point mass on the down path: the put pays 3 there.
        assert_eq!(dual_payoff(&c, Side::Seller, &later, &chi, &am), int(3));
        let mut other = am.clone();
        other.price = vec![int(3), int(7), int(1)];
        assert_eq!(dual_payoff(&c, Side::Seller, &later, &chi, &other), int(3));
    }

    #[test]
    fn sampled_points_respect_weak_duality_on_canon1() {
        let c = canon1();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sigmas = enumerate_stopping_times(&c.tree, 10).unwrap();
        let seller: Vec<Scalar> = sigmas
            .iter()
            .map(|s| lp_price_seller(&c, s).unwrap())
            .collect();
        let buyer: Vec<Scalar> = sigmas
            .iter()
            .map(|s| lp_price_buyer(&c, s).unwrap())
            .collect();
        let samples = sample_dual_points(&c, 200, 8, &mut rng);
        assert_eq!(samples.len(), 200);
        let mut best_late = Scalar::zero();
        for s in &samples {
            assert!(check_approx_martingale(&c, &s.chi, &s.martingale).passed);
            for (i, sigma) in sigmas.iter().enumerate() {
                let d = dual_payoff(&c, Side::Seller, sigma, &s.chi, &s.martingale);
                assert!(d <= seller[i]);
                assert!(dual_payoff(&c, Side::Buyer, sigma, &s.chi, &s.martingale) >= buyer[i]);
                if i == 1 && d > best_late {
                    best_late = d;
                }
            }
        }
        assert!(best_late <= ratio(9, 4));
        assert!(best_late > int(0));
    }
}
