//! Pure stopping times on an event tree.

use crate::error::{Error, Result};
use crate::market::{EventTree, NodeId};

/// A pure stopping time, stored as its stopping region: the set of nodes at
/// which it stops. Every root-to-leaf path meets the region exactly once.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PureStoppingTime {
    stop: Vec<bool>,
}

impl PureStoppingTime {
    pub fn from_stop_nodes(tree: &EventTree, nodes: &[NodeId]) -> Result<Self> {
        let mut stop = vec![false; tree.len()];
        for &n in nodes {
            if n >= tree.len() {
                return Err(Error::StoppingTime(format!("node index {n} out of range")));
            }
            stop[n] = true;
        }
        let st = Self { stop };
        st.check(tree)?;
        Ok(st)
    }

    pub fn from_labels<S: AsRef<str>>(tree: &EventTree, labels: &[S]) -> Result<Self> {
        let ids = labels
            .iter()
            .map(|l| {
                tree.id_of(l.as_ref())
                    .ok_or_else(|| Error::StoppingTime(format!("unknown node `{}`", l.as_ref())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_stop_nodes(tree, &ids)
    }

    /// `σ ≡ t`.
    pub fn constant(tree: &EventTree, t: usize) -> Self {
        let t = t.min(tree.horizon());
        let mut stop = vec![false; tree.len()];
        for &n in tree.at_date(t) {
            stop[n] = true;
        }
        Self { stop }
    }

    fn check(&self, tree: &EventTree) -> Result<()> {
        if self.stop.len() != tree.len() {
            return Err(Error::StoppingTime(
                "stopping region sized for a different tree".into(),
            ));
        }
        for &leaf in tree.leaves() {
            let hits = tree
                .path_to(leaf)
                .into_iter()
                .filter(|&n| self.stop[n])
                .count();
            if hits != 1 {
                return Err(Error::StoppingTime(format!(
                    "path to leaf `{}` meets the stopping region {hits} times",
                    tree.label(leaf)
                )));
            }
        }
        Ok(())
    }

    pub fn stops_at(&self, node: NodeId) -> bool {
        self.stop[node]
    }

    pub fn stop_nodes(&self) -> Vec<NodeId> {
        (0..self.stop.len()).filter(|&n| self.stop[n]).collect()
    }

    /// The stopping node on the path to `node` if the stopping time has
    /// already fired by `date(node)`.
    pub fn fired_by(&self, tree: &EventTree, node: NodeId) -> Option<NodeId> {
        let mut cur = Some(node);
        while let Some(n) = cur {
            if self.stop[n] {
                return Some(n);
            }
            cur = tree.parent(n);
        }
        None
    }

    /// True when the stopping time has not fired strictly before `node`,
    /// i.e. `σ >= date(node)` on that atom.
    pub fn alive_at(&self, tree: &EventTree, node: NodeId) -> bool {
        match tree.parent(node) {
            None => true,
            Some(p) => self.fired_by(tree, p).is_none(),
        }
    }

    /// Date at which the stopping time fires along the path to `leaf`.
    pub fn date_on_leaf(&self, tree: &EventTree, leaf: NodeId) -> usize {
        tree.date(
            self.fired_by(tree, leaf)
                .expect("valid stopping time fires on every path"),
        )
    }

    pub fn labels(&self, tree: &EventTree) -> Vec<String> {
        self.stop_nodes()
            .into_iter()
            .map(|n| tree.label(n).to_string())
            .collect()
    }
}

/// Number of pure stopping times, from `count(μ) = 1 + Π count(children)`.
/// Saturates at `u128::MAX`.
pub fn count_stopping_times(tree: &EventTree) -> u128 {
    let mut count = vec![1u128; tree.len()];
    for id in (0..tree.len()).rev() {
        if !tree.is_leaf(id) {
            let product = tree
                .children(id)
                .iter()
                .fold(1u128, |acc, &c| acc.saturating_mul(count[c]));
            count[id] = product.saturating_add(1);
        }
    }
    count[tree.root()]
}

/// Every pure stopping time, duplicate free. Ordered depth first with the
/// earliest stop first: `σ ≡ 0` leads, then the regions below the root in
/// lexicographic order of the children's choices.
pub fn enumerate_stopping_times(tree: &EventTree, limit: usize) -> Result<Vec<PureStoppingTime>> {
    let total = count_stopping_times(tree);
    if total > limit as u128 {
        return Err(Error::TooLarge(format!(
            "{total} stopping times exceed the limit of {limit}"
        )));
    }
    let regions = regions_below(tree, tree.root());
    Ok(regions
        .into_iter()
        .map(|nodes| {
            let mut stop = vec![false; tree.len()];
            for n in nodes {
                stop[n] = true;
            }
            PureStoppingTime { stop }
        })
        .collect())
}

fn regions_below(tree: &EventTree, node: NodeId) -> Vec<Vec<NodeId>> {
    let mut out = vec![vec![node]];
    if tree.is_leaf(node) {
        return out;
    }
    let mut partial: Vec<Vec<NodeId>> = vec![Vec::new()];
    for &child in tree.children(node) {
        let options = regions_below(tree, child);
        let mut next = Vec::with_capacity(partial.len() * options.len());
        for prefix in &partial {
            for opt in &options {
                let mut combined = prefix.clone();
                combined.extend_from_slice(opt);
                next.push(combined);
            }
        }
        partial = next;
    }
    out.extend(partial);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn one_period_binomial_has_two() {
        let tree = EventTree::uniform(1, 2).unwrap();
        let all = enumerate_stopping_times(&tree, 100).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0], PureStoppingTime::constant(&tree, 0));
        assert_eq!(all[1], PureStoppingTime::constant(&tree, 1));
    }

    #[test]
    fn two_period_binomial_explicit_listing() {
        // Stop at root; or for each child independently stop there or at
        // its two leaves: 1 + 2*2 = 5.
        let tree = EventTree::uniform(2, 2).unwrap();
        let all = enumerate_stopping_times(&tree, 100).unwrap();
        assert_eq!(all.len(), 5);
        assert_eq!(count_stopping_times(&tree), 5);
        let sets: HashSet<Vec<String>> = all.iter().map(|s| s.labels(&tree)).collect();
        let expect: HashSet<Vec<String>> = [
            vec!["0"],
            vec!["0.0", "0.1"],
            vec!["0.0", "0.1.0", "0.1.1"],
            vec!["0.1", "0.0.0", "0.0.1"],
            vec!["0.0.0", "0.0.1", "0.1.0", "0.1.1"],
        ]
        .into_iter()
        .map(|v| {
            let mut v: Vec<String> = v.into_iter().map(String::from).collect();
            v.sort_by_key(|l| tree.id_of(l).unwrap());
            v
        })
        .collect();
        assert_eq!(sets, expect);
    }

    #[test]
    fn counts_match_recursion() {
        for (h, b) in [(1, 3), (2, 3), (3, 2)] {
            let tree = EventTree::uniform(h, b).unwrap();
            let all = enumerate_stopping_times(&tree, 10_000).unwrap();
            assert_eq!(all.len() as u128, count_stopping_times(&tree));
            let distinct: HashSet<_> = all.iter().collect();
            assert_eq!(distinct.len(), all.len());
            for st in &all {
                assert!(st.check(&tree).is_ok());
            }
        }
        assert_eq!(count_stopping_times(&EventTree::uniform(3, 2).unwrap()), 26);
    }

    #[test]
    fn guard_and_validation() {
        let tree = EventTree::uniform(3, 2).unwrap();
        assert!(matches!(
            enumerate_stopping_times(&tree, 10),
            Err(Error::TooLarge(_))
        ));
        assert!(PureStoppingTime::from_stop_nodes(&tree, &[]).is_err());
        let root_and_leaf = [0, tree.leaves()[0]];
        assert!(PureStoppingTime::from_stop_nodes(&tree, &root_and_leaf).is_err());
        assert!(PureStoppingTime::from_labels(&tree, &["0"]).is_ok());
        assert!(PureStoppingTime::from_labels(&tree, &["nope"]).is_err());
    }

    #[test]
    fn fired_and_alive() {
        let tree = EventTree::uniform(2, 2).unwrap();
        let st = PureStoppingTime::from_labels(&tree, &["0.0", "0.1.0", "0.1.1"]).unwrap();
        let a = tree.id_of("0.0").unwrap();
        let aa = tree.id_of("0.0.1").unwrap();
        let b = tree.id_of("0.1").unwrap();
        assert_eq!(st.fired_by(&tree, aa), Some(a));
        assert!(st.alive_at(&tree, a));
        assert!(!st.alive_at(&tree, aa));
        assert!(st.alive_at(&tree, b));
        assert_eq!(st.fired_by(&tree, b), None);
        assert_eq!(st.date_on_leaf(&tree, aa), 1);
        assert_eq!(st.date_on_leaf(&tree, tree.id_of("0.1.0").unwrap()), 2);
    }
}
