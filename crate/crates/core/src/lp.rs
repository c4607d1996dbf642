//! A small exact linear-programming solver: dense two-phase simplex over
//! rationals with Bland's anti-cycling rule. Intended for the brute-force
//! cross-checks, where instances have at most a few hundred rows.

use num_traits::{One, Signed, Zero};

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    NonNegative,
    Free,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { value: Scalar, x: Vec<Scalar> },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn value(&self) -> Option<&Scalar> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
struct Row {
    coeffs: Vec<(usize, Scalar)>,
    rel: Relation,
    rhs: Scalar,
}

#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    kinds: Vec<VarKind>,
    rows: Vec<Row>,
    objective: Vec<(usize, Scalar)>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, kind: VarKind) -> usize {
        self.kinds.push(kind);
        self.kinds.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.kinds.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// `Σ coeff·x rel rhs`. Repeated indices are summed.
    pub fn add_row(&mut self, coeffs: Vec<(usize, Scalar)>, rel: Relation, rhs: Scalar) {
        debug_assert!(coeffs.iter().all(|(j, _)| *j < self.kinds.len()));
        self.rows.push(Row { coeffs, rel, rhs });
    }

    pub fn set_objective(&mut self, coeffs: Vec<(usize, Scalar)>) {
        self.objective = coeffs;
    }

    pub fn minimize(&self) -> LpOutcome {
        self.solve(false)
    }

    pub fn maximize(&self) -> LpOutcome {
        self.solve(true)
    }

    fn solve(&self, maximize: bool) -> LpOutcome {
        // Column layout: one column per nonnegative variable, two per free
        // variable (positive and negative parts), then one slack or surplus
        // per inequality, then artificials.
        let mut pos_col = Vec::with_capacity(self.kinds.len());
        let mut neg_col = Vec::with_capacity(self.kinds.len());
        let mut ncols = 0;
        for kind in &self.kinds {
            pos_col.push(ncols);
            ncols += 1;
            if *kind == VarKind::Free {
                neg_col.push(Some(ncols));
                ncols += 1;
            } else {
                neg_col.push(None);
            }
        }
        let structural = ncols;

        let m = self.rows.len();
        let mut dense: Vec<Vec<Scalar>> = Vec::with_capacity(m);
        let mut rels = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for row in &self.rows {
            let mut line = vec![Scalar::zero(); structural];
            for (j, a) in &row.coeffs {
                line[pos_col[*j]] += a;
                if let Some(nc) = neg_col[*j] {
                    line[nc] -= a;
                }
            }
            let (mut rel, mut b) = (row.rel, row.rhs.clone());
            if b.is_negative() {
                for a in &mut line {
                    *a = -a.clone();
                }
                b = -b;
                rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            dense.push(line);
            rels.push(rel);
            rhs.push(b);
        }

        let n_slack = rels.iter().filter(|r| **r != Relation::Eq).count();
        let n_art = rels.iter().filter(|r| **r != Relation::Le).count();
        let total = structural + n_slack + n_art;
        let art_start = structural + n_slack;

        let mut tab = Tableau {
            rows: Vec::with_capacity(m),
            basis: Vec::with_capacity(m),
            obj: vec![Scalar::zero(); total + 1],
            width: total,
        };
        let (mut next_slack, mut next_art) = (structural, art_start);
        for (i, line) in dense.into_iter().enumerate() {
            let mut full = line;
            full.resize(total + 1, Scalar::zero());
            full[total] = rhs[i].clone();
            match rels[i] {
                Relation::Le => {
                    full[next_slack] = Scalar::one();
                    tab.basis.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    full[next_slack] = -Scalar::one();
                    next_slack += 1;
                    full[next_art] = Scalar::one();
                    tab.basis.push(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    full[next_art] = Scalar::one();
                    tab.basis.push(next_art);
                    next_art += 1;
                }
            }
            tab.rows.push(full);
        }

        // Phase one: minimise the sum of artificials.
        if n_art > 0 {
            let mut cost = vec![Scalar::zero(); total];
            for c in cost.iter_mut().skip(art_start) {
                *c = Scalar::one();
            }
            tab.price_out(&cost);
            if tab.run(total) == Run::Unbounded {
                unreachable!("phase one is bounded below by zero");
            }
            if !tab.objective_value().is_zero() {
                return LpOutcome::Infeasible;
            }
            // Drive remaining artificials out of the basis or drop their rows.
            let mut i = 0;
            while i < tab.rows.len() {
                if tab.basis[i] >= art_start {
                    match (0..art_start).find(|&j| !tab.rows[i][j].is_zero()) {
                        Some(j) => {
                            tab.pivot(i, j);
                            i += 1;
                        }
                        None => {
                            tab.rows.remove(i);
                            tab.basis.remove(i);
                        }
                    }
                } else {
                    i += 1;
                }
            }
        }

        // Phase two on the original objective, artificials barred.
        let mut cost = vec![Scalar::zero(); total];
        for (j, a) in &self.objective {
            let a = if maximize { -a.clone() } else { a.clone() };
            cost[pos_col[*j]] += &a;
            if let Some(nc) = neg_col[*j] {
                cost[nc] -= &a;
            }
        }
        tab.price_out(&cost);
        if tab.run(art_start) == Run::Unbounded {
            return LpOutcome::Unbounded;
        }

        let mut col_value = vec![Scalar::zero(); total];
        for (i, &b) in tab.basis.iter().enumerate() {
            col_value[b] = tab.rows[i][total].clone();
        }
        let x = (0..self.kinds.len())
            .map(|j| {
                let mut v = col_value[pos_col[j]].clone();
                if let Some(nc) = neg_col[j] {
                    v -= &col_value[nc];
                }
                v
            })
            .collect();
        let value = tab.objective_value();
        LpOutcome::Optimal {
            value: if maximize { -value } else { value },
            x,
        }
    }
}

#[derive(PartialEq, Eq)]
enum Run {
    Optimal,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<Scalar>>,
    basis: Vec<usize>,
    /// Reduced costs followed by the negated objective value.
    obj: Vec<Scalar>,
    width: usize,
}

impl Tableau {
    fn objective_value(&self) -> Scalar {
        -self.obj[self.width].clone()
    }

    fn price_out(&mut self, cost: &[Scalar]) {
        let mut obj: Vec<Scalar> = cost.to_vec();
        obj.push(Scalar::zero());
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for (o, a) in obj.iter_mut().zip(&self.rows[i]) {
                if !a.is_zero() {
                    *o -= cb * a;
                }
            }
        }
        self.obj = obj;
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        if !p.is_one() {
            for a in self.rows[r].iter_mut() {
                if !a.is_zero() {
                    *a /= &p;
                }
            }
        }
        let pivot_row = std::mem::take(&mut self.rows[r]);
        let nz: Vec<usize> = (0..pivot_row.len())
            .filter(|&j| !pivot_row[j].is_zero())
            .collect();
        let eliminate = |line: &mut Vec<Scalar>| {
            let f = line[c].clone();
            if f.is_zero() {
                return;
            }
            for &j in &nz {
                line[j] -= &f * &pivot_row[j];
            }
        };
        for (i, line) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(line);
            }
        }
        eliminate(&mut self.obj);
        self.rows[r] = pivot_row;
        self.basis[r] = c;
    }

    /// Bland's rule: entering column is the lowest index with a negative
    /// reduced cost, leaving row the min-ratio row with the lowest basic index.
    fn run(&mut self, allowed: usize) -> Run {
        loop {
            let Some(c) = (0..allowed).find(|&j| self.obj[j].is_negative()) else {
                return Run::Optimal;
            };
            let mut best: Option<(usize, Scalar)> = None;
            for (i, line) in self.rows.iter().enumerate() {
                let a = &line[c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &line[self.width] / a;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => {
                        ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi])
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c),
                None => return Run::Unbounded,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};

    fn opt(o: &LpOutcome) -> (Scalar, Vec<Scalar>) {
        match o {
            LpOutcome::Optimal { value, x } => (value.clone(), x.clone()),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 → 36 at (2, 6).
        let mut lp = LinearProgram::new();
        let x = lp.add_var(VarKind::NonNegative);
        let y = lp.add_var(VarKind::NonNegative);
        lp.add_row(vec![(x, int(1))], Relation::Le, int(4));
        lp.add_row(vec![(y, int(2))], Relation::Le, int(12));
        lp.add_row(vec![(x, int(3)), (y, int(2))], Relation::Le, int(18));
        lp.set_objective(vec![(x, int(3)), (y, int(5))]);
        let (v, sol) = opt(&lp.maximize());
        assert_eq!(v, int(36));
        assert_eq!(sol, vec![int(2), int(6)]);
    }

    #[test]
    fn free_variables_and_equalities() {
        // min x subject to x >= -5/2 (free), x + y = 1, y <= 7.
        let mut lp = LinearProgram::new();
        let x = lp.add_var(VarKind::Free);
        let y = lp.add_var(VarKind::NonNegative);
        lp.add_row(vec![(x, int(1))], Relation::Ge, ratio(-5, 2));
        lp.add_row(vec![(x, int(1)), (y, int(1))], Relation::Eq, int(1));
        lp.add_row(vec![(y, int(1))], Relation::Le, int(7));
        lp.set_objective(vec![(x, int(1))]);
        let (v, sol) = opt(&lp.minimize());
        assert_eq!(v, ratio(-5, 2));
        assert_eq!(sol, vec![ratio(-5, 2), ratio(7, 2)]);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(VarKind::NonNegative);
        lp.add_row(vec![(x, int(1))], Relation::Le, int(1));
        lp.add_row(vec![(x, int(1))], Relation::Ge, int(2));
        lp.set_objective(vec![(x, int(1))]);
        assert_eq!(lp.minimize(), LpOutcome::Infeasible);

        let mut lp = LinearProgram::new();
        let x = lp.add_var(VarKind::Free);
        lp.add_row(vec![(x, int(1))], Relation::Le, int(3));
        lp.set_objective(vec![(x, int(1))]);
        assert_eq!(lp.minimize(), LpOutcome::Unbounded);
        assert_eq!(lp.maximize().value(), Some(&int(3)));
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(VarKind::NonNegative);
        let y = lp.add_var(VarKind::NonNegative);
        lp.add_row(vec![(x, int(1)), (y, int(1))], Relation::Eq, int(2));
        lp.add_row(vec![(x, int(2)), (y, int(2))], Relation::Eq, int(4));
        lp.set_objective(vec![(x, int(1)), (y, int(3))]);
        let (v, sol) = opt(&lp.minimize());
        assert_eq!(v, int(2));
        assert_eq!(sol, vec![int(2), int(0)]);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under the largest-coefficient rule.
        let mut lp = LinearProgram::new();
        let v: Vec<usize> = (0..4).map(|_| lp.add_var(VarKind::NonNegative)).collect();
        lp.add_row(
            vec![
                (v[0], ratio(1, 4)),
                (v[1], int(-60)),
                (v[2], ratio(-1, 25)),
                (v[3], int(9)),
            ],
            Relation::Le,
            int(0),
        );
        lp.add_row(
            vec![
                (v[0], ratio(1, 2)),
                (v[1], int(-90)),
                (v[2], ratio(-1, 50)),
                (v[3], int(3)),
            ],
            Relation::Le,
            int(0),
        );
        lp.add_row(vec![(v[2], int(1))], Relation::Le, int(1));
        lp.set_objective(vec![
            (v[0], ratio(-3, 4)),
            (v[1], int(150)),
            (v[2], ratio(-1, 50)),
            (v[3], int(6)),
        ]);
        let (val, _) = opt(&lp.minimize());
        assert_eq!(val, ratio(-1, 20));
    }
}
