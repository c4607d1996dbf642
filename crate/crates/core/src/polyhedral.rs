//! Exact calculus on continuous piecewise-linear functions of one variable,
//! extended by the constant `-inf`.
//!
//! A finite function is stored as a strictly increasing list of knots with
//! the function value at each knot, plus the slopes of the two unbounded
//! rays. The canonical form keeps only genuine kinks. An affine function has
//! no kinks and is stored with a single anchor knot at `y = 0` whose left and
//! right slopes coincide. Canonical forms are unique, so structural equality
//! is function equality.

use std::cmp::Ordering;
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{format_scalar, int, neg_part, pos_part, zero, Rat, Scalar};

/// A value in `R ∪ {-inf}`. The derived order puts `NegInf` below every
/// finite value.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Ext {
    NegInf,
    Finite(Scalar),
}

impl Ext {
    pub fn finite(&self) -> Option<&Scalar> {
        match self {
            Ext::NegInf => None,
            Ext::Finite(v) => Some(v),
        }
    }

    pub fn is_neg_inf(&self) -> bool {
        matches!(self, Ext::NegInf)
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::NegInf => write!(f, "-inf"),
            Ext::Finite(v) => write!(f, "{v}"),
        }
    }
}

/// The slope interval `[d, c]` of `h_{[d,c]}(y) = c*y^- - d*y^+`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlopeBand {
    d: Scalar,
    c: Scalar,
}

impl SlopeBand {
    pub fn new(d: Scalar, c: Scalar) -> Result<Self> {
        if c < d {
            return Err(Error::Shape(format!(
                "slope band needs c >= d, got [{d}, {c}]"
            )));
        }
        Ok(Self { d, c })
    }

    pub fn lower(&self) -> &Scalar {
        &self.d
    }

    pub fn upper(&self) -> &Scalar {
        &self.c
    }

    /// `h_{[d,c]}(y)` evaluated directly.
    pub fn h(&self, y: &Scalar) -> Scalar {
        &self.c * neg_part(y) - &self.d * pos_part(y)
    }
}

/// Finite continuous piecewise-linear function in canonical form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piecewise {
    knots: Vec<Scalar>,
    values: Vec<Scalar>,
    left_slope: Scalar,
    right_slope: Scalar,
}

impl Piecewise {
    /// Canonicalizes raw data. Caller guarantees nonempty, strictly increasing
    /// knots with matching values.
    fn canonical(knots: Vec<Scalar>, values: Vec<Scalar>, left: Scalar, right: Scalar) -> Self {
        debug_assert!(!knots.is_empty() && knots.len() == values.len());
        let n = knots.len();
        let mut slopes = Vec::with_capacity(n + 1);
        slopes.push(left.clone());
        for i in 1..n {
            slopes.push((&values[i] - &values[i - 1]) / (&knots[i] - &knots[i - 1]));
        }
        slopes.push(right.clone());

        let mut kept_knots = Vec::new();
        let mut kept_values = Vec::new();
        for i in 0..n {
            if slopes[i] != slopes[i + 1] {
                kept_knots.push(knots[i].clone());
                kept_values.push(values[i].clone());
            }
        }
        if kept_knots.is_empty() {
            let at_zero = &values[0] - &left * &knots[0];
            return Self {
                knots: vec![zero()],
                values: vec![at_zero],
                left_slope: left.clone(),
                right_slope: left,
            };
        }
        Self {
            knots: kept_knots,
            values: kept_values,
            left_slope: left,
            right_slope: right,
        }
    }

    pub fn knots(&self) -> &[Scalar] {
        &self.knots
    }

    pub fn values(&self) -> &[Scalar] {
        &self.values
    }

    pub fn left_slope(&self) -> &Scalar {
        &self.left_slope
    }

    pub fn right_slope(&self) -> &Scalar {
        &self.right_slope
    }

    pub fn is_affine(&self) -> bool {
        self.knots.len() == 1 && self.left_slope == self.right_slope
    }

    /// Kinks only; the anchor of an affine function is not a breakpoint.
    pub fn breakpoints(&self) -> &[Scalar] {
        if self.is_affine() {
            &[]
        } else {
            &self.knots
        }
    }

    /// Slopes of every piece from left to right (`knots.len() + 1` entries).
    pub fn slopes(&self) -> Vec<Scalar> {
        let n = self.knots.len();
        let mut out = Vec::with_capacity(n + 1);
        out.push(self.left_slope.clone());
        for i in 1..n {
            out.push(
                (&self.values[i] - &self.values[i - 1]) / (&self.knots[i] - &self.knots[i - 1]),
            );
        }
        out.push(self.right_slope.clone());
        out
    }

    pub fn is_convex(&self) -> bool {
        self.slopes().windows(2).all(|w| w[0] <= w[1])
    }

    pub fn eval(&self, y: &Scalar) -> Scalar {
        let n = self.knots.len();
        let i = self.knots.partition_point(|k| k < y);
        if i == 0 {
            &self.values[0] + &self.left_slope * (y - &self.knots[0])
        } else if i == n {
            &self.values[n - 1] + &self.right_slope * (y - &self.knots[n - 1])
        } else {
            let (k0, k1) = (&self.knots[i - 1], &self.knots[i]);
            let (v0, v1) = (&self.values[i - 1], &self.values[i]);
            v0 + (v1 - v0) * (y - k0) / (k1 - k0)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PolyFnWire", into = "PolyFnWire")]
pub enum PolyFn {
    NegInf,
    Finite(Piecewise),
}

impl PolyFn {
    pub fn neg_inf() -> Self {
        PolyFn::NegInf
    }

    pub fn affine(slope: Scalar, intercept: Scalar) -> Self {
        PolyFn::Finite(Piecewise {
            knots: vec![zero()],
            values: vec![intercept],
            left_slope: slope.clone(),
            right_slope: slope,
        })
    }

    pub fn constant(c: Scalar) -> Self {
        Self::affine(zero(), c)
    }

    /// Builds a finite function from knots, values and ray slopes, then
    /// canonicalizes it.
    pub fn from_pieces(
        knots: Vec<Scalar>,
        values: Vec<Scalar>,
        left_slope: Scalar,
        right_slope: Scalar,
    ) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::Shape(format!(
                "{} breakpoints but {} values",
                knots.len(),
                values.len()
            )));
        }
        if knots.is_empty() {
            return Err(Error::Shape(
                "finite function needs at least one anchor point".into(),
            ));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Shape(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(PolyFn::Finite(Piecewise::canonical(
            knots,
            values,
            left_slope,
            right_slope,
        )))
    }

    /// `h_{[d,c]}`: slope `-c` left of zero, `-d` right of zero.
    pub fn h(band: &SlopeBand) -> Self {
        PolyFn::Finite(Piecewise::canonical(
            vec![zero()],
            vec![zero()],
            -band.c.clone(),
            -band.d.clone(),
        ))
    }

    /// `y ↦ f(y - dy) + dx`.
    pub fn translate(&self, dy: &Scalar, dx: &Scalar) -> Self {
        match self {
            PolyFn::NegInf => PolyFn::NegInf,
            PolyFn::Finite(p) => {
                let knots = p.knots.iter().map(|k| k + dy).collect();
                let values = p.values.iter().map(|v| v + dx).collect();
                PolyFn::Finite(Piecewise::canonical(
                    knots,
                    values,
                    p.left_slope.clone(),
                    p.right_slope.clone(),
                ))
            }
        }
    }

    pub fn is_neg_inf(&self) -> bool {
        matches!(self, PolyFn::NegInf)
    }

    pub fn as_finite(&self) -> Option<&Piecewise> {
        match self {
            PolyFn::NegInf => None,
            PolyFn::Finite(p) => Some(p),
        }
    }

    pub fn eval(&self, y: &Scalar) -> Ext {
        match self {
            PolyFn::NegInf => Ext::NegInf,
            PolyFn::Finite(p) => Ext::Finite(p.eval(y)),
        }
    }

    /// `(x, y) ∈ epi(f)`, i.e. `x >= f(y)`.
    pub fn epi_contains(&self, x: &Scalar, y: &Scalar) -> bool {
        match self {
            PolyFn::NegInf => true,
            PolyFn::Finite(p) => *x >= p.eval(y),
        }
    }

    pub fn max(&self, other: &PolyFn) -> PolyFn {
        match (self, other) {
            (PolyFn::NegInf, g) | (g, PolyFn::NegInf) => g.clone(),
            (PolyFn::Finite(f), PolyFn::Finite(g)) => {
                PolyFn::Finite(combine(f, g, Ordering::Greater))
            }
        }
    }

    pub fn min(&self, other: &PolyFn) -> PolyFn {
        match (self, other) {
            (PolyFn::NegInf, _) | (_, PolyFn::NegInf) => PolyFn::NegInf,
            (PolyFn::Finite(f), PolyFn::Finite(g)) => PolyFn::Finite(combine(f, g, Ordering::Less)),
        }
    }

    /// `self <= other` at every point, decided exactly.
    pub fn le_everywhere(&self, other: &PolyFn) -> bool {
        match (self, other) {
            (PolyFn::NegInf, _) => true,
            (PolyFn::Finite(_), PolyFn::NegInf) => false,
            (PolyFn::Finite(f), PolyFn::Finite(g)) => {
                let pts = merged_points(&f.knots, &g.knots);
                pts.iter().all(|p| f.eval(p) <= g.eval(p))
                    && f.left_slope >= g.left_slope
                    && f.right_slope <= g.right_slope
            }
        }
    }

    /// The function whose epigraph is `epi(h_{[d,c]}) + epi(self)`, i.e. the
    /// infimal convolution `y ↦ inf_u h(u) + f(y - u)`.
    ///
    /// The infimum is `-inf` exactly when one of the rays of `f` is steeper
    /// than the band allows: `f.right_slope < -c` (sending `u -> -inf`) or
    /// `f.left_slope > -d` (sending `u -> +inf`). Otherwise the objective in
    /// `u` is bounded below and piecewise linear with kinks at `u = 0` and
    /// `u = y - k` for each knot `k`, so the result is the lower envelope of
    /// `f` and the `h`-cones hung from each knot.
    pub fn gr(&self, band: &SlopeBand) -> PolyFn {
        let f = match self {
            PolyFn::NegInf => return PolyFn::NegInf,
            PolyFn::Finite(p) => p,
        };
        if gr_diverges(f, band) {
            return PolyFn::NegInf;
        }
        let h = PolyFn::h(band);
        let mut out = self.clone();
        for (k, v) in f.knots.iter().zip(&f.values) {
            out = out.min(&h.translate(k, v));
        }
        out
    }
}

fn gr_diverges(f: &Piecewise, band: &SlopeBand) -> bool {
    f.right_slope < -band.c.clone() || f.left_slope > -band.d.clone()
}

fn merged_points(a: &[Scalar], b: &[Scalar]) -> Vec<Scalar> {
    let mut pts: Vec<Scalar> = a.iter().chain(b.iter()).cloned().collect();
    pts.sort();
    pts.dedup();
    pts
}

/// Pointwise max (`keep == Greater`) or min (`keep == Less`) of two finite
/// functions. Every crossing becomes a candidate knot.
fn combine(f: &Piecewise, g: &Piecewise, keep: Ordering) -> Piecewise {
    let mut pts = merged_points(&f.knots, &g.knots);
    let diff = |y: &Scalar| f.eval(y) - g.eval(y);

    let mut crossings = Vec::new();
    for w in pts.windows(2) {
        let (da, db) = (diff(&w[0]), diff(&w[1]));
        if (da.is_positive() && db.is_negative()) || (da.is_negative() && db.is_positive()) {
            crossings.push(&w[0] + (&w[1] - &w[0]) * &da / (&da - &db));
        }
    }
    let first = pts[0].clone();
    let last = pts[pts.len() - 1].clone();
    let left_rate = &f.left_slope - &g.left_slope;
    if !left_rate.is_zero() {
        let root = &first - diff(&first) / &left_rate;
        if root < first {
            crossings.push(root);
        }
    }
    let right_rate = &f.right_slope - &g.right_slope;
    if !right_rate.is_zero() {
        let root = &last - diff(&last) / &right_rate;
        if root > last {
            crossings.push(root);
        }
    }
    pts.extend(crossings);
    pts.sort();
    pts.dedup();

    let pick = |a: Scalar, b: Scalar| if a.cmp(&b) == keep { a } else { b };
    let values: Vec<Scalar> = pts.iter().map(|p| pick(f.eval(p), g.eval(p))).collect();

    // Past the extreme candidates the two rays no longer cross, so comparing
    // one unit further out identifies the surviving ray.
    let probe_left = &pts[0] - int(1);
    let left = if f.eval(&probe_left).cmp(&g.eval(&probe_left)) == keep {
        f.left_slope.clone()
    } else {
        g.left_slope.clone()
    };
    let probe_right = &pts[pts.len() - 1] + int(1);
    let right = if f.eval(&probe_right).cmp(&g.eval(&probe_right)) == keep {
        f.right_slope.clone()
    } else {
        g.right_slope.clone()
    };
    Piecewise::canonical(pts, values, left, right)
}

/// Splits `(x, y) ∈ epi(gr_{[d,c]}(f))` into `(h(u), u) + (x - h(u), y - u)`
/// with the second summand in `epi(f)`, returning the trade `u`.
///
/// Among the minimizers of `u ↦ h(u) + f(y - u)` the one of least `|u|` is
/// chosen, ties going to the negative side. When `gr(f) = -inf` the split is
/// taken on the divergent ray at the point closest to zero that suffices.
pub fn epi_decompose(band: &SlopeBand, f: &PolyFn, x: &Scalar, y: &Scalar) -> Result<Scalar> {
    let p = match f {
        PolyFn::NegInf => {
            return Err(Error::Shape(
                "cannot decompose against the -inf function".into(),
            ));
        }
        PolyFn::Finite(p) => p,
    };
    let objective = |u: &Scalar| band.h(u) + p.eval(&(y - u));
    let outside = |required: Scalar| Error::OutsideEpigraph {
        x: format_scalar(x),
        y: format_scalar(y),
        required: format_scalar(&required),
    };

    if gr_diverges(p, band) {
        let mut found: Vec<Scalar> = Vec::new();
        if p.right_slope < -band.c.clone() {
            // u -> -inf; objective slope there is -c - right_slope > 0 in u.
            let k = &p.knots[p.knots.len() - 1];
            let u0 = std::cmp::min(zero(), y - k);
            let at = objective(&u0);
            let rate = -band.c.clone() - &p.right_slope;
            found.push(if at <= *x {
                u0.clone()
            } else {
                &u0 - (&at - x) / rate
            });
        }
        if p.left_slope > -band.d.clone() {
            // u -> +inf; objective slope there is -d - left_slope < 0 in u.
            let k = &p.knots[0];
            let u0 = std::cmp::max(zero(), y - k);
            let at = objective(&u0);
            let rate = -band.d.clone() - &p.left_slope;
            found.push(if at <= *x {
                u0.clone()
            } else {
                &u0 + (&at - x) / (-rate)
            });
        }
        return Ok(pick_smallest(found));
    }

    let mut candidates: Vec<Scalar> = p.knots.iter().map(|k| y - k).collect();
    candidates.push(zero());
    let scored: Vec<(Scalar, Scalar)> =
        candidates.into_iter().map(|u| (objective(&u), u)).collect();
    let best = scored
        .iter()
        .map(|(v, _)| v)
        .min()
        .cloned()
        .expect("at least one candidate");
    if *x < best {
        return Err(outside(best));
    }
    let minimizers = scored
        .into_iter()
        .filter(|(v, _)| *v == best)
        .map(|(_, u)| u)
        .collect();
    Ok(pick_smallest(minimizers))
}

fn pick_smallest(mut us: Vec<Scalar>) -> Scalar {
    us.sort_by(|a, b| a.abs().cmp(&b.abs()).then(a.cmp(b)));
    us.into_iter().next().expect("nonempty")
}

/// Concave piecewise-linear function on a closed interval, `-inf` outside.
/// Stored as its vertices in increasing abscissa order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcaveDual {
    points: Vec<(Scalar, Scalar)>,
}

impl ConcaveDual {
    pub fn new(points: Vec<(Scalar, Scalar)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Shape("concave dual needs a nonempty domain".into()));
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Shape(
                "dual vertices must be strictly increasing".into(),
            ));
        }
        let slopes: Vec<Scalar> = points
            .windows(2)
            .map(|w| (&w[1].1 - &w[0].1) / (&w[1].0 - &w[0].0))
            .collect();
        if slopes.windows(2).any(|s| s[0] < s[1]) {
            return Err(Error::Shape("dual is not concave".into()));
        }
        Ok(Self { points })
    }

    pub fn domain(&self) -> (&Scalar, &Scalar) {
        (&self.points[0].0, &self.points[self.points.len() - 1].0)
    }

    pub fn vertices(&self) -> &[(Scalar, Scalar)] {
        &self.points
    }

    pub fn eval(&self, x: &Scalar) -> Ext {
        let (lo, hi) = self.domain();
        if x < lo || x > hi {
            return Ext::NegInf;
        }
        let i = self.points.partition_point(|(px, _)| px < x);
        if i < self.points.len() && self.points[i].0 == *x {
            return Ext::Finite(self.points[i].1.clone());
        }
        let (x0, v0) = &self.points[i - 1];
        let (x1, v1) = &self.points[i];
        Ext::Finite(v0 + (v1 - v0) * (x - x0) / (x1 - x0))
    }

    /// `f(y) = sup_x f*(x) - x*y`; the supremum sits at a vertex.
    pub fn reconstruct(&self) -> PolyFn {
        self.points
            .iter()
            .map(|(x, v)| PolyFn::affine(-x.clone(), v.clone()))
            .reduce(|acc, line| acc.max(&line))
            .expect("nonempty")
    }
}

/// Concave conjugate `f*(x) = inf_y f(y) + x*y` of a finite convex function.
///
/// The domain is `[-right_slope, -left_slope]` and the vertices sit at
/// `x = -s` for each piece slope `s`.
pub fn conjugate(f: &PolyFn) -> Result<ConcaveDual> {
    let p = f
        .as_finite()
        .ok_or_else(|| Error::Shape("conjugate of the -inf function".into()))?;
    if !p.is_convex() {
        return Err(Error::NotConvex);
    }
    let slopes = p.slopes();
    let n = p.knots.len();
    let mut points: Vec<(Scalar, Scalar)> = Vec::with_capacity(n + 1);
    for j in (0..=n).rev() {
        let k = &p.knots[j.min(n - 1)];
        let x = -slopes[j].clone();
        let value = p.eval(k) + &x * k;
        if points.last().map(|(px, _)| *px == x).unwrap_or(false) {
            continue;
        }
        points.push((x, value));
    }
    ConcaveDual::new(points)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum PolyFnWire {
    NegInf,
    Finite {
        breakpoints: Vec<Rat>,
        values: Vec<Rat>,
        left_slope: Rat,
        right_slope: Rat,
    },
}

impl TryFrom<PolyFnWire> for PolyFn {
    type Error = Error;

    fn try_from(wire: PolyFnWire) -> Result<Self> {
        match wire {
            PolyFnWire::NegInf => Ok(PolyFn::NegInf),
            PolyFnWire::Finite {
                breakpoints,
                values,
                left_slope,
                right_slope,
            } => PolyFn::from_pieces(
                breakpoints.into_iter().map(|r| r.0).collect(),
                values.into_iter().map(|r| r.0).collect(),
                left_slope.0,
                right_slope.0,
            ),
        }
    }
}

impl From<PolyFn> for PolyFnWire {
    fn from(f: PolyFn) -> Self {
        match f {
            PolyFn::NegInf => PolyFnWire::NegInf,
            PolyFn::Finite(p) => PolyFnWire::Finite {
                breakpoints: p.knots.into_iter().map(Rat).collect(),
                values: p.values.into_iter().map(Rat).collect(),
                left_slope: Rat(p.left_slope),
                right_slope: Rat(p.right_slope),
            },
        }
    }
}

impl fmt::Display for PolyFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolyFn::NegInf => write!(f, "-inf"),
            PolyFn::Finite(p) => {
                write!(f, "[slope {} | ", p.left_slope)?;
                for (i, (k, v)) in p.knots.iter().zip(&p.values).enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "({k}, {v})")?;
                }
                write!(f, " | slope {}]", p.right_slope)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    fn band(d: i64, c: i64) -> SlopeBand {
        SlopeBand::new(int(d), int(c)).unwrap()
    }

    fn abs() -> PolyFn {
        PolyFn::from_pieces(vec![int(0)], vec![int(0)], int(-1), int(1)).unwrap()
    }

    fn at(f: &PolyFn, y: i64) -> Ext {
        f.eval(&int(y))
    }

    #[test]
    fn h_values() {
        let h = PolyFn::h(&band(1, 2));
        assert_eq!(at(&h, -3), Ext::Finite(int(6)));
        assert_eq!(at(&h, 2), Ext::Finite(int(-2)));
        let flat = PolyFn::h(&band(0, 0));
        assert_eq!(flat, PolyFn::constant(int(0)));
        for y in -5..5 {
            assert_eq!(at(&flat, y), Ext::Finite(int(0)));
            assert_eq!(at(&h, y), Ext::Finite(band(1, 2).h(&int(y))));
        }
    }

    #[test]
    fn band_rejects_inverted() {
        assert!(SlopeBand::new(int(2), int(1)).is_err());
    }

    #[test]
    fn eval_basics() {
        let h = PolyFn::h(&band(1, 2));
        assert_eq!(at(&h, 0), Ext::Finite(int(0)));
        assert_eq!(at(&PolyFn::NegInf, 5), Ext::NegInf);
        let m = h.max(&PolyFn::constant(int(1)));
        assert_eq!(at(&m, 0), Ext::Finite(int(1)));
    }

    #[test]
    fn max_of_lines_is_h() {
        let a = PolyFn::affine(int(-1), int(0));
        let b = PolyFn::affine(int(-2), int(0));
        assert_eq!(a.max(&b), PolyFn::h(&band(1, 2)));
    }

    #[test]
    fn min_absorbs_neg_inf_and_max_ignores_it() {
        let f = abs();
        assert_eq!(f.min(&PolyFn::NegInf), PolyFn::NegInf);
        assert_eq!(f.max(&PolyFn::NegInf), f);
    }

    #[test]
    fn max_abs_one_has_crossing_breakpoints() {
        let m = abs().max(&PolyFn::constant(int(1)));
        let p = m.as_finite().unwrap();
        assert_eq!(p.knots(), &[int(-1), int(1)]);
        assert_eq!(p.values(), &[int(1), int(1)]);
        assert_eq!(p.left_slope(), &int(-1));
        assert_eq!(p.right_slope(), &int(1));
    }

    #[test]
    fn canonical_drops_collinear_knots() {
        let f = PolyFn::from_pieces(
            vec![int(-1), int(0), int(2)],
            vec![int(-2), int(0), int(4)],
            int(2),
            int(2),
        )
        .unwrap();
        assert_eq!(f, PolyFn::affine(int(2), int(0)));
        assert!(f.as_finite().unwrap().breakpoints().is_empty());
    }

    #[test]
    fn from_pieces_rejects_bad_input() {
        assert!(
            PolyFn::from_pieces(vec![int(1), int(0)], vec![int(0), int(0)], int(0), int(0))
                .is_err()
        );
        assert!(PolyFn::from_pieces(vec![int(0)], vec![], int(0), int(0)).is_err());
        assert!(PolyFn::from_pieces(vec![], vec![], int(0), int(0)).is_err());
    }

    #[test]
    fn gr_leaves_in_band_function_alone() {
        let f = PolyFn::affine(int(-1), int(0));
        assert_eq!(f.gr(&band(1, 2)), f);
    }

    #[test]
    fn gr_of_constant_diverges() {
        assert_eq!(PolyFn::constant(int(0)).gr(&band(1, 2)), PolyFn::NegInf);
        assert_eq!(PolyFn::NegInf.gr(&band(1, 2)), PolyFn::NegInf);
    }

    #[test]
    fn gr_clips_abs() {
        // Brute force: inf over u in a fine grid of h(u) + |y - u|.
        let b = band(1, 2);
        let g = abs().gr(&b);
        for yi in -8..=8 {
            let y = ratio(yi, 2);
            let grid_min = (-400..=400)
                .map(|ui| {
                    let u = ratio(ui, 20);
                    b.h(&u) + (&y - &u).abs()
                })
                .min()
                .unwrap();
            assert_eq!(g.eval(&y), Ext::Finite(grid_min.clone()));
            assert_eq!(grid_min, -y.clone());
        }
        assert_eq!(g, PolyFn::affine(int(-1), int(0)));
    }

    #[test]
    fn decompose_no_trade_inside_band() {
        let b = band(1, 2);
        let f = PolyFn::affine(ratio(-3, 2), int(1));
        let u = epi_decompose(&b, &f, &int(5), &int(2)).unwrap();
        assert_eq!(u, int(0));
    }

    #[test]
    fn decompose_abs_example() {
        let b = band(1, 2);
        let u = epi_decompose(&b, &abs(), &int(0), &int(1)).unwrap();
        assert_eq!(u, int(1));
        assert_eq!(b.h(&u), int(-1));
        assert!(abs().epi_contains(&(int(0) - b.h(&u)), &(int(1) - &u)));
    }

    #[test]
    fn decompose_rejects_outside_point() {
        let b = band(1, 2);
        let err = epi_decompose(&b, &abs(), &ratio(-3, 2), &int(1)).unwrap_err();
        assert!(matches!(err, Error::OutsideEpigraph { .. }));
        assert!(epi_decompose(&b, &PolyFn::NegInf, &int(0), &int(0)).is_err());
    }

    #[test]
    fn decompose_on_divergent_ray() {
        let b = band(1, 2);
        let f = PolyFn::constant(int(0));
        let (x, y) = (int(-3), int(0));
        let u = epi_decompose(&b, &f, &x, &y).unwrap();
        assert!(f.epi_contains(&(&x - b.h(&u)), &(&y - &u)));
    }

    #[test]
    fn epi_membership() {
        let h = PolyFn::h(&band(1, 2));
        assert!(h.epi_contains(&int(0), &int(0)));
        assert!(!h.epi_contains(&int(5), &int(-3)));
        assert!(PolyFn::NegInf.epi_contains(&int(-100), &int(7)));
    }

    #[test]
    fn conjugate_examples() {
        let dual = conjugate(&PolyFn::h(&band(1, 2))).unwrap();
        assert_eq!(dual.domain(), (&int(1), &int(2)));
        assert_eq!(dual.eval(&ratio(3, 2)), Ext::Finite(int(0)));
        assert_eq!(dual.eval(&int(3)), Ext::NegInf);

        let line = conjugate(&PolyFn::affine(int(-1), int(0))).unwrap();
        assert_eq!(line.vertices(), &[(int(1), int(0))]);

        let a = conjugate(&abs()).unwrap();
        assert_eq!(a.domain(), (&int(-1), &int(1)));
        for xi in -4..=4 {
            let x = ratio(xi, 4);
            let grid_inf = (-200..=200)
                .map(|yi| {
                    let y = ratio(yi, 10);
                    y.abs() + &x * &y
                })
                .min()
                .unwrap();
            assert_eq!(a.eval(&x), Ext::Finite(grid_inf));
        }
    }

    #[test]
    fn conjugate_rejects_nonconvex() {
        let f = abs().min(&PolyFn::constant(int(1)));
        assert!(matches!(conjugate(&f), Err(Error::NotConvex)));
    }

    #[test]
    fn json_forms() {
        let f = abs().max(&PolyFn::constant(int(1)));
        let text = serde_json::to_string(&f).unwrap();
        assert_eq!(
            text,
            r#"{"kind":"finite","breakpoints":["-1","1"],"values":["1","1"],"left_slope":"-1","right_slope":"1"}"#
        );
        let back: PolyFn = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
        assert_eq!(
            serde_json::to_string(&PolyFn::NegInf).unwrap(),
            r#"{"kind":"neg_inf"}"#
        );
        let pairs: PolyFn = serde_json::from_str(
            r#"{"kind":"finite","breakpoints":[["-2","2"],["1","1"]],"values":["1","1"],"left_slope":"-1","right_slope":"1"}"#,
        )
        .unwrap();
        assert_eq!(pairs, f);
    }
}
