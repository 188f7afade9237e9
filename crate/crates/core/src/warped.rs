//! Warped metrics `d_Γ^t` on finite metric spaces, cone distances, warped
//! balls and neighbourhood stabilization.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::{self, FiniteAction};
use crate::error::{LabError, Result};
use crate::space::FiniteMeasureSpace;
use crate::subset;
use crate::tol;

/// Dense finite metric over the atoms of a measure space.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetric {
    space: FiniteMeasureSpace,
    dist: DMatrix<f64>,
    diameter: f64,
}

impl FiniteMetric {
    pub fn new(space: FiniteMeasureSpace, dist: DMatrix<f64>) -> Result<Self> {
        let n = space.len();
        if dist.nrows() != n || dist.ncols() != n {
            return Err(LabError::DimensionMismatch { expected: n, got: dist.nrows().max(dist.ncols()) });
        }
        let mut diameter: f64 = 0.0;
        for x in 0..n {
            if dist[(x, x)] != 0.0 {
                return Err(LabError::InvalidMetric(format!("d({x},{x}) = {} is not zero", dist[(x, x)])));
            }
            for y in 0..n {
                let d = dist[(x, y)];
                if !(d.is_finite() && d >= 0.0) {
                    return Err(LabError::InvalidMetric(format!("d({x},{y}) = {d} is not a finite nonnegative real")));
                }
                if d != dist[(y, x)] {
                    return Err(LabError::InvalidMetric(format!("d({x},{y}) differs from d({y},{x})")));
                }
                diameter = diameter.max(d);
            }
        }
        if let Some((x, y, z, gap)) = triangle_violation(&dist, tol::TRIANGLE * diameter.max(1.0)) {
            return Err(LabError::InvalidMetric(format!("d({x},{z}) exceeds d({x},{y}) + d({y},{z}) by {gap}")));
        }
        Ok(Self { space, dist, diameter })
    }

    /// `d(x,y) = value` for `x ≠ y`.
    pub fn discrete(space: FiniteMeasureSpace, value: f64) -> Result<Self> {
        let n = space.len();
        Self::new(space, DMatrix::from_fn(n, n, |x, y| if x == y { 0.0 } else { value }))
    }

    /// Chord distance `2 sin(π|x−y|/n)` of the regular `n`-gon on the unit
    /// circle; diameter 2 for even `n`.
    pub fn cycle_chord(space: FiniteMeasureSpace) -> Result<Self> {
        let n = space.len();
        let dist = DMatrix::from_fn(n, n, |x, y| {
            let k = x.abs_diff(y).min(n - x.abs_diff(y));
            if k == 0 {
                0.0
            } else {
                2.0 * (std::f64::consts::PI * k as f64 / n as f64).sin()
            }
        });
        // sin rounding can break the triangle inequality at the last ulp
        Self::new(space, shortest_paths(&dist))
    }

    /// ℓ∞ distance on `(Z/n)²` (atom `i·n + j` is `(i, j)`), scaled by
    /// `4/n` so that it has diameter 2 for even `n`.
    pub fn torus_linf(space: FiniteMeasureSpace, n: usize) -> Result<Self> {
        space.check_len(n * n)?;
        let circ = |a: usize, b: usize| a.abs_diff(b).min(n - a.abs_diff(b));
        let dist = DMatrix::from_fn(n * n, n * n, |p, q| {
            let k = circ(p / n, q / n).max(circ(p % n, q % n));
            4.0 * k as f64 / n as f64
        });
        Self::new(space, dist)
    }

    pub fn space(&self) -> &FiniteMeasureSpace {
        &self.space
    }

    pub fn dist(&self) -> &DMatrix<f64> {
        &self.dist
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    /// Smallest distance between distinct atoms (`+inf` on one atom).
    pub fn min_gap(&self) -> f64 {
        let n = self.len();
        let mut gap = f64::INFINITY;
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    gap = gap.min(self.dist[(x, y)]);
                }
            }
        }
        gap
    }
}

/// First triple with `d(x,z) > d(x,y) + d(y,z) + slack`.
fn triangle_violation(d: &DMatrix<f64>, slack: f64) -> Option<(usize, usize, usize, f64)> {
    let n = d.nrows();
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let gap = d[(x, z)] - d[(x, y)] - d[(y, z)];
                if gap > slack {
                    return Some((x, y, z, gap));
                }
            }
        }
    }
    None
}

/// Rescales by `2/diameter` when the diameter exceeds 2.
pub fn normalize_diameter(metric: &FiniteMetric) -> Result<FiniteMetric> {
    if metric.diameter <= 0.0 {
        return Err(LabError::InvalidMetric("diameter is zero".into()));
    }
    if metric.diameter <= 2.0 {
        return Ok(metric.clone());
    }
    let scale = 2.0 / metric.diameter;
    let dist = metric.dist.map(|d| d * scale);
    Ok(FiniteMetric { space: metric.space.clone(), dist, diameter: 2.0 })
}

/// All-pairs shortest paths by Floyd–Warshall.
pub fn apsp_floyd(w: &DMatrix<f64>) -> DMatrix<f64> {
    let n = w.nrows();
    let mut d = w.clone();
    for k in 0..n {
        for i in 0..n {
            let dik = d[(i, k)];
            if dik.is_infinite() {
                continue;
            }
            for j in 0..n {
                let via = dik + d[(k, j)];
                if via < d[(i, j)] {
                    d[(i, j)] = via;
                }
            }
        }
    }
    d
}

/// All-pairs shortest paths by dense Dijkstra from every source.
pub fn apsp_dijkstra(w: &DMatrix<f64>) -> DMatrix<f64> {
    let n = w.nrows();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|src| {
            let mut dist = vec![f64::INFINITY; n];
            let mut done = vec![false; n];
            dist[src] = 0.0;
            for _ in 0..n {
                let mut u = usize::MAX;
                for v in 0..n {
                    if !done[v] && (u == usize::MAX || dist[v] < dist[u]) {
                        u = v;
                    }
                }
                if dist[u].is_infinite() {
                    break;
                }
                done[u] = true;
                for v in 0..n {
                    let via = dist[u] + w[(u, v)];
                    if via < dist[v] {
                        dist[v] = via;
                    }
                }
            }
            dist
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Floyd–Warshall up to 512 atoms, Dijkstra above.
pub fn shortest_paths(w: &DMatrix<f64>) -> DMatrix<f64> {
    if w.nrows() <= 512 {
        apsp_floyd(w)
    } else {
        apsp_dijkstra(w)
    }
}

/// A scale `t` with its warped metric.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpedLevel {
    t: f64,
    base: FiniteMetric,
    action: FiniteAction,
    warped: DMatrix<f64>,
}

/// Constraint graph of `d_Γ^t`: `t·d` on every pair, `ℓ(s)` on `(x, s·x)`.
pub fn constraint_weights(metric: &FiniteMetric, action: &FiniteAction, t: f64) -> DMatrix<f64> {
    let mut w = metric.dist.map(|d| t * d);
    for s in 0..action.gens().len() {
        let len = action.gens().length(s) as f64;
        for x in 0..action.len() {
            let y = action.apply(s, x);
            if x != y && len < w[(x, y)] {
                w[(x, y)] = len;
                w[(y, x)] = len;
            }
        }
    }
    w
}

/// `d_Γ^t`: the largest metric below `t·d` with `d(x, s·x) ≤ ℓ(s)`.
pub fn warp(metric: &FiniteMetric, action: &FiniteAction, t: f64) -> Result<WarpedLevel> {
    if !(t >= 1.0 && t.is_finite()) {
        return Err(LabError::InvalidParameter(format!("warp scale must be a finite t >= 1, got {t}")));
    }
    metric.space.check_len(action.len())?;
    let warped = shortest_paths(&constraint_weights(metric, action, t));
    Ok(WarpedLevel { t, base: metric.clone(), action: action.clone(), warped })
}

/// Constraint violations of a warped level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpedCheck {
    /// `max (d_Γ^t − t·d)`.
    pub above_scaled: f64,
    /// `max (d_Γ^t(x, s·x) − ℓ(s))`.
    pub above_generator: f64,
    /// `max (d(x,z) − d(x,y) − d(y,z))`.
    pub triangle: f64,
    /// `max |d − min_y (w(x,y) + d(y,z))|`: shortest-path optimality, which
    /// certifies that no admissible metric is larger.
    pub optimality: f64,
    pub holds: bool,
}

impl WarpedLevel {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn base(&self) -> &FiniteMetric {
        &self.base
    }

    pub fn action(&self) -> &FiniteAction {
        &self.action
    }

    pub fn warped(&self) -> &DMatrix<f64> {
        &self.warped
    }

    pub fn len(&self) -> usize {
        self.action.len()
    }

    pub fn is_empty(&self) -> bool {
        self.action.is_empty()
    }

    pub fn distance(&self, x: usize, y: usize) -> f64 {
        self.warped[(x, y)]
    }

    pub fn diameter(&self) -> f64 {
        self.warped.iter().copied().fold(0.0, f64::max)
    }

    /// `{y : d_Γ^t(x,y) ≤ R}`.
    pub fn ball(&self, x: usize, r: f64) -> Vec<usize> {
        (0..self.len()).filter(|&y| self.warped[(x, y)] <= r).collect()
    }

    /// Closed neighbourhood `N_R(A) = {y : d_Γ^t(A, y) ≤ R}`.
    pub fn neighbourhood(&self, a: &[usize], r: f64) -> Vec<usize> {
        (0..self.len()).filter(|&y| a.iter().any(|&x| self.warped[(x, y)] <= r)).collect()
    }

    /// `min_{a∈A, c∈C} d_Γ^t(a, c)` (`+inf` if either set is empty).
    pub fn set_distance(&self, a: &[usize], c: &[usize]) -> f64 {
        let mut best = f64::INFINITY;
        for &x in a {
            for &y in c {
                best = best.min(self.warped[(x, y)]);
            }
        }
        best
    }

    pub fn check(&self) -> WarpedCheck {
        let n = self.len();
        let d = &self.warped;
        let mut above_scaled: f64 = f64::NEG_INFINITY;
        for x in 0..n {
            for y in 0..n {
                above_scaled = above_scaled.max(d[(x, y)] - self.t * self.base.dist[(x, y)]);
            }
        }
        let mut above_generator: f64 = f64::NEG_INFINITY;
        for s in 0..self.action.gens().len() {
            let len = self.action.gens().length(s) as f64;
            for x in 0..n {
                above_generator = above_generator.max(d[(x, self.action.apply(s, x))] - len);
            }
        }
        let mut triangle: f64 = f64::NEG_INFINITY;
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    triangle = triangle.max(d[(x, z)] - d[(x, y)] - d[(y, z)]);
                }
            }
        }
        let w = constraint_weights(&self.base, &self.action, self.t);
        let mut optimality: f64 = 0.0;
        for x in 0..n {
            for z in 0..n {
                if x == z {
                    continue;
                }
                let best = (0..n).map(|y| w[(x, y)] + d[(y, z)]).fold(f64::INFINITY, f64::min);
                optimality = optimality.max((best - d[(x, z)]).abs());
            }
        }
        let slack = tol::TRIANGLE * self.t.max(1.0) * self.base.diameter.max(1.0);
        let holds = above_scaled <= slack && above_generator <= slack && triangle <= slack && optimality <= slack;
        WarpedCheck { above_scaled, above_generator, triangle, optimality, holds }
    }
}

/// Warped levels over one base space, joined by `|t₁ − t₂|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCone {
    levels: Vec<WarpedLevel>,
}

impl SparseCone {
    /// One level per scale; scales must be distinct and the base diameter
    /// at most 2.
    pub fn build(metric: &FiniteMetric, action: &FiniteAction, ts: &[f64]) -> Result<Self> {
        if ts.is_empty() {
            return Err(LabError::Empty("cone levels"));
        }
        if metric.diameter > 2.0 {
            return Err(LabError::InvalidMetric(format!(
                "cone base needs diameter <= 2, got {}; normalize it first",
                metric.diameter
            )));
        }
        let mut sorted = ts.to_vec();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(LabError::InvalidParameter("cone scales must be distinct".into()));
        }
        let levels = sorted.par_iter().map(|&t| warp(metric, action, t)).collect::<Result<Vec<_>>>()?;
        Ok(Self { levels })
    }

    /// Scales `t = 2^a, …, 2^b`.
    pub fn dyadic(metric: &FiniteMetric, action: &FiniteAction, a: u32, b: u32) -> Result<Self> {
        let ts: Vec<f64> = (a..=b).map(|e| 2f64.powi(e as i32)).collect();
        Self::build(metric, action, &ts)
    }

    pub fn levels(&self) -> &[WarpedLevel] {
        &self.levels
    }

    pub fn scales(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.t).collect()
    }

    pub fn level(&self, t: f64) -> Result<&WarpedLevel> {
        self.levels
            .iter()
            .find(|l| l.t == t)
            .ok_or_else(|| LabError::InvalidParameter(format!("no cone level at t = {t}")))
    }
}

/// `d_Γ^{min(t₁,t₂)}(x₁,x₂) + |t₁ − t₂|`.
pub fn cone_distance(cone: &SparseCone, p: (usize, f64), q: (usize, f64)) -> Result<f64> {
    let lp = cone.level(p.1)?;
    let lq = cone.level(q.1)?;
    lp.action.space().check_atom(p.0)?;
    lp.action.space().check_atom(q.0)?;
    let low = if lp.t <= lq.t { lp } else { lq };
    Ok(low.warped[(p.0, q.0)] + (lp.t - lq.t).abs())
}

pub fn warped_ball(level: &WarpedLevel, x: usize, r: f64) -> Result<Vec<usize>> {
    level.action.space().check_atom(x)?;
    if !(r >= 0.0) {
        return Err(LabError::InvalidParameter(format!("radius must be >= 0, got {r}")));
    }
    Ok(level.ball(x, r))
}

/// `N_R(A; d_Γ^t)` at one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighbourhoodAtScale {
    pub t: f64,
    pub neighbourhood: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilizationReport {
    pub radius: f64,
    pub per_t: Vec<NeighbourhoodAtScale>,
    /// Neighbourhood at the largest scale.
    pub stable_value: Vec<usize>,
    /// Smallest listed scale from which the neighbourhood no longer changes.
    pub first_stable_t: f64,
    /// `B_⌊R⌋·A`.
    pub ball_image: Vec<usize>,
    /// Scales above `R / min_gap` admit no metric edge inside a path of
    /// length `≤ R`, so there the neighbourhood must equal `B_⌊R⌋·A`.
    pub threshold_t: f64,
    pub threshold_reached: bool,
    /// Every neighbourhood contains `B_⌊R⌋·A`, the chain is nonincreasing
    /// in `t`, and it equals `B_⌊R⌋·A` beyond the threshold.
    pub holds: bool,
}

pub fn neighborhood_stabilization(
    metric: &FiniteMetric,
    action: &FiniteAction,
    a: &[usize],
    r: f64,
    t_list: &[f64],
) -> Result<StabilizationReport> {
    if t_list.is_empty() {
        return Err(LabError::Empty("t list"));
    }
    if !(r >= 0.0) {
        return Err(LabError::InvalidParameter(format!("radius must be >= 0, got {r}")));
    }
    action.space().check_subset(a)?;
    let a = subset::normalized(a);
    let mut ts = t_list.to_vec();
    ts.sort_by(f64::total_cmp);
    let per_t: Vec<NeighbourhoodAtScale> = ts
        .par_iter()
        .map(|&t| warp(metric, action, t).map(|l| NeighbourhoodAtScale { t, neighbourhood: l.neighbourhood(&a, r) }))
        .collect::<Result<Vec<_>>>()?;
    let ball = action::ball_image(action, &a, r.floor() as u64)?;
    let stable_value = per_t.last().expect("nonempty").neighbourhood.clone();
    let first = per_t.iter().rposition(|p| p.neighbourhood != stable_value).map_or(0, |i| i + 1);
    let threshold_t = r / metric.min_gap();
    let is_sub = |small: &[usize], big: &[usize]| small.iter().all(|x| big.binary_search(x).is_ok());
    let mut holds = per_t.windows(2).all(|w| is_sub(&w[1].neighbourhood, &w[0].neighbourhood));
    holds &= per_t.iter().all(|p| is_sub(&ball, &p.neighbourhood));
    holds &= per_t.iter().filter(|p| p.t > threshold_t).all(|p| p.neighbourhood == ball);
    Ok(StabilizationReport {
        radius: r,
        threshold_reached: per_t.iter().any(|p| p.t > threshold_t),
        first_stable_t: per_t[first].t,
        per_t,
        stable_value,
        ball_image: ball,
        threshold_t,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::{gen_cycle, GeneratorSet};
    use approx::assert_abs_diff_eq;

    fn swap_pair() -> (FiniteMetric, FiniteAction) {
        let a = gen_cycle(2, None).unwrap();
        let m = FiniteMetric::discrete(a.space().clone(), 2.0).unwrap();
        (m, a)
    }

    fn trivial(n: usize) -> FiniteAction {
        let space = FiniteMeasureSpace::uniform(n).unwrap();
        let gens = GeneratorSet::from_names(&[("e", "e", 0)]).unwrap();
        FiniteAction::new(space, gens, vec![(0..n).collect()]).unwrap()
    }

    #[test]
    fn metric_validation() {
        let space = FiniteMeasureSpace::uniform(3).unwrap();
        let bad = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0]);
        assert!(matches!(FiniteMetric::new(space.clone(), bad), Err(LabError::InvalidMetric(_))));
        let asym = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 1.0, 1.5, 0.0, 1.0, 1.0, 1.0, 0.0]);
        assert!(FiniteMetric::new(space.clone(), asym).is_err());
        let c = FiniteMetric::cycle_chord(FiniteMeasureSpace::uniform(8).unwrap()).unwrap();
        assert_abs_diff_eq!(c.diameter(), 2.0, epsilon = 1e-15);
        let t = FiniteMetric::torus_linf(FiniteMeasureSpace::uniform(16).unwrap(), 4).unwrap();
        assert_eq!(t.diameter(), 2.0);
        assert_eq!(t.min_gap(), 1.0);
    }

    #[test]
    fn normalize_examples() {
        let space = FiniteMeasureSpace::uniform(2).unwrap();
        let m = FiniteMetric::discrete(space.clone(), 2.0).unwrap();
        assert_eq!(normalize_diameter(&m).unwrap(), m);
        let m4 = FiniteMetric::discrete(space, 4.0).unwrap();
        assert_eq!(normalize_diameter(&m4).unwrap().dist()[(0, 1)], 2.0);
        let single = FiniteMetric::discrete(FiniteMeasureSpace::uniform(1).unwrap(), 1.0).unwrap();
        assert!(normalize_diameter(&single).is_err());
    }

    #[test]
    fn warp_examples() {
        let (m, a) = swap_pair();
        assert_eq!(warp(&m, &a, 10.0).unwrap().distance(0, 1), 1.0);
        assert_eq!(warp(&m, &a, 1.0).unwrap().distance(0, 1), 1.0);
        assert!(warp(&m, &a, 0.4).is_err());

        let base = FiniteMetric::cycle_chord(FiniteMeasureSpace::uniform(6).unwrap()).unwrap();
        let level = warp(&base, &trivial(6), 3.0).unwrap();
        for x in 0..6 {
            for y in 0..6 {
                assert_eq!(level.distance(x, y), 3.0 * base.dist()[(x, y)]);
            }
        }
        assert!(level.check().holds);
    }

    #[test]
    fn floyd_and_dijkstra_agree() {
        let a = gen_cycle(9, None).unwrap();
        let base = FiniteMetric::cycle_chord(a.space().clone()).unwrap();
        let w = constraint_weights(&base, &a, 5.0);
        let f = apsp_floyd(&w);
        let d = apsp_dijkstra(&w);
        assert!((f - d).abs().max() < 1e-12);
    }

    #[test]
    fn cycle_ball_is_group_ball_at_large_t() {
        let a = gen_cycle(8, None).unwrap();
        let base = FiniteMetric::cycle_chord(a.space().clone()).unwrap();
        let level = warp(&base, &a, 100.0).unwrap();
        assert_eq!(warped_ball(&level, 0, 2.0).unwrap(), vec![0, 1, 2, 6, 7]);
        assert_eq!(warped_ball(&level, 3, 0.0).unwrap(), vec![3]);
        assert_eq!(warped_ball(&level, 3, level.diameter()).unwrap().len(), 8);
    }

    #[test]
    fn cone_examples() {
        let (m, a) = swap_pair();
        let cone = SparseCone::build(&m, &a, &[2.0, 4.0, 8.0]).unwrap();
        assert_eq!(cone_distance(&cone, (0, 2.0), (1, 2.0)).unwrap(), 1.0);
        assert_eq!(cone_distance(&cone, (0, 2.0), (0, 4.0)).unwrap(), 2.0);
        assert_eq!(cone_distance(&cone, (0, 2.0), (1, 8.0)).unwrap(), 7.0);
        assert!(cone_distance(&cone, (0, 3.0), (1, 8.0)).is_err());
        let wide = FiniteMetric::discrete(a.space().clone(), 3.0).unwrap();
        assert!(SparseCone::build(&wide, &a, &[1.0]).is_err());
    }

    #[test]
    fn stabilization_examples() {
        let (m, a) = swap_pair();
        let r = neighborhood_stabilization(&m, &a, &[0], 1.0, &[1.0, 10.0, 100.0]).unwrap();
        assert_eq!(r.stable_value, vec![0, 1]);
        assert_eq!(r.ball_image, vec![0, 1]);
        assert!(r.holds);

        let r = neighborhood_stabilization(&m, &a, &[0], 0.5, &[1.0, 10.0]).unwrap();
        assert_eq!(r.stable_value, vec![0]);
        assert!(r.holds && r.threshold_reached);

        let base = FiniteMetric::cycle_chord(FiniteMeasureSpace::uniform(6).unwrap()).unwrap();
        let r = neighborhood_stabilization(&base, &trivial(6), &[2], 1.5, &[1.0, 2.0, 4.0, 8.0]).unwrap();
        assert_eq!(r.stable_value, vec![2]);
        assert!(r.holds);
        assert_eq!(r.first_stable_t, 2.0);
    }
}
