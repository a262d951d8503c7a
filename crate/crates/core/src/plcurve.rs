//! Piecewise-linear paths in trees and in the plane.
//!
//! A [`TreePath`] stores vertex-valued breakpoints; between breakpoints the
//! path traverses the geodesic between the two vertices at constant speed.
//! Most constructed paths are *edgewise* (consecutive breakpoint vertices are
//! adjacent, one edge per segment); a path whose segments span several edges
//! can be refined to an edgewise one with [`TreePath::refine_to_edges`], which
//! is how a low-level path is re-expressed inside a finer tree containing it.
//!
//! All evaluation is exact. Interpolation parameters must stay dyadic; a
//! query that would need a non-dyadic ratio is rejected rather than rounded.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::construct::OrderedTriangle;
use crate::exactnum::{cmp_sqrt_vs_quad, sqrt_le_quad, Dyadic, NumError, Quad};
use crate::mtree::{MetricTree, TreeError, TreeLocation, VertexId};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum PathError {
    #[error("path and map reference different trees")]
    TreeMismatch,
    #[error("parameter outside [0, 1]")]
    ParamOutOfRange,
    #[error("invalid breakpoints: {0}")]
    BadBreakpoints(String),
    #[error("endpoint mismatch: concatenation with reversal needs first(1) = second(1)")]
    EndpointMismatch,
    #[error("segment endpoints are not adjacent vertices")]
    NonAdjacentSegment,
    #[error("interpolation parameter is not dyadic")]
    NonDyadicInterpolation,
    #[error("segment slope is not horizontal, vertical, or ±1")]
    UnsupportedSlope,
    #[error("planar map is missing an image for {0}")]
    MissingImage(VertexId),
    #[error("planar map violates its declared Lipschitz bound on the edge below {0}")]
    LipschitzViolation(VertexId),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// A point of the plane with dyadic coordinates.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Point2 {
    pub x: Dyadic,
    pub y: Dyadic,
}

impl Point2 {
    pub fn new(x: Dyadic, y: Dyadic) -> Self {
        Point2 { x, y }
    }

    pub fn from_ints(x: i64, y: i64) -> Self {
        Point2::new(Dyadic::from_int(x), Dyadic::from_int(y))
    }

    pub fn midpoint(a: &Point2, b: &Point2) -> Point2 {
        Point2::new(Dyadic::midpoint(&a.x, &b.x), Dyadic::midpoint(&a.y, &b.y))
    }

    pub fn squared_distance(a: &Point2, b: &Point2) -> Dyadic {
        let dx = &a.x - &b.x;
        let dy = &a.y - &b.y;
        &dx.sq() + &dy.sq()
    }

    /// z-component of `(b − a) × (c − a)`; sign gives the orientation of the
    /// triple.
    pub fn cross(a: &Point2, b: &Point2, c: &Point2) -> Dyadic {
        let abx = &b.x - &a.x;
        let aby = &b.y - &a.y;
        let acx = &c.x - &a.x;
        let acy = &c.y - &a.y;
        &(&abx * &acy) - &(&aby * &acx)
    }

    /// `(a − b) · (c − b)`.
    pub fn dot_at(b: &Point2, a: &Point2, c: &Point2) -> Dyadic {
        let ux = &a.x - &b.x;
        let uy = &a.y - &b.y;
        let vx = &c.x - &b.x;
        let vy = &c.y - &b.y;
        &(&ux * &vx) + &(&uy * &vy)
    }
}

impl std::fmt::Debug for Point2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

fn check_params<T>(breakpoints: &[(Dyadic, T)]) -> Result<(), PathError> {
    if breakpoints.len() < 2 {
        return Err(PathError::BadBreakpoints("need at least two breakpoints".into()));
    }
    if !breakpoints[0].0.is_zero() {
        return Err(PathError::BadBreakpoints("first parameter must be 0".into()));
    }
    if breakpoints.last().unwrap().0 != Dyadic::one() {
        return Err(PathError::BadBreakpoints("last parameter must be 1".into()));
    }
    for w in breakpoints.windows(2) {
        if w[0].0 >= w[1].0 {
            return Err(PathError::BadBreakpoints("parameters must strictly increase".into()));
        }
    }
    Ok(())
}

/// Index of the segment containing `t`, with breakpoints hit exactly.
fn segment_index<T>(breakpoints: &[(Dyadic, T)], t: &Dyadic) -> Result<usize, PathError> {
    if t.sign() < 0 || *t > Dyadic::one() {
        return Err(PathError::ParamOutOfRange);
    }
    let i = breakpoints.partition_point(|(p, _)| p <= t);
    Ok(i.saturating_sub(1).min(breakpoints.len() - 2))
}

/// Interpolation fraction of `t` within `[a, b]`; must be dyadic.
fn segment_fraction(a: &Dyadic, b: &Dyadic, t: &Dyadic) -> Result<Dyadic, PathError> {
    (t - a)
        .checked_div(&(b - a))
        .ok_or(PathError::NonDyadicInterpolation)
}

fn reverse_breakpoints<T: Clone>(breakpoints: &[(Dyadic, T)]) -> Vec<(Dyadic, T)> {
    breakpoints
        .iter()
        .rev()
        .map(|(t, v)| (&Dyadic::one() - t, v.clone()))
        .collect()
}

/// Breakpoints of `first ∗ reverse(second)`: `first` on [0, 1/2], `second`
/// traversed backwards on [1/2, 1]. The shared value at 1/2 appears once.
fn concat_reverse_breakpoints<T: Clone + PartialEq>(
    first: &[(Dyadic, T)],
    second: &[(Dyadic, T)],
) -> Result<Vec<(Dyadic, T)>, PathError> {
    if first.last().unwrap().1 != second.last().unwrap().1 {
        return Err(PathError::EndpointMismatch);
    }
    let mut out: Vec<(Dyadic, T)> =
        first.iter().map(|(t, v)| (t.half(), v.clone())).collect();
    for (t, v) in second.iter().rev().skip(1) {
        out.push((&Dyadic::one() - &t.half(), v.clone()));
    }
    Ok(out)
}

/// A path `[0,1] → E` through a metric tree, given by vertex breakpoints.
#[derive(Clone, Debug)]
pub struct TreePath {
    tree_id: u64,
    breakpoints: Vec<(Dyadic, VertexId)>,
}

impl TreePath {
    pub fn new(
        tree: &MetricTree,
        breakpoints: Vec<(Dyadic, VertexId)>,
    ) -> Result<Self, PathError> {
        check_params(&breakpoints)?;
        for (_, v) in &breakpoints {
            if !tree.contains(*v) {
                return Err(TreeError::UnknownVertex(*v).into());
            }
        }
        Ok(TreePath { tree_id: tree.id(), breakpoints })
    }

    pub fn tree_id(&self) -> u64 {
        self.tree_id
    }

    pub fn breakpoints(&self) -> &[(Dyadic, VertexId)] {
        &self.breakpoints
    }

    pub fn start_vertex(&self) -> VertexId {
        self.breakpoints[0].1
    }

    pub fn end_vertex(&self) -> VertexId {
        self.breakpoints.last().unwrap().1
    }

    pub fn is_loop(&self) -> bool {
        self.start_vertex() == self.end_vertex()
    }

    fn check_tree(&self, tree: &MetricTree) -> Result<(), PathError> {
        if tree.id() != self.tree_id {
            return Err(PathError::TreeMismatch);
        }
        Ok(())
    }

    /// True when every segment traverses at most one edge.
    pub fn is_edgewise(&self, tree: &MetricTree) -> Result<bool, PathError> {
        self.check_tree(tree)?;
        for w in self.breakpoints.windows(2) {
            let (u, v) = (w[0].1, w[1].1);
            if u == v {
                continue;
            }
            let adjacent = tree.parent(u)?.map(|(p, _)| p) == Some(v)
                || tree.parent(v)?.map(|(p, _)| p) == Some(u);
            if !adjacent {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Same path with its vertices read inside `target`, which must contain
    /// them; used to view a path inside a finer tree built from this one.
    pub fn reinterpret(&self, target: &MetricTree) -> Result<TreePath, PathError> {
        TreePath::new(target, self.breakpoints.clone())
    }

    /// Inserts a breakpoint at every vertex a segment's geodesic passes
    /// through, producing an edgewise path equal to this one as a map.
    pub fn refine_to_edges(&self, tree: &MetricTree) -> Result<TreePath, PathError> {
        self.check_tree(tree)?;
        let mut out: Vec<(Dyadic, VertexId)> = Vec::with_capacity(self.breakpoints.len());
        out.push(self.breakpoints[0].clone());
        for w in self.breakpoints.windows(2) {
            let ((t0, u), (t1, v)) = (&w[0], &w[1]);
            if u != v {
                let chain = tree.geodesic_chain(*u, *v)?;
                let total = tree.distance_vv(*u, *v)?;
                let width = t1 - t0;
                let mut cum = Quad::zero();
                for pair in chain.windows(2).take(chain.len().saturating_sub(2)) {
                    let (a, b) = (pair[0], pair[1]);
                    let child = if tree.parent(a)?.map(|(p, _)| p) == Some(b) { a } else { b };
                    cum = &cum + tree.edge_length(child)?;
                    let lambda = cum
                        .checked_div_to_dyadic(&total)
                        .ok_or(PathError::NonDyadicInterpolation)?;
                    out.push((t0 + &(&width * &lambda), b));
                }
            }
            out.push((t1.clone(), *v));
        }
        TreePath::new(tree, out)
    }

    /// Exact position of the path at parameter `t`.
    pub fn eval(&self, tree: &MetricTree, t: &Dyadic) -> Result<TreeLocation, PathError> {
        self.check_tree(tree)?;
        let i = segment_index(&self.breakpoints, t)?;
        let (t0, u) = &self.breakpoints[i];
        let (t1, v) = &self.breakpoints[i + 1];
        if t == t0 {
            return Ok(TreeLocation::at_vertex(*u));
        }
        if t == t1 || u == v {
            return Ok(TreeLocation::at_vertex(*v));
        }
        let lambda = segment_fraction(t0, t1, t)?;
        let total = tree.distance_vv(*u, *v)?;
        let dist = total.scale(&lambda);
        Ok(tree.locate_on_geodesic(*u, *v, &dist)?)
    }

    pub fn reverse(&self) -> TreePath {
        TreePath {
            tree_id: self.tree_id,
            breakpoints: reverse_breakpoints(&self.breakpoints),
        }
    }
}

/// `first ∗ reverse(second)` in the tree: `t ↦ first(2t)` then `second(2−2t)`.
pub fn loop_concat_reverse_tree(
    first: &TreePath,
    second: &TreePath,
) -> Result<TreePath, PathError> {
    if first.tree_id != second.tree_id {
        return Err(PathError::TreeMismatch);
    }
    Ok(TreePath {
        tree_id: first.tree_id,
        breakpoints: concat_reverse_breakpoints(&first.breakpoints, &second.breakpoints)?,
    })
}

/// A simplicial map `E → ℝ²`: linear on every edge, with a declared Lipschitz
/// constant checked exactly against each edge.
#[derive(Clone, Debug)]
pub struct PlanarMap {
    tree_id: u64,
    images: BTreeMap<VertexId, Point2>,
    lipschitz: Quad,
}

impl PlanarMap {
    pub fn new(
        tree: &MetricTree,
        images: BTreeMap<VertexId, Point2>,
        lipschitz: Quad,
    ) -> Result<Self, PathError> {
        let map = PlanarMap { tree_id: tree.id(), images, lipschitz };
        for v in tree.vertex_ids() {
            if !map.images.contains_key(&v) {
                return Err(PathError::MissingImage(v));
            }
        }
        if let Some(v) = map.first_lipschitz_violation(tree)? {
            return Err(PathError::LipschitzViolation(v));
        }
        Ok(map)
    }

    /// Skips validation; used when loading state that verification will judge.
    pub fn from_parts_unchecked(
        tree_id: u64,
        images: BTreeMap<VertexId, Point2>,
        lipschitz: Quad,
    ) -> Self {
        PlanarMap { tree_id, images, lipschitz }
    }

    pub fn tree_id(&self) -> u64 {
        self.tree_id
    }

    pub fn lipschitz(&self) -> &Quad {
        &self.lipschitz
    }

    pub fn images(&self) -> &BTreeMap<VertexId, Point2> {
        &self.images
    }

    pub fn image(&self, v: VertexId) -> Result<&Point2, PathError> {
        self.images.get(&v).ok_or(PathError::MissingImage(v))
    }

    /// First edge (by child vertex) whose image is longer than
    /// `lipschitz · edge_length`, if any.
    pub fn first_lipschitz_violation(
        &self,
        tree: &MetricTree,
    ) -> Result<Option<VertexId>, PathError> {
        for (child, parent, len) in tree.edges() {
            let img_sq = Point2::squared_distance(self.image(child)?, self.image(parent)?);
            let bound = &self.lipschitz * len;
            if !sqrt_le_quad(&img_sq, &bound)? {
                return Ok(Some(child));
            }
        }
        Ok(None)
    }

    /// First edge whose Euclidean image length differs from the edge length,
    /// if any. `None` means the map is edgewise isometric.
    pub fn first_isometry_violation(
        &self,
        tree: &MetricTree,
    ) -> Result<Option<VertexId>, PathError> {
        for (child, parent, len) in tree.edges() {
            let img_sq = Point2::squared_distance(self.image(child)?, self.image(parent)?);
            if cmp_sqrt_vs_quad(&img_sq, len)? != std::cmp::Ordering::Equal {
                return Ok(Some(child));
            }
        }
        Ok(None)
    }

    /// Image of a tree point under the edgewise-linear extension.
    pub fn eval_location(
        &self,
        tree: &MetricTree,
        loc: &TreeLocation,
    ) -> Result<Point2, PathError> {
        if tree.id() != self.tree_id {
            return Err(PathError::TreeMismatch);
        }
        let base = self.image(loc.vertex)?.clone();
        if loc.is_vertex() {
            return Ok(base);
        }
        let (pv, len) = tree
            .parent(loc.vertex)?
            .ok_or(TreeError::OffsetOutOfRange)?;
        let mu = loc
            .offset_toward_parent
            .checked_div_to_dyadic(&len.clone())
            .ok_or(PathError::NonDyadicInterpolation)?;
        let target = self.image(pv)?;
        Ok(Point2::new(
            &base.x + &(&(&target.x - &base.x) * &mu),
            &base.y + &(&(&target.y - &base.y) * &mu),
        ))
    }
}

/// A piecewise-linear path in the plane.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PlanePath {
    breakpoints: Vec<(Dyadic, Point2)>,
}

impl<'de> Deserialize<'de> for PlanePath {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(Deserialize)]
        struct Repr {
            breakpoints: Vec<(Dyadic, Point2)>,
        }
        let repr = Repr::deserialize(d)?;
        PlanePath::new(repr.breakpoints).map_err(D::Error::custom)
    }
}

impl PlanePath {
    pub fn new(breakpoints: Vec<(Dyadic, Point2)>) -> Result<Self, PathError> {
        check_params(&breakpoints)?;
        Ok(PlanePath { breakpoints })
    }

    pub fn breakpoints(&self) -> &[(Dyadic, Point2)] {
        &self.breakpoints
    }

    pub fn start(&self) -> &Point2 {
        &self.breakpoints[0].1
    }

    pub fn end(&self) -> &Point2 {
        &self.breakpoints.last().unwrap().1
    }

    pub fn is_loop(&self) -> bool {
        self.start() == self.end()
    }

    pub fn eval(&self, t: &Dyadic) -> Result<Point2, PathError> {
        let i = segment_index(&self.breakpoints, t)?;
        let (t0, p0) = &self.breakpoints[i];
        let (t1, p1) = &self.breakpoints[i + 1];
        if t == t0 {
            return Ok(p0.clone());
        }
        if t == t1 {
            return Ok(p1.clone());
        }
        let lambda = segment_fraction(t0, t1, t)?;
        Ok(Point2::new(
            &p0.x + &(&(&p1.x - &p0.x) * &lambda),
            &p0.y + &(&(&p1.y - &p0.y) * &lambda),
        ))
    }

    pub fn reverse(&self) -> PlanePath {
        PlanePath { breakpoints: reverse_breakpoints(&self.breakpoints) }
    }
}

/// `first ∗ reverse(second)` in the plane.
pub fn loop_concat_reverse_plane(
    first: &PlanePath,
    second: &PlanePath,
) -> Result<PlanePath, PathError> {
    Ok(PlanePath {
        breakpoints: concat_reverse_breakpoints(&first.breakpoints, &second.breakpoints)?,
    })
}

/// Pushes an edgewise tree path forward through a planar map. Multi-edge
/// segments are rejected: the map is only linear edge by edge, so the image
/// of a longer geodesic may bend between the endpoint images.
pub fn map_path(
    path: &TreePath,
    tree: &MetricTree,
    g: &PlanarMap,
) -> Result<PlanePath, PathError> {
    if path.tree_id() != g.tree_id() {
        return Err(PathError::TreeMismatch);
    }
    if !path.is_edgewise(tree)? {
        return Err(PathError::NonAdjacentSegment);
    }
    let breakpoints = path
        .breakpoints
        .iter()
        .map(|(t, v)| Ok((t.clone(), g.image(*v)?.clone())))
        .collect::<Result<Vec<_>, PathError>>()?;
    Ok(PlanePath { breakpoints })
}

/// Exact sup-distance data for two plane paths on [0, 1].
///
/// The difference of two PL curves is linear on every segment of the joint
/// breakpoint refinement, so its norm attains its maximum at a breakpoint of
/// the union; the squared maximum is therefore exact.
#[derive(Clone, Debug, Serialize)]
pub struct SupDistanceReport {
    pub squared_sup: Dyadic,
    pub witness_param: Dyadic,
    pub bound: Quad,
    pub within_bound: bool,
}

pub fn sup_distance(
    p: &PlanePath,
    q: &PlanePath,
    bound: &Quad,
) -> Result<SupDistanceReport, PathError> {
    let mut params: Vec<Dyadic> = p
        .breakpoints
        .iter()
        .map(|(t, _)| t.clone())
        .chain(q.breakpoints.iter().map(|(t, _)| t.clone()))
        .collect();
    params.sort();
    params.dedup();
    let mut best = Dyadic::zero();
    let mut witness = Dyadic::zero();
    for t in params {
        let d = Point2::squared_distance(&p.eval(&t)?, &q.eval(&t)?);
        if d > best {
            best = d;
            witness = t;
        }
    }
    let within_bound = sqrt_le_quad(&best, bound)?;
    Ok(SupDistanceReport { squared_sup: best, witness_param: witness, bound: bound.clone(), within_bound })
}

/// Exact total length of a path whose segments are all horizontal, vertical,
/// or of slope ±1; anything else would leave ℚ(√2) and is an error.
pub fn path_length(p: &PlanePath) -> Result<Quad, PathError> {
    let mut rat = Dyadic::zero();
    let mut irr = Dyadic::zero();
    for w in p.breakpoints.windows(2) {
        let dx = (&w[1].1.x - &w[0].1.x).abs();
        let dy = (&w[1].1.y - &w[0].1.y).abs();
        if dy.is_zero() {
            rat = &rat + &dx;
        } else if dx.is_zero() {
            rat = &rat + &dy;
        } else if dx == dy {
            irr = &irr + &dx;
        } else {
            return Err(PathError::UnsupportedSlope);
        }
    }
    Ok(Quad::new(rat, irr))
}

/// True iff every dyadic grid point of pitch `1/2^grid` inside the convex
/// hull of the triangle is within `radius` of some sample, all exactly.
pub fn density_check(
    samples: &[Point2],
    triangle: &OrderedTriangle,
    radius: &Quad,
    grid: u32,
) -> Result<bool, PathError> {
    Ok(first_uncovered_grid_point(samples, triangle, radius, grid)?.is_none())
}

/// The witness behind [`density_check`]: the first uncovered grid point.
pub fn first_uncovered_grid_point(
    samples: &[Point2],
    triangle: &OrderedTriangle,
    radius: &Quad,
    grid: u32,
) -> Result<Option<Point2>, PathError> {
    assert!(radius.sign() > 0, "density radius must be positive");
    assert!(grid >= 1, "grid refinement must be at least 1");

    // Bucket samples in cells of side 2^-k with 2^-k ≥ radius where possible,
    // so the search neighbourhood stays small.
    let mut k: u32 = 0;
    while k < grid
        && Quad::from_dyadic(Dyadic::pow2(-(k as i64 + 1))) >= *radius
    {
        k += 1;
    }
    let cell = Quad::from_dyadic(Dyadic::pow2(-(k as i64)));
    let mut reach: i64 = 1;
    while cell.scale(&Dyadic::from_int(reach)) < *radius {
        reach += 1;
    }

    let bucket_of = |p: &Point2| -> (i64, i64) {
        let bx = p.x.floor_mul_pow2(k);
        let by = p.y.floor_mul_pow2(k);
        (
            i64::try_from(&bx).expect("bucket index fits in i64"),
            i64::try_from(&by).expect("bucket index fits in i64"),
        )
    };
    let mut buckets: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        buckets.entry(bucket_of(s)).or_default().push(i);
    }

    let corners = [triangle.a(), triangle.b(), triangle.c()];
    let scaled = |d: &Dyadic| d.floor_mul_pow2(grid);
    let min_i = corners.iter().map(|p| scaled(&p.x)).min().unwrap();
    let max_i = corners.iter().map(|p| scaled(&p.x)).max().unwrap() + 1u32;
    let min_j = corners.iter().map(|p| scaled(&p.y)).min().unwrap();
    let max_j = corners.iter().map(|p| scaled(&p.y)).max().unwrap() + 1u32;
    let (min_i, max_i): (i64, i64) = (
        i64::try_from(&min_i).expect("grid range fits in i64"),
        i64::try_from(&max_i).expect("grid range fits in i64"),
    );
    let (min_j, max_j): (i64, i64) = (
        i64::try_from(&min_j).expect("grid range fits in i64"),
        i64::try_from(&max_j).expect("grid range fits in i64"),
    );

    for i in min_i..=max_i {
        for j in min_j..=max_j {
            let p = Point2::new(
                Dyadic::from_parts(i.into(), grid as i64),
                Dyadic::from_parts(j.into(), grid as i64),
            );
            if !triangle.contains(&p) {
                continue;
            }
            let (bi, bj) = bucket_of(&p);
            let mut covered = false;
            'search: for di in -reach..=reach {
                for dj in -reach..=reach {
                    if let Some(ids) = buckets.get(&(bi + di, bj + dj)) {
                        for &s in ids {
                            let d2 = Point2::squared_distance(&p, &samples[s]);
                            if sqrt_le_quad(&d2, radius)? {
                                covered = true;
                                break 'search;
                            }
                        }
                    }
                }
            }
            if !covered {
                return Ok(Some(p));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::Quad;
    use crate::mtree::MetricTree;

    fn dy(n: i64, e: u32) -> Dyadic {
        Dyadic::new(n, e)
    }

    fn pt(x: (i64, u32), y: (i64, u32)) -> Point2 {
        Point2::new(dy(x.0, x.1), dy(y.0, y.1))
    }

    fn a() -> Point2 {
        Point2::from_ints(0, 0)
    }
    fn b() -> Point2 {
        Point2::from_ints(0, 1)
    }
    fn c() -> Point2 {
        Point2::from_ints(1, 1)
    }

    /// E_1 with π_1 and g_1, built by hand.
    fn level1_e() -> (MetricTree, TreePath, PlanarMap) {
        let mut t = MetricTree::new();
        let v0 = t.root();
        let vh = t.attach_leaf(v0, Quad::one()).unwrap();
        let v1 = t.attach_leaf(vh, Quad::one()).unwrap();
        let pi = TreePath::new(
            &t,
            vec![(Dyadic::zero(), v0), (dy(1, 1), vh), (Dyadic::one(), v1)],
        )
        .unwrap();
        let images = [(v0, a()), (vh, b()), (v1, c())].into_iter().collect();
        let g = PlanarMap::new(&t, images, Quad::one()).unwrap();
        (t, pi, g)
    }

    fn alpha() -> PlanePath {
        PlanePath::new(vec![
            (Dyadic::zero(), a()),
            (dy(1, 1), b()),
            (Dyadic::one(), c()),
        ])
        .unwrap()
    }

    fn beta() -> PlanePath {
        PlanePath::new(vec![(Dyadic::zero(), a()), (Dyadic::one(), c())]).unwrap()
    }

    #[test]
    fn tree_path_eval() {
        let (t, pi, _) = level1_e();
        let vh = pi.breakpoints()[1].1;
        assert_eq!(pi.eval(&t, &dy(1, 1)).unwrap(), TreeLocation::at_vertex(vh));
        // π_1(1/4): halfway up the first edge.
        let loc = pi.eval(&t, &dy(1, 2)).unwrap();
        assert_eq!(loc, t.location(vh, Quad::from_dyadic(dy(1, 1))).unwrap());
        assert!(pi.eval(&t, &dy(3, 1)).is_err());
    }

    #[test]
    fn map_path_level1() {
        let (t, pi, g) = level1_e();
        let img = map_path(&pi, &t, &g).unwrap();
        assert_eq!(img, alpha());
        // Mapping commutes with evaluation on dyadic parameters.
        let t_param = dy(3, 3);
        let via_plane = img.eval(&t_param).unwrap();
        let via_tree = g
            .eval_location(&t, &pi.eval(&t, &t_param).unwrap())
            .unwrap();
        assert_eq!(via_plane, via_tree);
    }

    #[test]
    fn refine_into_finer_tree() {
        let (mut t, pi, _) = level1_e();
        let vh = pi.breakpoints()[1].1;
        let v1 = pi.breakpoints()[2].1;
        let u1 = t.subdivide_edge(vh, &dy(1, 1)).unwrap();
        let u2 = t.subdivide_edge(v1, &dy(1, 1)).unwrap();
        let lifted = pi.reinterpret(&t).unwrap();
        assert!(!lifted.is_edgewise(&t).unwrap());
        let refined = lifted.refine_to_edges(&t).unwrap();
        assert!(refined.is_edgewise(&t).unwrap());
        let params: Vec<Dyadic> =
            refined.breakpoints().iter().map(|(p, _)| p.clone()).collect();
        assert_eq!(
            params,
            vec![Dyadic::zero(), dy(1, 2), dy(1, 1), dy(3, 2), Dyadic::one()]
        );
        assert_eq!(refined.breakpoints()[1].1, u1);
        assert_eq!(refined.breakpoints()[3].1, u2);
    }

    #[test]
    fn concat_reverse_examples() {
        let al = alpha();
        let aa = loop_concat_reverse_plane(&al, &al).unwrap();
        let pts: Vec<Point2> = aa.breakpoints().iter().map(|(_, p)| p.clone()).collect();
        assert_eq!(pts, vec![a(), b(), c(), b(), a()]);
        let params: Vec<Dyadic> = aa.breakpoints().iter().map(|(t, _)| t.clone()).collect();
        assert_eq!(params, vec![Dyadic::zero(), dy(1, 2), dy(1, 1), dy(3, 2), Dyadic::one()]);

        let ab = loop_concat_reverse_plane(&alpha(), &beta()).unwrap();
        let pts: Vec<Point2> = ab.breakpoints().iter().map(|(_, p)| p.clone()).collect();
        assert_eq!(pts, vec![a(), b(), c(), a()]);
        assert!(ab.is_loop());

        let not_matching = PlanePath::new(vec![(Dyadic::zero(), a()), (Dyadic::one(), b())]).unwrap();
        assert_eq!(
            loop_concat_reverse_plane(&alpha(), &not_matching).unwrap_err(),
            PathError::EndpointMismatch
        );
    }

    #[test]
    fn reverse_is_involutive() {
        let al = alpha();
        assert_eq!(al.reverse().reverse(), al);
        assert_eq!(al.reverse().start(), &c());
    }

    #[test]
    fn sup_distance_level1() {
        let r = sup_distance(&alpha(), &beta(), &Quad::sqrt2()).unwrap();
        assert_eq!(r.squared_sup, dy(1, 1));
        assert_eq!(r.witness_param, dy(1, 1));
        assert!(r.within_bound);
        let same = sup_distance(&alpha(), &alpha(), &Quad::zero()).unwrap();
        assert_eq!(same.squared_sup, Dyadic::zero());
        assert!(same.within_bound);
    }

    #[test]
    fn path_length_examples() {
        assert_eq!(path_length(&alpha()).unwrap(), Quad::from_int(2));
        assert_eq!(path_length(&beta()).unwrap(), Quad::sqrt2());
        let bad = PlanePath::new(vec![
            (Dyadic::zero(), a()),
            (Dyadic::one(), pt((1, 0), (1, 1))),
        ])
        .unwrap();
        assert_eq!(path_length(&bad).unwrap_err(), PathError::UnsupportedSlope);
    }

    #[test]
    fn density_examples() {
        let tri = OrderedTriangle::new(a(), b(), c()).unwrap();
        // Corner samples only: the point (1/2, 3/4) is farther than 1/4 from all.
        let corners = vec![a(), b(), c()];
        assert!(!density_check(&corners, &tri, &Quad::from_dyadic(dy(1, 2)), 4).unwrap());
        let gap = first_uncovered_grid_point(&corners, &tri, &Quad::from_dyadic(dy(1, 2)), 4)
            .unwrap()
            .unwrap();
        let d2 = Point2::squared_distance(&gap, &pt((1, 1), (3, 2)));
        assert!(d2.is_zero() || d2.sign() >= 0);
        // Any samples at the triangle's diameter are enough.
        assert!(density_check(&corners, &tri, &Quad::sqrt2(), 4).unwrap());
        // The level-2 breakpoint images at radius √2/2.
        let d = pt((0, 0), (1, 1));
        let e = pt((1, 1), (1, 0));
        let f = pt((1, 1), (1, 1));
        let level2 = vec![a(), d.clone(), f.clone(), d, b(), e.clone(), f.clone(), e, c()];
        assert!(density_check(&level2, &tri, &Quad::sqrt2_times(dy(1, 1)), 4).unwrap());
    }

    #[test]
    fn planar_map_validation() {
        let (t, _, _) = level1_e();
        let v0 = t.root();
        let mut ids = t.vertex_ids();
        let _ = ids.next();
        let vh = ids.next().unwrap();
        let v1 = ids.next().unwrap();
        drop(ids);
        // An image stretching an edge of length 1 to length 2 violates L = 1.
        let stretched = [(v0, a()), (vh, Point2::from_ints(0, 2)), (v1, c())]
            .into_iter()
            .collect();
        assert_eq!(
            PlanarMap::new(&t, stretched, Quad::one()).unwrap_err(),
            PathError::LipschitzViolation(vh)
        );
        let missing = [(v0, a()), (vh, b())].into_iter().collect();
        assert_eq!(
            PlanarMap::new(&t, missing, Quad::one()).unwrap_err(),
            PathError::MissingImage(v1)
        );
    }
}
