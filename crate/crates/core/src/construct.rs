//! The inductive tower of trees, paths, and planar maps.
//!
//! Level 1 is a two-edge path mapped onto the legs of the right triangle with
//! vertices (0,0), (0,1), (1,1), together with a one-edge tree mapped onto
//! its hypotenuse. Each subdivision step halves every edge, attaches pendant
//! edges at the new midpoints, and extends the maps so that every quarter of
//! every parameter interval again parameterizes a vertex-ordered isosceles
//! right triangle of half the leg length. The leaf-collapse retraction back
//! to the previous level is recorded as each new level is built.
//!
//! Levels are immutable snapshots: subdivision forks the trees rather than
//! mutating shared ones, so a retraction holds both its source and target
//! alive.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactnum::{Dyadic, Quad};
use crate::mtree::{leaf_collapse_retraction, MetricTree, Retraction, TreeError, VertexId};
use crate::plcurve::{map_path, PathError, PlanarMap, PlanePath, Point2, TreePath};

#[derive(Error, Debug)]
pub enum BuildError {
    #[error("level {level}, interval {interval}: parameterization conditions fail: {reason}")]
    Parameterization {
        level: u32,
        interval: usize,
        reason: String,
    },
    #[error("degenerate triangle: {0}")]
    BadTriangle(String),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// A vertex-ordered isosceles right triangle with the right angle at `b`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderedTriangle {
    a: Point2,
    b: Point2,
    c: Point2,
}

impl OrderedTriangle {
    pub fn new(a: Point2, b: Point2, c: Point2) -> Result<Self, BuildError> {
        let dot = Point2::dot_at(&b, &a, &c);
        if !dot.is_zero() {
            return Err(BuildError::BadTriangle("the angle at b is not right".into()));
        }
        let ab = Point2::squared_distance(&a, &b);
        let cb = Point2::squared_distance(&c, &b);
        if ab != cb {
            return Err(BuildError::BadTriangle("legs have different lengths".into()));
        }
        if ab.is_zero() {
            return Err(BuildError::BadTriangle("vertices coincide".into()));
        }
        Ok(OrderedTriangle { a, b, c })
    }

    pub fn a(&self) -> &Point2 {
        &self.a
    }

    pub fn b(&self) -> &Point2 {
        &self.b
    }

    pub fn c(&self) -> &Point2 {
        &self.c
    }

    /// Squared leg length.
    pub fn leg_sq(&self) -> Dyadic {
        Point2::squared_distance(&self.a, &self.b)
    }

    /// Sign of the vertex ordering (shoelace); never zero for a valid triangle.
    pub fn orientation(&self) -> i32 {
        Point2::cross(&self.a, &self.b, &self.c).sign()
    }

    /// Closed convex hull membership via three half-plane tests.
    pub fn contains(&self, p: &Point2) -> bool {
        let s = self.orientation();
        let sides = [
            Point2::cross(&self.a, &self.b, p),
            Point2::cross(&self.b, &self.c, p),
            Point2::cross(&self.c, &self.a, p),
        ];
        sides.iter().all(|d| d.sign() == 0 || d.sign() == s)
    }

    /// Midpoints `d = (a+b)/2`, `e = (b+c)/2`, `f = (a+c)/2`.
    pub fn midpoints(&self) -> (Point2, Point2, Point2) {
        (
            Point2::midpoint(&self.a, &self.b),
            Point2::midpoint(&self.b, &self.c),
            Point2::midpoint(&self.a, &self.c),
        )
    }

    /// The four half-size triangles `△adf, △fdb, △bef, △fec` in the order the
    /// parameterization visits them.
    pub fn subdivide(&self) -> Result<[OrderedTriangle; 4], BuildError> {
        let (d, e, f) = self.midpoints();
        Ok([
            OrderedTriangle::new(self.a.clone(), d.clone(), f.clone())?,
            OrderedTriangle::new(f.clone(), d, self.b.clone())?,
            OrderedTriangle::new(self.b.clone(), e.clone(), f.clone())?,
            OrderedTriangle::new(f, e, self.c.clone())?,
        ])
    }
}

/// The retractions from level n+1 back onto level n, one per side.
#[derive(Clone, Debug)]
pub struct RetractionPair {
    pub e: Retraction,
    pub et: Retraction,
}

/// One level of the construction: both trees, both paths, both maps, the
/// ordered triangle list, and (once the next level exists) the retraction
/// pair from it.
#[derive(Clone, Debug)]
pub struct TowerLevel {
    pub n: u32,
    pub e: Arc<MetricTree>,
    pub et: Arc<MetricTree>,
    pub pi: TreePath,
    pub pit: TreePath,
    pub g: PlanarMap,
    pub gt: PlanarMap,
    pub triangles: Vec<OrderedTriangle>,
    pub retraction_from_next: Option<RetractionPair>,
}

impl TowerLevel {
    pub fn interval_count(&self) -> usize {
        self.triangles.len()
    }

    /// `[ (i−1)/4^{n−1}, i/4^{n−1} ]` for the 1-based interval index.
    pub fn interval_bounds(&self, i: usize) -> (Dyadic, Dyadic) {
        let exp = 2 * (self.n as i64 - 1);
        (
            Dyadic::from_parts((i as i64 - 1).into(), exp),
            Dyadic::from_parts((i as i64).into(), exp),
        )
    }

    /// The plane curve `g_n ∘ π_n`.
    pub fn curve(&self) -> Result<PlanePath, PathError> {
        map_path(&self.pi, &self.e, &self.g)
    }

    /// The plane curve `g̃_n ∘ π̃_n`.
    pub fn curve_t(&self) -> Result<PlanePath, PathError> {
        map_path(&self.pit, &self.et, &self.gt)
    }
}

fn corner_triangle() -> OrderedTriangle {
    OrderedTriangle::new(
        Point2::from_ints(0, 0),
        Point2::from_ints(0, 1),
        Point2::from_ints(1, 1),
    )
    .expect("the base triangle is valid")
}

/// Level 1: two unit edges against the triangle's legs, one √2 edge against
/// its hypotenuse.
pub fn init_level1() -> TowerLevel {
    let tri = corner_triangle();

    let mut e = MetricTree::new();
    let v0 = e.root();
    let vh = e.attach_leaf(v0, Quad::one()).unwrap();
    let v1 = e.attach_leaf(vh, Quad::one()).unwrap();
    let e = Arc::new(e);
    let pi = TreePath::new(
        &e,
        vec![
            (Dyadic::zero(), v0),
            (Dyadic::new(1, 1), vh),
            (Dyadic::one(), v1),
        ],
    )
    .unwrap();
    let g_images: BTreeMap<VertexId, Point2> = [
        (v0, tri.a().clone()),
        (vh, tri.b().clone()),
        (v1, tri.c().clone()),
    ]
    .into_iter()
    .collect();
    let g = PlanarMap::new(&e, g_images, Quad::one()).unwrap();

    let mut et = MetricTree::new();
    let tv0 = et.root();
    let tv1 = et.attach_leaf(tv0, Quad::sqrt2()).unwrap();
    let et = Arc::new(et);
    let pit = TreePath::new(&et, vec![(Dyadic::zero(), tv0), (Dyadic::one(), tv1)]).unwrap();
    let gt_images: BTreeMap<VertexId, Point2> =
        [(tv0, tri.a().clone()), (tv1, tri.c().clone())].into_iter().collect();
    let gt = PlanarMap::new(&et, gt_images, Quad::one()).unwrap();

    TowerLevel {
        n: 1,
        e,
        et,
        pi,
        pit,
        g,
        gt,
        triangles: vec![tri],
        retraction_from_next: None,
    }
}

/// Per-condition result of checking that `(π, π̃, g, g̃)` parameterizes the
/// level's `i`-th triangle on its interval.
#[derive(Clone, Debug, Serialize)]
pub struct ParamCheck {
    pub interval: usize,
    pub injective: bool,
    pub images_match: bool,
    pub pieces_linear: bool,
    pub witness: Option<String>,
}

impl ParamCheck {
    pub fn pass(&self) -> bool {
        self.injective && self.images_match && self.pieces_linear
    }
}

fn breakpoints_in_range<'a>(
    path: &'a TreePath,
    r: &Dyadic,
    s: &Dyadic,
) -> Vec<&'a (Dyadic, VertexId)> {
    path.breakpoints()
        .iter()
        .filter(|(t, _)| t >= r && t <= s)
        .collect()
}

fn adjacent(tree: &MetricTree, u: VertexId, v: VertexId) -> bool {
    tree.parent(u).ok().flatten().map(|(p, _)| p) == Some(v)
        || tree.parent(v).ok().flatten().map(|(p, _)| p) == Some(u)
}

/// Checks conditions (1)–(3) of the triangle parameterization on interval `i`
/// (1-based) and reports a witness for the first failure found.
pub fn check_parameterization(level: &TowerLevel, i: usize) -> ParamCheck {
    let (r, s) = level.interval_bounds(i);
    let mid = Dyadic::midpoint(&r, &s);
    let tri = &level.triangles[i - 1];

    let mut out = ParamCheck {
        interval: i,
        injective: true,
        images_match: true,
        pieces_linear: true,
        witness: None,
    };
    let fail = |flag: &mut bool, witness: &mut Option<String>, msg: String| {
        *flag = false;
        if witness.is_none() {
            *witness = Some(msg);
        }
    };

    let pi_pts = breakpoints_in_range(&level.pi, &r, &s);
    let pit_pts = breakpoints_in_range(&level.pit, &r, &s);

    // Condition (3): exactly the breakpoints r, mid, s on the π side and
    // r, s on the π̃ side, with each piece running along a single edge.
    let pi_params: Vec<&Dyadic> = pi_pts.iter().map(|(t, _)| t).collect();
    if pi_params != vec![&r, &mid, &s] {
        fail(
            &mut out.pieces_linear,
            &mut out.witness,
            format!("π breakpoints in [{r}, {s}] are not exactly r, (r+s)/2, s"),
        );
        return out;
    }
    let pit_params: Vec<&Dyadic> = pit_pts.iter().map(|(t, _)| t).collect();
    if pit_params != vec![&r, &s] {
        fail(
            &mut out.pieces_linear,
            &mut out.witness,
            format!("π̃ breakpoints in [{r}, {s}] are not exactly r, s"),
        );
        return out;
    }
    let (x, y, z) = (pi_pts[0].1, pi_pts[1].1, pi_pts[2].1);
    let (xt, zt) = (pit_pts[0].1, pit_pts[1].1);
    for (u, v, side) in [(x, y, "π first half"), (y, z, "π second half")] {
        if !adjacent(&level.e, u, v) {
            fail(
                &mut out.pieces_linear,
                &mut out.witness,
                format!("{side} of interval {i} spans more than one edge"),
            );
        }
    }
    if !adjacent(&level.et, xt, zt) {
        fail(
            &mut out.pieces_linear,
            &mut out.witness,
            format!("π̃ on interval {i} spans more than one edge"),
        );
    }

    // Condition (1): injectivity. With single-edge pieces this reduces to the
    // visited vertices being pairwise distinct.
    if x == y || y == z || x == z {
        fail(
            &mut out.injective,
            &mut out.witness,
            format!("π revisits a vertex on interval {i}"),
        );
    }
    if xt == zt {
        fail(
            &mut out.injective,
            &mut out.witness,
            format!("π̃ revisits a vertex on interval {i}"),
        );
    }

    // Condition (2): endpoint and midpoint images match the ordered triangle.
    let checks: [(&PlanarMap, VertexId, &Point2, &str); 5] = [
        (&level.g, x, tri.a(), "g∘π(r) ≠ a"),
        (&level.g, y, tri.b(), "g∘π((r+s)/2) ≠ b"),
        (&level.g, z, tri.c(), "g∘π(s) ≠ c"),
        (&level.gt, xt, tri.a(), "g̃∘π̃(r) ≠ a"),
        (&level.gt, zt, tri.c(), "g̃∘π̃(s) ≠ c"),
    ];
    for (map, v, want, msg) in checks {
        match map.image(v) {
            Ok(img) if img == want => {}
            Ok(img) => fail(
                &mut out.images_match,
                &mut out.witness,
                format!("interval {i}: {msg} (got {img:?}, want {want:?})"),
            ),
            Err(_) => fail(
                &mut out.images_match,
                &mut out.witness,
                format!("interval {i}: missing image for {v}"),
            ),
        }
    }
    out
}

/// One interval's worth of the subdivision step, operating on the shared
/// in-progress structures for the next level.
struct LevelBuilder {
    n: u32,
    e: MetricTree,
    et: MetricTree,
    mid_e: BTreeMap<VertexId, VertexId>,
    mid_et: BTreeMap<VertexId, VertexId>,
    g_images: BTreeMap<VertexId, Point2>,
    gt_images: BTreeMap<VertexId, Point2>,
    pi_points: Vec<(Dyadic, VertexId)>,
    pit_points: Vec<(Dyadic, VertexId)>,
    triangles: Vec<OrderedTriangle>,
    e_leaves: BTreeSet<VertexId>,
    et_leaves: BTreeSet<VertexId>,
}

impl LevelBuilder {
    /// Forks the trees and halves every edge, recording midpoints by the
    /// original child vertex. Midpoint images interpolate the edge's images.
    fn begin(prev: &TowerLevel) -> Result<Self, BuildError> {
        let mut e = prev.e.fork();
        let mut et = prev.et.fork();
        let half = Dyadic::new(1, 1);

        let mut g_images = prev.g.images().clone();
        let mut mid_e = BTreeMap::new();
        let e_children: Vec<(VertexId, VertexId)> = prev
            .e
            .edges()
            .map(|(child, parent, _)| (child, parent))
            .collect();
        for (child, parent) in e_children {
            let m = e.subdivide_edge(child, &half)?;
            mid_e.insert(child, m);
            let img = Point2::midpoint(&g_images[&child], &g_images[&parent]);
            g_images.insert(m, img);
        }

        let mut gt_images = prev.gt.images().clone();
        let mut mid_et = BTreeMap::new();
        let et_children: Vec<(VertexId, VertexId)> = prev
            .et
            .edges()
            .map(|(child, parent, _)| (child, parent))
            .collect();
        for (child, parent) in et_children {
            let m = et.subdivide_edge(child, &half)?;
            mid_et.insert(child, m);
            let img = Point2::midpoint(&gt_images[&child], &gt_images[&parent]);
            gt_images.insert(m, img);
        }

        Ok(LevelBuilder {
            n: prev.n,
            e,
            et,
            mid_e,
            mid_et,
            g_images,
            gt_images,
            pi_points: Vec::new(),
            pit_points: Vec::new(),
            triangles: Vec::new(),
            e_leaves: BTreeSet::new(),
            et_leaves: BTreeSet::new(),
        })
    }

    /// Midpoint vertex of the (former) edge between adjacent vertices of the
    /// previous level.
    fn midpoint_between(
        map: &BTreeMap<VertexId, VertexId>,
        prev: &MetricTree,
        u: VertexId,
        v: VertexId,
    ) -> Result<VertexId, TreeError> {
        let child = if prev.parent(u)?.map(|(p, _)| p) == Some(v) {
            u
        } else {
            v
        };
        Ok(map[&child])
    }

    /// Applies the subdivision step to interval `i` (1-based): ensures the
    /// quarter-point vertices, attaches the pendant edges, extends the maps,
    /// and emits the refined breakpoints and the four child triangles.
    fn subdivide_interval(&mut self, prev: &TowerLevel, i: usize) -> Result<(), BuildError> {
        let check = check_parameterization(prev, i);
        if !check.pass() {
            return Err(BuildError::Parameterization {
                level: prev.n,
                interval: i,
                reason: check.witness.unwrap_or_else(|| "unmet precondition".into()),
            });
        }

        let (r, s) = prev.interval_bounds(i);
        let step = (&s - &r).mul_pow2(-3);
        let s_k = |k: i64| &r + &(&step * &Dyadic::from_int(k));

        let j0 = 2 * (i - 1);
        let x = prev.pi.breakpoints()[j0].1;
        let y = prev.pi.breakpoints()[j0 + 1].1;
        let z = prev.pi.breakpoints()[j0 + 2].1;
        let xt = prev.pit.breakpoints()[i - 1].1;
        let zt = prev.pit.breakpoints()[i].1;

        let tri = &prev.triangles[i - 1];
        let (_, _, f) = tri.midpoints();
        let b = tri.b().clone();

        // E side: leaves at the quarter-point vertices, half the arc length.
        let m1 = Self::midpoint_between(&self.mid_e, &prev.e, x, y)?;
        let m2 = Self::midpoint_between(&self.mid_e, &prev.e, y, z)?;
        let arc_half = {
            let child = if prev.e.parent(x)?.map(|(p, _)| p) == Some(y) { x } else { y };
            prev.e.edge_length(child)?.half()
        };
        let w1 = self.e.attach_leaf(m1, arc_half.clone())?;
        let w2 = self.e.attach_leaf(m2, arc_half)?;
        self.e_leaves.insert(w1);
        self.e_leaves.insert(w2);
        self.g_images.insert(w1, f.clone());
        self.g_images.insert(w2, f);

        // Ẽ side: one leaf at the midpoint, half the arc length, image b.
        let mt = Self::midpoint_between(&self.mid_et, &prev.et, xt, zt)?;
        let arc_half_t = {
            let child = if prev.et.parent(xt)?.map(|(p, _)| p) == Some(zt) { xt } else { zt };
            prev.et.edge_length(child)?.half()
        };
        let wt = self.et.attach_leaf(mt, arc_half_t)?;
        self.et_leaves.insert(wt);
        self.gt_images.insert(wt, b);

        // Refined breakpoints; the closing s_8 is pushed by the last interval
        // only, since it coincides with the next interval's s_0.
        let pi_seq = [x, m1, w1, m1, y, m2, w2, m2, z];
        for (k, v) in pi_seq.iter().enumerate().take(8) {
            self.pi_points.push((s_k(k as i64), *v));
        }
        let pit_seq = [xt, mt, wt, mt, zt];
        for (k, v) in pit_seq.iter().enumerate().take(4) {
            self.pit_points.push((s_k(2 * k as i64), *v));
        }
        if i == prev.interval_count() {
            self.pi_points.push((s.clone(), z));
            self.pit_points.push((s, zt));
        }

        self.triangles.extend(tri.subdivide()?);
        Ok(())
    }

    fn finish(self, prev: &mut TowerLevel) -> Result<TowerLevel, BuildError> {
        let e = Arc::new(self.e);
        let et = Arc::new(self.et);
        let pi = TreePath::new(&e, self.pi_points)?;
        let pit = TreePath::new(&et, self.pit_points)?;
        let g = PlanarMap::new(&e, self.g_images, Quad::one())?;
        let gt = PlanarMap::new(&et, self.gt_images, Quad::one())?;
        let retraction = RetractionPair {
            e: leaf_collapse_retraction(&e, self.e_leaves)?,
            et: leaf_collapse_retraction(&et, self.et_leaves)?,
        };
        prev.retraction_from_next = Some(retraction);
        Ok(TowerLevel {
            n: self.n + 1,
            e,
            et,
            pi,
            pit,
            g,
            gt,
            triangles: self.triangles,
            retraction_from_next: None,
        })
    }
}

/// Builds level n+1 from level n and records the retraction pair on `prev`.
pub fn subdivide_level(prev: &mut TowerLevel) -> Result<TowerLevel, BuildError> {
    let mut builder = LevelBuilder::begin(prev)?;
    for i in 1..=prev.interval_count() {
        builder.subdivide_interval(prev, i)?;
    }
    builder.finish(prev)
}

/// Levels 1..=n. Deterministic: vertex ids are assigned in edge order during
/// halving and interval order during leaf attachment.
pub fn build_tower(n: u32) -> Result<Vec<TowerLevel>, BuildError> {
    assert!(n >= 1, "the tower starts at level 1");
    let mut levels = vec![init_level1()];
    for _ in 1..n {
        let next = {
            let prev = levels.last_mut().unwrap();
            subdivide_level(prev)?
        };
        levels.push(next);
    }
    Ok(levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::Quad;
    use crate::plcurve::map_path;

    fn dy(n: i64, e: u32) -> Dyadic {
        Dyadic::new(n, e)
    }

    fn pt(x: (i64, u32), y: (i64, u32)) -> Point2 {
        Point2::new(dy(x.0, x.1), dy(y.0, y.1))
    }

    #[test]
    fn level1_matches_construction() {
        let l1 = init_level1();
        assert_eq!(l1.triangles.len(), 1);
        assert_eq!(l1.triangles[0], corner_triangle());
        let v1 = l1.pi.end_vertex();
        assert_eq!(
            l1.e.distance_vv(l1.e.root(), v1).unwrap(),
            Quad::from_int(2)
        );
        let beta = l1.curve_t().unwrap();
        assert_eq!(beta.breakpoints().len(), 2);
        assert_eq!(beta.start(), &Point2::from_ints(0, 0));
        assert_eq!(beta.end(), &Point2::from_ints(1, 1));
    }

    #[test]
    fn one_subdivision_step() {
        let mut l1 = init_level1();
        let l2 = subdivide_level(&mut l1).unwrap();

        assert_eq!(l2.e.vertex_count(), 7);
        assert_eq!(l2.e.edge_count(), 6);
        assert_eq!(l2.et.vertex_count(), 4);
        assert_eq!(l2.et.edge_count(), 3);

        // u₁ = π₂(1/8) sits at depth 1/2 and w₁ = π₂(1/4) maps to f.
        let u1 = l2.pi.breakpoints()[1].1;
        assert_eq!(l2.e.depth(u1).unwrap(), &Quad::from_dyadic(dy(1, 1)));
        let w1 = l2.pi.breakpoints()[2].1;
        assert_eq!(l2.e.edge_length(w1).unwrap(), &Quad::from_dyadic(dy(1, 1)));
        assert_eq!(l2.g.image(w1).unwrap(), &pt((1, 1), (1, 1)));

        let d = pt((0, 0), (1, 1));
        let e = pt((1, 1), (1, 0));
        let f = pt((1, 1), (1, 1));
        let (a, b, c) = (
            Point2::from_ints(0, 0),
            Point2::from_ints(0, 1),
            Point2::from_ints(1, 1),
        );
        let want = [
            OrderedTriangle::new(a.clone(), d.clone(), f.clone()).unwrap(),
            OrderedTriangle::new(f.clone(), d, b.clone()).unwrap(),
            OrderedTriangle::new(b, e.clone(), f.clone()).unwrap(),
            OrderedTriangle::new(f, e, c).unwrap(),
        ];
        assert_eq!(l2.triangles, want);

        // π̃₂ visits ṽ₀, ũ, w̃, ũ, ṽ₁ at quarters.
        let params: Vec<Dyadic> = l2.pit.breakpoints().iter().map(|(t, _)| t.clone()).collect();
        assert_eq!(
            params,
            vec![Dyadic::zero(), dy(1, 2), dy(1, 1), dy(3, 2), Dyadic::one()]
        );
        let vs: Vec<VertexId> = l2.pit.breakpoints().iter().map(|(_, v)| *v).collect();
        assert_eq!(vs[1], vs[3]);
        assert_eq!(vs[0], l2.et.root());
        // w̃ maps to b and sits at depth √2.
        assert_eq!(l2.gt.image(vs[2]).unwrap(), &Point2::from_ints(0, 1));
        assert_eq!(l2.et.depth(vs[2]).unwrap(), &Quad::sqrt2());

        // Retraction pair recorded on level 1 with the right displacements.
        let pair = l1.retraction_from_next.as_ref().unwrap();
        assert_eq!(pair.e.sup_displacement(), Quad::from_dyadic(dy(1, 1)));
        assert_eq!(pair.et.sup_displacement(), Quad::sqrt2_times(dy(1, 1)));
        pair.e.validate().unwrap();
        pair.et.validate().unwrap();
    }

    #[test]
    fn level2_curves() {
        let mut l1 = init_level1();
        let l2 = subdivide_level(&mut l1).unwrap();
        let curve = l2.curve().unwrap();
        let pts: Vec<Point2> = curve.breakpoints().iter().map(|(_, p)| p.clone()).collect();
        let d = pt((0, 0), (1, 1));
        let e = pt((1, 1), (1, 0));
        let f = pt((1, 1), (1, 1));
        let (a, b, c) = (
            Point2::from_ints(0, 0),
            Point2::from_ints(0, 1),
            Point2::from_ints(1, 1),
        );
        assert_eq!(
            pts,
            vec![
                a,
                d.clone(),
                f.clone(),
                d,
                b,
                e.clone(),
                f.clone(),
                e,
                c
            ]
        );
        // g₂∘π₂(1/4) = f and g₂∘π₂(1/16) = (0, 1/4).
        assert_eq!(curve.eval(&dy(1, 2)).unwrap(), f);
        assert_eq!(curve.eval(&dy(1, 4)).unwrap(), pt((0, 0), (1, 2)));

        let curve_t = l2.curve_t().unwrap();
        let pts: Vec<Point2> = curve_t.breakpoints().iter().map(|(_, p)| p.clone()).collect();
        assert_eq!(
            pts,
            vec![
                Point2::from_ints(0, 0),
                pt((1, 1), (1, 1)),
                Point2::from_ints(0, 1),
                pt((1, 1), (1, 1)),
                Point2::from_ints(1, 1),
            ]
        );
    }

    #[test]
    fn tower_counts() {
        let tower = build_tower(3).unwrap();
        assert_eq!(tower.len(), 3);
        assert_eq!(tower[1].e.edge_count(), 6);
        assert_eq!(tower[1].et.edge_count(), 3);
        assert_eq!(tower[2].e.edge_count(), 20);
        assert_eq!(tower[2].et.edge_count(), 10);
        assert_eq!(tower[2].pi.breakpoints().len(), 33);
        assert_eq!(tower[2].pit.breakpoints().len(), 17);
        for (_, _, len) in tower[2].e.edges() {
            assert_eq!(len, &Quad::from_dyadic(dy(1, 2)));
        }
        for (_, _, len) in tower[2].et.edges() {
            assert_eq!(len, &Quad::sqrt2_times(dy(1, 2)));
        }
        // Retraction displacements from level 2 down to level 1.
        let pair = tower[0].retraction_from_next.as_ref().unwrap();
        assert_eq!(pair.e.sup_displacement(), Quad::from_dyadic(dy(1, 1)));
        assert_eq!(pair.et.sup_displacement(), Quad::sqrt2_times(dy(1, 1)));
    }

    #[test]
    fn parameterization_checks() {
        let tower = build_tower(2).unwrap();
        let l1 = &tower[0];
        let l2 = &tower[1];
        assert!(check_parameterization(l1, 1).pass());
        for i in 1..=4 {
            assert!(check_parameterization(l2, i).pass(), "interval {i}");
        }
        // Interval 2 of level 2 parameterizes △fdb: images f, d, b.
        let tri = &l2.triangles[1];
        assert_eq!(tri.a(), &pt((1, 1), (1, 1)));
        assert_eq!(tri.b(), &pt((0, 0), (1, 1)));
        assert_eq!(tri.c(), &Point2::from_ints(0, 1));

        // Fault injection: moving g(w₁) to b breaks condition (2).
        let mut images = l2.g.images().clone();
        let w1 = l2.pi.breakpoints()[2].1;
        images.insert(w1, Point2::from_ints(0, 1));
        let mut corrupted = l2.clone();
        corrupted.g = PlanarMap::from_parts_unchecked(
            corrupted.g.tree_id(),
            images,
            Quad::one(),
        );
        let check = check_parameterization(&corrupted, 1);
        assert!(!check.pass());
        assert!(!check.images_match);
        assert!(check.witness.is_some());
    }

    #[test]
    fn map_level2_is_edgewise() {
        let tower = build_tower(2).unwrap();
        let l2 = &tower[1];
        assert!(l2.pi.is_edgewise(&l2.e).unwrap());
        assert!(l2.pit.is_edgewise(&l2.et).unwrap());
        assert!(map_path(&l2.pi, &l2.e, &l2.g).is_ok());
    }
}
