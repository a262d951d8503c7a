//! Rooted metric simplicial trees with exact edge lengths.
//!
//! Trees are built by leaf attachment and metric-preserving edge subdivision,
//! then frozen. Vertex ids are stable across both operations, so a tree built
//! from another by subdividing edges contains the original's vertex set with
//! all pairwise geodesic distances unchanged; that containment is what the
//! tower construction relies on.
//!
//! Geodesic distances between vertices use the cached depth to the root and a
//! lowest common ancestor found by walking parent links; trees here are
//! shallow enough that the walk is never the bottleneck.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::exactnum::{Dyadic, Quad};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("edge length must be positive")]
    NonPositiveLength,
    #[error("the root has no parent edge")]
    RootHasNoParentEdge,
    #[error("subdivision fraction must be strictly between 0 and 1")]
    FractionOutOfRange,
    #[error("vertex {0} is not a leaf")]
    NotALeaf(VertexId),
    #[error("offset does not lie on the vertex's parent edge")]
    OffsetOutOfRange,
    #[error("location references a different tree")]
    TreeMismatch,
    #[error("malformed tree: {0}")]
    Structure(String),
}

#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexId(pub u32);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Debug for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

#[derive(Clone, Debug)]
struct VertexData {
    parent: Option<(VertexId, Quad)>,
    children: Vec<VertexId>,
    depth: Quad,
}

static NEXT_TREE_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_tree_id() -> u64 {
    NEXT_TREE_ID.fetch_add(1, AtomicOrdering::Relaxed)
}

/// A point of the tree: the vertex itself (`offset` zero) or a point on the
/// closed edge towards its parent, `offset` measured from the vertex.
/// Canonical form keeps `offset < edge_length`, so equality is decidable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeLocation {
    pub vertex: VertexId,
    pub offset_toward_parent: Quad,
}

impl TreeLocation {
    pub fn at_vertex(v: VertexId) -> Self {
        TreeLocation { vertex: v, offset_toward_parent: Quad::zero() }
    }

    pub fn is_vertex(&self) -> bool {
        self.offset_toward_parent.is_zero()
    }
}

pub struct MetricTree {
    id: u64,
    root: VertexId,
    vertices: BTreeMap<VertexId, VertexData>,
    next: u32,
}

impl MetricTree {
    /// A tree with a single root vertex.
    pub fn new() -> Self {
        let root = VertexId(0);
        let mut vertices = BTreeMap::new();
        vertices.insert(
            root,
            VertexData { parent: None, children: Vec::new(), depth: Quad::zero() },
        );
        MetricTree { id: fresh_tree_id(), root, vertices, next: 1 }
    }

    /// Copy with the same vertices and ids but a fresh tree identity; the
    /// copy may be mutated without affecting paths tied to the original.
    pub fn fork(&self) -> Self {
        MetricTree {
            id: fresh_tree_id(),
            root: self.root,
            vertices: self.vertices.clone(),
            next: self.next,
        }
    }

    /// Rebuilds a tree from its parent map, recomputing depths and validating
    /// connectivity, acyclicity, and positive lengths.
    pub fn from_parts(
        root: VertexId,
        parents: BTreeMap<VertexId, Option<(VertexId, Quad)>>,
    ) -> Result<Self, TreeError> {
        match parents.get(&root) {
            Some(None) => {}
            Some(Some(_)) => {
                return Err(TreeError::Structure("root must have no parent".into()))
            }
            None => return Err(TreeError::Structure("root not among vertices".into())),
        }
        let mut vertices: BTreeMap<VertexId, VertexData> = BTreeMap::new();
        for (&v, p) in &parents {
            if let Some((pv, len)) = p {
                if !parents.contains_key(pv) {
                    return Err(TreeError::UnknownVertex(*pv));
                }
                if len.sign() <= 0 {
                    return Err(TreeError::NonPositiveLength);
                }
            } else if v != root {
                return Err(TreeError::Structure(format!("{v} has no parent and is not the root")));
            }
            vertices.insert(
                v,
                VertexData { parent: p.clone(), children: Vec::new(), depth: Quad::zero() },
            );
        }
        let ids: Vec<VertexId> = vertices.keys().copied().collect();
        for v in &ids {
            if let Some((pv, _)) = vertices[v].parent.clone() {
                vertices.get_mut(&pv).unwrap().children.push(*v);
            }
        }
        // Depths by walking up; also detects cycles (a walk longer than the
        // vertex count cannot happen in a tree).
        let n = ids.len();
        for v in &ids {
            let mut steps = 0usize;
            let mut cur = *v;
            let mut acc = Quad::zero();
            while let Some((pv, len)) = vertices[&cur].parent.clone() {
                acc = &acc + &len;
                cur = pv;
                steps += 1;
                if steps > n {
                    return Err(TreeError::Structure("parent links contain a cycle".into()));
                }
            }
            if cur != root {
                return Err(TreeError::Structure(format!("{v} does not reach the root")));
            }
            vertices.get_mut(v).unwrap().depth = acc;
        }
        let next = ids.iter().map(|v| v.0 + 1).max().unwrap_or(1);
        Ok(MetricTree { id: fresh_tree_id(), root, vertices, next })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn root(&self) -> VertexId {
        self.root
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.vertices.contains_key(&v)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices.keys().copied()
    }

    /// Edges as `(child, parent, length)`.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId, &Quad)> + '_ {
        self.vertices
            .iter()
            .filter_map(|(&v, d)| d.parent.as_ref().map(|(p, len)| (v, *p, len)))
    }

    pub fn parent(&self, v: VertexId) -> Result<Option<(VertexId, &Quad)>, TreeError> {
        let data = self.vertices.get(&v).ok_or(TreeError::UnknownVertex(v))?;
        Ok(data.parent.as_ref().map(|(p, len)| (*p, len)))
    }

    pub fn children(&self, v: VertexId) -> Result<&[VertexId], TreeError> {
        let data = self.vertices.get(&v).ok_or(TreeError::UnknownVertex(v))?;
        Ok(&data.children)
    }

    pub fn depth(&self, v: VertexId) -> Result<&Quad, TreeError> {
        let data = self.vertices.get(&v).ok_or(TreeError::UnknownVertex(v))?;
        Ok(&data.depth)
    }

    pub fn is_leaf(&self, v: VertexId) -> Result<bool, TreeError> {
        Ok(self.children(v)?.is_empty() && v != self.root)
    }

    /// Length of the edge from `v` to its parent.
    pub fn edge_length(&self, v: VertexId) -> Result<&Quad, TreeError> {
        match self.parent(v)? {
            Some((_, len)) => Ok(len),
            None => Err(TreeError::RootHasNoParentEdge),
        }
    }

    /// Adds a pendant vertex below `at`; existing depths are untouched.
    pub fn attach_leaf(&mut self, at: VertexId, length: Quad) -> Result<VertexId, TreeError> {
        if length.sign() <= 0 {
            return Err(TreeError::NonPositiveLength);
        }
        let depth = {
            let data = self.vertices.get(&at).ok_or(TreeError::UnknownVertex(at))?;
            &data.depth + &length
        };
        let id = VertexId(self.next);
        self.next += 1;
        self.vertices.insert(
            id,
            VertexData { parent: Some((at, length)), children: Vec::new(), depth },
        );
        self.vertices.get_mut(&at).unwrap().children.push(id);
        Ok(id)
    }

    /// Splits the edge from `child` to its parent at the given fraction
    /// measured from `child`. All geodesic distances between pre-existing
    /// points are preserved; returns the new vertex.
    pub fn subdivide_edge(
        &mut self,
        child: VertexId,
        fraction: &Dyadic,
    ) -> Result<VertexId, TreeError> {
        if fraction.sign() <= 0 || *fraction >= Dyadic::one() {
            return Err(TreeError::FractionOutOfRange);
        }
        let (pv, len) = match self.parent(child)? {
            Some((pv, len)) => (pv, len.clone()),
            None => return Err(TreeError::RootHasNoParentEdge),
        };
        let lower = len.scale(fraction);
        let upper = &len - &lower;
        let mid_depth = {
            let child_depth = &self.vertices[&child].depth;
            child_depth - &lower
        };
        let mid = VertexId(self.next);
        self.next += 1;
        self.vertices.insert(
            mid,
            VertexData {
                parent: Some((pv, upper)),
                children: vec![child],
                depth: mid_depth,
            },
        );
        let pdata = self.vertices.get_mut(&pv).unwrap();
        let slot = pdata.children.iter_mut().find(|c| **c == child).unwrap();
        *slot = mid;
        let cdata = self.vertices.get_mut(&child).unwrap();
        cdata.parent = Some((mid, lower));
        Ok(mid)
    }

    /// Canonical location constructor; accepts `0 ≤ offset ≤ edge_length` and
    /// normalizes the far endpoint to the parent vertex.
    pub fn location(&self, vertex: VertexId, offset: Quad) -> Result<TreeLocation, TreeError> {
        if !self.contains(vertex) {
            return Err(TreeError::UnknownVertex(vertex));
        }
        if offset.sign() < 0 {
            return Err(TreeError::OffsetOutOfRange);
        }
        if offset.is_zero() {
            return Ok(TreeLocation::at_vertex(vertex));
        }
        let (pv, len) = match self.parent(vertex)? {
            Some((pv, len)) => (pv, len),
            None => return Err(TreeError::OffsetOutOfRange),
        };
        if offset > *len {
            return Err(TreeError::OffsetOutOfRange);
        }
        if offset == *len {
            return Ok(TreeLocation::at_vertex(pv));
        }
        Ok(TreeLocation { vertex, offset_toward_parent: offset })
    }

    fn check_location(&self, loc: &TreeLocation) -> Result<(), TreeError> {
        let data = self
            .vertices
            .get(&loc.vertex)
            .ok_or(TreeError::UnknownVertex(loc.vertex))?;
        if loc.offset_toward_parent.is_zero() {
            return Ok(());
        }
        match &data.parent {
            None => Err(TreeError::OffsetOutOfRange),
            Some((_, len)) => {
                if loc.offset_toward_parent.sign() < 0 || loc.offset_toward_parent >= *len {
                    Err(TreeError::OffsetOutOfRange)
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn lca(&self, mut u: VertexId, mut v: VertexId) -> Result<VertexId, TreeError> {
        if !self.contains(u) {
            return Err(TreeError::UnknownVertex(u));
        }
        if !self.contains(v) {
            return Err(TreeError::UnknownVertex(v));
        }
        while u != v {
            let du = &self.vertices[&u].depth;
            let dv = &self.vertices[&v].depth;
            match du.cmp(dv) {
                std::cmp::Ordering::Greater => u = self.vertices[&u].parent.as_ref().unwrap().0,
                std::cmp::Ordering::Less => v = self.vertices[&v].parent.as_ref().unwrap().0,
                std::cmp::Ordering::Equal => {
                    u = self.vertices[&u].parent.as_ref().unwrap().0;
                    v = self.vertices[&v].parent.as_ref().unwrap().0;
                }
            }
        }
        Ok(u)
    }

    /// Geodesic distance between vertices: `depth(u) + depth(v) − 2·depth(lca)`.
    pub fn distance_vv(&self, u: VertexId, v: VertexId) -> Result<Quad, TreeError> {
        let l = self.lca(u, v)?;
        let du = &self.vertices[&u].depth;
        let dv = &self.vertices[&v].depth;
        let dl = &self.vertices[&l].depth;
        Ok(&(du + dv) - &dl.double())
    }

    fn point_to_vertex(&self, p: &TreeLocation, w: VertexId) -> Result<Quad, TreeError> {
        if p.is_vertex() {
            return self.distance_vv(p.vertex, w);
        }
        let (pv, len) = self.parent(p.vertex)?.unwrap();
        let via_child = &p.offset_toward_parent + &self.distance_vv(p.vertex, w)?;
        let via_parent = &(len - &p.offset_toward_parent) + &self.distance_vv(pv, w)?;
        Ok(Quad::min(&via_child, &via_parent))
    }

    /// Length of the unique arc between two points of the tree.
    pub fn geodesic_distance(
        &self,
        p: &TreeLocation,
        q: &TreeLocation,
    ) -> Result<Quad, TreeError> {
        self.check_location(p)?;
        self.check_location(q)?;
        if p.vertex == q.vertex {
            let diff = &p.offset_toward_parent - &q.offset_toward_parent;
            return Ok(diff.abs());
        }
        if q.is_vertex() {
            return self.point_to_vertex(p, q.vertex);
        }
        if p.is_vertex() {
            return self.point_to_vertex(q, p.vertex);
        }
        let (pv, len) = self.parent(p.vertex)?.unwrap();
        let len = len.clone();
        let via_child = &p.offset_toward_parent + &self.point_to_vertex(q, p.vertex)?;
        let via_parent = &(&len - &p.offset_toward_parent) + &self.point_to_vertex(q, pv)?;
        Ok(Quad::min(&via_child, &via_parent))
    }

    /// The vertex chain of the geodesic from `u` to `v`, inclusive.
    pub fn geodesic_chain(&self, u: VertexId, v: VertexId) -> Result<Vec<VertexId>, TreeError> {
        let l = self.lca(u, v)?;
        let mut up = Vec::new();
        let mut cur = u;
        while cur != l {
            up.push(cur);
            cur = self.vertices[&cur].parent.as_ref().unwrap().0;
        }
        up.push(l);
        let mut down = Vec::new();
        cur = v;
        while cur != l {
            down.push(cur);
            cur = self.vertices[&cur].parent.as_ref().unwrap().0;
        }
        up.extend(down.into_iter().rev());
        Ok(up)
    }

    /// The point at arc distance `dist` from `u` along the geodesic to `v`.
    pub fn locate_on_geodesic(
        &self,
        u: VertexId,
        v: VertexId,
        dist: &Quad,
    ) -> Result<TreeLocation, TreeError> {
        if dist.sign() < 0 {
            return Err(TreeError::OffsetOutOfRange);
        }
        let chain = self.geodesic_chain(u, v)?;
        let mut walked = Quad::zero();
        for pair in chain.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            // One of a, b is the other's parent.
            let (child, towards_parent) = if self.vertices[&a].parent.as_ref().map(|(p, _)| *p)
                == Some(b)
            {
                (a, true)
            } else {
                (b, false)
            };
            let len = self.edge_length(child)?.clone();
            let reach = &walked + &len;
            if *dist <= reach {
                let into_edge = dist - &walked;
                let offset = if towards_parent {
                    into_edge
                } else {
                    &len - &into_edge
                };
                return self.location(child, offset);
            }
            walked = reach;
        }
        if *dist == walked {
            return Ok(TreeLocation::at_vertex(v));
        }
        Err(TreeError::OffsetOutOfRange)
    }

    /// Copy of the tree without the given leaves, same ids for the rest.
    pub fn without_leaves(&self, leaves: &BTreeSet<VertexId>) -> Result<MetricTree, TreeError> {
        let mut out = self.fork();
        for &v in leaves {
            if !out.is_leaf(v)? {
                return Err(TreeError::NotALeaf(v));
            }
        }
        for &v in leaves {
            let (pv, _) = out.vertices[&v].parent.clone().unwrap();
            out.vertices.remove(&v);
            let pdata = out.vertices.get_mut(&pv).unwrap();
            pdata.children.retain(|c| *c != v);
        }
        Ok(out)
    }

    /// Same root, vertex set, parent links, and lengths (tree identity aside).
    pub fn structurally_equal(&self, other: &MetricTree) -> bool {
        if self.root != other.root || self.vertices.len() != other.vertices.len() {
            return false;
        }
        self.vertices.iter().all(|(v, d)| match other.vertices.get(v) {
            None => false,
            Some(od) => match (&d.parent, &od.parent) {
                (None, None) => true,
                (Some((p, l)), Some((op, ol))) => p == op && l == ol,
                _ => false,
            },
        })
    }
}

impl Default for MetricTree {
    fn default() -> Self {
        MetricTree::new()
    }
}

impl fmt::Debug for MetricTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "MetricTree({} vertices, root {}, id {})",
            self.vertices.len(),
            self.root,
            self.id
        )
    }
}

#[derive(Serialize, Deserialize)]
struct EdgeRepr {
    id: VertexId,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    parent: Option<(VertexId, Quad)>,
}

#[derive(Serialize, Deserialize)]
struct TreeRepr {
    root: VertexId,
    vertices: Vec<EdgeRepr>,
}

impl Serialize for MetricTree {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let vertices = self
            .vertices
            .iter()
            .map(|(&id, d)| EdgeRepr { id, parent: d.parent.clone() })
            .collect();
        TreeRepr { root: self.root, vertices }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MetricTree {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = TreeRepr::deserialize(d)?;
        let mut parents = BTreeMap::new();
        for e in repr.vertices {
            if parents.insert(e.id, e.parent).is_some() {
                return Err(D::Error::custom(format!("duplicate vertex {}", e.id)));
            }
        }
        MetricTree::from_parts(repr.root, parents).map_err(D::Error::custom)
    }
}

/// A monotone retraction collapsing a set of pendant edges of `source` to
/// their attachment vertices; the identity everywhere else. The target is the
/// source without the collapsed leaves, under the same vertex ids.
#[derive(Clone)]
pub struct Retraction {
    source: Arc<MetricTree>,
    target: Arc<MetricTree>,
    collapsed: BTreeSet<VertexId>,
}

/// Builds the retraction that collapses the given leaves of `source`.
pub fn leaf_collapse_retraction(
    source: &Arc<MetricTree>,
    leaves: BTreeSet<VertexId>,
) -> Result<Retraction, TreeError> {
    let target = Arc::new(source.without_leaves(&leaves)?);
    Ok(Retraction { source: Arc::clone(source), target, collapsed: leaves })
}

impl Retraction {
    pub fn source(&self) -> &Arc<MetricTree> {
        &self.source
    }

    pub fn target(&self) -> &Arc<MetricTree> {
        &self.target
    }

    pub fn collapsed_leaves(&self) -> &BTreeSet<VertexId> {
        &self.collapsed
    }

    /// Image of a source point. Points on a collapsed pendant edge map to the
    /// attachment vertex; everything else is fixed.
    pub fn apply(&self, loc: &TreeLocation) -> Result<TreeLocation, TreeError> {
        self.source.check_location(loc)?;
        if self.collapsed.contains(&loc.vertex) {
            let (pv, _) = self.source.parent(loc.vertex)?.unwrap();
            return Ok(TreeLocation::at_vertex(pv));
        }
        Ok(loc.clone())
    }

    /// Sup distance between the retraction and the identity: the longest
    /// collapsed edge (the leaf endpoint moves exactly that far).
    pub fn sup_displacement(&self) -> Quad {
        let mut sup = Quad::zero();
        for &v in &self.collapsed {
            let len = self.source.edge_length(v).expect("collapsed leaf has an edge");
            sup = Quad::max(&sup, len);
        }
        sup
    }

    /// Structural validity: collapsed vertices are leaves of the source and
    /// the target is exactly the source without them.
    pub fn validate(&self) -> Result<(), TreeError> {
        for &v in &self.collapsed {
            if !self.source.is_leaf(v)? {
                return Err(TreeError::NotALeaf(v));
            }
        }
        let expect = self.source.without_leaves(&self.collapsed)?;
        if !expect.structurally_equal(&self.target) {
            return Err(TreeError::Structure(
                "retraction target is not the source minus the collapsed leaves".into(),
            ));
        }
        Ok(())
    }
}

impl fmt::Debug for Retraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Retraction(collapsing {} leaves)", self.collapsed.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::Quad;

    fn dy(n: i64, e: u32) -> Dyadic {
        Dyadic::new(n, e)
    }

    fn qd(n: i64, e: u32) -> Quad {
        Quad::from_dyadic(dy(n, e))
    }

    fn qs(n: i64, e: u32) -> Quad {
        Quad::sqrt2_times(dy(n, e))
    }

    /// E_1: root v0, spine v0 -> v1/2 -> v1, both edges length 1.
    fn e1() -> (MetricTree, VertexId, VertexId, VertexId) {
        let mut t = MetricTree::new();
        let v0 = t.root();
        let vh = t.attach_leaf(v0, Quad::one()).unwrap();
        let v1 = t.attach_leaf(vh, Quad::one()).unwrap();
        (t, v0, vh, v1)
    }

    /// Ẽ_1: a single edge of length √2.
    fn et1() -> (MetricTree, VertexId, VertexId) {
        let mut t = MetricTree::new();
        let v0 = t.root();
        let v1 = t.attach_leaf(v0, qs(1, 0)).unwrap();
        (t, v0, v1)
    }

    #[test]
    fn attach_examples() {
        let (mut et, _v0, v1) = et1();
        let mid = et.subdivide_edge(v1, &dy(1, 1)).unwrap();
        assert_eq!(et.depth(mid).unwrap(), &qs(1, 1));
        let w = et.attach_leaf(mid, qs(1, 1)).unwrap();
        assert_eq!(et.depth(w).unwrap(), &qs(1, 0));

        let mut t = MetricTree::new();
        let leaf = t.attach_leaf(t.root(), Quad::one()).unwrap();
        assert_eq!(t.depth(leaf).unwrap(), &Quad::one());

        assert_eq!(
            t.attach_leaf(t.root(), Quad::zero()),
            Err(TreeError::NonPositiveLength)
        );
        assert_eq!(
            t.attach_leaf(VertexId(99), Quad::one()),
            Err(TreeError::UnknownVertex(VertexId(99)))
        );
    }

    #[test]
    fn subdivision_preserves_metric() {
        let (mut t, v0, vh, v1) = e1();
        let u1 = t.subdivide_edge(vh, &dy(1, 1)).unwrap();
        assert_eq!(t.depth(u1).unwrap(), &qd(1, 1));
        assert_eq!(t.distance_vv(v0, vh).unwrap(), Quad::one());
        assert_eq!(t.distance_vv(v0, v1).unwrap(), qd(2, 0));
        // Subdivide both halves again; all old distances still intact.
        t.subdivide_edge(u1, &dy(1, 1)).unwrap();
        t.subdivide_edge(vh, &dy(1, 1)).unwrap();
        assert_eq!(t.distance_vv(v0, vh).unwrap(), Quad::one());
        assert_eq!(
            t.subdivide_edge(vh, &Dyadic::one()),
            Err(TreeError::FractionOutOfRange)
        );
        let (mut t2, v0, _, _) = e1();
        assert_eq!(
            t2.subdivide_edge(v0, &dy(1, 1)),
            Err(TreeError::RootHasNoParentEdge)
        );
    }

    #[test]
    fn geodesic_distances() {
        let (t, v0, _, v1) = e1();
        assert_eq!(t.distance_vv(v0, v1).unwrap(), qd(2, 0));

        let (et, w0, w1) = et1();
        assert_eq!(et.distance_vv(w0, w1).unwrap(), qs(1, 0));

        // Build E_2 by hand: subdivide both edges, attach leaves of length 1/2.
        let (mut t, v0, vh, v1) = e1();
        let u1 = t.subdivide_edge(vh, &dy(1, 1)).unwrap();
        let u2 = t.subdivide_edge(v1, &dy(1, 1)).unwrap();
        let w1 = t.attach_leaf(u1, qd(1, 1)).unwrap();
        let w2 = t.attach_leaf(u2, qd(1, 1)).unwrap();
        assert_eq!(t.distance_vv(v0, w1).unwrap(), Quad::one());
        assert_eq!(t.distance_vv(w1, w2).unwrap(), qd(2, 0));
        assert_eq!(t.distance_vv(w1, vh).unwrap(), Quad::one());
    }

    #[test]
    fn mid_edge_distances() {
        let (t, v0, vh, v1) = e1();
        let p = t.location(vh, qd(1, 2)).unwrap(); // depth 3/4, offsets point at the parent
        let q = t.location(v1, qd(1, 1)).unwrap(); // midpoint of upper edge, depth 3/2
        assert_eq!(t.geodesic_distance(&p, &q).unwrap(), qd(3, 2));
        assert_eq!(
            t.geodesic_distance(&p, &TreeLocation::at_vertex(v0)).unwrap(),
            qd(3, 2)
        );
        assert_eq!(t.geodesic_distance(&p, &p).unwrap(), Quad::zero());
        // offset == edge length normalizes to the parent vertex
        assert_eq!(t.location(vh, Quad::one()).unwrap(), TreeLocation::at_vertex(v0));
        assert_eq!(t.location(vh, qd(3, 1)), Err(TreeError::OffsetOutOfRange));
    }

    #[test]
    fn locate_on_geodesic_walks_edges() {
        let (mut t, v0, vh, _v1) = e1();
        let u1 = t.subdivide_edge(vh, &dy(1, 1)).unwrap();
        let w1 = t.attach_leaf(u1, qd(1, 1)).unwrap();
        // From v0 towards w1: distance 3/4 lands halfway up the pendant edge.
        let loc = t.locate_on_geodesic(v0, w1, &qd(3, 2)).unwrap();
        assert_eq!(loc, t.location(w1, qd(1, 2)).unwrap());
        let end = t.locate_on_geodesic(v0, w1, &Quad::one()).unwrap();
        assert_eq!(end, TreeLocation::at_vertex(w1));
        assert!(t.locate_on_geodesic(v0, w1, &qd(9, 3)).is_err());
    }

    #[test]
    fn retraction_examples() {
        let (mut t, _v0, vh, v1) = e1();
        let u1 = t.subdivide_edge(vh, &dy(1, 1)).unwrap();
        let u2 = t.subdivide_edge(v1, &dy(1, 1)).unwrap();
        let w1 = t.attach_leaf(u1, qd(1, 1)).unwrap();
        let w2 = t.attach_leaf(u2, qd(1, 1)).unwrap();
        let t = Arc::new(t);
        let r = leaf_collapse_retraction(&t, [w1, w2].into_iter().collect()).unwrap();
        assert_eq!(r.sup_displacement(), qd(1, 1));
        r.validate().unwrap();
        let img = r.apply(&t.location(w1, qd(1, 2)).unwrap()).unwrap();
        assert_eq!(img, TreeLocation::at_vertex(u1));
        let fixed = r.apply(&TreeLocation::at_vertex(vh)).unwrap();
        assert_eq!(fixed, TreeLocation::at_vertex(vh));
        assert!(!r.target().contains(w1));

        let (mut et, _w0, v1) = et1();
        let mid = et.subdivide_edge(v1, &dy(1, 1)).unwrap();
        let wt = et.attach_leaf(mid, qs(1, 1)).unwrap();
        let et = Arc::new(et);
        let rt = leaf_collapse_retraction(&et, [wt].into_iter().collect()).unwrap();
        assert_eq!(rt.sup_displacement(), qs(1, 1));

        let empty = leaf_collapse_retraction(&t, BTreeSet::new()).unwrap();
        assert_eq!(empty.sup_displacement(), Quad::zero());
        assert!(empty.target().structurally_equal(&t));

        assert_eq!(
            leaf_collapse_retraction(&t, [vh].into_iter().collect()).unwrap_err(),
            TreeError::NotALeaf(vh)
        );
    }

    #[test]
    fn serde_round_trip_validates() {
        let (t, ..) = e1();
        let s = serde_json::to_string(&t).unwrap();
        let back: MetricTree = serde_json::from_str(&s).unwrap();
        assert!(back.structurally_equal(&t));
        // A cycle must be rejected.
        let bad = r#"{"root":0,"vertices":[
            {"id":0},
            {"id":1,"parent":[2,{"rat":{"num":"1","exp":0},"irr":{"num":"0","exp":0}}]},
            {"id":2,"parent":[1,{"rat":{"num":"1","exp":0},"irr":{"num":"0","exp":0}}]}
        ]}"#;
        assert!(serde_json::from_str::<MetricTree>(bad).is_err());
    }
}
