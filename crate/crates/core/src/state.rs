//! Tower persistence: a versioned JSON document with all numbers in exact
//! encoding and a content digest for reproducibility checks.
//!
//! Loading validates structure (tree shape, path parameters, image
//! completeness, triangle shape) but deliberately not the tower's metric
//! hypotheses: a loaded state may be a perturbed one whose defects the
//! verification suite is expected to find and report.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::construct::{BuildError, OrderedTriangle, RetractionPair, TowerLevel};
use crate::exactnum::{Dyadic, Quad};
use crate::mtree::{leaf_collapse_retraction, MetricTree, TreeError, VertexId};
use crate::plcurve::{PathError, PlanarMap, Point2, TreePath};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Error, Debug)]
pub enum StateError {
    #[error("state file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("invalid state: {0}")]
    Invalid(String),
}

impl From<TreeError> for StateError {
    fn from(e: TreeError) -> Self {
        StateError::Invalid(e.to_string())
    }
}

impl From<PathError> for StateError {
    fn from(e: PathError) -> Self {
        StateError::Invalid(e.to_string())
    }
}

impl From<BuildError> for StateError {
    fn from(e: BuildError) -> Self {
        StateError::Invalid(e.to_string())
    }
}

#[derive(Serialize, Deserialize)]
struct MapRepr {
    lipschitz: Quad,
    images: Vec<(VertexId, Point2)>,
}

#[derive(Serialize, Deserialize)]
struct TriangleRepr {
    a: Point2,
    b: Point2,
    c: Point2,
}

#[derive(Serialize, Deserialize)]
struct RetractionRepr {
    e_collapsed: Vec<VertexId>,
    et_collapsed: Vec<VertexId>,
}

#[derive(Serialize, Deserialize)]
struct LevelMeta {
    e_edges: usize,
    et_edges: usize,
    pi_breakpoints: usize,
    pit_breakpoints: usize,
    triangles: usize,
}

#[derive(Serialize, Deserialize)]
struct LevelRepr {
    n: u32,
    meta: LevelMeta,
    e: MetricTree,
    et: MetricTree,
    pi: Vec<(Dyadic, VertexId)>,
    pit: Vec<(Dyadic, VertexId)>,
    g: MapRepr,
    gt: MapRepr,
    triangles: Vec<TriangleRepr>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    retraction_from_next: Option<RetractionRepr>,
}

#[derive(Serialize, Deserialize)]
struct StateRepr {
    format_version: u32,
    digest: String,
    levels: Vec<LevelRepr>,
}

fn level_repr(level: &TowerLevel) -> LevelRepr {
    let map_repr = |m: &PlanarMap| MapRepr {
        lipschitz: m.lipschitz().clone(),
        images: m.images().iter().map(|(v, p)| (*v, p.clone())).collect(),
    };
    LevelRepr {
        n: level.n,
        meta: LevelMeta {
            e_edges: level.e.edge_count(),
            et_edges: level.et.edge_count(),
            pi_breakpoints: level.pi.breakpoints().len(),
            pit_breakpoints: level.pit.breakpoints().len(),
            triangles: level.triangles.len(),
        },
        e: level.e.fork(),
        et: level.et.fork(),
        pi: level.pi.breakpoints().to_vec(),
        pit: level.pit.breakpoints().to_vec(),
        g: map_repr(&level.g),
        gt: map_repr(&level.gt),
        triangles: level
            .triangles
            .iter()
            .map(|t| TriangleRepr { a: t.a().clone(), b: t.b().clone(), c: t.c().clone() })
            .collect(),
        retraction_from_next: level.retraction_from_next.as_ref().map(|pair| RetractionRepr {
            e_collapsed: pair.e.collapsed_leaves().iter().copied().collect(),
            et_collapsed: pair.et.collapsed_leaves().iter().copied().collect(),
        }),
    }
}

fn levels_json(tower: &[TowerLevel]) -> String {
    let reprs: Vec<LevelRepr> = tower.iter().map(level_repr).collect();
    serde_json::to_string(&reprs).expect("tower serialization cannot fail")
}

/// Hex SHA-256 of the canonical (compact) serialization of the levels array.
pub fn tower_digest(tower: &[TowerLevel]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(levels_json(tower).as_bytes());
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// The full state document, pretty-printed for diffability. The digest
/// inside covers the compact levels serialization, so it is independent of
/// the outer formatting.
pub fn serialize_tower(tower: &[TowerLevel]) -> String {
    let reprs: Vec<LevelRepr> = tower.iter().map(level_repr).collect();
    let state = StateRepr {
        format_version: FORMAT_VERSION,
        digest: tower_digest(tower),
        levels: reprs,
    };
    let mut out = serde_json::to_string_pretty(&state).expect("state serialization cannot fail");
    out.push('\n');
    out
}

pub struct LoadedState {
    pub tower: Vec<TowerLevel>,
    pub format_version: u32,
    pub stored_digest: String,
    pub digest_ok: bool,
}

fn rebuild_map(tree: &Arc<MetricTree>, repr: MapRepr) -> Result<PlanarMap, StateError> {
    let mut images: BTreeMap<VertexId, Point2> = BTreeMap::new();
    for (v, p) in repr.images {
        if images.insert(v, p).is_some() {
            return Err(StateError::Invalid(format!("duplicate image for {v}")));
        }
    }
    for v in tree.vertex_ids() {
        if !images.contains_key(&v) {
            return Err(StateError::Invalid(format!("missing image for {v}")));
        }
    }
    if images.len() != tree.vertex_count() {
        return Err(StateError::Invalid("map has images for unknown vertices".into()));
    }
    // Lipschitz validity is judged by the verification suite, not at load.
    Ok(PlanarMap::from_parts_unchecked(tree.id(), images, repr.lipschitz))
}

pub fn parse_state(json: &str) -> Result<LoadedState, StateError> {
    let repr: StateRepr = serde_json::from_str(json)?;
    if repr.format_version != FORMAT_VERSION {
        return Err(StateError::UnsupportedVersion(repr.format_version));
    }
    if repr.levels.is_empty() {
        return Err(StateError::Invalid("state has no levels".into()));
    }

    let mut tower: Vec<TowerLevel> = Vec::with_capacity(repr.levels.len());
    let mut retractions: Vec<Option<RetractionRepr>> = Vec::with_capacity(repr.levels.len());
    for (idx, lvl) in repr.levels.into_iter().enumerate() {
        if lvl.n as usize != idx + 1 {
            return Err(StateError::Invalid(format!(
                "levels out of order: found n = {} at position {}",
                lvl.n,
                idx + 1
            )));
        }
        let e = Arc::new(lvl.e);
        let et = Arc::new(lvl.et);
        let pi = TreePath::new(&e, lvl.pi)?;
        let pit = TreePath::new(&et, lvl.pit)?;
        let g = rebuild_map(&e, lvl.g)?;
        let gt = rebuild_map(&et, lvl.gt)?;
        let triangles = lvl
            .triangles
            .into_iter()
            .map(|t| OrderedTriangle::new(t.a, t.b, t.c))
            .collect::<Result<Vec<_>, _>>()?;
        tower.push(TowerLevel {
            n: lvl.n,
            e,
            et,
            pi,
            pit,
            g,
            gt,
            triangles,
            retraction_from_next: None,
        });
        retractions.push(lvl.retraction_from_next);
    }

    // Retraction wiring needs the next level's trees.
    for k in 0..tower.len() {
        if let Some(r) = retractions[k].take() {
            if k + 1 >= tower.len() {
                return Err(StateError::Invalid(
                    "top level declares a retraction from a nonexistent next level".into(),
                ));
            }
            let pair = RetractionPair {
                e: leaf_collapse_retraction(&tower[k + 1].e, r.e_collapsed.into_iter().collect())?,
                et: leaf_collapse_retraction(
                    &tower[k + 1].et,
                    r.et_collapsed.into_iter().collect(),
                )?,
            };
            tower[k].retraction_from_next = Some(pair);
        }
    }

    let digest_ok = tower_digest(&tower) == repr.digest;
    Ok(LoadedState {
        tower,
        format_version: repr.format_version,
        stored_digest: repr.digest,
        digest_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::build_tower;

    #[test]
    fn round_trip_preserves_everything() {
        let tower = build_tower(3).unwrap();
        let json = serialize_tower(&tower);
        let loaded = parse_state(&json).unwrap();
        assert!(loaded.digest_ok);
        assert_eq!(loaded.tower.len(), 3);
        for (orig, back) in tower.iter().zip(loaded.tower.iter()) {
            assert!(orig.e.structurally_equal(&back.e));
            assert!(orig.et.structurally_equal(&back.et));
            assert_eq!(orig.pi.breakpoints(), back.pi.breakpoints());
            assert_eq!(orig.triangles, back.triangles);
            assert_eq!(orig.g.images(), back.g.images());
            assert_eq!(
                orig.retraction_from_next.is_some(),
                back.retraction_from_next.is_some()
            );
        }
        // Digest survives the round trip bit-exactly.
        assert_eq!(tower_digest(&tower), tower_digest(&loaded.tower));
    }

    #[test]
    fn serialization_is_deterministic() {
        let a = serialize_tower(&build_tower(2).unwrap());
        let b = serialize_tower(&build_tower(2).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn tampering_flips_digest_but_loads() {
        let tower = build_tower(2).unwrap();
        let json = serialize_tower(&tower);
        // Perturb one edge length (1/2 → 3/2); structure stays valid.
        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["levels"][1]["e"]["vertices"][1]["parent"][1]["rat"]["num"] = "3".into();
        let tampered = serde_json::to_string(&v).unwrap();
        let loaded = parse_state(&tampered).unwrap();
        assert!(!loaded.digest_ok);
        assert_eq!(
            loaded.tower[1].e.edge_length(VertexId(1)).unwrap(),
            &Quad::from_dyadic(Dyadic::new(3, 1))
        );
    }

    #[test]
    fn rejects_bad_versions_and_schemas() {
        let tower = build_tower(1).unwrap();
        let json = serialize_tower(&tower).replace(
            "\"format_version\": 1",
            "\"format_version\": 99",
        );
        assert!(matches!(
            parse_state(&json),
            Err(StateError::UnsupportedVersion(99))
        ));
        assert!(parse_state("{}").is_err());
    }
}
