//! The aggregated verification run over a built tower.
//!
//! Sections map one-to-one onto the checkable content of the construction:
//! the seven inductive hypotheses per level, the curve gap bound, retraction
//! displacements, edge isometry, count and length closed forms, density of
//! the breakpoint images, metric containment of each level in the next,
//! convex-hull containment across levels, the tree-like certificates with
//! their class-consistency cross-checks, and the simple-closed-curve
//! refutation. Every check is exact; `all_pass` is their conjunction.

use serde::Serialize;
use thiserror::Error;

use crate::construct::{check_parameterization, BuildError, TowerLevel};
use crate::exactnum::{Dyadic, NumError, Quad};
use crate::mtree::{MetricTree, TreeError, TreeLocation};
use crate::plcurve::{
    first_uncovered_grid_point, loop_concat_reverse_plane, loop_concat_reverse_tree, map_path,
    path_length, sup_distance, PathError, PlanePath, Point2,
};
use crate::treelike::{
    class_consistency_check, decide_polygonal_loop, height_from_tree_path, verify_height_function,
    winding_number, HeightFunction, Verdict, VerifyError,
};

#[derive(Error, Debug)]
pub enum SuiteError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// Knobs for the run. The defaults are the shipped configuration: pair grids
/// refined once up to level 4 and unrefined above, certificates capped at
/// level 6 (the pair grid grows sixteenfold per level).
#[derive(Clone, Debug, Serialize)]
pub struct SuiteConfig {
    pub refine_low: u32,
    pub refine_cutoff: u32,
    pub refine_high: u32,
    pub cert_max_level: u32,
    /// Exhaustive pair checks below this vertex count, sampling above.
    pub embed_exhaustive_below: usize,
    pub embed_samples: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            refine_low: 1,
            refine_cutoff: 4,
            refine_high: 0,
            cert_max_level: 6,
            embed_exhaustive_below: 100,
            embed_samples: 2000,
        }
    }
}

impl SuiteConfig {
    pub fn refine_for(&self, n: u32) -> u32 {
        if n <= self.refine_cutoff {
            self.refine_low
        } else {
            self.refine_high
        }
    }
}

fn unit_e(n: u32) -> Quad {
    Quad::from_dyadic(Dyadic::pow2(-(n as i64 - 1)))
}

fn unit_et(n: u32) -> Quad {
    Quad::sqrt2_times(Dyadic::pow2(-(n as i64 - 1)))
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesesEntry {
    pub n: u32,
    pub edge_lengths_ok: bool,
    pub retraction_ok: bool,
    pub maps_lipschitz_ok: bool,
    pub map_restriction_ok: bool,
    pub triangles_ok: bool,
    pub parameterization_ok: bool,
    pub witness: Option<String>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GapEntry {
    pub n: u32,
    pub squared_sup: Dyadic,
    pub squared_bound: Dyadic,
    pub witness_param: Dyadic,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RetractionEntry {
    pub n: u32,
    pub e_displacement: Quad,
    pub et_displacement: Quad,
    pub lipschitz_pairs_checked: u64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct IsometryEntry {
    pub n: u32,
    pub e_ok: bool,
    pub et_ok: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CountsEntry {
    pub n: u32,
    pub e_edges: usize,
    pub e_edges_expected: usize,
    pub et_edges: usize,
    pub et_edges_expected: usize,
    pub pi_breakpoints: usize,
    pub pi_breakpoints_expected: usize,
    pub pit_breakpoints: usize,
    pub pit_breakpoints_expected: usize,
    pub curve_length: Quad,
    pub curve_length_expected: Quad,
    pub curve_t_length: Quad,
    pub curve_t_length_expected: Quad,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityEntry {
    pub n: u32,
    pub radius: Quad,
    pub grid: u32,
    pub gap_witness: Option<Point2>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EmbedEntry {
    pub n: u32,
    pub vertices_contained: bool,
    pub pairs_checked: u64,
    pub distance_mismatches: u64,
    pub exhaustive: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ContainmentEntry {
    pub base_level: u32,
    pub upper_level: u32,
    pub points_checked: u64,
    pub outside: u64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateEntry {
    pub n: u32,
    pub side: &'static str,
    pub refine: u32,
    pub grid_points: usize,
    pub pairs_checked: u64,
    pub violation_count: u64,
    pub min_slack_squared: Quad,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassEntry {
    pub n: u32,
    pub side: &'static str,
    pub related_pairs: u64,
    pub violation_count: u64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RefutationEntry {
    pub verdict: String,
    pub reason: Option<String>,
    pub winding_point: Point2,
    pub winding_value: i64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerdictSummary {
    pub certificate_level: u32,
    pub alpha_vs_gamma: String,
    pub beta_vs_gamma: String,
    pub alpha_vs_beta: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub format_version: u32,
    pub levels: u32,
    pub config: SuiteConfig,
    pub all_pass: bool,
    pub hypotheses: Vec<HypothesesEntry>,
    pub curve_gap: Vec<GapEntry>,
    pub retraction_displacement: Vec<RetractionEntry>,
    pub edge_isometry: Vec<IsometryEntry>,
    pub counts_lengths: Vec<CountsEntry>,
    pub density: Vec<DensityEntry>,
    pub subtree_embedding: Vec<EmbedEntry>,
    pub containment: Vec<ContainmentEntry>,
    pub certificates: Vec<CertificateEntry>,
    pub class_consistency: Vec<ClassEntry>,
    pub refutation: RefutationEntry,
    pub verdicts: VerdictSummary,
}

/// Which side of the construction a certificate is for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Legs,
    Hypotenuse,
}

impl Side {
    fn name(self) -> &'static str {
        match self {
            Side::Legs => "legs",
            Side::Hypotenuse => "hypotenuse",
        }
    }
}

/// The loop `g_n ∘ (π_1 ∗ π̄_n)` (or its hypotenuse analogue) together with
/// its tree-derived height function. The level-1 path is refined inside the
/// level-n tree first so that every segment runs along a single edge.
pub fn certificate_loop(
    level1: &TowerLevel,
    level_n: &TowerLevel,
    side: Side,
) -> Result<(PlanePath, HeightFunction), SuiteError> {
    let (tree, path1, path_n, map) = match side {
        Side::Legs => (&level_n.e, &level1.pi, &level_n.pi, &level_n.g),
        Side::Hypotenuse => (&level_n.et, &level1.pit, &level_n.pit, &level_n.gt),
    };
    let lifted = path1.reinterpret(tree)?.refine_to_edges(tree)?;
    let tree_loop = loop_concat_reverse_tree(&lifted, path_n)?;
    let plane_loop = map_path(&tree_loop, tree, map)?;
    let h = height_from_tree_path(tree, &tree_loop, &Quad::one())?;
    Ok((plane_loop, h))
}

fn check_edge_lengths(level: &TowerLevel) -> (bool, Option<String>) {
    let want_e = unit_e(level.n);
    let want_et = unit_et(level.n);
    for (child, _, len) in level.e.edges() {
        if *len != want_e {
            return (false, Some(format!("edge below {child} has length {len}, want {want_e}")));
        }
    }
    for (child, _, len) in level.et.edges() {
        if *len != want_et {
            return (
                false,
                Some(format!("hypotenuse-side edge below {child} has length {len}, want {want_et}")),
            );
        }
    }
    (true, None)
}

fn check_retraction(
    prev: &TowerLevel,
    level: &TowerLevel,
    cfg: &SuiteConfig,
) -> (bool, u64, Option<String>) {
    let pair = match &prev.retraction_from_next {
        Some(p) => p,
        None => return (false, 0, Some(format!("level {} has no retraction pair", prev.n))),
    };
    if pair.e.source().id() != level.e.id() || pair.et.source().id() != level.et.id() {
        return (false, 0, Some("retraction pair is wired to the wrong trees".into()));
    }
    if let Err(e) = pair.e.validate() {
        return (false, 0, Some(format!("retraction invalid: {e}")));
    }
    if let Err(e) = pair.et.validate() {
        return (false, 0, Some(format!("hypotenuse retraction invalid: {e}")));
    }
    if pair.e.sup_displacement() != unit_e(level.n) {
        return (false, 0, Some("retraction displacement differs from the edge unit".into()));
    }
    if pair.et.sup_displacement() != unit_et(level.n) {
        return (
            false,
            0,
            Some("hypotenuse retraction displacement differs from the edge unit".into()),
        );
    }
    // 1-Lipschitz spot check on sampled vertex pairs of the source.
    let mut pairs = 0u64;
    let mut rng = 0x5EED_0000_u64 + level.n as u64;
    for r in [&pair.e, &pair.et] {
        let ids: Vec<_> = r.source().vertex_ids().collect();
        let sample = cfg.embed_samples.min((ids.len() * ids.len()) as u64 / 2);
        for _ in 0..sample {
            let u = ids[(splitmix64(&mut rng) % ids.len() as u64) as usize];
            let v = ids[(splitmix64(&mut rng) % ids.len() as u64) as usize];
            let (pu, pv) = (TreeLocation::at_vertex(u), TreeLocation::at_vertex(v));
            let before = r.source().geodesic_distance(&pu, &pv).expect("valid locations");
            let (ru, rv) = (r.apply(&pu).unwrap(), r.apply(&pv).unwrap());
            let after = r.target().geodesic_distance(&ru, &rv).expect("valid images");
            pairs += 1;
            if after > before {
                return (false, pairs, Some("retraction expands a distance".into()));
            }
        }
    }
    (true, pairs, None)
}

fn check_map_restriction(prev: &TowerLevel, level: &TowerLevel) -> (bool, Option<String>) {
    for (v, img) in prev.g.images() {
        match level.g.images().get(v) {
            Some(now) if now == img => {}
            _ => return (false, Some(format!("g no longer agrees with the previous level at {v}"))),
        }
    }
    for (v, img) in prev.gt.images() {
        match level.gt.images().get(v) {
            Some(now) if now == img => {}
            _ => {
                return (
                    false,
                    Some(format!("g̃ no longer agrees with the previous level at {v}")),
                )
            }
        }
    }
    (true, None)
}

fn check_triangles(level: &TowerLevel) -> (bool, Option<String>) {
    let want_count = 4usize.pow(level.n - 1);
    if level.triangles.len() != want_count {
        return (
            false,
            Some(format!("{} triangles, want {}", level.triangles.len(), want_count)),
        );
    }
    let want_leg_sq = Dyadic::pow2(-2 * (level.n as i64 - 1));
    for (i, t) in level.triangles.iter().enumerate() {
        let ok = Point2::dot_at(t.b(), t.a(), t.c()).is_zero()
            && Point2::squared_distance(t.a(), t.b()) == Point2::squared_distance(t.c(), t.b())
            && t.leg_sq() == want_leg_sq;
        if !ok {
            return (false, Some(format!("triangle {} fails shape or size", i + 1)));
        }
    }
    (true, None)
}

fn check_parameterizations(level: &TowerLevel) -> (bool, Option<String>) {
    for i in 1..=level.interval_count() {
        let check = check_parameterization(level, i);
        if !check.pass() {
            return (false, check.witness);
        }
    }
    (true, None)
}

fn check_embedding(
    prev: &MetricTree,
    now: &MetricTree,
    cfg: &SuiteConfig,
) -> (bool, u64, u64, bool) {
    let ids: Vec<_> = prev.vertex_ids().collect();
    for &v in &ids {
        if !now.contains(v) || prev.depth(v).unwrap() != now.depth(v).unwrap() {
            return (false, 0, 0, true);
        }
    }
    let exhaustive = ids.len() <= cfg.embed_exhaustive_below;
    let mut pairs = 0u64;
    let mut mismatches = 0u64;
    if exhaustive {
        for (i, &u) in ids.iter().enumerate() {
            for &v in ids.iter().skip(i + 1) {
                pairs += 1;
                if prev.distance_vv(u, v).unwrap() != now.distance_vv(u, v).unwrap() {
                    mismatches += 1;
                }
            }
        }
    } else {
        let mut rng = 0xE713_0000_u64 + ids.len() as u64;
        for _ in 0..cfg.embed_samples {
            let u = ids[(splitmix64(&mut rng) % ids.len() as u64) as usize];
            let v = ids[(splitmix64(&mut rng) % ids.len() as u64) as usize];
            pairs += 1;
            if prev.distance_vv(u, v).unwrap() != now.distance_vv(u, v).unwrap() {
                mismatches += 1;
            }
        }
    }
    (mismatches == 0, pairs, mismatches, exhaustive)
}

/// Hypotheses (1)–(7) for one level: exact edge lengths, a valid retraction
/// pair with the right displacement, Lipschitz maps, map restriction to the
/// previous level, triangle count and shape, and the parameterization of
/// every interval. `prev` is `None` for level 1.
pub fn check_level_hypotheses(
    prev: Option<&TowerLevel>,
    level: &TowerLevel,
    cfg: &SuiteConfig,
) -> Result<HypothesesEntry, SuiteError> {
    let n = level.n;
    let (h1, w1) = check_edge_lengths(level);
    let (h3, _pairs, w3) = match prev {
        Some(p) => check_retraction(p, level, cfg),
        None => (true, 0, None),
    };
    let h4 = level.g.first_lipschitz_violation(&level.e)?.is_none()
        && level.gt.first_lipschitz_violation(&level.et)?.is_none();
    let (h5, w5) = match prev {
        Some(p) => check_map_restriction(p, level),
        None => (true, None),
    };
    let (h6, w6) = check_triangles(level);
    let (h7, w7) = check_parameterizations(level);
    let witness = [w1, w3, w5, w6, w7].into_iter().flatten().next();
    let pass = h1 && h3 && h4 && h5 && h6 && h7;
    Ok(HypothesesEntry {
        n,
        edge_lengths_ok: h1,
        retraction_ok: h3,
        maps_lipschitz_ok: h4,
        map_restriction_ok: h5,
        triangles_ok: h6,
        parameterization_ok: h7,
        witness,
        pass,
    })
}

fn interval_index(t: &Dyadic, intervals: usize, n: u32) -> usize {
    if t.is_zero() {
        return 1;
    }
    let scaled = t.mul_pow2(2 * (n as i64 - 1));
    let floor = scaled.floor_mul_pow2(0);
    let idx = i64::try_from(&floor).expect("interval index fits in i64");
    // A breakpoint exactly on a boundary belongs to the interval on its left.
    let exact = Dyadic::from_parts(floor, 0) == scaled;
    (if exact { idx } else { idx + 1 }).clamp(1, intervals as i64) as usize
}

/// Runs every section against the tower. Hard errors (malformed data that a
/// check cannot even evaluate) surface as `Err`; findings are `pass` flags.
pub fn run_suite(tower: &[TowerLevel], cfg: &SuiteConfig) -> Result<SuiteReport, SuiteError> {
    assert!(!tower.is_empty());
    let top = tower.len() as u32;

    let mut hypotheses = Vec::new();
    let mut curve_gap = Vec::new();
    let mut retraction_displacement = Vec::new();
    let mut edge_isometry = Vec::new();
    let mut counts_lengths = Vec::new();
    let mut density = Vec::new();
    let mut subtree_embedding = Vec::new();
    let mut containment = Vec::new();

    let mut e_edges_expected = 2usize;
    let mut et_edges_expected = 1usize;

    let curves: Vec<(PlanePath, PlanePath)> = tower
        .iter()
        .map(|l| Ok((l.curve()?, l.curve_t()?)))
        .collect::<Result<_, PathError>>()?;

    for (k, level) in tower.iter().enumerate() {
        let n = level.n;
        let prev = if k > 0 { Some(&tower[k - 1]) } else { None };

        // Hypotheses (1)–(7).
        hypotheses.push(check_level_hypotheses(prev, level, cfg)?);

        // Curve gap: squared sup distance ≤ 2/4^{n-1}.
        let (curve, curve_t) = &curves[k];
        let gap = sup_distance(curve, curve_t, &unit_et(n))?;
        let squared_bound = Dyadic::pow2(-(2 * (n as i64 - 1) - 1));
        curve_gap.push(GapEntry {
            n,
            squared_sup: gap.squared_sup.clone(),
            squared_bound: squared_bound.clone(),
            witness_param: gap.witness_param.clone(),
            pass: gap.within_bound && gap.squared_sup <= squared_bound,
        });

        // Retraction displacement (n ≥ 2), with the 1-Lipschitz spot check.
        if let Some(p) = prev {
            let (_, lip_pairs, _) = check_retraction(p, level, cfg);
            let pair = p.retraction_from_next.as_ref();
            let (e_disp, et_disp) = match pair {
                Some(pair) => (pair.e.sup_displacement(), pair.et.sup_displacement()),
                None => (Quad::zero(), Quad::zero()),
            };
            let pass = e_disp == unit_e(n) && et_disp == unit_et(n);
            retraction_displacement.push(RetractionEntry {
                n,
                e_displacement: e_disp,
                et_displacement: et_disp,
                lipschitz_pairs_checked: lip_pairs,
                pass,
            });
        }

        // Edge isometry, the stronger form of hypothesis (4).
        let e_ok = level.g.first_isometry_violation(&level.e)?.is_none();
        let et_ok = level.gt.first_isometry_violation(&level.et)?.is_none();
        edge_isometry.push(IsometryEntry { n, e_ok, et_ok, pass: e_ok && et_ok });

        // Counts and lengths against the closed forms.
        if k > 0 {
            let four_prev = 4usize.pow(n - 2);
            e_edges_expected = 2 * e_edges_expected + 2 * four_prev;
            et_edges_expected = 2 * et_edges_expected + four_prev;
        }
        let pi_expected = 2 * 4usize.pow(n - 1) + 1;
        let pit_expected = 4usize.pow(n - 1) + 1;
        let len = path_length(curve)?;
        let len_t = path_length(curve_t)?;
        let len_expected = Quad::from_dyadic(Dyadic::pow2(n as i64));
        let len_t_expected = Quad::sqrt2_times(Dyadic::pow2(n as i64 - 1));
        let pass = level.e.edge_count() == e_edges_expected
            && level.et.edge_count() == et_edges_expected
            && level.pi.breakpoints().len() == pi_expected
            && level.pit.breakpoints().len() == pit_expected
            && len == len_expected
            && len_t == len_t_expected;
        counts_lengths.push(CountsEntry {
            n,
            e_edges: level.e.edge_count(),
            e_edges_expected,
            et_edges: level.et.edge_count(),
            et_edges_expected,
            pi_breakpoints: level.pi.breakpoints().len(),
            pi_breakpoints_expected: pi_expected,
            pit_breakpoints: level.pit.breakpoints().len(),
            pit_breakpoints_expected: pit_expected,
            curve_length: len,
            curve_length_expected: len_expected,
            curve_t_length: len_t,
            curve_t_length_expected: len_t_expected,
            pass,
        });

        // Density of the curve's breakpoint images in the base triangle.
        if n >= 2 {
            let samples: Vec<Point2> =
                curve.breakpoints().iter().map(|(_, p)| p.clone()).collect();
            let radius = unit_et(n);
            let grid = n + 1;
            let gap_witness =
                first_uncovered_grid_point(&samples, &tower[0].triangles[0], &radius, grid)?;
            density.push(DensityEntry {
                n,
                radius,
                grid,
                pass: gap_witness.is_none(),
                gap_witness,
            });
        }

        // Metric containment of the previous level.
        if let Some(p) = prev {
            let (e_ok, pairs_e, miss_e, exhaustive_e) = check_embedding(&p.e, &level.e, cfg);
            let (et_ok, pairs_t, miss_t, exhaustive_t) = check_embedding(&p.et, &level.et, cfg);
            subtree_embedding.push(EmbedEntry {
                n,
                vertices_contained: e_ok && et_ok,
                pairs_checked: pairs_e + pairs_t,
                distance_mismatches: miss_e + miss_t,
                exhaustive: exhaustive_e && exhaustive_t,
                pass: e_ok && et_ok && miss_e + miss_t == 0,
            });
        }

        // Convex-hull containment of all finer curves in this level's tiles.
        for (m_idx, upper) in tower.iter().enumerate().skip(k + 1) {
            let mut outside = 0u64;
            let mut checked = 0u64;
            for (curve_m, _) in [(&curves[m_idx].0, 0), (&curves[m_idx].1, 1)] {
                for (t, pt) in curve_m.breakpoints() {
                    let i = interval_index(t, level.interval_count(), n);
                    checked += 1;
                    if !level.triangles[i - 1].contains(pt) {
                        outside += 1;
                    }
                }
            }
            containment.push(ContainmentEntry {
                base_level: n,
                upper_level: upper.n,
                points_checked: checked,
                outside,
                pass: outside == 0,
            });
        }
    }

    // Certificates and class consistency.
    let mut certificates = Vec::new();
    let mut class_consistency = Vec::new();
    let cert_top = top.min(cfg.cert_max_level);
    for level in tower.iter().take(cert_top as usize) {
        let n = level.n;
        let refine = cfg.refine_for(n);
        for side in [Side::Legs, Side::Hypotenuse] {
            let (plane_loop, h) = certificate_loop(&tower[0], level, side)?;
            let report = verify_height_function(&plane_loop, &h, refine)?;
            certificates.push(CertificateEntry {
                n,
                side: side.name(),
                refine,
                grid_points: report.grid_points,
                pairs_checked: report.pairs_checked,
                violation_count: report.violation_count,
                min_slack_squared: report.min_slack_squared.clone(),
                pass: report.pass(),
            });
            let class = class_consistency_check(&plane_loop, &h, refine)?;
            class_consistency.push(ClassEntry {
                n,
                side: side.name(),
                related_pairs: class.related_pairs,
                violation_count: class.violation_count,
                pass: class.pass(),
            });
        }
    }

    // Refutation of α∗β̄.
    let alpha = &curves[0].0;
    let beta = &curves[0].1;
    let ab = loop_concat_reverse_plane(alpha, beta)?;
    let decision = decide_polygonal_loop(&ab)?;
    let spec_point = Point2::new(Dyadic::new(1, 2), Dyadic::new(5, 3));
    let winding = winding_number(&ab, &spec_point)?;
    let (verdict_name, reason) = match &decision.verdict {
        Verdict::NotTreeLike { reason, .. } => ("NotTreeLike", Some(reason.clone())),
        Verdict::TreeLike { .. } => ("TreeLike", None),
        Verdict::Inconclusive { reason } => ("Inconclusive", Some(reason.clone())),
    };
    let refutation_pass = matches!(&decision.verdict, Verdict::NotTreeLike { reason, .. } if reason == "simple closed curve")
        && winding == -1;
    let refutation = RefutationEntry {
        verdict: verdict_name.to_string(),
        reason,
        winding_point: spec_point,
        winding_value: winding,
        pass: refutation_pass,
    };

    let cert_ok = |side: &str| {
        certificates
            .iter()
            .filter(|c| c.side == side)
            .all(|c| c.pass)
            && !certificates.is_empty()
    };
    let verdicts = VerdictSummary {
        certificate_level: cert_top,
        alpha_vs_gamma: if cert_ok("legs") { "TreeLike" } else { "Unproven" }.to_string(),
        beta_vs_gamma: if cert_ok("hypotenuse") { "TreeLike" } else { "Unproven" }.to_string(),
        alpha_vs_beta: if refutation.pass { "NotTreeLike" } else { "Unproven" }.to_string(),
    };

    let all_pass = hypotheses.iter().all(|e| e.pass)
        && curve_gap.iter().all(|e| e.pass)
        && retraction_displacement.iter().all(|e| e.pass)
        && edge_isometry.iter().all(|e| e.pass)
        && counts_lengths.iter().all(|e| e.pass)
        && density.iter().all(|e| e.pass)
        && subtree_embedding.iter().all(|e| e.pass)
        && containment.iter().all(|e| e.pass)
        && certificates.iter().all(|e| e.pass)
        && class_consistency.iter().all(|e| e.pass)
        && refutation.pass;

    Ok(SuiteReport {
        format_version: crate::state::FORMAT_VERSION,
        levels: top,
        config: cfg.clone(),
        all_pass,
        hypotheses,
        curve_gap,
        retraction_displacement,
        edge_isometry,
        counts_lengths,
        density,
        subtree_embedding,
        containment,
        certificates,
        class_consistency,
        refutation,
        verdicts,
    })
}

/// Quick sanity check used by `density_check` callers in tests.
pub fn base_triangle(tower: &[TowerLevel]) -> &crate::construct::OrderedTriangle {
    &tower[0].triangles[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::build_tower;

    #[test]
    fn small_tower_passes_everything() {
        let tower = build_tower(3).unwrap();
        let cfg = SuiteConfig::default();
        let report = run_suite(&tower, &cfg).unwrap();
        assert!(report.all_pass, "{}", serde_json::to_string_pretty(&report).unwrap());
        assert_eq!(report.hypotheses.len(), 3);
        assert_eq!(report.retraction_displacement.len(), 2);
        assert_eq!(report.certificates.len(), 6);
        assert_eq!(report.curve_gap[0].squared_sup, Dyadic::new(1, 1));
        assert_eq!(report.curve_gap[1].squared_sup, Dyadic::new(1, 3));
        assert_eq!(report.refutation.winding_value, -1);
        assert_eq!(report.verdicts.alpha_vs_gamma, "TreeLike");
        assert_eq!(report.verdicts.beta_vs_gamma, "TreeLike");
        assert_eq!(report.verdicts.alpha_vs_beta, "NotTreeLike");
    }

    #[test]
    fn perturbed_edge_length_is_caught() {
        use crate::state::{parse_state, serialize_tower};
        let tower = build_tower(2).unwrap();
        let json = serialize_tower(&tower);
        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["levels"][1]["e"]["vertices"][1]["parent"][1]["rat"]["num"] = "3".into();
        let tampered = serde_json::to_string(&v).unwrap();
        let loaded = parse_state(&tampered).unwrap();
        let report = run_suite(&loaded.tower, &SuiteConfig::default()).unwrap();
        assert!(!report.all_pass);
        assert!(report.hypotheses.iter().any(|h| !h.edge_lengths_ok));
    }

    #[test]
    fn density_gap_is_reported_with_a_witness() {
        use crate::plcurve::density_check;
        let tower = build_tower(2).unwrap();
        let tri = base_triangle(&tower);
        let corners = vec![
            tri.a().clone(),
            tri.b().clone(),
            tri.c().clone(),
        ];
        assert!(!density_check(&corners, tri, &Quad::from_dyadic(Dyadic::new(1, 2)), 4).unwrap());
    }
}
