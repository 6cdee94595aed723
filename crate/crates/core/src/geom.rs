//! Geodesics, Gromov products and overlap diameters in the Cayley graph.
//!
//! For the free group the Cayley graph is a tree, so the overlap of a
//! fattened geodesic with another geodesic has a closed form through
//! projections. The vertex-by-vertex definition is kept as the general
//! path (used for `delta > 0`) and as a cross-check.

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{enumerate_ball, BackendSpec, CayleyGroup, GroupElement};
use crate::par::*;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypParams {
    /// Hyperbolicity constant; 0 for the tree.
    pub delta: f64,
    /// Additive constant of the concatenation inequality.
    pub c_delta: f64,
    /// Element budget for neighborhood searches when `delta > 0`.
    pub search_budget: u64,
}

impl HypParams {
    pub fn tree(c_delta: f64) -> Self {
        HypParams {
            delta: 0.0,
            c_delta,
            search_budget: crate::DEFAULT_BUDGET,
        }
    }

    fn fattening_radius(&self) -> usize {
        (3.0 * self.delta).floor() as usize
    }
}

impl Default for HypParams {
    fn default() -> Self {
        HypParams::tree(1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Geodesic {
    pub start: GroupElement,
    pub end: GroupElement,
    pub vertices: Vec<GroupElement>,
}

impl Geodesic {
    pub fn len(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() == 1
    }
}

pub fn geodesic(a: &GroupElement, b: &GroupElement) -> Result<Geodesic> {
    let vertices = a.backend().geodesic_vertices(a, b)?;
    Ok(Geodesic {
        start: a.clone(),
        end: b.clone(),
        vertices,
    })
}

/// `(|g| + |h| - |g^-1 h|) / 2`, based at the identity.
pub fn gromov_product(g: &GroupElement, h: &GroupElement) -> f64 {
    let d = g.inverse().mul(h).len();
    (g.len() + h.len()) as f64 / 2.0 - d as f64 / 2.0
}

/// Overlap of `u [e, a]` with `[e, base]` in the tree.
///
/// The intersection of two geodesics in a tree is the segment between the
/// projections of the endpoints of one onto the other; when the projections
/// coincide it is at most a point.
#[inline]
fn tree_overlap(base: &GroupElement, u: &GroupElement, a: &GroupElement) -> usize {
    let end = u.mul(a);
    u.common_prefix_len(base).abs_diff(end.common_prefix_len(base))
}

/// diam(N_{3 delta}([e, g]) ∩ [e, h]).
pub fn overlap_diameter(g: &GroupElement, h: &GroupElement, params: &HypParams) -> Result<usize> {
    g.check_same(h)?;
    if params.delta == 0.0 {
        Ok(g.common_prefix_len(h))
    } else {
        let e = GroupElement::identity(g.backend());
        overlap_by_vertices(g, &e, h, params)
    }
}

/// diam(N_{3 delta}(g1 [e, a1]) ∩ g2 [e, a2]), computed after translating by g1^-1.
pub fn translated_overlap(
    g1: &GroupElement,
    a1: &GroupElement,
    g2: &GroupElement,
    a2: &GroupElement,
    params: &HypParams,
) -> Result<usize> {
    g1.check_same(a1)?;
    g1.check_same(g2)?;
    g1.check_same(a2)?;
    let u = g1.inverse().mul(g2);
    if params.delta == 0.0 {
        Ok(tree_overlap(a1, &u, a2))
    } else {
        overlap_by_vertices(a1, &u, a2, params)
    }
}

/// Walks the vertices of `u [e, a]` and keeps those within `3 delta` of
/// `[e, base]`, searching balls around each vertex.
pub fn overlap_by_vertices(
    base: &GroupElement,
    u: &GroupElement,
    a: &GroupElement,
    params: &HypParams,
) -> Result<usize> {
    let backend = base.backend();
    let radius = params.fattening_radius();
    let ball_size = backend.ball_size(radius);
    let required = ball_size.saturating_mul(a.len() as u128 + 1);
    if required > u128::from(params.search_budget) {
        return Err(Error::BudgetExceeded {
            what: "neighborhood search",
            required,
            limit: params.search_budget,
        });
    }
    let e = GroupElement::identity(backend);
    let fat: HashSet<GroupElement> = backend.geodesic_vertices(&e, base)?.into_iter().collect();
    let ball = enumerate_ball(radius, backend, params.search_budget)?;
    let end = u.mul(a);
    let path = backend.geodesic_vertices(u, &end)?;
    let mut first = None;
    let mut last = None;
    for (i, v) in path.iter().enumerate() {
        let near = ball.iter().any(|h| fat.contains(&v.mul(h)));
        if near {
            first.get_or_insert(i);
            last = Some(i);
        }
    }
    // vertices of one geodesic: the diameter is the index spread
    Ok(match (first, last) {
        (Some(f), Some(l)) => l - f,
        _ => 0,
    })
}

/// A translate `translate * [e, shape]` of a geodesic from the identity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Segment {
    pub translate: GroupElement,
    pub shape: GroupElement,
}

impl Segment {
    pub fn new(translate: GroupElement, shape: GroupElement) -> Self {
        Segment { translate, shape }
    }

    pub fn end(&self) -> GroupElement {
        self.translate.mul(&self.shape)
    }

    pub fn len(&self) -> usize {
        self.shape.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shape.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OverlapEntry {
    pub i: i64,
    pub j: i64,
    pub value: usize,
}

/// All computed `d_{i,j}` together with the segment lengths.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct OverlapProfile {
    pub entries: Vec<OverlapEntry>,
    pub segment_lengths: Vec<usize>,
}

impl OverlapProfile {
    pub fn get(&self, i: i64, j: i64) -> Option<usize> {
        self.entries.iter().find(|e| e.i == i && e.j == j).map(|e| e.value)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConcatReport {
    pub verdict: Verdict,
    pub profile: OverlapProfile,
    /// Minimum over even `i` of `len(a_i) - sum_j d_{i,j} - C_delta`.
    pub worst_margin: f64,
    pub periodic: bool,
    pub window: usize,
}

/// How the segment list extends beyond its ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extension {
    /// Nothing before the first or after the last segment.
    Finite,
    /// The list is one period of a bi-infinite pattern.
    Periodic,
}

/// Checks `len(a_i) >= sum_{0 < |j - i| <= window} d_{i,j} + C_delta` for even `i`.
///
/// Passing certifies that the concatenation is a quasi-geodesic; for a
/// periodic pattern that forces the period element to have infinite order.
pub fn concat_check(
    segments: &[Segment],
    extension: Extension,
    params: &HypParams,
    window: usize,
) -> Result<ConcatReport> {
    let n = segments.len();
    if n == 0 {
        return Err(Error::EndpointMismatch { index: 0 });
    }
    for i in 1..n {
        if segments[i - 1].end() != segments[i].translate {
            return Err(Error::EndpointMismatch { index: i });
        }
    }
    let periodic = extension == Extension::Periodic;
    if periodic && n % 2 == 1 {
        return Err(Error::OddPeriod(n));
    }
    // a_{i+n} = P a_i with P carrying the start of a_0 to the end of a_{n-1}
    let period = if periodic {
        Some(segments[n - 1].end().mul(&segments[0].translate.inverse()))
    } else {
        None
    };
    let locate = |j: i64| -> Option<Segment> {
        let r = j.rem_euclid(n as i64) as usize;
        let q = j.div_euclid(n as i64);
        match &period {
            _ if q == 0 => Some(segments[r].clone()),
            Some(p) => Some(Segment {
                translate: p.pow(q).mul(&segments[r].translate),
                shape: segments[r].shape.clone(),
            }),
            None => None,
        }
    };

    let evens: Vec<usize> = (0..n).step_by(2).collect();
    let rows: Vec<Result<(Vec<OverlapEntry>, f64)>> = evens
        .par_iter()
        .map(|&i| {
            let seg = &segments[i];
            let mut entries = Vec::with_capacity(2 * window);
            let mut total = 0usize;
            for offset in (-(window as i64)..=window as i64).filter(|&o| o != 0) {
                let j = i as i64 + offset;
                let Some(other) = locate(j) else { continue };
                let d = translated_overlap(&seg.translate, &seg.shape, &other.translate, &other.shape, params)?;
                total += d;
                entries.push(OverlapEntry {
                    i: i as i64,
                    j,
                    value: d,
                });
            }
            let margin = seg.len() as f64 - total as f64 - params.c_delta;
            Ok((entries, margin))
        })
        .collect();

    let mut profile = OverlapProfile {
        entries: Vec::new(),
        segment_lengths: segments.iter().map(Segment::len).collect(),
    };
    let mut worst = f64::INFINITY;
    for row in rows {
        let (entries, margin) = row?;
        profile.entries.extend(entries);
        worst = worst.min(margin);
    }
    Ok(ConcatReport {
        verdict: Verdict::from_bool(worst >= 0.0),
        profile,
        worst_margin: worst,
        periodic,
        window,
    })
}

/// One period of the segment pattern of a cyclically reduced word under `x -> g`.
///
/// Each `x^{+-1}` contributes an even segment; between consecutive
/// x-segments sits either the constant of the word or an inserted trivial
/// segment, so the constants land on odd indices. Returns `None` for
/// constant words.
pub fn periodic_pattern(core: &crate::MixedWord, g: &GroupElement) -> Result<Option<Vec<Segment>>> {
    if core.is_constant() {
        return Ok(None);
    }
    let backend: &Arc<BackendSpec> = core.backend();
    g.check_same(&GroupElement::identity(backend))?;
    let g_inv = g.inverse();
    let m = core.exponents().len();
    let constants = core.constants();
    // rotate so the period starts with an x-syllable: the end constants join
    let mut joined = constants[m].clone();
    joined.append(constants[0].letters());

    let mut segments = Vec::new();
    let mut at = GroupElement::identity(backend);
    for (k, &e) in core.exponents().iter().enumerate() {
        let shape = if e > 0 { g } else { &g_inv };
        let after = if k + 1 < m { &constants[k + 1] } else { &joined };
        let reps = e.unsigned_abs();
        for r in 0..reps {
            segments.push(Segment::new(at.clone(), shape.clone()));
            at.append(shape.letters());
            let odd = if r + 1 < reps {
                GroupElement::identity(backend)
            } else {
                after.clone()
            };
            segments.push(Segment::new(at.clone(), odd.clone()));
            at.append(odd.letters());
        }
    }
    Ok(Some(segments))
}
