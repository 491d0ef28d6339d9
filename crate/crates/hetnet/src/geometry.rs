//! Network geometry: equilibria plus polyline approximations of the
//! one-dimensional connecting orbits, with distance queries.
//!
//! Distance queries come in two flavours. [`distance_to_network`] is the
//! exact public query. [`DistanceTracker`] serves classification loops:
//! it exploits that consecutive query points move continuously, walking a
//! local window of the previously nearest edge and falling back to a full
//! scan whenever the local estimate exceeds its trust threshold. Values
//! above [`DISTANCE_CAP`] are reported as the cap; every classification
//! predicate only compares distances well below it.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::integrator::connection_polyline;
use crate::models::{Equilibrium, EquilibriumId, NetworkModel};

/// Default seed offset for connection polylines.
pub const DEFAULT_SEED_OFFSET: f64 = 1e-6;
/// Hot-path queries clamp distances here; exact values are only needed
/// near the proximity radius (0.05) and the convergence floor.
pub const DISTANCE_CAP: f64 = 0.15;
/// Polyline chord error stays below ~2e-7 at the stored resolution, so
/// measured distances of a converged trajectory bottom out around it.
/// `converged` tests treat anything below this floor as on the network.
pub const GEOMETRY_DISTANCE_FLOOR: f64 = 5e-7;

const COARSE_STRIDE: usize = 10;
/// Arc-length half-window around the previous hit.
const LOCAL_ARC_WINDOW: f64 = 0.2;
/// Arc-length window probed from each end of an edge whose equilibrium
/// is nearby; must exceed 3x the trust radius so corner handoffs between
/// adjacent edges stay exact.
const CORNER_ARC_WINDOW: f64 = 0.25;

/// One element of a heteroclinic network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ElementId {
    Equilibrium(EquilibriumId),
    Edge {
        from: EquilibriumId,
        to: EquilibriumId,
    },
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementId::Equilibrium(e) => write!(f, "{e}"),
            ElementId::Edge { from, to } => write!(f, "{from}->{to}"),
        }
    }
}

/// The elements making up a cycle through the given axes (0-based), i.e.
/// the equilibria plus the consecutive connecting edges, wrapping around.
pub fn cycle_target(axes: &[usize]) -> BTreeSet<ElementId> {
    let mut set = BTreeSet::new();
    for (i, &a) in axes.iter().enumerate() {
        let from = EquilibriumId::positive(a);
        let to = EquilibriumId::positive(axes[(i + 1) % axes.len()]);
        set.insert(ElementId::Equilibrium(from));
        set.insert(ElementId::Edge { from, to });
    }
    set
}

#[derive(Debug, Clone)]
pub struct EdgeGeometry {
    pub from: EquilibriumId,
    pub to: EquilibriumId,
    /// Fine polyline, flat with stride n, consecutive points <= 5e-4 apart.
    points: Vec<f64>,
    /// Cumulative arc length per fine point.
    pub(crate) cum: Vec<f64>,
}

impl EdgeGeometry {
    pub fn id(&self) -> ElementId {
        ElementId::Edge {
            from: self.from,
            to: self.to,
        }
    }

    pub fn len(&self) -> usize {
        self.cum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cum.is_empty()
    }

    pub fn point(&self, i: usize, n: usize) -> &[f64] {
        &self.points[i * n..(i + 1) * n]
    }

    pub fn arc_length(&self) -> f64 {
        *self.cum.last().unwrap_or(&0.0)
    }
}

/// Bitmask of allowed elements (up to 64 equilibria and 64 edges).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElementMask {
    pub equilibria: u64,
    pub edges: u64,
}

impl ElementMask {
    pub fn all(g: &NetworkGeometry) -> Self {
        ElementMask {
            equilibria: mask_bits(g.equilibria.len()),
            edges: mask_bits(g.edges.len()),
        }
    }

    pub fn has_eq(&self, slot: usize) -> bool {
        self.equilibria & (1 << slot) != 0
    }

    pub fn has_edge(&self, slot: usize) -> bool {
        self.edges & (1 << slot) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.equilibria == 0 && self.edges == 0
    }
}

fn mask_bits(count: usize) -> u64 {
    if count >= 64 {
        u64::MAX
    } else {
        (1u64 << count) - 1
    }
}

/// Equilibria plus connection polylines, with index structures for
/// nearest-element queries.
#[derive(Debug, Clone)]
pub struct NetworkGeometry {
    n: usize,
    pub equilibria: Vec<Equilibrium>,
    pub edges: Vec<EdgeGeometry>,
    /// Edge slots touching each equilibrium slot.
    adjacency: Vec<Vec<usize>>,
    pub seed_offset: f64,
}

/// Compute the geometry for the requested edges: equilibria are the
/// endpoints that occur, polylines are integrated connecting orbits.
/// Fails with `NoConnection`, naming the edge, if one is missing.
pub fn build_network_geometry(
    m: &NetworkModel,
    edges: &[(EquilibriumId, EquilibriumId)],
    seed_offset: f64,
) -> Result<NetworkGeometry> {
    let n = m.dimension();
    let mut equilibria: Vec<Equilibrium> = Vec::new();
    let slot_of = |id: EquilibriumId, equilibria: &mut Vec<Equilibrium>| -> usize {
        if let Some(i) = equilibria.iter().position(|e| e.id == id) {
            i
        } else {
            equilibria.push(Equilibrium {
                id,
                coordinates: id.coordinates(n),
            });
            equilibria.len() - 1
        }
    };
    let mut edge_geoms = Vec::with_capacity(edges.len());
    let mut adjacency: Vec<Vec<usize>> = Vec::new();
    for &(from, to) in edges {
        let polyline = connection_polyline(m, from, to, seed_offset)?;
        let mut points = Vec::with_capacity(polyline.len() * n);
        let mut cum = Vec::with_capacity(polyline.len());
        let mut acc = 0.0;
        for (i, p) in polyline.iter().enumerate() {
            if i > 0 {
                acc += dist(p, &polyline[i - 1]);
            }
            cum.push(acc);
            points.extend_from_slice(p);
        }
        let fs = slot_of(from, &mut equilibria);
        let ts = slot_of(to, &mut equilibria);
        adjacency.resize(equilibria.len().max(adjacency.len()), Vec::new());
        let slot = edge_geoms.len();
        adjacency[fs].push(slot);
        adjacency[ts].push(slot);
        edge_geoms.push(EdgeGeometry {
            from,
            to,
            points,
            cum,
        });
    }
    adjacency.resize(equilibria.len(), Vec::new());
    if equilibria.len() > 64 || edge_geoms.len() > 64 {
        return Err(Error::InvalidConfig(
            "geometries with more than 64 elements are not supported".into(),
        ));
    }
    Ok(NetworkGeometry {
        n,
        equilibria,
        edges: edge_geoms,
        adjacency,
        seed_offset,
    })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

pub(crate) fn euclidean_dist(a: &[f64], b: &[f64]) -> f64 {
    dist(a, b)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn point_segment_dist2(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut ab2 = 0.0;
    let mut ax_ab = 0.0;
    for i in 0..x.len() {
        let d = b[i] - a[i];
        ab2 += d * d;
        ax_ab += (x[i] - a[i]) * d;
    }
    let t = if ab2 > 0.0 {
        (ax_ab / ab2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut d2 = 0.0;
    for i in 0..x.len() {
        let p = a[i] + t * (b[i] - a[i]);
        let d = x[i] - p;
        d2 += d * d;
    }
    d2
}

/// Where the nearest element was found.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Nearest {
    Equilibrium { slot: usize },
    Edge { slot: usize, arc: f64 },
    /// Distance exceeded the cap; no nearest element identified.
    Far,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceQuery {
    pub distance: f64,
    pub nearest: Nearest,
    /// Allowed equilibria within three trust radii (for corner handoff
    /// and checkpoint marking).
    pub near_equilibria: Vec<(usize, f64)>,
}

impl NetworkGeometry {
    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn element_ids(&self) -> BTreeSet<ElementId> {
        let mut set = BTreeSet::new();
        for e in &self.equilibria {
            set.insert(ElementId::Equilibrium(e.id));
        }
        for e in &self.edges {
            set.insert(e.id());
        }
        set
    }

    /// Bitmask for a target element set; errors on ids the geometry does
    /// not contain.
    pub fn mask_for(&self, target: &BTreeSet<ElementId>) -> Result<ElementMask> {
        let mut mask = ElementMask {
            equilibria: 0,
            edges: 0,
        };
        for id in target {
            match id {
                ElementId::Equilibrium(eid) => {
                    let slot = self
                        .equilibria
                        .iter()
                        .position(|e| e.id == *eid)
                        .ok_or_else(|| {
                            Error::InvalidConfig(format!("target element {id} not in geometry"))
                        })?;
                    mask.equilibria |= 1 << slot;
                }
                ElementId::Edge { from, to } => {
                    let slot = self
                        .edges
                        .iter()
                        .position(|e| e.from == *from && e.to == *to)
                        .ok_or_else(|| {
                            Error::InvalidConfig(format!("target element {id} not in geometry"))
                        })?;
                    mask.edges |= 1 << slot;
                }
            }
        }
        Ok(mask)
    }

    pub fn adjacent_edges(&self, eq_slot: usize) -> &[usize] {
        &self.adjacency[eq_slot]
    }

    /// Exact distance from `x` to the union of the allowed elements.
    pub fn distance_masked(&self, x: &[f64], mask: &ElementMask) -> f64 {
        let mut best = f64::INFINITY;
        for (slot, eq) in self.equilibria.iter().enumerate() {
            if mask.has_eq(slot) {
                best = best.min(dist(x, &eq.coordinates));
            }
        }
        for (slot, edge) in self.edges.iter().enumerate() {
            if !mask.has_edge(slot) {
                continue;
            }
            // Coarse pass, then exact refinement around every coarse point
            // that could still beat the current best.
            let m = edge.len();
            let mut coarse: Vec<(f64, usize)> = Vec::with_capacity(m / COARSE_STRIDE + 2);
            let mut i = 0;
            while i < m {
                coarse.push((dist2(x, edge.point(i, self.n)), i));
                i += COARSE_STRIDE;
            }
            if (m - 1) % COARSE_STRIDE != 0 {
                coarse.push((dist2(x, edge.point(m - 1, self.n)), m - 1));
            }
            let gap = 2.0 * COARSE_STRIDE as f64 * 6e-4;
            let coarse_best = coarse
                .iter()
                .map(|c| c.0.sqrt())
                .fold(f64::INFINITY, f64::min);
            let cutoff = (coarse_best + gap).min(best + gap);
            for (d2, idx) in coarse {
                if d2.sqrt() <= cutoff {
                    best = best.min(self.refine(x, edge, idx).0.sqrt());
                }
            }
        }
        best
    }

    /// Exact point-to-segment refinement in a fine window around `idx`.
    /// Returns the squared distance and the arc position of the nearest
    /// projection.
    fn refine(&self, x: &[f64], edge: &EdgeGeometry, idx: usize) -> (f64, f64) {
        let m = edge.len();
        let lo = idx.saturating_sub(COARSE_STRIDE);
        let hi = (idx + COARSE_STRIDE).min(m - 1);
        let mut best = dist2(x, edge.point(lo, self.n));
        let mut best_arc = edge.cum[lo];
        for i in lo..hi {
            let a = edge.point(i, self.n);
            let b = edge.point(i + 1, self.n);
            let d2 = point_segment_dist2(x, a, b);
            if d2 < best {
                best = d2;
                // Arc position from the projection parameter.
                let seg = dist(a, b);
                let da = dist2(x, a).sqrt();
                let t = if seg > 0.0 {
                    ((da * da - d2).max(0.0)).sqrt().min(seg) / seg
                } else {
                    0.0
                };
                best_arc = edge.cum[i] + t * (edge.cum[i + 1] - edge.cum[i]);
            }
        }
        (best, best_arc)
    }

    /// Basic structural checks; used by tests.
    pub fn validate(&self) -> Result<()> {
        for edge in &self.edges {
            let first = edge.point(0, self.n);
            let last = edge.point(edge.len() - 1, self.n);
            let from = edge.from.coordinates(self.n);
            let to = edge.to.coordinates(self.n);
            if dist(first, &from) > 1e-5 || dist(last, &to) > 1.0000001e-5 {
                return Err(Error::InvalidConfig(format!(
                    "polyline {} endpoints stray from declared equilibria",
                    edge.id()
                )));
            }
            for w in 0..edge.len() - 1 {
                if dist(edge.point(w, self.n), edge.point(w + 1, self.n)) > 1e-2 {
                    return Err(Error::InvalidConfig(format!(
                        "polyline {} has a gap wider than 0.01",
                        edge.id()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Minimum euclidean distance from `x` to the stored network.
pub fn distance_to_network(x: &[f64], g: &NetworkGeometry) -> f64 {
    g.distance_masked(x, &ElementMask::all(g))
}

/// Sequential nearest-element queries with locality reuse.
///
/// Soundness: any local estimate above `trust_radius` triggers an exact
/// full scan, so every reported value below `trust_radius` is exact (up
/// to the polyline discretization) and larger values are either exact or
/// the cap.
pub struct DistanceTracker<'g> {
    g: &'g NetworkGeometry,
    mask: ElementMask,
    trust_radius: f64,
    last_edge: Option<(usize, usize)>,
    /// Reference point and its exact distance, for the moving lower bound.
    ref_x: Vec<f64>,
    ref_d: f64,
    has_ref: bool,
}

impl<'g> DistanceTracker<'g> {
    pub fn new(g: &'g NetworkGeometry, mask: ElementMask, trust_radius: f64) -> Self {
        DistanceTracker {
            g,
            mask,
            trust_radius,
            last_edge: None,
            ref_x: vec![0.0; g.dimension()],
            ref_d: 0.0,
            has_ref: false,
        }
    }

    pub fn query(&mut self, x: &[f64]) -> DistanceQuery {
        let g = self.g;
        let n = g.dimension();
        // Equilibria are always cheap and exact. The probe radius is
        // wider than the trust radius so corner handoffs between edges
        // sharing an equilibrium stay exact.
        let mut near_equilibria = Vec::new();
        let mut best = f64::INFINITY;
        let mut nearest = Nearest::Far;
        for (slot, eq) in g.equilibria.iter().enumerate() {
            if !self.mask.has_eq(slot) {
                continue;
            }
            let d = dist(x, &eq.coordinates);
            if d < 3.0 * self.trust_radius {
                near_equilibria.push((slot, d));
            }
            if d < best {
                best = d;
                nearest = Nearest::Equilibrium { slot };
            }
        }

        // Moving lower bound from the last exact far value: if we are
        // provably beyond the cap, skip edge work entirely.
        if self.has_ref {
            let moved = dist(x, &self.ref_x);
            if self.ref_d - moved > DISTANCE_CAP && best > DISTANCE_CAP {
                return DistanceQuery {
                    distance: DISTANCE_CAP,
                    nearest: Nearest::Far,
                    near_equilibria,
                };
            }
        }

        // Local candidate windows: previous edge, plus edges adjacent to
        // every near equilibrium.
        let improved = |best: &mut f64, nearest: &mut Nearest, slot: usize, idx: usize| {
            let (d2, arc) = g.refine(x, &g.edges[slot], idx);
            let d = d2.sqrt();
            if d < *best {
                *best = d;
                *nearest = Nearest::Edge { slot, arc };
            }
        };
        // Windows are measured in arc length: point spacing varies along
        // the polylines (dense in the slow phases near equilibria).
        let scan_window = |edge: &EdgeGeometry, lo_arc: f64, hi_arc: f64| -> usize {
            let m = edge.len();
            let lo = edge.cum.partition_point(|c| *c < lo_arc);
            let hi = edge.cum.partition_point(|c| *c <= hi_arc).min(m) - 1;
            let mut i = lo;
            let mut best_local = f64::INFINITY;
            let mut best_idx = lo.min(m - 1);
            while i <= hi {
                let d2 = dist2(x, edge.point(i, n));
                if d2 < best_local {
                    best_local = d2;
                    best_idx = i;
                }
                i += COARSE_STRIDE;
            }
            best_idx
        };
        if let Some((slot, fine_idx)) = self.last_edge {
            if self.mask.has_edge(slot) {
                let edge = &g.edges[slot];
                let arc0 = edge.cum[fine_idx.min(edge.len() - 1)];
                let idx = scan_window(edge, arc0 - LOCAL_ARC_WINDOW, arc0 + LOCAL_ARC_WINDOW);
                improved(&mut best, &mut nearest, slot, idx);
            }
        }
        for &(eq_slot, _) in &near_equilibria {
            for &edge_slot in g.adjacent_edges(eq_slot) {
                if !self.mask.has_edge(edge_slot) {
                    continue;
                }
                let edge = &g.edges[edge_slot];
                let touches_start = edge.from == g.equilibria[eq_slot].id;
                let idx = if touches_start {
                    scan_window(edge, 0.0, CORNER_ARC_WINDOW)
                } else {
                    let len = edge.arc_length();
                    scan_window(edge, len - CORNER_ARC_WINDOW, len)
                };
                improved(&mut best, &mut nearest, edge_slot, idx);
            }
        }

        // Anything above the trust radius must be verified exactly.
        if best > self.trust_radius {
            best = g.distance_masked(x, &self.mask);
            if best <= self.trust_radius {
                // Re-acquire the nearest edge window for future locality.
                nearest = self.locate_exact(x, best);
            } else {
                self.ref_x.copy_from_slice(x);
                self.ref_d = best;
                self.has_ref = true;
                self.last_edge = None;
                return DistanceQuery {
                    distance: best.min(DISTANCE_CAP),
                    nearest: Nearest::Far,
                    near_equilibria,
                };
            }
        }
        if let Nearest::Edge { slot, arc } = nearest {
            let edge = &self.g.edges[slot];
            let idx = match edge
                .cum
                .binary_search_by(|c| c.partial_cmp(&arc).expect("arc lengths are finite"))
            {
                Ok(i) => i,
                Err(i) => i.min(edge.len() - 1),
            };
            self.last_edge = Some((slot, idx));
        }
        self.has_ref = false;
        DistanceQuery {
            distance: best,
            nearest,
            near_equilibria,
        }
    }

    /// After an exact scan found `best <= trust_radius`, identify which
    /// edge realizes it (brute force; called rarely).
    fn locate_exact(&mut self, x: &[f64], best: f64) -> Nearest {
        let g = self.g;
        let n = g.dimension();
        for (slot, eq) in g.equilibria.iter().enumerate() {
            if self.mask.has_eq(slot) && (dist(x, &eq.coordinates) - best).abs() < 1e-12 {
                return Nearest::Equilibrium { slot };
            }
        }
        let mut out = Nearest::Far;
        let mut found = f64::INFINITY;
        for (slot, edge) in g.edges.iter().enumerate() {
            if !self.mask.has_edge(slot) {
                continue;
            }
            let m = edge.len();
            let mut i = 0;
            let mut best_idx = 0;
            let mut best_local = f64::INFINITY;
            while i < m {
                let d2 = dist2(x, edge.point(i, n));
                if d2 < best_local {
                    best_local = d2;
                    best_idx = i;
                }
                i += COARSE_STRIDE;
            }
            let (d2, arc) = g.refine(x, edge, best_idx);
            if d2.sqrt() < found {
                found = d2.sqrt();
                out = Nearest::Edge { slot, arc };
            }
        }
        out
    }
}
