//! Empirical classification of invariant sets: stability and visibility.
//!
//! For each delta of a decreasing ladder, K initial conditions are drawn
//! from the delta-neighbourhood of the target set (excluding the set
//! itself), integrated to the horizon, and classified by proximity,
//! coverage and convergence. Per-trajectory flags aggregate into one of
//! the visibility modes with a prefix describing from how much of the
//! neighbourhood the behaviour is seen. All verdicts are finite-horizon
//! Monte Carlo evidence, not proofs, and say so in their reports.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::geometry::{
    DistanceTracker, ElementId, ElementMask, Nearest, NetworkGeometry, GEOMETRY_DISTANCE_FLOOR,
};
use crate::integrator::{integrate, IntegratorOptions, Termination, Trajectory};
use crate::models::NetworkModel;

/// Which measure-zero sets are removed from the sampled neighbourhood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exclusions {
    None,
    /// Require strictly positive coordinates, removing the invariant
    /// coordinate hyperplanes (a measure-zero set).
    InvariantSubspaces,
}

/// Monte Carlo configuration for visibility and stability estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityConfig {
    /// Strictly decreasing neighbourhood radii; every entry <= epsilon.
    pub delta_ladder: Vec<f64>,
    /// Proximity radius for "close to the set".
    pub epsilon: f64,
    pub samples_per_delta: usize,
    pub t_max: f64,
    /// Discarded before coverage/return tests.
    pub transient: f64,
    /// How often every element must be revisited to count as covered.
    pub recurrence_count: u32,
    pub exclusions: Exclusions,
    pub rng_seed: u64,
    /// Integrator tolerances for the sampled runs.
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for VisibilityConfig {
    fn default() -> Self {
        VisibilityConfig {
            delta_ladder: vec![1e-2, 1e-3, 1e-4],
            epsilon: 0.05,
            samples_per_delta: 200,
            t_max: 5000.0,
            transient: 500.0,
            recurrence_count: 2,
            exclusions: Exclusions::InvariantSubspaces,
            rng_seed: 0,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
        }
    }
}

impl VisibilityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.delta_ladder.len() < 2 {
            return Err(Error::InvalidConfig(
                "delta ladder needs at least two rungs".into(),
            ));
        }
        for w in self.delta_ladder.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::InvalidConfig(
                    "delta ladder must be strictly decreasing".into(),
                ));
            }
        }
        let max_delta = self.delta_ladder[0];
        if !(max_delta > 0.0) || self.delta_ladder.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::InvalidConfig("deltas must be positive".into()));
        }
        if !(self.epsilon > 0.0) || max_delta > self.epsilon {
            return Err(Error::InvalidConfig(format!(
                "epsilon = {} must be positive and at least the widest delta {}",
                self.epsilon, max_delta
            )));
        }
        if self.samples_per_delta == 0 {
            return Err(Error::InvalidConfig("samples_per_delta must be >= 1".into()));
        }
        if self.recurrence_count < 2 {
            return Err(Error::InvalidConfig("recurrence_count must be >= 2".into()));
        }
        if !(self.transient >= 0.0) || self.t_max < 2.0 * self.transient {
            return Err(Error::InvalidConfig(format!(
                "t_max = {} must be at least twice the transient {}",
                self.t_max, self.transient
            )));
        }
        Ok(())
    }

    fn integrator_options(&self) -> IntegratorOptions {
        IntegratorOptions {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            t_max: self.t_max,
            log_mode: true,
            max_step: 2.0,
            ..IntegratorOptions::default()
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Draw `k` points of the delta-neighbourhood of the target elements:
/// base points uniform in arc length along the target, offsets uniform in
/// direction with log-uniform magnitude in [delta/100, delta], accepted
/// when 0 < d(x, target) < delta (and coordinates strictly positive under
/// the invariant-subspace exclusion).
pub fn sample_neighborhood(
    g: &NetworkGeometry,
    target: &BTreeSet<ElementId>,
    delta: f64,
    k: usize,
    exclusions: Exclusions,
    seed: u64,
    orthant: bool,
) -> Result<Vec<Vec<f64>>> {
    if !(delta > 0.0) {
        return Err(Error::InvalidConfig(format!("delta = {delta} must be positive")));
    }
    let mask = g.mask_for(target)?;
    if mask.is_empty() {
        return Err(Error::InvalidConfig("target set is empty".into()));
    }
    let n = g.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Cumulative arc length over target edges for uniform base points.
    let mut edge_slots = Vec::new();
    let mut cum = vec![0.0];
    for (slot, edge) in g.edges.iter().enumerate() {
        if mask.has_edge(slot) {
            edge_slots.push(slot);
            cum.push(cum.last().unwrap() + edge.arc_length());
        }
    }
    let total_len = *cum.last().unwrap();
    let eq_slots: Vec<usize> = (0..g.equilibria.len()).filter(|s| mask.has_eq(*s)).collect();

    let mut out = Vec::with_capacity(k);
    let mut attempts = 0usize;
    let max_attempts = 10_000 * k.max(1);
    while out.len() < k {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::InvalidConfig(format!(
                "neighbourhood sampling stalled after {attempts} attempts (delta = {delta})"
            )));
        }
        // Base point on the target.
        let mut base = vec![0.0; n];
        if total_len > 0.0 {
            let s = rng.random::<f64>() * total_len;
            let pos = match cum.binary_search_by(|c| c.partial_cmp(&s).unwrap()) {
                Ok(i) => i,
                Err(i) => i - 1,
            };
            let pos = pos.min(edge_slots.len() - 1);
            let edge = &g.edges[edge_slots[pos]];
            let local = s - cum[pos];
            let idx = match edge
                .cum
                .binary_search_by(|c| c.partial_cmp(&local).unwrap())
            {
                Ok(i) => i,
                Err(i) => i.saturating_sub(1).min(edge.len() - 1),
            };
            base.copy_from_slice(edge.point(idx, n));
        } else {
            let slot = eq_slots[rng.random_range(0..eq_slots.len())];
            base.copy_from_slice(&g.equilibria[slot].coordinates);
        }
        // Offset: log-uniform magnitude over two decades, uniform direction.
        let magnitude = delta * 10f64.powf(-2.0 * rng.random::<f64>());
        let mut dir = vec![0.0; n];
        let mut norm = 0.0;
        for d in dir.iter_mut() {
            // Box-Muller pair, one value used.
            let u1: f64 = rng.random::<f64>().max(1e-300);
            let u2: f64 = rng.random();
            *d = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
            norm += *d * *d;
        }
        let norm = norm.sqrt();
        if norm == 0.0 {
            continue;
        }
        let mut x = base;
        for (xi, di) in x.iter_mut().zip(&dir) {
            *xi += magnitude * di / norm;
        }
        let admissible = match exclusions {
            Exclusions::InvariantSubspaces => x.iter().all(|v| *v > 0.0),
            Exclusions::None => !orthant || x.iter().all(|v| *v >= 0.0),
        };
        if !admissible {
            continue;
        }
        let d = g.distance_masked(&x, &mask);
        if d > 0.0 && d < delta {
            out.push(x);
        }
    }
    Ok(out)
}

/// Per-trajectory classification against a target set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryVerdict {
    pub covered_elements: BTreeSet<ElementId>,
    /// Every element of the target covered `recurrence_count` times
    /// after the transient.
    pub coverage_complete: bool,
    /// d(x(t), X) < epsilon for every stored state, from t = 0.
    pub stayed_within_epsilon: bool,
    /// d(x(t), X) < epsilon for every stored state after the transient.
    pub returned_within_epsilon: bool,
    /// Distance tail decreasing (or at the geometry floor) and final
    /// window below epsilon/10.
    pub converged: bool,
    pub escaped: bool,
    /// Elements still being visited in the final fifth of the run.
    pub omega_estimate: BTreeSet<ElementId>,
    pub omega_matches_target: bool,
    pub first_window_max: f64,
    pub final_window_max: f64,
    pub completed_horizon: bool,
}

/// Coverage checkpoints: every target polyline vertex bucket at spacing
/// epsilon/2, plus every target equilibrium.
struct Checkpoints {
    coords: Vec<f64>,
    n: usize,
    /// Edge slot -> (first checkpoint index, count, arc spacing).
    edge_ranges: Vec<Option<(usize, usize, f64)>>,
    eq_checkpoint: Vec<Option<usize>>,
    total: usize,
}

impl Checkpoints {
    fn build(g: &NetworkGeometry, mask: &ElementMask, epsilon: f64) -> Self {
        let n = g.dimension();
        let spacing = epsilon / 2.0;
        let mut coords = Vec::new();
        let mut total = 0usize;
        let mut edge_ranges = vec![None; g.edges.len()];
        let mut eq_checkpoint = vec![None; g.equilibria.len()];
        for (slot, edge) in g.edges.iter().enumerate() {
            if !mask.has_edge(slot) {
                continue;
            }
            let len = edge.arc_length();
            let count = ((len / spacing).ceil() as usize + 1).max(2);
            let actual_spacing = len / (count - 1) as f64;
            let first = total;
            let mut walk = 0usize;
            for q in 0..count {
                let s = q as f64 * actual_spacing;
                while walk + 1 < edge.len() && edge.cum[walk + 1] < s {
                    walk += 1;
                }
                coords.extend_from_slice(edge.point(walk.min(edge.len() - 1), n));
                total += 1;
            }
            edge_ranges[slot] = Some((first, count, actual_spacing));
        }
        for (slot, eq) in g.equilibria.iter().enumerate() {
            if !mask.has_eq(slot) {
                continue;
            }
            eq_checkpoint[slot] = Some(total);
            coords.extend_from_slice(&eq.coordinates);
            total += 1;
        }
        Checkpoints {
            coords,
            n,
            edge_ranges,
            eq_checkpoint,
            total,
        }
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.n..(i + 1) * self.n]
    }
}

/// Reusable classification context for one (geometry, target) pair.
pub struct TargetContext<'g> {
    pub geometry: &'g NetworkGeometry,
    pub target: BTreeSet<ElementId>,
    mask: ElementMask,
    checkpoints: Checkpoints,
}

impl<'g> TargetContext<'g> {
    pub fn new(
        g: &'g NetworkGeometry,
        target: &BTreeSet<ElementId>,
        epsilon: f64,
    ) -> Result<Self> {
        let mask = g.mask_for(target)?;
        if mask.is_empty() {
            return Err(Error::InvalidConfig("target set is empty".into()));
        }
        Ok(TargetContext {
            geometry: g,
            target: target.clone(),
            mask,
            checkpoints: Checkpoints::build(g, &mask, epsilon),
        })
    }
}

/// Classify one trajectory against a target set.
pub fn classify_trajectory(
    traj: &Trajectory,
    g: &NetworkGeometry,
    target: &BTreeSet<ElementId>,
    cfg: &VisibilityConfig,
) -> Result<TrajectoryVerdict> {
    let ctx = TargetContext::new(g, target, cfg.epsilon)?;
    classify_with_context(traj, &ctx, cfg)
}

pub fn classify_with_context(
    traj: &Trajectory,
    ctx: &TargetContext,
    cfg: &VisibilityConfig,
) -> Result<TrajectoryVerdict> {
    cfg.validate()?;
    let completed = traj.final_time() >= 0.99 * cfg.t_max;
    if traj.termination == Termination::TimeLimit && traj.final_time() < 2.0 * cfg.transient {
        return Err(Error::TrajectoryTooShort(format!(
            "horizon {} is below twice the transient {}",
            traj.final_time(),
            cfg.transient
        )));
    }
    let g = ctx.geometry;
    let eps = cfg.epsilon;
    let t_end = traj.final_time();
    let omega_start = 0.8 * t_end;
    let window_len = (t_end - cfg.transient).max(1e-9) / 5.0;

    let mut tracker = DistanceTracker::new(g, ctx.mask, eps);
    let cps = &ctx.checkpoints;
    let mut last_mark: Vec<i64> = vec![-2; cps.total];
    let mut visits: Vec<u32> = vec![0; cps.total];
    let mut tail_mark: Vec<bool> = vec![false; cps.total];

    let mut stayed = true;
    let mut returned = true;
    let mut window_max = [0.0f64; 5];

    let reach = 2.5 * eps;
    for (i, (t, x)) in traj.iter_states().enumerate() {
        let q = tracker.query(x);
        let d = q.distance;
        if d >= eps {
            stayed = false;
            if t > cfg.transient {
                returned = false;
            }
        }
        if t >= cfg.transient {
            let w = (((t - cfg.transient) / window_len) as usize).min(4);
            if d > window_max[w] {
                window_max[w] = d;
            }
        }
        // Checkpoint marking.
        let idx = i as i64;
        let post_transient = t > cfg.transient;
        let in_tail = t >= omega_start;
        let mark = |cp: usize,
                        last_mark: &mut [i64],
                        visits: &mut [u32],
                        tail_mark: &mut [bool]| {
            if post_transient && last_mark[cp] != idx - 1 {
                visits[cp] += 1;
            }
            if post_transient {
                last_mark[cp] = idx;
            }
            if in_tail {
                tail_mark[cp] = true;
            }
        };
        if d < eps {
            if let Nearest::Edge { slot, arc } = q.nearest {
                if let Some((first, count, spacing)) = cps.edge_ranges[slot] {
                    let lo = (((arc - reach) / spacing).floor().max(0.0)) as usize;
                    let hi = ((((arc + reach) / spacing).ceil()) as usize).min(count - 1);
                    for qi in lo..=hi {
                        let cp = first + qi;
                        if crate::geometry::euclidean_dist(x, cps.point(cp)) < eps {
                            mark(cp, &mut last_mark, &mut visits, &mut tail_mark);
                        }
                    }
                }
            }
        }
        for &(eq_slot, d_eq) in &q.near_equilibria {
            if d_eq < eps {
                if let Some(cp) = cps.eq_checkpoint[eq_slot] {
                    mark(cp, &mut last_mark, &mut visits, &mut tail_mark);
                }
                for &edge_slot in g.adjacent_edges(eq_slot) {
                    if let Some((first, count, spacing)) = cps.edge_ranges[edge_slot] {
                        let edge = &g.edges[edge_slot];
                        let touches_start = edge.from == g.equilibria[eq_slot].id;
                        let span = ((reach / spacing).ceil() as usize).min(count - 1);
                        let range = if touches_start {
                            0..=span
                        } else {
                            (count - 1 - span)..=(count - 1)
                        };
                        for qi in range {
                            let cp = first + qi;
                            if crate::geometry::euclidean_dist(x, cps.point(cp)) < eps {
                                mark(cp, &mut last_mark, &mut visits, &mut tail_mark);
                            }
                        }
                    }
                }
            }
        }
    }

    // Element-level coverage.
    let mut covered = BTreeSet::new();
    let mut omega = BTreeSet::new();
    let mut coverage_complete = true;
    for id in &ctx.target {
        let (all_visited, all_tail) = match id {
            ElementId::Equilibrium(eid) => {
                let slot = g.equilibria.iter().position(|e| e.id == *eid).unwrap();
                let cp = cps.eq_checkpoint[slot].unwrap();
                (visits[cp] >= cfg.recurrence_count, tail_mark[cp])
            }
            ElementId::Edge { from, to } => {
                let slot = g
                    .edges
                    .iter()
                    .position(|e| e.from == *from && e.to == *to)
                    .unwrap();
                let (first, count, _) = cps.edge_ranges[slot].unwrap();
                let mut v = true;
                let mut tm = true;
                for cp in first..first + count {
                    v &= visits[cp] >= cfg.recurrence_count;
                    tm &= tail_mark[cp];
                }
                (v, tm)
            }
        };
        if all_visited {
            covered.insert(*id);
        } else {
            coverage_complete = false;
        }
        if all_tail {
            omega.insert(*id);
        }
    }

    let escaped = traj.termination == Termination::Escape;
    if !completed {
        returned = false;
    }
    let first_window_max = window_max[0];
    let final_window_max = window_max[4];
    let converged = completed
        && returned
        && final_window_max < eps / 10.0
        && (final_window_max <= 0.5 * first_window_max
            || final_window_max < GEOMETRY_DISTANCE_FLOOR);
    let omega_matches_target = omega == ctx.target;
    debug_assert!(!converged || returned);
    debug_assert!(!escaped || !stayed);
    Ok(TrajectoryVerdict {
        covered_elements: covered,
        coverage_complete,
        stayed_within_epsilon: stayed,
        returned_within_epsilon: returned,
        converged,
        escaped,
        omega_estimate: omega,
        omega_matches_target,
        first_window_max,
        final_window_max,
        completed_horizon: completed,
    })
}

/// The four per-trajectory mode predicates, strongest first.
pub fn mode_flags(v: &TrajectoryVerdict) -> [bool; 4] {
    let l = v.coverage_complete && v.stayed_within_epsilon;
    let a = l && v.converged;
    let q = v.converged && v.omega_matches_target;
    let vis = v.coverage_complete && v.returned_within_epsilon;
    [a, l, q, vis]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VisibilityMode {
    AsymptoticallyVisible,
    LyapunovVisible,
    QuasiVisible,
    Visible,
    NotVisible,
}

impl VisibilityMode {
    pub fn label(&self) -> &'static str {
        match self {
            VisibilityMode::AsymptoticallyVisible => "AsymptoticallyVisible",
            VisibilityMode::LyapunovVisible => "LyapunovVisible",
            VisibilityMode::QuasiVisible => "QuasiVisible",
            VisibilityMode::Visible => "Visible",
            VisibilityMode::NotVisible => "NotVisible",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Prefix {
    Plain,
    Almost,
    Essentially,
    Fragmentarily,
    None,
}

impl Prefix {
    pub fn label(&self) -> &'static str {
        match self {
            Prefix::Plain => "Plain",
            Prefix::Almost => "Almost",
            Prefix::Essentially => "Essentially",
            Prefix::Fragmentarily => "Fragmentarily",
            Prefix::None => "None",
        }
    }
}

/// Satisfying fractions at one rung of the delta ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaFractions {
    pub delta: f64,
    pub samples: usize,
    pub failures: usize,
    pub asymptotically_visible: f64,
    pub lyapunov_visible: f64,
    pub quasi_visible: f64,
    pub visible: f64,
    pub stayed: f64,
    pub converged: f64,
    pub converged_and_stayed: f64,
}

impl DeltaFractions {
    fn fraction(&self, mode_idx: usize) -> f64 {
        match mode_idx {
            0 => self.asymptotically_visible,
            1 => self.lyapunov_visible,
            2 => self.quasi_visible,
            _ => self.visible,
        }
    }
}

/// Empirical stability flags, aggregated without the coverage
/// requirement. The consistency flags follow the definitions'
/// quantifier order: Lyapunov- and quasi-asymptotic-consistency must
/// hold for the full sample in the small-delta limit (smallest rung at
/// fraction 1, never decreasing), while f.a.s.-consistency needs a
/// positive satisfying fraction at every rung.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Sampled trajectories stay within epsilon for all t, in the
    /// small-delta limit.
    pub lyapunov_consistent: bool,
    /// Sampled trajectories converge to the set, in the small-delta
    /// limit.
    pub quasi_asymptotic_consistent: bool,
    /// A positive fraction converged while staying within epsilon, at
    /// every delta.
    pub fas_consistent: bool,
    pub stay_fraction: f64,
    pub converge_fraction: f64,
    pub converge_and_stay_fraction: f64,
    /// These are finite-horizon Monte Carlo checks.
    pub disclaimer: String,
}

/// Compact per-sample record kept in the verdict report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub delta: f64,
    pub index: usize,
    pub a_visible: bool,
    pub l_visible: bool,
    pub q_visible: bool,
    pub visible: bool,
    pub stayed: bool,
    pub returned: bool,
    pub converged: bool,
    pub coverage: bool,
    pub escaped: bool,
    pub final_window_max: f64,
}

/// Aggregate classification of one invariant set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityVerdict {
    pub target: String,
    pub elements: Vec<String>,
    pub mode: VisibilityMode,
    pub prefix: Prefix,
    pub fraction_per_delta: Vec<DeltaFractions>,
    pub stability: StabilityReport,
    pub evidence: Vec<TrajectorySummary>,
    pub horizon: f64,
    pub transient: f64,
    pub epsilon: f64,
    pub recurrence_count: u32,
    pub seed: u64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub exclusions: Exclusions,
}

impl VisibilityVerdict {
    pub fn one_line(&self) -> String {
        match (self.mode, self.prefix) {
            (VisibilityMode::NotVisible, _) => format!("{}: NotVisible", self.target),
            (m, Prefix::Plain) => format!("{}: {}", self.target, m.label()),
            (m, p) => format!("{}: {} ({})", self.target, m.label(), p.label()),
        }
    }
}

/// Prefix from the satisfying fractions along the (decreasing) ladder.
///
/// The defining quantifiers run "for any epsilon there is a delta", so
/// the small-delta end of the ladder is what the definitions constrain;
/// wide rungs may honestly lose samples to finite-size effects (corner
/// passages bulge like a fractional power of the offset). Plain demands
/// a full neighbourhood at every rung with nothing excluded; Almost
/// demands the fraction reach exactly 1 at the smallest rung without
/// ever decreasing, with only the measure-zero invariant subspaces
/// excluded; Essentially is the same trend test reaching at least 0.95;
/// Fragmentarily needs a positive fraction at every rung.
fn prefix_for(fractions: &[DeltaFractions], mode_idx: usize, exclusions: Exclusions) -> Prefix {
    let f: Vec<f64> = fractions.iter().map(|d| d.fraction(mode_idx)).collect();
    let all_one = f.iter().all(|v| *v >= 1.0);
    let non_decreasing = f.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    let limit_one = non_decreasing && *f.last().unwrap() >= 1.0;
    if all_one && exclusions == Exclusions::None {
        return Prefix::Plain;
    }
    if limit_one {
        return Prefix::Almost;
    }
    if non_decreasing && *f.last().unwrap() >= 0.95 {
        return Prefix::Essentially;
    }
    if f.iter().all(|v| *v > 0.0) {
        return Prefix::Fragmentarily;
    }
    Prefix::None
}

const MODES: [VisibilityMode; 4] = [
    VisibilityMode::AsymptoticallyVisible,
    VisibilityMode::LyapunovVisible,
    VisibilityMode::QuasiVisible,
    VisibilityMode::Visible,
];

/// Run the full Monte Carlo assessment of a target set: sampling,
/// integration, per-trajectory classification, and aggregation into a
/// visibility verdict plus empirical stability flags.
pub fn visibility_verdict(
    m: &NetworkModel,
    g: &NetworkGeometry,
    target: &BTreeSet<ElementId>,
    target_name: &str,
    cfg: &VisibilityConfig,
) -> Result<VisibilityVerdict> {
    cfg.validate()?;
    let ctx = TargetContext::new(g, target, cfg.epsilon)?;
    let opts = cfg.integrator_options();

    let mut fraction_per_delta = Vec::new();
    let mut evidence = Vec::new();
    let mut all_verdicts: Vec<TrajectoryVerdict> = Vec::new();
    for (di, &delta) in cfg.delta_ladder.iter().enumerate() {
        let seed = splitmix64(cfg.rng_seed ^ (di as u64 + 1));
        let samples = sample_neighborhood(
            g,
            target,
            delta,
            cfg.samples_per_delta,
            cfg.exclusions,
            seed,
            m.orthant_restricted(),
        )?;
        let results: Vec<Result<TrajectoryVerdict>> = samples
            .par_iter()
            .map(|x0| {
                let traj = integrate(m, x0, &opts)?;
                classify_with_context(&traj, &ctx, cfg)
            })
            .collect();
        let mut counts = [0usize; 4];
        let mut ok = 0usize;
        let mut failures = 0usize;
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Ok(v) => {
                    ok += 1;
                    let flags = mode_flags(&v);
                    for (slot, flag) in flags.iter().enumerate() {
                        if *flag {
                            counts[slot] += 1;
                        }
                    }
                    evidence.push(TrajectorySummary {
                        delta,
                        index: i,
                        a_visible: flags[0],
                        l_visible: flags[1],
                        q_visible: flags[2],
                        visible: flags[3],
                        stayed: v.stayed_within_epsilon,
                        returned: v.returned_within_epsilon,
                        converged: v.converged,
                        coverage: v.coverage_complete,
                        escaped: v.escaped,
                        final_window_max: v.final_window_max,
                    });
                    all_verdicts.push(v);
                }
                Err(_) => failures += 1,
            }
        }
        // Per-sample failures are tolerated; the batch fails only when
        // every trajectory does.
        if ok == 0 {
            return Err(Error::InvalidConfig(format!(
                "all {failures} trajectories failed at delta = {delta}"
            )));
        }
        let denom = ok as f64;
        let batch = &all_verdicts[all_verdicts.len() - ok..];
        let stayed = batch.iter().filter(|v| v.stayed_within_epsilon).count() as f64 / denom;
        let converged_f = batch.iter().filter(|v| v.converged).count() as f64 / denom;
        let both_f = batch
            .iter()
            .filter(|v| v.converged && v.stayed_within_epsilon)
            .count() as f64
            / denom;
        fraction_per_delta.push(DeltaFractions {
            delta,
            samples: ok,
            failures,
            asymptotically_visible: counts[0] as f64 / denom,
            lyapunov_visible: counts[1] as f64 / denom,
            quasi_visible: counts[2] as f64 / denom,
            visible: counts[3] as f64 / denom,
            stayed,
            converged: converged_f,
            converged_and_stayed: both_f,
        });
    }

    // Verdict selection: strongest prefix first, then strongest mode.
    let mut best: Option<(Prefix, usize)> = None;
    for (mode_idx, _) in MODES.iter().enumerate() {
        let p = prefix_for(&fraction_per_delta, mode_idx, cfg.exclusions);
        if p == Prefix::None {
            continue;
        }
        let cand = (p, mode_idx);
        best = Some(match best {
            None => cand,
            Some(prev) if cand < prev => cand,
            Some(prev) => prev,
        });
    }
    let (mode, prefix) = match best {
        Some((p, idx)) => (MODES[idx], p),
        None => (VisibilityMode::NotVisible, Prefix::None),
    };

    // Stability flags, coverage not required.
    let limit_holds = |pick: fn(&DeltaFractions) -> f64| -> bool {
        let f: Vec<f64> = fraction_per_delta.iter().map(pick).collect();
        f.windows(2).all(|w| w[1] >= w[0] - 1e-12) && *f.last().unwrap() >= 1.0
    };
    let total = all_verdicts.len() as f64;
    let stays = all_verdicts.iter().filter(|v| v.stayed_within_epsilon).count() as f64;
    let conv = all_verdicts.iter().filter(|v| v.converged).count() as f64;
    let both = all_verdicts
        .iter()
        .filter(|v| v.converged && v.stayed_within_epsilon)
        .count() as f64;
    let stability = StabilityReport {
        lyapunov_consistent: limit_holds(|d| d.stayed),
        quasi_asymptotic_consistent: limit_holds(|d| d.converged),
        fas_consistent: fraction_per_delta.iter().all(|d| d.converged_and_stayed > 0.0),
        stay_fraction: stays / total,
        converge_fraction: conv / total,
        converge_and_stay_fraction: both / total,
        disclaimer: "empirical, not a proof: finite-horizon Monte Carlo evidence".to_string(),
    };

    Ok(VisibilityVerdict {
        target: target_name.to_string(),
        elements: target.iter().map(|e| e.to_string()).collect(),
        mode,
        prefix,
        fraction_per_delta,
        stability,
        evidence,
        horizon: cfg.t_max,
        transient: cfg.transient,
        epsilon: cfg.epsilon,
        recurrence_count: cfg.recurrence_count,
        seed: cfg.rng_seed,
        rel_tol: cfg.rel_tol,
        abs_tol: cfg.abs_tol,
        exclusions: cfg.exclusions,
    })
}

/// Empirical stability flags for a target set. Same Monte Carlo evidence
/// as [`visibility_verdict`], aggregated without coverage requirements.
pub fn stability_report(
    m: &NetworkModel,
    g: &NetworkGeometry,
    target: &BTreeSet<ElementId>,
    target_name: &str,
    cfg: &VisibilityConfig,
) -> Result<StabilityReport> {
    Ok(visibility_verdict(m, g, target, target_name, cfg)?.stability)
}
