//! Analytic stability indices, regime prediction, itineraries and the
//! pentacle projection.
//!
//! The index rho of a cycle is the product of contracting-eigenvalue
//! magnitudes over the product of expanding rates at its nodes; rho > 1
//! means the cycle attracts within its invariant subspace, rho = 1 is
//! resonance. The six nu quantities decide whether the two Kirk-Silber
//! three-cycles are stable against transverse perturbations, and their
//! signs sort parameter sets into the four catalogued regimes.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::integrator::{EventKind, Trajectory};
use crate::models::{EquilibriumId, KsParams, NetworkModel};

/// Default tolerance for flagging |rho - 1| as an exact resonance.
pub const RESONANCE_TOL: f64 = 1e-9;
/// Tolerance used when classifying the shipped presets, whose quoted
/// parameter values are rounded to three decimals.
pub const PRESET_RESONANCE_TOL: f64 = 1e-3;
/// Episodes shorter than this are discarded as grazes.
pub const MIN_EPISODE_DURATION: f64 = 0.5;
/// An edge becomes `Interior` when at least three coordinates exceed
/// this threshold simultaneously somewhere along the transition.
pub const INTERIOR_THRESHOLD: f64 = 0.05;

/// Ratio of contracting magnitudes to expanding rates.
pub fn rho(contracting: &[f64], expanding: &[f64]) -> Result<f64> {
    if contracting.is_empty() || expanding.is_empty() {
        return Err(Error::NonPositiveInput("empty eigenvalue list".into()));
    }
    for &v in contracting.iter().chain(expanding) {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NonPositiveInput(format!("eigenvalue {v}")));
        }
    }
    let num: f64 = contracting.iter().product();
    let den: f64 = expanding.iter().product();
    Ok(num / den)
}

/// `rho_123` of a Kirk-Silber system (also the GH formula).
pub fn ks_rho_123(p: &KsParams) -> f64 {
    (p.c13 * p.c21 * p.c32) / (p.e12 * p.e23 * p.e31)
}

/// `rho_124` of a Kirk-Silber system.
pub fn ks_rho_124(p: &KsParams) -> f64 {
    (p.c14 * p.c21 * p.c42) / (p.e12 * p.e24 * p.e41)
}

/// The six transverse-stability quantities. Labels ending in 4 guard the
/// 1-2-3 cycle against x4 perturbations, labels ending in 3 guard the
/// 1-2-4 cycle against x3; the second triple is the first with the
/// indices 3 and 4 switched throughout.
pub fn nu_quantities(p: &KsParams) -> Result<BTreeMap<String, f64>> {
    p.validate()?;
    let mut nu = BTreeMap::new();
    nu.insert(
        "nu_1234".to_string(),
        p.c14 / p.e12 - (p.c13 * p.e24) / (p.e12 * p.e23)
            + (p.c21 * p.c13 * p.t34) / (p.e12 * p.e31 * p.e23),
    );
    nu.insert(
        "nu_2314".to_string(),
        -p.e24 / p.e23
            + (p.c21 * p.t34) / (p.e23 * p.e31)
            + (p.c14 * p.c32 * p.c21) / (p.e12 * p.e23 * p.e31),
    );
    nu.insert(
        "nu_3124".to_string(),
        p.t34 / p.e31 + (p.c32 * p.c14) / (p.e12 * p.e31)
            - (p.c32 * p.c13 * p.e24) / (p.e23 * p.e12 * p.e31),
    );
    nu.insert(
        "nu_1243".to_string(),
        p.c13 / p.e12 - (p.c14 * p.e23) / (p.e12 * p.e24)
            + (p.c21 * p.c14 * p.t43) / (p.e12 * p.e41 * p.e24),
    );
    nu.insert(
        "nu_2413".to_string(),
        -p.e23 / p.e24
            + (p.c21 * p.t43) / (p.e24 * p.e41)
            + (p.c13 * p.c42 * p.c21) / (p.e12 * p.e24 * p.e41),
    );
    nu.insert(
        "nu_3142".to_string(),
        p.t43 / p.e41 + (p.c42 * p.c13) / (p.e12 * p.e41)
            - (p.c42 * p.c14 * p.e23) / (p.e24 * p.e12 * p.e41),
    );
    Ok(nu)
}

/// Analytic indices of a parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityIndices {
    pub rho_values: BTreeMap<String, f64>,
    pub nu_values: BTreeMap<String, f64>,
    pub resonance_flags: BTreeMap<String, bool>,
}

impl StabilityIndices {
    pub fn for_ks(p: &KsParams, resonance_tol: f64) -> Result<Self> {
        let mut rho_values = BTreeMap::new();
        rho_values.insert("rho_123".to_string(), ks_rho_123(p));
        rho_values.insert("rho_124".to_string(), ks_rho_124(p));
        let nu_values = nu_quantities(p)?;
        let resonance_flags = rho_values
            .iter()
            .map(|(k, v)| (k.clone(), (v - 1.0).abs() <= resonance_tol))
            .collect();
        Ok(StabilityIndices {
            rho_values,
            nu_values,
            resonance_flags,
        })
    }
}

/// The four catalogued Kirk-Silber regimes, plus a bucket for sign
/// patterns outside the catalogue (reported with their raw data).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KsRegime {
    NotAtResonanceNoSwitching,
    NotAtResonanceSwitching,
    AtResonanceNoSwitching,
    AtResonanceSwitching,
    Uncatalogued,
}

impl KsRegime {
    pub fn heading(&self) -> &'static str {
        match self {
            KsRegime::NotAtResonanceNoSwitching => "Not at resonance, no switching",
            KsRegime::NotAtResonanceSwitching => "Not at resonance, with switching",
            KsRegime::AtResonanceNoSwitching => "At resonance, no switching",
            KsRegime::AtResonanceSwitching => "At resonance, switching",
            KsRegime::Uncatalogued => "Outside the catalogued regimes",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SwitchDirection {
    /// Trajectories leave the 1-2-3 cycle for the 1-2-4 cycle.
    ThreeToFour,
    /// Trajectories leave the 1-2-4 cycle for the 1-2-3 cycle.
    FourToThree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsRegimeReport {
    pub indices: StabilityIndices,
    pub regime: KsRegime,
    pub switching: Option<SwitchDirection>,
    pub resonance_tol: f64,
}

/// Classify a Kirk-Silber parameter set by its index signs.
pub fn predict_ks_regime(p: &KsParams, resonance_tol: f64) -> Result<KsRegimeReport> {
    if !(resonance_tol >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "resonance_tol = {resonance_tol} must be nonnegative"
        )));
    }
    let indices = StabilityIndices::for_ks(p, resonance_tol)?;
    let rho_123 = indices.rho_values["rho_123"];
    let rho_124 = indices.rho_values["rho_124"];
    let nu = &indices.nu_values;
    let guard_123 = ["nu_1234", "nu_2314", "nu_3124"];
    let guard_124 = ["nu_1243", "nu_2413", "nu_3142"];
    let all_pos = |names: &[&str]| names.iter().all(|k| nu[*k] > 0.0);
    let any_neg = |names: &[&str]| names.iter().any(|k| nu[*k] < 0.0);
    let any_zero = |names: &[&str]| names.iter().any(|k| nu[*k] == 0.0);

    let res_123 = (rho_123 - 1.0).abs() <= resonance_tol;
    let res_124 = (rho_124 - 1.0).abs() <= resonance_tol;
    let attracting = |rho: f64, res: bool| res || rho > 1.0;

    let switching = if all_pos(&guard_124) && any_neg(&guard_123) {
        Some(SwitchDirection::ThreeToFour)
    } else if all_pos(&guard_123) && any_neg(&guard_124) {
        Some(SwitchDirection::FourToThree)
    } else {
        None
    };

    let coherent = attracting(rho_123, res_123)
        && attracting(rho_124, res_124)
        && !any_zero(&guard_123)
        && !any_zero(&guard_124)
        // Both triples carrying a negative sign is outside the catalogue.
        && !(any_neg(&guard_123) && any_neg(&guard_124));

    let regime = if !coherent {
        KsRegime::Uncatalogued
    } else {
        match (res_123 || res_124, switching.is_some()) {
            (false, false) => KsRegime::NotAtResonanceNoSwitching,
            (false, true) => KsRegime::NotAtResonanceSwitching,
            (true, false) => KsRegime::AtResonanceNoSwitching,
            (true, true) => KsRegime::AtResonanceSwitching,
        }
    };
    Ok(KsRegimeReport {
        indices,
        regime,
        switching,
        resonance_tol,
    })
}

/// Label of the transition between two consecutive episodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeLabel {
    /// Next-neighbour connection `xi_j -> xi_{j+1}` (mod 5).
    A,
    /// Second-neighbour connection `xi_j -> xi_{j-2}` (mod 5).
    B,
    /// Transition through the interior of a two-dimensional connection.
    Interior,
    Other,
}

/// How transitions are labelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelScheme {
    /// A/B typed edges of the five-dimensional cyclic system.
    RpsslAb,
    /// Name edges by their endpoint pair only.
    Generic,
}

/// One near-equilibrium residence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub equilibrium: EquilibriumId,
    pub t_enter: f64,
    pub t_exit: f64,
}

/// Sequence of residences with labelled transitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Itinerary {
    pub episodes: Vec<Episode>,
    /// One label per consecutive episode pair.
    pub edge_labels: Vec<EdgeLabel>,
    pub min_duration: f64,
    /// Identifier of the trajectory this itinerary came from.
    pub source: Option<String>,
}

impl Itinerary {
    /// Equilibrium axes in visit order (0-based).
    pub fn visit_sequence(&self) -> Vec<usize> {
        self.episodes.iter().map(|e| e.equilibrium.axis).collect()
    }
}

/// Collapse a trajectory's Enter/Exit events into residence episodes.
/// Episodes shorter than `MIN_EPISODE_DURATION` are discarded as grazes;
/// a trailing Enter is closed at the final time.
pub fn extract_itinerary(traj: &Trajectory) -> Result<Itinerary> {
    extract_itinerary_with(traj, MIN_EPISODE_DURATION)
}

pub fn extract_itinerary_with(traj: &Trajectory, min_duration: f64) -> Result<Itinerary> {
    if traj.events.iter().all(|e| e.kind != EventKind::Enter) {
        return Err(Error::NoEvents);
    }
    let end_time = traj.final_time();
    let mut episodes = Vec::new();
    let mut open: Option<(EquilibriumId, f64)> = None;
    for ev in &traj.events {
        match ev.kind {
            EventKind::Enter => {
                // Neighbourhoods are disjoint, so an enter implies the
                // previous episode was closed; be defensive anyway.
                if let Some((eq, t0)) = open.take() {
                    episodes.push(Episode {
                        equilibrium: eq,
                        t_enter: t0,
                        t_exit: ev.t,
                    });
                }
                open = Some((ev.equilibrium, ev.t));
            }
            EventKind::Exit => {
                if let Some((eq, t0)) = open.take() {
                    debug_assert_eq!(eq, ev.equilibrium);
                    episodes.push(Episode {
                        equilibrium: eq,
                        t_enter: t0,
                        t_exit: ev.t,
                    });
                }
            }
        }
    }
    if let Some((eq, t0)) = open {
        episodes.push(Episode {
            equilibrium: eq,
            t_enter: t0,
            t_exit: end_time,
        });
    }
    episodes.retain(|e| e.t_exit - e.t_enter >= min_duration);
    let labels = vec![EdgeLabel::Other; episodes.len().saturating_sub(1)];
    Ok(Itinerary {
        episodes,
        edge_labels: labels,
        min_duration,
        source: None,
    })
}

/// Fill in edge labels.
///
/// Under `RpsslAb`, `xi_j -> xi_{j+1}` is A and `xi_j -> xi_{j-2}` is B
/// (indices mod 5); either is relabelled `Interior` when at least three
/// coordinates simultaneously exceed `interior_threshold` somewhere
/// between the episodes.
pub fn classify_edges(
    it: &Itinerary,
    traj: &Trajectory,
    m: &NetworkModel,
    scheme: LabelScheme,
    interior_threshold: f64,
) -> Result<Itinerary> {
    if scheme == LabelScheme::RpsslAb && m.dimension() != 5 {
        return Err(Error::WrongDimension {
            expected: 5,
            found: m.dimension(),
        });
    }
    let mut out = it.clone();
    for (i, pair) in it.episodes.windows(2).enumerate() {
        let from = pair[0].equilibrium.axis;
        let to = pair[1].equilibrium.axis;
        let mut label = match scheme {
            LabelScheme::Generic => EdgeLabel::Other,
            LabelScheme::RpsslAb => {
                let delta = (to + 5 - from) % 5;
                match delta {
                    1 => EdgeLabel::A,
                    3 => EdgeLabel::B,
                    _ => EdgeLabel::Other,
                }
            }
        };
        let (t0, t1) = (pair[0].t_exit, pair[1].t_enter);
        let mut interior = false;
        for (t, x) in traj.iter_states() {
            if t <= t0 {
                continue;
            }
            if t >= t1 {
                break;
            }
            let above = x.iter().filter(|v| v.abs() > interior_threshold).count();
            if above >= 3 {
                interior = true;
                break;
            }
        }
        if interior {
            label = EdgeLabel::Interior;
        }
        out.edge_labels[i] = label;
    }
    Ok(out)
}

/// Times of successive returns to `anchor`, as full-loop durations.
pub fn loop_durations(it: &Itinerary, anchor: EquilibriumId) -> Vec<f64> {
    let times: Vec<f64> = it
        .episodes
        .iter()
        .filter(|e| e.equilibrium == anchor)
        .map(|e| e.t_enter)
        .collect();
    times.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Ratios of successive full-loop durations, anchored at the first
/// episode's equilibrium. Approaches the cycle's rho when the trajectory
/// converges to a cycle, and 1 at resonance.
pub fn residence_ratios(it: &Itinerary) -> Result<Vec<f64>> {
    if it.episodes.len() < 3 {
        return Err(Error::TooFewEpisodes {
            found: it.episodes.len(),
        });
    }
    let anchor = it.episodes[0].equilibrium;
    let durations = loop_durations(it, anchor);
    if durations.len() < 2 {
        return Err(Error::TooFewEpisodes {
            found: it.episodes.len(),
        });
    }
    Ok(durations.windows(2).map(|w| w[1] / w[0]).collect())
}

/// Project a five-dimensional state onto the plane, placing the five
/// axis equilibria on the vertices of a regular pentagon: the j-th axis
/// maps to angle 2*pi*j/5, so `xi_5` lands at (1, 0).
pub fn pentacle_project(x: &[f64]) -> Result<(f64, f64)> {
    if x.len() != 5 {
        return Err(Error::WrongDimension {
            expected: 5,
            found: x.len(),
        });
    }
    let mut y1 = 0.0;
    let mut y2 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let angle = TAU * (i + 1) as f64 / 5.0;
        y1 += v * angle.cos();
        y2 += v * angle.sin();
    }
    Ok((y1, y2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn rho_unit_inputs_and_gh_value() {
        assert_eq!(rho(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), 1.0);
        let p = presets::GH_TABLE;
        let r = rho(&[p.c13, p.c21, p.c32], &[p.e12, p.e23, p.e31]).unwrap();
        assert!((r - 4.0 / 3.0).abs() < 1e-12, "rho_123 = {r}");
        assert!(matches!(
            rho(&[1.0, -1.0], &[1.0]),
            Err(Error::NonPositiveInput(_))
        ));
        assert!(matches!(rho(&[], &[1.0]), Err(Error::NonPositiveInput(_))));
    }

    #[test]
    fn rho_is_symmetric_and_reciprocal() {
        let c = [0.7, 1.3, 2.1];
        let e = [0.4, 1.9, 0.9];
        let r1 = rho(&c, &e).unwrap();
        let r2 = rho(&[1.3, 2.1, 0.7], &[0.9, 0.4, 1.9]).unwrap();
        assert!((r1 - r2).abs() < 1e-15);
        let inv = rho(&e, &c).unwrap();
        assert!((r1 * inv - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ks_d_rho_124_is_exactly_one() {
        let r = ks_rho_124(&presets::KS_D);
        assert!((r - 1.0).abs() < 1e-12, "rho_124 = {r}");
        assert!(ks_rho_123(&presets::KS_D) > 1.0);
    }

    #[test]
    fn nu_all_ones_gives_all_ones() {
        let p = KsParams {
            e12: 1.0,
            c13: 1.0,
            c14: 1.0,
            c21: 1.0,
            e23: 1.0,
            e24: 1.0,
            e31: 1.0,
            c32: 1.0,
            t43: 1.0,
            e41: 1.0,
            c42: 1.0,
            t34: 1.0,
        };
        let nu = nu_quantities(&p).unwrap();
        assert_eq!(nu.len(), 6);
        for (k, v) in nu {
            assert!((v - 1.0).abs() < 1e-15, "{k} = {v}");
        }
    }

    #[test]
    fn ks_b_nu_1234_matches_hand_value_for_both_mappings() {
        // Quoted coefficients c34 = 0.7, c43 = 0.8; subscript-preserving
        // mapping first.
        let p = presets::KS_B;
        let nu = nu_quantities(&p).unwrap();
        let expect = 0.9 / 0.7 - (0.5 * 1.9) / (0.7 * 0.4) + (1.6 * 0.5 * 0.7) / (0.7 * 1.4 * 0.4);
        assert!((nu["nu_1234"] - expect).abs() < 1e-12);
        assert!(nu["nu_1234"] < 0.0);
        // Swapped mapping t34 := c43, t43 := c34.
        let swapped = KsParams {
            t34: 0.8,
            t43: 0.7,
            ..p
        };
        let nu2 = nu_quantities(&swapped).unwrap();
        assert!(nu2["nu_1234"] < 0.0);
    }

    #[test]
    fn ks_a_all_nu_positive() {
        let nu = nu_quantities(&presets::KS_A).unwrap();
        for (k, v) in nu {
            assert!(v > 0.0, "{k} = {v} should be positive in regime (a)");
        }
    }

    #[test]
    fn regime_table_matches_catalogue() {
        let cases = [
            (presets::KS_A, KsRegime::NotAtResonanceNoSwitching, None),
            (
                presets::KS_B,
                KsRegime::NotAtResonanceSwitching,
                Some(SwitchDirection::ThreeToFour),
            ),
            (presets::KS_C, KsRegime::AtResonanceNoSwitching, None),
            (
                presets::KS_D,
                KsRegime::AtResonanceSwitching,
                Some(SwitchDirection::ThreeToFour),
            ),
        ];
        for (p, regime, switching) in cases {
            let rep = predict_ks_regime(&p, PRESET_RESONANCE_TOL).unwrap();
            assert_eq!(rep.regime, regime, "for {p:?}");
            assert_eq!(rep.switching, switching);
        }
        // At the strict analytic tolerance row (c) no longer counts as
        // resonant (its e41 is a rounded table value), row (d) still does.
        let strict_c = predict_ks_regime(&presets::KS_C, RESONANCE_TOL).unwrap();
        assert_eq!(strict_c.regime, KsRegime::NotAtResonanceNoSwitching);
        let strict_d = predict_ks_regime(&presets::KS_D, RESONANCE_TOL).unwrap();
        assert_eq!(strict_d.regime, KsRegime::AtResonanceSwitching);
    }

    #[test]
    fn all_ones_ks_is_flagged_resonant() {
        let p = KsParams {
            e12: 1.0,
            c13: 1.0,
            c14: 1.0,
            c21: 1.0,
            e23: 1.0,
            e24: 1.0,
            e31: 1.0,
            c32: 1.0,
            t43: 1.0,
            e41: 1.0,
            c42: 1.0,
            t34: 1.0,
        };
        let idx = StabilityIndices::for_ks(&p, RESONANCE_TOL).unwrap();
        assert!(idx.resonance_flags["rho_123"]);
        assert!(idx.resonance_flags["rho_124"]);
        assert!(idx.rho_values.values().all(|&v| v == 1.0));
    }

    #[test]
    fn pentacle_axis_images() {
        let (y1, y2) = pentacle_project(&[0.0; 5]).unwrap();
        assert_eq!((y1, y2), (0.0, 0.0));
        let xi5 = [0.0, 0.0, 0.0, 0.0, 1.0];
        let (y1, y2) = pentacle_project(&xi5).unwrap();
        assert!((y1 - 1.0).abs() < 1e-15 && y2.abs() < 1e-15);
        let xi1 = [1.0, 0.0, 0.0, 0.0, 0.0];
        let (y1, y2) = pentacle_project(&xi1).unwrap();
        assert!((y1 - (TAU / 5.0).cos()).abs() < 1e-15);
        assert!((y2 - (TAU / 5.0).sin()).abs() < 1e-15);
        assert!((y1 - 0.3090).abs() < 1e-4);
        assert!((y2 - 0.9511).abs() < 1e-4);
        assert!(matches!(
            pentacle_project(&[0.0; 4]),
            Err(Error::WrongDimension { .. })
        ));
    }
}
