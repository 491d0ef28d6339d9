//! Built-in parameter sets addressable by string id.
//!
//! The catalog ships the Guckenheimer-Holmes example (plus a resonant
//! variant with `rho_123 = 1`), four Kirk-Silber regimes and four
//! Rock-Paper-Scissors-Spock-Lizard regimes, each with a documented
//! initial condition that reproduces the regime's qualitative signature.
//!
//! The Kirk-Silber sets are quoted with `c34`/`c43` coefficients; these
//! map subscript-preserving onto the model's `t34`/`t43` couplings.

use crate::error::{Error, Result};
use crate::models::{
    make_gh_model, make_ks_model, make_rpssl_model, EquilibriumId, GhParams, KsParams,
    NetworkModel, RpsslParams,
};

/// Parameter payload of one catalog entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PresetParams {
    Gh(GhParams),
    Ks(KsParams),
    Rpssl(RpsslParams),
}

/// One named entry of the preset catalog.
#[derive(Debug, Clone)]
pub struct Preset {
    pub id: &'static str,
    /// Alternate ids accepted by `find_preset`.
    pub aliases: &'static [&'static str],
    pub description: &'static str,
    /// Short note on the regime this parameter set realizes.
    pub regime_note: &'static str,
    pub params: PresetParams,
    /// Initial condition chosen to reproduce the regime signature.
    pub initial_condition: &'static [f64],
    /// Horizon over which the signature is visible.
    pub default_t_max: f64,
}

impl Preset {
    pub fn model(&self) -> NetworkModel {
        match &self.params {
            PresetParams::Gh(p) => make_gh_model(p).expect("catalog parameters are valid"),
            PresetParams::Ks(p) => make_ks_model(p).expect("catalog parameters are valid"),
            PresetParams::Rpssl(p) => make_rpssl_model(p).expect("catalog parameters are valid"),
        }
    }

    pub fn dimension(&self) -> usize {
        match &self.params {
            PresetParams::Gh(_) => 3,
            PresetParams::Ks(_) => 4,
            PresetParams::Rpssl(_) => 5,
        }
    }

    /// Edge list of the full heteroclinic network for this system.
    pub fn network_edges(&self) -> Vec<(EquilibriumId, EquilibriumId)> {
        let eq = EquilibriumId::positive;
        match &self.params {
            PresetParams::Gh(_) => vec![(eq(0), eq(1)), (eq(1), eq(2)), (eq(2), eq(0))],
            PresetParams::Ks(_) => vec![
                (eq(0), eq(1)),
                (eq(1), eq(2)),
                (eq(2), eq(0)),
                (eq(1), eq(3)),
                (eq(3), eq(0)),
            ],
            PresetParams::Rpssl(_) => {
                let mut edges = Vec::with_capacity(10);
                for j in 0..5 {
                    edges.push((eq(j), eq((j + 1) % 5))); // type A
                }
                for j in 0..5 {
                    edges.push((eq(j), eq((j + 3) % 5))); // type B, j -> j-2
                }
                edges
            }
        }
    }
}

pub const GH_TABLE: GhParams = GhParams {
    e12: 0.9,
    c13: 1.0,
    e23: 1.5,
    c21: 0.9,
    e31: 0.6,
    c32: 1.2,
};

/// GH_TABLE with `c13` rescaled so that `rho_123` is exactly 1.
pub const GH_RESONANT: GhParams = GhParams {
    c13: 0.75,
    ..GH_TABLE
};

pub const KS_A: KsParams = KsParams {
    e12: 0.4,
    c13: 1.5,
    c14: 1.3,
    c21: 1.3,
    e23: 1.9,
    e24: 1.8,
    e31: 1.9,
    c32: 0.8,
    t34: 0.4,
    e41: 1.8,
    c42: 0.8,
    t43: 1.2,
};

pub const KS_B: KsParams = KsParams {
    e12: 0.7,
    c13: 0.5,
    c14: 0.9,
    c21: 1.6,
    e23: 0.4,
    e24: 1.9,
    e31: 1.4,
    c32: 0.6,
    t34: 0.7,
    e41: 1.9,
    c42: 2.1,
    t43: 0.8,
};

pub const KS_C: KsParams = KsParams {
    e12: 1.3,
    c13: 1.7,
    c14: 0.7,
    c21: 1.2,
    e23: 1.0,
    e24: 0.5,
    e31: 2.0,
    c32: 1.4,
    t34: 0.5,
    e41: 0.646,
    c42: 0.5,
    t43: 0.7,
};

pub const KS_D: KsParams = KsParams {
    e12: 0.3,
    c13: 1.1,
    c14: 0.3,
    c21: 0.3,
    e23: 0.9,
    e24: 0.6,
    e31: 1.5,
    c32: 1.5,
    t34: 0.2,
    e41: 0.4,
    c42: 0.8,
    t43: 0.9,
};

pub const RPSSL_A: RpsslParams = RpsslParams {
    c_a: 1.30,
    e_a: 1.00,
    c_b: 1.50,
    e_b: 0.80,
};

pub const RPSSL_B: RpsslParams = RpsslParams {
    c_a: 1.10,
    e_a: 1.00,
    c_b: 2.70,
    e_b: 0.80,
};

pub const RPSSL_C: RpsslParams = RpsslParams {
    c_a: 1.10,
    e_a: 1.00,
    c_b: 1.80,
    e_b: 0.80,
};

pub const RPSSL_D: RpsslParams = RpsslParams {
    c_a: 1.02,
    e_a: 1.00,
    c_b: 1.25,
    e_b: 0.80,
};

/// The full catalog, in display order.
pub fn catalog() -> Vec<Preset> {
    vec![
        Preset {
            id: "gh",
            aliases: &[],
            description: "Guckenheimer-Holmes three-cycle",
            regime_note: "asymptotically stable cycle (rho_123 = 4/3)",
            params: PresetParams::Gh(GH_TABLE),
            initial_condition: &[0.7, 0.1, 0.05],
            default_t_max: 500.0,
        },
        Preset {
            id: "gh-resonance",
            aliases: &["gh-res"],
            description: "Guckenheimer-Holmes cycle at resonance",
            regime_note: "rho_123 = 1: family of periodic orbits, constant loop period",
            params: PresetParams::Gh(GH_RESONANT),
            initial_condition: &[0.7, 0.1, 0.05],
            default_t_max: 500.0,
        },
        Preset {
            id: "ks-a",
            aliases: &[],
            description: "Kirk-Silber network, regime (a)",
            regime_note: "not at resonance, no switching",
            params: PresetParams::Ks(KS_A),
            initial_condition: &[0.02, 1.0, 0.02, 0.002],
            default_t_max: 2000.0,
        },
        Preset {
            id: "ks-b",
            aliases: &[],
            description: "Kirk-Silber network, regime (b)",
            regime_note: "not at resonance, switching 3 -> 4",
            params: PresetParams::Ks(KS_B),
            initial_condition: &[0.02, 1.0, 0.02, 1e-14],
            default_t_max: 2000.0,
        },
        Preset {
            id: "ks-c",
            aliases: &[],
            description: "Kirk-Silber network, regime (c)",
            regime_note: "at resonance (rho_124 = 1), no switching",
            params: PresetParams::Ks(KS_C),
            initial_condition: &[0.02, 1.0, 1e-4, 0.02],
            default_t_max: 2000.0,
        },
        Preset {
            id: "ks-d",
            aliases: &[],
            description: "Kirk-Silber network, regime (d)",
            regime_note: "at resonance (rho_124 = 1), switching 3 -> 4",
            params: PresetParams::Ks(KS_D),
            initial_condition: &[0.02, 1.0, 0.02, 1e-10],
            default_t_max: 2000.0,
        },
        Preset {
            id: "rpssl-a",
            aliases: &["rpssl-aaaaa"],
            description: "RPSSL network, regime (a)",
            regime_note: "AAAAA: the A-cycle attracts",
            params: PresetParams::Rpssl(RPSSL_A),
            initial_condition: &[1.0, 0.08, 0.02, 0.01, 0.04],
            default_t_max: 10000.0,
        },
        Preset {
            id: "rpssl-b",
            aliases: &["rpssl-aab"],
            description: "RPSSL network, regime (b)",
            regime_note: "AAB: three-cycles attract",
            params: PresetParams::Rpssl(RPSSL_B),
            initial_condition: &[1.0, 0.08, 0.02, 0.01, 0.04],
            default_t_max: 5000.0,
        },
        Preset {
            id: "rpssl-c",
            aliases: &["rpssl-aabbb"],
            description: "RPSSL network, regime (c)",
            regime_note: "AABBB: omnicycle covering all five equilibria",
            params: PresetParams::Rpssl(RPSSL_C),
            initial_condition: &[1.0, 0.08, 0.02, 0.01, 0.04],
            default_t_max: 5000.0,
        },
        Preset {
            id: "rpssl-d",
            aliases: &["rpssl-aperiodic"],
            description: "RPSSL network, regime (d)",
            regime_note: "aperiodic edge sequence with interior excursions",
            params: PresetParams::Rpssl(RPSSL_D),
            initial_condition: &[1.0, 0.08, 0.02, 0.01, 0.04],
            default_t_max: 5000.0,
        },
    ]
}

/// Look up a preset by id or alias.
pub fn find_preset(id: &str) -> Result<Preset> {
    let id = id.to_ascii_lowercase();
    catalog()
        .into_iter()
        .find(|p| p.id == id || p.aliases.contains(&id.as_str()))
        .ok_or_else(|| Error::InvalidConfig(format!("unknown preset id '{id}'")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_build_and_ics_are_admissible() {
        for p in catalog() {
            let m = p.model();
            assert_eq!(m.dimension(), p.dimension());
            assert_eq!(p.initial_condition.len(), p.dimension());
            assert!(m.admissible(p.initial_condition).is_ok());
        }
    }

    #[test]
    fn aliases_resolve() {
        assert_eq!(find_preset("rpssl-aabbb").unwrap().id, "rpssl-c");
        assert_eq!(find_preset("KS-B").unwrap().id, "ks-b");
        assert!(find_preset("nope").is_err());
    }

    #[test]
    fn network_edge_counts() {
        assert_eq!(find_preset("gh").unwrap().network_edges().len(), 3);
        assert_eq!(find_preset("ks-a").unwrap().network_edges().len(), 5);
        assert_eq!(find_preset("rpssl-a").unwrap().network_edges().len(), 10);
    }
}
