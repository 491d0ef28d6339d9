//! Scenario files: a TOML schema describing one run end to end.
//!
//! Every section is optional when a preset is named; presets supply the
//! model, a documented initial condition and a default horizon. Explicit
//! fields always win over preset defaults.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

use hetnet::analysis::LabelScheme;
use hetnet::error::{Error, Result};
use hetnet::geometry::{cycle_target, ElementId, NetworkGeometry};
use hetnet::integrator::IntegratorOptions;
use hetnet::models::{make_generic_model, NetworkModel, Representation};
use hetnet::presets::{find_preset, Preset};
use hetnet::visibility::{Exclusions, VisibilityConfig};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visibility: Option<VisibilitySpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    /// "equivariant-cubic" or "lotka-volterra".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub representation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orthant_restricted: Option<bool>,
    /// Row k multiplies the k-th squared coordinate in equation j.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_mode: Option<bool>,
    /// Radius of the near-equilibrium neighbourhood for events.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub itinerary: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residence_ratios: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pentacle: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indices: Option<bool>,
    /// "rpssl" or "generic".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_labels: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interior_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_episode: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisibilitySpec {
    /// "network", "cycle:1,2,3", or "eq:2".
    pub targets: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_ladder: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_per_delta: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transient: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recurrence_count: Option<u32>,
    /// "invariant-subspaces" or "none".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclusions: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plots: Option<bool>,
    /// "log" or "linear" ordinate for time-series plots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<String>,
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).map_err(Error::Io)?;
        Scenario::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Scenario> {
        toml::from_str(text)
            .map_err(|e| Error::InvalidConfig(format!("scenario parse error: {e}")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| Error::InvalidConfig(format!("scenario serialization error: {e}")))
    }

    pub fn preset(&self) -> Result<Option<Preset>> {
        match &self.model.preset {
            Some(id) => Ok(Some(find_preset(id)?)),
            None => Ok(None),
        }
    }

    /// Build the model: preset id or inline matrix.
    pub fn build_model(&self) -> Result<NetworkModel> {
        if let Some(preset) = self.preset()? {
            if self.model.matrix.is_some() {
                return Err(Error::InvalidConfig(
                    "scenario sets both model.preset and model.matrix".into(),
                ));
            }
            return Ok(preset.model());
        }
        let matrix = self.model.matrix.as_ref().ok_or_else(|| {
            Error::InvalidConfig("scenario needs model.preset or model.matrix".into())
        })?;
        let n = self.model.dimension.unwrap_or(matrix.len());
        let representation = match self.model.representation.as_deref() {
            None | Some("equivariant-cubic") => Representation::EquivariantCubic,
            Some("lotka-volterra") => Representation::LotkaVolterra,
            Some(other) => {
                return Err(Error::InvalidConfig(format!(
                    "unknown representation '{other}'"
                )))
            }
        };
        make_generic_model(
            n,
            matrix,
            representation,
            self.model.orthant_restricted.unwrap_or(true),
        )
    }

    pub fn initial_state(&self) -> Result<Vec<f64>> {
        if let Some(state) = &self.initial.state {
            return Ok(state.clone());
        }
        if let Some(preset) = self.preset()? {
            return Ok(preset.initial_condition.to_vec());
        }
        Err(Error::InvalidConfig(
            "scenario needs initial.state (no preset supplies one)".into(),
        ))
    }

    pub fn integrator_options(&self) -> Result<IntegratorOptions> {
        let mut opts = IntegratorOptions::default();
        if let Some(preset) = self.preset()? {
            opts.t_max = preset.default_t_max;
        }
        if let Some(v) = self.integrator.t_max {
            opts.t_max = v;
        }
        if let Some(v) = self.integrator.rel_tol {
            opts.rel_tol = v;
        }
        if let Some(v) = self.integrator.abs_tol {
            opts.abs_tol = v;
        }
        if let Some(v) = self.integrator.log_mode {
            opts.log_mode = v;
        }
        opts.validate()?;
        Ok(opts)
    }

    pub fn eta(&self) -> f64 {
        self.integrator.eta.unwrap_or(0.2)
    }

    pub fn label_scheme(&self, model: &NetworkModel) -> Result<LabelScheme> {
        match self.analysis.edge_labels.as_deref() {
            Some("rpssl") => Ok(LabelScheme::RpsslAb),
            Some("generic") => Ok(LabelScheme::Generic),
            Some(other) => Err(Error::InvalidConfig(format!(
                "unknown edge_labels scheme '{other}'"
            ))),
            None => Ok(if model.dimension() == 5 {
                LabelScheme::RpsslAb
            } else {
                LabelScheme::Generic
            }),
        }
    }

    pub fn visibility_config(&self) -> Result<Option<VisibilityConfig>> {
        let Some(spec) = &self.visibility else {
            return Ok(None);
        };
        let mut cfg = VisibilityConfig::default();
        if let Some(v) = &spec.delta_ladder {
            cfg.delta_ladder = v.clone();
        }
        if let Some(v) = spec.epsilon {
            cfg.epsilon = v;
        }
        if let Some(v) = spec.samples_per_delta {
            cfg.samples_per_delta = v;
        }
        if let Some(v) = spec.t_max {
            cfg.t_max = v;
        }
        if let Some(v) = spec.transient {
            cfg.transient = v;
        }
        if let Some(v) = spec.recurrence_count {
            cfg.recurrence_count = v;
        }
        cfg.exclusions = match spec.exclusions.as_deref() {
            None | Some("invariant-subspaces") => Exclusions::InvariantSubspaces,
            Some("none") => Exclusions::None,
            Some(other) => {
                return Err(Error::InvalidConfig(format!(
                    "unknown exclusions '{other}'"
                )))
            }
        };
        if let Some(v) = spec.seed {
            cfg.rng_seed = v;
        }
        if let Some(v) = spec.rel_tol {
            cfg.rel_tol = v;
        }
        if let Some(v) = spec.abs_tol {
            cfg.abs_tol = v;
        }
        cfg.validate()?;
        Ok(Some(cfg))
    }
}

/// Parse a target spec against a geometry: "network", "cycle:1,2,3" or
/// "eq:2" (1-based axes).
pub fn parse_target(spec: &str, g: &NetworkGeometry) -> Result<(String, BTreeSet<ElementId>)> {
    if spec == "network" {
        return Ok(("network".to_string(), g.element_ids()));
    }
    if let Some(list) = spec.strip_prefix("cycle:") {
        let axes: Vec<usize> = list
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<usize>()
                    .ok()
                    .and_then(|v| v.checked_sub(1))
                    .ok_or_else(|| Error::InvalidConfig(format!("bad axis '{tok}' in '{spec}'")))
            })
            .collect::<Result<_>>()?;
        if axes.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "cycle target '{spec}' needs at least two axes"
            )));
        }
        let set = cycle_target(&axes);
        g.mask_for(&set)?;
        return Ok((spec.to_string(), set));
    }
    if let Some(tok) = spec.strip_prefix("eq:") {
        let axis: usize = tok
            .trim()
            .parse::<usize>()
            .ok()
            .and_then(|v| v.checked_sub(1))
            .ok_or_else(|| Error::InvalidConfig(format!("bad axis in '{spec}'")))?;
        let set: BTreeSet<ElementId> = [ElementId::Equilibrium(
            hetnet::models::EquilibriumId::positive(axis),
        )]
        .into();
        g.mask_for(&set)?;
        return Ok((spec.to_string(), set));
    }
    Err(Error::InvalidConfig(format!(
        "unknown target spec '{spec}' (use 'network', 'cycle:i,j,k' or 'eq:i')"
    )))
}
