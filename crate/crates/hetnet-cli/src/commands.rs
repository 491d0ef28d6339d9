//! Subcommand implementations.

use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use hetnet::analysis::{
    classify_edges, extract_itinerary_with, ks_rho_123, predict_ks_regime, residence_ratios,
    LabelScheme, PRESET_RESONANCE_TOL,
};
use hetnet::error::{Error, Result};
use hetnet::export::{
    edge_label_str, write_events_json, write_itinerary_csv, write_pentacle_csv,
    write_trajectory_csv, IndicesReport,
};
use hetnet::geometry::{build_network_geometry, DEFAULT_SEED_OFFSET};
use hetnet::integrator::integrate_with_equilibrium_events;
use hetnet::presets::{catalog, find_preset, PresetParams};
use hetnet::visibility::visibility_verdict;

use crate::scenario::{parse_target, Scenario};
use crate::svg;

/// Map library errors onto the documented exit codes.
pub fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_) | Error::Io(_) => 1,
        _ => 2,
    }
}

fn regime_summary(params: &PresetParams) -> String {
    match params {
        PresetParams::Gh(p) => {
            let rho = (p.c13 * p.c21 * p.c32) / (p.e12 * p.e23 * p.e31);
            if (rho - 1.0).abs() <= PRESET_RESONANCE_TOL {
                format!("rho_123 = {rho:.4}: at resonance (family of periodic orbits)")
            } else if rho > 1.0 {
                format!("rho_123 = {rho:.4}: asymptotically stable (restricted orthant)")
            } else {
                format!("rho_123 = {rho:.4}: repelling")
            }
        }
        PresetParams::Ks(p) => {
            let rep = predict_ks_regime(p, PRESET_RESONANCE_TOL)
                .expect("catalog parameters are valid");
            format!(
                "rho_123 = {:.4}, rho_124 = {:.4}: {}",
                rep.indices.rho_values["rho_123"],
                rep.indices.rho_values["rho_124"],
                rep.regime.heading()
            )
        }
        PresetParams::Rpssl(p) => format!(
            "cA = {}, eA = {}, cB = {}, eB = {}",
            p.c_a, p.e_a, p.c_b, p.e_b
        ),
    }
}

pub fn cmd_presets() -> Result<ExitCode> {
    println!("{:<14} {:<44} regime", "id", "description");
    for p in catalog() {
        println!("{:<14} {:<44} {}", p.id, p.description, regime_summary(&p.params));
        println!("{:<14} {:<44} note: {}", "", "", p.regime_note);
        if !p.aliases.is_empty() {
            println!("{:<14} {:<44} aliases: {}", "", "", p.aliases.join(", "));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn load_scenario(path: Option<PathBuf>, preset: Option<String>) -> Result<Scenario> {
    let mut sc = match path {
        Some(p) => Scenario::from_path(&p)?,
        None => Scenario::default(),
    };
    if let Some(id) = preset {
        if sc.model.preset.is_some() && sc.model.preset.as_deref() != Some(id.as_str()) {
            return Err(Error::InvalidConfig(
                "--preset conflicts with the scenario's model.preset".into(),
            ));
        }
        sc.model.preset = Some(id);
    }
    if sc.model.preset.is_none() && sc.model.matrix.is_none() {
        return Err(Error::InvalidConfig(
            "no model given: pass --preset or a scenario with [model]".into(),
        ));
    }
    Ok(sc)
}

fn scenario_hash(sc: &Scenario) -> Result<String> {
    let text = sc.to_toml()?;
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    Ok(format!("{:x}", hasher.finalize()))
}

/// Writes files, deleting everything written so far if any step fails.
struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    fn new(root: PathBuf) -> Result<Self> {
        fs::create_dir_all(&root)?;
        Ok(OutputDir {
            root,
            written: Vec::new(),
        })
    }

    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.written.push(path);
        Ok(())
    }

    fn cleanup(&self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_simulate(
    scenario: Option<PathBuf>,
    preset: Option<String>,
    tmax: Option<f64>,
    out: Option<PathBuf>,
    plots_flag: bool,
    log: bool,
    linear: bool,
) -> Result<ExitCode> {
    let mut sc = load_scenario(scenario, preset)?;
    if let Some(t) = tmax {
        sc.integrator.t_max = Some(t);
    }
    let name = sc.model.preset.clone().unwrap_or_else(|| "custom".into());
    let out_dir = out
        .or_else(|| sc.output.directory.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(format!("run-{name}")));
    let model = sc.build_model()?;
    let x0 = sc.initial_state()?;
    let opts = sc.integrator_options()?;
    let eta = sc.eta();
    let hash = scenario_hash(&sc)?;

    let traj = integrate_with_equilibrium_events(&model, &x0, &opts, eta)?;
    let min_episode = sc.analysis.min_episode.unwrap_or(0.5);
    let itinerary = extract_itinerary_with(&traj, min_episode)?;
    let scheme = sc.label_scheme(&model)?;
    let threshold = sc.analysis.interior_threshold.unwrap_or(0.05);
    let mut itinerary = classify_edges(&itinerary, &traj, &model, scheme, threshold)?;
    itinerary.source = Some("trajectory.csv".to_string());

    let mut dir = OutputDir::new(out_dir.clone())?;
    let run = (|| -> Result<()> {
        dir.write("scenario.toml", sc.to_toml()?.as_bytes())?;
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf)?;
        dir.write("trajectory.csv", &buf)?;
        if sc.analysis.itinerary.unwrap_or(true) {
            let mut buf = Vec::new();
            write_itinerary_csv(&itinerary, &mut buf)?;
            dir.write("itinerary.csv", &buf)?;
        }
        if model.dimension() == 5 && sc.analysis.pentacle.unwrap_or(true) {
            let mut buf = Vec::new();
            write_pentacle_csv(&traj, &mut buf)?;
            dir.write("pentacle.csv", &buf)?;
        }
        let mut buf = Vec::new();
        write_events_json(&traj, &mut buf)?;
        dir.write("events.json", &buf)?;

        let mut meta = BTreeMap::new();
        meta.insert("scenario_sha256".to_string(), serde_json::json!(hash));
        meta.insert("model_dimension".to_string(), serde_json::json!(model.dimension()));
        meta.insert("t_max".to_string(), serde_json::json!(opts.t_max));
        meta.insert("eta".to_string(), serde_json::json!(eta));
        meta.insert("termination".to_string(), serde_json::json!(traj.termination));
        meta.insert("states".to_string(), serde_json::json!(traj.len()));
        meta.insert(
            "lv_time_rescale_factor".to_string(),
            serde_json::json!(2.0),
        );
        if let Ok(ratios) = residence_ratios(&itinerary) {
            meta.insert("residence_ratios".to_string(), serde_json::json!(ratios));
        }
        dir.write("run.json", serde_json::to_string_pretty(&meta).unwrap().as_bytes())?;

        let want_plots = plots_flag || sc.output.plots.unwrap_or(false);
        if want_plots {
            let log_scale = if linear {
                false
            } else {
                log || sc.output.scale.as_deref() != Some("linear")
            };
            let provenance = format!("scenario sha256 {hash}");
            let series: Vec<svg::Series> = (0..model.dimension())
                .map(|j| svg::Series {
                    label: format!("x{}", j + 1),
                    points: traj.iter_states().map(|(t, x)| (t, x[j])).collect(),
                })
                .collect();
            let ylabel = if log_scale { "coordinate (log)" } else { "coordinate" };
            let plot = svg::line_plot(&series, "t", ylabel, log_scale, &provenance);
            dir.write("plots/timeseries.svg", plot.as_bytes())?;
            if model.dimension() == 5 {
                let pts: Vec<(f64, f64)> = traj
                    .iter_states()
                    .filter(|(t, _)| *t >= 500.0)
                    .map(|(_, x)| hetnet::analysis::pentacle_project(x).unwrap())
                    .collect();
                let plot = svg::pentacle_plot(&pts, &provenance);
                dir.write("plots/pentacle.svg", plot.as_bytes())?;
            }
        }
        Ok(())
    })();
    if let Err(e) = run {
        dir.cleanup();
        return Err(e);
    }
    let visits: Vec<String> = itinerary
        .episodes
        .iter()
        .map(|e| e.equilibrium.to_string())
        .collect();
    let labels: Vec<&str> = itinerary
        .edge_labels
        .iter()
        .map(|l| edge_label_str(*l))
        .collect();
    println!(
        "wrote {} ({} states, {} episodes)",
        out_dir.display(),
        traj.len(),
        itinerary.episodes.len()
    );
    println!("itinerary: {}", visits.join(" "));
    if scheme == LabelScheme::RpsslAb {
        println!("edges: {}", labels.join(""));
    }
    Ok(ExitCode::SUCCESS)
}

pub fn cmd_indices(
    preset: Option<String>,
    scenario: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<ExitCode> {
    let sc = load_scenario(scenario, preset)?;
    let id = sc
        .model
        .preset
        .clone()
        .ok_or_else(|| Error::InvalidConfig("indices needs a preset id".into()))?;
    let preset = find_preset(&id)?;
    match preset.params {
        PresetParams::Ks(p) => {
            let report = predict_ks_regime(&p, PRESET_RESONANCE_TOL)?;
            println!("preset {id}: {}", report.regime.heading());
            if let Some(dir) = report.switching {
                println!("switching: {dir:?}");
            }
            for (k, v) in &report.indices.rho_values {
                let flag = if report.indices.resonance_flags[k] {
                    "  [resonance]"
                } else {
                    ""
                };
                println!("{k} = {v:.6}{flag}");
            }
            for (k, v) in &report.indices.nu_values {
                let sign = if *v < 0.0 { "  [negative]" } else { "" };
                println!("{k} = {v:.6}{sign}");
            }
            if let Some(path) = out {
                let full = IndicesReport {
                    preset: Some(id),
                    report,
                    t_parameter_mapping: "t34 = c34, t43 = c43 (subscript-preserving)".into(),
                    lv_time_rescale_factor: 2.0,
                };
                fs::write(&path, serde_json::to_string_pretty(&full).unwrap())?;
                println!("wrote {}", path.display());
            }
        }
        PresetParams::Gh(p) => {
            let rho = ks_rho_123(&hetnet::models::KsParams {
                e12: p.e12,
                c13: p.c13,
                c14: 1.0,
                c21: p.c21,
                e23: p.e23,
                e24: 1.0,
                e31: p.e31,
                c32: p.c32,
                t43: 1.0,
                e41: 1.0,
                c42: 1.0,
                t34: 1.0,
            });
            println!("preset {id}: rho_123 = {rho:.6}");
            println!("{}", regime_summary(&preset.params));
        }
        PresetParams::Rpssl(_) => {
            println!("preset {id}: {}", regime_summary(&preset.params));
            println!("note: {}", preset.regime_note);
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_classify(
    scenario: Option<PathBuf>,
    preset: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    delta: Option<String>,
    epsilon: Option<f64>,
    tmax: Option<f64>,
    samples: Option<usize>,
) -> Result<ExitCode> {
    let mut sc = load_scenario(scenario, preset)?;
    if sc.visibility.is_none() {
        // Default targets per system.
        let targets = match sc.build_model()?.dimension() {
            3 => vec!["cycle:1,2,3".to_string()],
            4 => vec![
                "cycle:1,2,3".to_string(),
                "cycle:1,2,4".to_string(),
                "network".to_string(),
            ],
            _ => vec!["network".to_string()],
        };
        sc.visibility = Some(crate::scenario::VisibilitySpec {
            targets,
            ..Default::default()
        });
    }
    {
        let vis = sc.visibility.as_mut().unwrap();
        if let Some(s) = seed {
            vis.seed = Some(s);
        }
        if let Some(d) = delta {
            let ladder: std::result::Result<Vec<f64>, _> =
                d.split(',').map(|tok| tok.trim().parse::<f64>()).collect();
            vis.delta_ladder = Some(ladder.map_err(|e| {
                Error::InvalidConfig(format!("bad --delta list '{d}': {e}"))
            })?);
        }
        if let Some(e) = epsilon {
            vis.epsilon = Some(e);
        }
        if let Some(t) = tmax {
            vis.t_max = Some(t);
        }
        if let Some(k) = samples {
            vis.samples_per_delta = Some(k);
        }
    }
    let model = sc.build_model()?;
    let cfg = sc.visibility_config()?.expect("visibility spec was set");
    let hash = scenario_hash(&sc)?;
    let edges = match sc.preset()? {
        Some(p) => p.network_edges(),
        None => {
            return Err(Error::InvalidConfig(
                "classify currently needs a preset model (network edges are preset-defined)"
                    .into(),
            ))
        }
    };
    let geometry = build_network_geometry(&model, &edges, DEFAULT_SEED_OFFSET)?;

    let specs = sc.visibility.as_ref().unwrap().targets.clone();
    let mut verdicts = Vec::new();
    let mut failures = Vec::new();
    for spec in &specs {
        let (name, target) = parse_target(spec, &geometry)?;
        match visibility_verdict(&model, &geometry, &target, &name, &cfg) {
            Ok(v) => {
                println!("{}", v.one_line());
                println!(
                    "    stability: lyapunov {} quasi-asymptotic {} f.a.s. {}",
                    v.stability.lyapunov_consistent,
                    v.stability.quasi_asymptotic_consistent,
                    v.stability.fas_consistent
                );
                verdicts.push(v);
            }
            Err(e) => {
                eprintln!("{spec}: failed: {e}");
                failures.push(spec.clone());
            }
        }
    }
    if !verdicts.is_empty() {
        let out_dir = out
            .or_else(|| sc.output.directory.clone().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("classify-out"));
        let mut dir = OutputDir::new(out_dir.clone())?;
        let report = serde_json::json!({
            "scenario_sha256": hash,
            "seed": cfg.rng_seed,
            "horizon": cfg.t_max,
            "epsilon": cfg.epsilon,
            "delta_ladder": cfg.delta_ladder,
            "verdicts": verdicts,
            "failed_targets": failures,
        });
        dir.write(
            "verdict.json",
            serde_json::to_string_pretty(&report).unwrap().as_bytes(),
        )?;
        dir.write("scenario.toml", sc.to_toml()?.as_bytes())?;
        println!("wrote {}", out_dir.join("verdict.json").display());
    }
    if verdicts.is_empty() && !failures.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "all {} targets failed",
            failures.len()
        )));
    }
    if !failures.is_empty() {
        println!("{} of {} targets failed", failures.len(), specs.len());
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn read_csv_columns(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::InvalidConfig(format!("{}: empty table", path.display())))?
        .split(',')
        .map(|s| s.to_string())
        .collect();
    let mut columns = vec![Vec::new(); header.len()];
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(Error::InvalidConfig(format!(
                "{}:{}: expected {} fields, found {}",
                path.display(),
                lineno + 2,
                header.len(),
                fields.len()
            )));
        }
        for (c, f) in fields.iter().enumerate() {
            let v: f64 = f.parse().map_err(|_| {
                Error::InvalidConfig(format!(
                    "{}:{}: malformed number '{f}'",
                    path.display(),
                    lineno + 2
                ))
            })?;
            columns[c].push(v);
        }
    }
    Ok((header, columns))
}

pub fn cmd_plot(
    data: PathBuf,
    kind: String,
    log: bool,
    linear: bool,
    out: PathBuf,
) -> Result<ExitCode> {
    let (header, columns) = read_csv_columns(&data)?;
    let provenance = format!("rendered from {}", data.display());
    let svg_text = match kind.as_str() {
        "timeseries" => {
            if header.first().map(|s| s.as_str()) != Some("t") || columns.len() < 2 {
                return Err(Error::InvalidConfig(format!(
                    "{}: not a trajectory table (header {:?})",
                    data.display(),
                    header
                )));
            }
            let log_scale = log || !linear;
            let t = &columns[0];
            let series: Vec<svg::Series> = header
                .iter()
                .enumerate()
                .skip(1)
                .map(|(c, name)| svg::Series {
                    label: name.clone(),
                    points: t.iter().copied().zip(columns[c].iter().copied()).collect(),
                })
                .collect();
            let ylabel = if log_scale { "coordinate (log)" } else { "coordinate" };
            svg::line_plot(&series, "t", ylabel, log_scale, &provenance)
        }
        "pentacle" => {
            if header != ["t", "y1", "y2"] {
                return Err(Error::InvalidConfig(format!(
                    "{}: not a pentacle table (header {:?})",
                    data.display(),
                    header
                )));
            }
            let pts: Vec<(f64, f64)> = columns[1]
                .iter()
                .copied()
                .zip(columns[2].iter().copied())
                .collect();
            svg::pentacle_plot(&pts, &provenance)
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown plot kind '{other}' (use timeseries or pentacle)"
            )))
        }
    };
    fs::write(&out, svg_text)?;
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}
