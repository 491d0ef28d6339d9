//! File exports: CSV data tables and JSON reports.
//!
//! Tables are comma-separated with fixed headers and full double
//! precision (17 significant digits), so re-running a scenario overwrites
//! outputs byte-identically. Reports are JSON.

use std::io::Write;

use crate::analysis::{pentacle_project, EdgeLabel, Itinerary, KsRegimeReport};
use crate::error::{Error, Result};
use crate::integrator::Trajectory;

/// Full-precision float formatting shared by every table.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// `t,x1,...,xn` with one row per stored state.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut w: W) -> Result<()> {
    let n = traj.dimension();
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=n).map(|j| format!("x{j}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for (t, x) in traj.iter_states() {
        let mut row = Vec::with_capacity(n + 1);
        row.push(fmt_f64(t));
        row.extend(x.iter().map(|v| fmt_f64(*v)));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn edge_label_str(label: EdgeLabel) -> &'static str {
    match label {
        EdgeLabel::A => "A",
        EdgeLabel::B => "B",
        EdgeLabel::Interior => "Interior",
        EdgeLabel::Other => "Other",
    }
}

/// `episode_index,equilibrium,t_enter,t_exit,edge_label`; the label on a
/// row describes the transition leaving that episode (empty on the last).
pub fn write_itinerary_csv<W: Write>(it: &Itinerary, mut w: W) -> Result<()> {
    writeln!(w, "episode_index,equilibrium,t_enter,t_exit,edge_label")?;
    for (i, ep) in it.episodes.iter().enumerate() {
        let label = it
            .edge_labels
            .get(i)
            .map(|l| edge_label_str(*l))
            .unwrap_or("");
        writeln!(
            w,
            "{},{},{},{},{}",
            i,
            ep.equilibrium,
            fmt_f64(ep.t_enter),
            fmt_f64(ep.t_exit),
            label
        )?;
    }
    Ok(())
}

/// `t,y1,y2` pentacle projection of a five-dimensional trajectory.
pub fn write_pentacle_csv<W: Write>(traj: &Trajectory, mut w: W) -> Result<()> {
    if traj.dimension() != 5 {
        return Err(Error::WrongDimension {
            expected: 5,
            found: traj.dimension(),
        });
    }
    writeln!(w, "t,y1,y2")?;
    for (t, x) in traj.iter_states() {
        let (y1, y2) = pentacle_project(x)?;
        writeln!(w, "{},{},{}", fmt_f64(t), fmt_f64(y1), fmt_f64(y2))?;
    }
    Ok(())
}

/// Machine-readable event log.
pub fn write_events_json<W: Write>(traj: &Trajectory, mut w: W) -> Result<()> {
    let json = serde_json::to_string_pretty(&traj.events)
        .map_err(|e| Error::InvalidConfig(format!("event serialization failed: {e}")))?;
    writeln!(w, "{json}")?;
    Ok(())
}

/// Indices report carrying the convention notes alongside the numbers.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct IndicesReport {
    pub preset: Option<String>,
    pub report: KsRegimeReport,
    /// The shipped parameter tables quote c34/c43; the model couplings
    /// use them subscript-preserving.
    pub t_parameter_mapping: String,
    /// Lotka-Volterra solutions run at half speed: y(2t) = x(t)^2.
    pub lv_time_rescale_factor: f64,
}

pub fn write_json_report<W: Write, T: serde::Serialize>(value: &T, mut w: W) -> Result<()> {
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidConfig(format!("report serialization failed: {e}")))?;
    writeln!(w, "{json}")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{integrate_with_equilibrium_events, IntegratorOptions};
    use crate::models::make_gh_model;
    use crate::presets;

    #[test]
    fn trajectory_csv_round_trips_full_precision() {
        let m = make_gh_model(&presets::GH_TABLE).unwrap();
        let traj = integrate_with_equilibrium_events(
            &m,
            &[0.7, 0.1, 0.05],
            &IntegratorOptions {
                t_max: 5.0,
                ..Default::default()
            },
            0.2,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,x1,x2,x3");
        let first = lines.next().unwrap();
        let fields: Vec<f64> = first.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(fields, vec![0.0, 0.7, 0.1, 0.05]);
        // Parse every row back and compare bit-exactly.
        for (row, (t, x)) in text.lines().skip(1).zip(traj.iter_states()) {
            let vals: Vec<f64> = row.split(',').map(|s| s.parse().unwrap()).collect();
            assert_eq!(vals[0].to_bits(), t.to_bits());
            for (a, b) in vals[1..].iter().zip(x) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn pentacle_csv_requires_dimension_five() {
        let m = make_gh_model(&presets::GH_TABLE).unwrap();
        let traj = crate::integrator::integrate(
            &m,
            &[0.7, 0.1, 0.05],
            &IntegratorOptions {
                t_max: 1.0,
                ..Default::default()
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        assert!(matches!(
            write_pentacle_csv(&traj, &mut buf),
            Err(Error::WrongDimension { .. })
        ));
    }
}
