//! Classify the catalogued cycles and networks and print the verdict
//! table with per-delta fractions.
//!
//! Usage: golden_verdicts [filter] [samples_per_delta]
//!
//!     cargo run --release --example golden_verdicts gh 50
use hetnet::geometry::{build_network_geometry, cycle_target};
use hetnet::presets;
use hetnet::visibility::{visibility_verdict, VisibilityConfig};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let only: Option<&str> = args.get(1).map(|s| s.as_str());
    let k: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(200);
    let cfg = VisibilityConfig {
        samples_per_delta: k,
        rng_seed: 2024,
        ..Default::default()
    };
    let cases: Vec<(&str, &str, Vec<usize>)> = vec![
        ("gh", "gh-cycle", vec![0, 1, 2]),
        ("gh-resonance", "gh-cycle", vec![0, 1, 2]),
        ("ks-a", "ks-123", vec![0, 1, 2]),
        ("ks-a", "ks-124", vec![0, 1, 3]),
        ("ks-a", "ks-network", vec![]),
        ("ks-b", "ks-124", vec![0, 1, 3]),
        ("ks-b", "ks-123", vec![0, 1, 2]),
        ("ks-c", "ks-123", vec![0, 1, 2]),
        ("ks-c", "ks-124", vec![0, 1, 3]),
        ("ks-d", "ks-123", vec![0, 1, 2]),
        ("ks-d", "ks-124", vec![0, 1, 3]),
    ];
    for (preset_id, name, axes) in cases {
        if let Some(o) = only {
            if !format!("{preset_id}/{name}").contains(o) {
                continue;
            }
        }
        let t0 = Instant::now();
        let preset = presets::find_preset(preset_id).unwrap();
        let m = preset.model();
        let g = build_network_geometry(&m, &preset.network_edges(), 1e-6).unwrap();
        let target = if axes.is_empty() {
            g.element_ids()
        } else {
            cycle_target(&axes)
        };
        let v = visibility_verdict(&m, &g, &target, name, &cfg).unwrap();
        println!(
            "{preset_id:>12} {name:<11} -> {:?}/{:?}  [{:.1}s]",
            v.mode,
            v.prefix,
            t0.elapsed().as_secs_f64()
        );
        for f in &v.fraction_per_delta {
            println!(
                "        delta {:.0e}: a {:.3} l {:.3} q {:.3} v {:.3} stay {:.3} conv {:.3}",
                f.delta,
                f.asymptotically_visible,
                f.lyapunov_visible,
                f.quasi_visible,
                f.visible,
                f.stayed,
                f.converged
            );
        }
        println!(
            "        stability: lyap {} qas {} fas {} (stay {:.2} conv {:.2} both {:.2})",
            v.stability.lyapunov_consistent,
            v.stability.quasi_asymptotic_consistent,
            v.stability.fas_consistent,
            v.stability.stay_fraction,
            v.stability.converge_fraction,
            v.stability.converge_and_stay_fraction
        );
    }
}
