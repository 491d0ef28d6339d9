//! Property suites for the model family: reflection equivariance,
//! invariant hyperplanes, eigenvalue/finite-difference agreement, and the
//! Lotka-Volterra time-rescaling correspondence.

use proptest::prelude::*;

use hetnet::integrator::{integrate, IntegratorOptions};
use hetnet::models::{
    make_generic_model, make_gh_model, make_ks_model, NetworkModel, Representation,
};
use hetnet::presets;

fn coupling_matrix(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(
        proptest::collection::vec(-2.0f64..2.0, n),
        n,
    )
    .prop_map(move |mut a| {
        for (k, row) in a.iter_mut().enumerate() {
            row[k] = 0.0;
        }
        a
    })
}

fn state(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.2f64..1.2, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// f commutes with every single-coordinate sign flip.
    #[test]
    fn reflection_equivariance(a in coupling_matrix(4), x in state(4), flip in 0usize..4) {
        let m = make_generic_model(4, &a, Representation::EquivariantCubic, false).unwrap();
        let fx = m.vector_field(&x).unwrap();
        let mut xs = x.clone();
        xs[flip] = -xs[flip];
        let fxs = m.vector_field(&xs).unwrap();
        for j in 0..4 {
            let expect = if j == flip { -fx[j] } else { fx[j] };
            prop_assert!((fxs[j] - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
        }
    }

    /// Component j of the field vanishes exactly on the hyperplane x_j = 0.
    #[test]
    fn invariant_hyperplanes(a in coupling_matrix(4), x in state(4), zero_at in 0usize..4) {
        let m = make_generic_model(4, &a, Representation::EquivariantCubic, false).unwrap();
        let mut x = x;
        x[zero_at] = 0.0;
        let f = m.vector_field(&x).unwrap();
        prop_assert_eq!(f[zero_at], 0.0);
    }

    /// Components starting exactly at zero stay exactly zero along
    /// integrated trajectories, in both charts.
    #[test]
    fn exact_zero_preservation(
        a in coupling_matrix(4),
        mut x in proptest::collection::vec(0.05f64..0.9, 4),
        zero_at in 0usize..4,
        log_mode in proptest::bool::ANY,
    ) {
        let m = make_generic_model(4, &a, Representation::EquivariantCubic, true).unwrap();
        x[zero_at] = 0.0;
        let opts = IntegratorOptions {
            t_max: 3.0,
            log_mode,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            ..Default::default()
        };
        let traj = integrate(&m, &x, &opts).unwrap();
        for (_, s) in traj.iter_states() {
            prop_assert_eq!(s[zero_at], 0.0);
        }
    }
}

/// Central finite differences of the vector field at each axis
/// equilibrium match the analytic eigenvalue table to 1e-6 relative.
#[test]
fn jacobian_matches_finite_differences() {
    let models: Vec<NetworkModel> = vec![
        make_gh_model(&presets::GH_TABLE).unwrap(),
        make_ks_model(&presets::KS_B).unwrap(),
        presets::find_preset("rpssl-a").unwrap().model(),
        make_gh_model(&presets::GH_TABLE)
            .unwrap()
            .to_lotka_volterra()
            .unwrap(),
    ];
    let h = 1e-6;
    for m in &models {
        let n = m.dimension();
        for eq in m.equilibria() {
            if eq.id.negative {
                continue;
            }
            let eigs = m.jacobian_eigenvalues_at(eq.id.axis).unwrap();
            for entry in eigs {
                let k = entry.direction;
                let mut xp = eq.coordinates.clone();
                let mut xm = eq.coordinates.clone();
                xp[k] += h;
                xm[k] -= h;
                // Keep LV inputs inside the orthant.
                if m.orthant_restricted() && xm[k] < 0.0 {
                    continue;
                }
                let fp = m.vector_field(&xp).unwrap();
                let fm = m.vector_field(&xm).unwrap();
                let fd = (fp[k] - fm[k]) / (2.0 * h);
                let scale = entry.eigenvalue.abs().max(1.0);
                assert!(
                    (fd - entry.eigenvalue).abs() <= 1e-6 * scale,
                    "model dim {n} at {}: direction {k} fd {fd} vs analytic {}",
                    eq.id,
                    entry.eigenvalue
                );
            }
        }
    }
}

/// The LV image runs at half speed: y(2t) = x(t)^2 componentwise, within
/// ten times the integration tolerance.
#[test]
fn lotka_volterra_time_rescaling_correspondence() {
    let cubic = make_gh_model(&presets::GH_TABLE).unwrap();
    let lv = cubic.to_lotka_volterra().unwrap();
    let rel = 1e-10;
    for x0 in [[0.7, 0.1, 0.05], [0.5, 0.45, 0.3], [0.2, 0.9, 0.3]] {
        let t_half = 20.0;
        let cub_opts = IntegratorOptions {
            t_max: t_half,
            rel_tol: rel,
            abs_tol: 1e-12,
            ..Default::default()
        };
        let ct = integrate(&cubic, &x0, &cub_opts).unwrap();
        let y0: Vec<f64> = x0.iter().map(|v| v * v).collect();
        let lv_opts = IntegratorOptions {
            t_max: 2.0 * t_half,
            rel_tol: rel,
            abs_tol: 1e-12,
            ..Default::default()
        };
        let lt = integrate(&lv, &y0, &lv_opts).unwrap();
        let xe = ct.last_state();
        let ye = lt.last_state();
        for j in 0..3 {
            let diff = (ye[j] - xe[j] * xe[j]).abs();
            assert!(
                diff <= 10.0 * rel + 1e-9,
                "x0 {x0:?} component {j}: y(2T) = {} vs x(T)^2 = {}",
                ye[j],
                xe[j] * xe[j]
            );
        }
    }
}

/// Sampled along a trajectory rather than only at the endpoint.
#[test]
fn lv_correspondence_holds_along_the_path() {
    let cubic = make_gh_model(&presets::GH_TABLE).unwrap();
    let lv = cubic.to_lotka_volterra().unwrap();
    let x0 = [0.6, 0.3, 0.2];
    let opts = IntegratorOptions {
        t_max: 12.0,
        rel_tol: 1e-11,
        abs_tol: 1e-13,
        ..Default::default()
    };
    let ct = integrate(&cubic, &x0, &opts).unwrap();
    // Integrate LV to each doubled checkpoint and compare.
    for frac in [0.25, 0.5, 0.75, 1.0] {
        let t = 12.0 * frac;
        let idx = ct.times.partition_point(|u| *u < t) - 1;
        let (tc, xc) = (ct.times[idx], ct.state(idx).to_vec());
        let y0: Vec<f64> = x0.iter().map(|v| v * v).collect();
        let lt = integrate(
            &lv,
            &y0,
            &IntegratorOptions {
                t_max: 2.0 * tc,
                rel_tol: 1e-11,
                abs_tol: 1e-13,
                ..Default::default()
            },
        )
        .unwrap();
        let ye = lt.last_state();
        for j in 0..3 {
            assert!(
                (ye[j] - xc[j] * xc[j]).abs() < 1e-8,
                "t = {tc}: LV {} vs squared cubic {}",
                ye[j],
                xc[j] * xc[j]
            );
        }
    }
}
