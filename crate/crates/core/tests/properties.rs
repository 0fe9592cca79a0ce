//! Property tests for the algebraic invariants: projection geometry, shift
//! and truncation algebra, time-change inversion, Stieltjes linearity, the
//! last-exit decomposition, and accumulator merging.

use proptest::prelude::*;

use penalise_core::funcspace::StepFunction;
use penalise_core::measure::{sample_tilted, Estimate};
use penalise_core::numerics::TiltingConfig;
use penalise_core::paths::{sample_bm, SeedSpec, TimeGrid};
use penalise_core::wiener::{decompose_integral, stieltjes};

fn step_function() -> impl Strategy<Value = StepFunction> {
    (
        proptest::collection::vec(0.05f64..2.0, 1..8),
        proptest::collection::vec(-4.0f64..4.0, 8),
    )
        .prop_map(|(widths, levels)| {
            let mut t = 0.0;
            let pairs: Vec<(f64, f64)> = widths
                .iter()
                .zip(levels)
                .map(|(w, c)| {
                    t += w;
                    (t, c)
                })
                .collect();
            StepFunction::new(pairs).expect("generated breakpoints are increasing")
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_integral_vanishes_and_norm_contracts(f in step_function(), u in 0.2f64..8.0) {
        let p = f.project_bridge(u).unwrap();
        let tol = 1e-12 * (1.0 + f.sup_norm()) * (1.0 + u);
        prop_assert!(p.integral().abs() <= tol);
        let clipped = f.truncate(u).unwrap();
        prop_assert!(p.l2_norm_sq() <= clipped.l2_norm_sq() + tol);
        // Pythagoras: the removed mean carries the rest of the norm.
        let mean_mass = clipped.integral() * clipped.integral() / u;
        prop_assert!((p.l2_norm_sq() + mean_mass - clipped.l2_norm_sq()).abs() <= tol);
        // Idempotence.
        let pp = p.project_bridge(u).unwrap();
        prop_assert!(p.sub(&pp).sup_norm() <= tol);
    }

    #[test]
    fn shift_truncate_algebra(f in step_function(), u in 0.0f64..3.0, extra in 0.0f64..4.0) {
        let t = u + extra;
        let lhs = f.truncate(t).unwrap().shift(u).unwrap();
        let rhs = f.shift(u).unwrap().truncate(t - u).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn time_change_round_trips(f in step_function(), t in 0.0f64..12.0) {
        let v = f.time_change_m(t).unwrap();
        let back = f.time_change_l(v).unwrap();
        prop_assert!((back - t).abs() <= 1e-10 * (1.0 + t));
        // And the other direction.
        let l = f.time_change_l(t).unwrap();
        let forward = f.time_change_m(l).unwrap();
        prop_assert!((forward - t).abs() <= 1e-10 * (1.0 + t));
    }

    #[test]
    fn add_scale_eval_pointwise(f in step_function(), g in step_function(), k in -3.0f64..3.0, s in 0.0f64..12.0) {
        let sum = f.add(&g);
        prop_assert!((sum.eval(s) - (f.eval(s) + g.eval(s))).abs() < 1e-12);
        let scaled = f.scale(k);
        prop_assert!((scaled.eval(s) - k * f.eval(s)).abs() < 1e-12);
    }

    #[test]
    fn stieltjes_linear_in_integrand(f in step_function(), g in step_function(), seed in 0u64..1000) {
        let grid = TimeGrid::uniform(16.0, 0.125).unwrap();
        let path = sample_bm(&grid, SeedSpec::new(777, seed));
        let vf = stieltjes(&f, &path).unwrap().value;
        let vg = stieltjes(&g, &path).unwrap().value;
        let vsum = stieltjes(&f.add(&g), &path).unwrap().value;
        let scale = 1.0 + vf.abs() + vg.abs();
        prop_assert!((vsum - (vf + vg)).abs() <= 1e-11 * scale);
    }

    #[test]
    fn decomposition_adds_up_on_tilted_samples(f in step_function(), stream in 0u64..500) {
        let tilt = TiltingConfig::default_exp();
        let sample = sample_tilted(&tilt, 16.0, 0.0625, SeedSpec::new(31415, stream)).unwrap();
        let d = decompose_integral(&f, &sample).unwrap();
        prop_assert!(d.residual() <= 1e-12, "residual {}", d.residual());
    }

    #[test]
    fn estimate_merge_equals_concatenation(xs in proptest::collection::vec(-50.0f64..50.0, 2..120), split in 0usize..120) {
        let split = split.min(xs.len());
        let mut all = Estimate::new();
        let mut a = Estimate::new();
        let mut b = Estimate::new();
        for (i, &x) in xs.iter().enumerate() {
            all.push(x);
            if i < split { a.push(x) } else { b.push(x) }
        }
        let merged = Estimate::merge(a, b);
        prop_assert_eq!(merged.count(), all.count());
        prop_assert!((merged.mean() - all.mean()).abs() <= 1e-10 * (1.0 + all.mean().abs()));
        let v = all.variance();
        prop_assert!((merged.variance() - v).abs() <= 1e-9 * (1.0 + v.abs()));
        let m4 = all.fourth_central();
        prop_assert!((merged.fourth_central() - m4).abs() <= 1e-8 * (1.0 + m4.abs()));
    }

    #[test]
    fn json_round_trip(f in step_function()) {
        let text = serde_json::to_string(&f).unwrap();
        let back: StepFunction = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, f);
    }
}
