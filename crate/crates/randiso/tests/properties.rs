//! Property-based invariants: the shift group structure of the noise
//! model, reproducibility, and the Hausdorff semi-distance axioms.

use proptest::prelude::*;
use randiso::attractor::hausdorff_semidistance;
use randiso::flow::{flow, Scheme};
use randiso::model::make_model;
use randiso::noise::NoisePath;
use std::collections::BTreeMap;

fn grid_times(dt: f64, lo: i64, hi: i64) -> impl Strategy<Value = f64> {
    (lo..=hi).prop_map(move |k| k as f64 * dt)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shift_composition_law_exact_on_grid(
        seed in 0u64..1000,
        a in grid_times(0.01, -200, 200),
        b in grid_times(0.01, -200, 200),
        s in grid_times(0.01, -100, 100),
    ) {
        let path = NoisePath::<f64>::sample(seed, 0.01, 8.0, 2).unwrap();
        let lhs = path.shift(a).and_then(|p| p.shift(b));
        let rhs = path.shift(a + b);
        match (lhs, rhs) {
            (Ok(l), Ok(r)) => {
                // common valid window only
                if let (Ok(x), Ok(y)) = (l.evaluate(s), r.evaluate(s)) {
                    prop_assert_eq!(x, y);
                }
                // re-basing: the shifted path vanishes at its origin
                prop_assert_eq!(l.evaluate(0.0).unwrap()[0], 0.0);
            }
            // both routes must agree on whether the window is exhausted
            (Err(_), Err(_)) => {}
            (l, r) => prop_assert!(false, "asymmetric window behaviour: {:?} vs {:?}", l.is_ok(), r.is_ok()),
        }
    }

    #[test]
    fn sampling_is_pure(seed in 0u64..500) {
        let a = NoisePath::<f64>::sample(seed, 0.01, 2.0, 2).unwrap();
        let b = NoisePath::<f64>::sample(seed, 0.01, 2.0, 2).unwrap();
        prop_assert_eq!(a.raw_increments(0), b.raw_increments(0));
        prop_assert_eq!(a.raw_increments(1), b.raw_increments(1));
    }

    #[test]
    fn flow_is_deterministic_and_cocyclic(
        seed in 0u64..200,
        x in -1.4f64..1.4,
        y in 0.4f64..1.4,
        split in 1usize..19,
    ) {
        let params: BTreeMap<String, f64> = [("sigma".to_string(), 0.3)].into();
        let e = make_model::<f64>("hopf_linear", &params).unwrap();
        let spec = e.planar_spec().unwrap();
        let dt = 1e-2;
        let path = NoisePath::<f64>::sample(seed, dt, 4.0, 1).unwrap();
        let total = 0.2;
        let t_split = split as f64 * 0.01;

        let once = flow(spec, &path, 0.0, total, [x, y], dt, Scheme::HeunStratonovich, None)
            .unwrap()
            .final_state();
        let again = flow(spec, &path, 0.0, total, [x, y], dt, Scheme::HeunStratonovich, None)
            .unwrap()
            .final_state();
        prop_assert_eq!(once, again);

        let mid = flow(spec, &path, 0.0, t_split, [x, y], dt, Scheme::HeunStratonovich, None)
            .unwrap()
            .final_state();
        let rest = flow(
            spec,
            &path.shift(t_split).unwrap(),
            0.0,
            total - t_split,
            mid,
            dt,
            Scheme::HeunStratonovich,
            None,
        )
        .unwrap()
        .final_state();
        prop_assert!((once[0] - rest[0]).abs() <= 1e-10);
        prop_assert!((once[1] - rest[1]).abs() <= 1e-10);
    }

    #[test]
    fn hausdorff_semidistance_axioms(
        pts_a in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..12),
        pts_b in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..12),
    ) {
        let a: Vec<[f64; 2]> = pts_a.iter().map(|&(x, y)| [x, y]).collect();
        let b: Vec<[f64; 2]> = pts_b.iter().map(|&(x, y)| [x, y]).collect();
        let dab = hausdorff_semidistance(&a, &b).unwrap();
        let dba = hausdorff_semidistance(&b, &a).unwrap();
        prop_assert!(dab >= 0.0 && dba >= 0.0);
        prop_assert_eq!(hausdorff_semidistance(&a, &a).unwrap(), 0.0);
        // semi-distance vanishes when the first set is a subset of the second
        let mut ab = a.clone();
        ab.extend_from_slice(&b);
        prop_assert_eq!(hausdorff_semidistance(&a, &ab).unwrap(), 0.0);
        // triangle inequality through a third set
        let dav = hausdorff_semidistance(&a, &ab).unwrap();
        let dvb = hausdorff_semidistance(&ab, &b).unwrap();
        prop_assert!(dab <= dav + dvb + 1e-12);
    }
}

#[test]
fn generic_core_works_in_f32() {
    // the scalar-generic core is usable at f32 precision end to end
    let params: BTreeMap<String, f64> = [("sigma".to_string(), 0.3)].into();
    let e = make_model::<f32>("hopf_linear", &params).unwrap();
    let path = NoisePath::<f32>::sample(3, 1e-2, 4.0, 1).unwrap();
    let res = flow(
        e.polar_spec().unwrap(),
        &path,
        0.0f32,
        2.0,
        [0.0, 1.2],
        1e-2,
        Scheme::HeunStratonovich,
        Some(20.0),
    )
    .unwrap();
    let f = res.final_state();
    assert!(f[1] > 0.3 && f[1] < 2.0, "radius stayed near the cycle: {f:?}");
}
