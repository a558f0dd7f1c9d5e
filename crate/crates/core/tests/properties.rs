use proptest::prelude::*;

use respondyn_core::maps::{critical_orbit, CircleMap, MapSpec, TentMap, VectorField};
use respondyn_core::response::{horizontality_index, sigma_series};
use respondyn_core::transfer::{build_circle_operator, build_ulam_operator, density_of, Entries, GridFunction, Method};

fn circle_map() -> impl Strategy<Value = MapSpec> {
    (2u32..=4, -0.08f64..0.08, -0.08f64..0.08)
        .prop_map(|(d, s, c)| CircleMap::new(d, vec![s], vec![c]).unwrap().into())
}

fn tent_map() -> impl Strategy<Value = MapSpec> {
    (0.3f64..=1.0).prop_map(|a| TentMap::new(a, 0.0).unwrap().into())
}

fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn circle_preimages_solve_the_equation(map in circle_map(), y in 0.0f64..1.0) {
        let pre = map.inverse_branches(y).unwrap();
        prop_assert_eq!(pre.len(), map.degree());
        for p in pre {
            prop_assert!(circle_distance(map.eval_raw(p.x), y) <= 1e-12);
        }
    }

    #[test]
    fn tent_preimages_solve_the_equation(map in tent_map(), s in 0.0f64..1.0) {
        let top = map.eval_raw(map.critical_point().unwrap());
        let y = -1.0 + s * (top + 1.0);
        for p in map.inverse_branches(y).unwrap() {
            prop_assert!((map.eval_raw(p.x) - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn critical_orbit_prefixes_agree(map in tent_map(), m in 1usize..40, extra in 1usize..40) {
        let short = critical_orbit(&map, m).unwrap();
        let long = critical_orbit(&map, m + extra).unwrap();
        prop_assert_eq!(&long[..m], &short[..]);
        let c = map.critical_point().unwrap();
        prop_assert_eq!(short[0], map.eval_raw(c));
    }

    #[test]
    fn horizontality_is_linear(
        map in tent_map(),
        p in prop::collection::vec(-1.0f64..1.0, 1..5),
        q in prop::collection::vec(-1.0f64..1.0, 1..5),
        s in -2.0f64..2.0,
        t in -2.0f64..2.0,
    ) {
        let len = p.len().max(q.len());
        let pad = |v: &[f64]| { let mut v = v.to_vec(); v.resize(len, 0.0); v };
        let (p, q) = (pad(&p), pad(&q));
        let combo: Vec<f64> = p.iter().zip(&q).map(|(u, v)| s * u + t * v).collect();
        let j = |c: Vec<f64>| horizontality_index(&map, &VectorField::poly(c), 60).unwrap().value;
        let defect = j(combo) - s * j(p) - t * j(q);
        prop_assert!(defect.abs() <= 1e-12, "defect {defect}");
    }

    #[test]
    fn fourier_operator_conserves_mass(
        map in circle_map(),
        c0 in -1.0f64..1.0,
        sin in prop::collection::vec(-1.0f64..1.0, 0..10),
        cos in prop::collection::vec(-1.0f64..1.0, 0..10),
    ) {
        let op = build_circle_operator(&map, 32).unwrap();
        let phi = GridFunction::from_trig(&VectorField::trig_with_constant(c0, sin, cos), 32).unwrap();
        let image = op.apply(&phi).unwrap();
        prop_assert!((image.integral() - phi.integral()).abs() <= 1e-10);
    }

    #[test]
    fn ulam_matrix_is_stochastic(map in tent_map(), cells in 16usize..400) {
        let op = build_ulam_operator(&map, cells).unwrap();
        let Entries::Sparse(rows) = op.entries() else { panic!("Ulam operators are sparse") };
        for i in 0..cells {
            let mut total = 0.0;
            for (_, v) in rows.row(i) {
                prop_assert!(v >= 0.0);
                total += v;
            }
            prop_assert!((total - 1.0).abs() <= 1e-12, "row {i} sums to {total}");
        }
    }

    #[test]
    fn ulam_density_is_a_probability(map in tent_map()) {
        let rho = density_of(&map, Method::Ulam, 512).unwrap();
        let GridFunction::Cells { values, .. } = rho.function() else { panic!() };
        prop_assert!(values.iter().all(|&v| v >= -1e-12));
        prop_assert!((rho.function().integral() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn silver_sigma_matches_orbit_oracle(coeffs in prop::collection::vec(-1.0f64..1.0, 1..5)) {
        let a = std::f64::consts::SQRT_2 - 1.0;
        let map: MapSpec = TentMap::new(a, 0.0).unwrap().into();
        let phi = VectorField::poly(coeffs);
        let s = sigma_series(&map, &phi, 200).unwrap();
        // c₁ = a, c₂ = −a², then the fixed point a²
        let oracle = [a, -a * a, a * a];
        for (j, &c) in s.coeffs.iter().enumerate() {
            prop_assert!((c - phi.eval(oracle[j.min(2)])).abs() <= 1e-14);
            if j >= 3 {
                prop_assert_eq!(c, s.coeffs[j - 1]);
            }
        }
    }
}
