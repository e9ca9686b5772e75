use approx::assert_relative_eq;
use proptest::prelude::*;

use kfp_core::discretization::{apply_l, CoefficientField, GridField, LatticeBox, TestFunction};
use kfp_core::dyadic::{build_grids, cz_decompose};
use kfp_core::function_spaces::luxemburg;
use kfp_core::sparse::principal_family;
use kfp_core::{OperatorShape, Point};

fn shape(kolmogorov: bool) -> OperatorShape {
    if kolmogorov {
        OperatorShape::kolmogorov()
    } else {
        OperatorShape::parabolic()
    }
}

fn point(sh: &OperatorShape, c: &[f64; 3]) -> Point {
    Point::new(&c[..sh.n()], c[2])
}

fn coord() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-3.0f64..3.0)
}

fn assert_close(a: &Point, b: &Point, scale: f64) {
    assert!(a.euclid_dist(b) <= 1e-10 * (1.0 + scale), "{a:?} vs {b:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn group_law_is_associative(k in any::<bool>(), a in coord(), b in coord(), c in coord()) {
        let sh = shape(k);
        let (a, b, c) = (point(&sh, &a), point(&sh, &b), point(&sh, &c));
        let l = sh.compose(&sh.compose(&a, &b), &c);
        let r = sh.compose(&a, &sh.compose(&b, &c));
        assert_close(&l, &r, l.euclid_dist(&Point::origin()));
    }

    #[test]
    fn inverse_and_identity(k in any::<bool>(), a in coord()) {
        let sh = shape(k);
        let z = point(&sh, &a);
        assert_close(&sh.compose(&z, &sh.invert(&z)), &Point::origin(), 10.0);
        assert_close(&sh.compose(&sh.invert(&z), &z), &Point::origin(), 10.0);
        assert_close(&sh.compose(&z, &Point::origin()), &z, 0.0);
    }

    #[test]
    fn dilation_is_an_automorphism(k in any::<bool>(), a in coord(), b in coord(), r in 0.1f64..10.0) {
        let sh = shape(k);
        let (z, w) = (point(&sh, &a), point(&sh, &b));
        let l = sh.dilate(r, &sh.compose(&z, &w));
        let rr = sh.compose(&sh.dilate(r, &z), &sh.dilate(r, &w));
        assert_close(&l, &rr, l.euclid_dist(&Point::origin()));
    }

    #[test]
    fn norm_is_homogeneous(k in any::<bool>(), a in coord(), r in 0.1f64..10.0) {
        let sh = shape(k);
        let z = point(&sh, &a);
        assert_relative_eq!(sh.norm(&sh.dilate(r, &z)), r * sh.norm(&z), max_relative = 1e-10, epsilon = 1e-12);
    }

    #[test]
    fn quasi_distance_is_symmetric(k in any::<bool>(), a in coord(), b in coord()) {
        let sh = shape(k);
        let (z, w) = (point(&sh, &a), point(&sh, &b));
        assert_relative_eq!(sh.quasi_distance(&z, &w), sh.quasi_distance(&w, &z), max_relative = 1e-12);
    }

    #[test]
    fn luxemburg_of_power_is_lp_norm(v in prop::collection::vec(-5.0f64..5.0, 1..64), p in 1.1f64..4.0, c in 0.01f64..100.0) {
        prop_assume!(v.iter().any(|x| x.abs() > 1e-3));
        let vol = 0.01;
        let lp = (v.iter().map(|x| x.abs().powf(p)).sum::<f64>() * vol).powf(1.0 / p);
        let lux = luxemburg(|_, s| s.powf(p), &v, vol).unwrap();
        assert_relative_eq!(lux, lp, max_relative = 1e-10);
        let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
        let lux_c = luxemburg(|_, s| s.powf(p), &scaled, vol).unwrap();
        assert_relative_eq!(lux_c, c * lux, max_relative = 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn apply_l_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, cx in -0.5f64..0.5, ct in 1.5f64..2.5) {
        let sh = OperatorShape::parabolic();
        let bx = LatticeBox::desk(&sh, 2.0, 4.0, 24);
        let coeff = CoefficientField::from_fn(&bx, 1, 2.0, |q| vec![1.0 + 0.3 * q.x[0].sin()]).unwrap();
        let u = TestFunction::bump(&sh, Point::new(&[cx], ct), 1.0);
        let v = TestFunction::bump(&sh, Point::new(&[-cx], 4.0 - ct), 0.8);
        let sum = TestFunction::Sum(vec![(a, u.clone()), (b, v.clone())]);
        let (lu, _) = apply_l(&sh, &coeff, &u).unwrap();
        let (lv, _) = apply_l(&sh, &coeff, &v).unwrap();
        let (ls, _) = apply_l(&sh, &coeff, &sum).unwrap();
        for k in 0..bx.len() {
            let want = a * lu.values[k] + b * lv.values[k];
            prop_assert!((ls.values[k] - want).abs() <= 1e-10 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn cz_identity_and_principal_sparseness(k in any::<bool>(), seed in 0u64..1000, lam in 0.05f64..2.0) {
        let sh = shape(k);
        let bx = LatticeBox::desk(&sh, 2.0, 4.0, if k { 8 } else { 16 });
        let fam = build_grids(&sh, &bx, 0.5, 1, seed).unwrap();
        let grid = &fam.grids[0];
        let vals: Vec<f64> = (0..bx.len()).map(|i| ((i as u64 * 2654435761 + seed) % 1000) as f64 / 500.0 - 1.0).collect();
        let f = GridField::from_values(&bx, vals, "f").unwrap();
        let cz = cz_decompose(grid, &f, lam);
        prop_assert!(cz.identity_defect(grid, &f) <= 1e-12);
        let pf = principal_family(grid, 0, 0, &f, 2.0);
        prop_assert!(pf.check(bx.len()).passed(pf.eta));
    }
}
