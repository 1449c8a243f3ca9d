use corrdyn::algebra::{sylvester_determinant, BiPoly, UniPoly};
use corrdyn::cli::{Config, PointInput};
use corrdyn::correspondence::{compose, Correspondence};
use corrdyn::measures::{dual_lip_distance, pair, Atom, CloudMeta, PointCloudMeasure, TestDictionary};
use corrdyn::{NumericPolicy, SpherePoint};
use num_complex::Complex64;
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| Complex64::new(a, b))
}

fn bipoly(dx: usize, dy: usize) -> impl Strategy<Value = BiPoly> {
    prop::collection::vec(complex(), (dx + 1) * (dy + 1)).prop_map(move |c| BiPoly::new(dx, dy, c).unwrap())
}

fn point() -> impl Strategy<Value = SpherePoint> {
    (-1.0..1.0f64, 0.0..std::f64::consts::TAU).prop_map(|(z, t)| {
        let s = (1.0 - z * z).sqrt();
        SpherePoint::from_unit_vector([s * t.cos(), s * t.sin(), z])
    })
}

fn cloud(max: usize) -> impl Strategy<Value = PointCloudMeasure> {
    prop::collection::vec((point(), 0.01..1.0f64), 1..max).prop_map(|v| {
        let atoms = v.into_iter().map(|(point, weight)| Atom { point, weight }).collect();
        PointCloudMeasure::normalized(atoms, CloudMeta::default()).unwrap()
    })
}

fn dict() -> &'static TestDictionary {
    static D: std::sync::OnceLock<TestDictionary> = std::sync::OnceLock::new();
    D.get_or_init(|| TestDictionary::harmonics(4).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sylvester_matches_root_product(
        roots in prop::collection::vec(complex(), 1..4),
        lead in complex(),
        q in prop::collection::vec(complex(), 2..5),
    ) {
        prop_assume!(lead.norm() > 0.1);
        let p = UniPoly::from_roots(&roots).scaled(lead);
        let expected = roots.iter().fold(lead.powu((q.len() - 1) as u32), |acc, r| acc * UniPoly::new(q.clone()).eval(*r));
        let got = sylvester_determinant(p.coeffs(), &q);
        prop_assert!((got - expected).norm() <= 1e-10 * (1.0 + expected.norm()), "{got} vs {expected}");
    }

    #[test]
    fn common_root_kills_the_resultant(r in complex(), a in prop::collection::vec(complex(), 2..4), b in prop::collection::vec(complex(), 2..4)) {
        let lin = UniPoly::from_roots(&[r]);
        let p = lin.mul(&UniPoly::new(a));
        let q = lin.mul(&UniPoly::new(b));
        prop_assume!(p.degree() == Some(p.coeffs().len() - 1) && q.degree().is_some());
        let scale = p.max_modulus().powi(q.coeffs().len() as i32 - 1) * q.max_modulus().powi(p.coeffs().len() as i32 - 1);
        prop_assert!(sylvester_determinant(p.coeffs(), q.coeffs()).norm() <= 1e-9 * scale.max(1.0));
    }

    #[test]
    fn composition_multiplies_degrees(p in bipoly(1, 2), q in bipoly(2, 1)) {
        let policy = NumericPolicy::default();
        let (Ok(f), Ok(g)) = (Correspondence::from_bipoly(&p, &policy), Correspondence::from_bipoly(&q, &policy)) else {
            return Ok(());
        };
        let h = compose(&f, &g, &policy).unwrap();
        prop_assert_eq!((h.d1(), h.d2()), (f.d1() * g.d1(), f.d2() * g.d2()));
    }

    #[test]
    fn composed_graph_contains_two_step_paths(p in bipoly(2, 2), q in bipoly(2, 2), x in point()) {
        let policy = NumericPolicy::default();
        let (Ok(f), Ok(g)) = (Correspondence::from_bipoly(&p, &policy), Correspondence::from_bipoly(&q, &policy)) else {
            return Ok(());
        };
        let h = compose(&f, &g, &policy).unwrap();
        for (y, _) in g.images(&x, &policy).unwrap() {
            for (z, _) in f.images(&y, &policy).unwrap() {
                prop_assert!(h.residual(&x, &z) < 1e-7, "{}", h.residual(&x, &z));
            }
        }
    }

    #[test]
    fn adjoint_is_an_involution(p in bipoly(2, 3)) {
        let policy = NumericPolicy::default();
        if let Ok(f) = Correspondence::from_bipoly(&p, &policy) {
            let g = f.adjoint();
            prop_assert_eq!((g.d1(), g.d2()), (f.d2(), f.d1()));
            let back = g.adjoint();
            prop_assert_eq!(back.poly(), f.poly());
        }
    }

    #[test]
    fn chordal_distance_is_a_bounded_metric(a in point(), b in point(), c in point()) {
        let (ab, bc, ac) = (a.chordal(&b), b.chordal(&c), a.chordal(&c));
        prop_assert!((ab - b.chordal(&a)).abs() < 1e-15);
        prop_assert!(ab <= 1.0 + 1e-15 && ac <= ab + bc + 1e-12);
        prop_assert!(a.chordal(&a) < 1e-15);
        let v = a.to_unit_vector();
        prop_assert!(SpherePoint::from_unit_vector(v).chordal(&a) < 1e-12);
    }

    #[test]
    fn dual_lip_is_a_pseudometric(mu in cloud(20), nu in cloud(20), rho in cloud(20)) {
        let d = |a: &PointCloudMeasure, b: &PointCloudMeasure| dual_lip_distance(a, b, dict()).unwrap();
        prop_assert!(d(&mu, &mu) == 0.0);
        prop_assert!((d(&mu, &nu) - d(&nu, &mu)).abs() < 1e-14);
        prop_assert!(d(&mu, &rho) <= d(&mu, &nu) + d(&nu, &rho) + 1e-12);
    }

    #[test]
    fn pairing_is_linear_in_the_measure(mu in cloud(20), nu in cloud(20), t in 0.0..1.0f64, k in 0usize..25) {
        let phi = dict().get(k).unwrap();
        let mixed = mu.mixture(t, &nu).unwrap();
        let expected = t * pair(&mu, phi) + (1.0 - t) * pair(&nu, phi);
        prop_assert!((pair(&mixed, phi) - expected).abs() < 1e-12);
    }

    #[test]
    fn config_round_trip(
        seed in any::<u64>(),
        starts in prop::collection::vec(prop_oneof![
            (-1e3..1e3f64, -1e3..1e3f64).prop_map(|(a, b)| PointInput::Affine([a, b])),
            Just(PointInput::Infinity(corrdyn::cli::Infinity::Inf)),
        ], 1..4),
        coeffs in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 9),
        budget in 1usize..1_000_000,
    ) {
        let mut cfg = Config::parse(r#"{"correspondence": {"terms": [[0, 1, 1, 0]]}}"#).unwrap();
        cfg.seed = seed;
        cfg.starts = starts;
        cfg.budget = budget;
        cfg.correspondence.terms = None;
        cfg.correspondence.bidegree = Some([2, 2]);
        cfg.correspondence.coeffs = Some(coeffs.into_iter().map(|(a, b)| [a, b]).collect());
        let back = Config::parse(&cfg.to_json()).unwrap();
        prop_assert_eq!(&back, &cfg);
    }
}
