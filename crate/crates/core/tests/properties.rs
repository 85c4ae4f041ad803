use concfn::charfn::{lattice_law, CharacteristicFunction};
use concfn::concentration::{
    concentration, exact_sum_distribution, regularity_factor, scale_coefficients,
};
use concfn::harness::{calibrate, ratio_of, Identity, SuiteRecord};
use concfn::measures::{Radius, DEFAULT_ATOM_CAP};
use concfn::progressions::{
    cover_count, embed_cgap_in_gap, neighborhood_distance, product, properize, Body, Cgap, Gap,
    Progression, SignedCube, DEFAULT_POINT_CAP,
};
use concfn::structure::{
    arak_rhs, beta_exact_r1, beta_upper, fit_progression_1d, inverse_detect, DetectConfig,
};
use concfn::{
    CoefficientVector, CompoundPoissonSpec, DiscreteDistribution, Rat, Scalar, SpectralMeasure,
};
use num_traits::Signed;
use proptest::prelude::*;

fn rat() -> impl Strategy<Value = Rat> {
    (-12i128..=12, 1i128..=4).prop_map(|(n, d)| Rat::new(n, d))
}

fn coefs(max_n: usize) -> impl Strategy<Value = Vec<Rat>> {
    prop::collection::vec(rat(), 1..=max_n)
        .prop_filter("nonzero", |v| v.iter().any(|x| *x != Rat::from_integer(0)))
}

fn int_coefs(range: std::ops::RangeInclusive<i64>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(range, 1..=6)
        .prop_filter("nonzero", |v| v.iter().any(|x| *x != 0))
        .prop_map(|v| v.into_iter().map(|x| x as f64).collect())
}

fn step_law() -> impl Strategy<Value = DiscreteDistribution<Rat>> {
    prop_oneof![
        Just(DiscreteDistribution::rademacher()),
        (1i128..=3).prop_map(|k| DiscreteDistribution::lazy_rademacher(Rat::new(k, 4)).unwrap()),
    ]
}

/// Finite law on at most six atoms with rational points and weights.
fn rat_law(dim: usize) -> impl Strategy<Value = DiscreteDistribution<Rat>> {
    prop::collection::vec((prop::collection::vec(rat(), dim), 1i128..=5), 1..=6).prop_map(
        move |atoms| {
            let total: i128 = atoms.iter().map(|(_, w)| w).sum();
            DiscreteDistribution::new(
                dim,
                atoms
                    .into_iter()
                    .map(|(p, w)| (p, Rat::new(w, total)))
                    .collect(),
            )
            .unwrap()
        },
    )
}

fn sum_law(a: &[Rat], x: &DiscreteDistribution<Rat>) -> DiscreteDistribution<Rat> {
    let a = CoefficientVector::from_scalars(a.to_vec()).unwrap();
    exact_sum_distribution(&a, x, DEFAULT_ATOM_CAP).unwrap()
}

fn q(f: &DiscreteDistribution<Rat>, tau: Rat) -> Rat {
    concentration(f, &tau).unwrap().value()
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symmetrized_laws_are_symmetric(x in rat_law(2)) {
        let g = x.symmetrize(DEFAULT_ATOM_CAP).unwrap();
        for (p, m) in g.iter() {
            let neg: Vec<Rat> = p.iter().map(|v| -*v).collect();
            prop_assert_eq!(g.mass_at(&neg), *m);
        }
    }

    #[test]
    fn tail_mass_falls_with_delta(x in rat_law(2), d1 in rat(), d2 in rat()) {
        let (lo, hi) = if d1.abs() <= d2.abs() { (d1.abs(), d2.abs()) } else { (d2.abs(), d1.abs()) };
        let a = x.tail_mass(&Radius::Finite(lo));
        let b = x.tail_mass(&Radius::Finite(hi));
        prop_assert!(b <= a);
        prop_assert_eq!(x.tail_mass(&Radius::Infinite), Rat::from_integer(0));
    }

    #[test]
    fn projection_commutes_with_symmetrization(x in rat_law(2), j in 0usize..2) {
        let lhs = x.symmetrize(DEFAULT_ATOM_CAP).unwrap().project(j).unwrap();
        let rhs = x.project(j).unwrap().symmetrize(DEFAULT_ATOM_CAP).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn coefficient_measure_below_its_symmetrization(a in coefs(8)) {
        let a = CoefficientVector::from_scalars(a).unwrap();
        let m = SpectralMeasure::from_coefficients(&a);
        let m_star = SpectralMeasure::symmetric_from_coefficients(&a);
        prop_assert!(m.dominated_by(&m_star));
    }

    #[test]
    fn concentration_is_monotone_and_bounded(a in coefs(8), x in step_law(), t1 in rat(), t2 in rat()) {
        let f = sum_law(&a, &x);
        let (lo, hi) = if t1.abs() <= t2.abs() { (t1.abs(), t2.abs()) } else { (t2.abs(), t1.abs()) };
        let atom = f.max_atom_mass();
        prop_assert_eq!(q(&f, Rat::from_integer(0)), atom);
        let ql = q(&f, lo);
        let qh = q(&f, hi);
        prop_assert!(atom <= ql && ql <= qh && qh <= Rat::from_integer(1));
    }

    #[test]
    fn bracket_is_monotone_in_two_dimensions(x in rat_law(2), t1 in 0.0f64..4.0, t2 in 0.0f64..4.0) {
        let f = x.to_f64();
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let a = concentration(&f, &lo).unwrap();
        let b = concentration(&f, &hi).unwrap();
        prop_assert!(a.lower <= a.upper && b.lower <= b.upper);
        prop_assert!(a.upper <= b.upper + 1e-12);
        prop_assert!(f.max_atom_mass() <= a.lower + 1e-12);
    }

    #[test]
    fn regularity_holds_exactly(a in coefs(8), x in step_law(), mu in rat(), lambda in rat()) {
        prop_assume!(lambda != Rat::from_integer(0));
        let (mu, lambda) = (mu.abs(), lambda.abs());
        let f = sum_law(&a, &x);
        let k = regularity_factor(&mu, &lambda, 1).unwrap() as i128;
        prop_assert!(q(&f, mu) <= Rat::from_integer(k) * q(&f, lambda));
    }

    #[test]
    fn scaling_is_exact(a in coefs(8), x in step_law(), v in rat(), tau in rat()) {
        prop_assume!(v != Rat::from_integer(0));
        let (v, tau) = (v.abs(), tau.abs());
        let f = sum_law(&a, &x);
        let av = CoefficientVector::from_scalars(a.clone()).unwrap();
        let scaled = scale_coefficients(&av, &v).unwrap();
        let g = exact_sum_distribution(&scaled, &x, DEFAULT_ATOM_CAP).unwrap();
        prop_assert_eq!(q(&f, tau), q(&g, v * tau));
    }

    #[test]
    fn distinct_coefficients_obey_the_binomial_bound(
        a in prop::collection::btree_set(1i128..=64, 1..=16)
    ) {
        let n = a.len() as u64;
        let a: Vec<Rat> = a.into_iter().map(Rat::from_integer).collect();
        let f = sum_law(&a, &DiscreteDistribution::rademacher());
        let bound = Rat::new(binomial(n, n / 2) as i128, 1i128 << n);
        prop_assert!(q(&f, Rat::from_integer(0)) <= bound);
    }

    #[test]
    fn modulus_inequality_pointwise(x in rat_law(1), t in -30.0f64..30.0) {
        let m = x.to_f64().cf(&[t]).norm().min(1.0);
        prop_assert!((-(1.0 - m * m) / 2.0).exp() - m >= -1e-12);
    }

    #[test]
    fn symmetrized_cf_is_squared_modulus(x in rat_law(2), t1 in -10.0f64..10.0, t2 in -10.0f64..10.0) {
        let f = x.to_f64();
        let g = f.symmetrize(DEFAULT_ATOM_CAP).unwrap();
        let t = [t1, t2];
        let c = g.cf(&t);
        prop_assert!((c.re - f.cf(&t).norm_sqr()).abs() < 1e-12);
        prop_assert!(c.im.abs() < 1e-12);
    }

    #[test]
    fn compound_cf_is_positive(a in int_coefs(-5..=5), lambda in 0.0f64..1.0, t in -10.0f64..10.0) {
        let a = CoefficientVector::from_scalars(a).unwrap();
        let spec = CompoundPoissonSpec::h_measure(&a, lambda, 1.0).unwrap();
        let c = spec.cf(&[t]);
        prop_assert!(c.im == 0.0 && c.re > 0.0 && c.re <= 1.0);
    }

    #[test]
    fn lattice_masses_are_a_law(a in int_coefs(-4..=4), lambda in 0.05f64..1.0) {
        let tol = 1e-12;
        let a = CoefficientVector::from_scalars(a).unwrap();
        let spec = CompoundPoissonSpec::h_measure(&a, lambda, 1.0).unwrap();
        let law = lattice_law(&spec, tol).unwrap();
        prop_assert!(law.atoms(f64::NEG_INFINITY).iter().all(|(_, m)| *m >= -tol));
        prop_assert!((law.total() - 1.0).abs() <= 10.0 * tol);
    }

    #[test]
    fn signed_cube_has_three_equal_forms(u in prop::collection::vec(prop::collection::vec(rat(), 2), 1..=3)) {
        let cube = SignedCube::new(u, 2).unwrap();
        let direct = Progression::Cube(cube.clone()).points(DEFAULT_POINT_CAP).unwrap();
        let gap = cube.to_gap().points(DEFAULT_POINT_CAP).unwrap();
        let cgap = cube.to_cgap().points().unwrap();
        prop_assert_eq!(&direct, &gap);
        prop_assert_eq!(&direct, &cgap);
    }

    #[test]
    fn embedding_contains_the_cgap(
        h in prop::collection::vec(prop::collection::vec(rat(), 1), 1..=2),
        radius in 0.5f64..3.0,
    ) {
        let r = h.len();
        let k = Cgap::centered(h, Body::ball(r, radius), 1, DEFAULT_POINT_CAP).unwrap();
        let emb = embed_cgap_in_gap(&k).unwrap();
        let gap = Progression::Gap(emb.gap);
        for (p, _) in k.points().unwrap().iter() {
            prop_assert_eq!(neighborhood_distance(p, &gap).unwrap(), Rat::from_integer(0));
        }
    }

    #[test]
    fn properize_keeps_volume(
        g in prop::collection::vec(prop::collection::vec(1i128..=6, 1), 1..=3),
        l in prop::collection::vec(1i64..=2, 3),
    ) {
        let r = g.len();
        let gens: Vec<Vec<Rat>> = g.into_iter().map(|v| v.into_iter().map(Rat::from_integer).collect()).collect();
        let k = Gap::symmetric(gens, l[..r].to_vec(), 1).unwrap();
        let p = properize(&k, &Rat::new(1, 10)).unwrap();
        prop_assert_eq!(p.volume().unwrap(), k.volume().unwrap());
        prop_assert_eq!((p.rank(), p.dim()), (k.rank(), k.dim()));
        prop_assert!(p.is_proper(DEFAULT_POINT_CAP).unwrap());
        prop_assert_eq!(p.points(DEFAULT_POINT_CAP).unwrap().len() as u128, p.volume().unwrap());
    }

    #[test]
    fn cover_count_grows_with_tau(a in coefs(10), step in 1i128..=4, t1 in rat(), t2 in rat()) {
        let (lo, hi) = if t1.abs() <= t2.abs() { (t1.abs(), t2.abs()) } else { (t2.abs(), t1.abs()) };
        let k = Progression::Cgap(Cgap::arithmetic_progression(Rat::from_integer(0), Rat::from_integer(step), 2).unwrap());
        let a = CoefficientVector::from_scalars(a).unwrap();
        prop_assert!(cover_count(&a, &k, &lo).unwrap().covered <= cover_count(&a, &k, &hi).unwrap().covered);
    }

    #[test]
    fn product_volume_multiplies(l1 in 0i64..=3, l2 in 0i64..=3, s1 in 1i128..=5, s2 in 1i128..=5) {
        let ap = |s: i128, l: i64| Progression::Cgap(
            Cgap::arithmetic_progression(Rat::from_integer(0), Rat::from_integer(s), l).unwrap(),
        );
        let (a, b) = (ap(s1, l1), ap(s2, l2));
        let p = product(&[a.clone(), b.clone()]).unwrap();
        prop_assert_eq!(p.volume().unwrap(), a.volume().unwrap() * b.volume().unwrap());
        prop_assert_eq!(p.dim(), 2);
    }

    #[test]
    fn float_beta_bounds_exact_beta(
        pts in prop::collection::btree_map(-10i128..=10, 1i128..=4, 1..=8),
        m in 1usize..=5,
    ) {
        let atoms: Vec<(Vec<Rat>, Rat)> = pts.iter().map(|(p, w)| (vec![Rat::from_integer(*p)], Rat::from_integer(*w))).collect();
        let w = SpectralMeasure::new(1, atoms).unwrap();
        let exact = beta_exact_r1(&w, m, &Rat::from_integer(0)).unwrap();
        let upper = beta_upper(&w.to_f64(), 1, m, 0.0, 50, 7).unwrap();
        prop_assert!(upper.upper >= exact.upper.to_f64() - 1e-12);
    }

    #[test]
    fn arak_rhs_decreases(ab in 0.01f64..100.0, r in 1usize..=3, m in 1usize..=20) {
        prop_assert!(arak_rhs(ab * 1.5, r, m, 1.0) < arak_rhs(ab, r, m, 1.0));
        prop_assert!(arak_rhs(ab, r, m + 1, 1.0) < arak_rhs(ab, r, m, 1.0));
    }

    #[test]
    fn exact_planted_progressions_need_no_outliers(
        start in -20i64..=20, step in 1i64..=5, l in 0i64..=5,
        picks in prop::collection::vec(0i64..=10, 1..=20),
    ) {
        let values: Vec<f64> = picks.iter().map(|p| (start + step * (p % (2 * l + 1))) as f64).collect();
        let fit = fit_progression_1d(&values, &0.0, (2 * l + 1) as usize, 0).unwrap();
        prop_assert!(fit.outliers.is_empty());
    }

    #[test]
    fn detector_is_deterministic_and_blockwise(
        a in prop::collection::vec(prop::collection::vec(-6i64..=6, 2), 2..=10),
    ) {
        let entries: Vec<Vec<f64>> = a.into_iter().map(|e| e.into_iter().map(|v| v as f64).collect()).collect();
        let a = CoefficientVector::new(entries).unwrap();
        let x = DiscreteDistribution::rademacher();
        let cfg = DetectConfig::default();
        let r1 = inverse_detect(&a, &x, &0.0, &1.0, 1, &cfg).unwrap();
        let r2 = inverse_detect(&a, &x, &0.0, &1.0, 1, &cfg).unwrap();
        prop_assert_eq!(r1.to_json_value(), r2.to_json_value());
        for g in r1.progression.generators() {
            prop_assert_eq!(g.iter().filter(|v| **v != 0.0).count(), 1);
        }
    }

    #[test]
    fn calibration_max_never_falls(
        base in prop::collection::vec(0.0f64..10.0, 1..=20),
        extra in prop::collection::vec(0.0f64..10.0, 0..=20),
    ) {
        let rec = |x: f64| SuiteRecord {
            case_id: 0,
            identity: Identity::HBound,
            digest: String::new(),
            lhs: x,
            rhs: 1.0,
            ratio: Some(x),
            pass: None,
            error: None,
        };
        let before: Vec<SuiteRecord> = base.iter().copied().map(rec).collect();
        let mut after = before.clone();
        after.extend(extra.iter().copied().map(rec));
        let ids = [Identity::HBound];
        let a = calibrate(&before, &ids).unwrap();
        let b = calibrate(&after, &ids).unwrap();
        prop_assert!(b[0].max >= a[0].max);
        prop_assert!(b[0].count >= a[0].count);
    }

    #[test]
    fn ratio_rule(lhs in 0.0f64..10.0, rhs in 0.0f64..10.0) {
        let (ratio, fail) = ratio_of(lhs, rhs);
        if rhs > 0.0 {
            prop_assert_eq!(ratio, Some(lhs / rhs));
            prop_assert!(!fail);
        } else {
            prop_assert_eq!(ratio, None);
            prop_assert_eq!(fail, lhs > 0.0);
        }
    }
}
