//! Property tests for the structural invariants of each module.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use proptest::prelude::*;

use lipdeg::construct::{recursion_plan, sphere_map, GeometryConstants};
use lipdeg::degree::{
    allfreq_exponent, averaged_bound, degree_integral, finalbound_terms, pullback_area_form, BoundConfig, PullbackScheme,
    ScaleProfile, TailPolicy,
};
use lipdeg::exterior::MultiIndex;
use lipdeg::linalg::{signature, signature_exact};
use lipdeg::lp::{build_partition, Grid, GridForm, Spectral};
use lipdeg::ring::{
    connected_sum_cp2, evaluate_relations, lipschitz_lower_exponent, positive_weight_exponents, s3_bundle_action,
    CohomologyAction, Generator, RingPresentation, WeightData,
};
use lipdeg::scalable::{check_middle_form, kge4_certificate, search_embedding, Kge4Outcome, SearchConfig};
use lipdeg::{ExteriorElement, Rational, Scalar};

const N: usize = 5;

/// A homogeneous element of Λ^p ℝ^5 with small integer coefficients.
fn homogeneous(p: usize) -> impl Strategy<Value = ExteriorElement<Rational>> {
    let basis = MultiIndex::all_of_degree(N, p);
    prop::collection::vec(-3i64..=3, basis.len()).prop_map(move |cs| {
        ExteriorElement::from_terms(N, basis.iter().copied().zip(cs.into_iter().map(Rational::of_i64))).unwrap()
    })
}

fn graded_pair() -> impl Strategy<Value = (usize, usize, ExteriorElement<Rational>, ExteriorElement<Rational>)> {
    (0usize..=N, 0usize..=N).prop_flat_map(|(p, q)| (Just(p), Just(q), homogeneous(p), homogeneous(q)))
}

fn mixed() -> impl Strategy<Value = ExteriorElement<Rational>> {
    (homogeneous(1), homogeneous(2), homogeneous(3)).prop_map(|(a, b, c)| a.add(&b).unwrap().add(&c).unwrap())
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn graded_commutativity((p, q, a, b) in graded_pair()) {
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap();
        let expect = if (p * q) % 2 == 1 { ba.neg() } else { ba };
        prop_assert_eq!(&ab, &expect);
        // The float product agrees with the exact one.
        let fab = a.to_f64().wedge(&b.to_f64()).unwrap();
        let diff = fab.sub(&ab.to_f64()).unwrap().max_abs();
        prop_assert!(diff <= 1e-12 * ab.to_f64().max_abs().max(1.0));
    }

    #[test]
    fn wedge_is_associative(a in mixed(), b in mixed(), c in mixed()) {
        let left = a.wedge(&b).unwrap().wedge(&c).unwrap();
        let right = a.wedge(&b.wedge(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn odd_squares_vanish(a in homogeneous(1), c in homogeneous(3)) {
        prop_assert!(a.wedge(&a).unwrap().is_zero());
        prop_assert!(c.wedge(&c).unwrap().is_zero());
    }
}

/// An invertible integer matrix: unit lower times unit upper triangular.
fn unimodular(k: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (prop::collection::vec(-2i64..=2, k * k), prop::collection::vec(-2i64..=2, k * k)).prop_map(move |(l, u)| {
        let lo = DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 } else if i > j { l[i * k + j] as f64 } else { 0.0 });
        let up = DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 } else if i < j { u[i * k + j] as f64 } else { 0.0 });
        lo * up
    })
}

fn to_rational(m: &DMatrix<f64>) -> Vec<Vec<Rational>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| Rational::of_f64(m[(i, j)])).collect()).collect()
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn signature_is_a_congruence_invariant(
        (signs, s) in (1usize..=5).prop_flat_map(|k| (prop::collection::vec(prop::bool::ANY, k), unimodular(k)))
    ) {
        let q = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(signs.len(), signs.iter().map(|&b| if b { 1.0 } else { -1.0 })));
        let congruent = s.transpose() * &q * &s;
        let exact = signature_exact(&to_rational(&congruent)).unwrap();
        prop_assert_eq!(exact, signature_exact(&to_rational(&q)).unwrap());
        prop_assert_eq!(signature(&congruent, 1e-9).unwrap(), exact);
        let v0 = check_middle_form(&q, 2, 1e-9, None).unwrap();
        let v1 = check_middle_form(&congruent, 2, 1e-9, None).unwrap();
        prop_assert_eq!(v0.status, v1.status);
    }

    #[test]
    fn relation_words_evaluate_to_wedges(a in homogeneous(2), b in homogeneous(2)) {
        let gens = vec![
            Generator { name: "u1".into(), degree: 2 },
            Generator { name: "u2".into(), degree: 2 },
        ];
        let p = RingPresentation::new(4, gens, vec![("u1u2".into(), vec![(1.0, vec![0, 1])])], vec![0, 1]).unwrap();
        let a4 = restrict(&a);
        let b4 = restrict(&b);
        let vals = evaluate_relations(&p, &[a4.clone(), b4.clone()]).unwrap();
        prop_assert_eq!(&vals[0], &a4.wedge(&b4).unwrap());
    }
}

/// Keep the terms of a 2-form on ℝ⁵ that live on ℝ⁴.
fn restrict(a: &ExteriorElement<Rational>) -> ExteriorElement<Rational> {
    let terms = a.terms().filter(|(m, _)| !m.contains(5)).map(|(m, c)| (*m, c.clone()));
    ExteriorElement::from_terms(4, terms.collect::<Vec<_>>()).unwrap()
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn lipschitz_exponent_survives_basis_change(t in 1.5f64..5.0, s in unimodular(2)) {
        let base = s3_bundle_action(t);
        let inv = s.clone().try_inverse().unwrap();
        let mut moved = base.clone();
        for k in [2usize, 5] {
            let m = &base.matrices[&k];
            moved.matrices.insert(k, &inv * m * &s);
        }
        let a = lipschitz_lower_exponent(&base).unwrap();
        let b = lipschitz_lower_exponent(&moved).unwrap();
        prop_assert!((a.rho - b.rho).abs() <= 1e-9 * a.rho);
    }

    #[test]
    fn duality_forces_rho_at_least_one(
        n in 2usize..=8,
        d in 1.5f64..50.0,
        lams in prop::collection::vec(0.05f64..40.0, 1..=7),
    ) {
        let mut matrices = BTreeMap::new();
        for (i, &l) in lams.iter().enumerate() {
            let k = 1 + i % (n - 1);
            matrices.insert(k, DMatrix::from_element(1, 1, l));
        }
        let action = CohomologyAction { manifold_dim: n, matrices, claimed_degree: Some(d), poincare_duality: true };
        let e = lipschitz_lower_exponent(&action).unwrap();
        prop_assert!(e.rho >= 1.0 - 1e-12, "rho = {}", e.rho);
    }

    #[test]
    fn weight_exponents_ignore_order(classes in prop::collection::vec((1u32..=9, 1u32..=9), 1..8), seed in any::<u64>()) {
        let a = positive_weight_exponents(&WeightData { classes: classes.clone() }).unwrap();
        let mut shuffled = classes;
        let len = shuffled.len();
        shuffled.rotate_left((seed as usize) % len);
        shuffled.reverse();
        let b = positive_weight_exponents(&WeightData { classes: shuffled }).unwrap();
        prop_assert_eq!(a.alpha, b.alpha);
        prop_assert_eq!(a.d, b.d);
        prop_assert_eq!(a.gamma, b.gamma);
    }
}

proptest! {
    #![proptest_config(config(8))]

    #[test]
    fn search_defect_never_increases(seed in any::<u64>(), k in 1usize..=4) {
        let cfg = SearchConfig { restarts: 2, max_iters: 300, seed, ..SearchConfig::default() };
        let out = search_embedding(&connected_sum_cp2(k).unwrap(), &[4], &cfg).unwrap();
        prop_assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(out.trace.last().unwrap() <= out.trace.first().unwrap());
        prop_assert_eq!(*out.trace.last().unwrap(), out.defect);
    }

    #[test]
    fn kge4_constant_dominates_samples(seed in any::<u64>(), k in 4usize..=6) {
        match kge4_certificate(k, 512, seed).unwrap() {
            Kge4Outcome::Certified { violations, c_est, .. } => {
                prop_assert_eq!(violations, 0);
                prop_assert!(c_est.is_finite() && c_est > 0.0);
            }
            Kge4Outcome::Counterexample { .. } => prop_assert!(false, "k ≥ 4 has no exact counterexample"),
        }
    }
}

fn profile_strategy() -> impl Strategy<Value = ScaleProfile> {
    prop::collection::vec(0.0f64..1e6, 4..24).prop_map(|l1| ScaleProfile::new(0, l1))
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn cross_term_is_monotone_in_masses(
        p in profile_strategy(),
        bump in 0.0f64..1e6,
        at in any::<prop::sample::Index>(),
        cut in any::<prop::sample::Index>(),
        extend in prop::bool::ANY,
    ) {
        let tail = if extend { TailPolicy::Extend } else { TailPolicy::Truncate };
        let lip = 2f64.powi(p.k_max());
        let cutoff = cut.index(p.l1.len()) as i32;
        let before = finalbound_terms(&[p.clone()], lip, cutoff, tail).unwrap();
        let mut q = p.clone();
        q.l1[at.index(p.l1.len())] += bump;
        let after = finalbound_terms(&[q], lip, cutoff, tail).unwrap();
        prop_assert!(after.cross >= before.cross);
        prop_assert!(after.total >= before.total);
    }

    #[test]
    fn averaged_bound_is_at_least_the_minimum(l1 in prop::collection::vec(0.0f64..1e9, 21), e in 10i32..=20) {
        let lip = 2f64.powi(e);
        let r = averaged_bound(&[ScaleProfile::new(0, l1)], lip, &BoundConfig::default()).unwrap();
        prop_assert!(r.averaged_direct >= r.min_bound);
        prop_assert!(r.averaged_cs >= r.averaged_direct);
        prop_assert!(r.cutoffs.iter().all(|t| t.total >= r.min_bound));
    }

    #[test]
    fn allfreq_saturates_in_gamma(b1 in 0.01f64..0.98, gap in 0.01f64..0.99, g1 in 0.0f64..2.0, g2 in 0.0f64..2.0) {
        let b2 = (b1 + gap * (1.0 - b1)).min(0.999);
        prop_assume!(b2 > b1);
        let floor = b1.min(b2 - b1);
        let (g1, g2) = (floor + g1, floor + g2);
        prop_assert_eq!(allfreq_exponent(b1, b2, g1).unwrap(), allfreq_exponent(b1, b2, g2).unwrap());
        prop_assert_eq!(allfreq_exponent(b1, b2, g1).unwrap(), floor);
    }

    #[test]
    fn bands_partition_unity(dim in 1usize..=4, log_n in 2u32..=7, period in 0.25f64..8.0, frac in 0.0f64..1.0) {
        let grid = Grid::new(dim, 1 << log_n, period).unwrap();
        let bands = build_partition(grid);
        let r2 = (frac * bands.max_r2() as f64) as usize;
        let sum: f64 = bands.range().map(|k| bands.eta(k, r2)).sum();
        prop_assert!((sum - 1.0).abs() < 1e-12, "sum = {sum}");
        prop_assert!(bands.range().all(|k| (0.0..=1.0 + 1e-15).contains(&bands.eta(k, r2))));
    }

    #[test]
    fn recursion_is_monotone(p in 2usize..=4, d in 1usize..=3, levels in 2u32..=16) {
        let g = GeometryConstants { c0: 3f64.sqrt(), lip_g: 2.0 * std::f64::consts::PI, d_scale: 0.49, rp_factor: 2.0 };
        let a = recursion_plan(p, levels, d, &g).unwrap();
        let b = recursion_plan(p + 1, levels, d, &g).unwrap();
        prop_assert!(a.layers.windows(2).all(|w| w[1].bound >= w[0].bound));
        for (x, y) in a.layers.iter().zip(&b.layers) {
            prop_assert!(y.bound >= x.bound);
        }
        if d <= 2 {
            prop_assert!(a.layers.windows(2).all(|w| w[1].bound <= 2.0 * p as f64 * w[0].bound));
        }
    }
}

fn random_form(grid: Grid, degree: usize, seed: u64) -> GridForm {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut a = GridForm::zeros(grid, degree).unwrap();
    for c in &mut a.components {
        c.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
    }
    a
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn projections_reconstruct_and_nest(
        (dim, degree) in (2usize..=3).prop_flat_map(|d| (Just(d), 0..=d)),
        log_n in 3u32..=4,
        period in 0.5f64..3.0,
        seed in any::<u64>(),
    ) {
        let grid = Grid::new(dim, 1 << log_n, period).unwrap();
        let s = Spectral::new(grid);
        let a = random_form(grid, degree, seed);
        let mut sum = GridForm::zeros(grid, degree).unwrap();
        for k in s.bands().range() {
            sum.add_scaled(1.0, &s.project_band(&a, k).unwrap()).unwrap();
        }
        prop_assert!(sum.sub(&a).unwrap().max_abs() <= 1e-10 * a.max_abs());
        let profile = s.band_profile(&a).unwrap();
        prop_assert!((0.1..=1.0 + 1e-12).contains(&profile.orthogonality_ratio));
        for k in s.bands().range() {
            prop_assert!(s.idempotence_defect(&a, k).unwrap() < 1e-12);
        }
    }

    #[test]
    fn sphere_map_degrees_are_squares(d in 1usize..=8) {
        let n = 256usize.div_ceil(2 * d) * 2 * d;
        let f = sphere_map(d, n).unwrap();
        let top = pullback_area_form(&f, PullbackScheme::SolidAngle).unwrap();
        let one = GridForm::from_fn(top.grid, 0, |_, _| 1.0).unwrap();
        let deg = degree_integral(&top, &one).unwrap();
        prop_assert!((deg - (d * d) as f64).abs() <= 1e-5, "d = {d}: {deg}");
    }
}
