use super::*;
use crate::forms::rat;
use crate::forms::{inner_product, BumpField, Phase, TrigPoly};
use crate::increments::admissible_increments;
use crate::multiindex::random_ordering;
use num::BigRational;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lab(v: &[usize]) -> Label {
    Label::new(v).unwrap()
}

fn random_form(n: usize, big: usize, q: usize, rng: &mut ChaCha8Rng) -> Form<TrigPoly> {
    let comps = enum_labels(big, q)
        .unwrap()
        .into_iter()
        .map(|l| (l, TrigPoly::random(n, 2, 2, rng)));
    Form::from_components(n, big, q, n, comps).unwrap()
}

fn small_specs() -> Vec<OperatorSpec> {
    let mut out = Vec::new();
    for n in 2..=3usize {
        for k in 1..=3u32 {
            let rep = admissible_increments(n as u64, k as u64).unwrap();
            for s in &rep.solutions {
                let (l, big) = (s.l as usize, s.big_n as usize);
                if big > 6 {
                    continue;
                }
                out.push(OperatorSpec::new(make_ordering(n, k, l, big, OrderingKind::Lexicographic).unwrap()).unwrap());
                out.push(OperatorSpec::new(random_ordering(n, k, l, big, 11).unwrap()).unwrap());
            }
        }
    }
    out
}

#[test]
fn first_order_is_exterior_derivative() {
    let spec = OperatorSpec::build(2, 1, 1, OrderingKind::Diagonal).unwrap();
    let mut f = TrigPoly::cos_axis(2, 0);
    f.push(vec![1, 2], Phase::Sin, rat(3, 2));
    let df = apply_t(&spec, &Form::scalar(2, f.clone()).unwrap()).unwrap();
    assert_eq!(df.coeff(lab(&[1])), f.derivative(&[1, 0]));
    assert_eq!(df.coeff(lab(&[2])), f.derivative(&[0, 1]));
}

#[test]
fn second_order_diagonal_on_cosine() {
    let spec = OperatorSpec::build(2, 2, 1, OrderingKind::Diagonal).unwrap();
    assert_eq!(spec.ambient_dim(), 3);
    let t = apply_t(&spec, &Form::scalar(3, TrigPoly::cos_axis(2, 0)).unwrap()).unwrap();
    let expect = Form::from_components(
        2,
        3,
        1,
        2,
        [(lab(&[1]), TrigPoly::monomial(vec![1, 0], Phase::Cos, rat(-1, 1)))],
    )
    .unwrap();
    assert_eq!(t, expect);
}

#[test]
fn constants_are_annihilated() {
    for spec in small_specs() {
        let big = spec.ambient_dim();
        let c = Form::scalar(big, TrigPoly::constant(spec.source_dim(), rat(5, 3))).unwrap();
        assert!(spec.apply_t_total(&c).unwrap().is_zero());
    }
}

#[test]
fn degree_checks() {
    let spec = OperatorSpec::build(2, 1, 1, OrderingKind::Lexicographic).unwrap();
    let top = Form::<TrigPoly>::zero(2, 2, 2, 2).unwrap();
    assert!(matches!(apply_t(&spec, &top), Err(Error::DegreeOutOfRange(_))));
    let f0 = Form::<TrigPoly>::zero(2, 2, 0, 2).unwrap();
    assert!(matches!(apply_t_star(&spec, &f0), Err(Error::DegreeOutOfRange(_))));
    assert_eq!(spec.apply_t_total(&top).unwrap().degree(), 3);
}

#[test]
fn adjointness_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for spec in small_specs() {
        let (n, big, l) = (spec.source_dim(), spec.ambient_dim(), spec.increment());
        for q in 0..=big - l {
            let f = random_form(n, big, q, &mut rng);
            let g = random_form(n, big, q + l, &mut rng);
            let lhs = inner_product(&apply_t(&spec, &f).unwrap(), &g).unwrap();
            let rhs = inner_product(&f, &apply_t_star(&spec, &g).unwrap()).unwrap();
            assert_eq!(lhs, rhs, "{:?} q={q}", spec.summary());
        }
    }
}

#[test]
fn adjoint_paths_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for spec in small_specs() {
        let (n, big, l) = (spec.source_dim(), spec.ambient_dim(), spec.increment());
        for qg in l..=big {
            let g = random_form(n, big, qg, &mut rng);
            let a = spec.apply_t_star_total(&g).unwrap();
            let b = spec.apply_t_star_coord(&g, AdjointSign::Derived).unwrap();
            assert_eq!(a, b);
            let printed = spec.apply_t_star_coord(&g, AdjointSign::Printed).unwrap();
            assert_eq!(printed == a, (big * l) % 2 == 0 || a.is_zero());
        }
    }
}

#[test]
fn first_order_adjoint_is_codifferential() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 2..=4 {
        let spec = OperatorSpec::build(n, 1, 1, OrderingKind::Lexicographic).unwrap();
        for p in 1..=n {
            let g = random_form(n, n, p, &mut rng);
            let sign = if (n * (p + 1) + 1) % 2 == 0 { 1 } else { -1 };
            let classical = spec.apply_t_total(&g.hodge_star()).unwrap().hodge_star().scale_int(sign);
            assert_eq!(apply_t_star(&spec, &g).unwrap(), classical);
        }
    }
}

#[test]
fn diagonal_adjoint_is_kth_order_divergence() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (n, k) in [(2, 2), (2, 3), (3, 2)] {
        let spec = OperatorSpec::build(n, k, 1, OrderingKind::Diagonal).unwrap();
        let f = random_form(n, n, 1, &mut rng);
        let div = spec.apply_top_star(&f).unwrap();
        let mut expect = TrigPoly::zero(n);
        for j in 0..n {
            let mut e = vec![0; n];
            e[j] = k;
            expect.add_assign(&f.coeff(lab(&[j + 1])).derivative(&e));
        }
        expect.scale(&rat(if k % 2 == 0 { 1 } else { -1 }, 1));
        assert_eq!(div.coeff(Label::EMPTY), expect);
    }
}

#[test]
fn restricted_operator_adjointness() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for spec in small_specs() {
        let (n, l) = (spec.source_dim(), spec.increment());
        if n < l {
            continue;
        }
        for q in 0..=n - l {
            let f = random_form(n, n, q, &mut rng);
            let g = random_form(n, n, q + l, &mut rng);
            let lhs = inner_product(&apply_top(&spec, &f).unwrap(), &g).unwrap();
            let star = apply_top_star(&spec, &g).unwrap();
            assert_eq!(lhs, inner_product(&f, &star).unwrap());
            assert_eq!(star, spec.apply_top_star_coord(&g).unwrap());
        }
    }
}

#[test]
fn restricted_operator_top_degree_is_zero() {
    let spec = OperatorSpec::build(2, 2, 1, OrderingKind::Diagonal).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let f = random_form(2, 2, 2, &mut rng);
    let t = apply_top(&spec, &f).unwrap();
    assert_eq!(t.degree(), 3);
    assert!(t.is_zero());
}

#[test]
fn composition_vanishes_for_odd_increment() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (n, k, l) in [(2, 2, 1), (3, 2, 1), (4, 3, 3)] {
        let spec = OperatorSpec::build(n, k, l, OrderingKind::Lexicographic).unwrap();
        let big = spec.ambient_dim();
        for q in 0..=big - 2 * l {
            let probes: Vec<_> = (0..2).map(|_| random_form(n, big, q, &mut rng)).collect();
            let rep = compose_tt(&spec, q, &probes).unwrap();
            assert_eq!(rep.max_residual, 0.0);
            assert_eq!(rep.factor, 0);
            assert!(rep.factor_identity);
        }
    }
}

#[test]
fn composition_doubles_for_even_increment() {
    let spec = OperatorSpec::build(3, 2, 2, OrderingKind::Lexicographic).unwrap();
    assert_eq!(spec.ambient_dim(), 4);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let probes = [random_form(3, 4, 0, &mut rng), random_form(3, 4, 1, &mut rng)];
    let rep = compose_tt(&spec, 0, &probes[..1]).unwrap();
    assert!(rep.max_residual > 0.0);
    assert_eq!(rep.factor, 2);
    assert!(rep.factor_identity);
    assert!((rep.max_residual - 2.0 * rep.max_single).abs() <= 1e-9 * rep.max_residual);
    assert!(compose_tt(&spec, 1, &probes[1..]).is_err());
}

#[test]
fn first_increment_tensor_is_kronecker() {
    for (n, k) in [(2, 1), (2, 2), (3, 2), (2, 3)] {
        let spec = OperatorSpec::build(n, k, 1, OrderingKind::Lexicographic).unwrap();
        for q in 0..=spec.ambient_dim() {
            assert!(box_coeff_tensor(&spec, q).unwrap().is_kronecker(&spec), "n={n} k={k} q={q}");
        }
    }
}

#[test]
fn tensor_entries_bounded_and_symmetric() {
    for spec in small_specs() {
        for q in 0..=spec.ambient_dim() {
            let t = box_coeff_tensor(&spec, q).unwrap();
            assert!(t.max_abs() <= 2);
            for (&(m, i, a, b), &v) in &t.entries {
                assert_eq!(t.get(i, m, b, a), v);
            }
        }
    }
}

#[test]
fn laplacian_matches_contraction() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for spec in small_specs() {
        let (n, big) = (spec.source_dim(), spec.ambient_dim());
        for q in 0..=big {
            let h = random_form(n, big, q, &mut rng);
            assert_eq!(box_apply(&spec, &h).unwrap(), box_apply_tensor(&spec, &h).unwrap());
        }
    }
}

#[test]
fn laplacian_of_cosine() {
    let spec = OperatorSpec::build(2, 2, 1, OrderingKind::Diagonal).unwrap();
    let h = Form::scalar(3, TrigPoly::cos_axis(2, 0)).unwrap();
    assert_eq!(box_apply(&spec, &h).unwrap(), h);
    let k1 = OperatorSpec::build(3, 1, 1, OrderingKind::Diagonal).unwrap();
    let mut f = TrigPoly::cos_axis(3, 0);
    f.push(vec![1, 1, 2], Phase::Sin, rat(1, 1));
    let lap = box_apply(&k1, &Form::scalar(3, f.clone()).unwrap()).unwrap();
    let mut expect = f.derivative(&[2, 0, 0]);
    expect.add_assign(&f.derivative(&[0, 2, 0]));
    expect.add_assign(&f.derivative(&[0, 0, 2]));
    expect.scale(&rat(-1, 1));
    assert_eq!(lap.coeff(Label::EMPTY), expect);
}

#[test]
fn closed_form_counterexample() {
    let spec = OperatorSpec::build(2, 2, 2, OrderingKind::Lexicographic).unwrap();
    let a = spec.ordering().backward(lab(&[1, 3])).unwrap();
    let b = spec.ordering().backward(lab(&[2, 3])).unwrap();
    let direct = box_coeff_tensor(&spec, 1).unwrap();
    let closed = box_coeff_closed_form(&spec, 1).unwrap();
    assert_eq!(direct.get(lab(&[1]), lab(&[2]), a, b), -1);
    assert_eq!(closed.get(lab(&[1]), lab(&[2]), a, b), 0);
}

#[test]
fn closed_form_doubles_first_increment_diagonal() {
    let spec = OperatorSpec::build(2, 2, 1, OrderingKind::Lexicographic).unwrap();
    let closed = box_coeff_closed_form(&spec, 1).unwrap();
    for (&(m, i, a, b), &v) in &closed.entries {
        assert!(m == i && a == b);
        assert_eq!(v, 2);
    }
}

#[test]
fn derivatives_commute_with_operator() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for spec in small_specs().into_iter().take(6) {
        let (n, big) = (spec.source_dim(), spec.ambient_dim());
        let f = random_form(n, big, 0, &mut rng);
        let lam = MultiIndex::new((0..n as u32).map(|j| j % 2 + 1).collect());
        let lhs = spec.apply_t_total(&f.partial(&lam).unwrap()).unwrap();
        let rhs = spec.apply_t_total(&f).unwrap().partial(&lam).unwrap();
        assert_eq!(lhs, rhs);
    }
}

#[test]
fn tables_are_cached() {
    let spec = OperatorSpec::build(2, 2, 1, OrderingKind::Lexicographic).unwrap();
    let a = spec.forward_table(1);
    let b = spec.clone().forward_table(1);
    assert!(Arc::ptr_eq(&a, &b));
    assert_eq!(a.q_out, 2);
    assert!(a.rows.iter().all(|r| r.out.len() == 2));
}

#[test]
fn first_order_is_rotation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let spec = OperatorSpec::build(2, 1, 1, OrderingKind::Diagonal).unwrap();
    let f = Form::scalar(2, BumpField::random(2, 3, 0.8, (0.35, 0.5), &mut rng)).unwrap();
    for _ in 0..3 {
        let a = random_rotation(2, &mut rng);
        assert!(invariance_defect(&spec, &a, &f, 64).unwrap() < 1e-10);
    }
}

#[test]
fn signed_permutations_commute_exactly_in_first_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let spec = OperatorSpec::build(3, 1, 1, OrderingKind::Lexicographic).unwrap();
    let f = random_form(3, 3, 1, &mut rng);
    let a = vec![vec![0.0, -1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]];
    assert!(invariance_residual(&spec, &a, &f).unwrap().is_zero());
}

#[test]
fn second_order_fails_invariance_at_45_degrees() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let spec = OperatorSpec::build(2, 2, 1, OrderingKind::Diagonal).unwrap();
    let f = Form::scalar(3, BumpField::random(2, 3, 0.8, (0.35, 0.5), &mut rng)).unwrap();
    let a = plane_rotation(2, 0, 1, std::f64::consts::FRAC_PI_4);
    assert!(invariance_defect(&spec, &a, &f, 64).unwrap() > 1e-3);
    let found = search_rotations(&spec, &f, 64, 2, &mut rng).unwrap();
    assert!(found.conclusive);
    assert!(invariance_defect(&spec, &[vec![0.5, 0.0], vec![0.0, 1.0]], &f, 32).is_err());
}

#[test]
fn random_rotation_is_special_orthogonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for n in 2..=4 {
        let a = random_rotation(n, &mut rng);
        assert!(crate::forms::is_orthogonal(&a, 1e-12));
        let all: Vec<usize> = (0..n).collect();
        assert!((crate::forms::minor_det(&a, &all, &all) - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn adjointness_under_random_orderings(seed in any::<u64>(), q in 0usize..3) {
        let spec = OperatorSpec::new(random_ordering(2, 2, 1, 3, seed).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_form(2, 3, q, &mut rng);
        let g = random_form(2, 3, q + 1, &mut rng);
        let lhs: BigRational = inner_product(&apply_t(&spec, &f).unwrap(), &g).unwrap();
        prop_assert_eq!(lhs, inner_product(&f, &apply_t_star(&spec, &g).unwrap()).unwrap());
    }

    #[test]
    fn complex_property_under_random_orderings(seed in any::<u64>()) {
        let spec = OperatorSpec::new(random_ordering(3, 2, 1, 6, seed).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_form(3, 6, 1, &mut rng);
        let tt = spec.apply_t_total(&spec.apply_t_total(&f).unwrap()).unwrap();
        prop_assert!(tt.is_zero());
    }

    #[test]
    fn laplacian_tensor_under_random_orderings(seed in any::<u64>(), q in 0usize..4) {
        let spec = OperatorSpec::new(random_ordering(2, 2, 2, 3, seed).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_form(2, 3, q, &mut rng);
        prop_assert_eq!(box_apply(&spec, &h).unwrap(), box_apply_tensor(&spec, &h).unwrap());
    }
}
