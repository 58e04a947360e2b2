use super::*;
use crate::forms::{rat, BumpField, GridField, GridShape, Phase, TrigPoly};
use crate::multiindex::{enum_labels, random_ordering, OrderingKind};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

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

fn random_family(spec: &OperatorSpec, rng: &mut ChaCha8Rng) -> Vec<TrigPoly> {
    (0..spec.ordering().len())
        .map(|_| TrigPoly::random(spec.source_dim(), 2, 2, rng))
        .collect()
}

fn bump_form(n: usize, big: usize, q: usize, seed: u64) -> Form<BumpField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    closed::random_bump_form(n, big, q, &BumpParams::default(), &mut rng).unwrap()
}

fn gaussian(n: usize, width: f64) -> BumpField {
    BumpField::gaussian(&vec![PI; n], width, 1.0)
}

#[test]
fn reduction_of_potential_is_divergence_free() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (n, k) in [(2, 2), (3, 1), (2, 3)] {
        let spec = OperatorSpec::build(n, k, 1, OrderingKind::Diagonal).unwrap();
        let big = spec.ambient_dim();
        let phi = random_form(n, big, 0, &mut rng);
        let f = spec.apply_t_total(&phi).unwrap();
        let h = random_form(n, big, 1, &mut rng);
        for l0 in enum_labels(big, 2).unwrap() {
            let (g, _) = vs_reduction(&spec, &f, &h, l0).unwrap();
            assert!(k_divergence(&spec, &g).unwrap().is_empty(), "n={n} k={k} L0={l0}");
        }
    }
}

#[test]
fn reduction_of_generic_form_has_divergence() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let spec = OperatorSpec::build(2, 2, 1, OrderingKind::Diagonal).unwrap();
    let f = random_form(2, 3, 1, &mut rng);
    let any = enum_labels(3, 2)
        .unwrap()
        .into_iter()
        .any(|l0| !k_divergence(&spec, &vs_reduction(&spec, &f, &f, l0).unwrap().0).unwrap().is_empty());
    assert!(any);
}

#[test]
fn reduction_at_degree_zero_copies_the_function() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let spec = OperatorSpec::build(2, 2, 1, OrderingKind::Diagonal).unwrap();
    let f = random_form(2, 3, 0, &mut rng);
    let (g, h) = vs_reduction(&spec, &f, &f, lab(&[2])).unwrap();
    assert_eq!(g.len(), 3);
    assert!(g.iter().chain(&h).all(|x| *x == f.coeff(Label::from_bits(0))));
}

#[test]
fn reduction_rejects_large_degree_and_bad_label() {
    let spec = OperatorSpec::build(2, 2, 1, OrderingKind::Diagonal).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let f = random_form(2, 3, 3, &mut rng);
    assert!(matches!(vs_reduction(&spec, &f, &f, lab(&[1, 2, 3])), Err(Error::DegreeOutOfRange(_))));
    let f = random_form(2, 3, 1, &mut rng);
    assert!(vs_reduction(&spec, &f, &f, lab(&[1])).is_err());
}

#[test]
fn lift_of_single_sine() {
    for k in 1..=3u32 {
        let spec = OperatorSpec::build(2, k, 1, OrderingKind::Diagonal).unwrap();
        let idx = spec
            .alphas()
            .iter()
            .position(|a| a == &vec![k, 0])
            .unwrap();
        let mut g = vec![TrigPoly::zero(2); spec.ordering().len()];
        g[idx] = TrigPoly::sin_axis(2, 0);
        let f = vs_lift(&spec, &g).unwrap();
        assert_eq!(f.degree(), spec.ambient_dim() - 1);
        let top = spec.apply_t_total(&f).unwrap();
        let full = Label::full(spec.ambient_dim());
        assert_eq!(top.coeff(full), TrigPoly::sin_axis(2, 0).derivative(&[k, 0]));
    }
}

#[test]
fn lift_of_divergence_free_family_is_closed() {
    let spec = OperatorSpec::build(2, 1, 1, OrderingKind::Diagonal).unwrap();
    // (∂_2 ψ, -∂_1 ψ) for ψ = cos(x1 + 2 x2).
    let mut psi = TrigPoly::zero(2);
    psi.push(vec![1, 2], Phase::Cos, rat(1, 1));
    let mut g1 = psi.derivative(&[1, 0]);
    g1.scale(&rat(-1, 1));
    let g = vec![psi.derivative(&[0, 1]), g1];
    let (a, b) = (spec.alphas()[0].clone(), spec.alphas()[1].clone());
    assert_eq!((a, b), (vec![1, 0], vec![0, 1]));
    assert!(k_divergence(&spec, &g).unwrap().is_empty());
    assert!(spec.apply_t_total(&vs_lift(&spec, &g).unwrap()).unwrap().is_zero());
}

#[test]
fn lift_rejects_wrong_family_length() {
    let spec = OperatorSpec::build(2, 2, 1, OrderingKind::Diagonal).unwrap();
    assert!(vs_lift(&spec, &[TrigPoly::zero(2)]).is_err());
}

#[test]
fn potential_bump_field_is_exactly_closed() {
    let spec = OperatorSpec::build(2, 2, 1, OrderingKind::Diagonal).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let c = closed_bump_field(&spec, 1, &BumpParams::default(), &mut rng).unwrap();
    assert_eq!(c.route, ClosedRoute::Potential);
    assert!(!c.form.is_zero());
    assert!(spec.apply_t_total(&c.form).unwrap().is_zero());
    assert!(closed_bump_field(&spec, 0, &BumpParams::default(), &mut rng).is_err());
}

#[test]
fn top_degree_is_closed_by_overflow() {
    let spec = OperatorSpec::build(2, 2, 1, OrderingKind::Diagonal).unwrap();
    let c = make_closed_field(&spec, 3, 1).unwrap();
    assert_eq!(c.route, ClosedRoute::Overflow);
    assert!(!c.form.is_zero());
}

#[test]
fn even_increment_uses_kernel_projection() {
    let spec = OperatorSpec::new(crate::multiindex::make_ordering(3, 2, 2, 4, OrderingKind::Lexicographic).unwrap()).unwrap();
    for q in 1..=2 {
        let c = make_closed_field(&spec, q, 10 + q as u64).unwrap();
        assert_eq!(c.route, ClosedRoute::KernelProjection);
        assert!(!c.form.is_zero());
        assert!(spec.apply_t_total(&c.form).unwrap().is_zero());
        let sampled = c.form.sample(16).unwrap();
        assert!(closure_residual(&spec, &sampled).unwrap() <= 1e-10);
    }
}

#[test]
fn degree_zero_has_trivial_kernel() {
    let spec = OperatorSpec::new(crate::multiindex::make_ordering(3, 2, 2, 4, OrderingKind::Lexicographic).unwrap()).unwrap();
    assert!(matches!(make_closed_field(&spec, 0, 1), Err(Error::Precondition(_))));
}

#[test]
fn nullspace_of_small_matrix() {
    let rows = vec![vec![rat(1, 1), rat(2, 1), rat(3, 1)], vec![rat(2, 1), rat(4, 1), rat(6, 1)]];
    let basis = rational_nullspace(&rows, 3);
    assert_eq!(basis.len(), 2);
    for v in &basis {
        for r in &rows {
            let s = r.iter().zip(v).fold(rat(0, 1), |a, (x, y)| a + x * y);
            assert_eq!(s, rat(0, 1));
        }
    }
}

#[test]
fn first_order_hodge_matches_poisson_solve() {
    let spec = OperatorSpec::build(2, 1, 1, OrderingKind::Diagonal).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let phi = TrigPoly::random(2, 4, 3, &mut rng);
    let p = 32;
    let shape = GridShape { n: 2, p };
    let phi_grid = Form::scalar(2, phi.clone()).unwrap().sample(p).unwrap();
    let f = spec.apply_t_total(&phi_grid).unwrap();
    let sol = hodge_solve(&spec, 0, Some(&f), None, shape).unwrap();
    assert!(sol.residual_f < 1e-12);
    // dZ = dφ with mean-zero Z: Z is φ minus its mean.
    let mean = phi_grid.coeff(Label::from_bits(0)).data().iter().sum::<f64>() / (p * p) as f64;
    let z = sol.z.coeff(Label::from_bits(0));
    let expect = GridField::from_fn(2, p, |x| phi.eval(x) - mean).unwrap();
    assert!(z.max_abs_diff(&expect) < 1e-12);
}

#[test]
fn zero_data_gives_zero_solution() {
    let spec = OperatorSpec::build(2, 2, 1, OrderingKind::Diagonal).unwrap();
    let shape = GridShape { n: 2, p: 16 };
    for q in 0..=2 {
        let sol = hodge_solve(&spec, q, None, None, shape).unwrap();
        assert!(sol.z.is_zero() || sol.z.max_abs() == 0.0);
        assert_eq!(sol.residual_f, 0.0);
    }
}

#[test]
fn second_order_hodge_residuals_at_64() {
    let spec = OperatorSpec::build(2, 2, 1, OrderingKind::Diagonal).unwrap();
    let shape = GridShape { n: 2, p: 64 };
    let phi = bump_form(2, 3, 0, 20).sample(64).unwrap();
    let f = spec.apply_t_total(&phi).unwrap();
    let sol = hodge_solve(&spec, 0, Some(&f), None, shape).unwrap();
    assert!(sol.residual_f <= 1e-8, "{}", sol.residual_f);

    let phi = bump_form(2, 3, 1, 21).sample(64).unwrap();
    let psi = bump_form(2, 3, 1, 22).sample(64).unwrap();
    let f = spec.apply_t_total(&phi).unwrap();
    let g = spec.apply_t_star_total(&psi).unwrap();
    let sol = hodge_solve(&spec, 1, Some(&f), Some(&g), shape).unwrap();
    assert!(sol.residual_f <= 1e-8 && sol.residual_g <= 1e-8, "{:?}", sol.residuals());
}

#[test]
fn hodge_rejects_bad_data() {
    let spec = OperatorSpec::build(2, 2, 1, OrderingKind::Diagonal).unwrap();
    let shape = GridShape { n: 2, p: 16 };
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let f = random_form(2, 3, 1, &mut rng).sample(16).unwrap();
    assert!(matches!(hodge_solve(&spec, 0, Some(&f), None, shape), Err(Error::Precondition(_))));
    let one = GridField::from_fn(2, 16, |_| 1.0).unwrap();
    let c = Form::from_components(2, 3, 1, one.grid(), [(lab(&[1]), one.clone())]).unwrap();
    assert!(matches!(hodge_solve(&spec, 0, Some(&c), None, shape), Err(Error::Precondition(_))));
    let even = OperatorSpec::new(crate::multiindex::make_ordering(3, 2, 2, 4, OrderingKind::Lexicographic).unwrap()).unwrap();
    assert!(hodge_solve(&even, 0, None, None, GridShape { n: 3, p: 8 }).is_err());
}

#[test]
fn duality_ratio_preconditions() {
    let spec = OperatorSpec::build(2, 1, 1, OrderingKind::Diagonal).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let f = random_form(2, 2, 1, &mut rng).sample(16).unwrap();
    assert!(matches!(duality_ratio(&spec, &f, &f), Err(Error::Precondition(_))));
    let phi = bump_form(2, 2, 0, 41).sample(32).unwrap();
    let f = spec.apply_t_total(&phi).unwrap();
    let one = GridField::from_fn(2, 32, |_| 1.0).unwrap();
    let h = Form::from_components(2, 2, 1, *f.field_shape(), [(lab(&[1]), one.clone()), (lab(&[2]), one)]).unwrap();
    assert!(matches!(duality_ratio(&spec, &f, &h), Err(Error::Precondition(_))));
}

#[test]
fn planar_duality_ratio_is_refinement_stable() {
    let spec = OperatorSpec::build(2, 1, 1, OrderingKind::Diagonal).unwrap();
    let phi = bump_form(2, 2, 0, 50);
    let f = spec.apply_t_total(&phi).unwrap();
    let h = bump_form(2, 2, 1, 51);
    let r64 = bump_duality_ratio(&spec, &f, &h, 64).unwrap().value;
    let r128 = bump_duality_ratio(&spec, &f, &h, 128).unwrap().value;
    assert!(r64.is_finite() && r64 > 0.0);
    assert!((r64 - r128).abs() / r128 < 0.05, "{r64} {r128}");
    let grid = duality_ratio(&spec, &f.sample(64).unwrap(), &h.sample(64).unwrap()).unwrap().value;
    assert!((grid - r64).abs() < 1e-9 * r64.max(1.0));
}

#[test]
fn adjoint_duality_ratio_goes_through_the_star() {
    let spec = OperatorSpec::build(2, 2, 1, OrderingKind::Diagonal).unwrap();
    let phi = bump_form(2, 3, 0, 60).sample(32).unwrap();
    let f = spec.apply_t_total(&phi).unwrap();
    let h = bump_form(2, 3, 1, 61).sample(32).unwrap();
    let g = f.hodge_star();
    let k = h.hodge_star();
    assert!(lp_norm_zero(&spec.apply_t_star_total(&g).unwrap()));
    let a = duality_ratio_adjoint(&spec, &g, &k).unwrap().value;
    let b = duality_ratio(&spec, &f, &h).unwrap().value;
    assert!((a - b).abs() <= 1e-12 * b);
}

fn lp_norm_zero(f: &Form<GridField>) -> bool {
    crate::forms::lp_norm(f, 2.0).unwrap() < 1e-10
}

// ‖f‖_r / ‖∇f‖_1 for a Gaussian of width σ on R^n, normalized measure.
fn classical_gn_gaussian(n: usize, sigma: f64) -> f64 {
    use statrs::function::gamma::gamma;
    let nf = n as f64;
    let r = nf / (nf - 1.0);
    let norm = (2.0 * PI).powf(-nf);
    let lr = (norm * (2.0 * PI * sigma * sigma / r).powf(nf / 2.0)).powf(1.0 / r);
    let sphere = 2.0 * PI.powf(nf / 2.0) / gamma(nf / 2.0);
    let radial = 2f64.powf((nf - 1.0) / 2.0) * sigma.powf(nf + 1.0) * gamma((nf + 1.0) / 2.0) / (sigma * sigma);
    lr / (norm * sphere * radial)
}

#[test]
fn classical_oracle_in_the_plane_is_sqrt_two() {
    assert!((classical_gn_gaussian(2, 0.3) - 2f64.sqrt()).abs() < 1e-12);
    assert!((classical_gn_gaussian(2, 0.7) - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn first_order_gn_matches_classical_value() {
    let spec = OperatorSpec::build(2, 1, 1, OrderingKind::Lexicographic).unwrap();
    let u = Form::scalar(2, gaussian(2, 0.3)).unwrap();
    let grid = gn_ratio(&spec, 0, &u.sample(128).unwrap(), GnOptions::default()).unwrap();
    let want = classical_gn_gaussian(2, 0.3);
    assert!((grid.value - want).abs() / want < 0.01, "{} {want}", grid.value);

    let spec = OperatorSpec::build(3, 1, 1, OrderingKind::Lexicographic).unwrap();
    let u = Form::scalar(3, gaussian(3, 0.3)).unwrap();
    let bump = bump_gn_ratio(&spec, 0, &u, 64, GnOptions::default()).unwrap();
    let want = classical_gn_gaussian(3, 0.3);
    assert!((bump.value - want).abs() / want < 0.01, "{} {want}", bump.value);
}

#[test]
fn gn_excluded_degree_needs_side_condition() {
    let spec = OperatorSpec::build(3, 1, 1, OrderingKind::Diagonal).unwrap();
    let u = bump_form(3, 3, 1, 70);
    assert!(matches!(
        bump_gn_ratio(&spec, 1, &u, 16, GnOptions::default()),
        Err(Error::Precondition(_))
    ));
    let r = bump_gn_ratio(&spec, 1, &u, 16, GnOptions { exploratory: true }).unwrap();
    assert!(r.value.is_finite());
    // 𝒯*(𝒯φ) need not vanish, but 𝒯(𝒯φ) does: q = 2 = n - 1 is allowed.
    let phi = bump_form(3, 3, 1, 71);
    let closed = spec.apply_top(&phi).unwrap();
    assert!(bump_gn_ratio(&spec, 2, &closed, 16, GnOptions::default()).is_ok());
    let u2 = bump_form(3, 3, 2, 72);
    assert!(bump_gn_ratio(&spec, 2, &u2, 16, GnOptions::default()).is_err());
}

#[test]
fn gn_top_degree_uses_only_the_adjoint() {
    let spec = OperatorSpec::build(2, 1, 1, OrderingKind::Diagonal).unwrap();
    let u = bump_form(2, 2, 2, 80);
    assert!(spec.apply_top(&u).unwrap().is_zero());
    let r = bump_gn_ratio(&spec, 2, &u, 32, GnOptions::default()).unwrap();
    assert!(r.value > 0.0 && r.value.is_finite());
    let zero = Form::zero(2, 2, 0, 2usize).unwrap();
    assert!(matches!(
        bump_gn_ratio(&spec, 0, &zero, 16, GnOptions::default()),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn first_order_gn_is_dilation_invariant() {
    let spec = OperatorSpec::build(2, 1, 1, OrderingKind::Diagonal).unwrap();
    let u = bump_form(2, 2, 0, 90);
    let base = bump_gn_ratio(&spec, 0, &u, 64, GnOptions::default()).unwrap().value;
    for s in [0.5, 2.0] {
        let us = u.map_fields(2, |c| c.dilate(s)).unwrap();
        let v = bump_gn_ratio(&spec, 0, &us, 64, GnOptions::default()).unwrap().value;
        assert!((v - base).abs() / base < 0.02, "s={s}: {v} vs {base}");
    }
}

fn tiny_config() -> SuiteConfig {
    SuiteConfig {
        specs: vec![SpecEntry {
            n: 2,
            k: 1,
            l: 1,
            ordering: OrderingKind::Diagonal,
        }],
        cases: 2,
        seed: 9,
        grid: 32,
        fine_grid: 64,
        dilations: vec![0.5, 1.0],
        hodge_grids: vec![32, 64],
        ..SuiteConfig::default()
    }
}

#[test]
fn empty_config_gives_empty_report() {
    let r = run_suite(&SuiteConfig::empty());
    assert!(r.records.is_empty() && r.summaries.is_empty());
    assert_eq!(r.max_duality_ratio, None);
    assert!(r.residual_checks_pass);
}

#[test]
fn suite_is_deterministic_and_complete() {
    let cfg = tiny_config();
    let a = run_suite(&cfg);
    let b = run_suite(&cfg);
    assert_eq!(a.to_json(), b.to_json());
    assert!(a.residual_checks_pass, "{}", a.to_json());
    // Two probes with three evaluation points each, plus two Hodge solves.
    assert_eq!(a.records.len(), 2 * (2 * 3 + 2));
    let h = &a.summaries[0].hodge_by_grid;
    assert!(h[0].1 >= h[1].1);
    assert!(a.records.iter().all(|r| !r.spec_hash.is_empty()));
    assert_eq!(a.summaries[0].ratios.len(), 2);
}

#[test]
fn suite_records_failures_without_aborting() {
    let mut cfg = tiny_config();
    cfg.duality_degrees = vec![0, 1];
    cfg.specs.push(SpecEntry {
        n: 1,
        k: 1,
        l: 1,
        ordering: OrderingKind::Diagonal,
    });
    let r = run_suite(&cfg);
    assert!(!r.residual_checks_pass);
    assert!(r.records.iter().any(|c| c.q == 0 && c.kind == CaseKind::Duality && c.error.is_some()));
    assert!(r.records.iter().any(|c| c.q == 1 && c.kind == CaseKind::Duality && c.ratio.is_some()));
    assert!(r.summaries[1].error.is_some());
}

#[test]
fn config_round_trips_and_fills_defaults() {
    let cfg: SuiteConfig = serde_json::from_str(r#"{"specs": [{"n": 2, "k": 2, "l": 1}], "cases": 3}"#).unwrap();
    assert_eq!(cfg.specs[0].ordering, OrderingKind::Diagonal);
    assert_eq!(cfg.grid, SuiteConfig::default().grid);
    let back: SuiteConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(back, cfg);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lift_then_reduce_is_identity(seed in 0u64..1000, k in 1u32..=3) {
        let spec = OperatorSpec::new(random_ordering(2, k, 1, k as usize + 1, seed).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_family(&spec, &mut rng);
        let f = vs_lift(&spec, &g).unwrap();
        let full = Label::full(spec.ambient_dim());
        let big = spec.ambient_dim();
        let h = Form::zero(2, big, big - 1, 2usize).unwrap();
        let (back, _) = vs_reduction(&spec, &f, &h, full).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn lift_transports_divergence(seed in 0u64..1000, k in 1u32..=2) {
        let spec = OperatorSpec::new(random_ordering(2, k, 1, k as usize + 1, seed).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 7);
        let g = random_family(&spec, &mut rng);
        let top = spec.apply_t_total(&vs_lift(&spec, &g).unwrap()).unwrap();
        prop_assert_eq!(top.coeff(Label::full(spec.ambient_dim())), k_divergence(&spec, &g).unwrap());
    }

    #[test]
    fn duality_ratio_is_homogeneous(seed in 0u64..200, c in 1i32..8) {
        let spec = OperatorSpec::build(2, 1, 1, OrderingKind::Diagonal).unwrap();
        let f = spec.apply_t_total(&bump_form(2, 2, 0, seed)).unwrap();
        let h = bump_form(2, 2, 1, seed + 1);
        let a = bump_duality_ratio(&spec, &f, &h, 32).unwrap().value;
        let hs = h.map_fields(2, |x| { let mut y = x.clone(); crate::forms::Field::scale(&mut y, &(c as f64 / 4.0)); y }).unwrap();
        let b = bump_duality_ratio(&spec, &f, &hs, 32).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
    }
}
