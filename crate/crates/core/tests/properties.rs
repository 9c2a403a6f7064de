use aaflow_core::algebra::{self, BalancedParams, HermitianMetric};
use aaflow_core::connections;
use aaflow_core::exterior::{self, ComplexForm, KForm, StructureConstants};
use aaflow_core::flow::{self, FlowConfig};
use num_complex::Complex64;
use proptest::prelude::*;

fn coeff() -> impl Strategy<Value = f64> {
    -2.0..2.0f64
}

fn params() -> impl Strategy<Value = BalancedParams> {
    prop::array::uniform6(coeff()).prop_map(BalancedParams::from_array)
}

fn form(degree: usize) -> impl Strategy<Value = KForm> {
    prop::collection::vec(coeff(), exterior::dimension(degree))
        .prop_map(move |c| KForm::from_coeffs(degree, c).unwrap())
}

fn any_form() -> impl Strategy<Value = KForm> {
    (0usize..=6).prop_flat_map(form)
}

fn structure() -> impl Strategy<Value = StructureConstants> {
    prop_oneof![
        params().prop_map(|p| p.structure_constants()),
        Just(flow::nilpotent_example()),
    ]
}

fn real_11() -> impl Strategy<Value = KForm> {
    prop::collection::vec(coeff(), 9).prop_map(|w| {
        let mut f = KForm::zero(2);
        for (b, x) in exterior::real_11_basis().iter().zip(w) {
            f += &b.scale(x);
        }
        f
    })
}

fn metric() -> impl Strategy<Value = HermitianMetric> {
    prop::collection::vec(-0.4..0.4f64, 9).prop_map(|w| {
        let mut nu = exterior::reference_fundamental_form().scale(2.0);
        for (b, x) in exterior::real_11_basis().iter().zip(w) {
            nu += &b.scale(x);
        }
        HermitianMetric::from_fundamental_form(&nu).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn d_squared_vanishes(c in structure(), a in any_form()) {
        prop_assume!(a.degree() <= 4);
        let dd = c.d(&c.d(&a).unwrap()).unwrap();
        prop_assert!(dd.max_abs() < 1e-12);
    }

    #[test]
    fn leibniz(c in structure(), (a, b) in (0usize..=3).prop_flat_map(|k| (form(k), form(5 - k - (k % 2))))) {
        let sign = if a.degree() % 2 == 0 { 1.0 } else { -1.0 };
        let lhs = c.d(&a.wedge(&b).unwrap()).unwrap();
        let rhs = c.d(&a).unwrap().wedge(&b).unwrap() + a.wedge(&c.d(&b).unwrap()).unwrap().scale(sign);
        prop_assert!((&lhs - &rhs).max_abs() < 1e-11);
    }

    #[test]
    fn wedge_graded_commutative(a in any_form(), b in any_form()) {
        prop_assume!(a.degree() + b.degree() <= 6);
        let sign = if (a.degree() * b.degree()) % 2 == 0 { 1.0 } else { -1.0 };
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap().scale(sign);
        prop_assert!((&ab - &ba).max_abs() < 1e-12);
    }

    #[test]
    fn dc_is_i_dbar_minus_d(c in structure(), a in any_form()) {
        prop_assume!(a.degree() <= 5);
        let ac = a.to_complex();
        let via = (&c.partial_bar(&ac).unwrap() - &c.partial(&ac).unwrap()).scale(Complex64::new(0.0, 1.0));
        prop_assert!((&c.dc(&a).unwrap().to_complex() - &via).max_abs() < 1e-11);
    }

    #[test]
    fn bidegree_parts_reconstruct_and_diagonalize_j(re in any_form(), im_seed in any::<u64>()) {
        let k = re.degree();
        let im = re.scale(((im_seed % 7) as f64) - 3.0).j_action();
        let f = ComplexForm::from_parts(&re, &im);
        let mut sum = ComplexForm::zero(k);
        for (p, part) in exterior::bidegree_split(&f).into_iter().enumerate() {
            let q = k - p;
            let eig = Complex64::new(0.0, 1.0).powi(q as i32 - p as i32);
            prop_assert!((&part.j_action() - &part.scale(eig)).max_abs() < 1e-12);
            sum += &part;
        }
        prop_assert!((&sum - &f).max_abs() < 1e-12);
    }

    #[test]
    fn lefschetz_roundtrip(nu in metric(), beta in real_11()) {
        let nf = nu.fundamental_form();
        let phi = nf.wedge(&beta).unwrap().scale(exterior::LEFSCHETZ_FACTOR);
        let back = exterior::lefschetz_solve(&phi, &nf).unwrap();
        prop_assert!((&back - &beta).max_abs() < 1e-11);
    }

    #[test]
    fn metric_form_roundtrip(nu in metric()) {
        let back = HermitianMetric::from_fundamental_form(&nu.fundamental_form()).unwrap();
        prop_assert!((back.matrix() - nu.matrix()).amax() < 1e-15);
        let m = algebra::matrix_from_form(&nu.fundamental_form());
        prop_assert_eq!(algebra::form_from_matrix(&m), nu.fundamental_form());
    }

    #[test]
    fn balanced_structures(p in params()) {
        let s = p.structure();
        prop_assert!(s.integrability_residual() < 1e-12);
        prop_assert!(s.balanced_check());
        prop_assert!(s.canonical_trivial_check());
        prop_assert!(s.d_psi_norm() < 1e-12);
        prop_assert!(s.d_omega_sq_norm() < 1e-12);
        prop_assert!(p.structure_constants().jacobi_residual() < 1e-12);
        prop_assert_eq!(s.to_balanced_params(), Some(p));
    }

    #[test]
    fn params_json_roundtrip(p in params()) {
        let text = serde_json::to_string(&p).unwrap();
        let back: BalancedParams = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn closed_forms_match_generic(p in params(), tau in -3.0..3.0f64) {
        let c = p.structure_constants();
        let theta = connections::gauduchon_forms(&c, tau);
        let omega = connections::curvature_forms(&theta, &c);
        prop_assert!(connections::max_distance(omega.forms(), connections::closed_form_curvature(&p, tau).forms()) < 1e-10);
        let trace = connections::trace_curvature_wedge(&omega);
        prop_assert!((&trace - &connections::closed_form_trace(&p, tau)).max_abs() < 1e-10);
    }

    #[test]
    fn kahler_curvature_vanishes(p in params(), tau in -3.0..3.0f64) {
        let x = (p.a23 - p.a32) / 2.0;
        let y = (p.a24 + p.a35) / 2.0;
        let k = BalancedParams::new(0.0, x, y, p.a25, -x, y);
        prop_assert!(k.kahler_check());
        let c = k.structure_constants();
        let omega = connections::curvature_forms(&connections::gauduchon_forms(&c, tau), &c);
        prop_assert!(omega.max_abs() < 1e-12);
    }

    #[test]
    fn bracket_rhs_closure(p in params(), tau in -3.0..3.0f64, ap in -2.0..2.0f64) {
        let cfg = FlowConfig { tau, alpha_prime: ap, ..FlowConfig::default() };
        let m = flow::bracket_rhs_matrix(&p.matrix(), &cfg);
        let j = algebra::j_n1();
        prop_assert!((m * j - j * m).amax() < 1e-12);
        prop_assert!(m.trace().abs() < 1e-12);
        prop_assert!((j * m).trace().abs() < 1e-12);
        prop_assert!((flow::bracket_rhs(&p, &cfg).matrix() - m).amax() < 1e-12);
    }

    #[test]
    fn stationary_iff_kahler_or_zero_slope(p in params(), tau in -3.0..3.0f64) {
        let cfg = FlowConfig { tau, ..FlowConfig::default() };
        let rhs = flow::bracket_rhs(&p, &cfg).max_abs();
        if p.kahler_check() {
            prop_assert!(rhs < 1e-12);
        } else {
            prop_assert!(rhs > 0.0);
        }
        let kf = connections::tau_factor(tau) * p.norm_aplus_sq();
        prop_assume!(kf.abs() > 1e-3);
        let zero = FlowConfig { tau, alpha_prime: 4.0 / kf, ..FlowConfig::default() };
        prop_assert!(flow::slope_f(&p, &zero).abs() < 1e-12);
        prop_assert!(flow::bracket_rhs(&p, &zero).max_abs() < 1e-12);
    }

    #[test]
    fn reduction_certificate(p in params(), tau in -3.0..3.0f64, ap in -2.0..2.0f64, psi in 0.5..2.0f64) {
        let cfg = FlowConfig { tau, alpha_prime: ap, psi_norm_sq_inv: psi, ..FlowConfig::default() };
        let a = p.matrix();
        let rhs = flow::bracket_rhs_matrix(&a, &cfg);
        prop_assert!((flow::reduced_pi_rhs(&a, &cfg) - rhs).amax() < 1e-12 * rhs.amax().max(1.0));
    }

    #[test]
    fn slope_agrees_with_k(p in params(), tau in -3.0..3.0f64, ap in -2.0..2.0f64) {
        let cfg = FlowConfig { tau, alpha_prime: ap, ..FlowConfig::default() };
        let k = connections::proportionality_K(&p, tau);
        prop_assert!((flow::slope_f(&p, &cfg) - (1.0 - ap / 4.0 * k)).abs() < 1e-12);
    }
}
