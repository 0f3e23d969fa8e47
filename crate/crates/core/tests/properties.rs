use proptest::prelude::*;
use retarded_bounds::bounds::{self, compute_tau, in_domain, remark_tau};
use retarded_bounds::corollaries::{log_case_bound, sun_thm21_bound, sun_thm22_bound, LogCaseParams, PowerCaseParams};
use retarded_bounds::oracle::{generate_random_instance, Family};
use retarded_bounds::problem::{Kernel, KernelRole, Role, ScalarFn};
use retarded_bounds::{Execution, Grid, TauSearch, TheoremForm, TransformTables};

fn family() -> impl Strategy<Value = Family> {
    prop::sample::select(Family::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn bound_is_nondecreasing_and_above_c(seed in 0u64..10_000, fam in family()) {
        let inst = generate_random_instance(seed, fam);
        let t = TransformTables::build(&inst).unwrap();
        let grid = Grid::uniform(inst.t_max, 33).unwrap();
        let curve = bounds::bound_curve(&inst, &t, inst.form, &grid, &TauSearch::for_instance(&inst), Execution::Sequential).unwrap();
        let mut prev = 0.0;
        for (tt, v) in grid.nodes().iter().zip(&curve.values) {
            let Some(v) = v else { continue };
            prop_assert!(*v >= prev * (1.0 - 1e-12), "t = {}: {} < {}", tt, v, prev);
            let floor = inst.phi_inv(inst.c.at(*tt)).unwrap();
            prop_assert!(*v >= floor * (1.0 - 1e-9), "t = {}: {} below phi^-1(c) = {}", tt, v, floor);
            prev = *v;
        }
    }

    #[test]
    fn tau_is_consistent(seed in 0u64..10_000, fam in family()) {
        let inst = generate_random_instance(seed, fam);
        let t = TransformTables::build(&inst).unwrap();
        let search = TauSearch::for_instance(&inst);
        let tau = compute_tau(&inst, &t, &search).unwrap();
        prop_assert!(tau.tau > 0.0 && tau.tau <= inst.t_max);
        prop_assert_eq!(tau.capped, tau.tau == inst.t_max);
        for k in 0..=16 {
            let s = tau.tau * k as f64 / 16.0;
            prop_assert!(in_domain(&inst, &t, inst.form, s, search.safety_margin), "outside at {}", s);
        }
        if !tau.capped {
            let past = (tau.tau + 1e-8).min(inst.t_max);
            prop_assert!(!in_domain(&inst, &t, inst.form, past, search.safety_margin));
        }
        let fixed = TauSearch { delta: tau.tau, ..search };
        let r = remark_tau(&inst, &t, &fixed).unwrap();
        prop_assert!(r.tau <= tau.tau + search.tol);
        let grid = Grid::uniform(inst.t_max, 17).unwrap();
        let curve = bounds::bound_curve(&inst, &t, inst.form, &grid, &search, Execution::Sequential).unwrap();
        for (s, v) in grid.nodes().iter().zip(&curve.values) {
            prop_assert_eq!(v.is_some(), *s <= tau.tau, "t = {}", s);
        }
    }

    #[test]
    fn execution_modes_agree(seed in 0u64..10_000, fam in family()) {
        let inst = generate_random_instance(seed, fam);
        let t = TransformTables::build(&inst).unwrap();
        let grid = Grid::uniform(inst.t_max, 21).unwrap();
        let search = TauSearch::for_instance(&inst);
        let a = bounds::bound_curve(&inst, &t, inst.form, &grid, &search, Execution::Sequential).unwrap();
        let b = bounds::bound_curve(&inst, &t, inst.form, &grid, &search, Execution::Parallel).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn larger_c_gives_larger_bound(seed in 0u64..10_000, fam in family(), k in 1.05f64..2.0) {
        let inst = generate_random_instance(seed, fam);
        let mut big = inst.clone();
        big.c = ScalarFn::parse(Role::C, &format!("{k:?}*({})", inst.c.expr())).unwrap();
        let grid = Grid::uniform(inst.t_max, 9).unwrap();
        let a = bounds::bound_thm1(&inst, &TransformTables::build(&inst).unwrap(), &grid).unwrap();
        let b = bounds::bound_thm1(&big, &TransformTables::build(&big).unwrap(), &grid).unwrap();
        for (va, vb) in a.values.iter().zip(&b.values) {
            if let (Some(va), Some(vb)) = (va, vb) {
                prop_assert!(vb >= va, "{} < {}", vb, va);
            }
        }
    }
}

fn power_case() -> impl Strategy<Value = (f64, f64, f64)> {
    (1.5f64..4.0, 0.15f64..0.8, 0.5f64..2.0).prop_map(|(m, frac, c)| (m, m * frac, c))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, ..ProptestConfig::default() })]

    #[test]
    fn power_corollaries_match_the_general_bound(
        (m, n, c) in power_case(),
        w in prop::sample::select(vec!["1", "1 + x", "sqrt(1 + x)", "2 + x^2"]),
        f in prop::sample::select(vec!["1", "0.5 + s", "exp(-s)", "0"]),
        g in prop::sample::select(vec!["0", "s", "0.5", "1/(1 + s)"]),
        alpha in prop::sample::select(vec!["t", "t/2", "t*t/(1 + t)"]),
        two in any::<bool>(),
        t in 0.0f64..1.0,
    ) {
        let params = PowerCaseParams::new(m, n, c).unwrap();
        let f = Kernel::parse(KernelRole::F, f).unwrap();
        let g = Kernel::parse(KernelRole::G, g).unwrap();
        let w = ScalarFn::parse(Role::W, w).unwrap();
        let alpha = ScalarFn::parse(Role::Alpha, alpha).unwrap();
        let form = if two { TheoremForm::Two } else { TheoremForm::One };
        let inst = params.induced_instance(&f, &g, &w, &alpha, form, 1.0).unwrap();
        let tables = TransformTables::build(&inst).unwrap();
        let tau = compute_tau(&inst, &tables, &TauSearch::for_instance(&inst)).unwrap();
        prop_assume!(t <= tau.tau);
        let closed = match form {
            TheoremForm::One => sun_thm21_bound(&params, &f, &g, &w, &alpha, t),
            TheoremForm::Two => sun_thm22_bound(&params, &f, &g, &w, &alpha, t),
        }.unwrap();
        let general = bounds::bound_at(&inst, &tables, form, t).unwrap();
        prop_assert!((general - closed).abs() <= 1e-6 * closed, "{} vs {}", general, closed);
    }

    #[test]
    fn power_case_g_is_a_power((m, n, c) in power_case(), x in 1e-6f64..1e6) {
        let params = PowerCaseParams::new(m, n, c).unwrap();
        let f = Kernel::parse(KernelRole::F, "1").unwrap();
        let g = Kernel::parse(KernelRole::G, "0").unwrap();
        let w = ScalarFn::parse(Role::W, "1").unwrap();
        let alpha = ScalarFn::parse(Role::Alpha, "t").unwrap();
        let inst = params.induced_instance(&f, &g, &w, &alpha, TheoremForm::One, 1.0).unwrap();
        let tables = TransformTables::build(&inst).unwrap();
        let want = x.powf((m - n) / m);
        prop_assert!((params.g(x) - want).abs() <= 1e-12 * want);
        let got = tables.g(x).unwrap();
        prop_assert!((got - want).abs() <= 1e-8 * want, "G({}) = {} vs {}", x, got, want);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn log_corollary_matches_the_general_bound(
        n in 0.5f64..3.0,
        x0 in 0.2f64..1.0,
        dc in 0.1f64..1.0,
        w in prop::sample::select(vec!["1 + x", "2 + x", "1 + x^2"]),
        t in 0.0f64..0.3,
    ) {
        let params = LogCaseParams::new(x0 + dc, n, x0).unwrap();
        let f = Kernel::parse(KernelRole::F, "1").unwrap();
        let w = ScalarFn::parse(Role::W, w).unwrap();
        let alpha = ScalarFn::parse(Role::Alpha, "t").unwrap();
        let inst = params.induced_instance(&f, &w, &alpha, 1.0).unwrap();
        let tables = TransformTables::build(&inst).unwrap();
        let search = TauSearch::for_instance(&inst);
        let tau = compute_tau(&inst, &tables, &search).unwrap();
        prop_assume!(t < 0.9 * tau.tau);
        let closed = log_case_bound(&params, &f, &w, &alpha, t).unwrap();
        let general = bounds::bound_at(&inst, &tables, TheoremForm::One, t).unwrap();
        prop_assert!((general - closed).abs() <= 1e-6 * closed, "{} vs {}", general, closed);
    }
}
