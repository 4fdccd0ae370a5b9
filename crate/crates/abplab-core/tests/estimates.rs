//! Cross-module properties of the discrete potential layer and the
//! equation layer: sup-convolution structure, contact duality, interior
//! bounds on randomized inputs, and the fiber logic of inhomogeneous
//! equations, including solver outputs feeding the estimate checks.

use abplab_core::abp::{
    classify_stencil, dual_fiber_contains, fiber_contains, modulus_delta,
    oscillation_bound_check, semiconvex_pipeline_check, solve_equation_2d, solve_ma_2d,
    EquationSpec, Jet2,
};
use abplab_core::operators::PolyOperator;
use abplab_core::potential::{
    alexandrov_check, contact_oracle, lower_contact_set, random_grid_fn,
    semiconvexity_modulus, sup_convolution, upper_contact_set, GridFn,
};
use abplab_core::rng::CounterRng;
use abplab_core::symmat::{random_psd, PsdStyle, SymMat};
use proptest::prelude::*;

fn small_grid(seed: u64) -> GridFn {
    random_grid_fn(vec![0.0, 0.0], vec![1.0, 0.8], vec![9, 7], seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sup_convolution_structure(seed in any::<u64>(), eps in 0.05f64..1.5) {
        let w = small_grid(seed);
        let once = sup_convolution(&w, eps).unwrap();
        for idx in 0..w.node_count() {
            prop_assert!(once.value(idx) >= w.value(idx) - 1e-12);
        }

        let wider = sup_convolution(&w, 2.0 * eps).unwrap();
        for idx in 0..w.node_count() {
            prop_assert!(
                wider.value(idx) >= once.value(idx) - 1e-12,
                "sup-convolution must grow with eps"
            );
        }

        let tol = 1e-9 * (1.0 + semiconvexity_modulus(&w).abs());
        prop_assert!(semiconvexity_modulus(&once) <= 1.0 / eps + tol);

        // composing two eps-width steps never beats a single 2eps step
        let twice = sup_convolution(&once, eps).unwrap();
        for idx in 0..w.node_count() {
            prop_assert!(twice.value(idx) <= wider.value(idx) + 1e-12);
        }
    }

    #[test]
    fn lower_contact_is_upper_contact_of_negation(seed in any::<u64>()) {
        let v = small_grid(seed);
        let neg = v.with_values(v.values().iter().map(|x| -x).collect()).unwrap();
        let lower = lower_contact_set(&v);
        let upper = upper_contact_set(&neg);
        for idx in 0..v.node_count() {
            prop_assert_eq!(lower.is_contact(idx), upper.is_contact(idx), "node {}", idx);
        }
    }

    #[test]
    fn alexandrov_holds_on_semiconvex_perturbations(seed in any::<u64>(), amp in 0.0f64..0.3) {
        // concave cap plus two smooth bumps: curvature stays grid-resolved
        let m = 17;
        let mut rng = CounterRng::stream(seed, 11);
        let (cx, cy) = (0.6 * rng.uniform() - 0.3, 0.6 * rng.uniform() - 0.3);
        let (bx, by) = (0.8 * rng.uniform() - 0.4, 0.8 * rng.uniform() - 0.4);
        let u = GridFn::from_fn(vec![-1.0, -1.0], vec![1.0, 1.0], vec![m, m], |x| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            let b1 = (-((x[0] - cx).powi(2) + (x[1] - cy).powi(2)) / 0.2).exp();
            let b2 = (-((x[0] - bx).powi(2) + (x[1] - by).powi(2)) / 0.35).exp();
            -0.5 * r2 + amp * b1 + 0.5 * amp * b2
        })
        .unwrap();
        let rec = alexandrov_check(&u);
        let h = u.min_spacing();
        prop_assert!(rec.slack >= -5.0 * h, "slack = {}, h = {h}", rec.slack);
    }

    #[test]
    fn fibers_are_monotone_along_psd_directions(seed in any::<u64>()) {
        let domain = GridFn::from_fn(vec![0.0, 0.0], vec![1.0, 1.0], vec![5, 5], |_| 0.0).unwrap();
        let ops = vec![
            PolyOperator::det(2).unwrap(),
            PolyOperator::k_hessian(2, 2).unwrap(),
            PolyOperator::p_fold_sum(2, 2).unwrap(),
            PolyOperator::trace(2).unwrap(),
            PolyOperator::norm_sq_det(2).unwrap(),
        ];
        let x = [0.5, 0.5];
        for g in ops {
            let eq = EquationSpec::new(g, &domain, |_| 0.8, None).unwrap();
            let a = random_psd(2, seed, PsdStyle::Generic).add_scaled_identity(1.0);
            let jet = Jet2::new(0.0, vec![0.0; 2], a.clone()).unwrap();
            if !fiber_contains(&eq, &x, &jet).unwrap() {
                continue;
            }
            let p = random_psd(2, seed ^ 0xabcd, PsdStyle::Generic);
            let bumped = Jet2::new(0.0, vec![0.0; 2], a.add(&p).unwrap()).unwrap();
            prop_assert!(
                fiber_contains(&eq, &x, &bumped).unwrap(),
                "{}: fiber lost under a PSD bump",
                eq.operator().spec_str()
            );
        }
    }

    #[test]
    fn pipeline_accepts_caps_across_eta(seed in any::<u64>(), eta in 0.1f64..0.5) {
        let m = 17;
        let domain =
            GridFn::from_fn(vec![-1.0, -1.0], vec![1.0, 1.0], vec![m, m], |_| 0.0).unwrap();
        let eq =
            EquationSpec::new(PolyOperator::det(2).unwrap(), &domain, |_| 1.0, Some(1.0)).unwrap();
        let mut rng = CounterRng::stream(seed, 3);
        let q = 0.6 + 0.35 * rng.uniform();
        let w = GridFn::from_fn(vec![-1.0, -1.0], vec![1.0, 1.0], vec![m, m], |x| {
            -0.5 * q * (x[0] * x[0] + x[1] * x[1])
        })
        .unwrap();
        let run = semiconvex_pipeline_check(&eq, &w, eta).unwrap();
        prop_assert!(run.report.passed, "min_slack = {}", run.report.min_slack);
        prop_assert!((run.delta - modulus_delta(&eq, eta)).abs() == 0.0);
    }
}

#[test]
fn fiber_duality_exhaustive_on_eigenvalue_lattice() {
    let domain = GridFn::from_fn(vec![0.0, 0.0], vec![1.0, 1.0], vec![5, 5], |_| 0.0).unwrap();
    let lattice = [-2.0, -1.0, 0.0, 1.0, 2.0];
    // f level chosen off the lattice's determinant values so the membership
    // band cannot blur the complementation
    let ops = vec![
        PolyOperator::det(2).unwrap(),
        PolyOperator::k_hessian(1, 2).unwrap(),
        PolyOperator::norm_sq_det(2).unwrap(),
    ];
    for g in ops {
        let eq = EquationSpec::new(g, &domain, |_| 0.7, None).unwrap();
        let mut x = [0.0; 2];
        for node in 0..domain.node_count() {
            domain.coord(node, &mut x);
            for &l0 in &lattice {
                for &l1 in &lattice {
                    let a = SymMat::diag(&[l0, l1]);
                    let jet = Jet2::new(0.0, vec![0.0; 2], a.clone()).unwrap();
                    let reflected = Jet2::new(0.0, vec![0.0; 2], a.scale(-1.0)).unwrap();
                    let dual = dual_fiber_contains(&eq, &x, &jet).unwrap();
                    let complement = !fiber_contains(&eq, &x, &reflected).unwrap();
                    assert_eq!(
                        dual,
                        complement,
                        "{}: eigs ({l0},{l1}) at node {node}",
                        eq.operator().spec_str()
                    );
                }
            }
        }
    }
}

#[test]
fn fiberegularity_over_node_pairs() {
    let domain = GridFn::from_fn(vec![0.0, 0.0], vec![1.0, 1.0], vec![9, 9], |_| 0.0).unwrap();
    let eq = EquationSpec::new(
        PolyOperator::det(2).unwrap(),
        &domain,
        |x| 1.0 + 0.5 * x[0],
        Some(0.5),
    )
    .unwrap();
    let jets: Vec<SymMat> = vec![
        SymMat::diag(&[1.8, 1.8]),
        SymMat::diag(&[3.0, 0.6]),
        random_psd(2, 7, PsdStyle::Generic).add_scaled_identity(1.4),
    ];
    let mut x = [0.0; 2];
    let mut y = [0.0; 2];
    for eta in [0.3, 0.6] {
        let delta = modulus_delta(&eq, eta);
        assert!((delta - eta * eta / 0.5).abs() < 1e-15);
        let mut checked = 0usize;
        for a in &jets {
            for xi in 0..domain.node_count() {
                domain.coord(xi, &mut x);
                let jet = Jet2::new(0.0, vec![0.0; 2], a.clone()).unwrap();
                if !fiber_contains(&eq, &x, &jet).unwrap() {
                    continue;
                }
                let lifted =
                    Jet2::new(0.0, vec![0.0; 2], a.add_scaled_identity(eta)).unwrap();
                for yi in 0..domain.node_count() {
                    domain.coord(yi, &mut y);
                    let dist =
                        ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
                    if dist < delta {
                        checked += 1;
                        assert!(
                            fiber_contains(&eq, &y, &lifted).unwrap(),
                            "eta = {eta}: fiber at {x:?} not carried to {y:?}"
                        );
                    }
                }
            }
        }
        assert!(checked > 100, "want a meaningful pair count, got {checked}");
    }
}

#[test]
fn contact_oracle_agrees_with_hull_flags() {
    // seeds 19 and 34 produce contact nodes whose slope-space violation
    // valleys are nearly degenerate; they are kept here as hard cases
    for s in [19u64, 34, 0, 7, 11, 23, 29, 41, 47, 53] {
        let u = random_grid_fn(vec![0.0, 0.0], vec![1.0, 1.3], vec![21, 21], 0x0C7 + s).unwrap();
        let fast = upper_contact_set(&u);
        let slow = contact_oracle(&u);
        for idx in 0..u.node_count() {
            assert_eq!(fast.flags()[idx], slow[idx], "seed {s}: node {idx}");
        }
    }
}

#[test]
fn solver_outputs_satisfy_the_oscillation_bound() {
    let m = 17;
    let out = solve_ma_2d(
        |_| 1.0,
        |x| 0.5 * (x[0] * x[0] + x[1] * x[1]),
        vec![0.0, 0.0],
        vec![1.0, 1.0],
        vec![m, m],
        1e-10,
        20_000,
    )
    .unwrap();
    let grid = out.admissible_grid().unwrap();
    let domain = GridFn::from_fn(vec![0.0, 0.0], vec![1.0, 1.0], vec![m, m], |_| 0.0).unwrap();
    let eq = EquationSpec::new(PolyOperator::det(2).unwrap(), &domain, |_| 1.0, None).unwrap();
    let rec = oscillation_bound_check(&eq, grid).unwrap();
    assert!(rec.slack >= -5.0 * grid.min_spacing(), "slack = {}", rec.slack);
    let classes = classify_stencil(&eq, grid, 5.0 * grid.min_spacing()).unwrap();
    assert!(classes.interior_admissible_fraction(grid) >= 0.99);

    // harmonic solve under the trace operator: zero forcing, pure boundary
    let out = solve_equation_2d(
        &PolyOperator::trace(2).unwrap(),
        |_| 0.0,
        |x| x[0] * x[0] - x[1] * x[1],
        vec![-1.0, -1.0],
        vec![1.0, 1.0],
        vec![m, m],
        1e-9,
        10_000,
        false,
    )
    .unwrap();
    let grid = out.admissible_grid().unwrap();
    let domain = GridFn::from_fn(vec![-1.0, -1.0], vec![1.0, 1.0], vec![m, m], |_| 0.0).unwrap();
    let eq = EquationSpec::new(PolyOperator::trace(2).unwrap(), &domain, |_| 0.0, None).unwrap();
    let rec = oscillation_bound_check(&eq, grid).unwrap();
    assert_eq!(rec.error_term, 0.0, "zero forcing contributes nothing");
    assert!(rec.slack >= 0.0, "discrete maximum principle: {}", rec.slack);
}
