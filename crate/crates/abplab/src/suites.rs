//! The batch suites behind `abplab run`: each takes its section of the
//! config plus a derived seed and yields `CheckReport`s. Suites are pure
//! functions of (config, seed), which is what makes whole runs
//! byte-reproducible.

use crate::config::{Config, Suite};
use crate::forms::{BoundaryForm, FForm};
use crate::gridio::write_grid_csv;
use abplab_core::abp::{
    c11_oscillation_check, classify_stencil, oscillation_bound_check,
    semiconvex_pipeline_check, solve_ma_2d, solve_equation_2d, EquationSpec, SolveOutcome,
};
use abplab_core::majorization::{coefficient_condition, dm_sweep, maclaurin_sweep};
use abplab_core::operators::{OpKind, PolyOperator};
use abplab_core::potential::{alexandrov_check, alexandrov_lower_check, GridFn};
use abplab_core::report::{CheckReport, SlackTracker, Witness};
use abplab_core::rng::CounterRng;
use abplab_core::symmat::random_symmetric_with;
use anyhow::{anyhow, Result};

/// Runs every suite in the config, sequentially or one thread per suite;
/// per-suite seeds are derived up front, so the two modes emit identical
/// reports.
pub fn run_config(cfg: &Config, parallel: bool) -> Result<Vec<CheckReport>> {
    let jobs: Vec<(u64, &Suite)> = cfg
        .suites
        .iter()
        .enumerate()
        .map(|(i, s)| (cfg.seed ^ (i as u64).wrapping_mul(0x9e3779b97f4a7c15), s))
        .collect();
    if !parallel {
        let mut out = Vec::new();
        for (seed, suite) in jobs {
            out.extend(run_suite(suite, seed)?);
        }
        return Ok(out);
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .into_iter()
            .map(|(seed, suite)| scope.spawn(move || run_suite(suite, seed)))
            .collect();
        let mut out = Vec::new();
        for h in handles {
            out.extend(h.join().map_err(|_| anyhow!("suite thread panicked"))??);
        }
        Ok(out)
    })
}

pub fn run_suite(suite: &Suite, seed: u64) -> Result<Vec<CheckReport>> {
    match suite {
        Suite::Ops { operators } => Ok(ops_suite(operators)),
        Suite::Hyperbolic { operators, samples } => {
            Ok(hyperbolic_suite(operators, *samples, seed))
        }
        Suite::Central { operators, tol, expect } => Ok(central_suite(operators, *tol, *expect)),
        Suite::Dirichlet { operators, samples } => Ok(operators
            .iter()
            .map(|g| g.is_dirichlet(*samples, seed))
            .collect()),
        Suite::Ellipticity { operators, samples } => Ok(operators
            .iter()
            .map(|g| g.degenerate_ellipticity_check(*samples, seed))
            .collect()),
        Suite::Tame { operators, samples, eta } => {
            Ok(tame_suite(operators, *samples, *eta, seed))
        }
        Suite::Majorize { operators, samples, hunt } => Ok(operators
            .iter()
            .map(|g| dm_sweep(g, *samples, seed, *hunt))
            .collect()),
        Suite::Maclaurin { n, samples } => Ok(vec![maclaurin_sweep(*n, *samples, seed)]),
        Suite::CoeffCond { operators, taus, tol } => Ok(operators
            .iter()
            .map(|g| coefficient_condition(g, *taus, seed, *tol))
            .collect()),
        Suite::Alexandrov { hs, bumps } => Ok(vec![alexandrov_suite(hs, *bumps, seed)]),
        Suite::Pipeline { operator, f, lipschitz, eta, shape } => {
            pipeline_suite(operator, f, *lipschitz, *eta, *shape)
        }
        Suite::Oscillation { shape, disk_shape } => oscillation_suite(*shape, *disk_shape),
        Suite::Solve { operator, f, boundary, shape, boxed, tol, max_iter, out, experimental } => {
            solve_suite(
                operator,
                f,
                *boundary,
                *shape,
                *boxed,
                *tol,
                *max_iter,
                out.as_deref(),
                *experimental,
            )
        }
    }
}

fn ops_suite(operators: &[PolyOperator]) -> Vec<CheckReport> {
    operators
        .iter()
        .map(|g| {
            let mut r = CheckReport::evaluated("ops", g.spec_str(), 0, 0.0, 0.0, 0.0);
            r.push_note(format!(
                "dim = {}, degree = {}, value_at_identity = {}",
                g.dim(),
                g.degree(),
                g.value_at_identity()
            ));
            match g.is_i_central(1e-6) {
                Some(k) => r.push_note(format!("I-central with k = {k:.9}")),
                None => r.push_note("not I-central at tol 1e-6".to_string()),
            }
            r
        })
        .collect()
}

fn hyperbolic_suite(operators: &[PolyOperator], samples: usize, seed: u64) -> Vec<CheckReport> {
    operators
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let mut rng = CounterRng::stream(seed, i as u64);
            let mut tracker = SlackTracker::new();
            for _ in 0..samples {
                let a = random_symmetric_with(&mut rng, g.dim());
                let budget = 1e-8 * (1.0 + a.frobenius_norm());
                match g.garding_eigenvalues(&a, 1e-8) {
                    Ok(spec) => {
                        tracker.observe(budget - spec.max_imag(), || Witness::Matrix { a: a.clone() })
                    }
                    Err(e) => {
                        tracker.observe(-1.0, || Witness::Text { note: format!("{e}") });
                    }
                }
            }
            let mut r = tracker.into_report("hyperbolic", g.spec_str(), 0.0);
            r.push_note(
                "slack = realness budget - max imaginary part of the radial roots".to_string(),
            );
            r
        })
        .collect()
}

fn central_suite(operators: &[PolyOperator], tol: f64, expect: Option<f64>) -> Vec<CheckReport> {
    operators
        .iter()
        .map(|g| {
            let mut r = match (g.is_i_central(tol), expect) {
                (Some(k), Some(e)) => {
                    let budget = tol * (1.0 + e.abs());
                    let mut r = CheckReport::evaluated(
                        "central",
                        g.spec_str(),
                        1,
                        budget - (k - e).abs(),
                        budget - (k - e).abs(),
                        0.0,
                    );
                    r.push_note(format!("measured k = {k:.10}, expected {e}"));
                    r
                }
                (Some(k), None) => {
                    let mut r = CheckReport::evaluated("central", g.spec_str(), 1, 0.0, 0.0, 0.0);
                    r.push_note(format!("measured k = {k:.10}"));
                    r
                }
                (None, _) => {
                    let mut r =
                        CheckReport::evaluated("central", g.spec_str(), 1, -1.0, -1.0, 0.0);
                    r.push_note(format!(
                        "gradient at I is not a positive multiple of I within tol {tol}"
                    ));
                    r
                }
            };
            r.push_note(format!("centrality tol = {tol}"));
            r
        })
        .collect()
}

fn tame_suite(operators: &[PolyOperator], samples: usize, eta: f64, seed: u64) -> Vec<CheckReport> {
    operators
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let mut rng = CounterRng::stream(seed, 900 + i as u64);
            let mut tracker = SlackTracker::new();
            let mut min_absolute = f64::INFINITY;
            let mut errored = 0usize;
            let deg = g.degree() as i32;
            for _ in 0..samples {
                let gap = abplab_core::operators::sample_cone_closure(g, &mut rng)
                    .and_then(|a| g.tameness_gap(&a, eta).map(|gap| (a, gap)));
                match gap {
                    Ok((a, gap)) => {
                        min_absolute = min_absolute.min(gap);
                        let scale = (1.0 + a.frobenius_norm()).powi(deg);
                        tracker.observe(gap / scale, || Witness::Matrix { a: a.clone() });
                    }
                    Err(_) => {
                        // boundary projection can land a hair outside the
                        // closed cone; such samples carry no tameness claim
                        errored += 1;
                    }
                }
            }
            if errored == samples && samples > 0 {
                return CheckReport::skipped_with_reason(
                    "tame",
                    g.spec_str(),
                    "no cone samples available (operator has no radial root machinery)"
                        .to_string(),
                );
            }
            let mut r = tracker.into_report("tame", g.spec_str(), 1e-9);
            r.push_note(format!(
                "gap = g(A + eta I) - g(A) - g(I) eta^N at eta = {eta}, \
                 normalized by (1 + |A|_F)^N"
            ));
            if min_absolute.is_finite() {
                r.push_note(format!("min absolute gap = {min_absolute:.6e}"));
            }
            r
        })
        .collect()
}

fn alexandrov_suite(hs: &[f64], bumps: usize, seed: u64) -> CheckReport {
    let mut tracker = SlackTracker::new();
    let mut anchor_note = None;
    for &h in hs {
        let m = (2.0 / h).round() as usize + 1;

        let u1 = GridFn::from_fn(vec![-1.0], vec![1.0], vec![m], |x| 1.0 - x[0] * x[0])
            .expect("1-D anchor grid");
        let rec = alexandrov_check(&u1);
        tracker.observe(rec.slack / h, || Witness::Text { note: format!("d1 anchor, h = {h}") });
        if anchor_note.is_none() {
            anchor_note = Some(format!(
                "d1 anchor at h = {h}: lhs = {}, rhs = {}",
                rec.lhs, rec.rhs
            ));
        }
        let neg = u1.with_values(u1.values().iter().map(|v| -v).collect()).unwrap();
        let low = alexandrov_lower_check(&neg);
        tracker.observe(low.slack / h, || Witness::Text { note: format!("d1 lower dual, h = {h}") });

        let u2 = GridFn::from_fn(vec![-1.0, -1.0], vec![1.0, 1.0], vec![m, m], |x| {
            0.8 * (-(x[0] * x[0] + x[1] * x[1]) / 0.18).exp()
        })
        .expect("2-D bump grid");
        let rec = alexandrov_check(&u2);
        tracker.observe(rec.slack / h, || Witness::Text { note: format!("d2 gauss bump, h = {h}") });

        let mut rng = CounterRng::stream(seed, (1.0 / h) as u64);
        for b in 0..bumps {
            let amp = 0.3 * rng.uniform();
            let (cx, cy) = (0.6 * rng.uniform() - 0.3, 0.6 * rng.uniform() - 0.3);
            let u = GridFn::from_fn(vec![-1.0, -1.0], vec![1.0, 1.0], vec![m, m], |x| {
                let r2 = x[0] * x[0] + x[1] * x[1];
                let g = (-((x[0] - cx).powi(2) + (x[1] - cy).powi(2)) / 0.25).exp();
                -0.5 * r2 + amp * g
            })
            .expect("semiconvex case grid");
            let rec = alexandrov_check(&u);
            tracker
                .observe(rec.slack / h, || Witness::Text { note: format!("semiconvex #{b}, h = {h}") });
        }
    }
    let mut r = tracker.into_report("alexandrov", "-", 5.0);
    r.push_note("slack normalized by h; allowance C = 5".to_string());
    if let Some(n) = anchor_note {
        r.push_note(n);
    }
    r
}

fn pipeline_suite(
    operator: &PolyOperator,
    f: &FForm,
    lipschitz: f64,
    eta: f64,
    shape: usize,
) -> Result<Vec<CheckReport>> {
    let domain =
        GridFn::from_fn(vec![-1.0, -1.0], vec![1.0, 1.0], vec![shape, shape], |_| 0.0)?;
    let ff = f.clone();
    let eq = EquationSpec::new(
        operator.clone(),
        &domain,
        move |x| ff.eval(x),
        Some(lipschitz),
    )?;
    let mut reports = Vec::new();
    for q in [1.0, 0.8] {
        let w = GridFn::from_fn(vec![-1.0, -1.0], vec![1.0, 1.0], vec![shape, shape], |x| {
            -0.5 * q * (x[0] * x[0] + x[1] * x[1])
        })?;
        let mut run = semiconvex_pipeline_check(&eq, &w, eta)?;
        run.report.push_note(format!("dual-subharmonic cap, curvature q = {q}"));
        reports.push(run.report);
    }

    let base = GridFn::from_fn(vec![-1.0, -1.0], vec![1.0, 1.0], vec![shape, shape], |x| {
        -0.5 * (x[0] * x[0] + x[1] * x[1])
    })?;
    let center = base.index_of(shape / 2, shape / 2);
    let mut vals = base.values().to_vec();
    vals[center] += 0.75;
    let spiked = base.with_values(vals)?;
    let run = semiconvex_pipeline_check(&eq, &spiked, eta)?;
    let localized = matches!(run.report.witness, Some(Witness::Node { .. }));
    let mut control = CheckReport::evaluated(
        "pipeline",
        operator.spec_str(),
        run.report.samples,
        run.report.min_slack,
        run.report.max_slack,
        run.tol_disc,
    );
    control.passed = !run.report.passed && localized;
    control.witness = run.report.witness.clone();
    control.push_note(format!(
        "negative control: interior spike must violate the band (violated = {}, \
         witness localized = {localized})",
        !run.report.passed
    ));
    reports.push(control);
    Ok(reports)
}

fn quadratic_osc_case(
    op: PolyOperator,
    f_level: f64,
    shape: usize,
) -> Result<CheckReport> {
    let domain =
        GridFn::from_fn(vec![0.0, 0.0], vec![1.0, 1.0], vec![shape, shape], |_| 0.0)?;
    let eq = EquationSpec::new(op, &domain, move |_| f_level, None)?;
    let u = GridFn::from_fn(vec![0.0, 0.0], vec![1.0, 1.0], vec![shape, shape], |x| {
        0.5 * (x[0] * x[0] + x[1] * x[1])
    })?;
    let h = u.min_spacing();
    let rec = oscillation_bound_check(&eq, &u)?;
    let mut r = CheckReport::evaluated(
        "oscillation",
        eq.operator().spec_str(),
        1,
        rec.slack / h,
        rec.slack / h,
        5.0,
    );
    r.push_note(format!(
        "quadratic anchor: osc_in = {:.6}, osc_bd = {:.6}, error term = {:.6}",
        rec.osc_interior, rec.osc_boundary, rec.error_term
    ));
    let c11 = c11_oscillation_check(&eq, &u)?;
    r.push_note(format!(
        "contact-restricted error term {:.6} <= full {:.6}",
        c11.restricted_error_term, c11.full_error_term
    ));
    if c11.restricted_error_term > c11.full_error_term {
        r.passed = false;
        r.push_note("restriction exceeded the full error term".to_string());
    }
    Ok(r)
}

fn solver_osc_case(f: &FForm, shape: usize) -> Result<CheckReport> {
    let ff = f.clone();
    let out = solve_ma_2d(
        move |x| ff.eval(x),
        |x| 0.5 * (x[0] * x[0] + x[1] * x[1]),
        vec![0.0, 0.0],
        vec![1.0, 1.0],
        vec![shape, shape],
        1e-8,
        60_000,
    )?;
    let grid = match out.admissible_grid() {
        Ok(g) => g,
        Err(e) => {
            let mut r = CheckReport::evaluated("oscillation", "det:n=2", 0, -1.0, -1.0, 5.0);
            r.push_note(format!("solver output quarantined: {e}"));
            return Ok(r);
        }
    };
    let domain =
        GridFn::from_fn(vec![0.0, 0.0], vec![1.0, 1.0], vec![shape, shape], |_| 0.0)?;
    let ff = f.clone();
    let eq = EquationSpec::new(PolyOperator::det(2)?, &domain, move |x| ff.eval(x), None)?;
    let h = grid.min_spacing();
    let rec = oscillation_bound_check(&eq, grid)?;
    let mut r = CheckReport::evaluated(
        "oscillation",
        "det:n=2",
        1,
        rec.slack / h,
        rec.slack / h,
        5.0,
    );
    r.push_note(format!(
        "solver output with f = {f}: residual = {:.3e} after {} sweeps",
        out.residual, out.iterations
    ));
    Ok(r)
}

fn disk_osc_case(disk_shape: usize) -> Result<CheckReport> {
    let mk = |values: fn(&[f64]) -> f64| -> Result<GridFn> {
        Ok(GridFn::from_fn(
            vec![-1.0, -1.0],
            vec![1.0, 1.0],
            vec![disk_shape, disk_shape],
            values,
        )?
        .with_disk_mask(&[0.0, 0.0], 1.0)?)
    };
    let domain = mk(|_| 0.0)?;
    let eq = EquationSpec::new(PolyOperator::det(2)?, &domain, |_| 1.0, None)?;
    let u = mk(|x| 0.5 * (x[0] * x[0] + x[1] * x[1]))?;
    let h = u.min_spacing();
    let rec = oscillation_bound_check(&eq, &u)?;
    let mut r = CheckReport::evaluated(
        "oscillation",
        "det:n=2 (disk)",
        1,
        rec.slack / h,
        rec.slack / h,
        5.0,
    );
    r.push_note(format!(
        "disk anchor: osc_in = {:.4} vs bound = {:.4} (boundary {:.4} + error {:.4})",
        rec.osc_interior,
        rec.osc_boundary + rec.error_term,
        rec.osc_boundary,
        rec.error_term
    ));
    Ok(r)
}

fn oscillation_suite(shape: usize, disk_shape: usize) -> Result<Vec<CheckReport>> {
    Ok(vec![
        quadratic_osc_case(PolyOperator::det(2)?, 1.0, shape)?,
        quadratic_osc_case(PolyOperator::k_hessian(1, 2)?, 2.0, shape)?,
        quadratic_osc_case(PolyOperator::k_hessian(2, 2)?, 1.0, shape)?,
        solver_osc_case(&FForm::Const(1.0), shape)?,
        solver_osc_case(
            &FForm::Gauss { amp: 1.0, width: 0.5, center: vec![0.5, 0.5] },
            shape,
        )?,
        disk_osc_case(disk_shape)?,
    ])
}

#[allow(clippy::too_many_arguments)]
fn solve_suite(
    operator: &PolyOperator,
    f: &FForm,
    boundary: BoundaryForm,
    shape: usize,
    boxed: [f64; 4],
    tol: f64,
    max_iter: usize,
    out_path: Option<&std::path::Path>,
    experimental: bool,
) -> Result<Vec<CheckReport>> {
    let ff = f.clone();
    let outcome: SolveOutcome = solve_equation_2d(
        operator,
        move |x| ff.eval(x),
        move |x| boundary.eval(x),
        vec![boxed[0], boxed[1]],
        vec![boxed[2], boxed[3]],
        vec![shape, shape],
        tol,
        max_iter,
        experimental,
    )?;
    let grid = outcome.grid_forced();
    let mut r = CheckReport::evaluated(
        "solve",
        operator.spec_str(),
        outcome.iterations,
        tol - outcome.residual,
        tol - outcome.residual,
        0.0,
    );
    r.passed = outcome.converged;
    r.push_note(format!(
        "residual = {:.3e} after {} sweeps (tol {tol:.0e}), converged = {}",
        outcome.residual, outcome.iterations, outcome.converged
    ));

    if outcome.converged && matches!(operator.kind(), OpKind::Det) {
        let domain = GridFn::from_fn(
            vec![boxed[0], boxed[1]],
            vec![boxed[2], boxed[3]],
            vec![shape, shape],
            |_| 0.0,
        )?;
        let ff = f.clone();
        let eq = EquationSpec::new(operator.clone(), &domain, move |x| ff.eval(x), None)?;
        let classes = classify_stencil(&eq, grid, 5.0 * grid.min_spacing())?;
        let frac = classes.interior_admissible_fraction(grid);
        r.push_note(format!("interior admissible fraction = {frac:.4}"));
        if frac < 0.99 {
            r.passed = false;
            r.push_note("fewer than 99% of interior nodes are admissible".to_string());
        }
    }
    if let Some(exact) = boundary.exact_ma_solution(f) {
        if matches!(operator.kind(), OpKind::Det) {
            let mut x = [0.0; 2];
            let mut err = 0.0f64;
            for idx in 0..grid.node_count() {
                grid.coord(idx, &mut x);
                err = err.max((grid.value(idx) - exact(&x)).abs());
            }
            r.push_note(format!("max error vs exact solution = {err:.3e}"));
            if err > 5e-3 {
                r.passed = false;
                r.push_note("max error exceeds the 5e-3 anchor budget".to_string());
            }
        }
    }
    if let Some(path) = out_path {
        write_grid_csv(grid, path)?;
        r.push_note(format!("grid written to {}", path.display()));
    }
    Ok(vec![r])
}
