//! Inhomogeneous-equation layer for 𝔤(D²u) = f with the admissibility
//! constraint: constraint fibers and their duals, per-node classification of
//! sampled classical functions, the semiconvex approximation pipeline,
//! operator-weighted interior estimates, and a wide-stencil Monge–Ampère
//! grid solver for manufacturing admissible solutions.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::operators::{OpKind, PolyOperator};
use crate::potential::{
    hessian_stencil, lower_contact_set, perturb, sup_convolution, unit_ball_volume,
    upper_contact_set, GridFn,
};
use crate::report::{CheckReport, SlackTracker, Witness};
use crate::symmat::SymMat;

/// Fiber membership band, relative to 1 + |f(x)| + |𝔤(A)|.
const FIBER_BAND: f64 = 1e-9;
/// Contact-node allowance of the pipeline check: tol_disc = factor · h.
pub const PIPELINE_TOL_FACTOR: f64 = 5.0;
/// Largest per-axis node count the relaxation solvers accept.
pub const SOLVER_MAX_SHAPE: usize = 257;

/// Second-order jet (value, gradient, Hessian) at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub r: f64,
    pub p: Vec<f64>,
    pub a: SymMat,
}

impl Jet2 {
    pub fn new(r: f64, p: Vec<f64>, a: SymMat) -> Result<Self> {
        if p.len() != a.n {
            return Err(Error::Dimension(format!(
                "jet gradient has {} entries, Hessian is {}x{}",
                p.len(),
                a.n,
                a.n
            )));
        }
        Ok(Jet2 { r, p, a })
    }
}

/// Which cone the fiber tests use for admissibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeBranch {
    /// Closure of the operator's own cone.
    Garding,
    /// Plain PSD cone; used for the non-hyperbolic normsqdet operator.
    Psd,
}

/// An inhomogeneous equation 𝔤(D²u) = f on a grid domain, with f ≥ 0 and an
/// optional Lipschitz constant for f.
pub struct EquationSpec {
    operator: PolyOperator,
    /// domain geometry with f sampled as the node values
    f_grid: GridFn,
    f: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    f_lipschitz: Option<f64>,
    cone: ConeBranch,
}

impl EquationSpec {
    /// `domain` supplies the box, shape, and mask; its values are ignored.
    pub fn new(
        operator: PolyOperator,
        domain: &GridFn,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        f_lipschitz: Option<f64>,
    ) -> Result<Self> {
        if operator.dim() != domain.dim() {
            return Err(Error::Dimension(format!(
                "operator acts on {}x{} matrices but the grid is {}-dimensional",
                operator.dim(),
                operator.dim(),
                domain.dim()
            )));
        }
        if let Some(l) = f_lipschitz {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::Argument(format!(
                    "f_lipschitz must be a positive real, got {l}"
                )));
            }
        }
        let mut vals = vec![0.0; domain.node_count()];
        let mut x = [0.0; 2];
        for (idx, v) in vals.iter_mut().enumerate() {
            domain.coord(idx, &mut x);
            *v = f(&x[..domain.dim()]);
        }
        let f_grid = domain.with_values(vals)?;
        for idx in 0..f_grid.node_count() {
            if f_grid.value(idx) < 0.0 {
                let mut x = [0.0; 2];
                f_grid.coord(idx, &mut x);
                return Err(Error::Argument(format!(
                    "inhomogeneity must be nonnegative; f = {} at node {:?}",
                    f_grid.value(idx),
                    &x[..f_grid.dim()]
                )));
            }
        }
        let cone = if matches!(operator.kind(), OpKind::NormSqDet) {
            ConeBranch::Psd
        } else {
            ConeBranch::Garding
        };
        Ok(EquationSpec { operator, f_grid, f: Box::new(f), f_lipschitz, cone })
    }

    pub fn operator(&self) -> &PolyOperator {
        &self.operator
    }

    /// Domain geometry; the stored values are f sampled at the nodes.
    pub fn domain(&self) -> &GridFn {
        &self.f_grid
    }

    pub fn cone(&self) -> ConeBranch {
        self.cone
    }

    pub fn f_lipschitz(&self) -> Option<f64> {
        self.f_lipschitz
    }

    pub fn f_at(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    pub fn f_node(&self, idx: usize) -> f64 {
        self.f_grid.value(idx)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.f_grid.dim() {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, domain is {}-dimensional",
                x.len(),
                self.f_grid.dim()
            )));
        }
        let (lo, hi) = self.f_grid.bounds();
        for a in 0..x.len() {
            let slop = 1e-9 * (1.0 + (hi[a] - lo[a]).abs());
            if x[a] < lo[a] - slop || x[a] > hi[a] + slop {
                return Err(Error::Argument(format!(
                    "point coordinate {} = {} lies outside [{}, {}]",
                    a, x[a], lo[a], hi[a]
                )));
            }
        }
        Ok(())
    }

    /// Closed-cone membership under the declared branch. Matrices at which
    /// hyperbolicity fails are outside every Gårding cone.
    fn cone_closure_contains(&self, a: &SymMat) -> bool {
        match self.cone {
            ConeBranch::Psd => match a.eigenvalues() {
                Ok(eig) => eig.min() >= -1e-9 * a.rel_scale(),
                Err(_) => false,
            },
            ConeBranch::Garding => match self.operator.cone_contains(a) {
                Ok(pos) => pos.in_closure(),
                Err(_) => false,
            },
        }
    }

    /// (in closed cone, 𝔤(A), membership band at this node value level).
    fn fiber_parts(&self, fx: f64, a: &SymMat) -> Result<(bool, f64, f64)> {
        let in_cone = self.cone_closure_contains(a);
        let value = self.operator.evaluate(a)?;
        let band = FIBER_BAND * (1.0 + fx.abs() + value.abs());
        Ok((in_cone, value, band))
    }
}

/// A ∈ Γ̄ (or 𝒫, per the equation's cone branch) and 𝔤(A) ≥ f(x), up to the
/// membership band.
pub fn fiber_contains(eq: &EquationSpec, x: &[f64], jet: &Jet2) -> Result<bool> {
    eq.check_point(x)?;
    let (in_cone, value, band) = eq.fiber_parts(eq.f_at(x), &jet.a)?;
    Ok(in_cone && value >= eq.f_at(x) - band)
}

/// −A outside the closed cone, or −A inside with 𝔤(−A) ≤ f(x), up to the
/// membership band.
pub fn dual_fiber_contains(eq: &EquationSpec, x: &[f64], jet: &Jet2) -> Result<bool> {
    eq.check_point(x)?;
    let neg = jet.a.scale(-1.0);
    let (in_cone, value, band) = eq.fiber_parts(eq.f_at(x), &neg)?;
    Ok(!in_cone || value <= eq.f_at(x) + band)
}

/// Per-node admissibility flags of a sampled function. Nodes without a
/// usable jet (inactive, or no stencil in the stencil variant) have
/// `evaluated = false` and all flags false.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub admissible_sub: Vec<bool>,
    pub supersolution: Vec<bool>,
    pub dual_sub: Vec<bool>,
    pub evaluated: Vec<bool>,
}

impl Classification {
    /// Fraction of interior nodes that carry a jet and are admissible
    /// subsolution points there.
    pub fn interior_admissible_fraction(&self, grid: &GridFn) -> f64 {
        let mut total = 0usize;
        let mut good = 0usize;
        for idx in 0..grid.node_count() {
            if grid.is_interior(idx) {
                total += 1;
                if self.evaluated[idx] && self.admissible_sub[idx] {
                    good += 1;
                }
            }
        }
        if total == 0 {
            return 0.0;
        }
        good as f64 / total as f64
    }

    pub fn all_interior_admissible(&self, grid: &GridFn) -> bool {
        (0..grid.node_count())
            .filter(|&i| grid.is_interior(i))
            .all(|i| self.evaluated[i] && self.admissible_sub[i])
    }
}

fn same_geometry(a: &GridFn, b: &GridFn) -> bool {
    a.dim() == b.dim() && a.shape() == b.shape() && a.bounds() == b.bounds() && a.mask() == b.mask()
}

fn classify_node(
    eq: &EquationSpec,
    fx: f64,
    a: &SymMat,
    extra_tol: f64,
    out: &mut Classification,
    idx: usize,
) -> Result<()> {
    let (in_cone, value, band) = eq.fiber_parts(fx, a)?;
    let tol = band.max(extra_tol);
    out.admissible_sub[idx] = in_cone && value >= fx - tol;
    // supersolution disjunction, taken literally: off-cone Hessians satisfy
    // it vacuously
    out.supersolution[idx] = !in_cone || value <= fx + tol;
    let neg = a.scale(-1.0);
    let (neg_in_cone, neg_value, neg_band) = eq.fiber_parts(fx, &neg)?;
    let neg_tol = neg_band.max(extra_tol);
    out.dual_sub[idx] = !neg_in_cone || neg_value <= fx + neg_tol;
    out.evaluated[idx] = true;
    Ok(())
}

/// Classifies a smooth sample from its exact jets at every active node.
pub fn classify_classical(
    eq: &EquationSpec,
    jet_at: impl Fn(&[f64]) -> Jet2,
) -> Result<Classification> {
    let grid = eq.domain();
    let n = grid.node_count();
    let mut out = Classification {
        admissible_sub: vec![false; n],
        supersolution: vec![false; n],
        dual_sub: vec![false; n],
        evaluated: vec![false; n],
    };
    let mut x = [0.0; 2];
    for idx in 0..n {
        if !grid.is_active(idx) {
            continue;
        }
        grid.coord(idx, &mut x);
        let jet = jet_at(&x[..grid.dim()]);
        if jet.a.n != grid.dim() {
            return Err(Error::Dimension(format!(
                "jet Hessian is {}x{}, domain is {}-dimensional",
                jet.a.n,
                jet.a.n,
                grid.dim()
            )));
        }
        classify_node(eq, grid.value(idx), &jet.a, 0.0, &mut out, idx)?;
    }
    Ok(out)
}

/// Classifies a grid function from centered-difference Hessians, with an
/// extra tolerance added to the fiber band (for discretized inputs).
pub fn classify_stencil(eq: &EquationSpec, u: &GridFn, extra_tol: f64) -> Result<Classification> {
    if !same_geometry(eq.domain(), u) {
        return Err(Error::Dimension(
            "grid function does not match the equation's domain".into(),
        ));
    }
    let n = u.node_count();
    let mut out = Classification {
        admissible_sub: vec![false; n],
        supersolution: vec![false; n],
        dual_sub: vec![false; n],
        evaluated: vec![false; n],
    };
    for idx in 0..n {
        if let Some(h) = hessian_stencil(u, idx) {
            classify_node(eq, eq.f_node(idx), &h, extra_tol, &mut out, idx)?;
        }
    }
    Ok(out)
}

/// Inverse modulus of continuity of the fibers under A ↦ A + ηI: η^N/L for
/// Lipschitz f, floored at 1e-12. Without a Lipschitz constant f is treated
/// as uniform and every translation is admissible (+∞ sentinel).
///
/// The Lipschitz modulus is uniform over the domain, so no inner-region
/// parameter enters.
pub fn modulus_delta(eq: &EquationSpec, eta: f64) -> f64 {
    let l = match eq.f_lipschitz {
        None => return f64::INFINITY,
        Some(l) => l,
    };
    let n = eq.operator.degree() as u32;
    (math::powi(eta.max(0.0), n) / l).max(1e-12)
}

/// Curvature budget of the sup-convolution step: ε* = δ²/(4M).
pub fn eps_star(delta: f64, m: f64) -> Result<f64> {
    if !(delta > 0.0) || !(m > 0.0) {
        return Err(Error::Argument(format!(
            "eps_star needs positive delta and M, got delta = {delta}, M = {m}"
        )));
    }
    Ok(delta * delta / (4.0 * m))
}

/// Full record of one semiconvex-approximation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRun {
    pub report: CheckReport,
    pub eta: f64,
    pub delta: f64,
    pub eps_star: f64,
    pub m_bound: f64,
    pub tol_disc: f64,
    /// nodes farther than delta from the boundary
    pub inner_nodes: usize,
    /// contact nodes inside the inner region whose stencil was checked
    pub checked_nodes: usize,
}

/// Builds w_η^ε = sup_convolution(w, ε*) + η|x|²/2 and asserts, at every
/// upper-contact node of the inner region Ω_δ with a stencil, that the
/// clipped negated Hessian stays in the equation's value band:
/// 𝔤(psd(−D²w_η^ε)) ≤ f(x) + tol_disc with tol_disc = 5h.
pub fn semiconvex_pipeline_check(
    eq: &EquationSpec,
    w: &GridFn,
    eta: f64,
) -> Result<PipelineRun> {
    if !same_geometry(eq.domain(), w) {
        return Err(Error::Dimension(
            "grid function does not match the equation's domain".into(),
        ));
    }
    if !(eta > 0.0) {
        return Err(Error::Argument(format!("pipeline needs eta > 0, got {eta}")));
    }
    if eq.f_lipschitz.is_none() {
        return Err(Error::Precondition(
            "semiconvex_pipeline_check needs an equation with f_lipschitz declared".into(),
        ));
    }
    let mut m_bound = 0.0f64;
    for idx in 0..w.node_count() {
        if w.is_active(idx) {
            m_bound = m_bound.max(w.value(idx).abs());
        }
    }
    // a flat sample has no curvature to budget for; any parabola width works
    let m_eff = if m_bound > 0.0 { m_bound } else { 1.0 };
    let delta = modulus_delta(eq, eta);
    let eps = eps_star(delta, m_eff)?;
    let weta = perturb(&sup_convolution(w, eps)?, eta);

    let mut bd: Vec<[f64; 2]> = Vec::new();
    let mut x = [0.0; 2];
    for idx in 0..w.node_count() {
        if w.is_boundary(idx) {
            w.coord(idx, &mut x);
            bd.push(x);
        }
    }
    let d = w.dim();
    let inner: Vec<usize> = (0..w.node_count())
        .filter(|&idx| {
            if !w.is_interior(idx) {
                return false;
            }
            w.coord(idx, &mut x);
            let dist2 = bd
                .iter()
                .map(|b| (0..d).map(|a| (x[a] - b[a]) * (x[a] - b[a])).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            dist2 > delta * delta
        })
        .collect();
    let tol_disc = PIPELINE_TOL_FACTOR * w.min_spacing();
    let suite = "pipeline";
    let op = eq.operator.spec_str();
    if inner.is_empty() {
        let mut report = CheckReport::skipped_with_reason(
            suite,
            op,
            format!("inner region is empty: delta = {delta:.6e} swallows the grid"),
        );
        report.push_note(format!("eta = {eta}, eps_star = {eps:.6e}, M = {m_eff}"));
        return Ok(PipelineRun {
            report,
            eta,
            delta,
            eps_star: eps,
            m_bound: m_eff,
            tol_disc,
            inner_nodes: 0,
            checked_nodes: 0,
        });
    }

    let contact = upper_contact_set(&weta);
    let mut tracker = SlackTracker::new();
    let mut checked = 0usize;
    for &idx in &inner {
        if !contact.is_contact(idx) {
            continue;
        }
        let h = match hessian_stencil(&weta, idx) {
            Some(h) => h,
            None => continue,
        };
        let clipped = h.scale(-1.0).psd_clip()?;
        let value = eq.operator.evaluate(&clipped)?;
        let fx = eq.f_node(idx);
        checked += 1;
        let (i, j) = w.axes_of(idx);
        w.coord(idx, &mut x);
        tracker.observe(fx - value, || Witness::Node {
            index: if d == 1 { vec![i] } else { vec![i, j] },
            point: x[..d].to_vec(),
            value,
        });
    }
    let mut report = tracker.into_report(suite, op, tol_disc);
    report.push_note(format!(
        "slack = f(x) - g(psd(-D^2 w)) at inner upper-contact nodes; \
         eta = {eta}, delta = {delta:.6e}, eps_star = {eps:.6e}, M = {m_eff}"
    ));
    report.push_note(format!(
        "inner nodes = {}, contact nodes checked = {checked}",
        inner.len()
    ));
    Ok(PipelineRun {
        report,
        eta,
        delta,
        eps_star: eps,
        m_bound: m_eff,
        tol_disc,
        inner_nodes: inner.len(),
        checked_nodes: checked,
    })
}

/// Two-sided interior oscillation bound weighted by the equation:
/// osc_in ≤ osc_bd + (diam/(|B₁|^{1/d}·𝔤(I)^{1/N}))·(Σ f^{d/N}·∏h)^{1/d}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscBoundRecord {
    pub osc_interior: f64,
    pub osc_boundary: f64,
    pub error_term: f64,
    pub slack: f64,
}

fn f_integral(eq: &EquationSpec, keep: impl Fn(usize) -> bool) -> f64 {
    let grid = eq.domain();
    let d = grid.dim() as f64;
    let n = eq.operator.degree() as f64;
    let vol = grid.cell_volume();
    let mut sum = 0.0;
    for idx in 0..grid.node_count() {
        if grid.is_interior(idx) && keep(idx) {
            sum += math::powf(grid.value(idx), d / n) * vol;
        }
    }
    sum
}

fn error_prefactor(eq: &EquationSpec, h: &GridFn) -> f64 {
    let d = h.dim() as u32;
    let n = eq.operator.degree() as u32;
    h.diameter()
        / (math::nth_root(unit_ball_volume(h.dim()), d)
            * math::nth_root(eq.operator.value_at_identity(), n))
}

pub fn oscillation_bound_check(eq: &EquationSpec, h: &GridFn) -> Result<OscBoundRecord> {
    if !same_geometry(eq.domain(), h) {
        return Err(Error::Dimension(
            "grid function does not match the equation's domain".into(),
        ));
    }
    let (imin, imax) = h.interior_extrema();
    let (bmin, bmax) = h.boundary_extrema();
    let integral = f_integral(eq, |_| true);
    let error_term = error_prefactor(eq, h) * math::nth_root(integral, h.dim() as u32);
    let osc_interior = imax - imin;
    let osc_boundary = bmax - bmin;
    Ok(OscBoundRecord {
        osc_interior,
        osc_boundary,
        error_term,
        slack: osc_boundary + error_term - osc_interior,
    })
}

/// Oscillation bound with the forcing integral restricted to the
/// lower-contact nodes of h; the unrestricted term is reported alongside
/// and the restricted one can never exceed it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C11OscRecord {
    pub osc_interior: f64,
    pub osc_boundary: f64,
    pub restricted_error_term: f64,
    pub full_error_term: f64,
    pub slack: f64,
    pub restricted_nodes: usize,
}

pub fn c11_oscillation_check(eq: &EquationSpec, h: &GridFn) -> Result<C11OscRecord> {
    if !same_geometry(eq.domain(), h) {
        return Err(Error::Dimension(
            "grid function does not match the equation's domain".into(),
        ));
    }
    let lower = lower_contact_set(h);
    let in_restricted =
        |idx: usize| lower.is_contact(idx) && hessian_stencil(h, idx).is_some();
    let restricted_sum = f_integral(eq, in_restricted);
    let full_sum = f_integral(eq, |_| true);
    let d = h.dim() as u32;
    let pre = error_prefactor(eq, h);
    let restricted_error_term = pre * math::nth_root(restricted_sum, d);
    let full_error_term = pre * math::nth_root(full_sum, d);
    let (imin, imax) = h.interior_extrema();
    let (bmin, bmax) = h.boundary_extrema();
    let restricted_nodes = (0..h.node_count())
        .filter(|&i| h.is_interior(i) && in_restricted(i))
        .count();
    Ok(C11OscRecord {
        osc_interior: imax - imin,
        osc_boundary: bmax - bmin,
        restricted_error_term,
        full_error_term,
        slack: (bmax - bmin) + restricted_error_term - (imax - imin),
        restricted_nodes,
    })
}

/// Outcome of the interior maximum principle on an admissible sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxPrincipleRecord {
    /// every interior node classified admissible_sub from its exact jet
    pub precheck_passed: bool,
    pub admissible_fraction: f64,
    pub interior_max: f64,
    pub boundary_max: f64,
    /// boundary_max − interior_max
    pub slack: f64,
    pub min_trace: f64,
    /// min over nodes of tr A / (1 + |A|_F) ≥ −1e−9
    pub trace_nonnegative: bool,
}

/// Asserts interior max ≤ boundary max and per-node trace nonnegativity for
/// a classical sample; a failed admissibility precheck is reported, not an
/// error.
pub fn max_principle_check(
    eq: &EquationSpec,
    jet_at: impl Fn(&[f64]) -> Jet2,
) -> Result<MaxPrincipleRecord> {
    let grid = eq.domain();
    let mut values = vec![0.0; grid.node_count()];
    let mut min_trace = f64::INFINITY;
    let mut min_trace_rel = f64::INFINITY;
    let mut x = [0.0; 2];
    for (idx, v) in values.iter_mut().enumerate() {
        grid.coord(idx, &mut x);
        let jet = jet_at(&x[..grid.dim()]);
        *v = jet.r;
        if grid.is_active(idx) {
            let tr = jet.a.trace();
            min_trace = min_trace.min(tr);
            min_trace_rel = min_trace_rel.min(tr / (1.0 + jet.a.frobenius_norm()));
        }
    }
    let u = grid.with_values(values)?;
    let classes = classify_classical(eq, &jet_at)?;
    let precheck_passed = classes.all_interior_admissible(&u);
    let (_, interior_max) = u.interior_extrema();
    let (_, boundary_max) = u.boundary_extrema();
    Ok(MaxPrincipleRecord {
        precheck_passed,
        admissible_fraction: classes.interior_admissible_fraction(&u),
        interior_max,
        boundary_max,
        slack: boundary_max - interior_max,
        min_trace,
        trace_nonnegative: min_trace_rel >= -1e-9,
    })
}

/// Result of a grid solve. Unconverged outputs are quarantined: downstream
/// checks should obtain the grid through `admissible_grid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    grid: GridFn,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
}

impl SolveOutcome {
    /// The solution grid, refused when the solve did not converge.
    pub fn admissible_grid(&self) -> Result<&GridFn> {
        if self.converged {
            Ok(&self.grid)
        } else {
            Err(Error::Precondition(format!(
                "solver stopped at residual {:.3e} without converging; \
                 use grid_forced to inspect the iterate",
                self.residual
            )))
        }
    }

    /// The final iterate regardless of convergence.
    pub fn grid_forced(&self) -> &GridFn {
        &self.grid
    }
}

struct Stencil2 {
    m1: usize,
    h0: f64,
    h1: f64,
}

impl Stencil2 {
    /// Neighbor-pair sums around an interior node: axis 0, axis 1, both
    /// diagonals, and the mixed cross term (center-free).
    fn sums(&self, u: &[f64], idx: usize) -> (f64, f64, f64, f64, f64) {
        let a0 = u[idx - self.m1] + u[idx + self.m1];
        let a1 = u[idx - 1] + u[idx + 1];
        let dpp = u[idx - self.m1 - 1] + u[idx + self.m1 + 1];
        let dpm = u[idx - self.m1 + 1] + u[idx + self.m1 - 1];
        let cross = (u[idx + self.m1 + 1] + u[idx - self.m1 - 1]
            - u[idx + self.m1 - 1]
            - u[idx - self.m1 + 1])
            / (4.0 * self.h0 * self.h1);
        (a0, a1, dpp, dpm, cross)
    }

    /// Wide-stencil Monge–Ampère value at an interior node: minimum over
    /// the axis pair and the diagonal pair of the product of clipped second
    /// differences.
    fn ma_value(&self, u: &[f64], idx: usize) -> f64 {
        let (a0, a1, dpp, dpm, _) = self.sums(u, idx);
        let c = 2.0 * u[idx];
        let l0 = self.h0 * self.h0;
        let l1 = self.h1 * self.h1;
        let ld = l0 + l1;
        let axis = ((a0 - c) / l0).max(0.0) * ((a1 - c) / l1).max(0.0);
        let diag = ((dpp - c) / ld).max(0.0) * ((dpm - c) / ld).max(0.0);
        axis.min(diag)
    }

    /// Solves ma_value = fx for the center value by bracketed bisection;
    /// the scheme value is continuous and nonincreasing in the center.
    fn ma_solve(&self, u: &[f64], idx: usize, fx: f64) -> f64 {
        let (a0, a1, dpp, dpm, _) = self.sums(u, idx);
        let l0 = self.h0 * self.h0;
        let l1 = self.h1 * self.h1;
        let ld = l0 + l1;
        let s = |t: f64| -> f64 {
            let c = 2.0 * t;
            let axis = ((a0 - c) / l0).max(0.0) * ((a1 - c) / l1).max(0.0);
            let diag = ((dpp - c) / ld).max(0.0) * ((dpm - c) / ld).max(0.0);
            axis.min(diag)
        };
        // above t_hi some direction pair has hit zero curvature
        let t_hi = 0.5 * a0.min(a1).min(dpp).min(dpm);
        if fx <= 0.0 {
            return t_hi;
        }
        let mut width = 1.0 + t_hi.abs();
        let mut lo = t_hi - width;
        while s(lo) < fx {
            width *= 2.0;
            lo = t_hi - width;
        }
        let mut hi = t_hi;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if s(mid) >= fx {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * (1.0 + lo.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    fn laplace_value(&self, u: &[f64], idx: usize) -> f64 {
        let (a0, a1, ..) = self.sums(u, idx);
        let c = 2.0 * u[idx];
        (a0 - c) / (self.h0 * self.h0) + (a1 - c) / (self.h1 * self.h1)
    }

    fn laplace_solve(&self, u: &[f64], idx: usize, fx: f64) -> f64 {
        let (a0, a1, ..) = self.sums(u, idx);
        let w0 = 1.0 / (self.h0 * self.h0);
        let w1 = 1.0 / (self.h1 * self.h1);
        (a0 * w0 + a1 * w1 - fx) / (2.0 * (w0 + w1))
    }

    /// Centered-difference Hessian as a function of the center value.
    fn hessian_at(&self, u: &[f64], idx: usize, t: f64) -> SymMat {
        let (a0, a1, _, _, cross) = self.sums(u, idx);
        let mut h = SymMat::zero(2);
        h.set(0, 0, (a0 - 2.0 * t) / (self.h0 * self.h0));
        h.set(1, 1, (a1 - 2.0 * t) / (self.h1 * self.h1));
        h.set(0, 1, cross);
        h
    }
}

enum Scheme<'a> {
    MongeAmpere,
    Laplace,
    Generic(&'a PolyOperator),
}

/// 𝔤 on the stencil Hessian when it lies in the closed cone; None outside
/// (or where hyperbolicity fails).
fn generic_value(op: &PolyOperator, h: &SymMat) -> Option<f64> {
    let in_cone = match op.cone_contains(h) {
        Ok(pos) => pos.in_closure(),
        Err(_) => false,
    };
    if !in_cone {
        return None;
    }
    op.evaluate(h).ok()
}

fn generic_solve(st: &Stencil2, op: &PolyOperator, u: &[f64], idx: usize, fx: f64) -> f64 {
    // lowering the center pushes the Hessian into the cone along +I; the
    // scheme value is nonincreasing in the center while inside
    let good = |t: f64| -> bool {
        match generic_value(op, &st.hessian_at(u, idx, t)) {
            Some(v) => v >= fx,
            None => false,
        }
    };
    let start = u[idx];
    let mut width = 1.0 + start.abs();
    let mut lo = start;
    let mut tries = 0;
    while !good(lo) {
        lo -= width;
        width *= 2.0;
        tries += 1;
        if tries > 120 {
            // no admissible center found; leave the node untouched
            return start;
        }
    }
    let mut hi = lo + width;
    while good(hi) {
        hi += width;
        width *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if good(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * (1.0 + lo.abs()) {
            break;
        }
    }
    lo
}

pub fn solve_ma_2d(
    f: impl Fn(&[f64]) -> f64,
    boundary: impl Fn(&[f64]) -> f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    shape: Vec<usize>,
    tol: f64,
    max_iter: usize,
) -> Result<SolveOutcome> {
    run_relaxation(Scheme::MongeAmpere, &f, &boundary, lower, upper, shape, tol, max_iter)
}

/// Dispatches the relaxation scheme by operator: det:n=2 runs the wide
/// Monge–Ampère stencil, trace:n=2 the 5-point Laplacian. Any other
/// operator needs `experimental = true` and gets the generic cone-bracketed
/// relaxation, accepted on residual only.
pub fn solve_equation_2d(
    op: &PolyOperator,
    f: impl Fn(&[f64]) -> f64,
    boundary: impl Fn(&[f64]) -> f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    shape: Vec<usize>,
    tol: f64,
    max_iter: usize,
    experimental: bool,
) -> Result<SolveOutcome> {
    if op.dim() != 2 {
        return Err(Error::Dimension(format!(
            "2-D solver needs an operator on 2x2 matrices, got dimension {}",
            op.dim()
        )));
    }
    match op.kind() {
        OpKind::Det => {
            run_relaxation(Scheme::MongeAmpere, &f, &boundary, lower, upper, shape, tol, max_iter)
        }
        OpKind::Trace => {
            run_relaxation(Scheme::Laplace, &f, &boundary, lower, upper, shape, tol, max_iter)
        }
        _ if experimental => {
            run_relaxation(Scheme::Generic(op), &f, &boundary, lower, upper, shape, tol, max_iter)
        }
        _ => Err(Error::Argument(format!(
            "no default relaxation scheme for {}; pass experimental to try the \
             generic cone-bracketed solver",
            op.spec_str()
        ))),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_relaxation(
    scheme: Scheme<'_>,
    f: &dyn Fn(&[f64]) -> f64,
    boundary: &dyn Fn(&[f64]) -> f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    shape: Vec<usize>,
    tol: f64,
    max_iter: usize,
) -> Result<SolveOutcome> {
    if lower.len() != 2 || upper.len() != 2 || shape.len() != 2 {
        return Err(Error::Dimension("grid solvers need a 2-dimensional box".into()));
    }
    if shape.iter().any(|&m| m > SOLVER_MAX_SHAPE) {
        return Err(Error::Argument(format!(
            "solver shape capped at {SOLVER_MAX_SHAPE} per axis, got {shape:?}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Argument(format!(
            "solver tolerance must be positive, got {tol}"
        )));
    }
    let total = shape[0] * shape[1];
    let template = GridFn::new(lower, upper, shape, vec![0.0; total])?;
    let (m0, m1) = (template.shape()[0], template.shape()[1]);
    let st = Stencil2 { m1, h0: template.spacing(0), h1: template.spacing(1) };

    let mut x = [0.0; 2];
    let mut fvals = vec![0.0; total];
    for (idx, v) in fvals.iter_mut().enumerate() {
        template.coord(idx, &mut x);
        *v = f(&x);
        if !v.is_finite() || *v < 0.0 {
            return Err(Error::Argument(format!(
                "inhomogeneity must be finite and nonnegative; f = {v} at {:?}",
                &x[..]
            )));
        }
    }

    // boundary trace plus a transfinite blend of it as the initial iterate
    let mut u = vec![0.0; total];
    for idx in 0..total {
        if template.is_boundary(idx) {
            template.coord(idx, &mut x);
            let v = boundary(&x);
            if !v.is_finite() {
                return Err(Error::Argument(format!(
                    "boundary data must be finite, got {v} at {:?}",
                    &x[..]
                )));
            }
            u[idx] = v;
        }
    }
    for i in 1..m0 - 1 {
        let s = i as f64 / (m0 - 1) as f64;
        for j in 1..m1 - 1 {
            let t = j as f64 / (m1 - 1) as f64;
            let blend = (1.0 - s) * u[j] + s * u[(m0 - 1) * m1 + j]
                + (1.0 - t) * u[i * m1]
                + t * u[i * m1 + m1 - 1]
                - ((1.0 - s) * (1.0 - t) * u[0]
                    + (1.0 - s) * t * u[m1 - 1]
                    + s * (1.0 - t) * u[(m0 - 1) * m1]
                    + s * t * u[(m0 - 1) * m1 + m1 - 1]);
            u[i * m1 + j] = blend;
        }
    }

    let scheme_value = |u: &[f64], idx: usize| -> f64 {
        match &scheme {
            Scheme::MongeAmpere => st.ma_value(u, idx),
            Scheme::Laplace => st.laplace_value(u, idx),
            Scheme::Generic(op) => {
                generic_value(op, &st.hessian_at(u, idx, u[idx])).unwrap_or(f64::NEG_INFINITY)
            }
        }
    };

    let mut iterations = 0usize;
    let mut residual = f64::INFINITY;
    while iterations < max_iter {
        for i in 1..m0 - 1 {
            for j in 1..m1 - 1 {
                let idx = i * m1 + j;
                u[idx] = match &scheme {
                    Scheme::MongeAmpere => st.ma_solve(&u, idx, fvals[idx]),
                    Scheme::Laplace => st.laplace_solve(&u, idx, fvals[idx]),
                    Scheme::Generic(op) => generic_solve(&st, op, &u, idx, fvals[idx]),
                };
            }
        }
        iterations += 1;
        let mut res = 0.0f64;
        for i in 1..m0 - 1 {
            for j in 1..m1 - 1 {
                let idx = i * m1 + j;
                let v = scheme_value(&u, idx);
                let gap = if v.is_finite() {
                    (v - fvals[idx]).abs()
                } else {
                    // iterate outside the cone: count a unit-size defect
                    1.0 + fvals[idx].abs()
                };
                res = res.max(gap);
            }
        }
        residual = res;
        if residual <= tol {
            break;
        }
    }
    Ok(SolveOutcome {
        grid: template.with_values(u)?,
        converged: residual <= tol,
        iterations,
        residual,
    })
}
