//! Determinant-majorization and related inequality testers: the majorization
//! gap with randomized sweeps and violation hunting, the Maclaurin chain, and
//! the orthogonal-conjugation coefficient condition with its certificate for
//! operators that have no Gårding cone.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::operators::PolyOperator;
use crate::report::{CheckReport, SlackTracker, Witness};
use crate::rng::CounterRng;
use crate::symmat::{random_orthogonal, random_psd_with, PsdStyle, SquareMat, SymMat};

/// Largest admitted homogeneous basis for coefficient expansions.
const BASIS_GUARD: f64 = 1e4;

/// Hunting budget per start point.
const HUNT_ITERS: usize = 200;

/// 𝔤(A)^{1/N} − 𝔤(I)^{1/N}·det(A)^{1/n} for PSD A.
///
/// Both sides are evaluated on the clipped spectrum of A (catalog operators
/// are all orthogonally invariant): 𝔤 at diag(λ⁺) and det as the product of
/// the same λ⁺. Near the rank-deficient boundary the roots have unbounded
/// slope, so feeding the two sides from independent factorizations would let
/// ~1e−16 decomposition noise surface as ~1e−8 slack noise; from one
/// spectrum the gap is nonnegative pointwise in the computed eigenvalues.
/// 𝔤 values within −1e−10·scale^N of zero are still clamped to 0 before the
/// root; materially negative values keep their sign through a signed root so
/// that hunting sees a descent direction.
pub fn dm_gap(g: &PolyOperator, a: &SymMat) -> Result<f64> {
    if a.n != g.dim() {
        return Err(Error::Dimension(format!(
            "operator {} expects n={}, matrix has n={}",
            g.spec_str(),
            g.dim(),
            a.n
        )));
    }
    let scale = a.rel_scale();
    let eig = a.eigenvalues()?;
    if eig.min() < -1e-6 * scale {
        return Err(Error::Precondition(format!(
            "matrix is materially non-PSD (min eigenvalue {:e})",
            eig.min()
        )));
    }
    let lam: Vec<f64> = eig.values().iter().map(|&l| l.max(0.0)).collect();
    let clipped = SymMat::diag(&lam);
    let big_n = g.degree() as u32;
    let mut g_val = g.evaluate(&clipped)?;
    if g_val < 0.0 && g_val >= -1e-10 * math::powi(scale, big_n) {
        g_val = 0.0;
    }
    let det = clipped.det().max(0.0);
    let lhs = math::signed_nth_root(g_val, big_n);
    let rhs = math::nth_root(g.value_at_identity(), big_n) * math::nth_root(det, g.dim() as u32);
    Ok(lhs - rhs)
}

/// Sweeps `dm_gap` over the mixed PSD sampler, reporting min slack normalized
/// per sample by 1 + ‖A‖_F. With `hunt`, additionally runs coordinate descent
/// from the 10 worst samples to seek violations (and waives the I-centrality
/// and Dirichlet prechecks, so non-conforming operators can be probed).
pub fn dm_sweep(g: &PolyOperator, samples: usize, seed: u64, hunt: bool) -> CheckReport {
    if !hunt {
        if g.is_i_central(1e-5).is_none() {
            return CheckReport::skipped_with_reason(
                "majorize",
                g.spec_str(),
                String::from("operator failed the I-centrality precheck"),
            );
        }
        let dirichlet = g.is_dirichlet(60, seed ^ 0x5eed);
        if !dirichlet.passed {
            return CheckReport::skipped_with_reason(
                "majorize",
                g.spec_str(),
                String::from("operator failed the Dirichlet-cone precheck"),
            );
        }
    }

    let mut tracker = SlackTracker::new();
    let mut ranked: Vec<(f64, u64)> = Vec::new();
    for i in 0..samples {
        let mut rng = CounterRng::stream(seed, i as u64);
        let a = random_psd_with(&mut rng, g.dim(), PsdStyle::ALL[i % 3]);
        match dm_gap(g, &a) {
            Ok(gap) => {
                let slack = gap / a.rel_scale();
                tracker.observe(slack, || Witness::Matrix { a: a.clone() });
                if hunt {
                    ranked.push((slack, i as u64));
                }
            }
            Err(e) => {
                tracker.observe(-1.0, || Witness::Matrix { a: a.clone() });
                let mut r = tracker.into_report("majorize", g.spec_str(), 1e-9);
                r.push_note(format!("sample {i} could not be evaluated: {e}"));
                return r;
            }
        }
    }

    let mut hunted = 0usize;
    if hunt {
        ranked.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite slack"));
        for &(_, i) in ranked.iter().take(10) {
            let mut rng = CounterRng::stream(seed, i);
            let start = random_psd_with(&mut rng, g.dim(), PsdStyle::ALL[i as usize % 3]);
            let (slack, at) = hunt_from(g, start);
            if slack.is_finite() {
                tracker.observe(slack, || Witness::Matrix { a: at.clone() });
            }
            hunted += 1;
        }
    }

    let mut report = tracker.into_report("majorize", g.spec_str(), 1e-9);
    report.push_note(String::from("slack = dm gap normalized by 1 + |A|_F"));
    if hunt {
        report.push_note(format!("hunted from {hunted} worst starts, {HUNT_ITERS} iterations each"));
    }
    report
}

/// Derivative-free coordinate descent on the normalized gap, projected back
/// to PSD after every move.
fn hunt_from(g: &PolyOperator, start: SymMat) -> (f64, SymMat) {
    let normalized = |m: &SymMat| -> Option<f64> { dm_gap(g, m).ok().map(|v| v / m.rel_scale()) };
    let mut cur = start;
    let mut best = match normalized(&cur) {
        Some(v) => v,
        None => return (f64::INFINITY, cur),
    };
    let n = cur.n;
    let mut step = 0.5;
    for _ in 0..HUNT_ITERS {
        let mut improved = false;
        let width = step * cur.rel_scale();
        for i in 0..n {
            for j in i..n {
                for sgn in [1.0, -1.0] {
                    let mut cand = cur.clone();
                    cand.set(i, j, cand.get(i, j) + sgn * width);
                    let cand = match cand.psd_clip() {
                        Ok(c) => c,
                        Err(_) => continue,
                    };
                    if let Some(v) = normalized(&cand) {
                        if v < best - 1e-15 {
                            best = v;
                            cur = cand;
                            improved = true;
                        }
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-7 {
                break;
            }
        }
    }
    (best, cur)
}

/// (σ_k/C(n,k))^{1/k} − (σ_ℓ/C(n,ℓ))^{1/ℓ} on the spectrum of PSD A.
pub fn maclaurin_gap(a: &SymMat, k: usize, l: usize) -> Result<f64> {
    let n = a.n;
    if !(1 <= k && k <= l && l <= n) {
        return Err(Error::Argument(format!(
            "maclaurin indices need 1 <= k <= l <= n, got k={k} l={l} n={n}"
        )));
    }
    let scale = a.rel_scale();
    let eig = a.eigenvalues()?;
    if eig.min() < -1e-6 * scale {
        return Err(Error::Precondition(format!(
            "matrix is materially non-PSD (min eigenvalue {:e})",
            eig.min()
        )));
    }
    let vals: Vec<f64> = eig.values().iter().map(|&v| v.max(0.0)).collect();
    let sig = crate::symmat::elementary_symmetric_all(&vals);
    let mean = |j: usize| -> f64 {
        math::nth_root((sig[j] / math::binomial(n, j)).max(0.0), j as u32)
    };
    Ok(mean(k) - mean(l))
}

/// Sweeps `maclaurin_gap` over all index pairs on random PSD matrices,
/// slack normalized by 1 + ‖A‖_F.
pub fn maclaurin_sweep(n: usize, samples: usize, seed: u64) -> CheckReport {
    let mut tracker = SlackTracker::new();
    for i in 0..samples {
        let mut rng = CounterRng::stream(seed, i as u64);
        let a = random_psd_with(&mut rng, n, PsdStyle::ALL[i % 3]);
        let scale = a.rel_scale();
        for k in 1..=n {
            for l in k..=n {
                match maclaurin_gap(&a, k, l) {
                    Ok(gap) => tracker.observe(gap / scale, || Witness::MatrixIndices {
                        a: a.clone(),
                        k,
                        l,
                    }),
                    Err(_) => continue,
                }
            }
        }
    }
    let mut report = tracker.into_report("maclaurin", &format!("n={n}"), 1e-9);
    report.push_note(String::from(
        "slack = normalized power-mean gap over all index pairs, per sample scale 1 + |A|_F",
    ));
    report
}

/// Homogeneous polynomial 𝔭_τ(x) = G(τ·diag(x)·τᵀ) in monomial form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonomialExpansion {
    pub n: usize,
    pub degree: usize,
    /// (exponent multi-index, coefficient), in graded-lexicographic order
    /// with the first variable's exponent descending; every multi-index has
    /// total degree `degree`.
    pub coefficients: Vec<(Vec<usize>, f64)>,
    pub fit_residual: f64,
}

impl MonomialExpansion {
    /// Evaluates the expansion at a point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coefficients
            .iter()
            .map(|(alpha, c)| {
                c * alpha
                    .iter()
                    .zip(x)
                    .map(|(&e, &xi)| math::powi(xi, e as u32))
                    .product::<f64>()
            })
            .sum()
    }

    pub fn min_coefficient(&self) -> (usize, f64) {
        let mut arg = 0;
        let mut best = f64::INFINITY;
        for (i, (_, c)) in self.coefficients.iter().enumerate() {
            if *c < best {
                best = *c;
                arg = i;
            }
        }
        (arg, best)
    }
}

/// All exponent multi-indices of total degree, first coordinate descending.
fn homogeneous_exponents(n: usize, total: usize) -> Vec<Vec<usize>> {
    fn rec(vars_left: usize, total: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if vars_left == 1 {
            let mut full = prefix.clone();
            full.push(total);
            out.push(full);
            return;
        }
        for e in (0..=total).rev() {
            prefix.push(e);
            rec(vars_left - 1, total - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, total, &mut Vec::new(), &mut out);
    out
}

/// Expands x ↦ eval(τ·diag(x)·τᵀ) over the homogeneous monomial basis of the
/// given degree by least squares on 2× basis-size sample points in [−2,2]ⁿ
/// that avoid the coordinate hyperplanes.
pub fn coefficient_expansion_fn(
    n: usize,
    degree: usize,
    eval: impl Fn(&SymMat) -> Result<f64>,
    tau: &SquareMat,
    seed: u64,
) -> Result<MonomialExpansion> {
    if tau.n != n {
        return Err(Error::Dimension(format!(
            "conjugation matrix has n={}, expected {n}",
            tau.n
        )));
    }
    let basis_size = math::binomial(degree + n - 1, n - 1);
    if basis_size > BASIS_GUARD {
        return Err(Error::Argument(format!(
            "homogeneous basis size C({},{}) = {basis_size} exceeds the desk-scale guard {BASIS_GUARD}",
            degree + n - 1,
            n - 1
        )));
    }
    let basis = homogeneous_exponents(n, degree);
    let m = basis.len();
    let num_pts = 2 * m;

    let mut rng = CounterRng::stream(seed, 0x7a0);
    let mut points = Vec::with_capacity(num_pts);
    let mut ys = Vec::with_capacity(num_pts);
    for _ in 0..num_pts {
        let x: Vec<f64> = (0..n)
            .map(|_| {
                let sign = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
                sign * rng.uniform_in(0.1, 2.0)
            })
            .collect();
        let conj = SymMat::diag(&x).conjugate(tau)?;
        ys.push(eval(&conj)?);
        points.push(x);
    }

    // design matrix with unit-norm columns for conditioning
    let mut design = vec![0.0; num_pts * m];
    for (s, x) in points.iter().enumerate() {
        for (j, alpha) in basis.iter().enumerate() {
            design[s * m + j] = alpha
                .iter()
                .zip(x)
                .map(|(&e, &xi)| math::powi(xi, e as u32))
                .product();
        }
    }
    let mut col_norm = vec![0.0; m];
    for j in 0..m {
        let mut s = 0.0;
        for row in 0..num_pts {
            s += design[row * m + j] * design[row * m + j];
        }
        col_norm[j] = math::sqrt(s).max(1e-300);
    }

    // normal equations with diagonal damping
    let mut gram = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        for j in i..m {
            let mut s = 0.0;
            for row in 0..num_pts {
                s += design[row * m + i] * design[row * m + j];
            }
            let v = s / (col_norm[i] * col_norm[j]);
            gram[i * m + j] = v;
            gram[j * m + i] = v;
        }
        gram[i * m + i] += 1e-12;
        let mut s = 0.0;
        for row in 0..num_pts {
            s += design[row * m + i] * ys[row];
        }
        rhs[i] = s / col_norm[i];
    }
    math::linear_solve(m, &mut gram, &mut rhs)
        .ok_or_else(|| Error::Argument(String::from("normal equations are singular")))?;
    let coeffs: Vec<f64> = rhs.iter().zip(&col_norm).map(|(c, nm)| c / nm).collect();

    let max_y = ys.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
    let mut residual = 0.0;
    for (s, _) in points.iter().enumerate() {
        let mut fit = 0.0;
        for j in 0..m {
            fit += coeffs[j] * design[s * m + j];
        }
        residual = f64::max(residual, (fit - ys[s]).abs());
    }
    let budget = 1e-8 * math::scale_of(max_y);
    if residual > budget {
        return Err(Error::FitResidual { residual, budget });
    }

    Ok(MonomialExpansion {
        n,
        degree,
        coefficients: basis.into_iter().zip(coeffs).collect(),
        fit_residual: residual,
    })
}

/// [`coefficient_expansion_fn`] for a catalog operator.
pub fn coefficient_expansion(
    g: &PolyOperator,
    tau: &SquareMat,
    seed: u64,
) -> Result<MonomialExpansion> {
    coefficient_expansion_fn(g.dim(), g.degree(), |a| g.evaluate(a), tau, seed)
}

/// Runs [`coefficient_expansion`] over `num_tau` Haar-random τ plus τ = I;
/// min_slack is the smallest raw coefficient found, tolerance defaults to
/// 1e−7·max|coefficient| over the whole run.
pub fn coefficient_condition(
    g: &PolyOperator,
    num_tau: usize,
    seed: u64,
    tol: Option<f64>,
) -> CheckReport {
    let mut tracker = SlackTracker::new();
    let mut max_abs = 0.0f64;
    let mut worst_residual_ratio = 0.0f64;
    for t in 0..=num_tau {
        let tau = if t == 0 {
            SquareMat::identity(g.dim())
        } else {
            random_orthogonal(g.dim(), seed.wrapping_add(t as u64))
        };
        match coefficient_expansion(g, &tau, seed ^ (t as u64) << 20) {
            Ok(exp) => {
                for (alpha, c) in &exp.coefficients {
                    max_abs = max_abs.max(c.abs());
                    tracker.observe(*c, || Witness::TauMonomial {
                        tau: tau.clone(),
                        exponents: alpha.clone(),
                        coefficient: *c,
                    });
                }
                worst_residual_ratio =
                    worst_residual_ratio.max(exp.fit_residual);
            }
            Err(Error::Argument(msg)) => {
                return CheckReport::skipped_with_reason("coeffcond", g.spec_str(), msg);
            }
            Err(e) => {
                let mut r = tracker.into_report("coeffcond", g.spec_str(), 0.0);
                r.passed = false;
                r.push_note(format!("expansion at tau #{t} failed: {e}"));
                return r;
            }
        }
    }
    let tolerance = tol.unwrap_or(1e-7 * max_abs);
    let mut report = tracker.into_report("coeffcond", g.spec_str(), tolerance);
    report.push_note(String::from("slack = raw monomial coefficient of p_tau"));
    report.push_note(format!("worst fit residual {worst_residual_ratio:e}"));
    report
}

/// Evidence that an operator passed I-centrality and the coefficient
/// condition; gates the majorization gap for operators with no Gårding cone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgCertificate {
    pub operator: String,
    pub central_k: f64,
    pub min_coefficient: f64,
    pub num_tau: usize,
    pub seed: u64,
}

/// Runs both prechecks and issues the certificate consumed by
/// [`dm_gap_ng`].
pub fn certify_ng(g: &PolyOperator, num_tau: usize, seed: u64) -> Result<NgCertificate> {
    let central_k = g.is_i_central(1e-5).ok_or_else(|| {
        Error::Precondition(format!("operator {} is not I-central", g.spec_str()))
    })?;
    let report = coefficient_condition(g, num_tau, seed, None);
    if !report.passed || report.skipped.is_some() {
        return Err(Error::Precondition(format!(
            "operator {} failed the coefficient condition (min coefficient {:e}); \
             run coefficient_condition for the witness",
            g.spec_str(),
            report.min_slack
        )));
    }
    Ok(NgCertificate {
        operator: String::from(g.spec_str()),
        central_k,
        min_coefficient: report.min_slack,
        num_tau,
        seed,
    })
}

/// Majorization gap without any hyperbolicity requirement, gated on a
/// matching certificate.
pub fn dm_gap_ng(g: &PolyOperator, a: &SymMat, cert: &NgCertificate) -> Result<f64> {
    if cert.operator != g.spec_str() {
        return Err(Error::Precondition(format!(
            "certificate covers {}, not {}; run coefficient_condition first",
            cert.operator,
            g.spec_str()
        )));
    }
    dm_gap(g, a)
}

/// PSD sweep of [`dm_gap_ng`], normalized like [`dm_sweep`].
pub fn dm_ng_sweep(
    g: &PolyOperator,
    samples: usize,
    seed: u64,
    cert: &NgCertificate,
) -> CheckReport {
    let mut tracker = SlackTracker::new();
    for i in 0..samples {
        let mut rng = CounterRng::stream(seed, i as u64);
        let a = random_psd_with(&mut rng, g.dim(), PsdStyle::ALL[i % 3]);
        match dm_gap_ng(g, &a, cert) {
            Ok(gap) => {
                tracker.observe(gap / a.rel_scale(), || Witness::Matrix { a: a.clone() })
            }
            Err(e) => {
                let mut r = tracker.into_report("majorize", g.spec_str(), 1e-9);
                r.passed = false;
                r.push_note(format!("sample {i} could not be evaluated: {e}"));
                return r;
            }
        }
    }
    let mut report = tracker.into_report("majorize", g.spec_str(), 1e-9);
    report.push_note(String::from(
        "slack = dm gap normalized by 1 + |A|_F (coefficient-condition certificate)",
    ));
    report
}
