//! Gårding polynomial operator algebra: the concrete catalog, Gårding
//! I-eigenvalues, cone membership, and the structural checks (I-centrality,
//! Dirichlet cones, degenerate ellipticity, tameness).
//!
//! Each operator 𝔤 is a homogeneous polynomial of degree N on symmetric
//! matrices. Its radial polynomial at A is φ_A(t) = 𝔤(tI + A); when φ_A is
//! real-rooted the negatives of its roots are the Gårding I-eigenvalues.
//!
//! Roots are computed structurally per kind instead of through a generic
//! rootfinder: matrix eigenvalues for the determinant, interlaced derivative
//! roots for elementary symmetric functions and radial derivatives, subset
//! sums for p-fold sum operators, and the explicit quadratic factor for
//! ‖A‖²det A. A generic polynomial rootfinder cannot resolve the N-fold root
//! of φ_I (clusters of radius ~ε^{1/N} around multiple roots), while the
//! structural routes keep multiple roots exact; the identity then sits in
//! every catalog cone interior exactly, as it must.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::poly;
use crate::report::{CheckReport, SlackTracker, Witness};
use crate::rng::CounterRng;
use crate::symmat::{random_psd_with, PsdStyle, SymMat};

/// Default relative tolerance for accepting radial-polynomial roots as real.
pub const DEFAULT_REALNESS_TOL: f64 = 1e-7;

/// Relative threshold separating cone interior, boundary, and exterior.
const CONE_THETA: f64 = 1e-8;

/// Operator kinds of the catalog.
#[derive(Debug, Clone, PartialEq)]
pub enum OpKind {
    /// det A, degree n.
    Det,
    /// σ_k of the eigenvalues, degree k.
    KHessian(usize),
    /// Product over all p-subsets S of Σ_{i∈S} λ_i, degree C(n,p).
    PFoldSum(usize),
    /// tr A, degree 1.
    Trace,
    /// Pointwise product of two operators on the same dimension.
    Product(Box<PolyOperator>, Box<PolyOperator>),
    /// ℓ-th radial derivative of a base operator, degree N−ℓ.
    RadialDerivative(Box<PolyOperator>, usize),
    /// ‖A‖_F²·det A, degree n+2; hyperbolic only on multiples of I.
    NormSqDet,
}

/// A homogeneous polynomial operator on S(n) with cached degree and 𝔤(I).
#[derive(Debug, Clone, PartialEq)]
pub struct PolyOperator {
    kind: OpKind,
    dim: usize,
    degree: usize,
    value_at_identity: f64,
    spec: String,
}

/// Gårding I-eigenvalues of one matrix under one operator.
///
/// `values` follow each factor's natural normalization (for p-fold sums the
/// eigenvalue sums themselves, i.e. the factors of the product); `strict`
/// holds the plain root negatives of φ_A, which shift by exactly s under
/// A ↦ A + sI and drive cone membership and boundary projection.
#[derive(Debug, Clone, PartialEq)]
pub struct GardingSpectrum {
    values: Vec<f64>,
    strict: Vec<f64>,
    max_imag: f64,
}

impl GardingSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Root negatives of φ_A with no per-kind normalization, ascending.
    pub fn strict(&self) -> &[f64] {
        &self.strict
    }

    pub fn max_imag(&self) -> f64 {
        self.max_imag
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min_strict(&self) -> f64 {
        self.strict[0]
    }

    fn strict_scale(&self) -> f64 {
        math::scale_of(self.strict.iter().fold(0.0, |a: f64, v| a.max(v.abs())))
    }
}

/// Position of a matrix relative to the operator's Gårding cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeTag {
    Interior,
    Boundary,
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConePosition {
    pub tag: ConeTag,
    pub min_garding_eig: f64,
}

impl ConePosition {
    /// Membership in the closed cone Γ̄ (boundary counts as inside).
    pub fn in_closure(&self) -> bool {
        self.tag != ConeTag::Outside
    }
}

impl PolyOperator {
    pub fn det(n: usize) -> Result<Self> {
        Self::build(OpKind::Det, n, format!("det:n={n}"))
    }

    pub fn k_hessian(k: usize, n: usize) -> Result<Self> {
        if k < 1 || k > n {
            return Err(Error::Argument(format!("sigma index k={k} out of range 1..={n}")));
        }
        Self::build(OpKind::KHessian(k), n, format!("sigma:k={k},n={n}"))
    }

    pub fn p_fold_sum(p: usize, n: usize) -> Result<Self> {
        if p < 1 || p > n {
            return Err(Error::Argument(format!("pfold index p={p} out of range 1..={n}")));
        }
        Self::build(OpKind::PFoldSum(p), n, format!("pfold:p={p},n={n}"))
    }

    pub fn trace(n: usize) -> Result<Self> {
        Self::build(OpKind::Trace, n, format!("trace:n={n}"))
    }

    pub fn product(g: PolyOperator, h: PolyOperator) -> Result<Self> {
        if g.dim != h.dim {
            return Err(Error::Dimension(format!(
                "product children disagree on dimension: {} vs {}",
                g.dim, h.dim
            )));
        }
        let n = g.dim;
        let spec = format!("prod({},{})", g.spec, h.spec);
        Self::build(OpKind::Product(Box::new(g), Box::new(h)), n, spec)
    }

    pub fn radial_derivative(base: PolyOperator, ell: usize) -> Result<Self> {
        if ell < 1 || ell >= base.degree {
            return Err(Error::Argument(format!(
                "radial derivative order l={ell} out of range 1..{} for base of degree {}",
                base.degree, base.degree
            )));
        }
        let n = base.dim;
        let spec = format!("rderiv({},l={ell})", base.spec);
        Self::build(OpKind::RadialDerivative(Box::new(base), ell), n, spec)
    }

    pub fn norm_sq_det(n: usize) -> Result<Self> {
        Self::build(OpKind::NormSqDet, n, format!("normsqdet:n={n}"))
    }

    fn build(kind: OpKind, dim: usize, spec: String) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Argument(String::from("operator dimension must be at least 1")));
        }
        let degree = match &kind {
            OpKind::Det => dim,
            OpKind::KHessian(k) => *k,
            OpKind::PFoldSum(p) => {
                let d = math::binomial(dim, *p);
                if d > 1e6 {
                    return Err(Error::Argument(format!(
                        "pfold degree C({dim},{p}) = {d} exceeds the desk-scale guard"
                    )));
                }
                d as usize
            }
            OpKind::Trace => 1,
            OpKind::Product(g, h) => g.degree + h.degree,
            OpKind::RadialDerivative(base, ell) => base.degree - ell,
            OpKind::NormSqDet => dim + 2,
        };
        let mut op = PolyOperator { kind, dim, degree, value_at_identity: 0.0, spec };
        let gi = op.evaluate(&SymMat::identity(dim))?;
        if !(gi.is_finite() && gi > 0.0) {
            return Err(Error::Argument(format!(
                "operator {} has non-positive or overflowing value {gi:e} at the identity",
                op.spec
            )));
        }
        op.value_at_identity = gi;
        Ok(op)
    }

    pub fn kind(&self) -> &OpKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// 𝔤(I), cached at construction; positive for every catalog operator.
    pub fn value_at_identity(&self) -> f64 {
        self.value_at_identity
    }

    /// Canonical spec string, re-parseable by [`PolyOperator::parse`].
    pub fn spec_str(&self) -> &str {
        &self.spec
    }

    fn check_dim(&self, a: &SymMat) -> Result<()> {
        if a.n != self.dim {
            return Err(Error::Dimension(format!(
                "operator {} expects n={}, matrix has n={}",
                self.spec, self.dim, a.n
            )));
        }
        Ok(())
    }

    /// 𝔤(A).
    pub fn evaluate(&self, a: &SymMat) -> Result<f64> {
        self.check_dim(a)?;
        match &self.kind {
            OpKind::Det => Ok(a.det()),
            OpKind::KHessian(k) => a.eigenvalues()?.elementary_symmetric(*k),
            OpKind::PFoldSum(p) => {
                let eig = a.eigenvalues()?;
                Ok(p_subset_sums(eig.values(), *p).iter().product())
            }
            OpKind::Trace => Ok(a.trace()),
            OpKind::Product(g, h) => Ok(g.evaluate(a)? * h.evaluate(a)?),
            OpKind::RadialDerivative(base, ell) => {
                // ℓ!·(coefficient of t^ℓ in φ_A of the base). When the base
                // is hyperbolic at A the coefficients come exactly from the
                // root factorization 𝔤(I)·∏(t − t_k); otherwise fall back to
                // Chebyshev interpolation.
                match base.strict_pairs(a, DEFAULT_REALNESS_TOL) {
                    Ok((pairs, _)) => {
                        let roots: Vec<f64> = pairs.iter().map(|(s, _)| -s).collect();
                        let mono = poly::coeffs_from_roots(&roots);
                        Ok(math::factorial(*ell) * base.value_at_identity * mono[*ell])
                    }
                    Err(Error::NotHyperbolicAt { .. }) => {
                        let coeffs = base.radial_poly_coeffs(a)?;
                        Ok(math::factorial(*ell) * coeffs[*ell])
                    }
                    Err(e) => Err(e),
                }
            }
            OpKind::NormSqDet => Ok(a.frobenius_norm_sq() * a.det()),
        }
    }

    /// Coefficients c_0..c_N of φ_A(t) = 𝔤(tI + A), by interpolation at N+1
    /// Chebyshev nodes on [−R, R], R = 2(1 + spectral radius)·N, with a
    /// refit audit.
    pub fn radial_poly_coeffs(&self, a: &SymMat) -> Result<Vec<f64>> {
        self.check_dim(a)?;
        let radius = 2.0 * math::scale_of(a.spectral_radius()?) * self.degree as f64;
        let nodes = poly::chebyshev_nodes(self.degree + 1, radius);
        let mut ys = Vec::with_capacity(nodes.len());
        for &t in &nodes {
            ys.push(self.evaluate(&a.add_scaled_identity(t))?);
        }
        let coeffs = poly::interpolate_coeffs(&nodes, &ys);
        let max_val = ys.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        let budget = 1e-8 * math::scale_of(max_val);
        let residual = nodes
            .iter()
            .zip(&ys)
            .map(|(&t, &y)| (poly::eval(&coeffs, t) - y).abs())
            .fold(0.0, f64::max);
        if residual > budget {
            return Err(Error::FitResidual { residual, budget });
        }
        Ok(coeffs)
    }

    /// (strict λ̂, reported λ) pairs plus the largest imaginary magnitude
    /// encountered; unsorted.
    fn strict_pairs(&self, a: &SymMat, tol: f64) -> Result<(Vec<(f64, f64)>, f64)> {
        match &self.kind {
            OpKind::Det => {
                let eig = a.eigenvalues()?;
                Ok((eig.values().iter().map(|&l| (l, l)).collect(), 0.0))
            }
            OpKind::KHessian(k) => {
                let eig = a.eigenvalues()?;
                let roots: Vec<f64> = eig.values().iter().map(|&l| -l).collect();
                let d = poly::derivative_roots(&roots, self.dim - k);
                Ok((d.iter().map(|&r| (-r, -r)).collect(), 0.0))
            }
            OpKind::PFoldSum(p) => {
                let eig = a.eigenvalues()?;
                let sums = p_subset_sums(eig.values(), *p);
                let pf = *p as f64;
                Ok((sums.iter().map(|&s| (s / pf, s)).collect(), 0.0))
            }
            OpKind::Trace => {
                let m = a.trace() / self.dim as f64;
                Ok((vec![(m, m)], 0.0))
            }
            OpKind::Product(g, h) => {
                let (mut pg, ig) = g.strict_pairs(a, tol)?;
                let (ph, ih) = h.strict_pairs(a, tol)?;
                pg.extend(ph);
                Ok((pg, ig.max(ih)))
            }
            OpKind::RadialDerivative(base, ell) => {
                let (pairs, mi) = base.strict_pairs(a, tol)?;
                let roots: Vec<f64> = pairs.iter().map(|(s, _)| -s).collect();
                let d = poly::derivative_roots(&roots, *ell);
                Ok((d.iter().map(|&r| (-r, -r)).collect(), mi))
            }
            OpKind::NormSqDet => {
                // φ_A(t) = (n·t² + 2(tr A)t + ‖A‖²)·∏(t + λ_i); the quadratic
                // factor has discriminant (tr A)² − n‖A‖² ≤ 0 by
                // Cauchy–Schwarz, with equality exactly on multiples of I.
                let n = self.dim as f64;
                let tr = a.trace();
                let disc = tr * tr - n * a.frobenius_norm_sq();
                let mut pairs: Vec<(f64, f64)> = a
                    .eigenvalues()?
                    .values()
                    .iter()
                    .map(|&l| (l, l))
                    .collect();
                if disc >= 0.0 {
                    let s = math::sqrt(disc);
                    for lam in [(tr - s) / n, (tr + s) / n] {
                        pairs.push((lam, lam));
                    }
                    Ok((pairs, 0.0))
                } else {
                    let im = math::sqrt(-disc) / n;
                    let re = tr / n;
                    let modulus = math::sqrt(re * re + im * im);
                    if im <= tol * (1.0 + modulus) {
                        pairs.push((re, re));
                        pairs.push((re, re));
                        Ok((pairs, im))
                    } else {
                        Err(Error::NotHyperbolicAt { max_imag: im })
                    }
                }
            }
        }
    }

    /// Gårding I-eigenvalues of A, or `NotHyperbolicAt` when the radial
    /// polynomial is not real-rooted within `tol` (relative realness test).
    pub fn garding_eigenvalues(&self, a: &SymMat, tol: f64) -> Result<GardingSpectrum> {
        self.check_dim(a)?;
        let (pairs, max_imag) = self.strict_pairs(a, tol)?;
        let mut strict: Vec<f64> = pairs.iter().map(|&(s, _)| s).collect();
        let mut values: Vec<f64> = pairs.iter().map(|&(_, v)| v).collect();
        strict.sort_by(|x, y| x.partial_cmp(y).expect("finite roots"));
        values.sort_by(|x, y| x.partial_cmp(y).expect("finite roots"));
        Ok(GardingSpectrum { values, strict, max_imag })
    }

    /// Trinary cone membership from the smallest strict Gårding eigenvalue.
    pub fn cone_contains(&self, a: &SymMat) -> Result<ConePosition> {
        let gs = self.garding_eigenvalues(a, DEFAULT_REALNESS_TOL)?;
        let min = gs.min_strict();
        let threshold = CONE_THETA * gs.strict_scale();
        let tag = if min > threshold {
            ConeTag::Interior
        } else if min < -threshold {
            ConeTag::Outside
        } else {
            ConeTag::Boundary
        };
        Ok(ConePosition { tag, min_garding_eig: min })
    }

    /// A − λ̂_min·I: shifts the smallest Gårding eigenvalue to 0, so the
    /// result lies on the cone boundary and 𝔤 vanishes there.
    pub fn boundary_project(&self, a: &SymMat) -> Result<SymMat> {
        let gs = self.garding_eigenvalues(a, DEFAULT_REALNESS_TOL)?;
        Ok(a.add_scaled_identity(-gs.min_strict()))
    }

    /// Checks whether D_I𝔤 = kI for some k > 0, by Richardson-refined central
    /// differences in every symmetric coordinate direction; returns k when
    /// the gradient is within tol·(1+k) of kI entrywise.
    pub fn is_i_central(&self, tol: f64) -> Option<f64> {
        let n = self.dim;
        let eye = SymMat::identity(n);
        let h = 1e-5;
        let mut grad = SymMat::zero(n);
        for i in 0..n {
            for j in i..n {
                let mut dir = SymMat::zero(n);
                dir.set(i, j, 1.0);
                let deriv_at = |step: f64| -> Option<f64> {
                    let plus = eye.add(&dir.scale(step)).ok()?;
                    let minus = eye.add(&dir.scale(-step)).ok()?;
                    Some((self.evaluate(&plus).ok()? - self.evaluate(&minus).ok()?) / (2.0 * step))
                };
                let d_h = deriv_at(h)?;
                let d_h2 = deriv_at(h / 2.0)?;
                let d = (4.0 * d_h2 - d_h) / 3.0;
                // off-diagonal directions perturb two mirror entries at once
                grad.set(i, j, if i == j { d } else { d / 2.0 });
            }
        }
        let k = grad.trace() / n as f64;
        if k <= 0.0 {
            return None;
        }
        let budget = tol * (1.0 + k.abs());
        for i in 0..n {
            for j in i..n {
                let target = if i == j { k } else { 0.0 };
                if (grad.get(i, j) - target).abs() > budget {
                    return None;
                }
            }
        }
        Some(k)
    }

    /// 𝔤(A+ηI) − 𝔤(A) − 𝔤(I)·η^N for A in the closed cone.
    pub fn tameness_gap(&self, a: &SymMat, eta: f64) -> Result<f64> {
        if eta <= 0.0 {
            return Err(Error::Argument(String::from("tameness step eta must be positive")));
        }
        let pos = self.cone_contains(a)?;
        if !pos.in_closure() {
            return Err(Error::Precondition(format!(
                "matrix lies outside the closed cone (min Gårding eigenvalue {:e})",
                pos.min_garding_eig
            )));
        }
        let shifted = self.evaluate(&a.add_scaled_identity(eta))?;
        let base = self.evaluate(a)?;
        Ok(shifted - base - self.value_at_identity * math::powi(eta, self.degree as u32))
    }

    /// Samples PSD matrices (all three styles round-robin) and reports the
    /// minimum over the batch of min-Gårding-eigenvalue, normalized per
    /// sample by 1 + max|λ̂|. A hyperbolicity failure records a strongly
    /// negative slack with the offending sample as witness.
    pub fn is_dirichlet(&self, samples: usize, seed: u64) -> CheckReport {
        let mut tracker = SlackTracker::new();
        let mut notes: Vec<String> = Vec::new();
        for i in 0..samples {
            let style = PsdStyle::ALL[i % 3];
            let mut rng = CounterRng::stream(seed, i as u64);
            let a = random_psd_with(&mut rng, self.dim, style);
            match self.garding_eigenvalues(&a, DEFAULT_REALNESS_TOL) {
                Ok(gs) => {
                    let slack = gs.min_strict() / gs.strict_scale();
                    tracker.observe(slack, || Witness::Matrix { a: a.clone() });
                }
                Err(Error::NotHyperbolicAt { max_imag }) => {
                    if notes.len() < 5 {
                        notes.push(format!(
                            "sample {i}: not hyperbolic (max imaginary magnitude {max_imag:e})"
                        ));
                    }
                    tracker.observe(-(1.0 + max_imag), || Witness::Matrix { a: a.clone() });
                }
                Err(e) => {
                    notes.push(format!("sample {i}: {e}"));
                    tracker.observe(-1.0, || Witness::Matrix { a: a.clone() });
                }
            }
        }
        let mut report = tracker.into_report("dirichlet", &self.spec, 1e-7);
        report.push_note(String::from(
            "slack = min Garding eigenvalue of a PSD sample, normalized by 1 + max|eig|",
        ));
        for n in notes {
            report.push_note(n);
        }
        report
    }

    /// Samples A ∈ Γ̄ and PSD P, reporting the minimum of
    /// (𝔤(A+P) − 𝔤(A)) / scale^N.
    pub fn degenerate_ellipticity_check(&self, samples: usize, seed: u64) -> CheckReport {
        let mut tracker = SlackTracker::new();
        for i in 0..samples {
            let mut rng = CounterRng::stream(seed, i as u64);
            let a = match sample_cone_closure(self, &mut rng) {
                Ok(a) => a,
                Err(Error::NotHyperbolicAt { .. }) => {
                    return CheckReport::skipped_with_reason(
                        "ellipticity",
                        &self.spec,
                        String::from("operator has no Gårding cone to sample (not hyperbolic)"),
                    );
                }
                Err(e) => {
                    return CheckReport::skipped_with_reason(
                        "ellipticity",
                        &self.spec,
                        format!("cone sampler failed: {e}"),
                    );
                }
            };
            let p = random_psd_with(&mut rng, self.dim, PsdStyle::ALL[i % 3]);
            let sum = a.add(&p).expect("dimensions match by construction");
            let gap = match (self.evaluate(&a), self.evaluate(&sum)) {
                (Ok(ga), Ok(gs)) => gs - ga,
                _ => continue,
            };
            let scale = math::scale_of(a.frobenius_norm() + p.frobenius_norm());
            let slack = gap / math::powi(scale, self.degree as u32);
            tracker.observe(slack, || Witness::MatrixPair { a: a.clone(), b: p.clone() });
        }
        let mut report = tracker.into_report("ellipticity", &self.spec, 1e-8);
        report.push_note(String::from(
            "slack = (g(A+P) - g(A)) / (1 + |A| + |P|)^N over cone-closure A and PSD P",
        ));
        report
    }

    /// Parses the operator grammar:
    /// `det:n=3 | sigma:k=2,n=4 | pfold:p=2,n=3 | trace:n=3 |
    ///  prod(g,h) | rderiv(g,l=2) | normsqdet:n=2`.
    pub fn parse(spec: &str) -> Result<PolyOperator> {
        let s = spec.trim();
        if let Some(inner) = strip_call(s, "prod") {
            let groups = split_operator_args(inner)?;
            if groups.len() != 2 {
                return Err(parse_error(format!(
                    "prod expects exactly two operator arguments, got {}",
                    groups.len()
                )));
            }
            let g = Self::parse(&groups[0])?;
            let h = Self::parse(&groups[1])?;
            return Self::product(g, h);
        }
        if let Some(inner) = strip_call(s, "rderiv") {
            let mut ell: Option<usize> = None;
            let mut base_parts: Vec<String> = Vec::new();
            for tok in split_top_level(inner) {
                if let Some(v) = tok.trim().strip_prefix("l=") {
                    ell = Some(parse_usize(v, "l")?);
                } else {
                    base_parts.push(tok);
                }
            }
            let ell = ell.ok_or_else(|| parse_error("rderiv needs an l= argument".to_owned()))?;
            let regrouped = split_operator_args(&base_parts.join(","))?;
            if regrouped.len() != 1 {
                return Err(parse_error("rderiv expects exactly one base operator".to_owned()));
            }
            let base = Self::parse(&regrouped[0])?;
            return Self::radial_derivative(base, ell);
        }

        let (head, params) = match s.split_once(':') {
            Some((h, p)) => (h.trim(), parse_params(p)?),
            None => (s, Vec::new()),
        };
        let get = |key: &str| -> Result<usize> {
            params
                .iter()
                .find(|(k, _)| k.as_str() == key)
                .map(|(_, v)| parse_usize(v, key))
                .ok_or_else(|| parse_error(format!("{head} needs a {key}= parameter")))?
        };
        let allow = |keys: &[&str]| -> Result<()> {
            for (k, _) in &params {
                if !keys.contains(&k.as_str()) {
                    return Err(parse_error(format!("unknown parameter {k}= for {head}")));
                }
            }
            Ok(())
        };
        match head {
            "det" => {
                allow(&["n"])?;
                Self::det(get("n")?)
            }
            "sigma" => {
                allow(&["k", "n"])?;
                Self::k_hessian(get("k")?, get("n")?)
            }
            "pfold" => {
                allow(&["p", "n"])?;
                Self::p_fold_sum(get("p")?, get("n")?)
            }
            "trace" => {
                allow(&["n"])?;
                Self::trace(get("n")?)
            }
            "normsqdet" => {
                allow(&["n"])?;
                Self::norm_sq_det(get("n")?)
            }
            other => Err(parse_error(format!("unknown operator '{other}'"))),
        }
    }
}

impl core::fmt::Display for PolyOperator {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&self.spec)
    }
}

fn parse_error(msg: String) -> Error {
    Error::Parse(format!(
        "{msg}; valid forms: det:n=3 | sigma:k=2,n=4 | pfold:p=2,n=3 | trace:n=3 | \
         prod(det:n=3,sigma:k=1,n=3) | rderiv(det:n=4,l=2) | normsqdet:n=2"
    ))
}

fn parse_usize(v: &str, key: &str) -> Result<usize> {
    v.trim()
        .parse::<usize>()
        .map_err(|_| parse_error(format!("parameter {key}= wants a positive integer, got '{v}'")))
}

fn parse_params(s: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| parse_error(format!("expected key=value, got '{part}'")))?;
        out.push((k.trim().to_owned(), v.trim().to_owned()));
    }
    Ok(out)
}

/// `head(inner)` → `inner`.
fn strip_call<'a>(s: &'a str, head: &str) -> Option<&'a str> {
    s.strip_prefix(head)
        .and_then(|rest| rest.trim_start().strip_prefix('('))
        .and_then(|rest| rest.strip_suffix(')'))
}

/// Splits on commas at parenthesis depth 0.
fn split_top_level(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '(' => {
                depth += 1;
                cur.push(c);
            }
            ')' => {
                depth = depth.saturating_sub(1);
                cur.push(c);
            }
            ',' if depth == 0 => {
                out.push(cur.trim().to_owned());
                cur = String::new();
            }
            _ => cur.push(c),
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_owned());
    }
    out
}

/// Groups top-level comma tokens into operator specs: a token that starts a
/// known operator head opens a new group, anything else (`n=3`, `k=2`)
/// continues the previous group's parameter list.
fn split_operator_args(s: &str) -> Result<Vec<String>> {
    const HEADS: [&str; 7] = ["det", "sigma", "pfold", "trace", "normsqdet", "prod", "rderiv"];
    let mut groups: Vec<String> = Vec::new();
    for tok in split_top_level(s) {
        let head = tok.split([':', '(']).next().unwrap_or("").trim();
        if HEADS.contains(&head) {
            groups.push(tok);
        } else if let Some(last) = groups.last_mut() {
            last.push(',');
            last.push_str(&tok);
        } else {
            return Err(parse_error(format!("expected an operator spec, got '{tok}'")));
        }
    }
    Ok(groups)
}

/// Sums of `vals` over all p-element index subsets, in lexicographic subset
/// order.
pub fn p_subset_sums(vals: &[f64], p: usize) -> Vec<f64> {
    let n = vals.len();
    if p == 0 || p > n {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..p).collect();
    let mut out = Vec::new();
    loop {
        out.push(idx.iter().map(|&i| vals[i]).sum());
        let mut i = p;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != n - p + i {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..p {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Draws from the closed Gårding cone Γ̄, mixing interior (PSD + small
/// multiple of I), boundary-projected, and far-interior points.
pub fn sample_cone_closure(g: &PolyOperator, rng: &mut CounterRng) -> Result<SymMat> {
    let style = PsdStyle::ALL[rng.index(3)];
    let p = random_psd_with(rng, g.dim(), style);
    match rng.index(3) {
        0 => Ok(p.add_scaled_identity(rng.uniform_in(0.05, 2.0))),
        1 => g.boundary_project(&p),
        _ => Ok(p.add_scaled_identity(rng.uniform_in(2.0, 8.0))),
    }
}
