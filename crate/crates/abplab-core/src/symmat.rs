//! Symmetric-matrix core: construction, spectra, elementary symmetric
//! functions, and deterministic random samplers.
//!
//! Matrices are stored as the upper triangle in row-major order, so each
//! value represents exactly one symmetric matrix. The eigensolve is cyclic
//! Jacobi: at the dimensions used here (n ≤ ~12) it is simple, deterministic,
//! and accurate to near machine precision.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::rng::CounterRng;

/// Off-diagonal Frobenius norm must fall under 1e-13·‖A‖_F within this many
/// cyclic sweeps; Jacobi converges quadratically, so for n ≤ 12 a handful of
/// sweeps suffices and hitting the cap indicates corrupt input.
const MAX_JACOBI_SWEEPS: usize = 100;

/// Real symmetric n×n matrix stored as its upper triangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMat {
    /// Dimension n ≥ 1.
    pub n: usize,
    /// Upper triangle, row-major: (0,0), (0,1), …, (0,n−1), (1,1), …
    pub upper: Vec<f64>,
}

/// Eigenvalues sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    values: Vec<f64>,
}

/// Dense square matrix (row-major); used for orthogonal factors and
/// eigenvector matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMat {
    pub n: usize,
    pub data: Vec<f64>,
}

/// Sampling styles for [`random_psd`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsdStyle {
    /// BBᵀ with standard-normal B: full rank almost surely.
    Generic,
    /// Rank ⌈n/2⌉ Gram matrix.
    LowRank,
    /// Generic sample with its smallest eigenvalue shifted into [0, 1e−6].
    NearBoundary,
}

impl PsdStyle {
    pub const ALL: [PsdStyle; 3] = [PsdStyle::Generic, PsdStyle::LowRank, PsdStyle::NearBoundary];

    fn stream_tag(self) -> u64 {
        match self {
            PsdStyle::Generic => 1,
            PsdStyle::LowRank => 2,
            PsdStyle::NearBoundary => 3,
        }
    }
}

fn upper_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Position of entry (i, j), i ≤ j, inside the packed upper triangle.
fn upper_idx(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * n - i * (i + 1) / 2 + j
}

impl SymMat {
    pub fn new(n: usize, upper: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument(String::from("dimension must be at least 1")));
        }
        if upper.len() != upper_len(n) {
            return Err(Error::Dimension(format!(
                "upper triangle for n={n} needs {} entries, got {}",
                upper_len(n),
                upper.len()
            )));
        }
        if upper.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument(String::from("matrix entries must be finite")));
        }
        Ok(Self { n, upper })
    }

    pub fn zero(n: usize) -> Self {
        Self { n, upper: vec![0.0; upper_len(n)] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.upper[upper_idx(n, i, i)] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zero(n);
        for (i, &v) in values.iter().enumerate() {
            m.upper[upper_idx(n, i, i)] = v;
        }
        m
    }

    /// Symmetric matrix from an entrywise generator; `f(i, j)` is read only
    /// for i ≤ j.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            for j in i..n {
                m.upper[upper_idx(n, i, j)] = f(i, j);
            }
        }
        m
    }

    /// Symmetrizes a dense row-major matrix by averaging mirror entries.
    pub fn from_dense(n: usize, dense: &[f64]) -> Self {
        Self::from_fn(n, |i, j| 0.5 * (dense[i * n + j] + dense[j * n + i]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.upper[upper_idx(self.n, a, b)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.upper[upper_idx(self.n, a, b)] = v;
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = self.get(i, j);
            }
        }
        d
    }

    pub fn add(&self, other: &SymMat) -> Result<SymMat> {
        if self.n != other.n {
            return Err(Error::Dimension(format!("add: {} vs {}", self.n, other.n)));
        }
        let upper = self.upper.iter().zip(&other.upper).map(|(a, b)| a + b).collect();
        Ok(SymMat { n: self.n, upper })
    }

    pub fn sub(&self, other: &SymMat) -> Result<SymMat> {
        if self.n != other.n {
            return Err(Error::Dimension(format!("sub: {} vs {}", self.n, other.n)));
        }
        let upper = self.upper.iter().zip(&other.upper).map(|(a, b)| a - b).collect();
        Ok(SymMat { n: self.n, upper })
    }

    pub fn scale(&self, c: f64) -> SymMat {
        SymMat { n: self.n, upper: self.upper.iter().map(|v| c * v).collect() }
    }

    /// A + sI.
    pub fn add_scaled_identity(&self, s: f64) -> SymMat {
        let mut m = self.clone();
        for i in 0..self.n {
            m.upper[upper_idx(self.n, i, i)] += s;
        }
        m
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.frobenius_norm_sq())
    }

    /// ‖A‖_F² as a plain sum of squares (no sqrt round trip, so exact for
    /// small-integer matrices).
    pub fn frobenius_norm_sq(&self) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                let v = self.upper[upper_idx(self.n, i, j)];
                sum += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        sum
    }

    /// Tolerance scale 1 + ‖A‖_F (uniform relative-tolerance convention).
    pub fn rel_scale(&self) -> f64 {
        math::scale_of(self.frobenius_norm())
    }

    /// Determinant via LU with partial pivoting on the dense form.
    pub fn det(&self) -> f64 {
        let n = self.n;
        let mut a = self.to_dense();
        let mut sign = 1.0;
        let mut det = 1.0;
        for col in 0..n {
            let mut piv = col;
            let mut best = a[col * n + col].abs();
            for row in col + 1..n {
                let cand = a[row * n + col].abs();
                if cand > best {
                    best = cand;
                    piv = row;
                }
            }
            if best == 0.0 {
                return 0.0;
            }
            if piv != col {
                for k in 0..n {
                    a.swap(col * n + k, piv * n + k);
                }
                sign = -sign;
            }
            let pivot = a[col * n + col];
            det *= pivot;
            for row in col + 1..n {
                let factor = a[row * n + col] / pivot;
                for k in col..n {
                    a[row * n + k] -= factor * a[col * n + k];
                }
            }
        }
        sign * det
    }

    /// τAτᵀ, symmetrized to kill roundoff asymmetry.
    pub fn conjugate(&self, tau: &SquareMat) -> Result<SymMat> {
        if self.n != tau.n {
            return Err(Error::Dimension(format!("conjugate: {} vs {}", self.n, tau.n)));
        }
        let n = self.n;
        let a = self.to_dense();
        // tmp = τA
        let mut tmp = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let t = tau.data[i * n + k];
                if t == 0.0 {
                    continue;
                }
                for j in 0..n {
                    tmp[i * n + j] += t * a[k * n + j];
                }
            }
        }
        // out = tmp·τᵀ
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += tmp[i * n + k] * tau.data[j * n + k];
                }
                out[i * n + j] = s;
            }
        }
        Ok(SymMat::from_dense(n, &out))
    }

    pub fn eigenvalues(&self) -> Result<Spectrum> {
        let (values, _) = jacobi_eigen(self.n, &self.to_dense())?;
        Ok(Spectrum { values })
    }

    /// Full factorization A = QΛQᵀ; column k of Q pairs with `values[k]`.
    pub fn eigen_decomposition(&self) -> Result<(Spectrum, SquareMat)> {
        let (values, q) = jacobi_eigen(self.n, &self.to_dense())?;
        Ok((Spectrum { values }, SquareMat { n: self.n, data: q }))
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        let s = self.eigenvalues()?;
        Ok(s.values.iter().fold(0.0, |acc: f64, v| acc.max(v.abs())))
    }

    /// Eigenvalue clamp at 0. Exact fixed point on PSD input: when no
    /// eigenvalue is negative the original matrix is returned unchanged.
    pub fn psd_clip(&self) -> Result<SymMat> {
        let (spec, q) = self.eigen_decomposition()?;
        if spec.values.iter().all(|&v| v >= 0.0) {
            return Ok(self.clone());
        }
        let n = self.n;
        let out = SymMat::from_fn(n, |i, j| {
            let mut s = 0.0;
            for k in 0..n {
                let lam = spec.values[k].max(0.0);
                if lam != 0.0 {
                    s += lam * q.data[i * n + k] * q.data[j * n + k];
                }
            }
            s
        });
        Ok(out)
    }
}

impl Spectrum {
    /// Wraps raw eigenvalues, sorting ascending.
    pub fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NAN)
    }

    /// σ_k of the values, 1 ≤ k ≤ n, by the coefficient recurrence for
    /// ∏(t + λ_i) (numerically stable, no division).
    pub fn elementary_symmetric(&self, k: usize) -> Result<f64> {
        let n = self.values.len();
        if k < 1 || k > n {
            return Err(Error::Argument(format!(
                "elementary symmetric index k={k} out of range 1..={n}"
            )));
        }
        Ok(elementary_symmetric_all(&self.values)[k])
    }
}

/// All σ_0..σ_n of `values` at once via the product-coefficient recurrence.
pub fn elementary_symmetric_all(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for (m, &lam) in values.iter().enumerate() {
        for j in (1..=m + 1).rev() {
            e[j] += lam * e[j - 1];
        }
    }
    e
}

impl SquareMat {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// ‖ττᵀ − I‖_F, the orthogonality defect.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.n;
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.data[i * n + k] * self.data[j * n + k];
                }
                if i == j {
                    s -= 1.0;
                }
                sum += s * s;
            }
        }
        math::sqrt(sum)
    }
}

/// Cyclic Jacobi eigensolve on a dense symmetric matrix. Returns ascending
/// eigenvalues and the orthogonal Q (columns = eigenvectors, A = QΛQᵀ).
fn jacobi_eigen(n: usize, dense: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut a = dense.to_vec();
    let mut q = SquareMat::identity(n).data;
    let norm = {
        let mut s = 0.0;
        for v in &a {
            s += v * v;
        }
        math::sqrt(s)
    };
    let tol = 1e-13 * norm;

    let off_norm = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        math::sqrt(s)
    };

    if norm == 0.0 || off_norm(&a) <= tol {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&x, &y| a[x * n + x].partial_cmp(&a[y * n + y]).expect("finite"));
        let values: Vec<f64> = idx.iter().map(|&i| a[i * n + i]).collect();
        let mut qs = vec![0.0; n * n];
        for (col, &i) in idx.iter().enumerate() {
            for row in 0..n {
                qs[row * n + col] = q[row * n + i];
            }
        }
        return Ok((values, qs));
    }

    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < MAX_JACOBI_SWEEPS {
        sweeps += 1;
        for p in 0..n {
            for r in p + 1..n {
                let apq = a[p * n + r];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[r * n + r] - a[p * n + p]) / (2.0 * apq);
                let t = if theta.abs() > 1e10 {
                    // tan collapses to 1/(2θ); avoids θ² overflow
                    0.5 / theta
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + math::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let s = t * c;
                // A ← JᵀAJ with J = G(p, r, θ)
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + r];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + r] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[r * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[r * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let qkp = q[k * n + p];
                    let qkq = q[k * n + r];
                    q[k * n + p] = c * qkp - s * qkq;
                    q[k * n + r] = s * qkp + c * qkq;
                }
            }
        }
        if off_norm(&a) <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::EigenNoConvergence { sweeps, off_norm: off_norm(&a) });
    }

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&x, &y| a[x * n + x].partial_cmp(&a[y * n + y]).expect("finite"));
    let values: Vec<f64> = idx.iter().map(|&i| a[i * n + i]).collect();
    let mut qs = vec![0.0; n * n];
    for (col, &i) in idx.iter().enumerate() {
        for row in 0..n {
            qs[row * n + col] = q[row * n + i];
        }
    }
    Ok((values, qs))
}

/// Deterministic PSD sampler; pure function of (n, seed, style).
pub fn random_psd(n: usize, seed: u64, style: PsdStyle) -> SymMat {
    let mut rng = CounterRng::stream(seed, style.stream_tag() << 32 | n as u64);
    random_psd_with(&mut rng, n, style)
}

/// PSD sampler drawing from a caller-owned stream (used by sweeps that need
/// several matrices per sample index).
pub fn random_psd_with(rng: &mut CounterRng, n: usize, style: PsdStyle) -> SymMat {
    match style {
        PsdStyle::Generic => gram_of_gaussian(n, n, rng),
        PsdStyle::LowRank => gram_of_gaussian(n, n.div_ceil(2), rng),
        PsdStyle::NearBoundary => {
            let a = gram_of_gaussian(n, n, rng);
            let target = rng.uniform() * 1e-6;
            let lam_min = a
                .eigenvalues()
                .expect("Jacobi converges on Gram matrices")
                .min();
            a.add_scaled_identity(target - lam_min)
        }
    }
}

/// Deterministic GOE-style sampler (standard-normal entries, symmetrized);
/// pure function of (n, seed).
pub fn random_symmetric(n: usize, seed: u64) -> SymMat {
    let mut rng = CounterRng::stream(seed, 5 << 32 | n as u64);
    random_symmetric_with(&mut rng, n)
}

/// Symmetric Gaussian sampler drawing from a caller-owned stream.
pub fn random_symmetric_with(rng: &mut CounterRng, n: usize) -> SymMat {
    let mut m = SymMat::zero(n);
    for i in 0..n {
        for j in i..n {
            m.set(i, j, rng.normal());
        }
    }
    m
}

/// BBᵀ for an n×r standard-normal B, assembled directly into upper storage.
fn gram_of_gaussian(n: usize, r: usize, rng: &mut CounterRng) -> SymMat {
    let mut b = vec![0.0; n * r];
    for v in b.iter_mut() {
        *v = rng.normal();
    }
    SymMat::from_fn(n, |i, j| {
        let mut s = 0.0;
        for k in 0..r {
            s += b[i * r + k] * b[j * r + k];
        }
        s
    })
}

/// Haar-distributed orthogonal matrix: Gram–Schmidt orthogonalization of a
/// Gaussian matrix with the positive-diagonal sign convention. Two
/// orthogonalization passes keep ‖ττᵀ − I‖_F at machine level.
pub fn random_orthogonal(n: usize, seed: u64) -> SquareMat {
    let mut rng = CounterRng::stream(seed, 4 << 32 | n as u64);
    'draw: loop {
        let mut g = vec![0.0; n * n];
        for v in g.iter_mut() {
            *v = rng.normal();
        }
        // columns of g orthonormalized in place
        for col in 0..n {
            for _pass in 0..2 {
                for prev in 0..col {
                    let mut dot = 0.0;
                    for row in 0..n {
                        dot += g[row * n + col] * g[row * n + prev];
                    }
                    for row in 0..n {
                        g[row * n + col] -= dot * g[row * n + prev];
                    }
                }
            }
            let mut norm = 0.0;
            for row in 0..n {
                norm += g[row * n + col] * g[row * n + col];
            }
            let norm = math::sqrt(norm);
            if norm < 1e-8 {
                // numerically dependent draw; take a fresh matrix
                continue 'draw;
            }
            for row in 0..n {
                g[row * n + col] /= norm;
            }
        }
        return SquareMat { n, data: g };
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn eigenvalues_identity_and_diagonal() {
        let s = SymMat::identity(3).eigenvalues().unwrap();
        assert_eq!(s.values(), &[1.0, 1.0, 1.0]);
        let s = SymMat::diag(&[3.0, 1.0, 2.0]).eigenvalues().unwrap();
        assert_eq!(s.values(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn eigenvalues_offdiag_pair() {
        let a = SymMat::new(2, vec![0.0, 1.0, 0.0]).unwrap();
        let s = a.eigenvalues().unwrap();
        assert_close(s.values()[0], -1.0, 1e-12);
        assert_close(s.values()[1], 1.0, 1e-12);
    }

    #[test]
    fn eigen_reconstruction_error_within_budget() {
        for seed in 0..20u64 {
            for n in 1..=8usize {
                let a = random_psd(n, seed, PsdStyle::Generic);
                let scale = a.rel_scale();
                let (spec, q) = a.eigen_decomposition().unwrap();
                let recon = SymMat::from_fn(n, |i, j| {
                    (0..n).map(|k| spec.values()[k] * q.get(i, k) * q.get(j, k)).sum()
                });
                let err = a.sub(&recon).unwrap().frobenius_norm();
                assert!(err <= 1e-10 * scale, "n={n} seed={seed} err={err:e}");
            }
        }
    }

    #[test]
    fn elementary_symmetric_matches_contract_values() {
        let s = Spectrum::new(vec![1.0, 1.0, 1.0]);
        assert_close(s.elementary_symmetric(2).unwrap(), 3.0, 1e-15);
        let s = Spectrum::new(vec![1.0, 2.0, 3.0]);
        assert_close(s.elementary_symmetric(2).unwrap(), 11.0, 1e-15);
        let s = Spectrum::new(vec![5.0]);
        assert_close(s.elementary_symmetric(1).unwrap(), 5.0, 1e-15);
        assert!(s.elementary_symmetric(2).is_err());
        assert!(s.elementary_symmetric(0).is_err());
    }

    /// Brute-force subset enumeration as an independent oracle for σ_k.
    fn sigma_brute(values: &[f64], k: usize) -> f64 {
        let n = values.len();
        let mut total = 0.0;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let mut prod = 1.0;
            for (i, &v) in values.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    prod *= v;
                }
            }
            total += prod;
        }
        total
    }

    #[test]
    fn elementary_symmetric_matches_brute_force() {
        let mut rng = CounterRng::new(11);
        for _ in 0..50 {
            let n = 1 + rng.index(6);
            let vals: Vec<f64> = (0..n).map(|_| rng.uniform_in(-3.0, 3.0)).collect();
            let s = Spectrum::new(vals.clone());
            for k in 1..=n {
                let want = sigma_brute(&vals, k);
                let got = s.elementary_symmetric(k).unwrap();
                assert_close(got, want, 1e-11 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn det_and_trace_match_spectrum() {
        for seed in 0..30u64 {
            let n = 2 + (seed as usize % 5);
            let a = random_psd(n, seed, PsdStyle::Generic);
            let scale = a.rel_scale();
            let s = a.eigenvalues().unwrap();
            let det_spec: f64 = s.values().iter().product();
            let tr_spec: f64 = s.values().iter().sum();
            assert_close(a.det(), det_spec, 1e-9 * scale * (1.0 + det_spec.abs()));
            assert_close(a.trace(), tr_spec, 1e-9 * scale);
        }
    }

    #[test]
    fn det_small_closed_forms() {
        let a = SymMat::new(2, vec![2.0, 1.0, 3.0]).unwrap();
        assert_close(a.det(), 2.0 * 3.0 - 1.0, 1e-14);
        let b = SymMat::from_fn(3, |i, j| (i + j) as f64 + if i == j { 2.0 } else { 0.0 });
        // 3x3 cofactor expansion by hand
        let d = b.to_dense();
        let want = d[0] * (d[4] * d[8] - d[5] * d[7]) - d[1] * (d[3] * d[8] - d[5] * d[6])
            + d[2] * (d[3] * d[7] - d[4] * d[6]);
        assert_close(b.det(), want, 1e-12);
    }

    #[test]
    fn spectral_invariance_under_conjugation() {
        for seed in 0..10u64 {
            let n = 2 + (seed as usize % 4);
            let a = random_psd(n, seed, PsdStyle::Generic);
            let tau = random_orthogonal(n, seed + 100);
            let b = a.conjugate(&tau).unwrap();
            let sa = a.eigenvalues().unwrap();
            let sb = b.eigenvalues().unwrap();
            let scale = a.rel_scale();
            for (x, y) in sa.values().iter().zip(sb.values()) {
                assert_close(*x, *y, 1e-9 * scale);
            }
        }
    }

    #[test]
    fn random_psd_contracts() {
        for seed in [0u64, 7, 42] {
            for n in 1..=7usize {
                for style in PsdStyle::ALL {
                    let a = random_psd(n, seed, style);
                    let scale = a.rel_scale();
                    let s = a.eigenvalues().unwrap();
                    assert!(s.min() >= -1e-12 * scale, "{style:?} n={n} min {}", s.min());
                    let b = random_psd(n, seed, style);
                    assert_eq!(a, b, "determinism");
                }
                let lr = random_psd(n, seed, PsdStyle::LowRank);
                let s = lr.eigenvalues().unwrap();
                let small = s.values().iter().filter(|v| **v <= 1e-10 * lr.rel_scale()).count();
                assert!(small >= n / 2, "low_rank n={n}: {small} tiny eigenvalues");
                let nb = random_psd(n, seed, PsdStyle::NearBoundary);
                let s = nb.eigenvalues().unwrap();
                assert!(s.min() >= -1e-12 && s.min() <= 1e-6 + 1e-12, "near_boundary min {}", s.min());
            }
        }
    }

    #[test]
    fn random_orthogonal_contracts() {
        for seed in 0..20u64 {
            for n in 1..=8usize {
                let tau = random_orthogonal(n, seed);
                assert!(tau.orthogonality_defect() <= 1e-12 * n as f64);
            }
        }
        let t1 = random_orthogonal(1, 5);
        assert!((t1.data[0].abs() - 1.0).abs() <= 1e-14);
        let tau = random_orthogonal(4, 9);
        let id = SymMat::identity(4).conjugate(&tau).unwrap();
        let diff = id.sub(&SymMat::identity(4)).unwrap().frobenius_norm();
        assert!(diff <= 1e-12);
    }

    #[test]
    fn psd_clip_fixed_point_and_projection() {
        let a = random_psd(4, 3, PsdStyle::Generic);
        assert_eq!(a.psd_clip().unwrap(), a, "PSD input returned unchanged");
        let b = SymMat::diag(&[2.0, -1.0, 0.5]);
        let c = b.psd_clip().unwrap();
        let s = c.eigenvalues().unwrap();
        assert!(s.min() >= -1e-12);
        assert_close(c.get(0, 0), 2.0, 1e-12);
        assert_close(c.get(1, 1), 0.0, 1e-12);
        assert_close(c.get(2, 2), 0.5, 1e-12);
    }

    #[test]
    fn serialization_round_trip() {
        let a = random_psd(3, 1, PsdStyle::Generic);
        let json = serde_json::to_string(&a).unwrap();
        assert!(json.contains("\"n\":3"));
        assert!(json.contains("\"upper\":["));
        let back: SymMat = serde_json::from_str(&json).unwrap();
        assert_eq!(a, back);
    }
}
