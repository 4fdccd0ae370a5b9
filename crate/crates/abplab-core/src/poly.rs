//! Univariate real-polynomial helpers shared by the operator layer.
//!
//! Coefficients are stored ascending: `coeffs[k]` multiplies `t^k`. Real-rooted
//! polynomials are mostly handled through their root lists, which is both
//! exact under differentiation (rootwise interlacing) and far better
//! conditioned than monomial coefficients at the degrees used here.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Horner evaluation of an ascending coefficient list.
pub fn eval(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

/// Coefficients of the derivative.
pub fn differentiate(coeffs: &[f64]) -> Vec<f64> {
    if coeffs.len() <= 1 {
        return vec![0.0];
    }
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

/// Monic coefficients of ∏(t − r_i), ascending.
pub fn coeffs_from_roots(roots: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; roots.len() + 1];
    c[0] = 1.0;
    for (m, &r) in roots.iter().enumerate() {
        // multiply by (t − r): shift up, subtract r·previous
        c[m + 1] = c[m];
        for k in (1..=m).rev() {
            c[k] = c[k - 1] - r * c[k];
        }
        c[0] *= -r;
    }
    c
}

/// Roots of the ℓ-th derivative of the monic real-rooted polynomial with the
/// given roots, computed without ever forming coefficients.
///
/// Each derivative step uses Rolle interlacing: a root of multiplicity m
/// carries over with multiplicity m−1, and between consecutive distinct
/// roots u < v the derivative has exactly one simple root, located where the
/// logarithmic derivative Σ 1/(t − r_j) (strictly decreasing on (u, v))
/// changes sign. Multiple roots are therefore preserved exactly; in
/// particular the N-fold root of the radial polynomial at the identity stays
/// an exact (N−ℓ)-fold root.
pub fn derivative_roots(roots: &[f64], ell: usize) -> Vec<f64> {
    let mut current = roots.to_vec();
    current.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
    for _ in 0..ell {
        current = derivative_roots_once(&current);
    }
    current
}

fn derivative_roots_once(sorted: &[f64]) -> Vec<f64> {
    let m = sorted.len();
    if m <= 1 {
        return Vec::new();
    }
    let scale = math::scale_of(sorted.iter().fold(0.0, |a: f64, r| a.max(r.abs())));
    // Gaps below this are numerically coincident roots; treating them as a
    // multiple root moves critical points by at most the gap itself.
    let cluster_tol = 1e-12 * scale;

    // (center, multiplicity, last member) per cluster of coincident roots
    let mut clusters: Vec<(f64, usize, f64)> = Vec::new();
    for &r in sorted {
        match clusters.last_mut() {
            Some((center, count, hi)) if r - *hi <= cluster_tol => {
                *count += 1;
                *hi = r;
                *center += (r - *center) / *count as f64;
            }
            _ => clusters.push((r, 1, r)),
        }
    }

    let mut out = Vec::with_capacity(m - 1);
    for &(center, count, _) in &clusters {
        for _ in 1..count {
            out.push(center);
        }
    }
    for w in clusters.windows(2) {
        let (_, _, hi_left) = w[0];
        let (lo_right, _, _) = w[1];
        out.push(critical_point_between(sorted, hi_left, lo_right));
    }
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
    out
}

/// Unique zero of Σ 1/(t − r_j) in the open interval (u, v), where every r_j
/// lies outside (u, v). The sum is strictly decreasing there, so plain
/// bisection on midpoints (which never touch a root) is unconditionally safe.
fn critical_point_between(roots: &[f64], u: f64, v: f64) -> f64 {
    let mut lo = u;
    let mut hi = v;
    for _ in 0..120 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g: f64 = roots.iter().map(|&r| 1.0 / (mid - r)).sum();
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Chebyshev–Gauss nodes on [−r, r], ascending.
pub fn chebyshev_nodes(m: usize, r: f64) -> Vec<f64> {
    let mut nodes: Vec<f64> = (0..m)
        .map(|j| r * math::cos(core::f64::consts::PI * (2.0 * j as f64 + 1.0) / (2.0 * m as f64)))
        .collect();
    nodes.reverse();
    nodes
}

/// Monomial coefficients (ascending) of the unique interpolant through
/// (xs[i], ys[i]), via Newton divided differences expanded to monomial form.
pub fn interpolate_coeffs(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let m = xs.len();
    debug_assert_eq!(m, ys.len());
    // divided-difference table, in place
    let mut dd = ys.to_vec();
    for level in 1..m {
        for i in (level..m).rev() {
            dd[i] = (dd[i] - dd[i - 1]) / (xs[i] - xs[i - level]);
        }
    }
    // expand Newton form: poly += dd[k]·∏_{j<k}(t − xs[j])
    let mut coeffs = vec![0.0; m];
    let mut basis = vec![0.0; m];
    basis[0] = 1.0;
    let mut basis_deg = 0;
    for k in 0..m {
        for i in 0..=basis_deg {
            coeffs[i] += dd[k] * basis[i];
        }
        if k + 1 < m {
            // basis ← basis·(t − xs[k])
            basis_deg += 1;
            for i in (1..=basis_deg).rev() {
                basis[i] = basis[i - 1] - xs[k] * basis[i];
            }
            basis[0] *= -xs[k];
        }
    }
    coeffs
}

/// All complex roots of the polynomial by Durand–Kerner iteration; returned
/// as (re, im) pairs. Test oracle for the structured root pipelines: slow and
/// cluster-blind, but independent of any interlacing argument.
pub fn durand_kerner(coeffs: &[f64]) -> Vec<(f64, f64)> {
    let mut c = coeffs.to_vec();
    while c.len() > 1 && c.last() == Some(&0.0) {
        c.pop();
    }
    let deg = c.len().saturating_sub(1);
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let monic: Vec<f64> = c.iter().map(|v| v / lead).collect();
    let radius = 1.0 + monic.iter().take(deg).fold(0.0, |a: f64, v| a.max(v.abs()));

    let eval_c = |z: (f64, f64)| -> (f64, f64) {
        let mut acc = (0.0, 0.0);
        for &co in monic.iter().rev() {
            acc = (acc.0 * z.0 - acc.1 * z.1 + co, acc.0 * z.1 + acc.1 * z.0);
        }
        acc
    };

    // seeds on a spiral of the root-bound circle
    let mut z: Vec<(f64, f64)> = (0..deg)
        .map(|k| {
            let ang = 2.0 * core::f64::consts::PI * k as f64 / deg as f64 + 0.4;
            (radius * 0.7 * math::cos(ang), radius * 0.7 * math::cos(ang - core::f64::consts::FRAC_PI_2))
        })
        .collect();

    for _ in 0..600 {
        let mut moved: f64 = 0.0;
        for i in 0..deg {
            let p = eval_c(z[i]);
            let mut denom = (1.0, 0.0);
            for j in 0..deg {
                if i != j {
                    let d = (z[i].0 - z[j].0, z[i].1 - z[j].1);
                    denom = (denom.0 * d.0 - denom.1 * d.1, denom.0 * d.1 + denom.1 * d.0);
                }
            }
            let dn = denom.0 * denom.0 + denom.1 * denom.1;
            if dn == 0.0 {
                continue;
            }
            let step = (
                (p.0 * denom.0 + p.1 * denom.1) / dn,
                (p.1 * denom.0 - p.0 * denom.1) / dn,
            );
            z[i] = (z[i].0 - step.0, z[i].1 - step.1);
            moved = moved.max(math::sqrt(step.0 * step.0 + step.1 * step.1));
        }
        if moved <= 1e-14 * radius {
            break;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn coeffs_from_roots_expands_products() {
        // (t−1)(t−2)(t−3) = t³ − 6t² + 11t − 6
        let c = coeffs_from_roots(&[1.0, 2.0, 3.0]);
        assert_eq!(c, vec![-6.0, 11.0, -6.0, 1.0]);
        assert_eq!(coeffs_from_roots(&[]), vec![1.0]);
    }

    #[test]
    fn eval_and_differentiate() {
        let c = vec![-6.0, 11.0, -6.0, 1.0];
        assert_eq!(eval(&c, 0.0), -6.0);
        assert_eq!(eval(&c, 1.0), 0.0);
        assert_eq!(eval(&c, 4.0), 6.0); // (4−1)(4−2)(4−3)
        assert_eq!(differentiate(&c), vec![11.0, -12.0, 3.0]);
    }

    #[test]
    fn derivative_roots_simple_cubic() {
        // p = (t−1)(t−2)(t−3); p' roots 2 ± 1/√3
        let r = derivative_roots(&[1.0, 2.0, 3.0], 1);
        assert_eq!(r.len(), 2);
        let s = 1.0 / libm::sqrt(3.0);
        assert!((r[0] - (2.0 - s)).abs() < 1e-12, "{r:?}");
        assert!((r[1] - (2.0 + s)).abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn derivative_roots_multiple_root_exact() {
        // (t+1)^5: every derivative keeps the exact root −1
        let roots = vec![-1.0; 5];
        for ell in 1..5 {
            let r = derivative_roots(&roots, ell);
            assert_eq!(r.len(), 5 - ell);
            assert!(r.iter().all(|&x| x == -1.0), "ell={ell} {r:?}");
        }
    }

    #[test]
    fn derivative_roots_match_coefficient_route() {
        // well-separated roots: differentiate coefficients, re-solve by
        // Durand–Kerner, compare
        let roots = vec![-3.0, -0.5, 1.25, 2.0, 5.5];
        for ell in 1..4usize {
            let fast = derivative_roots(&roots, ell);
            let mut c = coeffs_from_roots(&roots);
            for _ in 0..ell {
                c = differentiate(&c);
            }
            let mut slow: alloc::vec::Vec<f64> = durand_kerner(&c)
                .into_iter()
                .map(|(re, im)| {
                    assert!(im.abs() < 1e-9, "imag {im}");
                    re
                })
                .collect();
            slow.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(fast.len(), slow.len());
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-9, "ell={ell}: {fast:?} vs {slow:?}");
            }
        }
    }

    #[test]
    fn interpolation_recovers_coefficients() {
        let c = vec![2.0, -1.0, 0.0, 3.0, 0.5];
        let xs = chebyshev_nodes(5, 4.0);
        let ys: alloc::vec::Vec<f64> = xs.iter().map(|&x| eval(&c, x)).collect();
        let got = interpolate_coeffs(&xs, &ys);
        for (a, b) in c.iter().zip(&got) {
            assert!((a - b).abs() < 1e-10, "{c:?} vs {got:?}");
        }
    }

    #[test]
    fn durand_kerner_finds_complex_pair() {
        // t² + 1
        let roots = durand_kerner(&[1.0, 0.0, 1.0]);
        assert_eq!(roots.len(), 2);
        for (re, im) in roots {
            assert!(re.abs() < 1e-10);
            assert!((im.abs() - 1.0).abs() < 1e-10);
        }
    }
}
