//! Thin wrappers over `libm` for the float math that `core` does not expose.

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// Integer power by binary exponentiation; exact operation count, no libm.
pub(crate) fn powi(x: f64, n: u32) -> f64 {
    let mut base = x;
    let mut exp = n;
    let mut acc = 1.0;
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= base;
        }
        base *= base;
        exp >>= 1;
    }
    acc
}

/// `x^(1/k)` for `x ≥ 0`, exact at 0 and 1.
pub(crate) fn nth_root(x: f64, k: u32) -> f64 {
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        0.0
    } else if k == 1 {
        x
    } else if k == 2 {
        sqrt(x)
    } else {
        powf(x, 1.0 / f64::from(k))
    }
}

/// sign(x)·|x|^(1/k); keeps gap formulas continuous through small negative
/// values instead of producing NaN.
pub(crate) fn signed_nth_root(x: f64, k: u32) -> f64 {
    if x < 0.0 {
        -nth_root(-x, k)
    } else {
        nth_root(x, k)
    }
}

/// Solves a dense n×n system by LU with partial pivoting; `a` is row-major.
/// Returns None on (numerical) singularity.
pub(crate) fn linear_solve(n: usize, a: &mut [f64], b: &mut [f64]) -> Option<()> {
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
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let pivot = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row * n + k] * b[k];
        }
        b[row] = s / a[row * n + row];
    }
    Some(())
}

/// Uniform relative-tolerance convention: `1 + ‖·‖` of the relevant input.
pub(crate) fn scale_of(norm: f64) -> f64 {
    1.0 + norm
}

/// ℓ! as f64.
pub(crate) fn factorial(l: usize) -> f64 {
    (1..=l).fold(1.0, |acc, i| acc * i as f64)
}

/// Binomial coefficient as f64 (exact for the desk-scale n used here).
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}
