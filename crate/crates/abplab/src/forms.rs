//! Tiny grammars for the analytic inputs of equation-level suites: the
//! inhomogeneity f and the Dirichlet boundary data. Every form is a pure
//! function of the coordinates, so runs are reproducible from the config
//! text alone.

use anyhow::{bail, Context, Result};
use std::fmt;

/// Inhomogeneity: `const:c`, `gauss:a,s` (a·exp(−|x−m|²/s²) around the box
/// midpoint m), or `poly:c0,c1[,c2]` (affine c0 + c1·x0 + c2·x1).
#[derive(Debug, Clone, PartialEq)]
pub enum FForm {
    Const(f64),
    Gauss { amp: f64, width: f64, center: Vec<f64> },
    Poly(Vec<f64>),
}

impl FForm {
    /// `center` is the box midpoint of the suite's domain; only the gauss
    /// form uses it.
    pub fn parse(spec: &str, center: &[f64]) -> Result<FForm> {
        let spec = spec.trim();
        let (head, args) = spec
            .split_once(':')
            .with_context(|| format!("f form needs name:args, got {spec:?}"))?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .with_context(|| format!("bad number {t:?} in f form {spec:?}"))
            })
            .collect::<Result<_>>()?;
        match head.trim() {
            "const" => {
                let [c] = nums[..] else { bail!("const takes one value, got {spec:?}") };
                if !(c >= 0.0) || !c.is_finite() {
                    bail!("const f must be finite and nonnegative, got {c}");
                }
                Ok(FForm::Const(c))
            }
            "gauss" => {
                let [amp, width] = nums[..] else {
                    bail!("gauss takes amplitude,width, got {spec:?}")
                };
                if !(amp >= 0.0) || !(width > 0.0) {
                    bail!("gauss needs amplitude >= 0 and width > 0, got {spec:?}");
                }
                Ok(FForm::Gauss { amp, width, center: center.to_vec() })
            }
            "poly" => {
                if nums.is_empty() || nums.len() > 3 {
                    bail!("poly takes 1..=3 coefficients, got {spec:?}");
                }
                Ok(FForm::Poly(nums))
            }
            other => bail!("unknown f form {other:?} (expected const, gauss, or poly)"),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            FForm::Const(c) => *c,
            FForm::Gauss { amp, width, center } => {
                let r2: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(xi, ci)| (xi - ci) * (xi - ci))
                    .sum();
                amp * (-r2 / (width * width)).exp()
            }
            FForm::Poly(c) => {
                let mut v = c[0];
                for (i, ci) in c.iter().skip(1).enumerate() {
                    v += ci * x.get(i).copied().unwrap_or(0.0);
                }
                v
            }
        }
    }

    /// A valid Lipschitz constant on a box with the given half-widths, used
    /// when the config does not pin one explicitly.
    pub fn lipschitz_bound(&self) -> Option<f64> {
        match self {
            FForm::Const(_) => None,
            // |∇| of a·exp(−r²/s²) peaks at a·sqrt(2/e)/s
            FForm::Gauss { amp, width, .. } => {
                Some((amp * (2.0f64 / std::f64::consts::E).sqrt() / width).max(1e-12))
            }
            FForm::Poly(c) => {
                let g2: f64 = c.iter().skip(1).map(|ci| ci * ci).sum();
                Some(g2.sqrt().max(1e-12))
            }
        }
    }
}

impl fmt::Display for FForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FForm::Const(c) => write!(f, "const:{c}"),
            FForm::Gauss { amp, width, .. } => write!(f, "gauss:{amp},{width}"),
            FForm::Poly(c) => {
                let parts: Vec<String> = c.iter().map(|v| v.to_string()).collect();
                write!(f, "poly:{}", parts.join(","))
            }
        }
    }
}

/// Dirichlet data for the solve suite: a small named set covering the
/// manufactured-solution anchors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryForm {
    /// ½|x|²
    HalfNormSq,
    /// |x|²
    NormSq,
    /// |x₀ − ½|
    Ridge,
    /// x₀² − x₁²
    Harmonic,
    Zero,
}

impl BoundaryForm {
    pub fn parse(spec: &str) -> Result<BoundaryForm> {
        match spec.trim() {
            "halfnormsq" => Ok(BoundaryForm::HalfNormSq),
            "normsq" => Ok(BoundaryForm::NormSq),
            "ridge" => Ok(BoundaryForm::Ridge),
            "harmonic" => Ok(BoundaryForm::Harmonic),
            "zero" => Ok(BoundaryForm::Zero),
            other => bail!(
                "unknown boundary form {other:?} \
                 (expected halfnormsq, normsq, ridge, harmonic, or zero)"
            ),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        match self {
            BoundaryForm::HalfNormSq => 0.5 * r2,
            BoundaryForm::NormSq => r2,
            BoundaryForm::Ridge => (x[0] - 0.5).abs(),
            BoundaryForm::Harmonic => x[0] * x[0] - x.get(1).map_or(0.0, |v| v * v),
            BoundaryForm::Zero => 0.0,
        }
    }

    /// The known exact solution of det(D²u) = f for this data, when one
    /// exists on a box with the matching constant f.
    pub fn exact_ma_solution(&self, f: &FForm) -> Option<fn(&[f64]) -> f64> {
        match (self, f) {
            (BoundaryForm::HalfNormSq, FForm::Const(c)) if *c == 1.0 => {
                Some(|x| 0.5 * (x[0] * x[0] + x[1] * x[1]))
            }
            (BoundaryForm::NormSq, FForm::Const(c)) if *c == 4.0 => {
                Some(|x| x[0] * x[0] + x[1] * x[1])
            }
            (BoundaryForm::Ridge, FForm::Const(c)) if *c == 0.0 => Some(|x| (x[0] - 0.5).abs()),
            _ => None,
        }
    }
}

impl fmt::Display for BoundaryForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            BoundaryForm::HalfNormSq => "halfnormsq",
            BoundaryForm::NormSq => "normsq",
            BoundaryForm::Ridge => "ridge",
            BoundaryForm::Harmonic => "harmonic",
            BoundaryForm::Zero => "zero",
        };
        f.write_str(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_forms_parse_and_evaluate() {
        let c = FForm::parse("const:2.5", &[0.0, 0.0]).unwrap();
        assert_eq!(c.eval(&[3.0, -1.0]), 2.5);
        assert_eq!(c.to_string(), "const:2.5");

        let g = FForm::parse(" gauss:1.0, 0.5 ", &[0.5, 0.5]).unwrap();
        assert!((g.eval(&[0.5, 0.5]) - 1.0).abs() < 1e-15);
        assert!(g.eval(&[1.0, 1.0]) < 1.0);
        assert!(g.lipschitz_bound().unwrap() > 0.0);

        let p = FForm::parse("poly:1,0.5,0.25", &[0.0, 0.0]).unwrap();
        assert_eq!(p.eval(&[2.0, 4.0]), 3.0);

        assert!(FForm::parse("const:-1", &[0.0]).is_err());
        assert!(FForm::parse("gauss:1", &[0.0]).is_err());
        assert!(FForm::parse("blob:1", &[0.0]).is_err());
        assert!(FForm::parse("const", &[0.0]).is_err());
    }

    #[test]
    fn boundary_forms_cover_the_anchors() {
        assert_eq!(BoundaryForm::parse("halfnormsq").unwrap().eval(&[1.0, 1.0]), 1.0);
        assert_eq!(BoundaryForm::parse("normsq").unwrap().eval(&[1.0, 2.0]), 5.0);
        assert_eq!(BoundaryForm::parse("ridge").unwrap().eval(&[0.0, 0.7]), 0.5);
        assert_eq!(BoundaryForm::parse("harmonic").unwrap().eval(&[2.0, 1.0]), 3.0);
        assert!(BoundaryForm::parse("wavy").is_err());

        let f1 = FForm::Const(1.0);
        let exact = BoundaryForm::HalfNormSq.exact_ma_solution(&f1).unwrap();
        assert_eq!(exact(&[1.0, 0.0]), 0.5);
        assert!(BoundaryForm::Harmonic.exact_ma_solution(&f1).is_none());
    }
}
