//! Regime classification of (x, y, lambda) and the first-order limit law
//! H_{alpha+1/2, lambda}.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::psi_alpha;

/// The Husler-Reiss coupling constant as an extended real. The degenerate
/// values are symbolic, never floating-point infinities, so the standardized
/// arguments never see 0 * inf.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Lambda {
    Zero,
    Finite(f64),
    Infinite,
}

impl Lambda {
    pub fn finite(value: f64) -> Result<Self> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::domain(format!(
                "finite lambda must be positive and finite, got {value}"
            )));
        }
        Ok(Lambda::Finite(value))
    }

    pub fn as_finite(&self) -> Option<f64> {
        match self {
            Lambda::Finite(v) => Some(*v),
            _ => None,
        }
    }
}

impl std::fmt::Display for Lambda {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Lambda::Zero => write!(f, "0"),
            Lambda::Finite(v) => write!(f, "{v}"),
            Lambda::Infinite => write!(f, "inf"),
        }
    }
}

/// Limit of c_n / a_n; `Infinite` encodes a_n = o(c_n).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RateK {
    Finite(f64),
    Infinite,
}

/// Which variable a near-boundary point is parametrized by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryVar {
    X,
    Y,
}

/// Which expansion display applies at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RegimeLabel {
    /// D < 0: both standardized arguments interior to (-1, 1).
    Interior,
    /// D = 0 with both arguments at +1: y = -(sqrt(2)lambda - sqrt(-x))^2 or
    /// the mirrored parametrization.
    BoundaryNear(BoundaryVar),
    /// D = 0 with the x-argument at -1: y = -(sqrt(2)lambda + sqrt(-x))^2.
    BoundaryFarY,
    /// D = 0 with the y-argument at -1: x = -(sqrt(2)lambda + sqrt(-y))^2.
    BoundaryFarX,
    /// D > 0, both arguments beyond +1.
    ExteriorBoth,
    /// D > 0, x-argument below -1.
    ExteriorYFar,
    /// D > 0, y-argument below -1.
    ExteriorXFar,
    /// lambda = 0 (complete dependence limit).
    LambdaZero,
    /// lambda = infinity (independence limit).
    LambdaInf,
}

impl RegimeLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeLabel::Interior => "interior",
            RegimeLabel::BoundaryNear(_) => "boundary_near",
            RegimeLabel::BoundaryFarY => "boundary_far_y",
            RegimeLabel::BoundaryFarX => "boundary_far_x",
            RegimeLabel::ExteriorBoth => "exterior_both",
            RegimeLabel::ExteriorYFar => "exterior_y_far",
            RegimeLabel::ExteriorXFar => "exterior_x_far",
            RegimeLabel::LambdaZero => "lambda_zero",
            RegimeLabel::LambdaInf => "lambda_inf",
        }
    }
}

/// Classified regime with the discriminant D = lambda^2 + x + y + (x-y)^2/(4 lambda^2)
/// (absent for the degenerate lambda values).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub label: RegimeLabel,
    pub d: Option<f64>,
}

/// A grid point with its resolved regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub x: f64,
    pub y: f64,
    pub regime: Regime,
}

impl EvalPoint {
    pub fn new(x: f64, y: f64, lambda: &Lambda, boundary_tol: f64) -> Result<Self> {
        let regime = classify_regime(x, y, lambda, boundary_tol)?;
        Ok(EvalPoint { x, y, regime })
    }
}

fn check_negative(x: f64, y: f64) -> Result<()> {
    if !(x < 0.0 && y < 0.0) {
        return Err(Error::domain(format!(
            "evaluation points require x < 0 and y < 0, got ({x}, {y})"
        )));
    }
    Ok(())
}

/// Standardized arguments of the limit law:
/// z_x = (lambda + (y-x)/(2 lambda)) / sqrt(2|x|) and symmetrically z_y.
pub fn standardized_arguments(lambda: f64, x: f64, y: f64) -> (f64, f64) {
    let zx = (lambda + (y - x) / (2.0 * lambda)) / (2.0 * x.abs()).sqrt();
    let zy = (lambda + (x - y) / (2.0 * lambda)) / (2.0 * y.abs()).sqrt();
    (zx, zy)
}

/// Classify (x, y) under the given coupling constant.
///
/// For finite lambda the discriminant satisfies D = (z_x^2 - 1) 2|x|
/// = (z_y^2 - 1) 2|y|, so on the |D| <= tol shell the boundary branch is read
/// off the signs of the standardized arguments, and in the exterior both
/// arguments lie strictly beyond +-1.
pub fn classify_regime(x: f64, y: f64, lambda: &Lambda, boundary_tol: f64) -> Result<Regime> {
    check_negative(x, y)?;
    if boundary_tol < 0.0 {
        return Err(Error::domain(format!(
            "boundary_tol must be nonnegative, got {boundary_tol}"
        )));
    }
    let lam = match lambda {
        Lambda::Zero => {
            return Ok(Regime {
                label: RegimeLabel::LambdaZero,
                d: None,
            })
        }
        Lambda::Infinite => {
            return Ok(Regime {
                label: RegimeLabel::LambdaInf,
                d: None,
            })
        }
        Lambda::Finite(v) => *v,
    };
    let d = lam * lam + x + y + (x - y) * (x - y) / (4.0 * lam * lam);
    let (zx, zy) = standardized_arguments(lam, x, y);
    let label = if d.abs() <= boundary_tol {
        // zx + zy > 0 always (their weighted sum is 2 lambda), so (-,-) cannot
        // occur; it would indicate a NaN slipping through.
        match (zx > 0.0, zy > 0.0) {
            (true, true) => {
                let param = if (zx - 1.0).abs() <= (zy - 1.0).abs() {
                    BoundaryVar::X
                } else {
                    BoundaryVar::Y
                };
                RegimeLabel::BoundaryNear(param)
            }
            (false, true) => RegimeLabel::BoundaryFarY,
            (true, false) => RegimeLabel::BoundaryFarX,
            (false, false) => return Err(Error::AmbiguousBoundary { x, y, d }),
        }
    } else if d < 0.0 {
        RegimeLabel::Interior
    } else {
        match (zx > 1.0, zy > 1.0) {
            (true, true) => RegimeLabel::ExteriorBoth,
            (false, true) => RegimeLabel::ExteriorYFar,
            (true, false) => RegimeLabel::ExteriorXFar,
            (false, false) => return Err(Error::AmbiguousBoundary { x, y, d }),
        }
    };
    Ok(Regime { label, d: Some(d) })
}

/// Exponent sum of the limit law: -log H_{alpha+1/2, lambda}(x, y).
pub fn h_exponent(alpha: f64, lambda: &Lambda, x: f64, y: f64) -> Result<f64> {
    check_negative(x, y)?;
    match lambda {
        Lambda::Zero => Ok(x.min(y).abs().powf(alpha + 0.5)),
        Lambda::Infinite => Ok(x.abs().powf(alpha + 0.5) + y.abs().powf(alpha + 0.5)),
        Lambda::Finite(lam) => {
            let (zx, zy) = standardized_arguments(*lam, x, y);
            Ok(x.abs().powf(alpha + 0.5) * psi_alpha(alpha, zx)?
                + y.abs().powf(alpha + 0.5) * psi_alpha(alpha, zy)?)
        }
    }
}

/// The first-order limit law H_{alpha+1/2, lambda}(x, y); psi_alpha is
/// clamped, which covers the exterior regimes, and the degenerate lambdas use
/// their dedicated branches exp(-|min(x,y)|^{alpha+1/2}) and
/// exp(-|x|^{alpha+1/2} - |y|^{alpha+1/2}).
pub fn h_limit(alpha: f64, lambda: &Lambda, x: f64, y: f64) -> Result<f64> {
    Ok((-h_exponent(alpha, lambda, x, y)?).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn classify_interior_from_arithmetic() {
        // lambda = 1, x = y = -2: D = 1 - 4 + 0 = -3 < 0
        let r = classify_regime(-2.0, -2.0, &Lambda::finite(1.0).unwrap(), 1e-9).unwrap();
        assert_eq!(r.label, RegimeLabel::Interior);
        assert_relative_eq!(r.d.unwrap(), -3.0, max_relative = 1e-15);
    }

    #[test]
    fn classify_boundary_near_parametrization() {
        // lambda = 1, x = -1, y = -(sqrt(2)-1)^2
        let lam = Lambda::finite(1.0).unwrap();
        let y = -(2f64.sqrt() - 1.0).powi(2);
        let r = classify_regime(-1.0, y, &lam, 1e-9).unwrap();
        assert!(matches!(r.label, RegimeLabel::BoundaryNear(_)));
    }

    #[test]
    fn classify_exterior_both() {
        // lambda = 1, x = y = -0.01: D = 1 - 0.02 > 0, z arguments = 1/sqrt(0.02) > 1
        let r = classify_regime(-0.01, -0.01, &Lambda::finite(1.0).unwrap(), 1e-9).unwrap();
        assert_eq!(r.label, RegimeLabel::ExteriorBoth);
    }

    #[test]
    fn classify_far_branches() {
        let lam = Lambda::finite(0.8).unwrap();
        let yf = -(2f64.sqrt() * 0.8 + 1.0).powi(2);
        let r = classify_regime(-1.0, yf, &lam, 1e-9).unwrap();
        assert_eq!(r.label, RegimeLabel::BoundaryFarY);
        let r = classify_regime(yf, -1.0, &lam, 1e-9).unwrap();
        assert_eq!(r.label, RegimeLabel::BoundaryFarX);
    }

    #[test]
    fn classify_degenerate_lambdas() {
        let r = classify_regime(-1.0, -2.0, &Lambda::Zero, 1e-9).unwrap();
        assert_eq!(r.label, RegimeLabel::LambdaZero);
        assert_eq!(r.d, None);
        let r = classify_regime(-1.0, -2.0, &Lambda::Infinite, 1e-9).unwrap();
        assert_eq!(r.label, RegimeLabel::LambdaInf);
    }

    #[test]
    fn classify_rejects_nonnegative_points() {
        assert!(classify_regime(0.5, -1.0, &Lambda::Zero, 1e-9).is_err());
        assert!(Lambda::finite(0.0).is_err());
        assert!(Lambda::finite(-1.0).is_err());
    }

    #[test]
    fn h_limit_independence_branch() {
        let h = h_limit(1.0, &Lambda::Infinite, -1.0, -2.0).unwrap();
        let expected = (-(1.0f64) - 2.0f64.powf(1.5)).exp();
        assert_relative_eq!(h, expected, max_relative = 1e-14);
    }

    #[test]
    fn h_limit_complete_dependence_branch() {
        // lambda = 0, (x, y) = (-1, -2), alpha = 1 -> exp(-2^{3/2})
        let h = h_limit(1.0, &Lambda::Zero, -1.0, -2.0).unwrap();
        assert_relative_eq!(h, (-(2.0f64.powf(1.5))).exp(), max_relative = 1e-14);
    }

    #[test]
    fn h_limit_swap_symmetric() {
        let lam = Lambda::finite(0.6).unwrap();
        for &(x, y) in &[(-1.0, -2.0), (-0.3, -1.7), (-2.5, -0.4)] {
            let a = h_limit(1.3, &lam, x, y).unwrap();
            let b = h_limit(1.3, &lam, y, x).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn h_limit_bounds_and_ordering() {
        // independence <= H <= comonotone on a grid
        for &lam_v in &[0.2, 0.6, 1.0, 3.0] {
            let lam = Lambda::finite(lam_v).unwrap();
            for alpha in [0.5, 1.0, 2.0] {
                for i in 0..10 {
                    for j in 0..10 {
                        let x = -5.0 + 0.55 * f64::from(i);
                        let y = -5.0 + 0.55 * f64::from(j);
                        let h = h_limit(alpha, &lam, x, y).unwrap();
                        let indep = h_limit(alpha, &Lambda::Infinite, x, y).unwrap();
                        let comon = h_limit(alpha, &Lambda::Zero, x, y).unwrap();
                        assert!((0.0..=1.0).contains(&h));
                        assert!(indep - 1e-12 <= h && h <= comon + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn h_limit_monotone_along_grid_lines() {
        let lam = Lambda::finite(0.6).unwrap();
        for alpha in [0.5, 1.0, 2.0] {
            let ys = [-5.0, -2.0, -0.8, -0.05];
            for &y in &ys {
                let mut prev = f64::NEG_INFINITY;
                for i in 0..40 {
                    let x = -5.0 + 4.95 * f64::from(i) / 39.0;
                    let h = h_limit(alpha, &lam, x, y).unwrap();
                    assert!(h >= prev - 1e-12, "alpha={alpha} x={x} y={y}");
                    prev = h;
                }
            }
        }
    }

    #[test]
    fn h_continuous_across_boundary() {
        // crossing the theorem-2/3/4 shell changes H by O(step)
        let lam_v = 0.6;
        let lam = Lambda::finite(lam_v).unwrap();
        let x = -0.25;
        let y_near = -(2.0f64.sqrt() * lam_v - 0.5).powi(2);
        let y_far = -(2.0f64.sqrt() * lam_v + 0.5).powi(2);
        for y0 in [y_near, y_far] {
            let step = 1e-6;
            let inside = h_limit(1.0, &lam, x, y0 - step).unwrap();
            let outside = h_limit(1.0, &lam, x, y0 + step).unwrap();
            assert!(
                (inside - outside).abs() < 1e-4,
                "jump at y={y0}: {inside} vs {outside}"
            );
        }
    }
}
