//! Toughness of the glue, `kappa(x)`, and its stability transform
//! `phi_kappa(x) = x^2 kappa(x)`.

use serde::{Deserialize, Serialize};

use crate::error::{DebondError, Result};

/// Closed-form or tabulated toughness law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ToughnessKind {
    Constant { value: f64 },
    /// `a + b x`
    Affine { a: f64, b: f64 },
    /// `coeff * x^exponent`
    Power { coeff: f64, exponent: f64 },
    /// Piecewise-linear table `(x, kappa)`, held constant past the last node.
    Sampled { points: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToughnessModel {
    kind: ToughnessKind,
    ell0: f64,
    x_max: f64,
}

const DOMAIN_SLACK: f64 = 1e-12;

impl ToughnessModel {
    /// Builds and validates a toughness on `[ell0, x_max]`. `pointer` locates
    /// the toughness object in the problem file for error messages.
    pub fn new(kind: ToughnessKind, ell0: f64, x_max: f64, pointer: &str) -> Result<Self> {
        if !(ell0 > 0.0 && x_max > ell0) {
            return Err(DebondError::validation(
                pointer,
                format!("toughness domain [{ell0}, {x_max}] is empty"),
            ));
        }
        match &kind {
            ToughnessKind::Constant { value } => {
                if !(*value > 0.0) {
                    return Err(DebondError::validation(
                        format!("{pointer}/value"),
                        "constant toughness must be positive",
                    ));
                }
            }
            ToughnessKind::Affine { a, b } => {
                let lo = a + b * ell0;
                let hi = a + b * x_max;
                if !(lo > 0.0 && hi > 0.0) {
                    return Err(DebondError::validation(
                        pointer,
                        "affine toughness must be positive on [ell0, x_max]",
                    ));
                }
            }
            ToughnessKind::Power { coeff, exponent } => {
                if !(*coeff > 0.0) || !exponent.is_finite() {
                    return Err(DebondError::validation(
                        format!("{pointer}/coeff"),
                        "power toughness needs a positive coefficient and finite exponent",
                    ));
                }
            }
            ToughnessKind::Sampled { points } => {
                if points.len() < 2 {
                    return Err(DebondError::validation(
                        format!("{pointer}/points"),
                        "need at least two samples",
                    ));
                }
                for (i, w) in points.windows(2).enumerate() {
                    if !(w[1][0] > w[0][0]) {
                        return Err(DebondError::validation(
                            format!("{pointer}/points/{}", i + 1),
                            "sample abscissae must be strictly increasing",
                        ));
                    }
                }
                for (i, p) in points.iter().enumerate() {
                    if !(p[1] > 0.0) || !p[0].is_finite() {
                        return Err(DebondError::validation(
                            format!("{pointer}/points/{i}"),
                            "toughness samples must be finite and positive",
                        ));
                    }
                }
                if points[0][0] > ell0 + DOMAIN_SLACK {
                    return Err(DebondError::validation(
                        format!("{pointer}/points/0"),
                        "table must start at or before ell0",
                    ));
                }
            }
        }
        Ok(Self { kind, ell0, x_max })
    }

    pub fn kind(&self) -> &ToughnessKind {
        &self.kind
    }

    pub fn ell0(&self) -> f64 {
        self.ell0
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if x.is_nan() || x < self.ell0 - DOMAIN_SLACK || x > self.x_max * (1.0 + DOMAIN_SLACK) {
            return Err(DebondError::OutOfRange {
                what: "toughness abscissa",
                value: x,
                lo: self.ell0,
                hi: self.x_max,
            });
        }
        Ok(())
    }

    /// `kappa(x)` on `[ell0, x_max]`.
    pub fn kappa(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.kappa_unchecked(x))
    }

    pub(crate) fn kappa_unchecked(&self, x: f64) -> f64 {
        match &self.kind {
            ToughnessKind::Constant { value } => *value,
            ToughnessKind::Affine { a, b } => a + b * x,
            ToughnessKind::Power { coeff, exponent } => coeff * x.powf(*exponent),
            ToughnessKind::Sampled { points } => interp_table(points, x),
        }
    }

    /// Derivative of `kappa`; segment slope for tables (right-continuous).
    pub(crate) fn kappa_dot(&self, x: f64) -> f64 {
        match &self.kind {
            ToughnessKind::Constant { .. } => 0.0,
            ToughnessKind::Affine { b, .. } => *b,
            ToughnessKind::Power { coeff, exponent } => coeff * exponent * x.powf(exponent - 1.0),
            ToughnessKind::Sampled { points } => {
                let last = points.len() - 1;
                if x >= points[last][0] {
                    return 0.0;
                }
                let i = points.partition_point(|p| p[0] <= x).saturating_sub(1);
                let (a, b) = (points[i], points[i + 1]);
                (b[1] - a[1]) / (b[0] - a[0])
            }
        }
    }

    /// `phi_kappa(x) = x^2 kappa(x)`.
    pub fn phi_kappa(&self, x: f64) -> Result<f64> {
        Ok(x * x * self.kappa(x)?)
    }

    pub(crate) fn phi_kappa_dot(&self, x: f64) -> f64 {
        2.0 * x * self.kappa_unchecked(x) + x * x * self.kappa_dot(x)
    }

    /// `int_{ell0}^{x} kappa`.
    pub fn kappa_integral(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        let l0 = self.ell0;
        Ok(match &self.kind {
            ToughnessKind::Constant { value } => value * (x - l0),
            ToughnessKind::Affine { a, b } => a * (x - l0) + 0.5 * b * (x * x - l0 * l0),
            ToughnessKind::Power { coeff, exponent } => {
                if (exponent + 1.0).abs() < 1e-14 {
                    coeff * (x / l0).ln()
                } else {
                    let q = exponent + 1.0;
                    coeff * (x.powf(q) - l0.powf(q)) / q
                }
            }
            ToughnessKind::Sampled { points } => {
                table_integral(points, x) - table_integral(points, l0)
            }
        })
    }

    /// Limit of `phi_kappa` at infinity, used by the loading admissibility check.
    pub fn phi_kappa_limit(&self) -> f64 {
        match &self.kind {
            ToughnessKind::Constant { .. } => f64::INFINITY,
            ToughnessKind::Affine { b, .. } => {
                if *b >= 0.0 {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                }
            }
            ToughnessKind::Power { coeff, exponent } => {
                if *exponent > -2.0 {
                    f64::INFINITY
                } else if *exponent == -2.0 {
                    *coeff
                } else {
                    0.0
                }
            }
            ToughnessKind::Sampled { .. } => f64::INFINITY,
        }
    }

    /// Inverse of `phi_kappa` by bisection on `[ell0, x_max]`. Requires strict
    /// monotonicity of `phi_kappa`.
    pub fn phi_kappa_inv(&self, y: f64) -> Result<f64> {
        if !super::conditions::phi_strictly_increasing(self) {
            return Err(DebondError::Monotonicity);
        }
        self.phi_kappa_inv_unchecked(y)
    }

    pub(crate) fn phi_kappa_inv_unchecked(&self, y: f64) -> Result<f64> {
        let (mut lo, mut hi) = (self.ell0, self.x_max);
        let (ylo, yhi) = (self.phi_kappa(lo)?, self.phi_kappa(hi)?);
        let slack = 1e-12 * yhi.abs().max(1.0);
        if y.is_nan() || y < ylo - slack || y > yhi + slack {
            return Err(DebondError::OutOfRange {
                what: "phi_kappa value",
                value: y,
                lo: ylo,
                hi: yhi,
            });
        }
        if y <= ylo {
            return Ok(lo);
        }
        if y >= yhi {
            return Ok(hi);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid * self.kappa_unchecked(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

fn interp_table(points: &[[f64; 2]], x: f64) -> f64 {
    let last = points.len() - 1;
    if x <= points[0][0] {
        return points[0][1];
    }
    if x >= points[last][0] {
        return points[last][1];
    }
    let i = points.partition_point(|p| p[0] <= x).saturating_sub(1);
    let (a, b) = (points[i], points[i + 1]);
    a[1] + (b[1] - a[1]) * (x - a[0]) / (b[0] - a[0])
}

/// `int_{x_0}^{x} kappa` for the tabulated law (constant tail).
fn table_integral(points: &[[f64; 2]], x: f64) -> f64 {
    let mut acc = 0.0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if x <= a[0] {
            return acc;
        }
        let hi = x.min(b[0]);
        let k_hi = a[1] + (b[1] - a[1]) * (hi - a[0]) / (b[0] - a[0]);
        acc += 0.5 * (a[1] + k_hi) * (hi - a[0]);
        if x <= b[0] {
            return acc;
        }
    }
    let last = points[points.len() - 1];
    acc + last[1] * (x - last[0])
}
