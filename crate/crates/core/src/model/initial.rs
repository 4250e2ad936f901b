use serde::{Deserialize, Serialize};

use crate::error::{DebondError, Result};

/// Initial displacement as given in the problem file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisplacementSpec {
    /// `w(0) (1 - x / ell0)`, the equilibrium profile.
    Affine,
    Sampled { points: Vec<[f64; 2]> },
}

/// Initial velocity as given in the problem file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocitySpec {
    #[default]
    Zero,
    Constant { value: f64 },
    Sampled { points: Vec<[f64; 2]> },
}


#[derive(Debug, Clone, PartialEq)]
enum Velocity {
    Constant(f64),
    Table(Vec<[f64; 2]>),
}

/// Validated `u0`, `u1` on `[0, ell0]`, both piecewise linear.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    ell0: f64,
    u0: Vec<[f64; 2]>,
    u1: Velocity,
}

/// First-order compatibility conditions under which the solution is `H^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RegularityFlags {
    pub velocity_matches_loading: bool,
    pub front_condition: bool,
}

const COMPAT_TOL: f64 = 1e-12;

fn check_table(points: &[[f64; 2]], ell0: f64, pointer: &str) -> Result<()> {
    if points.len() < 2 {
        return Err(DebondError::validation(
            format!("{pointer}/points"),
            "need at least two samples",
        ));
    }
    for (i, p) in points.iter().enumerate() {
        if !p[0].is_finite() || !p[1].is_finite() {
            return Err(DebondError::validation(
                format!("{pointer}/points/{i}"),
                "samples must be finite",
            ));
        }
    }
    for (i, w) in points.windows(2).enumerate() {
        if !(w[1][0] > w[0][0]) {
            return Err(DebondError::validation(
                format!("{pointer}/points/{}", i + 1),
                "abscissae must be strictly increasing",
            ));
        }
    }
    let last = points.len() - 1;
    if points[0][0].abs() > COMPAT_TOL * ell0 {
        return Err(DebondError::validation(
            format!("{pointer}/points/0"),
            "table must start at x = 0",
        ));
    }
    if (points[last][0] - ell0).abs() > COMPAT_TOL * ell0 {
        return Err(DebondError::validation(
            format!("{pointer}/points/{last}"),
            format!("table must end at x = ell0 = {ell0}"),
        ));
    }
    Ok(())
}

fn locate(points: &[[f64; 2]], x: f64) -> usize {
    points
        .partition_point(|p| p[0] <= x)
        .saturating_sub(1)
        .min(points.len() - 2)
}

fn interp(points: &[[f64; 2]], x: f64) -> f64 {
    let i = locate(points, x);
    let (a, b) = (points[i], points[i + 1]);
    a[1] + (b[1] - a[1]) * (x - a[0]) / (b[0] - a[0])
}

impl InitialData {
    /// Validates the data against `w0 = w(0)`. Compatibility `u0(0) = w0`,
    /// `u0(ell0) = 0` must hold to round-off; the endpoints are then set exactly.
    pub fn new(u0: &DisplacementSpec, u1: &VelocitySpec, w0: f64, ell0: f64) -> Result<Self> {
        let mut table = match u0 {
            DisplacementSpec::Affine => vec![[0.0, w0], [ell0, 0.0]],
            DisplacementSpec::Sampled { points } => {
                check_table(points, ell0, "/u0")?;
                points.clone()
            }
        };
        let last = table.len() - 1;
        let scale = w0.abs().max(1.0);
        if (table[0][1] - w0).abs() > COMPAT_TOL * scale {
            return Err(DebondError::validation(
                "/u0/points/0",
                format!("compatibility u0(0) = w(0) = {w0} violated"),
            ));
        }
        if table[last][1].abs() > COMPAT_TOL * scale {
            return Err(DebondError::validation(
                format!("/u0/points/{last}"),
                "compatibility u0(ell0) = 0 violated",
            ));
        }
        table[0] = [0.0, w0];
        table[last] = [ell0, 0.0];

        let u1 = match u1 {
            VelocitySpec::Zero => Velocity::Constant(0.0),
            VelocitySpec::Constant { value } => {
                if !value.is_finite() {
                    return Err(DebondError::validation("/u1/value", "must be finite"));
                }
                Velocity::Constant(*value)
            }
            VelocitySpec::Sampled { points } => {
                check_table(points, ell0, "/u1")?;
                let mut p = points.clone();
                let n = p.len() - 1;
                p[0][0] = 0.0;
                p[n][0] = ell0;
                Velocity::Table(p)
            }
        };
        Ok(Self {
            ell0,
            u0: table,
            u1,
        })
    }

    pub fn ell0(&self) -> f64 {
        self.ell0
    }

    /// Nodes of `u0` and (if tabulated) `u1`, merged and sorted.
    pub fn knots(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self.u0.iter().map(|p| p[0]).collect();
        if let Velocity::Table(t) = &self.u1 {
            k.extend(t.iter().map(|p| p[0]));
        }
        k.sort_by(|a, b| a.total_cmp(b));
        k.dedup();
        k
    }

    pub fn u0(&self, x: f64) -> f64 {
        interp(&self.u0, x.clamp(0.0, self.ell0))
    }

    /// Slope of `u0` on the cell containing `x` (right-continuous, last cell at `ell0`).
    pub fn u0_dot(&self, x: f64) -> f64 {
        let i = locate(&self.u0, x);
        let (a, b) = (self.u0[i], self.u0[i + 1]);
        (b[1] - a[1]) / (b[0] - a[0])
    }

    /// Left-cell slope of `u0`.
    pub fn u0_dot_left(&self, x: f64) -> f64 {
        let i = self
            .u0
            .partition_point(|p| p[0] < x)
            .saturating_sub(1)
            .min(self.u0.len() - 2);
        let (a, b) = (self.u0[i], self.u0[i + 1]);
        (b[1] - a[1]) / (b[0] - a[0])
    }

    pub fn u1(&self, x: f64) -> f64 {
        match &self.u1 {
            Velocity::Constant(c) => *c,
            Velocity::Table(t) => interp(t, x.clamp(0.0, self.ell0)),
        }
    }

    /// `int_0^x u1`, exact for the piecewise-linear profile.
    pub fn u1_integral(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, self.ell0);
        match &self.u1 {
            Velocity::Constant(c) => c * x,
            Velocity::Table(t) => {
                let mut acc = 0.0;
                for w in t.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    if x <= a[0] {
                        break;
                    }
                    let hi = x.min(b[0]);
                    let v = a[1] + (b[1] - a[1]) * (hi - a[0]) / (b[0] - a[0]);
                    acc += 0.5 * (a[1] + v) * (hi - a[0]);
                }
                acc
            }
        }
    }

    /// `int_0^ell0 (u0')^2` and `int_0^ell0 u1^2`, exact.
    pub fn gradient_and_velocity_norms(&self) -> (f64, f64) {
        let g = self
            .u0
            .windows(2)
            .map(|w| (w[1][1] - w[0][1]).powi(2) / (w[1][0] - w[0][0]))
            .sum();
        let v = match &self.u1 {
            Velocity::Constant(c) => c * c * self.ell0,
            Velocity::Table(t) => t
                .windows(2)
                .map(|w| {
                    let (a, b) = (w[0][1], w[1][1]);
                    (w[1][0] - w[0][0]) * (a * a + a * b + b * b) / 3.0
                })
                .sum(),
        };
        (g, v)
    }

    /// First-order compatibility flags, given `w'(0)`, `kappa(ell0)` and `eps`.
    pub fn regularity_flags(&self, w_dot0: f64, kappa0: f64, eps: f64) -> RegularityFlags {
        let tol = 1e-10;
        let v0 = self.u1(0.0);
        let v1 = self.u1(self.ell0);
        let d1 = self.u0_dot_left(self.ell0);
        let front_condition = if v1.abs() <= tol {
            d1 * d1 <= 2.0 * kappa0 + tol
        } else {
            (d1 * d1 - eps * eps * v1 * v1 - 2.0 * kappa0).abs() <= tol && d1 / v1 < -eps
        };
        RegularityFlags {
            velocity_matches_loading: (v0 - w_dot0).abs() <= tol,
            front_condition,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_profile() {
        let d = InitialData::new(&DisplacementSpec::Affine, &VelocitySpec::Zero, 0.9, 2.0).unwrap();
        assert_eq!(d.u0(0.0), 0.9);
        assert_eq!(d.u0(2.0), 0.0);
        assert!((d.u0(1.0) - 0.45).abs() < 1e-15);
        assert!((d.u0_dot(0.3) + 0.45).abs() < 1e-15);
        let (g, v) = d.gradient_and_velocity_norms();
        assert!((g - 0.81 / 2.0).abs() < 1e-15);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn compatibility_enforced() {
        let bad = DisplacementSpec::Sampled {
            points: vec![[0.0, 1.0], [1.0, 0.1]],
        };
        let err = InitialData::new(&bad, &VelocitySpec::Zero, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, DebondError::Validation { ref pointer, .. } if pointer == "/u0/points/1"));
        let bad = DisplacementSpec::Sampled {
            points: vec![[0.0, 0.9], [1.0, 0.0]],
        };
        assert!(InitialData::new(&bad, &VelocitySpec::Zero, 1.0, 1.0).is_err());
        let near = DisplacementSpec::Sampled {
            points: vec![[0.0, 1.0 + 1e-14], [0.5, 0.7], [1.0, 1e-15]],
        };
        let d = InitialData::new(&near, &VelocitySpec::Zero, 1.0, 1.0).unwrap();
        assert_eq!(d.u0(0.0), 1.0);
        assert_eq!(d.u0(1.0), 0.0);
    }

    #[test]
    fn velocity_integral_exact() {
        let d = InitialData::new(
            &DisplacementSpec::Affine,
            &VelocitySpec::Sampled {
                points: vec![[0.0, 0.0], [0.5, 1.0], [1.0, 0.0]],
            },
            1.0,
            1.0,
        )
        .unwrap();
        assert!((d.u1_integral(1.0) - 0.5).abs() < 1e-15);
        assert!((d.u1_integral(0.25) - 0.0625).abs() < 1e-15);
        assert!((d.u1_integral(0.75) - 0.4375).abs() < 1e-15);
        let (_, v) = d.gradient_and_velocity_norms();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn regularity_flags_equilibrium() {
        let d = InitialData::new(&DisplacementSpec::Affine, &VelocitySpec::Zero, 0.9, 1.0).unwrap();
        let f = d.regularity_flags(0.0, 0.5, 0.1);
        assert!(f.velocity_matches_loading && f.front_condition);
        let f = d.regularity_flags(0.0, 0.3, 0.1);
        assert!(!f.front_condition);
    }
}
