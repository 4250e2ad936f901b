use serde::{Deserialize, Serialize};

use crate::error::{DebondError, Result};

/// Vertical loading `w(t)` applied at `x = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoadingProfile {
    Constant {
        value: f64,
    },
    /// Linear ramp from `from` to `to` over `[0, duration]`, constant afterwards.
    Ramp {
        from: f64,
        to: f64,
        duration: f64,
    },
    /// `sum_i coeffs[i] t^i`
    Polynomial {
        coeffs: Vec<f64>,
    },
    /// `offset + amplitude sin(omega t + phase)`
    Sinusoid {
        offset: f64,
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Piecewise-linear table `(t, w)` starting at `t = 0`, constant past the end.
    Sampled {
        points: Vec<[f64; 2]>,
    },
}

impl LoadingProfile {
    pub fn validate(&self, pointer: &str) -> Result<()> {
        let finite = |v: f64, field: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(DebondError::validation(
                    format!("{pointer}/{field}"),
                    "must be finite",
                ))
            }
        };
        match self {
            LoadingProfile::Constant { value } => finite(*value, "value"),
            LoadingProfile::Ramp { from, to, duration } => {
                finite(*from, "from")?;
                finite(*to, "to")?;
                if !(*duration > 0.0) {
                    return Err(DebondError::validation(
                        format!("{pointer}/duration"),
                        "ramp duration must be positive",
                    ));
                }
                Ok(())
            }
            LoadingProfile::Polynomial { coeffs } => {
                if coeffs.is_empty() {
                    return Err(DebondError::validation(
                        format!("{pointer}/coeffs"),
                        "need at least one coefficient",
                    ));
                }
                for (i, c) in coeffs.iter().enumerate() {
                    finite(*c, &format!("coeffs/{i}"))?;
                }
                Ok(())
            }
            LoadingProfile::Sinusoid {
                offset,
                amplitude,
                omega,
                phase,
            } => {
                finite(*offset, "offset")?;
                finite(*amplitude, "amplitude")?;
                finite(*omega, "omega")?;
                finite(*phase, "phase")
            }
            LoadingProfile::Sampled { points } => {
                if points.len() < 2 {
                    return Err(DebondError::validation(
                        format!("{pointer}/points"),
                        "need at least two samples",
                    ));
                }
                if points[0][0] != 0.0 {
                    return Err(DebondError::validation(
                        format!("{pointer}/points/0"),
                        "loading table must start at t = 0",
                    ));
                }
                for (i, w) in points.windows(2).enumerate() {
                    if !(w[1][0] > w[0][0]) || !w[1][1].is_finite() {
                        return Err(DebondError::validation(
                            format!("{pointer}/points/{}", i + 1),
                            "sample times must be strictly increasing with finite values",
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    /// `w(t)` for `t >= 0`.
    pub fn w(&self, t: f64) -> f64 {
        match self {
            LoadingProfile::Constant { value } => *value,
            LoadingProfile::Ramp { from, to, duration } => {
                let s = (t / duration).clamp(0.0, 1.0);
                from + (to - from) * s
            }
            LoadingProfile::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
            }
            LoadingProfile::Sinusoid {
                offset,
                amplitude,
                omega,
                phase,
            } => offset + amplitude * (omega * t + phase).sin(),
            LoadingProfile::Sampled { points } => {
                let last = points[points.len() - 1];
                if t >= last[0] {
                    return last[1];
                }
                if t <= 0.0 {
                    return points[0][1];
                }
                let i = segment(points, t);
                let (a, b) = (points[i], points[i + 1]);
                a[1] + (b[1] - a[1]) * (t - a[0]) / (b[0] - a[0])
            }
        }
    }

    /// `w'(t)`. Kinks take the slope of the segment to the right.
    pub fn w_dot(&self, t: f64) -> f64 {
        match self {
            LoadingProfile::Constant { .. } => 0.0,
            LoadingProfile::Ramp { from, to, duration } => {
                if t < *duration {
                    (to - from) / duration
                } else {
                    0.0
                }
            }
            LoadingProfile::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (i, c)| acc * t + i as f64 * c),
            LoadingProfile::Sinusoid {
                amplitude,
                omega,
                phase,
                ..
            } => amplitude * omega * (omega * t + phase).cos(),
            LoadingProfile::Sampled { points } => {
                let last = points[points.len() - 1];
                if t >= last[0] {
                    return 0.0;
                }
                let i = segment(points, t.max(0.0));
                let (a, b) = (points[i], points[i + 1]);
                (b[1] - a[1]) / (b[0] - a[0])
            }
        }
    }

    /// Nodes where `w_dot` may jump, inside `(0, t_end)`.
    pub fn kinks(&self, t_end: f64) -> Vec<f64> {
        match self {
            LoadingProfile::Ramp { duration, .. } if *duration < t_end => vec![*duration],
            LoadingProfile::Sampled { points } => points
                .iter()
                .map(|p| p[0])
                .filter(|&t| t > 0.0 && t < t_end)
                .collect(),
            _ => Vec::new(),
        }
    }

    /// `max_{[0, t_end]} w^2`, scanned on a fine grid plus all kinks.
    pub fn max_w_squared(&self, t_end: f64) -> f64 {
        let n = 20_000;
        let mut m = self.w(0.0).powi(2).max(self.w(t_end).powi(2));
        for i in 1..n {
            m = m.max(self.w(t_end * i as f64 / n as f64).powi(2));
        }
        for t in self.kinks(t_end) {
            m = m.max(self.w(t).powi(2));
        }
        m
    }
}

fn segment(points: &[[f64; 2]], t: f64) -> usize {
    points
        .partition_point(|p| p[0] <= t)
        .saturating_sub(1)
        .min(points.len() - 2)
}

/// Smallest nondecreasing majorant of `w^2` sampled on `grid`.
///
/// `grid` must be sorted ascending and start at 0.
pub fn running_max_w_squared(loading: &LoadingProfile, grid: &[f64]) -> Result<Vec<f64>> {
    if grid.first().copied() != Some(0.0) {
        return Err(DebondError::Precondition(
            "running-max grid must start at t = 0".into(),
        ));
    }
    if grid.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(DebondError::Precondition(
            "running-max grid must be sorted ascending".into(),
        ));
    }
    let mut acc = f64::NEG_INFINITY;
    Ok(grid
        .iter()
        .map(|&t| {
            acc = acc.max(loading.w(t).powi(2));
            acc
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(t_end: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
    }

    #[test]
    fn running_max_examples() {
        let ramp = LoadingProfile::Polynomial {
            coeffs: vec![1.0, 1.0],
        };
        let g = grid(1.0, 100);
        let m = running_max_w_squared(&ramp, &g).unwrap();
        for (t, v) in g.iter().zip(&m) {
            assert!((v - (1.0 + t).powi(2)).abs() < 1e-14);
        }

        let sine = LoadingProfile::Sinusoid {
            offset: 0.0,
            amplitude: 1.0,
            omega: 1.0,
            phase: 0.0,
        };
        let g = grid(2.0 * std::f64::consts::PI, 400);
        let m = running_max_w_squared(&sine, &g).unwrap();
        for (t, v) in g.iter().zip(&m) {
            let expect = if *t <= std::f64::consts::FRAC_PI_2 {
                t.sin().powi(2)
            } else {
                1.0
            };
            assert!((v - expect).abs() < 1e-12, "t={t}");
        }

        let down = LoadingProfile::Polynomial {
            coeffs: vec![1.0, -1.0],
        };
        let g = grid(1.0, 50);
        assert!(running_max_w_squared(&down, &g)
            .unwrap()
            .iter()
            .all(|&v| v == 1.0));
    }

    #[test]
    fn running_max_rejects_bad_grid() {
        let w = LoadingProfile::Constant { value: 1.0 };
        assert!(running_max_w_squared(&w, &[0.1, 0.2]).is_err());
        assert!(running_max_w_squared(&w, &[0.0, 0.2, 0.1]).is_err());
    }

    #[test]
    fn derivative_integrates_back() {
        let profiles = [
            LoadingProfile::Ramp {
                from: 1.0,
                to: 1.5,
                duration: 1.3,
            },
            LoadingProfile::Polynomial {
                coeffs: vec![0.5, -1.0, 0.25, 0.1],
            },
            LoadingProfile::Sinusoid {
                offset: 0.2,
                amplitude: 0.7,
                omega: 3.0,
                phase: 0.4,
            },
            LoadingProfile::Sampled {
                points: vec![[0.0, 1.0], [0.4, 1.3], [1.1, 0.9], [2.0, 1.0]],
            },
        ];
        for p in profiles {
            let n = 40_000;
            let t_end = 2.5;
            let h = t_end / n as f64;
            let mut acc = p.w(0.0);
            for i in 0..n {
                let a = i as f64 * h;
                acc += h / 6.0 * (p.w_dot(a) + 4.0 * p.w_dot(a + 0.5 * h) + p.w_dot(a + h));
            }
            assert!((acc - p.w(t_end)).abs() < 1e-4, "{p:?}");
        }
    }

    proptest! {
        #[test]
        fn running_max_is_monotone_majorant_and_idempotent(
            amp in 0.1f64..2.0, omega in 0.1f64..8.0, phase in -3.0f64..3.0
        ) {
            let p = LoadingProfile::Sinusoid { offset: 0.3, amplitude: amp, omega, phase };
            let g = grid(3.0, 300);
            let m = running_max_w_squared(&p, &g).unwrap();
            prop_assert_eq!(m[0], p.w(0.0).powi(2));
            for w in m.windows(2) { prop_assert!(w[1] >= w[0]); }
            for (t, v) in g.iter().zip(&m) { prop_assert!(*v >= p.w(*t).powi(2)); }
            let table = LoadingProfile::Sampled {
                points: g.iter().zip(&m).map(|(t, v)| [*t, v.sqrt()]).collect(),
            };
            let again = running_max_w_squared(&table, &g).unwrap();
            for (a, b) in again.iter().zip(&m) { prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0)); }
        }
    }
}
