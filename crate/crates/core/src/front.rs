//! Piecewise-linear debonding front and the characteristic maps
//! `phi(t) = t - eps l(t)`, `psi(t) = t + eps l(t)`, `omega = phi o psi^-1`.

use std::io::Write;

use crate::error::{DebondError, Result};

/// Hard cap on reflection counting and iterate depth.
pub const MAX_REFLECTIONS: usize = 1_000_000;

const ROUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Front {
    epsilon: f64,
    knots: Vec<f64>,
    values: Vec<f64>,
    phi_nodes: Vec<f64>,
    psi_nodes: Vec<f64>,
}

impl Front {
    pub fn new(epsilon: f64, ell0: f64) -> Result<Self> {
        if !(epsilon > 0.0 && ell0 > 0.0) {
            return Err(DebondError::Precondition(
                "front needs eps > 0 and ell0 > 0".into(),
            ));
        }
        Ok(Self {
            epsilon,
            knots: vec![0.0],
            values: vec![ell0],
            phi_nodes: vec![-epsilon * ell0],
            psi_nodes: vec![epsilon * ell0],
        })
    }

    pub fn from_nodes(epsilon: f64, knots: &[f64], values: &[f64]) -> Result<Self> {
        if knots.len() != values.len() || knots.is_empty() || knots[0] != 0.0 {
            return Err(DebondError::Precondition(
                "front nodes must start at t = 0 and pair up with values".into(),
            ));
        }
        let mut f = Self::new(epsilon, values[0])?;
        for (t, l) in knots.iter().zip(values).skip(1) {
            f.push(*t, *l)?;
        }
        Ok(f)
    }

    /// Appends a node; the new segment slope must lie in `[0, 1/eps)`.
    pub fn push(&mut self, t: f64, ell: f64) -> Result<()> {
        let (t0, l0) = (self.t_last(), self.ell_last());
        if !(t > t0) {
            return Err(DebondError::InvariantViolation(format!(
                "front knots must increase ({t} after {t0})"
            )));
        }
        let slope = (ell - l0) / (t - t0);
        if !(slope >= 0.0 && slope * self.epsilon < 1.0) {
            return Err(DebondError::InvariantViolation(format!(
                "front slope {slope} outside [0, 1/eps) at t = {t}"
            )));
        }
        self.knots.push(t);
        self.values.push(ell);
        self.phi_nodes.push(t - self.epsilon * ell);
        self.psi_nodes.push(t + self.epsilon * ell);
        Ok(())
    }

    /// Keeps the first `n` nodes.
    pub fn truncate(&mut self, n: usize) {
        let n = n.max(1);
        self.knots.truncate(n);
        self.values.truncate(n);
        self.phi_nodes.truncate(n);
        self.psi_nodes.truncate(n);
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn ell0(&self) -> f64 {
        self.values[0]
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn t_last(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    pub fn ell_last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn max_value(&self) -> f64 {
        self.ell_last()
    }

    fn check_time(&self, t: f64) -> Result<f64> {
        let last = self.t_last();
        if t.is_nan() || t < -ROUND_SLACK * last.max(1.0) {
            return Err(DebondError::OutOfRange {
                what: "front time",
                value: t,
                lo: 0.0,
                hi: last,
            });
        }
        if t > last + ROUND_SLACK * last.max(1.0) {
            return Err(DebondError::InsufficientFront { need: t, have: last });
        }
        Ok(t.clamp(0.0, last))
    }

    /// Segment index `i` with `t` in `(knots[i], knots[i+1]]`; 0 at `t = 0`.
    fn left_segment(&self, t: f64) -> usize {
        self.knots
            .partition_point(|&k| k < t)
            .saturating_sub(1)
            .min(self.knots.len().saturating_sub(2))
    }

    fn segment_slope(&self, i: usize) -> f64 {
        if self.knots.len() < 2 {
            return 0.0;
        }
        (self.values[i + 1] - self.values[i]) / (self.knots[i + 1] - self.knots[i])
    }

    pub fn ell(&self, t: f64) -> Result<f64> {
        let t = self.check_time(t)?;
        if self.knots.len() == 1 {
            return Ok(self.values[0]);
        }
        let i = self.left_segment(t);
        Ok(self.values[i] + self.segment_slope(i) * (t - self.knots[i]))
    }

    /// Front speed; at knots the slope of the segment to the left.
    pub fn ell_dot(&self, t: f64) -> Result<f64> {
        let t = self.check_time(t)?;
        Ok(self.segment_slope(self.left_segment(t)))
    }

    /// Slope of segment `i`, i.e. on `(knots[i], knots[i+1])`.
    pub fn slope(&self, i: usize) -> f64 {
        self.segment_slope(i)
    }

    pub fn maps(&self) -> CharMaps<'_> {
        CharMaps { front: self }
    }

    /// CSV with header `t,ell`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "ell"])?;
        for (t, l) in self.knots.iter().zip(&self.values) {
            w.write_record([fmt(*t), fmt(*l)])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

/// Characteristic maps of a front.
#[derive(Debug, Clone, Copy)]
pub struct CharMaps<'a> {
    front: &'a Front,
}

impl<'a> CharMaps<'a> {
    pub fn front(&self) -> &'a Front {
        self.front
    }

    pub fn phi(&self, t: f64) -> Result<f64> {
        Ok(t - self.front.epsilon * self.front.ell(t)?)
    }

    pub fn psi(&self, t: f64) -> Result<f64> {
        Ok(t + self.front.epsilon * self.front.ell(t)?)
    }

    fn invert(&self, nodes: &[f64], s: f64, what: &'static str) -> Result<f64> {
        let f = self.front;
        let (lo, hi) = (nodes[0], nodes[nodes.len() - 1]);
        let slack = ROUND_SLACK * hi.abs().max(1.0);
        if s.is_nan() || s < lo - slack {
            return Err(DebondError::OutOfRange {
                what,
                value: s,
                lo,
                hi,
            });
        }
        if s > hi + slack {
            return Err(DebondError::InsufficientFront {
                need: s,
                have: hi,
            });
        }
        if nodes.len() == 1 {
            return Ok(0.0);
        }
        let s = s.clamp(lo, hi);
        let i = nodes
            .partition_point(|&v| v < s)
            .saturating_sub(1)
            .min(nodes.len() - 2);
        let (a, b) = (nodes[i], nodes[i + 1]);
        let (ta, tb) = (f.knots[i], f.knots[i + 1]);
        Ok(ta + (tb - ta) * (s - a) / (b - a))
    }

    pub fn phi_inv(&self, s: f64) -> Result<f64> {
        self.invert(&self.front.phi_nodes, s, "phi_inv argument")
    }

    pub fn psi_inv(&self, s: f64) -> Result<f64> {
        self.invert(&self.front.psi_nodes, s, "psi_inv argument")
    }

    /// Lower end of the domain of `omega`, `eps * ell0`.
    pub fn omega_domain_start(&self) -> f64 {
        self.front.psi_nodes[0]
    }

    pub fn omega(&self, s: f64) -> Result<f64> {
        self.phi(self.psi_inv(s)?)
    }

    pub fn omega_inv(&self, s: f64) -> Result<f64> {
        self.psi(self.phi_inv(s)?)
    }

    /// `omega'(s) = (1 - eps l') / (1 + eps l')` at `psi^-1(s)`.
    pub fn omega_dot(&self, s: f64) -> Result<f64> {
        let v = self.front.epsilon * self.front.ell_dot(self.psi_inv(s)?)?;
        Ok((1.0 - v) / (1.0 + v))
    }

    /// `omega` and `omega'` with a single inversion.
    pub fn omega_with_dot(&self, s: f64) -> Result<(f64, f64)> {
        let t = self.psi_inv(s)?;
        let f = self.front;
        let v = f.epsilon * f.ell_dot(t)?;
        Ok((t - f.epsilon * f.ell(t)?, (1.0 - v) / (1.0 + v)))
    }

    /// `omega^j(s)`.
    pub fn omega_iterate(&self, j: usize, s: f64) -> Result<f64> {
        let start = self.omega_domain_start();
        let mut v = s;
        for depth in 0..j {
            if v < start * (1.0 - ROUND_SLACK) {
                return Err(DebondError::IterationDepth { depth });
            }
            v = self
                .omega(v)
                .map_err(|_| DebondError::IterationDepth { depth })?;
        }
        Ok(v)
    }

    /// `prod_{i<j} omega'(omega^i(s))`, the derivative of `omega^j` at `s`.
    pub fn omega_iterate_derivative(&self, j: usize, s: f64) -> Result<f64> {
        let mut v = s;
        let mut d = 1.0;
        for depth in 0..j {
            let (next, dot) = self
                .omega_with_dot(v)
                .map_err(|_| DebondError::IterationDepth { depth })?;
            d *= dot;
            v = next;
        }
        Ok(d)
    }

    /// Minimal `m` with `omega^m(t)` in `[0, omega^-1(0))`; also returns the final point.
    pub fn reflection_count_m(&self, t: f64) -> Result<(usize, f64)> {
        if !(t >= 0.0) {
            return Err(DebondError::OutOfRange {
                what: "reflection time",
                value: t,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        let bound = self.omega_inv(0.0)?;
        self.count_down(t, bound)
    }

    /// Minimal `n` with `omega^n(s)` in `[-eps l0, eps l0)`; also returns the final point.
    pub fn reflection_count_n(&self, s: f64) -> Result<(usize, f64)> {
        let start = self.omega_domain_start();
        if !(s >= -start * (1.0 + ROUND_SLACK)) {
            return Err(DebondError::OutOfRange {
                what: "reflection abscissa",
                value: s,
                lo: -start,
                hi: f64::INFINITY,
            });
        }
        self.count_down(s, start)
    }

    fn count_down(&self, s: f64, bound: f64) -> Result<(usize, f64)> {
        let mut v = s;
        let mut n = 0;
        while v >= bound {
            if n >= MAX_REFLECTIONS {
                return Err(DebondError::IterationDepth { depth: n });
            }
            v = self.omega(v)?;
            n += 1;
        }
        Ok((n, v))
    }
}
