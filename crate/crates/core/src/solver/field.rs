use std::io::Write;

use crate::error::Result;
use crate::front::fmt;

/// One time level: nodes `x_j = j dx` strictly inside the domain, plus the
/// front point `x = ell` where `u = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRow {
    pub t: f64,
    pub ell: f64,
    pub u: Vec<f64>,
    pub ut: Vec<f64>,
    pub ux: Vec<f64>,
    pub front_ut: f64,
    pub front_ux: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    U,
    Ut,
    Ux,
}

impl FieldRow {
    pub fn nodes(&self) -> usize {
        self.u.len()
    }

    fn comp(&self, c: Component) -> (&[f64], f64) {
        match c {
            Component::U => (&self.u, 0.0),
            Component::Ut => (&self.ut, self.front_ut),
            Component::Ux => (&self.ux, self.front_ux),
        }
    }

    /// Piecewise-linear interpolation over nodes and front point; past the
    /// front the last segment is continued.
    pub fn interp(&self, c: Component, dx: f64, x: f64) -> f64 {
        let (v, vf) = self.comp(c);
        let n = v.len();
        let x = x.max(0.0);
        let j = (x / dx).floor() as usize;
        if j + 1 < n {
            let r = x / dx - j as f64;
            return v[j] + r * (v[j + 1] - v[j]);
        }
        let xl = (n - 1) as f64 * dx;
        let h = self.ell - xl;
        if h <= 0.0 {
            return vf;
        }
        v[n - 1] + (vf - v[n - 1]) * (x - xl) / h
    }
}

/// Solution samples on `t_k = k ds` (every `stride`-th level), `x_j = j dx`.
#[derive(Debug, Clone)]
pub struct WaveField {
    pub epsilon: f64,
    pub ds: f64,
    pub dx: f64,
    pub stride: usize,
    pub rows: Vec<FieldRow>,
}

impl WaveField {
    pub fn new(epsilon: f64, ds: f64, dx: f64, stride: usize) -> Self {
        Self {
            epsilon,
            ds,
            dx,
            stride: stride.max(1),
            rows: Vec::new(),
        }
    }

    pub fn row_dt(&self) -> f64 {
        self.ds * self.stride as f64
    }

    /// Bracketing rows and weight for time `t`.
    fn bracket(&self, t: f64) -> (usize, usize, f64) {
        let n = self.rows.len();
        let h = self.row_dt();
        let k = ((t / h).floor().max(0.0) as usize).min(n - 1);
        if k + 1 >= n {
            return (n - 1, n - 1, 0.0);
        }
        let r = (t - self.rows[k].t) / (self.rows[k + 1].t - self.rows[k].t);
        (k, k + 1, r.clamp(0.0, 1.0))
    }

    /// Linear in time between rows, linear in space within rows. Values
    /// beyond the front are extrapolated from the last cell.
    pub fn sample(&self, c: Component, t: f64, x: f64) -> f64 {
        let (a, b, r) = self.bracket(t);
        let va = self.rows[a].interp(c, self.dx, x);
        if r == 0.0 {
            return va;
        }
        let vb = self.rows[b].interp(c, self.dx, x);
        va + r * (vb - va)
    }

    /// Front position interpolated from the rows.
    pub fn ell_at(&self, t: f64) -> f64 {
        let (a, b, r) = self.bracket(t);
        self.rows[a].ell + r * (self.rows[b].ell - self.rows[a].ell)
    }

    /// `u(t, x)`, zero outside the debonded region.
    pub fn u(&self, t: f64, x: f64) -> f64 {
        if x >= self.ell_at(t) {
            return 0.0;
        }
        self.sample(Component::U, t, x)
    }

    /// CSV `t,x,u,u_t,u_x`; each row ends with its front point.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "u", "u_t", "u_x"])?;
        for row in &self.rows {
            for j in 0..row.nodes() {
                w.write_record([
                    fmt(row.t),
                    fmt(j as f64 * self.dx),
                    fmt(row.u[j]),
                    fmt(row.ut[j]),
                    fmt(row.ux[j]),
                ])?;
            }
            w.write_record([
                fmt(row.t),
                fmt(row.ell),
                fmt(0.0),
                fmt(row.front_ut),
                fmt(row.front_ux),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Source term for the Duhamel operator.
pub trait Theta: Sync {
    fn theta(&self, t: f64, x: f64) -> f64;

    /// `(dt, dx)` of an underlying grid; quadrature panels are split on it.
    fn grid(&self) -> Option<(f64, f64)> {
        None
    }
}

impl<F: Fn(f64, f64) -> f64 + Sync> Theta for F {
    fn theta(&self, t: f64, x: f64) -> f64 {
        self(t, x)
    }
}

/// `u_t` of a stored field as a source.
pub struct FieldVelocity<'a>(pub &'a WaveField);

impl Theta for FieldVelocity<'_> {
    fn theta(&self, t: f64, x: f64) -> f64 {
        self.0.sample(Component::Ut, t, x)
    }

    fn grid(&self) -> Option<(f64, f64)> {
        Some((self.0.row_dt(), self.0.dx))
    }
}
