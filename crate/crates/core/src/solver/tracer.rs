//! Undamped oracle: `u = F(t + eps x) + G(t - eps x)` with `F`, `G` traced
//! point by point through reflections. It keeps its own front and inverts
//! `t + eps l(t)` by bisection, sharing nothing with the main solver beyond
//! the problem data.

use crate::error::{DebondError, Result};
use crate::model::{InitialData, LoadingProfile, SimParams, ToughnessModel};

use super::coupled::front_speed;

pub struct Tracer<'a> {
    eps: f64,
    ell0: f64,
    loading: &'a LoadingProfile,
    init: &'a InitialData,
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl<'a> Tracer<'a> {
    fn new(eps: f64, loading: &'a LoadingProfile, init: &'a InitialData) -> Self {
        Self {
            eps,
            ell0: init.ell0(),
            loading,
            init,
            knots: vec![0.0],
            values: vec![init.ell0()],
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn seg_slope(&self, i: usize) -> f64 {
        (self.values[i + 1] - self.values[i]) / (self.knots[i + 1] - self.knots[i])
    }

    fn ell_at(&self, t: f64) -> f64 {
        if self.knots.len() == 1 {
            return self.values[0];
        }
        let i = self.knots.partition_point(|&k| k < t).clamp(1, self.knots.len() - 1);
        let r = (t - self.knots[i - 1]) / (self.knots[i] - self.knots[i - 1]);
        self.values[i - 1] + r * (self.values[i] - self.values[i - 1])
    }

    /// `(omega(a), omega'(a))` by bisection on `tau + eps l(tau) = a`.
    fn omega(&self, a: f64) -> Result<(f64, f64)> {
        let eps = self.eps;
        let last = *self.knots.last().unwrap();
        if a > last + eps * self.values.last().unwrap() * (1.0 + 1e-14) {
            return Err(DebondError::InsufficientFront { need: a, have: last });
        }
        let (mut lo, mut hi) = (0.0, last);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid + eps * self.ell_at(mid) < a {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi.max(1.0) {
                break;
            }
        }
        // snap to a knot if within round-off
        let i = self.knots.partition_point(|&k| k < hi).min(self.knots.len() - 1);
        let mut tau = hi;
        for j in [i.saturating_sub(1), i] {
            let tk = self.knots[j];
            if (tk + eps * self.values[j] - a).abs() <= 1e-13 * a.abs().max(1.0) {
                tau = tk;
            }
        }
        // slope of the segment ending at or after tau (left at knots)
        let seg = self
            .knots
            .partition_point(|&k| k < tau)
            .clamp(1, self.knots.len() - 1)
            - 1;
        let c = self.seg_slope(seg);
        let l = if tau == self.knots[seg + 1] {
            self.values[seg + 1]
        } else {
            self.ell_at(tau)
        };
        let l = if tau == 0.0 { self.ell0 } else { l };
        Ok((tau - eps * l, (1.0 - eps * c) / (1.0 + eps * c)))
    }

    fn f_init(&self, a: f64) -> (f64, f64) {
        let (eps, d) = (self.eps, self.init);
        let x = a / eps;
        (
            0.5 * d.u0(x) + 0.5 * eps * d.u1_integral(x),
            (0.5 * d.u0_dot(x) + 0.5 * eps * d.u1(x)) / eps,
        )
    }

    fn g_init(&self, b: f64) -> (f64, f64) {
        let (eps, d) = (self.eps, self.init);
        let x = -b / eps;
        (
            0.5 * d.u0(x) - 0.5 * eps * d.u1_integral(x),
            (-0.5 * d.u0_dot(x) + 0.5 * eps * d.u1(x)) / eps,
        )
    }

    /// `(F, F')` at `a >= 0`.
    pub fn big_f(&self, a: f64) -> Result<(f64, f64)> {
        let start = self.eps * self.ell0;
        let (mut val, mut der, mut prod) = (0.0, 0.0, 1.0);
        let mut v = a;
        while v > start {
            let (b, wd) = self.omega(v)?;
            if b > 0.0 {
                // F(v) = -G(b) = -w(b) + F(b)
                val -= self.loading.w(b);
                der -= prod * wd * self.loading.w_dot(b);
                prod *= wd;
                v = b;
            } else {
                let (g, gd) = self.g_init(b);
                return Ok((val - g, der - prod * wd * gd));
            }
        }
        let (fv, fd) = self.f_init(v);
        Ok((val + fv, der + prod * fd))
    }

    /// `(G, G')` at `b >= -eps l0`.
    pub fn big_g(&self, b: f64) -> Result<(f64, f64)> {
        if b <= 0.0 {
            return Ok(self.g_init(b));
        }
        let (fv, fd) = self.big_f(b)?;
        Ok((self.loading.w(b) - fv, self.loading.w_dot(b) - fd))
    }

    /// `(u, u_t, u_x)` at `(t, x)`.
    pub fn sample(&self, t: f64, x: f64) -> Result<(f64, f64, f64)> {
        let (f, fd) = self.big_f(t + self.eps * x)?;
        let (g, gd) = self.big_g(t - self.eps * x)?;
        Ok((f + g, fd + gd, self.eps * (fd - gd)))
    }

    /// `G0(t) = 2 eps^2 G'(t - eps l(t))^2`.
    pub fn g0(&self, t: f64) -> Result<f64> {
        let l = self.ell_at(t);
        let (_, gd) = self.big_g(t - self.eps * l)?;
        Ok(2.0 * self.eps * self.eps * gd * gd)
    }
}

/// Runs the undamped tracer with explicit Euler for the front on `t_k = k ds`.
pub fn trace_undamped<'a>(
    params: &SimParams,
    tough: &ToughnessModel,
    loading: &'a LoadingProfile,
    init: &'a InitialData,
) -> Result<Tracer<'a>> {
    let mut tr = Tracer::new(params.epsilon, loading, init);
    let ds = params.ds;
    for k in 0..params.steps() {
        let t = k as f64 * ds;
        let l = *tr.values.last().unwrap();
        let c = front_speed(params.epsilon, tr.g0(t)?, tough.kappa(l)?);
        tr.knots.push((k + 1) as f64 * ds);
        tr.values.push(l + ds * c);
    }
    Ok(tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Problem;

    const EQ: &str = r#"{
        "epsilon": 0.1, "nu": 0.0, "ell0": 1.0, "t_end": 0.5, "ds": 0.01,
        "toughness": {"kind": "constant", "value": 0.5},
        "loading": {"kind": "constant", "value": 0.9},
        "u0": {"kind": "affine"}
    }"#;

    #[test]
    fn equilibrium_is_exact() {
        let p = Problem::from_json_str(EQ).unwrap();
        let tr = trace_undamped(&p.params, &p.toughness, &p.loading, &p.init).unwrap();
        assert!(tr.values().iter().all(|&l| l == 1.0));
        for &(t, x) in &[(0.1, 0.0), (0.3, 0.5), (0.5, 0.99)] {
            let (u, ut, ux) = tr.sample(t, x).unwrap();
            assert!((u - 0.9 * (1.0 - x)).abs() < 1e-13);
            assert!(ut.abs() < 1e-12 && (ux + 0.9).abs() < 1e-12);
        }
        assert!((tr.g0(0.4).unwrap() - 0.405).abs() < 1e-12);
    }

    #[test]
    fn boundary_values_hold() {
        let p = Problem::from_json_str(
            r#"{
            "epsilon": 0.1, "nu": 0.0, "ell0": 1.0, "t_end": 0.5, "ds": 0.01,
            "toughness": {"kind": "constant", "value": 0.2},
            "loading": {"kind": "ramp", "from": 1.0, "to": 1.5, "duration": 2.0},
            "u0": {"kind": "affine"}
        }"#,
        )
        .unwrap();
        let tr = trace_undamped(&p.params, &p.toughness, &p.loading, &p.init).unwrap();
        assert!(*tr.values().last().unwrap() > 1.0);
        for k in 0..tr.knots().len() {
            let (t, l) = (tr.knots()[k], tr.values()[k]);
            assert!((tr.sample(t, 0.0).unwrap().0 - p.loading.w(t)).abs() < 1e-12);
            assert!(tr.sample(t, l).unwrap().0.abs() < 1e-12);
        }
    }
}
