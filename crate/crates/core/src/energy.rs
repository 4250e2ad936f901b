//! Energy functionals and balance checks.

use std::io::Write;

use serde::Serialize;

use crate::error::{DebondError, Result};
use crate::front::{fmt, Front};
use crate::model::{InitialData, LoadingProfile, SimParams, ToughnessModel};
use crate::solver::field::{FieldRow, WaveField};

/// Per-step time series. Index `k` is `t_k = k ds`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct EnergySeries {
    pub t: Vec<f64>,
    pub ell: Vec<f64>,
    /// Slope applied on `[t_k, t_{k+1}]`, from `G0(t_k)`.
    pub ell_dot: Vec<f64>,
    pub g0: Vec<f64>,
    pub w: Vec<f64>,
    pub w_dot: Vec<f64>,
    /// `u_x(t, 0)`.
    pub ux0: Vec<f64>,
    pub kinetic: Vec<f64>,
    /// `E`.
    pub energy: Vec<f64>,
    /// `A`.
    pub friction: Vec<f64>,
    /// `W`.
    pub work: Vec<f64>,
    /// `int_{l0}^{l} kappa`.
    pub fracture: Vec<f64>,
}

/// Integrals of one row: `(1/2 int eps^2 u_t^2, 1/2 int u_x^2, int eps u_t^2)`.
pub fn row_integrals(row: &FieldRow, eps: f64, dx: f64) -> (f64, f64, f64) {
    let n = row.nodes();
    let mut kin = 0.0;
    let mut pot = 0.0;
    let mut fr = 0.0;
    let mut add = |h: f64, a: (f64, f64), b: (f64, f64)| {
        kin += 0.25 * h * eps * eps * (a.0 * a.0 + b.0 * b.0);
        pot += 0.25 * h * (a.1 * a.1 + b.1 * b.1);
        fr += 0.5 * h * eps * (a.0 * a.0 + b.0 * b.0);
    };
    for j in 0..n.saturating_sub(1) {
        add(dx, (row.ut[j], row.ux[j]), (row.ut[j + 1], row.ux[j + 1]));
    }
    if n > 0 {
        let h = row.ell - (n - 1) as f64 * dx;
        add(h, (row.ut[n - 1], row.ux[n - 1]), (row.front_ut, row.front_ux));
    }
    (kin, pot, fr)
}

impl EnergySeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Appends step `k`; `A` and `W` by trapezoid from the previous entry.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn push_row(
        &mut self,
        row: &FieldRow,
        eps: f64,
        nu: f64,
        dx: f64,
        g0: f64,
        ell_dot: f64,
        loading: &LoadingProfile,
        tough: &ToughnessModel,
    ) -> Result<()> {
        let (kin, pot, fr) = row_integrals(row, eps, dx);
        let wd = loading.w_dot(row.t);
        let ux0 = row.ux.first().copied().unwrap_or(row.front_ux);
        let (a, w) = match self.t.last() {
            None => (0.0, 0.0),
            Some(&t0) => {
                let k = self.t.len() - 1;
                let h = row.t - t0;
                let fr_prev = 2.0 * self.kinetic[k] / eps;
                (
                    self.friction[k] + 0.5 * h * nu * (fr_prev + fr),
                    self.work[k] + 0.5 * h * (self.w_dot[k] * self.ux0[k] + wd * ux0),
                )
            }
        };
        self.t.push(row.t);
        self.ell.push(row.ell);
        self.ell_dot.push(ell_dot);
        self.g0.push(g0);
        self.w.push(loading.w(row.t));
        self.w_dot.push(wd);
        self.ux0.push(ux0);
        self.kinetic.push(kin);
        self.energy.push(kin + pot);
        self.friction.push(a);
        self.work.push(w);
        self.fracture.push(tough.kappa_integral(row.ell)?);
        Ok(())
    }

    /// `E - w^2 / (2 l)`.
    pub fn etilde(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| self.energy[k] - 0.5 * self.w[k] * self.w[k] / self.ell[k])
            .collect()
    }

    /// `E + A + int kappa + W - E(0)`.
    pub fn balance_residual(&self) -> Vec<f64> {
        let e0 = self.energy.first().copied().unwrap_or(0.0);
        (0..self.len())
            .map(|k| self.energy[k] + self.friction[k] + self.fracture[k] + self.work[k] - e0)
            .collect()
    }

    /// Balance residual divided by `E(0) + 1`.
    pub fn relative_balance_residual(&self) -> Vec<f64> {
        let scale = self.energy.first().copied().unwrap_or(0.0) + 1.0;
        self.balance_residual().into_iter().map(|r| r / scale).collect()
    }

    /// CSV `t,ell,ell_dot,G0,E,A,W,balance_residual`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "ell", "ell_dot", "G0", "E", "A", "W", "balance_residual"])?;
        let r = self.balance_residual();
        for k in 0..self.len() {
            w.write_record([
                fmt(self.t[k]),
                fmt(self.ell[k]),
                fmt(self.ell_dot[k]),
                fmt(self.g0[k]),
                fmt(self.energy[k]),
                fmt(self.friction[k]),
                fmt(self.work[k]),
                fmt(r[k]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Energies recomputed from a stored field. `G0` uses the trace
/// `1/2 (1 + eps l')^2 u_x(t, l)^2` and `l'` the front slope after `t`.
pub fn compute_energies(
    field: &WaveField,
    front: &Front,
    loading: &LoadingProfile,
    tough: &ToughnessModel,
    nu: f64,
) -> Result<EnergySeries> {
    if field.rows.is_empty() {
        return Err(DebondError::MissingData("empty field".into()));
    }
    let eps = field.epsilon;
    let mut s = EnergySeries::default();
    for row in &field.rows {
        let i = front.knots().partition_point(|&k| k <= row.t + 1e-12 * row.t.max(1.0));
        let c = if i < front.len() { front.slope(i - 1) } else { 0.0 };
        let v = 1.0 + eps * c;
        let g0 = 0.5 * v * v * row.front_ux * row.front_ux;
        s.push_row(row, eps, nu, field.dx, g0, c, loading, tough)?;
    }
    Ok(s)
}

/// `1/2 int eps^2 u_t^2 + 1/2 int (u_x - r_x)^2` per stored level, with `r`
/// the affine profile between `(0, w)` and `(l, 0)`.
pub fn modified_energy_direct(field: &WaveField, loading: &LoadingProfile) -> Vec<f64> {
    field
        .rows
        .iter()
        .map(|row| {
            let rx = -loading.w(row.t) / row.ell;
            let mut shifted = row.clone();
            shifted.ux.iter_mut().for_each(|v| *v -= rx);
            shifted.front_ux -= rx;
            let (kin, pot, _) = row_integrals(&shifted, field.epsilon, field.dx);
            kin + pot
        })
        .collect()
}

/// Griffith residuals with `G_{eps l'} = (1 - eps l')/(1 + eps l') G0`
/// paired with the slope it produced.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GriffithResiduals {
    pub min_slope: f64,
    /// `max (G - kappa)_+ / kappa`.
    pub max_stability_violation: f64,
    /// `max |l' (G - kappa)| / kappa`.
    pub max_complementarity: f64,
    /// Same, pairing `G0(t_k)` with the slope on `[t_{k-1}, t_k]`.
    pub lagged_max_complementarity: f64,
}

pub fn griffith_residuals(series: &EnergySeries, tough: &ToughnessModel, eps: f64) -> Result<GriffithResiduals> {
    let mut r = GriffithResiduals {
        min_slope: f64::INFINITY,
        max_stability_violation: 0.0,
        max_complementarity: 0.0,
        lagged_max_complementarity: 0.0,
    };
    let rate = |c: f64, g0: f64| (1.0 - eps * c) / (1.0 + eps * c) * g0;
    for k in 0..series.len() {
        let kap = tough.kappa(series.ell[k])?;
        let c = series.ell_dot[k];
        let g = rate(c, series.g0[k]);
        r.min_slope = r.min_slope.min(c);
        r.max_stability_violation = r.max_stability_violation.max((g - kap).max(0.0) / kap);
        r.max_complementarity = r.max_complementarity.max((c * (g - kap)).abs() / kap);
        if k > 0 {
            let cl = series.ell_dot[k - 1];
            let gl = rate(cl, series.g0[k]);
            r.lagged_max_complementarity = r.lagged_max_complementarity.max((cl * (gl - kap)).abs() / kap);
        }
    }
    Ok(r)
}

/// `(mu0, mu1, m)` for damping `nu` and front bound `l_t`.
pub fn decay_constants(nu: f64, l_t: f64) -> (f64, f64, f64) {
    let mu0 = l_t / std::f64::consts::PI;
    let mu1 = nu * mu0 * mu0;
    let m = 0.5 * (0.5 / mu0).min(0.5 * nu).min(1.0 / (mu0 + mu1));
    (mu0, mu1, m)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayReport {
    pub l_t: f64,
    pub mu0: f64,
    pub mu1: f64,
    pub m: f64,
    pub etilde0: f64,
    /// Smallest constant for which the envelope holds at every level.
    pub empirical_c_t: f64,
}

/// Fits `C_T` in
/// `Et(t) <= 4 Et(0) e^{-m t/eps} + C_T int_0^t (l' + w'^2 + u_x(.,0)^2 + 1) e^{-m (t-s)/eps} ds`.
pub fn decay_envelope_check(series: &EnergySeries, params: &SimParams) -> Result<DecayReport> {
    if params.nu <= 0.0 {
        return Err(DebondError::NotApplicable(
            "decay estimate is trivial without damping".into(),
        ));
    }
    let eps = params.epsilon;
    let l_t = series.ell.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mu0, mu1, m) = decay_constants(params.nu, l_t);
    let et = series.etilde();
    let e0 = et[0].max(0.0);
    let q = |k: usize| series.ell_dot[k] + series.w_dot[k].powi(2) + series.ux0[k].powi(2) + 1.0;
    let mut integral = 0.0;
    let mut c_t: f64 = 0.0;
    for k in 1..series.len() {
        let h = series.t[k] - series.t[k - 1];
        let decay = (-m * h / eps).exp();
        integral = integral * decay + 0.5 * h * (q(k - 1) * decay + q(k));
        let excess = et[k] - 4.0 * e0 * (-m * series.t[k] / eps).exp();
        if excess > 0.0 {
            c_t = c_t.max(excess / integral);
        }
    }
    Ok(DecayReport {
        l_t,
        mu0,
        mu1,
        m,
        etilde0: et[0],
        empirical_c_t: c_t,
    })
}

/// `h(x) = 1 - 10 y^3 + 15 y^4 - 6 y^5`, `y = x / l0`, and `h'`.
pub fn cutoff(x: f64, ell0: f64) -> (f64, f64) {
    if x >= ell0 {
        return (0.0, 0.0);
    }
    let y = (x / ell0).max(0.0);
    let y2 = y * y;
    (
        1.0 - y * y2 * (10.0 - 15.0 * y + 6.0 * y2),
        -30.0 * y2 * (1.0 - 2.0 * y + y2) / ell0,
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryWorkReport {
    pub t: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub max_residual: f64,
}

/// Both sides of the integration-by-parts identity for `u_x(., 0)`:
/// `1/2 int_0^t (eps^2 w'^2 + u_x(.,0)^2)` against the cutoff-weighted
/// bulk terms.
pub fn boundary_work_identity_check(
    field: &WaveField,
    params: &SimParams,
    init: &InitialData,
    loading: &LoadingProfile,
) -> Result<BoundaryWorkReport> {
    if field.rows.is_empty() {
        return Err(DebondError::MissingData("field was not stored".into()));
    }
    let (eps, nu, ell0, dx) = (params.epsilon, params.nu, params.ell0, field.dx);
    // x-integrals over [0, l0] cell by cell, 4-point Gauss: exact for the
    // quintic cutoff times products of linear interpolants
    const GX: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
    const GW: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
    let cells = (ell0 / dx - 1e-9).ceil() as usize;
    let integrate = |g: &dyn Fn(f64) -> f64| -> f64 {
        let mut acc = 0.0;
        for j in 0..cells {
            let (a, b) = (j as f64 * dx, ((j + 1) as f64 * dx).min(ell0));
            let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
            for (x, w) in GX.iter().zip(GW) {
                acc += w * h * g(c + h * x);
            }
        }
        acc
    };
    use crate::solver::field::Component;
    let bulk = |row: &FieldRow| -> (f64, f64) {
        let a = integrate(&|x| {
            let ut = row.interp(Component::Ut, dx, x);
            let ux = row.interp(Component::Ux, dx, x);
            cutoff(x, ell0).1 * (eps * eps * ut * ut + ux * ux)
        });
        let b = integrate(&|x| {
            cutoff(x, ell0).0 * eps * row.interp(Component::Ut, dx, x) * row.interp(Component::Ux, dx, x)
        });
        (a, b)
    };
    let init_term = integrate(&|x| cutoff(x, ell0).0 * eps * init.u1(x) * init.u0_dot(x));
    let mut out = BoundaryWorkReport {
        t: Vec::new(),
        lhs: Vec::new(),
        rhs: Vec::new(),
        max_residual: 0.0,
    };
    let (mut lhs, mut i1, mut i2) = (0.0, 0.0, 0.0);
    let mut prev: Option<(f64, f64, f64, f64)> = None;
    for row in &field.rows {
        let wd = loading.w_dot(row.t);
        let ux0 = row.ux[0];
        let edge = 0.5 * (eps * eps * wd * wd + ux0 * ux0);
        let (a, b) = bulk(row);
        if let Some((t0, e0, a0, b0)) = prev {
            let h = row.t - t0;
            lhs += 0.5 * h * (e0 + edge);
            i1 += 0.5 * h * (a0 + a);
            i2 += 0.5 * h * (b0 + b);
        }
        let rhs = -0.5 * i1 - nu * i2 - eps * (b - init_term);
        out.t.push(row.t);
        out.lhs.push(lhs);
        out.rhs.push(rhs);
        out.max_residual = out.max_residual.max((lhs - rhs).abs());
        prev = Some((row.t, edge, a, b));
    }
    Ok(out)
}
