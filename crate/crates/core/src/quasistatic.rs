//! Closed-form quasistatic evolution `lambda(t) = phi_kappa^{-1}(max(w^2/2 running max, phi_kappa(start)))`
//! and the checks that go with it.

use std::io::Write;

use serde::Serialize;

use crate::error::{DebondError, Result};
use crate::model::{check_conditions, running_max_w_squared, LoadingProfile, ToughnessModel};

#[derive(Debug, Clone)]
pub struct QuasistaticEvolution<'a> {
    pub t: Vec<f64>,
    pub lambda: Vec<f64>,
    pub start: f64,
    pub loading: &'a LoadingProfile,
    pub tough: &'a ToughnessModel,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 || grid[0] != 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(DebondError::Precondition(
            "time grid must start at 0 and increase strictly".into(),
        ));
    }
    Ok(())
}

/// Uniform grid `0, h, ..., t_end`.
pub fn uniform_grid(t_end: f64, h: f64) -> Vec<f64> {
    let n = (t_end / h).round().max(1.0) as usize;
    (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
}

pub fn quasistatic_front<'a>(
    tough: &'a ToughnessModel,
    loading: &'a LoadingProfile,
    grid: &[f64],
    start: f64,
) -> Result<QuasistaticEvolution<'a>> {
    check_grid(grid)?;
    let t_end = *grid.last().unwrap();
    let h = grid.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let flags = check_conditions(tough, loading, t_end, h);
    if !flags.k3 {
        return Err(DebondError::Precondition("K3 fails".into()));
    }
    if start < tough.ell0() || start > tough.x_max() {
        return Err(DebondError::Precondition(format!(
            "start {start} outside [{}, {}]",
            tough.ell0(),
            tough.x_max()
        )));
    }
    let phi_start = tough.phi_kappa(start)?;
    let w0sq = 0.5 * loading.w(0.0).powi(2);
    if !flags.kw_limit || phi_start < w0sq * (1.0 - 1e-9) {
        return Err(DebondError::Precondition("KW fails".into()));
    }
    let rm = running_max_w_squared(loading, grid)?;
    let lambda = rm
        .iter()
        .map(|&m| tough.phi_kappa_inv_unchecked((0.5 * m).max(phi_start)))
        .collect::<Result<Vec<_>>>()?;
    if lambda.windows(2).any(|w| w[1] < w[0]) {
        return Err(DebondError::InvariantViolation(
            "quasistatic front decreased".into(),
        ));
    }
    Ok(QuasistaticEvolution {
        t: grid.to_vec(),
        lambda,
        start,
        loading,
        tough,
    })
}

impl QuasistaticEvolution<'_> {
    /// Linear interpolation of `lambda` on the grid.
    pub fn lambda_at(&self, t: f64) -> Result<f64> {
        let (a, b) = (self.t[0], *self.t.last().unwrap());
        if !(t >= a && t <= b) {
            return Err(DebondError::OutOfRange {
                what: "t",
                value: t,
                lo: a,
                hi: b,
            });
        }
        let i = self.t.partition_point(|&s| s < t).clamp(1, self.t.len() - 1);
        let r = (t - self.t[i - 1]) / (self.t[i] - self.t[i - 1]);
        Ok(self.lambda[i - 1] + r * (self.lambda[i] - self.lambda[i - 1]))
    }

    /// `w(t) (1 - x/lambda(t))` on `[0, lambda]`, zero beyond.
    pub fn displacement(&self, t: f64, x: f64) -> Result<f64> {
        let l = self.lambda_at(t)?;
        Ok(if x <= l {
            self.loading.w(t) * (1.0 - x / l)
        } else {
            0.0
        })
    }

    /// `w^2 / (2 lambda^2) - kappa(lambda)` per node.
    pub fn stability_defect(&self) -> Vec<f64> {
        self.t
            .iter()
            .zip(&self.lambda)
            .map(|(&t, &l)| 0.5 * (self.loading.w(t) / l).powi(2) - self.tough.kappa_unchecked(l))
            .collect()
    }

    /// `E_t(x) = w(t)^2 / (2x) + int_{ell0}^x kappa`.
    pub fn energy_at(&self, t: f64, x: f64) -> Result<f64> {
        Ok(0.5 * self.loading.w(t).powi(2) / x + self.tough.kappa_integral(x)?)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let d = self.stability_defect();
        let comp = complementarity_series(&self.t, &self.lambda, &d);
        let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        wr.write_record(["t", "lambda", "stability_residual", "complementarity_residual"])?;
        for i in 0..self.t.len() {
            wr.write_record(&[
                self.t[i].to_string(),
                self.lambda[i].to_string(),
                d[i].max(0.0).to_string(),
                comp[i].to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Segment-wise `|lambda'| * min(|d_i|, |d_{i+1}|)`, reported at the left node.
fn complementarity_series(t: &[f64], lambda: &[f64], d: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; t.len()];
    for i in 0..t.len() - 1 {
        let slope = (lambda[i + 1] - lambda[i]) / (t[i + 1] - t[i]);
        out[i] = slope.abs() * d[i].abs().min(d[i + 1].abs());
    }
    out
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct QsGriffithReport {
    /// Most negative difference quotient, as a positive number (0 if none).
    pub negative_slope: f64,
    pub stability: f64,
    pub complementarity: f64,
}

pub fn verify_quasistatic_griffith(evo: &QuasistaticEvolution) -> QsGriffithReport {
    let d = evo.stability_defect();
    let comp = complementarity_series(&evo.t, &evo.lambda, &d);
    let negative_slope = evo
        .t
        .windows(2)
        .zip(evo.lambda.windows(2))
        .map(|(t, l)| ((l[0] - l[1]) / (t[1] - t[0])).max(0.0))
        .fold(0.0, f64::max);
    QsGriffithReport {
        negative_slope,
        stability: d.iter().map(|v| v.max(0.0)).fold(0.0, f64::max),
        complementarity: comp.iter().copied().fold(0.0, f64::max),
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GlobalStabilityReport {
    pub samples: usize,
    /// `min (E_t(hat) - E_t(lambda(t)))` over the samples.
    pub min_gap: f64,
    pub passed: bool,
}

/// Samples `n_t` grid times and `n_x` competitors in `[lambda(t), x_max]`.
pub fn verify_global_stability(
    evo: &QuasistaticEvolution,
    n_t: usize,
    n_x: usize,
    tol: f64,
) -> Result<GlobalStabilityReport> {
    let t_end = *evo.t.last().unwrap();
    let flags = check_conditions(evo.tough, evo.loading, t_end, 0.0);
    if !flags.k1 {
        return Err(DebondError::Precondition("K1 fails".into()));
    }
    let (n_t, n_x) = (n_t.max(1), n_x.max(2));
    let xm = evo.tough.x_max();
    let mut min_gap = f64::INFINITY;
    let mut samples = 0;
    for a in 0..n_t {
        let i = if n_t == 1 { 0 } else { a * (evo.t.len() - 1) / (n_t - 1) };
        let (t, l) = (evo.t[i], evo.lambda[i]);
        let base = evo.energy_at(t, l)?;
        for b in 0..n_x {
            let x = l + (xm - l) * b as f64 / (n_x - 1) as f64;
            min_gap = min_gap.min(evo.energy_at(t, x)? - base);
            samples += 1;
        }
    }
    Ok(GlobalStabilityReport {
        samples,
        min_gap,
        passed: min_gap >= -tol,
    })
}

/// `E_t(lambda(t)) - int_0^t w' w / lambda - E_0(start)` per node, trapezoid
/// rule for `w / lambda`, with `w'` taken at cell midpoints so that kinks on
/// grid nodes do not leak into neighbouring cells.
pub fn verify_energy_balance_qs(evo: &QuasistaticEvolution) -> Result<Vec<f64>> {
    let e0 = evo.energy_at(0.0, evo.start)?;
    let ratio = |i: usize| evo.loading.w(evo.t[i]) / evo.lambda[i];
    let mut work = 0.0;
    let mut out = Vec::with_capacity(evo.t.len());
    for i in 0..evo.t.len() {
        if i > 0 {
            let (a, b) = (evo.t[i - 1], evo.t[i]);
            work += 0.5 * (b - a) * evo.loading.w_dot(0.5 * (a + b)) * (ratio(i - 1) + ratio(i));
        }
        out.push(evo.energy_at(evo.t[i], evo.lambda[i])? - work - e0);
    }
    Ok(out)
}

/// Independent surrogate: RK4 on `lambda' = (w w')_+ / phi_kappa'(lambda)`
/// while the constraint is active. Activation times are located by bisection
/// on `w^2/2 = phi_kappa(lambda)`; deactivation happens when `w w'` turns
/// nonpositive.
pub fn integrate_lambda_rate(
    tough: &ToughnessModel,
    loading: &LoadingProfile,
    grid: &[f64],
    start: f64,
    substeps: usize,
) -> Result<Vec<f64>> {
    check_grid(grid)?;
    let phi = |l: f64| l * l * tough.kappa_unchecked(l);
    // `td` is where w' is read; the last stage reads it just inside the step,
    // so a kink at the right end does not leak in
    let rate = |t: f64, td: f64, l: f64| {
        (loading.w(t) * loading.w_dot(td)).max(0.0) / tough.phi_kappa_dot(l)
    };
    let rk4 = |t: f64, l: f64, h: f64| {
        let k1 = rate(t, t, l);
        let k2 = rate(t + 0.5 * h, t + 0.5 * h, l + 0.5 * h * k1);
        let k3 = rate(t + 0.5 * h, t + 0.5 * h, l + 0.5 * h * k2);
        let k4 = rate(t + h, t + h * (1.0 - 1e-9), l + h * k3);
        l + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    };
    let half_w2 = |t: f64| 0.5 * loading.w(t).powi(2);
    let growth = |t: f64| loading.w(t) * loading.w_dot(t);
    // first point of [lo, hi] where `hit` holds, assuming it holds at hi
    let bisect = |mut lo: f64, mut hi: f64, hit: &dyn Fn(f64) -> bool| {
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if hit(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let mut l = start.max(tough.phi_kappa_inv_unchecked(half_w2(0.0))?);
    let mut active = half_w2(0.0) >= phi(l) * (1.0 - 1e-12);
    let mut out = vec![l];
    let m = substeps.max(1);
    for w in grid.windows(2) {
        let h = (w[1] - w[0]) / m as f64;
        for s in 0..m {
            let t = w[0] + s as f64 * h;
            let e = t + h;
            if active {
                if growth(e) > 0.0 {
                    l = rk4(t, l, h);
                } else {
                    let stop = bisect(t, e, &|s| growth(s) <= 0.0);
                    l = rk4(t, l, stop - t);
                    active = false;
                }
            } else if half_w2(e) > phi(l) {
                let target = phi(l);
                let on = bisect(t, e, &|s| half_w2(s) > target);
                l = rk4(on, l, e - on);
                active = true;
            }
        }
        out.push(l);
    }
    Ok(out)
}

/// Nodes `i` whose increment `lambda_{i+1} - lambda_i` exceeds ten times the
/// larger neighbouring increment (and an absolute floor).
pub fn detect_jumps(lambda: &[f64], floor: f64) -> Vec<usize> {
    let d: Vec<f64> = lambda.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    (0..d.len())
        .filter(|&i| {
            let left = if i > 0 { d[i - 1] } else { 0.0 };
            let right = d.get(i + 1).copied().unwrap_or(0.0);
            d[i] > floor && d[i] > 10.0 * left.max(right)
        })
        .collect()
}
