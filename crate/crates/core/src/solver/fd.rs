//! Finite-difference front-tracking solver, used only as an independent check.
//!
//! Leapfrog for `eps^2 u_tt - u_xx + nu eps u_t = 0` with time step
//! `dt = cfl * eps * dx`. The last node before the front uses a
//! Shortley-Weller stencil with `u = 0` on the front, or is slaved to the
//! linear interpolant when it sits within `dx/2` of the front.

use crate::error::{DebondError, Result};
use crate::front::Front;
use crate::model::{InitialData, LoadingProfile, SimParams, ToughnessModel};

use super::coupled::{front_speed, interior_nodes};
use super::field::{FieldRow, WaveField};

#[derive(Debug, Clone)]
pub struct FdSolution {
    pub field: WaveField,
    pub front: Front,
    /// `G0` at the stored levels.
    pub g0: Vec<f64>,
}

/// Node spacing `ds/eps`, time step `ds/substeps`; levels stored every `ds`.
pub fn fd_oracle_solve(
    params: &SimParams,
    tough: &ToughnessModel,
    loading: &LoadingProfile,
    init: &InitialData,
    substeps: usize,
) -> Result<FdSolution> {
    let (eps, nu, ds) = (params.epsilon, params.nu, params.ds);
    let dx = ds / eps;
    let dt = ds / substeps as f64;
    if substeps == 0 || dt > eps * dx * (1.0 + 1e-12) {
        return Err(DebondError::Cfl {
            dt,
            limit: eps * dx,
        });
    }
    let cap = interior_nodes(tough.x_max(), dx) + 2;
    let xs: Vec<f64> = (0..cap).map(|j| j as f64 * dx).collect();

    let ell = params.ell0;
    let n = interior_nodes(ell, dx);
    let mut u0 = vec![0.0; cap];
    for j in 0..n {
        u0[j] = init.u0(xs[j]);
    }
    let kappa0 = tough.kappa(ell)?;

    let lap = |u: &[f64], n: usize, ell: f64, j: usize| -> f64 {
        let (ul, uc) = (u[j - 1], u[j]);
        if j + 1 < n {
            (ul - 2.0 * uc + u[j + 1]) / (dx * dx)
        } else {
            let hr = ell - xs[j];
            2.0 * (hr * ul - (dx + hr) * uc) / (dx * hr * (dx + hr))
        }
    };
    // slave the last node when it hugs the front
    let fix_last = |u: &mut [f64], n: usize, ell: f64| {
        let hr = ell - xs[n - 1];
        if n >= 2 && hr < 0.5 * dx {
            u[n - 1] = u[n - 2] * hr / (dx + hr);
        }
        for v in u.iter_mut().skip(n) {
            *v = 0.0;
        }
    };
    // u_x on the front: quadratic through (x_{n-2}, x_{n-1}, l)
    let ux_front = |u: &[f64], n: usize, ell: f64| -> f64 {
        let (x1, x2) = (xs[n - 2], xs[n - 1]);
        let (a, b) = (x1 - ell, x2 - ell);
        let (y1, y2) = (u[n - 2], u[n - 1]);
        // p(s) = c1 s + c2 s^2, s = x - l
        let det = a * b * b - b * a * a;
        (y1 * b * b - y2 * a * a) / det
    };

    let quad = |u: &[f64], n: usize, ell: f64, x: f64| -> f64 {
        let (a, b) = (xs[n - 2], xs[n - 1]);
        u[n - 2] * (x - b) * (x - ell) / ((a - b) * (a - ell))
            + u[n - 1] * (x - a) * (x - ell) / ((b - a) * (b - ell))
    };

    // first step by Taylor expansion
    let mut u1 = vec![0.0; cap];
    u1[0] = loading.w(dt);
    for j in 1..n {
        let ut = init.u1(xs[j]);
        let utt = (lap(&u0, n, ell, j) - nu * eps * ut) / (eps * eps);
        u1[j] = u0[j] + dt * ut + 0.5 * dt * dt * utt;
    }
    fix_last(&mut u1, n, ell);

    let mut field = WaveField::new(eps, ds, dx, 1);
    let mut knots = vec![0.0];
    let mut values = vec![ell];
    let mut g0s = Vec::new();
    let mut slope;

    let mk_row = |t: f64, ell: f64, n: usize, uc: &[f64], ut: Vec<f64>, slope: f64| {
        let mut ux = vec![0.0; n];
        for j in 0..n {
            ux[j] = if j == 0 {
                (-3.0 * uc[0] + 4.0 * uc[1] - uc[2]) / (2.0 * dx)
            } else if j + 1 < n {
                (uc[j + 1] - uc[j - 1]) / (2.0 * dx)
            } else {
                // quadratic through x_{j-1}, x_j and the front
                let (a, b, c) = (xs[j - 1], xs[j], ell);
                uc[j - 1] * (b - c) / ((a - b) * (a - c)) + uc[j] * (2.0 * b - a - c) / ((b - a) * (b - c))
            };
        }
        let fx = ux_front(uc, n, ell);
        FieldRow {
            t,
            ell,
            u: uc[..n].to_vec(),
            ut,
            ux,
            front_ut: -slope * fx,
            front_ux: fx,
        }
    };

    let steps = params.steps() * substeps;
    let mut prev = u0.clone();
    let mut cur = u1;
    // level 0
    {
        let ux = ux_front(&u0, n, ell);
        let g0 = 0.5 * ux * ux;
        g0s.push(g0);
        let ut0: Vec<f64> = (0..n).map(|j| init.u1(xs[j])).collect();
        let mut row = mk_row(0.0, ell, n, &u0, ut0, 0.0);
        row.front_ut = init.u1(ell);
        field.rows.push(row);
        slope = front_speed(eps, g0, kappa0);
    }
    let mut ell_prev = ell;
    let mut n_prev = n;
    let denom = eps * eps / (dt * dt) + nu * eps / (2.0 * dt);
    let mut next = vec![0.0; cap];
    for step in 1..=steps {
        let t = step as f64 * dt;
        // front at level `step` from G0 at level `step - 1`
        let ell_now = ell_prev + dt * slope;
        if ell_now > tough.x_max() {
            return Err(DebondError::FrontCap { x_max: tough.x_max() });
        }
        knots.push(t);
        values.push(ell_now);
        let n_now = interior_nodes(ell_now, dx);
        // `cur` holds level `step`. Nodes passed by the front get the quadratic
        // through the last two nodes and the front; `prev` is extended past
        // its own front the same way.
        for j in n_prev..n_now {
            cur[j] = quad(&cur, n_prev, ell_now, xs[j]);
            prev[j] = quad(&prev, n_prev, ell_prev, xs[j]);
        }
        fix_last(&mut cur, n_now, ell_now);
        cur[0] = loading.w(t);
        let ux = ux_front(&cur, n_now, ell_now);
        let g0 = 0.5 * (1.0 + eps * slope) * (1.0 + eps * slope) * ux * ux;
        let new_slope = front_speed(eps, g0, tough.kappa(ell_now)?);

        // level step + 1
        next.iter_mut().for_each(|v| *v = 0.0);
        next[0] = loading.w(t + dt);
        for j in 1..n_now {
            let rhs = eps * eps * (2.0 * cur[j] - prev[j]) / (dt * dt)
                + lap(&cur, n_now, ell_now, j)
                + nu * eps * prev[j] / (2.0 * dt);
            next[j] = rhs / denom;
        }
        fix_last(&mut next, n_now, ell_now + dt * new_slope);

        if step % substeps == 0 {
            let ut = (0..n_now).map(|j| (next[j] - prev[j]) / (2.0 * dt)).collect();
            field.rows.push(mk_row(t, ell_now, n_now, &cur, ut, slope));
            g0s.push(g0);
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
        ell_prev = ell_now;
        n_prev = n_now;
        slope = new_slope;
    }
    let front = Front::from_nodes(eps, &knots, &values)?;
    Ok(FdSolution {
        field,
        front,
        g0: g0s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Problem;

    const EQ: &str = r#"{
        "epsilon": 0.1, "nu": 1.0, "ell0": 1.0, "t_end": 0.5, "ds": 0.004,
        "toughness": {"kind": "constant", "value": 0.5},
        "loading": {"kind": "constant", "value": 0.9},
        "u0": {"kind": "affine"}
    }"#;

    fn run(p: &Problem, substeps: usize) -> Result<FdSolution> {
        fd_oracle_solve(&p.params, &p.toughness, &p.loading, &p.init, substeps)
    }

    #[test]
    fn equilibrium_is_preserved() {
        let p = Problem::from_json_str(EQ).unwrap();
        let sol = run(&p, 2).unwrap();
        assert!(sol.front.values().iter().all(|&l| l == 1.0));
        let dx = p.params.ds / p.params.epsilon;
        for row in &sol.field.rows {
            for (j, u) in row.u.iter().enumerate() {
                assert!((u - 0.9 * (1.0 - j as f64 * dx)).abs() < 1e-8);
            }
        }
        assert!(sol.g0.iter().all(|g| (g - 0.405).abs() < 1e-8));
    }

    #[test]
    fn zero_data_stays_zero() {
        let p = Problem::from_json_str(&EQ.replace(r#""value": 0.9"#, r#""value": 0.0"#)).unwrap();
        let sol = run(&p, 1).unwrap();
        assert!(sol.field.rows.iter().all(|r| r.u.iter().all(|&u| u == 0.0)));
    }

    #[test]
    fn cfl_is_enforced() {
        let p = Problem::from_json_str(EQ).unwrap();
        assert!(matches!(run(&p, 0), Err(DebondError::Cfl { .. })));
    }
}
