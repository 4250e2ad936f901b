//! Coupled march for `(u, l)`.
//!
//! On the lattice `t_k = k ds`, `x_j = j ds/eps` every characteristic
//! through a node passes through nodes of the previous level, so `f` is only
//! sampled at lattice points. `H[u_t]` is carried by its Riemann invariants
//! `P = eps H_t - H_x`, `Q = eps H_t + H_x`, which satisfy `dP = dQ = Theta d tau`
//! along their characteristics, `P = -Q` at `x = 0` and
//! `(1 + eps l') Q = -(1 - eps l') P` on the front.

use serde::Serialize;

use crate::energy::EnergySeries;
use crate::error::{DebondError, Result};
use crate::front::Front;
use crate::model::{InitialData, LoadingProfile, Problem, SimParams, ToughnessModel};

use super::charfn::{seed_f_initial, CharFunction};
use super::field::{FieldRow, WaveField};

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Keep every `store_stride`-th level in the returned field.
    pub store_stride: usize,
    pub picard_tol: f64,
    pub max_picard: usize,
    /// Levels per Picard window; `eps l0 / (2 ds)` when absent.
    pub window: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            store_stride: 1,
            picard_tol: 1e-9,
            max_picard: 100,
            window: None,
        }
    }
}

/// March quantities per level.
#[derive(Debug, Clone, Default, Serialize)]
pub struct MarchTrace {
    pub t: Vec<f64>,
    /// `g[u_t](phi(t_k)) = -P/2` on the front.
    pub g: Vec<f64>,
    /// `H_x(t_k, 0)`.
    pub hx0: Vec<f64>,
    /// `H(t_k, l(t_k))`; zero up to discretisation error.
    pub h_front: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub params: SimParams,
    pub field: WaveField,
    pub front: Front,
    pub f: CharFunction,
    pub energy: EnergySeries,
    pub trace: MarchTrace,
    /// Picard iterations per window (1 when `nu = 0`).
    pub picard_iterations: Vec<usize>,
}

/// Front speed from the explicit flow rule.
pub fn front_speed(eps: f64, g0: f64, kappa: f64) -> f64 {
    if g0 <= kappa {
        return 0.0;
    }
    ((g0 - kappa) / (g0 + kappa)).max(0.0) / eps
}

/// One explicit Euler step of the front: appends `(t + ds, l + ds l')`.
pub fn advance_front(front: &mut Front, g0: f64, tough: &ToughnessModel, ds: f64) -> Result<f64> {
    let ell = front.ell_last();
    let c = front_speed(front.epsilon(), g0, tough.kappa(ell)?);
    let next = ell + ds * c;
    if next > tough.x_max() {
        return Err(DebondError::FrontCap { x_max: tough.x_max() });
    }
    front.push(front.t_last() + ds, next)?;
    Ok(c)
}

/// `G0 = 2 (f'(phi(t)) + nu g)^2`.
pub fn energy_release_rate_g0(f_dot_phi: f64, nu: f64, g: f64) -> f64 {
    let v = f_dot_phi + nu * g;
    2.0 * v * v
}

pub(crate) fn interior_nodes(ell: f64, dx: f64) -> usize {
    ((ell / dx) - 1e-9).ceil().max(1.0) as usize
}

/// Level state. Vectors of length `n + 1` end with the front value.
#[derive(Debug, Clone)]
struct Level {
    t: f64,
    ell: f64,
    n: usize,
    p: Vec<f64>,
    q: Vec<f64>,
    th: Vec<f64>,
    u: Vec<f64>,
    ux: Vec<f64>,
    /// `f'(beta)` along each node's incoming characteristic.
    fb: Vec<f64>,
    h_front: f64,
    g0: f64,
}

impl Level {
    fn at(&self, v: &[f64], dx: f64, x: f64) -> f64 {
        let n = self.n;
        let x = x.clamp(0.0, self.ell);
        let j = (x / dx).floor() as usize;
        if j + 1 < n {
            let r = x / dx - j as f64;
            return v[j] + r * (v[j + 1] - v[j]);
        }
        let xl = (n - 1) as f64 * dx;
        let h = self.ell - xl;
        if h <= 0.0 {
            return v[n];
        }
        v[n - 1] + (v[n] - v[n - 1]) * (x - xl) / h
    }

    fn to_row(&self) -> FieldRow {
        let n = self.n;
        FieldRow {
            t: self.t,
            ell: self.ell,
            u: self.u[..n].to_vec(),
            ut: self.th[..n].to_vec(),
            ux: self.ux[..n].to_vec(),
            front_ut: self.th[n],
            front_ux: self.ux[n],
        }
    }
}

struct Ctx<'a> {
    eps: f64,
    nu: f64,
    ds: f64,
    dx: f64,
    loading: &'a LoadingProfile,
}

impl Ctx<'_> {
    /// Level `k` with front `ell`; `c` is the front slope on `[t_{k-1}, t_k]`.
    /// `Theta` at level `k` comes from `guess`, or from `prev` if absent.
    fn level(
        &self,
        k: usize,
        ell: f64,
        c: f64,
        prev: Option<&Level>,
        guess: Option<&Level>,
        f: &CharFunction,
        front: &Front,
    ) -> Result<Level> {
        let (eps, nu, ds, dx) = (self.eps, self.nu, self.ds, self.dx);
        let t = k as f64 * ds;
        let n = interior_nodes(ell, dx);
        let w = self.loading;
        let mut uf = vec![0.0; n];
        let mut uft = vec![0.0; n + 1];
        let mut ufx = vec![0.0; n + 1];
        let mut fb = vec![0.0; n + 1];
        for j in 0..n {
            let (ia, ib) = ((k + j) as i64, k as i64 - j as i64);
            let (fa, da) = f.at_index(ia);
            let (fv, db) = f.at_index(ib);
            fb[j] = db;
            let a = ia as f64 * ds;
            let wd = w.w_dot(a);
            uf[j] = w.w(a) - fa / eps + fv / eps;
            uft[j] = wd - da / eps + db / eps;
            ufx[j] = eps * wd - da - db;
        }
        let maps = front.maps();
        let (a, b) = (maps.psi(t)?, maps.phi(t)?);
        let (_, da) = f.eval(front, a)?;
        let (_, db) = f.eval(front, b)?;
        fb[n] = db;
        let wd = w.w_dot(a);
        uft[n] = wd - da / eps + db / eps;
        ufx[n] = eps * wd - da - db;

        let mut p = vec![0.0; n + 1];
        let mut q = vec![0.0; n + 1];
        if let Some(pr) = prev {
            // dP = dQ = Theta dtau along the two families, trapezoid rule;
            // the new-level Theta uses S = P + Q from the current iterate.
            let rho = (1.0 - eps * c) / (1.0 + eps * c);
            let damp = nu / (2.0 * eps);
            let s_new = |x: f64| match guess {
                Some(g) => g.at(&g.p, dx, x) + g.at(&g.q, dx, x),
                None => pr.at(&pr.p, dx, x) + pr.at(&pr.q, dx, x),
            };
            let thf0 = pr.th[pr.n];
            let thf1 = uft[n] - damp * guess.map_or(pr.p[pr.n] + pr.q[pr.n], |g| g.p[g.n] + g.q[g.n]);
            for j in 0..n {
                let x = j as f64 * dx;
                let th1 = uft[j] - damp * s_new(x);
                let xr = x + dx;
                q[j] = if xr <= pr.ell {
                    pr.at(&pr.q, dx, xr) + 0.5 * ds * (pr.at(&pr.th, dx, xr) + th1)
                } else {
                    // reflected off the front at t - ds + dt
                    let dt = eps * (xr - pr.ell) / (1.0 + eps * c);
                    let xb = pr.ell + c * dt - dt / eps;
                    let ths = thf0 + (thf1 - thf0) * dt / ds;
                    let ps = pr.at(&pr.p, dx, xb) + 0.5 * dt * (pr.at(&pr.th, dx, xb) + ths);
                    -rho * ps + 0.5 * (ds - dt) * (ths + th1)
                };
                p[j] = if j == 0 {
                    -q[0]
                } else {
                    let xl = x - dx;
                    pr.at(&pr.p, dx, xl) + 0.5 * ds * (pr.at(&pr.th, dx, xl) + th1)
                };
            }
            // front: S = (1 - rho) P there, solved implicitly
            let xb = ell - dx;
            let rest = pr.at(&pr.p, dx, xb) + 0.5 * ds * (pr.at(&pr.th, dx, xb) + uft[n]);
            p[n] = rest / (1.0 + damp * 0.5 * ds * (1.0 - rho));
            q[n] = -rho * p[n];
        }

        let mut th = vec![0.0; n + 1];
        let mut ux = vec![0.0; n + 1];
        for j in 0..=n {
            th[j] = uft[j] - nu * (p[j] + q[j]) / (2.0 * eps);
            ux[j] = ufx[j] - nu * 0.5 * (q[j] - p[j]);
        }

        // H by trapezoid on H_x = (Q - P)/2 from H(t, 0) = 0
        let mut u = uf;
        let mut h = 0.0;
        for j in 0..n {
            if j > 0 {
                h += 0.25 * dx * ((q[j - 1] - p[j - 1]) + (q[j] - p[j]));
            }
            u[j] -= nu * h;
        }
        let gap = ell - (n - 1) as f64 * dx;
        u.push(0.0);
        let h_front = h + 0.25 * gap * ((q[n - 1] - p[n - 1]) + (q[n] - p[n]));
        // g is carried in from the lattice, so f' is read off the same stencil
        let db_g = match prev {
            Some(pr) if nu > 0.0 => pr.at(&pr.fb, dx, ell - dx),
            _ => db,
        };
        let g0 = energy_release_rate_g0(db_g, nu, -0.5 * p[n]);

        Ok(Level {
            t,
            ell,
            n,
            p,
            q,
            th,
            u,
            ux,
            fb,
            h_front,
            g0,
        })
    }
}

fn increment(new: &[Level], old: &[Level], dx: f64) -> f64 {
    let mut d: f64 = 0.0;
    for (a, b) in new.iter().zip(old) {
        d = d.max((a.ell - b.ell).abs());
        for j in 0..a.n {
            let x = j as f64 * dx;
            d = d.max((a.u[j] - b.at(&b.u, dx, x)).abs());
        }
    }
    d
}

/// Solves the coupled problem on `[0, t_end]`.
pub fn solve_coupled(problem: &Problem, opts: &SolveOptions) -> Result<Solution> {
    solve_parts(
        &problem.params,
        &problem.toughness,
        &problem.loading,
        &problem.init,
        opts,
    )
}

pub fn solve_parts(
    params: &SimParams,
    tough: &ToughnessModel,
    loading: &LoadingProfile,
    init: &InitialData,
    opts: &SolveOptions,
) -> Result<Solution> {
    let (eps, nu, ds) = (params.epsilon, params.nu, params.ds);
    let dx = ds / eps;
    let ctx = Ctx {
        eps,
        nu,
        ds,
        dx,
        loading,
    };
    let mut front = Front::new(eps, params.ell0)?;
    let mut f = seed_f_initial(params, loading, init);
    let mut field = WaveField::new(eps, ds, dx, opts.store_stride);
    let mut energy = EnergySeries::default();
    let mut trace = MarchTrace::default();
    let mut picard = Vec::new();

    let accept = |lv: &Level,
                      k: usize,
                      field: &mut WaveField,
                      energy: &mut EnergySeries,
                      trace: &mut MarchTrace|
     -> Result<()> {
        let row = lv.to_row();
        let c = front_speed(eps, lv.g0, tough.kappa(lv.ell)?);
        energy.push_row(&row, eps, nu, dx, lv.g0, c, loading, tough)?;
        trace.t.push(lv.t);
        trace.g.push(-0.5 * lv.p[lv.n]);
        trace.hx0.push(0.5 * (lv.q[0] - lv.p[0]));
        trace.h_front.push(lv.h_front);
        if k % field.stride == 0 {
            field.rows.push(row);
        }
        Ok(())
    };

    let first = ctx.level(0, params.ell0, 0.0, None, None, &f, &front)?;
    accept(&first, 0, &mut field, &mut energy, &mut trace)?;
    let steps = params.steps();
    let window = opts
        .window
        .unwrap_or(((eps * params.ell0 / (2.0 * ds) + 1e-9).floor() as usize).max(1))
        .max(1);
    let mut base = first;
    let mut k0 = 0;
    while k0 < steps {
        let k1 = (k0 + window).min(steps);
        let mut old: Vec<Level> = Vec::new();
        let mut iters = 0;
        let new = loop {
            iters += 1;
            front.truncate(k0 + 1);
            f.truncate_above(base.t + eps * base.ell);
            let mut cur: Vec<Level> = Vec::with_capacity(k1 - k0);
            for k in k0..k1 {
                let prev = cur.last().unwrap_or(&base);
                let c = advance_front(&mut front, prev.g0, tough, ds)?;
                f.extend_to(&front, front.maps().psi(front.t_last())?)?;
                let guess = old.get(k - k0);
                let lv = ctx.level(k + 1, front.ell_last(), c, Some(prev), guess, &f, &front)?;
                cur.push(lv);
            }
            if nu == 0.0 {
                break cur;
            }
            if !old.is_empty() {
                let inc = increment(&cur, &old, dx);
                if inc <= opts.picard_tol {
                    break cur;
                }
                if iters >= opts.max_picard {
                    return Err(DebondError::ContractionFailure {
                        iterations: iters,
                        increment: inc,
                    });
                }
            }
            old = cur;
        };
        picard.push(iters);
        for (i, lv) in new.iter().enumerate() {
            accept(lv, k0 + 1 + i, &mut field, &mut energy, &mut trace)?;
        }
        base = new.into_iter().last().expect("non-empty window");
        k0 = k1;
    }
    if steps % field.stride != 0 {
        field.rows.push(base.to_row());
    }
    Ok(Solution {
        params: *params,
        field,
        front,
        f,
        energy,
        trace,
        picard_iterations: picard,
    })
}
