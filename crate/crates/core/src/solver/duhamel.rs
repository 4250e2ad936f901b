//! Explicit formulas for the Duhamel operator `H[Theta]`, the solution of
//! `eps^2 H_tt - H_xx = eps Theta` with zero boundary and initial data, and
//! for its traces.
//!
//! Line integrals are taken along characteristics:
//! `A(a) = int_{psi^-1(a)}^{a} Theta(tau, (a - tau)/eps)` runs from the front to `x = 0`,
//! `B(b) = int_{b}^{phi^-1(b)} Theta(tau, (tau - b)/eps)` from `x = 0` to the front.

use crate::error::{DebondError, Result};
use crate::front::{CharMaps, Front, MAX_REFLECTIONS};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use super::coupled::Solution;
use super::field::{FieldVelocity, Theta};

const GL_X: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GL_W: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// Panel width for sources without an underlying grid.
const SMOOTH_PANEL: f64 = 1e-2;

fn gauss<F: FnMut(f64) -> f64>(a: f64, b: f64, mut f: F) -> f64 {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let mut s = 0.0;
    for (x, w) in GL_X.iter().zip(GL_W) {
        s += w * f(c + h * x);
    }
    s * h
}

/// Integral of `Theta(tau, x_a + dir (tau - tau_a)/eps)` over `[tau_a, tau_b]`.
fn line<T: Theta + ?Sized>(theta: &T, eps: f64, tau_a: f64, tau_b: f64, x_a: f64, dir: f64) -> f64 {
    if !(tau_b > tau_a) {
        return 0.0;
    }
    let x_of = |tau: f64| (x_a + dir * (tau - tau_a) / eps).max(0.0);
    let f = |tau: f64| theta.theta(tau, x_of(tau));
    let mut cuts: Vec<f64> = Vec::new();
    match theta.grid() {
        Some((dt, dx)) => {
            let k0 = (tau_a / dt).floor() as i64 + 1;
            let k1 = (tau_b / dt).ceil() as i64 - 1;
            for k in k0..=k1 {
                cuts.push(k as f64 * dt);
            }
            let x_b = x_of(tau_b);
            let (lo, hi) = if x_a < x_b { (x_a, x_b) } else { (x_b, x_a) };
            let j0 = (lo / dx).floor() as i64 + 1;
            let j1 = (hi / dx).ceil() as i64 - 1;
            for j in j0..=j1 {
                cuts.push(tau_a + dir * eps * (j as f64 * dx - x_a));
            }
            cuts.retain(|&c| c > tau_a && c < tau_b);
            cuts.sort_by(|a, b| a.total_cmp(b));
        }
        None => {
            let n = ((tau_b - tau_a) / SMOOTH_PANEL).ceil() as usize;
            for i in 1..n {
                cuts.push(tau_a + (tau_b - tau_a) * i as f64 / n as f64);
            }
        }
    }
    let mut acc = 0.0;
    let mut a = tau_a;
    for c in cuts.into_iter().chain(std::iter::once(tau_b)) {
        if c > a {
            acc += gauss(a, c, f);
            a = c;
        }
    }
    acc
}

/// `int_{tau_a}^{tau_b} Theta(tau, (tau - b)/eps)`: right-going line `t - eps x = b`.
pub fn right_line<T: Theta + ?Sized>(theta: &T, eps: f64, b: f64, tau_a: f64, tau_b: f64) -> f64 {
    line(theta, eps, tau_a, tau_b, (tau_a - b) / eps, 1.0)
}

/// `int_{tau_a}^{tau_b} Theta(tau, (a - tau)/eps)`: left-going line `t + eps x = a`.
pub fn left_line<T: Theta + ?Sized>(theta: &T, eps: f64, a: f64, tau_a: f64, tau_b: f64) -> f64 {
    line(theta, eps, tau_a, tau_b, (a - tau_a) / eps, -1.0)
}

/// `A(a)`, from the front to `x = 0`.
pub fn line_a<T: Theta + ?Sized>(theta: &T, maps: &CharMaps, a: f64) -> Result<f64> {
    let eps = maps.front().epsilon();
    Ok(left_line(theta, eps, a, maps.psi_inv(a)?, a))
}

/// `B(b)`, from `x = 0` to the front.
pub fn line_b<T: Theta + ?Sized>(theta: &T, maps: &CharMaps, b: f64) -> Result<f64> {
    let eps = maps.front().epsilon();
    Ok(right_line(theta, eps, b, b, maps.phi_inv(b)?))
}

/// `g[Theta](s)` for `s` in `phi([0, t_last])`.
pub fn eval_g<T: Theta + ?Sized>(theta: &T, front: &Front, s: f64) -> Result<f64> {
    let maps = front.maps();
    let eps = front.epsilon();
    let start = maps.omega_domain_start();
    let mut v = s;
    let mut d = 1.0;
    let mut acc = 0.0;
    let mut n = 0;
    while v >= start {
        acc += d * (line_a(theta, &maps, v)? - line_b(theta, &maps, v)?);
        let (next, dot) = maps.omega_with_dot(v)?;
        d *= dot;
        v = next;
        n += 1;
        if n > MAX_REFLECTIONS {
            return Err(DebondError::IterationDepth { depth: n });
        }
    }
    let u_end = maps.phi_inv(v)?;
    let i2 = if v < 0.0 {
        -right_line(theta, eps, v, 0.0, u_end)
    } else {
        left_line(theta, eps, v, 0.0, v) - right_line(theta, eps, v, v, u_end)
    };
    Ok(0.5 * acc + 0.5 * d * i2)
}

/// `H_x(t, 0)`.
pub fn eval_hx_at_0<T: Theta + ?Sized>(theta: &T, front: &Front, t: f64) -> Result<f64> {
    let maps = front.maps();
    let eps = front.epsilon();
    let start = maps.omega_domain_start();
    let bound = maps.omega_inv(0.0)?;
    let mut v = t;
    let mut d = 1.0;
    let mut acc = 0.0;
    let mut m = 0;
    while v >= bound {
        let (next, dot) = maps.omega_with_dot(v)?;
        acc += d * line_a(theta, &maps, v)? - d * dot * line_b(theta, &maps, next)?;
        d *= dot;
        v = next;
        m += 1;
        if m > MAX_REFLECTIONS {
            return Err(DebondError::IterationDepth { depth: m });
        }
    }
    let i1 = if v < start {
        d * left_line(theta, eps, v, 0.0, v)
    } else {
        let (next, dot) = maps.omega_with_dot(v)?;
        d * line_a(theta, &maps, v)?
            - d * dot * right_line(theta, eps, next, 0.0, maps.psi_inv(v)?)
    };
    Ok(acc + i1)
}

/// `H_x(t, l(t)) = 2 g(t - eps l(t)) / (1 + eps l'(t))`.
pub fn eval_hx_at_front<T: Theta + ?Sized>(theta: &T, front: &Front, t: f64) -> Result<f64> {
    let s = front.maps().phi(t)?;
    let v = front.epsilon() * front.ell_dot(t)?;
    Ok(2.0 / (1.0 + v) * eval_g(theta, front, s)?)
}

/// `-B(s)/2`, the right side of the identity `g(s) - H_x(s, 0)/2 = -B(s)/2`.
pub fn magic_rhs<T: Theta + ?Sized>(theta: &T, front: &Front, s: f64) -> Result<f64> {
    Ok(-0.5 * line_b(theta, &front.maps(), s)?)
}

/// Residual of `g(s) - H_x(s, 0)/2 + B(s)/2` at `s >= 0`.
pub fn magic_residual<T: Theta + ?Sized>(theta: &T, front: &Front, s: f64) -> Result<f64> {
    Ok(eval_g(theta, front, s)? - 0.5 * eval_hx_at_0(theta, front, s)? - magic_rhs(theta, front, s)?)
}

/// `omega`-iterates of `a` down to the initial window (last entry `< eps l0`).
fn chain(maps: &CharMaps, a: f64) -> Result<Vec<f64>> {
    let start = maps.omega_domain_start();
    let mut out = vec![a];
    let mut v = a;
    while v >= start {
        v = maps.omega(v)?;
        out.push(v);
        if out.len() > MAX_REFLECTIONS {
            return Err(DebondError::IterationDepth { depth: out.len() });
        }
    }
    Ok(out)
}

#[inline]
fn ind(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Left-going part of the reflected kernel, see [`eval_h`].
fn reflected(chain: &[f64], sa: f64, sb: f64) -> f64 {
    let mut acc = 0.0;
    for w in chain.windows(2) {
        acc += -0.5 * ind(sa <= w[0]) * ind(sb <= w[1]) + 0.5 * ind(sa <= w[1]);
    }
    acc
}

/// `H[Theta](t, x)` by quadrature of the Green kernel over the past domain.
///
/// In characteristic coordinates `a = tau + eps xi`, `b = tau - eps xi` the
/// kernel of a target `(a0, b0)` is piecewise constant on rectangles cut by
/// the `omega`-iterates of `a0` and `b0`:
/// `K = 1/2 [sa <= a0][sb <= b0] + r(a0) - 1/2 [sa <= b0] - r(b0)` with
/// `r(a) = sum_j (-1/2 [sa <= a_j][sb <= a_{j+1}] + 1/2 [sa <= a_{j+1}])`
/// along the chain `a_{j+1} = omega(a_j)`. Then
/// `H = (1/2eps) iint K Theta da db`.
pub fn eval_h<T: Theta + ?Sized>(theta: &T, front: &Front, t: f64, x: f64) -> Result<f64> {
    let eps = front.epsilon();
    let ell = front.ell(t)?;
    if !(x >= 0.0 && x <= ell * (1.0 + 1e-12)) {
        return Err(DebondError::OutOfRange {
            what: "H evaluation point",
            value: x,
            lo: 0.0,
            hi: ell,
        });
    }
    let maps = front.maps();
    let start = maps.omega_domain_start();
    let (a0, b0) = (t + eps * x, t - eps * x);
    let ca = chain(&maps, a0)?;
    let cb = if b0 >= start { chain(&maps, b0)? } else { vec![b0] };
    let kernel = |sa: f64, sb: f64| {
        0.5 * ind(sa <= a0) * ind(sb <= b0) + reflected(&ca, sa, sb)
            - 0.5 * ind(sa <= b0)
            - reflected(&cb, sa, sb)
    };

    let h = match theta.grid() {
        Some((dt, dx)) => dt.min(eps * dx),
        None => SMOOTH_PANEL,
    };
    let mut b_cuts: Vec<f64> = ca.iter().chain(cb.iter()).copied().collect();
    b_cuts.sort_by(|a, b| a.total_cmp(b));
    b_cuts.dedup();

    let mut a_cuts: Vec<f64> = vec![0.0, a0, start, t];
    a_cuts.extend_from_slice(&b_cuts);
    for &b in &b_cuts {
        a_cuts.push(-b);
        a_cuts.push(2.0 * t - b);
        if b >= -start {
            if let Ok(v) = maps.omega_inv(b) {
                a_cuts.push(v);
            }
        }
    }
    for (tk, lk) in front.knots().iter().zip(front.values()) {
        let p = tk + eps * lk;
        if p > a0 {
            break;
        }
        a_cuts.push(p);
    }
    a_cuts.retain(|&v| v >= 0.0 && v <= a0);
    a_cuts.sort_by(|a, b| a.total_cmp(b));
    a_cuts.dedup();

    let lower = |sa: f64| -> f64 {
        if sa < start {
            -sa
        } else {
            maps.omega(sa).unwrap_or(-sa)
        }
    };
    let source = |sa: f64, sb: f64| theta.theta(0.5 * (sa + sb), (0.5 * (sa - sb) / eps).max(0.0));

    let mut total = 0.0;
    let mut inner_cuts: Vec<f64> = Vec::new();
    for w in a_cuts.windows(2) {
        let (pa, pb) = (w[0], w[1]);
        if pb - pa <= 0.0 {
            continue;
        }
        let np = ((pb - pa) / h).ceil().max(1.0) as usize;
        let hp = (pb - pa) / np as f64;
        // every point of this strip sees the same K in each b-cell
        let sa_mid = 0.5 * (pa + pb);
        for p in 0..np {
            let (qa, qb) = (pa + p as f64 * hp, pa + (p + 1) as f64 * hp);
            total += gauss(qa, qb, |sa| {
                let lo = lower(sa);
                let hi = sa.min(2.0 * t - sa);
                if !(hi > lo) {
                    return 0.0;
                }
                inner_cuts.clear();
                inner_cuts.push(lo);
                inner_cuts.extend(b_cuts.iter().copied().filter(|&c| c > lo && c < hi));
                inner_cuts.push(hi);
                let mut acc = 0.0;
                for iw in inner_cuts.windows(2) {
                    let (ba, bb) = (iw[0], iw[1]);
                    let k = kernel(sa_mid, 0.5 * (ba + bb));
                    if k == 0.0 {
                        continue;
                    }
                    let nb = ((bb - ba) / h).ceil().max(1.0) as usize;
                    let hb = (bb - ba) / nb as f64;
                    for q in 0..nb {
                        let c0 = ba + q as f64 * hb;
                        acc += k * gauss(c0, c0 + hb, |sb| source(sa, sb));
                    }
                }
                acc
            });
        }
    }
    Ok(total / (2.0 * eps))
}

/// Identity residuals on a solved run at random `s` in `[0, phi(t_end)]`.
#[derive(Debug, Clone, Serialize)]
pub struct MagicReport {
    pub points: usize,
    /// `g - H_x(., 0)/2 + B/2` with all three terms from the explicit formulas.
    pub max_explicit: f64,
    /// Same with `g` and `H_x(., 0)` taken from the march, over all levels.
    pub max_march: f64,
    pub rms_march: f64,
}

fn interp_series(t: &[f64], v: &[f64], x: f64) -> f64 {
    let i = t.partition_point(|&a| a < x).clamp(1, t.len() - 1);
    let r = (x - t[i - 1]) / (t[i] - t[i - 1]);
    v[i - 1] + r * (v[i] - v[i - 1])
}

/// Needs a field stored at every level.
pub fn magic_report(sol: &Solution, points: usize, seed: u64) -> Result<MagicReport> {
    if sol.field.stride != 1 {
        return Err(DebondError::MissingData(
            "identity check needs every level stored".into(),
        ));
    }
    let theta = FieldVelocity(&sol.field);
    let front = &sol.front;
    let maps = front.maps();
    let t_end = *sol.trace.t.last().unwrap_or(&0.0);
    let s_max = maps.phi(t_end)?;
    let mut rng = StdRng::seed_from_u64(seed);
    let (mut ex, mut mr, mut sq, mut cnt) = (0.0f64, 0.0f64, 0.0f64, 0usize);
    for _ in 0..points {
        let s = rng.gen_range(0.0..s_max.max(0.0));
        ex = ex.max(magic_residual(&theta, front, s)?.abs());
    }
    // march values at every level whose characteristic foot is past t = 0
    for (k, &t) in sol.trace.t.iter().enumerate() {
        let s = maps.phi(t)?;
        if s < 0.0 {
            continue;
        }
        let hx = interp_series(&sol.trace.t, &sol.trace.hx0, s);
        let r = sol.trace.g[k] - 0.5 * hx - magic_rhs(&theta, front, s)?;
        mr = mr.max(r.abs());
        sq += r * r;
        cnt += 1;
    }
    Ok(MagicReport {
        points,
        max_explicit: ex,
        max_march: mr,
        rms_march: if cnt > 0 { (sq / cnt as f64).sqrt() } else { 0.0 },
    })
}
