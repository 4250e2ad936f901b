//! Structural conditions on the toughness and loading.
//!
//! K0: kappa not integrable on `[ell0, inf)`.
//! K1: phi_kappa nondecreasing. K2: strictly increasing.
//! K3: strictly increasing with positive derivative a.e.
//! KW: `lim phi_kappa > max w^2 / 2` on the horizon and `phi_kappa(ell0) >= w(0)^2 / 2`.

use serde::Serialize;

use super::loading::LoadingProfile;
use super::toughness::{ToughnessKind, ToughnessModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConditionFlags {
    pub k0: bool,
    pub k1: bool,
    pub k2: bool,
    pub k3: bool,
    pub kw: bool,
    /// First half of KW only (growth at infinity), without the start condition.
    pub kw_limit: bool,
}

const SCAN_TOL: f64 = 1e-12;
const DEFAULT_SCAN_CELLS: usize = 20_000;

#[derive(Debug, Clone, Copy)]
struct Monotone {
    k1: bool,
    k2: bool,
    k3: bool,
}

fn monotonicity(tough: &ToughnessModel, step: Option<f64>) -> Monotone {
    let (l0, xm) = (tough.ell0(), tough.x_max());
    match tough.kind() {
        ToughnessKind::Constant { .. } => Monotone {
            k1: true,
            k2: true,
            k3: true,
        },
        ToughnessKind::Power { exponent, .. } => Monotone {
            k1: *exponent >= -2.0,
            k2: *exponent > -2.0,
            k3: *exponent > -2.0,
        },
        ToughnessKind::Affine { a, b } => {
            // phi' = x (2a + 3bx), linear factor checked at both ends
            let lo = 2.0 * a + 3.0 * b * l0;
            let hi = 2.0 * a + 3.0 * b * xm;
            let ok = lo >= 0.0 && hi >= 0.0 && (lo > 0.0 || hi > 0.0);
            Monotone {
                k1: lo >= 0.0 && hi >= 0.0,
                k2: ok,
                k3: ok,
            }
        }
        ToughnessKind::Sampled { points } => {
            let h = step.unwrap_or((xm - l0) / DEFAULT_SCAN_CELLS as f64);
            let mut xs: Vec<f64> = Vec::new();
            let n = ((xm - l0) / h).ceil().max(1.0) as usize;
            for i in 0..=n {
                xs.push((l0 + i as f64 * h).min(xm));
            }
            xs.extend(points.iter().map(|p| p[0]).filter(|&x| x > l0 && x < xm));
            xs.sort_by(|a, b| a.total_cmp(b));
            xs.dedup();
            let phi = |x: f64| x * x * tough.kappa_unchecked(x);
            let mut m = Monotone {
                k1: true,
                k2: true,
                k3: true,
            };
            for w in xs.windows(2) {
                let q = (phi(w[1]) - phi(w[0])) / (w[1] - w[0]);
                m.k1 &= q >= -SCAN_TOL;
                m.k2 &= q > 0.0;
                m.k3 &= q > SCAN_TOL;
            }
            m
        }
    }
}

/// K2 for the inverse of `phi_kappa`.
pub(crate) fn phi_strictly_increasing(tough: &ToughnessModel) -> bool {
    monotonicity(tough, None).k2
}

fn non_integrable(tough: &ToughnessModel) -> bool {
    match tough.kind() {
        ToughnessKind::Constant { .. } => true,
        ToughnessKind::Affine { b, .. } => *b >= 0.0,
        ToughnessKind::Power { exponent, .. } => *exponent >= -1.0,
        // the table is held constant (and positive) past its last node
        ToughnessKind::Sampled { .. } => true,
    }
}

/// Decides the flags. Closed-form kinds use exact rules; sampled toughness is
/// scanned on a grid of step `ds` plus its knots.
pub fn check_conditions(
    tough: &ToughnessModel,
    loading: &LoadingProfile,
    t_end: f64,
    ds: f64,
) -> ConditionFlags {
    let step = if ds > 0.0 { Some(ds) } else { None };
    let m = monotonicity(tough, step);
    let half_max = 0.5 * loading.max_w_squared(t_end);
    let kw_limit = tough.phi_kappa_limit() > half_max;
    let l0 = tough.ell0();
    let start_ok = l0 * l0 * tough.kappa_unchecked(l0) >= 0.5 * loading.w(0.0).powi(2);
    ConditionFlags {
        k0: non_integrable(tough),
        k1: m.k1,
        k2: m.k2,
        k3: m.k3,
        kw: kw_limit && start_ok,
        kw_limit,
    }
}
