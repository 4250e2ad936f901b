//! The auxiliary function `f` of the representation formula
//!
//! `u(t,x) = w(t+eps x) - f(t+eps x)/eps + f(t-eps x)/eps - nu H[u_t](t,x)`.
//!
//! On `[-eps l0, eps l0]` it is fixed by the initial data; beyond, by
//! `f(s) = eps w(s) + f(omega(s))`, which enforces `u = 0` on the front.

use crate::error::{DebondError, Result};
use crate::front::Front;
use crate::model::{InitialData, LoadingProfile, SimParams};

#[derive(Debug, Clone)]
pub struct CharFunction {
    eps: f64,
    ell0: f64,
    ds: f64,
    loading: LoadingProfile,
    init: InitialData,
    /// Index of `vals[0]` on the lattice `i * ds`.
    i_min: i64,
    vals: Vec<f64>,
    ders: Vec<f64>,
}

impl CharFunction {
    pub fn epsilon(&self) -> f64 {
        self.eps
    }

    pub fn ds(&self) -> f64 {
        self.ds
    }

    /// Start of the domain, `-eps l0`.
    pub fn domain_start(&self) -> f64 {
        -self.eps * self.ell0
    }

    /// Lattice index of the first stored sample.
    pub fn first_index(&self) -> i64 {
        self.i_min
    }

    /// Last lattice index with a stored sample.
    pub fn last_index(&self) -> i64 {
        self.i_min + self.vals.len() as i64 - 1
    }

    pub fn last_sample(&self) -> f64 {
        self.last_index() as f64 * self.ds
    }

    /// `(f, f')` at lattice index `i`.
    #[inline]
    pub fn at_index(&self, i: i64) -> (f64, f64) {
        let k = (i - self.i_min) as usize;
        (self.vals[k], self.ders[k])
    }

    pub fn try_at_index(&self, i: i64) -> Option<(f64, f64)> {
        if i < self.i_min || i > self.last_index() {
            None
        } else {
            Some(self.at_index(i))
        }
    }

    /// Stored samples `(s, f, f')`.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.vals
            .iter()
            .zip(&self.ders)
            .enumerate()
            .map(move |(k, (v, d))| ((self.i_min + k as i64) as f64 * self.ds, *v, *d))
    }

    /// Closed form on the initial window. `s` may sit on the closed end `-eps l0`.
    pub fn eval_seed(&self, s: f64) -> (f64, f64) {
        let (eps, d) = (self.eps, &self.init);
        if s > 0.0 {
            let y = s / eps;
            let f = eps * self.loading.w(s) - 0.5 * eps * d.u0(y) - 0.5 * eps * eps * d.u1_integral(y)
                - eps * self.loading.w(0.0)
                + 0.5 * eps * d.u0(0.0);
            let fd = eps * self.loading.w_dot(s) - 0.5 * d.u0_dot(y) - 0.5 * eps * d.u1(y);
            (f, fd)
        } else {
            let y = -s / eps;
            let f = 0.5 * eps * d.u0(y) - 0.5 * eps * eps * d.u1_integral(y) - 0.5 * eps * d.u0(0.0);
            let fd = -0.5 * d.u0_dot(y) + 0.5 * eps * d.u1(y);
            (f, fd)
        }
    }

    /// Exact `(f, f')` at any `s >= -eps l0`, recursing through `omega` down to
    /// the initial window. The front must cover `psi^-1(s)`.
    pub fn eval(&self, front: &Front, s: f64) -> Result<(f64, f64)> {
        let start = self.eps * self.ell0;
        if s < -start * (1.0 + 1e-12) {
            return Err(DebondError::OutOfRange {
                what: "characteristic abscissa",
                value: s,
                lo: -start,
                hi: f64::INFINITY,
            });
        }
        let maps = front.maps();
        let (mut acc, mut acc_d, mut prod) = (0.0, 0.0, 1.0);
        let mut v = s;
        let mut depth = 0;
        while v > start {
            acc += self.eps * self.loading.w(v);
            acc_d += prod * self.eps * self.loading.w_dot(v);
            let (next, dot) = maps.omega_with_dot(v)?;
            prod *= dot;
            v = next;
            depth += 1;
            if depth > crate::front::MAX_REFLECTIONS {
                return Err(DebondError::IterationDepth { depth });
            }
        }
        let (f0, d0) = self.eval_seed(v.max(-start));
        Ok((acc + f0, acc_d + prod * d0))
    }

    /// Stored samples up to `s_max` (rule (ii) beyond the initial window).
    pub fn extend_to(&mut self, front: &Front, s_max: f64) -> Result<()> {
        let target = (s_max / self.ds + 1e-9).floor() as i64;
        let mut i = self.last_index() + 1;
        while i <= target {
            let (f, d) = self.eval(front, i as f64 * self.ds)?;
            self.vals.push(f);
            self.ders.push(d);
            i += 1;
        }
        Ok(())
    }

    /// Drops samples above `s` that were generated by rule (ii).
    pub fn truncate_above(&mut self, s: f64) {
        let seed_last = (self.eps * self.ell0 / self.ds + 1e-9).floor() as i64;
        let keep_last = ((s / self.ds + 1e-9).floor() as i64).max(seed_last);
        let n = (keep_last - self.i_min + 1).max(0) as usize;
        self.vals.truncate(n);
        self.ders.truncate(n);
    }

    /// `w(psi(t)) - f(psi(t))/eps + f(phi(t))/eps`, zero by construction.
    pub fn rule_two_residual(&self, front: &Front, t: f64) -> Result<f64> {
        let m = front.maps();
        let (a, b) = (m.psi(t)?, m.phi(t)?);
        let fa = self.eval(front, a)?.0;
        let fb = self.eval(front, b)?.0;
        Ok(self.loading.w(a) - fa / self.eps + fb / self.eps)
    }
}

/// Samples `f` on the initial window `[-eps l0, eps l0]` of the lattice `i * ds`.
pub fn seed_f_initial(
    params: &SimParams,
    loading: &LoadingProfile,
    init: &InitialData,
) -> CharFunction {
    let (eps, ell0, ds) = (params.epsilon, params.ell0, params.ds);
    let i_min = (-eps * ell0 / ds - 1e-9).ceil() as i64;
    let i_max = (eps * ell0 / ds + 1e-9).floor() as i64;
    let mut f = CharFunction {
        eps,
        ell0,
        ds,
        loading: loading.clone(),
        init: init.clone(),
        i_min,
        vals: Vec::new(),
        ders: Vec::new(),
    };
    for i in i_min..=i_max {
        let s = (i as f64 * ds).max(-eps * ell0);
        let (v, d) = f.eval_seed(s);
        f.vals.push(v);
        f.ders.push(d);
    }
    f
}

/// Extends `f` by rule (ii) up to `s_max`.
pub fn extend_f(f: &mut CharFunction, front: &Front, s_max: f64) -> Result<()> {
    f.extend_to(front, s_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DisplacementSpec, VelocitySpec};
    use proptest::prelude::*;

    fn setup(
        w: LoadingProfile,
        u0: DisplacementSpec,
        u1: VelocitySpec,
        eps: f64,
    ) -> (SimParams, LoadingProfile, InitialData) {
        let p = SimParams::new(eps, 1.0, 1.0, 4.0, eps / 40.0).unwrap();
        let d = InitialData::new(&u0, &u1, w.w(0.0), 1.0).unwrap();
        (p, w, d)
    }

    #[test]
    fn equilibrium_seed_is_linear() {
        let w0 = 0.9;
        let (p, w, d) = setup(
            LoadingProfile::Constant { value: w0 },
            DisplacementSpec::Affine,
            VelocitySpec::Zero,
            0.1,
        );
        let f = seed_f_initial(&p, &w, &d);
        for (s, v, dv) in f.samples() {
            assert!((v - w0 * s / 2.0).abs() < 1e-15, "s={s}");
            assert!((dv - w0 / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let (p, w, d) = setup(
            LoadingProfile::Constant { value: 0.0 },
            DisplacementSpec::Affine,
            VelocitySpec::Zero,
            0.2,
        );
        let mut f = seed_f_initial(&p, &w, &d);
        let front = Front::from_nodes(0.2, &[0.0, 10.0], &[1.0, 1.5]).unwrap();
        extend_f(&mut f, &front, 5.0).unwrap();
        assert!(f.samples().all(|(_, v, dv)| v == 0.0 && dv == 0.0));
    }

    #[test]
    fn constant_velocity_seed() {
        let c = 0.7;
        let eps = 0.1;
        let (p, w, d) = setup(
            LoadingProfile::Constant { value: 0.0 },
            DisplacementSpec::Affine,
            VelocitySpec::Constant { value: c },
            eps,
        );
        let f = seed_f_initial(&p, &w, &d);
        for (s, v, _) in f.samples().filter(|(s, _, _)| *s > 0.0) {
            assert!((v + eps * c * s / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn continuity_at_zero() {
        let (p, w, d) = setup(
            LoadingProfile::Ramp {
                from: 1.0,
                to: 2.0,
                duration: 1.0,
            },
            DisplacementSpec::Sampled {
                points: vec![[0.0, 1.0], [0.3, 0.9], [1.0, 0.0]],
            },
            VelocitySpec::Sampled {
                points: vec![[0.0, 0.2], [1.0, -0.1]],
            },
            0.1,
        );
        let f = seed_f_initial(&p, &w, &d);
        let (a, _) = f.eval_seed(1e-13);
        let (b, _) = f.eval_seed(-1e-13);
        assert!((a - b).abs() < 1e-12);
        assert_eq!(f.eval_seed(0.0).0, 0.0);
    }

    #[test]
    fn equilibrium_extension_stays_linear() {
        let w0 = 0.9;
        let eps = 0.1;
        let (p, w, d) = setup(
            LoadingProfile::Constant { value: w0 },
            DisplacementSpec::Affine,
            VelocitySpec::Zero,
            eps,
        );
        let mut f = seed_f_initial(&p, &w, &d);
        let front = Front::from_nodes(eps, &[0.0, 5.0], &[1.0, 1.0]).unwrap();
        extend_f(&mut f, &front, 4.0).unwrap();
        for (s, v, dv) in f.samples() {
            assert!((v - w0 * s / 2.0).abs() < 1e-12, "s={s}");
            assert!((dv - w0 / 2.0).abs() < 1e-12);
        }
    }

    /// Walks the characteristics one reflection at a time using only
    /// `u(t, 0) = w(t)`, `u(t, l) = 0` and the initial data.
    fn brute_force_f(front: &Front, d: &InitialData, w: &LoadingProfile, eps: f64, s: f64) -> f64 {
        let l0 = front.ell0();
        if s <= eps * l0 {
            // undisturbed data: split u0, u1 into travelling waves
            let (fs, _) = CharFunction {
                eps,
                ell0: l0,
                ds: 1.0,
                loading: w.clone(),
                init: d.clone(),
                i_min: 0,
                vals: vec![],
                ders: vec![],
            }
            .eval_seed(s);
            return fs;
        }
        // the front node reached by the left-going characteristic s = t + eps x
        let m = front.maps();
        let t = m.psi_inv(s).unwrap();
        let back = t - eps * front.ell(t).unwrap();
        eps * w.w(s) + brute_force_f(front, d, w, eps, back)
    }

    #[test]
    fn moving_front_matches_brute_force() {
        let eps = 0.1;
        let (p, w, d) = setup(
            LoadingProfile::Sinusoid {
                offset: 1.0,
                amplitude: 0.3,
                omega: 2.0,
                phase: 0.0,
            },
            DisplacementSpec::Affine,
            VelocitySpec::Zero,
            eps,
        );
        let front = Front::from_nodes(eps, &[0.0, 1.0, 2.0, 6.0], &[1.0, 2.0, 2.5, 2.5]).unwrap();
        let mut f = seed_f_initial(&p, &w, &d);
        extend_f(&mut f, &front, 5.0).unwrap();
        for (s, v, _) in f.samples().step_by(37) {
            let b = brute_force_f(&front, &d, &w, eps, s);
            assert!((v - b).abs() < 1e-12, "s={s}");
        }
        for k in 0..50 {
            let t = 0.1 * k as f64;
            let r = f.rule_two_residual(&front, t).unwrap();
            assert!(r.abs() < 1e-9, "t={t} r={r}");
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let eps = 0.1;
        let (p, w, d) = setup(
            LoadingProfile::Sinusoid {
                offset: 1.0,
                amplitude: 0.3,
                omega: 2.0,
                phase: 0.0,
            },
            DisplacementSpec::Sampled {
                points: vec![[0.0, 1.0], [0.5, 0.8], [1.0, 0.0]],
            },
            VelocitySpec::Sampled {
                points: vec![[0.0, 0.6], [1.0, 0.0]],
            },
            eps,
        );
        let front = Front::from_nodes(eps, &[0.0, 1.0, 2.0, 6.0], &[1.0, 2.0, 2.5, 2.5]).unwrap();
        let f = seed_f_initial(&p, &w, &d);
        for s in [0.37, 0.91, 1.53, 2.77, 3.3] {
            let h = 1e-6;
            let fd = (f.eval(&front, s + h).unwrap().0 - f.eval(&front, s - h).unwrap().0) / (2.0 * h);
            assert!((fd - f.eval(&front, s).unwrap().1).abs() < 1e-5, "s={s}");
        }
    }

    #[test]
    fn insufficient_front() {
        let (p, w, d) = setup(
            LoadingProfile::Constant { value: 1.0 },
            DisplacementSpec::Affine,
            VelocitySpec::Zero,
            0.1,
        );
        let mut f = seed_f_initial(&p, &w, &d);
        let front = Front::from_nodes(0.1, &[0.0, 1.0], &[1.0, 1.0]).unwrap();
        assert!(matches!(
            extend_f(&mut f, &front, 2.0),
            Err(DebondError::InsufficientFront { .. })
        ));
    }

    proptest! {
        #[test]
        fn rule_two_holds_on_random_fronts(seed in 0u64..500) {
            use rand::{Rng, SeedableRng};
            let eps = 0.2;
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let mut front = Front::new(eps, 1.0).unwrap();
            for k in 1..=300 {
                let c = rng.gen_range(0.0..0.9) / eps;
                let l = front.ell_last() + c * 0.01;
                front.push(k as f64 * 0.01, l).unwrap();
            }
            let (p, w, d) = setup(
                LoadingProfile::Polynomial { coeffs: vec![1.0, 0.5, -0.1] },
                DisplacementSpec::Affine,
                VelocitySpec::Constant { value: 0.3 },
                eps,
            );
            let mut f = seed_f_initial(&p, &w, &d);
            extend_f(&mut f, &front, front.maps().psi(3.0).unwrap()).unwrap();
            for k in 0..30 {
                let t = 0.1 * k as f64;
                let r = f.rule_two_residual(&front, t).unwrap();
                prop_assert!(r.abs() <= 1e-9 * 2.0);
            }
        }
    }
}
