//! Vanishing-inertia sweeps, the initial-jump run, and report files.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{decay_constants, EnergySeries};
use crate::error::{DebondError, Result};
use crate::model::{LoadingProfile, Problem, VelocitySpec};
use crate::quasistatic::quasistatic_front;
use crate::solver::{solve_coupled, SolveOptions, Solution};

/// Width of the windows used for the front-increment metric.
pub const INCREMENT_WINDOW: f64 = 0.05;
/// Relative growth tolerated between consecutive entries of a decreasing metric.
pub const MONOTONE_SLACK: f64 = 0.1;
/// Spacing of the common grid used in the CSV artifacts.
pub const REPORT_STEP: f64 = 0.01;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Strictly decreasing.
    pub eps: Vec<f64>,
    /// `ds = ds_over_eps * eps`.
    pub ds_over_eps: f64,
    /// `t_min = t_min_frac * T`.
    pub t_min_frac: f64,
    /// Start value for the quasistatic front; `ell0` when absent.
    pub start: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            eps: vec![0.2, 0.1, 0.05, 0.025],
            ds_over_eps: 0.01,
            t_min_frac: 0.1,
            start: None,
        }
    }
}

impl SweepConfig {
    fn validate(&self) -> Result<()> {
        if self.eps.is_empty() || self.eps.iter().any(|&e| !(e > 0.0)) {
            return Err(DebondError::validation("/eps", "need positive epsilons"));
        }
        if self.eps.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(DebondError::validation("/eps", "must be strictly decreasing"));
        }
        if !(self.ds_over_eps > 0.0) {
            return Err(DebondError::validation("/ds_over_eps", "must be positive"));
        }
        if !(self.t_min_frac >= 0.0 && self.t_min_frac < 1.0) {
            return Err(DebondError::validation("/t_min_frac", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub epsilon: f64,
    pub ds: f64,
    /// `sup |ell - lambda|` on `[t_min, T]`.
    pub front_error: f64,
    /// `front_error / sup lambda`.
    pub front_error_rel: f64,
    /// `|| u_x(., 0) + w / lambda ||_{L2(t_min, T)}`.
    pub trace_l2: f64,
    /// Largest `1/2 int eps^2 u_t^2` on `[t_min, T]`.
    pub max_kinetic: f64,
    pub final_kinetic: f64,
    /// Largest increase of `ell` over a window of width `INCREMENT_WINDOW` in `[t_min, T]`.
    pub max_increment: f64,
    /// Decay rate `m` of the modified energy for this run.
    pub decay_m: f64,
    pub max_picard: usize,
    pub runtime_s: f64,
    #[serde(skip)]
    pub front_samples: Vec<f64>,
    #[serde(skip)]
    pub etilde_samples: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Monotone {
    pub front_error: bool,
    pub trace_l2: bool,
    pub max_kinetic: bool,
    pub max_increment: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub nu: f64,
    pub t_min: f64,
    pub t_end: f64,
    pub start: f64,
    pub entries: Vec<SweepEntry>,
    pub monotone: Monotone,
    /// Common grid for the sampled series.
    #[serde(skip)]
    pub grid: Vec<f64>,
    #[serde(skip)]
    pub lambda: Vec<f64>,
}

fn nonincreasing(v: impl Iterator<Item = f64>) -> bool {
    let v: Vec<f64> = v.collect();
    v.windows(2).all(|w| w[1] <= (1.0 + MONOTONE_SLACK) * w[0])
}

fn report_grid(t_end: f64) -> Vec<f64> {
    let n = (t_end / REPORT_STEP).round().max(1.0) as usize;
    (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
}

fn interp(t: &[f64], v: &[f64], x: f64) -> f64 {
    let i = t.partition_point(|&a| a < x).clamp(1, t.len() - 1);
    let r = ((x - t[i - 1]) / (t[i] - t[i - 1])).clamp(0.0, 1.0);
    v[i - 1] + r * (v[i] - v[i - 1])
}

fn max_window_increment(t: &[f64], ell: &[f64], t_min: f64, width: f64) -> f64 {
    let mut best = 0.0f64;
    let mut j = 0;
    for i in 0..t.len() {
        if t[i] < t_min {
            continue;
        }
        j = j.max(i);
        while j + 1 < t.len() && t[j + 1] <= t[i] + width + 1e-12 {
            j += 1;
        }
        best = best.max(ell[j] - ell[i]);
    }
    best
}

fn entry_metrics(
    sol: &Solution,
    problem: &Problem,
    start: f64,
    t_min: f64,
    grid: &[f64],
    runtime_s: f64,
) -> Result<SweepEntry> {
    let e: &EnergySeries = &sol.energy;
    let qs = quasistatic_front(&problem.toughness, &problem.loading, &e.t, start)?;
    let (mut front_error, mut lam_max, mut max_kinetic) = (0.0f64, 0.0f64, 0.0f64);
    let mut l2 = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..e.t.len() {
        if e.t[k] < t_min - 1e-12 {
            continue;
        }
        let lam = qs.lambda[k];
        front_error = front_error.max((e.ell[k] - lam).abs());
        lam_max = lam_max.max(lam);
        max_kinetic = max_kinetic.max(e.kinetic[k]);
        let d = e.ux0[k] + e.w[k] / lam;
        if let Some((tp, dp)) = prev {
            l2 += 0.5 * (e.t[k] - tp) * (dp * dp + d * d);
        }
        prev = Some((e.t[k], d));
    }
    let p = &problem.params;
    let (_, _, m) = decay_constants(p.nu, e.ell.iter().copied().fold(0.0, f64::max));
    let etilde = e.etilde();
    Ok(SweepEntry {
        epsilon: p.epsilon,
        ds: p.ds,
        front_error,
        front_error_rel: front_error / lam_max.max(f64::MIN_POSITIVE),
        trace_l2: l2.sqrt(),
        max_kinetic,
        final_kinetic: *e.kinetic.last().unwrap(),
        max_increment: max_window_increment(&e.t, &e.ell, t_min, INCREMENT_WINDOW),
        decay_m: m,
        max_picard: sol.picard_iterations.iter().copied().max().unwrap_or(0),
        runtime_s,
        front_samples: grid.iter().map(|&t| interp(&e.t, &e.ell, t)).collect(),
        etilde_samples: grid.iter().map(|&t| interp(&e.t, &etilde, t)).collect(),
    })
}

fn run_sweep(problem: &Problem, cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let t_end = problem.params.t_end;
    let t_min = cfg.t_min_frac * t_end;
    let start = cfg.start.unwrap_or(problem.params.ell0);
    let grid = report_grid(t_end);
    let opts = SolveOptions {
        store_stride: usize::MAX,
        ..SolveOptions::default()
    };
    let entries = cfg
        .eps
        .par_iter()
        .map(|&eps| {
            let wrap = |e: DebondError| DebondError::SweepFailure {
                epsilon: eps,
                source: Box::new(e),
            };
            let p = problem
                .with(|s| {
                    s.epsilon = eps;
                    s.ds = cfg.ds_over_eps * eps;
                })
                .map_err(wrap)?;
            let clock = Instant::now();
            let sol = solve_coupled(&p, &opts).map_err(wrap)?;
            let rt = clock.elapsed().as_secs_f64();
            entry_metrics(&sol, &p, start, t_min, &grid, rt).map_err(wrap)
        })
        .collect::<Result<Vec<_>>>()?;
    let qs = quasistatic_front(&problem.toughness, &problem.loading, &grid, start)?;
    let monotone = Monotone {
        front_error: nonincreasing(entries.iter().map(|e| e.front_error)),
        trace_l2: nonincreasing(entries.iter().map(|e| e.trace_l2)),
        max_kinetic: nonincreasing(entries.iter().map(|e| e.max_kinetic)),
        max_increment: nonincreasing(entries.iter().map(|e| e.max_increment)),
    };
    Ok(SweepReport {
        nu: problem.params.nu,
        t_min,
        t_end,
        start,
        entries,
        monotone,
        grid,
        lambda: qs.lambda,
    })
}

/// Solves the problem for every `eps` of the sweep and compares with the
/// quasistatic front. Requires damping.
pub fn epsilon_sweep(problem: &Problem, cfg: &SweepConfig) -> Result<SweepReport> {
    if !(problem.params.nu > 0.0) {
        return Err(DebondError::Precondition("sweep needs nu > 0".into()));
    }
    let flags = problem.conditions();
    if !flags.k0 || !flags.k3 {
        return Err(DebondError::Precondition("sweep needs K0 and K3".into()));
    }
    run_sweep(problem, cfg)
}

/// The same sweep with `nu = 0`, as a control run.
pub fn undamped_control_sweep(problem: &Problem, cfg: &SweepConfig) -> Result<SweepReport> {
    let p = problem.with(|s| s.nu = 0.0)?;
    run_sweep(&p, cfg)
}

impl SweepReport {
    /// `epsilon,ds,front_error,...` one row per entry. Runtimes go to the JSON
    /// only, so the CSV is reproducible byte for byte.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wr = csv_writer(out);
        wr.write_record([
            "epsilon",
            "ds",
            "front_error",
            "front_error_rel",
            "trace_l2",
            "max_kinetic",
            "final_kinetic",
            "max_increment",
            "decay_m",
        ])?;
        for e in &self.entries {
            wr.write_record(&[
                e.epsilon.to_string(),
                e.ds.to_string(),
                e.front_error.to_string(),
                e.front_error_rel.to_string(),
                e.trace_l2.to_string(),
                e.max_kinetic.to_string(),
                e.final_kinetic.to_string(),
                e.max_increment.to_string(),
                e.decay_m.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// `t,lambda,ell_eps=<eps>...` on the common grid.
    pub fn write_fronts_csv<W: Write>(&self, out: W) -> Result<()> {
        self.write_series(out, "lambda", Some(&self.lambda), "ell", |e| &e.front_samples)
    }

    /// `t,etilde_eps=<eps>...` on the common grid.
    pub fn write_energy_csv<W: Write>(&self, out: W) -> Result<()> {
        self.write_series(out, "", None, "etilde", |e| &e.etilde_samples)
    }

    fn write_series<W: Write>(
        &self,
        out: W,
        extra_name: &str,
        extra: Option<&Vec<f64>>,
        prefix: &str,
        pick: impl Fn(&SweepEntry) -> &Vec<f64>,
    ) -> Result<()> {
        let mut wr = csv_writer(out);
        let mut head = vec!["t".to_string()];
        if extra.is_some() {
            head.push(extra_name.to_string());
        }
        head.extend(self.entries.iter().map(|e| format!("{prefix}_eps={}", e.epsilon)));
        wr.write_record(&head)?;
        for (i, t) in self.grid.iter().enumerate() {
            let mut row = vec![t.to_string()];
            if let Some(x) = extra {
                row.push(x[i].to_string());
            }
            row.extend(self.entries.iter().map(|e| pick(e)[i].to_string()));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Writes `sweep.csv`, `sweep_fronts.csv`, `sweep_energy.csv`, `sweep.json`.
    pub fn write_all(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let f = |name: &str| std::fs::File::create(dir.join(format!("{stem}{name}")));
        self.write_csv(f(".csv")?)?;
        self.write_fronts_csv(f("_fronts.csv")?)?;
        self.write_energy_csv(f("_energy.csv")?)?;
        write_json(&dir.join(format!("{stem}.json")), self)
    }
}

pub(crate) fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| DebondError::InvariantViolation(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JumpConfig {
    /// Step of the unrescaled run.
    pub ds: f64,
    /// First horizon tried; doubled until the front plateaus.
    pub t_first: f64,
    pub t_cap: f64,
    /// Plateau threshold on `|ell(T) - ell(T - 1)|`.
    pub plateau_tol: f64,
    /// Epsilons used for the extrapolation of `ell(t_min)`; the two smallest count.
    pub eps: Vec<f64>,
    pub t_min_frac: f64,
    /// Tolerance for the stability check at `ell1`.
    pub stability_tol: f64,
}

impl Default for JumpConfig {
    fn default() -> Self {
        Self {
            ds: 5e-3,
            t_first: 25.0,
            t_cap: 200.0,
            plateau_tol: 1e-6,
            eps: vec![0.05, 0.025],
            t_min_frac: 0.1,
            stability_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct JumpReport {
    pub converged: bool,
    /// Horizon of the unrescaled run.
    pub t_end: f64,
    pub ell0: f64,
    pub ell1: f64,
    pub plateau_change: f64,
    /// `w(0) / sqrt(2 kappa(ell1))`.
    pub stability_bound: f64,
    pub stable: bool,
    pub energy_final: f64,
    /// `|E(T) - w(0)^2 / (2 ell1)|`.
    pub energy_limit_error: f64,
    /// `E(0) - w(0)^2 / (2 ell1) - int_{ell0}^{ell1} kappa`.
    pub energy_gap: f64,
    pub dissipated: f64,
    /// `|gap - A(T)| / A(T)`.
    pub gap_mismatch_rel: f64,
    /// `(eps, ell_eps(t_min))`.
    pub early_fronts: Vec<[f64; 2]>,
    pub t_min: f64,
    pub ell_plus_estimate: f64,
    pub ell_plus_mismatch_rel: f64,
    #[serde(skip)]
    pub fast: Option<Solution>,
}

/// Unrescaled run (`eps = 1`, frozen load, zero velocity) until the front
/// stops, then the small-`eps` extrapolation of `ell(t_min)`.
pub fn initial_jump(problem: &Problem, cfg: &JumpConfig) -> Result<JumpReport> {
    if !(problem.params.nu > 0.0) {
        return Err(DebondError::Precondition("jump run needs nu > 0".into()));
    }
    if !problem.conditions().k0 {
        return Err(DebondError::Precondition("jump run needs K0".into()));
    }
    if cfg.eps.len() < 2 {
        return Err(DebondError::validation("/eps", "need at least two epsilons"));
    }
    let w0 = problem.loading.w(0.0);
    let opts = SolveOptions {
        store_stride: usize::MAX,
        ..SolveOptions::default()
    };
    let mut t_end = cfg.t_first.min(cfg.t_cap);
    let (sol, converged, change) = loop {
        let p = problem.with(|s| {
            s.epsilon = 1.0;
            s.ds = cfg.ds;
            s.t_end = t_end;
            s.loading = LoadingProfile::Constant { value: w0 };
            s.u1 = VelocitySpec::Zero;
        })?;
        let sol = solve_coupled(&p, &opts)?;
        let change = (sol.front.ell_last() - sol.front.ell(t_end - 1.0)?).abs();
        if change < cfg.plateau_tol || t_end >= cfg.t_cap {
            break (sol, change < cfg.plateau_tol, change);
        }
        t_end = (2.0 * t_end).min(cfg.t_cap);
    };
    let tough = &problem.toughness;
    let e = &sol.energy;
    let ell1 = sol.front.ell_last();
    let kappa1 = tough.kappa(ell1)?;
    let n = e.len() - 1;
    let limit = 0.5 * w0 * w0 / ell1;
    let gap = e.energy[0] - limit - tough.kappa_integral(ell1)?;
    let dissipated = e.friction[n];

    // early-time fronts of the rescaled problem
    let mut eps = cfg.eps.clone();
    eps.sort_by(|a, b| a.total_cmp(b));
    eps.truncate(2);
    let t_min = cfg.t_min_frac * problem.params.t_end;
    let early = eps
        .par_iter()
        .map(|&ep| {
            let p = problem.with(|s| {
                s.epsilon = ep;
                s.ds = cfg.ds * ep;
                s.t_end = t_min;
            })?;
            let sol = solve_coupled(&p, &opts).map_err(|e| DebondError::SweepFailure {
                epsilon: ep,
                source: Box::new(e),
            })?;
            Ok([ep, sol.front.ell_last()])
        })
        .collect::<Result<Vec<_>>>()?;
    let ([ea, la], [eb, lb]) = (early[0], early[1]);
    let ell_plus = la - (lb - la) * ea / (eb - ea);

    Ok(JumpReport {
        converged,
        t_end,
        ell0: problem.params.ell0,
        ell1,
        plateau_change: change,
        stability_bound: w0 / (2.0 * kappa1).sqrt(),
        stable: 0.5 * w0 * w0 / (ell1 * ell1) <= kappa1 * (1.0 + cfg.stability_tol),
        energy_final: e.energy[n],
        energy_limit_error: (e.energy[n] - limit).abs(),
        energy_gap: gap,
        dissipated,
        gap_mismatch_rel: (gap - dissipated).abs() / dissipated.abs().max(f64::MIN_POSITIVE),
        early_fronts: early,
        t_min,
        ell_plus_estimate: ell_plus,
        ell_plus_mismatch_rel: (ell_plus - ell1).abs() / ell1,
        fast: Some(sol),
    })
}

impl JumpReport {
    /// Writes `jump.json` and, when the unrescaled run is kept, `jump_front.csv`
    /// (`t,ell,E,A`) on the report grid.
    pub fn write_all(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        if let Some(sol) = &self.fast {
            let e = &sol.energy;
            let mut wr = csv_writer(std::fs::File::create(dir.join("jump_front.csv"))?);
            wr.write_record(["t", "ell", "E", "A"])?;
            for t in report_grid(self.t_end) {
                wr.write_record(&[
                    t.to_string(),
                    interp(&e.t, &e.ell, t).to_string(),
                    interp(&e.t, &e.energy, t).to_string(),
                    interp(&e.t, &e.friction, t).to_string(),
                ])?;
            }
            wr.flush()?;
        }
        write_json(&dir.join("jump.json"), self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_increment() {
        let t: Vec<f64> = (0..=100).map(|i| i as f64 * 0.01).collect();
        let ell: Vec<f64> = t.iter().map(|&s| 1.0 + 2.0 * s).collect();
        let inc = max_window_increment(&t, &ell, 0.1, 0.05);
        assert!((inc - 0.1).abs() < 1e-12);
        let flat = vec![1.0; t.len()];
        assert_eq!(max_window_increment(&t, &flat, 0.0, 0.05), 0.0);
    }

    #[test]
    fn slack_rule() {
        assert!(nonincreasing([1.0, 1.05, 0.5].into_iter()));
        assert!(!nonincreasing([1.0, 1.2].into_iter()));
    }

    #[test]
    fn config_checks() {
        let mut c = SweepConfig::default();
        assert!(c.validate().is_ok());
        c.eps = vec![0.1, 0.2];
        assert!(c.validate().is_err());
    }

    const EQ: &str = r#"{
        "epsilon": 0.1, "nu": 1.0, "ell0": 1.0, "t_end": 0.5, "ds": 0.002,
        "toughness": {"kind": "constant", "value": 0.5},
        "loading": {"kind": "constant", "value": 0.9},
        "u0": {"kind": "affine"}
    }"#;

    #[test]
    fn equilibrium_sweep_is_exact() {
        let p = Problem::from_json_str(EQ).unwrap();
        let cfg = SweepConfig {
            eps: vec![0.2, 0.1],
            ds_over_eps: 0.02,
            ..SweepConfig::default()
        };
        let r = epsilon_sweep(&p, &cfg).unwrap();
        for e in &r.entries {
            assert_eq!(e.front_error, 0.0);
            assert!(e.trace_l2 < 1e-10 && e.max_kinetic < 1e-20);
        }
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
        assert!(undamped_control_sweep(&p, &cfg).is_ok());
        assert!(epsilon_sweep(&p.with(|s| s.nu = 0.0).unwrap(), &cfg).is_err());
    }

    #[test]
    fn stable_start_does_not_jump() {
        let p = Problem::from_json_str(EQ).unwrap();
        let cfg = JumpConfig {
            ds: 0.02,
            t_first: 4.0,
            t_cap: 4.0,
            ..JumpConfig::default()
        };
        let r = initial_jump(&p, &cfg).unwrap();
        assert!(r.converged && r.ell1 == 1.0 && r.stable);
        assert!(r.energy_limit_error < 1e-10);
    }
}
