//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on failure.

use std::process::ExitCode;
use std::time::Instant;

use debond_core::energy::{decay_constants, decay_envelope_check, griffith_residuals};
use debond_core::experiments::{
    epsilon_sweep, initial_jump, undamped_control_sweep, JumpConfig, SweepConfig, SweepReport,
};
use debond_core::model::Problem;
use debond_core::quasistatic::{
    integrate_lambda_rate, quasistatic_front, uniform_grid, verify_quasistatic_griffith,
};
use debond_core::solver::compare::{distance_to_fd, distance_to_tracer};
use debond_core::solver::duhamel::magic_report;
use debond_core::solver::fd::fd_oracle_solve;
use debond_core::solver::tracer::trace_undamped;
use debond_core::solver::{solve_coupled, Solution, SolveOptions};
use debond_core::Result;

const SEED: u64 = 0;
const POINTS: usize = 50;
const OVERLAP_DS: [f64; 3] = [4e-3, 2e-3, 1e-3];
const FD_SUBSTEPS: usize = 4;

const EQUILIBRIUM: &str = r#"{
    "epsilon": 0.1, "nu": 1.0, "ell0": 1.0, "t_end": 2.0, "ds": 0.001,
    "toughness": {"kind": "constant", "value": 0.5},
    "loading": {"kind": "constant", "value": 0.9},
    "u0": {"kind": "affine"}, "u1": {"kind": "zero"}
}"#;

/// Ramp 1 -> 1.5 over [0, 2], kappa = 0.2, equilibrium start at l0 = 1.6 with
/// the compatible velocity w'(0) (1 - x / l0).
fn overlap(nu: f64, ds: f64) -> Problem {
    Problem::from_json_str(&format!(
        r#"{{
        "epsilon": 0.1, "nu": {nu}, "ell0": 1.6, "t_end": 2.0, "ds": {ds},
        "toughness": {{"kind": "constant", "value": 0.2}},
        "loading": {{"kind": "ramp", "from": 1.0, "to": 1.5, "duration": 2.0}},
        "u0": {{"kind": "affine"}},
        "u1": {{"kind": "sampled", "points": [[0.0, 0.25], [1.6, 0.0]]}}
    }}"#
    ))
    .unwrap()
}

fn sweep_problem(nu: f64) -> Problem {
    Problem::from_json_str(&format!(
        r#"{{
        "epsilon": 0.2, "nu": {nu}, "ell0": 1.0, "t_end": 2.0, "ds": 0.002,
        "toughness": {{"kind": "constant", "value": 0.5}},
        "loading": {{"kind": "ramp", "from": 1.0, "to": 1.6, "duration": 2.0}},
        "u0": {{"kind": "affine"}}
    }}"#
    ))
    .unwrap()
}

fn jump_problem() -> Problem {
    Problem::from_json_str(
        r#"{
        "epsilon": 1.0, "nu": 1.0, "ell0": 1.0, "t_end": 25.0, "ds": 0.005,
        "toughness": {"kind": "constant", "value": 0.1},
        "loading": {"kind": "constant", "value": 1.0},
        "u0": {"kind": "affine"}
    }"#,
    )
    .unwrap()
}

fn solve(p: &Problem) -> Solution {
    solve_coupled(p, &SolveOptions::default()).unwrap()
}

struct Runs {
    equilibrium: (Problem, Solution),
    undamped: (Problem, Solution),
    damped: Vec<(Problem, Solution)>,
}

impl Runs {
    fn all(&self) -> impl Iterator<Item = &(Problem, Solution)> {
        std::iter::once(&self.equilibrium)
            .chain(std::iter::once(&self.undamped))
            .chain(&self.damped)
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn c1_equilibrium(runs: &Runs) -> Result<Outcome> {
    let (_, sol) = &runs.equilibrium;
    let front_ok = sol.front.values().iter().all(|&l| l == 1.0);
    let mut dev = 0.0f64;
    for row in &sol.field.rows {
        for (j, u) in row.u.iter().enumerate() {
            dev = dev.max((u - 0.9 * (1.0 - j as f64 * sol.field.dx)).abs());
        }
    }
    let bal = max_abs(&sol.energy.balance_residual());
    outcome(
        front_ok && dev <= 1e-8 && bal <= 1e-10,
        format!("front fixed {front_ok}, field dev {dev:.2e} (<= 1e-8), balance {bal:.2e} (<= 1e-10)"),
    )
}

fn c2_tracer(runs: &Runs) -> Result<Outcome> {
    let (p, sol) = &runs.undamped;
    let tr = trace_undamped(&p.params, &p.toughness, &p.loading, &p.init)?;
    let d = distance_to_tracer(sol, &tr)?;
    let moved = sol.front.ell_last() - p.params.ell0;
    outcome(
        d.front <= 1e-8 && d.field <= 1e-8 && moved > 0.1,
        format!("front {:.2e}, field {:.2e} (<= 1e-8), front advance {moved:.3}", d.front, d.field),
    )
}

fn c3_fd(runs: &Runs) -> Result<Outcome> {
    let mut front = Vec::new();
    let mut field = Vec::new();
    for (p, sol) in &runs.damped {
        let fd = fd_oracle_solve(&p.params, &p.toughness, &p.loading, &p.init, FD_SUBSTEPS)?;
        let d = distance_to_fd(sol, &fd)?;
        front.push(d.front);
        field.push(d.field);
    }
    let ratios = |v: &[f64]| v.windows(2).map(|w| w[0] / w[1]).collect::<Vec<_>>();
    let (rf, ru) = (ratios(&front), ratios(&field));
    let pass = rf.iter().chain(&ru).all(|&r| r >= 1.8);
    outcome(
        pass,
        format!("front {} ratios {rf:.2?}, field {} ratios {ru:.2?} (>= 1.8)", sci(&front), sci(&field)),
    )
}

fn c4_magic(runs: &Runs) -> Result<Outcome> {
    let mut worst = 0.0f64;
    for (_, sol) in runs.all() {
        worst = worst.max(magic_report(sol, POINTS, SEED)?.max_explicit);
    }
    let rms = runs
        .damped
        .iter()
        .map(|(_, s)| magic_report(s, POINTS, SEED).map(|r| r.rms_march))
        .collect::<Result<Vec<_>>>()?;
    // halving, or already at round-off
    let halves = rms.windows(2).all(|w| w[1] <= 0.55 * w[0] || w[1] <= 1e-12);
    outcome(
        worst <= 1e-8 && halves,
        format!("pointwise max {worst:.2e} (<= 1e-8), march rms over ds {}", sci(&rms)),
    )
}

fn c5_balance(runs: &Runs) -> Result<Outcome> {
    let mut pass = true;
    let mut worst_bal = 0.0f64;
    let mut worst_comp = 0.0f64;
    for (p, sol) in runs.all() {
        let ds = p.params.ds;
        let bal = max_abs(&sol.energy.relative_balance_residual());
        let g = griffith_residuals(&sol.energy, &p.toughness, p.params.epsilon)?;
        pass &= bal <= 5.0 * ds && g.max_complementarity <= 10.0 * ds && g.min_slope >= 0.0;
        worst_bal = worst_bal.max(bal / ds);
        worst_comp = worst_comp.max(g.max_complementarity / ds);
    }
    outcome(
        pass,
        format!("max relative balance / ds {worst_bal:.3} (<= 5), max complementarity / (ds kappa) {worst_comp:.3} (<= 10)"),
    )
}

fn c6_decay(runs: &Runs) -> Result<Outcome> {
    let (mu0, mu1, m) = decay_constants(1.0, std::f64::consts::PI);
    let exact = mu0 == 1.0 && mu1 == 1.0 && m == 0.25;
    let c = runs
        .damped
        .iter()
        .map(|(p, s)| decay_envelope_check(&s.energy, &p.params).map(|r| r.empirical_c_t))
        .collect::<Result<Vec<_>>>()?;
    let finite = c.iter().all(|v| v.is_finite());
    let stable = c.windows(2).all(|w| (w[1] - w[0]).abs() <= 0.2 * w[0].abs().max(1e-300));
    outcome(
        exact && finite && stable,
        format!("(mu0, mu1, m) = ({mu0}, {mu1}, {m}), fitted C_T over ds {} (within 20%)", sci(&c)),
    )
}

fn c7_quasistatic() -> Result<Outcome> {
    let p = Problem::from_json_str(
        r#"{
        "epsilon": 0.1, "nu": 1.0, "ell0": 1.0, "t_end": 2.0, "ds": 0.001,
        "toughness": {"kind": "constant", "value": 0.5},
        "loading": {"kind": "ramp", "from": 1.0, "to": 3.0, "duration": 2.0},
        "u0": {"kind": "affine"}
    }"#,
    )?;
    let grid = uniform_grid(2.0, 1e-3);
    let evo = quasistatic_front(&p.toughness, &p.loading, &grid, 1.0)?;
    let err = grid
        .iter()
        .zip(&evo.lambda)
        .fold(0.0f64, |m, (t, l)| m.max((l - (1.0 + t)).abs()));
    let g = verify_quasistatic_griffith(&evo);
    let gmax = g.negative_slope.max(g.stability).max(g.complementarity);
    let rk = integrate_lambda_rate(&p.toughness, &p.loading, &grid, 1.0, 4)?;
    let sur = rk
        .iter()
        .zip(&evo.lambda)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    outcome(
        err <= 1e-10 && gmax <= 1e-8 && sur <= 1e-6,
        format!("closed form {err:.2e} (<= 1e-10), Griffith {gmax:.2e} (<= 1e-8), surrogate {sur:.2e} (<= 1e-6)"),
    )
}

fn c8_sweep(damped: &SweepReport) -> Result<Outcome> {
    let m = &damped.monotone;
    let last = damped.entries.last().unwrap();
    let errs: Vec<f64> = damped.entries.iter().map(|e| e.front_error).collect();
    outcome(
        m.front_error && m.trace_l2 && m.max_kinetic && last.front_error_rel <= 0.05,
        format!(
            "monotone front/trace/kinetic {}/{}/{}, front errors {}, smallest-eps relative {:.2}% (<= 5%)",
            m.front_error,
            m.trace_l2,
            m.max_kinetic,
            sci(&errs),
            100.0 * last.front_error_rel
        ),
    )
}

fn c9_undamped(damped: &SweepReport, undamped: &SweepReport) -> Result<Outcome> {
    let a = undamped.entries.last().unwrap().final_kinetic;
    let b = damped.entries.last().unwrap().final_kinetic;
    let ratio = a / b;
    outcome(
        ratio >= 10.0,
        format!("final kinetic nu=0 {a:.3e} vs nu=1 {b:.3e}, ratio {ratio:.2} (>= 10)"),
    )
}

fn c10_jump() -> Result<Outcome> {
    let r = initial_jump(&jump_problem(), &JumpConfig::default())?;
    let bound = 5f64.sqrt() - 1e-3;
    let pass = r.converged
        && r.ell1 >= bound
        && r.energy_limit_error <= 1e-3
        && r.ell_plus_mismatch_rel <= 0.02
        && r.gap_mismatch_rel <= 1e-2;
    outcome(
        pass,
        format!(
            "plateau {} at T={}, l1 {:.6} (>= {bound:.4}), |E(T) - 1/(2 l1)| {:.2e} (<= 1e-3), l+ mismatch {:.1e} (<= 2e-2), gap mismatch {:.2e} (<= 1e-2)",
            r.converged, r.t_end, r.ell1, r.energy_limit_error, r.ell_plus_mismatch_rel, r.gap_mismatch_rel
        ),
    )
}

fn report(n: usize, name: &str, clock: Instant, res: Result<Outcome>) -> bool {
    let secs = clock.elapsed().as_secs_f64();
    let (pass, detail) = match res {
        Ok(o) => (o.pass, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("criterion {n:>2} {tag} [{name}] {detail} ({secs:.1}s)");
    pass
}

fn main() -> ExitCode {
    // `cargo test` forwards harness flags; listing must not run the suite.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let clock = Instant::now();
    let runs = Runs {
        equilibrium: {
            let p = Problem::from_json_str(EQUILIBRIUM).unwrap();
            let s = solve(&p);
            (p, s)
        },
        undamped: {
            let p = overlap(0.0, 2e-3);
            let s = solve(&p);
            (p, s)
        },
        damped: OVERLAP_DS
            .iter()
            .map(|&ds| {
                let p = overlap(1.0, ds);
                let s = solve(&p);
                (p, s)
            })
            .collect(),
    };
    println!("shared runs solved in {:.1}s", clock.elapsed().as_secs_f64());

    let mut ok = true;
    let t = Instant::now();
    ok &= report(1, "stationary equilibrium", t, c1_equilibrium(&runs));
    let t = Instant::now();
    ok &= report(2, "tracer equivalence, nu=0", t, c2_tracer(&runs));
    let t = Instant::now();
    ok &= report(3, "FD convergence, nu=1", t, c3_fd(&runs));
    let t = Instant::now();
    ok &= report(4, "magic identity", t, c4_magic(&runs));
    let t = Instant::now();
    ok &= report(5, "energy balance and complementarity", t, c5_balance(&runs));
    let t = Instant::now();
    ok &= report(6, "decay constants and envelope", t, c6_decay(&runs));
    let t = Instant::now();
    ok &= report(7, "quasistatic closed form", t, c7_quasistatic());

    let t = Instant::now();
    let cfg = SweepConfig::default();
    let damped = epsilon_sweep(&sweep_problem(1.0), &cfg);
    let undamped = undamped_control_sweep(&sweep_problem(1.0), &cfg);
    match (&damped, &undamped) {
        (Ok(d), Ok(u)) => {
            ok &= report(8, "quasistatic-limit sweep", t, c8_sweep(d));
            ok &= report(9, "undamped control", t, c9_undamped(d, u));
        }
        _ => {
            let err = damped.err().or(undamped.err()).unwrap();
            let msg = err.to_string();
            report(8, "quasistatic-limit sweep", t, Err(err));
            println!("criterion  9 FAIL [undamped control] sweep failed: {msg}");
            ok = false;
        }
    }
    let t = Instant::now();
    ok &= report(10, "initial jump", t, c10_jump());

    println!(
        "acceptance: {} in {:.1}s",
        if ok { "all criteria PASS" } else { "FAILURES" },
        clock.elapsed().as_secs_f64()
    );
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
