#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::json;

use debond_core::energy::{boundary_work_identity_check, decay_envelope_check, griffith_residuals};
use debond_core::experiments::{
    epsilon_sweep, initial_jump, undamped_control_sweep, write_json, JumpConfig, SweepConfig,
};
use debond_core::model::Problem;
use debond_core::quasistatic::{
    detect_jumps, quasistatic_front, uniform_grid, verify_energy_balance_qs,
    verify_global_stability, verify_quasistatic_griffith,
};
use debond_core::solver::compare::{distance_to_fd, distance_to_tracer};
use debond_core::solver::duhamel::magic_report;
use debond_core::solver::fd::fd_oracle_solve;
use debond_core::solver::tracer::trace_undamped;
use debond_core::solver::{solve_coupled, Solution, SolveOptions};
use debond_core::{DebondError, Result};

#[derive(Parser)]
#[command(name = "debond", version, about = "Dynamic debonding simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Problem file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, env = "DEBOND_OUT", default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// One dynamic run: front, energies and residuals.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also write the full field as `field.csv`.
        #[arg(long)]
        dump_field: bool,
        /// Keep every n-th level in `field.csv`.
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
    /// Closed-form quasistatic front.
    Quasistatic {
        #[command(flatten)]
        common: Common,
        /// Grid step.
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        /// Start value of the front; `ell0` when absent.
        #[arg(long)]
        start: Option<f64>,
    },
    /// Vanishing-inertia sweep over epsilon.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Sweep settings (JSON); defaults otherwise.
        #[arg(long)]
        settings: Option<PathBuf>,
        /// Comma-separated, strictly decreasing.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        /// Run with nu = 0 instead.
        #[arg(long)]
        undamped: bool,
    },
    /// Unrescaled run to the long-time plateau and the jump cross-check.
    Jump {
        #[command(flatten)]
        common: Common,
        /// Jump settings (JSON); defaults otherwise.
        #[arg(long)]
        settings: Option<PathBuf>,
    },
    /// Identity and invariant checks on one run.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random points for the pointwise identity check.
        #[arg(long, default_value_t = 50)]
        points: usize,
    },
    /// Cross-check against the finite-difference solver (and the tracer when nu = 0).
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        substeps: usize,
    },
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn load(common: &Common) -> Result<Problem> {
    let p = Problem::from_path(&common.config)?;
    std::fs::create_dir_all(&common.out)?;
    Ok(p)
}

fn settings<T: DeserializeOwned + Default>(path: Option<&PathBuf>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let pointer = if path == "." { String::new() } else { format!("/{}", path.replace('.', "/")) };
        DebondError::validation(pointer, e.inner().to_string())
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn run_residuals(p: &Problem, sol: &Solution) -> Result<serde_json::Value> {
    let e = &sol.energy;
    Ok(json!({
        "ell_final": sol.front.ell_last(),
        "ell_max_deviation": sol.front.values().iter().map(|l| (l - p.params.ell0).abs()).fold(0.0, f64::max),
        "balance_residual": max_abs(&e.balance_residual()),
        "relative_balance_residual": max_abs(&e.relative_balance_residual()),
        "griffith": griffith_residuals(e, &p.toughness, p.params.epsilon)?,
        "h_front": max_abs(&sol.trace.h_front),
        "picard_max": sol.picard_iterations.iter().copied().max().unwrap_or(0),
    }))
}

fn simulate(common: &Common, dump_field: bool, stride: usize) -> Result<()> {
    let p = load(common)?;
    let opts = SolveOptions {
        store_stride: if dump_field { stride.max(1) } else { usize::MAX },
        ..Default::default()
    };
    let sol = solve_coupled(&p, &opts)?;
    let dir = &common.out;
    sol.front.write_csv(create(dir, "front.csv")?)?;
    sol.energy.write_csv(create(dir, "energy.csv")?)?;
    if dump_field {
        sol.field.write_csv(create(dir, "field.csv")?)?;
    }
    write_json(&dir.join("residuals.json"), &run_residuals(&p, &sol)?)
}

fn quasistatic(common: &Common, step: f64, start: Option<f64>) -> Result<()> {
    let p = load(common)?;
    if !(step > 0.0) {
        return Err(DebondError::validation("", "--step must be positive"));
    }
    let grid = uniform_grid(p.params.t_end, step);
    let evo = quasistatic_front(&p.toughness, &p.loading, &grid, start.unwrap_or(p.params.ell0))?;
    evo.write_csv(create(&common.out, "quasistatic.csv")?)?;
    let stability = match verify_global_stability(&evo, 20, 200, 1e-9) {
        Ok(r) => json!(r),
        Err(DebondError::Precondition(m)) => json!({ "not_applicable": m }),
        Err(e) => return Err(e),
    };
    let report = json!({
        "griffith": verify_quasistatic_griffith(&evo),
        "energy_balance": max_abs(&verify_energy_balance_qs(&evo)?),
        "global_stability": stability,
        "jump_indices": detect_jumps(&evo.lambda, 1e-9),
    });
    write_json(&common.out.join("quasistatic.json"), &report)
}

fn sweep(common: &Common, file: Option<&PathBuf>, eps: Option<Vec<f64>>, undamped: bool) -> Result<()> {
    let p = load(common)?;
    let mut cfg: SweepConfig = settings(file)?;
    if let Some(eps) = eps {
        cfg.eps = eps;
    }
    let report = if undamped {
        undamped_control_sweep(&p, &cfg)?
    } else {
        epsilon_sweep(&p, &cfg)?
    };
    report.write_all(&common.out, if undamped { "sweep_undamped" } else { "sweep" })
}

fn jump(common: &Common, file: Option<&PathBuf>) -> Result<()> {
    let p = load(common)?;
    let cfg: JumpConfig = settings(file)?;
    initial_jump(&p, &cfg)?.write_all(&common.out)
}

fn verify(common: &Common, seed: u64, points: usize) -> Result<()> {
    let p = load(common)?;
    let sol = solve_coupled(&p, &SolveOptions::default())?;
    let decay = match decay_envelope_check(&sol.energy, &p.params) {
        Ok(r) => json!(r),
        Err(DebondError::NotApplicable(m)) => json!({ "not_applicable": m }),
        Err(e) => return Err(e),
    };
    let bw = boundary_work_identity_check(&sol.field, &p.params, &p.init, &p.loading)?;
    let report = json!({
        "seed": seed,
        "run": run_residuals(&p, &sol)?,
        "magic": magic_report(&sol, points, seed)?,
        "boundary_work": bw.max_residual,
        "decay": decay,
        "conditions": p.conditions(),
    });
    write_json(&common.out.join("verify.json"), &report)
}

fn oracle(common: &Common, substeps: usize) -> Result<()> {
    let p = load(common)?;
    let sol = solve_coupled(&p, &SolveOptions::default())?;
    let fd = fd_oracle_solve(&p.params, &p.toughness, &p.loading, &p.init, substeps)?;
    fd.front.write_csv(create(&common.out, "fd_front.csv")?)?;
    let tracer = if p.params.nu == 0.0 {
        let tr = trace_undamped(&p.params, &p.toughness, &p.loading, &p.init)?;
        Some(distance_to_tracer(&sol, &tr)?)
    } else {
        None
    };
    let report = json!({
        "substeps": substeps,
        "fd": distance_to_fd(&sol, &fd)?,
        "tracer": tracer,
    });
    write_json(&common.out.join("oracle.json"), &report)
}

fn error_object(e: &DebondError) -> serde_json::Value {
    let pointer = match e {
        DebondError::Validation { pointer, .. } => Some(pointer.as_str()),
        _ => None,
    };
    json!({ "kind": e.kind(), "message": e.to_string(), "pointer": pointer })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let obj = json!({ "kind": "usage", "message": msg.trim_end(), "pointer": null });
            eprintln!("{obj}");
            return ExitCode::from(1);
        }
    };
    let res = match &cli.cmd {
        Cmd::Simulate { common, dump_field, stride } => simulate(common, *dump_field, *stride),
        Cmd::Quasistatic { common, step, start } => quasistatic(common, *step, *start),
        Cmd::Sweep { common, settings, eps, undamped } => {
            sweep(common, settings.as_ref(), eps.clone(), *undamped)
        }
        Cmd::Jump { common, settings } => jump(common, settings.as_ref()),
        Cmd::Verify { common, seed, points } => verify(common, *seed, *points),
        Cmd::Oracle { common, substeps } => oracle(common, *substeps),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_object(&e));
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
