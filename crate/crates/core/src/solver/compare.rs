//! Sup-norm distances between a characteristic solution and the oracles.

use serde::Serialize;

use crate::error::{DebondError, Result};

use super::coupled::Solution;
use super::fd::FdSolution;
use super::tracer::Tracer;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OracleDistance {
    /// `max_k |l(t_k) - l_ref(t_k)|` over the front knots.
    pub front: f64,
    /// `max |u - u_ref|` over stored levels and interior nodes.
    pub field: f64,
    pub levels: usize,
}

/// Distance to the d'Alembert tracer, evaluated pointwise at every stored node.
pub fn distance_to_tracer(sol: &Solution, tr: &Tracer) -> Result<OracleDistance> {
    let (ka, va) = (sol.front.knots(), sol.front.values());
    let (kb, vb) = (tr.knots(), tr.values());
    if ka.len() != kb.len() {
        return Err(DebondError::InvariantViolation(format!(
            "front lengths differ: {} vs {}",
            ka.len(),
            kb.len()
        )));
    }
    let front = va
        .iter()
        .zip(vb)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let mut field = 0.0f64;
    for row in &sol.field.rows {
        for (j, u) in row.u.iter().enumerate() {
            let (ur, _, _) = tr.sample(row.t, j as f64 * sol.field.dx)?;
            field = field.max((u - ur).abs());
        }
    }
    Ok(OracleDistance {
        front,
        field,
        levels: sol.field.rows.len(),
    })
}

/// Distance to the finite-difference run on the same `ds`. Rows are paired by
/// time; nodes present in both rows are compared.
pub fn distance_to_fd(sol: &Solution, fd: &FdSolution) -> Result<OracleDistance> {
    let mut front = 0.0f64;
    for (&t, &l) in sol.front.knots().iter().zip(sol.front.values()) {
        if t > fd.front.t_last() + 1e-12 {
            break;
        }
        front = front.max((l - fd.front.ell(t.min(fd.front.t_last()))?).abs());
    }
    let mut field = 0.0f64;
    let mut levels = 0;
    let mut rows = fd.field.rows.iter().peekable();
    for row in &sol.field.rows {
        while rows.peek().is_some_and(|r| r.t < row.t - 1e-9) {
            rows.next();
        }
        let Some(other) = rows.peek() else { break };
        if (other.t - row.t).abs() > 1e-9 {
            continue;
        }
        levels += 1;
        for (a, b) in row.u.iter().zip(&other.u) {
            field = field.max((a - b).abs());
        }
    }
    Ok(OracleDistance {
        front,
        field,
        levels,
    })
}
