//! Independent certificate checks: matrix-vector products against the
//! original problem, no solver state.

use super::{LpOutcome, LpProblem, Relation};

pub const ROW_TOL: f64 = 1e-7;
pub const CS_TOL: f64 = 1e-6;
pub const GAP_TOL: f64 = 1e-6;
pub const RAY_TOL: f64 = 1e-9;
/// Roundoff allowed on a row, relative to `sum |a_j| * max |x|`: a computed
/// `x` carries absolute error near `eps * max |x|`, which rows with huge
/// coefficients (deep cuts) amplify past `ROW_TOL`. Ordinary rows never
/// reach this floor.
pub const ROUNDOFF: f64 = 1e2 * f64::EPSILON;

/// Activity of each row and the roundoff its value can carry.
fn row_terms(problem: &LpProblem, x: &[f64]) -> Vec<(f64, f64)> {
    let x_max = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    problem
        .rows
        .iter()
        .map(|r| {
            let (a, s) = r.coeffs.iter().fold((0.0, 0.0), |(a, s), &(j, v)| (a + v * x[j], s + v.abs()));
            (a, ROUNDOFF * s * x_max)
        })
        .collect()
}

fn row_activity(problem: &LpProblem, x: &[f64]) -> Vec<f64> {
    problem
        .rows
        .iter()
        .map(|r| r.coeffs.iter().map(|&(j, v)| v * x[j]).sum())
        .collect()
}

fn transpose_product(problem: &LpProblem, y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; problem.objective.len()];
    for (row, &yi) in problem.rows.iter().zip(y) {
        if yi != 0.0 {
            for &(j, v) in &row.coeffs {
                out[j] += v * yi;
            }
        }
    }
    out
}

/// Primal feasibility, dual feasibility, complementary slackness and duality gap.
pub fn check_optimal(problem: &LpProblem, x: &[f64], y: &[f64]) -> Result<(), String> {
    let n = problem.objective.len();
    if x.len() != n || y.len() != problem.rows.len() {
        return Err("certificate has the wrong shape".into());
    }
    if let Some(j) = x.iter().position(|&v| v < -ROW_TOL || !v.is_finite()) {
        return Err(format!("x[{j}] = {} is negative", x[j]));
    }
    for (i, (row, (a, roundoff))) in problem.rows.iter().zip(row_terms(problem, x)).enumerate() {
        let slack = a - row.rhs;
        let tol = ROW_TOL.max(roundoff);
        let ok = match row.relation {
            Relation::Ge => slack >= -tol,
            Relation::Eq => slack.abs() <= tol,
        };
        if !ok {
            return Err(format!("row {i} violated by {slack:e}"));
        }
        if row.relation == Relation::Ge {
            if y[i] < -CS_TOL {
                return Err(format!("multiplier {i} = {} has the wrong sign", y[i]));
            }
            if (y[i] * slack).abs() > CS_TOL {
                return Err(format!("complementary slackness fails on row {i}: {:e}", y[i] * slack));
            }
        }
    }
    let aty = transpose_product(problem, y);
    for j in 0..n {
        let reduced = problem.objective[j] - aty[j];
        let scale = 1.0 + problem.objective[j].abs();
        if reduced < -CS_TOL * scale {
            return Err(format!("reduced cost of x[{j}] is {reduced:e}"));
        }
        if (x[j] * reduced).abs() > CS_TOL * scale {
            return Err(format!("complementary slackness fails on x[{j}]: {:e}", x[j] * reduced));
        }
    }
    let primal: f64 = problem.objective.iter().zip(x).map(|(c, v)| c * v).sum();
    let dual: f64 = problem.rows.iter().zip(y).map(|(r, v)| r.rhs * v).sum();
    if (primal - dual).abs() > GAP_TOL * (1.0 + primal.abs()) {
        return Err(format!("duality gap {primal} vs {dual}"));
    }
    Ok(())
}

/// `y >= 0` on inequality rows, `A^T y <= 0`, `b^T y > 0`.
pub fn check_farkas(problem: &LpProblem, y: &[f64]) -> Result<(), String> {
    if y.len() != problem.rows.len() {
        return Err("Farkas vector has the wrong length".into());
    }
    for (i, (row, &v)) in problem.rows.iter().zip(y).enumerate() {
        if row.relation == Relation::Ge && v < 0.0 {
            return Err(format!("Farkas multiplier {i} is negative"));
        }
    }
    let aty = transpose_product(problem, y);
    if let Some(j) = aty.iter().position(|&v| v > RAY_TOL) {
        return Err(format!("(A^T y)[{j}] = {:e} > 0", aty[j]));
    }
    let by: f64 = problem.rows.iter().zip(y).map(|(r, v)| r.rhs * v).sum();
    if by <= RAY_TOL {
        return Err(format!("b^T y = {by:e} is not positive"));
    }
    Ok(())
}

/// `r >= 0`, `A r >= 0` on inequality rows, `A r = 0` on equality rows, `c^T r < 0`.
pub fn check_unbounded_ray(problem: &LpProblem, r: &[f64]) -> Result<(), String> {
    if r.len() != problem.objective.len() {
        return Err("ray has the wrong length".into());
    }
    if r.iter().any(|&v| v < 0.0) {
        return Err("ray has a negative entry".into());
    }
    for (i, (row, a)) in problem.rows.iter().zip(row_activity(problem, r)).enumerate() {
        let ok = match row.relation {
            Relation::Ge => a >= -RAY_TOL,
            Relation::Eq => a.abs() <= RAY_TOL,
        };
        if !ok {
            return Err(format!("ray violates row {i}: {a:e}"));
        }
    }
    let cr: f64 = problem.objective.iter().zip(r).map(|(c, v)| c * v).sum();
    if cr >= -RAY_TOL {
        return Err(format!("c^T r = {cr:e} is not negative"));
    }
    Ok(())
}

pub fn verify_outcome(problem: &LpProblem, outcome: &LpOutcome) -> Result<(), String> {
    match outcome {
        LpOutcome::Optimal(sol) => check_optimal(problem, &sol.primal, &sol.dual),
        LpOutcome::Infeasible { farkas } => check_farkas(problem, farkas),
        LpOutcome::Unbounded { ray } => check_unbounded_ray(problem, ray),
    }
}
