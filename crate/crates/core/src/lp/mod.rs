//! Dense linear programming: `min c.x  s.t.  rows (>= | =) rhs,  x >= 0`.
//!
//! [`solve`] runs the two-phase tableau simplex on the problem as given.
//! [`solve_dual_form`] solves the dual `max b.a  s.t.  A^T a <= c` instead,
//! by revised simplex when `c >= 0`, and [`solve_auto`] picks whichever
//! route is smaller, always answering in terms of the primal. Every outcome is re-checked by [`check`] before
//! it is returned.

pub mod check;
mod revised;
mod tableau;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("simplex stalled after {iterations} iterations")]
    Stall { iterations: usize },
    #[error("dense tableau too large: {rows} rows x {cols} columns")]
    TooLarge { rows: usize, cols: usize },
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("certificate check failed: {0}")]
    Certificate(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>) -> Self {
        Self { objective, rows: Vec::new() }
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.rows.push(Row { coeffs, relation, rhs });
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        if n == 0 {
            return Err(LpError::Malformed("no variables".into()));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::Malformed("non-finite objective coefficient".into()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::Malformed(format!("row {i} has a non-finite rhs")));
            }
            for &(j, v) in &row.coeffs {
                if j >= n || !v.is_finite() {
                    return Err(LpError::Malformed(format!("row {i} has a bad coefficient at column {j}")));
                }
            }
        }
        Ok(())
    }

    /// Plain-text dump, one row per line: `coef*x<j> ... (>=|=) rhs`.
    pub fn to_lp_text(&self) -> String {
        let mut out = String::from("min:");
        for (j, c) in self.objective.iter().enumerate() {
            if *c != 0.0 {
                let _ = write!(out, " {c:+e}*x{j}");
            }
        }
        out.push('\n');
        for row in &self.rows {
            for &(j, v) in &row.coeffs {
                let _ = write!(out, "{v:+e}*x{j} ");
            }
            let rel = match row.relation {
                Relation::Ge => ">=",
                Relation::Eq => "=",
            };
            let _ = writeln!(out, "{rel} {:e}", row.rhs);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub primal: Vec<f64>,
    /// One multiplier per row; nonnegative on `>=` rows.
    pub dual: Vec<f64>,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    /// Farkas ray over the rows, normalized to unit max-norm.
    Infeasible { farkas: Vec<f64> },
    /// Recession direction over the variables, normalized to unit max-norm.
    Unbounded { ray: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn status(&self) -> LpStatus {
        match self {
            LpOutcome::Optimal(_) => LpStatus::Optimal,
            LpOutcome::Infeasible { .. } => LpStatus::Infeasible,
            LpOutcome::Unbounded { .. } => LpStatus::Unbounded,
        }
    }

    pub fn optimal(&self) -> Option<&LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

fn checked(problem: &LpProblem, outcome: LpOutcome) -> Result<LpOutcome, LpError> {
    check::verify_outcome(problem, &outcome).map_err(LpError::Certificate)?;
    Ok(outcome)
}

/// Primal two-phase simplex on the problem as stated.
pub fn solve(problem: &LpProblem) -> Result<LpOutcome, LpError> {
    problem.validate()?;
    let (outcome, _) = tableau::solve_primal(problem)?;
    checked(problem, outcome)
}

/// Column index of each dual variable: one per `>=` row, a `+/-` pair per `=` row.
struct DualLayout {
    pos: Vec<usize>,
    neg: Vec<Option<usize>>,
    n: usize,
}

fn dual_problem(primal: &LpProblem) -> (LpProblem, DualLayout) {
    let mut pos = Vec::with_capacity(primal.rows.len());
    let mut neg = Vec::with_capacity(primal.rows.len());
    let mut n = 0;
    for row in &primal.rows {
        pos.push(n);
        n += 1;
        if row.relation == Relation::Eq {
            neg.push(Some(n));
            n += 1;
        } else {
            neg.push(None);
        }
    }
    let mut objective = vec![0.0; n];
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); primal.objective.len()];
    for (i, row) in primal.rows.iter().enumerate() {
        objective[pos[i]] = -row.rhs;
        if let Some(q) = neg[i] {
            objective[q] = row.rhs;
        }
        for &(j, v) in &row.coeffs {
            columns[j].push((pos[i], -v));
            if let Some(q) = neg[i] {
                columns[j].push((q, v));
            }
        }
    }
    let mut dual = LpProblem::new(objective);
    for (j, coeffs) in columns.into_iter().enumerate() {
        dual.add_row(coeffs, Relation::Ge, -primal.objective[j]);
    }
    (dual, DualLayout { pos, neg, n })
}

fn merge(layout: &DualLayout, v: &[f64]) -> Vec<f64> {
    debug_assert_eq!(v.len(), layout.n);
    layout
        .pos
        .iter()
        .zip(&layout.neg)
        .map(|(&p, q)| v[p] - q.map_or(0.0, |q| v[q]))
        .collect()
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let m = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if m > 0.0 {
        v.iter_mut().for_each(|x| *x /= m);
    }
    v
}

/// Solves the dual `max b.a  s.t.  A^T a <= c,  a >= 0` (free on `=` rows).
///
/// The outcome describes the dual: `primal` is `a`, `dual` holds the
/// multipliers of `A^T a <= c` (a primal `x`), `Unbounded.ray` is a
/// direction with `A^T r <= 0, b.r > 0` (a Farkas certificate for the
/// primal) and `Infeasible.farkas` is a primal recession direction.
pub fn solve_dual_form(primal: &LpProblem) -> Result<LpOutcome, LpError> {
    primal.validate()?;
    let (dual, layout) = dual_problem(primal);
    let outcome = match primal.objective.iter().all(|&c| c >= 0.0) {
        true => revised::Revised::from_dual(&dual).and_then(|mut r| r.solve()),
        false => Err(LpError::Malformed("negative cost".into())),
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(_) => tableau::solve_primal(&dual)?.0,
    };
    Ok(match outcome {
        LpOutcome::Optimal(s) => LpOutcome::Optimal(LpSolution {
            primal: merge(&layout, &s.primal),
            dual: s.dual,
            objective: -s.objective,
        }),
        LpOutcome::Unbounded { ray } => LpOutcome::Unbounded { ray: normalized(merge(&layout, &ray)) },
        LpOutcome::Infeasible { farkas } => LpOutcome::Infeasible { farkas },
    })
}

/// Translates a dual-form outcome back to the primal; `None` when the dual
/// is infeasible, which `c >= 0` rules out.
fn from_dual_form(problem: &LpProblem, outcome: LpOutcome) -> Option<LpOutcome> {
    match outcome {
        LpOutcome::Optimal(s) => {
            let mut x = s.dual;
            x.iter_mut().for_each(|v| *v = v.max(0.0));
            let objective = problem.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
            Some(LpOutcome::Optimal(LpSolution { primal: x, dual: s.primal, objective }))
        }
        LpOutcome::Unbounded { ray } => Some(LpOutcome::Infeasible { farkas: ray }),
        LpOutcome::Infeasible { .. } => None,
    }
}

/// Primal answer via whichever route is smaller.
///
/// With `c >= 0` the dual always starts feasible at `a = 0`, so when the
/// problem has more rows than columns the dual route skips phase one and
/// keeps an `n x n` basis inverse instead of an `m x (n + m)` tableau.
pub fn solve_auto(problem: &LpProblem) -> Result<LpOutcome, LpError> {
    problem.validate()?;
    let use_dual = problem.rows.len() > problem.objective.len() && problem.objective.iter().all(|&c| c >= 0.0);
    if !use_dual {
        return solve(problem);
    }
    let outcome = match solve_dual_form(problem) {
        Ok(o) => o,
        Err(LpError::Stall { .. }) => return solve(problem),
        Err(e) => return Err(e),
    };
    let Some(outcome) = from_dual_form(problem, outcome) else {
        return solve(problem);
    };
    checked(problem, outcome).or_else(|_| solve(problem))
}

/// An LP re-solved after appending rows (cutting planes) or replacing the
/// rhs (parametric subproblems), resuming from the previous basis.
///
/// With `c >= 0` it starts on the dual form, whose feasible region neither
/// change can shrink: a new row is a new dual column priced against the
/// current basis and a new rhs is a new dual objective. If that route ever
/// fails its certificate check the LP moves for good to the primal
/// tableau, where a new rhs keeps the basis dual feasible and the dual
/// simplex resumes from it.
/// Every outcome is checked like any other route.
pub struct IncrementalLp {
    problem: LpProblem,
    engine: Engine,
    fallbacks: usize,
}

enum Engine {
    DualForm {
        dual: LpProblem,
        layout: DualLayout,
        rev: Option<revised::Revised>,
    },
    /// `rows` counts the problem rows the tableau was built with.
    Primal { tab: Option<(tableau::Tableau, usize)> },
}

impl IncrementalLp {
    pub fn new(problem: LpProblem) -> Result<Self, LpError> {
        problem.validate()?;
        let engine = if problem.objective.iter().all(|&c| c >= 0.0) {
            let (dual, layout) = dual_problem(&problem);
            Engine::DualForm { dual, layout, rev: None }
        } else {
            Engine::Primal { tab: None }
        };
        Ok(Self { problem, engine, fallbacks: 0 })
    }

    pub fn problem(&self) -> &LpProblem {
        &self.problem
    }

    /// Solves that had to abandon a kept tableau.
    pub fn fallbacks(&self) -> usize {
        self.fallbacks
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> Result<(), LpError> {
        let n = self.problem.objective.len();
        if !rhs.is_finite() || coeffs.iter().any(|&(j, v)| j >= n || !v.is_finite()) {
            return Err(LpError::Malformed("bad row appended".into()));
        }
        if let Engine::DualForm { dual, layout, .. } = &mut self.engine {
            let p = layout.n;
            layout.pos.push(p);
            layout.n += 1;
            dual.objective.push(-rhs);
            let q = (relation == Relation::Eq).then(|| {
                layout.n += 1;
                dual.objective.push(rhs);
                p + 1
            });
            layout.neg.push(q);
            for &(j, v) in &coeffs {
                dual.rows[j].coeffs.push((p, -v));
                if let Some(q) = q {
                    dual.rows[j].coeffs.push((q, v));
                }
            }
        }
        self.problem.add_row(coeffs, relation, rhs);
        Ok(())
    }

    pub fn set_rhs(&mut self, rhs: &[f64]) -> Result<(), LpError> {
        if rhs.len() != self.problem.rows.len() || rhs.iter().any(|b| !b.is_finite()) {
            return Err(LpError::Malformed("rhs does not match the rows".into()));
        }
        for (row, &b) in self.problem.rows.iter_mut().zip(rhs) {
            row.rhs = b;
        }
        if let Engine::DualForm { dual, layout, rev } = &mut self.engine {
            for (r, &b) in rhs.iter().enumerate() {
                dual.objective[layout.pos[r]] = -b;
                if let Some(q) = layout.neg[r] {
                    dual.objective[q] = b;
                }
            }
            if let Some(rev) = rev.as_mut() {
                // rows appended since the last solve are priced on resume
                let have = rev.column_count();
                rev.set_costs(&dual.objective[..have]);
            }
        }
        Ok(())
    }

    pub fn solve(&mut self) -> Result<LpOutcome, LpError> {
        if let Engine::DualForm { .. } = self.engine {
            let resumed = matches!(&self.engine, Engine::DualForm { rev: Some(_), .. });
            match self.dual_form_outcome() {
                Ok(o) => return Ok(o),
                Err(LpError::TooLarge { .. }) if !resumed => return solve_auto(&self.problem),
                Err(_) => {}
            }
            if resumed {
                self.fallbacks += 1;
            }
            self.engine = Engine::Primal { tab: None };
        }
        match self.primal_outcome() {
            Ok(o) => Ok(o),
            Err(LpError::TooLarge { .. }) => Err(LpError::TooLarge { rows: self.problem.rows.len(), cols: self.problem.objective.len() }),
            Err(_) => {
                if matches!(&self.engine, Engine::Primal { tab: Some(_) }) {
                    self.fallbacks += 1;
                }
                self.engine = Engine::Primal { tab: None };
                self.primal_outcome()
            }
        }
    }

    fn dual_form_outcome(&mut self) -> Result<LpOutcome, LpError> {
        let Engine::DualForm { dual, layout, rev } = &mut self.engine else {
            unreachable!("dual-form engine");
        };
        let outcome = match rev.as_mut() {
            Some(r) => {
                let have = r.column_count();
                let mut fresh: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
                for (i, row) in self.problem.rows.iter().enumerate().filter(|&(i, _)| layout.pos[i] >= have) {
                    fresh.push((row.coeffs.clone(), -row.rhs));
                    if layout.neg[i].is_some() {
                        fresh.push((row.coeffs.iter().map(|&(j, v)| (j, -v)).collect(), row.rhs));
                    }
                }
                r.append(fresh);
                r.solve()
            }
            None => revised::Revised::from_dual(dual).and_then(|mut r| {
                let o = r.solve();
                *rev = Some(r);
                o
            }),
        };
        let outcome = outcome.inspect_err(|_| *rev = None)?;
        let outcome = match outcome {
            LpOutcome::Optimal(s) => LpOutcome::Optimal(LpSolution {
                primal: merge(layout, &s.primal),
                dual: s.dual,
                objective: -s.objective,
            }),
            LpOutcome::Unbounded { ray } => LpOutcome::Unbounded { ray: normalized(merge(layout, &ray)) },
            other => other,
        };
        let primal = from_dual_form(&self.problem, outcome).ok_or_else(|| LpError::Certificate("dual form infeasible".into()));
        let checked = primal.and_then(|o| checked(&self.problem, o));
        if checked.is_err() {
            *rev = None;
        }
        checked
    }

    fn primal_outcome(&mut self) -> Result<LpOutcome, LpError> {
        let Engine::Primal { tab } = &mut self.engine else {
            unreachable!("primal engine");
        };
        let rows = self.problem.rows.len();
        let rhs: Vec<f64> = self.problem.rows.iter().map(|r| r.rhs).collect();
        let warm = match tab.as_mut() {
            Some((t, built)) if *built == rows => t.set_rhs(&rhs).then(|| t.dual_simplex(&self.problem)),
            _ => None,
        };
        let outcome = match warm {
            Some(o) => o,
            None => {
                let mut t = tableau::Tableau::build(&self.problem)?;
                let o = t.optimize(&self.problem);
                *tab = Some((t, rows));
                o
            }
        };
        let checked = outcome.and_then(|o| checked(&self.problem, o));
        if checked.is_err() {
            *tab = None;
        }
        checked
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(c: &[f64], rows: &[(&[f64], Relation, f64)]) -> LpProblem {
        let mut p = LpProblem::new(c.to_vec());
        for (a, rel, b) in rows {
            let coeffs = a.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect();
            p.add_row(coeffs, *rel, *b);
        }
        p
    }

    #[test]
    fn simple_optimum() {
        let p = lp(&[1.0, 1.0], &[(&[1.0, 1.0], Relation::Ge, 1.0)]);
        let out = solve(&p).unwrap();
        assert!((out.optimal().unwrap().objective - 1.0).abs() < 1e-12);
        let out = solve_auto(&p).unwrap();
        assert!((out.optimal().unwrap().objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn textbook_infeasible() {
        let p = lp(&[0.0], &[(&[1.0], Relation::Ge, 1.0), (&[-1.0], Relation::Ge, 0.0)]);
        match solve(&p).unwrap() {
            LpOutcome::Infeasible { farkas } => {
                assert!((farkas[0] - farkas[1]).abs() < 1e-12);
                assert!(farkas[0] > 0.0);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn unbounded_ray_is_e1() {
        let p = lp(&[-1.0, 0.0], &[(&[0.0, 1.0], Relation::Ge, 0.0)]);
        match solve(&p).unwrap() {
            LpOutcome::Unbounded { ray } => assert_eq!(ray, vec![1.0, 0.0]),
            other => panic!("expected unbounded, got {other:?}"),
        }
    }

    #[test]
    fn dual_form_one_dimensional() {
        let p = lp(&[1.0], &[(&[1.0], Relation::Ge, 3.0)]);
        let out = solve_dual_form(&p).unwrap();
        let s = out.optimal().unwrap();
        assert!((s.objective - 3.0).abs() < 1e-12);
        assert!((s.primal[0] - 1.0).abs() < 1e-12);
        assert!((s.dual[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn dual_form_of_infeasible_primal_is_unbounded() {
        let p = lp(&[1.0], &[(&[1.0], Relation::Ge, 1.0), (&[-1.0], Relation::Ge, 0.0)]);
        match solve_dual_form(&p).unwrap() {
            LpOutcome::Unbounded { ray } => {
                check::check_farkas(&p, &ray).unwrap();
            }
            other => panic!("expected unbounded dual, got {other:?}"),
        }
        assert_eq!(solve_auto(&p).unwrap().status(), LpStatus::Infeasible);
    }

    #[test]
    fn equality_rows_and_negative_rhs() {
        // min x0 + 2 x1 s.t. x0 + x1 = 1, x0 - x1 >= -0.5  -> x0 = 1, x1 = 0
        let p = lp(&[1.0, 2.0], &[(&[1.0, 1.0], Relation::Eq, 1.0), (&[1.0, -1.0], Relation::Ge, -0.5)]);
        let s = solve(&p).unwrap();
        assert!((s.optimal().unwrap().objective - 1.0).abs() < 1e-12);
        // min -x0 with same rows -> still x0 = 1
        let p2 = lp(&[-1.0, 0.0], &[(&[1.0, 1.0], Relation::Eq, 1.0), (&[1.0, -1.0], Relation::Ge, -0.5)]);
        assert!((solve(&p2).unwrap().optimal().unwrap().objective + 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_row_set_and_zero_row() {
        let p = lp(&[2.0, 0.0], &[]);
        assert_eq!(solve(&p).unwrap().optimal().unwrap().objective, 0.0);
        let bad = lp(&[1.0], &[(&[0.0], Relation::Ge, 1.0)]);
        assert_eq!(solve(&bad).unwrap().status(), LpStatus::Infeasible);
    }

    #[test]
    fn malformed_rejected() {
        let mut p = LpProblem::new(vec![1.0]);
        p.add_row(vec![(3, 1.0)], Relation::Ge, 0.0);
        assert!(matches!(solve(&p), Err(LpError::Malformed(_))));
        assert!(matches!(solve(&LpProblem::new(vec![])), Err(LpError::Malformed(_))));
    }

    #[test]
    fn text_dump_has_one_line_per_row() {
        let p = lp(&[1.0, 1.0], &[(&[1.0, 1.0], Relation::Ge, 1.0), (&[1.0, 0.0], Relation::Eq, 0.5)]);
        let text = p.to_lp_text();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(2).unwrap().contains("= 5e-1"));
    }

    #[test]
    fn incremental_rows_match_cold_solves() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.random_range(2..8);
            let c: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
            let mut base = LpProblem::new(c);
            base.add_row((0..n).map(|j| (j, 1.0)).collect(), Relation::Eq, 1.0);
            let mut inc = IncrementalLp::new(base.clone()).unwrap();
            for _ in 0..12 {
                let coeffs = (0..n).map(|j| (j, rng.random_range(-2.0..2.0))).collect::<Vec<_>>();
                let rhs = rng.random_range(-1.0..1.0);
                base.add_row(coeffs.clone(), Relation::Ge, rhs);
                inc.add_row(coeffs, Relation::Ge, rhs).unwrap();
                let cold = solve(&base).unwrap();
                let warm = inc.solve().unwrap();
                assert_eq!(inc.fallbacks(), 0);
                assert_eq!(cold.status(), warm.status());
                if let (Some(a), Some(b)) = (cold.optimal(), warm.optimal()) {
                    assert!((a.objective - b.objective).abs() <= 1e-8 * (1.0 + a.objective.abs()));
                }
            }
        }
    }

    #[test]
    fn rhs_updates_match_cold_solves() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let n = rng.random_range(2..6);
            let mut base = LpProblem::new((0..n).map(|_| rng.random_range(0.0..2.0)).collect());
            for _ in 0..rng.random_range(1..10) {
                let coeffs = (0..n).map(|j| (j, rng.random_range(-2.0..2.0))).collect();
                base.add_row(coeffs, Relation::Ge, 0.0);
            }
            base.add_row((0..n).map(|j| (j, 1.0)).collect(), Relation::Eq, 1.0);
            let mut inc = IncrementalLp::new(base.clone()).unwrap();
            for _ in 0..10 {
                let rhs: Vec<f64> = (0..base.rows.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
                for (row, &b) in base.rows.iter_mut().zip(&rhs) {
                    row.rhs = b;
                }
                inc.set_rhs(&rhs).unwrap();
                let cold = solve(&base).unwrap();
                let warm = inc.solve().unwrap();
                assert_eq!(inc.fallbacks(), 0);
                assert_eq!(cold.status(), warm.status());
                if let (Some(a), Some(b)) = (cold.optimal(), warm.optimal()) {
                    assert!((a.objective - b.objective).abs() <= 1e-8 * (1.0 + a.objective.abs()));
                }
            }
        }
    }

    #[test]
    fn primal_rhs_updates_match_cold_solves() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut infeasible = 0;
        for _ in 0..20 {
            let n = rng.random_range(2..6);
            // a negative cost keeps it off the dual form
            let mut base = LpProblem::new((0..n).map(|j| if j == 0 { -1.0 } else { rng.random_range(-1.0..2.0) }).collect());
            for _ in 0..rng.random_range(1..10) {
                let coeffs = (0..n).map(|j| (j, rng.random_range(-2.0..2.0))).collect();
                base.add_row(coeffs, Relation::Ge, 0.0);
            }
            base.add_row((0..n).map(|j| (j, 1.0)).collect(), Relation::Eq, 1.0);
            let mut inc = IncrementalLp::new(base.clone()).unwrap();
            for _ in 0..10 {
                let mut rhs: Vec<f64> = (0..base.rows.len()).map(|_| rng.random_range(-1.0..0.5)).collect();
                *rhs.last_mut().unwrap() = rng.random_range(0.5..2.0);
                for (row, &b) in base.rows.iter_mut().zip(&rhs) {
                    row.rhs = b;
                }
                inc.set_rhs(&rhs).unwrap();
                let cold = solve(&base).unwrap();
                let warm = inc.solve().unwrap();
                assert_eq!(inc.fallbacks(), 0);
                assert_eq!(cold.status(), warm.status());
                infeasible += usize::from(matches!(warm, LpOutcome::Infeasible { .. }));
                if let (Some(a), Some(b)) = (cold.optimal(), warm.optimal()) {
                    assert!((a.objective - b.objective).abs() <= 1e-8 * (1.0 + a.objective.abs()));
                }
            }
        }
        assert!(infeasible > 0);
    }
}
