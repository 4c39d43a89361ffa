//! Revised primal simplex for `min f.y  s.t.  G y <= h,  y >= 0` with
//! `h >= 0`, the shape of every dual form whose primal costs are
//! nonnegative. The slack basis is feasible so there is no phase one. The
//! basis inverse is kept explicitly, updated per pivot and rebuilt from the
//! basic columns when the basic values drift.

use super::{LpError, LpOutcome, LpProblem, LpSolution};

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
/// Reduced costs are primal row slacks in the dual form; once the basis is
/// fresh they are driven down to this.
const FINAL_OPT_TOL: f64 = 1e-13;
const HARRIS_TOL: f64 = 1e-9;
const DRIFT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 400;
const REFINE_ROUNDS: usize = 2;
const MAX_INVERSE_ENTRIES: usize = 1 << 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Var {
    Col(usize),
    Slack(usize),
}

pub(crate) struct Revised {
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    f: Vec<f64>,
    h: Vec<f64>,
    basis: Vec<Var>,
    col_pos: Vec<Option<usize>>,
    slack_pos: Vec<Option<usize>>,
    /// Row `p` belongs to basis position `p`.
    binv: Vec<f64>,
    xb: Vec<f64>,
    d_col: Vec<f64>,
    d_slack: Vec<f64>,
    since_refactor: usize,
    iterations: usize,
}

impl Revised {
    /// From a dual-form problem: rows `-G_j . y >= -h_j`, objective `f`.
    pub(crate) fn from_dual(dual: &LpProblem) -> Result<Self, LpError> {
        let m = dual.rows.len();
        if m.saturating_mul(m) > MAX_INVERSE_ENTRIES {
            return Err(LpError::TooLarge { rows: m, cols: dual.objective.len() + m });
        }
        let mut cols = vec![Vec::new(); dual.objective.len()];
        for (j, row) in dual.rows.iter().enumerate() {
            for &(i, v) in &row.coeffs {
                cols[i].push((j, -v));
            }
        }
        let h: Vec<f64> = dual.rows.iter().map(|r| (-r.rhs).max(0.0)).collect();
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        let n = cols.len();
        Ok(Self {
            m,
            cols,
            f: dual.objective.clone(),
            xb: h.clone(),
            h,
            basis: (0..m).map(Var::Slack).collect(),
            col_pos: vec![None; n],
            slack_pos: (0..m).map(Some).collect(),
            binv,
            d_col: vec![0.0; n],
            d_slack: vec![0.0; m],
            since_refactor: 0,
            iterations: 0,
        })
    }

    pub(crate) fn column_count(&self) -> usize {
        self.cols.len()
    }

    /// Appends nonbasic columns given as `(entries over rows, cost)`.
    pub(crate) fn append(&mut self, cols: Vec<(Vec<(usize, f64)>, f64)>) {
        for (col, f) in cols {
            self.cols.push(col);
            self.f.push(f);
            self.col_pos.push(None);
            self.d_col.push(0.0);
        }
    }

    pub(crate) fn set_costs(&mut self, f: &[f64]) {
        self.f[..f.len()].copy_from_slice(f);
    }

    fn ftran(&self, v: Var) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        let mut add = |i: usize, a: f64| {
            for (p, o) in out.iter_mut().enumerate() {
                *o += a * self.binv[p * m + i];
            }
        };
        match v {
            Var::Col(j) => self.cols[j].iter().for_each(|&(i, a)| add(i, a)),
            Var::Slack(i) => add(i, 1.0),
        }
        out
    }

    fn cost(&self, v: Var) -> f64 {
        match v {
            Var::Col(j) => self.f[j],
            Var::Slack(_) => 0.0,
        }
    }

    /// `a_v . u` for a row-space vector `u`.
    fn dot(&self, v: Var, u: &[f64]) -> f64 {
        match v {
            Var::Col(j) => self.cols[j].iter().map(|&(i, a)| u[i] * a).sum(),
            Var::Slack(i) => u[i],
        }
    }

    /// `w B^{-1}` for a vector over basis positions.
    fn btran(&self, w: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        for (p, &c) in w.iter().enumerate() {
            if c != 0.0 {
                out.iter_mut().zip(&self.binv[p * m..(p + 1) * m]).for_each(|(a, b)| *a += c * b);
            }
        }
        out
    }

    /// Simplex multipliers `pi = f_B B^{-1}`, refined against the basic
    /// columns, and every reduced cost.
    fn price(&mut self) {
        let m = self.m;
        let fb: Vec<f64> = self.basis.iter().map(|&v| self.cost(v)).collect();
        let mut pi = self.btran(&fb);
        for _ in 0..REFINE_ROUNDS {
            let r: Vec<f64> = self.basis.iter().zip(&fb).map(|(&v, c)| c - self.dot(v, &pi)).collect();
            let d = self.btran(&r);
            pi.iter_mut().zip(d).for_each(|(a, b)| *a += b);
        }
        for (j, col) in self.cols.iter().enumerate() {
            self.d_col[j] = if self.col_pos[j].is_some() { 0.0 } else { self.f[j] - col.iter().map(|&(i, a)| pi[i] * a).sum::<f64>() };
        }
        for i in 0..m {
            self.d_slack[i] = if self.slack_pos[i].is_some() { 0.0 } else { -pi[i] };
        }
    }

    /// `B^{-1} h`, refined against the basic columns.
    fn fresh_xb(&self) -> Vec<f64> {
        let m = self.m;
        let solve = |u: &[f64]| -> Vec<f64> { (0..m).map(|p| self.binv[p * m..(p + 1) * m].iter().zip(u).map(|(a, b)| a * b).sum()).collect() };
        let mut xb = solve(&self.h);
        for _ in 0..REFINE_ROUNDS {
            let mut r = self.h.clone();
            for (&v, &x) in self.basis.iter().zip(&xb) {
                match v {
                    Var::Col(j) => self.cols[j].iter().for_each(|&(i, a)| r[i] -= a * x),
                    Var::Slack(i) => r[i] -= x,
                }
            }
            xb.iter_mut().zip(solve(&r)).for_each(|(a, b)| *a += b);
        }
        xb
    }

    /// Rebuilds the inverse. With `T` the rows whose slack is basic and `S`
    /// the basic columns, `B = [[K, 0], [G_S[T], I]]` after reordering, so
    /// only the square block `K = G_S[rows not in T]` is inverted.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let s: Vec<(usize, usize)> = (0..m)
            .filter_map(|p| match self.basis[p] {
                Var::Col(j) => Some((p, j)),
                Var::Slack(_) => None,
            })
            .collect();
        let r1: Vec<usize> = (0..m).filter(|&i| self.slack_pos[i].is_none()).collect();
        let k = s.len();
        debug_assert_eq!(k, r1.len());
        let mut where_r1 = vec![usize::MAX; m];
        for (a, &i) in r1.iter().enumerate() {
            where_r1[i] = a;
        }
        let mut kmat = vec![0.0; k * k];
        for (b, &(_, j)) in s.iter().enumerate() {
            for &(i, v) in &self.cols[j] {
                if where_r1[i] != usize::MAX {
                    kmat[where_r1[i] * k + b] += v;
                }
            }
        }
        let kinv = invert(kmat, k).ok_or_else(|| LpError::Certificate("singular basis".into()))?;
        self.binv.iter_mut().for_each(|v| *v = 0.0);
        for (b, &(p, _)) in s.iter().enumerate() {
            for (a, &i) in r1.iter().enumerate() {
                self.binv[p * m + i] = kinv[b * k + a];
            }
        }
        for i in 0..m {
            if let Some(p) = self.slack_pos[i] {
                self.binv[p * m + i] = 1.0;
            }
        }
        for (b, &(_, j)) in s.iter().enumerate() {
            for &(i, g) in &self.cols[j] {
                let Some(p) = self.slack_pos[i] else { continue };
                for (a, &ii) in r1.iter().enumerate() {
                    self.binv[p * m + ii] -= g * kinv[b * k + a];
                }
            }
        }
        self.xb = self.fresh_xb();
        self.since_refactor = 0;
        Ok(())
    }

    fn entering(&self, bland: bool, tol: f64) -> Option<Var> {
        let cand = self
            .d_col
            .iter()
            .enumerate()
            .filter(|&(j, &d)| d < -tol && self.col_pos[j].is_none())
            .map(|(j, &d)| (Var::Col(j), d))
            .chain(self.d_slack.iter().enumerate().filter(|&(i, &d)| d < -tol && self.slack_pos[i].is_none()).map(|(i, &d)| (Var::Slack(i), d)));
        if bland {
            cand.map(|c| c.0).next()
        } else {
            cand.min_by(|a, b| a.1.total_cmp(&b.1)).map(|c| c.0)
        }
    }

    fn leaving(&self, alpha: &[f64], bland: bool) -> Option<usize> {
        let rows = (0..self.m).filter(|&p| alpha[p] > PIVOT_TOL);
        if bland {
            let key = |p: usize| self.xb[p].max(0.0) / alpha[p];
            let best = rows.clone().map(key).fold(f64::INFINITY, f64::min);
            return rows.filter(|&p| key(p) <= best).min_by_key(|&p| var_order(self.basis[p]));
        }
        let theta = rows.clone().map(|p| (self.xb[p].max(0.0) + HARRIS_TOL) / alpha[p]).fold(f64::INFINITY, f64::min);
        rows.filter(|&p| self.xb[p].max(0.0) / alpha[p] <= theta).max_by(|&a, &b| alpha[a].total_cmp(&alpha[b]))
    }

    fn pivot(&mut self, q: Var, r: usize, alpha: &[f64]) {
        let m = self.m;
        let step = self.xb[r].max(0.0) / alpha[r];
        for p in 0..m {
            self.xb[p] -= step * alpha[p];
        }
        self.xb[r] = step;

        let rho: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
        let dq = match q {
            Var::Col(j) => self.d_col[j],
            Var::Slack(i) => self.d_slack[i],
        };
        let ratio = dq / alpha[r];
        for (j, col) in self.cols.iter().enumerate() {
            if self.col_pos[j].is_none() {
                let a: f64 = col.iter().map(|&(i, v)| rho[i] * v).sum();
                self.d_col[j] -= ratio * a;
            }
        }
        for i in 0..m {
            if self.slack_pos[i].is_none() {
                self.d_slack[i] -= ratio * rho[i];
            }
        }

        let prow: Vec<f64> = rho.iter().map(|v| v / alpha[r]).collect();
        let nz: Vec<usize> = (0..m).filter(|&i| prow[i] != 0.0).collect();
        for p in 0..m {
            let a = alpha[p];
            if p != r && a != 0.0 {
                let row = &mut self.binv[p * m..(p + 1) * m];
                for &i in &nz {
                    row[i] -= a * prow[i];
                }
            }
        }
        self.binv[r * m..(r + 1) * m].copy_from_slice(&prow);

        let out = self.basis[r];
        match out {
            Var::Col(j) => {
                self.col_pos[j] = None;
                self.d_col[j] = -ratio;
            }
            Var::Slack(i) => {
                self.slack_pos[i] = None;
                self.d_slack[i] = -ratio;
            }
        }
        match q {
            Var::Col(j) => {
                self.col_pos[j] = Some(r);
                self.d_col[j] = 0.0;
            }
            Var::Slack(i) => {
                self.slack_pos[i] = Some(r);
                self.d_slack[i] = 0.0;
            }
        }
        self.basis[r] = q;
        self.since_refactor += 1;
        self.iterations += 1;
    }

    /// Basic values drifted from `B^{-1} h`.
    fn drifted(&self) -> bool {
        let fresh = self.fresh_xb();
        let scale = 1.0 + self.h.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        fresh.iter().zip(&self.xb).any(|(a, b)| (a - b).abs() > DRIFT_TOL * scale) || fresh.iter().any(|&v| v < -DRIFT_TOL * scale)
    }

    /// Runs to optimality or an unbounded ray, from the current basis.
    pub(crate) fn solve(&mut self) -> Result<LpOutcome, LpError> {
        let size = self.m + self.cols.len();
        let (bland_after, cap) = (3 * size, 10 * size);
        self.iterations = 0;
        if self.since_refactor > 0 && self.drifted() {
            self.refactor()?;
        }
        self.price();
        let mut tol = OPT_TOL;
        loop {
            if self.iterations >= cap {
                return Err(LpError::Stall { iterations: self.iterations });
            }
            let bland = self.iterations >= bland_after;
            let Some(q) = self.entering(bland, tol) else {
                if tol == FINAL_OPT_TOL && self.since_refactor == 0 {
                    return Ok(self.optimal());
                }
                if self.since_refactor > 0 {
                    self.refactor()?;
                    self.price();
                }
                tol = FINAL_OPT_TOL;
                continue;
            };
            let alpha = self.ftran(q);
            let Some(r) = self.leaving(&alpha, bland) else {
                if self.since_refactor > 0 {
                    self.refactor()?;
                    self.price();
                    continue;
                }
                return Ok(self.ray(q, &alpha));
            };
            self.pivot(q, r, &alpha);
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
                self.price();
            }
        }
    }

    fn optimal(&self) -> LpOutcome {
        let mut y = vec![0.0; self.cols.len()];
        for (p, &v) in self.basis.iter().enumerate() {
            if let Var::Col(j) = v {
                y[j] = self.xb[p].max(0.0);
            }
        }
        let objective = y.iter().zip(&self.f).map(|(a, b)| a * b).sum();
        // x_i = -pi_i, the reduced cost of slack i
        let x = (0..self.m).map(|i| if self.slack_pos[i].is_some() { 0.0 } else { self.d_slack[i].max(0.0) }).collect();
        LpOutcome::Optimal(LpSolution { primal: y, dual: x, objective })
    }

    fn ray(&self, q: Var, alpha: &[f64]) -> LpOutcome {
        let mut ray = vec![0.0; self.cols.len()];
        if let Var::Col(j) = q {
            ray[j] = 1.0;
        }
        for (p, &v) in self.basis.iter().enumerate() {
            if let Var::Col(j) = v {
                ray[j] = (-alpha[p]).max(0.0);
            }
        }
        LpOutcome::Unbounded { ray }
    }

    #[cfg(test)]
    fn basis_inverse_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (p, &v) in self.basis.iter().enumerate() {
            let col = self.ftran(v);
            for (pp, c) in col.iter().enumerate() {
                let want = if pp == p { 1.0 } else { 0.0 };
                worst = worst.max((c - want).abs());
            }
        }
        worst
    }
}

fn var_order(v: Var) -> (usize, usize) {
    match v {
        Var::Col(j) => (0, j),
        Var::Slack(i) => (1, i),
    }
}

/// Gauss-Jordan inverse with partial pivoting; `None` when singular.
fn invert(mut a: Vec<f64>, k: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; k * k];
    for i in 0..k {
        inv[i * k + i] = 1.0;
    }
    for c in 0..k {
        let p = (c..k).max_by(|&x, &y| a[x * k + c].abs().total_cmp(&a[y * k + c].abs()))?;
        let pv = a[p * k + c];
        if pv.abs() < 1e-12 {
            return None;
        }
        if p != c {
            for j in 0..k {
                a.swap(p * k + j, c * k + j);
                inv.swap(p * k + j, c * k + j);
            }
        }
        let (arow, irow): (Vec<f64>, Vec<f64>) = ((0..k).map(|j| a[c * k + j] / pv).collect(), (0..k).map(|j| inv[c * k + j] / pv).collect());
        let anz: Vec<usize> = (c..k).filter(|&j| arow[j] != 0.0).collect();
        let inz: Vec<usize> = (0..k).filter(|&j| irow[j] != 0.0).collect();
        for r in 0..k {
            let f = a[r * k + c];
            if r != c && f != 0.0 {
                for &j in &anz {
                    a[r * k + j] -= f * arow[j];
                }
                for &j in &inz {
                    inv[r * k + j] -= f * irow[j];
                }
            }
        }
        a[c * k..(c + 1) * k].copy_from_slice(&arow);
        inv[c * k..(c + 1) * k].copy_from_slice(&irow);
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::Relation;

    #[test]
    fn inverse_survives_refactor() {
        // min -y0 - y1  s.t.  y0 + 2 y1 <= 4,  3 y0 + y1 <= 6
        let mut dual = LpProblem::new(vec![-1.0, -1.0]);
        dual.add_row(vec![(0, -1.0), (1, -2.0)], Relation::Ge, -4.0);
        dual.add_row(vec![(0, -3.0), (1, -1.0)], Relation::Ge, -6.0);
        let mut r = Revised::from_dual(&dual).unwrap();
        let LpOutcome::Optimal(s) = r.solve().unwrap() else { panic!() };
        assert!((s.objective + 2.8).abs() < 1e-12);
        assert!((s.primal[0] - 1.6).abs() < 1e-12 && (s.primal[1] - 1.2).abs() < 1e-12);
        assert!((s.dual[0] - 0.4).abs() < 1e-12 && (s.dual[1] - 0.2).abs() < 1e-12);
        let before = r.basis_inverse_error();
        r.refactor().unwrap();
        assert!(before < 1e-12 && r.basis_inverse_error() < 1e-12);
    }
}
