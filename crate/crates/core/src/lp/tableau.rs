//! Dense two-phase primal simplex on a full tableau.
//!
//! Every row owns an identity column (a slack when the row can start basic,
//! otherwise an artificial), so `B^{-1}` and therefore the row multipliers can
//! be read off the reduced costs of those columns at any point.

use rayon::prelude::*;

use super::{LpError, LpOutcome, LpProblem, LpSolution, Relation};

pub(crate) const PIVOT_TOL: f64 = 1e-9;
pub(crate) const OPT_TOL: f64 = 1e-9;
pub(crate) const FEAS_TOL: f64 = 1e-7;
/// Upper bound on dense tableau entries (~2 GiB of f64).
pub(crate) const MAX_TABLEAU_ENTRIES: usize = 1 << 28;
const DROP_TOL: f64 = 1e-14;
/// Bound slack the Harris ratio test may spend to pick a larger pivot.
const HARRIS_TOL: f64 = 1e-9;
/// Entering candidates examined per iteration.
const CANDIDATES: usize = 8;
/// Pivot-to-column-max ratio accepted without looking further.
const GOOD_PIVOT: f64 = 1e-4;
const PAR_THRESHOLD: usize = 1 << 16;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Phase {
    One,
    Two,
}

pub(crate) struct Tableau {
    m: usize,
    n_struct: usize,
    ncols: usize,
    width: usize,
    t: Vec<f64>,
    /// Phase-2 costs of the structural columns.
    cost: Vec<f64>,
    /// Phase-2 reduced costs; the last entry holds `-objective`.
    d2: Vec<f64>,
    /// Phase-1 reduced costs for the sum of artificials.
    d1: Vec<f64>,
    basis: Vec<usize>,
    artificial: Vec<bool>,
    /// Identity column owned by each row.
    id_col: Vec<usize>,
    /// Row sign flip applied so that the rhs is nonnegative.
    sigma: Vec<f64>,
    /// Row equilibration factor.
    scale: Vec<f64>,
    iterations: usize,
    bland_after: usize,
    cap: usize,
}

impl Tableau {
    pub(crate) fn build(problem: &LpProblem) -> Result<Self, LpError> {
        let m = problem.rows.len();
        let n = problem.objective.len();
        let n_slack = problem.rows.iter().filter(|r| r.relation == Relation::Ge).count();

        let mut scale = Vec::with_capacity(m);
        let mut sigma = Vec::with_capacity(m);
        let mut needs_art = Vec::with_capacity(m);
        for row in &problem.rows {
            let amax = row.coeffs.iter().fold(0.0f64, |a, &(_, v)| a.max(v.abs()));
            let s = if amax > 0.0 { 1.0 / amax } else { 1.0 };
            let b = row.rhs * s;
            let (sg, art) = match row.relation {
                Relation::Ge if b <= 0.0 => (-1.0, false),
                Relation::Ge => (1.0, true),
                Relation::Eq => (if b >= 0.0 { 1.0 } else { -1.0 }, true),
            };
            scale.push(s);
            sigma.push(sg);
            needs_art.push(art);
        }
        let n_art = needs_art.iter().filter(|&&a| a).count();
        let ncols = n + n_slack + n_art;
        let width = ncols + 1;
        if m.saturating_mul(width) > MAX_TABLEAU_ENTRIES {
            return Err(LpError::TooLarge { rows: m, cols: ncols });
        }

        let mut t = vec![0.0; m * width];
        let mut artificial = vec![false; ncols];
        let mut id_col = vec![0; m];
        let mut basis = vec![0; m];
        let mut next_slack = n;
        let mut next_art = n + n_slack;
        for (i, row) in problem.rows.iter().enumerate() {
            let base = i * width;
            let f = sigma[i] * scale[i];
            for &(j, v) in &row.coeffs {
                t[base + j] += f * v;
            }
            t[base + ncols] = f * row.rhs;
            if row.relation == Relation::Ge {
                // slack in scaled units: coefficient -sigma
                t[base + next_slack] = -sigma[i];
                if !needs_art[i] {
                    id_col[i] = next_slack;
                }
                next_slack += 1;
            }
            if needs_art[i] {
                t[base + next_art] = 1.0;
                artificial[next_art] = true;
                id_col[i] = next_art;
                next_art += 1;
            }
            basis[i] = id_col[i];
        }

        let mut d2 = vec![0.0; width];
        d2[..n].copy_from_slice(&problem.objective);
        let mut d1 = vec![0.0; width];
        for (j, a) in artificial.iter().enumerate() {
            if *a {
                d1[j] = 1.0;
            }
        }
        for i in 0..m {
            if artificial[basis[i]] {
                let row = &t[i * width..(i + 1) * width];
                for (d, v) in d1.iter_mut().zip(row) {
                    *d -= v;
                }
            }
        }

        let size = m + ncols;
        Ok(Self {
            m,
            n_struct: n,
            ncols,
            width,
            t,
            cost: problem.objective.clone(),
            d2,
            d1,
            basis,
            artificial,
            id_col,
            sigma,
            scale,
            iterations: 0,
            bland_after: 3 * size,
            cap: 10 * size,
        })
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.t[i * self.width + self.ncols]
    }

    fn pivot(&mut self, r: usize, q: usize, phase1_live: bool) {
        let w = self.width;
        let piv = self.t[r * w + q];
        let mut prow: Vec<f64> = self.t[r * w..(r + 1) * w].iter().map(|v| v / piv).collect();
        for v in prow.iter_mut() {
            if v.abs() < DROP_TOL {
                *v = 0.0;
            }
        }
        prow[q] = 1.0;
        let nz: Vec<usize> = (0..w).filter(|&j| prow[j] != 0.0).collect();
        self.t[r * w..(r + 1) * w].copy_from_slice(&prow);

        let update = |row: &mut [f64]| {
            let f = row[q];
            if f != 0.0 {
                for &j in &nz {
                    row[j] -= f * prow[j];
                }
                row[q] = 0.0;
            }
        };
        let work = self.m * nz.len();
        if work > PAR_THRESHOLD {
            self.t
                .par_chunks_mut(w)
                .enumerate()
                .filter(|(i, _)| *i != r)
                .for_each(|(_, row)| update(row));
        } else {
            for (i, row) in self.t.chunks_mut(w).enumerate() {
                if i != r {
                    update(row);
                }
            }
        }
        update(&mut self.d2);
        if phase1_live {
            update(&mut self.d1);
        }
        self.basis[r] = q;
        self.iterations += 1;
    }

    /// Improving columns, most negative reduced cost first; only the first
    /// one under Bland's rule.
    fn entering(&self, phase: Phase) -> Vec<usize> {
        let d = match phase {
            Phase::One => &self.d1,
            Phase::Two => &self.d2,
        };
        let bland = self.iterations >= self.bland_after;
        let mut best: Vec<(usize, f64)> = Vec::with_capacity(CANDIDATES + 1);
        for j in 0..self.ncols {
            if self.artificial[j] {
                continue;
            }
            let dj = d[j];
            if dj < -OPT_TOL {
                if bland {
                    return vec![j];
                }
                if best.len() < CANDIDATES || dj < best[best.len() - 1].1 {
                    let at = best.partition_point(|&(_, b)| b <= dj);
                    best.insert(at, (j, dj));
                    best.truncate(CANDIDATES);
                }
            }
        }
        best.into_iter().map(|(j, _)| j).collect()
    }

    fn leaving(&self, q: usize, phase: Phase) -> Option<usize> {
        if self.iterations >= self.bland_after {
            return self.leaving_bland(q, phase);
        }
        // Harris: the largest step any row allows with a little slack, then
        // the biggest pivot among rows blocking within that step.
        let mut theta = f64::INFINITY;
        for i in 0..self.m {
            let a = self.at(i, q);
            if a > PIVOT_TOL {
                theta = theta.min((self.rhs(i).max(0.0) + HARRIS_TOL) / a);
            }
        }
        if theta.is_infinite() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let a = self.at(i, q);
            if a <= PIVOT_TOL || self.rhs(i).max(0.0) / a > theta {
                continue;
            }
            let better = match best {
                None => true,
                Some((bi, ba)) => {
                    if phase == Phase::One && self.artificial[self.basis[i]] != self.artificial[self.basis[bi]] {
                        self.artificial[self.basis[i]]
                    } else {
                        a > ba
                    }
                }
            };
            if better {
                best = Some((i, a));
            }
        }
        best.map(|(i, _)| i)
    }

    fn leaving_bland(&self, q: usize, phase: Phase) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let a = self.at(i, q);
            if a <= PIVOT_TOL {
                continue;
            }
            let ratio = self.rhs(i).max(0.0) / a;
            let better = match best {
                None => true,
                Some((bi, br)) => {
                    let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br);
                    if !tie {
                        ratio < br
                    } else if phase == Phase::One && self.artificial[self.basis[i]] != self.artificial[self.basis[bi]] {
                        self.artificial[self.basis[i]]
                    } else {
                        self.basis[i] < self.basis[bi]
                    }
                }
            };
            if better {
                best = Some((i, ratio));
            }
        }
        best.map(|(i, _)| i)
    }

    /// Row multipliers in the original row space, read from identity columns.
    fn multipliers(&self, phase: Phase) -> Vec<f64> {
        (0..self.m)
            .map(|i| {
                let c = self.id_col[i];
                let (cost, d) = match phase {
                    Phase::One => (if self.artificial[c] { 1.0 } else { 0.0 }, self.d1[c]),
                    Phase::Two => (0.0, self.d2[c]),
                };
                self.sigma[i] * self.scale[i] * (cost - d)
            })
            .collect()
    }

    fn stall(&self) -> LpError {
        LpError::Stall { iterations: self.iterations }
    }

    fn run_phase(&mut self, phase: Phase) -> Result<Option<usize>, LpError> {
        loop {
            if self.iterations >= self.cap {
                return Err(self.stall());
            }
            let candidates = self.entering(phase);
            if candidates.is_empty() {
                return Ok(None);
            }
            // A pivot tiny next to its column amplifies roundoff, so look a
            // few candidates further for a well-conditioned one.
            let mut choice: Option<(usize, usize, f64)> = None;
            let mut ray = None;
            for &q in &candidates {
                let Some(r) = self.leaving(q, phase) else {
                    ray = Some(q);
                    break;
                };
                let colmax = (0..self.m).fold(0.0f64, |a, i| a.max(self.at(i, q)));
                let quality = self.at(r, q) / colmax;
                if choice.is_none_or(|(_, _, best)| quality > best) {
                    choice = Some((q, r, quality));
                }
                if quality >= GOOD_PIVOT {
                    break;
                }
            }
            if let Some(q) = ray {
                return Ok(Some(q));
            }
            let (q, r, _) = choice.expect("a candidate with a leaving row");
            self.pivot(r, q, phase == Phase::One);
        }
    }

    fn drive_out_artificials(&mut self) {
        for r in 0..self.m {
            if !self.artificial[self.basis[r]] {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.ncols {
                if self.artificial[j] {
                    continue;
                }
                let a = self.at(r, j).abs();
                if a > PIVOT_TOL && best.is_none_or(|(_, b)| a > b) {
                    best = Some((j, a));
                }
            }
            if let Some((q, _)) = best {
                self.pivot(r, q, false);
                let w = self.width;
                let rhs = &mut self.t[r * w + self.ncols];
                if *rhs < 0.0 {
                    *rhs = 0.0;
                }
            }
        }
    }
}

fn normalize_max_abs(v: &mut [f64]) {
    let m = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if m > 0.0 {
        for x in v.iter_mut() {
            *x /= m;
        }
    }
}

pub(crate) fn solve_primal(problem: &LpProblem) -> Result<(LpOutcome, usize), LpError> {
    let mut tab = Tableau::build(problem)?;
    let outcome = tab.optimize(problem)?;
    Ok((outcome, tab.iterations))
}

impl Tableau {
    /// Both phases from the starting basis.
    pub(crate) fn optimize(&mut self, problem: &LpProblem) -> Result<LpOutcome, LpError> {
        if self.artificial.iter().any(|&a| a) {
            // Phase one cannot be unbounded: its objective is bounded below by zero.
            self.run_phase(Phase::One)?;
            let infeas = -self.d1[self.ncols];
            if infeas > FEAS_TOL {
                let mut y = self.multipliers(Phase::One);
                for (yi, row) in y.iter_mut().zip(&problem.rows) {
                    if row.relation == Relation::Ge && *yi < 0.0 {
                        *yi = 0.0;
                    }
                }
                normalize_max_abs(&mut y);
                return Ok(LpOutcome::Infeasible { farkas: y });
            }
            self.drive_out_artificials();
        }
        let q = self.run_phase(Phase::Two)?;
        Ok(self.extract(problem, q))
    }

    /// Replaces the rhs (original row space) under the current basis. The
    /// basis stays dual feasible but basic values may turn negative; returns
    /// `false` when a basic artificial would leave zero, in which case the
    /// tableau has to be rebuilt.
    pub(crate) fn set_rhs(&mut self, b: &[f64]) -> bool {
        let (m, w) = (self.m, self.width);
        let coef: Vec<f64> = (0..m).map(|i| if self.artificial[self.id_col[i]] { 1.0 } else { -self.sigma[i] }).collect();
        let scaled: Vec<f64> = (0..m).map(|i| self.sigma[i] * self.scale[i] * b[i] / coef[i]).collect();
        let mut objective = 0.0;
        for r in 0..m {
            let row = &self.t[r * w..(r + 1) * w];
            let v: f64 = (0..m).map(|i| row[self.id_col[i]] * scaled[i]).sum();
            let basic = self.basis[r];
            if self.artificial[basic] && v.abs() > FEAS_TOL {
                return false;
            }
            if basic < self.n_struct {
                objective += self.cost[basic] * v;
            }
            self.t[r * w + self.ncols] = v;
        }
        self.d2[self.ncols] = -objective;
        true
    }

    /// Dual simplex from a dual feasible basis, then a primal clean-up pass
    /// for reduced costs that drifted.
    pub(crate) fn dual_simplex(&mut self, problem: &LpProblem) -> Result<LpOutcome, LpError> {
        let size = self.m + self.ncols;
        self.iterations = 0;
        self.bland_after = 3 * size;
        self.cap = 10 * size;
        loop {
            if self.iterations >= self.cap {
                return Err(self.stall());
            }
            let Some(r) = (0..self.m)
                .filter(|&i| self.rhs(i) < -FEAS_TOL)
                .min_by(|&a, &b| self.rhs(a).total_cmp(&self.rhs(b)))
            else {
                break;
            };
            // Harris on the dual side: largest pivot within a slack step.
            let eligible = |j: usize| !self.artificial[j] && self.at(r, j) < -PIVOT_TOL;
            let theta = (0..self.ncols)
                .filter(|&j| eligible(j))
                .map(|j| (self.d2[j].max(0.0) + OPT_TOL) / -self.at(r, j))
                .fold(f64::INFINITY, f64::min);
            if theta.is_infinite() {
                return Ok(self.row_farkas(r, problem));
            }
            let q = (0..self.ncols)
                .filter(|&j| eligible(j) && self.d2[j].max(0.0) / -self.at(r, j) <= theta)
                .max_by(|&a, &b| (-self.at(r, a)).total_cmp(&-self.at(r, b)))
                .expect("the Harris bound admits its own minimizer");
            self.pivot(r, q, false);
        }
        let q = self.run_phase(Phase::Two)?;
        Ok(self.extract(problem, q))
    }

    /// Row `r` has a negative basic value and no negative entry a nonbasic
    /// column could use: `-(row r of B^{-1})` is a Farkas certificate.
    fn row_farkas(&self, r: usize, problem: &LpProblem) -> LpOutcome {
        let mut y: Vec<f64> = (0..self.m)
            .map(|i| {
                let c = self.id_col[i];
                let coef = if self.artificial[c] { 1.0 } else { -self.sigma[i] };
                -self.at(r, c) / coef * self.sigma[i] * self.scale[i]
            })
            .collect();
        for (yi, row) in y.iter_mut().zip(&problem.rows) {
            if row.relation == Relation::Ge && *yi < 0.0 {
                *yi = 0.0;
            }
        }
        normalize_max_abs(&mut y);
        LpOutcome::Infeasible { farkas: y }
    }

    fn extract(&self, problem: &LpProblem, unbounded: Option<usize>) -> LpOutcome {
        if let Some(q) = unbounded {
            let mut ray = vec![0.0; self.n_struct];
            if q < self.n_struct {
                ray[q] = 1.0;
            }
            for i in 0..self.m {
                let b = self.basis[i];
                if b < self.n_struct {
                    ray[b] = (-self.at(i, q)).max(0.0);
                }
            }
            normalize_max_abs(&mut ray);
            return LpOutcome::Unbounded { ray };
        }
        let mut primal = vec![0.0; self.n_struct];
        for i in 0..self.m {
            let b = self.basis[i];
            if b < self.n_struct {
                primal[b] = self.rhs(i).max(0.0);
            }
        }
        let mut dual = self.multipliers(Phase::Two);
        for (yi, row) in dual.iter_mut().zip(&problem.rows) {
            if row.relation == Relation::Ge && *yi < 0.0 && *yi > -OPT_TOL {
                *yi = 0.0;
            }
        }
        let objective = problem.objective.iter().zip(&primal).map(|(c, x)| c * x).sum();
        LpOutcome::Optimal(LpSolution { primal, dual, objective })
    }
}
