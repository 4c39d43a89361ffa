use std::collections::HashMap;

use rayon::prelude::*;

use super::blocks::Blocks;
use super::cuts::{Cut, InitialCut};
use crate::error::{Error, Result};
use crate::lp::{IncrementalLp, LpOutcome, LpProblem, Relation};

/// Master rows bucketed by component, built once per run.
#[derive(Clone, Debug)]
pub(crate) struct MasterLayout {
    /// Row indices into `Blocks::master_rows` per component.
    rows: Vec<Vec<usize>>,
    initial: Vec<Vec<InitialCut>>,
    /// Subsets whose cuts live in each component.
    subsets: Vec<Vec<usize>>,
    /// Subsets without boundary records: their `w` only meets constant cuts.
    free_subsets: Vec<usize>,
}

impl MasterLayout {
    pub(crate) fn new(blocks: &Blocks, initial: Vec<Vec<InitialCut>>) -> Self {
        let nc = blocks.components.len();
        let mut rows = vec![Vec::new(); nc];
        for (r, row) in blocks.master_rows.iter().enumerate() {
            let c = blocks.component_of[row.y[0].0].expect("master rows touch boundary records only");
            rows[c].push(r);
        }
        let mut subsets = vec![Vec::new(); nc];
        let mut free_subsets = Vec::new();
        for (l, c) in blocks.subset_component.iter().enumerate() {
            match c {
                Some(c) => subsets[*c].push(l),
                None => free_subsets.push(l),
            }
        }
        Self { rows, initial, subsets, free_subsets }
    }

    pub(crate) fn initial_count(&self) -> usize {
        self.initial.iter().map(Vec::len).sum()
    }
}

#[derive(Clone, Debug)]
pub struct MasterSolution {
    /// Boundary iterate indexed by record; internal rows are empty.
    pub z: Vec<Vec<f64>>,
    pub w: Vec<f64>,
    /// Optimal master value, a lower bound on the PMO optimum.
    pub value: f64,
    pub rows: usize,
}

/// One incremental LP per master component; cuts are appended as rows.
pub(crate) struct Master {
    lps: Vec<IncrementalLp>,
    /// Column of each boundary record's first `z` variable, per component.
    pos: Vec<HashMap<usize, usize>>,
    /// Column of each subset's `w` within its component.
    w_col: Vec<Option<usize>>,
    /// Cuts already appended.
    seen: usize,
}

impl Master {
    pub(crate) fn new(blocks: &Blocks, layout: &MasterLayout) -> Result<Self> {
        let k = blocks.k;
        let mut lps = Vec::with_capacity(blocks.components.len());
        let mut pos = Vec::with_capacity(blocks.components.len());
        let mut w_col = vec![None; blocks.m];
        for (c, comp) in blocks.components.iter().enumerate() {
            let p: HashMap<usize, usize> = comp.iter().enumerate().map(|(q, &i)| (i, q * k)).collect();
            let nz = comp.len() * k;
            for (s, &l) in layout.subsets[c].iter().enumerate() {
                w_col[l] = Some(nz + s);
            }
            let mut objective: Vec<f64> = comp.iter().flat_map(|&i| blocks.cost[i].iter().copied()).collect();
            objective.extend(std::iter::repeat_n(1.0, layout.subsets[c].len()));
            let mut lp = LpProblem::new(objective);
            for &r in &layout.rows[c] {
                let row = &blocks.master_rows[r];
                lp.add_row(row.y.iter().map(|&(i, kk, v)| (p[&i] + kk, v)).collect(), row.relation, row.rhs);
            }
            for cut in &layout.initial[c] {
                for kk in 0..k {
                    lp.add_row(vec![(p[&cut.j] + kk, cut.bound), (p[&cut.i] + kk, -1.0)], Relation::Ge, 0.0);
                }
            }
            lps.push(IncrementalLp::new(lp)?);
            pos.push(p);
        }
        Ok(Self { lps, pos, w_col, seen: 0 })
    }

    /// Solves every component from its previous basis; the lower bound is
    /// the sum of component values plus the free subsets' constant cuts.
    pub(crate) fn solve(&mut self, blocks: &Blocks, layout: &MasterLayout, cuts: &[Cut]) -> Result<MasterSolution> {
        for cut in &cuts[self.seen..] {
            let Some(c) = blocks.subset_component[cut.subset] else {
                continue;
            };
            let p = &self.pos[c];
            let mut coeffs: Vec<(usize, f64)> = cut.z_coeffs.iter().map(|&(i, kk, v)| (p[&i] + kk, v)).collect();
            if cut.w_coeff != 0.0 {
                coeffs.push((self.w_col[cut.subset].expect("subset has a component"), cut.w_coeff));
            }
            self.lps[c].add_row(coeffs, Relation::Ge, cut.rhs)?;
        }
        self.seen = cuts.len();

        let parts = self
            .lps
            .par_iter_mut()
            .enumerate()
            .map(|(c, lp)| {
                let rows = lp.problem().n_rows();
                match lp.solve()? {
                    LpOutcome::Optimal(sol) => Ok((sol.primal, sol.objective, rows)),
                    LpOutcome::Infeasible { .. } => Err(Error::Internal(format!("master component {c} is infeasible"))),
                    LpOutcome::Unbounded { .. } => Err(Error::Internal(format!("master component {c} is unbounded"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;

        let k = blocks.k;
        let mut z = vec![Vec::new(); blocks.n];
        let mut w = vec![0.0; blocks.m];
        let mut value = 0.0;
        let mut rows = 0;
        for (c, (x, v, r)) in parts.into_iter().enumerate() {
            for &i in &blocks.components[c] {
                let q = self.pos[c][&i];
                z[i] = x[q..q + k].to_vec();
            }
            for &l in &layout.subsets[c] {
                w[l] = x[self.w_col[l].unwrap()];
            }
            value += v;
            rows += r;
        }
        let mut cuts_by_subset: Vec<Vec<&Cut>> = vec![Vec::new(); blocks.m];
        for cut in cuts {
            cuts_by_subset[cut.subset].push(cut);
        }
        for &l in &layout.free_subsets {
            if cuts_by_subset[l].iter().any(|c| c.w_coeff == 0.0) {
                return Err(Error::Internal(format!("feasibility cut on subset {l} without boundary records")));
            }
            let best = cuts_by_subset[l].iter().map(|c| c.rhs / c.w_coeff).fold(0.0, f64::max);
            w[l] = best;
            value += best;
            rows += cuts_by_subset[l].len();
        }
        Ok(MasterSolution { z, w, value, rows })
    }
}
