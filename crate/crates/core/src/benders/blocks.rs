//! Block-ladder split of the PMO rows into master and subproblem parts.

use crate::instance::MdpInstance;
use crate::lp::{LpProblem, Relation};
use crate::partition::{mp_components, Partition};

/// A constraint `sum x + sum y >= | = rhs`. `x` indexes the owning block's
/// internal variables; `y` terms are `(record, k, coefficient)` on boundary
/// variables, which the subproblem moves to the right-hand side.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockRow {
    pub x: Vec<(usize, f64)>,
    pub y: Vec<(usize, usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub struct SubproblemBlock {
    pub subset: usize,
    /// Internal records; variable `x[p * K + k]` belongs to `internal[p]`.
    pub internal: Vec<usize>,
    pub boundary: Vec<usize>,
    pub rows: Vec<BlockRow>,
    pub c_x: Vec<f64>,
}

impl SubproblemBlock {
    /// `b - B z` for a boundary iterate indexed by record.
    pub fn effective_rhs(&self, z_bar: &[Vec<f64>]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.rhs - r.y.iter().map(|&(i, k, v)| v * z_bar[i][k]).sum::<f64>())
            .collect()
    }

    pub fn lp(&self, z_bar: &[Vec<f64>]) -> LpProblem {
        let mut lp = LpProblem::new(self.c_x.clone());
        for (row, rhs) in self.rows.iter().zip(self.effective_rhs(z_bar)) {
            lp.add_row(row.x.clone(), row.relation, rhs);
        }
        lp
    }
}

#[derive(Clone, Debug)]
pub struct Blocks {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub is_boundary: Vec<bool>,
    /// Sorted union of all boundary records.
    pub boundary: Vec<usize>,
    /// Boundary-only mDP rows (every neighboring boundary pair) and boundary
    /// unit-measure rows.
    pub master_rows: Vec<BlockRow>,
    pub subproblems: Vec<SubproblemBlock>,
    /// Independent groups of boundary records, see [`mp_components`].
    pub components: Vec<Vec<usize>>,
    /// Component of each record (`None` for internal records).
    pub component_of: Vec<Option<usize>>,
    /// Component holding each subset's boundary (`None` when it has none).
    pub subset_component: Vec<Option<usize>>,
    /// `p_i c_{i,k}` for every record.
    pub cost: Vec<Vec<f64>>,
}

pub fn build_blocks(instance: &MdpInstance, partition: &Partition) -> Blocks {
    let (n, k, m) = (instance.n(), instance.k(), partition.m);
    let is_boundary = partition.is_boundary();
    let mut local = vec![usize::MAX; n];
    for xs in &partition.internal {
        for (p, &i) in xs.iter().enumerate() {
            local[i] = p;
        }
    }
    let mut subproblems: Vec<SubproblemBlock> = (0..m)
        .map(|l| SubproblemBlock {
            subset: l,
            internal: partition.internal[l].clone(),
            boundary: partition.boundary[l].clone(),
            rows: Vec::new(),
            c_x: partition.internal[l].iter().flat_map(|&i| instance.cost()[i].iter().copied()).collect(),
        })
        .collect();
    let mut master_rows = Vec::new();

    let term = |i: usize, kk: usize, v: f64, row: &mut BlockRow| {
        if is_boundary[i] {
            row.y.push((i, kk, v));
        } else {
            row.x.push((local[i] * k + kk, v));
        }
    };
    for &(i, j) in instance.edges() {
        let b = instance.edge_bound(i, j);
        if !b.is_finite() {
            continue;
        }
        let both_boundary = is_boundary[i] && is_boundary[j];
        for kk in 0..k {
            // z_a <= b z_c, written b z_c - z_a >= 0
            for (a, c) in [(i, j), (j, i)] {
                let mut row = BlockRow { x: Vec::new(), y: Vec::new(), relation: Relation::Ge, rhs: 0.0 };
                term(c, kk, b, &mut row);
                term(a, kk, -1.0, &mut row);
                if both_boundary {
                    master_rows.push(row);
                } else {
                    // an internal endpoint has every neighbor in its own subset
                    let l = partition.assign[if is_boundary[i] { j } else { i }];
                    subproblems[l].rows.push(row);
                }
            }
        }
    }
    for i in 0..n {
        let mut row = BlockRow { x: Vec::new(), y: Vec::new(), relation: Relation::Eq, rhs: 1.0 };
        for kk in 0..k {
            term(i, kk, 1.0, &mut row);
        }
        if is_boundary[i] {
            master_rows.push(row);
        } else {
            subproblems[partition.assign[i]].rows.push(row);
        }
    }

    let components = mp_components(partition, instance);
    let mut component_of = vec![None; n];
    for (c, comp) in components.iter().enumerate() {
        for &i in comp {
            component_of[i] = Some(c);
        }
    }
    let subset_component = partition.boundary.iter().map(|ys| ys.first().and_then(|&i| component_of[i])).collect();
    let boundary = (0..n).filter(|&i| is_boundary[i]).collect();
    Blocks {
        n,
        k,
        m,
        is_boundary,
        boundary,
        master_rows,
        subproblems,
        components,
        component_of,
        subset_component,
        cost: instance.cost().to_vec(),
    }
}
