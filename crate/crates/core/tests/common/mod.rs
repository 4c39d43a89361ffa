#![allow(dead_code, clippy::needless_range_loop)]

use mdpbd::data::CostModel;
use mdpbd::instance::{build_instance, InstanceParts, Metric, MetricKind, Record, RecordKind};
use mdpbd::lp::{LpProblem, Relation};
use mdpbd::MdpInstance;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform points in the unit square, `eta` picked for an average degree of
/// about 4, `eps = 2 / eta` and no pair closer than `eta / 20`, so every
/// edge has `eps * d` in `[0.1, 2]`. Outputs are `k` of the records.
pub fn random_instance(seed: u64, n: usize, k: usize) -> MdpInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eta = (4.0 / (std::f64::consts::PI * n as f64)).sqrt();
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(n);
    while pts.len() < n {
        let p = [rng.random::<f64>(), rng.random::<f64>()];
        if pts.iter().all(|q| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt() >= eta / 20.0) {
            pts.push(p);
        }
    }
    let records: Vec<Record> = pts.iter().enumerate().map(|(i, p)| Record::new(i, p.to_vec(), RecordKind::Synthetic)).collect();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    idx.truncate(k);
    idx.sort_unstable();
    let outputs = idx.iter().enumerate().map(|(o, &i)| Record { id: o, ..records[i].clone() }).collect();
    build_instance(records, outputs, &Metric::Euclidean, 2.0 / eta, eta, &CostModel::Direct, None).unwrap()
}

/// Records on a line at the given positions, outputs equal to the records.
pub fn line_instance(xs: &[f64], eps: f64, eta: f64) -> MdpInstance {
    let rs: Vec<Record> = xs.iter().enumerate().map(|(i, &x)| Record::new(i, vec![x], RecordKind::Synthetic)).collect();
    build_instance(rs.clone(), rs, &Metric::Euclidean, eps, eta, &CostModel::Direct, None).unwrap()
}

/// An instance from an explicit distance matrix and raw cost matrix.
pub fn matrix_instance(dist: Vec<Vec<f64>>, cost: Vec<Vec<f64>>, eps: f64, eta: f64) -> MdpInstance {
    let n = dist.len();
    let k = cost[0].len();
    MdpInstance::from_parts(InstanceParts {
        records: (0..n).map(|i| Record::new(i, vec![i as f64], RecordKind::Synthetic)).collect(),
        outputs: (0..k).map(|i| Record::new(i, vec![i as f64], RecordKind::Synthetic)).collect(),
        metric: MetricKind::Precomputed,
        epsilon: eps,
        eta,
        output_dist: vec![vec![0.0; k]; n],
        dist,
        raw_cost: cost,
        prior: None,
        provenance: "test".into(),
    })
    .unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Solves `M x = rhs` by Gaussian elimination with partial pivoting;
/// `None` when singular.
pub fn gauss(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let p = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[p][col].abs() < 1e-10 {
            return None;
        }
        m.swap(col, p);
        rhs.swap(col, p);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                if f != 0.0 {
                    for c in col..n {
                        m[r][c] -= f * m[col][c];
                    }
                    rhs[r] -= f * rhs[col];
                }
            }
        }
    }
    Some((0..n).map(|i| rhs[i] / m[i][i]).collect())
}

fn combinations(n: usize, r: usize, f: &mut impl FnMut(&[usize])) {
    fn go(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == r {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < r - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, r, cur, f);
            cur.pop();
        }
    }
    go(0, n, r, &mut Vec::with_capacity(r), f);
}

/// Best basic feasible solution of `min c.x  s.t.  A x = b, x >= 0`, by
/// trying every square column subset. Assumes `A` has full row rank.
pub fn enumerate_vertices(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Option<(f64, Vec<f64>)> {
    let (m, n) = (a.len(), c.len());
    let mut best: Option<(f64, Vec<f64>)> = None;
    if m == 0 {
        return Some((0.0, vec![0.0; n]));
    }
    combinations(n, m, &mut |cols| {
        let sub: Vec<Vec<f64>> = a.iter().map(|row| cols.iter().map(|&j| row[j]).collect()).collect();
        if let Some(xb) = gauss(sub, b.to_vec()) {
            if xb.iter().all(|&v| v >= -1e-9) {
                let mut x = vec![0.0; n];
                for (&j, &v) in cols.iter().zip(&xb) {
                    x[j] = v.max(0.0);
                }
                let val: f64 = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
                if best.as_ref().is_none_or(|(bv, _)| val < *bv) {
                    best = Some((val, x));
                }
            }
        }
    });
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleStatus {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

/// Classifies `min c.x  s.t. rows, x >= 0` by basis enumeration on the
/// standard form (one surplus column per `>=` row), and by enumerating the
/// vertices of the normalized recession cone for unboundedness.
pub fn oracle(problem: &LpProblem) -> OracleStatus {
    let n = problem.objective.len();
    let ge: Vec<usize> = (0..problem.rows.len()).filter(|&i| problem.rows[i].relation == Relation::Ge).collect();
    let cols = n + ge.len();
    let mut a = vec![vec![0.0; cols]; problem.rows.len()];
    for (i, row) in problem.rows.iter().enumerate() {
        for &(j, v) in &row.coeffs {
            a[i][j] += v;
        }
    }
    for (s, &i) in ge.iter().enumerate() {
        a[i][n + s] = -1.0;
    }
    let b: Vec<f64> = problem.rows.iter().map(|r| r.rhs).collect();
    let mut c = problem.objective.clone();
    c.resize(cols, 0.0);
    let (a, b) = independent_rows(a, b);
    let Some((val, _)) = (match (&a, &b) {
        (Some(a), Some(b)) => enumerate_vertices(&c, a, b),
        _ => None,
    }) else {
        return OracleStatus::Infeasible;
    };
    // recession cone: A d = 0, d >= 0, sum d = 1
    let a = a.unwrap();
    let mut ar = a.clone();
    ar.push(vec![1.0; cols]);
    let mut br = vec![0.0; a.len()];
    br.push(1.0);
    if let (Some(ar), Some(br)) = independent_rows(ar, br) {
        if let Some((ray_val, _)) = enumerate_vertices(&c, &ar, &br) {
            if ray_val < -1e-9 {
                return OracleStatus::Unbounded;
            }
        }
    }
    OracleStatus::Optimal(val)
}

/// Drops linearly dependent rows; `None` when the system is inconsistent.
fn independent_rows(a: Vec<Vec<f64>>, b: Vec<f64>) -> (Option<Vec<Vec<f64>>>, Option<Vec<f64>>) {
    let mut keep_a: Vec<Vec<f64>> = Vec::new();
    let mut keep_b: Vec<f64> = Vec::new();
    // reduced copies for the rank test
    let mut basis: Vec<(Vec<f64>, f64, usize)> = Vec::new();
    for (row, rhs) in a.into_iter().zip(b) {
        let mut r = row.clone();
        let mut v = rhs;
        for (br, bv, piv) in &basis {
            let f = r[*piv] / br[*piv];
            if f != 0.0 {
                r.iter_mut().zip(br).for_each(|(x, y)| *x -= f * y);
                v -= f * bv;
            }
        }
        match r.iter().enumerate().max_by(|x, y| x.1.abs().total_cmp(&y.1.abs())) {
            Some((p, &mx)) if mx.abs() > 1e-9 => {
                basis.push((r, v, p));
                keep_a.push(row);
                keep_b.push(rhs);
            }
            _ => {
                if v.abs() > 1e-9 {
                    return (None, None);
                }
            }
        }
    }
    (Some(keep_a), Some(keep_b))
}
