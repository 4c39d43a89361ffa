//! Dense symmetric eigen-decomposition by cyclic Jacobi rotations.

use crate::error::{invalid, Error, Result};

pub const OFF_DIAGONAL_TOL: f64 = 1e-10;
pub const MAX_SWEEPS: usize = 100;

#[derive(Clone, Debug)]
pub struct Eigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// `vectors[l]` is the unit eigenvector for `values[l]`.
    pub vectors: Vec<Vec<f64>>,
    pub sweeps: usize,
}

fn off_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += 2.0 * a[i * n + j] * a[i * n + j];
        }
    }
    s.sqrt()
}

/// Eigenpairs of a symmetric matrix, sorted by eigenvalue.
pub fn jacobi_eigen(matrix: &[Vec<f64>]) -> Result<Eigen> {
    let n = matrix.len();
    if n == 0 || matrix.iter().any(|r| r.len() != n) {
        return Err(invalid("eigen-solve needs a non-empty square matrix"));
    }
    let mut a: Vec<f64> = matrix.iter().flatten().copied().collect();
    for i in 0..n {
        for j in 0..i {
            if (a[i * n + j] - a[j * n + i]).abs() > 1e-12 * (1.0 + a[i * n + j].abs()) {
                return Err(invalid("eigen-solve needs a symmetric matrix"));
            }
        }
    }
    // v is stored transposed: row l of v is column l of the eigenvector matrix.
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let mut sweeps = 0;
    let mut off = off_norm(&a, n);
    while off >= OFF_DIAGONAL_TOL {
        if sweeps == MAX_SWEEPS {
            return Err(Error::Numeric(format!(
                "Jacobi did not converge in {MAX_SWEEPS} sweeps: off-diagonal norm {off:e} on a {n}x{n} matrix"
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                let (head, tail) = v.split_at_mut(q * n);
                let vp = &mut head[p * n..(p + 1) * n];
                let vq = &mut tail[..n];
                for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
                    let (px, qy) = (*x, *y);
                    *x = c * px - s * qy;
                    *y = s * px + c * qy;
                }
            }
        }
        off = off_norm(&a, n);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[x * n + x].total_cmp(&a[y * n + y]).then(x.cmp(&y)));
    Ok(Eigen {
        values: order.iter().map(|&l| a[l * n + l]).collect(),
        vectors: order.iter().map(|&l| v[l * n..(l + 1) * n].to_vec()).collect(),
        sweeps,
    })
}

/// `L = D - W` for a binary adjacency list.
pub fn laplacian(adjacency: &[Vec<usize>]) -> Vec<Vec<f64>> {
    let n = adjacency.len();
    let mut l = vec![vec![0.0; n]; n];
    for (i, nb) in adjacency.iter().enumerate() {
        for &j in nb {
            if j != i {
                l[i][j] = -1.0;
            }
        }
    }
    for (i, row) in l.iter_mut().enumerate() {
        row[i] = -row.iter().sum::<f64>();
    }
    l
}

/// `max |L v - lambda v|` for one eigenpair.
pub fn residual(matrix: &[Vec<f64>], value: f64, vector: &[f64]) -> f64 {
    matrix
        .iter()
        .zip(vector)
        .map(|(row, vi)| (row.iter().zip(vector).map(|(a, x)| a * x).sum::<f64>() - value * vi).abs())
        .fold(0.0, f64::max)
}

pub fn inf_norm(matrix: &[Vec<f64>]) -> f64 {
    matrix.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let e = jacobi_eigen(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-12);
        assert!((e.values[1] - 3.0).abs() < 1e-12);
        assert!((e.vectors[0][0] + e.vectors[0][1]).abs() < 1e-12);
    }

    #[test]
    fn laplacian_nullspace_per_component() {
        let adj = vec![vec![1], vec![0], vec![3], vec![2, 4], vec![3]];
        let l = laplacian(&adj);
        let e = jacobi_eigen(&l).unwrap();
        assert!(e.values[0].abs() < 1e-8 && e.values[1].abs() < 1e-8);
        assert!(e.values[2] > 0.5);
        for (val, vec) in e.values.iter().zip(&e.vectors) {
            assert!(residual(&l, *val, vec) <= 1e-7 * inf_norm(&l));
            assert!(*val >= -1e-9);
        }
    }

    #[test]
    fn rejects_asymmetric() {
        assert!(jacobi_eigen(&[vec![1.0, 2.0], vec![0.0, 1.0]]).is_err());
    }
}
