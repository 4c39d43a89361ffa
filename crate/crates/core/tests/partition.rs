#![allow(clippy::needless_range_loop)]

mod common;

use common::{line_instance, random_instance};
use mdpbd::partition::spectral::{inf_norm, jacobi_eigen, laplacian, residual};
use mdpbd::partition::{kmeans, partition_adj, partition_bsc, run_partition, Algorithm};
use mdpbd::build_graph;
use proptest::prelude::*;
use std::f64::consts::PI;

#[test]
fn path_spectrum_matches_closed_form() {
    let adj = vec![vec![1], vec![0, 2], vec![1, 3], vec![2]];
    let l = laplacian(&adj);
    let eig = jacobi_eigen(&l).unwrap();
    for (k, v) in eig.values.iter().enumerate() {
        assert!((v - (2.0 - 2.0 * (k as f64 * PI / 4.0).cos())).abs() < 1e-10);
    }
    let fiedler: Vec<f64> = (0..4).map(|i| (PI * (i as f64 + 0.5) / 4.0).cos()).collect();
    let norm = fiedler.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dot: f64 = fiedler.iter().zip(&eig.vectors[1]).map(|(a, b)| a * b).sum::<f64>() / norm;
    assert!((dot.abs() - 1.0).abs() < 1e-10);
}

#[test]
fn bsc_cuts_path_in_half() {
    let inst = line_instance(&[0.0, 1.0, 2.0, 3.0], 1.0, 1.0);
    let g = build_graph(&inst);
    for seed in 0..5 {
        let out = partition_bsc(&inst, &g, 2, seed).unwrap();
        let a = &out.partition.assign;
        assert_eq!(a[0], a[1]);
        assert_eq!(a[2], a[3]);
        assert_ne!(a[0], a[2]);
        assert_eq!(out.partition.boundary.iter().map(Vec::len).sum::<usize>(), 2);
    }
}

#[test]
fn adjacency_separates_bridged_cliques() {
    // six points within 0.625 of each other, twice, with one pair at distance 1
    let xs: Vec<f64> = (0..12).map(|i| if i < 6 { i as f64 * 0.125 } else { 1.625 + (i - 6) as f64 * 0.125 }).collect();
    let inst = line_instance(&xs, 1.0, 1.0);
    assert_eq!(inst.edges().iter().filter(|&&(i, j)| i < 6 && j >= 6).count(), 1);
    let g = build_graph(&inst);
    for seed in 0..10 {
        let a = partition_adj(&inst, &g, 2, seed).unwrap().partition.assign;
        assert!(a[..6].iter().all(|&l| l == a[0]), "seed {seed}: {a:?}");
        assert!(a[6..].iter().all(|&l| l == a[6]), "seed {seed}: {a:?}");
        assert_ne!(a[0], a[6]);
    }
}

const ALL: [Algorithm; 4] = [Algorithm::Dv, Algorithm::Rec, Algorithm::Adj, Algorithm::Bsc];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn partitions_are_well_formed(seed in 0u64..1000, n in 4usize..30, m in 1usize..6) {
        let inst = random_instance(seed, n, 2);
        let g = build_graph(&inst);
        let m = m.min(n);
        for alg in ALL {
            let out = run_partition(alg, &inst, &g, m, seed).unwrap();
            let p = &out.partition;
            prop_assert_eq!(p.assign.len(), n);
            prop_assert!(p.assign.iter().all(|&l| l < m));
            let subsets = p.subsets();
            for l in 0..m {
                let mut both: Vec<usize> = p.boundary[l].iter().chain(&p.internal[l]).copied().collect();
                both.sort_unstable();
                prop_assert_eq!(&both, &subsets[l]);
                for &i in &p.boundary[l] {
                    prop_assert!(g.neighbors(i).iter().any(|&(j, _)| p.assign[j] != l));
                }
                for &i in &p.internal[l] {
                    prop_assert!(g.neighbors(i).iter().all(|&(j, _)| p.assign[j] == l));
                }
            }
            let again = run_partition(alg, &inst, &g, m, seed).unwrap();
            prop_assert_eq!(&again.partition, p);
        }
    }

    #[test]
    fn lloyd_objective_never_rises(seed in 0u64..1000, n in 2usize..40, m in 1usize..6) {
        let inst = random_instance(seed, n, 1);
        let pts: Vec<Vec<f64>> = inst.records().iter().map(|r| r.coords.clone()).collect();
        let km = kmeans(&pts, m.min(n), seed).unwrap();
        for w in km.history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-15);
        }
    }

    #[test]
    fn laplacian_eigenpairs_have_small_residual(seed in 0u64..1000, n in 2usize..30) {
        let inst = random_instance(seed, n, 1);
        let g = build_graph(&inst);
        let adj: Vec<Vec<usize>> = (0..n).map(|i| g.neighbors(i).iter().map(|&(j, _)| j).collect()).collect();
        let l = laplacian(&adj);
        let eig = jacobi_eigen(&l).unwrap();
        let scale = inf_norm(&l).max(1.0);
        for (v, x) in eig.values.iter().zip(&eig.vectors) {
            prop_assert!(residual(&l, *v, x) <= 1e-8 * scale);
        }
        prop_assert!(eig.values[0].abs() < 1e-9);
        prop_assert_eq!(eig.values.iter().filter(|v| v.abs() < 1e-9).count(), g.component_count());
    }
}
