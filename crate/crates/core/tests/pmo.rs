mod common;

use common::{enumerate_vertices, matrix_instance, random_instance, rel_close};
use mdpbd::mech::exponential_mechanism;
use mdpbd::pmo::{expected_utility_loss, solve_monolithic, solve_per_component, verify};
use mdpbd::build_graph;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Six records on a path, each hop costing `eps * d = 0.5`.
fn path_instance(seed: u64) -> mdpbd::MdpInstance {
    let n = 6;
    let dist = (0..n).map(|i| (0..n).map(|j| 0.5 * (i as f64 - j as f64).abs()).collect()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cost = (0..n).map(|_| (0..4).map(|_| rng.random_range(0.0..10.0)).collect()).collect();
    matrix_instance(dist, cost, 1.0, 0.5)
}

// Each column of z lies in the cone cut out by the path constraints. The
// cone's extreme rays are b^{s_i} with s a +-1 walk, so the PMO reduces to
// covering the all-ones vector by rays, each priced at its cheapest output.
fn ray_oracle(inst: &mdpbd::MdpInstance) -> f64 {
    let n = inst.n();
    let b = 0.5f64.exp();
    let rays: Vec<Vec<f64>> = (0..1u32 << (n - 1))
        .map(|mask| {
            let mut s = 0i32;
            let mut v = vec![1.0];
            for e in 0..n - 1 {
                s += if mask >> e & 1 == 1 { 1 } else { -1 };
                v.push(b.powi(s));
            }
            v
        })
        .collect();
    let price: Vec<f64> = rays
        .iter()
        .map(|r| {
            (0..inst.k())
                .map(|k| (0..n).map(|i| inst.cost()[i][k] * r[i]).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let a: Vec<Vec<f64>> = (0..n).map(|i| rays.iter().map(|r| r[i]).collect()).collect();
    enumerate_vertices(&price, &a, &vec![1.0; n]).unwrap().0
}

#[test]
fn path_pmo_matches_ray_decomposition() {
    for seed in 0..3 {
        let inst = path_instance(seed);
        assert_eq!(inst.edges().len(), 5);
        let (z, obj) = solve_monolithic(&inst).unwrap();
        let oracle = ray_oracle(&inst);
        assert!((obj - oracle).abs() <= 1e-6 * (1.0 + oracle), "seed {seed}: {obj} vs {oracle}");
        assert!(verify(&inst, &z).unwrap().is_feasible());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn loss_is_monotone_in_epsilon(seed in 0u64..1000, lo in 0.2f64..3.0, step in 0.1f64..3.0) {
        let base = random_instance(seed, 10, 4);
        let (_, a) = solve_monolithic(&base.with_epsilon(lo).unwrap()).unwrap();
        let (_, b) = solve_monolithic(&base.with_epsilon(lo + step).unwrap()).unwrap();
        prop_assert!(b <= a + 1e-7 * (1.0 + a));
    }

    #[test]
    fn components_solve_independently(seed in 0u64..1000) {
        let inst = random_instance(seed, 14, 5);
        let (z, a) = solve_monolithic(&inst).unwrap();
        let (_, b) = solve_per_component(&inst, &build_graph(&inst)).unwrap();
        prop_assert!(rel_close(a, b, 1e-7));
        prop_assert!(rel_close(expected_utility_loss(&inst, &z), a, 1e-7));
        let report = verify(&inst, &z).unwrap();
        prop_assert!(report.is_feasible(), "{report:?}");
    }

    #[test]
    fn mechanism_is_feasible_and_no_better_than_optimum(seed in 0u64..1000) {
        let inst = random_instance(seed, 12, 6);
        let z = exponential_mechanism(&inst);
        for row in z.rows() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        for &(i, j) in inst.edges() {
            let bound = inst.edge_bound(i, j);
            for k in 0..inst.k() {
                let (zi, zj) = (z.rows()[i][k], z.rows()[j][k]);
                prop_assert!(zi <= bound * zj * (1.0 + 1e-9));
                prop_assert!(zj <= bound * zi * (1.0 + 1e-9));
            }
        }
        let (_, opt) = solve_monolithic(&inst).unwrap();
        prop_assert!(expected_utility_loss(&inst, &z) >= opt - 1e-9);
    }
}
