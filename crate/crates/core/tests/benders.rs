mod common;

use common::{line_instance, random_instance, rel_close};
use mdpbd::benders::{self, build_blocks, generate_cut, solve_subproblem, BendersConfig, BendersStatus, CutKind, SubproblemResult, SubsetStatus};
use mdpbd::partition::{partition_dv, partition_rec, Partition};
use mdpbd::pmo::{solve_monolithic, verify};
use mdpbd::{build_graph, MdpInstance};

fn run(inst: &MdpInstance, p: &Partition, cfg: &BendersConfig) -> benders::BendersState {
    benders::run(inst, p, &build_graph(inst), cfg).unwrap()
}

#[test]
fn single_subset_matches_monolithic_quickly() {
    let inst = random_instance(1, 20, 10);
    let p = Partition::from_assignment(vec![0; 20], 1, &inst).unwrap();
    let s = run(&inst, &p, &BendersConfig::default());
    let (_, opt) = solve_monolithic(&inst).unwrap();
    assert_eq!(s.status, BendersStatus::Converged);
    assert!(s.iteration <= 2);
    assert!(rel_close(s.objective().unwrap(), opt, 1e-9));
}

#[test]
fn no_boundary_partition_is_exact() {
    let inst = line_instance(&[0.0, 0.5, 1.0, 10.0, 10.5, 11.0], 1.0, 0.6);
    let p = Partition::from_assignment(vec![0, 0, 0, 1, 1, 1], 2, &inst).unwrap();
    assert!(p.boundary.iter().all(Vec::is_empty));
    let s = run(&inst, &p, &BendersConfig::default());
    let (_, opt) = solve_monolithic(&inst).unwrap();
    assert!(s.iteration <= 2);
    assert!(rel_close(s.objective().unwrap(), opt, 1e-9));
}

#[test]
fn random_instance_within_xi() {
    let inst = random_instance(7, 40, 20);
    let p = partition_rec(&inst, 4, 7).unwrap().partition;
    let (_, opt) = solve_monolithic(&inst).unwrap();
    let s = run(&inst, &p, &BendersConfig::default());
    assert_eq!(s.status, BendersStatus::Converged);
    let bd = s.objective().unwrap();
    assert!((bd - opt).abs() <= 0.01 * (1.0 + opt.abs()), "bd {bd} opt {opt}");
    assert!(verify(&inst, s.best_z.as_ref().unwrap()).unwrap().is_feasible());
}

#[test]
fn tight_xi_reaches_optimum() {
    let inst = random_instance(3, 30, 10);
    let p = partition_dv(&inst, 3, 3).unwrap().partition;
    let (_, opt) = solve_monolithic(&inst).unwrap();
    let cfg = BendersConfig { xi: 1e-7, ..Default::default() };
    let s = run(&inst, &p, &cfg);
    assert_eq!(s.status, BendersStatus::Converged);
    assert!(rel_close(s.objective().unwrap(), opt, 1e-5));
}

#[test]
fn initial_cuts_do_not_change_the_optimum() {
    let inst = random_instance(11, 30, 10);
    let p = partition_rec(&inst, 3, 1).unwrap().partition;
    let tight = BendersConfig { xi: 1e-7, ..Default::default() };
    let with = run(&inst, &p, &tight);
    let without = run(&inst, &p, &BendersConfig { initial_cuts: false, ..tight.clone() });
    let full = run(&inst, &p, &BendersConfig { prune_initial_cuts: false, ..tight });
    let a = with.objective().unwrap();
    assert!(rel_close(a, without.objective().unwrap(), 1e-6));
    assert!(rel_close(a, full.objective().unwrap(), 1e-6));
    assert!(with.initial_cut_count <= full.initial_cut_count);
}

#[test]
fn shuffled_dispatch_is_bit_identical() {
    let inst = random_instance(5, 40, 10);
    let p = partition_rec(&inst, 4, 2).unwrap().partition;
    let a = run(&inst, &p, &BendersConfig::default());
    let b = run(&inst, &p, &BendersConfig { shuffle_seed: Some(99), threads: Some(3), ..Default::default() });
    assert_eq!(a.iteration, b.iteration);
    assert_eq!(a.best_upper.to_bits(), b.best_upper.to_bits());
    assert_eq!(a.lower.to_bits(), b.lower.to_bits());
    assert_eq!(a.cuts, b.cuts);
    assert_eq!(a.best_z, b.best_z);
}

#[test]
fn empty_subproblem_has_value_zero() {
    let inst = line_instance(&[0.0, 1.0, 2.0], 1.0, 1.0);
    let p = Partition::from_assignment(vec![0, 0, 1], 2, &inst).unwrap();
    let blocks = build_blocks(&inst, &p);
    let z = vec![vec![], vec![1.0 / 3.0; 3], vec![1.0 / 3.0; 3]];
    assert_eq!(solve_subproblem(&blocks.subproblems[1], &z).unwrap(), SubproblemResult::Empty);
    let (st, cut) = generate_cut(&blocks.subproblems[1], 0.0, &SubproblemResult::Empty, 1);
    assert_eq!(st, SubsetStatus::Empty);
    assert!(cut.is_none());
}

#[test]
fn contrived_boundary_makes_subproblem_infeasible() {
    // record 0 internal, record 1 boundary; z_{0,k} >= z_{1,k} / e^{eps d}
    let inst = line_instance(&[0.0, 0.5, 1.0], 2.0, 0.5);
    let p = Partition::from_assignment(vec![0, 0, 1], 2, &inst).unwrap();
    let blocks = build_blocks(&inst, &p);
    let sub = &blocks.subproblems[0];
    assert_eq!(sub.internal, vec![0]);
    // boundary row far above one forces z_{0,k} >= 2 on a probability row
    let big = 2.0 * inst.edge_bound(0, 1);
    let z = vec![vec![], vec![big, big, big], vec![0.0, 0.0, 1.0]];
    let res = solve_subproblem(sub, &z).unwrap();
    let SubproblemResult::Infeasible { ray } = &res else { panic!("expected infeasible, got {res:?}") };
    // A^T ray <= 0 and (b - B z)^T ray > 0
    let rhs = sub.effective_rhs(&z);
    let mut aty = vec![0.0; sub.c_x.len()];
    for (row, a) in sub.rows.iter().zip(ray) {
        for &(j, v) in &row.x {
            aty[j] += v * a;
        }
    }
    assert!(aty.iter().all(|&v| v <= 1e-9));
    assert!(rhs.iter().zip(ray).map(|(b, a)| b * a).sum::<f64>() > 1e-9);
    let (st, cut) = generate_cut(sub, 0.0, &res, 1);
    assert_eq!(st, SubsetStatus::FeasibilityCut);
    let cut = cut.unwrap();
    assert_eq!(cut.kind, CutKind::Feasibility);
    assert!(cut.slack(&z, 0.0) < -1e-9);
}

#[test]
fn optimality_cut_reproduces_value_at_iterate() {
    let inst = random_instance(21, 20, 6);
    let p = partition_rec(&inst, 2, 0).unwrap().partition;
    let blocks = build_blocks(&inst, &p);
    let mut z = vec![Vec::new(); inst.n()];
    for &i in &blocks.boundary {
        z[i] = vec![1.0 / 6.0; 6];
    }
    for sub in &blocks.subproblems {
        let res = solve_subproblem(sub, &z).unwrap();
        if let SubproblemResult::Feasible { value, .. } = &res {
            if *value > 0.0 {
                let (st, cut) = generate_cut(sub, 0.0, &res, 1);
                assert_eq!(st, SubsetStatus::OptimalityCut);
                let cut = cut.unwrap();
                assert!((cut.dual_value(&z) - value).abs() <= 1e-9 * (1.0 + value));
                let (st, none) = generate_cut(sub, *value, &res, 1);
                assert_eq!(st, SubsetStatus::Converged);
                assert!(none.is_none());
            }
        }
    }
}
