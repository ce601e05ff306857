mod common;

use std::time::Instant;

use common::*;
use gsmarray::coupled::{CouplingMatrix, DofAssignment};
use gsmarray::linalg::CMat;
use gsmarray::manifolds::DesignPoint;
use gsmarray::optimizer::*;
use gsmarray::pattern::{scan_table, LHCP};
use gsmarray::Error;
use nalgebra::SymmetricEigen;

fn costs(records: &[IterationRecord]) -> Vec<f64> {
    records.iter().map(|r| r.cost).collect()
}

#[test]
fn converged_point_stops_within_two_iterations() {
    let t = toy(2, 2, false);
    let asg = dof_strategy(Strategy::PointSymmetry, 2, 2).unwrap();
    let beams = vec![beam(-20, 40), beam(25, 40)];
    let p = Problem::new(&asg, &t.coupling, &t.fields, &beams).unwrap();
    let opts = DescentOptions::default();
    let x0 = random_point(asg.n_classes(), 2, 2, 2, 3);
    let first = descend_stage(&p, x0, 0.0, 0, &opts, Instant::now()).unwrap();
    let again = descend_stage(&p, first.x.clone(), 0.0, 0, &opts, Instant::now()).unwrap();
    assert!(again.records.len() <= 3, "{} iterations", again.records.len() - 1);
    let c0 = first.records.last().unwrap().cost;
    let c1 = again.records.last().unwrap().cost;
    assert!(c0 - c1 < 2.0 * opts.tol);
}

#[test]
fn gain_only_stage_reaches_the_rayleigh_bound() {
    // One uncoupled element, one port: |b T v|² with ‖T‖ ≤ 1 and |v| = 1 is
    // bounded by the largest eigenvalue of bᴴb.
    let t = toy(1, 1, false);
    let asg = DofAssignment::new(vec![0], 1, 1, "single").unwrap();
    let coupling = CouplingMatrix::zeros(1, 2);
    for theta in [0, 25, -40] {
        let beams = vec![beam(theta, 30)];
        let p = Problem::new(&asg, &coupling, &t.fields, &beams).unwrap();
        let ai = t.fields.angle_index(&beams[0].target).unwrap();
        let b = CMat::from_row_slice(1, 2, &t.fields.projection_row(&LHCP, ai));
        let bound = SymmetricEigen::new(b.adjoint() * &b).eigenvalues.max();
        let x0 = DesignPoint::initial(1, 2, 1, 1, 1, 1, 5).unwrap();
        let out = descend_stage(&p, x0, 0.0, 0, &DescentOptions::default(), Instant::now()).unwrap();
        let gain = -out.records.last().unwrap().cost;
        assert!(gain <= bound * (1.0 + 1e-12));
        assert!(gain >= 0.99 * bound, "θ = {theta}: {gain} vs {bound}");
    }
}

#[test]
fn staged_run_is_monotone_within_stages_and_chains_warm_starts() {
    let t = toy(2, 2, false);
    let asg = dof_strategy(Strategy::PointSymmetry, 2, 2).unwrap();
    let beams = vec![beam(-20, 40), beam(25, 40)];
    let p = Problem::new(&asg, &t.coupling, &t.fields, &beams).unwrap();
    let schedule = StageSchedule::default();
    let x0 = random_point(asg.n_classes(), 2, 2, 2, 1);
    let (x, trace) = staged_optimize(&p, x0.clone(), &schedule).unwrap();
    assert_eq!(trace.n_stages(), 8);
    assert!(x.manifold_defect() <= 1e-9);
    for l in 0..8 {
        let c = costs(trace.stage(l));
        assert!(c.windows(2).all(|w| w[1] <= w[0]), "stage {l}: {c:?}");
    }
    // Stage l starts at the cost of the previous stage's result under α_l.
    for l in 1..4 {
        let prefix = StageSchedule { alphas: schedule.alphas[..l].to_vec(), ..schedule.clone() };
        let (xl, _) = staged_optimize(&p, x0.clone(), &prefix).unwrap();
        let want = p.cost(&xl, schedule.alphas[l]).unwrap();
        let got = trace.stage(l)[0].cost;
        assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "stage {l}: {got} vs {want}");
    }
}

#[test]
fn single_stage_schedule_is_one_descent() {
    let t = toy(2, 2, false);
    let asg = dof_strategy(Strategy::Alternating, 2, 2).unwrap();
    let beams = vec![beam(0, 40)];
    let p = Problem::new(&asg, &t.coupling, &t.fields, &beams).unwrap();
    let x0 = random_point(asg.n_classes(), 2, 2, 1, 2);
    let schedule = StageSchedule::new(vec![0.0], 1e-4, 1000).unwrap();
    let (xs, trace) = staged_optimize(&p, x0.clone(), &schedule).unwrap();
    let direct = descend_stage(&p, x0, 0.0, 0, &schedule.options(), Instant::now()).unwrap();
    assert_eq!(xs, direct.x);
    assert_eq!(costs(&trace.records), costs(&direct.records));
}

#[test]
fn fixed_seed_runs_are_bit_identical() {
    let t = toy(2, 2, false);
    let asg = dof_strategy(Strategy::PointSymmetry, 2, 2).unwrap();
    let beams = vec![beam(-20, 40), beam(25, 40)];
    let p = Problem::new(&asg, &t.coupling, &t.fields, &beams).unwrap();
    let schedule = StageSchedule::new(vec![0.0, 0.1, 1.0], 1e-4, 200).unwrap();
    let run = || {
        let x0 = DesignPoint::initial(asg.n_classes(), 2, 1, 2, 2, 2, 99).unwrap();
        staged_optimize(&p, x0, &schedule).unwrap()
    };
    let (xa, ta) = run();
    let (xb, tb) = run();
    assert_eq!(xa, xb);
    let bits = |t: &OptimizationTrace| {
        t.records.iter().map(|r| (r.stage, r.iter, r.cost.to_bits(), r.grad_norm.to_bits(), r.step.to_bits())).collect::<Vec<_>>()
    };
    assert_eq!(bits(&ta), bits(&tb));
}

#[test]
fn eight_by_eight_design_value_counts() {
    let beams = scan_table().len();
    let ps = dof_strategy(Strategy::PointSymmetry, 8, 8).unwrap();
    assert_eq!(ps.n_classes(), 32);
    let x = DesignPoint::initial(ps.n_classes(), 2, 1, 8, 8, beams, 0).unwrap();
    assert_eq!(x.complex_dof_count(), 3 * 3 * 32 + 8 * 8 + 8 * 13);
    assert_eq!(x.complex_dof_count(), 456);
    let eq = dof_strategy(Strategy::EqualElements, 8, 8).unwrap();
    assert_eq!(complex_dof_count(2, 1, eq.n_classes(), 8, 8, beams), 177);
}

#[test]
fn strategy_names_and_schedule_errors() {
    assert!(matches!("Spiral".parse::<Strategy>(), Err(Error::Config(_))));
    for s in Strategy::ALL {
        assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
    }
    assert!(StageSchedule::new(vec![0.0, 1.0, 0.5], 1e-4, 10).is_err());
    assert!(StageSchedule::new(vec![], 1e-4, 10).is_err());
    assert!(StageSchedule::new(vec![0.0, -1.0], 1e-4, 10).is_err());
}

#[test]
fn trace_csv_layout() {
    let t = toy(1, 2, false);
    let asg = dof_strategy(Strategy::EqualElements, 1, 2).unwrap();
    let beams = vec![beam(0, 40)];
    let p = Problem::new(&asg, &t.coupling, &t.fields, &beams).unwrap();
    let x0 = random_point(1, 1, 2, 1, 4);
    let (_, trace) = staged_optimize(&p, x0, &StageSchedule::new(vec![0.0, 1.0], 1e-4, 50).unwrap()).unwrap();
    let csv = trace.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("stage,iter,cost,grad_norm,step,elapsed_s"));
    assert_eq!(lines.count(), trace.records.len());
}
