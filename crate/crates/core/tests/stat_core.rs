mod common;

use burkholder::losses::Loss;
use burkholder::potentials::{
    AdaGrad, AdaVariant, InstanceShape, MatrixConfig, MatrixPotential, Norm, ParamFree, ParamFreeConfig, Vaw,
    VawConfig,
};
use burkholder::stat_core::{
    accumulate, control_points, descent_check, linearized_from_residual, predict_convex, predict_linearized,
    predict_randomized, run_online, uniform_grid, ConvexOptions, Instance, Potential, RandomizedOptions, Statistic,
    Strategy,
};
use burkholder::symlin::{Mat, SymMat};
use burkholder::Error;
use common::Flat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn families() -> Vec<Box<dyn Potential>> {
    vec![
        Box::new(ParamFree::new(ParamFreeConfig::new(20, 3, 1.0, 1.0, Norm::L2).unwrap())),
        Box::new(MatrixPotential::new(MatrixConfig::minimal(3, 2, 0.2, 1.0, 1.0, 1.0).unwrap())),
        Box::new(AdaGrad::new(AdaVariant::L2, InstanceShape::Vector(3), 1.0, 1.0)),
        Box::new(AdaGrad::new(AdaVariant::Linf, InstanceShape::Vector(3), 1.0, 1.0)),
        Box::new(Vaw::new(VawConfig::squared_loss(2, 1.0, 1.0).unwrap())),
    ]
}

#[test]
fn anchor_increment_is_zero() {
    for p in families() {
        let z = p.zero();
        let inc = p.stat_map(&p.anchor(), 0.0, 0.0).unwrap();
        assert_eq!(z.add(&inc).unwrap(), z, "{}", p.name());
    }
}

#[test]
fn statistics_add_componentwise() {
    let a = Statistic::ScalarVec { b: 1.0, x: vec![1.0, 0.0] };
    let b = Statistic::ScalarVec { b: 0.5, x: vec![0.0, 1.0] };
    assert_eq!(a.add(&b).unwrap(), Statistic::ScalarVec { b: 1.5, x: vec![1.0, 1.0] });
}

#[test]
fn mismatched_statistics_are_structural_errors() {
    let a = Statistic::ScalarVec { b: 1.0, x: vec![1.0, 0.0] };
    let b = Statistic::ScalarVec { b: 0.5, x: vec![0.0] };
    assert!(matches!(a.add(&b), Err(Error::Structural(_))));
    let c = Statistic::VecSym { x: vec![0.0], a: SymMat::zeros(1) };
    assert!(matches!(a.add(&c), Err(Error::Structural(_))));
}

#[test]
fn accumulate_rejects_large_delta() {
    let p = AdaGrad::new(AdaVariant::L2, InstanceShape::Vector(2), 1.0, 1.0);
    let x = Instance::Vector(vec![0.5, 0.5]);
    assert!(matches!(accumulate(&p.zero(), &x, 0.0, 1.5, &p), Err(Error::Domain(_))));
    let z = accumulate(&p.zero(), &x, 0.2, -1.0, &p).unwrap();
    assert_eq!(z, p.stat_map(&x, 0.2, -1.0).unwrap());
}

#[test]
fn linearized_rule_arithmetic() {
    assert_eq!(linearized_from_residual(3.0, 3.0, 1.0, 1.0).unwrap(), 0.0);
    assert_eq!(linearized_from_residual(5.0, 1.0, 1.0, 1.0).unwrap(), -1.0);
    assert_eq!(linearized_from_residual(1.0, 1.5, 1.0, 1.0).unwrap(), 0.25);
    assert!(linearized_from_residual(f64::NAN, 0.0, 1.0, 1.0).is_err());
}

#[test]
fn scalar_matrix_prediction_is_zero_at_origin() {
    // ±0.1·𝒽([[3]]) - 0.005·diag(9, 9) has spectrum {0.255, -0.345} for
    // both signs, so the two log-trace-exp branches coincide.
    let cfg = MatrixConfig::minimal(1, 1, 0.1, 1.0, 1.0, 1.0).unwrap();
    let p = MatrixPotential::new(cfg);
    let x = Instance::Matrix(Mat::from_rows(&[&[3.0]]).unwrap());
    let branch = ((0.3f64 - 0.045).exp() + (-0.3f64 - 0.045).exp()).ln();
    let f = p.residual(1, &p.zero(), &x, 1.0).unwrap();
    assert!((f - (branch / 0.1 - p.cfg.c / 0.1)).abs() < 1e-12);
    assert!(predict_linearized(&p, 1, &p.zero(), &x, 1.0).unwrap().abs() < 1e-12);
}

#[test]
fn flat_objective_picks_leftmost_point() {
    let p = Flat { value: 0.0, l: 1.0 };
    let x = p.anchor();
    let y = predict_convex(&p, 1, &p.zero(), &x, &Loss::absolute(2.0), 2.0, &ConvexOptions::default()).unwrap();
    assert_eq!(y, -2.0);
}

#[test]
fn vaw_objective_at_origin_is_symmetric() {
    // With z = (x, -ŷ) the log-det term rewards |ŷ|, so at ζ = 0, x = 0 the
    // worst-case objective is even in ŷ and smallest at ±B.
    let p = Vaw::new(VawConfig::squared_loss(2, 1.0, 1.0).unwrap());
    let x = Instance::Vector(vec![0.0, 0.0]);
    let loss = Loss::squared(1.0);
    let ys = uniform_grid(1.0, 257);
    let worst = |yh: f64| {
        let d: Vec<f64> = ys.iter().map(|&y| loss.subgradient(yh, y)).collect();
        p.eval_increments(1, &p.zero(), &x, yh, &d).unwrap().into_iter().fold(f64::NEG_INFINITY, f64::max)
    };
    for yh in uniform_grid(1.0, 21) {
        assert!((worst(yh) - worst(-yh)).abs() < 1e-12);
        assert!(worst(1.0) <= worst(yh) + 1e-12);
    }
    let opts = burkholder::potentials::vaw_convex_options(1e-9);
    let y = predict_convex(&p, 1, &p.zero(), &x, &loss, 1.0, &opts).unwrap();
    assert_eq!(y, -1.0);
}

#[test]
fn randomized_rule_edge_cases() {
    let p = MatrixPotential::new(MatrixConfig::minimal(2, 2, 0.2, 1.0, 1.0, 1.0).unwrap());
    let x = Instance::Matrix(Mat::indicator(2, 2, 0, 1));
    let loss = Loss::absolute(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for (e1, e2) in [(0.0, 0.1), (0.1, 0.0), (-1.0, 0.1)] {
        let o = RandomizedOptions::new(e1, e2);
        assert!(matches!(predict_randomized(&p, 1, &p.zero(), &x, &loss, 1.0, &o, &mut rng), Err(Error::Domain(_))));
    }
    let o = RandomizedOptions { iterations: Some(0), ..RandomizedOptions::new(0.25, 0.1) };
    let r = predict_randomized(&p, 1, &p.zero(), &x, &loss, 1.0, &o, &mut rng).unwrap();
    let n = r.points.len();
    assert_eq!(r.points, control_points(1.0, 0.25));
    assert!(r.weights.iter().all(|w| (w - 1.0 / n as f64).abs() < 1e-15));

    // Against a flat table every μ is optimal and the iterate stays uniform.
    let flat = Flat { value: 0.0, l: 1.0 };
    let o = RandomizedOptions { iterations: Some(50), ..RandomizedOptions::new(0.25, 0.1) };
    let r = predict_randomized(&flat, 1, &flat.zero(), &flat.anchor(), &loss, 1.0, &o, &mut rng).unwrap();
    assert!(r.weights.iter().all(|w| (w - 1.0 / r.points.len() as f64).abs() < 1e-12));
}

#[test]
fn grids_cover_the_interval() {
    assert_eq!(uniform_grid(1.0, 0), Vec::<f64>::new());
    assert_eq!(uniform_grid(1.0, 1), vec![0.0]);
    assert_eq!(uniform_grid(2.0, 5), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    let c = control_points(1.0, 0.3);
    assert_eq!(c.first(), Some(&-1.0));
    assert_eq!(c.last(), Some(&1.0));
    assert!(c.windows(2).all(|w| w[1] - w[0] <= 0.3 + 1e-12 && w[1] > w[0]));
}

#[test]
fn empty_sequence_records_initial_value() {
    let p = MatrixPotential::new(MatrixConfig::minimal(2, 2, 0.2, 1.0, 1.0, 1.0).unwrap());
    let traj = run_online(&p, &Strategy::Linearized, &[], &Loss::absolute(1.0), 1.0, &mut ChaCha8Rng::seed_from_u64(0))
        .unwrap();
    assert!(traj.rounds.is_empty());
    assert_eq!(traj.zeta, vec![p.zero()]);
    assert_eq!(traj.potential_values.len(), 1);
    assert!(traj.potential_values[0].abs() < 1e-12);
}

#[test]
fn one_matrix_round_descends() {
    let p = MatrixPotential::new(MatrixConfig::minimal(3, 2, 0.2, 1.0, 1.0, 1.0).unwrap());
    let loss = Loss::absolute(1.0);
    for (i, j, y) in [(0, 0, 1.0), (2, 1, -0.5), (1, 0, 0.0)] {
        let seq = vec![(Instance::Matrix(Mat::indicator(3, 2, i, j)), y)];
        let traj = run_online(&p, &Strategy::Linearized, &seq, &loss, 1.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(traj.potential_values[1] <= traj.potential_values[0] + 1e-12);
        assert!(traj.potential_values[0] <= 1e-12);
    }
}

#[test]
fn trajectory_statistic_is_running_sum() {
    let p = ParamFree::new(ParamFreeConfig::new(30, 2, 1.0, 1.0, Norm::L2).unwrap());
    let loss = Loss::absolute(1.0);
    let seq: Vec<(Instance, f64)> =
        (0..30).map(|t| (Instance::Vector(vec![(t as f64).sin() * 0.7, 0.5]), if t % 3 == 0 { 1.0 } else { -0.4 })).collect();
    let traj = run_online(&p, &Strategy::Linearized, &seq, &loss, 1.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let mut z = p.zero();
    for (k, r) in traj.rounds.iter().enumerate() {
        assert_eq!(r.delta, loss.subgradient(r.y_hat, r.y));
        z = z.add(&p.stat_map(&r.x, r.y_hat, r.delta).unwrap()).unwrap();
        assert_eq!(z, traj.zeta[k + 1]);
    }
    let d = descent_check(&p, &traj, &loss, 1.0, 101).unwrap();
    assert!(d.realized <= 1e-10 && d.worst_outcome <= 1e-10, "{d:?}");
}

#[test]
fn run_rejects_bad_inputs() {
    let p = ParamFree::new(ParamFreeConfig::new(2, 1, 1.0, 1.0, Norm::L2).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x = Instance::Vector(vec![1.0]);
    let long = vec![(x.clone(), 0.0); 3];
    assert!(run_online(&p, &Strategy::Linearized, &long, &Loss::absolute(1.0), 1.0, &mut rng).is_err());
    let outside = vec![(x.clone(), 2.0)];
    assert!(run_online(&p, &Strategy::Linearized, &outside, &Loss::absolute(1.0), 1.0, &mut rng).is_err());
    // Squared loss has L = 4B, above the family's L = 1.
    let ok = vec![(x, 0.0)];
    assert!(run_online(&p, &Strategy::Linearized, &ok, &Loss::squared(1.0), 1.0, &mut rng).is_err());
}

#[test]
fn linearized_rule_refuses_nonconvex_potentials() {
    let p = Flat { value: 0.0, l: 1.0 };
    assert!(predict_linearized(&p, 1, &p.zero(), &p.anchor(), 1.0).is_err());
}
