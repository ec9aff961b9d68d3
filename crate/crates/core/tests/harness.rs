use burkholder::harness::{
    compare_strategies, comparator_oracle, comparator_predictions, comparison_csv, generate, linear_loss,
    matrix_bound_at, parse_sequence_csv, planted_comparator, report, scan_1d, sequence_to_csv, weighted_median,
    ComparatorClass, OracleOptions, SequenceKind, SequenceSpec,
};
use burkholder::losses::Loss;
use burkholder::potentials::{AdaGrad, AdaVariant, InstanceShape, MatrixConfig, MatrixPotential};
use burkholder::stat_core::{run_online, ConvexOptions, Instance, Strategy};
use burkholder::symlin::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn completion(n: usize, noise: f64, rank: usize, seed: u64) -> SequenceSpec {
    SequenceSpec {
        kind: SequenceKind::MatrixCompletion { d1: 4, d2: 3, rank, noise, r: 1.0, b: 1.0, skew: None },
        n,
        seed,
    }
}

#[test]
fn empty_and_invalid_specs() {
    assert!(generate(&completion(0, 0.1, 2, 0)).unwrap().is_empty());
    assert!(generate(&completion(10, 0.1, 4, 0)).is_err());
    let bad = SequenceSpec { kind: SequenceKind::RandomVectors { d: 0, norm_bound: 1.0, noise: 0.0, b: 1.0 }, n: 3, seed: 0 };
    assert!(generate(&bad).is_err());
}

#[test]
fn noiseless_completion_reads_planted_entries() {
    let spec = completion(200, 0.0, 2, 7);
    let w = planted_comparator(&spec).unwrap().unwrap();
    for (x, y) in generate(&spec).unwrap() {
        let Instance::Matrix(m) = x else { panic!("matrix instance expected") };
        let (i, j) = (0..4).flat_map(|i| (0..3).map(move |j| (i, j))).find(|&(i, j)| m.get(i, j) == 1.0).unwrap();
        assert_eq!(y, w.get(i, j));
    }
    assert!((burkholder::symlin::nuclear_norm(&w).unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn generation_is_deterministic() {
    let spec = completion(50, 0.1, 2, 3);
    assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    let other = completion(50, 0.1, 2, 4);
    assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
}

#[test]
fn oracle_recovers_planted_loss() {
    let spec = completion(300, 0.0, 2, 11);
    let seq = generate(&spec).unwrap();
    let planted = Instance::Matrix(planted_comparator(&spec).unwrap().unwrap());
    let loss = Loss::absolute(1.0);
    let planted_loss = linear_loss(&seq, &loss, &planted).unwrap();
    assert!(planted_loss < 1e-12);
    let opts = OracleOptions::default();
    let warm = comparator_oracle(ComparatorClass::NuclearBall(1.0), &seq, &loss, &opts, Some(&planted)).unwrap();
    assert!(warm.loss <= planted_loss + 1e-3, "{}", warm.loss);
    // Cold start: within a small per-round gap of the optimum.
    let res = comparator_oracle(ComparatorClass::NuclearBall(1.0), &seq, &loss, &opts, None).unwrap();
    assert!(res.loss <= planted_loss + 1e-3 * seq.len() as f64, "{}", res.loss);
    let Instance::Matrix(w) = &res.comparator else { panic!() };
    assert!(burkholder::symlin::nuclear_norm(w).unwrap() <= 1.0 + 1e-9);

    let zero = comparator_oracle(ComparatorClass::NuclearBall(0.0), &seq, &loss, &OracleOptions::default(), None).unwrap();
    assert_eq!(zero.comparator, Instance::Matrix(Mat::zeros(4, 3)));
}

#[test]
fn scan_matches_weighted_median() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let n = rng.random_range(1..12);
        let seq: Vec<(Instance, f64)> = (0..n)
            .map(|_| (Instance::Vector(vec![rng.random_range(0.1..2.0)]), rng.random_range(-1.0..1.0)))
            .collect();
        let loss = Loss::absolute(1.0);
        let (w, obj) = scan_1d(&seq, &loss, 10.0).unwrap();
        // Σ x|w - y/x| is minimized at the x-weighted median of y/x.
        let pts: Vec<(f64, f64)> = seq.iter().map(|(x, y)| (y / x.coords()[0], x.coords()[0])).collect();
        let med = weighted_median(&pts).unwrap();
        let at_med: f64 = seq.iter().map(|(x, y)| (med * x.coords()[0] - y).abs()).sum();
        assert!((obj - at_med).abs() < 1e-12, "{obj} vs {at_med}");
        assert!(w.abs() <= 10.0);
    }
    assert_eq!(weighted_median(&[(1.0, 1.0), (2.0, 1.0)]).unwrap(), 1.0);
    assert!(weighted_median(&[]).is_err());
    assert!(scan_1d(&vec![], &Loss::squared(1.0), 1.0).is_err());
}

#[test]
fn csv_round_trip() {
    let spec = completion(20, 0.2, 1, 9);
    let seq = generate(&spec).unwrap();
    let text = format!("t,payload,y\n{}", sequence_to_csv(&seq));
    assert_eq!(parse_sequence_csv(&text, InstanceShape::Matrix(4, 3)).unwrap(), seq);
    assert!(parse_sequence_csv("1,0.5,0.2\n", InstanceShape::Matrix(4, 3)).is_err());
    assert!(parse_sequence_csv("1,0.5\n2,x,1\n", InstanceShape::Vector(1)).is_err());
}

#[test]
fn report_rows_and_regret_identity() {
    let spec = completion(40, 0.1, 2, 2);
    let seq = generate(&spec).unwrap();
    let cfg = MatrixConfig::minimal(4, 3, 0.2, 1.0, 1.0, 1.0).unwrap();
    let p = MatrixPotential::new(cfg.clone());
    let loss = Loss::absolute(1.0);
    let traj = run_online(&p, &Strategy::Linearized, &seq, &loss, 1.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let w = planted_comparator(&spec).unwrap().map(Instance::Matrix).unwrap();
    let preds = comparator_predictions(&seq, &w).unwrap();
    let rep = report(&p, &traj, &preds, &loss, &|z| matrix_bound_at(&cfg, z)).unwrap();
    assert_eq!(rep.rows.len(), seq.len() + 1);
    assert_eq!(rep.rows[0].regret, 0.0);
    for r in &rep.rows {
        assert!((r.regret - (r.cum_loss - r.comp_loss)).abs() < 1e-12);
    }
    let own: f64 = traj.rounds.iter().map(|r| loss.value(r.y_hat, r.y)).sum::<f64>()
        - preds.iter().zip(&seq).map(|(c, (_, y))| loss.value(*c, *y)).sum::<f64>();
    assert!((rep.final_regret - own).abs() < 1e-12);
    assert!(rep.final_regret <= rep.final_bound);
    assert_eq!(rep.to_csv().lines().count(), seq.len() + 2);
    assert!(report(&p, &traj, &preds[1..], &loss, &|z| matrix_bound_at(&cfg, z)).is_err());
}

#[test]
fn compare_single_strategy() {
    let seq = generate(&completion(30, 0.1, 2, 1)).unwrap();
    let p = MatrixPotential::new(MatrixConfig::minimal(4, 3, 0.2, 1.0, 1.0, 1.0).unwrap());
    let loss = Loss::absolute(1.0);
    let preds = vec![0.0; seq.len()];
    let runs = compare_strategies(&p, &[Strategy::Linearized], &seq, &loss, 1.0, &preds, 3, 0).unwrap();
    assert_eq!(runs.len(), 1);
    assert_eq!(runs[0].repetitions, 1);
    let csv = comparison_csv(&runs);
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 2);
    assert_eq!(csv.lines().count(), seq.len() + 2);
    assert!(compare_strategies(&p, &[Strategy::Linearized], &seq, &loss, 1.0, &preds[1..], 1, 0).is_err());
}

#[test]
fn convex_and_linearized_agree_on_adagrad() {
    let spec = SequenceSpec { kind: SequenceKind::RandomVectors { d: 3, norm_bound: 1.0, noise: 0.1, b: 1.0 }, n: 30, seed: 4 };
    let seq = generate(&spec).unwrap();
    let p = AdaGrad::new(AdaVariant::L2, InstanceShape::Vector(3), 1.0, 1.0);
    let loss = Loss::absolute(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let lin = run_online(&p, &Strategy::Linearized, &seq, &loss, 1.0, &mut rng).unwrap();
    let cvx = run_online(&p, &Strategy::Convex(ConvexOptions::default()), &seq, &loss, 1.0, &mut rng).unwrap();
    let step = 2.0 / (ConvexOptions::default().prediction_grid - 1) as f64;
    for (a, b) in lin.rounds.iter().zip(&cvx.rounds) {
        assert!((a.y_hat - b.y_hat).abs() <= 2.0 * step, "round {}: {} vs {}", a.t, a.y_hat, b.y_hat);
    }
}
