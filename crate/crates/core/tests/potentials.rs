use std::sync::Arc;

use burkholder::losses::Loss;
use burkholder::potentials::{
    ada_predict, combine_convex, combine_min, harmonic, meta_U, mp_U, mp_V, mp_doubling_run, mp_predict, pf_U, pf_V,
    pf_predict, usq, vaw_U, AdaGrad, AdaVariant, InstanceShape, MatrixConfig, MatrixPotential, MetaConfig, MetaMember,
    MetaPotential, Norm, ParamFree, ParamFreeConfig, Vaw, VawConfig,
};
use burkholder::stat_core::{predict_linearized, run_online, Instance, Potential, Statistic, Strategy};
use burkholder::symlin::{Mat, SymMat};
use burkholder::verify::{check_p1, check_p3, check_p3_auto, P3Mode};
use burkholder::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_psd(d: usize, rng: &mut ChaCha8Rng) -> SymMat {
    let mut s = SymMat::zeros(d);
    for _ in 0..d {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        s.axpy(1.0, &SymMat::outer(&v)).unwrap();
    }
    s
}

fn random_sym(d: usize, rng: &mut ChaCha8Rng) -> SymMat {
    let a = random_psd(d, rng);
    let b = random_psd(d, rng);
    a.lincomb(1.0, &b, -1.0).unwrap()
}

// Parameter-free.

#[test]
fn param_free_closed_forms() {
    let cfg = ParamFreeConfig::new(10, 2, 1.5, 1.0, Norm::L2).unwrap();
    assert!((pf_U(&cfg, 10, 0.0, &[0.0, 0.0]).unwrap() - (cfg.gamma - cfg.c)).abs() < 1e-15);
    assert!(pf_U(&cfg, 0, 0.0, &[0.0, 0.0]).unwrap().abs() < 1e-12);
    assert!((cfg.gamma * (0.5 * harmonic(10)).exp() - cfg.c).abs() < 1e-12);
    let (b, x) = (0.7, [0.4, -1.2]);
    let want = b + cfg.gamma * ((0.16 + 1.44) / (2.0 * 10.0f64)).exp() - cfg.c;
    assert!((pf_U(&cfg, 10, b, &x).unwrap() - want).abs() < 1e-12);
    assert!((pf_V(&cfg, b, &x).unwrap() - want).abs() < 1e-12);
}

#[test]
fn param_free_rejects_large_gamma() {
    let err = ParamFreeConfig::with_gamma(10, 2, 1.0, 1.0, 1.0, Norm::L2).unwrap_err();
    assert!(matches!(err, Error::Domain(_)));
    assert!(ParamFreeConfig::new(10, 2, 1.0, 1.0, Norm::Lp(1.5)).is_err());
}

#[test]
fn param_free_predictions() {
    let cfg = ParamFreeConfig::new(10, 2, 1.0, 1.0, Norm::L2).unwrap();
    assert_eq!(pf_predict(&cfg, &[0.0, 0.0], 3, &[0.6, 0.2]).unwrap(), 0.0);
    assert!(pf_predict(&cfg, &[1.0, 0.0], 3, &[0.0, 0.8]).unwrap().abs() < 1e-15);

    // n = 2, t = 2, xsum = 1, x_t = 1, γ = 0.3: -½γ(e^{4/4} - e^0).
    let cfg = ParamFreeConfig::with_gamma(2, 1, 0.3, 1.0, 10.0, Norm::L2).unwrap();
    let want = -0.15 * (1f64.exp() - 1.0);
    assert!((pf_predict(&cfg, &[1.0], 2, &[1.0]).unwrap() - want).abs() < 1e-14);
    let clamped = ParamFreeConfig::with_gamma(2, 1, 0.3, 1.0, 0.1, Norm::L2).unwrap();
    assert_eq!(pf_predict(&clamped, &[1.0], 2, &[1.0]).unwrap(), -0.1);
}

#[test]
fn param_free_closed_form_matches_generic_rule() {
    let p = ParamFree::new(ParamFreeConfig::new(8, 3, 1.0, 1.0, Norm::L2).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for t in 1..=8 {
        let xs: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let x = p.sample_instance(&mut rng);
        let zeta = Statistic::ScalarVec { b: 0.3, x: xs.clone() };
        let closed = pf_predict(&p.cfg, &xs, t, x.as_vector().unwrap()).unwrap();
        let generic = predict_linearized(&p, t, &zeta, &x, 1.0).unwrap();
        assert!((closed - generic).abs() < 1e-12);
    }
}

// Matrix.

#[test]
fn matrix_values_at_origin() {
    let cfg = MatrixConfig::minimal(3, 2, 0.2, 1.0, 1.0, 1.0).unwrap();
    let z = SymMat::zeros(5);
    assert!(mp_U(&cfg, 0.0, &z, &z).unwrap().abs() < 1e-12);
    let want = 5.0 + (1.0 / 0.2) * 5f64.ln() - cfg.c / 0.2;
    assert!((mp_U(&cfg, 5.0, &z, &z).unwrap() - want).abs() < 1e-12);
}

#[test]
fn matrix_invariant_named_in_error() {
    let err = MatrixConfig::new(3, 2, 0.2, 1.0, 1.0, 0.0, 1.0).unwrap_err();
    assert!(err.to_string().contains("c ≥ r·log(d1+d2)"), "{err}");
}

#[test]
fn matrix_potential_dominates_bound() {
    let cfg = MatrixConfig::minimal(3, 2, 0.3, 0.8, 1.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let a = rng.random_range(-3.0..3.0);
        let h = random_sym(5, &mut rng);
        let m = random_psd(5, &mut rng);
        assert!(mp_U(&cfg, a, &h, &m).unwrap() >= mp_V(&cfg, a, &h, &m).unwrap() - 1e-10);
    }
}

#[test]
fn matrix_prediction_vanishes_without_history() {
    let cfg = MatrixConfig::minimal(3, 2, 0.2, 1.0, 1.0, 1.0).unwrap();
    let z = SymMat::zeros(5);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let x = Mat::from_vec(3, 2, (0..6).map(|_| rng.sample(StandardNormal)).collect()).unwrap();
        let x = x.scaled(1.0 / x.frobenius());
        assert!(mp_predict(&cfg, &z, &z, &x).unwrap().abs() < 1e-10);
    }
    let h = random_sym(5, &mut rng);
    let m = random_psd(5, &mut rng);
    assert_eq!(mp_predict(&cfg, &h, &m, &Mat::zeros(3, 2)).unwrap(), 0.0);
    assert!(mp_predict(&cfg, &z, &z, &Mat::zeros(2, 2)).is_err());
}

#[test]
fn doubling_single_round_is_one_epoch() {
    let cfg = MatrixConfig::minimal(2, 2, 1.0, 1.0, 1.0, 1.0).unwrap();
    let x = Mat::indicator(2, 2, 1, 0);
    let seq = vec![(Instance::Matrix(x.clone()), 0.5)];
    let run = mp_doubling_run(&cfg, &seq, &Loss::absolute(1.0), 1.0).unwrap();
    assert_eq!(run.epochs.len(), 1);
    let z = SymMat::zeros(4);
    let direct = mp_predict(&cfg.with_eta(run.epochs[0].eta), &z, &z, &x).unwrap();
    assert_eq!(run.predictions(), vec![direct]);
    assert!(mp_doubling_run(&cfg, &seq, &Loss::absolute(1.0), 0.0).is_err());
}

#[test]
fn doubling_epochs_respect_budget() {
    let cfg = MatrixConfig::minimal(2, 2, 1.0, 1.0, 1.0, 1.0).unwrap();
    let seq: Vec<(Instance, f64)> =
        (0..40).map(|t| (Instance::Matrix(Mat::indicator(2, 2, t % 2, (t / 2) % 2)), if t % 3 == 0 { 1.0 } else { -1.0 })).collect();
    let run = mp_doubling_run(&cfg, &seq, &Loss::absolute(1.0), 1.0).unwrap();
    assert!(run.epochs.len() > 1);
    for (k, e) in run.epochs.iter().enumerate() {
        assert_eq!(e.index, k);
        assert!(e.variance <= 2f64.powi(k as i32) * (1.0 + 1e-12));
    }
    assert_eq!(run.predictions().len(), 40);
}

// AdaGrad.

#[test]
fn usq_values() {
    assert_eq!(usq(&[0.0, 0.0], 0.0), 0.0);
    for x in [[3.0f64, 4.0], [0.1, -0.2], [1.0, 0.0]] {
        let n = (x[0] * x[0] + x[1] * x[1]).sqrt();
        assert!((usq(&x, n) + n).abs() < 1e-12);
    }
}

#[test]
fn adagrad_predictions() {
    let zeta = Statistic::ScalarVecScalar { b: 0.0, x: vec![0.0, 0.0], s: 0.0 };
    assert_eq!(ada_predict(&zeta, &[0.5, 0.5], AdaVariant::L2, 1.0, 1.0).unwrap(), 0.0);
    // F(±1) = usq(2 ± 1, 1) = 1 and -1.
    let zeta = Statistic::ScalarVecScalar { b: 0.0, x: vec![2.0], s: 0.0 };
    assert_eq!(ada_predict(&zeta, &[1.0], AdaVariant::L2, 1.0, 1.0).unwrap(), -1.0);
}

#[test]
fn adagrad_variants_agree_in_one_dimension() {
    let l2 = AdaGrad::new(AdaVariant::L2, InstanceShape::Vector(1), 1.0, 1.0);
    let linf = AdaGrad::new(AdaVariant::Linf, InstanceShape::Vector(1), 1.0, 1.0);
    let seq: Vec<(Instance, f64)> = (0..30).map(|t| (Instance::Vector(vec![((t * 7) % 5) as f64 / 5.0]), ((t as f64) * 0.9).sin())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let a = run_online(&l2, &Strategy::Linearized, &seq, &Loss::absolute(1.0), 1.0, &mut rng).unwrap();
    let b = run_online(&linf, &Strategy::Linearized, &seq, &Loss::absolute(1.0), 1.0, &mut rng).unwrap();
    for (ra, rb) in a.rounds.iter().zip(&b.rounds) {
        assert!((ra.y_hat - rb.y_hat).abs() < 1e-12);
    }
}

// VAW.

#[test]
fn vaw_values() {
    let cfg = VawConfig::squared_loss(2, 1.0, 1.0).unwrap();
    assert_eq!(vaw_U(&cfg, &[0.0; 3], &SymMat::zeros(3)).unwrap(), 0.0);
    // d = 0: a scalar statistic.
    let cfg = VawConfig::new(0, 2.0, 1.0, 0.5, 1.0).unwrap();
    for s in [0.0, 0.5, 3.0] {
        let want = 0.5 / (2.0 * s + 1.0) - 0.5 * (2.0 * s + 1.0f64).ln();
        assert!((vaw_U(&cfg, &[1.0], &SymMat::from_diag(&[s])).unwrap() - want).abs() < 1e-12);
    }
    assert!(VawConfig::new(2, 2.0, 1.0, 0.4, 1.0).is_err());
}

// Meta and combinations.

fn members() -> (Arc<dyn Potential>, Arc<dyn Potential>) {
    let m = MatrixConfig::minimal(3, 2, 0.2, 1.0, 1.0, 1.0).unwrap();
    (Arc::new(MatrixPotential::new(m)), Arc::new(AdaGrad::new(AdaVariant::L2, InstanceShape::Matrix(3, 2), 1.0, 1.0)))
}

#[test]
fn meta_closed_forms() {
    assert!(meta_U(&[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0], 0.7).abs() < 1e-15);
    assert!((meta_U(&[1.3], &[0.4], 0.5) - (1.3 - 0.5 * 0.4)).abs() < 1e-15);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let k = rng.random_range(1..5);
        let u: Vec<f64> = (0..k).map(|_| rng.random_range(-5.0..5.0)).collect();
        let g: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..5.0)).collect();
        let eta = rng.random_range(0.05..2.0);
        let floor = u.iter().zip(&g).map(|(u, g)| u - eta * g).fold(f64::NEG_INFINITY, f64::max) - (k as f64).ln() / eta;
        assert!(meta_U(&u, &g, eta) >= floor - 1e-12);
    }
}

#[test]
fn meta_statistic_carries_constants() {
    let (a, b) = members();
    let meta = MetaPotential::new(MetaConfig {
        members: vec![
            MetaMember { potential: a, c: 2.0, analytic: true },
            MetaMember { potential: b, c: 3.0, analytic: true },
        ],
        eta: 0.1,
    })
    .unwrap();
    assert!(meta.eval(0, &meta.zero()).unwrap().abs() < 1e-12);
    let x = Instance::Matrix(Mat::indicator(3, 2, 1, 1));
    let z = meta.zero().add(&meta.stat_map(&x, 0.3, -1.0).unwrap()).unwrap();
    let (parts, gamma) = meta.parts(&z).unwrap();
    assert_eq!(parts.len(), 2);
    assert_eq!(gamma, &[2.0, 3.0]);
    assert!((meta.overhead(0, 10) - (0.1 * 10.0 * 2.0 + 2f64.ln() / 0.1)).abs() < 1e-12);
}

#[test]
fn meta_config_validation() {
    let (a, b) = members();
    let bad_eta = MetaConfig { members: vec![MetaMember { potential: a.clone(), c: 1.0, analytic: true }], eta: 0.0 };
    assert!(MetaPotential::new(bad_eta).is_err());
    let empty = MetaConfig { members: vec![], eta: 1.0 };
    assert!(MetaPotential::new(empty).is_err());
    let neg = MetaConfig { members: vec![MetaMember { potential: b, c: -1.0, analytic: true }], eta: 1.0 };
    assert!(MetaPotential::new(neg).is_err());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let built = MetaConfig::build(vec![a], 0.1, 1.0, &mut rng).unwrap();
    assert!(built.members[0].analytic);
}

#[test]
fn combinations_of_one_potential() {
    let (a, _) = members();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let min = combine_min(vec![a.clone(), a.clone()]).unwrap();
    let other = Arc::new(MatrixPotential::new(MatrixConfig::minimal(3, 2, 0.2, 1.0, 1.0, 1.0).unwrap().with_eta(0.5)));
    let first = combine_convex(vec![a.clone(), other], vec![1.0, 0.0]).unwrap();
    for _ in 0..50 {
        let z = burkholder::stat_core::random_statistic(a.as_ref(), 5, 1.0, &mut rng).unwrap();
        let u = a.eval(1, &z).unwrap();
        assert_eq!(min.eval(1, &z).unwrap(), u);
        assert_eq!(first.eval(1, &z).unwrap(), u);
    }
}

#[test]
fn combinations_validate_members() {
    let (a, b) = members();
    assert!(matches!(combine_min(vec![a.clone(), b]), Err(Error::Structural(_))));
    assert!(combine_min(vec![]).is_err());
    assert!(combine_convex(vec![a.clone(), a.clone()], vec![0.6, 0.6]).is_err());
    assert!(combine_convex(vec![a.clone(), a.clone()], vec![1.5, -0.5]).is_err());
    assert!(combine_convex(vec![a], vec![1.0, 0.0]).is_err());
}

#[test]
fn combinations_keep_burkholder_properties() {
    let m = MatrixConfig::minimal(3, 2, 0.2, 1.0, 1.0, 1.0).unwrap();
    let a: Arc<dyn Potential> = Arc::new(MatrixPotential::new(m.clone()));
    let b: Arc<dyn Potential> = Arc::new(MatrixPotential::new(MatrixConfig { c: 2.5, ..m }));
    let min = combine_min(vec![a.clone(), b.clone()]).unwrap();
    assert!(!min.convex_in_delta());
    let cvx = combine_convex(vec![a, b], vec![0.4, 0.6]).unwrap();
    for p in [&min as &dyn Potential, &cvx] {
        assert!(check_p1(p, 1e-9).unwrap().passed());
        assert!(check_p3(p, P3Mode::TwoPoint, 1.0, 2000, 3, 1e-6).unwrap().passed());
    }
    assert!(check_p3_auto(&cvx, 1.0, 2000, 4, 1e-6).unwrap().passed());
}

#[test]
fn increment_bounds_cover_sampled_steps() {
    let (a, b) = members();
    let vaw: Arc<dyn Potential> = Arc::new(Vaw::new(VawConfig::squared_loss(2, 1.0, 1.0).unwrap()));
    let pf: Arc<dyn Potential> = Arc::new(ParamFree::new(ParamFreeConfig::new(20, 2, 1.0, 1.0, Norm::L2).unwrap()));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for p in [a, b] {
        let c = p.increment_bound(1.0).expect("analytic");
        let sampled = burkholder::potentials::meta::estimate_increment_bound(p.as_ref(), 1.0, 2000, &mut rng).unwrap();
        assert!(sampled / 2.0 <= c + 1e-9, "{}: sampled {} vs analytic {c}", p.name(), sampled / 2.0);
    }
    for p in [vaw, pf] {
        assert!(burkholder::potentials::meta::estimate_increment_bound(p.as_ref(), 1.0, 500, &mut rng).unwrap() >= 0.0);
    }
}
