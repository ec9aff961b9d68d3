use burkholder::losses::{Loss, LossKind};

fn all(b: f64) -> [Loss; 3] {
    [Loss::absolute(b), Loss::squared(b), Loss::hinge(b)]
}

fn grid(b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| -b + 2.0 * b * i as f64 / (n - 1) as f64).collect()
}

#[test]
fn parse_round_trips() {
    for k in [LossKind::Absolute, LossKind::Squared, LossKind::Hinge] {
        assert_eq!(LossKind::parse(k.name()), Some(k));
    }
    assert_eq!(LossKind::parse("logistic"), None);
    assert!(Loss::new(LossKind::Absolute, 0.0).is_err());
    assert!(Loss::new(LossKind::Absolute, f64::NAN).is_err());
}

#[test]
fn subgradients_bounded_by_lipschitz() {
    for b in [0.5, 1.0, 3.0] {
        for loss in all(b) {
            for &yh in &grid(b, 41) {
                for &y in &grid(b, 41) {
                    assert!(loss.subgradient(yh, y).abs() <= loss.lipschitz() + 1e-12, "{loss:?} {yh} {y}");
                }
            }
        }
    }
}

#[test]
fn subgradient_inequality_holds() {
    // ℓ(z) ≥ ℓ(ŷ) + g·(z - ŷ) for every pair on the grid.
    let b = 1.5;
    for loss in all(b) {
        for &yh in &grid(b, 31) {
            for &y in &grid(b, 31) {
                let g = loss.subgradient(yh, y);
                for &z in &grid(b, 31) {
                    assert!(loss.value(z, y) >= loss.value(yh, y) + g * (z - yh) - 1e-12);
                }
            }
        }
    }
}

#[test]
fn expected_subdifferential_contains_zero_at_minimizer() {
    let supports: [&[(f64, f64)]; 4] = [
        &[(-1.0, 0.5), (1.0, 0.5)],
        &[(-0.2, 0.3), (0.4, 0.3), (0.9, 0.4)],
        &[(0.7, 1.0)],
        &[(-1.0, 0.1), (0.0, 0.2), (0.5, 0.7)],
    ];
    for loss in [Loss::absolute(1.0), Loss::squared(1.0)] {
        for s in supports {
            let m = loss.argmin_over_distribution(s).unwrap();
            let (lo, hi) = loss.expected_subdifferential(m, s);
            assert!(lo <= 1e-12 && hi >= -1e-12, "{loss:?} {s:?} at {m}: [{lo}, {hi}]");
        }
    }
}

#[test]
fn distribution_minimizer_beats_grid() {
    let s = [(-0.8, 0.2), (0.1, 0.45), (0.6, 0.35)];
    for loss in [Loss::absolute(1.0), Loss::squared(1.0)] {
        let m = loss.argmin_over_distribution(&s).unwrap();
        let risk = |z: f64| s.iter().map(|(y, p)| p * loss.value(z, *y)).sum::<f64>();
        for z in grid(1.0, 201) {
            assert!(risk(m) <= risk(z) + 1e-12);
        }
    }
}

#[test]
fn rejects_bad_distributions() {
    let abs = Loss::absolute(1.0);
    assert!(abs.argmin_over_distribution(&[]).is_err());
    assert!(abs.argmin_over_distribution(&[(0.0, 0.3), (1.0, 0.3)]).is_err());
    assert!(abs.argmin_over_distribution(&[(0.0, 1.5), (1.0, -0.5)]).is_err());
}

#[test]
fn hinge_and_squared_constants() {
    assert_eq!(Loss::hinge(2.0).lipschitz(), 2.0);
    assert_eq!(Loss::squared(2.0).lipschitz(), 8.0);
    assert_eq!(Loss::squared(1.0).rho(), 2.0);
    assert_eq!(Loss::absolute(1.0).rho(), 0.0);
    assert_eq!(Loss::hinge(1.0).value(0.5, -1.0), 0.5);
    assert_eq!(Loss::hinge(1.0).value(0.5, 1.0), 0.0);
}
