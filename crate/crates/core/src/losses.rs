//! Convex Lipschitz losses on the prediction interval [-B, B].

use crate::error::{domain, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    Absolute,
    Squared,
    /// max(0, -ŷ y)
    Hinge,
}

impl LossKind {
    pub fn parse(name: &str) -> Option<LossKind> {
        match name {
            "absolute" | "abs" => Some(LossKind::Absolute),
            "squared" | "square" => Some(LossKind::Squared),
            "hinge" => Some(LossKind::Hinge),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Absolute => "absolute",
            LossKind::Squared => "squared",
            LossKind::Hinge => "hinge",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Loss {
    pub kind: LossKind,
    /// Radius of the outcome/prediction interval.
    pub b: f64,
}

impl Loss {
    pub fn new(kind: LossKind, b: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return domain(format!("prediction radius must be positive, got {b}"));
        }
        Ok(Loss { kind, b })
    }

    pub fn absolute(b: f64) -> Self {
        Loss { kind: LossKind::Absolute, b }
    }

    pub fn squared(b: f64) -> Self {
        Loss { kind: LossKind::Squared, b }
    }

    pub fn hinge(b: f64) -> Self {
        Loss { kind: LossKind::Hinge, b }
    }

    /// Lipschitz constant in ŷ over [-B, B]².
    pub fn lipschitz(&self) -> f64 {
        match self.kind {
            LossKind::Absolute => 1.0,
            LossKind::Squared => 4.0 * self.b,
            LossKind::Hinge => self.b,
        }
    }

    /// Strong convexity modulus in ŷ.
    pub fn rho(&self) -> f64 {
        match self.kind {
            LossKind::Squared => 2.0,
            _ => 0.0,
        }
    }

    pub fn value(&self, y_hat: f64, y: f64) -> f64 {
        match self.kind {
            LossKind::Absolute => (y_hat - y).abs(),
            LossKind::Squared => (y_hat - y) * (y_hat - y),
            LossKind::Hinge => (-y_hat * y).max(0.0),
        }
    }

    /// A subderivative in ŷ. The absolute loss returns 0 at ŷ = y.
    pub fn subgradient(&self, y_hat: f64, y: f64) -> f64 {
        match self.kind {
            LossKind::Absolute => {
                if y_hat > y {
                    1.0
                } else if y_hat < y {
                    -1.0
                } else {
                    0.0
                }
            }
            LossKind::Squared => 2.0 * (y_hat - y),
            LossKind::Hinge => {
                if y_hat * y < 0.0 {
                    -y
                } else {
                    0.0
                }
            }
        }
    }

    /// Left and right derivatives of ŷ ↦ E ℓ(ŷ, y) under a finite distribution.
    pub fn expected_subdifferential(&self, y_hat: f64, support: &[(f64, f64)]) -> (f64, f64) {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for &(y, p) in support {
            let (l, h) = match self.kind {
                LossKind::Absolute if y_hat == y => (-1.0, 1.0),
                LossKind::Hinge if y_hat == 0.0 => {
                    if y > 0.0 {
                        (-y, 0.0)
                    } else {
                        (0.0, -y)
                    }
                }
                _ => {
                    let g = self.subgradient(y_hat, y);
                    (g, g)
                }
            };
            lo += p * l;
            hi += p * h;
        }
        (lo, hi)
    }

    /// A minimizer of ŷ ↦ E ℓ(ŷ, y): weighted median (midpoint of the
    /// minimizing interval on an exact half split), mean, or 0 for the hinge.
    pub fn argmin_over_distribution(&self, support: &[(f64, f64)]) -> Result<f64> {
        if support.is_empty() {
            return domain("distribution has empty support");
        }
        let total: f64 = support.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-12 || support.iter().any(|(_, p)| *p < 0.0) {
            return domain(format!("probabilities must be nonnegative and sum to 1, got {total}"));
        }
        Ok(match self.kind {
            LossKind::Squared => support.iter().map(|(y, p)| y * p).sum(),
            LossKind::Hinge => 0.0,
            LossKind::Absolute => {
                let mut pts: Vec<(f64, f64)> = support.to_vec();
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut cum = 0.0;
                let mut median = pts[pts.len() - 1].0;
                for (i, &(y, p)) in pts.iter().enumerate() {
                    cum += p;
                    if (cum - 0.5).abs() <= 1e-12 {
                        // Every point of [y, next] minimizes.
                        let next = pts.get(i + 1).map_or(y, |q| q.0);
                        median = 0.5 * (y + next);
                        break;
                    }
                    if cum > 0.5 {
                        median = y;
                        break;
                    }
                }
                median
            }
        })
    }
}
