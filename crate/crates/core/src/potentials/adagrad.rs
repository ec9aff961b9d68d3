//! Square-function potentials behind AdaGrad-style bounds: 2L√(Σ‖x_t‖²)
//! against the unit ℓ₂ ball and 2L‖(Σx_t²)^{1/2}‖₁ against the unit ℓ∞ ball.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::stat_core::{predict_linearized, Instance, Potential, Statistic};
use crate::symlin::Mat;

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// -√(2y² - ‖x‖²) when y ≥ ‖x‖, ‖x‖ - 2y otherwise.
pub fn usq(x: &[f64], y: f64) -> f64 {
    usq_norm(norm2(x), y)
}

/// `usq` as a function of ‖x‖.
pub fn usq_norm(nx: f64, y: f64) -> f64 {
    if y >= nx {
        -(2.0 * y * y - nx * nx).max(0.0).sqrt()
    } else {
        nx - 2.0 * y
    }
}

/// Gradient of `usq` in x (C¹ across the seam y = ‖x‖).
pub fn usq_grad_x(x: &[f64], y: f64) -> Vec<f64> {
    let nx = norm2(x);
    let scale = if y >= nx {
        let r = (2.0 * y * y - nx * nx).sqrt();
        if r > 0.0 {
            1.0 / r
        } else {
            0.0
        }
    } else if nx > 0.0 {
        1.0 / nx
    } else {
        0.0
    };
    x.iter().map(|v| v * scale).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdaVariant {
    L2,
    Linf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InstanceShape {
    Vector(usize),
    /// Matrices are read through their row-major entries.
    Matrix(usize, usize),
}

impl InstanceShape {
    pub fn len(&self) -> usize {
        match self {
            InstanceShape::Vector(d) => *d,
            InstanceShape::Matrix(a, b) => a * b,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug)]
pub struct AdaGrad {
    pub variant: AdaVariant,
    pub shape: InstanceShape,
    pub l: f64,
    pub b: f64,
}

impl AdaGrad {
    pub fn new(variant: AdaVariant, shape: InstanceShape, l: f64, b: f64) -> Self {
        AdaGrad { variant, shape, l, b }
    }

    fn coords<'a>(&self, x: &'a Instance) -> Result<&'a [f64]> {
        let ok = match (x, self.shape) {
            (Instance::Vector(v), InstanceShape::Vector(d)) => v.len() == d,
            (Instance::Matrix(m), InstanceShape::Matrix(a, b)) => m.rows() == a && m.cols() == b,
            _ => false,
        };
        if !ok {
            return Err(Error::Structural(format!("instance does not match shape {:?}", self.shape)));
        }
        Ok(x.coords())
    }
}

/// Splits the statistic into (Σδŷ, Σδx, Σx²) where the last is a single
/// entry for ℓ₂ and per-coordinate for ℓ∞.
fn ada_parts(zeta: &Statistic) -> Result<(f64, &[f64], Vec<f64>)> {
    match zeta {
        Statistic::ScalarVecScalar { b, x, s } => Ok((*b, x, vec![*s])),
        Statistic::Product(parts) if parts.len() == 2 => match (&parts[0], &parts[1]) {
            (Statistic::ScalarVec { b, x }, Statistic::ScalarVec { x: s, .. }) => Ok((*b, x, s.clone())),
            _ => Err(Error::Structural("malformed ℓ∞ AdaGrad statistic".into())),
        },
        other => Err(Error::Structural(format!("AdaGrad expects ScalarVecScalar or Product, got {}", other.tag()))),
    }
}

impl Potential for AdaGrad {
    fn name(&self) -> String {
        match self.variant {
            AdaVariant::L2 => "adagrad_l2".into(),
            AdaVariant::Linf => "adagrad_linf".into(),
        }
    }

    fn signature(&self) -> String {
        format!("{}:{}", self.name(), self.shape.len())
    }

    fn zero(&self) -> Statistic {
        let d = self.shape.len();
        match self.variant {
            AdaVariant::L2 => Statistic::ScalarVecScalar { b: 0.0, x: vec![0.0; d], s: 0.0 },
            AdaVariant::Linf => Statistic::Product(vec![
                Statistic::ScalarVec { b: 0.0, x: vec![0.0; d] },
                Statistic::ScalarVec { b: 0.0, x: vec![0.0; d] },
            ]),
        }
    }

    fn eval(&self, _t: usize, zeta: &Statistic) -> Result<f64> {
        let (b, x, s) = ada_parts(zeta)?;
        Ok(match self.variant {
            AdaVariant::L2 => b + usq(x, self.l * s[0].max(0.0).sqrt()),
            AdaVariant::Linf => {
                b + x.iter().zip(&s).map(|(xi, si)| usq_norm(xi.abs(), self.l * si.max(0.0).sqrt())).sum::<f64>()
            }
        })
    }

    fn bound(&self, zeta: &Statistic) -> Result<f64> {
        let (b, x, s) = ada_parts(zeta)?;
        Ok(match self.variant {
            AdaVariant::L2 => b + norm2(x) - 2.0 * self.l * s[0].max(0.0).sqrt(),
            AdaVariant::Linf => {
                b + x.iter().zip(&s).map(|(xi, si)| xi.abs() - 2.0 * self.l * si.max(0.0).sqrt()).sum::<f64>()
            }
        })
    }

    fn stat_map(&self, x: &Instance, y_hat: f64, delta: f64) -> Result<Statistic> {
        let x = self.coords(x)?;
        let dx: Vec<f64> = x.iter().map(|v| delta * v).collect();
        Ok(match self.variant {
            AdaVariant::L2 => Statistic::ScalarVecScalar { b: delta * y_hat, x: dx, s: x.iter().map(|v| v * v).sum() },
            AdaVariant::Linf => Statistic::Product(vec![
                Statistic::ScalarVec { b: delta * y_hat, x: dx },
                Statistic::ScalarVec { b: 0.0, x: x.iter().map(|v| v * v).collect() },
            ]),
        })
    }

    fn lipschitz(&self) -> f64 {
        self.l
    }

    fn convex_in_delta(&self) -> bool {
        true
    }

    fn anchor(&self) -> Instance {
        match self.shape {
            InstanceShape::Vector(d) => Instance::Vector(vec![0.0; d]),
            InstanceShape::Matrix(a, b) => Instance::Matrix(Mat::zeros(a, b)),
        }
    }

    /// Gaussian direction with Euclidean norm ≤ 1.
    fn sample_instance(&self, rng: &mut dyn RngCore) -> Instance {
        let d = self.shape.len();
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let ng = norm2(&g).max(f64::MIN_POSITIVE);
        let r = if rng.random_bool(0.5) { 1.0 } else { rng.random::<f64>() };
        let v: Vec<f64> = g.iter().map(|x| r * x / ng).collect();
        match self.shape {
            InstanceShape::Vector(_) => Instance::Vector(v),
            InstanceShape::Matrix(a, b) => Instance::Matrix(Mat::from_vec(a, b, v).expect("finite")),
        }
    }

    /// ℓ₂: (BL + 3LR)²; ℓ∞: (BL + 3L√d·R)², with R = 1. The 3 collects
    /// |∂ₓusq| ≤ 1 and |∂ᵧusq| ≤ 2.
    fn increment_bound(&self, b: f64) -> Option<f64> {
        let r = match self.variant {
            AdaVariant::L2 => 1.0,
            AdaVariant::Linf => (self.shape.len() as f64).sqrt(),
        };
        let v = b * self.l + 3.0 * self.l * r;
        Some(v * v)
    }
}

/// Closed-form prediction from (Σδŷ, Σδx, s) for the given variant.
pub fn ada_predict(zeta: &Statistic, x_t: &[f64], variant: AdaVariant, l: f64, b: f64) -> Result<f64> {
    let pot = AdaGrad::new(variant, InstanceShape::Vector(x_t.len()), l, b);
    predict_linearized(&pot, 1, zeta, &Instance::Vector(x_t.to_vec()), b)
}

/// 2L√(Σ‖x_t‖²) or 2L‖(Σx_t²)^{1/2}‖₁ from the statistic.
pub fn ada_regret_bound(zeta: &Statistic, l: f64) -> Result<f64> {
    let (_, _, s) = ada_parts(zeta)?;
    Ok(2.0 * l * s.iter().map(|v| v.max(0.0).sqrt()).sum::<f64>())
}
