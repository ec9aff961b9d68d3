//! Vovk-Azoury-Warmuth style potential for strongly convex losses. The
//! potential equals its own bound function.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{domain, Error, Result};
use crate::losses::Loss;
use crate::stat_core::{predict_convex, ConvexOptions, Instance, Potential, Statistic};
use crate::symlin::{Cholesky, SymMat};

#[derive(Clone, Debug, PartialEq)]
pub struct VawConfig {
    pub d: usize,
    pub rho: f64,
    pub lambda: f64,
    pub c: f64,
    pub l: f64,
}

impl VawConfig {
    pub fn new(d: usize, rho: f64, lambda: f64, c: f64, l: f64) -> Result<Self> {
        let cfg = VawConfig::unchecked(d, rho, lambda, c, l);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Squared loss on [-B, B]: ρ = 2, L = 4B, c = L²/ρ.
    pub fn squared_loss(d: usize, lambda: f64, b: f64) -> Result<Self> {
        let l = 4.0 * b;
        VawConfig::new(d, 2.0, lambda, l * l / 2.0, l)
    }

    pub fn unchecked(d: usize, rho: f64, lambda: f64, c: f64, l: f64) -> Self {
        VawConfig { d, rho, lambda, c, l }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.lambda > 0.0 && self.l > 0.0) {
            return domain("rho, lambda and L must be positive");
        }
        let need = self.l * self.l / self.rho;
        if !(self.c >= need * (1.0 - 1e-12)) {
            return domain(format!("invariant c ≥ L²/ρ violated: c = {}, L²/ρ = {need}", self.c));
        }
        Ok(())
    }

    fn gram(&self, a: &SymMat) -> Result<Cholesky> {
        let mut g = a.scaled(self.rho);
        g.add_diag(self.lambda);
        Cholesky::new(&g).map_err(|e| Error::Numeric(format!("ρA + λI: {e}")))
    }

    fn log_det_ratio(&self, chol: &Cholesky) -> f64 {
        chol.log_det() - (self.d + 1) as f64 * self.lambda.ln()
    }
}

/// ½xᵀ(ρA+λI)⁻¹x - c·[logdet(ρA+λI) - (d+1)·log λ]
#[allow(non_snake_case)]
pub fn vaw_U(cfg: &VawConfig, x: &[f64], a: &SymMat) -> Result<f64> {
    if x.len() != cfg.d + 1 || a.dim() != cfg.d + 1 {
        return Err(Error::Structural(format!(
            "expected dimension {}, got {} and {}",
            cfg.d + 1,
            x.len(),
            a.dim()
        )));
    }
    let chol = cfg.gram(a)?;
    Ok(0.5 * chol.inv_quad(x) - cfg.c * cfg.log_det_ratio(&chol))
}

/// λ/2·(‖w‖² + 1) + c·log det(ρΣzzᵀ + λI)/det(λI)
pub fn vaw_regret_bound(cfg: &VawConfig, w: &[f64], a: &SymMat) -> Result<f64> {
    let chol = cfg.gram(a)?;
    let nw: f64 = w.iter().map(|v| v * v).sum();
    Ok(0.5 * cfg.lambda * (nw + 1.0) + cfg.c * cfg.log_det_ratio(&chol))
}

#[derive(Clone, Debug)]
pub struct Vaw {
    pub cfg: VawConfig,
}

impl Vaw {
    pub fn new(cfg: VawConfig) -> Self {
        Vaw { cfg }
    }

    fn parts(zeta: &Statistic) -> Result<(&[f64], &SymMat)> {
        match zeta {
            Statistic::VecSym { x, a } => Ok((x, a)),
            other => Err(Error::Structural(format!("VAW expects VecSym, got {}", other.tag()))),
        }
    }

    /// z = (x, -ŷ)
    fn z(&self, x: &Instance, y_hat: f64) -> Result<Vec<f64>> {
        let x = x.as_vector()?;
        if x.len() != self.cfg.d {
            return Err(Error::Structural(format!("instance dimension {} vs {}", x.len(), self.cfg.d)));
        }
        let mut z = x.to_vec();
        z.push(-y_hat);
        Ok(z)
    }
}

impl Potential for Vaw {
    fn name(&self) -> String {
        "vaw".into()
    }

    fn signature(&self) -> String {
        format!("vaw:{}", self.cfg.d)
    }

    fn zero(&self) -> Statistic {
        Statistic::VecSym { x: vec![0.0; self.cfg.d + 1], a: SymMat::zeros(self.cfg.d + 1) }
    }

    fn eval(&self, _t: usize, zeta: &Statistic) -> Result<f64> {
        let (x, a) = Self::parts(zeta)?;
        vaw_U(&self.cfg, x, a)
    }

    fn bound(&self, zeta: &Statistic) -> Result<f64> {
        self.eval(0, zeta)
    }

    fn stat_map(&self, x: &Instance, y_hat: f64, delta: f64) -> Result<Statistic> {
        let z = self.z(x, y_hat)?;
        Ok(Statistic::VecSym { x: z.iter().map(|v| delta * v).collect(), a: SymMat::outer(&z) })
    }

    fn lipschitz(&self) -> f64 {
        self.cfg.l
    }

    fn convex_in_delta(&self) -> bool {
        true
    }

    fn linear_in_prediction(&self) -> bool {
        false
    }

    fn anchor(&self) -> Instance {
        Instance::Vector(vec![0.0; self.cfg.d])
    }

    fn sample_instance(&self, rng: &mut dyn RngCore) -> Instance {
        let g: Vec<f64> = (0..self.cfg.d).map(|_| rng.sample(StandardNormal)).collect();
        let ng = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let r: f64 = rng.random();
        Instance::Vector(g.iter().map(|v| r * v / ng).collect())
    }

    /// One factorization of ρ(A + zzᵀ) + λI per ŷ; each δ is then a quadratic.
    fn eval_increments(
        &self,
        _t: usize,
        zeta: &Statistic,
        x: &Instance,
        y_hat: f64,
        deltas: &[f64],
    ) -> Result<Vec<f64>> {
        let (xs, a) = Self::parts(zeta)?;
        let z = self.z(x, y_hat)?;
        let mut a2 = a.clone();
        a2.axpy(1.0, &SymMat::outer(&z))?;
        let chol = self.cfg.gram(&a2)?;
        let gx = chol.solve(xs);
        let gz = chol.solve(&z);
        let q0: f64 = xs.iter().zip(&gx).map(|(p, q)| p * q).sum();
        let q1: f64 = z.iter().zip(&gx).map(|(p, q)| p * q).sum();
        let q2: f64 = z.iter().zip(&gz).map(|(p, q)| p * q).sum();
        let base = -self.cfg.c * self.cfg.log_det_ratio(&chol);
        Ok(deltas.iter().map(|d| 0.5 * (q0 + 2.0 * d * q1 + d * d * q2) + base).collect())
    }
}

/// Grid minimax prediction (257 × 257 by default).
pub fn vaw_predict(
    cfg: &VawConfig,
    xsum: &[f64],
    asum: &SymMat,
    x_t: &[f64],
    loss: &Loss,
    b: f64,
    tol: f64,
) -> Result<f64> {
    let pot = Vaw::new(cfg.clone());
    let zeta = Statistic::VecSym { x: xsum.to_vec(), a: asum.clone() };
    predict_convex(&pot, 1, &zeta, &Instance::Vector(x_t.to_vec()), loss, b, &vaw_convex_options(tol))
}

pub fn vaw_convex_options(tol: f64) -> ConvexOptions {
    ConvexOptions { prediction_grid: 257, outcome_grid: 257, tol, max_iter: 200 }
}
