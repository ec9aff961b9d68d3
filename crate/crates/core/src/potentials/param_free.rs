//! Time-varying exponential potential for comparator-adaptive (parameter
//! free) linear prediction under a smooth norm.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{domain, Error, Result};
use crate::stat_core::{Instance, Potential, Statistic};

const EXP_GUARD: f64 = 700.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Norm {
    L2,
    /// ℓ_p with p ≥ 2.
    Lp(f64),
}

impl Norm {
    pub fn p(&self) -> f64 {
        match self {
            Norm::L2 => 2.0,
            Norm::Lp(p) => *p,
        }
    }

    /// Smoothness of ½‖·‖²: p - 1.
    pub fn beta(&self) -> f64 {
        self.p() - 1.0
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        match self {
            Norm::L2 => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Norm::Lp(p) => x.iter().map(|v| v.abs().powf(*p)).sum::<f64>().powf(1.0 / p),
        }
    }

    /// Norm of the dual space ℓ_q, 1/p + 1/q = 1.
    pub fn dual_norm(&self, w: &[f64]) -> f64 {
        let p = self.p();
        let q = p / (p - 1.0);
        w.iter().map(|v| v.abs().powf(q)).sum::<f64>().powf(1.0 / q)
    }

    /// The w with dual norm 1 maximizing ⟨w, u⟩ (so ⟨w, u⟩ = ‖u‖).
    pub fn dual_direction(&self, u: &[f64]) -> Vec<f64> {
        let p = self.p();
        let nu = self.norm(u);
        if nu == 0.0 {
            return vec![0.0; u.len()];
        }
        u.iter().map(|v| v.signum() * (v.abs() / nu).powf(p - 1.0)).collect()
    }
}

pub fn harmonic(n: usize) -> f64 {
    (1..=n).map(|s| 1.0 / s as f64).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamFreeConfig {
    pub n: usize,
    pub dim: usize,
    pub beta: f64,
    pub gamma: f64,
    pub c: f64,
    pub b: f64,
    pub norm: Norm,
}

impl ParamFreeConfig {
    /// γ = c·exp(-½H_n), which makes U_0(0) = 0 exactly.
    pub fn new(n: usize, dim: usize, c: f64, b: f64, norm: Norm) -> Result<Self> {
        ParamFreeConfig::with_gamma(n, dim, c * (-0.5 * harmonic(n)).exp(), c, b, norm)
    }

    pub fn with_gamma(n: usize, dim: usize, gamma: f64, c: f64, b: f64, norm: Norm) -> Result<Self> {
        let cfg = ParamFreeConfig::unchecked(n, dim, gamma, c, b, norm);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Skips the invariant check; for negative controls.
    pub fn unchecked(n: usize, dim: usize, gamma: f64, c: f64, b: f64, norm: Norm) -> Self {
        ParamFreeConfig { n, dim, beta: norm.beta(), gamma, c, b, norm }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.dim == 0 {
            return domain("param-free horizon and dimension must be positive");
        }
        if self.norm.p() < 2.0 {
            return domain(format!("only ℓ_p norms with p ≥ 2 are smooth, got p = {}", self.norm.p()));
        }
        if !(self.gamma > 0.0 && self.c > 0.0 && self.b > 0.0) {
            return domain("param-free gamma, c and B must be positive");
        }
        let f0 = self.gamma * (0.5 * harmonic(self.n)).exp();
        if f0 > self.c * (1.0 + 1e-12) {
            return domain(format!(
                "invariant γ·exp(½H_n) ≤ c violated: {f0} > {}",
                self.c
            ));
        }
        Ok(())
    }

    /// ½ Σ_{s=t+1}^n 1/s
    pub fn tail(&self, t: usize) -> f64 {
        0.5 * ((t + 1)..=self.n).map(|s| 1.0 / s as f64).sum::<f64>()
    }
}

/// ‖x‖²/(2βt) + ½Σ_{s>t} 1/s, or ½H_n at t = 0.
pub fn pf_exponent(cfg: &ParamFreeConfig, t: usize, x: &[f64]) -> f64 {
    if t == 0 {
        return 0.5 * harmonic(cfg.n);
    }
    let nx = cfg.norm.norm(x);
    nx * nx / (2.0 * cfg.beta * t as f64) + cfg.tail(t)
}

fn guarded_exp(e: f64) -> Result<f64> {
    if e > EXP_GUARD {
        return Err(Error::Numeric(format!("exponent {e:.3} exceeds {EXP_GUARD}")));
    }
    Ok(e.exp())
}

/// U_t(b, x) = b + γ·exp(‖x‖²/(2βt) + ½Σ_{s=t+1}^n 1/s) - c, with the
/// constant γ·exp(½H_n) at t = 0.
#[allow(non_snake_case)]
pub fn pf_U(cfg: &ParamFreeConfig, t: usize, b: f64, x: &[f64]) -> Result<f64> {
    if t > cfg.n {
        return domain(format!("round {t} beyond horizon {}", cfg.n));
    }
    Ok(b + cfg.gamma * guarded_exp(pf_exponent(cfg, t, x))? - cfg.c)
}

/// V(b, x) = b + γ·exp(‖x‖²/(2βn)) - c
#[allow(non_snake_case)]
pub fn pf_V(cfg: &ParamFreeConfig, b: f64, x: &[f64]) -> Result<f64> {
    let nx = cfg.norm.norm(x);
    Ok(b + cfg.gamma * guarded_exp(nx * nx / (2.0 * cfg.beta * cfg.n as f64))? - cfg.c)
}

/// Round-t prediction from the running sum Σ δ_s x_s.
pub fn pf_predict(cfg: &ParamFreeConfig, xsum: &[f64], t: usize, x_t: &[f64]) -> Result<f64> {
    if t == 0 || t > cfg.n {
        return domain(format!("round {t} outside 1..={}", cfg.n));
    }
    let shifted = |s: f64| -> Vec<f64> { xsum.iter().zip(x_t).map(|(a, b)| a + s * b).collect() };
    let ep = guarded_exp(pf_exponent(cfg, t, &shifted(1.0)))?;
    let em = guarded_exp(pf_exponent(cfg, t, &shifted(-1.0)))?;
    Ok((-0.5 * cfg.gamma * (ep - em)).clamp(-cfg.b, cfg.b))
}

/// ‖w‖_*·√(2βn·log(√(βn)‖w‖_*/γ + 1)) + c
pub fn pf_regret_bound(cfg: &ParamFreeConfig, w_dual_norm: f64) -> f64 {
    let bn = cfg.beta * cfg.n as f64;
    w_dual_norm * (2.0 * bn * (bn.sqrt() * w_dual_norm / cfg.gamma + 1.0).ln()).sqrt() + cfg.c
}

#[derive(Clone, Debug)]
pub struct ParamFree {
    pub cfg: ParamFreeConfig,
}

impl ParamFree {
    pub fn new(cfg: ParamFreeConfig) -> Self {
        ParamFree { cfg }
    }

    fn parts(zeta: &Statistic) -> Result<(f64, &[f64])> {
        match zeta {
            Statistic::ScalarVec { b, x } => Ok((*b, x)),
            other => Err(Error::Structural(format!("param-free expects ScalarVec, got {}", other.tag()))),
        }
    }
}

impl Potential for ParamFree {
    fn name(&self) -> String {
        match self.cfg.norm {
            Norm::L2 => "param_free_l2".into(),
            Norm::Lp(p) => format!("param_free_l{p}"),
        }
    }

    fn signature(&self) -> String {
        format!("scalar_vec:{}", self.cfg.dim)
    }

    fn zero(&self) -> Statistic {
        Statistic::ScalarVec { b: 0.0, x: vec![0.0; self.cfg.dim] }
    }

    fn eval(&self, t: usize, zeta: &Statistic) -> Result<f64> {
        let (b, x) = Self::parts(zeta)?;
        pf_U(&self.cfg, t, b, x)
    }

    fn bound(&self, zeta: &Statistic) -> Result<f64> {
        let (b, x) = Self::parts(zeta)?;
        pf_V(&self.cfg, b, x)
    }

    fn stat_map(&self, x: &Instance, y_hat: f64, delta: f64) -> Result<Statistic> {
        let x = x.as_vector()?;
        if x.len() != self.cfg.dim {
            return Err(Error::Structural(format!("instance dimension {} vs {}", x.len(), self.cfg.dim)));
        }
        Ok(Statistic::ScalarVec { b: delta * y_hat, x: x.iter().map(|v| delta * v).collect() })
    }

    fn lipschitz(&self) -> f64 {
        1.0
    }

    fn convex_in_delta(&self) -> bool {
        true
    }

    fn horizon(&self) -> Option<usize> {
        Some(self.cfg.n)
    }

    fn anchor(&self) -> Instance {
        Instance::Vector(vec![0.0; self.cfg.dim])
    }

    /// Random direction scaled to norm ≤ 1 (exactly 1 half of the time).
    fn sample_instance(&self, rng: &mut dyn RngCore) -> Instance {
        let g: Vec<f64> = (0..self.cfg.dim).map(|_| rng.sample(StandardNormal)).collect();
        let ng = self.cfg.norm.norm(&g).max(f64::MIN_POSITIVE);
        let r = if rng.random_bool(0.5) { 1.0 } else { rng.random::<f64>() };
        Instance::Vector(g.iter().map(|v| r * v / ng).collect())
    }
}
