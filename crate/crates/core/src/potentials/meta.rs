//! Aggregation of Burkholder functions: pointwise minimum, convex
//! combinations, and the soft-max meta potential over members with
//! different statistics.

use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::error::{domain, structural, Error, Result};
use crate::stat_core::{random_statistic, Instance, Potential, Statistic};
use crate::symlin::log_sum_exp;

#[derive(Clone)]
pub struct MetaMember {
    pub potential: Arc<dyn Potential>,
    /// Bound on the squared one-step increment of the member's potential.
    pub c: f64,
    /// False when `c` was estimated by sampling.
    pub analytic: bool,
}

#[derive(Clone)]
pub struct MetaConfig {
    pub members: Vec<MetaMember>,
    pub eta: f64,
}

impl MetaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.members.is_empty() {
            return domain("meta potential needs at least one member");
        }
        if !(self.eta > 0.0) {
            return domain(format!("meta eta must be positive, got {}", self.eta));
        }
        if let Some(m) = self.members.iter().find(|m| !(m.c >= 0.0)) {
            return domain(format!("increment bound of {} is negative", m.potential.name()));
        }
        let l = self.members[0].potential.lipschitz();
        if self.members.iter().any(|m| m.potential.lipschitz() != l) {
            return domain("meta members must share the Lipschitz constant L");
        }
        Ok(())
    }
}

/// Sampled sup of (U(τ + T(z, α)) - U(τ))² over `trials` draws, inflated 2×.
pub fn estimate_increment_bound(
    p: &dyn Potential,
    b: f64,
    trials: usize,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    let l = p.lipschitz();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let steps = rng.random_range(0..20);
        let t = p.horizon().map_or(steps + 1, |n| (steps + 1).min(n));
        let tau = random_statistic(p, t - 1, b, rng)?;
        let x = p.sample_instance(rng);
        let y_hat = rng.random_range(-b..=b);
        let alpha = rng.random_range(-l..=l);
        let before = p.eval(t, &tau)?;
        let after = p.eval(t, &tau.add(&p.stat_map(&x, y_hat, alpha)?)?)?;
        worst = worst.max((after - before).powi(2));
    }
    Ok(2.0 * worst)
}

impl MetaConfig {
    /// Uses each member's analytic increment bound, falling back to sampling.
    pub fn build(
        members: Vec<Arc<dyn Potential>>,
        eta: f64,
        b: f64,
        rng: &mut dyn RngCore,
    ) -> Result<MetaConfig> {
        let mut out = Vec::with_capacity(members.len());
        for p in members {
            let (c, analytic) = match p.increment_bound(b) {
                Some(c) => (c, true),
                None => (estimate_increment_bound(p.as_ref(), b, 10_000, rng)?, false),
            };
            out.push(MetaMember { potential: p, c, analytic });
        }
        let cfg = MetaConfig { members: out, eta };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// (1/η)·log Σ_a exp(η·u_a - η²·γ_a) - log|A|/η
#[allow(non_snake_case)]
pub fn meta_U(values: &[f64], gamma: &[f64], eta: f64) -> f64 {
    let terms: Vec<f64> = values.iter().zip(gamma).map(|(u, g)| eta * u - eta * eta * g).collect();
    (log_sum_exp(&terms) - (values.len() as f64).ln()) / eta
}

#[derive(Clone)]
pub struct MetaPotential {
    pub cfg: MetaConfig,
}

impl MetaPotential {
    pub fn new(cfg: MetaConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(MetaPotential { cfg })
    }

    /// Member statistics followed by the accumulated γ.
    pub fn parts<'a>(&self, zeta: &'a Statistic) -> Result<(&'a [Statistic], &'a [f64])> {
        let k = self.cfg.members.len();
        match zeta {
            Statistic::Product(parts) if parts.len() == k + 1 => match &parts[k] {
                Statistic::ScalarVec { x: gamma, .. } if gamma.len() == k => Ok((&parts[..k], gamma)),
                _ => structural("meta statistic lacks the γ block"),
            },
            other => Err(Error::Structural(format!("meta expects a {}-part Product, got {}", k + 1, other.tag()))),
        }
    }

    pub fn constants(&self) -> Vec<f64> {
        self.cfg.members.iter().map(|m| m.c).collect()
    }

    /// Bound on member a's regret bound inflation after n rounds:
    /// η·n·C[a] + log|A|/η.
    pub fn overhead(&self, a: usize, n: usize) -> f64 {
        self.cfg.eta * n as f64 * self.cfg.members[a].c
            + (self.cfg.members.len() as f64).ln() / self.cfg.eta
    }
}

impl Potential for MetaPotential {
    fn name(&self) -> String {
        let names: Vec<String> = self.cfg.members.iter().map(|m| m.potential.name()).collect();
        format!("meta[{}]", names.join(","))
    }

    fn signature(&self) -> String {
        let s: Vec<String> = self.cfg.members.iter().map(|m| m.potential.signature()).collect();
        format!("meta[{}]", s.join(","))
    }

    fn zero(&self) -> Statistic {
        let mut parts: Vec<Statistic> = self.cfg.members.iter().map(|m| m.potential.zero()).collect();
        parts.push(Statistic::ScalarVec { b: 0.0, x: vec![0.0; self.cfg.members.len()] });
        Statistic::Product(parts)
    }

    fn eval(&self, t: usize, zeta: &Statistic) -> Result<f64> {
        let (parts, gamma) = self.parts(zeta)?;
        let mut vals = Vec::with_capacity(parts.len());
        for (m, tau) in self.cfg.members.iter().zip(parts) {
            vals.push(m.potential.eval(t, tau)?);
        }
        Ok(meta_U(&vals, gamma, self.cfg.eta))
    }

    /// max_a {V_a(τ_a) - η·γ_a} - log|A|/η
    fn bound(&self, zeta: &Statistic) -> Result<f64> {
        let (parts, gamma) = self.parts(zeta)?;
        let mut best = f64::NEG_INFINITY;
        for ((m, tau), g) in self.cfg.members.iter().zip(parts).zip(gamma) {
            best = best.max(m.potential.bound(tau)? - self.cfg.eta * g);
        }
        Ok(best - (self.cfg.members.len() as f64).ln() / self.cfg.eta)
    }

    /// Each member's increment plus C on the γ block. The γ block grows
    /// every round, so T(x⁰, ŷ, 0) is zero only on the member blocks.
    fn stat_map(&self, x: &Instance, y_hat: f64, delta: f64) -> Result<Statistic> {
        let mut parts = Vec::with_capacity(self.cfg.members.len() + 1);
        for m in &self.cfg.members {
            parts.push(m.potential.stat_map(x, y_hat, delta)?);
        }
        parts.push(Statistic::ScalarVec { b: 0.0, x: self.constants() });
        Ok(Statistic::Product(parts))
    }

    fn lipschitz(&self) -> f64 {
        self.cfg.members[0].potential.lipschitz()
    }

    fn convex_in_delta(&self) -> bool {
        self.cfg.members.iter().all(|m| m.potential.convex_in_delta())
    }

    fn linear_in_prediction(&self) -> bool {
        self.cfg.members.iter().all(|m| m.potential.linear_in_prediction())
    }

    fn horizon(&self) -> Option<usize> {
        self.cfg.members.iter().filter_map(|m| m.potential.horizon()).min()
    }

    fn anchor(&self) -> Instance {
        self.cfg.members[0].potential.anchor()
    }

    fn sample_instance(&self, rng: &mut dyn RngCore) -> Instance {
        self.cfg.members[0].potential.sample_instance(rng)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CombineMode {
    Min,
    Convex(Vec<f64>),
}

/// Pointwise minimum or convex combination of potentials sharing one
/// statistic map.
#[derive(Clone)]
pub struct Combined {
    pub members: Vec<Arc<dyn Potential>>,
    pub mode: CombineMode,
}

fn check_shared(members: &[Arc<dyn Potential>]) -> Result<()> {
    let Some(first) = members.first() else {
        return domain("combination needs at least one member");
    };
    let sig = first.signature();
    if let Some(m) = members.iter().find(|m| m.signature() != sig) {
        return structural(format!(
            "members do not share a statistic map: {} vs {}",
            sig,
            m.signature()
        ));
    }
    if members.iter().any(|m| m.lipschitz() != first.lipschitz() || m.horizon() != first.horizon()) {
        return structural("members differ in L or horizon");
    }
    Ok(())
}

pub fn combine_min(members: Vec<Arc<dyn Potential>>) -> Result<Combined> {
    check_shared(&members)?;
    Ok(Combined { members, mode: CombineMode::Min })
}

pub fn combine_convex(members: Vec<Arc<dyn Potential>>, weights: Vec<f64>) -> Result<Combined> {
    check_shared(&members)?;
    if weights.len() != members.len() {
        return structural(format!("{} weights for {} members", weights.len(), members.len()));
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|w| *w < 0.0) || (total - 1.0).abs() > 1e-12 {
        return domain(format!("weights must be nonnegative and sum to 1, got sum {total}"));
    }
    Ok(Combined { members, mode: CombineMode::Convex(weights) })
}

impl Combined {
    fn fold(&self, vals: impl Iterator<Item = Result<f64>>) -> Result<f64> {
        match &self.mode {
            CombineMode::Min => {
                let mut best = f64::INFINITY;
                for v in vals {
                    best = best.min(v?);
                }
                Ok(best)
            }
            CombineMode::Convex(w) => {
                let mut acc = 0.0;
                for (v, w) in vals.zip(w) {
                    if *w != 0.0 {
                        acc += w * v?;
                    }
                }
                Ok(acc)
            }
        }
    }
}

impl Potential for Combined {
    fn name(&self) -> String {
        let names: Vec<String> = self.members.iter().map(|m| m.name()).collect();
        match self.mode {
            CombineMode::Min => format!("min[{}]", names.join(",")),
            CombineMode::Convex(_) => format!("convex[{}]", names.join(",")),
        }
    }

    fn signature(&self) -> String {
        self.members[0].signature()
    }

    fn zero(&self) -> Statistic {
        self.members[0].zero()
    }

    fn eval(&self, t: usize, zeta: &Statistic) -> Result<f64> {
        self.fold(self.members.iter().map(|m| m.eval(t, zeta)))
    }

    fn bound(&self, zeta: &Statistic) -> Result<f64> {
        self.fold(self.members.iter().map(|m| m.bound(zeta)))
    }

    fn stat_map(&self, x: &Instance, y_hat: f64, delta: f64) -> Result<Statistic> {
        self.members[0].stat_map(x, y_hat, delta)
    }

    fn lipschitz(&self) -> f64 {
        self.members[0].lipschitz()
    }

    /// A minimum of convex functions need not be convex.
    fn convex_in_delta(&self) -> bool {
        match self.mode {
            CombineMode::Min => self.members.len() == 1 && self.members[0].convex_in_delta(),
            CombineMode::Convex(_) => self.members.iter().all(|m| m.convex_in_delta()),
        }
    }

    fn linear_in_prediction(&self) -> bool {
        self.members.iter().all(|m| m.linear_in_prediction())
    }

    fn horizon(&self) -> Option<usize> {
        self.members[0].horizon()
    }

    fn anchor(&self) -> Instance {
        self.members[0].anchor()
    }

    fn sample_instance(&self, rng: &mut dyn RngCore) -> Instance {
        self.members[0].sample_instance(rng)
    }
}
