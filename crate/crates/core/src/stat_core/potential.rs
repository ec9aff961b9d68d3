use rand::RngCore;

use super::statistic::{Instance, Statistic};
use crate::error::{Error, Result};

/// A Burkholder function U over a statistic space, together with its
/// statistic map T(x, ŷ, δ) and the bound function V it dominates.
///
/// Time-varying families read the round index from `t`: `eval(t, ζ)` is
/// U_t(ζ). Time-invariant families ignore it. Round t moves the learner from
/// U_{t-1}(ζ_{t-1}) to U_t(ζ_t).
pub trait Potential: Send + Sync {
    fn name(&self) -> String;

    /// Potentials with equal signatures accumulate identical statistics.
    fn signature(&self) -> String;

    fn zero(&self) -> Statistic;

    fn eval(&self, t: usize, zeta: &Statistic) -> Result<f64>;

    /// V(ζ), the regret upper bound the potential dominates at the horizon.
    fn bound(&self, zeta: &Statistic) -> Result<f64>;

    fn stat_map(&self, x: &Instance, y_hat: f64, delta: f64) -> Result<Statistic>;

    /// Range [-L, L] of the loss subgradients δ.
    fn lipschitz(&self) -> f64;

    /// Whether α ↦ U(τ + T(z, α)) is convex.
    fn convex_in_delta(&self) -> bool;

    /// Whether U(τ + T(x, ŷ, δ)) = ŷδ + U(τ + T(x, 0, δ)).
    fn linear_in_prediction(&self) -> bool {
        true
    }

    /// Horizon n for time-varying families.
    fn horizon(&self) -> Option<usize> {
        None
    }

    /// An instance x⁰ with T(x⁰, ŷ, 0) = 0.
    fn anchor(&self) -> Instance;

    /// A random instance within the family's instance radius.
    fn sample_instance(&self, rng: &mut dyn RngCore) -> Instance;

    /// Analytic Lipschitz constant of ŷ ↦ U(ζ + T(x, ŷ, δ)) for fixed δ.
    fn prediction_lipschitz(&self) -> Option<f64> {
        if self.linear_in_prediction() {
            Some(self.lipschitz())
        } else {
            None
        }
    }

    /// Analytic C with (U(τ + T(z, α)) - U(τ))² ≤ C for |ŷ| ≤ b, |α| ≤ L and
    /// instances drawn by `sample_instance`.
    fn increment_bound(&self, _b: f64) -> Option<f64> {
        None
    }

    /// U_t(ζ + T(x, ŷ, δ)) for each δ. The default evaluates each distinct δ once.
    fn eval_increments(
        &self,
        t: usize,
        zeta: &Statistic,
        x: &Instance,
        y_hat: f64,
        deltas: &[f64],
    ) -> Result<Vec<f64>> {
        let mut seen: Vec<(u64, f64)> = Vec::new();
        let mut out = Vec::with_capacity(deltas.len());
        for &d in deltas {
            let key = d.to_bits();
            let v = match seen.iter().find(|(k, _)| *k == key) {
                Some((_, v)) => *v,
                None => {
                    let v = self.eval(t, &zeta.add(&self.stat_map(x, y_hat, d)?)?)?;
                    seen.push((key, v));
                    v
                }
            };
            out.push(v);
        }
        Ok(out)
    }

    /// F(ζ, x, δ) = U_t(ζ + T(x, 0, δ)); for potentials linear in the
    /// prediction, U_t(ζ + T(x, ŷ, δ)) = ŷδ + F(ζ, x, δ).
    fn residual(&self, t: usize, zeta: &Statistic, x: &Instance, delta: f64) -> Result<f64> {
        self.eval(t, &zeta.add(&self.stat_map(x, 0.0, delta)?)?)
    }
}

/// ζ + T(x, ŷ, δ), rejecting δ outside [-L, L].
pub fn accumulate(
    zeta: &Statistic,
    x: &Instance,
    y_hat: f64,
    delta: f64,
    p: &dyn Potential,
) -> Result<Statistic> {
    let l = p.lipschitz();
    if !(delta.abs() <= l * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!("|delta| = {} exceeds L = {l}", delta.abs())));
    }
    zeta.add(&p.stat_map(x, y_hat, delta)?)
}

/// A statistic reachable by `steps` random increments T(x, ŷ, δ) with x from
/// the family's sampler, ŷ uniform on [-b, b] and δ on [-L, L] (a quarter of
/// the draws sit on ±L).
pub fn random_statistic(
    p: &dyn Potential,
    steps: usize,
    b: f64,
    rng: &mut dyn RngCore,
) -> Result<Statistic> {
    use rand::Rng;
    let l = p.lipschitz();
    let mut zeta = p.zero();
    for _ in 0..steps {
        let x = p.sample_instance(rng);
        let y_hat = rng.random_range(-b..=b);
        let delta = if rng.random_bool(0.25) {
            if rng.random_bool(0.5) {
                l
            } else {
                -l
            }
        } else {
            rng.random_range(-l..=l)
        };
        zeta.add_assign(&p.stat_map(&x, y_hat, delta)?)?;
    }
    Ok(zeta)
}
