use rand::RngCore;

use super::potential::{accumulate, Potential};
use super::statistic::{Instance, Statistic};
use super::strategy::{
    predict_convex, predict_linearized, predict_randomized, uniform_grid, ConvexOptions,
    RandomizedOptions,
};
use crate::error::{domain, Error, Result};
use crate::losses::Loss;

#[derive(Clone, Debug, PartialEq)]
pub enum Strategy {
    Linearized,
    Convex(ConvexOptions),
    Randomized(RandomizedOptions),
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Linearized => "linearized",
            Strategy::Convex(_) => "convex",
            Strategy::Randomized(_) => "randomized",
        }
    }

    pub fn is_deterministic(&self) -> bool {
        !matches!(self, Strategy::Randomized(_))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Round {
    /// 1-based.
    pub t: usize,
    pub x: Instance,
    pub y_hat: f64,
    pub y: f64,
    pub delta: f64,
    pub loss: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub rounds: Vec<Round>,
    /// ζ_0 = 0, ζ_1, ..., ζ_n.
    pub zeta: Vec<Statistic>,
    /// U_t(ζ_t) for t = 0..=n.
    pub potential_values: Vec<f64>,
    /// Per-round Lipschitz constants reported by the randomized rule.
    pub k_t: Vec<f64>,
    /// Per-round value sup_y Σ μ U(..) of the randomized rule.
    pub randomized_values: Vec<f64>,
}

impl Trajectory {
    pub fn final_zeta(&self) -> &Statistic {
        self.zeta.last().expect("trajectory always holds ζ_0")
    }

    pub fn cumulative_loss(&self) -> f64 {
        self.rounds.iter().map(|r| r.loss).sum()
    }
}

pub fn run_online(
    p: &dyn Potential,
    strategy: &Strategy,
    sequence: &[(Instance, f64)],
    loss: &Loss,
    b: f64,
    rng: &mut dyn RngCore,
) -> Result<Trajectory> {
    if loss.lipschitz() > p.lipschitz() * (1.0 + 1e-12) {
        return domain(format!(
            "loss Lipschitz constant {} exceeds the potential's L = {}",
            loss.lipschitz(),
            p.lipschitz()
        ));
    }
    if let Some(n) = p.horizon() {
        if sequence.len() > n {
            return domain(format!("sequence of length {} exceeds horizon {n}", sequence.len()));
        }
    }
    let mut zeta = p.zero();
    let mut traj = Trajectory {
        rounds: Vec::with_capacity(sequence.len()),
        zeta: vec![zeta.clone()],
        potential_values: vec![p.eval(0, &zeta)?],
        k_t: Vec::new(),
        randomized_values: Vec::new(),
    };
    for (i, (x, y)) in sequence.iter().enumerate() {
        let t = i + 1;
        if !(y.abs() <= b) {
            return domain(format!("outcome {y} at round {t} lies outside [-{b}, {b}]"));
        }
        let y_hat = match strategy {
            Strategy::Linearized => predict_linearized(p, t, &zeta, x, b)?,
            Strategy::Convex(opts) => predict_convex(p, t, &zeta, x, loss, b, opts)?,
            Strategy::Randomized(opts) => {
                let r = predict_randomized(p, t, &zeta, x, loss, b, opts, rng)?;
                traj.k_t.push(r.k);
                traj.randomized_values.push(r.value);
                r.sample
            }
        };
        let delta = loss.subgradient(y_hat, *y);
        zeta = accumulate(&zeta, x, y_hat, delta, p)?;
        traj.potential_values.push(p.eval(t, &zeta)?);
        traj.zeta.push(zeta.clone());
        traj.rounds.push(Round { t, x: x.clone(), y_hat, y: *y, delta, loss: loss.value(y_hat, *y) });
    }
    Ok(traj)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DescentReport {
    /// max_t U_t(ζ_t) - U_{t-1}(ζ_{t-1})
    pub realized: f64,
    /// max_t max_y U_t(ζ_{t-1} + T(x_t, ŷ_t, ∂ℓ(ŷ_t, y))) - U_{t-1}(ζ_{t-1})
    pub worst_outcome: f64,
    /// Round attaining `worst_outcome` (0 when the trajectory is empty).
    pub worst_round: usize,
}

/// Replays a trajectory and measures how far any round climbs the potential,
/// both for the realized outcome and for every outcome on a uniform grid.
pub fn descent_check(
    p: &dyn Potential,
    traj: &Trajectory,
    loss: &Loss,
    b: f64,
    grid: usize,
) -> Result<DescentReport> {
    let ys = uniform_grid(b, grid);
    let mut rep = DescentReport {
        realized: f64::NEG_INFINITY,
        worst_outcome: f64::NEG_INFINITY,
        worst_round: 0,
    };
    for r in &traj.rounds {
        let t = r.t;
        let base = traj.potential_values[t - 1];
        rep.realized = rep.realized.max(traj.potential_values[t] - base);
        let deltas: Vec<f64> = ys.iter().map(|&y| loss.subgradient(r.y_hat, y)).collect();
        let vals = p.eval_increments(t, &traj.zeta[t - 1], &r.x, r.y_hat, &deltas)?;
        let worst = vals.into_iter().fold(f64::NEG_INFINITY, f64::max) - base;
        if !worst.is_finite() {
            return Err(Error::Numeric(format!("non-finite potential in round {t}")));
        }
        if worst > rep.worst_outcome {
            rep.worst_outcome = worst;
            rep.worst_round = t;
        }
    }
    if traj.rounds.is_empty() {
        rep.realized = 0.0;
        rep.worst_outcome = 0.0;
    }
    Ok(rep)
}
